//! Noise generation and measurement.
//!
//! Concentrated noise is a set of pairwise disjoint `m_n × m_n` blocks; every
//! target vote inside a block flips with probability `r`. Dispersed noise
//! flips every target vote independently at a uniform rate. The module also
//! measures arbitrary noise areas: orthomeasure (shortest axis-aligned chord
//! over connected parts) and greedy block packing.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CandidateId, Grid, GridDims};
use crate::seed::rng_from_seed;

/// Disjoint square noise blocks that flip `target` votes to `flip_to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockNoiseSpec {
    pub m_n: usize,
    /// Top-left cell of each block.
    pub anchors: Vec<(usize, usize)>,
    pub target: CandidateId,
    pub flip_to: CandidateId,
    /// Flip probability `r` for each eligible cell.
    pub r: f64,
}

impl BlockNoiseSpec {
    /// Anti-A blocks with certain flips.
    pub fn anti_a(m_n: usize, anchors: Vec<(usize, usize)>) -> Self {
        BlockNoiseSpec {
            m_n,
            anchors,
            target: CandidateId::A,
            flip_to: CandidateId::B,
            r: 1.0,
        }
    }

    pub fn with_flip_probability(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_candidates(mut self, target: CandidateId, flip_to: CandidateId) -> Self {
        self.target = target;
        self.flip_to = flip_to;
        self
    }

    pub fn block_count(&self) -> usize {
        self.anchors.len()
    }

    /// `S_c`: total area of the noise-concentrated blocks.
    pub fn concentrated_area(&self) -> usize {
        self.m_n * self.m_n * self.anchors.len()
    }

    /// Checks edge, probability, candidate ids, bounds and disjointness.
    pub fn validate(&self, dims: GridDims, candidates: usize) -> Result<()> {
        if self.m_n == 0 {
            return Err(Error::InvalidNoise("block edge m_n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::InvalidNoise(format!("flip probability {} outside [0, 1]", self.r)));
        }
        if self.target == self.flip_to {
            return Err(Error::InvalidNoise("target and flip_to must differ".into()));
        }
        if self.target.index() >= candidates || self.flip_to.index() >= candidates {
            return Err(Error::InvalidNoise("candidate id out of range".into()));
        }
        for &(x, y) in &self.anchors {
            if x + self.m_n > dims.width || y + self.m_n > dims.height {
                return Err(Error::BlockOutOfBounds {
                    x,
                    y,
                    edge: self.m_n,
                    width: dims.width,
                    height: dims.height,
                });
            }
        }
        for (i, a) in self.anchors.iter().enumerate() {
            for (j, b) in self.anchors.iter().enumerate().skip(i + 1) {
                if blocks_overlap(*a, *b, self.m_n) {
                    return Err(Error::BlockOverlap { first: i, second: j });
                }
            }
        }
        Ok(())
    }

    /// Cells covered by the blocks, in block order then row-major.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.m_n;
        self.anchors
            .iter()
            .flat_map(move |&(ax, ay)| (0..m).flat_map(move |j| (0..m).map(move |i| (ax + i, ay + j))))
    }

    pub fn area(&self) -> NoiseArea {
        NoiseArea::from_cells(self.cells())
    }
}

#[inline]
pub(crate) fn blocks_overlap(a: (usize, usize), b: (usize, usize), m_n: usize) -> bool {
    a.0.abs_diff(b.0) < m_n && a.1.abs_diff(b.1) < m_n
}

/// A block spec paired with the seed that realizes its flips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeededBlockNoise {
    #[serde(flatten)]
    pub spec: BlockNoiseSpec,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaltPepperSpec {
    pub rate: f64,
    pub target: CandidateId,
    pub flip_to: CandidateId,
    pub seed: u64,
}

impl SaltPepperSpec {
    pub fn anti_a(rate: f64, seed: u64) -> Self {
        SaltPepperSpec {
            rate,
            target: CandidateId::A,
            flip_to: CandidateId::B,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseReport {
    /// `N_n`: votes actually flipped.
    pub flipped_cells: usize,
    /// `S_c`: cells inside noise-concentrated blocks.
    pub concentrated_area: usize,
    /// Noise cells not covered by a concentrated block.
    pub residual: usize,
}

/// Flips target votes inside each block with probability `r`.
pub fn apply_block_noise(grid: &Grid, spec: &BlockNoiseSpec, seed: u64) -> Result<(Grid, NoiseReport)> {
    spec.validate(grid.dims(), grid.candidate_count())?;
    let dims = grid.dims();
    let mut votes = grid.votes().to_vec();
    let mut rng = rng_from_seed(seed);
    let mut flipped = 0;
    for (x, y) in spec.cells() {
        let i = dims.index(x, y);
        // One draw per block cell, so the flip mask does not depend on votes.
        let u = rng.gen::<f64>();
        if votes[i] == spec.target && u < spec.r {
            votes[i] = spec.flip_to;
            flipped += 1;
        }
    }
    let report = NoiseReport {
        flipped_cells: flipped,
        concentrated_area: spec.concentrated_area(),
        residual: 0,
    };
    Ok((grid.with_votes(votes), report))
}

/// Flips each target vote independently with probability `rate`.
pub fn apply_salt_pepper(grid: &Grid, spec: &SaltPepperSpec) -> Result<(Grid, NoiseReport)> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::InvalidNoise(format!("rate {} outside [0, 1]", spec.rate)));
    }
    if spec.target == spec.flip_to
        || spec.target.index() >= grid.candidate_count()
        || spec.flip_to.index() >= grid.candidate_count()
    {
        return Err(Error::InvalidNoise("bad target/flip_to pair".into()));
    }
    let mut votes = grid.votes().to_vec();
    let mut rng = rng_from_seed(spec.seed);
    let mut flipped = 0;
    for v in votes.iter_mut() {
        if *v == spec.target && rng.gen::<f64>() < spec.rate {
            *v = spec.flip_to;
            flipped += 1;
        }
    }
    let report = NoiseReport {
        flipped_cells: flipped,
        concentrated_area: 0,
        residual: flipped,
    };
    Ok((grid.with_votes(votes), report))
}

const PLACEMENT_RESTARTS: usize = 64;
const PLACEMENT_TRIES_PER_BLOCK: usize = 256;

/// Samples `block_count` disjoint `m_n × m_n` anti-A blocks (r = 1).
///
/// Blocks are drawn one at a time uniformly over anchors that keep the block
/// inside the grid, rejecting overlaps; a stalled draw restarts the whole
/// placement.
pub fn random_anchor_placement(
    dims: GridDims,
    m_n: usize,
    block_count: usize,
    seed: u64,
) -> Result<BlockNoiseSpec> {
    if m_n == 0 {
        return Err(Error::InvalidNoise("block edge m_n must be positive".into()));
    }
    if block_count == 0 {
        return Ok(BlockNoiseSpec::anti_a(m_n, Vec::new()));
    }
    let infeasible = Error::PlacementInfeasible {
        count: block_count,
        edge: m_n,
        attempts: PLACEMENT_RESTARTS,
    };
    if m_n > dims.width || m_n > dims.height || block_count * m_n * m_n > dims.cells() {
        return Err(infeasible);
    }
    let mut rng = rng_from_seed(seed);
    let (xs, ys) = (dims.width - m_n + 1, dims.height - m_n + 1);
    'restart: for _ in 0..PLACEMENT_RESTARTS {
        let mut anchors: Vec<(usize, usize)> = Vec::with_capacity(block_count);
        while anchors.len() < block_count {
            let mut placed = false;
            for _ in 0..PLACEMENT_TRIES_PER_BLOCK {
                let cand = (rng.gen_range(0..xs), rng.gen_range(0..ys));
                if anchors.iter().all(|&a| !blocks_overlap(a, cand, m_n)) {
                    anchors.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'restart;
            }
        }
        return Ok(BlockNoiseSpec::anti_a(m_n, anchors));
    }
    Err(infeasible)
}

/// A (possibly disconnected) set of noise-affected cells.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseArea {
    cells: BTreeSet<(usize, usize)>,
}

impl NoiseArea {
    pub fn from_cells<I: IntoIterator<Item = (usize, usize)>>(cells: I) -> Self {
        NoiseArea {
            cells: cells.into_iter().collect(),
        }
    }

    pub fn rectangle(x: usize, y: usize, w: usize, h: usize) -> Self {
        NoiseArea::from_cells((y..y + h).flat_map(|yy| (x..x + w).map(move |xx| (xx, yy))))
    }

    /// Cells of `grid` that differ from `original`.
    pub fn from_difference(original: &Grid, noisy: &Grid) -> Result<Self> {
        if original.dims() != noisy.dims() {
            return Err(Error::InvalidGrid("grids differ in size".into()));
        }
        let dims = original.dims();
        Ok(NoiseArea::from_cells(
            original
                .votes()
                .iter()
                .zip(noisy.votes())
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(i, _)| dims.coords(i)),
        ))
    }

    pub fn union(mut self, other: &NoiseArea) -> Self {
        self.cells.extend(other.cells.iter().copied());
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: (usize, usize)) -> bool {
        self.cells.contains(&cell)
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().copied()
    }

    pub fn within(&self, dims: GridDims) -> bool {
        self.cells.iter().all(|&(x, y)| dims.contains(x, y))
    }

    /// 4-connected components, ordered by their smallest cell.
    pub fn components(&self) -> Vec<NoiseArea> {
        let mut unseen = self.cells.clone();
        let mut out = Vec::new();
        while let Some(&start) = unseen.iter().next() {
            unseen.remove(&start);
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            while let Some((x, y)) = queue.pop_front() {
                comp.insert((x, y));
                let mut nbrs = vec![(x + 1, y), (x, y + 1)];
                if x > 0 {
                    nbrs.push((x - 1, y));
                }
                if y > 0 {
                    nbrs.push((x, y - 1));
                }
                for n in nbrs {
                    if unseen.remove(&n) {
                        queue.push_back(n);
                    }
                }
            }
            out.push(NoiseArea { cells: comp });
        }
        out
    }

    /// Lengths of all maximal horizontal and vertical runs. Both end cells
    /// of a maximal run border the outside, so each run is a discrete
    /// orthodiameter.
    pub fn orthodiameters(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        for &(x, y) in &self.cells {
            if x == 0 || !self.contains((x - 1, y)) {
                let mut len = 1;
                while self.contains((x + len, y)) {
                    len += 1;
                }
                runs.push(len);
            }
            if y == 0 || !self.contains((x, y - 1)) {
                let mut len = 1;
                while self.contains((x, y + len)) {
                    len += 1;
                }
                runs.push(len);
            }
        }
        runs
    }
}

/// Shortest discrete orthodiameter over all connected parts of `area`.
pub fn orthomeasure(area: &NoiseArea) -> Result<usize> {
    if area.is_empty() {
        return Err(Error::EmptyArea);
    }
    area.components()
        .iter()
        .filter_map(|c| c.orthodiameters().into_iter().min())
        .min()
        .ok_or(Error::EmptyArea)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPacking {
    pub packed_count: usize,
    /// `S_c = packed_count · m_n²`.
    pub concentrated_area: usize,
    /// `|area| − S_c`.
    pub residual: usize,
    pub anchors: Vec<(usize, usize)>,
}

impl BlockPacking {
    pub fn residual_fraction(&self) -> f64 {
        let total = self.concentrated_area + self.residual;
        if total == 0 {
            0.0
        } else {
            self.residual as f64 / total as f64
        }
    }
}

/// Greedy raster-scan packing of disjoint `m_n × m_n` blocks inside `area`.
///
/// Candidate anchors are visited row by row; a block is cut whenever all of
/// its cells lie in the area and none is used yet. The result is a lower
/// bound on the best achievable `S_c`.
pub fn pack_blocks(area: &NoiseArea, m_n: usize) -> Result<BlockPacking> {
    if m_n == 0 {
        return Err(Error::InvalidParameter("block edge m_n must be positive".into()));
    }
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut anchors = Vec::new();
    let mut order: Vec<(usize, usize)> = area.cells().map(|(x, y)| (y, x)).collect();
    order.sort_unstable();
    for (y, x) in order {
        if used.contains(&(x, y)) {
            continue;
        }
        let fits = (0..m_n).all(|j| {
            (0..m_n).all(|i| {
                let c = (x + i, y + j);
                area.contains(c) && !used.contains(&c)
            })
        });
        if fits {
            for j in 0..m_n {
                for i in 0..m_n {
                    used.insert((x + i, y + j));
                }
            }
            anchors.push((x, y));
        }
    }
    let concentrated_area = anchors.len() * m_n * m_n;
    Ok(BlockPacking {
        packed_count: anchors.len(),
        concentrated_area,
        residual: area.len() - concentrated_area,
        anchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_a(w: usize, h: usize) -> Grid {
        Grid::filled(w, h, 2, CandidateId::A).unwrap()
    }

    #[test]
    fn certain_flip_in_one_block() {
        let g = all_a(10, 10);
        let spec = BlockNoiseSpec::anti_a(5, vec![(2, 3)]);
        let (noisy, rep) = apply_block_noise(&g, &spec, 1).unwrap();
        assert_eq!(rep.flipped_cells, 25);
        assert_eq!(rep.concentrated_area, 25);
        assert_eq!(noisy.count_of(CandidateId::B), 25);
        assert_eq!(noisy.get(1, 3), CandidateId::A);
        assert_eq!(noisy.get(2, 3), CandidateId::B);
    }

    #[test]
    fn zero_probability_is_identity() {
        let g = all_a(10, 10);
        let spec = BlockNoiseSpec::anti_a(5, vec![(0, 0), (5, 5)]).with_flip_probability(0.0);
        let (noisy, rep) = apply_block_noise(&g, &spec, 9).unwrap();
        assert_eq!(noisy, g);
        assert_eq!(rep.flipped_cells, 0);
    }

    #[test]
    fn block_validation_errors() {
        let g = all_a(10, 10);
        let overlap = BlockNoiseSpec::anti_a(3, vec![(0, 0), (2, 2)]);
        assert!(matches!(
            apply_block_noise(&g, &overlap, 0),
            Err(Error::BlockOverlap { first: 0, second: 1 })
        ));
        let oob = BlockNoiseSpec::anti_a(3, vec![(8, 0)]);
        assert!(matches!(apply_block_noise(&g, &oob, 0), Err(Error::BlockOutOfBounds { .. })));
        let same = BlockNoiseSpec::anti_a(3, vec![]).with_candidates(CandidateId::A, CandidateId::A);
        assert!(apply_block_noise(&g, &same, 0).is_err());
        let bad_r = BlockNoiseSpec::anti_a(3, vec![]).with_flip_probability(1.5);
        assert!(apply_block_noise(&g, &bad_r, 0).is_err());
    }

    #[test]
    fn salt_pepper_extremes() {
        let g = all_a(8, 8);
        let (same, rep) = apply_salt_pepper(&g, &SaltPepperSpec::anti_a(0.0, 3)).unwrap();
        assert_eq!(same, g);
        assert_eq!(rep.flipped_cells, 0);
        let (all_b, rep) = apply_salt_pepper(&g, &SaltPepperSpec::anti_a(1.0, 3)).unwrap();
        assert_eq!(all_b.count_of(CandidateId::B), 64);
        assert_eq!(rep.flipped_cells, 64);
    }

    #[test]
    fn placement_zero_blocks_and_flag_size() {
        let dims = GridDims::new(15, 24);
        assert!(random_anchor_placement(dims, 5, 0, 1).unwrap().anchors.is_empty());
        let spec = random_anchor_placement(dims, 5, 7, 1).unwrap();
        assert_eq!(spec.block_count(), 7);
        spec.validate(dims, 2).unwrap();
        assert!(matches!(
            random_anchor_placement(dims, 5, 15, 1),
            Err(Error::PlacementInfeasible { .. })
        ));
    }

    #[test]
    fn placement_is_deterministic() {
        let dims = GridDims::new(24, 24);
        assert_eq!(
            random_anchor_placement(dims, 3, 10, 77).unwrap(),
            random_anchor_placement(dims, 3, 10, 77).unwrap()
        );
    }

    #[test]
    fn orthomeasure_examples() {
        assert_eq!(orthomeasure(&NoiseArea::rectangle(0, 0, 10, 10)).unwrap(), 10);
        let two = NoiseArea::rectangle(0, 0, 10, 10).union(&NoiseArea::rectangle(20, 0, 4, 20));
        assert_eq!(two.components().len(), 2);
        assert_eq!(orthomeasure(&two).unwrap(), 4);
        assert_eq!(orthomeasure(&NoiseArea::rectangle(3, 3, 7, 1)).unwrap(), 1);
        assert!(matches!(orthomeasure(&NoiseArea::default()), Err(Error::EmptyArea)));
    }

    #[test]
    fn orthomeasure_of_l_shape() {
        // 6x2 bar on top of a 2x6 column: shortest chord is 2.
        let l = NoiseArea::rectangle(0, 0, 6, 2).union(&NoiseArea::rectangle(0, 2, 2, 4));
        assert_eq!(l.components().len(), 1);
        assert_eq!(orthomeasure(&l).unwrap(), 2);
    }

    #[test]
    fn packing_examples() {
        let sq = NoiseArea::rectangle(0, 0, 10, 10);
        let p = pack_blocks(&sq, 3).unwrap();
        assert_eq!((p.packed_count, p.concentrated_area, p.residual), (9, 81, 19));
        let p1 = pack_blocks(&sq, 1).unwrap();
        assert_eq!(p1.residual, 0);
        let five = pack_blocks(&NoiseArea::rectangle(4, 4, 5, 5), 5).unwrap();
        assert_eq!((five.packed_count, five.residual), (1, 0));
    }
}
