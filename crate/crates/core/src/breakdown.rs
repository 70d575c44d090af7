//! Empirical breakdown points.
//!
//! The breakdown point of a scheme is the smallest number of flips of the
//! original winner's votes (to the runner-up) after which another candidate
//! strictly wins. A tie is not an overturn.
//!
//! Exhaustive search enumerates flip sets of growing size and is exact on
//! tiny grids. Randomized search drops disjoint `m_n × m_n` blocks (r = 1)
//! one at a time until the winner changes; its minimum over trials is an
//! upper bound on the true breakdown point.

use std::sync::Arc;

use itertools::Itertools;
use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{enumerate_partitions, CandidateId, Grid, GridDims, Partition};
use crate::noise::{apply_block_noise, apply_salt_pepper, BlockNoiseSpec, SaltPepperSpec, SeededBlockNoise};
use crate::seed::{rng_from_seed, SeedStream};
use crate::shifting::best_partition;
use crate::voting::{plurality, tally_global, tally_regional, IncrementalRegional, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Global,
    /// Regional voting on one fixed partition.
    Regional { partition: Partition },
    /// Regional voting on whichever shifted `m_r × m_r` partition the noise
    /// contaminates least.
    RegionalBestShift { m_r: usize },
}

impl Scheme {
    pub fn regional(m_r: usize) -> Result<Scheme> {
        Ok(Scheme::Regional {
            partition: Partition::aligned(m_r)?,
        })
    }

    pub fn label(&self) -> String {
        match self {
            Scheme::Global => "global".into(),
            Scheme::Regional { partition } => format!("regional({partition})"),
            Scheme::RegionalBestShift { m_r } => format!("regional_best_shift({m_r})"),
        }
    }

    fn check(&self, dims: GridDims) -> Result<()> {
        match self {
            Scheme::Global => Ok(()),
            Scheme::Regional { partition } => partition.check(dims),
            Scheme::RegionalBestShift { m_r } => Partition::aligned(*m_r)?.check(dims),
        }
    }
}

/// Outcome of `scheme` on `grid`, where `noise` is the block layout that
/// produced it (only consulted by the best-shift scheme).
pub fn scheme_outcome(grid: &Grid, scheme: Scheme, noise: &BlockNoiseSpec) -> Result<Outcome> {
    Ok(match scheme {
        Scheme::Global => tally_global(grid).winner,
        Scheme::Regional { partition } => tally_regional(grid, partition)?.winner,
        Scheme::RegionalBestShift { m_r } => {
            let best = best_partition(grid.dims(), m_r, noise)?;
            tally_regional(grid, best.partition)?.winner
        }
    })
}

pub fn is_overturn(original: CandidateId, now: Outcome) -> bool {
    matches!(now, Outcome::Winner(c) if c != original)
}

/// Strongest global rival of `winner`; lowest id on ties.
pub fn runner_up(grid: &Grid, winner: CandidateId) -> CandidateId {
    let counts = grid.counts();
    (0..grid.candidate_count())
        .filter(|&c| c != winner.index())
        .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
        .map(|c| CandidateId(c as u16))
        .expect("at least two candidates")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    Randomized { trials: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownResult {
    pub scheme: Scheme,
    /// `None` when no overturn was found within the budget.
    pub min_overturning_flips: Option<usize>,
    pub search_mode: SearchMode,
    pub witness: Option<SeededBlockNoise>,
}

impl BreakdownResult {
    /// Re-applies the witness and reports whether it still overturns.
    pub fn replay(&self, grid: &Grid) -> Result<bool> {
        let Some(w) = &self.witness else {
            return Ok(false);
        };
        let original = scheme_outcome(grid, self.scheme, &BlockNoiseSpec::anti_a(1, vec![]))?
            .winner()
            .ok_or(Error::NoWinner)?;
        let (noisy, report) = apply_block_noise(grid, &w.spec, w.seed)?;
        if Some(report.flipped_cells) != self.min_overturning_flips {
            return Ok(false);
        }
        Ok(is_overturn(original, scheme_outcome(&noisy, self.scheme, &w.spec)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenMode {
    UniformRandom,
    /// Every `m_r × m_r` window, at any toroidal offset, holds an A majority.
    PerRegionMargin { m_r: usize },
    /// B votes packed column by column from a random starting column.
    AdversarialClustered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridGenSpec {
    pub width: usize,
    pub height: usize,
    pub a_frac: f64,
    pub mode: GenMode,
    pub seed: u64,
}

impl GridGenSpec {
    /// `round(a_frac · N)`, halves up.
    pub fn a_count(&self) -> usize {
        (self.a_frac * (self.width * self.height) as f64 + 0.5).floor() as usize
    }
}

/// Two-candidate grid with exactly `round(a_frac · N)` A votes.
///
/// The per-region-margin mode tiles one random `m_r × m_r` motif holding
/// `⌊count_A / K⌋` A votes, then turns randomly chosen B cells into A until
/// the count is met. Every window of a periodic tiling contains exactly one
/// motif, and extra A votes only raise window counts, so every shifted
/// partition sees an A majority in every region.
pub fn generate_grid(spec: &GridGenSpec) -> Result<Grid> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(Error::InvalidParameter("grid dimensions must be positive".into()));
    }
    if !(spec.a_frac > 0.0 && spec.a_frac <= 1.0) {
        return Err(Error::InvalidFractions(format!("a_frac {} outside (0, 1]", spec.a_frac)));
    }
    let n = w * h;
    let a_count = spec.a_count().min(n);
    let mut rng = rng_from_seed(spec.seed);
    let mut votes = vec![CandidateId::B; n];
    match spec.mode {
        GenMode::UniformRandom => {
            for i in index::sample(&mut rng, n, a_count) {
                votes[i] = CandidateId::A;
            }
        }
        GenMode::AdversarialClustered => {
            let start = rng.gen_range(0..w);
            let b_count = n - a_count;
            votes.fill(CandidateId::A);
            let column_major = (0..w).flat_map(|cx| (0..h).map(move |y| ((start + cx) % w, y)));
            for (x, y) in column_major.take(b_count) {
                votes[y * w + x] = CandidateId::B;
            }
        }
        GenMode::PerRegionMargin { m_r } => {
            let p = Partition::aligned(m_r)?;
            let dims = GridDims::new(w, h);
            let k = p.region_count(dims)?;
            let area = m_r * m_r;
            let need = area / 2 + 1;
            let base = a_count / k;
            if base < need {
                return Err(Error::InfeasibleMargin(format!(
                    "{a_count} A votes over {k} regions of {area} cells cannot give each region {need}"
                )));
            }
            let motif: Vec<bool> = {
                let mut m = vec![false; area];
                for i in index::sample(&mut rng, area, base) {
                    m[i] = true;
                }
                m
            };
            let mut b_cells = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if motif[(y % m_r) * m_r + (x % m_r)] {
                        votes[y * w + x] = CandidateId::A;
                    } else {
                        b_cells.push(y * w + x);
                    }
                }
            }
            let extra = a_count - base * k;
            for &i in b_cells.choose_multiple(&mut rng, extra) {
                votes[i] = CandidateId::A;
            }
        }
    }
    Grid::new(w, h, 2, votes)
}

fn original_winner(grid: &Grid, scheme: Scheme) -> Result<CandidateId> {
    scheme.check(grid.dims())?;
    scheme_outcome(grid, scheme, &BlockNoiseSpec::anti_a(1, vec![]))?
        .winner()
        .ok_or(Error::NoWinner)
}

/// True minimum flips by enumerating every flip set of size `1..=flip_budget`.
pub fn exhaustive_breakdown(grid: &Grid, scheme: Scheme, flip_budget: usize) -> Result<BreakdownResult> {
    let winner = original_winner(grid, scheme)?;
    let rival = runner_up(grid, winner);
    let dims = grid.dims();
    let targets: Vec<usize> = grid
        .votes()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == winner)
        .map(|(i, _)| i)
        .collect();
    for k in 1..=flip_budget.min(targets.len()) {
        for subset in targets.iter().copied().combinations(k) {
            let mut votes = grid.votes().to_vec();
            for &i in &subset {
                votes[i] = rival;
            }
            let noisy = grid.with_votes(votes);
            let spec = BlockNoiseSpec::anti_a(1, subset.iter().map(|&i| dims.coords(i)).collect())
                .with_candidates(winner, rival);
            if is_overturn(winner, scheme_outcome(&noisy, scheme, &spec)?) {
                return Ok(BreakdownResult {
                    scheme,
                    min_overturning_flips: Some(k),
                    search_mode: SearchMode::Exhaustive,
                    witness: Some(SeededBlockNoise { spec, seed: 0 }),
                });
            }
        }
    }
    Err(Error::BudgetExhausted { budget: flip_budget })
}

/// Block family for randomized search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFamily {
    pub m_n: usize,
    pub min_blocks: usize,
    pub max_blocks: usize,
}

const ANCHOR_TRIES: usize = 512;

/// Scheme state that follows single-vote flips.
#[derive(Clone)]
enum Tracker {
    Global { counts: Vec<u64> },
    Fixed(IncrementalRegional),
    Shifted(Vec<ShiftState>),
}

#[derive(Clone)]
struct ShiftState {
    tally: IncrementalRegional,
    hit: Vec<bool>,
    contaminated: usize,
}

impl Tracker {
    fn new(grid: &Grid, scheme: Scheme) -> Result<Tracker> {
        let dims = grid.dims();
        Ok(match scheme {
            Scheme::Global => Tracker::Global { counts: grid.counts() },
            Scheme::Regional { partition } => {
                Tracker::Fixed(IncrementalRegional::new(grid, Arc::new(partition.region_map(dims)?)))
            }
            Scheme::RegionalBestShift { m_r } => Tracker::Shifted(
                enumerate_partitions(m_r)?
                    .into_iter()
                    .map(|p| {
                        let map = Arc::new(p.region_map(dims)?);
                        let count = map.count;
                        Ok(ShiftState {
                            tally: IncrementalRegional::new(grid, map),
                            hit: vec![false; count],
                            contaminated: 0,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }

    fn add_block(&mut self, dims: GridDims, anchor: (usize, usize), m_n: usize) {
        if let Tracker::Shifted(states) = self {
            for s in states.iter_mut() {
                let p = s.tally.partition();
                for j in 0..m_n {
                    for i in 0..m_n {
                        let r = p.region_unchecked(dims, anchor.0 + i, anchor.1 + j);
                        if !s.hit[r] {
                            s.hit[r] = true;
                            s.contaminated += 1;
                        }
                    }
                }
            }
        }
    }

    fn flip(&mut self, cell: usize, from: CandidateId, to: CandidateId) {
        match self {
            Tracker::Global { counts } => {
                counts[from.index()] -= 1;
                counts[to.index()] += 1;
            }
            Tracker::Fixed(t) => t.flip(cell, from, to),
            Tracker::Shifted(states) => {
                for s in states.iter_mut() {
                    s.tally.flip(cell, from, to);
                }
            }
        }
    }

    fn outcome(&self) -> Outcome {
        match self {
            Tracker::Global { counts } => plurality(counts),
            Tracker::Fixed(t) => t.winner(),
            // Partitions are in (dx, dy) order, so the first minimum is the
            // lexicographic tie-break.
            Tracker::Shifted(states) => states
                .iter()
                .min_by_key(|s| s.contaminated)
                .expect("at least one shift")
                .tally
                .winner(),
        }
    }
}

/// Minimum flips over `trials` random sequential block placements.
pub fn randomized_breakdown(
    grid: &Grid,
    scheme: Scheme,
    family: BlockFamily,
    trials: usize,
    seed: u64,
) -> Result<BreakdownResult> {
    let winner = original_winner(grid, scheme)?;
    let rival = runner_up(grid, winner);
    let dims = grid.dims();
    let m_n = family.m_n;
    if m_n == 0 || m_n > dims.width || m_n > dims.height {
        return Err(Error::InvalidParameter(format!("block edge {m_n} does not fit the grid")));
    }
    let template = Tracker::new(grid, scheme)?;
    let stream = SeedStream::new(seed, "randomized-breakdown");

    let best = (0..trials)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = stream.rng(t as u64);
            let mut tracker = template.clone();
            let mut votes = grid.votes().to_vec();
            let mut occupied = vec![false; dims.cells()];
            let mut anchors = Vec::new();
            let mut flips = 0usize;
            while anchors.len() < family.max_blocks {
                let anchor = (0..ANCHOR_TRIES).find_map(|_| {
                    let a = (
                        rng.gen_range(0..=dims.width - m_n),
                        rng.gen_range(0..=dims.height - m_n),
                    );
                    let free = (0..m_n).all(|j| (0..m_n).all(|i| !occupied[dims.index(a.0 + i, a.1 + j)]));
                    free.then_some(a)
                })?;
                tracker.add_block(dims, anchor, m_n);
                for j in 0..m_n {
                    for i in 0..m_n {
                        let c = dims.index(anchor.0 + i, anchor.1 + j);
                        occupied[c] = true;
                        if votes[c] == winner {
                            votes[c] = rival;
                            tracker.flip(c, winner, rival);
                            flips += 1;
                        }
                    }
                }
                anchors.push(anchor);
                if anchors.len() >= family.min_blocks && is_overturn(winner, tracker.outcome()) {
                    return Some((flips, t, anchors));
                }
            }
            None
        })
        .min_by_key(|(flips, t, _)| (*flips, *t));

    let (min_overturning_flips, witness) = match best {
        Some((flips, _, anchors)) => (
            Some(flips),
            Some(SeededBlockNoise {
                spec: BlockNoiseSpec::anti_a(m_n, anchors).with_candidates(winner, rival),
                seed: 0,
            }),
        ),
        None => (None, None),
    };
    Ok(BreakdownResult {
        scheme,
        min_overturning_flips,
        search_mode: SearchMode::Randomized { trials, seed },
        witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rate: f64,
    pub trials: usize,
    pub overturns: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverturnCurve {
    pub scheme: Scheme,
    pub points: Vec<CurvePoint>,
}

impl OverturnCurve {
    /// Rate at which the overturn frequency first reaches one half, linearly
    /// interpolated between grid points.
    pub fn threshold(&self) -> Option<f64> {
        let mut prev: Option<&CurvePoint> = None;
        for p in &self.points {
            if p.frequency >= 0.5 {
                return Some(match prev {
                    Some(q) if p.frequency > q.frequency => {
                        q.rate + (0.5 - q.frequency) / (p.frequency - q.frequency) * (p.rate - q.rate)
                    }
                    _ => p.rate,
                });
            }
            prev = Some(p);
        }
        None
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate,overturn_frequency,ci_low,ci_high\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                p.rate, p.frequency, p.ci_low, p.ci_high
            ));
        }
        out
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Overturn frequency under salt-and-pepper noise for each rate.
///
/// Noise for a given `(rate, trial)` depends only on `seed`, the rate and the
/// trial index, so curves for different schemes share their noisy grids.
pub fn salt_pepper_threshold(
    grid: &Grid,
    scheme: Scheme,
    rates: &[f64],
    trials: usize,
    seed: u64,
) -> Result<OverturnCurve> {
    let winner = original_winner(grid, scheme)?;
    let rival = runner_up(grid, winner);
    let dims = grid.dims();
    let stream = SeedStream::new(seed, "salt-pepper");
    let mut points = Vec::with_capacity(rates.len());
    for &rate in rates {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidNoise(format!("rate {rate} outside [0, 1]")));
        }
        let rate_stream = stream.child(&format!("{rate:.12}"));
        let overturns = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<bool> {
                let spec = SaltPepperSpec {
                    rate,
                    target: winner,
                    flip_to: rival,
                    seed: rate_stream.seed(t as u64),
                };
                let (noisy, _) = apply_salt_pepper(grid, &spec)?;
                let noise = match scheme {
                    Scheme::RegionalBestShift { .. } => {
                        let changed = grid
                            .votes()
                            .iter()
                            .zip(noisy.votes())
                            .enumerate()
                            .filter(|(_, (a, b))| a != b)
                            .map(|(i, _)| dims.coords(i))
                            .collect();
                        BlockNoiseSpec::anti_a(1, changed)
                    }
                    _ => BlockNoiseSpec::anti_a(1, vec![]),
                };
                Ok(is_overturn(winner, scheme_outcome(&noisy, scheme, &noise)?))
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&o| o)
            .count();
        let (ci_low, ci_high) = wilson_interval(overturns, trials);
        points.push(CurvePoint {
            rate,
            trials,
            overturns,
            frequency: if trials == 0 { 0.0 } else { overturns as f64 / trials as f64 },
            ci_low,
            ci_high,
        });
    }
    Ok(OverturnCurve { scheme, points })
}
