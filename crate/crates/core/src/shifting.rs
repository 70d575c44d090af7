//! The shifting strategy: contamination of every toroidal translate of the
//! square partition, and selection of the least contaminated one.
//!
//! A region is contaminated when it intersects any noise block, whether or
//! not a vote inside it actually flipped.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{enumerate_partitions, GridDims, Partition};
use crate::noise::BlockNoiseSpec;
use crate::scalar::Scalar;
use crate::Exact;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContaminationReport {
    pub partition: Partition,
    /// `K'`.
    pub contaminated_regions: usize,
    pub total_regions: usize,
    /// `S_r = K' · region area`.
    pub contaminated_area: usize,
    /// `S_c`.
    pub concentrated_area: usize,
}

impl ContaminationReport {
    /// `S_r / S_c`, absent without noise.
    pub fn ratio<S: Scalar>(&self) -> Option<S> {
        (self.concentrated_area > 0)
            .then(|| S::from_ratio(self.contaminated_area as i64, self.concentrated_area as i64))
    }

    pub fn exact_ratio(&self) -> Option<Exact> {
        self.ratio::<Exact>()
    }

    /// `S_r − S_c`.
    pub fn slack(&self) -> i64 {
        self.contaminated_area as i64 - self.concentrated_area as i64
    }

    pub fn csv_header() -> &'static str {
        "dx,dy,contaminated_regions,s_r,s_c,ratio"
    }

    pub fn csv_row(&self) -> String {
        let ratio = self
            .ratio::<f64>()
            .map_or_else(String::new, |r| format!("{r:.6}"));
        format!(
            "{},{},{},{},{},{}",
            self.partition.dx,
            self.partition.dy,
            self.contaminated_regions,
            self.contaminated_area,
            self.concentrated_area,
            ratio
        )
    }
}

/// Region columns (or rows) touched by the cell interval `[start, start+len)`
/// along one axis of length `extent`, cut into pieces of `piece` shifted by
/// `shift`.
fn touched(start: usize, len: usize, extent: usize, piece: usize, shift: usize) -> Vec<usize> {
    let pieces = extent / piece;
    let s = (start + shift) % extent;
    let first = s / piece;
    let count = ((s % piece) + len - 1) / piece + 1;
    let mut out: Vec<usize> = (0..count.min(pieces)).map(|i| (first + i) % pieces).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Counts regions of `partition` that intersect any block of `spec`, using
/// block/region interval geometry only.
pub fn contaminated_regions(dims: GridDims, partition: Partition, spec: &BlockNoiseSpec) -> Result<ContaminationReport> {
    let total = partition.region_count(dims)?;
    if spec.m_n == 0 {
        return Err(Error::InvalidNoise("block edge m_n must be positive".into()));
    }
    for &(x, y) in &spec.anchors {
        if x + spec.m_n > dims.width || y + spec.m_n > dims.height {
            return Err(Error::BlockOutOfBounds {
                x,
                y,
                edge: spec.m_n,
                width: dims.width,
                height: dims.height,
            });
        }
    }
    let cols = partition.columns(dims);
    let mut hit = vec![false; total];
    let mut count = 0;
    for &(x, y) in &spec.anchors {
        let xs = touched(x, spec.m_n, dims.width, partition.region_w, partition.dx);
        let ys = touched(y, spec.m_n, dims.height, partition.region_h, partition.dy);
        for &ry in &ys {
            for &rx in &xs {
                let r = ry * cols + rx;
                if !hit[r] {
                    hit[r] = true;
                    count += 1;
                }
            }
        }
    }
    Ok(ContaminationReport {
        partition,
        contaminated_regions: count,
        total_regions: total,
        contaminated_area: count * partition.region_area(),
        concentrated_area: spec.concentrated_area(),
    })
}

/// One report per shifted `m_r × m_r` partition, ordered by `(dx, dy)`.
pub fn sweep_partitions(dims: GridDims, m_r: usize, spec: &BlockNoiseSpec) -> Result<Vec<ContaminationReport>> {
    Partition::aligned(m_r)?.check(dims)?;
    enumerate_partitions(m_r)?
        .into_par_iter()
        .map(|p| contaminated_regions(dims, p, spec))
        .collect()
}

/// The least contaminated partition; ties go to the smallest `(dx, dy)`.
pub fn best_partition(dims: GridDims, m_r: usize, spec: &BlockNoiseSpec) -> Result<ContaminationReport> {
    let sweep = sweep_partitions(dims, m_r, spec)?;
    Ok(select_best(sweep))
}

pub(crate) fn select_best(sweep: Vec<ContaminationReport>) -> ContaminationReport {
    sweep
        .into_iter()
        .min_by_key(|r| (r.contaminated_regions, r.partition.dx, r.partition.dy))
        .expect("at least one partition")
}

/// Number of shifts per contaminated-region count.
pub fn shift_histogram(sweep: &[ContaminationReport]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for r in sweep {
        *hist.entry(r.contaminated_regions).or_insert(0) += 1;
    }
    hist
}

pub fn sweep_to_csv(sweep: &[ContaminationReport]) -> String {
    let mut out = String::from(ContaminationReport::csv_header());
    out.push('\n');
    for r in sweep {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::shifted_ratio_ceiling;
    use crate::noise::random_anchor_placement;

    /// Cell-scan oracle: regions containing at least one block cell.
    fn scan(dims: GridDims, p: Partition, spec: &BlockNoiseSpec) -> usize {
        let map = p.region_map(dims).unwrap();
        let mut hit = vec![false; map.count];
        for (x, y) in spec.cells() {
            hit[map.region_of_index(dims.index(x, y))] = true;
        }
        hit.iter().filter(|&&h| h).count()
    }

    #[test]
    fn aligned_and_shifted_block() {
        let dims = GridDims::new(12, 12);
        let spec = BlockNoiseSpec::anti_a(3, vec![(3, 3)]);
        let p0 = Partition::aligned(3).unwrap();
        assert_eq!(contaminated_regions(dims, p0, &spec).unwrap().contaminated_regions, 1);
        let p1 = Partition::square(3, 1, 1).unwrap();
        let rep = contaminated_regions(dims, p1, &spec).unwrap();
        assert_eq!(rep.contaminated_regions, 4);
        assert_eq!(scan(dims, p1, &spec), 4);
        assert_eq!(rep.contaminated_area, 36);
        assert_eq!(rep.exact_ratio(), Some(Exact::from_integer(4)));
        assert_eq!(rep.slack(), 27);
    }

    #[test]
    fn no_blocks_has_no_ratio() {
        let dims = GridDims::new(6, 6);
        let rep = contaminated_regions(dims, Partition::aligned(3).unwrap(), &BlockNoiseSpec::anti_a(2, vec![]))
            .unwrap();
        assert_eq!(rep.contaminated_regions, 0);
        assert_eq!(rep.exact_ratio(), None);
    }

    #[test]
    fn unit_regions_single_report() {
        let dims = GridDims::new(5, 5);
        let sweep = sweep_partitions(dims, 1, &BlockNoiseSpec::anti_a(2, vec![(1, 1)])).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0].contaminated_regions, 4);
    }

    #[test]
    fn pigeonhole_histogram_five_by_eight() {
        let dims = GridDims::new(24, 24);
        let spec = BlockNoiseSpec::anti_a(5, vec![(9, 7)]);
        let sweep = sweep_partitions(dims, 8, &spec).unwrap();
        let hist = shift_histogram(&sweep);
        assert_eq!(hist, BTreeMap::from([(1, 16), (2, 32), (4, 16)]));
        let total: usize = sweep.iter().map(|r| r.contaminated_regions).sum();
        assert_eq!(total, 144);
    }

    #[test]
    fn single_block_shift_sum() {
        for m_n in 1..=6 {
            for m_r in m_n..=7 {
                let dims = GridDims::new(3 * m_r, 3 * m_r);
                let spec = BlockNoiseSpec::anti_a(m_n, vec![(m_r, m_r)]);
                let sweep = sweep_partitions(dims, m_r, &spec).unwrap();
                let total: usize = sweep.iter().map(|r| r.contaminated_regions).sum();
                assert_eq!(total, (m_n + m_r - 1).pow(2), "m_n={m_n} m_r={m_r}");
                let hist = shift_histogram(&sweep);
                let k = m_n - 1;
                let want_two = 2 * k + 2 * k * (m_r - m_n);
                assert_eq!(hist.get(&4).copied().unwrap_or(0), k * k);
                assert_eq!(hist.get(&2).copied().unwrap_or(0), want_two);
                assert_eq!(hist.get(&1).copied().unwrap_or(0), (m_r - m_n + 1).pow(2));
            }
        }
    }

    #[test]
    fn geometry_matches_cell_scan_with_wrap() {
        let dims = GridDims::new(12, 9);
        let spec = BlockNoiseSpec::anti_a(4, vec![(8, 5), (0, 0), (4, 0)]);
        for p in crate::grid::enumerate_partitions(3).unwrap() {
            let rep = contaminated_regions(dims, p, &spec).unwrap();
            assert_eq!(rep.contaminated_regions, scan(dims, p, &spec), "{p}");
        }
    }

    #[test]
    fn best_partition_respects_pigeonhole() {
        let dims = GridDims::new(24, 24);
        for seed in 0..10 {
            let spec = random_anchor_placement(dims, 3, 12, seed).unwrap();
            let sweep = sweep_partitions(dims, 4, &spec).unwrap();
            let mean = sweep.iter().map(|r| r.contaminated_regions).sum::<usize>() as f64 / sweep.len() as f64;
            let best = best_partition(dims, 4, &spec).unwrap();
            assert!(best.contaminated_regions as f64 <= mean);
            assert!(best.exact_ratio().unwrap() <= shifted_ratio_ceiling::<Exact>(3, 4).unwrap());
            let min = sweep.iter().map(|r| r.contaminated_regions).min().unwrap();
            let first = sweep.iter().find(|r| r.contaminated_regions == min).unwrap();
            assert_eq!(best.partition, first.partition);
        }
    }

    #[test]
    fn aligned_block_best_is_one() {
        let dims = GridDims::new(12, 12);
        let best = best_partition(dims, 4, &BlockNoiseSpec::anti_a(3, vec![(5, 2)])).unwrap();
        assert_eq!(best.contaminated_regions, 1);
    }
}
