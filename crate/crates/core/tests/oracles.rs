//! Published values and independent recomputations.

use std::collections::BTreeMap;

use regvote::bounds::{emit_table1, emit_table2, BoundReport};
use regvote::breakdown::{exhaustive_breakdown, generate_grid, GenMode, GridGenSpec, Scheme};
use regvote::eigenlab::{train_global, PatternGallery};
use regvote::grid::enumerate_partitions;
use regvote::noise::{pack_blocks, BlockNoiseSpec, NoiseArea};
use regvote::shifting::{shift_histogram, sweep_partitions};
use regvote::voting::region_counts;
use regvote::{BoundInputsExact, CandidateId, Exact, GridDims, Partition};

fn pct(p: i64) -> Exact {
    Exact::new(p, 100)
}

/// Straight floating-point evaluation, rounded half up.
fn direct(n: f64, a: f64, m_n: f64, m_r: f64) -> [i64; 3] {
    let q = (m_n / m_r).ceil();
    let fixed = (m_n / m_r).powi(2) / (q + 1.0).powi(2) * a / 2.0 * n;
    let shifted = (m_n / (m_r + m_n - 1.0)).powi(2) * a / 2.0 * n;
    let national = (2.0 * a - 1.0) / 2.0 * n;
    [national, fixed, shifted].map(|v| (v + 0.5 + 1e-9).floor() as i64)
}

#[test]
fn table_one_cells() {
    let t = emit_table1(10_000, &[pct(5), pct(10), pct(20)], &[(3, 3), (4, 2)]).unwrap();
    assert_eq!(t.cells, vec![vec![656, 1167, 250], vec![688, 1222, 500], vec![750, 1333, 1000]]);
    assert_eq!(t.rows, vec!["5%", "10%", "20%"]);
}

#[test]
fn table_two_cells() {
    let margins = [pct(5), pct(10), pct(15), pct(20)];
    let t = emit_table2(10_000, &margins, &[(3, 3), (4, 2)]).unwrap();
    assert_eq!(
        t.cells,
        vec![
            vec![656, 945, 1167, 1680],
            vec![688, 990, 1222, 1760],
            vec![719, 1035, 1278, 1840],
            vec![750, 1080, 1333, 1920],
        ]
    );
}

#[test]
fn exact_reports_agree_with_direct_float() {
    for p in 1..=40 {
        for (m_n, m_r) in [(1, 1), (3, 3), (4, 2), (5, 8), (7, 3), (2, 9)] {
            let inputs = BoundInputsExact::from_margin(10_000, pct(p), m_n, m_r).unwrap();
            let a = (1.0 + p as f64 / 100.0) / 2.0;
            assert_eq!(
                BoundReport::compute(&inputs).rounded(),
                direct(10_000.0, a, m_n as f64, m_r as f64),
                "p={p} m_n={m_n} m_r={m_r}"
            );
        }
    }
}

#[test]
fn half_cell_rounds_up() {
    let inputs = BoundInputsExact::from_margin(10_000, pct(10), 3, 3).unwrap();
    let report = BoundReport::compute(&inputs);
    assert_eq!(report.fixed_lower, Exact::new(1375, 2));
    assert_eq!(report.rounded()[1], 688);
}

#[test]
fn five_by_eight_histogram() {
    let dims = GridDims::new(24, 24);
    let sweep = sweep_partitions(dims, 8, &BlockNoiseSpec::anti_a(5, vec![(3, 11)])).unwrap();
    assert_eq!(shift_histogram(&sweep), BTreeMap::from([(1, 16), (2, 32), (4, 16)]));
}

/// Brute force over every flip set: B must take strictly more regions than A.
fn regional_breakdown_brute(grid: &regvote::Grid, p: Partition) -> usize {
    let a_cells: Vec<usize> = (0..grid.len()).filter(|&i| grid.votes()[i] == CandidateId::A).collect();
    let dims = grid.dims();
    let map = p.region_map(dims).unwrap();
    let area = p.region_area() as i64;
    for k in 1..=a_cells.len() {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut a_in = vec![0i64; map.count];
            for (i, v) in grid.votes().iter().enumerate() {
                if *v == CandidateId::A {
                    a_in[map.region_of_index(i)] += 1;
                }
            }
            for &j in &idx {
                a_in[map.region_of_index(a_cells[j])] -= 1;
            }
            let a_wins = a_in.iter().filter(|&&a| 2 * a > area).count();
            let b_wins = a_in.iter().filter(|&&a| 2 * a < area).count();
            if b_wins > a_wins {
                return k;
            }
            let mut i = k;
            while i > 0 && idx[i - 1] == a_cells.len() - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    usize::MAX
}

#[test]
fn regional_exhaustive_matches_brute_force() {
    for seed in 0..6 {
        let grid = generate_grid(&GridGenSpec {
            width: 4,
            height: 4,
            a_frac: 0.6875,
            mode: GenMode::UniformRandom,
            seed,
        })
        .unwrap();
        let p = Partition::aligned(2).unwrap();
        let counts = region_counts(&grid, p).unwrap();
        let a_regions = counts.iter().filter(|c| c[0] > c[1]).count();
        let b_regions = counts.iter().filter(|c| c[1] > c[0]).count();
        if a_regions <= b_regions {
            continue;
        }
        let want = regional_breakdown_brute(&grid, p);
        let got = exhaustive_breakdown(&grid, Scheme::Regional { partition: p }, 11).unwrap();
        assert_eq!(got.min_overturning_flips, Some(want), "seed {seed}");
    }
}

#[test]
fn shift_enumeration_order() {
    let ps = enumerate_partitions(3).unwrap();
    let got: Vec<(usize, usize)> = ps.iter().map(|p| (p.dx, p.dy)).collect();
    assert_eq!(got[..4], [(0, 0), (0, 1), (0, 2), (1, 0)]);
}

#[test]
fn packing_residual_sequence() {
    let fractions: Vec<Exact> = [3usize, 6, 12, 24, 48]
        .iter()
        .map(|&w| {
            let p = pack_blocks(&NoiseArea::rectangle(0, 0, w, w), 3).unwrap();
            Exact::new(p.residual as i64, (w * w) as i64)
        })
        .collect();
    assert!(fractions.iter().all(|f| *f == Exact::from_integer(0)));
    let p = pack_blocks(&NoiseArea::rectangle(0, 0, 10, 10), 3).unwrap();
    assert_eq!(p.residual, 100 - 81);
}

/// Two-image PCA has a closed form: one component along the difference.
#[test]
fn two_image_pca_closed_form() {
    let g = PatternGallery::<f64>::synthetic(6, 5, 2, 17).unwrap();
    let m = train_global(&g, 1).unwrap();
    let diff: Vec<f64> = g.patterns[0].pixels.iter().zip(&g.patterns[1].pixels).map(|(a, b)| a - b).collect();
    let len = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    assert!((m.eigenvalues[0] - len * len / 2.0).abs() < 1e-9 * len * len);
    let cos: f64 = m.basis[0].iter().zip(&diff).map(|(u, d)| u * d).sum::<f64>() / len;
    assert!((cos.abs() - 1.0).abs() < 1e-9);
    assert!((m.coords[0][0].abs() - len / 2.0).abs() < 1e-9);
}
