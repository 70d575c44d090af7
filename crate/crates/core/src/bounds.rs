//! Closed-form accommodation bounds.
//!
//! All values are computed in the caller's scalar type. With [`crate::Exact`]
//! every bound is an exact rational and rounding (half up) happens only when
//! a table is emitted.
//!
//! With `q = ⌈m_n / m_r⌉`:
//!
//! | quantity | value |
//! |---|---|
//! | national breakdown | `(A − B)/2 · N` |
//! | fixed-partition regional lower bound | `m_n²/m_r² · 1/(q+1)² · A/2 · N` |
//! | best-shift regional lower bound | `(m_n/(m_r+m_n−1))² · A/2 · N` |
//! | fixed-partition ratio ceiling `S_r/S_c` | `(q+1)² · m_r²/m_n²` |
//! | best-shift ratio ceiling `S_r/S_c` | `((m_r+m_n−1)/m_n)²` |

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two-candidate bound inputs. `a + b = 1`, `a > b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs<S> {
    pub total_cells: u64,
    pub a: S,
    pub b: S,
    pub m_n: u64,
    pub m_r: u64,
}

impl<S: Scalar> BoundInputs<S> {
    pub fn new(total_cells: u64, a: S, b: S, m_n: u64, m_r: u64) -> Result<Self> {
        if !(a.clone() + b.clone()).approx_eq(&S::one()) {
            return Err(Error::InvalidFractions(format!("{a:?} + {b:?} must equal 1")));
        }
        if a <= b || b < S::zero() {
            return Err(Error::InvalidFractions(format!("need 1 ≥ a > b ≥ 0, got {a:?}, {b:?}")));
        }
        check_edges(m_n, m_r)?;
        Ok(BoundInputs {
            total_cells,
            a,
            b,
            m_n,
            m_r,
        })
    }

    /// Inputs from the margin `A − B`; `A = (1 + margin)/2`.
    pub fn from_margin(total_cells: u64, margin: S, m_n: u64, m_r: u64) -> Result<Self> {
        let two = S::from_count(2);
        let a = (S::one() + margin.clone()) / two.clone();
        let b = (S::one() - margin) / two;
        BoundInputs::new(total_cells, a, b, m_n, m_r)
    }

    fn total(&self) -> S {
        S::from_count(self.total_cells)
    }
}

fn check_edges(m_n: u64, m_r: u64) -> Result<()> {
    if m_n == 0 || m_r == 0 {
        return Err(Error::InvalidParameter("m_n and m_r must be positive".into()));
    }
    Ok(())
}

/// `⌈m_n / m_r⌉` in integer arithmetic.
pub fn ceil_ratio(m_n: u64, m_r: u64) -> u64 {
    m_n.div_ceil(m_r)
}

fn square<S: Scalar>(v: S) -> S {
    v.clone() * v
}

/// `m_n²/m_r² / (⌈m_n/m_r⌉+1)²`, the inverse of the fixed-partition ratio
/// ceiling.
fn fixed_fraction<S: Scalar>(m_n: u64, m_r: u64) -> S {
    let q = ceil_ratio(m_n, m_r) + 1;
    S::from_ratio((m_n * m_n) as i64, (m_r * m_r * q * q) as i64)
}

fn shifted_fraction<S: Scalar>(m_n: u64, m_r: u64) -> S {
    square(S::from_ratio(m_n as i64, (m_r + m_n - 1) as i64))
}

/// Exact national breakdown: flips strictly above this overturn, exactly at
/// it the election ties.
pub fn national_breakdown<S: Scalar>(inputs: &BoundInputs<S>) -> S {
    (inputs.a.clone() - inputs.b.clone()) / S::from_count(2) * inputs.total()
}

pub fn fixed_lower_bound<S: Scalar>(inputs: &BoundInputs<S>) -> S {
    fixed_fraction::<S>(inputs.m_n, inputs.m_r) * inputs.a.clone() / S::from_count(2) * inputs.total()
}

pub fn shifted_lower_bound<S: Scalar>(inputs: &BoundInputs<S>) -> S {
    shifted_fraction::<S>(inputs.m_n, inputs.m_r) * inputs.a.clone() / S::from_count(2) * inputs.total()
}

pub fn fixed_ratio_ceiling<S: Scalar>(m_n: u64, m_r: u64) -> Result<S> {
    check_edges(m_n, m_r)?;
    let q = ceil_ratio(m_n, m_r) + 1;
    Ok(S::from_ratio((q * q * m_r * m_r) as i64, (m_n * m_n) as i64))
}

pub fn shifted_ratio_ceiling<S: Scalar>(m_n: u64, m_r: u64) -> Result<S> {
    check_edges(m_n, m_r)?;
    Ok(square(S::from_ratio((m_r + m_n - 1) as i64, m_n as i64)))
}

/// `S_c` strictly below this keeps A winning any fixed partition.
pub fn fixed_sufficient_area<S: Scalar>(m_n: u64, m_r: u64, total_cells: u64) -> Result<S> {
    check_edges(m_n, m_r)?;
    Ok(fixed_fraction::<S>(m_n, m_r) * S::from_ratio(total_cells as i64, 2))
}

/// `S_c` strictly below this keeps A winning the best shifted partition.
pub fn shifted_sufficient_area<S: Scalar>(m_n: u64, m_r: u64, total_cells: u64) -> Result<S> {
    check_edges(m_n, m_r)?;
    Ok(shifted_fraction::<S>(m_n, m_r) * S::from_ratio(total_cells as i64, 2))
}

/// Divides a corollary bound by a partial flip probability `r ∈ (0, 1]`.
///
/// Only the fraction `r` of A votes inside a block flips, so a block area
/// that produced `bound` flips at `r = 1` produces `r · bound` flips; the
/// area-based argument then tolerates `bound / r` block cells. Tightness of
/// the divided value is not established.
pub fn partial_flip_adjusted<S: Scalar>(bound: S, r: S) -> Result<S> {
    if r <= S::zero() || r > S::one() {
        return Err(Error::InvalidParameter(format!("flip probability {r:?} must lie in (0, 1]")));
    }
    Ok(bound / r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<S> {
    pub national_exact: S,
    pub fixed_lower: S,
    pub shifted_lower: S,
    pub fixed_ratio_ceiling: S,
    pub shifted_ratio_ceiling: S,
}

impl<S: Scalar> BoundReport<S> {
    pub fn compute(inputs: &BoundInputs<S>) -> Self {
        BoundReport {
            national_exact: national_breakdown(inputs),
            fixed_lower: fixed_lower_bound(inputs),
            shifted_lower: shifted_lower_bound(inputs),
            fixed_ratio_ceiling: fixed_ratio_ceiling(inputs.m_n, inputs.m_r).expect("validated edges"),
            shifted_ratio_ceiling: shifted_ratio_ceiling(inputs.m_n, inputs.m_r).expect("validated edges"),
        }
    }

    /// Breakdown bounds rounded half up.
    pub fn rounded(&self) -> [i64; 3] {
        [
            self.national_exact.round_half_up(),
            self.fixed_lower.round_half_up(),
            self.shifted_lower.round_half_up(),
        ]
    }
}

/// Multi-candidate inputs: fractions sorted strictly descending, summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiCandidateInputs<S> {
    pub total_cells: u64,
    pub fractions: Vec<S>,
    pub m_n: u64,
    pub m_r: u64,
}

impl<S: Scalar> MultiCandidateInputs<S> {
    pub fn new(total_cells: u64, fractions: Vec<S>, m_n: u64, m_r: u64) -> Result<Self> {
        if fractions.len() < 2 {
            return Err(Error::InvalidFractions("need at least two candidates".into()));
        }
        let sum = fractions.iter().cloned().fold(S::zero(), |acc, f| acc + f);
        if !sum.approx_eq(&S::one()) {
            return Err(Error::InvalidFractions("fractions must sum to 1".into()));
        }
        if fractions.windows(2).any(|w| w[0] <= w[1]) || fractions.iter().any(|f| *f < S::zero()) {
            return Err(Error::InvalidFractions("fractions must be non-negative and strictly descending".into()));
        }
        check_edges(m_n, m_r)?;
        Ok(MultiCandidateInputs {
            total_cells,
            fractions,
            m_n,
            m_r,
        })
    }
}

/// `(national, regional_lower)` for n candidates under anti-A noise that
/// moves A votes to B.
pub fn multicandidate_bounds<S: Scalar>(inputs: &MultiCandidateInputs<S>) -> (S, S) {
    let total = S::from_count(inputs.total_cells);
    let a = inputs.fractions[0].clone();
    let b = inputs.fractions[1].clone();
    let two = S::from_count(2);
    let national = (a.clone() - b) / two.clone() * total.clone();
    let regional = fixed_fraction::<S>(inputs.m_n, inputs.m_r) * a / two * total;
    (national, regional)
}

/// A rounded table with row and column labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundTable {
    pub title: String,
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    pub cells: Vec<Vec<i64>>,
}

impl BoundTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut head = vec![self.corner.clone()];
        head.extend(self.columns.iter().cloned());
        out.push_str(&head.join(","));
        out.push('\n');
        for (label, row) in self.rows.iter().zip(&self.cells) {
            let mut fields = vec![label.clone()];
            fields.extend(row.iter().map(i64::to_string));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Column-aligned plain text.
    pub fn to_text(&self) -> String {
        let mut widths = vec![self.corner.len()];
        widths.extend(self.columns.iter().map(String::len));
        for (label, row) in self.rows.iter().zip(&self.cells) {
            widths[0] = widths[0].max(label.len());
            for (i, v) in row.iter().enumerate() {
                widths[i + 1] = widths[i + 1].max(v.to_string().len());
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let line = |cells: Vec<String>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        let mut head = vec![self.corner.clone()];
        head.extend(self.columns.iter().cloned());
        let header = line(head);
        let _ = writeln!(out, "{header}");
        let _ = writeln!(out, "{}", "-".repeat(header.len()));
        for (label, row) in self.rows.iter().zip(&self.cells) {
            let mut cells = vec![label.clone()];
            cells.extend(row.iter().map(i64::to_string));
            let _ = writeln!(out, "{}", line(cells));
        }
        out
    }
}

fn percent_label<S: Scalar>(margin: &S) -> String {
    let pct = margin.as_f64() * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round() as i64)
    } else {
        format!("{pct}%")
    }
}

/// Regional lower bounds for each `(m_n, m_r)` pair, then the exact national
/// bound, one row per margin `A − B`.
pub fn emit_table1<S: Scalar>(total_cells: u64, margins: &[S], ratios: &[(u64, u64)]) -> Result<BoundTable> {
    let mut columns: Vec<String> = ratios
        .iter()
        .map(|&(n, r)| format!("regional m_n/m_r={}", fmt_ratio(n, r)))
        .collect();
    columns.push("national".into());
    let mut cells = Vec::with_capacity(margins.len());
    for margin in margins {
        let mut row = Vec::with_capacity(ratios.len() + 1);
        for &(m_n, m_r) in ratios {
            let inputs = BoundInputs::from_margin(total_cells, margin.clone(), m_n, m_r)?;
            row.push(fixed_lower_bound(&inputs).round_half_up());
        }
        let inputs = BoundInputs::from_margin(total_cells, margin.clone(), 1, 1)?;
        row.push(national_breakdown(&inputs).round_half_up());
        cells.push(row);
    }
    Ok(BoundTable {
        title: format!("Stability margins of regional and national voting, N={total_cells}"),
        corner: "A-B".into(),
        columns,
        rows: margins.iter().map(percent_label).collect(),
        cells,
    })
}

/// For each `(m_n, m_r)` pair, the fixed-partition bound then the
/// best-shift bound, one row per margin.
pub fn emit_table2<S: Scalar>(total_cells: u64, margins: &[S], pairs: &[(u64, u64)]) -> Result<BoundTable> {
    let columns = pairs
        .iter()
        .flat_map(|&(n, r)| {
            [
                format!("m_n={n},m_r={r} fixed"),
                format!("m_n={n},m_r={r} shifted"),
            ]
        })
        .collect();
    let mut cells = Vec::with_capacity(margins.len());
    for margin in margins {
        let mut row = Vec::with_capacity(2 * pairs.len());
        for &(m_n, m_r) in pairs {
            let inputs = BoundInputs::from_margin(total_cells, margin.clone(), m_n, m_r)?;
            row.push(fixed_lower_bound(&inputs).round_half_up());
            row.push(shifted_lower_bound(&inputs).round_half_up());
        }
        cells.push(row);
    }
    Ok(BoundTable {
        title: format!("Regional voting improved by shifting, N={total_cells}"),
        corner: "A-B".into(),
        columns,
        rows: margins.iter().map(percent_label).collect(),
        cells,
    })
}

fn fmt_ratio(n: u64, r: u64) -> String {
    let g = gcd(n, r);
    if r / g == 1 {
        format!("{}", n / g)
    } else {
        format!("{}/{}", n / g, r / g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    fn pct(p: i64) -> Exact {
        Exact::new(p, 100)
    }

    fn inputs(margin: i64, m_n: u64, m_r: u64) -> BoundInputs<Exact> {
        BoundInputs::from_margin(10_000, pct(margin), m_n, m_r).unwrap()
    }

    #[test]
    fn national_examples() {
        assert_eq!(national_breakdown(&inputs(5, 1, 1)), Exact::from_integer(250));
        assert_eq!(national_breakdown(&inputs(20, 1, 1)), Exact::from_integer(1000));
        let unanimous = BoundInputs::new(10_000, Exact::from_integer(1), Exact::from_integer(0), 1, 1).unwrap();
        assert_eq!(national_breakdown(&unanimous), Exact::from_integer(5000));
    }

    #[test]
    fn fixed_lower_examples() {
        let v = fixed_lower_bound(&inputs(5, 3, 3));
        assert_eq!(v, Exact::new(2625, 4));
        assert_eq!(v.round_half_up(), 656);
        assert_eq!(fixed_lower_bound(&inputs(10, 4, 2)).round_half_up(), 1222);
        assert_eq!(fixed_lower_bound(&inputs(20, 4, 2)).round_half_up(), 1333);
    }

    #[test]
    fn shifted_lower_examples() {
        assert_eq!(shifted_lower_bound(&inputs(5, 3, 3)), Exact::from_integer(945));
        assert_eq!(shifted_lower_bound(&inputs(20, 4, 2)), Exact::from_integer(1920));
        let i = inputs(10, 6, 1);
        assert_eq!(shifted_lower_bound(&i), i.a / Exact::from_integer(2) * Exact::from_integer(10_000));
    }

    #[test]
    fn ratio_ceilings() {
        assert_eq!(fixed_ratio_ceiling::<Exact>(4, 4).unwrap(), Exact::from_integer(4));
        assert_eq!(fixed_ratio_ceiling::<Exact>(5, 8).unwrap(), Exact::new(1024, 100));
        assert_eq!(fixed_ratio_ceiling::<Exact>(4, 2).unwrap(), Exact::new(9, 4));
        assert_eq!(shifted_ratio_ceiling::<Exact>(5, 8).unwrap(), Exact::new(576, 100));
        assert_eq!(shifted_ratio_ceiling::<Exact>(7, 1).unwrap(), Exact::from_integer(1));
        assert_eq!(shifted_ratio_ceiling::<Exact>(3, 3).unwrap(), Exact::new(25, 9));
        assert!(fixed_ratio_ceiling::<Exact>(0, 3).is_err());
    }

    #[test]
    fn multicandidate_examples() {
        let m = MultiCandidateInputs::new(10_000, vec![pct(40), pct(35), pct(25)], 2, 2).unwrap();
        let (national, regional) = multicandidate_bounds(&m);
        assert_eq!(national, Exact::from_integer(250));
        assert_eq!(regional, Exact::from_integer(500));

        let two = MultiCandidateInputs::new(10_000, vec![pct(55), pct(45)], 4, 2).unwrap();
        let i = inputs(10, 4, 2);
        assert_eq!(multicandidate_bounds(&two), (national_breakdown(&i), fixed_lower_bound(&i)));

        assert!(MultiCandidateInputs::new(10_000, vec![pct(35), pct(40), pct(25)], 2, 2).is_err());
        assert!(MultiCandidateInputs::new(10_000, vec![pct(50), pct(40)], 2, 2).is_err());
    }

    #[test]
    fn invalid_fractions_rejected() {
        assert!(BoundInputs::new(100, pct(40), pct(60), 1, 1).is_err());
        assert!(BoundInputs::new(100, pct(50), pct(40), 1, 1).is_err());
        assert!(BoundInputs::new(100, pct(50), pct(50), 1, 1).is_err());
    }

    #[test]
    fn sufficient_thresholds_relate_to_corollaries() {
        // Replacing 50% N by (A/2) N turns the threshold into the corollary.
        for (m_n, m_r) in [(3, 3), (4, 2), (5, 8), (1, 6)] {
            let i = inputs(10, m_n, m_r);
            let t1: Exact = fixed_sufficient_area(m_n, m_r, 10_000).unwrap();
            let t2: Exact = shifted_sufficient_area(m_n, m_r, 10_000).unwrap();
            assert_eq!(t1 * i.a, fixed_lower_bound(&i));
            assert_eq!(t2 * i.a, shifted_lower_bound(&i));
        }
    }

    #[test]
    fn partial_flip_divides() {
        let v = partial_flip_adjusted(Exact::from_integer(945), Exact::new(7, 10)).unwrap();
        assert_eq!(v, Exact::from_integer(1350));
        assert!(partial_flip_adjusted(Exact::from_integer(1), Exact::from_integer(0)).is_err());
    }

    #[test]
    fn float_and_exact_agree() {
        let exact = BoundReport::compute(&inputs(15, 4, 2));
        let float = BoundReport::compute(&BoundInputs::<f64>::from_margin(10_000, 0.15, 4, 2).unwrap());
        assert_eq!(exact.rounded(), float.rounded());
        assert!((exact.shifted_lower.as_f64() - float.shifted_lower).abs() < 1e-9);
    }

    #[test]
    fn zero_population_tables() {
        let t = emit_table1(0, &[pct(5), pct(10)], &[(3, 3), (4, 2)]).unwrap();
        assert!(t.cells.iter().flatten().all(|&v| v == 0));
    }

    #[test]
    fn table_text_layout() {
        let t = emit_table1(10_000, &[pct(5)], &[(3, 3), (4, 2)]).unwrap();
        assert_eq!(t.to_csv(), "A-B,regional m_n/m_r=1,regional m_n/m_r=2,national\n5%,656,1167,250\n");
        let text = t.to_text();
        let row = text.lines().nth(3).unwrap();
        assert_eq!(row, format!("{:>3} | {:>18} | {:>18} | {:>8}", "5%", 656, 1167, 250));
    }
}
