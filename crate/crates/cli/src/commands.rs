use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use regvote::bounds::{emit_table1, emit_table2, fixed_ratio_ceiling, shifted_ratio_ceiling, BoundTable};
use regvote::breakdown::{
    exhaustive_breakdown, generate_grid, randomized_breakdown, salt_pepper_threshold, BlockFamily, BreakdownResult,
    GenMode, GridGenSpec, OverturnCurve, Scheme,
};
use regvote::eigenlab::{run_conjecture_experiment, ConjectureConfig, DiskNoise, PatternGallery};
use regvote::flag::{generate_flag_instance, FlagConfig, FlagInstance, FlagTallies};
use regvote::noise::{random_anchor_placement, BlockNoiseSpec};
use regvote::shifting::{best_partition, shift_histogram, sweep_partitions, sweep_to_csv};
use regvote::voting::tally_global;
use regvote::{Error, Exact, Grid, GridDims};

use crate::output::Report;

/// A finished command: its report and whether every check matched.
pub struct Run {
    pub report: Report,
    pub matched: bool,
}

fn config_value<C: Serialize>(c: &C) -> Value {
    serde_json::to_value(c).expect("config serializes")
}

// ---------------------------------------------------------------- bounds

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub total_cells: u64,
    /// Margins `A − B` in percent.
    pub table1_margins: Vec<f64>,
    pub table1_ratios: Vec<(u64, u64)>,
    pub table2_margins: Vec<f64>,
    pub table2_pairs: Vec<(u64, u64)>,
    pub seed: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            total_cells: 10_000,
            table1_margins: vec![5.0, 10.0, 20.0],
            table1_ratios: vec![(3, 3), (4, 2)],
            table2_margins: vec![5.0, 10.0, 15.0, 20.0],
            table2_pairs: vec![(3, 3), (4, 2)],
            seed: 0,
        }
    }
}

const TABLE1_EXPECTED: [[i64; 3]; 3] = [[656, 1167, 250], [688, 1222, 500], [750, 1333, 1000]];
const TABLE2_EXPECTED: [[i64; 4]; 4] = [
    [656, 945, 1167, 1680],
    [688, 990, 1222, 1760],
    [719, 1035, 1278, 1840],
    [750, 1080, 1333, 1920],
];

/// Percent to an exact fraction, to six decimal places.
fn percent(p: f64) -> Result<Exact> {
    if !p.is_finite() || !(0.0..=100.0).contains(&p) {
        bail!(Error::InvalidParameter(format!("margin {p}% outside [0, 100]")));
    }
    Ok(Exact::new((p * 1e6).round() as i64, 100_000_000))
}

fn compare(table: &BoundTable, expected: Option<Vec<Vec<i64>>>) -> (&'static str, bool) {
    match expected {
        None => ("no reference", true),
        Some(e) if e == table.cells => ("match", true),
        Some(_) => ("MISMATCH", false),
    }
}

pub fn bounds(c: &BoundsConfig) -> Result<Run> {
    let m1: Vec<Exact> = c.table1_margins.iter().map(|&p| percent(p)).collect::<Result<_>>()?;
    let m2: Vec<Exact> = c.table2_margins.iter().map(|&p| percent(p)).collect::<Result<_>>()?;
    let t1 = emit_table1(c.total_cells, &m1, &c.table1_ratios)?;
    let t2 = emit_table2(c.total_cells, &m2, &c.table2_pairs)?;

    let d = BoundsConfig::default();
    let default_shape = (&c.table1_margins, &c.table1_ratios, &c.table2_margins, &c.table2_pairs)
        == (&d.table1_margins, &d.table1_ratios, &d.table2_margins, &d.table2_pairs);
    let zeros = |t: &BoundTable| t.cells.iter().map(|r| vec![0; r.len()]).collect::<Vec<_>>();
    let (e1, e2) = match (default_shape, c.total_cells) {
        (true, 10_000) => (
            Some(TABLE1_EXPECTED.iter().map(|r| r.to_vec()).collect()),
            Some(TABLE2_EXPECTED.iter().map(|r| r.to_vec()).collect()),
        ),
        (_, 0) => (Some(zeros(&t1)), Some(zeros(&t2))),
        _ => (None, None),
    };
    let (s1, ok1) = compare(&t1, e1);
    let (s2, ok2) = compare(&t2, e2);

    let text = format!("{}table1: {s1}\n\n{}table2: {s2}\n", t1.to_text(), t2.to_text());
    let report = Report {
        command: "bounds",
        config: config_value(c),
        tables: vec![("table1".into(), t1.to_csv()), ("table2".into(), t2.to_csv())],
        text,
        result: json!({
            "table1": { "table": t1, "status": s1 },
            "table2": { "table": t2, "status": s2 },
        }),
    };
    Ok(Run {
        report,
        matched: ok1 && ok2,
    })
}

// ------------------------------------------------------------------ flag

fn tally_row(stage: &str, t: &FlagTallies) -> String {
    format!(
        "{stage},{},{},{},{},{},{},{},{},{}\n",
        t.white,
        t.black,
        t.global,
        t.coarse.white,
        t.coarse.black,
        t.coarse.tied,
        t.fine.white,
        t.fine.black,
        t.fine.tied
    )
}

pub fn flag(c: &FlagConfig) -> Result<Run> {
    let found = generate_flag_instance(c)?;
    let header = "stage,white,black,global_winner,coarse_white,coarse_black,coarse_tied,fine_white,fine_black,fine_tied\n";
    let (tables, text, result, matched) = match &found {
        Some(inst) => {
            let csv = format!("{header}{}{}", tally_row("before", &inst.before), tally_row("after", &inst.after));
            let cells = flag_cells_csv(inst);
            let text = format!(
                "{}\nflag before noise ('.' White, '#' Black):\n{}\nafter noise:\n{}",
                inst.report(),
                FlagInstance::render(&inst.flag),
                FlagInstance::render(&inst.noisy)
            );
            let ok = inst.is_success() && inst.conservation_holds();
            (
                vec![("flag".to_string(), csv), ("flag_cells".to_string(), cells)],
                text,
                json!({ "found": true, "success": inst.is_success(), "conservation": inst.conservation_holds(), "instance": inst }),
                ok,
            )
        }
        None => (
            vec![("flag".to_string(), header.to_string())],
            format!("no instance found in {} attempts\n", c.attempts),
            json!({ "found": false }),
            false,
        ),
    };
    Ok(Run {
        report: Report {
            command: "flag",
            config: config_value(c),
            tables,
            text,
            result,
        },
        matched,
    })
}

fn flag_cells_csv(inst: &FlagInstance) -> String {
    let mut out = String::from("x,y,before,after\n");
    for y in 0..inst.flag.height() {
        for x in 0..inst.flag.width() {
            let _ = writeln!(out, "{x},{y},{},{}", inst.flag.get(x, y).0, inst.noisy.get(x, y).0);
        }
    }
    out
}

// ----------------------------------------------------------------- sweep

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub width: usize,
    pub height: usize,
    pub m_r: usize,
    pub m_n: usize,
    /// Top-left cells of the noise blocks.
    pub anchors: Vec<(usize, usize)>,
    /// When positive, this many blocks are placed at random instead.
    pub random_blocks: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            width: 24,
            height: 24,
            m_r: 8,
            m_n: 5,
            anchors: vec![(9, 7)],
            random_blocks: 0,
            seed: 0,
        }
    }
}

pub fn sweep(c: &SweepConfig) -> Result<Run> {
    let dims = GridDims::new(c.width, c.height);
    let spec = if c.random_blocks > 0 {
        if !c.anchors.is_empty() {
            bail!(Error::InvalidParameter("set either `anchors` or `random_blocks`, not both".into()));
        }
        random_anchor_placement(dims, c.m_n, c.random_blocks, c.seed)?
    } else {
        BlockNoiseSpec::anti_a(c.m_n, c.anchors.clone())
    };
    let reports = sweep_partitions(dims, c.m_r, &spec)?;
    let best = best_partition(dims, c.m_r, &spec)?;
    let histogram = shift_histogram(&reports);

    let m_n = c.m_n as u64;
    let m_r = c.m_r as u64;
    let ceil1: Exact = fixed_ratio_ceiling(m_n, m_r)?;
    let ceil2: Exact = shifted_ratio_ceiling(m_n, m_r)?;
    let worst = reports.iter().filter_map(|r| r.exact_ratio()).max();
    let best_ratio = best.exact_ratio();
    let within1 = worst.map_or(true, |w| w <= ceil1);
    let within2 = best_ratio.map_or(true, |b| b <= ceil2);

    let mut hist_csv = String::from("contaminated_regions,shifts\n");
    for (k, n) in &histogram {
        let _ = writeln!(hist_csv, "{k},{n}");
    }
    let show = |r: Option<Exact>| r.map_or_else(|| "-".to_string(), |r| r.to_string());
    let mut text = String::new();
    let _ = writeln!(text, "{} blocks of {}x{} on {}x{}, regions {}x{}", spec.block_count(), c.m_n, c.m_n, c.width, c.height, c.m_r, c.m_r);
    let _ = writeln!(text, "shifts: {}", reports.len());
    for (k, n) in &histogram {
        let _ = writeln!(text, "  {k} contaminated regions: {n} shifts");
    }
    let _ = writeln!(text, "worst S_r/S_c: {} (ceiling {ceil1})", show(worst));
    let _ = writeln!(
        text,
        "best shift ({}, {}): S_r/S_c {} (ceiling {ceil2})",
        best.partition.dx,
        best.partition.dy,
        show(best_ratio)
    );
    let matched = within1 && within2;
    let _ = writeln!(text, "{}", if matched { "within ceilings" } else { "CEILING EXCEEDED" });

    Ok(Run {
        report: Report {
            command: "sweep",
            config: config_value(c),
            tables: vec![("sweep".into(), sweep_to_csv(&reports)), ("histogram".into(), hist_csv)],
            text,
            result: json!({
                "noise": spec,
                "shifts": reports,
                "histogram": histogram,
                "best": best,
                "worst_ratio": worst.map(|r| r.to_string()),
                "best_ratio": best_ratio.map(|r| r.to_string()),
                "fixed_ceiling": ceil1.to_string(),
                "shifted_ceiling": ceil2.to_string(),
            }),
        },
        matched,
    })
}

// ------------------------------------------------------------- breakdown

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BreakdownConfig {
    pub width: usize,
    pub height: usize,
    pub a_frac: f64,
    /// `uniform_random`, `per_region_margin` or `adversarial_clustered`.
    pub generator: String,
    /// Grid file (text or JSON) used instead of the generator.
    pub grid_path: Option<PathBuf>,
    pub m_r: usize,
    /// Any of `global`, `regional`, `best_shift`.
    pub schemes: Vec<String>,
    /// `exhaustive`, `randomized` or `salt_pepper`.
    pub search: String,
    pub flip_budget: usize,
    pub m_n: usize,
    pub min_blocks: usize,
    pub max_blocks: usize,
    pub trials: usize,
    pub rates: Vec<f64>,
    pub seed: u64,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        BreakdownConfig {
            width: 6,
            height: 6,
            a_frac: 20.0 / 36.0,
            generator: "uniform_random".into(),
            grid_path: None,
            m_r: 3,
            schemes: vec!["global".into(), "regional".into()],
            search: "exhaustive".into(),
            flip_budget: 12,
            m_n: 1,
            min_blocks: 1,
            max_blocks: 36,
            trials: 1000,
            rates: (1..=10).map(|i| f64::from(i) * 0.02).collect(),
            seed: 0,
        }
    }
}

fn parse_scheme(name: &str, m_r: usize) -> Result<Scheme> {
    Ok(match name {
        "global" => Scheme::Global,
        "regional" => Scheme::regional(m_r)?,
        "best_shift" => Scheme::RegionalBestShift { m_r },
        other => bail!(Error::InvalidParameter(format!(
            "unknown scheme `{other}` (known: global, regional, best_shift)"
        ))),
    })
}

fn load_grid(c: &BreakdownConfig) -> Result<Grid> {
    if let Some(path) = &c.grid_path {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading grid {}", path.display()))?;
        let grid = if text.trim_start().starts_with('{') {
            Grid::from_json(&text)?
        } else {
            Grid::from_text(&text)?
        };
        return Ok(grid);
    }
    let mode = match c.generator.as_str() {
        "uniform_random" => GenMode::UniformRandom,
        "per_region_margin" => GenMode::PerRegionMargin { m_r: c.m_r },
        "adversarial_clustered" => GenMode::AdversarialClustered,
        other => bail!(Error::InvalidParameter(format!(
            "unknown generator `{other}` (known: uniform_random, per_region_margin, adversarial_clustered)"
        ))),
    };
    Ok(generate_grid(&GridGenSpec {
        width: c.width,
        height: c.height,
        a_frac: c.a_frac,
        mode,
        seed: c.seed,
    })?)
}

fn global_closed_form(grid: &Grid) -> Option<usize> {
    let mut counts = tally_global(grid).votes_per_candidate;
    counts.sort_unstable_by(|a, b| b.cmp(a));
    (counts.len() >= 2 && counts[0] > counts[1]).then(|| ((counts[0] - counts[1]) / 2 + 1) as usize)
}

pub fn breakdown(c: &BreakdownConfig) -> Result<Run> {
    let grid = load_grid(c)?;
    let schemes: Vec<Scheme> = c.schemes.iter().map(|s| parse_scheme(s, c.m_r)).collect::<Result<_>>()?;
    if schemes.is_empty() {
        bail!(Error::InvalidParameter("`schemes` is empty".into()));
    }
    let mut text = String::new();
    let counts = tally_global(&grid).votes_per_candidate;
    let _ = writeln!(text, "grid {}x{}, votes {:?}", grid.width(), grid.height(), counts);
    let mut matched = true;

    let (tables, result) = if c.search == "salt_pepper" {
        let curves: Vec<OverturnCurve> = schemes
            .iter()
            .map(|&s| salt_pepper_threshold(&grid, s, &c.rates, c.trials, c.seed))
            .collect::<regvote::Result<_>>()?;
        let mut csv = String::from("scheme,rate,trials,overturns,frequency,ci_low,ci_high\n");
        for curve in &curves {
            let label = curve.scheme.label();
            for p in &curve.points {
                let _ = writeln!(
                    csv,
                    "{label},{},{},{},{:.6},{:.6},{:.6}",
                    p.rate, p.trials, p.overturns, p.frequency, p.ci_low, p.ci_high
                );
            }
            let t = curve.threshold().map_or_else(|| "not reached".to_string(), |t| format!("{t:.4}"));
            let _ = writeln!(text, "{label}: 50% overturn rate {t}");
        }
        let thresholds: Vec<Option<f64>> = curves.iter().map(OverturnCurve::threshold).collect();
        (
            vec![("curve".to_string(), csv)],
            json!({ "curves": curves, "thresholds": thresholds }),
        )
    } else {
        let mut results: Vec<BreakdownResult> = Vec::with_capacity(schemes.len());
        for &scheme in &schemes {
            let r = match c.search.as_str() {
                "exhaustive" => match exhaustive_breakdown(&grid, scheme, c.flip_budget) {
                    Err(Error::BudgetExhausted { .. }) => BreakdownResult {
                        scheme,
                        min_overturning_flips: None,
                        search_mode: regvote::breakdown::SearchMode::Exhaustive,
                        witness: None,
                    },
                    other => other?,
                },
                "randomized" => randomized_breakdown(
                    &grid,
                    scheme,
                    BlockFamily {
                        m_n: c.m_n,
                        min_blocks: c.min_blocks,
                        max_blocks: c.max_blocks,
                    },
                    c.trials,
                    c.seed,
                )?,
                other => bail!(Error::InvalidParameter(format!(
                    "unknown search `{other}` (known: exhaustive, randomized, salt_pepper)"
                ))),
            };
            let replays = r.witness.is_none() || r.replay(&grid)?;
            let closed = match (scheme, c.search.as_str()) {
                (Scheme::Global, "exhaustive") => global_closed_form(&grid).filter(|&k| k <= c.flip_budget),
                _ => r.min_overturning_flips,
            };
            let ok = replays && closed == r.min_overturning_flips;
            matched &= ok;
            let shown = r.min_overturning_flips.map_or_else(|| "none within budget".to_string(), |k| k.to_string());
            let _ = writeln!(text, "{}: minimum overturning flips {shown}{}", scheme.label(), if ok { "" } else { " (CHECK FAILED)" });
            results.push(r);
        }
        let mut csv = String::from("scheme,search,min_overturning_flips,witness_blocks,witness_area\n");
        for r in &results {
            let (blocks, area) = r
                .witness
                .as_ref()
                .map_or((0, 0), |w| (w.spec.block_count(), w.spec.concentrated_area()));
            let _ = writeln!(
                csv,
                "{},{},{},{blocks},{area}",
                r.scheme.label(),
                c.search,
                r.min_overturning_flips.map_or_else(String::new, |k| k.to_string())
            );
        }
        (vec![("breakdown".to_string(), csv)], json!({ "results": results }))
    };

    Ok(Run {
        report: Report {
            command: "breakdown",
            config: config_value(c),
            tables,
            text,
            result,
        },
        matched,
    })
}

// ----------------------------------------------------------------- eigen

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenConfig {
    pub width: usize,
    pub height: usize,
    pub patterns: usize,
    pub gallery_seed: u64,
    /// Plain PGM gallery used instead of the synthetic one.
    pub gallery_path: Option<PathBuf>,
    pub components: usize,
    pub region_counts: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    pub sensor_sigma: f64,
    pub disks: DiskNoise,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        let e = ConjectureConfig::default();
        EigenConfig {
            width: 40,
            height: 60,
            patterns: 16,
            gallery_seed: 1,
            gallery_path: None,
            components: e.components,
            region_counts: e.region_counts,
            noise_levels: e.noise_levels,
            trials: e.trials,
            sensor_sigma: e.sensor_sigma,
            disks: e.disks,
            seed: e.seed,
        }
    }
}

pub fn eigen(c: &EigenConfig) -> Result<Run> {
    let gallery = match &c.gallery_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading gallery {}", path.display()))?;
            PatternGallery::<f64>::from_pgm(&text)?
        }
        None => PatternGallery::<f64>::synthetic(c.width, c.height, c.patterns, c.gallery_seed)?,
    };
    let experiment = ConjectureConfig {
        components: c.components,
        region_counts: c.region_counts.clone(),
        noise_levels: c.noise_levels.clone(),
        trials: c.trials,
        sensor_sigma: c.sensor_sigma,
        disks: c.disks,
        seed: c.seed,
    };
    let table = run_conjecture_experiment(&gallery, &experiment)?;
    let summary = table.summary();

    let mut summary_csv = String::from("R,noise_level,mean_rate,std_err,global_mean_rate,trials\n");
    let mut text = format!("gallery {} patterns of {}x{}\n", gallery.len(), gallery.width, gallery.height);
    let _ = writeln!(text, "{:>6} {:>6} {:>8} {:>8} {:>8}", "R", "noise", "rate", "stderr", "global");
    for s in &summary {
        let _ = writeln!(
            summary_csv,
            "{},{},{:.6},{:.6},{:.6},{}",
            s.region_count, s.noise_level, s.mean, s.std_err, s.global_mean, s.trials
        );
        let _ = writeln!(
            text,
            "{:>6} {:>6} {:>8.4} {:>8.4} {:>8.4}",
            s.region_count, s.noise_level, s.mean, s.std_err, s.global_mean
        );
    }
    let disagreements: usize = table.rows.iter().map(|r| r.r1_disagreements).sum();
    let _ = writeln!(text, "single-region vs global disagreements: {disagreements}");
    let clean_ok = summary.iter().filter(|s| s.noise_level == 0.0).all(|s| s.mean == 1.0);

    Ok(Run {
        report: Report {
            command: "eigen",
            config: config_value(c),
            tables: vec![("eigen".into(), table.to_csv()), ("eigen_summary".into(), summary_csv)],
            text,
            result: json!({ "summary": summary, "rows": table.rows, "r1_disagreements": disagreements }),
        },
        matched: disagreements == 0 && clean_ok,
    })
}
