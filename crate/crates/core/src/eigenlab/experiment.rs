use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{Image, PatternGallery};
use super::model::Recognizer;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::{Rng, SeedStream};

/// Grey-level change (out of 256) at which a pixel counts as affected.
pub const AFFECTED_LEVEL: f64 = 64.0 / 256.0;
const MAX_DISKS: usize = 4096;

/// Soft-edged filled disks of random grey level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiskNoise {
    /// Radius range as a fraction of the shorter image side.
    pub radius: (f64, f64),
    /// Width of the linear fade at the rim, in pixels.
    pub softness: f64,
    pub intensity: (f64, f64),
}

impl Default for DiskNoise {
    fn default() -> Self {
        DiskNoise {
            radius: (0.15, 0.35),
            softness: 1.5,
            intensity: (0.0, 1.0),
        }
    }
}

/// Adds disks until at least `target` of the pixels are affected. Returns
/// the noisy image and the affected fraction reached.
pub fn occlude<T: Real>(image: &Image<T>, target: f64, disks: &DiskNoise, rng: &mut Rng) -> Result<(Image<T>, f64)> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidNoise(format!("area fraction {target} outside [0, 1]")));
    }
    let (w, h) = (image.width, image.height);
    let n = (w * h) as f64;
    let mut out = image.clone();
    let affected = |img: &Image<T>| {
        img.pixels
            .iter()
            .zip(&image.pixels)
            .filter(|(a, b)| (**a - **b).abs().as_f64() >= AFFECTED_LEVEL)
            .count() as f64
            / n
    };
    let side = w.min(h) as f64;
    let mut frac = 0.0;
    for _ in 0..MAX_DISKS {
        if frac >= target {
            break;
        }
        let cx = rng.gen_range(0.0..w as f64);
        let cy = rng.gen_range(0.0..h as f64);
        let r = side * rng.gen_range(disks.radius.0..=disks.radius.1);
        let level = rng.gen_range(disks.intensity.0..=disks.intensity.1);
        let soft = disks.softness.max(1e-9);
        for y in 0..h {
            for x in 0..w {
                let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
                let alpha = ((r + soft / 2.0 - d) / soft).clamp(0.0, 1.0);
                if alpha > 0.0 {
                    let p = &mut out.pixels[y * w + x];
                    *p = *p + (T::lit(level) - *p) * T::lit(alpha);
                }
            }
        }
        frac = affected(&out);
    }
    Ok((out, frac))
}

fn add_sensor_noise<T: Real>(image: &mut Image<T>, sigma: f64, rng: &mut Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for p in image.pixels.iter_mut() {
        *p = T::lit((p.as_f64() + normal.sample(rng)).clamp(0.0, 1.0));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConjectureConfig {
    pub components: usize,
    pub region_counts: Vec<usize>,
    /// Target affected-area fractions.
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    /// Per-pixel Gaussian noise added to every occluded probe.
    pub sensor_sigma: f64,
    pub disks: DiskNoise,
    pub seed: u64,
}

impl Default for ConjectureConfig {
    fn default() -> Self {
        ConjectureConfig {
            components: 8,
            region_counts: vec![1, 6, 16, 24, 96, 150, 400, 1200],
            noise_levels: vec![0.0, 0.25, 0.5],
            trials: 100,
            sensor_sigma: 0.1,
            disks: DiskNoise::default(),
            seed: 7,
        }
    }
}

/// One trial of every gallery label at one `(R, noise level)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub region_count: usize,
    pub noise_level: f64,
    pub trial: usize,
    pub probes: usize,
    /// Probes whose regional decision was right.
    pub correct: usize,
    /// Probes whose global decision was right.
    pub global_correct: usize,
    /// Mean over probes of the share of regions won by the true label.
    pub fraction_regions_won: f64,
    /// Probes where the single-region decision differed from the global one
    /// (always zero when `region_count` is 1).
    pub r1_disagreements: usize,
}

impl TrialRow {
    pub fn rate(&self) -> f64 {
        self.correct as f64 / self.probes as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub region_count: usize,
    pub noise_level: f64,
    pub mean: f64,
    pub std_err: f64,
    pub global_mean: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureTable {
    pub config: ConjectureConfig,
    pub rows: Vec<TrialRow>,
}

impl ConjectureTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,noise_level,trial,correct,fraction_regions_won\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                r.region_count, r.noise_level, r.trial, r.correct, r.fraction_regions_won
            ));
        }
        out
    }

    /// Per-trial regional recognition rates for one cell of the table.
    pub fn rates(&self, region_count: usize, noise_level: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.region_count == region_count && r.noise_level == noise_level)
            .map(TrialRow::rate)
            .collect()
    }

    pub fn summary(&self) -> Vec<RateSummary> {
        let mut cells: BTreeMap<(usize, u64), Vec<&TrialRow>> = BTreeMap::new();
        for r in &self.rows {
            cells.entry((r.region_count, r.noise_level.to_bits())).or_default().push(r);
        }
        let mut out: Vec<RateSummary> = cells
            .into_values()
            .map(|rows| {
                let n = rows.len() as f64;
                let rates: Vec<f64> = rows.iter().map(|r| r.rate()).collect();
                let mean = rates.iter().sum::<f64>() / n;
                let var = if rows.len() > 1 {
                    rates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                RateSummary {
                    region_count: rows[0].region_count,
                    noise_level: rows[0].noise_level,
                    mean,
                    std_err: (var / n).sqrt(),
                    global_mean: rows
                        .iter()
                        .map(|r| r.global_correct as f64 / r.probes as f64)
                        .sum::<f64>()
                        / n,
                    trials: rows.len(),
                }
            })
            .collect();
        out.sort_by(|a, b| a.noise_level.total_cmp(&b.noise_level).then(a.region_count.cmp(&b.region_count)));
        out
    }
}

/// Recognition rates of regional PCA matching for every region count and
/// noise level. The noisy probes of a `(level, trial)` pair are shared by
/// every region count.
pub fn run_conjecture_experiment<T: Real>(gallery: &PatternGallery<T>, config: &ConjectureConfig) -> Result<ConjectureTable> {
    let recognizers: Vec<Recognizer<T>> = config
        .region_counts
        .iter()
        .map(|&r| Recognizer::train(gallery, r, config.components.min(gallery.len() - 1)))
        .collect::<Result<_>>()?;
    let stream = SeedStream::new(config.seed, "eigenlab-probes");
    let mut rows = Vec::new();
    for (li, &level) in config.noise_levels.iter().enumerate() {
        let level_stream = stream.child(&format!("level-{li}"));
        let trial_rows: Vec<Vec<TrialRow>> = (0..config.trials)
            .into_par_iter()
            .map(|t| -> Result<Vec<TrialRow>> {
                let mut rng = level_stream.rng(t as u64);
                let probes: Vec<Image<T>> = gallery
                    .patterns
                    .iter()
                    .map(|p| {
                        if level <= 0.0 {
                            return Ok(p.clone());
                        }
                        let (mut img, _) = occlude(p, level, &config.disks, &mut rng)?;
                        add_sensor_noise(&mut img, config.sensor_sigma, &mut rng);
                        Ok(img)
                    })
                    .collect::<Result<_>>()?;
                recognizers
                    .iter()
                    .map(|rec| {
                        let mut row = TrialRow {
                            region_count: rec.regional.region_count(),
                            noise_level: level,
                            trial: t,
                            probes: probes.len(),
                            correct: 0,
                            global_correct: 0,
                            fraction_regions_won: 0.0,
                            r1_disagreements: 0,
                        };
                        for (label, probe) in probes.iter().enumerate() {
                            let out = rec.recognize(probe)?;
                            row.correct += usize::from(out.regional.label == label);
                            row.global_correct += usize::from(out.global.label == label);
                            row.fraction_regions_won += out.fraction_won(label);
                            if out.regions == 1 && out.regional.label != out.global.label {
                                row.r1_disagreements += 1;
                            }
                        }
                        row.fraction_regions_won /= probes.len() as f64;
                        Ok(row)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        rows.extend(trial_rows.into_iter().flatten());
    }
    rows.sort_by(|a, b| {
        a.noise_level
            .total_cmp(&b.noise_level)
            .then(a.region_count.cmp(&b.region_count))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(ConjectureTable {
        config: config.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn occlusion_reaches_target() {
        let g = PatternGallery::<f64>::synthetic(40, 60, 2, 1).unwrap();
        let mut rng = rng_from_seed(3);
        for target in [0.0, 0.25, 0.5] {
            let (img, frac) = occlude(&g.patterns[0], target, &DiskNoise::default(), &mut rng).unwrap();
            assert!(frac >= target);
            if target == 0.0 {
                assert_eq!(img, g.patterns[0]);
            }
        }
    }

    #[test]
    fn clean_probes_are_all_recognized() {
        let g = PatternGallery::<f64>::synthetic(40, 60, 16, 5).unwrap();
        let cfg = ConjectureConfig {
            noise_levels: vec![0.0],
            trials: 2,
            ..ConjectureConfig::default()
        };
        let table = run_conjecture_experiment(&g, &cfg).unwrap();
        assert!(table.rows.iter().all(|r| r.correct == r.probes && r.r1_disagreements == 0));
        assert!(table.to_csv().starts_with("R,noise_level,trial,correct,fraction_regions_won\n1,0,0,16,1.000000\n"));
    }
}
