use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{Image, PatternGallery};
use super::linalg::{dot, norm, orthogonalize, power_eigen};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative distance gap below which two gallery entries count as equally near.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// PCA model of one set of equally sized sample vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenModel<T> {
    pub mean: Vec<T>,
    /// Orthonormal rows, ordered by decreasing eigenvalue.
    pub basis: Vec<Vec<T>>,
    /// Eigenvalues of the sample scatter matrix.
    pub eigenvalues: Vec<T>,
    /// Coordinates of each training sample, indexed by label.
    pub coords: Vec<Vec<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub label: usize,
    pub tie: bool,
}

impl<T: Real> EigenModel<T> {
    /// Fits up to `k` components via the `P × P` Gram matrix. Returns `None`
    /// when every sample is identical.
    pub fn fit(samples: &[Vec<T>], k: usize) -> Result<Option<Self>> {
        let p = samples.len();
        if p < 2 {
            return Err(Error::InvalidParameter("PCA needs at least two samples".into()));
        }
        if k == 0 || k > p - 1 {
            return Err(Error::InvalidParameter(format!("component count {k} outside 1..={}", p - 1)));
        }
        let dim = samples[0].len();
        if samples.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidParameter("samples differ in length".into()));
        }
        let inv_p = T::one() / T::lit(p as f64);
        let mean: Vec<T> = (0..dim)
            .map(|j| samples.iter().map(|s| s[j]).sum::<T>() * inv_p)
            .collect();
        let centered: Vec<Vec<T>> = samples
            .iter()
            .map(|s| s.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
            .collect();
        let gram: Vec<Vec<T>> = (0..p)
            .map(|i| (0..p).map(|j| dot(&centered[i], &centered[j])).collect())
            .collect();
        let (values, vectors) = power_eigen(&gram, k);
        if values.is_empty() {
            return Ok(None);
        }
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(values.len());
        let mut eigenvalues = Vec::with_capacity(values.len());
        for (lambda, v) in values.into_iter().zip(vectors) {
            let mut u: Vec<T> = (0..dim)
                .map(|j| (0..p).map(|i| v[i] * centered[i][j]).sum::<T>())
                .collect();
            orthogonalize(&mut u, &basis);
            let len = norm(&u);
            if len <= T::epsilon() * lambda.sqrt() {
                break;
            }
            u.iter_mut().for_each(|x| *x = *x / len);
            basis.push(u);
            eigenvalues.push(lambda);
        }
        let coords = centered
            .iter()
            .map(|c| basis.iter().map(|u| dot(u, c)).collect())
            .collect();
        Ok(Some(EigenModel {
            mean,
            basis,
            eigenvalues,
            coords,
        }))
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, x: &[T]) -> Vec<T> {
        let centered: Vec<T> = x.iter().zip(&self.mean).map(|(&a, &m)| a - m).collect();
        self.basis.iter().map(|u| dot(u, &centered)).collect()
    }

    pub fn reconstruct(&self, coords: &[T]) -> Vec<T> {
        let mut out = self.mean.clone();
        for (c, u) in coords.iter().zip(&self.basis) {
            for (o, &b) in out.iter_mut().zip(u) {
                *o = *o + *c * b;
            }
        }
        out
    }

    /// Nearest training sample in eigenspace; ties go to the lowest label.
    pub fn nearest(&self, x: &[T]) -> Match {
        let q = self.project(x);
        let dists: Vec<T> = self
            .coords
            .iter()
            .map(|c| c.iter().zip(&q).map(|(&a, &b)| (a - b) * (a - b)).sum())
            .collect();
        let best = dists.iter().copied().fold(T::infinity(), T::min);
        let slack = T::lit(TIE_TOLERANCE) * best.max(T::min_positive_value());
        let mut near = dists.iter().enumerate().filter(|(_, &d)| d - best <= slack);
        let label = near.next().map_or(0, |(i, _)| i);
        Match {
            label,
            tie: near.next().is_some(),
        }
    }
}

/// Whole-image model; a gallery of identical images is rejected.
pub fn train_global<T: Real>(gallery: &PatternGallery<T>, k: usize) -> Result<EigenModel<T>> {
    let samples: Vec<Vec<T>> = gallery.patterns.iter().map(|p| p.pixels.clone()).collect();
    EigenModel::fit(&samples, k)?.ok_or(Error::DegenerateGallery)
}

/// Split of an image into `cols × rows` equal rectangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLayout {
    pub cols: usize,
    pub rows: usize,
    pub region_w: usize,
    pub region_h: usize,
}

impl RegionLayout {
    /// The most nearly square split into `count` regions whose sides divide
    /// the image sides.
    pub fn for_count(width: usize, height: usize, count: usize) -> Result<Self> {
        let layout = (1..=count)
            .filter(|c| count % c == 0)
            .map(|cols| (cols, count / cols))
            .filter(|&(c, r)| width % c == 0 && height % r == 0)
            .map(|(cols, rows)| RegionLayout {
                cols,
                rows,
                region_w: width / cols,
                region_h: height / rows,
            })
            .min_by(|a, b| {
                let skew = |l: &RegionLayout| (l.region_w as f64 / l.region_h as f64).ln().abs();
                skew(a).total_cmp(&skew(b)).then(a.cols.cmp(&b.cols))
            })
            .ok_or_else(|| {
                Error::InvalidParameter(format!("{count} regions do not tile a {width}x{height} image"))
            })?;
        if layout.region_w * layout.region_h < 2 {
            return Err(Error::InvalidParameter(format!(
                "{count} regions leave fewer than 2 pixels per region"
            )));
        }
        Ok(layout)
    }

    pub fn count(&self) -> usize {
        self.cols * self.rows
    }

    /// Pixels of region `r`, row-major within the region.
    pub fn extract<T: Real>(&self, image: &Image<T>, r: usize) -> Vec<T> {
        let (x0, y0) = ((r % self.cols) * self.region_w, (r / self.cols) * self.region_h);
        let mut out = Vec::with_capacity(self.region_w * self.region_h);
        for y in y0..y0 + self.region_h {
            let row = y * image.width;
            out.extend_from_slice(&image.pixels[row + x0..row + x0 + self.region_w]);
        }
        out
    }
}

/// One independent model per region; `None` where the gallery is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionalEigenModel<T> {
    pub width: usize,
    pub height: usize,
    pub layout: RegionLayout,
    pub models: Vec<Option<EigenModel<T>>>,
}

pub fn train_regional<T: Real>(gallery: &PatternGallery<T>, region_count: usize, k: usize) -> Result<RegionalEigenModel<T>> {
    let layout = RegionLayout::for_count(gallery.width, gallery.height, region_count)?;
    let models = (0..layout.count())
        .into_par_iter()
        .map(|r| {
            let samples: Vec<Vec<T>> = gallery.patterns.iter().map(|p| layout.extract(p, r)).collect();
            EigenModel::fit(&samples, k)
        })
        .collect::<Result<_>>()?;
    Ok(RegionalEigenModel {
        width: gallery.width,
        height: gallery.height,
        layout,
        models,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionalMatch {
    pub label: usize,
    /// Several labels shared the most region wins.
    pub tie: bool,
    pub votes: Vec<u64>,
    pub abstained: u64,
}

impl<T: Real> RegionalEigenModel<T> {
    pub fn region_count(&self) -> usize {
        self.layout.count()
    }

    /// Each region votes for its nearest label; the plurality wins and ties
    /// go to the lowest label.
    pub fn recognize(&self, probe: &Image<T>, labels: usize) -> Result<RegionalMatch> {
        if (probe.width, probe.height) != (self.width, self.height) {
            return Err(Error::ImageMismatch {
                got_w: probe.width,
                got_h: probe.height,
                want_w: self.width,
                want_h: self.height,
            });
        }
        let mut votes = vec![0u64; labels];
        let mut abstained = 0;
        for (r, model) in self.models.iter().enumerate() {
            match model {
                Some(m) => votes[m.nearest(&self.layout.extract(probe, r)).label] += 1,
                None => abstained += 1,
            }
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        let mut leaders = votes.iter().enumerate().filter(|(_, &v)| v == top);
        let label = leaders.next().map_or(0, |(i, _)| i);
        Ok(RegionalMatch {
            label,
            tie: leaders.next().is_some(),
            votes,
            abstained,
        })
    }
}

/// Global and regional decisions for one probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecognitionOutcome {
    pub global: Match,
    pub regional: RegionalMatch,
    pub regions: usize,
}

impl RecognitionOutcome {
    /// Share of all regions won by `label`.
    pub fn fraction_won(&self, label: usize) -> f64 {
        self.regional.votes.get(label).copied().unwrap_or(0) as f64 / self.regions as f64
    }
}

/// Paired global and regional models over one gallery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recognizer<T> {
    pub labels: usize,
    pub global: EigenModel<T>,
    pub regional: RegionalEigenModel<T>,
}

impl<T: Real> Recognizer<T> {
    pub fn train(gallery: &PatternGallery<T>, region_count: usize, k: usize) -> Result<Self> {
        Ok(Recognizer {
            labels: gallery.len(),
            global: train_global(gallery, k)?,
            regional: train_regional(gallery, region_count, k)?,
        })
    }

    pub fn recognize(&self, probe: &Image<T>) -> Result<RecognitionOutcome> {
        let regional = self.regional.recognize(probe, self.labels)?;
        Ok(RecognitionOutcome {
            global: self.global.nearest(&probe.pixels),
            regional,
            regions: self.regional.region_count(),
        })
    }
}

/// Free-function form of [`Recognizer::recognize`].
pub fn recognize<T: Real>(model: &Recognizer<T>, probe: &Image<T>) -> Result<RecognitionOutcome> {
    model.recognize(probe)
}
