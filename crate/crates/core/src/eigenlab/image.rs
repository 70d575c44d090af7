use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::rng_from_seed;

/// Row-major grayscale image with intensities nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image<T> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Image {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Image<T>) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::ImageMismatch {
                got_w: other.width,
                got_h: other.height,
                want_w: self.width,
                want_h: self.height,
            });
        }
        Ok(())
    }

    /// Plain PGM (`P2`) with the given maximum grey level.
    pub fn write_pgm<W: Write>(&self, mut out: W, maxval: u16) -> Result<()> {
        let scale = f64::from(maxval);
        writeln!(out, "P2\n{} {}\n{maxval}", self.width, self.height)?;
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row
                .iter()
                .map(|p| ((p.as_f64().clamp(0.0, 1.0) * scale).round() as u32).to_string())
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_pgm(&self, maxval: u16) -> String {
        let mut buf = Vec::new();
        self.write_pgm(&mut buf, maxval).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Reads every plain PGM image in `input`; `#` comments are skipped.
pub fn read_pgm_all<T: Real, R: BufRead>(input: R) -> Result<Vec<Image<T>>> {
    let mut tokens = Vec::new();
    for line in input.lines() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("");
        tokens.extend(body.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    let mut images = Vec::new();
    let num = |it: &mut std::vec::IntoIter<String>, what: &str| -> Result<usize> {
        let t = it.next().ok_or_else(|| Error::Parse(format!("missing {what}")))?;
        t.parse().map_err(|_| Error::Parse(format!("bad {what} {t:?}")))
    };
    while let Some(magic) = it.next() {
        if magic != "P2" {
            return Err(Error::Parse(format!("expected P2, found {magic:?}")));
        }
        let w = num(&mut it, "width")?;
        let h = num(&mut it, "height")?;
        let maxval = num(&mut it, "maxval")?;
        if maxval == 0 {
            return Err(Error::Parse("maxval must be positive".into()));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for _ in 0..w * h {
            let v = num(&mut it, "pixel")?;
            if v > maxval {
                return Err(Error::Parse(format!("pixel {v} above maxval {maxval}")));
            }
            pixels.push(T::lit(v as f64 / maxval as f64));
        }
        images.push(Image::new(w, h, pixels)?);
    }
    Ok(images)
}

/// Labelled training images; the label of a pattern is its index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternGallery<T> {
    pub width: usize,
    pub height: usize,
    pub patterns: Vec<Image<T>>,
}

impl<T: Real> PatternGallery<T> {
    pub fn new(patterns: Vec<Image<T>>) -> Result<Self> {
        let first = patterns
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty gallery".into()))?;
        if patterns.len() < 2 {
            return Err(Error::InvalidParameter("a gallery needs at least two patterns".into()));
        }
        for p in &patterns[1..] {
            first.same_shape(p)?;
        }
        Ok(PatternGallery {
            width: first.width,
            height: first.height,
            patterns,
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Smooth random patterns: a few low-frequency plane waves plus
    /// Gaussian bumps, stretched to the full `[0, 1]` range.
    pub fn synthetic(width: usize, height: usize, count: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let patterns = (0..count)
            .map(|_| {
                let waves: Vec<[f64; 4]> = (0..6)
                    .map(|_| {
                        [
                            rng.gen_range(0..=3) as f64,
                            rng.gen_range(0..=3) as f64,
                            rng.gen_range(0.0..TAU),
                            rng.gen_range(0.2..1.0),
                        ]
                    })
                    .collect();
                let bumps: Vec<[f64; 4]> = (0..3)
                    .map(|_| {
                        [
                            rng.gen_range(0.0..1.0),
                            rng.gen_range(0.0..1.0),
                            rng.gen_range(0.08..0.2),
                            rng.gen_range(-1.5..1.5),
                        ]
                    })
                    .collect();
                let raw: Vec<f64> = (0..width * height)
                    .map(|i| {
                        let x = (i % width) as f64 / width as f64;
                        let y = (i / width) as f64 / height as f64;
                        let w: f64 = waves
                            .iter()
                            .map(|[u, v, ph, a]| a * (TAU * (u * x + v * y) + ph).cos())
                            .sum();
                        let b: f64 = bumps
                            .iter()
                            .map(|[cx, cy, s, a]| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                            .sum();
                        w + b
                    })
                    .collect();
                let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = if hi > lo { hi - lo } else { 1.0 };
                Image {
                    width,
                    height,
                    pixels: raw.iter().map(|v| T::lit((v - lo) / span)).collect(),
                }
            })
            .collect();
        Self::new(patterns)
    }

    /// All patterns as concatenated plain PGM images, in label order.
    pub fn to_pgm(&self, maxval: u16) -> String {
        let mut out = String::new();
        for (label, p) in self.patterns.iter().enumerate() {
            let body = p.to_pgm(maxval);
            let (magic, rest) = body.split_once('\n').expect("header line");
            let _ = write!(out, "{magic}\n# label {label}\n{rest}");
        }
        out
    }

    pub fn from_pgm(text: &str) -> Result<Self> {
        Self::new(read_pgm_all(text.as_bytes())?)
    }
}
