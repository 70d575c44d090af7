//! Regional PCA matching on synthetic images.
//!
//! Images are split into `R` equal rectangles, each with its own eigenspace
//! model; a probe is labelled by winner-take-all over per-region
//! nearest-neighbour votes. With `R = 1` this is plain eigenspace matching.

mod experiment;
mod image;
mod linalg;
mod model;

pub use experiment::{
    occlude, run_conjecture_experiment, ConjectureConfig, ConjectureTable, DiskNoise, RateSummary, TrialRow,
    AFFECTED_LEVEL,
};
pub use image::{read_pgm_all, Image, PatternGallery};
pub use linalg::{power_eigen, POWER_MAX_ITERATIONS, POWER_TOLERANCE, RANK_CUTOFF};
pub use model::{
    recognize, train_global, train_regional, EigenModel, Match, RecognitionOutcome, Recognizer, RegionLayout,
    RegionalEigenModel, RegionalMatch, TIE_TOLERANCE,
};
