//! Global and regional winner-take-all voting over a cell lattice.
//!
//! The crate models a "nation" as an `l × m` grid of single-vote cells and
//! compares two decision schemes under anti-candidate noise:
//!
//! * **global** voting, a single plurality over every cell, and
//! * **regional** voting, where each `m_r × m_r` region elects one winner and
//!   the plurality of won regions decides.
//!
//! Modules:
//!
//! * [`grid`] lattice, toroidal partitions, region maps and serialization.
//! * [`noise`] block and salt-and-pepper noise, orthomeasure, block packing.
//! * [`voting`] global, regional and multi-candidate tallies.
//! * [`bounds`] closed-form accommodation bounds and table emitters.
//! * [`shifting`] contamination counting over all toroidal shifts.
//! * [`breakdown`] exhaustive and randomized breakdown-point search.
//! * [`flag`] the white/black flag experiment.
//! * [`eigenlab`] regional PCA matching on a synthetic gallery.
//!
//! Exact arithmetic is available through [`Exact`]; floating-point
//! instantiations use [`f64`] by default.

pub mod bounds;
pub mod breakdown;
pub mod eigenlab;
pub mod error;
pub mod flag;
pub mod grid;
pub mod noise;
pub mod scalar;
pub mod seed;
pub mod shifting;
pub mod voting;

pub use error::{Error, Result};
pub use grid::{CandidateId, Grid, GridDims, Partition, RegionId};
pub use scalar::{Real, Scalar};
pub use voting::Outcome;

/// Exact rational scalar used for bound tables and contamination ratios.
pub type Exact = num_rational::Ratio<i64>;

pub type BoundInputsExact = bounds::BoundInputs<Exact>;
pub type BoundInputsF64 = bounds::BoundInputs<f64>;
pub type BoundReportExact = bounds::BoundReport<Exact>;
pub type BoundReportF64 = bounds::BoundReport<f64>;

pub type EigenModelF32 = eigenlab::EigenModel<f32>;
pub type EigenModelF64 = eigenlab::EigenModel<f64>;
pub type RegionalEigenModelF64 = eigenlab::RegionalEigenModel<f64>;
pub type PatternGalleryF64 = eigenlab::PatternGallery<f64>;
pub type ImageF64 = eigenlab::Image<f64>;
