//! Affine and canonical quantization of one-dimensional systems on restricted
//! domains: discretized Hamiltonians, spectra, coherent-state geometry,
//! weak correspondence and the classical motion they should reproduce.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` / `*F32` aliases below fix the scalar.

// guards are written `!(x > 0)` on purpose so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod coherent;
pub mod correspondence;
pub mod domain_grid;
pub mod eigensolve;
pub mod error;
pub mod operators;
pub mod scalar;

pub use coherent::{CoherentFamily, CoherentScheme, CoherentState, MetricTensor2};
pub use correspondence::{CorrespondenceReport, LadderStates, ScalingOptions};
pub use domain_grid::{DomainSpec, Grid1D, GridLayout};
pub use eigensolve::{Method, Spectrum};
pub use error::{Error, Result};
pub use operators::{
    CatalogId, HermitianTridiagonal, ModelSpec, Potential, Scheme, TridiagonalOperator,
};
pub use scalar::Real;

pub type DomainF64 = DomainSpec<f64>;
pub type GridF64 = Grid1D<f64>;
pub type ModelF64 = ModelSpec<f64>;
pub type OperatorF64 = TridiagonalOperator<f64>;
pub type SpectrumF64 = Spectrum<f64>;
pub type CoherentFamilyF64 = CoherentFamily<f64>;
pub type CoherentStateF64 = CoherentState<f64>;
pub type MetricF64 = MetricTensor2<f64>;
pub type TrajectoryF64 = classical::TrajectoryResult<f64>;

pub type DomainF32 = DomainSpec<f32>;
pub type GridF32 = Grid1D<f32>;
pub type ModelF32 = ModelSpec<f32>;
pub type OperatorF32 = TridiagonalOperator<f32>;
pub type SpectrumF32 = Spectrum<f32>;
pub type CoherentFamilyF32 = CoherentFamily<f32>;
pub type CoherentStateF32 = CoherentState<f32>;
pub type MetricF32 = MetricTensor2<f32>;
pub type TrajectoryF32 = classical::TrajectoryResult<f32>;
