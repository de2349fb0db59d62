//! Numerical study of Bell-inequality violations for two `d`-level systems:
//! the `I` and CGLMP-type `I_d` expressions, their robustness to random
//! unitary perturbations, random and optimized measurement settings, and
//! concentration bounds over random states.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the CLI uses throughout.

pub mod analysis;
pub mod bell;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod levy;
pub mod measurements;
pub mod numerics;
pub mod optimizer;
pub mod perturbations;
pub mod rng;
pub mod scalar;
pub mod states;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ComplexMatrix = numerics::ComplexMatrix<f64>;
pub type HermitianMatrix = numerics::HermitianMatrix<f64>;
pub type UnitaryMatrix = numerics::UnitaryMatrix<f64>;
pub type PureState = states::PureState<f64>;
pub type MeasurementBasis = measurements::MeasurementBasis<f64>;
pub type MeasurementSettings = measurements::MeasurementSettings<f64>;
pub type OutcomeTable = measurements::OutcomeTable<f64>;
pub type BellResult = bell::BellResult<f64>;
pub type SampleRun = experiments::SampleRun<f64>;
pub type ObservableParams = optimizer::ObservableParams<f64>;
pub type OptimizationResult = optimizer::OptimizationResult<f64>;
