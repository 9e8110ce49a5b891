//! Detection-weighted probability calculus for two-qubit Bell experiments.
//!
//! The crate separates two readings of the same measurement statistics:
//!
//! * conditional probabilities, computed over detected objects only, which coincide
//!   with the Born-rule values of [`quantum`];
//! * absolute probabilities over all produced objects, which adjoin a
//!   no-registration outcome weighted by a detection probability ([`esr`]).
//!
//! [`bchsh`] evaluates the standard and detection-weighted CHSH functionals and the
//! detection-probability bound that keeps the latter below 2. [`lhv`] provides local
//! deterministic hidden-variable models with no-registration outcomes, a
//! reproducible parallel Monte Carlo driver and the fair-sampling diagnostic.
//!
//! The quantum, ESR and CHSH layers are generic over [`Real`] (`f32` or `f64`);
//! the aliases at the crate root fix the scalar to `f64`. Mixture probabilities in
//! [`lhv::ensemble`] also accept exact rationals.

mod error;
mod scalar;

pub mod bchsh;
pub mod esr;
pub mod lhv;
pub mod quantum;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Direction = quantum::Direction<f64>;
pub type DensityState = quantum::DensityState<f64>;
pub type ProjectiveObservable = quantum::ProjectiveObservable<f64>;
pub type Matrix4 = quantum::Matrix4<f64>;
pub type GeneralizedObservable = esr::GeneralizedObservable<f64>;
pub type DetectionModel = esr::DetectionModel<f64>;
pub type OutcomeDistribution = esr::OutcomeDistribution<f64>;
pub type ChshSetting = bchsh::ChshSetting<f64>;
pub type ChshReport = bchsh::ChshReport<f64>;
