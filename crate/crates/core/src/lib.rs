//! Phase shift of a weak coherent beam by a single trapped ion.
//!
//! * [`atomic_response`]: resonant cross sections and the elastic phase shift
//!   versus detuning for two-level and `J = J′` transitions.
//! * [`coupling_budget`]: the coupling efficiency `G` from focusing geometry,
//!   reduced by thermal motion and saturation; Doppler-cooling temperature.
//! * [`heterodyne`]: Monte Carlo photon detection for the two-tone beat
//!   measurement and TDC histogram folding.
//! * [`phase_estimation`]: fixed-frequency cosine fits and the bright–dark
//!   differential phase.
//! * [`pipeline`]: configuration, detuning sweeps and CSV output.
//!
//! The physics and fitting code is generic over [`Scalar`] (`f32`, `f64`).
//! The aliases below fix it to `f64`, which the heterodyne timestamps and the
//! pipeline use.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomic_response;
pub mod coupling_budget;
mod error;
pub mod heterodyne;
pub mod phase_estimation;
pub mod pipeline;
mod scalar;
mod text;

pub use error::{Error, Result};
pub use scalar::{arg, wrap_angle, Scalar};
pub use text::format_significant;

pub use atomic_response::LevelModel;
pub use heterodyne::{DetectionRecord, HeterodyneConfig, TdcHistogram};

pub type Transition = atomic_response::Transition<f64>;
pub type Detuning = atomic_response::Detuning<f64>;
pub type ComplexResponse = atomic_response::ComplexResponse<f64>;
pub type PhaseExtremum = atomic_response::PhaseExtremum<f64>;
pub type BeamGeometry = coupling_budget::BeamGeometry<f64>;
pub type MotionState = coupling_budget::MotionState<f64>;
pub type CouplingBudget = coupling_budget::CouplingBudget<f64>;
pub type PhysicalConstants = coupling_budget::PhysicalConstants<f64>;
pub type CosineFit = phase_estimation::CosineFit<f64>;
pub type PhaseMeasurement = phase_estimation::PhaseMeasurement<f64>;
