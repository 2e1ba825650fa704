//! Trapping-detrapping model of 1/f current noise.
//!
//! Carriers alternate between free flight (a current pulse of height `a`)
//! and trapped intervals whose detrapping rate is drawn fresh from a
//! uniform distribution on `[gamma_min, gamma_max]`. The crate samples such
//! paths, estimates their power spectra, and compares them with closed-form
//! characteristic-function results.

pub mod analysis;
pub mod charfn;
pub mod dist;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod export;
pub mod numeric;
pub mod sim;
pub mod spectra;

pub use charfn::{AnalyticPsd, CharFn};
pub use dist::{RateModel, TrappingModel};
pub use ensemble::{run_event_ensemble, run_sampled_ensemble, EnsembleRun, EnsembleStats};
pub use error::{Error, Result};
pub use exec::Execution;
pub use sim::{CarrierPath, SampledSignal, SimConfig};
pub use spectra::{Estimator, SpectrumEstimate};
