//! Deterministic rules for pooling `K` unbiased, uncorrelated estimates of a
//! common scalar, centred on the square-root rule for adaptive importance
//! sampling.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! * [`weights`]: weight rules and the pooled estimate with its unbiased
//!   variance estimate.
//! * [`ineff`]: exact inefficiency functionals for power-law and exponential
//!   variance models, worst-case suprema, asymptotes and integral bounds.
//! * [`varmodels`]: variance-profile families and the robustness sweeps.
//! * [`ais`]: a small adaptive importance sampler used to validate the
//!   combination rules empirically.
//!
//! IO, parallel drivers and the command line live in the `estcombine` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ais;
pub mod error;
pub mod ineff;
pub mod rng;
pub mod sum;
pub mod varmodels;
pub mod weights;

pub use error::{Error, Result};
pub use ineff::{IneffReport, PowerLawModel, RateBounds};
pub use varmodels::{ConvexDecreasingSampler, SweepResult, VarianceProfile};
pub use weights::{combine, make_weights, CombinedEstimate, StageEstimate, WeightRule, Weights};
