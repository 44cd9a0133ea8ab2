//! Zeroth-order global optimization by probabilistic smoothing with
//! ratio-monotone transforms.
//!
//! The smoothed surrogate of a black-box `f` is
//! `G(μ) = E[g(θ, f(X)); S]` with `X` drawn from a product of shifted,
//! scaled one-dimensional kernels. Its gradient has a score-function form
//! that needs only evaluations of `f`, and gradient ascent on `G` is the
//! optimizer. Large `θ` concentrates the stationary points of `G` near the
//! global maximizer of `f`.

pub mod baselines;
pub mod config;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod objectives;
pub mod optimizer;
pub mod par;
pub mod presets;
pub mod quadrature;
pub mod rng;
pub mod smoothing;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{Kernel, KernelConstants};
pub use objectives::{DomainBox, Objective};
pub use optimizer::{Schedule, Trajectory};
pub use smoothing::{Estimator, Scaling, SmoothingSpec};
pub use transforms::Transform;
