//! Numerical laboratory for diluted spin glasses and their fully connected
//! Gaussian approximations.
//!
//! The crate is organized around the objects that drive zero-temperature
//! disorder-chaos experiments:
//!
//! - [`mixing`]: mixing functions ξ, correlated mixings ξ0, the ζ± ratios,
//!   step-function order parameters γ, and 1-D quadrature.
//! - [`diluted`]: Poisson clause models (antiferromagnetic K-spin, K-spin
//!   glass, K-sat), coupled pairs of instances, and exact sign-average
//!   oracles.
//! - [`gaussian`]: mixed p-spin Hamiltonians with covariance N·ξ(R) and
//!   correlated copies.
//! - [`groundstate`]: exact and heuristic maximization over the hypercube and
//!   the balanced slice, overlap-constrained joint maxima, and chaos
//!   statistics of near maximizers.
//! - [`parisi`]: the zero-temperature Parisi PDE, the Parisi functional, and
//!   its minimization over k-step order parameters.
//! - [`gtbound`]: the two-system Guerra-Talagrand machinery (matrix diffusion
//!   T, the 2-D PDE, and the chaos-gap scan).
//! - [`control`]: Monte Carlo verification of the stochastic-control
//!   representations of both PDE values.
//! - [`verify`]: the invariant battery wired into the CLI.

pub mod control;
pub mod diluted;
pub mod energy;
pub mod error;
pub mod gaussian;
pub mod groundstate;
pub mod gtbound;
pub mod mixing;
pub mod optim;
pub mod parisi;
pub mod pde;
pub mod poly;
pub mod rng;
pub mod spin;
pub mod verify;

pub use error::{Error, Result};
pub use spin::SpinConfig;
