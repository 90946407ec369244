//! Search-free super-resolution direction-of-arrival estimation for planar
//! sensor arrays of arbitrary geometry, from a single snapshot.
//!
//! The estimator works in the continuous angle domain, so there is no grid
//! and no grid mismatch: the conjugate array manifold of each sensor is
//! represented by a truncated Fourier series, the atomic-norm dual problem
//! becomes a semidefinite program over the series coefficients, and source
//! angles drop out as unit-circle roots of a polynomial built from the
//! optimal dual solution. Coherent sources and a lone snapshot are fine;
//! no spatial covariance is ever formed.
//!
//! Module tour:
//!
//! - [`numkit`]: dense complex linear algebra and DFT kernels
//! - [`geometry`]: array layouts and steering vectors
//! - [`manifold`]: Fourier-series basis and the minimum-P sizing rule
//! - [`sdp`]: the dual semidefinite program and its interior-point solver
//! - [`rooting`]: polynomial rooting and angle extraction
//! - [`pipeline`]: snapshot-in, angles-and-amplitudes-out orchestration
//! - [`simulate`]: delay-and-sum baseline and Monte-Carlo sweeps

pub mod geometry;
pub mod manifold;
pub mod numkit;
pub mod pipeline;
pub mod rooting;
pub mod sdp;
pub mod simulate;

pub use geometry::{ArrayGeometry, ReferencePoint, SteeringVector};
pub use manifold::ManifoldBasis;
pub use pipeline::{estimate, synthesize, EstimateOptions, Scenario};
pub use rooting::{DoaEstimate, DualPolynomial};
pub use sdp::{SdpProblem, SdpSolution, SolveStatus, SolverOptions};
