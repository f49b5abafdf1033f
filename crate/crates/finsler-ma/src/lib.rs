//! Numerical toolkit for Finsler Monge-Ampère problems with second boundary
//! conditions.
//!
//! The library is organized around a smooth anisotropic norm `H` (a *Finsler
//! norm*) and the convex calculus it induces:
//!
//! * [`norms`] — norm families (Euclidean, quadratic, p-norm, trigonometric
//!   perturbations of the disk), their duals `H0`, the energies `E = H²/2`
//!   and `E0 = H0²/2`, gradient maps, Hessians, and the Jacobian density
//!   `Φ = det ∇²E`.
//! * [`convex`] — grid-sampled functions, discrete Legendre conjugation,
//!   Young's inequality gap, and the trace–determinant (generalized Newton)
//!   matrix inequality.
//! * [`geometry`] — quadrature over bounded convex planar domains: Wulff
//!   balls `{H0 ≤ r}`, convex polygons, ellipses; boundary tracing with
//!   outward normals; the dimensional volume identity for Wulff balls.
//! * [`transport`] — an entropic-regularized solver for the quadratic-cost
//!   transport problem from a domain onto the density `Φ` on the unit ball
//!   of `H`. Its Brenier potential is the convex weak solution of
//!   `Φ(∇u) det ∇²u = 1` with the second boundary condition
//!   `∇u(Ω) = B_H`, and the module provides the discrete residual of that
//!   equation together with weak-form (push-forward) checks.
//! * [`verifier`] — the integral identities that characterize the Wulff
//!   shape among domains admitting a solution with constant boundary data
//!   (mass balance, the energy identity, a chain of dual-energy equalities,
//!   the pointwise trace–determinant equality case), plus the converse
//!   experiment measuring boundary oscillation on non-Wulff domains.
//! * [`cli`] — batch scenarios driven by a single structured-text
//!   configuration, with CSV/JSON artifacts for plotting.
//!
//! Everything is deterministic: the only randomness is drawn from the run
//! configuration's seed, and parallel loops only ever write disjoint outputs,
//! so reports are bitwise reproducible at any thread count.

pub mod cli;
pub mod convex;
pub mod error;
pub mod geometry;
pub mod norms;
pub mod transport;
pub mod verifier;

pub use error::{Error, Result};
pub use norms::{Norm, NormEval, NormSpec};
