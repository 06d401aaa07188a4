//! Finite-difference solver for the two-dimensional parabolic-parabolic
//! Keller-Segel system with logistic source, together with the explicit
//! a-priori constants that bound its solutions and a harness that checks
//! simulated trajectories against them.
//!
//! ```text
//! u_t = ∇·(∇u − χ u ∇v) + r u − μ u²
//! v_t = Δv − v + u
//! ```
//!
//! with homogeneous Neumann data on a rectangle.

pub mod bounds;
pub mod experiment;
pub mod field;
pub mod monitor;
pub mod output;
pub mod solver;
