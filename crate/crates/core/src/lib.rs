//! Mixed finite elements for the 2D Poisson problem built on the Helmholtz
//! decomposition `L² = ∇H¹₀ ⊕ Curl(H¹ ∩ L²₀)`.
//!
//! The unknowns are a discontinuous piecewise polynomial `p_h ≈ ∇u` of degree
//! `k` and a continuous `α_h` of degree `k + 1`. The crate provides meshes with
//! newest-vertex bisection, the discrete spaces, the reduced Curl–Curl solve,
//! residual estimators, the separate-marking adaptive loop, independent
//! verification oracles and the L-shaped benchmark experiments.

pub mod adapt;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod mesh;
pub mod quadrature;
pub mod spaces;
pub mod system;
pub mod verify;

pub use error::{FemError, Result};
