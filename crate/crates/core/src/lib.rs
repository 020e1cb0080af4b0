//! Time-inhomogeneous shot-noise processes.
//!
//! A shot-noise process superposes deterministic responses `G(t - T_i, U_i)`
//! triggered at the event times `T_i` of a marked point process with marks
//! `U_i ∈ ℝ^d`:
//!
//! ```text
//! S_t = Σ_{T_i ≤ t} G(t - T_i, U_i)
//! ```
//!
//! This crate is `no_std` (it needs `alloc`) and holds the numerical core:
//!
//!  - [`kernels`]: noise kernels `G` and their time derivatives `g`, plus the
//!    finite-grid Markovianity criterion for separable kernels.
//!  - [`point_process`]: deterministic compensators `λ(t)F(t,dx)dt`, exact
//!    simulation by thinning, and nested quadrature against the compensator.
//!  - [`shotnoise`]: path evaluation, the conditional characteristic function,
//!    conditional means, the semimartingale decomposition and the
//!    Ornstein-Uhlenbeck recursion for exponential kernels.
//!  - [`affine`]: the self-exciting affine intensity `dλ = κ(θ̄ - λ)dt + dN`,
//!    Ogata thinning and the generalized Riccati transform.
//!  - [`measure_change`]: Girsanov densities for compensator reweighting, the
//!    Esscher density, the shot-noise stock model and its drift condition.
//!
//! Randomness always flows through counter-based streams keyed by
//! `(seed, path_index, tag)` (see [`rng`]), so results never depend on the
//! order in which paths are generated.

#![no_std]
// NaN must fail validation, hence `!(x > 0.0)` rather than `x <= 0.0`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Float math resolves to inherent methods when std is linked (tests, or a
// dev-dependency enabling `num-traits/std`) and to `num_traits::Float`
// otherwise, so the trait import is unused in some builds.
#![allow(unused_imports)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod affine;
mod error;
pub mod kernels;
pub mod measure_change;
pub mod point_process;
pub mod quad;
pub mod rng;
pub mod shotnoise;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Largest supported mark dimension.
pub const MAX_MARK_DIM: usize = 8;
