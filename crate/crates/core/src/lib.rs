//! Askey–Wilson processes and the quadratic harnesses built from them.
//!
//! * [`qseries`] — q-Pochhammer symbols and basic hypergeometric sums.
//! * [`askey_wilson`] — the polynomial family, its orthogonality laws
//!   (density, atoms, finite laws) and the Favard case analysis.
//! * [`harness`] — process parameters, the five-parameter harness
//!   dictionary, time domains, marginals, transitions and moments.
//! * [`martingale`] — martingale polynomials, the Jacobi decomposition
//!   `J_t = t x + y` and the q-commutation checks.
//! * [`simulate`] — samplers, paths, the finite-state process, bridge
//!   endpoints and Monte Carlo estimators.
//! * [`verify`] — residual reports and randomized identity sweeps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod askey_wilson;
pub mod cplx;
pub mod error;
pub mod harness;
pub mod martingale;
pub mod par;
pub mod qseries;
pub mod quad;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
