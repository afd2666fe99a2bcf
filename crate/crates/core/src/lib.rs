//! Linear stochastic bandits under mixing sub-Gaussian observation noise.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: Cholesky-factored design matrices and the ball-constrained
//!   least-squares solver.
//! - [`noise`]: Markov-chain noise generators with exact mixing envelopes.
//! - [`confidence`]: the anytime-valid ellipsoidal confidence sequence built
//!   from delayed design statistics, and the i.i.d. baseline radius.
//! - [`policy`]: Mixing-LinUCB, baseline policies, delay tuning and the
//!   finite-horizon regret bounds.
//! - [`spa`]: the sequential probability assignment game (EWA over a uniform
//!   ball prior) used to check the online-to-confidence-set machinery.
//! - [`harness`]: seeded Monte Carlo replications, the invariant suite, sweeps
//!   and CSV/JSON/SVG output.

// `!(a <= b)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confidence;
pub mod error;
pub mod harness;
pub mod noise;
pub mod numerics;
pub mod policy;
pub mod rng;
pub mod spa;

pub use error::{Error, Result};
