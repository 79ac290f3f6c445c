//! Numerical laboratory for weak-type norms of the n-dimensional
//! Hardy-Littlewood-Polya operator and m-linear kernel operators acting on
//! radial functions in power-weighted Lebesgue spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`spaces`]: the sphere-area constant and hypothesis checkers,
//! * [`radialfn`]: exact piecewise power-log algebra for radial functions,
//! * [`quad`]: adaptive Gauss-Kronrod, nested and Monte Carlo integration,
//! * [`operators`]: radial reductions of the operators,
//! * [`norms`]: strong and weak (distribution-function) norms,
//! * [`constants`]: closed-form sharp constants and the nested kernel constant,
//! * [`extremals`]: extremal families and the sharpness probe,
//! * [`cli`]: report building shared by the `hlpweak` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod error;
pub mod extremals;
pub mod norms;
pub mod operators;
pub mod quad;
pub mod radialfn;
pub mod spaces;

pub use error::{Error, Result};
