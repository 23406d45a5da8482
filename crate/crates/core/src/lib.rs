//! blochlab: a numerical laboratory for analytic functions on the unit disc.
//!
//! The crate provides
//!
//! - boundary-gap arithmetic on disc points, so that radii like
//!   1 - exp(-2^n) stay computable ([`disc`]);
//! - an immutable expression tree over a small zoo of analytic functions
//!   with exact symbolic derivatives and an underflow-safe log-modulus
//!   channel ([`expr`]);
//! - lower-bound estimators for integral means, sup means, and the
//!   Bloch-type and normal-type quantities ([`seminorms`]);
//! - executable escape certificates: the horocycle-versus-radius dichotomy
//!   for products with the atomic singular inner function, and the radius
//!   schedule construction of a bounded atom sum g whose product with an
//!   unbounded Bloch function leaves the Bloch class ([`lab`]).
//!
//! The `blochlab` binary exposes the pipelines as subcommands emitting
//! versioned JSON reports and CSV traces.

pub mod disc;
pub mod error;
pub mod expr;
pub mod lab;
pub mod logdomain;
pub mod parse;
pub mod seminorms;

pub use disc::{DiscPoint, Horocycle, G_SAFE, GAP_LOG_MAX};
pub use error::{Error, Result};
pub use expr::FunctionExpr;
pub use seminorms::{ExecCtx, SupProfile};

/// Version tag carried by every JSON report.
pub const SCHEMA_VERSION: &str = "v1";
