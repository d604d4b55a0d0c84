//! Smooth and analytic parametrization of functions and planar slabs, with
//! the polynomial approximation, point counting, norming-constant and
//! entropy pipelines built on top of them.

pub mod bivar;
pub mod bp;
pub mod chart;
pub mod cli;
pub mod ck;
pub mod analytic;
pub mod approx;
pub mod stats;
pub mod entropy;
pub mod error;
pub mod expr;
pub mod jet;
pub mod lp;
pub mod rational;
pub mod remez;
pub mod roots;
pub mod upoly;

pub use error::{Error, Result};
