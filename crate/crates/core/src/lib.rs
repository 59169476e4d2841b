#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod certify;
pub mod cone;
pub mod error;
pub mod io;
pub mod lp;
pub mod pareto;
pub mod regularity;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod variational;

pub use error::{Error, Result};
