//! Numeric kernels shared by the analytic layer and the critic.

pub mod dual;
pub mod normal;
pub mod quad;
pub mod root;
pub mod stats;

pub use dual::{Dual3, Scalar};
