//! Continuous-time reinforcement learning for a singular-control problem with
//! a randomized (entropy-regularized) activation time.

pub mod closed_form;
pub mod config;
pub mod error;
pub mod numerics;
pub mod param_family;
pub mod policy_eval;
pub mod policy_iter;
pub mod sde_sim;
pub mod trainer;
pub mod validate;

pub use closed_form::{ClosedForm, DerivedConstants, ModelParams};
pub use error::{Error, NumericError, Result};
