//! Rate-limited secret-key and reconciliation capacities.
//!
//! Discrete sources are described by a [`DiscreteJoint`] over `(X, Y, Z)`.
//! One-way capacities are maximized over test channels `p(u|x)` by
//! [`optimize_oneway`]; binary and Gaussian sources also have closed forms.
//! The [`protocol`] module runs the sequential key-distillation pipeline on
//! short blocks and measures reliability, uniformity and leakage.

pub mod binary;
pub mod channel;
pub mod error;
pub mod gaussian;
pub mod info;
pub mod joint;
pub mod optimizer;
pub mod protocol;
mod quadrature;
pub mod quantization;

pub use channel::{Objective, TestChannel, TwoWayChannels};
pub use error::{Error, Result};
pub use info::{DiscreteDist, Prob, Units};
pub use joint::{DiscreteJoint, JointPmf};
pub use optimizer::{optimize_oneway, CapacityResult, OptimizerOptions};
