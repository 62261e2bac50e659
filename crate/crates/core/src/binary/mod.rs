//! Binary degraded sources.
//!
//! [`bsc`] holds the closed forms for a uniform input observed through a
//! BSC cascade (or a BSC followed by an erasure channel). [`counterexample`]
//! holds the asymmetric source on which reaching the reconciliation capacity
//! costs secret-key rate.

pub mod bsc;
pub mod counterexample;

pub use bsc::{beta0_solve, c_rec_bsc, c_wsk_bec, c_wsk_bsc, BscCascadeSource};
pub use counterexample::{
    counterexample_fgh, counterexample_solve, AlphaPair, AsymBinarySource, CounterexampleReport, Fgh,
};
