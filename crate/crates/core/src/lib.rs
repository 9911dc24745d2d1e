//! Secrecy outage analysis for a dual-hop downlink with an FSO first hop
//! (Gamma-Gamma turbulence with pointing errors) and a multi-antenna RF
//! second hop (Nakagami-m) that also feeds a passive eavesdropper.
//!
//! The crate provides closed-form and high-SNR outage engines, a quadrature
//! oracle that integrates the defining expressions directly, a Monte Carlo
//! simulator, and the sweep driver used by the `soplab` binary.

pub mod analytic;
pub mod asymptotic;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod montecarlo;
pub mod oracle;
pub mod parallel;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
