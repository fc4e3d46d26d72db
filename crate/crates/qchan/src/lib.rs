//! Contraction and expansion coefficients of finite-dimensional quantum
//! channels under the relative entropy, with closed forms where available,
//! rigorous bounds elsewhere, and a numerical estimator for the rest; plus a
//! mapper for the less-noisy region of flagged amplitude-damping mixtures.

pub mod channels;
pub mod cli;
pub mod coefficients;
pub mod divergences;
pub mod error;
pub mod estimator;
pub mod lessnoisy;
pub mod linalg;
pub mod par;

pub use error::{QchanError, Result};
