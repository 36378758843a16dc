//! Symbol-temporal consistency (STC) self-supervised learning for
//! multichannel time series.
//!
//! A window is seen twice: as its raw samples and as an order-free histogram
//! of value symbols. Two encoders are pretrained with contrastive losses
//! inside each view and a consistency loss across views; the time-view
//! embedding is then evaluated with a linear probe on unseen subjects.

// `!(x > 0.0)` also rejects NaN; index loops read better in the numeric kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod augment;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod losses;
pub mod model;
pub mod nn;
pub mod symbolize;
pub mod trainer;

pub use error::{Result, StcError};
