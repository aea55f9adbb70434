//! LDPC belief-propagation decoding with early termination, and the
//! CV-QKD key-rate accounting used to judge it.
//!
//! The crate is organised bottom-up:
//!
//! * [`code`]: sparse parity-check matrices, alist I/O, protograph lifting
//!   and puncturing.
//! * [`decoder`]: flooding sum-product decoding with pluggable stop rules
//!   (parity-check and variable-node-reliability termination).
//! * [`channel`]: binary-input AWGN model, β ↔ SNR mapping and seeded
//!   Monte-Carlo trials.
//! * [`qkd`]: mutual information, Holevo bound, finite-size penalty and the
//!   secret-key-rate / decoder-throughput formulas.
//! * [`harness`]: sweep configuration, parallel execution and CSV output.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod code;
pub mod decoder;
mod error;
pub mod harness;
pub mod qkd;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
