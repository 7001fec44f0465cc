//! Exact outage correlation for framed slotted ALOHA broadcast networks under
//! Nakagami-m fading, and mean-square performance bounds for average consensus
//! running on top of such a network.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command line
//! front end and multi-threaded drivers live in the `aloha-corr` crate.
//!
//! Conventions used throughout:
//!
//! * nodes are indexed `0..n`;
//! * directed links `(i, j)`, `i != j`, are enumerated lexicographically
//!   (see [`slotmodel::Link::index`]);
//! * Kronecker products use the row-major pairing `I = n * i + k`, so that
//!   `(A ⊗ B)[(i, k), (j, l)] = A[i, j] * B[k, l]`.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod consensus;
pub mod deployment;
pub mod error;
pub mod linalg;
pub mod nakagami;
pub mod oracle;
pub mod slotmodel;

pub use deployment::{Channel, Deployment, Network, RadioParams, SlotConfig};
pub use error::{Error, Result};
pub use slotmodel::{Duplex, Link, LinkStats, StatsModel};
