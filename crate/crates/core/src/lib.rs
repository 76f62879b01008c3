//! Exact-rational network-flow constructions on finite truncations of the binary tree.

pub mod bitseq;
pub mod dense;
pub mod error;
pub mod io;
pub mod mltest;
pub mod network;
pub mod operators;
pub mod predicates;
pub mod presets;
pub mod profile;
pub mod rational;
pub mod scheduler;
pub mod templates;
pub mod verify;

pub use error::{Error, Result};
