//! Coarse loop-division computations on Cayley graphs.
//!
//! The crate builds finite balls in Cayley graphs of finitely presented
//! groups, searches for partitions of loops into short pieces, tabulates
//! minimal piece counts across scales, and certifies when no such partition
//! exists.

pub mod cli;
pub mod error;
pub mod presentation;
pub mod oracle;
pub mod cayley;
pub mod partition;
pub mod scalewindow;
pub mod search;
pub mod divisibility;

pub use cli::cli_main;
pub use error::{Error, Result};
