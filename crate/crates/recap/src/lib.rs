//! File formats, dataset loading, parallel training and evaluation, the
//! corruption benchmark and the `recap` command line tool, built on
//! [`recap_core`].

pub mod cli;
pub mod config;
pub mod container;
pub mod dataset;
mod error;
pub mod external;
pub mod idx;
pub mod npy;
pub mod pipeline;
pub mod report;
pub mod tables;

pub use error::{Error, Result};
