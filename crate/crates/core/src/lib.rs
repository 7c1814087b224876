//! Reservoir co-activation prototypes.
//!
//! An untrained leaky echo-state reservoir turns a static image into a
//! time-averaged population state. The state is quantized into a handful of
//! activation levels, each level bucket induces a binary co-activation mask
//! over unit pairs, and per-class prototype matrices are learned from those
//! masks with a local potentiation/decay rule. Inference scores a test mask
//! against the binarized class templates by overlap.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! driver and parallel orchestration live in the `recap` companion crate.
//!
//! ```
//! use recap_core::encoding::{build_mask, quantize, QuantizerSpec};
//! use recap_core::reservoir::StateVector;
//!
//! let state = StateVector::new(vec![-0.3, 0.7, -0.001]);
//! let code = quantize(&state, &QuantizerSpec::new(2).unwrap()).unwrap();
//! assert_eq!(code.levels(), &[0, 1, 0]);
//! assert_eq!(build_mask(&code).popcount(), 2);
//! ```

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod corruptions;
pub mod encoding;
mod error;
pub mod linalg;
pub mod metrics;
pub mod prototype;
pub mod reservoir;
pub mod ridge;
pub mod rng;

pub use error::{Error, Result};
