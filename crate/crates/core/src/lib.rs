//! Monte Carlo laboratory for intensity-interferometry (Hanbury Brown–Twiss)
//! experiments with bosons, fermions, coherent and distinguishable sources.
//!
//! The crate is `no_std` + `alloc`. It contains the whole numerical pipeline:
//!
//! * [`sources`] builds the first-order coherence kernel of a source and
//!   samples detection events with permanental (boson), determinantal
//!   (fermion), coherent or independent statistics;
//! * [`detector`] applies time-of-flight conversion, efficiency, resolution
//!   and aperture;
//! * [`correlator`] histograms particle pairs, estimates g², fits the
//!   bunching/antibunching bump and computes counting statistics;
//! * [`oracles`] holds the closed-form predictions every simulated quantity
//!   is checked against.
//!
//! File formats, configuration, parallel orchestration and the command line
//! live in the `hbt-lab` companion crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod correlator;
pub mod detector;
pub mod error;
pub mod model;
pub mod oracles;
pub mod sources;

pub use error::{Error, Result};
pub use model::{ArrivalClock, DetectionEvent, RngStream, Shot, Statistics};
