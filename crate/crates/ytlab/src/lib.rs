//! Monte Carlo laboratory for the shape of random Young tableaux:
//! RSK shapes of random words, last-passage percolation dynamic programs,
//! GUE spectrum references, Brownian functionals, and the experiment
//! harness tying them together.

pub mod brownian;
pub mod error;
pub mod harness;
pub mod lpp;
pub mod model;
pub mod randmat;
pub mod rng;
pub mod rsk;
pub mod stats;

pub use error::{Error, Result};
