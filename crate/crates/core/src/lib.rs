pub mod cli;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod model;
pub mod optim;
pub mod rl;
pub mod rng;
pub mod selftest;
pub mod tutors;
pub mod util;

pub use error::{Error, Result};
