//! Planted k-SUM and k-XOR in the sparse regime.

pub mod amplify;
pub mod analysis;
pub mod cli;
pub mod combin;
pub mod error;
pub mod gf2;
pub mod groups;
pub mod instances;
pub mod pke;
pub mod reductions;
pub mod seed;
pub mod solvers;

pub use error::{Error, Result};
pub use groups::{make_spec, DensityParams, Element, GroupFamily, GroupSpec};
pub use instances::{count_solutions, sample_d0, sample_d1, sample_d_ell, verify, Dist, Instance, Solution};
