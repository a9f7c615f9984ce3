//! Menger-type curvature energies of graphs and curves, fractional
//! second-difference seminorms, and numerical experiments comparing them.

pub mod curves;
pub mod energy;
pub mod error;
pub mod estimate;
pub mod funcspace;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod seminorms;
pub mod verify;

pub use error::{Error, Result};
pub use estimate::Estimate;
pub use funcspace::{Domain, EnergyParams, FunctionModel};
