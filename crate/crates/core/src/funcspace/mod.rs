//! Domains, function models, energy exponents and the test-function catalog.

mod catalog;
mod domain;
mod io;
mod model;
mod params;

pub use catalog::{default_catalog, test_function, FunctionParams, CATALOG_NAMES};
pub use domain::{Domain, HSet};
pub use io::{load_grid_csv, read_grid_csv, FunctionSpec};
pub use model::{BoxRegion, FunctionModel, GridData};
pub use params::{derive_q, EnergyParams};
