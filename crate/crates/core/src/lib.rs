//! Conditional spin squeezing of `N` two-level atoms under continuous homodyne
//! measurement, solved on the permutation-symmetric collective density matrix.

pub mod binomial;
pub mod dynamics;
mod error;
pub mod index;
pub mod io;
pub mod noise;
pub mod observables;
pub mod oracle;
pub mod params;
pub mod state;

pub use error::{Error, Result};
pub use index::{state_count, FlatIndex, IndexSpace, MultiIndex, Shift};
pub use io::{emit_csv, load_config, run_batch, RunConfig};
pub use observables::{
    bm_expectation, distribution_snapshot, spin_expectations, spin_moments, spin_second_moments,
    squeezing_parameter, Axis, DistributionSnapshot, SpinMoments, Squeezing,
};
pub use params::{derive_params, mhz, DerivedParams, PhysicalParams};
pub use state::{css_init, CollectiveState};
