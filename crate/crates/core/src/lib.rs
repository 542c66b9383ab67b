pub mod error;
pub mod exact;
pub mod free_energy;
pub mod harness;
pub mod ising;
pub mod machine;
pub mod mdp;
pub mod rl;
pub mod sampler;

pub use error::{Error, Result};
