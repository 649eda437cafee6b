//! Fixed-budget best-arm identification for linear bandits.

pub mod algorithms;
pub mod arms;
pub mod bench;
pub mod bandit;
pub mod design;
pub mod error;
pub mod geometry;
pub mod hardness;
pub mod instances;

pub use algorithms::{run_algorithm, Algorithm, RunOptions, RunTrace};
pub use arms::ArmSet;
pub use bandit::{LinearBanditInstance, PullLog};
pub use design::{prune_support, solve_g_optimal, Design};
pub use error::{Error, Result};
pub use hardness::{hardness_profile, HardnessProfile};
pub use instances::InstanceSpec;
