//! Finite distributions, channels, Shannon measures and Bayes risks.

mod alphabet;
mod channel;
mod dist;
pub mod format;
mod measures;
mod risk;

pub use alphabet::Alphabet;
pub use channel::{binary_erasure, compose, extended_erasure, Channel};
pub use dist::{
    forward_pair, validate_joint, JointDist, Prior, RawJoint, ValidateOptions, Var, MASS_TOL,
};
pub use measures::{
    binary_entropy, coinformation, cond_mutual_info, entropy, kl, kl_cond, kl_slices, mutual_info,
    ShannonSummary,
};
pub use risk::{optimal_risk, optimal_strategy, DecisionProblem};
