//! Exact-arithmetic toolkit for differentially private count-query release.
//!
//! Everything runs over arbitrary-precision rationals: geometric-mechanism
//! construction, differential-privacy verification, derivability analysis
//! with a Cramer's-rule cross-check, minimax-optimal mechanism and
//! interaction LPs solved by an exact simplex, collusion-resistant
//! multi-level release, and the oblivious reduction for database-indexed
//! mechanisms. No floating point touches any verdict or optimum.

pub mod derivability;
pub mod error;
pub mod matrix;
pub mod mechanism;
pub mod multilevel;
pub mod oblivious;
pub mod optimizer;
pub mod random;
pub mod rational;
pub mod rng;
pub mod simplex;

pub use derivability::{
    add_privacy, check_derivable, cramer_oracle, triple_margin, DerivabilityReport, PostProcess,
};
pub use error::Error;
pub use matrix::RMatrix;
pub use mechanism::{
    check_dp, geometric_full_pmf, geometric_restricted, max_loss, sample, ConsumerProfile,
    DpReport, LossKind, Mechanism, SampleTrace,
};
pub use multilevel::{
    build_ladder, collusion_audit, conditional_factorization_holds, joint_distribution, release,
    AuditReport, JointTable, ReleaseLadder, ReleaseRecord,
};
pub use oblivious::{
    check_db_dp, obliviousify, reduction_audit, DatabaseSpace, DbDpReport, DbMechanism,
    ReductionReport,
};
pub use optimizer::{
    optimal_interaction, optimal_mechanism, optimal_mechanism_lex, row_pattern_diagnostic,
    OptimalInteractionResult, OptimalMechanismResult, RowPatternReport,
};
pub use rational::{rat, Rational};
pub use simplex::{solve_lp, Constraint, LinearProgram, LpOutcome, Relation};
