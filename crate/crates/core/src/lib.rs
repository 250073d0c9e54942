//! Bipartite network exchange games.
//!
//! Buyers hold one divisible item, sellers another; edges of a bipartite
//! network are capacity-limited exchange opportunities. The crate computes
//! Pareto frontiers of single edges, certifies pairwise stability of
//! strategy profiles, finds stable outcomes and reads and writes the
//! document formats used by the `netex` command-line tool.

pub mod fixtures;
pub mod frontier;
pub mod io;
pub mod model;
pub mod solver;
pub mod stability;
pub mod utility;

pub use frontier::{ExchangeSet, FrontierError, FrontierMap, Leader, PathSample, PayoffBounds};
pub use model::{
    induced_exchange_network, payoff_profile, validate_instance, Actor, ActorId, ActorIdx, Edge, EdgeIdx,
    EdgeSpec, Exchange, ExchangeNetwork, Instance, ModelError, NumericConfig, RawInstance, Side, Strategy,
    StrategyProfile, ValidationError, ValidationReport, ValidationWarning,
};
pub use solver::{
    brute_force_solve, construct_profile, feasible, solve, AspirationVector, BruteForceResult, SolverConfig,
    SolverError, StableOutcome,
};
pub use stability::{
    blocking_report, certify_profile, check_individual_rationality, find_blocking_pair, BlockingReport, Verdict,
    Violation,
};
pub use utility::{eval_utility, verify_properties, PayoffVector, Utility, UtilityError, UtilitySpec};
