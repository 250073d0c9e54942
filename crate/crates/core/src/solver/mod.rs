//! Pairwise-stable outcomes.
//!
//! An outcome is described by a matching and one aspiration `s` per actor:
//! a matched buyer at `s` earns `RQ_i(s)` on its edge and its seller earns
//! `RQ_j(s)`, so matched aspirations sum to one. The outcome is stable when,
//! on every edge, the buyer's path position at its current payoff is at
//! least the seller's (`RQ_i^-1(u_i) >= RQ_j^-1(u_j)`).
//!
//! [`solve`] finds such an outcome by deferred acceptance over continuous
//! concession levels ([`deferred`]); [`brute_force_solve`] enumerates grid
//! outcomes on small instances and serves as an independent oracle.

mod brute;
pub mod deferred;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{
    induced_exchange_network, payoff_profile, ActorIdx, EdgeIdx, ExchangeNetwork, Instance, Side,
    Strategy, StrategyProfile,
};
use crate::stability::{certify_profile, BlockingReport, DEFAULT_STABILITY_TOL};

pub use brute::{brute_force_solve, BruteForceResult, DEFAULT_ACTOR_CAP};

/// One aspiration per actor, indexed like [`Instance::actors`].
#[derive(Debug, Clone, PartialEq)]
pub struct AspirationVector(pub Vec<f64>);

impl AspirationVector {
    pub fn zeros(n: usize) -> Self {
        AspirationVector(vec![0.0; n])
    }

    pub fn get(&self, actor: ActorIdx) -> f64 {
        self.0[actor]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub propose_side: Side,
    /// Minimum concession of a rejected proposer, in path units.
    pub step: f64,
    /// Cap on proposals per deferred-acceptance run.
    pub max_iterations: usize,
    /// Number of step halvings before giving up.
    pub max_retries: usize,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            propose_side: Side::Buyer,
            step: 1e-3,
            max_iterations: 1_000_000,
            max_retries: 20,
            tol: DEFAULT_STABILITY_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub proposals: usize,
    pub rejections: usize,
    pub polish_sweeps: usize,
    pub retries: usize,
    pub final_step: f64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct StableOutcome {
    pub matching: ExchangeNetwork,
    pub aspirations: AspirationVector,
    pub profile: StrategyProfile,
    pub payoffs: Vec<f64>,
    pub certificate: BlockingReport,
    pub stats: SolverStats,
}

impl StableOutcome {
    pub fn matched_edges(&self) -> Vec<EdgeIdx> {
        self.matching.edges().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// An actor appears on two matched edges.
    NotAMatching { actor: ActorIdx },
    /// Matched aspirations must sum to one.
    PairSum { edge: EdgeIdx, sum: f64 },
    /// Aspirations live in `[0, 1]`.
    Range { actor: ActorIdx, s: f64 },
    /// The seller's payoff from its own aspiration, `RQ_j(1 - s_j)`, must
    /// agree with the one implied by its partner's, `RQ_j(s_i)`.
    PayoffMismatch { edge: EdgeIdx, from_buyer: f64, from_seller: f64 },
    /// `RQ_i^-1(u_i) - RQ_j^-1(u_j)` must be nonnegative on every edge.
    Crossing { edge: EdgeIdx, slack: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Constraint>,
    /// Payoffs implied by the aspirations; zero for unmatched actors.
    pub payoffs: Vec<f64>,
    /// Crossing slack of every edge, in edge order.
    pub crossing_slacks: Vec<f64>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver did not converge after {retries} retries (last step {last_step:e}): {reason}")]
    NonConvergence {
        retries: usize,
        last_step: f64,
        reason: String,
    },
    #[error("aspirations are infeasible: {0:?}")]
    Infeasible(Vec<Constraint>),
    #[error("instance has {actors} actors, brute force is capped at {cap}")]
    TooLarge { actors: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Checks the stable-matching system for `(matching, aspirations)`.
///
/// Payoffs of matched pairs follow from the buyer's aspiration; every edge's
/// crossing condition clamps the endpoint payoffs into that edge's path range
/// before inverting.
pub fn feasible(
    instance: &Instance,
    matching: &[EdgeIdx],
    aspirations: &AspirationVector,
    tol: f64,
) -> FeasibilityReport {
    let n = instance.n_actors();
    let mut violations = Vec::new();
    let mut payoffs = vec![0.0; n];
    let mut seen = vec![false; n];

    for (a, &s) in aspirations.0.iter().enumerate() {
        if !(s >= -tol && s <= 1.0 + tol) {
            violations.push(Constraint::Range { actor: a, s });
        }
    }
    for &k in matching {
        let e = instance.edge(k);
        for a in [e.buyer, e.seller] {
            if std::mem::replace(&mut seen[a], true) {
                violations.push(Constraint::NotAMatching { actor: a });
            }
        }
        let (s_i, s_j) = (aspirations.get(e.buyer), aspirations.get(e.seller));
        let sum = s_i + s_j;
        if (sum - 1.0).abs() > tol {
            violations.push(Constraint::PairSum { edge: k, sum });
        }
        let f = instance.frontier(k);
        let u_i = f.rq_buyer(s_i.clamp(0.0, 1.0));
        let u_j = f.seller_best(u_i);
        let from_seller = f.seller_best(f.rq_buyer((1.0 - s_j).clamp(0.0, 1.0)));
        if (from_seller - u_j).abs() > 10.0 * tol.max(f.tolerance()) {
            violations.push(Constraint::PayoffMismatch {
                edge: k,
                from_buyer: u_j,
                from_seller,
            });
        }
        payoffs[e.buyer] = u_i;
        payoffs[e.seller] = u_j;
    }

    let mut crossing_slacks = Vec::with_capacity(instance.edges().len());
    for (k, e) in instance.edges().iter().enumerate() {
        let f = instance.frontier(k);
        let slack = f.rq_param_clamped_i(payoffs[e.buyer]) - f.rq_param_clamped_j(payoffs[e.seller]);
        crossing_slacks.push(slack);
        if slack < -tol {
            violations.push(Constraint::Crossing { edge: k, slack });
        }
    }
    FeasibilityReport {
        violations,
        payoffs,
        crossing_slacks,
    }
}

/// Builds the supporting strategy profile of a feasible outcome.
///
/// Matched pairs share one efficient exchange at the buyer's path payoff;
/// unmatched actors propose the null exchange to their first neighbour.
pub fn construct_profile(
    instance: &Instance,
    matching: &[EdgeIdx],
    aspirations: &AspirationVector,
    tol: f64,
) -> Result<StrategyProfile, SolverError> {
    let report = feasible(instance, matching, aspirations, tol);
    if !report.is_feasible() {
        return Err(SolverError::Infeasible(report.violations));
    }
    supporting_profile(instance, matching, aspirations)
}

/// [`construct_profile`] without the feasibility check.
pub(crate) fn supporting_profile(
    instance: &Instance,
    matching: &[EdgeIdx],
    aspirations: &AspirationVector,
) -> Result<StrategyProfile, SolverError> {
    let mut strategies: Vec<Option<Strategy>> = vec![None; instance.n_actors()];
    for &k in matching {
        let e = instance.edge(k);
        let f = instance.frontier(k);
        let u_i = f.rq_buyer(aspirations.get(e.buyer).clamp(0.0, 1.0));
        let ex = f
            .pareto_point(u_i)
            .map_err(|err| SolverError::InvalidArgument(err.to_string()))?;
        strategies[e.buyer] = Some(Strategy::for_exchange(e, e.buyer, ex));
        strategies[e.seller] = Some(Strategy::for_exchange(e, e.seller, ex));
    }
    let strategies = strategies
        .into_iter()
        .enumerate()
        .map(|(a, s)| {
            s.unwrap_or_else(|| match instance.incident(a).first() {
                Some(&k) => Strategy::propose(instance.edge(k).other(a), 0.0, 0.0),
                None => Strategy::IDLE,
            })
        })
        .collect();
    Ok(StrategyProfile(strategies))
}

/// Assembles an outcome from a feasible `(matching, aspirations)` pair and
/// certifies it independently of how it was found.
pub fn outcome_from_aspirations(
    instance: &Instance,
    matching: &[EdgeIdx],
    aspirations: AspirationVector,
    tol: f64,
    stats: SolverStats,
) -> Result<StableOutcome, SolverError> {
    let profile = construct_profile(instance, matching, &aspirations, tol)?;
    let payoffs = payoff_profile(instance, &profile);
    let certificate = certify_profile(instance, &profile, tol);
    Ok(StableOutcome {
        matching: induced_exchange_network(instance, &profile),
        aspirations,
        profile,
        payoffs,
        certificate,
        stats,
    })
}

/// Finds a certified pairwise-stable outcome.
///
/// Runs deferred acceptance with concession step `config.step`, polishes the
/// tentative outcome to an exact fixed point and verifies it. On a failed
/// verification the step is halved and the procedure restarts, at most
/// `config.max_retries` times.
pub fn solve(instance: &Instance, config: &SolverConfig) -> Result<StableOutcome, SolverError> {
    if !(config.step > 0.0 && config.step <= 1.0) {
        return Err(SolverError::InvalidArgument(format!("step {} not in (0, 1]", config.step)));
    }
    let start = Instant::now();
    let mut step = config.step;
    let mut stats = SolverStats::default();
    let mut reason = String::new();
    for attempt in 0..=config.max_retries {
        let mut run = deferred::run(instance, config.propose_side, step, config.max_iterations, |_| {})
            .map_err(|reason| SolverError::NonConvergence {
                retries: attempt,
                last_step: step,
                reason,
            })?;
        let settled = deferred::settle(instance, config.propose_side, step, config.max_iterations, &mut run, |_| {})
            .map_err(|reason| SolverError::NonConvergence {
                retries: attempt,
                last_step: step,
                reason,
            })?;
        stats.proposals += run.proposals;
        stats.rejections += run.rejections;
        stats.polish_sweeps += run.polish_sweeps;
        let (matching, aspirations) = run.aspirations(instance, config.propose_side);

        let report = feasible(instance, &matching, &aspirations, config.tol);
        if !settled {
            reason = "polishing did not come to rest".into();
        } else if report.is_feasible() {
            stats.retries = attempt;
            stats.final_step = step;
            let mut outcome =
                outcome_from_aspirations(instance, &matching, aspirations, config.tol, stats.clone())?;
            if outcome.certificate.is_stable() {
                outcome.stats.wall_time = start.elapsed();
                return Ok(outcome);
            }
            reason = format!("certificate rejected outcome: {:?}", outcome.certificate.violation);
        } else {
            reason = format!("infeasible after polishing: {:?}", report.violations);
        }
        step *= 0.5;
    }
    Err(SolverError::NonConvergence {
        retries: config.max_retries,
        last_step: step * 2.0,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const RX_MAX: f64 = 0.732_050_807_568_877_3;
    const SYM: f64 = 0.414_213_562_373_095_1;

    #[test]
    fn symmetric_split_is_feasible() {
        let inst = fixtures::sqrt_single_edge();
        let report = feasible(&inst, &[0], &AspirationVector(vec![0.5, 0.5]), 1e-6);
        assert!(report.is_feasible(), "{report:?}");
        assert!(report.crossing_slacks[0].abs() < 1e-8);
    }

    #[test]
    fn pair_sum_violation() {
        let inst = fixtures::sqrt_single_edge();
        let report = feasible(&inst, &[0], &AspirationVector(vec![0.3, 0.3]), 1e-6);
        assert!(matches!(
            report.violations[..],
            [Constraint::PairSum { edge: 0, .. }, Constraint::PayoffMismatch { edge: 0, .. }]
        ));
    }

    #[test]
    fn idle_rival_with_seller_at_top() {
        let inst = fixtures::two_buyers_one_seller();
        // b1 = 0, b2 = 1, s1 = 2; edge 0 is b1-s1.
        let report = feasible(&inst, &[0], &AspirationVector(vec![0.0, 0.0, 1.0]), 1e-6);
        assert!(report.is_feasible(), "{report:?}");
        assert!((report.payoffs[2] - RX_MAX).abs() < 1e-9);
        assert_eq!(report.payoffs[0], 0.0);
        assert!(report.crossing_slacks[1].abs() < 1e-8);
    }

    #[test]
    fn unmatched_pair_is_infeasible() {
        let inst = fixtures::sqrt_single_edge();
        let report = feasible(&inst, &[], &AspirationVector::zeros(2), 1e-6);
        assert!(matches!(report.violations[..], [Constraint::Crossing { edge: 0, .. }]));
    }

    #[test]
    fn construct_profile_at_symmetric_point() {
        let inst = fixtures::sqrt_single_edge();
        let s = SYM / RX_MAX;
        let profile = construct_profile(&inst, &[0], &AspirationVector(vec![s, 1.0 - s]), 1e-6).unwrap();
        let (b, sel) = (profile.get(0), profile.get(1));
        assert_eq!(b.partner, Some(1));
        assert!((b.give - 0.5).abs() < 1e-6 && (b.ask - 0.5).abs() < 1e-6);
        assert_eq!((b.give, b.ask), (sel.ask, sel.give));
    }

    #[test]
    fn construct_profile_from_path_parameter() {
        let inst = fixtures::sqrt_single_edge();
        // Close to, but not exactly, the symmetric split at s = 0.565826.
        let s = 0.565_685;
        let profile = construct_profile(&inst, &[0], &AspirationVector(vec![s, 1.0 - s]), 1e-6).unwrap();
        let b = profile.get(0);
        assert!((b.give - 0.5).abs() < 1e-3 && (b.ask - 0.5).abs() < 1e-3, "{b:?}");
    }

    #[test]
    fn construct_profile_at_path_end() {
        let inst = fixtures::sqrt_single_edge();
        let profile = construct_profile(&inst, &[0], &AspirationVector(vec![1.0, 0.0]), 1e-6).unwrap();
        let u = payoff_profile(&inst, &profile);
        assert!((u[0] - RX_MAX).abs() < 1e-9);
        assert!(u[1].abs() < 1e-9);
    }

    #[test]
    fn unmatched_actor_proposes_to_first_neighbour() {
        let inst = fixtures::two_buyers_one_seller();
        let profile = construct_profile(&inst, &[0], &AspirationVector(vec![0.0, 0.0, 1.0]), 1e-6).unwrap();
        assert_eq!(*profile.get(1), Strategy::propose(2, 0.0, 0.0));
    }

    #[test]
    fn construct_profile_rejects_infeasible_input() {
        let inst = fixtures::sqrt_single_edge();
        let err = construct_profile(&inst, &[0], &AspirationVector(vec![0.3, 0.3]), 1e-6).unwrap_err();
        assert!(matches!(err, SolverError::Infeasible(_)));
    }

    #[test]
    fn single_edge_is_proposer_optimal() {
        let inst = fixtures::sqrt_single_edge();
        let out = solve(&inst, &SolverConfig::default()).unwrap();
        assert!(out.certificate.is_stable());
        assert!((out.payoffs[0] - RX_MAX).abs() < 1e-6);
        assert!(out.payoffs[1].abs() < 1e-6);

        let sellers = SolverConfig {
            propose_side: Side::Seller,
            ..SolverConfig::default()
        };
        let out = solve(&inst, &sellers).unwrap();
        assert!((out.payoffs[1] - RX_MAX).abs() < 1e-6);
        assert!(out.payoffs[0].abs() < 1e-6);
    }

    #[test]
    fn competition_concedes_everything() {
        let inst = fixtures::two_buyers_one_seller();
        let out = solve(&inst, &SolverConfig::default()).unwrap();
        assert!(out.certificate.is_stable());
        assert!((out.payoffs[2] - RX_MAX).abs() < 1e-3);
        assert!(out.payoffs[0].abs() < 1e-3 && out.payoffs[1].abs() < 1e-3);
        assert_eq!(out.matching.matched.len(), 1);
    }

    #[test]
    fn empty_instance() {
        let inst = fixtures::no_edges();
        let out = solve(&inst, &SolverConfig::default()).unwrap();
        assert!(out.matching.is_empty());
        assert_eq!(out.payoffs, vec![0.0, 0.0]);
        assert!(out.certificate.is_stable());
        assert_eq!(*out.profile.get(0), Strategy::IDLE);
    }

    #[test]
    fn bad_step_is_rejected() {
        let inst = fixtures::sqrt_single_edge();
        let cfg = SolverConfig {
            step: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(solve(&inst, &cfg), Err(SolverError::InvalidArgument(_))));
    }
}
