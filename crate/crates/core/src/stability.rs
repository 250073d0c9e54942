//! Pairwise-stability checks.
//!
//! A profile is unstable exactly when some actor proposes terms that would
//! hurt it, or some edge has a point on its rationally feasible frontier that
//! weakly improves both endpoints and strictly improves one. Because the
//! frontier is strictly decreasing, the second condition reduces to two
//! scalar comparisons per edge after clamping the current payoffs into the
//! edge's path range.

use serde::{Deserialize, Serialize};

use crate::model::{payoff_profile, ActorIdx, EdgeIdx, Instance, StrategyProfile};
use crate::utility::PayoffVector;

pub const DEFAULT_STABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrrationalStrategy {
    pub actor: ActorIdx,
    pub payoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    IrrationalStrategy(IrrationalStrategy),
    BlockingPair {
        edge: EdgeIdx,
        dominating: PayoffVector,
        current: PayoffVector,
    },
}

/// `min(u_j - V^p_ji(c_i), u_i - V^p_ij(c_j))` for one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSlack {
    pub edge: EdgeIdx,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockingReport {
    pub verdict: Verdict,
    pub violation: Option<Violation>,
    pub slacks: Vec<EdgeSlack>,
    pub tol: f64,
}

impl BlockingReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }

    pub fn min_slack(&self) -> f64 {
        self.slacks.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of the frontier test on one edge at the given payoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCheck {
    pub slack: f64,
    pub blocking: Option<PayoffVector>,
}

/// Tests edge `k` against current payoffs `u_i` (buyer) and `u_j` (seller).
pub fn check_edge(instance: &Instance, k: EdgeIdx, u_i: f64, u_j: f64, tol: f64) -> EdgeCheck {
    let f = instance.frontier(k);
    let rx = f.rx_bounds();
    let c_i = u_i.clamp(0.0, rx.v_max_i);
    let c_j = u_j.clamp(0.0, rx.v_max_j);
    let best_j = f.seller_best(c_i);
    let best_i = f.buyer_best(c_j);
    let slack = (u_j - best_j).min(u_i - best_i);

    // The clamped point only dominates when clamping did not lower it.
    let blocking = if u_i <= rx.v_max_i && best_j > u_j + tol {
        Some(PayoffVector::new(c_i, best_j))
    } else if u_j <= rx.v_max_j && best_i > u_i + tol {
        Some(PayoffVector::new(best_i, c_j))
    } else {
        None
    };
    EdgeCheck { slack, blocking }
}

/// Margin version of [`check_edge`]: edge `k` blocks when some rationally
/// feasible efficient point gives both endpoints at least `margin` more.
///
/// Unlike the plain test, this is robust to perturbing the payoffs by less
/// than `margin` in either coordinate, which is what grid searches need.
pub fn check_edge_with_margin(instance: &Instance, k: EdgeIdx, u_i: f64, u_j: f64, margin: f64) -> EdgeCheck {
    let f = instance.frontier(k);
    let v_max_i = f.rx_bounds().v_max_i;
    let c_i = (u_i + margin).max(0.0);
    let best_j = f.seller_best(c_i.min(v_max_i));
    let slack = u_j + margin - best_j;
    let blocking = (c_i <= v_max_i && slack <= 0.0).then(|| PayoffVector::new(c_i, best_j));
    EdgeCheck { slack, blocking }
}

/// Actors whose proposed terms would give them a negative payoff if accepted.
pub fn check_individual_rationality(
    instance: &Instance,
    profile: &StrategyProfile,
    tol: f64,
) -> Vec<IrrationalStrategy> {
    let mut out = Vec::new();
    for (a, strategy) in profile.strategies().iter().enumerate() {
        let Some(partner) = strategy.partner else { continue };
        let Some(k) = instance.edge_between(a, partner) else { continue };
        let edge = instance.edge(k);
        let ex = strategy.as_exchange(edge, a);
        let pay = instance.frontier(k).payoffs();
        let payoff = if a == edge.buyer { pay.buyer(ex) } else { pay.seller(ex) };
        if payoff < -tol {
            out.push(IrrationalStrategy { actor: a, payoff });
        }
    }
    out
}

/// Scans edges in `(buyer, seller)` order for a blocking pair.
///
/// Payoffs are recomputed from the strategies.
pub fn find_blocking_pair(instance: &Instance, profile: &StrategyProfile, tol: f64) -> BlockingReport {
    let payoffs = payoff_profile(instance, profile);
    blocking_report(instance, &payoffs, tol)
}

/// Frontier test of every edge against a payoff vector.
pub fn blocking_report(instance: &Instance, payoffs: &[f64], tol: f64) -> BlockingReport {
    report_with(instance, payoffs, tol, check_edge)
}

/// [`blocking_report`] with [`check_edge_with_margin`] as the edge test.
pub fn margin_blocking_report(instance: &Instance, payoffs: &[f64], margin: f64) -> BlockingReport {
    report_with(instance, payoffs, margin, check_edge_with_margin)
}

fn report_with(
    instance: &Instance,
    payoffs: &[f64],
    tol: f64,
    check_edge: impl Fn(&Instance, EdgeIdx, f64, f64, f64) -> EdgeCheck,
) -> BlockingReport {
    let mut violation = None;
    let mut slacks = Vec::with_capacity(instance.edges().len());
    for (k, e) in instance.edges().iter().enumerate() {
        let (u_i, u_j) = (payoffs[e.buyer], payoffs[e.seller]);
        let check = check_edge(instance, k, u_i, u_j, tol);
        slacks.push(EdgeSlack {
            edge: k,
            slack: check.slack,
        });
        if violation.is_none() {
            if let Some(dominating) = check.blocking {
                violation = Some(Violation::BlockingPair {
                    edge: k,
                    dominating,
                    current: PayoffVector::new(u_i, u_j),
                });
            }
        }
    }
    BlockingReport {
        verdict: if violation.is_some() { Verdict::Unstable } else { Verdict::Stable },
        violation,
        slacks,
        tol,
    }
}

/// Both checks over one profile: irrational strategies take precedence over
/// blocking pairs in the reported violation.
pub fn certify_profile(instance: &Instance, profile: &StrategyProfile, tol: f64) -> BlockingReport {
    let mut report = find_blocking_pair(instance, profile, tol);
    if let Some(first) = check_individual_rationality(instance, profile, tol).first() {
        report.verdict = Verdict::Unstable;
        report.violation = Some(Violation::IrrationalStrategy(*first));
    }
    report
}
