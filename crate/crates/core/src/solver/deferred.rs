//! Deferred acceptance over continuous concession levels.
//!
//! Every edge carries a level `t` in `[0, 1]`: offering at level `t` gives the
//! proposer `t` times its best rationally feasible payoff on that edge and
//! the receiver the frontier value at that payoff. Proposers start at the top
//! and only ever concede; receivers hold their best offer and only ever
//! trade up. A rejected proposer concedes at least one step, and at once far
//! enough to undercut the offer that beat it.
//!
//! The result of the concession phase is within one step of stability.
//! [`settle`] closes the gap: [`polish`] lowers matched levels until no
//! receiver can do better elsewhere, proposers whose matched payoff fell
//! below an open alternative are released, and proposing resumes until
//! nothing moves.

use std::collections::VecDeque;

use crate::model::{ActorIdx, EdgeIdx, Instance, Side};

use super::AspirationVector;

/// Changes below this are treated as converged while polishing.
const POLISH_EPS: f64 = 1e-13;
const MAX_POLISH_SWEEPS: usize = 10_000;
/// Polishing converges geometrically; once two consecutive contraction
/// ratios agree this closely and the ratio is slow, the remaining geometric
/// tail is applied at once, damped to avoid overshooting.
const EXTRAPOLATE_AGREE: f64 = 1e-3;
const EXTRAPOLATE_MIN_RATIO: f64 = 0.5;
const EXTRAPOLATE_DAMPING: f64 = 0.9;
/// An open alternative must beat the matched payoff by this much to
/// release a proposer.
const RELEASE_EPS: f64 = 1e-12;
const MAX_SETTLE_ROUNDS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DaEvent {
    Proposal {
        proposer: ActorIdx,
        edge: EdgeIdx,
        level: f64,
        offer: f64,
    },
    /// `receiver` now holds `edge` with payoff `held`; `previous` is what it
    /// held before, if anything.
    Held {
        receiver: ActorIdx,
        edge: EdgeIdx,
        held: f64,
        previous: Option<f64>,
    },
    /// The proposer on `edge` lowered its level from `from` to `to`, or gave
    /// the edge up when `exhausted` is set.
    Conceded {
        edge: EdgeIdx,
        from: f64,
        to: f64,
        exhausted: bool,
    },
    /// After polishing, the proposer on `edge` left its receiver for a
    /// better open edge.
    Released { proposer: ActorIdx, edge: EdgeIdx },
}

/// Levels and holdings at the end of a run.
#[derive(Debug, Clone)]
pub struct DaRun {
    pub level: Vec<f64>,
    pub exhausted: Vec<bool>,
    /// Held edge of every receiver.
    pub held: Vec<Option<EdgeIdx>>,
    /// Receiver payoff of the held offer.
    pub held_payoff: Vec<f64>,
    pub proposals: usize,
    pub rejections: usize,
    pub polish_sweeps: usize,
    pub settle_rounds: usize,
}

struct Orientation<'a> {
    instance: &'a Instance,
    side: Side,
}

impl Orientation<'_> {
    fn proposer(&self, k: EdgeIdx) -> ActorIdx {
        let e = self.instance.edge(k);
        match self.side {
            Side::Buyer => e.buyer,
            Side::Seller => e.seller,
        }
    }

    fn receiver(&self, k: EdgeIdx) -> ActorIdx {
        let e = self.instance.edge(k);
        match self.side {
            Side::Buyer => e.seller,
            Side::Seller => e.buyer,
        }
    }

    fn proposer_max(&self, k: EdgeIdx) -> f64 {
        let rx = self.instance.frontier(k).rx_bounds();
        match self.side {
            Side::Buyer => rx.v_max_i,
            Side::Seller => rx.v_max_j,
        }
    }

    /// Receiver payoff on edge `k` when the proposer earns `u`.
    fn receiver_payoff(&self, k: EdgeIdx, u: f64) -> f64 {
        let f = self.instance.frontier(k);
        match self.side {
            Side::Buyer => f.seller_best(u),
            Side::Seller => f.buyer_best(u),
        }
    }

    fn offer(&self, k: EdgeIdx, level: f64) -> f64 {
        self.receiver_payoff(k, level * self.proposer_max(k))
    }

    /// Highest level on edge `k` that still gives the receiver `h`.
    fn level_for(&self, k: EdgeIdx, h: f64) -> f64 {
        let f = self.instance.frontier(k);
        let u = match self.side {
            Side::Buyer => f.buyer_best(h),
            Side::Seller => f.seller_best(h),
        };
        (u / self.proposer_max(k)).clamp(0.0, 1.0)
    }
}

/// Runs the concession phase with minimum step `step`.
///
/// `observer` sees every proposal, holding change and concession. Fails if
/// more than `max_iterations` proposals are made.
pub fn run(
    instance: &Instance,
    side: Side,
    step: f64,
    max_iterations: usize,
    mut observer: impl FnMut(&DaEvent),
) -> Result<DaRun, String> {
    let n_edges = instance.edges().len();
    let mut state = DaRun {
        level: vec![1.0; n_edges],
        exhausted: vec![false; n_edges],
        held: vec![None; instance.n_actors()],
        held_payoff: vec![0.0; instance.n_actors()],
        proposals: 0,
        rejections: 0,
        polish_sweeps: 0,
        settle_rounds: 0,
    };
    let queue: VecDeque<ActorIdx> = instance
        .actors()
        .iter()
        .enumerate()
        .filter(|(a, actor)| actor.side == side && !instance.incident(*a).is_empty())
        .map(|(a, _)| a)
        .collect();
    propose(&Orientation { instance, side }, step, max_iterations, &mut state, queue, &mut observer)?;
    Ok(state)
}

/// Processes proposals until the queue is empty.
fn propose(
    o: &Orientation<'_>,
    step: f64,
    max_iterations: usize,
    st: &mut DaRun,
    mut queue: VecDeque<ActorIdx>,
    observer: &mut impl FnMut(&DaEvent),
) -> Result<(), String> {
    while let Some(p) = queue.pop_front() {
        // Best open edge by own payoff; incident edges are in partner order,
        // so ties go to the smaller partner.
        let Some(k) = best_open_edge(o, &*st, p).map(|(k, _)| k) else { continue };

        st.proposals += 1;
        if st.proposals > max_iterations {
            return Err(format!("deferred acceptance exceeded {max_iterations} proposals"));
        }
        let offer = o.offer(k, st.level[k]);
        observer(&DaEvent::Proposal {
            proposer: p,
            edge: k,
            level: st.level[k],
            offer,
        });

        let r = o.receiver(k);
        let accept = match st.held[r] {
            None => true,
            Some(h) => offer > st.held_payoff[r] || (offer == st.held_payoff[r] && p < o.proposer(h)),
        };
        if accept {
            let previous = st.held[r].map(|_| st.held_payoff[r]);
            let displaced = st.held[r].replace(k);
            st.held_payoff[r] = offer;
            observer(&DaEvent::Held {
                receiver: r,
                edge: k,
                held: offer,
                previous,
            });
            if let Some(h) = displaced {
                st.rejections += 1;
                concede(o, step, h, offer, &mut st.level, &mut st.exhausted, observer);
                queue.push_back(o.proposer(h));
            }
        } else {
            st.rejections += 1;
            let held = st.held_payoff[r];
            concede(o, step, k, held, &mut st.level, &mut st.exhausted, observer);
            queue.push_front(p);
        }
    }
    Ok(())
}

fn best_open_edge(o: &Orientation<'_>, st: &DaRun, p: ActorIdx) -> Option<(EdgeIdx, f64)> {
    let mut best: Option<(EdgeIdx, f64)> = None;
    for &k in o.instance.incident(p) {
        if st.exhausted[k] {
            continue;
        }
        let u = st.level[k] * o.proposer_max(k);
        if best.is_none_or(|(_, b)| u > b) {
            best = Some((k, u));
        }
    }
    best
}

/// Lowers the proposer's level on `k` after it lost to an offer worth
/// `beaten_by` to the receiver; a proposer already at zero gives up.
fn concede(
    o: &Orientation<'_>,
    step: f64,
    k: EdgeIdx,
    beaten_by: f64,
    level: &mut [f64],
    exhausted: &mut [bool],
    observer: &mut impl FnMut(&DaEvent),
) {
    let from = level[k];
    if from <= 0.0 {
        exhausted[k] = true;
        observer(&DaEvent::Conceded {
            edge: k,
            from,
            to: from,
            exhausted: true,
        });
        return;
    }
    let to = (from - step).min(o.level_for(k, beaten_by) - step).max(0.0);
    level[k] = to;
    observer(&DaEvent::Conceded {
        edge: k,
        from,
        to,
        exhausted: false,
    });
}

/// Lowers matched levels until every receiver earns at least what any other
/// neighbour could offer it at that neighbour's current payoff. Returns the
/// number of sweeps.
pub fn polish(instance: &Instance, side: Side, run: &mut DaRun) -> usize {
    let o = Orientation { instance, side };
    let n = instance.n_actors();
    let mut matched_edge: Vec<Option<EdgeIdx>> = vec![None; n];
    for (r, h) in run.held.iter().enumerate() {
        if let Some(k) = *h {
            matched_edge[r] = Some(k);
            matched_edge[o.proposer(k)] = Some(k);
        }
    }
    let proposer_payoff = |a: ActorIdx, level: &[f64]| match matched_edge[a] {
        Some(k) => level[k] * o.proposer_max(k),
        None => 0.0,
    };

    // Level decreases of the previous sweep and their contraction ratio,
    // for extrapolating slow geometric convergence.
    let mut prev: Option<(Vec<f64>, Option<f64>)> = None;
    for sweep in 1..=MAX_POLISH_SWEEPS {
        let before = run.level.clone();
        let mut changed = false;
        for r in 0..n {
            let Some(k) = run.held[r] else { continue };
            let current = o.offer(k, run.level[k]);
            let mut required = 0.0f64;
            for &k2 in instance.incident(r) {
                if k2 == k {
                    continue;
                }
                let u = proposer_payoff(o.proposer(k2), &run.level);
                if u <= o.proposer_max(k2) {
                    required = required.max(o.receiver_payoff(k2, u));
                }
            }
            if required > current + POLISH_EPS {
                let t = o.level_for(k, required);
                if t < run.level[k] {
                    run.level[k] = t;
                    changed = true;
                }
            }
        }
        if !changed {
            refresh_holdings(&o, run);
            return sweep;
        }
        let delta: Vec<f64> = before.iter().zip(&run.level).map(|(b, a)| b - a).collect();
        let total: f64 = delta.iter().sum();
        prev = match prev {
            Some((last, last_ratio)) => {
                let ratio = total / last.iter().sum::<f64>();
                let steady = last_ratio.is_some_and(|r| (r - ratio).abs() < EXTRAPOLATE_AGREE);
                if steady && (EXTRAPOLATE_MIN_RATIO..1.0).contains(&ratio) {
                    let gain = EXTRAPOLATE_DAMPING * ratio / (1.0 - ratio);
                    for (t, d) in run.level.iter_mut().zip(&delta) {
                        *t = (*t - gain * d).max(0.0);
                    }
                    None
                } else {
                    Some((delta, Some(ratio)))
                }
            }
            None => Some((delta, None)),
        };
    }
    refresh_holdings(&o, run);
    MAX_POLISH_SWEEPS
}

fn refresh_holdings(o: &Orientation<'_>, run: &mut DaRun) {
    for r in 0..run.held.len() {
        if let Some(k) = run.held[r] {
            run.held_payoff[r] = o.offer(k, run.level[k]);
        }
    }
}

/// Matched proposers with an open edge worth more than their matched one.
pub fn unsettled(instance: &Instance, side: Side, run: &DaRun) -> Vec<(ActorIdx, EdgeIdx)> {
    let o = Orientation { instance, side };
    let mut out: Vec<(ActorIdx, EdgeIdx)> = run
        .held
        .iter()
        .flatten()
        .filter_map(|&k| {
            let p = o.proposer(k);
            let current = run.level[k] * o.proposer_max(k);
            let (best, u) = best_open_edge(&o, run, p)?;
            (best != k && u > current + RELEASE_EPS).then_some((p, k))
        })
        .collect();
    out.sort_unstable();
    out
}

/// Alternates polishing, releasing unsettled proposers and resuming
/// proposals. Returns `Ok(false)` if that does not come to rest within a
/// bounded number of rounds.
pub fn settle(
    instance: &Instance,
    side: Side,
    step: f64,
    max_iterations: usize,
    run: &mut DaRun,
    mut observer: impl FnMut(&DaEvent),
) -> Result<bool, String> {
    let o = Orientation { instance, side };
    for _ in 0..MAX_SETTLE_ROUNDS {
        run.settle_rounds += 1;
        run.polish_sweeps += polish(instance, side, run);
        let movers = unsettled(instance, side, run);
        if movers.is_empty() {
            return Ok(true);
        }
        let mut queue = VecDeque::new();
        for (p, k) in movers {
            let r = o.receiver(k);
            run.held[r] = None;
            run.held_payoff[r] = 0.0;
            observer(&DaEvent::Released { proposer: p, edge: k });
            queue.push_back(p);
            // Offers that lost to the released one may now win.
            for &k2 in instance.incident(r) {
                if std::mem::take(&mut run.exhausted[k2]) {
                    queue.push_back(o.proposer(k2));
                }
            }
        }
        propose(&o, step, max_iterations, run, queue, &mut observer)?;
    }
    Ok(false)
}

impl DaRun {
    /// Matching and aspirations implied by the held offers. Buyers take the
    /// path position of their payoff and sellers the complement.
    pub fn aspirations(&self, instance: &Instance, side: Side) -> (Vec<EdgeIdx>, AspirationVector) {
        let o = Orientation { instance, side };
        let mut s = AspirationVector::zeros(instance.n_actors());
        let mut matching: Vec<EdgeIdx> = self.held.iter().flatten().copied().collect();
        matching.sort_unstable();
        for &k in &matching {
            let e = instance.edge(k);
            let f = instance.frontier(k);
            let s_i = match side {
                Side::Buyer => self.level[k],
                Side::Seller => f.rq_param_clamped_j(self.level[k] * o.proposer_max(k)),
            };
            s.0[e.buyer] = s_i;
            s.0[e.seller] = 1.0 - s_i;
        }
        (matching, s)
    }
}
