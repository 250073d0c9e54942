//! Exhaustive grid search for stable outcomes on small instances.
//!
//! Every matching is enumerated; matched pairs take buyer aspirations on a
//! uniform grid and sellers the complement. Exact stable outcomes generally
//! fall between grid points, so stability is tested with a margin: an edge
//! blocks only if some efficient exchange on it gives both endpoints at least
//! `tolerance` more. With `tolerance` above the largest payoff change caused
//! by rounding to the grid, the grid neighbour of every exact stable outcome
//! is accepted.

use crate::model::{induced_exchange_network, payoff_profile, ActorIdx, EdgeIdx, Instance};
use crate::stability::{
    blocking_report, check_edge_with_margin, check_individual_rationality, margin_blocking_report, Verdict,
    Violation, DEFAULT_STABILITY_TOL,
};

use super::{feasible, supporting_profile, AspirationVector, Constraint, SolverError};
use super::{SolverStats, StableOutcome};

pub const DEFAULT_ACTOR_CAP: usize = 8;

/// Samples used to bound path slopes.
const SLOPE_SAMPLES: usize = 201;
/// Margin on the sampled slope bounds.
const SLOPE_SAFETY: f64 = 1.5;
/// Outcomes whose worst exact slack agrees to this precision rank equal.
const MARGIN_QUANTUM: f64 = 1e-9;
/// Tolerance for the pair-sum and range constraints of grid aspirations.
const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub grid_step: f64,
    /// Payoff margin used for the stability test.
    pub tolerance: f64,
    /// Per-actor bound on the payoff change caused by one grid step.
    pub payoff_resolution: Vec<f64>,
    /// Accepted outcomes, smallest exact blocking violation first.
    pub outcomes: Vec<StableOutcome>,
}

impl BruteForceResult {
    /// Outcome closest to exact stability.
    pub fn best(&self) -> Option<&StableOutcome> {
        self.outcomes.first()
    }
}

/// Largest `|d RQ_j / ds|` on edge `k`, from samples, with a safety margin.
fn seller_slope(instance: &Instance, k: EdgeIdx) -> f64 {
    let samples = instance.frontier(k).sample_rq(SLOPE_SAMPLES);
    let max = samples
        .windows(2)
        .map(|w| ((w[1].u_j - w[0].u_j) / (w[1].s - w[0].s)).abs())
        .fold(0.0, f64::max);
    max * SLOPE_SAFETY
}

/// All matchings of the instance, each as a sorted edge list.
fn matchings(instance: &Instance) -> Vec<Vec<EdgeIdx>> {
    fn rec(instance: &Instance, k: EdgeIdx, used: &mut [bool], cur: &mut Vec<EdgeIdx>, out: &mut Vec<Vec<EdgeIdx>>) {
        if k == instance.edges().len() {
            out.push(cur.clone());
            return;
        }
        rec(instance, k + 1, used, cur, out);
        let e = instance.edge(k);
        if !used[e.buyer] && !used[e.seller] {
            used[e.buyer] = true;
            used[e.seller] = true;
            cur.push(k);
            rec(instance, k + 1, used, cur, out);
            cur.pop();
            used[e.buyer] = false;
            used[e.seller] = false;
        }
    }
    let mut out = Vec::new();
    rec(instance, 0, &mut vec![false; instance.n_actors()], &mut Vec::new(), &mut out);
    out
}

struct Search<'a> {
    instance: &'a Instance,
    tol: f64,
    grid: Vec<f64>,
    matching: &'a [EdgeIdx],
    /// Edges whose endpoints are all fixed once matched edge `d` is assigned.
    checks: Vec<Vec<EdgeIdx>>,
    payoffs: Vec<f64>,
    s: Vec<f64>,
    found: Vec<Vec<f64>>,
}

impl Search<'_> {
    fn edges_ok(&self, edges: &[EdgeIdx]) -> bool {
        edges.iter().all(|&k| {
            let e = self.instance.edge(k);
            check_edge_with_margin(self.instance, k, self.payoffs[e.buyer], self.payoffs[e.seller], self.tol)
                .blocking
                .is_none()
        })
    }

    fn dfs(&mut self, d: usize) {
        if d == self.matching.len() {
            self.found.push(self.s.clone());
            return;
        }
        let k = self.matching[d];
        let e = *self.instance.edge(k);
        let f = self.instance.frontier(k);
        for g in 0..self.grid.len() {
            let s = self.grid[g];
            let u_i = f.rq_buyer(s);
            self.payoffs[e.buyer] = u_i;
            self.payoffs[e.seller] = f.seller_best(u_i);
            self.s[e.buyer] = s;
            self.s[e.seller] = 1.0 - s;
            if self.edges_ok(&self.checks[d].clone()) {
                self.dfs(d + 1);
            }
        }
        self.payoffs[e.buyer] = 0.0;
        self.payoffs[e.seller] = 0.0;
        self.s[e.buyer] = 0.0;
        self.s[e.seller] = 0.0;
    }
}

/// Enumerates grid outcomes that pass the stability certificate.
///
/// `grid_step` must divide one into a whole number of steps (within 1e-9).
/// Instances with more than [`DEFAULT_ACTOR_CAP`] actors are refused.
pub fn brute_force_solve(instance: &Instance, grid_step: f64) -> Result<BruteForceResult, SolverError> {
    let n = instance.n_actors();
    if n > DEFAULT_ACTOR_CAP {
        return Err(SolverError::TooLarge {
            actors: n,
            cap: DEFAULT_ACTOR_CAP,
        });
    }
    let cells = (1.0 / grid_step).round();
    if !(grid_step > 0.0 && cells >= 1.0 && (cells * grid_step - 1.0).abs() < 1e-9) {
        return Err(SolverError::InvalidArgument(format!(
            "grid step {grid_step} does not divide the unit interval"
        )));
    }
    let cells = cells as usize;
    let grid: Vec<f64> = (0..=cells).map(|g| g as f64 / cells as f64).collect();

    let mut payoff_resolution = vec![0.0f64; n];
    for (k, e) in instance.edges().iter().enumerate() {
        let v_max_i = instance.frontier(k).rx_bounds().v_max_i;
        payoff_resolution[e.buyer] = payoff_resolution[e.buyer].max(grid_step * v_max_i);
        payoff_resolution[e.seller] = payoff_resolution[e.seller].max(grid_step * seller_slope(instance, k));
    }
    // Rounding to the nearest grid point moves a payoff by at most half its
    // resolution.
    let tolerance = 0.5 * payoff_resolution.iter().fold(0.0, |a: f64, &b| a.max(b)) + DEFAULT_STABILITY_TOL;

    let mut outcomes = Vec::new();
    for matching in matchings(instance) {
        let mut determined_at = vec![usize::MAX; n];
        for (d, &k) in matching.iter().enumerate() {
            let e = instance.edge(k);
            determined_at[e.buyer] = d;
            determined_at[e.seller] = d;
        }
        // Unmatched actors are fixed from the start.
        let mut initial = Vec::new();
        let mut checks = vec![Vec::new(); matching.len()];
        for (k, e) in instance.edges().iter().enumerate() {
            let at = |a: ActorIdx| determined_at[a];
            match (at(e.buyer), at(e.seller)) {
                (usize::MAX, usize::MAX) => initial.push(k),
                (usize::MAX, d) | (d, usize::MAX) => checks[d].push(k),
                (a, b) => checks[a.max(b)].push(k),
            }
        }
        let mut search = Search {
            instance,
            tol: tolerance,
            grid: grid.clone(),
            matching: &matching,
            checks,
            payoffs: vec![0.0; n],
            s: vec![0.0; n],
            found: Vec::new(),
        };
        if !search.edges_ok(&initial) {
            continue;
        }
        search.dfs(0);
        for s in search.found {
            if let Some(outcome) = grid_outcome(instance, &matching, AspirationVector(s), tolerance, grid_step) {
                outcomes.push(outcome);
            }
        }
    }

    // Rank by how far the plain (margin-free) test is from passing.
    let exact_violation = |o: &StableOutcome| {
        let worst = blocking_report(instance, &o.payoffs, 0.0).min_slack().min(0.0);
        (-worst / MARGIN_QUANTUM).round() as u64
    };
    let mut keyed: Vec<(u64, StableOutcome)> = outcomes.into_iter().map(|o| (exact_violation(&o), o)).collect();
    keyed.sort_by(|(ka, a), (kb, b)| {
        ka.cmp(kb)
            .then_with(|| a.matched_edges().cmp(&b.matched_edges()))
            .then_with(|| a.aspirations.0.partial_cmp(&b.aspirations.0).unwrap())
    });
    let outcomes = keyed.into_iter().map(|(_, o)| o).collect();

    Ok(BruteForceResult {
        grid_step,
        tolerance,
        payoff_resolution,
        outcomes,
    })
}

/// Builds and certifies the outcome of one grid point.
///
/// The crossing constraints are replaced by the margin test: on the grid
/// they hold only up to the rounding error, measured in path units.
fn grid_outcome(
    instance: &Instance,
    matching: &[EdgeIdx],
    aspirations: AspirationVector,
    tolerance: f64,
    grid_step: f64,
) -> Option<StableOutcome> {
    let report = feasible(instance, matching, &aspirations, GRID_TOL);
    if report.violations.iter().any(|v| !matches!(v, Constraint::Crossing { .. })) {
        return None;
    }
    let profile = supporting_profile(instance, matching, &aspirations).ok()?;
    let payoffs = payoff_profile(instance, &profile);
    let mut certificate = margin_blocking_report(instance, &payoffs, tolerance);
    if let Some(first) = check_individual_rationality(instance, &profile, DEFAULT_STABILITY_TOL).first() {
        certificate.verdict = Verdict::Unstable;
        certificate.violation = Some(Violation::IrrationalStrategy(*first));
    }
    certificate.is_stable().then(|| StableOutcome {
        matching: induced_exchange_network(instance, &profile),
        aspirations,
        profile,
        payoffs,
        certificate,
        stats: SolverStats {
            final_step: grid_step,
            ..SolverStats::default()
        },
    })
}
