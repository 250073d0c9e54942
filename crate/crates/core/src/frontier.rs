//! Per-edge Pareto frontier: payoff bounds, the efficient exchange for a given
//! payoff level of one side, the frontier maps between the two sides' payoffs
//! and the path of rationally feasible efficient payoff vectors.
//!
//! The efficient exchange that gives the *leader* a payoff of at least `q` is
//! found with two nested one-dimensional searches. For a leader give `g`,
//! bisection recovers the smallest receive `r(g)` with `V_leader(g, r) >= q`;
//! the follower payoff `V_follower(g, r(g))` is then maximised over the
//! feasible range of `g` by a 64-point guard scan and golden-section search.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use thiserror::Error;

use crate::model::{Actor, Exchange, NumericConfig};
use crate::utility::{PayoffVector, Utility, UtilitySpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontierError {
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("exchange ({}, {}) outside the exchange polytope", .0.m_i, .0.m_j)]
    OutsidePolytope(Exchange),
}

/// Bilateral payoff functions of one edge. Baselines are evaluated once, so the
/// null exchange pays exactly zero to both sides.
#[derive(Debug, Clone)]
pub struct PairPayoffs {
    pub buyer_utility: UtilitySpec,
    pub seller_utility: UtilitySpec,
    pub buyer_endowment: f64,
    pub seller_endowment: f64,
    pub capacity: f64,
    buyer_base: f64,
    seller_base: f64,
}

impl PairPayoffs {
    pub fn new(buyer: &Actor, seller: &Actor, capacity: f64) -> Self {
        PairPayoffs {
            buyer_utility: buyer.utility,
            seller_utility: seller.utility,
            buyer_endowment: buyer.endowment,
            seller_endowment: seller.endowment,
            capacity,
            buyer_base: buyer.utility.value(buyer.endowment, 0.0),
            seller_base: seller.utility.value(seller.endowment, 0.0),
        }
    }

    /// `V_ij`: the buyer keeps `|M_i| - m_i` of X and receives `m_j` of Y.
    #[inline]
    pub fn buyer(&self, ex: Exchange) -> f64 {
        let own = (self.buyer_endowment - ex.m_i).max(0.0);
        self.buyer_utility.value(own, ex.m_j) - self.buyer_base
    }

    /// `V_ji`: the seller keeps `|M_j| - m_j` of Y and receives `m_i` of X.
    #[inline]
    pub fn seller(&self, ex: Exchange) -> f64 {
        let own = (self.seller_endowment - ex.m_j).max(0.0);
        self.seller_utility.value(own, ex.m_i) - self.seller_base
    }

    pub fn vector(&self, ex: Exchange) -> PayoffVector {
        PayoffVector::new(self.buyer(ex), self.seller(ex))
    }

    pub fn checked_buyer(&self, ex: Exchange) -> Result<f64, FrontierError> {
        self.require_in_ex(ex)?;
        Ok(self.buyer(ex))
    }

    pub fn checked_seller(&self, ex: Exchange) -> Result<f64, FrontierError> {
        self.require_in_ex(ex)?;
        Ok(self.seller(ex))
    }

    fn require_in_ex(&self, ex: Exchange) -> Result<(), FrontierError> {
        if self.in_ex(ex, 0.0) {
            Ok(())
        } else {
            Err(FrontierError::OutsidePolytope(ex))
        }
    }

    pub fn in_ex(&self, ex: Exchange, slack: f64) -> bool {
        ex.m_i >= -slack
            && ex.m_j >= -slack
            && ex.m_i <= self.buyer_endowment + slack
            && ex.m_j <= self.seller_endowment + slack
            && ex.m_i + ex.m_j <= self.capacity + slack
    }
}

/// Which side's payoff level parametrises a frontier query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leader {
    Buyer,
    Seller,
}

/// The payoff functions seen from the leader: the leader gives `g`, receives `r`.
struct Oriented<'a> {
    pay: &'a PairPayoffs,
    leader: Leader,
}

impl Oriented<'_> {
    fn exchange(&self, g: f64, r: f64) -> Exchange {
        match self.leader {
            Leader::Buyer => Exchange::new(g, r),
            Leader::Seller => Exchange::new(r, g),
        }
    }

    fn leader_endowment(&self) -> f64 {
        match self.leader {
            Leader::Buyer => self.pay.buyer_endowment,
            Leader::Seller => self.pay.seller_endowment,
        }
    }

    fn follower_endowment(&self) -> f64 {
        match self.leader {
            Leader::Buyer => self.pay.seller_endowment,
            Leader::Seller => self.pay.buyer_endowment,
        }
    }

    fn give_cap(&self) -> f64 {
        self.leader_endowment().min(self.pay.capacity)
    }

    fn receive_cap(&self, g: f64) -> f64 {
        let mut r = self.pay.capacity - g;
        // The subtraction can round up so that `g + r` exceeds the capacity.
        if g + r > self.pay.capacity {
            r = r.next_down();
        }
        self.follower_endowment().min(r).max(0.0)
    }

    fn lead(&self, g: f64, r: f64) -> f64 {
        let ex = self.exchange(g, r);
        match self.leader {
            Leader::Buyer => self.pay.buyer(ex),
            Leader::Seller => self.pay.seller(ex),
        }
    }

    fn follow(&self, g: f64, r: f64) -> f64 {
        let ex = self.exchange(g, r);
        match self.leader {
            Leader::Buyer => self.pay.seller(ex),
            Leader::Seller => self.pay.buyer(ex),
        }
    }

    /// Smallest receive that gives the leader at least `q`.
    fn receive_for(&self, g: f64, q: f64) -> f64 {
        if self.lead(g, 0.0) >= q {
            return 0.0;
        }
        let cap = self.receive_cap(g);
        if self.lead(g, cap) < q {
            return cap;
        }
        illinois_up(0.0, cap, q, |r| self.lead(g, r))
    }

    /// Largest give for which the leader can still reach `q`.
    fn max_give(&self, q: f64) -> f64 {
        let cap = self.give_cap();
        let reach = |g: f64| self.lead(g, self.receive_cap(g)) >= q;
        if reach(cap) {
            return cap;
        }
        if !reach(0.0) {
            return 0.0;
        }
        let (lo, _) = bisect(0.0, cap, |g| !reach(g));
        lo
    }

    fn efficient(&self, q: f64) -> (Exchange, f64) {
        let g_hi = self.max_give(q);
        let objective = |g: f64| {
            let r = self.receive_for(g, q);
            (self.follow(g, r), r)
        };
        if g_hi <= 0.0 {
            let (v, r) = objective(0.0);
            return (self.exchange(0.0, r), v);
        }

        let last = GUARD_POINTS - 1;
        let grid: Vec<f64> = (0..GUARD_POINTS)
            .map(|k| if k == last { g_hi } else { g_hi * k as f64 / last as f64 })
            .collect();
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let mut best_k = 0;
        for (k, &g) in grid.iter().enumerate() {
            let (v, r) = objective(g);
            if v > best.0 {
                best = (v, g, r);
                best_k = k;
            }
        }
        let a = grid[best_k.saturating_sub(1)];
        let b = grid[(best_k + 1).min(last)];
        let g = golden_max(a, b, GOLDEN_TOL * g_hi.max(1.0), |g| objective(g).0);
        let (v, r) = objective(g);
        if v > best.0 {
            best = (v, g, r);
        }
        (self.exchange(best.1, best.2), best.0)
    }
}

const GUARD_POINTS: usize = 64;
const GOLDEN_TOL: f64 = 1e-12;

/// Bracket width at which bisection stops. Square-root utilities turn a
/// quantity error `d` near zero into a payoff error `sqrt(d)`, so this is
/// far below what the payoff tolerances alone would need.
const BISECT_WIDTH: f64 = 1e-20;

/// Bisection on a predicate that is false at `lo` and true at `hi`, run to
/// `BISECT_WIDTH` or the resolution of f64. Returns the final bracket.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> (f64, f64) {
    for _ in 0..256 {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= BISECT_WIDTH || mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Leader payoffs this close above the target count as hitting it.
const ROOT_VALUE_TOL: f64 = 1e-15;

/// Smallest `x` in `[lo, hi]` with `f(x) >= q`, for increasing `f` with
/// `f(lo) < q <= f(hi)`. Illinois-modified regula falsi that always keeps a
/// valid bracket, so the returned point satisfies `f(x) >= q`.
fn illinois_up(mut lo: f64, mut hi: f64, q: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut f_lo, mut f_hi) = (f(lo) - q, f(hi) - q);
    let mut side = 0i8;
    for _ in 0..200 {
        if f_hi <= ROOT_VALUE_TOL * q.abs().max(1.0) || hi - lo <= BISECT_WIDTH {
            break;
        }
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        // Fall back to bisection when the secant leaves the open bracket.
        if !(x > lo && x < hi) {
            x = lo + 0.5 * (hi - lo);
            if x <= lo || x >= hi {
                break;
            }
        }
        let fx = f(x) - q;
        if fx >= 0.0 {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
    }
    hi
}

/// Golden-section search for the maximiser of a unimodal `f` on `[a, b]`.
fn golden_max(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

/// Payoff ranges of both sides over a designated exchange set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffBounds {
    pub v_min_i: f64,
    pub v_max_i: f64,
    pub v_min_j: f64,
    pub v_max_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeSet {
    /// All possible exchanges.
    Possible,
    /// Exchanges giving both sides a nonnegative payoff.
    RationallyFeasible,
}

/// One row of a sampled RQ path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub u_i: f64,
    pub u_j: f64,
    pub exchange: Exchange,
}

/// Frontier queries for one exchange opportunity.
///
/// Queries are pure functions of their argument; results are memoised by the
/// exact bit pattern of the (clamped) argument, so concurrent and sequential
/// use return identical values.
pub struct FrontierMap {
    payoffs: PairPayoffs,
    ex: PayoffBounds,
    rx: PayoffBounds,
    numeric: NumericConfig,
    cache: Mutex<HashMap<(Leader, u64), (Exchange, f64)>>,
}

impl fmt::Debug for FrontierMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrontierMap")
            .field("payoffs", &self.payoffs)
            .field("ex", &self.ex)
            .field("rx", &self.rx)
            .finish_non_exhaustive()
    }
}

impl FrontierMap {
    pub fn new(buyer: &Actor, seller: &Actor, capacity: f64, numeric: NumericConfig) -> Self {
        let payoffs = PairPayoffs::new(buyer, seller, capacity);
        let give_i = payoffs.buyer_endowment.min(capacity);
        let give_j = payoffs.seller_endowment.min(capacity);
        let ex = PayoffBounds {
            v_max_i: payoffs.buyer(Exchange::new(0.0, give_j)),
            v_min_i: payoffs.buyer(Exchange::new(give_i, 0.0)),
            v_max_j: payoffs.seller(Exchange::new(give_i, 0.0)),
            v_min_j: payoffs.seller(Exchange::new(0.0, give_j)),
        };
        let mut map = FrontierMap {
            payoffs,
            ex,
            rx: PayoffBounds {
                v_min_i: 0.0,
                v_max_i: 0.0,
                v_min_j: 0.0,
                v_max_j: 0.0,
            },
            numeric,
            cache: Mutex::new(HashMap::new()),
        };
        map.rx.v_max_i = map.query(Leader::Seller, 0.0).1;
        map.rx.v_max_j = map.query(Leader::Buyer, 0.0).1;
        map
    }

    pub fn payoffs(&self) -> &PairPayoffs {
        &self.payoffs
    }

    pub fn ex_bounds(&self) -> PayoffBounds {
        self.ex
    }

    pub fn rx_bounds(&self) -> PayoffBounds {
        self.rx
    }

    pub fn payoff_bounds(&self, set: ExchangeSet) -> PayoffBounds {
        match set {
            ExchangeSet::Possible => self.ex,
            ExchangeSet::RationallyFeasible => self.rx,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.numeric.payoff_tol
    }

    pub fn in_ex(&self, ex: Exchange) -> bool {
        self.payoffs.in_ex(ex, 0.0)
    }

    pub fn in_rx(&self, ex: Exchange) -> bool {
        let tol = self.numeric.payoff_tol;
        self.in_ex(ex) && self.payoffs.buyer(ex) >= -tol && self.payoffs.seller(ex) >= -tol
    }

    fn domain(&self, leader: Leader) -> (f64, f64) {
        match leader {
            Leader::Buyer => (self.ex.v_min_i, self.ex.v_max_i),
            Leader::Seller => (self.ex.v_min_j, self.ex.v_max_j),
        }
    }

    fn check(&self, what: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64, FrontierError> {
        let slack = self.numeric.payoff_tol;
        if value >= lo - slack && value <= hi + slack {
            Ok(value.clamp(lo, hi))
        } else {
            Err(FrontierError::OutOfRange { what, value, lo, hi })
        }
    }

    /// Efficient exchange and follower payoff for leader level `q`, with `q`
    /// clamped into the leader's payoff range.
    fn query(&self, leader: Leader, q: f64) -> (Exchange, f64) {
        let (lo, hi) = self.domain(leader);
        let q = q.clamp(lo, hi);
        let key = (leader, q.to_bits());
        if let Some(hit) = self.cache.lock().expect("frontier cache poisoned").get(&key) {
            return *hit;
        }
        let result = Oriented {
            pay: &self.payoffs,
            leader,
        }
        .efficient(q);
        self.cache
            .lock()
            .expect("frontier cache poisoned")
            .insert(key, result);
        result
    }

    /// The unique efficient exchange giving the buyer exactly `q_i`.
    pub fn pareto_point(&self, q_i: f64) -> Result<Exchange, FrontierError> {
        let q = self.check("buyer payoff level", q_i, self.ex.v_min_i, self.ex.v_max_i)?;
        Ok(self.query(Leader::Buyer, q).0)
    }

    /// The unique efficient exchange giving the seller exactly `q_j`.
    pub fn pareto_point_for_seller(&self, q_j: f64) -> Result<Exchange, FrontierError> {
        let q = self.check("seller payoff level", q_j, self.ex.v_min_j, self.ex.v_max_j)?;
        Ok(self.query(Leader::Seller, q).0)
    }

    /// `V^p_ji`: best seller payoff compatible with buyer payoff `q_i`.
    pub fn frontier_value(&self, q_i: f64) -> Result<f64, FrontierError> {
        let q = self.check("buyer payoff level", q_i, self.ex.v_min_i, self.ex.v_max_i)?;
        Ok(self.query(Leader::Buyer, q).1)
    }

    /// `V^p_ij`: best buyer payoff compatible with seller payoff `v_j`.
    pub fn frontier_value_ij(&self, v_j: f64) -> Result<f64, FrontierError> {
        let v = self.check("seller payoff level", v_j, self.ex.v_min_j, self.ex.v_max_j)?;
        Ok(self.query(Leader::Seller, v).1)
    }

    /// `V^p_ji` with the argument clamped into the buyer's payoff range.
    pub fn seller_best(&self, u_i: f64) -> f64 {
        self.query(Leader::Buyer, u_i).1
    }

    /// `V^p_ij` with the argument clamped into the seller's payoff range.
    pub fn buyer_best(&self, u_j: f64) -> f64 {
        self.query(Leader::Seller, u_j).1
    }

    /// Inverts `V^p_ji` by bisection on the buyer level.
    pub fn frontier_inverse(&self, v_j: f64) -> Result<f64, FrontierError> {
        let v = self.check("seller payoff", v_j, self.ex.v_min_j, self.ex.v_max_j)?;
        let (lo, hi) = (self.ex.v_min_i, self.ex.v_max_i);
        if self.seller_best(hi) >= v {
            return Ok(hi);
        }
        if self.seller_best(lo) <= v {
            return Ok(lo);
        }
        // Predicate is false at lo (value above v) and true at hi.
        let (a, b) = bisect(lo, hi, |q| self.seller_best(q) <= v);
        let (fa, fb) = (self.seller_best(a), self.seller_best(b));
        Ok(if (fa - v).abs() <= (fb - v).abs() { a } else { b })
    }

    fn check_s(&self, s: f64) -> Result<f64, FrontierError> {
        if (-1e-12..=1.0 + 1e-12).contains(&s) {
            Ok(s.clamp(0.0, 1.0))
        } else {
            Err(FrontierError::OutOfRange {
                what: "path parameter",
                value: s,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    /// Buyer coordinate of the RQ path, affine in `s`.
    pub fn rq_buyer(&self, s: f64) -> f64 {
        (1.0 - s) * self.rx.v_min_i + s * self.rx.v_max_i
    }

    /// Position on the path of rationally feasible efficient payoffs.
    pub fn rq(&self, s: f64) -> Result<PayoffVector, FrontierError> {
        let s = self.check_s(s)?;
        let u_i = self.rq_buyer(s);
        Ok(PayoffVector::new(u_i, self.seller_best(u_i)))
    }

    /// Inverse of the buyer coordinate of the RQ path.
    pub fn rq_param_of_payoff_i(&self, u_i: f64) -> Result<f64, FrontierError> {
        let u = self.check("buyer payoff", u_i, 0.0, self.rx.v_max_i)?;
        Ok((u - self.rx.v_min_i) / (self.rx.v_max_i - self.rx.v_min_i))
    }

    /// Inverse of the seller coordinate of the RQ path, through `V^p_ij`.
    pub fn rq_param_of_payoff_j(&self, u_j: f64) -> Result<f64, FrontierError> {
        let u = self.check("seller payoff", u_j, 0.0, self.rx.v_max_j)?;
        Ok(self.rq_param_clamped_j(u))
    }

    /// Path parameter for buyer payoff `u_i` after clamping into the RQ range.
    pub fn rq_param_clamped_i(&self, u_i: f64) -> f64 {
        u_i.clamp(0.0, self.rx.v_max_i) / self.rx.v_max_i
    }

    /// Path parameter for seller payoff `u_j` after clamping into the RQ range.
    pub fn rq_param_clamped_j(&self, u_j: f64) -> f64 {
        let u = u_j.clamp(0.0, self.rx.v_max_j);
        (self.buyer_best(u) / self.rx.v_max_i).clamp(0.0, 1.0)
    }

    /// Path over all efficient payoffs, including negative ones.
    pub fn pq(&self, s: f64) -> Result<PayoffVector, FrontierError> {
        let s = self.check_s(s)?;
        let u_i = (1.0 - s) * self.ex.v_min_i + s * self.ex.v_max_i;
        Ok(PayoffVector::new(u_i, self.seller_best(u_i)))
    }

    /// `n` uniformly spaced samples of the RQ path with their exchanges.
    pub fn sample_rq(&self, n: usize) -> Vec<PathSample> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let s = if k == n - 1 { 1.0 } else { k as f64 / (n - 1) as f64 };
                let u_i = self.rq_buyer(s);
                let (exchange, u_j) = self.query(Leader::Buyer, u_i);
                PathSample { s, u_i, u_j, exchange }
            })
            .collect()
    }
}
