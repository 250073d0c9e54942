//! Social network, actors, exchanges, strategies and the exchange network a
//! strategy profile induces.
//!
//! Actors are stored sorted by id and edges sorted by `(buyer id, seller id)`,
//! so iterating `0..n` over either is the canonical deterministic order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::FrontierMap;
use crate::utility::{UtilityError, UtilitySpec};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub String);

impl ActorId {
    pub fn new(id: impl Into<String>) -> Self {
        ActorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActorId {
    fn from(s: &str) -> Self {
        ActorId(s.to_owned())
    }
}

/// Buyers (`A`) hold item X, sellers (`B`) hold item Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "A", alias = "buyer", alias = "buyers")]
    Buyer,
    #[serde(rename = "B", alias = "seller", alias = "sellers")]
    Seller,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Buyer => Side::Seller,
            Side::Seller => Side::Buyer,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Buyer => f.write_str("A"),
            Side::Seller => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub id: ActorId,
    pub side: Side,
    pub endowment: f64,
    pub utility: UtilitySpec,
}

/// An exchange opportunity. Unvalidated edges may name their endpoints in
/// either order; validated instances always store the buyer first.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub buyer: ActorId,
    pub seller: ActorId,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericConfig {
    /// Absolute tolerance on transferred quantities.
    pub quantity_tol: f64,
    /// Absolute tolerance on frontier payoff queries.
    pub payoff_tol: f64,
    /// Edges whose best rationally feasible payoff is below this are dropped.
    pub degenerate_payoff: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            quantity_tol: 1e-10,
            payoff_tol: 1e-9,
            degenerate_payoff: 1e-9,
        }
    }
}

/// Instance as read from a document, before any checks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawInstance {
    pub actors: Vec<Actor>,
    pub edges: Vec<EdgeSpec>,
    pub numeric: NumericConfig,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("duplicate actor id {0}")]
    DuplicateActor(ActorId),
    #[error("actor {0}: nonpositive endowment {1}")]
    NonpositiveEndowment(ActorId, f64),
    #[error("actor {actor}: {source}")]
    Utility {
        actor: ActorId,
        #[source]
        source: UtilityError,
    },
    #[error("edge {0}-{1}: unknown actor {2}")]
    UnknownActor(ActorId, ActorId, ActorId),
    #[error("edge {0}-{1}: non-bipartite (both endpoints on side {2})")]
    NonBipartite(ActorId, ActorId, Side),
    #[error("edge {0}-{1}: nonpositive capacity {2}")]
    NonpositiveCapacity(ActorId, ActorId, f64),
    #[error("edge {0}-{1}: duplicate edge")]
    DuplicateEdge(ActorId, ActorId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationWarning {
    /// The edge admits no positive rationally feasible payoff vector.
    DroppedEdge {
        buyer: ActorId,
        seller: ActorId,
        best_buyer: f64,
        best_seller: f64,
    },
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationWarning::DroppedEdge {
                buyer,
                seller,
                best_buyer,
                best_seller,
            } => write!(
                f,
                "edge {buyer}-{seller} dropped: no positive rationally feasible payoffs \
                 (best {best_buyer:e} / {best_seller:e})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
    pub warnings: Vec<ValidationWarning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn dropped_edges(&self) -> impl Iterator<Item = (&ActorId, &ActorId)> {
        self.warnings.iter().map(|w| match w {
            ValidationWarning::DroppedEdge { buyer, seller, .. } => (buyer, seller),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid instance: {}", join_errors(.0))]
    Invalid(Vec<ValidationError>),
    #[error("unknown actor {0}")]
    UnknownActor(ActorId),
    #[error("no edge between {0} and {1}")]
    UnknownEdge(ActorId, ActorId),
    #[error("profile has {got} strategies for {expected} actors")]
    ProfileSize { expected: usize, got: usize },
    #[error("strategy of {actor}: {reason}")]
    InvalidStrategy { actor: ActorId, reason: String },
}

fn join_errors(errors: &[ValidationError]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Runs every structural and semantic check on `raw`.
///
/// Structural problems are hard errors. Edges that are well formed but only
/// admit the zero payoff vector come back as `DroppedEdge` warnings.
pub fn validate_instance(raw: &RawInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut by_id: BTreeMap<&ActorId, &Actor> = BTreeMap::new();
    for actor in &raw.actors {
        if by_id.insert(&actor.id, actor).is_some() {
            report.errors.push(ValidationError::DuplicateActor(actor.id.clone()));
        }
        if !(actor.endowment > 0.0 && actor.endowment.is_finite()) {
            report
                .errors
                .push(ValidationError::NonpositiveEndowment(actor.id.clone(), actor.endowment));
        }
        if let Err(source) = actor.utility.validate() {
            report.errors.push(ValidationError::Utility {
                actor: actor.id.clone(),
                source,
            });
        }
    }

    let mut seen = BTreeSet::new();
    let mut candidates = Vec::new();
    for edge in &raw.edges {
        let (a, b) = (&edge.buyer, &edge.seller);
        let mut structural = true;
        for end in [a, b] {
            if !by_id.contains_key(end) {
                report
                    .errors
                    .push(ValidationError::UnknownActor(a.clone(), b.clone(), end.clone()));
                structural = false;
            }
        }
        if !(edge.capacity > 0.0 && edge.capacity.is_finite()) {
            report
                .errors
                .push(ValidationError::NonpositiveCapacity(a.clone(), b.clone(), edge.capacity));
            structural = false;
        }
        if !structural {
            continue;
        }
        let (ea, eb) = (by_id[a], by_id[b]);
        if ea.side == eb.side {
            report
                .errors
                .push(ValidationError::NonBipartite(a.clone(), b.clone(), ea.side));
            continue;
        }
        let (buyer, seller) = if ea.side == Side::Buyer { (ea, eb) } else { (eb, ea) };
        if !seen.insert((buyer.id.clone(), seller.id.clone())) {
            report
                .errors
                .push(ValidationError::DuplicateEdge(buyer.id.clone(), seller.id.clone()));
            continue;
        }
        candidates.push((buyer, seller, edge.capacity));
    }

    if !report.errors.is_empty() {
        return report;
    }
    for (buyer, seller, capacity) in candidates {
        let frontier = FrontierMap::new(buyer, seller, capacity, raw.numeric);
        let best_buyer = frontier.rx_bounds().v_max_i;
        let best_seller = frontier.rx_bounds().v_max_j;
        if !(best_buyer > raw.numeric.degenerate_payoff && best_seller > raw.numeric.degenerate_payoff)
        {
            report.warnings.push(ValidationWarning::DroppedEdge {
                buyer: buyer.id.clone(),
                seller: seller.id.clone(),
                best_buyer,
                best_seller,
            });
        }
    }
    report
}

pub type ActorIdx = usize;
pub type EdgeIdx = usize;

/// A validated social network with one frontier map per exchange opportunity.
#[derive(Debug, Clone)]
pub struct Instance {
    actors: Vec<Actor>,
    edges: Vec<Edge>,
    frontiers: Arc<[FrontierMap]>,
    adjacency: Vec<Vec<EdgeIdx>>,
    numeric: NumericConfig,
}

/// A validated edge, endpoints by index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub buyer: ActorIdx,
    pub seller: ActorIdx,
    pub capacity: f64,
}

impl Edge {
    pub fn other(&self, actor: ActorIdx) -> ActorIdx {
        if actor == self.buyer {
            self.seller
        } else {
            self.buyer
        }
    }
}

impl Instance {
    /// Validates `raw` and builds the instance, dropping degenerate edges.
    pub fn from_raw(raw: RawInstance) -> Result<(Instance, ValidationReport), ModelError> {
        let report = validate_instance(&raw);
        if !report.is_valid() {
            return Err(ModelError::Invalid(report.errors.clone()));
        }
        let dropped: BTreeSet<(ActorId, ActorId)> = report
            .dropped_edges()
            .map(|(b, s)| (b.clone(), s.clone()))
            .collect();

        let mut actors = raw.actors;
        actors.sort_by(|a, b| a.id.cmp(&b.id));
        let index: BTreeMap<ActorId, ActorIdx> =
            actors.iter().enumerate().map(|(k, a)| (a.id.clone(), k)).collect();

        let mut edges: Vec<Edge> = raw
            .edges
            .iter()
            .filter_map(|e| {
                let (a, b) = (index[&e.buyer], index[&e.seller]);
                let (buyer, seller) = if actors[a].side == Side::Buyer { (a, b) } else { (b, a) };
                let key = (actors[buyer].id.clone(), actors[seller].id.clone());
                (!dropped.contains(&key)).then_some(Edge {
                    buyer,
                    seller,
                    capacity: e.capacity,
                })
            })
            .collect();
        // Actor indices follow id order, so index order is lexicographic order.
        edges.sort_by_key(|e| (e.buyer, e.seller));

        let frontiers: Vec<FrontierMap> = edges
            .iter()
            .map(|e| FrontierMap::new(&actors[e.buyer], &actors[e.seller], e.capacity, raw.numeric))
            .collect();
        let mut adjacency = vec![Vec::new(); actors.len()];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.buyer].push(k);
            adjacency[e.seller].push(k);
        }
        for list in &mut adjacency {
            list.sort_by_key(|&k| {
                let e = &edges[k];
                (e.buyer, e.seller)
            });
        }
        Ok((
            Instance {
                actors,
                edges,
                frontiers: frontiers.into(),
                adjacency,
                numeric: raw.numeric,
            },
            report,
        ))
    }

    /// Rebuilds the raw form (validated actors and surviving edges).
    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            actors: self.actors.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    buyer: self.actors[e.buyer].id.clone(),
                    seller: self.actors[e.seller].id.clone(),
                    capacity: e.capacity,
                })
                .collect(),
            numeric: self.numeric,
        }
    }

    pub fn actors(&self) -> &[Actor] {
        &self.actors
    }

    pub fn actor(&self, idx: ActorIdx) -> &Actor {
        &self.actors[idx]
    }

    pub fn n_actors(&self) -> usize {
        self.actors.len()
    }

    pub fn actor_index(&self, id: &ActorId) -> Option<ActorIdx> {
        self.actors.binary_search_by(|a| a.id.cmp(id)).ok()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: EdgeIdx) -> &Edge {
        &self.edges[idx]
    }

    pub fn frontier(&self, idx: EdgeIdx) -> &FrontierMap {
        &self.frontiers[idx]
    }

    pub fn numeric(&self) -> NumericConfig {
        self.numeric
    }

    /// Edges incident to `actor`, in lexicographic order of the counterpart.
    pub fn incident(&self, actor: ActorIdx) -> &[EdgeIdx] {
        &self.adjacency[actor]
    }

    pub fn edge_between(&self, a: ActorIdx, b: ActorIdx) -> Option<EdgeIdx> {
        self.adjacency[a]
            .iter()
            .copied()
            .find(|&k| self.edges[k].other(a) == b)
    }

    pub fn edge_by_ids(&self, buyer: &ActorId, seller: &ActorId) -> Result<EdgeIdx, ModelError> {
        let b = self
            .actor_index(buyer)
            .ok_or_else(|| ModelError::UnknownActor(buyer.clone()))?;
        let s = self
            .actor_index(seller)
            .ok_or_else(|| ModelError::UnknownActor(seller.clone()))?;
        self.edge_between(b, s)
            .ok_or_else(|| ModelError::UnknownEdge(buyer.clone(), seller.clone()))
    }

    pub fn edge_label(&self, idx: EdgeIdx) -> (ActorId, ActorId) {
        let e = &self.edges[idx];
        (self.actors[e.buyer].id.clone(), self.actors[e.seller].id.clone())
    }
}

/// Quantities transferred on an edge: the buyer gives `m_i` of X, the seller
/// gives `m_j` of Y.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Exchange {
    pub m_i: f64,
    pub m_j: f64,
}

impl Exchange {
    pub const NULL: Exchange = Exchange { m_i: 0.0, m_j: 0.0 };

    pub fn new(m_i: f64, m_j: f64) -> Self {
        Exchange { m_i, m_j }
    }
}

/// `partner = None` is the no-op strategy of an actor without neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    pub partner: Option<ActorIdx>,
    pub give: f64,
    pub ask: f64,
}

impl Strategy {
    pub const IDLE: Strategy = Strategy {
        partner: None,
        give: 0.0,
        ask: 0.0,
    };

    pub fn propose(partner: ActorIdx, give: f64, ask: f64) -> Self {
        Strategy {
            partner: Some(partner),
            give,
            ask,
        }
    }

    /// The strategy of `actor` that proposes `exchange` on `edge`.
    pub fn for_exchange(edge: &Edge, actor: ActorIdx, exchange: Exchange) -> Self {
        if actor == edge.buyer {
            Strategy::propose(edge.seller, exchange.m_i, exchange.m_j)
        } else {
            Strategy::propose(edge.buyer, exchange.m_j, exchange.m_i)
        }
    }

    /// The proposed exchange in buyer/seller orientation.
    pub fn as_exchange(&self, edge: &Edge, actor: ActorIdx) -> Exchange {
        if actor == edge.buyer {
            Exchange::new(self.give, self.ask)
        } else {
            Exchange::new(self.ask, self.give)
        }
    }
}

/// One strategy per actor, indexed like [`Instance::actors`].
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile(pub Vec<Strategy>);

impl StrategyProfile {
    pub fn strategies(&self) -> &[Strategy] {
        &self.0
    }

    pub fn get(&self, actor: ActorIdx) -> &Strategy {
        &self.0[actor]
    }

    pub fn validate(&self, instance: &Instance) -> Result<(), ModelError> {
        if self.0.len() != instance.n_actors() {
            return Err(ModelError::ProfileSize {
                expected: instance.n_actors(),
                got: self.0.len(),
            });
        }
        let slack = instance.numeric().quantity_tol;
        for (a, strategy) in self.0.iter().enumerate() {
            let bad = |reason: String| ModelError::InvalidStrategy {
                actor: instance.actor(a).id.clone(),
                reason,
            };
            let Some(p) = strategy.partner else {
                if !instance.incident(a).is_empty() {
                    return Err(bad("no-op strategy for an actor with neighbours".into()));
                }
                continue;
            };
            if p >= instance.n_actors() {
                return Err(bad(format!("partner index {p} out of range")));
            }
            let edge = instance
                .edge_between(a, p)
                .ok_or_else(|| bad(format!("{} is not a neighbour", instance.actor(p).id)))?;
            let e = instance.edge(edge);
            if !(strategy.give >= 0.0 && strategy.ask >= 0.0) {
                return Err(bad("negative quantity".into()));
            }
            if strategy.give > instance.actor(a).endowment + slack {
                return Err(bad(format!("gives {} above endowment", strategy.give)));
            }
            if strategy.ask > instance.actor(p).endowment + slack {
                return Err(bad(format!("asks {} above partner endowment", strategy.ask)));
            }
            if strategy.give + strategy.ask > e.capacity + slack {
                return Err(bad(format!(
                    "transfers {} above capacity {}",
                    strategy.give + strategy.ask,
                    e.capacity
                )));
            }
        }
        Ok(())
    }
}

/// Matched edges with their agreed exchange, in edge order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExchangeNetwork {
    pub matched: Vec<(EdgeIdx, Exchange)>,
}

impl ExchangeNetwork {
    pub fn edges(&self) -> impl Iterator<Item = EdgeIdx> + '_ {
        self.matched.iter().map(|(e, _)| *e)
    }

    pub fn is_empty(&self) -> bool {
        self.matched.is_empty()
    }

    /// The matched edge of every actor, or `None`.
    pub fn partner_edges(&self, instance: &Instance) -> Vec<Option<EdgeIdx>> {
        let mut out = vec![None; instance.n_actors()];
        for &(k, _) in &self.matched {
            let e = instance.edge(k);
            out[e.buyer] = Some(k);
            out[e.seller] = Some(k);
        }
        out
    }
}

/// Edges on which both endpoints propose to each other with identical terms.
pub fn induced_exchange_network(instance: &Instance, profile: &StrategyProfile) -> ExchangeNetwork {
    let mut matched = Vec::new();
    for (k, e) in instance.edges().iter().enumerate() {
        let (pb, ps) = (profile.get(e.buyer), profile.get(e.seller));
        if pb.partner == Some(e.seller)
            && ps.partner == Some(e.buyer)
            && pb.give == ps.ask
            && pb.ask == ps.give
        {
            matched.push((k, Exchange::new(pb.give, pb.ask)));
        }
    }
    ExchangeNetwork { matched }
}

/// Payoff of every actor; unmatched actors get exactly zero.
pub fn payoff_profile(instance: &Instance, profile: &StrategyProfile) -> Vec<f64> {
    let mut payoffs = vec![0.0; instance.n_actors()];
    for (k, ex) in induced_exchange_network(instance, profile).matched {
        let e = instance.edge(k);
        let f = instance.frontier(k);
        payoffs[e.buyer] = f.payoffs().buyer(ex);
        payoffs[e.seller] = f.payoffs().seller(ex);
    }
    payoffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn actor(id: &str, side: Side) -> Actor {
        Actor {
            id: id.into(),
            side,
            endowment: 1.0,
            utility: UtilitySpec::SQRT_ADDITIVE,
        }
    }

    fn edge(b: &str, s: &str, w: f64) -> EdgeSpec {
        EdgeSpec {
            buyer: b.into(),
            seller: s.into(),
            capacity: w,
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        let raw = fixtures::sqrt_single_edge_raw();
        let report = validate_instance(&raw);
        assert!(report.is_valid());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn edge_between_buyers_is_rejected() {
        let raw = RawInstance {
            actors: vec![actor("b1", Side::Buyer), actor("b2", Side::Buyer)],
            edges: vec![edge("b1", "b2", 1.0)],
            ..Default::default()
        };
        let report = validate_instance(&raw);
        assert!(matches!(report.errors[..], [ValidationError::NonBipartite(..)]));
        assert!(report.errors[0].to_string().contains("non-bipartite"));
    }

    #[test]
    fn zero_capacity_is_rejected() {
        let raw = RawInstance {
            actors: vec![actor("b1", Side::Buyer), actor("s1", Side::Seller)],
            edges: vec![edge("b1", "s1", 0.0)],
            ..Default::default()
        };
        let report = validate_instance(&raw);
        assert!(report.errors[0].to_string().contains("nonpositive capacity"));
    }

    #[test]
    fn structural_errors() {
        let mut dup = actor("b1", Side::Buyer);
        dup.endowment = -1.0;
        let raw = RawInstance {
            actors: vec![actor("b1", Side::Buyer), dup, actor("s1", Side::Seller)],
            edges: vec![edge("b1", "s1", 1.0), edge("s1", "b1", 1.0), edge("b1", "zz", 1.0)],
            ..Default::default()
        };
        let errors = validate_instance(&raw).errors;
        assert!(errors.iter().any(|e| matches!(e, ValidationError::DuplicateActor(_))));
        assert!(errors.iter().any(|e| matches!(e, ValidationError::NonpositiveEndowment(..))));
        assert!(errors.iter().any(|e| matches!(e, ValidationError::DuplicateEdge(..))));
        assert!(errors.iter().any(|e| matches!(e, ValidationError::UnknownActor(..))));
        assert!(Instance::from_raw(raw).is_err());
    }

    #[test]
    fn reversed_endpoints_are_normalised() {
        let raw = RawInstance {
            actors: vec![actor("s1", Side::Seller), actor("b1", Side::Buyer)],
            edges: vec![edge("s1", "b1", 1.0)],
            ..Default::default()
        };
        let (inst, _) = Instance::from_raw(raw).unwrap();
        let e = inst.edge(0);
        assert_eq!(inst.actor(e.buyer).id.as_str(), "b1");
        assert_eq!(inst.actor(e.seller).id.as_str(), "s1");
    }

    #[test]
    fn reciprocal_strategies_match() {
        let inst = fixtures::sqrt_single_edge();
        let (b, s) = (0, 1);
        let profile = StrategyProfile(vec![
            Strategy::propose(s, 0.25, 0.75),
            Strategy::propose(b, 0.75, 0.25),
        ]);
        let net = induced_exchange_network(&inst, &profile);
        assert_eq!(net.matched, vec![(0, Exchange::new(0.25, 0.75))]);
    }

    #[test]
    fn disagreeing_terms_do_not_match() {
        let inst = fixtures::sqrt_single_edge();
        let profile = StrategyProfile(vec![
            Strategy::propose(1, 0.25, 0.75),
            Strategy::propose(0, 0.75, 0.30),
        ]);
        assert!(induced_exchange_network(&inst, &profile).is_empty());
        assert_eq!(payoff_profile(&inst, &profile), vec![0.0, 0.0]);
    }

    #[test]
    fn disagreeing_partners_do_not_match() {
        let inst = fixtures::two_buyers_one_seller();
        let (b1, b2, s) = (0, 1, 2);
        let profile = StrategyProfile(vec![
            Strategy::propose(s, 0.25, 0.75),
            Strategy::propose(s, 0.0, 0.0),
            Strategy::propose(b2, 0.75, 0.25),
        ]);
        assert!(induced_exchange_network(&inst, &profile).is_empty());
        let _ = b1;
    }

    #[test]
    fn payoffs_at_symmetric_point() {
        let inst = fixtures::sqrt_single_edge();
        let profile = StrategyProfile(vec![Strategy::propose(1, 0.5, 0.5), Strategy::propose(0, 0.5, 0.5)]);
        let u = payoff_profile(&inst, &profile);
        let expected = 2.0 * 0.5f64.sqrt() - 1.0;
        assert!((u[0] - expected).abs() < 1e-15);
        assert!((u[1] - expected).abs() < 1e-15);
        assert!((u[0] - 0.414214).abs() < 1e-6);
    }

    #[test]
    fn null_exchange_pays_exactly_zero() {
        let inst = fixtures::sqrt_single_edge();
        let profile = StrategyProfile(vec![Strategy::propose(1, 0.0, 0.0), Strategy::propose(0, 0.0, 0.0)]);
        assert_eq!(induced_exchange_network(&inst, &profile).matched.len(), 1);
        assert_eq!(payoff_profile(&inst, &profile), vec![0.0, 0.0]);
    }

    #[test]
    fn profile_validation() {
        let inst = fixtures::sqrt_single_edge();
        let ok = StrategyProfile(vec![Strategy::propose(1, 0.5, 0.5), Strategy::propose(0, 0.5, 0.5)]);
        assert!(ok.validate(&inst).is_ok());
        let over = StrategyProfile(vec![Strategy::propose(1, 0.7, 0.5), Strategy::propose(0, 0.5, 0.5)]);
        assert!(over.validate(&inst).is_err());
        let short = StrategyProfile(vec![Strategy::propose(1, 0.0, 0.0)]);
        assert!(matches!(short.validate(&inst), Err(ModelError::ProfileSize { .. })));
        let idle = StrategyProfile(vec![Strategy::IDLE, Strategy::propose(0, 0.0, 0.0)]);
        assert!(idle.validate(&inst).is_err());
    }
}
