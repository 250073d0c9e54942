//! JSON documents for instances and solved outcomes.
//!
//! Both documents carry a `version` tag and reject unknown fields. Outcome
//! documents embed the instance they were computed from, with its SHA-256
//! digest, so they can be re-certified without the original file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    Actor, ActorId, EdgeSpec, Exchange, Instance, ModelError, NumericConfig, RawInstance, Side, Strategy,
    StrategyProfile, ValidationWarning,
};
use crate::solver::{SolverConfig, StableOutcome};
use crate::stability::{BlockingReport, Verdict, Violation};
use crate::utility::{PayoffVector, UtilitySpec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("unsupported document version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("instance digest mismatch: document records {recorded}, instance hashes to {actual}")]
    DigestMismatch { recorded: String, actual: String },
    #[error("unknown actor {0} in outcome document")]
    UnknownActor(ActorId),
}

impl From<serde_json::Error> for FormatError {
    fn from(err: serde_json::Error) -> Self {
        use serde_json::error::Category;
        let (line, column) = (err.line(), err.column());
        let message = err.to_string();
        match err.classify() {
            Category::Data => FormatError::Schema { line, column, message },
            _ => FormatError::Syntax { line, column, message },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityRecord {
    AdditivePower { alpha: f64, beta: f64, c: f64 },
    ShiftedCobbDouglas { a: f64, b: f64, theta: f64 },
    Ces { rho: f64, w: f64 },
}

impl From<UtilitySpec> for UtilityRecord {
    fn from(spec: UtilitySpec) -> Self {
        match spec {
            UtilitySpec::AdditivePower { alpha, beta, c } => UtilityRecord::AdditivePower { alpha, beta, c },
            UtilitySpec::ShiftedCobbDouglas { a, b, theta } => UtilityRecord::ShiftedCobbDouglas { a, b, theta },
            UtilitySpec::Ces { rho, w } => UtilityRecord::Ces { rho, w },
        }
    }
}

impl From<UtilityRecord> for UtilitySpec {
    fn from(rec: UtilityRecord) -> Self {
        match rec {
            UtilityRecord::AdditivePower { alpha, beta, c } => UtilitySpec::AdditivePower { alpha, beta, c },
            UtilityRecord::ShiftedCobbDouglas { a, b, theta } => UtilitySpec::ShiftedCobbDouglas { a, b, theta },
            UtilityRecord::Ces { rho, w } => UtilitySpec::Ces { rho, w },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorRecord {
    pub id: ActorId,
    pub side: Side,
    pub endowment: f64,
    pub utility: UtilityRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub buyer: ActorId,
    pub seller: ActorId,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate_payoff: Option<f64>,
}

impl NumericRecord {
    fn resolve(&self) -> NumericConfig {
        let d = NumericConfig::default();
        NumericConfig {
            quantity_tol: self.quantity_tol.unwrap_or(d.quantity_tol),
            payoff_tol: self.payoff_tol.unwrap_or(d.payoff_tol),
            degenerate_payoff: self.degenerate_payoff.unwrap_or(d.degenerate_payoff),
        }
    }

    fn from_config(cfg: NumericConfig) -> Option<Self> {
        (cfg != NumericConfig::default()).then_some(NumericRecord {
            quantity_tol: Some(cfg.quantity_tol),
            payoff_tol: Some(cfg.payoff_tol),
            degenerate_payoff: Some(cfg.degenerate_payoff),
        })
    }
}

/// Per-instance defaults for the solver; command-line flags override them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propose_side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_retries: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, mut cfg: SolverConfig) -> SolverConfig {
        if let Some(v) = self.propose_side {
            cfg.propose_side = v;
        }
        if let Some(v) = self.step {
            cfg.step = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.max_retries {
            cfg.max_retries = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub actors: Vec<ActorRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOverrides>,
}

impl InstanceFile {
    pub fn from_raw(raw: &RawInstance) -> Self {
        InstanceFile {
            version: FORMAT_VERSION,
            actors: raw
                .actors
                .iter()
                .map(|a| ActorRecord {
                    id: a.id.clone(),
                    side: a.side,
                    endowment: a.endowment,
                    utility: a.utility.into(),
                })
                .collect(),
            edges: raw
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    buyer: e.buyer.clone(),
                    seller: e.seller.clone(),
                    capacity: e.capacity,
                })
                .collect(),
            numeric: NumericRecord::from_config(raw.numeric),
            solver: None,
        }
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            actors: self
                .actors
                .iter()
                .map(|a| Actor {
                    id: a.id.clone(),
                    side: a.side,
                    endowment: a.endowment,
                    utility: a.utility.into(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    buyer: e.buyer.clone(),
                    seller: e.seller.clone(),
                    capacity: e.capacity,
                })
                .collect(),
            numeric: self.numeric.unwrap_or_default().resolve(),
        }
    }

    fn check_version(&self) -> Result<(), FormatError> {
        if self.version == FORMAT_VERSION {
            Ok(())
        } else {
            Err(FormatError::UnsupportedVersion { found: self.version })
        }
    }
}

/// A parsed and validated instance document.
#[derive(Debug, Clone)]
pub struct InstanceDocument {
    pub instance: Instance,
    pub warnings: Vec<ValidationWarning>,
    pub solver: SolverOverrides,
}

pub fn parse_instance_document(text: &str) -> Result<InstanceDocument, FormatError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.check_version()?;
    let (instance, report) = Instance::from_raw(file.to_raw())?;
    Ok(InstanceDocument {
        instance,
        warnings: report.warnings,
        solver: file.solver.unwrap_or_default(),
    })
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    parse_instance_document(text).map(|doc| doc.instance)
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Canonical text of a validated instance: actors in id order, edges in
/// `(buyer, seller)` order.
pub fn serialize_instance(instance: &Instance) -> String {
    to_pretty(&InstanceFile::from_raw(&instance.to_raw()))
}

/// Hex SHA-256 of the canonical instance text.
pub fn instance_digest(instance: &Instance) -> String {
    hex::encode(Sha256::digest(serialize_instance(instance).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchedEdgeRecord {
    pub buyer: ActorId,
    pub seller: ActorId,
    pub m_i: f64,
    pub m_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyRecord {
    pub actor: ActorId,
    pub partner: Option<ActorId>,
    pub give: f64,
    pub ask: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViolationRecord {
    IrrationalStrategy {
        actor: ActorId,
        payoff: f64,
    },
    BlockingPair {
        buyer: ActorId,
        seller: ActorId,
        dominating: PayoffVector,
        current: PayoffVector,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSlackRecord {
    pub buyer: ActorId,
    pub seller: ActorId,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    pub verdict: Verdict,
    pub tol: f64,
    pub violation: Option<ViolationRecord>,
    pub slacks: Vec<EdgeSlackRecord>,
}

impl CertificateRecord {
    pub fn from_report(instance: &Instance, report: &BlockingReport) -> Self {
        let id = |a: usize| instance.actor(a).id.clone();
        let violation = report.violation.map(|v| match v {
            Violation::IrrationalStrategy(s) => ViolationRecord::IrrationalStrategy {
                actor: id(s.actor),
                payoff: s.payoff,
            },
            Violation::BlockingPair {
                edge,
                dominating,
                current,
            } => {
                let e = instance.edge(edge);
                ViolationRecord::BlockingPair {
                    buyer: id(e.buyer),
                    seller: id(e.seller),
                    dominating,
                    current,
                }
            }
        });
        CertificateRecord {
            verdict: report.verdict,
            tol: report.tol,
            violation,
            slacks: report
                .slacks
                .iter()
                .map(|s| {
                    let e = instance.edge(s.edge);
                    EdgeSlackRecord {
                        buyer: id(e.buyer),
                        seller: id(e.seller),
                        slack: s.slack,
                    }
                })
                .collect(),
        }
    }
}

/// Solver counters. Wall-clock time is deliberately left out so that
/// identical inputs give identical documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsRecord {
    pub proposals: usize,
    pub rejections: usize,
    pub polish_sweeps: usize,
    pub retries: usize,
    pub final_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeFile {
    pub version: u32,
    pub instance_digest: String,
    pub instance: InstanceFile,
    pub propose_side: Side,
    pub matching: Vec<MatchedEdgeRecord>,
    pub aspirations: BTreeMap<ActorId, f64>,
    pub payoffs: BTreeMap<ActorId, f64>,
    pub profile: Vec<StrategyRecord>,
    pub certificate: CertificateRecord,
    pub stats: StatsRecord,
}

impl OutcomeFile {
    pub fn from_outcome(instance: &Instance, outcome: &StableOutcome, config: &SolverConfig) -> Self {
        let id = |a: usize| instance.actor(a).id.clone();
        let per_actor =
            |values: &[f64]| -> BTreeMap<ActorId, f64> { values.iter().enumerate().map(|(a, &v)| (id(a), v)).collect() };
        OutcomeFile {
            version: FORMAT_VERSION,
            instance_digest: instance_digest(instance),
            instance: InstanceFile::from_raw(&instance.to_raw()),
            propose_side: config.propose_side,
            matching: outcome
                .matching
                .matched
                .iter()
                .map(|&(k, ex)| {
                    let e = instance.edge(k);
                    MatchedEdgeRecord {
                        buyer: id(e.buyer),
                        seller: id(e.seller),
                        m_i: ex.m_i,
                        m_j: ex.m_j,
                    }
                })
                .collect(),
            aspirations: per_actor(&outcome.aspirations.0),
            payoffs: per_actor(&outcome.payoffs),
            profile: outcome
                .profile
                .strategies()
                .iter()
                .enumerate()
                .map(|(a, s)| StrategyRecord {
                    actor: id(a),
                    partner: s.partner.map(id),
                    give: s.give,
                    ask: s.ask,
                })
                .collect(),
            certificate: CertificateRecord::from_report(instance, &outcome.certificate),
            stats: StatsRecord {
                proposals: outcome.stats.proposals,
                rejections: outcome.stats.rejections,
                polish_sweeps: outcome.stats.polish_sweeps,
                retries: outcome.stats.retries,
                final_step: outcome.stats.final_step,
            },
        }
    }

    /// Rebuilds the embedded instance and checks it against the digest.
    pub fn load_instance(&self) -> Result<Instance, FormatError> {
        self.instance.check_version()?;
        let (instance, _) = Instance::from_raw(self.instance.to_raw())?;
        let actual = instance_digest(&instance);
        if actual != self.instance_digest {
            return Err(FormatError::DigestMismatch {
                recorded: self.instance_digest.clone(),
                actual,
            });
        }
        Ok(instance)
    }

    /// The recorded strategy profile, indexed like `instance.actors()`.
    pub fn strategy_profile(&self, instance: &Instance) -> Result<StrategyProfile, FormatError> {
        let index = |id: &ActorId| instance.actor_index(id).ok_or_else(|| FormatError::UnknownActor(id.clone()));
        let mut strategies = vec![Strategy::IDLE; instance.n_actors()];
        let mut seen = vec![false; instance.n_actors()];
        for rec in &self.profile {
            let a = index(&rec.actor)?;
            seen[a] = true;
            strategies[a] = match &rec.partner {
                Some(p) => Strategy::propose(index(p)?, rec.give, rec.ask),
                None => Strategy::IDLE,
            };
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(FormatError::Invalid(ModelError::InvalidStrategy {
                actor: instance.actor(missing).id.clone(),
                reason: "missing from outcome profile".into(),
            }));
        }
        let profile = StrategyProfile(strategies);
        profile.validate(instance)?;
        Ok(profile)
    }

    /// Matched exchanges by edge, for cross-checking against the profile.
    pub fn exchanges(&self) -> Vec<(ActorId, ActorId, Exchange)> {
        self.matching
            .iter()
            .map(|m| (m.buyer.clone(), m.seller.clone(), Exchange::new(m.m_i, m.m_j)))
            .collect()
    }
}

pub fn serialize_outcome(outcome: &OutcomeFile) -> String {
    to_pretty(outcome)
}

pub fn parse_outcome(text: &str) -> Result<OutcomeFile, FormatError> {
    let file: OutcomeFile = serde_json::from_str(text)?;
    if file.version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion { found: file.version });
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const MINIMAL: &str = r#"{
  "version": 1,
  "actors": [
    {"id": "b1", "side": "A", "endowment": 1.0,
     "utility": {"family": "additive_power", "params": {"alpha": 0.5, "beta": 0.5, "c": 1.0}}},
    {"id": "s1", "side": "B", "endowment": 1.0,
     "utility": {"family": "additive_power", "params": {"alpha": 0.5, "beta": 0.5, "c": 1.0}}}
  ],
  "edges": [{"buyer": "b1", "seller": "s1", "capacity": 1.0}]
}"#;

    #[test]
    fn minimal_document() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.n_actors(), 2);
        assert_eq!(inst.edges().len(), 1);
        assert_eq!(inst.to_raw(), fixtures::sqrt_single_edge_raw());
    }

    #[test]
    fn same_side_edge_is_named() {
        let text = MINIMAL.replace(r#""side": "B""#, r#""side": "A""#);
        let err = parse_instance(&text).unwrap_err().to_string();
        assert!(err.contains("non-bipartite") && err.contains("b1") && err.contains("s1"), "{err}");
    }

    #[test]
    fn parameter_out_of_range() {
        let text = MINIMAL.replacen(r#""alpha": 0.5"#, r#""alpha": 1.2"#, 1);
        let err = parse_instance(&text).unwrap_err().to_string();
        assert!(err.contains("parameter out of range"), "{err}");
    }

    #[test]
    fn unknown_field_has_position() {
        let text = MINIMAL.replace(r#""capacity": 1.0"#, r#""capacity": 1.0, "weight": 2"#);
        match parse_instance(&text).unwrap_err() {
            FormatError::Schema { line, message, .. } => {
                assert_eq!(line, 9);
                assert!(message.contains("weight"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_utility_param_rejected() {
        let text = MINIMAL.replacen(r#""c": 1.0}"#, r#""c": 1.0, "d": 2.0}"#, 1);
        assert!(matches!(parse_instance(&text), Err(FormatError::Schema { .. })));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_instance("{\n  \"version\": 1,\n  ]").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn version_is_checked() {
        let text = MINIMAL.replace(r#""version": 1"#, r#""version": 7"#);
        assert!(matches!(parse_instance(&text), Err(FormatError::UnsupportedVersion { found: 7 })));
    }

    #[test]
    fn side_aliases() {
        let text = MINIMAL.replace(r#""side": "A""#, r#""side": "buyer""#);
        assert!(parse_instance(&text).is_ok());
    }

    #[test]
    fn round_trip() {
        for inst in [fixtures::asymmetric_pair(), fixtures::two_buyers_one_seller(), fixtures::cobb_douglas_pair()] {
            let text = serialize_instance(&inst);
            let back = parse_instance(&text).unwrap();
            assert_eq!(back.to_raw(), inst.to_raw());
            assert_eq!(serialize_instance(&back), text);
        }
    }

    #[test]
    fn solver_overrides() {
        let text = MINIMAL.replace(
            r#""version": 1,"#,
            r#""version": 1, "solver": {"propose_side": "B", "step": 0.01},"#,
        );
        let doc = parse_instance_document(&text).unwrap();
        let cfg = doc.solver.apply(SolverConfig::default());
        assert_eq!(cfg.propose_side, Side::Seller);
        assert_eq!(cfg.step, 0.01);
        assert_eq!(cfg.max_retries, SolverConfig::default().max_retries);
    }

    #[test]
    fn digest_is_stable() {
        let a = instance_digest(&fixtures::sqrt_single_edge());
        assert_eq!(a, instance_digest(&parse_instance(MINIMAL).unwrap()));
        assert_eq!(a.len(), 64);
        assert_ne!(a, instance_digest(&fixtures::two_buyers_one_seller()));
    }
}
