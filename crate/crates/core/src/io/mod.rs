//! Instance and outcome documents, random instances and frontier export.

mod export;
mod format;
mod generate;

pub use export::{export_frontier, ExportError};
pub use format::{
    instance_digest, parse_instance, parse_instance_document, parse_outcome, serialize_instance,
    serialize_outcome, ActorRecord, CertificateRecord, EdgeRecord, EdgeSlackRecord, FormatError, InstanceDocument,
    InstanceFile, MatchedEdgeRecord, NumericRecord, OutcomeFile, SolverOverrides, StatsRecord, StrategyRecord,
    UtilityRecord, ViolationRecord, FORMAT_VERSION,
};
pub use generate::{generate_instance, generate_raw, FamilyMix, GenerateError};
