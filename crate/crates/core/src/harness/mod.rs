//! Corpus ingestion, simulation, evaluation and curve output.

pub mod corpus;
pub mod curve;
pub mod evaluate;
pub mod policy_spec;
pub mod simulate;

pub use corpus::{load_corpus, parse_corpus, CorpusEntry, CorpusFiles, CorpusRecord, CorpusText};
pub use curve::{emit_curve, parse_curve_csv, parse_latex_table, CurvePoint, LatencyAxis};
pub use evaluate::{
    evaluate_corpus, Aggregate, AlignmentSide, EvalConfig, Evaluation, OutputFormat, RecordFailure, ResultRow,
};
pub use policy_spec::{read_transport_lines, Policy, PolicySpec};
pub use simulate::{render_trace, simulate, ReplayOracle, Simulation, Step, StepTrace, WriterOracle, MAX_LEN_RATIO};
