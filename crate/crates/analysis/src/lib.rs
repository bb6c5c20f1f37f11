//! Statistical analysis of evaluation sequences: Kendall's tau, Mann-Whitney
//! U, augmented Dickey-Fuller and Mann-Kendall tests, and the corpus report
//! built from them.

pub mod experiment;
pub mod report;
pub mod stats;

pub use report::{corpus_report, write_reports, CorpusReport, SequenceStats, SeriesKind};
