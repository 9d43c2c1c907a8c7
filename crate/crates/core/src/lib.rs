//! Resolution diagnostics for paired model comparisons on a shared
//! benchmark: how many items a gap needs before it can be trusted, and how
//! that verdict holds up once the comparison is stress-tested.

// `!(x > 0.0)` is how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod config;
pub mod diagnose;
pub mod dist;
pub mod eprocess;
pub mod error;
pub mod family;
pub mod io;
pub mod matrix;
pub mod mcnemar;
pub mod paired;
pub mod report;
pub mod rng;
pub mod shortcut;
pub mod sim;
pub mod util;

pub use config::TestConfig;
pub use diagnose::{diagnose, diagnose_counts, DiagnoseOptions, PairVerdict, ResolvedFlags};
pub use eprocess::GridSpec;
pub use error::{Error, ErrorKind, Result};
pub use family::{FamilyConvention, Multiplicity};
pub use io::{load_counts, load_score_matrix, CountsRow};
pub use matrix::{ModelPair, ScoreMatrix};
pub use paired::{Contingency, PairedSummary, RequiredN, ResolutionResult};
pub use report::{emit_report, DiagnoseReport, ReportFormat};
