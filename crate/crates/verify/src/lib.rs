//! Seeded verification harness: scenarios in, reports out.

pub mod report;
pub mod scenario;
pub mod suites;

pub use report::{emit_report, Check, Format, Report, Status};
pub use scenario::{Mode, Scenario, SUITES};
pub use suites::run_suite;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("unknown suite `{0}` (valid: jets, pfaffian, schwarzian, projective, isotropy, maurer-cartan, prolong-structure, all)")]
    UnknownSuite(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("bad scenario: {0}")]
    Scenario(String),
    #[error("i/o: {0}")]
    Io(String),
}
