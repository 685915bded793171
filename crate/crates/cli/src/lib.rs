//! Library half of the `oneshotstl` command-line tool.

pub mod args;
pub mod error;
pub mod input;
pub mod output;
pub mod run;

pub use error::CliError;
pub use input::{parse_series, LineParser, Sample};
pub use output::{Format, OutputRecord, RecordWriter, CSV_HEADER};
pub use run::{run, run_bench, Session, SessionPlan};
