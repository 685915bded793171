//! Record serialization. Floats use the shortest representation that
//! round-trips in both formats, so parsed output reproduces the engine's
//! values bit for bit.

use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputRecord {
    pub index: u64,
    pub value: f64,
    pub trend: f64,
    pub seasonal: f64,
    pub residual: f64,
    pub shift: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub is_anomaly: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<bool>,
}

pub const CSV_HEADER: &str = "index,value,trend,seasonal,residual,shift";

/// Writes records with a fixed column set chosen up front.
pub struct RecordWriter<W: Write> {
    out: W,
    format: Format,
    detect: bool,
    emit_init: bool,
    flush_each: bool,
    header_done: bool,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W, format: Format, detect: bool, emit_init: bool, flush_each: bool) -> Self {
        Self {
            out,
            format,
            detect,
            emit_init,
            flush_each,
            header_done: false,
        }
    }

    pub fn header(&mut self) -> Result<(), CliError> {
        if self.header_done || self.format != Format::Csv {
            return Ok(());
        }
        self.header_done = true;
        let mut h = String::from(CSV_HEADER);
        if self.detect {
            h.push_str(",score,is_anomaly");
        }
        if self.emit_init {
            h.push_str(",init");
        }
        writeln!(self.out, "{h}")?;
        Ok(())
    }

    pub fn write(&mut self, r: &OutputRecord) -> Result<(), CliError> {
        self.header()?;
        match self.format {
            Format::Csv => {
                write!(
                    self.out,
                    "{},{:?},{:?},{:?},{:?},{}",
                    r.index, r.value, r.trend, r.seasonal, r.residual, r.shift
                )?;
                if self.detect {
                    let score = r.score.map(|s| format!("{s:?}")).unwrap_or_default();
                    write!(self.out, ",{score},{}", r.is_anomaly.unwrap_or(false))?;
                }
                if self.emit_init {
                    write!(self.out, ",{}", r.init.unwrap_or(false))?;
                }
                writeln!(self.out)?;
            }
            Format::Jsonl => {
                serde_json::to_writer(&mut self.out, r)?;
                writeln!(self.out)?;
            }
        }
        if self.flush_each {
            self.out.flush()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, CliError> {
        self.header()?;
        self.out.flush()?;
        Ok(self.out)
    }

    /// The sink, without writing a header that was never needed.
    pub fn into_inner(self) -> W {
        self.out
    }
}
