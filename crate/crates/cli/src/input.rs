//! Series ingestion: one number per line, or CSV with a `value` column and
//! an optional `timestamp` column.

use std::io::BufRead;

use oneshotstl::TimeSeries;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Plain,
    Csv {
        value: usize,
        timestamp: Option<usize>,
    },
}

/// One observation read from the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub timestamp: Option<i64>,
}

/// Incremental line parser shared by file and streaming ingestion. The
/// layout is fixed by the first non-blank line.
#[derive(Debug, Default)]
pub struct LineParser {
    line: usize,
    layout: Option<Layout>,
    last_timestamp: Option<i64>,
}

impl LineParser {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses the next line. Returns `None` for blank and header lines.
    pub fn feed(&mut self, raw: &str) -> Result<Option<Sample>, CliError> {
        self.line += 1;
        let line = raw.trim();
        if line.is_empty() {
            return Ok(None);
        }
        let layout = match self.layout {
            Some(l) => l,
            None => {
                if line.parse::<f64>().is_ok() {
                    self.layout = Some(Layout::Plain);
                    Layout::Plain
                } else {
                    self.layout = Some(self.header(line)?);
                    return Ok(None);
                }
            }
        };
        match layout {
            Layout::Plain => {
                if line.contains(',') {
                    return Err(self.error("expected one value per line"));
                }
                Ok(Some(Sample {
                    value: self.number(line)?,
                    timestamp: None,
                }))
            }
            Layout::Csv { value, timestamp } => {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                let field = |i: usize| {
                    cols.get(i)
                        .copied()
                        .ok_or_else(|| self.error("missing column"))
                };
                let v = self.number(field(value)?)?;
                let ts = match timestamp {
                    Some(i) => {
                        let raw = field(i)?;
                        let t = raw
                            .parse::<i64>()
                            .map_err(|_| self.error(&format!("invalid timestamp {raw:?}")))?;
                        if self.last_timestamp.is_some_and(|prev| t <= prev) {
                            return Err(self.error("timestamps must be strictly increasing"));
                        }
                        self.last_timestamp = Some(t);
                        Some(t)
                    }
                    None => None,
                };
                Ok(Some(Sample {
                    value: v,
                    timestamp: ts,
                }))
            }
        }
    }

    fn header(&self, line: &str) -> Result<Layout, CliError> {
        let names: Vec<String> = line
            .split(',')
            .map(|c| c.trim().to_ascii_lowercase())
            .collect();
        let find = |name: &str| names.iter().position(|c| c == name);
        match find("value") {
            Some(value) => Ok(Layout::Csv {
                value,
                timestamp: find("timestamp"),
            }),
            None if names.len() == 1 => Err(self.error(&format!("invalid number {line:?}"))),
            None => Err(self.error("header has no \"value\" column")),
        }
    }

    fn number(&self, token: &str) -> Result<f64, CliError> {
        let v: f64 = token
            .parse()
            .map_err(|_| self.error(&format!("invalid number {token:?}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.error("non-finite"))
        }
    }

    fn error(&self, reason: &str) -> CliError {
        CliError::Parse {
            line: self.line,
            reason: reason.to_owned(),
        }
    }
}

/// Reads a whole series.
pub fn parse_series(source: impl BufRead) -> Result<TimeSeries, CliError> {
    let mut parser = LineParser::new();
    let mut values = Vec::new();
    let mut stamps = Vec::new();
    for line in source.lines() {
        if let Some(s) = parser.feed(&line?)? {
            values.push(s.value);
            if let Some(t) = s.timestamp {
                stamps.push(t);
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::EmptyInput);
    }
    let series = if stamps.is_empty() {
        TimeSeries::new(values)?
    } else {
        TimeSeries::with_timestamps(values, stamps)?
    };
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<f64>, CliError> {
        parse_series(s.as_bytes()).map(TimeSeries::into_values)
    }

    #[test]
    fn plain_lines() {
        assert_eq!(parse("1\n2\n3\n").unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn csv_with_timestamp() {
        assert_eq!(
            parse("timestamp,value\n0,1.5\n1,2.5\n").unwrap(),
            vec![1.5, 2.5]
        );
        assert_eq!(parse("Value,flag\n-3e2,x\n").unwrap(), vec![-300.0]);
    }

    #[test]
    fn non_finite_is_reported_with_line() {
        match parse("1\nNaN\n") {
            Err(CliError::Parse { line, reason }) => {
                assert_eq!(line, 2);
                assert_eq!(reason, "non-finite");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse("\n \n"), Err(CliError::EmptyInput)));
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(matches!(
            parse("1\nabc\n"),
            Err(CliError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("a,b\n1,2\n"),
            Err(CliError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("1,2\n"),
            Err(CliError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn timestamps_must_increase() {
        assert!(matches!(
            parse("timestamp,value\n1,1\n1,2\n"),
            Err(CliError::Parse { line: 3, .. })
        ));
    }
}
