//! Command drivers.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use oneshotstl::latency::{self, BenchConfig};
use oneshotstl::periodicity::DEFAULT_LAMBDA_GRID;
use oneshotstl::{estimate_period, tune_lambda, Config, DecomposerState, OneShotStl};
use serde::Serialize;

use crate::args::{BenchArgs, Command, SeriesArgs};
use crate::error::CliError;
use crate::input::LineParser;
use crate::output::{Format, OutputRecord, RecordWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Decompose,
    Detect,
    Forecast(usize),
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Decompose(a) => run_series(&a, Mode::Decompose),
        Command::Detect(a) => run_series(&a, Mode::Detect),
        Command::Forecast(a) => {
            if a.horizon == 0 {
                return Err(CliError::Usage("--horizon must be at least 1".into()));
            }
            run_series(&a.series, Mode::Forecast(a.horizon))
        }
        Command::Bench(a) => run_bench(&a),
    }
}

/// How a session obtains its engine.
#[derive(Debug, Clone)]
pub enum SessionPlan {
    /// Continue from a saved state.
    Resume(Box<DecomposerState>),
    /// Initialize from the leading points. `period == None` estimates it from
    /// the first `init_len` points, or from the whole input when that is
    /// `None` too.
    Fresh {
        period: Option<usize>,
        init_len: Option<usize>,
        lambda1: Option<f64>,
        lambda2: Option<f64>,
        tune_lambda: bool,
        iters: usize,
        shift_window: usize,
        nsigma: f64,
    },
}

impl SessionPlan {
    fn from_args(a: &SeriesArgs) -> Result<Self, CliError> {
        if let Some(path) = &a.resume {
            let json = fs::read_to_string(path)?;
            return Ok(Self::Resume(Box::new(DecomposerState::restore(&json)?)));
        }
        if a.period.is_none() && !a.auto_period {
            return Err(CliError::Usage(
                "one of --period or --auto-period is required".into(),
            ));
        }
        if a.auto_period && a.stream && a.init_len.is_none() {
            return Err(CliError::Usage(
                "--auto-period with --stream needs --init-len".into(),
            ));
        }
        Ok(Self::Fresh {
            period: a.period,
            init_len: a.init_len,
            lambda1: a.lambda1.or(a.lambda),
            lambda2: a.lambda2.or(a.lambda),
            tune_lambda: a.tune_lambda,
            iters: a.iters,
            shift_window: a.shift_window,
            nsigma: a.nsigma,
        })
    }
}

/// One input stream flowing through one decomposer.
pub struct Session<W: Write> {
    plan: SessionPlan,
    engine: Option<OneShotStl>,
    pending: Vec<f64>,
    writer: RecordWriter<W>,
    detect: bool,
    emit_init: bool,
    emit_records: bool,
    next_index: u64,
}

impl<W: Write> Session<W> {
    fn new(plan: SessionPlan, writer: RecordWriter<W>, mode: Mode, emit_init: bool) -> Self {
        let (engine, next_index) = match &plan {
            SessionPlan::Resume(state) => {
                let t = state.t_counter();
                (Some(OneShotStl::from_state((**state).clone())), t)
            }
            SessionPlan::Fresh { .. } => (None, 0),
        };
        Self {
            plan,
            engine,
            pending: Vec::new(),
            writer,
            detect: mode == Mode::Detect,
            emit_init,
            emit_records: !matches!(mode, Mode::Forecast(_)),
            next_index,
        }
    }

    /// Points needed before the configuration can be fixed, or `None` when
    /// the whole input is needed.
    fn window(&self) -> Option<usize> {
        match &self.plan {
            SessionPlan::Resume(_) => Some(0),
            SessionPlan::Fresh {
                period, init_len, ..
            } => init_len.or(period.map(|t| 4 * t)),
        }
    }

    fn configure(&self) -> Result<Config, CliError> {
        let SessionPlan::Fresh {
            period,
            init_len,
            lambda1,
            lambda2,
            tune_lambda: tune,
            iters,
            shift_window,
            nsigma,
        } = &self.plan
        else {
            unreachable!("resumed sessions start with an engine")
        };
        let period = match period {
            Some(t) => *t,
            None => {
                let (window, max_lag) = match init_len {
                    Some(n) => (&self.pending[..*n], n / 2),
                    None => (&self.pending[..], self.pending.len() / 5),
                };
                let est = estimate_period(window, 2, max_lag)?;
                log::info!("estimated period {} (acf {:.3})", est.period, est.acf_peak);
                est.period
            }
        };
        let init_len = init_len.unwrap_or(4 * period);
        let mut cfg = Config::new(period)
            .with_iters(*iters)
            .with_shift_window((*shift_window).min(period.saturating_sub(1)))
            .with_nsigma(*nsigma)
            .with_init_len(init_len);
        if *tune {
            if self.pending.len() < init_len {
                return Err(short_input(self.pending.len(), init_len));
            }
            let (lambda, mae) =
                tune_lambda(&self.pending[..init_len], period, &DEFAULT_LAMBDA_GRID)?;
            log::info!("tuned λ = {lambda} (trend MAE {mae:e})");
            cfg = cfg.with_lambda(lambda);
        }
        if let Some(l) = lambda1 {
            cfg.lambda1 = *l;
        }
        if let Some(l) = lambda2 {
            cfg.lambda2 = *l;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn push(&mut self, y: f64) -> Result<(), CliError> {
        if self.engine.is_some() {
            return self.feed(y);
        }
        self.pending.push(y);
        if self.window() == Some(self.pending.len()) {
            self.start()?;
        }
        Ok(())
    }

    fn start(&mut self) -> Result<(), CliError> {
        let cfg = self.configure()?;
        self.engine = Some(OneShotStl::new(&cfg)?);
        for y in std::mem::take(&mut self.pending) {
            self.feed(y)?;
        }
        Ok(())
    }

    fn feed(&mut self, y: f64) -> Result<(), CliError> {
        let engine = self.engine.as_mut().expect("engine started");
        let update = engine.push(y)?;
        let index = self.next_index;
        self.next_index += 1;
        if let Some(init) = engine.take_init() {
            if self.emit_init && self.emit_records {
                let base = index + 1 - init.len() as u64;
                for k in 0..init.len() {
                    self.writer.write(&OutputRecord {
                        index: base + k as u64,
                        value: init.trend[k] + init.seasonal[k] + init.residual[k],
                        trend: init.trend[k],
                        seasonal: init.seasonal[k],
                        residual: init.residual[k],
                        shift: 0,
                        score: self.detect.then_some(0.0),
                        is_anomaly: self.detect.then_some(false),
                        init: Some(true),
                    })?;
                }
            }
        }
        if let (Some(u), true) = (update, self.emit_records) {
            self.writer.write(&OutputRecord {
                index,
                value: y,
                trend: u.point.trend,
                seasonal: u.point.seasonal,
                residual: u.point.residual,
                shift: u.point.shift,
                score: self.detect.then(|| u.score.unwrap_or(0.0)),
                is_anomaly: self.detect.then_some(u.is_anomaly),
                init: self.emit_init.then_some(false),
            })?;
        }
        Ok(())
    }

    /// Ends the input and returns the final engine and writer.
    fn finish(mut self) -> Result<(OneShotStl, RecordWriter<W>), CliError> {
        if self.engine.is_none() {
            if self.pending.is_empty() {
                return Err(CliError::EmptyInput);
            }
            self.start()?;
        }
        let engine = self.engine.take().expect("engine started");
        if engine.state().is_none() {
            let need = self.window().unwrap_or(0);
            return Err(short_input(self.next_index as usize, need));
        }
        Ok((engine, self.writer))
    }
}

fn short_input(got: usize, need: usize) -> CliError {
    CliError::Usage(format!(
        "input has {got} points, fewer than the init length {need}"
    ))
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| with_path(e, p))?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write + Send>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| with_path(e, p))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn with_path(e: io::Error, p: &Path) -> io::Error {
    io::Error::new(e.kind(), format!("{}: {e}", p.display()))
}

#[derive(Serialize)]
struct ForecastRecord {
    step: usize,
    forecast: f64,
}

fn process(
    a: &SeriesArgs,
    mode: Mode,
    input: Box<dyn BufRead>,
    output: Box<dyn Write + Send>,
) -> Result<(), CliError> {
    let plan = SessionPlan::from_args(a)?;
    let writer = RecordWriter::new(
        output,
        a.format,
        mode == Mode::Detect,
        a.emit_init,
        a.stream,
    );
    let mut session = Session::new(plan, writer, mode, a.emit_init);
    let mut parser = LineParser::new();
    for line in input.lines() {
        if let Some(sample) = parser.feed(&line?)? {
            session.push(sample.value)?;
        }
    }
    let (engine, writer) = session.finish()?;
    let mut out = match mode {
        Mode::Forecast(_) => writer.into_inner(),
        _ => writer.finish()?,
    };
    if let Mode::Forecast(h) = mode {
        let values = engine.forecast(h)?;
        match a.format {
            Format::Csv => {
                writeln!(out, "step,forecast")?;
                for (i, v) in values.iter().enumerate() {
                    writeln!(out, "{},{v:?}", i + 1)?;
                }
            }
            Format::Jsonl => {
                for (i, &forecast) in values.iter().enumerate() {
                    serde_json::to_writer(
                        &mut out,
                        &ForecastRecord {
                            step: i + 1,
                            forecast,
                        },
                    )?;
                    writeln!(out)?;
                }
            }
        }
        out.flush()?;
    }
    if let Some(path) = &a.save_state {
        let state = engine.state().expect("initialized");
        fs::write(path, state.snapshot()?).map_err(|e| with_path(e, path))?;
    }
    Ok(())
}

fn run_series(a: &SeriesArgs, mode: Mode) -> Result<(), CliError> {
    if a.input.len() <= 1 {
        let input = open_input(a.input.first().map(PathBuf::as_path))?;
        let output = open_output(a.output.as_deref())?;
        return process(a, mode, input, output);
    }
    if a.stream || a.resume.is_some() || a.save_state.is_some() {
        return Err(CliError::Usage(
            "--stream, --resume and --save-state take a single input".into(),
        ));
    }
    let dir = a
        .output
        .as_deref()
        .ok_or_else(|| CliError::Usage("several inputs need --output <directory>".into()))?;
    fs::create_dir_all(dir)?;
    let ext = match a.format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    };
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..a.parallel.clamp(1, a.input.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = a.input.get(k) else { break };
                let stem = path
                    .file_stem()
                    .map_or_else(|| format!("input{k}"), |s| s.to_string_lossy().into_owned());
                let target = dir.join(format!("{stem}.{ext}"));
                let result = open_input(Some(path))
                    .and_then(|i| Ok((i, open_output(Some(&target))?)))
                    .and_then(|(i, o)| process(a, mode, i, o));
                if let Err(e) = result {
                    failures
                        .lock()
                        .expect("no panics while held")
                        .push(format!("{}: {e}", path.display()));
                }
            });
        }
    });
    let failures = failures.into_inner().expect("no panics while held");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(failures.join("; ")))
    }
}

pub fn run_bench(a: &BenchArgs) -> Result<(), CliError> {
    let cfg = BenchConfig {
        periods: a.periods.clone(),
        points: a.points,
        warmup: a.warmup,
        lambda: a.lambda,
        iters: a.iters,
        shift_window: a.shift_window,
        noise: a.noise,
        seed: a.seed,
        oracle: a.oracle,
    };
    let report = latency::run_bench(&cfg)?;
    let mut out = open_output(a.output.as_deref())?;
    match a.format {
        Format::Csv => out.write_all(report.to_csv().as_bytes())?,
        Format::Jsonl => {
            for row in &report.rows {
                serde_json::to_writer(&mut out, row)?;
                writeln!(out)?;
            }
        }
    }
    out.flush()?;
    let constant = report
        .rows
        .windows(2)
        .all(|w| w[0].ops_per_point == w[1].ops_per_point)
        && report.rows.iter().all(|r| r.ops_constant);
    eprintln!(
        "max/min mean latency {:.2}; ops per point constant across periods: {constant}",
        report.flatness()
    );
    Ok(())
}
