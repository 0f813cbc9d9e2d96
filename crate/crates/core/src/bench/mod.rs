//! Interpreter overhead measurement against a hand-coded loop.

mod cpu;
mod mocks;

pub use cpu::{burn_cpu, process_cpu_seconds, steal_seconds, thread_cpu_seconds, CpuSample, CpuWindow};
pub use mocks::{mock_model, mocks, register_mocks, Baseline, Mock, OpLog, MOCKS};

use crate::dsl::{parse_fld, parse_ld};
use crate::error::{EngineError, Result};
use crate::fixtures;
use crate::runtime::{Clock, Engine, MonotonicClock};
use crate::trigger::PeriodAnchor;
use std::fmt::Write as _;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

pub const COMPUTE_MS: [u32; 4] = [0, 5, 10, 20];
pub const PERIOD_MS: [u32; 7] = [15, 30, 60, 120, 240, 480, 960];
/// Number of mocks a run may invoke.
pub const OPS_PER_RUN: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Interpreter,
    Baseline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Interpreter => "interpreter",
            Self::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub compute_ms: u32,
    pub period_ms: u32,
    /// Measurement window per mode.
    pub duration_seconds: f64,
    pub mode: Mode,
}

impl BenchConfig {
    pub fn feasible(&self) -> bool {
        feasible(self.compute_ms, self.period_ms)
    }
}

/// A combination is feasible when one run's compute time fits in the period.
pub fn feasible(compute_ms: u32, period_ms: u32) -> bool {
    OPS_PER_RUN * compute_ms <= period_ms
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub mode: Mode,
    pub runs: u64,
    pub mean_cpu_pct: f64,
    pub median_run_ms: f64,
    pub mean_run_ms: f64,
    pub wall_seconds: f64,
    /// Excluded from the time the CPU load is relative to.
    pub steal_seconds: f64,
    /// Operations and exits in call order.
    pub ops: Vec<(&'static str, &'static str)>,
}

impl ModeReport {
    /// Op/exit sequences of each run (a run starts at `Update`).
    pub fn runs_ops(&self) -> Vec<Vec<(&'static str, &'static str)>> {
        let mut out: Vec<Vec<_>> = Vec::new();
        for &(op, exit) in &self.ops {
            if op == "Update" || out.is_empty() {
                out.push(Vec::new());
            }
            out.last_mut().expect("pushed above").push((op, exit));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboReport {
    pub compute_ms: u32,
    pub period_ms: u32,
    pub interpreter: ModeReport,
    pub baseline: ModeReport,
}

impl ComboReport {
    pub fn overhead_pp(&self) -> f64 {
        self.interpreter.mean_cpu_pct - self.baseline.mean_cpu_pct
    }

    /// Both modes executed identical op/exit sequences over their common runs.
    pub fn ops_equal(&self) -> bool {
        let a = self.interpreter.runs_ops();
        let b = self.baseline.runs_ops();
        let n = a.len().min(b.len());
        n > 0 && a[..n] == b[..n]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub combos: Vec<ComboReport>,
    pub infeasible: Vec<(u32, u32)>,
}

impl BenchReport {
    pub fn combo(&self, compute_ms: u32, period_ms: u32) -> Option<&ComboReport> {
        self.combos
            .iter()
            .find(|c| c.compute_ms == compute_ms && c.period_ms == period_ms)
    }

    /// `combo,mode,runs,mean_cpu_pct,median_run_ms,overhead_pp`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("combo,mode,runs,mean_cpu_pct,median_run_ms,overhead_pp\n");
        for c in &self.combos {
            let combo = format!("c{}ms_p{}ms", c.compute_ms, c.period_ms);
            for m in [&c.interpreter, &c.baseline] {
                let _ = writeln!(
                    out,
                    "{combo},{},{},{:.4},{:.4},{:.4}",
                    m.mode.as_str(),
                    m.runs,
                    m.mean_cpu_pct,
                    m.median_run_ms,
                    c.overhead_pp()
                );
            }
        }
        for (compute, period) in &self.infeasible {
            let _ = writeln!(out, "c{compute}ms_p{period}ms,infeasible,0,,,");
        }
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn bench_architecture(period_ms: u32) -> String {
    let mut text = String::from("architecture \"Overhead\" {\n");
    text.push_str("  layer 0 \"Layer-0\" {\n    software mRUBiS : \"mRUBiS\"\n  }\n");
    text.push_str("  layer 1 \"Layer-1\" {\n    module selfRepair : \"Self-repair-flat\"\n  }\n");
    for (key, op, _) in MOCKS {
        let _ = writeln!(text, "  use selfRepair.{op} -> {key}");
    }
    let _ = writeln!(text, "  sense selfRepair <- mRUBiS [r] trigger \"; {period_ms}ms; Monitor\"");
    text.push_str("  effect selfRepair -> mRUBiS [w]\n}\n");
    text
}

/// An engine running the self-repair loop on mocks, periodically.
pub fn interpreter_engine(clock: Arc<dyn Clock>, compute_ms: u32, period_ms: u32, log: &OpLog) -> Result<Engine> {
    let mut engine = Engine::new(clock);
    engine.set_retain_results(false);
    engine.set_period_anchor(PeriodAnchor::EndToStart);
    engine.set_model_initializer(|_, slot| mock_model(&slot.name));
    register_mocks(&mut engine, &mocks(f64::from(compute_ms) / 1000.0, log));
    engine.load_megamodel(parse_fld(fixtures::fld("self-repair-flat.fld")).map_err(EngineError::Load)?)?;
    engine.load(parse_ld(&bench_architecture(period_ms)).map_err(EngineError::Load)?)?;
    Ok(engine)
}

fn take_log(log: &OpLog) -> Vec<(&'static str, &'static str)> {
    std::mem::take(&mut *log.lock().unwrap_or_else(|e| e.into_inner()))
}

/// Shortest measurement slice; the two modes alternate slice by slice.
pub const SLICE_SECONDS: f64 = 0.5;
/// A slice spans at least this many periods, so it holds whole cycles.
pub const SLICE_PERIODS: f64 = 2.0;

/// CPU, wall and stolen time summed over the slices of one mode.
#[derive(Debug, Default)]
struct Tally {
    total: CpuSample,
    times: Vec<f64>,
}

impl Tally {
    fn add(&mut self, window: CpuWindow) {
        let s = window.sample();
        self.total.cpu += s.cpu;
        self.total.wall += s.wall;
        self.total.steal += s.steal;
    }

    fn report(mut self, mode: Mode, runs: u64, ops: Vec<(&'static str, &'static str)>) -> ModeReport {
        let mean_run_ms = self.times.iter().sum::<f64>() / self.times.len().max(1) as f64;
        ModeReport {
            mode,
            runs,
            mean_cpu_pct: self.total.percent(),
            median_run_ms: median(&mut self.times),
            mean_run_ms,
            wall_seconds: self.total.wall,
            steal_seconds: self.total.steal,
            ops,
        }
    }
}

struct InterpreterSide {
    engine: Engine,
    log: OpLog,
    tally: Tally,
}

impl InterpreterSide {
    fn new(cfg: &BenchConfig) -> Result<Self> {
        let log: OpLog = Arc::new(Mutex::new(Vec::new()));
        let clock: Arc<dyn Clock> = Arc::new(MonotonicClock::new());
        let engine = interpreter_engine(clock, cfg.compute_ms, cfg.period_ms, &log)?;
        Ok(Self {
            engine,
            log,
            tally: Tally::default(),
        })
    }

    fn slice(&mut self, seconds: f64) {
        let first = self.engine.audit().runs.len();
        let window = CpuWindow::start();
        let end = self.engine.now() + seconds;
        self.engine.run_until(end);
        // Close the window where the next run would start, so it spans
        // whole cycles like the baseline's.
        if let Some(wake) = self.engine.next_wake() {
            self.engine.clock().wait_until(wake);
        }
        self.tally.add(window);
        let runs = &self.engine.audit().runs[first..];
        self.tally
            .times
            .extend(runs.iter().map(|r| (r.end.time - r.start.time) * 1000.0));
    }

    fn finish(self) -> ModeReport {
        let runs = self.engine.audit().runs.len() as u64;
        self.tally.report(Mode::Interpreter, runs, take_log(&self.log))
    }
}

struct BaselineSide {
    baseline: Baseline,
    log: OpLog,
    period: Duration,
    tally: Tally,
}

impl BaselineSide {
    fn new(cfg: &BenchConfig) -> Self {
        let log: OpLog = Arc::new(Mutex::new(Vec::new()));
        Self {
            baseline: Baseline::new(mocks(f64::from(cfg.compute_ms) / 1000.0, &log)),
            log,
            period: Duration::from_millis(u64::from(cfg.period_ms)),
            tally: Tally::default(),
        }
    }

    fn slice(&mut self, seconds: f64) {
        // Idle the same way the engine does: a timed wait on a channel.
        let (_tx, idle) = mpsc::channel::<()>();
        let window = CpuWindow::start();
        let start = Instant::now();
        let end = start + Duration::from_secs_f64(seconds);
        let mut next = start;
        loop {
            let now = Instant::now();
            if now < next {
                let _ = idle.recv_timeout(next - now);
                continue;
            }
            if now >= end {
                break;
            }
            let t0 = Instant::now();
            self.baseline.run_once();
            let t1 = Instant::now();
            self.tally.times.push((t1 - t0).as_secs_f64() * 1000.0);
            next = t1 + self.period;
        }
        self.tally.add(window);
    }

    fn finish(self) -> ModeReport {
        let runs = self.baseline.runs();
        self.tally.report(Mode::Baseline, runs, take_log(&self.log))
    }
}

fn check_feasible(compute_ms: u32, period_ms: u32) -> Result<()> {
    if feasible(compute_ms, period_ms) {
        return Ok(());
    }
    Err(EngineError::BenchInfeasible(format!(
        "{OPS_PER_RUN} ops x {compute_ms}ms exceed the {period_ms}ms period"
    )))
}

fn slices(seconds: f64, period_ms: u32) -> Vec<f64> {
    let len = SLICE_SECONDS.max(SLICE_PERIODS * f64::from(period_ms) / 1000.0);
    let n = (seconds / len).round().max(1.0) as usize;
    vec![seconds / n as f64; n]
}

/// Measures one mode of one combination on the wall clock.
pub fn run_mode(cfg: &BenchConfig) -> Result<ModeReport> {
    check_feasible(cfg.compute_ms, cfg.period_ms)?;
    match cfg.mode {
        Mode::Interpreter => {
            let mut side = InterpreterSide::new(cfg)?;
            side.slice(cfg.duration_seconds);
            Ok(side.finish())
        }
        Mode::Baseline => {
            let mut side = BaselineSide::new(cfg);
            side.slice(cfg.duration_seconds);
            Ok(side.finish())
        }
    }
}

/// Measures both modes of one combination, alternating slices (ABBA order)
/// so slow phases of the host hit both modes alike.
pub fn run_combo(compute_ms: u32, period_ms: u32, seconds_per_mode: f64) -> Result<ComboReport> {
    check_feasible(compute_ms, period_ms)?;
    let cfg = BenchConfig {
        compute_ms,
        period_ms,
        duration_seconds: seconds_per_mode,
        mode: Mode::Interpreter,
    };
    let mut interp = InterpreterSide::new(&cfg)?;
    let mut base = BaselineSide::new(&cfg);
    for (i, secs) in slices(seconds_per_mode, period_ms).into_iter().enumerate() {
        if i % 2 == 0 {
            interp.slice(secs);
            base.slice(secs);
        } else {
            base.slice(secs);
            interp.slice(secs);
        }
    }
    Ok(ComboReport {
        compute_ms,
        period_ms,
        interpreter: interp.finish(),
        baseline: base.finish(),
    })
}

/// Runs every feasible combination, `seconds_per_mode` in each mode.
pub fn run_benchmark(
    computes: &[u32],
    periods: &[u32],
    seconds_per_mode: f64,
    mut progress: impl FnMut(&ComboReport),
) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for &compute_ms in computes {
        for &period_ms in periods {
            if !feasible(compute_ms, period_ms) {
                report.infeasible.push((compute_ms, period_ms));
                continue;
            }
            let combo = run_combo(compute_ms, period_ms, seconds_per_mode)?;
            progress(&combo);
            report.combos.push(combo);
        }
    }
    Ok(report)
}
