use clap::{Args, Parser, Subcommand};
use megaloop::bench::{run_benchmark, COMPUTE_MS, PERIOD_MS};
use megaloop::control::ControlResponse;
use megaloop::dsl::parse_events_file;
use megaloop::harness::{Scenario, Script};
use megaloop::runtime::{Engine, EngineHandle, MonotonicClock};
use megaloop::validate::{validate_documents, DocKind, Document};
use megaloop::EngineError;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CONTROL: u8 = 3;

#[derive(Parser)]
#[command(name = "megaloop", version, about = "Run and inspect layered feedback-loop megamodels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check .evt, .fld, .ld and .patch files together.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Load a layer diagram and execute it.
    Run(RunArgs),
    /// Interpreter overhead sweep; writes CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    ld: PathBuf,
    /// Directory holding the .fld megamodels.
    #[arg(long)]
    fld_dir: PathBuf,
    /// Event declarations; defaults to events.evt in the fld dir or its parent.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    script: Option<PathBuf>,
    /// Simulated time: runs complete instantly and replays are deterministic.
    #[arg(long)]
    virtual_clock: bool,
    /// Seconds of engine time to run (default: end of script, or until `stop`).
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    trace_file: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    #[arg(long, value_delimiter = ',')]
    compute: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    period: Option<Vec<u32>>,
    /// CSV output path (stdout if omitted).
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { files } => validate(&files),
        Command::Run(args) => run(&args),
        Command::Bench(args) => bench(&args),
    };
    ExitCode::from(code)
}

fn validate(files: &[PathBuf]) -> u8 {
    let mut docs = Vec::new();
    for f in files {
        let path = f.display().to_string();
        let Some(kind) = DocKind::from_path(&path) else {
            eprintln!("{path}: unknown file kind (expected .evt, .fld, .ld or .patch)");
            return EXIT_VALIDATION;
        };
        match std::fs::read_to_string(f) {
            Ok(text) => docs.push(Document::new(&path, kind, &text)),
            Err(e) => {
                eprintln!("{path}: {e}");
                return EXIT_VALIDATION;
            }
        }
    }
    let report = validate_documents(&docs);
    for (file, diags) in &report.files {
        for d in diags {
            println!("{file}: {d}");
        }
    }
    if report.has_errors() {
        EXIT_VALIDATION
    } else {
        println!("{} files ok", files.len());
        0
    }
}

fn fail(err: &EngineError) -> u8 {
    match err {
        EngineError::Load(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            EXIT_VALIDATION
        }
        other => {
            eprintln!("{other}");
            EXIT_RUNTIME
        }
    }
}

fn events_file(args: &RunArgs) -> Option<PathBuf> {
    if let Some(p) = &args.events {
        return Some(p.clone());
    }
    let here = args.fld_dir.join("events.evt");
    let parent = args.fld_dir.join("../events.evt");
    [here, parent].into_iter().find(|p| p.exists())
}

fn load(args: &RunArgs) -> Result<Scenario, EngineError> {
    let engine = if args.virtual_clock {
        Engine::with_virtual_clock()
    } else {
        Engine::new(Arc::new(MonotonicClock::new()))
    };
    let mut s = Scenario::attach(engine);
    if let Some(path) = events_file(args) {
        let text = std::fs::read_to_string(&path)?;
        let types = parse_events_file(&text, &path.display().to_string()).map_err(EngineError::Load)?;
        s.engine.set_event_types(types);
    }
    s.load_dir(&args.fld_dir)?;
    let text = std::fs::read_to_string(&args.ld)?;
    s.load_ld(&text, &args.ld.display().to_string())?;
    Ok(s)
}

type Sink = Arc<Mutex<Box<dyn Write + Send>>>;

fn trace_sink(path: Option<&Path>) -> io::Result<Sink> {
    let out: Box<dyn Write + Send> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout()),
    };
    Ok(Arc::new(Mutex::new(out)))
}

/// Forwards request lines to the engine and writes back framed responses.
fn serve(handle: &EngineHandle, input: impl BufRead, mut output: impl Write, failed: &AtomicBool) {
    for line in input.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let Ok(reply) = handle.control(&line).recv() else { break };
        if ControlResponse::parse(&reply).is_some_and(|r| !r.is_ok()) {
            failed.store(true, Ordering::SeqCst);
        }
        if output.write_all(reply.as_bytes()).and_then(|()| output.flush()).is_err() {
            break;
        }
    }
}

#[cfg(unix)]
fn listen(addr: &str, handle: EngineHandle, failed: Arc<AtomicBool>) -> io::Result<()> {
    use std::os::unix::net::UnixListener;
    let _ = std::fs::remove_file(addr);
    let listener = UnixListener::bind(addr)?;
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let Ok(reader) = stream.try_clone() else { continue };
            serve(&handle, BufReader::new(reader), stream, &failed);
        }
    });
    Ok(())
}

#[cfg(not(unix))]
fn listen(_: &str, _: EngineHandle, _: Arc<AtomicBool>) -> io::Result<()> {
    Err(io::Error::new(io::ErrorKind::Unsupported, "control sockets need a unix platform"))
}

fn run(args: &RunArgs) -> u8 {
    let script = match args.script.as_deref().map(std::fs::read_to_string) {
        None => None,
        Some(Ok(text)) => match Script::parse(&text) {
            Ok(s) => Some(s),
            Err(e) => return fail(&e),
        },
        Some(Err(e)) => {
            eprintln!("{}: {e}", args.script.as_deref().unwrap_or(Path::new("")).display());
            return EXIT_RUNTIME;
        }
    };
    let mut s = match load(args) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if let Some(dir) = args.script.as_deref().and_then(Path::parent) {
        s.base_dir = dir.to_path_buf();
    }
    let sink = match trace_sink(args.trace_file.as_deref()) {
        Ok(sink) => sink,
        Err(e) => {
            eprintln!("trace file: {e}");
            return EXIT_RUNTIME;
        }
    };
    let writer = sink.clone();
    s.engine.set_trace_sink(move |entry| {
        let mut w = writer.lock().unwrap_or_else(|e| e.into_inner());
        let _ = writeln!(w, "{entry}");
    });

    let control_failed = Arc::new(AtomicBool::new(false));
    let handle = s.engine.handle();
    match std::env::var("ENGINE_CONTROL_ADDR") {
        Ok(addr) if !addr.is_empty() => {
            if let Err(e) = listen(&addr, handle, control_failed.clone()) {
                eprintln!("control socket {addr}: {e}");
                return EXIT_CONTROL;
            }
        }
        _ => {
            let failed = control_failed.clone();
            std::thread::spawn(move || serve(&handle, io::stdin().lock(), io::stdout(), &failed));
        }
    }

    match (&script, args.duration) {
        (Some(script), until) => s.run_script(script, until),
        (None, Some(d)) => s.engine.run_until(d),
        (None, None) => s.engine.run_forever(),
    }
    let _ = sink.lock().unwrap_or_else(|e| e.into_inner()).flush();

    for o in &s.outcomes {
        if let ControlResponse::Error { code, message } = &o.response {
            eprintln!("{:.6} `{}`: {code} {message}", o.time, o.line);
            control_failed.store(true, Ordering::SeqCst);
        }
    }
    for (t, e) in s.engine.run_errors() {
        eprintln!("{t:.6} {e}");
    }
    if !s.engine.run_errors().is_empty() {
        EXIT_RUNTIME
    } else if control_failed.load(Ordering::SeqCst) {
        EXIT_CONTROL
    } else {
        0
    }
}

fn bench(args: &BenchArgs) -> u8 {
    let computes = args.compute.clone().unwrap_or_else(|| COMPUTE_MS.to_vec());
    let periods = args.period.clone().unwrap_or_else(|| PERIOD_MS.to_vec());
    let report = run_benchmark(&computes, &periods, args.seconds, |c| {
        eprintln!(
            "{}ms/{}ms: interpreter {:.3}% baseline {:.3}% overhead {:+.3}pp (steal {:.2}s/{:.2}s)",
            c.compute_ms,
            c.period_ms,
            c.interpreter.mean_cpu_pct,
            c.baseline.mean_cpu_pct,
            c.overhead_pp(),
            c.interpreter.steal_seconds,
            c.baseline.steal_seconds
        );
    });
    let report = match report {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for (c, p) in &report.infeasible {
        eprintln!("{c}ms/{p}ms: infeasible, skipped");
    }
    let csv = report.to_csv();
    let written = match &args.csv {
        Some(path) => std::fs::write(path, csv),
        None => io::stdout().write_all(csv.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("csv: {e}");
        return EXIT_RUNTIME;
    }
    0
}
