use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agx_bus::scenario::Scenario;
use agx_bus::{audit, audit_self_informing, Mode};
use agx_core::persist::{export_text, import_text, load_snapshot, replay, replay_onto, PersistError};
use agx_core::ql::{self, DefineItem, ExecOptions, Query};
use agx_core::{Store, ValidationProfile};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Loads, validates, queries and converts archigraph stores.
#[derive(Parser, Debug)]
#[command(name = "agx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Import a store and check it against a validation profile.
    Validate {
        file: PathBuf,
        /// protograph, ordinary, metagraph or archigraph.
        #[arg(long, default_value = "archigraph")]
        profile: String,
    },
    /// Run one statement against a store and print the result as TSV.
    Query {
        file: PathBuf,
        #[arg(short = 'e', long = "expr")]
        expr: String,
    },
    /// Apply the store's rules plus those in a rules script until fixpoint.
    Infer {
        file: PathBuf,
        /// Script of DEFINE RULE and DEFINE PREDICATE statements.
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Write the canonical form of a store.
    Export {
        file: PathBuf,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Rewrite a store file in canonical form.
    Fmt { file: PathBuf },
    /// Run the demo bus scenario and write its transcript.
    BusDemo {
        /// Module count, the demo module included.
        #[arg(long, default_value_t = 4)]
        modules: usize,
        #[arg(long, default_value_t = 50)]
        ticks: u64,
        /// Seeds the workload and switches to randomized scheduling.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Operation log tools.
    Log {
        #[command(subcommand)]
        command: LogCommand,
    },
}

#[derive(Subcommand, Debug)]
enum LogCommand {
    /// Rebuild a store from an operation log.
    Replay {
        log: PathBuf,
        /// Snapshot to start from; only later entries are replayed.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
}

enum Failure {
    /// Validation or query failure.
    Rejected(String),
    Usage(String),
    /// I/O or parse error.
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Rejected(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Rejected(m) | Failure::Usage(m) | Failure::Input(m) => m,
        }
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn persist_failure(path: &Path, e: PersistError) -> Failure {
    let msg = format!("{}: {e}", path.display());
    match e {
        PersistError::ValidationFailed(_) => Failure::Rejected(msg),
        _ => Failure::Input(msg),
    }
}

fn load(path: &Path) -> Result<Store, Failure> {
    import_text(&read(path)?).map_err(|e| persist_failure(path, e))
}

fn export(store: &Store) -> Result<String, Failure> {
    export_text(store).map_err(|e| Failure::Input(e.to_string()))
}

fn exec_options() -> Result<ExecOptions, Failure> {
    let mut opts = ExecOptions::default();
    if let Ok(h) = std::env::var("AGX_HORIZON") {
        opts.horizon = h
            .parse()
            .ok()
            .filter(|&h| h > 0)
            .ok_or_else(|| Failure::Usage(format!("AGX_HORIZON must be a positive integer, got `{h}`")))?;
    }
    Ok(opts)
}

fn report_diagnostics(rs: &ql::ResultSet) {
    for d in &rs.diagnostics {
        eprintln!("{}: {}", d.code, d.message);
    }
}

fn validate(file: &Path, profile: &str) -> CliResult {
    let profile: ValidationProfile = profile.parse().map_err(Failure::Usage)?;
    let report = load(file)?.validate(profile);
    print!("{report}");
    if report.is_conforming() {
        Ok(())
    } else {
        Err(Failure::Rejected(format!(
            "{} violation(s) of profile {}",
            report.violations.len(),
            profile.name()
        )))
    }
}

fn query(file: &Path, expr: &str) -> CliResult {
    let opts = exec_options()?;
    let mut store = load(file)?;
    let q = ql::parse(expr).map_err(|e| Failure::Rejected(format!("query: {e}")))?;
    let rs = ql::execute(&mut store, &q, &opts);
    print!("{}", rs.to_tsv(&store));
    report_diagnostics(&rs);
    if rs.has_errors() {
        return Err(Failure::Rejected("query failed".into()));
    }
    Ok(())
}

fn infer(file: &Path, rules: &Path, max_iter: Option<usize>, output: &Path) -> CliResult {
    let mut opts = exec_options()?;
    opts.strict = true;
    if let Some(n) = max_iter {
        opts.max_iter = n;
    }
    let mut store = load(file)?;
    let script = ql::parse_script(&read(rules)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", rules.display())))?;
    for q in &script {
        let allowed = match q {
            Query::Define(d) => matches!(d.item, DefineItem::Rule(_) | DefineItem::Predicate { .. }),
            _ => false,
        };
        if !allowed {
            return Err(Failure::Input(format!(
                "{}: only DEFINE RULE and DEFINE PREDICATE statements are allowed",
                rules.display()
            )));
        }
        let rs = ql::execute(&mut store, q, &opts);
        if rs.has_errors() {
            report_diagnostics(&rs);
            return Err(Failure::Rejected(format!("{}: rule rejected", rules.display())));
        }
    }
    let all = ql::parse("INFER ALL;").expect("fixed statement parses");
    let rs = ql::execute(&mut store, &all, &opts);
    print!("{}", rs.to_tsv(&store));
    report_diagnostics(&rs);
    if rs.has_errors() {
        return Err(Failure::Rejected("inference failed".into()));
    }
    write(output, &export(&store)?)
}

fn fmt_in_place(file: &Path) -> CliResult {
    let text = read(file)?;
    let canonical = import_text(&text)
        .map_err(|e| persist_failure(file, e))
        .and_then(|s| export(&s))?;
    if canonical != text {
        write(file, &canonical)?;
    }
    Ok(())
}

fn bus_demo(modules: usize, ticks: u64, seed: Option<u64>, output: &Path) -> CliResult {
    if modules < 2 {
        return Err(Failure::Usage(
            "--modules must be at least 2 (the demo module plus one other)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let actions = (modules * 4).min(60);
    let scenario = Scenario::generate(&mut rng, modules - 1, actions, ticks).with_demo(&mut rng);
    let mode = match seed {
        Some(seed) => Mode::Randomized { seed },
        None => Mode::Deterministic,
    };
    let mut bus = scenario
        .build(mode)
        .map_err(|e| Failure::Rejected(e.to_string()))?;
    bus.run(ticks);
    let t = bus.transcript();
    write(output, &t.to_jsonl())?;
    let rep = audit(t, false);
    let demo = audit_self_informing(t, "demo");
    println!("ticks\t{ticks}");
    println!("records\t{}", t.len());
    println!("publishes\t{}", rep.publishes);
    println!("deliveries\t{}", rep.deliveries);
    println!("responses\t{}", rep.responses);
    println!("timeouts\t{}", rep.timeouts);
    println!("commits\t{}", rep.commits);
    println!("aborts\t{}", rep.aborts);
    for v in rep.violations.iter().chain(&demo) {
        eprintln!("violation: {v}");
    }
    if rep.is_clean() && demo.is_empty() {
        Ok(())
    } else {
        Err(Failure::Rejected("transcript audit failed".into()))
    }
}

fn log_replay(log: &Path, snapshot: Option<&Path>, output: &Path) -> CliResult {
    let bytes = fs::read(log).map_err(|e| Failure::Input(format!("{}: {e}", log.display())))?;
    let report = match snapshot {
        None => replay(&bytes),
        Some(path) => {
            let snap = fs::read(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let snap = load_snapshot(&snap).map_err(|e| persist_failure(path, e))?;
            replay_onto(snap.store, snap.seq, &bytes)
        }
    };
    write(output, &export(&report.store)?)?;
    println!("last_seq\t{}", report.last_seq);
    if report.truncated_tail {
        eprintln!("warning: {}: torn final entry ignored", log.display());
    }
    match report.error {
        None => Ok(()),
        Some(e) => Err(Failure::Input(format!(
            "{}: {e}; store rebuilt up to entry {}",
            log.display(),
            report.last_seq
        ))),
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Validate { file, profile } => validate(&file, &profile),
        Command::Query { file, expr } => query(&file, &expr),
        Command::Infer {
            file,
            rules,
            max_iter,
            output,
        } => infer(&file, &rules, max_iter, &output),
        Command::Export { file, output } => write(&output, &export(&load(&file)?)?),
        Command::Fmt { file } => fmt_in_place(&file),
        Command::BusDemo {
            modules,
            ticks,
            seed,
            output,
        } => bus_demo(modules, ticks, seed, &output),
        Command::Log {
            command:
                LogCommand::Replay {
                    log,
                    snapshot,
                    output,
                },
        } => log_replay(&log, snapshot.as_deref(), &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("agx: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
