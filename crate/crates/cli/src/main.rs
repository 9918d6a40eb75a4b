use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use procure::generate::{generate, Family, Params};
use procure::io::{digest, parse_instance_file, to_json, InstanceFile};
use procure::rational::parse_rational;
use procure::report::{
    error_line, json_lines, ratio_sweep, skipped_line, write_summary_csv, write_sweep_csv, RunRecord,
    SummaryRow,
};
use procure::verify::{
    run_branch, sample_scenario, scenario_of, verify_instance, Branch, DstOptions, MechanismId,
};
use procure::{Error, Instance};

#[derive(Parser)]
#[command(name = "procure", version, about = "Budget-feasible procurement mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one realization of a mechanism on an instance file.
    Run(RunArgs),
    /// Check truthfulness, budget and ratio properties.
    Verify(VerifyArgs),
    /// Write a seeded instance file.
    Generate(GenerateArgs),
    /// Measured ratios on the one-seller family, as CSV.
    RatioSweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long, short)]
    mechanism: MechanismId,
    /// Scenario to replay, e.g. `greedy`, `star`, `one:fire`, `rand:0b101`.
    #[arg(long, conflicts_with = "seed")]
    scenario: Option<Branch>,
    /// Seed for drawing the scenario.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance files to check.
    instances: Vec<PathBuf>,
    /// Mechanisms to check, comma separated.
    #[arg(long, short, value_delimiter = ',', default_values_t = MechanismId::ALL.to_vec())]
    mechanism: Vec<MechanismId>,
    /// Also check this many generated instances.
    #[arg(long, requires = "count")]
    family: Option<Family>,
    #[arg(long, requires = "family")]
    count: Option<u64>,
    /// First generator seed; instance `t` uses `seed + t`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform deviation grid points on (0, B].
    #[arg(long, default_value_t = 64)]
    grid: u32,
    /// Also vary the opponent's bid on two-seller instances.
    #[arg(long)]
    strict: bool,
    /// Directory for report.jsonl and summary.csv; lines go to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    family: Family,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sellers: Option<usize>,
    /// Units per seller, comma separated.
    #[arg(long, value_delimiter = ',')]
    units: Option<Vec<u32>>,
    #[arg(long, value_parser = parse_rational)]
    budget: Option<procure::Rational>,
    /// Adversarial family: the seller's cost is B / k.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 4)]
    from: u32,
    #[arg(long, default_value_t = 64)]
    to: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_instance(path: &Path) -> Result<InstanceFile, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_instance_file(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, String> {
    let file = read_instance(&args.instance)?;
    let inst = &file.instance;
    let bids = file.bids();
    let scenario = match args.scenario {
        Some(b) => scenario_of(args.mechanism, inst, b),
        None => sample_scenario(args.mechanism, inst, args.seed),
    }
    .map_err(|e| e.to_string())?;
    let outcome = run_branch(args.mechanism, inst, &bids, scenario.branch).map_err(|e| e.to_string())?;
    let record =
        RunRecord::new(args.mechanism, &scenario, &bids, inst, &outcome).map_err(|e| e.to_string())?;
    println!("{}", record.to_json());
    Ok(ExitCode::SUCCESS)
}

/// Mechanisms that cannot run on an instance are skipped rather than failed.
fn is_guard(e: &Error) -> bool {
    matches!(
        e,
        Error::WrongValuationClass(_) | Error::SearchSpaceTooLarge { .. }
    )
}

#[derive(Default)]
struct Batch {
    lines: String,
    rows: Vec<SummaryRow>,
    failed: usize,
    skipped: usize,
}

impl Batch {
    fn absorb(&mut self, other: Batch) {
        self.lines.push_str(&other.lines);
        self.rows.extend(other.rows);
        self.failed += other.failed;
        self.skipped += other.skipped;
    }
}

fn verify_one(inst: &Instance, mechs: &[MechanismId], opts: &DstOptions) -> Batch {
    let d = digest(inst);
    let mut b = Batch::default();
    for &mech in mechs {
        match verify_instance(mech, inst, opts, &d) {
            Ok(report) => {
                if !report.passed() {
                    b.failed += 1;
                }
                b.lines.push_str(&json_lines(&report));
                b.rows.push(SummaryRow::from_report(&report));
            }
            Err(e) if is_guard(&e) => {
                b.skipped += 1;
                b.lines.push_str(&skipped_line(&d, mech, &e.to_string()));
                b.lines.push('\n');
            }
            Err(e) => {
                b.failed += 1;
                b.lines.push_str(&error_line(&d, mech, &e.to_string()));
                b.lines.push('\n');
            }
        }
    }
    b
}

/// Splits the instances into contiguous chunks, one per worker thread, and
/// concatenates the results in input order.
fn verify_all(instances: &[Instance], mechs: &[MechanismId], opts: &DstOptions) -> Batch {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = instances.len().div_ceil(workers).max(1);
    let parts: Vec<Batch> = std::thread::scope(|s| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut b = Batch::default();
                    for inst in part {
                        b.absorb(verify_one(inst, mechs, opts));
                    }
                    b
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut all = Batch::default();
    for p in parts {
        all.absorb(p);
    }
    all
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let mut instances: Vec<Instance> = Vec::new();
    for p in &args.instances {
        instances.push(read_instance(p)?.instance);
    }
    if let (Some(family), Some(count)) = (args.family, args.count) {
        for t in 0..count {
            let inst = generate(family, &Params::default(), args.seed + t).map_err(|e| e.to_string())?;
            instances.push(inst);
        }
    }
    if instances.is_empty() {
        return Err("nothing to verify: give instance files or --family with --count".into());
    }
    let opts = DstOptions {
        grid: args.grid,
        strict: args.strict,
    };
    let batch = verify_all(&instances, &args.mechanism, &opts);
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write_atomic(&dir.join("report.jsonl"), batch.lines.as_bytes())?;
            let mut csv = Vec::new();
            write_summary_csv(&batch.rows, &mut csv).map_err(|e| e.to_string())?;
            write_atomic(&dir.join("summary.csv"), &csv)?;
        }
        None => write_out(None, &batch.lines)?,
    }
    eprintln!(
        "{} reports, {} failing, {} skipped",
        batch.rows.len(),
        batch.failed,
        batch.skipped
    );
    Ok(if batch.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, String> {
    let params = Params {
        sellers: args.sellers,
        units: args.units,
        budget: args.budget,
        k: args.k,
    };
    let inst = generate(args.family, &params, args.seed).map_err(|e| e.to_string())?;
    write_out(args.out.as_deref(), &to_json(&InstanceFile::new(inst)))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, String> {
    if args.from == 0 || args.from > args.to {
        return Err(format!("empty range {}..={}", args.from, args.to));
    }
    let rows = ratio_sweep(args.from..=args.to).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    write_out(args.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Generate(a) => cmd_generate(a),
        Command::RatioSweep(a) => cmd_sweep(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
