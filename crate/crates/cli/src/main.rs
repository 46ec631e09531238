use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use wigfluct_cli::run::{write_csv, write_partitions, Report};
use wigfluct_cli::{exit, pairings, parse_config, run, summarize, Task, THREADS_ENV};

#[derive(Parser)]
#[command(name = "wigfluct", version, about = "Covariance of traces of Wigner and deterministic matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path (JSON); defaults to the config's output.report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table path (CSV); defaults to the config's output.csv.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Add wall-clock timings to the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// List annular non-crossing pairings of (m, n) points.
    Pairings {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Keep only pairings with this many through strings.
        #[arg(long)]
        through: Option<usize>,
        /// Comma-separated Wigner ids per point; keeps non-mixing pairings.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<u32>>,
        #[arg(long)]
        json: bool,
    },
    /// Limiting covariance and its four terms.
    Theory(Common),
    /// Monte Carlo covariance estimates.
    Mc(Common),
    /// Exact finite-N covariance by partition sums.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Per-partition diagnostics as CSV.
        #[arg(long)]
        dump_partitions: Option<PathBuf>,
    },
    /// Theory, Monte Carlo and (within caps) the oracle, cross-checked.
    Compare(Common),
    /// Summarize an existing report; exit code follows its flags.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    Ok(())
}

fn write_json(report: &Report, path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(report)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_task(common: &Common, task: Task, dump: Option<&Path>) -> anyhow::Result<i32> {
    let mut cfg = match parse_config(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(exit::USAGE);
        }
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Err(e) = cfg.resolve(task) {
        eprintln!("error: {e:#}");
        return Ok(exit::USAGE);
    }
    let (report, dumps) = run(&cfg, task, dump.is_some(), common.timing)?;
    if let Some(t) = &report.timing {
        for (phase, secs) in t {
            eprintln!("{phase}: {secs:.3}s");
        }
    }
    match common.out.as_ref().or(cfg.output.report.as_ref()) {
        Some(path) => write_json(&report, path)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    if let Some(path) = common.csv.as_ref().or(cfg.output.csv.as_ref()) {
        write_csv(&report, path)?;
    }
    if let Some(path) = dump {
        write_partitions(&dumps, path)?;
    }
    eprint!("{}", summarize(&report));
    Ok(if report.discrepancy { exit::DISCREPANCY } else { exit::OK })
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Pairings { m, n, through, labels, json } => {
            let rows = pairings(m, n, through, labels.as_deref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                for r in &rows {
                    println!("{}  K = {}  through = {}", r.pairing, r.kreweras, r.through);
                }
                eprintln!("{} pairings", rows.len());
            }
            Ok(exit::OK)
        }
        Command::Theory(c) => run_task(&c, Task::Theory, None),
        Command::Mc(c) => run_task(&c, Task::Mc, None),
        Command::Oracle { common, dump_partitions } => run_task(&common, Task::Oracle, dump_partitions.as_deref()),
        Command::Compare(c) => run_task(&c, Task::Compare, None),
        Command::Report { input } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let report: Report = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
            print!("{}", summarize(&report));
            Ok(if report.discrepancy { exit::DISCREPANCY } else { exit::OK })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::FAILURE as u8)
        }
    }
}
