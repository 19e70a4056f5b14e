use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riskscout::campaign::{
    compare, format_comparison, load_spec, prepare, recompute, run_campaign, sweep, sweep_report, write_results,
    write_sweep, CampaignError, RunOptions,
};
use riskscout::dsl::SamplerKind;

/// Risk-aware scene sampling campaigns.
#[derive(Parser)]
#[command(name = "riskscout", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a campaign spec and check the files it refers to.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run one campaign and write its results directory.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sampler: Option<String>,
        #[arg(long)]
        iterations: Option<u64>,
        /// Record zero elapsed time so repeated runs are byte-identical.
        #[arg(long)]
        deterministic_time: bool,
    },
    /// Recompute the aggregates of a results directory from records.csv.
    Metrics {
        #[arg(long)]
        results: PathBuf,
    },
    /// Rank results directories by total risk scenes.
    Compare {
        /// Comma-separated results directories.
        #[arg(long, value_delimiter = ',', required = true)]
        results: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every sampler over consecutive seeds.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        deterministic_time: bool,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

/// Failures while reading a spec or the files it names are input problems.
fn input<T>(r: Result<T, CampaignError>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Validation(e.to_string()))
}

fn spec_dir(spec: &Path) -> Option<&Path> {
    spec.parent().filter(|p| !p.as_os_str().is_empty())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { spec } => {
            let parsed = input(load_spec(&spec))?;
            let prepared = input(prepare(parsed, spec_dir(&spec)))?;
            println!(
                "ok: campaign `{}` with {} variables, sampler {}, delta {}",
                prepared.spec.name,
                prepared.spec.space.len(),
                prepared.spec.sampler.kind,
                prepared.delta
            );
        }
        Command::Run {
            spec,
            out,
            seed,
            sampler,
            iterations,
            deterministic_time,
        } => {
            let mut parsed = input(load_spec(&spec))?;
            if let Some(s) = seed {
                parsed.seed = s;
            }
            if let Some(name) = sampler {
                parsed.sampler.kind = SamplerKind::parse(&name)
                    .ok_or_else(|| Failure::Validation(format!("unknown sampler `{name}`")))?;
            }
            if let Some(n) = iterations {
                if n == 0 {
                    return Err(Failure::Validation("iterations must be at least 1".into()));
                }
                parsed.iterations = n;
            }
            let prepared = input(prepare(parsed, spec_dir(&spec)))?;
            let result = run_campaign(&prepared, RunOptions { deterministic_time }, &mut |_| {})?;
            write_results(&result, &out)?;
            let a = &result.aggregates;
            println!(
                "{} {} seed {}: {} scenes, TRS {:.2}%, diversity {}",
                result.spec.name,
                result.spec.sampler.kind,
                result.spec.seed,
                result.records.len(),
                a.trs,
                a.diversity.map_or("n/a".to_string(), |d| format!("{d:.4}"))
            );
        }
        Command::Metrics { results } => {
            let (summary, aggregates) = recompute(&results)?;
            println!("{}", serde_json::to_string_pretty(&aggregates).expect("aggregates serialize"));
            if aggregates != summary.aggregates {
                return Err(Failure::Runtime(format!(
                    "{}: recomputed aggregates differ from summary.json",
                    results.display()
                )));
            }
        }
        Command::Compare { results, out } => {
            let report = compare(&results)?;
            print!("{}", format_comparison(&report));
            write_json(&out, &report)?;
        }
        Command::Sweep {
            spec,
            seeds,
            out,
            deterministic_time,
        } => {
            if seeds == 0 {
                return Err(Failure::Validation("--seeds must be at least 1".into()));
            }
            let parsed = input(load_spec(&spec))?;
            // surface spec problems once, before fanning out
            input(prepare(parsed.clone(), spec_dir(&spec)))?;
            let (grouped, skipped) = sweep(&parsed, spec_dir(&spec), seeds, RunOptions { deterministic_time })?;
            for (name, why) in &skipped {
                eprintln!("skipping {name}: {why}");
            }
            let report = sweep_report(&parsed.name, &grouped, skipped);
            write_sweep(&out, &grouped, &report)?;
            for row in &report.rows {
                println!(
                    "{:<8} mean TRS {:6.2}  stddev {:5.2}  diversity {}",
                    row.sampler,
                    row.mean_trs,
                    row.stddev_trs,
                    row.mean_diversity.map_or("n/a".to_string(), |d| format!("{d:.4}"))
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
