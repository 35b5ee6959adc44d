use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tsnbridge::batch::run_batch;
use tsnbridge::bridge_delay::{nominal_report, DelayParams};
use tsnbridge::grantfree::dump::write_schedule_csv;
use tsnbridge::scenario::{preset, validate, Scenario, SchedulerSpec, PRESETS};
use tsnbridge::sim::output::{summary_json, Format};
use tsnbridge::sim::{initial_schedule, SimError};
use tsnbridge::time::{Duration, Fraction, TddPattern};

#[derive(Parser)]
#[command(name = "tsnbridge", version, about = "5G uplink as a TSN bridge: delay bounds, schedules and simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a scenario and list errors and warnings.
    Validate {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Simulate a scenario for one or more seeds.
    Run {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        seed: Option<u64>,
        /// Inclusive seed range such as `1..3`.
        #[arg(long, conflicts_with = "seed")]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Write the grant-free reservations of a scenario as CSV.
    DumpSchedule {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the per-class bridge delay report of a TDD pattern.
    Bd {
        /// Slot labels, e.g. DDDDDDDSUU.
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        mu: u8,
        #[arg(long, default_value_t = 106)]
        n_rb: u32,
        #[arg(long, default_value = "1/1")]
        special_ul_fraction: Fraction,
        #[arg(long, default_value_t = 0)]
        delta_ns: u64,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Print a built-in scenario as JSON.
    Preset { name: String },
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario: periodic or heterogeneous.
    #[arg(long)]
    preset: Option<String>,
    /// Replaces the scenario's scheduler, e.g. `gf_static:20` or
    /// `gf_adaptive+dynamic:max_ci`.
    #[arg(long)]
    scheduler: Option<SchedulerSpec>,
    /// Drops the burst volume from class-4 profiles.
    #[arg(long)]
    no_mdbv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(src: &Source) -> Result<Scenario, Failure> {
    let s = match (&src.scenario, &src.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Runtime)?;
            Scenario::from_json(&text)
                .map_err(|e| Failure::Invalid(anyhow!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => preset(name).ok_or_else(|| {
            Failure::Invalid(anyhow!("unknown preset {name:?}; choose one of {}", PRESETS.join(", ")))
        })?,
        (None, None) => return Err(Failure::Invalid(anyhow!("--scenario or --preset is required"))),
    };
    let s = match src.scheduler {
        Some(sch) => s.with_scheduler(sch),
        None => s,
    };
    Ok(if src.no_mdbv { s.without_mdbv() } else { s })
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| anyhow!("seed range {text:?} is not of the form N..M"))?;
    let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("seed range {text:?} is empty");
    }
    Ok((a..=b).collect())
}

fn check(s: &Scenario) -> Result<(), Failure> {
    let r = validate(s);
    for w in &r.warnings {
        eprintln!("warning {}: {}", w.code, w.message);
    }
    if r.is_ok() {
        return Ok(());
    }
    for e in &r.errors {
        eprintln!("error {}: {}", e.code, e.message);
    }
    Err(Failure::Invalid(anyhow!("{} validation error(s)", r.errors.len())))
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn bd_table(pattern: &TddPattern, delta: Duration, format: OutFormat) -> Result<Vec<u8>> {
    let rows = nominal_report(pattern, DelayParams { delta })?;
    Ok(match format {
        OutFormat::Json => summary_json(&rows)?,
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["tc", "mode", "min_ns", "max_ns", "frame_size_dependent_ns", "frame_size_independent_ns"])?;
            for r in rows {
                let mode = serde_json::to_value(r.mode)?;
                w.write_record([
                    r.tc.get().to_string(),
                    mode.as_str().unwrap_or_default().to_string(),
                    r.min_ns.to_string(),
                    r.max_ns.to_string(),
                    r.frame_size_dependent_ns.to_string(),
                    r.frame_size_independent_ns.to_string(),
                ])?;
            }
            w.into_inner().map_err(|e| anyhow!(e.to_string()))?
        }
    })
}

fn exec(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Validate { src, format } => {
            let s = load(&src)?;
            let r = validate(&s);
            if let OutFormat::Json = format {
                write_out(None, &summary_json(&r).map_err(anyhow::Error::from)?)?;
            }
            check(&s)?;
            eprintln!("{}: ok", s.name);
        }
        Cmd::Run {
            src,
            seed,
            seeds,
            out,
            format,
        } => {
            let s = load(&src)?;
            check(&s)?;
            let seeds = match (seed, seeds) {
                (Some(x), _) => vec![x],
                (None, Some(r)) => parse_seeds(&r).map_err(Failure::Invalid)?,
                (None, None) => s.seeds.clone(),
            };
            fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let agg = run_batch(&s, &seeds, &out, format.into()).map_err(|e| match e {
                tsnbridge::batch::BatchError::Run {
                    source: SimError::Invalid(_) | SimError::Admission(_),
                    ..
                } => Failure::Invalid(e.into()),
                e => Failure::Runtime(e.into()),
            })?;
            eprintln!(
                "{} [{}]: {} seed(s), RB utilization {:.2}%, traces in {}",
                agg.scenario,
                agg.scheduler,
                agg.seeds.len(),
                agg.rb_utilization_pct.map_or(0.0, |u| u.mean),
                out.display()
            );
        }
        Cmd::DumpSchedule { src, seed, out } => {
            let s = load(&src)?;
            check(&s)?;
            let sched = initial_schedule(&s, seed).map_err(anyhow::Error::from)?;
            let mut buf = Vec::new();
            write_schedule_csv(&sched, &mut buf).map_err(anyhow::Error::from)?;
            write_out(out.as_deref(), &buf)?;
        }
        Cmd::Bd {
            pattern,
            mu,
            n_rb,
            special_ul_fraction,
            delta_ns,
            format,
        } => {
            let p = TddPattern::parse(&pattern, mu, n_rb, special_ul_fraction)
                .map_err(|e| Failure::Invalid(e.into()))?;
            write_out(None, &bd_table(&p, Duration::from_ns(delta_ns), format).map_err(Failure::Invalid)?)?;
        }
        Cmd::Preset { name } => {
            let s = preset(&name).ok_or_else(|| Failure::Invalid(anyhow!("unknown preset {name:?}")))?;
            write_out(None, s.to_json().as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match exec(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
