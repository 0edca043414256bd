use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use feedersim::engine::{
    replay_run_dir, run_comparison, run_scenario, write_comparison, MetricsSummary, Scenario, TraceSource,
};
use feedersim::network::angle_difference_deg;
use feedersim::{ControlMode, Error};

#[derive(Parser)]
#[command(name = "feedersim", version, about = "Feeder co-simulation of a GFR / GFL battery converter with PMU-based metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the scenario's synthetic frequency trace as CSV.
    SynthTrace(Common),
    /// Calibrate the PCC-PBC reactance and report the angle sensitivity.
    Calibrate(Common),
    /// Run one scenario.
    Run(RunArgs),
    /// Run GFR and GFL on the same scenario and compare the metric CDFs.
    Compare(ScenarioArgs),
    /// Recompute metrics from PMU and telemetry CSVs of a run directory.
    ReplayMetrics(ReplayArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; defaults to the hour-transition benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Replaces the trace seed and derives the PMU noise seeds from it.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON (required).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_parser = ["gfr", "gfl", "off"])]
    mode: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Directory with pmu0.csv, pmu1.csv, pmu2.csv, telemetry.csv and optionally config.json.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to `<input>/replay`.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Domain(other),
        }
    }
}

fn load(config: Option<&Path>, seed: Option<u64>) -> Result<Scenario, Failure> {
    let scenario = match config {
        Some(path) if !path.is_file() => {
            return Err(Failure::Usage(format!("config file not found: {}", path.display())));
        }
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    Ok(match seed {
        Some(s) => scenario.with_seed(s),
        None => scenario,
    })
}

fn required(config: &Option<PathBuf>) -> Result<&Path, Failure> {
    config.as_deref().ok_or_else(|| Failure::Usage("--config <path> is required".into()))
}

fn print_metrics(label: &str, m: &MetricsSummary) {
    println!("{label}");
    println!("  baseline angle difference  {:.6} deg (std {:.6}, {} pairs)", m.baseline_deg, m.baseline_std_deg, m.baseline_pairs);
    println!("  IFD                        {:.6} Hz", m.ifd_hz);
    match &m.rrocof {
        Some(r) => println!("  rRoCoF median              {:.6e} Hz/s/W ({} samples, retained {:.3})", r.median, r.samples, r.retained_fraction),
        None => println!("  rRoCoF                     no active samples"),
    }
    match &m.rpadd {
        Some(r) => println!("  rPADD median               {:.6e} deg/kW ({} samples, retained {:.3})", r.median, r.samples, r.retained_fraction),
        None => println!("  rPADD                      no active samples"),
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let quiet = cli.quiet;
    match cli.command {
        Command::SynthTrace(a) => {
            let scenario = load(a.config.as_deref(), a.seed)?;
            if !matches!(scenario.trace, TraceSource::Synth(_)) {
                return Err(Failure::Usage("synth-trace needs a scenario with a synthetic trace".into()));
            }
            let trace = scenario.trace.load()?;
            std::fs::create_dir_all(&a.out).map_err(Error::from)?;
            let path = a.out.join("trace.csv");
            trace.write_csv(&path)?;
            if !quiet {
                println!("wrote {} samples to {}", trace.series().len(), path.display());
            }
        }
        Command::Calibrate(a) => {
            let scenario = load(a.config.as_deref(), a.seed)?;
            let feeder = scenario.feeder.resolve(scenario.f0(), scenario.converter.s_rated)?;
            let base = angle_difference_deg(&feeder, 0.0)?;
            let droop = scenario.converter.droop;
            let report = serde_json::json!({
                "x_t2_pu": feeder.x_t2,
                "x_t1_pu": feeder.x_t1,
                "baseline_angle_deg": base,
                "shift_deg_at_100mhz_droop": (angle_difference_deg(&feeder, 0.1 * droop)? - base).abs(),
                "shift_deg_at_10mhz_droop": (angle_difference_deg(&feeder, 0.01 * droop)? - base).abs(),
            });
            std::fs::create_dir_all(&a.out).map_err(Error::from)?;
            std::fs::write(a.out.join("calibration.json"), serde_json::to_string_pretty(&report).unwrap() + "\n")
                .map_err(Error::from)?;
            if !quiet {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            }
        }
        Command::Run(a) => {
            let mut scenario = load(Some(required(&a.scenario.config)?), a.scenario.seed)?;
            if let Some(mode) = a.mode {
                scenario = scenario.with_mode(mode.parse::<ControlMode>()?);
            }
            let run = run_scenario(&scenario)?;
            let dir = run.write(&a.scenario.out)?;
            if !quiet {
                print_metrics(&format!("{} run {}", run.scenario.mode, run.hash), &run.metrics.summary());
                for note in &run.metrics.notes {
                    println!("  note: {note}");
                }
                println!("artifacts in {}", dir.display());
            }
        }
        Command::Compare(a) => {
            let scenario = load(Some(required(&a.config)?), a.seed)?;
            let cmp = run_comparison(&scenario)?;
            let dir = write_comparison(&cmp, &a.out)?;
            if !quiet {
                print_metrics(&format!("gfr run {}", cmp.gfr.hash), &cmp.report.gfr);
                print_metrics(&format!("gfl run {}", cmp.gfl.hash), &cmp.report.gfl);
                for (name, r) in [("rRoCoF", cmp.report.rrocof), ("rPADD", cmp.report.rpadd)] {
                    if let Some(r) = r {
                        println!(
                            "{name}: GFR below GFL on {:.3} of {} quantiles, median ratio GFR/GFL {:.4}",
                            r.fraction, r.grid_points, r.median_ratio
                        );
                    }
                }
                println!("report in {}", dir.join("comparison.json").display());
            }
        }
        Command::ReplayMetrics(a) => {
            if !a.input.is_dir() {
                return Err(Failure::Usage(format!("input directory not found: {}", a.input.display())));
            }
            let replay = replay_run_dir(&a.input)?;
            let out = a.out.unwrap_or_else(|| a.input.join("replay"));
            replay.write(&out)?;
            if !quiet {
                print_metrics("replayed metrics", &replay.summary());
                println!("written to {}", out.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_help());
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
