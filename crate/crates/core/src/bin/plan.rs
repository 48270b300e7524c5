use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use em_planner::output::{emit_outputs, Formats};
use em_planner::{load_scenario, run_closed_loop, PlannerConfig};

const EXIT_LOAD: u8 = 2;
const EXIT_IO: u8 = 3;

/// Runs the planner in closed loop over a scenario file.
#[derive(Debug, Parser)]
#[command(name = "plan", version)]
struct Args {
    /// Scenario JSON file.
    #[arg(long, required_unless_present = "dump_config")]
    scenario: Option<PathBuf>,
    /// Number of planning cycles; defaults to the scenario's count.
    #[arg(long)]
    cycles: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write per-cycle SVG plots.
    #[arg(long)]
    plot: bool,
    /// Comma-separated subset of json, csv, svg.
    #[arg(long, default_value = "json,csv,svg")]
    formats: String,
    /// Planner configuration (TOML); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the default configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLANNER_LOG", "warn")).init();
    let args = Args::parse();
    if args.dump_config {
        print!("{}", PlannerConfig::default().to_toml_string());
        return ExitCode::SUCCESS;
    }
    let formats: Formats = match args.formats.parse() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_LOAD);
        }
    };
    let config = match args.config.as_deref().map(PlannerConfig::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_LOAD);
        }
    };
    let scenario_path = args.scenario.expect("required by clap");
    let scenario = match load_scenario(&scenario_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_LOAD);
        }
    };
    let trace = run_closed_loop(&scenario, &config, args.cycles);
    match emit_outputs(&trace, &args.out, formats, args.plot) {
        Ok(files) => {
            println!(
                "{} cycles, {} fallback events, {} files written to {}",
                trace.records.len(),
                trace.fallback_count(),
                files.len(),
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}
