use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pinning::model::DynamicsRegistry;
use pinning::random::property_batch;
use pinning::report::{
    check_scenario, parse_sweep, run_scenario_seeded, run_sweep, EXIT_CONDITIONS, EXIT_OK,
    EXIT_VALIDATION,
};
use pinning::scenario::{self, ScenarioConfig, BUILTIN_SCENARIOS};
use pinning::Result;

#[derive(Parser)]
#[command(
    name = "pinning",
    version,
    about = "Pinning control of coupled networks: condition checks and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List,
    /// Print a scenario as JSON.
    Show { scenario: String },
    /// Evaluate the sufficient pinning conditions.
    Check {
        #[command(flatten)]
        common: Common,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Simulate a scenario and write CSV outputs.
    Run {
        #[command(flatten)]
        common: Common,
        /// Override the integration step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the final time.
        #[arg(long)]
        tmax: Option<f64>,
        /// Output directory (default: the scenario's, or out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run once per coupling strength: c=<a>:<b>:<n>.
        #[arg(long)]
        sweep: Option<String>,
        /// Validate and print the resolved scenario without integrating.
        #[arg(long)]
        dry_run: bool,
    },
    /// Check negativity of pinned matrices on seeded random networks.
    Props {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: u64,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in id or path to a scenario file.
    scenario: String,
    /// Override the coupling strength.
    #[arg(long)]
    c: Option<f64>,
    /// Seed for the sampled QUAD check.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 2 when the sufficient conditions are not established.
    #[arg(long)]
    require_conditions: bool,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = scenario::load(&self.scenario)?;
        if let Some(c) = self.c {
            cfg.c = c;
        }
        Ok(cfg)
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::List => {
            for id in BUILTIN_SCENARIOS {
                let cfg = scenario::builtin(id).expect("listed built-ins exist");
                println!("{id:24} {}", cfg.description.unwrap_or_default());
            }
            Ok(EXIT_OK)
        }
        Command::Show { scenario } => {
            println!("{}", json(&scenario::load(&scenario)?)?);
            Ok(EXIT_OK)
        }
        Command::Check {
            common,
            json: as_json,
        } => {
            let cfg = common.load()?;
            let report = check_scenario(&cfg, common.seed)?;
            if as_json {
                println!("{}", json(&report)?);
            } else {
                println!("{report}");
            }
            Ok(if common.require_conditions && !report.conditions_hold() {
                EXIT_CONDITIONS
            } else {
                EXIT_OK
            })
        }
        Command::Run {
            common,
            dt,
            tmax,
            out,
            sweep,
            dry_run,
        } => {
            let mut cfg = common.load()?;
            if let Some(dt) = dt {
                cfg.integration.dt = dt;
            }
            if let Some(t) = tmax {
                cfg.integration.t_max = t;
            }
            let resolved = cfg.resolve(&DynamicsRegistry::default())?;
            let out_dir = out.unwrap_or(resolved.out_dir);
            let cs = sweep.as_deref().map(parse_sweep).transpose()?;

            if dry_run {
                println!("{}", json(&cfg)?);
                println!(
                    "coupling matrix:\n{}",
                    resolved.system.coupling().as_dense()
                );
                println!("output directory: {}", out_dir.display());
                if let Some(cs) = &cs {
                    println!("sweep over c = {cs:?}");
                }
                return Ok(EXIT_OK);
            }

            if common.require_conditions {
                let report = check_scenario(&cfg, common.seed)?;
                if !report.conditions_hold() {
                    println!("{report}");
                    eprintln!("sufficient conditions not established; not simulating");
                    return Ok(EXIT_CONDITIONS);
                }
            }

            if let Some(cs) = cs {
                let points = run_sweep(&cfg, &cs, &out_dir, common.seed)?;
                println!("c, conditions hold, final pin_ratio, decay rate, diverged");
                for p in &points {
                    println!(
                        "{}, {}, {:?}, {:?}, {}",
                        p.c, p.conditions_hold, p.final_pin_ratio, p.decay_rate, p.diverged
                    );
                }
                println!("wrote {}", out_dir.join("sweep.csv").display());
                let diverged = points.iter().any(|p| p.diverged);
                return Ok(if diverged {
                    pinning::report::EXIT_DIVERGENCE
                } else {
                    EXIT_OK
                });
            }

            let output = run_scenario_seeded(&cfg, &out_dir, common.seed)?;
            println!("{}", output.summary);
            Ok(output.summary.exit_code())
        }
        Command::Props { seed, cases } => {
            let summary = property_batch(seed, cases)?;
            println!(
                "{} cases (seed {seed}): {} symmetric failures, {} weighted failures",
                summary.cases,
                summary.symmetric_failures.len(),
                summary.weighted_failures.len()
            );
            Ok(if summary.passed() {
                EXIT_OK
            } else {
                EXIT_CONDITIONS
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION as u8)
        }
    }
}
