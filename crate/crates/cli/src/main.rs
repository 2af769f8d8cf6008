use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use isofill_core::driver::families::parse_space;
use isofill_core::driver::{
    calibrate, experiment_exponent, fill_cycle, CalibrationOptions, Constants, ExperimentOptions, Family, FillConfig,
};
use isofill_core::fill::{min_filling, MinFillOptions};
use isofill_core::numeric::{parse_q, q_to_string, to_f64};
use isofill_core::Chain;
use serde_json::json;

#[derive(Parser)]
#[command(name = "isofill", about = "Multi-scale fillings of integral cycles in model CAT(0) cube complexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fill one cycle and print the filling summary as JSON.
    Fill {
        /// grid:n,extent,h | treeprod:a,b,depth | path of a custom complex JSON
        #[arg(long)]
        space: String,
        /// Chain JSON file {"dim": k, "terms": [[cell, coeff], ...]}
        #[arg(long)]
        cycle: PathBuf,
        #[arg(long, default_value = "1/4")]
        delta: String,
        /// Also compute the exact minimal filling.
        #[arg(long)]
        oracle: bool,
        /// Constants JSON replacing the bundled family constants.
        #[arg(long)]
        constants: Option<PathBuf>,
        /// Write the filling chain JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a cycle family and write the CSV report.
    Experiment {
        /// grid3_spheres | grid2_loops | treeprod_cycles | grid3_mixed | custom
        #[arg(long)]
        family: String,
        /// key=value,... e.g. m=2..12 or depth=6,count=40,seed=1 or file=cycles.json
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "1/4")]
        delta: String,
        /// Skip the multi-scale filling and report only the minimal fillings.
        #[arg(long)]
        oracle_only: bool,
        /// Largest candidate cell count for the minimal filling (0 disables it).
        #[arg(long, default_value_t = 20_000)]
        oracle_max_cells: usize,
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Measure the family constants on a random workload of the space.
    Calibrate {
        #[arg(long)]
        space: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 24)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value = "1/4")]
        delta: String,
        #[arg(long, default_value_t = 1.25)]
        safety: f64,
    },
}

fn load_constants(path: &Option<PathBuf>) -> Result<Option<Constants>> {
    path.as_ref()
        .map(|p| {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(Constants::from_json(&text)?)
        })
        .transpose()
}

/// Returns whether every verification passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Fill {
            space,
            cycle,
            delta,
            oracle,
            constants,
            out,
        } => {
            let x = parse_space(&space)?;
            let text = std::fs::read_to_string(&cycle).with_context(|| format!("reading {}", cycle.display()))?;
            let t = Chain::from_json(&x, &text)?;
            let mut cfg = FillConfig::new(&x, parse_q(&delta)?);
            if let Some(c) = load_constants(&constants)? {
                cfg.constants = c;
            }
            let f = fill_cycle(&x, &t, &cfg)?;
            let bounds = f.chain.boundary(&x) == t;
            let violations = f.ledger_violations();
            let oracle_mass = if oracle {
                let m = min_filling(&x, &t, &MinFillOptions::default())?;
                Some(q_to_string(&m.mass))
            } else {
                None
            };
            if let Some(p) = out {
                std::fs::write(&p, f.chain.to_json()).with_context(|| format!("writing {}", p.display()))?;
            }
            let summary = json!({
                "mass_T": f.mass_t,
                "fill_mass": f.mass,
                "ratio": f.ratio,
                "delta": to_f64(&cfg.delta),
                "method": f.method_tag(),
                "boundary_verified": bounds,
                "ledger_violations": violations,
                "ledger": f.ledger,
                "rounds": f.rounds,
                "oracle_mass": oracle_mass,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(bounds && violations == 0)
        }
        Command::Experiment {
            family,
            params,
            out,
            delta,
            oracle_only,
            oracle_max_cells,
            constants,
        } => {
            let fam = Family::parse(&family, &params)?;
            let opts = ExperimentOptions {
                delta: parse_q(&delta)?,
                fill_cycle: !oracle_only,
                oracle_max_cells,
                constants: load_constants(&constants)?,
            };
            let rep = experiment_exponent(&fam, &opts)?;
            std::fs::write(&out, rep.to_csv()).with_context(|| format!("writing {}", out.display()))?;
            print!("{}", rep.summary());
            Ok(rep.failures.is_empty() && rep.ledger_violations == 0)
        }
        Command::Calibrate {
            space,
            out,
            samples,
            seed,
            delta,
            safety,
        } => {
            let x = parse_space(&space)?;
            let opts = CalibrationOptions {
                samples,
                seed,
                delta: parse_q(&delta)?,
                safety,
            };
            let c = calibrate(&x, &opts)?;
            std::fs::write(&out, c.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
            println!("{}", c.to_json());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
