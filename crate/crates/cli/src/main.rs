use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use capdist_cli::{commands, verify, write_with_manifest, CliError, CliResult, RunManifest};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "capdist", version, about = "Capacity-distortion tradeoff of a state-dependent MAC with feedback")]
struct Cli {
    /// Worker threads for sweeps and simulation (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Proposed, resource-sharing and outer sum rates at one state probability
    Sumrate {
        #[arg(long)]
        ps: f64,
        /// Points per policy parameter
        #[arg(long, default_value_t = 201)]
        grid: usize,
        /// Also write the report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sum rates over a range of state probabilities, as CSV
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 1.0)]
        end: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distortion versus sum-rate frontiers at one state probability, as CSV
    Tradeoff {
        #[arg(long)]
        ps: f64,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        /// Points on the resource-sharing segment
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant checks and print the reconciliation report
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the symmetric distortion of a policy
    Simulate {
        #[arg(long)]
        ps: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Evaluate the bounds on a channel and inputs given as JSON
    Region {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn manifest(command: &str, parameters: serde_json::Value, grid: Option<usize>, start: Instant) -> RunManifest {
    RunManifest {
        command: command.into(),
        parameters,
        grid: grid.map(|n| json!({"axes": ["p", "q", "r"], "points_per_axis": n, "lo": 0.0, "hi": 1.0})),
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::BadArg("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::BadArg(e.to_string()))?;
    }
    let start = Instant::now();
    match cli.command {
        Command::Sumrate { ps, grid, out } => {
            let report = commands::sumrate(ps, grid)?;
            print!("{}", report.render());
            if let Some(out) = out {
                let m = manifest("sumrate", json!({"ps": ps, "grid": grid}), Some(grid), start);
                write_with_manifest(&out, &pretty(&report), m)?;
            }
        }
        Command::Sweep {
            start: from,
            end,
            step,
            grid,
            out,
        } => {
            let csv = commands::sweep_csv(from, end, step, grid)?;
            let m = manifest(
                "sweep",
                json!({"start": from, "end": end, "step": step, "grid": grid}),
                Some(grid),
                start,
            );
            write_with_manifest(&out, &csv, m)?;
        }
        Command::Tradeoff { ps, grid, samples, out } => {
            let set = commands::tradeoff(ps, grid, samples)?;
            let m = manifest(
                "tradeoff",
                json!({"ps": ps, "grid": grid, "samples": samples}),
                Some(grid),
                start,
            );
            write_with_manifest(&out, &set.to_csv(), m)?;
        }
        Command::Verify { seed, out } => {
            let report = verify::run_verify(seed)?;
            for h in &report.hard {
                eprintln!(
                    "{} {} = {:e} (tolerance {:e})",
                    if h.pass { "PASS" } else { "FAIL" },
                    h.name,
                    h.value,
                    h.tolerance
                );
            }
            for f in &report.soft_summary {
                eprintln!(
                    "SOFT {}: {} of {} comparisons differ, max abs diff {:e}",
                    f.family, f.flagged, f.compared, f.max_abs_diff
                );
            }
            match out {
                Some(out) => {
                    let m = manifest("verify", json!({"seed": seed}), None, start);
                    write_with_manifest(&out, &pretty(&report), m)?;
                }
                None => print!("{}", pretty(&report)),
            }
            if !report.pass {
                let failed: Vec<&str> = report.hard.iter().filter(|h| !h.pass).map(|h| h.name.as_str()).collect();
                return Err(CliError::VerifyFailed(failed.join("; ")));
            }
        }
        Command::Simulate {
            ps,
            p,
            q,
            r,
            samples,
            seed,
        } => {
            let res = commands::simulate(ps, p, q, r, samples, seed)?;
            println!("{}", serde_json::to_string(&res).expect("result serializes"));
        }
        Command::Region { config, out } => {
            let report = commands::region(&config)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            match out {
                Some(out) => {
                    let m = manifest("region", json!({"config": config.display().to_string()}), None, start);
                    write_with_manifest(&out, &pretty(&report), m)?;
                }
                None => print!("{}", pretty(&report)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
