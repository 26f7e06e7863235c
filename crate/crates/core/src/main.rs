use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use roadflow::io::{emit_results, load_scenario, scenario_to_json, Emit, RunConfig, SolverChoice};
use roadflow::scenarios::{build_scenario, run_comparison, run_solvers, scenario_document, SCENARIO_NAMES};
use roadflow::sim::{run, RunOptions, SolverKind};
use roadflow::{Error, Execution};

#[derive(Parser)]
#[command(name = "roadflow", version, about = "Traffic flow on road networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print its diagnostics.
    Validate { file: PathBuf },
    /// Run one or all solvers and write results.
    Run {
        /// JSON run configuration; flags override its fields.
        config: Option<PathBuf>,
        /// Built-in scenario name or scenario file.
        #[arg(long)]
        scenario: Option<String>,
        /// classical, multipath, local or all.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of profiles,timeseries,report.
        #[arg(long, value_delimiter = ',')]
        emit: Option<Vec<String>>,
        /// Use the thread pool.
        #[arg(long)]
        parallel: bool,
    },
    /// Run every applicable solver on a scenario and print the comparison.
    Compare {
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: bool,
    },
    /// Time the large synthetic network with the local solver.
    Bench {
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Print a built-in scenario as a scenario file.
    Export { name: String },
    /// List the built-in scenarios.
    List,
}

fn exec(parallel: bool) -> Execution {
    if parallel {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Invalid(_) | Error::Malformed(_))) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> roadflow::Result<()> {
    match cmd {
        Command::Validate { file } => {
            let sc = load_scenario(&file.to_string_lossy())?;
            println!(
                "ok: `{}` with {} arcs, {} junctions, {} paths",
                sc.name(),
                sc.network().arcs().len(),
                sc.network().junctions().len(),
                sc.network().paths().len()
            );
            Ok(())
        }
        Command::Run { config, scenario, solver, dx, dt, tf, out, emit, parallel } => {
            let mut cfg = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig {
                    scenario: scenario
                        .clone()
                        .ok_or_else(|| Error::Config("`run` needs a config file or --scenario".into()))?,
                    solver: SolverChoice::All,
                    dx: None,
                    dt: None,
                    t_f: None,
                    out: PathBuf::from("out"),
                    emit: vec![Emit::Profiles, Emit::Timeseries, Emit::Report],
                    parallel: false,
                },
            };
            if let Some(s) = scenario {
                cfg.scenario = s;
            }
            if let Some(s) = solver {
                cfg.solver = SolverChoice::parse(&s)?;
            }
            cfg.dx = dx.or(cfg.dx);
            cfg.dt = dt.or(cfg.dt);
            cfg.t_f = tf.or(cfg.t_f);
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(e) = emit {
                cfg.emit = e.iter().map(|s| Emit::parse(s)).collect::<roadflow::Result<_>>()?;
            }
            cfg.parallel |= parallel;
            cfg.check()?;

            let sc = cfg.scenario()?;
            let report = run_solvers(&sc, &cfg.solver.kinds(&sc), exec(cfg.parallel))?;
            for f in emit_results(&sc, &report, &cfg.out, &cfg.emit)? {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Compare { scenario, out, parallel } => {
            let sc = load_scenario(&scenario)?;
            let report = run_comparison(&sc, exec(parallel))?;
            println!("{}", serde_json::to_string_pretty(&report.metrics)?);
            if let Some(out) = out {
                emit_results(&sc, &report, &out, &[Emit::Profiles, Emit::Timeseries, Emit::Report])?;
            }
            Ok(())
        }
        Command::Bench { repeats } => {
            let sc = build_scenario("synthetic_large")?;
            let opts = |exec| RunOptions { exec, steady_tol: 0.0, record: false };
            let mut modes = vec![("sequential", Execution::Sequential)];
            if Execution::parallel_available() {
                modes.push(("parallel", Execution::Parallel));
            }
            println!(
                "synthetic_large: {} cells, {} steps, local solver",
                sc.network().total_cells(),
                sc.grid().steps()
            );
            for (name, mode) in modes {
                let mut best = f64::INFINITY;
                for _ in 0..repeats.max(1) {
                    let start = Instant::now();
                    run(&sc, SolverKind::Local, opts(mode))?;
                    best = best.min(start.elapsed().as_secs_f64());
                }
                println!("{name:>10}: {best:.4} s (best of {})", repeats.max(1));
            }
            Ok(())
        }
        Command::Export { name } => {
            println!("{}", scenario_to_json(&scenario_document(&name)?));
            Ok(())
        }
        Command::List => {
            for n in SCENARIO_NAMES {
                println!("{n}");
            }
            Ok(())
        }
    }
}
