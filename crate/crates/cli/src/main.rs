mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hfconv::analysis::{compare_algorithms, lojasiewicz_probe, shift_sweep, summarize_shift_sweep};
use hfconv::hamiltonian::{fcidump, native};
use hfconv::solvers::{auto_shift, run, RunStatus, SolverConfig};

use input::{AlgorithmArg, ConventionArg, SystemSource};

#[derive(Parser)]
#[command(name = "hfconv", version, about = "Gradient, Roothaan and Level-Shifting Hartree-Fock solvers")]
struct Cli {
    /// Worker threads for sweeps and comparisons.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one system; writes trace.csv and summary.json.
    Run {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Level-Shifting over a grid of shifts; writes sweep.csv and sweep.json.
    SweepShift {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Comma-separated shifts.
        #[arg(long, value_delimiter = ',', required = true)]
        b_grid: Vec<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Runs several algorithms from the same start; writes comparison.csv.
    Compare {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, value_delimiter = ',', default_value = "roothaan,gradient-fixed")]
        algorithms: Vec<AlgorithmArg>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Łojasiewicz exponent from a tight run or an existing trace CSV;
    /// writes loja.json.
    ProbeLoja {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Trace CSV with `energy` and `grad_norm` columns instead of a run.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Reference energy; defaults to the final (or smallest) energy.
        #[arg(long, allow_hyphen_values = true)]
        e_inf: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// FCIDUMP to native JSON.
    Convert {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_enum, default_value = "rhf")]
        convention: ConventionArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SystemArgs {
    /// FCIDUMP file, or native JSON when the name ends in `.json`.
    #[arg(long, conflicts_with = "preset")]
    system: Option<PathBuf>,
    /// `hubbard-ring:L=6,t=1,U=4,N=6` or `random:n=8,N=3,scale=1,seed=7`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "roothaan")]
    algorithm: AlgorithmArg,
    /// Fixed gradient step; defaults to 1/alpha.
    #[arg(long)]
    t: Option<f64>,
    /// Level shift.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Start from a seeded random kick of the core guess instead of the
    /// core guess itself.
    #[arg(long)]
    seed: Option<u64>,
    /// Frobenius size of the random kick.
    #[arg(long, default_value_t = 1.0)]
    kick: f64,
    #[arg(long)]
    store_iterates: bool,
}

impl SolveArgs {
    fn config(&self, algorithm: AlgorithmArg, default_tol: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(algorithm.to_algorithm(self.t, self.b))
            .with_tol(self.tol.unwrap_or(default_tol))
            .with_max_iter(self.max_iter);
        cfg.record_matrices = self.store_iterates;
        cfg
    }
}

enum Failure {
    Input(String),
    Status(RunStatus),
}

impl From<hfconv::Error> for Failure {
    fn from(e: hfconv::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn exit_code(status: RunStatus) -> u8 {
    match status {
        RunStatus::Converged => 0,
        RunStatus::Oscillating => 2,
        RunStatus::MaxIterations => 3,
        RunStatus::WellPosednessFailure => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Status(status)) => ExitCode::from(exit_code(status)),
        Err(Failure::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn load(args: &SystemArgs) -> Result<hfconv::ElectronicSystem, Failure> {
    let source = SystemSource::from_args(args.system.as_deref(), args.preset.as_deref())?;
    Ok(source.load(args.convention)?)
}

fn prepare_out(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { system, solve, out } => {
            let sys = load(&system)?;
            prepare_out(&out)?;
            let d0 = input::initial_guess(&sys, solve.seed, solve.kick)?;
            let (shift, result) = if solve.algorithm == AlgorithmArg::AutoShift {
                let (b, r) = auto_shift(&sys, &d0, &solve.config(AlgorithmArg::Roothaan, 1e-8))?;
                (Some(b), r)
            } else {
                (None, run(&sys, &d0, &solve.config(solve.algorithm, 1e-8))?)
            };
            let cfg = solve.config(solve.algorithm, 1e-8);
            output::write_run(&out, &sys, &cfg, shift, &result)?;
            finish(result.status)
        }
        Command::SweepShift { system, solve, b_grid, out } => {
            let sys = load(&system)?;
            prepare_out(&out)?;
            let d0 = input::initial_guess(&sys, solve.seed, solve.kick)?;
            let mut grid = b_grid;
            grid.sort_by(f64::total_cmp);
            let points = shift_sweep(&sys, &d0, &grid, &solve.config(AlgorithmArg::LevelShifting, 1e-8));
            output::write_sweep_csv(&out, &points)?;
            let worst = points
                .iter()
                .map(|p| p.status)
                .find(|s| *s != Some(RunStatus::Converged));
            let study = summarize_shift_sweep(points);
            output::write_sweep_summary(&out, &study)?;
            match (worst, study) {
                (Some(Some(status)), _) => Err(Failure::Status(status)),
                (Some(None), _) => Err(Failure::Input("at least one shift failed to run".into())),
                (None, Err(e)) => Err(e.into()),
                (None, Ok(_)) => Ok(()),
            }
        }
        Command::Compare { system, solve, algorithms, out } => {
            let sys = load(&system)?;
            prepare_out(&out)?;
            let d0 = input::initial_guess(&sys, solve.seed, solve.kick)?;
            let mut configs = Vec::new();
            for alg in algorithms {
                if alg == AlgorithmArg::AutoShift {
                    return Err(Failure::Input("auto-shift cannot be compared; pick level-shifting with --b".into()));
                }
                let cfg = solve.config(alg, 1e-8);
                configs.push((cfg.algorithm.name(), cfg));
            }
            let rows = compare_algorithms(&sys, &d0, &configs);
            output::write_comparison(&out, &rows)?;
            match rows.iter().find(|r| r.status != Some(RunStatus::Converged)) {
                None => Ok(()),
                Some(row) => match row.status {
                    Some(status) => Err(Failure::Status(status)),
                    None => Err(Failure::Input(format!(
                        "{}: {}",
                        row.name,
                        row.error.clone().unwrap_or_default()
                    ))),
                },
            }
        }
        Command::ProbeLoja { system, solve, trace, e_inf, out } => {
            prepare_out(&out)?;
            let (energies, grads, e_inf, status) = match trace {
                Some(path) => {
                    let (e, g) = input::read_trace(&path)?;
                    (e, g, e_inf, RunStatus::Converged)
                }
                None => {
                    let sys = load(&system)?;
                    let d0 = input::initial_guess(&sys, solve.seed, solve.kick)?;
                    let r = run(&sys, &d0, &solve.config(solve.algorithm, 1e-12))?;
                    std::fs::write(out.join("trace.csv"), r.trace.to_csv())
                        .map_err(|e| Failure::Input(e.to_string()))?;
                    let reference = e_inf.or(Some(r.final_energy()));
                    (r.trace.energies(), r.trace.grad_norms(), reference, r.status)
                }
            };
            let fit = lojasiewicz_probe(&energies, &grads, e_inf)?;
            output::write_loja(&out, &fit)?;
            finish(status)
        }
        Command::Convert { system, convention, out } => {
            let sys = fcidump::read_fcidump(&system, convention.into())?;
            native::write(&sys, &out)?;
            Ok(())
        }
    }
}

fn finish(status: RunStatus) -> Result<(), Failure> {
    if status == RunStatus::Converged {
        Ok(())
    } else {
        Err(Failure::Status(status))
    }
}
