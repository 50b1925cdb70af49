use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blackstart::analysis::{
    gsus_table, restored_power_series, solve, stats, sweep, Backend, SweepAxis, SweepSpec,
};
use blackstart::case::{load_case_file, GridCase};
use blackstart::milp::encode;
use blackstart::schedule::Schedule;
use blackstart::solver::{export_mps, EnumLimits, SolveStatus, SolverCommand, SOLVER_CMD_ENV};
use blackstart::validate::validate;
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_LOAD: u8 = 3;
const EXIT_SOLVE: u8 = 4;
const EXIT_INVALID: u8 = 5;
const EXIT_IO: u8 = 6;

#[derive(Parser)]
#[command(name = "blackstart", version, about = "Black-start generator startup sequencing")]
struct Cli {
    /// Case document (JSON).
    #[arg(long, global = true)]
    case: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "external")]
    backend: BackendKind,
    /// Solver command template with {mps} and {sol}; defaults to $BLACKSTART_SOLVER_CMD.
    #[arg(long, global = true)]
    solver_cmd: Option<String>,
    /// Concurrent scenarios for sweeps, threads for enumeration.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Enum,
    External,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a case and write schedule, validation report, GSUS table and restored power.
    Run,
    /// Solve one scenario per axis value and write the sweep table.
    Sweep {
        /// fc_capacity, battery_capacity, battery_soc or resource_location.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Check a schedule against the case.
    Validate {
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Write the case's model as free-format MPS.
    ExportMps {
        /// Output file; defaults to <out-dir>/model.mps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print GSUS table, restored power and statistics for a schedule.
    Report {
        #[arg(long)]
        schedule: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn load(cli: &Cli) -> Result<GridCase, Failure> {
    let path = cli.case.as_ref().ok_or_else(|| fail(EXIT_LOAD, "--case is required"))?;
    load_case_file(path).map_err(|e| fail(EXIT_LOAD, format!("{}: {e}", path.display())))
}

fn backend(cli: &Cli) -> Result<Backend, Failure> {
    match cli.backend {
        BackendKind::Enum => Ok(Backend::Enumeration(EnumLimits {
            workers: Some(cli.workers),
            ..EnumLimits::default()
        })),
        BackendKind::External => {
            let command = match &cli.solver_cmd {
                Some(t) => SolverCommand::parse(t),
                None => SolverCommand::from_env(),
            }
            .map_err(|e| fail(EXIT_SOLVE, format!("{e} (pass --solver-cmd or set {SOLVER_CMD_ENV})")))?;
            Ok(Backend::External(command))
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| fail(EXIT_IO, format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn read_schedule(path: &Path) -> Result<Schedule, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    Schedule::from_json(&text).map_err(|e| fail(EXIT_LOAD, format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Outcome {
    let case = load(cli)?;
    let result = solve(&case, &backend(cli)?).map_err(|e| fail(EXIT_SOLVE, e.to_string()))?;
    if let Some(report) = result.report.as_ref().filter(|r| !r.pass) {
        write(&cli.out_dir, "validation.json", &report.to_json())?;
        return Err(fail(EXIT_INVALID, format!("solution fails validation: {:?}", report.tags())));
    }
    if !result.status.has_solution() {
        let reason = result.message.unwrap_or_default();
        return Err(fail(EXIT_SOLVE, format!("status {:?}: {reason}", result.status)));
    }
    let schedule = result.schedule.expect("solution carries a schedule");
    let report = validate(&case, &schedule).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
    if !report.pass {
        return Err(fail(EXIT_INVALID, format!("solution fails validation: {:?}", report.tags())));
    }
    let table = gsus_table(&case, &schedule);
    write(&cli.out_dir, "schedule.json", &schedule.to_json())?;
    write(&cli.out_dir, "validation.json", &report.to_json())?;
    write(&cli.out_dir, "gsus.csv", &table.to_csv())?;
    write(&cli.out_dir, "restored_power.csv", &restored_power_series(&case, &schedule).to_csv())?;
    let status = if result.status == SolveStatus::Optimal { "optimal" } else { "feasible" };
    println!("status {status}, objective {:.6}", result.objective.unwrap_or(f64::NAN));
    print!("{}", table.to_csv());
    Ok(())
}

fn run_sweep(cli: &Cli, axis: &str, values: &[String]) -> Outcome {
    let case = load(cli)?;
    let axis = SweepAxis::parse(axis).ok_or_else(|| fail(2, format!("unknown axis `{axis}`")))?;
    let spec = SweepSpec {
        axis,
        values: values.to_vec(),
        backend: backend(cli)?,
    };
    let table = sweep(&case, &spec, cli.workers).map_err(|e| fail(EXIT_LOAD, e.to_string()))?;
    let csv = table.to_csv();
    write(&cli.out_dir, &format!("sweep_{}.csv", axis.name()), &csv)?;
    print!("{csv}");
    if table.scenarios.iter().any(|s| s.table.is_none()) {
        return Err(fail(EXIT_SOLVE, "some scenarios failed; see the status row"));
    }
    Ok(())
}

fn run_validate(cli: &Cli, schedule: &Path) -> Outcome {
    let case = load(cli)?;
    let schedule = read_schedule(schedule)?;
    let report = validate(&case, &schedule).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
    write(&cli.out_dir, "validation.json", &report.to_json())?;
    for v in &report.violations {
        println!("{} {} step {:?}: {}", v.tag, v.entity, v.step, v.message);
    }
    if report.pass {
        println!("pass");
        Ok(())
    } else {
        Err(fail(EXIT_INVALID, format!("{} violations", report.violations.len())))
    }
}

fn run_export(cli: &Cli, out: Option<&Path>) -> Outcome {
    let case = load(cli)?;
    let model = encode(&case).map_err(|e| fail(EXIT_LOAD, e.to_string()))?;
    let text = export_mps(&model);
    let path = match out {
        Some(p) => {
            fs::write(p, &text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", p.display())))?;
            p.to_path_buf()
        }
        None => write(&cli.out_dir, "model.mps", &text)?,
    };
    println!(
        "{}: {} variables, {} constraints",
        path.display(),
        model.variables.len(),
        model.constraints.len()
    );
    Ok(())
}

fn run_report(cli: &Cli, schedule: &Path) -> Outcome {
    let case = load(cli)?;
    let schedule = read_schedule(schedule)?;
    let report = validate(&case, &schedule).map_err(|e| fail(EXIT_INVALID, e.to_string()))?;
    if !report.pass {
        return Err(fail(EXIT_INVALID, format!("schedule fails validation: {:?}", report.tags())));
    }
    print!("{}", gsus_table(&case, &schedule).to_csv());
    println!();
    print!("{}", restored_power_series(&case, &schedule).to_csv());
    println!();
    let s = stats(&case, &schedule);
    println!("{}", serde_json::to_string_pretty(&s).expect("stats serialize"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run => run(&cli),
        Command::Sweep { axis, values } => run_sweep(&cli, axis, values),
        Command::Validate { schedule } => run_validate(&cli, schedule),
        Command::ExportMps { out } => run_export(&cli, out.as_deref()),
        Command::Report { schedule } => run_report(&cli, schedule),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
