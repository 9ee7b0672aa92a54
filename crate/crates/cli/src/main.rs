mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use cavsqueeze::bloch_oracle::{free_space_variance, BlochParams};
use cavsqueeze::homodyne::{min_lo_intensity, HomodynePrediction};
use cavsqueeze::steady_state::SteadyStateSolver;
use cavsqueeze::sweep_opt::{
    dephasing_threshold, optimize_axis, run_sweep, DetuningMode, OptimizeError, PointEvaluator, SteadyStateEvaluator,
    SweepError, SweepSpec, ThresholdError, Truncation,
};
use clap::{Parser, Subcommand};

use config::{CommandConfig, CommandKind, ConfigError, Preset, RunConfig};
use output::{observable_row, Cell, Format, Report, Table, J, OBSERVABLE_COLUMNS};

/// Steady states and fluorescence squeezing of a driven atom in a lossy
/// cavity.
#[derive(Debug, Parser)]
#[command(name = "cavsqueeze", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled parameter set, applied before --config.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Override a configuration key, e.g. `--set delta_a=-19` or
    /// `--set sweep.step=0.05`. Repeatable; applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Observables at one parameter point.
    Point,
    /// Observables along one parameter axis (`sweep` section).
    Sweep,
    /// Minimize the variance along one axis (`optimize` section).
    Optimize,
    /// Dephasing rate at which the variance crosses a target (`threshold` section).
    Threshold,
    /// Homodyne correlation signal (`homodyne` section).
    Homodyne,
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Point => CommandKind::Point,
            Command::Sweep => CommandKind::Sweep,
            Command::Optimize => CommandKind::Optimize,
            Command::Threshold => CommandKind::Threshold,
            Command::Homodyne => CommandKind::Homodyne,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Config(ConfigError),
    Solver(String),
    NotConverged(String),
    Bracket(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::NotConverged(_) => 4,
            Failure::Bracket(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) => format!("i/o error: {m}"),
            Failure::Config(e) => e.to_string(),
            Failure::Solver(m) => format!("solver failure: {m}"),
            Failure::NotConverged(m) => format!("not converged: {m}"),
            Failure::Bracket(m) => format!("bracket error: {m}"),
        }
    }
}

impl From<OptimizeError> for Failure {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Solve(_) => Failure::Solver(e.to_string()),
            _ => Failure::Bracket(e.to_string()),
        }
    }
}

impl From<ThresholdError> for Failure {
    fn from(e: ThresholdError) -> Self {
        match e {
            ThresholdError::Optimize(o) => o.into(),
            ThresholdError::Solve(_) => Failure::Solver(e.to_string()),
            _ => Failure::Bracket(e.to_string()),
        }
    }
}

/// Output plus an optional non-fatal problem to report after writing it.
struct Outcome {
    report: Report,
    warning: Option<Failure>,
}

fn evaluator(cfg: &RunConfig, truncation: Truncation) -> SteadyStateEvaluator {
    SteadyStateEvaluator { solver: SteadyStateSolver::new(cfg.solver), chi_sq: cfg.chi_sq, truncation }
}

fn free_space(params: &cavsqueeze::SystemParams) -> Option<f64> {
    free_space_variance(&BlochParams::from_system(params)).ok()
}

fn run(cfg: &RunConfig, command: &'static str) -> Result<Outcome, Failure> {
    let mut records = Table::new(&OBSERVABLE_COLUMNS);
    let report = |records, result, trace| Report { command, config: J::from(&cfg.document), records, result, trace };
    match &cfg.command {
        CommandConfig::Point => {
            let p = evaluator(cfg, Truncation::Converge)
                .evaluate(&cfg.params)
                .map_err(|e| Failure::Solver(e.to_string()))?;
            records.push(observable_row(None, Some(&p), free_space(&cfg.params)));
            let warning = (!p.converged).then(|| Failure::NotConverged(format!("residual {:.3e}", p.residual)));
            Ok(Outcome { report: report(records, None, None), warning })
        }
        CommandConfig::Sweep(s) => {
            let spec =
                SweepSpec { include_free_space: s.free_space, ..SweepSpec::new(cfg.params, s.axis, s.values.clone()) };
            let sweep = run_sweep(&evaluator(cfg, s.truncation), &spec).map_err(|e| match e {
                SweepError::AllFailed { .. } => Failure::Solver(e.to_string()),
                _ => Failure::Config(ConfigError { path: "sweep.values".into(), message: e.to_string() }),
            })?;
            for row in &sweep.rows {
                if let Err(e) = &row.outcome {
                    eprintln!("warning: {} = {}: {e}", s.axis, row.axis_value);
                }
                records.push(observable_row(Some(row.axis_value), row.outcome.as_ref().ok(), row.free_space_variance));
            }
            let unconverged = sweep.successes().filter(|(_, p)| !p.converged).count();
            let warning = if sweep.failures() > 0 {
                Some(Failure::Solver(format!("{} of {} points failed", sweep.failures(), sweep.rows.len())))
            } else if unconverged > 0 {
                Some(Failure::NotConverged(format!("{unconverged} of {} points", sweep.rows.len())))
            } else {
                None
            };
            Ok(Outcome { report: report(records, None, None), warning })
        }
        CommandConfig::Optimize(o) => {
            let opt =
                optimize_axis(&evaluator(cfg, Truncation::Converge), &cfg.params, o.axis, o.bracket, o.grid, o.tol)?;
            let point = o.axis.set(&cfg.params, opt.x);
            records.push(observable_row(Some(opt.x), Some(&opt.point), free_space(&point)));
            let mut trace = Table::new(&["axis_value", "variance"]);
            for &(x, v) in &opt.trace {
                trace.push(vec![Cell::Num(x), Cell::Num(v)]);
            }
            let result = vec![
                ("x_star", Cell::Num(opt.x)),
                ("variance", Cell::Num(opt.point.observables.variance)),
                ("at_boundary", Cell::Bool(opt.at_boundary)),
            ];
            let warning = if opt.at_boundary {
                eprintln!("warning: minimum at the bracket boundary {} = {}", o.axis, opt.x);
                None
            } else {
                (!opt.point.converged).then(|| Failure::NotConverged(format!("at {} = {}", o.axis, opt.x)))
            };
            Ok(Outcome { report: report(records, Some(result), Some(trace)), warning })
        }
        CommandConfig::Threshold(t) => {
            let th = dephasing_threshold(
                &evaluator(cfg, Truncation::Converge),
                &cfg.params,
                t.target,
                t.bracket,
                t.mode,
                t.rel_tol,
            )?;
            let mut trace = Table::new(&["gamma_d", "delta_a", "variance"]);
            for s in &th.trace {
                trace.push(vec![Cell::Num(s.gamma_d), Cell::Num(s.delta_a), Cell::Num(s.variance)]);
            }
            let reoptimized = matches!(t.mode, DetuningMode::Reoptimize { .. });
            let mut records = Table::new(&["target", "gamma_d", "gamma_d_over_gamma", "reoptimized_delta_a"]);
            records.push(vec![
                Cell::Num(t.target),
                Cell::Num(th.gamma_d),
                Cell::Num(th.ratio),
                Cell::Bool(reoptimized),
            ]);
            Ok(Outcome { report: report(records, None, Some(trace)), warning: None })
        }
        CommandConfig::Homodyne(h) => {
            let variance = match h.variance {
                Some(v) => v,
                None => {
                    let p = evaluator(cfg, Truncation::Converge)
                        .evaluate(&cfg.params)
                        .map_err(|e| Failure::Solver(e.to_string()))?;
                    p.observables.variance
                }
            };
            let pred = HomodynePrediction::new(h.i_fl, h.i_lo, variance)
                .map_err(|e| Failure::Config(ConfigError { path: "homodyne".into(), message: e.to_string() }))?;
            let mut records =
                Table::new(&["i_fl", "i_lo", "variance", "delta_g22", "squeezing_detected", "min_lo_intensity"]);
            records.push(vec![
                Cell::Num(pred.i_fl),
                Cell::Num(pred.i_lo),
                Cell::Num(pred.variance),
                Cell::Num(pred.delta_g22),
                Cell::Bool(pred.squeezing_detected()),
                min_lo_intensity(pred.i_fl, pred.variance).ok().into(),
            ]);
            Ok(Outcome { report: report(records, None, None), warning: None })
        }
    }
}

fn command_name(kind: CommandKind) -> &'static str {
    match kind {
        CommandKind::Point => "point",
        CommandKind::Sweep => "sweep",
        CommandKind::Optimize => "optimize",
        CommandKind::Threshold => "threshold",
        CommandKind::Homodyne => "homodyne",
    }
}

fn execute(cli: &Cli) -> Result<Option<Failure>, Failure> {
    let kind = cli.command.kind();
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::Config(ConfigError { path: String::new(), message: format!("{}: {e}", path.display()) })
            })?;
            Some((path.display().to_string(), text))
        }
        None => None,
    };
    if cli.preset.is_none() && file.is_none() && kind != CommandKind::Homodyne && cli.overrides.is_empty() {
        return Err(Failure::Config(ConfigError {
            path: String::new(),
            message: "no parameters given; use --preset, --config or --set".into(),
        }));
    }
    let cfg = config::build(cli.preset, file.as_ref().map(|(o, t)| (o.as_str(), t.as_str())), &cli.overrides, kind)
        .map_err(Failure::Config)?;
    let outcome = run(&cfg, command_name(kind))?;
    let text = outcome.report.render(cli.format);
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(outcome.warning)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(f)) | Err(f) => {
            eprintln!("cavsqueeze: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
