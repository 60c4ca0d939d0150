//! `hbctl`: config-driven kernels, simulations, tracking runs and the
//! acceptance suite.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{Error, Result};
use crate::io::{controller_fields, l_traces, observer_fields, write_kernel_dump, write_snapshot_csv, write_traces_csv};
use crate::kernels::transform::forward;
use crate::kernels::{picard_solve_controller, solve_observer_kernels, ControllerKernels, PicardReport};
use crate::planner::run_tracking;
use crate::sim::{run_closed_loop, run_observer, run_open_loop, run_target_system, FeedbackLaw, FieldState, Grid1D, ObserverMode, TimeSeries};
use crate::system::HyperbolicSystem;
use crate::verify::{parse_criterion, run_suite, CriterionOutcome, VerifySettings, CRITERIA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hbctl", version, about = "Backstepping kernels, simulations and verification for coupled hyperbolic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve controller and observer kernels and dump them.
    Kernels(CommonArgs),
    /// Run the scenario named in the config.
    Simulate(CommonArgs),
    /// Run the tracking scenario of the config.
    Track(CommonArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's `out`, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run twice and require byte-identical outputs.
    #[arg(long)]
    pub seed_check: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Resolutions come from `kernel.n` and `simulation.nx` (the coarse level).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed_check: bool,
    /// Criterion id or name; repeatable, comma lists allowed.
    #[arg(long, value_delimiter = ',')]
    pub criterion: Vec<String>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence(_) | Error::VolterraNonConvergence { .. } => EXIT_NON_CONVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Kernels(a) => with_seed_check(&a, |cfg, out| cmd_kernels(cfg, out)),
        Command::Simulate(a) => with_seed_check(&a, |cfg, out| cmd_simulate(cfg, out, None)),
        Command::Track(a) => with_seed_check(&a, |cfg, out| cmd_simulate(cfg, out, Some(Scenario::Tracking))),
        Command::Verify(a) => cmd_verify_args(&a),
    }
}

fn out_dir(given: &Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    given.clone().or_else(|| cfg.and_then(|c| c.out.as_ref().map(PathBuf::from))).unwrap_or_else(|| PathBuf::from("out"))
}

fn with_seed_check(args: &CommonArgs, f: impl Fn(&ExperimentConfig, &Path) -> Result<Vec<String>>) -> Result<i32> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let out = out_dir(&args.out, Some(&cfg));
    for line in f(&cfg, &out)? {
        println!("{line}");
    }
    if !args.seed_check {
        return Ok(EXIT_OK);
    }
    let probe = std::env::temp_dir().join(format!("hbctl-seed-check-{}", std::process::id()));
    let _ = fs::remove_dir_all(&probe);
    f(&cfg, &probe)?;
    let diff = compare_dirs(&out, &probe)?;
    let _ = fs::remove_dir_all(&probe);
    match diff {
        None => {
            println!("seed-check: rerun produced byte-identical outputs");
            Ok(EXIT_OK)
        }
        Some(file) => {
            println!("seed-check: rerun differs in {file}");
            Ok(EXIT_ACCEPTANCE)
        }
    }
}

fn files_under(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// First file that differs between two output trees, if any.
pub fn compare_dirs(a: &Path, b: &Path) -> Result<Option<String>> {
    let (fa, fb) = (files_under(a)?, files_under(b)?);
    if fa != fb {
        return Ok(Some("the file list".into()));
    }
    for f in fa {
        if fs::read(a.join(&f))? != fs::read(b.join(&f))? {
            return Ok(Some(f.display().to_string()));
        }
    }
    Ok(None)
}

fn validated_system(cfg: &ExperimentConfig) -> Result<HyperbolicSystem> {
    let sys = cfg.system()?;
    sys.ensure_valid()?;
    Ok(sys)
}

fn controller(cfg: &ExperimentConfig, sys: &HyperbolicSystem) -> Result<ControllerKernels> {
    let grid = crate::grid::TriangularGrid::new(cfg.kernel.n)?;
    picard_solve_controller(sys, grid, cfg.artificial(sys)?, cfg.picard_options())
}

fn write_report_csv(path: &Path, hash: &str, report: &PicardReport) -> Result<()> {
    let mut text = format!("# config-hash {hash}\niteration,increment\n");
    for (q, inc) in report.increments.iter().enumerate() {
        text += &format!("{},{:.10e}\n", q + 1, inc);
    }
    fs::write(path, text)?;
    Ok(())
}

/// Solves and dumps controller and observer kernels.
pub fn cmd_kernels(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    let sys = validated_system(cfg)?;
    fs::create_dir_all(out)?;
    let ctrl = controller(cfg, &sys)?;
    let obs = solve_observer_kernels(&sys, ctrl.grid, cfg.picard_options())?;
    let hash = &cfg.hash;
    write_kernel_dump(&out.join("controller_kernels.txt"), hash, &controller_fields(&ctrl))?;
    write_kernel_dump(&out.join("observer_kernels.txt"), hash, &observer_fields(&obs))?;
    write_traces_csv(&out.join("l_traces.csv"), hash, &l_traces(&ctrl))?;
    write_report_csv(&out.join("picard_controller.csv"), hash, &ctrl.report)?;
    write_report_csv(&out.join("picard_observer.csv"), hash, &obs.report)?;
    Ok(vec![
        format!("config-hash {hash}"),
        format!(
            "controller: {} iterations, final increment {:.3e}, max|K| {:.4e}, max|L| {:.4e}",
            ctrl.report.iterations,
            ctrl.report.residual,
            ctrl.k.max_abs(),
            ctrl.l.max_abs()
        ),
        format!(
            "observer: {} iterations, final increment {:.3e}, max|M| {:.4e}, max|N| {:.4e}",
            obs.report.iterations,
            obs.report.residual,
            obs.m.max_abs(),
            obs.n.max_abs()
        ),
        format!("wrote kernel dumps to {}", out.display()),
    ])
}

/// Runs the config's scenario (or `force`) and writes the time series.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path, force: Option<Scenario>) -> Result<Vec<String>> {
    let sys = validated_system(cfg)?;
    let scenario = force.unwrap_or(cfg.scenario);
    let run_cfg = cfg.run_config(&sys)?;
    let (mut truth, estimate) = cfg.initial_states()?;
    let h = sys.horizons()?;
    let mut lines = vec![
        format!("config-hash {}", cfg.hash),
        format!("scenario {scenario:?}"),
        match h.t_f {
            Some(t_f) => format!("t_F = {t_f:.6}, t_M = {:.6}", h.t_m),
            None => format!("t_F undefined (n = 0), t_M = {:.6}", h.t_m),
        },
    ];
    let needs_kernels = scenario != Scenario::OpenLoop;
    let ctrl = if needs_kernels { Some(controller(cfg, &sys)?) } else { None };
    if cfg.simulation.compatible {
        if let Some(k) = &ctrl {
            truth = FeedbackLaw::new(k, &sys, Grid1D::new(truth.nx())?)?.make_compatible(&sys, &truth)?;
        }
    }

    let series: TimeSeries = match scenario {
        Scenario::OpenLoop => run_open_loop(&sys, truth, run_cfg)?,
        Scenario::StateFeedback => run_closed_loop(&sys, ctrl.as_ref().expect("kernels"), truth, run_cfg)?,
        Scenario::Observer | Scenario::OutputFeedback => {
            let k = ctrl.as_ref().expect("kernels");
            let obs = solve_observer_kernels(&sys, k.grid, cfg.picard_options())?;
            let mode = if scenario == Scenario::Observer { ObserverMode::StateFeedbackPlant } else { ObserverMode::OutputFeedback };
            run_observer(&sys, &obs, k, &truth, &estimate, mode, run_cfg)?
        }
        Scenario::TargetSystem => {
            let k = ctrl.as_ref().expect("kernels");
            let (alpha, beta) = forward(k, &truth.u, &truth.v)?;
            run_target_system(&sys, k, FieldState { t: 0.0, u: alpha, v: beta }, None, run_cfg)?
        }
        Scenario::Tracking => {
            let phi = cfg.reference.as_ref().ok_or_else(|| Error::Config("tracking needs a [reference] block".into()))?;
            run_tracking(&sys, ctrl.as_ref().expect("kernels"), phi, truth, run_cfg)?
        }
    };

    fs::create_dir_all(out)?;
    let header = vec![format!("config-hash {}", cfg.hash), format!("scenario {scenario:?}")];
    series.write_csv(&out.join("timeseries.csv"), &header)?;
    if !series.snapshots.is_empty() {
        let dir = out.join("snapshots");
        fs::create_dir_all(&dir)?;
        for (k, s) in series.snapshots.iter().enumerate() {
            write_snapshot_csv(&dir.join(format!("snapshot_{k:04}.csv")), &cfg.hash, s)?;
        }
    }
    if let Some(fin) = &series.final_state {
        write_snapshot_csv(&out.join("final_state.csv"), &cfg.hash, fin)?;
    }

    let t_end = run_cfg.t_end;
    for col in series.columns.iter().filter(|c| c.starts_with("norm_L2") || c.starts_with("err_L2")) {
        let first = series.rows[0][series.columns.iter().position(|c| c == col).expect("column")];
        let last = series.last(col);
        let peak = series.max_over(col, 0.0, t_end);
        lines.push(format!(
            "{col}: initial {first:.4e}, final {last:.4e} at t = {t_end:.4}, final/initial {:.4e}, final/running-max {:.4e}",
            last / first,
            last / peak
        ));
    }
    if scenario == Scenario::Tracking {
        let t_m = h.t_m;
        let from = (1.1 * t_m).min(t_end);
        for j in 1..=sys.m() {
            lines.push(format!("track_err{j}: RMS over [{from:.3}, {t_end:.3}] {:.4e}", series.rms_over(&format!("track_err{j}"), from, t_end)));
        }
    }
    lines.push(format!("wrote {} rows to {}", series.len(), out.join("timeseries.csv").display()));
    Ok(lines)
}

fn settings_from(cfg: Option<&ExperimentConfig>) -> VerifySettings {
    match cfg {
        None => VerifySettings::default(),
        Some(c) => VerifySettings {
            n_coarse: c.kernel.n,
            n_fine: 2 * c.kernel.n,
            nx_coarse: c.simulation.nx,
            nx_fine: 2 * c.simulation.nx,
            picard: c.picard_options(),
        },
    }
}

/// Runs the selected criteria (all when `only` is empty).
pub fn cmd_verify(cfg: Option<&ExperimentConfig>, only: &[u8]) -> Vec<CriterionOutcome> {
    run_suite(settings_from(cfg), only)
}

fn cmd_verify_args(a: &VerifyArgs) -> Result<i32> {
    let cfg = a.config.as_ref().map(|p| ExperimentConfig::load(p)).transpose()?;
    let mut only = Vec::new();
    for c in &a.criterion {
        let id = parse_criterion(c).ok_or_else(|| {
            let known: Vec<String> = CRITERIA.iter().map(|(i, n)| format!("{i}={n}")).collect();
            Error::Config(format!("unknown criterion `{c}` (known: {})", known.join(", ")))
        })?;
        only.push(id);
    }
    let outcomes = cmd_verify(cfg.as_ref(), &only);
    let mut text = String::new();
    if let Some(c) = &cfg {
        text += &format!("# config-hash {}\n", c.hash);
    }
    for o in &outcomes {
        text += &o.machine_line();
        text.push('\n');
    }
    for o in &outcomes {
        text += &o.to_string();
        text.push('\n');
    }
    print!("{text}");
    if a.out.is_some() || cfg.as_ref().is_some_and(|c| c.out.is_some()) {
        let out = out_dir(&a.out, cfg.as_ref());
        fs::create_dir_all(&out)?;
        fs::write(out.join("verify.txt"), &text)?;
    }
    let mut code = if outcomes.iter().all(|o| o.pass) { EXIT_OK } else { EXIT_ACCEPTANCE };
    if a.seed_check {
        let again = cmd_verify(cfg.as_ref(), &only);
        let same = outcomes.iter().zip(&again).all(|(p, q)| p.machine_line() == q.machine_line());
        println!("seed-check: rerun {}", if same { "reproduced every measured value" } else { "changed a measured value" });
        if !same {
            code = EXIT_ACCEPTANCE;
        }
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["hbctl", "verify", "--criterion", "1,picard-convergence", "--criterion", "4"]).unwrap();
        match cli.command {
            Command::Verify(v) => assert_eq!(v.criterion, vec!["1", "picard-convergence", "4"]),
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from(["hbctl", "kernels", "--config", "a.toml", "--seed-check"]).unwrap();
        assert!(matches!(cli.command, Command::Kernels(CommonArgs { seed_check: true, .. })));
        assert!(Cli::try_parse_from(["hbctl", "simulate"]).is_err());
    }

    #[test]
    fn exit_codes() {
        let report = PicardReport { iterations: 3, increments: vec![1.0; 3], converged: false, residual: 1.0 };
        assert_eq!(exit_code(&Error::NonConvergence(Box::new(report))), EXIT_NON_CONVERGENCE);
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_VALIDATION);
        assert_eq!(run(["hbctl", "verify", "--criterion", "42"]), EXIT_VALIDATION);
    }
}
