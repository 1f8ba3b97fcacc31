//! `coilbed` — run the coil design, field-map, identification and
//! closed-loop step experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 runtime or validation
//! failure.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coilbed::coilopt::{self, write_profile_csv};
use coilbed::control::{check_convergence_condition, write_diagnostics_csv, Method, MethodParams};
use coilbed::experiments::{
    plant_log, run_step_response, run_sysid, sysid_diagnostics, write_mse_curves_csv, write_step_metrics_csv,
    write_sysid_metrics_csv, write_trace_csv,
};
use coilbed::magnetics::{field_map, write_field_map_csv, HelmholtzPair};
use coilbed::plant::write_plant_log_csv;
use coilbed::presets;

use config::{GridPreset, Loaded, ParamPreset, ProfileKind};

#[derive(Debug, Parser)]
#[command(name = "coilbed", version, about = "Square Helmholtz coil testbed simulator")]
struct Cli {
    /// Scenario config (TOML). Without one the shipped presets are used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root directory for all written files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parse and validate the config and arguments, then stop.
    #[arg(long, global = true)]
    validate_only: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal spacing for a coil side length.
    Optimize(OptimizeArgs),
    /// Field and uniformity over a grid → field_map.csv.
    FieldMap(FieldMapArgs),
    /// Identification learning curves → sysid_metrics.csv, sysid_mse_curves.csv.
    Sysid(SysIdArgs),
    /// Closed-loop step responses → step_metrics.csv, trace_*.csv, plant_log_*.csv.
    Step(StepArgs),
    /// Step-size bounds of the convex controller.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Coil side length, mm (default: config `[coil] side_mm`, else the testbed).
    #[arg(long)]
    side_mm: Option<f64>,
    /// Also write uniformity_profile.csv along +x on the mid-plane.
    #[arg(long)]
    profile_csv: bool,
    /// Profile extent in units of the spacing.
    #[arg(long, default_value_t = 0.7)]
    profile_max_over_d: f64,
    #[arg(long, default_value_t = 71)]
    profile_points: usize,
}

#[derive(Debug, Args)]
struct FieldMapArgs {
    /// Built-in grid; overrides `[field_map]` in the config.
    #[arg(long, value_enum)]
    grid: Option<GridPreset>,
}

#[derive(Debug, Args)]
struct SysIdArgs {
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, value_enum)]
    preset: Option<ParamPreset>,
    /// Repeatable; default all four methods.
    #[arg(long)]
    method: Vec<Method>,
    #[arg(long)]
    trials: Option<usize>,
    /// Write diagnostics_<method>.csv for trial 0.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Debug, Args)]
struct StepArgs {
    /// Default: config `[step] profile`, else both shipped step profiles.
    #[arg(long, value_enum)]
    preset: Option<ProfileKind>,
    /// Repeatable; default all four methods.
    #[arg(long)]
    method: Vec<Method>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long, value_enum)]
    preset: Option<ParamPreset>,
    /// Multiplies controller-1 β before checking.
    #[arg(long, default_value_t = 1.0)]
    beta_scale: f64,
    /// Exit 2 when a bound is violated.
    #[arg(long)]
    strict: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let loaded = match &cli.config {
        Some(p) => config::load(p)?,
        None => Loaded::default(),
    };
    let seed = loaded.seed(cli.seed);
    let out = Output { dir: loaded.out_dir(cli.out_dir.as_deref()), dry: cli.validate_only };
    match &cli.command {
        Command::Optimize(a) => optimize(&loaded, a, &out),
        Command::FieldMap(a) => field_map_cmd(&loaded, a, &out),
        Command::Sysid(a) => sysid(&loaded, a, seed, &out),
        Command::Step(a) => step(&loaded, a, seed, &out),
        Command::Check(a) => check(&loaded, a, seed, cli.validate_only),
    }
}

struct Output {
    dir: PathBuf,
    dry: bool,
}

impl Output {
    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let result = fs::create_dir_all(&self.dir).and_then(|()| {
            let mut w = BufWriter::new(File::create(&path)?);
            f(&mut w)?;
            w.flush()
        });
        result.map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn optimize(loaded: &Loaded, a: &OptimizeArgs, out: &Output) -> Result<(), Failure> {
    let side_mm = a.side_mm.or(loaded.config.coil.side_mm).unwrap_or(presets::TESTBED_PAIR.side * 1000.0);
    if !(side_mm > 0.0 && side_mm.is_finite()) {
        return Err(Failure::Usage(format!("--side-mm must be positive and finite, got {side_mm}")));
    }
    if !(a.profile_max_over_d > 0.0 && a.profile_points >= 2) {
        return Err(Failure::Usage("profile needs a positive extent and at least 2 points".into()));
    }
    if out.dry {
        return Ok(());
    }
    let root = coilopt::solve_optimal_ratio().map_err(runtime)?;
    let spacing = side_mm / root.n;
    let base = loaded.pair()?;
    let pair = HelmholtzPair { side: side_mm / 1000.0, spacing: spacing / 1000.0, ..base };
    let d2_closed = coilopt::second_derivative_center(&pair);
    let center = coilbed::magnetics::onaxis_field(&pair, 0.0);
    println!("optimal ratio n*      {:.6}", root.n);
    println!("polynomial residual   {:.3e}", root.residual);
    println!("bisection iterations  {}", root.iterations);
    println!("side                  {side_mm} mm");
    println!("spacing               {spacing:.4} mm");
    println!("d2bz/dz2 at centre    {d2_closed:.3e} T/m^2");
    println!("centre field          {:.3} uT ({} turns, {} A)", center * 1e6, pair.turns, pair.current);
    for pct in [1.0, 5.0] {
        let r = coilopt::uniform_region(&pair, pct, pair.spacing * 1e-3).map_err(runtime)?;
        println!("{pct}% region +x/d      {:.3}", r.extent_x_over_d);
    }
    if a.profile_csv {
        let rows = coilopt::uniformity_profile(&pair, a.profile_max_over_d, a.profile_points).map_err(runtime)?;
        out.write("uniformity_profile.csv", |w| write_profile_csv(w, &rows))?;
    }
    Ok(())
}

fn field_map_cmd(loaded: &Loaded, a: &FieldMapArgs, out: &Output) -> Result<(), Failure> {
    let pair = loaded.pair()?;
    let grid = match a.grid {
        Some(g) => config::grid_preset(g, &pair),
        None => loaded.grid(&pair)?,
    };
    if out.dry {
        return Ok(());
    }
    let mode = loaded.uniformity_mode();
    let mut samples = field_map(&pair, &grid).map_err(runtime)?;
    if mode != coilbed::magnetics::UniformityMode::ZComponent {
        for s in &mut samples {
            s.uniformity_pct = coilbed::magnetics::uniformity_with(&pair, s.point, mode).map_err(runtime)?;
        }
    }
    let center = coilbed::magnetics::pair_field(&pair, coilbed::Point::new(0.0, 0.0, 0.0)).map_err(runtime)?;
    println!("centre |bz| {:.3} uT over {} grid points", center.bz.abs() * 1e6, samples.len());
    out.write("field_map.csv", |w| write_field_map_csv(w, &samples))
}

fn sysid(loaded: &Loaded, a: &SysIdArgs, seed: Option<u64>, out: &Output) -> Result<(), Failure> {
    let snr = loaded.sysid_snr(a.snr_db);
    let mut scn = loaded.sysid_scenario(snr, seed)?;
    if let Some(t) = a.trials {
        scn.trials = t;
        scn.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let preset = loaded.snr_preset(a.preset, snr);
    let methods = loaded.methods(&a.method);
    let params: Vec<(Method, MethodParams)> =
        methods.iter().map(|&m| (m, loaded.method_params(m, presets::sysid_params(m, preset)))).collect();
    for (m, p) in &params {
        p.validate().map_err(|e| Failure::Usage(format!("[controller.{m}] {e}")))?;
    }
    if out.dry {
        return Ok(());
    }

    let mut rows = Vec::with_capacity(params.len());
    for (m, p) in &params {
        let r = run_sysid(&scn, p).map_err(runtime)?;
        println!(
            "{:<7} iters {:>6}  final mse {:.4e} ± {:.1e}  reconverge {:>6}",
            m.name(),
            r.iters_to_converge.map_or("-".into(), |v| v.to_string()),
            r.final_mse,
            r.final_mse_stderr,
            r.reconverge_iters.map_or("-".into(), |v| v.to_string()),
        );
        rows.push((*m, r));
    }
    out.write("sysid_metrics.csv", |w| write_sysid_metrics_csv(w, snr, &rows))?;
    out.write("sysid_mse_curves.csv", |w| write_mse_curves_csv(w, &rows))?;
    if a.diagnostics || loaded.diagnostics() {
        for (m, p) in &params {
            let diag = sysid_diagnostics(&scn, p, 0).map_err(runtime)?;
            out.write(&format!("diagnostics_{m}.csv"), |w| write_diagnostics_csv(w, &diag))?;
        }
    }
    Ok(())
}

fn step(loaded: &Loaded, a: &StepArgs, seed: Option<u64>, out: &Output) -> Result<(), Failure> {
    let profiles = loaded.step_profiles(a.preset)?;
    let methods = loaded.methods(&a.method);
    let mut scenarios = Vec::new();
    for (name, profile) in &profiles {
        for &m in &methods {
            let mut scn = loaded.step_scenario(profile.clone(), m, seed)?;
            if let Some(t) = a.trials {
                scn.trials = t;
                scn.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            }
            scenarios.push((name.clone(), m, scn));
        }
    }
    if out.dry {
        return Ok(());
    }

    let mut rows = Vec::with_capacity(scenarios.len());
    for (name, m, scn) in &scenarios {
        let run = run_step_response(scn).map_err(runtime)?;
        let r = &run.metrics;
        println!(
            "{name:<12} {:<7} reach {:>7}  mean {:>10.1} nT  rmse {:>7.1} nT  span {:>7.1} nT",
            m.name(),
            r.reach_target_time_s.map_or("-".into(), |v| format!("{v:.3}s")),
            r.mean_steady_nt,
            r.rmse_steady,
            r.fluct_span_nt(),
        );
        for w in &run.warnings {
            eprintln!("warning: {name}/{m}: {w}");
        }
        out.write(&format!("trace_{name}_{m}.csv"), |w| write_trace_csv(w, &run.trace))?;
        out.write(&format!("plant_log_{name}_{m}.csv"), |w| write_plant_log_csv(w, &plant_log(&run.trace)))?;
        rows.push((*m, name.clone(), run.metrics));
    }
    out.write("step_metrics.csv", |w| write_step_metrics_csv(w, &rows))
}

fn check(loaded: &Loaded, a: &CheckArgs, seed: Option<u64>, dry: bool) -> Result<(), Failure> {
    if !(a.beta_scale > 0.0 && a.beta_scale.is_finite()) {
        return Err(Failure::Usage(format!("--beta-scale must be positive, got {}", a.beta_scale)));
    }
    let snr = loaded.sysid_snr(a.snr_db);
    let preset = loaded.snr_preset(a.preset, snr);
    let MethodParams::Convex(mut params) =
        loaded.method_params(Method::Convex, presets::sysid_params(Method::Convex, preset))
    else {
        unreachable!("convex preset");
    };
    params.beta *= a.beta_scale;
    let scn = loaded.sysid_scenario(snr, seed)?;
    if dry {
        return Ok(());
    }
    let data = scn.trial_data(0);
    let samples: Vec<Vec<f64>> = (0..scn.n_iters)
        .map(|n| {
            let mut x = Vec::new();
            data.regressor(n, &mut x);
            x
        })
        .collect();
    let rep = check_convergence_condition(&params, &samples).map_err(runtime)?;
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!("lambda_max            {:.6}", rep.lambda_max);
    println!("bound 2/lambda_max    {:.6}", rep.bound);
    println!(
        "controller 1          beta/(phi + min x'x) = {:.6} (beta {}, phi {})  {}",
        rep.nlms_rate,
        params.beta,
        params.phi,
        verdict(rep.nlms_ok)
    );
    println!("controller 2          C = {}  {}", params.c, verdict(rep.c_ok));
    println!("overall               {}", verdict(rep.passes()));
    if a.strict && !rep.passes() {
        return Err(Failure::Runtime("step-size bound violated".into()));
    }
    Ok(())
}
