//! `carnot` command line: one JSON config in, reports and fields out.
//!
//! Every run writes into `<out>/<hash>/`, where the hash covers the
//! subcommand and the config after overrides. Exit codes: 0 when all checks
//! pass, 1 on a failed check or runtime error, 2 on usage or config errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::algebra::{validate_spec, Algebra, AlgebraSpec, ValidationReport};
use crate::calculus::{check_structural, OperatorSpec, StructuralReport, StructuralSample};
use crate::config::{config_hash, load_config};
use crate::error::{Error, Result};
use crate::geometry::{
    self, boundary_star_test, estimate_lambda_for, is_starshaped, lambda_grid,
    non_star_center_search, ray_boundary_points, sample_box, star_envelope, BoundaryStarReport,
    DefiningFunction, NonStarCenterReport, RegionSpec, StarReport, SuperlevelIdentityReport,
};
use crate::harness::{
    envelope_count, fundamental_solution_checks, property_suite_z, run_theorem_experiment,
    ExperimentConfig, FundamentalSolutionReport, ZPropertyReport,
};
use crate::io::{write_field_binary, write_field_csv, write_json, write_violations_csv};
use crate::solver::{self, GridSpec, SolveStats};

#[derive(Parser, Debug)]
#[command(
    name = "carnot",
    version,
    about = "Carnot group calculus and condenser starshapedness experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Output root; defaults to the config's `output` field, then `runs`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Dotted `key=value` overrides applied to the config.
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structure constants of the configured algebra.
    AlgebraValidate(Common),
    /// 𝒵 identities and structural properties of the model operators.
    Props(Common),
    /// Solve the condenser problem and write the potential.
    Solve(Common),
    /// Starshapedness of the condenser sets about the center.
    StarCheck(Common),
    /// Starshaped envelope of the solved potential.
    Envelope(Common),
    /// Full pipeline: hypothesis, solve, per-level tests, envelope.
    Theorem(Common),
    /// Fundamental-solution checks on the configured algebra.
    Fundsol(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::AlgebraValidate(c) => ("algebra-validate", c),
            Command::Props(c) => ("props", c),
            Command::Solve(c) => ("solve", c),
            Command::StarCheck(c) => ("star-check", c),
            Command::Envelope(c) => ("envelope", c),
            Command::Theorem(c) => ("theorem", c),
            Command::Fundsol(c) => ("fundsol", c),
        }
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::Json(_)
            | Error::InvalidSpec(_)
            | Error::UnknownPreset(_)
            | Error::DimensionMismatch { .. }
            | Error::NonPositiveScale(_)
    )
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, common) = cli.command.parts();
    let cfg = match load_config(&common.config, &common.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if cfg.threads > 0 {
        // A pool already set by an earlier call in this process is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    let root = common
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let dir = root.join(&config_hash(name, &cfg)[..16]);
    if let Err(e) = prepare_dir(&dir, &cfg) {
        eprintln!("error: {e}");
        return 1;
    }
    let result = match &cli.command {
        Command::AlgebraValidate(_) => algebra_validate(&cfg, &dir),
        Command::Props(_) => props(&cfg, &dir),
        Command::Solve(_) => solve(&cfg, &dir),
        Command::StarCheck(_) => star_check(&cfg, &dir),
        Command::Envelope(_) => envelope(&cfg, &dir),
        Command::Theorem(_) => theorem(&cfg, &dir),
        Command::Fundsol(_) => fundsol(&cfg, &dir),
    };
    match result {
        Ok(passed) => {
            println!(
                "{}: {} ({})",
                name,
                if passed { "pass" } else { "FAIL" },
                dir.display()
            );
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let _ = write_error(&dir, &e);
            if is_usage_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

fn prepare_dir(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("config.json"), cfg)
}

fn write_error(dir: &Path, e: &Error) -> Result<()> {
    let details = match e {
        Error::NotStarshaped { report, .. } => serde_json::to_value(report)?,
        Error::NonConvergence { history, .. } => json!({ "history": history }),
        _ => serde_json::Value::Null,
    };
    write_json(
        &dir.join("error.json"),
        &json!({ "error": e.to_string(), "details": details }),
    )
}

#[derive(Serialize)]
struct AlgebraReport {
    spec: AlgebraSpec,
    validation: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    homogeneous_dimension: Option<usize>,
    failures: Vec<String>,
    passed: bool,
}

fn algebra_validate(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let spec = cfg.algebra.spec()?;
    let validation = validate_spec(&spec);
    let homogeneous_dimension = if validation.passed {
        Some(Algebra::new(spec.clone())?.homogeneous_dimension())
    } else {
        None
    };
    let report = AlgebraReport {
        failures: validation.failures(),
        passed: validation.passed,
        spec,
        validation,
        homogeneous_dimension,
    };
    for f in &report.failures {
        eprintln!("  {f}");
    }
    write_json(&dir.join("report.json"), &report)?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct PropsReport {
    z: ZPropertyReport,
    structural: Vec<StructuralReport>,
    passed: bool,
}

fn props(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let alg = cfg.algebra.build()?;
    let z = property_suite_z(&alg, cfg.props_samples, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = StructuralSample::random_set(&alg, cfg.props_samples, &mut rng);
    let mut ops = vec![
        OperatorSpec::hlap(),
        OperatorSpec::qlap(4.0),
        OperatorSpec::inflap(),
    ];
    if !ops.contains(&cfg.solve.operator) {
        ops.push(cfg.solve.operator);
    }
    let structural = ops
        .iter()
        .map(|op| check_structural(op, &samples))
        .collect::<Result<Vec<_>>>()?;
    let passed = z.passed && structural.iter().all(|s| s.passed);
    write_json(
        &dir.join("report.json"),
        &PropsReport {
            z,
            structural,
            passed,
        },
    )?;
    Ok(passed)
}

#[derive(Serialize)]
struct SolveReport {
    operator: OperatorSpec,
    grid: GridSpec,
    lambda_upper: f64,
    stats: SolveStats,
    passed: bool,
}

fn lambda_upper(cfg: &ExperimentConfig, condenser: &geometry::Condenser) -> Result<f64> {
    match cfg.lambda_upper {
        Some(l) => Ok(l),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
            estimate_lambda_for(condenser, cfg.hypothesis_samples, &mut rng)
        }
    }
}

fn solve(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let condenser = cfg.build_condenser()?;
    let upper = lambda_upper(cfg, &condenser)?;
    let grid = cfg.grid.build(&condenser)?;
    let solution = solver::solve(&grid, condenser, &cfg.solve)?;
    write_field_binary(dir, "field", &solution.field, Some(&solution.stats))?;
    write_field_csv(&dir.join("field.csv"), &solution.field)?;
    let passed = !solution.stats.range_violation;
    let report = SolveReport {
        operator: cfg.solve.operator,
        grid,
        lambda_upper: upper,
        stats: solution.stats,
        passed,
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(passed)
}

#[derive(Serialize)]
struct SetCheck {
    star: StarReport,
    boundary: BoundaryStarReport,
}

#[derive(Serialize)]
struct StarCheckReport {
    center: Vec<f64>,
    outer: SetCheck,
    inner: SetCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    non_star_centers: Option<NonStarCenterReport>,
    passed: bool,
}

fn star_check(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let condenser = cfg.build_condenser()?;
    let alg = condenser.alg.as_ref();
    let opts = &cfg.star_check;
    let p0 = condenser.center.coords().to_vec();
    let lambdas = lambda_grid(cfg.lambda_min, cfg.per_decade);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut check_set =
        |name: &str, spec: &RegionSpec, set: &dyn DefiningFunction| -> Result<SetCheck> {
            let half = spec.half_widths(alg);
            let pts = sample_box(&mut rng, &half, opts.samples, |p| set.eval(p) < 0.0);
            let star = is_starshaped(alg, set, &p0, &pts, &lambdas, opts.tolerance)?;
            write_violations_csv(
                &dir.join(format!("{name}_violations.csv")),
                alg.dim(),
                &star.violations,
            )?;
            let dirs = sample_box(&mut rng, &half, opts.boundary_directions, |p| {
                p.iter().any(|x| *x != 0.0)
            });
            let s_max = half.iter().cloned().fold(1.0, f64::max).max(1.0) * 2.0;
            let bpts = ray_boundary_points(alg, set, &p0, &dirs, s_max, 400);
            let boundary = boundary_star_test(alg, set, &p0, &bpts, 1e-6);
            Ok(SetCheck { star, boundary })
        };
    let outer = check_set("outer", &condenser.spec.outer, &condenser.outer)?;
    let inner = check_set("inner", &condenser.spec.inner, &condenser.inner)?;
    let non_star_centers = match (opts.non_star_search, &condenser.spec.outer) {
        (true, RegionSpec::GaugeBall { radius, .. }) => Some(non_star_center_search(
            alg,
            *radius,
            opts.search_per_axis,
            opts.samples,
            &mut rng,
        )?),
        (true, _) => {
            return Err(Error::Config(
                "non_star_search needs a gauge-ball outer set".into(),
            ))
        }
        (false, _) => None,
    };
    let passed =
        outer.star.passed && inner.star.passed && outer.boundary.passed && inner.boundary.passed;
    let report = StarCheckReport {
        center: p0,
        outer,
        inner,
        non_star_centers,
        passed,
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(passed)
}

#[derive(Serialize)]
struct EnvelopeReport {
    lambda_upper: f64,
    envelope_count: usize,
    solve: SolveStats,
    /// `max |f* − f|` over all nodes.
    envelope_gap: f64,
    /// `max |(f*)* − f*|` over all nodes.
    idempotence_gap: f64,
    /// `f* ≥ f` at every node, up to rounding.
    dominates: bool,
    identity: SuperlevelIdentityReport,
    tolerance: f64,
    passed: bool,
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn envelope(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let condenser = cfg.build_condenser()?;
    let upper = lambda_upper(cfg, &condenser)?;
    let grid = cfg.grid.build(&condenser)?;
    let p0 = condenser.center.coords().to_vec();
    let solution = solver::solve(&grid, condenser, &cfg.solve)?;
    let field = &solution.field;
    let count = envelope_count(upper, cfg.per_decade);
    let env = star_envelope(field, &p0, upper, count)?;
    let again = star_envelope(&env, &p0, upper, count)?;
    let identity = geometry::superlevel_identity_check(field, &env, &p0, upper, &cfg.levels)?;
    let envelope_gap = max_gap(&field.values, &env.values);
    let idempotence_gap = max_gap(&env.values, &again.values);
    let dominates = env
        .values
        .iter()
        .zip(&field.values)
        .all(|(e, f)| *e >= f - 1e-12);
    let passed = dominates
        && identity.passed
        && envelope_gap <= cfg.envelope_tolerance
        && idempotence_gap <= cfg.envelope_tolerance;
    write_field_binary(dir, "envelope", &env, None)?;
    write_field_binary(dir, "field", field, Some(&solution.stats))?;
    let report = EnvelopeReport {
        lambda_upper: upper,
        envelope_count: count,
        solve: solution.stats,
        envelope_gap,
        idempotence_gap,
        dominates,
        identity,
        tolerance: cfg.envelope_tolerance,
        passed,
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(passed)
}

fn theorem(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let run = run_theorem_experiment(cfg)?;
    let levels_dir = dir.join("levels");
    fs::create_dir_all(&levels_dir)?;
    let dim = run.report.grid.dim();
    for l in &run.report.levels {
        let path = levels_dir.join(format!("level-{:.4}.csv", l.level));
        write_violations_csv(&path, dim, &l.star.violations)?;
    }
    write_field_binary(dir, "field", &run.solution.field, Some(&run.solution.stats))?;
    write_field_binary(dir, "envelope", &run.envelope, None)?;
    write_json(&dir.join("report.json"), &run.report)?;
    Ok(run.report.passed)
}

fn fundsol(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let alg = cfg.algebra.build()?;
    let report: FundamentalSolutionReport = fundamental_solution_checks(&alg, cfg.seed);
    write_json(&dir.join("report.json"), &report)?;
    Ok(report.passed)
}
