//! `renormgb`: boundary invariants of strictly pseudoconvex domains.
//!
//! Exit codes: 0 on success, 2 when a report is flagged or a verify check
//! fails, 1 on any error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use renormgb::domains::{
    make_builtin, parse_domain_spec, DefiningFunction, DomainKind, DomainParams, DomainSpec,
};
use renormgb::invariants::{gauss_bonnet_report, InvariantReport, ReportConfig, Tolerances};
use renormgb::monge_ampere::{
    fefferman_iterate, verify_vanishing_order, ApproxSolution, FeffermanOptions,
};
use renormgb::quadrature::with_workers;
use renormgb::transgression::{index_integral, IndexConnection, IndexField};
use renormgb::verify::{run_suite, CheckRow, Suite, VerifyConfig};
use renormgb::Complex64;

#[derive(Parser)]
#[command(
    name = "renormgb",
    version,
    about = "Renormalized Gauss-Bonnet invariants of pseudoconvex domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the transgression form and the closed-form density over the boundary.
    Invariant(InvariantArgs),
    /// Run a check suite and print one row per check.
    Verify(VerifyArgs),
    /// Build Fefferman stages and write the per-ray vanishing-order fits as CSV.
    Fefferman(FeffermanArgs),
    /// Estimate the index of a linear vector field from shrinking spheres.
    Index(IndexArgs),
}

#[derive(Args, Clone)]
struct DomainArgs {
    /// Built-in domain: ball, real_ellipsoid, tube_disc, mobius_ball.
    #[arg(long, conflicts_with = "domain")]
    builtin: Option<String>,
    /// JSON domain description.
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Möbius center as comma-separated (re, im) pairs.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Option<Vec<f64>>,
    /// Ellipsoid parameter.
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct ToleranceArgs {
    #[arg(long)]
    tol_two_route_n1: Option<f64>,
    #[arg(long)]
    tol_two_route_n2: Option<f64>,
    #[arg(long)]
    tol_ball_n1: Option<f64>,
    #[arg(long)]
    tol_ball_n2: Option<f64>,
    #[arg(long)]
    tol_invariance: Option<f64>,
    #[arg(long)]
    tol_d_pi: Option<f64>,
    #[arg(long)]
    tol_einstein_exact: Option<f64>,
    #[arg(long)]
    tol_einstein_stage: Option<f64>,
    #[arg(long)]
    tol_identities: Option<f64>,
    #[arg(long)]
    tol_tube_torsion: Option<f64>,
    #[arg(long)]
    tol_index: Option<f64>,
    #[arg(long)]
    tol_gauge: Option<f64>,
    #[arg(long)]
    tol_interior_chern: Option<f64>,
    #[arg(long)]
    tol_variants: Option<f64>,
    #[arg(long)]
    tol_fefferman_slope: Option<f64>,
    #[arg(long)]
    tol_stokes_n1: Option<f64>,
    #[arg(long)]
    tol_stokes_n2: Option<f64>,
}

impl ToleranceArgs {
    fn resolve(&self) -> Tolerances {
        let mut tol = Tolerances::default();
        let overrides = [
            ("two_route_n1", self.tol_two_route_n1),
            ("two_route_n2", self.tol_two_route_n2),
            ("ball_n1", self.tol_ball_n1),
            ("ball_n2", self.tol_ball_n2),
            ("invariance", self.tol_invariance),
            ("d_pi", self.tol_d_pi),
            ("einstein_exact", self.tol_einstein_exact),
            ("einstein_stage", self.tol_einstein_stage),
            ("identities", self.tol_identities),
            ("tube_torsion", self.tol_tube_torsion),
            ("index", self.tol_index),
            ("gauge", self.tol_gauge),
            ("interior_chern", self.tol_interior_chern),
            ("variants", self.tol_variants),
            ("fefferman_slope", self.tol_fefferman_slope),
            ("stokes_n1", self.tol_stokes_n1),
            ("stokes_n2", self.tol_stokes_n2),
        ];
        for (name, value) in overrides {
            if let Some(v) = value {
                tol.set(name, v);
            }
        }
        tol
    }
}

#[derive(Args)]
struct InvariantArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    /// Fefferman stage; defaults to n + 2 for domains without an exact solution.
    #[arg(long)]
    stage: Option<usize>,
    /// Also integrate the three homotopy variants of the transgression form.
    #[arg(long)]
    variants: bool,
    /// Skip the residue and interior Chern checks.
    #[arg(long)]
    no_euler: bool,
    /// Per-node diagnostics as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    tol: ToleranceArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 48)]
    resolution: usize,
    #[arg(long, default_value_t = 16)]
    resolution_n2: usize,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    tol: ToleranceArgs,
}

#[derive(Args)]
struct FeffermanArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// Highest stage; defaults to n + 2.
    #[arg(long)]
    stage: Option<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldKind {
    Identity,
    Reflection,
    Generic,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldType {
    Real,
    Complex,
}

#[derive(Args)]
struct IndexArgs {
    /// Field lives on `C^{n+1}`.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, value_enum, default_value_t = FieldKind::Identity)]
    field: FieldKind,
    #[arg(long = "type", value_enum, default_value_t = FieldType::Real)]
    kind: FieldType,
    #[arg(long, default_value_t = 16)]
    resolution: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
    eps: Vec<f64>,
    #[command(flatten)]
    run: RunArgs,
}

fn parse_kind(name: &str) -> Result<DomainKind> {
    serde_json::from_value(serde_json::Value::String(name.replace('-', "_")))
        .with_context(|| format!("unknown built-in domain {name:?}"))
}

fn load_domain(args: &DomainArgs) -> Result<DomainSpec> {
    if !(1..=2).contains(&args.n) {
        bail!("--n must be 1 or 2, got {}", args.n);
    }
    if let Some(path) = &args.domain {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let spec =
            parse_domain_spec(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(spec);
    }
    let kind = parse_kind(args.builtin.as_deref().unwrap_or("ball"))?;
    let params = DomainParams {
        t: args.t,
        a: args.a.clone(),
        jacobian_rescale: (kind == DomainKind::MobiusBall).then_some(true),
    };
    Ok(make_builtin(kind, args.n, params)?)
}

impl RunArgs {
    fn workers(&self) -> Result<usize> {
        match self.workers {
            Some(0) => bail!("--workers must be at least 1"),
            Some(w) => Ok(w),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 8 {
        bail!("--resolution must be at least 8, got {resolution}");
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn write_node_csv(path: &Path, report: &InvariantReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let m = report.n + 1;
    let mut header = vec!["node".to_string()];
    for j in 0..m {
        header.push(format!("re_z{}", j + 1));
        header.push(format!("im_z{}", j + 1));
    }
    header.extend(
        [
            "scal",
            "torsion_sq",
            "curvature_sq",
            "transverse_residual",
            "ricci_residual",
            "pi",
            "density",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in &report.nodes {
        let mut row = vec![r.node.to_string()];
        row.extend(r.point.iter().map(|x| format!("{x:e}")));
        row.extend(
            [
                r.scal,
                r.torsion_sq,
                r.curvature_sq,
                r.transverse_residual,
                r.ricci_residual,
                r.pi,
                r.density,
            ]
            .map(|x| format!("{x:e}")),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_invariant(args: InvariantArgs) -> Result<ExitCode> {
    let workers = args.run.workers()?;
    check_resolution(args.resolution)?;
    let spec = load_domain(&args.domain)?;
    if let Some(stage) = args.stage {
        if stage > spec.n + 2 {
            bail!("--stage must not exceed n + 2 = {}", spec.n + 2);
        }
    }
    let config = ReportConfig {
        resolution: args.resolution,
        stage: args.stage,
        tolerances: args.tol.resolve(),
        euler_side: !args.no_euler,
        variants: args.variants,
        seed: args.run.seed,
        ..ReportConfig::default()
    };
    let outcome = with_workers(workers, || gauss_bonnet_report(&spec, &config))?;
    let report = match outcome {
        Ok(report) => report,
        Err(err) => {
            if let Some(path) = &args.run.out {
                let doc = serde_json::json!({ "domain": spec, "error": err.to_string() });
                fs::write(path, serde_json::to_string_pretty(&doc)?)?;
            }
            return Err(err.into());
        }
    };
    emit(
        args.run.out.as_deref(),
        &serde_json::to_string_pretty(&report)?,
    )?;
    if let Some(path) = &args.csv {
        write_node_csv(path, &report)?;
    }
    eprintln!(
        "{}: transgression {:.12} density {:.12} discrepancy {:.3e}{}",
        report.domain_id,
        report.integral_transgression,
        report.integral_density,
        report.discrepancy,
        if report.flagged { " FLAGGED" } else { "" }
    );
    Ok(if report.flagged {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let workers = args.run.workers()?;
    check_resolution(args.resolution)?;
    check_resolution(args.resolution_n2)?;
    let suite: Suite = args.suite.parse()?;
    let config = VerifyConfig {
        resolution_n1: args.resolution,
        resolution_n2: args.resolution_n2,
        seed: args.run.seed,
        tolerances: args.tol.resolve(),
        ..VerifyConfig::default()
    };
    let rows: Vec<CheckRow> = with_workers(workers, || run_suite(suite, &config))??;
    let table: Vec<String> = rows.iter().map(|r| r.to_string()).collect();
    emit(None, &table.join("\n"))?;
    if let Some(path) = &args.run.out {
        fs::write(path, serde_json::to_string_pretty(&rows)?)?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    eprintln!("{} checks, {} failed", rows.len(), failed);
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_fefferman(args: FeffermanArgs) -> Result<ExitCode> {
    let workers = args.run.workers()?;
    let spec = load_domain(&args.domain)?;
    let n = spec.n;
    let target = args.stage.unwrap_or(n + 2);
    if target == 0 || target > n + 2 {
        bail!("--stage must lie in 1..={}", n + 2);
    }
    let base: Arc<dyn DefiningFunction> = spec.evaluator()?;
    let center = spec.center()?;
    let options = FeffermanOptions {
        seed: args.run.seed,
        ..FeffermanOptions::default()
    };
    let (fits, stages) = with_workers(workers, || -> renormgb::Result<_> {
        let sol = fefferman_iterate(base.clone(), center.clone(), target, &options)?;
        let mut fits = Vec::new();
        for stage in 1..=target {
            let partial = ApproxSolution::with_constants(
                base.clone(),
                center.clone(),
                stage,
                sol.constants()[..stage - 1].to_vec(),
            );
            fits.extend(verify_vanishing_order(&partial, &options)?);
        }
        Ok((fits, sol.reports().to_vec()))
    })??;
    let mut w = match &args.run.out {
        Some(path) => csv::Writer::from_writer(Box::new(fs::File::create(path)?) as Box<dyn Write>),
        None => csv::Writer::from_writer(Box::new(std::io::stdout()) as Box<dyn Write>),
    };
    w.write_record([
        "ray_id",
        "stage",
        "slope",
        "fit_residual",
        "constant",
        "calibrated",
    ])?;
    for fit in &fits {
        let stage = stages.iter().find(|r| r.stage == fit.stage);
        w.write_record([
            fit.ray_id.to_string(),
            fit.stage.to_string(),
            fit.slope.map_or("exact".to_string(), |s| format!("{s:.6}")),
            format!("{:e}", fit.fit_residual),
            stage
                .and_then(|r| r.constant)
                .map_or(String::new(), |c| format!("{c}")),
            stage.is_some_and(|r| r.calibrated).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn index_field(args: &IndexArgs) -> Result<(IndexField, i64)> {
    let m = args.n + 1;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Ok(match (args.kind, args.field) {
        (FieldType::Real, FieldKind::Identity) => {
            (IndexField::Real(DMatrix::identity(2 * m, 2 * m)), 1)
        }
        (FieldType::Real, FieldKind::Reflection) => {
            let mut l = DMatrix::identity(2 * m, 2 * m);
            l[(2 * m - 1, 2 * m - 1)] = -1.0;
            (IndexField::Real(l), -1)
        }
        (FieldType::Real, FieldKind::Generic) => {
            let l = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
                if i == j {
                    1.0
                } else {
                    0.2 * ((i + 2 * j) as f64).sin()
                }
            });
            let sign = l.determinant().signum() as i64;
            (IndexField::Real(l), sign)
        }
        (FieldType::Complex, FieldKind::Identity) => {
            (IndexField::Complex(DMatrix::identity(m, m)), 1)
        }
        (FieldType::Complex, FieldKind::Generic) => (
            IndexField::Complex(DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    c(1.0, 0.1 * i as f64)
                } else {
                    c(0.2 * ((i + 2 * j) as f64).sin(), 0.1)
                }
            })),
            1,
        ),
        (FieldType::Complex, FieldKind::Reflection) => {
            bail!(
                "a holomorphic linear field always has index +1; use --type real for a reflection"
            )
        }
    })
}

fn cmd_index(args: IndexArgs) -> Result<ExitCode> {
    let workers = args.run.workers()?;
    check_resolution(args.resolution)?;
    if !(1..=2).contains(&args.n) {
        bail!("--n must be 1 or 2, got {}", args.n);
    }
    let (field, expected) = index_field(&args)?;
    let (trivial, metric) = with_workers(workers, || -> renormgb::Result<_> {
        Ok((
            index_integral(&field, IndexConnection::Trivial, &args.eps, args.resolution)?,
            index_integral(&field, IndexConnection::Metric, &args.eps, args.resolution)?,
        ))
    })??;
    let doc = serde_json::json!({
        "expected_index": expected,
        "trivial": trivial,
        "metric": metric,
    });
    emit(
        args.run.out.as_deref(),
        &serde_json::to_string_pretty(&doc)?,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause
            .downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Invariant(args) => cmd_invariant(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Fefferman(args) => cmd_fefferman(args),
        Command::Index(args) => cmd_index(args),
    };
    match result {
        Ok(code) => code,
        // A closed reader (`| head`) is not a failure.
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
