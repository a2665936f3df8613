//! Command-line front end: dataset ingestion, estimator/region/test
//! orchestration, and deterministic JSON reports.
//!
//! Exit codes: 0 success, 1 usage errors, 2 data errors, 3 statistical
//! degeneracy (the diagnostic still lands in the report).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use manistat::axial::{rp_extrinsic_cov, VeroneseRp};
use manistat::bookstein::{bookstein_coords, paired_shape_change_test};
use manistat::dataset::{
    parse_axes, parse_directions, parse_paired_tetrads, parse_planar_landmarks, parse_tetrads,
    DirectionConvention,
};
use manistat::extrinsic::{
    bootstrap_extrinsic, extrinsic_mean, BootstrapVariant, Embedding, SphereInclusion,
};
use manistat::frechet::{
    c_hat, clt_region, percentile_bootstrap_region, pivotal_bootstrap_region, psi_values,
    region_boundary_polyline, ChartedSample, CovarianceTriple,
};
use manistat::manifold::{intrinsic_mean, support_radius_check, Chart};
use manistat::shape::{affine_coords, cp_extrinsic_cov, preshape_from_landmarks, PlanarShapeVector};
use manistat::sphere::{self, UnitVector};
use manistat::stat_kernel::{chi2_quantile, resample_plan};
use manistat::Error;

#[derive(Parser)]
#[command(name = "manistat", version, about = "Means, regions and tests on manifolds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Intrinsic or extrinsic mean of a sample.
    Mean(MeanArgs),
    /// CLT chi-square confidence region for the mean.
    Region(RegionArgs),
    /// Bootstrap-calibrated confidence region for the mean.
    BootRegion(BootArgs),
    /// Paired two-sample test of equal means.
    TestPaired(PairedArgs),
    /// Bookstein coordinates of each tetrad row.
    Bookstein(BooksteinArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Manifold {
    Sphere,
    Axial,
    #[value(name = "planar-shape")]
    PlanarShape,
    #[value(name = "shape3d")]
    Shape3d,
}

impl Manifold {
    fn name(self) -> &'static str {
        match self {
            Manifold::Sphere => "sphere",
            Manifold::Axial => "axial",
            Manifold::PlanarShape => "planar-shape",
            Manifold::Shape3d => "shape3d",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeanKind {
    Intrinsic,
    Extrinsic,
}

impl MeanKind {
    fn name(self) -> &'static str {
        match self {
            MeanKind::Intrinsic => "intrinsic",
            MeanKind::Extrinsic => "extrinsic",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Clt,
    Percentile,
    Pivotal,
    Nonpivotal,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Clt => "clt",
            Method::Percentile => "percentile",
            Method::Pivotal => "pivotal",
            Method::Nonpivotal => "nonpivotal",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    #[value(name = "latlon_deg")]
    LatlonDeg,
    Xyz,
}

impl From<Convention> for DirectionConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::LatlonDeg => DirectionConvention::LatLonDeg,
            Convention::Xyz => DirectionConvention::Xyz,
        }
    }
}

#[derive(Args)]
struct MeanArgs {
    #[arg(long)]
    manifold: Manifold,
    #[arg(long = "mean", value_enum, default_value = "extrinsic")]
    mean: MeanKind,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "latlon_deg")]
    convention: Convention,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long)]
    manifold: Manifold,
    #[arg(long = "mean", value_enum, default_value = "extrinsic")]
    mean: MeanKind,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "latlon_deg")]
    convention: Convention,
    /// Number of boundary polyline samples for 2-d chart regions (0 = none).
    #[arg(long = "boundary-points", default_value_t = 0)]
    boundary_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BootArgs {
    #[arg(long)]
    manifold: Manifold,
    #[arg(long = "mean", value_enum, default_value = "extrinsic")]
    mean: MeanKind,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "pivotal")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "B", default_value_t = 500)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "latlon_deg")]
    convention: Convention,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PairedArgs {
    #[arg(long)]
    manifold: Manifold,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "in2")]
    input2: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "B", default_value_t = 500)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BooksteinArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// What the process should do after a command: a report with an exit code.
enum Failure {
    Usage(String),
    Data(String),
    /// Degenerate statistics still produce a report with the diagnostic.
    Degenerate(Value, Option<PathBuf>),
}

fn is_degenerate(e: &Error) -> bool {
    !matches!(
        e,
        Error::Parse { .. }
            | Error::Io { .. }
            | Error::InvalidArgument(_)
            | Error::LengthMismatch(_, _)
            | Error::DegenerateTetrad(_)
    )
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    match run(cli.cmd) {
        Ok((report, out)) => {
            write_report(&report, out.as_deref());
            std::process::exit(0);
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(Failure::Degenerate(report, out)) => {
            write_report(&report, out.as_deref());
            std::process::exit(3);
        }
    }
}

fn write_report(report: &Value, out: Option<&Path>) {
    let text = format!("{}\n", serde_json::to_string_pretty(report).expect("serializable report"));
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                std::process::exit(2);
            }
        }
        None => print!("{text}"),
    }
}

fn run(cmd: Cmd) -> Result<(Value, Option<PathBuf>), Failure> {
    match cmd {
        Cmd::Mean(a) => cmd_mean(a),
        Cmd::Region(a) => cmd_region(a),
        Cmd::BootRegion(a) => cmd_boot_region(a),
        Cmd::TestPaired(a) => cmd_test_paired(a),
        Cmd::Bookstein(a) => cmd_bookstein(a),
    }
}

fn check_alpha(alpha: f64) -> Result<f64, Failure> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(1.0 - alpha)
    } else {
        Err(Failure::Usage(format!("--alpha must be in (0, 1), got {alpha}")))
    }
}

/// Maps a library error onto the exit discipline, attaching the echo map to
/// degeneracy reports.
fn fail(e: Error, echo: &Map<String, Value>, out: &Option<PathBuf>) -> Failure {
    if is_degenerate(&e) {
        let mut doc = echo.clone();
        doc.insert("error".into(), json!(e.to_string()));
        Failure::Degenerate(Value::Object(doc), out.clone())
    } else {
        Failure::Data(e.to_string())
    }
}

// ---------------------------------------------------------------- json glue

fn vec_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

fn mat_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!(m[(r, c)])).collect()))
            .collect(),
    )
}

fn complex_json(c: Complex64) -> Value {
    json!({ "re": c.re, "im": c.im })
}

fn latlon_json(p: &UnitVector) -> Value {
    let c = p.coords();
    let lat = c[2].asin().to_degrees();
    let lon = c[1].atan2(c[0]).to_degrees();
    json!([lat, lon])
}

// ------------------------------------------------------------ data loading

fn load_directions(path: &Path, convention: Convention) -> Result<Vec<UnitVector>, Failure> {
    parse_directions(path, convention.into()).map_err(|e| Failure::Data(e.to_string()))
}

fn load_shapes(path: &Path) -> Result<Vec<PlanarShapeVector>, Failure> {
    let k = infer_landmark_count(path)?;
    let rows = parse_planar_landmarks(path, k).map_err(|e| Failure::Data(e.to_string()))?;
    rows.iter()
        .map(|cfg| preshape_from_landmarks(cfg))
        .collect::<manistat::Result<Vec<_>>>()
        .map_err(|e| Failure::Data(e.to_string()))
}

/// Landmark count from the first data row's arity (2k fields).
fn infer_landmark_count(path: &Path) -> Result<usize, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = line.split(',').count();
        if fields % 2 != 0 || fields < 6 {
            return Err(Failure::Data(format!(
                "{}: planar landmark rows need an even field count of at least 6, got {fields}",
                path.display()
            )));
        }
        return Ok(fields / 2);
    }
    Err(Failure::Data(format!("{}: no data rows", path.display())))
}

// ------------------------------------------------------- sphere intrinsics

fn sphere_intrinsic_mean(points: &[UnitVector]) -> manistat::Result<UnitVector> {
    let incl = SphereInclusion {
        ambient: points[0].coords().len(),
    };
    let init = extrinsic_mean(points, &incl)?.mean_point;
    intrinsic_mean(points, |p, v| sphere::exp_map(p, v), |p, x| sphere::log_map(p, x), &init, 1e-10, 1000)
}

/// Chart coordinates, plug-in covariances and the support-radius diagnostic
/// for an S^2 sample around its intrinsic mean.
struct SphereChartFit {
    mean: UnitVector,
    chart: Chart<UnitVector>,
    sample: ChartedSample,
    cov: CovarianceTriple,
    support: Value,
}

fn fit_sphere_chart(points: &[UnitVector]) -> manistat::Result<SphereChartFit> {
    if points[0].coords().len() != 3 {
        return Err(Error::InvalidArgument(
            "chart inference is implemented for S^2 data".into(),
        ));
    }
    let mean = sphere_intrinsic_mean(points)?;
    let chart = sphere::log_chart_s2(mean.clone())?;
    let coords: Vec<DVector<f64>> = points
        .iter()
        .map(|p| chart.to_coords(p))
        .collect::<manistat::Result<Vec<_>>>()?;
    let pairs: Vec<[f64; 2]> = coords.iter().map(|u| [u[0], u[1]]).collect();
    let lambda = sphere::lambda_hat(&pairs)?;
    let sample = ChartedSample::new("s2-log", coords, DVector::zeros(2))?;
    let c = c_hat(&psi_values(&sample));
    let cov = CovarianceTriple::new(lambda, c)?;
    let check = support_radius_check(points, &mean, 1.0, sphere::geodesic_distance);
    let support = json!({ "radius": check.r, "bound": check.bound, "ok": check.ok });
    Ok(SphereChartFit {
        mean,
        chart,
        sample,
        cov,
        support,
    })
}

// -------------------------------------------------------------------- mean

fn cmd_mean(a: MeanArgs) -> Result<(Value, Option<PathBuf>), Failure> {
    let mut echo = Map::new();
    echo.insert("command".into(), json!("mean"));
    echo.insert("manifold".into(), json!(a.manifold.name()));
    echo.insert("estimator".into(), json!(a.mean.name()));
    echo.insert("input".into(), json!(a.input.display().to_string()));

    let body = match (a.manifold, a.mean) {
        (Manifold::Sphere, kind) => {
            echo.insert(
                "convention".into(),
                json!(match a.convention {
                    Convention::LatlonDeg => "latlon_deg (x=cos lat cos lon, y=cos lat sin lon, z=sin lat)",
                    Convention::Xyz => "xyz",
                }),
            );
            let points = load_directions(&a.input, a.convention)?;
            echo.insert("n".into(), json!(points.len()));
            sphere_mean_body(&points, kind)
        }
        (Manifold::Axial, MeanKind::Extrinsic) => {
            let axes = parse_axes(&a.input).map_err(|e| Failure::Data(e.to_string()))?;
            echo.insert("n".into(), json!(axes.len()));
            axial_mean_body(&axes)
        }
        (Manifold::PlanarShape, MeanKind::Extrinsic) => {
            let shapes = load_shapes(&a.input)?;
            echo.insert("n".into(), json!(shapes.len()));
            planar_mean_body(&shapes)
        }
        (Manifold::Shape3d, _) => {
            // the Bookstein chart is flat, so both mean kinds coincide
            let tetrads = parse_tetrads(&a.input).map_err(|e| Failure::Data(e.to_string()))?;
            echo.insert("n".into(), json!(tetrads.len()));
            shape3d_mean_body(&tetrads)
        }
        (m, kind) => {
            return Err(Failure::Usage(format!(
                "--mean {} is not supported for --manifold {}",
                kind.name(),
                m.name()
            )))
        }
    };
    assemble(echo, body, a.out)
}

fn sphere_mean_body(points: &[UnitVector], kind: MeanKind) -> manistat::Result<Map<String, Value>> {
    let mut body = Map::new();
    match kind {
        MeanKind::Extrinsic => {
            let incl = SphereInclusion {
                ambient: points[0].coords().len(),
            };
            let summary = extrinsic_mean(points, &incl)?;
            body.insert("mean_xyz".into(), vec_json(summary.mean_point.coords()));
            if points[0].coords().len() == 3 {
                body.insert("mean_latlon_deg".into(), latlon_json(&summary.mean_point));
            }
            body.insert("ambient_mean_norm".into(), json!(summary.nonfocal_gap));
        }
        MeanKind::Intrinsic => {
            let mean = sphere_intrinsic_mean(points)?;
            body.insert("mean_xyz".into(), vec_json(mean.coords()));
            if points[0].coords().len() == 3 {
                body.insert("mean_latlon_deg".into(), latlon_json(&mean));
            }
            let check = support_radius_check(points, &mean, 1.0, sphere::geodesic_distance);
            body.insert(
                "support_radius".into(),
                json!({ "radius": check.r, "bound": check.bound, "ok": check.ok }),
            );
        }
    }
    Ok(body)
}

fn axial_mean_body(axes: &[manistat::axial::Axis]) -> manistat::Result<Map<String, Value>> {
    let cov = rp_extrinsic_cov(axes)?;
    let mut body = Map::new();
    body.insert("mean_axis".into(), vec_json(cov.mean_axis.rep()));
    body.insert("eigenvalues".into(), vec_json(&cov.eigenvalues));
    body.insert("eigengap".into(), json!(cov.gap));
    Ok(body)
}

fn planar_mean_body(shapes: &[PlanarShapeVector]) -> manistat::Result<Map<String, Value>> {
    let mean = manistat::shape::procrustes_mean(shapes)?;
    let mut body = Map::new();
    body.insert(
        "mean_preshape".into(),
        Value::Array(mean.mean.rep().iter().map(|&c| complex_json(c)).collect()),
    );
    body.insert(
        "affine_coords".into(),
        Value::Array(affine_coords(&mean.mean)?.into_iter().map(complex_json).collect()),
    );
    body.insert("eigengap".into(), json!(mean.gap));
    Ok(body)
}

fn shape3d_mean_body(tetrads: &[manistat::bookstein::Tetrad]) -> manistat::Result<Map<String, Value>> {
    let coords = tetrads
        .iter()
        .map(|t| Ok(bookstein_coords(t)?.to_vector()))
        .collect::<manistat::Result<Vec<_>>>()?;
    let sample = ChartedSample::with_euclidean_mean("bookstein", coords)?;
    let mut body = Map::new();
    body.insert("mean_bookstein".into(), vec_json(&sample.mean_coords));
    Ok(body)
}

// ------------------------------------------------------------------ region

fn cmd_region(a: RegionArgs) -> Result<(Value, Option<PathBuf>), Failure> {
    let level = check_alpha(a.alpha)?;
    let mut echo = Map::new();
    echo.insert("command".into(), json!("region"));
    echo.insert("manifold".into(), json!(a.manifold.name()));
    echo.insert("estimator".into(), json!(a.mean.name()));
    echo.insert("method".into(), json!("clt"));
    echo.insert("alpha".into(), json!(a.alpha));
    echo.insert("input".into(), json!(a.input.display().to_string()));

    let body = match (a.manifold, a.mean) {
        (Manifold::Sphere, MeanKind::Intrinsic) => {
            let points = load_directions(&a.input, a.convention)?;
            echo.insert("n".into(), json!(points.len()));
            sphere_intrinsic_region_body(&points, level, a.boundary_points)
        }
        (Manifold::Sphere, MeanKind::Extrinsic) => {
            let points = load_directions(&a.input, a.convention)?;
            echo.insert("n".into(), json!(points.len()));
            sphere_extrinsic_region_body(&points, level)
        }
        (Manifold::Axial, MeanKind::Extrinsic) => {
            let axes = parse_axes(&a.input).map_err(|e| Failure::Data(e.to_string()))?;
            echo.insert("n".into(), json!(axes.len()));
            axial_region_body(&axes, level)
        }
        (Manifold::PlanarShape, MeanKind::Extrinsic) => {
            let shapes = load_shapes(&a.input)?;
            echo.insert("n".into(), json!(shapes.len()));
            planar_region_body(&shapes, level)
        }
        (Manifold::Shape3d, _) => {
            let tetrads = parse_tetrads(&a.input).map_err(|e| Failure::Data(e.to_string()))?;
            echo.insert("n".into(), json!(tetrads.len()));
            shape3d_region_body(&tetrads, level)
        }
        (m, kind) => {
            return Err(Failure::Usage(format!(
                "--mean {} is not supported for --manifold {}",
                kind.name(),
                m.name()
            )))
        }
    };
    assemble(echo, body, a.out)
}

fn sphere_intrinsic_region_body(
    points: &[UnitVector],
    level: f64,
    boundary_points: usize,
) -> manistat::Result<Map<String, Value>> {
    let fit = fit_sphere_chart(points)?;
    let region = clt_region(&fit.sample, &fit.cov, level)?;
    let n = region.n as f64;
    let mut body = Map::new();
    body.insert("mean_xyz".into(), vec_json(fit.mean.coords()));
    body.insert("mean_latlon_deg".into(), latlon_json(&fit.mean));
    body.insert("support_radius".into(), fit.support);
    body.insert("chart".into(), json!(region.chart_id));
    body.insert("lambda_hat".into(), mat_json(&fit.cov.lambda_hat));
    body.insert("c_hat".into(), mat_json(&fit.cov.c_hat));
    body.insert("gamma_hat".into(), mat_json(&fit.cov.gamma_hat));
    // {u : q(u) <= threshold} with q the quadratic form below
    body.insert("quadratic_form".into(), mat_json(&(&region.form * n)));
    body.insert("threshold".into(), json!(region.threshold));
    body.insert("df".into(), json!(2));
    if boundary_points > 0 {
        let polyline = region_boundary_polyline(&region, boundary_points)?;
        body.insert(
            "boundary_chart".into(),
            Value::Array(polyline.iter().map(vec_json).collect()),
        );
        let on_sphere = polyline
            .iter()
            .map(|u| Ok(vec_json(fit.chart.from_coords(u)?.coords())))
            .collect::<manistat::Result<Vec<_>>>()?;
        body.insert("boundary_xyz".into(), Value::Array(on_sphere));
    }
    Ok(body)
}

fn sphere_extrinsic_region_body(points: &[UnitVector], level: f64) -> manistat::Result<Map<String, Value>> {
    let incl = SphereInclusion {
        ambient: points[0].coords().len(),
    };
    let summary = extrinsic_mean(points, &incl)?;
    let d = incl.manifold_dim() as u32;
    let mut body = Map::new();
    body.insert("mean_xyz".into(), vec_json(summary.mean_point.coords()));
    if points[0].coords().len() == 3 {
        body.insert("mean_latlon_deg".into(), latlon_json(&summary.mean_point));
    }
    body.insert("g_hat".into(), mat_json(&summary.g_hat));
    body.insert("threshold".into(), json!(chi2_quantile(d, level)?));
    body.insert("df".into(), json!(d));
    body.insert("frame".into(), json!("sample"));
    Ok(body)
}

fn axial_region_body(axes: &[manistat::axial::Axis], level: f64) -> manistat::Result<Map<String, Value>> {
    let cov = rp_extrinsic_cov(axes)?;
    let d = (axes[0].rep().len() - 1) as u32;
    let mut body = Map::new();
    body.insert("mean_axis".into(), vec_json(cov.mean_axis.rep()));
    body.insert("eigenvalues".into(), vec_json(&cov.eigenvalues));
    body.insert("eigengap".into(), json!(cov.gap));
    body.insert("g_hat".into(), mat_json(&cov.g));
    body.insert("threshold".into(), json!(chi2_quantile(d, level)?));
    body.insert("df".into(), json!(d));
    Ok(body)
}

fn planar_region_body(shapes: &[PlanarShapeVector], level: f64) -> manistat::Result<Map<String, Value>> {
    let cov = cp_extrinsic_cov(shapes)?;
    let d = shapes[0].rep().len() - 1;
    let df = 2 * d as u32;
    let mut body = Map::new();
    body.insert(
        "mean_preshape".into(),
        Value::Array(cov.mean.mean.rep().iter().map(|&c| complex_json(c)).collect()),
    );
    body.insert(
        "affine_coords".into(),
        Value::Array(affine_coords(&cov.mean.mean)?.into_iter().map(complex_json).collect()),
    );
    body.insert("eigengap".into(), json!(cov.mean.gap));
    body.insert(
        "g_hat".into(),
        Value::Array(
            (0..d)
                .map(|r| Value::Array((0..d).map(|c| complex_json(cov.g[(r, c)])).collect()))
                .collect(),
        ),
    );
    body.insert("threshold".into(), json!(chi2_quantile(df, level)?));
    body.insert("df".into(), json!(df));
    Ok(body)
}

fn shape3d_region_body(tetrads: &[manistat::bookstein::Tetrad], level: f64) -> manistat::Result<Map<String, Value>> {
    let coords = tetrads
        .iter()
        .map(|t| Ok(bookstein_coords(t)?.to_vector()))
        .collect::<manistat::Result<Vec<_>>>()?;
    let sample = ChartedSample::with_euclidean_mean("bookstein", coords)?;
    let lambda = DMatrix::<f64>::identity(5, 5) * 2.0;
    let cov = CovarianceTriple::new(lambda, c_hat(&psi_values(&sample)))?;
    let region = clt_region(&sample, &cov, level)?;
    let mut body = Map::new();
    body.insert("mean_bookstein".into(), vec_json(&region.center));
    body.insert("gamma_hat".into(), mat_json(&cov.gamma_hat));
    body.insert(
        "quadratic_form".into(),
        mat_json(&(&region.form * region.n as f64)),
    );
    body.insert("threshold".into(), json!(region.threshold));
    body.insert("df".into(), json!(5));
    Ok(body)
}

// ------------------------------------------------------------- boot-region

fn cmd_boot_region(a: BootArgs) -> Result<(Value, Option<PathBuf>), Failure> {
    let level = check_alpha(a.alpha)?;
    if a.method == Method::Clt {
        return Err(Failure::Usage(
            "--method clt belongs to the `region` subcommand".into(),
        ));
    }
    let mut echo = Map::new();
    echo.insert("command".into(), json!("boot-region"));
    echo.insert("manifold".into(), json!(a.manifold.name()));
    echo.insert("estimator".into(), json!(a.mean.name()));
    echo.insert("method".into(), json!(a.method.name()));
    echo.insert("alpha".into(), json!(a.alpha));
    echo.insert("B".into(), json!(a.b));
    echo.insert("seed".into(), json!(a.seed));
    echo.insert("input".into(), json!(a.input.display().to_string()));

    let body = match (a.manifold, a.mean) {
        (Manifold::Sphere, MeanKind::Intrinsic) => {
            let points = load_directions(&a.input, a.convention)?;
            echo.insert("n".into(), json!(points.len()));
            match a.method {
                Method::Percentile | Method::Pivotal => {
                    sphere_intrinsic_boot_body(&points, a.method, a.b, a.seed, level)
                }
                _ => {
                    return Err(Failure::Usage(
                        "intrinsic boot-region supports --method percentile or pivotal".into(),
                    ))
                }
            }
        }
        (Manifold::Sphere, MeanKind::Extrinsic) => {
            let points = load_directions(&a.input, a.convention)?;
            echo.insert("n".into(), json!(points.len()));
            let incl = SphereInclusion {
                ambient: points[0].coords().len(),
            };
            embedded_boot_body(&points, &incl, a.method, a.b, a.seed, level, |p| {
                vec_json(p.coords())
            })
        }
        (Manifold::Axial, MeanKind::Extrinsic) => {
            let axes = parse_axes(&a.input).map_err(|e| Failure::Data(e.to_string()))?;
            echo.insert("n".into(), json!(axes.len()));
            let e = VeroneseRp {
                n: axes[0].rep().len(),
            };
            embedded_boot_body(&axes, &e, a.method, a.b, a.seed, level, |p| vec_json(p.rep()))
        }
        (Manifold::PlanarShape, MeanKind::Extrinsic) => {
            let shapes = load_shapes(&a.input)?;
            echo.insert("n".into(), json!(shapes.len()));
            let e = manistat::shape::VeroneseCp {
                p: shapes[0].rep().len(),
            };
            embedded_boot_body(&shapes, &e, a.method, a.b, a.seed, level, |p| {
                Value::Array(p.rep().iter().map(|&c| complex_json(c)).collect())
            })
        }
        (Manifold::Shape3d, _) => {
            let tetrads = parse_tetrads(&a.input).map_err(|e| Failure::Data(e.to_string()))?;
            echo.insert("n".into(), json!(tetrads.len()));
            match a.method {
                Method::Percentile | Method::Pivotal => {
                    shape3d_boot_body(&tetrads, a.method, a.b, a.seed, level)
                }
                _ => {
                    return Err(Failure::Usage(
                        "shape3d boot-region supports --method percentile or pivotal".into(),
                    ))
                }
            }
        }
        (m, kind) => {
            return Err(Failure::Usage(format!(
                "--mean {} is not supported for --manifold {}",
                kind.name(),
                m.name()
            )))
        }
    };
    assemble(echo, body, a.out)
}

fn sphere_intrinsic_boot_body(
    points: &[UnitVector],
    method: Method,
    b: usize,
    seed: u64,
    level: f64,
) -> manistat::Result<Map<String, Value>> {
    let fit = fit_sphere_chart(points)?;
    let plan = resample_plan(seed, b, points.len())?;
    // replicate intrinsic mean, expressed in the full-sample chart
    let estimator = |idx: &[usize]| -> manistat::Result<DVector<f64>> {
        let replicate: Vec<UnitVector> = idx.iter().map(|&i| points[i].clone()).collect();
        let m = intrinsic_mean(
            &replicate,
            |p, v| sphere::exp_map(p, v),
            |p, x| sphere::log_map(p, x),
            &fit.mean,
            1e-10,
            1000,
        )?;
        fit.chart.to_coords(&m)
    };
    let mut body = Map::new();
    body.insert("mean_xyz".into(), vec_json(fit.mean.coords()));
    body.insert("mean_latlon_deg".into(), latlon_json(&fit.mean));
    body.insert("support_radius".into(), fit.support.clone());
    body.insert("chart".into(), json!("s2-log"));
    match method {
        Method::Percentile => {
            let region = percentile_bootstrap_region(&fit.sample, estimator, &plan, level)?;
            body.insert("radius".into(), json!(region.radius));
            body.insert("degenerate_replicates".into(), json!(region.boot.degenerate_count));
        }
        Method::Pivotal => {
            // replicate plug-in covariance around the replicate mean; the
            // Hessian is evaluated at coordinates recentered there
            let replicate_cov = |idx: &[usize], m: &DVector<f64>| -> manistat::Result<DMatrix<f64>> {
                let coords: Vec<DVector<f64>> =
                    idx.iter().map(|&i| fit.sample.coords[i].clone()).collect();
                let pairs: Vec<[f64; 2]> =
                    coords.iter().map(|u| [u[0] - m[0], u[1] - m[1]]).collect();
                let lambda = sphere::lambda_hat(&pairs)?;
                let rep = ChartedSample::new("s2-log", coords, m.clone())?;
                let c = c_hat(&psi_values(&rep));
                Ok(CovarianceTriple::new(lambda, c)?.gamma_hat)
            };
            let region =
                pivotal_bootstrap_region(&fit.sample, &fit.cov, estimator, replicate_cov, &plan, level)?;
            body.insert("gamma_hat".into(), mat_json(&fit.cov.gamma_hat));
            body.insert(
                "quadratic_form".into(),
                mat_json(&(&region.region.form * region.region.n as f64)),
            );
            body.insert("threshold".into(), json!(region.region.threshold));
            body.insert("degenerate_replicates".into(), json!(region.boot.degenerate_count));
        }
        _ => unreachable!("validated by the caller"),
    }
    Ok(body)
}

fn embedded_boot_body<E: Embedding>(
    sample: &[E::Point],
    e: &E,
    method: Method,
    b: usize,
    seed: u64,
    level: f64,
    mean_json: impl Fn(&E::Point) -> Value,
) -> manistat::Result<Map<String, Value>> {
    let variant = match method {
        Method::Pivotal => BootstrapVariant::Pivotal,
        Method::Nonpivotal => BootstrapVariant::Nonpivotal,
        _ => {
            return Err(Error::InvalidArgument(
                "extrinsic boot-region supports --method pivotal or nonpivotal".into(),
            ))
        }
    };
    let plan = resample_plan(seed, b, sample.len())?;
    let region = bootstrap_extrinsic(sample, e, &plan, level, variant)?;
    let mut body = Map::new();
    body.insert("mean".into(), mean_json(&region.summary.mean_point));
    body.insert("nonfocal_gap".into(), json!(region.summary.nonfocal_gap));
    body.insert("threshold".into(), json!(region.threshold));
    body.insert("df".into(), json!(e.manifold_dim()));
    body.insert("degenerate_replicates".into(), json!(region.boot.degenerate_count));
    Ok(body)
}

fn shape3d_boot_body(
    tetrads: &[manistat::bookstein::Tetrad],
    method: Method,
    b: usize,
    seed: u64,
    level: f64,
) -> manistat::Result<Map<String, Value>> {
    let coords = tetrads
        .iter()
        .map(|t| Ok(bookstein_coords(t)?.to_vector()))
        .collect::<manistat::Result<Vec<_>>>()?;
    let sample = ChartedSample::with_euclidean_mean("bookstein", coords)?;
    let plan = resample_plan(seed, b, sample.n())?;
    let estimator = |idx: &[usize]| -> manistat::Result<DVector<f64>> {
        let mut acc = DVector::zeros(5);
        for &i in idx {
            acc += &sample.coords[i];
        }
        Ok(acc / idx.len() as f64)
    };
    let mut body = Map::new();
    body.insert("mean_bookstein".into(), vec_json(&sample.mean_coords));
    body.insert("chart".into(), json!("bookstein"));
    match method {
        Method::Percentile => {
            let region = percentile_bootstrap_region(&sample, estimator, &plan, level)?;
            body.insert("radius".into(), json!(region.radius));
            body.insert("degenerate_replicates".into(), json!(region.boot.degenerate_count));
        }
        Method::Pivotal => {
            let lambda = DMatrix::<f64>::identity(5, 5) * 2.0;
            let cov = CovarianceTriple::new(lambda.clone(), c_hat(&psi_values(&sample)))?;
            let replicate_cov = |idx: &[usize], m: &DVector<f64>| -> manistat::Result<DMatrix<f64>> {
                let coords: Vec<DVector<f64>> =
                    idx.iter().map(|&i| sample.coords[i].clone()).collect();
                let rep = ChartedSample::new("bookstein", coords, m.clone())?;
                Ok(CovarianceTriple::new(lambda.clone(), c_hat(&psi_values(&rep)))?.gamma_hat)
            };
            let region = pivotal_bootstrap_region(&sample, &cov, estimator, replicate_cov, &plan, level)?;
            body.insert("gamma_hat".into(), mat_json(&cov.gamma_hat));
            body.insert(
                "quadratic_form".into(),
                mat_json(&(&region.region.form * region.region.n as f64)),
            );
            body.insert("threshold".into(), json!(region.region.threshold));
            body.insert("degenerate_replicates".into(), json!(region.boot.degenerate_count));
        }
        _ => unreachable!("validated by the caller"),
    }
    Ok(body)
}

// ------------------------------------------------------------- test-paired

fn cmd_test_paired(a: PairedArgs) -> Result<(Value, Option<PathBuf>), Failure> {
    let level = check_alpha(a.alpha)?;
    let mut echo = Map::new();
    echo.insert("command".into(), json!("test-paired"));
    echo.insert("manifold".into(), json!(a.manifold.name()));
    echo.insert("alpha".into(), json!(a.alpha));
    echo.insert("B".into(), json!(a.b));
    echo.insert("seed".into(), json!(a.seed));
    echo.insert("input".into(), json!(a.input.display().to_string()));
    echo.insert("input2".into(), json!(a.input2.display().to_string()));

    if a.manifold != Manifold::Shape3d {
        return Err(Failure::Usage(format!(
            "test-paired is implemented for --manifold shape3d, got {}",
            a.manifold.name()
        )));
    }
    let (before, after) =
        parse_paired_tetrads(&a.input, &a.input2).map_err(|e| Failure::Data(e.to_string()))?;
    echo.insert("n".into(), json!(before.len()));
    let body = (|| -> manistat::Result<Map<String, Value>> {
        let plan = resample_plan(a.seed, a.b, before.len())?;
        let out = paired_shape_change_test(&before, &after, &plan, level)?;
        let mut body = Map::new();
        body.insert("statistic".into(), json!(out.test.statistic));
        body.insert("df".into(), json!(out.test.df));
        body.insert("p_clt".into(), json!(out.test.p_clt));
        body.insert("p_boot".into(), json!(out.test.p_boot));
        body.insert("gamma_n".into(), vec_json(&out.test.gamma_n));
        body.insert(
            "intervals".into(),
            Value::Array(
                out.intervals
                    .iter()
                    .map(|&(lo, hi)| json!([lo, hi]))
                    .collect(),
            ),
        );
        body.insert("bonferroni".into(), json!(out.bonferroni_note));
        body.insert("degenerate_replicates".into(), json!(out.test.boot.degenerate_count));
        Ok(body)
    })();
    assemble(echo, body, a.out)
}

// --------------------------------------------------------------- bookstein

fn cmd_bookstein(a: BooksteinArgs) -> Result<(Value, Option<PathBuf>), Failure> {
    let mut echo = Map::new();
    echo.insert("command".into(), json!("bookstein"));
    echo.insert("input".into(), json!(a.input.display().to_string()));
    let tetrads = parse_tetrads(&a.input).map_err(|e| Failure::Data(e.to_string()))?;
    echo.insert("n".into(), json!(tetrads.len()));
    let body = (|| -> manistat::Result<Map<String, Value>> {
        let rows = tetrads
            .iter()
            .map(|t| Ok(Value::Array(bookstein_coords(t)?.v.iter().map(|&v| json!(v)).collect())))
            .collect::<manistat::Result<Vec<_>>>()?;
        let mut body = Map::new();
        body.insert("coordinates".into(), Value::Array(rows));
        Ok(body)
    })();
    assemble(echo, body, a.out)
}

// ---------------------------------------------------------------- assembly

fn assemble(
    echo: Map<String, Value>,
    body: Result<Map<String, Value>, impl Into<BodyError>>,
    out: Option<PathBuf>,
) -> Result<(Value, Option<PathBuf>), Failure> {
    match body.map_err(Into::into) {
        Ok(b) => {
            let mut doc = echo;
            for (k, v) in b {
                doc.insert(k, v);
            }
            Ok((Value::Object(doc), out))
        }
        Err(BodyError::Lib(e)) => Err(fail(e, &echo, &out)),
        Err(BodyError::Early(f)) => Err(f),
    }
}

/// Either a library error from the computation or a failure decided earlier
/// (usage, data) that must pass through unchanged.
enum BodyError {
    Lib(Error),
    Early(Failure),
}

impl From<Error> for BodyError {
    fn from(e: Error) -> Self {
        BodyError::Lib(e)
    }
}

impl From<Failure> for BodyError {
    fn from(f: Failure) -> Self {
        BodyError::Early(f)
    }
}
