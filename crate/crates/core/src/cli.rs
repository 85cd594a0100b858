//! Command-line reports. Each subcommand builds a [`Report`]: one table with
//! labeled columns, written as a single JSON object or as CSV with a header.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::birkhoff::{
    chain_matrix, finite_difference_jacobian, linearized_bounce_map, linearized_bounce_map_factored,
    trace, BirkhoffCoord, BirkhoffError,
};
use crate::folding::{
    broken_path_full_plane, broken_path_propagator, corner_orbit_kernel_imag, corner_radius, default_tau_ladder,
    obtuse_corner_constant, signature_oracle, signature_ledger, FoldingError, GridSpec, SignSignature,
};
use crate::geometry::{parse_geometry, GeometryError};
use crate::orbit_terms::{green_from_time_integral, green_stationary, single_reflection_green, OrbitError};
use crate::spectra::{disk_spectrum, rectangle_spectrum, staircase_residual, SpectraError};
use crate::specfun::QuadError;
use crate::weyl::{corner_coeffs, weyl_expansion, BoundaryCondition, SpectralExpansion};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_GEOMETRY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Rectangle,
    Disk,
}

#[derive(Debug, Parser)]
#[command(name = "billiard-weyl", version, about = "Weyl expansion and closed-orbit corner terms for planar billiards")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
    /// Tolerance for quadratures and convergence checks.
    #[arg(long, default_value_t = 1e-6, global = true)]
    pub tol: f64,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Area, length and constant terms of the smooth density for a boundary file.
    Weyl {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long, default_value = "dirichlet")]
        bc: BoundaryCondition,
    },
    /// Exact-spectrum staircase residual against the smooth counting function.
    Staircase {
        #[arg(long, value_enum)]
        shape: ShapeArg,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.259_921_049_894_873_2)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Energy window `E1:E2`.
        #[arg(long)]
        window: Option<String>,
    },
    /// Weyl and closed-orbit corner coefficients over `MIN:MAX:STEPS`.
    Corner {
        #[arg(long)]
        alpha_grid: String,
        /// Count double-reflection orbits hitting either side first.
        #[arg(long)]
        both_orders: bool,
    },
    /// Sign-signature table of the right-angle corner.
    Ledger {
        #[arg(long, default_value = "dirichlet")]
        bc: BoundaryCondition,
        /// Add the quadrature oracle next to each entry.
        #[arg(long)]
        verify: bool,
    },
    /// Broken-path propagators and the folded corner constant.
    Fold {
        #[arg(long)]
        alpha: f64,
        /// Comma-separated imaginary times per leg.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        tau_list: Vec<f64>,
        /// Number of grid refinement levels.
        #[arg(long, default_value_t = 3)]
        grid: usize,
        #[arg(long)]
        both_orders: bool,
    },
    /// Bounce sequence and linearized maps from a starting point.
    Monodromy {
        #[arg(long)]
        geometry: PathBuf,
        /// Start `S,V`: arclength and tangential velocity.
        #[arg(long)]
        start: String,
        #[arg(long)]
        bounces: usize,
    },
    /// Single-reflection Green's function: Hankel form, time integral, stationary phase.
    Green {
        #[arg(long)]
        y: f64,
        #[arg(long)]
        k: f64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Geometry(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::NonConvergence(_) => EXIT_NONCONVERGENCE,
            CliError::Geometry(_) => EXIT_GEOMETRY,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Geometry(e.to_string())
    }
}

impl From<BirkhoffError> for CliError {
    fn from(e: BirkhoffError) -> Self {
        match e {
            BirkhoffError::BadVelocity(_) => CliError::Usage(e.to_string()),
            other => CliError::Geometry(other.to_string()),
        }
    }
}

impl From<QuadError> for CliError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            QuadError::InvalidDomain(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OrbitError> for CliError {
    fn from(e: OrbitError) -> Self {
        match e {
            OrbitError::Quadrature(q) => q.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<FoldingError> for CliError {
    fn from(e: FoldingError) -> Self {
        match e {
            FoldingError::Quadrature(q) => q.into(),
            FoldingError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            FoldingError::InvalidArgument(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        match e {
            SpectraError::NumericalError(_) => CliError::NonConvergence(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub meaning: String,
}

fn col(name: &str, unit: &str, meaning: &str) -> Column {
    Column {
        name: name.into(),
        unit: unit.into(),
        meaning: meaning.into(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
    pub notes: Vec<String>,
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

impl Report {
    fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            inputs: BTreeMap::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn input(&mut self, k: &str, v: Value) {
        self.inputs.insert(k.into(), v);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|v| match v {
                        Value::Null => String::new(),
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    }))?;
                }
                w.flush()
            }
        }
    }
}

fn parse_range(s: &str, parts: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{what}: cannot parse `{s}`")))?;
    if v.len() != parts {
        return Err(CliError::Usage(format!("{what}: expected {parts} fields separated by `:`, got `{s}`")));
    }
    Ok(v)
}

fn read_geometry(path: &PathBuf) -> Result<crate::geometry::Boundary, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Geometry(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_geometry(&text)?)
}

fn expansion_columns() -> Vec<Column> {
    vec![
        col("const_coef", "1", "A/(4 pi): coefficient of E^0 in the density"),
        col("inv_sqrt_coef", "length", "-+L/(8 pi): coefficient of E^(-1/2)"),
        col("delta_coef", "1", "coefficient of delta(E)"),
    ]
}

fn cmd_weyl(geometry: &PathBuf, bc: BoundaryCondition) -> Result<Report, CliError> {
    let b = read_geometry(geometry)?;
    let m = b.measures();
    let e = weyl_expansion(&m, bc);
    let mut r = Report::new("weyl");
    r.input("geometry", json!(geometry.display().to_string()));
    r.input("bc", json!(bc));
    r.columns = expansion_columns();
    r.columns.extend([
        col("curvature_part", "1", "(1/12 pi) integral of boundary curvature"),
        col("corner_part", "1", "sum over corners of (pi/alpha - alpha/pi)/24"),
        col("area", "length^2", "enclosed area"),
        col("perimeter", "length", "boundary length"),
        col("corners", "count", "number of corners"),
        col("corner_unverified", "flag", "corner part carried over from Dirichlet walls"),
    ]);
    r.rows.push(vec![
        num(e.const_coef),
        num(e.inv_sqrt_coef),
        num(e.delta_coef),
        num(e.breakdown.curvature_part),
        num(e.breakdown.corner_part),
        num(m.area),
        num(m.perimeter),
        json!(e.breakdown.per_corner.len()),
        json!(e.breakdown.corner_unverified),
    ]);
    for c in &e.breakdown.per_corner {
        r.notes.push(format!("corner alpha = {} contributes {}", c.alpha, c.coefficient));
    }
    Ok(r)
}

fn cmd_staircase(shape: ShapeArg, a: f64, b: f64, radius: f64, window: Option<&str>) -> Result<Report, CliError> {
    let mut r = Report::new("staircase");
    let (e1, e2, expansion, sp): (f64, f64, SpectralExpansion, _) = match shape {
        ShapeArg::Rectangle => {
            let (e1, e2) = match window {
                Some(w) => {
                    let v = parse_range(w, 2, "--window")?;
                    (v[0], v[1])
                }
                None => (500.0, 5000.0),
            };
            let boundary = crate::geometry::Boundary::polygon(&[[0.0, 0.0], [a, 0.0], [a, b], [0.0, b]])?;
            r.input("shape", json!("rectangle"));
            r.input("a", num(a));
            r.input("b", num(b));
            let sp = rectangle_spectrum(a, b, e2)?;
            (e1, e2, weyl_expansion(&boundary.measures(), BoundaryCondition::Dirichlet), sp)
        }
        ShapeArg::Disk => {
            let (e1, e2) = match window {
                Some(w) => {
                    let v = parse_range(w, 2, "--window")?;
                    (v[0], v[1])
                }
                None => (500.0, 4000.0),
            };
            let boundary = crate::geometry::Boundary::disk(radius)?;
            r.input("shape", json!("disk"));
            r.input("radius", num(radius));
            let sp = disk_spectrum(radius, e2)?;
            (e1, e2, weyl_expansion(&boundary.measures(), BoundaryCondition::Dirichlet), sp)
        }
    };
    r.input("window", json!([e1, e2]));
    let res = staircase_residual(&sp, &expansion, (e1, e2))?;
    r.columns = vec![
        col("mean", "count", "window mean of N(E) - A E/(4 pi) + L sqrt(E)/(4 pi)"),
        col("stderr", "count", "grid standard deviation over sqrt(eigenvalues in window)"),
        col("predicted", "count", "delta coefficient of the smooth density"),
        col("deviation", "count", "mean - predicted"),
        col("eigenvalues", "count", "eigenvalues in the window"),
        col("total_eigenvalues", "count", "eigenvalues up to the window end"),
    ];
    r.rows.push(vec![
        num(res.mean),
        num(res.stderr),
        num(expansion.delta_coef),
        num(res.mean - expansion.delta_coef),
        json!(res.eigenvalues_in_window),
        json!(sp.len()),
    ]);
    Ok(r)
}

fn cmd_corner(grid: &str, both_orders: bool) -> Result<Report, CliError> {
    let g = parse_range(grid, 3, "--alpha-grid")?;
    let steps = g[2];
    if !(steps >= 1.0 && steps.fract() == 0.0) {
        return Err(CliError::Usage(format!("--alpha-grid: STEPS must be a positive integer, got {steps}")));
    }
    let steps = steps as usize;
    let mut r = Report::new("corner");
    r.input("alpha_grid", json!(grid));
    r.input("both_orders", json!(both_orders));
    r.columns = vec![
        col("alpha", "rad", "interior angle"),
        col("weyl", "1", "(pi/alpha - alpha/pi)/24"),
        col("orbit", "1", "double-reflection orbits, alpha/(8 pi sin^2 alpha)"),
        col("edge", "1", "strip truncation, 1/(4 pi tan alpha)"),
        col("semiclassical", "1", "orbit + edge"),
        col("ratio", "1", "semiclassical / weyl"),
    ];
    let mult = if both_orders { 2.0 } else { 1.0 };
    for i in 0..steps {
        let alpha = if steps == 1 {
            g[0]
        } else {
            g[0] + (g[1] - g[0]) * i as f64 / (steps - 1) as f64
        };
        let c = corner_coeffs(alpha).map_err(|e| CliError::Usage(e.to_string()))?;
        let row = match c.semiclassical {
            Ok(s) => {
                let total = mult * s.orbit + s.edge_correction;
                vec![num(alpha), num(c.weyl), num(mult * s.orbit), num(s.edge_correction), num(total), num(total / c.weyl)]
            }
            Err(_) => vec![num(alpha), num(c.weyl), Value::Null, Value::Null, Value::Null, Value::Null],
        };
        r.rows.push(row);
    }
    r.notes.push("no closed double-reflection orbit exists for obtuse angles; those cells are empty".into());
    Ok(r)
}

fn cmd_ledger(bc: BoundaryCondition, verify: bool, tol: f64) -> Result<Report, CliError> {
    let l = signature_ledger(bc);
    let mut r = Report::new("ledger");
    r.input("bc", json!(bc));
    r.input("verify", json!(verify));
    r.columns = vec![
        col("signature", "", "signs of (x, y) on the outgoing then the return leg"),
        col("bounces", "count", "number of + signs"),
        col("area_units", "A/(4 pi)", "area coefficient"),
        col("length_units", "l/(8 pi sqrt E)", "length coefficient, l the side length"),
        col("delta_units", "delta(E)", "constant coefficient, exact"),
        col("delta_value", "delta(E)", "constant coefficient"),
    ];
    if verify {
        r.columns.extend([
            col("oracle_area", "A/(4 pi)", "quadrature in imaginary time"),
            col("oracle_length", "l/(8 pi sqrt E)", "quadrature in imaginary time"),
            col("oracle_delta", "delta(E)", "quadrature in imaginary time"),
            col("agrees", "flag", "all three within 1e-6"),
        ]);
    }
    for (sig, e) in SignSignature::all().into_iter().zip(&l.entries) {
        let mut row = vec![
            json!(e.signature),
            json!(e.bounces),
            json!(e.area_units.to_string()),
            json!(e.length_units.to_string()),
            json!(e.delta_units.to_string()),
            num(e.delta_units.to_f64()),
        ];
        if verify {
            let mut o = signature_oracle(sig, tol.min(1e-9))?;
            if bc == BoundaryCondition::Neumann && sig.bounce_count() % 2 == 1 {
                o.area_units = -o.area_units;
                o.length_units = -o.length_units;
                o.delta_units = -o.delta_units;
            }
            let agrees = (o.area_units - e.area_units.to_f64()).abs() < 1e-6
                && (o.length_units - e.length_units.to_f64()).abs() < 1e-6
                && (o.delta_units - e.delta_units.to_f64()).abs() < 1e-6;
            row.extend([num(o.area_units), num(o.length_units), num(o.delta_units), json!(agrees)]);
        }
        r.rows.push(row);
    }
    let mut total = vec![
        json!("total"),
        Value::Null,
        json!(l.area_total.to_string()),
        json!(l.length_total.to_string()),
        json!(l.delta_total.to_string()),
        num(l.delta_total.to_f64()),
    ];
    if verify {
        total.extend([Value::Null, Value::Null, Value::Null, Value::Null]);
    }
    r.rows.push(total);
    if l.derived_only {
        r.notes.push("Neumann entries follow from flipping odd-bounce signs only".into());
    }
    Ok(r)
}

fn cmd_fold(alpha: f64, tau_list: &[f64], levels: usize, both_orders: bool, tol: f64) -> Result<Report, CliError> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(CliError::Usage(format!("--alpha {alpha} outside (0, pi)")));
    }
    if tau_list.is_empty() || tau_list.iter().any(|t| !(*t > 0.0)) {
        return Err(CliError::Usage("--tau-list needs positive values".into()));
    }
    let mut r = Report::new("fold");
    r.input("alpha", num(alpha));
    r.input("tau_list", json!(tau_list));
    r.input("grid", json!(levels));
    r.input("both_orders", json!(both_orders));
    r.columns = vec![
        col("quantity", "", "row kind"),
        col("tau", "time", "imaginary time per leg"),
        col("value", "1/length^2", "broken-path kernel at r = sqrt(tau), theta1 = alpha/2, or the corner constant"),
        col("reference", "1/length^2", "closed double-reflection kernel at total time 2 tau, or the Weyl corner term"),
        col("ratio", "1", "value / reference"),
        col("error_estimate", "1", "refinement change plus ladder spread"),
    ];
    let mult = if both_orders { 2.0 } else { 1.0 };
    for &tau in tau_list {
        let rr = tau.sqrt();
        let k = mult * broken_path_propagator(rr, alpha / 2.0, alpha, tau, tol.min(1e-10))?;
        let kco2 = corner_orbit_kernel_imag(rr, alpha, 2.0 * tau);
        r.rows.push(vec![json!("broken_path"), num(tau), num(k), num(kco2), num(k / kco2), Value::Null]);
        let full = broken_path_full_plane(rr, alpha / 2.0, alpha, tau, tol.min(1e-10))?;
        r.rows.push(vec![json!("full_plane_fold"), num(tau), num(full), num(kco2), num(full / kco2), Value::Null]);
    }
    if alpha >= PI / 2.0 {
        let grid = GridSpec {
            levels: levels.max(1),
            ..GridSpec::default()
        };
        // the extraction needs 1/sqrt(tau) beyond the kite radius; coarser lists only drive the rows above
        let rc = corner_radius(alpha);
        let mut ladder: Vec<f64> = tau_list.iter().copied().filter(|t| 1.0 / t.sqrt() > rc).collect();
        ladder.dedup();
        if ladder.len() < 2 {
            ladder = default_tau_ladder(alpha);
            r.notes.push(format!("corner constant uses the default tau ladder {ladder:?}"));
        }
        let c = obtuse_corner_constant(alpha, grid, &ladder, tol)?;
        for l in &c.levels {
            r.rows.push(vec![
                json!(format!("corner_constant_density_{}", l.density)),
                Value::Null,
                num(l.value),
                num(c.weyl),
                num(l.value / c.weyl),
                num(l.refinement_change.unwrap_or(f64::NAN) + l.tau_spread),
            ]);
        }
        r.rows.push(vec![json!("corner_constant"), Value::Null, num(c.value), num(c.weyl), num(c.value / c.weyl), num(c.error_estimate)]);
        r.notes.push(format!("refinement certificate: {}", c.certified));
    } else {
        r.notes.push("corner constant is computed for alpha >= pi/2 only".into());
    }
    Ok(r)
}

fn cmd_monodromy(geometry: &PathBuf, start: &str, bounces: usize, seed: u64) -> Result<Report, CliError> {
    let b = read_geometry(geometry)?;
    let sv: Vec<f64> = start
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--start: cannot parse `{start}`")))?;
    if sv.len() != 2 {
        return Err(CliError::Usage(format!("--start expects S,V, got `{start}`")));
    }
    if bounces == 0 {
        return Err(CliError::Usage("--bounces must be positive".into()));
    }
    let p = BirkhoffCoord::new(sv[0], sv[1])?;
    let path = trace(&b, p, bounces)?;
    let m = chain_matrix(&b, &path)?;
    let fd = finite_difference_jacobian(&b, p, bounces, 1e-5)?;

    // closed form against the five-factor product on seeded random inputs
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v1 = rng.gen_range(0.05..1.0);
        let v2 = rng.gen_range(0.05..1.0);
        let l = rng.gen_range(0.01..3.0);
        let c1 = rng.gen_range(-2.0..2.0);
        let c2 = rng.gen_range(-2.0..2.0);
        let a = linearized_bounce_map(v1, v2, l, c1, c2)?;
        let f = linearized_bounce_map_factored(v1, v2, l, c1, c2)?;
        worst = worst.max(a.max_diff(&f));
    }

    let mut r = Report::new("monodromy");
    r.input("geometry", json!(geometry.display().to_string()));
    r.input("start", json!(sv));
    r.input("bounces", json!(bounces));
    r.input("seed", json!(seed));
    r.columns = vec![
        col("row", "", "bounce index or matrix name"),
        col("s", "length", "arclength of the bounce, or m11"),
        col("v", "1", "tangential velocity, or m12"),
        col("chord", "length", "chord length to this bounce, or m21"),
        col("m22", "1", "matrix entry m22"),
        col("det", "1", "determinant"),
    ];
    for (i, (q, l)) in path.iter().enumerate() {
        r.rows.push(vec![json!(i), num(q.s), num(q.v), num(*l), Value::Null, Value::Null]);
    }
    for (name, mat) in [("linearized", m), ("finite_difference", fd)] {
        r.rows.push(vec![json!(name), num(mat.m11), num(mat.m12), num(mat.m21), num(mat.m22), num(mat.det())]);
    }
    r.notes.push(format!("trace of linearized map: {}", m.trace()));
    r.notes.push(format!("closed form vs factored product, 100 seeded samples, max entry difference: {worst:e}"));
    r.notes.push(format!("linearized vs finite difference, max entry difference: {:e}", m.max_diff(&fd)));
    Ok(r)
}

fn cmd_green(y: f64, k: f64, tol: f64) -> Result<Report, CliError> {
    let g = single_reflection_green(y, k)?;
    let gs = green_stationary(y, k)?;
    let gt = green_from_time_integral(y, k, tol.min(1e-8))?;
    let mut r = Report::new("green");
    r.input("y", num(y));
    r.input("k", num(k));
    r.columns = vec![
        col("form", "", "how the Green's function is evaluated"),
        col("re", "1", "real part"),
        col("im", "1", "imaginary part"),
        col("abs", "1", "modulus"),
        col("abs_ratio_minus_one", "1", "|form| / |Hankel form| - 1"),
        col("error_estimate", "1", "quadrature error estimate"),
    ];
    for (name, v, err) in [
        ("hankel", g, Value::Null),
        ("time_integral", gt.value, num(gt.error_estimate)),
        ("stationary_phase", gs, Value::Null),
    ] {
        r.rows.push(vec![json!(name), num(v.re), num(v.im), num(v.norm()), num(v.norm() / g.norm() - 1.0), err]);
    }
    r.notes.push(format!("bound 1/(ky) for the stationary-phase modulus: {}", 1.0 / (k * y)));
    Ok(r)
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    match &cli.command {
        Command::Weyl { geometry, bc } => cmd_weyl(geometry, *bc),
        Command::Staircase { shape, a, b, radius, window } => cmd_staircase(*shape, *a, *b, *radius, window.as_deref()),
        Command::Corner { alpha_grid, both_orders } => cmd_corner(alpha_grid, *both_orders),
        Command::Ledger { bc, verify } => cmd_ledger(*bc, *verify, cli.tol),
        Command::Fold { alpha, tau_list, grid, both_orders } => cmd_fold(*alpha, tau_list, *grid, *both_orders, cli.tol),
        Command::Monodromy { geometry, start, bounces } => cmd_monodromy(geometry, start, *bounces, cli.seed),
        Command::Green { y, k } => cmd_green(*y, *k, cli.tol),
    }
}

/// Parses `argv` (program name first), runs the command and writes the
/// report; returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{}", e.render());
                    return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_USAGE } else { EXIT_OK };
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => match report.write(cli.format, out) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
