//! Two-piece closed paths built with the folding identity
//! `K(r, r'; t) = ∫ K(r, r''; t - t'') K(r'', r'; t'') dr''`.
//!
//! All numerical propagator integrals run in imaginary time `t = -i tau`,
//! where the free kernel is the heat kernel `exp(-d^2 / 4tau) / (4 pi tau)`.
//! A heat-trace coefficient of `1 / (4 pi beta)`, `1 / (8 sqrt(pi beta))` or
//! `beta^0` maps to the density coefficient of `A / 4pi`, `L / (8 pi sqrt E)`
//! or `delta(E)` respectively.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Add;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::specfun::{erfc, integrate_box, integrate_interval, QuadError};
use crate::weyl::BoundaryCondition;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoldingError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not converged: estimate {value} with error {error_estimate} above tolerance {tol}")]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        tol: f64,
    },
}

/// Heat kernel of the plane at squared distance `d2`.
pub fn heat_kernel(d2: f64, tau: f64) -> f64 {
    (-d2 / (4.0 * tau)).exp() / (4.0 * PI * tau)
}

/// Number `a + b/pi + c/pi^2` with rational coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PiRational {
    pub rational: Ratio<i64>,
    pub inv_pi: Ratio<i64>,
    pub inv_pi2: Ratio<i64>,
}

impl PiRational {
    pub const ZERO: PiRational = PiRational {
        rational: Ratio::new_raw(0, 1),
        inv_pi: Ratio::new_raw(0, 1),
        inv_pi2: Ratio::new_raw(0, 1),
    };

    pub fn rational(n: i64, d: i64) -> Self {
        PiRational {
            rational: Ratio::new(n, d),
            ..Self::ZERO
        }
    }

    pub fn over_pi(n: i64, d: i64) -> Self {
        PiRational {
            inv_pi: Ratio::new(n, d),
            ..Self::ZERO
        }
    }

    pub fn over_pi2(n: i64, d: i64) -> Self {
        PiRational {
            inv_pi2: Ratio::new(n, d),
            ..Self::ZERO
        }
    }

    pub fn neg(self) -> Self {
        PiRational {
            rational: -self.rational,
            inv_pi: -self.inv_pi,
            inv_pi2: -self.inv_pi2,
        }
    }

    pub fn to_f64(self) -> f64 {
        let r = |q: Ratio<i64>| *q.numer() as f64 / *q.denom() as f64;
        r(self.rational) + r(self.inv_pi) / PI + r(self.inv_pi2) / (PI * PI)
    }
}

impl Add for PiRational {
    type Output = PiRational;
    fn add(self, o: PiRational) -> PiRational {
        PiRational {
            rational: self.rational + o.rational,
            inv_pi: self.inv_pi + o.inv_pi,
            inv_pi2: self.inv_pi2 + o.inv_pi2,
        }
    }
}

impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if *self.rational.numer() != 0 {
            parts.push(format!("{}", self.rational));
        }
        if *self.inv_pi.numer() != 0 {
            parts.push(format!("({})/pi", self.inv_pi));
        }
        if *self.inv_pi2.numer() != 0 {
            parts.push(format!("({})/pi^2", self.inv_pi2));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl Serialize for PiRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `true` is a `+` sign: the coordinate enters as `x + x0` (a bounce).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SignSignature {
    pub sx1: bool,
    pub sy1: bool,
    pub sx2: bool,
    pub sy2: bool,
}

impl SignSignature {
    pub fn from_index(i: usize) -> Self {
        SignSignature {
            sx1: i & 8 != 0,
            sy1: i & 4 != 0,
            sx2: i & 2 != 0,
            sy2: i & 1 != 0,
        }
    }

    pub fn all() -> Vec<SignSignature> {
        (0..16).map(Self::from_index).collect()
    }

    pub fn bounce_count(&self) -> u32 {
        [self.sx1, self.sy1, self.sx2, self.sy2].iter().filter(|&&b| b).count() as u32
    }

    pub fn label(&self) -> String {
        [self.sx1, self.sy1, self.sx2, self.sy2]
            .iter()
            .map(|&b| if b { '+' } else { '-' })
            .collect()
    }
}

impl std::str::FromStr for SignSignature {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let b: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '+' => Ok(true),
                '-' => Ok(false),
                other => Err(format!("bad sign `{other}`")),
            })
            .collect::<Result<_, _>>()?;
        if b.len() != 4 {
            return Err(format!("signature `{s}` must have four signs"));
        }
        Ok(SignSignature {
            sx1: b[0],
            sy1: b[1],
            sx2: b[2],
            sy2: b[3],
        })
    }
}

/// Contribution of one signature: `area_units` of `A/4pi`, `length_units` of
/// `l/(8 pi sqrt E)` with `l` the side length, `delta_units` of `delta(E)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathContribution {
    pub signature: String,
    pub bounces: u32,
    pub area_units: PiRational,
    pub length_units: PiRational,
    pub delta_units: PiRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureLedger {
    pub bc: BoundaryCondition,
    pub entries: Vec<PathContribution>,
    pub area_total: PiRational,
    pub length_total: PiRational,
    pub delta_total: PiRational,
    /// Neumann values follow from the parity rule only.
    pub derived_only: bool,
}

fn dirichlet_entry(sig: SignSignature) -> (PiRational, PiRational, PiRational) {
    let z = PiRational::ZERO;
    let label = sig.label();
    match (sig.bounce_count(), label.as_str()) {
        (0, _) => (PiRational::rational(1, 1), z, z),
        (1, _) => (z, PiRational::rational(-1, 2), PiRational::over_pi(1, 32)),
        (2, "-+-+") | (2, "+-+-") => (z, PiRational::rational(1, 2), PiRational::over_pi2(-1, 16)),
        (2, _) => (z, z, PiRational::rational(1, 64)),
        (3, _) => (z, z, PiRational::over_pi(-1, 32)),
        _ => (z, z, PiRational::over_pi2(1, 16)),
    }
}

/// The 16-entry table of closed two-piece paths for a right-angle corner.
pub fn signature_ledger(bc: BoundaryCondition) -> SignatureLedger {
    let mut entries = Vec::with_capacity(16);
    let (mut a, mut l, mut d) = (PiRational::ZERO, PiRational::ZERO, PiRational::ZERO);
    for sig in SignSignature::all() {
        let (mut ea, mut el, mut ed) = dirichlet_entry(sig);
        if bc == BoundaryCondition::Neumann && sig.bounce_count() % 2 == 1 {
            ea = ea.neg();
            el = el.neg();
            ed = ed.neg();
        }
        a = a + ea;
        l = l + el;
        d = d + ed;
        entries.push(PathContribution {
            signature: sig.label(),
            bounces: sig.bounce_count(),
            area_units: ea,
            length_units: el,
            delta_units: ed,
        });
    }
    SignatureLedger {
        bc,
        entries,
        area_total: a,
        length_total: l,
        delta_total: d,
        derived_only: bc == BoundaryCondition::Neumann,
    }
}

/// Floating-point contribution of one signature from the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericContribution {
    pub area_units: f64,
    pub length_units: f64,
    pub delta_units: f64,
    pub error_estimate: f64,
}

/// Per-coordinate factor `∫∫ k(x, x0) k(x0, x) dx dx0` over `x, x0 > 0`,
/// returned as `(a, b)` for the form `a X + b` with `X` the side cutoff, in
/// units where `tau = 1` and the kernel is unnormalized.
fn coordinate_factor(first: bool, second: bool, tol: f64) -> Result<(f64, f64, f64), FoldingError> {
    let cut = 40.0;
    let real = |v: f64| Complex64::new(v, 0.0);
    let r = match (first, second) {
        (false, false) => {
            // bulk sqrt(2 pi) X minus the part of the Gaussian lost across x0 = 0
            let q = integrate_box(
                |x, x0| real((-(x - x0).powi(2) / 2.0).exp()),
                (0.0, cut),
                (-cut, 0.0),
                tol,
            )?;
            ((2.0 * PI).sqrt(), -q.value.re, q.error_estimate)
        }
        (true, true) => {
            let q = integrate_box(|x, x0| real((-(x + x0).powi(2) / 2.0).exp()), (0.0, cut), (0.0, cut), tol)?;
            (0.0, q.value.re, q.error_estimate)
        }
        _ => {
            let q = integrate_box(
                |x, x0| real((-((x + x0).powi(2) + (x - x0).powi(2)) / 4.0).exp()),
                (0.0, cut),
                (0.0, cut),
                tol,
            )?;
            (0.0, q.value.re, q.error_estimate)
        }
    };
    Ok(r)
}

/// Quadrature oracle for one Dirichlet signature on the quarter plane.
///
/// Each leg is a heat kernel over time `tau = 1`, so `beta = 2`. The
/// intermediate point is confined to the quadrant, except for the path
/// without bounces, which is the plain composition over the whole plane and
/// carries the area term only.
pub fn signature_oracle(sig: SignSignature, tol: f64) -> Result<NumericContribution, FoldingError> {
    let beta: f64 = 2.0;
    let norm = 1.0 / (4.0 * PI).powi(2);
    let sign = if sig.bounce_count() % 2 == 0 { 1.0 } else { -1.0 };
    let (ax, bx, ex) = if sig.bounce_count() == 0 {
        ((2.0 * PI).sqrt(), 0.0, 0.0)
    } else {
        coordinate_factor(sig.sx1, sig.sx2, tol)?
    };
    let (ay, by, ey) = if sig.bounce_count() == 0 {
        ((2.0 * PI).sqrt(), 0.0, 0.0)
    } else {
        coordinate_factor(sig.sy1, sig.sy2, tol)?
    };
    let area_unit = 1.0 / (4.0 * PI * beta);
    let length_unit = 1.0 / (8.0 * (PI * beta).sqrt());
    let area = sign * norm * ax * ay / area_unit;
    // equal sides: add the coefficients of X and Y
    let length = sign * norm * (ax * by + bx * ay) / length_unit;
    let delta = sign * norm * bx * by;
    let err = norm * (ex * (by.abs() + ay) + ey * (bx.abs() + ax)) / length_unit.min(1.0);
    // adding 0.0 turns -0.0 into 0.0
    Ok(NumericContribution {
        area_units: area + 0.0,
        length_units: length + 0.0,
        delta_units: delta + 0.0,
        error_estimate: err,
    })
}

/// Rectangle `[x0, x1] x [y0, y1]` of intermediate points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Region {
    /// Square of half-width `half` centered at `c`, standing in for the plane.
    pub fn around(c: [f64; 2], half: f64) -> Self {
        Region {
            x: (c[0] - half, c[0] + half),
            y: (c[1] - half, c[1] + half),
        }
    }
}

/// `∫_region K1(r, r'') K2(r'', r') dr''`.
pub fn fold<K1, K2>(k1: K1, k2: K2, r: [f64; 2], r_end: [f64; 2], region: Region, tol: f64) -> Result<f64, FoldingError>
where
    K1: Fn([f64; 2], [f64; 2]) -> f64,
    K2: Fn([f64; 2], [f64; 2]) -> f64,
{
    let q = integrate_box(
        |x, y| Complex64::new(k1(r, [x, y]) * k2([x, y], r_end), 0.0),
        region.x,
        region.y,
        tol,
    )?;
    Ok(q.value.re)
}

/// Free heat kernel over time `tau` as a two-point function.
pub fn free_kernel(tau: f64) -> impl Fn([f64; 2], [f64; 2]) -> f64 {
    move |a, b| heat_kernel((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2), tau)
}

/// `∫_0^∞ r0 exp(-(r0^2 - 2 r0 p + m2) / (2 tau)) dr0` for `m2 >= p^2`.
pub(crate) fn radial_gaussian(p: f64, m2: f64, tau: f64) -> f64 {
    let s = (2.0 * tau).sqrt();
    let lead = tau * (-m2 / (2.0 * tau)).exp();
    let tail = if p == 0.0 {
        0.0
    } else {
        p * (PI * tau / 2.0).sqrt() * (-(m2 - p * p).max(0.0) / (2.0 * tau)).exp() * erfc(-p / s)
    };
    lead + tail
}

fn check_broken_args(r: f64, theta1: f64, alpha: f64, tau: f64) -> Result<(), FoldingError> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(FoldingError::InvalidArgument(format!("alpha = {alpha} outside (0, pi)")));
    }
    if !(theta1 >= 0.0 && theta1 <= alpha) {
        return Err(FoldingError::InvalidArgument(format!("theta1 = {theta1} outside [0, {alpha}]")));
    }
    if !(r > 0.0 && tau > 0.0) {
        return Err(FoldingError::InvalidArgument("r and tau must be positive".into()));
    }
    Ok(())
}

/// Two-piece path from `Q = (r, theta1)` to its second image
/// `Q2 = (r, 2 alpha + theta1)` through `Q' = (r0, theta0)`, both legs over
/// imaginary time `tau`, with measure `r0 dr0 dtheta0` and
/// `0 <= theta0 <= 3 alpha`, `|theta0 - theta1| <= pi`, `|theta0 - theta2| <= pi`.
pub fn broken_path_propagator(r: f64, theta1: f64, alpha: f64, tau: f64, tol: f64) -> Result<f64, FoldingError> {
    check_broken_args(r, theta1, alpha, tau)?;
    let theta2 = 2.0 * alpha + theta1;
    let lo = 0f64.max(theta1 - PI).max(theta2 - PI);
    let hi = (3.0 * alpha).min(theta1 + PI).min(theta2 + PI);
    if hi <= lo {
        return Ok(0.0);
    }
    let norm = 1.0 / (4.0 * PI * tau).powi(2);
    let f = |t0: f64| {
        let c = (t0 - theta1).cos() + (t0 - theta2).cos();
        let p = 0.5 * r * c;
        // exponent (2 r^2 + 2 r0^2 - 2 r r0 c) / 4tau = (r0^2 - 2 r0 p + r^2) / 2tau
        Complex64::new(radial_gaussian(p, r * r, tau), 0.0)
    };
    let mid = 0.5 * (theta1 + theta2);
    let q = if mid > lo && mid < hi {
        let a = integrate_interval(f, lo, mid, tol)?;
        let b = integrate_interval(f, mid, hi, tol)?;
        a.value + b.value
    } else {
        integrate_interval(f, lo, hi, tol)?.value
    };
    Ok(norm * q.re)
}

/// Closed double-reflection propagator in imaginary time, total time `t`:
/// `exp(-(r sin alpha)^2 / t) / (4 pi t)`.
pub fn corner_orbit_kernel_imag(r: f64, alpha: f64, t: f64) -> f64 {
    let a = r * alpha.sin();
    (-a * a / t).exp() / (4.0 * PI * t)
}

/// The same two-piece path with the intermediate point over the whole plane.
pub fn broken_path_full_plane(r: f64, theta1: f64, alpha: f64, tau: f64, tol: f64) -> Result<f64, FoldingError> {
    check_broken_args(r, theta1, alpha, tau)?;
    let q = [r * theta1.cos(), r * theta1.sin()];
    let t2 = 2.0 * alpha + theta1;
    let q2 = [r * t2.cos(), r * t2.sin()];
    let mid = [0.5 * (q[0] + q2[0]), 0.5 * (q[1] + q2[1])];
    let k = free_kernel(tau);
    fold(&k, &k, q, q2, Region::around(mid, 14.0 * tau.sqrt()), tol)
}

/// Composite-panel resolution for [`obtuse_corner_constant`]: `density`
/// panels per unit length (in units of the Gaussian width) on the coarsest
/// level, doubled `levels - 1` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub density: f64,
    pub levels: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            density: 0.5,
            levels: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridLevel {
    pub density: f64,
    pub value: f64,
    /// Largest deviation among the pairwise eliminations over the tau ladder.
    pub tau_spread: f64,
    /// Change from the previous level.
    pub refinement_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerConstant {
    pub alpha: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub levels: Vec<GridLevel>,
    /// Every refinement change is at most half the previous one, or below
    /// the inner quadrature floor.
    pub certified: bool,
    /// `(pi/alpha - alpha/pi) / 24` for comparison.
    pub weyl: f64,
}

/// Half-width (in Gaussian widths) of the wall strips.
const STRIP_WIDTH: f64 = 9.0;
/// Refinement changes below this are at the level of the inner quadrature.
const REFINEMENT_FLOOR: f64 = 1e-10;
const INNER_TOL: f64 = 1e-12;

const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Composite 4-point Gauss-Legendre rule on `[a, b]` with panels no longer
/// than `1 / density`.
fn gl_nodes(a: f64, b: f64, density: f64) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let panels = ((b - a) * density).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(4 * panels);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for k in 0..4 {
            out.push((c + 0.5 * h * GL4_X[k], 0.5 * h * GL4_W[k]));
        }
    }
    out
}

/// Radius inside which corner effects are resolved explicitly.
pub fn corner_radius(alpha: f64) -> f64 {
    STRIP_WIDTH / (alpha / 2.0).sin().min(alpha.sin())
}

/// A tau ladder whose kites comfortably contain the corner region.
pub fn default_tau_ladder(alpha: f64) -> Vec<f64> {
    let rc = corner_radius(alpha);
    [8.0, 16.0, 24.0].iter().map(|d| 1.0 / (rc + d).powi(2)).collect()
}

/// Images of `Q = (r, theta)` as (polar angle, reflection sign): `Q`, `Q1`,
/// `Q-1`, `Q2`, `Q-2`.
fn images(theta: f64, alpha: f64) -> [(f64, f64); 5] {
    [
        (theta, 1.0),
        (2.0 * alpha - theta, -1.0),
        (-theta, -1.0),
        (2.0 * alpha + theta, 1.0),
        (-2.0 * alpha + theta, 1.0),
    ]
}

/// Two-piece return density at `Q = (r, theta)` with `tau = 1` per leg,
/// summed over pairs of images other than the direct pair. An image takes
/// part only when seen from `Q'` within an angle `pi`.
fn return_density(r: f64, theta: f64, alpha: f64) -> Result<f64, FoldingError> {
    let im = images(theta, alpha);
    let pts: Vec<[f64; 2]> = im.iter().map(|(a, _)| [r * a.cos(), r * a.sin()]).collect();
    let mut total = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            if i == 0 && j == 0 {
                continue;
            }
            let (ci, cj) = (pts[i], pts[j]);
            let d2 = (ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2);
            if d2 / 8.0 > 700.0 {
                continue;
            }
            let lo = 0f64.max(im[i].0 - PI).max(im[j].0 - PI);
            let hi = alpha.min(im[i].0 + PI).min(im[j].0 + PI);
            if hi <= lo {
                continue;
            }
            let m = [0.5 * (ci[0] + cj[0]), 0.5 * (ci[1] + cj[1])];
            let m2 = m[0] * m[0] + m[1] * m[1];
            let f = |t0: f64| {
                let p = m[0] * t0.cos() + m[1] * t0.sin();
                Complex64::new(radial_gaussian(p, m2, 1.0), 0.0)
            };
            let peak = m[1].atan2(m[0]);
            let v = if m2 > 0.0 && peak > lo && peak < hi {
                integrate_interval(f, lo, peak, INNER_TOL)?.value.re + integrate_interval(f, peak, hi, INNER_TOL)?.value.re
            } else {
                integrate_interval(f, lo, hi, INNER_TOL)?.value.re
            };
            total += im[i].1 * im[j].1 * (-d2 / 8.0).exp() * v;
        }
    }
    Ok(total / (4.0 * PI).powi(2))
}

/// Trace over the kite `{proj_OA <= L, proj_OB <= L}` for each `L` in
/// `sizes` (ascending), at one grid density.
fn kite_traces(alpha: f64, sizes: &[f64], density: f64) -> Result<Vec<f64>, FoldingError> {
    let rc = corner_radius(alpha);
    // corner sector, half of it by the mirror symmetry theta -> alpha - theta
    let half = alpha / 2.0;
    let mut cuts = vec![0.0, half];
    for b in [PI - alpha, 2.0 * alpha - PI] {
        if b > 0.0 && b < half {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut sector = 0.0;
    for (rr, wr) in gl_nodes(0.0, rc, density) {
        for w in cuts.windows(2) {
            for (t, wt) in gl_nodes(w[0], w[1], density * rr.max(1.0)) {
                sector += wr * wt * rr * return_density(rr, t, alpha)?;
            }
        }
    }
    // wall strip along OA beyond the sector, cumulative in its length
    let mut strip = vec![0.0; sizes.len()];
    for (d, wd) in gl_nodes(0.0, STRIP_WIDTH, density) {
        let mut start = (rc * rc - d * d).max(0.0).sqrt();
        let mut acc = 0.0;
        for (k, &l) in sizes.iter().enumerate() {
            for (s, ws) in gl_nodes(start, l, density) {
                acc += wd * ws * return_density(s.hypot(d), d.atan2(s), alpha)?;
            }
            start = start.max(l);
            strip[k] += acc;
        }
    }
    Ok(strip.iter().map(|s| 2.0 * (sector + s)).collect())
}

/// Delta-coefficient of a corner from two-piece paths with up to two
/// reflections per piece, in imaginary time.
///
/// For each grid level the trace over kites of size `1/sqrt(tau)` is fitted
/// to `a L + C` pairwise over `tau_ladder`; `C` from the two smallest `tau`
/// is the level's value. The estimate is reported with the last refinement
/// change plus the ladder spread.
pub fn obtuse_corner_constant(alpha: f64, grid: GridSpec, tau_ladder: &[f64], tol: f64) -> Result<CornerConstant, FoldingError> {
    if !(alpha >= PI / 2.0 && alpha < PI) {
        return Err(FoldingError::InvalidArgument(format!("alpha = {alpha} outside [pi/2, pi)")));
    }
    if tau_ladder.len() < 2 || grid.levels == 0 || !(grid.density > 0.0) {
        return Err(FoldingError::InvalidArgument("need two or more tau values and one or more levels".into()));
    }
    let mut sizes: Vec<f64> = tau_ladder.iter().map(|t| 1.0 / t.sqrt()).collect();
    sizes.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    sizes.dedup();
    let rc = corner_radius(alpha);
    if sizes.len() < 2 || !(sizes[0] > rc) {
        return Err(FoldingError::InvalidArgument(format!(
            "tau ladder too coarse: 1/sqrt(tau) must exceed {rc:.3}"
        )));
    }
    let mut levels: Vec<GridLevel> = Vec::new();
    for lvl in 0..grid.levels {
        let density = grid.density * 2f64.powi(lvl as i32);
        let z = kite_traces(alpha, &sizes, density)?;
        let n = sizes.len();
        let elim = |i: usize, j: usize| (sizes[j] * z[i] - sizes[i] * z[j]) / (sizes[j] - sizes[i]);
        let value = elim(n - 2, n - 1);
        let mut spread: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                spread = spread.max((elim(i, j) - value).abs());
            }
        }
        let refinement_change = levels.last().map(|p| (value - p.value).abs());
        levels.push(GridLevel {
            density,
            value,
            tau_spread: spread,
            refinement_change,
        });
    }
    let changes: Vec<f64> = levels.iter().filter_map(|l| l.refinement_change).collect();
    let certified = changes.len() >= 2
        && changes.windows(2).all(|w| w[1] <= 0.5 * w[0] || w[1] < REFINEMENT_FLOOR);
    let last = levels.last().expect("one or more levels");
    let error_estimate = last.refinement_change.unwrap_or(f64::INFINITY) + last.tau_spread;
    if !(error_estimate <= tol) {
        return Err(FoldingError::NonConvergence {
            value: last.value,
            error_estimate,
            tol,
        });
    }
    Ok(CornerConstant {
        alpha,
        value: last.value,
        error_estimate,
        levels: levels.clone(),
        certified,
        weyl: crate::weyl::weyl_corner_term(alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_totals_exact() {
        let l = signature_ledger(BoundaryCondition::Dirichlet);
        assert_eq!(l.entries.len(), 16);
        assert_eq!(l.area_total, PiRational::rational(1, 1));
        assert_eq!(l.length_total, PiRational::rational(-1, 1));
        assert_eq!(l.delta_total, PiRational::rational(1, 16) + PiRational::over_pi2(-1, 16));
        assert!(!l.derived_only);
        let pppp = l.entries.iter().find(|e| e.signature == "++++").unwrap();
        assert_eq!(pppp.delta_units, PiRational::over_pi2(1, 16));
        assert_eq!(l.delta_total.to_string(), "1/16 + (-1/16)/pi^2");
    }

    #[test]
    fn neumann_flips_odd_entries() {
        let d = signature_ledger(BoundaryCondition::Dirichlet);
        let n = signature_ledger(BoundaryCondition::Neumann);
        assert!(n.derived_only);
        for (a, b) in d.entries.iter().zip(&n.entries) {
            if a.bounces % 2 == 1 {
                assert_eq!(a.delta_units, b.delta_units.neg());
                assert_eq!(a.length_units, b.length_units.neg());
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn signature_parsing() {
        let s: SignSignature = "+--+".parse().unwrap();
        assert_eq!(s.bounce_count(), 2);
        assert_eq!(s.label(), "+--+");
        assert!("+-+".parse::<SignSignature>().is_err());
        assert!("+-x+".parse::<SignSignature>().is_err());
    }

    #[test]
    fn oracle_delta_entries() {
        let table = signature_ledger(BoundaryCondition::Dirichlet);
        for (sig, e) in SignSignature::all().into_iter().zip(&table.entries) {
            let o = signature_oracle(sig, 1e-11).unwrap();
            assert!((o.delta_units - e.delta_units.to_f64()).abs() < 1e-6, "{}: {o:?}", e.signature);
            assert!((o.area_units - e.area_units.to_f64()).abs() < 1e-6, "{}", e.signature);
        }
    }

    #[test]
    fn oracle_single_bounce_length() {
        let o = signature_oracle("+---".parse().unwrap(), 1e-11).unwrap();
        assert!((o.length_units + 0.5).abs() < 1e-6);
        let o = signature_oracle("-+-+".parse().unwrap(), 1e-11).unwrap();
        assert!((o.length_units - 1.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn semigroup() {
        let pairs = [([0.1, 0.2], [0.5, -0.3], 0.3, 0.2), ([1.0, 1.0], [1.2, 0.7], 0.05, 0.1), ([-0.4, 0.0], [0.3, 0.3], 0.5, 0.5)];
        for (a, b, t1, t2) in pairs {
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let v = fold(free_kernel(t1), free_kernel(t2), a, b, Region::around(mid, 14.0 * (t1 + t2).sqrt()), 1e-12).unwrap();
            let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
            let want = heat_kernel(d2, t1 + t2);
            assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
        }
    }

    #[test]
    fn half_plane_leaks() {
        let (a, b, t) = ([0.0, 0.2], [0.3, 0.1], 0.1);
        let half = Region { x: (-5.0, 5.0), y: (0.0, 5.0) };
        let v = fold(free_kernel(t), free_kernel(t), a, b, half, 1e-12).unwrap();
        let want = heat_kernel(0.09 + 0.01, 2.0 * t);
        assert!(v < 0.9 * want);
    }

    #[test]
    fn radial_closed_form() {
        for &(p, m2, tau) in &[(0.3, 0.5, 0.2), (-0.4, 0.3, 1.0), (1.0, 1.0, 0.1)] {
            let q = integrate_interval(
                |r0: f64| Complex64::new(r0 * (-(r0 * r0 - 2.0 * r0 * p + m2) / (2.0 * tau)).exp(), 0.0),
                0.0,
                30.0,
                1e-13,
            )
            .unwrap();
            assert!((q.value.re - radial_gaussian(p, m2, tau)).abs() < 1e-12);
        }
    }

    #[test]
    fn right_angle_broken_path_is_half_corner_kernel() {
        let alpha = PI / 2.0;
        for &(r, tau) in &[(1.0, 0.3), (0.5, 0.05), (2.0, 1.0)] {
            let kco2 = corner_orbit_kernel_imag(r, alpha, 2.0 * tau);
            for &t1 in &[0.0, 0.3, 1.2, alpha] {
                let k = broken_path_propagator(r, t1, alpha, tau, 1e-12).unwrap();
                assert!((k - 0.5 * kco2).abs() < 1e-10 * kco2, "{k} vs {}", 0.5 * kco2);
            }
            let avg = integrate_interval(
                |t1| Complex64::new(broken_path_propagator(r, t1, alpha, tau, 1e-12).unwrap(), 0.0),
                0.0,
                alpha,
                1e-12,
            )
            .unwrap();
            assert!((avg.value.re - PI / 2.0 * 0.5 * kco2).abs() < 1e-9 * kco2);
        }
    }

    #[test]
    fn full_plane_fold_is_corner_kernel() {
        for &(r, t1, alpha, tau) in &[(1.0, 0.4, 1.0, 0.2), (0.7, 0.1, PI / 2.0, 0.1), (1.5, 0.3, 0.5, 0.5)] {
            let v = broken_path_full_plane(r, t1, alpha, tau, 1e-12).unwrap();
            let want = corner_orbit_kernel_imag(r, alpha, 2.0 * tau);
            assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
        }
    }

    #[test]
    fn broken_path_scaling() {
        let a = broken_path_propagator(1.0, 0.2, 1.1, 0.3, 1e-12).unwrap();
        let b = broken_path_propagator(2.0, 0.2, 1.1, 1.2, 1e-12).unwrap();
        // r^2/tau fixed: the value scales as 1/tau
        assert!((a * 0.3 - b * 1.2).abs() < 1e-12 * a);
    }

    #[test]
    fn right_angle_calibration() {
        let alpha = PI / 2.0;
        let c = obtuse_corner_constant(alpha, GridSpec::default(), &default_tau_ladder(alpha), 1e-3).unwrap();
        let want = 1.0 / 16.0 - 1.0 / (16.0 * PI * PI);
        assert!((c.value - want).abs() < 0.01 * want, "{c:?}");
        assert!(c.certified, "{c:?}");
    }

    #[test]
    fn obtuse_values_certified_and_vanishing() {
        let mut prev = f64::INFINITY;
        for &alpha in &[2.0 * PI / 3.0, 0.8 * PI, 0.9 * PI] {
            let c = obtuse_corner_constant(alpha, GridSpec::default(), &default_tau_ladder(alpha), 1e-6).unwrap();
            assert!(c.certified, "{c:?}");
            assert!(c.value > 0.0 && c.value < prev);
            assert!(c.value < c.weyl);
            prev = c.value;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn obtuse_rejects_coarse_ladder() {
        assert!(matches!(
            obtuse_corner_constant(2.0, GridSpec::default(), &[0.1, 0.05], 1e-6),
            Err(FoldingError::InvalidArgument(_))
        ));
        assert!(matches!(
            obtuse_corner_constant(2.0, GridSpec { density: 0.25, levels: 1 }, &default_tau_ladder(2.0), 1e-6),
            Err(FoldingError::NonConvergence { .. })
        ));
    }
}
