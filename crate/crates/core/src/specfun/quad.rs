//! Adaptive Gauss-Kronrod quadrature.
//!
//! Finite intervals use a global adaptive bisection on the 7/15 Gauss-Kronrod
//! pair. Semi-infinite oscillatory integrals are made absolutely convergent by
//! an exponential damping `exp(-eps (z - start))`, evaluated on a geometric
//! ladder of `eps`, and Richardson-extrapolated to `eps -> 0`.
//!
//! Subdivision order and summation order are fixed, so repeated calls with the
//! same inputs are bit-identical.

use num_complex::Complex64;
use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Maximum number of subintervals per finite interval.
const MAX_INTERVALS: usize = 2000;
/// Damped tails are truncated where `eps * (z - start)` reaches this value.
const DAMPING_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: best value {best:?}, error estimate {error_estimate:e}")]
    NonConvergence {
        best: Complex64,
        error_estimate: f64,
        evaluations: usize,
    },
    #[error("invalid integration domain: {0}")]
    InvalidDomain(String),
}

impl QuadError {
    /// Best available value, if any, for callers that accept partial results.
    pub fn best(&self) -> Option<QuadratureResult> {
        match *self {
            QuadError::NonConvergence {
                best,
                error_estimate,
                evaluations,
            } => Some(QuadratureResult {
                value: best,
                error_estimate,
                evaluations,
            }),
            QuadError::InvalidDomain(_) => None,
        }
    }
}

/// Geometric ladder `eps_j = eps0 / 2^j`, `j = 0 .. levels`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsLadder {
    pub eps0: f64,
    pub levels: usize,
}

impl EpsLadder {
    pub fn values(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|j| self.eps0 / f64::powi(2.0, j as i32))
            .collect()
    }
}

/// One-dimensional integration domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    /// `[start, inf)` with damping `exp(-eps (z - start))` on `ladder`, integrated
    /// panel-by-panel with panels of width `period` (the oscillation scale).
    DampedRay {
        start: f64,
        period: f64,
        ladder: EpsLadder,
    },
}

struct Cell {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Cell {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = fc.norm() * WGK[7];
    let mut fv = [Complex64::new(0.0, 0.0); 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kron += (f1 + f2) * WGK[j];
        res_abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[2 * j] - mean).norm() + (fv[2 * j + 1] - mean).norm());
    }
    let abs_half = half.abs();
    res_asc *= abs_half;
    res_abs *= abs_half;
    let mut err = ((kron - gauss) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Cell {
        a,
        b,
        value: kron * half,
        error: err,
    }
}

/// Global adaptive quadrature of `f` over `[a, b]` to absolute tolerance `tol`
/// (relative tolerance `tol` is also accepted when the result is large).
pub fn integrate_interval<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult, QuadError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadError::InvalidDomain(format!("[{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let mut cells = vec![gk15(&f, a, b)];
    let mut evaluations = 15;
    loop {
        let total_err: f64 = cells.iter().map(|c| c.error).sum();
        let total: Complex64 = sum_ordered(&cells);
        if total_err <= tol.max(tol * total.norm()) {
            return Ok(QuadratureResult {
                value: total,
                error_estimate: total_err,
                evaluations,
            });
        }
        if cells.len() >= MAX_INTERVALS {
            return Err(QuadError::NonConvergence {
                best: total,
                error_estimate: total_err,
                evaluations,
            });
        }
        // split the worst cell; ties resolved by position
        let (worst, _) = cells
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, c)| {
                if c.error > be {
                    (i, c.error)
                } else {
                    (bi, be)
                }
            });
        let cell = cells.remove(worst);
        let mid = 0.5 * (cell.a + cell.b);
        if !(mid > cell.a.min(cell.b) && mid < cell.a.max(cell.b)) {
            return Err(QuadError::NonConvergence {
                best: total,
                error_estimate: total_err,
                evaluations,
            });
        }
        let left = gk15(&f, cell.a, mid);
        let right = gk15(&f, mid, cell.b);
        evaluations += 30;
        cells.insert(worst, right);
        cells.insert(worst, left);
    }
}

fn sum_ordered(cells: &[Cell]) -> Complex64 {
    cells.iter().fold(Complex64::new(0.0, 0.0), |s, c| s + c.value)
}

/// Integrate `f` over a one-dimensional domain.
///
/// For [`Domain::DampedRay`] the returned error estimate combines the
/// quadrature error with the spread of the last two Richardson columns.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    domain: &Domain,
    tol: f64,
) -> Result<QuadratureResult, QuadError> {
    match *domain {
        Domain::Interval { a, b } => integrate_interval(f, a, b, tol),
        Domain::DampedRay {
            start,
            period,
            ladder,
        } => {
            if !(period > 0.0) || !(ladder.eps0 > 0.0) || ladder.levels == 0 {
                return Err(QuadError::InvalidDomain(format!(
                    "damped ray: period {period}, eps0 {}, levels {}",
                    ladder.eps0, ladder.levels
                )));
            }
            let eps = ladder.values();
            let mut vals = Vec::with_capacity(eps.len());
            let mut quad_err = 0.0_f64;
            let mut evaluations = 0;
            let mut failed = false;
            for &e in &eps {
                let r = damped_tail(&f, start, period, e, tol);
                let r = match r {
                    Ok(r) => r,
                    Err(err) => {
                        failed = true;
                        err.best().ok_or(err)?
                    }
                };
                quad_err = quad_err.max(r.error_estimate);
                evaluations += r.evaluations;
                vals.push(r.value);
            }
            let (value, extrap_err) = extrapolate_to_zero(&eps, &vals);
            let error_estimate = extrap_err + quad_err;
            if failed {
                return Err(QuadError::NonConvergence {
                    best: value,
                    error_estimate,
                    evaluations,
                });
            }
            Ok(QuadratureResult {
                value,
                error_estimate,
                evaluations,
            })
        }
    }
}

fn damped_tail<F: Fn(f64) -> Complex64>(
    f: &F,
    start: f64,
    period: f64,
    eps: f64,
    tol: f64,
) -> Result<QuadratureResult, QuadError> {
    let length = DAMPING_CUTOFF / eps;
    let panels = (length / period).ceil().max(1.0) as usize;
    let panel_tol = tol / panels as f64;
    let g = |z: f64| f(z) * (-eps * (z - start)).exp();
    let mut value = Complex64::new(0.0, 0.0);
    let mut error_estimate = 0.0;
    let mut evaluations = 0;
    let mut failed = false;
    for p in 0..panels {
        let a = start + p as f64 * period;
        let b = start + (p + 1) as f64 * period;
        let r = match integrate_interval(&g, a, b, panel_tol) {
            Ok(r) => r,
            Err(e) => {
                failed = true;
                e.best().ok_or(e)?
            }
        };
        value += r.value;
        error_estimate += r.error_estimate;
        evaluations += r.evaluations;
    }
    if failed {
        return Err(QuadError::NonConvergence {
            best: value,
            error_estimate,
            evaluations,
        });
    }
    Ok(QuadratureResult {
        value,
        error_estimate,
        evaluations,
    })
}

/// Richardson extrapolation to `h -> 0` of values sampled at `h_j = h_0 / 2^j`,
/// assuming an expansion in integer powers of `h`.
///
/// Returns the extrapolated value and the difference between the last two
/// entries of the final row as an error estimate.
pub fn extrapolate_to_zero(h: &[f64], values: &[Complex64]) -> (Complex64, f64) {
    assert_eq!(h.len(), values.len());
    assert!(!values.is_empty());
    let n = values.len();
    let mut table: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![values[i]];
        for k in 1..=i {
            // Neville on arbitrary nodes
            let num = row[k - 1] * h[i - k] - table[i - 1][k - 1] * h[i];
            row.push(num / (h[i - k] - h[i]));
        }
        table.push(row);
    }
    let last = &table[n - 1];
    let best = last[n - 1];
    let err = if n >= 2 {
        (last[n - 1] - last[n - 2]).norm()
    } else {
        f64::INFINITY
    };
    (best, err)
}

/// Iterated adaptive quadrature over a rectangle.
pub fn integrate_box<F: Fn(f64, f64) -> Complex64>(
    f: F,
    x: (f64, f64),
    y: (f64, f64),
    tol: f64,
) -> Result<QuadratureResult, QuadError> {
    let width = (x.1 - x.0).abs().max(f64::MIN_POSITIVE);
    let inner_tol = tol / (4.0 * width);
    let evals = std::cell::Cell::new(0usize);
    let inner_failure = std::cell::Cell::new(false);
    let outer = integrate_interval(
        |xv| {
            let r = integrate_interval(|yv| f(xv, yv), y.0, y.1, inner_tol);
            match r {
                Ok(r) => {
                    evals.set(evals.get() + r.evaluations);
                    r.value
                }
                Err(e) => {
                    inner_failure.set(true);
                    e.best().map(|b| b.value).unwrap_or_default()
                }
            }
        },
        x.0,
        x.1,
        tol / 2.0,
    );
    let mut r = outer?;
    r.evaluations = evals.get();
    if inner_failure.get() {
        return Err(QuadError::NonConvergence {
            best: r.value,
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
        });
    }
    r.error_estimate += tol / 2.0;
    Ok(r)
}
