//! Exact Dirichlet spectra of the rectangle and the disk, and the staircase
//! residual `N(E) - (A E / 4pi - L sqrt(E) / 4pi)` whose average estimates the
//! constant term of the smoothed counting function.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::specfun::{bessel_jn, bessel_jn_all};
use crate::weyl::SpectralExpansion;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("no eigenvalue below emax = {0}")]
    EmptySpectrum(f64),
    #[error("numerical failure: {0}")]
    NumericalError(String),
    #[error("window [{e1}, {e2}] holds {count} eigenvalues, need at least {needed}")]
    InsufficientData {
        e1: f64,
        e2: f64,
        count: usize,
        needed: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Minimum number of eigenvalues inside a residual window.
pub const MIN_WINDOW_EIGENVALUES: usize = 100;

/// Grid points per unit of `N` used to average the residual.
const GRID_PER_LEVEL: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rectangle { a: f64, b: f64 },
    Disk { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub shape: Shape,
    pub emax: f64,
}

impl Spectrum {
    /// Number of eigenvalues `<= e`.
    pub fn counting(&self, e: f64) -> usize {
        self.eigenvalues.partition_point(|&x| x <= e)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), SpectraError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SpectraError::InvalidArgument(format!("{name} = {v} must be positive")))
    }
}

fn sort_values(v: &mut [f64]) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
}

/// `pi^2 (m^2/a^2 + n^2/b^2) <= emax`, `m, n >= 1`.
pub fn rectangle_spectrum(a: f64, b: f64, emax: f64) -> Result<Spectrum, SpectraError> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_positive("emax", emax)?;
    // enumerate with the shorter side on the outer loop so (a, b) and (b, a)
    // produce bitwise identical values
    let (s, l) = if a <= b { (a, b) } else { (b, a) };
    let mut out = Vec::new();
    let mut m = 1u64;
    loop {
        let em = PI * PI * (m * m) as f64 / (s * s);
        if em >= emax {
            break;
        }
        let mut n = 1u64;
        loop {
            let e = em + PI * PI * (n * n) as f64 / (l * l);
            if e > emax {
                break;
            }
            out.push(e);
            n += 1;
        }
        m += 1;
    }
    if out.is_empty() {
        return Err(SpectraError::EmptySpectrum(emax));
    }
    sort_values(&mut out);
    Ok(Spectrum {
        eigenvalues: out,
        shape: Shape::Rectangle { a, b },
        emax,
    })
}

fn bisect_jn(m: usize, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<f64, SpectraError> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = bessel_jn(m, mid).map_err(|e| SpectraError::NumericalError(e.to_string()))?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Positive zeros of `J_m` below `xmax` for every `m` with `j_{m,1} < xmax`.
/// Returned as `(m, zero)` pairs.
pub fn bessel_zeros_below(xmax: f64) -> Result<Vec<(usize, f64)>, SpectraError> {
    check_positive("xmax", xmax)?;
    // j_{m,1} > m bounds the order range
    let mmax = xmax.floor() as usize;
    let step = 0.1;
    let npts = (xmax / step).ceil() as usize + 1;
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut zeros = Vec::new();
    for i in 1..=npts {
        let x = (i as f64 * step).min(xmax);
        let vals = bessel_jn_all(mmax, x).map_err(|e| SpectraError::NumericalError(e.to_string()))?;
        if let Some((xp, vp)) = &prev {
            for m in 0..=mmax {
                // below x = m the function has no zero; skip underflowed values
                if (*xp as usize) < m {
                    continue;
                }
                let (a, b) = (vp[m], vals[m]);
                if a == 0.0 || (a > 0.0) != (b > 0.0) {
                    if a == 0.0 {
                        continue;
                    }
                    let z = bisect_jn(m, *xp, x, a)?;
                    if z <= xp - 1e-12 || z >= x + 1e-12 {
                        return Err(SpectraError::NumericalError(format!(
                            "bracket failure for J_{m} on [{xp}, {x}]"
                        )));
                    }
                    zeros.push((m, z));
                }
            }
        }
        prev = Some((x, vals));
        if x >= xmax {
            break;
        }
    }
    Ok(zeros)
}

/// Disk eigenvalues `(j_{m,n} / R)^2`; zeros with `m >= 1` are doubled.
pub fn disk_spectrum(radius: f64, emax: f64) -> Result<Spectrum, SpectraError> {
    check_positive("R", radius)?;
    check_positive("emax", emax)?;
    let xmax = emax.sqrt() * radius;
    let mut out = Vec::new();
    for (m, z) in bessel_zeros_below(xmax)? {
        let e = (z / radius).powi(2);
        if e > emax {
            continue;
        }
        out.push(e);
        if m >= 1 {
            out.push(e);
        }
    }
    if out.is_empty() {
        return Err(SpectraError::EmptySpectrum(emax));
    }
    sort_values(&mut out);
    Ok(Spectrum {
        eigenvalues: out,
        shape: Shape::Disk { radius },
        emax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub mean: f64,
    pub stderr: f64,
    pub eigenvalues_in_window: usize,
    pub grid_points: usize,
}

/// Average of `N(E) - growing_part(E)` over a uniform grid on `[e1, e2]`.
/// The standard error treats each eigenvalue interval as one independent
/// sample.
pub fn staircase_residual(sp: &Spectrum, e: &SpectralExpansion, window: (f64, f64)) -> Result<Residual, SpectraError> {
    let (e1, e2) = window;
    if !(e1 > 0.0 && e2 > e1 && e2 <= sp.emax) {
        return Err(SpectraError::InvalidArgument(format!(
            "window [{e1}, {e2}] must lie in (0, {}]",
            sp.emax
        )));
    }
    let count = sp.counting(e2) - sp.counting(e1);
    if count < MIN_WINDOW_EIGENVALUES {
        return Err(SpectraError::InsufficientData {
            e1,
            e2,
            count,
            needed: MIN_WINDOW_EIGENVALUES,
        });
    }
    let n = count * GRID_PER_LEVEL;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for i in 0..n {
        // midpoint grid
        let x = e1 + (e2 - e1) * (i as f64 + 0.5) / n as f64;
        let r = sp.counting(x) as f64 - e.growing_part(x);
        sum += r;
        sum2 += r * r;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0);
    Ok(Residual {
        mean,
        stderr: (var / count as f64).sqrt(),
        eigenvalues_in_window: count,
        grid_points: n,
    })
}
