//! Corner flattening `(u, v) -> (x, y)`: the half-plane `v >= 0` maps onto
//! the wedge of angle `alpha` with unit Jacobian.
//!
//! `x = r cos(phi / gamma)`, `y = r sin(phi / gamma)`, `r^2 = u^2 + gamma^2 v^2`,
//! `tan phi = gamma v / u`, `gamma = pi / alpha`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvilinearError {
    #[error("the map is singular at the vertex")]
    Singular,
    #[error("corner angle {0} outside (0, pi]")]
    AngleOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlattenMap {
    pub alpha: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
}

impl FlattenMap {
    pub fn new(alpha: f64) -> Result<Self, CurvilinearError> {
        if !(alpha > 0.0 && alpha <= PI) {
            return Err(CurvilinearError::AngleOutOfRange(alpha));
        }
        Ok(FlattenMap {
            alpha,
            gamma: PI / alpha,
            gamma_bar: alpha / PI,
        })
    }

    /// Map with an arbitrary `gamma > 0`, used for ladders around `gamma = 1`.
    pub fn from_gamma(gamma: f64) -> Result<Self, CurvilinearError> {
        Self::new(PI / gamma)
    }
}

pub fn flatten(map: &FlattenMap, u: f64, v: f64) -> Result<(f64, f64), CurvilinearError> {
    if u == 0.0 && v == 0.0 {
        return Err(CurvilinearError::Singular);
    }
    let gv = map.gamma * v;
    let r = u.hypot(gv);
    let phi = gv.atan2(u);
    let (s, c) = (map.gamma_bar * phi).sin_cos();
    Ok((r * c, r * s))
}

/// Jacobian determinant of [`flatten`] by central differences.
pub fn jacobian_fd(map: &FlattenMap, u: f64, v: f64, h: f64) -> Result<f64, CurvilinearError> {
    let (xu1, yu1) = flatten(map, u + h, v)?;
    let (xu0, yu0) = flatten(map, u - h, v)?;
    let (xv1, yv1) = flatten(map, u, v + h)?;
    let (xv0, yv0) = flatten(map, u, v - h)?;
    let (xu, yu) = ((xu1 - xu0) / (2.0 * h), (yu1 - yu0) / (2.0 * h));
    let (xv, yv) = ((xv1 - xv0) / (2.0 * h), (yv1 - yv0) / (2.0 * h));
    Ok(xu * yv - xv * yu)
}

/// Area of the image of `[u0, u1] x [v0, v1]`, by the shoelace formula on
/// the mapped boundary with `n` points per side.
pub fn image_area(map: &FlattenMap, (u0, u1): (f64, f64), (v0, v1): (f64, f64), n: usize) -> Result<f64, CurvilinearError> {
    let mut pts = Vec::with_capacity(4 * n);
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    for i in 0..n {
        let t = i as f64 / n as f64;
        pts.push(flatten(map, lerp(u0, u1, t), v0)?);
    }
    for i in 0..n {
        let t = i as f64 / n as f64;
        pts.push(flatten(map, u1, lerp(v0, v1, t))?);
    }
    for i in 0..n {
        let t = i as f64 / n as f64;
        pts.push(flatten(map, lerp(u1, u0, t), v1)?);
    }
    for i in 0..n {
        let t = i as f64 / n as f64;
        pts.push(flatten(map, u0, lerp(v1, v0, t))?);
    }
    let mut twice = 0.0;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        twice += a.0 * b.1 - a.1 * b.0;
    }
    Ok(0.5 * twice)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerIdentity {
    /// `(pi^2 - alpha^2) / (24 pi alpha)`
    pub lhs: f64,
    /// `(gamma - gamma_bar) / 24`
    pub rhs1: f64,
    /// `(gamma^2 - 1) / (24 gamma)`
    pub rhs2: f64,
}

pub fn corner_coeff_identity(alpha: f64) -> Result<CornerIdentity, CurvilinearError> {
    if !(alpha > 0.0 && alpha <= PI) {
        return Err(CurvilinearError::AngleOutOfRange(alpha));
    }
    let g = PI / alpha;
    let gb = alpha / PI;
    Ok(CornerIdentity {
        lhs: (PI * PI - alpha * alpha) / (24.0 * PI * alpha),
        rhs1: (g - gb) / 24.0,
        rhs2: (g * g - 1.0) / (24.0 * g),
    })
}

/// Corner coefficient as a function of `gamma`, `(gamma - 1/gamma) / 24`.
pub fn corner_coeff_gamma(gamma: f64) -> f64 {
    (gamma - 1.0 / gamma) / 24.0
}

fn laplacian_fd<F: Fn(f64, f64) -> f64>(f: F, x: f64, y: f64, h: f64) -> f64 {
    let c = f(x, y);
    (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * c) / (h * h)
}

/// `Δ_xy f` at `flatten(u, v)` minus the flat Laplacian of `f ∘ flatten` in
/// `(u, v)`, both by finite differences with step `h`.
pub fn laplacian_defect<F: Fn(f64, f64) -> f64>(
    map: &FlattenMap,
    f: F,
    u: f64,
    v: f64,
    h: f64,
) -> Result<f64, CurvilinearError> {
    let (x, y) = flatten(map, u, v)?;
    let lap_xy = laplacian_fd(&f, x, y, h);
    let g = |a: f64, b: f64| {
        let (p, q) = flatten(map, a, b).expect("away from the vertex");
        f(p, q)
    };
    let lap_uv = laplacian_fd(g, u, v, h);
    Ok(lap_xy - lap_uv)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub gammas: Vec<f64>,
    pub defects: Vec<f64>,
    /// Least-squares slope of `ln|defect|` against `ln|gamma^2 - 1|`.
    pub exponent: f64,
}

/// Fits the exponent `p` in `defect ~ (gamma^2 - 1)^p` over `gammas`.
pub fn laplacian_scaling<F: Fn(f64, f64) -> f64 + Copy>(
    f: F,
    u: f64,
    v: f64,
    gammas: &[f64],
    h: f64,
) -> Result<ScalingFit, CurvilinearError> {
    let mut defects = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let map = FlattenMap::from_gamma(g)?;
        defects.push(laplacian_defect(&map, f, u, v, h)?);
    }
    let xs: Vec<f64> = gammas.iter().map(|g| (g * g - 1.0).abs().ln()).collect();
    let ys: Vec<f64> = defects.iter().map(|d| d.abs().ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(ScalingFit {
        gammas: gammas.to_vec(),
        defects,
        exponent: sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_points() {
        let m = FlattenMap::new(PI / 3.0).unwrap();
        assert_eq!(flatten(&m, 2.5, 0.0).unwrap(), (2.5, 0.0));
        let id = FlattenMap::new(PI).unwrap();
        let (x, y) = flatten(&id, 0.3, -1.2).unwrap();
        assert!((x - 0.3).abs() < 1e-15 && (y + 1.2).abs() < 1e-15);
        assert_eq!(flatten(&m, 0.0, 0.0), Err(CurvilinearError::Singular));
        assert!((m.gamma * m.gamma_bar - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_plane_onto_wedge() {
        let alpha = 0.8;
        let m = FlattenMap::new(alpha).unwrap();
        let (x, y) = flatten(&m, -1.0, 0.0).unwrap();
        assert!((y.atan2(x) - alpha).abs() < 1e-14);
        let (x, y) = flatten(&m, -0.3, 0.7).unwrap();
        let a = y.atan2(x);
        assert!(a > 0.0 && a < alpha);
    }

    #[test]
    fn unit_jacobian_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let alpha = rng.gen_range(0.2..PI);
            let m = FlattenMap::new(alpha).unwrap();
            let u = rng.gen_range(-2.0..2.0);
            let v = rng.gen_range(0.1..2.0);
            let j = jacobian_fd(&m, u, v, 1e-5).unwrap();
            assert!((j - 1.0).abs() < 1e-8, "alpha {alpha} ({u}, {v}): {j}");
        }
    }

    #[test]
    fn area_preserved() {
        for &alpha in &[PI / 4.0, PI / 2.0, 2.0] {
            let m = FlattenMap::new(alpha).unwrap();
            let a = image_area(&m, (0.5, 1.7), (0.2, 0.9), 4000).unwrap();
            assert!((a - 1.2 * 0.7).abs() < 1e-6, "{alpha}: {a}");
        }
    }

    #[test]
    fn identity_values() {
        for (alpha, want) in [(PI / 2.0, 1.0 / 16.0), (PI, 0.0), (PI / 3.0, 1.0 / 9.0)] {
            let c = corner_coeff_identity(alpha).unwrap();
            for v in [c.lhs, c.rhs1, c.rhs2] {
                assert!((v - want).abs() < 1e-14, "{alpha}: {c:?}");
            }
        }
        assert!(corner_coeff_identity(0.0).is_err());
    }

    #[test]
    fn gamma_duality_is_odd() {
        for &g in &[0.3, 1.0, 2.0, 5.5] {
            assert!((corner_coeff_gamma(g) + corner_coeff_gamma(1.0 / g)).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_defect_scales_with_gamma_squared_minus_one() {
        let f = |x: f64, y: f64| (-(x - 0.4).powi(2) - 0.5 * (y - 0.6).powi(2)).exp() * (1.3 * x).cos();
        let gammas = [1.2, 1.1, 1.05, 1.025, 1.0125];
        let fit = laplacian_scaling(f, 0.7, 0.5, &gammas, 1e-3).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05, "{fit:?}");
        let id = FlattenMap::new(PI).unwrap();
        assert!(laplacian_defect(&id, f, 0.7, 0.5, 1e-3).unwrap().abs() < 1e-8);
    }
}
