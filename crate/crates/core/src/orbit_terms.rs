//! Closed nonperiodic orbits behind the length and corner terms.
//!
//! Single-reflection family: a path leaves a point at height `y` above a
//! wall, hits the wall along the normal and comes back; its length is `2y`.
//! Integrating its Green's function over the strip next to the wall gives the
//! `-L/(8 pi sqrt(E))` term.
//!
//! Double-reflection family: inside an acute corner of angle `alpha`, a point
//! at distance `r` from the vertex has a closed orbit of length `2 r sin(alpha)`
//! bouncing once on each side. Its delta-coefficient is
//! `alpha / (8 pi sin^2 alpha)`.
//!
//! Units: `2m = hbar = 1`, `E = k^2`. Free propagator in the plane:
//! `K0(d, t) = exp(i d^2 / 4t) / (4 pi i t)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::Point;
use crate::specfun::{
    hankel1_0, integrate, integrate_interval, Domain, EpsLadder, QuadError, QuadratureResult,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("focusing singularity: c*y = {0} >= 1")]
    Caustic(f64),
    #[error("closed double-reflection orbits do not exist for alpha = {0} >= pi/2")]
    ObtuseNoClosedOrbit(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Phase index of a single Dirichlet reflection, fixed by matching the
/// stationary-phase Green's function to the Hankel asymptotics.
pub const SINGLE_REFLECTION_PHASE_INDEX: i32 = 2;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn positive(name: &str, v: f64) -> Result<(), OrbitError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(OrbitError::InvalidArgument(format!("{name} = {v} must be positive")))
    }
}

/// Classical data of one closed orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedOrbitAmplitude {
    /// Density factor `D = |d^2S/dE^2 det C|`.
    pub d: f64,
    pub det_c: f64,
    /// Hamilton's principal function at time `t`.
    pub principal: f64,
    /// Action `S(E)`.
    pub action: f64,
    pub t: f64,
    pub length: f64,
    pub bounce_count: u32,
    pub phase_index: i32,
}

/// Single-reflection orbit at height `y` over a wall of curvature `c`.
pub fn single_reflection_factors(y: f64, k: f64, c: f64) -> Result<ClosedOrbitAmplitude, OrbitError> {
    positive("y", y)?;
    positive("k", k)?;
    let focus = 1.0 - c * y;
    if focus <= 0.0 {
        return Err(OrbitError::Caustic(c * y));
    }
    let t = y / k;
    Ok(ClosedOrbitAmplitude {
        d: 1.0 / (8.0 * k * y * focus),
        det_c: 1.0 / (4.0 * t * t * focus),
        principal: y * y / t,
        action: 2.0 * k * y,
        t,
        length: 2.0 * y,
        bounce_count: 1,
        phase_index: SINGLE_REFLECTION_PHASE_INDEX,
    })
}

/// `(D, |det C|)` from the monodromy element `M_12` of a closed orbit of
/// length `length` at momentum `k`: `|det C| = L / (4 t^2 |M_12|)` with
/// `t = L / 2k`, and `D = |d^2S/dE^2| |det C| = 1 / (4 k |M_12|)`.
pub fn density_factors_from_monodromy(m12: f64, length: f64, k: f64) -> (f64, f64) {
    let t = length / (2.0 * k);
    let det_c = length / (4.0 * t * t * m12.abs());
    let d2s_de2 = length / (4.0 * k * k * k);
    (d2s_de2 * det_c, det_c)
}

/// Free propagator `exp(i d^2/4t) / (4 pi i t)`.
pub fn free_propagator(d: f64, t: f64) -> Complex64 {
    (I * (d * d / (4.0 * t))).exp() / (4.0 * PI * I * t)
}

/// Time-domain propagator of the single-reflection closed orbit.
pub fn single_reflection_propagator(y: f64, t: f64) -> Result<Complex64, OrbitError> {
    positive("y", y)?;
    positive("t", t)?;
    Ok(-(I * (y * y / t)).exp() / (4.0 * I * PI * t))
}

/// Energy Green's function of the single-reflection orbit,
/// `-(1/4i) H0(2ky)`.
pub fn single_reflection_green(y: f64, k: f64) -> Result<Complex64, OrbitError> {
    positive("y", y)?;
    positive("k", k)?;
    let h = hankel1_0(2.0 * k * y).map_err(|e| OrbitError::InvalidArgument(e.to_string()))?;
    Ok(-h / (4.0 * I))
}

/// Stationary-phase Green's function of the single-reflection orbit,
/// `2 pi (2 pi i)^(-3/2) sqrt(D) exp(iS - i mu pi/2)`, magnitude
/// `1 / (4 sqrt(pi k y))`.
pub fn green_stationary(y: f64, k: f64) -> Result<Complex64, OrbitError> {
    let amp = single_reflection_factors(y, k, 0.0)?;
    let prefactor = 2.0 * PI * (2.0 * PI * I).powf(-1.5);
    let phase = amp.action - amp.phase_index as f64 * PI / 2.0;
    Ok(prefactor * amp.d.sqrt() * (I * phase).exp())
}

/// Default eps-ladder for damped Hankel tails: a quarter of the analyticity
/// radius, halved six times.
fn hankel_ladder(rate: f64) -> EpsLadder {
    EpsLadder {
        eps0: 0.25 * rate,
        levels: 7,
    }
}

/// `∫_0^∞ z^mu H0(a z) dz` for `mu ∈ {0, 1}` by quadrature with the eps-ladder.
pub fn hankel_moment(a: f64, mu: i32, tol: f64) -> Result<QuadratureResult, OrbitError> {
    positive("a", a)?;
    let period = 2.0 * PI / a;
    let f = |z: f64| {
        hankel1_0(a * z).expect("positive argument") * z.powi(mu)
    };
    // z = 0 is excluded by the open Gauss-Kronrod nodes
    let head = integrate_interval(f, 0.0, period, tol)?;
    let tail = integrate(
        f,
        &Domain::DampedRay {
            start: period,
            period,
            ladder: hankel_ladder(a),
        },
        tol,
    )?;
    Ok(QuadratureResult {
        value: head.value + tail.value,
        error_estimate: head.error_estimate + tail.error_estimate,
        evaluations: head.evaluations + tail.evaluations,
    })
}

/// Closed-form moment `∫_0^∞ z^mu H_nu(a z) dz` for `nu = 0`.
pub fn hankel_moment_closed(a: f64, mu: i32) -> Complex64 {
    let g = |x: f64| crate::specfun::gamma_real(x).expect("positive gamma argument");
    let mu_f = mu as f64;
    let ipow = I.powi(mu);
    ipow * (2f64.powi(mu) / PI * a.powf(-mu_f - 1.0) * g((1.0 + mu_f) / 2.0).powi(2))
}

/// Time integral `G = -i ∫_0^∞ K(t) exp(iEt) dt` of the single-reflection
/// propagator, evaluated with `E -> E + i eps` regularization.
///
/// With `t = (y/k) e^u` the integrand becomes `exp(2iky cosh u)`; the
/// regulator `exp(-eps (t k/y + y/(t k)))` multiplies it by
/// `exp(-2 eps cosh u)`, which keeps the result analytic in `eps` so that the
/// ladder can be extrapolated to zero.
pub fn green_from_time_integral(y: f64, k: f64, tol: f64) -> Result<QuadratureResult, OrbitError> {
    positive("y", y)?;
    positive("k", k)?;
    let e = k * k;
    let t0 = y / k;
    let f_u = |u: f64| -> Complex64 {
        let t = t0 * u.exp();
        let kern = single_reflection_propagator(y, t).expect("positive arguments");
        -I * kern * (I * (e * t)).exp() * t
    };
    let symmetric = |u: f64| f_u(u) + f_u(-u);
    let omega = 2.0 * k * y;
    let period = 2.0 * PI / omega;
    // head: s = cosh u = 1 + w^2, du = 2 dw / sqrt(2 + w^2)
    let w_max = period.sqrt();
    let head = integrate_interval(
        |w: f64| {
            let s = 1.0 + w * w;
            symmetric(s.acosh()) * (2.0 / (2.0 + w * w).sqrt())
        },
        0.0,
        w_max,
        tol,
    )?;
    let start = 1.0 + period;
    let tail = integrate(
        |s: f64| symmetric(s.acosh()) / (s * s - 1.0).sqrt(),
        &Domain::DampedRay {
            start,
            period,
            ladder: EpsLadder {
                eps0: 0.25 * omega,
                levels: 7,
            },
        },
        tol,
    )?;
    Ok(QuadratureResult {
        value: head.value + tail.value,
        error_estimate: head.error_estimate + tail.error_estimate,
        evaluations: head.evaluations + tail.evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthTerm {
    pub closed_form: f64,
    /// Strip integral of the Green's function, when requested.
    pub quadrature: Option<f64>,
    pub quadrature_error: Option<f64>,
}

/// Length term `-L / (8 pi sqrt(E))`; with `verify`, also
/// `-(1/pi) Im ∫ dx ∫_0^∞ dy G_co(y)` by quadrature.
pub fn length_term_density(length: f64, energy: f64, verify: bool) -> Result<LengthTerm, OrbitError> {
    positive("L", length)?;
    positive("E", energy)?;
    let closed_form = -length / (8.0 * PI * energy.sqrt());
    let (quadrature, quadrature_error) = if verify {
        let k = energy.sqrt();
        let m = hankel_moment(2.0 * k, 0, 1e-10)?;
        let strip = -m.value / (4.0 * I) * length;
        (Some(-strip.im / PI), Some(m.error_estimate * length / (4.0 * PI)))
    } else {
        (None, None)
    };
    Ok(LengthTerm {
        closed_form,
        quadrature,
        quadrature_error,
    })
}

/// Closed double-reflection orbit in a wedge with sides `OA` (angle 0) and
/// `OB` (angle `alpha`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerOrbit {
    pub alpha: f64,
    pub r: f64,
    pub theta1: f64,
    pub source: Point,
    /// Reflection across `OB`: angle `2 alpha - theta1`.
    pub q1: Point,
    /// Second image: angle `2 alpha + theta1`.
    pub q2: Point,
    /// Reflection across `OA`: angle `-theta1`.
    pub q_minus1: Point,
    /// Second clockwise image: angle `-2 alpha + theta1`.
    pub q_minus2: Point,
    pub bounce_ob: Point,
    pub bounce_oa: Point,
    pub length: f64,
    /// Largest mismatch between incidence and reflection angles.
    pub specular_defect: f64,
}

fn polar(r: f64, theta: f64) -> Point {
    [r * theta.cos(), r * theta.sin()]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Point where the segment `p -> q` crosses the ray at angle `phi`.
fn cross_ray(p: Point, q: Point, phi: f64) -> Point {
    let e = [phi.cos(), phi.sin()];
    let d = sub(q, p);
    // e x (p + lambda d) = 0
    let lambda = -(e[0] * p[1] - e[1] * p[0]) / (e[0] * d[1] - e[1] * d[0]);
    [p[0] + lambda * d[0], p[1] + lambda * d[1]]
}

/// Angle mismatch of a reflection of `d_in` into `d_out` off a line with
/// direction `line`.
fn specular_mismatch(d_in: Point, d_out: Point, line: Point) -> f64 {
    let l = [line[0] / norm(line), line[1] / norm(line)];
    let n = [-l[1], l[0]];
    let u = [d_in[0] / norm(d_in), d_in[1] / norm(d_in)];
    let dn = u[0] * n[0] + u[1] * n[1];
    let refl = [u[0] - 2.0 * dn * n[0], u[1] - 2.0 * dn * n[1]];
    let w = [d_out[0] / norm(d_out), d_out[1] / norm(d_out)];
    (refl[0] * w[1] - refl[1] * w[0]).atan2(refl[0] * w[0] + refl[1] * w[1]).abs()
}

pub fn acute_corner_orbit(alpha: f64, r: f64, theta1: f64) -> Result<CornerOrbit, OrbitError> {
    if !(alpha > 0.0) {
        return Err(OrbitError::InvalidArgument(format!("alpha = {alpha}")));
    }
    if alpha >= PI / 2.0 + 1e-15 {
        return Err(OrbitError::ObtuseNoClosedOrbit(alpha));
    }
    positive("r", r)?;
    if !(theta1 > 0.0 && theta1 < alpha) {
        return Err(OrbitError::InvalidArgument(format!("theta1 = {theta1} outside (0, {alpha})")));
    }
    let source = polar(r, theta1);
    let q2 = polar(r, 2.0 * alpha + theta1);
    let hit_ob = cross_ray(source, q2, alpha);
    let hit_oa_unfolded = cross_ray(source, q2, 2.0 * alpha);
    // the image of OA in the unfolded picture folds back onto OA
    let bounce_oa = [norm(hit_oa_unfolded), 0.0];
    let bounce_ob = hit_ob;
    let length = norm(sub(bounce_ob, source)) + norm(sub(bounce_oa, bounce_ob)) + norm(sub(source, bounce_oa));
    let ob_dir = [alpha.cos(), alpha.sin()];
    let defect_b = specular_mismatch(sub(bounce_ob, source), sub(bounce_oa, bounce_ob), ob_dir);
    let defect_a = specular_mismatch(sub(bounce_oa, bounce_ob), sub(source, bounce_oa), [1.0, 0.0]);
    Ok(CornerOrbit {
        alpha,
        r,
        theta1,
        source,
        q1: polar(r, 2.0 * alpha - theta1),
        q2,
        q_minus1: polar(r, -theta1),
        q_minus2: polar(r, -2.0 * alpha + theta1),
        bounce_ob,
        bounce_oa,
        length,
        specular_defect: defect_a.max(defect_b),
    })
}

/// Propagator of the double-reflection closed orbit at distance `r` from
/// the vertex: `+exp(i (r sin alpha)^2 / t) / (4 i pi t)`.
pub fn corner_orbit_propagator(r: f64, alpha: f64, t: f64) -> Result<Complex64, OrbitError> {
    positive("r", r)?;
    positive("t", t)?;
    if !(alpha > 0.0 && alpha <= PI / 2.0) {
        return Err(OrbitError::ObtuseNoClosedOrbit(alpha));
    }
    let a = r * alpha.sin();
    Ok((I * (a * a / t)).exp() / (4.0 * I * PI * t))
}

/// Sign of an `n`-bounce Dirichlet closed-orbit propagator.
pub fn reflection_parity(bounces: u32) -> f64 {
    if bounces % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaCoefficient {
    pub closed_form: f64,
    pub quadrature: Option<f64>,
    pub quadrature_error: Option<f64>,
}

/// Double-reflection orbits integrated over the wedge: coefficient of
/// `delta(E)`. `both_orders` counts orbits hitting either side first.
pub fn corner_orbit_delta(alpha: f64, both_orders: bool, verify: bool) -> Result<DeltaCoefficient, OrbitError> {
    if !(alpha > 0.0 && alpha <= PI / 2.0) {
        return Err(OrbitError::ObtuseNoClosedOrbit(alpha));
    }
    let mult = if both_orders { 2.0 } else { 1.0 };
    let s = alpha.sin();
    let closed_form = mult * alpha / (8.0 * PI * s * s);
    let (quadrature, quadrature_error) = if verify {
        // G_co2(r) = -(i/4) H0(2 k r sin alpha); integrate r dr dtheta, and read
        // off the coefficient of 1/E, which 1/(E + i eps) turns into delta(E).
        let k = 1.0;
        let e = k * k;
        let m = hankel_moment(2.0 * k * s, 1, 1e-8)?;
        let coef = -I / 4.0 * m.value * alpha * e * mult;
        (Some(coef.re), Some(m.error_estimate * alpha * mult / 4.0))
    } else {
        (None, None)
    };
    Ok(DeltaCoefficient {
        closed_form,
        quadrature,
        quadrature_error,
    })
}

/// Correction from cutting the single-reflection strips of both sides at the
/// corner: coefficient of `delta(E)`, `1 / (4 pi tan alpha)`.
pub fn edge_correction_delta(alpha: f64, verify: bool) -> Result<DeltaCoefficient, OrbitError> {
    if !(alpha > 0.0 && alpha <= PI / 2.0) {
        return Err(OrbitError::ObtuseNoClosedOrbit(alpha));
    }
    let closed_form = alpha.cos() / (4.0 * PI * alpha.sin());
    let (quadrature, quadrature_error) = if verify {
        // -(2/pi) Im ∫ dy (y / tan alpha) (1/4i) H0(2ky)
        let k = 1.0;
        let e = k * k;
        let m = hankel_moment(2.0 * k, 1, 1e-8)?;
        let c = m.value / (4.0 * I) * (2.0 / alpha.tan()) * e;
        // -(1/pi) Im[c / (E + i eps)] -> c delta(E) for real c
        (Some(c.re), Some(m.error_estimate / (2.0 * alpha.tan().abs())))
    } else {
        (None, None)
    };
    Ok(DeltaCoefficient {
        closed_form,
        quadrature,
        quadrature_error,
    })
}

/// The density obtained from the stationary-phase Green's function instead of
/// the Hankel form: `+L / (4 sqrt(2E) pi)` in magnitude.
pub fn stationary_length_term(length: f64, energy: f64) -> f64 {
    length / (4.0 * (2.0 * energy).sqrt() * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_j0y0;

    #[test]
    fn flat_factors() {
        let a = single_reflection_factors(1.0, 1.0, 0.0).unwrap();
        assert_eq!(a.d, 1.0 / 8.0);
        assert_eq!(a.action, 2.0);
        assert_eq!(a.t, 1.0);
        assert_eq!(a.principal, 1.0);
        assert_eq!(a.det_c, 0.25);
        let c = single_reflection_factors(1.0, 1.0, 0.5).unwrap();
        assert_eq!(c.d, 0.25);
        assert!(matches!(single_reflection_factors(2.0, 1.0, 0.5), Err(OrbitError::Caustic(_))));
    }

    #[test]
    fn factors_from_monodromy_match() {
        for &(y, k, c) in &[(1.0, 1.0, 0.0), (0.3, 2.5, 1.2), (2.0, 0.7, -0.4)] {
            let a = single_reflection_factors(y, k, c).unwrap();
            let m12 = -2.0 * y * (1.0 - c * y);
            let (d, det_c) = density_factors_from_monodromy(m12, 2.0 * y, k);
            assert!((d - a.d).abs() < 1e-12 * a.d);
            assert!((det_c - a.det_c).abs() < 1e-12 * a.det_c);
        }
    }

    #[test]
    fn propagator_magnitude_and_phase() {
        let t = 0.37;
        let k = single_reflection_propagator(1.3, t).unwrap();
        assert!((k.norm() - 1.0 / (4.0 * PI * t)).abs() < 1e-15);
        let y = (PI * t).sqrt();
        let k = single_reflection_propagator(y, t).unwrap();
        let expect = -(1.0 / (4.0 * I * PI * t)) * -1.0;
        assert!((k - expect).norm() < 1e-14);
    }

    #[test]
    fn green_values() {
        let (j, y) = bessel_j0y0(2.0).unwrap();
        let g = single_reflection_green(1.0, 1.0).unwrap();
        let expect = -Complex64::new(j, y) / (4.0 * I);
        assert!((g - expect).norm() < 1e-16);
    }

    #[test]
    fn stationary_magnitude_and_phase() {
        for &(y, k) in &[(1.0, 10.0), (3.0, 33.3)] {
            let gs = green_stationary(y, k).unwrap();
            assert!((gs.norm() - 1.0 / (4.0 * (PI * k * y).sqrt())).abs() < 1e-15);
            let g = single_reflection_green(y, k).unwrap();
            let ky = k * y;
            assert!((gs - g).norm() / g.norm() < 1.0 / ky);
        }
        let g = single_reflection_green(1.0, 10.0).unwrap();
        assert!((green_stationary(1.0, 10.0).unwrap().norm() / g.norm() - 1.0).abs() < 0.02);
        let g = single_reflection_green(1.0, 100.0).unwrap();
        assert!((green_stationary(1.0, 100.0).unwrap().norm() / g.norm() - 1.0).abs() < 0.002);
    }

    #[test]
    fn sqrt_two_discrepancy() {
        let (l, e) = (3.0, 7.0);
        let hankel = length_term_density(l, e, false).unwrap().closed_form;
        let ratio = stationary_length_term(l, e) / hankel.abs();
        assert!((ratio - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn length_term_closed_form() {
        let t = length_term_density(4.0, 4.0, false).unwrap();
        assert!((t.closed_form + 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert!(length_term_density(1.0, 1e30, false).unwrap().closed_form > -1e-15);
    }

    #[test]
    fn length_term_by_quadrature() {
        let t = length_term_density(1.0, 4.0, true).unwrap();
        let q = t.quadrature.unwrap();
        assert!(((q - t.closed_form) / t.closed_form).abs() < 1e-6, "{q} vs {}", t.closed_form);
    }

    #[test]
    fn moment_closed_forms() {
        let a = 2.0;
        assert!((hankel_moment_closed(a, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((hankel_moment_closed(a, 1) - Complex64::new(0.0, 2.0 / (PI * 4.0))).norm() < 1e-14);
    }

    #[test]
    fn time_integral_reproduces_hankel_green() {
        for &(y, k) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 3.0)] {
            let q = green_from_time_integral(y, k, 1e-10).unwrap();
            let g = single_reflection_green(y, k).unwrap();
            assert!((q.value - g).norm() < 1e-6 * g.norm(), "{y} {k}: {:?} vs {g}", q.value);
        }
    }

    #[test]
    fn corner_orbit_geometry() {
        let o = acute_corner_orbit(PI / 2.0, 1.0, PI / 4.0).unwrap();
        assert!((o.length - 2.0).abs() < 1e-12);
        let o = acute_corner_orbit(PI / 3.0, 2.0, 0.4).unwrap();
        assert!((o.length - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(o.specular_defect < 1e-10);
        assert!(matches!(
            acute_corner_orbit(2.0 * PI / 3.0, 1.0, 0.5),
            Err(OrbitError::ObtuseNoClosedOrbit(_))
        ));
    }

    #[test]
    fn corner_propagator_parity() {
        let t = 0.8;
        let kc = corner_orbit_propagator(1.0, PI / 2.0, t).unwrap();
        let ks = single_reflection_propagator(1.0, t).unwrap();
        assert!((kc + ks).norm() < 1e-15);
        assert!((kc.norm() - 1.0 / (4.0 * PI * t)).abs() < 1e-15);
        assert_eq!(reflection_parity(1), -1.0);
        assert_eq!(reflection_parity(2), 1.0);
    }

    #[test]
    fn corner_delta_by_quadrature() {
        for &alpha in &[0.3, 1.0, PI / 2.0] {
            let d = corner_orbit_delta(alpha, false, true).unwrap();
            let q = d.quadrature.unwrap();
            assert!((q - d.closed_form).abs() < 1e-6 * d.closed_form, "{alpha}: {q} vs {}", d.closed_form);
        }
        let e = edge_correction_delta(0.7, true).unwrap();
        assert!((e.quadrature.unwrap() - e.closed_form).abs() < 1e-6 * e.closed_form);
        let two = corner_orbit_delta(PI / 2.0, true, false).unwrap();
        assert!((two.closed_form - 0.125).abs() < 1e-15);
    }
}
