//! Special functions and quadrature shared by the rest of the crate.
//!
//! Everything here is a pure function of its arguments. Bessel functions of
//! integer order are computed in-house (power series, Miller backward
//! recurrence, Hankel asymptotics) so that each regime can be cross-checked
//! against the others.

mod bessel;
mod gamma;
mod quad;

pub use bessel::{bessel_j0y0, bessel_jn, bessel_jn_all, hankel1_0};
pub use gamma::gamma_real;
pub use quad::{
    extrapolate_to_zero, integrate, integrate_box, integrate_interval, Domain, EpsLadder,
    QuadError, QuadratureResult,
};

use thiserror::Error;

/// Complex amplitudes (propagators, Green's functions, quadrature values).
pub type ComplexValue = num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("{function}: argument {x} outside the domain (x > 0 required)")]
    Domain { function: &'static str, x: f64 },
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `H0(xz)` from its integral representation
/// `(1/(i pi)) ∫_0^∞ exp(ix(t + z^2/t)/2) dt/t`, evaluated with `t = z e^u`,
/// `s = cosh u` and a damped contour extrapolated to zero damping.
pub fn hankel1_0_integral(x: f64, z: f64, tol: f64) -> Result<QuadratureResult, QuadError> {
    if !(x > 0.0 && z > 0.0) {
        return Err(QuadError::InvalidDomain(format!("x = {x}, z = {z} must be positive")));
    }
    let i = ComplexValue::new(0.0, 1.0);
    let w = x * z;
    let period = 2.0 * std::f64::consts::PI / w;
    // s = 1 + v^2 removes the 1/sqrt(s^2 - 1) endpoint singularity
    let head = integrate_interval(
        |v: f64| (i * (w * (1.0 + v * v))).exp() * (2.0 / (2.0 + v * v).sqrt()),
        0.0,
        period.sqrt(),
        tol,
    )?;
    let tail = integrate(
        |s: f64| (i * (w * s)).exp() / (s * s - 1.0).sqrt(),
        &Domain::DampedRay {
            start: 1.0 + period,
            period,
            ladder: EpsLadder {
                eps0: 0.25 * w,
                levels: 7,
            },
        },
        tol,
    )?;
    let scale = 2.0 / (i * std::f64::consts::PI);
    Ok(QuadratureResult {
        value: scale * (head.value + tail.value),
        error_estimate: scale.norm() * (head.error_estimate + tail.error_estimate),
        evaluations: head.evaluations + tail.evaluations,
    })
}
