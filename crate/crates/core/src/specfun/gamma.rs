use std::f64::consts::PI;

use super::SpecFunError;

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the positive real axis.
pub fn gamma_real(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain {
            function: "gamma_real",
            x,
        });
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn anchors() {
        assert!(rel(gamma_real(0.5).unwrap(), PI.sqrt()) < 1e-13);
        assert!(rel(gamma_real(1.0).unwrap(), 1.0) < 1e-13);
        assert!(rel(gamma_real(2.5).unwrap(), 1.5 * 0.5 * PI.sqrt()) < 1e-13);
    }

    #[test]
    fn recurrence_and_factorials() {
        let mut fact = 1.0_f64;
        for n in 1..25 {
            assert!(rel(gamma_real(n as f64).unwrap(), fact) < 1e-12, "n = {n}");
            fact *= n as f64;
        }
        for i in 1..300 {
            let x = 0.1 + i as f64 * 0.0965;
            let lhs = gamma_real(x + 1.0).unwrap();
            let rhs = x * gamma_real(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn rejects_non_positive() {
        assert!(gamma_real(0.0).is_err());
        assert!(gamma_real(-1.5).is_err());
    }
}
