use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{ComplexValue, SpecFunError};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Power series is used up to here.
const SERIES_MAX: f64 = 8.0;
/// Hankel asymptotics are used from here on; Miller recurrence in between.
const ASYMPTOTIC_MIN: f64 = 25.0;

/// `(J0(x), Y0(x))` for `x > 0`.
pub fn bessel_j0y0(x: f64) -> Result<(f64, f64), SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain {
            function: "bessel_j0y0",
            x,
        });
    }
    Ok(if x <= SERIES_MAX {
        j0y0_series(x)
    } else if x < ASYMPTOTIC_MIN {
        j0y0_miller(x)
    } else {
        j0y0_asymptotic(x)
    })
}

/// `H0^(1)(x) = J0(x) + i Y0(x)`.
pub fn hankel1_0(x: f64) -> Result<ComplexValue, SpecFunError> {
    let (j, y) = bessel_j0y0(x).map_err(|_| SpecFunError::Domain {
        function: "hankel1_0",
        x,
    })?;
    Ok(ComplexValue::new(j, y))
}

fn j0y0_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut j0 = 1.0;
    let mut ysum = 0.0;
    let mut k = 1.0;
    loop {
        term *= -q / (k * k);
        harmonic += 1.0 / k;
        j0 += term;
        ysum -= harmonic * term;
        if term.abs() < 1e-18 * j0.abs().max(1e-3) && k > q {
            break;
        }
        k += 1.0;
    }
    let y0 = (2.0 / PI) * (((0.5 * x).ln() + EULER_GAMMA) * j0 + ysum);
    (j0, y0)
}

fn miller_start(order: usize, x: f64) -> usize {
    let m = (order as f64).max(x);
    let start = (m + 30.0 + 3.0 * m.sqrt()) as usize;
    start + (start % 2)
}

/// Normalized backward recurrence; returns `J_0 ..= J_nmax` at `x`.
fn miller_sequence(nmax: usize, x: f64) -> Vec<f64> {
    let start = miller_start(nmax, x);
    let mut out = vec![0.0; nmax + 1];
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let two_over_x = 2.0 / x;
    let mut k = start;
    loop {
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let prev = (k as f64) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

fn j0y0_miller(x: f64) -> (f64, f64) {
    let start = miller_start(0, x);
    let js = miller_sequence(start, x);
    // Neumann series: Y0 = (2/pi) [ (ln(x/2) + gamma) J0 - 2 sum (-1)^k J_{2k} / k ]
    let mut acc = 0.0;
    let mut k = start / 2;
    while k >= 1 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * js[2 * k] / k as f64;
        k -= 1;
    }
    let j0 = js[0];
    let y0 = (2.0 / PI) * (((0.5 * x).ln() + EULER_GAMMA) * j0 - 2.0 * acc);
    (j0, y0)
}

fn j0y0_asymptotic(x: f64) -> (f64, f64) {
    // P ~ sum (-1)^k a_{2k} / x^{2k},  Q ~ sum (-1)^k a_{2k+1} / x^{2k+1}
    // a_k = prod_{j=1..k} (2j-1)^2 / (k! 8^k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        a *= (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
        if a > last || a < 1e-18 {
            break;
        }
        last = a;
        match k % 4 {
            1 => q -= a,
            2 => p -= a,
            3 => q += a,
            _ => p += a,
        }
    }
    // cos(x - pi/4), sin(x - pi/4) without the cancellation of x - pi/4
    let (s, c) = x.sin_cos();
    let cos_chi = (c + s) * FRAC_1_SQRT_2;
    let sin_chi = (s - c) * FRAC_1_SQRT_2;
    let amp = (2.0 / (PI * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

/// `J_n(x)` for integer `n >= 0` and `x > 0`.
pub fn bessel_jn(n: usize, x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain {
            function: "bessel_jn",
            x,
        });
    }
    if n == 0 {
        return Ok(bessel_j0y0(x)?.0);
    }
    Ok(miller_sequence(n, x)[n])
}

/// `J_0(x) ..= J_nmax(x)` in one backward sweep.
pub fn bessel_jn_all(nmax: usize, x: f64) -> Result<Vec<f64>, SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain {
            function: "bessel_jn_all",
            x,
        });
    }
    Ok(miller_sequence(nmax, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    const J0_ZERO_1: f64 = 2.404_825_557_695_773;

    #[test]
    fn regimes_agree_at_crossovers() {
        for &x in &[6.0, 7.5, 8.0, 8.5, 10.0] {
            let (a, b) = j0y0_series(x);
            let (c, d) = j0y0_miller(x);
            assert!((a - c).abs() < 1e-13, "J0 at {x}: {a} vs {c}");
            assert!((b - d).abs() < 1e-13, "Y0 at {x}: {b} vs {d}");
        }
        for &x in &[20.0, 25.0, 30.0, 40.0] {
            let (a, b) = j0y0_miller(x);
            let (c, d) = j0y0_asymptotic(x);
            assert!((a - c).abs() < 1e-14, "J0 at {x}: {a} vs {c}");
            assert!((b - d).abs() < 1e-14, "Y0 at {x}: {b} vs {d}");
        }
    }

    #[test]
    fn first_zero_and_origin() {
        assert!(bessel_j0y0(J0_ZERO_1).unwrap().0.abs() < 1e-12);
        let (j, y) = bessel_j0y0(1e-8).unwrap();
        assert!((j - 1.0).abs() < 1e-15);
        assert!(y < -11.0);
        assert!(bessel_j0y0(0.0).is_err());
        assert!(hankel1_0(-1.0).is_err());
    }

    #[test]
    fn integer_orders_match_recurrence() {
        // J_{n-1} + J_{n+1} = (2n/x) J_n
        for &x in &[0.3, 2.0, 9.0, 31.0, 64.0] {
            let js = bessel_jn_all(40, x).unwrap();
            for n in 1..39 {
                let lhs = js[n - 1] + js[n + 1];
                let rhs = 2.0 * n as f64 / x * js[n];
                assert!((lhs - rhs).abs() < 1e-13, "x = {x}, n = {n}");
            }
            assert!((js[0] - bessel_j0y0(x).unwrap().0).abs() < 1e-13);
        }
    }

    #[test]
    fn known_values() {
        // J1(1), J5(10) to 15 digits
        assert!((bessel_jn(1, 1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_jn(5, 10.0).unwrap() + 0.234_061_528_186_793_7).abs() < 1e-14);
        let (j, y) = bessel_j0y0(1e6).unwrap();
        let amp = (j * j + y * y).sqrt();
        assert!((amp - (2.0 / (PI * 1e6)).sqrt()).abs() < 1e-12 * amp + 1e-16);
    }
}
