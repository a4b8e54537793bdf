//! Exponentially scaled modified Bessel functions `e^{-z}·I_ν(z)` for complex
//! `z` with `Re z >= 0` and integer or half-integer order `ν >= -1/2`.
//!
//! The power series is used where it does not cancel, the Hankel expansion for
//! arguments large compared with `ν²`, and Miller's backward recurrence
//! everywhere else. The recurrence is normalized by `e^{-z}·cosh z` or
//! `e^{-z}·sinh z` for half-integer orders and by `Σ_k I_k(z) = e^z` for
//! integer ones.

use std::f64::consts::PI;

use num_complex::Complex64;

const SERIES_MAX_ABS: f64 = 17.0;
/// Loss of significance tolerated in the series, as `|z| - Re z`.
const SERIES_MAX_CANCEL: f64 = 6.0;
const RESCALE: f64 = 1e100;

fn is_half_integer(nu: f64) -> bool {
    (nu - nu.floor() - 0.5).abs() < 1e-12
}

fn is_integer(nu: f64) -> bool {
    (nu - nu.round()).abs() < 1e-12
}

/// `Γ(a)` for positive integer or half-integer `a`.
fn gamma_lattice(a: f64) -> f64 {
    debug_assert!(a > 0.0);
    let (mut g, mut x) = if is_integer(a) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x + 0.5 < a {
        g *= x;
        x += 1.0;
    }
    g
}

fn series(nu: f64, z: Complex64) -> Complex64 {
    let half = z / 2.0;
    let q = half * half;
    let mut term = (half.ln() * nu).exp() / gamma_lattice(nu + 1.0);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if (term.norm() <= 1e-17 * sum.norm() && k > q.norm().sqrt()) || k > 500.0 {
            break;
        }
    }
    sum * (-z).exp()
}

fn hankel(nu: f64, z: Complex64) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let inv = 1.0 / z;
    // Σ (-1)^k a_k / z^k and Σ a_k / z^k, sharing a_k.
    let mut a = Complex64::new(1.0, 0.0);
    let mut alt = a;
    let mut plain = a;
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let kf = k as f64;
        let c = mu - (2.0 * kf - 1.0).powi(2);
        if c == 0.0 {
            break;
        }
        a *= inv * (c / (8.0 * kf));
        let size = a.norm();
        if size > last {
            break;
        }
        last = size;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        alt += a * sign;
        plain += a;
        if size < 1e-17 * alt.norm().max(plain.norm()) {
            break;
        }
    }
    let root = (2.0 * PI * z).sqrt();
    let i = Complex64::i();
    let second = if z.im >= 0.0 {
        i * Complex64::from_polar(1.0, PI * nu)
    } else {
        -i * Complex64::from_polar(1.0, -PI * nu)
    };
    (alt + second * (-2.0 * z).exp() * plain) / root
}

fn miller(nu: f64, z: Complex64) -> Complex64 {
    let half = is_half_integer(nu);
    let offset = if half { 0.5 } else { 0.0 };
    let target = (nu - offset).round() as usize;
    let size = z.norm();
    let start = size.max(nu) as usize + 40 + (4.0 * size.sqrt()) as usize;

    // `cur` holds order k + offset, `above` order k + 1 + offset.
    let mut above = Complex64::default();
    let mut cur = Complex64::new(1e-300, 0.0);
    let mut value = Complex64::default();
    let mut total = Complex64::default();
    let stop = if half { 0 } else { 1 };
    let mut k = start;
    loop {
        if k == target {
            value = cur;
        }
        if !half {
            total += cur * 2.0;
        }
        let below = cur * (2.0 * (k as f64 + offset) / z) + above;
        above = cur;
        cur = below;
        if cur.norm() > RESCALE {
            let s = 1.0 / RESCALE;
            above *= s;
            cur *= s;
            total *= s;
            value *= s;
        }
        if k == stop {
            break;
        }
        k -= 1;
    }
    if half {
        // cur = I_{-1/2}, above = I_{1/2}
        let root = (2.0 / (PI * z)).sqrt();
        let e = (-2.0 * z).exp();
        let cosh = root * (1.0 + e) / 2.0;
        let sinh = root * (1.0 - e) / 2.0;
        if target == 0 && nu < 0.0 {
            return cosh;
        }
        if cosh.norm() >= sinh.norm() {
            ratio(value, cur) * cosh
        } else {
            ratio(value, above) * sinh
        }
    } else {
        if target == 0 {
            value = cur;
        }
        ratio(value, total + cur)
    }
}

/// `a / b` without squaring `|b|`.
fn ratio(a: Complex64, b: Complex64) -> Complex64 {
    let s = 1.0 / b.norm();
    (a * s) / (b * s)
}

/// `e^{-z}·I_ν(z)`.
///
/// # Panics
/// If `ν` is not an integer or half-integer `>= -1/2`, or if `Re z < 0`.
pub fn scaled_bessel_i(nu: f64, z: Complex64) -> Complex64 {
    assert!(
        nu >= -0.5 && (is_integer(nu) || is_half_integer(nu)),
        "unsupported order {nu}"
    );
    assert!(z.re >= -1e-12 * z.norm(), "Re z must be >= 0 (z = {z})");
    let size = z.norm();
    if size == 0.0 {
        return if nu == 0.0 {
            Complex64::new(1.0, 0.0)
        } else if nu > 0.0 {
            Complex64::default()
        } else {
            Complex64::new(f64::INFINITY, 0.0)
        };
    }
    if size <= SERIES_MAX_ABS && size - z.re <= SERIES_MAX_CANCEL {
        series(nu, z)
    } else if size > SERIES_MAX_ABS.max(nu * nu / 3.0) {
        hankel(nu, z)
    } else {
        miller(nu, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn args() -> Vec<Complex64> {
        let mut out = Vec::new();
        for &r in &[0.3, 2.0, 9.0, 16.5, 17.5, 30.0, 120.0, 900.0] {
            for &ph in &[0.0, 0.4, 1.0, 1.4, 1.5607, -0.3, -1.2, -1.5607] {
                out.push(Complex64::from_polar(r, ph));
            }
        }
        out
    }

    /// `(1/π)∫₀^π e^{z(cos t - 1)} cos(νt) dt`, integer `ν` only.
    fn trapezoid(nu: f64, z: Complex64) -> Complex64 {
        let m = (2.0 * (z.norm() + nu) + 64.0).ceil() as usize;
        let h = PI / m as f64;
        let mut sum = Complex64::default();
        for k in 0..=m {
            let t = k as f64 * h;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            sum += (z * (t.cos() - 1.0)).exp() * ((nu * t).cos() * w);
        }
        sum * h / PI
    }

    #[test]
    fn half_order_closed_forms() {
        for z in args() {
            let root = (2.0 / (PI * z)).sqrt();
            let c = root * (1.0 + (-2.0 * z).exp()) / 2.0;
            let s = root * (1.0 - (-2.0 * z).exp()) / 2.0;
            assert!(rel(scaled_bessel_i(-0.5, z), c) < 1e-13, "{z}");
            assert!(rel(scaled_bessel_i(0.5, z), s) < 1e-12, "{z}");
        }
    }

    #[test]
    fn integer_orders_match_trapezoid_oracle() {
        for nu in [0.0, 1.0, 2.0, 4.0, 8.0] {
            for z in args() {
                let oracle = trapezoid(nu, z);
                let got = scaled_bessel_i(nu, z);
                let err = (got - oracle).norm();
                assert!(err < 1e-11 * oracle.norm() + 1e-15, "nu={nu} z={z}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn reference_values() {
        // 30-digit arbitrary-precision values.
        let table = [
            (0.0, (3.0, 4.0), (0.1602866564340943, -0.084740300622581514)),
            (2.5, (1.0, 16.0), (0.082935204079100039, -0.039470328674383465)),
            (4.0, (20.0, -30.0), (0.056165684361924639, 0.017798727195524232)),
            (7.5, (0.5, 12.0), (-0.031951973153418611, 0.068442990426723911)),
            (12.0, (30.0, 25.0), (0.01022456908578861, 0.011440975345315691)),
            (32.5, (5.0, -60.0), (-0.0094682944313495556, -0.023559422468942927)),
            (1.0, (600.0, 2.0), (0.016276498219751843, -2.709345595208425e-5)),
            (16.0, (0.01, 45.0), (-0.06391753979084, 0.10358353632769328)),
        ];
        for (nu, (x, y), (re, im)) in table {
            let got = scaled_bessel_i(nu, Complex64::new(x, y));
            assert!(rel(got, Complex64::new(re, im)) < 1e-12, "nu={nu}: {got}");
        }
    }

    #[test]
    fn recurrence_holds_across_regimes() {
        // I_{ν-1} - I_{ν+1} = (2ν/z) I_ν
        for nu in [0.5, 1.0, 1.5, 2.5, 3.0, 4.5, 7.0, 15.5, 24.0] {
            for z in args() {
                let lhs = scaled_bessel_i(nu - 1.0, z) - scaled_bessel_i(nu + 1.0, z);
                let rhs = scaled_bessel_i(nu, z) * (2.0 * nu) / z;
                let scale = scaled_bessel_i(nu - 1.0, z).norm() + rhs.norm();
                assert!((lhs - rhs).norm() < 1e-11 * scale, "nu={nu} z={z}");
            }
        }
    }

    #[test]
    fn methods_agree_where_they_meet() {
        for nu in [0.0, 0.5, 1.0, 2.5, 4.0, 7.5] {
            for ph in [0.0, 0.8, 1.5, -1.5] {
                let z = Complex64::from_polar(SERIES_MAX_ABS + 1.0, ph);
                assert!(rel(miller(nu, z), hankel(nu, z)) < 1e-12, "nu={nu} ph={ph}");
            }
            let z = Complex64::new(8.0, 3.0);
            assert!(rel(miller(nu, z), series(nu, z)) < 1e-12, "nu={nu}");
        }
    }

    #[test]
    fn zero_argument() {
        assert_eq!(scaled_bessel_i(0.0, Complex64::default()), Complex64::new(1.0, 0.0));
        assert_eq!(scaled_bessel_i(2.5, Complex64::default()), Complex64::default());
    }
}
