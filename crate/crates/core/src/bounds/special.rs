//! Closed-form pieces of the bounds, evaluated without cancellation.

use std::f64::consts::PI;

use crate::error::{out_of_range, Result};

fn check_open_unit(name: &str, p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        out_of_range(format!("{name} = {p} must lie in (0,1)"))
    }
}

/// `q(p) = -log(1-p)`.
pub fn q_of_p(p: f64) -> Result<f64> {
    let p = check_open_unit("p", p)?;
    Ok(-(-p).ln_1p())
}

/// `f(z) = -log(1 - e^{-z})`, so that a set of `n` sites is non-vacant with
/// probability `exp(-f(n q))`.
pub fn f_(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return out_of_range(format!("f needs z > 0, got {z}"));
    }
    Ok(f_unchecked(z))
}

#[inline]
pub(crate) fn f_unchecked(z: f64) -> f64 {
    if z < std::f64::consts::LN_2 {
        -(-(-z).exp_m1()).ln()
    } else {
        -(-(-z).exp()).ln_1p()
    }
}

/// `beta(u) = (u + sqrt(u(4-3u))) / 2`.
pub fn beta_(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return out_of_range(format!("beta needs u in [0,1], got {u}"));
    }
    Ok(beta_unchecked(u))
}

#[inline]
pub(crate) fn beta_unchecked(u: f64) -> f64 {
    (u + (u * (4.0 - 3.0 * u)).sqrt()) / 2.0
}

/// `g(z) = -log beta(1 - e^{-z})`.
pub fn g_(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return out_of_range(format!("g needs z > 0, got {z}"));
    }
    Ok(g_unchecked(z))
}

#[inline]
pub(crate) fn g_unchecked(z: f64) -> f64 {
    let u = -(-z).exp_m1();
    let eps = (-z).exp();
    if eps < 0.5 {
        // 1 - beta(1-eps) = 2 eps^2 / (1 + eps + sqrt(u(4-3u)))
        let gap = 2.0 * eps * eps / (1.0 + eps + (u * (4.0 - 3.0 * u)).sqrt());
        -(-gap).ln_1p()
    } else {
        -beta_unchecked(u).ln()
    }
}

fn check_index_range(a: u64, b: u64) -> Result<()> {
    if a >= 1 && a <= b {
        Ok(())
    } else {
        out_of_range(format!("need 1 <= a <= b, got a={a}, b={b}"))
    }
}

/// `log F_a^b = -sum_{i=a}^{b-1} f(iq) = sum_{j=a}^{b-1} log(1-(1-p)^j)`.
pub fn log_f(a: u64, b: u64, p: f64) -> Result<f64> {
    check_index_range(a, b)?;
    let q = q_of_p(p)?;
    Ok(-(a..b).map(|i| f_unchecked(i as f64 * q)).sum::<f64>())
}

/// `log G_a^b = -sum_{i=a}^{b-1} g(iq)`.
pub fn log_g(a: u64, b: u64, p: f64) -> Result<f64> {
    check_index_range(a, b)?;
    let q = q_of_p(p)?;
    Ok(-(a..b).map(|i| g_unchecked(i as f64 * q)).sum::<f64>())
}

/// `Li2(x) = sum_{k>=1} x^k / k^2` on `[0,1]`.
pub fn dilog(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return out_of_range(format!("dilog needs x in [0,1], got {x}"));
    }
    Ok(li2_pair(x, 1.0 - x))
}

/// `Li2(x)` given both `x` and `y = 1 - x`, each to full relative precision.
fn li2_pair(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        PI * PI / 6.0
    } else if x <= 0.5 {
        li2_series(x)
    } else {
        // Reflection: Li2(x) + Li2(1-x) = pi^2/6 - log(x) log(1-x).
        PI * PI / 6.0 - (-y).ln_1p() * y.ln() - li2_series(y)
    }
}

/// Power series for `x <= 1/2`, summed until the geometric tail bound
/// `x^(k+1) / ((k+1)^2 (1-x))` drops below 1e-17.
fn li2_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = x;
    let mut k = 1.0f64;
    loop {
        sum += power / (k * k);
        power *= x;
        k += 1.0;
        if power / (k * k * (1.0 - x)) < 1e-17 {
            return sum;
        }
    }
}

/// `int_K^inf f = Li2(e^{-K})`.
pub fn integral_f_tail(k: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return out_of_range(format!("integral needs K >= 0, got {k}"));
    }
    Ok(li2_pair((-k).exp(), -(-k).exp_m1()))
}

/// `int_lo^hi f` for `0 <= lo <= hi`.
pub fn integral_f(lo: f64, hi: f64) -> Result<f64> {
    if !(lo <= hi) {
        return out_of_range(format!("integral needs lo <= hi, got [{lo}, {hi}]"));
    }
    Ok(integral_f_tail(lo)? - integral_f_tail(hi)?)
}

/// Extra length past `K` integrated numerically; beyond it the remainder is
/// at most `Li2(e^{-(K+40)}) < 5e-18`.
const G_HORIZON: f64 = 40.0;

/// `int_K^inf g` by adaptive Simpson in `w = sqrt(z)`, which removes the
/// logarithmic singularity of `g` at the origin. Absolute error below 1e-10.
pub fn integral_g(k: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return out_of_range(format!("integral needs K >= 0, got {k}"));
    }
    let integrand = |w: f64| {
        if w <= 0.0 {
            0.0
        } else {
            2.0 * w * g_unchecked(w * w)
        }
    };
    Ok(adaptive_simpson(integrand, k.sqrt(), (k + G_HORIZON).sqrt(), 1e-13, 60))
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn q_examples() {
        let p = 1.0 - (-1.0f64).exp();
        assert!((q_of_p(p).unwrap() - 1.0).abs() < 1e-15);
        assert!((q_of_p(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let q = q_of_p(0.1).unwrap();
        assert!((q - 0.105_360_515_657_826_3).abs() < 1e-15);
        assert!(0.1 <= q && q <= 0.11);
        // Small p: q = p + p^2/2 + p^3/3 + ...
        let p = 1e-9;
        assert!(rel(q_of_p(p).unwrap(), p + p * p / 2.0) < 1e-12);
        assert!(q_of_p(0.0).is_err() && q_of_p(1.0).is_err());
    }

    #[test]
    fn q_sandwich() {
        for i in 1..500 {
            let p = i as f64 / 1000.0;
            let q = q_of_p(p).unwrap();
            assert!(p <= q && q <= p + p * p, "p={p}");
        }
    }

    #[test]
    fn f_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!(rel(f_(ln2).unwrap(), ln2) < 1e-14);
        assert!(rel(f_((4.0f64 / 3.0).ln()).unwrap(), 4.0f64.ln()) < 1e-14);
        let v = f_(3.0).unwrap();
        assert!((-3.0f64).exp() <= v && v <= (-3.0f64).exp() + (-6.0f64).exp());
        assert!(f_(0.0).is_err() && f_(-1.0).is_err());
    }

    #[test]
    fn f_is_stable_at_both_ends() {
        // Series: f(z) = -log z + z/2 - z^2/24 + ... for small z;
        // f(z) = e^{-z} + e^{-2z}/2 + ... for large z.
        let z = 1e-12;
        assert!(rel(f_(z).unwrap(), -z.ln() + z / 2.0) < 1e-12);
        let z: f64 = 50.0;
        let e = (-z).exp();
        assert!(rel(f_(z).unwrap(), e + e * e / 2.0) < 1e-12);
    }

    #[test]
    fn f_small_and_large_inequalities() {
        for i in 1..=100 {
            let eps = i as f64 / 1000.0;
            let v = f_(eps).unwrap();
            assert!(-eps.ln() <= v && v <= -eps.ln() + eps, "eps={eps}");
        }
        for i in 1..=195 {
            let k = 0.5 + i as f64 / 10.0;
            let v = f_(k).unwrap();
            let e = (-k).exp();
            assert!(e <= v && v <= e + e * e, "K={k}");
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_(0.0).unwrap(), 0.0);
        assert_eq!(beta_(1.0).unwrap(), 1.0);
        let golden_half = (1.0 + 5f64.sqrt()) / 4.0;
        assert!((beta_(0.5).unwrap() - golden_half).abs() < 1e-15);
        assert!((beta_(0.5).unwrap() - 0.809_017_0).abs() < 1e-7);
        let mut last = -1.0;
        for i in 0..=1000 {
            let b = beta_(i as f64 / 1000.0).unwrap();
            assert!(b > last);
            last = b;
        }
        assert!(beta_(1.1).is_err());
    }

    #[test]
    fn g_examples() {
        let g = g_(std::f64::consts::LN_2).unwrap();
        assert!((g + beta_(0.5).unwrap().ln()).abs() < 1e-15);
        assert!((g - 0.211_935_4).abs() < 1e-7);
        let mut last = f64::INFINITY;
        for i in 1..=400 {
            let z = i as f64 / 10.0;
            let v = g_(z).unwrap();
            assert!(v < last && v > 0.0);
            assert!(v <= f_(z).unwrap());
            last = v;
        }
        assert!(g_(0.0).is_err());
    }

    #[test]
    fn g_large_z_matches_direct_formula_where_both_are_accurate() {
        for z in [1.0f64, 2.0, 5.0] {
            let direct = -beta_unchecked(1.0 - (-z).exp()).ln();
            assert!(rel(g_(z).unwrap(), direct) < 1e-10);
        }
    }

    #[test]
    fn log_f_examples() {
        assert_eq!(log_f(3, 3, 0.2).unwrap(), 0.0);
        assert!((log_f(1, 2, 0.3).unwrap() - 0.3f64.ln()).abs() < 1e-15);
        let direct: f64 = (2..6).map(|j| 1.0 - 0.9f64.powi(j)).product();
        assert!((direct - 0.19 * 0.271 * 0.3439 * 0.40951).abs() < 1e-15);
        assert!((log_f(2, 6, 0.1).unwrap().exp() - direct).abs() < 1e-15);
        assert!((direct - 0.007_251).abs() < 1e-6);
        assert!(log_f(0, 3, 0.1).is_err() && log_f(4, 3, 0.1).is_err());
        assert!(log_f(1, 3, 1.0).is_err());
    }

    #[test]
    fn log_g_matches_product() {
        let p: f64 = 0.07;
        let direct: f64 = (3..12)
            .map(|i| beta_(1.0 - (1.0 - p).powi(i)).unwrap())
            .product();
        assert!((log_g(3, 12, p).unwrap() - direct.ln()).abs() < 1e-12);
    }

    #[test]
    fn dilog_values() {
        assert!((dilog(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        let half = PI * PI / 12.0 - std::f64::consts::LN_2.powi(2) / 2.0;
        assert!((dilog(0.5).unwrap() - half).abs() < 1e-15);
        assert!((half - 0.582_240_5).abs() < 1e-7);
        assert!(dilog(1.5).is_err());
    }

    #[test]
    fn dilog_matches_slow_series() {
        // Brute-force partial sums with 200k terms, tail bounded by
        // x^N / (N^2 (1-x)).
        for &x in &[0.1, 0.3, 0.6, 0.8, 0.9] {
            let mut s = 0.0;
            let mut pw = 1.0;
            for k in 1..200_000 {
                pw *= x;
                s += pw / (k as f64 * k as f64);
            }
            assert!((dilog(x).unwrap() - s).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn integral_g_values() {
        let lambda = PI * PI / 18.0;
        assert!((integral_g(0.0).unwrap() - lambda).abs() < 1e-9);
        assert!(integral_g(60.0).unwrap().abs() < 1e-20);
        for k in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
            assert!(integral_g(k).unwrap() <= integral_f_tail(k).unwrap());
        }
        // Additivity against a plain composite Simpson on [0.5, 2].
        let n = 20_000;
        let h = 1.5 / n as f64;
        let mut s = g_unchecked(0.5) + g_unchecked(2.0);
        for i in 1..n {
            let z = 0.5 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * g_unchecked(z);
        }
        let piece = s * h / 3.0;
        let diff = integral_g(0.5).unwrap() - integral_g(2.0).unwrap();
        assert!((diff - piece).abs() < 1e-10);
    }

    #[test]
    fn integral_f_total_is_lambda_m() {
        assert!((integral_f_tail(0.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn integral_bounds_small_and_large() {
        for i in 1..=100 {
            let eps = i as f64 / 1000.0;
            let v = integral_f(0.0, eps).unwrap();
            let base = eps * (1.0 / eps).ln() + eps;
            assert!(base - 1e-14 <= v && v <= base + eps * eps / 2.0 + 1e-14, "eps={eps}");
        }
        for i in 1..=150 {
            let k = 0.5 + i as f64 / 10.0;
            let v = integral_f_tail(k).unwrap();
            let e = (-k).exp();
            assert!(e <= v && v <= e + e * e / 2.0, "K={k}");
        }
    }

    #[test]
    fn riemann_sandwich_for_f() {
        for &p in &[0.01, 0.05, 0.1, 0.3] {
            let q = q_of_p(p).unwrap();
            for &(a, b) in &[(1u64, 2u64), (2, 6), (5, 40), (10, 300)] {
                let lf = log_f(a, b, p).unwrap();
                let lower = -integral_f((a - 1) as f64 * q, (b - 1) as f64 * q).unwrap() / q;
                let upper = -integral_f(a as f64 * q, b as f64 * q).unwrap() / q;
                assert!(lower <= lf + 1e-12 && lf <= upper + 1e-12, "p={p} a={a} b={b}");
            }
        }
    }

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12, 20);
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }
}
