//! Evaluators for the rigorous bounds on spanning probabilities.
//!
//! Products of many strip probabilities are accumulated as log-sums and only
//! exponentiated when a [`BoundReport`] is built. Every report keeps the
//! unclamped value next to the clamped one, so a vacuous bound shows up as a
//! negative (or infinite) `raw` rather than a silent 0 or 1.

mod special;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, out_of_range, Result};

pub use special::{
    adaptive_simpson, beta_, dilog, f_, g_, integral_f, integral_f_tail, integral_g, log_f, log_g,
    q_of_p,
};

/// Standard-model threshold `pi^2/18 = int_0^inf g`.
pub const LAMBDA: f64 = PI * PI / 18.0;
/// Modified-model threshold `pi^2/6 = int_0^inf f`.
pub const LAMBDA_M: f64 = PI * PI / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConstants {
    pub lambda: f64,
    pub lambda_m: f64,
}

impl Default for ThresholdConstants {
    fn default() -> Self {
        ThresholdConstants {
            lambda: LAMBDA,
            lambda_m: LAMBDA_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula: String,
    /// `raw` clamped to `[0,1]`.
    pub value: f64,
    /// Pre-clamp value; infinite when the inequality carries no information
    /// (serialized as `null`).
    pub raw: f64,
    #[serde(default)]
    pub vacuous: bool,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(formula: &str, raw: f64, inputs: &[(&str, f64)]) -> Self {
        BoundReport {
            formula: formula.to_string(),
            value: raw.clamp(0.0, 1.0),
            raw,
            vacuous: false,
            inputs: inputs.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

fn check_open_p(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        out_of_range(format!("p = {p} must lie in (0,1)"))
    }
}

/// Lower bound on `I(L)` from `I(l)` by tiling `R(L)` with disjoint copies of
/// `R(l)` and requiring every copy of `R(1,l)` to be non-vacant.
pub fn comp_lower(big: u64, small: u64, p: f64, i_small: f64) -> Result<BoundReport> {
    if !(big >= small && small >= 2) {
        return out_of_range(format!("need L >= l >= 2, got L={big}, l={small}"));
    }
    let p = check_open_p(p)?;
    let i_small = check_probability("I(l)", i_small)?;
    let (lf, sf) = (big as f64, small as f64);
    let ratio = lf / sf - 1.0;
    let nucleate = -(-i_small * ratio * ratio).exp_m1();
    let grow = 1.0 - 2.0 * lf * lf * (-p * sf).exp();
    Ok(BoundReport::new(
        "comp_lower",
        nucleate * grow,
        &[("L", lf), ("l", sf), ("p", p), ("I_l", i_small)],
    ))
}

/// Upper bound on `I(L)` from `I(l)` via overlapping copies of `R(l)`:
/// `I(L) <= I(l) (2L/(l-1))^2 / (1 - 2 l^2 e^{-p(l/4-1)})`, vacuous when
/// the denominator is not positive.
pub fn comp_upper(big: u64, small: u64, p: f64, i_small: f64) -> Result<BoundReport> {
    if !(big >= small && small >= 2) {
        return out_of_range(format!("need L >= l >= 2, got L={big}, l={small}"));
    }
    let p = check_open_p(p)?;
    let i_small = check_probability("I(l)", i_small)?;
    let (lf, sf) = (big as f64, small as f64);
    let inputs = [("L", lf), ("l", sf), ("p", p), ("I_l", i_small)];
    let denominator = 1.0 - 2.0 * sf * sf * (-p * (sf / 4.0 - 1.0)).exp();
    if denominator <= 0.0 {
        let mut report = BoundReport::new("comp_upper", f64::INFINITY, &inputs);
        report.vacuous = true;
        return Ok(report);
    }
    let covering = 2.0 * lf / (sf - 1.0);
    Ok(BoundReport::new(
        "comp_upper",
        i_small * covering * covering / denominator,
        &inputs,
    ))
}

/// Modified model: `I_M(a) >= (2p - p^2)^a / 2` from diagonal occupation.
pub fn diag_lower(a: u64, p: f64) -> Result<BoundReport> {
    if a < 1 {
        return out_of_range("diag_lower needs a >= 1");
    }
    let p = check_open_p(p)?;
    let log = -std::f64::consts::LN_2 + a as f64 * (p * (2.0 - p)).ln();
    Ok(BoundReport::new(
        "diag_lower",
        log.exp(),
        &[("a", a as f64), ("p", p)],
    ))
}

/// `I(b) >= I(a) (F_a^b)^2`: every face strip from `R(a)` to `R(b)` is non-vacant.
pub fn growth_lower(i_a: f64, a: u64, b: u64, p: f64) -> Result<BoundReport> {
    let i_a = check_probability("I(a)", i_a)?;
    let lf = log_f(a, b, p)?;
    Ok(BoundReport::new(
        "growth_lower",
        i_a * (2.0 * lf).exp(),
        &[("I_a", i_a), ("a", a as f64), ("b", b as f64), ("p", p)],
    ))
}

/// Scanning estimate:
/// `I(l) >= (1 - e^{-m^2 I(b)}) (F_b^l F_{l-mb}^l)^2 (1-(1-p)^{l-mb})^l`.
pub fn scan_lower(b: u64, ell: u64, m: u64, p: f64, i_b: f64) -> Result<BoundReport> {
    if b < 1 || m < 1 || m.saturating_mul(b) >= ell {
        return out_of_range(format!("scan_lower needs b, m >= 1 and m*b < l, got b={b}, m={m}, l={ell}"));
    }
    let p = check_open_p(p)?;
    let i_b = check_probability("I(b)", i_b)?;
    let q = q_of_p(p)?;
    let rest = ell - m * b;
    let mf = m as f64;
    let log_nucleate = (-(-mf * mf * i_b).exp_m1()).ln();
    let log_faces = 2.0 * (log_f(b, ell, p)? + log_f(rest, ell, p)?);
    let log_columns = -(ell as f64) * special::f_unchecked(rest as f64 * q);
    Ok(BoundReport::new(
        "scan_lower",
        (log_nucleate + log_faces + log_columns).exp(),
        &[
            ("b", b as f64),
            ("l", ell as f64),
            ("m", mf),
            ("p", p),
            ("I_b", i_b),
        ],
    ))
}

/// Modified-model nucleation bound for `p <= 1/10`, `B >= sqrt(2/p)`:
/// `I(B) >= exp(-2 lambda_M / q + 2 sqrt(2/p) - log(1/p) - 3.2)`.
pub fn mod_nuc_lower(big_b: u64, p: f64) -> Result<BoundReport> {
    if !(p > 0.0 && p <= 0.1) {
        return out_of_range(format!("mod_nuc_lower needs 0 < p <= 1/10, got {p}"));
    }
    if (big_b as f64) < (2.0 / p).sqrt() {
        return out_of_range(format!("mod_nuc_lower needs B >= sqrt(2/p), got B={big_b}"));
    }
    let exponent = -2.0 * LAMBDA_M / q_of_p(p)? + 2.0 * (2.0 / p).sqrt() + p.ln() - 3.2;
    Ok(BoundReport::new(
        "mod_nuc_lower",
        exponent.exp(),
        &[("B", big_b as f64), ("p", p), ("exponent", exponent)],
    ))
}

/// The constructive chain behind [`mod_nuc_lower`] before its final
/// simplification: `I_M(B) >= (2p-p^2)^A (F_A^B)^2 / 2` with
/// `A = min(B, ceil(sqrt(2/p)))`.
pub fn mod_nuc_chain(big_b: u64, p: f64) -> Result<BoundReport> {
    if big_b < 1 {
        return out_of_range("mod_nuc_chain needs B >= 1");
    }
    let p = check_open_p(p)?;
    let a = ((2.0 / p).sqrt().ceil() as u64).clamp(1, big_b);
    let diag = diag_lower(a, p)?;
    let mut report = growth_lower(diag.value, a, big_b, p)?;
    report.formula = "mod_nuc_chain".into();
    report.inputs = [("B", big_b as f64), ("p", p), ("A", a as f64)]
        .iter()
        .map(|&(k, v)| (k.to_string(), v))
        .collect();
    Ok(report)
}

/// Outcome of the explicit modified-model criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub certified: bool,
    /// `lambda_M - sqrt(2p) + 1.8 p log(1/p) + 2p`.
    pub threshold: f64,
    pub p_log_l: f64,
    /// `p log L - threshold`; non-negative iff certified.
    pub margin: f64,
    /// Guaranteed lower bound on `I_M(L,p)`: 1/2 when certified, else 0.
    pub report: BoundReport,
}

/// Whether `p log L >= lambda_M - sqrt(2p) + 1.8 p log(1/p) + 2p`, which
/// guarantees `I_M(L,p) >= 1/2`. `log_l` is the natural log of `L`.
pub fn explicit_certificate(p: f64, log_l: f64) -> Result<Certificate> {
    if !(p > 0.0 && p <= 0.1) {
        return out_of_range(format!("explicit_certificate needs 0 < p <= 1/10, got {p}"));
    }
    if !(log_l > 0.0) {
        return out_of_range(format!("explicit_certificate needs log L > 0, got {log_l}"));
    }
    let threshold = LAMBDA_M - (2.0 * p).sqrt() + 1.8 * p * (1.0 / p).ln() + 2.0 * p;
    let p_log_l = p * log_l;
    let certified = p_log_l >= threshold;
    let guaranteed = if certified { 0.5 } else { 0.0 };
    Ok(Certificate {
        certified,
        threshold,
        p_log_l,
        margin: p_log_l - threshold,
        report: BoundReport::new(
            "explicit",
            guaranteed,
            &[("p", p), ("logL", log_l), ("threshold", threshold)],
        ),
    })
}

/// Constants `(C_-, C_+)` bracketing `p log L_{1-eps} - p log L_eps` in units
/// of `p`. `C_-` is the supremum of the admissible lower constants.
pub fn window_constants(eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 0.2) {
        return out_of_range(format!("window_constants needs 0 < eps < 1/5, got {eps}"));
    }
    let c_plus = (1.0 + ((1.0 / eps + 1.0).ln() / eps).sqrt()).ln();
    let c_minus = 0.5 * ((1.0 - eps) / (4.0 * eps)).ln();
    Ok((c_minus, c_plus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert_eq!(ThresholdConstants::default().lambda_m, 3.0 * LAMBDA);
        assert!((LAMBDA - 0.548_311_355_616_075_5).abs() < 1e-16);
        assert!((LAMBDA_M - 1.644_934_066_848_226_4).abs() < 1e-15);
    }

    #[test]
    fn comp_lower_examples() {
        assert_eq!(comp_lower(50, 5, 0.3, 0.0).unwrap().value, 0.0);
        assert_eq!(comp_lower(10, 10, 0.3, 0.7).unwrap().value, 0.0);
        let r = comp_lower(100, 10, 0.5, 0.5).unwrap();
        let second = 1.0 - 2.0e4 * (-5.0f64).exp();
        assert!(second < 0.0);
        assert!(r.raw < 0.0 && r.value == 0.0);
        assert!(comp_lower(5, 10, 0.5, 0.5).is_err());
        assert!(comp_lower(10, 1, 0.5, 0.5).is_err());
        assert!(comp_lower(10, 5, 0.5, 1.5).is_err());
    }

    #[test]
    fn comp_upper_examples() {
        let r = comp_upper(200, 100, 0.5, 0.0).unwrap();
        assert!(!r.vacuous && r.value == 0.0);
        let r = comp_upper(200, 10, 0.1, 0.2).unwrap();
        assert!(r.vacuous && r.value == 1.0 && r.raw.is_infinite());
        assert!(serde_json::to_string(&r).unwrap().contains(r#""raw":null"#));
    }

    #[test]
    fn diag_lower_examples() {
        for &p in &[0.01, 0.1, 0.5, 0.9] {
            let v = diag_lower(1, p).unwrap().value;
            assert!((v - (2.0 * p - p * p) / 2.0).abs() < 1e-15 && v <= p);
        }
        assert!((diag_lower(2, 0.1).unwrap().value - 0.01805).abs() < 1e-15);
        assert!((diag_lower(3, 0.1).unwrap().value - 0.003_429_5).abs() < 1e-15);
        assert!(diag_lower(0, 0.1).is_err());
    }

    #[test]
    fn growth_lower_examples() {
        assert_eq!(growth_lower(0.3, 4, 4, 0.2).unwrap().value, 0.3);
        let r = growth_lower(0.5, 2, 6, 0.1).unwrap();
        assert!((r.value - 0.5 * 0.007_251f64.powi(2)).abs() < 1e-7);
    }

    #[test]
    fn scan_lower_examples() {
        assert_eq!(scan_lower(8, 40, 3, 0.25, 0.0).unwrap().value, 0.0);
        let r = scan_lower(9, 10, 1, 0.3, 0.5).unwrap();
        assert!(r.value > 0.0 && r.value < 1e-3, "{r:?}");
        assert!(scan_lower(10, 10, 1, 0.3, 0.5).is_err());
        assert!(scan_lower(0, 10, 1, 0.3, 0.5).is_err());
    }

    #[test]
    fn mod_nuc_examples() {
        let r = mod_nuc_lower(5, 0.1).unwrap();
        assert!((r.inputs["exponent"] + 27.7832).abs() < 1e-4);
        assert!((r.value / 8.588_513e-13 - 1.0).abs() < 1e-6);
        assert!((r.value / 8.56e-13 - 1.0).abs() < 1e-2);
        let chain = mod_nuc_chain(5, 0.1).unwrap();
        assert!(r.value <= chain.value);
        assert!(mod_nuc_lower(4, 0.1).is_err());
        assert!(mod_nuc_lower(100, 0.2).is_err());
        for &p in &[0.1, 0.05, 0.02, 0.01] {
            for big_b in [(2.0f64 / p).sqrt().ceil() as u64, 50, 400] {
                if (big_b as f64) < (2.0 / p).sqrt() {
                    continue;
                }
                let v = mod_nuc_lower(big_b, p).unwrap();
                assert!(v.value <= 1.0);
                assert!(v.value <= mod_nuc_chain(big_b, p).unwrap().value, "p={p} B={big_b}");
            }
        }
    }

    #[test]
    fn explicit_examples() {
        let ln10 = std::f64::consts::LN_10;
        let c = explicit_certificate(0.0014, 500.0 * ln10).unwrap();
        assert!(c.certified);
        assert!((c.threshold - 1.611_378_7).abs() < 1e-7);
        assert!((c.p_log_l - 1.611_809_5).abs() < 1e-7);
        assert!(c.p_log_l < 0.98 * LAMBDA_M);
        let c = explicit_certificate(0.000_235_6, 3000.0 * ln10).unwrap();
        assert!(c.certified);
        assert!((c.p_log_l - 1.627_467_1).abs() < 1e-6);
        assert!(c.p_log_l < 0.99 * LAMBDA_M);
        let c = explicit_certificate(0.1, 1.0).unwrap();
        assert!(!c.certified && c.report.value == 0.0);
        assert!(explicit_certificate(0.2, 10.0).is_err());
        assert!(explicit_certificate(0.05, 0.0).is_err());
    }

    #[test]
    fn window_constant_examples() {
        let (cm, cp) = window_constants(0.1).unwrap();
        assert!((cp - (1.0 + (10.0 * 11f64.ln()).sqrt()).ln()).abs() < 1e-15);
        assert!((cp - 1.7744).abs() < 1e-4);
        assert!((cm - 0.4055).abs() < 1e-4);
        assert!(window_constants(0.2).is_err() && window_constants(0.0).is_err());
    }

    #[test]
    fn window_constants_approach_half_log() {
        let mut last = (f64::INFINITY, f64::INFINITY);
        for k in [2, 5, 10, 20, 50, 100, 200, 300] {
            let eps = 10f64.powi(-k);
            let (cm, cp) = window_constants(eps).unwrap();
            let half = 0.5 * (1.0 / eps).ln();
            let dev = ((cm / half - 1.0).abs(), (cp / half - 1.0).abs());
            assert!(dev.0 < last.0 && dev.1 < last.1);
            last = dev;
        }
        assert!(last.0 < 0.01 && last.1 < 0.01);
    }

    #[test]
    fn beta_inequality_on_grid() {
        let n = 200;
        for i in 0..=n {
            for j in i..=n {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                let (bu, bv) = (beta_(u).unwrap(), beta_(v).unwrap());
                assert!(u * bv + (1.0 - u) * v - bu * bv >= -1e-12, "u={u} v={v}");
            }
        }
    }
}
