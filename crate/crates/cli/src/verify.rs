//! Quick invariant suites behind `bperc verify`.

use bperc_core::bounds::{self, LAMBDA, LAMBDA_M};
use bperc_core::estimator;
use bperc_core::lattice::{closure, sample_field, step};
use bperc_core::mechanisms::{self, MechanismSpec};
use bperc_core::rng::{derive_seed, trial_rng};
use bperc_core::{oracle, ModelKind, Rect};
use clap::ValueEnum;
use serde::Serialize;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Lattice,
    Oracle,
    Bounds,
    Mechanisms,
    Estimator,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

const MODELS: [ModelKind; 2] = [ModelKind::Standard, ModelKind::Modified];

pub fn run(suite: Suite, seed: u64) -> Report {
    let mut checks = Vec::new();
    let want = |s: Suite| suite == Suite::All || suite == s;
    if want(Suite::Lattice) {
        lattice(seed, &mut checks);
    }
    if want(Suite::Oracle) {
        oracle_suite(seed, &mut checks);
    }
    if want(Suite::Bounds) {
        bounds_suite(&mut checks);
    }
    if want(Suite::Mechanisms) {
        mechanisms_suite(seed, &mut checks);
    }
    if want(Suite::Estimator) {
        estimator_suite(seed, &mut checks);
    }
    Report {
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn push(out: &mut Vec<Check>, suite: &'static str, name: &'static str, passed: bool, detail: String) {
    out.push(Check {
        suite,
        name,
        passed,
        detail,
    });
}

fn lattice(seed: u64, out: &mut Vec<Check>) {
    let r = Rect::rect(12, 9).expect("valid");
    let (mut idem, mut mono, mut ext, mut fixed) = (0, 0, 0, 0);
    let n = 200;
    for i in 0..n {
        let mut rng = trial_rng(derive_seed(seed, 1), i);
        let p = 0.05 + 0.4 * (i as f64 / n as f64);
        let small = sample_field(r, p, &mut rng).expect("p in range");
        let extra = sample_field(r, 0.1, &mut rng).expect("p in range");
        let mut big = small.clone();
        for (x, y) in extra.occupied_sites() {
            big.set(x, y, true);
        }
        for model in MODELS {
            let c = closure(&small, model);
            idem += (closure(&c, model) != c) as u32;
            ext += (!small.is_subset_of(&c)) as u32;
            mono += (!c.is_subset_of(&closure(&big, model))) as u32;
            fixed += (step(&c, model) != c) as u32;
        }
    }
    push(out, "lattice", "closure_idempotent", idem == 0, format!("{idem} violations"));
    push(out, "lattice", "closure_extensive", ext == 0, format!("{ext} violations"));
    push(out, "lattice", "closure_monotone", mono == 0, format!("{mono} violations"));
    push(out, "lattice", "closure_is_fixed_point", fixed == 0, format!("{fixed} violations"));
}

fn oracle_suite(seed: u64, out: &mut Vec<Check>) {
    for model in MODELS {
        let p = 0.3;
        let exact = oracle::exact_i(3, p, model).expect("small box");
        let est = estimator::estimate_i(3, p, model, 20_000, derive_seed(seed, 2)).expect("valid");
        let wide = estimator::Estimate::with_z(est.successes, est.trials, est.seed, 4.0);
        push(
            out,
            "oracle",
            "exact_i3_inside_monte_carlo_ci",
            wide.covers(exact),
            format!("{model:?}: exact {exact:.6}, estimate {:.6} [{:.6},{:.6}]", est.value, wide.ci_low, wide.ci_high),
        );
    }
    let one = oracle::exact_i(1, 0.37, ModelKind::Standard).expect("small box");
    push(out, "oracle", "single_site_is_p", (one - 0.37).abs() < 1e-12, format!("{one}"));

    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let mut rng = trial_rng(derive_seed(seed, 3), i);
        let u: Vec<f64> = (0..(i % 9) as usize).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let a = oracle::double_gap_exact(&u).expect("probabilities");
        let b = mechanisms::log_no_double_gap(&u).expect("probabilities").exp();
        worst = worst.max((a - b).abs());
    }
    push(out, "oracle", "double_gap_enumeration_matches_recursion", worst < 1e-12, format!("max diff {worst:e}"));
}

fn bounds_suite(out: &mut Vec<Check>) {
    let d = bounds::dilog(1.0).expect("in domain");
    push(out, "bounds", "dilog_one", (d - LAMBDA_M).abs() < 1e-9, format!("{d}"));
    let g = bounds::integral_g(0.0).expect("in domain");
    push(out, "bounds", "integral_g_zero", (g - LAMBDA).abs() < 1e-9, format!("{g}"));

    // u beta(v) + (1-u) v >= beta(u) beta(v) for u <= v
    let mut bad = 0;
    for i in 0..=100 {
        for j in i..=100 {
            let (u, v) = (i as f64 / 100.0, j as f64 / 100.0);
            let (bu, bv) = (bounds::beta_(u).unwrap(), bounds::beta_(v).unwrap());
            if u * bv + (1.0 - u) * v - bu * bv < -1e-12 {
                bad += 1;
            }
        }
    }
    push(out, "bounds", "beta_inequality", bad == 0, format!("{bad} violations"));

    let lo = bounds::comp_lower(40, 10, 0.1, 0.3).expect("valid");
    let hi = bounds::comp_upper(40, 10, 0.1, 0.3).expect("valid");
    push(out, "bounds", "comp_lower_below_comp_upper", lo.value <= hi.value, format!("{} <= {}", lo.value, hi.value));
}

fn mechanisms_suite(seed: u64, out: &mut Vec<Check>) {
    let specs = [
        MechanismSpec::new(6, vec![]).expect("valid"),
        MechanismSpec::new(12, vec![(3, 7), (7, 11)]).expect("valid"),
        MechanismSpec::new(25, vec![(4, 10), (12, 18)]).expect("valid"),
    ];
    let (mut not_e, mut not_spanned, mut decode_bad, mut total) = (0, 0, 0, 0);
    for (k, spec) in specs.iter().enumerate() {
        for p in [0.1, 0.3] {
            for i in 0..40 {
                let mut rng = trial_rng(derive_seed(seed, 4 + k as u64), i);
                let cfg = mechanisms::sample_conditioned_on_e(spec, p, &mut rng).expect("positive probability");
                total += 1;
                not_e += !mechanisms::check_event_e(&cfg, spec).unwrap() as u32;
                not_spanned += !closure(&cfg, ModelKind::Standard).is_full() as u32;
                decode_bad += (mechanisms::decode_mechanism(&cfg, spec.big_b).ok().as_ref() != Some(spec)) as u32;
            }
        }
    }
    push(out, "mechanisms", "samples_satisfy_event", not_e == 0, format!("{not_e}/{total} violations"));
    push(out, "mechanisms", "event_implies_spanning", not_spanned == 0, format!("{not_spanned}/{total} violations"));
    push(out, "mechanisms", "decode_round_trip", decode_bad == 0, format!("{decode_bad}/{total} violations"));
}

fn estimator_suite(seed: u64, out: &mut Vec<Check>) {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(|| estimator::estimate_i(24, 0.12, ModelKind::Standard, 4000, seed).expect("valid"))
    };
    let (a, b) = (run(1), run(3));
    push(out, "estimator", "independent_of_thread_count", a == b, format!("{} vs {}", a.successes, b.successes));
    let (lo, hi) = estimator::wilson(0, 100, estimator::Z95);
    push(out, "estimator", "wilson_zero_successes", lo == 0.0 && hi > 0.0 && hi < 0.05, format!("[{lo},{hi}]"));
}
