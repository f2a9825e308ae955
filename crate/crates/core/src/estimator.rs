//! Monte Carlo estimates of `I(L,p)`, `p_alpha(L)` and the `L`-window.
//!
//! Trial `i` of a run with seed `s` always draws from `trial_rng(s, i)`, and
//! per-chunk success counts are added as integers, so results do not depend
//! on how trials are spread over threads.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, out_of_range, Error, Result};
use crate::lattice::{is_internally_spanned, threshold_field, BernoulliSites, ClosureEngine, ModelKind, Rect};
use crate::lattice::sample_uniforms;
use crate::rng::{derive_seed, trial_rng};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Largest side accepted by the simulators.
pub const MAX_SIDE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub successes: u64,
    pub seed: u64,
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).clamp(0.0, phat), (centre + half).clamp(phat, 1.0))
}

impl Estimate {
    /// Point estimate with a Wilson 95% interval.
    pub fn from_counts(successes: u64, trials: u64, seed: u64) -> Self {
        Self::with_z(successes, trials, seed, Z95)
    }

    pub fn with_z(successes: u64, trials: u64, seed: u64, z: f64) -> Self {
        let (ci_low, ci_high) = wilson(successes, trials, z);
        Estimate {
            value: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            trials,
            successes,
            seed,
        }
    }

    pub fn covers(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    /// `sqrt(value (1 - value) / trials)`.
    pub fn std_error(&self) -> f64 {
        (self.value * (1.0 - self.value) / self.trials as f64).sqrt()
    }
}

fn check_side(side: u64) -> Result<()> {
    if side == 0 {
        return out_of_range("side length must be at least 1");
    }
    if side > MAX_SIDE {
        return Err(Error::ResourceCap(format!("L = {side} exceeds {MAX_SIDE}")));
    }
    Ok(())
}

/// Runs trials `range` on one engine and counts spanning ones.
fn count_spanning(
    engine: &mut ClosureEngine,
    p: f64,
    seed: u64,
    range: std::ops::Range<u64>,
) -> Result<u64> {
    let area = engine.area();
    let mut hits = 0;
    for t in range {
        engine.reset();
        let mut rng = trial_rng(seed, t);
        for i in BernoulliSites::new(&mut rng, area, p)? {
            engine.infect(i);
        }
        engine.run();
        hits += engine.spans() as u64;
    }
    Ok(hits)
}

/// Splits `trials` into contiguous chunks so that large boxes still spread
/// over every worker and small boxes amortize engine setup.
fn chunks(trials: u64, area: usize) -> Vec<std::ops::Range<u64>> {
    let workers = rayon::current_num_threads() as u64;
    let by_work = (trials / (8 * workers)).max(1);
    let by_memory = ((1u64 << 22) / area as u64).max(1);
    let size = by_work.min(by_memory).min(1 << 16);
    (0..trials.div_ceil(size))
        .map(|k| k * size..((k + 1) * size).min(trials))
        .collect()
}

/// Fraction of `trials` independent Bernoulli(p) fields on `R(L)` that are
/// internally spanned.
pub fn estimate_i(side: u64, p: f64, model: ModelKind, trials: u64, seed: u64) -> Result<Estimate> {
    check_side(side)?;
    let p = check_probability("p", p)?;
    if trials == 0 {
        return out_of_range("trials must be at least 1");
    }
    let w = side as usize;
    let parts = chunks(trials, w * w);
    let counts: Vec<u64> = parts
        .into_par_iter()
        .map(|range| {
            let mut engine = ClosureEngine::new(w, w, model)?;
            count_spanning(&mut engine, p, seed, range)
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_counts(counts.iter().sum(), trials, seed))
}

/// Spanning indicators of one shared uniform field thresholded at each of
/// `ps`: site `x` is occupied at density `p` iff `U_x < p`.
pub fn coupled_trial<R: Rng + ?Sized>(
    side: u64,
    ps: &[f64],
    model: ModelKind,
    rng: &mut R,
) -> Result<Vec<bool>> {
    check_side(side)?;
    let r = Rect::square(side as i64)?;
    let uniforms = sample_uniforms(r, rng);
    ps.iter()
        .map(|&p| Ok(is_internally_spanned(&threshold_field(r, &uniforms, p)?, model)))
        .collect()
}

/// Estimates at every `p` in `ps` from the same coupled fields.
pub fn estimate_i_coupled(
    side: u64,
    ps: &[f64],
    model: ModelKind,
    trials: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if trials == 0 {
        return out_of_range("trials must be at least 1");
    }
    let rows: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| coupled_trial(side, ps, model, &mut trial_rng(seed, t)))
        .collect::<Result<_>>()?;
    Ok((0..ps.len())
        .map(|k| {
            let hits = rows.iter().filter(|row| row[k]).count() as u64;
            Estimate::from_counts(hits, trials, seed)
        })
        .collect())
}

/// One probe of the bisection for `p_alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub p: f64,
    pub estimate: Estimate,
    /// Whether the probe was judged to have `I(L,p) <= alpha`.
    pub below: bool,
}

/// Point estimate of `p_alpha(L)` with the final bisection bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PAlphaEstimate {
    #[serde(rename = "L")]
    pub side: u64,
    pub alpha: f64,
    pub model: ModelKind,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub tol: f64,
    pub trials_per_probe: u64,
    pub seed: u64,
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PAlphaOptions {
    /// Initial bracket; `I(L,lo) <= alpha < I(L,hi)` is assumed.
    pub bracket: (f64, f64),
    /// Cheap first look at each probe; 0 disables it.
    pub pilot_trials: u64,
    /// `z` for which a pilot interval excluding `alpha` settles the probe.
    pub pilot_z: f64,
    /// Doublings of the trial count while `alpha` is inside the 95% interval.
    pub max_boosts: u32,
    pub max_iterations: usize,
}

impl Default for PAlphaOptions {
    fn default() -> Self {
        PAlphaOptions {
            bracket: (0.0, 1.0),
            pilot_trials: 100,
            pilot_z: 5.0,
            max_boosts: 1,
            max_iterations: 60,
        }
    }
}

/// `p_alpha(L) = sup{p : I(L,p) <= alpha}` by stochastic bisection on `p`.
pub fn estimate_p_alpha(
    side: u64,
    alpha: f64,
    model: ModelKind,
    tol: f64,
    trials_per_probe: u64,
    seed: u64,
) -> Result<PAlphaEstimate> {
    estimate_p_alpha_with(side, alpha, model, tol, trials_per_probe, seed, PAlphaOptions::default())
}

pub fn estimate_p_alpha_with(
    side: u64,
    alpha: f64,
    model: ModelKind,
    tol: f64,
    trials_per_probe: u64,
    seed: u64,
    opts: PAlphaOptions,
) -> Result<PAlphaEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return out_of_range(format!("alpha = {alpha} must lie in (0,1)"));
    }
    if !(tol > 0.0) {
        return out_of_range(format!("tol = {tol} must be positive"));
    }
    if trials_per_probe == 0 {
        return out_of_range("trials per probe must be at least 1");
    }
    let (mut lo, mut hi) = opts.bracket;
    check_probability("bracket low", lo)?;
    check_probability("bracket high", hi)?;
    if lo >= hi {
        return out_of_range(format!("empty bracket [{lo}, {hi}]"));
    }
    check_side(side)?;
    let mut probes = Vec::new();
    let mut iteration = 0;
    while hi - lo >= tol {
        if iteration >= opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations: iteration,
                detail: format!("bracket [{lo}, {hi}] still wider than tol = {tol}"),
            });
        }
        let mid = 0.5 * (lo + hi);
        let stage_seed = |stage: u64| derive_seed(seed, (iteration as u64) << 8 | stage);
        let mut decided = None;
        if opts.pilot_trials > 0 && opts.pilot_trials < trials_per_probe {
            let pilot = estimate_i(side, mid, model, opts.pilot_trials, stage_seed(0))?;
            let (l, h) = wilson(pilot.successes, pilot.trials, opts.pilot_z);
            if h < alpha || l > alpha {
                decided = Some((pilot, h < alpha));
            }
        }
        let (estimate, below) = match decided {
            Some(d) => d,
            None => {
                let mut trials = trials_per_probe;
                let mut est = estimate_i(side, mid, model, trials, stage_seed(1))?;
                for boost in 0..opts.max_boosts {
                    if !est.covers(alpha) {
                        break;
                    }
                    trials *= 2;
                    est = estimate_i(side, mid, model, trials, stage_seed(2 + boost as u64))?;
                }
                (est, est.value <= alpha)
            }
        };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(Probe {
            p: mid,
            estimate,
            below,
        });
        iteration += 1;
    }
    Ok(PAlphaEstimate {
        side,
        alpha,
        model,
        value: 0.5 * (lo + hi),
        ci_low: lo,
        ci_high: hi,
        tol,
        trials_per_probe,
        seed,
        probes,
    })
}

/// Estimates of `L_lower = min{L : I(L,p) >= eps}` and
/// `L_upper = max{L : I(L,p) <= 1-eps}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub p: f64,
    pub eps: f64,
    pub model: ModelKind,
    #[serde(rename = "L_lower")]
    pub l_lower: u64,
    #[serde(rename = "L_upper")]
    pub l_upper: u64,
    pub trials: u64,
    pub seed: u64,
    /// Every side that was simulated, in increasing order.
    pub points: Vec<(u64, Estimate)>,
}

impl WindowResult {
    /// `p log L_upper - p log L_lower`.
    pub fn width(&self) -> f64 {
        self.p * ((self.l_upper as f64).ln() - (self.l_lower as f64).ln())
    }
}

/// Consecutive scan points that must sit confidently above `1-eps` before
/// the scan stops.
const WINDOW_CONFIRMATIONS: usize = 3;

/// Geometric scan in `L` (ratio 1.05) followed by binary refinement of the
/// first upward crossing of `eps` and the last scanned point at or below
/// `1-eps`. No monotonicity in `L` is assumed for the scan itself.
pub fn estimate_l_window(
    p: f64,
    eps: f64,
    model: ModelKind,
    trials: u64,
    seed: u64,
) -> Result<WindowResult> {
    estimate_l_window_with(p, eps, model, trials, seed, MAX_SIDE)
}

pub fn estimate_l_window_with(
    p: f64,
    eps: f64,
    model: ModelKind,
    trials: u64,
    seed: u64,
    max_side: u64,
) -> Result<WindowResult> {
    let p = check_probability("p", p)?;
    if !(eps > 0.0 && eps < 0.2) {
        return out_of_range(format!("eps = {eps} must lie in (0, 1/5)"));
    }
    check_side(max_side)?;
    let mut cache: BTreeMap<u64, Estimate> = BTreeMap::new();
    // Each side has its own stream, so revisiting a side reproduces it.
    let mut at = |side: u64| -> Result<Estimate> {
        if let Some(e) = cache.get(&side) {
            return Ok(*e);
        }
        let e = estimate_i(side, p, model, trials, derive_seed(seed, side))?;
        cache.insert(side, e);
        Ok(e)
    };

    let mut scanned: Vec<(u64, Estimate)> = Vec::new();
    let mut x = 1.0f64;
    let mut side = 1u64;
    let mut confident = 0;
    loop {
        let e = at(side)?;
        scanned.push((side, e));
        confident = if e.ci_low > 1.0 - eps { confident + 1 } else { 0 };
        if confident >= WINDOW_CONFIRMATIONS {
            break;
        }
        if side >= max_side {
            return Err(Error::ScanExhausted(format!(
                "I(L,{p}) not confidently above {} by L = {max_side}",
                1.0 - eps
            )));
        }
        while x.ceil() as u64 <= side {
            x *= 1.05;
        }
        side = (x.ceil() as u64).min(max_side);
    }

    let first = scanned.iter().position(|(_, e)| e.value >= eps);
    let l_lower = match first {
        None => {
            return Err(Error::ScanExhausted(format!("I(L,{p}) never reached {eps}")));
        }
        Some(0) => scanned[0].0,
        Some(k) => {
            // Smallest side in (below, above] whose estimate reaches eps.
            let (mut below, mut above) = (scanned[k - 1].0, scanned[k].0);
            while above - below > 1 {
                let mid = below + (above - below) / 2;
                if at(mid)?.value >= eps {
                    above = mid;
                } else {
                    below = mid;
                }
            }
            above
        }
    };
    let last = scanned.iter().rposition(|(_, e)| e.value <= 1.0 - eps);
    let l_upper = match last {
        None => l_lower,
        Some(k) => {
            // Largest side in [at_most, beyond) still at or below 1-eps.
            let (mut at_most, mut beyond) = (scanned[k].0, scanned[k + 1].0);
            while beyond - at_most > 1 {
                let mid = at_most + (beyond - at_most) / 2;
                if at(mid)?.value <= 1.0 - eps {
                    at_most = mid;
                } else {
                    beyond = mid;
                }
            }
            at_most.max(l_lower)
        }
    };
    drop(at);
    Ok(WindowResult {
        p,
        eps,
        model,
        l_lower,
        l_upper,
        trials,
        seed,
        points: cache.into_iter().collect(),
    })
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelKind,
    #[serde(rename = "L")]
    pub side: u64,
    pub p: f64,
    pub trials: u64,
    pub successes: u64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepError {
    #[serde(rename = "L")]
    pub side: u64,
    pub p: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub errors: Vec<SweepError>,
}

/// One estimate per `(L, p)` point, all with the same seed, so repeated
/// points give identical rows. Failing points are collected in `errors`.
pub fn sweep(points: &[(u64, f64)], model: ModelKind, trials: u64, seed: u64) -> SweepTable {
    let mut table = SweepTable::default();
    for &(side, p) in points {
        match estimate_i(side, p, model, trials, seed) {
            Ok(e) => table.rows.push(SweepRow {
                model,
                side,
                p,
                trials: e.trials,
                successes: e.successes,
                value: e.value,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                seed,
            }),
            Err(err) => table.errors.push(SweepError {
                side,
                p,
                error: err.to_string(),
            }),
        }
    }
    table
}

impl SweepTable {
    /// CSV with header `model,L,p,trials,successes,value,ci_low,ci_high,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::OutOfRange(format!("csv output failed: {e}"));
        if self.rows.is_empty() {
            w.write_record(["model", "L", "p", "trials", "successes", "value", "ci_low", "ci_high", "seed"])
                .map_err(io)?;
        }
        for row in &self.rows {
            w.serialize(row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::OutOfRange(format!("csv output failed: {e}")))?;
        Ok(())
    }
}
