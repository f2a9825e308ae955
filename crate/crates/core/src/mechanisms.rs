//! Corner growth events for the standard model.
//!
//! `D(a,b)` grows a square from side `a` to side `b` along the diagonal: no two
//! consecutive row strips `R(1,i;i-2,i)` are vacant, and likewise for the
//! column strips `R(i,1;i,i-2)`, `i = a+1..=b`. `J(a,b)` is a jog: two vacant
//! rows stop vertical growth above `R(a)`, the rectangle grows sideways to
//! width `b`, the site `(b,a+3)` restarts vertical growth and the square is
//! completed at `R(b)`. `E(spec)` chains `D(2,a1)`, `J(a1,b1)`, `D(b1,a2)`,
//! ..., `J(am,bm)`, `D(bm,B-1)` and occupies the corners `(1,1)`, `(2,2)`,
//! `(B,1)`, `(1,B)`.
//!
//! Every event is a conjunction of clauses on pairwise disjoint site sets, so
//! the same clause list drives the checker, the exact probability and the
//! conditioned sampler.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, out_of_range, Error, Result};
use crate::lattice::{sample_field, Config, Rect};

/// The pair list `(a1,b1,...,am,bm)` and side `B` naming one event `E`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MechanismSpec {
    #[serde(rename = "B")]
    pub big_b: u64,
    pub pairs: Vec<(u64, u64)>,
}

impl MechanismSpec {
    pub fn new(big_b: u64, pairs: Vec<(u64, u64)>) -> Result<Self> {
        let spec = MechanismSpec { big_b, pairs };
        spec.validate()?;
        Ok(spec)
    }

    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// `B >= 3`, `2 <= a1`, `ai + 4 <= bi <= a(i+1)` and `bm <= B-1`.
    pub fn validate(&self) -> Result<()> {
        if self.big_b < 3 {
            return out_of_range(format!("mechanism needs B >= 3, got {}", self.big_b));
        }
        let mut floor = 2;
        for &(a, b) in &self.pairs {
            if a < floor {
                return out_of_range(format!("pair ({a},{b}) starts below {floor} in {self}"));
            }
            if b < a + 4 {
                return out_of_range(format!("pair ({a},{b}) needs b - a >= 4 in {self}"));
            }
            floor = b;
        }
        if floor > self.big_b - 1 {
            return out_of_range(format!("last pair must end at most at B-1 in {self}"));
        }
        Ok(())
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B={} [", self.big_b)?;
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({a},{b})")?;
        }
        write!(f, "]")
    }
}

/// Coordinate box `[x1,x2] x [y1,y2]`, possibly empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Region {
    x1: i64,
    y1: i64,
    x2: i64,
    y2: i64,
}

fn region(x1: u64, y1: u64, x2: u64, y2: u64) -> Region {
    Region {
        x1: x1 as i64,
        y1: y1 as i64,
        x2: x2 as i64,
        y2: y2 as i64,
    }
}

impl Region {
    fn size(&self) -> u64 {
        if self.x2 < self.x1 || self.y2 < self.y1 {
            0
        } else {
            ((self.x2 - self.x1 + 1) * (self.y2 - self.y1 + 1)) as u64
        }
    }

    fn sites(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.y1..=self.y2).flat_map(move |y| (self.x1..=self.x2).map(move |x| (x, y)))
    }

    fn is_vacant(&self, cfg: &Config) -> bool {
        self.size() == 0 || cfg.count_in(self.x1, self.y1, self.x2, self.y2) == 0
    }

    /// An empty box counts as non-vacant: a degenerate clause is satisfied.
    fn is_nonvacant(&self, cfg: &Config) -> bool {
        self.size() == 0 || cfg.count_in(self.x1, self.y1, self.x2, self.y2) > 0
    }
}

#[derive(Debug, Clone)]
enum Clause {
    NonVacant(Region),
    Vacant(Region),
    Occupied(i64, i64),
    /// The strips' non-vacancy events have no two consecutive failures.
    NoDoubleGap(Vec<Region>),
}

fn has_double_gap(events: impl Iterator<Item = bool>) -> bool {
    let mut previous = true;
    for e in events {
        if !e && !previous {
            return true;
        }
        previous = e;
    }
    false
}

/// `log P(n sites not all healthy) = log(1 - (1-p)^n)`; 0 for `n = 0`.
fn log_nonvacant(n: u64, p: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (-(n as f64 * (-p).ln_1p()).exp_m1()).ln()
}

fn log_vacant(n: u64, p: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * (-p).ln_1p()
    }
}

fn nonvacant_prob(n: u64, p: f64) -> f64 {
    log_nonvacant(n, p).exp()
}

/// Log of the no-double-gap probability, by the same recursion as
/// [`crate::oracle::double_gap_exact`] but rescaled at every step so long
/// sequences of small probabilities do not underflow.
pub fn log_no_double_gap(u: &[f64]) -> Result<f64> {
    for &x in u {
        check_probability("u_i", x)?;
    }
    let (mut prev2, mut prev1, mut log_scale) = (1.0f64, 1.0f64, 0.0f64);
    for k in 1..u.len() {
        let a = u[k] * prev1 + (1.0 - u[k]) * u[k - 1] * prev2;
        prev2 = prev1;
        prev1 = a;
        if prev1 > 0.0 && prev1 < 1e-200 {
            log_scale += prev1.ln();
            prev2 /= prev1;
            prev1 = 1.0;
        }
    }
    Ok(prev1.ln() + log_scale)
}

impl Clause {
    fn holds(&self, cfg: &Config) -> bool {
        match self {
            Clause::NonVacant(r) => r.is_nonvacant(cfg),
            Clause::Vacant(r) => r.is_vacant(cfg),
            Clause::Occupied(x, y) => cfg.get(*x, *y),
            Clause::NoDoubleGap(strips) => !has_double_gap(strips.iter().map(|r| r.is_nonvacant(cfg))),
        }
    }

    fn log_prob(&self, p: f64) -> f64 {
        match self {
            Clause::NonVacant(r) => log_nonvacant(r.size(), p),
            Clause::Vacant(r) => log_vacant(r.size(), p),
            Clause::Occupied(..) => p.ln(),
            Clause::NoDoubleGap(strips) => {
                let u: Vec<f64> = strips
                    .iter()
                    .map(|r| if r.size() == 0 { 1.0 } else { nonvacant_prob(r.size(), p) })
                    .collect();
                log_no_double_gap(&u).expect("strip probabilities lie in [0,1]")
            }
        }
    }

    /// Overwrites the clause's sites with a draw from the product measure
    /// conditioned on the clause. The clause must have positive probability.
    fn sample<R: Rng + ?Sized>(&self, cfg: &mut Config, p: f64, rng: &mut R) {
        match self {
            Clause::NonVacant(r) => sample_nonvacant(cfg, r, p, rng),
            Clause::Vacant(r) => {
                for (x, y) in r.sites() {
                    cfg.set(x, y, false);
                }
            }
            Clause::Occupied(x, y) => cfg.set(*x, *y, true),
            Clause::NoDoubleGap(strips) => {
                let u: Vec<f64> = strips
                    .iter()
                    .map(|r| if r.size() == 0 { 1.0 } else { nonvacant_prob(r.size(), p) })
                    .collect();
                for (r, on) in strips.iter().zip(sample_no_double_gap(&u, rng)) {
                    if on {
                        sample_nonvacant(cfg, r, p, rng);
                    } else {
                        Clause::Vacant(*r).sample(cfg, p, rng);
                    }
                }
            }
        }
    }
}

/// Row-major fill of `r` conditioned on at least one occupied site: the
/// position of the first occupied site is a truncated geometric drawn by
/// inversion, the sites after it are i.i.d.
fn sample_nonvacant<R: Rng + ?Sized>(cfg: &mut Config, r: &Region, p: f64, rng: &mut R) {
    let n = r.size();
    if n == 0 {
        return;
    }
    let log_healthy = (-p).ln_1p();
    let total = -(n as f64 * log_healthy).exp_m1();
    let t = rng.random::<f64>() * total;
    let skip = ((-t).ln_1p() / log_healthy).floor();
    let first = if skip.is_finite() && skip > 0.0 {
        (skip as u64).min(n - 1)
    } else {
        0
    };
    for (k, (x, y)) in r.sites().enumerate() {
        let k = k as u64;
        let occupied = match k.cmp(&first) {
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => true,
            std::cmp::Ordering::Greater => rng.random::<f64>() < p,
        };
        cfg.set(x, y, occupied);
    }
}

/// Indicator sequence of independent events with probabilities `u`,
/// conditioned on no double gap. Forward sampling against normalized
/// backward messages `h_k(s) = P(no double gap in k+1.. | state s at k)`.
fn sample_no_double_gap<R: Rng + ?Sized>(u: &[f64], rng: &mut R) -> Vec<bool> {
    let n = u.len();
    let mut h = vec![[1.0f64; 2]; n];
    for k in (0..n.saturating_sub(1)).rev() {
        let next = h[k + 1];
        let on = u[k + 1] * next[1];
        let off = (1.0 - u[k + 1]) * next[0];
        let (h0, h1) = (on, on + off);
        let norm = h1.max(f64::MIN_POSITIVE);
        h[k] = [h0 / norm, h1 / norm];
    }
    let mut out = Vec::with_capacity(n);
    let mut previous = true;
    for k in 0..n {
        let w_on = u[k] * h[k][1];
        let w_off = if previous { (1.0 - u[k]) * h[k][0] } else { 0.0 };
        let on = rng.random::<f64>() * (w_on + w_off) < w_on;
        out.push(on);
        previous = on;
    }
    out
}

fn event_d(a: u64, b: u64) -> Vec<Clause> {
    let rows = (a + 1..=b).map(|i| region(1, i, i - 2, i)).collect();
    let cols = (a + 1..=b).map(|i| region(i, 1, i, i - 2)).collect();
    vec![Clause::NoDoubleGap(rows), Clause::NoDoubleGap(cols)]
}

fn event_j(a: u64, b: u64) -> Vec<Clause> {
    vec![
        Clause::NonVacant(region(1, a + 1, a - 1, a + 1)),
        Clause::NonVacant(region(a + 1, 1, a + 1, a - 1)),
        Clause::NoDoubleGap((a + 2..b).map(|i| region(i, 1, i, a + 1)).collect()),
        Clause::NonVacant(region(b, 1, b, a + 1)),
        Clause::Vacant(region(1, a + 2, b - 1, a + 3)),
        Clause::Occupied(b as i64, (a + 3) as i64),
        Clause::NoDoubleGap((a + 4..b).map(|i| region(1, i, b, i)).collect()),
        Clause::NonVacant(region(1, b, b, b)),
    ]
}

fn event_e(spec: &MechanismSpec) -> Vec<Clause> {
    let big_b = spec.big_b;
    let mut clauses = Vec::new();
    let mut side = 2;
    for &(a, b) in &spec.pairs {
        clauses.extend(event_d(side, a));
        clauses.extend(event_j(a, b));
        side = b;
    }
    clauses.extend(event_d(side, big_b - 1));
    let big = big_b as i64;
    for (x, y) in [(1, 1), (2, 2), (big, 1), (1, big)] {
        clauses.push(Clause::Occupied(x, y));
    }
    clauses
}

fn check_d_range(a: u64, b: u64) -> Result<()> {
    if 2 <= a && a <= b {
        Ok(())
    } else {
        out_of_range(format!("D needs 2 <= a <= b, got a={a}, b={b}"))
    }
}

fn check_j_range(a: u64, b: u64) -> Result<()> {
    if a >= 1 && a + 4 <= b {
        Ok(())
    } else {
        out_of_range(format!("J needs 1 <= a <= b-4, got a={a}, b={b}"))
    }
}

fn check_domain(cfg: &Config, side: u64) -> Result<()> {
    let need = Rect::square(side as i64)?;
    if cfg.domain().contains_rect(&need) {
        Ok(())
    } else {
        out_of_range(format!("domain {} does not contain {need}", cfg.domain()))
    }
}

fn all_hold(clauses: &[Clause], cfg: &Config) -> bool {
    clauses.iter().all(|c| c.holds(cfg))
}

fn log_prob_all(clauses: &[Clause], p: f64) -> f64 {
    clauses.iter().map(|c| c.log_prob(p)).sum()
}

pub fn check_event_d(cfg: &Config, a: u64, b: u64) -> Result<bool> {
    check_d_range(a, b)?;
    check_domain(cfg, b)?;
    Ok(all_hold(&event_d(a, b), cfg))
}

pub fn check_event_j(cfg: &Config, a: u64, b: u64) -> Result<bool> {
    check_j_range(a, b)?;
    check_domain(cfg, b)?;
    Ok(all_hold(&event_j(a, b), cfg))
}

pub fn check_event_e(cfg: &Config, spec: &MechanismSpec) -> Result<bool> {
    spec.validate()?;
    check_domain(cfg, spec.big_b)?;
    Ok(all_hold(&event_e(spec), cfg))
}

/// Natural log of `P_p(D(a,b))`; `-inf` when the event is impossible.
pub fn log_prob_event_d(a: u64, b: u64, p: f64) -> Result<f64> {
    check_d_range(a, b)?;
    let p = check_probability("p", p)?;
    Ok(log_prob_all(&event_d(a, b), p))
}

pub fn log_prob_event_j(a: u64, b: u64, p: f64) -> Result<f64> {
    check_j_range(a, b)?;
    let p = check_probability("p", p)?;
    Ok(log_prob_all(&event_j(a, b), p))
}

pub fn log_prob_event_e(spec: &MechanismSpec, p: f64) -> Result<f64> {
    spec.validate()?;
    let p = check_probability("p", p)?;
    Ok(log_prob_all(&event_e(spec), p))
}

pub fn prob_event_d(a: u64, b: u64, p: f64) -> Result<f64> {
    Ok(log_prob_event_d(a, b, p)?.exp())
}

pub fn prob_event_j(a: u64, b: u64, p: f64) -> Result<f64> {
    Ok(log_prob_event_j(a, b, p)?.exp())
}

pub fn prob_event_e(spec: &MechanismSpec, p: f64) -> Result<f64> {
    Ok(log_prob_event_e(spec, p)?.exp())
}

/// A configuration on `R(B)` distributed as the Bernoulli(p) field
/// conditioned on `E(spec)`. Each clause is drawn exactly from its own
/// conditional law, so no rejection loop is needed.
pub fn sample_conditioned_on_e<R: Rng + ?Sized>(
    spec: &MechanismSpec,
    p: f64,
    rng: &mut R,
) -> Result<Config> {
    spec.validate()?;
    let p = check_probability("p", p)?;
    let clauses = event_e(spec);
    if log_prob_all(&clauses, p) == f64::NEG_INFINITY {
        return out_of_range(format!("E({spec}) has probability 0 at p = {p}"));
    }
    let mut cfg = sample_field(Rect::square(spec.big_b as i64)?, p, rng)?;
    for clause in &clauses {
        clause.sample(&mut cfg, p, rng);
    }
    Ok(cfg)
}

fn row_strip_vacant(cfg: &Config, i: u64) -> bool {
    region(1, i, i - 2, i).is_vacant(cfg)
}

/// Recovers the spec whose event `cfg` satisfies by scanning the row strips
/// `R(1,i;i-2,i)` upward from `i = 3`: two consecutive vacant strips at
/// `i, i+1` give `a = i-2`, the first occupied site of row `a+3` gives `b`,
/// and the scan resumes at row `b+1`.
pub fn decode_mechanism(cfg: &Config, big_b: u64) -> Result<MechanismSpec> {
    if big_b < 3 {
        return out_of_range(format!("mechanism needs B >= 3, got {big_b}"));
    }
    check_domain(cfg, big_b)?;
    let mut pairs = Vec::new();
    let mut i = 3;
    while i + 1 < big_b {
        if !(row_strip_vacant(cfg, i) && row_strip_vacant(cfg, i + 1)) {
            i += 1;
            continue;
        }
        let a = i - 2;
        let row = (a + 3) as i64;
        let b = (1..=big_b as i64)
            .find(|&x| cfg.get(x, row))
            .ok_or_else(|| Error::NoMechanism(format!("row {row} is vacant after double gap at a={a}")))?
            as u64;
        if b < a + 4 {
            return Err(Error::NoMechanism(format!(
                "row {row} is occupied at x={b}, too close to a={a}"
            )));
        }
        pairs.push((a, b));
        i = b + 1;
    }
    let spec = MechanismSpec::new(big_b, pairs)
        .map_err(|e| Error::NoMechanism(format!("decoded pairs are inconsistent: {e}")))?;
    if !check_event_e(cfg, &spec)? {
        return Err(Error::NoMechanism(format!("configuration fails E({spec})")));
    }
    Ok(spec)
}

/// `sum_{spec in family} P_p(E(spec))`, a lower bound on `I(B,p)` because
/// the events are disjoint and each forces `R(B)` to be internally spanned.
pub fn mechanism_family_lower(big_b: u64, p: f64, family: &[MechanismSpec]) -> Result<f64> {
    let p = check_probability("p", p)?;
    let mut seen = HashSet::with_capacity(family.len());
    for spec in family {
        if spec.big_b != big_b {
            return out_of_range(format!("spec {spec} does not have B = {big_b}"));
        }
        spec.validate()?;
        if !seen.insert(spec) {
            return Err(Error::DuplicateSpec(spec.to_string()));
        }
    }
    let terms: Vec<f64> = family
        .par_iter()
        .map(|spec| log_prob_all(&event_e(spec), p).exp())
        .collect();
    Ok(terms.iter().sum())
}

/// A set of specs with fixed `m`: `a_min <= a1`, `bm <= b_max`, and
/// `bi - ai` in `[gap_min, gap_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyConstraints {
    pub m: usize,
    pub a_min: u64,
    pub b_max: u64,
    pub gap_min: u64,
    pub gap_max: u64,
}

impl FamilyConstraints {
    /// `1/p < a1 <= b1 <= ... <= bm < 2/p <= B`,
    /// `bi - ai` in `[4, ceil(p^{-1/2})]`.
    pub fn possibilities(big_b: u64, p: f64, m: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return out_of_range(format!("p = {p} must lie in (0,1)"));
        }
        if (big_b as f64) < 2.0 / p {
            return out_of_range(format!("need B >= 2/p, got B={big_b}, p={p}"));
        }
        Ok(FamilyConstraints {
            m,
            a_min: (1.0 / p).floor() as u64 + 1,
            b_max: (2.0 / p).ceil() as u64 - 1,
            gap_min: 4,
            gap_max: (1.0 / p.sqrt()).ceil() as u64,
        })
    }

    fn bounds(&self, big_b: u64) -> (u64, u64, u64, u64) {
        (
            self.a_min.max(2),
            self.b_max.min(big_b - 1),
            self.gap_min.max(4),
            self.gap_max,
        )
    }
}

/// Every spec satisfying `c`, in lexicographic order. Fails with
/// `ResourceCap` beyond `limit` specs.
pub fn enumerate_family(big_b: u64, c: &FamilyConstraints, limit: usize) -> Result<Vec<MechanismSpec>> {
    if big_b < 3 {
        return out_of_range(format!("mechanism needs B >= 3, got {big_b}"));
    }
    let (a_min, b_max, gap_min, gap_max) = c.bounds(big_b);
    let mut out = Vec::new();
    let mut pairs = Vec::with_capacity(c.m);
    fn rec(
        start: u64,
        left: usize,
        b_max: u64,
        gaps: (u64, u64),
        big_b: u64,
        pairs: &mut Vec<(u64, u64)>,
        out: &mut Vec<MechanismSpec>,
        limit: usize,
    ) -> Result<()> {
        if left == 0 {
            if out.len() >= limit {
                return Err(Error::ResourceCap(format!("family has more than {limit} specs")));
            }
            out.push(MechanismSpec {
                big_b,
                pairs: pairs.clone(),
            });
            return Ok(());
        }
        let mut a = start;
        while a + gaps.0 <= b_max {
            let top = (a + gaps.1).min(b_max);
            for b in a + gaps.0..=top {
                pairs.push((a, b));
                rec(b, left - 1, b_max, gaps, big_b, pairs, out, limit)?;
                pairs.pop();
            }
            a += 1;
        }
        Ok(())
    }
    rec(a_min, c.m, b_max, (gap_min, gap_max), big_b, &mut pairs, &mut out, limit)?;
    Ok(out)
}

fn log_add(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// Number of specs satisfying `c` and the log of `sum P_p(E(spec))` over
/// them, by dynamic programming over the end of the last jog. Agrees with
/// [`enumerate_family`] followed by [`mechanism_family_lower`] but runs in
/// `O(m B^2)` time.
pub fn family_dp(big_b: u64, p: f64, c: &FamilyConstraints) -> Result<(f64, f64)> {
    if big_b < 3 {
        return out_of_range(format!("mechanism needs B >= 3, got {big_b}"));
    }
    let p = check_probability("p", p)?;
    let (a_min, b_max, gap_min, gap_max) = c.bounds(big_b);
    let n = big_b as usize;
    let log_corners = 4.0 * p.ln();
    // log D(x,y) for 2 <= x <= y <= B-1, row by row of x.
    let row_u: Vec<f64> = (0..=n as u64)
        .map(|i| if i < 3 { 1.0 } else { nonvacant_prob(i - 2, p) })
        .collect();
    let mut log_d = vec![Vec::new(); n];
    for x in 2..n {
        // Incremental double-gap recursion over strips x+1..=y, kept in logs.
        let mut row = vec![f64::NEG_INFINITY; n];
        row[x] = 0.0;
        let (mut l2, mut l1) = (0.0f64, 0.0f64);
        for y in x + 1..n {
            let uk = row_u[y];
            let lk = if y == x + 1 {
                0.0
            } else {
                log_add(uk.ln() + l1, (1.0 - uk).ln() + row_u[y - 1].ln() + l2)
            };
            l2 = l1;
            l1 = lk;
            row[y] = 2.0 * lk;
        }
        log_d[x] = row;
    }
    let ld = |x: u64, y: u64| log_d[x as usize][y as usize];

    if c.m == 0 {
        return Ok((1.0, log_corners + ld(2, big_b - 1)));
    }
    // value[b] = (count, log-weight) over prefixes whose last jog ends at b,
    // including everything from R(2) up to R(b).
    let mut value = vec![(0.0f64, f64::NEG_INFINITY); n];
    for a in a_min..=b_max.saturating_sub(gap_min) {
        let top = (a + gap_max).min(b_max);
        for b in a + gap_min..=top {
            let w = ld(2, a) + log_prob_all(&event_j(a, b), p);
            let v = &mut value[b as usize];
            *v = (v.0 + 1.0, log_add(v.1, w));
        }
    }
    for _ in 1..c.m {
        // Through the diagonal segment: into[a] = sum_{b <= a} value[b] D(b,a).
        let mut into = vec![(0.0f64, f64::NEG_INFINITY); n];
        for b in 0..n {
            if value[b].0 == 0.0 {
                continue;
            }
            for a in b..n {
                let v = &mut into[a];
                *v = (v.0 + value[b].0, log_add(v.1, value[b].1 + log_d[b][a]));
            }
        }
        let mut next = vec![(0.0f64, f64::NEG_INFINITY); n];
        for a in 0..n as u64 {
            if into[a as usize].0 == 0.0 || a + gap_min > b_max {
                continue;
            }
            let top = (a + gap_max).min(b_max);
            for b in a + gap_min..=top {
                let w = into[a as usize].1 + log_prob_all(&event_j(a, b), p);
                let v = &mut next[b as usize];
                *v = (v.0 + into[a as usize].0, log_add(v.1, w));
            }
        }
        value = next;
    }
    let mut count = 0.0;
    let mut total = f64::NEG_INFINITY;
    for b in 0..n {
        if value[b].0 > 0.0 {
            count += value[b].0;
            total = log_add(total, value[b].1 + ld(b as u64, big_b - 1));
        }
    }
    Ok((count, log_corners + total))
}
