use rand::Rng;

use crate::error::{check_probability, Result};

use super::{Config, Rect};

/// Density from which per-site draws beat geometric skipping.
pub const DENSE_THRESHOLD: f64 = 0.25;

/// Row-major indices of the occupied sites of an i.i.d. Bernoulli(p) field
/// over `n` sites.
///
/// Below [`DENSE_THRESHOLD`] the gaps between successive occupied sites are
/// drawn as Geometric(p), one uniform per occupied site. At higher densities
/// each site is tested against its own uniform. Both give exactly the
/// product measure.
pub struct BernoulliSites<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    len: usize,
    next: usize,
    p: f64,
    log_healthy: f64,
    // Dense mode: occupied bits of the 64-site block starting at `block`.
    mask: u64,
    block: usize,
}

impl<'a, R: Rng + ?Sized> BernoulliSites<'a, R> {
    pub fn new(rng: &'a mut R, len: usize, p: f64) -> Result<Self> {
        let p = check_probability("p", p)?;
        Ok(BernoulliSites {
            rng,
            len,
            next: 0,
            p,
            log_healthy: (-p).ln_1p(),
            mask: 0,
            block: 0,
        })
    }
}

impl<R: Rng + ?Sized> Iterator for BernoulliSites<'_, R> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.p >= DENSE_THRESHOLD {
            return self.next_dense();
        }
        if self.next >= self.len || self.p == 0.0 {
            return None;
        }
        // u in (0,1]; P(gap >= k) = P(u <= (1-p)^k) = (1-p)^k.
        let u = 1.0 - self.rng.random::<f64>();
        let gap = u.ln() / self.log_healthy;
        if gap >= (self.len - self.next) as f64 {
            self.next = self.len;
            return None;
        }
        let i = self.next + gap as usize;
        self.next = i + 1;
        Some(i)
    }
}

impl<R: Rng + ?Sized> BernoulliSites<'_, R> {
    /// One uniform per site, in order, tested 64 sites at a time without
    /// branching on the outcome.
    fn next_dense(&mut self) -> Option<usize> {
        while self.mask == 0 {
            if self.next >= self.len {
                return None;
            }
            self.block = self.next;
            let n = (self.len - self.next).min(64);
            let mut mask = 0u64;
            for bit in 0..n {
                mask |= ((self.rng.random::<f64>() < self.p) as u64) << bit;
            }
            self.mask = mask;
            self.next += n;
        }
        let bit = self.mask.trailing_zeros() as usize;
        self.mask &= self.mask - 1;
        Some(self.block + bit)
    }
}

/// I.i.d. Bernoulli(p) occupancy on `r`, deterministic given `rng`.
pub fn sample_field<R: Rng + ?Sized>(r: Rect, p: f64, rng: &mut R) -> Result<Config> {
    let mut cfg = Config::empty(r);
    for i in BernoulliSites::new(rng, r.area(), p)? {
        cfg.set_index(i, true);
    }
    Ok(cfg)
}

/// One uniform per site, row-major, for coupling fields across densities.
pub fn sample_uniforms<R: Rng + ?Sized>(r: Rect, rng: &mut R) -> Vec<f64> {
    (0..r.area()).map(|_| rng.random::<f64>()).collect()
}

/// The field `{u < p}` built from per-site uniforms.
pub fn threshold_field(r: Rect, uniforms: &[f64], p: f64) -> Result<Config> {
    let p = check_probability("p", p)?;
    assert_eq!(uniforms.len(), r.area(), "one uniform per site");
    let mut cfg = Config::empty(r);
    for (i, &u) in uniforms.iter().enumerate() {
        if u < p {
            cfg.set_index(i, true);
        }
    }
    Ok(cfg)
}
