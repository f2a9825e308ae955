//! Exhaustive ground truth on tiny instances.
//!
//! Nothing here shares code with the work-queue closure in [`crate::lattice`]:
//! spanning polynomials iterate the update rule on bitboards until it stops
//! changing, and the sub-rectangle scan grows its own strip closures column
//! by column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, out_of_range, Error, Result};
use crate::lattice::{Config, ModelKind, Rect};

/// Largest area enumerated exhaustively (2^25 patterns).
pub const ENUMERATION_CAP: usize = 25;

/// `counts[k]` = number of k-site occupancy patterns of the rectangle that
/// internally span it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanPolynomial {
    pub area: u64,
    pub counts: Vec<u64>,
}

impl SpanPolynomial {
    /// `sum_k N_k p^k (1-p)^(area-k)`.
    pub fn eval(&self, p: f64) -> Result<f64> {
        let p = check_probability("p", p)?;
        let n = self.area as i32;
        Ok(self
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * p.powi(k as i32) * (1.0 - p).powi(n - k as i32))
            .sum())
    }
}

/// Bit layout of a `w x h` box: bit `y*w + x` for zero-based `(x,y)`.
struct Board {
    w: u32,
    full: u64,
    not_first_col: u64,
    not_last_col: u64,
}

impl Board {
    fn new(w: usize, h: usize) -> Self {
        let n = w * h;
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let (mut first, mut last) = (0u64, 0u64);
        for y in 0..h {
            first |= 1 << (y * w);
            last |= 1 << (y * w + w - 1);
        }
        Board {
            w: w as u32,
            full,
            not_first_col: full & !first,
            not_last_col: full & !last,
        }
    }

    #[inline]
    fn step(&self, m: u64, model: ModelKind) -> u64 {
        let west = (m << 1) & self.not_first_col;
        let east = (m >> 1) & self.not_last_col;
        let south = (m << self.w) & self.full;
        let north = m >> self.w;
        let add = match model {
            ModelKind::Standard => {
                (west & (east | south | north)) | (east & (south | north)) | (south & north)
            }
            ModelKind::Modified => (west | east) & (south | north),
        };
        m | add
    }

    fn spans(&self, mut m: u64, model: ModelKind) -> bool {
        loop {
            let next = self.step(m, model);
            if next == m {
                return m == self.full;
            }
            m = next;
        }
    }
}

/// Count spanning patterns of `r` by enumerating all `2^area` of them.
pub fn exact_span_polynomial(r: Rect, model: ModelKind) -> Result<SpanPolynomial> {
    let n = r.area();
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            area: n as u64,
            cap: ENUMERATION_CAP as u64,
        });
    }
    let board = Board::new(r.width(), r.height());
    // Shard on the top bits; counts merge additively.
    let shard_bits = n.min(8);
    let low_bits = n - shard_bits;
    let counts = (0u64..1 << shard_bits)
        .into_par_iter()
        .map(|hi| {
            let mut local = vec![0u64; n + 1];
            for lo in 0u64..1 << low_bits {
                let m = hi << low_bits | lo;
                if board.spans(m, model) {
                    local[m.count_ones() as usize] += 1;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; n + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(SpanPolynomial {
        area: n as u64,
        counts,
    })
}

/// `I(L,p)` exactly, for `L^2 <= 25`.
pub fn exact_i(side: usize, p: f64, model: ModelKind) -> Result<f64> {
    if side == 0 {
        return out_of_range("side length must be at least 1");
    }
    check_probability("p", p)?;
    exact_span_polynomial(Rect::square(side as i64)?, model)?.eval(p)
}

/// Probability that independent events with probabilities `u` have no two
/// consecutive failures, by the recursion
/// `a_k = u_k a_{k-1} + (1-u_k) u_{k-1} a_{k-2}` with `a_0 = a_1 = 1`.
pub fn double_gap_exact(u: &[f64]) -> Result<f64> {
    for &x in u {
        check_probability("u_i", x)?;
    }
    let (mut prev2, mut prev1) = (1.0f64, 1.0f64);
    for k in 1..u.len() {
        let a = u[k] * prev1 + (1.0 - u[k]) * u[k - 1] * prev2;
        prev2 = prev1;
        prev1 = a;
    }
    Ok(prev1)
}

/// Calls `visit` with every sub-rectangle `T` of the domain with
/// `width, height <= max_side` that is internally spanned by `cfg` restricted
/// to `T`.
///
/// For fixed bottom, top and left edges the right edge is pushed outward one
/// column at a time, and the closure inside the strip is continued from the
/// previous one. That is valid because the closure of `K` in a larger box
/// contains the closure in any smaller box.
pub fn for_each_spanned_subrect<F>(cfg: &Config, model: ModelKind, max_side: usize, mut visit: F)
where
    F: FnMut(Rect),
{
    let dom = cfg.domain();
    let (w, h) = (dom.width(), dom.height());
    let max_side = max_side.min(w.max(h));
    let mut strip = Strip::new(w, max_side.min(h));
    for bottom in 0..h {
        for top in bottom..h.min(bottom + max_side) {
            for left in 0..w {
                strip.start(top - bottom + 1, left, w.min(left + max_side));
                for right in left..w.min(left + max_side) {
                    let column = (bottom..=top).map(|y| cfg.get(dom.left() + right as i64, dom.bottom() + y as i64));
                    if strip.push_column(column, model) {
                        visit(
                            Rect::new(
                                dom.left() + left as i64,
                                dom.bottom() + bottom as i64,
                                dom.left() + right as i64,
                                dom.bottom() + top as i64,
                            )
                            .expect("ordered corners"),
                        );
                    }
                }
            }
        }
    }
}

/// Every internally spanned sub-rectangle `T` of the domain with
/// `long(T)` in `[k, 2k]`.
pub fn find_spanned_subrectangles(cfg: &Config, model: ModelKind, k: usize) -> Result<Vec<Rect>> {
    let long = cfg.domain().long_side();
    if k < 1 || k > long {
        return out_of_range(format!("k = {k} must lie in [1, {long}]"));
    }
    let mut out = Vec::new();
    for_each_spanned_subrect(cfg, model, 2 * k, |t| {
        if t.long_side() >= k {
            out.push(t);
        }
    });
    out.sort();
    Ok(out)
}

/// `present[l]` is true iff some internally spanned sub-rectangle has long
/// side `l` (index 0 unused).
pub fn spanned_long_sides(cfg: &Config, model: ModelKind) -> Vec<bool> {
    let long = cfg.domain().long_side();
    let mut present = vec![false; long + 1];
    for_each_spanned_subrect(cfg, model, long, |t| present[t.long_side()] = true);
    present
}

const INF: u8 = 0x80;
const BLOCK: u8 = 0x40;

/// Strip closure that grows rightward one column at a time.
struct Strip {
    stride: usize,
    cells: Vec<u8>,
    queue: Vec<usize>,
    height: usize,
    left: usize,
    right: usize,
}

impl Strip {
    fn new(width: usize, max_height: usize) -> Self {
        let stride = width + 2;
        Strip {
            stride,
            cells: vec![BLOCK; stride * (max_height + 2)],
            queue: Vec::new(),
            height: 0,
            left: 0,
            right: 0,
        }
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> usize {
        (y + 1) * self.stride + x + 1
    }

    /// Begin a strip of `height` rows at column `left`; columns up to
    /// `limit` may be pushed.
    fn start(&mut self, height: usize, left: usize, limit: usize) {
        self.height = height;
        self.left = left;
        self.right = left;
        self.queue.clear();
        for y in 0..height + 2 {
            let row = y * self.stride;
            self.cells[row + left..row + limit + 2].fill(BLOCK);
        }
    }

    /// Append the next column (bottom to top) and continue the closure.
    /// Returns whether the whole strip is infected.
    fn push_column<I: Iterator<Item = bool>>(&mut self, occupied: I, model: ModelKind) -> bool {
        let x = self.right;
        self.right += 1;
        // Unblock the new column; its only possibly infected neighbour so far
        // is the west one.
        for y in 0..self.height {
            let west_infected = x > self.left && self.cells[self.at(x - 1, y)] & INF != 0;
            let i = self.at(x, y);
            self.cells[i] = match (model, west_infected) {
                (_, false) => 0,
                (ModelKind::Standard, true) => 1,
                (ModelKind::Modified, true) => 0b01,
            };
        }
        let mut head = self.queue.len();
        for (y, occ) in occupied.enumerate() {
            if occ {
                let i = self.at(x, y);
                self.cells[i] = INF;
                self.queue.push(i);
            }
        }
        let s = self.stride;
        while head < self.queue.len() {
            let i = self.queue[head];
            head += 1;
            for (n, axis) in [(i - 1, 0b01u8), (i + 1, 0b01), (i - s, 0b10), (i + s, 0b10)] {
                let c = self.cells[n];
                if c & (INF | BLOCK) != 0 {
                    continue;
                }
                let (next, infect) = match model {
                    ModelKind::Standard => (c + 1, c + 1 >= 2),
                    ModelKind::Modified => (c | axis, c | axis == 0b11),
                };
                if infect {
                    self.cells[n] = INF;
                    self.queue.push(n);
                } else {
                    self.cells[n] = next;
                }
            }
        }
        self.queue.len() == self.height * (self.right - self.left)
    }
}
