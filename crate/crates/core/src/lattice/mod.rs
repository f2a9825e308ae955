//! Finite configurations on integer rectangles and the two bootstrap rules.
//!
//! Coordinates are 1-based: `R(L)` is `{1..=L}^2`. Every site outside a
//! configuration's domain is healthy forever, so all dynamics are confined
//! to the domain.

mod closure;
mod sample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use closure::{closure, is_internally_spanned, ClosureEngine};
pub use sample::{sample_field, sample_uniforms, threshold_field, BernoulliSites, DENSE_THRESHOLD};

/// Axis-aligned rectangle `(a,b;c,d)`: sites `(x,y)` with `a<=x<=c`, `b<=y<=d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl Rect {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a <= c && b <= d {
            Ok(Rect { a, b, c, d })
        } else {
            Err(Error::InvalidRect { a, b, c, d })
        }
    }

    /// `R(m,n) = (1,1;m,n)`.
    pub fn rect(m: i64, n: i64) -> Result<Self> {
        Self::new(1, 1, m, n)
    }

    /// `R(L) = (1,1;L,L)`.
    pub fn square(side: i64) -> Result<Self> {
        Self::new(1, 1, side, side)
    }

    pub fn left(&self) -> i64 {
        self.a
    }
    pub fn bottom(&self) -> i64 {
        self.b
    }
    pub fn right(&self) -> i64 {
        self.c
    }
    pub fn top(&self) -> i64 {
        self.d
    }

    pub fn width(&self) -> usize {
        (self.c - self.a + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.d - self.b + 1) as usize
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    /// `long(R) = max(width, height)`.
    pub fn long_side(&self) -> usize {
        self.width().max(self.height())
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.a <= x && x <= self.c && self.b <= y && y <= self.d
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.a <= other.a && other.c <= self.c && self.b <= other.b && other.d <= self.d
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        Rect::new(
            self.a.max(other.a),
            self.b.max(other.b),
            self.c.min(other.c),
            self.d.min(other.d),
        )
        .ok()
    }

    /// Row-major index of `(x,y)`; the caller guarantees containment.
    #[inline]
    pub(crate) fn index(&self, x: i64, y: i64) -> usize {
        (y - self.b) as usize * self.width() + (x - self.a) as usize
    }

    #[inline]
    pub(crate) fn site(&self, index: usize) -> (i64, i64) {
        let w = self.width();
        (self.a + (index % w) as i64, self.b + (index / w) as i64)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.a, self.b, self.c, self.d)
    }
}

/// `long(R)` as a free function.
pub fn long_side(r: &Rect) -> usize {
    r.long_side()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Infect when at least two of the four neighbours are infected.
    Standard,
    /// Infect when both axes have an infected neighbour.
    Modified,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Standard => "standard",
            ModelKind::Modified => "modified",
        }
    }

    /// Whether a healthy site with the given infected neighbours becomes
    /// infected. Neighbour order is west, east, south, north.
    #[inline]
    pub fn infects(&self, west: bool, east: bool, south: bool, north: bool) -> bool {
        match self {
            ModelKind::Standard => {
                (west as u8 + east as u8 + south as u8 + north as u8) >= 2
            }
            ModelKind::Modified => (west || east) && (south || north),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" | "b" => Ok(ModelKind::Standard),
            "modified" | "m" => Ok(ModelKind::Modified),
            other => Err(Error::OutOfRange(format!("unknown model {other:?}"))),
        }
    }
}

/// Occupancy of every site of a rectangle, stored as a row-major bitmap.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Config {
    domain: Rect,
    words: Vec<u64>,
}

impl Config {
    pub fn empty(domain: Rect) -> Self {
        Config {
            domain,
            words: vec![0; domain.area().div_ceil(64)],
        }
    }

    pub fn full(domain: Rect) -> Self {
        let mut cfg = Self::empty(domain);
        for i in 0..domain.area() {
            cfg.set_index(i, true);
        }
        cfg
    }

    pub fn from_sites<I>(domain: Rect, sites: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, i64)>,
    {
        let mut cfg = Self::empty(domain);
        for (x, y) in sites {
            if !domain.contains(x, y) {
                return Err(Error::OutOfRange(format!(
                    "site ({x},{y}) outside domain {domain}"
                )));
            }
            cfg.set(x, y, true);
        }
        Ok(cfg)
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    /// Occupancy of `(x,y)`; sites outside the domain are healthy.
    #[inline]
    pub fn get(&self, x: i64, y: i64) -> bool {
        self.domain.contains(x, y) && self.get_index(self.domain.index(x, y))
    }

    /// Panics if `(x,y)` is outside the domain.
    pub fn set(&mut self, x: i64, y: i64, occupied: bool) {
        assert!(
            self.domain.contains(x, y),
            "site ({x},{y}) outside domain {}",
            self.domain
        );
        let i = self.domain.index(x, y);
        self.set_index(i, occupied);
    }

    #[inline]
    pub(crate) fn get_index(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_index(&mut self, i: usize, occupied: bool) {
        let bit = 1u64 << (i & 63);
        if occupied {
            self.words[i >> 6] |= bit;
        } else {
            self.words[i >> 6] &= !bit;
        }
    }

    pub fn count_occupied(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_full(&self) -> bool {
        self.count_occupied() == self.domain.area()
    }

    /// Linear indices of occupied sites, ascending.
    pub(crate) fn occupied_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + bit)
                }
            })
        })
    }

    pub fn occupied_sites(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.occupied_indices().map(|i| self.domain.site(i))
    }

    /// Same-domain inclusion of occupied sets.
    pub fn is_subset_of(&self, other: &Config) -> bool {
        self.domain == other.domain
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// Occupied sites of `self` inside `r`, as a configuration on `r`.
    /// Sites of `r` outside `self`'s domain are healthy.
    pub fn restrict(&self, r: Rect) -> Config {
        let mut out = Config::empty(r);
        if let Some(common) = self.domain.intersect(&r) {
            for y in common.b..=common.d {
                for x in common.a..=common.c {
                    if self.get(x, y) {
                        out.set(x, y, true);
                    }
                }
            }
        }
        out
    }

    /// Number of occupied sites in the raw coordinate box `[x1,x2]x[y1,y2]`,
    /// which may be empty or reach outside the domain.
    pub fn count_in(&self, x1: i64, y1: i64, x2: i64, y2: i64) -> usize {
        let (x1, x2) = (x1.max(self.domain.a), x2.min(self.domain.c));
        let (y1, y2) = (y1.max(self.domain.b), y2.min(self.domain.d));
        let mut n = 0;
        for y in y1..=y2 {
            for x in x1..=x2 {
                n += self.get_index(self.domain.index(x, y)) as usize;
            }
        }
        n
    }

    /// Render in the grid text format: top row first, `#` occupied, `.` healthy.
    pub fn to_grid_text(&self) -> String {
        let mut s = String::with_capacity((self.domain.width() + 1) * self.domain.height());
        for y in (self.domain.b..=self.domain.d).rev() {
            for x in self.domain.a..=self.domain.c {
                s.push(if self.get(x, y) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    /// Parse the grid text format onto `R(width, height)`.
    pub fn from_grid_text(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if height == 0 || width == 0 {
            return Err(Error::Parse {
                line: 1,
                msg: "empty grid".into(),
            });
        }
        Self::from_grid_rows(&rows, Rect::rect(width as i64, height as i64)?)
    }

    /// Parse the grid text format onto an explicit domain.
    pub fn from_grid_text_on(text: &str, domain: Rect) -> Result<Self> {
        let rows: Vec<&str> = text.lines().collect();
        Self::from_grid_rows(&rows, domain)
    }

    fn from_grid_rows(rows: &[&str], domain: Rect) -> Result<Self> {
        if rows.len() != domain.height() {
            return Err(Error::Parse {
                line: rows.len().min(domain.height()) + 1,
                msg: format!("expected {} rows, found {}", domain.height(), rows.len()),
            });
        }
        let mut cfg = Config::empty(domain);
        for (line, row) in rows.iter().enumerate() {
            let y = domain.d - line as i64;
            let n = row.chars().count();
            if n != domain.width() {
                return Err(Error::Parse {
                    line: line + 1,
                    msg: format!("expected {} columns, found {n}", domain.width()),
                });
            }
            for (k, ch) in row.chars().enumerate() {
                match ch {
                    '#' => cfg.set(domain.a + k as i64, y, true),
                    '.' => {}
                    other => {
                        return Err(Error::Parse {
                            line: line + 1,
                            msg: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
        }
        Ok(cfg)
    }
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Config on {}:", self.domain)?;
        f.write_str(&self.to_grid_text())
    }
}

/// One synchronous application of the update rule, restricted to the domain.
pub fn step(cfg: &Config, model: ModelKind) -> Config {
    let mut next = cfg.clone();
    let r = cfg.domain();
    for y in r.b..=r.d {
        for x in r.a..=r.c {
            if cfg.get(x, y) {
                continue;
            }
            if model.infects(
                cfg.get(x - 1, y),
                cfg.get(x + 1, y),
                cfg.get(x, y - 1),
                cfg.get(x, y + 1),
            ) {
                next.set(x, y, true);
            }
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r2() -> Rect {
        Rect::square(2).unwrap()
    }

    #[test]
    fn long_side_examples() {
        assert_eq!(long_side(&Rect::new(1, 1, 5, 3).unwrap()), 5);
        assert_eq!(long_side(&Rect::new(1, 1, 1, 1).unwrap()), 1);
        assert_eq!(long_side(&Rect::new(2, 7, 4, 20).unwrap()), 14);
    }

    #[test]
    fn rect_rejects_inverted_corners() {
        assert!(Rect::new(3, 1, 2, 5).is_err());
        assert!(Rect::new(1, 4, 2, 3).is_err());
        assert!(Rect::square(0).is_err());
    }

    #[test]
    fn step_diagonal_pair_fills_standard() {
        let cfg = Config::from_sites(r2(), [(1, 1), (2, 2)]).unwrap();
        let next = step(&cfg, ModelKind::Standard);
        assert!(next.get(1, 2) && next.get(2, 1));
        assert!(next.is_full());
    }

    #[test]
    fn step_adjacent_pair_is_stuck() {
        let cfg = Config::from_sites(r2(), [(1, 1), (2, 1)]).unwrap();
        assert_eq!(step(&cfg, ModelKind::Standard), cfg);
        assert_eq!(step(&cfg, ModelKind::Modified), cfg);
    }

    #[test]
    fn step_full_is_fixed_point() {
        let full = Config::full(Rect::new(-2, 3, 4, 5).unwrap());
        assert_eq!(step(&full, ModelKind::Standard), full);
        assert_eq!(step(&full, ModelKind::Modified), full);
    }

    #[test]
    fn modified_needs_both_axes() {
        // (2,2) has west and east neighbours but nothing vertical.
        let r = Rect::rect(3, 3).unwrap();
        let cfg = Config::from_sites(r, [(1, 2), (3, 2)]).unwrap();
        assert!(!step(&cfg, ModelKind::Modified).get(2, 2));
        assert!(step(&cfg, ModelKind::Standard).get(2, 2));
    }

    #[test]
    fn grid_text_round_trip() {
        let r = Rect::rect(4, 3).unwrap();
        let cfg = Config::from_sites(r, [(1, 1), (4, 3), (2, 2)]).unwrap();
        let text = cfg.to_grid_text();
        assert_eq!(text, "...#\n.#..\n#...\n");
        assert_eq!(Config::from_grid_text(&text).unwrap(), cfg);
    }

    #[test]
    fn grid_text_errors() {
        assert!(matches!(
            Config::from_grid_text("#.\n#\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Config::from_grid_text("#x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Config::from_grid_text("").is_err());
    }

    #[test]
    fn count_in_clips_and_handles_empty_boxes() {
        let cfg = Config::full(Rect::square(4).unwrap());
        assert_eq!(cfg.count_in(1, 1, 4, 4), 16);
        assert_eq!(cfg.count_in(0, 0, 2, 2), 4);
        assert_eq!(cfg.count_in(3, 1, 2, 4), 0);
    }

    #[test]
    fn model_parses() {
        assert_eq!("Standard".parse::<ModelKind>().unwrap(), ModelKind::Standard);
        assert_eq!("modified".parse::<ModelKind>().unwrap(), ModelKind::Modified);
        assert!("other".parse::<ModelKind>().is_err());
    }
}
