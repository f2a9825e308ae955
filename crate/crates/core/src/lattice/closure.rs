use crate::error::{Error, Result};

use super::{Config, ModelKind, Rect};

const INFECTED: u8 = 0x80;
/// Border sentinel: outside the domain, never infected.
const BLOCKED: u8 = 0x40;
const HORIZONTAL: u8 = 0b01;
const VERTICAL: u8 = 0b10;

/// Cell transition when one more neighbour becomes infected. Healthy
/// standard cells hold their infected-neighbour count (0 or 1); healthy
/// modified cells hold the axes on which they have an infected neighbour.
/// Infected and blocked cells map to themselves.
const fn transition_table(model: u8, axis: u8) -> [u8; 256] {
    let mut t = [0u8; 256];
    let mut c = 0;
    while c < 256 {
        let cell = c as u8;
        t[c] = if cell & (INFECTED | BLOCKED) != 0 {
            cell
        } else if model == 0 {
            if cell == 1 { INFECTED } else { 1 }
        } else if cell | axis == HORIZONTAL | VERTICAL {
            INFECTED
        } else {
            cell | axis
        };
        c += 1;
    }
    t
}

const STANDARD_NEXT: [u8; 256] = transition_table(0, 0);
const MODIFIED_NEXT_H: [u8; 256] = transition_table(1, HORIZONTAL);
const MODIFIED_NEXT_V: [u8; 256] = transition_table(1, VERTICAL);

/// Work-queue closure on a `width x height` box.
///
/// Cells live in a grid padded by one blocked site on each side, so the
/// inner loop never tests coordinates. Each site enters the FIFO at most once
/// and is expanded once, so a full run is `O(area)`. An engine can be reset
/// and reused across trials without reallocating.
pub struct ClosureEngine {
    width: usize,
    height: usize,
    stride: usize,
    model: ModelKind,
    cells: Vec<u8>,
    queue: Vec<u32>,
    head: usize,
}

impl ClosureEngine {
    pub fn new(width: usize, height: usize, model: ModelKind) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::OutOfRange(format!(
                "empty closure box {width}x{height}"
            )));
        }
        let stride = width + 2;
        let padded = stride
            .checked_mul(height + 2)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| {
                Error::ResourceCap(format!("closure box {width}x{height} exceeds u32 indexing"))
            })?;
        let mut engine = ClosureEngine {
            width,
            height,
            stride,
            model,
            cells: vec![0; padded],
            queue: Vec::with_capacity(width * height),
            head: 0,
        };
        engine.reset();
        Ok(engine)
    }

    pub fn for_rect(r: &Rect, model: ModelKind) -> Result<Self> {
        Self::new(r.width(), r.height(), model)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    /// Clear every site to healthy.
    pub fn reset(&mut self) {
        self.cells.fill(0);
        let s = self.stride;
        let last = self.height + 1;
        self.cells[..s].fill(BLOCKED);
        self.cells[last * s..].fill(BLOCKED);
        for row in 1..last {
            self.cells[row * s] = BLOCKED;
            self.cells[row * s + s - 1] = BLOCKED;
        }
        self.queue.clear();
        self.head = 0;
    }

    #[inline]
    fn padded(&self, index: usize) -> usize {
        let (row, col) = (index / self.width, index % self.width);
        (row + 1) * self.stride + col + 1
    }

    /// Mark the site with row-major index `index` as infected.
    #[inline]
    pub fn infect(&mut self, index: usize) {
        debug_assert!(index < self.area());
        let p = self.padded(index);
        if self.cells[p] & INFECTED == 0 {
            self.cells[p] = INFECTED;
            self.queue.push(p as u32);
        }
    }

    pub fn is_infected(&self, index: usize) -> bool {
        self.cells[self.padded(index)] & INFECTED != 0
    }

    /// Run the dynamics to the fixed point; returns the number of infected sites.
    pub fn run(&mut self) -> usize {
        match self.model {
            ModelKind::Standard => self.run_standard(),
            ModelKind::Modified => self.run_modified(),
        }
        self.queue.len()
    }

    fn run_standard(&mut self) {
        self.run_with(&STANDARD_NEXT, &STANDARD_NEXT);
    }

    fn run_modified(&mut self) {
        self.run_with(&MODIFIED_NEXT_H, &MODIFIED_NEXT_V);
    }

    /// FIFO expansion. The push is unconditional and the length advances only
    /// when the neighbour flips to infected, which keeps the loop free of
    /// data-dependent branches.
    fn run_with(&mut self, horizontal: &[u8; 256], vertical: &[u8; 256]) {
        let s = self.stride;
        let mut len = self.queue.len();
        // Every site enters at most once, plus one scratch slot.
        self.queue.resize(self.width * self.height + 1, 0);
        let cells = &mut self.cells[..];
        let queue = &mut self.queue[..];
        let mut head = self.head;
        while head < len {
            let i = queue[head] as usize;
            head += 1;
            for (n, table) in [(i - 1, horizontal), (i + 1, horizontal), (i - s, vertical), (i + s, vertical)] {
                let c = cells[n];
                let next = table[c as usize];
                cells[n] = next;
                queue[len] = n as u32;
                len += (next != c && next == INFECTED) as usize;
            }
        }
        self.head = head;
        self.queue.truncate(len);
    }

    pub fn infected_count(&self) -> usize {
        self.queue.len()
    }

    /// Whether every site of the box is infected.
    pub fn spans(&self) -> bool {
        self.queue.len() == self.area()
    }

    /// Infected set as a configuration on `domain` (which must match the box).
    pub fn to_config(&self, domain: Rect) -> Config {
        assert_eq!((domain.width(), domain.height()), (self.width, self.height));
        let mut out = Config::empty(domain);
        for &p in &self.queue {
            let p = p as usize;
            let (row, col) = (p / self.stride - 1, p % self.stride - 1);
            out.set_index(row * self.width + col, true);
        }
        out
    }
}

/// Least fixed point of [`super::step`] containing `cfg`.
pub fn closure(cfg: &Config, model: ModelKind) -> Config {
    let mut engine =
        ClosureEngine::for_rect(&cfg.domain(), model).expect("domain of a valid Config");
    for i in cfg.occupied_indices() {
        engine.infect(i);
    }
    engine.run();
    engine.to_config(cfg.domain())
}

/// Whether the closure of `cfg` covers its whole domain.
pub fn is_internally_spanned(cfg: &Config, model: ModelKind) -> bool {
    let mut engine =
        ClosureEngine::for_rect(&cfg.domain(), model).expect("domain of a valid Config");
    for i in cfg.occupied_indices() {
        engine.infect(i);
    }
    engine.run();
    engine.spans()
}
