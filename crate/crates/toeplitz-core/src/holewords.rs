//! Words with holes, windows of bi-infinite sequences, and the filling
//! operator.
//!
//! Conventions used everywhere in this crate:
//! * The periodic extension `w^inf` of a word `w` of length `p` places a copy
//!   of `w` starting at coordinate 0, so `(w^inf)_i = w[i mod p]` with
//!   euclidean mod.
//! * Holes of a sequence are ranked by position: rank 0 is the first hole at
//!   coordinate >= 0, rank 1 the next one to the right, rank -1 the first hole
//!   at a coordinate < 0.
//! * `fill(x, y)` copies `x` and writes `y_k` into the hole of rank `k`; the
//!   symbols of `y` are copied verbatim, holes included.

use crate::alphabet::{Alphabet, Cell};
use crate::budget;
use crate::error::{Error, Result};

/// A finite window `x|[start, start+len)` of a bi-infinite sequence.
/// Coordinates are absolute; windows remember where they sit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceWindow {
    start: i64,
    cells: Vec<Cell>,
}

impl SequenceWindow {
    pub fn new(start: i64, cells: Vec<Cell>) -> SequenceWindow {
        SequenceWindow { start, cells }
    }

    pub fn from_fn(
        start: i64,
        end: i64,
        mut f: impl FnMut(i64) -> Result<Cell>,
    ) -> Result<SequenceWindow> {
        if end < start {
            return Err(Error::InvalidWord(format!("empty range [{start}, {end})")));
        }
        let mut cells = Vec::with_capacity((end - start) as usize);
        for i in start..end {
            cells.push(f(i)?);
        }
        Ok(SequenceWindow { start, cells })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.cells.len() as i64
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, i: i64) -> Option<Cell> {
        if i < self.start || i >= self.end() {
            None
        } else {
            Some(self.cells[(i - self.start) as usize])
        }
    }

    /// Window of `sigma^k x` given a window of `x`: `(sigma^k x)_i = x_{i+k}`,
    /// so the same cells sit `k` coordinates to the left.
    pub fn shifted(&self, k: i64) -> SequenceWindow {
        SequenceWindow {
            start: self.start - k,
            cells: self.cells.clone(),
        }
    }

    pub fn slice(&self, start: i64, end: i64) -> Result<SequenceWindow> {
        if start < self.start || end > self.end() || end < start {
            return Err(Error::WindowTooShort {
                missing_start: start.min(self.start),
                missing_end: end.max(self.end()),
            });
        }
        let lo = (start - self.start) as usize;
        let hi = (end - self.start) as usize;
        Ok(SequenceWindow::new(start, self.cells[lo..hi].to_vec()))
    }

    pub fn hole_positions(&self) -> Vec<i64> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_hole())
            .map(|(j, _)| self.start + j as i64)
            .collect()
    }

    pub fn has_holes(&self) -> bool {
        self.cells.iter().any(|c| c.is_hole())
    }

    /// First holed coordinate, if any.
    pub fn first_hole(&self) -> Option<i64> {
        self.cells
            .iter()
            .position(|c| c.is_hole())
            .map(|j| self.start + j as i64)
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        alphabet.render(&self.cells)
    }
}

/// A finite word over an alphabet extended by the hole symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoleWord {
    cells: Vec<Cell>,
    holes: Vec<usize>,
}

impl HoleWord {
    pub fn new(cells: Vec<Cell>) -> Result<HoleWord> {
        if cells.is_empty() {
            return Err(Error::InvalidWord("word is empty".into()));
        }
        if cells.iter().all(|c| c.is_hole()) {
            return Err(Error::InvalidWord("word is all holes".into()));
        }
        let holes = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_hole())
            .map(|(i, _)| i)
            .collect();
        Ok(HoleWord { cells, holes })
    }

    pub fn parse(word: &str, alphabet: &Alphabet) -> Result<HoleWord> {
        HoleWord::new(alphabet.parse_cells(word)?)
    }

    /// Parse a word like "a?b?c", inferring the alphabet from its letters
    /// (sorted, distinct).
    pub fn parse_infer(word: &str) -> Result<(HoleWord, Alphabet)> {
        let alphabet = Alphabet::from_word_letters(word)?;
        let w = HoleWord::parse(word, &alphabet)?;
        Ok((w, alphabet))
    }

    /// Word length, the `p` of a (p,q) seed.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Hole count, the `q` of a (p,q) seed.
    pub fn hole_count(&self) -> usize {
        self.holes.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Hole offsets within the word, increasing.
    pub fn holes(&self) -> &[usize] {
        &self.holes
    }

    /// A generator seeds a well-defined limit sequence: at least one hole and
    /// letters at both ends, so holes drift away from any fixed coordinate
    /// under repeated filling.
    pub fn is_generator(&self) -> bool {
        self.generator_violation().is_none()
    }

    pub fn generator_violation(&self) -> Option<String> {
        if self.holes.is_empty() {
            return Some("no holes (q = 0)".into());
        }
        if self.cells[0].is_hole() {
            return Some("first symbol is a hole".into());
        }
        if self.cells[self.len() - 1].is_hole() {
            return Some("last symbol is a hole".into());
        }
        None
    }

    /// gcd(p, q) = 1; required by the phase and sliding-map machinery,
    /// flagged but tolerated elsewhere.
    pub fn coprime(&self) -> bool {
        num_integer::gcd(self.len() as u64, self.hole_count() as u64) == 1
    }

    /// Window of the periodic extension `w^inf` over `[start, end)`.
    pub fn periodic_window(&self, start: i64, end: i64) -> Result<SequenceWindow> {
        budget::charge((end.saturating_sub(start)) as u64)?;
        let p = self.len() as i64;
        SequenceWindow::from_fn(start, end, |i| Ok(self.cells[i.rem_euclid(p) as usize]))
    }

    /// Rank of the hole of `w^inf` at coordinate `i`. `i` must be a hole.
    pub fn hole_rank(&self, i: i64) -> i64 {
        let p = self.len() as i64;
        let q = self.hole_count() as i64;
        let r = i.rem_euclid(p) as usize;
        let idx = self
            .holes
            .binary_search(&r)
            .expect("hole_rank called on a non-hole coordinate");
        q * i.div_euclid(p) + idx as i64
    }

    /// Rank of the first hole of `w^inf` at coordinate >= `i`.
    pub fn next_hole_rank(&self, i: i64) -> i64 {
        let p = self.len() as i64;
        let q = self.hole_count() as i64;
        assert!(q > 0, "next_hole_rank on a word without holes");
        let r = i.rem_euclid(p) as usize;
        let idx = self.holes.partition_point(|&h| h < r);
        q * i.div_euclid(p) + idx as i64
    }

    /// Coordinate of the rank-`k` hole of `w^inf`. Inverse of `hole_rank`.
    pub fn hole_position(&self, k: i64) -> i64 {
        let p = self.len() as i64;
        let q = self.hole_count() as i64;
        assert!(q > 0, "hole_position on a word without holes");
        p * k.div_euclid(q) + self.holes[k.rem_euclid(q) as usize] as i64
    }

    /// Largest distance between consecutive holes of `w^inf` (wrapping across
    /// the period). A sliding map that moves hole contents must see at least
    /// this far.
    pub fn max_hole_gap(&self) -> Option<i64> {
        if self.holes.is_empty() {
            return None;
        }
        let p = self.len() as i64;
        let mut max = 0i64;
        for j in 0..self.holes.len() {
            let here = self.holes[j] as i64;
            let next = if j + 1 < self.holes.len() {
                self.holes[j + 1] as i64
            } else {
                self.holes[0] as i64 + p
            };
            max = max.max(next - here);
        }
        Some(max)
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        alphabet.render(&self.cells)
    }
}

/// Copy `x` over `[out_start, out_end)`, replacing the hole of rank `k` by
/// `y_k`. Holes of `y` are copied as holes. `x`'s window must reach
/// coordinate 0 so ranks are well defined, and `y`'s window must contain
/// every rank used; missing data is an error, never a truncation.
pub fn fill(
    x: &SequenceWindow,
    y: &SequenceWindow,
    out_start: i64,
    out_end: i64,
) -> Result<SequenceWindow> {
    // Ranks are counted from coordinate 0, so x must cover the span between
    // the output range and 0.
    let anchor_lo = out_start.min(0);
    let anchor_hi = out_end.max(0);
    if x.start() > anchor_lo || x.end() < anchor_hi {
        return Err(Error::WindowTooShort {
            missing_start: anchor_lo.min(x.start()),
            missing_end: anchor_hi.max(x.end()),
        });
    }

    // Rank of the first hole at coordinate >= out_start.
    let rank_at_start: i64 = if out_start >= 0 {
        x.cells()[(0 - x.start()) as usize..(out_start - x.start()) as usize]
            .iter()
            .filter(|c| c.is_hole())
            .count() as i64
    } else {
        -(x.cells()[(out_start - x.start()) as usize..(0 - x.start()) as usize]
            .iter()
            .filter(|c| c.is_hole())
            .count() as i64)
    };

    let mut missing: Option<(i64, i64)> = None;
    let mut cells = Vec::with_capacity((out_end - out_start) as usize);
    let mut rank = rank_at_start;
    for i in out_start..out_end {
        let c = x.get(i).expect("coverage checked above");
        if !c.is_hole() {
            cells.push(c);
            continue;
        }
        match y.get(rank) {
            Some(v) => cells.push(v),
            None => {
                let (lo, hi) = missing.get_or_insert((rank, rank + 1));
                *lo = (*lo).min(rank);
                *hi = (*hi).max(rank + 1);
                cells.push(Cell::HOLE);
            }
        }
        rank += 1;
    }
    if let Some((lo, hi)) = missing {
        return Err(Error::WindowTooShort {
            missing_start: lo,
            missing_end: hi,
        });
    }
    Ok(SequenceWindow::new(out_start, cells))
}

/// One period `u_n` of the n-fold filling `T_n(w)`: `T_1 = w^inf` and
/// `T_{m+1} = fill(w^inf, T_m)`. `u_n` has length `p^n` and `q^n` holes.
pub fn iterate(w: &HoleWord, n: u32) -> Result<Vec<Cell>> {
    if n == 0 {
        return Err(Error::InvalidWord("iterate needs n >= 1".into()));
    }
    let p = w.len() as u64;
    let q = w.hole_count() as u64;
    let pn = p
        .checked_pow(n)
        .filter(|&v| v < i64::MAX as u64)
        .ok_or(Error::Overflow("p^n"))?;
    budget::charge(2 * pn)?;

    let mut u: Vec<Cell> = w.cells().to_vec();
    for k in 1..n {
        let p_next = p.pow(k + 1) as i64;
        let x = w.periodic_window(0, p_next)?;
        // Holes of w^inf in [0, p^{k+1}) have ranks [0, q * p^k); y tiles the
        // period u_k over exactly that range.
        let y_len = (q * p.pow(k)) as i64;
        let period_len = p.pow(k) as i64;
        let period = u;
        let y = SequenceWindow::from_fn(0, y_len, |i| Ok(period[(i % period_len) as usize]))?;
        u = fill(&x, &y, 0, p_next)?.cells().to_vec();
    }
    Ok(u)
}
