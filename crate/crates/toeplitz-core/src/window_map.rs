//! Shift-commuting maps applied to finite windows.
//!
//! A `WindowMap` is a pipeline of primitive passes, each a sliding rule that
//! turns a window of a point into a (possibly shorter) window of the image
//! point. Two primitives exist: the shift, and the hole-transport rule that
//! fixes the letters of a level pattern and moves each hole content to the
//! previous hole. Applying a pipeline to a window of x yields a window of
//! the image of x, exactly; all shrinkage is tracked through absolute
//! coordinates, so outputs of different pipelines can be compared cell by
//! cell on their overlap.

use crate::alphabet::Cell;
use crate::error::{Error, Result};
use crate::holewords::SequenceWindow;
use std::fmt;
use std::sync::Arc;

/// The level-n hole-transport rule: on a window whose phase against the
/// level pattern is uniquely determined, keep pattern letter positions as
/// they are and replace each hole content with the content of the next hole
/// to the right.
pub struct PhiRule {
    level: u32,
    period: i64,
    cells: Vec<Cell>,
    holes: Vec<i64>,
    /// For each residue class: distance to the next hole strictly to the
    /// right (0 on letter classes, unused there).
    next_gap: Vec<i64>,
    max_gap: i64,
    /// Certified window length from which the phase is always unique.
    phase_len: i64,
}

impl PhiRule {
    /// `cells` is one period of the level pattern, `phase_len` a window
    /// length from which phase detection has been certified unique.
    pub fn new(level: u32, cells: Vec<Cell>, phase_len: i64) -> Result<PhiRule> {
        let period = cells.len() as i64;
        let holes: Vec<i64> = cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_hole())
            .map(|(i, _)| i as i64)
            .collect();
        if holes.is_empty() {
            return Err(Error::InvalidWord(
                "hole transport needs at least one hole per period".into(),
            ));
        }
        if phase_len < 1 {
            return Err(Error::InvalidWord("phase length must be positive".into()));
        }
        let mut next_gap = vec![0i64; period as usize];
        let mut max_gap = 0;
        for (idx, &h) in holes.iter().enumerate() {
            let next = if idx + 1 < holes.len() {
                holes[idx + 1]
            } else {
                holes[0] + period
            };
            let gap = next - h;
            next_gap[h as usize] = gap;
            max_gap = max_gap.max(gap);
        }
        Ok(PhiRule {
            level,
            period,
            cells,
            holes,
            next_gap,
            max_gap,
            phase_len,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn period(&self) -> i64 {
        self.period
    }

    pub fn max_gap(&self) -> i64 {
        self.max_gap
    }

    pub fn phase_len(&self) -> i64 {
        self.phase_len
    }

    pub fn holes(&self) -> &[i64] {
        &self.holes
    }

    /// Radius of the rule as a centered sliding map: half the phase window
    /// plus the transport reach.
    pub fn radius(&self) -> i64 {
        self.phase_len / 2 + self.max_gap
    }

    /// Phases m with: window_i equals the pattern letter at (i + m) mod
    /// period wherever the pattern has a letter.
    fn consistent_phases(&self, win: &SequenceWindow) -> Result<Vec<i64>> {
        let mut survivors = Vec::new();
        'phases: for m in 0..self.period {
            for i in win.start()..win.end() {
                let t = (i + m).rem_euclid(self.period) as usize;
                let pat = self.cells[t];
                if pat.is_hole() {
                    continue;
                }
                let c = win.get(i).expect("in range");
                if c.is_hole() {
                    return Err(Error::UnexpectedHole(i));
                }
                if c != pat {
                    continue 'phases;
                }
            }
            survivors.push(m);
        }
        Ok(survivors)
    }

    fn apply(&self, win: &SequenceWindow) -> Result<SequenceWindow> {
        let phases = self.consistent_phases(win)?;
        let m = match phases.len() {
            0 => return Err(Error::InconsistentPhase { level: self.level }),
            1 => phases[0],
            _ => {
                return Err(Error::AmbiguousPhase {
                    window_len: win.len(),
                    candidates: phases.iter().map(|&p| p as u64).collect(),
                })
            }
        };
        let (s, e) = (win.start(), win.end());
        let out_end = e - self.max_gap;
        if out_end <= s {
            return Err(Error::WindowTooShort {
                missing_start: s,
                missing_end: out_end,
            });
        }
        SequenceWindow::from_fn(s, out_end, |i| {
            let t = (i + m).rem_euclid(self.period) as usize;
            if self.cells[t].is_hole() {
                Ok(win.get(i + self.next_gap[t]).expect("within transport reach"))
            } else {
                Ok(win.get(i).expect("in range"))
            }
        })
    }
}

impl fmt::Debug for PhiRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiRule")
            .field("level", &self.level)
            .field("period", &self.period)
            .field("holes", &self.holes.len())
            .field("max_gap", &self.max_gap)
            .field("phase_len", &self.phase_len)
            .finish()
    }
}

#[derive(Clone)]
enum Prim {
    Shift(i64),
    Phi(Arc<PhiRule>),
}

impl Prim {
    fn apply(&self, win: &SequenceWindow) -> Result<SequenceWindow> {
        match self {
            Prim::Shift(k) => Ok(win.shifted(*k)),
            Prim::Phi(rule) => rule.apply(win),
        }
    }

    /// Window edge movement: input [s, e) maps to [s + lo, e + hi).
    fn edge_moves(&self) -> (i64, i64) {
        match self {
            Prim::Shift(k) => (-k, -k),
            Prim::Phi(rule) => (0, -rule.max_gap),
        }
    }

    fn length_loss(&self) -> i64 {
        let (lo, hi) = self.edge_moves();
        lo - hi
    }

    fn radius(&self) -> i64 {
        match self {
            Prim::Shift(k) => k.abs(),
            Prim::Phi(rule) => rule.radius(),
        }
    }
}

/// A pipeline of sliding passes, applied left to right.
#[derive(Clone)]
pub struct WindowMap {
    passes: Vec<Prim>,
    label: String,
}

impl WindowMap {
    pub fn identity() -> WindowMap {
        WindowMap {
            passes: Vec::new(),
            label: "id".into(),
        }
    }

    pub fn shift(k: i64) -> WindowMap {
        WindowMap {
            passes: vec![Prim::Shift(k)],
            label: format!("sigma^{k}"),
        }
    }

    pub fn phi(rule: Arc<PhiRule>) -> WindowMap {
        let label = format!("phi_{}", rule.level ());
        WindowMap {
            passes: vec![Prim::Phi(rule)],
            label,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> WindowMap {
        self.label = label.into();
        self
    }

    pub fn pass_count(&self) -> usize {
        self.passes.len()
    }

    /// Diagrammatic composition: apply `self`, then `next`.
    pub fn then(&self, next: &WindowMap) -> WindowMap {
        let mut passes = self.passes.clone();
        passes.extend(next.passes.iter().cloned());
        WindowMap {
            passes,
            label: format!("{} . {}", next.label, self.label),
        }
    }

    pub fn pow(&self, exp: u32) -> WindowMap {
        let mut passes = Vec::with_capacity(self.passes.len() * exp as usize);
        for _ in 0..exp {
            passes.extend(self.passes.iter().cloned());
        }
        WindowMap {
            passes,
            label: format!("({})^{}", self.label, exp),
        }
    }

    /// Output range for an input window [s, e).
    pub fn output_range(&self, s: i64, e: i64) -> (i64, i64) {
        let (mut lo, mut hi) = (s, e);
        for p in &self.passes {
            let (dl, dh) = p.edge_moves();
            lo += dl;
            hi += dh;
        }
        (lo, hi)
    }

    /// Minimal input window length for which every transport pass sees a
    /// window at least as long as its certified phase length.
    pub fn required_len(&self) -> i64 {
        let mut needed: i64 = 1;
        let mut lost: i64 = 0;
        for p in &self.passes {
            if let Prim::Phi(rule) = p {
                needed = needed.max(rule.phase_len + lost);
            }
            lost += p.length_loss();
        }
        needed.max(lost + 1)
    }

    /// Total sliding radius: outputs at coordinate i are determined by
    /// inputs within [i - radius, i + radius].
    pub fn radius(&self) -> i64 {
        self.passes.iter().map(|p| p.radius()).sum()
    }

    pub fn apply(&self, win: &SequenceWindow) -> Result<SequenceWindow> {
        if (win.len() as i64) < self.required_len() {
            return Err(Error::WindowTooShort {
                missing_start: win.start(),
                missing_end: win.start() + self.required_len(),
            });
        }
        let mut cur = win.clone();
        for p in &self.passes {
            cur = p.apply(&cur)?;
        }
        Ok(cur)
    }
}

impl fmt::Debug for WindowMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WindowMap({}, {} passes)", self.label, self.passes.len())
    }
}

/// First coordinate in the overlap of the two windows where they disagree,
/// together with the overlap length.
pub fn first_disagreement(a: &SequenceWindow, b: &SequenceWindow) -> (i64, Option<i64>) {
    let lo = a.start().max(b.start());
    let hi = a.end().min(b.end());
    if hi <= lo {
        return (0, None);
    }
    for i in lo..hi {
        if a.get(i) != b.get(i) {
            return (hi - lo, Some(i));
        }
    }
    (hi - lo, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::ToeplitzSystem;

    fn phi_rule(word: &str, level: u32) -> (ToeplitzSystem, Arc<PhiRule>) {
        let sys = ToeplitzSystem::constant_word(word).unwrap();
        let core = sys.structural_core(level).unwrap();
        let rule = PhiRule::new(level, core.word().cells().to_vec(), 3 * core.period()).unwrap();
        (sys, Arc::new(rule))
    }

    #[test]
    fn shift_passes_move_windows() {
        let sys = ToeplitzSystem::constant_word("a?b").unwrap();
        let win = sys.window(0, 20).unwrap();
        let shifted = WindowMap::shift(3).apply(&win).unwrap();
        assert_eq!(shifted.start(), -3);
        for i in shifted.start()..shifted.end() {
            assert_eq!(shifted.get(i), win.get(i + 3));
        }
    }

    #[test]
    fn transport_on_single_hole_word_is_the_full_shift() {
        // With one hole per period the transport map must equal sigma^p.
        let (sys, rule) = phi_rule("a?b", 1);
        let phi = WindowMap::phi(rule);
        let win = sys.window(0, 40).unwrap();
        let out = phi.apply(&win).unwrap();
        let expected = WindowMap::shift(3).apply(&win).unwrap();
        let (overlap, mismatch) = first_disagreement(&out, &expected);
        assert!(overlap > 30);
        assert_eq!(mismatch, None);
    }

    #[test]
    fn transport_frozen_window() {
        let (sys, rule) = phi_rule("a?b?c", 1);
        let phi = WindowMap::phi(rule);
        let win = sys.window(0, 28).unwrap();
        let out = phi.apply(&win).unwrap();
        let rendered: String = (0..25)
            .map(|i| {
                sys.alphabet()
                    .label(out.get(i).unwrap())
                    .chars()
                    .next()
                    .unwrap()
            })
            .collect();
        assert_eq!(rendered, "aabbcaabccaabbcabbacacbac");
    }

    #[test]
    fn transport_squared_is_shift_by_period() {
        // p = 5, q = 2: two transport passes advance by one full period.
        let (sys, rule) = phi_rule("a?b?c", 1);
        let phi = WindowMap::phi(rule);
        let phi2 = phi.pow(2);
        let win = sys.window(-40, 40).unwrap();
        let out = phi2.apply(&win).unwrap();
        let expected = WindowMap::shift(5).apply(&win).unwrap();
        let (overlap, mismatch) = first_disagreement(&out, &expected);
        assert!(overlap > 60);
        assert_eq!(mismatch, None, "transport^2 differs from shift^5");
    }

    #[test]
    fn transport_differs_from_every_nearby_shift() {
        let (sys, rule) = phi_rule("a?b?c", 1);
        let phi = WindowMap::phi(rule);
        let win = sys.window(-60, 60).unwrap();
        let out = phi.apply(&win).unwrap();
        for k in -8..=8 {
            let shifted = WindowMap::shift(k).apply(&win).unwrap();
            let (overlap, mismatch) = first_disagreement(&out, &shifted);
            assert!(overlap > 40);
            assert!(
                mismatch.is_some(),
                "transport indistinguishable from shift by {k}"
            );
        }
    }

    #[test]
    fn composition_tracks_ranges_and_radius() {
        let (_, rule) = phi_rule("a?b?c", 1);
        let phi = WindowMap::phi(rule.clone());
        let chain = phi.then(&WindowMap::shift(-2)).pow(2);
        // Each transport pass trims max_gap = 3 cells from the right; each
        // shift by -2 moves both edges right by 2.
        assert_eq!(chain.output_range(0, 100), (4, 104 - 2 * rule.max_gap()));
        assert_eq!(
            chain.radius(),
            2 * (rule.radius() + 2),
            "radius must accumulate over passes"
        );
        assert!(chain.required_len() >= rule.phase_len());
    }

    #[test]
    fn short_windows_are_rejected() {
        let (sys, rule) = phi_rule("a?b?c", 1);
        let phi = WindowMap::phi(rule);
        let win = sys.window(0, 6).unwrap();
        assert!(matches!(
            phi.apply(&win),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn holes_in_input_are_rejected() {
        let (_, rule) = phi_rule("a?b?c", 1);
        let phi = WindowMap::phi(rule);
        let sys = ToeplitzSystem::per_level(&["a?b?c"]).unwrap();
        let win = sys.window(0, 30).unwrap();
        assert!(matches!(phi.apply(&win), Err(Error::UnexpectedHole(_))));
    }

    #[test]
    fn inconsistent_windows_are_rejected() {
        let (_, rule) = phi_rule("a?b?c", 1);
        let phi = WindowMap::phi(rule);
        let other = ToeplitzSystem::constant_word("c?a?b").unwrap();
        let win = other.window(0, 30).unwrap();
        assert!(matches!(
            phi.apply(&win),
            Err(Error::InconsistentPhase { .. })
        ));
    }
}
