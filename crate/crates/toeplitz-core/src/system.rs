//! Toeplitz points as lazily evaluable systems.
//!
//! A system knows how to produce the letter at any coordinate of its point
//! `x`, how to materialize one period of each level of its periodic
//! structure, and how to certify claims about periodic positions. Membership
//! of a coordinate in Per_P(x) is certified structurally (the level pattern
//! is literally P-periodic where it has letters); non-membership is certified
//! by an explicit witness pair of unequal letters P apart. Nothing is
//! extrapolated: when a witness is not found within the horizon, the claim is
//! reported as unresolved rather than assumed.

use crate::alphabet::{Alphabet, AlphabetRef, Cell};
use crate::budget;
use crate::error::{Error, Result};
use crate::holewords::{iterate, fill, HoleWord, SequenceWindow};
use crate::odometer::Scale;
use num_bigint::BigUint;
use std::sync::{Arc, Mutex};

/// Recursion cap for coordinate evaluation. The hole-rank map contracts
/// coordinates by a factor of at least p/(p-2) per step, so even the most
/// degenerate seeds resolve any i64 coordinate in a few thousand steps.
const EVAL_CAP: usize = 4096;

/// One period of a level of the periodic structure, with holes at the
/// positions not yet determined at that level.
#[derive(Clone, Debug)]
pub struct LevelData {
    level: u32,
    word: HoleWord,
}

impl LevelData {
    pub(crate) fn new(level: u32, word: HoleWord) -> LevelData {
        LevelData { level, word }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn period(&self) -> i64 {
        self.word.len() as i64
    }

    pub fn word(&self) -> &HoleWord {
        &self.word
    }

    pub fn hole_count(&self) -> usize {
        self.word.hole_count()
    }
}

/// The point generated by iterating a single hole word: T_1 = w^inf,
/// T_{n+1} = F_{w^inf}(T_n), x = lim T_n.
pub struct PqSystem {
    alphabet: AlphabetRef,
    word: HoleWord,
    levels: Mutex<Vec<Arc<LevelData>>>,
}

impl PqSystem {
    pub fn new(word: HoleWord, alphabet: AlphabetRef) -> Result<PqSystem> {
        for c in word.cells() {
            if let Some(idx) = c.letter_index() {
                if usize::from(idx) >= alphabet.len() {
                    return Err(Error::InvalidWord(format!(
                        "letter index {idx} outside alphabet of size {}",
                        alphabet.len()
                    )));
                }
            }
        }
        Ok(PqSystem {
            alphabet,
            word,
            levels: Mutex::new(Vec::new()),
        })
    }

    pub fn word(&self) -> &HoleWord {
        &self.word
    }

    pub fn p(&self) -> u64 {
        self.word.len() as u64
    }

    pub fn q(&self) -> u64 {
        self.word.hole_count() as u64
    }

    fn evaluate(&self, i: i64) -> Result<Cell> {
        let p = self.word.len() as i64;
        let mut k = i;
        for _ in 0..EVAL_CAP {
            let c = self.word.cells()[k.rem_euclid(p) as usize];
            if !c.is_hole() {
                return Ok(c);
            }
            let next = self.word.hole_rank(k);
            if next == k {
                // Self-referential coordinate of a non-generator seed: the
                // limit never determines it.
                return Ok(Cell::HOLE);
            }
            k = next;
        }
        Err(Error::RecursionDepth {
            coord: i,
            cap: EVAL_CAP,
        })
    }

    /// Largest level with p^n representable and materializable in principle.
    fn ladder_depth(&self) -> usize {
        if self.q() == 0 {
            return 1;
        }
        let p = self.p();
        let mut depth = 0usize;
        let mut cur: u64 = 1;
        while let Some(next) = cur.checked_mul(p) {
            if next > (i64::MAX as u64) / 4 {
                break;
            }
            cur = next;
            depth += 1;
        }
        depth
    }

    fn ladder_period(&self, n: u32) -> Result<i64> {
        if n == 0 || n as usize > self.ladder_depth() {
            return Err(Error::DepthOutOfRange {
                requested: n as usize,
                depth: self.ladder_depth(),
            });
        }
        if self.q() == 0 {
            // A word without holes generates the periodic point w^inf; its
            // only structural level is the minimal period of the word.
            return Ok(minimal_period(self.word.cells()));
        }
        Ok((self.p() as i64).pow(n))
    }

    fn structural_core(&self, n: u32) -> Result<Arc<LevelData>> {
        if n == 0 || n as usize > self.ladder_depth() {
            return Err(Error::DepthOutOfRange {
                requested: n as usize,
                depth: self.ladder_depth(),
            });
        }
        if self.q() == 0 {
            let rho = minimal_period(self.word.cells()) as usize;
            let word = HoleWord::new(self.word.cells()[..rho].to_vec())?;
            return Ok(Arc::new(LevelData { level: 1, word }));
        }
        let mut cache = self.levels.lock().expect("level cache poisoned");
        if let Some(data) = cache.get((n - 1) as usize) {
            return Ok(data.clone());
        }
        for level in cache.len() as u32 + 1..=n {
            let cells = iterate(&self.word, level)?;
            cache.push(Arc::new(LevelData {
                level,
                word: HoleWord::new(cells)?,
            }));
        }
        Ok(cache[(n - 1) as usize].clone())
    }
}

/// The point of the level construction W_1 = w_1^inf,
/// W_{n+1} = F_{W_n}(w_{n+1}^inf), truncated at finitely many levels.
/// Coordinates not resolved by the last level evaluate to the hole symbol.
pub struct PerLevelSystem {
    alphabet: AlphabetRef,
    words: Vec<HoleWord>,
    levels: Mutex<Vec<Arc<LevelData>>>,
}

impl PerLevelSystem {
    pub fn new(words: Vec<HoleWord>, alphabet: AlphabetRef) -> Result<PerLevelSystem> {
        if words.is_empty() {
            return Err(Error::InvalidWord("per-level system needs words".into()));
        }
        for w in &words {
            for c in w.cells() {
                if let Some(idx) = c.letter_index() {
                    if usize::from(idx) >= alphabet.len() {
                        return Err(Error::InvalidWord(format!(
                            "letter index {idx} outside alphabet of size {}",
                            alphabet.len()
                        )));
                    }
                }
            }
        }
        Ok(PerLevelSystem {
            alphabet,
            words,
            levels: Mutex::new(Vec::new()),
        })
    }

    pub fn words(&self) -> &[HoleWord] {
        &self.words
    }

    fn evaluate(&self, i: i64) -> Result<Cell> {
        let mut k = i;
        for w in &self.words {
            let p = w.len() as i64;
            let c = w.cells()[k.rem_euclid(p) as usize];
            if !c.is_hole() {
                return Ok(c);
            }
            k = w.hole_rank(k);
        }
        // Undetermined at this truncation depth.
        Ok(Cell::HOLE)
    }

    /// Levels past the first hole-free word never change the point.
    fn ladder_depth(&self) -> usize {
        for (idx, w) in self.words.iter().enumerate() {
            if w.hole_count() == 0 {
                return idx + 1;
            }
        }
        self.words.len()
    }

    fn ladder_period(&self, n: u32) -> Result<i64> {
        if n == 0 || n as usize > self.ladder_depth() {
            return Err(Error::DepthOutOfRange {
                requested: n as usize,
                depth: self.ladder_depth(),
            });
        }
        let mut prod: i64 = 1;
        for w in &self.words[..n as usize] {
            prod = prod
                .checked_mul(w.len() as i64)
                .ok_or(Error::Overflow("level period"))?;
        }
        Ok(prod)
    }

    fn structural_core(&self, n: u32) -> Result<Arc<LevelData>> {
        if n == 0 || n as usize > self.ladder_depth() {
            return Err(Error::DepthOutOfRange {
                requested: n as usize,
                depth: self.ladder_depth(),
            });
        }
        let mut cache = self.levels.lock().expect("level cache poisoned");
        if let Some(data) = cache.get((n - 1) as usize) {
            return Ok(data.clone());
        }
        while (cache.len() as u32) < n {
            let level = cache.len() as u32 + 1;
            let data = if level == 1 {
                LevelData {
                    level,
                    word: self.words[0].clone(),
                }
            } else {
                let prev = &cache[(level - 2) as usize];
                let next_word = &self.words[(level - 1) as usize];
                let prev_period = prev.period();
                let period = prev_period
                    .checked_mul(next_word.len() as i64)
                    .ok_or(Error::Overflow("level period"))?;
                budget::charge(2 * period as u64)?;
                let base = prev.word.periodic_window(0, period)?;
                let ranks = prev.hole_count() as i64 * (period / prev_period);
                let y = next_word.periodic_window(0, ranks.max(1))?;
                let cells = fill(&base, &y, 0, period)?;
                LevelData {
                    level,
                    word: HoleWord::new(cells.cells().to_vec())?,
                }
            };
            cache.push(Arc::new(data));
        }
        Ok(cache[(n - 1) as usize].clone())
    }
}

/// Minimal period of the bi-infinite periodic extension of `cells`. Periods
/// of a periodic sequence form a lattice, so it divides `cells.len()`.
fn minimal_period(cells: &[Cell]) -> i64 {
    let p = cells.len();
    'outer: for d in 1..=p {
        if p % d != 0 {
            continue;
        }
        for i in d..p {
            if cells[i] != cells[i - d] {
                continue 'outer;
            }
        }
        return d as i64;
    }
    p as i64
}

/// A Toeplitz point with its periodic structure, in any of the supported
/// constructions.
pub enum ToeplitzSystem {
    Pq(PqSystem),
    PerLevel(PerLevelSystem),
    Blocks(crate::blocks::BlockSystem),
    Product(crate::products::ProductSystem),
}

impl ToeplitzSystem {
    pub fn constant_word(word: &str) -> Result<ToeplitzSystem> {
        let (w, alphabet) = HoleWord::parse_infer(word)?;
        Ok(ToeplitzSystem::Pq(PqSystem::new(w, Arc::new(alphabet))?))
    }

    pub fn constant_word_in(word: &str, alphabet: AlphabetRef) -> Result<ToeplitzSystem> {
        let w = HoleWord::parse(word, &alphabet)?;
        Ok(ToeplitzSystem::Pq(PqSystem::new(w, alphabet)?))
    }

    pub fn per_level(words: &[&str]) -> Result<ToeplitzSystem> {
        let joined = words.join("");
        let alphabet = Arc::new(Alphabet::from_word_letters(&joined)?);
        let parsed = words
            .iter()
            .map(|w| HoleWord::parse(w, &alphabet))
            .collect::<Result<Vec<_>>>()?;
        Ok(ToeplitzSystem::PerLevel(PerLevelSystem::new(
            parsed, alphabet,
        )?))
    }

    pub fn blocks(spec: crate::blocks::BlockSpec) -> Result<ToeplitzSystem> {
        Ok(ToeplitzSystem::Blocks(crate::blocks::BlockSystem::new(
            spec,
        )?))
    }

    pub fn alphabet(&self) -> &AlphabetRef {
        match self {
            ToeplitzSystem::Pq(s) => &s.alphabet,
            ToeplitzSystem::PerLevel(s) => &s.alphabet,
            ToeplitzSystem::Blocks(s) => s.alphabet(),
            ToeplitzSystem::Product(s) => s.alphabet(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ToeplitzSystem::Pq(s) => format!(
                "constant-word {} (p={}, q={})",
                s.word.render(&s.alphabet),
                s.p(),
                s.q()
            ),
            ToeplitzSystem::PerLevel(s) => format!(
                "per-level [{}]",
                s.words
                    .iter()
                    .map(|w| w.render(&s.alphabet))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            ToeplitzSystem::Blocks(s) => s.label(),
            ToeplitzSystem::Product(s) => s.label(),
        }
    }

    /// The letter of the point at coordinate `i`; the hole symbol when the
    /// construction leaves the coordinate undetermined (non-generator seeds,
    /// truncated level lists).
    pub fn evaluate(&self, i: i64) -> Result<Cell> {
        match self {
            ToeplitzSystem::Pq(s) => s.evaluate(i),
            ToeplitzSystem::PerLevel(s) => s.evaluate(i),
            ToeplitzSystem::Blocks(s) => s.evaluate(i),
            ToeplitzSystem::Product(s) => s.evaluate(i),
        }
    }

    pub fn window(&self, start: i64, end: i64) -> Result<SequenceWindow> {
        budget::charge(end.saturating_sub(start) as u64)?;
        SequenceWindow::from_fn(start, end, |i| self.evaluate(i))
    }

    /// Window that must be fully determined; the first undetermined
    /// coordinate is reported.
    pub fn letters_window(&self, start: i64, end: i64) -> Result<SequenceWindow> {
        let win = self.window(start, end)?;
        if let Some(i) = win.first_hole() {
            return Err(Error::UnexpectedHole(i));
        }
        Ok(win)
    }

    /// The coordinate range the construction actually built, for systems
    /// that hold finitely many letters; None when any machine coordinate is
    /// evaluable.
    pub fn built_range(&self) -> Option<(i64, i64)> {
        match self {
            ToeplitzSystem::Pq(_) | ToeplitzSystem::PerLevel(_) => None,
            ToeplitzSystem::Blocks(s) => Some(s.built_range()),
            ToeplitzSystem::Product(s) => s.built_range(),
        }
    }

    /// Evaluate clamped to the built range: Ok(None) outside it, so that
    /// witness searches degrade to unresolved reports instead of erroring.
    fn sample(&self, i: i64) -> Result<Option<Cell>> {
        if let Some((lo, hi)) = self.built_range() {
            if i < lo || i >= hi {
                return Ok(None);
            }
        }
        self.evaluate(i).map(Some)
    }

    /// Number of levels of the periodic structure this construction can
    /// speak for.
    pub fn ladder_depth(&self) -> usize {
        match self {
            ToeplitzSystem::Pq(s) => s.ladder_depth(),
            ToeplitzSystem::PerLevel(s) => s.ladder_depth(),
            ToeplitzSystem::Blocks(s) => s.ladder_depth(),
            ToeplitzSystem::Product(s) => s.ladder_depth(),
        }
    }

    /// The level-n period: p^n, p_1...p_n, p_{i_n}, or the product across
    /// components.
    pub fn ladder_period(&self, n: u32) -> Result<i64> {
        match self {
            ToeplitzSystem::Pq(s) => s.ladder_period(n),
            ToeplitzSystem::PerLevel(s) => s.ladder_period(n),
            ToeplitzSystem::Blocks(s) => s.ladder_period(n),
            ToeplitzSystem::Product(s) => s.ladder_period(n),
        }
    }

    /// One period of the level-n structural pattern: letters at positions
    /// certified periodic by construction, holes elsewhere. For constant-word
    /// and per-level systems this is exactly the level sequence with its
    /// holes.
    pub fn structural_core(&self, n: u32) -> Result<Arc<LevelData>> {
        match self {
            ToeplitzSystem::Pq(s) => s.structural_core(n),
            ToeplitzSystem::PerLevel(s) => s.structural_core(n),
            ToeplitzSystem::Blocks(s) => s.structural_core(n),
            ToeplitzSystem::Product(s) => s.structural_core(n),
        }
    }

    /// True iff every determined coordinate carries the same letter. For the
    /// supported constructions every letter of every seed word is reachable,
    /// so this is decidable from the seeds.
    pub fn is_constant_point(&self) -> Result<bool> {
        fn all_same(words: &[&HoleWord]) -> bool {
            let mut seen: Option<Cell> = None;
            for w in words {
                for &c in w.cells() {
                    if c.is_hole() {
                        continue;
                    }
                    match seen {
                        None => seen = Some(c),
                        Some(prev) if prev != c => return false,
                        _ => {}
                    }
                }
            }
            true
        }
        match self {
            ToeplitzSystem::Pq(s) => Ok(all_same(&[&s.word])),
            ToeplitzSystem::PerLevel(s) => {
                let depth = s.ladder_depth();
                Ok(all_same(
                    &s.words[..depth].iter().collect::<Vec<_>>(),
                ))
            }
            ToeplitzSystem::Blocks(s) => s.is_constant_point(),
            ToeplitzSystem::Product(_) => Ok(false),
        }
    }

    /// The truncated scale of the periodic structure, in exact integers.
    pub fn periodic_structure(&self, depth: u32) -> Result<Scale> {
        let avail = self.ladder_depth() as u32;
        let depth = depth.min(avail);
        if depth == 0 {
            return Err(Error::DepthOutOfRange {
                requested: depth as usize,
                depth: avail as usize,
            });
        }
        match self {
            ToeplitzSystem::Pq(s) => {
                if s.q() == 0 {
                    return Scale::new(vec![BigUint::from(
                        minimal_period(s.word.cells()) as u64
                    )]);
                }
                let p = BigUint::from(s.p());
                let mut periods = Vec::new();
                let mut cur = BigUint::from(1u8);
                for _ in 0..depth {
                    cur *= &p;
                    periods.push(cur.clone());
                }
                Scale::new(periods)
            }
            ToeplitzSystem::PerLevel(s) => {
                let mut periods = Vec::new();
                let mut cur = BigUint::from(1u8);
                for w in &s.words[..depth as usize] {
                    cur *= BigUint::from(w.len() as u64);
                    periods.push(cur.clone());
                }
                Scale::new(periods)
            }
            ToeplitzSystem::Blocks(s) => s.periodic_structure(depth),
            ToeplitzSystem::Product(s) => s.periodic_structure(depth),
        }
    }

    /// Coordinates of Per_P(x) within [start, end).
    ///
    /// When P is a ladder period the set is read off the structural core
    /// (membership certified by construction). Otherwise membership is
    /// checked against `horizon` sample offsets on each side and the result
    /// is labeled as such.
    pub fn per_set(&self, period: i64, start: i64, end: i64, horizon: i64) -> Result<PerSetReport> {
        if period <= 0 {
            return Err(Error::InvalidWord(format!("period {period} must be >= 1")));
        }
        if self.is_constant_point()? {
            return Ok(PerSetReport {
                period,
                coords: (start..end).collect(),
                certified: true,
                horizon: 0,
            });
        }
        for n in 1..=self.ladder_depth() as u32 {
            let p_n = match self.ladder_period(n) {
                Ok(p) => p,
                Err(_) => break,
            };
            if p_n == period {
                let core = self.structural_core(n)?;
                let coords = (start..end)
                    .filter(|&i| {
                        let t = i.rem_euclid(period) as usize;
                        !core.word.cells()[t].is_hole()
                    })
                    .collect();
                return Ok(PerSetReport {
                    period,
                    coords,
                    certified: true,
                    horizon: 0,
                });
            }
            if p_n > period {
                break;
            }
        }
        let mut coords = Vec::new();
        for i in start..end {
            let base = self.evaluate(i)?;
            if base.is_hole() {
                continue;
            }
            let mut member = true;
            for k in -horizon..=horizon {
                let sample = match self.sample(i + k * period)? {
                    Some(c) => c,
                    None => continue,
                };
                if !sample.is_hole() && sample != base {
                    member = false;
                    break;
                }
            }
            if member {
                coords.push(i);
            }
        }
        Ok(PerSetReport {
            period,
            coords,
            certified: false,
            horizon,
        })
    }

    /// The level-n skeleton on [start, end): the letter of x at coordinates
    /// of Per_{P_n}(x), the hole symbol elsewhere.
    ///
    /// The letter part is certified by construction. Each holed residue class
    /// is certified non-periodic by an explicit witness pair; classes without
    /// a witness inside the horizon are listed as unresolved (and the report
    /// is then not exact).
    pub fn skeleton(&self, n: u32, start: i64, end: i64) -> Result<SkeletonReport> {
        let core = self.structural_core(n)?;
        let period = core.period();
        let window = SequenceWindow::from_fn(start, end, |i| {
            Ok(core.word.cells()[i.rem_euclid(period) as usize])
        })?;
        // Witness horizon: enough samples to reach the variation introduced
        // by the next level of the structure.
        let samples = match self.ladder_period(n + 1) {
            Ok(next) => 4 * (next / period).max(1) + 16,
            Err(_) => 256,
        };
        let mut unresolved = Vec::new();
        for &t in core.word.holes() {
            let t = t as i64;
            let mut first: Option<Cell> = None;
            let mut witnessed = false;
            for j in 0..samples {
                let c = match self.sample(t + j * period)? {
                    Some(c) => c,
                    None => break,
                };
                if c.is_hole() {
                    continue;
                }
                match first {
                    None => first = Some(c),
                    Some(f) if f != c => {
                        witnessed = true;
                        break;
                    }
                    _ => {}
                }
            }
            if !witnessed {
                unresolved.push(t);
            }
        }
        Ok(SkeletonReport {
            level: n,
            period,
            exact: unresolved.is_empty(),
            unresolved,
            horizon: samples * period,
            window,
        })
    }

    /// Checks, for each ladder level up to `depth`, that no smaller period
    /// has the same periodic set: for every p < P_n it looks for a coordinate
    /// certified P_n-periodic together with an explicit witness that it is
    /// not p-periodic. Levels where some p survives the window are flagged
    /// undetermined, never silently accepted.
    pub fn essential_periods(&self, depth: u32) -> Result<Vec<EssentialPeriodReport>> {
        if self.is_constant_point()? {
            return Ok(vec![EssentialPeriodReport {
                level: 1,
                period: 1,
                certified: true,
                undetermined_against: Vec::new(),
            }]);
        }
        let depth = depth.min(self.ladder_depth() as u32);
        let mut reports = Vec::new();
        for n in 1..=depth {
            let p_n = self.ladder_period(n)?;
            let mut window_end = match self.ladder_period(n + 1) {
                Ok(next) => 2 * next,
                Err(_) => 4 * p_n,
            };
            if let Some((_, hi)) = self.built_range() {
                window_end = window_end.min(hi);
            }
            let core = self.structural_core(n)?;
            let mut undetermined = Vec::new();
            'periods: for p in 1..p_n {
                // A witness for p: a structurally P_n-periodic coordinate i
                // and an offset j with x_i != x_{i+jp}, all inside the window.
                for i in 0..p_n {
                    if core.word.cells()[i as usize].is_hole() {
                        continue;
                    }
                    let base = self.evaluate(i)?;
                    if base.is_hole() {
                        continue;
                    }
                    let mut coord = i + p;
                    while coord < window_end {
                        let c = self.evaluate(coord)?;
                        if !c.is_hole() && c != base {
                            continue 'periods;
                        }
                        coord += p;
                    }
                }
                undetermined.push(p);
            }
            reports.push(EssentialPeriodReport {
                level: n,
                period: p_n,
                certified: undetermined.is_empty(),
                undetermined_against: undetermined,
            });
        }
        Ok(reports)
    }

    /// Phases m in [0, P_n) whose shifted level pattern is consistent with
    /// the window: window_i must equal the pattern letter at (i + m) mod P_n
    /// wherever the pattern has one.
    pub fn phase_candidates(&self, window: &SequenceWindow, n: u32) -> Result<Vec<i64>> {
        let core = self.structural_core(n)?;
        let period = core.period();
        let cells = core.word.cells();
        let mut survivors = Vec::new();
        'phases: for m in 0..period {
            for i in window.start()..window.end() {
                let t = (i + m).rem_euclid(period) as usize;
                if cells[t].is_hole() {
                    continue;
                }
                let c = window.get(i).expect("in range");
                if c.is_hole() {
                    return Err(Error::UnexpectedHole(i));
                }
                if c != cells[t] {
                    continue 'phases;
                }
            }
            survivors.push(m);
        }
        Ok(survivors)
    }

    /// The unique consistent phase of the window at level n, i.e. the image
    /// of the underlying point in Z_{P_n}. A window of sigma^k(x) has phase
    /// k mod P_n.
    pub fn phase(&self, window: &SequenceWindow, n: u32) -> Result<PhaseResult> {
        let period = self.structural_core(n)?.period();
        let candidates = self.phase_candidates(window, n)?;
        match candidates.len() {
            0 => Err(Error::InconsistentPhase { level: n }),
            1 => Ok(PhaseResult {
                level: n,
                period,
                phase: candidates[0],
                window_len: window.len(),
                unique: true,
            }),
            _ => Err(Error::AmbiguousPhase {
                window_len: window.len(),
                candidates: candidates.iter().map(|&m| m as u64).collect(),
            }),
        }
    }

    /// Periods p <= horizon that the point could still have, judging from
    /// the window [0, 4 * horizon): p is ruled out by a witness pair, kept
    /// otherwise. An empty result is evidence (not proof) of aperiodicity.
    pub fn surviving_periods(&self, horizon: i64) -> Result<Vec<i64>> {
        let mut window_end = 4 * horizon;
        if let Some((_, hi)) = self.built_range() {
            window_end = window_end.min(hi);
        }
        let mut surviving = Vec::new();
        'periods: for p in 1..=horizon {
            for i in 0..window_end - p {
                let a = self.evaluate(i)?;
                let b = self.evaluate(i + p)?;
                if !a.is_hole() && !b.is_hole() && a != b {
                    continue 'periods;
                }
            }
            surviving.push(p);
        }
        Ok(surviving)
    }
}

#[derive(Clone, Debug)]
pub struct PerSetReport {
    pub period: i64,
    pub coords: Vec<i64>,
    /// True when read off the structural core; false for horizon sampling.
    pub certified: bool,
    pub horizon: i64,
}

#[derive(Clone, Debug)]
pub struct SkeletonReport {
    pub level: u32,
    pub period: i64,
    pub window: SequenceWindow,
    /// Every holed residue class carries a non-periodicity witness.
    pub exact: bool,
    pub unresolved: Vec<i64>,
    pub horizon: i64,
}

#[derive(Clone, Debug)]
pub struct EssentialPeriodReport {
    pub level: u32,
    pub period: i64,
    pub certified: bool,
    pub undetermined_against: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct PhaseResult {
    pub level: u32,
    pub period: i64,
    pub phase: i64,
    pub window_len: usize,
    pub unique: bool,
}
