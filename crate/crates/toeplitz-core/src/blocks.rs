//! Toeplitz points built from towers of concatenated blocks.
//!
//! Level 1 is the alphabet itself; every level-n block is a concatenation of
//! level-(n-1) blocks sharing a fixed prefix and suffix (rule C1) while the
//! middle uses the non-initial blocks with exact multiplicities (rule C2).
//! The common affixes make every block count of the previous level identical
//! across blocks, which pins exact occurrence frequencies; the unique initial
//! block acts as a marker that keeps overlaps grid-aligned. Middle
//! arrangements are enumerated lexicographically and truncated, so block
//! counts at least double per level while windows stay at desk scale.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::alphabet::{Alphabet, AlphabetRef, Cell};
use crate::budget;
use crate::error::{Error, Result};
use crate::holewords::HoleWord;
use crate::odometer::Scale;
use crate::system::LevelData;

/// Arguments beyond this size are left uncounted instead of computing
/// factorials with millions of digits.
const EXACT_COUNT_CAP: u64 = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockMode {
    /// Small periods chosen as the least quotients admitting the required
    /// number of blocks. Keeps every combinatorial invariant checkable in
    /// memory; the analytic growth inequalities are not enforced.
    Toy,
    /// Periods chosen from the growth inequality on quotients; levels beyond
    /// exact counting stay symbolic. Block lists are materialized only while
    /// they fit the memory budget.
    Faithful,
}

impl BlockMode {
    pub fn name(self) -> &'static str {
        match self {
            BlockMode::Toy => "toy",
            BlockMode::Faithful => "faithful",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockSpec {
    /// Alphabet size; the level-1 blocks are the single letters.
    pub k1: u64,
    /// Density constant of the growth inequality (faithful mode).
    pub d0: u64,
    /// Construction levels to derive, counting the alphabet as level 1.
    pub levels: u32,
    pub mode: BlockMode,
    /// Explicit period ladder p_1, p_2, ... with p_1 = 1; derived when absent.
    pub scale: Option<Vec<BigUint>>,
    /// Extra per-level floors for the block count, indexed by construction
    /// level (entry 0 names level 1 and is ignored).
    pub requested: Vec<u64>,
    /// Drop the exact multiplicity constraint of C2, keeping only the symbol
    /// set of the middle. The point is then not uniquely ergodic and no
    /// frequency prediction is made.
    pub relaxed_c2: bool,
}

impl BlockSpec {
    pub fn toy(k1: u64, levels: u32) -> BlockSpec {
        BlockSpec {
            k1,
            d0: 1,
            levels,
            mode: BlockMode::Toy,
            scale: None,
            requested: Vec::new(),
            relaxed_c2: false,
        }
    }

    pub fn faithful(k1: u64, d0: u64, levels: u32) -> BlockSpec {
        BlockSpec {
            k1,
            d0,
            levels,
            mode: BlockMode::Faithful,
            scale: None,
            requested: Vec::new(),
            relaxed_c2: false,
        }
    }
}

/// One construction level. Counts are exact big integers; the block list,
/// the two boundary blocks and the agreement core are materialized only
/// while they fit the budget.
struct Level {
    n: u32,
    p: BigUint,
    quotient: BigUint,
    /// Number of blocks taken at this level; None when the level keeps every
    /// admissible block and their count exceeds exact arithmetic.
    k: Option<BigUint>,
    d: BigUint,
    dhat: BigUint,
    /// Count of admissible middle arrangements.
    available: Option<BigUint>,
    /// Child indices per block, 0-based into the previous level.
    compositions: Option<Vec<Vec<u16>>>,
    letters: Option<Vec<Vec<Cell>>>,
    /// (first block, last block), enough to anchor the point around 0.
    anchor: Option<(Vec<Cell>, Vec<Cell>)>,
    core: Option<HoleWord>,
}

pub struct BlockSystem {
    alphabet: AlphabetRef,
    k1: u64,
    d0: u64,
    mode: BlockMode,
    relaxed: bool,
    levels: Vec<Level>,
    /// Ladder levels exposed to the generic machinery: construction levels
    /// >= 2 with a materialized core, consecutively.
    cores: Vec<Arc<LevelData>>,
    /// x on [0, radius) and [-radius, 0).
    fwd: Vec<Cell>,
    bwd: Vec<Cell>,
    radius: i64,
}

#[derive(Clone, Debug)]
pub struct BlockLevelReport {
    pub level: u32,
    pub p: BigUint,
    pub quotient: BigUint,
    pub k: Option<BigUint>,
    pub d: BigUint,
    pub dhat: BigUint,
    pub available: Option<BigUint>,
    pub materialized: bool,
    pub anchored: bool,
}

#[derive(Clone, Debug)]
pub struct OverlapWitness {
    /// 1-based indices: `inner` occurs inside `left ++ right` at `offset`.
    pub inner: u64,
    pub left: u64,
    pub right: u64,
    pub offset: i64,
}

#[derive(Clone, Debug)]
pub struct OverlapReport {
    pub level: u32,
    pub block_len: i64,
    pub pairs: u64,
    pub ok: bool,
    pub witness: Option<OverlapWitness>,
}

#[derive(Clone, Debug)]
pub struct C1C2Report {
    pub level: u32,
    pub blocks_checked: u64,
    /// Every block carries the common prefix and suffix.
    pub affixes_ok: bool,
    /// Letter-level recount of the middle multiplicities (None in relaxed
    /// mode, where only the symbol set is constrained).
    pub multiplicities_ok: Option<bool>,
    /// The initial block never occurs in any middle.
    pub initial_absent_ok: bool,
}

#[derive(Clone, Debug)]
pub struct FrequencyRow {
    /// 1-based block index at the measured level.
    pub index: u64,
    pub count: u64,
    pub empirical: BigRational,
    pub predicted: Option<BigRational>,
}

#[derive(Clone, Debug)]
pub struct FrequencyTable {
    pub level: u32,
    pub window_start: i64,
    pub window_len: i64,
    pub rows: Vec<FrequencyRow>,
    /// Max |empirical - predicted|; None in relaxed mode.
    pub max_deviation: Option<f64>,
    pub exact: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct EntropyReport {
    /// (construction level, log k_n / p_n) for levels with known counts.
    pub per_level: Vec<(u32, f64)>,
    pub max_density: f64,
    /// Closed-form chain bound (faithful mode only).
    pub chain: Option<f64>,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct ExtensibilityReport {
    pub level: u32,
    pub occurrences: u64,
    pub checked_left: u64,
    pub checked_right: u64,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct AutProbeReport {
    pub shift_bound: i64,
    pub factor_len: i64,
    pub candidates: u64,
    /// Surviving candidates as labels, e.g. "shift(2)" or
    /// "relabel(acbd) . shift(0)".
    pub survivors: Vec<String>,
    pub label: String,
}

fn factorial(n: u64) -> BigUint {
    let mut out = BigUint::one();
    for i in 2..=n {
        out *= BigUint::from(i);
    }
    out
}

/// Number of arrangements of k symbols with d copies each: (dk)!/(d!)^k.
pub fn balanced_arrangements(d: u64, k: u64) -> BigUint {
    assert!(
        d.saturating_mul(k) <= EXACT_COUNT_CAP,
        "arrangement count argument beyond exact cap"
    );
    factorial(d * k) / factorial(d).pow(k as u32)
}

/// Arrangements of a middle with `symbols` distinct symbols, the first with
/// multiplicity `dhat`, the rest with `d` each.
pub(crate) fn middle_arrangements(dhat: u64, d: u64, symbols: u64) -> BigUint {
    let m = dhat + d * (symbols - 1);
    if symbols == 1 {
        return BigUint::one();
    }
    factorial(m) / (factorial(dhat) * factorial(d).pow((symbols - 1) as u32))
}

fn next_permutation<T: Ord>(a: &mut [T]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Lexicographic successor over words with digits in [lo, hi].
fn next_word(a: &mut [u16], lo: u16, hi: u16) -> bool {
    for i in (0..a.len()).rev() {
        if a[i] < hi {
            a[i] += 1;
            for digit in a[i + 1..].iter_mut() {
                *digit = lo;
            }
            return true;
        }
    }
    false
}

/// First offset list at which `inner` occurs inside `left ++ right` away
/// from the two grid positions, if any.
pub fn overlap_violation(blocks: &[Vec<Cell>]) -> Option<(usize, usize, usize, usize)> {
    let p = match blocks.first() {
        Some(b) => b.len(),
        None => return None,
    };
    let mut concat = Vec::with_capacity(2 * p);
    for (j, left) in blocks.iter().enumerate() {
        for (l, right) in blocks.iter().enumerate() {
            concat.clear();
            concat.extend_from_slice(left);
            concat.extend_from_slice(right);
            for t in 1..p {
                let slice = &concat[t..t + p];
                for (i, cand) in blocks.iter().enumerate() {
                    if slice == cand.as_slice() {
                        return Some((i, j, l, t));
                    }
                }
            }
        }
    }
    None
}

fn count_occurrences(haystack: &[Cell], needle: &[Cell]) -> u64 {
    if needle.is_empty() || haystack.len() < needle.len() {
        return 0;
    }
    let mut count = 0;
    for t in 0..=haystack.len() - needle.len() {
        if &haystack[t..t + needle.len()] == needle {
            count += 1;
        }
    }
    count
}

/// Natural log of a count, exact for machine-sized values and a certified
/// lower bound (via the bit length) beyond.
fn ln_count(k: &BigUint) -> f64 {
    match k.to_u64() {
        Some(v) if v > 0 => (v as f64).ln(),
        _ => ((k.bits() - 1) as f64) * std::f64::consts::LN_2,
    }
}

impl BlockSystem {
    pub fn new(spec: BlockSpec) -> Result<BlockSystem> {
        if !(2..=254).contains(&spec.k1) {
            return Err(Error::InvalidSpec(format!(
                "block alphabet size {} outside 2..=254",
                spec.k1
            )));
        }
        if spec.levels == 0 {
            return Err(Error::InvalidSpec("block tower needs at least one level".into()));
        }
        if spec.mode == BlockMode::Faithful {
            if spec.d0 == 0 {
                return Err(Error::InvalidSpec("density constant must be positive".into()));
            }
            // The level-count invariant 2^{n-2} k_1 > (n+1)^2 d_0 has its
            // worst case at n = 2: the left side doubles per level while the
            // right side grows by at most 9/8 per level.
            if spec.k1 <= 9 * spec.d0 {
                return Err(Error::ParamsTooTight(format!(
                    "faithful mode needs k1 > 9 d0 (k1 = {}, d0 = {})",
                    spec.k1, spec.d0
                )));
            }
        }
        if let Some(scale) = &spec.scale {
            if scale.len() != spec.levels as usize {
                return Err(Error::InvalidScale(format!(
                    "scale has {} entries for {} levels",
                    scale.len(),
                    spec.levels
                )));
            }
            if scale[0] != BigUint::one() {
                return Err(Error::InvalidScale(
                    "level-1 blocks are single letters; the scale must start at 1".into(),
                ));
            }
            for w in scale.windows(2) {
                if w[1] <= w[0] || !(&w[1] % &w[0]).is_zero() {
                    return Err(Error::InvalidScale(format!(
                        "periods must strictly increase and divide: {} then {}",
                        w[0], w[1]
                    )));
                }
            }
        }

        let alphabet = Arc::new(Alphabet::of_size(spec.k1 as usize)?);
        let letters: Vec<Vec<Cell>> = (0..spec.k1)
            .map(|i| vec![Cell::letter(i as u8)])
            .collect();
        let base_anchor = (
            letters[0].clone(),
            letters[spec.k1 as usize - 1].clone(),
        );
        let mut levels = vec![Level {
            n: 1,
            p: BigUint::one(),
            quotient: BigUint::one(),
            k: Some(BigUint::from(spec.k1)),
            d: BigUint::zero(),
            dhat: BigUint::zero(),
            available: Some(BigUint::from(spec.k1)),
            compositions: Some(vec![Vec::new(); spec.k1 as usize]),
            letters: Some(letters),
            anchor: Some(base_anchor),
            core: None,
        }];

        for n in 2..=spec.levels {
            let level = build_level(&spec, &levels)?;
            debug_assert_eq!(level.n, n);
            levels.push(level);
        }

        // Anchor the point: x restricted to [0, p_n) is the first level-n
        // block and x restricted to [-p_n, 0) is the last, consistently
        // across levels because the first block extends the previous first
        // block and the last ends in the previous last.
        let deepest = levels
            .iter()
            .rev()
            .find(|l| l.anchor.is_some())
            .expect("level 1 is always anchored");
        let (fwd, bwd) = deepest.anchor.clone().expect("checked");
        let radius = fwd.len() as i64;
        for pair in levels.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            if let (Some((lo_f, lo_b)), Some((hi_f, hi_b))) = (&lo.anchor, &hi.anchor) {
                if &hi_f[..lo_f.len()] != lo_f.as_slice()
                    || &hi_b[hi_b.len() - lo_b.len()..] != lo_b.as_slice()
                {
                    return Err(Error::InvalidSpec(format!(
                        "level {} blocks do not extend the level {} anchors",
                        hi.n, lo.n
                    )));
                }
            }
        }

        let mut cores = Vec::new();
        for level in &levels[1..] {
            match &level.core {
                Some(word) => cores.push(Arc::new(LevelData::new(
                    cores.len() as u32 + 1,
                    word.clone(),
                ))),
                None => break,
            }
        }

        Ok(BlockSystem {
            alphabet,
            k1: spec.k1,
            d0: spec.d0,
            mode: spec.mode,
            relaxed: spec.relaxed_c2,
            levels,
            cores,
            fwd,
            bwd,
            radius,
        })
    }

    pub fn alphabet(&self) -> &AlphabetRef {
        &self.alphabet
    }

    pub fn mode(&self) -> BlockMode {
        self.mode
    }

    pub fn relaxed(&self) -> bool {
        self.relaxed
    }

    pub fn construction_levels(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn label(&self) -> String {
        let scale: Vec<String> = self
            .levels
            .iter()
            .map(|l| {
                if l.p.bits() > 64 {
                    format!("~2^{}", l.p.bits())
                } else {
                    l.p.to_string()
                }
            })
            .collect();
        format!(
            "blocks(k1={}, d0={}, mode={}{}, scale=[{}])",
            self.k1,
            self.d0,
            self.mode.name(),
            if self.relaxed { ", relaxed-c2" } else { "" },
            scale.join(", ")
        )
    }

    pub fn evaluate(&self, i: i64) -> Result<Cell> {
        if (0..self.radius).contains(&i) {
            Ok(self.fwd[i as usize])
        } else if (-self.radius..0).contains(&i) {
            Ok(self.bwd[(i + self.radius) as usize])
        } else {
            Err(Error::RangeNotBuilt {
                start: i,
                end: i + 1,
                built_start: -self.radius,
                built_end: self.radius,
            })
        }
    }

    pub fn built_range(&self) -> (i64, i64) {
        (-self.radius, self.radius)
    }

    pub fn ladder_depth(&self) -> usize {
        self.cores.len()
    }

    pub fn ladder_period(&self, n: u32) -> Result<i64> {
        let idx = n as usize;
        if n == 0 || idx > self.cores.len() {
            return Err(Error::DepthOutOfRange {
                requested: idx,
                depth: self.cores.len(),
            });
        }
        Ok(self.cores[idx - 1].period())
    }

    pub fn structural_core(&self, n: u32) -> Result<Arc<LevelData>> {
        let idx = n as usize;
        if n == 0 || idx > self.cores.len() {
            return Err(Error::DepthOutOfRange {
                requested: idx,
                depth: self.cores.len(),
            });
        }
        Ok(self.cores[idx - 1].clone())
    }

    pub fn is_constant_point(&self) -> Result<bool> {
        // k1 >= 2 and every letter occurs in the first level-2 block.
        Ok(false)
    }

    pub fn periodic_structure(&self, depth: u32) -> Result<Scale> {
        let mut periods = Vec::new();
        for n in 1..=depth {
            periods.push(BigUint::from(self.ladder_period(n)? as u64));
        }
        Scale::new(periods)
    }

    /// The full period ladder including symbolic levels, by construction
    /// level starting at 1.
    pub fn block_scale(&self) -> Vec<BigUint> {
        self.levels.iter().map(|l| l.p.clone()).collect()
    }

    pub fn level_report(&self, n: u32) -> Result<BlockLevelReport> {
        let level = self.level(n)?;
        Ok(BlockLevelReport {
            level: level.n,
            p: level.p.clone(),
            quotient: level.quotient.clone(),
            k: level.k.clone(),
            d: level.d.clone(),
            dhat: level.dhat.clone(),
            available: level.available.clone(),
            materialized: level.letters.is_some(),
            anchored: level.anchor.is_some(),
        })
    }

    pub fn level_reports(&self) -> Vec<BlockLevelReport> {
        (1..=self.levels.len() as u32)
            .map(|n| self.level_report(n).expect("in range"))
            .collect()
    }

    fn level(&self, n: u32) -> Result<&Level> {
        if n == 0 || n as usize > self.levels.len() {
            return Err(Error::DepthOutOfRange {
                requested: n as usize,
                depth: self.levels.len(),
            });
        }
        Ok(&self.levels[n as usize - 1])
    }

    fn materialized_level(&self, n: u32) -> Result<(&Level, &Vec<Vec<Cell>>)> {
        let level = self.level(n)?;
        match &level.letters {
            Some(letters) => Ok((level, letters)),
            None => Err(Error::InvalidSpec(format!(
                "construction level {n} is symbolic; its block list is not materialized"
            ))),
        }
    }

    /// The block letters at a materialized level, 1-based index.
    pub fn block(&self, n: u32, index: u64) -> Result<Vec<Cell>> {
        let (_, letters) = self.materialized_level(n)?;
        letters
            .get(index as usize - 1)
            .cloned()
            .ok_or_else(|| Error::InvalidSpec(format!("level {n} has no block {index}")))
    }

    fn window_cells(&self, start: i64, end: i64) -> Result<Vec<Cell>> {
        budget::charge(end.saturating_sub(start) as u64)?;
        (start..end).map(|i| self.evaluate(i)).collect()
    }

    /// Child indices of the point's level-n grid over [start, end), both
    /// multiples of p_n. Every chunk must be one of the level's blocks.
    pub fn parse_grid(&self, n: u32, start: i64, end: i64) -> Result<Vec<u16>> {
        let (level, letters) = self.materialized_level(n)?;
        let p = level
            .p
            .to_i64()
            .ok_or(Error::Overflow("grid period beyond machine range"))?;
        if start % p != 0 || end % p != 0 || start >= end {
            return Err(Error::InvalidSpec(format!(
                "grid range [{start}, {end}) must be aligned to the period {p}"
            )));
        }
        let cells = self.window_cells(start, end)?;
        let mut out = Vec::with_capacity(((end - start) / p) as usize);
        for chunk in cells.chunks(p as usize) {
            let idx = letters
                .iter()
                .position(|b| b.as_slice() == chunk)
                .ok_or_else(|| {
                    Error::InvalidSpec(format!("level-{n} grid chunk is not a listed block"))
                })?;
            out.push(idx as u16);
        }
        Ok(out)
    }

    /// Brute-force search for a block occurring inside a concatenation of
    /// two blocks away from the grid.
    pub fn check_trivial_overlap(&self, n: u32) -> Result<OverlapReport> {
        let (level, letters) = self.materialized_level(n)?;
        let p = level.p.to_i64().ok_or(Error::Overflow("block length"))?;
        let pairs = (letters.len() * letters.len()) as u64;
        let witness = overlap_violation(letters).map(|(i, j, l, t)| OverlapWitness {
            inner: i as u64 + 1,
            left: j as u64 + 1,
            right: l as u64 + 1,
            offset: t as i64,
        });
        Ok(OverlapReport {
            level: n,
            block_len: p,
            pairs,
            ok: witness.is_none(),
            witness,
        })
    }

    /// Letter-level recount of the construction rules at a materialized
    /// level: common affixes, middle multiplicities, absence of the initial
    /// block from middles.
    pub fn verify_c1_c2(&self, n: u32) -> Result<C1C2Report> {
        if n < 2 {
            return Err(Error::InvalidSpec(
                "construction rules start at level 2".into(),
            ));
        }
        let (level, letters) = self.materialized_level(n)?;
        let (prev, prev_letters) = self.materialized_level(n - 1)?;
        let prev_p = prev.p.to_usize().ok_or(Error::Overflow("block length"))?;
        let prev_k = prev_letters.len();
        let half = prev_k / 2;
        let prefix: Vec<Cell> = prev_letters[..half].concat();
        let suffix: Vec<Cell> = prev_letters[half..].concat();
        let d = level.d.to_u64().unwrap_or(u64::MAX);
        let dhat = level.dhat.to_u64().unwrap_or(u64::MAX);

        let mut affixes_ok = true;
        let mut initial_absent_ok = true;
        let mut multiplicities_ok = true;
        for block in letters {
            if block[..prefix.len()] != prefix[..]
                || block[block.len() - suffix.len()..] != suffix[..]
            {
                affixes_ok = false;
            }
            let middle = &block[prefix.len()..block.len() - suffix.len()];
            let mut counts = vec![0u64; prev_k];
            for chunk in middle.chunks(prev_p) {
                match prev_letters.iter().position(|b| b.as_slice() == chunk) {
                    Some(idx) => counts[idx] += 1,
                    None => {
                        multiplicities_ok = false;
                        initial_absent_ok = false;
                    }
                }
            }
            if counts[0] != 0 {
                initial_absent_ok = false;
            }
            if counts[0] != 0
                || counts[1] != dhat
                || counts[2..].iter().any(|&c| c != d)
            {
                multiplicities_ok = false;
            }
        }
        Ok(C1C2Report {
            level: n,
            blocks_checked: letters.len() as u64,
            affixes_ok,
            multiplicities_ok: if self.relaxed { None } else { Some(multiplicities_ok) },
            initial_absent_ok,
        })
    }

    /// Exact occurrence counts of the level-n blocks over a centered window
    /// of whole level-(n+1) periods, against the predicted density
    /// (1 + d_{i,n}) / p_{n+1} with d_{1,n} = 0.
    pub fn frequencies(&self, n: u32, window_len: i64) -> Result<FrequencyTable> {
        let (_, needles) = self.materialized_level(n)?;
        let next = self.level(n + 1)?;
        let period = next
            .p
            .to_i64()
            .ok_or(Error::Overflow("period beyond machine range"))?;
        if window_len < 10 * period {
            return Err(Error::InvalidSpec(format!(
                "frequency window {window_len} is below ten periods ({})",
                10 * period
            )));
        }
        let m = window_len / period;
        if m * period > 2 * self.radius {
            return Err(Error::RangeNotBuilt {
                start: -(m * period) / 2,
                end: (m * period + 1) / 2,
                built_start: -self.radius,
                built_end: self.radius,
            });
        }
        let mut m_left = (m / 2).min(self.radius / period);
        let mut m_right = m - m_left;
        if m_right * period > self.radius {
            m_right = self.radius / period;
            m_left = m - m_right;
        }
        let start = -m_left * period;
        let len = m * period;
        let cells = self.window_cells(start, start + len)?;

        let mut rows = Vec::with_capacity(needles.len());
        let mut max_dev = 0f64;
        let mut exact = true;
        for (i, needle) in needles.iter().enumerate() {
            let count = count_occurrences(&cells, needle);
            let empirical = BigRational::new(count.into(), BigUint::from(len as u64).into());
            let predicted = if self.relaxed {
                None
            } else {
                // Occurrences per level-(n+1) block: once in the affixes,
                // plus the middle multiplicity.
                let bonus = match i {
                    0 => BigUint::zero(),
                    1 => next.dhat.clone(),
                    _ => next.d.clone(),
                };
                Some(BigRational::new(
                    (bonus + BigUint::one()).into(),
                    next.p.clone().into(),
                ))
            };
            if let Some(pred) = &predicted {
                let dev = (&empirical - pred).abs();
                let dev = dev.to_f64().unwrap_or(f64::NAN);
                if !(dev <= max_dev) {
                    max_dev = dev;
                }
                if empirical != *pred {
                    exact = false;
                }
            }
            rows.push(FrequencyRow {
                index: i as u64 + 1,
                count,
                empirical,
                predicted,
            });
        }
        Ok(FrequencyTable {
            level: n,
            window_start: start,
            window_len: len,
            rows,
            max_deviation: if self.relaxed { None } else { Some(max_dev) },
            exact: if self.relaxed { None } else { Some(exact) },
        })
    }

    /// log(block count) / period per level, their max, and in faithful mode
    /// the closed-form chain bound. The per-level terms are exact complexity
    /// densities at the ladder lengths (all k_n blocks occur in the point),
    /// not a certified entropy bound; the chain is the analytic bound and
    /// needs the growth inequalities, hence faithful mode.
    pub fn entropy_lower_bound(&self, depth: u32) -> Result<EntropyReport> {
        let depth = (depth as usize).min(self.levels.len());
        if depth == 0 {
            return Err(Error::DepthOutOfRange {
                requested: 0,
                depth: self.levels.len(),
            });
        }
        let mut per_level = Vec::new();
        for level in &self.levels[..depth] {
            if let Some(k) = &level.k {
                let p = level.p.to_f64().unwrap_or(f64::INFINITY);
                per_level.push((level.n, ln_count(k) / p));
            }
        }
        let max_density = per_level
            .iter()
            .map(|&(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let chain = match self.mode {
            BlockMode::Faithful => {
                // Product over levels of the count recursion, bounded below
                // by exp(-2 sum_{n>=2} 1/(n^2 d0)) log k_1 / p_1.
                let tail = std::f64::consts::PI * std::f64::consts::PI / 6.0 - 1.0;
                Some((-2.0 * tail / self.d0 as f64).exp() * (self.k1 as f64).ln())
            }
            BlockMode::Toy => None,
        };
        Ok(EntropyReport {
            per_level,
            max_density,
            chain,
            label: match self.mode {
                BlockMode::Toy => {
                    "complexity densities at ladder lengths; toy scale, growth inequalities not enforced"
                        .into()
                }
                BlockMode::Faithful => {
                    "complexity densities at ladder lengths, with the closed-form chain bound"
                        .into()
                }
            },
        })
    }

    /// Distinct length-len factors of the built window. A lower bound for
    /// the factor count of the point: everything seen is a genuine factor.
    pub fn empirical_complexity(&self, len: usize) -> Result<u64> {
        if len == 0 || len as i64 > 2 * self.radius {
            return Err(Error::RangeNotBuilt {
                start: -self.radius,
                end: -self.radius + len as i64,
                built_start: -self.radius,
                built_end: self.radius,
            });
        }
        let cells = self.window_cells(-self.radius, self.radius)?;
        let mut seen: BTreeSet<&[Cell]> = BTreeSet::new();
        for t in 0..=cells.len() - len {
            seen.insert(&cells[t..t + len]);
        }
        Ok(seen.len() as u64)
    }

    /// Every occurrence of the first level-n block in the built window must
    /// be preceded by the last block and, when the level has at least four
    /// blocks, followed by the second.
    pub fn extensibility(&self, n: u32) -> Result<ExtensibilityReport> {
        let (level, letters) = self.materialized_level(n)?;
        let p = level.p.to_i64().ok_or(Error::Overflow("block length"))?;
        let first = &letters[0];
        let last = &letters[letters.len() - 1];
        let second = (letters.len() >= 4).then(|| &letters[1]);
        let cells = self.window_cells(-self.radius, self.radius)?;
        let mut occurrences = 0;
        let mut checked_left = 0;
        let mut checked_right = 0;
        let mut ok = true;
        for t in 0..=cells.len() - p as usize {
            if &cells[t..t + p as usize] != first.as_slice() {
                continue;
            }
            occurrences += 1;
            if t >= p as usize {
                checked_left += 1;
                if &cells[t - p as usize..t] != last.as_slice() {
                    ok = false;
                }
            }
            if let Some(second) = second {
                if t + 2 * p as usize <= cells.len() {
                    checked_right += 1;
                    if &cells[t + p as usize..t + 2 * p as usize] != second.as_slice() {
                        ok = false;
                    }
                }
            }
        }
        Ok(ExtensibilityReport {
            level: n,
            occurrences,
            checked_left,
            checked_right,
            ok,
        })
    }

    /// Bounded refutation search over relabel-and-shift candidates: a letter
    /// permutation composed with a shift survives only if it maps every
    /// observed factor to an observed factor. This does not enumerate
    /// general finite-radius rules; it is a labeled heuristic.
    pub fn automorphism_probe(&self, shift_bound: i64) -> Result<AutProbeReport> {
        let factor_len = self.ladder_period(1)?;
        let cells = self.window_cells(-self.radius, self.radius)?;
        let factors: BTreeSet<&[Cell]> = (0..=cells.len() - factor_len as usize)
            .map(|t| &cells[t..t + factor_len as usize])
            .collect();
        let k = self.alphabet.len();
        let mut perm: Vec<u8> = (0..k as u8).collect();
        let mut survivors = Vec::new();
        let mut candidates = 0u64;
        loop {
            let mapped: Vec<Cell> = cells
                .iter()
                .map(|c| Cell::letter(perm[c.letter_index().expect("letters only") as usize]))
                .collect();
            let image_ok = (0..=mapped.len() - factor_len as usize)
                .all(|t| factors.contains(&mapped[t..t + factor_len as usize]));
            let identity = perm.iter().enumerate().all(|(i, &v)| v as usize == i);
            for shift in -shift_bound..=shift_bound {
                candidates += 1;
                if image_ok {
                    survivors.push(if identity {
                        format!("shift({shift})")
                    } else {
                        let labels: String = perm
                            .iter()
                            .map(|&v| self.alphabet.label(Cell::letter(v)).to_string())
                            .collect();
                        format!("relabel({labels}) . shift({shift})")
                    });
                }
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        Ok(AutProbeReport {
            shift_bound,
            factor_len,
            candidates,
            survivors,
            label: "relabel-and-shift candidates only; general finite-radius rules not enumerated"
                .into(),
        })
    }
}

/// Builds the next construction level from the tower so far.
fn build_level(spec: &BlockSpec, levels: &[Level]) -> Result<Level> {
    let n = levels.len() as u32 + 1;
    let prev = levels.last().expect("level 1 exists");
    let k_prev = prev.k.clone().ok_or_else(|| {
        Error::ParamsTooTight(format!(
            "level {} count is beyond exact arithmetic; cannot derive level {n}",
            prev.n
        ))
    })?;
    if k_prev < BigUint::from(3u8) {
        return Err(Error::ParamsTooTight(format!(
            "level {} has {} blocks; the middle then admits at most one arrangement",
            prev.n, k_prev
        )));
    }
    let requested = spec
        .requested
        .get(n as usize - 1)
        .copied()
        .unwrap_or(0);
    let target = (BigUint::from(2u8) * &k_prev).max(BigUint::from(requested));

    let quotient = match &spec.scale {
        Some(scale) => &scale[n as usize - 1] / &scale[n as usize - 2],
        None => match spec.mode {
            BlockMode::Toy => derive_toy_quotient(&k_prev, &target)?,
            BlockMode::Faithful => derive_faithful_quotient(&k_prev, n, spec.d0)?,
        },
    };
    if spec.mode == BlockMode::Faithful && spec.scale.is_some() {
        check_growth_inequality(&quotient, &k_prev, n, spec.d0)?;
    }
    if quotient <= k_prev {
        return Err(Error::ParamsTooTight(format!(
            "level {n} quotient {quotient} leaves no middle beyond the {k_prev} affix blocks"
        )));
    }

    let m = &quotient - &k_prev;
    let sym = &k_prev - BigUint::one();
    let d = &m / &sym;
    let dhat = &m - (&sym - BigUint::one()) * &d;
    let available = match (m.to_u64(), k_prev.to_u64()) {
        (Some(m_small), Some(k_small)) if m_small <= EXACT_COUNT_CAP => Some(if spec.relaxed_c2 {
            BigUint::from(k_small - 1).pow(m_small as u32)
        } else {
            middle_arrangements(
                dhat.to_u64().expect("bounded by m"),
                d.to_u64().expect("bounded by m"),
                k_small - 1,
            )
        }),
        // Beyond the cap the middle is astronomically long over at least two
        // symbols with every multiplicity >= 1, so the arrangement count
        // dwarfs any 2 k_{n-1} target.
        _ => None,
    };
    if let Some(avail) = &available {
        if *avail < target {
            return Err(Error::ParamsTooTight(format!(
                "level {n} admits {avail} arrangements; {target} blocks required"
            )));
        }
    }
    let k = match spec.mode {
        BlockMode::Toy => Some(target.clone()),
        BlockMode::Faithful => available.clone(),
    };
    let p = &quotient * &prev.p;

    let mut level = Level {
        n,
        p,
        quotient,
        k,
        d,
        dhat,
        available,
        compositions: None,
        letters: None,
        anchor: None,
        core: None,
    };
    materialize(spec, prev, &mut level)?;
    Ok(level)
}

/// Least quotient whose middle admits at least `target` arrangements with
/// every non-initial block appearing (d >= 1).
fn derive_toy_quotient(k_prev: &BigUint, target: &BigUint) -> Result<BigUint> {
    let k = k_prev
        .to_u64()
        .ok_or_else(|| Error::ParamsTooTight("toy derivation needs machine-sized counts".into()))?;
    // d >= 1 first holds at q = 2k - 1.
    let mut q = 2 * k - 1;
    loop {
        let m = q - k;
        if m > EXACT_COUNT_CAP {
            return Err(Error::ParamsTooTight(format!(
                "no quotient at or below {EXACT_COUNT_CAP} admits {target} blocks over {k} symbols"
            )));
        }
        let d = m / (k - 1);
        let dhat = m - (k - 2) * d;
        if middle_arrangements(dhat, d, k - 1) >= *target {
            return Ok(BigUint::from(q));
        }
        q += 1;
    }
}

/// Quotient from the growth inequality
/// q > 3 k^2 n^2 d0 / (k - n^2 d0), requiring k > n^2 d0.
fn derive_faithful_quotient(k_prev: &BigUint, n: u32, d0: u64) -> Result<BigUint> {
    let pressure = BigUint::from(n as u64 * n as u64 * d0);
    if *k_prev <= pressure {
        return Err(Error::ParamsTooTight(format!(
            "level {} count {k_prev} does not exceed n^2 d0 = {pressure}",
            n - 1
        )));
    }
    let numer = BigUint::from(3u8) * k_prev * k_prev * &pressure;
    let denom = k_prev - &pressure;
    Ok(numer / denom + BigUint::one())
}

fn check_growth_inequality(quotient: &BigUint, k_prev: &BigUint, n: u32, d0: u64) -> Result<()> {
    let pressure = BigUint::from(n as u64 * n as u64 * d0);
    if *k_prev <= pressure {
        return Err(Error::ParamsTooTight(format!(
            "level {} count {k_prev} does not exceed n^2 d0 = {pressure}",
            n - 1
        )));
    }
    // q (k - n^2 d0) > 3 k^2 n^2 d0, the inequality cleared of fractions.
    if quotient * (k_prev - &pressure) <= BigUint::from(3u8) * k_prev * k_prev * &pressure {
        return Err(Error::ParamsTooTight(format!(
            "level {n} quotient {quotient} violates the growth inequality"
        )));
    }
    Ok(())
}

/// Fills in block lists, anchors and the agreement core, to the extent the
/// budget and exact counting allow.
fn materialize(spec: &BlockSpec, prev: &Level, level: &mut Level) -> Result<()> {
    let prev_letters = match &prev.letters {
        Some(letters) => letters,
        None => return Ok(()),
    };
    let k_prev = prev_letters.len();
    let half = k_prev / 2;
    let p = match level.p.to_usize() {
        Some(p) => p,
        None => return Ok(()),
    };
    let prev_p = prev.p.to_usize().expect("divides p");
    let m = (&level.quotient - BigUint::from(k_prev))
        .to_usize()
        .expect("bounded by p");

    let dhat = level.dhat.to_u64().expect("bounded by the middle") as usize;
    let d = level.d.to_u64().expect("bounded by the middle") as usize;
    let sorted_middle = move |reverse: bool| -> Vec<u16> {
        let mut middle = Vec::with_capacity(m);
        for _ in 0..dhat {
            middle.push(1u16);
        }
        for c in 2..k_prev {
            for _ in 0..d {
                middle.push(c as u16);
            }
        }
        if reverse {
            middle.reverse();
        }
        middle
    };
    let flatten = |middle: &[u16]| -> Vec<Cell> {
        let mut letters = Vec::with_capacity(p);
        for child in (0..half as u16).chain(middle.iter().copied()).chain(half as u16..k_prev as u16) {
            letters.extend_from_slice(&prev_letters[child as usize]);
        }
        letters
    };

    // Full block list while it fits the budget and machine-sized indexing.
    let list_feasible = level.k.as_ref().is_some_and(|k| {
        k.to_u64()
            .is_some_and(|k| k <= u16::MAX as u64 && k.saturating_mul(p as u64) <= budget::budget_bytes())
    });
    if list_feasible {
        let k = level.k.as_ref().expect("checked").to_usize().expect("checked");
        let mut middles = Vec::with_capacity(k);
        if spec.relaxed_c2 {
            let mut word = vec![1u16; m];
            middles.push(word.clone());
            while middles.len() < k && next_word(&mut word, 1, k_prev as u16 - 1) {
                middles.push(word.clone());
            }
        } else {
            let mut word = sorted_middle(false);
            middles.push(word.clone());
            while middles.len() < k && next_permutation(&mut word) {
                middles.push(word.clone());
            }
        }
        if middles.len() < k {
            return Err(Error::ParamsTooTight(format!(
                "level {} enumeration exhausted at {} of {k} blocks",
                level.n,
                middles.len()
            )));
        }
        let compositions: Vec<Vec<u16>> = middles
            .iter()
            .map(|mid| {
                (0..half as u16)
                    .chain(mid.iter().copied())
                    .chain(half as u16..k_prev as u16)
                    .collect()
            })
            .collect();
        let letters: Vec<Vec<Cell>> = middles.iter().map(|mid| flatten(mid)).collect();

        // Positionwise agreement across the block list; partial agreement
        // inside varying slots is intended.
        let mut core = letters[0].clone();
        for block in &letters[1..] {
            for (slot, &c) in core.iter_mut().zip(block.iter()) {
                if *slot != c {
                    *slot = Cell::HOLE;
                }
            }
        }
        level.anchor = Some((
            letters[0].clone(),
            letters[letters.len() - 1].clone(),
        ));
        level.core = Some(HoleWord::new(core)?);
        level.compositions = Some(compositions);
        level.letters = Some(letters);
        return Ok(());
    }

    // Symbolic level keeping every arrangement: the boundary blocks are the
    // lexicographic extremes, and when the children are single letters every
    // middle position varies, so the core is affixes around holes.
    let takes_all = spec.mode == BlockMode::Faithful && !spec.relaxed_c2;
    if takes_all && 2 * (p as u64) <= budget::budget_bytes() {
        level.anchor = Some((
            flatten(&sorted_middle(false)),
            flatten(&sorted_middle(true)),
        ));
        if prev_p == 1 && level.d >= BigUint::one() {
            let mut core = Vec::with_capacity(p);
            for c in 0..half {
                core.extend_from_slice(&prev_letters[c]);
            }
            core.extend(std::iter::repeat(Cell::HOLE).take(m));
            for c in half..k_prev {
                core.extend_from_slice(&prev_letters[c]);
            }
            level.core = Some(HoleWord::new(core)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::ToeplitzSystem;

    fn render(alphabet: &Alphabet, cells: &[Cell]) -> String {
        cells.iter().map(|&c| alphabet.label(c).to_string()).collect()
    }

    fn toy(levels: u32) -> BlockSystem {
        BlockSystem::new(BlockSpec::toy(4, levels)).unwrap()
    }

    #[test]
    fn toy_scale_and_counts_are_the_minimal_ones() {
        let sys = toy(4);
        let reports = sys.level_reports();
        let p: Vec<u64> = reports.iter().map(|r| r.p.to_u64().unwrap()).collect();
        let k: Vec<u64> = reports
            .iter()
            .map(|r| r.k.clone().unwrap().to_u64().unwrap())
            .collect();
        assert_eq!(p, vec![1, 8, 120, 3720]);
        assert_eq!(k, vec![4, 8, 16, 32]);
        let d: Vec<u64> = reports[1..]
            .iter()
            .map(|r| r.d.to_u64().unwrap())
            .collect();
        let dhat: Vec<u64> = reports[1..]
            .iter()
            .map(|r| r.dhat.to_u64().unwrap())
            .collect();
        assert_eq!(d, vec![1, 1, 1]);
        assert_eq!(dhat, vec![2, 1, 1]);
        let avail: Vec<u64> = reports[1..]
            .iter()
            .map(|r| r.available.clone().unwrap().to_u64().unwrap())
            .collect();
        assert_eq!(avail, vec![12, 5040, 1307674368000]);
        for (i, r) in reports.iter().enumerate() {
            assert!(r.k.clone().unwrap() >= BigUint::from(4u64 << i));
            assert!(r.materialized && r.anchored);
        }
    }

    #[test]
    fn level_two_blocks_are_the_first_lexicographic_arrangements() {
        let sys = toy(2);
        let a = sys.alphabet().clone();
        let blocks: Vec<String> = (1..=8)
            .map(|i| render(&a, &sys.block(2, i).unwrap()))
            .collect();
        assert_eq!(
            blocks,
            vec![
                "abbbcdcd", "abbbdccd", "abbcbdcd", "abbcdbcd", "abbdbccd", "abbdcbcd",
                "abcbbdcd", "abcbdbcd"
            ]
        );
    }

    #[test]
    fn point_is_anchored_last_block_then_first() {
        let sys = toy(2);
        let a = sys.alphabet().clone();
        let cells = sys.window_cells(-8, 8).unwrap();
        assert_eq!(render(&a, &cells), "abcbdbcdabbbcdcd");
        assert!(sys.evaluate(8).is_err());
        assert!(sys.evaluate(-9).is_err());

        // Deeper towers extend the same anchors.
        let deep = toy(4);
        let deep_cells = deep.window_cells(-8, 8).unwrap();
        assert_eq!(cells, deep_cells);
        assert_eq!(deep.built_range(), (-3720, 3720));
    }

    #[test]
    fn cores_are_positionwise_agreement() {
        let sys = toy(3);
        let a = sys.alphabet().clone();
        assert_eq!(sys.ladder_depth(), 2);
        assert_eq!(sys.ladder_period(1).unwrap(), 8);
        assert_eq!(sys.ladder_period(2).unwrap(), 120);
        let core1 = sys.structural_core(1).unwrap();
        assert_eq!(render(&a, core1.word().cells()), "ab????cd");
        let core2 = sys.structural_core(2).unwrap();
        let expected = [
            "abbbcdcd", "abbbdccd", "abbcbdcd", "abbcdbcd", "abbbdccd", "abbcbdcd", "abbcdbcd",
            "ab????cd", "ab????cd", "ab????cd", "ab????cd", "abbdbccd", "abbdcbcd", "abcbbdcd",
            "abcbdbcd",
        ]
        .concat();
        assert_eq!(render(&a, core2.word().cells()), expected);
        assert_eq!(core2.word().hole_count(), 16);
    }

    #[test]
    fn grid_parse_matches_the_stated_multiplicities() {
        let sys = toy(3);
        let children = sys.parse_grid(2, -120, 120).unwrap();
        assert_eq!(children.len(), 30);
        let mut counts = [0u64; 8];
        for c in &children {
            counts[*c as usize] += 1;
        }
        // Two level-3 blocks, each with the first child once, the second
        // 1 + dhat = 2 times, the rest 1 + d = 2 times.
        assert_eq!(counts, [2, 4, 4, 4, 4, 4, 4, 4]);
        assert!(sys.parse_grid(2, -121, 120).is_err());
    }

    #[test]
    fn construction_rules_recounted_from_letters() {
        let sys = toy(4);
        for n in 2..=4 {
            let rep = sys.verify_c1_c2(n).unwrap();
            assert!(rep.affixes_ok, "level {n} affixes");
            assert_eq!(rep.multiplicities_ok, Some(true), "level {n} multiplicities");
            assert!(rep.initial_absent_ok, "level {n} marker");
        }
    }

    #[test]
    fn overlaps_are_grid_aligned() {
        let sys = toy(3);
        for n in 1..=3 {
            let rep = sys.check_trivial_overlap(n).unwrap();
            assert!(rep.ok, "level {n} overlap: {:?}", rep.witness);
        }
    }

    #[test]
    fn overlap_checker_reports_a_witness_on_a_markerless_family() {
        let blocks = vec![
            vec![Cell::letter(0), Cell::letter(1)],
            vec![Cell::letter(1), Cell::letter(0)],
        ];
        assert_eq!(overlap_violation(&blocks), Some((1, 0, 0, 1)));
    }

    #[test]
    fn letter_frequencies_are_exact_on_whole_periods() {
        let sys = toy(3);
        let table = sys.frequencies(1, 240).unwrap();
        assert_eq!(table.exact, Some(true));
        assert_eq!(table.max_deviation, Some(0.0));
        let counts: Vec<u64> = table.rows.iter().map(|r| r.count).collect();
        assert_eq!(counts, vec![30, 90, 60, 60]);
        for (row, expect) in table.rows.iter().zip([1u64, 3, 2, 2]) {
            let pred = BigRational::new(expect.into(), 8.into());
            assert_eq!(row.predicted.clone().unwrap(), pred);
            assert_eq!(row.empirical, pred);
        }
    }

    #[test]
    fn block_frequencies_are_exact_on_whole_periods() {
        let sys = toy(4);
        let table = sys.frequencies(2, 1200).unwrap();
        assert_eq!(table.exact, Some(true));
        let counts: Vec<u64> = table.rows.iter().map(|r| r.count).collect();
        assert_eq!(counts, vec![10, 20, 20, 20, 20, 20, 20, 20]);
        assert!(sys.frequencies(2, 1100).is_err(), "below ten periods");
    }

    #[test]
    fn entropy_densities_and_sweep() {
        let sys = toy(3);
        let rep = sys.entropy_lower_bound(3).unwrap();
        assert_eq!(rep.per_level.len(), 3);
        assert!((rep.max_density - (4f64).ln()).abs() < 1e-12);
        assert!(rep.chain.is_none());

        let mut last = 0.0;
        for k1 in [3u64, 4, 5, 6] {
            let sys = BlockSystem::new(BlockSpec::toy(k1, 3)).unwrap();
            let rep = sys.entropy_lower_bound(3).unwrap();
            assert!(rep.max_density > last, "density not increasing at k1={k1}");
            last = rep.max_density;
        }
    }

    #[test]
    fn empirical_factor_counts_dominate_block_counts() {
        let sys = toy(4);
        for (len, k_n) in [(8usize, 8u64), (120, 16), (3720, 32)] {
            let count = sys.empirical_complexity(len).unwrap();
            assert!(count >= k_n, "length {len}: {count} < {k_n}");
        }
    }

    #[test]
    fn first_block_is_extensible() {
        let sys = toy(4);
        for n in 1..=3 {
            let rep = sys.extensibility(n).unwrap();
            assert!(rep.ok, "level {n}");
            assert!(rep.occurrences > 0 && rep.checked_left > 0 && rep.checked_right > 0);
        }
    }

    #[test]
    fn probe_survivors_are_pure_shifts() {
        // Letter frequencies differ and 'a' marks the grid, so no relabeling
        // beyond the identity maps factors to factors.
        let sys = toy(3);
        let rep = sys.automorphism_probe(1).unwrap();
        assert_eq!(rep.candidates, 72);
        assert_eq!(rep.survivors, ["shift(-1)", "shift(0)", "shift(1)"]);
    }

    #[test]
    fn balanced_arrangement_counts() {
        assert_eq!(balanced_arrangements(1, 5), factorial(5));
        assert_eq!(balanced_arrangements(2, 2), BigUint::from(6u8));
        // The exact middle count dominates the balanced bound since the
        // first multiplicity is the larger one.
        let sys = toy(2);
        let rep = sys.level_report(2).unwrap();
        assert!(rep.available.unwrap() >= balanced_arrangements(1, 3));
    }

    #[test]
    fn faithful_levels_enforce_the_inequalities_and_stay_symbolic() {
        assert!(matches!(
            BlockSystem::new(BlockSpec::faithful(18, 2, 2)),
            Err(Error::ParamsTooTight(_))
        ));
        let sys = BlockSystem::new(BlockSpec::faithful(19, 2, 3)).unwrap();
        let reports = sys.level_reports();
        assert_eq!(reports[1].p.to_u64(), Some(788));
        assert_eq!(reports[1].d.to_u64(), Some(42));
        assert_eq!(reports[1].dhat.to_u64(), Some(55));
        assert!(!reports[1].materialized && reports[1].anchored);
        let k2 = reports[1].k.clone().unwrap();
        assert_eq!(k2, reports[1].available.clone().unwrap());
        assert!(k2 >= balanced_arrangements(1, 18));
        assert!(reports[2].k.is_none() && !reports[2].anchored);
        assert!(reports[2].p.bits() > 1000);

        assert_eq!(sys.ladder_depth(), 1);
        assert_eq!(sys.ladder_period(1).unwrap(), 788);
        let core = sys.structural_core(1).unwrap();
        assert_eq!(core.word().hole_count(), 769);
        let a = sys.alphabet().clone();
        assert_eq!(
            render(&a, &sys.window_cells(0, 19).unwrap()),
            "abcdefghibbbbbbbbbb"
        );
        assert_eq!(render(&a, &sys.window_cells(-10, 0).unwrap()), "jklmnopqrs");

        let rep = sys.entropy_lower_bound(3).unwrap();
        let chain = rep.chain.unwrap();
        assert!(0.0 < chain && chain < (19f64).ln());
    }

    #[test]
    fn explicit_scales_are_validated() {
        let mut spec = BlockSpec::toy(4, 3);
        spec.scale = Some(vec![1u8.into(), 8u8.into(), 120u8.into()]);
        let sys = BlockSystem::new(spec).unwrap();
        assert_eq!(sys.ladder_period(2).unwrap(), 120);

        let mut spec = BlockSpec::toy(4, 2);
        spec.scale = Some(vec![1u8.into(), 7u8.into()]);
        assert!(matches!(
            BlockSystem::new(spec),
            Err(Error::ParamsTooTight(_))
        ));

        let mut spec = BlockSpec::toy(4, 3);
        spec.scale = Some(vec![1u8.into(), 9u8.into(), 118u8.into()]);
        assert!(matches!(BlockSystem::new(spec), Err(Error::InvalidScale(_))));

        let mut spec = BlockSpec::faithful(19, 2, 2);
        spec.scale = Some(vec![1u32.into(), 500u32.into()]);
        assert!(matches!(
            BlockSystem::new(spec),
            Err(Error::ParamsTooTight(_))
        ));
    }

    #[test]
    fn relaxed_c2_keeps_the_marker_and_drops_multiplicities() {
        let mut spec = BlockSpec::toy(4, 3);
        spec.relaxed_c2 = true;
        let sys = BlockSystem::new(spec).unwrap();
        let a = sys.alphabet().clone();
        assert_eq!(render(&a, &sys.block(2, 1).unwrap()), "abbbbbcd");
        let core = sys.structural_core(1).unwrap();
        assert_eq!(render(&a, core.word().cells()), "abbb??cd");
        let rep = sys.verify_c1_c2(2).unwrap();
        assert!(rep.affixes_ok && rep.initial_absent_ok);
        assert_eq!(rep.multiplicities_ok, None);
        let table = sys.frequencies(1, 240).unwrap();
        assert!(table.rows.iter().all(|r| r.predicted.is_none()));
        for n in 1..=2 {
            assert!(sys.check_trivial_overlap(n).unwrap().ok);
        }
    }

    #[test]
    fn tight_parameters_are_rejected() {
        assert!(matches!(
            BlockSystem::new(BlockSpec::toy(2, 2)),
            Err(Error::ParamsTooTight(_))
        ));
        assert!(matches!(
            BlockSystem::new(BlockSpec::toy(1, 2)),
            Err(Error::InvalidSpec(_))
        ));
        // A pinned scale cannot honor a request beyond its arrangements; the
        // derived scale instead grows the quotient to fit.
        let mut spec = BlockSpec::toy(4, 2);
        spec.scale = Some(vec![1u8.into(), 8u8.into()]);
        spec.requested = vec![0, 13];
        assert!(matches!(
            BlockSystem::new(spec.clone()),
            Err(Error::ParamsTooTight(_))
        ));
        spec.requested = vec![0, 12];
        let sys = BlockSystem::new(spec).unwrap();
        assert_eq!(
            sys.level_report(2).unwrap().k.unwrap(),
            BigUint::from(12u8)
        );
        let mut spec = BlockSpec::toy(4, 2);
        spec.requested = vec![0, 13];
        let sys = BlockSystem::new(spec).unwrap();
        let rep = sys.level_report(2).unwrap();
        assert_eq!(rep.quotient, BigUint::from(9u8));
        assert_eq!(rep.k.unwrap(), BigUint::from(13u8));
    }

    #[test]
    fn wrapped_system_exposes_the_ladder() {
        let sys = ToeplitzSystem::blocks(BlockSpec::toy(4, 3)).unwrap();
        assert_eq!(sys.ladder_depth(), 2);
        assert_eq!(sys.ladder_period(1).unwrap(), 8);
        let scale = sys.periodic_structure(2).unwrap();
        assert_eq!(scale.to_json(), "[\"8\",\"120\"]");
        assert!(!sys.is_constant_point().unwrap());
        assert!(sys.label().contains("mode=toy"));
        let win = sys.window(-2, 2).unwrap();
        assert_eq!(win.len(), 4);
    }
}
