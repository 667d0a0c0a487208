//! Factor language enumeration with exact counts.
//!
//! Counts of distinct length-n factors are computed on finite windows of the
//! point, never by extrapolation. The window is grown by doubling until the
//! counts are unchanged across two consecutive doublings; the starting size
//! is the structural recurrence floor (the next level period above n) when
//! the period ladder provides one. Counts on a window are exact: windows are
//! ranked by suffix-rank doubling and deduplicated by rank pairs, with no
//! probabilistic hashing anywhere.

use crate::alphabet::Cell;
use crate::error::{Error, Result};
use crate::holewords::SequenceWindow;
use crate::system::ToeplitzSystem;
use std::collections::BTreeSet;

/// Count of distinct factors of one length, with the window evidence.
#[derive(Clone, Debug)]
pub struct FactorReport {
    pub len: usize,
    pub count: u64,
    /// True when the growth started at the structural recurrence floor.
    pub certified: bool,
    pub certification: String,
    /// Half-width of the final window [-L, L + len).
    pub window_half_width: i64,
}

/// A window of the point grown until the factor count at `len` stabilized.
#[derive(Debug)]
pub struct MasterWindow {
    pub window: SequenceWindow,
    pub len: usize,
    pub count: u64,
    pub certified: bool,
    pub certification: String,
}

/// Rank tables for power-of-two block lengths over one byte sequence.
/// Two windows of length n are equal iff their leading and trailing blocks
/// of length prev_pow2(n) have equal ranks.
struct RankTable {
    n: usize,
    levels: Vec<(usize, Vec<u32>)>,
}

fn prev_pow2(n: usize) -> usize {
    debug_assert!(n >= 1);
    let mut b = 1usize;
    while b * 2 <= n {
        b *= 2;
    }
    b
}

fn build_rank_table(vals: &[u8], lens: &[usize]) -> RankTable {
    let n = vals.len();
    let needed: BTreeSet<usize> = lens.iter().map(|&l| prev_pow2(l.max(1))).collect();
    let target = *needed.iter().max().expect("nonempty lens");

    // Dense ranks of single cells.
    let mut count = [0u32; 257];
    for &v in vals {
        count[v as usize + 1] += 1;
    }
    let mut dense = [0u32; 256];
    let mut next = 0u32;
    for v in 0..256 {
        if count[v + 1] > 0 {
            dense[v] = next;
            next += 1;
        }
    }
    let mut rank: Vec<u32> = vals.iter().map(|&v| dense[v as usize]).collect();
    let mut distinct = next;

    let mut levels = Vec::new();
    if needed.contains(&1) {
        levels.push((1usize, rank.clone()));
    }

    let mut block = 1usize;
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut tmp: Vec<u32> = vec![0; n];
    let mut new_rank: Vec<u32> = vec![0; n];
    while block < target {
        if distinct as usize == n {
            // All positions already distinguished; longer blocks induce the
            // same equivalence classes.
            block *= 2;
            if needed.contains(&block) {
                levels.push((block, rank.clone()));
            }
            continue;
        }
        // Radix sort positions by (rank[i], rank[i + block] + 1 | 0).
        let key2 = |i: usize| -> u32 {
            if i + block < n {
                rank[i + block] + 1
            } else {
                0
            }
        };
        let buckets = distinct as usize + 2;
        let mut cnt = vec![0u32; buckets];
        for i in 0..n {
            cnt[key2(i) as usize] += 1;
        }
        let mut sum = 0u32;
        for c in cnt.iter_mut() {
            let v = *c;
            *c = sum;
            sum += v;
        }
        for i in 0..n {
            let k = key2(i) as usize;
            tmp[cnt[k] as usize] = i as u32;
            cnt[k] += 1;
        }
        let mut cnt = vec![0u32; buckets];
        for i in 0..n {
            cnt[rank[i] as usize + 1] += 1;
        }
        let mut sum = 0u32;
        for c in cnt.iter_mut() {
            let v = *c;
            *c = sum;
            sum += v;
        }
        for &iu in tmp.iter() {
            let i = iu as usize;
            let k = rank[i] as usize + 1;
            order[cnt[k] as usize] = iu;
            cnt[k] += 1;
        }
        // Assign new dense ranks in sorted order.
        let mut next = 0u32;
        let mut prev_key = (u32::MAX, u32::MAX);
        for &iu in order.iter() {
            let i = iu as usize;
            let key = (rank[i], key2(i));
            if key != prev_key {
                if prev_key != (u32::MAX, u32::MAX) {
                    next += 1;
                }
                prev_key = key;
            }
            new_rank[i] = next;
        }
        std::mem::swap(&mut rank, &mut new_rank);
        distinct = next + 1;
        block *= 2;
        if needed.contains(&block) {
            levels.push((block, rank.clone()));
        }
    }
    RankTable { n, levels }
}

impl RankTable {
    fn level_for(&self, len: usize) -> &(usize, Vec<u32>) {
        let want = prev_pow2(len);
        self.levels
            .iter()
            .find(|(b, _)| *b == want)
            .expect("level was requested at build time")
    }

    /// Exact number of distinct length-`len` windows.
    fn distinct_count(&self, len: usize) -> u64 {
        if len == 0 || len > self.n {
            return 0;
        }
        let (block, rank) = self.level_for(len);
        let m = self.n - len + 1;
        let mut keys: Vec<u64> = (0..m)
            .map(|i| ((rank[i] as u64) << 32) | rank[i + len - block] as u64)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len() as u64
    }

    /// One starting position per distinct length-`len` window, in order of
    /// first appearance.
    fn representatives(&self, len: usize) -> Vec<usize> {
        if len == 0 || len > self.n {
            return Vec::new();
        }
        let (block, rank) = self.level_for(len);
        let m = self.n - len + 1;
        let mut seen: BTreeSet<u64> = BTreeSet::new();
        let mut reps = Vec::new();
        for i in 0..m {
            let key = ((rank[i] as u64) << 32) | rank[i + len - block] as u64;
            if seen.insert(key) {
                reps.push(i);
            }
        }
        reps
    }
}

/// The recurrence floor for factors of length `len`: the period one level
/// above the first ladder period >= len, when the ladder reaches that far.
fn structural_floor(sys: &ToeplitzSystem, len: usize) -> Option<i64> {
    for n in 1..=sys.ladder_depth() as u32 {
        match sys.ladder_period(n) {
            Ok(p) if p >= len as i64 => return sys.ladder_period(n + 1).ok(),
            Ok(_) => continue,
            Err(_) => return None,
        }
    }
    None
}

fn window_bytes(win: &SequenceWindow) -> Result<Vec<u8>> {
    win.cells()
        .iter()
        .enumerate()
        .map(|(off, c)| {
            c.letter_index()
                .ok_or(Error::UnexpectedHole(win.start() + off as i64))
        })
        .collect()
}

struct StableWindow {
    window: SequenceWindow,
    table: RankTable,
    counts: Vec<u64>,
    certified: bool,
    certification: String,
    half_width: i64,
}

/// Grows the window [-L, L + max_len) by doubling until the counts at all
/// requested lengths are unchanged across two consecutive doublings.
fn stable_window(sys: &ToeplitzSystem, lens: &[usize]) -> Result<StableWindow> {
    if lens.is_empty() || lens.contains(&0) {
        return Err(Error::InvalidWord("factor lengths must be positive".into()));
    }
    let max_len = *lens.iter().max().expect("nonempty") as i64;
    let (floor, certified) = match structural_floor(sys, max_len as usize) {
        Some(p) => (p, true),
        None => (4 * max_len, false),
    };
    // Constructions holding finitely many letters bound the window; a capped
    // window cannot demonstrate stabilization, so the result is then labeled
    // uncertified rather than grown past the built letters.
    let cap = match sys.built_range() {
        Some((lo, hi)) => {
            let cap = (-lo).min(hi - max_len);
            if cap < max_len {
                return Err(Error::RangeNotBuilt {
                    start: -max_len,
                    end: 2 * max_len,
                    built_start: lo,
                    built_end: hi,
                });
            }
            Some(cap)
        }
        None => None,
    };
    let mut half = floor.max(max_len);
    let mut prev: Option<Vec<u64>> = None;
    let mut streak = 0u32;
    loop {
        let mut capped = false;
        if let Some(cap) = cap {
            if half >= cap {
                half = cap;
                capped = true;
            }
        }
        let window = sys.letters_window(-half, half + max_len)?;
        let bytes = window_bytes(&window)?;
        let table = build_rank_table(&bytes, lens);
        let counts: Vec<u64> = lens.iter().map(|&l| table.distinct_count(l)).collect();
        if prev.as_ref() == Some(&counts) {
            streak += 1;
        } else {
            streak = 0;
        }
        prev = Some(counts.clone());
        if capped {
            return Ok(StableWindow {
                window,
                table,
                counts,
                certified: false,
                certification: format!("window-capped-at-built-range({half})"),
                half_width: half,
            });
        }
        if streak >= 2 {
            let certification = if certified {
                format!("certified-by-structure(floor={floor},window={half})")
            } else {
                format!("stabilized-at-window({half})")
            };
            return Ok(StableWindow {
                window,
                table,
                counts,
                certified,
                certification,
                half_width: half,
            });
        }
        half *= 2;
    }
}

/// Exact distinct factor counts at each requested length, grown on one
/// shared window.
pub fn factor_counts(sys: &ToeplitzSystem, lens: &[usize]) -> Result<Vec<FactorReport>> {
    let stable = stable_window(sys, lens)?;
    Ok(lens
        .iter()
        .zip(stable.counts.iter())
        .map(|(&len, &count)| FactorReport {
            len,
            count,
            certified: stable.certified,
            certification: stable.certification.clone(),
            window_half_width: stable.half_width,
        })
        .collect())
}

pub fn factor_count(sys: &ToeplitzSystem, len: usize) -> Result<FactorReport> {
    Ok(factor_counts(sys, &[len])?.remove(0))
}

/// The distinct factors themselves, lexicographically sorted. Meant for
/// small lengths; the count equals `factor_count`.
pub fn factor_set(sys: &ToeplitzSystem, len: usize) -> Result<(FactorReport, Vec<Vec<Cell>>)> {
    let stable = stable_window(sys, &[len])?;
    let reps = stable.table.representatives(len);
    let cells = stable.window.cells();
    let mut factors: Vec<Vec<Cell>> = reps
        .into_iter()
        .map(|i| cells[i..i + len].to_vec())
        .collect();
    factors.sort();
    let report = FactorReport {
        len,
        count: factors.len() as u64,
        certified: stable.certified,
        certification: stable.certification,
        window_half_width: stable.half_width,
    };
    Ok((report, factors))
}

/// A window grown until the factor count at `len` stabilized, for use as a
/// factor-complete test bed at that length.
pub fn master_window(sys: &ToeplitzSystem, len: usize) -> Result<MasterWindow> {
    let stable = stable_window(sys, &[len])?;
    Ok(MasterWindow {
        window: stable.window,
        len,
        count: stable.counts[0],
        certified: stable.certified,
        certification: stable.certification,
    })
}

/// Whether `needle` occurs in the stabilized window of the system, with the
/// first occurrence coordinate. Absence is relative to that window and is
/// labeled by the certification of the growth rule.
pub fn find_occurrence(sys: &ToeplitzSystem, needle: &[Cell]) -> Result<(Option<i64>, String)> {
    if needle.is_empty() {
        return Err(Error::InvalidWord("empty factor".into()));
    }
    let stable = stable_window(sys, &[needle.len()])?;
    let hay = stable.window.cells();
    let pos = hay
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|i| stable.window.start() + i as i64);
    Ok((pos, stable.certification))
}

/// The complexity growth exponent log(p/d) / log(p/q) of the constant-word
/// construction, d = gcd(p, q).
pub fn theoretical_exponent(p: u64, q: u64) -> Result<f64> {
    if q == 0 || q >= p {
        return Err(Error::InvalidWord(format!(
            "exponent needs 1 <= q < p, got p={p} q={q}"
        )));
    }
    let d = num_integer::gcd(p, q);
    Ok(((p / d) as f64).ln() / ((p as f64) / (q as f64)).ln())
}

#[derive(Clone, Debug)]
pub struct ComplexityTable {
    pub rows: Vec<FactorReport>,
    /// Growth exponent predicted for constant-word systems.
    pub exponent: Option<f64>,
    /// min and max of count / n^exponent over certified rows.
    pub c_lower: Option<f64>,
    pub c_upper: Option<f64>,
}

pub fn complexity_table(sys: &ToeplitzSystem, lens: &[usize]) -> Result<ComplexityTable> {
    let rows = factor_counts(sys, lens)?;
    let exponent = match sys {
        ToeplitzSystem::Pq(s) if s.q() >= 1 => theoretical_exponent(s.p(), s.q()).ok(),
        _ => None,
    };
    let (mut c_lower, mut c_upper) = (None, None);
    if let Some(r) = exponent {
        for row in rows.iter().filter(|row| row.certified) {
            let ratio = row.count as f64 / (row.len as f64).powf(r);
            c_lower = Some(c_lower.map_or(ratio, |c: f64| c.min(ratio)));
            c_upper = Some(c_upper.map_or(ratio, |c: f64| c.max(ratio)));
        }
    }
    Ok(ComplexityTable {
        rows,
        exponent,
        c_lower,
        c_upper,
    })
}

#[derive(Clone, Debug)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub rows_used: usize,
}

/// Least-squares slope of log count against log length over the certified
/// rows with lo <= len <= hi. Requires at least five usable rows.
pub fn fit_exponent(rows: &[FactorReport], lo: usize, hi: usize) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.certified && r.len >= lo && r.len <= hi && r.count > 0)
        .map(|r| ((r.len as f64).ln(), (r.count as f64).ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::EnumerationNotCertified {
            len: hi,
            reason: format!(
                "exponent fit needs at least 5 certified rows in [{lo}, {hi}], have {}",
                pts.len()
            ),
        });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::EnumerationNotCertified {
            len: hi,
            reason: "degenerate abscissas in exponent fit".into(),
        });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ExponentFit {
        exponent: slope,
        intercept,
        rms_residual: rms,
        rows_used: pts.len(),
    })
}

/// Roughly log-spaced sample lengths in [lo, hi], deduplicated.
pub fn log_spaced(lo: usize, hi: usize, samples: usize) -> Vec<usize> {
    debug_assert!(lo >= 1 && lo <= hi && samples >= 2);
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..samples)
        .map(|i| {
            let t = a + (b - a) * i as f64 / (samples - 1) as f64;
            t.exp().round() as usize
        })
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
