//! Products of pairwise-disjoint Toeplitz systems with an optional finite
//! cyclic factor.
//!
//! Components must have pairwise disjoint scale primes, also disjoint from
//! the primes of the cyclic order; that is the sufficient condition for the
//! product to stay minimal, and it makes the tuple period at every level the
//! plain product of the component periods. The intended symmetry group of
//! the product of d components with a cyclic factor of order a is Z^d plus
//! Z/a: each component contributes its own shift, the cyclic factor its
//! rotation. The group itself is asserted, not proved here; what is checked
//! is the computable inclusion (componentwise maps commute with the product
//! shift) and the rejection of coordinate-mixing candidates.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::alphabet::{Alphabet, AlphabetRef, Cell};
use crate::blocks::{middle_arrangements, BlockSpec};
use crate::budget;
use crate::error::{Error, Result};
use crate::holewords::HoleWord;
use crate::language::factor_set;
use crate::numtheory::{factorize, is_prime_u64, primes_avoiding};
use crate::odometer::Scale;
use crate::system::{LevelData, ToeplitzSystem};
use crate::window_map::{first_disagreement, WindowMap};

pub struct ProductSystem {
    components: Vec<ToeplitzSystem>,
    /// Order of the finite cyclic factor; 1 means absent.
    cyclic: u64,
    alphabet: AlphabetRef,
    sizes: Vec<usize>,
    expected_group: String,
    levels: Mutex<Vec<Arc<LevelData>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropyMode {
    /// Single-hole components: word complexity stays linear.
    Zero,
    /// Block-tower components with positive complexity densities.
    Positive,
}

impl EntropyMode {
    pub fn name(self) -> &'static str {
        match self {
            EntropyMode::Zero => "zero",
            EntropyMode::Positive => "positive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RealizeReport {
    pub d: u64,
    pub a: u64,
    pub primes: Vec<u64>,
    pub entropy_mode: EntropyMode,
    pub expected_group: String,
}

#[derive(Clone, Debug)]
pub struct ProductMapReport {
    pub commutes: bool,
    pub components: usize,
    pub cyclic_step: i64,
    pub radius: i64,
    pub window: (i64, i64),
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct MixingReport {
    pub rejected: bool,
    pub source: usize,
    pub target: usize,
    pub factor_len: usize,
    /// Coordinate of the first projected factor absent from the target
    /// language, when rejected.
    pub witness: Option<i64>,
}

fn group_name(d: u64, a: u64) -> String {
    let free = match d {
        1 => "Z".to_string(),
        _ => format!("Z^{d}"),
    };
    if a <= 1 {
        free
    } else {
        format!("{free} + Z/{a}")
    }
}

impl ProductSystem {
    pub fn new(components: Vec<ToeplitzSystem>, cyclic: u64) -> Result<ProductSystem> {
        if components.is_empty() {
            return Err(Error::InvalidSpec("product needs at least one component".into()));
        }
        if cyclic == 0 {
            return Err(Error::InvalidSpec("cyclic order must be at least 1".into()));
        }
        for c in &components {
            if matches!(c, ToeplitzSystem::Product(_)) {
                return Err(Error::InvalidSpec(
                    "nested products are not supported; pass a flat component list".into(),
                ));
            }
        }

        // Scale primes must be pairwise disjoint across components and the
        // cyclic order. Only the represented (machine-sized) ladder can be
        // factored; symbolic deeper levels share its primes by construction
        // in every system this crate builds.
        let mut owner: BTreeMap<u64, String> = BTreeMap::new();
        for (prime, _) in factorize(&BigUint::from(cyclic)) {
            let p = prime.to_u64().expect("factor of a u64");
            owner.insert(p, "the cyclic order".to_string());
        }
        for (idx, comp) in components.iter().enumerate() {
            let depth = comp.ladder_depth() as u32;
            if depth == 0 {
                return Err(Error::InvalidSpec(format!(
                    "component {idx} exposes no periodic structure"
                )));
            }
            let deepest = comp.ladder_period(depth)?;
            for (prime, _) in factorize(&BigUint::from(deepest as u64)) {
                let p = prime.to_u64().expect("factor of a u64");
                if let Some(other) = owner.get(&p) {
                    if other != &format!("component {idx}") {
                        return Err(Error::PrimeCollision(p));
                    }
                } else {
                    owner.insert(p, format!("component {idx}"));
                }
            }
        }

        let sizes: Vec<usize> = components.iter().map(|c| c.alphabet().len()).collect();
        let mut total: usize = 1;
        for &s in &sizes {
            total = total.saturating_mul(s);
        }
        total = total.saturating_mul(cyclic as usize);
        if total > 254 {
            return Err(Error::InvalidSpec(format!(
                "tuple alphabet would need {total} letters; at most 254 are supported"
            )));
        }
        let mut labels = Vec::with_capacity(total);
        for index in 0..total {
            let mut rest = index;
            let mut parts = vec![String::new(); sizes.len() + usize::from(cyclic > 1)];
            if cyclic > 1 {
                *parts.last_mut().expect("nonempty") = (rest % cyclic as usize).to_string();
                rest /= cyclic as usize;
            }
            for (j, comp) in components.iter().enumerate().rev() {
                let l = rest % sizes[j];
                rest /= sizes[j];
                parts[j] = comp.alphabet().label(Cell::letter(l as u8)).to_string();
            }
            labels.push(format!("({})", parts.join(",")));
        }
        let alphabet = Arc::new(Alphabet::new(labels)?);

        let d = components.len() as u64;
        Ok(ProductSystem {
            components,
            cyclic,
            alphabet,
            sizes,
            expected_group: group_name(d, cyclic),
            levels: Mutex::new(Vec::new()),
        })
    }

    pub fn components(&self) -> &[ToeplitzSystem] {
        &self.components
    }

    pub fn cyclic_order(&self) -> u64 {
        self.cyclic
    }

    pub fn expected_group(&self) -> &str {
        &self.expected_group
    }

    pub fn alphabet(&self) -> &AlphabetRef {
        &self.alphabet
    }

    pub fn label(&self) -> String {
        let mut parts: Vec<String> = self.components.iter().map(|c| c.label()).collect();
        if self.cyclic > 1 {
            parts.push(format!("Z/{}", self.cyclic));
        }
        format!("product[{}]", parts.join(" x "))
    }

    /// Mixed-radix tuple letter: component letters first, then the cyclic
    /// digit i mod a. A hole in any component leaves the tuple undetermined.
    pub fn evaluate(&self, i: i64) -> Result<Cell> {
        let mut index = 0usize;
        for (comp, &size) in self.components.iter().zip(&self.sizes) {
            let c = comp.evaluate(i)?;
            match c.letter_index() {
                Some(l) => index = index * size + l as usize,
                None => return Ok(Cell::HOLE),
            }
        }
        index = index * self.cyclic as usize + i.rem_euclid(self.cyclic as i64) as usize;
        Ok(Cell::letter(index as u8))
    }

    fn tuple_period(&self, n: u32) -> Result<i64> {
        let mut prod: i64 = self.cyclic as i64;
        for comp in &self.components {
            prod = prod
                .checked_mul(comp.ladder_period(n)?)
                .filter(|&p| p <= i64::MAX / 4)
                .ok_or(Error::Overflow("tuple period"))?;
        }
        Ok(prod)
    }

    pub fn ladder_depth(&self) -> usize {
        let min_depth = self
            .components
            .iter()
            .map(|c| c.ladder_depth())
            .min()
            .unwrap_or(0);
        let mut depth = 0;
        for n in 1..=min_depth as u32 {
            if self.tuple_period(n).is_err() {
                break;
            }
            depth = n as usize;
        }
        depth
    }

    /// Level-n period of the tuple point: coprimality makes the lcm of the
    /// component periods (times the cyclic order) their plain product.
    pub fn ladder_period(&self, n: u32) -> Result<i64> {
        if n == 0 || n as usize > self.ladder_depth() {
            return Err(Error::DepthOutOfRange {
                requested: n as usize,
                depth: self.ladder_depth(),
            });
        }
        self.tuple_period(n)
    }

    /// Tuple positions determined at level n: exactly those determined at
    /// level n in every component; the cyclic digit is always determined.
    pub fn structural_core(&self, n: u32) -> Result<Arc<LevelData>> {
        let period = self.ladder_period(n)?;
        {
            let cache = self.levels.lock().expect("level cache poisoned");
            if let Some(data) = cache.get((n - 1) as usize) {
                return Ok(data.clone());
            }
        }
        budget::charge(period as u64)?;
        let cores = self
            .components
            .iter()
            .map(|c| c.structural_core(n))
            .collect::<Result<Vec<_>>>()?;
        let mut cells = Vec::with_capacity(period as usize);
        for t in 0..period {
            let mut index = 0usize;
            let mut determined = true;
            for (core, &size) in cores.iter().zip(&self.sizes) {
                let c = core.word().cells()[(t % core.period()) as usize];
                match c.letter_index() {
                    Some(l) => index = index * size + l as usize,
                    None => {
                        determined = false;
                        break;
                    }
                }
            }
            cells.push(if determined {
                index = index * self.cyclic as usize + (t % self.cyclic as i64) as usize;
                Cell::letter(index as u8)
            } else {
                Cell::HOLE
            });
        }
        let data = Arc::new(LevelData::new(n, HoleWord::new(cells)?));
        let mut cache = self.levels.lock().expect("level cache poisoned");
        // Cache only when contiguous with what is already there.
        if cache.len() == (n - 1) as usize {
            cache.push(data.clone());
        }
        Ok(data)
    }

    pub fn periodic_structure(&self, depth: u32) -> Result<Scale> {
        let mut periods = Vec::new();
        for n in 1..=depth {
            periods.push(BigUint::from(self.ladder_period(n)? as u64));
        }
        Scale::new(periods)
    }

    /// Intersection of the component ranges; None when every component can
    /// evaluate any machine coordinate.
    pub fn built_range(&self) -> Option<(i64, i64)> {
        let mut range: Option<(i64, i64)> = None;
        for comp in &self.components {
            if let Some((lo, hi)) = comp.built_range() {
                range = Some(match range {
                    None => (lo, hi),
                    Some((a, b)) => (a.max(lo), b.min(hi)),
                });
            }
        }
        range
    }
}

/// Builds the product realizing Z^d (+ Z/a when a > 1) with auto-selected
/// component primes: the smallest primes not dividing a (and, in zero
/// entropy mode, not 2, since the binary single-hole word cannot anchor a
/// two-sided point).
pub fn realize_group(
    d: u64,
    a: u64,
    mode: EntropyMode,
) -> Result<(ProductSystem, RealizeReport)> {
    if d == 0 || a == 0 {
        return Err(Error::InvalidSpec("realization needs d >= 1 and a >= 1".into()));
    }
    let avoid = match mode {
        EntropyMode::Zero => BigUint::from(2 * a),
        EntropyMode::Positive => BigUint::from(a),
    };
    let primes = primes_avoiding(d as usize, &avoid);
    realize_group_with_primes(d, a, mode, &primes)
}

/// As `realize_group` with the component primes pinned by the caller.
pub fn realize_group_with_primes(
    d: u64,
    a: u64,
    mode: EntropyMode,
    primes: &[u64],
) -> Result<(ProductSystem, RealizeReport)> {
    if d == 0 || a == 0 {
        return Err(Error::InvalidSpec("realization needs d >= 1 and a >= 1".into()));
    }
    if primes.len() != d as usize {
        return Err(Error::InvalidSpec(format!(
            "{} primes supplied for {d} components",
            primes.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for &r in primes {
        if !is_prime_u64(r) {
            return Err(Error::InvalidSpec(format!("{r} is not prime")));
        }
        if a % r == 0 || !seen.insert(r) {
            return Err(Error::PrimeCollision(r));
        }
        if mode == EntropyMode::Zero && r == 2 {
            return Err(Error::InvalidSpec(
                "zero-entropy components need odd primes: the length-2 single-hole word ends in its hole".into(),
            ));
        }
    }
    let components = primes
        .iter()
        .map(|&r| match mode {
            EntropyMode::Zero => ToeplitzSystem::constant_word(&zero_component_word(r)),
            EntropyMode::Positive => ToeplitzSystem::blocks(positive_component_spec(r)?),
        })
        .collect::<Result<Vec<_>>>()?;
    let sys = ProductSystem::new(components, a)?;
    let report = RealizeReport {
        d,
        a,
        primes: primes.to_vec(),
        entropy_mode: mode,
        expected_group: sys.expected_group.clone(),
    };
    Ok((sys, report))
}

/// Single-hole component word for the prime r: one hole, one fixed letter
/// left of it, b's elsewhere. Complexity stays below 2n at every scale
/// level.
pub(crate) fn zero_component_word(r: u64) -> String {
    format!("a?{}", "b".repeat(r as usize - 2))
}

/// Block-tower component spec for the prime r: the toy tower on four
/// letters, three levels, with an r-power scale.
pub(crate) fn positive_component_spec(r: u64) -> Result<BlockSpec> {
    let mut spec = BlockSpec::toy(4, 3);
    spec.scale = Some(power_scale(r, 4, 3)?);
    Ok(spec)
}

/// Block-tower scale with all quotients powers of r: per level the least
/// power admitting the doubled block count.
fn power_scale(r: u64, k1: u64, levels: u32) -> Result<Vec<BigUint>> {
    let mut scale = vec![BigUint::one()];
    let mut p = BigUint::one();
    let mut k = k1;
    for _ in 2..=levels {
        let target = 2 * k;
        let mut q = r;
        loop {
            if q > k {
                let m = q - k;
                let d = m / (k - 1);
                let dhat = m - (k - 2) * d;
                if middle_arrangements(dhat, d, k - 1) >= BigUint::from(target) {
                    break;
                }
            }
            q = q
                .checked_mul(r)
                .ok_or(Error::ParamsTooTight("no power of the prime fits the block target".into()))?;
        }
        p *= BigUint::from(q);
        scale.push(p.clone());
        k = target;
    }
    Ok(scale)
}

/// Applies one window map per component (and a rotation step on the cyclic
/// factor) and checks commutation with the product shift extensionally:
/// per component, map(shift(window)) must equal shift(map(window)) on the
/// overlap. Maps of different radii are padded to the largest.
pub fn product_factor_commutes(
    sys: &ProductSystem,
    maps: &[WindowMap],
    cyclic_step: i64,
    half: i64,
) -> Result<ProductMapReport> {
    if maps.len() != sys.components.len() {
        return Err(Error::InvalidSpec(format!(
            "{} maps for {} components",
            maps.len(),
            sys.components.len()
        )));
    }
    let radius = maps.iter().map(|m| m.radius().max(m.required_len())).max().unwrap_or(0);
    let (s, e) = (-half - 2 * radius - 2, half + 2 * radius + 2);
    let mut commutes = true;
    let mut detail = String::new();
    for (j, (comp, map)) in sys.components.iter().zip(maps).enumerate() {
        let win = comp.letters_window(s, e)?;
        let lhs = map.apply(&win.shifted(1))?;
        let rhs = map.apply(&win)?.shifted(1);
        let (overlap, disagree) = first_disagreement(&lhs, &rhs);
        if overlap < 2 * half {
            return Err(Error::WindowTooShort {
                missing_start: -half,
                missing_end: half,
            });
        }
        if let Some(at) = disagree {
            commutes = false;
            detail = format!("component {j} map fails to commute with the shift at {at}");
            break;
        }
    }
    // The cyclic factor is abelian: rotation by any step commutes with the
    // +1 rotation identically, so only the component maps need checking.
    if commutes {
        detail = if sys.cyclic > 1 {
            format!(
                "componentwise maps plus rotation by {cyclic_step} commute with the product shift"
            )
        } else {
            "componentwise maps commute with the product shift".to_string()
        };
    }
    Ok(ProductMapReport {
        commutes,
        components: maps.len(),
        cyclic_step,
        radius,
        window: (s, e),
        detail,
    })
}

/// Rejection check for coordinate-mixing candidates, e.g. the swap of two
/// components: the mixed map would have to send the point to one whose
/// `target` coordinate reads off component `source`, so every length-`len`
/// factor of `source` would have to belong to `target`'s language. A factor
/// that does not is an explicit witness that no such endomorphism exists.
pub fn mixing_rejection(
    sys: &ProductSystem,
    source: usize,
    target: usize,
    len: usize,
    half: i64,
) -> Result<MixingReport> {
    let n = sys.components.len();
    if source >= n || target >= n {
        return Err(Error::InvalidSpec(format!(
            "components {source} and {target} requested of {n}"
        )));
    }
    if len == 0 || half <= len as i64 {
        return Err(Error::InvalidSpec("mixing check needs 0 < len < half".into()));
    }
    let probe = sys.components[source].letters_window(-half, half)?;
    let (_, factors) = factor_set(&sys.components[target], len)?;
    let language: BTreeSet<&[Cell]> = factors.iter().map(|f| f.as_slice()).collect();
    let cells = probe.cells();
    for t in 0..=cells.len() - len {
        if !language.contains(&cells[t..t + len]) {
            return Ok(MixingReport {
                rejected: true,
                source,
                target,
                factor_len: len,
                witness: Some(probe.start() + t as i64),
            });
        }
    }
    Ok(MixingReport {
        rejected: false,
        source,
        target,
        factor_len: len,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::make_phi;

    #[test]
    fn single_component_tuple_mirrors_the_component() {
        let (sys, report) = realize_group(1, 1, EntropyMode::Zero).unwrap();
        assert_eq!(report.primes, vec![3]);
        assert_eq!(report.expected_group, "Z");
        assert_eq!(sys.alphabet().len(), 2);
        assert_eq!(sys.alphabet().labels()[0], "(a)");
        assert_eq!(sys.ladder_period(1).unwrap(), 3);
        assert_eq!(sys.ladder_period(2).unwrap(), 9);
        // Tuple letters track the component letters one to one.
        let comp = &sys.components()[0];
        for i in -30..30 {
            assert_eq!(
                sys.evaluate(i).unwrap().letter_index(),
                comp.evaluate(i).unwrap().letter_index()
            );
        }
    }

    #[test]
    fn cyclic_factor_multiplies_every_period() {
        let (sys, report) = realize_group(1, 4, EntropyMode::Zero).unwrap();
        assert_eq!(report.primes, vec![3]);
        assert_eq!(report.expected_group, "Z + Z/4");
        assert_eq!(sys.alphabet().len(), 8);
        assert_eq!(sys.ladder_period(1).unwrap(), 12);
        assert_eq!(sys.ladder_period(2).unwrap(), 36);
        let scale = sys.periodic_structure(2).unwrap();
        assert_eq!(scale.to_json(), r#"["12","36"]"#);

        // x_0 = a with digit 0; x_2 = b with digit 2: index 1*4+2.
        assert_eq!(sys.evaluate(0).unwrap(), Cell::letter(0));
        assert_eq!(sys.evaluate(2).unwrap(), Cell::letter(6));
        assert_eq!(sys.alphabet().label(Cell::letter(6)), "(b,2)");

        // Core at level 1: holes exactly where the component word has them.
        let core = sys.structural_core(1).unwrap();
        assert_eq!(core.period(), 12);
        assert_eq!(core.hole_count(), 4);
        assert_eq!(
            core.word()
                .holes()
                .iter()
                .map(|&t| t % 3)
                .collect::<Vec<_>>(),
            vec![1, 1, 1, 1]
        );
    }

    #[test]
    fn worked_example_two_components_with_z6() {
        let (sys, report) = realize_group(2, 6, EntropyMode::Zero).unwrap();
        assert_eq!(report.primes, vec![5, 7]);
        assert_eq!(report.expected_group, "Z^2 + Z/6");
        assert_eq!(sys.alphabet().len(), 24);
        assert_eq!(sys.ladder_period(1).unwrap(), 5 * 7 * 6);
        assert!(sys.built_range().is_none());
        let wrapped = ToeplitzSystem::Product(sys);
        let reports = wrapped.essential_periods(1).unwrap();
        assert!(reports[0].certified, "level 1 left candidates: {:?}", reports[0]);
        assert_eq!(reports[0].period, 210);
    }

    #[test]
    fn prime_collisions_are_rejected() {
        assert!(matches!(
            realize_group_with_primes(1, 6, EntropyMode::Zero, &[3]),
            Err(Error::PrimeCollision(3))
        ));
        assert!(matches!(
            realize_group_with_primes(2, 1, EntropyMode::Zero, &[5, 5]),
            Err(Error::PrimeCollision(5))
        ));
        let a = ToeplitzSystem::constant_word("a?b").unwrap();
        let b = ToeplitzSystem::constant_word("b?a").unwrap();
        assert!(matches!(
            ProductSystem::new(vec![a, b], 1),
            Err(Error::PrimeCollision(3))
        ));
    }

    #[test]
    fn componentwise_maps_commute() {
        // One (5,2) component with a cyclic factor of coprime order 6.
        let comp = ToeplitzSystem::constant_word("a?b?c").unwrap();
        let (map, cert) = make_phi(&comp, 1).unwrap();
        assert!(cert.identity_checked);
        let sys = ProductSystem::new(
            vec![ToeplitzSystem::constant_word("a?b?c").unwrap()],
            6,
        )
        .unwrap();
        let rep = product_factor_commutes(&sys, &[map], 1, 100).unwrap();
        assert!(rep.commutes, "{}", rep.detail);

        let rep =
            product_factor_commutes(&sys, &[WindowMap::shift(1)], 0, 100).unwrap();
        assert!(rep.commutes);
    }

    #[test]
    fn swapping_disjoint_components_is_rejected() {
        let (sys, report) = realize_group(2, 1, EntropyMode::Zero).unwrap();
        assert_eq!(report.primes, vec![3, 5]);
        // Component 1 (5-adic, word a?bbb) runs three b's; component 0
        // (3-adic, word a?b) places an a in every third cell, so its b-runs
        // stop at two. The factor bbb witnesses that no endomorphism can
        // read coordinate 1 into coordinate 0.
        let rejected = mixing_rejection(&sys, 1, 0, 3, 200).unwrap();
        assert!(rejected.rejected);
        assert!(rejected.witness.is_some());
        let kept = mixing_rejection(&sys, 0, 0, 3, 200).unwrap();
        assert!(!kept.rejected, "a component's own factors are its language");
    }

    #[test]
    fn positive_mode_uses_power_scales() {
        let (sys, report) = realize_group(1, 1, EntropyMode::Positive).unwrap();
        assert_eq!(report.primes, vec![2]);
        let comp = &sys.components()[0];
        assert_eq!(comp.ladder_period(1).unwrap(), 8);
        assert_eq!(comp.ladder_period(2).unwrap(), 128);
        assert_eq!(sys.built_range(), Some((-128, 128)));

        let (sys, report) = realize_group(2, 1, EntropyMode::Positive).unwrap();
        assert_eq!(report.primes, vec![2, 3]);
        assert_eq!(sys.alphabet().len(), 16);
        // The 3-adic tower needs 9 and 27 where the 2-adic one took 8 and 16.
        let comp = &sys.components()[1];
        assert_eq!(comp.ladder_period(1).unwrap(), 9);
        assert_eq!(comp.ladder_period(2).unwrap(), 243);
        assert_eq!(sys.built_range(), Some((-128, 128)));

        // 4 letters per block component, times 35 digits: over the label cap.
        assert!(matches!(
            realize_group(2, 35, EntropyMode::Positive),
            Err(Error::InvalidSpec(_))
        ));
        // The single-hole components keep the same request representable.
        assert!(realize_group(2, 35, EntropyMode::Zero).is_ok());
    }

    #[test]
    fn tuple_alphabet_cap_is_enforced() {
        assert!(matches!(
            realize_group(8, 1, EntropyMode::Zero),
            Err(Error::InvalidSpec(_))
        ));
    }
}
