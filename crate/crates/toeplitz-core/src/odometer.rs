//! Odometers presented by a finite truncation of a divisibility chain
//! p_1 | p_2 | ... | p_N.
//!
//! Elements are compatible residue chains; group operations act
//! coordinatewise. Everything that depends on the infinite tail of the chain
//! (multiplicity limits, torsion) is reported with an explicit stabilization
//! flag instead of a guess: a valuation is `stabilized` when it is constant
//! over the last half of the truncated chain.

use crate::error::{Error, Result};
use crate::numtheory;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// A finite truncation (p_1, ..., p_N) of a scale: p_n >= 1 and p_n | p_{n+1}.
/// A single entry, even p_1 = 1, is allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scale {
    periods: Vec<BigUint>,
}

impl Scale {
    pub fn new(periods: Vec<BigUint>) -> Result<Scale> {
        if periods.is_empty() {
            return Err(Error::InvalidScale("scale is empty".into()));
        }
        for (i, p) in periods.iter().enumerate() {
            if p.is_zero() {
                return Err(Error::InvalidScale(format!("p_{} = 0", i + 1)));
            }
            if i > 0 && !(p % &periods[i - 1]).is_zero() {
                return Err(Error::InvalidScale(format!(
                    "p_{} = {} does not divide p_{} = {}",
                    i,
                    periods[i - 1],
                    i + 1,
                    p
                )));
            }
        }
        Ok(Scale { periods })
    }

    pub fn from_u64(periods: &[u64]) -> Result<Scale> {
        Scale::new(periods.iter().map(|&p| BigUint::from(p)).collect())
    }

    /// Geometric scale (b, b^2, ..., b^depth).
    pub fn powers(base: u64, depth: usize) -> Result<Scale> {
        if base == 0 || depth == 0 {
            return Err(Error::InvalidScale("powers() needs base, depth >= 1".into()));
        }
        let b = BigUint::from(base);
        let mut periods = Vec::with_capacity(depth);
        let mut cur = b.clone();
        for _ in 0..depth {
            periods.push(cur.clone());
            cur *= &b;
        }
        Scale::new(periods)
    }

    /// Factorial scale (1!, 2!, ..., depth!), the universal odometer
    /// truncation.
    pub fn factorial(depth: usize) -> Result<Scale> {
        if depth == 0 {
            return Err(Error::InvalidScale("factorial() needs depth >= 1".into()));
        }
        let mut periods = Vec::with_capacity(depth);
        let mut cur = BigUint::one();
        for n in 1..=depth {
            cur *= BigUint::from(n as u64);
            periods.push(cur.clone());
        }
        Scale::new(periods)
    }

    /// Primorial scale (2, 2*3, 2*3*5, ...): product of the first n primes.
    pub fn primorial(depth: usize) -> Result<Scale> {
        if depth == 0 {
            return Err(Error::InvalidScale("primorial() needs depth >= 1".into()));
        }
        let primes = numtheory::primes_avoiding(depth, &BigUint::one());
        let mut periods = Vec::with_capacity(depth);
        let mut cur = BigUint::one();
        for p in primes {
            cur *= BigUint::from(p);
            periods.push(cur.clone());
        }
        Scale::new(periods)
    }

    pub fn depth(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[BigUint] {
        &self.periods
    }

    pub fn period(&self, level: usize) -> &BigUint {
        &self.periods[level]
    }

    pub fn last(&self) -> &BigUint {
        self.periods.last().expect("scale is nonempty")
    }

    /// JSON form: an array of decimal strings, e.g. ["2","6","12"].
    pub fn to_json(&self) -> String {
        let strings: Vec<String> = self.periods.iter().map(|p| p.to_string()).collect();
        serde_json::to_string(&strings).expect("string array serializes")
    }

    pub fn from_json(text: &str) -> Result<Scale> {
        let strings: Vec<String> = serde_json::from_str(text)
            .map_err(|e| Error::InvalidScale(format!("bad scale JSON: {e}")))?;
        let mut periods = Vec::with_capacity(strings.len());
        for s in &strings {
            let p = s
                .parse::<BigUint>()
                .map_err(|_| Error::InvalidScale(format!("bad integer {s:?}")))?;
            periods.push(p);
        }
        Scale::new(periods)
    }

    /// The element k * 1 (residues k mod p_n).
    pub fn integer_element(&self, k: &BigInt) -> OdometerElement {
        let residues = self
            .periods
            .iter()
            .map(|p| {
                let m = BigInt::from(p.clone());
                k.mod_floor(&m).to_biguint().expect("mod_floor >= 0")
            })
            .collect();
        OdometerElement {
            scale: self.clone(),
            residues,
        }
    }

    pub fn zero(&self) -> OdometerElement {
        self.integer_element(&BigInt::zero())
    }

    /// Translation by `m` acts minimally iff gcd(m, p_n) = 1 for every level.
    /// Cross-checked against explicit orbits at every level small enough to
    /// walk.
    pub fn is_minimal_translation(&self, m: &BigInt) -> bool {
        let coprime = self
            .periods
            .iter()
            .all(|p| m.gcd(&BigInt::from(p.clone())).is_one() || p.is_one());
        const WALK_CAP: u64 = 1 << 16;
        for p in &self.periods {
            let Some(pu) = p.to_u64() else { continue };
            if pu > WALK_CAP {
                continue;
            }
            let step = m.mod_floor(&BigInt::from(pu)).to_u64().expect("reduced");
            let level_coprime = m.gcd(&BigInt::from(pu)).is_one() || pu == 1;
            debug_assert_eq!(orbit_len(step, pu) == pu, level_coprime);
        }
        coprime
    }

    /// Per-prime multiplicity profile of the truncated chain.
    pub fn multiplicity(&self) -> MultiplicityReport {
        let mut profiles: BTreeMap<BigUint, Vec<u32>> = BTreeMap::new();
        let mut running: BTreeMap<BigUint, u32> = BTreeMap::new();
        let mut prev = BigUint::one();
        for (n, p) in self.periods.iter().enumerate() {
            let quotient = p / &prev;
            for (prime, e) in numtheory::factorize(&quotient) {
                *running.entry(prime).or_insert(0) += e;
            }
            for (prime, &v) in &running {
                let profile = profiles.entry(prime.clone()).or_insert_with(Vec::new);
                while profile.len() < n {
                    profile.push(0);
                }
                profile.push(v);
            }
            prev = p.clone();
        }
        let depth = self.depth();
        for profile in profiles.values_mut() {
            while profile.len() < depth {
                profile.push(0);
            }
        }
        let entries = profiles
            .into_iter()
            .map(|(prime, profile)| {
                let tail = depth - depth.div_ceil(2);
                let stabilized = profile[tail..].iter().all(|&v| v == profile[depth - 1]);
                (
                    prime,
                    Multiplicity {
                        value: profile[depth - 1],
                        stabilized,
                        profile,
                    },
                )
            })
            .collect();
        MultiplicityReport { entries }
    }

    /// Torsion subgroup of the quotient by the integers, as far as the
    /// truncation certifies it: one cyclic factor of order prime^k for every
    /// prime whose multiplicity stabilized at finite k >= 1. Primes still
    /// growing at the truncation depth are reported unresolved.
    pub fn torsion_structure(&self) -> TorsionReport {
        let report = self.multiplicity();
        let mut factors = Vec::new();
        let mut unresolved = Vec::new();
        for (prime, m) in &report.entries {
            if m.stabilized {
                if m.value >= 1 {
                    factors.push((prime.clone(), prime.pow(m.value)));
                }
            } else {
                unresolved.push(prime.clone());
            }
        }
        TorsionReport {
            factors,
            unresolved,
        }
    }
}

fn orbit_len(step: u64, modulus: u64) -> u64 {
    let mut x = step % modulus;
    let mut len = 1;
    while x != 0 {
        x = (x + step) % modulus;
        len += 1;
    }
    len
}

/// One element of the truncated odometer: residues x_n mod p_n with
/// x_{n+1} = x_n (mod p_n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdometerElement {
    scale: Scale,
    residues: Vec<BigUint>,
}

impl OdometerElement {
    pub fn new(scale: Scale, residues: Vec<BigUint>) -> Result<OdometerElement> {
        if residues.len() != scale.depth() {
            return Err(Error::ScaleMismatch(format!(
                "{} residues for depth {}",
                residues.len(),
                scale.depth()
            )));
        }
        for (n, r) in residues.iter().enumerate() {
            if r >= scale.period(n) {
                return Err(Error::InvalidScale(format!(
                    "residue {} out of range mod {}",
                    r,
                    scale.period(n)
                )));
            }
            if n > 0 && &(r % scale.period(n - 1)) != &residues[n - 1] {
                return Err(Error::ScaleMismatch(format!(
                    "residues at levels {} and {} incompatible",
                    n,
                    n + 1
                )));
            }
        }
        Ok(OdometerElement { scale, residues })
    }

    pub fn from_u64(scale: Scale, residues: &[u64]) -> Result<OdometerElement> {
        OdometerElement::new(scale, residues.iter().map(|&r| BigUint::from(r)).collect())
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn residues(&self) -> &[BigUint] {
        &self.residues
    }

    pub fn add(&self, other: &OdometerElement) -> Result<OdometerElement> {
        if self.scale != other.scale {
            return Err(Error::ScaleMismatch(
                "elements live on different scales".into(),
            ));
        }
        let residues = self
            .residues
            .iter()
            .zip(&other.residues)
            .zip(self.scale.periods())
            .map(|((a, b), p)| (a + b) % p)
            .collect();
        Ok(OdometerElement {
            scale: self.scale.clone(),
            residues,
        })
    }

    pub fn neg(&self) -> OdometerElement {
        let residues = self
            .residues
            .iter()
            .zip(self.scale.periods())
            .map(|(a, p)| if a.is_zero() { a.clone() } else { p - a })
            .collect();
        OdometerElement {
            scale: self.scale.clone(),
            residues,
        }
    }

    pub fn scalar_mul(&self, k: &BigInt) -> OdometerElement {
        let residues = self
            .residues
            .iter()
            .zip(self.scale.periods())
            .map(|(a, p)| {
                let m = BigInt::from(p.clone());
                (BigInt::from(a.clone()) * k)
                    .mod_floor(&m)
                    .to_biguint()
                    .expect("mod_floor >= 0")
            })
            .collect();
        OdometerElement {
            scale: self.scale.clone(),
            residues,
        }
    }

    /// Smallest ell in [1, cap] such that ell * g is within `shift_bound` of
    /// an integer translation at the deepest level: the balanced residue r of
    /// ell * g_N mod p_N satisfies |r| <= shift_bound. Returns (ell, r).
    ///
    /// At any finite level every element is an integer multiple of 1, so the
    /// naive order is always 1; bounding the translation is what makes the
    /// question meaningful for a truncation. A sliding map of radius <= B
    /// composed with itself ell times can only land on translations with
    /// |r| <= ell * B, which is the bound callers pass in.
    pub fn order_mod_integers(&self, shift_bound: &BigUint, cap: u64) -> OrderResult {
        let p_n = self.scale.last();
        let g = self.residues.last().expect("nonempty scale");
        let mut acc = BigUint::zero();
        for ell in 1..=cap {
            acc = (&acc + g) % p_n;
            let balanced = balanced_residue(&acc, p_n);
            if balanced.magnitude() <= shift_bound {
                return OrderResult::Finite {
                    order: ell,
                    shift: balanced,
                };
            }
        }
        OrderResult::UnresolvedAtDepth { cap }
    }
}

fn balanced_residue(v: &BigUint, modulus: &BigUint) -> BigInt {
    let double = v << 1;
    if &double <= modulus {
        BigInt::from(v.clone())
    } else {
        BigInt::from(v.clone()) - BigInt::from(modulus.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderResult {
    Finite { order: u64, shift: BigInt },
    UnresolvedAtDepth { cap: u64 },
}

/// Multiplicity of one prime in the chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiplicity {
    /// Valuation v_p(p_N) at the truncation depth.
    pub value: u32,
    /// Constant over the last half of the chain; only stabilized values are
    /// evidence about the limit.
    pub stabilized: bool,
    /// v_p(p_n) for n = 1..N; nondecreasing.
    pub profile: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityReport {
    /// Keyed by prime; contains every prime dividing some p_n.
    pub entries: BTreeMap<BigUint, Multiplicity>,
}

impl MultiplicityReport {
    pub fn get(&self, prime: u64) -> Option<&Multiplicity> {
        self.entries.get(&BigUint::from(prime))
    }

    pub fn to_json(&self) -> String {
        let mut map = BTreeMap::new();
        for (prime, m) in &self.entries {
            map.insert(
                prime.to_string(),
                serde_json::json!({
                    "value": m.value,
                    "stabilized": m.stabilized,
                    "profile": m.profile,
                }),
            );
        }
        serde_json::to_string_pretty(&map).expect("report serializes")
    }
}

impl fmt::Display for MultiplicityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (prime, m) in &self.entries {
            writeln!(
                f,
                "v_{prime} = {}{}",
                m.value,
                if m.stabilized {
                    " (stabilized)"
                } else {
                    " (still growing)"
                }
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionReport {
    /// (prime, cyclic order prime^k) for stabilized positive multiplicities.
    pub factors: Vec<(BigUint, BigUint)>,
    /// Primes whose multiplicity was still growing at the truncation depth.
    pub unresolved: Vec<BigUint>,
}

impl TorsionReport {
    pub fn is_torsion_free_certified(&self) -> bool {
        self.factors.is_empty() && self.unresolved.is_empty()
    }
}
