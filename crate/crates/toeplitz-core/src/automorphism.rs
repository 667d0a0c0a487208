//! Construction and certification of the level automorphisms.
//!
//! The level-n automorphism fixes the letters of the level pattern and moves
//! each hole content to the previous hole (every hole takes the content of
//! the next hole to its right). `make_phi` builds it as a sliding map with a
//! certified phase length, and validates the sliding rule against the
//! defining equation on a stabilized window: the image of the point must be
//! the level pattern refilled with the hole contents shifted by one rank.
//! Composites are compared with `extensional_equal`, which applies both maps
//! to one window that provably exhibits every factor of the relevant length
//! (up to the enumeration stopping rule, which the report carries).

use crate::error::{Error, Result};
use crate::holewords::{fill, SequenceWindow};
use crate::language;
use crate::numtheory::mod_inverse;
use crate::odometer::OdometerElement;
use crate::system::ToeplitzSystem;
use crate::window_map::{first_disagreement, PhiRule, WindowMap};
use crate::alphabet::Cell;
use num_bigint::BigUint;
use std::sync::Arc;

/// Evidence attached to a constructed transport map.
#[derive(Clone, Debug)]
pub struct PhiCertificate {
    pub level: u32,
    pub period: i64,
    /// Window length from which the phase is always unique, measured on the
    /// stabilized window.
    pub phase_len: i64,
    pub radius: i64,
    /// Sliding rule reproduced the defining equation on the whole window.
    pub identity_checked: bool,
    pub identity_cells: u64,
    /// Distinct factors at the certification length.
    pub factors_tested: u64,
    pub certification: String,
}

/// Outcome of comparing two sliding maps on a stabilized window.
#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub equal: bool,
    /// Coordinate of the first disagreement, when not equal. This direction
    /// is unconditional: the outputs are genuine image windows.
    pub witness: Option<i64>,
    pub compared_cells: u64,
    pub tested_len: i64,
    pub certification: String,
}

/// Minimal window length from which no strict subwindow of the stabilized
/// window is consistent with a second phase. Edge stretches of the window
/// count as ambiguous, which can only overestimate.
fn minimal_phase_len(pattern: &[Cell], win: &SequenceWindow) -> i64 {
    let period = pattern.len() as i64;
    let (s, e) = (win.start(), win.end());
    let mut lambda: i64 = 1;
    for mu in 1..period {
        let mut last = s - 1;
        let mut max_free: i64 = 0;
        for i in s..e {
            let t = (i + mu).rem_euclid(period) as usize;
            let pat = pattern[t];
            if !pat.is_hole() && win.get(i).expect("in range") != pat {
                max_free = max_free.max(i - last - 1);
                last = i;
            }
        }
        max_free = max_free.max(e - last - 1);
        lambda = lambda.max(max_free + 1);
    }
    lambda
}

/// Builds the level-n transport map with a certified phase length and
/// validates it against the defining equation.
pub fn make_phi(sys: &ToeplitzSystem, n: u32) -> Result<(WindowMap, PhiCertificate)> {
    let core = sys.structural_core(n)?;
    let word = core.word();
    if word.hole_count() == 0 {
        return Err(Error::InvalidWord(format!(
            "level {n} has no holes; the transport map needs at least one"
        )));
    }
    let period = core.period();
    let max_gap = word.max_hole_gap().expect("has holes");

    // Grow a stabilized window, compute the phase length on it, and repeat
    // if the certification length overtakes the window.
    let mut target = (3 * period + 2 * max_gap + 1) as usize;
    let mut tries = 0;
    let (master, phase_len) = loop {
        let master = language::master_window(sys, target)?;
        let lambda = minimal_phase_len(word.cells(), &master.window);
        if lambda <= target as i64 {
            break (master, lambda);
        }
        tries += 1;
        if tries > 4 {
            return Err(Error::ParamsTooTight(format!(
                "phase never became unique at level {n}: needed {lambda}, window {target}"
            )));
        }
        target = lambda as usize;
    };

    let rule = Arc::new(PhiRule::new(n, word.cells().to_vec(), phase_len)?);
    let map = WindowMap::phi(rule).with_label(format!("phi_{n}"));

    // Defining equation on the stabilized window: the image is the level
    // pattern with hole rank j refilled by the content of hole rank j + 1.
    // The comparison range keeps a period of margin inside the output so
    // every transported content stays within the window.
    let out = map.apply(&master.window)?;
    let (val_s, val_e) = (out.start() + 2 * period, out.end() - 2 * period);
    if val_e <= val_s {
        return Err(Error::WindowTooShort {
            missing_start: val_s,
            missing_end: val_s + 1,
        });
    }
    let pattern_win = word.periodic_window(val_s.min(0) - period, val_e.max(0) + period)?;
    let r_lo = word.next_hole_rank(val_s);
    let r_hi = word.next_hole_rank(val_e);
    let contents = SequenceWindow::from_fn(r_lo, r_hi, |j| {
        master
            .window
            .get(word.hole_position(j + 1))
            .ok_or(Error::WindowTooShort {
                missing_start: word.hole_position(j + 1),
                missing_end: word.hole_position(j + 1) + 1,
            })
    })?;
    let direct = fill(&pattern_win, &contents, val_s, val_e)?;
    let (overlap, mismatch) = first_disagreement(&out, &direct);
    if let Some(at) = mismatch {
        return Err(Error::InvalidWord(format!(
            "transport rule contradicts the defining equation at {at} (level {n})"
        )));
    }

    let factors_tested = language::factor_count(sys, phase_len as usize)?.count;
    let cert = PhiCertificate {
        level: n,
        period,
        phase_len,
        radius: map.radius(),
        identity_checked: true,
        identity_cells: overlap as u64,
        factors_tested,
        certification: master.certification,
    };
    Ok((map, cert))
}

fn equal_on_window(
    window: &SequenceWindow,
    certification: &str,
    f: &WindowMap,
    g: &WindowMap,
) -> Result<EquivalenceReport> {
    let tested_len = 2 * f.radius().max(g.radius()) + 1;
    let out_f = f.apply(window)?;
    let out_g = g.apply(window)?;
    let (overlap, mismatch) = first_disagreement(&out_f, &out_g);
    if overlap < tested_len {
        return Err(Error::WindowTooShort {
            missing_start: out_f.start().max(out_g.start()),
            missing_end: out_f.start().max(out_g.start()) + tested_len,
        });
    }
    Ok(EquivalenceReport {
        equal: mismatch.is_none(),
        witness: mismatch,
        compared_cells: overlap as u64,
        tested_len,
        certification: certification.to_string(),
    })
}

/// Compares two sliding maps on a window stabilized at length
/// 2 * max(radius) + 1. Disagreement is witnessed unconditionally; agreement
/// holds for every point whose factors the window exhibits, per the
/// enumeration stopping rule recorded in the report.
pub fn extensional_equal(
    sys: &ToeplitzSystem,
    f: &WindowMap,
    g: &WindowMap,
) -> Result<EquivalenceReport> {
    let radius = f.radius().max(g.radius());
    let tested_len = 2 * radius + 1;
    let needed = tested_len.max(f.required_len()).max(g.required_len());
    let master = language::master_window(sys, needed as usize)?;
    equal_on_window(&master.window, &master.certification, f, g)
}

/// Per-power distinctness of the transport map from every nearby shift
/// power. For each 1 <= l < power_cap, the l-th power is compared with
/// sigma^k for |k| <= l * period / holes + slack.
#[derive(Clone, Debug)]
pub struct DistinctnessReport {
    pub level: u32,
    pub power_cap: u64,
    pub comparisons: u64,
    /// Pairs (l, k) whose comparison failed to produce a witness.
    pub collisions: Vec<(u64, i64)>,
}

pub fn powers_avoid_shifts(
    sys: &ToeplitzSystem,
    phi: &WindowMap,
    n: u32,
    power_cap: u64,
) -> Result<DistinctnessReport> {
    let core = sys.structural_core(n)?;
    let period = core.period();
    let holes = core.hole_count() as i64;
    // One window serves every comparison: size it for the largest power
    // against the farthest shift.
    let max_power = (power_cap.max(2) - 1) as u32;
    let k_max_overall = (max_power as i64) * period / holes + 1;
    let worst = phi
        .pow(max_power)
        .radius()
        .max(k_max_overall);
    let needed = (2 * worst + 1).max(phi.pow(max_power).required_len());
    let master = language::master_window(sys, needed as usize)?;
    let mut comparisons = 0;
    let mut collisions = Vec::new();
    for l in 1..power_cap {
        let f = phi.pow(l as u32);
        let k_max = (l as i64) * period / holes + 1;
        for k in -k_max..=k_max {
            let report =
                equal_on_window(&master.window, &master.certification, &f, &WindowMap::shift(k))?;
            comparisons += 1;
            if report.equal {
                collisions.push((l, k));
            }
        }
    }
    Ok(DistinctnessReport {
        level: n,
        power_cap,
        comparisons,
        collisions,
    })
}

/// A root of the shift with its verification.
#[derive(Clone, Debug)]
pub struct RootCertificate {
    pub level: u32,
    /// Exponent of the transport map: a * p^n = b * q^n + 1.
    pub a: u64,
    pub b: i64,
    pub degree: u64,
    pub verified: bool,
    pub equivalence: EquivalenceReport,
}

/// Builds a q^n-th root of the shift as (transport map)^a . sigma^{-b}, with
/// a p^n = b q^n + 1, and verifies its q^n-th power equals the shift.
pub fn root_of_shift(sys: &ToeplitzSystem, n: u32) -> Result<(WindowMap, RootCertificate)> {
    let core = sys.structural_core(n)?;
    let p = core.period() as u64;
    let holes = core.hole_count() as u64;
    // The exponent arithmetic decides existence; settle it before paying for
    // the transport map construction.
    let (a, b) = if holes == 1 {
        (1u64, (p - 1) as i64)
    } else {
        let a = mod_inverse(p % holes, holes).ok_or(Error::NotCoprime {
            p: p as u64,
            q: holes,
        })?;
        let a = if a == 0 { holes } else { a };
        let b = ((a as i64) * (p as i64) - 1) / holes as i64;
        (a, b)
    };
    debug_assert_eq!((a as i64) * (p as i64), b * holes as i64 + 1);
    let (phi, _) = make_phi(sys, n)?;
    let root = WindowMap::shift(-b)
        .then(&phi.pow(a as u32))
        .with_label(format!("root_{n}"));
    let degree = holes;
    let equivalence = extensional_equal(sys, &root.pow(degree as u32), &WindowMap::shift(1))?;
    let verified = equivalence.equal;
    Ok((
        root,
        RootCertificate {
            level: n,
            a,
            b,
            degree,
            verified,
            equivalence,
        },
    ))
}

/// The image of the level-n transport map in the odometer: the translation
/// gamma with (number of holes per period) * gamma = period, computed to
/// `depth` levels of the period scale. Requires the hole count coprime to
/// the period.
pub fn phi_odometer_image(sys: &ToeplitzSystem, n: u32, depth: u32) -> Result<OdometerElement> {
    let core = sys.structural_core(n)?;
    let p_n = core.period() as u64;
    let q_n = core.hole_count() as u64;
    let scale = sys.periodic_structure(depth)?;
    let mut residues = Vec::new();
    for level in 0..scale.depth() {
        let modulus = scale.period(level);
        let m_u64: u64 = modulus
            .try_into()
            .map_err(|_| Error::Overflow("odometer image level"))?;
        let inv = mod_inverse(q_n % m_u64, m_u64).ok_or(Error::NotCoprime { p: p_n, q: q_n })?;
        let gamma = ((p_n % m_u64) as u128 * inv as u128 % m_u64 as u128) as u64;
        residues.push(BigUint::from(gamma));
    }
    OdometerElement::new(scale, residues)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pq(word: &str) -> ToeplitzSystem {
        ToeplitzSystem::constant_word(word).unwrap()
    }

    #[test]
    fn make_phi_certifies_and_validates() {
        let sys = pq("a?b?c");
        let (map, cert) = make_phi(&sys, 1).unwrap();
        assert!(cert.identity_checked);
        assert!(cert.phase_len >= 3, "phase length {}", cert.phase_len);
        assert!(cert.phase_len <= 3 * cert.period);
        assert!(cert.factors_tested > 0);
        assert_eq!(cert.level, 1);
        assert!(map.radius() >= cert.phase_len / 2);
    }

    #[test]
    fn transport_power_equals_period_shift() {
        // p = 5, q = 2 at level 1: phi^2 = sigma^5.
        let sys = pq("a?b?c");
        let (phi, _) = make_phi(&sys, 1).unwrap();
        let report = extensional_equal(&sys, &phi.pow(2), &WindowMap::shift(5)).unwrap();
        assert!(report.equal, "witness at {:?}", report.witness);

        // Single hole: phi itself is the period shift.
        let sys = pq("a?b");
        let (phi, _) = make_phi(&sys, 1).unwrap();
        let report = extensional_equal(&sys, &phi, &WindowMap::shift(3)).unwrap();
        assert!(report.equal);
        // And at level 2: phi_2 = sigma^9.
        let (phi2, _) = make_phi(&sys, 2).unwrap();
        let report = extensional_equal(&sys, &phi2, &WindowMap::shift(9)).unwrap();
        assert!(report.equal);
    }

    #[test]
    fn transport_avoids_intermediate_shifts() {
        let sys = pq("a?b?c");
        let (phi, _) = make_phi(&sys, 1).unwrap();
        let report = powers_avoid_shifts(&sys, &phi, 1, 2).unwrap();
        assert!(report.collisions.is_empty(), "{:?}", report.collisions);
        assert!(report.comparisons >= 7);
    }

    #[test]
    fn extensional_disagreement_has_witness() {
        let sys = pq("a?b?c");
        let report =
            extensional_equal(&sys, &WindowMap::shift(1), &WindowMap::shift(2)).unwrap();
        assert!(!report.equal);
        assert!(report.witness.is_some());
    }

    #[test]
    fn square_root_of_shift_at_level_one() {
        // 1 * 5 = 2 * 2 + 1: psi = phi . sigma^{-2}, psi^2 = sigma.
        let sys = pq("a?b?c");
        let (_, cert) = root_of_shift(&sys, 1).unwrap();
        assert_eq!((cert.a, cert.b, cert.degree), (1, 2, 2));
        assert!(cert.verified, "witness {:?}", cert.equivalence.witness);
    }

    #[test]
    fn trivial_root_for_single_hole() {
        // q^n = 1: the root is sigma itself, via a = 1, b = p - 1.
        let sys = pq("a?b");
        let (_, cert) = root_of_shift(&sys, 1).unwrap();
        assert_eq!((cert.a, cert.b, cert.degree), (1, 2, 1));
        assert!(cert.verified);
    }

    #[test]
    fn odometer_image_residues() {
        let sys = pq("a?b?c");
        let g = phi_odometer_image(&sys, 1, 2).unwrap();
        let residues: Vec<u64> = g
            .residues()
            .iter()
            .map(|r| r.try_into().unwrap())
            .collect();
        assert_eq!(residues, vec![0, 15]);

        let g = phi_odometer_image(&sys, 2, 4).unwrap();
        let residues: Vec<u64> = g
            .residues()
            .iter()
            .map(|r| r.try_into().unwrap())
            .collect();
        assert_eq!(residues, vec![0, 0, 100, 475]);
    }

    #[test]
    fn odometer_image_order_matches_transport_relation() {
        use crate::odometer::OrderResult;
        // q^n * gamma = p^n: the smallest multiple of gamma landing within
        // p^n of zero is the q^n-th, mirroring phi^{q^n} = sigma^{p^n}.
        let sys = pq("a?b?c");
        for (n, expected_order, expected_shift) in [(1u32, 2u64, 5i64), (2, 4, 25)] {
            let g = phi_odometer_image(&sys, n, 6).unwrap();
            match g.order_mod_integers(&BigUint::from(5u64.pow(n)), 1 << 12) {
                OrderResult::Finite { order, shift } => {
                    assert_eq!(order, expected_order, "level {n}");
                    assert_eq!(shift, expected_shift.into(), "level {n}");
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn non_coprime_transport_still_satisfies_relation() {
        // p = 6, q = 2: phi^{q^n} = sigma^{p^n} holds at level 1 even
        // without coprimality; only the odometer image is unavailable.
        let sys = pq("ab?c?d");
        let (phi, _) = make_phi(&sys, 1).unwrap();
        let report = extensional_equal(&sys, &phi.pow(2), &WindowMap::shift(6)).unwrap();
        assert!(report.equal, "witness at {:?}", report.witness);
        assert!(phi_odometer_image(&sys, 1, 3).is_err());
    }
}
