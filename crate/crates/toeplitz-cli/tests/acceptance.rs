//! End-to-end acceptance checks. Each test is one criterion; the test name is
//! the pass/fail line. Criteria carry wall-clock limits, asserted at the end
//! of each body, and print their measured time for inspection under
//! --nocapture.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toeplitz_core::{
    complexity_table, extensional_equal, factor_count, fill, fit_exponent, log_spaced, make_phi,
    powers_avoid_shifts, root_of_shift, theoretical_exponent, BlockSpec, BlockSystem, Cell,
    Scale, SequenceWindow, ToeplitzSystem, WindowMap,
};

const WORDS: [&str; 3] = ["a?b", "a?b?c", "ab?c?d"];

fn timed(name: &str, limit: Duration, body: impl FnOnce()) {
    let t0 = Instant::now();
    body();
    let dt = t0.elapsed();
    println!(
        "acceptance: {name}: PASS in {:.3}s (limit {:.0}s)",
        dt.as_secs_f64(),
        limit.as_secs_f64()
    );
    assert!(
        dt <= limit,
        "{name}: exceeded wall-clock limit {:.3}s > {:.0}s",
        dt.as_secs_f64(),
        limit.as_secs_f64()
    );
}

/// Filling the level-n pattern with the point's own hole contents must
/// reproduce the point exactly, over ranges of at least four periods.
#[test]
fn criterion_1_filling_fixes_the_constructed_point() {
    timed("criterion 1 (fill fixed point)", Duration::from_secs(1), || {
        for word in WORDS {
            let sys = ToeplitzSystem::constant_word(word).unwrap();
            for n in 1..=3u32 {
                let core = sys.structural_core(n).unwrap();
                let w = core.word();
                let p = core.period();
                let (s, e) = (-2 * p, 2 * p);
                let pattern = w.periodic_window(s - p, e + p).unwrap();
                let x = sys.window(s - p, e + p).unwrap();
                let contents = SequenceWindow::from_fn(
                    w.next_hole_rank(s),
                    w.next_hole_rank(e),
                    |k| Ok(x.get(w.hole_position(k)).unwrap()),
                )
                .unwrap();
                let filled = fill(&pattern, &contents, s, e).unwrap();
                let expect = sys.window(s, e).unwrap();
                assert!(!filled.has_holes(), "{word} level {n}: holes survived");
                assert_eq!(filled, expect, "{word} level {n}: fill is not the identity");
            }
        }
    });
}

/// Filling intertwines the shift actions: F(sigma^{q_n} y) = sigma^{p_n} F(y)
/// for arbitrary letter content y, not only for points of the subshift.
#[test]
fn criterion_2_filling_commutes_with_the_shifts() {
    timed("criterion 2 (fill commutation)", Duration::from_secs(1), || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0a9d_2215_c0de_0002);
        for word in WORDS {
            let sys = ToeplitzSystem::constant_word(word).unwrap();
            let letters = sys.alphabet().len() as u8;
            for n in 1..=3u32 {
                let core = sys.structural_core(n).unwrap();
                let p = core.period();
                let q = core.hole_count() as i64;
                let pattern = core.word().periodic_window(-3 * p, 3 * p).unwrap();
                for _ in 0..100 {
                    let cells: Vec<Cell> = (0..(6 * q + 8))
                        .map(|_| Cell::letter(rng.gen_range(0..letters)))
                        .collect();
                    let y = SequenceWindow::new(-(3 * q + 4), cells);
                    let lhs = fill(&pattern, &y.shifted(q), -p, p).unwrap();
                    let rhs = fill(&pattern, &y, 0, 2 * p).unwrap().shifted(p);
                    assert_eq!(lhs, rhs, "{word} level {n}: commutation failed");
                }
            }
        }
    });
}

/// The computed skeleton window must be the periodic extension of the level
/// word, and every hole class must carry an aperiodicity witness.
#[test]
fn criterion_3_skeletons_match_the_level_patterns_exactly() {
    timed("criterion 3 (skeleton grids)", Duration::from_secs(1), || {
        for word in WORDS {
            let sys = ToeplitzSystem::constant_word(word).unwrap();
            for n in 1..=3u32 {
                let core = sys.structural_core(n).unwrap();
                let p = core.period();
                let rep = sys.skeleton(n, -2 * p, 2 * p).unwrap();
                let expect = core.word().periodic_window(-2 * p, 2 * p).unwrap();
                assert_eq!(rep.window, expect, "{word} level {n}: skeleton mismatch");
                assert!(rep.exact, "{word} level {n}: skeleton not certified exact");
                assert!(rep.unresolved.is_empty());
            }
        }
    });
}

/// For the five-letter word with two holes: the level-n transport map phi_n
/// satisfies phi_n^{q^n} = sigma^{p^n}, and no smaller positive power of
/// phi_n equals any shift in the admissible range.
#[test]
fn criterion_4_transport_power_is_a_shift_and_no_smaller_power_is() {
    timed("criterion 4 (transport powers)", Duration::from_secs(60), || {
        let sys = ToeplitzSystem::constant_word("a?b?c").unwrap();
        for n in 1..=2u32 {
            let (phi, cert) = make_phi(&sys, n).unwrap();
            assert!(cert.identity_checked, "level {n}: defining equation not verified");
            let core = sys.structural_core(n).unwrap();
            let pn = core.period();
            let qn = core.hole_count() as u64;
            let eq = extensional_equal(&sys, &phi.pow(qn as u32), &WindowMap::shift(pn)).unwrap();
            assert!(eq.equal, "level {n}: phi^{qn} != sigma^{pn}, witness {:?}", eq.witness);
            let rep = powers_avoid_shifts(&sys, &phi, n, qn).unwrap();
            assert!(
                rep.collisions.is_empty(),
                "level {n}: lower power collided with a shift: {:?}",
                rep.collisions
            );
            assert!(rep.comparisons > 0);
        }
    });
}

/// Roots of the shift for the same system: sigma^{-b} phi_n^a is a q^n-th
/// root of sigma, with a p^n = b q^n + 1.
#[test]
fn criterion_5_explicit_roots_of_the_shift() {
    timed("criterion 5 (roots of shift)", Duration::from_secs(120), || {
        let sys = ToeplitzSystem::constant_word("a?b?c").unwrap();
        for (n, a, b, degree) in [(1u32, 1u64, 2i64, 2u64), (2, 1, 6, 4)] {
            let (_root, cert) = root_of_shift(&sys, n).unwrap();
            assert_eq!((cert.a, cert.b, cert.degree), (a, b, degree), "level {n}");
            assert!(cert.verified, "level {n}: root^degree != sigma");
            assert!(cert.equivalence.equal);
        }
    });
}

/// Complexity growth for the five-letter two-hole word: the fitted exponent
/// over certified lengths in [50, 600] brackets the predicted value, and the
/// certified counts pin finite constants c_1 <= c_2.
#[test]
fn criterion_6_complexity_exponent_bracketing() {
    timed("criterion 6 (complexity exponent)", Duration::from_secs(300), || {
        let sys = ToeplitzSystem::constant_word("a?b?c").unwrap();
        let lens = log_spaced(50, 600, 18);
        let table = complexity_table(&sys, &lens).unwrap();
        for row in &table.rows {
            assert!(row.certified, "length {} not certified", row.len);
        }
        let fit = fit_exponent(&table.rows, 50, 600).unwrap();
        assert!(
            (1.55..=1.95).contains(&fit.exponent),
            "fitted exponent {} outside [1.55, 1.95]",
            fit.exponent
        );
        let predicted = theoretical_exponent(5, 2).unwrap();
        assert!((1.55..=1.95).contains(&predicted));
        let c1 = table.c_lower.expect("no certified lower constant");
        let c2 = table.c_upper.expect("no certified upper constant");
        assert!(c1.is_finite() && c2.is_finite() && 0.0 < c1 && c1 <= c2);
    });
}

/// One hole per length-3 word keeps the language small: the exact factor
/// count at every ladder period p_n <= 3^6 is at most 2 p_n.
#[test]
fn criterion_7_single_hole_words_have_low_complexity() {
    timed("criterion 7 (low complexity)", Duration::from_secs(30), || {
        let sys = ToeplitzSystem::constant_word("a?b").unwrap();
        for n in 1..=6u32 {
            let len = 3usize.pow(n);
            let rep = factor_count(&sys, len).unwrap();
            assert!(rep.certified, "length {len} not certified");
            assert!(
                rep.count <= 2 * len as u64,
                "p_X({len}) = {} exceeds {}",
                rep.count,
                2 * len
            );
        }
    });
}

/// Odometer structure: torsion subgroups read off stabilized prime
/// multiplicities, and integer translations are minimal exactly when the
/// brute-force orbit at every depth is full.
#[test]
fn criterion_8_odometer_torsion_and_minimal_translations() {
    timed("criterion 8 (odometer algebra)", Duration::from_secs(1), || {
        let dyadic = Scale::powers(2, 10).unwrap().torsion_structure();
        assert!(dyadic.factors.is_empty(), "2^n scale must have no torsion");

        let primorial = Scale::primorial(5).unwrap().torsion_structure();
        let stable: Vec<(u64, u64)> = primorial
            .factors
            .iter()
            .map(|(p, o)| {
                (
                    u64::try_from(p).expect("small prime"),
                    u64::try_from(o).expect("small order"),
                )
            })
            .collect();
        assert_eq!(stable, vec![(2, 2), (3, 3), (5, 5)]);

        let tri = Scale::from_u64(&[3, 6, 12, 24, 48, 96])
            .unwrap()
            .torsion_structure();
        let stable: Vec<(u64, u64)> = tri
            .factors
            .iter()
            .map(|(p, o)| {
                (
                    u64::try_from(p).expect("small prime"),
                    u64::try_from(o).expect("small order"),
                )
            })
            .collect();
        assert_eq!(stable, vec![(3, 3)], "3 * 2^n scale must be Z_3 torsion");

        let ladders: [&[u64]; 4] = [
            &[2, 4, 8, 16, 32, 64],
            &[6, 12, 24],
            &[2, 6, 30],
            &[3, 6, 12, 24, 48],
        ];
        for periods in ladders {
            let scale = Scale::from_u64(periods).unwrap();
            let deepest = *periods.last().unwrap();
            assert!(deepest <= 64);
            for m in 1..=deepest {
                let minimal = scale.is_minimal_translation(&BigInt::from(m));
                let full_orbit = periods.iter().all(|&p| {
                    let mut seen = vec![false; p as usize];
                    let mut x = 0u64;
                    let mut size = 0u64;
                    while !seen[x as usize] {
                        seen[x as usize] = true;
                        size += 1;
                        x = (x + m) % p;
                    }
                    size == p
                });
                assert_eq!(
                    minimal, full_orbit,
                    "translation by {m} on {periods:?}: report and orbit disagree"
                );
            }
        }
    });
}

/// Block towers: the inheritance rules hold letter-exactly, blocks never
/// overlap themselves nontrivially, counts at least double per level,
/// whole-period frequencies equal the predicted rationals exactly, and the
/// entropy floor responds to the alphabet.
#[test]
fn criterion_9_block_towers_certify_structure_and_frequencies() {
    timed("criterion 9 (block towers)", Duration::from_secs(120), || {
        let sys = BlockSystem::new(BlockSpec::toy(4, 3)).unwrap();
        let k: Vec<u64> = sys
            .level_reports()
            .iter()
            .map(|r| u64::try_from(r.k.as_ref().expect("toy counts are explicit")).unwrap())
            .collect();
        assert_eq!(k, vec![4, 8, 16]);
        for (i, &kn) in k.iter().enumerate() {
            let floor = 4u64 << i;
            assert!(kn >= floor, "level {}: {kn} blocks under the doubling floor {floor}", i + 1);
        }
        for n in 2..=3 {
            let c = sys.verify_c1_c2(n).unwrap();
            assert!(c.affixes_ok, "level {n}: prefix/suffix violated");
            assert_eq!(c.multiplicities_ok, Some(true), "level {n}: middle recount failed");
            assert!(c.initial_absent_ok, "level {n}: initial block occurs in a middle");
            let o = sys.check_trivial_overlap(n).unwrap();
            assert!(o.ok, "level {n}: overlap witness {:?}", o.witness);
        }

        // Letter frequencies over whole periods: 1/p_2 for the initial
        // letter, (1 + d_1)/p_2 = 2/8 for every other non-filler letter, the
        // filler absorbing the rest. Exact as rationals, zero deviation.
        let freq = sys.frequencies(1, 240).unwrap();
        assert_eq!(freq.exact, Some(true));
        assert_eq!(freq.max_deviation, Some(0.0));
        let emp: Vec<String> = freq.rows.iter().map(|r| r.empirical.to_string()).collect();
        assert_eq!(emp, vec!["1/8", "3/8", "1/4", "1/4"]);
        for row in &freq.rows {
            assert_eq!(
                row.predicted.as_ref().map(|p| p.to_string()),
                Some(row.empirical.to_string()),
                "letter {} deviates from the predicted rational",
                row.index
            );
        }

        // Level-2 block frequencies need ten level-3 periods of room; the
        // four-level sibling materializes them. All frequencies land on the
        // level-3 grid: denominators divide p_3 = 120.
        let deep = BlockSystem::new(BlockSpec::toy(4, 4)).unwrap();
        let freq2 = deep.frequencies(2, 1200).unwrap();
        assert_eq!(freq2.exact, Some(true));
        assert_eq!(freq2.max_deviation, Some(0.0));
        assert_eq!(freq2.rows.len(), 8);
        for row in &freq2.rows {
            let emp = row.empirical.to_string();
            assert_eq!(
                row.predicted.as_ref().map(|p| p.to_string()),
                Some(emp.clone()),
                "block {} deviates from the predicted rational",
                row.index
            );
            let denom: u64 = emp
                .split_once('/')
                .map(|(_, d)| d.parse().expect("rational denominator"))
                .unwrap_or(1);
            assert_eq!(120 % denom, 0, "block {}: frequency {emp} off the period grid", row.index);
        }

        // Entropy floor: the density bound grows with the alphabet, and the
        // materialized levels really exhibit at least k_n distinct factors
        // of length p_n, witnessing log k_n / p_n.
        let mut last = 0.0;
        for k1 in [4u64, 6, 8] {
            let e = BlockSystem::new(BlockSpec::toy(k1, 3))
                .unwrap()
                .entropy_lower_bound(3)
                .unwrap();
            assert!(
                e.max_density > last,
                "k1 = {k1}: density bound {} failed to grow past {last}",
                e.max_density
            );
            last = e.max_density;
        }
        for (len, kn) in [(8usize, 8u64), (120, 16)] {
            let c = deep.empirical_complexity(len).unwrap();
            assert!(c >= kn, "{c} factors of length {len}, needed {kn}");
        }
    });
}

/// The verification pipeline is deterministic: identical invocations emit
/// byte-identical console output and report files.
#[test]
fn criterion_10_verification_reports_are_reproducible() {
    timed("criterion 10 (deterministic reports)", Duration::from_secs(60), || {
        let bin = env!("CARGO_BIN_EXE_toeplitz");
        let dir = tempfile::tempdir().unwrap();
        let mut runs = Vec::new();
        for i in 0..2 {
            let report = dir.path().join(format!("report-{i}.json"));
            let out = std::process::Command::new(bin)
                .args(["verify-all", "--word", "a?b?c", "--levels", "2", "--report"])
                .arg(&report)
                .output()
                .expect("binary runs");
            assert!(
                out.status.success(),
                "verify-all failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            runs.push((out.stdout, std::fs::read(&report).expect("report written")));
        }
        assert!(!runs[0].0.is_empty() && !runs[0].1.is_empty());
        assert_eq!(runs[0].0, runs[1].0, "console output differs between runs");
        assert_eq!(runs[0].1, runs[1].1, "report files differ between runs");
    });
}
