//! Small number-theoretic helpers: extended gcd, modular inverses, primality,
//! and factorization of scale entries.
//!
//! Scale entries are arbitrary-precision, so factorization combines trial
//! division, deterministic Miller-Rabin for anything that fits in 64 bits,
//! probabilistic Miller-Rabin with fixed bases above that, and Pollard's rho
//! with Brent cycle detection. Everything is deterministic: fixed bases,
//! fixed rho parameters.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Extended gcd: returns (g, s, t) with s*a + t*b = g.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, s, t) = ext_gcd(b, a % b);
        (g, t, s - (a / b) * t)
    }
}

/// Inverse of `a` modulo `m` (m >= 1), if gcd(a, m) = 1.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (g, s, _) = ext_gcd(a as i128, m as i128);
    if g != 1 {
        return None;
    }
    Some(s.rem_euclid(m as i128) as u64)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64 (the standard 7-base certificate).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn is_prime_big(n: &BigUint) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    let two = BigUint::from(2u8);
    if n.is_even() {
        return false;
    }
    let n_minus_1 = n - 1u8;
    let mut d = n_minus_1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    // Fixed small-prime bases; probabilistic above 2^64 but with error
    // probability far below any desk-scale concern, and fully deterministic.
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let a = BigUint::from(a);
        if &a >= n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho_u64(n: u64) -> u64 {
    // Brent's variant with deterministic parameter sweep.
    if n % 2 == 0 {
        return 2;
    }
    for c in 1..64u64 {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = num_integer::gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!("pollard rho failed on composite {n}")
}

fn factor_u64_into(n: u64, out: &mut BTreeMap<BigUint, u32>) {
    let mut n = n;
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while n % p == 0 {
            *out.entry(BigUint::from(p)).or_insert(0) += 1;
            n /= p;
        }
    }
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        *out.entry(BigUint::from(n)).or_insert(0) += 1;
        return;
    }
    let d = pollard_rho_u64(n);
    factor_u64_into(d, out);
    factor_u64_into(n / d, out);
}

fn factor_big_into(n: &BigUint, out: &mut BTreeMap<BigUint, u32>) {
    if n.is_one() {
        return;
    }
    if let Some(v) = n.to_u64() {
        factor_u64_into(v, out);
        return;
    }
    if is_prime_big(n) {
        *out.entry(n.clone()).or_insert(0) += 1;
        return;
    }
    // Strip small primes then fall back to rho over big ints.
    let mut rest = n.clone();
    for p in 2u64..5000 {
        if !is_prime_u64(p) {
            continue;
        }
        let bp = BigUint::from(p);
        while (&rest % &bp).is_zero() {
            *out.entry(bp.clone()).or_insert(0) += 1;
            rest /= &bp;
        }
        if rest.is_one() {
            return;
        }
    }
    if let Some(v) = rest.to_u64() {
        factor_u64_into(v, out);
        return;
    }
    if is_prime_big(&rest) {
        *out.entry(rest).or_insert(0) += 1;
        return;
    }
    let d = pollard_rho_big(&rest);
    factor_big_into(&d, out);
    factor_big_into(&(rest / &d), out);
}

fn pollard_rho_big(n: &BigUint) -> BigUint {
    let one = BigUint::one();
    for c in 1u32..64 {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut x = BigUint::from(2u8);
        let mut y = x.clone();
        loop {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break;
            }
            let d = diff.gcd(n);
            if d > one {
                if &d < n {
                    return d;
                }
                break;
            }
        }
    }
    unreachable!("pollard rho failed on composite big integer")
}

/// Prime factorization as an ordered map prime -> exponent.
pub fn factorize(n: &BigUint) -> BTreeMap<BigUint, u32> {
    let mut out = BTreeMap::new();
    if !n.is_zero() {
        factor_big_into(n, &mut out);
    }
    out
}

/// First `count` primes not dividing `avoid`, smallest first.
pub fn primes_avoiding(count: usize, avoid: &BigUint) -> Vec<u64> {
    let mut found = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while found.len() < count {
        if is_prime_u64(candidate) && !(avoid % candidate).is_zero() {
            found.push(candidate);
        }
        candidate += 1;
    }
    found
}
