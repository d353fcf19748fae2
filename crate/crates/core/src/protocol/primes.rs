//! Probabilistic primality and prime generation for the toy cryptosystems.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

const MR_ROUNDS: usize = 40;

fn small_primes() -> &'static [u32] {
    static PRIMES: std::sync::OnceLock<Vec<u32>> = std::sync::OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 2000;
        let mut sieve = vec![true; limit];
        let mut out = Vec::new();
        for i in 2..limit {
            if sieve[i] {
                out.push(i as u32);
                for j in (i * i..limit).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        out
    })
}

/// Miller-Rabin with random bases; exact for inputs below the small-prime table.
pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in small_primes() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'witness: for _ in 0..MR_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn random_odd_with_top_bits<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    let mut c = rng.gen_biguint(bits);
    c.set_bit(bits - 1, true);
    c.set_bit(bits - 2, true);
    c.set_bit(0, true);
    c
}

/// Random prime with exactly `bits` bits and its two top bits set, so the
/// product of two such primes has exactly `2 * bits` bits.
pub fn random_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    assert!(bits >= 16, "prime size too small");
    loop {
        let c = random_odd_with_top_bits(bits, rng);
        if is_probable_prime(&c, rng) {
            return c;
        }
    }
}

/// Random safe prime `p = 2q + 1` with exactly `bits` bits; returns `(p, q)`.
pub fn random_safe_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> (BigUint, BigUint) {
    assert!(bits >= 16, "prime size too small");
    let primes = small_primes();
    loop {
        let q = random_odd_with_top_bits(bits - 1, rng);
        // sieve q and 2q + 1 together before any exponentiation; both
        // exceed every table prime since q has at least 15 bits
        let composite = primes[1..].iter().any(|&sp| {
            let r = (&q % sp).to_u32().unwrap_or(0);
            r == 0 || (2 * r + 1) % sp == 0
        });
        if composite {
            continue;
        }
        if !is_probable_prime(&q, rng) {
            continue;
        }
        let p = &q * 2u32 + 1u32;
        if is_probable_prime(&p, rng) {
            return (p, q);
        }
    }
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    use num_bigint::BigInt;
    let e = BigInt::from(a % m).extended_gcd(&BigInt::from(m.clone()));
    if !e.gcd.is_one() {
        return None;
    }
    let m = BigInt::from(m.clone());
    e.x.mod_floor(&m).to_biguint()
}
