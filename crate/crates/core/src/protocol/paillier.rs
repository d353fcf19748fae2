//! Paillier encryption with `g = n + 1` and signed plaintexts decoded to
//! `(-n/2, n/2]`.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::primes::{mod_inverse, random_prime};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditivePublicKey {
    n: BigUint,
    n_squared: BigUint,
}

#[derive(Clone, Debug)]
pub struct AdditiveSecretKey {
    public: AdditivePublicKey,
    lambda: BigUint,
    mu: BigUint,
}

#[derive(Clone, Debug)]
pub struct AdditiveKeypair {
    pub public: AdditivePublicKey,
    pub secret: AdditiveSecretKey,
}

/// Residue modulo `n^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveCiphertext(pub BigUint);

impl AdditivePublicKey {
    pub fn from_modulus(n: BigUint) -> Self {
        let n_squared = &n * &n;
        Self { n, n_squared }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn modulus_squared(&self) -> &BigUint {
        &self.n_squared
    }

    /// Largest magnitude that decodes unambiguously.
    pub fn max_plaintext(&self) -> BigUint {
        (&self.n - 1u32) >> 1
    }

    fn encode(&self, m: &BigInt) -> Result<BigUint> {
        if m.magnitude() > &self.max_plaintext() {
            return Err(Error::PlaintextOutOfRange(format!(
                "|{m}| exceeds the {}-bit plaintext window",
                self.n.bits()
            )));
        }
        Ok(m.mod_floor(&BigInt::from(self.n.clone())).magnitude().clone())
    }

    /// `(1 + m n) r^n mod n^2` with fresh `r`.
    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BigInt, rng: &mut R) -> Result<AdditiveCiphertext> {
        let m = self.encode(m)?;
        let r = loop {
            let r = rng.gen_biguint_range(&BigUint::one(), &self.n);
            if r.gcd(&self.n).is_one() {
                break r;
            }
        };
        let gm = (BigUint::one() + m * &self.n) % &self.n_squared;
        Ok(AdditiveCiphertext(gm * r.modpow(&self.n, &self.n_squared) % &self.n_squared))
    }

    pub fn add(&self, a: &AdditiveCiphertext, b: &AdditiveCiphertext) -> AdditiveCiphertext {
        AdditiveCiphertext(&a.0 * &b.0 % &self.n_squared)
    }

    /// Encryption of `k * m` from an encryption of `m`, for signed `k`.
    pub fn scalar_mul(&self, c: &AdditiveCiphertext, k: &BigInt) -> Result<AdditiveCiphertext> {
        let base = if k.is_negative() {
            mod_inverse(&c.0, &self.n_squared)
                .ok_or_else(|| Error::ProtocolIntegrity("ciphertext not invertible".into()))?
        } else {
            c.0.clone()
        };
        Ok(AdditiveCiphertext(base.modpow(k.magnitude(), &self.n_squared)))
    }

    /// Checks that `c` is a unit modulo `n^2`.
    pub fn check(&self, c: &AdditiveCiphertext) -> Result<()> {
        if c.0.is_zero() || c.0 >= self.n_squared || !c.0.gcd(&self.n).is_one() {
            return Err(Error::ProtocolIntegrity("malformed additive ciphertext".into()));
        }
        Ok(())
    }
}

impl AdditiveSecretKey {
    pub fn public(&self) -> &AdditivePublicKey {
        &self.public
    }

    /// Residue in `[0, n)`.
    pub fn decrypt_raw(&self, c: &AdditiveCiphertext) -> BigUint {
        let pk = &self.public;
        let u = c.0.modpow(&self.lambda, &pk.n_squared);
        let l = (u - 1u32) / &pk.n;
        l * &self.mu % &pk.n
    }

    /// Signed decode into `(-n/2, n/2]`.
    pub fn decrypt(&self, c: &AdditiveCiphertext) -> BigInt {
        let m = self.decrypt_raw(c);
        let n = &self.public.n;
        if m > (n >> 1) {
            BigInt::from_biguint(Sign::Minus, n - m)
        } else {
            BigInt::from(m)
        }
    }
}

impl AdditiveKeypair {
    /// Modulus of exactly `bits` bits (even, at least 64).
    pub fn generate<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<Self> {
        if bits < 64 || bits % 2 != 0 {
            return Err(Error::Config(format!(
                "additive modulus bits must be even and >= 64, got {bits}"
            )));
        }
        loop {
            let p = random_prime(bits / 2, rng);
            let q = random_prime(bits / 2, rng);
            if p == q {
                continue;
            }
            let n = &p * &q;
            let phi = (&p - 1u32) * (&q - 1u32);
            if !n.gcd(&phi).is_one() {
                continue;
            }
            let lambda = (&p - 1u32).lcm(&(&q - 1u32));
            let Some(mu) = mod_inverse(&lambda, &n) else {
                continue;
            };
            let public = AdditivePublicKey::from_modulus(n);
            return Ok(Self {
                secret: AdditiveSecretKey {
                    public: public.clone(),
                    lambda,
                    mu,
                },
                public,
            });
        }
    }
}
