//! Multiplicative ElGamal over `Z_p^*` for a safe prime `p`. Plaintexts are
//! nonzero residues below `p`.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use super::primes::{mod_inverse, random_safe_prime};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicativePublicKey {
    p: BigUint,
    g: BigUint,
    h: BigUint,
}

#[derive(Clone, Debug)]
pub struct MultiplicativeSecretKey {
    public: MultiplicativePublicKey,
    x: BigUint,
}

#[derive(Clone, Debug)]
pub struct MultiplicativeKeypair {
    pub public: MultiplicativePublicKey,
    pub secret: MultiplicativeSecretKey,
}

/// `(g^k, m h^k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicativeCiphertext {
    pub c1: BigUint,
    pub c2: BigUint,
}

impl MultiplicativePublicKey {
    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    fn check_plaintext(&self, m: &BigUint) -> Result<()> {
        if m.is_zero() || *m >= self.p {
            return Err(Error::PlaintextOutOfRange(format!(
                "multiplicative plaintext must lie in [1, p) for a {}-bit p",
                self.p.bits()
            )));
        }
        Ok(())
    }

    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BigUint, rng: &mut R) -> Result<MultiplicativeCiphertext> {
        self.check_plaintext(m)?;
        let k = rng.gen_biguint_range(&BigUint::one(), &(&self.p - 1u32));
        Ok(MultiplicativeCiphertext {
            c1: self.g.modpow(&k, &self.p),
            c2: m * self.h.modpow(&k, &self.p) % &self.p,
        })
    }

    pub fn multiply(&self, a: &MultiplicativeCiphertext, b: &MultiplicativeCiphertext) -> MultiplicativeCiphertext {
        MultiplicativeCiphertext {
            c1: &a.c1 * &b.c1 % &self.p,
            c2: &a.c2 * &b.c2 % &self.p,
        }
    }

    /// Multiplies by a fresh encryption of 1.
    pub fn rerandomize<R: Rng + ?Sized>(&self, c: &MultiplicativeCiphertext, rng: &mut R) -> MultiplicativeCiphertext {
        let one = self.encrypt(&BigUint::one(), rng).expect("1 is a valid plaintext");
        self.multiply(c, &one)
    }

    pub fn check(&self, c: &MultiplicativeCiphertext) -> Result<()> {
        let bad = |v: &BigUint| v.is_zero() || *v >= self.p;
        if bad(&c.c1) || bad(&c.c2) {
            return Err(Error::ProtocolIntegrity("malformed multiplicative ciphertext".into()));
        }
        Ok(())
    }
}

impl MultiplicativeSecretKey {
    pub fn public(&self) -> &MultiplicativePublicKey {
        &self.public
    }

    pub fn decrypt(&self, c: &MultiplicativeCiphertext) -> Result<BigUint> {
        let p = &self.public.p;
        let s = c.c1.modpow(&self.x, p);
        let inv = mod_inverse(&s, p)
            .ok_or_else(|| Error::ProtocolIntegrity("malformed multiplicative ciphertext".into()))?;
        Ok(&c.c2 * inv % p)
    }
}

impl MultiplicativeKeypair {
    /// Safe prime of exactly `bits` bits and a generator of `Z_p^*`.
    pub fn generate<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<Self> {
        if bits < 32 {
            return Err(Error::Config(format!(
                "multiplicative modulus bits must be >= 32, got {bits}"
            )));
        }
        let (p, q) = random_safe_prime(bits, rng);
        let two = BigUint::from(2u32);
        // g generates Z_p^* iff g^2 != 1 and g^q != 1
        let g = loop {
            let g = rng.gen_biguint_range(&two, &(&p - 1u32));
            if !g.modpow(&two, &p).is_one() && !g.modpow(&q, &p).is_one() {
                break g;
            }
        };
        let x = rng.gen_biguint_range(&BigUint::one(), &(&p - 1u32));
        let h = g.modpow(&x, &p);
        let public = MultiplicativePublicKey { p, g, h };
        Ok(Self {
            secret: MultiplicativeSecretKey {
                public: public.clone(),
                x,
            },
            public,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn keys() -> (MultiplicativeKeypair, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        (MultiplicativeKeypair::generate(128, &mut rng).unwrap(), rng)
    }

    #[test]
    fn product() {
        let (k, mut rng) = keys();
        let pk = &k.public;
        let a = pk.encrypt(&BigUint::from(4u32), &mut rng).unwrap();
        let b = pk.encrypt(&BigUint::from(6u32), &mut rng).unwrap();
        assert_eq!(k.secret.decrypt(&pk.multiply(&a, &b)).unwrap(), BigUint::from(24u32));
    }

    #[test]
    fn rerandomize_one() {
        let (k, mut rng) = keys();
        let pk = &k.public;
        let c = pk.encrypt(&BigUint::one(), &mut rng).unwrap();
        let r = pk.rerandomize(&c, &mut rng);
        assert_ne!(c, r);
        assert_eq!(k.secret.decrypt(&r).unwrap(), BigUint::one());
    }

    #[test]
    fn invalid_plaintexts() {
        let (k, mut rng) = keys();
        let pk = &k.public;
        assert!(pk.encrypt(&BigUint::zero(), &mut rng).is_err());
        assert!(pk.encrypt(pk.modulus(), &mut rng).is_err());
    }

    #[test]
    fn random_products_mod_p() {
        let (k, mut rng) = keys();
        let pk = &k.public;
        let p = pk.modulus().clone();
        for _ in 0..200 {
            let a = rng.gen_biguint_range(&BigUint::one(), &p);
            let b = rng.gen_biguint_range(&BigUint::one(), &p);
            let ca = pk.encrypt(&a, &mut rng).unwrap();
            let cb = pk.encrypt(&b, &mut rng).unwrap();
            assert_eq!(k.secret.decrypt(&pk.multiply(&ca, &cb)).unwrap(), a * b % &p);
        }
    }
}
