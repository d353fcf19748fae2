//! The five protocol rounds as pure functions of each party's inputs.

use num_bigint::{BigInt, BigUint};
#[cfg(test)]
use num_bigint::RandBigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use super::elgamal::{MultiplicativeCiphertext, MultiplicativePublicKey, MultiplicativeSecretKey};
use super::paillier::{AdditiveCiphertext, AdditivePublicKey, AdditiveSecretKey};
use crate::error::{Error, Result};
use crate::learning::CodeMatrix;
use crate::ternary::TernaryCode;

/// An additive ciphertext wrapped limb by limb under the multiplicative key.
pub type DoubleCiphertext = Vec<MultiplicativeCiphertext>;

/// Blinding of one affine value: `a * x + b` with `a != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskPair {
    a: i64,
    b: i64,
}

impl MaskPair {
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if a == 0 {
            return Err(Error::InvalidInput("mask multiplier must be nonzero".into()));
        }
        Ok(Self { a, b })
    }

    /// `a` uniform on `[-a_bound, a_bound] \ {0}`, `b` uniform on `[-b_bound, b_bound]`.
    pub fn sample<R: Rng + ?Sized>(a_bound: i64, b_bound: i64, rng: &mut R) -> Result<Self> {
        if a_bound < 1 || b_bound < 0 {
            return Err(Error::Config("mask bounds must satisfy A >= 1, B >= 0".into()));
        }
        let mut a = rng.gen_range(1..=a_bound);
        if rng.gen::<bool>() {
            a = -a;
        }
        Self::new(a, rng.gen_range(-b_bound..=b_bound))
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }
}

/// Decision revealed to the server.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProtocolDecision {
    pub accept: bool,
}

/// Limb layout for wrapping residues below `n^2` into plaintexts below `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LimbSchedule {
    pub width_bits: u64,
    pub limbs: usize,
}

impl LimbSchedule {
    /// Each limb carries `bits(p) - 1` bits and is offset by one, so every
    /// limb plaintext lies in `[1, p)`.
    pub fn new(pk_u: &AdditivePublicKey, pk_s: &MultiplicativePublicKey) -> Result<Self> {
        let width_bits = pk_s.modulus().bits() - 1;
        if width_bits == 0 {
            return Err(Error::Config("multiplicative modulus too small".into()));
        }
        let total = (pk_u.modulus_squared() - 1u32).bits();
        Ok(Self {
            width_bits,
            limbs: total.div_ceil(width_bits) as usize,
        })
    }

    pub fn split(&self, c: &BigUint) -> Vec<BigUint> {
        let mask = (BigUint::one() << self.width_bits) - 1u32;
        (0..self.limbs)
            .map(|j| ((c >> (self.width_bits * j as u64)) & &mask) + 1u32)
            .collect()
    }

    pub fn join(&self, limbs: &[BigUint]) -> Result<BigUint> {
        let mut c = BigUint::zero();
        for (j, m) in limbs.iter().enumerate() {
            if m.is_zero() || (m - 1u32).bits() > self.width_bits {
                return Err(Error::ProtocolIntegrity("limb out of range".into()));
            }
            c |= (m - 1u32) << (self.width_bits * j as u64);
        }
        Ok(c)
    }
}

/// Opens both layers of a round-2 or round-3 element. Needs both secret
/// keys, so only an auditor holding the whole key set can call it.
pub fn open_double(
    c: &DoubleCiphertext,
    sk_s: &MultiplicativeSecretKey,
    sk_u: &AdditiveSecretKey,
) -> Result<BigInt> {
    let schedule = LimbSchedule::new(sk_u.public(), sk_s.public())?;
    let plain = c.iter().map(|l| sk_s.decrypt(l)).collect::<Result<Vec<_>>>()?;
    Ok(sk_u.decrypt(&AdditiveCiphertext(schedule.join(&plain)?)))
}

/// Round 1: every component of `p`, zeros included.
pub fn client_round1_encrypt_query<R: Rng + ?Sized>(
    p: &TernaryCode,
    pk_u: &AdditivePublicKey,
    rng: &mut R,
) -> Result<Vec<AdditiveCiphertext>> {
    p.symbols()
        .iter()
        .map(|&s| pk_u.encrypt(&BigInt::from(s), rng))
        .collect()
}

/// Round 2: `e(p' r_g)` from the encrypted query by homomorphic products
/// over the support of `r_g`, then wrapped under the multiplicative key.
pub fn server_round2_encrypted_correlations<R: Rng + ?Sized>(
    enc_p: &[AdditiveCiphertext],
    reps: &CodeMatrix,
    pk_u: &AdditivePublicKey,
    pk_s: &MultiplicativePublicKey,
    rng: &mut R,
) -> Result<Vec<DoubleCiphertext>> {
    crate::error::ensure_dim("encrypted query length", reps.code_len(), enc_p.len())?;
    for c in enc_p {
        pk_u.check(c)?;
    }
    let schedule = LimbSchedule::new(pk_u, pk_s)?;
    let minus_one = BigInt::from(-1);
    let mut out = Vec::with_capacity(reps.len());
    for r in reps.columns() {
        let mut acc = AdditiveCiphertext(BigUint::one());
        for (i, s) in r.support() {
            let term = if s > 0 {
                enc_p[i].clone()
            } else {
                pk_u.scalar_mul(&enc_p[i], &minus_one)?
            };
            acc = pk_u.add(&acc, &term);
        }
        let wrapped = schedule
            .split(&acc.0)
            .iter()
            .map(|m| pk_s.encrypt(m, rng))
            .collect::<Result<Vec<_>>>()?;
        out.push(wrapped);
    }
    Ok(out)
}

/// Round 3: uniform shuffle plus rerandomization of every limb. Returns the
/// list to send and the permutation (`sent[k] = received[perm[k]]`), which
/// stays with the client.
pub fn client_round3_mask_permute<R: Rng + ?Sized>(
    list: &[DoubleCiphertext],
    pk_s: &MultiplicativePublicKey,
    rng: &mut R,
) -> Result<(Vec<DoubleCiphertext>, Vec<usize>)> {
    for c in list.iter().flatten() {
        pk_s.check(c)?;
    }
    let mut perm: Vec<usize> = (0..list.len()).collect();
    perm.shuffle(rng);
    let out = perm
        .iter()
        .map(|&k| list[k].iter().map(|c| pk_s.rerandomize(c, rng)).collect())
        .collect();
    Ok((out, perm))
}

/// Largest `|tau|` for which the masked values fit the plaintext window.
fn check_mask_range(pk_u: &AdditivePublicKey, mask: &MaskPair, tau: i64, sparsity: usize) -> Result<()> {
    let spread = BigInt::from(4 * sparsity as i64) + BigInt::from(tau).abs();
    let worst = BigInt::from(mask.a).abs() * spread + BigInt::from(mask.b).abs();
    if worst.magnitude() > &pk_u.max_plaintext() {
        return Err(Error::PlaintextOutOfRange(format!(
            "masked value bound {worst} exceeds the additive plaintext window"
        )));
    }
    Ok(())
}

/// Round 4: strips the outer layer and returns
/// `e(a_k (2S - 2 c_k - tau) + b_k)` for each received correlation `c_k`.
pub fn server_round4_blind_threshold<R: Rng + ?Sized>(
    list: &[DoubleCiphertext],
    sk_s: &MultiplicativeSecretKey,
    pk_u: &AdditivePublicKey,
    tau: i64,
    sparsity: usize,
    masks: &[MaskPair],
    rng: &mut R,
) -> Result<Vec<AdditiveCiphertext>> {
    crate::error::ensure_dim("masks", list.len(), masks.len())?;
    let schedule = LimbSchedule::new(pk_u, sk_s.public())?;
    let s = BigInt::from(sparsity as i64);
    let tau_big = BigInt::from(tau);
    list.iter()
        .zip(masks)
        .map(|(limbs, mask)| {
            check_mask_range(pk_u, mask, tau, sparsity)?;
            if limbs.len() != schedule.limbs {
                return Err(Error::ProtocolIntegrity("wrong limb count".into()));
            }
            let plain = limbs.iter().map(|c| sk_s.decrypt(c)).collect::<Result<Vec<_>>>()?;
            let corr = AdditiveCiphertext(schedule.join(&plain)?);
            pk_u.check(&corr)?;
            let a = BigInt::from(mask.a);
            let offset = &a * (2 * &s - &tau_big) + BigInt::from(mask.b);
            let fresh = pk_u.encrypt(&offset, rng)?;
            Ok(pk_u.add(&fresh, &pk_u.scalar_mul(&corr, &(-2 * a))?))
        })
        .collect()
}

/// Round 5: the masked values in the client's permuted order.
pub fn client_round5_decrypt_reveal(
    list: &[AdditiveCiphertext],
    sk_u: &AdditiveSecretKey,
) -> Result<Vec<BigInt>> {
    list.iter()
        .map(|c| {
            sk_u.public().check(c)?;
            Ok(sk_u.decrypt(c))
        })
        .collect()
}

/// Unmasks `(v_k - b_k) / a_k = ||p - r_k||^2 - tau` and accepts iff any is
/// nonpositive. A nonzero remainder means a value was tampered with.
pub fn server_decide(values: &[BigInt], masks: &[MaskPair]) -> Result<ProtocolDecision> {
    crate::error::ensure_dim("revealed values", masks.len(), values.len())?;
    let mut accept = false;
    for (v, m) in values.iter().zip(masks) {
        let (q, r) = (v - BigInt::from(m.b)).div_rem(&BigInt::from(m.a));
        if !r.is_zero() {
            return Err(Error::ProtocolIntegrity("revealed value does not unmask".into()));
        }
        accept |= !q.is_positive();
    }
    Ok(ProtocolDecision { accept })
}
