//! Two-party group membership verification under encryption.
//!
//! The client holds a Paillier key `(sk_U, pk_U)`, the server an ElGamal key
//! `(sk_S, pk_S)` and the group representations. Rounds:
//!
//! 1. client to server: `e(p(i))` for all `l` components;
//! 2. server to client: `E(e(p' r_g))` for every group, in group order;
//! 3. client to server: the same list shuffled and rerandomized by `E(1)`;
//! 4. server to client: `e(a_k (2S - 2 p' r_k - tau) + b_k)`;
//! 5. client to server: the decrypted masked values.
//!
//! The server unmasks and accepts iff some group is within `tau`. It never
//! sees the permutation, so it cannot tell which group matched.
//!
//! Key sizes are configurable and small by default: this demonstrates the
//! message flow, not production security.

mod elgamal;
mod paillier;
mod primes;
mod rounds;
mod wire;

pub use elgamal::{
    MultiplicativeCiphertext, MultiplicativeKeypair, MultiplicativePublicKey, MultiplicativeSecretKey,
};
pub use paillier::{AdditiveCiphertext, AdditiveKeypair, AdditivePublicKey, AdditiveSecretKey};
pub use primes::{is_probable_prime, mod_inverse, random_prime, random_safe_prime};
pub use rounds::{
    client_round1_encrypt_query, client_round3_mask_permute, client_round5_decrypt_reveal,
    open_double, server_decide, server_round2_encrypted_correlations, server_round4_blind_threshold,
    DoubleCiphertext, LimbSchedule, MaskPair, ProtocolDecision,
};
pub use wire::{
    duplex, round_layout, Endpoint, Message, Party, PayloadKind, ProtocolTranscript,
    TRANSCRIPT_MAGIC, TRANSCRIPT_VERSION,
};

use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{ensure_dim, Error, Result};
use crate::learning::CodeMatrix;
use crate::ternary::TernaryCode;

#[derive(Clone, Debug, PartialEq)]
pub struct SecurityParams {
    pub additive_bits: u64,
    /// Safe-prime size for the outer layer. Below `2 * additive_bits + 1`
    /// the inner ciphertexts are split into several limbs.
    pub multiplicative_bits: u64,
    /// `a` is drawn from `[-A, A] \ {0}`.
    pub mask_a_bound: i64,
    /// `b` is drawn from `[-B, B]`.
    pub mask_b_bound: i64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self::with_additive_bits(128)
    }
}

impl SecurityParams {
    /// Outer modulus large enough for a single limb.
    pub fn with_additive_bits(bits: u64) -> Self {
        Self {
            additive_bits: bits,
            multiplicative_bits: 2 * bits + 64,
            mask_a_bound: 1 << 16,
            mask_b_bound: 1 << 32,
        }
    }
}

/// Both parties' key pairs; each party only ever touches its own secret.
#[derive(Clone, Debug)]
pub struct ProtocolKeys {
    pub client: AdditiveKeypair,
    pub server: MultiplicativeKeypair,
}

impl ProtocolKeys {
    pub fn generate<R: Rng + ?Sized>(params: &SecurityParams, rng: &mut R) -> Result<Self> {
        Ok(Self {
            client: AdditiveKeypair::generate(params.additive_bits, rng)?,
            server: MultiplicativeKeypair::generate(params.multiplicative_bits, rng)?,
        })
    }

    pub fn limb_schedule(&self) -> Result<LimbSchedule> {
        LimbSchedule::new(&self.client.public, &self.server.public)
    }
}

fn flatten(list: &[DoubleCiphertext]) -> Vec<BigUint> {
    list.iter()
        .flatten()
        .flat_map(|c| [c.c1.clone(), c.c2.clone()])
        .collect()
}

fn unflatten(values: Vec<BigUint>, limbs: usize) -> Result<Vec<DoubleCiphertext>> {
    if values.len() % (2 * limbs) != 0 {
        return Err(Error::Wire(format!(
            "{} payloads do not split into {limbs}-limb ciphertexts",
            values.len()
        )));
    }
    Ok(values
        .chunks(2 * limbs)
        .map(|group| {
            group
                .chunks(2)
                .map(|pair| MultiplicativeCiphertext {
                    c1: pair[0].clone(),
                    c2: pair[1].clone(),
                })
                .collect()
        })
        .collect())
}

fn expect_count(m: &Message, expected: usize) -> Result<()> {
    if m.payloads.len() != expected {
        return Err(Error::Wire(format!(
            "round {} carries {} payloads, expected {expected}",
            m.round,
            m.payloads.len()
        )));
    }
    Ok(())
}

struct Client<'a> {
    keys: &'a AdditiveKeypair,
    pk_s: &'a MultiplicativePublicKey,
    limbs: usize,
    groups: usize,
    rng: ChaCha20Rng,
    link: Endpoint,
    permutation: Vec<usize>,
}

impl Client<'_> {
    fn round1(&mut self, p: &TernaryCode) -> Result<Message> {
        let enc = client_round1_encrypt_query(p, &self.keys.public, &mut self.rng)?;
        let m = Message::unsigned(1, enc.into_iter().map(|c| c.0))?;
        self.link.send(&m)?;
        Ok(m)
    }

    fn round3(&mut self) -> Result<Message> {
        let m = self.link.recv(2)?;
        expect_count(&m, 2 * self.groups * self.limbs)?;
        let list = unflatten(m.unsigned_payloads()?, self.limbs)?;
        let (out, perm) = client_round3_mask_permute(&list, self.pk_s, &mut self.rng)?;
        self.permutation = perm;
        let m = Message::unsigned(3, flatten(&out))?;
        self.link.send(&m)?;
        Ok(m)
    }

    fn round5(&mut self) -> Result<Message> {
        let m = self.link.recv(4)?;
        expect_count(&m, self.groups)?;
        let list: Vec<_> = m.unsigned_payloads()?.into_iter().map(AdditiveCiphertext).collect();
        let values = client_round5_decrypt_reveal(&list, &self.keys.secret)?;
        let m = Message::new(5, values)?;
        self.link.send(&m)?;
        Ok(m)
    }
}

struct Server<'a> {
    keys: &'a MultiplicativeKeypair,
    pk_u: &'a AdditivePublicKey,
    reps: &'a CodeMatrix,
    tau: i64,
    params: &'a SecurityParams,
    limbs: usize,
    rng: ChaCha20Rng,
    link: Endpoint,
    masks: Vec<MaskPair>,
}

impl Server<'_> {
    fn round2(&mut self) -> Result<Message> {
        let m = self.link.recv(1)?;
        expect_count(&m, self.reps.code_len())?;
        let enc: Vec<_> = m.unsigned_payloads()?.into_iter().map(AdditiveCiphertext).collect();
        let list = server_round2_encrypted_correlations(
            &enc,
            self.reps,
            self.pk_u,
            &self.keys.public,
            &mut self.rng,
        )?;
        let m = Message::unsigned(2, flatten(&list))?;
        self.link.send(&m)?;
        Ok(m)
    }

    fn round4(&mut self) -> Result<Message> {
        let m = self.link.recv(3)?;
        expect_count(&m, 2 * self.reps.len() * self.limbs)?;
        let list = unflatten(m.unsigned_payloads()?, self.limbs)?;
        self.masks = (0..list.len())
            .map(|_| MaskPair::sample(self.params.mask_a_bound, self.params.mask_b_bound, &mut self.rng))
            .collect::<Result<_>>()?;
        let out = server_round4_blind_threshold(
            &list,
            &self.keys.secret,
            self.pk_u,
            self.tau,
            self.reps.sparsity(),
            &self.masks,
            &mut self.rng,
        )?;
        let m = Message::unsigned(4, out.into_iter().map(|c| c.0))?;
        self.link.send(&m)?;
        Ok(m)
    }

    fn decide(&mut self) -> Result<ProtocolDecision> {
        let m = self.link.recv(5)?;
        expect_count(&m, self.reps.len())?;
        server_decide(&m.payloads, &self.masks)
    }
}

/// Everything observable from one run, including the client-private
/// permutation and the server-private masks, for auditing.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub decision: ProtocolDecision,
    pub transcript: ProtocolTranscript,
    pub permutation: Vec<usize>,
    pub masks: Vec<MaskPair>,
}

impl ProtocolRun {
    /// Values revealed in round 5.
    pub fn revealed(&self) -> &[BigInt] {
        &self.transcript.messages[4].payloads
    }
}

/// Runs all five rounds over an in-process channel with fixed keys. The
/// client and server draw from independent streams seeded from `rng`.
pub fn run_protocol_with_keys<R: Rng + ?Sized>(
    p: &TernaryCode,
    reps: &CodeMatrix,
    tau: i64,
    keys: &ProtocolKeys,
    params: &SecurityParams,
    rng: &mut R,
) -> Result<ProtocolRun> {
    ensure_dim("query length", reps.code_len(), p.len())?;
    if p.sparsity() != reps.sparsity() {
        return Err(Error::InvalidSparsity {
            sparsity: p.sparsity(),
            len: p.len(),
        });
    }
    let schedule = keys.limb_schedule()?;
    let (client_link, server_link) = duplex();
    let mut client = Client {
        keys: &keys.client,
        pk_s: &keys.server.public,
        limbs: schedule.limbs,
        groups: reps.len(),
        rng: ChaCha20Rng::seed_from_u64(rng.gen()),
        link: client_link,
        permutation: vec![],
    };
    let mut server = Server {
        keys: &keys.server,
        pk_u: &keys.client.public,
        reps,
        tau,
        params,
        limbs: schedule.limbs,
        rng: ChaCha20Rng::seed_from_u64(rng.gen()),
        link: server_link,
        masks: vec![],
    };
    let messages = vec![
        client.round1(p)?,
        server.round2()?,
        client.round3()?,
        server.round4()?,
        client.round5()?,
    ];
    let decision = server.decide()?;
    Ok(ProtocolRun {
        decision,
        transcript: ProtocolTranscript {
            limbs: schedule.limbs as u32,
            messages,
        },
        permutation: client.permutation,
        masks: server.masks,
    })
}

/// Generates fresh keys from `rng`, then runs the protocol.
pub fn run_protocol<R: Rng + ?Sized>(
    p: &TernaryCode,
    reps: &CodeMatrix,
    tau: i64,
    params: &SecurityParams,
    rng: &mut R,
) -> Result<(ProtocolDecision, ProtocolTranscript)> {
    let keys = ProtocolKeys::generate(params, rng)?;
    let run = run_protocol_with_keys(p, reps, tau, &keys, params, rng)?;
    Ok((run.decision, run.transcript))
}
