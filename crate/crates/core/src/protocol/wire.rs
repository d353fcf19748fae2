//! Byte format of protocol messages and transcripts.
//!
//! Message: `round: u8`, `sender: u8` (0 client, 1 server), `count: u32` BE,
//! then `count` payloads, each a `u32` BE byte length followed by the
//! big-endian integer. Rounds 1 to 4 carry unsigned magnitudes; round 5
//! carries two's-complement signed integers.
//!
//! Transcript file: `GMKT`, version byte, `limbs: u32` BE, `messages: u32`
//! BE, then the messages back to back.

use std::sync::mpsc::{channel, Receiver, Sender};

use num_bigint::{BigInt, BigUint, Sign};

use crate::error::{Error, Result};

pub const TRANSCRIPT_MAGIC: &[u8; 4] = b"GMKT";
pub const TRANSCRIPT_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Client = 0,
    Server = 1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadKind {
    AdditiveCiphertexts,
    MultiplicativeCiphertexts,
    SignedIntegers,
}

/// Expected sender and payload kind of rounds 1 to 5.
pub fn round_layout(round: u8) -> Result<(Party, PayloadKind)> {
    Ok(match round {
        1 => (Party::Client, PayloadKind::AdditiveCiphertexts),
        2 => (Party::Server, PayloadKind::MultiplicativeCiphertexts),
        3 => (Party::Client, PayloadKind::MultiplicativeCiphertexts),
        4 => (Party::Server, PayloadKind::AdditiveCiphertexts),
        5 => (Party::Client, PayloadKind::SignedIntegers),
        r => return Err(Error::Wire(format!("unknown round {r}"))),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub round: u8,
    pub sender: Party,
    pub payloads: Vec<BigInt>,
}

impl Message {
    pub fn new(round: u8, payloads: Vec<BigInt>) -> Result<Self> {
        let (sender, _) = round_layout(round)?;
        Ok(Self {
            round,
            sender,
            payloads,
        })
    }

    pub fn unsigned(round: u8, payloads: impl IntoIterator<Item = BigUint>) -> Result<Self> {
        Self::new(round, payloads.into_iter().map(BigInt::from).collect())
    }

    pub fn kind(&self) -> PayloadKind {
        round_layout(self.round).map(|(_, k)| k).expect("validated round")
    }

    pub fn unsigned_payloads(&self) -> Result<Vec<BigUint>> {
        self.payloads
            .iter()
            .map(|p| {
                p.to_biguint()
                    .ok_or_else(|| Error::Wire(format!("negative payload in round {}", self.round)))
            })
            .collect()
    }

    pub fn encode(&self, out: &mut Vec<u8>) -> Result<()> {
        let signed = self.kind() == PayloadKind::SignedIntegers;
        out.push(self.round);
        out.push(self.sender as u8);
        out.extend_from_slice(&(self.payloads.len() as u32).to_be_bytes());
        for p in &self.payloads {
            let bytes = if signed {
                p.to_signed_bytes_be()
            } else if p.sign() == Sign::Minus {
                return Err(Error::Wire(format!("negative payload in round {}", self.round)));
            } else {
                p.magnitude().to_bytes_be()
            };
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.encode(&mut out)?;
        Ok(out)
    }

    /// Parses one message from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = Reader { bytes, pos: 0 };
        let round = r.u8()?;
        let sender = match r.u8()? {
            0 => Party::Client,
            1 => Party::Server,
            s => return Err(Error::Wire(format!("unknown sender {s}"))),
        };
        let (expected, kind) = round_layout(round)?;
        if sender != expected {
            return Err(Error::Wire(format!("round {round} sent by the wrong party")));
        }
        let count = r.u32()? as usize;
        let mut payloads = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let raw = r.take(len)?;
            payloads.push(if kind == PayloadKind::SignedIntegers {
                BigInt::from_signed_bytes_be(raw)
            } else {
                BigInt::from(BigUint::from_bytes_be(raw))
            });
        }
        Ok((
            Self {
                round,
                sender,
                payloads,
            },
            r.pos,
        ))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Wire(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Every message of one run in send order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolTranscript {
    /// Multiplicative ciphertexts per additive ciphertext in rounds 2 and 3.
    pub limbs: u32,
    pub messages: Vec<Message>,
}

impl ProtocolTranscript {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = TRANSCRIPT_MAGIC.to_vec();
        out.push(TRANSCRIPT_VERSION);
        out.extend_from_slice(&self.limbs.to_be_bytes());
        out.extend_from_slice(&(self.messages.len() as u32).to_be_bytes());
        for m in &self.messages {
            m.encode(&mut out)?;
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != TRANSCRIPT_MAGIC {
            return Err(Error::Wire("not a transcript file".into()));
        }
        let version = r.u8()?;
        if version != TRANSCRIPT_VERSION {
            return Err(Error::Wire(format!("unsupported transcript version {version}")));
        }
        let limbs = r.u32()?;
        let count = r.u32()? as usize;
        let mut messages = Vec::with_capacity(count.min(16));
        for _ in 0..count {
            let (m, used) = Message::decode(&bytes[r.pos..])?;
            r.pos += used;
            messages.push(m);
        }
        if r.pos != bytes.len() {
            return Err(Error::Wire("trailing bytes after transcript".into()));
        }
        let t = Self { limbs, messages };
        t.validate()?;
        Ok(t)
    }

    /// Rounds appear exactly once each, in order 1 to 5.
    pub fn validate(&self) -> Result<()> {
        let rounds: Vec<u8> = self.messages.iter().map(|m| m.round).collect();
        if rounds != [1, 2, 3, 4, 5] {
            return Err(Error::Wire(format!("rounds out of order: {rounds:?}")));
        }
        Ok(())
    }

    pub fn round(&self, round: u8) -> Option<&Message> {
        self.messages.iter().find(|m| m.round == round)
    }
}

/// One side of an in-process duplex byte channel.
pub struct Endpoint {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

/// Two connected endpoints.
pub fn duplex() -> (Endpoint, Endpoint) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (Endpoint { tx: a_tx, rx: a_rx }, Endpoint { tx: b_tx, rx: b_rx })
}

impl Endpoint {
    pub fn send(&self, m: &Message) -> Result<()> {
        self.tx
            .send(m.to_bytes()?)
            .map_err(|_| Error::Wire("peer hung up".into()))
    }

    /// Receives the next message and checks it is the expected round.
    pub fn recv(&self, round: u8) -> Result<Message> {
        let bytes = self.rx.recv().map_err(|_| Error::Wire("peer hung up".into()))?;
        let (m, used) = Message::decode(&bytes)?;
        if used != bytes.len() {
            return Err(Error::Wire("trailing bytes after message".into()));
        }
        if m.round != round {
            return Err(Error::Wire(format!("expected round {round}, got {}", m.round)));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bytes() {
        let m = Message::unsigned(1, [BigUint::from(0x0102u32), BigUint::from(0u32)]).unwrap();
        assert_eq!(
            m.to_bytes().unwrap(),
            vec![1, 0, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 0, 0, 0, 1, 0]
        );
        let m = Message::new(5, vec![BigInt::from(-1), BigInt::from(128)]).unwrap();
        assert_eq!(
            m.to_bytes().unwrap(),
            vec![5, 0, 0, 0, 0, 2, 0, 0, 0, 1, 0xff, 0, 0, 0, 2, 0, 0x80]
        );
    }

    #[test]
    fn round_trip() {
        let msgs = vec![
            Message::unsigned(1, [BigUint::from(7u32)]).unwrap(),
            Message::unsigned(2, [BigUint::from(1u32) << 300u32, BigUint::from(3u32)]).unwrap(),
            Message::unsigned(3, [BigUint::from(9u32), BigUint::from(3u32)]).unwrap(),
            Message::unsigned(4, [BigUint::from(11u32)]).unwrap(),
            Message::new(5, vec![BigInt::from(-123456789i64)]).unwrap(),
        ];
        let t = ProtocolTranscript { limbs: 1, messages: msgs };
        let bytes = t.to_bytes().unwrap();
        assert_eq!(&bytes[..5], b"GMKT\x01");
        assert_eq!(ProtocolTranscript::from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn malformed_rejected() {
        assert!(Message::decode(&[1, 0, 0, 0, 0, 1, 0, 0, 0, 5, 1]).is_err());
        assert!(Message::decode(&[1, 1, 0, 0, 0, 0]).is_err());
        assert!(Message::decode(&[9, 0, 0, 0, 0, 0]).is_err());
        assert!(Message::new(1, vec![BigInt::from(-1)]).unwrap().to_bytes().is_err());
        assert!(ProtocolTranscript::from_bytes(b"XXXX\x01").is_err());
        let t = ProtocolTranscript {
            limbs: 1,
            messages: vec![Message::unsigned(2, []).unwrap()],
        };
        assert!(ProtocolTranscript::from_bytes(&t.to_bytes().unwrap()).is_err());
    }

    #[test]
    fn channel_checks_round() {
        let (a, b) = duplex();
        a.send(&Message::unsigned(1, [BigUint::from(1u32)]).unwrap()).unwrap();
        assert!(b.recv(2).is_err());
        a.send(&Message::unsigned(1, [BigUint::from(1u32)]).unwrap()).unwrap();
        assert_eq!(b.recv(1).unwrap().payloads, vec![BigInt::from(1)]);
    }
}
