//! Symmetric primitives.
//!
//! [`BlockPermutation`] is the keyed 256-bit permutation `E_k` that maps
//! Elgamal message values to points of the verification polynomial. It is a
//! four-round balanced Feistel network over two 128-bit halves with AES-256
//! as the round function; each round uses its own key derived from `k`.
//!
//! [`seal`] / [`open`] implement the integrated encryption used for
//! confidential replies: ephemeral ECDH, a keystream from the permutation in
//! counter mode, and HMAC-SHA256 over the ciphertext.

use aes::cipher::{BlockEncrypt, KeyInit};
use aes::Aes256;
use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::curve::{Curve, Point};
use crate::field::Gf256;

pub const CIPHER_ID_FEISTEL_AES: u8 = 1;

const ROUNDS: usize = 4;

pub struct BlockPermutation {
    rounds: [Aes256; ROUNDS],
}

impl BlockPermutation {
    pub fn new(key: &[u8; 32]) -> Self {
        let rounds = std::array::from_fn(|i| {
            let mut h = Sha256::new();
            h.update(b"vanet-trs/E-round");
            h.update(key);
            h.update([i as u8]);
            let rk: [u8; 32] = h.finalize().into();
            Aes256::new(&rk.into())
        });
        BlockPermutation { rounds }
    }

    fn round(&self, i: usize, half: &[u8; 16]) -> [u8; 16] {
        let mut block = (*half).into();
        self.rounds[i].encrypt_block(&mut block);
        block.into()
    }

    pub fn encrypt_block(&self, input: &[u8; 32]) -> [u8; 32] {
        let mut left: [u8; 16] = input[..16].try_into().unwrap();
        let mut right: [u8; 16] = input[16..].try_into().unwrap();
        for i in 0..ROUNDS {
            let f = self.round(i, &right);
            let next: [u8; 16] = std::array::from_fn(|j| left[j] ^ f[j]);
            left = right;
            right = next;
        }
        let mut out = [0u8; 32];
        out[..16].copy_from_slice(&left);
        out[16..].copy_from_slice(&right);
        out
    }

    pub fn decrypt_block(&self, input: &[u8; 32]) -> [u8; 32] {
        let mut left: [u8; 16] = input[..16].try_into().unwrap();
        let mut right: [u8; 16] = input[16..].try_into().unwrap();
        for i in (0..ROUNDS).rev() {
            let f = self.round(i, &left);
            let prev: [u8; 16] = std::array::from_fn(|j| right[j] ^ f[j]);
            right = left;
            left = prev;
        }
        let mut out = [0u8; 32];
        out[..16].copy_from_slice(&left);
        out[16..].copy_from_slice(&right);
        out
    }

    pub fn encrypt(&self, x: Gf256) -> Gf256 {
        Gf256::from_bytes(&self.encrypt_block(&x.to_bytes()))
    }

    pub fn decrypt(&self, x: Gf256) -> Gf256 {
        Gf256::from_bytes(&self.decrypt_block(&x.to_bytes()))
    }

    fn keystream_xor(&self, data: &mut [u8]) {
        for (ctr, chunk) in data.chunks_mut(32).enumerate() {
            let mut block = [0u8; 32];
            block[24..].copy_from_slice(&(ctr as u64).to_be_bytes());
            let ks = self.encrypt_block(&block);
            for (d, k) in chunk.iter_mut().zip(ks) {
                *d ^= k;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SealError {
    #[error("ciphertext too short")]
    Truncated,
    #[error("invalid ephemeral point")]
    BadPoint,
    #[error("authentication tag mismatch")]
    BadTag,
}

const TAG_LEN: usize = 32;

/// Bytes [`seal`] adds to a plaintext.
pub fn seal_overhead(curve: &Curve) -> usize {
    curve.point_len() + TAG_LEN
}

fn derive_keys(curve: &Curve, shared: &Point) -> ([u8; 32], [u8; 32]) {
    let s = curve.compress(shared);
    let enc: [u8; 32] = Sha256::new()
        .chain_update(b"vanet-trs/ecies-enc")
        .chain_update(&s)
        .finalize()
        .into();
    let mac: [u8; 32] = Sha256::new()
        .chain_update(b"vanet-trs/ecies-mac")
        .chain_update(&s)
        .finalize()
        .into();
    (enc, mac)
}

fn tag(mac_key: &[u8; 32], data: &[u8]) -> [u8; TAG_LEN] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(mac_key).expect("any key length");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

/// Encrypts `plaintext` to `recipient`: `R || ciphertext || tag`.
pub fn seal<R: RngCore + ?Sized>(
    curve: &Curve,
    recipient: &Point,
    plaintext: &[u8],
    rng: &mut R,
) -> Vec<u8> {
    let eph = curve.random_scalar(rng);
    let eph_pub = curve.mul_generator(&eph);
    let shared = curve.mul(&eph, recipient);
    let (enc_key, mac_key) = derive_keys(curve, &shared);
    let mut out = curve.compress(&eph_pub);
    let start = out.len();
    out.extend_from_slice(plaintext);
    BlockPermutation::new(&enc_key).keystream_xor(&mut out[start..]);
    let t = tag(&mac_key, &out);
    out.extend_from_slice(&t);
    out
}

pub fn open(curve: &Curve, secret: &BigUint, sealed: &[u8]) -> Result<Vec<u8>, SealError> {
    let plen = curve.point_len();
    if sealed.len() < plen + TAG_LEN {
        return Err(SealError::Truncated);
    }
    let eph_pub = curve
        .decompress(&sealed[..plen])
        .map_err(|_| SealError::BadPoint)?;
    if eph_pub.is_infinity() {
        return Err(SealError::BadPoint);
    }
    let shared = curve.mul(secret, &eph_pub);
    let (enc_key, mac_key) = derive_keys(curve, &shared);
    let (body, received) = sealed.split_at(sealed.len() - TAG_LEN);
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&mac_key).expect("any key length");
    mac.update(body);
    mac.verify_slice(received).map_err(|_| SealError::BadTag)?;
    let mut plain = body[plen..].to_vec();
    BlockPermutation::new(&enc_key).keystream_xor(&mut plain);
    Ok(plain)
}
