//! EC-Elgamal signatures and key-less forgeries.
//!
//! A triple `(m, alpha, beta)` is valid for public key `PK` iff
//!
//! ```text
//! (m mod q) * P == H1(alpha) * PK + beta * alpha
//! ```
//!
//! Signing picks `c` and sets `alpha = cP`, `beta = (m - sk H1(alpha)) / c`.
//! Anyone can forge a valid triple for any `PK` without the key by picking
//! `a, b` and setting `alpha = aP + bPK`, `beta = -H1(alpha) / b`,
//! `m = a * beta`, but the forger cannot choose `m`.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;

use crate::curve::{Curve, Point};
use crate::error::DecodeError;
use crate::field::Gf256;
use crate::hash::h1;
use crate::wire::Reader;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElgamalTriple {
    /// Full 256-bit message value; reduced mod q only inside the curve equation.
    pub m: Gf256,
    pub alpha: Point,
    pub beta: BigUint,
}

fn message_scalar(curve: &Curve, m: &Gf256) -> BigUint {
    BigUint::from_bytes_be(&m.to_bytes()) % curve.order()
}

fn scalar_to_message(k: &BigUint) -> Gf256 {
    let raw = k.to_bytes_be();
    let mut buf = [0u8; 32];
    buf[32 - raw.len()..].copy_from_slice(&raw);
    Gf256::from_bytes(&buf)
}

/// Signs with a fixed nonce; `None` if `c` is degenerate (zero or
/// `H1(cP) = 0`).
pub fn sign_with_nonce(curve: &Curve, sk: &BigUint, m: Gf256, c: &BigUint) -> Option<ElgamalTriple> {
    let c_inv = curve.scalar_inv(c)?;
    let alpha = curve.mul_generator(c);
    let h = h1(curve, &alpha);
    if h.is_zero() {
        return None;
    }
    let q = curve.order();
    let sk_h = (sk * &h) % q;
    let diff = (message_scalar(curve, &m) + q - sk_h) % q;
    Some(ElgamalTriple {
        m,
        alpha,
        beta: (diff * c_inv) % q,
    })
}

pub fn sign<R: RngCore + ?Sized>(curve: &Curve, sk: &BigUint, m: Gf256, rng: &mut R) -> ElgamalTriple {
    loop {
        let c = curve.random_scalar(rng);
        if let Some(sig) = sign_with_nonce(curve, sk, m, &c) {
            return sig;
        }
    }
}

pub fn verify(curve: &Curve, pk: &Point, sig: &ElgamalTriple) -> bool {
    if sig.alpha.is_infinity() || !curve.is_on_curve(&sig.alpha) || &sig.beta >= curve.order() {
        return false;
    }
    let lhs = curve.mul_generator(&message_scalar(curve, &sig.m));
    let rhs = curve.mul_add(&h1(curve, &sig.alpha), pk, &sig.beta, &sig.alpha);
    lhs == rhs
}

/// Forgery from fixed `a, b`; `None` if either is zero or `H1(alpha) = 0`.
pub fn forge_with(curve: &Curve, pk: &Point, a: &BigUint, b: &BigUint) -> Option<ElgamalTriple> {
    let q = curve.order();
    if (a % q).is_zero() {
        return None;
    }
    let b_inv = curve.scalar_inv(b)?;
    let alpha = curve.mul_add(a, curve.generator(), b, pk);
    if alpha.is_infinity() {
        return None;
    }
    let h = h1(curve, &alpha);
    if h.is_zero() {
        return None;
    }
    let beta = curve.scalar_neg(&((b_inv * h) % q));
    let m = (a * &beta) % q;
    Some(ElgamalTriple {
        m: scalar_to_message(&m),
        alpha,
        beta,
    })
}

/// Random forgery against `pk`.
///
/// A forged `m` is always below q, while an honest replier's `m` is uniform
/// over 256 bits. For P-256 the statistical gap is about 2^-32.
pub fn forge<R: RngCore + ?Sized>(curve: &Curve, pk: &Point, rng: &mut R) -> ElgamalTriple {
    loop {
        let a = curve.random_scalar(rng);
        let b = curve.random_scalar(rng);
        if let Some(sig) = forge_with(curve, pk, &a, &b) {
            return sig;
        }
    }
}

impl ElgamalTriple {
    /// `m (32 bytes) || alpha (compressed) || beta (big-endian scalar)`.
    pub fn encode_into(&self, curve: &Curve, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.m.to_bytes());
        out.extend_from_slice(&curve.compress(&self.alpha));
        out.extend_from_slice(&curve.encode_scalar(&self.beta));
    }

    pub fn to_bytes(&self, curve: &Curve) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(curve));
        self.encode_into(curve, &mut out);
        out
    }

    pub fn encoded_len(curve: &Curve) -> usize {
        32 + curve.point_len() + curve.scalar_len()
    }

    pub(crate) fn decode(curve: &Curve, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(ElgamalTriple {
            m: r.field()?,
            alpha: r.point(curve)?,
            beta: r.scalar(curve)?,
        })
    }

    pub fn from_bytes(curve: &Curve, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let sig = Self::decode(curve, &mut r)?;
        r.finish()?;
        Ok(sig)
    }
}
