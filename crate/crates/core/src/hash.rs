//! The four domain-separated hash functions of the scheme, all SHA-256.
//!
//! * `H0`: identity -> 256 selector bits for the combined public key.
//! * `H1`: curve point -> scalar mod q.
//! * `H2`: message -> 256-bit symmetric key.
//! * `H3`: (t, r [, ephemeral key]) -> field element anchoring f(0).

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::curve::{Curve, Point};
use crate::field::Gf256;

/// Output width of `H0` in bits; also the length of the master key vectors.
pub const IDENTITY_HASH_BITS: usize = 256;

/// Hash algorithm identifier recorded in parameter files.
pub const HASH_ID_SHA256: u8 = 1;

fn tagged(tag: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(tag);
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Identity digest. Bit `i` (0-based) is bit `7 - i % 8` of byte `i / 8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityDigest(pub [u8; 32]);

impl IdentityDigest {
    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 8] >> (7 - i % 8)) & 1 == 1
    }
}

pub fn h0(id: &str) -> IdentityDigest {
    IdentityDigest(tagged(b"vanet-trs/H0", &[id.as_bytes()]))
}

pub fn h1(curve: &Curve, alpha: &Point) -> BigUint {
    let d = tagged(b"vanet-trs/H1", &[&curve.compress(alpha)]);
    BigUint::from_bytes_be(&d) % curve.order()
}

pub fn h2(msg: &[u8]) -> [u8; 32] {
    tagged(b"vanet-trs/H2", &[msg])
}

/// Anchor value f(0). `ephemeral` is the compressed initiator key in the
/// encrypted-reply mode.
pub fn h3(t: u32, r: u32, ephemeral: Option<&[u8]>) -> Gf256 {
    let d = tagged(
        b"vanet-trs/H3",
        &[&t.to_be_bytes(), &r.to_be_bytes(), ephemeral.unwrap_or(&[])],
    );
    Gf256::from_bytes(&d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_bits_are_msb_first() {
        let mut raw = [0u8; 32];
        raw[0] = 0b1000_0001;
        let d = IdentityDigest(raw);
        assert!(d.bit(0));
        assert!(!d.bit(1));
        assert!(d.bit(7));
        assert!(!d.bit(8));
    }

    #[test]
    fn anchor_binds_every_input() {
        let base = h3(3, 10, None);
        assert_ne!(base, h3(4, 10, None));
        assert_ne!(base, h3(3, 11, None));
        assert_ne!(base, h3(3, 10, Some(&[2u8; 33])));
        assert_eq!(base, h3(3, 10, None));
    }
}
