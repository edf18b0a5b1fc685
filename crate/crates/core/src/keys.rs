//! Combined-public-key (CPK) identity keys.
//!
//! The trusted authority samples a secret vector `X = (x_1..x_n)` and
//! publishes `Y_i = x_i * P`. The key of an identity is selected by the bits
//! `h_i` of `H0(id)`:
//!
//! ```text
//! sk_id = sum h_i * x_i  (mod q)        PK_id = sum h_i * Y_i
//! ```
//!
//! so anyone holding the public parameters can compute `PK_id`, and
//! `sk_id * P = PK_id` by linearity. The collusion-resistant variant adds a
//! per-user randomizer `mu`: `sk = sum h_i x_i + mu` and the user also gets
//! `D = mu * P`, verifying against `PK_id + D`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::cipher::CIPHER_ID_FEISTEL_AES;
use crate::curve::{Curve, CurveId, Point};
use crate::error::{DecodeError, KeyError};
use crate::hash::{h0, IdentityDigest, HASH_ID_SHA256, IDENTITY_HASH_BITS};
use crate::wire::Reader;

const PARAMS_MAGIC: &[u8; 4] = b"CPKP";
const MASTER_MAGIC: &[u8; 4] = b"CPKM";
const FILE_VERSION: u8 = 1;

/// Width of polynomial field elements, in bits.
pub const FIELD_BITS: usize = 256;

/// Public system parameters: curve, hash and cipher identifiers, and the
/// master public key vector `Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    curve: CurveId,
    field_bits: usize,
    hash_id: u8,
    cipher_id: u8,
    public_vector: Vec<Point>,
}

/// The authority's secret vector `X` with its public image `Y`.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKeyMaterial {
    curve: CurveId,
    secret_vector: Vec<BigUint>,
    public_vector: Vec<Point>,
}

impl fmt::Debug for MasterKeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterKeyMaterial")
            .field("curve", &self.curve)
            .field("n", &self.secret_vector.len())
            .finish_non_exhaustive()
    }
}

/// A vehicle's permanent identity and private key.
#[derive(Clone, PartialEq, Eq)]
pub struct IdentityKey {
    id: String,
    secret: BigUint,
    variant_point: Option<Point>,
}

impl fmt::Debug for IdentityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IdentityKey")
            .field("id", &self.id)
            .field("variant_point", &self.variant_point)
            .finish_non_exhaustive()
    }
}

impl IdentityKey {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn secret(&self) -> &BigUint {
        &self.secret
    }

    /// `D = mu * P` for keys issued by [`derive_private_v2`].
    pub fn variant_point(&self) -> Option<&Point> {
        self.variant_point.as_ref()
    }
}

/// Marker that must be passed to serialize secret key material.
#[derive(Clone, Copy, Debug)]
pub struct ExportSecrets;

/// Samples master key material of length `n` on P-256.
pub fn setup(n: usize, seed: u64) -> Result<(MasterKeyMaterial, SystemParams), KeyError> {
    setup_on(CurveId::P256, n, seed)
}

pub fn setup_on(
    curve_id: CurveId,
    n: usize,
    seed: u64,
) -> Result<(MasterKeyMaterial, SystemParams), KeyError> {
    if n != IDENTITY_HASH_BITS {
        return Err(KeyError::KeyVectorLength {
            expected: IDENTITY_HASH_BITS,
            got: n,
        });
    }
    let curve = curve_id.curve();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let secret_vector: Vec<BigUint> = (0..n).map(|_| curve.random_scalar(&mut rng)).collect();
    let public_vector: Vec<Point> = secret_vector
        .iter()
        .map(|x| curve.mul_generator(x))
        .collect();
    let material = MasterKeyMaterial {
        curve: curve_id,
        secret_vector,
        public_vector: public_vector.clone(),
    };
    Ok((material, SystemParams::new(curve_id, public_vector)))
}

impl SystemParams {
    fn new(curve: CurveId, public_vector: Vec<Point>) -> Self {
        SystemParams {
            curve,
            field_bits: FIELD_BITS,
            hash_id: HASH_ID_SHA256,
            cipher_id: CIPHER_ID_FEISTEL_AES,
            public_vector,
        }
    }

    pub fn curve_id(&self) -> CurveId {
        self.curve
    }

    pub fn curve(&self) -> &'static Curve {
        self.curve.curve()
    }

    /// Length of the key vectors (`n`).
    pub fn n(&self) -> usize {
        self.public_vector.len()
    }

    pub fn field_bits(&self) -> usize {
        self.field_bits
    }

    pub fn public_vector(&self) -> &[Point] {
        &self.public_vector
    }

    /// Versioned binary encoding: magic, version, curve id, n, l, hash id,
    /// cipher id, then `n` compressed points.
    pub fn to_bytes(&self) -> Vec<u8> {
        let curve = self.curve();
        let mut out = Vec::with_capacity(12 + self.n() * curve.point_len());
        out.extend_from_slice(PARAMS_MAGIC);
        out.push(FILE_VERSION);
        out.push(self.curve as u8);
        out.extend_from_slice(&(self.n() as u16).to_be_bytes());
        out.extend_from_slice(&(self.field_bits as u16).to_be_bytes());
        out.push(self.hash_id);
        out.push(self.cipher_id);
        for y in &self.public_vector {
            out.extend_from_slice(&curve.compress(y));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, KeyError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != PARAMS_MAGIC {
            return Err(DecodeError::BadMagic.into());
        }
        let version = r.u8()?;
        if version != FILE_VERSION {
            return Err(DecodeError::UnsupportedVersion(version).into());
        }
        let curve_id = CurveId::from_u8(r.u8()?)?;
        let n = r.u16()? as usize;
        let field_bits = r.u16()? as usize;
        let hash_id = r.u8()?;
        let cipher_id = r.u8()?;
        if n != IDENTITY_HASH_BITS {
            return Err(KeyError::KeyVectorLength {
                expected: IDENTITY_HASH_BITS,
                got: n,
            });
        }
        if field_bits != FIELD_BITS {
            return Err(DecodeError::InvalidField("field width").into());
        }
        if hash_id != HASH_ID_SHA256 || cipher_id != CIPHER_ID_FEISTEL_AES {
            return Err(DecodeError::InvalidField("algorithm identifier").into());
        }
        let curve = curve_id.curve();
        let public_vector = (0..n)
            .map(|_| r.point(curve))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        Ok(SystemParams::new(curve_id, public_vector))
    }
}

impl MasterKeyMaterial {
    pub fn curve(&self) -> &'static Curve {
        self.curve.curve()
    }

    pub fn secret_vector(&self) -> &[BigUint] {
        &self.secret_vector
    }

    pub fn public_vector(&self) -> &[Point] {
        &self.public_vector
    }

    pub fn params(&self) -> SystemParams {
        SystemParams::new(self.curve, self.public_vector.clone())
    }

    /// Secret-vector file: magic, version, curve id, n, then `n` scalars.
    pub fn to_bytes(&self, _confirm: ExportSecrets) -> Vec<u8> {
        let curve = self.curve();
        let mut out = Vec::new();
        out.extend_from_slice(MASTER_MAGIC);
        out.push(FILE_VERSION);
        out.push(self.curve as u8);
        out.extend_from_slice(&(self.secret_vector.len() as u16).to_be_bytes());
        for x in &self.secret_vector {
            out.extend_from_slice(&curve.encode_scalar(x));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, KeyError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MASTER_MAGIC {
            return Err(DecodeError::BadMagic.into());
        }
        let version = r.u8()?;
        if version != FILE_VERSION {
            return Err(DecodeError::UnsupportedVersion(version).into());
        }
        let curve_id = CurveId::from_u8(r.u8()?)?;
        let n = r.u16()? as usize;
        if n != IDENTITY_HASH_BITS {
            return Err(KeyError::KeyVectorLength {
                expected: IDENTITY_HASH_BITS,
                got: n,
            });
        }
        let curve = curve_id.curve();
        let secret_vector = (0..n)
            .map(|_| r.scalar(curve))
            .collect::<Result<Vec<_>, _>>()?;
        r.finish()?;
        if secret_vector.iter().any(|x| x.is_zero()) {
            return Err(DecodeError::InvalidScalar.into());
        }
        let public_vector = secret_vector.iter().map(|x| curve.mul_generator(x)).collect();
        Ok(MasterKeyMaterial {
            curve: curve_id,
            secret_vector,
            public_vector,
        })
    }
}

/// `sum h_i x_i mod q` for an explicit digest.
pub fn derive_private_from_digest(material: &MasterKeyMaterial, digest: &IdentityDigest) -> BigUint {
    let curve = material.curve();
    let sum = material
        .secret_vector
        .iter()
        .enumerate()
        .filter(|(i, _)| digest.bit(*i))
        .fold(BigUint::zero(), |acc, (_, x)| acc + x);
    sum % curve.order()
}

/// `sum h_j Y_j` for an explicit digest.
pub fn derive_public_from_digest(params: &SystemParams, digest: &IdentityDigest) -> Point {
    params.curve().sum(
        params
            .public_vector
            .iter()
            .enumerate()
            .filter(|(i, _)| digest.bit(*i))
            .map(|(_, y)| y),
    )
}

pub fn derive_private(material: &MasterKeyMaterial, id: &str) -> IdentityKey {
    IdentityKey {
        id: id.to_owned(),
        secret: derive_private_from_digest(material, &h0(id)),
        variant_point: None,
    }
}

pub fn derive_public(params: &SystemParams, id: &str) -> Point {
    derive_public_from_digest(params, &h0(id))
}

/// Collusion-resistant issuance with a fresh randomizer `mu`.
pub fn derive_private_v2<R: RngCore + ?Sized>(
    material: &MasterKeyMaterial,
    id: &str,
    rng: &mut R,
) -> IdentityKey {
    let mu = material.curve().random_scalar(rng);
    derive_private_v2_with(material, id, &mu)
}

/// Variant issuance with a caller-chosen randomizer (`mu = 0` gives the
/// basic key with `D` at infinity).
pub fn derive_private_v2_with(material: &MasterKeyMaterial, id: &str, mu: &BigUint) -> IdentityKey {
    let curve = material.curve();
    let base = derive_private_from_digest(material, &h0(id));
    IdentityKey {
        id: id.to_owned(),
        secret: (base + mu) % curve.order(),
        variant_point: Some(curve.mul_generator(mu)),
    }
}

/// Public key a verifier checks against: `PK_id`, plus `D` when present.
pub fn effective_public(params: &SystemParams, id: &str, variant_point: Option<&Point>) -> Point {
    let pk = derive_public(params, id);
    match variant_point {
        Some(d) => params.curve().add(&pk, d),
        None => pk,
    }
}
