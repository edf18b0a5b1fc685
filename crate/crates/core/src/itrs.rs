//! Interactive threshold ring signature.
//!
//! Four algorithms:
//!
//! 1. [`build_request`]: the initiator picks `r - t` fake identities, gives
//!    each a random nonzero index `gamma_i` and a forged Elgamal triple.
//! 2. [`build_reply`]: a replier interpolates the verification polynomial
//!    `f` through `(0, H3(t||r))` and every `(gamma_i, E_k(m_i))`, with
//!    `k = H2(msg)`. That fixes `deg f = r - t`. It then picks a fresh
//!    `gamma`, sets `m = E_k^-1(f(gamma))` and signs `m` with its own key.
//! 3. [`assemble`]: the initiator validates `t - 1` fractions, adds its own,
//!    and emits all `r` entries sorted by index.
//! 4. [`verify_ring`]: every Elgamal triple must verify against the
//!    identity's public key, and all `r + 1` points must lie on one
//!    polynomial of degree `r - t`.
//!
//! A forger cannot choose the message of a forged triple, so each point on
//! `f` beyond the `r - t + 1` that define it needs a real private key.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::cipher::BlockPermutation;
use crate::curve::{Curve, Point};
use crate::elgamal::{self, ElgamalTriple};
use crate::error::{DecodeError, FractionReject, SignError, VerifyError};
use crate::field::{BinaryField, Gf256, Polynomial};
use crate::hash::{h2, h3};
use crate::keys::{effective_public, IdentityKey, SystemParams};
use crate::wire::{put_string, Reader};

/// `r - t` must exceed this.
pub const MIN_FAKE_MEMBERS: u32 = 5;

const REQUEST_MAGIC: &[u8; 4] = b"TRRQ";
const FRACTION_MAGIC: &[u8; 4] = b"TRFR";
const ANNOUNCEMENT_MAGIC: &[u8; 4] = b"TRAN";
pub const FORMAT_VERSION: u8 = 1;

const FLAG_VARIANT_POINTS: u8 = 0b01;
const FLAG_EPHEMERAL_KEY: u8 = 0b10;

/// One ring member as it appears in requests and announcements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingEntry {
    pub id: String,
    pub gamma: Gf256,
    pub sig: ElgamalTriple,
    /// Randomizer point `D`, present only in collusion-resistant mode.
    pub variant_point: Option<Point>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignRequest {
    pub msg: Vec<u8>,
    pub t: u32,
    pub r: u32,
    /// The `r - t` forged members.
    pub fakes: Vec<RingEntry>,
    pub collusion_resistant: bool,
    /// Initiator's short-term key in encrypted-reply mode; bound into f(0).
    pub ephemeral_pk: Option<Point>,
}

/// A replier's contribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignFraction {
    pub replier_id: String,
    pub gamma: Gf256,
    pub sig: ElgamalTriple,
    pub variant_point: Option<Point>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingAnnouncement {
    pub msg: Vec<u8>,
    pub t: u32,
    pub entries: Vec<RingEntry>,
    pub collusion_resistant: bool,
    pub ephemeral_pk: Option<Point>,
}

#[derive(Clone, Debug, Default)]
pub struct RequestOptions {
    pub collusion_resistant: bool,
    pub ephemeral_pk: Option<Point>,
}

/// Source of fake ring identities.
pub trait IdentityGenerator {
    fn next_identity(&mut self, rng: &mut dyn RngCore) -> String;
}

impl<F: FnMut(&mut dyn RngCore) -> String> IdentityGenerator for F {
    fn next_identity(&mut self, rng: &mut dyn RngCore) -> String {
        self(rng)
    }
}

/// Plate-shaped identities such as `"KX-4821"`. Real vehicles in the
/// simulator draw from the same distribution.
pub fn plate_identity(rng: &mut dyn RngCore) -> String {
    let letters: String = (0..2)
        .map(|_| char::from(b'A' + rng.random_range(0..26u8)))
        .collect();
    format!("{letters}{}-{:04}", char::from(b'A' + rng.random_range(0..26u8)), rng.random_range(0..10_000u32))
}

/// Plate generator that never yields one of `exclude`.
pub struct PlateGenerator {
    exclude: HashSet<String>,
}

impl PlateGenerator {
    pub fn new() -> Self {
        PlateGenerator {
            exclude: HashSet::new(),
        }
    }

    pub fn excluding<I: IntoIterator<Item = String>>(ids: I) -> Self {
        PlateGenerator {
            exclude: ids.into_iter().collect(),
        }
    }
}

impl Default for PlateGenerator {
    fn default() -> Self {
        Self::new()
    }
}

impl IdentityGenerator for PlateGenerator {
    fn next_identity(&mut self, rng: &mut dyn RngCore) -> String {
        loop {
            let id = plate_identity(rng);
            if !self.exclude.contains(&id) {
                return id;
            }
        }
    }
}

fn check_threshold(t: u32, r: u32) -> Result<(), SignError> {
    if t == 0 {
        return Err(SignError::ZeroThreshold);
    }
    if r < t || r - t <= MIN_FAKE_MEMBERS {
        return Err(SignError::ThresholdTooClose { t, r });
    }
    Ok(())
}

fn anchor(curve: &Curve, t: u32, r: u32, ephemeral: Option<&Point>) -> Gf256 {
    let eph = ephemeral.map(|p| curve.compress(p));
    h3(t, r, eph.as_deref())
}

pub fn build_request<G, R>(
    params: &SystemParams,
    msg: &[u8],
    t: u32,
    r: u32,
    ids: &mut G,
    rng: &mut R,
) -> Result<SignRequest, SignError>
where
    G: IdentityGenerator + ?Sized,
    R: RngCore,
{
    build_request_with(params, msg, t, r, &RequestOptions::default(), ids, rng)
}

pub fn build_request_with<G, R>(
    params: &SystemParams,
    msg: &[u8],
    t: u32,
    r: u32,
    options: &RequestOptions,
    ids: &mut G,
    rng: &mut R,
) -> Result<SignRequest, SignError>
where
    G: IdentityGenerator + ?Sized,
    R: RngCore,
{
    check_threshold(t, r)?;
    let curve = params.curve();
    let count = (r - t) as usize;
    let mut seen_ids = HashSet::with_capacity(count);
    let mut seen_gammas = HashSet::with_capacity(count);
    let mut fakes = Vec::with_capacity(count);
    while fakes.len() < count {
        let id = ids.next_identity(rng);
        if !seen_ids.insert(id.clone()) {
            continue;
        }
        let gamma = loop {
            let g = Gf256::random_nonzero(rng);
            if seen_gammas.insert(g) {
                break g;
            }
        };
        let base = crate::keys::derive_public(params, &id);
        let (target, variant_point) = if options.collusion_resistant {
            let d = curve.mul_generator(&curve.random_scalar(rng));
            (curve.add(&base, &d), Some(d))
        } else {
            (base, None)
        };
        if target.is_infinity() {
            // identity with an all-zero digest; no forgery possible
            continue;
        }
        let sig = elgamal::forge(curve, &target, rng);
        fakes.push(RingEntry {
            id,
            gamma,
            sig,
            variant_point,
        });
    }
    Ok(SignRequest {
        msg: msg.to_vec(),
        t,
        r,
        fakes,
        collusion_resistant: options.collusion_resistant,
        ephemeral_pk: options.ephemeral_pk.clone(),
    })
}

/// A request whose verification polynomial has been reconstructed.
#[derive(Clone)]
pub struct PreparedRequest {
    request: SignRequest,
    cipher: Arc<BlockPermutation>,
    poly: Polynomial<Gf256>,
}

impl PreparedRequest {
    /// Full validation, as a replier must do before answering.
    pub fn check(params: &SystemParams, request: &SignRequest) -> Result<Self, SignError> {
        Self::structural(request)?;
        let curve = params.curve();
        for fake in &request.fakes {
            if fake.variant_point.is_some() != request.collusion_resistant {
                return Err(SignError::InvalidRequest("variant point mismatch"));
            }
            let pk = effective_public(params, &fake.id, fake.variant_point.as_ref());
            if !elgamal::verify(curve, &pk, &fake.sig) {
                return Err(SignError::InvalidRequest("forgery does not verify"));
            }
        }
        Self::trusted(params, request)
    }

    /// Skips forgery verification; for the initiator's own requests.
    pub fn trusted(params: &SystemParams, request: &SignRequest) -> Result<Self, SignError> {
        Self::structural(request)?;
        let curve = params.curve();
        let cipher = BlockPermutation::new(&h2(&request.msg));
        let mut points = Vec::with_capacity(request.fakes.len() + 1);
        points.push((
            Gf256::ZERO,
            anchor(curve, request.t, request.r, request.ephemeral_pk.as_ref()),
        ));
        points.extend(
            request
                .fakes
                .iter()
                .map(|f| (f.gamma, cipher.encrypt(f.sig.m))),
        );
        let poly = Polynomial::interpolate(&points)
            .map_err(|_| SignError::InvalidRequest("indices collide"))?;
        Ok(PreparedRequest {
            request: request.clone(),
            cipher: Arc::new(cipher),
            poly,
        })
    }

    fn structural(request: &SignRequest) -> Result<(), SignError> {
        check_threshold(request.t, request.r)?;
        if request.fakes.len() != (request.r - request.t) as usize {
            return Err(SignError::InvalidRequest("wrong number of fake members"));
        }
        let mut ids = HashSet::new();
        let mut gammas = HashSet::new();
        for f in &request.fakes {
            if f.gamma.is_zero() {
                return Err(SignError::InvalidRequest("zero index"));
            }
            if !gammas.insert(f.gamma) {
                return Err(SignError::InvalidRequest("indices collide"));
            }
            if !ids.insert(f.id.as_str()) {
                return Err(SignError::InvalidRequest("duplicate fake identity"));
            }
        }
        Ok(())
    }

    pub fn request(&self) -> &SignRequest {
        &self.request
    }

    pub fn polynomial(&self) -> &Polynomial<Gf256> {
        &self.poly
    }

    fn fake_has_id(&self, id: &str) -> bool {
        self.request.fakes.iter().any(|f| f.id == id)
    }

    fn fake_has_gamma(&self, gamma: &Gf256) -> bool {
        self.request.fakes.iter().any(|f| &f.gamma == gamma)
    }

    /// Signature fraction for `key`, avoiding the fake indices and `taken`.
    pub fn reply<R: RngCore>(
        &self,
        params: &SystemParams,
        key: &IdentityKey,
        taken: &HashSet<Gf256>,
        rng: &mut R,
    ) -> Result<SignFraction, SignError> {
        if self.fake_has_id(key.id()) {
            return Err(SignError::IdCollision);
        }
        if key.variant_point().is_some() != self.request.collusion_resistant {
            return Err(SignError::VariantMismatch);
        }
        let gamma = loop {
            let g = Gf256::random_nonzero(rng);
            if !self.fake_has_gamma(&g) && !taken.contains(&g) {
                break g;
            }
        };
        let m = self.cipher.decrypt(self.poly.eval(gamma));
        let sig = elgamal::sign(params.curve(), key.secret(), m, rng);
        Ok(SignFraction {
            replier_id: key.id().to_owned(),
            gamma,
            sig,
            variant_point: key.variant_point().cloned(),
        })
    }

    pub fn validate(&self, params: &SystemParams, fraction: &SignFraction) -> Result<(), FractionReject> {
        if fraction.gamma.is_zero() {
            return Err(FractionReject::ZeroGamma);
        }
        if self.fake_has_gamma(&fraction.gamma) {
            return Err(FractionReject::GammaCollision);
        }
        if self.fake_has_id(&fraction.replier_id) {
            return Err(FractionReject::IdCollision);
        }
        if fraction.variant_point.is_some() != self.request.collusion_resistant {
            return Err(FractionReject::VariantMismatch);
        }
        if self.cipher.encrypt(fraction.sig.m) != self.poly.eval(fraction.gamma) {
            return Err(FractionReject::OffPolynomial);
        }
        let pk = effective_public(params, &fraction.replier_id, fraction.variant_point.as_ref());
        if !elgamal::verify(params.curve(), &pk, &fraction.sig) {
            return Err(FractionReject::BadSignature);
        }
        Ok(())
    }

    /// Combines `t - 1` usable fractions (in order; the rest are spares) with
    /// the initiator's own fraction and the fakes.
    pub fn assemble<R: RngCore>(
        &self,
        params: &SystemParams,
        own_key: &IdentityKey,
        fractions: &[SignFraction],
        rng: &mut R,
    ) -> Result<RingAnnouncement, SignError> {
        let needed = (self.request.t - 1) as usize;
        let mut accepted: Vec<&SignFraction> = Vec::with_capacity(needed);
        let mut ids: HashSet<&str> = HashSet::from([own_key.id()]);
        let mut gammas: HashSet<Gf256> = HashSet::new();
        let mut rejected = Vec::new();
        for fr in fractions {
            if accepted.len() == needed {
                break;
            }
            let verdict = if ids.contains(fr.replier_id.as_str()) {
                Err(FractionReject::DuplicateReplier)
            } else if gammas.contains(&fr.gamma) {
                Err(FractionReject::GammaReused)
            } else {
                self.validate(params, fr)
            };
            match verdict {
                Ok(()) => {
                    ids.insert(&fr.replier_id);
                    gammas.insert(fr.gamma);
                    accepted.push(fr);
                }
                Err(reason) => rejected.push((fr.replier_id.clone(), reason)),
            }
        }
        if accepted.len() < needed {
            return Err(SignError::InsufficientFractions {
                needed,
                usable: accepted.len(),
                rejected,
            });
        }
        let own = self.reply(params, own_key, &gammas, rng)?;

        let mut entries: Vec<RingEntry> = self.request.fakes.clone();
        entries.extend(accepted.into_iter().chain(std::iter::once(&own)).map(|f| RingEntry {
            id: f.replier_id.clone(),
            gamma: f.gamma,
            sig: f.sig.clone(),
            variant_point: f.variant_point.clone(),
        }));
        entries.sort_by_key(|e| e.gamma.to_bytes());
        Ok(RingAnnouncement {
            msg: self.request.msg.clone(),
            t: self.request.t,
            entries,
            collusion_resistant: self.request.collusion_resistant,
            ephemeral_pk: self.request.ephemeral_pk.clone(),
        })
    }
}

pub fn build_reply<R: RngCore>(
    params: &SystemParams,
    request: &SignRequest,
    key: &IdentityKey,
    rng: &mut R,
) -> Result<SignFraction, SignError> {
    PreparedRequest::check(params, request)?.reply(params, key, &HashSet::new(), rng)
}

pub fn validate_fraction(
    params: &SystemParams,
    request: &SignRequest,
    fraction: &SignFraction,
) -> Result<(), FractionReject> {
    match PreparedRequest::trusted(params, request) {
        Ok(prepared) => prepared.validate(params, fraction),
        Err(_) => Err(FractionReject::OffPolynomial),
    }
}

pub fn assemble<R: RngCore>(
    params: &SystemParams,
    request: &SignRequest,
    own_key: &IdentityKey,
    fractions: &[SignFraction],
    rng: &mut R,
) -> Result<RingAnnouncement, SignError> {
    PreparedRequest::check(params, request)?.assemble(params, own_key, fractions, rng)
}

impl RingAnnouncement {
    pub fn r(&self) -> u32 {
        self.entries.len() as u32
    }

    fn check_structure(&self) -> Result<(), VerifyError> {
        let r = self.r();
        if self.t == 0 {
            return Err(VerifyError::Structure("zero threshold"));
        }
        if r < self.t || r - self.t <= MIN_FAKE_MEMBERS {
            return Err(VerifyError::Structure("ring too small for threshold"));
        }
        let mut ids = HashSet::new();
        let mut gammas = HashSet::new();
        for e in &self.entries {
            if e.gamma.is_zero() {
                return Err(VerifyError::Structure("zero index"));
            }
            if !gammas.insert(e.gamma) {
                return Err(VerifyError::Structure("repeated index"));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(VerifyError::Structure("repeated identity"));
            }
            if e.variant_point.is_some() != self.collusion_resistant {
                return Err(VerifyError::Structure("variant point mismatch"));
            }
        }
        Ok(())
    }

    /// Indices of the `r - t` entries used to rebuild the polynomial,
    /// drawn pseudo-randomly from the announcement's own encoding.
    pub fn reconstruction_subset(&self, curve: &Curve) -> Vec<usize> {
        let seed: [u8; 32] = Sha256::digest(self.to_bytes(curve)).into();
        let mut rng = ChaCha20Rng::from_seed(seed);
        let r = self.entries.len();
        let k = r.saturating_sub(self.t as usize);
        sample(&mut rng, r, k).into_vec()
    }
}

/// Verifies an announcement.
pub fn verify_ring(params: &SystemParams, ann: &RingAnnouncement) -> Result<(), VerifyError> {
    ann.check_structure()?;
    let subset = ann.reconstruction_subset(params.curve());
    verify_ring_with_subset(params, ann, &subset)
}

/// [`verify_ring`] with an explicit choice of the `r - t` reconstruction
/// entries.
pub fn verify_ring_with_subset(
    params: &SystemParams,
    ann: &RingAnnouncement,
    subset: &[usize],
) -> Result<(), VerifyError> {
    ann.check_structure()?;
    let curve = params.curve();
    let r = ann.entries.len();
    let degree = (ann.r() - ann.t) as usize;
    let mut chosen = vec![false; r];
    for &i in subset {
        if i >= r || chosen[i] {
            return Err(VerifyError::Structure("bad reconstruction subset"));
        }
        chosen[i] = true;
    }
    if subset.len() != degree {
        return Err(VerifyError::Structure("bad reconstruction subset"));
    }

    for (i, e) in ann.entries.iter().enumerate() {
        let pk = effective_public(params, &e.id, e.variant_point.as_ref());
        if pk.is_infinity() || !elgamal::verify(curve, &pk, &e.sig) {
            return Err(VerifyError::Signature(i));
        }
    }

    let cipher = BlockPermutation::new(&h2(&ann.msg));
    let mut points = Vec::with_capacity(degree + 1);
    points.push((Gf256::ZERO, anchor(curve, ann.t, ann.r(), ann.ephemeral_pk.as_ref())));
    points.extend(
        subset
            .iter()
            .map(|&i| (ann.entries[i].gamma, cipher.encrypt(ann.entries[i].sig.m))),
    );
    let poly = Polynomial::interpolate(&points).map_err(|_| VerifyError::Polynomial)?;
    if poly.degree() != Some(degree) {
        return Err(VerifyError::Polynomial);
    }
    let consistent = ann
        .entries
        .iter()
        .enumerate()
        .filter(|(i, _)| !chosen[*i])
        .all(|(_, e)| poly.eval(e.gamma) == cipher.encrypt(e.sig.m));
    if consistent {
        Ok(())
    } else {
        Err(VerifyError::Polynomial)
    }
}

// ---- encodings ----

fn put_entry(curve: &Curve, out: &mut Vec<u8>, id: &str, gamma: &Gf256, sig: &ElgamalTriple, d: Option<&Point>) {
    put_string(out, id);
    out.extend_from_slice(&gamma.to_bytes());
    sig.encode_into(curve, out);
    if let Some(d) = d {
        out.extend_from_slice(&curve.compress(d));
    }
}

fn read_entry(curve: &Curve, r: &mut Reader<'_>, with_point: bool) -> Result<RingEntry, DecodeError> {
    let id = r.string()?;
    let gamma = r.field()?;
    let sig = ElgamalTriple::decode(curve, r)?;
    let variant_point = if with_point { Some(r.point(curve)?) } else { None };
    Ok(RingEntry {
        id,
        gamma,
        sig,
        variant_point,
    })
}

fn read_header(r: &mut Reader<'_>, magic: &[u8; 4]) -> Result<u8, DecodeError> {
    if r.take(4)? != magic {
        return Err(DecodeError::BadMagic);
    }
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(DecodeError::UnsupportedVersion(version));
    }
    let flags = r.u8()?;
    if flags & !(FLAG_VARIANT_POINTS | FLAG_EPHEMERAL_KEY) != 0 {
        return Err(DecodeError::InvalidField("unknown flags"));
    }
    Ok(flags)
}

fn flags(variant: bool, ephemeral: bool) -> u8 {
    (if variant { FLAG_VARIANT_POINTS } else { 0 }) | (if ephemeral { FLAG_EPHEMERAL_KEY } else { 0 })
}

fn read_msg(r: &mut Reader<'_>) -> Result<Vec<u8>, DecodeError> {
    let len = r.u32()? as usize;
    if len > r.remaining() {
        return Err(DecodeError::Truncated);
    }
    Ok(r.take(len)?.to_vec())
}

/// Guards allocation against absurd counts in hostile input.
fn check_count(count: u32, r: &Reader<'_>) -> Result<usize, DecodeError> {
    let count = count as usize;
    if count > r.remaining() {
        return Err(DecodeError::Truncated);
    }
    Ok(count)
}

impl SignRequest {
    pub fn to_bytes(&self, curve: &Curve) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(REQUEST_MAGIC);
        out.push(FORMAT_VERSION);
        out.push(flags(self.collusion_resistant, self.ephemeral_pk.is_some()));
        out.extend_from_slice(&(self.msg.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.msg);
        out.extend_from_slice(&self.t.to_be_bytes());
        out.extend_from_slice(&self.r.to_be_bytes());
        for f in &self.fakes {
            put_entry(curve, &mut out, &f.id, &f.gamma, &f.sig, f.variant_point.as_ref());
        }
        if let Some(pk) = &self.ephemeral_pk {
            out.extend_from_slice(&curve.compress(pk));
        }
        out
    }

    pub(crate) fn decode(curve: &Curve, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let flags = read_header(r, REQUEST_MAGIC)?;
        let msg = read_msg(r)?;
        let t = r.u32()?;
        let ring = r.u32()?;
        let count = ring
            .checked_sub(t)
            .ok_or(DecodeError::InvalidField("threshold exceeds ring size"))?;
        let count = check_count(count, r)?;
        let fakes = (0..count)
            .map(|_| read_entry(curve, r, flags & FLAG_VARIANT_POINTS != 0))
            .collect::<Result<Vec<_>, _>>()?;
        let ephemeral_pk = if flags & FLAG_EPHEMERAL_KEY != 0 {
            Some(r.point(curve)?)
        } else {
            None
        };
        Ok(SignRequest {
            msg,
            t,
            r: ring,
            fakes,
            collusion_resistant: flags & FLAG_VARIANT_POINTS != 0,
            ephemeral_pk,
        })
    }

    pub fn from_bytes(curve: &Curve, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let v = Self::decode(curve, &mut r)?;
        r.finish()?;
        Ok(v)
    }
}

impl SignFraction {
    pub fn to_bytes(&self, curve: &Curve) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(FRACTION_MAGIC);
        out.push(FORMAT_VERSION);
        out.push(flags(self.variant_point.is_some(), false));
        put_entry(curve, &mut out, &self.replier_id, &self.gamma, &self.sig, self.variant_point.as_ref());
        out
    }

    pub(crate) fn decode(curve: &Curve, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let flags = read_header(r, FRACTION_MAGIC)?;
        if flags & FLAG_EPHEMERAL_KEY != 0 {
            return Err(DecodeError::InvalidField("unexpected flag"));
        }
        let e = read_entry(curve, r, flags & FLAG_VARIANT_POINTS != 0)?;
        Ok(SignFraction {
            replier_id: e.id,
            gamma: e.gamma,
            sig: e.sig,
            variant_point: e.variant_point,
        })
    }

    pub fn from_bytes(curve: &Curve, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let v = Self::decode(curve, &mut r)?;
        r.finish()?;
        Ok(v)
    }
}

impl RingAnnouncement {
    /// Versioned encoding: magic, version, flags, msg length and bytes, t,
    /// r, r entries (`id-len || id || gamma || m || alpha || beta [|| D]`),
    /// then the ephemeral key if flagged.
    pub fn to_bytes(&self, curve: &Curve) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(ANNOUNCEMENT_MAGIC);
        out.push(FORMAT_VERSION);
        out.push(flags(self.collusion_resistant, self.ephemeral_pk.is_some()));
        out.extend_from_slice(&(self.msg.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.msg);
        out.extend_from_slice(&self.t.to_be_bytes());
        out.extend_from_slice(&self.r().to_be_bytes());
        for e in &self.entries {
            put_entry(curve, &mut out, &e.id, &e.gamma, &e.sig, e.variant_point.as_ref());
        }
        if let Some(pk) = &self.ephemeral_pk {
            out.extend_from_slice(&curve.compress(pk));
        }
        out
    }

    pub(crate) fn decode(curve: &Curve, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let flags = read_header(r, ANNOUNCEMENT_MAGIC)?;
        let msg = read_msg(r)?;
        let t = r.u32()?;
        let count = r.u32()?;
        let count = check_count(count, r)?;
        let entries = (0..count)
            .map(|_| read_entry(curve, r, flags & FLAG_VARIANT_POINTS != 0))
            .collect::<Result<Vec<_>, _>>()?;
        let ephemeral_pk = if flags & FLAG_EPHEMERAL_KEY != 0 {
            Some(r.point(curve)?)
        } else {
            None
        };
        Ok(RingAnnouncement {
            msg,
            t,
            entries,
            collusion_resistant: flags & FLAG_VARIANT_POINTS != 0,
            ephemeral_pk,
        })
    }

    pub fn from_bytes(curve: &Curve, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let v = Self::decode(curve, &mut r)?;
        r.finish()?;
        Ok(v)
    }
}

/// Encoded size of one ring entry.
pub fn entry_len(curve: &Curve, id_len: usize, variant: bool) -> usize {
    2 + id_len + 32 + ElgamalTriple::encoded_len(curve) + if variant { curve.point_len() } else { 0 }
}
