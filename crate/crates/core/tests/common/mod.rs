//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls the arithmetic it is used to check.

#![allow(dead_code)]

use std::collections::HashSet;

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vanet_trs::curve::{CurveId, Point};
use vanet_trs::itrs::{build_request_with, PlateGenerator, PreparedRequest, RequestOptions, RingEntry};
use vanet_trs::keys::{derive_private, derive_private_v2, setup_on};
use vanet_trs::{Gf256, IdentityKey, MasterKeyMaterial, RingAnnouncement, SignRequest, SystemParams};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

// ---- GF(2)[x], one bit at a time ----

/// Polynomial over GF(2); bit i of the vector is the coefficient of x^i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Poly(Vec<bool>);

impl Gf2Poly {
    pub fn from_exponents(exps: &[usize]) -> Self {
        let mut bits = vec![false; exps.iter().max().map_or(0, |m| m + 1)];
        for &e in exps {
            bits[e] ^= true;
        }
        Gf2Poly(bits).trimmed()
    }

    pub fn from_bytes_be(bytes: &[u8]) -> Self {
        let n = bytes.len() * 8;
        let bits = (0..n)
            .map(|i| (bytes[bytes.len() - 1 - i / 8] >> (i % 8)) & 1 == 1)
            .collect();
        Gf2Poly(bits).trimmed()
    }

    pub fn to_bytes_be(&self, len: usize) -> Vec<u8> {
        let mut out = vec![0u8; len];
        for (i, &b) in self.0.iter().enumerate() {
            if b {
                out[len - 1 - i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    fn trimmed(mut self) -> Self {
        while self.0.last() == Some(&false) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let bits = (0..n)
            .map(|i| self.0.get(i).copied().unwrap_or(false) ^ other.0.get(i).copied().unwrap_or(false))
            .collect();
        Gf2Poly(bits).trimmed()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Gf2Poly(vec![]);
        }
        let mut bits = vec![false; self.0.len() + other.0.len()];
        for (i, &a) in self.0.iter().enumerate() {
            if !a {
                continue;
            }
            for (j, &b) in other.0.iter().enumerate() {
                bits[i + j] ^= b;
            }
        }
        Gf2Poly(bits).trimmed()
    }

    /// Remainder of long division.
    pub fn rem(&self, modulus: &Self) -> Self {
        let d = modulus.degree().expect("division by zero polynomial");
        let mut bits = self.0.clone();
        while bits.len() > d {
            let top = bits.len() - 1;
            if bits[top] {
                let shift = top - d;
                for (k, &m) in modulus.0.iter().enumerate() {
                    bits[shift + k] ^= m;
                }
            }
            bits.pop();
        }
        Gf2Poly(bits).trimmed()
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }
}

pub fn gf256_modulus() -> Gf2Poly {
    Gf2Poly::from_exponents(&[256, 10, 5, 2, 0])
}

/// Product in GF(2^256) computed by schoolbook multiplication and long
/// division by the field modulus.
pub fn gf256_oracle_mul(a: Gf256, b: Gf256) -> Gf256 {
    let p = Gf2Poly::from_bytes_be(&a.to_bytes()).mul(&Gf2Poly::from_bytes_be(&b.to_bytes()));
    let r = p.rem(&gf256_modulus());
    Gf256::from_bytes(&r.to_bytes_be(32).try_into().unwrap())
}

/// Rabin's test: f of degree n is irreducible iff x^(2^n) = x mod f and
/// gcd(x^(2^(n/p)) - x, f) = 1 for every prime p dividing n.
pub fn rabin_irreducible(f: &Gf2Poly) -> bool {
    let n = f.degree().expect("nonzero");
    let x = Gf2Poly::from_exponents(&[1]);
    let mut primes = Vec::new();
    let mut m = n;
    let mut p = 2;
    while m > 1 {
        if m.is_multiple_of(p) {
            primes.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    let frobenius = |k: usize| {
        let mut acc = x.clone();
        for _ in 0..k {
            acc = acc.mul(&acc).rem(f);
        }
        acc
    };
    if frobenius(n) != x.rem(f) {
        return false;
    }
    primes.iter().all(|&p| {
        let g = frobenius(n / p).add(&x).gcd(f);
        g.degree() == Some(0)
    })
}

// ---- GF(2^16) ----

pub const GF16_POLY: u32 = 0x1_002B;

/// Carry-less product then long division.
pub fn gf16_oracle_mul(a: u16, b: u16) -> u16 {
    let mut prod: u32 = 0;
    for i in 0..16 {
        if (b >> i) & 1 == 1 {
            prod ^= (a as u32) << i;
        }
    }
    for bit in (16..32).rev() {
        if (prod >> bit) & 1 == 1 {
            prod ^= GF16_POLY << (bit - 16);
        }
    }
    prod as u16
}

/// Inverse by trying every nonzero element.
pub fn gf16_inverse_search(a: u16) -> Option<u16> {
    (1..=u16::MAX).find(|&b| gf16_oracle_mul(a, b) == 1)
}

/// `a^(2^16 - 2)` by square-and-multiply on the oracle product.
pub fn gf16_oracle_inv(a: u16) -> u16 {
    let mut acc = 1u16;
    let mut base = a;
    let mut e: u32 = (1 << 16) - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = gf16_oracle_mul(acc, base);
        }
        base = gf16_oracle_mul(base, base);
        e >>= 1;
    }
    acc
}

/// Solves the Vandermonde system `sum_j c_j x_i^j = y_i` by Gauss-Jordan
/// elimination. `mul`, `inv` and `zero`/`one` describe the field.
#[allow(clippy::needless_range_loop)]
pub fn vandermonde_solve<T: Copy + PartialEq + std::ops::Add<Output = T>>(
    points: &[(T, T)],
    zero: T,
    one: T,
    mul: impl Fn(T, T) -> T,
    inv: impl Fn(T) -> T,
) -> Vec<T> {
    let n = points.len();
    let mut m: Vec<Vec<T>> = points
        .iter()
        .map(|&(x, y)| {
            let mut row = Vec::with_capacity(n + 1);
            let mut p = one;
            for _ in 0..n {
                row.push(p);
                p = mul(p, x);
            }
            row.push(y);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| m[r][col] != zero).expect("singular system");
        m.swap(col, pivot);
        let scale = inv(m[col][col]);
        for k in col..=n {
            m[col][k] = mul(m[col][k], scale);
        }
        for r in 0..n {
            if r != col && m[r][col] != zero {
                let f = m[r][col];
                for k in col..=n {
                    let sub = mul(f, m[col][k]);
                    m[r][k] = m[r][k] + sub;
                }
            }
        }
    }
    let mut coeffs: Vec<T> = m.iter().map(|row| row[n]).collect();
    while coeffs.last() == Some(&zero) {
        coeffs.pop();
    }
    coeffs
}

// ---- toy curve y^2 = x^3 + x + 4 over F_97 ----

pub const TOY_P: i64 = 97;
pub const TOY_Q: i64 = 89;

pub type ToyPoint = Option<(i64, i64)>;

fn md(v: i64, m: i64) -> i64 {
    v.rem_euclid(m)
}

/// Inverse mod m by trying every candidate.
pub fn brute_inv(a: i64, m: i64) -> i64 {
    (1..m).find(|&b| md(a * b, m) == 1).expect("not invertible")
}

pub fn toy_points() -> Vec<ToyPoint> {
    let mut out = vec![None];
    for x in 0..TOY_P {
        for y in 0..TOY_P {
            if md(y * y - (x * x * x + x + 4), TOY_P) == 0 {
                out.push(Some((x, y)));
            }
        }
    }
    out
}

pub fn toy_add(a: ToyPoint, b: ToyPoint) -> ToyPoint {
    let (Some((x1, y1)), Some((x2, y2))) = (a, b) else {
        return a.or(b);
    };
    if x1 == x2 && md(y1 + y2, TOY_P) == 0 {
        return None;
    }
    let lambda = if (x1, y1) == (x2, y2) {
        md((3 * x1 * x1 + 1) * brute_inv(md(2 * y1, TOY_P), TOY_P), TOY_P)
    } else {
        md((y2 - y1) * brute_inv(md(x2 - x1, TOY_P), TOY_P), TOY_P)
    };
    let x3 = md(lambda * lambda - x1 - x2, TOY_P);
    let y3 = md(lambda * (x1 - x3) - y1, TOY_P);
    Some((x3, y3))
}

/// `k` repeated additions.
pub fn toy_mul(k: i64, p: ToyPoint) -> ToyPoint {
    let mut acc = None;
    for _ in 0..md(k, TOY_Q) {
        acc = toy_add(acc, p);
    }
    acc
}

pub const TOY_G: ToyPoint = Some((0, 2));

pub fn to_lib(p: ToyPoint) -> Point {
    match p {
        None => Point::Infinity,
        Some((x, y)) => Point::Affine {
            x: BigUint::from(x as u64),
            y: BigUint::from(y as u64),
        },
    }
}

pub fn from_lib(p: &Point) -> ToyPoint {
    match p {
        Point::Infinity => None,
        Point::Affine { x, y } => Some((
            x.to_u64_digits().first().copied().unwrap_or(0) as i64,
            y.to_u64_digits().first().copied().unwrap_or(0) as i64,
        )),
    }
}

/// Message value reduced mod the toy group order, from its byte encoding.
pub fn toy_message_scalar(m: &Gf256) -> i64 {
    m.to_bytes().iter().fold(0i64, |acc, &b| md(acc * 256 + b as i64, TOY_Q))
}

// ---- anonymity ----

/// Fraction of the C(r, t) equally likely guesses that contain at least `j`
/// of the `t` signers, found by listing every guess.
pub fn anonymity_enumeration(t: u32, r: u32, j: u32) -> (u64, u64) {
    let signers: u32 = (1u32 << t) - 1;
    let mut hits = 0;
    let mut total = 0;
    for guess in 0u32..(1 << r) {
        if guess.count_ones() != t {
            continue;
        }
        total += 1;
        if (guess & signers).count_ones() >= j {
            hits += 1;
        }
    }
    (hits, total)
}

// ---- protocol fixtures ----

pub struct Fixture {
    pub material: MasterKeyMaterial,
    pub params: SystemParams,
}

pub fn p256_fixture(seed: u64) -> Fixture {
    let (material, params) = setup_on(CurveId::P256, 256, seed).unwrap();
    Fixture { material, params }
}

pub fn toy_fixture(seed: u64) -> Fixture {
    let (material, params) = setup_on(CurveId::Toy97, 256, seed).unwrap();
    Fixture { material, params }
}

/// One honest run: a request by `keys[0]`, fractions from `keys[1..t]`.
pub struct Run {
    pub request: SignRequest,
    pub keys: Vec<IdentityKey>,
    pub announcement: RingAnnouncement,
}

pub fn signer_keys<R: RngCore>(fx: &Fixture, t: u32, variant: bool, tag: &str, rng: &mut R) -> Vec<IdentityKey> {
    (0..t)
        .map(|i| {
            let id = format!("{tag}-{i:03}");
            if variant {
                derive_private_v2(&fx.material, &id, rng)
            } else {
                derive_private(&fx.material, &id)
            }
        })
        .collect()
}

pub fn honest_run<R: RngCore>(fx: &Fixture, msg: &[u8], t: u32, r: u32, variant: bool, rng: &mut R) -> Run {
    let keys = signer_keys(fx, t, variant, "SIGNER", rng);
    let options = RequestOptions {
        collusion_resistant: variant,
        ephemeral_pk: None,
    };
    let mut ids = PlateGenerator::excluding(keys.iter().map(|k| k.id().to_owned()));
    let request = build_request_with(&fx.params, msg, t, r, &options, &mut ids, rng).unwrap();
    let mut fractions = Vec::new();
    for key in &keys[1..] {
        // each replier checks the request independently
        let prepared = PreparedRequest::check(&fx.params, &request).unwrap();
        fractions.push(prepared.reply(&fx.params, key, &HashSet::new(), rng).unwrap());
    }
    let announcement = PreparedRequest::trusted(&fx.params, &request)
        .unwrap()
        .assemble(&fx.params, &keys[0], &fractions, rng)
        .unwrap();
    Run {
        request,
        keys,
        announcement,
    }
}

pub fn random_msg<R: Rng>(rng: &mut R) -> Vec<u8> {
    let len = rng.random_range(1..200);
    (0..len).map(|_| rng.random()).collect()
}

/// Every single-field change to an announcement, each labelled.
pub fn single_field_mutations<R: RngCore>(
    params: &SystemParams,
    ann: &RingAnnouncement,
    rng: &mut R,
) -> Vec<(&'static str, RingAnnouncement)> {
    let curve = params.curve();
    let mut out = Vec::new();
    let i = (rng.next_u32() as usize) % ann.entries.len();
    let mut push = |name, f: &dyn Fn(&mut RingAnnouncement)| {
        let mut a = ann.clone();
        f(&mut a);
        out.push((name, a));
    };
    let byte = (rng.next_u32() as usize) % ann.msg.len();
    let bit = 1u8 << (rng.next_u32() % 8);
    push("msg", &|a| a.msg[byte] ^= bit);
    push("msg-extend", &|a| a.msg.push(0));
    push("t+1", &|a| a.t += 1);
    push("t-1", &|a| a.t -= 1);
    push("r-1", &|a| {
        a.entries.remove(i);
    });
    push("id", &|a| a.entries[i].id.push('X'));
    let gamma_bit = Gf256::from_u64(1u64 << (rng.next_u32() % 64));
    push("gamma", &|a| a.entries[i].gamma += gamma_bit);
    let m_bit = Gf256::from_u64(1u64 << (rng.next_u32() % 64));
    push("m", &|a| a.entries[i].sig.m += m_bit);
    let other = curve.mul_generator(&curve.random_scalar(rng));
    push("alpha", &|a| a.entries[i].sig.alpha = other.clone());
    push("beta", &|a| {
        let b = &a.entries[i].sig.beta + 1u32;
        a.entries[i].sig.beta = b % curve.order();
    });
    let j = (i + 1) % ann.entries.len();
    push("swap-ids", &|a| {
        let id = a.entries[i].id.clone();
        a.entries[i].id = a.entries[j].id.clone();
        a.entries[j].id = id;
    });
    if ann.collusion_resistant {
        push("variant-point", &|a| a.entries[i].variant_point = Some(other.clone()));
    }
    out
}

/// Adds a forged member in place of a missing signer: `signers < t` real
/// keys, padded with forgeries up to `r` entries.
pub fn sybil_announcement<R: RngCore>(
    fx: &Fixture,
    msg: &[u8],
    t: u32,
    r: u32,
    rng: &mut R,
) -> RingAnnouncement {
    let keys = signer_keys(fx, t - 1, false, "SYBIL", rng);
    let mut ids = PlateGenerator::excluding(keys.iter().map(|k| k.id().to_owned()));
    let request = vanet_trs::itrs::build_request(&fx.params, msg, t, r, &mut ids, rng).unwrap();
    let prepared = PreparedRequest::trusted(&fx.params, &request).unwrap();
    let mut entries: Vec<RingEntry> = request.fakes.clone();
    let mut taken = HashSet::new();
    for key in &keys {
        let f = prepared.reply(&fx.params, key, &taken, rng).unwrap();
        taken.insert(f.gamma);
        entries.push(RingEntry {
            id: f.replier_id,
            gamma: f.gamma,
            sig: f.sig,
            variant_point: None,
        });
    }
    let curve = fx.params.curve();
    let extra_id = format!("PAD-{}", rng.next_u32());
    let pk = vanet_trs::keys::derive_public(&fx.params, &extra_id);
    let gamma = loop {
        let g = <Gf256 as vanet_trs::BinaryField>::random_nonzero(rng);
        if entries.iter().all(|e| e.gamma != g) {
            break g;
        }
    };
    entries.push(RingEntry {
        id: extra_id,
        gamma,
        sig: vanet_trs::elgamal::forge(curve, &pk, rng),
        variant_point: None,
    });
    entries.sort_by_key(|e| e.gamma.to_bytes());
    RingAnnouncement {
        msg: msg.to_vec(),
        t,
        entries,
        collusion_resistant: false,
        ephemeral_pk: None,
    }
}
