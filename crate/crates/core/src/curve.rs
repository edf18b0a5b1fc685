//! Short-Weierstrass elliptic curves `y^2 = x^3 + ax + b` over prime fields.
//!
//! Two parameter sets are built in: NIST P-256 for production and a
//! prime-order toy curve over F_97 whose group is small enough to
//! enumerate in tests. Arithmetic is variable-time.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use once_cell::sync::{Lazy, OnceCell};
use rand::RngCore;

use crate::error::DecodeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CurveId {
    P256 = 1,
    Toy97 = 0xF0,
}

impl CurveId {
    pub fn curve(self) -> &'static Curve {
        match self {
            CurveId::P256 => &P256,
            CurveId::Toy97 => &TOY97,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self, DecodeError> {
        match v {
            1 => Ok(CurveId::P256),
            0xF0 => Ok(CurveId::Toy97),
            other => Err(DecodeError::UnknownCurve(other)),
        }
    }
}

/// A curve point in affine coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Infinity => write!(f, "Infinity"),
            Point::Affine { x, y } => write!(f, "({x:x}, {y:x})"),
        }
    }
}

pub struct Curve {
    pub id: CurveId,
    pub name: &'static str,
    p: BigUint,
    a: BigUint,
    b: BigUint,
    order: BigUint,
    generator: Point,
    field_len: usize,
    scalar_len: usize,
    generator_table: OnceCell<Vec<Point>>,
}

pub static P256: Lazy<Curve> = Lazy::new(|| {
    let hex = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).unwrap();
    let p = hex("ffffffff00000001000000000000000000000000ffffffffffffffffffffffff");
    let a = &p - 3u32;
    Curve::new(
        CurveId::P256,
        "P-256",
        p,
        a,
        hex("5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b"),
        hex("ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551"),
        (
            hex("6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296"),
            hex("4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5"),
        ),
    )
});

/// y^2 = x^3 + x + 4 over F_97; 89 points including infinity, generator (0, 2).
pub static TOY97: Lazy<Curve> = Lazy::new(|| {
    Curve::new(
        CurveId::Toy97,
        "toy-F97",
        BigUint::from(97u32),
        BigUint::from(1u32),
        BigUint::from(4u32),
        BigUint::from(89u32),
        (BigUint::from(0u32), BigUint::from(2u32)),
    )
});

#[derive(Clone, Debug)]
struct Jacobian {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

impl Curve {
    fn new(
        id: CurveId,
        name: &'static str,
        p: BigUint,
        a: BigUint,
        b: BigUint,
        order: BigUint,
        (gx, gy): (BigUint, BigUint),
    ) -> Self {
        let field_len = (p.bits() as usize).div_ceil(8);
        let scalar_len = (order.bits() as usize).div_ceil(8);
        Curve {
            id,
            name,
            p,
            a,
            b,
            order,
            generator: Point::Affine { x: gx, y: gy },
            field_len,
            scalar_len,
            generator_table: OnceCell::new(),
        }
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn prime(&self) -> &BigUint {
        &self.p
    }

    pub fn coefficients(&self) -> (&BigUint, &BigUint) {
        (&self.a, &self.b)
    }

    pub fn generator(&self) -> &Point {
        &self.generator
    }

    /// Length of a compressed point encoding.
    pub fn point_len(&self) -> usize {
        1 + self.field_len
    }

    /// Length of a big-endian scalar encoding.
    pub fn scalar_len(&self) -> usize {
        self.scalar_len
    }

    pub fn is_on_curve(&self, pt: &Point) -> bool {
        match pt {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                x < &self.p && y < &self.p && (y * y) % &self.p == self.rhs(x)
            }
        }
    }

    fn rhs(&self, x: &BigUint) -> BigUint {
        (x * x * x + &self.a * x + &self.b) % &self.p
    }

    // -- field helpers --

    fn fmul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    fn fsub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.p - (b - a)
        }
    }

    fn fadd(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.p {
            s - &self.p
        } else {
            s
        }
    }

    fn to_jacobian(&self, pt: &Point) -> Jacobian {
        match pt {
            Point::Infinity => Jacobian {
                x: BigUint::one(),
                y: BigUint::one(),
                z: BigUint::zero(),
            },
            Point::Affine { x, y } => Jacobian {
                x: x.clone(),
                y: y.clone(),
                z: BigUint::one(),
            },
        }
    }

    fn to_affine(&self, j: &Jacobian) -> Point {
        if j.z.is_zero() {
            return Point::Infinity;
        }
        let zinv = j.z.modinv(&self.p).expect("p is prime");
        let zinv2 = self.fmul(&zinv, &zinv);
        let zinv3 = self.fmul(&zinv2, &zinv);
        Point::Affine {
            x: self.fmul(&j.x, &zinv2),
            y: self.fmul(&j.y, &zinv3),
        }
    }

    fn jdouble(&self, j: &Jacobian) -> Jacobian {
        if j.z.is_zero() || j.y.is_zero() {
            return self.to_jacobian(&Point::Infinity);
        }
        let xx = self.fmul(&j.x, &j.x);
        let yy = self.fmul(&j.y, &j.y);
        let yyyy = self.fmul(&yy, &yy);
        let zz = self.fmul(&j.z, &j.z);
        let s = (BigUint::from(4u32) * self.fmul(&j.x, &yy)) % &self.p;
        let m = (BigUint::from(3u32) * &xx + &self.a * self.fmul(&zz, &zz)) % &self.p;
        let x3 = self.fsub(&self.fmul(&m, &m), &self.fadd(&s, &s));
        let y3 = self.fsub(
            &self.fmul(&m, &self.fsub(&s, &x3)),
            &((BigUint::from(8u32) * yyyy) % &self.p),
        );
        let z3 = (BigUint::from(2u32) * self.fmul(&j.y, &j.z)) % &self.p;
        Jacobian { x: x3, y: y3, z: z3 }
    }

    /// Mixed addition with an affine point (z = 1).
    fn jadd_affine(&self, p1: &Jacobian, p2: &Point) -> Jacobian {
        let (x2, y2) = match p2 {
            Point::Infinity => return p1.clone(),
            Point::Affine { x, y } => (x, y),
        };
        if p1.z.is_zero() {
            return self.to_jacobian(p2);
        }
        let z1z1 = self.fmul(&p1.z, &p1.z);
        let u2 = self.fmul(x2, &z1z1);
        let s2 = self.fmul(y2, &self.fmul(&z1z1, &p1.z));
        if p1.x == u2 {
            return if p1.y == s2 {
                self.jdouble(p1)
            } else {
                self.to_jacobian(&Point::Infinity)
            };
        }
        let h = self.fsub(&u2, &p1.x);
        let r = self.fsub(&s2, &p1.y);
        let hh = self.fmul(&h, &h);
        let hhh = self.fmul(&hh, &h);
        let u1hh = self.fmul(&p1.x, &hh);
        let x3 = self.fsub(
            &self.fsub(&self.fmul(&r, &r), &hhh),
            &self.fadd(&u1hh, &u1hh),
        );
        let y3 = self.fsub(
            &self.fmul(&r, &self.fsub(&u1hh, &x3)),
            &self.fmul(&p1.y, &hhh),
        );
        let z3 = self.fmul(&h, &p1.z);
        Jacobian { x: x3, y: y3, z: z3 }
    }

    // -- group operations --

    pub fn add(&self, p1: &Point, p2: &Point) -> Point {
        self.to_affine(&self.jadd_affine(&self.to_jacobian(p1), p2))
    }

    pub fn double(&self, pt: &Point) -> Point {
        self.to_affine(&self.jdouble(&self.to_jacobian(pt)))
    }

    pub fn neg(&self, pt: &Point) -> Point {
        match pt {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::Affine {
                x: x.clone(),
                y: if y.is_zero() { y.clone() } else { &self.p - y },
            },
        }
    }

    fn accelerated(&self) -> bool {
        self.id == CurveId::P256
    }

    /// `k * pt`.
    pub fn mul(&self, k: &BigUint, pt: &Point) -> Point {
        let k = k % &self.order;
        if self.accelerated() {
            if let Some(p) = fast::point(pt) {
                return fast::back(p * fast::scalar(&k));
            }
        }
        self.mul_generic(&k, pt)
    }

    /// `k * G`.
    pub fn mul_generator(&self, k: &BigUint) -> Point {
        let k = k % &self.order;
        if self.accelerated() {
            return fast::back(p256::ProjectivePoint::GENERATOR * fast::scalar(&k));
        }
        self.mul_generator_generic(&k)
    }

    /// `k1 * p1 + k2 * p2`.
    pub fn mul_add(&self, k1: &BigUint, p1: &Point, k2: &BigUint, p2: &Point) -> Point {
        let k1 = k1 % &self.order;
        let k2 = k2 % &self.order;
        if self.accelerated() {
            if let (Some(a), Some(b)) = (fast::point(p1), fast::point(p2)) {
                return fast::back(a * fast::scalar(&k1) + b * fast::scalar(&k2));
            }
        }
        self.mul_add_generic(&k1, p1, &k2, p2)
    }

    /// Sum of a sequence of points.
    pub fn sum<'a>(&self, points: impl IntoIterator<Item = &'a Point>) -> Point {
        let points: Vec<&Point> = points.into_iter().collect();
        if self.accelerated() {
            let fast: Option<Vec<_>> = points.iter().map(|p| fast::point(p)).collect();
            if let Some(fast) = fast {
                return fast::back(fast.into_iter().sum());
            }
        }
        let acc = points
            .into_iter()
            .fold(self.to_jacobian(&Point::Infinity), |acc, p| {
                self.jadd_affine(&acc, p)
            });
        self.to_affine(&acc)
    }

    /// Left-to-right double-and-add; `k` already reduced.
    fn mul_generic(&self, k: &BigUint, pt: &Point) -> Point {
        let mut acc = self.to_jacobian(&Point::Infinity);
        for i in (0..k.bits()).rev() {
            acc = self.jdouble(&acc);
            if k.bit(i) {
                acc = self.jadd_affine(&acc, pt);
            }
        }
        self.to_affine(&acc)
    }

    /// Uses a table of doublings of the generator.
    fn mul_generator_generic(&self, k: &BigUint) -> Point {
        let table = self.generator_table.get_or_init(|| {
            let mut out = Vec::with_capacity(self.order.bits() as usize);
            let mut cur = self.generator.clone();
            for _ in 0..self.order.bits() {
                out.push(cur.clone());
                cur = self.double(&cur);
            }
            out
        });
        let mut acc = self.to_jacobian(&Point::Infinity);
        for i in 0..k.bits() {
            if k.bit(i) {
                acc = self.jadd_affine(&acc, &table[i as usize]);
            }
        }
        self.to_affine(&acc)
    }

    /// Joint double-and-add pass.
    fn mul_add_generic(&self, k1: &BigUint, p1: &Point, k2: &BigUint, p2: &Point) -> Point {
        let both = self.add(p1, p2);
        let mut acc = self.to_jacobian(&Point::Infinity);
        for i in (0..k1.bits().max(k2.bits())).rev() {
            acc = self.jdouble(&acc);
            match (k1.bit(i), k2.bit(i)) {
                (true, true) => acc = self.jadd_affine(&acc, &both),
                (true, false) => acc = self.jadd_affine(&acc, p1),
                (false, true) => acc = self.jadd_affine(&acc, p2),
                (false, false) => {}
            }
        }
        self.to_affine(&acc)
    }

    // -- scalars --

    /// Uniform scalar in `[1, q - 1]`.
    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        let bits = self.order.bits() as usize;
        let mut buf = vec![0u8; self.scalar_len];
        loop {
            rng.fill_bytes(&mut buf);
            let excess = buf.len() * 8 - bits;
            buf[0] &= 0xffu8 >> excess;
            let v = BigUint::from_bytes_be(&buf);
            if !v.is_zero() && v < self.order {
                return v;
            }
        }
    }

    pub fn scalar_inv(&self, k: &BigUint) -> Option<BigUint> {
        if (k % &self.order).is_zero() {
            return None;
        }
        k.modinv(&self.order)
    }

    pub fn scalar_neg(&self, k: &BigUint) -> BigUint {
        let k = k % &self.order;
        if k.is_zero() {
            k
        } else {
            &self.order - k
        }
    }

    pub fn encode_scalar(&self, k: &BigUint) -> Vec<u8> {
        let raw = k.to_bytes_be();
        let mut out = vec![0u8; self.scalar_len.saturating_sub(raw.len())];
        out.extend_from_slice(&raw);
        out
    }

    /// Parses a canonical scalar (strictly below the group order).
    pub fn decode_scalar(&self, bytes: &[u8]) -> Result<BigUint, DecodeError> {
        if bytes.len() != self.scalar_len {
            return Err(DecodeError::Truncated);
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.order {
            return Err(DecodeError::InvalidScalar);
        }
        Ok(v)
    }

    // -- point encoding --

    /// SEC1 compressed encoding; infinity is all zero bytes.
    pub fn compress(&self, pt: &Point) -> Vec<u8> {
        let mut out = vec![0u8; self.point_len()];
        if let Point::Affine { x, y } = pt {
            out[0] = if y.is_odd() { 0x03 } else { 0x02 };
            let xb = x.to_bytes_be();
            out[1 + self.field_len - xb.len()..].copy_from_slice(&xb);
        }
        out
    }

    pub fn decompress(&self, bytes: &[u8]) -> Result<Point, DecodeError> {
        if bytes.len() != self.point_len() {
            return Err(DecodeError::Truncated);
        }
        let x = BigUint::from_bytes_be(&bytes[1..]);
        match bytes[0] {
            0x00 if x.is_zero() => Ok(Point::Infinity),
            tag @ (0x02 | 0x03) => {
                if x >= self.p {
                    return Err(DecodeError::InvalidPoint);
                }
                let y = self.sqrt(&self.rhs(&x)).ok_or(DecodeError::InvalidPoint)?;
                let y = if y.is_odd() == (tag == 0x03) {
                    y
                } else {
                    self.fsub(&BigUint::zero(), &y)
                };
                if y.is_zero() && tag == 0x03 {
                    return Err(DecodeError::InvalidPoint);
                }
                Ok(Point::Affine { x, y })
            }
            _ => Err(DecodeError::InvalidPoint),
        }
    }

    /// Square root mod p (Tonelli-Shanks), `None` for non-residues.
    fn sqrt(&self, n: &BigUint) -> Option<BigUint> {
        let p = &self.p;
        let n = n % p;
        if n.is_zero() {
            return Some(n);
        }
        let one = BigUint::one();
        let pm1 = p - &one;
        if n.modpow(&(&pm1 >> 1), p) != one {
            return None;
        }
        if p % 4u32 == BigUint::from(3u32) {
            return Some(n.modpow(&((p + &one) >> 2), p));
        }
        let s = pm1.trailing_zeros().unwrap();
        let q = &pm1 >> s;
        let mut z = BigUint::from(2u32);
        while z.modpow(&(&pm1 >> 1), p) == one {
            z += 1u32;
        }
        let mut m = s;
        let mut c = z.modpow(&q, p);
        let mut t = n.modpow(&q, p);
        let mut r = n.modpow(&((&q + &one) >> 1), p);
        while t != one {
            let mut i = 0;
            let mut t2 = t.clone();
            while t2 != one {
                t2 = self.fmul(&t2, &t2);
                i += 1;
            }
            let b = c.modpow(&(BigUint::one() << (m - i - 1)), p);
            m = i;
            c = self.fmul(&b, &b);
            t = self.fmul(&t, &c);
            r = self.fmul(&r, &b);
        }
        Some(r)
    }
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve").field("name", &self.name).finish()
    }
}

/// Conversions to the constant-size P-256 arithmetic of the `p256` crate.
mod fast {
    use super::Point;
    use num_bigint::BigUint;
    use p256::elliptic_curve::sec1::{FromEncodedPoint, ToEncodedPoint};
    use p256::elliptic_curve::PrimeField;
    use p256::{AffinePoint, EncodedPoint, FieldBytes, ProjectivePoint, Scalar};

    fn bytes32(x: &BigUint) -> Option<FieldBytes> {
        let raw = x.to_bytes_be();
        if raw.len() > 32 {
            return None;
        }
        let mut out = FieldBytes::default();
        out[32 - raw.len()..].copy_from_slice(&raw);
        Some(out)
    }

    /// `None` for points that are not on the curve.
    pub(super) fn point(pt: &Point) -> Option<ProjectivePoint> {
        match pt {
            Point::Infinity => Some(ProjectivePoint::IDENTITY),
            Point::Affine { x, y } => {
                let ep = EncodedPoint::from_affine_coordinates(&bytes32(x)?, &bytes32(y)?, false);
                Option::<AffinePoint>::from(AffinePoint::from_encoded_point(&ep)).map(ProjectivePoint::from)
            }
        }
    }

    /// `k` must already be reduced mod the group order.
    pub(super) fn scalar(k: &BigUint) -> Scalar {
        Option::from(Scalar::from_repr(bytes32(k).expect("reduced scalar"))).expect("reduced scalar")
    }

    pub(super) fn back(p: ProjectivePoint) -> Point {
        let ep = p.to_affine().to_encoded_point(false);
        match (ep.x(), ep.y()) {
            (Some(x), Some(y)) => Point::Affine {
                x: BigUint::from_bytes_be(x),
                y: BigUint::from_bytes_be(y),
            },
            _ => Point::Infinity,
        }
    }
}
