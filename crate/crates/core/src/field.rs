//! Binary extension fields GF(2^l) and polynomials over them.
//!
//! [`Gf256`] is the production field (l = 256, reduction polynomial
//! `x^256 + x^10 + x^5 + x^2 + 1`). [`Gf16`] is a small field
//! (`x^16 + x^5 + x^3 + x + 1`) whose 65536 elements can be enumerated, so
//! the generic code in this module can be checked against exhaustive oracles.
//!
//! Both fields encode to big-endian bytes: bit 0 of the polynomial is the
//! least significant bit of the last byte.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign};

use rand::{Rng, RngCore};

use crate::error::FieldError;

/// Operations shared by the binary fields used in this crate.
pub trait BinaryField:
    Copy + Eq + fmt::Debug + Add<Output = Self> + Mul<Output = Self> + AddAssign + MulAssign
{
    const ZERO: Self;
    const ONE: Self;
    /// Extension degree l.
    const BITS: usize;

    fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    fn square(self) -> Self {
        self * self
    }

    /// Multiplicative inverse, `a^(2^l - 2)`.
    fn inv(self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        // a^(2^l - 2) = prod_{i=1}^{l-1} a^(2^i)
        let mut acc = Self::ONE;
        let mut sq = self;
        for _ in 1..Self::BITS {
            sq = sq.square();
            acc *= sq;
        }
        Ok(acc)
    }

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self;

    fn random_nonzero<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Self::random(rng);
            if !v.is_zero() {
                return v;
            }
        }
    }
}

/// Element of GF(2^256). Limb 0 holds polynomial bits 0..64.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Gf256([u64; 4]);

/// Element of GF(2^16).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf16(pub u16);

pub const GF16_MODULUS: u32 = 0x1_002B;

impl Gf256 {
    pub const BYTES: usize = 32;

    pub const fn from_limbs(limbs: [u64; 4]) -> Self {
        Gf256(limbs)
    }

    pub const fn limbs(&self) -> [u64; 4] {
        self.0
    }

    pub fn from_u64(v: u64) -> Self {
        Gf256([v, 0, 0, 0])
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Self {
        let mut limbs = [0u64; 4];
        for (i, limb) in limbs.iter_mut().enumerate() {
            let start = 32 - 8 * (i + 1);
            *limb = u64::from_be_bytes(bytes[start..start + 8].try_into().unwrap());
        }
        Gf256(limbs)
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, limb) in self.0.iter().enumerate() {
            let start = 32 - 8 * (i + 1);
            out[start..start + 8].copy_from_slice(&limb.to_be_bytes());
        }
        out
    }

    /// Bit `i` of the polynomial (coefficient of x^i).
    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256(0x")?;
        for b in self.to_bytes() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Carry-less 64x64 -> 128 multiply, 4-bit windowed.
#[inline]
fn clmul64(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut table = [0u128; 16];
    for i in 1..16usize {
        table[i] = if i & 1 == 1 {
            table[i - 1] ^ a
        } else {
            table[i >> 1] << 1
        };
    }
    let mut r = 0u128;
    for shift in (0..16).rev() {
        r = (r << 4) ^ table[((b >> (4 * shift)) & 0xf) as usize];
    }
    r
}

impl Add for Gf256 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Gf256([
            self.0[0] ^ rhs.0[0],
            self.0[1] ^ rhs.0[1],
            self.0[2] ^ rhs.0[2],
            self.0[3] ^ rhs.0[3],
        ])
    }
}

impl Mul for Gf256 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut wide = [0u64; 8];
        for i in 0..4 {
            if self.0[i] == 0 {
                continue;
            }
            for j in 0..4 {
                let p = clmul64(self.0[i], rhs.0[j]);
                wide[i + j] ^= p as u64;
                wide[i + j + 1] ^= (p >> 64) as u64;
            }
        }
        // x^256 = x^10 + x^5 + x^2 + 1; fold from the top limb down so spill
        // into limb 4 is folded again.
        for i in (4..8).rev() {
            let v = wide[i];
            wide[i] = 0;
            wide[i - 4] ^= v ^ (v << 2) ^ (v << 5) ^ (v << 10);
            wide[i - 3] ^= (v >> 62) ^ (v >> 59) ^ (v >> 54);
        }
        Gf256([wide[0], wide[1], wide[2], wide[3]])
    }
}

impl BinaryField for Gf256 {
    const ZERO: Self = Gf256([0; 4]);
    const ONE: Self = Gf256([1, 0, 0, 0]);
    const BITS: usize = 256;

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Gf256([rng.next_u64(), rng.next_u64(), rng.next_u64(), rng.next_u64()])
    }
}

impl fmt::Debug for Gf16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf16(0x{:04x})", self.0)
    }
}

impl Add for Gf16 {
    type Output = Self;
    // characteristic 2: addition is xor
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Self) -> Self {
        Gf16(self.0 ^ rhs.0)
    }
}

impl Mul for Gf16 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut a = self.0 as u32;
        let mut b = rhs.0;
        let mut r = 0u32;
        while b != 0 {
            if b & 1 == 1 {
                r ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & 0x1_0000 != 0 {
                a ^= GF16_MODULUS;
            }
        }
        Gf16(r as u16)
    }
}

impl BinaryField for Gf16 {
    const ZERO: Self = Gf16(0);
    const ONE: Self = Gf16(1);
    const BITS: usize = 16;

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Gf16(rng.random())
    }
}

macro_rules! assign_ops {
    ($t:ty) => {
        impl AddAssign for $t {
            fn add_assign(&mut self, rhs: Self) {
                *self = *self + rhs;
            }
        }
        impl MulAssign for $t {
            fn mul_assign(&mut self, rhs: Self) {
                *self = *self * rhs;
            }
        }
    };
}
assign_ops!(Gf256);
assign_ops!(Gf16);

/// Polynomial over a binary field, coefficients lowest degree first.
///
/// Trailing zero coefficients are always trimmed; the zero polynomial has
/// no coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polynomial<F> {
    coeffs: Vec<F>,
}

impl<F: BinaryField> Polynomial<F> {
    pub fn new(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn coefficients(&self) -> &[F] {
        &self.coeffs
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::ZERO, |acc, &c| acc * x + c)
    }

    /// Unique polynomial of degree < points.len() through all `points`
    /// (Lagrange form expanded to coefficients).
    pub fn interpolate(points: &[(F, F)]) -> Result<Self, FieldError> {
        if points.is_empty() {
            return Err(FieldError::NoPoints);
        }
        let k = points.len();
        for i in 0..k {
            for j in (i + 1)..k {
                if points[i].0 == points[j].0 {
                    return Err(FieldError::DuplicateAbscissa);
                }
            }
        }

        // master(x) = prod (x - x_i), degree k
        let mut master = vec![F::ZERO; k + 1];
        master[0] = F::ONE;
        for (deg, &(xi, _)) in points.iter().enumerate() {
            for c in (1..=deg + 1).rev() {
                let lower = master[c - 1];
                master[c] = master[c] * xi + lower;
            }
            master[0] *= xi;
        }

        // basis numerators q_i = master / (x - x_i) and their values at x_i
        let mut quotients = Vec::with_capacity(k);
        let mut denoms = Vec::with_capacity(k);
        for &(xi, _) in points {
            let mut q = vec![F::ZERO; k];
            let mut carry = master[k];
            for c in (0..k).rev() {
                q[c] = carry;
                carry = master[c] + carry * xi;
            }
            let d = q.iter().rev().fold(F::ZERO, |acc, &c| acc * xi + c);
            quotients.push(q);
            denoms.push(d);
        }

        let inv = batch_invert(&denoms)?;
        let mut coeffs = vec![F::ZERO; k];
        for ((q, &(_, yi)), di) in quotients.iter().zip(points).zip(inv) {
            let scale = yi * di;
            if scale.is_zero() {
                continue;
            }
            for (acc, &qc) in coeffs.iter_mut().zip(q) {
                *acc += qc * scale;
            }
        }
        Ok(Polynomial::new(coeffs))
    }
}

/// Inverts every element with a single field inversion.
pub fn batch_invert<F: BinaryField>(values: &[F]) -> Result<Vec<F>, FieldError> {
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = F::ONE;
    for &v in values {
        if v.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        prefix.push(acc);
        acc *= v;
    }
    let mut inv_acc = acc.inv()?;
    let mut out = vec![F::ZERO; values.len()];
    for i in (0..values.len()).rev() {
        out[i] = inv_acc * prefix[i];
        inv_acc *= values[i];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn add_examples() {
        let x = Gf256::from_u64(0xdead_beef);
        assert_eq!(Gf256::ZERO + x, x);
        assert_eq!(x + x, Gf256::ZERO);
        assert_eq!(Gf256::from_u64(0x03) + Gf256::from_u64(0x05), Gf256::from_u64(0x06));
    }

    #[test]
    fn mul_identities() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = Gf256::random(&mut rng);
        assert_eq!(Gf256::ONE * x, x);
        assert_eq!(Gf256::ZERO * x, Gf256::ZERO);
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(Gf256::ZERO.inv(), Err(FieldError::ZeroInverse));
        assert_eq!(Gf16(0).inv(), Err(FieldError::ZeroInverse));
        assert_eq!(Gf256::ONE.inv(), Ok(Gf256::ONE));
    }

    #[test]
    fn x_to_the_256_reduces() {
        // x^128 * x^128 = x^10 + x^5 + x^2 + 1
        let x128 = Gf256([0, 0, 1, 0]);
        assert_eq!(x128 * x128, Gf256::from_u64((1 << 10) | (1 << 5) | (1 << 2) | 1));
        // x^255 * x = reduction as well
        let x255 = Gf256([0, 0, 0, 1 << 63]);
        assert_eq!(x255 * Gf256::from_u64(2), Gf256::from_u64(0x425));
    }

    #[test]
    fn byte_encoding_is_big_endian() {
        let one = Gf256::ONE.to_bytes();
        assert_eq!(one[31], 1);
        assert!(one[..31].iter().all(|&b| b == 0));
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let v = Gf256::random(&mut rng);
        assert_eq!(Gf256::from_bytes(&v.to_bytes()), v);
    }

    #[test]
    fn interpolate_single_point_is_constant() {
        let c = Gf256::from_u64(77);
        let p = Polynomial::interpolate(&[(Gf256::ZERO, c)]).unwrap();
        assert_eq!(p.coefficients(), &[c]);
        assert_eq!(p.eval(Gf256::from_u64(12345)), c);
    }

    #[test]
    fn interpolate_rejects_duplicates_and_empty() {
        let a = Gf16(3);
        assert_eq!(
            Polynomial::interpolate(&[(a, Gf16(1)), (Gf16(4), Gf16(2)), (a, Gf16(5))]),
            Err(FieldError::DuplicateAbscissa)
        );
        assert_eq!(Polynomial::<Gf16>::interpolate(&[]), Err(FieldError::NoPoints));
    }

    #[test]
    fn eval_at_zero_is_constant_term() {
        let p = Polynomial::new(vec![Gf16(9), Gf16(4), Gf16(1)]);
        assert_eq!(p.eval(Gf16(0)), Gf16(9));
        assert_eq!(p.degree(), Some(2));
        assert_eq!(Polynomial::new(vec![Gf16(0), Gf16(0)]).degree(), None);
    }
}
