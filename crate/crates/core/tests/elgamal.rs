mod common;

use common::*;
use num_bigint::BigUint;
use rand::Rng;
use vanet_trs::curve::{Point, P256, TOY97};
use vanet_trs::elgamal::{forge, forge_with, sign, sign_with_nonce, verify};
use vanet_trs::hash::h1;
use vanet_trs::{BinaryField, ElgamalTriple, Gf256};

fn big(v: i64) -> BigUint {
    BigUint::from(v as u64)
}

fn small(v: &BigUint) -> i64 {
    v.to_u64_digits().first().copied().unwrap_or(0) as i64
}

#[test]
fn toy_curve_has_prime_order_89() {
    let points = toy_points();
    assert_eq!(points.len() as i64, TOY_Q);
    assert_eq!(toy_mul(TOY_Q, TOY_G), None);
    for k in 1..TOY_Q {
        assert!(toy_mul(k, TOY_G).is_some());
    }
    for p in &points {
        assert!(TOY97.is_on_curve(&to_lib(*p)));
    }
}

#[test]
fn toy_scalar_multiplication_matches_repeated_addition() {
    for k in 0..TOY_Q {
        let want = toy_mul(k, TOY_G);
        assert_eq!(from_lib(&TOY97.mul_generator(&big(k))), want, "k = {k}");
        let q = toy_mul(7, TOY_G);
        assert_eq!(from_lib(&TOY97.mul(&big(k), &to_lib(q))), toy_mul(k, q));
    }
}

#[test]
fn toy_sign_matches_hand_expansion() {
    let mut rng = rng(21);
    let mut checked = 0;
    for _ in 0..200 {
        let sk: i64 = rng.random_range(1..TOY_Q);
        let c: i64 = rng.random_range(1..TOY_Q);
        let m = Gf256::random(&mut rng);
        let alpha = toy_mul(c, TOY_G);
        let h = small(&h1(&TOY97, &to_lib(alpha)));
        let got = sign_with_nonce(&TOY97, &big(sk), m, &big(c));
        if h == 0 {
            assert!(got.is_none());
            continue;
        }
        let beta = (toy_message_scalar(&m) - sk * h).rem_euclid(TOY_Q) * brute_inv(c, TOY_Q) % TOY_Q;
        let sig = got.expect("nondegenerate nonce");
        assert_eq!(from_lib(&sig.alpha), alpha);
        assert_eq!(small(&sig.beta), beta);
        assert_eq!(sig.m, m);
        // m P = H1(alpha) PK + beta alpha, by repeated addition
        let pk = toy_mul(sk, TOY_G);
        let lhs = toy_mul(toy_message_scalar(&m), TOY_G);
        let rhs = toy_add(toy_mul(h, pk), toy_mul(beta, alpha));
        assert_eq!(lhs, rhs);
        assert!(verify(&TOY97, &to_lib(pk), &sig));
        checked += 1;
    }
    assert!(checked > 150);
}

#[test]
fn toy_forge_with_a3_b5_matches_hand_expansion() {
    let mut covered = 0;
    for k in 1..TOY_Q {
        let pk = toy_mul(k, TOY_G);
        let alpha = toy_add(toy_mul(3, TOY_G), toy_mul(5, pk));
        let got = forge_with(&TOY97, &to_lib(pk), &big(3), &big(5));
        if alpha.is_none() {
            assert!(got.is_none());
            continue;
        }
        let h = small(&h1(&TOY97, &to_lib(alpha)));
        if h == 0 {
            assert!(got.is_none());
            continue;
        }
        let beta = (-(brute_inv(5, TOY_Q) * h)).rem_euclid(TOY_Q);
        let m = 3 * beta % TOY_Q;
        let sig = got.expect("nondegenerate forgery");
        assert_eq!(from_lib(&sig.alpha), alpha);
        assert_eq!(small(&sig.beta), beta);
        assert_eq!(toy_message_scalar(&sig.m), m);
        assert_eq!(sig.m, Gf256::from_u64(m as u64));
        assert!(verify(&TOY97, &to_lib(pk), &sig));
        covered += 1;
    }
    assert!(covered > 80);
}

#[test]
fn sign_verify_thousand_trials() {
    let mut rng = rng(22);
    for _ in 0..1000 {
        let sk = P256.random_scalar(&mut rng);
        let m = Gf256::random(&mut rng);
        let sig = sign(&P256, &sk, m, &mut rng);
        assert!(verify(&P256, &P256.mul_generator(&sk), &sig));
    }
}

#[test]
fn forgeries_verify_and_do_not_repeat() {
    let mut rng = rng(23);
    for _ in 0..200 {
        let pk = P256.mul_generator(&P256.random_scalar(&mut rng));
        let a = forge(&P256, &pk, &mut rng);
        let b = forge(&P256, &pk, &mut rng);
        assert!(verify(&P256, &pk, &a));
        assert!(verify(&P256, &pk, &b));
        assert_ne!(a.m, b.m);
    }
}

#[test]
fn fresh_nonce_per_signature() {
    let mut rng = rng(24);
    let sk = P256.random_scalar(&mut rng);
    let m = Gf256::from_u64(42);
    let a = sign(&P256, &sk, m, &mut rng);
    let b = sign(&P256, &sk, m, &mut rng);
    assert_ne!(a.alpha, b.alpha);
}

#[test]
fn single_field_tampering_rejects() {
    let mut rng = rng(25);
    for _ in 0..200 {
        let sk = P256.random_scalar(&mut rng);
        let pk = P256.mul_generator(&sk);
        let sig = sign(&P256, &sk, Gf256::random(&mut rng), &mut rng);
        let bit = Gf256::from_u64(1 << rng.random_range(0..64));
        let tampered = [
            ElgamalTriple {
                m: sig.m + bit,
                ..sig.clone()
            },
            ElgamalTriple {
                alpha: P256.add(&sig.alpha, P256.generator()),
                ..sig.clone()
            },
            ElgamalTriple {
                beta: (&sig.beta + 1u32) % P256.order(),
                ..sig.clone()
            },
        ];
        for t in &tampered {
            assert!(!verify(&P256, &pk, t));
        }
    }
}

#[test]
fn infinity_alpha_and_oversized_beta_reject() {
    let mut rng = rng(26);
    let sk = P256.random_scalar(&mut rng);
    let pk = P256.mul_generator(&sk);
    let sig = sign(&P256, &sk, Gf256::ONE, &mut rng);
    let inf = ElgamalTriple {
        alpha: Point::Infinity,
        ..sig.clone()
    };
    assert!(!verify(&P256, &pk, &inf));
    let wide = ElgamalTriple {
        beta: &sig.beta + P256.order(),
        ..sig.clone()
    };
    assert!(!verify(&P256, &pk, &wide));
}

#[test]
fn triple_encoding_is_97_bytes_and_round_trips() {
    let mut rng = rng(27);
    let sk = P256.random_scalar(&mut rng);
    let sig = sign(&P256, &sk, Gf256::random(&mut rng), &mut rng);
    let bytes = sig.to_bytes(&P256);
    assert_eq!(bytes.len(), 97);
    assert_eq!(ElgamalTriple::encoded_len(&P256), 97);
    assert_eq!(ElgamalTriple::from_bytes(&P256, &bytes).unwrap(), sig);
    assert!(ElgamalTriple::from_bytes(&P256, &bytes[..96]).is_err());
}
