mod common;

use common::*;
use proptest::prelude::*;
use vanet_trs::itrs::verify_ring;
use vanet_trs::protocol::{decode_packet, reply_policy, EventKind, PendingRequest, ReplierState, ReplyDecision};
use vanet_trs::sim::anonymity_prob;
use vanet_trs::curve::P256;
use vanet_trs::{BinaryField, Gf16, Gf256, Polynomial, RingAnnouncement};

fn gf256() -> impl Strategy<Value = Gf256> {
    any::<[u8; 32]>().prop_map(|b| Gf256::from_bytes(&b))
}

proptest! {
    #[test]
    fn gf256_field_laws(a in gf256(), b in gf256(), c in gf256()) {
        prop_assert_eq!(a * b, b * a);
        prop_assert_eq!((a * b) * c, a * (b * c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a * b, gf256_oracle_mul(a, b));
        if !a.is_zero() {
            prop_assert_eq!(a * a.inv().unwrap(), Gf256::ONE);
        }
    }

    #[test]
    fn gf16_matches_oracle(a: u16, b: u16) {
        prop_assert_eq!((Gf16(a) * Gf16(b)).0, gf16_oracle_mul(a, b));
    }

    #[test]
    fn interpolant_passes_through_its_points(
        xs in prop::collection::hash_set(any::<u16>(), 1..24),
        seed: u64,
    ) {
        let mut rng = rng(seed);
        let pts: Vec<(Gf16, Gf16)> = xs.into_iter().map(|x| (Gf16(x), Gf16::random(&mut rng))).collect();
        let p = Polynomial::interpolate(&pts).unwrap();
        prop_assert!(p.degree().is_none_or(|d| d < pts.len()));
        for (x, y) in &pts {
            prop_assert_eq!(p.eval(*x), *y);
        }
    }

    #[test]
    fn reply_threshold_memory_never_decreases(ts in prop::collection::vec((0.0f64..100.0, 2u32..12), 1..20)) {
        let key = vanet_trs::protocol::EventDescription {
            x: 0.0,
            y: 0.0,
            kind: EventKind::Jam,
            direction: vanet_trs::protocol::Direction::North,
            road: String::new(),
            time: 0.0,
        }
        .key();
        let mut state = ReplierState::default();
        let mut last = None;
        for chunk in ts.chunks(3) {
            let pending: Vec<PendingRequest> = chunk
                .iter()
                .map(|&(arrival, threshold)| PendingRequest { arrival, event: key, threshold })
                .collect();
            let decisions = reply_policy(&mut state, &pending);
            let now = state.last_threshold(&key);
            prop_assert!(now >= last);
            let answered: Vec<u32> = pending
                .iter()
                .zip(&decisions)
                .filter(|(_, d)| **d == ReplyDecision::Reply)
                .map(|(p, _)| p.threshold)
                .collect();
            prop_assert_eq!(answered.iter().max().copied().or(last), now);
            last = now;
        }
    }

    #[test]
    fn anonymity_is_nonincreasing_in_j(r in 1u32..40, t_frac in 0.0f64..1.0) {
        let t = 1 + ((r - 1) as f64 * t_frac) as u32;
        let mut prev = 1.0;
        for j in 1..=t {
            let p = anonymity_prob(t, r, j).unwrap();
            prop_assert!(p <= prev + 1e-15);
            prop_assert!((0.0..=1.0).contains(&p));
            prev = p;
        }
        prop_assert!((anonymity_prob(t, r, 1).unwrap() - 1.0).abs() < 1e-12 || t < r);
    }

    #[test]
    fn arbitrary_bytes_never_panic_the_decoder(bytes in prop::collection::vec(any::<u8>(), 0..600)) {
        let _ = decode_packet(&P256, &bytes);
        let _ = RingAnnouncement::from_bytes(&P256, &bytes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn honest_rounds_verify_and_reencode(
        t in 2u32..6,
        extra in 6u32..12,
        variant: bool,
        msg in prop::collection::vec(any::<u8>(), 0..64),
        seed: u64,
    ) {
        let fx = p256_fixture(seed % 4);
        let mut rng = rng(seed);
        let run = honest_run(&fx, &msg, t, t + extra, variant, &mut rng);
        prop_assert_eq!(verify_ring(&fx.params, &run.announcement), Ok(()));
        let bytes = run.announcement.to_bytes(fx.params.curve());
        let back = RingAnnouncement::from_bytes(fx.params.curve(), &bytes).unwrap();
        prop_assert_eq!(&back, &run.announcement);
        for (_, m) in single_field_mutations(&fx.params, &run.announcement, &mut rng) {
            prop_assert!(verify_ring(&fx.params, &m).is_err());
        }
    }
}
