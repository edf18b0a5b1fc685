//! Probability that a guesser naming `t` ring members at random hits at
//! least `j` of the `t` actual signers.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnonymityError {
    #[error("need 1 <= j <= t <= r, got t={t}, r={r}, j={j}")]
    Domain { t: u32, r: u32, j: u32 },
}

fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exact `P[X >= j]` for `X ~ Hypergeometric(population r, successes t,
/// draws t)`.
pub fn anonymity_prob_exact(t: u32, r: u32, j: u32) -> Result<Ratio<BigUint>, AnonymityError> {
    if j == 0 || j > t || t > r {
        return Err(AnonymityError::Domain { t, r, j });
    }
    let num: BigUint = (j..=t).map(|k| binomial(t, k) * binomial(r - t, t - k)).sum();
    Ok(Ratio::new(num, binomial(r, t)))
}

pub fn anonymity_prob(t: u32, r: u32, j: u32) -> Result<f64, AnonymityError> {
    let p = anonymity_prob_exact(t, r, j)?;
    Ok(p.numer().to_f64().unwrap_or(f64::NAN) / p.denom().to_f64().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(anonymity_prob_exact(2, 3, 1).unwrap(), Ratio::from_integer(BigUint::from(1u32)));
        assert_eq!(
            anonymity_prob_exact(2, 3, 2).unwrap(),
            Ratio::new(BigUint::from(1u32), BigUint::from(3u32))
        );
        assert_eq!(anonymity_prob(5, 5, 1).unwrap(), 1.0);
        assert!(anonymity_prob(3, 2, 1).is_err());
        assert!(anonymity_prob(2, 3, 3).is_err());
        assert!(anonymity_prob(2, 3, 0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(60, 30).to_string(), "118264581564861424");
        assert_eq!(binomial(3, 4), BigUint::zero());
    }
}
