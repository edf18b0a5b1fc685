//! Timing of the three cryptographic phases: building a request, answering
//! one, and verifying the final announcement.
//!
//! The reply phase covers interpolation and signing only. A replier also
//! checks every forgery in the request before answering; that cost scales
//! with `r - t` and is reported on its own as `reply_check`.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::SignError;
use std::collections::HashSet;

use crate::itrs::{build_request, verify_ring, PlateGenerator, PreparedRequest};
use crate::keys::{derive_private, IdentityKey, MasterKeyMaterial, SystemParams};

/// Summary of one phase in milliseconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub median_ms: f64,
    pub samples: usize,
}

impl Stats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Stats::default();
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Stats {
            mean_ms: mean,
            stddev_ms: var.sqrt(),
            median_ms: median,
            samples: n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub t: u32,
    pub r: u32,
    pub request: Stats,
    pub reply: Stats,
    pub reply_check: Stats,
    pub verify: Stats,
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn participants(material: &MasterKeyMaterial, t: u32) -> Vec<IdentityKey> {
    (0..t)
        .map(|i| derive_private(material, &format!("BENCH-{i:04}")))
        .collect()
}

struct Cell {
    t: u32,
    r: u32,
    keys: Vec<IdentityKey>,
    outsider: IdentityKey,
    msg: Vec<u8>,
    rng: ChaCha20Rng,
    samples: [Vec<f64>; 4],
}

impl Cell {
    fn new(material: &MasterKeyMaterial, t: u32, r: u32, seed: u64) -> Self {
        Cell {
            t,
            r,
            keys: participants(material, t),
            outsider: derive_private(material, "BENCH-OUTSIDER"),
            msg: format!("bench t={t} r={r}").into_bytes(),
            rng: ChaCha20Rng::seed_from_u64(seed ^ ((t as u64) << 32 | r as u64)),
            samples: Default::default(),
        }
    }

    /// One timed pass through request, reply and verify.
    fn sample(&mut self, params: &SystemParams) -> Result<(), SignError> {
        let rng = &mut self.rng;
        let mut ids = PlateGenerator::excluding(self.keys.iter().map(|k| k.id().to_owned()));
        let start = Instant::now();
        let request = build_request(params, &self.msg, self.t, self.r, &mut ids, rng)?;
        self.samples[0].push(ms_since(start));

        let start = Instant::now();
        PreparedRequest::check(params, &request)?;
        self.samples[2].push(ms_since(start));

        // at t = 1 nobody replies, so an outsider's reply is timed instead
        let timed = self.keys.get(1).unwrap_or(&self.outsider);
        let start = Instant::now();
        let prepared = PreparedRequest::trusted(params, &request)?;
        let first = prepared.reply(params, timed, &HashSet::new(), rng)?;
        self.samples[1].push(ms_since(start));

        let mut fractions = Vec::with_capacity(self.keys.len() - 1);
        let mut taken: HashSet<_> = HashSet::new();
        if self.keys.len() > 1 {
            taken.insert(first.gamma);
            fractions.push(first);
        }
        for key in self.keys.iter().skip(2) {
            let fraction = prepared.reply(params, key, &taken, rng)?;
            taken.insert(fraction.gamma);
            fractions.push(fraction);
        }

        let announcement = prepared.assemble(params, &self.keys[0], &fractions, rng)?;
        let start = Instant::now();
        let verdict = verify_ring(params, &announcement);
        self.samples[3].push(ms_since(start));
        assert!(verdict.is_ok(), "benchmark announcement failed to verify: {verdict:?}");
        Ok(())
    }

    fn summary(&self) -> PhaseTimings {
        PhaseTimings {
            t: self.t,
            r: self.r,
            request: Stats::from_samples(&self.samples[0]),
            reply: Stats::from_samples(&self.samples[1]),
            reply_check: Stats::from_samples(&self.samples[2]),
            verify: Stats::from_samples(&self.samples[3]),
        }
    }
}

/// Times each phase `reps` times for one `(t, r)` cell.
pub fn bench_cell(
    material: &MasterKeyMaterial,
    t: u32,
    r: u32,
    reps: usize,
    seed: u64,
) -> Result<PhaseTimings, SignError> {
    Ok(bench_grid(material, &[(t, r)], reps, seed)?.remove(0))
}

/// Runs on one thread and interleaves the cells repetition by repetition,
/// so slow drift in machine load spreads evenly over the grid.
pub fn bench_grid(
    material: &MasterKeyMaterial,
    cells: &[(u32, u32)],
    reps: usize,
    seed: u64,
) -> Result<Vec<PhaseTimings>, SignError> {
    let params = material.params();
    let mut cells: Vec<Cell> = cells
        .iter()
        .map(|&(t, r)| Cell::new(material, t, r, seed))
        .collect();
    // warm-up pass, discarded
    for cell in &mut cells {
        cell.sample(&params)?;
        cell.samples = Default::default();
    }
    // fresh cell order every round, so periodic background load cannot
    // line up with one cell
    let mut order: Vec<usize> = (0..cells.len()).collect();
    let mut order_rng = ChaCha20Rng::seed_from_u64(seed.rotate_left(17));
    for _ in 0..reps {
        order.shuffle(&mut order_rng);
        for &i in &order {
            cells[i].sample(&params)?;
        }
    }
    Ok(cells.iter().map(Cell::summary).collect())
}

pub const CSV_HEADER: &str = "t,r,request_mean_ms,request_stddev_ms,request_median_ms,reply_mean_ms,reply_stddev_ms,reply_median_ms,reply_check_mean_ms,reply_check_stddev_ms,reply_check_median_ms,verify_mean_ms,verify_stddev_ms,verify_median_ms,samples";

impl PhaseTimings {
    pub fn csv_row(&self) -> String {
        let s = |x: &Stats| format!("{:.4},{:.4},{:.4}", x.mean_ms, x.stddev_ms, x.median_ms);
        format!(
            "{},{},{},{},{},{},{}",
            self.t,
            self.r,
            s(&self.request),
            s(&self.reply),
            s(&self.reply_check),
            s(&self.verify),
            self.request.samples
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveId;
    use crate::keys::setup_on;

    #[test]
    fn stats_of_known_samples() {
        let s = Stats::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean_ms, 2.5);
        assert_eq!(s.median_ms, 2.5);
        assert!((s.stddev_ms - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(Stats::from_samples(&[7.0]).stddev_ms, 0.0);
    }

    #[test]
    fn bench_cell_runs_on_toy_curve() {
        let (material, _) = setup_on(CurveId::Toy97, 256, 3).unwrap();
        let cell = bench_cell(&material, 3, 10, 2, 1).unwrap();
        assert_eq!(cell.request.samples, 2);
        assert_eq!(cell.reply.samples, 2);
        assert_eq!(cell.reply_check.samples, 2);
        assert_eq!(cell.csv_row().split(',').count(), CSV_HEADER.split(',').count());
        assert!(cell.csv_row().starts_with("3,10,"));
    }
}
