//! Repeated runs over a grid of vehicle counts, thresholds and ring sizes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{run_scenario, SimMetrics};
use super::scenario::{CryptoMode, ScenarioError, SimScenario};
use super::streams::derive_seed;

/// Seed of run `i`; independent of every other scenario parameter.
pub fn run_seed(base: u64, i: u32) -> u64 {
    derive_seed(base, "run", i as u64, 0)
}

/// Runs `runs` repetitions of `s` with derived seeds. Modeled runs go in
/// parallel; real-crypto runs stay sequential so timings do not compete.
pub fn run_batch(s: &SimScenario, runs: u32) -> Vec<SimMetrics> {
    let one = |i: u32| {
        let mut cell = s.clone();
        cell.seed = run_seed(s.seed, i);
        run_scenario(&cell)
    };
    match s.crypto_mode {
        CryptoMode::Modeled => (0..runs).into_par_iter().map(one).collect(),
        CryptoMode::Real => (0..runs).map(one).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub vehicles: Vec<usize>,
    pub t: Vec<u32>,
    pub r: Vec<u32>,
    pub runs: u32,
}

impl Default for SweepAxes {
    fn default() -> Self {
        SweepAxes {
            vehicles: vec![],
            t: vec![],
            r: vec![],
            runs: 100,
        }
    }
}

/// A base scenario plus the axes to vary. Empty axes keep the base value.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub base: SimScenario,
    pub axes: SweepAxes,
}

impl SweepSpec {
    /// Scenario keys at top level, axes in an optional `[sweep]` table.
    pub fn from_config(text: &str) -> Result<Self, ScenarioError> {
        let mut table: toml::Table = text.parse()?;
        let axes = match table.remove("sweep") {
            Some(v) => v.try_into()?,
            None => SweepAxes {
                runs: 1,
                ..SweepAxes::default()
            },
        };
        let base: SimScenario = table.try_into()?;
        let spec = SweepSpec { base, axes };
        for cell in spec.cells() {
            cell.validate()?;
        }
        Ok(spec)
    }

    pub fn cells(&self) -> Vec<SimScenario> {
        let or = |v: &Vec<usize>, d: usize| if v.is_empty() { vec![d] } else { v.clone() };
        let or32 = |v: &Vec<u32>, d: u32| if v.is_empty() { vec![d] } else { v.clone() };
        let mut out = Vec::new();
        for &vehicles in &or(&self.axes.vehicles, self.base.vehicles) {
            for &r in &or32(&self.axes.r, self.base.r) {
                for &t in &or32(&self.axes.t, self.base.t) {
                    out.push(SimScenario {
                        vehicles,
                        t,
                        r,
                        ..self.base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub vehicles: usize,
    pub density_per_km2: f64,
    pub t: u32,
    pub r: u32,
    pub runs: u32,
    pub initiated: u32,
    pub successes: u32,
    /// Successes over initiated aggregations.
    pub validation_probability: f64,
    pub validation_ci_low: f64,
    pub validation_ci_high: f64,
    pub mean_aggregation_delay_ms: Option<f64>,
    pub mean_crypto_time_ms: Option<f64>,
    pub mean_non_crypto_delay_ms: Option<f64>,
    /// Half-width of the normal 95% interval on the mean above.
    pub non_crypto_ci_half_ms: Option<f64>,
    pub mean_replies_received: f64,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u32, n: u32) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn ci_half(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some(1.96 * (var / xs.len() as f64).sqrt())
}

impl CellSummary {
    pub fn from_runs(cell: &SimScenario, runs: &[SimMetrics]) -> Self {
        let initiated = runs.iter().filter(|m| m.initiated).count() as u32;
        let ok: Vec<&SimMetrics> = runs.iter().filter(|m| m.success).collect();
        let successes = ok.len() as u32;
        let (lo, hi) = wilson_interval(successes, initiated);
        let col = |f: fn(&SimMetrics) -> Option<f64>| ok.iter().filter_map(|m| f(m)).collect::<Vec<f64>>();
        let nc = col(|m| m.non_crypto_delay_ms);
        CellSummary {
            vehicles: cell.vehicles,
            density_per_km2: cell.density(),
            t: cell.t,
            r: cell.r,
            runs: runs.len() as u32,
            initiated,
            successes,
            validation_probability: if initiated == 0 {
                0.0
            } else {
                successes as f64 / initiated as f64
            },
            validation_ci_low: lo,
            validation_ci_high: hi,
            mean_aggregation_delay_ms: mean(&col(|m| m.aggregation_delay_ms)),
            mean_crypto_time_ms: mean(&col(|m| m.crypto_time_ms)),
            mean_non_crypto_delay_ms: mean(&nc),
            non_crypto_ci_half_ms: ci_half(&nc),
            mean_replies_received: runs.iter().map(|m| m.replies_received as f64).sum::<f64>()
                / runs.len().max(1) as f64,
        }
    }

    pub fn tidy(&self) -> Vec<TidyRow> {
        let mut rows = Vec::new();
        let mut push = |metric: &str, value: Option<f64>| {
            if let Some(value) = value {
                rows.push(TidyRow {
                    vehicles: self.vehicles,
                    density_per_km2: self.density_per_km2,
                    r: self.r,
                    t: self.t,
                    metric: metric.to_owned(),
                    value,
                });
            }
        };
        push("validation_probability", Some(self.validation_probability));
        push("aggregation_delay_ms", self.mean_aggregation_delay_ms);
        push("crypto_time_ms", self.mean_crypto_time_ms);
        push("non_crypto_delay_ms", self.mean_non_crypto_delay_ms);
        rows
    }
}

/// Long-format row: one metric value per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TidyRow {
    pub vehicles: usize,
    pub density_per_km2: f64,
    pub r: u32,
    pub t: u32,
    pub metric: String,
    pub value: f64,
}

/// Runs every cell `axes.runs` times. Run `i` of every cell uses the same
/// seed, so cells differ only in the swept parameter.
pub fn sweep(spec: &SweepSpec) -> Vec<CellSummary> {
    spec.cells()
        .iter()
        .map(|cell| CellSummary::from_runs(cell, &run_batch(cell, spec.axes.runs)))
        .collect()
}

/// Least-squares line through `(x, y)`: `(intercept, slope, r_squared)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((my - slope * mx, slope, r2))
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, rows: &[T]) -> std::io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
