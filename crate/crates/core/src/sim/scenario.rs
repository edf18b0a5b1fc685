//! Scenario configuration, read from a `key = value` file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::PhaseTimings;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CryptoMode {
    /// Timings from [`ModeledCosts`]; no cryptography runs. Deterministic.
    Modeled,
    /// Runs the full protocol and charges measured wall-clock time.
    Real,
}

impl std::str::FromStr for CryptoMode {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "modeled" => Ok(CryptoMode::Modeled),
            "real" => Ok(CryptoMode::Real),
            other => Err(ScenarioError::Invalid(format!("unknown crypto mode {other:?}"))),
        }
    }
}

/// Per-operation cryptographic costs in milliseconds, linear in the number
/// of fake members (`r - t`) or ring entries (`r`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeledCosts {
    pub request_base_ms: f64,
    pub request_per_fake_ms: f64,
    /// Replier side, including its check of every forgery.
    pub reply_base_ms: f64,
    pub reply_per_fake_ms: f64,
    /// Initiator check of one incoming fraction.
    pub validate_ms: f64,
    /// Initiator's own fraction plus the self-check of the announcement.
    pub finalize_base_ms: f64,
    pub finalize_per_entry_ms: f64,
}

impl Default for ModeledCosts {
    /// Fitted from a release-build `vanet-trs bench` run on the reference
    /// container (one core).
    fn default() -> Self {
        ModeledCosts {
            request_base_ms: 0.27,
            request_per_fake_ms: 0.67,
            reply_base_ms: 0.45,
            reply_per_fake_ms: 0.92,
            validate_ms: 0.92,
            finalize_base_ms: 0.75,
            finalize_per_entry_ms: 0.92,
        }
    }
}

fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

impl ModeledCosts {
    pub fn request_ms(&self, t: u32, r: u32) -> f64 {
        self.request_base_ms + self.request_per_fake_ms * r.saturating_sub(t) as f64
    }

    pub fn reply_ms(&self, t: u32, r: u32) -> f64 {
        self.reply_base_ms + self.reply_per_fake_ms * r.saturating_sub(t) as f64
    }

    pub fn finalize_ms(&self, r: u32) -> f64 {
        self.finalize_base_ms + self.finalize_per_entry_ms * r as f64
    }

    /// Least-squares fit to benchmark cells (medians). The modeled reply
    /// includes the replier's forgery check. Needs at least two
    /// distinct values of `r - t` and of `r`; falls back to the defaults
    /// for any phase it cannot fit.
    pub fn calibrate(cells: &[PhaseTimings]) -> Self {
        let mut out = ModeledCosts::default();
        let fakes = |c: &PhaseTimings| (c.r - c.t) as f64;
        let req: Vec<_> = cells.iter().map(|c| (fakes(c), c.request.median_ms)).collect();
        let rep: Vec<_> = cells
            .iter()
            .map(|c| (fakes(c), c.reply.median_ms + c.reply_check.median_ms))
            .collect();
        let ver: Vec<_> = cells.iter().map(|c| (c.r as f64, c.verify.median_ms)).collect();
        if let Some((a, b)) = fit_line(&req) {
            out.request_base_ms = a.max(0.0);
            out.request_per_fake_ms = b.max(0.0);
        }
        if let Some((a, b)) = fit_line(&rep) {
            out.reply_base_ms = a.max(0.0);
            out.reply_per_fake_ms = b.max(0.0);
        }
        if let Some((_, b)) = fit_line(&ver) {
            out.validate_ms = b.max(0.0);
            out.finalize_per_entry_ms = b.max(0.0);
            out.finalize_base_ms = out.reply_base_ms;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimScenario {
    /// Meters.
    pub area_width: f64,
    pub area_height: f64,
    /// Blocks per side of the road grid.
    pub blocks: u32,
    pub vehicles: usize,
    pub mean_speed_kmh: f64,
    /// Radio range in meters.
    pub comm_range: f64,
    /// Vehicles this close to an event witness it.
    pub detection_radius: f64,
    /// Seconds.
    pub duration: f64,
    pub mobility_tick: f64,
    pub t: u32,
    pub r: u32,
    pub seed: u64,
    pub crypto_mode: CryptoMode,
    /// Fixed part of every hop.
    pub hop_base_ms: f64,
    pub bitrate_bps: f64,
    /// Uniform extra delay per hop, upper bound.
    pub hop_jitter_ms: f64,
    /// Uniform random backoff before each reply transmission, upper bound.
    pub mac_backoff_ms: f64,
    pub loss_rate: f64,
    /// Share of vehicles that reply when they witnessed the event.
    pub honest_fraction: f64,
    /// Seconds between repeats of an unanswered request; 0 sends it once.
    pub rebroadcast_interval: f64,
    /// Seconds.
    pub session_timeout: f64,
    pub replay_window: f64,
    pub collusion_resistant: bool,
    pub encrypted_replies: bool,
    pub costs: ModeledCosts,
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario {
            area_width: 2400.0,
            area_height: 2400.0,
            blocks: 6,
            vehicles: 150,
            mean_speed_kmh: 60.0,
            comm_range: 300.0,
            detection_radius: crate::protocol::DEFAULT_DETECTION_RADIUS,
            duration: 200.0,
            mobility_tick: 0.5,
            t: 3,
            r: 20,
            seed: 1,
            crypto_mode: CryptoMode::Modeled,
            hop_base_ms: 1.0,
            bitrate_bps: 6e6,
            hop_jitter_ms: 0.2,
            mac_backoff_ms: 1.0,
            loss_rate: 0.0,
            honest_fraction: 1.0,
            rebroadcast_interval: 0.0,
            session_timeout: crate::protocol::DEFAULT_SESSION_TIMEOUT,
            replay_window: crate::protocol::DEFAULT_REPLAY_WINDOW,
            collusion_resistant: false,
            encrypted_replies: false,
            costs: ModeledCosts::default(),
        }
    }
}

impl SimScenario {
    pub fn from_config(text: &str) -> Result<Self, ScenarioError> {
        let s: SimScenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_config(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn area_km2(&self) -> f64 {
        self.area_width * self.area_height / 1e6
    }

    pub fn density(&self) -> f64 {
        self.vehicles as f64 / self.area_km2()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_owned()));
        let positive = [
            self.area_width,
            self.area_height,
            self.mean_speed_kmh,
            self.comm_range,
            self.detection_radius,
            self.duration,
            self.mobility_tick,
            self.bitrate_bps,
            self.session_timeout,
            self.replay_window,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("dimensions, speeds, ranges and durations must be positive");
        }
        if self.blocks == 0 {
            return bad("blocks must be at least 1");
        }
        if self.comm_range >= self.area_width.min(self.area_height) {
            return bad("comm_range must be smaller than the area");
        }
        let nonneg = [self.hop_base_ms, self.hop_jitter_ms, self.mac_backoff_ms, self.rebroadcast_interval];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("delay parameters must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.loss_rate) || !(0.0..=1.0).contains(&self.honest_fraction) {
            return bad("loss_rate and honest_fraction must lie in [0, 1]");
        }
        if self.t == 0 || self.r < self.t || self.r - self.t <= crate::itrs::MIN_FAKE_MEMBERS {
            return bad("need t >= 1 and r - t > 5");
        }
        Ok(())
    }
}
