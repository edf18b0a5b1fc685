//! One simulated aggregation: mobility until an event is detected, then
//! request, replies and assembly over a shared broadcast medium.
//!
//! Every timestamp after detection is a [`Stamp`] that also carries a
//! second clock in which cryptographic work costs nothing. Both clocks pass
//! through the same `max` and `+` steps, so the second one yields the
//! non-cryptographic share of the delay along the path that actually
//! determined the outcome, and it can never exceed the first.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mobility::{Grid, Vehicle};
use super::queue::EventQueue;
use super::scenario::{CryptoMode, SimScenario};
use super::streams::{derive_seed, stream, unit};
use crate::keys::{derive_private, setup_on, MasterKeyMaterial, SystemParams};
use crate::protocol::{
    reply_packet_len, request_packet_len, reply_policy, verify_announcement, Direction,
    EventDescription, EventKind, Initiator, PendingRequest, Replier, ReplierState, ReplyDecision,
    ReplyOutcome, ReplyPacket, RequestPacket, Session, SessionConfig, WillingnessPolicy,
};
use crate::curve::CurveId;

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub seed: u64,
    pub vehicles: usize,
    pub density_per_km2: f64,
    pub t: u32,
    pub r: u32,
    pub initiated: bool,
    pub success: bool,
    pub timed_out: bool,
    pub event_time: f64,
    pub detect_time: Option<f64>,
    /// Vehicles other than the initiator that came within the detection
    /// radius before the run ended.
    pub witnesses: usize,
    /// Willing witnesses in radio range of the initiator at some broadcast.
    pub willing_in_range: usize,
    pub requests_received: usize,
    pub replies_sent: usize,
    pub replies_received: usize,
    pub replies_accepted: usize,
    pub request_bytes: usize,
    pub aggregation_delay_ms: Option<f64>,
    pub crypto_time_ms: Option<f64>,
    pub non_crypto_delay_ms: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Stamp {
    real: f64,
    /// Same path with cryptographic work taking no time.
    free: f64,
}

impl Stamp {
    fn at(t: f64) -> Self {
        Stamp { real: t, free: t }
    }

    fn plus(self, network: f64, crypto: f64) -> Self {
        Stamp {
            real: self.real + network + crypto,
            free: self.free + network,
        }
    }

    fn max(self, other: Stamp) -> Self {
        Stamp {
            real: self.real.max(other.real),
            free: self.free.max(other.free),
        }
    }
}

enum Ev {
    Tick,
    Broadcast { k: u32 },
    RequestArrive { v: usize, at: Stamp },
    ReplyReady { v: usize, at: Stamp, packet: Option<ReplyPacket> },
    ReplyArrive { at: Stamp, packet: Option<ReplyPacket> },
    Timeout,
}

fn vehicle_id(i: usize) -> String {
    format!("VEH-{i:05}")
}

const FAKE_ID_LEN: usize = 8;

/// Crypto state for runs that execute the real protocol.
struct RealCrypto {
    material: MasterKeyMaterial,
    params: SystemParams,
    rng: rand_chacha::ChaCha20Rng,
    session: Option<Session>,
    request: Option<RequestPacket>,
    repliers: Vec<Option<Replier>>,
}

fn secs_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

struct Run<'a> {
    s: &'a SimScenario,
    seed: u64,
    grid: Grid,
    fleet: Vec<Vehicle>,
    q: EventQueue<Ev>,
    metrics: SimMetrics,
    initiator: usize,
    event: Option<EventDescription>,
    event_pos: (f64, f64),
    road_name: String,
    /// Where each vehicle first saw the event.
    witness_pos: Vec<Option<(f64, f64)>>,
    willing_reached: Vec<bool>,
    states: Vec<ReplierState>,
    sent_at: Stamp,
    deadline: f64,
    medium_free: Stamp,
    proc_free: Stamp,
    real: Option<RealCrypto>,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Runs one scenario; a pure function of `s` in modeled crypto mode.
pub fn run_scenario(s: &SimScenario) -> SimMetrics {
    let seed = s.seed;
    let grid = Grid {
        width: s.area_width,
        height: s.area_height,
        blocks_x: s.blocks,
        blocks_y: s.blocks,
    };
    let fleet: Vec<Vehicle> = (0..s.vehicles)
        .map(|i| Vehicle::spawn(&grid, s.mean_speed_kmh, stream(seed, "vehicle", i as u64)))
        .collect();
    let mut ev_rng = stream(seed, "event", 0);
    let event_time = ev_rng.random_range(0.1..=0.5) * s.duration;
    let spot = grid.random_position(&mut ev_rng);

    let real = (s.crypto_mode == CryptoMode::Real).then(|| {
        let (material, params) =
            setup_on(CurveId::P256, 256, derive_seed(seed, "keys", 0, 0)).expect("256-bit key vector");
        RealCrypto {
            material,
            params,
            rng: stream(seed, "crypto", 0),
            session: None,
            request: None,
            repliers: (0..s.vehicles).map(|_| None).collect(),
        }
    });

    let mut run = Run {
        s,
        seed,
        grid,
        fleet,
        q: EventQueue::new(),
        metrics: SimMetrics {
            seed,
            vehicles: s.vehicles,
            density_per_km2: s.density(),
            t: s.t,
            r: s.r,
            initiated: false,
            success: false,
            timed_out: false,
            event_time,
            detect_time: None,
            witnesses: 0,
            willing_in_range: 0,
            requests_received: 0,
            replies_sent: 0,
            replies_received: 0,
            replies_accepted: 0,
            request_bytes: 0,
            aggregation_delay_ms: None,
            crypto_time_ms: None,
            non_crypto_delay_ms: None,
        },
        initiator: 0,
        event: None,
        event_pos: (spot.x, spot.y),
        road_name: format!("{}{}", if spot.horizontal { "H" } else { "V" }, spot.road),
        witness_pos: vec![None; s.vehicles],
        willing_reached: vec![false; s.vehicles],
        states: vec![ReplierState::default(); s.vehicles],
        sent_at: Stamp::at(0.0),
        deadline: f64::INFINITY,
        medium_free: Stamp::at(0.0),
        proc_free: Stamp::at(0.0),
        real,
    };
    run.q.push(0.0, Ev::Tick);
    while let Some((now, ev)) = run.q.pop() {
        let finished = match ev {
            Ev::Tick => run.tick(now),
            Ev::Broadcast { k } => run.broadcast(k),
            Ev::RequestArrive { v, at } => run.request_arrive(v, at),
            Ev::ReplyReady { v, at, packet } => run.reply_ready(v, at, packet),
            Ev::ReplyArrive { at, packet } => run.reply_arrive(at, packet),
            Ev::Timeout => {
                run.metrics.timed_out = true;
                run.close_counts();
                true
            }
        };
        if finished {
            break;
        }
    }
    run.metrics
}

impl Run<'_> {
    fn hop(&self, bytes: usize, sender: usize, salt: u64) -> f64 {
        let jitter = unit(self.seed, "jitter", sender as u64, salt) * self.s.hop_jitter_ms;
        (self.s.hop_base_ms + jitter) / 1e3 + bytes as f64 * 8.0 / self.s.bitrate_bps
    }

    fn lost(&self, v: usize, kind: u64) -> bool {
        self.s.loss_rate > 0.0 && unit(self.seed, "loss", v as u64, kind) < self.s.loss_rate
    }

    fn honest(&self, v: usize) -> bool {
        unit(self.seed, "honest", v as u64, 0) < self.s.honest_fraction
    }

    /// Moves the fleet and records who can see the event. The first tick at
    /// or after the event time with a vehicle in detection range starts the
    /// aggregation; ticks then continue until the session deadline.
    fn tick(&mut self, now: f64) -> bool {
        if now > 0.0 {
            for v in &mut self.fleet {
                v.advance(&self.grid, self.s.mobility_tick);
            }
        }
        let mut finished = false;
        if now >= self.metrics.event_time {
            let mut nearest: Option<(f64, usize)> = None;
            for (i, v) in self.fleet.iter().enumerate() {
                let d = dist(v.position(), self.event_pos);
                if d > self.s.detection_radius {
                    continue;
                }
                if self.witness_pos[i].is_none() {
                    self.witness_pos[i] = Some(v.position());
                }
                if nearest.is_none_or(|(best, _)| d < best) {
                    nearest = Some((d, i));
                }
            }
            if let (false, Some((_, first))) = (self.metrics.initiated, nearest) {
                self.detect(now, first);
                finished = self.s.t == 1 && self.finish_now();
            }
        }
        let horizon = if self.metrics.initiated {
            self.deadline
        } else {
            self.s.duration
        };
        let next = now + self.s.mobility_tick;
        if finished || next > horizon {
            return finished || !self.metrics.initiated;
        }
        self.q.push(next, Ev::Tick);
        false
    }

    fn detect(&mut self, now: f64, initiator: usize) {
        self.initiator = initiator;
        self.metrics.initiated = true;
        self.metrics.detect_time = Some(now);
        let mut ev_rng = stream(self.seed, "event-kind", 0);
        let event = EventDescription {
            x: self.event_pos.0,
            y: self.event_pos.1,
            kind: [EventKind::Jam, EventKind::Accident, EventKind::Hazard, EventKind::Roadwork]
                [ev_rng.random_range(0..4)],
            direction: [Direction::North, Direction::East, Direction::South, Direction::West]
                [ev_rng.random_range(0..4)],
            road: self.road_name.clone(),
            time: now,
        };
        let s = self.s;

        let (cost, bytes) = match &mut self.real {
            None => (
                s.costs.request_ms(s.t, s.r) / 1e3,
                request_packet_len(
                    &crate::curve::P256,
                    event.to_bytes().len(),
                    s.t,
                    s.r,
                    FAKE_ID_LEN,
                    s.collusion_resistant,
                    s.encrypted_replies,
                ),
            ),
            Some(rc) => {
                let key = own_key(&rc.material, initiator, s.collusion_resistant, &mut rc.rng);
                let init = Initiator::new(
                    key,
                    SessionConfig {
                        timeout: s.session_timeout,
                        collusion_resistant: s.collusion_resistant,
                        encrypted_replies: s.encrypted_replies,
                    },
                );
                let start = Instant::now();
                let (packet, session) = init
                    .initiate(&rc.params, &event, s.t, s.r, now, &mut rc.rng)
                    .expect("scenario thresholds were validated");
                let cost = secs_since(start);
                let bytes = crate::protocol::encode_packet(
                    rc.params.curve(),
                    &crate::protocol::Packet::Request(packet.clone()),
                )
                .len();
                rc.session = Some(session);
                rc.request = Some(packet);
                (cost, bytes)
            }
        };
        self.event = Some(event);
        self.metrics.request_bytes = bytes;
        let sent = now + cost;
        self.sent_at = Stamp::at(sent);
        self.medium_free = self.sent_at;
        self.proc_free = self.sent_at;
        self.deadline = sent + s.session_timeout;
        self.q.push(sent, Ev::Broadcast { k: 0 });
        self.q.push(self.deadline, Ev::Timeout);
    }

    /// Transmission `k` of the request; repeats until the session ends.
    fn broadcast(&mut self, k: u32) -> bool {
        let s = self.s;
        let at = self.sent_at.plus(k as f64 * s.rebroadcast_interval, 0.0);
        let origin = self.fleet[self.initiator].position();
        for v in 0..self.fleet.len() {
            if v == self.initiator || dist(self.fleet[v].position(), origin) > s.comm_range {
                continue;
            }
            if self.witness_pos[v].is_some() && self.honest(v) {
                self.willing_reached[v] = true;
            }
            if self.lost(v, 2 * k as u64) {
                continue;
            }
            let salt = (k as u64) << 32 | v as u64;
            let arrive = at.plus(self.hop(self.metrics.request_bytes, self.initiator, salt), 0.0);
            self.q.push(arrive.real, Ev::RequestArrive { v, at: arrive });
        }
        if s.rebroadcast_interval > 0.0 {
            let next = self.sent_at.real + (k + 1) as f64 * s.rebroadcast_interval;
            if next < self.deadline {
                self.q.push(next, Ev::Broadcast { k: k + 1 });
            }
        }
        false
    }

    fn request_arrive(&mut self, v: usize, at: Stamp) -> bool {
        self.metrics.requests_received += 1;
        let s = self.s;
        let event = self.event.as_ref().expect("request after detection");
        let policy = WillingnessPolicy {
            detection_radius: s.detection_radius,
            honest: self.honest(v),
        };
        let position = self.witness_pos[v].unwrap_or(self.fleet[v].position());
        let (cost, packet) = match &mut self.real {
            None => {
                if !policy.willing(event, position) {
                    return false;
                }
                let pending = [PendingRequest {
                    arrival: at.real,
                    event: event.key(),
                    threshold: s.t,
                }];
                if reply_policy(&mut self.states[v], &pending)[0] != ReplyDecision::Reply {
                    return false;
                }
                (s.costs.reply_ms(s.t, s.r) / 1e3, None)
            }
            Some(rc) => {
                let key = own_key(&rc.material, v, s.collusion_resistant, &mut rc.rng);
                let replier = rc.repliers[v].get_or_insert_with(|| Replier::new(key, policy));
                let request = rc.request.as_ref().expect("request built");
                let start = Instant::now();
                let mut out = replier.process(&rc.params, &[(at.real, request)], position, &mut rc.rng);
                let cost = secs_since(start);
                match out.pop() {
                    Some(Ok(p)) => (cost, Some(p)),
                    _ => return false,
                }
            }
        };
        self.metrics.replies_sent += 1;
        let at = at.plus(0.0, cost);
        self.q.push(at.real, Ev::ReplyReady { v, at, packet });
        false
    }

    /// Replies share one medium around the initiator: each waits for it to
    /// be free, backs off for a uniform random time, then transmits.
    fn reply_ready(&mut self, v: usize, at: Stamp, packet: Option<ReplyPacket>) -> bool {
        let s = self.s;
        let bytes = match (&packet, &self.real) {
            (Some(p), Some(rc)) => {
                crate::protocol::encode_packet(rc.params.curve(), &crate::protocol::Packet::Reply(p.clone())).len()
            }
            _ => reply_packet_len(
                &crate::curve::P256,
                vehicle_id(v).len(),
                s.collusion_resistant,
                s.encrypted_replies,
            ),
        };
        let backoff = unit(self.seed, "backoff", v as u64, 0) * s.mac_backoff_ms / 1e3;
        let start = at.max(self.medium_free).plus(backoff, 0.0);
        let end = start.plus(self.hop(bytes, v, 1 << 32), 0.0);
        self.medium_free = end;
        if !self.lost(v, 1) {
            self.q.push(end.real, Ev::ReplyArrive { at: end, packet });
        }
        false
    }

    fn reply_arrive(&mut self, at: Stamp, packet: Option<ReplyPacket>) -> bool {
        if at.real > self.deadline {
            return false;
        }
        self.metrics.replies_received += 1;
        let s = self.s;
        let start = at.max(self.proc_free);
        let (cost, accepted) = match (&mut self.real, packet) {
            (Some(rc), Some(p)) => {
                let session = rc.session.as_mut().expect("session open");
                let t0 = Instant::now();
                let outcome = session.handle_reply(&rc.params, &p, at.real);
                (secs_since(t0), outcome == ReplyOutcome::Accepted)
            }
            _ => (s.costs.validate_ms / 1e3, true),
        };
        self.proc_free = start.plus(0.0, cost);
        if accepted {
            self.metrics.replies_accepted += 1;
            if self.metrics.replies_accepted == (s.t - 1) as usize {
                return self.finish_now();
            }
        }
        false
    }

    fn close_counts(&mut self) {
        let initiator = self.initiator;
        self.metrics.witnesses = self
            .witness_pos
            .iter()
            .enumerate()
            .filter(|(i, w)| *i != initiator && w.is_some())
            .count();
        self.metrics.willing_in_range = self.willing_reached.iter().filter(|w| **w).count();
    }

    /// Assembles once enough fractions are in; ends the run either way.
    fn finish_now(&mut self) -> bool {
        let s = self.s;
        let start = self.proc_free;
        let (cost, ok) = match &mut self.real {
            None => (s.costs.finalize_ms(s.r) / 1e3, true),
            Some(rc) => {
                let session = rc.session.as_ref().expect("session open");
                let t0 = Instant::now();
                let result = session.finalize(&rc.params, &mut rc.rng);
                let cost = secs_since(t0);
                let ok = match result {
                    Ok(packet) => {
                        verify_announcement(&rc.params, &packet, start.real + cost, s.replay_window).is_ok()
                    }
                    Err(_) => false,
                };
                (cost, ok)
            }
        };
        self.close_counts();
        let done = start.plus(0.0, cost);
        if ok && done.real <= self.deadline {
            let agg = done.real - self.sent_at.real;
            let free = done.free - self.sent_at.free;
            self.metrics.success = true;
            self.metrics.aggregation_delay_ms = Some(agg * 1e3);
            self.metrics.non_crypto_delay_ms = Some(free * 1e3);
            self.metrics.crypto_time_ms = Some((agg - free) * 1e3);
        }
        true
    }
}

fn own_key(
    material: &MasterKeyMaterial,
    v: usize,
    collusion_resistant: bool,
    rng: &mut rand_chacha::ChaCha20Rng,
) -> crate::keys::IdentityKey {
    if collusion_resistant {
        crate::keys::derive_private_v2(material, &vehicle_id(v), rng)
    } else {
        derive_private(material, &vehicle_id(v))
    }
}
