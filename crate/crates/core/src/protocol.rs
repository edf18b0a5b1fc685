//! The three-packet aggregation protocol.
//!
//! An initiator that witnesses an event broadcasts a [`RequestPacket`];
//! willing neighbours answer with a [`ReplyPacket`] holding a signature
//! fraction (sealed to the initiator's short-term key in encrypted-reply
//! mode); once `t - 1` fractions validate, the initiator emits an
//! [`AggregationPacket`] that any vehicle can check with
//! [`verify_announcement`].
//!
//! Wire format: every packet is a one-byte type tag (`0x01` request, `0x02`
//! reply, `0x03` aggregation) followed by the body; all integers are
//! big-endian. See `docs/wire-format.md`.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use rand::RngCore;
use thiserror::Error;

use crate::cipher::{open, seal, seal_overhead};
use crate::curve::Curve;
use crate::error::{DecodeError, FractionReject, SignError, VerifyError};
use crate::itrs::{
    build_request_with, entry_len, verify_ring, PlateGenerator, PreparedRequest, RequestOptions,
    RingAnnouncement, SignFraction, SignRequest,
};
use crate::keys::{IdentityKey, SystemParams};
use crate::wire::{put_string, Reader};

pub const TAG_REQUEST: u8 = 0x01;
pub const TAG_REPLY: u8 = 0x02;
pub const TAG_AGGREGATION: u8 = 0x03;

const REPLY_PLAIN: u8 = 0x00;
const REPLY_SEALED: u8 = 0x01;

pub const DEFAULT_SESSION_TIMEOUT: f64 = 120.0;
pub const DEFAULT_REPLAY_WINDOW: f64 = 300.0;
pub const DEFAULT_DETECTION_RADIUS: f64 = 300.0;

/// Grid used to decide whether two requests describe the same event.
pub const EVENT_CELL_METERS: f64 = 50.0;
pub const EVENT_TIME_BUCKET: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Sign(#[from] SignError),
    #[error("event time {event_time} lies after the current time {now}")]
    EventInFuture { event_time: f64, now: f64 },
    #[error("session is not ready: {accepted} of {needed} fractions")]
    NotReady { accepted: usize, needed: usize },
    #[error("assembly failed: {0}")]
    AssemblyFailed(SignError),
    #[error("assembled announcement failed its self-check: {0}")]
    SelfCheckFailed(VerifyError),
    #[error("malformed packet: {0}")]
    MalformedPacket(#[from] DecodeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EventKind {
    Jam = 1,
    Accident = 2,
    Hazard = 3,
    Roadwork = 4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Direction {
    North = 1,
    East = 2,
    South = 3,
    West = 4,
}

impl EventKind {
    fn from_u8(v: u8) -> Result<Self, DecodeError> {
        Ok(match v {
            1 => EventKind::Jam,
            2 => EventKind::Accident,
            3 => EventKind::Hazard,
            4 => EventKind::Roadwork,
            _ => return Err(DecodeError::InvalidField("event kind")),
        })
    }
}

impl Direction {
    fn from_u8(v: u8) -> Result<Self, DecodeError> {
        Ok(match v {
            1 => Direction::North,
            2 => Direction::East,
            3 => Direction::South,
            4 => Direction::West,
            _ => return Err(DecodeError::InvalidField("direction")),
        })
    }
}

/// Structured content of an announcement; its encoding is the signed `msg`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventDescription {
    pub x: f64,
    pub y: f64,
    pub kind: EventKind,
    pub direction: Direction,
    pub road: String,
    /// Simulation time in seconds.
    pub time: f64,
}

/// Identity of an event for duplicate-request handling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventKey {
    cell_x: i64,
    cell_y: i64,
    kind: EventKind,
    time_bucket: i64,
}

impl EventDescription {
    /// `x (f64) || y (f64) || kind || direction || road (u16 len) || time (f64)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + self.road.len());
        out.extend_from_slice(&self.x.to_be_bytes());
        out.extend_from_slice(&self.y.to_be_bytes());
        out.push(self.kind as u8);
        out.push(self.direction as u8);
        put_string(&mut out, &self.road);
        out.extend_from_slice(&self.time.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let x = r.f64()?;
        let y = r.f64()?;
        let kind = EventKind::from_u8(r.u8()?)?;
        let direction = Direction::from_u8(r.u8()?)?;
        let road = r.string()?;
        let time = r.f64()?;
        r.finish()?;
        if !(x.is_finite() && y.is_finite() && time.is_finite()) {
            return Err(DecodeError::InvalidField("non-finite coordinate"));
        }
        Ok(EventDescription {
            x,
            y,
            kind,
            direction,
            road,
            time,
        })
    }

    pub fn key(&self) -> EventKey {
        EventKey {
            cell_x: (self.x / EVENT_CELL_METERS).floor() as i64,
            cell_y: (self.y / EVENT_CELL_METERS).floor() as i64,
            kind: self.kind,
            time_bucket: (self.time / EVENT_TIME_BUCKET).floor() as i64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RequestPacket {
    pub request: SignRequest,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReplyPacket {
    Plain(SignFraction),
    /// Fraction sealed to the request's ephemeral key.
    Sealed(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregationPacket {
    pub announcement: RingAnnouncement,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Packet {
    Request(RequestPacket),
    Reply(ReplyPacket),
    Aggregation(AggregationPacket),
}

impl RequestPacket {
    pub fn event(&self) -> Result<EventDescription, DecodeError> {
        EventDescription::from_bytes(&self.request.msg)
    }

    pub fn threshold(&self) -> u32 {
        self.request.t
    }
}

impl AggregationPacket {
    pub fn event(&self) -> Result<EventDescription, DecodeError> {
        EventDescription::from_bytes(&self.announcement.msg)
    }
}

pub fn encode_packet(curve: &Curve, packet: &Packet) -> Vec<u8> {
    match packet {
        Packet::Request(p) => {
            let mut out = vec![TAG_REQUEST];
            out.extend(p.request.to_bytes(curve));
            out
        }
        Packet::Reply(ReplyPacket::Plain(f)) => {
            let mut out = vec![TAG_REPLY, REPLY_PLAIN];
            out.extend(f.to_bytes(curve));
            out
        }
        Packet::Reply(ReplyPacket::Sealed(c)) => {
            let mut out = vec![TAG_REPLY, REPLY_SEALED];
            out.extend_from_slice(&(c.len() as u32).to_be_bytes());
            out.extend_from_slice(c);
            out
        }
        Packet::Aggregation(p) => {
            let mut out = vec![TAG_AGGREGATION];
            out.extend(p.announcement.to_bytes(curve));
            out
        }
    }
}

pub fn decode_packet(curve: &Curve, bytes: &[u8]) -> Result<Packet, ProtocolError> {
    let mut r = Reader::new(bytes);
    let packet = match r.u8()? {
        TAG_REQUEST => {
            let request = SignRequest::decode(curve, &mut r)?;
            EventDescription::from_bytes(&request.msg)?;
            Packet::Request(RequestPacket { request })
        }
        TAG_REPLY => match r.u8()? {
            REPLY_PLAIN => Packet::Reply(ReplyPacket::Plain(SignFraction::decode(curve, &mut r)?)),
            REPLY_SEALED => {
                let len = r.u32()? as usize;
                Packet::Reply(ReplyPacket::Sealed(r.take(len)?.to_vec()))
            }
            _ => return Err(DecodeError::InvalidField("reply mode").into()),
        },
        TAG_AGGREGATION => {
            let announcement = RingAnnouncement::decode(curve, &mut r)?;
            EventDescription::from_bytes(&announcement.msg)?;
            Packet::Aggregation(AggregationPacket { announcement })
        }
        other => return Err(DecodeError::UnknownPacketType(other).into()),
    };
    r.finish()?;
    Ok(packet)
}

/// Encoded size of a request packet, for sizing transmissions without
/// building one. Fake identities are assumed to be `fake_id_len` bytes.
pub fn request_packet_len(
    curve: &Curve,
    msg_len: usize,
    t: u32,
    r: u32,
    fake_id_len: usize,
    collusion_resistant: bool,
    ephemeral: bool,
) -> usize {
    let fakes = r.saturating_sub(t) as usize;
    1 + 6 + 4 + msg_len + 8
        + fakes * entry_len(curve, fake_id_len, collusion_resistant)
        + if ephemeral { curve.point_len() } else { 0 }
}

pub fn reply_packet_len(curve: &Curve, replier_id_len: usize, collusion_resistant: bool, sealed: bool) -> usize {
    let fraction = 6 + entry_len(curve, replier_id_len, collusion_resistant);
    if sealed {
        2 + 4 + fraction + seal_overhead(curve)
    } else {
        2 + fraction
    }
}

// ---- initiator ----

#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub timeout: f64,
    pub collusion_resistant: bool,
    /// Seal replies to a short-term initiator key.
    pub encrypted_replies: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            timeout: DEFAULT_SESSION_TIMEOUT,
            collusion_resistant: false,
            encrypted_replies: false,
        }
    }
}

pub struct Initiator {
    key: IdentityKey,
    config: SessionConfig,
}

/// Why a reply did not count towards a session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DropReason {
    Expired,
    Decryption,
    Malformed,
    DuplicateReplier,
    Invalid(FractionReject),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplyOutcome {
    Accepted,
    Dropped(DropReason),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SessionDiagnostics {
    pub accepted: usize,
    pub dropped: Vec<DropReason>,
}

/// An open aggregation at the initiator.
pub struct Session {
    prepared: PreparedRequest,
    own_key: IdentityKey,
    opened_at: f64,
    deadline: f64,
    ephemeral_secret: Option<BigUint>,
    fractions: Vec<SignFraction>,
    diagnostics: SessionDiagnostics,
}

impl Initiator {
    pub fn new(key: IdentityKey, config: SessionConfig) -> Self {
        Initiator { key, config }
    }

    pub fn key(&self) -> &IdentityKey {
        &self.key
    }

    /// Builds the request packet and opens a session at time `now`.
    pub fn initiate<R: RngCore>(
        &self,
        params: &SystemParams,
        event: &EventDescription,
        t: u32,
        r: u32,
        now: f64,
        rng: &mut R,
    ) -> Result<(RequestPacket, Session), ProtocolError> {
        if event.time > now {
            return Err(ProtocolError::EventInFuture {
                event_time: event.time,
                now,
            });
        }
        let curve = params.curve();
        let ephemeral_secret = self
            .config
            .encrypted_replies
            .then(|| curve.random_scalar(rng));
        let options = RequestOptions {
            collusion_resistant: self.config.collusion_resistant,
            ephemeral_pk: ephemeral_secret.as_ref().map(|s| curve.mul_generator(s)),
        };
        let mut ids = PlateGenerator::excluding([self.key.id().to_owned()]);
        let request = build_request_with(params, &event.to_bytes(), t, r, &options, &mut ids, rng)?;
        let prepared = PreparedRequest::trusted(params, &request)?;
        let session = Session {
            prepared,
            own_key: self.key.clone(),
            opened_at: now,
            deadline: now + self.config.timeout,
            ephemeral_secret,
            fractions: Vec::new(),
            diagnostics: SessionDiagnostics::default(),
        };
        Ok((RequestPacket { request }, session))
    }
}

impl Session {
    pub fn request(&self) -> &SignRequest {
        self.prepared.request()
    }

    pub fn needed(&self) -> usize {
        (self.request().t - 1) as usize
    }

    pub fn accepted(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_ready(&self) -> bool {
        self.accepted() >= self.needed()
    }

    pub fn opened_at(&self) -> f64 {
        self.opened_at
    }

    pub fn deadline(&self) -> f64 {
        self.deadline
    }

    pub fn is_expired(&self, now: f64) -> bool {
        now > self.deadline
    }

    pub fn diagnostics(&self) -> &SessionDiagnostics {
        &self.diagnostics
    }

    fn drop_reply(&mut self, reason: DropReason) -> ReplyOutcome {
        self.diagnostics.dropped.push(reason.clone());
        ReplyOutcome::Dropped(reason)
    }

    pub fn handle_reply(&mut self, params: &SystemParams, packet: &ReplyPacket, now: f64) -> ReplyOutcome {
        if self.is_expired(now) {
            return self.drop_reply(DropReason::Expired);
        }
        let curve = params.curve();
        let fraction = match (packet, &self.ephemeral_secret) {
            (ReplyPacket::Plain(f), None) => f.clone(),
            (ReplyPacket::Sealed(c), Some(sk)) => {
                let plain = match open(curve, sk, c) {
                    Ok(p) => p,
                    Err(_) => return self.drop_reply(DropReason::Decryption),
                };
                match SignFraction::from_bytes(curve, &plain) {
                    Ok(f) => f,
                    Err(_) => return self.drop_reply(DropReason::Malformed),
                }
            }
            (ReplyPacket::Plain(_), Some(_)) => return self.drop_reply(DropReason::Decryption),
            (ReplyPacket::Sealed(_), None) => return self.drop_reply(DropReason::Decryption),
        };
        if fraction.replier_id == self.own_key.id()
            || self.fractions.iter().any(|f| f.replier_id == fraction.replier_id)
        {
            return self.drop_reply(DropReason::DuplicateReplier);
        }
        if let Err(reason) = self.prepared.validate(params, &fraction) {
            return self.drop_reply(DropReason::Invalid(reason));
        }
        self.fractions.push(fraction);
        self.diagnostics.accepted += 1;
        ReplyOutcome::Accepted
    }

    /// Assembles and self-checks the announcement.
    pub fn finalize<R: RngCore>(&self, params: &SystemParams, rng: &mut R) -> Result<AggregationPacket, ProtocolError> {
        if !self.is_ready() {
            return Err(ProtocolError::NotReady {
                accepted: self.accepted(),
                needed: self.needed(),
            });
        }
        let announcement = self
            .prepared
            .assemble(params, &self.own_key, &self.fractions, rng)
            .map_err(ProtocolError::AssemblyFailed)?;
        verify_ring(params, &announcement).map_err(ProtocolError::SelfCheckFailed)?;
        Ok(AggregationPacket { announcement })
    }
}

// ---- replier ----

/// Last threshold answered per event; absent means never answered.
#[derive(Clone, Debug, Default)]
pub struct ReplierState {
    last_reply: HashMap<EventKey, u32>,
}

impl ReplierState {
    pub fn last_threshold(&self, key: &EventKey) -> Option<u32> {
        self.last_reply.get(key).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplyDecision {
    Reply,
    Ignore,
}

#[derive(Clone, Copy, Debug)]
pub struct PendingRequest {
    pub arrival: f64,
    pub event: EventKey,
    pub threshold: u32,
}

impl PendingRequest {
    pub fn from_packet(packet: &RequestPacket, arrival: f64) -> Result<Self, DecodeError> {
        Ok(PendingRequest {
            arrival,
            event: packet.event()?.key(),
            threshold: packet.threshold(),
        })
    }
}

/// Duplicate-request policy: in arrival order, answer a request only if its
/// threshold exceeds the last one answered for the same event. Decisions
/// are returned in the order of `pending`.
pub fn reply_policy(state: &mut ReplierState, pending: &[PendingRequest]) -> Vec<ReplyDecision> {
    let mut order: Vec<usize> = (0..pending.len()).collect();
    order.sort_by(|&a, &b| pending[a].arrival.total_cmp(&pending[b].arrival));
    let mut decisions = vec![ReplyDecision::Ignore; pending.len()];
    for i in order {
        let p = &pending[i];
        let last = state.last_reply.get(&p.event);
        if last.is_none_or(|&l| p.threshold > l) {
            state.last_reply.insert(p.event, p.threshold);
            decisions[i] = ReplyDecision::Reply;
        }
    }
    decisions
}

#[derive(Clone, Debug)]
pub struct WillingnessPolicy {
    pub detection_radius: f64,
    pub honest: bool,
}

impl Default for WillingnessPolicy {
    fn default() -> Self {
        WillingnessPolicy {
            detection_radius: DEFAULT_DETECTION_RADIUS,
            honest: true,
        }
    }
}

impl WillingnessPolicy {
    pub fn willing(&self, event: &EventDescription, position: (f64, f64)) -> bool {
        self.honest && (event.x - position.0).hypot(event.y - position.1) <= self.detection_radius
    }
}

pub struct Replier {
    key: IdentityKey,
    state: ReplierState,
    policy: WillingnessPolicy,
}

impl Replier {
    pub fn new(key: IdentityKey, policy: WillingnessPolicy) -> Self {
        Replier {
            key,
            state: ReplierState::default(),
            policy,
        }
    }

    pub fn key(&self) -> &IdentityKey {
        &self.key
    }

    pub fn state(&self) -> &ReplierState {
        &self.state
    }

    /// Builds a reply for one request, sealing it when the request carries
    /// an ephemeral key.
    pub fn answer<R: RngCore>(
        &self,
        params: &SystemParams,
        packet: &RequestPacket,
        rng: &mut R,
    ) -> Result<ReplyPacket, SignError> {
        let prepared = PreparedRequest::check(params, &packet.request)?;
        let fraction = prepared.reply(params, &self.key, &HashSet::new(), rng)?;
        Ok(match &packet.request.ephemeral_pk {
            Some(pk) => {
                let curve = params.curve();
                ReplyPacket::Sealed(seal(curve, pk, &fraction.to_bytes(curve), rng))
            }
            None => ReplyPacket::Plain(fraction),
        })
    }

    /// Applies willingness and the duplicate-request policy to a batch of
    /// requests received at `position`, answering the selected ones.
    pub fn process<R: RngCore>(
        &mut self,
        params: &SystemParams,
        batch: &[(f64, &RequestPacket)],
        position: (f64, f64),
        rng: &mut R,
    ) -> Vec<Result<ReplyPacket, ProtocolError>> {
        let mut candidates = Vec::new();
        let mut pending = Vec::new();
        for (arrival, packet) in batch {
            let Ok(event) = packet.event() else { continue };
            if self.policy.willing(&event, position) {
                pending.push(PendingRequest {
                    arrival: *arrival,
                    event: event.key(),
                    threshold: packet.threshold(),
                });
                candidates.push(*packet);
            }
        }
        let decisions = reply_policy(&mut self.state, &pending);
        candidates
            .into_iter()
            .zip(decisions)
            .filter(|(_, d)| *d == ReplyDecision::Reply)
            .map(|(p, _)| self.answer(params, p, rng).map_err(ProtocolError::from))
            .collect()
    }
}

// ---- verifier ----

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnouncementReject {
    #[error("event is {age:.1}s old, outside the replay window")]
    Replay { age: f64 },
    #[error("event description does not parse")]
    BadEvent,
    #[error(transparent)]
    Crypto(#[from] VerifyError),
}

pub fn verify_announcement(
    params: &SystemParams,
    packet: &AggregationPacket,
    now: f64,
    replay_window: f64,
) -> Result<(), AnnouncementReject> {
    let event = packet.event().map_err(|_| AnnouncementReject::BadEvent)?;
    let age = now - event.time;
    if age.abs() > replay_window {
        return Err(AnnouncementReject::Replay { age });
    }
    verify_ring(params, &packet.announcement)?;
    Ok(())
}
