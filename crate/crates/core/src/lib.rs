//! Sybil-resistant, privacy-preserving vehicular announcements.
//!
//! A vehicle that witnesses a road event asks nearby vehicles to endorse
//! it. Endorsements are combined into an interactive threshold ring
//! signature: the announcement proves that at least `t` distinct key
//! holders signed, while hiding them among `r` ring members, `r - t` of
//! which are forged from combined-public-key (CPK) identities.
//!
//! Module map:
//!
//! * [`field`]: GF(2^l) arithmetic and Lagrange interpolation.
//! * [`curve`], [`hash`], [`cipher`]: primitives.
//! * [`keys`]: trusted-authority setup and identity key derivation.
//! * [`elgamal`]: EC-Elgamal signatures and forgeries.
//! * [`itrs`]: the threshold ring signature (request, reply, assemble, verify).
//! * [`protocol`]: packets, role state machines and the wire format.
//! * [`sim`]: discrete-event VANET simulator and anonymity analysis.
//! * [`bench`]: phase timing used by the benchmark command.

pub mod bench;
pub mod cipher;
pub mod curve;
pub mod elgamal;
pub mod error;
pub mod field;
pub mod hash;
pub mod itrs;
pub mod keys;
pub mod protocol;
pub mod sim;
mod wire;

pub use curve::{Curve, CurveId, Point};
pub use elgamal::ElgamalTriple;
pub use error::{DecodeError, FieldError, FractionReject, KeyError, SignError, VerifyError};
pub use field::{BinaryField, Gf16, Gf256, Polynomial};
pub use itrs::{RingAnnouncement, SignFraction, SignRequest};
pub use keys::{IdentityKey, MasterKeyMaterial, SystemParams};
