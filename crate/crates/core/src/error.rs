use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("two interpolation points share an abscissa")]
    DuplicateAbscissa,
    #[error("interpolation needs at least one point")]
    NoPoints,
}

/// Failure to parse a binary encoding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("input truncated")]
    Truncated,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown packet type 0x{0:02x}")]
    UnknownPacketType(u8),
    #[error("unknown curve id {0}")]
    UnknownCurve(u8),
    #[error("invalid curve point encoding")]
    InvalidPoint,
    #[error("scalar out of range")]
    InvalidScalar,
    #[error("invalid field value: {0}")]
    InvalidField(&'static str),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key vector length {got} does not match the {expected}-bit identity hash")]
    KeyVectorLength { expected: usize, got: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Reasons a signature fraction is discarded by the initiator.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FractionReject {
    #[error("index reused by a fake ring member")]
    GammaCollision,
    #[error("index reused by another fraction")]
    GammaReused,
    #[error("zero index")]
    ZeroGamma,
    #[error("replier identity already present")]
    DuplicateReplier,
    #[error("replier identity collides with a fake member")]
    IdCollision,
    #[error("Elgamal signature does not verify")]
    BadSignature,
    #[error("fraction does not lie on the request polynomial")]
    OffPolynomial,
    #[error("variant point missing or unexpected")]
    VariantMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignError {
    #[error("ring size {r} minus threshold {t} must exceed 5")]
    ThresholdTooClose { t: u32, r: u32 },
    #[error("threshold must be at least 1")]
    ZeroThreshold,
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
    #[error("signer identity appears among the fake members")]
    IdCollision,
    #[error("signing key does not match the requested variant")]
    VariantMismatch,
    #[error("need {needed} usable fractions, have {usable}")]
    InsufficientFractions {
        needed: usize,
        usable: usize,
        rejected: Vec<(String, FractionReject)>,
    },
}

/// Why a ring announcement failed verification.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("malformed ring: {0}")]
    Structure(&'static str),
    #[error("signature of ring entry {0} does not verify")]
    Signature(usize),
    #[error("ring entries do not lie on one polynomial of the claimed degree")]
    Polynomial,
}
