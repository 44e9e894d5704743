//! Transmission frames: a fixed 1010 preamble followed by a payload.
//!
//! The preamble gives the receiver something to synchronize on and to
//! estimate the channel from; the payload carries data. There is no length
//! field, checksum or FEC in the frame itself — the final chunk of a
//! message is right-padded with zeros and the original bit length travels
//! out of band.

use crate::bits::BitString;
use crate::error::{Error, Result};

/// The fixed synchronization prefix, 1 0 1 0.
pub const PREAMBLE: [bool; 4] = [true, false, true, false];

/// Preamble length in bits.
pub const PREAMBLE_LEN: usize = PREAMBLE.len();

/// Default payload length in bits.
pub const DEFAULT_PAYLOAD_LEN: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    /// Payload bits per frame. Must be at least 1.
    pub payload_len: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            payload_len: DEFAULT_PAYLOAD_LEN,
        }
    }
}

impl FrameConfig {
    pub fn new(payload_len: usize) -> Result<Self> {
        if payload_len == 0 {
            return Err(Error::InvalidParameter(
                "payload_len must be at least 1".into(),
            ));
        }
        Ok(FrameConfig { payload_len })
    }

    /// Serialized frame length: preamble plus payload.
    pub fn frame_len(&self) -> usize {
        PREAMBLE_LEN + self.payload_len
    }
}

/// One transmission frame. The preamble is constant; only the payload varies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    payload: BitString,
}

impl Frame {
    pub fn new(payload: BitString, cfg: &FrameConfig) -> Result<Self> {
        if payload.len() != cfg.payload_len {
            return Err(Error::InvalidParameter(format!(
                "payload is {} bits, frame config wants {}",
                payload.len(),
                cfg.payload_len
            )));
        }
        Ok(Frame { payload })
    }

    pub fn preamble(&self) -> BitString {
        BitString::from_bools(PREAMBLE.to_vec())
    }

    pub fn payload(&self) -> &BitString {
        &self.payload
    }

    /// Preamble followed by payload.
    pub fn serialize(&self) -> BitString {
        let mut out = self.preamble();
        out.extend(&self.payload);
        out
    }
}

/// Split a payload into frames of `cfg.payload_len` bits, zero-padding the
/// final chunk on the right.
pub fn frame_encode(payload: &BitString, cfg: &FrameConfig) -> Result<Vec<Frame>> {
    if payload.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let mut frames = Vec::new();
    for chunk in payload.bits().chunks(cfg.payload_len) {
        let mut bits = chunk.to_vec();
        bits.resize(cfg.payload_len, false);
        frames.push(Frame {
            payload: BitString::from_bools(bits),
        });
    }
    Ok(frames)
}

/// Concatenate the serialized form of each frame, in order.
pub fn frame_serialize(frames: &[Frame]) -> Result<BitString> {
    if frames.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let mut out = BitString::new();
    for frame in frames {
        out.extend(&frame.serialize());
    }
    Ok(out)
}

/// Inverse of [`frame_serialize`]. Rejects streams whose length is not a
/// whole number of frames and frames that do not start with 1010.
pub fn frame_deserialize(bits: &BitString, cfg: &FrameConfig) -> Result<Vec<Frame>> {
    let frame_len = cfg.frame_len();
    if bits.is_empty() || bits.len() % frame_len != 0 {
        return Err(Error::TruncatedFrame {
            got: bits.len(),
            frame_len,
        });
    }
    let mut frames = Vec::with_capacity(bits.len() / frame_len);
    for (i, chunk) in bits.bits().chunks(frame_len).enumerate() {
        if chunk[..PREAMBLE_LEN] != PREAMBLE {
            return Err(Error::PreambleMismatch(i));
        }
        frames.push(Frame {
            payload: BitString::from_bools(chunk[PREAMBLE_LEN..].to_vec()),
        });
    }
    Ok(frames)
}

/// Concatenated frame payloads truncated to the original bit length;
/// undoes the padding applied by [`frame_encode`].
pub fn frames_to_payload(frames: &[Frame], original_len: usize) -> BitString {
    let mut out = BitString::new();
    for frame in frames {
        out.extend(&frame.payload);
    }
    out.truncated(original_len)
}
