//! Software modem for the hard-drive seek-noise acoustic covert channel.
//!
//! The transmit side turns bits into frames (a 1010 preamble plus payload),
//! frames into an on-off keyed schedule of seek activity, and the schedule
//! either into a synthesized acoustic waveform or into positioned reads
//! against a real or mock disk. The receive side runs a moving-window FFT,
//! finds the carrier, band-pass filters it, and decodes the intensity
//! envelope back into bits. A channel simulator (distance loss, ambient
//! noise, casual disk-activity bursts, resampling) and a Monte Carlo BER
//! harness sit on top.

pub mod acoustics;
pub mod bits;
pub mod channel;
pub mod config;
pub mod dsp;
pub mod error;
pub mod framing;
pub mod harness;
pub mod hddtx;
pub mod levels;
pub mod modulation;
pub mod receiver;
pub mod seeds;
pub mod waveform;

#[cfg(test)]
pub(crate) mod testutil;

pub use bits::BitString;
pub use error::{Error, Result};
pub use waveform::Waveform;
