//! Uniformly sampled audio and its WAV representation.

use std::io::{Read, Seek, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Real-valued audio with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    /// Build from samples, hard-clipping anything outside [-1, 1].
    pub fn from_samples(mut samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        for s in &mut samples {
            *s = s.clamp(-1.0, 1.0);
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(duration_s: f64, sample_rate_hz: u32) -> Result<Self> {
        if !(duration_s >= 0.0) {
            return Err(Error::InvalidParameter("duration must be non-negative".into()));
        }
        let n = (duration_s * sample_rate_hz as f64).round() as usize;
        Self::from_samples(vec![0.0; n], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / 2.0
    }

    /// Multiply every sample by `gain`, clipping at full scale.
    pub fn scaled(&self, gain: f64) -> Waveform {
        let samples = self
            .samples
            .iter()
            .map(|s| (s * gain).clamp(-1.0, 1.0))
            .collect();
        Waveform {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Mean squared amplitude.
    pub fn mean_square(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Write as mono 16-bit PCM. Float amplitudes map to round(sample * 32767).
    pub fn write_wav<W: Write + Seek>(&self, w: W) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate_hz,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::new(w, spec)?;
        for &s in &self.samples {
            writer.write_sample((s * 32767.0).round() as i16)?;
        }
        writer.finalize()?;
        Ok(())
    }

    pub fn write_wav_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_wav(std::io::BufWriter::new(f))
    }

    /// Read mono 16-bit PCM WAV. Multi-channel input is mixed down by
    /// averaging.
    pub fn read_wav<R: Read>(r: R) -> Result<Self> {
        let mut reader = hound::WavReader::new(r)?;
        let spec = reader.spec();
        if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
            return Err(Error::Wav(format!(
                "expected 16-bit PCM, got {}-bit {:?}",
                spec.bits_per_sample, spec.sample_format
            )));
        }
        let channels = spec.channels as usize;
        let mut samples = Vec::new();
        let mut acc = 0.0f64;
        for (i, s) in reader.samples::<i16>().enumerate() {
            acc += s? as f64 / 32767.0;
            if (i + 1) % channels == 0 {
                samples.push(acc / channels as f64);
                acc = 0.0;
            }
        }
        Waveform::from_samples(samples, spec.sample_rate)
    }

    pub fn read_wav_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_wav(std::io::BufReader::new(f))
    }

    /// Read headerless 16-bit little-endian mono PCM at a declared rate.
    pub fn read_raw_pcm16<R: Read>(mut r: R, sample_rate_hz: u32) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let samples = bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32767.0)
            .collect();
        Waveform::from_samples(samples, sample_rate_hz)
    }
}
