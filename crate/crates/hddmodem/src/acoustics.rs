//! Synthesis of hard-drive acoustic emissions.
//!
//! Two sources are modeled. Idle noise from the spindle motor is a tone at
//! RPM/60 with a few harmonics over a weak broadband floor. Seek noise is a
//! narrowband component near the track-to-track seek frequency (a tone with
//! slow random amplitude jitter) plus band-limited broadband noise across
//! the seek band. There is no analytic model for the real emission spectrum,
//! so the synthesizer is phenomenological: it reproduces the measured bands
//! and level contrasts, which is what the receiver cares about.

use std::f64::consts::PI;

use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::levels::db_to_amplitude;
use crate::modulation::SymbolSchedule;
use crate::seeds;
use crate::waveform::Waveform;

/// Emission profile of one drive/chassis combination.
///
/// All levels are dB relative to full scale; `f64::NEG_INFINITY` disables a
/// component.
#[derive(Debug, Clone, PartialEq)]
pub struct HddProfile {
    /// Spindle speed in revolutions per minute.
    pub rpm: u32,
    /// Center of the informative narrowband seek component.
    pub seek_carrier_hz: f64,
    /// Broadband seek-noise band (low, high) in Hz.
    pub seek_band: (f64, f64),
    /// Narrowband seek component level (peak).
    pub carrier_level_db: f64,
    /// Broadband seek-noise level (RMS).
    pub broadband_level_db: f64,
    /// Idle-tone fundamental level (peak).
    pub idle_level_db: f64,
    /// Idle broadband floor level (RMS); defaults 25 dB below the fundamental.
    pub idle_floor_db: f64,
    /// Number of idle tone components including the fundamental.
    pub idle_harmonics: u32,
}

impl Default for HddProfile {
    fn default() -> Self {
        HddProfile {
            rpm: 7200,
            // 1 / 0.48 ms track-to-track seek time.
            seek_carrier_hz: 1.0 / 0.00048,
            seek_band: (1500.0, 8000.0),
            carrier_level_db: -20.0,
            broadband_level_db: -35.0,
            idle_level_db: -45.0,
            idle_floor_db: -70.0,
            idle_harmonics: 3,
        }
    }
}

impl HddProfile {
    pub fn validate(&self) -> Result<()> {
        if self.rpm == 0 {
            return Err(Error::InvalidParameter("rpm must be positive".into()));
        }
        let (lo, hi) = self.seek_band;
        if !(lo < hi) || lo < 0.0 {
            return Err(Error::InvalidBand {
                low_hz: lo,
                high_hz: hi,
            });
        }
        if self.seek_carrier_hz < lo || self.seek_carrier_hz > hi {
            return Err(Error::InvalidParameter(format!(
                "seek carrier {} Hz lies outside the seek band [{lo}, {hi}]",
                self.seek_carrier_hz
            )));
        }
        for (name, db) in [
            ("carrier_level_db", self.carrier_level_db),
            ("broadband_level_db", self.broadband_level_db),
            ("idle_level_db", self.idle_level_db),
            ("idle_floor_db", self.idle_floor_db),
        ] {
            if db > 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must not exceed 0 dBFS (got {db})"
                )));
            }
        }
        Ok(())
    }

    /// Quiet emission preset: the same spectral shape at much lower levels,
    /// as from a well-damped chassis at the edge of decodability. Used by
    /// the SNR sweep so that ambient noise can actually dominate the
    /// carrier band without clipping.
    pub fn quiet() -> Self {
        HddProfile {
            carrier_level_db: -50.0,
            broadband_level_db: -62.0,
            idle_level_db: -70.0,
            idle_floor_db: -95.0,
            ..HddProfile::default()
        }
    }

    /// External 2.5" 5400 RPM drive: slower spindle, somewhat quieter seeks.
    pub fn external_5400() -> Self {
        HddProfile {
            rpm: 5400,
            carrier_level_db: -26.0,
            broadband_level_db: -41.0,
            idle_level_db: -50.0,
            idle_floor_db: -75.0,
            ..HddProfile::default()
        }
    }
}

/// Idle-noise fundamental: spindle revolutions per second.
pub fn idle_fundamental_hz(rpm: u32) -> Result<f64> {
    if rpm == 0 {
        return Err(Error::InvalidParameter("rpm must be positive".into()));
    }
    Ok(rpm as f64 / 60.0)
}

/// Seek carrier frequency implied by a track-to-track seek time.
pub fn carrier_from_track_seek(track_seek_time_s: f64) -> Result<f64> {
    if !(track_seek_time_s > 0.0) {
        return Err(Error::InvalidParameter(
            "track-to-track seek time must be positive".into(),
        ));
    }
    Ok(1.0 / track_seek_time_s)
}

fn sample_count(duration_s: f64, sample_rate_hz: u32) -> Result<usize> {
    if !(duration_s > 0.0) {
        return Err(Error::InvalidParameter("duration must be positive".into()));
    }
    if sample_rate_hz == 0 {
        return Err(Error::InvalidParameter("sample rate must be positive".into()));
    }
    Ok((duration_s * sample_rate_hz as f64).round() as usize)
}

/// Gaussian white noise with a flat spectrum confined to [low, high] Hz,
/// scaled to `rms`. Synthesized in the frequency domain so the in-band
/// spectrum is flat by construction. Also used by the channel's casual
/// burst generator.
pub(crate) fn band_noise(
    n: usize,
    sample_rate_hz: u32,
    low_hz: f64,
    high_hz: f64,
    rms: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    if n == 0 || rms <= 0.0 {
        return vec![0.0; n];
    }
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let bin_hz = sample_rate_hz as f64 / n as f64;
    let half = n / 2;
    let mut occupied = 0usize;
    for j in 1..=half {
        let f = j as f64 * bin_hz;
        if f < low_hz || f > high_hz {
            continue;
        }
        occupied += 1;
        let re: f64 = sample_standard_normal(rng);
        let im: f64 = if j == half && n % 2 == 0 {
            0.0
        } else {
            sample_standard_normal(rng)
        };
        spectrum[j] = Complex::new(re, im);
        if j != half || n % 2 != 0 {
            spectrum[n - j] = spectrum[j].conj();
        }
    }
    if occupied == 0 {
        return vec![0.0; n];
    }
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    ifft.process(&mut spectrum);
    let mut out: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    let ms = out.iter().map(|s| s * s).sum::<f64>() / n as f64;
    if ms > 0.0 {
        let k = rms / ms.sqrt();
        for s in &mut out {
            *s *= k;
        }
    }
    out
}

fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    StandardNormal.sample(rng)
}

/// Slow random amplitude jitter: piecewise-linear interpolation of Gaussian
/// control points at `control_rate_hz`, clamped so the factor stays positive.
fn amplitude_jitter(
    n: usize,
    sample_rate_hz: u32,
    control_rate_hz: f64,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let step = (sample_rate_hz as f64 / control_rate_hz).max(1.0);
    let points = (n as f64 / step).ceil() as usize + 2;
    let controls: Vec<f64> = (0..points)
        .map(|_| (sample_standard_normal(rng) * sigma).clamp(-0.4, 0.4))
        .collect();
    (0..n)
        .map(|i| {
            let x = i as f64 / step;
            let k = x.floor() as usize;
            let frac = x - k as f64;
            1.0 + controls[k] * (1.0 - frac) + controls[k + 1] * frac
        })
        .collect()
}

/// Spindle idle noise: fundamental at RPM/60 plus harmonics rolled off
/// 6 dB per step, over a weak white floor.
pub fn synth_idle(
    profile: &HddProfile,
    duration_s: f64,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<Waveform> {
    profile.validate()?;
    let n = sample_count(duration_s, sample_rate_hz)?;
    let f0 = idle_fundamental_hz(profile.rpm)?;
    let top = profile.idle_harmonics as f64 * f0;
    if (sample_rate_hz as f64) < 2.0 * top {
        return Err(Error::NyquistViolation {
            sample_rate_hz,
            required_hz: top,
        });
    }
    let mut rng = seeds::rng(seed, 0x1d1e);
    let mut samples = vec![0.0f64; n];
    for h in 1..=profile.idle_harmonics {
        let amp = db_to_amplitude(profile.idle_level_db - 6.0 * (h - 1) as f64);
        if amp == 0.0 {
            continue;
        }
        let f = h as f64 * f0;
        let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
        let w = 2.0 * PI * f / sample_rate_hz as f64;
        for (i, s) in samples.iter_mut().enumerate() {
            *s += amp * (w * i as f64 + phase).sin();
        }
    }
    let floor_rms = db_to_amplitude(profile.idle_floor_db);
    if floor_rms > 0.0 {
        let mut floor_rng = seeds::rng(seed, 0x1d1f);
        for s in &mut samples {
            *s += floor_rms * sample_standard_normal(&mut floor_rng);
        }
    }
    Waveform::from_samples(samples, sample_rate_hz)
}

/// Seek-activity noise: jittered narrowband tone at the seek carrier plus
/// broadband noise across the seek band.
pub fn synth_seek_burst(
    profile: &HddProfile,
    duration_s: f64,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<Waveform> {
    profile.validate()?;
    let n = sample_count(duration_s, sample_rate_hz)?;
    let nyquist = sample_rate_hz as f64 / 2.0;
    let (band_lo, mut band_hi) = profile.seek_band;
    if band_hi > nyquist {
        warn!(
            "seek band truncated at Nyquist: {band_hi} Hz -> {nyquist} Hz at {sample_rate_hz} Hz"
        );
        band_hi = nyquist;
    }
    let mut samples = vec![0.0f64; n];

    let carrier_amp = db_to_amplitude(profile.carrier_level_db);
    if carrier_amp > 0.0 {
        let mut rng = seeds::rng(seed, 0x5eec);
        let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
        // Modulation bandwidth stays well under 25 Hz so the component
        // occupies less than 50 Hz around the carrier.
        let jitter = amplitude_jitter(n, sample_rate_hz, 30.0, 0.15, &mut rng);
        let w = 2.0 * PI * profile.seek_carrier_hz / sample_rate_hz as f64;
        for (i, s) in samples.iter_mut().enumerate() {
            *s += carrier_amp * jitter[i] * (w * i as f64 + phase).sin();
        }
    }

    let broadband_rms = db_to_amplitude(profile.broadband_level_db);
    if broadband_rms > 0.0 {
        let mut rng = seeds::rng(seed, 0x5eed);
        let noise = band_noise(n, sample_rate_hz, band_lo, band_hi, broadband_rms, &mut rng);
        for (s, x) in samples.iter_mut().zip(noise) {
            *s += x;
        }
    }

    Waveform::from_samples(samples, sample_rate_hz)
}

/// Raised-cosine on/off ramp length at segment boundaries.
const RAMP_S: f64 = 0.005;

/// Render an on/off schedule: a continuous idle bed with seek bursts mixed
/// over every carrier-on segment. Segment boundaries land within one sample
/// of their scheduled times; bursts get 5 ms raised-cosine ramps so the
/// synthetic on/off edges do not click.
pub fn render_schedule(
    schedule: &SymbolSchedule,
    profile: &HddProfile,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<Waveform> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("schedule is empty".into()));
    }
    let total_s = schedule.total_duration_s();
    let idle = synth_idle(profile, total_s, sample_rate_hz, seed)?;
    let mut samples = idle.samples().to_vec();
    let n_total = samples.len();

    let mut t = 0.0f64;
    for (k, seg) in schedule.segments.iter().enumerate() {
        let start = (t * sample_rate_hz as f64).round() as usize;
        t += seg.duration_s;
        let end = ((t * sample_rate_hz as f64).round() as usize).min(n_total);
        if !seg.carrier_on || end <= start {
            continue;
        }
        let seg_n = end - start;
        let burst = synth_seek_burst(
            profile,
            seg_n as f64 / sample_rate_hz as f64,
            sample_rate_hz,
            seeds::derive(seed, 0xb000 + k as u64),
        )?;
        let ramp_n = ((RAMP_S * sample_rate_hz as f64).round() as usize).min(seg_n / 2);
        for (i, &b) in burst.samples().iter().take(seg_n).enumerate() {
            let mut g = 1.0;
            if ramp_n > 0 {
                if i < ramp_n {
                    g = 0.5 - 0.5 * (PI * i as f64 / ramp_n as f64).cos();
                } else if i >= seg_n - ramp_n {
                    let j = seg_n - 1 - i;
                    g = 0.5 - 0.5 * (PI * j as f64 / ramp_n as f64).cos();
                }
            }
            samples[start + i] = (samples[start + i] + g * b).clamp(-1.0, 1.0);
        }
    }

    Waveform::from_samples(samples, sample_rate_hz)
}
