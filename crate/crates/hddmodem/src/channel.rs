//! The air path between the drive and the microphone: distance attenuation,
//! ambient noise, interfering casual disk activity, and recorder-side
//! resampling. Every stochastic stage is seeded from the config's master
//! seed, so the whole pipeline is reproducible.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::levels::db_to_amplitude;
use crate::seeds;
use crate::waveform::Waveform;

/// Simulated recording-path parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Microphone distance from the drive, meters.
    pub distance_m: f64,
    /// Distance at which the path has unity gain.
    pub reference_distance_m: f64,
    /// White ambient noise level (RMS dBFS); NEG_INFINITY disables.
    pub ambient_noise_level_db: f64,
    /// Mean casual-activity bursts per second.
    pub burst_rate_hz: f64,
    /// Mean burst length in seconds (exponentially distributed).
    pub burst_duration_s: f64,
    /// Burst level (RMS dBFS) across its 0-6000 Hz span.
    pub burst_level_db: f64,
    /// Master seed for all channel randomness.
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            distance_m: 1.0,
            reference_distance_m: 1.0,
            ambient_noise_level_db: -50.0,
            burst_rate_hz: 0.05,
            burst_duration_s: 0.5,
            burst_level_db: -30.0,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.distance_m < 0.0 {
            return Err(Error::InvalidParameter("distance must be >= 0".into()));
        }
        if !(self.reference_distance_m > 0.0) {
            return Err(Error::InvalidParameter(
                "reference distance must be positive".into(),
            ));
        }
        if self.burst_rate_hz < 0.0 {
            return Err(Error::InvalidParameter("burst rate must be >= 0".into()));
        }
        if !(self.burst_duration_s > 0.0) {
            return Err(Error::InvalidParameter(
                "burst duration must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Casual burst spectrum span: seek/read activity of ordinary workloads.
const BURST_BAND_HZ: (f64, f64) = (0.0, 6000.0);

/// Inverse-distance amplitude law, unity gain at the reference distance.
/// Distances below reference/10 are treated as reference/10 so the gain
/// stays bounded; output is clipped at full scale.
pub fn attenuate(w: &Waveform, cfg: &ChannelConfig) -> Result<Waveform> {
    cfg.validate()?;
    let d = cfg.distance_m.max(cfg.reference_distance_m / 10.0);
    let gain = cfg.reference_distance_m / d;
    Ok(w.scaled(gain))
}

/// Add white Gaussian noise at the configured ambient level.
pub fn add_ambient(w: &Waveform, cfg: &ChannelConfig) -> Result<Waveform> {
    cfg.validate()?;
    let sigma = db_to_amplitude(cfg.ambient_noise_level_db);
    if sigma == 0.0 {
        return Ok(w.clone());
    }
    let mut rng = seeds::rng(cfg.seed, 0xa3b1);
    let samples = w
        .samples()
        .iter()
        .map(|&s| s + sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    Waveform::from_samples(samples, w.sample_rate_hz())
}

/// Poisson arrivals of broadband noise bursts, each with exponentially
/// distributed length, spanning 0-6000 Hz.
pub fn add_casual_bursts(w: &Waveform, cfg: &ChannelConfig) -> Result<Waveform> {
    cfg.validate()?;
    if cfg.burst_rate_hz == 0.0 || w.is_empty() {
        return Ok(w.clone());
    }
    let mut rng = seeds::rng(cfg.seed, 0xca54);
    let sigma = db_to_amplitude(cfg.burst_level_db);
    let rate = w.sample_rate_hz();
    let nyquist = rate as f64 / 2.0;
    let duration = w.duration_s();
    let inter_arrival = Exp::new(cfg.burst_rate_hz).expect("positive rate");
    let length_dist = Exp::new(1.0 / cfg.burst_duration_s).expect("positive duration");

    let mut samples = w.samples().to_vec();
    let mut t = 0.0f64;
    loop {
        t += inter_arrival.sample(&mut rng);
        if t >= duration {
            break;
        }
        let burst_len_s: f64 = length_dist.sample(&mut rng);
        let start = (t * rate as f64).round() as usize;
        let n = ((burst_len_s * rate as f64).round() as usize)
            .min(samples.len().saturating_sub(start))
            .max(1);
        if sigma == 0.0 || start >= samples.len() {
            continue;
        }
        let noise = burst_noise(n, rate, nyquist, sigma, &mut rng);
        let ramp_n = ((0.005 * rate as f64).round() as usize).min(n / 2);
        for (i, x) in noise.iter().enumerate() {
            let mut g = 1.0;
            if ramp_n > 0 {
                if i < ramp_n {
                    g = 0.5 - 0.5 * (PI * i as f64 / ramp_n as f64).cos();
                } else if i >= n - ramp_n {
                    let j = n - 1 - i;
                    g = 0.5 - 0.5 * (PI * j as f64 / ramp_n as f64).cos();
                }
            }
            samples[start + i] = (samples[start + i] + g * x).clamp(-1.0, 1.0);
        }
    }
    Waveform::from_samples(samples, w.sample_rate_hz())
}

fn burst_noise(n: usize, rate: u32, nyquist: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let top = BURST_BAND_HZ.1.min(nyquist);
    crate::acoustics::band_noise(n, rate, BURST_BAND_HZ.0, top, sigma, rng)
}

/// Count of bursts a given config/seed would place in `duration_s`; used by
/// the statistical tests and diagnostics.
pub fn burst_count(cfg: &ChannelConfig, duration_s: f64) -> usize {
    let mut rng = seeds::rng(cfg.seed, 0xca54);
    let inter_arrival = Exp::new(cfg.burst_rate_hz.max(1e-300)).expect("positive rate");
    let mut t = 0.0f64;
    let mut count = 0usize;
    if cfg.burst_rate_hz == 0.0 {
        return 0;
    }
    loop {
        t += inter_arrival.sample(&mut rng);
        if t >= duration_s {
            return count;
        }
        count += 1;
        let _: f64 = Exp::new(1.0 / cfg.burst_duration_s)
            .expect("positive duration")
            .sample(&mut rng);
    }
}

/// Band-limited rate conversion with a windowed-sinc polyphase kernel.
/// The anti-alias cutoff sits at 0.45x the lower of the two rates; output
/// length is round(n_in * target/source). Same-rate conversion is the
/// identity.
pub fn resample(w: &Waveform, target_rate_hz: u32) -> Result<Waveform> {
    if target_rate_hz == 0 {
        return Err(Error::InvalidParameter("target rate must be positive".into()));
    }
    let source = w.sample_rate_hz();
    if source == target_rate_hz {
        return Ok(w.clone());
    }
    let n_in = w.len();
    let n_out = ((n_in as u64 * target_rate_hz as u64 + source as u64 / 2) / source as u64) as usize;
    if n_in == 0 {
        return Waveform::from_samples(Vec::new(), target_rate_hz);
    }

    let cutoff_hz = 0.45 * source.min(target_rate_hz) as f64;
    let fc = cutoff_hz / source as f64; // cycles per input sample
    // Blackman-windowed sinc; 401 taps give > 60 dB stopband with a
    // transition narrow enough to suppress content above the target
    // Nyquist by the time it could alias.
    let half = 200i64;
    let taps = (2 * half + 1) as usize;

    let g = gcd(source as u64, target_rate_hz as u64);
    let up = (target_rate_hz as u64 / g) as usize;
    let down = (source as u64 / g) as usize;

    // Output m samples input at position m*down/up: phase (m*down mod up)/up.
    let kernel_at = |offset: f64| -> f64 {
        // offset in input samples from the kernel center
        if offset.abs() > half as f64 {
            return 0.0;
        }
        let sinc = if offset.abs() < 1e-12 {
            2.0 * fc
        } else {
            (2.0 * PI * fc * offset).sin() / (PI * offset)
        };
        let x = (offset + half as f64) / (taps as f64 - 1.0);
        let window = 0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos();
        sinc * window
    };

    // Precompute one kernel per phase, normalized to unity DC gain.
    let mut phases: Vec<Vec<f64>> = Vec::with_capacity(up);
    for p in 0..up {
        let frac = p as f64 * down as f64 / up as f64;
        let frac = frac - frac.floor();
        let mut k: Vec<f64> = (-half..=half)
            .map(|i| kernel_at(i as f64 - frac))
            .collect();
        let sum: f64 = k.iter().sum();
        if sum.abs() > 1e-12 {
            for v in &mut k {
                *v /= sum;
            }
        }
        phases.push(k);
    }

    let x = w.samples();
    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let num = m * down;
        let base = (num / up) as i64;
        let phase = num % up;
        let k = &phases[phase];
        let mut acc = 0.0;
        for (i, &kv) in k.iter().enumerate() {
            let idx = base + i as i64 - half;
            if idx >= 0 && (idx as usize) < n_in {
                acc += x[idx as usize] * kv;
            }
        }
        out.push(acc);
    }
    Waveform::from_samples(out, target_rate_hz)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The whole recording path except resampling: attenuate, add ambient
/// noise, add casual bursts.
pub fn transmit_path(w: &Waveform, cfg: &ChannelConfig) -> Result<Waveform> {
    let w = attenuate(w, cfg)?;
    let w = add_ambient(&w, cfg)?;
    add_casual_bursts(&w, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dft_magnitude, rms_db};

    fn tone(freq: f64, amp: f64, duration_s: f64, rate: u32) -> Waveform {
        let n = (duration_s * rate as f64) as usize;
        let w = 2.0 * PI * freq / rate as f64;
        Waveform::from_samples((0..n).map(|i| amp * (w * i as f64).sin()).collect(), rate)
            .unwrap()
    }

    fn quiet_cfg() -> ChannelConfig {
        ChannelConfig {
            ambient_noise_level_db: f64::NEG_INFINITY,
            burst_rate_hz: 0.0,
            ..ChannelConfig::default()
        }
    }

    #[test]
    fn reference_distance_is_identity() {
        let w = tone(1000.0, 0.5, 0.1, 16000);
        let out = attenuate(&w, &quiet_cfg()).unwrap();
        assert_eq!(out.samples(), w.samples());
    }

    #[test]
    fn two_meters_halves_amplitude() {
        let w = tone(1000.0, 0.5, 0.1, 16000);
        let cfg = ChannelConfig {
            distance_m: 2.0,
            ..quiet_cfg()
        };
        let out = attenuate(&w, &cfg).unwrap();
        for (a, b) in w.samples().iter().zip(out.samples()) {
            assert!((a * 0.5 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ambient_off_is_identity() {
        let w = tone(500.0, 0.3, 0.1, 16000);
        let out = add_ambient(&w, &quiet_cfg()).unwrap();
        assert_eq!(out.samples(), w.samples());
    }

    #[test]
    fn ambient_level_sets_rms() {
        let silence = Waveform::silence(4.0, 16000).unwrap();
        let cfg = ChannelConfig::default().with_seed(42);
        let out = add_ambient(&silence, &cfg).unwrap();
        let db = rms_db(out.samples());
        assert!((db + 50.0).abs() <= 1.0, "ambient RMS {db:.2} dBFS");
    }

    #[test]
    fn ambient_is_deterministic_under_seed() {
        let silence = Waveform::silence(0.5, 16000).unwrap();
        let cfg = ChannelConfig::default().with_seed(7);
        let a = add_ambient(&silence, &cfg).unwrap();
        let b = add_ambient(&silence, &cfg).unwrap();
        assert_eq!(a.samples(), b.samples());
    }

    #[test]
    fn zero_burst_rate_is_identity() {
        let w = tone(2000.0, 0.2, 0.5, 16000);
        let out = add_casual_bursts(&w, &quiet_cfg()).unwrap();
        assert_eq!(out.samples(), w.samples());
    }

    #[test]
    fn burst_count_within_poisson_interval() {
        // rate 0.05/s over 200 s: Poisson(10); 99% interval is roughly [3, 19].
        let cfg = ChannelConfig::default().with_seed(1234);
        let count = burst_count(&cfg, 200.0);
        assert!((3..=19).contains(&count), "burst count {count}");
    }

    #[test]
    fn bursts_add_energy_where_placed() {
        let silence = Waveform::silence(60.0, 16000).unwrap();
        let cfg = ChannelConfig {
            burst_rate_hz: 0.2,
            ..ChannelConfig {
                ambient_noise_level_db: f64::NEG_INFINITY,
                ..ChannelConfig::default()
            }
        }
        .with_seed(5);
        let out = add_casual_bursts(&silence, &cfg).unwrap();
        assert!(out.mean_square() > 0.0);
        let again = add_casual_bursts(&silence, &cfg).unwrap();
        assert_eq!(out.samples(), again.samples());
    }

    #[test]
    fn silence_stays_silent_with_noise_disabled() {
        let silence = Waveform::silence(1.0, 16000).unwrap();
        let out = transmit_path(&silence, &quiet_cfg()).unwrap();
        assert!(out.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn resample_preserves_in_band_tone() {
        let w = tone(1000.0, 0.5, 1.0, 44100);
        let out = resample(&w, 16000).unwrap();
        assert_eq!(out.sample_rate_hz(), 16000);
        let before = dft_magnitude(w.samples(), 44100, 1000.0);
        let after = dft_magnitude(out.samples(), 16000, 1000.0);
        let change_db = 20.0 * (after / before).log10();
        assert!(change_db.abs() <= 0.5, "level change {change_db:.3} dB");
    }

    #[test]
    fn resample_rejects_above_target_band() {
        let w = tone(7900.0, 0.5, 1.0, 44100);
        let out = resample(&w, 16000).unwrap();
        let before = dft_magnitude(w.samples(), 44100, 7900.0);
        let after = dft_magnitude(out.samples(), 16000, 7900.0);
        assert!(
            20.0 * (after / before).log10() <= -40.0,
            "attenuation only {:.1} dB",
            20.0 * (after / before).log10()
        );
    }

    #[test]
    fn same_rate_resample_is_identity() {
        let w = tone(440.0, 0.4, 0.25, 16000);
        let out = resample(&w, 16000).unwrap();
        assert_eq!(out.samples(), w.samples());
    }

    #[test]
    fn resample_preserves_duration() {
        let w = Waveform::silence(1.2345, 44100).unwrap();
        let out = resample(&w, 16000).unwrap();
        let expect = (1.2345f64 * 16000.0).round() as i64;
        assert!((out.len() as i64 - expect).abs() <= 1);
    }

    #[test]
    fn rejects_zero_target_rate() {
        let w = Waveform::silence(0.1, 16000).unwrap();
        assert!(resample(&w, 0).is_err());
    }
}
