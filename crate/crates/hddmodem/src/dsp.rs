//! Spectral analysis primitives for the receiver: moving-window FFT,
//! band-pass filtering, intensity envelopes, PSD, and the frequency-domain
//! SNR estimator.
//!
//! Conventions: spectral magnitudes are linear, scaled so a full-scale sine
//! has in-bin magnitude sqrt(0.5) (its RMS amplitude); intensities and PSD
//! are dB with a full-scale sine as the 0 dB reference.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::Range;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::levels::FULL_SCALE_SINE_MS;
use crate::waveform::Waveform;

/// A frequency interval in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl FrequencyBand {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(0.0 <= low_hz && low_hz < high_hz) {
            return Err(Error::InvalidBand { low_hz, high_hz });
        }
        Ok(FrequencyBand { low_hz, high_hz })
    }

    pub fn width_hz(&self) -> f64 {
        self.high_hz - self.low_hz
    }

    pub fn center_hz(&self) -> f64 {
        (self.low_hz + self.high_hz) / 2.0
    }

    fn check_nyquist(&self, nyquist_hz: f64) -> Result<()> {
        if self.high_hz > nyquist_hz + 1e-9 {
            return Err(Error::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
            });
        }
        Ok(())
    }

    /// Indices of the spectral bins fully contained in the band.
    pub fn bin_range(&self, bin_width_hz: f64, bin_count: usize) -> Result<Range<usize>> {
        let lo = (self.low_hz / bin_width_hz).ceil() as usize;
        let hi = (self.high_hz / bin_width_hz).floor() as usize; // exclusive
        if lo >= hi || lo >= bin_count {
            return Err(Error::InvalidBand {
                low_hz: self.low_hz,
                high_hz: self.high_hz,
            });
        }
        Ok(lo..hi.min(bin_count))
    }
}

/// Per-window magnitude spectra with a fixed bin width.
///
/// Bin `k` covers `[k*bin_width, (k+1)*bin_width)` Hz; the top bin also
/// absorbs the exact-Nyquist component so that total power is preserved.
#[derive(Debug, Clone)]
pub struct SpectralSeries {
    pub frames: Vec<Vec<f64>>,
    pub bin_width_hz: f64,
    pub hop_s: f64,
    pub window_s: f64,
}

impl SpectralSeries {
    pub fn bin_count(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    /// Center time of frame `k`.
    pub fn frame_time_s(&self, k: usize) -> f64 {
        k as f64 * self.hop_s + self.window_s / 2.0
    }

    /// Frames whose analysis window lies entirely inside [t0, t1].
    pub fn frames_within(&self, t0_s: f64, t1_s: f64) -> Range<usize> {
        let half = self.window_s / 2.0;
        let mut lo = self.frames.len();
        let mut hi = 0usize;
        for k in 0..self.frames.len() {
            let c = self.frame_time_s(k);
            if c - half >= t0_s && c + half <= t1_s {
                lo = lo.min(k);
                hi = hi.max(k + 1);
            }
        }
        if lo >= hi {
            0..0
        } else {
            lo..hi
        }
    }

    /// CSV rows of `time_s,bin_hz,magnitude_db`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time_s,bin_hz,magnitude_db")?;
        for (k, frame) in self.frames.iter().enumerate() {
            let t = self.frame_time_s(k);
            for (b, mag) in frame.iter().enumerate() {
                let db = 10.0 * (mag * mag / FULL_SCALE_SINE_MS).max(1e-30).log10();
                writeln!(w, "{:.4},{},{:.3}", t, b as f64 * self.bin_width_hz, db)?;
            }
        }
        Ok(())
    }
}

/// Intensity (smoothed energy) of a waveform over time, in dB re full-scale
/// sine.
#[derive(Debug, Clone)]
pub struct IntensityEnvelope {
    pub values: Vec<f64>,
    pub hop_s: f64,
    pub window_s: f64,
    /// Time of the first analysis window's leading edge.
    pub start_s: f64,
}

impl IntensityEnvelope {
    /// Center time of value `i`.
    pub fn time_s(&self, i: usize) -> f64 {
        self.start_s + self.window_s / 2.0 + i as f64 * self.hop_s
    }

    /// Index of the value whose center is nearest to `t`.
    pub fn index_at(&self, t_s: f64) -> usize {
        let raw = (t_s - self.start_s - self.window_s / 2.0) / self.hop_s;
        raw.round().max(0.0) as usize
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end_time_s(&self) -> f64 {
        if self.values.is_empty() {
            self.start_s
        } else {
            self.time_s(self.values.len() - 1)
        }
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Moving-window FFT with tapered (Hann) frames, aggregated into fixed-width
/// bins. Bin magnitudes are the RMS amplitude of the in-bin content.
pub fn stft(
    w: &Waveform,
    bin_width_hz: f64,
    hop_s: f64,
    window_s: f64,
) -> Result<SpectralSeries> {
    if !(bin_width_hz > 0.0) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    if window_s * bin_width_hz < 1.0 - 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "window {window_s} s cannot resolve {bin_width_hz} Hz bins"
        )));
    }
    if hop_s > window_s || !(hop_s > 0.0) {
        return Err(Error::InvalidParameter(
            "hop must be positive and no longer than the window".into(),
        ));
    }
    let rate = w.sample_rate_hz() as f64;
    let win_n = (window_s * rate).round() as usize;
    let hop_n = ((hop_s * rate).round() as usize).max(1);
    if win_n > w.len() {
        return Err(Error::SignalTooShort {
            need_s: window_s,
            got_s: w.duration_s(),
        });
    }
    let nyquist = rate / 2.0;
    let n_bins = (nyquist / bin_width_hz).floor() as usize;
    let window = hann(win_n);
    let window_power: f64 = window.iter().map(|v| v * v).sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(win_n);
    let samples = w.samples();
    let fine_hz = rate / win_n as f64;

    let mut frames = Vec::new();
    let mut start = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); win_n];
    while start + win_n <= samples.len() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        let mut bins = vec![0.0f64; n_bins];
        let half = win_n / 2;
        for (j, c) in buf.iter().enumerate().take(half + 1) {
            if j == 0 {
                continue; // DC carries no acoustic information here
            }
            let one_sided = if j == half && win_n % 2 == 0 { 1.0 } else { 2.0 };
            let power = one_sided * c.norm_sqr() / (win_n as f64 * window_power);
            let f = j as f64 * fine_hz;
            let k = ((f / bin_width_hz).floor() as usize).min(n_bins - 1);
            bins[k] += power;
        }
        frames.push(bins.iter().map(|p| p.sqrt()).collect());
        start += hop_n;
    }

    Ok(SpectralSeries {
        frames,
        bin_width_hz,
        hop_s: hop_n as f64 / rate,
        window_s: win_n as f64 / rate,
    })
}

/// Zero-phase band-pass: the whole signal's spectrum is masked with a flat
/// response inside the band and raised-cosine transitions just outside it.
pub fn bandpass(w: &Waveform, band: &FrequencyBand) -> Result<Waveform> {
    band.check_nyquist(w.nyquist_hz())?;
    Ok(bandpass_multi(w, std::slice::from_ref(band)))
}

/// Transition width of the band-pass mask edges.
const BANDPASS_EDGE_HZ: f64 = 20.0;

/// Band-pass over a union of bands, applied with a single FFT pass.
pub(crate) fn bandpass_multi(w: &Waveform, bands: &[FrequencyBand]) -> Waveform {
    let n = w.len();
    if n == 0 {
        return w.clone();
    }
    let rate = w.sample_rate_hz() as f64;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = w
        .samples()
        .iter()
        .map(|&s| Complex::new(s, 0.0))
        .collect();
    fft.process(&mut buf);

    let gain_at = |f: f64| -> f64 {
        let mut g = 0.0f64;
        for band in bands {
            let v = if f >= band.low_hz && f <= band.high_hz {
                1.0
            } else if f > band.low_hz - BANDPASS_EDGE_HZ && f < band.low_hz {
                let x = (band.low_hz - f) / BANDPASS_EDGE_HZ;
                0.5 + 0.5 * (PI * x).cos()
            } else if f > band.high_hz && f < band.high_hz + BANDPASS_EDGE_HZ {
                let x = (f - band.high_hz) / BANDPASS_EDGE_HZ;
                0.5 + 0.5 * (PI * x).cos()
            } else {
                0.0
            };
            g = g.max(v);
        }
        g
    };

    let half = n / 2;
    for j in 0..=half {
        let f = j as f64 * rate / n as f64;
        let g = gain_at(f);
        buf[j] *= g;
        if j != 0 && (j != half || n % 2 != 0) {
            buf[n - j] *= g;
        }
    }
    ifft.process(&mut buf);
    let samples = buf.iter().map(|c| c.re / n as f64).collect();
    Waveform::from_samples(samples, w.sample_rate_hz()).expect("bounded samples")
}

/// Smoothed intensity: Hann-weighted mean square over a sliding window,
/// reported in dB re full-scale sine. The hop is a quarter window.
pub fn envelope(w: &Waveform, smoothing_window_s: f64) -> Result<IntensityEnvelope> {
    if !(smoothing_window_s > 0.0) {
        return Err(Error::InvalidParameter(
            "smoothing window must be positive".into(),
        ));
    }
    let rate = w.sample_rate_hz() as f64;
    let win_n = ((smoothing_window_s * rate).round() as usize).max(1);
    let hop_n = (win_n / 4).max(1);
    let weights = hann(win_n);
    let weight_sum: f64 = weights.iter().sum();
    let samples = w.samples();

    let mut values = Vec::new();
    let mut start = 0usize;
    while start + win_n <= samples.len() {
        let mut acc = 0.0;
        for (i, &wt) in weights.iter().enumerate() {
            let s = samples[start + i];
            acc += wt * s * s;
        }
        let ms = acc / weight_sum;
        values.push(10.0 * (ms / FULL_SCALE_SINE_MS).log10());
        start += hop_n;
    }

    Ok(IntensityEnvelope {
        values,
        hop_s: hop_n as f64 / rate,
        window_s: win_n as f64 / rate,
        start_s: 0.0,
    })
}

/// Frequency-domain SNR over a band: magnitudes are averaged per bin across
/// each slice's frames, summed across the band's bins, and compared as
/// 20*log10(sum_signal / sum_noise).
pub fn snr_in_band(
    signal_frames: &[Vec<f64>],
    noise_frames: &[Vec<f64>],
    bin_width_hz: f64,
    band: &FrequencyBand,
) -> Result<f64> {
    if signal_frames.is_empty() || noise_frames.is_empty() {
        return Err(Error::InvalidParameter(
            "signal and noise slices must be non-empty".into(),
        ));
    }
    let bin_count = signal_frames[0].len();
    let range = band.bin_range(bin_width_hz, bin_count)?;

    let mean_sum = |frames: &[Vec<f64>]| -> f64 {
        let mut sum = 0.0;
        for k in range.clone() {
            let mut acc = 0.0;
            for frame in frames {
                acc += frame[k];
            }
            sum += acc / frames.len() as f64;
        }
        sum
    };

    let sig = mean_sum(signal_frames);
    let noise = mean_sum(noise_frames);
    if noise == 0.0 {
        return Err(Error::DegenerateNoiseReference);
    }
    Ok(20.0 * (sig / noise).log10())
}

/// Time-averaged per-bin power in dB.
#[derive(Debug, Clone)]
pub struct Psd {
    pub bin_width_hz: f64,
    pub power_db: Vec<f64>,
}

impl Psd {
    /// CSV rows of `bin_hz,power_db`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_hz,power_db")?;
        for (k, p) in self.power_db.iter().enumerate() {
            writeln!(w, "{},{:.3}", k as f64 * self.bin_width_hz, p)?;
        }
        Ok(())
    }

    /// Linear per-bin power (mean square re full scale).
    pub fn power_linear(&self) -> Vec<f64> {
        self.power_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0) * FULL_SCALE_SINE_MS)
            .collect()
    }
}

/// Average power spectral density with the given bin width. Uses analysis
/// windows of 2/bin_width seconds with half-window hops; the input must
/// cover at least two windows.
pub fn psd(w: &Waveform, bin_width_hz: f64) -> Result<Psd> {
    let window_s = 2.0 / bin_width_hz;
    if w.duration_s() < 2.0 * window_s {
        return Err(Error::SignalTooShort {
            need_s: 2.0 * window_s,
            got_s: w.duration_s(),
        });
    }
    let series = stft(w, bin_width_hz, window_s / 2.0, window_s)?;
    let n_bins = series.bin_count();
    let mut power = vec![0.0f64; n_bins];
    for frame in &series.frames {
        for (p, m) in power.iter_mut().zip(frame) {
            *p += m * m;
        }
    }
    let frames = series.frames.len() as f64;
    let power_db = power
        .iter()
        .map(|p| 10.0 * ((p / frames) / FULL_SCALE_SINE_MS).max(1e-30).log10())
        .collect();
    Ok(Psd {
        bin_width_hz,
        power_db,
    })
}
