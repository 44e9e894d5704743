//! The decoding state machine: carrier scan, preamble detection, channel
//! parameter estimation, and OOK demodulation of frame payloads.
//!
//! The receiver never assumes the transmitter's parameters. It locates the
//! carrier bin by ranking spectral bins by on/off contrast, band-passes the
//! winner, and reads symbol timing, levels and the decision threshold off
//! the 1010 preamble's intensity envelope. Decisions use the mean intensity
//! over the central 60% of each symbol, with the decision clock re-anchored
//! on every envelope transition so timing error cannot accumulate across a
//! frame or across back-to-back frames.

use serde::Serialize;

use crate::bits::BitString;
use crate::channel;
use crate::dsp::{self, FrequencyBand, IntensityEnvelope, SpectralSeries};
use crate::error::{Error, Result};
use crate::framing;
use crate::waveform::Waveform;

/// Receiver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    /// Band searched for a carrier.
    pub scan_band: FrequencyBand,
    /// Band used when scanning is disabled.
    pub default_band: FrequencyBand,
    /// Skip the carrier scan and band-pass `default_band` directly.
    pub force_default_band: bool,
    /// Expected payload bits per frame.
    pub payload_len: usize,
    /// Bounds for symbol-duration estimation.
    pub min_symbol_s: f64,
    pub max_symbol_s: f64,
    /// Hysteresis around the decision threshold, and the minimum
    /// plateau/gap contrast for a preamble to qualify.
    pub threshold_margin_db: f64,
    /// Minimum on/off contrast for a scan bin to count as a candidate.
    pub scan_min_contrast_db: f64,
    /// Normalize the carrier-band envelope against flanking bands so that
    /// broadband interferers (casual disk activity) cancel instead of
    /// crossing the threshold.
    pub broadband_rejection: bool,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            scan_band: FrequencyBand {
                low_hz: 1500.0,
                high_hz: 6000.0,
            },
            default_band: FrequencyBand {
                low_hz: 2050.0,
                high_hz: 2100.0,
            },
            force_default_band: false,
            payload_len: framing::DEFAULT_PAYLOAD_LEN,
            min_symbol_s: 0.1,
            max_symbol_s: 5.0,
            threshold_margin_db: 3.0,
            scan_min_contrast_db: 6.0,
            broadband_rejection: true,
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_symbol_s > 0.0 && self.min_symbol_s < self.max_symbol_s) {
            return Err(Error::InvalidParameter(
                "symbol bounds must satisfy 0 < min < max".into(),
            ));
        }
        if self.payload_len == 0 {
            return Err(Error::InvalidParameter("payload_len must be positive".into()));
        }
        Ok(())
    }

    fn envelope_smoothing_s(&self) -> f64 {
        // A fifth of the shortest admissible symbol keeps at least five
        // envelope windows (twenty hops) inside every symbol.
        self.min_symbol_s / 5.0
    }
}

/// Channel parameters extracted from the preamble.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelEstimate {
    pub carrier_bin: usize,
    pub carrier_hz: f64,
    pub t0_s: f64,
    pub t1_s: f64,
    /// Mean intensity of the preamble's carrier-on plateaus.
    pub on_level_db: f64,
    /// Mean intensity of its carrier-off gaps.
    pub off_level_db: f64,
    /// Decision level: midpoint of the two.
    pub threshold_db: f64,
    /// Time of the first payload symbol.
    pub payload_start_s: f64,
}

/// One decoded frame payload with per-bit decision margins in dB.
#[derive(Debug, Clone, Serialize)]
pub struct DecodedFrame {
    pub payload: BitString,
    pub confidence: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub preambles_detected: usize,
    pub rejected_candidates: usize,
    pub lost_signal_events: usize,
    pub notes: Vec<String>,
}

/// Everything the receiver recovered from one stream.
#[derive(Debug, Clone, Serialize)]
pub struct DemodResult {
    pub frames: Vec<DecodedFrame>,
    pub estimate: Option<ChannelEstimate>,
    pub diagnostics: Diagnostics,
}

impl DemodResult {
    fn empty(note: impl Into<String>) -> Self {
        DemodResult {
            frames: Vec::new(),
            estimate: None,
            diagnostics: Diagnostics {
                notes: vec![note.into()],
                ..Diagnostics::default()
            },
        }
    }

    /// Concatenated frame payloads truncated to `original_len` bits.
    pub fn payload_bits(&self, original_len: usize) -> BitString {
        let mut out = BitString::new();
        for f in &self.frames {
            out.extend(&f.payload);
        }
        out.truncated(original_len)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NEG_INFINITY;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Rank scan-band bins by on/off bimodality of their magnitude over time:
/// the spread between the 98th and 50th percentile of block-averaged bin
/// power. An OOK carrier toggles between two levels and scores high; steady
/// noise scores a couple of dB.
pub fn scan_carrier(spec: &SpectralSeries, cfg: &ReceiverConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let min_preamble_s = 4.0 * cfg.min_symbol_s;
    let covered = spec.frames.len() as f64 * spec.hop_s + spec.window_s;
    if spec.frames.is_empty() || covered < 2.0 * min_preamble_s {
        return Err(Error::NoCarrierFound);
    }
    let bins = spec.bin_count();
    let range = cfg.scan_band.bin_range(spec.bin_width_hz, bins)?;

    // Average power over ~100 ms blocks to tame single-frame variance.
    let block = ((0.1 / spec.hop_s).round() as usize).max(1);
    let n_blocks = spec.frames.len() / block;
    if n_blocks < 4 {
        return Err(Error::NoCarrierFound);
    }

    let mut ranked: Vec<(usize, f64)> = Vec::new();
    for k in range {
        let mut blocks = Vec::with_capacity(n_blocks);
        for b in 0..n_blocks {
            let mut acc = 0.0;
            for frame in &spec.frames[b * block..(b + 1) * block] {
                acc += frame[k] * frame[k];
            }
            blocks.push(acc / block as f64);
        }
        blocks.sort_by(|a, b| a.total_cmp(b));
        let hi = quantile(&blocks, 0.98);
        let lo = quantile(&blocks, 0.50);
        if lo <= 0.0 || hi <= 0.0 {
            continue;
        }
        let contrast_db = 10.0 * (hi / lo).log10();
        if contrast_db >= cfg.scan_min_contrast_db {
            ranked.push((k, contrast_db));
        }
    }
    if ranked.is_empty() {
        return Err(Error::NoCarrierFound);
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked.into_iter().map(|(k, _)| k).collect())
}

/// A run of consecutive envelope points on one side of the threshold.
#[derive(Debug, Clone, Copy)]
struct Run {
    high: bool,
    start: usize,
    len: usize,
}

fn segment_runs(values: &[f64], threshold: f64, hysteresis: f64, min_run: usize) -> Vec<Run> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut runs: Vec<Run> = Vec::new();
    let mut state = values[0] > threshold;
    let mut start = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let flip = if state {
            v < threshold - hysteresis
        } else {
            v > threshold + hysteresis
        };
        if flip {
            runs.push(Run {
                high: state,
                start,
                len: i - start,
            });
            state = !state;
            start = i;
        }
    }
    runs.push(Run {
        high: state,
        start,
        len: values.len() - start,
    });

    // Debounce: absorb runs shorter than min_run into their neighbours so
    // isolated envelope spikes cannot split a symbol.
    loop {
        let Some(i) = runs
            .iter()
            .enumerate()
            .position(|(i, r)| r.len < min_run && i > 0 && i + 1 < runs.len())
        else {
            break;
        };
        let merged = Run {
            high: runs[i - 1].high,
            start: runs[i - 1].start,
            len: runs[i - 1].len + runs[i].len + runs[i + 1].len,
        };
        runs.splice(i - 1..=i + 1, [merged]);
    }
    runs
}

struct PreambleSearch {
    estimate: ChannelEstimate,
    rejected: usize,
}

fn detect_preamble_from(
    env: &IntensityEnvelope,
    from: usize,
    band: &FrequencyBand,
    cfg: &ReceiverConfig,
) -> Result<PreambleSearch> {
    cfg.validate()?;
    if from >= env.len() {
        return Err(Error::PreambleNotFound);
    }
    let values = &env.values[from..];
    let min_span = 4.0 * cfg.min_symbol_s;
    if values.len() as f64 * env.hop_s < min_span {
        return Err(Error::PreambleNotFound);
    }

    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Err(Error::PreambleNotFound);
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    let threshold0 = (quantile(&sorted, 0.02) + quantile(&sorted, 0.98)) / 2.0;

    let min_run = ((cfg.min_symbol_s / 2.0 / env.hop_s).round() as usize).max(1);
    let runs = segment_runs(values, threshold0, cfg.threshold_margin_db / 2.0, min_run);

    let dur = |r: &Run| r.len as f64 * env.hop_s;
    let in_bounds = |d: f64| d >= cfg.min_symbol_s * 0.8 && d <= cfg.max_symbol_s * 1.2;
    let mut rejected = 0usize;
    let mut saw_low_contrast = false;

    for i in 0..runs.len().saturating_sub(3) {
        let [h1, l1, h2, l2] = [&runs[i], &runs[i + 1], &runs[i + 2], &runs[i + 3]];
        if !h1.high || l1.high || !h2.high || l2.high {
            continue;
        }
        let (dh1, dl1, dh2, dl2) = (dur(h1), dur(l1), dur(h2), dur(l2));
        // The second plateau and first gap are bounded by opposite symbols
        // on both sides, so they carry clean duration estimates. The first
        // plateau may be merged with a previous frame's trailing ones and
        // the second gap may run into leading payload zeros, so those two
        // only get a lower bound.
        let structural_ok = in_bounds(dh2)
            && in_bounds(dl1)
            && dh1 >= 0.8 * dh2
            && dl2 >= 0.8 * dl1;
        if !structural_ok {
            rejected += 1;
            continue;
        }

        let t1_s = if (dh1 - dh2).abs() <= 0.2 * dh1.max(dh2) {
            (dh1 + dh2) / 2.0
        } else {
            dh2
        };
        let t0_s = if (dl1 - dl2).abs() <= 0.2 * dl1.max(dl2) {
            (dl1 + dl2) / 2.0
        } else {
            dl1
        };

        let mean_over = |runs: &[&Run]| -> f64 {
            let mut acc = 0.0;
            let mut n = 0usize;
            for r in runs {
                for v in &values[r.start..r.start + r.len] {
                    if v.is_finite() {
                        acc += v;
                        n += 1;
                    }
                }
            }
            if n == 0 {
                f64::NEG_INFINITY
            } else {
                acc / n as f64
            }
        };
        let on_level_db = mean_over(&[h1, h2]);
        let off_level_db = mean_over(&[l1, l2]);
        let contrast = on_level_db - off_level_db;
        if !(contrast >= cfg.threshold_margin_db) {
            saw_low_contrast = true;
            rejected += 1;
            continue;
        }

        // Run starts sit half a hop after the true transition.
        let l2_edge_s = env.time_s(from + l2.start) - env.hop_s / 2.0;
        return Ok(PreambleSearch {
            estimate: ChannelEstimate {
                carrier_bin: (band.center_hz() / 50.0).floor() as usize,
                carrier_hz: band.center_hz(),
                t0_s,
                t1_s,
                on_level_db,
                off_level_db,
                threshold_db: (on_level_db + off_level_db) / 2.0,
                payload_start_s: l2_edge_s + t0_s,
            },
            rejected,
        });
    }

    if saw_low_contrast {
        Err(Error::InsufficientContrast {
            contrast_db: 0.0,
            need_db: cfg.threshold_margin_db,
        })
    } else {
        Err(Error::PreambleNotFound)
    }
}

/// Find the earliest 1010 intensity pattern and estimate channel parameters
/// from it. Returns the estimate and the time of the first payload symbol.
pub fn detect_preamble(
    env: &IntensityEnvelope,
    band: &FrequencyBand,
    cfg: &ReceiverConfig,
) -> Result<(ChannelEstimate, f64)> {
    let found = detect_preamble_from(env, 0, band, cfg)?;
    let start = found.estimate.payload_start_s;
    Ok((found.estimate, start))
}

struct FrameDecode {
    frame: Option<DecodedFrame>,
    resume_s: f64,
    lost: bool,
}

fn demodulate_one(
    env: &IntensityEnvelope,
    est: &ChannelEstimate,
    cfg: &ReceiverConfig,
) -> FrameDecode {
    let mut tau = est.payload_start_s;
    let threshold = est.threshold_db;
    let hysteresis = cfg.threshold_margin_db / 2.0;
    let probe = est.t0_s.min(est.t1_s);
    let mut payload = BitString::new();
    let mut confidence = Vec::with_capacity(cfg.payload_len);
    let mut prev_bit = false; // the preamble always ends in '0'

    for _ in 0..cfg.payload_len {
        let lo = env.index_at(tau + 0.2 * probe);
        let hi = env.index_at(tau + 0.8 * probe);
        if hi >= env.len() || lo > hi {
            return FrameDecode {
                frame: None,
                resume_s: env.end_time_s(),
                lost: true,
            };
        }
        let window = &env.values[lo..=hi];
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        let decision_level = if prev_bit {
            threshold - hysteresis
        } else {
            threshold + hysteresis
        };
        let bit = mean > decision_level;
        payload.push(bit);
        confidence.push((mean - threshold).abs());
        prev_bit = bit;

        let sym = if bit { est.t1_s } else { est.t0_s };
        tau += sym;
        tau = resync_edge(env, tau, 0.2 * sym, threshold).unwrap_or(tau);
    }

    FrameDecode {
        frame: Some(DecodedFrame {
            payload,
            confidence,
        }),
        resume_s: tau,
        lost: false,
    }
}

/// Look for a threshold crossing within +/- `slack_s` of the expected symbol
/// boundary and return its time. Keeps the decision clock locked to the
/// transmitter across long frames.
fn resync_edge(env: &IntensityEnvelope, expected_s: f64, slack_s: f64, threshold: f64) -> Option<f64> {
    let lo = env.index_at(expected_s - slack_s).max(1);
    let hi = env.index_at(expected_s + slack_s).min(env.len().saturating_sub(1));
    if lo > hi {
        return None;
    }
    let mut best: Option<(f64, f64)> = None; // (|dt|, edge time)
    for i in lo..=hi {
        let a = env.values[i - 1] - threshold;
        let b = env.values[i] - threshold;
        if a == 0.0 || a.signum() != b.signum() {
            let edge = env.time_s(i) - env.hop_s / 2.0;
            let dt = (edge - expected_s).abs();
            if best.map_or(true, |(d, _)| dt < d) {
                best = Some((dt, edge));
            }
        }
    }
    best.map(|(_, t)| t)
}

/// Demodulate one frame's payload starting at the estimate's payload
/// offset; the state machine then returns to preamble search.
pub fn demodulate(
    env: &IntensityEnvelope,
    est: &ChannelEstimate,
    cfg: &ReceiverConfig,
) -> Result<DemodResult> {
    cfg.validate()?;
    let decode = demodulate_one(env, est, cfg);
    let mut result = DemodResult {
        frames: decode.frame.into_iter().collect(),
        estimate: Some(est.clone()),
        diagnostics: Diagnostics::default(),
    };
    if decode.lost {
        result.diagnostics.lost_signal_events = 1;
    }
    Ok(result)
}

/// Reference flanks around the carrier band, used to measure broadband
/// interference without the carrier: 200 Hz on each side with a 50 Hz guard.
fn reference_flanks(band: &FrequencyBand, nyquist_hz: f64) -> (Vec<FrequencyBand>, f64) {
    const GUARD_HZ: f64 = 50.0;
    const FLANK_HZ: f64 = 200.0;
    let mut flanks = Vec::new();
    let left_hi = band.low_hz - GUARD_HZ;
    let left_lo = (left_hi - FLANK_HZ).max(0.0);
    if left_hi - left_lo >= 50.0 {
        flanks.push(FrequencyBand {
            low_hz: left_lo,
            high_hz: left_hi,
        });
    }
    let right_lo = band.high_hz + GUARD_HZ;
    let right_hi = (right_lo + FLANK_HZ).min(nyquist_hz);
    if right_hi - right_lo >= 50.0 {
        flanks.push(FrequencyBand {
            low_hz: right_lo,
            high_hz: right_hi,
        });
    }
    let total: f64 = flanks.iter().map(FrequencyBand::width_hz).sum();
    let offset_db = if total > 0.0 {
        10.0 * (band.width_hz() / total).log10()
    } else {
        0.0
    };
    (flanks, offset_db)
}

/// Receiver target rate; capture-rate inputs are resampled down to this.
pub const RECEIVER_RATE_HZ: u32 = 16000;

/// Full receive chain over a waveform: resample if needed, locate the
/// carrier, band-pass, envelope, then alternate preamble detection and
/// payload demodulation until the stream is exhausted.
pub fn receive(w: &Waveform, cfg: &ReceiverConfig) -> Result<DemodResult> {
    cfg.validate()?;
    if (w.sample_rate_hz() as f64) < 2.0 * cfg.default_band.high_hz {
        return Err(Error::InvalidParameter(format!(
            "sample rate {} Hz cannot carry the {:.0} Hz band",
            w.sample_rate_hz(),
            cfg.default_band.high_hz
        )));
    }
    let w16 = if w.sample_rate_hz() != RECEIVER_RATE_HZ {
        channel::resample(w, RECEIVER_RATE_HZ)?
    } else {
        w.clone()
    };

    let spec = match dsp::stft(&w16, 50.0, 0.02, 0.08) {
        Ok(s) => s,
        Err(e) => return Ok(DemodResult::empty(format!("spectral analysis failed: {e}"))),
    };

    let band = if cfg.force_default_band {
        cfg.default_band
    } else {
        match scan_carrier(&spec, cfg) {
            Ok(candidates) => {
                let k = candidates[0];
                FrequencyBand {
                    low_hz: k as f64 * spec.bin_width_hz,
                    high_hz: (k + 1) as f64 * spec.bin_width_hz,
                }
            }
            Err(Error::NoCarrierFound) => {
                return Ok(DemodResult::empty("no carrier found"));
            }
            Err(e) => return Err(e),
        }
    };

    let env = band_envelope(&w16, &band, cfg);

    let mut result = DemodResult {
        frames: Vec::new(),
        estimate: None,
        diagnostics: Diagnostics::default(),
    };
    let mut from = 0usize;
    loop {
        let found = match detect_preamble_from(&env, from, &band, cfg) {
            Ok(found) => found,
            Err(Error::PreambleNotFound) | Err(Error::InsufficientContrast { .. }) => {
                if result.frames.is_empty() && result.diagnostics.preambles_detected == 0 {
                    result.diagnostics.notes.push("preamble not found".into());
                }
                break;
            }
            Err(e) => return Err(e),
        };
        result.diagnostics.rejected_candidates += found.rejected;
        result.diagnostics.preambles_detected += 1;
        if result.estimate.is_none() {
            result.estimate = Some(found.estimate.clone());
        }

        let decode = demodulate_one(&env, &found.estimate, cfg);
        if let Some(frame) = decode.frame {
            result.frames.push(frame);
        }
        if decode.lost {
            result.diagnostics.lost_signal_events += 1;
        }
        let next = env.index_at(decode.resume_s);
        if next <= from || next >= env.len() {
            break;
        }
        from = next;
    }
    Ok(result)
}

/// Band-passed intensity envelope; with broadband rejection enabled the
/// intensity of the reference flanks (scaled to the carrier band's width)
/// is subtracted, so broadband interferers read as zero excess.
fn band_envelope(w16: &Waveform, band: &FrequencyBand, cfg: &ReceiverConfig) -> IntensityEnvelope {
    let smoothing = cfg.envelope_smoothing_s();
    let in_band = dsp::bandpass_multi(w16, std::slice::from_ref(band));
    let mut env = dsp::envelope(&in_band, smoothing).expect("positive smoothing window");
    if cfg.broadband_rejection {
        let (flanks, offset_db) = reference_flanks(band, w16.nyquist_hz());
        if !flanks.is_empty() {
            let reference = dsp::bandpass_multi(w16, &flanks);
            let ref_env = dsp::envelope(&reference, smoothing).expect("positive smoothing window");
            for (v, r) in env.values.iter_mut().zip(&ref_env.values) {
                *v -= r + offset_db;
            }
        }
    }
    env
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{render_schedule, HddProfile};
    use crate::channel::{transmit_path, ChannelConfig};
    use crate::framing::{frame_encode, frame_serialize, FrameConfig};
    use crate::modulation::{modulate, SymbolTiming};

    fn rendered(payload: &str, t0: f64, t1: f64, seed: u64) -> Waveform {
        let cfg = FrameConfig::default();
        let frames = frame_encode(&BitString::from(payload), &cfg).unwrap();
        let bits = frame_serialize(&frames).unwrap();
        let timing = SymbolTiming::new(t0, t1).unwrap();
        let schedule = modulate(&bits, &timing)
            .unwrap()
            .with_silence_padding(2.0, 0.5);
        render_schedule(&schedule, &HddProfile::default(), 16000, seed).unwrap()
    }

    fn through_channel(w: &Waveform, distance_m: f64, seed: u64) -> Waveform {
        let cfg = ChannelConfig {
            distance_m,
            ..ChannelConfig::default()
        }
        .with_seed(seed);
        transmit_path(w, &cfg).unwrap()
    }

    #[test]
    fn scan_finds_the_carrier_bin() {
        let w = rendered("101010", 0.3, 0.3, 1);
        let rx = through_channel(&w, 1.0, 2);
        let spec = dsp::stft(&rx, 50.0, 0.02, 0.08).unwrap();
        let cfg = ReceiverConfig::default();
        let candidates = scan_carrier(&spec, &cfg).unwrap();
        // 2083 Hz lives in bin 41 = [2050, 2100).
        assert_eq!(candidates[0], 41, "top candidate {candidates:?}");
    }

    #[test]
    fn scan_rejects_pure_noise() {
        let silence = Waveform::silence(10.0, 16000).unwrap();
        let noise = through_channel(&silence, 1.0, 3);
        let spec = dsp::stft(&noise, 50.0, 0.02, 0.08).unwrap();
        let cfg = ReceiverConfig::default();
        assert!(matches!(
            scan_carrier(&spec, &cfg),
            Err(Error::NoCarrierFound)
        ));
    }

    #[test]
    fn stronger_of_two_carriers_ranks_first() {
        // Same OOK pattern on 2083 Hz and on 3000 Hz, the second 10 dB hotter.
        let bits = BitString::from("10101010");
        let timing = SymbolTiming::symmetric(0.3).unwrap();
        let schedule = modulate(&bits, &timing)
            .unwrap()
            .with_silence_padding(1.0, 0.5);
        let a = render_schedule(&schedule, &HddProfile::default(), 16000, 4).unwrap();
        let hot = HddProfile {
            seek_carrier_hz: 3000.0,
            carrier_level_db: -10.0,
            broadband_level_db: f64::NEG_INFINITY,
            idle_level_db: f64::NEG_INFINITY,
            idle_floor_db: f64::NEG_INFINITY,
            ..HddProfile::default()
        };
        let b = render_schedule(&schedule, &hot, 16000, 5).unwrap();
        let mixed = Waveform::from_samples(
            a.samples()
                .iter()
                .zip(b.samples())
                .map(|(x, y)| x + y)
                .collect(),
            16000,
        )
        .unwrap();
        let rx = through_channel(&mixed, 1.0, 6);
        let spec = dsp::stft(&rx, 50.0, 0.02, 0.08).unwrap();
        let candidates = scan_carrier(&spec, &ReceiverConfig::default()).unwrap();
        assert_eq!(candidates[0], 60, "3000 Hz bin should rank first");
        assert!(candidates.contains(&41));
    }

    #[test]
    fn preamble_estimates_symmetric_timing() {
        let w = rendered("101010", 0.3, 0.3, 7);
        let rx = through_channel(&w, 1.0, 8);
        let cfg = ReceiverConfig::default();
        let env = band_envelope(&rx, &cfg.default_band, &cfg);
        let (est, start) = detect_preamble(&env, &cfg.default_band, &cfg).unwrap();
        assert!((est.t0_s - 0.3).abs() <= 0.03, "t0 {:.3}", est.t0_s);
        assert!((est.t1_s - 0.3).abs() <= 0.03, "t1 {:.3}", est.t1_s);
        // Preamble spans 4 symbols after the 2 s lead-in.
        assert!((start - 3.2).abs() < 0.1, "payload start {start:.3}");
        assert!(est.on_level_db > est.threshold_db);
        assert!(est.off_level_db < est.threshold_db);
    }

    #[test]
    fn preamble_estimates_asymmetric_timing() {
        let w = rendered("101010", 2.0, 1.0, 9);
        let rx = through_channel(&w, 1.0, 10);
        let cfg = ReceiverConfig::default();
        let env = band_envelope(&rx, &cfg.default_band, &cfg);
        let (est, _) = detect_preamble(&env, &cfg.default_band, &cfg).unwrap();
        assert!((est.t0_s - 2.0).abs() <= 0.2, "t0 {:.3}", est.t0_s);
        assert!((est.t1_s - 1.0).abs() <= 0.1, "t1 {:.3}", est.t1_s);
    }

    #[test]
    fn constant_envelope_has_no_preamble() {
        let env = IntensityEnvelope {
            values: vec![-30.0; 400],
            hop_s: 0.005,
            window_s: 0.02,
            start_s: 0.0,
        };
        let cfg = ReceiverConfig::default();
        assert!(matches!(
            detect_preamble(&env, &cfg.default_band, &cfg),
            Err(Error::PreambleNotFound)
        ));
    }

    #[test]
    fn loopback_recovers_payload_exactly() {
        let payload = BitString::from("1100101011100101");
        let cfg = FrameConfig::default();
        let frames = frame_encode(&payload, &cfg).unwrap();
        let bits = frame_serialize(&frames).unwrap();
        let timing = SymbolTiming::symmetric(0.3).unwrap();
        let schedule = modulate(&bits, &timing)
            .unwrap()
            .with_silence_padding(2.0, 0.5);
        let w = render_schedule(&schedule, &HddProfile::default(), 16000, 11).unwrap();
        let rx = through_channel(&w, 1.0, 12);
        let result = receive(&rx, &ReceiverConfig::default()).unwrap();
        assert_eq!(result.frames.len(), 1);
        assert_eq!(result.payload_bits(payload.len()), payload);
        let est = result.estimate.unwrap();
        assert_eq!(est.carrier_bin, 41);
    }

    #[test]
    fn two_meter_101010_recovers() {
        let w = rendered("101010", 0.3, 0.3, 13);
        let rx = through_channel(&w, 2.0, 14);
        let result = receive(&rx, &ReceiverConfig::default()).unwrap();
        assert_eq!(result.payload_bits(6), BitString::from("101010"));
    }

    #[test]
    fn ambient_only_yields_no_frames() {
        let silence = Waveform::silence(60.0, 16000).unwrap();
        let rx = through_channel(&silence, 1.0, 15);
        let result = receive(&rx, &ReceiverConfig::default()).unwrap();
        assert!(result.frames.is_empty());
        assert!(result
            .diagnostics
            .notes
            .iter()
            .any(|n| n.contains("no carrier found")));
    }

    #[test]
    fn three_back_to_back_frames_recover_in_order() {
        let mut payload = String::new();
        // Three frames worth of payload, exercising merged plateaus and
        // extended gaps at the frame boundaries.
        payload.push_str("110010101110010101001011000111001010"); // frame 1
        payload.push_str("011101010101010101010101010101010101"); // frame 2
        payload.push_str("100110011001100110011001100110011001"); // frame 3
        let payload = BitString::from(payload.as_str());
        let cfg = FrameConfig::default();
        let frames = frame_encode(&payload, &cfg).unwrap();
        let bits = frame_serialize(&frames).unwrap();
        let timing = SymbolTiming::symmetric(0.3).unwrap();
        let schedule = modulate(&bits, &timing)
            .unwrap()
            .with_silence_padding(2.0, 0.5);
        let w = render_schedule(&schedule, &HddProfile::default(), 16000, 16).unwrap();
        let rx = through_channel(&w, 1.0, 17);
        let result = receive(&rx, &ReceiverConfig::default()).unwrap();
        assert_eq!(result.frames.len(), 3, "diag {:?}", result.diagnostics);
        assert_eq!(result.payload_bits(payload.len()), payload);
    }

    #[test]
    fn gain_scaling_leaves_bits_unchanged() {
        let w = rendered("101101001", 0.3, 0.3, 18);
        let rx = through_channel(&w, 1.0, 19);
        let reference = receive(&rx, &ReceiverConfig::default()).unwrap();
        for g in [0.1, 0.35, 0.7, 1.0] {
            let scaled = rx.scaled(g);
            let got = receive(&scaled, &ReceiverConfig::default()).unwrap();
            assert_eq!(
                got.payload_bits(9),
                reference.payload_bits(9),
                "gain {g} changed the decode"
            );
        }
    }

    #[test]
    fn too_low_sample_rate_rejected() {
        let w = Waveform::silence(1.0, 4000).unwrap();
        assert!(receive(&w, &ReceiverConfig::default()).is_err());
    }

    #[test]
    fn forced_band_mode_decodes_without_scan() {
        let w = rendered("111000", 0.3, 0.3, 20);
        let rx = through_channel(&w, 1.0, 21);
        let cfg = ReceiverConfig {
            force_default_band: true,
            ..ReceiverConfig::default()
        };
        let result = receive(&rx, &cfg).unwrap();
        assert_eq!(result.payload_bits(6), BitString::from("111000"));
    }
}
