//! Monte Carlo evaluation pipeline: end-to-end loopback trials, BER versus
//! distance and versus carrier-band SNR, throughput tables, and spectrogram
//! export. All randomness flows from explicit seeds; identical experiment
//! specs produce byte-identical reports.

use std::io::Write;

use serde::Serialize;

use crate::acoustics::{render_schedule, HddProfile};
use crate::bits::BitString;
use crate::channel::{self, ChannelConfig};
use crate::config::Settings;
use crate::dsp::{self, FrequencyBand};
use crate::error::{Error, Result};
use crate::framing::{frame_encode, frame_serialize, FrameConfig, PREAMBLE_LEN};
use crate::modulation::{modulate, SymbolTiming};
use crate::receiver::{self, ReceiverConfig};
use crate::seeds;
use crate::waveform::Waveform;

/// Where each trial's payload bits come from.
#[derive(Debug, Clone)]
pub enum PayloadSource {
    Literal(BitString),
    /// Fresh random bits per trial, drawn from the trial seed.
    Random { bits: usize },
}

impl PayloadSource {
    fn realize(&self, trial_seed: u64) -> BitString {
        match self {
            PayloadSource::Literal(bits) => bits.clone(),
            PayloadSource::Random { bits } => {
                BitString::random(&mut seeds::rng(trial_seed, 0x9a9a), *bits)
            }
        }
    }
}

/// One evaluation run: payload source, modem parameters, and the sweep axis.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub payload: PayloadSource,
    pub timing: SymbolTiming,
    pub profile: HddProfile,
    pub channel: ChannelConfig,
    pub receiver: ReceiverConfig,
    pub frame: FrameConfig,
    /// Distances for loopback sweeps.
    pub distances_m: Vec<f64>,
    /// Carrier-band SNR targets for SNR sweeps.
    pub snr_targets_db: Vec<f64>,
    /// Trials (seeds) per sweep point.
    pub trials: usize,
    pub master_seed: u64,
    pub synth_rate_hz: u32,
    pub lead_in_s: f64,
    pub lead_out_s: f64,
}

impl ExperimentSpec {
    pub fn from_settings(settings: &Settings, payload: PayloadSource) -> Self {
        ExperimentSpec {
            payload,
            timing: settings.timing,
            profile: settings.profile.clone(),
            channel: settings.channel.clone(),
            receiver: settings.receiver.clone(),
            frame: settings.frame,
            distances_m: vec![0.5, 1.0, 2.0],
            snr_targets_db: vec![0.0, 6.0, 12.0, 18.0],
            trials: 100,
            master_seed: settings.channel.seed,
            synth_rate_hz: settings.synth_rate_hz,
            lead_in_s: settings.lead_in_s,
            lead_out_s: settings.lead_out_s,
        }
    }
}

/// Reporting band for measured SNR: the informative carrier region.
pub const REPORT_BAND: FrequencyBand = FrequencyBand {
    low_hz: 2050.0,
    high_hz: 2100.0,
};

/// Outcome of a single transmit/receive trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub point: f64,
    pub seed: u64,
    pub measured_snr_db: f64,
    pub payload_bits: usize,
    /// Bit errors; bits lost with undecoded frames count one half each.
    pub bit_errors: f64,
    pub frames_expected: usize,
    pub frames_recovered: usize,
    pub frames_lost: usize,
}

/// Aggregate over all trials of one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub point: f64,
    pub realized_snr_db: f64,
    pub trials: usize,
    pub total_bits: usize,
    pub bit_errors: f64,
    pub ber: f64,
    pub ber_standard_error: f64,
    pub frames_lost: usize,
    pub attainable: bool,
    pub ambient_level_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BerReport {
    /// Meaning of the `point` column: `distance_m` or `target_snr_db`.
    pub axis: String,
    pub rows: Vec<TrialRow>,
    pub points: Vec<PointSummary>,
    /// For SNR sweeps: whether BER was non-increasing in realized SNR
    /// within one standard error per adjacent pair.
    pub monotone_ok: Option<bool>,
}

impl BerReport {
    /// Per-trial rows as CSV.
    pub fn write_trials_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{},seed,measured_snr_db,payload_bits,bit_errors,frames_expected,frames_recovered,frames_lost",
            self.axis
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.6},{},{:.6},{},{:.1},{},{},{}",
                r.point,
                r.seed,
                r.measured_snr_db,
                r.payload_bits,
                r.bit_errors,
                r.frames_expected,
                r.frames_recovered,
                r.frames_lost
            )?;
        }
        Ok(())
    }

    /// Per-point summary as CSV.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{},realized_snr_db,trials,total_bits,bit_errors,ber,ber_standard_error,frames_lost,attainable,ambient_level_db",
            self.axis
        )?;
        for p in &self.points {
            writeln!(
                w,
                "{:.6},{:.6},{},{},{:.1},{:.8},{:.8},{},{},{:.3}",
                p.point,
                p.realized_snr_db,
                p.trials,
                p.total_bits,
                p.bit_errors,
                p.ber,
                p.ber_standard_error,
                p.frames_lost,
                p.attainable,
                p.ambient_level_db
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParameter(format!("report serialization: {e}")))
    }
}

struct TrialOutcome {
    measured_snr_db: f64,
    payload_bits: usize,
    bit_errors: f64,
    frames_expected: usize,
    frames_recovered: usize,
    frames_lost: usize,
}

fn run_trial(
    spec: &ExperimentSpec,
    distance_m: f64,
    ambient_db: f64,
    trial_seed: u64,
) -> TrialOutcome {
    let payload = spec.payload.realize(trial_seed);
    match try_trial(spec, distance_m, ambient_db, trial_seed, &payload) {
        Ok(outcome) => outcome,
        Err(_) => {
            // A failed stage loses the whole transmission for this trial.
            let frames_expected = payload.len().div_ceil(spec.frame.payload_len);
            TrialOutcome {
                measured_snr_db: f64::NEG_INFINITY,
                payload_bits: payload.len(),
                bit_errors: payload.len() as f64 * 0.5,
                frames_expected,
                frames_recovered: 0,
                frames_lost: frames_expected,
            }
        }
    }
}

fn try_trial(
    spec: &ExperimentSpec,
    distance_m: f64,
    ambient_db: f64,
    trial_seed: u64,
    payload: &BitString,
) -> Result<TrialOutcome> {
    let frames = frame_encode(payload, &spec.frame)?;
    let bits = frame_serialize(&frames)?;
    let schedule = modulate(&bits, &spec.timing)?
        .with_silence_padding(spec.lead_in_s, spec.lead_out_s);

    let w = render_schedule(
        &schedule,
        &spec.profile,
        spec.synth_rate_hz,
        seeds::derive(trial_seed, 0x11),
    )?;
    let chan = ChannelConfig {
        distance_m,
        ambient_noise_level_db: ambient_db,
        seed: seeds::derive(trial_seed, 0x22),
        ..spec.channel.clone()
    };
    let rx = channel::transmit_path(&w, &chan)?;
    let rx = if rx.sample_rate_hz() != receiver::RECEIVER_RATE_HZ {
        channel::resample(&rx, receiver::RECEIVER_RATE_HZ)?
    } else {
        rx
    };

    let measured_snr_db = measure_snr(&rx, spec).unwrap_or(f64::NAN);

    let result = receiver::receive(&rx, &spec.receiver)?;
    let got = result.payload_bits(payload.len());
    let mut bit_errors = got.hamming_prefix(payload) as f64;
    if got.len() < payload.len() {
        bit_errors += (payload.len() - got.len()) as f64 * 0.5;
    }
    let frames_expected = payload.len().div_ceil(spec.frame.payload_len);
    let frames_recovered = result.frames.len();
    Ok(TrialOutcome {
        measured_snr_db,
        payload_bits: payload.len(),
        bit_errors,
        frames_expected,
        frames_recovered,
        frames_lost: frames_expected.saturating_sub(frames_recovered),
    })
}

/// Ground-truth carrier-band SNR: spectral frames during the first
/// preamble's carrier-on symbols against frames from the pre-transmission
/// lead-in, compared over the reporting band.
fn measure_snr(rx: &Waveform, spec: &ExperimentSpec) -> Result<f64> {
    let series = dsp::stft(rx, 50.0, 0.02, 0.08)?;
    let t1 = spec.timing.t1_s;
    let t0 = spec.timing.t0_s;
    let lead = spec.lead_in_s;

    let mut signal: Vec<Vec<f64>> = Vec::new();
    for on_start in [lead, lead + t1 + t0] {
        let range = series.frames_within(on_start, on_start + t1);
        signal.extend_from_slice(&series.frames[range]);
    }
    if signal.is_empty() {
        // Symbols shorter than the analysis window: take center frames.
        for on_start in [lead, lead + t1 + t0] {
            let k = ((on_start + t1 / 2.0) / series.hop_s) as usize;
            if k < series.frames.len() {
                signal.push(series.frames[k].clone());
            }
        }
    }
    let noise_range = series.frames_within(0.2, lead - 0.2);
    let noise = &series.frames[noise_range];
    dsp::snr_in_band(&signal, noise, 50.0, &REPORT_BAND)
}

fn summarize(
    point: f64,
    ambient_db: f64,
    attainable: bool,
    rows: &[TrialRow],
) -> PointSummary {
    let total_bits: usize = rows.iter().map(|r| r.payload_bits).sum();
    let bit_errors: f64 = rows.iter().map(|r| r.bit_errors).sum();
    let ber = if total_bits > 0 {
        bit_errors / total_bits as f64
    } else {
        0.0
    };
    let se = if total_bits > 0 {
        (ber * (1.0 - ber) / total_bits as f64).sqrt()
    } else {
        0.0
    };
    let finite_snr: Vec<f64> = rows
        .iter()
        .map(|r| r.measured_snr_db)
        .filter(|s| s.is_finite())
        .collect();
    let realized = if finite_snr.is_empty() {
        f64::NAN
    } else {
        finite_snr.iter().sum::<f64>() / finite_snr.len() as f64
    };
    PointSummary {
        point,
        realized_snr_db: realized,
        trials: rows.len(),
        total_bits,
        bit_errors,
        ber,
        ber_standard_error: se,
        frames_lost: rows.iter().map(|r| r.frames_lost).sum(),
        attainable,
        ambient_level_db: ambient_db,
    }
}

/// Transmit/receive loopback over the spec's distance sweep.
pub fn run_loopback(spec: &ExperimentSpec) -> Result<BerReport> {
    if spec.distances_m.is_empty() || spec.trials == 0 {
        return Err(Error::InvalidParameter(
            "loopback needs at least one distance and one trial".into(),
        ));
    }
    let mut report = BerReport {
        axis: "distance_m".into(),
        rows: Vec::new(),
        points: Vec::new(),
        monotone_ok: None,
    };
    for (pi, &distance) in spec.distances_m.iter().enumerate() {
        let mut rows = Vec::with_capacity(spec.trials);
        for t in 0..spec.trials {
            let trial_seed = seeds::derive(spec.master_seed, ((pi as u64) << 32) | t as u64);
            let outcome = run_trial(spec, distance, spec.channel.ambient_noise_level_db, trial_seed);
            rows.push(TrialRow {
                point: distance,
                seed: trial_seed,
                measured_snr_db: outcome.measured_snr_db,
                payload_bits: outcome.payload_bits,
                bit_errors: outcome.bit_errors,
                frames_expected: outcome.frames_expected,
                frames_recovered: outcome.frames_recovered,
                frames_lost: outcome.frames_lost,
            });
        }
        report
            .points
            .push(summarize(distance, spec.channel.ambient_noise_level_db, true, &rows));
        report.rows.extend(rows);
    }
    Ok(report)
}

/// Calibrate the ambient level so the measured carrier-band SNR hits
/// `target_db`, by bisection on a fixed calibration rendering. Returns the
/// ambient level and the realized SNR.
fn calibrate_ambient(spec: &ExperimentSpec, target_db: f64) -> Result<(f64, f64)> {
    // Preamble-only rendering: the SNR measurement never looks past it.
    let preamble = BitString::from_bools(crate::framing::PREAMBLE.to_vec());
    let schedule = modulate(&preamble, &spec.timing)?
        .with_silence_padding(spec.lead_in_s, spec.lead_out_s);
    let cal_seed = seeds::derive(spec.master_seed, 0xca1);
    let w = render_schedule(&schedule, &spec.profile, spec.synth_rate_hz, cal_seed)?;

    let measure = |ambient_db: f64| -> Result<f64> {
        let chan = ChannelConfig {
            ambient_noise_level_db: ambient_db,
            seed: seeds::derive(cal_seed, 0x33),
            ..spec.channel.clone()
        };
        let rx = channel::transmit_path(&w, &chan)?;
        let rx = if rx.sample_rate_hz() != receiver::RECEIVER_RATE_HZ {
            channel::resample(&rx, receiver::RECEIVER_RATE_HZ)?
        } else {
            rx
        };
        measure_snr(&rx, spec)
    };

    // SNR decreases monotonically with ambient level.
    let (mut lo, mut hi) = (-120.0f64, -6.0f64);
    let mut best = (lo, measure(lo)?);
    for _ in 0..40 {
        let mid = (lo + hi) / 2.0;
        let snr = measure(mid)?;
        if (snr - target_db).abs() < (best.1 - target_db).abs() {
            best = (mid, snr);
        }
        if snr > target_db {
            lo = mid;
        } else {
            hi = mid;
        }
        if (best.1 - target_db).abs() < 0.1 {
            break;
        }
    }
    Ok(best)
}

/// BER as a function of carrier-band SNR: per target point the ambient
/// level is calibrated to realize the target, then `trials` seeded
/// loopbacks run at the spec's first distance.
pub fn sweep_snr(spec: &ExperimentSpec) -> Result<BerReport> {
    if spec.snr_targets_db.len() < 3 {
        return Err(Error::InvalidParameter(
            "SNR sweep needs at least 3 points".into(),
        ));
    }
    if spec.trials < 30 {
        return Err(Error::InvalidParameter(
            "SNR sweep needs at least 30 seeds per point".into(),
        ));
    }
    let distance = spec.distances_m.first().copied().unwrap_or(1.0);
    let mut report = BerReport {
        axis: "target_snr_db".into(),
        rows: Vec::new(),
        points: Vec::new(),
        monotone_ok: None,
    };
    for (pi, &target) in spec.snr_targets_db.iter().enumerate() {
        let (ambient_db, realized_cal) = calibrate_ambient(spec, target)?;
        let attainable = (realized_cal - target).abs() <= 1.0;
        let mut rows = Vec::with_capacity(spec.trials);
        for t in 0..spec.trials {
            let trial_seed =
                seeds::derive(spec.master_seed, 0x5000_0000 | ((pi as u64) << 32) | t as u64);
            let outcome = run_trial(spec, distance, ambient_db, trial_seed);
            rows.push(TrialRow {
                point: target,
                seed: trial_seed,
                measured_snr_db: outcome.measured_snr_db,
                payload_bits: outcome.payload_bits,
                bit_errors: outcome.bit_errors,
                frames_expected: outcome.frames_expected,
                frames_recovered: outcome.frames_recovered,
                frames_lost: outcome.frames_lost,
            });
        }
        report.points.push(summarize(target, ambient_db, attainable, &rows));
        report.rows.extend(rows);
    }

    // Monotonicity: sort points by realized SNR and require BER to be
    // non-increasing within one standard error per adjacent pair.
    let mut order: Vec<usize> = (0..report.points.len()).collect();
    order.sort_by(|&a, &b| {
        report.points[a]
            .realized_snr_db
            .total_cmp(&report.points[b].realized_snr_db)
    });
    let mut ok = true;
    for pair in order.windows(2) {
        let lo = &report.points[pair[0]];
        let hi = &report.points[pair[1]];
        if hi.ber > lo.ber + lo.ber_standard_error + hi.ber_standard_error {
            ok = false;
        }
    }
    report.monotone_ok = Some(ok);
    Ok(report)
}

/// One row of the throughput table.
#[derive(Debug, Clone, Serialize)]
pub struct ThroughputRow {
    pub t_s: f64,
    pub raw_bit_per_s: f64,
    pub nominal_bit_per_s: f64,
    pub nominal_bit_per_min: f64,
    pub nominal_bit_per_hour: f64,
    pub effective_bit_per_s: f64,
    pub note: String,
}

/// Raw and effective throughput for each timing. `effective` accounts for
/// the 4 preamble bits per `payload_len` payload bits; nominal figures are
/// the rounded rates conventionally quoted.
pub fn throughput_table(timings: &[SymbolTiming], frame: &FrameConfig) -> Result<Vec<ThroughputRow>> {
    if timings.is_empty() {
        return Err(Error::InvalidParameter("no timings given".into()));
    }
    let l = frame.payload_len as f64;
    let overhead = l / (l + PREAMBLE_LEN as f64);
    Ok(timings
        .iter()
        .map(|timing| {
            let (t, note) = if timing.t0_s == timing.t1_s {
                (timing.t0_s, String::new())
            } else {
                (
                    (timing.t0_s + timing.t1_s) / 2.0,
                    "asymmetric timing; rate uses mean T".to_string(),
                )
            };
            let raw = 1.0 / t;
            let nominal = raw.round();
            ThroughputRow {
                t_s: t,
                raw_bit_per_s: raw,
                nominal_bit_per_s: nominal,
                nominal_bit_per_min: nominal * 60.0,
                nominal_bit_per_hour: nominal * 3600.0,
                effective_bit_per_s: raw * overhead,
                note,
            }
        })
        .collect())
}

pub fn write_throughput_csv<W: Write>(rows: &[ThroughputRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "t_s,raw_bit_per_s,nominal_bit_per_s,nominal_bit_per_min,nominal_bit_per_hour,effective_bit_per_s,note"
    )?;
    for r in rows {
        writeln!(
            w,
            "{:.6},{:.6},{:.0},{:.0},{:.0},{:.6},{}",
            r.t_s,
            r.raw_bit_per_s,
            r.nominal_bit_per_s,
            r.nominal_bit_per_min,
            r.nominal_bit_per_hour,
            r.effective_bit_per_s,
            r.note
        )?;
    }
    Ok(())
}

/// Export an STFT spectrogram as CSV for external plotting, with marker
/// rows for the informative 2050/2100 Hz band edges.
pub fn spectrogram_export<W: Write>(w: &Waveform, mut out: W) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidParameter("empty waveform".into()));
    }
    let series = dsp::stft(w, 50.0, 0.04, 0.08)?;
    writeln!(out, "# band_marker_hz,2050")?;
    writeln!(out, "# band_marker_hz,2100")?;
    series.write_csv(out)
}
