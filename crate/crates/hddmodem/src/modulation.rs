//! On-off keying: bits to a timed carrier-on / carrier-off schedule.
//!
//! A '1' is the presence of the carrier (seek activity) for `t1` seconds, a
//! '0' is silence for `t0` seconds. The schedule keeps one segment per
//! symbol — adjacent same-state segments are deliberately not merged, so the
//! symbol structure stays visible to tests and to the transmit executor.

use std::io::{BufRead, Write};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Symbol durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolTiming {
    /// Silence symbol ('0') duration.
    pub t0_s: f64,
    /// Carrier symbol ('1') duration.
    pub t1_s: f64,
}

impl SymbolTiming {
    pub fn new(t0_s: f64, t1_s: f64) -> Result<Self> {
        if !(t0_s > 0.0) || !(t1_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "symbol durations must be positive (t0={t0_s}, t1={t1_s})"
            )));
        }
        Ok(SymbolTiming { t0_s, t1_s })
    }

    pub fn symmetric(t_s: f64) -> Result<Self> {
        Self::new(t_s, t_s)
    }
}

/// One carrier-on or carrier-off interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub carrier_on: bool,
    pub duration_s: f64,
}

/// Timed sequence of carrier-on/off intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolSchedule {
    pub segments: Vec<Segment>,
}

impl SymbolSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.duration_s > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "segment {i} has non-positive duration {}",
                    seg.duration_s
                )));
            }
        }
        Ok(SymbolSchedule { segments })
    }

    pub fn total_duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Prepend / append a silence interval (used for channel lead-in and
    /// lead-out around a transmission).
    pub fn with_silence_padding(&self, lead_in_s: f64, lead_out_s: f64) -> SymbolSchedule {
        let mut segments = Vec::with_capacity(self.segments.len() + 2);
        if lead_in_s > 0.0 {
            segments.push(Segment {
                carrier_on: false,
                duration_s: lead_in_s,
            });
        }
        segments.extend_from_slice(&self.segments);
        if lead_out_s > 0.0 {
            segments.push(Segment {
                carrier_on: false,
                duration_s: lead_out_s,
            });
        }
        SymbolSchedule { segments }
    }

    /// CSV rows of `state,duration_s`, one segment per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "state,duration_s")?;
        for seg in &self.segments {
            writeln!(
                w,
                "{},{}",
                if seg.carrier_on { "on" } else { "off" },
                seg.duration_s
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<SymbolSchedule> {
        let mut segments = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "state,duration_s" {
                continue;
            }
            let (state, dur) = line.split_once(',').ok_or_else(|| {
                Error::InvalidParameter(format!("schedule CSV line {}: missing comma", lineno + 1))
            })?;
            let carrier_on = match state.trim() {
                "on" | "1" => true,
                "off" | "0" => false,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "schedule CSV line {}: bad state {:?}",
                        lineno + 1,
                        other
                    )))
                }
            };
            let duration_s: f64 = dur.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "schedule CSV line {}: bad duration {:?}",
                    lineno + 1,
                    dur
                ))
            })?;
            segments.push(Segment {
                carrier_on,
                duration_s,
            });
        }
        SymbolSchedule::new(segments)
    }
}

/// Map each bit to one schedule segment: '1' → (on, t1), '0' → (off, t0).
pub fn modulate(bits: &BitString, timing: &SymbolTiming) -> Result<SymbolSchedule> {
    if bits.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let segments = bits
        .iter()
        .map(|b| Segment {
            carrier_on: b,
            duration_s: if b { timing.t1_s } else { timing.t0_s },
        })
        .collect();
    Ok(SymbolSchedule { segments })
}

/// Noise-free inverse of [`modulate`], used as a test oracle and by the
/// transmit-executor round-trip checks. Each segment must match its symbol
/// duration within 1%.
pub fn demodulate_ideal(schedule: &SymbolSchedule, timing: &SymbolTiming) -> Result<BitString> {
    let mut bits = BitString::new();
    for (index, seg) in schedule.segments.iter().enumerate() {
        let expect = if seg.carrier_on {
            timing.t1_s
        } else {
            timing.t0_s
        };
        if (seg.duration_s - expect).abs() > 0.01 * expect {
            return Err(Error::MalformedSchedule {
                index,
                duration_s: seg.duration_s,
                on: seg.carrier_on,
            });
        }
        bits.push(seg.carrier_on);
    }
    Ok(bits)
}

/// Raw channel rate in bits per second for symmetric timing (t0 == t1).
pub fn raw_bit_rate(timing: &SymbolTiming) -> Result<f64> {
    if timing.t0_s != timing.t1_s {
        return Err(Error::AsymmetricRate {
            t0_s: timing.t0_s,
            t1_s: timing.t1_s,
        });
    }
    Ok(1.0 / timing.t0_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_one_is_one_on_segment() {
        let timing = SymbolTiming::new(2.0, 1.0).unwrap();
        let s = modulate(&BitString::from("1"), &timing).unwrap();
        assert_eq!(s.segments.len(), 1);
        assert!(s.segments[0].carrier_on);
        assert_eq!(s.segments[0].duration_s, 1.0);
    }

    #[test]
    fn alternating_payload_totals_nine_seconds() {
        // t0 = 2 s, t1 = 1 s over "101010": 3 on + 3 off = 3 + 6 s.
        let timing = SymbolTiming::new(2.0, 1.0).unwrap();
        let s = modulate(&BitString::from("101010"), &timing).unwrap();
        assert_eq!(s.segments.len(), 6);
        assert!((s.total_duration_s() - 9.0).abs() < 1e-12);
        for (i, seg) in s.segments.iter().enumerate() {
            assert_eq!(seg.carrier_on, i % 2 == 0);
        }
    }

    #[test]
    fn zeros_only_duration() {
        let timing = SymbolTiming::symmetric(0.3).unwrap();
        let s = modulate(&BitString::from("0000000000"), &timing).unwrap();
        assert!((s.total_duration_s() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn ideal_round_trip() {
        let timing = SymbolTiming::new(0.5, 0.25).unwrap();
        let bits = BitString::from("1010011");
        let s = modulate(&bits, &timing).unwrap();
        assert_eq!(demodulate_ideal(&s, &timing).unwrap(), bits);
    }

    #[test]
    fn empty_schedule_demodulates_to_empty() {
        let timing = SymbolTiming::symmetric(1.0).unwrap();
        let s = SymbolSchedule::default();
        assert!(demodulate_ideal(&s, &timing).unwrap().is_empty());
    }

    #[test]
    fn half_length_segment_is_malformed() {
        let timing = SymbolTiming::symmetric(1.0).unwrap();
        let s = SymbolSchedule::new(vec![Segment {
            carrier_on: true,
            duration_s: 0.5,
        }])
        .unwrap();
        assert!(matches!(
            demodulate_ideal(&s, &timing),
            Err(Error::MalformedSchedule { index: 0, .. })
        ));
    }

    #[test]
    fn rate_is_reciprocal_of_symbol_time() {
        assert!(
            (raw_bit_rate(&SymbolTiming::symmetric(0.3).unwrap()).unwrap() - 10.0 / 3.0).abs()
                < 1e-12
        );
        assert_eq!(
            raw_bit_rate(&SymbolTiming::symmetric(1.0).unwrap()).unwrap(),
            1.0
        );
        assert_eq!(
            raw_bit_rate(&SymbolTiming::symmetric(0.5).unwrap()).unwrap(),
            2.0
        );
    }

    #[test]
    fn rate_rejects_asymmetric_timing() {
        let timing = SymbolTiming::new(2.0, 1.0).unwrap();
        assert!(matches!(
            raw_bit_rate(&timing),
            Err(Error::AsymmetricRate { .. })
        ));
    }

    #[test]
    fn empty_bits_rejected() {
        let timing = SymbolTiming::symmetric(1.0).unwrap();
        assert!(matches!(
            modulate(&BitString::new(), &timing),
            Err(Error::EmptyPayload)
        ));
    }

    #[test]
    fn csv_round_trip() {
        let timing = SymbolTiming::new(2.0, 1.0).unwrap();
        let s = modulate(&BitString::from("1001"), &timing).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = SymbolSchedule::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
    }
}
