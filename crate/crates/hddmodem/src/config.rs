//! Flat `key = value` configuration files, overridable by CLI flags.

use std::path::Path;

use crate::acoustics::HddProfile;
use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::framing::FrameConfig;
use crate::modulation::SymbolTiming;
use crate::receiver::ReceiverConfig;

/// Every tunable the CLI and the harness share.
#[derive(Debug, Clone)]
pub struct Settings {
    pub profile: HddProfile,
    pub channel: ChannelConfig,
    pub receiver: ReceiverConfig,
    pub timing: SymbolTiming,
    pub frame: FrameConfig,
    pub synth_rate_hz: u32,
    pub lead_in_s: f64,
    pub lead_out_s: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            profile: HddProfile::default(),
            channel: ChannelConfig::default(),
            receiver: ReceiverConfig::default(),
            timing: SymbolTiming { t0_s: 0.3, t1_s: 0.3 },
            frame: FrameConfig::default(),
            synth_rate_hz: 16000,
            lead_in_s: 2.0,
            lead_out_s: 0.5,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    match value {
        "-inf" | "-INF" => Ok(f64::NEG_INFINITY),
        _ => value.parse().map_err(|_| Error::BadConfigValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::BadConfigValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::BadConfigValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

impl Settings {
    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "rpm" => self.profile.rpm = parse_int(key, v)?,
            "seek_carrier_hz" => self.profile.seek_carrier_hz = parse_f64(key, v)?,
            "seek_band_low_hz" => self.profile.seek_band.0 = parse_f64(key, v)?,
            "seek_band_high_hz" => self.profile.seek_band.1 = parse_f64(key, v)?,
            "carrier_level_db" => self.profile.carrier_level_db = parse_f64(key, v)?,
            "broadband_level_db" => self.profile.broadband_level_db = parse_f64(key, v)?,
            "idle_level_db" => self.profile.idle_level_db = parse_f64(key, v)?,
            "idle_floor_db" => self.profile.idle_floor_db = parse_f64(key, v)?,
            "idle_harmonics" => self.profile.idle_harmonics = parse_int(key, v)?,

            "distance_m" => self.channel.distance_m = parse_f64(key, v)?,
            "reference_distance_m" => self.channel.reference_distance_m = parse_f64(key, v)?,
            "ambient_noise_level_db" => self.channel.ambient_noise_level_db = parse_f64(key, v)?,
            "burst_rate_hz" => self.channel.burst_rate_hz = parse_f64(key, v)?,
            "burst_duration_s" => self.channel.burst_duration_s = parse_f64(key, v)?,
            "burst_level_db" => self.channel.burst_level_db = parse_f64(key, v)?,
            "seed" => self.channel.seed = parse_int(key, v)?,

            "scan_low_hz" => self.receiver.scan_band.low_hz = parse_f64(key, v)?,
            "scan_high_hz" => self.receiver.scan_band.high_hz = parse_f64(key, v)?,
            "band_low_hz" => self.receiver.default_band.low_hz = parse_f64(key, v)?,
            "band_high_hz" => self.receiver.default_band.high_hz = parse_f64(key, v)?,
            "force_default_band" => self.receiver.force_default_band = parse_bool(key, v)?,
            "payload_len" => {
                let n: usize = parse_int(key, v)?;
                self.receiver.payload_len = n;
                self.frame.payload_len = n;
            }
            "min_symbol_s" => self.receiver.min_symbol_s = parse_f64(key, v)?,
            "max_symbol_s" => self.receiver.max_symbol_s = parse_f64(key, v)?,
            "threshold_margin_db" => self.receiver.threshold_margin_db = parse_f64(key, v)?,
            "scan_min_contrast_db" => self.receiver.scan_min_contrast_db = parse_f64(key, v)?,
            "broadband_rejection" => self.receiver.broadband_rejection = parse_bool(key, v)?,

            "t0_s" => self.timing.t0_s = parse_f64(key, v)?,
            "t1_s" => self.timing.t1_s = parse_f64(key, v)?,
            "synth_rate_hz" => self.synth_rate_hz = parse_int(key, v)?,
            "lead_in_s" => self.lead_in_s = parse_f64(key, v)?,
            "lead_out_s" => self.lead_out_s = parse_f64(key, v)?,

            other => return Err(Error::UnknownConfigKey(other.into())),
        }
        Ok(())
    }

    /// Parse a flat config file: one `key = value` per line; `#` comments
    /// and blank lines are ignored.
    pub fn apply_file<P: AsRef<Path>>(&mut self, path: P) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("config line {}: expected key = value", lineno + 1))
            })?;
            self.apply(key, value)?;
        }
        Ok(())
    }

    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Settings> {
        let mut s = Settings::default();
        s.apply_file(path)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_flat_file_with_comments() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# channel").unwrap();
        writeln!(f, "distance_m = 2.0").unwrap();
        writeln!(f, "ambient_noise_level_db = -55").unwrap();
        writeln!(f, "").unwrap();
        writeln!(f, "payload_len = 32").unwrap();
        writeln!(f, "carrier_level_db=-inf").unwrap();
        let s = Settings::load_file(f.path()).unwrap();
        assert_eq!(s.channel.distance_m, 2.0);
        assert_eq!(s.channel.ambient_noise_level_db, -55.0);
        assert_eq!(s.frame.payload_len, 32);
        assert_eq!(s.receiver.payload_len, 32);
        assert_eq!(s.profile.carrier_level_db, f64::NEG_INFINITY);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut s = Settings::default();
        assert!(matches!(
            s.apply("no_such_key", "1"),
            Err(Error::UnknownConfigKey(_))
        ));
    }

    #[test]
    fn bad_value_is_an_error() {
        let mut s = Settings::default();
        assert!(matches!(
            s.apply("distance_m", "near"),
            Err(Error::BadConfigValue { .. })
        ));
    }
}
