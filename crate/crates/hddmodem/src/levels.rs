//! Decibel conversions used throughout the crate.
//!
//! Levels are dB relative to full scale. Tone levels refer to peak
//! amplitude; noise levels refer to RMS. Intensity (envelope, PSD) uses a
//! full-scale sine as the 0 dB reference, i.e. mean-square 0.5.

/// Mean-square of a full-scale sine, the 0 dB intensity reference.
pub const FULL_SCALE_SINE_MS: f64 = 0.5;

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn amplitude_to_db(amp: f64) -> f64 {
    20.0 * amp.log10()
}

pub fn power_ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Intensity of a mean-square power, in dB re full-scale sine.
pub fn intensity_db(mean_square: f64) -> f64 {
    10.0 * (mean_square / FULL_SCALE_SINE_MS).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_conversions() {
        assert!((db_to_amplitude(-20.0) - 0.1).abs() < 1e-12);
        assert!((amplitude_to_db(0.5) + 6.0206).abs() < 1e-3);
        assert_eq!(db_to_amplitude(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn full_scale_sine_is_zero_db() {
        assert!(intensity_db(0.5).abs() < 1e-12);
    }
}
