//! Test-only spectral oracles, deliberately independent of the FFT-based
//! implementation paths: plain correlation against complex exponentials.

/// Amplitude of a sinusoidal component at `freq_hz`: 2|X(f)|/N.
pub fn dft_magnitude(samples: &[f64], sample_rate_hz: u32, freq_hz: f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let w = -2.0 * std::f64::consts::PI * freq_hz / sample_rate_hz as f64;
    let (step_re, step_im) = (w.cos(), w.sin());
    let (mut ph_re, mut ph_im) = (1.0f64, 0.0f64);
    let (mut acc_re, mut acc_im) = (0.0f64, 0.0f64);
    for &x in samples {
        acc_re += x * ph_re;
        acc_im += x * ph_im;
        let re = ph_re * step_re - ph_im * step_im;
        ph_im = ph_re * step_im + ph_im * step_re;
        ph_re = re;
    }
    2.0 * (acc_re * acc_re + acc_im * acc_im).sqrt() / n as f64
}

/// Mean-square power contained in [low_hz, high_hz), estimated on the
/// signal's natural frequency grid (subsampled for very wide bands).
pub fn band_energy_linear(samples: &[f64], sample_rate_hz: u32, low_hz: f64, high_hz: f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let natural = sample_rate_hz as f64 / n as f64;
    let first = (low_hz / natural).ceil().max(1.0) as usize;
    let last = (high_hz / natural).floor() as usize;
    if last < first {
        // Band narrower than one grid step: sample its center.
        let m = dft_magnitude(samples, sample_rate_hz, (low_hz + high_hz) / 2.0);
        return m * m / 2.0;
    }
    let bins = last - first + 1;
    let step = bins.div_ceil(400);
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut j = first;
    while j <= last {
        let m = dft_magnitude(samples, sample_rate_hz, j as f64 * natural);
        // dft_magnitude returns 2|X|/N; per-bin mean-square share is m^2/2.
        sum += m * m / 2.0;
        count += 1;
        j += step;
    }
    sum * bins as f64 / count as f64
}

pub fn band_energy_db(samples: &[f64], sample_rate_hz: u32, low_hz: f64, high_hz: f64) -> f64 {
    10.0 * band_energy_linear(samples, sample_rate_hz, low_hz, high_hz)
        .max(1e-300)
        .log10()
}

pub fn rms_db(samples: &[f64]) -> f64 {
    let ms = samples.iter().map(|s| s * s).sum::<f64>() / samples.len().max(1) as f64;
    10.0 * ms.max(1e-300).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_tone_amplitude() {
        let samples: Vec<f64> = (0..16000)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16000.0).sin())
            .collect();
        assert!((dft_magnitude(&samples, 16000, 440.0) - 0.3).abs() < 1e-3);
        assert!(dft_magnitude(&samples, 16000, 1000.0) < 1e-3);
    }

    #[test]
    fn band_energy_of_in_band_tone_is_its_mean_square() {
        let samples: Vec<f64> = (0..32000)
            .map(|i| 0.4 * (2.0 * std::f64::consts::PI * 2075.0 * i as f64 / 16000.0).sin())
            .collect();
        let e = band_energy_linear(&samples, 16000, 2050.0, 2100.0);
        assert!((e - 0.08).abs() < 0.005, "got {e}");
    }
}
