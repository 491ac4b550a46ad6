//! Welch spectral estimate of a sampled series.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sim::TimeSeries;
use crate::spectra::{FrequencyGrid, SpectrumSamples};

/// One-sided Welch estimate in rad/s: Hann window, 50 % overlap, segment
/// mean removed, DC bin dropped. `segment_len` defaults to the largest power
/// of two giving at least eight segments, capped at 2¹⁴.
pub fn periodogram(
    series: &TimeSeries,
    column: usize,
    segment_len: Option<usize>,
) -> Result<SpectrumSamples> {
    if column >= series.width() {
        return Err(Error::InvalidInput(format!("column {column} out of range")));
    }
    let x: Vec<f64> = series.rows().map(|r| r[column]).collect();
    let n = x.len();
    let seg = match segment_len {
        Some(s) => s,
        None => {
            let mut s = 16usize;
            while s * 2 <= (2 * n / 9).min(1 << 14) {
                s *= 2;
            }
            s
        }
    };
    if seg < 8 || n < seg + seg / 2 {
        return Err(Error::InvalidInput(format!(
            "series of {n} samples is too short for two {seg}-sample segments"
        )));
    }
    let hop = seg / 2;
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos())
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(seg);

    let bins = seg / 2;
    let mut acc = vec![0.0; bins + 1];
    let mut count = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    let mut start = 0;
    while start + seg <= n {
        let chunk = &x[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for ((b, v), w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex64::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }

    let dt = series.dt();
    let d_omega = 2.0 * PI / (seg as f64 * dt);
    // two-sided density per Hz is dt·|X|²/Σw²; fold to one side and divide by 2π for rad/s
    let scale = dt / (wss * count as f64) / (2.0 * PI);
    let omegas: Vec<f64> = (1..=bins).map(|k| k as f64 * d_omega).collect();
    let density: Vec<f64> = (1..=bins)
        .map(|k| {
            let fold = if k == bins { 1.0 } else { 2.0 };
            fold * scale * acc[k]
        })
        .collect();
    SpectrumSamples::new(FrequencyGrid::new(omegas)?, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::spectral_moment;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn sinusoid_parseval() {
        let (a, w, dt) = (1.7, 0.8, 0.05);
        let values: Vec<f64> = (0..200_000)
            .map(|i| a * (w * i as f64 * dt + 0.3).cos())
            .collect();
        let ts = TimeSeries::new(dt, 1, values).unwrap();
        let s = periodogram(&ts, 0, None).unwrap();
        let total = spectral_moment(&s, 0).unwrap();
        assert!((total / (a * a / 2.0) - 1.0).abs() < 0.05, "{total}");
        assert!((s.peak_omega() - w).abs() < 0.02);
    }

    #[test]
    fn white_noise_is_flat() {
        let dt = 0.1;
        let sigma = 2.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..400_000)
            .map(|_| {
                sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let ts = TimeSeries::new(dt, 1, values).unwrap();
        let s = periodogram(&ts, 0, Some(1024)).unwrap();
        // one-sided level σ²·dt/π over (0, π/dt]
        let level = sigma * sigma * dt / PI;
        let d = s.density();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!((mean / level - 1.0).abs() < 0.02);
        // ~780 averaged segments: every bin within 25 %
        assert!(d[1..d.len() - 1]
            .iter()
            .all(|v| (v / level - 1.0).abs() < 0.25));
    }

    #[test]
    fn too_short_rejected() {
        let ts = TimeSeries::new(0.1, 1, vec![0.0; 20]).unwrap();
        assert!(periodogram(&ts, 0, Some(16)).is_err());
    }
}
