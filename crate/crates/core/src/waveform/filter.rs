use num_complex::Complex64;

/// Kaiser shape for ~80 dB stopband attenuation.
const KAISER_BETA: f64 = 7.857;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Linear-phase windowed-sinc lowpass with unit DC gain. `cutoff` is the
/// -6 dB frequency in cycles per sample; `num_taps` should be odd.
pub fn lowpass_taps(num_taps: usize, cutoff: f64) -> Vec<f64> {
    assert!(num_taps % 2 == 1, "use an odd tap count for an integer group delay");
    let mid = (num_taps - 1) as f64 / 2.0;
    let norm = bessel_i0(KAISER_BETA);
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|n| {
            let x = n as f64 - mid;
            let sinc = if x == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * std::f64::consts::PI * cutoff * x).sin() / (std::f64::consts::PI * x)
            };
            let r = if mid == 0.0 { 0.0 } else { x / mid };
            let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
            sinc * window
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    taps
}

/// Zero-stuff by `factor` and filter, with the group delay removed so output
/// sample `factor * k` lines up with input sample `k`.
pub fn interpolate(input: &[Complex64], factor: usize, taps: &[f64]) -> Vec<Complex64> {
    if factor == 1 {
        return input.to_vec();
    }
    let delay = (taps.len() - 1) / 2;
    let gain = factor as f64;
    let out_len = input.len() * factor;
    (0..out_len)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            let first = (m + delay) % factor;
            for i in (first..taps.len().min(m + delay + 1)).step_by(factor) {
                let k = (m + delay - i) / factor;
                if k < input.len() {
                    acc += input[k] * taps[i];
                }
            }
            acc * gain
        })
        .collect()
}

/// Filter and keep every `factor`-th sample, delay-compensated.
pub fn decimate(input: &[Complex64], factor: usize, taps: &[f64]) -> Vec<Complex64> {
    if factor == 1 {
        return input.to_vec();
    }
    let delay = (taps.len() - 1) / 2;
    let out_len = input.len() / factor;
    (0..out_len).map(|n| decimated_sample(input, n, factor, taps, delay)).collect()
}

pub(crate) fn decimated_sample(input: &[Complex64], n: usize, factor: usize, taps: &[f64], delay: usize) -> Complex64 {
    let centre = n * factor + delay;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &h) in taps.iter().enumerate() {
        if let Some(idx) = centre.checked_sub(i) {
            if idx < input.len() {
                acc += input[idx] * h;
            }
        }
    }
    acc
}

/// Resampling filter for an `factor`-times oversampled OFDM band. Cutoff sits
/// at 0.8 of the baseband Nyquist frequency.
pub(crate) fn resampling_taps(factor: usize) -> Vec<f64> {
    lowpass_taps(32 * factor + 1, 0.4 / factor as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response_db(taps: &[f64], freq: f64) -> f64 {
        let h: Complex64 = taps
            .iter()
            .enumerate()
            .map(|(n, &t)| Complex64::from_polar(t, -2.0 * std::f64::consts::PI * freq * n as f64))
            .sum();
        20.0 * h.norm().log10()
    }

    #[test]
    fn stopband_exceeds_60db() {
        let taps = resampling_taps(4);
        // passband edge of the OFDM allocation and image region
        assert!(response_db(&taps, 0.5625 * 0.5 / 4.0).abs() < 0.01);
        for k in 0..200 {
            let f = 0.16 + k as f64 * (0.5 - 0.16) / 200.0;
            assert!(response_db(&taps, f) < -60.0, "f = {f}: {}", response_db(&taps, f));
        }
    }

    #[test]
    fn interpolate_then_decimate_recovers_bandlimited_tone() {
        let fs = 1.0;
        let n = 2048;
        let tone: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.1 * k as f64 / fs))
            .collect();
        let taps = resampling_taps(4);
        let up = interpolate(&tone, 4, &taps);
        let down = decimate(&up, 4, &taps);
        let err: f64 = (200..n - 200).map(|k| (down[k] - tone[k]).norm_sqr()).sum::<f64>() / (n - 400) as f64;
        assert!(err < 1e-7, "{err}");
        // interpolated samples at the original instants match too
        for k in 300..310 {
            assert!((up[4 * k] - tone[k]).norm() < 1e-3);
        }
    }
}
