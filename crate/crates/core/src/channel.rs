//! End-to-end analog path per TRxP (fronthaul + air) and receiver noise.
//!
//! Each path is flat: a complex gain, a transmit amplitude scale and a pure
//! delay. Paths are superimposed at the single receive antenna and noise is
//! added once, after the sum.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::BasebandSignal;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Propagation delay of a guided link. `velocity_factor` is the fraction of
/// the vacuum speed of light.
pub fn fronthaul_delay(length_m: f64, velocity_factor: f64) -> Result<f64> {
    if !(velocity_factor > 0.0 && velocity_factor <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "velocity factor must be in (0, 1], got {velocity_factor}"
        )));
    }
    if !(length_m >= 0.0 && length_m.is_finite()) {
        return Err(Error::InvalidParameter(format!("link length must be non-negative, got {length_m}")));
    }
    Ok(length_m / (velocity_factor * SPEED_OF_LIGHT_M_S))
}

pub fn air_delay(distance_m: f64) -> f64 {
    distance_m / SPEED_OF_LIGHT_M_S
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathModel {
    pub fronthaul_delay_s: f64,
    pub wireless_delay_s: f64,
    /// Flat-fading coefficient `h_i`.
    pub complex_gain: Complex64,
    /// Amplitude `sqrt(p_i)` applied at the TRxP.
    pub tx_power_scale: f64,
}

impl PathModel {
    pub fn new(fronthaul_delay_s: f64, wireless_delay_s: f64, complex_gain: Complex64, tx_power_scale: f64) -> Self {
        Self { fronthaul_delay_s, wireless_delay_s, complex_gain, tx_power_scale }
    }

    /// Unit gain, no delay.
    pub fn identity() -> Self {
        Self::new(0.0, 0.0, Complex64::new(1.0, 0.0), 1.0)
    }

    pub fn total_delay_s(&self) -> f64 {
        self.fronthaul_delay_s + self.wireless_delay_s
    }

    /// `p_i |h_i|^2`
    pub fn received_power_gain(&self) -> f64 {
        self.tx_power_scale * self.tx_power_scale * self.complex_gain.norm_sqr()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_delay_s() >= 0.0 && self.total_delay_s().is_finite()) {
            return Err(Error::InvalidParameter(format!("path delay must be non-negative, got {}", self.total_delay_s())));
        }
        if !(self.complex_gain.re.is_finite() && self.complex_gain.im.is_finite() && self.tx_power_scale.is_finite()) {
            return Err(Error::InvalidParameter("path gain must be finite".into()));
        }
        Ok(())
    }
}

/// Scale by `sqrt(p) h` and delay by the path's total delay. The integer part
/// of the delay is a sample shift; the fractional part is a linear phase
/// applied across the spectrum of the whole (zero-padded) burst.
pub fn apply_path(signal: &BasebandSignal, path: &PathModel) -> BasebandSignal {
    let gain = path.complex_gain * path.tx_power_scale;
    delay_signal(&signal.scaled(gain), path.total_delay_s())
}

/// Delay a signal by `delay_s >= 0` on the common clock (its `t0_s` is kept).
pub fn delay_signal(signal: &BasebandSignal, delay_s: f64) -> BasebandSignal {
    let delay = (delay_s * signal.fs_hz).max(0.0);
    let whole = delay.floor();
    let mut frac = delay - whole;
    let mut whole = whole as usize;
    if frac > 1.0 - 1e-9 {
        whole += 1;
        frac = 0.0;
    }
    if frac < 1e-9 {
        let mut samples = vec![Complex64::new(0.0, 0.0); whole];
        samples.extend_from_slice(&signal.samples);
        return BasebandSignal::new(samples, signal.fs_hz, signal.t0_s);
    }

    const GUARD: usize = 64;
    const BLOCK: usize = 512;
    let needed = signal.len() + whole + 1 + GUARD;
    let m = needed.div_ceil(BLOCK) * BLOCK;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[whole..whole + signal.len()].copy_from_slice(&signal.samples);
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let signed = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
        if 2 * k == m {
            // Nyquist bin: keep the real part of the ramp
            *b *= (std::f64::consts::PI * frac).cos();
        } else {
            *b *= Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * signed * frac / m as f64);
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.truncate(signal.len() + whole + 1);
    buf.iter_mut().for_each(|b| *b *= scale);
    BasebandSignal::new(buf, signal.fs_hz, signal.t0_s)
}

/// Pointwise sum on a common time origin; signals are zero-padded to the
/// earliest start and latest end.
pub fn superimpose(signals: &[BasebandSignal]) -> Result<BasebandSignal> {
    let first = signals
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to superimpose".into()))?;
    let fs = first.fs_hz;
    for s in signals {
        if (s.fs_hz - fs).abs() > 1e-9 * fs {
            return Err(Error::SampleRateMismatch(fs, s.fs_hz));
        }
    }
    let origin = signals.iter().map(|s| s.t0_s).fold(f64::INFINITY, f64::min);
    let mut offsets = Vec::with_capacity(signals.len());
    for s in signals {
        let exact = (s.t0_s - origin) * fs;
        let rounded = exact.round();
        if (exact - rounded).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "signal start {} s is not on the sample grid of the earliest signal",
                s.t0_s
            )));
        }
        offsets.push(rounded as usize);
    }
    let len = signals.iter().zip(&offsets).map(|(s, &o)| s.len() + o).max().unwrap_or(0);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (s, &o) in signals.iter().zip(&offsets) {
        for (acc, &v) in out[o..o + s.len()].iter_mut().zip(&s.samples) {
            *acc += v;
        }
    }
    Ok(BasebandSignal::new(out, fs, origin))
}

/// Circular complex Gaussian noise, `CN(0, n0)` per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub n0: f64,
    pub seed: u64,
}

pub fn add_awgn(signal: &BasebandSignal, noise: &NoiseModel) -> BasebandSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    add_awgn_with(signal, noise.n0, &mut rng)
}

/// Noise is drawn at unit variance then scaled, so one RNG state produces
/// the same realisation shape at every `n0`.
pub fn add_awgn_with<R: Rng + ?Sized>(signal: &BasebandSignal, n0: f64, rng: &mut R) -> BasebandSignal {
    if n0 <= 0.0 {
        return signal.clone();
    }
    let sigma = (n0 / 2.0).sqrt();
    let samples = signal
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            s + Complex64::new(re, im) * sigma
        })
        .collect();
    BasebandSignal::new(samples, signal.fs_hz, signal.t0_s)
}
