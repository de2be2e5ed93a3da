use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerology::OfdmNumerology;
use crate::waveform::filter::{decimated_sample, resampling_taps};
use crate::waveform::{BasebandSignal, PassbandSignal};

/// Second-order carrier recovery loop.
///
/// The discriminator works on the recovered baseband: the cyclic prefix of
/// each OFDM symbol repeats the last `cp` samples of the symbol `N` samples
/// later, so `arg(sum z(m) conj(z(m + N)))` over the prefix measures the
/// frequency error. The loop runs once per OFDM symbol period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostasLoopConfig {
    pub loop_bandwidth_hz: f64,
    pub damping: f64,
    pub order: u8,
    pub max_cfo_hz: f64,
}

impl Default for CostasLoopConfig {
    fn default() -> Self {
        Self { loop_bandwidth_hz: 2_000.0, damping: 0.707, order: 2, max_cfo_hz: 5_000.0 }
    }
}

impl CostasLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.loop_bandwidth_hz > 0.0 && self.loop_bandwidth_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "loop bandwidth must be positive, got {}",
                self.loop_bandwidth_hz
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 2.0) {
            return Err(Error::InvalidParameter(format!("damping must be in (0, 2], got {}", self.damping)));
        }
        if self.order != 2 {
            return Err(Error::InvalidParameter(format!("only a second-order loop is provided, got {}", self.order)));
        }
        if !(self.max_cfo_hz > 0.0) {
            return Err(Error::InvalidParameter("max_cfo_hz must be positive".into()));
        }
        Ok(())
    }

    /// Minimum capture duration for the loop to settle.
    pub fn lock_time_s(&self) -> f64 {
        20.0 / self.loop_bandwidth_hz
    }

    /// Proportional and integral gains for update period `period_s`.
    fn gains(&self, period_s: f64) -> (f64, f64) {
        let theta = self.loop_bandwidth_hz * period_s / (self.damping + 0.25 / self.damping);
        let denom = 1.0 + 2.0 * self.damping * theta + theta * theta;
        (4.0 * self.damping * theta / denom, 4.0 * theta * theta / denom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierRecovery {
    pub baseband: BasebandSignal,
    pub cfo_estimate_hz: f64,
    /// Mean discriminator output over the last quarter of the capture.
    pub residual_error_hz: f64,
    /// NCO frequency offset after each loop update.
    pub frequency_track_hz: Vec<f64>,
}

/// Mix the real IF capture to complex baseband with a tracking NCO and
/// decimate to the OFDM sample rate.
///
/// The recovered signal carries an arbitrary constant phase; the equalizer
/// removes it.
pub fn costas_recover(
    passband: &PassbandSignal,
    config: &CostasLoopConfig,
    if_hz_nominal: f64,
    numerology: &OfdmNumerology,
) -> Result<CarrierRecovery> {
    config.validate()?;
    let ratio = passband.fs_hz / numerology.fs_hz;
    let factor = ratio.round() as usize;
    if factor == 0 || (ratio - factor as f64).abs() > 1e-9 {
        return Err(Error::SampleRateMismatch(passband.fs_hz, numerology.fs_hz));
    }
    if !(if_hz_nominal > 0.0 && if_hz_nominal < passband.fs_hz / 2.0) {
        return Err(Error::Aliasing { if_hz: if_hz_nominal, nyquist_hz: passband.fs_hz / 2.0 });
    }

    let n = numerology.fft_size;
    let cp = numerology.cp_samples;
    let block = numerology.symbol_len();
    let period_s = block as f64 / numerology.fs_hz;
    let (kp, ki) = config.gains(period_s);

    let taps = resampling_taps(factor);
    let delay = (taps.len() - 1) / 2;
    let out_len = passband.samples.len() / factor;
    let mut mixed: Vec<Complex64> = Vec::with_capacity(passband.samples.len());
    let mut baseband: Vec<Complex64> = Vec::with_capacity(out_len);

    let mut phase = 0.0f64;
    let mut freq = 0.0f64;
    let mut integ = 0.0f64;
    let mut errors: Vec<f64> = Vec::new();
    let mut track = Vec::new();

    let n_blocks = out_len.div_ceil(block);
    for b in 0..n_blocks {
        let end = ((b + 1) * block).min(out_len);
        let need = (end * factor + delay).min(passband.samples.len());
        let step = 2.0 * PI * (if_hz_nominal + freq) / passband.fs_hz;
        while mixed.len() < need {
            let x = passband.samples[mixed.len()];
            mixed.push(Complex64::from_polar(std::f64::consts::SQRT_2 * x, -phase));
            phase = (phase + step) % (2.0 * PI);
        }
        for k in baseband.len()..end {
            baseband.push(decimated_sample(&mixed, k, factor, &taps, delay));
        }

        if let Some(err) = cp_discriminator(&baseband, end.saturating_sub(2 * block), n, cp, numerology.fs_hz) {
            errors.push(err);
            integ = (integ + ki * err).clamp(-config.max_cfo_hz, config.max_cfo_hz);
            freq = (freq + kp * err + integ).clamp(-config.max_cfo_hz, config.max_cfo_hz);
        }
        track.push(freq);
    }

    let min_updates = 8;
    let tail = (errors.len() / 4).max(1);
    let residual = if errors.len() >= min_updates {
        errors[errors.len() - tail..].iter().sum::<f64>() / tail as f64
    } else {
        f64::NAN
    };
    let saturated = freq.abs() >= config.max_cfo_hz * (1.0 - 1e-9);
    if !(residual.abs() <= 0.01 * numerology.scs_hz) || saturated {
        return Err(Error::NoLock { residual_hz: residual });
    }
    let track_tail = (track.len() / 4).max(1);
    let cfo_estimate_hz = track[track.len() - track_tail..].iter().sum::<f64>() / track_tail as f64;

    Ok(CarrierRecovery {
        baseband: BasebandSignal::new(baseband, numerology.fs_hz, passband.t0_s),
        cfo_estimate_hz,
        residual_error_hz: residual,
        frequency_track_hz: track,
    })
}

/// Frequency error from the most coherent prefix-to-tail correlation
/// (largest `|P| / E`, among windows carrying at least a quarter of the
/// block's peak energy) starting in `[first, first + block)`. Returns `None`
/// when no window shows the repetition.
fn cp_discriminator(z: &[Complex64], first: usize, n: usize, cp: usize, fs_hz: f64) -> Option<f64> {
    let span = n + cp;
    if z.len() < first + span {
        return None;
    }
    let last = (z.len() - span).min(first + span - 1);
    let term = |m: usize| z[m] * z[m + n].conj();
    let energy = |m: usize| 0.5 * (z[m].norm_sqr() + z[m + n].norm_sqr());
    let mut p: Complex64 = (first..first + cp).map(term).sum();
    let mut e: f64 = (first..first + cp).map(energy).sum();
    let mut windows = Vec::with_capacity(last - first + 1);
    windows.push((p, e));
    for m in first..last {
        p += term(m + cp) - term(m);
        e += energy(m + cp) - energy(m);
        windows.push((p, e));
    }
    let e_max = windows.iter().map(|w| w.1).fold(0.0, f64::max);
    if e_max <= 1e-30 {
        return None;
    }
    let (p, e) = windows
        .into_iter()
        .filter(|w| w.1 >= 0.25 * e_max)
        .max_by(|a, b| (a.0.norm() * b.1).total_cmp(&(b.0.norm() * a.1)))?;
    if p.norm() < 0.5 * e {
        return None;
    }
    Some(-p.arg() * fs_hz / (2.0 * PI * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerology::{PilotPattern, QamConstellation, ResourceGrid};
    use crate::waveform::{downconvert_ideal, ofdm_modulate, upconvert, IfParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn burst_train(num: &OfdmNumerology, bursts: usize, seed: u64) -> BasebandSignal {
        let c = QamConstellation::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for b in 0..bursts {
            let bits: Vec<u8> = (0..PilotPattern::Comb4.data_capacity_bits(num, &c))
                .map(|_| rng.random_range(0..2u8))
                .collect();
            let grid = ResourceGrid::build(num, &bits, &c, PilotPattern::Comb4, seed + b as u64).unwrap();
            samples.extend(ofdm_modulate(&grid).samples);
        }
        BasebandSignal::new(samples, num.fs_hz, 0.0)
    }

    fn capture(cfo_hz: f64, phase0: f64, config: &CostasLoopConfig) -> (BasebandSignal, IfParams, PassbandSignal) {
        let num = OfdmNumerology::nr_default();
        let bursts = (config.lock_time_s() / (num.burst_len() as f64 / num.fs_hz)).ceil() as usize + 2;
        let x = burst_train(&num, bursts, 3);
        let params = IfParams { cfo_hz, phase0_rad: phase0, ..IfParams::quarter_rate(num.fs_hz) };
        let p = upconvert(&x, &params).unwrap();
        (x, params, p)
    }

    #[test]
    fn zero_offset_matches_genie_up_to_phase() {
        let num = OfdmNumerology::nr_default();
        let config = CostasLoopConfig::default();
        let (_, params, p) = capture(0.0, 0.0, &config);
        let rec = costas_recover(&p, &config, params.if_hz, &num).unwrap();
        let genie = downconvert_ideal(&p, &params).unwrap();
        let skip = (config.lock_time_s() * num.fs_hz) as usize / 2;
        let a = &rec.baseband.samples[skip..];
        let g = &genie.samples[skip..rec.baseband.len()];
        // best single rotation
        let rot: Complex64 = a.iter().zip(g).map(|(x, y)| y * x.conj()).sum();
        let rot = rot / rot.norm();
        let err: f64 = a.iter().zip(g).map(|(x, y)| (x * rot - y).norm_sqr()).sum();
        let energy: f64 = g.iter().map(|y| y.norm_sqr()).sum();
        let db = 10.0 * (err / energy).log10();
        assert!(db < -30.0, "{db} dB");
    }

    #[test]
    fn tracks_injected_offset() {
        let num = OfdmNumerology::nr_default();
        let config = CostasLoopConfig::default();
        for cfo in [500.0, -3_000.0] {
            let (_, params, p) = capture(cfo, 1.1, &config);
            let rec = costas_recover(&p, &config, params.if_hz, &num).unwrap();
            assert!((rec.cfo_estimate_hz - cfo).abs() < 0.02 * num.scs_hz, "{} vs {cfo}", rec.cfo_estimate_hz);
            assert!(rec.residual_error_hz.abs() < 0.01 * num.scs_hz);
        }
    }

    #[test]
    fn offset_beyond_range_does_not_lock() {
        let num = OfdmNumerology::nr_default();
        let config = CostasLoopConfig::default();
        let (_, params, p) = capture(8_000.0, 0.0, &config);
        assert!(matches!(costas_recover(&p, &config, params.if_hz, &num), Err(Error::NoLock { .. })));
    }

    #[test]
    fn silence_does_not_lock() {
        let num = OfdmNumerology::nr_default();
        let p = PassbandSignal { samples: vec![0.0; 4 * 20 * num.symbol_len()], fs_hz: 4.0 * num.fs_hz, t0_s: 0.0 };
        let r = costas_recover(&p, &CostasLoopConfig::default(), num.fs_hz, &num);
        assert!(matches!(r, Err(Error::NoLock { .. })));
    }

    #[test]
    fn config_validation() {
        let ok = CostasLoopConfig::default();
        assert!(ok.validate().is_ok());
        assert!(CostasLoopConfig { damping: 0.0, ..ok }.validate().is_err());
        assert!(CostasLoopConfig { damping: 2.5, ..ok }.validate().is_err());
        assert!(CostasLoopConfig { order: 1, ..ok }.validate().is_err());
        assert!(CostasLoopConfig { loop_bandwidth_hz: 0.0, ..ok }.validate().is_err());
    }
}
