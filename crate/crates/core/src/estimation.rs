//! Least-squares channel estimation on all-reference bursts, delay-domain
//! smoothing of the estimates and fronthaul delay-difference measurement.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerology::{signed_bin, Grid};
use crate::rx_dsp::time_sync;
use crate::waveform::BasebandSignal;

/// Per-subcarrier estimate of one TRxP's end-to-end response: air
/// interface, analog front ends and fronthaul.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub raw: Vec<Complex64>,
    pub smoothed: Vec<Complex64>,
    pub trxp_id: usize,
    /// Simulation-clock time of the first FFT window of the burst.
    pub burst_timestamp_s: f64,
    pub includes_fronthaul: bool,
}

impl ChannelEstimate {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// CSV with one row per subcarrier.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "subcarrier",
            "real",
            "imag",
            "magnitude",
            "phase",
            "smoothed_real",
            "smoothed_imag",
            "smoothed_magnitude",
            "smoothed_phase",
        ])?;
        for (k, (r, s)) in self.raw.iter().zip(&self.smoothed).enumerate() {
            w.write_record(&[
                k.to_string(),
                r.re.to_string(),
                r.im.to_string(),
                r.norm().to_string(),
                r.arg().to_string(),
                s.re.to_string(),
                s.im.to_string(),
                s.norm().to_string(),
                s.arg().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `h(f) = sum_t Y(t,f) conj(X(t,f)) / sum_t |X(t,f)|^2`
pub fn lse_estimate(received: &Grid, known: &Grid) -> Result<ChannelEstimate> {
    if !received.same_shape(known) {
        return Err(Error::Dimension("received and known grids differ in shape".into()));
    }
    let n_sc = known.n_subcarriers();
    let mut raw = Vec::with_capacity(n_sc);
    for f in 0..n_sc {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for t in 0..known.n_symbols() {
            let x = known.get(t, f);
            num += received.get(t, f) * x.conj();
            den += x.norm_sqr();
        }
        if den == 0.0 {
            return Err(Error::Singular { what: "known symbol column", index: f });
        }
        raw.push(num / den);
    }
    Ok(ChannelEstimate { smoothed: raw.clone(), raw, trxp_id: 0, burst_timestamp_s: 0.0, includes_fronthaul: true })
}

/// Lowpass the estimate in the delay domain.
///
/// The common linear phase is removed first and restored afterwards. A DC
/// point (mean of its two neighbours) fills the unused centre bin, the
/// sequence is mirrored to twice its length and only delay taps within
/// `cutoff_fraction` of the FFT span are kept.
pub fn smooth_estimate(estimate: &ChannelEstimate, cutoff_fraction: f64) -> Result<ChannelEstimate> {
    if !(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("cutoff fraction must be in (0, 1], got {cutoff_fraction}")));
    }
    let mut out = estimate.clone();
    let n = estimate.raw.len();
    if cutoff_fraction == 1.0 || n < 2 {
        out.smoothed = estimate.raw.clone();
        return Ok(out);
    }
    let bins: Vec<f64> = (0..n).map(|k| signed_bin(k, n) as f64).collect();
    let slope = linear_phase_slope(&estimate.raw, &bins);
    let flat: Vec<Complex64> =
        estimate.raw.iter().zip(&bins).map(|(h, b)| h * Complex64::from_polar(1.0, -slope * b)).collect();

    // uniform lattice including the centre bin
    let centre = n / 2;
    let mut lattice = Vec::with_capacity(n + 1);
    lattice.extend_from_slice(&flat[..centre]);
    lattice.push(if centre > 0 { 0.5 * (flat[centre - 1] + flat[centre]) } else { flat[0] });
    lattice.extend_from_slice(&flat[centre..]);

    let l = lattice.len();
    let m = 2 * l;
    let mut buf: Vec<Complex64> = lattice.iter().copied().chain(lattice.iter().rev().copied()).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let keep = (cutoff_fraction * m as f64).floor() as usize;
    for (k, b) in buf.iter_mut().enumerate() {
        if k.min(m - k) > keep {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let smoothed_lattice: Vec<Complex64> = buf[..l].iter().map(|v| v * scale).collect();

    out.smoothed = smoothed_lattice[..centre]
        .iter()
        .chain(&smoothed_lattice[centre + 1..])
        .zip(&bins)
        .map(|(v, b)| v * Complex64::from_polar(1.0, slope * b))
        .collect();
    Ok(out)
}

fn linear_phase_slope(h: &[Complex64], bins: &[f64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..h.len().saturating_sub(1) {
        let gap = bins[j + 1] - bins[j];
        if gap == 1.0 {
            acc += h[j + 1] * h[j].conj();
        }
    }
    if acc.norm() == 0.0 { 0.0 } else { acc.arg() }
}

/// Arrival-time difference of the reference burst in two separate captures,
/// positive when the first path is longer. Both captures share the
/// simulation clock.
pub fn measure_delay_difference(
    capture_1: &BasebandSignal,
    capture_2: &BasebandSignal,
    reference: &BasebandSignal,
) -> Result<f64> {
    let s1 = time_sync(capture_1, reference)?;
    let s2 = time_sync(capture_2, reference)?;
    Ok(s1.time_s(capture_1) - s2.time_s(capture_2))
}
