//! LSE channel estimate of a delayed, rotated path from a noisy
//! all-reference burst, before and after delay-domain smoothing. Writes the
//! estimate as CSV when given a path.
//!
//! `cargo run --release --example channel_estimation [out.csv]`

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dmimo_sim::channel::{add_awgn_with, apply_path, PathModel};
use dmimo_sim::estimation::{lse_estimate, smooth_estimate};
use dmimo_sim::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
use dmimo_sim::rx_dsp::time_sync;
use dmimo_sim::waveform::{burst_offsets, ofdm_demodulate, ofdm_modulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let num = OfdmNumerology::nr_default();
    let grid = ResourceGrid::build(&num, &[], &QamConstellation::qpsk(), PilotPattern::AllReference, 5)?;
    let tx = ofdm_modulate(&grid);
    let path = PathModel::new(40.4 / num.fs_hz, 0.0, Complex64::from_polar(0.9, -0.6), 1.0);
    let mut rx = apply_path(&tx, &path);
    rx.samples.resize(rx.len() + 256, Complex64::new(0.0, 0.0));
    let n0 = 0.81 * 10f64.powf(-15.0 / 10.0);
    let rx = add_awgn_with(&rx, n0, &mut ChaCha8Rng::seed_from_u64(3));

    let sync = time_sync(&rx, &tx)?;
    let start = sync.symbol_start(num.cp_samples / 4);
    println!("sync offset {:.3} samples, PSR {:.0}", sync.offset_samples, sync.psr);
    let z = ofdm_demodulate(&rx, &num, &burst_offsets(&num, start))?;
    let raw = lse_estimate(&z, &grid.symbols)?;

    // Ideal response in the same FFT window
    let lag = path.total_delay_s() * num.fs_hz - start as f64;
    let ideal: Vec<Complex64> = (0..num.n_subcarriers)
        .map(|k| {
            let ramp = -2.0 * std::f64::consts::PI * num.signed_bin(k) as f64 * lag / num.fft_size as f64;
            path.complex_gain * Complex64::from_polar(1.0, ramp)
        })
        .collect();
    let mse = |h: &[Complex64]| h.iter().zip(&ideal).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / h.len() as f64;
    println!("per-subcarrier noise n0/T = {:.2e}", n0 / num.symbols_per_burst as f64);
    println!("raw LSE mse {:.2e}", mse(&raw.raw));
    for cutoff in [1.0, 0.25, 72.0 / 512.0, 36.0 / 512.0, 18.0 / 512.0] {
        let s = smooth_estimate(&raw, cutoff)?;
        println!("cutoff {cutoff:.4}: smoothed mse {:.2e}", mse(&s.smoothed));
    }

    if let Some(out) = std::env::args().nth(1) {
        smooth_estimate(&raw, 36.0 / 512.0)?.write_csv(std::fs::File::create(&out)?)?;
        println!("wrote {out}");
    }
    Ok(())
}
