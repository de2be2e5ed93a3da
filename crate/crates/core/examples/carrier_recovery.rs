//! Digital IF link with a receiver carrier offset: upconvert, add real
//! noise, recover the carrier with the tracking loop and equalize the last
//! burst.
//!
//! `cargo run --release --example carrier_recovery [cfo_hz]`

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use dmimo_sim::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
use dmimo_sim::rx_dsp::{
    compute_zf_coefficients_with, costas_recover, equalize, measure_evm, CostasLoopConfig, EqualizerConfig,
};
use dmimo_sim::waveform::{burst_offsets, ofdm_demodulate, ofdm_modulate, upconvert, BasebandSignal, IfParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfo: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1_200.0);
    let num = OfdmNumerology::nr_default();
    let c = QamConstellation::new(64)?;
    let loop_config = CostasLoopConfig::default();
    let bursts = (loop_config.lock_time_s() * num.fs_hz / num.burst_len() as f64).ceil() as usize + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut grids = Vec::new();
    let mut samples = Vec::new();
    for b in 0..bursts {
        let bits: Vec<u8> =
            (0..PilotPattern::Comb4.data_capacity_bits(&num, &c)).map(|_| rng.random_range(0..2)).collect();
        let grid = ResourceGrid::build(&num, &bits, &c, PilotPattern::Comb4, 100 + b as u64)?;
        samples.extend(ofdm_modulate(&grid).samples);
        grids.push(grid);
    }
    samples.resize(samples.len() + 64, Complex64::new(0.0, 0.0));
    let x = BasebandSignal::new(samples, num.fs_hz, 0.0);

    let params = IfParams { cfo_hz: cfo, phase0_rad: 0.8, ..IfParams::quarter_rate(num.fs_hz) };
    let mut pass = upconvert(&x, &params)?;
    let sigma = (2.0 * 10f64.powf(-30.0 / 10.0)).sqrt();
    for s in pass.samples.iter_mut() {
        *s += sigma * rng.sample::<f64, _>(StandardNormal);
    }
    println!(
        "{} bursts ({:.1} ms) at IF {:.2} MHz, oversample {}, injected CFO {cfo} Hz",
        bursts,
        x.len() as f64 / num.fs_hz * 1e3,
        params.if_hz / 1e6,
        params.oversample
    );

    let rec = costas_recover(&pass, &loop_config, params.if_hz, &num)?;
    println!("loop estimate {:.1} Hz, residual {:.2} Hz", rec.cfo_estimate_hz, rec.residual_error_hz);
    let track = &rec.frequency_track_hz;
    for i in (0..track.len()).step_by((track.len() / 8).max(1)) {
        println!("  update {i:>4}: {:>9.1} Hz", track[i]);
    }

    let last = grids.last().expect("at least one burst");
    let start = (bursts - 1) * num.burst_len();
    let z = ofdm_demodulate(&rec.baseband, &num, &burst_offsets(&num, start))?;
    let coeffs = compute_zf_coefficients_with(&z, &last.symbols, last.kind_mask(), &EqualizerConfig::per_symbol())?;
    let report = measure_evm(&equalize(&z, &coeffs)?, &last.symbols, &last.data_cells())?;
    println!("last burst EVM {:.3}% ({:.2} dB SNR)", report.evm_rms_pct, report.snr_db_estimate);
    Ok(())
}
