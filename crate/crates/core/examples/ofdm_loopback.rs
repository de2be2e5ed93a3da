//! OFDM modulate, add white noise, demodulate and equalize; the measured
//! EVM tracks 1/sqrt(SNR).
//!
//! `cargo run --release --example ofdm_loopback [qam_order]`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dmimo_sim::channel::add_awgn_with;
use dmimo_sim::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
use dmimo_sim::rx_dsp::{compute_zf_coefficients, equalize, evm_pct_from_snr_db, measure_evm};
use dmimo_sim::waveform::{burst_offsets, ofdm_demodulate, ofdm_modulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let order: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(64);
    let num = OfdmNumerology::nr_default();
    let c = QamConstellation::new(order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bits: Vec<u8> = (0..PilotPattern::Comb4.data_capacity_bits(&num, &c)).map(|_| rng.random_range(0..2)).collect();
    let grid = ResourceGrid::build(&num, &bits, &c, PilotPattern::Comb4, 9)?;
    let tx = ofdm_modulate(&grid);
    println!("{order}-QAM burst: {} samples, mean power {:.4}", tx.len(), tx.power());

    println!("{:>7} {:>10} {:>10}", "SNR dB", "EVM %", "ideal %");
    for snr in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0] {
        let rx = add_awgn_with(&tx, 10f64.powf(-snr / 10.0), &mut rng);
        let z = ofdm_demodulate(&rx, &num, &burst_offsets(&num, 0))?;
        let coeffs = compute_zf_coefficients(&z, &grid.symbols, grid.kind_mask())?;
        let report = measure_evm(&equalize(&z, &coeffs)?, &grid.symbols, &grid.data_cells())?;
        println!("{snr:>7.1} {:>10.3} {:>10.3}", report.evm_rms_pct, evm_pct_from_snr_db(snr));
    }
    Ok(())
}
