//! Default NR lattice, Gray-mapped QAM alphabets and the resource grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dmimo_sim::numerology::{demap_qam, map_qam, OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};

fn main() -> dmimo_sim::Result<()> {
    let num = OfdmNumerology::nr_default();
    println!(
        "SCS {} kHz, {} RB, {} subcarriers, FFT {}, fs {:.2} MHz",
        num.scs_hz / 1e3,
        num.n_rb,
        num.n_subcarriers,
        num.fft_size,
        num.fs_hz / 1e6
    );
    println!("CP {} samples = {:.5} us, burst {} samples", num.cp_samples, num.cp_duration_s * 1e6, num.burst_len());
    println!("edge bins {} .. {}", num.signed_bin(0), num.signed_bin(num.n_subcarriers - 1));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for order in [4, 16, 64, 256] {
        let c = QamConstellation::new(order)?;
        let bits: Vec<u8> = (0..c.bits_per_symbol * 4096).map(|_| rng.random_range(0..2)).collect();
        let symbols = map_qam(&bits, &c)?;
        let power = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64;
        let ok = demap_qam(&symbols, &c) == bits;
        println!("{order:>3}-QAM: d_min {:.4}, mean power {power:.3}, round trip {ok}", c.min_distance());
    }

    let c = QamConstellation::new(256)?;
    for pattern in [PilotPattern::Comb4, PilotPattern::AllReference] {
        let bits = vec![0u8; pattern.data_capacity_bits(&num, &c)];
        let grid = ResourceGrid::build(&num, &bits, &c, pattern, 1)?;
        println!(
            "{pattern:?}: {} reference cells, {} data cells, {} payload bits",
            grid.reference_cells().len(),
            grid.data_cells().len(),
            bits.len()
        );
    }
    Ok(())
}
