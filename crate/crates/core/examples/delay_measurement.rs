//! Arrival-time difference of two fronthaul paths from separate reference
//! bursts, against the configured cable lengths.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dmimo_sim::channel::{add_awgn_with, air_delay, apply_path, fronthaul_delay, PathModel};
use dmimo_sim::estimation::measure_delay_difference;
use dmimo_sim::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
use dmimo_sim::waveform::ofdm_modulate;

fn main() -> dmimo_sim::Result<()> {
    let num = OfdmNumerology::nr_default();
    let reference = ofdm_modulate(&ResourceGrid::build(&num, &[], &QamConstellation::qpsk(), PilotPattern::AllReference, 2)?);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ts = 1.0 / num.fs_hz;
    let short = PathModel::new(fronthaul_delay(1.2, 0.7)?, air_delay(1.3), Complex64::from_polar(1.0, 1.9), 1.0);

    println!("{:>9} {:>12} {:>12} {:>9} {:>9}", "fiber m", "true us", "measured us", "err smp", "CP units");
    for fiber_m in [0.0, 100.0, 200.0, 400.0, 800.0, 1600.0] {
        let long = PathModel::new(fronthaul_delay(fiber_m, 0.7)?, air_delay(1.0), Complex64::new(1.0, 0.0), 1.0);
        let truth = long.total_delay_s() - short.total_delay_s();
        let capture = |p: &PathModel, rng: &mut ChaCha8Rng| {
            let mut s = apply_path(&reference, p);
            s.samples.resize(s.len() + 256, Complex64::new(0.0, 0.0));
            add_awgn_with(&s, 0.01, rng)
        };
        let c1 = capture(&long, &mut rng);
        let c2 = capture(&short, &mut rng);
        let d = measure_delay_difference(&c1, &c2, &reference)?;
        println!(
            "{fiber_m:>9.0} {:>12.4} {:>12.4} {:>9.3} {:>9.2}",
            truth * 1e6,
            d * 1e6,
            (d - truth) / ts,
            truth / num.cp_duration_s
        );
    }
    Ok(())
}
