//! CJT gain as the estimation bursts get noisier relative to the data.

use dmimo_sim::experiments::{run_scenario, ScenarioConfig};

fn main() -> dmimo_sim::Result<()> {
    println!("{:>8} {:>9} {:>9} {:>9}", "scale", "CJT %", "gain1 dB", "gain2 dB");
    for scale in [0.0, 0.1, 1.0, 3.0, 10.0, 30.0, 100.0] {
        let config = ScenarioConfig { estimation_n0_scale: scale, trials: 16, ..ScenarioConfig::reproduction() };
        let r = run_scenario(&config)?;
        let g = r.gain_report.expect("CJT mode reports gains");
        println!("{scale:>8.1} {:>9.3} {:>9.2} {:>9.2}", g.evm_cjt_pct, g.gain_vs_1_db, g.gain_vs_2_db);
    }
    Ok(())
}
