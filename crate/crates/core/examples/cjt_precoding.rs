//! Precoder synthesis for the two-TRxP link: estimate both paths, measure
//! the delay difference, then compare the combined response of aligned CJT
//! against unaligned simultaneous transmission.

use num_complex::Complex64;

use dmimo_sim::channel::{apply_path, superimpose, PathModel};
use dmimo_sim::cjt_core::{apply_precoder, synthesize_precoder, PrecoderMode};
use dmimo_sim::estimation::{lse_estimate, smooth_estimate, ChannelEstimate};
use dmimo_sim::experiments::ScenarioConfig;
use dmimo_sim::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
use dmimo_sim::rx_dsp::time_sync;
use dmimo_sim::waveform::{burst_offsets, ofdm_demodulate, ofdm_modulate, BasebandSignal};

fn pad(mut s: BasebandSignal) -> BasebandSignal {
    s.samples.resize(s.len() + 256, Complex64::new(0.0, 0.0));
    s
}

fn estimate(num: &OfdmNumerology, grid: &ResourceGrid, path: &PathModel, id: usize) -> dmimo_sim::Result<(ChannelEstimate, f64)> {
    let tx = ofdm_modulate(grid);
    let rx = pad(apply_path(&tx, path));
    let sync = time_sync(&rx, &tx)?;
    let start = sync.symbol_start(num.cp_samples / 4);
    let mut est = lse_estimate(&ofdm_demodulate(&rx, num, &burst_offsets(num, start))?, &grid.symbols)?;
    est.trxp_id = id;
    est.burst_timestamp_s = rx.t0_s + start as f64 / rx.fs_hz;
    Ok((smooth_estimate(&est, 36.0 / 512.0)?, sync.time_s(&rx)))
}

/// Mean per-subcarrier gain magnitude and its spread across the band.
fn response(num: &OfdmNumerology, rx: &BasebandSignal, reference: &BasebandSignal, known: &ResourceGrid) -> dmimo_sim::Result<(f64, f64)> {
    let start = time_sync(rx, reference)?.symbol_start(num.cp_samples / 4);
    let z = ofdm_demodulate(rx, num, &burst_offsets(num, start))?;
    let h: Vec<f64> = (0..num.n_subcarriers).map(|k| (z.get(0, k) / known.symbols.get(0, k)).norm()).collect();
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    let spread = h.iter().map(|x| (x - mean).powi(2)).sum::<f64>().sqrt() / (h.len() as f64).sqrt();
    Ok((mean, spread))
}

fn main() -> dmimo_sim::Result<()> {
    let config = ScenarioConfig::reproduction();
    let num = config.validate()?;
    let paths = config.paths([0.0, 0.0])?;
    let qpsk = QamConstellation::qpsk();
    let est_grid = ResourceGrid::build(&num, &[], &qpsk, PilotPattern::AllReference, 1)?;
    let (e1, t1) = estimate(&num, &est_grid, &paths[0], 1)?;
    let (e2, t2) = estimate(&num, &est_grid, &paths[1], 2)?;
    println!("configured delay difference {:.4} us, measured {:.4} us", (paths[0].total_delay_s() - paths[1].total_delay_s()) * 1e6, (t1 - t2) * 1e6);

    let data = ResourceGrid::build(&num, &[], &qpsk, PilotPattern::AllReference, 2)?;
    let x = ofdm_modulate(&data);
    for mode in [PrecoderMode::Ratio, PrecoderMode::CoPhase] {
        let pre = synthesize_precoder(&e1, &e2, t1 - t2, &num, mode)?;
        let mut xp = ofdm_modulate(&apply_precoder(&data, &pre)?);
        xp.t0_s = pre.time_offset_s;
        let mean_w = pre.weights.iter().map(|w| w.norm()).sum::<f64>() / pre.weights.len() as f64;
        let rx = pad(superimpose(&[apply_path(&x, &paths[0]), apply_path(&xp, &paths[1])])?);
        let (mean, spread) = response(&num, &rx, &x, &data)?;
        println!(
            "CJT {mode:?}: TRxP 2 delayed {} samples, mean |w| {mean_w:.3}, |H| {mean:.3} +- {spread:.3}",
            pre.time_offset_samples
        );
    }
    let rx = pad(superimpose(&[apply_path(&x, &paths[0]), apply_path(&x, &paths[1])])?);
    let (mean, spread) = response(&num, &rx, &x, &data)?;
    println!("unaligned simultaneous: |H| {mean:.3} +- {spread:.3}");
    let rx = pad(apply_path(&x, &paths[0]));
    let (mean, spread) = response(&num, &rx, &x, &data)?;
    println!("TRxP 1 alone: |H| {mean:.3} +- {spread:.3}");
    Ok(())
}
