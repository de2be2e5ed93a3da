use num_complex::Complex64;
use rustfft::FftPlanner;

use super::BasebandSignal;
use crate::error::{Error, Result};
use crate::numerology::{Grid, OfdmNumerology, ResourceGrid};

/// IFFT + cyclic prefix per symbol, unitary scaling so each symbol's time
/// energy equals its grid energy.
pub fn ofdm_modulate(grid: &ResourceGrid) -> BasebandSignal {
    modulate_symbols(&grid.symbols, &grid.numerology)
}

pub fn modulate_symbols(symbols: &Grid, numerology: &OfdmNumerology) -> BasebandSignal {
    let n = numerology.fft_size;
    let cp = numerology.cp_samples;
    let scale = 1.0 / (n as f64).sqrt();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut out = Vec::with_capacity(symbols.n_symbols() * (n + cp));
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..symbols.n_symbols() {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (k, &v) in symbols.symbol(t).iter().enumerate() {
            buf[numerology.fft_index(k)] = v;
        }
        ifft.process(&mut buf);
        out.extend(buf[n - cp..].iter().map(|&v| v * scale));
        out.extend(buf.iter().map(|&v| v * scale));
    }
    BasebandSignal::new(out, numerology.fs_hz, 0.0)
}

/// CP start of every symbol of a burst beginning at `start`.
pub fn burst_offsets(numerology: &OfdmNumerology, start: usize) -> Vec<usize> {
    (0..numerology.symbols_per_burst).map(|t| start + t * numerology.symbol_len()).collect()
}

/// CP removal and FFT. `symbol_start_offsets` holds the CP start of each
/// symbol; the FFT window begins `cp_samples` later.
pub fn ofdm_demodulate(
    signal: &BasebandSignal,
    numerology: &OfdmNumerology,
    symbol_start_offsets: &[usize],
) -> Result<Grid> {
    let n = numerology.fft_size;
    let cp = numerology.cp_samples;
    let scale = 1.0 / (n as f64).sqrt();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut grid = Grid::zeros(symbol_start_offsets.len(), numerology.n_subcarriers);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (t, &offset) in symbol_start_offsets.iter().enumerate() {
        let start = offset + cp;
        let end = start + n;
        if end > signal.len() {
            return Err(Error::OutOfRange { start, end, len: signal.len() });
        }
        buf.copy_from_slice(&signal.samples[start..end]);
        fft.process(&mut buf);
        let row = grid.symbol_mut(t);
        for (k, cell) in row.iter_mut().enumerate() {
            *cell = buf[numerology.fft_index(k)] * scale;
        }
    }
    Ok(grid)
}
