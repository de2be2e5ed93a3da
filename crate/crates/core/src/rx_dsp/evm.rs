use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerology::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvmReport {
    pub evm_rms_pct: f64,
    /// `None` for subcarriers with no measured cell.
    pub per_subcarrier_evm_pct: Vec<Option<f64>>,
    pub snr_db_estimate: f64,
    pub measured_cells: usize,
    pub equalized_symbols: Vec<Complex64>,
}

/// `EVM^2 ~ 1/SNR`
pub fn snr_db_from_evm(evm_pct: f64) -> f64 {
    -20.0 * (evm_pct / 100.0).log10()
}

pub fn evm_pct_from_snr_db(snr_db: f64) -> f64 {
    100.0 * 10f64.powf(-snr_db / 20.0)
}

/// RMS EVM normalised by the ideal power of the measured cells.
pub fn measure_evm(equalized: &Grid, ideal: &Grid, cells: &[(usize, usize)]) -> Result<EvmReport> {
    if cells.is_empty() {
        return Err(Error::EmptyCells);
    }
    if !equalized.same_shape(ideal) {
        return Err(Error::Dimension("equalized and ideal grids differ in shape".into()));
    }
    let n_sc = ideal.n_subcarriers();
    let mut err_f = vec![0.0; n_sc];
    let mut ref_f = vec![0.0; n_sc];
    let mut seen = vec![false; n_sc];
    let mut symbols = Vec::with_capacity(cells.len());
    for &(t, f) in cells {
        if t >= ideal.n_symbols() || f >= n_sc {
            return Err(Error::OutOfRange { start: t * n_sc + f, end: t * n_sc + f + 1, len: ideal.cells().len() });
        }
        let z = equalized.get(t, f);
        let i = ideal.get(t, f);
        err_f[f] += (z - i).norm_sqr();
        ref_f[f] += i.norm_sqr();
        seen[f] = true;
        symbols.push(z);
    }
    let err: f64 = err_f.iter().sum();
    let reference: f64 = ref_f.iter().sum();
    if reference <= 0.0 {
        return Err(Error::InvalidParameter("ideal cells carry no power".into()));
    }
    let evm_rms_pct = 100.0 * (err / reference).sqrt();
    let per_subcarrier_evm_pct = (0..n_sc)
        .map(|f| (seen[f] && ref_f[f] > 0.0).then(|| 100.0 * (err_f[f] / ref_f[f]).sqrt()))
        .collect();
    Ok(EvmReport {
        evm_rms_pct,
        per_subcarrier_evm_pct,
        snr_db_estimate: snr_db_from_evm(evm_rms_pct),
        measured_cells: cells.len(),
        equalized_symbols: symbols,
    })
}
