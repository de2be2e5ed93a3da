use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerology::{signed_bin, CellKind, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualizerConfig {
    /// Longest frequency-direction averaging window, in reference cells.
    pub max_window: usize,
    /// Symbols sharing one set of coefficients; 0 means the whole grid.
    pub time_span: usize,
    /// Remove the common linear phase across frequency before averaging and
    /// restore it afterwards, so a timing offset inside the CP is not
    /// flattened by the window.
    pub detrend: bool,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self { max_window: 19, time_span: 0, detrend: true }
    }
}

impl EqualizerConfig {
    pub fn per_symbol() -> Self {
        Self { time_span: 1, ..Self::default() }
    }
}

/// Zero-forcing coefficients `alpha e^{j phi}` on the grid lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerCoefficients {
    /// `Z/I` at reference cells, zero elsewhere.
    pub raw: Grid,
    /// Window-averaged values at reference cells, zero elsewhere.
    pub averaged: Grid,
    /// Coefficients for every cell.
    pub interpolated: Grid,
    /// Full window length used away from the band edges.
    pub window_len: usize,
    /// Removed phase slope per span, radians per FFT bin.
    pub phase_slope_rad_per_bin: Vec<f64>,
}

pub fn compute_zf_coefficients(received: &Grid, ideal: &Grid, kind_mask: &[CellKind]) -> Result<EqualizerCoefficients> {
    compute_zf_coefficients_with(received, ideal, kind_mask, &EqualizerConfig::default())
}

pub fn compute_zf_coefficients_with(
    received: &Grid,
    ideal: &Grid,
    kind_mask: &[CellKind],
    config: &EqualizerConfig,
) -> Result<EqualizerCoefficients> {
    if !received.same_shape(ideal) || kind_mask.len() != ideal.cells().len() {
        return Err(Error::Dimension("received grid, ideal grid and mask must have the same shape".into()));
    }
    if config.max_window == 0 {
        return Err(Error::InvalidParameter("averaging window must be at least 1".into()));
    }
    let n_sym = ideal.n_symbols();
    let n_sc = ideal.n_subcarriers();
    let is_ref = |t: usize, f: usize| kind_mask[t * n_sc + f] == CellKind::Reference;

    let mut raw = Grid::zeros(n_sym, n_sc);
    for t in 0..n_sym {
        for f in 0..n_sc {
            if is_ref(t, f) {
                let i = ideal.get(t, f);
                if i.norm_sqr() == 0.0 {
                    return Err(Error::Singular { what: "reference symbol", index: t * n_sc + f });
                }
                raw.set(t, f, received.get(t, f) / i);
            }
        }
    }

    let span = if config.time_span == 0 { n_sym.max(1) } else { config.time_span };
    let half = (config.max_window - 1) / 2;
    let mut averaged = Grid::zeros(n_sym, n_sc);
    let mut interpolated = Grid::zeros(n_sym, n_sc);
    let mut slopes = Vec::new();
    let mut window_len = 0;
    let mut spans: Vec<(usize, usize, Option<Vec<Complex64>>)> = Vec::new();

    for s0 in (0..n_sym).step_by(span) {
        let s1 = (s0 + span).min(n_sym);
        // time average per reference subcarrier
        let mut acc: BTreeMap<usize, (Complex64, usize)> = BTreeMap::new();
        for t in s0..s1 {
            for f in 0..n_sc {
                if is_ref(t, f) {
                    let e = acc.entry(f).or_insert((Complex64::new(0.0, 0.0), 0));
                    e.0 += raw.get(t, f);
                    e.1 += 1;
                }
            }
        }
        if acc.is_empty() {
            slopes.push(0.0);
            spans.push((s0, s1, None));
            continue;
        }
        let pilots: Vec<usize> = acc.keys().copied().collect();
        let bins: Vec<f64> = pilots.iter().map(|&f| signed_bin(f, n_sc) as f64).collect();
        let values: Vec<Complex64> = acc.values().map(|(sum, n)| sum / *n as f64).collect();

        let slope = if config.detrend { phase_slope(&bins, &values) } else { 0.0 };
        slopes.push(slope);
        let flat: Vec<Complex64> =
            values.iter().zip(&bins).map(|(v, b)| v * Complex64::from_polar(1.0, -slope * b)).collect();

        let p_len = flat.len();
        window_len = window_len.max((2 * half + 1).min(p_len));
        let smoothed: Vec<Complex64> = (0..p_len)
            .map(|p| {
                let h = half.min(p).min(p_len - 1 - p);
                flat[p - h..=p + h].iter().sum::<Complex64>() / (2 * h + 1) as f64
            })
            .collect();

        for t in s0..s1 {
            for (j, &f) in pilots.iter().enumerate() {
                if is_ref(t, f) {
                    averaged.set(t, f, smoothed[j] * Complex64::from_polar(1.0, slope * bins[j]));
                }
            }
        }

        let row: Vec<Complex64> = (0..n_sc)
            .map(|f| {
                let x = signed_bin(f, n_sc) as f64;
                interp_linear(&bins, &smoothed, x) * Complex64::from_polar(1.0, slope * x)
            })
            .collect();
        spans.push((s0, s1, Some(row)));
    }

    let with_rows: Vec<usize> = (0..spans.len()).filter(|&i| spans[i].2.is_some()).collect();
    if with_rows.is_empty() {
        return Err(Error::EmptyCells);
    }
    for i in 0..spans.len() {
        let (s0, s1, _) = spans[i];
        let source = *with_rows.iter().min_by_key(|&&j| j.abs_diff(i)).expect("non-empty");
        let row = spans[source].2.as_ref().expect("span has pilots");
        for t in s0..s1 {
            interpolated.symbol_mut(t).copy_from_slice(row);
        }
    }

    Ok(EqualizerCoefficients { raw, averaged, interpolated, window_len, phase_slope_rad_per_bin: slopes })
}

/// Phase advance per bin of the strongest delay tap: a grid search of
/// `|sum v e^{-j s b}|`, parabolic refinement, then an exact correction from
/// neighbouring-pilot products when those agree (a single dominant path).
fn phase_slope(bins: &[f64], values: &[Complex64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for w in bins.windows(2) {
        *counts.entry((w[1] - w[0]) as i64).or_default() += 1;
    }
    let spacing = counts.iter().max_by_key(|(_, &c)| c).map(|(&d, _)| d).expect("at least one gap").max(1) as f64;

    let range = 2.0 * PI / spacing;
    let points = 16 * values.len();
    let step = range / points as f64;
    let response = |s: f64| -> f64 {
        values.iter().zip(bins).map(|(v, b)| v * Complex64::from_polar(1.0, -s * b)).sum::<Complex64>().norm()
    };
    let grid: Vec<f64> = (0..points).map(|i| response(-PI / spacing + i as f64 * step)).collect();
    let (peak, _) = grid.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
    let (l, c, r) = (grid[(peak + points - 1) % points], grid[peak], grid[(peak + 1) % points]);
    let denom = l - 2.0 * c + r;
    let frac = if denom.abs() > 1e-300 { (0.5 * (l - r) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let mut slope = -PI / spacing + (peak as f64 + frac) * step;

    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for j in 0..values.len() - 1 {
        if bins[j + 1] - bins[j] == spacing {
            let a = values[j] * Complex64::from_polar(1.0, -slope * bins[j]);
            let b = values[j + 1] * Complex64::from_polar(1.0, -slope * bins[j + 1]);
            acc += b * a.conj();
            mag += a.norm() * b.norm();
        }
    }
    if mag > 0.0 && acc.norm() > 0.9 * mag {
        slope += acc.arg() / spacing;
    }
    slope
}

/// Linear in `x` between knots, held at the end values outside them.
fn interp_linear(xs: &[f64], ys: &[Complex64], x: f64) -> Complex64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let j = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
    ys[j] * (1.0 - w) + ys[j + 1] * w
}

/// `Z'(t, f) = Z(t, f) / coefficient(t, f)`
pub fn equalize(received: &Grid, coeffs: &EqualizerCoefficients) -> Result<Grid> {
    if !received.same_shape(&coeffs.interpolated) {
        return Err(Error::Dimension("coefficients do not cover the received grid".into()));
    }
    let n_sc = received.n_subcarriers();
    let cells = received
        .cells()
        .iter()
        .zip(coeffs.interpolated.cells())
        .enumerate()
        .map(|(i, (z, c))| {
            if c.norm_sqr() == 0.0 || !c.norm_sqr().is_finite() {
                Err(Error::Singular { what: "equalizer coefficient", index: i })
            } else {
                Ok(z / c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::from_cells(received.n_symbols(), n_sc, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerology::{OfdmNumerology, PilotPattern, QamConstellation, ResourceGrid};
    use crate::rx_dsp::measure_evm;
    use crate::waveform::{burst_offsets, ofdm_demodulate, ofdm_modulate};
    use crate::channel::{apply_path, PathModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(pattern: PilotPattern, seed: u64) -> ResourceGrid {
        let num = OfdmNumerology::nr_default();
        let c = QamConstellation::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..pattern.data_capacity_bits(&num, &c)).map(|_| rng.random_range(0..2u8)).collect();
        ResourceGrid::build(&num, &bits, &c, pattern, seed).unwrap()
    }

    fn scaled(g: &Grid, h: Complex64) -> Grid {
        Grid::from_cells(g.n_symbols(), g.n_subcarriers(), g.cells().iter().map(|c| c * h).collect()).unwrap()
    }

    #[test]
    fn identity_channel_gives_unit_coefficients() {
        let rg = grid(PilotPattern::Comb4, 1);
        let co = compute_zf_coefficients(&rg.symbols, &rg.symbols, rg.kind_mask()).unwrap();
        assert!(co.interpolated.cells().iter().all(|c| (c - 1.0).norm() < 1e-12));
        assert_eq!(co.window_len, 19);
    }

    #[test]
    fn constant_channel_is_invariant() {
        let h = Complex64::from_polar(2.0, std::f64::consts::FRAC_PI_4);
        for pattern in [PilotPattern::Comb4, PilotPattern::AllReference] {
            for config in [EqualizerConfig::default(), EqualizerConfig::per_symbol(), EqualizerConfig { detrend: false, ..Default::default() }] {
                let rg = grid(pattern, 2);
                let z = scaled(&rg.symbols, h);
                let co = compute_zf_coefficients_with(&z, &rg.symbols, rg.kind_mask(), &config).unwrap();
                assert!(co.interpolated.cells().iter().all(|c| (c - h).norm() < 1e-10));
                for (t, f) in rg.reference_cells() {
                    assert!((co.averaged.get(t, f) - h).norm() < 1e-10);
                    assert!((co.raw.get(t, f) - h).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_perturbation_is_diluted_by_the_window() {
        let rg = grid(PilotPattern::AllReference, 3);
        let mut z = rg.symbols.clone();
        let mid = 144;
        let config = EqualizerConfig::per_symbol();
        z.set(0, mid, z.get(0, mid) * 1.1);
        let co = compute_zf_coefficients_with(&z, &rg.symbols, rg.kind_mask(), &config).unwrap();
        let dev = (co.averaged.get(0, mid) - 1.0).norm();
        assert!(dev <= 0.1 / co.window_len as f64 + 1e-12, "{dev}");
        assert!(dev > 0.0);
        // oracle: uniform window over 19 pilots, one of which is 1.1
        assert!((co.averaged.get(0, mid).re - (18.0 + 1.1) / 19.0).abs() < 1e-12);
    }

    #[test]
    fn window_shrinks_at_band_edges() {
        let rg = grid(PilotPattern::AllReference, 4);
        let mut z = rg.symbols.clone();
        z.set(0, 1, z.get(0, 1) * 2.0);
        let co = compute_zf_coefficients_with(&z, &rg.symbols, rg.kind_mask(), &EqualizerConfig::per_symbol()).unwrap();
        // subcarrier 0 averages itself only
        assert!((co.averaged.get(0, 0) - 1.0).norm() < 1e-12);
        // subcarrier 1 averages 0..=2
        assert!((co.averaged.get(0, 1).re - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn interpolated_equals_averaged_at_reference_cells() {
        let rg = grid(PilotPattern::Comb4, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = Grid::from_cells(
            rg.symbols.n_symbols(),
            rg.symbols.n_subcarriers(),
            rg.symbols.cells().iter().map(|c| c * Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5))).collect(),
        )
        .unwrap();
        let co = compute_zf_coefficients(&z, &rg.symbols, rg.kind_mask()).unwrap();
        for (t, f) in rg.reference_cells() {
            assert!((co.interpolated.get(t, f) - co.averaged.get(t, f)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_reference_is_singular() {
        let rg = grid(PilotPattern::Comb4, 6);
        let mut ideal = rg.symbols.clone();
        ideal.set(2, 8, Complex64::new(0.0, 0.0));
        let r = compute_zf_coefficients(&rg.symbols, &ideal, rg.kind_mask());
        assert!(matches!(r, Err(Error::Singular { .. })));
    }

    #[test]
    fn equalize_inverts_flat_channel() {
        let rg = grid(PilotPattern::Comb4, 7);
        let h = Complex64::new(-0.3, 0.7);
        let z = scaled(&rg.symbols, h);
        let co = compute_zf_coefficients(&z, &rg.symbols, rg.kind_mask()).unwrap();
        let eq = equalize(&z, &co).unwrap();
        for (a, b) in eq.cells().iter().zip(rg.symbols.cells()) {
            assert!((a - b).norm() < 1e-9);
        }
        let mut bad = co.clone();
        bad.interpolated.set(0, 0, Complex64::new(0.0, 0.0));
        assert!(matches!(equalize(&z, &bad), Err(Error::Singular { .. })));
    }

    #[test]
    fn pure_delay_inside_cp_equalizes_below_0_1_pct() {
        let num = OfdmNumerology::nr_default();
        for pattern in [PilotPattern::Comb4, PilotPattern::AllReference] {
            let rg = grid(pattern, 8);
            let x = ofdm_modulate(&rg);
            for delay in [0.0, 7.0, 20.3, 30.0] {
                let y = apply_path(&x, &PathModel::new(delay / num.fs_hz, 0.0, Complex64::from_polar(0.8, 1.0), 1.0));
                let z = ofdm_demodulate(&y, &num, &burst_offsets(&num, 0)).unwrap();
                let co = compute_zf_coefficients(&z, &rg.symbols, rg.kind_mask()).unwrap();
                let eq = equalize(&z, &co).unwrap();
                let cells = if pattern == PilotPattern::Comb4 { rg.data_cells() } else { rg.reference_cells() };
                let r = measure_evm(&eq, &rg.symbols, &cells).unwrap();
                assert!(r.evm_rms_pct < 0.1, "{pattern:?} delay {delay}: {}", r.evm_rms_pct);
            }
        }
    }
}
