use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qam::{map_qam, QamConstellation};
use super::OfdmNumerology;
use crate::error::{Error, Result};

/// Dense time-by-frequency matrix, stored symbol-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_symbols: usize,
    n_subcarriers: usize,
    cells: Vec<Complex64>,
}

impl Grid {
    pub fn zeros(n_symbols: usize, n_subcarriers: usize) -> Self {
        Self { n_symbols, n_subcarriers, cells: vec![Complex64::new(0.0, 0.0); n_symbols * n_subcarriers] }
    }

    pub fn from_cells(n_symbols: usize, n_subcarriers: usize, cells: Vec<Complex64>) -> Result<Self> {
        if cells.len() != n_symbols * n_subcarriers {
            return Err(Error::Dimension(format!(
                "{} cells for a {n_symbols}x{n_subcarriers} grid",
                cells.len()
            )));
        }
        Ok(Self { n_symbols, n_subcarriers, cells })
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn get(&self, t: usize, f: usize) -> Complex64 {
        self.cells[t * self.n_subcarriers + f]
    }

    pub fn set(&mut self, t: usize, f: usize, value: Complex64) {
        self.cells[t * self.n_subcarriers + f] = value;
    }

    pub fn symbol(&self, t: usize) -> &[Complex64] {
        &self.cells[t * self.n_subcarriers..(t + 1) * self.n_subcarriers]
    }

    pub fn symbol_mut(&mut self, t: usize) -> &mut [Complex64] {
        &mut self.cells[t * self.n_subcarriers..(t + 1) * self.n_subcarriers]
    }

    pub fn cells(&self) -> &[Complex64] {
        &self.cells
    }

    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.n_symbols == other.n_symbols && self.n_subcarriers == other.n_subcarriers
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Data,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PilotPattern {
    /// Every cell is a known reference symbol (channel-estimation bursts).
    AllReference,
    /// Every fourth subcarrier of every symbol is a reference symbol.
    Comb4,
}

impl PilotPattern {
    pub fn kind(self, _t: usize, f: usize) -> CellKind {
        match self {
            PilotPattern::AllReference => CellKind::Reference,
            PilotPattern::Comb4 if f.is_multiple_of(4) => CellKind::Reference,
            PilotPattern::Comb4 => CellKind::Data,
        }
    }

    pub fn data_cells(self, numerology: &OfdmNumerology) -> usize {
        (0..numerology.symbols_per_burst)
            .flat_map(|t| (0..numerology.n_subcarriers).map(move |f| (t, f)))
            .filter(|&(t, f)| self.kind(t, f) == CellKind::Data)
            .count()
    }

    pub fn data_capacity_bits(self, numerology: &OfdmNumerology, constellation: &QamConstellation) -> usize {
        self.data_cells(numerology) * constellation.bits_per_symbol
    }
}

/// One transmission burst: symbols plus the per-cell data/reference mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub numerology: OfdmNumerology,
    pub symbols: Grid,
    kind_mask: Vec<CellKind>,
}

impl ResourceGrid {
    pub fn build(
        numerology: &OfdmNumerology,
        payload_bits: &[u8],
        constellation: &QamConstellation,
        pattern: PilotPattern,
        seed: u64,
    ) -> Result<Self> {
        let expected = pattern.data_capacity_bits(numerology, constellation);
        if payload_bits.len() != expected {
            return Err(Error::PayloadSize { expected, got: payload_bits.len() });
        }
        let data = map_qam(payload_bits, constellation)?;
        let mut data = data.into_iter();
        let qpsk = QamConstellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let n_sym = numerology.symbols_per_burst;
        let n_sc = numerology.n_subcarriers;
        let mut symbols = Grid::zeros(n_sym, n_sc);
        let mut kind_mask = Vec::with_capacity(n_sym * n_sc);
        for t in 0..n_sym {
            for f in 0..n_sc {
                let kind = pattern.kind(t, f);
                let value = match kind {
                    CellKind::Reference => qpsk.point(rng.random_range(0..4)),
                    CellKind::Data => data.next().expect("payload length checked above"),
                };
                symbols.set(t, f, value);
                kind_mask.push(kind);
            }
        }
        Ok(Self { numerology: *numerology, symbols, kind_mask })
    }

    /// Same mask and numerology, different cell values.
    pub fn with_symbols(&self, symbols: Grid) -> Result<Self> {
        if !symbols.same_shape(&self.symbols) {
            return Err(Error::Dimension("replacement grid has a different shape".into()));
        }
        Ok(Self { numerology: self.numerology, symbols, kind_mask: self.kind_mask.clone() })
    }

    pub fn kind(&self, t: usize, f: usize) -> CellKind {
        self.kind_mask[t * self.symbols.n_subcarriers() + f]
    }

    pub fn kind_mask(&self) -> &[CellKind] {
        &self.kind_mask
    }

    fn cells_of(&self, kind: CellKind) -> Vec<(usize, usize)> {
        let n_sc = self.symbols.n_subcarriers();
        (0..self.symbols.n_symbols())
            .flat_map(|t| (0..n_sc).map(move |f| (t, f)))
            .filter(|&(t, f)| self.kind(t, f) == kind)
            .collect()
    }

    pub fn reference_cells(&self) -> Vec<(usize, usize)> {
        self.cells_of(CellKind::Reference)
    }

    pub fn data_cells(&self) -> Vec<(usize, usize)> {
        self.cells_of(CellKind::Data)
    }
}

pub fn build_resource_grid(
    numerology: &OfdmNumerology,
    payload_bits: &[u8],
    constellation: &QamConstellation,
    pattern: PilotPattern,
    seed: u64,
) -> Result<ResourceGrid> {
    ResourceGrid::build(numerology, payload_bits, constellation, pattern, seed)
}
