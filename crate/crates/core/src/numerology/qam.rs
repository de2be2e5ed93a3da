use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square Gray-labelled QAM normalised to unit average power.
///
/// A label of `bits_per_symbol` bits is split in half: the leading bits pick
/// the in-phase level, the trailing bits the quadrature level. On each axis
/// the levels run from most positive to most negative and level `i` carries
/// the Gray word `i ^ (i >> 1)`, so a leading zero bit means a positive
/// coordinate and QPSK `00` maps to `(1 + j) / sqrt(2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QamConstellation {
    pub order: usize,
    pub bits_per_symbol: usize,
    /// Points indexed by label.
    pub points: Vec<Complex64>,
    levels_per_axis: usize,
    scale: f64,
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64 | 256) {
            return Err(Error::InvalidParameter(format!(
                "QAM order must be one of 4, 16, 64, 256; got {order}"
            )));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let levels_per_axis = 1usize << (bits_per_symbol / 2);
        let scale = (1.5 / (order as f64 - 1.0)).sqrt();
        let axis_bits = bits_per_symbol / 2;
        let points = (0..order)
            .map(|label| {
                let i_word = label >> axis_bits;
                let q_word = label & (levels_per_axis - 1);
                Complex64::new(
                    level_amplitude(gray_position(i_word), levels_per_axis),
                    level_amplitude(gray_position(q_word), levels_per_axis),
                ) * scale
            })
            .collect();
        Ok(Self { order, bits_per_symbol, points, levels_per_axis, scale })
    }

    pub fn qpsk() -> Self {
        Self::new(4).expect("QPSK is supported")
    }

    /// Smallest distance between two points.
    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Hard decision: nearest point label. Square grids decouple per axis,
    /// so slicing each coordinate is the minimum-distance rule.
    pub fn decide(&self, symbol: Complex64) -> usize {
        let axis_bits = self.bits_per_symbol / 2;
        let i_word = gray_word(self.slice_axis(symbol.re));
        let q_word = gray_word(self.slice_axis(symbol.im));
        (i_word << axis_bits) | q_word
    }

    fn slice_axis(&self, x: f64) -> usize {
        let m = self.levels_per_axis as f64;
        let pos = ((m - 1.0 - x / self.scale) / 2.0).round();
        pos.clamp(0.0, m - 1.0) as usize
    }
}

fn gray_word(position: usize) -> usize {
    position ^ (position >> 1)
}

fn gray_position(mut word: usize) -> usize {
    let mut pos = word;
    while word > 0 {
        word >>= 1;
        pos ^= word;
    }
    pos
}

fn level_amplitude(position: usize, levels: usize) -> f64 {
    (levels as f64 - 1.0) - 2.0 * position as f64
}

/// Map bits (one `0`/`1` per element, MSB first per symbol) to points.
pub fn map_qam(bits: &[u8], constellation: &QamConstellation) -> Result<Vec<Complex64>> {
    let bps = constellation.bits_per_symbol;
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::MisalignedBits { len: bits.len(), bits_per_symbol: bps });
    }
    Ok(bits
        .chunks_exact(bps)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
            constellation.point(label)
        })
        .collect())
}

pub fn demap_qam(symbols: &[Complex64], constellation: &QamConstellation) -> Vec<u8> {
    let bps = constellation.bits_per_symbol;
    let mut bits = Vec::with_capacity(symbols.len() * bps);
    for &s in symbols {
        let label = constellation.decide(s);
        bits.extend((0..bps).rev().map(|shift| ((label >> shift) & 1) as u8));
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn brute_force_nearest(c: &QamConstellation, s: Complex64) -> usize {
        (0..c.order)
            .min_by(|&a, &b| (c.points[a] - s).norm_sqr().total_cmp(&(c.points[b] - s).norm_sqr()))
            .unwrap()
    }

    #[test]
    fn qpsk_zero_label() {
        let c = QamConstellation::qpsk();
        let s = map_qam(&[0, 0], &c).unwrap();
        let expected = Complex64::new(1.0, 1.0) / 2f64.sqrt();
        assert!((s[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn full_constellations_have_unit_power_and_distinct_points() {
        for order in [4, 16, 64, 256] {
            let c = QamConstellation::new(order).unwrap();
            let mean_power: f64 = c.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean_power - 1.0).abs() < 1e-12, "order {order}: {mean_power}");
            for a in 0..order {
                for b in (a + 1)..order {
                    assert!((c.points[a] - c.points[b]).norm() > 1e-9);
                }
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for order in [4, 16, 64, 256] {
            let c = QamConstellation::new(order).unwrap();
            let d = c.min_distance();
            for a in 0..order {
                for b in 0..order {
                    let dist = (c.points[a] - c.points[b]).norm();
                    if (dist - d).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "order {order}: labels {a} and {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn slicer_is_minimum_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for order in [4, 16, 64, 256] {
            let c = QamConstellation::new(order).unwrap();
            for _ in 0..5000 {
                let s = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
                assert_eq!(c.decide(s), brute_force_nearest(&c, s));
            }
        }
    }

    #[test]
    fn exact_points_demap_to_labels() {
        let c = QamConstellation::new(64).unwrap();
        for label in 0..64 {
            assert_eq!(c.decide(c.points[label]), label);
        }
    }

    #[test]
    fn small_noise_keeps_label() {
        let c = QamConstellation::new(256).unwrap();
        let radius = 0.99 * c.min_distance() / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for label in 0..256 {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s = c.points[label] + Complex64::from_polar(radius, theta);
            assert_eq!(c.decide(s), label);
        }
    }

    #[test]
    fn misaligned_bits_rejected() {
        let c = QamConstellation::new(16).unwrap();
        assert!(matches!(map_qam(&[0, 1, 1], &c), Err(Error::MisalignedBits { len: 3, bits_per_symbol: 4 })));
    }

    #[test]
    fn unsupported_order_rejected() {
        assert!(QamConstellation::new(32).is_err());
    }

    fn q_function(x: f64) -> f64 {
        // Complementary error function via numerical integration of the
        // Gaussian tail (Simpson, 1e-4 step out to 12 sigma).
        let h = 1e-4;
        let upper = 12.0;
        let n = ((upper - x) / h).ceil() as usize & !1;
        let f = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let step = (upper - x) / n as f64;
        let mut sum = f(x) + f(upper);
        for i in 1..n {
            let t = x + i as f64 * step;
            sum += if i % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
        }
        sum * step / 3.0
    }

    #[test]
    fn qam256_ser_at_30db_matches_theory() {
        let c = QamConstellation::new(256).unwrap();
        let snr = 1000.0f64;
        let sigma = (1.0 / snr / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut errors = 0usize;
        for _ in 0..n {
            let label = rng.random_range(0..256);
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            let s = c.points[label] + Complex64::new(nr, ni) * sigma;
            if c.decide(s) != label {
                errors += 1;
            }
        }
        let ser = errors as f64 / n as f64;
        let m = 16.0;
        let p_axis = 2.0 * (1.0 - 1.0 / m) * q_function((3.0 * snr / (256.0 - 1.0)).sqrt());
        let theory = 1.0 - (1.0 - p_axis).powi(2);
        assert!(ser < 1e-2);
        // 1e5 draws at ~1.1e-3 give ~110 errors; allow 4 sigma.
        let sd = (theory / n as f64).sqrt();
        assert!((ser - theory).abs() < 4.0 * sd, "ser {ser} theory {theory}");
    }

    proptest! {
        #[test]
        fn map_demap_round_trip(order_idx in 0usize..4, seed in any::<u64>(), n_sym in 1usize..64) {
            let order = [4, 16, 64, 256][order_idx];
            let c = QamConstellation::new(order).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = (0..n_sym * c.bits_per_symbol).map(|_| rng.random_range(0..2u8)).collect();
            let symbols = map_qam(&bits, &c).unwrap();
            prop_assert_eq!(demap_qam(&symbols, &c), bits);
        }
    }
}
