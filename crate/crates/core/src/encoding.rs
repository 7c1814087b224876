//! Level quantization of reservoir states and bit-packed co-activation masks.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::reservoir::StateVector;

/// Slack tolerated outside `[-1, 1]` before a state is rejected.
pub const RANGE_GUARD: f64 = 1e-12;

/// Uniform quantizer on `[-1, 1]` with `levels` bins.
///
/// Edges are `b_k = -1 + 2k/K`. Bins are half-open `[b_k, b_{k+1})` except the
/// top one, which also takes `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerSpec {
    levels: u16,
}

impl Default for QuantizerSpec {
    fn default() -> Self {
        QuantizerSpec { levels: 8 }
    }
}

impl QuantizerSpec {
    pub fn new(levels: usize) -> Result<Self> {
        ensure(levels >= 2, "levels", "need at least two levels")?;
        ensure(levels <= 256, "levels", "at most 256 levels")?;
        Ok(QuantizerSpec { levels: levels as u16 })
    }

    pub fn levels(&self) -> usize {
        self.levels as usize
    }

    #[inline]
    pub fn edge(&self, k: usize) -> f64 {
        -1.0 + (2.0 * k as f64) / self.levels as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.levels()).map(|k| self.edge(k)).collect()
    }

    /// Level of a single value (already validated as finite).
    #[inline]
    pub fn level_of(&self, value: f64) -> u8 {
        let k_max = self.levels() - 1;
        let v = value.clamp(-1.0, 1.0);
        let mut k = (libm::floor((v + 1.0) * 0.5 * self.levels as f64) as usize).min(k_max);
        // Agree with the edges exactly where the scaled floor rounds the other way.
        while k > 0 && v < self.edge(k) {
            k -= 1;
        }
        while k < k_max && v >= self.edge(k + 1) {
            k += 1;
        }
        k as u8
    }
}

/// Per-unit discrete activation levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LevelCode {
    levels: Vec<u8>,
    k: u16,
}

impl LevelCode {
    pub fn new(levels: Vec<u8>, quantizer: &QuantizerSpec) -> Result<Self> {
        ensure(
            levels.iter().all(|&z| (z as usize) < quantizer.levels()),
            "levels",
            "entry exceeds the number of levels",
        )?;
        Ok(LevelCode {
            levels,
            k: quantizer.levels,
        })
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.k as usize
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

pub fn quantize(state: &StateVector, q: &QuantizerSpec) -> Result<LevelCode> {
    let mut levels = Vec::with_capacity(state.len());
    for (index, &v) in state.values().iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        ensure(
            (-1.0 - RANGE_GUARD..=1.0 + RANGE_GUARD).contains(&v),
            "state",
            "entry outside [-1, 1]",
        )?;
        levels.push(q.level_of(v));
    }
    Ok(LevelCode { levels, k: q.levels })
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// Square bit matrix, rows padded to whole 64-bit words. Padding bits are
/// always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(n: usize) -> Self {
        let words_per_row = words_for(n);
        BitMatrix {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    /// Rebuilds a matrix from its packed words (row-major, padded rows).
    pub fn from_words(n: usize, bits: Vec<u64>) -> Result<Self> {
        let words_per_row = words_for(n);
        if bits.len() != n * words_per_row {
            return Err(Error::DimensionMismatch {
                expected: n * words_per_row,
                actual: bits.len(),
            });
        }
        let m = BitMatrix { n, words_per_row, bits };
        let tail = n % 64;
        if tail != 0 {
            let pad = !0u64 << tail;
            ensure(
                (0..n).all(|i| m.row(i)[words_per_row - 1] & pad == 0),
                "bits",
                "padding bits must be zero",
            )?;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let w = &mut self.bits[i * self.words_per_row + j / 64];
        if value {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn popcount(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// `Σ_ij a_ij b_ij` by word-wise AND and popcount.
    pub fn and_count(&self, other: &BitMatrix) -> Result<u64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    /// Fraction of ones among the `n(n-1)` off-diagonal positions.
    pub fn off_diagonal_density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let diag = (0..self.n).filter(|&i| self.get(i, i)).count() as u64;
        (self.popcount() - diag) as f64 / (self.n * (self.n - 1)) as f64
    }
}

/// Binary relation "units `i` and `j` share a level", with zero diagonal.
///
/// Alongside the packed rows the mask keeps the partition of units into level
/// buckets (one bitset per level): row `i` of the mask is exactly bucket
/// `z_i` with bit `i` cleared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoactivationMask {
    matrix: BitMatrix,
    code: LevelCode,
    buckets: Vec<Vec<u64>>,
}

pub fn build_mask(code: &LevelCode) -> CoactivationMask {
    let n = code.len();
    let words = words_for(n);
    let mut buckets = vec![vec![0u64; words]; code.level_count()];
    for (i, &z) in code.levels().iter().enumerate() {
        buckets[z as usize][i / 64] |= 1 << (i % 64);
    }
    let mut matrix = BitMatrix::zeros(n);
    for (i, &z) in code.levels().iter().enumerate() {
        let row = &mut matrix.bits[i * words..(i + 1) * words];
        row.copy_from_slice(&buckets[z as usize]);
        row[i / 64] &= !(1 << (i % 64));
    }
    CoactivationMask {
        matrix,
        code: code.clone(),
        buckets,
    }
}

impl CoactivationMask {
    pub fn n_units(&self) -> usize {
        self.matrix.n
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn code(&self) -> &LevelCode {
        &self.code
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.matrix.get(i, j)
    }

    pub fn popcount(&self) -> u64 {
        self.matrix.popcount()
    }

    /// Units at `level`, as a packed bitset over unit indices.
    pub fn bucket(&self, level: usize) -> &[u64] {
        &self.buckets[level]
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.buckets
            .iter()
            .map(|b| b.iter().map(|w| w.count_ones() as usize).sum())
            .collect()
    }

    /// `Σ_l n_l (n_l - 1)`; equals [`popcount`](Self::popcount).
    pub fn popcount_from_buckets(&self) -> u64 {
        self.bucket_sizes()
            .into_iter()
            .map(|s| (s * s.saturating_sub(1)) as u64)
            .sum()
    }
}

/// Number of unit pairs set in both masks.
pub fn mask_overlap(a: &CoactivationMask, b: &CoactivationMask) -> Result<u64> {
    a.matrix.and_count(&b.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(levels: &[u8], k: usize) -> LevelCode {
        LevelCode::new(levels.to_vec(), &QuantizerSpec::new(k).unwrap()).unwrap()
    }

    #[test]
    fn eight_level_landmarks() {
        let q = QuantizerSpec::new(8).unwrap();
        assert_eq!(q.level_of(-1.0), 0);
        assert_eq!(q.level_of(0.0), 4);
        assert_eq!(q.level_of(1.0), 7);
        assert_eq!(q.level_of(-0.75), 1);
        assert_eq!(q.level_of(-0.7500000000000001), 0);
    }

    #[test]
    fn two_level_sign_split() {
        let q = QuantizerSpec::new(2).unwrap();
        let s = StateVector::new(vec![-0.3, 0.7, -0.001]);
        assert_eq!(quantize(&s, &q).unwrap().levels(), &[0, 1, 0]);
    }

    #[test]
    fn quantize_guards() {
        let q = QuantizerSpec::default();
        let nan = StateVector::new(vec![0.0, f64::NAN]);
        assert_eq!(quantize(&nan, &q), Err(Error::NonFinite { index: 1 }));
        let slightly = StateVector::new(vec![1.0 + 1e-13, -1.0 - 1e-13]);
        assert_eq!(quantize(&slightly, &q).unwrap().levels(), &[7, 0]);
        let far = StateVector::new(vec![1.5]);
        assert!(quantize(&far, &q).is_err());
        assert!(QuantizerSpec::new(1).is_err());
    }

    #[test]
    fn three_unit_mask() {
        let m = build_mask(&code(&[0, 0, 1], 2));
        let dense: Vec<bool> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect();
        assert_eq!(
            dense,
            [false, true, false, true, false, false, false, false, false]
        );
        assert_eq!(m.bucket_sizes(), vec![2, 1]);
    }

    #[test]
    fn single_bucket_is_all_ones_off_diagonal() {
        let n = 70;
        let m = build_mask(&code(&vec![3; n], 8));
        assert_eq!(m.popcount(), (n * (n - 1)) as u64);
        assert_eq!(m.popcount_from_buckets(), m.popcount());
        assert!((0..n).all(|i| !m.get(i, i)));
    }

    #[test]
    fn overlap_basics() {
        let a = build_mask(&code(&[0, 1, 0, 1, 2, 2, 0], 4));
        let zero = build_mask(&code(&[0, 1, 2, 3, 0, 1, 2], 4).clone());
        assert_eq!(mask_overlap(&a, &a).unwrap(), a.popcount());
        let empty = CoactivationMask {
            matrix: BitMatrix::zeros(7),
            ..zero
        };
        assert_eq!(mask_overlap(&a, &empty).unwrap(), 0);
        let other = build_mask(&code(&[0, 0], 2));
        assert!(mask_overlap(&a, &other).is_err());
    }

    #[test]
    fn from_words_rejects_dirty_padding() {
        assert!(BitMatrix::from_words(3, vec![0, 0, 1 << 5]).is_err());
        assert!(BitMatrix::from_words(3, vec![0, 0, 1 << 2]).is_ok());
        assert!(BitMatrix::from_words(3, vec![0, 0]).is_err());
    }
}
