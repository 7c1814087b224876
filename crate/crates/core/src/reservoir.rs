//! Fixed random leaky echo-state reservoir.
//!
//! The reservoir is never trained. A static input `u` is injected for `steps`
//! cycles of
//!
//! ```text
//! x[t+1] = (1 - leak) * x[t] + leak * tanh(W x[t] + W_in u)
//! ```
//!
//! starting from `x[0] = 0`, and the states after the washout are averaged.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::error::{ensure, Error, Result};
use crate::linalg;
use crate::rng::{self, tags};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSpec {
    pub n_units: usize,
    pub input_dim: usize,
    pub spectral_radius: f64,
    pub leak_rate: f64,
    /// Fraction of exactly-zero entries in the recurrent matrix.
    pub sparsity: f64,
    pub steps: usize,
    /// Leading steps excluded from the average.
    pub washout: usize,
    pub seed: u64,
}

impl Default for ReservoirSpec {
    fn default() -> Self {
        ReservoirSpec {
            n_units: 1024,
            input_dim: 784,
            spectral_radius: 1.0,
            leak_rate: 0.5,
            sparsity: 0.9,
            steps: 60,
            washout: 0,
            seed: 0,
        }
    }
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n_units > 0, "n_units", "must be positive")?;
        ensure(self.n_units <= u32::MAX as usize, "n_units", "too large")?;
        ensure(self.input_dim > 0, "input_dim", "must be positive")?;
        ensure(
            self.spectral_radius.is_finite() && self.spectral_radius > 0.0,
            "spectral_radius",
            "must be finite and positive",
        )?;
        ensure(
            self.leak_rate > 0.0 && self.leak_rate <= 1.0,
            "leak_rate",
            "must lie in (0, 1]",
        )?;
        ensure(
            self.sparsity >= 0.0 && self.sparsity < 1.0,
            "sparsity",
            "must lie in [0, 1)",
        )?;
        ensure(self.steps > 0, "steps", "must be positive")?;
        ensure(self.washout < self.steps, "washout", "must be smaller than steps")?;
        Ok(())
    }

    /// Number of nonzero recurrent weights this spec asks for.
    pub fn recurrent_nonzeros(&self) -> usize {
        let total = (self.n_units * self.n_units) as f64;
        libm::round((1.0 - self.sparsity) * total) as usize
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(rows: usize, cols: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: dense.len(),
            });
        }
        let mut m = SparseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = dense[i * cols + j];
                if v != 0.0 {
                    m.col_idx.push(j as u32);
                    m.values.push(v);
                }
            }
            m.row_ptr[i + 1] = m.values.len();
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn zero_fraction(&self) -> f64 {
        let total = self.rows * self.cols;
        if total == 0 {
            return 0.0;
        }
        (total - self.nnz()) as f64 / total as f64
    }

    /// Iterates `(row, col, value)` over stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k] as usize, self.values[k]))
        })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for (i, j, v) in self.entries() {
            d[i * self.cols + j] = v;
        }
        d
    }

    /// `out = self * x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            *o = acc;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Recurrent and input weights of a built reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirWeights {
    spec: ReservoirSpec,
    recurrent: SparseMatrix,
    /// Row-major `n_units x input_dim`.
    input: Vec<f64>,
}

/// Builds the reservoir described by `spec`; a pure function of the spec.
///
/// Exactly `round((1 - sparsity) * N²)` recurrent positions are chosen
/// uniformly without replacement and filled with draws from `U[-1, 1]`; the
/// matrix is then rescaled so its dominant eigenvalue modulus equals
/// `spectral_radius`. Input weights are i.i.d. `U[-1, 1]`.
pub fn build_reservoir(spec: &ReservoirSpec) -> Result<ReservoirWeights> {
    spec.validate()?;
    let n = spec.n_units;
    let nnz = spec.recurrent_nonzeros();

    let mut rng = rng::stream(spec.seed, tags::RECURRENT, 0);
    let mut positions = index::sample(&mut rng, n * n, nnz).into_vec();
    positions.sort_unstable();
    let mut recurrent = SparseMatrix::zeros(n, n);
    recurrent.col_idx.reserve(nnz);
    recurrent.values.reserve(nnz);
    let mut row = 0;
    for p in positions {
        let (i, j) = (p / n, p % n);
        while row < i {
            row += 1;
            recurrent.row_ptr[row] = recurrent.values.len();
        }
        let v = loop {
            let v: f64 = rng.random_range(-1.0..=1.0);
            if v != 0.0 {
                break v;
            }
        };
        recurrent.col_idx.push(j as u32);
        recurrent.values.push(v);
    }
    while row < n {
        row += 1;
        recurrent.row_ptr[row] = recurrent.values.len();
    }

    if recurrent.nnz() == 0 {
        return Err(Error::DegenerateSpectrum("recurrent matrix is all zeros"));
    }
    let radius = linalg::dominant_modulus(n, spec.seed, |x, y| recurrent.mul_vec(x, y))?;
    recurrent.scale(spec.spectral_radius / radius);

    let mut rng = rng::stream(spec.seed, tags::INPUT, 0);
    let input = (0..n * spec.input_dim)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();

    Ok(ReservoirWeights {
        spec: *spec,
        recurrent,
        input,
    })
}

impl ReservoirWeights {
    /// Assembles weights directly, e.g. hand-built matrices in tests.
    pub fn from_parts(spec: ReservoirSpec, recurrent: SparseMatrix, input: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_units;
        if recurrent.rows() != n || recurrent.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: recurrent.rows(),
            });
        }
        if input.len() != n * spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: n * spec.input_dim,
                actual: input.len(),
            });
        }
        Ok(ReservoirWeights { spec, recurrent, input })
    }

    pub fn spec(&self) -> &ReservoirSpec {
        &self.spec
    }

    pub fn n_units(&self) -> usize {
        self.spec.n_units
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn recurrent(&self) -> &SparseMatrix {
        &self.recurrent
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input
    }

    /// `W_in u`, constant over the rollout.
    pub fn drive(&self, input: &[f32]) -> Result<Vec<f64>> {
        let d = self.spec.input_dim;
        if input.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: input.len(),
            });
        }
        if let Some(index) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let u: Vec<f64> = input.iter().map(|&v| v as f64).collect();
        Ok(self.input.chunks_exact(d).map(|row| linalg::dot(row, &u)).collect())
    }

    pub fn run_to_average(&self, input: &[f32]) -> Result<StateVector> {
        self.run_to_average_from(input, &vec![0.0; self.spec.n_units])
    }

    /// Rollout from an arbitrary initial state.
    pub fn run_to_average_from(&self, input: &[f32], initial: &[f64]) -> Result<StateVector> {
        let n = self.spec.n_units;
        if initial.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: initial.len(),
            });
        }
        let drive = self.drive(input)?;
        let mut x = initial.to_vec();
        let mut pre = vec![0.0; n];
        let mut sum = vec![0.0; n];
        for t in 1..=self.spec.steps {
            self.step(&mut x, &drive, &mut pre);
            if t > self.spec.washout {
                sum.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
            }
        }
        let count = (self.spec.steps - self.spec.washout) as f64;
        sum.iter_mut().for_each(|s| *s /= count);
        Ok(StateVector::new(sum))
    }

    /// Every state `x[1..=steps]` of a rollout, for diagnostics.
    pub fn trajectory(&self, input: &[f32], initial: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.spec.n_units;
        if initial.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: initial.len(),
            });
        }
        let drive = self.drive(input)?;
        let mut x = initial.to_vec();
        let mut pre = vec![0.0; n];
        let mut out = Vec::with_capacity(self.spec.steps);
        for _ in 0..self.spec.steps {
            self.step(&mut x, &drive, &mut pre);
            out.push(x.clone());
        }
        Ok(out)
    }

    #[inline]
    fn step(&self, x: &mut [f64], drive: &[f64], pre: &mut [f64]) {
        let leak = self.spec.leak_rate;
        self.recurrent.mul_vec(x, pre);
        for ((xi, &p), &d) in x.iter_mut().zip(pre.iter()).zip(drive) {
            *xi = (1.0 - leak) * *xi + leak * libm::tanh(p + d);
        }
    }
}

/// Free-function form of [`ReservoirWeights::run_to_average`].
pub fn run_to_average(weights: &ReservoirWeights, input: &[f32]) -> Result<StateVector> {
    weights.run_to_average(input)
}

/// Time-averaged reservoir state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
    label: Option<usize>,
}

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        StateVector { values, label: None }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
