//! Closed-form ridge readout over time-averaged reservoir states.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure, Error, Result};
use crate::linalg::{cholesky, cholesky_solve};
use crate::prototype::argmax_first;
use crate::reservoir::{ReservoirWeights, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSpec {
    pub regularization: f64,
    /// Appends a constant 1 feature; its weight is not penalized.
    pub include_bias: bool,
}

impl Default for RidgeSpec {
    fn default() -> Self {
        RidgeSpec {
            regularization: 1e-5,
            include_bias: true,
        }
    }
}

impl RidgeSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.regularization.is_finite() && self.regularization > 0.0,
            "regularization",
            "must be positive",
        )
    }
}

/// Streaming accumulator for `XᵀX` and `XᵀY`. Accumulators built over
/// disjoint chunks can be merged, which keeps parallel assembly exact up to
/// summation order.
#[derive(Debug, Clone)]
pub struct RidgeAccumulator {
    features: usize,
    classes: usize,
    include_bias: bool,
    gram: Vec<f64>,
    cross: Vec<f64>,
    count: usize,
    row: Vec<f64>,
}

impl RidgeAccumulator {
    pub fn new(features: usize, classes: usize, include_bias: bool) -> Self {
        let d = features + include_bias as usize;
        RidgeAccumulator {
            features,
            classes,
            include_bias,
            gram: vec![0.0; d * d],
            cross: vec![0.0; d * classes],
            count: 0,
            row: vec![0.0; d],
        }
    }

    fn dim(&self) -> usize {
        self.features + self.include_bias as usize
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, state: &[f64], label: usize) -> Result<()> {
        if state.len() != self.features {
            return Err(Error::DimensionMismatch {
                expected: self.features,
                actual: state.len(),
            });
        }
        if label >= self.classes {
            return Err(Error::UnknownClass {
                label,
                classes: self.classes,
            });
        }
        if let Some(index) = state.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let d = self.dim();
        self.row[..self.features].copy_from_slice(state);
        if self.include_bias {
            self.row[self.features] = 1.0;
        }
        // Upper triangle only; mirrored at solve time.
        for i in 0..d {
            let xi = self.row[i];
            if xi == 0.0 {
                continue;
            }
            let g = &mut self.gram[i * d..(i + 1) * d];
            for j in i..d {
                g[j] += xi * self.row[j];
            }
            self.cross[i * self.classes + label] += xi;
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &RidgeAccumulator) -> Result<()> {
        ensure(
            self.features == other.features
                && self.classes == other.classes
                && self.include_bias == other.include_bias,
            "accumulator",
            "shapes differ",
        )?;
        self.gram.iter_mut().zip(&other.gram).for_each(|(a, b)| *a += b);
        self.cross.iter_mut().zip(&other.cross).for_each(|(a, b)| *a += b);
        self.count += other.count;
        Ok(())
    }

    /// Solves `(XᵀX + βI')Wᵀ = XᵀY`, where `I'` skips the bias entry.
    pub fn solve(&self, regularization: f64) -> Result<RidgeReadout> {
        ensure(self.count > 0, "states", "need at least one sample")?;
        ensure(
            regularization.is_finite() && regularization > 0.0,
            "regularization",
            "must be positive",
        )?;
        let d = self.dim();
        let mut a = self.gram.clone();
        for i in 0..d {
            for j in 0..i {
                a[i * d + j] = a[j * d + i];
            }
            if i < self.features {
                a[i * d + i] += regularization;
            }
        }
        cholesky(&mut a, d)?;
        let mut wt = self.cross.clone();
        cholesky_solve(&a, d, &mut wt, self.classes);
        let mut weights = vec![0.0; self.classes * d];
        for i in 0..d {
            for c in 0..self.classes {
                weights[c * d + i] = wt[i * self.classes + c];
            }
        }
        if let Some(index) = weights.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(RidgeReadout {
            features: self.features,
            classes: self.classes,
            include_bias: self.include_bias,
            weights,
        })
    }
}

/// Linear readout `C x (N + bias)`, row-major by class.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeReadout {
    features: usize,
    classes: usize,
    include_bias: bool,
    weights: Vec<f64>,
}

impl RidgeReadout {
    pub fn from_parts(features: usize, classes: usize, include_bias: bool, weights: Vec<f64>) -> Result<Self> {
        let d = features + include_bias as usize;
        if weights.len() != classes * d {
            return Err(Error::DimensionMismatch {
                expected: classes * d,
                actual: weights.len(),
            });
        }
        ensure(classes > 0, "classes", "must be positive")?;
        if let Some(index) = weights.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(RidgeReadout {
            features,
            classes,
            include_bias,
            weights,
        })
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn include_bias(&self) -> bool {
        self.include_bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn outputs(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.features {
            return Err(Error::DimensionMismatch {
                expected: self.features,
                actual: state.len(),
            });
        }
        let d = self.features + self.include_bias as usize;
        Ok(self
            .weights
            .chunks_exact(d)
            .map(|w| {
                let mut s = 0.0;
                for (a, b) in w.iter().zip(state) {
                    s += a * b;
                }
                if self.include_bias {
                    s += w[self.features];
                }
                s
            })
            .collect())
    }

    pub fn classify(&self, state: &[f64]) -> Result<usize> {
        let out = self.outputs(state)?;
        argmax_first(&out).ok_or(Error::Empty)
    }
}

/// Fits a readout to `states` with one-hot targets from `labels`.
pub fn fit_ridge(states: &[StateVector], labels: &[usize], classes: usize, spec: &RidgeSpec) -> Result<RidgeReadout> {
    spec.validate()?;
    if states.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            actual: labels.len(),
        });
    }
    let first = states.first().ok_or(Error::Empty)?;
    let mut acc = RidgeAccumulator::new(first.len(), classes, spec.include_bias);
    for (s, &y) in states.iter().zip(labels) {
        acc.add(s.values(), y)?;
    }
    acc.solve(spec.regularization)
}

/// Frobenius norm of `XWᵀ - Y` over a labelled set.
pub fn residual_norm(readout: &RidgeReadout, states: &[StateVector], labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (s, &y) in states.iter().zip(labels) {
        for (c, o) in readout.outputs(s.values())?.into_iter().enumerate() {
            let t = if c == y { 1.0 } else { 0.0 };
            total += (o - t) * (o - t);
        }
    }
    Ok(libm::sqrt(total))
}

/// Reservoir plus ridge readout; shares the reservoir construction with the
/// prototype classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    reservoir: ReservoirWeights,
    spec: RidgeSpec,
    readout: RidgeReadout,
}

impl RidgeModel {
    pub fn new(reservoir: ReservoirWeights, spec: RidgeSpec, readout: RidgeReadout) -> Result<Self> {
        if readout.features() != reservoir.n_units() {
            return Err(Error::DimensionMismatch {
                expected: reservoir.n_units(),
                actual: readout.features(),
            });
        }
        Ok(RidgeModel {
            reservoir,
            spec,
            readout,
        })
    }

    pub fn fit<'a, I>(reservoir: ReservoirWeights, spec: RidgeSpec, classes: usize, dataset: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f32], usize)>,
    {
        spec.validate()?;
        let mut acc = RidgeAccumulator::new(reservoir.n_units(), classes, spec.include_bias);
        for (input, label) in dataset {
            let state = reservoir.run_to_average(input)?;
            acc.add(state.values(), label)?;
        }
        let readout = acc.solve(spec.regularization)?;
        Self::new(reservoir, spec, readout)
    }

    pub fn reservoir(&self) -> &ReservoirWeights {
        &self.reservoir
    }

    pub fn spec(&self) -> &RidgeSpec {
        &self.spec
    }

    pub fn readout(&self) -> &RidgeReadout {
        &self.readout
    }

    pub fn outputs(&self, input: &[f32]) -> Result<Vec<f64>> {
        let state = self.reservoir.run_to_average(input)?;
        self.readout.outputs(state.values())
    }

    pub fn predict(&self, input: &[f32]) -> Result<usize> {
        let state = self.reservoir.run_to_average(input)?;
        self.readout.classify(state.values())
    }
}

pub fn predict_ridge(model: &RidgeModel, input: &[f32]) -> Result<usize> {
    model.predict(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec())
    }

    #[test]
    fn identity_limit() {
        let n = 4;
        let states: Vec<_> = (0..n)
            .map(|i| sv(&(0..n).map(|j| (i == j) as u8 as f64).collect::<Vec<_>>()))
            .collect();
        let labels: Vec<_> = (0..n).collect();
        let spec = RidgeSpec {
            regularization: 1e-8,
            include_bias: false,
        };
        let r = fit_ridge(&states, &labels, n, &spec).unwrap();
        for c in 0..n {
            for i in 0..n {
                let expect = (c == i) as u8 as f64;
                assert!((r.weights()[c * n + i] - expect).abs() < 1e-4);
            }
            assert_eq!(r.classify(states[c].values()).unwrap(), c);
        }
    }

    #[test]
    fn conflicting_duplicates_stay_finite() {
        let states = vec![sv(&[1.0, 2.0]), sv(&[1.0, 2.0])];
        let labels = vec![0, 1];
        let r = fit_ridge(&states, &labels, 2, &RidgeSpec::default()).unwrap();
        assert!(r.weights().iter().all(|w| w.is_finite()));
        assert!(residual_norm(&r, &states, &labels).unwrap() > 0.0);
    }

    #[test]
    fn zero_weights_pick_first_class() {
        let r = RidgeReadout::from_parts(3, 4, true, vec![0.0; 16]).unwrap();
        assert_eq!(r.classify(&[0.3, -0.2, 0.9]).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            fit_ridge(&[], &[], 2, &RidgeSpec::default()).unwrap_err(),
            Error::Empty
        );
        let spec = RidgeSpec {
            regularization: 0.0,
            include_bias: true,
        };
        assert!(fit_ridge(&[sv(&[1.0])], &[0], 2, &spec).is_err());
        assert!(matches!(
            fit_ridge(&[sv(&[1.0])], &[5], 2, &RidgeSpec::default()),
            Err(Error::UnknownClass { .. })
        ));
    }

    #[test]
    fn merged_accumulators_match_single_pass() {
        let data = [(vec![0.1, -0.4, 0.7], 0), (vec![0.5, 0.2, -0.1], 1), (vec![-0.3, 0.9, 0.0], 2)];
        let mut whole = RidgeAccumulator::new(3, 3, true);
        let mut a = RidgeAccumulator::new(3, 3, true);
        let mut b = RidgeAccumulator::new(3, 3, true);
        for (k, (x, y)) in data.iter().enumerate() {
            whole.add(x, *y).unwrap();
            if k < 2 { a.add(x, *y).unwrap() } else { b.add(x, *y).unwrap() }
        }
        a.merge(&b).unwrap();
        assert_eq!(a.solve(1e-5).unwrap(), whole.solve(1e-5).unwrap());
    }
}
