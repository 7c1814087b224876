//! Class-wise Hebbian prototypes: potentiation/decay learning, quantile
//! binarization and overlap scoring.

use alloc::vec;
use alloc::vec::Vec;

use crate::encoding::{build_mask, quantize, BitMatrix, CoactivationMask, QuantizerSpec};
use crate::error::{ensure, Error, Result};
use crate::reservoir::ReservoirWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HebbSpec {
    /// Added to co-activated pairs, then clipped to 1.
    pub potentiation: f64,
    /// Multiplies pairs that were not co-activated.
    pub decay: f64,
    pub classes: usize,
    /// Target fraction of ones in each binarized template.
    pub sparsity_fraction: f64,
}

impl Default for HebbSpec {
    fn default() -> Self {
        HebbSpec {
            potentiation: 0.6,
            decay: 0.96,
            classes: 10,
            sparsity_fraction: 0.3,
        }
    }
}

impl HebbSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.potentiation.is_finite() && self.potentiation > 0.0,
            "potentiation",
            "must be positive",
        )?;
        ensure(self.decay > 0.0 && self.decay < 1.0, "decay", "must lie in (0, 1)")?;
        ensure(self.classes > 0, "classes", "must be positive")?;
        ensure(
            self.sparsity_fraction > 0.0 && self.sparsity_fraction < 1.0,
            "sparsity_fraction",
            "must lie in (0, 1)",
        )?;
        Ok(())
    }
}

/// Continuous co-activation statistics `S` of one class, dense `N x N` in
/// `[0, 1]` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeState {
    class_id: usize,
    n: usize,
    values: Vec<f32>,
    update_count: u64,
}

#[inline]
fn clip_unit(v: f32) -> f32 {
    v.clamp(0.0, 1.0)
}

impl PrototypeState {
    pub fn new(class_id: usize, n: usize) -> Self {
        PrototypeState {
            class_id,
            n,
            values: vec![0.0; n * n],
            update_count: 0,
        }
    }

    pub fn from_values(class_id: usize, n: usize, values: Vec<f32>, update_count: u64) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        ensure(
            values.iter().all(|v| (0.0..=1.0).contains(v)),
            "values",
            "entries must lie in [0, 1]",
        )?;
        ensure(
            (0..n).all(|i| values[i * n + i] == 0.0),
            "values",
            "diagonal must be zero",
        )?;
        Ok(PrototypeState {
            class_id,
            n,
            values,
            update_count,
        })
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn n_units(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.n + j]
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    fn check(&self, mask: &CoactivationMask, label: usize) -> Result<()> {
        if label != self.class_id {
            return Err(Error::LabelMismatch {
                expected: self.class_id,
                label,
            });
        }
        if mask.n_units() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: mask.n_units(),
            });
        }
        Ok(())
    }

    /// One potentiation/decay step, pair by pair:
    /// `S ← clip(S + η₊)` where the mask is set, `S ← η₋ S` elsewhere, then the
    /// diagonal is zeroed.
    pub fn update(&mut self, mask: &CoactivationMask, label: usize, spec: &HebbSpec) -> Result<()> {
        self.check(mask, label)?;
        let up = spec.potentiation as f32;
        let down = spec.decay as f32;
        let n = self.n;
        for i in 0..n {
            let bits = mask.matrix().row(i);
            let row = &mut self.values[i * n..(i + 1) * n];
            for (j, s) in row.iter_mut().enumerate() {
                *s = if bits[j / 64] >> (j % 64) & 1 == 1 {
                    clip_unit(*s + up)
                } else {
                    down * *s
                };
            }
            row[i] = 0.0;
        }
        self.update_count += 1;
        Ok(())
    }

    /// The same step written as whole-matrix arithmetic,
    /// `clip(M ⊙ (S + η₊) + (1 - M) ⊙ (η₋ S))`. Produces bit-identical results
    /// to [`update`](Self::update); kept as a cross-check.
    pub fn update_matrix_form(&mut self, mask: &CoactivationMask, label: usize, spec: &HebbSpec) -> Result<()> {
        self.check(mask, label)?;
        let up = spec.potentiation as f32;
        let down = spec.decay as f32;
        let n = self.n;
        let m: Vec<f32> = (0..n * n)
            .map(|k| if mask.get(k / n, k % n) { 1.0 } else { 0.0 })
            .collect();
        for (s, &mk) in self.values.iter_mut().zip(&m) {
            *s = clip_unit(mk * (*s + up) + (1.0 - mk) * (down * *s));
        }
        for i in 0..n {
            self.values[i * n + i] = 0.0;
        }
        self.update_count += 1;
        Ok(())
    }
}

/// Functional form of [`PrototypeState::update`].
pub fn hebbian_update(
    mut state: PrototypeState,
    mask: &CoactivationMask,
    label: usize,
    spec: &HebbSpec,
) -> Result<PrototypeState> {
    state.update(mask, label, spec)?;
    Ok(state)
}

/// Accumulates class-conditional updates; each mask only touches the state of
/// its own label.
#[derive(Debug, Clone)]
pub struct PrototypeLearner {
    spec: HebbSpec,
    states: Vec<PrototypeState>,
}

impl PrototypeLearner {
    pub fn new(n_units: usize, spec: HebbSpec) -> Result<Self> {
        spec.validate()?;
        Ok(PrototypeLearner {
            spec,
            states: (0..spec.classes).map(|c| PrototypeState::new(c, n_units)).collect(),
        })
    }

    pub fn resume(states: Vec<PrototypeState>, spec: HebbSpec) -> Result<Self> {
        spec.validate()?;
        ensure(states.len() == spec.classes, "states", "need one state per class")?;
        ensure(
            states.iter().enumerate().all(|(c, s)| s.class_id() == c),
            "states",
            "states must be ordered by class",
        )?;
        Ok(PrototypeLearner { spec, states })
    }

    pub fn observe(&mut self, mask: &CoactivationMask, label: usize) -> Result<()> {
        let classes = self.spec.classes;
        let state = self
            .states
            .get_mut(label)
            .ok_or(Error::UnknownClass { label, classes })?;
        state.update(mask, label, &self.spec)
    }

    pub fn spec(&self) -> &HebbSpec {
        &self.spec
    }

    pub fn states(&self) -> &[PrototypeState] {
        &self.states
    }

    pub fn into_states(self) -> Vec<PrototypeState> {
        self.states
    }

    pub fn templates(&self) -> Vec<PrototypeTemplate> {
        self.states
            .iter()
            .map(|s| binarize(s, self.spec.sparsity_fraction))
            .collect()
    }
}

/// Runs every `(input, label)` pair in order through rollout, quantization and
/// masking, and applies the update to the prototype of that label.
pub fn train_prototypes<'a, I>(
    dataset: I,
    reservoir: &ReservoirWeights,
    quantizer: &QuantizerSpec,
    spec: &HebbSpec,
) -> Result<Vec<PrototypeState>>
where
    I: IntoIterator<Item = (&'a [f32], usize)>,
{
    let mut learner = PrototypeLearner::new(reservoir.n_units(), *spec)?;
    for (input, label) in dataset {
        if label >= spec.classes {
            return Err(Error::UnknownClass {
                label,
                classes: spec.classes,
            });
        }
        let state = reservoir.run_to_average(input)?;
        let mask = build_mask(&quantize(&state, quantizer)?);
        learner.observe(&mask, label)?;
    }
    Ok(learner.into_states())
}

/// Binarized class template `P` with its threshold `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeTemplate {
    class_id: usize,
    matrix: BitMatrix,
    threshold: f32,
}

impl PrototypeTemplate {
    pub fn from_parts(class_id: usize, matrix: BitMatrix, threshold: f32) -> Result<Self> {
        ensure(
            (0..matrix.n()).all(|i| !matrix.get(i, i)),
            "template",
            "diagonal must be zero",
        )?;
        Ok(PrototypeTemplate {
            class_id,
            matrix,
            threshold,
        })
    }

    /// Template identical to a single mask.
    pub fn from_mask(class_id: usize, mask: &CoactivationMask) -> Self {
        PrototypeTemplate {
            class_id,
            matrix: mask.matrix().clone(),
            threshold: 1.0,
        }
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn threshold(&self) -> f32 {
        self.threshold
    }

    pub fn n_units(&self) -> usize {
        self.matrix.n()
    }

    pub fn density(&self) -> f64 {
        self.matrix.off_diagonal_density()
    }
}

/// Counts behind a binarization, for density and tie reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarizeStats {
    /// Off-diagonal entries, `N(N-1)`.
    pub off_diagonal: u64,
    /// `⌊p · N(N-1)⌋`, the number of ones an untied state would receive.
    pub target_ones: u64,
    pub ones: u64,
    /// Entries strictly above the threshold.
    pub above: u64,
}

impl BinarizeStats {
    pub fn density(&self) -> f64 {
        self.ones as f64 / self.off_diagonal.max(1) as f64
    }

    /// Density excess caused by entries tied at the threshold.
    pub fn tie_slack(&self) -> f64 {
        self.ones.saturating_sub(self.target_ones) as f64 / self.off_diagonal.max(1) as f64
    }
}

/// Thresholds `S` at its `(1 - p)` quantile over off-diagonal entries.
///
/// The threshold is the value at zero-based position `⌈(1-p)m⌉ = m - ⌊pm⌋`
/// of the ascending order of the `m = N(N-1)` entries, so an untied state
/// keeps exactly `⌊pm⌋` ones. Ties at the threshold are all kept (`S ≥ θ`).
/// A zero threshold would admit entries that never received any evidence, so
/// in that case only strictly positive entries are kept; an all-zero state
/// yields an empty template.
pub fn binarize(state: &PrototypeState, p: f64) -> PrototypeTemplate {
    binarize_with_stats(state, p).0
}

pub fn binarize_with_stats(state: &PrototypeState, p: f64) -> (PrototypeTemplate, BinarizeStats) {
    let n = state.n_units();
    let m = n * n.saturating_sub(1);
    let mut matrix = BitMatrix::zeros(n);
    if m == 0 {
        let stats = BinarizeStats {
            off_diagonal: 0,
            target_ones: 0,
            ones: 0,
            above: 0,
        };
        return (PrototypeTemplate::from_parts(state.class_id(), matrix, 0.0).unwrap(), stats);
    }
    let target = libm::floor(p * m as f64 + 1e-9).clamp(0.0, m as f64) as usize;
    let mut off: Vec<f32> = Vec::with_capacity(m);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off.push(state.get(i, j));
            }
        }
    }
    let idx = (m - target).min(m - 1);
    let (_, theta, _) = off.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
    let theta = *theta;

    let keep = |v: f32| if theta > 0.0 { v >= theta } else { v > 0.0 };
    let (mut ones, mut above) = (0u64, 0u64);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = state.get(i, j);
            if keep(v) {
                matrix.set(i, j, true);
                ones += 1;
            }
            if v > theta {
                above += 1;
            }
        }
    }
    let stats = BinarizeStats {
        off_diagonal: m as u64,
        target_ones: target as u64,
        ones,
        above,
    };
    let template = PrototypeTemplate {
        class_id: state.class_id(),
        matrix,
        threshold: theta,
    };
    (template, stats)
}

/// Overlap `⟨P, M⟩` over packed words.
pub fn score(template: &PrototypeTemplate, mask: &CoactivationMask) -> Result<u64> {
    template.matrix.and_count(mask.matrix())
}

/// Same value as [`score`], computed from the level buckets: for each unit
/// `i`, the template row is intersected with the bucket of `z_i`.
pub fn score_by_buckets(template: &PrototypeTemplate, mask: &CoactivationMask) -> Result<u64> {
    let n = template.n_units();
    if mask.n_units() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: mask.n_units(),
        });
    }
    let levels = mask.code().levels();
    let mut total = 0u64;
    for i in 0..n {
        let bucket = mask.bucket(levels[i] as usize);
        total += template
            .matrix
            .row(i)
            .iter()
            .zip(bucket)
            .map(|(p, b)| (p & b).count_ones() as u64)
            .sum::<u64>();
    }
    Ok(total)
}

/// Index of the first maximum.
pub fn argmax_first<T: PartialOrd + Copy>(xs: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some((_, b)) if !(x > b) => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<u64>,
}

/// Inference bundle: reservoir, quantizer, learning rates and one template per
/// class. Optionally carries the continuous states so training can resume.
#[derive(Debug, Clone, PartialEq)]
pub struct RecapModel {
    reservoir: ReservoirWeights,
    quantizer: QuantizerSpec,
    hebb: HebbSpec,
    templates: Vec<PrototypeTemplate>,
    states: Option<Vec<PrototypeState>>,
}

impl RecapModel {
    pub fn new(
        reservoir: ReservoirWeights,
        quantizer: QuantizerSpec,
        hebb: HebbSpec,
        templates: Vec<PrototypeTemplate>,
    ) -> Result<Self> {
        hebb.validate()?;
        ensure(templates.len() == hebb.classes, "templates", "need one template per class")?;
        for (c, t) in templates.iter().enumerate() {
            ensure(t.class_id() == c, "templates", "templates must be ordered by class")?;
            if t.n_units() != reservoir.n_units() {
                return Err(Error::DimensionMismatch {
                    expected: reservoir.n_units(),
                    actual: t.n_units(),
                });
            }
        }
        Ok(RecapModel {
            reservoir,
            quantizer,
            hebb,
            templates,
            states: None,
        })
    }

    /// Trains on `dataset` in order and binarizes the resulting states.
    pub fn fit<'a, I>(reservoir: ReservoirWeights, quantizer: QuantizerSpec, hebb: HebbSpec, dataset: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f32], usize)>,
    {
        let states = train_prototypes(dataset, &reservoir, &quantizer, &hebb)?;
        Self::from_states(reservoir, quantizer, hebb, states)
    }

    pub fn from_states(
        reservoir: ReservoirWeights,
        quantizer: QuantizerSpec,
        hebb: HebbSpec,
        states: Vec<PrototypeState>,
    ) -> Result<Self> {
        let learner = PrototypeLearner::resume(states, hebb)?;
        let templates = learner.templates();
        let mut model = Self::new(reservoir, quantizer, hebb, templates)?;
        model.states = Some(learner.into_states());
        Ok(model)
    }

    pub fn with_states(mut self, states: Option<Vec<PrototypeState>>) -> Result<Self> {
        if let Some(s) = &states {
            ensure(s.len() == self.hebb.classes, "states", "need one state per class")?;
        }
        self.states = states;
        Ok(self)
    }

    pub fn reservoir(&self) -> &ReservoirWeights {
        &self.reservoir
    }

    pub fn quantizer(&self) -> &QuantizerSpec {
        &self.quantizer
    }

    pub fn hebb(&self) -> &HebbSpec {
        &self.hebb
    }

    pub fn templates(&self) -> &[PrototypeTemplate] {
        &self.templates
    }

    pub fn states(&self) -> Option<&[PrototypeState]> {
        self.states.as_deref()
    }

    pub fn encode(&self, input: &[f32]) -> Result<CoactivationMask> {
        let state = self.reservoir.run_to_average(input)?;
        Ok(build_mask(&quantize(&state, &self.quantizer)?))
    }

    pub fn scores(&self, mask: &CoactivationMask) -> Result<Vec<u64>> {
        self.templates.iter().map(|t| score(t, mask)).collect()
    }

    pub fn predict_mask(&self, mask: &CoactivationMask) -> Result<Prediction> {
        let scores = self.scores(mask)?;
        let class = argmax_first(&scores).ok_or(Error::Empty)?;
        Ok(Prediction { class, scores })
    }

    pub fn predict(&self, input: &[f32]) -> Result<Prediction> {
        self.predict_mask(&self.encode(input)?)
    }
}

pub fn predict(model: &RecapModel, input: &[f32]) -> Result<Prediction> {
    model.predict(input)
}
