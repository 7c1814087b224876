//! Training and evaluation over whole datasets.
//!
//! Rollouts and mask construction run in parallel over fixed-size chunks;
//! prototype updates then run per class in dataset order, with classes in
//! parallel. Results do not depend on the thread count.

use rayon::prelude::*;
use recap_core::corruptions::{self, CorruptionKind, ImageBatch};
use recap_core::encoding::{build_mask, quantize, CoactivationMask, QuantizerSpec};
use recap_core::prototype::{binarize_with_stats, BinarizeStats, HebbSpec, PrototypeLearner, RecapModel};
use recap_core::reservoir::{ReservoirWeights, StateVector};
use recap_core::ridge::{RidgeAccumulator, RidgeModel, RidgeSpec};

use crate::container::Model;
use crate::dataset::Dataset;
use crate::error::{data, Result};

const CHUNK: usize = 512;

pub fn compute_states(reservoir: &ReservoirWeights, batch: &ImageBatch) -> Result<Vec<StateVector>> {
    let images: Vec<&[f32]> = batch.images().collect();
    Ok(images
        .par_iter()
        .map(|x| reservoir.run_to_average(x))
        .collect::<Result<Vec<_>, _>>()?)
}

fn masks_for(reservoir: &ReservoirWeights, quantizer: &QuantizerSpec, images: &[&[f32]]) -> Result<Vec<CoactivationMask>> {
    Ok(images
        .par_iter()
        .map(|x| {
            let s = reservoir.run_to_average(x)?;
            Ok(build_mask(&quantize(&s, quantizer)?))
        })
        .collect::<Result<Vec<_>, recap_core::Error>>()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub class: usize,
    pub updates: u64,
    pub density: f64,
    pub threshold: f32,
    pub stats: BinarizeStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub samples: usize,
    pub epochs: usize,
    pub classes: Vec<ClassSummary>,
}

/// Trains prototypes over `epochs` passes of `dataset` in order.
pub fn train_recap(
    reservoir: ReservoirWeights,
    quantizer: QuantizerSpec,
    hebb: HebbSpec,
    dataset: &Dataset,
    epochs: usize,
    keep_states: bool,
) -> Result<(RecapModel, TrainSummary)> {
    hebb.validate()?;
    if dataset.is_empty() {
        log::warn!("empty training set; every prototype stays at zero");
    }
    if let Some(&bad) = dataset.labels().iter().find(|&&l| l as usize >= hebb.classes) {
        return Err(recap_core::Error::UnknownClass {
            label: bad as usize,
            classes: hebb.classes,
        }
        .into());
    }
    let mut learner = PrototypeLearner::new(reservoir.n_units(), hebb)?;
    let images: Vec<&[f32]> = dataset.images().images().collect();
    let labels = dataset.labels();
    for epoch in 0..epochs {
        for (c, chunk) in images.chunks(CHUNK).enumerate() {
            let start = c * CHUNK;
            let masks = masks_for(&reservoir, &quantizer, chunk)?;
            let chunk_labels = &labels[start..start + chunk.len()];
            // One sequential pass per class, classes side by side.
            let states = learner.clone().into_states();
            let updated = states
                .into_par_iter()
                .map(|mut state| {
                    let class = state.class_id();
                    for (m, &l) in masks.iter().zip(chunk_labels) {
                        if l as usize == class {
                            state.update(m, class, &hebb)?;
                        }
                    }
                    Ok(state)
                })
                .collect::<Result<Vec<_>, recap_core::Error>>()?;
            learner = PrototypeLearner::resume(updated, hebb)?;
            log::debug!("epoch {epoch}: {} of {} samples", start + chunk.len(), images.len());
        }
    }
    let mut classes = Vec::with_capacity(hebb.classes);
    for s in learner.states() {
        let (t, stats) = binarize_with_stats(s, hebb.sparsity_fraction);
        classes.push(ClassSummary {
            class: s.class_id(),
            updates: s.update_count(),
            density: t.density(),
            threshold: t.threshold(),
            stats,
        });
    }
    let states = learner.into_states();
    let mut model = RecapModel::from_states(reservoir, quantizer, hebb, states)?;
    if !keep_states {
        model = model.with_states(None)?;
    }
    Ok((
        model,
        TrainSummary {
            samples: dataset.len(),
            epochs,
            classes,
        },
    ))
}

/// Fits the ridge readout on time-averaged states of `dataset`.
pub fn train_ridge(reservoir: ReservoirWeights, spec: RidgeSpec, classes: usize, dataset: &Dataset) -> Result<RidgeModel> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(data("empty training set"));
    }
    let mut acc = RidgeAccumulator::new(reservoir.n_units(), classes, spec.include_bias);
    let images: Vec<&[f32]> = dataset.images().images().collect();
    let labels = dataset.labels();
    for (c, chunk) in images.chunks(CHUNK).enumerate() {
        let states = chunk
            .par_iter()
            .map(|x| reservoir.run_to_average(x))
            .collect::<Result<Vec<_>, _>>()?;
        for (s, &l) in states.iter().zip(&labels[c * CHUNK..]) {
            acc.add(s.values(), l as usize)?;
        }
    }
    let readout = acc.solve(spec.regularization)?;
    Ok(RidgeModel::new(reservoir, spec, readout)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<usize>,
    pub labels: Vec<u8>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
}

impl Evaluation {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn errors(&self) -> usize {
        self.predictions
            .iter()
            .zip(&self.labels)
            .filter(|(p, &l)| **p != l as usize)
            .count()
    }

    pub fn error_rate(&self) -> f64 {
        self.errors() as f64 / self.len().max(1) as f64
    }

    pub fn accuracy(&self) -> f64 {
        1.0 - self.error_rate()
    }
}

pub fn evaluate(model: &Model, batch: &ImageBatch) -> Result<Evaluation> {
    if batch.is_empty() {
        return Err(data("empty evaluation set"));
    }
    let classes = model.classes();
    let images: Vec<&[f32]> = batch.images().collect();
    let predictions = images
        .par_iter()
        .map(|x| model.predict(x).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    let mut confusion = vec![vec![0u64; classes]; classes];
    for (&p, &l) in predictions.iter().zip(batch.labels()) {
        if (l as usize) < classes {
            confusion[l as usize][p] += 1;
        }
    }
    Ok(Evaluation {
        predictions,
        labels: batch.labels().to_vec(),
        confusion,
    })
}

/// Native corruption of a batch, images in parallel.
pub fn corrupt_batch(batch: &ImageBatch, kind: CorruptionKind, severity: u8, seed: u64) -> Result<ImageBatch> {
    let (h, w) = (batch.height(), batch.width());
    let images: Vec<&[f32]> = batch.images().collect();
    let out = images
        .par_iter()
        .enumerate()
        .map(|(i, x)| corruptions::corrupt_image(x, h, w, kind, severity, seed, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let pixels = out.concat();
    Ok(ImageBatch::new(
        h,
        w,
        pixels,
        batch.labels().to_vec(),
        corruptions::Provenance::Corrupted { kind, severity, seed },
    )?)
}
