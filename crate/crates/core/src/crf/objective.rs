//! Regularized negative log-likelihood and its gradient.
//!
//! Sentences are processed in fixed-size chunks. Each chunk produces a sparse
//! partial gradient (only the feature rows it touches); partials are then
//! added into the dense gradient in chunk order, so the result does not depend
//! on the execution strategy or thread count.

use std::borrow::Borrow;

use super::model::{unary_scores, CrfModel, FeatureVector};
use super::lattice::Potentials;
use crate::exec::Execution;

/// Sentences per gradient chunk.
pub const GRADIENT_CHUNK: usize = 32;

/// A featurized training sentence with gold label indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub features: Vec<FeatureVector>,
    pub gold: Vec<usize>,
}

/// Gradient of the data term restricted to the rows it touches.
#[derive(Clone, Debug)]
pub(crate) struct SparseGradient {
    pub nll: f64,
    /// Sorted, distinct feature ids.
    pub ids: Vec<u32>,
    /// `ids.len() x m`.
    pub emission: Vec<f64>,
    pub transition: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

pub(crate) struct Layout {
    pub labels: usize,
    pub features: usize,
}

impl Layout {
    pub fn of(model: &CrfModel) -> Self {
        Layout {
            labels: model.label_count(),
            features: model.feature_count(),
        }
    }

    pub fn emission_len(&self) -> usize {
        self.features * self.labels
    }

    pub fn len(&self) -> usize {
        super::model::parameter_count(self.features, self.labels)
    }
}

/// Data-term NLL and sparse gradient of `instances` at `scale * weights`.
pub(crate) fn sparse_gradient<I: Borrow<Instance>>(
    weights: &[f64],
    scale: f64,
    layout: &Layout,
    instances: &[I],
) -> SparseGradient {
    let m = layout.labels;
    let e = layout.emission_len();
    let scaled = |range: std::ops::Range<usize>| -> Vec<f64> {
        weights[range].iter().map(|w| w * scale).collect()
    };
    let transition = scaled(e..e + m * m);
    let start = scaled(e + m * m..e + m * m + m);
    let end = scaled(e + m * m + m..e + m * m + 2 * m);

    let mut ids: Vec<u32> = instances
        .iter()
        .flat_map(|inst| inst.borrow().features.iter())
        .flat_map(|fv| fv.entries.iter().map(|&(f, _)| f))
        .collect();
    ids.sort_unstable();
    ids.dedup();

    let mut g = SparseGradient {
        nll: 0.0,
        emission: vec![0.0; ids.len() * m],
        ids,
        transition: vec![0.0; m * m],
        start: vec![0.0; m],
        end: vec![0.0; m],
    };

    for inst in instances {
        let inst = inst.borrow();
        let n = inst.features.len();
        if n == 0 {
            continue;
        }
        let unary = unary_scores(weights, m, scale, &inst.features);
        let pot = Potentials {
            labels: m,
            unary: &unary,
            transition: &transition,
            start: &start,
            end: &end,
        };
        let (marg, log_z) = pot.marginals();
        g.nll += log_z - pot.score(&inst.gold);

        for (i, fv) in inst.features.iter().enumerate() {
            let p = marg.node_row(i);
            let gold = inst.gold[i];
            for &(f, v) in &fv.entries {
                let row = g.ids.binary_search(&f).unwrap();
                let slot = &mut g.emission[row * m..(row + 1) * m];
                for (y, s) in slot.iter_mut().enumerate() {
                    *s += v * p[y];
                }
                slot[gold] -= v;
            }
        }
        for i in 0..n - 1 {
            for (s, p) in g.transition.iter_mut().zip(marg.edge_block(i)) {
                *s += p;
            }
            g.transition[inst.gold[i] * m + inst.gold[i + 1]] -= 1.0;
        }
        for (s, p) in g.start.iter_mut().zip(marg.node_row(0)) {
            *s += p;
        }
        g.start[inst.gold[0]] -= 1.0;
        for (s, p) in g.end.iter_mut().zip(marg.node_row(n - 1)) {
            *s += p;
        }
        g.end[inst.gold[n - 1]] -= 1.0;
    }
    g
}

impl SparseGradient {
    /// Adds `factor * self` into a dense parameter-shaped vector.
    pub fn add_to(&self, dense: &mut [f64], layout: &Layout, factor: f64) {
        let m = layout.labels;
        let e = layout.emission_len();
        for (row, &f) in self.ids.iter().enumerate() {
            let dst = &mut dense[f as usize * m..(f as usize + 1) * m];
            for (d, s) in dst.iter_mut().zip(&self.emission[row * m..(row + 1) * m]) {
                *d += factor * s;
            }
        }
        let tail = self.transition.iter().chain(&self.start).chain(&self.end);
        for (d, s) in dense[e..].iter_mut().zip(tail) {
            *d += factor * s;
        }
    }
}

/// Full objective at `weights`: summed NLL plus `l2 / 2 * |w|^2`, and its gradient.
pub(crate) fn objective(
    weights: &[f64],
    layout: &Layout,
    l2: f64,
    instances: &[Instance],
    exec: Execution,
) -> (f64, Vec<f64>) {
    let partials = exec.map_chunks(instances, GRADIENT_CHUNK, |chunk| {
        sparse_gradient(weights, 1.0, layout, chunk)
    });
    let mut grad = vec![0.0; layout.len()];
    let mut nll = 0.0;
    for p in &partials {
        nll += p.nll;
        p.add_to(&mut grad, layout, 1.0);
    }
    if l2 > 0.0 {
        let mut sq = 0.0;
        for (g, w) in grad.iter_mut().zip(weights) {
            *g += l2 * w;
            sq += w * w;
        }
        nll += 0.5 * l2 * sq;
    }
    (nll, grad)
}

/// Regularized NLL of `batch` under `model` and its dense gradient, laid out
/// like [`CrfModel::weights`].
pub fn nll_and_gradient(model: &CrfModel, batch: &[Instance], exec: Execution) -> (f64, Vec<f64>) {
    objective(model.weights(), &Layout::of(model), model.l2(), batch, exec)
}
