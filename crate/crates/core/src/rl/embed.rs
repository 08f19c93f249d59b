//! Observation encoding for the recurrent policy.
//!
//! The previous presentation is one-hot encoded over `2J` slots (item ×
//! outcome) and compressed by a frozen Gaussian random projection; the time
//! since the previous interaction enters as a log, routed by outcome.

use ndarray::{Array2, ArrayView1};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// `⌈log₂(2J)⌉`, at least 1.
pub fn embed_dim(n_items: usize) -> usize {
    let slots = 2 * n_items.max(1);
    (usize::BITS - (slots - 1).leading_zeros()) as usize
}

/// Length of a full observation vector.
pub fn observation_dim(n_items: usize) -> usize {
    embed_dim(n_items) + 3
}

/// Frozen random projection `R^{2J} → R^{⌈log₂ 2J⌉}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    n_items: usize,
    matrix: Array2<f64>,
}

impl ProjectionMatrix {
    pub fn new(n_items: usize, rng: &mut Rng) -> Self {
        let dim = embed_dim(n_items);
        let matrix = Array2::from_shape_fn((dim, 2 * n_items), |_| StandardNormal.sample(rng));
        ProjectionMatrix { n_items, matrix }
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Projects an arbitrary `2J` vector.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != 2 * self.n_items {
            return Err(Error::Shape(format!(
                "projection expects {} inputs, got {}",
                2 * self.n_items,
                v.len()
            )));
        }
        Ok(self.matrix.dot(&ArrayView1::from(v)).to_vec())
    }

    /// Bit-exact fingerprint, for checking the matrix never changes.
    pub fn fingerprint(&self) -> String {
        crate::util::fingerprint_f64(self.matrix.as_slice().unwrap())
    }
}

/// The `2J` vector `[onehot(item)·(1−o); onehot(item)·o]`.
pub fn item_outcome_onehot(item: usize, correct: bool, n_items: usize) -> Result<Vec<f64>> {
    if item >= n_items {
        return Err(Error::invalid(format!("item {item} out of range ({n_items} items)")));
    }
    let mut v = vec![0.0; 2 * n_items];
    v[item + if correct { n_items } else { 0 }] = 1.0;
    Ok(v)
}

/// Compressed item/outcome code.
pub fn embed_item(item: usize, correct: bool, projection: &ProjectionMatrix) -> Result<Vec<f64>> {
    let v = item_outcome_onehot(item, correct, projection.n_items())?;
    projection.project(&v)
}

/// `(ln Δt·(1−o), ln Δt·o)` with Δt clamped to at least one second.
pub fn embed_time(dt_secs: f64, correct: bool) -> [f64; 2] {
    let l = dt_secs.max(1.0).ln();
    if correct {
        [0.0, l]
    } else {
        [l, 0.0]
    }
}

/// Network input for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub item_embed: Vec<f64>,
    pub time_embed: [f64; 2],
    pub outcome: f64,
}

impl Observation {
    /// Observation of the previous presentation.
    pub fn new(
        item: usize,
        correct: bool,
        dt_secs: f64,
        projection: &ProjectionMatrix,
    ) -> Result<Self> {
        Ok(Observation {
            item_embed: embed_item(item, correct, projection)?,
            time_embed: embed_time(dt_secs, correct),
            outcome: if correct { 1.0 } else { 0.0 },
        })
    }

    /// All-zero observation used before the first presentation of an episode.
    pub fn zeros(n_items: usize) -> Self {
        Observation {
            item_embed: vec![0.0; embed_dim(n_items)],
            time_embed: [0.0; 2],
            outcome: 0.0,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.item_embed.clone();
        v.extend_from_slice(&self.time_embed);
        v.push(self.outcome);
        v
    }
}
