//! Clipped-surrogate policy optimisation over truncated recurrent sequences.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;

use super::net::{log_softmax, PolicyParams};
use super::rollout::TrajectoryBatch;
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub clip: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Steps collected per update iteration, over all workers.
    pub horizon: usize,
    pub workers: usize,
    /// Steps per minibatch.
    pub minibatch: usize,
    pub epochs: usize,
    /// Length of the truncated sequences minibatches are built from.
    pub seq_len: usize,
    pub lr: f64,
    pub iters_per_session: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip: 0.2,
            vf_coef: 0.5,
            ent_coef: 0.01,
            gamma: 0.85,
            gae_lambda: 0.95,
            horizon: 4000,
            workers: 20,
            minibatch: 200,
            epochs: 10,
            seq_len: 10,
            lr: 1e-4,
            iters_per_session: 3,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ppo.horizon", self.horizon),
            ("ppo.workers", self.workers),
            ("ppo.minibatch", self.minibatch),
            ("ppo.epochs", self.epochs),
            ("ppo.seq_len", self.seq_len),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        if self.workers > self.horizon {
            return Err(Error::Config("ppo.workers must not exceed ppo.horizon".into()));
        }
        let unit = [("ppo.gamma", self.gamma), ("ppo.gae_lambda", self.gae_lambda)];
        for (key, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{key} must lie in [0, 1], got {v}")));
            }
        }
        let nonneg = [
            ("ppo.clip", self.clip),
            ("ppo.vf_coef", self.vf_coef),
            ("ppo.ent_coef", self.ent_coef),
            ("ppo.lr", self.lr),
        ];
        for (key, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{key} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Sequences per minibatch.
    pub fn chunks_per_minibatch(&self) -> usize {
        (self.minibatch / self.seq_len).max(1)
    }

    /// Optimizer steps taken by one update iteration.
    pub fn updates_per_iteration(&self) -> usize {
        let per_worker = self.horizon.div_ceil(self.workers);
        let chunks = self.workers * per_worker.div_ceil(self.seq_len);
        self.epochs * chunks.div_ceil(self.chunks_per_minibatch())
    }
}

/// A slice `start..start+len` of segment `segment`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub segment: usize,
    pub start: usize,
    pub len: usize,
}

/// Splits every segment into sequences of at most `seq_len` steps.
pub fn chunk_batch(batch: &TrajectoryBatch, seq_len: usize) -> Vec<Chunk> {
    let mut out = Vec::new();
    for (segment, seg) in batch.segments.iter().enumerate() {
        let mut start = 0;
        while start < seg.len() {
            let len = seq_len.min(seg.len() - start);
            out.push(Chunk { segment, start, len });
            start += len;
        }
    }
    out
}

/// Time-major padded tensors for a group of chunks.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub obs: Vec<Array2<f64>>,
    pub h0: Array2<f64>,
    pub resets: Vec<Vec<bool>>,
    pub valid: Vec<Vec<bool>>,
    pub actions: Vec<Vec<usize>>,
    pub old_log_probs: Vec<Vec<f64>>,
    pub advantages: Vec<Vec<f64>>,
    pub returns: Vec<Vec<f64>>,
    pub n_valid: usize,
}

impl Minibatch {
    pub fn gather(batch: &TrajectoryBatch, chunks: &[Chunk]) -> Result<Self> {
        let b = chunks.len();
        let t_max = chunks.iter().map(|c| c.len).max().unwrap_or(0);
        let first = chunks
            .first()
            .and_then(|c| batch.segments.get(c.segment))
            .ok_or_else(|| Error::invalid("empty minibatch"))?;
        let d = first.obs[0].len();
        let h = first.hidden[0].len();
        let mut mb = Minibatch {
            obs: vec![Array2::zeros((b, d)); t_max],
            h0: Array2::zeros((b, h)),
            resets: vec![vec![false; b]; t_max],
            valid: vec![vec![false; b]; t_max],
            actions: vec![vec![0; b]; t_max],
            old_log_probs: vec![vec![0.0; b]; t_max],
            advantages: vec![vec![0.0; b]; t_max],
            returns: vec![vec![0.0; b]; t_max],
            n_valid: 0,
        };
        for (col, c) in chunks.iter().enumerate() {
            let seg = &batch.segments[c.segment];
            if seg.advantages.len() != seg.len() {
                return Err(Error::invalid("advantages have not been computed"));
            }
            mb.h0.row_mut(col).assign(&Array1::from(seg.hidden[c.start].clone()));
            for t in 0..c.len {
                let i = c.start + t;
                mb.obs[t].row_mut(col).assign(&Array1::from(seg.obs[i].clone()));
                mb.resets[t][col] = seg.starts[i];
                mb.valid[t][col] = true;
                mb.actions[t][col] = seg.actions[i];
                mb.old_log_probs[t][col] = seg.log_probs[i];
                mb.advantages[t][col] = seg.advantages[i];
                mb.returns[t][col] = seg.returns[i];
            }
            mb.n_valid += c.len;
        }
        Ok(mb)
    }
}

/// Minibatch loss components, each averaged over valid steps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Loss `−surrogate + vf·½(V−R)² − ent·H` and its gradient.
pub fn ppo_loss_and_grad(
    params: &PolicyParams,
    mb: &Minibatch,
    cfg: &PpoConfig,
) -> Result<(LossStats, PolicyParams)> {
    let (stats, dlogits, dvalues, fwd) = loss_terms(params, mb, cfg)?;
    let grad = params.backward_seq(&fwd, &dlogits, &dvalues);
    Ok((stats, grad))
}

/// Loss only; used by gradient checks.
pub fn ppo_loss(params: &PolicyParams, mb: &Minibatch, cfg: &PpoConfig) -> Result<LossStats> {
    Ok(loss_terms(params, mb, cfg)?.0)
}

type Terms = (LossStats, Vec<Array2<f64>>, Vec<Array1<f64>>, super::net::SeqForward);

fn loss_terms(params: &PolicyParams, mb: &Minibatch, cfg: &PpoConfig) -> Result<Terms> {
    let fwd = params.forward_seq(&mb.obs, mb.h0.clone(), &mb.resets);
    let n = mb.n_valid.max(1) as f64;
    let actions = params.shape().actions;
    let mut stats = LossStats::default();
    let mut dlogits = Vec::with_capacity(mb.obs.len());
    let mut dvalues = Vec::with_capacity(mb.obs.len());
    for t in 0..mb.obs.len() {
        let b = mb.obs[t].nrows();
        let mut dl = Array2::zeros((b, actions));
        let mut dv = Array1::zeros(b);
        for col in 0..b {
            if !mb.valid[t][col] {
                continue;
            }
            let logp = log_softmax(fwd.logits[t].row(col));
            let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
            let a = mb.actions[t][col];
            let adv = mb.advantages[t][col];
            let log_ratio = logp[a] - mb.old_log_probs[t][col];
            let ratio = log_ratio.exp();
            let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
            let unclipped_obj = ratio * adv;
            let clipped_obj = clipped * adv;
            let surrogate_active = unclipped_obj <= clipped_obj;
            let entropy: f64 = -probs.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
            let v = fwd.values[t][col];
            let ret = mb.returns[t][col];

            stats.policy -= unclipped_obj.min(clipped_obj) / n;
            stats.value += 0.5 * (v - ret).powi(2) / n;
            stats.entropy += entropy / n;
            stats.approx_kl += ((ratio - 1.0) - log_ratio) / n;
            if (ratio - 1.0).abs() > cfg.clip {
                stats.clip_fraction += 1.0 / n;
            }

            let g_ratio = if surrogate_active { -adv * ratio / n } else { 0.0 };
            for k in 0..actions {
                let onehot = if k == a { 1.0 } else { 0.0 };
                dl[[col, k]] = g_ratio * (onehot - probs[k])
                    + cfg.ent_coef * probs[k] * (logp[k] + entropy) / n;
            }
            dv[col] = cfg.vf_coef * (v - ret) / n;
        }
        dlogits.push(dl);
        dvalues.push(dv);
    }
    stats.total = stats.policy + cfg.vf_coef * stats.value - cfg.ent_coef * stats.entropy;
    if !stats.total.is_finite() {
        return Err(Error::NonFinite(format!("ppo loss {}", stats.total)));
    }
    Ok((stats, dlogits, dvalues, fwd))
}

/// Policy weights with their optimizer state.
#[derive(Debug, Clone)]
pub struct PpoLearner {
    pub params: PolicyParams,
    adam: Adam,
    updates: u64,
}

impl PpoLearner {
    pub fn new(params: PolicyParams) -> Self {
        let adam = Adam::new(params.as_slice().len());
        PpoLearner {
            params,
            adam,
            updates: 0,
        }
    }

    /// Optimizer steps taken so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }
}

/// Averages over one update iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub mean_reward: f64,
    pub loss: LossStats,
    pub minibatches: usize,
}

/// One update iteration: advantages, normalisation, then `epochs` passes
/// of shuffled minibatches. `lr(k)` gives the step size of the learner's
/// `k`-th optimizer step.
pub fn ppo_update(
    learner: &mut PpoLearner,
    batch: &mut TrajectoryBatch,
    cfg: &PpoConfig,
    lr: impl Fn(u64) -> f64,
    rng: &mut Rng,
) -> Result<UpdateStats> {
    batch.compute_advantages(cfg.gamma, cfg.gae_lambda)?;
    batch.normalize_advantages();
    let mut chunks = chunk_batch(batch, cfg.seq_len);
    let per_mb = cfg.chunks_per_minibatch();
    let mut stats = UpdateStats {
        mean_reward: batch.mean_reward(),
        ..Default::default()
    };
    for _ in 0..cfg.epochs {
        chunks.shuffle(rng);
        for group in chunks.chunks(per_mb) {
            let mb = Minibatch::gather(batch, group)?;
            let (ls, grad) = ppo_loss_and_grad(&learner.params, &mb, cfg)?;
            learner
                .adam
                .step(learner.params.as_mut_slice(), grad.as_slice(), lr(learner.updates));
            learner.updates += 1;
            if learner.params.as_slice().iter().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite("policy weights after update".into()));
            }
            stats.loss.policy += ls.policy;
            stats.loss.value += ls.value;
            stats.loss.entropy += ls.entropy;
            stats.loss.total += ls.total;
            stats.loss.approx_kl += ls.approx_kl;
            stats.loss.clip_fraction += ls.clip_fraction;
            stats.minibatches += 1;
        }
    }
    if stats.minibatches > 0 {
        let m = stats.minibatches as f64;
        stats.loss.policy /= m;
        stats.loss.value /= m;
        stats.loss.entropy /= m;
        stats.loss.total /= m;
        stats.loss.approx_kl /= m;
        stats.loss.clip_fraction /= m;
    }
    Ok(stats)
}
