//! Parallel experience collection.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use super::gae::compute_gae;
use super::net::PolicyParams;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// An episodic environment the policy can be rolled out against.
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Starts a new episode and returns its first observation.
    fn reset(&mut self, rng: &mut Rng) -> Result<Vec<f64>>;
    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<Transition>;
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// One environment copy with its private random stream. Episodes carry over
/// between successive collection calls.
#[derive(Debug, Clone)]
pub struct Worker<E> {
    pub env: E,
    rng: Rng,
    obs: Vec<f64>,
    hidden: Vec<f64>,
    needs_reset: bool,
}

impl<E: Environment> Worker<E> {
    pub fn new(env: E, rng: Rng) -> Self {
        Worker {
            env,
            rng,
            obs: Vec::new(),
            hidden: Vec::new(),
            needs_reset: true,
        }
    }

    fn collect(&mut self, policy: &PolicyParams, steps: usize) -> Result<Segment> {
        let hidden_size = policy.shape().hidden;
        let mut seg = Segment::with_capacity(steps);
        for _ in 0..steps {
            let start = self.needs_reset;
            if start {
                self.obs = self.env.reset(&mut self.rng)?;
                self.hidden = vec![0.0; hidden_size];
                self.needs_reset = false;
            }
            let out = policy.step(&self.obs, &self.hidden)?;
            let action = sample_action(&out.probs, &mut self.rng)?;
            let tr = self.env.step(action, &mut self.rng)?;
            if !tr.reward.is_finite() {
                return Err(Error::NonFinite(format!("reward {}", tr.reward)));
            }
            seg.obs.push(std::mem::take(&mut self.obs));
            seg.hidden.push(std::mem::replace(&mut self.hidden, out.hidden));
            seg.starts.push(start);
            seg.actions.push(action);
            seg.log_probs.push(out.probs[action].ln());
            seg.values.push(out.value);
            seg.rewards.push(tr.reward);
            seg.dones.push(tr.done);
            self.obs = tr.obs;
            self.needs_reset = tr.done;
        }
        seg.bootstrap = if self.needs_reset || steps == 0 {
            0.0
        } else {
            policy.step(&self.obs, &self.hidden)?.value
        };
        Ok(seg)
    }
}

/// Draws an index from a probability vector.
pub fn sample_action(probs: &[f64], rng: &mut Rng) -> Result<usize> {
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::NonFinite(format!("action distribution: {e}")))?;
    Ok(dist.sample(rng))
}

/// Contiguous steps from one worker.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Segment {
    pub obs: Vec<Vec<f64>>,
    /// Recurrent state before each step.
    pub hidden: Vec<Vec<f64>>,
    /// First step of an episode.
    pub starts: Vec<bool>,
    pub actions: Vec<usize>,
    /// Behaviour-policy log-probabilities.
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Last step of an episode.
    pub dones: Vec<bool>,
    pub bootstrap: f64,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Segment {
    fn with_capacity(n: usize) -> Self {
        Segment {
            obs: Vec::with_capacity(n),
            hidden: Vec::with_capacity(n),
            starts: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Segments from all workers, concatenated in worker order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryBatch {
    pub segments: Vec<Segment>,
}

impl TrajectoryBatch {
    pub fn len(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(|s| s.rewards.iter().copied())
    }

    pub fn mean_reward(&self) -> f64 {
        let n = self.len();
        if n == 0 {
            0.0
        } else {
            self.rewards().sum::<f64>() / n as f64
        }
    }

    /// Fills advantages and returns in every segment.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) -> Result<()> {
        for seg in &mut self.segments {
            let (a, r) = compute_gae(&seg.rewards, &seg.values, &seg.dones, seg.bootstrap, gamma, lambda)?;
            seg.advantages = a;
            seg.returns = r;
        }
        Ok(())
    }

    /// Rescales advantages to zero mean and unit variance over the batch.
    pub fn normalize_advantages(&mut self) {
        let n = self.len();
        if n == 0 {
            return;
        }
        let all = || self.segments.iter().flat_map(|s| s.advantages.iter().copied());
        let mean = all().sum::<f64>() / n as f64;
        let var = all().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = 1.0 / (var.sqrt() + 1e-8);
        for seg in &mut self.segments {
            for a in &mut seg.advantages {
                *a = (*a - mean) * scale;
            }
        }
    }
}

/// Splits `horizon` steps over the workers (earlier workers take the
/// remainder) and collects them in parallel. Concatenation follows worker
/// order, so the result does not depend on the thread count.
pub fn collect_rollouts<E: Environment>(
    policy: &PolicyParams,
    workers: &mut [Worker<E>],
    horizon: usize,
) -> Result<TrajectoryBatch> {
    if workers.is_empty() {
        return Err(Error::invalid("rollout needs at least one worker"));
    }
    let n = workers.len();
    let segments = workers
        .par_iter_mut()
        .enumerate()
        .map(|(w, worker)| {
            let steps = horizon / n + usize::from(w < horizon % n);
            worker.collect(policy, steps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryBatch { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::env::BanditEnv;
    use crate::rl::net::NetShape;
    use crate::rng::substream;

    fn policy() -> PolicyParams {
        let shape = NetShape {
            input: 3,
            hidden: 4,
            actions: 2,
        };
        PolicyParams::init(shape, &mut substream(0, "policy-init"))
    }

    fn workers(n: usize) -> Vec<Worker<BanditEnv>> {
        (0..n)
            .map(|w| Worker::new(BanditEnv::new(5), substream(1, &format!("rollout-w{w}"))))
            .collect()
    }

    #[test]
    fn horizon_is_split_over_workers() {
        let p = policy();
        let b = collect_rollouts(&p, &mut workers(1), 10).unwrap();
        assert_eq!(b.len(), 10);
        let b = collect_rollouts(&p, &mut workers(3), 10).unwrap();
        let lens: Vec<_> = b.segments.iter().map(Segment::len).collect();
        assert_eq!(lens, vec![4, 3, 3]);
    }

    #[test]
    fn same_seed_same_batch() {
        let p = policy();
        let a = collect_rollouts(&p, &mut workers(4), 40).unwrap();
        let b = collect_rollouts(&p, &mut workers(4), 40).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn worker_streams_do_not_depend_on_worker_count_or_threads() {
        let p = policy();
        let two = collect_rollouts(&p, &mut workers(2), 20).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let four = pool.install(|| collect_rollouts(&p, &mut workers(4), 40).unwrap());
        assert_eq!(two.segments[..], four.segments[..2]);
    }

    #[test]
    fn episode_boundaries_reset_hidden_state() {
        let p = policy();
        let b = collect_rollouts(&p, &mut workers(1), 12).unwrap();
        let seg = &b.segments[0];
        for t in 0..seg.len() {
            assert_eq!(seg.starts[t], t % 5 == 0);
            assert_eq!(seg.dones[t], t % 5 == 4);
            if seg.starts[t] {
                assert!(seg.hidden[t].iter().all(|&h| h == 0.0));
            }
        }
        // the segment ends mid-episode, so the tail is bootstrapped
        assert!(seg.bootstrap != 0.0);
    }
}
