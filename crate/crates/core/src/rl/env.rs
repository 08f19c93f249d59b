//! Environments for the policy: the inner-model tutoring episode and a
//! two-armed bandit used as a learning sanity check.

use std::sync::Arc;

use super::embed::{Observation, ProjectionMatrix};
use super::reward::reward;
use super::rollout::{Environment, Transition};
use crate::error::{Error, Result};
use crate::experiment::schedule::SessionSchedule;
use crate::model::{sample_response, InnerModel, InteractionRecord, WindowCounterTable};
use crate::rng::Rng;

/// One simulated experiment against the frozen inner model.
///
/// Presentations follow `schedule`; each answer is drawn from the inner
/// model's corrected recall, and the reward is the mean log recall over all
/// items `probe_offset_secs` after the presentation.
#[derive(Debug, Clone)]
pub struct TutoringEnv {
    model: Arc<InnerModel>,
    schedule: SessionSchedule,
    projection: Arc<ProjectionMatrix>,
    probe_offset_secs: u64,
    table: WindowCounterTable,
    last_time: Option<u64>,
    step: usize,
}

impl TutoringEnv {
    pub fn new(
        model: Arc<InnerModel>,
        schedule: SessionSchedule,
        projection: Arc<ProjectionMatrix>,
        probe_offset_secs: u64,
    ) -> Result<Self> {
        schedule.validate()?;
        if projection.n_items() != model.n_items() {
            return Err(Error::Shape("projection and item bank disagree on J".into()));
        }
        Ok(TutoringEnv {
            model,
            schedule,
            projection,
            probe_offset_secs,
            table: WindowCounterTable::new(),
            last_time: None,
            step: 0,
        })
    }

    pub fn episode_len(&self) -> usize {
        self.schedule.n_steps()
    }
}

impl Environment for TutoringEnv {
    fn obs_dim(&self) -> usize {
        super::embed::observation_dim(self.model.n_items())
    }

    fn n_actions(&self) -> usize {
        self.model.n_items()
    }

    fn reset(&mut self, _rng: &mut Rng) -> Result<Vec<f64>> {
        self.table = WindowCounterTable::new();
        self.last_time = None;
        self.step = 0;
        Ok(Observation::zeros(self.model.n_items()).to_vec())
    }

    fn step(&mut self, action: usize, rng: &mut Rng) -> Result<Transition> {
        if self.step >= self.schedule.n_steps() {
            return Err(Error::invalid("episode already finished"));
        }
        let now = self.schedule.step_time(self.step);
        let p = self.model.recall(&self.table, action, now, self.last_time)?;
        let record = InteractionRecord {
            learner: self.model.learner(),
            item: action,
            timestamp: now,
            correct: sample_response(p, rng)?,
        };
        self.table.push(&record, self.model.bank())?;
        self.last_time = Some(now);
        self.step += 1;

        let probe = now + self.probe_offset_secs;
        let r = reward(&self.model.recall_all(&self.table, probe, self.last_time)?);
        let done = self.step == self.schedule.n_steps();
        let dt = if done {
            self.probe_offset_secs
        } else {
            self.schedule.step_time(self.step) - now
        };
        let obs = Observation::new(action, record.correct, dt as f64, &self.projection)?.to_vec();
        Ok(Transition { obs, reward: r, done })
    }
}

/// Two arms; arm 0 pays 1, arm 1 pays 0. The observation is the previous
/// action (one-hot) and reward.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    episode_len: usize,
    step: usize,
}

impl BanditEnv {
    pub fn new(episode_len: usize) -> Self {
        BanditEnv {
            episode_len: episode_len.max(1),
            step: 0,
        }
    }
}

impl Environment for BanditEnv {
    fn obs_dim(&self) -> usize {
        3
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, _rng: &mut Rng) -> Result<Vec<f64>> {
        self.step = 0;
        Ok(vec![0.0; 3])
    }

    fn step(&mut self, action: usize, _rng: &mut Rng) -> Result<Transition> {
        if action > 1 {
            return Err(Error::invalid(format!("bandit has two arms, got action {action}")));
        }
        self.step += 1;
        let reward = if action == 0 { 1.0 } else { 0.0 };
        let mut obs = vec![0.0; 3];
        obs[action] = 1.0;
        obs[2] = reward;
        Ok(Transition {
            obs,
            reward,
            done: self.step >= self.episode_len,
        })
    }
}

/// Outcome of [`bandit_sanity`].
#[derive(Debug, Clone, PartialEq)]
pub struct BanditReport {
    /// Probability of the paying arm at an episode start, after each iteration.
    pub prob_trace: Vec<f64>,
    /// First iteration (1-based) after which that probability exceeds 0.95.
    pub solved_at: Option<usize>,
}

/// Trains a small policy on [`BanditEnv`] for up to `max_iters` update
/// iterations, stopping once the paying arm's probability exceeds 0.95.
pub fn bandit_sanity(seed: u64, max_iters: usize) -> Result<BanditReport> {
    use super::net::{NetShape, PolicyParams};
    use super::ppo::{ppo_update, PpoConfig, PpoLearner};
    use super::rollout::{collect_rollouts, Worker};
    use crate::rng::substream;

    let cfg = PpoConfig {
        horizon: 256,
        workers: 4,
        minibatch: 64,
        seq_len: 8,
        epochs: 4,
        lr: 1e-2,
        gamma: 0.0,
        ..PpoConfig::default()
    };
    let shape = NetShape {
        input: 3,
        hidden: 16,
        actions: 2,
    };
    let mut learner = PpoLearner::new(PolicyParams::init(shape, &mut substream(seed, "policy-init")));
    let mut workers: Vec<_> = (0..cfg.workers)
        .map(|w| Worker::new(BanditEnv::new(8), substream(seed, &format!("rollout-w{w}"))))
        .collect();
    let mut rng = substream(seed, "ppo-minibatch");
    let mut report = BanditReport {
        prob_trace: Vec::new(),
        solved_at: None,
    };
    for it in 1..=max_iters {
        let mut batch = collect_rollouts(&learner.params, &mut workers, cfg.horizon)?;
        ppo_update(&mut learner, &mut batch, &cfg, |_| cfg.lr, &mut rng)?;
        let p = learner.params.step(&[0.0; 3], &[0.0; 16])?.probs[0];
        report.prob_trace.push(p);
        if p > 0.95 {
            report.solved_at = Some(it);
            break;
        }
    }
    Ok(report)
}
