//! The deployed reinforcement-learning tutor.

use std::path::Path;
use std::sync::Arc;

use super::embed::{observation_dim, Observation, ProjectionMatrix};
use super::env::TutoringEnv;
use super::net::{NetShape, PolicyParams};
use super::ppo::{ppo_update, PpoConfig, PpoLearner, UpdateStats};
use super::rollout::{collect_rollouts, sample_action, Worker};
use crate::error::{Error, Result};
use crate::experiment::schedule::SessionSchedule;
use crate::model::{InnerModel, InteractionRecord};
use crate::optim::LinearCycle;
use crate::rng::{substream, Rng};
use crate::tutors::{DecisionContext, Tutor, TutorDecision};

/// Policy, projection and the observation stream of the real learner.
///
/// Before each session the policy is trained against the current inner
/// model; weights carry over between sessions. At instruction time items are
/// sampled from the policy, whose recurrent state is rebuilt by replaying
/// every real observation so far through the updated weights.
#[derive(Debug, Clone)]
pub struct RlTutor {
    ppo: PpoConfig,
    schedule: SessionSchedule,
    probe_offset_secs: u64,
    root_seed: u64,
    projection: Arc<ProjectionMatrix>,
    learner: PpoLearner,
    observations: Vec<Vec<f64>>,
    hidden: Vec<f64>,
    last: Option<InteractionRecord>,
    action_rng: Rng,
}

impl RlTutor {
    pub fn new(
        n_items: usize,
        hidden: usize,
        ppo: PpoConfig,
        schedule: SessionSchedule,
        probe_offset_secs: u64,
        root_seed: u64,
    ) -> Result<Self> {
        ppo.validate()?;
        schedule.validate()?;
        if hidden == 0 || n_items == 0 {
            return Err(Error::Config("net.hidden and the item count must be positive".into()));
        }
        let projection = ProjectionMatrix::new(n_items, &mut substream(root_seed, "projection"));
        let shape = NetShape {
            input: observation_dim(n_items),
            hidden,
            actions: n_items,
        };
        let params = PolicyParams::init(shape, &mut substream(root_seed, "policy-init"));
        Ok(RlTutor {
            ppo,
            schedule,
            probe_offset_secs,
            root_seed,
            projection: Arc::new(projection),
            learner: PpoLearner::new(params),
            observations: Vec::new(),
            hidden: vec![0.0; hidden],
            last: None,
            action_rng: substream(root_seed, "tutor"),
        })
    }

    pub fn policy(&self) -> &PolicyParams {
        &self.learner.params
    }

    pub fn projection(&self) -> &ProjectionMatrix {
        &self.projection
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        self.learner.params.write_checkpoint(path)
    }

    /// Trains the policy against `model` for the configured number of
    /// iterations, then refreshes the recurrent state. The learning rate
    /// falls linearly to zero over the call.
    pub fn optimize(&mut self, model: InnerModel, session: usize) -> Result<Vec<UpdateStats>> {
        if model.n_items() != self.projection.n_items() {
            return Err(Error::Shape("inner model and policy disagree on J".into()));
        }
        let model = Arc::new(model);
        let mut workers = (0..self.ppo.workers)
            .map(|w| {
                let env = TutoringEnv::new(
                    model.clone(),
                    self.schedule.clone(),
                    self.projection.clone(),
                    self.probe_offset_secs,
                )?;
                let rng = substream(self.root_seed, &format!("rollout-w{w}/session-{session}"));
                Ok(Worker::new(env, rng))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rng = substream(self.root_seed, &format!("ppo-minibatch/session-{session}"));
        let schedule = LinearCycle {
            base: self.ppo.lr,
            period: (self.ppo.iters_per_session * self.ppo.updates_per_iteration()) as u64,
        };
        let first = self.learner.updates();
        let mut stats = Vec::with_capacity(self.ppo.iters_per_session);
        for _ in 0..self.ppo.iters_per_session {
            let mut batch = collect_rollouts(&self.learner.params, &mut workers, self.ppo.horizon)?;
            let lr = |k: u64| schedule.at(k - first);
            stats.push(ppo_update(&mut self.learner, &mut batch, &self.ppo, lr, &mut rng)?);
        }
        self.replay()?;
        Ok(stats)
    }

    fn replay(&mut self) -> Result<()> {
        let mut h = vec![0.0; self.learner.params.shape().hidden];
        for obs in &self.observations {
            h = self.learner.params.step(obs, &h)?.hidden;
        }
        self.hidden = h;
        Ok(())
    }

    /// Samples the next item at time `now`.
    pub fn choose(&mut self, now: u64) -> Result<TutorDecision> {
        let obs = match &self.last {
            None => Observation::zeros(self.projection.n_items()),
            Some(r) => {
                let dt = now.checked_sub(r.timestamp).ok_or(Error::ClockOrder {
                    timestamp: r.timestamp,
                    now,
                })?;
                Observation::new(r.item, r.correct, dt as f64, &self.projection)?
            }
        }
        .to_vec();
        let out = self.learner.params.step(&obs, &self.hidden)?;
        self.hidden = out.hidden;
        self.observations.push(obs);
        Ok(TutorDecision {
            item: sample_action(&out.probs, &mut self.action_rng)?,
        })
    }
}

impl Tutor for RlTutor {
    fn name(&self) -> &'static str {
        "rl"
    }

    fn next(&mut self, ctx: &DecisionContext<'_>) -> Result<TutorDecision> {
        self.choose(ctx.now)
    }

    fn observe(&mut self, record: &InteractionRecord, _ctx: &DecisionContext<'_>) -> Result<()> {
        self.last = Some(*record);
        Ok(())
    }
}
