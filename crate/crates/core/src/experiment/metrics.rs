use super::config::TutorKind;
use crate::error::{Error, Result};
use crate::model::{InteractionRecord, ParamSet};
use crate::rl::PolicyParams;

/// One presentation in the event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub seed: u64,
    pub session: usize,
    pub step: usize,
    pub timestamp: u64,
    pub item: usize,
    pub correct: bool,
    /// Item-averaged ground-truth recall just after the presentation.
    pub mean_recall: f64,
    /// The tutor read the student's true recall to choose this item.
    pub oracle_access: bool,
}

/// Per-session training diagnostics of the RL tutor.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SessionDiagnostics {
    pub session: usize,
    pub fit_loss_before: Option<f64>,
    pub fit_loss_after: Option<f64>,
    /// Mean per-step reward of the last update iteration's rollouts.
    pub rollout_reward: Option<f64>,
    pub policy_entropy: Option<f64>,
}

/// Everything recorded for one tutor and seed.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub tutor: TutorKind,
    pub seed: u64,
    pub items_per_session: usize,
    /// Ground-truth recall of every item after every presentation.
    pub recall: Vec<Vec<f64>>,
    pub events: Vec<Event>,
    pub diagnostics: Vec<SessionDiagnostics>,
    /// Final inner model and policy of an RL run.
    pub inner_params: Option<ParamSet>,
    pub policy: Option<PolicyParams>,
}

impl RunMetrics {
    pub fn step_means(&self) -> Vec<f64> {
        self.recall
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect()
    }

    /// Mean of the step averages within each session.
    pub fn session_curve(&self) -> Vec<f64> {
        session_means(&self.step_means(), self.items_per_session)
    }

    pub fn history(&self) -> Vec<InteractionRecord> {
        self.events
            .iter()
            .map(|e| InteractionRecord {
                learner: 0,
                item: e.item,
                timestamp: e.timestamp,
                correct: e.correct,
            })
            .collect()
    }
}

/// Averages consecutive groups of `per_session` values.
pub fn session_means(step_means: &[f64], per_session: usize) -> Vec<f64> {
    step_means
        .chunks(per_session.max(1))
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Pointwise statistics over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedAggregate {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

impl SeedAggregate {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

pub fn aggregate_seeds(curves: &[Vec<f64>]) -> Result<SeedAggregate> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("no runs to aggregate"))?;
    if curves.iter().any(|c| c.len() != first.len()) {
        return Err(Error::Shape("runs have different curve lengths".into()));
    }
    let n = curves.len() as f64;
    let mut mean = Vec::with_capacity(first.len());
    let mut std = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        // shifted by the first run so identical values average exactly
        let x0 = first[i];
        let m = x0 + curves.iter().map(|c| c[i] - x0).sum::<f64>() / n;
        let var = curves.iter().map(|c| (c[i] - m).powi(2)).sum::<f64>() / n;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(SeedAggregate { mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_runs_have_zero_spread() {
        let a = aggregate_seeds(&[vec![0.3, 0.7], vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(a.std, vec![0.0, 0.0]);
        assert_eq!(a.mean, vec![0.3, 0.7]);
    }

    #[test]
    fn two_runs_average() {
        let a = aggregate_seeds(&[vec![0.4, 0.2], vec![0.6, 0.4]]).unwrap();
        assert!((a.mean[0] - 0.5).abs() < 1e-15);
        assert!((a.std[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ragged_or_empty_input_fails() {
        assert!(aggregate_seeds(&[vec![0.1], vec![0.1, 0.2]]).is_err());
        assert!(aggregate_seeds(&[]).is_err());
    }

    #[test]
    fn session_means_group_steps() {
        assert_eq!(session_means(&[1.0, 3.0, 5.0, 7.0], 2), vec![2.0, 6.0]);
    }
}
