use super::config::{ExperimentConfig, TutorKind};
use super::metrics::{Event, RunMetrics, SessionDiagnostics};
use super::student::GroundTruthStudent;
use crate::error::{Error, Result};
use crate::estimation::{fit_session, FitData, FitState, Predictor, PriorDistributions};
use crate::model::{Family, InnerModel, ParamSet};
use crate::optim::LinearCycle;
use crate::rl::RlTutor;
use crate::rng::substream;
use crate::tutors::{DecisionContext, LeitnerTutor, RandomTutor, ThresholdTutor, Tutor};

/// Single-learner parameters with every entry at its prior mean.
pub fn prior_mean_params(priors: &PriorDistributions, cfg: &ExperimentConfig) -> ParamSet {
    ParamSet::zeros(1, cfg.n_items, cfg.n_skills, cfg.windows.len())
        .filled_like(|f: Family| priors.get(f).mu)
}

/// Simulates one student taught by `cfg.tutor` under `seed`.
///
/// Each session first refits the inner model on all answers so far and
/// retrains the policy against it (RL tutor only), then presents the
/// session's items. After every presentation the student's true recall of
/// all items is recorded.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed: u64,
    priors: Option<&PriorDistributions>,
) -> Result<RunMetrics> {
    cfg.validate()?;
    let bank = cfg.bank()?;
    let schedule = &cfg.schedule;
    let truth = cfg
        .student_generator
        .sample(1, &bank, &cfg.windows, &mut substream(seed, "student"));
    let mut student = GroundTruthStudent::new(truth, bank.clone(), cfg.windows.clone(), 0)?;
    let mut responses = substream(seed, "responses");

    let mut baseline: Option<Box<dyn Tutor>> = None;
    let mut rl: Option<(RlTutor, &PriorDistributions, FitState)> = None;
    match cfg.tutor {
        TutorKind::Random => {
            baseline = Some(Box::new(RandomTutor::new(cfg.n_items, substream(seed, "tutor"))))
        }
        TutorKind::Leitner => {
            baseline = Some(Box::new(LeitnerTutor::new(cfg.n_items, cfg.leitner_intervals.clone())?))
        }
        TutorKind::Threshold => baseline = Some(Box::new(ThresholdTutor::new(cfg.threshold)?)),
        TutorKind::Rl => {
            let priors = priors.ok_or_else(|| {
                Error::Config("the rl tutor needs priors; run `pretrain` first".into())
            })?;
            let tutor = RlTutor::new(
                cfg.n_items,
                cfg.hidden,
                cfg.ppo.clone(),
                schedule.clone(),
                cfg.probe_offset_secs,
                seed,
            )?;
            rl = Some((tutor, priors, FitState::new(prior_mean_params(priors, cfg))));
        }
    }
    let lr = LinearCycle {
        base: cfg.estimation.lr,
        period: (cfg.estimation.epochs * cfg.estimation.lr_period_sessions) as u64,
    };

    let mut recall = Vec::with_capacity(schedule.n_steps());
    let mut events = Vec::with_capacity(schedule.n_steps());
    let mut diagnostics = Vec::with_capacity(schedule.n_sessions());
    let mut fitted_sessions = 0u64;

    for session in 0..schedule.n_sessions() {
        let mut diag = SessionDiagnostics {
            session,
            ..Default::default()
        };
        if let Some((tutor, priors, state)) = rl.as_mut() {
            if !student.history().is_empty() {
                let data = FitData::new(
                    student.history(),
                    &bank,
                    &cfg.windows,
                    Predictor::Inner(cfg.memory),
                )?;
                let offset = fitted_sessions * cfg.estimation.epochs as u64;
                let (next, report) = fit_session(state, &data, priors, &cfg.loss, cfg.estimation.epochs, |e| {
                    lr.at(offset + e as u64)
                })?;
                *state = next;
                fitted_sessions += 1;
                diag.fit_loss_before = Some(report.loss_before);
                diag.fit_loss_after = Some(report.loss_after);
            }
            let model = InnerModel::new(state.params.clone(), bank.clone(), cfg.windows.clone(), cfg.memory, 0)?;
            let stats = tutor.optimize(model, session)?;
            if let Some(last) = stats.last() {
                diag.rollout_reward = Some(last.mean_reward);
                diag.policy_entropy = Some(last.loss.entropy);
            }
        }
        diagnostics.push(diag);

        for k in 0..schedule.items_per_session {
            let step = session * schedule.items_per_session + k;
            let now = schedule.step_time(step);
            let t: &mut dyn Tutor = match (rl.as_mut(), baseline.as_mut()) {
                (Some((tutor, _, _)), _) => tutor,
                (None, Some(b)) => b.as_mut(),
                (None, None) => unreachable!("a tutor is always constructed"),
            };
            let oracle = if t.uses_oracle() {
                Some(student.recall_all(now)?)
            } else {
                None
            };
            let ctx = DecisionContext {
                session,
                step,
                now,
                oracle_recall: oracle.as_deref(),
            };
            let decision = t.next(&ctx)?;
            if decision.item >= cfg.n_items {
                return Err(Error::invalid(format!("tutor chose item {}", decision.item)));
            }
            let record = student.answer(decision.item, now, &mut responses)?;
            t.observe(&record, &ctx)?;
            let row = student.recall_all(now + cfg.probe_offset_secs)?;
            events.push(Event {
                seed,
                session,
                step,
                timestamp: now,
                item: record.item,
                correct: record.correct,
                mean_recall: row.iter().sum::<f64>() / row.len() as f64,
                oracle_access: t.uses_oracle(),
            });
            recall.push(row);
        }
    }

    Ok(RunMetrics {
        tutor: cfg.tutor,
        seed,
        items_per_session: schedule.items_per_session,
        recall,
        events,
        diagnostics,
        inner_params: rl.as_ref().map(|(_, _, s)| s.params.clone()),
        policy: rl.map(|(t, _, _)| t.policy().clone()),
    })
}
