//! Quick internal consistency checks behind the `selftest` command.

use std::sync::Arc;

use rand::Rng as _;

use crate::error::Result;
use crate::estimation::{loss_gradient, total_loss, FitData, LossConfig, Predictor, Prior, PriorDistributions};
use crate::experiment::SessionSchedule;
use crate::model::{
    count_windows, InnerModel, InteractionRecord, ItemBank, ParamSet, SensoryMemory, TimeWindows,
    WindowCounterTable,
};
use crate::rl::ppo::{chunk_batch, ppo_loss, ppo_loss_and_grad, Minibatch};
use crate::rl::{
    bandit_sanity, collect_rollouts, NetShape, PolicyParams, PpoConfig, ProjectionMatrix, TutoringEnv, Worker,
};
use crate::rng::{substream, Rng};
use crate::tutors::{leitner_observe, leitner_tutor_next, LeitnerState};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs every check in order.
pub fn run_all() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Result<(bool, String)>); 5] = [
        ("loss gradient vs finite differences", loss_gradient_check),
        ("policy gradient vs finite differences", policy_gradient_check),
        ("window counts vs brute-force recount", window_oracle_check),
        ("leitner hand trace", leitner_trace_check),
        ("bandit learning sanity", bandit_check),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

fn random_history(rng: &mut Rng, learners: usize, n_items: usize, len: usize) -> Vec<InteractionRecord> {
    let mut t = 0u64;
    (0..len)
        .map(|_| {
            t += rng.random_range(1..200_000);
            InteractionRecord {
                learner: rng.random_range(0..learners),
                item: rng.random_range(0..n_items),
                timestamp: t,
                correct: rng.random_bool(0.6),
            }
        })
        .collect()
}

fn loss_gradient_check() -> Result<(bool, String)> {
    let mut rng = substream(0, "selftest-loss");
    let bank = ItemBank::new(vec![vec![0], vec![0, 1], vec![1], vec![2]], 3)?;
    let windows = TimeWindows::default();
    let history = random_history(&mut rng, 2, 4, 40);
    let data = FitData::new(&history, &bank, &windows, Predictor::Inner(SensoryMemory::default()))?;
    let mut params = ParamSet::zeros(2, 4, 3, windows.len());
    let mut flat = params.to_flat();
    flat.iter_mut().for_each(|x| *x = rng.random_range(-0.5..0.5));
    params.set_flat(&flat)?;
    let mut previous = params.clone();
    let mut prev_flat = previous.to_flat();
    prev_flat.iter_mut().for_each(|x| *x += rng.random_range(-0.3..0.3));
    previous.set_flat(&prev_flat)?;
    let priors = PriorDistributions::from_fn(|_| Prior { mu: 0.1, sigma: 0.4 })?;
    let cfg = LossConfig::default();
    let grad = loss_gradient(&params, &data, &priors, &previous, &cfg)?.to_flat();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..flat.len() {
        let mut p = params.clone();
        let mut f = flat.clone();
        f[i] += eps;
        p.set_flat(&f)?;
        let up = total_loss(&p, &data, &priors, &previous, &cfg)?.total;
        f[i] -= 2.0 * eps;
        p.set_flat(&f)?;
        let down = total_loss(&p, &data, &priors, &previous, &cfg)?.total;
        let fd = (up - down) / (2.0 * eps);
        worst = worst.max((grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-6));
    }
    Ok((worst <= 1e-4, format!("worst relative error {worst:.2e}")))
}

fn policy_gradient_check() -> Result<(bool, String)> {
    let bank = ItemBank::round_robin(3, 2)?;
    let windows = TimeWindows::default();
    let params = ParamSet::zeros(1, 3, 2, windows.len()).filled_like(|_| 0.1);
    let model = Arc::new(InnerModel::new(params, bank, windows, SensoryMemory::default(), 0)?);
    let schedule = SessionSchedule {
        days: 1,
        items_per_session: 5,
        ..SessionSchedule::default()
    };
    let projection = Arc::new(ProjectionMatrix::new(3, &mut substream(0, "projection")));
    let shape = NetShape {
        input: crate::rl::observation_dim(3),
        hidden: 8,
        actions: 3,
    };
    let behaviour = PolicyParams::init(shape, &mut substream(0, "policy-init"));
    let mut workers = (0..2)
        .map(|w| {
            let env = TutoringEnv::new(model.clone(), schedule.clone(), projection.clone(), 1)?;
            Ok(Worker::new(env, substream(0, &format!("rollout-w{w}"))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut batch = collect_rollouts(&behaviour, &mut workers, 24)?;
    let cfg = PpoConfig::default();
    batch.compute_advantages(cfg.gamma, cfg.gae_lambda)?;
    batch.normalize_advantages();
    let chunks = chunk_batch(&batch, 4);
    let mb = Minibatch::gather(&batch, &chunks)?;
    let mut params = behaviour.clone();
    let mut rng = substream(0, "selftest-perturb");
    params
        .as_mut_slice()
        .iter_mut()
        .for_each(|w| *w += rng.random_range(-0.5..0.5));
    let (_, grad) = ppo_loss_and_grad(&params, &mb, &cfg)?;
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..params.as_slice().len() {
        let mut p = params.clone();
        p.as_mut_slice()[i] += eps;
        let up = ppo_loss(&p, &mb, &cfg)?.total;
        p.as_mut_slice()[i] -= 2.0 * eps;
        let down = ppo_loss(&p, &mb, &cfg)?.total;
        let fd = (up - down) / (2.0 * eps);
        let g = grad.as_slice()[i];
        worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-7));
    }
    Ok((worst <= 1e-3, format!("worst relative error {worst:.2e}")))
}

fn window_oracle_check() -> Result<(bool, String)> {
    let mut rng = substream(0, "selftest-windows");
    let bank = ItemBank::new(vec![vec![0], vec![0, 1], vec![1, 2], vec![2]], 3)?;
    let windows = TimeWindows::default();
    let mut mismatches = 0;
    let mut queries = 0;
    for _ in 0..100 {
        let len = rng.random_range(0..=200);
        let history = random_history(&mut rng, 2, 4, len);
        let table = WindowCounterTable::from_history(&history, &bank)?;
        let end = history.last().map_or(1, |r| r.timestamp + 1);
        for _ in 0..5 {
            let now = rng.random_range(1..=end + 86_400);
            let before: Vec<_> = history.iter().filter(|r| r.timestamp < now).copied().collect();
            for learner in 0..2 {
                for skill in 0..3 {
                    queries += 1;
                    let fast = table.query(learner, skill, now, &windows);
                    let slow = count_windows(&before, &bank, learner, skill, now, &windows)?;
                    mismatches += usize::from(fast != slow);
                }
            }
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches in {queries} queries")))
}

/// Three items, two presentations per session, scripted answers.
pub const LEITNER_TRACE_OUTCOMES: [bool; 10] = [true, false, true, true, true, false, true, false, true, true];
pub const LEITNER_TRACE_ITEMS: [usize; 10] = [0, 1, 2, 1, 0, 2, 2, 1, 1, 2];

/// Replays the scripted answers through the Leitner rules.
pub fn leitner_trace() -> Result<Vec<usize>> {
    let mut state = LeitnerState::new(3, vec![1, 2, 4, 8, 16])?;
    let mut items = Vec::new();
    for (step, &correct) in LEITNER_TRACE_OUTCOMES.iter().enumerate() {
        let session = step / 2;
        let item = leitner_tutor_next(&state, session)?.item;
        leitner_observe(&mut state, item, correct, session, step)?;
        items.push(item);
    }
    Ok(items)
}

fn leitner_trace_check() -> Result<(bool, String)> {
    let items = leitner_trace()?;
    Ok((items == LEITNER_TRACE_ITEMS, format!("{items:?}")))
}

fn bandit_check() -> Result<(bool, String)> {
    let mut solved = Vec::new();
    for seed in 0..5 {
        solved.push(bandit_sanity(seed, 50)?.solved_at);
    }
    let ok = solved.iter().all(Option::is_some);
    Ok((ok, format!("iterations to P > 0.95 per seed: {solved:?}")))
}
