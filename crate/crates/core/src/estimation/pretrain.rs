//! Prior pretraining on a synthetic learner population.
//!
//! Ground-truth learners share item, skill and history weights and differ in
//! ability. Their simulated histories are fitted jointly by squared error on
//! the plain DAS3H model, and the spread of the fitted entries of each family
//! becomes that family's prior.

use std::collections::BTreeSet;

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::data::{FitData, Predictor};
use super::loss::mse_and_gradient;
use super::priors::{Prior, PriorDistributions};
use crate::error::{Error, Result};
use crate::experiment::schedule::SessionSchedule;
use crate::experiment::student::GroundTruthStudent;
use crate::model::{Family, InteractionRecord, ItemBank, ParamSet, TimeWindows};
use crate::optim::Adam;
use crate::rng::Rng;

/// Smallest prior standard deviation produced by pretraining.
pub const MIN_SIGMA: f64 = 1e-3;

/// Normal distributions ground-truth parameters are drawn from. A zero
/// standard deviation pins the family to its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    pub families: [Prior; 5],
}

impl Default for Generator {
    fn default() -> Self {
        Generator {
            families: [
                Prior { mu: 0.0, sigma: 0.5 },
                Prior { mu: 0.0, sigma: 1.0 },
                Prior { mu: 0.0, sigma: 0.5 },
                Prior { mu: 0.1, sigma: 0.1 },
                Prior { mu: 0.1, sigma: 0.1 },
            ],
        }
    }
}

impl Generator {
    pub fn get(&self, f: Family) -> Prior {
        self.families[f as usize]
    }

    pub fn validate(&self) -> Result<()> {
        for (f, p) in Family::ALL.iter().zip(&self.families) {
            if !(p.mu.is_finite() && p.sigma.is_finite() && p.sigma >= 0.0) {
                return Err(Error::Config(format!("generator for {f} is invalid: {p:?}")));
            }
        }
        Ok(())
    }

    /// Draws a parameter set with `learners` abilities.
    pub fn sample(
        &self,
        learners: usize,
        bank: &ItemBank,
        windows: &TimeWindows,
        rng: &mut Rng,
    ) -> ParamSet {
        let mut p = ParamSet::zeros(learners, bank.n_items(), bank.n_skills(), windows.len());
        for f in Family::ALL {
            let g = self.get(f);
            for x in p.family_mut(f).iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x = g.mu + g.sigma * z;
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainConfig {
    /// Number of synthetic learners.
    pub population: usize,
    /// Full-batch optimizer steps.
    pub epochs: usize,
    pub lr: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            population: 100,
            epochs: 300,
            lr: 0.05,
        }
    }
}

/// Result of pretraining.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub priors: PriorDistributions,
    /// Single-learner parameter set with every entry at its family mean.
    pub initial: ParamSet,
    /// Jointly fitted population parameters.
    pub fitted: ParamSet,
    /// Generating parameters (`None` for imported histories).
    pub truth: Option<ParamSet>,
}

/// Simulates a synthetic population under `schedule` with uniformly random
/// presentations and derives priors from a joint fit.
pub fn pretrain_priors(
    cfg: &PretrainConfig,
    generator: &Generator,
    bank: &ItemBank,
    windows: &TimeWindows,
    schedule: &SessionSchedule,
    rng: &mut Rng,
) -> Result<Pretrained> {
    if cfg.population < 10 {
        return Err(Error::Config(format!(
            "pretraining needs at least 10 learners, got {}",
            cfg.population
        )));
    }
    generator.validate()?;
    schedule.validate()?;
    let truth = generator.sample(cfg.population, bank, windows, rng);
    let mut history = Vec::with_capacity(cfg.population * schedule.n_steps());
    for learner in 0..cfg.population {
        let mut own = truth.clone();
        own.alpha = vec![truth.alpha[learner]];
        let mut student = GroundTruthStudent::new(own, bank.clone(), windows.clone(), learner)?;
        for step in 0..schedule.n_steps() {
            let item = rng.random_range(0..bank.n_items());
            student.answer(item, schedule.step_time(step), rng)?;
        }
        history.extend_from_slice(student.history());
    }
    let mut out = fit_population(&history, bank, windows, cfg)?;
    out.truth = Some(truth);
    Ok(out)
}

/// Fits one ability per learner and shared item/skill weights by squared error,
/// then summarizes each family by its mean and population standard deviation.
/// Usable on imported interaction logs.
pub fn fit_population(
    history: &[InteractionRecord],
    bank: &ItemBank,
    windows: &TimeWindows,
    cfg: &PretrainConfig,
) -> Result<Pretrained> {
    if history.is_empty() {
        return Err(Error::invalid("cannot pretrain on an empty history"));
    }
    let learners: BTreeSet<usize> = history.iter().map(|r| r.learner).collect();
    let n_learners = learners.last().map_or(0, |l| l + 1);
    let data = FitData::new(history, bank, windows, Predictor::Das3h)?;
    let mut params = ParamSet::zeros(n_learners, bank.n_items(), bank.n_skills(), windows.len());
    let mut adam = Adam::new(params.len());
    let mut flat = params.to_flat();
    for epoch in 0..cfg.epochs {
        let (loss, grad) = mse_and_gradient(&params, &data)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("pretraining loss {loss} at epoch {epoch}")));
        }
        adam.step(&mut flat, &grad.to_flat(), cfg.lr);
        params.set_flat(&flat)?;
    }

    let stats = |values: &[f64]| {
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
        Prior {
            mu,
            sigma: var.sqrt().max(MIN_SIGMA),
        }
    };
    let observed_alpha: Vec<f64> = learners.iter().map(|&l| params.alpha[l]).collect();
    let priors = PriorDistributions::from_fn(|f| match f {
        Family::Alpha => stats(&observed_alpha),
        _ => stats(params.family(f)),
    })?;
    let initial = ParamSet::zeros(1, bank.n_items(), bank.n_skills(), windows.len())
        .filled_like(|f| priors.get(f).mu);
    Ok(Pretrained {
        priors,
        initial,
        fitted: params,
        truth: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn small_population_smoke() {
        let bank = ItemBank::round_robin(6, 2).unwrap();
        let schedule = SessionSchedule { days: 3, ..SessionSchedule::default() };
        let cfg = PretrainConfig { population: 10, epochs: 50, lr: 0.05 };
        let out = pretrain_priors(
            &cfg,
            &Generator::default(),
            &bank,
            &TimeWindows::default(),
            &schedule,
            &mut substream(0, "pretrain"),
        )
        .unwrap();
        for f in Family::ALL {
            let p = out.priors.get(f);
            assert!(p.mu.is_finite() && p.sigma >= MIN_SIGMA, "{f}: {p:?}");
        }
        assert_eq!(out.initial.n_learners(), 1);
        assert!(out.initial.alpha[0] == out.priors.get(Family::Alpha).mu);
    }

    #[test]
    fn too_small_population_is_rejected() {
        let bank = ItemBank::round_robin(6, 2).unwrap();
        let cfg = PretrainConfig { population: 9, ..PretrainConfig::default() };
        let r = pretrain_priors(
            &cfg,
            &Generator::default(),
            &bank,
            &TimeWindows::default(),
            &SessionSchedule::default(),
            &mut substream(0, "pretrain"),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
