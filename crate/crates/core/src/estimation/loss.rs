//! Constrained inner-model loss
//! `L = L_mse + Σ_m c_m · ((1 − λ)·L_dist,m + λ·L_fix,m)` and its gradient.

use super::data::FitData;
use super::priors::PriorDistributions;
use crate::error::{Error, Result};
use crate::model::{das3h_logit, sigmoid, Family, ParamSet, WindowCount};

/// One value per parameter family, indexed by `Family as usize`.
pub type FamilyValues = [f64; 5];

/// Weights of the constraint terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Per-family coefficients `c_m`.
    pub c: FamilyValues,
    /// Mix between the prior-distance (0) and previous-value (1) terms.
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            c: [1.0; 5],
            lambda: 0.5,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::invalid(format!("constraint coefficients must be ≥ 0: {:?}", self.c)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }

    /// Constraints switched off: the loss reduces to the squared error.
    pub fn unconstrained() -> Self {
        LossConfig {
            c: [0.0; 5],
            lambda: 1.0,
        }
    }
}

/// The loss split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub mse: f64,
    pub dist: FamilyValues,
    pub fix: FamilyValues,
    pub total: f64,
}

/// Sum of squared errors between outcomes and predicted recall.
pub fn loss_mse(params: &ParamSet, data: &FitData) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("squared-error loss needs a non-empty history"));
    }
    let preds = data.predictions(params)?;
    Ok(preds
        .iter()
        .zip(data.outcomes())
        .map(|(p, o)| (o - p) * (o - p))
        .sum())
}

/// Per-family `Σ (1 − f_m(ρ)/f_m(μ_m))`.
pub fn loss_dist(params: &ParamSet, priors: &PriorDistributions) -> FamilyValues {
    Family::ALL.map(|f| {
        let prior = priors.get(f);
        params
            .family(f)
            .iter()
            .map(|&x| 1.0 - prior.density_ratio(x))
            .sum()
    })
}

/// Per-family L1 distance to the previous parameters.
pub fn loss_fix(params: &ParamSet, previous: &ParamSet) -> Result<FamilyValues> {
    if !params.same_shape(previous) {
        return Err(Error::Shape("current and previous parameters differ in shape".into()));
    }
    Ok(Family::ALL.map(|f| {
        params
            .family(f)
            .iter()
            .zip(previous.family(f))
            .map(|(a, b)| (a - b).abs())
            .sum()
    }))
}

fn combine(mse: f64, dist: FamilyValues, fix: FamilyValues, cfg: &LossConfig) -> f64 {
    let constraints: f64 = (0..5)
        .map(|m| cfg.c[m] * ((1.0 - cfg.lambda) * dist[m] + cfg.lambda * fix[m]))
        .sum();
    mse + constraints
}

pub fn total_loss(
    params: &ParamSet,
    data: &FitData,
    priors: &PriorDistributions,
    previous: &ParamSet,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    let mse = loss_mse(params, data)?;
    let dist = loss_dist(params, priors);
    let fix = loss_fix(params, previous)?;
    Ok(LossBreakdown {
        mse,
        dist,
        fix,
        total: combine(mse, dist, fix, cfg),
    })
}

/// Squared-error loss and its gradient.
pub(crate) fn mse_and_gradient(params: &ParamSet, data: &FitData) -> Result<(f64, ParamSet)> {
    if data.is_empty() {
        return Err(Error::invalid("squared-error loss needs a non-empty history"));
    }
    data.check_params(params)?;
    let mut grad = params.filled_like(|_| 0.0);
    let w = params.windows;
    let mut loss = 0.0;
    let mut counts_buf: Vec<Vec<WindowCount>> = Vec::new();
    for r in &data.records {
        counts_buf.clear();
        counts_buf.extend(r.counts.iter().map(|(_, c)| c.clone()));
        let p_d = sigmoid(das3h_logit(params, &data.bank, r.learner, r.item, &counts_buf)?);
        let p_o = 1.0 - (1.0 - p_d) * (1.0 - r.decay);
        let err = p_o - r.outcome;
        loss += err * err;
        // ∂/∂logit of (p_o − o)²
        let g = 2.0 * err * (1.0 - r.decay) * p_d * (1.0 - p_d);
        grad.alpha[r.learner] += g;
        grad.delta[r.item] -= g;
        for (k, row) in &r.counts {
            grad.beta[*k] += g;
            for (wi, cnt) in row.iter().enumerate() {
                grad.theta[k * w + wi] += g * (cnt.c as f64).ln_1p();
                grad.phi[k * w + wi] += g * (cnt.n as f64).ln_1p();
            }
        }
    }
    Ok((loss, grad))
}

/// Analytic gradient of [`total_loss`]. The L1 subgradient at zero is zero.
pub fn loss_gradient(
    params: &ParamSet,
    data: &FitData,
    priors: &PriorDistributions,
    previous: &ParamSet,
    cfg: &LossConfig,
) -> Result<ParamSet> {
    cfg.validate()?;
    if !params.same_shape(previous) {
        return Err(Error::Shape("current and previous parameters differ in shape".into()));
    }
    let (_, mut grad) = mse_and_gradient(params, data)?;
    for f in Family::ALL {
        let m = f as usize;
        let prior = priors.get(f);
        let dist_w = cfg.c[m] * (1.0 - cfg.lambda);
        let fix_w = cfg.c[m] * cfg.lambda;
        let prev = previous.family(f);
        for (i, (g, &x)) in grad.family_mut(f).iter_mut().zip(params.family(f)).enumerate() {
            // d/dx [1 − exp(−(x−μ)²/2σ²)] = ratio · (x − μ)/σ²
            *g += dist_w * prior.density_ratio(x) * (x - prior.mu) / (prior.sigma * prior.sigma);
            let d = x - prev[i];
            *g += fix_w * if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 };
        }
    }
    Ok(grad)
}
