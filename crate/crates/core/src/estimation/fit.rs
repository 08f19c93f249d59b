use super::data::FitData;
use super::loss::{loss_gradient, total_loss, LossConfig};
use super::priors::PriorDistributions;
use crate::error::{Error, Result};
use crate::model::{Family, ParamSet};
use crate::optim::Adam;

/// Inner-model parameters with the snapshot from before the last session and
/// the optimizer's moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct FitState {
    pub params: ParamSet,
    pub previous: ParamSet,
    adam: Adam,
}

impl FitState {
    pub fn new(initial: ParamSet) -> Self {
        let adam = Adam::new(initial.len());
        FitState {
            previous: initial.clone(),
            params: initial,
            adam,
        }
    }

    /// Optimizer steps taken over the state's lifetime.
    pub fn steps(&self) -> u64 {
        self.adam.steps()
    }
}

/// Loss before and after one session update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub loss_before: f64,
    pub loss_after: f64,
    pub epochs: usize,
}

/// Runs `epochs` full-batch Adam steps on the constrained loss.
///
/// The returned state's `previous` is the parameter set on entry, which anchors
/// the L1 term for this update. `lr(e)` gives the step size of epoch `e`.
pub fn fit_session(
    state: &FitState,
    data: &FitData,
    priors: &PriorDistributions,
    cfg: &LossConfig,
    epochs: usize,
    lr: impl Fn(usize) -> f64,
) -> Result<(FitState, FitReport)> {
    let mut next = state.clone();
    next.previous = state.params.clone();
    let loss_before = total_loss(&next.params, data, priors, &next.previous, cfg)?.total;
    let mut flat = next.params.to_flat();
    let anchor = next.previous.to_flat();
    let l1_weight: Vec<f64> = Family::ALL
        .iter()
        .flat_map(|&f| {
            let w = cfg.c[f as usize] * cfg.lambda;
            std::iter::repeat_n(w, next.params.family(f).len())
        })
        .collect();
    for epoch in 0..epochs {
        let mut grad = loss_gradient(&next.params, data, priors, &next.previous, cfg)?.to_flat();
        at_anchor_min_norm(&mut grad, &flat, &anchor, &l1_weight);
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient entry {i} is {} at epoch {epoch}",
                grad[i]
            )));
        }
        next.adam.step(&mut flat, &grad, lr(epoch));
        next.params.set_flat(&flat)?;
    }
    let loss_after = total_loss(&next.params, data, priors, &next.previous, cfg)?.total;
    if !loss_after.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss became {loss_after} after {epochs} epochs"
        )));
    }
    Ok((
        next,
        FitReport {
            loss_before,
            loss_after,
            epochs,
        },
    ))
}

/// At an entry sitting exactly on its anchor the L1 term is not
/// differentiable and `grad` holds only the smooth part. Replaces it with the
/// smallest subgradient, so entries the data barely pulls on stay put instead
/// of oscillating around the kink.
fn at_anchor_min_norm(grad: &mut [f64], flat: &[f64], anchor: &[f64], l1_weight: &[f64]) {
    for i in 0..grad.len() {
        if flat[i] == anchor[i] {
            let w = l1_weight[i];
            grad[i] = if grad[i].abs() <= w {
                0.0
            } else {
                grad[i] - w * grad[i].signum()
            };
        }
    }
}
