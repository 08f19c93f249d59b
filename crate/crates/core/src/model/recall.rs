use rand::Rng as _;

use super::items::ItemBank;
use super::params::ParamSet;
use super::windows::WindowCount;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Largest double below one; keeps model probabilities inside the open interval.
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, stable for large |x|. Output is kept strictly inside (0, 1).
pub fn sigmoid(x: f64) -> f64 {
    let p = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, ONE_BELOW)
}

/// One-parameter logistic IRT: σ(α − δ).
pub fn irt_recall(alpha: f64, delta: f64) -> f64 {
    sigmoid(alpha - delta)
}

/// DAS3H logit for `learner` answering `item`.
///
/// `counts[s]` holds the per-window attempt/correct counts for the `s`-th skill
/// of the item, in the order returned by [`ItemBank::skills`].
pub fn das3h_logit(
    params: &ParamSet,
    bank: &ItemBank,
    learner: usize,
    item: usize,
    counts: &[Vec<WindowCount>],
) -> Result<f64> {
    let skills = bank.skills_checked(item)?;
    if learner >= params.alpha.len() {
        return Err(Error::invalid(format!(
            "learner {learner} out of range ({} learners)",
            params.alpha.len()
        )));
    }
    if item >= params.delta.len() {
        return Err(Error::invalid(format!("item {item} has no difficulty entry")));
    }
    if counts.len() != skills.len() {
        return Err(Error::Shape(format!(
            "item {item} has {} skills but {} counter rows were given",
            skills.len(),
            counts.len()
        )));
    }
    let w = params.windows;
    let mut logit = params.alpha[learner] - params.delta[item];
    for (&k, row) in skills.iter().zip(counts) {
        if row.len() != w {
            return Err(Error::Shape(format!(
                "expected {w} windows, got {}",
                row.len()
            )));
        }
        logit += params.beta[k];
        for (wi, cnt) in row.iter().enumerate() {
            logit += params.theta[k * w + wi] * (cnt.c as f64).ln_1p()
                + params.phi[k * w + wi] * (cnt.n as f64).ln_1p();
        }
    }
    Ok(logit)
}

/// DAS3H recall probability σ(logit).
pub fn das3h_recall(
    params: &ParamSet,
    bank: &ItemBank,
    learner: usize,
    item: usize,
    counts: &[Vec<WindowCount>],
) -> Result<f64> {
    das3h_logit(params, bank, learner, item, counts).map(sigmoid)
}

/// Power-law sensory-memory constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensoryMemory {
    /// Decay rate `h`.
    pub h: f64,
    /// Decay exponent `f`.
    pub f: f64,
    /// Seconds per unit of elapsed time fed to the power law.
    pub dt_unit_secs: f64,
}

impl Default for SensoryMemory {
    fn default() -> Self {
        SensoryMemory {
            h: 0.3,
            f: 0.7,
            dt_unit_secs: 1.0,
        }
    }
}

impl SensoryMemory {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.f > 0.0 && self.dt_unit_secs > 0.0) {
            return Err(Error::invalid(format!(
                "sensory memory constants must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// `(1 + h·Δt)^(−f)` for Δt in units; zero for an infinite gap.
    pub fn decay(&self, dt_units: f64) -> f64 {
        if dt_units.is_infinite() {
            0.0
        } else {
            (1.0 + self.h * dt_units).powf(-self.f)
        }
    }

    /// Converts a gap in seconds to model units. `None` (no previous
    /// interaction) maps to an infinite gap.
    pub fn units(&self, gap_secs: Option<u64>) -> f64 {
        match gap_secs {
            Some(s) => s as f64 / self.dt_unit_secs,
            None => f64::INFINITY,
        }
    }
}

/// Sensory-memory corrected recall: `(1 − p_D)(1 + h·Δt)^(−f) + p_D`.
///
/// Written as `1 − (1 − p_D)(1 − decay)` so that Δt = 0 gives exactly 1.
pub fn inner_recall(p_d: f64, dt_units: f64, mem: &SensoryMemory) -> f64 {
    let decay = mem.decay(dt_units);
    1.0 - (1.0 - p_d) * (1.0 - decay)
}

/// Bernoulli draw for a simulated answer.
pub fn sample_response(p: f64, rng: &mut Rng) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    Ok(rng.random::<f64>() < p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::windows::WindowCount;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;

    // 40-digit reference values.
    const SIGMOID_1: f64 = 0.731_058_578_630_004_9;

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_abs_diff_eq!(sigmoid(1.0), SIGMOID_1, epsilon = 1e-15);
        assert_abs_diff_eq!(sigmoid(-1.0), 1.0 - sigmoid(1.0), epsilon = 1e-15);
        for x in [-500.0, -40.0, 40.0, 500.0] {
            let p = sigmoid(x);
            assert!(p > 0.0 && p < 1.0, "sigmoid({x}) = {p}");
        }
    }

    #[test]
    fn irt_reference_points() {
        assert_eq!(irt_recall(0.3, 0.3), 0.5);
        assert_abs_diff_eq!(irt_recall(1.0, 0.0), SIGMOID_1, epsilon = 1e-15);
        assert_abs_diff_eq!(irt_recall(0.0, 1.0), 0.268_941_421_369_995_1, epsilon = 1e-15);
    }

    fn one_skill(windows: usize) -> (ItemBank, ParamSet) {
        let bank = ItemBank::new(vec![vec![0]], 1).unwrap();
        let params = ParamSet::zeros(1, 1, 1, windows);
        (bank, params)
    }

    #[test]
    fn das3h_zero_model_is_coin_flip() {
        let (bank, params) = one_skill(5);
        let p = das3h_recall(&params, &bank, 0, 0, &[vec![WindowCount::default(); 5]]).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn das3h_static_terms() {
        let (bank, mut params) = one_skill(5);
        params.alpha[0] = 0.5;
        params.delta[0] = 0.2;
        params.beta[0] = 0.1;
        let p = das3h_recall(&params, &bank, 0, 0, &[vec![WindowCount::default(); 5]]).unwrap();
        // σ(0.4)
        assert_abs_diff_eq!(p, 0.598_687_660_112_452_0, epsilon = 1e-15);
    }

    #[test]
    fn das3h_history_terms() {
        let (bank, mut params) = one_skill(5);
        params.theta.fill(0.1);
        params.phi.fill(0.1);
        let counts = vec![WindowCount { n: 1, c: 1 }; 5];
        let p = das3h_recall(&params, &bank, 0, 0, &[counts]).unwrap();
        assert_abs_diff_eq!(p, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn das3h_rejects_bad_item_and_shapes() {
        let (bank, params) = one_skill(5);
        assert!(das3h_recall(&params, &bank, 0, 1, &[]).is_err());
        assert!(das3h_recall(&params, &bank, 0, 0, &[vec![WindowCount::default(); 4]]).is_err());
        assert!(das3h_recall(&params, &bank, 0, 0, &[]).is_err());
    }

    #[test]
    fn inner_recall_reference_points() {
        let mem = SensoryMemory::default();
        assert_eq!(inner_recall(0.5, 0.0, &mem), 1.0);
        // 0.5·1.3^(-0.7) + 0.5
        assert_abs_diff_eq!(inner_recall(0.5, 1.0, &mem), 0.916_111_441_786_356_8, epsilon = 1e-12);
        let far = inner_recall(0.2, 1e12, &mem);
        assert!(far > 0.2 && far < 0.2 + 1e-7);
        assert_abs_diff_eq!(inner_recall(0.2, f64::INFINITY, &mem), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn sampling_edges_and_rate() {
        let mut rng = substream(11, "responses");
        for _ in 0..1000 {
            assert!(sample_response(1.0, &mut rng).unwrap());
            assert!(!sample_response(0.0, &mut rng).unwrap());
        }
        let hits = (0..10_000)
            .filter(|_| sample_response(0.7, &mut rng).unwrap())
            .count();
        assert!((hits as f64 / 10_000.0 - 0.7).abs() < 0.02);
        assert!(sample_response(1.5, &mut rng).is_err());
        assert!(sample_response(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let draw = |seed| {
            let mut rng = substream(seed, "responses");
            (0..64)
                .map(|_| sample_response(0.4, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }
}
