use super::{DecisionContext, Tutor, TutorDecision};
use crate::error::{Error, Result};
use crate::model::InteractionRecord;

/// Distances closer than this count as ties, so that e.g. 0.85 and 0.95
/// around 0.9 resolve to the lower id despite rounding.
const TIE_TOL: f64 = 1e-12;

/// Item whose recall is closest to `threshold`; ties go to the lowest id.
pub fn threshold_tutor_next(recall: &[f64], threshold: f64) -> Result<TutorDecision> {
    if recall.is_empty() {
        return Err(Error::invalid("oracle recall vector is empty"));
    }
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (j, &p) in recall.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite(format!("oracle recall of item {j} is {p}")));
        }
        let d = (p - threshold).abs();
        if d < best_dist - TIE_TOL {
            best = j;
            best_dist = d;
        }
    }
    Ok(TutorDecision { item: best })
}

/// Presents the item whose true recall is nearest the threshold. Reads the
/// simulated student's probabilities, which a real tutor could not.
#[derive(Debug, Clone)]
pub struct ThresholdTutor {
    pub threshold: f64,
}

impl ThresholdTutor {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!("threshold must lie in [0, 1], got {threshold}")));
        }
        Ok(ThresholdTutor { threshold })
    }
}

impl Tutor for ThresholdTutor {
    fn name(&self) -> &'static str {
        "threshold"
    }

    fn uses_oracle(&self) -> bool {
        true
    }

    fn next(&mut self, ctx: &DecisionContext<'_>) -> Result<TutorDecision> {
        let recall = ctx
            .oracle_recall
            .ok_or_else(|| Error::invalid("threshold tutor needs oracle recall"))?;
        threshold_tutor_next(recall, self.threshold)
    }

    fn observe(&mut self, _record: &InteractionRecord, _ctx: &DecisionContext<'_>) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(threshold_tutor_next(&[0.95, 0.60, 0.30], 0.9).unwrap().item, 0);
        assert_eq!(threshold_tutor_next(&[0.85, 0.95], 0.9).unwrap().item, 0);
        assert_eq!(threshold_tutor_next(&[0.2, 0.88, 0.91], 0.9).unwrap().item, 2);
        assert!(threshold_tutor_next(&[], 0.9).is_err());
    }

    #[test]
    fn out_of_range_threshold_is_rejected() {
        assert!(ThresholdTutor::new(1.5).is_err());
    }
}
