use rand::Rng as _;

use super::{DecisionContext, Tutor, TutorDecision};
use crate::error::{Error, Result};
use crate::model::InteractionRecord;
use crate::rng::Rng;

/// Uniform draw over `n_items` items.
pub fn random_tutor_next(n_items: usize, rng: &mut Rng) -> Result<TutorDecision> {
    if n_items == 0 {
        return Err(Error::invalid("item bank is empty"));
    }
    Ok(TutorDecision {
        item: rng.random_range(0..n_items),
    })
}

#[derive(Debug, Clone)]
pub struct RandomTutor {
    n_items: usize,
    rng: Rng,
}

impl RandomTutor {
    pub fn new(n_items: usize, rng: Rng) -> Self {
        RandomTutor { n_items, rng }
    }
}

impl Tutor for RandomTutor {
    fn name(&self) -> &'static str {
        "random"
    }

    fn next(&mut self, _ctx: &DecisionContext<'_>) -> Result<TutorDecision> {
        random_tutor_next(self.n_items, &mut self.rng)
    }

    fn observe(&mut self, _record: &InteractionRecord, _ctx: &DecisionContext<'_>) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn single_item_is_always_chosen() {
        let mut rng = substream(3, "tutor");
        for _ in 0..20 {
            assert_eq!(random_tutor_next(1, &mut rng).unwrap().item, 0);
        }
        assert!(random_tutor_next(0, &mut rng).is_err());
    }

    #[test]
    fn frequencies_are_roughly_uniform() {
        let mut rng = substream(0, "tutor");
        let mut counts = [0usize; 30];
        for _ in 0..30_000 {
            counts[random_tutor_next(30, &mut rng).unwrap().item] += 1;
        }
        assert!(counts.iter().all(|&c| (800..=1200).contains(&c)), "{counts:?}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let draw = || {
            let mut rng = substream(9, "tutor");
            (0..50).map(|_| random_tutor_next(30, &mut rng).unwrap().item).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }
}
