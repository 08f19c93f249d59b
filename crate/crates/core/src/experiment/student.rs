use crate::error::{Error, Result};
use crate::model::{
    das3h_recall, sample_response, InteractionRecord, ItemBank, ParamSet, TimeWindows,
    WindowCounterTable,
};
use crate::rng::Rng;

/// Simulated learner answering from a frozen DAS3H model.
#[derive(Debug, Clone)]
pub struct GroundTruthStudent {
    params: ParamSet,
    bank: ItemBank,
    windows: TimeWindows,
    learner: usize,
    table: WindowCounterTable,
    history: Vec<InteractionRecord>,
}

impl GroundTruthStudent {
    /// `params` must carry exactly one ability; records are tagged `learner`.
    pub fn new(params: ParamSet, bank: ItemBank, windows: TimeWindows, learner: usize) -> Result<Self> {
        params.validate()?;
        if params.n_learners() != 1
            || params.n_items() != bank.n_items()
            || params.n_skills() != bank.n_skills()
            || params.windows != windows.len()
        {
            return Err(Error::Shape(
                "student parameters must describe one learner over the item bank".into(),
            ));
        }
        Ok(GroundTruthStudent {
            params,
            bank,
            windows,
            learner,
            table: WindowCounterTable::new(),
            history: Vec::new(),
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn history(&self) -> &[InteractionRecord] {
        &self.history
    }

    /// Recall probability of `item` at `now`, from answers strictly before `now`.
    pub fn recall(&self, item: usize, now: u64) -> Result<f64> {
        let counts = self
            .table
            .query_item(&self.bank, self.learner, item, now, &self.windows);
        das3h_recall(&self.params, &self.bank, 0, item, &counts)
    }

    pub fn recall_all(&self, now: u64) -> Result<Vec<f64>> {
        (0..self.bank.n_items()).map(|j| self.recall(j, now)).collect()
    }

    /// Presents `item` at `now` and records a sampled answer.
    pub fn answer(&mut self, item: usize, now: u64, rng: &mut Rng) -> Result<InteractionRecord> {
        let p = self.recall(item, now)?;
        let record = InteractionRecord {
            learner: self.learner,
            item,
            timestamp: now,
            correct: sample_response(p, rng)?,
        };
        self.table.push(&record, &self.bank)?;
        self.history.push(record);
        Ok(record)
    }
}
