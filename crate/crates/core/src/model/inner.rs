use super::items::ItemBank;
use super::params::ParamSet;
use super::recall::{das3h_recall, inner_recall, SensoryMemory};
use super::windows::{TimeWindows, WindowCounterTable};
use crate::error::{Error, Result};

/// The tutor's virtual student: single-learner DAS3H under the
/// sensory-memory correction. Counts are read for learner id `learner`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerModel {
    params: ParamSet,
    bank: ItemBank,
    windows: TimeWindows,
    memory: SensoryMemory,
    learner: usize,
}

impl InnerModel {
    pub fn new(
        params: ParamSet,
        bank: ItemBank,
        windows: TimeWindows,
        memory: SensoryMemory,
        learner: usize,
    ) -> Result<Self> {
        params.validate()?;
        memory.validate()?;
        if params.n_learners() != 1
            || params.n_items() != bank.n_items()
            || params.n_skills() != bank.n_skills()
            || params.windows != windows.len()
        {
            return Err(Error::Shape(
                "inner model parameters must describe one learner over the item bank".into(),
            ));
        }
        Ok(InnerModel {
            params,
            bank,
            windows,
            memory,
            learner,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn bank(&self) -> &ItemBank {
        &self.bank
    }

    pub fn windows(&self) -> &TimeWindows {
        &self.windows
    }

    pub fn memory(&self) -> &SensoryMemory {
        &self.memory
    }

    pub fn learner(&self) -> usize {
        self.learner
    }

    pub fn n_items(&self) -> usize {
        self.bank.n_items()
    }

    /// Plain DAS3H probability from the counts in `table` at `now`.
    pub fn das3h(&self, table: &WindowCounterTable, item: usize, now: u64) -> Result<f64> {
        let counts = table.query_item(&self.bank, self.learner, item, now, &self.windows);
        das3h_recall(&self.params, &self.bank, 0, item, &counts)
    }

    /// Corrected probability; `last` is the learner's previous interaction time.
    pub fn recall(
        &self,
        table: &WindowCounterTable,
        item: usize,
        now: u64,
        last: Option<u64>,
    ) -> Result<f64> {
        let p_d = self.das3h(table, item, now)?;
        let gap = last.map(|l| now.saturating_sub(l));
        Ok(inner_recall(p_d, self.memory.units(gap), &self.memory))
    }

    pub fn recall_all(&self, table: &WindowCounterTable, now: u64, last: Option<u64>) -> Result<Vec<f64>> {
        (0..self.bank.n_items())
            .map(|j| self.recall(table, j, now, last))
            .collect()
    }
}
