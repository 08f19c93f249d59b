use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{
    das3h_logit, InteractionRecord, ItemBank, ParamSet, SensoryMemory, TimeWindows,
    WindowCount, WindowCounterTable,
};

/// Which probability a fitted model predicts for each record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predictor {
    /// Plain DAS3H.
    Das3h,
    /// DAS3H under the sensory-memory power-law correction.
    Inner(SensoryMemory),
}

/// Everything the loss needs about one record; window counts depend on the
/// history only, so they are computed once per fit.
#[derive(Debug, Clone)]
pub(crate) struct RecordFeatures {
    pub learner: usize,
    pub item: usize,
    pub outcome: f64,
    /// `(skill, counts)` for every skill of the item.
    pub counts: Vec<(usize, Vec<WindowCount>)>,
    /// Sensory decay factor `(1 + h·Δt)^(−f)`; zero for the plain predictor.
    pub decay: f64,
}

/// A history prepared for fitting.
#[derive(Debug, Clone)]
pub struct FitData {
    pub(crate) records: Vec<RecordFeatures>,
    pub(crate) bank: ItemBank,
    pub(crate) windows: TimeWindows,
    pub(crate) predictor: Predictor,
}

impl FitData {
    /// Each record is predicted from the records of the same learner with a
    /// strictly earlier timestamp.
    pub fn new(
        history: &[InteractionRecord],
        bank: &ItemBank,
        windows: &TimeWindows,
        predictor: Predictor,
    ) -> Result<Self> {
        let mut order: Vec<&InteractionRecord> = history.iter().collect();
        order.sort_by_key(|r| (r.learner, r.timestamp));
        let mut table = WindowCounterTable::new();
        // per learner: (latest timestamp, latest timestamp strictly before it)
        let mut clock: HashMap<usize, (u64, Option<u64>)> = HashMap::new();
        let mut records = Vec::with_capacity(order.len());
        for r in order {
            let skills = bank.skills_checked(r.item)?;
            let prev = match clock.get(&r.learner) {
                None => None,
                Some(&(last, before)) if last == r.timestamp => before,
                Some(&(last, _)) => Some(last),
            };
            let decay = match predictor {
                Predictor::Das3h => 0.0,
                Predictor::Inner(mem) => mem.decay(mem.units(prev.map(|p| r.timestamp - p))),
            };
            let counts = skills
                .iter()
                .map(|&k| (k, table.query(r.learner, k, r.timestamp, windows)))
                .collect();
            records.push(RecordFeatures {
                learner: r.learner,
                item: r.item,
                outcome: r.outcome(),
                counts,
                decay,
            });
            table.push(r, bank)?;
            clock.insert(r.learner, (r.timestamp, prev));
        }
        Ok(FitData {
            records,
            bank: bank.clone(),
            windows: windows.clone(),
            predictor,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn bank(&self) -> &ItemBank {
        &self.bank
    }

    pub fn windows(&self) -> &TimeWindows {
        &self.windows
    }

    pub fn predictor(&self) -> Predictor {
        self.predictor
    }

    /// Checks that `params` can score every record.
    pub(crate) fn check_params(&self, params: &ParamSet) -> Result<()> {
        params.validate()?;
        if params.windows != self.windows.len()
            || params.n_items() != self.bank.n_items()
            || params.n_skills() != self.bank.n_skills()
        {
            return Err(Error::Shape(format!(
                "parameters ({} items, {} skills, {} windows) do not match data ({} items, {} skills, {} windows)",
                params.n_items(),
                params.n_skills(),
                params.windows,
                self.bank.n_items(),
                self.bank.n_skills(),
                self.windows.len()
            )));
        }
        if let Some(r) = self.records.iter().find(|r| r.learner >= params.n_learners()) {
            return Err(Error::Shape(format!(
                "record for learner {} but only {} abilities",
                r.learner,
                params.n_learners()
            )));
        }
        Ok(())
    }

    /// Predicted probabilities for every record, in fitting order.
    pub fn predictions(&self, params: &ParamSet) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.records
            .iter()
            .map(|r| {
                let counts: Vec<Vec<WindowCount>> =
                    r.counts.iter().map(|(_, c)| c.clone()).collect();
                let p_d = crate::model::sigmoid(das3h_logit(
                    params, &self.bank, r.learner, r.item, &counts,
                )?);
                Ok(1.0 - (1.0 - p_d) * (1.0 - r.decay))
            })
            .collect()
    }

    /// Observed outcomes, in fitting order.
    pub fn outcomes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.outcome).collect()
    }
}
