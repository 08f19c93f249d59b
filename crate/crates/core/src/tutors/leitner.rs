use super::{DecisionContext, Tutor, TutorDecision};
use crate::error::{Error, Result};
use crate::model::InteractionRecord;

/// Per-item box and due session. Boxes are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeitnerState {
    boxes: Vec<usize>,
    due_session: Vec<usize>,
    last_seen: Vec<Option<usize>>,
    /// Review interval in sessions for each box, `intervals[b-1]`.
    intervals: Vec<usize>,
}

impl LeitnerState {
    /// All items start in box 1, due at session 0.
    pub fn new(n_items: usize, intervals: Vec<usize>) -> Result<Self> {
        if n_items == 0 {
            return Err(Error::invalid("item bank is empty"));
        }
        if intervals.is_empty() || intervals.contains(&0) {
            return Err(Error::Config(
                "leitner intervals must be non-empty and positive".into(),
            ));
        }
        Ok(LeitnerState {
            boxes: vec![1; n_items],
            due_session: vec![0; n_items],
            last_seen: vec![None; n_items],
            intervals,
        })
    }

    pub fn n_boxes(&self) -> usize {
        self.intervals.len()
    }

    pub fn box_of(&self, item: usize) -> usize {
        self.boxes[item]
    }

    pub fn due_session(&self, item: usize) -> usize {
        self.due_session[item]
    }

    fn check(&self) -> Result<()> {
        let b = self.n_boxes();
        if let Some(j) = self.boxes.iter().position(|&x| x == 0 || x > b) {
            return Err(Error::invalid(format!(
                "item {j} is in box {} outside 1..={b}",
                self.boxes[j]
            )));
        }
        Ok(())
    }
}

/// Among due items, the lowest box wins, then the least recently seen, then
/// the lowest id. With nothing due, the earliest due session wins under the
/// same tie-breaks.
pub fn leitner_tutor_next(state: &LeitnerState, session: usize) -> Result<TutorDecision> {
    state.check()?;
    // never-seen items sort before any seen one
    let recency = |j: usize| state.last_seen[j].map_or(0, |s| s + 1);
    let n = state.boxes.len();
    let due = (0..n)
        .filter(|&j| state.due_session[j] <= session)
        .min_by_key(|&j| (state.boxes[j], recency(j), j));
    let item = match due {
        Some(j) => j,
        None => (0..n)
            .min_by_key(|&j| (state.due_session[j], state.boxes[j], recency(j), j))
            .expect("state has at least one item"),
    };
    Ok(TutorDecision { item })
}

/// Promotes on a correct answer (capped at the top box), demotes to box 1
/// otherwise, and reschedules by the new box's interval.
pub fn leitner_observe(
    state: &mut LeitnerState,
    item: usize,
    correct: bool,
    session: usize,
    step: usize,
) -> Result<()> {
    if item >= state.boxes.len() {
        return Err(Error::invalid(format!("item {item} out of range")));
    }
    state.check()?;
    let b = if correct {
        (state.boxes[item] + 1).min(state.n_boxes())
    } else {
        1
    };
    state.boxes[item] = b;
    state.due_session[item] = session + state.intervals[b - 1];
    state.last_seen[item] = Some(step);
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LeitnerTutor {
    pub state: LeitnerState,
}

impl LeitnerTutor {
    pub fn new(n_items: usize, intervals: Vec<usize>) -> Result<Self> {
        Ok(LeitnerTutor {
            state: LeitnerState::new(n_items, intervals)?,
        })
    }
}

impl Tutor for LeitnerTutor {
    fn name(&self) -> &'static str {
        "leitner"
    }

    fn next(&mut self, ctx: &DecisionContext<'_>) -> Result<TutorDecision> {
        leitner_tutor_next(&self.state, ctx.session)
    }

    fn observe(&mut self, record: &InteractionRecord, ctx: &DecisionContext<'_>) -> Result<()> {
        leitner_observe(&mut self.state, record.item, record.correct, ctx.session, ctx.step)
    }
}
