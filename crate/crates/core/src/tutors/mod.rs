//! Item-selection policies. A tutor sees the learner's answers as they
//! happen and names the next item to present.

pub mod leitner;
pub mod random;
pub mod threshold;

pub use leitner::{leitner_observe, leitner_tutor_next, LeitnerState, LeitnerTutor};
pub use random::{random_tutor_next, RandomTutor};
pub use threshold::{threshold_tutor_next, ThresholdTutor};

use crate::error::Result;
use crate::model::InteractionRecord;

/// The item to present next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TutorDecision {
    pub item: usize,
}

/// What a tutor may look at when deciding.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub session: usize,
    /// Global presentation index.
    pub step: usize,
    pub now: u64,
    /// Ground-truth recall of every item at `now`; supplied only to tutors
    /// that declare [`Tutor::uses_oracle`].
    pub oracle_recall: Option<&'a [f64]>,
}

pub trait Tutor {
    fn name(&self) -> &'static str;

    /// Whether the tutor reads the simulated student's true recall.
    fn uses_oracle(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &DecisionContext<'_>) -> Result<TutorDecision>;

    /// Reports the answer to the item just presented.
    fn observe(&mut self, record: &InteractionRecord, ctx: &DecisionContext<'_>) -> Result<()>;
}
