//! Walks the Leitner scheduler through a few sessions and prints each
//! choice with the item's box afterwards.

use memtutor::model::InteractionRecord;
use memtutor::tutors::{DecisionContext, LeitnerTutor, Tutor};

fn main() -> memtutor::Result<()> {
    let mut tutor = LeitnerTutor::new(3, vec![1, 2, 4, 8, 16])?;
    let outcomes = [true, false, true, true, true, false, true, false, true, true];
    for (step, &correct) in outcomes.iter().enumerate() {
        let ctx = DecisionContext {
            session: step / 2,
            step,
            now: step as u64 * 60,
            oracle_recall: None,
        };
        let item = tutor.next(&ctx)?.item;
        let record = InteractionRecord {
            learner: 0,
            item,
            timestamp: ctx.now,
            correct,
        };
        tutor.observe(&record, &ctx)?;
        println!(
            "session {} item {item} {:<5} -> box {} due {}",
            ctx.session,
            if correct { "right" } else { "wrong" },
            tutor.state.box_of(item),
            tutor.state.due_session(item)
        );
    }
    Ok(())
}
