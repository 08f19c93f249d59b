use proptest::prelude::*;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memtutor::model::InteractionRecord;
use memtutor::tutors::{
    leitner_tutor_next, threshold_tutor_next, DecisionContext, LeitnerState, LeitnerTutor, Tutor,
};

fn brute_force(recall: &[f64], thr: f64) -> usize {
    let mut best = 0;
    for j in 1..recall.len() {
        if (recall[j] - thr).abs() < (recall[best] - thr).abs() {
            best = j;
        }
    }
    best
}

proptest! {
    #[test]
    fn threshold_matches_brute_force(
        recall in prop::collection::vec(0.0f64..=1.0, 1..50),
        thr in 0.0f64..=1.0,
    ) {
        let got = threshold_tutor_next(&recall, thr).unwrap().item;
        prop_assert_eq!(got, brute_force(&recall, thr));
    }

    #[test]
    fn threshold_follows_a_permutation(
        recall in prop::collection::vec(0.0f64..=1.0, 1..50),
        thr in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        // distinct distances make the choice unique, so permuting the items
        // must move the choice with them
        let dist: Vec<f64> = recall.iter().map(|p| (p - thr).abs()).collect();
        let mut sorted = dist.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-9));

        let mut perm: Vec<usize> = (0..recall.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<f64> = perm.iter().map(|&j| recall[j]).collect();
        let before = threshold_tutor_next(&recall, thr).unwrap().item;
        let after = threshold_tutor_next(&permuted, thr).unwrap().item;
        prop_assert_eq!(perm[after], before);
    }
}

#[test]
fn threshold_ties_go_to_the_lowest_id() {
    assert_eq!(threshold_tutor_next(&[0.8, 1.0, 0.8], 0.9).unwrap().item, 0);
    assert_eq!(threshold_tutor_next(&[0.5, 0.9, 0.9], 0.9).unwrap().item, 1);
}

#[test]
fn leitner_never_runs_out_of_items() {
    // 300 presentations, 10 per session, random answers
    let mut tutor = LeitnerTutor::new(30, vec![1, 2, 4, 8, 16]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen = vec![0usize; 30];
    for step in 0..300 {
        let session = step / 10;
        let ctx = DecisionContext {
            session,
            step,
            now: step as u64 * 30,
            oracle_recall: None,
        };
        let item = tutor.next(&ctx).unwrap().item;
        assert!(item < 30);
        seen[item] += 1;
        let record = InteractionRecord {
            learner: 0,
            item,
            timestamp: ctx.now,
            correct: rng.random_bool(0.7),
        };
        tutor.observe(&record, &ctx).unwrap();
        assert!((1..=5).contains(&tutor.state.box_of(item)));
    }
    assert!(seen.iter().all(|&n| n > 0), "{seen:?}");
}

#[test]
fn leitner_starts_from_the_first_items() {
    let state = LeitnerState::new(4, vec![1, 2]).unwrap();
    assert_eq!(leitner_tutor_next(&state, 0).unwrap().item, 0);
}
