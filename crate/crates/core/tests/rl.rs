use std::collections::HashSet;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memtutor::estimation::{Prior, PriorDistributions};
use memtutor::experiment::{prior_mean_params, ExperimentConfig, SessionSchedule};
use memtutor::model::{InnerModel, ItemBank, SensoryMemory, TimeWindows};
use memtutor::rl::{
    compute_gae, embed_dim, embed_item, observation_dim, reward, NetShape, PolicyParams, PpoConfig,
    ProjectionMatrix, RlTutor,
};
use memtutor::rng::substream;

#[test]
fn gae_hand_example() {
    // γ = 0.85, λ = 0.95, zero values, episode ends on the third step:
    // A2 = 1, A1 = 1 + 0.8075·1, A0 = 1 + 0.8075·1.8075
    let (adv, ret) = compute_gae(&[1.0; 3], &[0.0; 3], &[false, false, true], 5.0, 0.85, 0.95).unwrap();
    let expected = [2.459_556_25, 1.8075, 1.0];
    for (a, e) in adv.iter().zip(expected) {
        assert!((a - e).abs() < 1e-12, "{adv:?}");
    }
    assert_eq!(adv, ret);
}

#[test]
fn embeddings_of_a_thirty_item_bank_are_distinct() {
    let projection = ProjectionMatrix::new(30, &mut substream(0, "projection"));
    assert_eq!(embed_dim(30), 6);
    assert_eq!(observation_dim(30), 9);
    let mut seen = HashSet::new();
    for item in 0..30 {
        for correct in [false, true] {
            let e = embed_item(item, correct, &projection).unwrap();
            assert_eq!(e.len(), 6);
            let key: Vec<u64> = e.iter().map(|x| x.to_bits()).collect();
            seen.insert(key);
        }
    }
    assert_eq!(seen.len(), 60);
}

/// Mean log computed from an exactly accumulated product: mantissas are
/// multiplied and renormalized so nothing underflows.
fn mean_log_oracle(p: &[f64]) -> f64 {
    let mut mant = 1.0f64;
    let mut exp = 0i64;
    for &x in p {
        let x = x.clamp(1e-9, 1.0);
        mant *= x;
        while mant < 0.5 {
            mant *= 2.0;
            exp -= 1;
        }
    }
    (mant.ln() + exp as f64 * std::f64::consts::LN_2) / p.len() as f64
}

#[test]
fn reward_matches_product_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let p: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random::<f64>(),
            })
            .collect();
        let r = reward(&p);
        let o = mean_log_oracle(&p);
        assert!((r - o).abs() <= 1e-10 * o.abs().max(1.0), "{r} vs {o}");
        assert!(r <= 0.0);
    }
    assert_eq!(reward(&[1.0, 1.0]), 0.0);
}

#[test]
fn policy_outputs_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let j = rng.random_range(1..40);
        let shape = NetShape {
            input: observation_dim(j),
            hidden: rng.random_range(1..24),
            actions: j,
        };
        let net = PolicyParams::init(shape, &mut substream(trial, "policy-init"));
        let mut h = vec![0.0; shape.hidden];
        for _ in 0..10 {
            let obs: Vec<f64> = (0..shape.input).map(|_| rng.random_range(-3.0..3.0)).collect();
            let out = net.step(&obs, &h).unwrap();
            let total: f64 = out.probs.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(out.probs.iter().all(|p| *p >= 0.0));
            let entropy: f64 = -out.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();
            assert!(entropy >= -1e-12 && entropy <= (j as f64).ln() + 1e-9);
            h = out.hidden;
        }
    }
}

#[test]
fn projection_is_fixed_while_the_policy_trains() {
    let cfg = ExperimentConfig::default();
    let priors = PriorDistributions::from_fn(|_| Prior { mu: 0.0, sigma: 1.0 }).unwrap();
    let bank = ItemBank::round_robin(cfg.n_items, cfg.n_skills).unwrap();
    let windows = TimeWindows::default();
    let schedule = SessionSchedule {
        days: 1,
        ..SessionSchedule::default()
    };
    let ppo = PpoConfig {
        horizon: 200,
        workers: 2,
        minibatch: 40,
        seq_len: 10,
        epochs: 1,
        iters_per_session: 1,
        ..PpoConfig::default()
    };
    let mut tutor = RlTutor::new(cfg.n_items, 8, ppo, schedule, 1, 0).unwrap();
    let projection = tutor.projection().fingerprint();
    let policy = tutor.policy().fingerprint();
    let params = prior_mean_params(&priors, &cfg);
    let model = InnerModel::new(params, bank, windows, SensoryMemory::default(), 0).unwrap();
    tutor.optimize(model, 1).unwrap();
    assert_eq!(tutor.projection().fingerprint(), projection);
    assert_ne!(tutor.policy().fingerprint(), policy);
}
