//! Fits the inner model to one simulated session and prints the loss parts
//! before and after.

use memtutor::estimation::{
    fit_session, total_loss, FitData, FitState, Predictor, Prior, PriorDistributions,
};
use memtutor::experiment::{ExperimentConfig, GroundTruthStudent};
use memtutor::model::ParamSet;
use memtutor::rng::substream;

fn main() -> memtutor::Result<()> {
    let cfg = ExperimentConfig::default();
    let bank = cfg.bank()?;
    let mut rng = substream(0, "student");
    let truth = cfg.student_generator.sample(1, &bank, &cfg.windows, &mut rng);
    let mut student = GroundTruthStudent::new(truth, bank.clone(), cfg.windows.clone(), 0)?;
    for step in 0..cfg.schedule.items_per_session {
        student.answer(step % bank.n_items(), cfg.schedule.step_time(step), &mut rng)?;
    }

    let priors = PriorDistributions::from_fn(|_| Prior { mu: 0.0, sigma: 1.0 })?;
    let data = FitData::new(student.history(), &bank, &cfg.windows, Predictor::Inner(cfg.memory))?;
    let state = FitState::new(ParamSet::zeros(1, bank.n_items(), bank.n_skills(), cfg.windows.len()));
    let (next, report) = fit_session(&state, &data, &priors, &cfg.loss, 50, |_| cfg.estimation.lr)?;
    let after = total_loss(&next.params, &data, &priors, &next.previous, &cfg.loss)?;
    println!("loss {:.5} -> {:.5}", report.loss_before, report.loss_after);
    println!("  squared error {:.5}", after.mse);
    println!("  prior distance {:?}", after.dist);
    println!("  drift from previous {:?}", after.fix);
    println!("  ability {:.4}", next.params.alpha[0]);
    Ok(())
}
