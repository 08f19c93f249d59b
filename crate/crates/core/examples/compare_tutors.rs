//! Pretrains priors, runs every tutor for a few seeds and prints the
//! first- and final-session recall of each. Pass `--quick` for a reduced
//! policy budget.

use memtutor::estimation::pretrain_priors;
use memtutor::experiment::{aggregate_seeds, run_experiment, ExperimentConfig, TutorKind};
use memtutor::rng::substream;

fn main() -> memtutor::Result<()> {
    let quick = std::env::args().any(|a| a == "--quick");
    let mut overrides = Vec::new();
    if quick {
        overrides.extend(["net.hidden=32".to_string(), "ppo.iters_per_session=1".to_string()]);
    }
    let base = ExperimentConfig::load(None, &overrides)?;
    let bank = base.bank()?;
    let pre = pretrain_priors(
        &base.pretrain,
        &base.generator,
        &bank,
        &base.windows,
        &base.schedule,
        &mut substream(0, "pretrain"),
    )?;
    let seeds: Vec<u64> = (0..if quick { 2 } else { 5 }).collect();
    for tutor in TutorKind::ALL {
        let cfg = ExperimentConfig { tutor, ..base.clone() };
        let started = std::time::Instant::now();
        let curves = seeds
            .iter()
            .map(|&s| run_experiment(&cfg, s, Some(&pre.priors)).map(|m| m.session_curve()))
            .collect::<memtutor::Result<Vec<_>>>()?;
        let agg = aggregate_seeds(&curves)?;
        println!(
            "{tutor:>9}: first {:.4}  final {:.4} ± {:.4}  ({:.1?})",
            agg.mean[0],
            agg.mean[agg.len() - 1],
            agg.std[agg.len() - 1],
            started.elapsed()
        );
    }
    Ok(())
}
