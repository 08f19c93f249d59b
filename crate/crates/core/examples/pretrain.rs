//! Pretrains priors on a synthetic population and compares them with the
//! generating distributions.

use memtutor::estimation::pretrain_priors;
use memtutor::experiment::ExperimentConfig;
use memtutor::model::Family;
use memtutor::rng::substream;

fn main() -> memtutor::Result<()> {
    let cfg = ExperimentConfig::default();
    let bank = cfg.bank()?;
    let started = std::time::Instant::now();
    let pre = pretrain_priors(
        &cfg.pretrain,
        &cfg.generator,
        &bank,
        &cfg.windows,
        &cfg.schedule,
        &mut substream(0, "pretrain"),
    )?;
    println!("{:<6} {:>9} {:>9} {:>9} {:>9}", "family", "mu", "sigma", "gen mu", "gen sigma");
    for f in Family::ALL {
        let p = pre.priors.get(f);
        let g = cfg.generator.get(f);
        println!("{:<6} {:>9.4} {:>9.4} {:>9.4} {:>9.4}", f.name(), p.mu, p.sigma, g.mu, g.sigma);
    }
    println!("{} learners in {:.1?}", cfg.pretrain.population, started.elapsed());
    Ok(())
}
