//! Runs one tutor for one seed through the CLI entry points and prints where
//! the outputs went. Usage: `run_experiment [tutor] [out-dir]`.

use std::path::PathBuf;

use memtutor::cli::{cmd_pretrain, cmd_run};
use memtutor::experiment::ExperimentConfig;

fn main() -> memtutor::Result<()> {
    let mut args = std::env::args().skip(1);
    let tutor = args.next().unwrap_or_else(|| "leitner".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/example".into()));
    let overrides = vec![
        format!("tutor={tutor}"),
        "net.hidden=32".to_string(),
        "ppo.iters_per_session=1".to_string(),
    ];
    let cfg = ExperimentConfig::load(None, &overrides)?;
    let pretrain_dir = out.join("pretrain");
    cmd_pretrain(&cfg, 0, &pretrain_dir)?;
    let run = cmd_run(&cfg, &[0], &out, Some(&pretrain_dir.join("priors.csv")))?;
    println!("{}", run.display());
    Ok(())
}
