//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{pretrain_priors, PriorDistributions};
use crate::experiment::output::plot_curves;
use crate::experiment::{
    compare_runs, emit_outputs, read_curve_csv, run_dir, run_experiment, ExperimentConfig, TutorKind,
};
use crate::model::Family;
use crate::rng::substream;

#[derive(Debug, Parser)]
#[command(name = "memtutor", version, about = "Simulated spaced-repetition tutoring experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit prior distributions on a synthetic learner population.
    Pretrain {
        #[command(flatten)]
        common: Common,
        /// Root seed (first of the list is used).
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long, default_value = "out/pretrain")]
        out: PathBuf,
    },
    /// Run one tutor over several seeds.
    Run {
        #[command(flatten)]
        common: Common,
        /// random, leitner, threshold or rl; overrides the config's `tutor`.
        #[arg(long)]
        tutor: Option<String>,
        /// `0..4` (inclusive), `3` or `0,2,5`.
        #[arg(long, default_value = "0..4")]
        seeds: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Priors file written by `pretrain`; required for the rl tutor.
        #[arg(long)]
        priors: Option<PathBuf>,
    },
    /// Overlay finished runs and tabulate their session recall.
    Compare {
        /// Run directories produced by `run`.
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "out/compare")]
        out: PathBuf,
    },
    /// Re-render a run directory's plot from its curve.csv.
    Plot {
        run: PathBuf,
        /// Image path; defaults to `<run>/plot.png`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient checks, window-count oracle, Leitner trace and bandit sanity.
    Selftest,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Parses `0..4` (inclusive), a single seed, or a comma list.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds `{spec}`"));
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses arguments, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code(&e));
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MEMTUTOR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("MEMTUTOR_THREADS must be a positive integer, got `{raw}`")))?;
    // a second initialisation in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Pretrain { common, seeds, out } => {
            let cfg = ExperimentConfig::load(common.config.as_deref(), &common.set)?;
            let seed = parse_seeds(&seeds)?[0];
            cmd_pretrain(&cfg, seed, &out)
        }
        Command::Run {
            common,
            tutor,
            seeds,
            out,
            priors,
        } => {
            let mut set = common.set.clone();
            if let Some(t) = tutor {
                TutorKind::parse(&t)?;
                set.push(format!("tutor=\"{t}\""));
            }
            let cfg = ExperimentConfig::load(common.config.as_deref(), &set)?;
            let seeds = parse_seeds(&seeds)?;
            let dir = cmd_run(&cfg, &seeds, &out, priors.as_deref())?;
            println!("{}", dir.display());
            Ok(())
        }
        Command::Compare { runs, out } => {
            let rows = compare_runs(&runs, &out)?;
            println!("{:<10} {:>12} {:>12} {:>10}  run", "tutor", "first", "final", "final_std");
            for r in &rows {
                println!(
                    "{:<10} {:>12.6} {:>12.6} {:>10.6}  {}",
                    r.tutor,
                    r.first_mean,
                    r.final_mean,
                    r.final_std,
                    r.run_dir.display()
                );
            }
            println!("{}", out.join("compare.png").display());
            Ok(())
        }
        Command::Plot { run, out } => {
            let curve = read_curve_csv(&run.join("curve.csv"))?;
            let path = out.unwrap_or_else(|| run.join("plot.png"));
            plot_curves(&path, &[(curve.tutor, curve.agg)])?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Selftest => {
            let checks = crate::selftest::run_all();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Error::invalid("selftest failed"))
            }
        }
    }
}

/// Writes `priors.csv`, `initial_params.csv` and `fitted_params.csv`.
pub fn cmd_pretrain(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<()> {
    let bank = cfg.bank()?;
    let pre = pretrain_priors(
        &cfg.pretrain,
        &cfg.generator,
        &bank,
        &cfg.windows,
        &cfg.schedule,
        &mut substream(seed, "pretrain"),
    )?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    pre.priors.write(&out.join("priors.csv"))?;
    pre.initial.write_csv(&out.join("initial_params.csv"))?;
    pre.fitted.write_csv(&out.join("fitted_params.csv"))?;
    println!("{:<6} {:>10} {:>10}", "family", "mu", "sigma");
    for f in Family::ALL {
        let p = pre.priors.get(f);
        println!("{:<6} {:>10.5} {:>10.5}", f.name(), p.mu, p.sigma);
    }
    println!("{}", out.join("priors.csv").display());
    Ok(())
}

/// Runs `cfg.tutor` for every seed and writes the run directory.
pub fn cmd_run(cfg: &ExperimentConfig, seeds: &[u64], out: &Path, priors: Option<&Path>) -> Result<PathBuf> {
    let priors = match (cfg.tutor, priors) {
        (TutorKind::Rl, None) => {
            return Err(Error::Config(
                "the rl tutor needs --priors <file>; create one with `memtutor pretrain`".into(),
            ))
        }
        (_, Some(p)) => Some(PriorDistributions::read(p)?),
        (_, None) => None,
    };
    let runs = seeds
        .par_iter()
        .map(|&s| run_experiment(cfg, s, priors.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let dir = run_dir(out, cfg);
    let agg = emit_outputs(&dir, cfg, &runs)?;
    eprintln!(
        "{}: first session {:.4}, final session {:.4} ± {:.4} over {} seeds",
        cfg.tutor,
        agg.mean[0],
        agg.mean[agg.len() - 1],
        agg.std[agg.len() - 1],
        seeds.len()
    );
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1, 3,5").unwrap(), vec![1, 3, 5]);
        assert!(parse_seeds("4..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
