//! Trains the recurrent policy on a two-armed bandit and prints how fast the
//! paying arm takes over.

use memtutor::rl::bandit_sanity;

fn main() -> memtutor::Result<()> {
    for seed in 0..5 {
        let report = bandit_sanity(seed, 50)?;
        let last = report.prob_trace.last().copied().unwrap_or(f64::NAN);
        match report.solved_at {
            Some(it) => println!("seed {seed}: P(arm A) = {last:.4} after {it} iterations"),
            None => println!("seed {seed}: not solved, P(arm A) = {last:.4}"),
        }
    }
    Ok(())
}
