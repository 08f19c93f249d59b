//! Time-window attempt/success counters.
//!
//! A record at time `t` falls in window `w` at query time `now` when
//! `t < now` and `now − t ≤ τ_w`. The last window is unbounded.

use std::collections::HashMap;

use super::history::InteractionRecord;
use super::items::ItemBank;
use crate::error::{Error, Result};

const HOUR: f64 = 3600.0;
const DAY: f64 = 24.0 * HOUR;

/// Ascending lookback horizons in seconds; the last one is infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWindows {
    tau: Vec<f64>,
}

impl Default for TimeWindows {
    /// 1 hour, 1 day, 1 week, 30 days, unbounded.
    fn default() -> Self {
        TimeWindows {
            tau: vec![HOUR, DAY, 7.0 * DAY, 30.0 * DAY, f64::INFINITY],
        }
    }
}

impl TimeWindows {
    /// Builds windows from finite horizons (seconds); the unbounded window is appended.
    pub fn from_finite(finite_secs: &[f64]) -> Result<Self> {
        let mut tau = finite_secs.to_vec();
        tau.push(f64::INFINITY);
        Self::new(tau)
    }

    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.last() != Some(&f64::INFINITY) {
            return Err(Error::invalid("last time window must be infinite"));
        }
        if tau.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(Error::invalid("time windows must be positive"));
        }
        if tau.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::invalid("time windows must be strictly ascending"));
        }
        Ok(TimeWindows { tau })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    fn contains(&self, w: usize, age: u64) -> bool {
        age as f64 <= self.tau[w]
    }
}

/// Attempts `n` and correct answers `c` inside one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowCount {
    pub n: u32,
    pub c: u32,
}

/// Counts prior attempts by `learner` on `skill` in every window, scanning the
/// whole history. Every record must predate `now`.
pub fn count_windows(
    history: &[InteractionRecord],
    bank: &ItemBank,
    learner: usize,
    skill: usize,
    now: u64,
    windows: &TimeWindows,
) -> Result<Vec<WindowCount>> {
    let mut out = vec![WindowCount::default(); windows.len()];
    for r in history {
        if r.timestamp >= now {
            return Err(Error::ClockOrder {
                timestamp: r.timestamp,
                now,
            });
        }
        if r.learner != learner || !bank.skills_checked(r.item)?.contains(&skill) {
            continue;
        }
        let age = now - r.timestamp;
        for (w, cnt) in out.iter_mut().enumerate() {
            if windows.contains(w, age) {
                cnt.n += 1;
                cnt.c += u32::from(r.correct);
            }
        }
    }
    Ok(out)
}

/// Append-only counter store answering window queries in `O(W log n)`.
///
/// Per `(learner, skill)` it keeps attempt timestamps with a running count of
/// correct answers, so any window is a difference of two prefix positions.
#[derive(Debug, Clone, Default)]
pub struct WindowCounterTable {
    series: HashMap<(usize, usize), Series>,
    last_seen: HashMap<usize, u64>,
}

#[derive(Debug, Clone, Default)]
struct Series {
    times: Vec<u64>,
    /// `cum_correct[i]` = correct answers among the first `i` attempts.
    cum_correct: Vec<u32>,
}

impl WindowCounterTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from a history sorted by timestamp per learner.
    pub fn from_history(history: &[InteractionRecord], bank: &ItemBank) -> Result<Self> {
        let mut table = Self::new();
        for r in history {
            table.push(r, bank)?;
        }
        Ok(table)
    }

    /// Appends a record. Timestamps must not decrease for a given learner.
    pub fn push(&mut self, record: &InteractionRecord, bank: &ItemBank) -> Result<()> {
        let skills = bank.skills_checked(record.item)?;
        if let Some(&last) = self.last_seen.get(&record.learner) {
            if record.timestamp < last {
                return Err(Error::invalid(format!(
                    "learner {} history goes back in time ({} after {})",
                    record.learner, record.timestamp, last
                )));
            }
        }
        self.last_seen.insert(record.learner, record.timestamp);
        for &k in skills {
            let s = self.series.entry((record.learner, k)).or_insert_with(|| Series {
                times: Vec::new(),
                cum_correct: vec![0],
            });
            s.times.push(record.timestamp);
            let prev = *s.cum_correct.last().unwrap();
            s.cum_correct.push(prev + u32::from(record.correct));
        }
        Ok(())
    }

    /// Timestamp of the learner's most recent record.
    pub fn last_timestamp(&self, learner: usize) -> Option<u64> {
        self.last_seen.get(&learner).copied()
    }

    /// Window counts over records strictly before `now`.
    pub fn query(
        &self,
        learner: usize,
        skill: usize,
        now: u64,
        windows: &TimeWindows,
    ) -> Vec<WindowCount> {
        let Some(s) = self.series.get(&(learner, skill)) else {
            return vec![WindowCount::default(); windows.len()];
        };
        let end = s.times.partition_point(|&t| t < now);
        windows
            .tau()
            .iter()
            .map(|&tau| {
                let start = if tau.is_infinite() {
                    0
                } else {
                    // age ≤ τ  ⇔  t ≥ now − τ
                    let oldest = now as f64 - tau;
                    s.times[..end].partition_point(|&t| (t as f64) < oldest)
                };
                WindowCount {
                    n: (end - start) as u32,
                    c: s.cum_correct[end] - s.cum_correct[start],
                }
            })
            .collect()
    }

    /// Counts for every skill of `item`, in [`ItemBank::skills`] order.
    pub fn query_item(
        &self,
        bank: &ItemBank,
        learner: usize,
        item: usize,
        now: u64,
        windows: &TimeWindows,
    ) -> Vec<Vec<WindowCount>> {
        bank.skills(item)
            .iter()
            .map(|&k| self.query(learner, k, now, windows))
            .collect()
    }
}
