use crate::error::{Error, Result};

const DAY: u64 = 86_400;

/// When each presentation happens.
///
/// Day `d`, session `s` starts at `d·86400 + session_offsets[s]`; presentations
/// within a session are `step_gap_secs` apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSchedule {
    pub days: usize,
    pub items_per_session: usize,
    pub step_gap_secs: u64,
    /// Session start times within a day, in seconds after midnight.
    pub session_offsets_secs: Vec<u64>,
}

impl Default for SessionSchedule {
    /// 15 days, sessions at 09:00 and 21:00, 10 items 30 s apart.
    fn default() -> Self {
        SessionSchedule {
            days: 15,
            items_per_session: 10,
            step_gap_secs: 30,
            session_offsets_secs: vec![9 * 3600, 21 * 3600],
        }
    }
}

impl SessionSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 || self.items_per_session == 0 || self.session_offsets_secs.is_empty() {
            return Err(Error::Config(
                "schedule needs at least one day, one session and one item per session".into(),
            ));
        }
        if self.step_gap_secs == 0 && self.items_per_session > 1 {
            return Err(Error::Config("step gap must be positive".into()));
        }
        let span = self.step_gap_secs * (self.items_per_session as u64 - 1);
        let mut ends = self.session_offsets_secs.iter().map(|o| o + span);
        let mut prev_end: Option<u64> = None;
        for &start in &self.session_offsets_secs {
            if prev_end.is_some_and(|e| start <= e) {
                return Err(Error::Config(
                    "sessions must be ascending and must not overlap".into(),
                ));
            }
            prev_end = ends.next();
        }
        if prev_end.is_some_and(|e| e >= DAY + self.session_offsets_secs[0]) {
            return Err(Error::Config("last session runs into the next day".into()));
        }
        Ok(())
    }

    pub fn sessions_per_day(&self) -> usize {
        self.session_offsets_secs.len()
    }

    pub fn n_sessions(&self) -> usize {
        self.days * self.sessions_per_day()
    }

    pub fn n_steps(&self) -> usize {
        self.n_sessions() * self.items_per_session
    }

    pub fn session_start(&self, session: usize) -> u64 {
        let per_day = self.sessions_per_day();
        (session / per_day) as u64 * DAY + self.session_offsets_secs[session % per_day]
    }

    /// Timestamp of global presentation index `step`.
    pub fn step_time(&self, step: usize) -> u64 {
        let session = step / self.items_per_session;
        let within = (step % self.items_per_session) as u64;
        self.session_start(session) + within * self.step_gap_secs
    }

    pub fn session_of(&self, step: usize) -> usize {
        step / self.items_per_session
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_protocol_arithmetic() {
        let s = SessionSchedule::default();
        s.validate().unwrap();
        assert_eq!(s.n_sessions(), 30);
        assert_eq!(s.n_steps(), 300);
        assert_eq!(s.step_time(0), 9 * 3600);
        assert_eq!(s.step_time(9), 9 * 3600 + 270);
        assert_eq!(s.step_time(10), 21 * 3600);
        assert_eq!(s.step_time(20), DAY + 9 * 3600);
        let times: Vec<u64> = (0..s.n_steps()).map(|i| s.step_time(i)).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_overlapping_sessions() {
        let s = SessionSchedule {
            session_offsets_secs: vec![100, 200],
            ..SessionSchedule::default()
        };
        assert!(s.validate().is_err());
        let s = SessionSchedule { items_per_session: 0, ..SessionSchedule::default() };
        assert!(s.validate().is_err());
    }
}
