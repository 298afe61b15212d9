//! Local clocks that can drift before GST, pause, and be bumped forward.

use serde::{Deserialize, Serialize};

use crate::types::Ticks;

/// Clock rate in thousandths of real time. 1000 is real time.
pub const REAL_TIME: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalClock {
    value: Ticks,
    at: Ticks,
    rate: u64,
    paused: bool,
}

impl Default for LocalClock {
    fn default() -> Self {
        Self::new(0, REAL_TIME)
    }
}

impl LocalClock {
    /// A clock reading 0 at real time `at`, advancing at `rate`/1000.
    pub fn new(at: Ticks, rate: u64) -> Self {
        Self {
            value: 0,
            at,
            rate,
            paused: false,
        }
    }

    pub fn read(&self, now: Ticks) -> Ticks {
        if self.paused || now <= self.at {
            self.value
        } else {
            self.value + (now - self.at) * self.rate / REAL_TIME
        }
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn rate(&self) -> u64 {
        self.rate
    }

    fn rebase(&mut self, now: Ticks) {
        self.value = self.read(now);
        self.at = self.at.max(now);
    }

    /// Overwrite the reading at `now`. Callers only move clocks forward,
    /// except for trimming sub-tick drift overshoot onto a target.
    pub fn set(&mut self, now: Ticks, value: Ticks) {
        self.rebase(now);
        self.value = value;
    }

    pub fn pause(&mut self, now: Ticks) {
        self.rebase(now);
        self.paused = true;
    }

    pub fn resume(&mut self, now: Ticks) {
        self.rebase(now);
        self.paused = false;
    }

    pub fn set_rate(&mut self, now: Ticks, rate: u64) {
        self.rebase(now);
        self.rate = rate;
    }

    /// Earliest real time `>= now` at which the reading is `>= target`;
    /// `None` if the clock is paused or stopped and has not reached it.
    pub fn time_to_reach(&self, now: Ticks, target: Ticks) -> Option<Ticks> {
        let cur = self.read(now);
        if cur >= target {
            return Some(now);
        }
        if self.paused || self.rate == 0 {
            return None;
        }
        let need = (target - self.value) * REAL_TIME;
        let dt = need.div_ceil(self.rate);
        Some((self.at + dt).max(now))
    }
}
