//! Byzantine strategies: how corrupted processors behave and when every
//! message is delivered.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{DelayKind, ScenarioConfig, StrategyKind};
use crate::types::{ProcessorId, Ticks};

/// Pre-GST random delays are drawn from at most this many Δ.
const PRE_GST_RANDOM_SPAN: Ticks = 4;

/// How a processor is driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Honest,
    /// Never steps and never sends.
    Silent,
    /// Runs the honest synchronizer, but votes for every proposal at once,
    /// ignores the QC deadline and pre-sends epoch-view messages for every
    /// epoch it may reach.
    Colluder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayPolicy {
    Random,
    Max,
    /// Corrupted senders' messages arrive immediately; honest ones at the
    /// deadline.
    FastCorrupt,
    Bimodal,
    Straggler(ProcessorId),
}

/// Delivery contract bounds for a message sent at `now`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contract {
    pub gst: Ticks,
    pub big_delta: Ticks,
    pub delta: Ticks,
}

impl Contract {
    pub fn latest(&self, now: Ticks) -> Ticks {
        if now >= self.gst {
            now + self.delta
        } else {
            self.gst + self.big_delta
        }
    }

    pub fn admits(&self, now: Ticks, d: Ticks) -> bool {
        d >= now && d <= self.latest(now)
    }
}

pub struct Adversary {
    strategy: StrategyKind,
    policy: DelayPolicy,
    corrupted: BTreeSet<ProcessorId>,
    contract: Contract,
    rng: ChaCha8Rng,
}

impl Adversary {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let strategy = cfg.adversary.strategy;
        let default = match strategy {
            StrategyKind::None => DelayPolicy::Random,
            StrategyKind::SilentLeaders | StrategyKind::MaxDelay => DelayPolicy::Max,
            StrategyKind::FastColluders => DelayPolicy::FastCorrupt,
        };
        let policy = match cfg.adversary.params.delay {
            Some(DelayKind::Random) => DelayPolicy::Random,
            Some(DelayKind::Max) => DelayPolicy::Max,
            Some(DelayKind::Bimodal) => DelayPolicy::Bimodal,
            Some(DelayKind::Straggler) => {
                let mut pick = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0073_7472_6167);
                DelayPolicy::Straggler(ProcessorId(pick.gen_range(0..cfg.n as u32)))
            }
            None => default,
        };
        Self {
            strategy,
            policy,
            corrupted: cfg.corrupted_set(),
            contract: Contract {
                gst: cfg.gst,
                big_delta: cfg.big_delta,
                delta: cfg.delta,
            },
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6164_7665_7273),
        }
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    pub fn policy(&self) -> DelayPolicy {
        self.policy
    }

    pub fn contract(&self) -> Contract {
        self.contract
    }

    pub fn role(&self, p: ProcessorId) -> Role {
        if !self.corrupted.contains(&p) {
            return Role::Honest;
        }
        match self.strategy {
            StrategyKind::FastColluders => Role::Colluder,
            _ => Role::Silent,
        }
    }

    /// Delivery time for a non-self message sent at `now`.
    pub fn delivery_time(&mut self, from: ProcessorId, to: ProcessorId, now: Ticks) -> Ticks {
        let c = self.contract;
        match self.policy {
            DelayPolicy::Max => c.latest(now),
            DelayPolicy::FastCorrupt if self.corrupted.contains(&from) => now,
            DelayPolicy::FastCorrupt => c.latest(now),
            DelayPolicy::Straggler(s) if s != to => now + 1,
            DelayPolicy::Straggler(_) | DelayPolicy::Bimodal => {
                if self.rng.gen_bool(0.5) {
                    now + 1
                } else {
                    c.latest(now)
                }
            }
            DelayPolicy::Random => {
                let hi = if now >= c.gst {
                    now + c.delta
                } else {
                    c.latest(now).min(now + PRE_GST_RANDOM_SPAN * c.big_delta)
                };
                self.rng.gen_range(now + 1..=hi.max(now + 1))
            }
        }
    }
}
