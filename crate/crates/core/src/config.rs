//! Scenario configuration: parsing, validation and derived run parameters.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::REAL_TIME;
use crate::error::ConfigError;
use crate::protocol::{Mutations, ProtocolParams};
use crate::schedule::{build_schedule, BaselineVariant, Leaders};
use crate::types::{lumiere_epoch_len, EpochGeometry, ProcessorId, Ticks};

/// Default run length after GST, in units of `n·Γ`.
pub const DEFAULT_HORIZON_MULTIPLIER: u64 = 40;

/// Largest accepted pre-GST clock rate, in thousandths of real time.
pub const MAX_DRIFT_PER_MILLE: u64 = 10 * REAL_TIME;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynchronizerKind {
    #[default]
    Lumiere,
    Lp22,
    Basic,
}

impl SynchronizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynchronizerKind::Lumiere => "lumiere",
            SynchronizerKind::Lp22 => "lp22",
            SynchronizerKind::Basic => "basic",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// No corrupted behaviour beyond crashing; random delays.
    #[default]
    None,
    SilentLeaders,
    FastColluders,
    MaxDelay,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::None => "none",
            StrategyKind::SilentLeaders => "silent_leaders",
            StrategyKind::FastColluders => "fast_colluders",
            StrategyKind::MaxDelay => "max_delay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    /// Uniform within the contract.
    Random,
    /// Exactly at the contract deadline.
    Max,
    /// One tick or the full deadline, by a fair coin. Lets fast
    /// message chains overtake single slow messages.
    Bimodal,
    /// Every message takes one tick except those to one seed-chosen
    /// processor, which take one tick or the full deadline.
    Straggler,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversaryParams {
    /// Override the strategy's delay policy.
    pub delay: Option<DelayKind>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub strategy: StrategyKind,
    #[serde(default)]
    pub params: AdversaryParams,
}

/// Seeded pre-GST desynchronization: random join times and clock rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Desync {
    /// Join times are drawn from `[0, max_start_offset]`, capped at GST.
    pub max_start_offset: Ticks,
    pub min_rate_per_mille: u64,
    pub max_rate_per_mille: u64,
}

fn default_x() -> u64 {
    2
}

fn default_z() -> usize {
    2
}

/// One deterministic run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub f: usize,
    /// Δ, the known post-GST delay bound.
    #[serde(rename = "Delta")]
    pub big_delta: Ticks,
    /// δ, the actual post-GST delay bound.
    pub delta: Ticks,
    pub gst: Ticks,
    #[serde(default = "default_x")]
    pub x: u64,
    #[serde(default = "default_z")]
    pub z: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<Ticks>,
    /// Stop once an honest processor enters an epoch above this one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_epoch: Option<i64>,
    /// Stop once an honest processor is this many epochs above the highest
    /// honest epoch at GST. Runs can cover many epochs before GST when
    /// messages are fast, so this bounds post-GST work independently.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs_after_gst: Option<i64>,
    #[serde(default)]
    pub corrupted: Vec<u32>,
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_offsets: Option<Vec<Ticks>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_per_mille: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desync: Option<Desync>,
    #[serde(default)]
    pub synchronizer: SynchronizerKind,
    #[serde(default)]
    pub mutations: Mutations,
}

impl ScenarioConfig {
    /// A small all-honest scenario with the given size; mostly for tests.
    pub fn minimal(f: usize) -> Self {
        Self {
            n: 3 * f + 1,
            f,
            big_delta: 40,
            delta: 4,
            gst: 1000,
            x: 2,
            z: 2,
            seed: 7,
            horizon: None,
            max_epoch: None,
            epochs_after_gst: None,
            corrupted: Vec::new(),
            adversary: AdversaryConfig::default(),
            start_offsets: None,
            drift_per_mille: None,
            desync: None,
            synchronizer: SynchronizerKind::Lumiere,
            mutations: Mutations::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |p: &str, m: String| Err(ConfigError::new(p, m));
        if self.f == 0 {
            return err("/f", "f must be >= 1".into());
        }
        if self.n != 3 * self.f + 1 {
            return err("/n", format!("n must equal 3f+1 = {}, got {}", 3 * self.f + 1, self.n));
        }
        if self.big_delta == 0 {
            return err("/Delta", "Delta must be >= 1".into());
        }
        if self.delta == 0 || self.delta > self.big_delta {
            return err("/delta", format!("delta must be in [1, Delta={}], got {}", self.big_delta, self.delta));
        }
        if self.x < 2 {
            return err("/x", format!("x must be >= 2, got {}", self.x));
        }
        if self.z < 2 || !self.z.is_multiple_of(2) {
            return err("/z", format!("z must be even and >= 2, got {}", self.z));
        }
        if self.horizon == Some(0) {
            return err("/horizon", "horizon must be positive".into());
        }
        if self.max_epoch.is_some_and(|e| e < 0) {
            return err("/max_epoch", "max_epoch must be >= 0".into());
        }
        if self.epochs_after_gst.is_some_and(|e| e < 0) {
            return err("/epochs_after_gst", "epochs_after_gst must be >= 0".into());
        }
        if self.corrupted.len() > self.f {
            return err("/corrupted", format!("at most f={} processors may be corrupted, got {}", self.f, self.corrupted.len()));
        }
        let mut seen = BTreeSet::new();
        for (i, &p) in self.corrupted.iter().enumerate() {
            if p as usize >= self.n {
                return err(&format!("/corrupted/{i}"), format!("processor {p} out of range [0, {})", self.n));
            }
            if !seen.insert(p) {
                return err(&format!("/corrupted/{i}"), format!("processor {p} listed twice"));
            }
        }
        if let Some(offsets) = &self.start_offsets {
            if offsets.len() != self.n {
                return err("/start_offsets", format!("expected {} entries, got {}", self.n, offsets.len()));
            }
            if let Some(i) = offsets.iter().position(|&o| o > self.gst) {
                return err(&format!("/start_offsets/{i}"), format!("processors must join by GST={}", self.gst));
            }
        }
        if let Some(rates) = &self.drift_per_mille {
            if rates.len() != self.n {
                return err("/drift_per_mille", format!("expected {} entries, got {}", self.n, rates.len()));
            }
            if let Some(i) = rates.iter().position(|&r| r > MAX_DRIFT_PER_MILLE) {
                return err(&format!("/drift_per_mille/{i}"), format!("rate must be <= {MAX_DRIFT_PER_MILLE}"));
            }
        }
        if let Some(d) = &self.desync {
            if d.min_rate_per_mille > d.max_rate_per_mille || d.max_rate_per_mille > MAX_DRIFT_PER_MILLE {
                return err(
                    "/desync/max_rate_per_mille",
                    format!("need min <= max <= {MAX_DRIFT_PER_MILLE}"),
                );
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> Ticks {
        match self.synchronizer {
            SynchronizerKind::Lumiere | SynchronizerKind::Basic => 2 * (self.x + 2) * self.big_delta,
            SynchronizerKind::Lp22 => (self.x + 1) * self.big_delta,
        }
    }

    pub fn epoch_len(&self) -> u64 {
        match self.synchronizer {
            SynchronizerKind::Lumiere => lumiere_epoch_len(self.n),
            SynchronizerKind::Lp22 => self.f as u64 + 1,
            SynchronizerKind::Basic => 2 * (self.f as u64 + 1),
        }
    }

    pub fn params(&self) -> ProtocolParams {
        let gamma = self.gamma();
        let qc_deadline = match self.synchronizer {
            SynchronizerKind::Lp22 => None,
            _ if self.mutations.no_qc_deadline => None,
            _ => Some(gamma / 2 - 2 * self.big_delta),
        };
        ProtocolParams {
            n: self.n,
            f: self.f,
            delta: self.big_delta,
            gamma,
            geometry: EpochGeometry::new(self.epoch_len()),
            qc_deadline,
            mutations: self.mutations,
        }
    }

    pub fn leaders(&self) -> Result<Leaders, ConfigError> {
        Ok(match self.synchronizer {
            SynchronizerKind::Lumiere => Leaders::Lumiere(build_schedule(self.n, self.z, self.seed)?),
            SynchronizerKind::Lp22 => Leaders::Baseline {
                variant: BaselineVariant::Lp22,
                n: self.n,
            },
            SynchronizerKind::Basic => Leaders::Baseline {
                variant: BaselineVariant::Basic,
                n: self.n,
            },
        })
    }

    pub fn corrupted_set(&self) -> BTreeSet<ProcessorId> {
        self.corrupted.iter().copied().map(ProcessorId).collect()
    }

    pub fn horizon_for(&self, multiplier: u64) -> Ticks {
        self.gst + multiplier * self.n as u64 * self.gamma()
    }

    pub fn effective_horizon(&self) -> Ticks {
        self.horizon.unwrap_or_else(|| self.horizon_for(DEFAULT_HORIZON_MULTIPLIER))
    }

    /// Join times and pre-GST clock rates. Explicit lists win over `desync`;
    /// without either, everyone joins at 0 with real-time clocks.
    pub fn clock_setup(&self) -> (Vec<Ticks>, Vec<u64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x6465_7379_6e63);
        let (mut offsets, mut rates) = (vec![0; self.n], vec![REAL_TIME; self.n]);
        if let Some(d) = &self.desync {
            let cap = d.max_start_offset.min(self.gst);
            for i in 0..self.n {
                offsets[i] = rng.gen_range(0..=cap);
                rates[i] = rng.gen_range(d.min_rate_per_mille..=d.max_rate_per_mille);
            }
        }
        if let Some(o) = &self.start_offsets {
            offsets.clone_from(o);
        }
        if let Some(r) = &self.drift_per_mille {
            rates.clone_from(r);
        }
        (offsets, rates)
    }

    /// Parse and validate a scenario document.
    pub fn from_json_str(src: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(src);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            let inner = e.into_inner();
            ConfigError {
                pointer,
                message: inner.to_string(),
                line: Some(inner.line()),
            }
        })?;
        cfg.validate().map_err(|mut e| {
            e.line = line_of_pointer(src, &e.pointer);
            e
        })?;
        Ok(cfg)
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_json_str(&src)
}

/// Render a serde path as an RFC 6901 JSON pointer.
pub(crate) fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push_str(&key.replace('~', "~0").replace('/', "~1"))
            }
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Best-effort 1-based line of the first key named by the pointer's first
/// segment.
pub(crate) fn line_of_pointer(src: &str, pointer: &str) -> Option<usize> {
    let key = pointer.split('/').nth(1)?;
    let needle = format!("\"{key}\"");
    src.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}
