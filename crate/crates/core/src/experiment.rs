//! Experiment specs: seed sweeps over scenario templates, run in parallel
//! and reported as CSV.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{json_pointer, line_of_pointer, ScenarioConfig, StrategyKind, SynchronizerKind};
use crate::error::{ConfigError, SimError};
use crate::metrics::{check_lemma_suite, LemmaReport, MetricsRow};
use crate::sim::run;

/// Half-open seed range written `a..b` in specs and on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SeedRange(pub Range<u64>);

impl TryFrom<String> for SeedRange {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        parse_seed_range(&s).map(SeedRange)
    }
}

impl From<SeedRange> for String {
    fn from(r: SeedRange) -> String {
        format!("{}..{}", r.0.start, r.0.end)
    }
}

/// Parse `a..b` (half-open) or a single seed `a`.
pub fn parse_seed_range(s: &str) -> Result<Range<u64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|e| format!("bad seed {t:?}: {e}"))
    };
    let r = match s.split_once("..") {
        Some((a, b)) => num(a)?..num(b)?,
        None => {
            let a = num(s)?;
            a..a + 1
        }
    };
    if r.is_empty() {
        return Err(format!("empty seed range {s:?}"));
    }
    Ok(r)
}

/// Values to sweep. Each present axis multiplies the run count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    /// Processor counts; `f` follows as `(n - 1) / 3`.
    pub n: Vec<usize>,
    /// Number of corrupted processors, taken as ids `0..f_a`.
    pub f_a: Vec<usize>,
    pub delta: Vec<u64>,
    pub strategy: Vec<StrategyKind>,
    pub synchronizer: Vec<SynchronizerKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub name: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenarios: Vec<ScenarioTemplate>,
    pub seeds: SeedRange,
    #[serde(default)]
    pub axes: SweepAxes,
    /// Overrides each template's horizon with `GST + m·n·Γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_multiplier: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

/// A fully instantiated run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub scenario: String,
    pub config: ScenarioConfig,
}

impl ExperimentSpec {
    pub fn from_json_str(src: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(src);
        let spec: ExperimentSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            let inner = e.into_inner();
            ConfigError {
                pointer,
                message: inner.to_string(),
                line: Some(inner.line()),
            }
        })?;
        spec.jobs().map_err(|mut e| {
            e.line = line_of_pointer(src, &e.pointer);
            e
        })?;
        Ok(spec)
    }

    /// Expand templates, axes and seeds into jobs. Every job config is
    /// validated; errors point at the template that produced it.
    pub fn jobs(&self) -> Result<Vec<Job>, ConfigError> {
        if self.scenarios.is_empty() {
            return Err(ConfigError::new("/scenarios", "at least one scenario is required"));
        }
        let a = &self.axes;
        let mut jobs = Vec::new();
        for (i, tpl) in self.scenarios.iter().enumerate() {
            let at = |e: ConfigError| ConfigError::new(format!("/scenarios/{i}/config{}", e.pointer), e.message);
            tpl.config.validate().map_err(at)?;
            for n in axis(&a.n) {
                for f_a in axis(&a.f_a) {
                    for delta in axis(&a.delta) {
                        for strategy in axis(&a.strategy) {
                            for sync in axis(&a.synchronizer) {
                                let mut cfg = tpl.config.clone();
                                let mut name = tpl.name.clone();
                                if let Some(n) = n {
                                    cfg.n = n;
                                    cfg.f = n.saturating_sub(1) / 3;
                                    name.push_str(&format!("/n={n}"));
                                    if f_a.is_none() && cfg.corrupted.len() > cfg.f {
                                        cfg.corrupted.truncate(cfg.f);
                                    }
                                }
                                if let Some(k) = f_a {
                                    cfg.corrupted = (0..k as u32).collect();
                                    name.push_str(&format!("/f_a={k}"));
                                }
                                if let Some(d) = delta {
                                    cfg.delta = d;
                                    name.push_str(&format!("/delta={d}"));
                                }
                                if let Some(s) = strategy {
                                    cfg.adversary.strategy = s;
                                    name.push_str(&format!("/{}", s.as_str()));
                                }
                                if let Some(s) = sync {
                                    cfg.synchronizer = s;
                                    name.push_str(&format!("/{}", s.as_str()));
                                }
                                if let Some(m) = self.horizon_multiplier {
                                    cfg.horizon = Some(cfg.horizon_for(m));
                                }
                                cfg.validate().map_err(|e| {
                                    ConfigError::new(
                                        "/axes",
                                        format!("{name}: {}: {}", e.pointer, e.message),
                                    )
                                })?;
                                for seed in self.seeds.0.clone() {
                                    let mut c = cfg.clone();
                                    c.seed = seed;
                                    jobs.push(Job {
                                        scenario: name.clone(),
                                        config: c,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(jobs)
    }
}

fn axis<T: Copy>(v: &[T]) -> Vec<Option<T>> {
    if v.is_empty() {
        vec![None]
    } else {
        v.iter().copied().map(Some).collect()
    }
}

pub fn load_experiment(path: &Path) -> Result<ExperimentSpec, ConfigError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    ExperimentSpec::from_json_str(&src)
}

/// Run every job on the rayon pool. Rows come back sorted by
/// (scenario, seed, synchronizer) regardless of scheduling.
pub fn run_jobs(jobs: &[Job]) -> Result<Vec<MetricsRow>, SimError> {
    let mut rows = jobs
        .par_iter()
        .map(|j| run(&j.config).map(|out| MetricsRow::from_run(&j.scenario, &out)))
        .collect::<Result<Vec<_>, _>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [MetricsRow]) {
    rows.sort_by(|a, b| {
        (&a.scenario, a.seed, &a.synchronizer).cmp(&(&b.scenario, b.seed, &b.synchronizer))
    });
}

/// The same jobs once per synchronizer, for side-by-side comparison.
pub fn compare_jobs(jobs: &[Job]) -> Vec<Job> {
    let mut out = Vec::with_capacity(jobs.len() * 3);
    for j in jobs {
        for s in [SynchronizerKind::Lumiere, SynchronizerKind::Lp22, SynchronizerKind::Basic] {
            let mut config = j.config.clone();
            config.synchronizer = s;
            out.push(Job {
                scenario: j.scenario.clone(),
                config,
            });
        }
    }
    out.dedup();
    out
}

/// Lemma suite over a seed range of one scenario, in seed order.
pub fn check_seeds(cfg: &ScenarioConfig, seeds: Range<u64>) -> Result<Vec<(u64, LemmaReport)>, SimError> {
    seeds
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&seed| {
            let mut c = cfg.clone();
            c.seed = seed;
            run(&c).map(|out| (seed, check_lemma_suite(&out)))
        })
        .collect()
}

/// Write rows as CSV. `preamble`, if given, becomes a leading `# ` comment
/// line (the CLI puts a timestamp there).
pub fn write_csv<W: Write>(rows: &[MetricsRow], mut w: W, preamble: Option<&str>) -> csv::Result<()> {
    if let Some(p) = preamble {
        writeln!(w, "# {p}")?;
    }
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Column order of the metrics CSV.
pub const CSV_COLUMNS: &[&str] = &[
    "scenario",
    "synchronizer",
    "strategy",
    "seed",
    "n",
    "f",
    "f_a",
    "Delta",
    "delta",
    "gst",
    "end_time",
    "honest_sends",
    "qcs",
    "first_qc_after_gst",
    "max_w",
    "max_latency",
    "heavy_epochs_after_gst",
    "first_timely_epoch",
    "lemma_violations",
    "verdict",
    "trace_hash",
];
