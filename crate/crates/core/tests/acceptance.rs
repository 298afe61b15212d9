//! Acceptance gate. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use lumiere_core::config::{DelayKind, Desync, ScenarioConfig, StrategyKind, SynchronizerKind};
use lumiere_core::metrics::{check_lemma_suite, view_regression, view_sync_witness, Analysis};
use lumiere_core::protocol::Mutations;
use lumiere_core::sim::{run, RunOutput};
use lumiere_core::types::{Epoch, View};

const SIZES: [usize; 4] = [1, 2, 4, 7];
const GRID_SEEDS: u64 = 100;
const SEEDS: u64 = 20;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn lumiere(f: usize, seed: u64, m: Mutations) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::minimal(f);
    cfg.seed = seed;
    cfg.mutations = m;
    cfg.gst = 12 * cfg.n as u64 * cfg.gamma();
    cfg.epochs_after_gst = Some(3);
    cfg
}

/// Odd seeds split the processors: ids `0..=f` (the corrupted ones plus one
/// honest processor) join at 0 and everyone else at GST. Even seeds draw
/// join times and clock rates at random.
fn desync(cfg: &mut ScenarioConfig) {
    cfg.desync = Some(Desync {
        max_start_offset: cfg.gst,
        min_rate_per_mille: 500,
        max_rate_per_mille: 2000,
    });
    if cfg.seed % 2 == 1 {
        cfg.start_offsets = Some((0..cfg.n).map(|i| if i <= cfg.f { 0 } else { cfg.gst }).collect());
    }
}

fn grid_config(f: usize, strategy: StrategyKind, seed: u64, m: Mutations) -> ScenarioConfig {
    let mut cfg = lumiere(f, seed, m);
    cfg.adversary.strategy = strategy;
    cfg.corrupted = (0..f as u32).collect();
    desync(&mut cfg);
    cfg
}

fn must_run(cfg: &ScenarioConfig) -> RunOutput {
    run(cfg).unwrap_or_else(|e| panic!("run failed for {cfg:?}: {e}"))
}

struct GridRun {
    label: String,
    lemmas_ok: bool,
    first_violation: Option<String>,
    regression: bool,
    witness: bool,
    latency: Option<u64>,
    bound: u64,
}

fn grid(m: Mutations) -> (Vec<GridRun>, Duration) {
    let started = Instant::now();
    let mut cells = Vec::new();
    for f in SIZES {
        for s in [StrategyKind::SilentLeaders, StrategyKind::FastColluders, StrategyKind::MaxDelay] {
            for seed in 0..GRID_SEEDS {
                cells.push((f, s, seed));
            }
        }
    }
    let runs = cells
        .par_iter()
        .map(|&(f, s, seed)| {
            let cfg = grid_config(f, s, seed, m);
            let out = must_run(&cfg);
            let rep = check_lemma_suite(&out);
            let a = Analysis::new(&out);
            GridRun {
                label: format!("n={} {} seed={seed}", cfg.n, s.as_str()),
                lemmas_ok: rep.passed(),
                first_violation: rep.violations.first().map(|v| v.to_string()),
                regression: view_regression(&out).is_some(),
                witness: view_sync_witness(&out).is_some(),
                latency: a.t_star(cfg.gst).map(|t| t - cfg.gst),
                bound: 13 * cfg.n as u64 * cfg.gamma(),
            }
        })
        .collect();
    (runs, started.elapsed())
}

fn c1(runs: &[GridRun], took: Duration) -> Verdict {
    let bad: Vec<_> = runs.iter().filter(|r| !r.lemmas_ok).collect();
    let fast = took < Duration::from_secs(600);
    let mut detail = format!("{} runs, {} with violations, {:.1}s", runs.len(), bad.len(), took.as_secs_f64());
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first: {} {}", b.label, b.first_violation.as_deref().unwrap_or("")));
    }
    Verdict::new(bad.is_empty() && fast, detail)
}

fn c2(runs: &[GridRun]) -> Verdict {
    let regress = runs.iter().filter(|r| r.regression).count();
    let missing: Vec<_> = runs.iter().filter(|r| !r.witness).collect();
    let mut detail = format!("{regress} view regressions, {} runs without a witness view", missing.len());
    if let Some(b) = missing.first() {
        detail.push_str(&format!("; first: {}", b.label));
    }
    Verdict::new(regress == 0 && missing.is_empty(), detail)
}

fn c6(runs: &[GridRun]) -> Verdict {
    let bad: Vec<_> = runs.iter().filter(|r| r.latency.is_none_or(|l| l > r.bound)).collect();
    let worst = runs
        .iter()
        .filter_map(|r| r.latency.map(|l| l as f64 / r.bound as f64))
        .fold(0.0, f64::max);
    let mut detail = format!("worst (t*_GST - GST) / 13nΓ = {worst:.3}, {} over bound", bad.len());
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first: {} latency {:?}", b.label, b.latency));
    }
    Verdict::new(bad.is_empty(), detail)
}

/// Post-stabilization inter-QC windows, from the start of the first timely
/// epoch. `None` if no epoch started timely.
fn stable_windows(a: &Analysis<'_>) -> Option<Vec<lumiere_core::metrics::QcWindow>> {
    let e = a.first_timely_epoch()?;
    Some(a.qc_windows(a.start_of(e)?))
}

fn c3(m: Mutations) -> Verdict {
    let mut cases = Vec::new();
    for f in SIZES {
        for f_a in 0..=2.min(f) {
            for seed in 0..SEEDS {
                cases.push((f, f_a, seed));
            }
        }
    }
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(f, f_a, seed)| {
            let mut cfg = lumiere(f, seed, m);
            cfg.delta = cfg.big_delta / 10;
            cfg.adversary.strategy = StrategyKind::SilentLeaders;
            cfg.corrupted = (0..f_a as u32).collect();
            desync(&mut cfg);
            let out = must_run(&cfg);
            let a = Analysis::new(&out);
            let Some(ws) = stable_windows(&a) else {
                return (f_a, Err(format!("n={} f_a={f_a} seed={seed}: no timely epoch", cfg.n)));
            };
            let mut worst = 0.0f64;
            for w in &ws {
                let bound = 2 * a.gamma * w.faulty_pairs() as u64 + 8 * cfg.delta;
                worst = worst.max(w.gap() as f64 / bound as f64);
                if w.gap() > bound {
                    return (
                        f_a,
                        Err(format!(
                            "n={} f_a={f_a} seed={seed}: gap {} after view {:?} with {} faulty views > {bound}",
                            cfg.n,
                            w.gap(),
                            w.from.view,
                            w.faulty_views
                        )),
                    );
                }
            }
            (f_a, Ok(worst))
        })
        .collect();
    let fails: Vec<_> = results.iter().filter_map(|r| r.1.as_ref().err()).collect();
    let worst = results.iter().filter_map(|r| r.1.as_ref().ok()).fold(0.0f64, |x, y| x.max(*y));
    let mut detail = format!("{} runs, worst gap / bound = {worst:.3}, {} failing", results.len(), fails.len());
    if let Some(e) = fails.first() {
        detail.push_str(&format!("; first: {e}"));
    }
    Verdict::new(fails.is_empty(), detail)
}

/// Epoch-view messages for epochs after the first timely one.
fn evms_after_timely(a: &Analysis<'_>) -> Option<u64> {
    let e = a.first_timely_epoch()?;
    Some(
        (e.0 + 1..=a.max_epoch_entered().0)
            .map(|k| a.epoch_view_msgs_for(a.first_view_of(Epoch(k))))
            .sum(),
    )
}

fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

fn c4(m: Mutations) -> Verdict {
    // Two delay regimes: the default random one, and a straggler whose
    // incoming messages are sometimes as slow as allowed while QC chains
    // run at one tick. The latter uses a finer tick so a chain of one-tick
    // hops stays short relative to Δ.
    let mut cases = Vec::new();
    for f in SIZES {
        for straggler in [false, true] {
            for seed in 0..SEEDS {
                cases.push((f, straggler, seed));
            }
        }
    }
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(f, straggler, seed)| {
            let mut cfg = lumiere(f, seed, m);
            if straggler {
                cfg.big_delta = 1000;
                cfg.gst = 0;
                cfg.adversary.params.delay = Some(DelayKind::Straggler);
            }
            cfg.delta = cfg.big_delta / 10;
            if !straggler {
                desync(&mut cfg);
            }
            let out = must_run(&cfg);
            let a = Analysis::new(&out);
            let evms = evms_after_timely(&a);
            let per_view = a.first_timely_epoch().and_then(|e| a.start_of(e)).map(|from| {
                let v0 = a.first_view_of(a.first_timely_epoch().unwrap());
                let top = a.honest_qcs().last().map_or(v0, |q| q.view);
                let views = (top.0 - v0.0).max(1) as f64;
                a.sends_between(from, out.end_time) as f64 / views
            });
            (f, cfg.n, straggler, seed, evms, per_view)
        })
        .collect();
    let mut fails = Vec::new();
    for (_, n, straggler, seed, evms, per_view) in &results {
        let tag = if *straggler { "straggler" } else { "random" };
        match (evms, per_view) {
            (Some(0), Some(p)) if *p <= 6.0 * *n as f64 => {}
            (Some(0), Some(p)) => fails.push(format!("n={n} {tag} seed={seed}: {p:.1} sends/view > 6n")),
            (Some(k), _) => fails.push(format!("n={n} {tag} seed={seed}: {k} epoch-view messages after timely epoch")),
            (None, _) => fails.push(format!("n={n} {tag} seed={seed}: no timely epoch")),
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for f in SIZES {
        let vals: Vec<f64> = results
            .iter()
            .filter(|r| r.0 == f && !r.2)
            .filter_map(|r| r.5)
            .collect();
        if !vals.is_empty() {
            xs.push((3 * f + 1) as f64);
            ys.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    let r2 = linear_fit_r2(&xs, &ys);
    let means: Vec<String> = xs.iter().zip(&ys).map(|(x, y)| format!("n={x}:{y:.1}")).collect();
    let mut detail = format!(
        "{} runs, {} failing, sends/view [{}], R² = {r2:.4}",
        results.len(),
        fails.len(),
        means.join(" ")
    );
    if let Some(e) = fails.first() {
        detail.push_str(&format!("; first: {e}"));
    }
    Verdict::new(fails.is_empty() && xs.len() == SIZES.len() && r2 > 0.99, detail)
}

fn c5(m: Mutations) -> Verdict {
    let mut cases = Vec::new();
    for f in SIZES {
        for seed in 0..SEEDS {
            cases.push((f, seed));
        }
    }
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(f, seed)| {
            let mut cfg = lumiere(f, seed, m);
            cfg.adversary.strategy = StrategyKind::SilentLeaders;
            cfg.adversary.params.delay = Some(DelayKind::Max);
            cfg.corrupted = (0..f as u32).collect();
            desync(&mut cfg);
            let out = must_run(&cfg);
            let a = Analysis::new(&out);
            let worst = a
                .post_gst_epochs()
                .into_iter()
                .filter_map(|e| Some(a.sends_between(a.start_of(e)?, a.end_of(e)?)))
                .max();
            (f, worst)
        })
        .collect();
    let mut coeffs = Vec::new();
    let mut fails = Vec::new();
    for f in SIZES {
        let n = 3 * f + 1;
        let worst = results.iter().filter(|r| r.0 == f).filter_map(|r| r.1).max();
        match worst {
            Some(w) => {
                let c = w as f64 / (n * n) as f64;
                if c > 70.0 {
                    fails.push(format!("n={n}: {w} sends in one epoch"));
                }
                coeffs.push((n, c));
            }
            None => fails.push(format!("n={n}: no complete post-GST epoch")),
        }
    }
    let monotone = coeffs.windows(2).all(|w| w[1].1 <= w[0].1);
    let shown: Vec<String> = coeffs.iter().map(|(n, c)| format!("n={n}:{c:.2}")).collect();
    let mut detail = format!("max sends per epoch / n² [{}], non-increasing: {monotone}", shown.join(" "));
    if let Some(e) = fails.first() {
        detail.push_str(&format!("; {e}"));
    }
    Verdict::new(fails.is_empty() && monotone, detail)
}

/// A processor none of whose leader slots is directly followed by another
/// of its own. Where a permutation meets its reverse the schedule gives one
/// processor two slots in a row, which is two faulty leaders' worth of
/// delay rather than one.
fn isolated_leader(cfg: &ScenarioConfig) -> u32 {
    let leaders = cfg.leaders().expect("valid schedule");
    let period = (2 * cfg.n * cfg.z) as i64;
    (0..cfg.n as u32)
        .find(|&p| {
            (0..2 * period).step_by(2).all(|v| {
                let here = leaders.leader_of(View(v)).0 == p;
                !(here && leaders.leader_of(View(v + 2)).0 == p)
            })
        })
        .expect("some processor has isolated slots")
}

fn c7(m: Mutations) -> Verdict {
    let mut cases = Vec::new();
    for f in SIZES {
        for seed in 0..SEEDS {
            cases.push((f, seed));
        }
    }
    // (a): one silent leader. In LP22 processor `f` leads the last view of
    // every epoch in which it leads at all.
    let stalls: Vec<_> = cases
        .par_iter()
        .map(|&(f, seed)| {
            let mut lp = lumiere(f, seed, m);
            lp.synchronizer = SynchronizerKind::Lp22;
            lp.delta = lp.big_delta / 10;
            lp.adversary.strategy = StrategyKind::SilentLeaders;
            lp.corrupted = vec![f as u32];
            lp.epochs_after_gst = Some(3 * lp.n as i64);
            let out = must_run(&lp);
            let a = Analysis::new(&out);
            let lp_stall = a.qc_windows(lp.gst).iter().map(|w| w.gap()).max().unwrap_or(0);
            let lp_bound = 8 * (f as u64 + 1) * lp.gamma() / 10;

            let mut lu = lumiere(f, seed, m);
            lu.delta = lu.big_delta / 10;
            lu.adversary.strategy = StrategyKind::SilentLeaders;
            lu.corrupted = vec![isolated_leader(&lu)];
            let out = must_run(&lu);
            let a = Analysis::new(&out);
            let lu_stall = stable_windows(&a).map(|ws| ws.iter().map(|w| w.gap()).max().unwrap_or(0));
            let lu_bound = 2 * lu.gamma() + 8 * lu.delta;
            (lu.n, seed, lp_stall, lp_bound, lu_stall, lu_bound)
        })
        .collect();
    let mut fails = Vec::new();
    for &(n, seed, lp_stall, lp_bound, lu_stall, lu_bound) in &stalls {
        if lp_stall < lp_bound {
            fails.push(format!("n={n} seed={seed}: LP22 max stall {lp_stall} < {lp_bound}"));
        }
        match lu_stall {
            Some(s) if s <= lu_bound => {}
            other => fails.push(format!("n={n} seed={seed}: Lumiere max stall {other:?} vs {lu_bound}")),
        }
    }
    // (b): boundary traffic with all processors honest.
    let boundary: Vec<_> = cases
        .par_iter()
        .map(|&(f, seed)| {
            let mut msgs = Vec::new();
            for s in [SynchronizerKind::Lp22, SynchronizerKind::Basic] {
                let mut cfg = lumiere(f, seed, m);
                cfg.synchronizer = s;
                cfg.epochs_after_gst = Some(6);
                desync(&mut cfg);
                let out = must_run(&cfg);
                let a = Analysis::new(&out);
                let floor = ((2 * f + 1) * cfg.n) as u64;
                let epochs = a.post_gst_epochs();
                let low = epochs
                    .iter()
                    .map(|&e| (e, a.boundary_sends(a.first_view_of(e))))
                    .find(|&(_, b)| b < floor);
                if epochs.len() < 3 {
                    msgs.push(format!("n={} seed={seed} {}: only {} post-GST epochs", cfg.n, s.as_str(), epochs.len()));
                }
                if let Some((e, b)) = low {
                    msgs.push(format!("n={} seed={seed} {}: epoch {} boundary sends {b} < {floor}", cfg.n, s.as_str(), e.0));
                }
            }
            let mut cfg = lumiere(f, seed, m);
            desync(&mut cfg);
            let out = must_run(&cfg);
            let a = Analysis::new(&out);
            match a.first_timely_epoch() {
                Some(e) => {
                    let after: u64 = (e.0 + 1..=a.max_epoch_entered().0)
                        .map(|k| a.boundary_sends(a.first_view_of(Epoch(k))))
                        .sum();
                    if after > 0 {
                        msgs.push(format!("n={} seed={seed} lumiere: {after} boundary sends after timely epoch", cfg.n));
                    }
                }
                None => msgs.push(format!("n={} seed={seed} lumiere: no timely epoch", cfg.n)),
            }
            msgs
        })
        .flatten()
        .collect();
    fails.extend(boundary);
    let lp_ratio = stalls
        .iter()
        .map(|s| s.2 as f64 / (s.3 as f64 / 0.8))
        .fold(f64::INFINITY, f64::min);
    let lu_ratio = stalls
        .iter()
        .filter_map(|s| s.4.map(|x| x as f64 / s.5 as f64))
        .fold(0.0, f64::max);
    let mut detail = format!(
        "min LP22 stall / (f+1)Γ = {lp_ratio:.3}, max Lumiere stall / (2Γ+8δ) = {lu_ratio:.3}, {} failing",
        fails.len()
    );
    if let Some(e) = fails.first() {
        detail.push_str(&format!("; first: {e}"));
    }
    Verdict::new(fails.is_empty(), detail)
}

fn c8() -> Verdict {
    let mut cfgs = Vec::new();
    for s in [SynchronizerKind::Lumiere, SynchronizerKind::Lp22, SynchronizerKind::Basic] {
        for strat in [StrategyKind::None, StrategyKind::SilentLeaders, StrategyKind::FastColluders, StrategyKind::MaxDelay] {
            for seed in [1, 2] {
                let mut cfg = grid_config(2, strat, seed, Mutations::default());
                cfg.synchronizer = s;
                if strat == StrategyKind::None {
                    cfg.corrupted.clear();
                }
                cfgs.push(cfg);
            }
        }
    }
    let mismatched: Vec<String> = cfgs
        .par_iter()
        .filter_map(|cfg| {
            let h1 = must_run(cfg).trace.content_hash();
            let h2 = must_run(cfg).trace.content_hash();
            (h1 != h2).then(|| format!("{} {} seed={}", cfg.synchronizer.as_str(), cfg.adversary.strategy.as_str(), cfg.seed))
        })
        .collect();
    let mut detail = format!("{} scenarios run twice, {} hash mismatches", cfgs.len(), mismatched.len());
    if let Some(e) = mismatched.first() {
        detail.push_str(&format!("; first: {e}"));
    }
    Verdict::new(mismatched.is_empty(), detail)
}

/// Criteria 1 through 7 under the given mutations.
fn suite(m: Mutations) -> Vec<(u8, &'static str, Verdict)> {
    let (runs, took) = grid(m);
    vec![
        (1, "lemma suite", c1(&runs, took)),
        (2, "view synchronization", c2(&runs)),
        (3, "smooth optimistic responsiveness", c3(m)),
        (4, "eventual communication", c4(m)),
        (5, "worst-case communication", c5(m)),
        (6, "worst-case latency", c6(&runs)),
        (7, "baseline separations", c7(m)),
    ]
}

/// A mutation counts as caught by criterion i only if i passes unmutated.
fn c9(baseline: &[u8]) -> Verdict {
    let mutations = [
        (
            "no QC deadline",
            Mutations {
                no_qc_deadline: true,
                ..Default::default()
            },
        ),
        (
            "EC threshold f+1",
            Mutations {
                ec_threshold_f_plus_1: true,
                ..Default::default()
            },
        ),
        (
            "no Δ wait before epoch-view messages",
            Mutations {
                skip_epoch_wait: true,
                ..Default::default()
            },
        ),
    ];
    let mut parts = Vec::new();
    let mut all = true;
    for (name, m) in mutations {
        let failed: Vec<String> = suite(m)
            .into_iter()
            .filter(|(i, _, v)| !v.pass && baseline.contains(i))
            .map(|(i, _, _)| i.to_string())
            .collect();
        all &= !failed.is_empty();
        if failed.is_empty() {
            parts.push(format!("{name}: undetected"));
        } else {
            parts.push(format!("{name}: caught by {}", failed.join(",")));
        }
    }
    Verdict::new(all, parts.join("; "))
}

#[test]
fn acceptance() {
    let mut results = suite(Mutations::default());
    results.push((8, "determinism", c8()));
    let baseline: Vec<u8> = results.iter().filter(|r| r.2.pass).map(|r| r.0).collect();
    results.push((9, "mutation sensitivity", c9(&baseline)));
    let mut failed = Vec::new();
    for (i, name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {i} ({name}): {}", v.detail);
        if !v.pass {
            failed.push(*i);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

#[test]
fn linear_fit_oracle() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    assert!((linear_fit_r2(&xs, &[3.0, 5.0, 7.0, 9.0]) - 1.0).abs() < 1e-12);
    // y = x² on 1..4, by hand: sxy = 25, sxx = 5, syy = 129.
    let r2 = linear_fit_r2(&xs, &[1.0, 4.0, 9.0, 16.0]);
    assert!((r2 - 625.0 / 645.0).abs() < 1e-12);
}
