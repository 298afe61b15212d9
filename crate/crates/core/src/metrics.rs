//! Complexity measures and lemma-level diagnostics computed from traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::SynchronizerKind;
use crate::sim::RunOutput;
use crate::trace::TraceRecord;
use crate::types::{Epoch, MsgKind, ProcessorId, Ticks, View};

/// `lc(p_1) − lc(p_i)` over clocks sorted descending; `i` is 1-based.
pub fn honest_gap(clocks: &[Ticks], i: usize) -> Ticks {
    assert!(i >= 1 && i <= clocks.len(), "gap index {i} out of range");
    let mut sorted = clocks.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted[0] - sorted[i - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QcEvent {
    pub t: Ticks,
    pub view: View,
    pub leader: ProcessorId,
    pub honest_leader: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HonestSend {
    pub t: Ticks,
    pub from: ProcessorId,
    pub to: ProcessorId,
    pub msg: MsgKind,
    pub view: View,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockSample {
    pub t: Ticks,
    pub lc_max: Ticks,
    pub lc_f1: Ticks,
    pub lc_2f1: Ticks,
}

impl ClockSample {
    pub fn hg_f1(&self) -> Ticks {
        self.lc_max - self.lc_f1
    }
}

/// Indexed view of one run's trace.
pub struct Analysis<'a> {
    pub out: &'a RunOutput,
    pub f: usize,
    pub gamma: Ticks,
    pub gst: Ticks,
    pub qcs: Vec<QcEvent>,
    /// Honest sends excluding self-deliveries.
    pub sends: Vec<HonestSend>,
    pub clocks: Vec<ClockSample>,
    /// Honest view entries in trace order.
    pub enters: Vec<(Ticks, ProcessorId, View, Epoch)>,
}

impl<'a> Analysis<'a> {
    pub fn new(out: &'a RunOutput) -> Self {
        let mut qcs = Vec::new();
        let mut sends = Vec::new();
        let mut clocks = Vec::new();
        let mut enters = Vec::new();
        for r in &out.trace.records {
            match *r {
                TraceRecord::Qc { t, view, leader, honest_leader } => qcs.push(QcEvent { t, view, leader, honest_leader }),
                TraceRecord::Send { t, from, to, msg, view, honest: true, .. } if from != to => {
                    sends.push(HonestSend { t, from, to, msg, view })
                }
                TraceRecord::Clocks { t, lc_max, lc_f1, lc_2f1 } => clocks.push(ClockSample { t, lc_max, lc_f1, lc_2f1 }),
                TraceRecord::Enter { t, p, view, epoch } => enters.push((t, p, view, epoch)),
                _ => {}
            }
        }
        Self {
            out,
            f: out.config.f,
            gamma: out.params.gamma,
            gst: out.config.gst,
            qcs,
            sends,
            clocks,
            enters,
        }
    }

    pub fn kind(&self) -> SynchronizerKind {
        self.out.config.synchronizer
    }

    pub fn first_view_of(&self, e: Epoch) -> View {
        self.out.params.first_view_of(e)
    }

    pub fn clock_time(&self, v: View) -> Ticks {
        self.out.params.clock_time(v)
    }

    /// Clock statistics in force at time `t` (after all events at `t`).
    pub fn sample_at(&self, t: Ticks) -> Option<ClockSample> {
        let i = self.clocks.partition_point(|s| s.t <= t);
        i.checked_sub(1).map(|i| self.clocks[i])
    }

    pub fn hg_f1_at(&self, t: Ticks) -> Ticks {
        self.sample_at(t).map_or(0, |s| s.hg_f1())
    }

    /// `vt_v`: least time at which f+1 honest processors are in views ≥ v.
    pub fn vt(&self, v: View) -> Option<Ticks> {
        let mut reached = BTreeSet::new();
        for &(t, p, view, _) in &self.enters {
            if view >= v {
                reached.insert(p);
                if reached.len() > self.f {
                    return Some(t);
                }
            }
        }
        None
    }

    /// First time an honest processor enters a view ≥ v.
    pub fn first_entry(&self, v: View) -> Option<Ticks> {
        self.enters.iter().find(|e| e.2 >= v).map(|e| e.0)
    }

    pub fn max_epoch_entered(&self) -> Epoch {
        self.enters.iter().map(|e| e.3).max().unwrap_or(Epoch::PRE)
    }

    pub fn start_of(&self, e: Epoch) -> Option<Ticks> {
        self.vt(self.first_view_of(e))
    }

    /// First time `lc(p_{f+1}) ≥ c_{V(e+1)}`.
    pub fn end_of(&self, e: Epoch) -> Option<Ticks> {
        let target = self.clock_time(self.first_view_of(Epoch(e.0 + 1)));
        self.clocks.iter().find(|s| s.lc_f1 >= target).map(|s| s.t)
    }

    /// Epoch `e` has a timely start: its first honest entrant arrives at or
    /// after GST and `hg_{f+1} ≤ Γ + 2Δ` at `start_e`.
    pub fn timely_start(&self, e: Epoch) -> bool {
        let v = self.first_view_of(e);
        let (Some(first), Some(start)) = (self.first_entry(v), self.vt(v)) else {
            return false;
        };
        first >= self.gst && self.hg_f1_at(start) <= self.gamma + 2 * self.out.config.big_delta
    }

    pub fn first_timely_epoch(&self) -> Option<Epoch> {
        (0..=self.max_epoch_entered().0).map(Epoch).find(|&e| self.timely_start(e))
    }

    /// Honest-leader QC production times, ascending.
    pub fn honest_qcs(&self) -> Vec<QcEvent> {
        self.qcs.iter().copied().filter(|q| q.honest_leader).collect()
    }

    /// `t*_T`: first time strictly after `t` at which an honest leader
    /// produces a QC.
    pub fn t_star(&self, t: Ticks) -> Option<Ticks> {
        self.qcs.iter().find(|q| q.honest_leader && q.t > t).map(|q| q.t)
    }

    /// Honest sends in `[t, t*_t)`; `None` if no later honest QC exists.
    pub fn w_after(&self, t: Ticks) -> Option<u64> {
        let end = self.t_star(t)?;
        Some(self.sends_between(t, end))
    }

    pub fn latency_after(&self, t: Ticks) -> Option<Ticks> {
        self.t_star(t).map(|s| s - t)
    }

    pub fn sends_between(&self, from: Ticks, to: Ticks) -> u64 {
        let a = self.sends.partition_point(|s| s.t < from);
        let b = self.sends.partition_point(|s| s.t < to);
        (b - a) as u64
    }

    /// Honest epoch-view, TC and EC sends for epoch view `v`.
    pub fn boundary_sends(&self, v: View) -> u64 {
        self.sends
            .iter()
            .filter(|s| s.view == v && matches!(s.msg, MsgKind::EpochView | MsgKind::Tc | MsgKind::Ec))
            .count() as u64
    }

    pub fn epoch_view_msgs_for(&self, v: View) -> u64 {
        self.sends
            .iter()
            .filter(|s| s.view == v && s.msg == MsgKind::EpochView)
            .count() as u64
    }

    /// Maximum of `w_after` and `latency_after` over a grid of step Δ in
    /// `[from, to)`. Grid points without a later honest QC are skipped.
    pub fn eventual_worst_case(&self, from: Ticks, to: Ticks) -> (u64, Ticks) {
        let step = self.out.config.big_delta.max(1);
        let (mut w, mut l) = (0, 0);
        let mut t = from;
        while t < to {
            if let Some(end) = self.t_star(t) {
                w = w.max(self.sends_between(t, end));
                l = l.max(end - t);
            }
            t += step;
        }
        (w, l)
    }

    /// Epochs whose first honest entrant arrived at or after GST.
    pub fn post_gst_epochs(&self) -> Vec<Epoch> {
        (0..=self.max_epoch_entered().0)
            .map(Epoch)
            .filter(|&e| self.first_entry(self.first_view_of(e)).is_some_and(|t| t >= self.gst))
            .collect()
    }

    /// Epochs that began after GST and used a heavy synchronization
    /// (some honest processor sent an epoch-view message for their first
    /// view).
    pub fn heavy_epochs_after_gst(&self) -> usize {
        self.post_gst_epochs()
            .into_iter()
            .filter(|&e| self.epoch_view_msgs_for(self.first_view_of(e)) > 0)
            .count()
    }

    /// Inter-QC windows between consecutive honest-leader QCs produced at or
    /// after `from`. Each window carries the number of views in between
    /// that corrupted processors lead.
    pub fn qc_windows(&self, from: Ticks) -> Vec<QcWindow> {
        let qcs: Vec<QcEvent> = self.honest_qcs().into_iter().filter(|q| q.t >= from).collect();
        qcs.windows(2)
            .map(|w| {
                let faulty_views = (w[0].view.0 + 1..w[1].view.0)
                    .filter(|&v| !self.out.is_honest(self.out.leaders.leader_of(View(v))))
                    .count();
                QcWindow {
                    from: w[0],
                    to: w[1],
                    faulty_views,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QcWindow {
    pub from: QcEvent,
    pub to: QcEvent,
    pub faulty_views: usize,
}

impl QcWindow {
    pub fn gap(&self) -> Ticks {
        self.to.t - self.from.t
    }

    /// Faulty leader slots of two consecutive views each.
    pub fn faulty_pairs(&self) -> usize {
        self.faulty_views.div_ceil(2)
    }

    pub fn views(&self) -> i64 {
        self.to.view.0 - self.from.view.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    Monotonicity,
    EpochCoherence,
    ClockWindow,
    EntryCausality,
    Dedup,
    PrimaryBumpBound,
    EpochStartBound,
    GapNonIncrease,
    TimelyEpochQcs,
    TimelyEpochNoEpochViewMsgs,
}

impl Lemma {
    pub fn as_str(self) -> &'static str {
        match self {
            Lemma::Monotonicity => "monotonicity",
            Lemma::EpochCoherence => "epoch_coherence",
            Lemma::ClockWindow => "clock_window",
            Lemma::EntryCausality => "entry_causality",
            Lemma::Dedup => "dedup",
            Lemma::PrimaryBumpBound => "primary_bump_bound",
            Lemma::EpochStartBound => "epoch_start_bound",
            Lemma::GapNonIncrease => "gap_non_increase",
            Lemma::TimelyEpochQcs => "timely_epoch_qcs",
            Lemma::TimelyEpochNoEpochViewMsgs => "timely_epoch_no_epoch_view_msgs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub lemma: Lemma,
    pub t: Ticks,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at t={}: {}", self.lemma.as_str(), self.t, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checked: Vec<Lemma>,
    /// Earliest counterexample per violated lemma.
    pub violations: Vec<Violation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self, l: Lemma) -> bool {
        self.violations.iter().any(|v| v.lemma == l)
    }

    fn fail(&mut self, lemma: Lemma, t: Ticks, detail: String) {
        if let Some(v) = self.violations.iter_mut().find(|v| v.lemma == lemma) {
            if t < v.t {
                *v = Violation { lemma, t, detail };
            }
        } else {
            self.violations.push(Violation { lemma, t, detail });
        }
    }
}

/// Evaluate every trace-checkable lemma that applies to the run's
/// synchronizer.
pub fn check_lemma_suite(out: &RunOutput) -> LemmaReport {
    let a = Analysis::new(out);
    let mut r = LemmaReport::default();
    let lumiere = a.kind() == SynchronizerKind::Lumiere;
    let fevered = a.kind() != SynchronizerKind::Lp22;

    r.checked.extend([Lemma::Monotonicity, Lemma::EpochCoherence, Lemma::EntryCausality, Lemma::Dedup]);
    check_state_records(&a, &mut r, fevered);
    check_entry_causality(&a, &mut r);
    check_dedup(&a, &mut r);
    if fevered {
        r.checked.extend([Lemma::ClockWindow, Lemma::PrimaryBumpBound]);
        check_primary_bumps(&a, &mut r);
    }
    if lumiere {
        r.checked.extend([
            Lemma::EpochStartBound,
            Lemma::GapNonIncrease,
            Lemma::TimelyEpochQcs,
            Lemma::TimelyEpochNoEpochViewMsgs,
        ]);
        check_epoch_gaps(&a, &mut r);
        check_timely_epochs(&a, &mut r);
    }
    r.violations.sort_by_key(|v| (v.t, v.lemma));
    r
}

fn check_state_records(a: &Analysis<'_>, r: &mut LemmaReport, window: bool) {
    let params = &a.out.params;
    let mut last: BTreeMap<ProcessorId, (Ticks, View, Epoch)> = BTreeMap::new();
    for rec in &a.out.trace.records {
        let TraceRecord::State { t, p, lc, view, epoch, .. } = *rec else {
            continue;
        };
        if let Some(&(plc, pv, pe)) = last.get(&p) {
            if lc < plc || view < pv || epoch < pe {
                r.fail(
                    Lemma::Monotonicity,
                    t,
                    format!("{p}: (lc, view, epoch) went from ({plc}, {pv}, {pe}) to ({lc}, {view}, {epoch})"),
                );
            }
        }
        last.insert(p, (lc, view, epoch));
        if view.0 >= 0 && params.epoch_of(view) != epoch {
            r.fail(Lemma::EpochCoherence, t, format!("{p}: view {view} in epoch {epoch}"));
        }
        if window && view.0 >= 0 {
            let base = view.0 - view.0.rem_euclid(2);
            let lo = params.clock_time(view);
            let hi = params.clock_time(View(base + 2));
            if lc < lo || lc > hi {
                r.fail(Lemma::ClockWindow, t, format!("{p}: view {view} with lc {lc} outside [{lo}, {hi}]"));
            }
        }
    }
}

fn check_entry_causality(a: &Analysis<'_>, r: &mut LemmaReport) {
    let mut epoch_of: BTreeMap<ProcessorId, Epoch> = BTreeMap::new();
    let mut checked: BTreeSet<Epoch> = BTreeSet::new();
    for &(t, p, _, e) in &a.enters {
        if e.0 >= 1 && !checked.contains(&e) && epoch_of.get(&p).is_none_or(|&cur| cur < e) {
            checked.insert(e);
            let prior = epoch_of.values().filter(|&&x| x.0 >= e.0 - 1).count();
            if prior <= a.f {
                r.fail(
                    Lemma::EntryCausality,
                    t,
                    format!("{p} entered epoch {e} with only {prior} honest processors previously in epoch >= {}", e.0 - 1),
                );
            }
        }
        let cur = epoch_of.entry(p).or_insert(e);
        *cur = (*cur).max(e);
    }
}

fn check_dedup(a: &Analysis<'_>, r: &mut LemmaReport) {
    let mut views = BTreeSet::new();
    let mut epoch_views = BTreeSet::new();
    for rec in &a.out.trace.records {
        let TraceRecord::Send { t, from, to, msg, view, honest: true, .. } = *rec else {
            continue;
        };
        let fresh = match msg {
            MsgKind::View => views.insert((from, view)),
            MsgKind::EpochView => epoch_views.insert((from, view, to)),
            _ => true,
        };
        if !fresh {
            r.fail(Lemma::Dedup, t, format!("{from} sent a second {} message for view {view}", msg.as_str()));
        }
    }
}

fn check_primary_bumps(a: &Analysis<'_>, r: &mut LemmaReport) {
    for rec in &a.out.trace.records {
        if let TraceRecord::Bump { t, p, to, primary: true, hg_f1_after, .. } = *rec {
            if hg_f1_after > a.gamma {
                r.fail(
                    Lemma::PrimaryBumpBound,
                    t,
                    format!("{p} bumped to {to} with hg_f1 = {hg_f1_after} > {}", a.gamma),
                );
            }
        }
    }
}

fn check_epoch_gaps(a: &Analysis<'_>, r: &mut LemmaReport) {
    let bound = (4 * a.f as u64 + 2) * a.gamma;
    for e in a.post_gst_epochs() {
        let Some(start) = a.start_of(e) else {
            continue;
        };
        let hg = a.hg_f1_at(start);
        if hg >= bound {
            r.fail(Lemma::EpochStartBound, start, format!("epoch {e} starts with hg_f1 = {hg} >= {bound}"));
        }
        let end = a.end_of(e).unwrap_or(Ticks::MAX);
        let mut min_so_far = hg;
        let from = a.clocks.partition_point(|s| s.t <= start);
        for s in a.clocks[from..].iter().take_while(|s| s.t <= end) {
            let g = s.hg_f1();
            if g > a.gamma && g > min_so_far {
                r.fail(
                    Lemma::GapNonIncrease,
                    s.t,
                    format!("epoch {e}: hg_f1 rose from {min_so_far} to {g} > Γ"),
                );
                break;
            }
            min_so_far = min_so_far.min(g);
        }
    }
}

fn check_timely_epochs(a: &Analysis<'_>, r: &mut LemmaReport) {
    let last = a.max_epoch_entered();
    let produced: BTreeSet<View> = a.qcs.iter().map(|q| q.view).collect();
    for e in (0..last.0).map(Epoch) {
        if !a.timely_start(e) {
            continue;
        }
        let first = a.first_view_of(e);
        let next = a.first_view_of(Epoch(e.0 + 1));
        for v in (first.0..next.0).map(View) {
            if a.out.is_honest(a.out.leaders.leader_of(v)) && !produced.contains(&v) {
                r.fail(
                    Lemma::TimelyEpochQcs,
                    a.start_of(e).unwrap_or(0),
                    format!("timely epoch {e}: honest-led view {v} produced no QC"),
                );
                break;
            }
        }
        if e.0 + 1 < last.0 {
            let evms = a.epoch_view_msgs_for(next);
            if evms > 0 {
                r.fail(
                    Lemma::TimelyEpochNoEpochViewMsgs,
                    a.start_of(Epoch(e.0 + 1)).unwrap_or(0),
                    format!("timely epoch {e}: {evms} honest epoch-view messages for view {next}"),
                );
            }
        }
    }
}

/// View-synchronization condition (2): some honest-led view entered by every
/// honest processor at or after GST, where each stays until it receives the
/// QC or `xΔ` passes. Returns the witnessing view.
pub fn view_sync_witness(out: &RunOutput) -> Option<View> {
    let x_delta = out.config.x * out.config.big_delta;
    let mut entered: BTreeMap<View, BTreeMap<ProcessorId, Ticks>> = BTreeMap::new();
    let mut left: BTreeMap<(ProcessorId, View), Ticks> = BTreeMap::new();
    let mut current: BTreeMap<ProcessorId, View> = BTreeMap::new();
    let mut qc_recv: BTreeMap<(ProcessorId, View), Ticks> = BTreeMap::new();
    for rec in &out.trace.records {
        match *rec {
            TraceRecord::Enter { t, p, view, .. } => {
                if let Some(prev) = current.insert(p, view) {
                    left.insert((p, prev), t);
                }
                entered.entry(view).or_default().insert(p, t);
            }
            TraceRecord::Send { deliver_at, to, msg: MsgKind::Qc, view, .. } => {
                let slot = qc_recv.entry((to, view)).or_insert(deliver_at);
                *slot = (*slot).min(deliver_at);
            }
            _ => {}
        }
    }
    for (v, who) in &entered {
        if who.len() < out.honest.len() || !out.is_honest(out.leaders.leader_of(*v)) {
            continue;
        }
        let t = *who.values().max().expect("non-empty");
        if t < out.config.gst {
            continue;
        }
        let ok = out.honest.iter().all(|p| {
            let until = qc_recv.get(&(*p, *v)).copied().unwrap_or(Ticks::MAX).min(t + x_delta);
            left.get(&(*p, *v)).is_none_or(|&l| l >= until)
                && (until <= out.end_time || !left.contains_key(&(*p, *v)))
        });
        if ok {
            return Some(*v);
        }
    }
    None
}

/// View-synchronization condition (1): no honest processor ever moves to a
/// lower view. Returns the first offending (time, processor).
pub fn view_regression(out: &RunOutput) -> Option<(Ticks, ProcessorId)> {
    let mut current: BTreeMap<ProcessorId, View> = BTreeMap::new();
    for rec in &out.trace.records {
        if let TraceRecord::Enter { t, p, view, .. } = *rec {
            if current.insert(p, view).is_some_and(|prev| view < prev) {
                return Some((t, p));
            }
        }
    }
    None
}

/// One CSV row per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub synchronizer: String,
    pub strategy: String,
    pub seed: u64,
    pub n: usize,
    pub f: usize,
    pub f_a: usize,
    #[serde(rename = "Delta")]
    pub big_delta: Ticks,
    pub delta: Ticks,
    pub gst: Ticks,
    pub end_time: Ticks,
    pub honest_sends: u64,
    pub qcs: usize,
    pub first_qc_after_gst: Option<Ticks>,
    pub max_w: Option<u64>,
    pub max_latency: Option<Ticks>,
    pub heavy_epochs_after_gst: usize,
    pub first_timely_epoch: Option<i64>,
    pub lemma_violations: usize,
    pub verdict: String,
    pub trace_hash: String,
}

impl MetricsRow {
    pub fn from_run(scenario: &str, out: &RunOutput) -> Self {
        let a = Analysis::new(out);
        let report = check_lemma_suite(out);
        let timely = a.first_timely_epoch();
        let (max_w, max_latency) = match timely.and_then(|e| a.start_of(e)) {
            Some(from) => {
                let (w, l) = a.eventual_worst_case(from, out.end_time);
                (Some(w), Some(l))
            }
            None => (None, None),
        };
        Self {
            scenario: scenario.to_string(),
            synchronizer: out.config.synchronizer.as_str().to_string(),
            strategy: out.config.adversary.strategy.as_str().to_string(),
            seed: out.config.seed,
            n: out.config.n,
            f: out.config.f,
            f_a: out.config.corrupted.len(),
            big_delta: out.config.big_delta,
            delta: out.config.delta,
            gst: out.config.gst,
            end_time: out.end_time,
            honest_sends: a.sends.len() as u64,
            qcs: a.qcs.len(),
            first_qc_after_gst: a.t_star(out.config.gst.saturating_sub(1)).map(|t| t - out.config.gst),
            max_w,
            max_latency,
            heavy_epochs_after_gst: a.heavy_epochs_after_gst(),
            first_timely_epoch: timely.map(|e| e.0),
            lemma_violations: report.violations.len(),
            verdict: if report.passed() { "pass".into() } else { "fail".into() },
            trace_hash: out.trace.content_hash(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gap_examples() {
        assert_eq!(honest_gap(&[100, 90, 80, 70], 2), 10);
        assert_eq!(honest_gap(&[70, 100, 80, 90], 3), 20);
        assert_eq!(honest_gap(&[5, 5, 5], 3), 0);
        assert_eq!(honest_gap(&[9, 1, 4], 1), 0);
    }

    proptest! {
        #[test]
        fn gap_is_monotone_and_bounded(clocks in prop::collection::vec(0u64..10_000, 1..20)) {
            let max = *clocks.iter().max().unwrap();
            let min = *clocks.iter().min().unwrap();
            prop_assert_eq!(honest_gap(&clocks, 1), 0);
            prop_assert_eq!(honest_gap(&clocks, clocks.len()), max - min);
            for i in 1..clocks.len() {
                prop_assert!(honest_gap(&clocks, i) <= honest_gap(&clocks, i + 1));
            }
        }

        #[test]
        fn gap_ignores_order_and_shifts(mut clocks in prop::collection::vec(0u64..10_000, 1..20), k in 0u64..1000, seed in any::<u64>()) {
            let i = (seed as usize % clocks.len()) + 1;
            let g = honest_gap(&clocks, i);
            let shifted: Vec<u64> = clocks.iter().map(|c| c + k).collect();
            prop_assert_eq!(honest_gap(&shifted, i), g);
            let r = seed as usize % clocks.len();
            clocks.rotate_left(r);
            prop_assert_eq!(honest_gap(&clocks, i), g);
        }
    }
}
