//! The Lumiere synchronizer.
//!
//! Views are batched into epochs of `10n`. Epoch changes are heavy (all-to-all
//! epoch-view messages forming TCs and ECs) unless the processor has seen the
//! previous epoch satisfy the success criterion, in which case the epoch view
//! is entered like any other initial view. Within an epoch, initial views are
//! entered by clock and announced to the leader, who forms a VC; QCs bump
//! clocks forward so that honest leaders run at network speed.

use std::collections::{BTreeMap, BTreeSet};

use crate::clock::LocalClock;
use crate::crypto::PartialSig;
use crate::protocol::{Action, BumpCause, ProtocolParams, StepCtx, Synchronizer};
use crate::types::{
    CertKind, Certificate, Epoch, Message, MessageBody, ProcessorId, SigKind, Ticks, View,
};

/// Views each leader leads per epoch (five blocks of two).
pub const VIEWS_PER_LEADER_PER_EPOCH: usize = 10;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct BestCerts {
    qc: Option<View>,
    vc: Option<View>,
    ec: Option<View>,
    tc: Option<View>,
}

fn raise(slot: &mut Option<View>, v: View) {
    if slot.is_none_or(|cur| cur < v) {
        *slot = Some(v);
    }
}

/// One processor's synchronizer state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessorState {
    pub clock: LocalClock,
    pub view: View,
    pub epoch: Epoch,
    pub paused_for: Option<View>,
    pub pause_started_at: Option<Ticks>,
    success: BTreeSet<Epoch>,
    qc_tally: BTreeMap<(Epoch, ProcessorId), BTreeSet<View>>,
    complete_leaders: BTreeMap<Epoch, usize>,
    sent_view_msgs: BTreeSet<View>,
    sent_epoch_view_msgs: BTreeSet<View>,
    best: BestCerts,
    seen_qcs: BTreeSet<View>,
    seen_vcs: BTreeSet<View>,
    handled_tcs: BTreeSet<View>,
    handled_ecs: BTreeSet<View>,
    pause_fired: BTreeSet<View>,
    last_initial_fired: i64,
    view_msgs: BTreeMap<View, BTreeMap<ProcessorId, PartialSig>>,
    vcs_formed: BTreeSet<View>,
    epoch_msgs: BTreeMap<View, BTreeMap<ProcessorId, PartialSig>>,
    pending_target: Option<(Ticks, Ticks)>,
}

impl Default for ProcessorState {
    fn default() -> Self {
        Self::new(LocalClock::default())
    }
}

impl ProcessorState {
    pub fn new(clock: LocalClock) -> Self {
        Self {
            clock,
            view: View::PRE,
            epoch: Epoch::PRE,
            paused_for: None,
            pause_started_at: None,
            success: BTreeSet::new(),
            qc_tally: BTreeMap::new(),
            complete_leaders: BTreeMap::new(),
            sent_view_msgs: BTreeSet::new(),
            sent_epoch_view_msgs: BTreeSet::new(),
            best: BestCerts::default(),
            seen_qcs: BTreeSet::new(),
            seen_vcs: BTreeSet::new(),
            handled_tcs: BTreeSet::new(),
            handled_ecs: BTreeSet::new(),
            pause_fired: BTreeSet::new(),
            last_initial_fired: -1,
            view_msgs: BTreeMap::new(),
            vcs_formed: BTreeSet::new(),
            epoch_msgs: BTreeMap::new(),
            pending_target: None,
        }
    }

    /// `success(e)`; epoch −1 is never successful.
    pub fn success(&self, e: Epoch) -> bool {
        self.success.contains(&e)
    }

    pub fn has_sent_view_msg(&self, v: View) -> bool {
        self.sent_view_msgs.contains(&v)
    }

    pub fn has_sent_epoch_view_msg(&self, v: View) -> bool {
        self.sent_epoch_view_msgs.contains(&v)
    }

    pub fn qc_tally(&self, e: Epoch, leader: ProcessorId) -> usize {
        self.qc_tally.get(&(e, leader)).map_or(0, BTreeSet::len)
    }

    fn lc(&self, cx: &StepCtx<'_>) -> Ticks {
        self.clock.read(cx.now)
    }

    fn set_view(&mut self, v: View, cx: &mut StepCtx<'_>) {
        let e = cx.params.epoch_of(v);
        debug_assert!(v > self.view || (v == self.view && e == self.epoch));
        if v != self.view || e != self.epoch {
            self.view = v;
            self.epoch = e;
            cx.out.push(Action::EnterView { view: v, epoch: e });
        }
    }

    fn bump(&mut self, to: Ticks, cause: BumpCause, cx: &mut StepCtx<'_>) {
        let from = self.lc(cx);
        if to > from {
            self.clock.set(cx.now, to);
            self.pending_target = None;
            cx.out.push(Action::BumpClock { from, to, cause });
        }
    }

    fn send_view_msg(&mut self, v: View, cx: &mut StepCtx<'_>) {
        if self.sent_view_msgs.insert(v) {
            let sig = cx.sign(SigKind::View, v);
            let to = cx.leader_of(v);
            cx.send(to, MessageBody::View(sig));
        }
    }

    fn send_epoch_view_msg(&mut self, v: View, cx: &mut StepCtx<'_>) {
        if self.sent_epoch_view_msgs.insert(v) {
            let sig = cx.sign(SigKind::EpochView, v);
            cx.broadcast(MessageBody::EpochView(sig));
        }
    }

    /// View messages for every initial `v'` with `view ≤ v' < until`.
    fn catch_up(&mut self, until: View, cx: &mut StepCtx<'_>) {
        let mut v = self.view.0.max(0);
        if v % 2 == 1 {
            v += 1;
        }
        while v < until.0 {
            self.send_view_msg(View(v), cx);
            v += 2;
        }
    }

    fn on_view_msg(&mut self, sig: &PartialSig, cx: &mut StepCtx<'_>) {
        let v = sig.payload().view;
        if !v.is_initial() || cx.leader_of(v) != cx.me || self.vcs_formed.contains(&v) || v < self.view {
            return;
        }
        let msgs = self.view_msgs.entry(v).or_default();
        msgs.insert(sig.signer(), sig.clone());
        if msgs.len() >= cx.params.threshold(CertKind::Vc) {
            let msgs = self.view_msgs.remove(&v).unwrap_or_default();
            if let Some(vc) = cx.aggregate(CertKind::Vc, msgs.values()) {
                self.vcs_formed.insert(v);
                cx.broadcast(MessageBody::Vc(vc));
            }
        }
    }

    fn on_epoch_view_msg(&mut self, sig: &PartialSig, cx: &mut StepCtx<'_>) {
        let v = sig.payload().view;
        if !cx.params.is_epoch_view(v) || cx.params.epoch_of(v) < self.epoch {
            return;
        }
        let msgs = self.epoch_msgs.entry(v).or_default();
        msgs.insert(sig.signer(), sig.clone());
        let count = msgs.len();
        if count >= cx.params.threshold(CertKind::Tc) && !self.handled_tcs.contains(&v) {
            let msgs = self.epoch_msgs[&v].clone();
            if let Some(tc) = cx.aggregate(CertKind::Tc, msgs.values()) {
                self.on_tc(&tc, cx);
            }
        }
        if count >= cx.params.threshold(CertKind::Ec) && !self.handled_ecs.contains(&v) {
            let msgs = self.epoch_msgs[&v].clone();
            if let Some(ec) = cx.aggregate(CertKind::Ec, msgs.values()) {
                self.on_ec(&ec, cx);
            }
        }
    }

    fn on_tc(&mut self, tc: &Certificate, cx: &mut StepCtx<'_>) {
        let v = tc.view();
        raise(&mut self.best.tc, v);
        self.handle_tc_view(v, cx);
    }

    fn handle_tc_view(&mut self, v: View, cx: &mut StepCtx<'_>) {
        if !cx.params.is_epoch_view(v) || !self.handled_tcs.insert(v) {
            return;
        }
        if cx.params.epoch_of(v) < self.epoch {
            return;
        }
        let cv = cx.params.clock_time(v);
        if self.lc(cx) < cv {
            self.catch_up(v, cx);
            self.bump(cv, BumpCause::Tc, cx);
        }
        if self.view < v.prev() {
            self.set_view(v.prev(), cx);
        }
        self.send_epoch_view_msg(v, cx);
    }

    fn on_ec(&mut self, ec: &Certificate, cx: &mut StepCtx<'_>) {
        let v = ec.view();
        raise(&mut self.best.ec, v);
        if !cx.params.is_epoch_view(v) || !self.handled_ecs.insert(v) {
            return;
        }
        if cx.params.epoch_of(v) <= self.epoch {
            return;
        }
        // Every EC contains a TC for the same view.
        raise(&mut self.best.tc, v);
        self.handle_tc_view(v, cx);
        self.set_view(v, cx);
    }

    fn on_vc(&mut self, vc: &Certificate, cx: &mut StepCtx<'_>) {
        let v = vc.view();
        raise(&mut self.best.vc, v);
        if !v.is_initial() || !self.seen_vcs.insert(v) || v <= self.view {
            return;
        }
        let cv = cx.params.clock_time(v);
        if self.lc(cx) < cv {
            self.catch_up(v, cx);
            self.bump(cv, BumpCause::Vc, cx);
        }
        self.set_view(v, cx);
    }

    fn on_qc(&mut self, qc: &Certificate, cx: &mut StepCtx<'_>) {
        let v = qc.view();
        raise(&mut self.best.qc, v);
        if !self.seen_qcs.insert(v) {
            return;
        }
        self.update_success(qc, cx);
        if v < self.view {
            return;
        }
        let next = v.next();
        let target = cx.params.clock_time(next);
        if self.lc(cx) < target {
            self.catch_up(v, cx);
            self.bump(target, BumpCause::Qc, cx);
        }
        if !cx.params.is_epoch_view(next) {
            self.set_view(next, cx);
        } else if self.view < v {
            self.set_view(v, cx);
        }
    }

    /// Tally the QC under its leader; `success(e)` once 2f+1 leaders have a
    /// QC for each of their views in epoch `e`.
    pub fn update_success(&mut self, qc: &Certificate, cx: &StepCtx<'_>) {
        let v = qc.view();
        if v.0 < 0 {
            return;
        }
        let e = cx.params.epoch_of(v);
        let leader = cx.leader_of(v);
        let tally = self.qc_tally.entry((e, leader)).or_default();
        if tally.insert(v) && tally.len() == VIEWS_PER_LEADER_PER_EPOCH {
            let complete = self.complete_leaders.entry(e).or_default();
            *complete += 1;
            if *complete > 2 * cx.params.f {
                self.success.insert(e);
            }
        }
    }

    fn unpause_due(&self, pv: View, cx: &StepCtx<'_>) -> bool {
        let reached = |s: Option<View>| s.is_some_and(|x| x >= pv);
        reached(self.best.ec)
            || reached(self.best.qc)
            || reached(self.best.vc)
            || self.best.tc.is_some_and(|x| x > pv)
            || self.success(Epoch(cx.params.epoch_of(pv).0 - 1))
    }

    /// Evaluate every clock- and flag-triggered rule until nothing changes.
    fn settle(&mut self, cx: &mut StepCtx<'_>) {
        if let Some((at, t)) = self.pending_target.take() {
            if cx.now == at && self.clock.read(cx.now) > t {
                // trim sub-tick drift overshoot so the clock lands on c_v
                self.clock.set(cx.now, t);
            }
        }
        loop {
            let mut changed = false;
            if let Some(pv) = self.paused_for {
                if self.unpause_due(pv, cx) {
                    self.clock.resume(cx.now);
                    self.paused_for = None;
                    self.pause_started_at = None;
                    cx.out.push(Action::UnpauseClock);
                    changed = true;
                }
            }
            let lc = self.lc(cx);
            let gamma = cx.params.gamma;
            if lc.is_multiple_of(gamma) {
                let w = View((lc / gamma) as i64);
                let ew = cx.params.epoch_of(w);
                if w.is_initial() && cx.params.is_epoch_view(w) && w > self.view {
                    if self.success(Epoch(ew.0 - 1)) {
                        self.set_view(w, cx);
                        changed = true;
                    } else if self.paused_for.is_none() && self.pause_fired.insert(w) {
                        self.clock.pause(cx.now);
                        self.paused_for = Some(w);
                        self.pause_started_at = Some(cx.now);
                        cx.out.push(Action::PauseClock);
                        if cx.params.mutations.skip_epoch_wait {
                            self.send_epoch_view_msg(w, cx);
                        }
                        changed = true;
                    }
                }
                if w.is_initial() && self.epoch == ew && w.0 > self.last_initial_fired {
                    self.last_initial_fired = w.0;
                    if self.view < w {
                        self.set_view(w, cx);
                    }
                    self.send_view_msg(w, cx);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.prune(cx);
    }

    fn prune(&mut self, cx: &StepCtx<'_>) {
        let view = self.view;
        self.view_msgs.retain(|v, _| *v >= view);
        self.vcs_formed.retain(|v| *v >= view);
        if self.epoch.0 >= 0 {
            let first = cx.params.first_view_of(self.epoch);
            self.epoch_msgs.retain(|v, _| *v >= first);
        }
    }
}

impl Synchronizer for ProcessorState {
    fn view(&self) -> View {
        self.view
    }

    fn epoch(&self) -> Epoch {
        self.epoch
    }

    fn clock(&self) -> &LocalClock {
        &self.clock
    }

    fn clock_mut(&mut self) -> &mut LocalClock {
        &mut self.clock
    }

    fn on_start(&mut self, cx: &mut StepCtx<'_>) {
        self.settle(cx);
    }

    fn on_tick(&mut self, cx: &mut StepCtx<'_>) {
        if let (Some(pv), Some(at)) = (self.paused_for, self.pause_started_at) {
            if cx.now >= at + cx.params.delta {
                self.send_epoch_view_msg(pv, cx);
            }
        }
        self.settle(cx);
    }

    fn poll(&mut self, cx: &mut StepCtx<'_>) {
        self.settle(cx);
    }

    fn on_message(&mut self, msg: &Message, cx: &mut StepCtx<'_>) {
        match &msg.body {
            MessageBody::View(sig) if cx.accepts_partial(msg.sender, sig, SigKind::View) => {
                self.on_view_msg(sig, cx)
            }
            MessageBody::EpochView(sig) if cx.accepts_partial(msg.sender, sig, SigKind::EpochView) => {
                self.on_epoch_view_msg(sig, cx)
            }
            MessageBody::Tc(c) if cx.accepts(c, CertKind::Tc) => self.on_tc(c, cx),
            MessageBody::Ec(c) if cx.accepts(c, CertKind::Ec) => self.on_ec(c, cx),
            MessageBody::Vc(c) if cx.accepts(c, CertKind::Vc) => self.on_vc(c, cx),
            MessageBody::Qc(c) if cx.accepts(c, CertKind::Qc) => self.on_qc(c, cx),
            _ => {}
        }
        self.settle(cx);
    }

    fn next_wakeup(&mut self, now: Ticks, params: &ProtocolParams) -> Option<Ticks> {
        self.pending_target = None;
        if let Some(pv) = self.paused_for {
            if self.sent_epoch_view_msgs.contains(&pv) {
                return None;
            }
            return self.pause_started_at.map(|at| (at + params.delta).max(now));
        }
        let lc = self.clock.read(now);
        let mut w = lc / params.gamma + 1;
        if w % 2 == 1 {
            w += 1;
        }
        let target = w * params.gamma;
        let at = self.clock.time_to_reach(now, target)?;
        self.pending_target = Some((at, target));
        Some(at)
    }

    fn proposes_with_vc(&self, v: View, _params: &ProtocolParams) -> bool {
        v.is_initial()
    }

    fn proposes_on_entry(&self, v: View, _params: &ProtocolParams) -> bool {
        !v.is_initial()
    }
}
