//! LP22: epochs of f+1 views, leader `v mod n`, heavy synchronization at
//! every epoch view and clock-or-QC entry to non-epoch views.

use std::collections::BTreeSet;

use crate::baselines::{Alarm, EcCollector};
use crate::clock::LocalClock;
use crate::protocol::{Action, BumpCause, ProtocolParams, StepCtx, Synchronizer};
use crate::types::{CertKind, Certificate, Epoch, Message, MessageBody, SigKind, Ticks, View};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lp22State {
    pub clock: LocalClock,
    pub view: View,
    pub epoch: Epoch,
    pub paused_for: Option<View>,
    sent_epoch_view_msgs: BTreeSet<View>,
    ecs: EcCollector,
    alarm: Alarm,
}

impl Lp22State {
    pub fn new(clock: LocalClock) -> Self {
        Self {
            clock,
            view: View::PRE,
            epoch: Epoch::PRE,
            paused_for: None,
            sent_epoch_view_msgs: BTreeSet::new(),
            ecs: EcCollector::default(),
            alarm: Alarm::default(),
        }
    }

    pub fn has_sent_epoch_view_msg(&self, v: View) -> bool {
        self.sent_epoch_view_msgs.contains(&v)
    }

    fn enter(&mut self, v: View, cx: &mut StepCtx<'_>) {
        if v > self.view {
            self.view = v;
            self.epoch = cx.params.epoch_of(v);
            cx.out.push(Action::EnterView { view: v, epoch: self.epoch });
        }
    }

    fn on_ec(&mut self, ec: &Certificate, cx: &mut StepCtx<'_>) {
        let v = ec.view();
        if !cx.params.is_epoch_view(v) {
            return;
        }
        if self.paused_for.is_some_and(|pv| pv <= v) {
            self.clock.resume(cx.now);
            self.paused_for = None;
            cx.out.push(Action::UnpauseClock);
        }
        if self.view < v {
            let cv = cx.params.clock_time(v);
            let from = self.clock.read(cx.now);
            if from < cv {
                self.clock.set(cx.now, cv);
                self.alarm.clear();
                cx.out.push(Action::BumpClock { from, to: cv, cause: BumpCause::Ec });
            }
            self.enter(v, cx);
        }
    }

    fn on_qc(&mut self, qc: &Certificate, cx: &mut StepCtx<'_>) {
        let next = qc.view().next();
        if !cx.params.is_epoch_view(next) && self.view < next && cx.params.epoch_of(next) == self.epoch {
            self.enter(next, cx);
        }
    }

    fn settle(&mut self, cx: &mut StepCtx<'_>) {
        self.alarm.trim(&mut self.clock, cx.now);
        let lc = self.clock.read(cx.now);
        let w = View((lc / cx.params.gamma) as i64);
        if w <= self.view {
            return;
        }
        if cx.params.is_epoch_view(w) {
            if self.paused_for.is_none() && self.sent_epoch_view_msgs.insert(w) {
                self.clock.pause(cx.now);
                self.paused_for = Some(w);
                cx.out.push(Action::PauseClock);
                let sig = cx.sign(SigKind::EpochView, w);
                cx.broadcast(MessageBody::EpochView(sig));
            }
        } else if cx.params.epoch_of(w) == self.epoch {
            self.enter(w, cx);
        }
        if self.epoch.0 >= 0 {
            self.ecs.prune_below(cx.params.first_view_of(self.epoch));
        }
    }
}

impl Synchronizer for Lp22State {
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
        self.settle(cx);
    }

    fn on_message(&mut self, msg: &Message, cx: &mut StepCtx<'_>) {
        match &msg.body {
            MessageBody::EpochView(sig) if cx.accepts_partial(msg.sender, sig, SigKind::EpochView) => {
                let v = sig.payload().view;
                if cx.params.is_epoch_view(v) && self.view < v {
                    if let Some(ec) = self.ecs.add(sig, cx) {
                        cx.broadcast(MessageBody::Ec(ec));
                    }
                }
            }
            MessageBody::Ec(c) if cx.accepts(c, CertKind::Ec) => self.on_ec(c, cx),
            MessageBody::Qc(c) if cx.accepts(c, CertKind::Qc) => self.on_qc(c, cx),
            _ => {}
        }
        self.settle(cx);
    }

    fn next_wakeup(&mut self, now: Ticks, params: &ProtocolParams) -> Option<Ticks> {
        if self.paused_for.is_some() {
            self.alarm.clear();
            return None;
        }
        self.alarm.arm_next(&self.clock, now, params.gamma)
    }

    fn proposes_with_vc(&self, _v: View, _params: &ProtocolParams) -> bool {
        false
    }

    fn proposes_on_entry(&self, _v: View, _params: &ProtocolParams) -> bool {
        true
    }
}
