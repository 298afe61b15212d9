//! Interface shared by every synchronizer: step context, events, actions.

use serde::{Deserialize, Serialize};

use crate::clock::LocalClock;
use crate::crypto::{Caller, Ledger, PartialSig};
use crate::schedule::Leaders;
use crate::types::{
    CertKind, Certificate, Epoch, EpochGeometry, Message, MessageBody, Payload, ProcessorId,
    SigKind, Ticks, View,
};

/// Deliberate protocol defects, used to show the acceptance checks can tell
/// a broken implementation from a correct one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mutations {
    /// Honest leaders ignore the `Γ/2 − 2Δ` QC production deadline.
    pub no_qc_deadline: bool,
    /// ECs form from f+1 epoch-view messages instead of 2f+1.
    pub ec_threshold_f_plus_1: bool,
    /// Epoch-view messages go out as soon as the clock pauses.
    pub skip_epoch_wait: bool,
}

impl Mutations {
    pub fn any(&self) -> bool {
        self.no_qc_deadline || self.ec_threshold_f_plus_1 || self.skip_epoch_wait
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolParams {
    pub n: usize,
    pub f: usize,
    /// Δ, the known post-GST delay bound.
    pub delta: Ticks,
    /// Γ, clock time allotted to each view.
    pub gamma: Ticks,
    pub geometry: EpochGeometry,
    /// Honest leaders produce a QC only within this long of their anchor.
    pub qc_deadline: Option<Ticks>,
    pub mutations: Mutations,
}

impl ProtocolParams {
    pub fn clock_time(&self, v: View) -> Ticks {
        crate::types::clock_time_of(v, self.gamma)
    }

    pub fn epoch_of(&self, v: View) -> Epoch {
        self.geometry.epoch_of(v)
    }

    pub fn first_view_of(&self, e: Epoch) -> View {
        self.geometry.first_view_of(e)
    }

    pub fn is_epoch_view(&self, v: View) -> bool {
        self.geometry.is_epoch_view(v)
    }

    pub fn threshold(&self, kind: CertKind) -> usize {
        match kind {
            CertKind::Ec if self.mutations.ec_threshold_f_plus_1 => self.f + 1,
            k => k.threshold(self.f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpCause {
    Qc,
    Vc,
    Tc,
    Ec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// The processor joins the protocol (its clock starts at 0).
    Start,
    /// Real time advanced to a wakeup the processor asked for.
    ClockTick,
    Deliver(Message),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Send { to: ProcessorId, body: MessageBody },
    /// Send to every processor, including self.
    Broadcast { body: MessageBody },
    EnterView { view: View, epoch: Epoch },
    PauseClock,
    UnpauseClock,
    BumpClock { from: Ticks, to: Ticks, cause: BumpCause },
    QcProduced { view: View },
    QcSuppressed { view: View },
}

/// Everything a transition may read or write besides the processor's own
/// state. Outbound effects accumulate in `out`.
pub struct StepCtx<'a> {
    pub now: Ticks,
    pub me: ProcessorId,
    pub params: &'a ProtocolParams,
    pub leaders: &'a Leaders,
    pub ledger: &'a mut Ledger,
    pub out: Vec<Action>,
}

impl<'a> StepCtx<'a> {
    pub fn new(
        now: Ticks,
        me: ProcessorId,
        params: &'a ProtocolParams,
        leaders: &'a Leaders,
        ledger: &'a mut Ledger,
    ) -> Self {
        Self {
            now,
            me,
            params,
            leaders,
            ledger,
            out: Vec::new(),
        }
    }

    pub fn leader_of(&self, v: View) -> ProcessorId {
        self.leaders.leader_of(v)
    }

    pub fn sign(&mut self, kind: SigKind, view: View) -> PartialSig {
        self.ledger
            .sign_partial(Caller::Processor(self.me), self.me, Payload::new(kind, view))
            .expect("a processor may always sign as itself")
    }

    pub fn send(&mut self, to: ProcessorId, body: MessageBody) {
        self.out.push(Action::Send { to, body });
    }

    pub fn broadcast(&mut self, body: MessageBody) {
        self.out.push(Action::Broadcast { body });
    }

    /// Aggregate `partials` into a certificate at the configured threshold.
    pub fn aggregate<'p>(
        &mut self,
        kind: CertKind,
        partials: impl IntoIterator<Item = &'p PartialSig>,
    ) -> Option<Certificate> {
        let m = self.params.threshold(kind);
        self.ledger.aggregate(kind, partials, m).ok()
    }

    /// Authentic certificate of `kind` meeting the configured threshold.
    pub fn accepts(&self, cert: &Certificate, kind: CertKind) -> bool {
        cert.kind == kind
            && cert.payload.kind == kind.sig_kind()
            && cert.threshold >= self.params.threshold(kind)
            && cert.signers.len() >= cert.threshold
            && self.ledger.verify(cert)
    }

    /// Authentic partial signed by the channel-authenticated sender.
    pub fn accepts_partial(&self, sender: ProcessorId, p: &PartialSig, kind: SigKind) -> bool {
        p.signer() == sender && p.payload().kind == kind && self.ledger.verify_partial(p)
    }
}

/// A view synchronizer: decides when its processor enters views.
pub trait Synchronizer: Send {
    fn view(&self) -> View;
    fn epoch(&self) -> Epoch;
    fn clock(&self) -> &LocalClock;
    fn clock_mut(&mut self) -> &mut LocalClock;

    fn on_start(&mut self, cx: &mut StepCtx<'_>);
    fn on_tick(&mut self, cx: &mut StepCtx<'_>);
    /// Synchronization traffic only; proposals and votes go to the engine.
    fn on_message(&mut self, msg: &Message, cx: &mut StepCtx<'_>);

    /// Re-run clock-triggered rules after a step the synchronizer did not
    /// see, so a boundary reached at the same instant is not skipped.
    fn poll(&mut self, cx: &mut StepCtx<'_>) {
        self.on_tick(cx);
    }

    /// Real time of the next wakeup this processor needs, if any.
    fn next_wakeup(&mut self, now: Ticks, params: &ProtocolParams) -> Option<Ticks>;

    /// Whether the leader of initial view `v` proposes when it sends the VC.
    fn proposes_with_vc(&self, v: View, params: &ProtocolParams) -> bool;
    /// Whether the leader of `v` proposes as soon as it enters `v`.
    fn proposes_on_entry(&self, v: View, params: &ProtocolParams) -> bool;

    /// Dispatch an event to the handlers above.
    fn step(&mut self, event: &Event, cx: &mut StepCtx<'_>) {
        match event {
            Event::Start => self.on_start(cx),
            Event::ClockTick => self.on_tick(cx),
            Event::Deliver(m) => self.on_message(m, cx),
        }
    }
}
