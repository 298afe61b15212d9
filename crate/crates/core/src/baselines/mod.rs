//! Comparison synchronizers: LP22 and Basic Lumiere.
//!
//! Both enter epochs only through an EC, which every processor forms from
//! 2f+1 epoch-view messages and broadcasts. Certificates for views beyond the
//! processor's current epoch are ignored until that EC arrives.

pub mod basic;
pub mod lp22;

use std::collections::{BTreeMap, BTreeSet};

use crate::clock::LocalClock;
use crate::crypto::PartialSig;
use crate::protocol::StepCtx;
use crate::types::{CertKind, Certificate, ProcessorId, Ticks, View};

pub use basic::BasicState;
pub use lp22::Lp22State;

/// Collects epoch-view messages and forms at most one EC per view.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct EcCollector {
    msgs: BTreeMap<View, BTreeMap<ProcessorId, PartialSig>>,
    formed: BTreeSet<View>,
}

impl EcCollector {
    pub(crate) fn add(&mut self, sig: &PartialSig, cx: &mut StepCtx<'_>) -> Option<Certificate> {
        let v = sig.payload().view;
        if self.formed.contains(&v) {
            return None;
        }
        let msgs = self.msgs.entry(v).or_default();
        msgs.insert(sig.signer(), sig.clone());
        if msgs.len() < cx.params.threshold(CertKind::Ec) {
            return None;
        }
        let msgs = self.msgs.remove(&v).unwrap_or_default();
        let ec = cx.aggregate(CertKind::Ec, msgs.values())?;
        self.formed.insert(v);
        Some(ec)
    }

    pub(crate) fn prune_below(&mut self, v: View) {
        self.msgs.retain(|w, _| *w >= v);
    }
}

/// Collects view messages at a leader and forms at most one VC per view.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct VcCollector {
    msgs: BTreeMap<View, BTreeMap<ProcessorId, PartialSig>>,
    formed: BTreeSet<View>,
}

impl VcCollector {
    pub(crate) fn add(&mut self, sig: &PartialSig, cx: &mut StepCtx<'_>) -> Option<Certificate> {
        let v = sig.payload().view;
        if self.formed.contains(&v) {
            return None;
        }
        let msgs = self.msgs.entry(v).or_default();
        msgs.insert(sig.signer(), sig.clone());
        if msgs.len() < cx.params.threshold(CertKind::Vc) {
            return None;
        }
        let msgs = self.msgs.remove(&v).unwrap_or_default();
        let vc = cx.aggregate(CertKind::Vc, msgs.values())?;
        self.formed.insert(v);
        Some(vc)
    }

    pub(crate) fn prune_below(&mut self, v: View) {
        self.msgs.retain(|w, _| *w >= v);
        self.formed.retain(|w| *w >= v);
    }
}

/// A wakeup armed for the moment a drifting clock reaches a target value.
/// Fast clocks can overshoot by less than one tick; `trim` pulls the
/// reading back onto the target when the wakeup fires.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Alarm {
    pending: Option<(Ticks, Ticks)>,
}

impl Alarm {
    pub(crate) fn trim(&mut self, clock: &mut LocalClock, now: Ticks) {
        if let Some((at, target)) = self.pending.take() {
            if now == at && clock.read(now) > target {
                clock.set(now, target);
            }
        }
    }

    pub(crate) fn clear(&mut self) {
        self.pending = None;
    }

    /// Arm for the next multiple of `gamma` strictly above the reading.
    pub(crate) fn arm_next(&mut self, clock: &LocalClock, now: Ticks, gamma: Ticks) -> Option<Ticks> {
        self.pending = None;
        let target = (clock.read(now) / gamma + 1) * gamma;
        let at = clock.time_to_reach(now, target)?;
        self.pending = Some((at, target));
        Some(at)
    }
}

#[cfg(test)]
pub(crate) mod testkit {
    use crate::crypto::{Caller, Ledger, PartialSig};
    use crate::protocol::{Action, Event, Mutations, ProtocolParams, StepCtx, Synchronizer};
    use crate::schedule::{BaselineVariant, Leaders};
    use crate::types::{
        CertKind, Certificate, EpochGeometry, Message, MessageBody, Payload, ProcessorId, SigKind, Ticks, View,
    };

    pub(crate) struct Rig {
        pub params: ProtocolParams,
        pub leaders: Leaders,
        pub ledger: Ledger,
    }

    impl Rig {
        /// n = 4, f = 1.
        pub(crate) fn new(variant: BaselineVariant, gamma: Ticks, epoch_len: u64) -> Self {
            Self {
                params: ProtocolParams {
                    n: 4,
                    f: 1,
                    delta: 10,
                    gamma,
                    geometry: EpochGeometry::new(epoch_len),
                    qc_deadline: None,
                    mutations: Mutations::default(),
                },
                leaders: Leaders::Baseline { variant, n: 4 },
                ledger: Ledger::new([]),
            }
        }

        pub(crate) fn step(&mut self, p: &mut dyn Synchronizer, now: Ticks, me: u32, ev: Event) -> Vec<Action> {
            let mut cx = StepCtx::new(now, ProcessorId(me), &self.params, &self.leaders, &mut self.ledger);
            p.step(&ev, &mut cx);
            cx.out
        }

        pub(crate) fn partial(&mut self, kind: SigKind, v: i64, signer: u32) -> PartialSig {
            self.ledger
                .sign_partial(Caller::Processor(ProcessorId(signer)), ProcessorId(signer), Payload::new(kind, View(v)))
                .unwrap()
        }

        pub(crate) fn cert(&mut self, kind: CertKind, v: i64, signers: &[u32]) -> Certificate {
            let parts: Vec<_> = signers.iter().map(|&s| self.partial(kind.sig_kind(), v, s)).collect();
            let m = self.params.threshold(kind);
            self.ledger.aggregate(kind, &parts, m).unwrap()
        }

        pub(crate) fn deliver(
            &mut self,
            p: &mut dyn Synchronizer,
            now: Ticks,
            me: u32,
            sender: u32,
            body: MessageBody,
        ) -> Vec<Action> {
            self.step(p, now, me, Event::Deliver(Message { sender: ProcessorId(sender), body }))
        }
    }

    pub(crate) fn entered(out: &[Action]) -> Vec<(i64, i64)> {
        out.iter()
            .filter_map(|a| match a {
                Action::EnterView { view, epoch } => Some((view.0, epoch.0)),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn broadcasts_ec(out: &[Action]) -> bool {
        out.iter().any(|a| matches!(a, Action::Broadcast { body: MessageBody::Ec(_) }))
    }

    pub(crate) fn epoch_view_broadcasts(out: &[Action]) -> Vec<i64> {
        out.iter()
            .filter_map(|a| match a {
                Action::Broadcast { body: MessageBody::EpochView(s) } => Some(s.payload().view.0),
                _ => None,
            })
            .collect()
    }
}
