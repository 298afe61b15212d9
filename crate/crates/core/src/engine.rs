//! A minimal underlying protocol: per-view proposal, votes and QC, with the
//! leader-side QC production deadline.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crypto::PartialSig;
use crate::protocol::{Action, StepCtx};
use crate::types::{CertKind, MessageBody, ProcessorId, SigKind, Ticks, View};

/// Sessions older than this many views behind the current one are dropped.
const SESSION_RETENTION: i64 = 4;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewSession {
    /// VC send time, previous QC send time, or entry time.
    pub anchor: Option<Ticks>,
    pub votes: BTreeMap<ProcessorId, PartialSig>,
    pub qc_emitted: bool,
    pub suppressed: bool,
}

/// How a processor behaves in the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VotePolicy {
    /// Vote once, only for the current view's proposal.
    Honest,
    /// Vote immediately for every proposal regardless of view.
    Eager,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Engine {
    policy: VotePolicy,
    deadline: Option<Ticks>,
    current: View,
    sessions: BTreeMap<View, ViewSession>,
    voted: BTreeSet<View>,
    buffered: BTreeSet<View>,
}

impl Engine {
    pub fn new(policy: VotePolicy, deadline: Option<Ticks>) -> Self {
        Self {
            policy,
            deadline,
            current: View::PRE,
            sessions: BTreeMap::new(),
            voted: BTreeSet::new(),
            buffered: BTreeSet::new(),
        }
    }

    pub fn session(&self, v: View) -> Option<&ViewSession> {
        self.sessions.get(&v)
    }

    pub fn has_voted(&self, v: View) -> bool {
        self.voted.contains(&v)
    }

    /// Broadcast a proposal for `v` if this processor leads it and has not
    /// proposed yet. The proposal time is the session anchor.
    pub fn propose(&mut self, v: View, cx: &mut StepCtx<'_>) {
        if cx.leader_of(v) != cx.me || v < self.current {
            return;
        }
        let s = self.sessions.entry(v).or_default();
        if s.anchor.is_some() {
            return;
        }
        s.anchor = Some(cx.now);
        cx.broadcast(MessageBody::Proposal(v));
    }

    pub fn on_enter(&mut self, v: View, propose: bool, cx: &mut StepCtx<'_>) {
        if v <= self.current {
            return;
        }
        self.current = v;
        let keep_from = v.offset(-SESSION_RETENTION);
        self.sessions.retain(|w, _| *w >= keep_from);
        self.buffered.retain(|w| *w >= v);
        if propose {
            self.propose(v, cx);
        }
        if self.buffered.remove(&v) {
            self.vote(v, cx);
        }
    }

    fn vote(&mut self, v: View, cx: &mut StepCtx<'_>) {
        if self.voted.insert(v) {
            let sig = cx.sign(SigKind::Vote, v);
            let to = cx.leader_of(v);
            cx.send(to, MessageBody::Vote(sig));
        }
    }

    pub fn on_proposal(&mut self, sender: ProcessorId, v: View, cx: &mut StepCtx<'_>) {
        if v.0 < 0 || sender != cx.leader_of(v) {
            return;
        }
        match self.policy {
            VotePolicy::Eager => self.vote(v, cx),
            VotePolicy::Honest if v == self.current => self.vote(v, cx),
            VotePolicy::Honest if v > self.current => {
                self.buffered.insert(v);
            }
            VotePolicy::Honest => {}
        }
    }

    pub fn on_vote(&mut self, sender: ProcessorId, sig: &PartialSig, cx: &mut StepCtx<'_>) {
        let v = sig.payload().view;
        if !cx.accepts_partial(sender, sig, SigKind::Vote) || cx.leader_of(v) != cx.me {
            return;
        }
        let Some(s) = self.sessions.get_mut(&v) else {
            return;
        };
        let Some(anchor) = s.anchor else {
            return;
        };
        if s.qc_emitted || s.suppressed {
            return;
        }
        s.votes.insert(sig.signer(), sig.clone());
        if s.votes.len() < cx.params.threshold(CertKind::Qc) {
            return;
        }
        if self.deadline.is_some_and(|d| cx.now > anchor + d) {
            s.suppressed = true;
            cx.out.push(Action::QcSuppressed { view: v });
            return;
        }
        let votes: Vec<PartialSig> = s.votes.values().cloned().collect();
        if let Some(qc) = cx.aggregate(CertKind::Qc, votes.iter()) {
            s.qc_emitted = true;
            cx.out.push(Action::QcProduced { view: v });
            cx.broadcast(MessageBody::Qc(qc));
        }
    }
}
