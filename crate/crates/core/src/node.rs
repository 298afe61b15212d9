//! A simulated processor: a synchronizer plus the consensus engine.

use crate::adversary::Role;
use crate::baselines::{BasicState, Lp22State};
use crate::clock::LocalClock;
use crate::config::SynchronizerKind;
use crate::engine::{Engine, VotePolicy};
use crate::lumiere::ProcessorState;
use crate::protocol::{Action, Event, StepCtx, Synchronizer};
use crate::types::{Epoch, MessageBody, ProcessorId, SigKind, View};

pub struct Node {
    pub id: ProcessorId,
    pub role: Role,
    pub sync: Box<dyn Synchronizer>,
    pub engine: Engine,
}

impl Node {
    pub fn new(
        id: ProcessorId,
        role: Role,
        kind: SynchronizerKind,
        clock: LocalClock,
        qc_deadline: Option<u64>,
    ) -> Self {
        let sync: Box<dyn Synchronizer> = match kind {
            SynchronizerKind::Lumiere => Box::new(ProcessorState::new(clock)),
            SynchronizerKind::Lp22 => Box::new(Lp22State::new(clock)),
            SynchronizerKind::Basic => Box::new(BasicState::new(clock)),
        };
        let engine = match role {
            Role::Colluder => Engine::new(VotePolicy::Eager, None),
            _ => Engine::new(VotePolicy::Honest, qc_deadline),
        };
        Self { id, role, sync, engine }
    }

    pub fn is_honest(&self) -> bool {
        self.role == Role::Honest
    }

    /// Apply one event. Outbound effects are left in `cx.out`.
    pub fn step(&mut self, event: &Event, cx: &mut StepCtx<'_>, colluder_epochs: i64) {
        match self.role {
            Role::Silent => return,
            Role::Colluder if *event == Event::Start => {
                for e in 0..=colluder_epochs {
                    let v = cx.params.first_view_of(Epoch(e));
                    let sig = cx.sign(SigKind::EpochView, v);
                    cx.broadcast(MessageBody::EpochView(sig));
                }
            }
            _ => {}
        }
        match event {
            Event::Deliver(m) => match &m.body {
                MessageBody::Proposal(v) => {
                    self.engine.on_proposal(m.sender, *v, cx);
                    self.sync.poll(cx);
                }
                MessageBody::Vote(sig) => {
                    self.engine.on_vote(m.sender, sig, cx);
                    self.sync.poll(cx);
                }
                _ => self.sync.on_message(m, cx),
            },
            e => self.sync.step(e, cx),
        }
        let mut i = 0;
        while i < cx.out.len() {
            match &cx.out[i] {
                Action::EnterView { view, .. } => {
                    let v = *view;
                    let propose = self.sync.proposes_on_entry(v, cx.params);
                    self.engine.on_enter(v, propose, cx);
                }
                Action::Broadcast { body: MessageBody::Vc(vc) } => {
                    let v = vc.view();
                    if cx.leader_of(v) == cx.me && self.sync.proposes_with_vc(v, cx.params) {
                        self.engine.propose(v, cx);
                    }
                }
                _ => {}
            }
            i += 1;
        }
    }

    pub fn view(&self) -> View {
        self.sync.view()
    }
}
