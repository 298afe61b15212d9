//! Deterministic discrete-event simulator for the partial-synchrony model.

use std::collections::BTreeMap;

use crate::adversary::{Adversary, Role};
use crate::clock::{LocalClock, REAL_TIME};
use crate::config::ScenarioConfig;
use crate::crypto::Ledger;
use crate::error::SimError;
use crate::node::Node;
use crate::protocol::{Action, Event, ProtocolParams, StepCtx};
use crate::schedule::Leaders;
use crate::trace::{Trace, TraceRecord};
use crate::types::{Epoch, Message, MessageBody, ProcessorId, Ticks, View};

/// Hard cap on processed events per run, so a schedule that lets views
/// advance without real time passing fails loudly instead of hanging.
pub const EVENT_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Item {
    Gst,
    Start(ProcessorId),
    Timer(ProcessorId, u64),
    Deliver(ProcessorId, Message),
}

/// Summary of a finished run alongside its trace.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub params: ProtocolParams,
    pub leaders: Leaders,
    pub honest: Vec<ProcessorId>,
    pub trace: Trace,
    /// Real time at which the run stopped.
    pub end_time: Ticks,
    pub events: u64,
}

impl RunOutput {
    pub fn is_honest(&self, p: ProcessorId) -> bool {
        self.honest.binary_search(&p).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ClockStats {
    lc_max: Ticks,
    lc_f1: Ticks,
    lc_2f1: Ticks,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    params: ProtocolParams,
    leaders: Leaders,
    ledger: Ledger,
    adversary: Adversary,
    nodes: Vec<Node>,
    started: Vec<bool>,
    pending: Vec<Vec<Message>>,
    timer_gen: Vec<u64>,
    /// Keyed by (time, phase, seq); timers run in a later phase than
    /// deliveries at the same instant.
    queue: BTreeMap<(Ticks, u8, u64), Item>,
    seq: u64,
    now: Ticks,
    horizon: Ticks,
    trace: Trace,
    last_state: Vec<Option<(Ticks, View, Epoch, bool)>>,
    last_stats: Option<ClockStats>,
    max_honest_clock: Ticks,
    colluder_epochs: i64,
    events: u64,
    /// Highest honest epoch when GST was processed.
    gst_epoch: Option<i64>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let params = cfg.params();
        let leaders = cfg.leaders()?;
        let adversary = Adversary::new(cfg);
        let (offsets, rates) = cfg.clock_setup();
        let nodes: Vec<Node> = (0..cfg.n)
            .map(|i| {
                let id = ProcessorId(i as u32);
                let rate = if offsets[i] >= cfg.gst { REAL_TIME } else { rates[i] };
                Node::new(
                    id,
                    adversary.role(id),
                    cfg.synchronizer,
                    LocalClock::new(offsets[i], rate),
                    params.qc_deadline,
                )
            })
            .collect();
        let horizon = cfg.effective_horizon();
        let colluder_epochs = cfg
            .max_epoch
            .map(|e| e + 1)
            .unwrap_or_else(|| (horizon / (params.gamma * params.geometry.len)) as i64 + 1);
        let mut sim = Self {
            cfg: cfg.clone(),
            ledger: Ledger::new(cfg.corrupted_set()),
            params,
            leaders,
            adversary,
            started: vec![false; cfg.n],
            pending: vec![Vec::new(); cfg.n],
            timer_gen: vec![0; cfg.n],
            last_state: vec![None; cfg.n],
            nodes,
            queue: BTreeMap::new(),
            seq: 0,
            now: 0,
            horizon,
            trace: Trace::default(),
            last_stats: None,
            max_honest_clock: 0,
            colluder_epochs,
            events: 0,
            gst_epoch: None,
        };
        sim.schedule(cfg.gst, Item::Gst);
        for (i, &o) in offsets.iter().enumerate() {
            sim.schedule(o, Item::Start(ProcessorId(i as u32)));
        }
        Ok(sim)
    }

    fn schedule(&mut self, t: Ticks, item: Item) {
        let phase = u8::from(matches!(item, Item::Timer(..)));
        self.queue.insert((t, phase, self.seq), item);
        self.seq += 1;
    }

    fn honest_clocks(&self) -> impl Iterator<Item = Ticks> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.is_honest())
            .map(|n| n.sync.clock().read(self.now))
    }

    fn clock_stats(&self) -> ClockStats {
        let mut lcs: Vec<Ticks> = self.honest_clocks().collect();
        lcs.sort_unstable_by(|a, b| b.cmp(a));
        let f = self.cfg.f;
        let at = |i: usize| lcs.get(i).copied().unwrap_or(0);
        ClockStats {
            lc_max: at(0),
            lc_f1: at(f),
            lc_2f1: at(2 * f),
        }
    }

    fn record_stats(&mut self) -> ClockStats {
        let s = self.clock_stats();
        if self.last_stats != Some(s) {
            self.last_stats = Some(s);
            self.trace.push(TraceRecord::Clocks {
                t: self.now,
                lc_max: s.lc_max,
                lc_f1: s.lc_f1,
                lc_2f1: s.lc_2f1,
            });
        }
        s
    }

    fn honest_max_epoch(&self) -> i64 {
        self.nodes
            .iter()
            .filter(|n| n.is_honest())
            .map(|n| n.sync.epoch().0)
            .max()
            .unwrap_or(0)
    }

    fn stop_epoch_reached(&self) -> bool {
        let top = self.honest_max_epoch();
        let absolute = self.cfg.max_epoch.is_some_and(|max| top > max);
        let relative = match (self.cfg.epochs_after_gst, self.gst_epoch) {
            (Some(k), Some(base)) => top > base + k,
            _ => false,
        };
        absolute || relative
    }

    pub fn run(mut self) -> Result<RunOutput, SimError> {
        while let Some(((t, _, _), item)) = self.queue.pop_first() {
            if t > self.horizon || self.stop_epoch_reached() {
                break;
            }
            self.now = t;
            self.events += 1;
            if self.events > EVENT_BUDGET {
                return Err(SimError::EventBudget(EVENT_BUDGET, t));
            }
            match item {
                Item::Gst => {
                    for n in &mut self.nodes {
                        n.sync.clock_mut().set_rate(t, REAL_TIME);
                    }
                    self.trace.push(TraceRecord::Gst { t });
                    self.gst_epoch = Some(self.honest_max_epoch());
                    // Stepping (not just re-arming) lets a processor act on a
                    // boundary its clock reaches exactly at GST.
                    for i in 0..self.nodes.len() {
                        if self.started[i] {
                            self.step(i, Event::ClockTick)?;
                        }
                    }
                }
                Item::Start(p) => {
                    let i = p.index();
                    self.started[i] = true;
                    if self.nodes[i].role != Role::Silent {
                        self.trace.push(TraceRecord::Start { t, p });
                    }
                    self.step(i, Event::Start)?;
                    for m in std::mem::take(&mut self.pending[i]) {
                        self.step(i, Event::Deliver(m))?;
                    }
                }
                Item::Timer(p, gen) => {
                    if self.timer_gen[p.index()] == gen {
                        self.step(p.index(), Event::ClockTick)?;
                    }
                }
                Item::Deliver(to, m) => {
                    let i = to.index();
                    if self.started[i] {
                        self.step(i, Event::Deliver(m))?;
                    } else {
                        self.pending[i].push(m);
                    }
                }
            }
            self.record_stats();
        }
        let honest = self
            .nodes
            .iter()
            .filter(|n| n.is_honest())
            .map(|n| n.id)
            .collect();
        Ok(RunOutput {
            config: self.cfg,
            params: self.params,
            leaders: self.leaders,
            honest,
            trace: self.trace,
            end_time: self.now,
            events: self.events,
        })
    }

    fn rearm(&mut self, i: usize) {
        self.timer_gen[i] += 1;
        if self.nodes[i].role == Role::Silent {
            return;
        }
        let gen = self.timer_gen[i];
        if let Some(at) = self.nodes[i].sync.next_wakeup(self.now, &self.params) {
            self.schedule(at.max(self.now), Item::Timer(ProcessorId(i as u32), gen));
        }
    }

    fn step(&mut self, i: usize, event: Event) -> Result<(), SimError> {
        let me = ProcessorId(i as u32);
        let honest = self.nodes[i].is_honest();
        let max_before = if honest {
            self.max_honest_clock = self.max_honest_clock.max(self.clock_stats().lc_max);
            self.max_honest_clock
        } else {
            0
        };
        let mut cx = StepCtx::new(self.now, me, &self.params, &self.leaders, &mut self.ledger);
        self.nodes[i].step(&event, &mut cx, self.colluder_epochs);
        let actions = std::mem::take(&mut cx.out);
        drop(cx);
        if let Some(err) = self.ledger.rejected().first() {
            return Err(SimError::Forgery(err.clone()));
        }

        let mut bumps = Vec::new();
        for a in actions {
            match a {
                Action::Send { to, body } => self.submit(me, to, body)?,
                Action::Broadcast { body } => {
                    for q in 0..self.cfg.n {
                        self.submit(me, ProcessorId(q as u32), body.clone())?;
                    }
                }
                Action::EnterView { view, epoch } if honest => {
                    self.trace.push(TraceRecord::Enter {
                        t: self.now,
                        p: me,
                        view,
                        epoch,
                    });
                }
                Action::PauseClock if honest => self.trace.push(TraceRecord::Pause {
                    t: self.now,
                    p: me,
                    paused: true,
                }),
                Action::UnpauseClock if honest => self.trace.push(TraceRecord::Pause {
                    t: self.now,
                    p: me,
                    paused: false,
                }),
                Action::BumpClock { from, to, cause } if honest => bumps.push((from, to, cause)),
                Action::QcProduced { view } => self.trace.push(TraceRecord::Qc {
                    t: self.now,
                    view,
                    leader: me,
                    honest_leader: honest,
                }),
                Action::QcSuppressed { view } if honest => self.trace.push(TraceRecord::QcSuppressed {
                    t: self.now,
                    view,
                    leader: me,
                }),
                _ => {}
            }
        }
        if honest {
            let bumped = !bumps.is_empty();
            if bumped {
                let s = self.clock_stats();
                let hg_f1_after = s.lc_max - s.lc_f1;
                for (from, to, cause) in bumps {
                    self.trace.push(TraceRecord::Bump {
                        t: self.now,
                        p: me,
                        from,
                        to,
                        cause,
                        primary: to > max_before,
                        hg_f1_after,
                    });
                }
            }
            let n = &self.nodes[i];
            let snap = (n.sync.clock().read(self.now), n.sync.view(), n.sync.epoch(), n.sync.clock().is_paused());
            let changed = self.last_state[i].map(|s| (s.1, s.2, s.3)) != Some((snap.1, snap.2, snap.3));
            if changed || bumped || matches!(event, Event::ClockTick) {
                self.last_state[i] = Some(snap);
                self.trace.push(TraceRecord::State {
                    t: self.now,
                    p: me,
                    lc: snap.0,
                    view: snap.1,
                    epoch: snap.2,
                    paused: snap.3,
                });
            }
        }
        self.rearm(i);
        Ok(())
    }

    fn submit(&mut self, from: ProcessorId, to: ProcessorId, body: MessageBody) -> Result<(), SimError> {
        let now = self.now;
        let deliver_at = if from == to {
            now
        } else {
            self.adversary.delivery_time(from, to, now)
        };
        let contract = self.adversary.contract();
        if !contract.admits(now, deliver_at) {
            return Err(SimError::ContractViolation {
                from,
                to,
                sent: now,
                deliver_at,
                bound: contract.latest(now),
            });
        }
        self.trace.push(TraceRecord::Send {
            t: now,
            deliver_at,
            from,
            to,
            msg: body.kind(),
            view: body.view(),
            honest: self.nodes[from.index()].is_honest(),
        });
        self.schedule(deliver_at, Item::Deliver(to, Message { sender: from, body }));
        Ok(())
    }
}

/// Run a scenario to completion.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    Simulation::new(cfg)?.run()
}
