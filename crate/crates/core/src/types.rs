//! Shared protocol vocabulary: processors, views, epochs, certificates and
//! wire messages.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::PartialSig;

/// Simulated time and local-clock values, in integer ticks.
pub type Ticks = u64;

/// 0-indexed processor identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessorId(pub u32);

impl ProcessorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ProcessorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// A view number. `View::PRE` (-1) is the value every processor starts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct View(pub i64);

impl View {
    pub const PRE: View = View(-1);

    pub fn is_initial(self) -> bool {
        self.0 >= 0 && self.0 % 2 == 0
    }

    pub fn next(self) -> View {
        View(self.0 + 1)
    }

    pub fn prev(self) -> View {
        View(self.0 - 1)
    }

    pub fn offset(self, by: i64) -> View {
        View(self.0 + by)
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An epoch number; `Epoch::PRE` (-1) is the pre-protocol sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Epoch(pub i64);

impl Epoch {
    pub const PRE: Epoch = Epoch(-1);
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of views in a Lumiere epoch.
pub fn lumiere_epoch_len(n: usize) -> u64 {
    10 * n as u64
}

/// `E(v) = floor(v / 10n)`. Views below zero map to the sentinel epoch.
pub fn epoch_of(v: View, n: usize) -> Epoch {
    EpochGeometry::new(lumiere_epoch_len(n)).epoch_of(v)
}

/// `V(e) = 10ne`, the epoch view of epoch `e`.
pub fn first_view_of(e: Epoch, n: usize) -> View {
    EpochGeometry::new(lumiere_epoch_len(n)).first_view_of(e)
}

/// `c_v = Γ·v`.
pub fn clock_time_of(v: View, gamma: Ticks) -> Ticks {
    debug_assert!(v.0 >= 0);
    gamma * v.0 as u64
}

/// `Γ = 2(x+2)Δ`, the per-view clock budget of Lumiere.
pub fn lumiere_gamma(x: u64, delta: Ticks) -> Ticks {
    2 * (x + 2) * delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initiality {
    Initial,
    NonInitial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochPosition {
    EpochView,
    NonEpoch,
}

pub fn classify_view(v: View, n: usize) -> (Initiality, EpochPosition) {
    EpochGeometry::new(lumiere_epoch_len(n)).classify(v)
}

/// Epoch layout for a synchronizer: epochs are consecutive runs of `len`
/// views. Lumiere uses `10n`, Basic Lumiere `2(f+1)`, LP22 `f+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochGeometry {
    pub len: u64,
}

impl EpochGeometry {
    pub fn new(len: u64) -> Self {
        assert!(len > 0, "epoch length must be positive");
        Self { len }
    }

    pub fn epoch_of(&self, v: View) -> Epoch {
        if v.0 < 0 {
            Epoch::PRE
        } else {
            Epoch(v.0 / self.len as i64)
        }
    }

    pub fn first_view_of(&self, e: Epoch) -> View {
        View(e.0 * self.len as i64)
    }

    pub fn is_epoch_view(&self, v: View) -> bool {
        v.0 >= 0 && v.0 % self.len as i64 == 0
    }

    pub fn classify(&self, v: View) -> (Initiality, EpochPosition) {
        let init = if v.is_initial() {
            Initiality::Initial
        } else {
            Initiality::NonInitial
        };
        let pos = if self.is_epoch_view(v) {
            EpochPosition::EpochView
        } else {
            EpochPosition::NonEpoch
        };
        (init, pos)
    }
}

/// What a partial signature attests to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigKind {
    View,
    EpochView,
    Vote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Payload {
    pub kind: SigKind,
    pub view: View,
}

impl Payload {
    pub fn new(kind: SigKind, view: View) -> Self {
        Self { kind, view }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    /// f+1 view messages.
    Vc,
    /// f+1 epoch-view messages.
    Tc,
    /// 2f+1 epoch-view messages.
    Ec,
    /// 2f+1 votes.
    Qc,
}

impl CertKind {
    pub fn sig_kind(self) -> SigKind {
        match self {
            CertKind::Vc => SigKind::View,
            CertKind::Tc | CertKind::Ec => SigKind::EpochView,
            CertKind::Qc => SigKind::Vote,
        }
    }

    /// Required number of distinct signers for a system tolerating `f` faults.
    pub fn threshold(self, f: usize) -> usize {
        match self {
            CertKind::Vc | CertKind::Tc => f + 1,
            CertKind::Ec | CertKind::Qc => 2 * f + 1,
        }
    }
}

/// A threshold aggregate. Signers are kept explicitly; size accounting still
/// treats a certificate as a single constant-size message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub payload: Payload,
    pub signers: BTreeSet<ProcessorId>,
    pub threshold: usize,
}

impl Certificate {
    pub fn view(&self) -> View {
        self.payload.view
    }

    /// Structural check only; authenticity is decided by the ledger.
    pub fn is_well_formed(&self, f: usize) -> bool {
        self.payload.kind == self.kind.sig_kind()
            && self.threshold >= self.kind.threshold(f)
            && self.signers.len() >= self.threshold
    }
}

/// Wire-level message bodies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageBody {
    View(PartialSig),
    EpochView(PartialSig),
    Vc(Certificate),
    Tc(Certificate),
    Ec(Certificate),
    Qc(Certificate),
    Proposal(View),
    Vote(PartialSig),
}

/// Message kind tag used for accounting and trace records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsgKind {
    View,
    EpochView,
    Vc,
    Tc,
    Ec,
    Qc,
    Proposal,
    Vote,
}

impl MsgKind {
    pub const ALL: [MsgKind; 8] = [
        MsgKind::View,
        MsgKind::EpochView,
        MsgKind::Vc,
        MsgKind::Tc,
        MsgKind::Ec,
        MsgKind::Qc,
        MsgKind::Proposal,
        MsgKind::Vote,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MsgKind::View => "view",
            MsgKind::EpochView => "epoch_view",
            MsgKind::Vc => "vc",
            MsgKind::Tc => "tc",
            MsgKind::Ec => "ec",
            MsgKind::Qc => "qc",
            MsgKind::Proposal => "proposal",
            MsgKind::Vote => "vote",
        }
    }
}

impl MessageBody {
    pub fn kind(&self) -> MsgKind {
        match self {
            MessageBody::View(_) => MsgKind::View,
            MessageBody::EpochView(_) => MsgKind::EpochView,
            MessageBody::Vc(_) => MsgKind::Vc,
            MessageBody::Tc(_) => MsgKind::Tc,
            MessageBody::Ec(_) => MsgKind::Ec,
            MessageBody::Qc(_) => MsgKind::Qc,
            MessageBody::Proposal(_) => MsgKind::Proposal,
            MessageBody::Vote(_) => MsgKind::Vote,
        }
    }

    pub fn view(&self) -> View {
        match self {
            MessageBody::View(p) | MessageBody::EpochView(p) | MessageBody::Vote(p) => {
                p.payload().view
            }
            MessageBody::Vc(c) | MessageBody::Tc(c) | MessageBody::Ec(c) | MessageBody::Qc(c) => {
                c.view()
            }
            MessageBody::Proposal(v) => *v,
        }
    }
}

/// A message as delivered: authenticated channels stamp the sender.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sender: ProcessorId,
    pub body: MessageBody,
}
