//! Run traces: one record per simulator event of interest, serialized as
//! JSON lines. The record format is stable; new kinds may be added.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::protocol::BumpCause;
use crate::types::{Epoch, MsgKind, ProcessorId, Ticks, View};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRecord {
    /// A message handed to the network.
    Send {
        t: Ticks,
        deliver_at: Ticks,
        from: ProcessorId,
        to: ProcessorId,
        msg: MsgKind,
        view: View,
        /// Sender is honest.
        honest: bool,
    },
    Start {
        t: Ticks,
        p: ProcessorId,
    },
    Gst {
        t: Ticks,
    },
    Enter {
        t: Ticks,
        p: ProcessorId,
        view: View,
        epoch: Epoch,
    },
    /// Honest processor state after a step that changed it.
    State {
        t: Ticks,
        p: ProcessorId,
        lc: Ticks,
        view: View,
        epoch: Epoch,
        paused: bool,
    },
    Bump {
        t: Ticks,
        p: ProcessorId,
        from: Ticks,
        to: Ticks,
        cause: BumpCause,
        /// The new value exceeds every honest clock value seen before.
        primary: bool,
        /// hg_{f+1} right after the step that bumped.
        hg_f1_after: Ticks,
    },
    Pause {
        t: Ticks,
        p: ProcessorId,
        paused: bool,
    },
    Qc {
        t: Ticks,
        view: View,
        leader: ProcessorId,
        honest_leader: bool,
    },
    QcSuppressed {
        t: Ticks,
        view: View,
        leader: ProcessorId,
    },
    /// Honest clock order statistics, recorded whenever they change.
    Clocks {
        t: Ticks,
        lc_max: Ticks,
        lc_f1: Ticks,
        lc_2f1: Ticks,
    },
}

impl TraceRecord {
    pub fn time(&self) -> Ticks {
        match self {
            TraceRecord::Send { t, .. }
            | TraceRecord::Start { t, .. }
            | TraceRecord::Gst { t }
            | TraceRecord::Enter { t, .. }
            | TraceRecord::State { t, .. }
            | TraceRecord::Bump { t, .. }
            | TraceRecord::Pause { t, .. }
            | TraceRecord::Qc { t, .. }
            | TraceRecord::QcSuppressed { t, .. }
            | TraceRecord::Clocks { t, .. } => *t,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(src: &str) -> Result<Self, serde_json::Error> {
        let records = src
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { records })
    }

    /// SHA-256 of the JSONL serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        struct HashWriter(Sha256);
        impl Write for HashWriter {
            fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
                self.0.update(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> io::Result<()> {
                Ok(())
            }
        }
        let mut h = HashWriter(Sha256::new());
        self.write_jsonl(&mut h).expect("hashing cannot fail");
        hex::encode(h.0.finalize())
    }
}
