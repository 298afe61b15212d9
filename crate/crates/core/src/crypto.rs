//! Simulated signatures and threshold aggregation.
//!
//! A per-run [`Ledger`] plays the role of the signature scheme: a partial
//! signature exists only if the ledger issued it, and a threshold aggregate
//! verifies only if the ledger built it from issued partials. Forgery is
//! therefore impossible rather than negligible.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::types::{CertKind, Certificate, Payload, ProcessorId};

/// Threshold signatures are certificates with an explicit signer set.
pub type ThresholdSig = Certificate;

/// A single processor's signature over a payload. Only the ledger can mint
/// one, so holding a `PartialSig` is proof the signer issued it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialSig {
    signer: ProcessorId,
    payload: Payload,
}

impl PartialSig {
    pub fn signer(&self) -> ProcessorId {
        self.signer
    }

    pub fn payload(&self) -> Payload {
        self.payload
    }
}

/// Who is asking the ledger for a signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Caller {
    /// The processor's own runtime; may only sign as itself.
    Processor(ProcessorId),
    /// The adversary; may sign as any corrupted processor.
    Adversary,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("forgery attempt: {caller:?} tried to sign as {signer}")]
    Forgery { caller: Caller, signer: ProcessorId },
    #[error("insufficient signers: {have} distinct, {need} required")]
    InsufficientSigners { have: usize, need: usize },
    #[error("partials carry different payloads")]
    PayloadMismatch,
    #[error("payload kind does not match certificate kind {0:?}")]
    KindMismatch(CertKind),
    #[error("partial from {0} was not issued by this ledger")]
    UnknownPartial(ProcessorId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct AggregateKey {
    kind: CertKind,
    payload: Payload,
    signers: Vec<ProcessorId>,
    threshold: usize,
}

impl AggregateKey {
    fn of(cert: &Certificate) -> Self {
        Self {
            kind: cert.kind,
            payload: cert.payload,
            signers: cert.signers.iter().copied().collect(),
            threshold: cert.threshold,
        }
    }
}

/// Per-run signature oracle.
#[derive(Debug, Default, Clone)]
pub struct Ledger {
    corrupted: BTreeSet<ProcessorId>,
    partials: HashSet<(ProcessorId, Payload)>,
    aggregates: HashSet<AggregateKey>,
    rejected: Vec<CryptoError>,
}

impl Ledger {
    pub fn new(corrupted: impl IntoIterator<Item = ProcessorId>) -> Self {
        Self {
            corrupted: corrupted.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn is_corrupted(&self, p: ProcessorId) -> bool {
        self.corrupted.contains(&p)
    }

    pub fn sign_partial(
        &mut self,
        caller: Caller,
        signer: ProcessorId,
        payload: Payload,
    ) -> Result<PartialSig, CryptoError> {
        let allowed = match caller {
            Caller::Processor(me) => me == signer,
            Caller::Adversary => self.corrupted.contains(&signer),
        };
        if !allowed {
            let err = CryptoError::Forgery { caller, signer };
            self.rejected.push(err.clone());
            return Err(err);
        }
        self.partials.insert((signer, payload));
        Ok(PartialSig { signer, payload })
    }

    /// Combine partials into an `m`-of-`n` aggregate of the given kind.
    /// Duplicate signers count once.
    pub fn aggregate<'a>(
        &mut self,
        kind: CertKind,
        partials: impl IntoIterator<Item = &'a PartialSig>,
        m: usize,
    ) -> Result<ThresholdSig, CryptoError> {
        let mut payload = None;
        let mut signers = BTreeSet::new();
        for p in partials {
            match payload {
                None => payload = Some(p.payload),
                Some(existing) if existing != p.payload => {
                    return Err(CryptoError::PayloadMismatch);
                }
                Some(_) => {}
            }
            if !self.partials.contains(&(p.signer, p.payload)) {
                return Err(CryptoError::UnknownPartial(p.signer));
            }
            signers.insert(p.signer);
        }
        let Some(payload) = payload else {
            return Err(CryptoError::InsufficientSigners { have: 0, need: m });
        };
        if payload.kind != kind.sig_kind() {
            return Err(CryptoError::KindMismatch(kind));
        }
        if signers.len() < m {
            return Err(CryptoError::InsufficientSigners {
                have: signers.len(),
                need: m,
            });
        }
        let cert = Certificate {
            kind,
            payload,
            signers,
            threshold: m,
        };
        self.aggregates.insert(AggregateKey::of(&cert));
        Ok(cert)
    }

    /// True iff `sig` is exactly an aggregate this ledger produced.
    pub fn verify(&self, sig: &ThresholdSig) -> bool {
        sig.signers.len() >= sig.threshold && self.aggregates.contains(&AggregateKey::of(sig))
    }

    pub fn verify_partial(&self, p: &PartialSig) -> bool {
        self.partials.contains(&(p.signer, p.payload))
    }

    /// Rejected signing attempts. Non-empty means the harness or an
    /// adversary strategy tried to forge.
    pub fn rejected(&self) -> &[CryptoError] {
        &self.rejected
    }

    /// Re-check that every aggregate's signers issued the matching partial.
    /// Returns the offending (signer, payload) pairs.
    pub fn audit(&self) -> Vec<(ProcessorId, Payload)> {
        let mut bad = Vec::new();
        for agg in &self.aggregates {
            for s in &agg.signers {
                if !self.partials.contains(&(*s, agg.payload)) {
                    bad.push((*s, agg.payload));
                }
            }
        }
        bad
    }

    /// Number of partials issued per signer; used by tests.
    pub fn partial_counts(&self) -> BTreeMap<ProcessorId, usize> {
        let mut out = BTreeMap::new();
        for (s, _) in &self.partials {
            *out.entry(*s).or_default() += 1;
        }
        out
    }
}
