//! Leader schedules.
//!
//! Lumiere gives each leader two consecutive views and orders leaders by a
//! cyclic list of permutations `g_0 … g_{z-1}`, one per block of `2n` views.
//! Consecutive permutations are forced to be reverses of each other wherever
//! a block boundary coincides with an epoch boundary, so the last leader of
//! every epoch also leads the first view of the next.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::types::{ProcessorId, View};

/// Blocks of `2n` views per Lumiere epoch (`10n / 2n`).
const BLOCKS_PER_EPOCH: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    n: usize,
    seed: u64,
    permutations: Vec<Vec<ProcessorId>>,
}

/// Indices `i` for which `g_{i+1 mod z}` must be the reverse of `g_i`:
/// the odd indices, plus every block index that ends an epoch.
fn reverse_links(z: usize) -> Vec<bool> {
    let mut links = vec![false; z];
    for (i, l) in links.iter_mut().enumerate() {
        *l = i % 2 == 1;
    }
    // block b ends an epoch iff b ≡ 4 (mod 5); residues mod z repeat with
    // period lcm(5, z) ≤ 5z.
    for b in (BLOCKS_PER_EPOCH - 1..BLOCKS_PER_EPOCH * z).step_by(BLOCKS_PER_EPOCH) {
        links[b % z] = true;
    }
    links
}

fn reversed(p: &[ProcessorId]) -> Vec<ProcessorId> {
    p.iter().rev().copied().collect()
}

pub fn build_schedule(n: usize, z: usize, seed: u64) -> Result<Schedule, ConfigError> {
    if z < 2 || !z.is_multiple_of(2) {
        return Err(ConfigError::new("/z", format!("z must be even and >= 2, got {z}")));
    }
    if n < 4 {
        return Err(ConfigError::new("/n", format!("n must be >= 4, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let links = reverse_links(z);
    let sample = |rng: &mut ChaCha8Rng| {
        let mut p: Vec<ProcessorId> = (0..n as u32).map(ProcessorId).collect();
        p.shuffle(rng);
        p
    };

    let mut perms: Vec<Option<Vec<ProcessorId>>> = vec![None; z];
    // Start right after a missing link so every chain is walked from its
    // head. With every link present the chain is the whole (even) cycle.
    let start = (0..z).find(|&i| !links[(i + z - 1) % z]).unwrap_or(0);
    for k in 0..z {
        let j = (start + k) % z;
        let prev = (j + z - 1) % z;
        let p = if k > 0 && links[prev] {
            reversed(perms[prev].as_ref().expect("walked in order"))
        } else {
            sample(&mut rng)
        };
        perms[j] = Some(p);
    }
    Ok(Schedule {
        n,
        seed,
        permutations: perms.into_iter().map(|p| p.expect("filled")).collect(),
    })
}

impl Schedule {
    /// Build from explicit permutations, checking each is a bijection and
    /// that epoch-boundary transitions are reversals.
    pub fn from_permutations(
        n: usize,
        permutations: Vec<Vec<ProcessorId>>,
    ) -> Result<Schedule, ConfigError> {
        let z = permutations.len();
        if z < 2 || !z.is_multiple_of(2) {
            return Err(ConfigError::new("/z", "need an even number >= 2 of permutations"));
        }
        for (i, p) in permutations.iter().enumerate() {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|q| q.index() >= n || std::mem::replace(&mut seen[q.index()], true)) {
                return Err(ConfigError::new(format!("/permutations/{i}"), "not a permutation"));
            }
        }
        let links = reverse_links(z);
        for i in 0..z {
            if links[i] && permutations[(i + 1) % z] != reversed(&permutations[i]) {
                return Err(ConfigError::new(
                    format!("/permutations/{}", (i + 1) % z),
                    "must reverse its predecessor",
                ));
            }
        }
        Ok(Schedule { n, seed: 0, permutations })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> usize {
        self.permutations.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutations(&self) -> &[Vec<ProcessorId>] {
        &self.permutations
    }

    /// `lead(v) = g_j(⌊v/2⌋ mod n)` with `j = ⌊v/2n⌋ mod z`.
    pub fn leader_of(&self, v: View) -> ProcessorId {
        assert!(v.0 >= 0, "leader of negative view");
        let v = v.0 as usize;
        let j = (v / (2 * self.n)) % self.z();
        self.permutations[j][(v / 2) % self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineVariant {
    Lp22,
    Basic,
}

pub fn baseline_leader_of(variant: BaselineVariant, v: View, n: usize) -> ProcessorId {
    assert!(v.0 >= 0, "leader of negative view");
    let v = v.0 as usize;
    match variant {
        BaselineVariant::Lp22 => ProcessorId((v % n) as u32),
        BaselineVariant::Basic => ProcessorId(((v / 2) % n) as u32),
    }
}

/// Leader rule used by a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Leaders {
    Lumiere(Schedule),
    Baseline { variant: BaselineVariant, n: usize },
}

impl Leaders {
    pub fn leader_of(&self, v: View) -> ProcessorId {
        match self {
            Leaders::Lumiere(s) => s.leader_of(v),
            Leaders::Baseline { variant, n } => baseline_leader_of(*variant, v, *n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{first_view_of, Epoch};
    use proptest::prelude::*;

    fn ids(v: &[u32]) -> Vec<ProcessorId> {
        v.iter().copied().map(ProcessorId).collect()
    }

    #[test]
    fn z2_forces_reverse() {
        let s = build_schedule(4, 2, 99).unwrap();
        assert_eq!(s.permutations()[1], reversed(&s.permutations()[0]));
    }

    #[test]
    fn explicit_identity_schedule() {
        let s = Schedule::from_permutations(4, vec![ids(&[0, 1, 2, 3]), ids(&[3, 2, 1, 0])]).unwrap();
        assert_eq!(s.leader_of(View(0)), ProcessorId(0));
        assert_eq!(s.leader_of(View(1)), ProcessorId(0));
        assert_eq!(s.leader_of(View(6)), ProcessorId(3));
        assert_eq!(s.leader_of(View(7)), ProcessorId(3));
        assert_eq!(s.leader_of(View(8)), ProcessorId(3));
        assert!(Schedule::from_permutations(4, vec![ids(&[0, 1, 2, 3]), ids(&[0, 1, 2, 3])]).is_err());
        assert!(Schedule::from_permutations(4, vec![ids(&[0, 1, 1, 3]), ids(&[3, 1, 1, 0])]).is_err());
    }

    #[test]
    fn invalid_z() {
        assert!(build_schedule(4, 0, 1).is_err());
        assert!(build_schedule(4, 1, 1).is_err());
        assert!(build_schedule(4, 3, 1).is_err());
    }

    #[test]
    fn baseline_rules() {
        assert_eq!(baseline_leader_of(BaselineVariant::Lp22, View(5), 4), ProcessorId(1));
        assert_eq!(baseline_leader_of(BaselineVariant::Basic, View(5), 4), ProcessorId(2));
        assert_eq!(baseline_leader_of(BaselineVariant::Basic, View(0), 4), ProcessorId(0));
    }

    #[test]
    fn ten_views_per_leader_per_epoch() {
        let n = 7;
        let s = build_schedule(n, 6, 3).unwrap();
        for e in 0..8 {
            let first = first_view_of(Epoch(e), n).0;
            let mut count = vec![0; n];
            for v in first..first + 10 * n as i64 {
                count[s.leader_of(View(v)).index()] += 1;
            }
            assert!(count.iter().all(|&c| c == 10), "{count:?}");
        }
    }

    proptest! {
        #[test]
        fn schedule_invariants(n in 4usize..24, half_z in 1usize..12, seed in any::<u64>()) {
            let z = 2 * half_z;
            let s = build_schedule(n, z, seed).unwrap();
            prop_assert_eq!(&s, &build_schedule(n, z, seed).unwrap());
            for p in s.permutations() {
                let mut sorted = p.clone();
                sorted.sort();
                prop_assert_eq!(sorted, (0..n as u32).map(ProcessorId).collect::<Vec<_>>());
            }
            let horizon = (10 * n * z * 2) as i64;
            for v in (0..horizon).step_by(2) {
                prop_assert_eq!(s.leader_of(View(v)), s.leader_of(View(v + 1)));
            }
            for start in (0..horizon).step_by(2 * n) {
                let mut count = vec![0; n];
                for v in start..start + 2 * n as i64 {
                    count[s.leader_of(View(v)).index()] += 1;
                }
                prop_assert!(count.iter().all(|&c| c == 2));
            }
            for e in 1..(2 * z as i64 + 2) {
                let b = first_view_of(Epoch(e), n);
                let l = s.leader_of(b);
                prop_assert_eq!(s.leader_of(b.offset(-2)), l);
                prop_assert_eq!(s.leader_of(b.offset(-1)), l);
                prop_assert_eq!(s.leader_of(b.offset(1)), l);
            }
        }
    }
}
