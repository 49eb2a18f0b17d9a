//! Certification of permutation arrays: exact minimum pairwise distance with
//! a witnessing pair. This is the ground truth every other module defers to.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::Error;
use crate::perm::{kendall_distance_unchecked, Permutation};

/// Pairwise verification above this many members needs an explicit override.
pub const PAIRWISE_GUARD: usize = 100_000;

/// A set of permutations with metadata. Members are deduplicated on
/// construction (first occurrence kept, stable order); the number of dropped
/// duplicates is recorded.
#[derive(Clone, Debug)]
pub struct PermArray {
    n: usize,
    perms: Vec<Permutation>,
    pub claimed_d: Option<u32>,
    pub restriction_m: Option<usize>,
    pub provenance: String,
    duplicates_dropped: usize,
}

impl PermArray {
    pub fn new(perms: Vec<Permutation>, provenance: impl Into<String>) -> Result<Self, Error> {
        let n = match perms.first() {
            Some(p) => p.n(),
            None => return Err(Error::EmptyArray),
        };
        let mut seen = std::collections::HashSet::new();
        let mut kept = Vec::with_capacity(perms.len());
        let mut dropped = 0usize;
        for p in perms {
            if p.n() != n {
                return Err(Error::MixedLengths { left: n, right: p.n() });
            }
            if seen.insert(p.clone()) {
                kept.push(p);
            } else {
                dropped += 1;
            }
        }
        Ok(Self {
            n,
            perms: kept,
            claimed_d: None,
            restriction_m: None,
            provenance: provenance.into(),
            duplicates_dropped: dropped,
        })
    }

    pub fn with_claimed_d(mut self, d: u32) -> Self {
        self.claimed_d = Some(d);
        self
    }

    pub fn with_restriction_m(mut self, m: usize) -> Self {
        self.restriction_m = Some(m);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    /// Sorts members lexicographically in place (for diff-stable output).
    pub fn sort(&mut self) {
        self.perms.sort();
    }

    /// True iff every member has its `n - m` smallest symbols in increasing
    /// order of position (the `S_{n,m}` condition).
    pub fn restriction_holds(&self, m: usize) -> bool {
        self.perms.iter().all(|p| in_snm(p, m))
    }

    /// Distance reported for a singleton array: one past the metric maximum.
    pub fn infinite_distance(&self) -> u32 {
        (self.n * (self.n - 1) / 2) as u32 + 1
    }
}

/// True iff the `n - m` smallest symbols of `p` appear in increasing order.
pub fn in_snm(p: &Permutation, m: usize) -> bool {
    let small = p.n().saturating_sub(m) as u8;
    let mut last: Option<u8> = None;
    for &s in p.symbols() {
        if s < small {
            if let Some(prev) = last {
                if s < prev {
                    return false;
                }
            }
            last = Some(s);
        }
    }
    true
}

/// Outcome of a certification run.
#[derive(Clone, Debug)]
pub struct CertReport {
    pub size: usize,
    pub min_distance: u32,
    /// Indices of a pair attaining `min_distance`; absent for singletons.
    pub witness_pair: Option<(usize, usize)>,
    pub restriction_ok: bool,
    pub duplicates_dropped: usize,
    pub elapsed: Duration,
}

impl CertReport {
    pub fn passes(&self, d: u32) -> bool {
        self.min_distance >= d && self.restriction_ok
    }
}

/// Exact minimum over all unordered pairs, evaluated in parallel.
/// Arrays above [`PAIRWISE_GUARD`] members are refused unless `override_guard`.
pub fn min_pairwise_distance_guarded(a: &PermArray, override_guard: bool) -> Result<CertReport, Error> {
    if a.is_empty() {
        return Err(Error::EmptyArray);
    }
    if a.len() > PAIRWISE_GUARD && !override_guard {
        return Err(Error::guard(format!(
            "array has {} members (> {}); pass the override to certify anyway",
            a.len(),
            PAIRWISE_GUARD
        )));
    }
    let start = Instant::now();
    let restriction_ok = match a.restriction_m {
        Some(m) => a.restriction_holds(m),
        None => true,
    };
    let (min_distance, witness_pair) = if a.len() < 2 {
        (a.infinite_distance(), None)
    } else {
        let perms = a.perms();
        let best = (0..perms.len() - 1)
            .into_par_iter()
            .map(|i| {
                let mut local = (u32::MAX, (0usize, 0usize));
                for j in i + 1..perms.len() {
                    let d = kendall_distance_unchecked(perms[i].symbols(), perms[j].symbols());
                    if d < local.0 {
                        local = (d, (i, j));
                    }
                }
                local
            })
            .min_by_key(|&(d, _)| d)
            .unwrap();
        (best.0, Some(best.1))
    };
    Ok(CertReport {
        size: a.len(),
        min_distance,
        witness_pair,
        restriction_ok,
        duplicates_dropped: a.duplicates_dropped(),
        elapsed: start.elapsed(),
    })
}

pub fn min_pairwise_distance(a: &PermArray) -> Result<CertReport, Error> {
    min_pairwise_distance_guarded(a, false)
}

/// Passes iff the minimum pairwise distance is at least `d` and, when the
/// array carries a restriction `m`, every member satisfies `S_{n,m}`.
pub fn certify(a: &PermArray, d: u32) -> Result<CertReport, Error> {
    if d < 1 {
        return Err(Error::domain("certify requires d >= 1"));
    }
    min_pairwise_distance(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{factorial, lehmer_unrank};

    fn p(s: &[u8]) -> Permutation {
        Permutation::new(s.to_vec()).unwrap()
    }

    #[test]
    fn empty_array_rejected() {
        assert!(PermArray::new(vec![], "t").is_err());
    }

    #[test]
    fn singleton_reports_sentinel() {
        let a = PermArray::new(vec![Permutation::identity(5)], "t").unwrap();
        let r = min_pairwise_distance(&a).unwrap();
        assert_eq!(r.min_distance, 11);
        assert!(r.witness_pair.is_none());
    }

    #[test]
    fn duplicates_are_dropped_and_counted() {
        let a = PermArray::new(
            vec![Permutation::identity(4), Permutation::identity(4), Permutation::reversal(4)],
            "t",
        )
        .unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a.duplicates_dropped(), 1);
    }

    #[test]
    fn printed_14_2_11_array_certifies() {
        // Placements of the two largest symbols (0-based 12 and 13) over n=14,
        // small symbols sorted: pairs of 1-based positions for (12, 13).
        let rows: [(&[usize], &[u8]); 5] = [
            (&[7, 8], &[12, 13]),
            (&[14, 3], &[12, 13]),
            (&[13, 14], &[12, 13]),
            (&[1, 2], &[12, 13]),
            (&[1, 14], &[12, 13]),
        ];
        let perms: Vec<Permutation> = rows
            .iter()
            .map(|(pos, syms)| {
                let mut v = vec![u8::MAX; 14];
                for (k, &pp) in pos.iter().enumerate() {
                    v[pp - 1] = syms[k];
                }
                let mut next = 0u8;
                for slot in v.iter_mut() {
                    if *slot == u8::MAX {
                        *slot = next;
                        next += 1;
                    }
                }
                p(&v)
            })
            .collect();
        let a = PermArray::new(perms, "printed (14,2,11) array").unwrap().with_restriction_m(2);
        let r = certify(&a, 11).unwrap();
        assert!(r.min_distance >= 11, "min distance {}", r.min_distance);
        assert!(r.restriction_ok);
    }

    #[test]
    fn full_s4_has_min_distance_1() {
        let perms: Vec<Permutation> = (0..factorial(4))
            .map(|r| p(&lehmer_unrank(4, r)))
            .collect();
        let a = PermArray::new(perms, "t").unwrap();
        let r = min_pairwise_distance(&a).unwrap();
        assert_eq!(r.min_distance, 1);
        let (i, j) = r.witness_pair.unwrap();
        assert_eq!(
            crate::perm::kendall_distance(&a.perms()[i], &a.perms()[j]).unwrap(),
            r.min_distance
        );
    }

    #[test]
    fn failing_certification_has_witness() {
        let a = PermArray::new(vec![Permutation::identity(4), Permutation::reversal(4)], "t").unwrap();
        let r = certify(&a, 7).unwrap();
        assert!(!r.passes(7));
        assert!(r.passes(6));
        assert!(r.witness_pair.is_some());
    }

    #[test]
    fn restriction_check() {
        // 0 1 4 2 3 is in S_{5,1} (small symbols 0..3 sorted) but
        // 0 2 4 1 3 is not.
        let good = p(&[0, 1, 4, 2, 3]);
        let bad = p(&[0, 2, 4, 1, 3]);
        assert!(in_snm(&good, 1));
        assert!(!in_snm(&bad, 1));
        let a = PermArray::new(vec![bad], "t").unwrap().with_restriction_m(1);
        let r = certify(&a, 1).unwrap();
        assert!(!r.restriction_ok);
    }

    #[test]
    fn removing_member_never_decreases_min_distance() {
        let perms: Vec<Permutation> = (0..factorial(4))
            .step_by(3)
            .map(|r| p(&lehmer_unrank(4, r as u128)))
            .collect();
        let full = PermArray::new(perms.clone(), "t").unwrap();
        let base = min_pairwise_distance(&full).unwrap().min_distance;
        for skip in 0..perms.len() {
            let rest: Vec<_> = perms
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, q)| q.clone())
                .collect();
            let r = min_pairwise_distance(&PermArray::new(rest, "t").unwrap()).unwrap();
            assert!(r.min_distance >= base);
        }
    }
}
