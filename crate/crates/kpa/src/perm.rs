//! Permutations in one-line notation and the Kendall tau metric.
//!
//! A [`Permutation`] stores the images `pi(0), ..., pi(n-1)` over the symbol
//! set `{0, ..., n-1}`. All symbols are 0-based internally; 1-based input is
//! normalized at the I/O boundary.

use std::collections::VecDeque;
use std::fmt;

use crate::error::Error;

/// Hard cap on `n`. Keeps every distance within `u32` (max is 64*63/2 = 2016).
pub const MAX_N: usize = 64;

/// Largest `n` accepted by [`bfs_distance_oracle`] (state space 8! = 40320).
pub const MAX_ORACLE_N: usize = 8;

/// A permutation of `{0, ..., n-1}` in one-line notation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    symbols: Vec<u8>,
}

impl Permutation {
    /// Builds a permutation from its one-line notation, validating that the
    /// symbols form a bijection on `{0, ..., n-1}`.
    pub fn new(symbols: Vec<u8>) -> Result<Self, Error> {
        let n = symbols.len();
        if n == 0 || n > MAX_N {
            return Err(Error::BadLength { n });
        }
        let mut seen = [false; MAX_N];
        for &s in &symbols {
            if (s as usize) >= n || seen[s as usize] {
                return Err(Error::NotABijection { symbol: s, n });
            }
            seen[s as usize] = true;
        }
        Ok(Self { symbols })
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_N);
        Self {
            symbols: (0..n as u8).collect(),
        }
    }

    /// The reversal `(n-1, ..., 1, 0)`, at maximum distance from the identity.
    pub fn reversal(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_N);
        Self {
            symbols: (0..n as u8).rev().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Image of position `i`.
    pub fn image(&self, i: usize) -> u8 {
        self.symbols[i]
    }

    /// Position of symbol `s`.
    pub fn position_of(&self, s: u8) -> usize {
        self.symbols.iter().position(|&x| x == s).unwrap()
    }

    pub fn is_identity(&self) -> bool {
        self.symbols.iter().enumerate().all(|(i, &s)| i == s as usize)
    }

    /// Group inverse: `inverse(p)(s) = i` iff `p(i) = s`.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u8; self.n()];
        for (i, &s) in self.symbols.iter().enumerate() {
            inv[s as usize] = i as u8;
        }
        Self { symbols: inv }
    }

    /// Composition `(p . q)(i) = p(q(i))`.
    pub fn compose(&self, q: &Self) -> Result<Self, Error> {
        if self.n() != q.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: q.n(),
            });
        }
        let symbols = q.symbols.iter().map(|&i| self.symbols[i as usize]).collect();
        Ok(Self { symbols })
    }

    /// Parity of the inversion count relative to the identity.
    pub fn parity(&self) -> Parity {
        if inversion_count(&self.symbols) % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({})", self)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", s)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Parity {
    Even,
    Odd,
}

/// Number of pairs `i < j` with `seq[i] > seq[j]`, by merge counting.
pub fn inversion_count(seq: &[u8]) -> u32 {
    let mut work: Vec<u8> = seq.to_vec();
    let mut buf = vec![0u8; seq.len()];
    merge_count(&mut work, &mut buf)
}

fn merge_count(seq: &mut [u8], buf: &mut [u8]) -> u32 {
    let n = seq.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (lo, hi) = seq.split_at_mut(mid);
        merge_count(lo, &mut buf[..mid]) + merge_count(hi, &mut buf[mid..])
    };
    let (mut i, mut j) = (0, mid);
    for k in 0..n {
        if i < mid && (j >= n || seq[i] <= seq[j]) {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            j += 1;
            inv += (mid - i) as u32;
        }
    }
    seq.copy_from_slice(&buf[..n]);
    inv
}

/// Kendall tau distance: the minimum number of adjacent transpositions
/// turning `sigma` into `pi`. Computed as the inversion count of the
/// relabeling `rho[i] = position of pi(i) within sigma`.
pub fn kendall_distance(sigma: &Permutation, pi: &Permutation) -> Result<u32, Error> {
    if sigma.n() != pi.n() {
        return Err(Error::LengthMismatch {
            left: sigma.n(),
            right: pi.n(),
        });
    }
    Ok(kendall_distance_unchecked(sigma.symbols(), pi.symbols()))
}

/// Same as [`kendall_distance`] but over raw slices of equal length, skipping
/// validation. Used in inner loops of the verifier and the searches.
pub fn kendall_distance_unchecked(sigma: &[u8], pi: &[u8]) -> u32 {
    let n = sigma.len();
    let mut pos = [0u8; MAX_N];
    for (i, &s) in sigma.iter().enumerate() {
        pos[s as usize] = i as u8;
    }
    let mut rho = [0u8; MAX_N];
    for (i, &s) in pi.iter().enumerate() {
        rho[i] = pos[s as usize];
    }
    inversion_count(&rho[..n])
}

/// Ground-truth metric check: breadth-first search from `sigma` over the
/// adjacent-transposition move graph until `pi` is reached.
///
/// Refuses `n > 8` (state space guard).
pub fn bfs_distance_oracle(sigma: &Permutation, pi: &Permutation) -> Result<u32, Error> {
    if sigma.n() != pi.n() {
        return Err(Error::LengthMismatch {
            left: sigma.n(),
            right: pi.n(),
        });
    }
    let n = sigma.n();
    if n > MAX_ORACLE_N {
        return Err(Error::OracleTooLarge { n });
    }
    if sigma == pi {
        return Ok(0);
    }
    let space = factorial(n) as usize;
    let mut dist = vec![u32::MAX; space];
    let mut queue = VecDeque::new();
    dist[lehmer_rank(sigma.symbols())] = 0;
    queue.push_back(sigma.symbols.clone());
    let target = pi.symbols();
    while let Some(cur) = queue.pop_front() {
        let d = dist[lehmer_rank(&cur)];
        for i in 0..n - 1 {
            let mut next = cur.clone();
            next.swap(i, i + 1);
            let r = lehmer_rank(&next);
            if dist[r] == u32::MAX {
                dist[r] = d + 1;
                if next.as_slice() == target {
                    return Ok(d + 1);
                }
                queue.push_back(next);
            }
        }
    }
    unreachable!("adjacent transpositions generate the symmetric group");
}

/// BFS distance table from `sigma` to every permutation of the same `n`,
/// indexed by Lehmer rank. Lets a test amortize one search over many targets.
pub fn bfs_distance_table(sigma: &Permutation) -> Result<Vec<u32>, Error> {
    let n = sigma.n();
    if n > MAX_ORACLE_N {
        return Err(Error::OracleTooLarge { n });
    }
    let space = factorial(n) as usize;
    let mut dist = vec![u32::MAX; space];
    let mut queue = VecDeque::new();
    dist[lehmer_rank(sigma.symbols())] = 0;
    queue.push_back(sigma.symbols.clone());
    while let Some(cur) = queue.pop_front() {
        let d = dist[lehmer_rank(&cur)];
        for i in 0..n - 1 {
            let mut next = cur.clone();
            next.swap(i, i + 1);
            let r = lehmer_rank(&next);
            if dist[r] == u32::MAX {
                dist[r] = d + 1;
                queue.push_back(next);
            }
        }
    }
    Ok(dist)
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Rank of a permutation in lexicographic order (factorial number system).
pub fn lehmer_rank(symbols: &[u8]) -> usize {
    let n = symbols.len();
    let mut rank = 0usize;
    for i in 0..n {
        let smaller = symbols[i + 1..].iter().filter(|&&s| s < symbols[i]).count();
        rank = rank * (n - i) + smaller;
    }
    rank
}

/// Inverse of [`lehmer_rank`]: the `rank`-th permutation of `{0..n-1}` in
/// lexicographic order.
pub fn lehmer_unrank(n: usize, mut rank: u128) -> Vec<u8> {
    let mut digits = vec![0usize; n];
    for i in (0..n).rev() {
        let base = (n - i) as u128;
        digits[i] = (rank % base) as usize;
        rank /= base;
    }
    let mut pool: Vec<u8> = (0..n as u8).collect();
    digits.iter().map(|&d| pool.remove(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn p(s: &[u8]) -> Permutation {
        Permutation::new(s.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3]).is_err());
        assert!(Permutation::new(vec![]).is_err());
    }

    #[test]
    fn distance_single_swap() {
        assert_eq!(kendall_distance(&p(&[0, 1, 2]), &p(&[0, 2, 1])).unwrap(), 1);
    }

    #[test]
    fn distance_reversal_is_max() {
        for n in 2..=10 {
            let d = kendall_distance(&Permutation::identity(n), &Permutation::reversal(n)).unwrap();
            assert_eq!(d as usize, n * (n - 1) / 2);
        }
    }

    #[test]
    fn distance_proposition8_prefix() {
        // 0-based: pi = (12, 11, 0, 1, ..., 10) over n=13 moves the two
        // largest symbols to the front: distance (n-1)+(n-2) = 23.
        let mut sym = vec![12u8, 11];
        sym.extend(0..11u8);
        let d = kendall_distance(&Permutation::identity(13), &p(&sym)).unwrap();
        assert_eq!(d, 23);
    }

    #[test]
    fn distance_mismatched_lengths_fail() {
        assert!(kendall_distance(&Permutation::identity(3), &Permutation::identity(4)).is_err());
    }

    #[test]
    fn bfs_oracle_basics() {
        let id = Permutation::identity(4);
        assert_eq!(bfs_distance_oracle(&id, &id).unwrap(), 0);
        assert_eq!(bfs_distance_oracle(&id, &p(&[1, 0, 3, 2])).unwrap(), 2);
        assert!(bfs_distance_oracle(&Permutation::identity(9), &Permutation::identity(9)).is_err());
    }

    #[test]
    fn oracle_agrees_exhaustively_n4() {
        let n = 4;
        for a in 0..factorial(n) {
            let pa = p(&lehmer_unrank(n, a));
            let table = bfs_distance_table(&pa).unwrap();
            for b in 0..factorial(n) {
                let pb = p(&lehmer_unrank(n, b));
                assert_eq!(
                    kendall_distance(&pa, &pb).unwrap(),
                    table[lehmer_rank(pb.symbols())]
                );
            }
        }
    }

    #[test]
    fn oracle_agrees_random_n6() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut a: Vec<u8> = (0..6).collect();
            let mut b: Vec<u8> = (0..6).collect();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let (pa, pb) = (p(&a), p(&b));
            assert_eq!(
                kendall_distance(&pa, &pb).unwrap(),
                bfs_distance_oracle(&pa, &pb).unwrap()
            );
        }
    }

    #[test]
    fn inverse_and_compose() {
        assert!(Permutation::identity(5).inverse().is_identity());
        assert_eq!(p(&[1, 2, 0]).inverse(), p(&[2, 0, 1]));
        let q = p(&[3, 1, 0, 2]);
        assert!(q.compose(&q.inverse()).unwrap().is_identity());
        assert!(q.inverse().compose(&q).unwrap().is_identity());
    }

    #[test]
    fn parity_basics() {
        assert_eq!(Permutation::identity(5).parity(), Parity::Even);
        assert_eq!(p(&[1, 0, 2, 3, 4]).parity(), Parity::Odd);
    }

    #[test]
    fn lehmer_roundtrip() {
        for n in 1..=6 {
            for r in 0..factorial(n) {
                let sym = lehmer_unrank(n, r);
                assert_eq!(lehmer_rank(&sym) as u128, r);
            }
        }
    }

    fn arb_perm(n: usize) -> impl Strategy<Value = Permutation> {
        Just(()).prop_perturb(move |_, mut rng| {
            let mut sym: Vec<u8> = (0..n as u8).collect();
            for i in (1..n).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                sym.swap(i, j);
            }
            Permutation::new(sym).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_axioms(a in arb_perm(8), b in arb_perm(8), c in arb_perm(8)) {
            let dab = kendall_distance(&a, &b).unwrap();
            let dba = kendall_distance(&b, &a).unwrap();
            prop_assert_eq!(dab, dba);
            prop_assert_eq!(dab == 0, a == b);
            let dac = kendall_distance(&a, &c).unwrap();
            let dcb = kendall_distance(&c, &b).unwrap();
            prop_assert!(dab <= dac + dcb);
        }

        #[test]
        fn relabeling_invariance(a in arb_perm(7), b in arb_perm(7), rho in arb_perm(7)) {
            // renaming the symbols by rho leaves the distance unchanged
            let d = kendall_distance(&a, &b).unwrap();
            let dr = kendall_distance(&rho.compose(&a).unwrap(), &rho.compose(&b).unwrap()).unwrap();
            prop_assert_eq!(d, dr);
        }

        #[test]
        fn distance_parity_consistency(a in arb_perm(8), b in arb_perm(8)) {
            let d = kendall_distance(&a, &b).unwrap();
            let pa = if a.parity() == Parity::Odd { 1u32 } else { 0 };
            let pb = if b.parity() == Parity::Odd { 1u32 } else { 0 };
            prop_assert_eq!(d % 2, (pa + pb) % 2);
        }
    }
}
