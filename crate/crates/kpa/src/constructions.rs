//! Deterministic constructive lower bounds: parity halving, symbol insertion,
//! array composition, and the explicit two/three/five-member and pattern
//! families for restricted arrays. Every output is run through the verifier
//! before it is returned; a certification failure is reported as an error,
//! never glossed over.

use crate::error::Error;
use crate::perm::{Parity, Permutation};
use crate::verifier::{min_pairwise_distance_guarded, PermArray, PAIRWISE_GUARD};

/// A member of `S_{n,m}` given by the placements of its `m` largest symbols;
/// the remaining symbols are implicit in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternString {
    pub n: usize,
    /// `(position, symbol)` pairs, 0-based, injective in both parts.
    pub placements: Vec<(usize, u8)>,
}

impl PatternString {
    pub fn new(n: usize, placements: Vec<(usize, u8)>) -> Result<Self, Error> {
        let mut pos_seen = vec![false; n];
        for &(p, s) in &placements {
            if p >= n || (s as usize) >= n {
                return Err(Error::domain("placement out of range"));
            }
            if (s as usize) < n - placements.len() {
                return Err(Error::domain("placements must use the largest symbols"));
            }
            if pos_seen[p] {
                return Err(Error::domain("placement positions must be distinct"));
            }
            pos_seen[p] = true;
        }
        Ok(Self { n, placements })
    }

    /// Expands to the full permutation, filling the gaps with the small
    /// symbols in ascending order.
    pub fn expand(&self) -> Permutation {
        let mut v = vec![u8::MAX; self.n];
        for &(p, s) in &self.placements {
            v[p] = s;
        }
        let mut next = 0u8;
        for slot in v.iter_mut() {
            if *slot == u8::MAX {
                *slot = next;
                next += 1;
            }
        }
        Permutation::new(v).expect("valid placements expand to a bijection")
    }
}

fn certify_or_fail(arr: &PermArray, d: u32, what: &str) -> Result<(), Error> {
    if arr.len() > PAIRWISE_GUARD {
        return Ok(()); // beyond desk-scale certification; caller is warned by provenance
    }
    let report = min_pairwise_distance_guarded(arr, false)?;
    if !report.passes(d) {
        return Err(Error::domain(format!(
            "{what}: output failed certification at d={d} (min distance {}, witness {:?})",
            report.min_distance, report.witness_pair
        )));
    }
    Ok(())
}

fn finish(mut arr: PermArray, d: u32, what: &str) -> Result<PermArray, Error> {
    arr.claimed_d = Some(d);
    certify_or_fail(&arr, d, what)?;
    Ok(arr)
}

/// Parity halving: from an array certified at odd `d`, the larger inversion
/// parity class certifies at `d + 1` (same-parity distances are even).
pub fn halve_even(a: &PermArray) -> Result<PermArray, Error> {
    let d = a
        .claimed_d
        .ok_or_else(|| Error::domain("halve_even needs an input with a claimed d"))?;
    if d % 2 == 0 {
        return Err(Error::domain("halve_even requires odd d (even input: use as-is)"));
    }
    certify_or_fail(a, d, "halve_even input")?;
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for p in a.perms() {
        match p.parity() {
            Parity::Even => even.push(p.clone()),
            Parity::Odd => odd.push(p.clone()),
        }
    }
    let larger = if odd.len() > even.len() { odd } else { even };
    let mut arr = PermArray::new(larger, format!("halve_even({})", a.provenance))?;
    arr.restriction_m = a.restriction_m;
    finish(arr, d + 1, "halve_even")
}

/// Insertion of a new largest symbol at positions `1, d+1, 2d+1, ...`
/// (1-based), turning an `(n, d)`-array into an `(n+1, d)`-array of size
/// `ceil((n+1)/d) * |a|`.
pub fn insert_symbol(a: &PermArray) -> Result<PermArray, Error> {
    let d = a
        .claimed_d
        .ok_or_else(|| Error::domain("insert_symbol needs an input with a claimed d"))?;
    certify_or_fail(a, d, "insert_symbol input")?;
    let n = a.n();
    let new_symbol = n as u8;
    let mut out = Vec::new();
    let mut pos = 0usize; // 0-based insertion index: 0, d, 2d, ... <= n
    while pos <= n {
        for p in a.perms() {
            let mut v = p.symbols().to_vec();
            v.insert(pos, new_symbol);
            out.push(Permutation::new(v)?);
        }
        pos += d as usize;
    }
    let arr = PermArray::new(out, format!("insert_symbol({})", a.provenance))?;
    let expected = (n + 1).div_ceil(d as usize) * a.len();
    debug_assert_eq!(arr.len(), expected);
    finish(arr, d, "insert_symbol")
}

/// Substitution composition: for each outer member of an `(n, m, d)`-array
/// and each inner member of an `(n-m, d)`-array, the sorted small symbols of
/// the outer member are replaced, in position order, by the inner sequence.
/// Yields an `(n, d)`-array of size `|outer| * |inner|`.
pub fn compose(outer: &PermArray, inner: &PermArray) -> Result<PermArray, Error> {
    let m = outer
        .restriction_m
        .ok_or_else(|| Error::domain("compose: outer array must carry a restriction m"))?;
    let d = outer
        .claimed_d
        .or(inner.claimed_d)
        .ok_or_else(|| Error::domain("compose: no claimed d on either input"))?;
    let n = outer.n();
    if inner.n() != n - m {
        return Err(Error::LengthMismatch {
            left: inner.n(),
            right: n - m,
        });
    }
    if !outer.restriction_holds(m) {
        return Err(Error::RestrictionViolated { m, index: 0 });
    }
    certify_or_fail(outer, d, "compose outer")?;
    if inner.len() > 1 {
        certify_or_fail(inner, d, "compose inner")?;
    }
    let small = (n - m) as u8;
    let mut out = Vec::with_capacity(outer.len() * inner.len());
    for pi in outer.perms() {
        let small_positions: Vec<usize> = (0..n).filter(|&i| pi.image(i) < small).collect();
        for tau in inner.perms() {
            let mut v = pi.symbols().to_vec();
            for (j, &p) in small_positions.iter().enumerate() {
                v[p] = tau.image(j);
            }
            out.push(Permutation::new(v)?);
        }
    }
    let arr = PermArray::new(
        out,
        format!("compose({} x {})", outer.provenance, inner.provenance),
    )?;
    if arr.len() != outer.len() * inner.len() {
        return Err(Error::domain("compose: collision between composed members"));
    }
    finish(arr, d, "compose")
}

/// Per-representative composition: a union of `(n, d)`-arrays, one per outer
/// member, where each inner array's `m` largest symbols sit exactly at that
/// member's placements. Yields an `(n, d)`-array of the summed size.
pub fn compose_sum(outer: &PermArray, inners: &[PermArray]) -> Result<PermArray, Error> {
    let m = outer
        .restriction_m
        .ok_or_else(|| Error::domain("compose_sum: outer array must carry a restriction m"))?;
    let d = outer
        .claimed_d
        .ok_or_else(|| Error::domain("compose_sum: outer array must carry a claimed d"))?;
    if inners.len() != outer.len() {
        return Err(Error::domain(format!(
            "compose_sum: {} inner arrays for {} outer members",
            inners.len(),
            outer.len()
        )));
    }
    let n = outer.n();
    let large = (n - m) as u8;
    let mut out = Vec::new();
    let mut total = 0usize;
    for (tau, inner) in outer.perms().iter().zip(inners) {
        if inner.n() != n {
            return Err(Error::LengthMismatch { left: inner.n(), right: n });
        }
        let placements: Vec<(usize, u8)> = (0..n)
            .map(|i| (i, tau.image(i)))
            .filter(|&(_, s)| s >= large)
            .collect();
        for member in inner.perms() {
            if !placements.iter().all(|&(p, s)| member.image(p) == s) {
                return Err(Error::domain(format!(
                    "compose_sum: inner member {member} does not match placements of {tau}"
                )));
            }
        }
        total += inner.len();
        out.extend(inner.perms().iter().cloned());
    }
    let arr = PermArray::new(out, format!("compose_sum({})", outer.provenance))?;
    if arr.len() != total {
        return Err(Error::domain("compose_sum: overlapping inner arrays"));
    }
    finish(arr, d, "compose_sum")
}

/// The two-member `(n, m, d)`-array `{identity, (n-1, ..., n-m, 0, ..., n-m-1)}`
/// (0-based) with pairwise distance exactly `mn - m(m+1)/2`.
pub fn two_point_array(n: usize, m: usize) -> Result<PermArray, Error> {
    if m < 1 || m >= n {
        return Err(Error::domain("two_point_array requires 1 <= m < n"));
    }
    let mut v: Vec<u8> = ((n - m) as u8..n as u8).rev().collect();
    v.extend(0..(n - m) as u8);
    let d = (m * n - m * (m + 1) / 2) as u32;
    let mut arr = PermArray::new(
        vec![Permutation::identity(n), Permutation::new(v)?],
        format!("two_point({n},{m})"),
    )?;
    arr.restriction_m = Some(m);
    finish(arr, d, "two_point_array")
}

fn placements_array(
    n: usize,
    rows: &[Vec<(usize, u8)>],
    d: u32,
    provenance: String,
) -> Result<PermArray, Error> {
    let perms = rows
        .iter()
        .map(|r| PatternString::new(n, r.clone()).map(|p| p.expand()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut arr = PermArray::new(perms, provenance)?;
    arr.restriction_m = Some(2);
    finish(arr, d, "placement family")
}

/// Three-member `(n, 2, d)`-array certified at `d = n + floor(n/3) - 2`.
pub fn three_array(n: usize) -> Result<PermArray, Error> {
    if n < 5 {
        return Err(Error::domain("three_array requires n >= 5"));
    }
    let x = n / 3;
    let (l1, l2) = ((n - 2) as u8, (n - 1) as u8); // the two largest symbols
    let rows = vec![
        vec![(0, l1), (1, l2)],
        vec![(x - 1, l2), (n - 1, l1)],
        vec![(x, l1), (n - 1, l2)],
    ];
    let d = (n + n / 3 - 2) as u32;
    placements_array(n, &rows, d, format!("three_array({n})"))
}

/// Five-member `(n, 2, n-2)`-array. For even `n = 2k` the middle member
/// places the pair in order at positions `k, k+1`; for odd `n` the pair is
/// reversed there.
pub fn five_array(n: usize) -> Result<PermArray, Error> {
    if n < 6 {
        return Err(Error::domain("five_array requires n >= 6"));
    }
    let (l1, l2) = ((n - 2) as u8, (n - 1) as u8);
    let k = n / 2;
    let middle = if n % 2 == 0 {
        vec![(k - 1, l1), (k, l2)]
    } else {
        vec![(k - 1, l2), (k, l1)]
    };
    let rows = vec![
        vec![(0, l1), (1, l2)],
        vec![(n - 2, l1), (n - 1, l2)],
        middle,
        vec![(0, l1), (n - 1, l2)],
        vec![(0, l2), (n - 1, l1)],
    ];
    placements_array(n, &rows, (n - 2) as u32, format!("five_array({n})"))
}

/// One gap-parameterized string: `a` small symbols, then one large symbol,
/// `b` small symbols, the other large symbol, and the rest. `swap` puts the
/// largest symbol first.
fn gap_string(n: usize, a: usize, b: usize, swap: bool) -> Vec<(usize, u8)> {
    let (l1, l2) = ((n - 2) as u8, (n - 1) as u8);
    let (first, second) = if swap { (l2, l1) } else { (l1, l2) };
    vec![(a, first), (a + 1 + b, second)]
}

/// The `(n, 2, 3)` pattern family: size `n(n+1)/6` when `n` is not 1 mod 3,
/// `(n+2)(n-1)/6` otherwise. Certified at 3.
pub fn pattern_d3(n: usize) -> Result<PermArray, Error> {
    if n < 4 {
        return Err(Error::domain("pattern_d3 requires n >= 4"));
    }
    let mut rows = Vec::new();
    // pi1: large symbols in ascending order, a even, b multiple of 3
    for a in (0..=n - 2).step_by(2) {
        for b in (0..=n - 2 - a).step_by(3) {
            rows.push(gap_string(n, a, b, false));
        }
    }
    // pi2: descending order, a odd
    for a in (1..=n.saturating_sub(2)).step_by(2) {
        for b in (0..=n - 2 - a).step_by(3) {
            rows.push(gap_string(n, a, b, true));
        }
    }
    placements_array(n, &rows, 3, format!("pattern_d3({n})"))
}

/// Expected [`pattern_d3`] size.
pub fn pattern_d3_size(n: usize) -> usize {
    if n % 3 == 1 {
        (n + 2) * (n - 1) / 6
    } else {
        n * (n + 1) / 6
    }
}

/// The `(n, 2, 4)` pattern family for odd `n`: size `2k^2 + k` when
/// `n = 4k+1`, `2k^2 + 3k + 1` when `n = 4k+3`. Certified at 4.
pub fn pattern_d4(n: usize) -> Result<PermArray, Error> {
    if n < 5 {
        return Err(Error::domain("pattern_d4 requires n >= 5"));
    }
    if n % 2 == 0 {
        return Err(Error::domain("pattern_d4 requires odd n"));
    }
    let mut rows = Vec::new();
    // pi1: a even, b in {0, 4, 8, ...}
    for a in (0..=n - 2).step_by(2) {
        for b in (0..=n - 2 - a).step_by(4) {
            rows.push(gap_string(n, a, b, false));
        }
    }
    // pi2: a even, b in {3, 7, 11, ...}
    for a in (0..=n - 2).step_by(2) {
        let mut b = 3;
        while a + b <= n - 2 {
            rows.push(gap_string(n, a, b, true));
            b += 4;
        }
    }
    placements_array(n, &rows, 4, format!("pattern_d4({n})"))
}

/// Expected [`pattern_d4`] size.
pub fn pattern_d4_size(n: usize) -> usize {
    if n % 4 == 1 {
        let k = (n - 1) / 4;
        2 * k * k + k
    } else {
        let k = (n - 3) / 4;
        2 * k * k + 3 * k + 1
    }
}
