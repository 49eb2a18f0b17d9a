//! Symbol-set arithmetic (ring `Z_n` or a small Galois field `GF(p^k)`) and
//! the affine automorphism family `x -> a*pi(x+b)+c`, together with orbit
//! expansion of representative lists and a randomized representative search.
//!
//! Field elements map to symbols through their coefficient vectors: the
//! element with base-`p` digits `(c_{k-1}, ..., c_0)` is the symbol
//! `sum c_i p^i`. Distances depend on this labeling, so the verifier (not the
//! construction) is the final arbiter for every expanded table.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::perm::{kendall_distance_unchecked, Permutation};
use crate::verifier::PermArray;

/// Default irreducible polynomial for GF(8): `x^3 + x^2 + 1`.
///
/// Chosen over `x^3 + x + 1` because only this labeling reproduces the
/// published expansion distances; certification is the arbiter.
pub const GF8_DEFAULT_POLY: &[u8] = &[1, 0, 1, 1];
/// Default irreducible polynomial for GF(9): `x^2 + 2x + 2`, chosen the same
/// way (the `x^2 + 1` labeling certifies at distance 3, not 7).
pub const GF9_DEFAULT_POLY: &[u8] = &[2, 2, 1];

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DomainKind {
    RingModN,
    FieldGf,
}

/// The algebraic structure underlying automorphism actions on the symbols.
#[derive(Clone, Debug)]
pub struct SymbolDomain {
    kind: DomainKind,
    n: usize,
    /// For fields: characteristic, extension degree, and the monic irreducible
    /// modulus as coefficients `c_0, c_1, ..., c_k` (constant term first).
    field: Option<FieldData>,
}

#[derive(Clone, Debug)]
struct FieldData {
    p: usize,
    k: usize,
    poly: Vec<u8>,
    mul_table: Vec<u8>,
}

impl SymbolDomain {
    pub fn ring(n: usize) -> Result<Self, Error> {
        if n == 0 || n > 64 {
            return Err(Error::domain(format!("ring size {n} out of range")));
        }
        Ok(Self {
            kind: DomainKind::RingModN,
            n,
            field: None,
        })
    }

    /// Builds `GF(p^k)` with the given monic modulus (constant term first,
    /// length `k + 1`). Irreducibility is verified exhaustively for `k <= 3`
    /// (no roots in `Z_p`, which suffices at degrees 2 and 3).
    pub fn field(p: usize, k: usize, poly: &[u8]) -> Result<Self, Error> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        if k == 0 || k > 3 {
            return Err(Error::domain("field degree must be 1..=3"));
        }
        let n = p.pow(k as u32);
        if n > 64 {
            return Err(Error::domain(format!("field order {n} exceeds 64")));
        }
        if poly.len() != k + 1 || poly[k] != 1 {
            return Err(Error::domain("modulus must be monic of degree k"));
        }
        if poly.iter().any(|&c| c as usize >= p) {
            return Err(Error::domain("modulus coefficients must be reduced mod p"));
        }
        if k >= 2 {
            for x in 0..p {
                let mut acc = 0usize;
                let mut pw = 1usize;
                for &c in poly {
                    acc = (acc + c as usize * pw) % p;
                    pw = pw * x % p;
                }
                if acc == 0 {
                    return Err(Error::domain(format!(
                        "modulus has root {x} mod {p}; not irreducible"
                    )));
                }
            }
        }
        let mut dom = Self {
            kind: DomainKind::FieldGf,
            n,
            field: Some(FieldData {
                p,
                k,
                poly: poly.to_vec(),
                mul_table: Vec::new(),
            }),
        };
        let table = (0..n * n)
            .map(|i| dom.mul_slow((i / n) as u8, (i % n) as u8))
            .collect();
        dom.field.as_mut().unwrap().mul_table = table;
        Ok(dom)
    }

    /// Prime field `GF(p)`.
    pub fn prime_field(p: usize) -> Result<Self, Error> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        let n = p;
        let mut dom = Self {
            kind: DomainKind::FieldGf,
            n,
            field: Some(FieldData {
                p,
                k: 1,
                poly: vec![0, 1],
                mul_table: Vec::new(),
            }),
        };
        let table = (0..n * n)
            .map(|i| ((i / n) * (i % n) % n) as u8)
            .collect();
        dom.field.as_mut().unwrap().mul_table = table;
        Ok(dom)
    }

    /// The natural domain for a given `n`: `GF(n)` when `n` is a prime power
    /// (default modulus for 8 and 9), otherwise `Z_n`.
    pub fn for_n(n: usize) -> Result<Self, Error> {
        match n {
            8 => Self::field(2, 3, GF8_DEFAULT_POLY),
            9 => Self::field(3, 2, GF9_DEFAULT_POLY),
            _ if is_prime(n) => Self::prime_field(n),
            _ => Self::ring(n),
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_field(&self) -> bool {
        self.kind == DomainKind::FieldGf
    }

    pub fn add(&self, x: u8, y: u8) -> u8 {
        debug_assert!((x as usize) < self.n && (y as usize) < self.n);
        match &self.field {
            None => ((x as usize + y as usize) % self.n) as u8,
            Some(f) => {
                // digitwise addition mod p
                let (mut acc, mut pw) = (0usize, 1usize);
                let (mut a, mut b) = (x as usize, y as usize);
                for _ in 0..f.k {
                    acc += (a % f.p + b % f.p) % f.p * pw;
                    a /= f.p;
                    b /= f.p;
                    pw *= f.p;
                }
                acc as u8
            }
        }
    }

    pub fn neg(&self, x: u8) -> u8 {
        match &self.field {
            None => ((self.n - x as usize) % self.n) as u8,
            Some(f) => {
                let (mut acc, mut pw) = (0usize, 1usize);
                let mut a = x as usize;
                for _ in 0..f.k {
                    acc += (f.p - a % f.p) % f.p * pw;
                    a /= f.p;
                    pw *= f.p;
                }
                acc as u8
            }
        }
    }

    /// Field multiplication. Errors on a ring domain.
    pub fn mul(&self, x: u8, y: u8) -> Result<u8, Error> {
        match &self.field {
            Some(f) => Ok(f.mul_table[x as usize * self.n + y as usize]),
            None => Err(Error::domain("multiplication requires a field domain")),
        }
    }

    /// Polynomial multiply-and-reduce, bypassing the table (table builder and
    /// test oracle).
    fn mul_slow(&self, x: u8, y: u8) -> u8 {
        let f = self.field.as_ref().expect("field domain");
        let digits = |mut v: usize| -> Vec<usize> {
            let mut d = vec![0; f.k];
            for slot in d.iter_mut() {
                *slot = v % f.p;
                v /= f.p;
            }
            d
        };
        let a = digits(x as usize);
        let b = digits(y as usize);
        // schoolbook product, degree up to 2k-2
        let mut prod = vec![0usize; 2 * f.k - 1];
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + ai * bj) % f.p;
            }
        }
        // reduce x^t = -(poly - x^k shifted) for t from high to k
        for t in (f.k..prod.len()).rev() {
            let coef = prod[t];
            if coef == 0 {
                continue;
            }
            prod[t] = 0;
            for i in 0..f.k {
                let sub = coef * f.poly[i] as usize % f.p;
                prod[t - f.k + i] = (prod[t - f.k + i] + f.p - sub) % f.p;
            }
        }
        let mut acc = 0usize;
        for i in (0..f.k).rev() {
            acc = acc * f.p + prod[i];
        }
        acc as u8
    }
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// True iff `n = p^k` for some prime `p` and `k >= 1`.
pub fn is_prime_power(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut m = n;
    for d in 2..=n {
        if d * d > m {
            return true; // n itself prime
        }
        if m % d == 0 {
            while m % d == 0 {
                m /= d;
            }
            break;
        }
    }
    m == 1
}

/// One member of the affine family `x -> a*pi(x+b)+c`. Inactive parts are
/// identity (`a=1`, `b=0`, `c=0`).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Automorphism {
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

impl Automorphism {
    pub const IDENTITY: Automorphism = Automorphism { a: 1, b: 0, c: 0 };
}

/// Which of the three affine operations an expansion may use.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OpSet {
    pub scale_value: bool,
    pub shift_arg: bool,
    pub shift_value: bool,
}

impl OpSet {
    /// `a*pi(x)+c` (the form used by every printed table over a field).
    pub const AC: OpSet = OpSet {
        scale_value: true,
        shift_arg: false,
        shift_value: true,
    };
    /// `pi(x)+c` only.
    pub const C: OpSet = OpSet {
        scale_value: false,
        shift_arg: false,
        shift_value: true,
    };
    /// Full family `a*pi(x+b)+c`.
    pub const ABC: OpSet = OpSet {
        scale_value: true,
        shift_arg: true,
        shift_value: true,
    };

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "ac" => Ok(Self::AC),
            "c" => Ok(Self::C),
            "abc" => Ok(Self::ABC),
            _ => Err(Error::domain(format!("unknown op set {s:?} (want ac|c|abc)"))),
        }
    }

    /// Group size over a domain of order n: a ranges over nonzero field
    /// elements, b and c over all of them.
    pub fn group_order(&self, n: usize) -> usize {
        let mut g = 1;
        if self.scale_value {
            g *= n - 1;
        }
        if self.shift_arg {
            g *= n;
        }
        if self.shift_value {
            g *= n;
        }
        g
    }
}

/// Applies `y(x) = a * p(x + b) + c` with all arithmetic in `dom`.
pub fn apply_automorphism(
    dom: &SymbolDomain,
    g: Automorphism,
    p: &Permutation,
) -> Result<Permutation, Error> {
    if p.n() != dom.n() {
        return Err(Error::LengthMismatch {
            left: p.n(),
            right: dom.n(),
        });
    }
    if g.a != 1 && !dom.is_field() {
        return Err(Error::domain("scaling requires a field domain"));
    }
    if g.a == 0 {
        return Err(Error::domain("scale constant a must be nonzero"));
    }
    let n = dom.n();
    let mut out = vec![0u8; n];
    for x in 0..n as u8 {
        let arg = dom.add(x, g.b);
        let mut v = p.image(arg as usize);
        if g.a != 1 {
            v = dom.mul(g.a, v)?;
        }
        out[x as usize] = dom.add(v, g.c);
    }
    Permutation::new(out)
}

/// Enumerates the group generated by the chosen ops in a fixed order:
/// `a` ascending (1 first), then `b`, then `c`.
pub fn group_elements(dom: &SymbolDomain, ops: OpSet) -> Result<Vec<Automorphism>, Error> {
    if ops.scale_value && !dom.is_field() {
        return Err(Error::domain("scale_value requires a field domain"));
    }
    let n = dom.n() as u8;
    let a_range: Vec<u8> = if ops.scale_value { (1..n).collect() } else { vec![1] };
    let b_range: Vec<u8> = if ops.shift_arg { (0..n).collect() } else { vec![0] };
    let c_range: Vec<u8> = if ops.shift_value { (0..n).collect() } else { vec![0] };
    let mut out = Vec::with_capacity(a_range.len() * b_range.len() * c_range.len());
    for &a in &a_range {
        for &b in &b_range {
            for &c in &c_range {
                out.push(Automorphism { a, b, c });
            }
        }
    }
    Ok(out)
}

/// Where an expanded member came from: representative index and group element.
#[derive(Clone, Copy, Debug)]
pub struct OrbitOrigin {
    pub rep_index: usize,
    pub element: Automorphism,
}

/// Union of the orbits of all representatives under the chosen operations,
/// deduplicated keeping the first occurrence in rep-major, group-element-minor
/// order. Returns the expanded array and, per member, its origin.
pub fn expand_orbits_traced(
    dom: &SymbolDomain,
    reps: &PermArray,
    ops: OpSet,
) -> Result<(PermArray, Vec<OrbitOrigin>), Error> {
    if reps.n() != dom.n() {
        return Err(Error::LengthMismatch {
            left: reps.n(),
            right: dom.n(),
        });
    }
    let group = group_elements(dom, ops)?;
    let mut seen = std::collections::HashSet::new();
    let mut members = Vec::new();
    let mut origins = Vec::new();
    for (rep_index, rep) in reps.perms().iter().enumerate() {
        for &element in &group {
            let img = apply_automorphism(dom, element, rep)?;
            if seen.insert(img.clone()) {
                members.push(img);
                origins.push(OrbitOrigin { rep_index, element });
            }
        }
    }
    let mut arr = PermArray::new(members, format!("expand({})", reps.provenance))?;
    arr.restriction_m = reps.restriction_m;
    arr.claimed_d = reps.claimed_d;
    Ok((arr, origins))
}

pub fn expand_orbits(dom: &SymbolDomain, reps: &PermArray, ops: OpSet) -> Result<PermArray, Error> {
    expand_orbits_traced(dom, reps, ops).map(|(a, _)| a)
}

/// Greedy randomized search for representatives whose expanded orbits form an
/// array of minimum distance `dist`.
///
/// Draws `budget` uniform random candidates; a candidate is accepted iff its
/// full orbit is internally at distance >= `dist` and at distance >= `dist`
/// from every previously accepted orbit. Returns the accepted representative
/// list (expand and certify to reproduce the bound). Deterministic for a
/// given seed. An empty result is possible and valid.
pub fn rep_search(
    dom: &SymbolDomain,
    dist: u32,
    ops: OpSet,
    budget: usize,
    rng_seed: u64,
) -> Result<Vec<Permutation>, Error> {
    if dist < 1 {
        return Err(Error::domain("rep_search requires dist >= 1"));
    }
    let group = group_elements(dom, ops)?;
    let n = dom.n();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut reps: Vec<Permutation> = Vec::new();
    let mut expanded: Vec<Permutation> = Vec::new();
    'candidates: for _ in 0..budget {
        let mut sym: Vec<u8> = (0..n as u8).collect();
        sym.shuffle(&mut rng);
        let cand = Permutation::new(sym)?;
        let mut orbit = Vec::with_capacity(group.len());
        for &g in &group {
            orbit.push(apply_automorphism(dom, g, &cand)?);
        }
        for i in 0..orbit.len() {
            for j in i + 1..orbit.len() {
                if kendall_distance_unchecked(orbit[i].symbols(), orbit[j].symbols()) < dist {
                    continue 'candidates;
                }
            }
            for kept in &expanded {
                if kendall_distance_unchecked(orbit[i].symbols(), kept.symbols()) < dist {
                    continue 'candidates;
                }
            }
        }
        reps.push(cand);
        expanded.extend(orbit);
    }
    Ok(reps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::min_pairwise_distance;

    fn p(s: &[u8]) -> Permutation {
        Permutation::new(s.to_vec()).unwrap()
    }

    #[test]
    fn ring_add() {
        let z6 = SymbolDomain::ring(6).unwrap();
        assert_eq!(z6.add(5, 3), 2);
        assert!(z6.mul(2, 3).is_err());
    }

    #[test]
    fn gf8_mul_examples() {
        let gf8 = SymbolDomain::field(2, 3, GF8_DEFAULT_POLY).unwrap();
        // x * x = x^2, below the reduction degree
        assert_eq!(gf8.mul(2, 2).unwrap(), 4);
        // x^2 * x = x^3 = x^2 + 1 under x^3 + x^2 + 1
        assert_eq!(gf8.mul(4, 2).unwrap(), 5);
        // under the alternate modulus x^3 + x + 1, x^3 = x + 1 instead
        let alt = SymbolDomain::field(2, 3, &[1, 1, 0, 1]).unwrap();
        assert_eq!(alt.mul(4, 2).unwrap(), 3);
    }

    #[test]
    fn gf9_mul_examples() {
        // under x^2 + 1: x * x = x^2 = -1 = 2
        let gf9 = SymbolDomain::field(3, 2, &[1, 0, 1]).unwrap();
        assert_eq!(gf9.mul(3, 3).unwrap(), 2);
        // default modulus x^2 + 2x + 2: x^2 = -2x - 2 = x + 1
        let dflt = SymbolDomain::field(3, 2, GF9_DEFAULT_POLY).unwrap();
        assert_eq!(dflt.mul(3, 3).unwrap(), 4);
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^2 + 2 = (x+1)(x+2) over Z_3
        assert!(SymbolDomain::field(3, 2, &[2, 0, 1]).is_err());
        // x^3 + 1 has root 1 over Z_2
        assert!(SymbolDomain::field(2, 3, &[1, 0, 0, 1]).is_err());
    }

    #[test]
    fn field_axioms_exhaustive_against_slow_oracle() {
        for dom in [
            SymbolDomain::field(2, 3, GF8_DEFAULT_POLY).unwrap(),
            SymbolDomain::field(3, 2, GF9_DEFAULT_POLY).unwrap(),
        ] {
            let n = dom.n() as u8;
            for x in 0..n {
                for y in 0..n {
                    let xy = dom.mul(x, y).unwrap();
                    assert_eq!(xy, dom.mul_slow(x, y), "table vs oracle at {x},{y}");
                    assert_eq!(xy, dom.mul(y, x).unwrap());
                    for z in 0..n {
                        // associativity
                        assert_eq!(
                            dom.mul(x, dom.mul(y, z).unwrap()).unwrap(),
                            dom.mul(xy, z).unwrap()
                        );
                        // distributivity
                        assert_eq!(
                            dom.mul(x, dom.add(y, z)).unwrap(),
                            dom.add(xy, dom.mul(x, z).unwrap())
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn identity_automorphism_fixes_everything() {
        let dom = SymbolDomain::for_n(6).unwrap();
        let q = p(&[0, 1, 2, 3, 5, 4]);
        assert_eq!(apply_automorphism(&dom, Automorphism::IDENTITY, &q).unwrap(), q);
    }

    #[test]
    fn value_shift_example_n6() {
        let dom = SymbolDomain::ring(6).unwrap();
        let q = p(&[0, 1, 2, 3, 5, 4]);
        let shifted = apply_automorphism(&dom, Automorphism { a: 1, b: 0, c: 1 }, &q).unwrap();
        assert_eq!(shifted, p(&[1, 2, 3, 4, 0, 5]));
        // orbit under c alone has 6 distinct images
        let reps = PermArray::new(vec![q], "t").unwrap();
        let orbit = expand_orbits(&dom, &reps, OpSet::C).unwrap();
        assert_eq!(orbit.len(), 6);
    }

    #[test]
    fn action_composes() {
        let dom = SymbolDomain::for_n(8).unwrap();
        let q = p(&[0, 5, 3, 1, 4, 6, 2, 7]);
        let g = Automorphism { a: 3, b: 2, c: 5 };
        let h = Automorphism { a: 2, b: 7, c: 1 };
        // applying h then g equals one affine map:
        // g(h(pi))(x) = a_g * (a_h * pi(x + b_g + b_h) + c_h) + c_g
        let gh = Automorphism {
            a: dom.mul(g.a, h.a).unwrap(),
            b: dom.add(g.b, h.b),
            c: dom.add(dom.mul(g.a, h.c).unwrap(), g.c),
        };
        let step = apply_automorphism(&dom, g, &apply_automorphism(&dom, h, &q).unwrap()).unwrap();
        assert_eq!(step, apply_automorphism(&dom, gh, &q).unwrap());
    }

    #[test]
    fn expand_p6_d3_gives_102_at_distance_3() {
        let reps = crate::io::parse_array(include_str!("../data/reps/p6_d3.txt")).unwrap();
        let dom = SymbolDomain::ring(6).unwrap();
        let arr = expand_orbits(&dom, &reps, OpSet::C).unwrap();
        assert_eq!(arr.len(), 102);
        assert_eq!(min_pairwise_distance(&arr).unwrap().min_distance, 3);
    }

    #[test]
    fn expand_p8_d7_gives_168_at_distance_7() {
        let reps = crate::io::parse_array(include_str!("../data/reps/p8_d7.txt")).unwrap();
        let dom = SymbolDomain::for_n(8).unwrap();
        let arr = expand_orbits(&dom, &reps, OpSet::AC).unwrap();
        assert_eq!(arr.len(), 168);
        assert_eq!(min_pairwise_distance(&arr).unwrap().min_distance, 7);
    }

    #[test]
    fn orbit_sizes_divide_group_order() {
        let dom = SymbolDomain::for_n(9).unwrap();
        let reps = PermArray::new(vec![Permutation::identity(9)], "t").unwrap();
        let arr = expand_orbits(&dom, &reps, OpSet::AC).unwrap();
        assert_eq!(OpSet::AC.group_order(9), 72);
        assert_eq!(72 % arr.len(), 0);
    }

    #[test]
    fn rep_search_self_certifies() {
        let dom = SymbolDomain::ring(6).unwrap();
        let reps = rep_search(&dom, 4, OpSet::C, 300, 11).unwrap();
        if !reps.is_empty() {
            let arr = expand_orbits(
                &dom,
                &PermArray::new(reps, "search").unwrap(),
                OpSet::C,
            )
            .unwrap();
            assert!(min_pairwise_distance(&arr).unwrap().min_distance >= 4);
        }
    }

    #[test]
    fn rep_search_max_distance_is_tiny() {
        let dom = SymbolDomain::ring(5).unwrap();
        let reps = rep_search(&dom, 10, OpSet::C, 500, 3).unwrap();
        let total: usize = reps.len() * 5;
        assert!(total <= 2 * 5, "expansion can be at most a reversal orbit pair");
    }
}
