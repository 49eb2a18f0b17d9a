//! Randomized-greedy and exact clique search over full, restricted
//! (`S_{n,m}`), and fixed-position permutation spaces.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::perm::{factorial, kendall_distance_unchecked, lehmer_rank, lehmer_unrank, Permutation};
use crate::verifier::{in_snm, PermArray};

/// Spaces beyond this many members are refused by the greedy sweep.
pub const ENUMERATION_GUARD: u128 = 1_000_000_000;
/// Default clique-solver guard (7! vertices).
pub const CLIQUE_GUARD: u128 = 5040;
/// Eviction-and-refill rounds after a diluted sweep.
const DILUTED_IMPROVE_ROUNDS: usize = 20;

/// An enumerable space of permutations, with a fixed unranking order.
///
/// The full space enumerates in lexicographic order of the symbol sequence.
/// Restricted spaces unrank (position set, arrangement) pairs, position-set
/// major in lexicographic order of the chosen positions, arrangement minor.
#[derive(Clone, Debug)]
pub enum SearchSpace {
    Full {
        n: usize,
    },
    /// `S_{n,m}`: the `n - m` smallest symbols appear in sorted order.
    RestrictedSorted {
        n: usize,
        m: usize,
    },
    /// The `m` largest symbols pinned to fixed positions (0-based), the rest
    /// free. `assignment[j] = (position, symbol)`, injective in both parts.
    FixedPositions {
        n: usize,
        assignment: Vec<(usize, u8)>,
    },
}

impl SearchSpace {
    pub fn full(n: usize) -> Self {
        SearchSpace::Full { n }
    }

    pub fn restricted(n: usize, m: usize) -> Result<Self, Error> {
        if m >= n {
            return Err(Error::domain("restricted space requires m < n"));
        }
        Ok(SearchSpace::RestrictedSorted { n, m })
    }

    /// 1-based convenience builder: `positions[j]` receives symbol
    /// `n - m + 1 + j` (1-based), i.e. the largest symbols in ascending order.
    pub fn fixed_from_positions_1based(n: usize, positions: &[usize]) -> Result<Self, Error> {
        let m = positions.len();
        if m >= n {
            return Err(Error::domain("fixed space requires m < n"));
        }
        let mut assignment = Vec::with_capacity(m);
        for (j, &p) in positions.iter().enumerate() {
            if p < 1 || p > n {
                return Err(Error::domain(format!("position {p} out of range 1..={n}")));
            }
            assignment.push((p - 1, (n - m + j) as u8));
        }
        let mut seen = vec![false; n];
        for &(p, _) in &assignment {
            if seen[p] {
                return Err(Error::domain("fixed positions must be distinct"));
            }
            seen[p] = true;
        }
        Ok(SearchSpace::FixedPositions { n, assignment })
    }

    pub fn n(&self) -> usize {
        match self {
            SearchSpace::Full { n }
            | SearchSpace::RestrictedSorted { n, .. }
            | SearchSpace::FixedPositions { n, .. } => *n,
        }
    }

    pub fn restriction_m(&self) -> Option<usize> {
        match self {
            SearchSpace::RestrictedSorted { m, .. } => Some(*m),
            _ => None,
        }
    }

    pub fn size(&self) -> u128 {
        match self {
            SearchSpace::Full { n } => factorial(*n),
            SearchSpace::RestrictedSorted { n, m } => factorial(*n) / factorial(*n - *m),
            SearchSpace::FixedPositions { n, assignment } => factorial(*n - assignment.len()),
        }
    }

    /// The `rank`-th member in the space's enumeration order.
    pub fn unrank(&self, rank: u128) -> Permutation {
        debug_assert!(rank < self.size());
        match self {
            SearchSpace::Full { n } => {
                Permutation::new(lehmer_unrank(*n, rank)).expect("unrank produces a bijection")
            }
            SearchSpace::RestrictedSorted { n, m } => {
                let arrangements = factorial(*m);
                let combo_rank = (rank / arrangements) as u64;
                let arr_rank = rank % arrangements;
                let positions = combination_unrank(*n, *m, combo_rank);
                let order = lehmer_unrank(*m, arr_rank);
                let mut v = vec![u8::MAX; *n];
                for (j, &p) in positions.iter().enumerate() {
                    v[p] = (*n - *m) as u8 + order[j];
                }
                fill_sorted(&mut v);
                Permutation::new(v).expect("unrank produces a bijection")
            }
            SearchSpace::FixedPositions { n, assignment } => {
                let free: Vec<usize> = (0..*n)
                    .filter(|p| !assignment.iter().any(|&(q, _)| q == *p))
                    .collect();
                let order = lehmer_unrank(*n - assignment.len(), rank);
                let mut v = vec![u8::MAX; *n];
                for &(p, s) in assignment {
                    v[p] = s;
                }
                for (j, &p) in free.iter().enumerate() {
                    v[p] = order[j];
                }
                Permutation::new(v).expect("unrank produces a bijection")
            }
        }
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        if p.n() != self.n() {
            return false;
        }
        match self {
            SearchSpace::Full { .. } => true,
            SearchSpace::RestrictedSorted { m, .. } => in_snm(p, *m),
            SearchSpace::FixedPositions { assignment, .. } => {
                assignment.iter().all(|&(pos, s)| p.image(pos) == s)
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Permutation> + '_ {
        (0..self.size()).map(move |r| self.unrank(r))
    }
}

/// Lexicographically `rank`-th `m`-subset of `{0..n-1}`, ascending.
fn combination_unrank(n: usize, m: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m);
    let mut next = 0usize;
    for remaining in (1..=m).rev() {
        loop {
            let c = binomial(n - next - 1, remaining - 1);
            if rank < c {
                out.push(next);
                next += 1;
                break;
            }
            rank -= c;
            next += 1;
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Fills the `u8::MAX` holes of `v` with the unused symbols in ascending order.
fn fill_sorted(v: &mut [u8]) {
    let mut used = vec![false; v.len()];
    for &s in v.iter() {
        if s != u8::MAX {
            used[s as usize] = true;
        }
    }
    let mut pool = (0..v.len() as u8).filter(|&s| !used[s as usize]);
    for slot in v.iter_mut() {
        if *slot == u8::MAX {
            *slot = pool.next().expect("enough unused symbols");
        }
    }
}

fn far_from_all(kept: &[Permutation], cand: &Permutation, d: u32) -> bool {
    kept.iter()
        .all(|k| kendall_distance_unchecked(k.symbols(), cand.symbols()) >= d)
}

/// Randomization used for the first phase of one greedy run. The second
/// phase is always the same deterministic sweep in enumeration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestartStrategy {
    /// Draw this many uniform random members before the sweep.
    Seeded(usize),
    /// Walk the space in enumeration order, accepting each fitting member
    /// with this probability in per mille, before the (full) sweep.
    Diluted(u32),
}

impl std::fmt::Display for RestartStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RestartStrategy::Seeded(k) => write!(f, "{k}"),
            RestartStrategy::Diluted(q) => write!(f, "q{q}"),
        }
    }
}

impl std::str::FromStr for RestartStrategy {
    type Err = Error;

    /// A bare integer is a seed count; `q<permille>` is a diluted sweep.
    fn from_str(s: &str) -> Result<Self, Error> {
        if let Some(q) = s.strip_prefix('q') {
            let q: u32 = q
                .parse()
                .map_err(|_| Error::domain(format!("bad dilution '{s}' (want q<permille>)")))?;
            if q > 1000 {
                return Err(Error::domain("dilution per mille must be <= 1000"));
            }
            Ok(RestartStrategy::Diluted(q))
        } else {
            let k: usize = s
                .parse()
                .map_err(|_| Error::domain(format!("bad seed count '{s}'")))?;
            Ok(RestartStrategy::Seeded(k))
        }
    }
}

fn greedy_run(
    space: &SearchSpace,
    d: u32,
    strategy: RestartStrategy,
    rng_seed: u64,
) -> Result<PermArray, Error> {
    if d < 1 {
        return Err(Error::domain("greedy search requires d >= 1"));
    }
    let size = space.size();
    if size > ENUMERATION_GUARD {
        return Err(Error::guard(format!(
            "space has {size} members (> {ENUMERATION_GUARD}); use a restricted space"
        )));
    }
    let mut kept: Vec<Permutation> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let provenance = match strategy {
        RestartStrategy::Seeded(seed_count) => {
            let mut failed = 0usize;
            while kept.len() < seed_count && failed < 50 * seed_count {
                let idx = rng.gen_range(0..size);
                let cand = space.unrank(idx);
                if far_from_all(&kept, &cand, d) {
                    kept.push(cand);
                } else {
                    failed += 1;
                }
            }
            format!("random_greedy(d={d} seeds={seed_count} rng=chacha8:{rng_seed})")
        }
        RestartStrategy::Diluted(permille) => {
            for cand in space.iter() {
                if far_from_all(&kept, &cand, d) && rng.gen_range(0..1000) < permille {
                    kept.push(cand);
                }
            }
            format!("diluted_greedy(d={d} keep={permille}/1000 rng=chacha8:{rng_seed})")
        }
    };
    for cand in space.iter() {
        if far_from_all(&kept, &cand, d) {
            kept.push(cand);
        }
    }
    if let RestartStrategy::Diluted(_) = strategy {
        // bounded local improvement: evict one member, refill by sweep,
        // keep the result only when it is strictly larger
        for _ in 0..DILUTED_IMPROVE_ROUNDS {
            let evict = rng.gen_range(0..kept.len());
            let mut trial = kept.clone();
            trial.remove(evict);
            for cand in space.iter() {
                if far_from_all(&trial, &cand, d) {
                    trial.push(cand);
                }
            }
            if trial.len() > kept.len() {
                kept = trial;
            }
        }
    }
    let mut arr = PermArray::new(kept, provenance)?;
    arr.claimed_d = Some(d);
    arr.restriction_m = space.restriction_m();
    // certified by construction, but run the verifier anyway
    let report = crate::verifier::min_pairwise_distance_guarded(&arr, true)?;
    debug_assert!(report.passes(d));
    if !report.passes(d) {
        return Err(Error::domain("greedy output failed certification"));
    }
    Ok(arr)
}

/// One randomized-greedy run.
///
/// Phase one draws uniform random members, keeping those at distance >= `d`
/// from everything kept so far, until `seed_count` are kept or the draw budget
/// (50x `seed_count` failed draws) expires. Phase two sweeps every member of
/// the space in enumeration order, adding each that still fits. Reproducible:
/// identical arguments give an identical array.
pub fn random_greedy(
    space: &SearchSpace,
    d: u32,
    seed_count: usize,
    rng_seed: u64,
) -> Result<PermArray, Error> {
    greedy_run(space, d, RestartStrategy::Seeded(seed_count), rng_seed)
}

/// One diluted-sweep run: the random phase walks the space in enumeration
/// order and accepts each fitting member with probability `permille`/1000,
/// then the usual deterministic sweep fills in everything that still fits.
/// Dilution escapes the fixed points of the pure sweep while keeping its
/// lexicographic structure; a uniformly shuffled sweep does markedly worse.
pub fn diluted_greedy(
    space: &SearchSpace,
    d: u32,
    permille: u32,
    rng_seed: u64,
) -> Result<PermArray, Error> {
    greedy_run(space, d, RestartStrategy::Diluted(permille), rng_seed)
}

/// Default strategy schedule for [`best_of_restarts`], cycled per restart.
/// Alternates seeded runs with diluted sweeps at several retention rates.
pub const DEFAULT_SEED_SCHEDULE: &[RestartStrategy] = &[
    RestartStrategy::Seeded(0),
    RestartStrategy::Diluted(900),
    RestartStrategy::Seeded(2),
    RestartStrategy::Diluted(925),
    RestartStrategy::Seeded(4),
    RestartStrategy::Diluted(875),
    RestartStrategy::Seeded(8),
    RestartStrategy::Diluted(950),
    RestartStrategy::Seeded(16),
    RestartStrategy::Diluted(850),
];

/// Runs one greedy pass per restart across independent rng streams, cycling
/// `schedule` for the per-restart strategy, and returns the largest certified
/// array. Deterministic given `rng_seed`; restarts run in parallel.
pub fn best_of_restarts(
    space: &SearchSpace,
    d: u32,
    restarts: usize,
    rng_seed: u64,
    schedule: &[RestartStrategy],
) -> Result<PermArray, Error> {
    if restarts == 0 {
        return Err(Error::domain("need at least one restart"));
    }
    let schedule = if schedule.is_empty() {
        DEFAULT_SEED_SCHEDULE
    } else {
        schedule
    };
    let runs: Result<Vec<PermArray>, Error> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let strategy = schedule[i % schedule.len()];
            // distinct deterministic stream per restart
            let stream = rng_seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
            greedy_run(space, d, strategy, stream)
        })
        .collect();
    let runs = runs?;
    Ok(runs
        .into_iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
        .map(|(_, a)| a)
        .expect("restarts >= 1"))
}

/// Exact maximum clique over the compatibility graph of a space: one vertex
/// per member, an edge when the distance is at least `d`. Returns a maximum
/// clique as a certified array; its size is the exact optimum over the space.
pub fn clique_exact(space: &SearchSpace, d: u32) -> Result<PermArray, Error> {
    clique_exact_guarded(space, d, CLIQUE_GUARD)
}

pub fn clique_exact_guarded(space: &SearchSpace, d: u32, guard: u128) -> Result<PermArray, Error> {
    let size = space.size();
    if size > guard {
        return Err(Error::guard(format!(
            "clique search refused: space has {size} members (> {guard})"
        )));
    }
    let members: Vec<Permutation> = space.iter().collect();
    let n = members.len();
    let words = n.div_ceil(64);
    let mut adj = vec![vec![0u64; words]; n];
    for i in 0..n {
        for j in i + 1..n {
            if kendall_distance_unchecked(members[i].symbols(), members[j].symbols()) >= d {
                adj[i][j / 64] |= 1 << (j % 64);
                adj[j][i / 64] |= 1 << (i % 64);
            }
        }
    }
    let clique = max_clique(&adj, n);
    let perms: Vec<Permutation> = clique.iter().map(|&v| members[v].clone()).collect();
    let mut arr = PermArray::new(perms, format!("clique_exact(d={d})"))?;
    arr.claimed_d = Some(d);
    arr.restriction_m = space.restriction_m();
    Ok(arr)
}

struct CliqueSolver<'a> {
    adj: &'a [Vec<u64>],
    words: usize,
    best: Vec<usize>,
}

/// Branch-and-bound maximum clique with a greedy-coloring bound, candidates
/// pre-ordered by descending degeneracy.
fn max_clique(adj: &[Vec<u64>], n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let order = degeneracy_order(adj, n);
    let words = n.div_ceil(64);
    let mut solver = CliqueSolver {
        adj,
        words,
        best: Vec::new(),
    };
    let mut cand: Vec<usize> = order;
    cand.reverse(); // highest-degeneracy vertices first
    let mut current = Vec::new();
    solver.expand(&mut current, cand);
    solver.best
}

impl CliqueSolver<'_> {
    fn expand(&mut self, current: &mut Vec<usize>, cand: Vec<usize>) {
        if cand.is_empty() {
            if current.len() > self.best.len() {
                self.best = current.clone();
            }
            return;
        }
        // greedy coloring of the candidate set: color classes are
        // independent sets, so clique size within cand <= number of colors
        let mut colors: Vec<usize> = vec![0; cand.len()];
        let mut class_masks: Vec<Vec<u64>> = Vec::new();
        for (ci, &v) in cand.iter().enumerate() {
            let mut color = 0;
            while color < class_masks.len() {
                let mask = &class_masks[color];
                let conflicts = (0..self.words).any(|w| mask[w] & self.adj[v][w] != 0);
                if !conflicts {
                    break;
                }
                color += 1;
            }
            if color == class_masks.len() {
                class_masks.push(vec![0u64; self.words]);
            }
            class_masks[color][v / 64] |= 1 << (v % 64);
            colors[ci] = color;
        }
        // visit in descending color so the bound tightens fastest
        let mut idx: Vec<usize> = (0..cand.len()).collect();
        idx.sort_by_key(|&i| std::cmp::Reverse(colors[i]));
        let mut remaining = cand.clone();
        let mut remaining_colors = colors.clone();
        for &i in &idx {
            let v = cand[i];
            let pos = remaining.iter().position(|&x| x == v).unwrap();
            let bound = remaining_colors[pos] + 1;
            if current.len() + bound <= self.best.len() {
                return;
            }
            remaining.remove(pos);
            remaining_colors.remove(pos);
            let next: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&u| self.adj[v][u / 64] >> (u % 64) & 1 == 1)
                .collect();
            current.push(v);
            self.expand(current, next);
            current.pop();
        }
    }
}

/// Vertices in a minimum-degree elimination order (smallest core first).
fn degeneracy_order(adj: &[Vec<u64>], n: usize) -> Vec<usize> {
    let mut degree: Vec<usize> = (0..n)
        .map(|v| adj[v].iter().map(|w| w.count_ones() as usize).sum())
        .collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| degree[v])
            .unwrap();
        removed[v] = true;
        order.push(v);
        for u in 0..n {
            if !removed[u] && adj[v][u / 64] >> (u % 64) & 1 == 1 {
                degree[u] -= 1;
            }
        }
    }
    order
}

/// Randomized-greedy search for an `(n, m, d)`-array over `S_{n,m}`,
/// best of `budget` restarts with the default schedule.
pub fn pnmd_search(
    n: usize,
    m: usize,
    d: u32,
    budget: usize,
    rng_seed: u64,
) -> Result<PermArray, Error> {
    let space = SearchSpace::restricted(n, m)?;
    best_of_restarts(&space, d, budget.max(1), rng_seed, DEFAULT_SEED_SCHEDULE)
}

/// Lexicographic rank of a member within the full space (test support).
pub fn full_space_rank(p: &Permutation) -> u128 {
    lehmer_rank(p.symbols()) as u128
}
