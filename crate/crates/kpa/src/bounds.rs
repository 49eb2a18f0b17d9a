//! Lower-bound database with a rule-based inference composer.
//!
//! Records live in a map keyed by the cell they bound: full cells P(n,d),
//! restricted cells P(n,m,d), and fixed-placement cells P(n,d;i1,...,im).
//! Every derived record carries a trace that can be replayed to reproduce
//! its value exactly. Claimed values from external computations are kept
//! distinct from derived ones and never silently overwritten by weaker
//! derivations.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::perm::Permutation;

const SEED_JSONL: &str = include_str!("../data/seed_bounds.jsonl");
const LEDGER_JSONL: &str = include_str!("../data/derivation_ledger.jsonl");

/// Cell identifier. `m` and `positions` are mutually exclusive:
/// `m` alone marks a restricted cell, `positions` (1-based, in printed
/// order for symbols n-m+1..n) marks a fixed-placement cell.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundKey {
    pub n: u32,
    pub d: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<u32>>,
}

impl BoundKey {
    pub fn full(n: u32, d: u32) -> Self {
        BoundKey { n, d, m: None, positions: None }
    }

    pub fn restricted(n: u32, m: u32, d: u32) -> Self {
        BoundKey { n, d, m: Some(m), positions: None }
    }

    pub fn placed(n: u32, d: u32, positions: Vec<u32>) -> Self {
        BoundKey { n, d, m: None, positions: Some(positions) }
    }

    pub fn is_full(&self) -> bool {
        self.m.is_none() && self.positions.is_none()
    }
}

impl fmt::Display for BoundKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.m, &self.positions) {
            (Some(m), _) => write!(f, "P({},{},{})", self.n, m, self.d),
            (None, Some(pos)) => {
                let list: Vec<String> = pos.iter().map(|p| p.to_string()).collect();
                write!(f, "P({},{};{})", self.n, self.d, list.join(","))
            }
            (None, None) => write!(f, "P({},{})", self.n, self.d),
        }
    }
}

/// How a record's value was obtained. Derived variants capture the
/// antecedent values at derivation time so the trace replays exactly
/// even if the antecedent cells improve later.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    /// External computation cited without a local certificate.
    Claimed,
    /// Certified locally from an explicit array.
    Certified,
    FormulaBm { t: u32 },
    FormulaWzyg { t: u32 },
    /// Product of ceilings, equation (1).
    Eq1Product,
    /// d odd -> d+1, value ceil(v/2).
    Halve { from: BoundKey, input: BigUint },
    /// n-1 -> n, value ceil(n/d) * v.
    Insert { from: BoundKey, input: BigUint },
    /// n+1 -> n, value floor(v / (n+1)).
    Divide { from: BoundKey, input: BigUint },
    /// Product over an (n,m,d)-array cell and a full (n-m,d) cell.
    Product { terms: Vec<(BoundKey, BigUint)> },
    /// Weighted sum over fixed-placement cells.
    Sum { terms: Vec<(BoundKey, BigUint, u32)> },
}

impl Derivation {
    pub fn rule_name(&self) -> &'static str {
        match self {
            Derivation::Claimed => "claimed",
            Derivation::Certified => "certified",
            Derivation::FormulaBm { .. } => "formula-bm",
            Derivation::FormulaWzyg { .. } => "formula-wzyg",
            Derivation::Eq1Product => "eq1",
            Derivation::Halve { .. } => "halve",
            Derivation::Insert { .. } => "insert",
            Derivation::Divide { .. } => "divide",
            Derivation::Product { .. } => "product",
            Derivation::Sum { .. } => "sum",
        }
    }

    /// Recomputes the value from the captured inputs. `None` for leaf
    /// records, which have nothing to replay.
    pub fn replay(&self, key: &BoundKey) -> Option<BigUint> {
        match self {
            Derivation::Claimed | Derivation::Certified => None,
            Derivation::FormulaBm { t } => formula_bound_bm(key.n, *t).ok().map(|r| r.value),
            Derivation::FormulaWzyg { t } => formula_bound_wzyg(key.n, *t).ok().map(|r| r.value),
            Derivation::Eq1Product => {
                let m = key.m?;
                Some(eq1_value(key.n, m, key.d))
            }
            Derivation::Halve { input, .. } => Some((input + 1u32) / 2u32),
            Derivation::Insert { input, .. } => Some(input * ceil_div(key.n, key.d)),
            Derivation::Divide { from, input } => Some(input / from.n),
            Derivation::Product { terms } => {
                let mut v = BigUint::one();
                for (_, t) in terms {
                    v *= t;
                }
                Some(v)
            }
            Derivation::Sum { terms } => {
                let mut v = BigUint::zero();
                for (_, t, count) in terms {
                    v += t * *count;
                }
                Some(v)
            }
        }
    }

    pub fn antecedents(&self) -> Vec<&BoundKey> {
        match self {
            Derivation::Halve { from, .. }
            | Derivation::Insert { from, .. }
            | Derivation::Divide { from, .. } => vec![from],
            Derivation::Product { terms } => terms.iter().map(|(k, _)| k).collect(),
            Derivation::Sum { terms } => terms.iter().map(|(k, _, _)| k).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundRecord {
    pub key: BoundKey,
    pub value: BigUint,
    pub derivation: Derivation,
    pub note: String,
    pub flags: Vec<String>,
}

impl BoundRecord {
    pub fn claimed(key: BoundKey, value: BigUint, note: impl Into<String>) -> Self {
        BoundRecord { key, value, derivation: Derivation::Claimed, note: note.into(), flags: Vec::new() }
    }

    /// The trace is consistent when replaying the derivation reproduces
    /// the stored value. Leaf records are vacuously consistent.
    pub fn trace_consistent(&self) -> bool {
        match self.derivation.replay(&self.key) {
            Some(v) => v == self.value,
            None => true,
        }
    }
}

fn ceil_div(a: u32, b: u32) -> u32 {
    (a + b - 1) / b
}

fn eq1_value(n: u32, m: u32, d: u32) -> BigUint {
    let mut v = BigUint::one();
    for i in 0..m {
        v *= ceil_div(n - i, d);
    }
    v
}

fn factorial_big(n: u32) -> BigUint {
    let mut v = BigUint::one();
    for i in 2..=n {
        v *= i;
    }
    v
}

fn is_prime_power(x: u32) -> bool {
    if x < 2 {
        return false;
    }
    let mut x = x;
    let mut p = 0;
    for q in 2..=x {
        if q * q > x {
            break;
        }
        if x % q == 0 {
            p = q;
            break;
        }
    }
    if p == 0 {
        return true;
    }
    while x % p == 0 {
        x /= p;
    }
    x == 1
}

fn formula_m_param(n: u32, t: u32) -> Result<BigUint, Error> {
    if n < 4 || t < 1 {
        return Err(Error::domain(format!("formula bound needs n >= 4 and t >= 1, got n={n} t={t}")));
    }
    if !is_prime_power(n - 2) {
        return Err(Error::domain(format!("formula bound needs n-2 a prime power, got n={n}")));
    }
    let num = BigUint::from(n - 2).pow(t + 1) - 1u32;
    Ok(if n == 4 { num } else { num / (n - 3) })
}

/// Barg-Mazumdar bound: P(n,2t+1) >= n! / (t(t+1)m).
pub fn formula_bound_bm(n: u32, t: u32) -> Result<BoundRecord, Error> {
    let m = formula_m_param(n, t)?;
    let value = factorial_big(n) / (m * (t * (t + 1)));
    Ok(BoundRecord {
        key: BoundKey::full(n, 2 * t + 1),
        value,
        derivation: Derivation::FormulaBm { t },
        note: String::new(),
        flags: Vec::new(),
    })
}

/// Wang-Zhang-Yang-Ge bound: P(n,2t+1) >= n! / ((2t+1)m).
pub fn formula_bound_wzyg(n: u32, t: u32) -> Result<BoundRecord, Error> {
    let m = formula_m_param(n, t)?;
    let value = factorial_big(n) / (m * (2 * t + 1));
    Ok(BoundRecord {
        key: BoundKey::full(n, 2 * t + 1),
        value,
        derivation: Derivation::FormulaWzyg { t },
        note: String::new(),
        flags: Vec::new(),
    })
}

/// Cell map keeping the best record per key.
#[derive(Clone, Debug, Default)]
pub struct BoundDb {
    records: BTreeMap<BoundKey, BoundRecord>,
}

impl BoundDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &BoundKey) -> Option<&BoundRecord> {
        self.records.get(key)
    }

    pub fn value(&self, key: &BoundKey) -> Option<&BigUint> {
        self.records.get(key).map(|r| &r.value)
    }

    pub fn iter(&self) -> impl Iterator<Item = &BoundRecord> {
        self.records.values()
    }

    /// Keeps the larger value. On a tie a derived record with a trace
    /// displaces a bare claim, never the other way around.
    pub fn insert(&mut self, rec: BoundRecord) -> bool {
        if rec.value.is_zero() {
            return false;
        }
        match self.records.get(&rec.key) {
            Some(old) if old.value > rec.value => false,
            Some(old) if old.value == rec.value => {
                let upgrade = matches!(old.derivation, Derivation::Claimed)
                    && !matches!(rec.derivation, Derivation::Claimed);
                if upgrade {
                    let mut rec = rec;
                    // carry flags raised against the cell, e.g. claim mismatches
                    for f in &old.flags {
                        if !rec.flags.contains(f) {
                            rec.flags.push(f.clone());
                        }
                    }
                    self.records.insert(rec.key.clone(), rec);
                }
                false
            }
            _ => {
                self.records.insert(rec.key.clone(), rec);
                true
            }
        }
    }

    pub fn flagged(&self) -> impl Iterator<Item = &BoundRecord> {
        self.records.values().filter(|r| !r.flags.is_empty())
    }
}

// ---- db file format (one JSON object per line) ----

fn default_rule() -> String {
    "claimed".to_string()
}

fn one() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
struct AnteLine {
    n: u32,
    d: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<u32>>,
    value: String,
    #[serde(default = "one")]
    count: u32,
}

impl AnteLine {
    fn key(&self) -> BoundKey {
        BoundKey { n: self.n, d: self.d, m: self.m, positions: self.positions.clone() }
    }
}

#[derive(Serialize, Deserialize)]
struct DbLine {
    n: u32,
    d: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<u32>>,
    value: String,
    #[serde(default = "default_rule")]
    rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    antecedents: Vec<AnteLine>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    note: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    flags: Vec<String>,
}

fn parse_big(s: &str, line: usize) -> Result<BigUint, Error> {
    s.parse::<BigUint>().map_err(|_| Error::Parse { line, msg: format!("bad integer {s:?}") })
}

fn ante_pairs(antes: &[AnteLine], line: usize) -> Result<Vec<(BoundKey, BigUint)>, Error> {
    antes.iter().map(|a| Ok((a.key(), parse_big(&a.value, line)?))).collect()
}

fn line_to_record(l: DbLine, lineno: usize) -> Result<BoundRecord, Error> {
    let key = BoundKey { n: l.n, d: l.d, m: l.m, positions: l.positions };
    let value = parse_big(&l.value, lineno)?;
    let bad = |msg: &str| Error::Parse { line: lineno, msg: msg.to_string() };
    let one_ante = |antes: &[AnteLine]| -> Result<(BoundKey, BigUint), Error> {
        let a = antes.first().ok_or_else(|| bad("rule needs one antecedent"))?;
        Ok((a.key(), parse_big(&a.value, lineno)?))
    };
    let derivation = match l.rule.as_str() {
        "claimed" => Derivation::Claimed,
        "certified" => Derivation::Certified,
        "eq1" => Derivation::Eq1Product,
        "formula-bm" => Derivation::FormulaBm { t: l.t.ok_or_else(|| bad("formula rule needs t"))? },
        "formula-wzyg" => Derivation::FormulaWzyg { t: l.t.ok_or_else(|| bad("formula rule needs t"))? },
        "halve" => {
            let (from, input) = one_ante(&l.antecedents)?;
            Derivation::Halve { from, input }
        }
        "insert" => {
            let (from, input) = one_ante(&l.antecedents)?;
            Derivation::Insert { from, input }
        }
        "divide" => {
            let (from, input) = one_ante(&l.antecedents)?;
            Derivation::Divide { from, input }
        }
        "product" => Derivation::Product { terms: ante_pairs(&l.antecedents, lineno)? },
        "sum" => Derivation::Sum {
            terms: l
                .antecedents
                .iter()
                .map(|a| Ok((a.key(), parse_big(&a.value, lineno)?, a.count)))
                .collect::<Result<_, Error>>()?,
        },
        other => return Err(bad(&format!("unknown rule {other:?}"))),
    };
    let mut flags = l.flags;
    if let Some(f) = note_flag(&l.note) {
        if !flags.contains(&f) {
            flags.push(f);
        }
    }
    Ok(BoundRecord { key, value, derivation, note: l.note, flags })
}

/// Data files mark flags inline in the note with a `FLAG:` prefix.
fn note_flag(note: &str) -> Option<String> {
    let idx = note.find("FLAG:")?;
    let f = note[idx + 5..].trim().to_string();
    (!f.is_empty()).then_some(f)
}

fn record_to_line(r: &BoundRecord) -> DbLine {
    let mut antecedents = Vec::new();
    let mut t = None;
    match &r.derivation {
        Derivation::FormulaBm { t: tt } | Derivation::FormulaWzyg { t: tt } => t = Some(*tt),
        Derivation::Halve { from, input }
        | Derivation::Insert { from, input }
        | Derivation::Divide { from, input } => antecedents.push(AnteLine {
            n: from.n,
            d: from.d,
            m: from.m,
            positions: from.positions.clone(),
            value: input.to_string(),
            count: 1,
        }),
        Derivation::Product { terms } => {
            for (k, v) in terms {
                antecedents.push(AnteLine {
                    n: k.n,
                    d: k.d,
                    m: k.m,
                    positions: k.positions.clone(),
                    value: v.to_string(),
                    count: 1,
                });
            }
        }
        Derivation::Sum { terms } => {
            for (k, v, c) in terms {
                antecedents.push(AnteLine {
                    n: k.n,
                    d: k.d,
                    m: k.m,
                    positions: k.positions.clone(),
                    value: v.to_string(),
                    count: *c,
                });
            }
        }
        _ => {}
    }
    DbLine {
        n: r.key.n,
        d: r.key.d,
        m: r.key.m,
        positions: r.key.positions.clone(),
        value: r.value.to_string(),
        rule: r.derivation.rule_name().to_string(),
        t,
        antecedents,
        note: r.note.clone(),
        flags: r.flags.clone(),
    }
}

pub fn import_db(text: &str) -> Result<BoundDb, Error> {
    let mut db = BoundDb::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: DbLine = serde_json::from_str(line)
            .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        db.insert(line_to_record(parsed, i + 1)?);
    }
    Ok(db)
}

pub fn export_db(db: &BoundDb) -> String {
    let mut out = String::new();
    for rec in db.iter() {
        out.push_str(&serde_json::to_string(&record_to_line(rec)).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Database preloaded with the externally computed values the derivation
/// ledger builds on. Everything in it is tagged claimed, not certified.
pub fn seed_db() -> BoundDb {
    import_db(SEED_JSONL).expect("bundled seed data parses")
}

// ---- derivation ledger ----

#[derive(Deserialize)]
struct LedgerTarget {
    n: u32,
    d: u32,
}

#[derive(Deserialize)]
struct LedgerTerm {
    n: u32,
    d: u32,
    #[serde(default)]
    m: Option<u32>,
    #[serde(default)]
    positions: Option<Vec<u32>>,
    #[serde(default)]
    value: Option<String>,
    #[serde(default = "one")]
    count: u32,
}

#[derive(Deserialize)]
struct LedgerLine {
    target: LedgerTarget,
    rule: String,
    stated: String,
    terms: Vec<LedgerTerm>,
    #[serde(default)]
    note: String,
}

#[derive(Clone, Debug)]
pub struct LedgerOutcome {
    pub target: BoundKey,
    pub rule: String,
    pub derived: BigUint,
    pub stated: BigUint,
    /// Derived arithmetic agrees with the figure printed alongside it.
    pub agrees: bool,
    /// Flags raised for this entry: arithmetic mismatches plus any
    /// documented discrepancy carried in the entry's note.
    pub flags: Vec<String>,
}

/// Evaluates one derivation ledger against the database. Terms carrying
/// explicit values are recorded as claims; bare terms are resolved from
/// the database. Each outcome's derived record is inserted, and when the
/// arithmetic disagrees with the printed figure both the derived record
/// and the claim are flagged rather than reconciled.
pub fn apply_ledger(db: &mut BoundDb, text: &str) -> Result<Vec<LedgerOutcome>, Error> {
    let mut outcomes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry: LedgerLine = serde_json::from_str(line)
            .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        let lineno = i + 1;
        let target = BoundKey::full(entry.target.n, entry.target.d);
        let stated = parse_big(&entry.stated, lineno)?;

        let mut resolved: Vec<(BoundKey, BigUint, u32)> = Vec::new();
        for term in &entry.terms {
            let key = BoundKey {
                n: term.n,
                d: term.d,
                m: term.m,
                positions: term.positions.clone(),
            };
            let v = match &term.value {
                Some(s) => {
                    let v = parse_big(s, lineno)?;
                    db.insert(BoundRecord::claimed(key.clone(), v.clone(), "ledger antecedent"));
                    v
                }
                None => db
                    .value(&key)
                    .cloned()
                    .ok_or_else(|| Error::Parse {
                        line: lineno,
                        msg: format!("antecedent {key} not in database"),
                    })?,
            };
            resolved.push((key, v, term.count));
        }

        let check_shape = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Parse { line: lineno, msg: what.to_string() })
            }
        };
        let derivation = match entry.rule.as_str() {
            "sum" => Derivation::Sum { terms: resolved.clone() },
            "gen" => Derivation::Product {
                terms: resolved.iter().map(|(k, v, _)| (k.clone(), v.clone())).collect(),
            },
            "halve" => {
                check_shape(resolved.len() == 1, "halve needs one antecedent")?;
                let (from, input, _) = resolved[0].clone();
                check_shape(from.d + 1 == target.d && from.d % 2 == 1, "halve needs odd d-1 antecedent")?;
                Derivation::Halve { from, input }
            }
            "insert" => {
                check_shape(resolved.len() == 1, "insert needs one antecedent")?;
                let (from, input, _) = resolved[0].clone();
                check_shape(from.n + 1 == target.n, "insert needs an n-1 antecedent")?;
                Derivation::Insert { from, input }
            }
            "divide" => {
                check_shape(resolved.len() == 1, "divide needs one antecedent")?;
                let (from, input, _) = resolved[0].clone();
                check_shape(from.n == target.n + 1, "divide needs an n+1 antecedent")?;
                Derivation::Divide { from, input }
            }
            other => {
                return Err(Error::Parse { line: lineno, msg: format!("unknown ledger rule {other:?}") })
            }
        };
        let derived = derivation.replay(&target).expect("derived rules replay");
        let agrees = derived == stated;
        let mut rec = BoundRecord {
            key: target.clone(),
            value: derived.clone(),
            derivation,
            note: entry.note.clone(),
            flags: note_flag(&entry.note).into_iter().collect(),
        };
        if !agrees {
            rec.flags.push(format!(
                "printed figure {stated} disagrees with its own arithmetic {derived}"
            ));
            // keep the printed figure too when it is the larger one
            if stated > derived {
                let mut claim = BoundRecord::claimed(target.clone(), stated.clone(), entry.note.clone());
                claim.flags.push(format!(
                    "printed figure; the arithmetic shown for it gives {derived}"
                ));
                db.insert(claim);
            }
        }
        let flags = rec.flags.clone();
        db.insert(rec);
        outcomes.push(LedgerOutcome {
            target,
            rule: entry.rule,
            derived,
            stated,
            agrees,
            flags,
        });
    }
    Ok(outcomes)
}

/// The bundled derivation ledger behind the improved P(n,d) table.
pub fn apply_bundled_ledger(db: &mut BoundDb) -> Result<Vec<LedgerOutcome>, Error> {
    apply_ledger(db, LEDGER_JSONL)
}

pub fn bundled_ledger_text() -> &'static str {
    LEDGER_JSONL
}

// ---- composer ----

#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub n_min: u32,
    pub n_max: u32,
}

impl Default for Window {
    fn default() -> Self {
        Window { n_min: 4, n_max: 20 }
    }
}

impl Window {
    fn d_max(&self, n: u32) -> u32 {
        n * (n - 1) / 2
    }

    fn holds(&self, key: &BoundKey) -> bool {
        key.n >= self.n_min && key.n <= self.n_max && key.d >= 1 && key.d <= self.d_max(key.n)
    }
}

/// Builds the S_{n,m} member a fixed-placement key denotes: symbols
/// n-m+1..n at the listed 1-based positions in order, the rest sorted.
fn placement_permutation(key: &BoundKey) -> Option<Permutation> {
    let pos = key.positions.as_ref()?;
    let n = key.n as usize;
    let m = pos.len();
    if n > crate::perm::MAX_N || m >= n {
        return None;
    }
    let mut symbols = vec![u8::MAX; n];
    for (i, &p) in pos.iter().enumerate() {
        let p = p as usize;
        if p < 1 || p > n || symbols[p - 1] != u8::MAX {
            return None;
        }
        symbols[p - 1] = (n - m + i) as u8;
    }
    let mut small = 0u8;
    for slot in symbols.iter_mut() {
        if *slot == u8::MAX {
            *slot = small;
            small += 1;
        }
    }
    Permutation::new(symbols).ok()
}

/// Max-weight clique over at most `SUM_GROUP_CAP` vertices, weights are
/// the record values. Groups above the cap are skipped.
const SUM_GROUP_CAP: usize = 25;

fn max_weight_clique(adj: &[Vec<bool>], weights: &[BigUint]) -> Vec<usize> {
    fn grow(
        adj: &[Vec<bool>],
        weights: &[BigUint],
        cand: &[usize],
        current: &mut Vec<usize>,
        current_w: &BigUint,
        best: &mut (Vec<usize>, BigUint),
    ) {
        let mut rest_w = current_w.clone();
        for &v in cand {
            rest_w += &weights[v];
        }
        if rest_w <= best.1 {
            return;
        }
        if cand.is_empty() {
            if *current_w > best.1 {
                *best = (current.clone(), current_w.clone());
            }
            return;
        }
        for (i, &v) in cand.iter().enumerate() {
            let next: Vec<usize> = cand[i + 1..].iter().copied().filter(|&u| adj[v][u]).collect();
            current.push(v);
            let w = current_w + &weights[v];
            if w > best.1 && next.is_empty() {
                *best = (current.clone(), w.clone());
            }
            grow(adj, weights, &next, current, &w, best);
            current.pop();
        }
    }

    let all: Vec<usize> = (0..adj.len()).collect();
    let mut best = (Vec::new(), BigUint::zero());
    grow(adj, weights, &all, &mut Vec::new(), &BigUint::zero(), &mut best);
    best.0
}

/// Applies the inference rules to a fixed point over the window. The
/// summation rule only fires for fixed-placement records whose placements
/// verify pairwise at distance >= d, i.e. form a genuine restricted
/// array. Returns the number of cell improvements.
pub fn compose_bounds(db: &mut BoundDb, window: Window) -> usize {
    let mut improved = 0usize;

    // equation (1) floor records, generated once
    for n in window.n_min..=window.n_max {
        for m in 1..n {
            for d in 1..n {
                let v = eq1_value(n, m, d);
                if v > BigUint::one() {
                    improved += db.insert(BoundRecord {
                        key: BoundKey::restricted(n, m, d),
                        value: v,
                        derivation: Derivation::Eq1Product,
                        note: String::new(),
                        flags: Vec::new(),
                    }) as usize;
                }
            }
        }
    }

    loop {
        let mut candidates: Vec<BoundRecord> = Vec::new();

        for rec in db.iter() {
            let key = &rec.key;
            if key.is_full() && window.holds(key) {
                if key.d % 2 == 1 && key.d + 1 <= window.d_max(key.n) {
                    candidates.push(BoundRecord {
                        key: BoundKey::full(key.n, key.d + 1),
                        value: (&rec.value + 1u32) / 2u32,
                        derivation: Derivation::Halve { from: key.clone(), input: rec.value.clone() },
                        note: String::new(),
                        flags: Vec::new(),
                    });
                }
                if key.n + 1 <= window.n_max {
                    candidates.push(BoundRecord {
                        key: BoundKey::full(key.n + 1, key.d),
                        value: &rec.value * ceil_div(key.n + 1, key.d),
                        derivation: Derivation::Insert { from: key.clone(), input: rec.value.clone() },
                        note: String::new(),
                        flags: Vec::new(),
                    });
                }
                if key.n > window.n_min {
                    candidates.push(BoundRecord {
                        key: BoundKey::full(key.n - 1, key.d),
                        value: &rec.value / key.n,
                        derivation: Derivation::Divide { from: key.clone(), input: rec.value.clone() },
                        note: String::new(),
                        flags: Vec::new(),
                    });
                }
            }
            if let Some(m) = key.m {
                if m < key.n && window.holds(key) {
                    let inner = BoundKey::full(key.n - m, key.d);
                    if let Some(inner_rec) = db.get(&inner) {
                        candidates.push(BoundRecord {
                            key: BoundKey::full(key.n, key.d),
                            value: &rec.value * &inner_rec.value,
                            derivation: Derivation::Product {
                                terms: vec![
                                    (key.clone(), rec.value.clone()),
                                    (inner, inner_rec.value.clone()),
                                ],
                            },
                            note: String::new(),
                            flags: Vec::new(),
                        });
                    }
                }
            }
        }

        // summation over compatible fixed-placement groups
        let mut groups: BTreeMap<(u32, u32, usize), Vec<&BoundRecord>> = BTreeMap::new();
        for rec in db.iter() {
            if let Some(pos) = &rec.key.positions {
                if window.holds(&rec.key) {
                    groups.entry((rec.key.n, rec.key.d, pos.len())).or_default().push(rec);
                }
            }
        }
        for ((n, d, _), members) in &groups {
            if members.len() < 2 || members.len() > SUM_GROUP_CAP {
                continue;
            }
            let perms: Vec<Option<Permutation>> =
                members.iter().map(|r| placement_permutation(&r.key)).collect();
            let mut adj = vec![vec![false; members.len()]; members.len()];
            for i in 0..members.len() {
                for j in i + 1..members.len() {
                    if let (Some(a), Some(b)) = (&perms[i], &perms[j]) {
                        if crate::perm::kendall_distance(a, b).map(u64::from).unwrap_or(0) >= *d as u64 {
                            adj[i][j] = true;
                            adj[j][i] = true;
                        }
                    }
                }
            }
            let weights: Vec<BigUint> = members.iter().map(|r| r.value.clone()).collect();
            let clique = max_weight_clique(&adj, &weights);
            if clique.len() < 2 {
                continue;
            }
            let mut value = BigUint::zero();
            let mut terms = Vec::new();
            for &i in &clique {
                value += &weights[i];
                terms.push((members[i].key.clone(), weights[i].clone(), 1u32));
            }
            candidates.push(BoundRecord {
                key: BoundKey::full(*n, *d),
                value,
                derivation: Derivation::Sum { terms },
                note: String::new(),
                flags: Vec::new(),
            });
        }

        let mut changed = 0usize;
        for cand in candidates {
            if window.holds(&cand.key) {
                changed += db.insert(cand) as usize;
            }
        }
        if changed == 0 {
            break;
        }
        improved += changed;
    }
    improved
}

/// Seed claims, ledger derivations, then rule closure: the pipeline the
/// CLI and the exported tables are built on.
pub fn derived_db(window: Window) -> Result<(BoundDb, Vec<LedgerOutcome>), Error> {
    let mut db = seed_db();
    let outcomes = apply_bundled_ledger(&mut db)?;
    compose_bounds(&mut db, window);
    Ok((db, outcomes))
}

// ---- table rendering ----

#[derive(Clone, Debug)]
pub enum TableSelector {
    /// P(n,d) grid: rows n, columns d.
    Full { n: (u32, u32), d: (u32, u32) },
    /// P(n,m,d) grid at fixed d: rows n, columns m.
    Restricted { d: u32, n: (u32, u32), m: (u32, u32) },
}

#[derive(Clone, Debug)]
pub struct RenderedTable {
    pub csv: String,
    pub text: String,
}

fn render_grid(
    row_label: &str,
    col_labels: &[u32],
    rows: &[(u32, Vec<Option<BigUint>>)],
) -> RenderedTable {
    let mut csv = String::new();
    csv.push_str(row_label);
    for c in col_labels {
        csv.push(',');
        csv.push_str(&c.to_string());
    }
    csv.push('\n');
    for (r, cells) in rows {
        csv.push_str(&r.to_string());
        for cell in cells {
            csv.push(',');
            if let Some(v) = cell {
                csv.push_str(&v.to_string());
            }
        }
        csv.push('\n');
    }

    let mut cols: Vec<Vec<String>> = Vec::new();
    let mut head = vec![row_label.to_string()];
    head.extend(rows.iter().map(|(r, _)| r.to_string()));
    cols.push(head);
    for (j, c) in col_labels.iter().enumerate() {
        let mut col = vec![c.to_string()];
        for (_, cells) in rows {
            col.push(cells[j].as_ref().map(|v| v.to_string()).unwrap_or_default());
        }
        cols.push(col);
    }
    let widths: Vec<usize> = cols.iter().map(|c| c.iter().map(|s| s.len()).max().unwrap_or(0)).collect();
    let mut text = String::new();
    let height = cols[0].len();
    for i in 0..height {
        for (j, col) in cols.iter().enumerate() {
            if j > 0 {
                text.push_str("  ");
            }
            text.push_str(&format!("{:>width$}", col[i], width = widths[j]));
        }
        text.push('\n');
    }
    RenderedTable { csv, text }
}

pub fn export_tables(db: &BoundDb, selector: &TableSelector) -> RenderedTable {
    match selector {
        TableSelector::Full { n, d } => {
            let cols: Vec<u32> = (d.0..=d.1).collect();
            let rows: Vec<(u32, Vec<Option<BigUint>>)> = (n.0..=n.1)
                .map(|nn| {
                    let cells = cols
                        .iter()
                        .map(|&dd| db.value(&BoundKey::full(nn, dd)).cloned())
                        .collect();
                    (nn, cells)
                })
                .collect();
            render_grid("n:d", &cols, &rows)
        }
        TableSelector::Restricted { d, n, m } => {
            let cols: Vec<u32> = (m.0..=m.1).collect();
            let rows: Vec<(u32, Vec<Option<BigUint>>)> = (n.0..=n.1)
                .map(|nn| {
                    let cells = cols
                        .iter()
                        .map(|&mm| db.value(&BoundKey::restricted(nn, mm, *d)).cloned())
                        .collect();
                    (nn, cells)
                })
                .collect();
            render_grid("n:m", &cols, &rows)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn wzyg_11_1() {
        let rec = formula_bound_wzyg(11, 1).unwrap();
        assert_eq!(rec.key, BoundKey::full(11, 3));
        assert_eq!(rec.value, big(1_330_560));
        assert!(rec.trace_consistent());
    }

    #[test]
    fn bm_weaker_than_wzyg_for_t_at_least_2() {
        // denominators t(t+1) vs 2t+1 cross at t=2; at t=1 the older
        // bound is nominally larger
        for n in 4..=20u32 {
            if !is_prime_power(n - 2) {
                continue;
            }
            assert!(formula_bound_bm(n, 1).unwrap().value >= formula_bound_wzyg(n, 1).unwrap().value);
            for t in 2..=4 {
                assert!(formula_bound_bm(n, t).unwrap().value <= formula_bound_wzyg(n, t).unwrap().value);
            }
        }
    }

    #[test]
    fn formula_rejects_non_prime_power() {
        assert!(formula_bound_wzyg(12, 1).is_err());
        assert!(formula_bound_bm(16, 2).is_err());
    }

    #[test]
    fn wzyg_15_5_divides_down_to_19703() {
        let rec = formula_bound_wzyg(15, 5).unwrap();
        assert_eq!(rec.value, big(295_548));
        let divided = Derivation::Divide { from: rec.key.clone(), input: rec.value.clone() }
            .replay(&BoundKey::full(14, 11))
            .unwrap();
        assert_eq!(divided, big(19_703));
    }

    #[test]
    fn seed_loads_and_flags_survive() {
        let db = seed_db();
        assert!(db.len() > 500);
        assert_eq!(db.value(&BoundKey::full(8, 3)), Some(&big(3752)));
        assert_eq!(db.value(&BoundKey::restricted(16, 4, 13)), Some(&big(44)));
        let odd = db.get(&BoundKey::restricted(20, 5, 10)).unwrap();
        assert_eq!(odd.value, big(4184));
        assert!(!odd.flags.is_empty());
    }

    #[test]
    fn insert_keeps_best_and_prefers_traced_record() {
        let mut db = BoundDb::new();
        let key = BoundKey::full(10, 3);
        assert!(db.insert(BoundRecord::claimed(key.clone(), big(100), "")));
        assert!(!db.insert(BoundRecord::claimed(key.clone(), big(90), "")));
        assert_eq!(db.value(&key), Some(&big(100)));
        let derived = BoundRecord {
            key: key.clone(),
            value: big(100),
            derivation: Derivation::Sum { terms: vec![(BoundKey::full(9, 3), big(50), 2)] },
            note: String::new(),
            flags: Vec::new(),
        };
        db.insert(derived);
        assert_eq!(db.get(&key).unwrap().derivation.rule_name(), "sum");
    }

    #[test]
    fn placed_column_composes_to_141782() {
        let mut db = BoundDb::new();
        for (pos, v) in [
            (vec![7, 8], 47_851u64),
            (vec![14, 3], 36_250),
            (vec![13, 14], 19_227),
            (vec![1, 2], 19_227),
            (vec![1, 14], 19_227),
        ] {
            db.insert(BoundRecord::claimed(BoundKey::placed(14, 11, pos), big(v), ""));
        }
        compose_bounds(&mut db, Window::default());
        let rec = db.get(&BoundKey::full(14, 11)).unwrap();
        assert_eq!(rec.value, big(141_782));
        assert_eq!(rec.derivation.rule_name(), "sum");
        assert!(rec.trace_consistent());
    }

    #[test]
    fn product_rule_composes_16_13() {
        let mut db = BoundDb::new();
        db.insert(BoundRecord::claimed(BoundKey::full(12, 13), big(6087), ""));
        db.insert(BoundRecord::claimed(BoundKey::restricted(16, 4, 13), big(44), ""));
        compose_bounds(&mut db, Window::default());
        assert_eq!(db.value(&BoundKey::full(16, 13)), Some(&big(267_828)));
    }

    #[test]
    fn halve_and_insert_from_15_11() {
        let mut db = BoundDb::new();
        db.insert(BoundRecord::claimed(BoundKey::full(15, 11), big(1_049_633), ""));
        compose_bounds(&mut db, Window::default());
        assert_eq!(db.value(&BoundKey::full(15, 12)), Some(&big(524_817)));
        assert_eq!(db.value(&BoundKey::full(16, 12)), Some(&big(1_049_634)));
    }

    #[test]
    fn product_rule_composes_17_15() {
        let mut db = BoundDb::new();
        db.insert(BoundRecord::claimed(BoundKey::full(12, 15), big(2239), ""));
        db.insert(BoundRecord::claimed(BoundKey::restricted(17, 5, 15), big(109), ""));
        compose_bounds(&mut db, Window::default());
        assert_eq!(db.value(&BoundKey::full(17, 15)), Some(&big(244_051)));
    }

    #[test]
    fn composer_is_monotone() {
        let mut base = BoundDb::new();
        base.insert(BoundRecord::claimed(BoundKey::full(12, 13), big(6087), ""));
        base.insert(BoundRecord::claimed(BoundKey::restricted(16, 4, 13), big(44), ""));
        let mut bigger = base.clone();
        bigger.insert(BoundRecord::claimed(BoundKey::full(12, 13), big(7000), ""));
        compose_bounds(&mut base, Window::default());
        compose_bounds(&mut bigger, Window::default());
        for rec in base.iter() {
            let other = bigger.value(&rec.key).expect("cell survives");
            assert!(other >= &rec.value, "cell {} decreased", rec.key);
        }
    }

    #[test]
    fn ledger_reproduces_improved_table() {
        let (db, outcomes) = derived_db(Window::default()).unwrap();
        let expect = [
            (14u32, 11u32, 141_782u64),
            (13, 9, 236_764),
            (13, 10, 158_208),
            (13, 11, 51_046),
            (15, 11, 1_049_633),
            (16, 11, 2_099_266),
            (15, 12, 524_817),
            (16, 12, 1_049_634),
            (16, 13, 267_828),
            (16, 14, 173_432),
            (17, 15, 244_051),
            (15, 13, 105_130),
            (15, 14, 83_346),
            (16, 15, 74_208),
            (14, 9, 595_728),
            (12, 5, 899_809),
            (12, 7, 129_298),
            (12, 8, 85_091),
        ];
        for (n, d, v) in expect {
            let v = big(v);
            // the ledger rules themselves produce the value (or, for the
            // cells whose printed arithmetic is off, record it as stated
            // with the mismatch surfaced)
            let hit = outcomes
                .iter()
                .any(|o| o.target == BoundKey::full(n, d) && (o.derived == v || (o.stated == v && !o.agrees)));
            assert!(hit, "ledger does not reach {v} at P({n},{d})");
            // the closure may improve further, never regress
            assert!(db.value(&BoundKey::full(n, d)).unwrap() >= &v, "P({n},{d})");
        }
        // the closure legitimately beats the printed table at (16,14):
        // P(16,2,14) * P(14,14) = 5 * 41,673
        assert_eq!(db.value(&BoundKey::full(16, 14)), Some(&big(208_365)));
        let disagreements: Vec<(u32, u32)> = outcomes
            .iter()
            .filter(|o| !o.agrees)
            .map(|o| (o.target.n, o.target.d))
            .collect();
        assert_eq!(disagreements, vec![(14, 9), (14, 10), (13, 11), (15, 11), (14, 12)]);
        // documented discrepancies surface flags instead of picking a side
        let flagged_at = |n, d, rule: &str| {
            outcomes
                .iter()
                .any(|o| o.target == BoundKey::full(n, d) && o.rule == rule && !o.flags.is_empty())
        };
        assert!(flagged_at(14, 9, "sum"));
        assert!(flagged_at(14, 11, "gen"));
        assert!(flagged_at(16, 15, "insert"));
        for rec in db.iter() {
            assert!(rec.trace_consistent(), "trace of {} does not replay", rec.key);
        }
    }

    #[test]
    fn export_grid_and_empty_selector() {
        let (db, _) = derived_db(Window::default()).unwrap();
        let grid = export_tables(&db, &TableSelector::Full { n: (12, 17), d: (5, 15) });
        assert!(grid.csv.contains("141782"));
        assert!(grid.text.contains("141782"));
        let empty = export_tables(&db, &TableSelector::Full { n: (3, 2), d: (5, 4) });
        assert_eq!(empty.csv.lines().count(), 1);
    }

    #[test]
    fn db_file_round_trip() {
        let (db, _) = derived_db(Window { n_min: 10, n_max: 17 }).unwrap();
        let text = export_db(&db);
        let back = import_db(&text).unwrap();
        assert_eq!(db.len(), back.len());
        for rec in db.iter() {
            let other = back.get(&rec.key).expect("record survives round trip");
            assert_eq!(rec.value, other.value);
            assert_eq!(rec.derivation, other.derivation);
            assert_eq!(rec.flags, other.flags);
        }
    }
}
