//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 certification failure, 1 usage or domain error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kpa::algebra::{expand_orbits, rep_search, OpSet, SymbolDomain};
use kpa::bounds::{
    apply_bundled_ledger, apply_ledger, compose_bounds, derived_db, export_db, export_tables,
    formula_bound_bm, formula_bound_wzyg, import_db, seed_db, BoundDb, TableSelector, Window,
};
use kpa::constructions;
use kpa::perm::Permutation;
use kpa::search::{
    best_of_restarts, clique_exact_guarded, RestartStrategy, SearchSpace, CLIQUE_GUARD,
    DEFAULT_SEED_SCHEDULE,
};
use kpa::verifier::{min_pairwise_distance_guarded, CertReport};
use kpa::{Error, PermArray};

#[derive(Parser)]
#[command(name = "kpa", version, about = "Permutation arrays under the Kendall tau metric")]
struct Cli {
    /// Worker threads for verification and search (default: all cores;
    /// the KPA_THREADS environment variable is an alternative spelling)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kendall tau distance between two permutations
    Dist {
        /// First permutation, e.g. "0 2 1"
        sigma: String,
        /// Second permutation, e.g. "0 1 2"
        pi: String,
    },
    /// Certify the minimum pairwise distance of an array file
    Verify {
        file: PathBuf,
        /// Distance to certify; defaults to the file's claimed d
        #[arg(long)]
        d: Option<u32>,
        /// Certify even when the array exceeds the pairwise guard
        #[arg(long)]
        override_guard: bool,
    },
    /// Expand representative permutations through automorphism orbits
    Expand(ExpandArgs),
    /// Randomized greedy search with restarts
    Search(SearchArgs),
    /// Exact maximum-clique search over a small space
    Clique(CliqueArgs),
    /// Constructive arrays from the closed-form theorems
    Construct(ConstructArgs),
    /// Bounds database: derive, render, formula values
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct ExpandArgs {
    /// Representative array file
    #[arg(long)]
    reps: PathBuf,
    /// Operation set: c (add constant), ac (scale and add), abc (full affine)
    #[arg(long, default_value = "ac")]
    ops: String,
    /// Field modulus as comma-separated coefficients, constant term first
    /// (e.g. 1,0,1,1 for x^3+x^2+1); default picks a bundled modulus
    #[arg(long)]
    poly: Option<String>,
    /// Treat the symbols as the ring Z_n even when n is a prime power
    #[arg(long)]
    ring: bool,
    /// Skip certification of the expanded array
    #[arg(long)]
    no_certify: bool,
    #[command(flatten)]
    out: OutArgs,
    /// Instead of expanding a file, search for fresh representatives at
    /// this distance (uses --budget and --rng), then expand them
    #[arg(long)]
    search_d: Option<u32>,
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 7)]
    rng: u64,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    n: usize,
    /// Restrict to S_{n,m}: only the top m symbols move
    #[arg(long)]
    m: Option<usize>,
    /// Fix the top symbols at these 1-based positions (comma-separated)
    #[arg(long, value_delimiter = ',')]
    fixed: Option<Vec<usize>>,
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Restart strategies cycled across restarts (comma-separated):
    /// a bare integer seeds that many random draws, q<permille> runs a
    /// diluted sweep (e.g. 0,4,q900)
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<RestartStrategy>>,
    #[arg(long, default_value_t = 7)]
    rng: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CliqueArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: u32,
    /// Refuse spaces larger than this many members
    #[arg(long, default_value_t = CLIQUE_GUARD)]
    guard: u128,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ConstructArgs {
    /// One of: two-point, three, five, pattern-d3, pattern-d4, halve,
    /// insert, compose, compose-sum
    #[arg(long)]
    rule: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Input array (halve, insert)
    #[arg(long, name = "in")]
    input: Option<PathBuf>,
    /// Outer array (compose, compose-sum)
    #[arg(long)]
    outer: Option<PathBuf>,
    /// Inner array; repeat for compose-sum, one per outer member
    #[arg(long)]
    inner: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(subcommand)]
    action: BoundsAction,
}

#[derive(Subcommand)]
enum BoundsAction {
    /// Run the rule composer to a fixed point and write the database
    Derive {
        /// Start from these database files instead of the bundled seed
        #[arg(long, name = "in")]
        input: Vec<PathBuf>,
        /// Extra derivation ledger files to evaluate
        #[arg(long)]
        ledger: Vec<PathBuf>,
        /// Skip the bundled derivation ledger
        #[arg(long)]
        no_bundled_ledger: bool,
        /// n window, inclusive, e.g. 4..20
        #[arg(long, default_value = "4..20")]
        window: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a grid of best bounds
    Show {
        /// p-n-d (rows n, columns d) or p-n-m (rows n, columns m at fixed --d)
        #[arg(long, default_value = "p-n-d")]
        table: String,
        #[arg(long, default_value = "12..17")]
        n: String,
        /// d range for p-n-d, single d for p-n-m
        #[arg(long, default_value = "3..15")]
        d: String,
        #[arg(long, default_value = "2..6")]
        m: String,
        #[arg(long)]
        csv: bool,
    },
    /// Evaluate a closed-form formula bound
    Formula {
        /// bm or wzyg
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        t: u32,
    },
}

#[derive(Args)]
struct OutArgs {
    /// Write the resulting array here ("-" for stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep construction order instead of sorting lexicographically
    #[arg(long)]
    keep_order: bool,
}

fn parse_perm(text: &str) -> Result<Permutation, Error> {
    let symbols: Vec<u64> = text
        .split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|_| Error::domain(format!("bad symbol {t:?}"))))
        .collect::<Result<_, _>>()?;
    if symbols.is_empty() {
        return Err(Error::domain("empty permutation"));
    }
    let n = symbols.len() as u64;
    // printed tables are 1-based when no 0 appears
    let shift = if symbols.contains(&0) { 0 } else { 1 };
    let symbols = symbols
        .iter()
        .map(|&s| {
            s.checked_sub(shift)
                .filter(|&v| v < n)
                .map(|v| v as u8)
                .ok_or_else(|| Error::domain(format!("symbol {s} out of range for n={n}")))
        })
        .collect::<Result<Vec<u8>, _>>()?;
    Permutation::new(symbols)
}

fn parse_range(text: &str) -> Result<(u32, u32), Error> {
    if let Some((a, b)) = text.split_once("..") {
        let lo = a.trim().parse().map_err(|_| Error::domain(format!("bad range {text:?}")))?;
        let hi = b.trim().parse().map_err(|_| Error::domain(format!("bad range {text:?}")))?;
        Ok((lo, hi))
    } else {
        let v: u32 = text.trim().parse().map_err(|_| Error::domain(format!("bad range {text:?}")))?;
        Ok((v, v))
    }
}

fn header_lines(extra: &[String]) -> Vec<String> {
    let mut lines = vec![
        format!("kpa {}", env!("CARGO_PKG_VERSION")),
        format!("command: {}", std::env::args().collect::<Vec<_>>().join(" ")),
    ];
    lines.extend_from_slice(extra);
    lines
}

fn emit_array(mut arr: PermArray, out: &OutArgs, extra: &[String]) -> Result<(), Error> {
    if !out.keep_order {
        arr.sort();
    }
    let Some(path) = &out.out else { return Ok(()) };
    let text = kpa::io::format_array(&arr, &header_lines(extra));
    if path.as_os_str() == "-" {
        print!("{text}");
    } else {
        std::fs::write(path, text)?;
        eprintln!("wrote {} members to {}", arr.len(), path.display());
    }
    Ok(())
}

fn print_report(report: &CertReport, arr: &PermArray) {
    println!("size: {}", report.size);
    println!("min distance: {}", report.min_distance);
    if let Some((i, j)) = report.witness_pair {
        println!("witness: #{i} {}  #{j} {}", arr.perms()[i], arr.perms()[j]);
    }
    if report.duplicates_dropped > 0 {
        println!("duplicates dropped: {}", report.duplicates_dropped);
    }
    if !report.restriction_ok {
        println!("restriction: VIOLATED");
    }
    println!("elapsed: {:.3}s", report.elapsed.as_secs_f64());
}

/// Ok(true) = certified, Ok(false) = certification failed (exit 2).
fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Dist { sigma, pi } => {
            let s = parse_perm(&sigma)?;
            let p = parse_perm(&pi)?;
            println!("{}", kpa::kendall_distance(&s, &p)?);
            Ok(true)
        }

        Command::Verify { file, d, override_guard } => {
            let arr = kpa::io::read_array(&file)?;
            let report = min_pairwise_distance_guarded(&arr, override_guard)?;
            let target = d.or(arr.claimed_d);
            print_report(&report, &arr);
            match target {
                Some(d) => {
                    let ok = report.passes(d);
                    println!("certify d>={d}: {}", if ok { "PASS" } else { "FAIL" });
                    Ok(ok)
                }
                None => Ok(true),
            }
        }

        Command::Expand(args) => {
            let ops = OpSet::parse(&args.ops)?;
            let (reps, n) = if let Some(dist) = args.search_d {
                let file = kpa::io::read_array(&args.reps)?;
                let n = file.n();
                let dom = domain_for(n, args.ring, args.poly.as_deref())?;
                let found = rep_search(&dom, dist, ops, args.budget, args.rng)?;
                eprintln!("rep search kept {} representatives (budget {}, rng=chacha8:{})",
                    found.len(), args.budget, args.rng);
                let arr = PermArray::new(found, format!("rep_search(d={dist} rng=chacha8:{})", args.rng))?;
                (arr, n)
            } else {
                let arr = kpa::io::read_array(&args.reps)?;
                let n = arr.n();
                (arr, n)
            };
            let dom = domain_for(n, args.ring, args.poly.as_deref())?;
            let expanded = expand_orbits(&dom, &reps, ops)?;
            println!("representatives: {}", reps.len());
            println!("group order: {}", ops.group_order(n));
            println!("expanded size: {}", expanded.len());
            let mut ok = true;
            if !args.no_certify {
                let report = min_pairwise_distance_guarded(&expanded, true)?;
                print_report(&report, &expanded);
                if let Some(d) = expanded.claimed_d {
                    ok = report.passes(d);
                    println!("certify d>={d}: {}", if ok { "PASS" } else { "FAIL" });
                }
            }
            emit_array(expanded, &args.out, &[])?;
            Ok(ok)
        }

        Command::Search(args) => {
            let space = build_space(args.n, args.m, args.fixed.as_deref())?;
            let schedule = args.seeds.as_deref().unwrap_or(DEFAULT_SEED_SCHEDULE);
            let arr = best_of_restarts(&space, args.d, args.restarts, args.rng, schedule)?;
            println!("space: {} members", space.size());
            println!("best of {} restarts: {} members at d>={}", args.restarts, arr.len(), args.d);
            println!("rng: chacha8:{}", args.rng);
            emit_array(arr, &args.out, &[format!("rng=chacha8:{} restarts={}", args.rng, args.restarts)])?;
            Ok(true)
        }

        Command::Clique(args) => {
            let space = build_space(args.n, args.m, None)?;
            let arr = clique_exact_guarded(&space, args.d, args.guard)?;
            println!("space: {} members", space.size());
            println!("maximum: {} members at d>={}", arr.len(), args.d);
            emit_array(arr, &args.out, &[])?;
            Ok(true)
        }

        Command::Construct(args) => {
            let need_n = || args.n.ok_or_else(|| Error::domain("--n required for this rule"));
            let read_in = |p: &Option<PathBuf>| -> Result<PermArray, Error> {
                let p = p.as_ref().ok_or_else(|| Error::domain("--in required for this rule"))?;
                kpa::io::read_array(p)
            };
            let arr = match args.rule.as_str() {
                "two-point" => constructions::two_point_array(
                    need_n()?,
                    args.m.ok_or_else(|| Error::domain("--m required for two-point"))?,
                )?,
                "three" => constructions::three_array(need_n()?)?,
                "five" => constructions::five_array(need_n()?)?,
                "pattern-d3" => constructions::pattern_d3(need_n()?)?,
                "pattern-d4" => constructions::pattern_d4(need_n()?)?,
                "halve" => constructions::halve_even(&read_in(&args.input)?)?,
                "insert" => constructions::insert_symbol(&read_in(&args.input)?)?,
                "compose" => {
                    let outer_path = args.outer.as_ref().ok_or_else(|| Error::domain("--outer required"))?;
                    let inner = args
                        .inner
                        .first()
                        .ok_or_else(|| Error::domain("--inner required for compose"))?;
                    constructions::compose(&kpa::io::read_array(outer_path)?, &kpa::io::read_array(inner)?)?
                }
                "compose-sum" => {
                    let outer_path = args.outer.as_ref().ok_or_else(|| Error::domain("--outer required"))?;
                    let outer = kpa::io::read_array(outer_path)?;
                    let inners = args
                        .inner
                        .iter()
                        .map(|p| kpa::io::read_array(p))
                        .collect::<Result<Vec<_>, _>>()?;
                    constructions::compose_sum(&outer, &inners)?
                }
                other => return Err(Error::domain(format!("unknown rule {other:?}"))),
            };
            println!("size: {}", arr.len());
            if let Some(d) = arr.claimed_d {
                println!("certified d: {d}");
            }
            emit_array(arr, &args.out, &[])?;
            Ok(true)
        }

        Command::Bounds(args) => run_bounds(args.action),
    }
}

fn run_bounds(action: BoundsAction) -> Result<bool, Error> {
    match action {
        BoundsAction::Derive { input, ledger, no_bundled_ledger, window, out } => {
            let (lo, hi) = parse_range(&window)?;
            let win = Window { n_min: lo, n_max: hi };
            let mut db: BoundDb;
            let mut outcomes = Vec::new();
            if input.is_empty() {
                db = seed_db();
                if !no_bundled_ledger {
                    outcomes = apply_bundled_ledger(&mut db)?;
                }
            } else {
                db = BoundDb::new();
                for path in &input {
                    let other = import_db(&std::fs::read_to_string(path)?)?;
                    for rec in other.iter() {
                        db.insert(rec.clone());
                    }
                }
            }
            for path in &ledger {
                outcomes.extend(apply_ledger(&mut db, &std::fs::read_to_string(path)?)?);
            }
            let improved = compose_bounds(&mut db, win);
            eprintln!("{} records, {} closure improvements", db.len(), improved);
            for o in &outcomes {
                if !o.agrees {
                    eprintln!(
                        "ledger mismatch at {}: stated {} vs arithmetic {}",
                        o.target, o.stated, o.derived
                    );
                }
            }
            for rec in db.flagged() {
                eprintln!("flag {}: {}", rec.key, rec.flags.join("; "));
            }
            let text = export_db(&db);
            match out {
                Some(path) if path.as_os_str() != "-" => {
                    std::fs::write(&path, text)?;
                    eprintln!("wrote {}", path.display());
                }
                _ => print!("{text}"),
            }
            Ok(true)
        }

        BoundsAction::Show { table, n, d, m, csv } => {
            let (db, _) = derived_db(Window::default())?;
            let selector = match table.as_str() {
                "p-n-d" => TableSelector::Full { n: parse_range(&n)?, d: parse_range(&d)? },
                "p-n-m" => {
                    let (dlo, dhi) = parse_range(&d)?;
                    if dlo != dhi {
                        return Err(Error::domain("p-n-m needs a single --d"));
                    }
                    TableSelector::Restricted { d: dlo, n: parse_range(&n)?, m: parse_range(&m)? }
                }
                other => return Err(Error::domain(format!("unknown table {other:?}"))),
            };
            let rendered = export_tables(&db, &selector);
            print!("{}", if csv { rendered.csv } else { rendered.text });
            Ok(true)
        }

        BoundsAction::Formula { name, n, t } => {
            let rec = match name.as_str() {
                "bm" => formula_bound_bm(n, t)?,
                "wzyg" => formula_bound_wzyg(n, t)?,
                other => return Err(Error::domain(format!("unknown formula {other:?}"))),
            };
            println!("{} >= {}", rec.key, rec.value);
            Ok(true)
        }
    }
}

fn build_space(n: usize, m: Option<usize>, fixed: Option<&[usize]>) -> Result<SearchSpace, Error> {
    match (m, fixed) {
        (None, None) => Ok(SearchSpace::full(n)),
        (Some(m), None) => SearchSpace::restricted(n, m),
        (None, Some(pos)) => SearchSpace::fixed_from_positions_1based(n, pos),
        (Some(_), Some(_)) => Err(Error::domain("--m and --fixed are mutually exclusive")),
    }
}

fn domain_for(n: usize, ring: bool, poly: Option<&str>) -> Result<SymbolDomain, Error> {
    if ring {
        return SymbolDomain::ring(n);
    }
    match poly {
        None => SymbolDomain::for_n(n),
        Some(text) => {
            let coeffs: Vec<u8> = text
                .split(',')
                .map(|t| t.trim().parse::<u8>().map_err(|_| Error::domain(format!("bad coefficient {t:?}"))))
                .collect::<Result<_, _>>()?;
            let k = coeffs.len().saturating_sub(1);
            if k < 2 {
                return Err(Error::domain("--poly needs degree >= 2"));
            }
            // recover p from n = p^k
            let p = (2..=n).find(|p| p.checked_pow(k as u32) == Some(n)).ok_or_else(|| {
                Error::domain(format!("n={n} is not p^{k} for any prime p"))
            })?;
            SymbolDomain::field(p, k, &coeffs)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("KPA_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        if t > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
