//! The acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 7, 8, 9 and 11 name a fixture (the d=2 coherator with three
//! levels at budgets D=3, S=3, R=3, saturating every unlifted pair) that is
//! attempted as stated, under a work limit. Its chains grow doubly
//! exponentially, so the attempt stops at the limit and those criteria
//! report FAIL with the reason; each line also carries the same checks run
//! on the capped variant (at most two pairs per level), whose results are
//! asserted to have no failures. Only the criteria that are attainable as
//! stated are asserted.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use globtower::engine::{check_extension_property, free_injective, FinSet, FinSetBase};
use globtower::globset::Cell;
use globtower::shapes::{coequalizer_check_sphere, disk, sphere};
use globtower::term::{Term, TermKind};
use globtower::theta::{realize, theta0_homs, DimensionTable};
use globtower::tower::{build_coherator_with, theory_hom, Budgets, ModelStore, Tower, TowerOptions, TowerSpec};
use globtower::variety::{compare_with_oracle, family_of_signature, term_oracle, FinAlgebra, Signature, Theory};
use globtower::verify::{verify_contractibility, verify_faithfulness, verify_unit_mono, CheckReport, Status};
use globtower::GlobularSet;
use globtower_cli::FileCache;

/// Work limit for one lifting chain of the literal fixture.
const LITERAL_WORK_LIMIT: u64 = 200_000;
/// Pairs per level in the capped variant.
const CAP: usize = 2;

struct Verdict {
    id: u32,
    pass: bool,
    summary: String,
    /// Everything the criterion computed, for the determinism comparison.
    transcript: String,
    elapsed: Duration,
    limit: Duration,
}

fn budgets() -> Budgets {
    Budgets::new(3, 3, 3).unwrap()
}

/// Cardinals of dimension ≤ 2 with at most five entries.
fn cardinals() -> Vec<DimensionTable> {
    DimensionTable::universe(2, 5)
}

fn timed(id: u32, limit_secs: u64, f: impl FnOnce() -> (bool, String, String)) -> Verdict {
    let start = Instant::now();
    let (pass, summary, transcript) = f();
    eprintln!("criterion {id} computed in {:.2?}", start.elapsed());
    Verdict {
        id,
        pass,
        summary,
        transcript,
        elapsed: start.elapsed(),
        limit: Duration::from_secs(limit_secs),
    }
}

/// Binary trees of depth ≤ d over g leaves: t(0) = g, t(d+1) = g + t(d)².
fn tree_count(g: u64, d: u32) -> u64 {
    (0..d).fold(g, |t, _| g + t * t)
}

fn criterion_1() -> (bool, String, String) {
    let mut t = String::new();
    let mut ok = true;
    for n in 0..=5 {
        let (y, s) = (disk(n).total(), sphere(n).total());
        ok &= y == 2 * n + 1 && s == 2 * (n + 1);
        let _ = writeln!(t, "Y({n})={y} S({n})={s}");
    }
    let r = realize(&"(1,0,2,1,2)".parse().unwrap(), 2).unwrap();
    ok &= r.carrier.census() == vec![3, 4, 2];
    let _ = writeln!(t, "realize (1,0,2,1,2) {}", r.carrier.census_string());
    (ok, format!("disks 2n+1, spheres 2(n+1) for n<=5; (1,0,2,1,2) census {}", r.carrier.census_string()), t)
}

fn criterion_2() -> (bool, String, String) {
    let mut t = String::new();
    let mut ok = true;
    let mut pairs = 0;
    for n in 0..=5 {
        for m in (n + 1)..=5 {
            let c = theta0_homs(&DimensionTable::disk(n), &DimensionTable::disk(m)).len();
            ok &= c == 2;
            pairs += 1;
            let _ = writeln!(t, "({n})->({m}) {c}");
        }
    }
    (ok, format!("{pairs} disk pairs, each with exactly 2 maps"), t)
}

/// Probes with at most ten cells: small realized cardinals, disks, spheres,
/// and small free models of the composition tower.
fn probes() -> Vec<GlobularSet> {
    let mut out: Vec<GlobularSet> = DimensionTable::universe(3, 7)
        .iter()
        .map(|t| (*realize(t, 3).unwrap().carrier).clone())
        .filter(|x| x.total() <= 10)
        .collect();
    for n in 0..=3 {
        out.push(disk(n));
        out.push(sphere(n));
    }
    let comp = Tower::build(
        TowerSpec::parse("budgets D=3 S=2 R=1\nlevel 1\npair table=(1,0,1) dim=0 left=c0s0 right=c1t0\n").unwrap(),
    )
    .unwrap();
    for t in ["(1,0,1)", "(1,0,1,0,1)", "(2,0,1)"] {
        let fm = comp.model(1, &t.parse().unwrap(), comp.budgets()).unwrap();
        if fm.carrier.total() <= 10 {
            out.push(fm.carrier.clone());
        }
    }
    out
}

fn criterion_3() -> (bool, String, String) {
    let probes = probes();
    let mut t = String::new();
    let mut ok = true;
    for n in 0..=3 {
        let pass = coequalizer_check_sphere(n, &probes);
        ok &= pass;
        let _ = writeln!(t, "S({n}) over {} probes: {pass}", probes.len());
    }
    (ok, format!("S(n) classifies parallel n-cell pairs on {} probes, n<=3", probes.len()), t)
}

fn criterion_4() -> (bool, String, String) {
    let x = FinSet::from_terms([Term::gen("x")]).unwrap();
    let (chain, _) = free_injective(&FinSetBase, family_of_signature(&Signature::magma()), x, 3).unwrap();
    let sizes = chain.stage_sizes();
    let oracle: Vec<usize> = (0..=3).map(|d| tree_count(1, d) as usize).collect();
    let ok = sizes == oracle && sizes == vec![1, 2, 5, 26];
    (ok, format!("stage sizes {sizes:?}, tree oracle {oracle:?}"), format!("{sizes:?} {oracle:?}\n"))
}

fn criterion_5() -> (bool, String, String) {
    let fixtures = [
        ("magma", "op m arity 2\n", 4),
        ("associative", "op m arity 2\neq 3 : m(m(v1,v2),v3) = m(v1,m(v2,v3))\n", 4),
        (
            "commutative+associative",
            "op m arity 2\neq 3 : m(m(v1,v2),v3) = m(v1,m(v2,v3))\neq 2 : m(v1,v2) = m(v2,v1)\n",
            3,
        ),
    ];
    let gens = vec!["x1".to_string()];
    let mut t = String::new();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, text, max) in fixtures {
        let theory = Theory::parse(text).unwrap();
        for depth in 0..=max {
            let r = compare_with_oracle(&theory, &gens, depth).unwrap();
            ok &= r.status == Status::Pass;
            t.push_str(&r.to_text());
        }
        let classes = term_oracle(&theory, &gens, max).representatives.len();
        parts.push(format!("{name} depth<={max}: {classes} classes"));
    }
    (ok, format!("engine = oracle for {}", parts.join(", ")), t)
}

/// Independent evaluation of a magma term at `x ↦ v`.
fn eval(t: &Term, alg: &FinAlgebra, v: usize) -> usize {
    match t.kind() {
        TermKind::Gen(_) => v,
        TermKind::App { args, .. } => {
            let a: Vec<usize> = args.iter().map(|a| eval(a, alg, v)).collect();
            alg.apply(0, &a)
        }
    }
}

fn criterion_6() -> (bool, String, String) {
    let x = FinSet::from_terms([Term::gen("x")]).unwrap();
    let (_, inj) = free_injective(&FinSetBase, family_of_signature(&Signature::magma()), x, 3).unwrap();
    let mut algebras = 0;
    let mut extensions = 0;
    let mut mismatches = 0;
    for size in 1..=3 {
        for alg in FinAlgebra::all(&Signature::magma(), size) {
            algebras += 1;
            for v in 0..size {
                let Ok(ext) = check_extension_property(&FinSetBase, &inj, &alg, &|_| Some(Cell::new(0, v))) else {
                    mismatches += 1;
                    continue;
                };
                extensions += 1;
                let agrees = inj
                    .carrier()
                    .terms()
                    .iter()
                    .enumerate()
                    .all(|(i, t)| ext.image(Cell::new(0, i)).map(|c| c.idx) == Some(eval(t, &alg, v)));
                if !agrees {
                    mismatches += 1;
                }
            }
        }
    }
    // Every map k: {x} → A is admissible: 1·1 + 16·2 + 19683·3.
    let expected = 1 + 16 * 2 + 19683 * 3;
    let ok = mismatches == 0 && extensions == expected && algebras == 1 + 16 + 19683;
    (
        ok,
        format!("{algebras} magmas, {extensions}/{expected} maps k extend uniquely, {mismatches} mismatches with tree evaluation"),
        format!("{algebras} {extensions} {mismatches}\n"),
    )
}

/// The literal fixture of criteria 7–9 and 11, or why it could not be built.
fn literal_fixture() -> Result<Tower, String> {
    build_coherator_with(
        2,
        3,
        budgets(),
        usize::MAX,
        TowerOptions {
            store: None,
            work_limit: Some(LITERAL_WORK_LIMIT),
        },
    )
    .map_err(|e| e.to_string())
}

fn capped_fixture(store: Option<Box<dyn ModelStore>>) -> Tower {
    build_coherator_with(2, 3, budgets(), CAP, TowerOptions { store, work_limit: None }).unwrap()
}

/// The unit and chain-map check over every cardinal and level pair.
fn mono_suite(tower: &Tower) -> CheckReport {
    let b = tower.budgets();
    let mut all = CheckReport::new("mono suite");
    for t in cardinals() {
        let x = (*realize(&t, b.dim).unwrap().carrier).clone();
        for n in 1..=tower.height() {
            for m in 0..n {
                all.absorb(verify_unit_mono(tower, m, n, &x, b).unwrap());
            }
        }
    }
    all
}

fn faithfulness_suite(tower: &Tower) -> CheckReport {
    let b = tower.budgets();
    let mut all = CheckReport::new("faithfulness suite");
    for mt in cardinals() {
        for k in cardinals() {
            for n in 1..=tower.height() {
                for m in 0..n {
                    all.absorb(verify_faithfulness(tower, m, n, &k, &mt, b).unwrap());
                }
            }
        }
    }
    all
}

/// Contractibility at d = 2 on every cardinal; returns the reports and a
/// tally of undecided items by ledger kind.
fn contractibility_suite(tower: &Tower) -> (Vec<CheckReport>, BTreeMap<String, u64>) {
    let mut reports = Vec::new();
    let mut kinds = BTreeMap::new();
    for mt in cardinals() {
        let r = verify_contractibility(tower, &mt, 2, tower.budgets()).unwrap();
        for e in r.ledger.entries() {
            *kinds.entry(e.kind.to_string()).or_insert(0) += e.count;
        }
        reports.push(r);
    }
    (reports, kinds)
}

fn criterion_7(literal: &Result<Tower, String>, capped: &Tower) -> (bool, String, String) {
    let mut t = String::new();
    let literal_part = match literal {
        Ok(tower) => {
            let r = mono_suite(tower);
            t.push_str(&r.to_text());
            (r.status == Status::Pass, format!("literal: {} maps, {} failures", r.checked, r.failures))
        }
        Err(e) => (false, format!("literal d=2 L=3 D=3,S=3,R=3 not computable: {e}")),
    };
    let r = mono_suite(capped);
    t.push_str(&r.to_text());
    assert_eq!(r.failures, 0, "capped mono suite:\n{}", r.to_text());
    (
        literal_part.0,
        format!("{}; capped (cap={CAP}): {} maps checked, {} failures", literal_part.1, r.checked, r.failures),
        t,
    )
}

fn criterion_8(literal: &Result<Tower, String>, capped: &Tower) -> (bool, String, String) {
    let mut t = String::new();
    let literal_part = match literal {
        Ok(tower) => {
            let r = faithfulness_suite(tower);
            t.push_str(&r.to_text());
            (r.status == Status::Pass, format!("literal: {} configurations, {} failures", r.checked, r.failures))
        }
        Err(e) => (false, format!("literal fixture not computable: {e}")),
    };
    let r = faithfulness_suite(capped);
    t.push_str(&r.to_text());
    assert_eq!(r.failures, 0, "capped faithfulness suite:\n{}", r.to_text());
    (
        literal_part.0,
        format!(
            "{}; capped (cap={CAP}): {} configurations checked, {} failures",
            literal_part.1, r.checked, r.failures
        ),
        t,
    )
}

/// Passes when no pair fails and every undecided pair is a top-level
/// (later-born) pair.
fn contractibility_verdict(tower: &Tower, t: &mut String) -> (bool, String) {
    let (reports, kinds) = contractibility_suite(tower);
    let mut statuses: BTreeMap<String, usize> = BTreeMap::new();
    for r in &reports {
        *statuses.entry(r.status.to_string()).or_insert(0) += 1;
        t.push_str(&r.to_text());
    }
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    let only_later_born = kinds.keys().all(|k| k == "frontier");
    let summary = format!(
        "{} cardinals: {statuses:?}, {failures} failing pairs, undecided by kind {kinds:?}",
        reports.len()
    );
    (failures == 0 && only_later_born, summary)
}

fn criterion_9(literal: &Result<Tower, String>, capped: &Tower) -> (bool, String, String) {
    let mut t = String::new();
    let literal_part = match literal {
        Ok(tower) => contractibility_verdict(tower, &mut t),
        Err(e) => (false, format!("literal fixture not computable: {e}")),
    };
    let (_, capped_summary) = contractibility_verdict(capped, &mut t);
    (literal_part.0, format!("{}; capped (cap={CAP}): {capped_summary}", literal_part.1), t)
}

/// With the tower fixed, models and hom-sets at doubled budgets contain the
/// originals under provenance names.
fn monotonicity(tower: &Tower, t: &mut String) -> (u64, u64) {
    let base = tower.budgets();
    let doubled = [
        Budgets::new(base.dim * 2, base.stages, base.rounds).unwrap(),
        Budgets::new(base.dim, base.stages * 2, base.rounds).unwrap(),
        Budgets::new(base.dim, base.stages, base.rounds * 2).unwrap(),
    ];
    let (mut checked, mut failures) = (0, 0);
    let mut base_homs: HashMap<(u32, DimensionTable, DimensionTable), HashSet<Vec<Term>>> = HashMap::new();
    for big in doubled {
        for mt in cardinals() {
            for n in 1..=tower.height() {
                let small_fm = tower.model(n, &mt, base).unwrap();
                let big_fm = tower.model(n, &mt, big).unwrap();
                checked += 1;
                if small_fm.embed_into(&big_fm).is_none() {
                    failures += 1;
                    let _ = writeln!(t, "carrier of level {n} on {mt} does not extend at {big}");
                }
                for k in cardinals() {
                    let small = base_homs
                        .entry((n, k.clone(), mt.clone()))
                        .or_insert_with(|| theory_hom(tower, n, &k, &mt, base).unwrap().into_iter().collect());
                    let large: HashSet<Vec<Term>> = theory_hom(tower, n, &k, &mt, big).unwrap().into_iter().collect();
                    checked += 1;
                    if !small.is_subset(&large) {
                        failures += 1;
                        let _ = writeln!(t, "T_{n}({k},{mt}) does not extend at {big}");
                    }
                }
            }
            let _ = writeln!(t, "{big} {mt} checked");
        }
    }
    (checked, failures)
}

fn criterion_11(literal: &Result<Tower, String>, capped: &Tower) -> (bool, String, String) {
    let mut t = String::new();
    let literal_part = match literal {
        Ok(tower) => {
            let (c, f) = monotonicity(tower, &mut t);
            (f == 0, format!("literal: {c} inclusions, {f} failures"))
        }
        Err(e) => (false, format!("literal fixture not computable: {e}")),
    };
    let (c, f) = monotonicity(capped, &mut t);
    assert_eq!(f, 0, "capped monotonicity:\n{t}");
    (
        literal_part.0,
        format!("{}; capped (cap={CAP}), D, S, R each doubled: {c} inclusions checked, {f} failures", literal_part.1),
        t,
    )
}

/// Criteria 1–9 and 11 in order.
fn suite() -> Vec<Verdict> {
    let mut out = vec![
        timed(1, 1, criterion_1),
        timed(2, 1, criterion_2),
        timed(3, 10, criterion_3),
        timed(4, 5, criterion_4),
        timed(5, 60, criterion_5),
        timed(6, 60, criterion_6),
    ];
    let start = Instant::now();
    let literal = literal_fixture();
    let capped = capped_fixture(None);
    let setup = start.elapsed();
    let mut v = timed(7, 600, || criterion_7(&literal, &capped));
    v.elapsed += setup;
    out.push(v);
    let mut v = timed(8, 600, || criterion_8(&literal, &capped));
    v.elapsed += setup;
    out.push(v);
    let mut v = timed(9, 600, || criterion_9(&literal, &capped));
    v.elapsed += setup;
    out.push(v);
    let mut v = timed(11, 1200, || criterion_11(&literal, &capped));
    v.elapsed += setup;
    out.push(v);
    out
}

fn transcript(verdicts: &[Verdict]) -> String {
    verdicts
        .iter()
        .map(|v| format!("== {} {} {}\n{}", v.id, v.pass, v.summary, v.transcript))
        .collect()
}

fn contractibility_transcript(tower: &Tower) -> String {
    let mut t = String::new();
    let _ = contractibility_verdict(tower, &mut t);
    t
}

fn globtower(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_globtower")).args(args).output().unwrap();
    (out.status.code().unwrap(), out.stdout)
}

/// Warm cache against cold, in the library and through the binary.
fn cache_determinism(dir: &Path) -> (bool, String) {
    let uncached = contractibility_transcript(&capped_fixture(None));
    let spec = globtower::tower::coherator_spec(2, 3, budgets(), CAP);
    let path = dir.join("models.json");
    let open = || {
        let (cache, problem) = FileCache::open(&path, &spec);
        assert!(problem.is_none(), "{problem:?}");
        cache
    };
    let cold = contractibility_transcript(&capped_fixture(Some(Box::new(open()))));
    let warm_cache = open();
    let cached_models = warm_cache.len();
    let warm = contractibility_transcript(&capped_fixture(Some(Box::new(warm_cache))));
    let library = uncached == cold && cold == warm && cached_models > 0;

    let tower_file = dir.join("coherator.tower");
    std::fs::write(&tower_file, spec.to_text()).unwrap();
    let cli_cache = dir.join("cli-models.json");
    let args = [
        "check",
        "contractible",
        tower_file.to_str().unwrap(),
        "--table",
        "(1,0,1)",
        "--dim",
        "2",
        "--cache",
        cli_cache.to_str().unwrap(),
    ];
    let (c1, o1) = globtower(&args);
    let (c2, o2) = globtower(&args);
    let (c3, o3) = globtower(&args[..7]);
    let binary = (c1, &o1) == (c2, &o2) && (c2, &o2) == (c3, &o3);
    (
        library && binary,
        format!("library cold/warm/uncached identical: {library} ({cached_models} cached models); binary cold/warm/uncached identical: {binary}"),
    )
}

#[test]
fn acceptance() {
    let first = suite();
    let start = Instant::now();
    let second = suite();
    let dir = tempfile::tempdir().unwrap();
    let (cache_ok, cache_summary) = cache_determinism(dir.path());
    let identical = transcript(&first) == transcript(&second);
    let ten = Verdict {
        id: 10,
        pass: identical && cache_ok,
        summary: format!("two cold runs byte-identical: {identical}; {cache_summary}"),
        transcript: String::new(),
        elapsed: start.elapsed(),
        limit: Duration::MAX,
    };
    let mut verdicts: Vec<&Verdict> = first.iter().chain(std::iter::once(&ten)).collect();
    verdicts.sort_by_key(|v| v.id);

    let mut stdout = std::io::stdout().lock();
    for v in &verdicts {
        let in_time = v.elapsed <= v.limit;
        let limit = if v.limit == Duration::MAX {
            "exact".to_string()
        } else {
            format!("limit {}s", v.limit.as_secs())
        };
        let _ = writeln!(
            stdout,
            "criterion {:>2}: {} {} [{:.2?}, {limit}]",
            v.id,
            if v.pass && in_time { "PASS" } else { "FAIL" },
            v.summary,
            v.elapsed
        );
    }
    drop(stdout);

    // Attainable as stated: 1–6 and 10.
    for v in &verdicts {
        if matches!(v.id, 1..=6 | 10) {
            assert!(v.pass && v.elapsed <= v.limit, "criterion {} failed: {}", v.id, v.summary);
        }
    }
}
