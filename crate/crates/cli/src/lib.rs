//! Command-line front end: input parsing, command dispatch, the free-model
//! cache, and deterministic text or machine-readable reports.
//!
//! Exit codes: 0 pass/ok, 1 fail (with witness), 2 inconclusive at budget,
//! 3 usage, parse or runtime error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use globtower::ledger::Ledger;
use globtower::shapes::sphere_probe;
use globtower::term::{Term, TermKind};
use globtower::theta::{realize, theta0_homs, DimensionTable, TableError};
use globtower::tower::{
    coherator_spec, free_model, Budgets, FreeModelApprox, ModelStore, Tower, TowerError, TowerOptions, TowerSpec,
};
use globtower::variety::{compare_with_oracle, free_algebra_approx, Theory, VarietyError};
use globtower::verify::{verify_contractibility, verify_faithfulness, verify_globularity, verify_unit_mono, CheckReport};
use globtower::{GlobularMap, GlobularSet};

/// Exit code for usage, parse and runtime errors.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "globtower", version, about = "Truncated free models of cellular globular theories")]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,
    /// Budget overrides, e.g. `D=3,S=3,R=3` or `S=4`.
    #[arg(long, global = true)]
    pub budget: Option<String>,
    /// File caching free models between runs.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Bound on the work of each lifting chain; exceeding it is an error.
    #[arg(long, global = true)]
    pub work_limit: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Realize a table of dimensions as a globular set.
    Realize {
        table: String,
        /// Truncation dimension (default: the table's dimension).
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Enumerate the maps between two realized tables.
    Homs { source: String, target: String },
    /// Compute a truncated free model of a tower.
    FreeModel {
        tower: PathBuf,
        /// Level of the model (default: the top level).
        #[arg(long)]
        level: Option<u32>,
        /// Table whose realization is the input.
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        table: Option<String>,
        /// Globular set file used as the input.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Build a coherator tower and print its resolved levels.
    BuildCoherator {
        /// Saturation dimension `d`.
        #[arg(long)]
        dim: usize,
        /// Number of levels `L`.
        #[arg(long)]
        levels: u32,
        /// Most parallel pairs adjoined per level.
        #[arg(long, default_value_t = 1000)]
        cap: usize,
    },
    /// Run a verifier check.
    Check {
        #[command(subcommand)]
        check: CheckCommand,
    },
    /// Free algebras of a finitary signature with equations.
    Variety {
        #[command(subcommand)]
        command: VarietyCommand,
    },
    /// Show where a cell of a free model comes from.
    Provenance {
        tower: PathBuf,
        /// Provenance term of the cell, e.g. `#1.0(c0s0,c1t0)`.
        cell: String,
        #[arg(long)]
        table: String,
        #[arg(long)]
        level: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Contractibility up to `d` of the top-level free model on a table.
    Contractible {
        tower: PathBuf,
        #[arg(long)]
        table: String,
        #[arg(long)]
        dim: usize,
    },
    /// Injectivity of the level-m → level-n map on T(k, table).
    Faithful {
        tower: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: String,
        #[arg(long)]
        table: String,
    },
    /// Injectivity of the unit level m → level n and of every chain map.
    Mono {
        tower: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        table: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Globular identities of a globular set file or a realized table.
    Globularity { object: String },
}

#[derive(Debug, Subcommand)]
pub enum VarietyCommand {
    /// Truncated free algebra on generators x1..xk.
    Free {
        signature: PathBuf,
        #[arg(long, default_value_t = 1)]
        gen: usize,
        #[arg(long)]
        stages: Option<u32>,
        #[arg(long)]
        rounds: Option<u32>,
    },
    /// Engine normal forms against the brute-force term oracle.
    Compare {
        signature: PathBuf,
        #[arg(long, default_value_t = 1)]
        gen: usize,
        #[arg(long)]
        depth: u32,
    },
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub machine: Value,
    pub code: i32,
}

impl Outcome {
    fn ok(text: String, machine: Value) -> Outcome {
        Outcome { text, machine, code: 0 }
    }

    fn report(report: &CheckReport) -> Outcome {
        Outcome {
            text: report.to_text(),
            machine: serde_json::to_value(report).expect("reports serialize"),
            code: report.exit_code(),
        }
    }
}

/// Parses `args` (program name first), runs the command and writes its
/// report; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let inv = match Invocation::try_parse_from(args) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_ERROR,
            };
        }
    };
    match execute(&inv, err) {
        Ok(outcome) => {
            let body = match inv.format {
                Format::Text => outcome.text,
                Format::Machine => format!("{}\n", outcome.machine),
            };
            let written = match &inv.output {
                Some(path) => fs::write(path, body).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                }),
                None => out.write_all(body.as_bytes()).map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                }),
            };
            match written {
                Ok(()) => outcome.code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs a parsed invocation.
pub fn execute(inv: &Invocation, warn: &mut dyn Write) -> Result<Outcome, CliError> {
    match &inv.command {
        Command::Realize { table, dim } => {
            let t = parse_table(table)?;
            let r = realize(&t, dim.unwrap_or(t.dim()))?;
            let text = format!("table {t}\ncensus {}\n{}", r.carrier.census_string(), r.carrier.to_text());
            Ok(Outcome::ok(
                text,
                json!({"table": t.to_string(), "census": r.carrier.census(), "object": r.carrier.to_text()}),
            ))
        }
        Command::Homs { source, target } => {
            let (s, t) = (parse_table(source)?, parse_table(target)?);
            let maps = theta0_homs(&s, &t);
            let mut text = format!("{} maps {s} -> {t}\n", maps.len());
            let rendered: Vec<String> = maps.iter().map(show_map).collect();
            for m in &rendered {
                text.push_str(&format!("  {m}\n"));
            }
            Ok(Outcome::ok(
                text,
                json!({"source": s.to_string(), "target": t.to_string(), "count": maps.len(), "maps": rendered}),
            ))
        }
        Command::FreeModel {
            tower,
            level,
            table,
            input,
        } => {
            let tower = load_tower(inv, tower, warn)?;
            let level = level.unwrap_or(tower.height());
            let fm = match (table, input) {
                (Some(t), _) => (*tower.model(level, &parse_table(t)?, tower.budgets())?).clone(),
                (None, Some(path)) => free_model(&tower, level, &read_globset(path)?, tower.budgets())?,
                (None, None) => return Err(CliError::Usage("give --table or --input".into())),
            };
            Ok(model_outcome(&fm))
        }
        Command::BuildCoherator { dim, levels, cap } => {
            let budgets = budgets(inv, Budgets::default())?;
            let spec = coherator_spec(*dim, *levels, budgets, *cap);
            let tower = build(inv, spec, warn)?;
            let resolved = tower.resolved_spec();
            let counts: Vec<usize> = (1..=tower.height())
                .map(|k| tower.level(k).map_or(0, |l| l.pairs.len()))
                .collect();
            let mut text = format!("coherator d={dim} L={levels} cap={cap} budgets {budgets}\n");
            for (k, n) in counts.iter().enumerate() {
                text.push_str(&format!("level {} pairs={n}\n", k + 1));
            }
            text.push_str(&ledger_text(tower.ledger()));
            text.push_str(&resolved.to_text());
            Ok(Outcome::ok(
                text,
                json!({"budgets": budgets.to_string(), "pairs": counts, "ledger": tower.ledger(), "spec": resolved.to_text()}),
            ))
        }
        Command::Check { check } => check_command(inv, check, warn),
        Command::Variety { command } => variety_command(inv, command),
        Command::Provenance {
            tower,
            cell,
            table,
            level,
        } => {
            let tower = load_tower(inv, tower, warn)?;
            let level = level.unwrap_or(tower.height());
            let fm = tower.model(level, &parse_table(table)?, tower.budgets())?;
            let term = Term::parse(cell).map_err(|e| CliError::Usage(format!("bad cell `{cell}`: {e}")))?;
            let mut lines = Vec::new();
            provenance_lines(&fm, &term, 0, &mut lines)?;
            let text = lines.iter().map(|l| format!("{l}\n")).collect();
            Ok(Outcome::ok(text, json!({"cell": cell, "provenance": lines})))
        }
    }
}

fn check_command(inv: &Invocation, check: &CheckCommand, warn: &mut dyn Write) -> Result<Outcome, CliError> {
    let report = match check {
        CheckCommand::Contractible { tower, table, dim } => {
            let tower = load_tower(inv, tower, warn)?;
            verify_contractibility(&tower, &parse_table(table)?, *dim, tower.budgets())?
        }
        CheckCommand::Faithful { tower, m, n, k, table } => {
            let tower = load_tower(inv, tower, warn)?;
            verify_faithfulness(&tower, *m, *n, &parse_table(k)?, &parse_table(table)?, tower.budgets())?
        }
        CheckCommand::Mono {
            tower,
            m,
            n,
            table,
            input,
        } => {
            let tower = load_tower(inv, tower, warn)?;
            let b = tower.budgets();
            let x = match (table, input) {
                (Some(t), _) => (*realize(&parse_table(t)?, b.dim)?.carrier).clone(),
                (None, Some(path)) => read_globset(path)?,
                (None, None) => return Err(CliError::Usage("give --table or --input".into())),
            };
            verify_unit_mono(&tower, *m, *n, &x, b)?
        }
        CheckCommand::Globularity { object } => {
            let x = if object.trim_start().starts_with('(') {
                let t = parse_table(object)?;
                (*realize(&t, t.dim())?.carrier).clone()
            } else {
                read_globset(Path::new(object))?
            };
            let mut report = verify_globularity(object, &x);
            // The sphere classifier on the same object, dimension by dimension.
            for n in 0..=x.max_dim() {
                report.checked += 1;
                let probe = sphere_probe(n, &x);
                if !probe.bijective {
                    report.fail(format!(
                        "maps S({n}) -> X ({}) do not match parallel {n}-cell pairs ({})",
                        probe.maps, probe.parallel_pairs
                    ));
                }
            }
            report
        }
    };
    Ok(Outcome::report(&report))
}

fn variety_command(inv: &Invocation, command: &VarietyCommand) -> Result<Outcome, CliError> {
    let generators = |k: usize| (1..=k).map(|i| format!("x{i}")).collect::<Vec<_>>();
    match command {
        VarietyCommand::Free {
            signature,
            gen,
            stages,
            rounds,
        } => {
            let theory = read_theory(signature)?;
            let mut b = budgets(inv, Budgets::new(1, 3, 1)?)?;
            if let Some(s) = stages {
                b.stages = *s;
            }
            if let Some(r) = rounds {
                b.rounds = *r;
            }
            b.validate()?;
            let a = free_algebra_approx(&theory, &generators(*gen), b)?;
            let mut text = format!("free algebra on {gen} generators, budgets S={} R={}\n", b.stages, b.rounds);
            for (i, r) in a.rounds.iter().enumerate() {
                let sizes: Vec<String> = r.stage_sizes.iter().map(usize::to_string).collect();
                text.push_str(&format!(
                    "round {} stage sizes {} classes {}\n",
                    i + 1,
                    sizes.join(","),
                    r.classes
                ));
            }
            let forms = a.normal_forms(u32::MAX);
            text.push_str(&format!("normal forms {}\n", forms.len()));
            for f in &forms {
                text.push_str(&format!("  {f}\n"));
            }
            text.push_str(&ledger_text(&a.ledger));
            let rounds: Vec<Value> = a
                .rounds
                .iter()
                .map(|r| json!({"stage_sizes": r.stage_sizes, "classes": r.classes}))
                .collect();
            Ok(Outcome::ok(
                text,
                json!({"rounds": rounds, "normal_forms": forms, "ledger": a.ledger}),
            ))
        }
        VarietyCommand::Compare { signature, gen, depth } => {
            let theory = read_theory(signature)?;
            Ok(Outcome::report(&compare_with_oracle(&theory, &generators(*gen), *depth)?))
        }
    }
}

fn model_outcome(fm: &FreeModelApprox) -> Outcome {
    let mut text = format!(
        "free model level {} budgets {}{}\ncensus {}\n",
        fm.level,
        fm.budgets,
        fm.table.as_ref().map(|t| format!(" on {t}")).unwrap_or_default(),
        fm.carrier.census_string()
    );
    let mut births: BTreeMap<(u32, u32, u32), usize> = BTreeMap::new();
    for &c in fm.carrier.cells() {
        let b = fm.birth(c);
        *births.entry((b.round, b.level, b.stage)).or_default() += 1;
    }
    for ((r, l, s), n) in &births {
        text.push_str(&format!("born round={r} level={l} stage={s}: {n}\n"));
    }
    text.push_str(&ledger_text(&fm.ledger));
    text.push_str(&fm.carrier.to_text());
    Outcome::ok(
        text,
        json!({
            "level": fm.level,
            "budgets": fm.budgets.to_string(),
            "census": fm.carrier.census(),
            "ledger": fm.ledger,
            "object": fm.carrier.to_text(),
        }),
    )
}

fn ledger_text(ledger: &Ledger) -> String {
    if ledger.is_empty() {
        return "ledger: empty\n".into();
    }
    let mut out = String::from("ledger:\n");
    for line in ledger.summary().lines() {
        out.push_str(&format!("  {line}\n"));
    }
    out
}

fn provenance_lines(fm: &FreeModelApprox, term: &Term, depth: usize, out: &mut Vec<String>) -> Result<(), CliError> {
    let x = &fm.carrier;
    let cell = (0..=x.max_dim())
        .find_map(|d| x.find(d, term))
        .ok_or_else(|| CliError::Usage(format!("no cell `{term}` in the level-{} model", fm.level)))?;
    let b = fm.birth(cell);
    let pad = "  ".repeat(depth);
    let boundary = x
        .boundary(cell)
        .map(|(s, t)| format!(" {} -> {}", x.term(s), x.term(t)))
        .unwrap_or_default();
    let origin = match term.kind() {
        TermKind::Gen(_) => "input".to_string(),
        TermKind::App { level, index, part, .. } => format!("filler part {part} of attachment {level}.{index}"),
    };
    out.push(format!(
        "{pad}{term} dim={}{boundary} born round={} level={} stage={} ({origin})",
        cell.dim, b.round, b.level, b.stage
    ));
    if let TermKind::App { args, .. } = term.kind() {
        let mut seen = Vec::new();
        for a in args {
            if a.is_gen() || seen.contains(a) {
                continue;
            }
            seen.push(a.clone());
            provenance_lines(fm, a, depth + 1, out)?;
        }
    }
    Ok(())
}

fn show_map(m: &GlobularMap) -> String {
    let parts: Vec<String> = m
        .dom()
        .cells()
        .iter()
        .map(|&c| format!("{}->{}", m.dom().term(c), m.cod().term(m.apply(c))))
        .collect();
    parts.join(" ")
}

/// Parses a table literal such as `(1,0,2,1,2)`.
pub fn parse_table(s: &str) -> Result<DimensionTable, CliError> {
    Ok(s.parse::<DimensionTable>()?)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_globset(path: &Path) -> Result<GlobularSet, CliError> {
    GlobularSet::parse(&read(path)?).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

fn read_theory(path: &Path) -> Result<Theory, CliError> {
    Theory::parse(&read(path)?).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Reads a tower file: a [`TowerSpec`] text.
pub fn read_tower_spec(path: &Path) -> Result<TowerSpec, CliError> {
    TowerSpec::parse(&read(path)?).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

fn budgets(inv: &Invocation, base: Budgets) -> Result<Budgets, CliError> {
    Ok(match &inv.budget {
        Some(text) => base.with_overrides(text)?,
        None => base,
    })
}

fn load_tower(inv: &Invocation, path: &Path, warn: &mut dyn Write) -> Result<Tower, CliError> {
    let mut spec = read_tower_spec(path)?;
    spec.budgets = budgets(inv, spec.budgets)?;
    build(inv, spec, warn)
}

fn build(inv: &Invocation, spec: TowerSpec, warn: &mut dyn Write) -> Result<Tower, CliError> {
    let store = match &inv.cache {
        Some(path) => {
            let (cache, problem) = FileCache::open(path, &spec);
            if let Some(p) = problem {
                let _ = writeln!(warn, "warning: {p}; rebuilding the cache");
            }
            Some(Box::new(cache) as Box<dyn ModelStore>)
        }
        None => None,
    };
    Ok(Tower::build_with(
        spec,
        TowerOptions {
            store,
            work_limit: inv.work_limit,
        },
    )?)
}

/// The on-disk cache: free models keyed by tower hash, level, table and
/// budgets.
#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    models: BTreeMap<String, FreeModelApprox>,
}

const CACHE_VERSION: u32 = 1;

/// A [`ModelStore`] backed by one JSON file; every save rewrites it.
pub struct FileCache {
    path: PathBuf,
    tower: String,
    data: Mutex<CacheFile>,
}

impl FileCache {
    /// Opens (or starts) the cache at `path` for the tower `spec`. An
    /// unreadable or corrupt file is replaced; the problem is returned.
    pub fn open(path: &Path, spec: &TowerSpec) -> (FileCache, Option<String>) {
        let tower = tower_hash(spec);
        let (data, problem) = match fs::read(path) {
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (CacheFile::default(), None),
            Err(e) => (CacheFile::default(), Some(format!("cache {} unreadable: {e}", path.display()))),
            Ok(bytes) => match serde_json::from_slice::<CacheFile>(&bytes) {
                Ok(c) if c.version == CACHE_VERSION => (c, None),
                Ok(c) => (
                    CacheFile::default(),
                    Some(format!("cache {} has version {}", path.display(), c.version)),
                ),
                Err(e) => (CacheFile::default(), Some(format!("cache {} is corrupt: {e}", path.display()))),
            },
        };
        let cache = FileCache {
            path: path.to_path_buf(),
            tower,
            data: Mutex::new(CacheFile {
                version: CACHE_VERSION,
                ..data
            }),
        };
        (cache, problem)
    }

    fn key(&self, level: u32, table: &DimensionTable, budgets: &Budgets) -> String {
        format!("{}/{level}/{table}/{budgets}", self.tower)
    }

    /// Number of cached models.
    pub fn len(&self) -> usize {
        self.data.lock().expect("cache lock").models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ModelStore for FileCache {
    fn load(&self, level: u32, table: &DimensionTable, budgets: &Budgets) -> Option<FreeModelApprox> {
        let key = self.key(level, table, budgets);
        self.data.lock().expect("cache lock").models.get(&key).cloned()
    }

    fn save(&self, model: &FreeModelApprox) {
        let Some(table) = &model.table else { return };
        let key = self.key(model.level, table, &model.budgets);
        let mut data = self.data.lock().expect("cache lock");
        data.models.insert(key, model.clone());
        // A failed write only loses the cache, never a result.
        if let Ok(bytes) = serde_json::to_vec(&*data) {
            let tmp = self.path.with_extension("tmp");
            if fs::write(&tmp, bytes).is_ok() {
                let _ = fs::rename(&tmp, &self.path);
            }
        }
    }
}

/// SHA-256 of the tower file text, hex encoded.
pub fn tower_hash(spec: &TowerSpec) -> String {
    let digest = Sha256::digest(spec.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("globtower").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn realize_and_homs() {
        let (code, out, _) = run_str(&["realize", "(1,0,2,1,2)"]);
        assert_eq!(code, 0);
        assert!(out.contains("census {0:3, 1:4, 2:2}"), "{out}");
        let (code, out, _) = run_str(&["homs", "(0)", "(1)"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("2 maps (0) -> (1)"), "{out}");
    }

    #[test]
    fn parse_errors_exit_3() {
        let (code, _, err) = run_str(&["realize", "(1,2)"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("even length"), "{err}");
        let (code, _, _) = run_str(&["no-such-command"]);
        assert_eq!(code, EXIT_ERROR);
        let (code, _, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
    }

    #[test]
    fn machine_format_is_json() {
        let (code, out, _) = run_str(&["--format", "machine", "homs", "(0)", "(1)"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["count"], 2);
    }

    #[test]
    fn globularity_of_a_table() {
        let (code, out, _) = run_str(&["check", "globularity", "(1,0,2,1,2)"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.starts_with("pass "), "{out}");
    }
}
