//! The Set-level instance: finitary algebras as algebraic injectives.
//!
//! An `n`-ary operation symbol is the attachment `n ↪ n + 1` over finite
//! sets, so free algebras grow as semifinal lifting chains of
//! [`FinSetBase`]. An equation `t = s` in `n` variables is the quotient
//! `F(n) → F(n)/⟨t = s⟩`; since that arrow is surjective, liftings along it
//! are unique when they exist, and the semifinal lifting of a quotient is
//! the quotient by the generated congruence. Free algebras therefore
//! alternate rounds of growth (chains) and quotienting (congruence closure
//! among the terms present).
//!
//! [`term_oracle`] recomputes the same truncated quotient by brute force,
//! sharing no code with the engine path, and [`compare_with_oracle`] checks
//! that the two agree.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{free_injective, Attachment, EngineError, FinMap, FinSet, FinSetBase, InjectiveStructure};
use crate::globset::Cell;
use crate::ledger::{Ledger, SkipKind};
use crate::term::{Term, TermKind};
use crate::tower::Budgets;
use crate::verify::CheckReport;

/// The level of operation attachments.
pub const OPERATION_LEVEL: u32 = 1;
/// The level of equation quotients.
pub const EQUATION_LEVEL: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VarietyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("operation `{name}` has arity {arity}, used with {got} arguments")]
    Arity { name: String, arity: usize, got: usize },
    #[error("variable v{var} is outside v1..v{vars}")]
    Variable { var: usize, vars: usize },
    #[error("operation `{0}` declared twice")]
    Duplicate(String),
    #[error("no object: empty signature file")]
    Empty,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// An operation symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub name: String,
    pub arity: usize,
}

/// A finitary signature: operation symbols in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub ops: Vec<Operation>,
}

impl Signature {
    pub fn new(ops: Vec<Operation>) -> Result<Signature, VarietyError> {
        let mut seen = std::collections::HashSet::new();
        for op in &ops {
            if !seen.insert(op.name.as_str()) {
                return Err(VarietyError::Duplicate(op.name.clone()));
            }
        }
        Ok(Signature { ops })
    }

    /// One binary symbol `m`.
    pub fn magma() -> Signature {
        Signature {
            ops: vec![Operation {
                name: "m".into(),
                arity: 2,
            }],
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.name == name)
    }
}

/// A term over a signature in variables `v1, v2, …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SigTerm {
    /// Variable `v{k}`, `k >= 1`.
    Var(usize),
    /// Operation (by signature position) applied to arguments.
    Op(usize, Vec<SigTerm>),
}

impl SigTerm {
    fn vars_into(&self, out: &mut Vec<usize>) {
        match self {
            SigTerm::Var(k) => {
                if !out.contains(k) {
                    out.push(*k);
                }
            }
            SigTerm::Op(_, args) => args.iter().for_each(|a| a.vars_into(out)),
        }
    }

    /// Renders in prefix notation.
    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a SigTerm, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.0 {
                    SigTerm::Var(k) => write!(f, "v{k}"),
                    SigTerm::Op(i, args) => {
                        f.write_str(&self.1.ops[*i].name)?;
                        if args.is_empty() {
                            return Ok(());
                        }
                        f.write_str("(")?;
                        for (n, a) in args.iter().enumerate() {
                            if n > 0 {
                                f.write_str(",")?;
                            }
                            write!(f, "{}", D(a, self.1))?;
                        }
                        f.write_str(")")
                    }
                }
            }
        }
        D(self, sig)
    }
}

/// An equation `lhs = rhs` in the variables `v1..v{vars}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationSpec {
    pub vars: usize,
    pub lhs: SigTerm,
    pub rhs: SigTerm,
}

impl EquationSpec {
    /// Associativity of the binary operation at position `op`.
    pub fn associativity(op: usize) -> EquationSpec {
        let m = |a, b| SigTerm::Op(op, vec![a, b]);
        let v = SigTerm::Var;
        EquationSpec {
            vars: 3,
            lhs: m(m(v(1), v(2)), v(3)),
            rhs: m(v(1), m(v(2), v(3))),
        }
    }

    /// Commutativity of the binary operation at position `op`.
    pub fn commutativity(op: usize) -> EquationSpec {
        EquationSpec {
            vars: 2,
            lhs: SigTerm::Op(op, vec![SigTerm::Var(1), SigTerm::Var(2)]),
            rhs: SigTerm::Op(op, vec![SigTerm::Var(2), SigTerm::Var(1)]),
        }
    }
}

/// A signature with equations: a presentation of a variety.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Theory {
    pub signature: Signature,
    pub equations: Vec<EquationSpec>,
}

impl Theory {
    /// Parses the signature file format:
    ///
    /// ```text
    /// op m arity 2
    /// eq 3 : m(m(v1,v2),v3) = m(v1,m(v2,v3))
    /// ```
    ///
    /// Terms are in prefix notation `name(t1,...,tk)`; constants may be
    /// written `name` or `name()`. Lines starting with `%` are comments.
    pub fn parse(text: &str) -> Result<Theory, VarietyError> {
        let mut ops = Vec::new();
        let mut raw_eqs = Vec::new();
        let mut any = false;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |msg: String| VarietyError::Parse { line, msg };
            let l = raw.trim();
            if l.is_empty() || l.starts_with('%') {
                continue;
            }
            any = true;
            let words: Vec<&str> = l.split_whitespace().collect();
            match words[0] {
                "op" => {
                    let [_, name, "arity", k] = words[..] else {
                        return Err(err("expected `op <name> arity <n>`".into()));
                    };
                    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || is_variable(name) {
                        return Err(err(format!("bad operation name `{name}`")));
                    }
                    let arity = k.parse().map_err(|_| err(format!("bad arity `{k}`")))?;
                    ops.push(Operation {
                        name: name.to_string(),
                        arity,
                    });
                }
                "eq" => {
                    let rest = l[2..].trim();
                    let (vars, body) = rest
                        .split_once(':')
                        .ok_or_else(|| err("expected `eq <vars> : <term> = <term>`".into()))?;
                    let vars = vars.trim();
                    let vars = vars.parse::<usize>().or_else(|_| {
                        let names: Vec<&str> = vars.split(',').map(str::trim).collect();
                        let ok = names.iter().enumerate().all(|(i, v)| *v == format!("v{}", i + 1));
                        if ok {
                            Ok(names.len())
                        } else {
                            Err(err(format!("bad variable list `{vars}`")))
                        }
                    })?;
                    let (lhs, rhs) = body
                        .split_once('=')
                        .ok_or_else(|| err("expected `<term> = <term>`".into()))?;
                    raw_eqs.push((line, vars, lhs.trim().to_string(), rhs.trim().to_string()));
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        if !any {
            return Err(VarietyError::Empty);
        }
        let signature = Signature::new(ops)?;
        let mut equations = Vec::new();
        for (line, vars, lhs, rhs) in raw_eqs {
            let parse = |s: &str| {
                parse_sig_term(&signature, vars, s).map_err(|e| match e {
                    VarietyError::Parse { msg, .. } => VarietyError::Parse { line, msg },
                    other => other,
                })
            };
            equations.push(EquationSpec {
                vars,
                lhs: parse(&lhs)?,
                rhs: parse(&rhs)?,
            });
        }
        Ok(Theory { signature, equations })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for op in &self.signature.ops {
            out.push_str(&format!("op {} arity {}\n", op.name, op.arity));
        }
        for e in &self.equations {
            out.push_str(&format!(
                "eq {} : {} = {}\n",
                e.vars,
                e.lhs.display(&self.signature),
                e.rhs.display(&self.signature)
            ));
        }
        out
    }
}

fn is_variable(s: &str) -> bool {
    s.len() > 1 && s.starts_with('v') && s[1..].chars().all(|c| c.is_ascii_digit())
}

/// Parses a prefix-notation term in the variables `v1..v{vars}`.
pub fn parse_sig_term(sig: &Signature, vars: usize, s: &str) -> Result<SigTerm, VarietyError> {
    struct P<'a> {
        s: &'a [u8],
        pos: usize,
    }
    impl P<'_> {
        fn err(&self, msg: &str) -> VarietyError {
            VarietyError::Parse {
                line: 0,
                msg: format!("{msg} at column {}", self.pos + 1),
            }
        }
        fn ws(&mut self) {
            while self.s.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
                self.pos += 1;
            }
        }
        fn term(&mut self, sig: &Signature, vars: usize) -> Result<SigTerm, VarietyError> {
            self.ws();
            let start = self.pos;
            while self.s.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
            if name.is_empty() {
                return Err(self.err("expected a name"));
            }
            self.ws();
            let mut args = Vec::new();
            let has_parens = self.s.get(self.pos) == Some(&b'(');
            if has_parens {
                self.pos += 1;
                self.ws();
                if self.s.get(self.pos) == Some(&b')') {
                    self.pos += 1;
                } else {
                    loop {
                        args.push(self.term(sig, vars)?);
                        self.ws();
                        match self.s.get(self.pos) {
                            Some(b',') => self.pos += 1,
                            Some(b')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.err("expected `,` or `)`")),
                        }
                    }
                }
            }
            if is_variable(name) && !has_parens {
                let k: usize = name[1..].parse().map_err(|_| self.err("bad variable"))?;
                if k == 0 || k > vars {
                    return Err(VarietyError::Variable { var: k, vars });
                }
                return Ok(SigTerm::Var(k));
            }
            let i = sig
                .position(name)
                .ok_or_else(|| VarietyError::UnknownOperation(name.to_string()))?;
            if sig.ops[i].arity != args.len() {
                return Err(VarietyError::Arity {
                    name: name.to_string(),
                    arity: sig.ops[i].arity,
                    got: args.len(),
                });
            }
            Ok(SigTerm::Op(i, args))
        }
    }
    let mut p = P { s: s.as_bytes(), pos: 0 };
    let t = p.term(sig, vars)?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(t)
}

/// One attachment `n ↪ n + 1` per operation symbol of arity `n`.
pub fn family_of_signature(sig: &Signature) -> Arc<Vec<Attachment<FinSetBase>>> {
    Arc::new(
        sig.ops
            .iter()
            .enumerate()
            .map(|(i, op)| {
                Attachment::direct(
                    &FinSetBase,
                    OPERATION_LEVEL,
                    i as u32,
                    FinMap::standard_inclusion(op.arity, op.arity + 1),
                )
                .expect("standard inclusions are mono")
            })
            .collect(),
    )
}

/// The level-2 datum of an equation: the quotient `F(n) → F(n)/⟨t = s⟩`,
/// presented by the pair of term evaluations `t, s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationAttachment {
    pub index: u32,
    pub equation: EquationSpec,
}

impl EquationAttachment {
    /// A reflexive equation gives the identity quotient.
    pub fn is_trivial(&self) -> bool {
        self.equation.lhs == self.equation.rhs
    }

    /// The lifting of the problem `valuation: n → A` along the quotient:
    /// it exists iff both sides evaluate to the same element, and is then
    /// unique (the quotient is surjective): the factored valuation itself.
    pub fn lift(&self, algebra: &FinAlgebra, valuation: &[usize]) -> Option<Vec<usize>> {
        (algebra.eval(&self.equation.lhs, valuation) == algebra.eval(&self.equation.rhs, valuation))
            .then(|| valuation.to_vec())
    }
}

/// The quotient datum of equation number `index`.
pub fn equation_attachment(index: u32, eq: &EquationSpec) -> EquationAttachment {
    EquationAttachment {
        index,
        equation: eq.clone(),
    }
}

/// A finite algebra: elements `e0, e1, …` and one table per operation,
/// indexed by the arguments in mixed radix (first argument most significant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinAlgebra {
    pub signature: Signature,
    pub carrier: FinSet,
    pub tables: Vec<Vec<usize>>,
}

impl FinAlgebra {
    /// Validates table sizes and entries.
    pub fn new(signature: Signature, size: usize, tables: Vec<Vec<usize>>) -> Option<FinAlgebra> {
        if tables.len() != signature.ops.len() {
            return None;
        }
        for (op, t) in signature.ops.iter().zip(&tables) {
            if t.len() != size.pow(op.arity as u32) || t.iter().any(|&v| v >= size) {
                return None;
            }
        }
        let carrier = FinSet::from_terms((0..size).map(|i| Term::gen(format!("e{i}")))).expect("distinct");
        Some(FinAlgebra {
            signature,
            carrier,
            tables,
        })
    }

    pub fn size(&self) -> usize {
        self.carrier.len()
    }

    pub fn apply(&self, op: usize, args: &[usize]) -> usize {
        let idx = args.iter().fold(0, |acc, &a| acc * self.size() + a);
        self.tables[op][idx]
    }

    pub fn eval(&self, t: &SigTerm, valuation: &[usize]) -> usize {
        match t {
            SigTerm::Var(k) => valuation[k - 1],
            SigTerm::Op(i, args) => {
                let vals: Vec<usize> = args.iter().map(|a| self.eval(a, valuation)).collect();
                self.apply(*i, &vals)
            }
        }
    }

    /// A valuation violating `eq`, if any.
    pub fn violation(&self, eq: &EquationSpec) -> Option<Vec<usize>> {
        let n = self.size();
        let total = n.checked_pow(eq.vars as u32)?;
        (0..total).find_map(|mut code| {
            let mut v = vec![0; eq.vars];
            for slot in v.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            (self.eval(&eq.lhs, &v) != self.eval(&eq.rhs, &v)).then_some(v)
        })
    }

    /// Every algebra of the signature on `size` elements, in table order.
    pub fn all(signature: &Signature, size: usize) -> Vec<FinAlgebra> {
        let lens: Vec<usize> = signature.ops.iter().map(|o| size.pow(o.arity as u32)).collect();
        let cells: usize = lens.iter().sum();
        let Some(count) = size.checked_pow(cells as u32) else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(count);
        for mut code in 0..count {
            let mut flat = vec![0; cells];
            for slot in flat.iter_mut().rev() {
                *slot = code % size;
                code /= size;
            }
            let mut tables = Vec::new();
            let mut at = 0;
            for &l in &lens {
                tables.push(flat[at..at + l].to_vec());
                at += l;
            }
            out.extend(FinAlgebra::new(signature.clone(), size, tables));
        }
        out
    }
}

impl InjectiveStructure<FinSetBase> for FinAlgebra {
    fn carrier(&self) -> &FinSet {
        &self.carrier
    }

    /// The operation table is the chosen lifting of `n ↪ n + 1`.
    fn extension(&self, _base: &FinSetBase, i: usize, config: &[Cell]) -> Option<Vec<Cell>> {
        let args: Vec<usize> = config.iter().map(|c| c.idx).collect();
        Some(vec![Cell::new(0, self.apply(i, &args))])
    }
}

/// Renders a carrier element (a provenance term over generators) as a
/// signature term.
pub fn show_element(sig: &Signature, t: &Term) -> String {
    match t.kind() {
        TermKind::Gen(n) => n.to_string(),
        TermKind::App { index, args, .. } => {
            let name = &sig.ops[*index as usize].name;
            if args.is_empty() {
                return name.clone();
            }
            let parts: Vec<String> = args.iter().map(|a| show_element(sig, a)).collect();
            format!("{name}({})", parts.join(","))
        }
    }
}

/// The canonical order on elements: by depth, then generators before
/// operations, generators by name, operations by declaration order, then
/// arguments left to right in the same order.
pub fn canonical_cmp(a: &Term, b: &Term) -> Ordering {
    a.depth().cmp(&b.depth()).then_with(|| match (a.kind(), b.kind()) {
        (TermKind::Gen(x), TermKind::Gen(y)) => x.cmp(y),
        (TermKind::Gen(_), TermKind::App { .. }) => Ordering::Less,
        (TermKind::App { .. }, TermKind::Gen(_)) => Ordering::Greater,
        (TermKind::App { index: i, args: xs, .. }, TermKind::App { index: j, args: ys, .. }) => i.cmp(j).then_with(|| {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| canonical_cmp(x, y))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| xs.len().cmp(&ys.len()))
        }),
    })
}

/// Sizes and merges of one grow-then-quotient round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    /// Cumulative chain stage sizes of the growth phase.
    pub stage_sizes: Vec<usize>,
    /// Number of classes after quotienting.
    pub classes: usize,
}

/// A truncated free algebra: canonical representatives (normal forms) of
/// the congruence classes found, and the classes of the last round.
#[derive(Clone, Debug)]
pub struct FreeAlgebraApprox {
    pub theory: Theory,
    /// Normal forms in canonical order.
    pub carrier: FinSet,
    pub rounds: Vec<RoundRecord>,
    /// Every term present in the last round, with its normal form.
    pub normal_form: HashMap<Term, Term>,
    pub ledger: Ledger,
}

impl FreeAlgebraApprox {
    /// Normal forms of depth at most `depth`, rendered, in canonical order.
    pub fn normal_forms(&self, depth: u32) -> Vec<String> {
        self.carrier
            .terms()
            .iter()
            .filter(|t| t.depth() <= depth)
            .map(|t| show_element(&self.theory.signature, t))
            .collect()
    }

    /// The normal form of `op(args)` for normal forms `args`, when the last
    /// round contains that application.
    pub fn apply(&self, op: usize, args: &[Term]) -> Option<&Term> {
        self.normal_form.get(&Term::app(OPERATION_LEVEL, op as u32, 0, args.to_vec()))
    }
}

/// The free algebra on generators `gens`, truncated: `R` rounds, each
/// growing `S` chain stages of operation applications, then quotienting by
/// the congruence generated by the equation instances whose two sides are
/// both present. Normal forms are canonical-order minima of their classes,
/// with arguments in normal form.
pub fn free_algebra_approx(theory: &Theory, gens: &[String], budgets: Budgets) -> Result<FreeAlgebraApprox, VarietyError> {
    let family = family_of_signature(&theory.signature);
    let mut carrier = FinSet::from_terms(gens.iter().map(Term::gen))
        .ok_or_else(|| VarietyError::Duplicate("generator".into()))?;
    let mut rounds = Vec::new();
    let mut ledger = Ledger::new();
    let mut normal_form = HashMap::new();
    for round in 1..=budgets.rounds {
        let (chain, inj) = free_injective(&FinSetBase, family.clone(), carrier.clone(), budgets.stages)?;
        let grown = inj.into_carrier();
        let (reps, nf) = quotient(theory, &grown);
        rounds.push(RoundRecord {
            stage_sizes: chain.stage_sizes(),
            classes: reps.len(),
        });
        let stable = chain.stabilized_at.is_some() && reps.len() == carrier.len();
        if round == budgets.rounds || stable {
            for e in chain.ledger.entries() {
                ledger.record_many(e.kind, e.context.clone(), e.count, &e.sample);
            }
        }
        carrier = reps;
        normal_form = nf;
        if stable {
            break;
        }
    }
    if !theory.equations.is_empty() && !carrier.is_empty() {
        let open = ledger.total(SkipKind::Stage);
        if open > 0 {
            ledger.record_many(
                SkipKind::Stage,
                "equation instances beyond the last round",
                open,
                "instances with a side not yet built",
            );
        }
    }
    Ok(FreeAlgebraApprox {
        theory: theory.clone(),
        carrier,
        rounds,
        normal_form,
        ledger,
    })
}

/// Quotients a subterm-closed set of elements by the congruence generated
/// by the equation instances with both sides present; returns the normal
/// forms (canonical order) and the normal form of every element.
fn quotient(theory: &Theory, x: &FinSet) -> (FinSet, HashMap<Term, Term>) {
    let n = x.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| -> bool {
        let (ra, rb) = (root(parent, a), root(parent, b));
        if ra == rb {
            return false;
        }
        parent[ra.max(rb)] = ra.min(rb);
        true
    };
    for eq in &theory.equations {
        let mut lhs_vars = Vec::new();
        eq.lhs.vars_into(&mut lhs_vars);
        let mut rhs_vars = Vec::new();
        eq.rhs.vars_into(&mut rhs_vars);
        let (pattern, other, pattern_vars) = if rhs_vars.iter().all(|v| lhs_vars.contains(v)) {
            (&eq.lhs, &eq.rhs, &lhs_vars)
        } else {
            (&eq.rhs, &eq.lhs, &rhs_vars)
        };
        let free: Vec<usize> = (1..=eq.vars)
            .filter(|v| !pattern_vars.contains(v))
            .filter(|v| {
                let mut o = Vec::new();
                other.vars_into(&mut o);
                o.contains(v)
            })
            .collect();
        for i in 0..n {
            let mut sigma: Vec<Option<Term>> = vec![None; eq.vars + 1];
            if !match_pattern(pattern, &x.terms()[i], &mut sigma) {
                continue;
            }
            // Variables only on the other side range over all elements.
            let mut code = vec![0usize; free.len()];
            loop {
                for (slot, &v) in code.iter().zip(&free) {
                    sigma[v] = Some(x.terms()[*slot].clone());
                }
                if let Some(j) = build(other, &sigma).and_then(|t| x.position(&t)) {
                    union(&mut parent, i, j);
                }
                let mut k = code.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    code[k] += 1;
                    if code[k] < n {
                        break;
                    }
                    code[k] = 0;
                }
                if code.iter().all(|&c| c == 0) {
                    break;
                }
            }
        }
    }
    // Congruence: applications with equivalent arguments are equivalent.
    let args: Vec<Option<(u32, Vec<usize>)>> = x
        .terms()
        .iter()
        .map(|t| match t.kind() {
            TermKind::Gen(_) => None,
            TermKind::App { index, args, .. } => Some((
                *index,
                args.iter().map(|a| x.position(a).expect("subterm-closed")).collect(),
            )),
        })
        .collect();
    loop {
        let mut changed = false;
        let mut seen: HashMap<(u32, Vec<usize>), usize> = HashMap::new();
        for (i, a) in args.iter().enumerate() {
            let Some((op, xs)) = a else { continue };
            let key = (*op, xs.iter().map(|&j| root(&mut parent, j)).collect());
            match seen.get(&key) {
                Some(&k) => changed |= union(&mut parent, i, k),
                None => {
                    seen.insert(key, i);
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Minimal member per class, then arguments replaced by their normal
    // forms (smaller depth first, so arguments are done before their uses).
    let mut min: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        let better = match min.get(&r) {
            None => true,
            Some(&m) => canonical_cmp(&x.terms()[i], &x.terms()[m]).is_lt(),
        };
        if better {
            min.insert(r, i);
        }
    }
    let mut order: Vec<usize> = min.values().copied().collect();
    order.sort_by(|&a, &b| canonical_cmp(&x.terms()[a], &x.terms()[b]));
    let mut class_nf: HashMap<usize, Term> = HashMap::new();
    for &m in &order {
        let t = &x.terms()[m];
        let nf = match (t.kind(), &args[m]) {
            (TermKind::App { level, index, part, .. }, Some((_, xs))) => Term::app(
                *level,
                *index,
                *part,
                xs.iter().map(|&j| class_nf[&root(&mut parent, j)].clone()).collect(),
            ),
            _ => t.clone(),
        };
        class_nf.insert(root(&mut parent, m), nf);
    }
    let mut reps: Vec<Term> = class_nf.values().cloned().collect();
    reps.sort_by(canonical_cmp);
    let nf: HashMap<Term, Term> = (0..n)
        .map(|i| (x.terms()[i].clone(), class_nf[&root(&mut parent, i)].clone()))
        .collect();
    (FinSet::from_terms(reps).expect("one normal form per class"), nf)
}

/// Syntactic matching of a pattern against an element's term.
fn match_pattern(p: &SigTerm, t: &Term, sigma: &mut [Option<Term>]) -> bool {
    match p {
        SigTerm::Var(k) => match &sigma[*k] {
            Some(bound) => bound == t,
            None => {
                sigma[*k] = Some(t.clone());
                true
            }
        },
        SigTerm::Op(i, ps) => match t.kind() {
            TermKind::App { index, args, .. } if *index as usize == *i && args.len() == ps.len() => {
                ps.iter().zip(args).all(|(p, a)| match_pattern(p, a, sigma))
            }
            _ => false,
        },
    }
}

fn build(p: &SigTerm, sigma: &[Option<Term>]) -> Option<Term> {
    match p {
        SigTerm::Var(k) => sigma[*k].clone(),
        SigTerm::Op(i, ps) => Some(Term::app(
            OPERATION_LEVEL,
            *i as u32,
            0,
            ps.iter().map(|q| build(q, sigma)).collect::<Option<Vec<_>>>()?,
        )),
    }
}

/// The oracle's own term representation.
#[derive(Debug, PartialEq, Eq, Hash)]
enum OTerm {
    Leaf(String),
    Node(usize, Vec<Rc<OTerm>>),
}

fn o_depth(t: &OTerm) -> usize {
    match t {
        OTerm::Leaf(_) => 0,
        OTerm::Node(_, a) => 1 + a.iter().map(|x| o_depth(x)).max().unwrap_or(0),
    }
}

fn o_cmp(a: &OTerm, b: &OTerm) -> Ordering {
    match o_depth(a).cmp(&o_depth(b)) {
        Ordering::Equal => {}
        o => return o,
    }
    match (a, b) {
        (OTerm::Leaf(x), OTerm::Leaf(y)) => x.cmp(y),
        (OTerm::Leaf(_), OTerm::Node(..)) => Ordering::Less,
        (OTerm::Node(..), OTerm::Leaf(_)) => Ordering::Greater,
        (OTerm::Node(i, xs), OTerm::Node(j, ys)) => {
            if i != j {
                return i.cmp(j);
            }
            for (x, y) in xs.iter().zip(ys) {
                let o = o_cmp(x, y);
                if o != Ordering::Equal {
                    return o;
                }
            }
            xs.len().cmp(&ys.len())
        }
    }
}

fn o_show(sig: &Signature, t: &OTerm) -> String {
    match t {
        OTerm::Leaf(n) => n.clone(),
        OTerm::Node(i, a) if a.is_empty() => sig.ops[*i].name.clone(),
        OTerm::Node(i, a) => format!(
            "{}({})",
            sig.ops[*i].name,
            a.iter().map(|x| o_show(sig, x)).collect::<Vec<_>>().join(",")
        ),
    }
}

/// Unifies pattern `p` with the concrete term `t` under a partial valuation.
fn o_unify(p: &SigTerm, t: &Rc<OTerm>, val: &mut HashMap<usize, Rc<OTerm>>) -> bool {
    match p {
        SigTerm::Var(k) => match val.get(k) {
            Some(b) => **b == **t,
            None => {
                val.insert(*k, t.clone());
                true
            }
        },
        SigTerm::Op(i, ps) => match &**t {
            OTerm::Node(j, args) if i == j && args.len() == ps.len() => {
                ps.iter().zip(args).all(|(p, a)| o_unify(p, a, val))
            }
            _ => false,
        },
    }
}

/// The oracle's answer: classes of all terms up to a depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleClasses {
    /// Class representatives (canonical minima), rendered, in canonical order.
    pub representatives: Vec<String>,
    /// Every enumerated term, rendered, with its class representative.
    pub class_of: HashMap<String, String>,
}

/// Brute force: enumerates every term of depth at most `depth` over the
/// generators, unions `lσ`, `rσ` for every pair of enumerated terms that
/// are instances of the two sides of an equation under one valuation, and
/// closes under the operations by fixpoint iteration.
pub fn term_oracle(theory: &Theory, gens: &[String], depth: u32) -> OracleClasses {
    let sig = &theory.signature;
    let mut all: Vec<Rc<OTerm>> = gens.iter().map(|g| Rc::new(OTerm::Leaf(g.clone()))).collect();
    let mut by_depth_start = vec![0usize];
    for _ in 0..depth {
        let prev = all.clone();
        let mut next = Vec::new();
        for (i, op) in sig.ops.iter().enumerate() {
            // All argument tuples from `prev` with at least one argument of
            // the maximal previous depth (so each term is produced once).
            let d_prev = prev.iter().map(|t| o_depth(t)).max();
            let k = op.arity;
            let total = prev.len().pow(k as u32);
            for mut code in 0..total {
                let mut args = Vec::with_capacity(k);
                for _ in 0..k {
                    args.push(prev[code % prev.len().max(1)].clone());
                    code /= prev.len().max(1);
                }
                args.reverse();
                let t = OTerm::Node(i, args);
                let d = o_depth(&t);
                let new = match d_prev {
                    None => true,
                    Some(dp) => d == dp + 1 || (k == 0 && by_depth_start.len() == 1),
                };
                if new && !all.iter().any(|x| **x == t) && !next.iter().any(|x: &Rc<OTerm>| **x == t) {
                    next.push(Rc::new(t));
                }
            }
        }
        by_depth_start.push(all.len());
        all.extend(next);
    }
    let n = all.len();
    let mut class: Vec<usize> = (0..n).collect();
    fn find(c: &mut Vec<usize>, i: usize) -> usize {
        if c[i] == i {
            i
        } else {
            let r = find(c, c[i]);
            c[i] = r;
            r
        }
    }
    for eq in &theory.equations {
        for a in 0..n {
            for b in 0..n {
                let mut val = HashMap::new();
                if o_unify(&eq.lhs, &all[a], &mut val) && o_unify(&eq.rhs, &all[b], &mut val) {
                    let (ra, rb) = (find(&mut class, a), find(&mut class, b));
                    class[ra] = rb;
                }
            }
        }
    }
    let index: HashMap<&OTerm, usize> = all.iter().enumerate().map(|(i, t)| (&**t, i)).collect();
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in (a + 1)..n {
                let (OTerm::Node(i, xs), OTerm::Node(j, ys)) = (&*all[a], &*all[b]) else {
                    continue;
                };
                if i != j || find(&mut class, a) == find(&mut class, b) {
                    continue;
                }
                let same = xs
                    .iter()
                    .zip(ys)
                    .all(|(x, y)| find(&mut class, index[&**x]) == find(&mut class, index[&**y]));
                if same {
                    let (ra, rb) = (find(&mut class, a), find(&mut class, b));
                    class[ra] = rb;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut best: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = find(&mut class, i);
        let e = best.entry(r).or_insert(i);
        if o_cmp(&all[i], &all[*e]) == Ordering::Less {
            *e = i;
        }
    }
    let mut reps: Vec<usize> = best.values().copied().collect();
    reps.sort_by(|&a, &b| o_cmp(&all[a], &all[b]));
    let class_of = (0..n)
        .map(|i| {
            let r = find(&mut class, i);
            (o_show(sig, &all[i]), o_show(sig, &all[best[&r]]))
        })
        .collect();
    OracleClasses {
        representatives: reps.iter().map(|&i| o_show(sig, &all[i])).collect(),
        class_of,
    }
}

/// Engine against oracle on the window of depth at most `depth`: the
/// engine is run with one round of `depth` stages; its normal forms must
/// be exactly the oracle's representatives, generators must stay apart
/// exactly as in the oracle, and every application of an operation to
/// normal forms must land in the same class on both sides.
pub fn compare_with_oracle(theory: &Theory, gens: &[String], depth: u32) -> Result<CheckReport, VarietyError> {
    let sig = &theory.signature;
    let mut report = CheckReport::new(format!("variety vs oracle depth<={depth}"));
    let budgets = Budgets {
        dim: 1,
        stages: depth.max(1),
        rounds: 1,
    };
    let engine = if depth == 0 {
        None
    } else {
        Some(free_algebra_approx(theory, gens, budgets)?)
    };
    let oracle = term_oracle(theory, gens, depth);
    let engine_nfs: Vec<String> = match &engine {
        Some(e) => e.normal_forms(depth),
        None => gens.to_vec(),
    };
    report.checked += engine_nfs.len().max(oracle.representatives.len()) as u64;
    if engine_nfs != oracle.representatives {
        let extra: Vec<&String> = engine_nfs.iter().filter(|s| !oracle.representatives.contains(s)).collect();
        let missing: Vec<&String> = oracle.representatives.iter().filter(|s| !engine_nfs.contains(s)).collect();
        report.fail(format!(
            "normal forms differ: {} engine, {} oracle; engine only {:?}; oracle only {:?}",
            engine_nfs.len(),
            oracle.representatives.len(),
            extra.iter().take(5).collect::<Vec<_>>(),
            missing.iter().take(5).collect::<Vec<_>>()
        ));
    }
    for g in gens {
        report.checked += 1;
        if oracle.class_of.get(g) != Some(g) && engine_nfs.contains(g) {
            report.fail(format!("generator {g} is identified by the oracle but not by the engine"));
        }
    }
    if let Some(e) = &engine {
        let nfs: Vec<Term> = e.carrier.terms().iter().filter(|t| t.depth() < depth).cloned().collect();
        for (i, op) in sig.ops.iter().enumerate() {
            let total = nfs.len().pow(op.arity as u32);
            for mut code in 0..total {
                let mut args = vec![nfs.first().cloned().unwrap_or_else(|| Term::gen("")); op.arity];
                for slot in args.iter_mut().rev() {
                    *slot = nfs[code % nfs.len()].clone();
                    code /= nfs.len();
                }
                let Some(got) = e.apply(i, &args) else {
                    continue;
                };
                let app = show_element(sig, &Term::app(OPERATION_LEVEL, i as u32, 0, args));
                let Some(want) = oracle.class_of.get(&app) else {
                    continue;
                };
                report.checked += 1;
                let got = show_element(sig, got);
                if got != *want {
                    report.fail(format!("{app} normalizes to {got} in the engine, {want} in the oracle"));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gens(k: usize) -> Vec<String> {
        (1..=k).map(|i| format!("x{i}")).collect()
    }

    fn theory(text: &str) -> Theory {
        Theory::parse(text).unwrap()
    }

    const MAGMA: &str = "op m arity 2\n";
    const ASSOC: &str = "op m arity 2\neq 3 : m(m(v1,v2),v3) = m(v1,m(v2,v3))\n";
    const COMM_ASSOC: &str = "op m arity 2\neq 3 : m(m(v1,v2),v3) = m(v1,m(v2,v3))\neq 2 : m(v1,v2) = m(v2,v1)\n";

    /// Independent count of binary trees of depth at most `d` over `g` leaves.
    fn trees(g: u64, d: u32) -> u64 {
        (0..d).fold(g, |t, _| g + t * t)
    }

    #[test]
    fn parse_and_render() {
        let t = theory(ASSOC);
        assert_eq!(t.signature.ops.len(), 1);
        assert_eq!(t.equations[0], EquationSpec::associativity(0));
        assert_eq!(Theory::parse(&t.to_text()).unwrap(), t);
        assert!(matches!(Theory::parse("op m arity 2\neq 2 : m(v1,v3) = v1\n"), Err(VarietyError::Variable { .. })));
        assert!(matches!(Theory::parse("op m arity 2\neq 1 : m(v1) = v1\n"), Err(VarietyError::Arity { .. })));
        assert!(matches!(Theory::parse("op m arity 2\nop m arity 1\n"), Err(VarietyError::Duplicate(_))));
        assert!(matches!(Theory::parse("% nothing\n"), Err(VarietyError::Empty)));
        let e = theory("op e arity 0\nop m arity 2\neq v1 : m(e,v1) = v1\n");
        assert_eq!(e.equations[0].vars, 1);
    }

    #[test]
    fn families_of_signatures() {
        let f = family_of_signature(&Signature::magma());
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].shape.len(), f[0].fresh_cells().len()), (2, 1));
        let c = family_of_signature(&theory("op c arity 0\n").signature);
        assert_eq!((c[0].shape.len(), c[0].fresh_cells().len()), (0, 1));
        assert!(family_of_signature(&Signature::default()).is_empty());
        let empty = free_algebra_approx(&Theory::default(), &gens(2), Budgets::new(1, 3, 2).unwrap()).unwrap();
        assert_eq!(empty.normal_forms(10), gens(2));
    }

    #[test]
    fn magma_stage_sizes_are_tree_counts() {
        let a = free_algebra_approx(&theory(MAGMA), &gens(1), Budgets::new(1, 3, 1).unwrap()).unwrap();
        let want: Vec<usize> = (0..=3).map(|d| trees(1, d) as usize).collect();
        assert_eq!(a.rounds[0].stage_sizes, want);
        assert_eq!(want, vec![1, 2, 5, 26]);
    }

    #[test]
    fn associativity_counts_words() {
        for b in 1..=2u32 {
            let a = free_algebra_approx(&theory(ASSOC), &gens(1), Budgets::new(1, b, 1).unwrap()).unwrap();
            // The free semigroup on one letter up to depth b: words a^1..a^(2^b).
            assert_eq!(a.carrier.len(), 1 << b, "depth {b}");
        }
        // At depth 3 some bracketings of one word are only related through
        // terms deeper than the window, so the window has more classes than words.
        let a = free_algebra_approx(&theory(ASSOC), &gens(1), Budgets::new(1, 3, 1).unwrap()).unwrap();
        assert!(a.carrier.len() > 8);
        // A second round reaches every word length up to 16.
        let a = free_algebra_approx(&theory(ASSOC), &gens(1), Budgets::new(1, 2, 2).unwrap()).unwrap();
        let leaves = |t: &Term| -> usize {
            fn go(t: &Term) -> usize {
                match t.kind() {
                    TermKind::Gen(_) => 1,
                    TermKind::App { args, .. } => args.iter().map(go).sum(),
                }
            }
            go(t)
        };
        let mut lengths: Vec<usize> = a.carrier.terms().iter().map(leaves).collect();
        lengths.sort();
        lengths.dedup();
        assert_eq!(lengths, (1..=16).collect::<Vec<_>>());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(term_oracle(&theory(MAGMA), &gens(1), 2).representatives.len(), 5);
        let o = term_oracle(&theory(ASSOC), &["a".to_string()], 2);
        assert_eq!(o.representatives, vec!["a", "m(a,a)", "m(a,m(a,a))", "m(m(a,a),m(a,a))"]);
        assert_eq!(term_oracle(&Theory::default(), &gens(2), 3).representatives, gens(2));
    }

    #[test]
    fn engine_agrees_with_oracle() {
        for (text, depth) in [(MAGMA, 3), (ASSOC, 3), (COMM_ASSOC, 3)] {
            let r = compare_with_oracle(&theory(text), &gens(1), depth).unwrap();
            assert_eq!(r.status, crate::verify::Status::Pass, "{}", r.to_text());
        }
        let r = compare_with_oracle(&theory(COMM_ASSOC), &gens(2), 2).unwrap();
        assert_eq!(r.status, crate::verify::Status::Pass, "{}", r.to_text());
    }

    #[test]
    fn constants_and_empty_generators() {
        let none = free_algebra_approx(&theory(MAGMA), &[], Budgets::new(1, 3, 2).unwrap()).unwrap();
        assert!(none.carrier.is_empty());
        let t = theory("op e arity 0\nop m arity 2\neq 1 : m(e,v1) = v1\neq 1 : m(v1,e) = v1\n");
        let r = compare_with_oracle(&t, &[], 2).unwrap();
        assert_eq!(r.status, crate::verify::Status::Pass, "{}", r.to_text());
        let a = free_algebra_approx(&t, &[], Budgets::new(1, 2, 1).unwrap()).unwrap();
        assert_eq!(a.normal_forms(2), vec!["e"]);
    }

    #[test]
    fn reflexive_equations_change_nothing() {
        let t = theory("op m arity 2\neq 1 : m(v1,v1) = m(v1,v1)\n");
        let a = free_algebra_approx(&t, &gens(1), Budgets::new(1, 3, 1).unwrap()).unwrap();
        assert_eq!(a.carrier.len(), 26);
        let q = equation_attachment(0, &t.equations[0]);
        assert!(q.is_trivial());
        let alg = FinAlgebra::new(Signature::magma(), 2, vec![vec![1, 0, 0, 1]]).unwrap();
        assert_eq!(q.lift(&alg, &[1]), Some(vec![1]));
    }

    #[test]
    fn equation_liftings_exist_exactly_in_models() {
        let assoc = equation_attachment(0, &EquationSpec::associativity(0));
        for alg in FinAlgebra::all(&Signature::magma(), 2) {
            let lifts = (0..8).all(|c| assoc.lift(&alg, &[c >> 2, (c >> 1) & 1, c & 1]).is_some());
            assert_eq!(lifts, alg.violation(&assoc.equation).is_none());
        }
        assert_eq!(FinAlgebra::all(&Signature::magma(), 2).len(), 16);
    }

    proptest! {
        #[test]
        fn commutative_normal_forms_are_sorted_pairs(b in 1u32..3) {
            let t = theory("op m arity 2\neq 2 : m(v1,v2) = m(v2,v1)\n");
            let a = free_algebra_approx(&t, &gens(2), Budgets::new(1, b, 1).unwrap()).unwrap();
            for nf in a.carrier.terms() {
                if let TermKind::App { args, .. } = nf.kind() {
                    prop_assert!(canonical_cmp(&args[0], &args[1]).is_le());
                }
            }
        }

        #[test]
        fn normal_forms_are_idempotent(rounds in 1u32..3, stages in 1u32..3) {
            let a = free_algebra_approx(&theory(COMM_ASSOC), &gens(1), Budgets::new(1, stages, rounds).unwrap()).unwrap();
            for nf in a.carrier.terms() {
                prop_assert_eq!(a.normal_form.get(nf), Some(nf));
            }
        }
    }
}
