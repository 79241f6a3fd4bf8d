//! First-order terms, idempotent substitutions, unification with occurs check,
//! and (n-ary) anti-unification.
//!
//! Terms are immutable and cheap to clone: argument vectors sit behind an
//! [`Arc`], so subterms shared between a term and its instances are shared
//! in memory as well.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{Cursor, SyntaxError, Tok};

/// Functor symbol of a list cell.
pub const CONS: &str = ".";
/// The empty list constant.
pub const NIL: &str = "[]";

/// A logic variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{}", self.0)
    }
}

/// Functor or constant name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        assert!(!name.is_empty(), "functor symbols are nonempty");
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A first-order term. Constants are applications with no arguments.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    App(Symbol, Arc<[Term]>),
}

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn app(functor: &str, args: Vec<Term>) -> Term {
        Term::App(Symbol::new(functor), args.into())
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Symbol::new(name), Arc::from(Vec::new()))
    }

    pub fn nil() -> Term {
        Term::constant(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::app(CONS, vec![head, tail])
    }

    /// Builds `[items... | tail]`, or a proper list when `tail` is `None`.
    pub fn list(items: Vec<Term>, tail: Option<Term>) -> Term {
        let mut acc = tail.unwrap_or_else(Term::nil);
        for item in items.into_iter().rev() {
            acc = Term::cons(item, acc);
        }
        acc
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(*v),
            Term::App(..) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Functor name and arity, or `None` for a variable.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Var(_) => None,
            Term::App(f, args) => Some((f.as_str(), args.len())),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn occurs(&self, v: Var) -> bool {
        match self {
            Term::Var(w) => *w == v,
            Term::App(_, args) => args.iter().any(|a| a.occurs(v)),
        }
    }

    /// Distinct variables in left-to-right, depth-first first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen = Vec::new();
        self.collect_vars(&mut seen);
        seen
    }

    fn collect_vars(&self, seen: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !seen.contains(v) {
                    seen.push(*v);
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(seen)),
        }
    }

    /// Splits a (possibly partial) list into its elements and its tail.
    pub fn list_items(&self) -> (Vec<&Term>, &Term) {
        let mut items = Vec::new();
        let mut cur = self;
        while let Term::App(f, args) = cur {
            if f.as_str() == CONS && args.len() == 2 {
                items.push(&args[0]);
                cur = &args[1];
            } else {
                break;
            }
        }
        (items, cur)
    }

    pub fn size(&self) -> usize {
        term_size(self)
    }
}

/// Number of nodes; variables and applications count one each.
pub fn term_size(t: &Term) -> usize {
    match t {
        Term::Var(_) => 1,
        Term::App(_, args) => 1 + args.iter().map(term_size).sum::<usize>(),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(sym, args) if sym.as_str() == CONS && args.len() == 2 => {
                let (items, tail) = self.list_items();
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                match tail {
                    Term::App(s, a) if s.as_str() == NIL && a.is_empty() => {}
                    other => write!(f, "|{other}")?,
                }
                f.write_str("]")
            }
            Term::App(sym, args) => {
                write!(f, "{sym}")?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Monotone source of fresh variables.
#[derive(Clone, Debug, Default)]
pub struct VarSupply {
    next: u32,
}

impl VarSupply {
    pub fn new() -> Self {
        VarSupply { next: 0 }
    }

    pub fn starting_at(next: u32) -> Self {
        VarSupply { next }
    }

    pub fn fresh(&mut self) -> Var {
        let v = Var(self.next);
        self.next = self.next.checked_add(1).expect("variable supply exhausted");
        v
    }

    /// The identifier the next call to [`fresh`](Self::fresh) returns.
    pub fn peek(&self) -> u32 {
        self.next
    }

    /// Ensures `v` is never handed out.
    pub fn reserve(&mut self, v: Var) {
        if v.0 >= self.next {
            self.next = v.0 + 1;
        }
    }
}

/// A finite, idempotent map from variables to terms.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn singleton(v: Var, t: Term) -> Self {
        let mut s = Substitution::new();
        s.map.insert(v, t);
        s
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.map.get(&v)
    }

    pub fn contains(&self, v: Var) -> bool {
        self.map.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Term)> + '_ {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    pub fn domain(&self) -> impl Iterator<Item = Var> + '_ {
        self.map.keys().copied()
    }

    /// Adds a binding without normalizing. Callers keep the map idempotent.
    pub(crate) fn insert_raw(&mut self, v: Var, t: Term) {
        self.map.insert(v, t);
    }

    pub fn restrict(&self, mut keep: impl FnMut(Var) -> bool) -> Substitution {
        Substitution {
            map: self
                .map
                .iter()
                .filter(|(v, _)| keep(**v))
                .map(|(v, t)| (*v, t.clone()))
                .collect(),
        }
    }

    /// True when no domain variable occurs in any range term.
    pub fn is_idempotent(&self) -> bool {
        self.map
            .values()
            .all(|t| self.map.keys().all(|v| !t.occurs(*v)))
    }

    pub fn apply(&self, t: &Term) -> Term {
        apply(self, t)
    }
}

impl FromIterator<(Var, Term)> for Substitution {
    /// Collects bindings verbatim; the caller is responsible for idempotence.
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Substitution {
            map: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Applies an idempotent substitution in a single pass.
pub fn apply(s: &Substitution, t: &Term) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    apply_changed(s, t).unwrap_or_else(|| t.clone())
}

fn apply_changed(s: &Substitution, t: &Term) -> Option<Term> {
    match t {
        Term::Var(v) => s.get(*v).cloned(),
        Term::App(f, args) => rebuild(f, args, |a| apply_changed(s, a)),
    }
}

/// Rebuilds an application if any argument changed, otherwise returns `None`.
fn rebuild(f: &Symbol, args: &Arc<[Term]>, mut map: impl FnMut(&Term) -> Option<Term>) -> Option<Term> {
    let mut out: Option<Vec<Term>> = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(new) = map(a) {
            let v = out.get_or_insert_with(|| args[..i].to_vec());
            v.push(new);
        } else if let Some(v) = out.as_mut() {
            v.push(a.clone());
        }
    }
    out.map(|v| Term::App(f.clone(), v.into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyFailure {
    #[error("cannot unify {left} with {right}")]
    Clash { left: Term, right: Term },
    #[error("occurs check: {var} occurs in {term}")]
    Occurs { var: Var, term: Term },
}

/// Incremental unification state in triangular form, with a trail so
/// bindings can be undone on backtracking.
#[derive(Clone, Debug, Default)]
pub struct Unifier {
    bindings: HashMap<Var, Term>,
    trail: Vec<Var>,
}

impl Unifier {
    pub fn new() -> Self {
        Unifier::default()
    }

    pub fn from_substitution(s: &Substitution) -> Self {
        let mut u = Unifier::new();
        for (v, t) in s.iter() {
            u.bind(v, t.clone());
        }
        u
    }

    fn bind(&mut self, v: Var, t: Term) {
        self.bindings.insert(v, t);
        self.trail.push(v);
    }

    pub fn is_bound(&self, v: Var) -> bool {
        self.bindings.contains_key(&v)
    }

    pub fn bound_vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.trail.iter().copied()
    }

    /// Current trail position, for [`undo`](Self::undo).
    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("trail nonempty");
            self.bindings.remove(&v);
        }
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.bindings.get(v) {
                Some(b) => t = b,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            match self.walk(t) {
                Term::Var(w) => {
                    if *w == v {
                        return true;
                    }
                }
                Term::App(_, args) => stack.extend(args.iter()),
            }
        }
        false
    }

    /// Unifies two terms under the current bindings. On failure every binding
    /// made by this call is undone.
    pub fn unify(&mut self, a: &Term, b: &Term) -> Result<(), UnifyFailure> {
        let mark = self.mark();
        let result = self.unify_inner(a, b);
        if result.is_err() {
            self.undo(mark);
        }
        result
    }

    fn unify_inner(&mut self, a: &Term, b: &Term) -> Result<(), UnifyFailure> {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((a, b)) = stack.pop() {
            let a = self.walk(&a).clone();
            let b = self.walk(&b).clone();
            match (&a, &b) {
                (Term::Var(x), Term::Var(y)) => {
                    if x != y {
                        // Older variables survive as representatives.
                        let (young, old) = if x > y { (*x, b) } else { (*y, a) };
                        self.bind(young, old);
                    }
                }
                (Term::Var(x), t) | (t, Term::Var(x)) => {
                    if self.occurs(*x, t) {
                        return Err(UnifyFailure::Occurs {
                            var: *x,
                            term: self.resolve(t),
                        });
                    }
                    self.bind(*x, t.clone());
                }
                (Term::App(f, xs), Term::App(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return Err(UnifyFailure::Clash {
                            left: self.resolve(&a),
                            right: self.resolve(&b),
                        });
                    }
                    if Arc::ptr_eq(xs, ys) {
                        continue;
                    }
                    stack.extend(xs.iter().cloned().zip(ys.iter().cloned()).rev());
                }
            }
        }
        Ok(())
    }

    /// Fully applies the current bindings.
    pub fn resolve(&self, t: &Term) -> Term {
        let mut cache = HashMap::new();
        self.resolve_cached(t, &mut cache).unwrap_or_else(|| t.clone())
    }

    fn resolve_cached(&self, t: &Term, cache: &mut HashMap<Var, Term>) -> Option<Term> {
        match t {
            Term::Var(v) => {
                let bound = self.bindings.get(v)?;
                if let Some(r) = cache.get(v) {
                    return Some(r.clone());
                }
                let r = self
                    .resolve_cached(bound, cache)
                    .unwrap_or_else(|| bound.clone());
                cache.insert(*v, r.clone());
                Some(r)
            }
            Term::App(f, args) => rebuild(f, args, |a| self.resolve_cached(a, cache)),
        }
    }

    /// Idempotent substitution for the selected bound variables.
    pub fn substitution_for(&self, mut keep: impl FnMut(Var) -> bool) -> Substitution {
        let mut cache = HashMap::new();
        let mut out = Substitution::new();
        let mut vars: Vec<Var> = self.bindings.keys().copied().filter(|v| keep(*v)).collect();
        vars.sort();
        for v in vars {
            let t = Term::Var(v);
            let r = self.resolve_cached(&t, &mut cache).unwrap_or(t);
            out.insert_raw(v, r);
        }
        out
    }

    pub fn to_substitution(&self) -> Substitution {
        self.substitution_for(|_| true)
    }
}

/// Most general unifier of `t1` and `t2` extending `seed`.
pub fn unify(t1: &Term, t2: &Term, seed: &Substitution) -> Result<Substitution, UnifyFailure> {
    let mut u = Unifier::from_substitution(seed);
    u.unify(t1, t2)?;
    Ok(u.to_substitution())
}

/// Result of anti-unifying two terms: `left.apply(term) == t1` and
/// `right.apply(term) == t2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generalization {
    pub term: Term,
    pub left: Substitution,
    pub right: Substitution,
}

/// Least general generalization of several terms, with one witness
/// substitution per input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizationN {
    pub term: Term,
    pub witnesses: Vec<Substitution>,
}

struct Lgg<'s> {
    supply: &'s mut VarSupply,
    table: HashMap<Vec<Term>, Var>,
    witnesses: Vec<Substitution>,
}

impl Lgg<'_> {
    /// Returns the generalization and whether it differs from the inputs.
    fn go(&mut self, ts: &[&Term]) -> (Term, bool) {
        let first = ts[0];
        match first {
            Term::App(f, args0) => {
                let same_functor = ts[1..].iter().all(|t| {
                    matches!(t, Term::App(g, a) if g == f && a.len() == args0.len())
                });
                if same_functor {
                    if ts[1..]
                        .iter()
                        .all(|t| matches!(t, Term::App(_, a) if Arc::ptr_eq(a, args0)))
                    {
                        return (first.clone(), false);
                    }
                    let mut changed = false;
                    let mut new_args = Vec::with_capacity(args0.len());
                    let mut column = Vec::with_capacity(ts.len());
                    for i in 0..args0.len() {
                        column.clear();
                        column.extend(ts.iter().map(|t| &t.args()[i]));
                        let (g, c) = self.go(&column);
                        changed |= c;
                        new_args.push(g);
                    }
                    if !changed {
                        return (first.clone(), false);
                    }
                    return (Term::App(f.clone(), new_args.into()), true);
                }
            }
            Term::Var(v) => {
                if ts[1..].iter().all(|t| t.as_var() == Some(*v)) {
                    return (first.clone(), false);
                }
            }
        }
        let key: Vec<Term> = ts.iter().map(|t| (*t).clone()).collect();
        if let Some(z) = self.table.get(&key) {
            return (Term::Var(*z), true);
        }
        let z = self.supply.fresh();
        for (w, t) in self.witnesses.iter_mut().zip(key.iter()) {
            w.insert_raw(z, t.clone());
        }
        self.table.insert(key, z);
        (Term::Var(z), true)
    }
}

/// Plotkin least general generalization of two terms. Identical
/// disagreement pairs share one fresh variable.
pub fn anti_unify(t1: &Term, t2: &Term, supply: &mut VarSupply) -> Generalization {
    let GeneralizationN { term, mut witnesses } = anti_unify_n(&[t1.clone(), t2.clone()], supply);
    let right = witnesses.pop().expect("two witnesses");
    let left = witnesses.pop().expect("two witnesses");
    Generalization { term, left, right }
}

/// n-ary least general generalization.
///
/// # Panics
///
/// Panics if `ts` is empty.
pub fn anti_unify_n(ts: &[Term], supply: &mut VarSupply) -> GeneralizationN {
    assert!(!ts.is_empty(), "anti_unify_n needs at least one term");
    let mut lgg = Lgg {
        supply,
        table: HashMap::new(),
        witnesses: vec![Substitution::new(); ts.len()],
    };
    let refs: Vec<&Term> = ts.iter().collect();
    let (term, _) = lgg.go(&refs);
    GeneralizationN {
        term,
        witnesses: lgg.witnesses,
    }
}

/// Renames variables to `_0, _1, ...` in first-occurrence order.
pub fn canonical_form(t: &Term) -> Term {
    let mut renaming = HashMap::new();
    canonical_with(t, &mut renaming)
}

/// Canonical renaming continued across several terms.
pub(crate) fn canonical_with(t: &Term, renaming: &mut HashMap<Var, Var>) -> Term {
    match t {
        Term::Var(v) => {
            let n = renaming.len() as u32;
            Term::Var(*renaming.entry(*v).or_insert(Var(n)))
        }
        Term::App(f, args) => {
            if args.is_empty() {
                t.clone()
            } else {
                Term::App(
                    f.clone(),
                    args.iter()
                        .map(|a| canonical_with(a, renaming))
                        .collect::<Vec<_>>()
                        .into(),
                )
            }
        }
    }
}

/// Named-variable scope for the textual syntax.
///
/// Uppercase-led identifiers and `_Name` are named variables, `_` alone is an
/// anonymous fresh variable, and `_<digits>` denotes that literal variable.
pub struct VarScope<'a> {
    supply: &'a mut VarSupply,
    names: HashMap<String, Var>,
}

impl<'a> VarScope<'a> {
    pub fn new(supply: &'a mut VarSupply) -> Self {
        VarScope {
            supply,
            names: HashMap::new(),
        }
    }

    /// A scope that already knows some variable names.
    pub fn with_names(supply: &'a mut VarSupply, names: HashMap<String, Var>) -> Self {
        VarScope { supply, names }
    }

    pub fn into_names(self) -> HashMap<String, Var> {
        self.names
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.names.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, Var)> + '_ {
        self.names.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn variable(&mut self, name: &str) -> Var {
        if name == "_" {
            return self.supply.fresh();
        }
        if let Some(digits) = name.strip_prefix('_') {
            if let Ok(n) = digits.parse::<u32>() {
                let v = Var(n);
                self.supply.reserve(v);
                return v;
            }
        }
        if let Some(v) = self.names.get(name) {
            return *v;
        }
        let v = self.supply.fresh();
        self.names.insert(name.to_string(), v);
        v
    }
}

fn is_variable_name(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

pub(crate) fn parse_term_at(cur: &mut Cursor, scope: &mut VarScope) -> Result<Term, SyntaxError> {
    match cur.next() {
        Some(Tok::Ident(name)) => {
            if is_variable_name(&name) {
                return Ok(Term::Var(scope.variable(&name)));
            }
            let mut args = Vec::new();
            if cur.eat(&Tok::LParen) {
                loop {
                    args.push(parse_term_at(cur, scope)?);
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
                cur.expect(&Tok::RParen)?;
            }
            Ok(Term::app(&name, args))
        }
        Some(Tok::LBrack) => {
            if cur.eat(&Tok::RBrack) {
                return Ok(Term::nil());
            }
            let mut items = Vec::new();
            loop {
                items.push(parse_term_at(cur, scope)?);
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            let tail = if cur.eat(&Tok::Bar) {
                Some(parse_term_at(cur, scope)?)
            } else {
                None
            };
            cur.expect(&Tok::RBrack)?;
            Ok(Term::list(items, tail))
        }
        Some(t) => Err(SyntaxError::new(cur.offset(), format!("expected a term, found {t}"))),
        None => Err(SyntaxError::new(cur.offset(), "expected a term, found end of input")),
    }
}

/// Parses one term in the textual syntax, e.g. `drs(in(I),out(O))`.
pub fn parse_term(src: &str, scope: &mut VarScope) -> Result<Term, SyntaxError> {
    let mut cur = Cursor::new(src)?;
    let t = parse_term_at(&mut cur, scope)?;
    cur.finish()?;
    Ok(t)
}

/// Parses a comma-separated sequence of terms.
pub fn parse_terms(src: &str, scope: &mut VarScope) -> Result<Vec<Term>, SyntaxError> {
    let mut cur = Cursor::new(src)?;
    let mut out = Vec::new();
    if cur.at_end() {
        return Ok(out);
    }
    loop {
        out.push(parse_term_at(&mut cur, scope)?);
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str, supply: &mut VarSupply) -> (Term, HashMap<String, Var>) {
        let mut scope = VarScope::new(supply);
        let t = parse_term(src, &mut scope).unwrap();
        let names = scope.names().map(|(k, v)| (k.to_string(), v)).collect();
        (t, names)
    }

    fn t(src: &str) -> Term {
        parse(src, &mut VarSupply::new()).0
    }

    #[test]
    fn unify_textbook_mgu() {
        let mut supply = VarSupply::new();
        let mut scope = VarScope::new(&mut supply);
        let a = parse_term("f(X,b)", &mut scope).unwrap();
        let b = parse_term("f(a,Y)", &mut scope).unwrap();
        let x = scope.lookup("X").unwrap();
        let y = scope.lookup("Y").unwrap();
        let s = unify(&a, &b, &Substitution::new()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(x), Some(&Term::constant("a")));
        assert_eq!(s.get(y), Some(&Term::constant("b")));
    }

    #[test]
    fn unify_occurs_check_fails() {
        let mut supply = VarSupply::new();
        let mut scope = VarScope::new(&mut supply);
        let x = parse_term("X", &mut scope).unwrap();
        let fx = parse_term("f(X)", &mut scope).unwrap();
        assert!(matches!(
            unify(&x, &fx, &Substitution::new()),
            Err(UnifyFailure::Occurs { .. })
        ));
    }

    #[test]
    fn unify_identity_is_empty() {
        let a = t("g(X,h(Y),c)");
        assert!(unify(&a, &a, &Substitution::new()).unwrap().is_empty());
    }

    #[test]
    fn unify_arity_is_part_of_functor() {
        assert!(matches!(
            unify(&t("f(a)"), &t("f(a,b)"), &Substitution::new()),
            Err(UnifyFailure::Clash { .. })
        ));
    }

    #[test]
    fn unify_extends_seed() {
        let mut supply = VarSupply::new();
        let mut scope = VarScope::new(&mut supply);
        let x = parse_term("X", &mut scope).unwrap();
        let y = parse_term("Y", &mut scope).unwrap();
        let fy = parse_term("f(Y)", &mut scope).unwrap();
        let seed = Substitution::singleton(x.as_var().unwrap(), fy);
        let s = unify(&y, &Term::constant("b"), &seed).unwrap();
        assert!(s.is_idempotent());
        assert_eq!(s.apply(&x), t("f(b)"));
        let clash = unify(&x, &t("g(c)"), &seed);
        assert!(clash.is_err());
    }

    #[test]
    fn failed_unify_leaves_unifier_untouched() {
        let mut supply = VarSupply::new();
        let mut scope = VarScope::new(&mut supply);
        let a = parse_term("f(X,Y,a)", &mut scope).unwrap();
        let b = parse_term("f(b,c,d)", &mut scope).unwrap();
        let mut u = Unifier::new();
        assert!(u.unify(&a, &b).is_err());
        assert_eq!(u.mark(), 0);
    }

    #[test]
    fn apply_examples() {
        let mut supply = VarSupply::new();
        let (fxx, names) = parse("f(X,X)", &mut supply);
        let x = names["X"];
        let s = Substitution::singleton(x, Term::constant("a"));
        assert_eq!(apply(&s, &fxx), t("f(a,a)"));
        assert_eq!(apply(&Substitution::new(), &fxx), fxx);
        assert_eq!(apply(&s, &t("b")), t("b"));
    }

    #[test]
    fn anti_unify_identity() {
        let a = t("f(X,g(a))");
        let mut supply = VarSupply::starting_at(100);
        let g = anti_unify(&a, &a, &mut supply);
        assert_eq!(g.term, a);
        assert!(g.left.is_empty() && g.right.is_empty());
    }

    #[test]
    fn anti_unify_single_disagreement() {
        let mut supply = VarSupply::new();
        let g = anti_unify(&t("f(a,g(b))"), &t("f(a,g(c))"), &mut supply);
        let z = Var(0);
        assert_eq!(g.term, Term::app("f", vec![t("a"), Term::app("g", vec![Term::Var(z)])]));
        assert_eq!(g.left, Substitution::singleton(z, t("b")));
        assert_eq!(g.right, Substitution::singleton(z, t("c")));
    }

    #[test]
    fn anti_unify_reuses_pair_variable() {
        let mut supply = VarSupply::new();
        let g = anti_unify(&t("f(a,a)"), &t("f(b,b)"), &mut supply);
        let z = Term::Var(Var(0));
        assert_eq!(g.term, Term::app("f", vec![z.clone(), z]));
        assert_eq!(g.left.len(), 1);
        assert_eq!(supply.peek(), 1);
    }

    #[test]
    fn anti_unify_n_examples() {
        let mut supply = VarSupply::new();
        let single = anti_unify_n(&[t("h(X,a)")], &mut supply);
        assert_eq!(single.term, t("h(X,a)"));
        assert_eq!(single.witnesses, vec![Substitution::new()]);

        let g = anti_unify_n(&[t("f(a)"), t("f(b)"), t("f(c)")], &mut supply);
        let z = match &g.term {
            Term::App(_, args) => args[0].as_var().unwrap(),
            _ => panic!(),
        };
        let expected: Vec<Substitution> = ["a", "b", "c"]
            .iter()
            .map(|c| Substitution::singleton(z, t(c)))
            .collect();
        assert_eq!(g.witnesses, expected);
    }

    #[test]
    fn canonical_form_examples() {
        let mut supply = VarSupply::new();
        let (a, _) = parse("f(Y,X,Y)", &mut supply);
        let c = canonical_form(&a);
        assert_eq!(c, Term::app("f", vec![Term::Var(Var(0)), Term::Var(Var(1)), Term::Var(Var(0))]));
        assert_eq!(canonical_form(&c), c);
        let (p, _) = parse("f(A,B)", &mut supply);
        let (q, _) = parse("f(P,Q)", &mut supply);
        assert_ne!(p, q);
        assert_eq!(canonical_form(&p), canonical_form(&q));
    }

    #[test]
    fn term_size_examples() {
        assert_eq!(term_size(&t("a")), 1);
        assert_eq!(term_size(&t("f(a,X)")), 3);
        assert_eq!(term_size(&t("[a]")), 3);
    }

    #[test]
    fn list_syntax_round_trips() {
        let src = "drs([ref(L,X),cond(L,man(X))|T],T)";
        let a = t(src);
        let printed = a.to_string();
        let b = parse(&printed, &mut VarSupply::new()).0;
        assert_eq!(canonical_form(&a), canonical_form(&b));
        assert_eq!(t("[a,b]").to_string(), "[a,b]");
        assert_eq!(t("[]").to_string(), "[]");
        assert_eq!(t("[a|b]").to_string(), "[a|b]");
    }

    #[test]
    fn literal_variables_reserve_supply() {
        let mut supply = VarSupply::new();
        let (a, _) = parse("f(_7,X)", &mut supply);
        assert_eq!(a.args()[0], Term::Var(Var(7)));
        assert!(a.args()[1].as_var().unwrap().0 > 7);
        assert!(supply.peek() > 7);
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let a = t("f(_,_)");
        assert_ne!(a.args()[0], a.args()[1]);
    }

    #[test]
    fn syntax_errors_report_position() {
        let mut supply = VarSupply::new();
        let mut scope = VarScope::new(&mut supply);
        let err = parse_term("f(a,", &mut scope).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(parse_term("f(a) b", &mut scope).is_err());
    }
}
