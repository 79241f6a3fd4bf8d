//! Constraints over first-order terms: equations, conjunction, disjunction and
//! named definitions, together with solved forms and the generalise operation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::syntax::{Cursor, SyntaxError, Tok};
use crate::term::{
    anti_unify_n, canonical_form, parse_term_at, term_size, Substitution, Term, UnifyFailure,
    Unifier, Var, VarScope, VarSupply,
};

/// Name of a shared constraint in an [`Env`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(pub u32);

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An equation between two terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    True,
    Eq(Equation),
    Conj(Vec<Constraint>),
    Disj(Vec<Constraint>),
    Use(Name),
}

impl Constraint {
    pub fn eq(lhs: Term, rhs: Term) -> Constraint {
        Constraint::Eq(Equation::new(lhs, rhs))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Constraint::True)
    }

    /// Names used anywhere inside the constraint.
    pub fn uses(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_uses(&mut out);
        out
    }

    fn collect_uses(&self, out: &mut BTreeSet<Name>) {
        match self {
            Constraint::Use(n) => {
                out.insert(*n);
            }
            Constraint::Conj(cs) | Constraint::Disj(cs) => {
                cs.iter().for_each(|c| c.collect_uses(out));
            }
            Constraint::True | Constraint::Eq(_) => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Constraint::Eq(e) => {
                out.extend(e.lhs.vars());
                out.extend(e.rhs.vars());
            }
            Constraint::Conj(cs) | Constraint::Disj(cs) => {
                cs.iter().for_each(|c| c.collect_vars(out));
            }
            Constraint::True | Constraint::Use(_) => {}
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, in_conj: bool) -> fmt::Result {
        match self {
            Constraint::True => f.write_str("true"),
            Constraint::Eq(e) => write!(f, "{e}"),
            Constraint::Use(n) => write!(f, "{n}"),
            Constraint::Conj(cs) => {
                if in_conj {
                    f.write_str("(")?;
                }
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    c.fmt_prec(f, true)?;
                }
                if in_conj {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Constraint::Disj(cs) => {
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    c.fmt_prec(f, false)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

/// Flattened conjunction with `true` units removed.
pub fn conjoin(cs: impl IntoIterator<Item = Constraint>) -> Constraint {
    let mut parts = Vec::new();
    for c in cs {
        match c {
            Constraint::True => {}
            Constraint::Conj(inner) => parts.extend(inner),
            other => parts.push(other),
        }
    }
    match parts.len() {
        0 => Constraint::True,
        1 => parts.pop().expect("one part"),
        _ => Constraint::Conj(parts),
    }
}

/// Disjunction of the alternatives; a single alternative is returned as is.
///
/// # Panics
///
/// Panics on an empty list (there is no `false` constraint).
pub fn disjoin(alts: Vec<Constraint>) -> Constraint {
    assert!(!alts.is_empty(), "disjunction needs at least one alternative");
    let mut parts = Vec::with_capacity(alts.len());
    for a in alts {
        match a {
            Constraint::Disj(inner) => parts.extend(inner),
            other => parts.push(other),
        }
    }
    if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        Constraint::Disj(parts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("name {0} is not defined")]
    UndefinedName(Name),
    #[error("name {0} is defined twice")]
    Redefinition(Name),
    #[error("definition of {name} uses {used}, which is not defined before it")]
    ForwardUse { name: Name, used: Name },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Append-only stack of named definitions. A definition only uses names
/// pushed before it, so expansion always terminates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    defs: Vec<(Name, Constraint)>,
    index: HashMap<Name, usize>,
    next: u32,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    /// Pushes a definition under a fresh name.
    pub fn define(&mut self, body: Constraint) -> Result<Name, ConstraintError> {
        let name = Name(self.next);
        self.push(name, body)?;
        Ok(name)
    }

    /// Pushes a definition under an explicit name.
    pub fn push(&mut self, name: Name, body: Constraint) -> Result<(), ConstraintError> {
        if self.index.contains_key(&name) {
            return Err(ConstraintError::Redefinition(name));
        }
        if let Some(used) = body.uses().into_iter().find(|u| !self.index.contains_key(u)) {
            return Err(ConstraintError::ForwardUse { name, used });
        }
        self.index.insert(name, self.defs.len());
        self.defs.push((name, body));
        self.next = self.next.max(name.0 + 1);
        Ok(())
    }

    /// Builds an environment without checking uniqueness or stack order.
    /// Lookups resolve to the first definition of a name.
    pub fn from_defs_unchecked(defs: Vec<(Name, Constraint)>) -> Self {
        let mut index = HashMap::new();
        let mut next = 0;
        for (i, (n, _)) in defs.iter().enumerate() {
            index.entry(*n).or_insert(i);
            next = next.max(n.0 + 1);
        }
        Env { defs, index, next }
    }

    pub fn into_defs(self) -> Vec<(Name, Constraint)> {
        self.defs
    }

    pub fn get(&self, name: Name) -> Option<&Constraint> {
        self.index.get(&name).map(|&i| &self.defs[i].1)
    }

    /// Position of the definition in push order.
    pub fn position(&self, name: Name) -> Option<usize> {
        self.index.get(&name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Name, &Constraint)> + '_ {
        self.defs.iter().map(|(n, c)| (*n, c))
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Variables occurring in any definition.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.defs.iter().flat_map(|(_, c)| c.vars()).collect()
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, body) in &self.defs {
            match body {
                Constraint::Disj(_) => writeln!(f, "{name} := {body}")?,
                _ => writeln!(f, "{name} := ({body})")?,
            }
        }
        Ok(())
    }
}

/// Replaces every name use by its definition, recursively.
pub fn expand(c: &Constraint, env: &Env) -> Result<Constraint, ConstraintError> {
    let mut memo = HashMap::new();
    expand_memo(c, env, &mut memo)
}

fn expand_memo(
    c: &Constraint,
    env: &Env,
    memo: &mut HashMap<Name, Constraint>,
) -> Result<Constraint, ConstraintError> {
    Ok(match c {
        Constraint::True | Constraint::Eq(_) => c.clone(),
        Constraint::Use(n) => {
            if let Some(done) = memo.get(n) {
                return Ok(done.clone());
            }
            let body = env.get(*n).ok_or(ConstraintError::UndefinedName(*n))?;
            let out = expand_memo(body, env, memo)?;
            memo.insert(*n, out.clone());
            out
        }
        Constraint::Conj(cs) => conjoin(
            cs.iter()
                .map(|c| expand_memo(c, env, memo))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Constraint::Disj(cs) => Constraint::Disj(
            cs.iter()
                .map(|c| expand_memo(c, env, memo))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    })
}

/// Normal form of a satisfiable conjunction of equations: an idempotent
/// substitution with a distinguished root variable. Every variable other
/// than the root is implicitly existential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolvedForm {
    root: Var,
    binding: Substitution,
}

impl SolvedForm {
    /// The `true` constraint on `root`.
    pub fn unconstrained(root: Var) -> Self {
        SolvedForm {
            root,
            binding: Substitution::new(),
        }
    }

    /// Wraps an idempotent substitution.
    pub fn new(root: Var, binding: Substitution) -> Self {
        debug_assert!(binding.is_idempotent());
        SolvedForm { root, binding }
    }

    pub fn bound_to(root: Var, term: Term) -> Self {
        SolvedForm::new(root, Substitution::singleton(root, term))
    }

    pub fn root(&self) -> Var {
        self.root
    }

    pub fn binding(&self) -> &Substitution {
        &self.binding
    }

    /// The term the root is bound to (the root itself when unconstrained).
    pub fn root_term(&self) -> Term {
        self.binding
            .get(self.root)
            .cloned()
            .unwrap_or(Term::Var(self.root))
    }

    pub fn canonical_root(&self) -> Term {
        canonical_form(&self.root_term())
    }

    pub fn root_size(&self) -> usize {
        term_size(&self.root_term())
    }

    /// Keeps the root binding and the bindings of variables selected by `keep`.
    pub fn project(&self, mut keep: impl FnMut(Var) -> bool) -> SolvedForm {
        let root = self.root;
        SolvedForm {
            root,
            binding: self.binding.restrict(|v| v == root || keep(v)),
        }
    }

    pub fn equations(&self) -> Vec<Equation> {
        self.binding
            .iter()
            .map(|(v, t)| Equation::new(Term::Var(v), t.clone()))
            .collect()
    }

    pub fn to_constraint(&self) -> Constraint {
        conjoin(self.equations().into_iter().map(Constraint::Eq))
    }
}

impl fmt::Display for SolvedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.binding.is_empty() {
            return f.write_str("true");
        }
        let mut first = true;
        let root_eq = self.binding.get(self.root).map(|t| (self.root, t));
        let others = self.binding.iter().filter(|(v, _)| *v != self.root);
        for (v, t) in root_eq.into_iter().chain(others) {
            if !first {
                f.write_str(" & ")?;
            }
            first = false;
            write!(f, "{v} = {t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsatisfiable: {0}")]
pub struct Unsat(pub UnifyFailure);

/// Solves `seed ∧ eqs` by iterated unification.
pub fn solve(eqs: &[Equation], seed: &SolvedForm) -> Result<SolvedForm, Unsat> {
    solve_projected(eqs, seed, |_| true)
}

/// Like [`solve`], but only materializes the root binding and the bindings
/// of variables selected by `keep`.
pub fn solve_projected(
    eqs: &[Equation],
    seed: &SolvedForm,
    mut keep: impl FnMut(Var) -> bool,
) -> Result<SolvedForm, Unsat> {
    let mut u = Unifier::from_substitution(&seed.binding);
    for e in eqs {
        u.unify(&e.lhs, &e.rhs).map_err(Unsat)?;
    }
    let root = seed.root;
    Ok(SolvedForm {
        root,
        binding: u.substitution_for(|v| v == root || keep(v)),
    })
}

/// Common part of two solved forms plus the remainders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generalised {
    pub common: SolvedForm,
    pub left: Constraint,
    pub right: Constraint,
}

/// Splits two solved forms on the same root into a common part and two
/// remainders so that `common ∧ left ≡ s1` and `common ∧ right ≡ s2`.
///
/// # Panics
///
/// Panics if the roots differ.
pub fn generalise(s1: &SolvedForm, s2: &SolvedForm, supply: &mut VarSupply) -> Generalised {
    let (common, mut rems) = generalise_n(&[s1.clone(), s2.clone()], supply);
    let right = rems.pop().expect("two remainders");
    let left = rems.pop().expect("two remainders");
    Generalised {
        common,
        left,
        right,
    }
}

/// n-ary [`generalise`]. Returns the common part and one remainder per input.
///
/// Bindings of non-root variables are generalised together with the root
/// binding, as one tuple, so remainders stay consistent with them.
///
/// # Panics
///
/// Panics if `ss` is empty or the roots differ.
pub fn generalise_n(ss: &[SolvedForm], supply: &mut VarSupply) -> (SolvedForm, Vec<Constraint>) {
    assert!(!ss.is_empty(), "generalise_n needs at least one solved form");
    let root = ss[0].root;
    assert!(
        ss.iter().all(|s| s.root == root),
        "generalise requires solved forms on the same root variable"
    );
    let mut frame: BTreeSet<Var> = BTreeSet::new();
    for s in ss {
        frame.extend(s.binding.domain().filter(|v| *v != root));
    }
    let frame: Vec<Var> = frame.into_iter().collect();

    let lookup = |s: &SolvedForm, v: Var| s.binding.get(v).cloned().unwrap_or(Term::Var(v));
    let inputs: Vec<Term> = if frame.is_empty() {
        ss.iter().map(SolvedForm::root_term).collect()
    } else {
        ss.iter()
            .map(|s| {
                let mut entries = vec![s.root_term()];
                entries.extend(frame.iter().map(|v| lookup(s, *v)));
                Term::app("$frame", entries)
            })
            .collect()
    };
    let gen = anti_unify_n(&inputs, supply);

    let mut binding = Substitution::new();
    if frame.is_empty() {
        if gen.term != Term::Var(root) {
            binding.insert_raw(root, gen.term.clone());
        }
    } else {
        let entries = gen.term.args();
        if entries[0] != Term::Var(root) {
            binding.insert_raw(root, entries[0].clone());
        }
        for (v, g) in frame.iter().zip(&entries[1..]) {
            if *g != Term::Var(*v) {
                binding.insert_raw(*v, g.clone());
            }
        }
    }
    let rems = gen
        .witnesses
        .iter()
        .map(|w| conjoin(w.iter().map(|(z, t)| Constraint::eq(Term::Var(z), t.clone()))))
        .collect();
    (SolvedForm::new(root, binding), rems)
}

fn parse_disj(cur: &mut Cursor, scope: &mut VarScope) -> Result<Constraint, SyntaxError> {
    let mut alts = vec![parse_conj(cur, scope)?];
    while cur.eat(&Tok::Bar) {
        alts.push(parse_conj(cur, scope)?);
    }
    Ok(if alts.len() == 1 {
        alts.pop().expect("one alternative")
    } else {
        Constraint::Disj(alts)
    })
}

fn parse_conj(cur: &mut Cursor, scope: &mut VarScope) -> Result<Constraint, SyntaxError> {
    let mut parts = vec![parse_unit(cur, scope)?];
    while cur.eat(&Tok::Amp) {
        parts.push(parse_unit(cur, scope)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        Constraint::Conj(parts)
    })
}

fn parse_unit(cur: &mut Cursor, scope: &mut VarScope) -> Result<Constraint, SyntaxError> {
    match cur.peek() {
        Some(Tok::LParen) => {
            cur.next();
            let c = parse_disj(cur, scope)?;
            cur.expect(&Tok::RParen)?;
            Ok(c)
        }
        Some(Tok::NameRef(n)) => {
            let n = *n;
            cur.next();
            Ok(Constraint::Use(Name(n)))
        }
        Some(Tok::Ident(id)) if id == "true" => {
            cur.next();
            Ok(Constraint::True)
        }
        _ => {
            let lhs = parse_term_at(cur, scope)?;
            cur.expect(&Tok::Equals)?;
            let rhs = parse_term_at(cur, scope)?;
            Ok(Constraint::eq(lhs, rhs))
        }
    }
}

/// Parses the textual constraint syntax: `&` conjunction, `|` disjunction
/// (binding weaker), `#n` name uses, `true`, and `term = term` equations.
pub fn parse_constraint(src: &str, scope: &mut VarScope) -> Result<Constraint, SyntaxError> {
    let mut cur = Cursor::new(src)?;
    let c = parse_disj(&mut cur, scope)?;
    cur.finish()?;
    Ok(c)
}

/// Parses an environment: one `#n := constraint` definition per line.
/// Blank lines and lines starting with `%` are skipped.
pub fn parse_env(src: &str, scope: &mut VarScope) -> Result<Env, ConstraintError> {
    let mut env = Env::new();
    for line in src.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut cur = Cursor::new(line)?;
        let name = match cur.next() {
            Some(Tok::NameRef(n)) => Name(n),
            _ => return Err(SyntaxError::new(0, "expected `#n := ...`").into()),
        };
        cur.expect(&Tok::Define)?;
        let body = parse_disj(&mut cur, scope)?;
        cur.finish()?;
        env.push(name, body)?;
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    struct Fixture {
        supply: VarSupply,
        names: HashMap<String, Var>,
    }

    impl Fixture {
        fn new() -> Self {
            Fixture {
                supply: VarSupply::new(),
                names: HashMap::new(),
            }
        }

        fn term(&mut self, src: &str) -> Term {
            let names = std::mem::take(&mut self.names);
            let mut scope = VarScope::with_names(&mut self.supply, names);
            let t = parse_term(src, &mut scope).unwrap();
            self.names = scope.into_names();
            t
        }

        fn var(&mut self, name: &str) -> Var {
            self.term(name).as_var().unwrap()
        }

        fn eq(&mut self, lhs: &str, rhs: &str) -> Equation {
            Equation::new(self.term(lhs), self.term(rhs))
        }
    }

    #[test]
    fn conjoin_unit_laws() {
        let phi = Constraint::eq(Term::constant("a"), Term::constant("a"));
        let psi = Constraint::Use(Name(0));
        assert_eq!(conjoin([Constraint::True, phi.clone()]), phi);
        assert_eq!(conjoin([]), Constraint::True);
        assert_eq!(
            conjoin([phi.clone(), psi.clone(), Constraint::True]),
            Constraint::Conj(vec![phi.clone(), psi.clone()])
        );
        assert_eq!(
            conjoin([Constraint::Conj(vec![phi.clone(), psi.clone()]), phi.clone()]),
            Constraint::Conj(vec![phi.clone(), psi, phi])
        );
    }

    #[test]
    fn solve_examples() {
        let mut fx = Fixture::new();
        let x = fx.var("X");
        let y = fx.var("Y");
        let e1 = fx.eq("X", "f(a)");
        let s = solve(&[e1], &SolvedForm::unconstrained(x)).unwrap();
        assert_eq!(s.root_term(), fx.term("f(a)"));
        assert_eq!(s.binding().len(), 1);

        let eqs = [fx.eq("X", "f(Y)"), fx.eq("Y", "b")];
        let s = solve(&eqs, &SolvedForm::unconstrained(x)).unwrap();
        assert_eq!(s.root_term(), fx.term("f(b)"));
        assert_eq!(s.binding().get(y), Some(&Term::constant("b")));

        let eqs = [fx.eq("X", "a"), fx.eq("X", "b")];
        assert!(solve(&eqs, &SolvedForm::unconstrained(x)).is_err());
    }

    #[test]
    fn generalise_examples() {
        let mut fx = Fixture::new();
        let x = fx.var("X");
        let fa = fx.term("f(a)");
        let fb = fx.term("f(b)");
        let s1 = SolvedForm::bound_to(x, fa);
        let s2 = SolvedForm::bound_to(x, fb);
        let g = generalise(&s1, &s2, &mut fx.supply);
        let z = g.common.root_term().args()[0].as_var().unwrap();
        assert_eq!(g.common.root_term(), Term::app("f", vec![Term::Var(z)]));
        assert_eq!(g.left, Constraint::eq(Term::Var(z), Term::constant("a")));
        assert_eq!(g.right, Constraint::eq(Term::Var(z), Term::constant("b")));

        let same = generalise(&s1, &s1, &mut fx.supply);
        assert_eq!(same.common, s1);
        assert!(same.left.is_true() && same.right.is_true());
    }

    #[test]
    fn generalise_keeps_tracked_bindings_consistent() {
        // s1 binds V as well as the root; s2 leaves V open inside its root term.
        let mut fx = Fixture::new();
        let x = fx.var("X");
        let v = fx.var("V");
        let s1 = SolvedForm::new(
            x,
            [(x, fx.term("g(c,h(a))")), (v, fx.term("h(a)"))].into_iter().collect(),
        );
        let s2 = SolvedForm::bound_to(x, fx.term("g(c,V)"));
        let g = generalise(&s1, &s2, &mut fx.supply);
        for (orig, rem) in [(&s1, &g.left), (&s2, &g.right)] {
            let eqs: Vec<Equation> = match rem {
                Constraint::True => vec![],
                Constraint::Eq(e) => vec![e.clone()],
                Constraint::Conj(cs) => cs
                    .iter()
                    .map(|c| match c {
                        Constraint::Eq(e) => e.clone(),
                        _ => unreachable!(),
                    })
                    .collect(),
                _ => unreachable!(),
            };
            let back = solve(&eqs, &g.common).unwrap();
            assert_eq!(back.canonical_root(), orig.canonical_root());
            let orig_v = orig.binding().get(v).cloned().unwrap_or(Term::Var(v));
            let back_v = back.binding().get(v).cloned().unwrap_or(Term::Var(v));
            let mut u = Unifier::from_substitution(back.binding());
            u.unify(&back_v, &orig_v).unwrap();
            assert_eq!(u.resolve(&back_v), u.resolve(&orig_v));
        }
    }

    #[test]
    #[should_panic(expected = "same root")]
    fn generalise_rejects_different_roots() {
        let s1 = SolvedForm::unconstrained(Var(0));
        let s2 = SolvedForm::unconstrained(Var(1));
        generalise(&s1, &s2, &mut VarSupply::starting_at(2));
    }

    #[test]
    fn expand_examples() {
        let phi = Constraint::eq(Term::constant("a"), Term::constant("a"));
        let alpha = Constraint::eq(Term::Var(Var(1)), Term::constant("b"));
        let beta = Constraint::eq(Term::Var(Var(1)), Term::constant("c"));
        let env = Env::new();
        assert_eq!(expand(&Constraint::True, &env).unwrap(), Constraint::True);

        let mut env = Env::new();
        let n = env.define(phi.clone()).unwrap();
        assert_eq!(expand(&Constraint::Use(n), &env).unwrap(), phi);

        let mut env = Env::new();
        let disj = Constraint::Disj(vec![alpha, beta]);
        let n = env.define(disj.clone()).unwrap();
        let c = Constraint::Conj(vec![phi.clone(), Constraint::Use(n)]);
        assert_eq!(expand(&c, &env).unwrap(), Constraint::Conj(vec![phi, disj]));

        assert_eq!(
            expand(&Constraint::Use(Name(9)), &env),
            Err(ConstraintError::UndefinedName(Name(9)))
        );
    }

    #[test]
    fn env_enforces_stack_discipline() {
        let mut env = Env::new();
        assert!(matches!(
            env.define(Constraint::Use(Name(5))),
            Err(ConstraintError::ForwardUse { .. })
        ));
        let a = env.define(Constraint::True).unwrap();
        let b = env.define(Constraint::Use(a)).unwrap();
        assert_ne!(a, b);
        assert_eq!(env.push(a, Constraint::True), Err(ConstraintError::Redefinition(a)));
    }

    #[test]
    fn constraint_syntax_round_trips() {
        let src = "#0 := (X = a & Y = f(X) | X = b)\n#1 := (#0 & Z = [a|T])\n#2 := (true)\n";
        let mut supply = VarSupply::new();
        let mut scope = VarScope::new(&mut supply);
        let env = parse_env(src, &mut scope).unwrap();
        let printed = env.to_string();
        let mut supply2 = VarSupply::new();
        let mut scope2 = VarScope::new(&mut supply2);
        let again = parse_env(&printed, &mut scope2).unwrap();
        assert_eq!(again, env);
        assert_eq!(printed.lines().count(), 3);
        assert!(printed.starts_with("#0 := ("));
    }

    #[test]
    fn disjunction_binds_weaker_than_conjunction() {
        let mut supply = VarSupply::new();
        let mut scope = VarScope::new(&mut supply);
        let c = parse_constraint("X = a & Y = b | X = c", &mut scope).unwrap();
        match c {
            Constraint::Disj(alts) => {
                assert_eq!(alts.len(), 2);
                assert!(matches!(alts[0], Constraint::Conj(_)));
            }
            other => panic!("expected disjunction, got {other}"),
        }
    }
}
