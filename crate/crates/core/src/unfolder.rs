//! Recovering individual readings from a packed result, and the per-tree
//! oracle used to check it.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::constraint::{Constraint, Env, Name, SolvedForm};
use crate::forest::{enumerate_readings_from, readings_per_node, Forest, Node, NodeId, Reading};
use crate::packer::PackedResult;
use crate::semgrammar::{Prepared, SemError, SemGrammar};
use crate::term::{canonical_form, canonical_with, Term, Unifier, UnifyFailure, Var, VarSupply};

/// Reading bound used when `PACKSEM_ORACLE_BOUND` is unset or invalid.
pub const DEFAULT_ORACLE_BOUND: usize = 1000;

/// The oracle bound, overridable through `PACKSEM_ORACLE_BOUND`.
pub fn oracle_bound() -> usize {
    std::env::var("PACKSEM_ORACLE_BOUND")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_BOUND)
}

/// One satisfiable combination of disjunct choices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub binding: SolvedForm,
    /// Disjunct index chosen for every disjunctive name on the path.
    pub choices: BTreeMap<Name, usize>,
    /// Values of the queried variables, in query order.
    pub values: Vec<Term>,
}

struct ChoicePoint<'a> {
    mark: usize,
    goals: Vec<&'a Constraint>,
    expanded_len: usize,
    choices_len: usize,
    name: Option<Name>,
    alts: &'a [Constraint],
    next: usize,
}

/// Depth-first expansion of `sem ∧ goal` against an environment.
///
/// With memoization on, a name already expanded on the current path is not
/// expanded again, so each name contributes one choice per solution.
pub struct Unfolder<'a> {
    env: &'a Env,
    root: Var,
    query: Vec<Var>,
    memo: bool,
    u: Unifier,
    goals: Vec<&'a Constraint>,
    expanded: HashSet<Name>,
    expanded_log: Vec<Name>,
    choices: Vec<(Name, usize)>,
    stack: Vec<ChoicePoint<'a>>,
    started: bool,
    exhausted: bool,
}

impl<'a> Unfolder<'a> {
    pub fn new(sem: &SolvedForm, goal: &'a Constraint, env: &'a Env) -> Self {
        Unfolder {
            env,
            root: sem.root(),
            query: Vec::new(),
            memo: true,
            u: Unifier::from_substitution(sem.binding()),
            goals: vec![goal],
            expanded: HashSet::new(),
            expanded_log: Vec::new(),
            choices: Vec::new(),
            stack: Vec::new(),
            started: false,
            exhausted: false,
        }
    }

    pub fn memoize(mut self, on: bool) -> Self {
        self.memo = on;
        self
    }

    pub fn query(mut self, vars: Vec<Var>) -> Self {
        self.query = vars;
        self
    }

    fn backtrack(&mut self) -> bool {
        while let Some(cp) = self.stack.last_mut() {
            if cp.next < cp.alts.len() {
                let idx = cp.next;
                cp.next += 1;
                let alt = &cp.alts[idx];
                let (mark, name) = (cp.mark, cp.name);
                self.goals.clone_from(&cp.goals);
                let (elen, clen) = (cp.expanded_len, cp.choices_len);
                self.u.undo(mark);
                for n in self.expanded_log.drain(elen..) {
                    self.expanded.remove(&n);
                }
                self.choices.truncate(clen);
                if let Some(n) = name {
                    self.choices.push((n, idx));
                }
                self.goals.push(alt);
                return true;
            }
            self.stack.pop();
        }
        false
    }

    fn branch(&mut self, name: Option<Name>, alts: &'a [Constraint]) -> bool {
        self.stack.push(ChoicePoint {
            mark: self.u.mark(),
            goals: self.goals.clone(),
            expanded_len: self.expanded_log.len(),
            choices_len: self.choices.len(),
            name,
            alts,
            next: 0,
        });
        self.backtrack()
    }

    /// Runs until the goal stack is empty (a solution) or every branch fails.
    fn run(&mut self) -> bool {
        loop {
            let Some(goal) = self.goals.pop() else {
                return true;
            };
            let ok = match goal {
                Constraint::True => true,
                Constraint::Eq(e) => self.u.unify(&e.lhs, &e.rhs).is_ok(),
                Constraint::Conj(parts) => {
                    self.goals.extend(parts.iter().rev());
                    true
                }
                Constraint::Disj(alts) => self.branch(None, alts),
                Constraint::Use(n) => {
                    if self.memo && self.expanded.contains(n) {
                        true
                    } else {
                        match self.env.get(*n) {
                            None => false,
                            Some(body) => {
                                if self.expanded.insert(*n) {
                                    self.expanded_log.push(*n);
                                }
                                match body {
                                    Constraint::Disj(alts) => self.branch(Some(*n), alts),
                                    other => {
                                        self.goals.push(other);
                                        true
                                    }
                                }
                            }
                        }
                    }
                }
            };
            if !ok && !self.backtrack() {
                return false;
            }
        }
    }
}

impl Iterator for Unfolder<'_> {
    type Item = Solution;

    fn next(&mut self) -> Option<Solution> {
        if self.exhausted {
            return None;
        }
        if self.started && !self.backtrack() {
            self.exhausted = true;
            return None;
        }
        self.started = true;
        if !self.run() {
            self.exhausted = true;
            return None;
        }
        let root_term = self.u.resolve(&Term::Var(self.root));
        let binding = if root_term == Term::Var(self.root) {
            SolvedForm::unconstrained(self.root)
        } else {
            SolvedForm::bound_to(self.root, root_term)
        };
        let mut choices = BTreeMap::new();
        for (n, i) in &self.choices {
            choices.insert(*n, *i);
        }
        let values = self.query.iter().map(|v| self.u.resolve(&Term::Var(*v))).collect();
        Some(Solution {
            binding,
            choices,
            values,
        })
    }
}

/// Lazily enumerates the readings encoded by a packed result, at most `cap`.
pub fn enumerate_solutions(p: &PackedResult, cap: usize) -> std::iter::Take<Unfolder<'_>> {
    Unfolder::new(&p.sem_root, &p.d_root, &p.env).take(cap)
}

/// Canonical root bindings of all solutions.
pub fn packed_forms(p: &PackedResult) -> BTreeSet<Term> {
    enumerate_solutions(p, usize::MAX)
        .map(|s| s.binding.canonical_root())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("variable {0} does not occur in the packed result")]
    UnknownVariable(Var),
}

/// Distinct joint values of `vars` over all solutions, each tuple renamed
/// canonically.
pub fn query_bindings(p: &PackedResult, vars: &[Var]) -> Result<BTreeSet<Vec<Term>>, QueryError> {
    let known = p.known_vars();
    if let Some(v) = vars.iter().find(|v| !known.contains(v)) {
        return Err(QueryError::UnknownVariable(*v));
    }
    let mut out = BTreeSet::new();
    for s in Unfolder::new(&p.sem_root, &p.d_root, &p.env).query(vars.to_vec()) {
        let mut renaming = HashMap::new();
        out.insert(s.values.iter().map(|t| canonical_with(t, &mut renaming)).collect());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{readings} readings exceed the oracle bound of {bound}")]
    BoundExceeded { readings: String, bound: usize },
    #[error("a single tree is unsatisfiable at node {node}: {failure}")]
    Unsat { node: NodeId, failure: UnifyFailure },
    #[error(transparent)]
    Sem(#[from] SemError),
}

/// Solves all leaf and rule constraints of one tree below `node`; returns
/// the binding of the node's variable.
pub fn tree_semantics(
    f: &Forest,
    g: &SemGrammar,
    prep: &Prepared,
    node: NodeId,
    reading: &Reading,
    supply: &mut VarSupply,
) -> Result<Term, OracleError> {
    let mut u = Unifier::new();
    for id in f.reading_nodes(node, reading) {
        match f.node(id) {
            Node::Leaf { .. } => {
                let sf = g.leaf_constraint(f, id, prep, supply)?;
                u.unify(&Term::Var(sf.root()), &sf.root_term())
                    .map_err(|failure| OracleError::Unsat { node: id, failure })?;
            }
            Node::And { .. } => {
                for e in g.rule_constraint(f, id, prep, supply)? {
                    u.unify(&e.lhs, &e.rhs)
                        .map_err(|failure| OracleError::Unsat { node: id, failure })?;
                }
            }
            Node::Or { .. } => {}
        }
    }
    Ok(u.resolve(&Term::Var(prep.vars.var(node))))
}

/// Canonical semantics of every tree reading below `node`.
pub fn oracle_at(
    f: &Forest,
    g: &SemGrammar,
    prep: &Prepared,
    node: NodeId,
    bound: usize,
    supply: &mut VarSupply,
) -> Result<BTreeSet<Term>, OracleError> {
    let count = &readings_per_node(f)[node.0];
    if count.to_usize().map_or(true, |c| c > bound) {
        return Err(OracleError::BoundExceeded {
            readings: count.to_string(),
            bound,
        });
    }
    let mut out = BTreeSet::new();
    for r in enumerate_readings_from(f, node, bound) {
        out.insert(canonical_form(&tree_semantics(f, g, prep, node, &r, supply)?));
    }
    Ok(out)
}

/// Canonical root semantics of every tree reading of `f`.
pub fn oracle_per_tree(f: &Forest, g: &SemGrammar, bound: usize) -> Result<BTreeSet<Term>, OracleError> {
    let mut supply = VarSupply::new();
    let prep = g.prepare(f, &mut supply)?;
    oracle_at(f, g, &prep, f.root(), bound, &mut supply)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    Diff {
        /// Oracle forms the packed result does not produce.
        missing: BTreeSet<Term>,
        /// Packed forms no tree produces.
        extra: BTreeSet<Term>,
    },
}

impl Equivalence {
    pub fn is_equal(&self) -> bool {
        matches!(self, Equivalence::Equal)
    }
}

pub fn compare_forms(packed: &BTreeSet<Term>, oracle: &BTreeSet<Term>) -> Equivalence {
    if packed == oracle {
        return Equivalence::Equal;
    }
    Equivalence::Diff {
        missing: oracle.difference(packed).cloned().collect(),
        extra: packed.difference(oracle).cloned().collect(),
    }
}

pub fn equiv_check(p: &PackedResult, oracle: &BTreeSet<Term>) -> Equivalence {
    compare_forms(&packed_forms(p), oracle)
}

/// `var = term` lines, one block per solution.
pub fn solutions_text(solutions: &[Solution], names: &[(String, Var)]) -> String {
    let mut out = String::new();
    for (i, s) in solutions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if names.is_empty() {
            let _ = writeln!(out, "{} = {}", s.binding.root(), s.binding.root_term());
        }
        for ((label, _), value) in names.iter().zip(&s.values) {
            let _ = writeln!(out, "{label} = {value}");
        }
    }
    out
}

#[derive(Serialize)]
struct SolutionJson {
    root: String,
    choices: BTreeMap<String, usize>,
    values: BTreeMap<String, String>,
}

pub fn solutions_json(solutions: &[Solution], names: &[(String, Var)]) -> String {
    let docs: Vec<SolutionJson> = solutions
        .iter()
        .map(|s| SolutionJson {
            root: s.binding.root_term().to_string(),
            choices: s.choices.iter().map(|(n, i)| (n.to_string(), *i)).collect(),
            values: names
                .iter()
                .zip(&s.values)
                .map(|((label, _), v)| (label.clone(), v.to_string()))
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&docs).expect("solutions serialize")
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.binding)
    }
}
