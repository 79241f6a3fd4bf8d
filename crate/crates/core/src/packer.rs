//! Packed semantic construction.
//!
//! One bottom-up pass over the forest computes, for every node ν, a solved
//! form `SEM[ν]` and a goal `D[ν]` (`true` or a name). Leaves take their
//! lexical constraint. AND nodes solve the rule constraint together with the
//! children's solved forms; their goal is the conjunction of the children's
//! goals. OR nodes generalise the alternatives' solved forms: the common part
//! becomes `SEM[ν]`, and a fresh name is defined as the disjunction of
//! `remainder_i ∧ D[child_i]`. The result `SEM[root] ∧ D[root] ∧ ENV` is
//! equivalent to the disjunction of every tree's semantics.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::constraint::{
    conjoin, disjoin, expand, generalise, generalise_n, solve_projected, Constraint, Env, Name,
    SolvedForm, Unsat,
};
use crate::forest::{readings_per_node, Forest, Node, NodeId};
use crate::parser::RuleId;
use crate::semgrammar::{NodeVarMap, SemError, SemGrammar};
use crate::term::{Term, Var, VarSupply};
use crate::unfolder::{compare_forms, oracle_at, tree_semantics, Equivalence, OracleError, Unfolder};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackOptions {
    /// Generalise all alternatives of an OR node at once instead of folding
    /// pairwise from the left.
    pub nary: bool,
}

impl Default for PackOptions {
    fn default() -> Self {
        PackOptions { nary: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PackError {
    #[error(
        "semantic construction failed at node {node} (rule {rule}): {source}; \
         packing assumes semantic rules never fail on a single tree"
    )]
    Failure {
        node: NodeId,
        rule: RuleId,
        source: Unsat,
    },
    #[error(transparent)]
    Sem(#[from] SemError),
}

/// Per-node arrays, each entry written once in bottom-up order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackWork {
    pub sem: Vec<SolvedForm>,
    pub d: Vec<Constraint>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PackStats {
    pub generalise_calls: usize,
    pub or_nodes: usize,
    /// AND nodes whose goal is a fresh conjunction name.
    pub and_names: usize,
    pub max_root_size: usize,
}

#[derive(Clone, Debug)]
pub struct PackedResult {
    pub sem_root: SolvedForm,
    pub d_root: Constraint,
    pub env: Env,
    pub vars: NodeVarMap,
    pub work: PackWork,
    pub stats: PackStats,
}

impl PackedResult {
    /// Variables of the root term that the environment constrains, in
    /// first-occurrence order.
    pub fn slot_variables(&self) -> Vec<Var> {
        let env_vars = self.env.vars();
        self.sem_root
            .root_term()
            .vars()
            .into_iter()
            .filter(|v| env_vars.contains(v))
            .collect()
    }

    /// Variables that occur in the root, its bindings, or the environment.
    pub fn known_vars(&self) -> BTreeSet<Var> {
        let mut known: BTreeSet<Var> = self.sem_root.root_term().vars().into_iter().collect();
        known.insert(self.sem_root.root());
        known.extend(self.sem_root.binding().domain());
        known.extend(self.env.vars());
        known
    }

    /// Text dump: the conjunctive part, the goal, and the environment.
    pub fn dump(&self) -> String {
        let mut out = String::from("SEM\n");
        let _ = writeln!(out, "  {} = {}", self.sem_root.root(), self.sem_root.root_term());
        for (v, t) in self.sem_root.binding().iter() {
            if v != self.sem_root.root() {
                let _ = writeln!(out, "  {v} = {t}");
            }
        }
        let _ = writeln!(out, "GOAL\n  {}", self.d_root);
        out.push_str("ENV\n");
        for (n, body) in self.env.iter() {
            let _ = writeln!(out, "  {n} := {body}");
        }
        out
    }

    /// Graphviz drawing of the root term with shared variable nodes.
    pub fn root_dot(&self) -> String {
        let mut out = String::from("digraph sem {\n  node [shape=plaintext];\n");
        let mut next = 0usize;
        let mut var_nodes: HashMap<Var, String> = HashMap::new();
        let slots: HashSet<Var> = self.slot_variables().into_iter().collect();
        fn walk(
            t: &Term,
            out: &mut String,
            next: &mut usize,
            vars: &mut HashMap<Var, String>,
            slots: &HashSet<Var>,
        ) -> String {
            match t {
                Term::Var(v) => vars
                    .entry(*v)
                    .or_insert_with(|| {
                        let id = format!("v{}", v.0);
                        let style = if slots.contains(v) { ", shape=box" } else { "" };
                        let _ = writeln!(out, "  {id} [label=\"{v}\"{style}];");
                        id
                    })
                    .clone(),
                Term::App(f, args) => {
                    let id = format!("t{next}");
                    *next += 1;
                    let label = if f.as_str() == "." { "·" } else { f.as_str() };
                    let _ = writeln!(out, "  {id} [label=\"{}\"];", label.replace('"', "\\\""));
                    for a in args.iter() {
                        let child = walk(a, out, next, vars, slots);
                        let _ = writeln!(out, "  {id} -> {child};");
                    }
                    id
                }
            }
        }
        walk(&self.sem_root.root_term(), &mut out, &mut next, &mut var_nodes, &slots);
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for PackedResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Builds the packed semantic representation of `f`.
pub fn pack(f: &Forest, g: &SemGrammar, opts: PackOptions) -> Result<PackedResult, PackError> {
    let mut supply = VarSupply::new();
    let prep = g.prepare(f, &mut supply)?;
    let mut sem: Vec<Option<SolvedForm>> = vec![None; f.len()];
    let mut d: Vec<Constraint> = vec![Constraint::True; f.len()];
    for id in f.ids().filter(|id| f.node(*id).is_leaf()) {
        sem[id.0] = Some(g.leaf_constraint(f, id, &prep, &mut supply)?);
    }
    let mut env = Env::new();
    let mut tracked: HashSet<Var> = HashSet::new();
    let mut stats = PackStats::default();
    let define = |env: &mut Env, tracked: &mut HashSet<Var>, body: Constraint| -> Name {
        tracked.extend(body.vars());
        env.define(body).expect("names are fresh and defined bottom-up")
    };

    for &id in f.bottom_up_order() {
        match f.node(id) {
            Node::Leaf { .. } => {}
            Node::And { rule, children, .. } => {
                let mut eqs = g.rule_constraint(f, id, &prep, &mut supply)?;
                for c in children {
                    eqs.extend(sem[c.0].as_ref().expect("children come first").equations());
                }
                let x = prep.vars.var(id);
                let sf = solve_projected(&eqs, &SolvedForm::unconstrained(x), |v| tracked.contains(&v))
                    .map_err(|source| PackError::Failure {
                        node: id,
                        rule: *rule,
                        source,
                    })?;
                let goals: Vec<Constraint> = children.iter().map(|c| d[c.0].clone()).filter(|c| !c.is_true()).collect();
                d[id.0] = match goals.len() {
                    0 => Constraint::True,
                    1 => goals.into_iter().next().expect("one goal"),
                    _ => {
                        stats.and_names += 1;
                        Constraint::Use(define(&mut env, &mut tracked, conjoin(goals)))
                    }
                };
                sem[id.0] = Some(sf);
            }
            Node::Or { children, .. } => {
                stats.or_nodes += 1;
                let alts: Vec<SolvedForm> = children
                    .iter()
                    .map(|c| sem[c.0].clone().expect("children come first"))
                    .collect();
                if opts.nary || alts.len() <= 2 {
                    stats.generalise_calls += 1;
                    let (common, rems) = generalise_n(&alts, &mut supply);
                    let body = disjoin(
                        rems.into_iter()
                            .zip(children)
                            .map(|(r, c)| conjoin([r, d[c.0].clone()]))
                            .collect(),
                    );
                    d[id.0] = Constraint::Use(define(&mut env, &mut tracked, body));
                    sem[id.0] = Some(common);
                } else {
                    let mut acc = alts[0].clone();
                    let mut acc_d = d[children[0].0].clone();
                    for (alt, c) in alts.iter().zip(children).skip(1) {
                        stats.generalise_calls += 1;
                        let gen = generalise(&acc, alt, &mut supply);
                        let body = disjoin(vec![
                            conjoin([gen.left, acc_d]),
                            conjoin([gen.right, d[c.0].clone()]),
                        ]);
                        acc_d = Constraint::Use(define(&mut env, &mut tracked, body));
                        acc = gen.common;
                    }
                    d[id.0] = acc_d;
                    sem[id.0] = Some(acc);
                }
            }
        }
        let size = sem[id.0].as_ref().map_or(0, SolvedForm::root_size);
        stats.max_root_size = stats.max_root_size.max(size);
    }
    let sem: Vec<SolvedForm> = sem
        .into_iter()
        .map(|s| s.expect("every node is visited"))
        .collect();
    let root = f.root();
    Ok(PackedResult {
        sem_root: sem[root.0].clone(),
        d_root: d[root.0].clone(),
        env,
        vars: prep.vars,
        work: PackWork { sem, d },
        stats,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvariantViolation {
    DuplicateName(Name),
    UndefinedName { name: Name, used_by: Option<Name> },
    Equivalence { node: NodeId, detail: Equivalence },
    Size { node: NodeId, packed: usize, smallest_tree: usize },
    Oracle { node: NodeId, error: String },
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantViolation::DuplicateName(n) => write!(f, "name {n} is defined twice"),
            InvariantViolation::UndefinedName { name, used_by: Some(by) } => {
                write!(f, "name {name} is used by {by} but not defined before it")
            }
            InvariantViolation::UndefinedName { name, used_by: None } => {
                write!(f, "goal uses undefined name {name}")
            }
            InvariantViolation::Equivalence { node, detail } => match detail {
                Equivalence::Equal => write!(f, "node {node}: equivalent"),
                Equivalence::Diff { missing, extra } => write!(
                    f,
                    "node {node}: packed semantics differ from the trees ({} missing, {} extra)",
                    missing.len(),
                    extra.len()
                ),
            },
            InvariantViolation::Size {
                node,
                packed,
                smallest_tree,
            } => write!(
                f,
                "node {node}: packed size {packed} exceeds smallest tree size {smallest_tree}"
            ),
            InvariantViolation::Oracle { node, error } => write!(f, "node {node}: {error}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InvariantReport {
    pub violations: Vec<InvariantViolation>,
    /// Nodes whose equivalence and size were checked against the trees.
    pub nodes_checked: usize,
    /// Nodes skipped because their subforest has too many readings.
    pub nodes_skipped: usize,
}

impl InvariantReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that names are uniquely defined before use, and, for every node
/// with at most `reading_bound` readings, that `SEM[ν] ∧ D[ν]` has exactly
/// the solutions of the node's trees and that `SEM[ν]` is no larger than
/// any single tree's semantics.
pub fn check_invariants(p: &PackedResult, f: &Forest, g: &SemGrammar, reading_bound: usize) -> InvariantReport {
    let mut report = InvariantReport::default();
    let mut defined: BTreeSet<Name> = BTreeSet::new();
    for (name, body) in p.env.iter() {
        for used in body.uses() {
            if !defined.contains(&used) {
                report.violations.push(InvariantViolation::UndefinedName {
                    name: used,
                    used_by: Some(name),
                });
            }
        }
        if !defined.insert(name) {
            report.violations.push(InvariantViolation::DuplicateName(name));
        }
    }
    for used in p.d_root.uses() {
        if !defined.contains(&used) {
            report.violations.push(InvariantViolation::UndefinedName { name: used, used_by: None });
        }
    }
    if !report.violations.is_empty() {
        return report;
    }

    let mut supply = VarSupply::starting_at(max_var(p) + 1);
    let prep = match g.prepare(f, &mut supply) {
        Ok(prep) => prep,
        Err(e) => {
            report.violations.push(InvariantViolation::Oracle {
                node: f.root(),
                error: e.to_string(),
            });
            return report;
        }
    };
    let counts = readings_per_node(f);
    for id in f.ids() {
        if counts[id.0].to_usize().map_or(true, |c| c > reading_bound) {
            report.nodes_skipped += 1;
            continue;
        }
        report.nodes_checked += 1;
        let oracle = match oracle_at(f, g, &prep, id, reading_bound, &mut supply) {
            Ok(o) => o,
            Err(e) => {
                report.violations.push(InvariantViolation::Oracle {
                    node: id,
                    error: e.to_string(),
                });
                continue;
            }
        };
        let sem = &p.work.sem[id.0];
        let packed: BTreeSet<Term> = Unfolder::new(sem, &p.work.d[id.0], &p.env)
            .map(|s| s.binding.canonical_root())
            .collect();
        let eq = compare_forms(&packed, &oracle);
        if !eq.is_equal() {
            report.violations.push(InvariantViolation::Equivalence { node: id, detail: eq });
        }
        let smallest = oracle.iter().map(Term::size).min().unwrap_or(0);
        if sem.root_size() > smallest {
            report.violations.push(InvariantViolation::Size {
                node: id,
                packed: sem.root_size(),
                smallest_tree: smallest,
            });
        }
    }
    report
}

fn max_var(p: &PackedResult) -> u32 {
    let mut m = 0;
    for s in &p.work.sem {
        m = m.max(s.root().0);
        for (v, t) in s.binding().iter() {
            m = m.max(v.0);
            m = t.vars().iter().map(|v| v.0).fold(m, u32::max);
        }
    }
    p.env.vars().iter().map(|v| v.0).fold(m, u32::max)
}

/// Expands `SEM[node] ∧ D[node]` fully; convenient for inspection of small
/// results.
pub fn expanded_node(p: &PackedResult, node: NodeId) -> Result<Constraint, crate::constraint::ConstraintError> {
    let d = expand(&p.work.d[node.0], &p.env)?;
    Ok(conjoin([p.work.sem[node.0].to_constraint(), d]))
}

/// Semantics of a single tree of `f`, for comparisons outside the packer.
pub fn single_tree_semantics(
    f: &Forest,
    g: &SemGrammar,
    reading: &crate::forest::Reading,
) -> Result<Term, OracleError> {
    let mut supply = VarSupply::new();
    let prep = g.prepare(f, &mut supply)?;
    tree_semantics(f, g, &prep, f.root(), reading, &mut supply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{enumerate_readings, node_counts, Reading, Span};
    use crate::parser::{parse, pp_sentence};
    use crate::term::canonical_form;
    use crate::unfolder::{enumerate_solutions, equiv_check, oracle_per_tree, query_bindings};

    fn pp(n: usize) -> (Forest, SemGrammar) {
        let g = SemGrammar::demo();
        (parse(&pp_sentence(n), g.backbone()).unwrap(), g)
    }

    #[test]
    fn single_leaf_forest() {
        let g = SemGrammar::parse("lex i : PN : pn(X, [i|T], T)\nstart PN").unwrap();
        let f = Forest::new(
            vec![Node::Leaf {
                cat: "PN".into(),
                token: "i".into(),
                span: Span::new(0, 1),
            }],
            NodeId(0),
        )
        .unwrap();
        let p = pack(&f, &g, PackOptions::default()).unwrap();
        assert_eq!(p.d_root, Constraint::True);
        assert!(p.env.is_empty());
        let mut supply = VarSupply::new();
        let prep = g.prepare(&f, &mut supply).unwrap();
        let leaf = g.leaf_constraint(&f, NodeId(0), &prep, &mut supply).unwrap();
        assert_eq!(p.sem_root.canonical_root(), leaf.canonical_root());
    }

    #[test]
    fn single_tree_matches_oracle() {
        let (f, g) = pp(0);
        let p = pack(&f, &g, PackOptions::default()).unwrap();
        assert_eq!(p.d_root, Constraint::True);
        assert!(p.env.is_empty());
        let tree = single_tree_semantics(&f, &g, &Reading::default()).unwrap();
        assert_eq!(p.sem_root.canonical_root(), canonical_form(&tree));
    }

    #[test]
    fn two_pps_give_five_solutions_over_four_slots() {
        let (f, g) = pp(2);
        let p = pack(&f, &g, PackOptions::default()).unwrap();
        assert_eq!(enumerate_solutions(&p, usize::MAX).count(), 5);
        let slots = p.slot_variables();
        assert_eq!(slots.len(), 4, "{}", p.dump());
        let tuples = query_bindings(&p, &slots).unwrap();
        let got: BTreeSet<String> = tuples
            .iter()
            .map(|t| t.iter().map(Term::to_string).collect::<Vec<_>>().join(","))
            .collect();
        let expect: BTreeSet<String> = [
            "l1,e1,l1,e1",
            "l2,x2,l1,e1",
            "l1,e1,l4,x3",
            "l2,x2,l2,x2",
            "l2,x2,l4,x3",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn invariants_hold_for_small_forests() {
        for n in 0..=3 {
            let (f, g) = pp(n);
            for nary in [true, false] {
                let p = pack(&f, &g, PackOptions { nary }).unwrap();
                let r = check_invariants(&p, &f, &g, 100);
                assert!(r.is_ok(), "n={n} nary={nary}: {:?}", r.violations);
                assert_eq!(r.nodes_skipped, 0);
            }
        }
    }

    #[test]
    fn single_tree_size_is_tight() {
        let (f, g) = pp(0);
        let p = pack(&f, &g, PackOptions::default()).unwrap();
        let oracle = oracle_per_tree(&f, &g, 10).unwrap();
        assert_eq!(p.sem_root.root_size(), oracle.iter().next().unwrap().size());
    }

    #[test]
    fn dangling_use_is_reported() {
        let (f, g) = pp(1);
        let mut p = pack(&f, &g, PackOptions::default()).unwrap();
        p.env = Env::from_defs_unchecked(vec![(Name(0), Constraint::Use(Name(7)))]);
        p.d_root = Constraint::Use(Name(0));
        let r = check_invariants(&p, &f, &g, 100);
        assert!(r.violations.contains(&InvariantViolation::UndefinedName {
            name: Name(7),
            used_by: Some(Name(0))
        }));
    }

    #[test]
    fn binary_fold_agrees_with_nary() {
        for n in 0..=4 {
            let (f, g) = pp(n);
            let a = pack(&f, &g, PackOptions { nary: true }).unwrap();
            let b = pack(&f, &g, PackOptions { nary: false }).unwrap();
            let oracle = oracle_per_tree(&f, &g, 1000).unwrap();
            assert!(equiv_check(&a, &oracle).is_equal());
            assert!(equiv_check(&b, &oracle).is_equal());
        }
    }

    #[test]
    fn name_economy_and_call_counts() {
        for n in 0..=8 {
            let (f, g) = pp(n);
            let p = pack(&f, &g, PackOptions::default()).unwrap();
            let counts = node_counts(&f);
            assert_eq!(p.stats.or_nodes, counts.or);
            assert_eq!(p.stats.generalise_calls, counts.or);
            assert!(p.env.len() <= counts.or + p.stats.and_names);
            let b = pack(&f, &g, PackOptions { nary: false }).unwrap();
            let arity_sum: usize = f
                .nodes()
                .iter()
                .filter_map(|n| match n {
                    Node::Or { children, .. } => Some(children.len() - 1),
                    _ => None,
                })
                .sum();
            assert_eq!(b.stats.generalise_calls, arity_sum);
        }
    }

    #[test]
    fn packing_is_deterministic() {
        let (f, g) = pp(3);
        let a = pack(&f, &g, PackOptions::default()).unwrap();
        let b = pack(&f, &g, PackOptions::default()).unwrap();
        assert_eq!(a.dump(), b.dump());
    }

    #[test]
    fn failing_rule_is_reported() {
        let src = "S -> A B : s(X), a(X), b(X)\nlex x : A : a(f)\nlex y : B : b(g)";
        let g = SemGrammar::parse(src).unwrap();
        let f = parse(&["x", "y"], g.backbone()).unwrap();
        let err = pack(&f, &g, PackOptions::default()).unwrap_err();
        assert!(matches!(err, PackError::Failure { rule: RuleId(0), .. }));
        assert!(err.to_string().contains("never fail"));
    }

    #[test]
    fn dump_has_three_sections() {
        let (f, g) = pp(2);
        let p = pack(&f, &g, PackOptions::default()).unwrap();
        let text = p.dump();
        assert!(text.starts_with("SEM\n"));
        assert!(text.contains("\nGOAL\n  #"));
        assert!(text.contains("\nENV\n  #0 := "));
        let dot = p.root_dot();
        assert!(dot.starts_with("digraph sem"));
        assert_eq!(dot.matches("shape=box").count(), 4);
    }

    #[test]
    fn expanded_root_is_disjunctive() {
        let (f, g) = pp(1);
        let p = pack(&f, &g, PackOptions::default()).unwrap();
        let c = expanded_node(&p, f.root()).unwrap();
        assert!(c.uses().is_empty());
        assert_eq!(enumerate_readings(&f, 10).count(), 2);
    }
}
