//! Semantic grammars: term templates attached to backbone rules and lexical
//! entries, and their instantiation at forest nodes.
//!
//! Grammar files hold one item per line; `%` starts a comment.
//!
//! ```text
//! start S
//! S -> NP VP : s([E,L],Di,Do), np([X,L],Di,D1), vp([E,X,L],D1,Do)
//! lex man : N : n([@x,@l], [cond(@l,man(@x)) | T], T)
//! ```
//!
//! A rule line lists the mother's pattern followed by one pattern per child;
//! all patterns on a line share their variables. A compound pattern
//! `label(a1, ..., ak)` denotes the list `[a1, ..., ak]`, so the label only
//! documents the category; list patterns are taken as written. In lexical
//! entries, `@name` is a marker that becomes the constant `name<k>`, where
//! `k` counts the leaves using that marker from left to right.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::constraint::{Equation, SolvedForm};
use crate::forest::{Forest, Node, NodeId};
use crate::parser::{BackboneGrammar, GrammarError, LexemeId, RuleId};
use crate::term::{parse_terms, Term, Var, VarScope, VarSupply};

const DEMO_SOURCE: &str = include_str!("../grammars/demo.gr");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Backbone(#[from] GrammarError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemError {
    #[error("leaf {node}: no lexical entry for `{token}` as {cat}")]
    MissingLexeme { node: NodeId, token: String, cat: String },
    #[error("node {node}: no semantic template for rule {rule}")]
    MissingTemplate { node: NodeId, rule: RuleId },
    #[error("node {node}: rule {rule} expects {expected} children, found {found}")]
    Arity {
        node: NodeId,
        rule: RuleId,
        expected: usize,
        found: usize,
    },
    #[error("node {node} is not {expected}")]
    WrongKind { node: NodeId, expected: &'static str },
}

/// A pattern list with template-local variables `_0 .. _{locals-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Pattern {
    terms: Vec<Term>,
    locals: u32,
}

impl Pattern {
    fn instantiate(&self, supply: &mut VarSupply, markers: &HashMap<String, Term>) -> Vec<Term> {
        let base = supply.peek();
        if self.locals > 0 {
            supply.reserve(Var(base + self.locals - 1));
        }
        self.terms.iter().map(|t| rename(t, base, markers)).collect()
    }
}

fn rename(t: &Term, base: u32, markers: &HashMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => Term::Var(Var(base + v.0)),
        Term::App(f, args) if args.is_empty() => match markers.get(f.as_str()) {
            Some(c) => c.clone(),
            None => t.clone(),
        },
        Term::App(f, args) => Term::app(f.as_str(), args.iter().map(|a| rename(a, base, markers)).collect()),
    }
}

fn is_marker(t: &Term) -> bool {
    matches!(t, Term::App(f, args) if args.is_empty() && f.as_str().starts_with('@'))
}

fn markers_in(t: &Term, out: &mut Vec<String>) {
    if let Term::App(f, args) = t {
        if is_marker(t) {
            if !out.iter().any(|m| m == f.as_str()) {
                out.push(f.as_str().to_string());
            }
        } else {
            for a in args.iter() {
                markers_in(a, out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleTemplate {
    pub rule: RuleId,
    pattern: Pattern,
}

impl RuleTemplate {
    pub fn mother(&self) -> &Term {
        &self.pattern.terms[0]
    }

    pub fn children(&self) -> &[Term] {
        &self.pattern.terms[1..]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafTemplate {
    pub lexeme: LexemeId,
    pattern: Pattern,
    markers: Vec<String>,
}

impl LeafTemplate {
    pub fn pattern(&self) -> &Term {
        &self.pattern.terms[0]
    }

    /// Marker names in first-occurrence order.
    pub fn markers(&self) -> &[String] {
        &self.markers
    }
}

/// A backbone grammar with a semantic template for every rule and lexeme.
#[derive(Clone, Debug)]
pub struct SemGrammar {
    backbone: BackboneGrammar,
    rules: Vec<RuleTemplate>,
    leaves: BTreeMap<LexemeId, LeafTemplate>,
}

impl SemGrammar {
    /// The PP-attachment demo grammar.
    pub fn demo() -> Self {
        Self::parse(DEMO_SOURCE).expect("bundled demo grammar is well-formed")
    }

    pub fn demo_source() -> &'static str {
        DEMO_SOURCE
    }

    pub fn parse(src: &str) -> Result<Self, LoadError> {
        let mut start = None;
        let mut rules = Vec::new();
        let mut rule_pats = Vec::new();
        let mut lex = Vec::new();
        let mut lex_pats = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| LoadError::Line { line, message };
            let text = raw.split('%').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let mut words = text.split_whitespace();
            match words.next() {
                Some("start") => {
                    let cat = words.next().ok_or_else(|| err("`start` needs a category".into()))?;
                    if words.next().is_some() {
                        return Err(err("`start` takes exactly one category".into()));
                    }
                    start = Some(cat.to_string());
                }
                Some("lex") => {
                    let body = text["lex".len()..].trim();
                    let mut parts = body.splitn(3, ':');
                    let (token, cat, tpl) = match (parts.next(), parts.next(), parts.next()) {
                        (Some(t), Some(c), Some(p)) => (t.trim(), c.trim(), p.trim()),
                        _ => return Err(err("expected `lex <token> : <Cat> : <template>`".into())),
                    };
                    if token.is_empty() || token.contains(char::is_whitespace) {
                        return Err(err(format!("bad token `{token}`")));
                    }
                    if cat.is_empty() || cat.contains(char::is_whitespace) {
                        return Err(err(format!("bad category `{cat}`")));
                    }
                    let pattern = parse_pattern(tpl).map_err(err)?;
                    if pattern.terms.len() != 1 {
                        return Err(err(format!(
                            "a lexical entry has one template, found {}",
                            pattern.terms.len()
                        )));
                    }
                    lex.push((token.to_string(), cat.to_string()));
                    lex_pats.push(pattern);
                }
                Some(_) => {
                    let (head, tpl) = text
                        .split_once(':')
                        .ok_or_else(|| err("expected `<Lhs> -> <Rhs> : <templates>`".into()))?;
                    let (lhs, rhs) = head
                        .split_once("->")
                        .ok_or_else(|| err("expected `->` in rule".into()))?;
                    let lhs = lhs.trim();
                    if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                        return Err(err(format!("bad left-hand side `{lhs}`")));
                    }
                    let rhs: Vec<String> = rhs.split_whitespace().map(str::to_string).collect();
                    let pattern = parse_pattern(tpl).map_err(err)?;
                    if pattern.terms.len() != rhs.len() + 1 {
                        return Err(err(format!(
                            "rule has {} children but {} templates (expected mother plus one per child)",
                            rhs.len(),
                            pattern.terms.len()
                        )));
                    }
                    if pattern.terms.iter().any(|t| {
                        let mut m = Vec::new();
                        markers_in(t, &mut m);
                        !m.is_empty()
                    }) {
                        return Err(err("`@` markers are only allowed in lexical entries".into()));
                    }
                    rules.push((lhs.to_string(), rhs));
                    rule_pats.push(pattern);
                }
                None => unreachable!("empty lines are skipped"),
            }
        }
        let start = match start.or_else(|| rules.first().map(|(l, _)| l.clone())) {
            Some(s) => s,
            None => {
                return Err(LoadError::Line {
                    line: 0,
                    message: "grammar has no rules and no `start` line".into(),
                })
            }
        };
        let backbone = BackboneGrammar::new(&start, rules, lex)?;
        let rules = rule_pats
            .into_iter()
            .enumerate()
            .map(|(i, pattern)| RuleTemplate {
                rule: RuleId(i),
                pattern,
            })
            .collect();
        let leaves = lex_pats
            .into_iter()
            .enumerate()
            .map(|(i, pattern)| {
                let mut markers = Vec::new();
                markers_in(&pattern.terms[0], &mut markers);
                (
                    LexemeId(i),
                    LeafTemplate {
                        lexeme: LexemeId(i),
                        pattern,
                        markers,
                    },
                )
            })
            .collect();
        Ok(SemGrammar {
            backbone,
            rules,
            leaves,
        })
    }

    pub fn backbone(&self) -> &BackboneGrammar {
        &self.backbone
    }

    pub fn rule_template(&self, rule: RuleId) -> Option<&RuleTemplate> {
        self.rules.get(rule.0)
    }

    pub fn leaf_template(&self, token: &str, cat: &str) -> Option<&LeafTemplate> {
        self.backbone.lexeme(token, cat).and_then(|id| self.leaves.get(&id))
    }

    /// Assigns node variables and numbers the leaf markers of `f`.
    pub fn prepare(&self, f: &Forest, supply: &mut VarSupply) -> Result<Prepared, SemError> {
        let vars = assign_vars(f, supply);
        let mut leaves: Vec<NodeId> = f.ids().filter(|id| f.node(*id).is_leaf()).collect();
        leaves.sort_by_key(|id| (f.node(*id).span().start, *id));
        let mut counters: HashMap<String, usize> = HashMap::new();
        let mut markers = vec![HashMap::new(); f.len()];
        for id in leaves {
            let Node::Leaf { cat, token, .. } = f.node(id) else {
                unreachable!()
            };
            let tpl = self.leaf_template(token, cat).ok_or_else(|| SemError::MissingLexeme {
                node: id,
                token: token.clone(),
                cat: cat.clone(),
            })?;
            for m in &tpl.markers {
                let k = counters.entry(m.clone()).or_insert(0);
                *k += 1;
                markers[id.0].insert(m.clone(), Term::constant(&format!("{}{}", &m[1..], k)));
            }
        }
        Ok(Prepared { vars, markers })
    }

    /// The leaf constraint `X_leaf = pattern` with fresh locals.
    pub fn leaf_constraint(
        &self,
        f: &Forest,
        leaf: NodeId,
        prep: &Prepared,
        supply: &mut VarSupply,
    ) -> Result<SolvedForm, SemError> {
        let Node::Leaf { cat, token, .. } = f.node(leaf) else {
            return Err(SemError::WrongKind {
                node: leaf,
                expected: "a leaf",
            });
        };
        let tpl = self.leaf_template(token, cat).ok_or_else(|| SemError::MissingLexeme {
            node: leaf,
            token: token.clone(),
            cat: cat.clone(),
        })?;
        let term = tpl.pattern.instantiate(supply, &prep.markers[leaf.0]).remove(0);
        let x = prep.vars.var(leaf);
        Ok(if term == Term::Var(x) {
            SolvedForm::unconstrained(x)
        } else {
            SolvedForm::bound_to(x, term)
        })
    }

    /// Equations `X_node = mother` and `X_child_i = child_i` for one fresh
    /// instance of the node's rule template.
    pub fn rule_constraint(
        &self,
        f: &Forest,
        node: NodeId,
        prep: &Prepared,
        supply: &mut VarSupply,
    ) -> Result<Vec<Equation>, SemError> {
        let Node::And { rule, children, .. } = f.node(node) else {
            return Err(SemError::WrongKind {
                node,
                expected: "an AND node",
            });
        };
        let tpl = self
            .rule_template(*rule)
            .ok_or(SemError::MissingTemplate { node, rule: *rule })?;
        if tpl.children().len() != children.len() {
            return Err(SemError::Arity {
                node,
                rule: *rule,
                expected: tpl.children().len(),
                found: children.len(),
            });
        }
        let terms = tpl.pattern.instantiate(supply, &HashMap::new());
        let owners = std::iter::once(node).chain(children.iter().copied());
        Ok(owners
            .zip(terms)
            .map(|(n, t)| Equation::new(Term::Var(prep.vars.var(n)), t))
            .collect())
    }
}

fn parse_pattern(src: &str) -> Result<Pattern, String> {
    let mut supply = VarSupply::new();
    let mut scope = VarScope::new(&mut supply);
    let terms = parse_terms(src, &mut scope).map_err(|e| e.to_string())?;
    if terms.is_empty() {
        return Err("missing semantic template".into());
    }
    let terms = terms
        .into_iter()
        .map(|t| match t {
            Term::App(ref f, ref args) if !args.is_empty() && f.as_str() != "." => {
                Term::list(args.to_vec(), None)
            }
            other => other,
        })
        .collect();
    Ok(Pattern {
        terms,
        locals: supply.peek(),
    })
}

/// Per-forest instantiation context: node variables and leaf marker values.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub vars: NodeVarMap,
    markers: Vec<HashMap<String, Term>>,
}

impl Prepared {
    /// Marker values of a leaf, e.g. `@l -> l3`.
    pub fn markers(&self, leaf: NodeId) -> BTreeMap<&str, &Term> {
        self.markers[leaf.0].iter().map(|(k, v)| (k.as_str(), v)).collect()
    }
}

/// The semantic variable of every node; an OR node shares its variable with
/// all of its children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeVarMap {
    vars: Vec<Var>,
}

impl NodeVarMap {
    pub fn var(&self, node: NodeId) -> Var {
        self.vars[node.0]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, Var)> + '_ {
        self.vars.iter().enumerate().map(|(i, v)| (NodeId(i), *v))
    }
}

pub fn assign_vars(f: &Forest, supply: &mut VarSupply) -> NodeVarMap {
    let mut parent: Vec<usize> = (0..f.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for id in f.ids() {
        if let Node::Or { children, .. } = f.node(id) {
            for c in children {
                let (a, b) = (find(&mut parent, id.0), find(&mut parent, c.0));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut class_var: HashMap<usize, Var> = HashMap::new();
    let vars = (0..f.len())
        .map(|i| {
            let r = find(&mut parent, i);
            *class_var.entry(r).or_insert_with(|| supply.fresh())
        })
        .collect();
    NodeVarMap { vars }
}
