//! Context-free backbone grammars and a CKY builder for maximally shared
//! parse forests.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{Forest, Node, NodeId, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleId(pub usize);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LexemeId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: RuleId,
    pub lhs: String,
    pub rhs: Vec<String>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub token: String,
    pub category: String,
    pub lexeme: LexemeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("rule `{0}` has an empty right-hand side")]
    EmptyRhs(String),
    #[error("rule `{rule}` has {len} right-hand-side symbols; at most 2 are supported (binarize the grammar)")]
    RuleTooLong { rule: String, len: usize },
    #[error("unary rules form a cycle through {0}")]
    UnaryCycle(String),
    #[error("lexical entry `{token}` : {category} is listed twice")]
    DuplicateLexeme { token: String, category: String },
}

/// Rules with one or two right-hand-side categories, a lexicon, and a start
/// category.
#[derive(Clone, Debug)]
pub struct BackboneGrammar {
    start: String,
    rules: Vec<Rule>,
    lexicon: BTreeMap<String, Vec<LexEntry>>,
    /// Categories ordered so that `B` precedes `A` for every unary rule `A -> B`.
    categories: Vec<String>,
    cat_index: HashMap<String, usize>,
}

impl BackboneGrammar {
    /// Builds a grammar; rule ids are positions in `rules`, lexeme ids are
    /// positions in `lexicon`.
    pub fn new(
        start: &str,
        rules: Vec<(String, Vec<String>)>,
        lexicon: Vec<(String, String)>,
    ) -> Result<Self, GrammarError> {
        let mut out_rules = Vec::with_capacity(rules.len());
        for (i, (lhs, rhs)) in rules.into_iter().enumerate() {
            let rule = Rule {
                id: RuleId(i),
                lhs,
                rhs,
            };
            if rule.rhs.is_empty() {
                return Err(GrammarError::EmptyRhs(rule.to_string()));
            }
            if rule.rhs.len() > 2 {
                return Err(GrammarError::RuleTooLong {
                    len: rule.rhs.len(),
                    rule: rule.to_string(),
                });
            }
            out_rules.push(rule);
        }
        let mut lex: BTreeMap<String, Vec<LexEntry>> = BTreeMap::new();
        for (i, (token, category)) in lexicon.into_iter().enumerate() {
            let entries = lex.entry(token.clone()).or_default();
            if entries.iter().any(|e| e.category == category) {
                return Err(GrammarError::DuplicateLexeme { token, category });
            }
            entries.push(LexEntry {
                token,
                category,
                lexeme: LexemeId(i),
            });
        }

        let mut names: Vec<String> = vec![start.to_string()];
        for r in &out_rules {
            names.push(r.lhs.clone());
            names.extend(r.rhs.iter().cloned());
        }
        for e in lex.values().flatten() {
            names.push(e.category.clone());
        }
        let mut seen = HashMap::new();
        names.retain(|n| seen.insert(n.clone(), ()).is_none());
        let categories = unary_topological_order(&names, &out_rules)?;
        let cat_index = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Ok(BackboneGrammar {
            start: start.to_string(),
            rules: out_rules,
            lexicon: lex,
            categories,
            cat_index,
        })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        self.rules.get(id.0)
    }

    pub fn lexicon(&self) -> impl Iterator<Item = &LexEntry> + '_ {
        self.lexicon.values().flatten()
    }

    pub fn entries(&self, token: &str) -> &[LexEntry] {
        self.lexicon.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn lexeme(&self, token: &str, category: &str) -> Option<LexemeId> {
        self.entries(token)
            .iter()
            .find(|e| e.category == category)
            .map(|e| e.lexeme)
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Categories that are unreachable from the start symbol or that derive
    /// no terminal string.
    pub fn warnings(&self) -> Vec<String> {
        let mut productive: HashMap<&str, bool> = HashMap::new();
        for e in self.lexicon() {
            productive.insert(&e.category, true);
        }
        loop {
            let mut changed = false;
            for r in &self.rules {
                if !productive.contains_key(r.lhs.as_str())
                    && r.rhs.iter().all(|c| productive.contains_key(c.as_str()))
                {
                    productive.insert(&r.lhs, true);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut reachable: HashMap<&str, bool> = HashMap::new();
        let mut stack = vec![self.start.as_str()];
        while let Some(c) = stack.pop() {
            if reachable.insert(c, true).is_some() {
                continue;
            }
            for r in self.rules.iter().filter(|r| r.lhs == c) {
                stack.extend(r.rhs.iter().map(String::as_str));
            }
        }
        let mut out = Vec::new();
        for c in &self.categories {
            if !reachable.contains_key(c.as_str()) {
                out.push(format!("category {c} is unreachable from {}", self.start));
            }
            if !productive.contains_key(c.as_str()) {
                out.push(format!("category {c} derives no terminal string"));
            }
        }
        out
    }
}

fn unary_topological_order(names: &[String], rules: &[Rule]) -> Result<Vec<String>, GrammarError> {
    // Edge B -> A for every unary rule A -> B.
    let idx: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut indegree = vec![0usize; names.len()];
    let mut out_edges = vec![Vec::new(); names.len()];
    for r in rules.iter().filter(|r| r.rhs.len() == 1) {
        let (a, b) = (idx[r.lhs.as_str()], idx[r.rhs[0].as_str()]);
        if a == b {
            return Err(GrammarError::UnaryCycle(r.lhs.clone()));
        }
        out_edges[b].push(a);
        indegree[a] += 1;
    }
    let mut ready: Vec<usize> = (0..names.len()).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(names.len());
    while let Some(i) = ready.pop() {
        order.push(names[i].clone());
        for &j in out_edges[i].iter().rev() {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(j);
            }
        }
    }
    if order.len() != names.len() {
        let stuck = (0..names.len())
            .find(|&i| indegree[i] > 0)
            .map(|i| names[i].clone())
            .unwrap_or_default();
        return Err(GrammarError::UnaryCycle(stuck));
    }
    Ok(order)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown token `{token}` at position {position}")]
    UnknownToken { position: usize, token: String },
    #[error("no parse: the input does not derive from {0}")]
    NoParse(String),
}

/// Builds the parse forest of `tokens`.
///
/// Every (category, span) cell with two or more derivations becomes one OR
/// node over its derivations; cells with a single derivation are that
/// derivation's node. Nodes not reachable from the root are dropped.
pub fn parse<S: AsRef<str>>(tokens: &[S], g: &BackboneGrammar) -> Result<Forest, ParseError> {
    let n = tokens.len();
    for (position, t) in tokens.iter().enumerate() {
        if g.entries(t.as_ref()).is_empty() {
            return Err(ParseError::UnknownToken {
                position,
                token: t.as_ref().to_string(),
            });
        }
    }
    if n == 0 {
        return Err(ParseError::NoParse(g.start.clone()));
    }
    let ncat = g.categories.len();
    let mut binary: HashMap<(usize, usize), Vec<&Rule>> = HashMap::new();
    let mut unary: Vec<Vec<&Rule>> = vec![Vec::new(); ncat];
    for r in &g.rules {
        let rhs: Vec<usize> = r.rhs.iter().map(|c| g.cat_index[c]).collect();
        match rhs.as_slice() {
            [b] => unary[*b].push(r),
            [b, c] => binary.entry((*b, *c)).or_default().push(r),
            _ => unreachable!("rule arity checked at load"),
        }
    }

    let mut nodes: Vec<Node> = Vec::new();
    // chart[i][j - i - 1]: finalized (category index, node) pairs for span i..j.
    let mut chart: Vec<Vec<Vec<(usize, NodeId)>>> = vec![Vec::new(); n];
    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            let span = Span::new(i, j);
            let mut derivs: Vec<Vec<NodeId>> = vec![Vec::new(); ncat];
            if len == 1 {
                for e in g.entries(tokens[i].as_ref()) {
                    let id = NodeId(nodes.len());
                    nodes.push(Node::Leaf {
                        cat: e.category.clone(),
                        token: e.token.clone(),
                        span,
                    });
                    derivs[g.cat_index[&e.category]].push(id);
                }
            }
            for k in i + 1..j {
                let left = &chart[i][k - i - 1];
                let right = &chart[k][j - k - 1];
                for &(lc, ln) in left {
                    for &(rc, rn) in right {
                        for r in binary.get(&(lc, rc)).into_iter().flatten() {
                            let id = NodeId(nodes.len());
                            nodes.push(Node::And {
                                cat: r.lhs.clone(),
                                rule: r.id,
                                children: vec![ln, rn],
                                span,
                            });
                            derivs[g.cat_index[&r.lhs]].push(id);
                        }
                    }
                }
            }
            let mut cell = Vec::new();
            for cat in 0..ncat {
                let found = std::mem::take(&mut derivs[cat]);
                let node = match found.len() {
                    0 => continue,
                    1 => found[0],
                    _ => {
                        let id = NodeId(nodes.len());
                        nodes.push(Node::Or {
                            children: found,
                            span,
                        });
                        id
                    }
                };
                cell.push((cat, node));
                for r in &unary[cat] {
                    let id = NodeId(nodes.len());
                    nodes.push(Node::And {
                        cat: r.lhs.clone(),
                        rule: r.id,
                        children: vec![node],
                        span,
                    });
                    derivs[g.cat_index[&r.lhs]].push(id);
                }
            }
            chart[i].push(cell);
        }
    }
    let start = g.cat_index[&g.start];
    let root = chart[0][n - 1]
        .iter()
        .find(|(c, _)| *c == start)
        .map(|(_, node)| *node)
        .ok_or_else(|| ParseError::NoParse(g.start.clone()))?;
    Ok(prune(nodes, root))
}

/// Keeps the nodes reachable from `root`, renumbered in creation order so
/// children still precede parents.
fn prune(nodes: Vec<Node>, root: NodeId) -> Forest {
    let mut keep = vec![false; nodes.len()];
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut keep[id.0], true) {
            continue;
        }
        stack.extend(nodes[id.0].children().iter().copied());
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut next = 0;
    for (old, k) in keep.iter().enumerate() {
        if *k {
            remap[old] = next;
            next += 1;
        }
    }
    let renumber = |c: &[NodeId]| c.iter().map(|c| NodeId(remap[c.0])).collect::<Vec<_>>();
    let kept: Vec<Node> = nodes
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(node, _)| match node {
            Node::And {
                cat,
                rule,
                children,
                span,
            } => Node::And {
                cat,
                rule,
                children: renumber(&children),
                span,
            },
            Node::Or { children, span } => Node::Or {
                children: renumber(&children),
                span,
            },
            leaf => leaf,
        })
        .collect();
    Forest::new(kept, NodeId(remap[root.0])).expect("CKY output is a well-formed DAG")
}

/// `i saw a man` followed by `n` copies of `on a hill`.
pub fn pp_sentence(n: usize) -> Vec<String> {
    let mut out: Vec<String> = ["i", "saw", "a", "man"].iter().map(|s| s.to_string()).collect();
    for _ in 0..n {
        out.extend(["on", "a", "hill"].iter().map(|s| s.to_string()));
    }
    out
}
