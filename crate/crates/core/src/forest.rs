//! Shared packed parse forests: AND-OR DAGs over a context-free backbone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{BackboneGrammar, RuleId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Half-open token interval `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf {
        cat: String,
        token: String,
        span: Span,
    },
    And {
        cat: String,
        rule: RuleId,
        children: Vec<NodeId>,
        span: Span,
    },
    Or {
        children: Vec<NodeId>,
        span: Span,
    },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Leaf { .. } => &[],
            Node::And { children, .. } | Node::Or { children, .. } => children,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Node::Leaf { span, .. } | Node::And { span, .. } | Node::Or { span, .. } => *span,
        }
    }

    pub fn is_or(&self) -> bool {
        matches!(self, Node::Or { .. })
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    fn kind(&self) -> NodeKind {
        match self {
            Node::Leaf { .. } => NodeKind::Leaf,
            Node::And { .. } => NodeKind::And,
            Node::Or { .. } => NodeKind::Or,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("node {node} has child {child}, which does not exist")]
    DanglingChild { node: usize, child: usize },
    #[error("root {0} does not exist")]
    DanglingRoot(usize),
    #[error("the forest contains a cycle through node {0}")]
    Cycle(usize),
    #[error("node id {0} appears twice")]
    DuplicateId(usize),
    #[error("node {id}: {message}")]
    BadNode { id: usize, message: String },
    #[error("malformed forest JSON: {0}")]
    Json(String),
}

/// An immutable, acyclic AND-OR graph with dense node ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Forest {
    nodes: Vec<Node>,
    root: NodeId,
    order: Vec<NodeId>,
}

impl Forest {
    /// Checks that all references resolve and the graph is acyclic.
    pub fn new(nodes: Vec<Node>, root: NodeId) -> Result<Self, ForestError> {
        if root.0 >= nodes.len() {
            return Err(ForestError::DanglingRoot(root.0));
        }
        for (i, n) in nodes.iter().enumerate() {
            if let Some(c) = n.children().iter().find(|c| c.0 >= nodes.len()) {
                return Err(ForestError::DanglingChild { node: i, child: c.0 });
            }
        }
        let order = topological_order(&nodes)?;
        Ok(Forest { nodes, root, order })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Category label; an OR node takes its first child's label.
    pub fn category(&self, id: NodeId) -> &str {
        match &self.nodes[id.0] {
            Node::Leaf { cat, .. } | Node::And { cat, .. } => cat,
            Node::Or { children, .. } => match children.first() {
                Some(&c) if c != id => self.category(c),
                _ => "",
            },
        }
    }

    /// Every node after all of its children.
    pub fn bottom_up_order(&self) -> &[NodeId] {
        &self.order
    }

    /// Tokens covered by the forest, recovered from the leaves.
    pub fn tokens(&self) -> Vec<String> {
        let mut by_pos: BTreeMap<usize, &str> = BTreeMap::new();
        for n in &self.nodes {
            if let Node::Leaf { token, span, .. } = n {
                by_pos.entry(span.start).or_insert(token);
            }
        }
        by_pos.into_values().map(str::to_string).collect()
    }

    /// Nodes visited by `reading` below `from`, in depth-first preorder,
    /// including the OR nodes passed through.
    pub fn reading_nodes(&self, from: NodeId, reading: &Reading) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            out.push(id);
            match self.node(id) {
                Node::Or { children, .. } => {
                    let pick = reading.choice(id).unwrap_or(children[0]);
                    stack.push(pick);
                }
                n => stack.extend(n.children().iter().rev().copied()),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = ForestJson {
            root: self.root.0,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeJson {
                    id,
                    kind: n.kind(),
                    cat: match n {
                        Node::Leaf { cat, .. } | Node::And { cat, .. } => Some(cat.clone()),
                        Node::Or { .. } => None,
                    },
                    rule: match n {
                        Node::And { rule, .. } => Some(rule.0),
                        _ => None,
                    },
                    children: n.children().iter().map(|c| c.0).collect(),
                    token: match n {
                        Node::Leaf { token, .. } => Some(token.clone()),
                        _ => None,
                    },
                    span: [n.span().start, n.span().end],
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("forest serializes")
    }

    /// Reads the JSON interchange format. Node ids may be arbitrary distinct
    /// integers; they are renumbered densely in file order.
    pub fn from_json(src: &str) -> Result<Self, ForestError> {
        let doc: ForestJson = serde_json::from_str(src).map_err(|e| ForestError::Json(e.to_string()))?;
        let mut remap = HashMap::new();
        for (i, n) in doc.nodes.iter().enumerate() {
            if remap.insert(n.id, i).is_some() {
                return Err(ForestError::DuplicateId(n.id));
            }
        }
        let lookup = |node: usize, c: usize| {
            remap
                .get(&c)
                .map(|&i| NodeId(i))
                .ok_or(ForestError::DanglingChild { node, child: c })
        };
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for n in &doc.nodes {
            let bad = |m: &str| ForestError::BadNode {
                id: n.id,
                message: m.to_string(),
            };
            let span = Span::new(n.span[0], n.span[1]);
            let children = n
                .children
                .iter()
                .map(|&c| lookup(n.id, c))
                .collect::<Result<Vec<_>, _>>()?;
            nodes.push(match n.kind {
                NodeKind::Leaf => {
                    if !children.is_empty() {
                        return Err(bad("leaf nodes have no children"));
                    }
                    Node::Leaf {
                        cat: n.cat.clone().ok_or_else(|| bad("leaf without `cat`"))?,
                        token: n.token.clone().ok_or_else(|| bad("leaf without `token`"))?,
                        span,
                    }
                }
                NodeKind::And => Node::And {
                    cat: n.cat.clone().ok_or_else(|| bad("and-node without `cat`"))?,
                    rule: RuleId(n.rule.ok_or_else(|| bad("and-node without `rule`"))?),
                    children,
                    span,
                },
                NodeKind::Or => {
                    if children.is_empty() {
                        return Err(bad("or-node without children"));
                    }
                    Node::Or { children, span }
                }
            });
        }
        let root = *remap.get(&doc.root).ok_or(ForestError::DanglingRoot(doc.root))?;
        Forest::new(nodes, NodeId(root))
    }

    /// Graphviz rendering; each OR node is drawn as a box around its
    /// alternatives.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph forest {\n  compound=true;\n  node [shape=plaintext];\n");
        let mut in_cluster = vec![None; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Or { children, .. } = n {
                let _ = writeln!(out, "  subgraph cluster_{i} {{\n    style=rounded; label=\"{i}\";");
                for c in children {
                    if in_cluster[c.0].is_none() {
                        in_cluster[c.0] = Some(i);
                        let _ = writeln!(out, "    n{};", c.0);
                    }
                }
                out.push_str("  }\n");
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Leaf { cat, token, .. } => {
                    let _ = writeln!(out, "  n{i} [label=\"{}\\n{}\"];", escape(cat), escape(token));
                }
                Node::And { cat, .. } => {
                    let _ = writeln!(out, "  n{i} [label=\"{} ({i})\"];", escape(cat));
                }
                Node::Or { .. } => {}
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::And { children, .. } = n {
                for c in children {
                    match self.node(*c) {
                        Node::Or { children: alts, .. } => {
                            let _ = writeln!(out, "  n{i} -> n{} [lhead=cluster_{}];", alts[0].0, c.0);
                        }
                        _ => {
                            let _ = writeln!(out, "  n{i} -> n{};", c.0);
                        }
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn topological_order(nodes: &[Node]) -> Result<Vec<NodeId>, ForestError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    for start in 0..nodes.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Open;
        while let Some((id, next)) = stack.pop() {
            let children = nodes[id].children();
            if next < children.len() {
                stack.push((id, next + 1));
                let c = children[next].0;
                match mark[c] {
                    Mark::New => {
                        mark[c] = Mark::Open;
                        stack.push((c, 0));
                    }
                    Mark::Open => return Err(ForestError::Cycle(c)),
                    Mark::Done => {}
                }
            } else {
                mark[id] = Mark::Done;
                order.push(NodeId(id));
            }
        }
    }
    Ok(order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeKind {
    Leaf,
    And,
    Or,
}

#[derive(Serialize, Deserialize)]
struct ForestJson {
    root: usize,
    nodes: Vec<NodeJson>,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cat: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token: Option<String>,
    span: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Unreachable(NodeId),
    /// OR alternatives must agree on category and terminal yield.
    OrChildMismatch { or: NodeId, child: NodeId },
    OrChildIsOr { or: NodeId, child: NodeId },
    EmptyOr(NodeId),
    SpanMismatch { node: NodeId, message: String },
    UnknownRule { node: NodeId, rule: RuleId },
    RuleMismatch { node: NodeId, rule: RuleId },
    UnknownLexeme { node: NodeId, token: String, cat: String },
    InconsistentToken { position: usize },
    RootCategory { found: String, expected: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unreachable(n) => write!(f, "node {n} is unreachable from the root"),
            Violation::OrChildMismatch { or, child } => write!(
                f,
                "OR node {or}: child {child} differs in category or terminal yield"
            ),
            Violation::OrChildIsOr { or, child } => write!(f, "OR node {or} has OR child {child}"),
            Violation::EmptyOr(n) => write!(f, "OR node {n} has no children"),
            Violation::SpanMismatch { node, message } => write!(f, "node {node}: {message}"),
            Violation::UnknownRule { node, rule } => write!(f, "node {node} uses unknown rule {rule}"),
            Violation::RuleMismatch { node, rule } => {
                write!(f, "node {node} does not instantiate rule {rule}")
            }
            Violation::UnknownLexeme { node, token, cat } => {
                write!(f, "leaf {node}: `{token}` is not listed as {cat}")
            }
            Violation::InconsistentToken { position } => {
                write!(f, "leaves disagree on the token at position {position}")
            }
            Violation::RootCategory { found, expected } => {
                write!(f, "root category is {found}, expected {expected}")
            }
        }
    }
}

/// Checks the well-formedness conditions that make every reading a parse
/// tree of `g`. Acyclicity is guaranteed by construction.
pub fn validate(f: &Forest, g: &BackboneGrammar) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut reach = vec![false; f.len()];
    let mut stack = vec![f.root()];
    while let Some(id) = stack.pop() {
        if !std::mem::replace(&mut reach[id.0], true) {
            stack.extend(f.node(id).children().iter().copied());
        }
    }
    out.extend(reach.iter().enumerate().filter(|(_, r)| !**r).map(|(i, _)| Violation::Unreachable(NodeId(i))));

    let mut tokens: HashMap<usize, &str> = HashMap::new();
    let mut bad_positions = BTreeSet::new();
    for id in f.ids() {
        let span = f.node(id).span();
        match f.node(id) {
            Node::Leaf { cat, token, .. } => {
                if span.len() != 1 {
                    out.push(Violation::SpanMismatch {
                        node: id,
                        message: format!("leaf span {span} does not cover one token"),
                    });
                }
                if let Some(prev) = tokens.insert(span.start, token) {
                    if prev != token {
                        bad_positions.insert(span.start);
                    }
                }
                if g.lexeme(token, cat).is_none() {
                    out.push(Violation::UnknownLexeme {
                        node: id,
                        token: token.clone(),
                        cat: cat.clone(),
                    });
                }
            }
            Node::And {
                cat, rule, children, ..
            } => {
                let mut at = span.start;
                for c in children {
                    let cs = f.node(*c).span();
                    if cs.start != at {
                        break;
                    }
                    at = cs.end;
                }
                if at != span.end || children.is_empty() {
                    out.push(Violation::SpanMismatch {
                        node: id,
                        message: format!("children spans do not concatenate to {span}"),
                    });
                }
                match g.rule(*rule) {
                    None => out.push(Violation::UnknownRule { node: id, rule: *rule }),
                    Some(r) => {
                        let rhs: Vec<&str> = children.iter().map(|c| f.category(*c)).collect();
                        if r.lhs != *cat || rhs != r.rhs.iter().map(String::as_str).collect::<Vec<_>>() {
                            out.push(Violation::RuleMismatch { node: id, rule: *rule });
                        }
                    }
                }
            }
            Node::Or { children, .. } => {
                if children.is_empty() {
                    out.push(Violation::EmptyOr(id));
                }
                let cat = f.category(id);
                for c in children {
                    if f.node(*c).is_or() {
                        out.push(Violation::OrChildIsOr { or: id, child: *c });
                    } else if f.category(*c) != cat || f.node(*c).span() != span {
                        out.push(Violation::OrChildMismatch { or: id, child: *c });
                    }
                }
            }
        }
    }
    out.extend(bad_positions.into_iter().map(|position| Violation::InconsistentToken { position }));
    if f.category(f.root()) != g.start() {
        out.push(Violation::RootCategory {
            found: f.category(f.root()).to_string(),
            expected: g.start().to_string(),
        });
    }
    out
}

/// Number of tree readings: sum at OR nodes, product at AND nodes.
pub fn readings_count(f: &Forest) -> BigUint {
    readings_per_node(f).swap_remove(f.root().0)
}

pub fn readings_per_node(f: &Forest) -> Vec<BigUint> {
    let mut count = vec![BigUint::zero(); f.len()];
    for &id in f.bottom_up_order() {
        count[id.0] = match f.node(id) {
            Node::Leaf { .. } => BigUint::one(),
            Node::And { children, .. } => children.iter().fold(BigUint::one(), |acc, c| acc * &count[c.0]),
            Node::Or { children, .. } => children.iter().fold(BigUint::zero(), |acc, c| acc + &count[c.0]),
        };
    }
    count
}

/// A tree reading: the alternative chosen at each OR node it passes through.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reading {
    choice: BTreeMap<NodeId, NodeId>,
}

impl Reading {
    pub fn new(choice: BTreeMap<NodeId, NodeId>) -> Self {
        Reading { choice }
    }

    pub fn choice(&self, or: NodeId) -> Option<NodeId> {
        self.choice.get(&or).copied()
    }

    pub fn choices(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.choice
    }

    /// True iff the choices are exactly the OR nodes the reading passes
    /// through below `from`, each naming one of that node's children.
    pub fn is_well_formed(&self, f: &Forest, from: NodeId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            match f.node(id) {
                Node::Or { children, .. } => match self.choice(id) {
                    Some(c) if children.contains(&c) => {
                        seen.insert(id);
                        stack.push(c);
                    }
                    _ => return false,
                },
                n => stack.extend(n.children().iter().copied()),
            }
        }
        seen.len() == self.choice.len()
    }
}

/// Lazily yields every reading of the subforest under `from`, at most `cap`.
pub struct Readings<'f> {
    forest: &'f Forest,
    from: NodeId,
    /// OR nodes met in depth-first preorder with the current child index.
    trail: Vec<(NodeId, usize)>,
    started: bool,
    remaining: usize,
}

impl<'f> Readings<'f> {
    fn extend_trail(&mut self) {
        let prefix = self.trail.len();
        let mut seen = 0usize;
        let mut stack = vec![self.from];
        while let Some(id) = stack.pop() {
            match self.forest.node(id) {
                Node::Or { children, .. } => {
                    let pick = if seen < prefix {
                        self.trail[seen].1
                    } else {
                        self.trail.push((id, 0));
                        0
                    };
                    seen += 1;
                    stack.push(children[pick]);
                }
                n => stack.extend(n.children().iter().rev().copied()),
            }
        }
    }

    fn current(&self) -> Reading {
        Reading {
            choice: self
                .trail
                .iter()
                .map(|&(or, i)| (or, self.forest.node(or).children()[i]))
                .collect(),
        }
    }
}

impl Iterator for Readings<'_> {
    type Item = Reading;

    fn next(&mut self) -> Option<Reading> {
        if self.remaining == 0 {
            return None;
        }
        if !self.started {
            self.started = true;
            self.extend_trail();
        } else {
            loop {
                let (or, idx) = *self.trail.last()?;
                if idx + 1 < self.forest.node(or).children().len() {
                    self.trail.last_mut().unwrap().1 += 1;
                    break;
                }
                self.trail.pop();
            }
            self.extend_trail();
        }
        self.remaining -= 1;
        Some(self.current())
    }
}

pub fn enumerate_readings(f: &Forest, cap: usize) -> Readings<'_> {
    enumerate_readings_from(f, f.root(), cap)
}

pub fn enumerate_readings_from(f: &Forest, from: NodeId, cap: usize) -> Readings<'_> {
    Readings {
        forest: f,
        from,
        trail: Vec::new(),
        started: false,
        remaining: cap,
    }
}

/// For every node, the strict descendants present in all readings of its
/// subforest.
pub fn must_occur_all(f: &Forest) -> Vec<BTreeSet<NodeId>> {
    let mut out: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); f.len()];
    for &id in f.bottom_up_order() {
        let with_self = |c: NodeId, out: &[BTreeSet<NodeId>]| {
            let mut s = out[c.0].clone();
            s.insert(c);
            s
        };
        out[id.0] = match f.node(id) {
            Node::Leaf { .. } => BTreeSet::new(),
            Node::And { children, .. } => {
                let mut s = BTreeSet::new();
                for &c in children {
                    s.extend(with_self(c, &out));
                }
                s
            }
            Node::Or { children, .. } => {
                let mut it = children.iter().map(|&c| with_self(c, &out));
                let first = it.next().unwrap_or_default();
                it.fold(first, |acc, s| acc.intersection(&s).copied().collect())
            }
        };
    }
    out
}

pub fn must_occur(f: &Forest, node: NodeId) -> BTreeSet<NodeId> {
    must_occur_all(f).swap_remove(node.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NodeCounts {
    pub and: usize,
    pub or: usize,
    pub leaf: usize,
}

impl NodeCounts {
    /// AND plus OR nodes.
    pub fn internal(&self) -> usize {
        self.and + self.or
    }

    pub fn total(&self) -> usize {
        self.and + self.or + self.leaf
    }
}

pub fn node_counts(f: &Forest) -> NodeCounts {
    let mut c = NodeCounts { and: 0, or: 0, leaf: 0 };
    for n in f.nodes() {
        match n {
            Node::Leaf { .. } => c.leaf += 1,
            Node::And { .. } => c.and += 1,
            Node::Or { .. } => c.or += 1,
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, pp_sentence};

    fn backbone() -> BackboneGrammar {
        let r = |l: &str, rhs: &[&str]| (l.to_string(), rhs.iter().map(|s| s.to_string()).collect());
        let l = |t: &str, c: &str| (t.to_string(), c.to_string());
        BackboneGrammar::new(
            "S",
            vec![
                r("S", &["NP", "VP"]),
                r("VP", &["V", "NP"]),
                r("VP", &["VP", "PP"]),
                r("NP", &["PN"]),
                r("NP", &["Det", "N"]),
                r("NP", &["NP", "PP"]),
                r("PP", &["P", "NP"]),
            ],
            vec![
                l("i", "PN"),
                l("saw", "V"),
                l("a", "Det"),
                l("man", "N"),
                l("hill", "N"),
                l("on", "P"),
            ],
        )
        .unwrap()
    }

    fn pp_forest(n: usize) -> Forest {
        parse(&pp_sentence(n), &backbone()).unwrap()
    }

    fn leaf(cat: &str, token: &str, i: usize) -> Node {
        Node::Leaf {
            cat: cat.into(),
            token: token.into(),
            span: Span::new(i, i + 1),
        }
    }

    fn catalan(n: u64) -> BigUint {
        let mut c = BigUint::one();
        for k in 0..n {
            c = c * BigUint::from(2 * (2 * k + 1)) / BigUint::from(k + 2);
        }
        c
    }

    #[test]
    fn single_leaf_order() {
        let f = Forest::new(vec![leaf("PN", "i", 0)], NodeId(0)).unwrap();
        assert_eq!(f.bottom_up_order(), &[NodeId(0)]);
        assert!(must_occur(&f, NodeId(0)).is_empty());
    }

    #[test]
    fn chain_order() {
        let f = Forest::new(
            vec![
                leaf("PN", "i", 0),
                Node::And {
                    cat: "NP".into(),
                    rule: RuleId(3),
                    children: vec![NodeId(0)],
                    span: Span::new(0, 1),
                },
            ],
            NodeId(1),
        )
        .unwrap();
        assert_eq!(f.bottom_up_order(), &[NodeId(0), NodeId(1)]);
    }

    #[test]
    fn local_tree_counts_and_must_occur() {
        let f = Forest::new(
            vec![
                leaf("NP", "x", 0),
                leaf("VP", "y", 1),
                Node::And {
                    cat: "S".into(),
                    rule: RuleId(0),
                    children: vec![NodeId(0), NodeId(1)],
                    span: Span::new(0, 2),
                },
            ],
            NodeId(2),
        )
        .unwrap();
        assert_eq!(node_counts(&f), NodeCounts { and: 1, or: 0, leaf: 2 });
        assert_eq!(must_occur(&f, NodeId(2)), BTreeSet::from([NodeId(0), NodeId(1)]));
        let all: Vec<_> = enumerate_readings(&f, 10).collect();
        assert_eq!(all, vec![Reading::default()]);
    }

    #[test]
    fn cycles_are_rejected() {
        let err = Forest::new(
            vec![
                Node::And {
                    cat: "A".into(),
                    rule: RuleId(0),
                    children: vec![NodeId(1)],
                    span: Span::new(0, 1),
                },
                Node::And {
                    cat: "B".into(),
                    rule: RuleId(0),
                    children: vec![NodeId(0)],
                    span: Span::new(0, 1),
                },
            ],
            NodeId(0),
        )
        .unwrap_err();
        assert!(matches!(err, ForestError::Cycle(_)));
    }

    #[test]
    fn parser_output_validates() {
        let g = backbone();
        for n in 0..5 {
            assert_eq!(validate(&pp_forest(n), &g), vec![]);
        }
    }

    #[test]
    fn or_children_with_different_categories_violate() {
        let g = backbone();
        let f = Forest::new(
            vec![
                leaf("PN", "i", 0),
                Node::And {
                    cat: "NP".into(),
                    rule: RuleId(3),
                    children: vec![NodeId(0)],
                    span: Span::new(0, 1),
                },
                Node::Or {
                    children: vec![NodeId(1), NodeId(0)],
                    span: Span::new(0, 1),
                },
            ],
            NodeId(2),
        )
        .unwrap();
        let v = validate(&f, &g);
        assert!(v.contains(&Violation::OrChildMismatch {
            or: NodeId(2),
            child: NodeId(0)
        }));
    }

    #[test]
    fn pp_readings_are_catalan() {
        for (n, expect) in [(2usize, 5u32), (4, 42), (6, 429), (10, 58786)] {
            assert_eq!(readings_count(&pp_forest(n)), BigUint::from(expect));
        }
        for n in 0..=16u64 {
            assert_eq!(readings_count(&pp_forest(n as usize)), catalan(n + 1));
        }
    }

    #[test]
    fn enumeration_matches_count_and_is_distinct() {
        let g = backbone();
        for n in 0..=4 {
            let f = pp_forest(n);
            let all: Vec<Reading> = enumerate_readings(&f, usize::MAX).collect();
            assert_eq!(BigUint::from(all.len()), readings_count(&f));
            let distinct: BTreeSet<_> = all.iter().cloned().collect();
            assert_eq!(distinct.len(), all.len());
            for r in &all {
                assert!(r.is_well_formed(&f, f.root()));
                let nodes = f.reading_nodes(f.root(), r);
                for id in nodes {
                    if let Node::And { rule, children, cat, .. } = f.node(id) {
                        let rule = g.rule(*rule).unwrap();
                        assert_eq!(&rule.lhs, cat);
                        let rhs: Vec<&str> = children.iter().map(|c| f.category(*c)).collect();
                        assert_eq!(rhs, rule.rhs.iter().map(String::as_str).collect::<Vec<_>>());
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_respects_cap() {
        let f = pp_forest(4);
        assert_eq!(enumerate_readings(&f, 7).count(), 7);
        assert_eq!(enumerate_readings(&f, 0).count(), 0);
    }

    #[test]
    fn bottom_up_order_respects_edges() {
        let f = pp_forest(2);
        let pos: HashMap<NodeId, usize> = f.bottom_up_order().iter().enumerate().map(|(i, n)| (*n, i)).collect();
        for id in f.ids() {
            for c in f.node(id).children() {
                assert!(pos[c] < pos[&id]);
            }
        }
    }

    #[test]
    fn must_occur_matches_brute_force() {
        for n in 0..=3 {
            let f = pp_forest(n);
            let fast = must_occur_all(&f);
            for id in f.ids() {
                let mut brute: Option<BTreeSet<NodeId>> = None;
                for r in enumerate_readings_from(&f, id, usize::MAX) {
                    let mut below: BTreeSet<NodeId> = f.reading_nodes(id, &r).into_iter().collect();
                    below.remove(&id);
                    brute = Some(match brute {
                        None => below,
                        Some(b) => b.intersection(&below).copied().collect(),
                    });
                }
                assert_eq!(fast[id.0], brute.unwrap(), "node {id} in forest n={n}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let f = pp_forest(2);
        let back = Forest::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_with_sparse_ids() {
        let src = r#"{"root": 10, "nodes": [
            {"id": 7, "kind": "leaf", "cat": "NP", "token": "x", "span": [0,1]},
            {"id": 3, "kind": "leaf", "cat": "VP", "token": "y", "span": [1,2]},
            {"id": 10, "kind": "and", "cat": "S", "rule": 0, "children": [7, 3], "span": [0,2]}
        ]}"#;
        let f = Forest::from_json(src).unwrap();
        assert_eq!(f.root(), NodeId(2));
        assert_eq!(f.tokens(), vec!["x", "y"]);
        let bad = src.replace("[7, 3]", "[7, 4]");
        assert!(matches!(Forest::from_json(&bad), Err(ForestError::DanglingChild { .. })));
    }

    #[test]
    fn dot_draws_or_clusters() {
        let dot = pp_forest(1).to_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("subgraph cluster_"));
        assert!(dot.contains("lhead=cluster_"));
    }

    #[test]
    fn node_counts_grow_polynomially() {
        let counts: Vec<usize> = (2..=16).map(|n| node_counts(&pp_forest(n)).internal()).collect();
        // Third differences of a cubic are constant.
        let d3: Vec<i64> = counts
            .windows(4)
            .map(|w| w[3] as i64 - 3 * w[2] as i64 + 3 * w[1] as i64 - w[0] as i64)
            .collect();
        assert!(d3.windows(2).all(|w| w[0] == w[1]), "{counts:?} {d3:?}");
    }
}
