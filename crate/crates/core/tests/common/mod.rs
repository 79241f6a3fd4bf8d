#![allow(dead_code)]

use std::collections::BTreeSet;

use packsem::forest::{enumerate_readings_from, Forest, NodeId};
use packsem::semgrammar::SemGrammar;
use packsem::term::{canonical_form, Substitution, Term, Var};
use proptest::prelude::*;

/// Variables used by generated terms stay below this id, so fresh variables
/// can start above it.
pub const MAX_INPUT_VAR: u32 = 5;

pub fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0..MAX_INPUT_VAR).prop_map(|v| Term::Var(Var(v))),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::constant),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("g", vec![t])),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app("f", vec![a, b])),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| Term::app("h", vec![a, b, c])),
        ]
    })
}

/// A substitution over the input variables with non-variable or variable
/// images drawn from `arb_term`.
pub fn arb_substitution() -> impl Strategy<Value = Substitution> {
    prop::collection::btree_map(0..MAX_INPUT_VAR, arb_term(), 0..4).prop_map(|m| {
        // Rename image variables above the input range so the map is idempotent.
        m.into_iter()
            .map(|(v, t)| (Var(v), shift_vars(&t, 50)))
            .collect()
    })
}

pub fn shift_vars(t: &Term, by: u32) -> Term {
    match t {
        Term::Var(v) => Term::Var(Var(v.0 + by)),
        Term::App(f, args) => Term::app(f.as_str(), args.iter().map(|a| shift_vars(a, by)).collect()),
    }
}

/// True iff `a` and `b` are equal up to a bijective variable renaming.
pub fn is_variant(a: &Term, b: &Term) -> bool {
    canonical_form(a) == canonical_form(b)
}

/// `S -> S S` over `a`: every binary bracketing of the sentence is a reading,
/// and each reading's semantics records its bracketing and threads a list.
pub fn bracketing_grammar() -> SemGrammar {
    SemGrammar::parse(
        "S -> S S : s(t(A,B),I,O), s(A,I,M), s(B,M,O)\n\
         lex a : S : s(@x, [@x|T], T)\n",
    )
    .unwrap()
}

/// Lexical ambiguity plus unary rules; the B reading leaves a variable open.
pub fn lexical_grammar() -> SemGrammar {
    SemGrammar::parse(
        "start S\n\
         S -> A   : s(X), a(X)\n\
         S -> B   : s(X), b(X)\n\
         S -> S S : s(c(L,R)), s(L), s(R)\n\
         lex x : A : a(p(@x))\n\
         lex x : B : b(q(@x, Y))\n",
    )
    .unwrap()
}

/// Strict descendants common to every reading under `node`.
pub fn must_occur_brute_force(f: &Forest, node: NodeId) -> BTreeSet<NodeId> {
    let mut acc: Option<BTreeSet<NodeId>> = None;
    for r in enumerate_readings_from(f, node, usize::MAX) {
        let mut below: BTreeSet<NodeId> = f.reading_nodes(node, &r).into_iter().collect();
        below.remove(&node);
        acc = Some(match acc {
            None => below,
            Some(a) => a.intersection(&below).copied().collect(),
        });
    }
    acc.unwrap_or_default()
}
