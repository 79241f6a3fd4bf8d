mod common;

use common::{arb_substitution, arb_term, is_variant, MAX_INPUT_VAR};
use packsem::term::{anti_unify, anti_unify_n, apply, unify, Substitution, Term, VarSupply};
use proptest::prelude::*;

fn supply() -> VarSupply {
    VarSupply::starting_at(1000)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn unifier_unifies_and_is_idempotent(a in arb_term(), b in arb_term()) {
        if let Ok(s) = unify(&a, &b, &Substitution::new()) {
            prop_assert_eq!(apply(&s, &a), apply(&s, &b));
            prop_assert!(s.is_idempotent());
        }
    }

    #[test]
    fn term_unifies_with_its_instance(t in arb_term(), s in arb_substitution()) {
        let inst = apply(&s, &t);
        let mgu = unify(&t, &inst, &Substitution::new());
        prop_assert!(mgu.is_ok());
        let mgu = mgu.unwrap();
        prop_assert_eq!(apply(&mgu, &t), apply(&mgu, &inst));
    }

    #[test]
    fn unification_is_symmetric_up_to_renaming(a in arb_term(), b in arb_term()) {
        let ab = unify(&a, &b, &Substitution::new());
        let ba = unify(&b, &a, &Substitution::new());
        prop_assert_eq!(ab.is_ok(), ba.is_ok());
        if let (Ok(ab), Ok(ba)) = (ab, ba) {
            let pair = Term::app("p", vec![a.clone(), b.clone()]);
            prop_assert!(is_variant(&apply(&ab, &pair), &apply(&ba, &pair)));
        }
    }

    #[test]
    fn lgg_is_sound(a in arb_term(), b in arb_term()) {
        let g = anti_unify(&a, &b, &mut supply());
        prop_assert_eq!(g.left.apply(&g.term), a);
        prop_assert_eq!(g.right.apply(&g.term), b);
    }

    #[test]
    fn lgg_is_no_larger_than_inputs(a in arb_term(), b in arb_term()) {
        let g = anti_unify(&a, &b, &mut supply());
        prop_assert!(g.term.size() <= a.size().min(b.size()));
    }

    #[test]
    fn lgg_commutes_up_to_renaming(a in arb_term(), b in arb_term()) {
        let ab = anti_unify(&a, &b, &mut supply()).term;
        let ba = anti_unify(&b, &a, &mut supply()).term;
        prop_assert!(is_variant(&ab, &ba));
    }

    #[test]
    fn lgg_absorbs_instances(t in arb_term(), s in arb_substitution()) {
        let g = anti_unify(&t, &apply(&s, &t), &mut supply()).term;
        prop_assert!(is_variant(&g, &t), "{} vs {}", g, t);
    }

    #[test]
    fn lgg_of_identical_terms_is_the_term(t in arb_term()) {
        prop_assert_eq!(anti_unify(&t, &t, &mut supply()).term, t);
    }

    #[test]
    fn nary_lgg_equals_binary_fold(ts in prop::collection::vec(arb_term(), 1..5)) {
        let mut s = supply();
        let nary = anti_unify_n(&ts, &mut s);
        let mut fold = ts[0].clone();
        for t in &ts[1..] {
            fold = anti_unify(&fold, t, &mut s).term;
        }
        prop_assert!(is_variant(&nary.term, &fold), "{} vs {}", nary.term, fold);
        for (w, t) in nary.witnesses.iter().zip(&ts) {
            prop_assert_eq!(&w.apply(&nary.term), t);
        }
    }

    #[test]
    fn generated_terms_use_input_variables(t in arb_term()) {
        prop_assert!(t.vars().iter().all(|v| v.0 < MAX_INPUT_VAR));
    }
}
