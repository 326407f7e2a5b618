use std::collections::BTreeSet;

use memlang::gen::{GenConfig, Generator};
use memlang::syntax::{parse_program, pretty, Comp, Ident, Val};
use memlang::typecheck::{type_of_comp, TyCtx};
use memlang::{ratio, Ty};
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = Ident> {
    prop::sample::select(vec!["x", "y", "z", "f", "g", "a0"]).prop_map(Ident::new)
}

fn val() -> impl Strategy<Value = Val> {
    let leaf = prop_oneof![
        Just(Val::True),
        Just(Val::False),
        ident().prop_map(Val::Var),
    ];
    leaf.prop_recursive(3, 8, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Val::pair(a, b))
    })
}

fn comp() -> impl Strategy<Value = Comp> {
    let leaf = prop_oneof![
        val().prop_map(Comp::Return),
        (0i64..=6, 1i64..=6)
            .prop_filter("probability", |(p, q)| p <= q)
            .prop_map(|(p, q)| Comp::Flip(ratio(p, q))),
        Just(Comp::Fresh),
        (val(), val()).prop_map(|(a, b)| Comp::Eq(a, b)),
        (val(), val()).prop_map(|(a, b)| Comp::App(a, b)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (ident(), inner.clone(), inner.clone()).prop_map(|(x, u, t)| Comp::Let(
                x,
                Box::new(u),
                Box::new(t)
            )),
            (val(), inner.clone(), inner.clone()).prop_map(|(v, u, t)| Comp::If(
                v,
                Box::new(u),
                Box::new(t)
            )),
            (val(), ident(), ident(), inner.clone()).prop_map(|(v, x, y, t)| Comp::Match(
                v,
                x,
                y,
                Box::new(t)
            )),
            (ident(), inner).prop_map(|(x, u)| Comp::MemFn(x, Box::new(u))),
        ]
    })
}

fn well_typed() -> impl Strategy<Value = Comp> {
    any::<u64>().prop_map(|s| Generator::new(s, GenConfig::default()).program())
}

proptest! {
    #[test]
    fn pretty_then_parse_is_identity(c in comp()) {
        let text = pretty(&c);
        let back = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert!(back.alpha_eq(&c), "{} reparsed as {}", text, pretty(&back));
    }

    #[test]
    fn substitution_bounds_free_variables(c in comp(), x in ident(), v in val()) {
        let mut allowed: BTreeSet<Ident> = c.free_vars();
        allowed.remove(&x);
        allowed.extend(v.free_vars());
        prop_assert!(c.substitute(&x, &v).free_vars().is_subset(&allowed));
    }

    #[test]
    fn alpha_eq_is_an_equivalence(a in comp(), b in comp(), x in ident(), v in val()) {
        let a2 = a.rename_apart();
        prop_assert!(a.alpha_eq(&a));
        prop_assert!(a.alpha_eq(&a2) && a2.alpha_eq(&a));
        prop_assert_eq!(a.alpha_eq(&b), b.alpha_eq(&a));
        if a.alpha_eq(&b) {
            prop_assert!(a2.alpha_eq(&b));
        }
        prop_assert!(a.substitute(&x, &v).alpha_eq(&a2.substitute(&x, &v)));
    }

    #[test]
    fn typing_is_deterministic_and_weakens(c in well_typed(), ty in prop_oneof![Just(Ty::Bool), Just(Ty::Atom), Just(Ty::Fun)]) {
        let ctx = TyCtx::new();
        let t1 = type_of_comp(&ctx, &c);
        prop_assert_eq!(&t1, &type_of_comp(&ctx, &c));
        prop_assert!(t1.is_ok());
        let mut used = c.all_idents();
        let unused = memlang::syntax::fresh_name(&Ident::new("w"), &mut used);
        prop_assert_eq!(t1, type_of_comp(&ctx.extend(&unused, ty), &c));
    }
}
