//! Configuration judgements and memo-stack invariants.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{decompose, eval_value, Configuration, Decomposition, Env, EnvValue, Ext};
use crate::bigraph::{Edge, Node};
use crate::syntax::{Comp, Ty};
use crate::typecheck::{memo_pairs, type_of_comp, type_of_ext, MemoStack, TyCtx};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no configuration judgement: {0}")]
pub struct JudgementFailure(pub String);

fn env_ctx(env: &Env, ctx: &mut TyCtx) {
    for (x, v) in env {
        ctx.push(x.clone(), v.ty());
    }
}

/// Typing context of a configuration: the environments saved by memo
/// contexts, outermost first, followed by the current environment.
pub fn context_of(c: &Configuration) -> TyCtx {
    let mut ctx = TyCtx::new();
    for (_, _, restore) in c.term.memo_frames() {
        env_ctx(restore, &mut ctx);
    }
    env_ctx(&c.env, &mut ctx);
    ctx
}

fn labels_exist(c: &Configuration, v: &EnvValue) -> bool {
    let mut nodes = Vec::new();
    v.nodes(&mut nodes);
    nodes.iter().all(|n| match *n {
        Node::Fun(f) => c.graph.has_fun(f),
        Node::Atom(a) => c.graph.has_atom(a),
    })
}

/// Reconstructs `Γ | Δ ⊩ e : A` for a configuration and checks that every
/// label it mentions exists and every closure is well typed.
pub fn config_judgement(c: &Configuration) -> Result<(TyCtx, MemoStack, Ty), JudgementFailure> {
    let fail = |m: String| Err(JudgementFailure(m));
    let closure_labels: BTreeSet<_> = c.closures.keys().copied().collect();
    let graph_labels: BTreeSet<_> = c.graph.left().iter().copied().collect();
    if closure_labels != graph_labels {
        return fail("closures are not defined on exactly the function labels".into());
    }
    let envs = std::iter::once(&c.env)
        .chain(c.term.memo_frames().into_iter().map(|(_, _, r)| r))
        .chain(c.closures.values().map(|cl| &cl.captured));
    for env in envs {
        if let Some((x, v)) = env.iter().find(|(_, v)| !labels_exist(c, v)) {
            return fail(format!("`{x} ↦ {v}` mentions an unknown label"));
        }
    }
    for (f, cl) in &c.closures {
        let mut ctx = TyCtx::new();
        env_ctx(&cl.captured, &mut ctx);
        match type_of_comp(&ctx, &cl.abstraction()) {
            Ok(Ty::Fun) => {}
            Ok(t) => return fail(format!("closure {f} has type {t}")),
            Err(e) => return fail(format!("closure {f}: {e}")),
        }
    }
    let stack = memo_pairs(&c.term);
    for &(f, a) in &stack {
        if c.graph.edge(f, a) != Some(Edge::Undef) {
            return fail(format!("memo pair ({f}, {a}) is not an undefined edge"));
        }
    }
    let ctx = context_of(c);
    match type_of_ext(&ctx, &stack, &c.term) {
        Ok(ty) => Ok((ctx, stack, ty)),
        Err(e) => fail(e.to_string()),
    }
}

/// The memo stack has no duplicates, and an application about to fill an
/// undefined edge is not of a function already being memoized.
pub fn check_stack_invariants(c: &Configuration) -> bool {
    let stack = memo_pairs(&c.term);
    let distinct: BTreeSet<_> = stack.iter().collect();
    if distinct.len() != stack.len() {
        return false;
    }
    let Ok(Decomposition::Redex { redex, .. }) = decompose(&c.term) else {
        return true;
    };
    let Ext::Plain(Comp::App(v, w)) = redex else {
        return true;
    };
    match (eval_value(&c.env, &v), eval_value(&c.env, &w)) {
        (Ok(EnvValue::Fun(f)), Ok(EnvValue::Atom(a))) => {
            c.graph.edge(f, a) != Some(Edge::Undef) || stack.iter().all(|(g, _)| *g != f)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::{AtomLabel, FunLabel};
    use crate::opsem::{explore, Closure, STEP_BUDGET};
    use crate::syntax::{parse_program, Ident, Val};

    #[test]
    fn initial_judgement() {
        let p = parse_program("let val x <- fresh() in x == x").unwrap();
        let c = Configuration::initial(&p);
        let (ctx, stack, ty) = config_judgement(&c).unwrap();
        assert!(ctx.entries().is_empty());
        assert!(stack.is_empty());
        assert_eq!(ty, Ty::Bool);
        assert!(check_stack_invariants(&c));
    }

    #[test]
    fn every_reachable_configuration_is_judged() {
        let p = parse_program(
            "let val x0 <- fresh() in
             let val f1 <- memfn x. (let val b <- x == x0 in if b then flip(1/2) else return false) in
             let val f2 <- memfn y. f1 @ y in f2 @ x0",
        )
        .unwrap();
        let mut max_stack = 0;
        let d = explore(Configuration::initial(&p), STEP_BUDGET, |c| {
            let (_, stack, ty) = config_judgement(c).unwrap();
            assert_eq!(ty, Ty::Bool);
            assert!(check_stack_invariants(c));
            max_stack = max_stack.max(stack.len());
        })
        .unwrap();
        assert_eq!(max_stack, 2);
        for (t, _) in d.iter() {
            assert!(config_judgement(t).unwrap().1.is_empty());
        }
    }

    #[test]
    fn duplicated_pair_violates_invariant() {
        let (g, a) = crate::PartialBigraph::empty().add_right_undef();
        let (g, f) = g.add_left_undef();
        let memo = |inner: Ext| Ext::Memo {
            inner: Box::new(inner),
            fun: f,
            atom: a,
            restore: Env::new(),
        };
        let c = Configuration {
            env: Env::new(),
            term: memo(memo(Ext::Plain(Comp::ret(Val::True)))),
            graph: g,
            closures: [(
                f,
                Closure {
                    binder: Ident::new("y"),
                    body: Comp::ret(Val::True),
                    captured: Env::new(),
                },
            )]
            .into(),
        };
        assert!(!check_stack_invariants(&c));
        assert!(config_judgement(&c).is_err());
        assert_eq!(f, FunLabel(0));
        assert_eq!(a, AtomLabel(0));
    }
}
