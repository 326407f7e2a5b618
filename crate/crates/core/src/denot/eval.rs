use std::cell::RefCell;

use num_traits::{One, Zero};

use super::{
    assignments, bern, bind_classes, canonicalize, class_shape_violation, prob_true, BiasState,
    CoendClass, DenEnv, DenotError, Witness,
};
use crate::bigraph::TotalBigraph;
use crate::opsem::{eval_value, EnvValue, OpsemError};
use crate::syntax::{pretty, Comp, Ident, Val};
use crate::{ExactDist, FinDist, Prob};

/// Counts of audited distributions and classes, with any shape or mass
/// violations found.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Audit {
    pub dists: usize,
    pub classes: usize,
    pub violations: Vec<String>,
}

/// The evaluator. With auditing on, every intermediate distribution is
/// checked for unit mass and every class for its canonical shape.
#[derive(Debug, Default)]
pub struct Denoter {
    audit: Option<RefCell<Audit>>,
}

impl Denoter {
    pub fn new() -> Self {
        Denoter::default()
    }

    pub fn audited() -> Self {
        Denoter {
            audit: Some(RefCell::new(Audit::default())),
        }
    }

    pub fn audit(&self) -> Option<Audit> {
        self.audit.as_ref().map(|a| a.borrow().clone())
    }

    fn record(&self, g: &TotalBigraph, d: &ExactDist<CoendClass>) {
        let Some(a) = &self.audit else { return };
        let mut a = a.borrow_mut();
        a.dists += 1;
        if !d.mass().is_one() {
            a.violations.push(format!("mass {} at world {g}", d.mass()));
        }
        for c in d.support() {
            a.classes += 1;
            if let Some(v) = class_shape_violation(g, c) {
                a.violations.push(v);
            }
        }
    }

    /// `⟦c⟧_g(env)(λ)`.
    pub fn den(
        &self,
        c: &Comp,
        g: &TotalBigraph,
        env: &DenEnv,
        lam: &BiasState,
    ) -> Result<ExactDist<CoendClass>, DenotError> {
        let d = self.den_inner(c, g, env, lam)?;
        self.record(g, &d);
        Ok(d)
    }

    fn den_inner(
        &self,
        c: &Comp,
        g: &TotalBigraph,
        env: &DenEnv,
        lam: &BiasState,
    ) -> Result<ExactDist<CoendClass>, DenotError> {
        let unit = |v: EnvValue| FinDist::dirac(canonicalize(g, g, &v, &BiasState::new()));
        match c {
            Comp::Return(v) => Ok(unit(value(env, v)?)),
            Comp::Let(x, u, t) => {
                let d = self.den(u, g, env, lam)?;
                bind_classes(g, &d, lam, |h, a, lam_h| {
                    let mut env2 = env.clone();
                    env2.insert(x.clone(), a.clone());
                    self.den(t, h, &env2, lam_h)
                })
            }
            Comp::If(v, t, e) => match value(env, v)? {
                EnvValue::Bool(true) => self.den(t, g, env, lam),
                EnvValue::Bool(false) => self.den(e, g, env, lam),
                other => Err(DenotError::IllTyped(format!("if on {other}"))),
            },
            Comp::Match(v, x, y, t) => match value(env, v)? {
                EnvValue::Pair(a, b) => {
                    let mut env2 = env.clone();
                    env2.insert(x.clone(), *a);
                    env2.insert(y.clone(), *b);
                    self.den(t, g, &env2, lam)
                }
                other => Err(DenotError::IllTyped(format!("match on {other}"))),
            },
            Comp::Flip(theta) => Ok(den_flip(g, theta)),
            Comp::Fresh => Ok(den_fresh(g, lam)),
            Comp::Eq(v, w) => match (value(env, v)?, value(env, w)?) {
                (EnvValue::Atom(a), EnvValue::Atom(b)) => Ok(unit(EnvValue::Bool(a == b))),
                (a, b) => Err(DenotError::IllTyped(format!("{a} == {b}"))),
            },
            Comp::App(v, w) => match (value(env, v)?, value(env, w)?) {
                (EnvValue::Fun(f), EnvValue::Atom(a)) => {
                    let e = g.edge(f, a).ok_or_else(|| {
                        DenotError::IllTyped(format!("no edge ({f}, {a}) in {g}"))
                    })?;
                    Ok(unit(EnvValue::Bool(e)))
                }
                (a, b) => Err(DenotError::IllTyped(format!("{a} @ {b}"))),
            },
            Comp::MemFn(x, u) => self.den_mem(g, env, x, u, lam),
        }
    }

    /// Probability that `u` returns `true` when its binder is a fresh atom,
    /// after checking that it does not depend on the fresh atom's edges.
    pub fn fresh_bias(
        &self,
        g: &TotalBigraph,
        env: &DenEnv,
        x: &Ident,
        u: &Comp,
        lam: &BiasState,
    ) -> Result<Prob, DenotError> {
        let mut first: Option<Witness> = None;
        for e in assignments(g.left().len()) {
            let (h, a) = g.add_atom_with(|f| e[g.left().binary_search(&f).expect("function of g")]);
            let mut env2 = env.clone();
            env2.insert(x.clone(), EnvValue::Atom(a));
            let q = prob_true(&h, &self.den(u, &h, &env2, lam)?)?;
            let here = Witness {
                connectivity: g.left().iter().copied().zip(e).collect(),
                prob: q,
            };
            match &first {
                None => first = Some(here),
                Some(w) if w.prob != here.prob => {
                    return Err(DenotError::FreshnessViolation {
                        abstraction: pretty(&Comp::MemFn(x.clone(), Box::new(u.clone()))),
                        world: g.to_string(),
                        witness: Box::new((w.clone(), here)),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(first.expect("at least one connectivity").prob)
    }

    /// `⟦memfn x. u⟧_g`: a new function whose edge to each existing atom `a`
    /// is `true` with the probability `p_a` that `u` returns `true` at `a`,
    /// and whose bias is the freshness-invariant probability at a new atom.
    pub fn den_mem(
        &self,
        g: &TotalBigraph,
        env: &DenEnv,
        x: &Ident,
        u: &Comp,
        lam: &BiasState,
    ) -> Result<ExactDist<CoendClass>, DenotError> {
        let mut ps = Vec::with_capacity(g.right().len());
        for a in g.right() {
            let mut env2 = env.clone();
            env2.insert(x.clone(), EnvValue::Atom(*a));
            ps.push(prob_true(g, &self.den(u, g, &env2, lam)?)?);
        }
        let bias = self.fresh_bias(g, env, x, u, lam)?;
        let mut out = Vec::new();
        for r in assignments(ps.len()) {
            let mut w = Prob::one();
            for (p, b) in ps.iter().zip(&r) {
                w *= bern(p, *b);
            }
            if w.is_zero() {
                continue;
            }
            let (h, f) = g.add_fun_with(|a| r[g.right().binary_search(&a).expect("atom of g")]);
            let biases: BiasState = [(f, bias.clone())].into();
            out.push((canonicalize(g, &h, &EnvValue::Fun(f), &biases), w));
        }
        Ok(FinDist::from_pairs(out).expect("row weights sum to one"))
    }
}

fn value(env: &DenEnv, v: &Val) -> Result<EnvValue, DenotError> {
    eval_value(env, v).map_err(|e| match e {
        OpsemError::UnboundVariable(x) => DenotError::UnboundVariable(x),
        other => DenotError::Opsem(other),
    })
}

/// `⟦flip(θ)⟧_g`.
pub fn den_flip(g: &TotalBigraph, theta: &Prob) -> ExactDist<CoendClass> {
    let class = |b| canonicalize(g, g, &EnvValue::Bool(b), &BiasState::new());
    FinDist::from_pairs([
        (class(true), theta.clone()),
        (class(false), Prob::one() - theta),
    ])
    .expect("flip weights sum to one")
}

/// `⟦fresh()⟧_g`: a new atom whose edge from each function `f` is `true`
/// with probability `λ(f)`.
pub fn den_fresh(g: &TotalBigraph, lam: &BiasState) -> ExactDist<CoendClass> {
    let mut out = Vec::new();
    for e in assignments(g.left().len()) {
        let mut w = Prob::one();
        for (f, b) in g.left().iter().zip(&e) {
            w *= bern(&lam[f], *b);
        }
        if w.is_zero() {
            continue;
        }
        let (h, a) = g.add_atom_with(|f| e[g.left().binary_search(&f).expect("function of g")]);
        out.push((
            canonicalize(g, &h, &EnvValue::Atom(a), &BiasState::new()),
            w,
        ));
    }
    FinDist::from_pairs(out).expect("column weights sum to one")
}

pub fn den_comp(
    c: &Comp,
    g: &TotalBigraph,
    env: &DenEnv,
    lam: &BiasState,
) -> Result<ExactDist<CoendClass>, DenotError> {
    Denoter::new().den(c, g, env, lam)
}

pub fn den_mem(
    g: &TotalBigraph,
    env: &DenEnv,
    x: &Ident,
    u: &Comp,
    lam: &BiasState,
) -> Result<ExactDist<CoendClass>, DenotError> {
    Denoter::new().den_mem(g, env, x, u, lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::{AtomLabel, FunLabel};
    use crate::denot::{mem_phi, AtomQuery};
    use crate::ratio;
    use crate::syntax::parse_program;

    fn den0(src: &str) -> ExactDist<CoendClass> {
        let p = parse_program(src).unwrap();
        den_comp(
            &p,
            &TotalBigraph::empty(),
            &DenEnv::new(),
            &BiasState::new(),
        )
        .unwrap()
    }

    fn empty() -> TotalBigraph {
        TotalBigraph::empty()
    }

    #[test]
    fn p1_is_bernoulli_one_third() {
        let d = den0("let val x <- fresh() in let val f <- memfn y. flip(1/3) in f @ x");
        assert_eq!(prob_true(&empty(), &d).unwrap(), ratio(1, 3));
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn fresh_at_empty_world_is_one_class() {
        let d = den0("fresh()");
        assert_eq!(d.len(), 1);
        let c = d.support().next().unwrap();
        assert_eq!(c.value, EnvValue::Atom(AtomLabel(0)));
    }

    #[test]
    fn memfn_at_empty_world_records_bias() {
        let d = den0("memfn y. flip(1/3)");
        assert_eq!(d.len(), 1);
        let c = d.support().next().unwrap();
        assert_eq!(c.biases, vec![(FunLabel(0), ratio(1, 3))]);
        assert_eq!(
            mem_phi(&empty(), &d, &BiasState::new(), AtomQuery::Fresh).unwrap(),
            ratio(1, 3)
        );
    }

    #[test]
    fn fresh_column_follows_biases() {
        let g = TotalBigraph::from_fn([FunLabel(0), FunLabel(1)], [], |_, _| false);
        let lam: BiasState = [(FunLabel(0), ratio(1, 3)), (FunLabel(1), ratio(3, 4))].into();
        let d = den_fresh(&g, &lam);
        assert_eq!(d.len(), 4);
        for (c, p) in d.iter() {
            let e0 = c.world.edge(FunLabel(0), AtomLabel(0)).unwrap();
            let e1 = c.world.edge(FunLabel(1), AtomLabel(0)).unwrap();
            assert_eq!(*p, bern(&ratio(1, 3), e0) * bern(&ratio(3, 4), e1));
        }
    }

    #[test]
    fn memfn_rows_follow_body() {
        // one existing atom; body returns true with probability 2/5 there
        let g = TotalBigraph::from_fn([], [AtomLabel(0)], |_, _| false);
        let u = parse_program("flip(2/5)").unwrap();
        let d = den_mem(&g, &DenEnv::new(), &Ident::new("y"), &u, &BiasState::new()).unwrap();
        assert_eq!(
            mem_phi(&g, &d, &BiasState::new(), AtomQuery::Existing(AtomLabel(0))).unwrap(),
            ratio(2, 5)
        );
        assert_eq!(
            mem_phi(&g, &d, &BiasState::new(), AtomQuery::Fresh).unwrap(),
            ratio(2, 5)
        );
    }

    #[test]
    fn memo_law_samples_agree() {
        let one = den0("let val x <- fresh() in let val f <- memfn y. flip(1/2) in let val v1 <- f @ x in let val v2 <- f @ x in return (v1, v2)");
        let two = den0("let val x <- fresh() in let val f <- memfn y. flip(1/2) in let val v1 <- f @ x in return (v1, v1)");
        assert!(crate::dist::dist_eq(&one, &two));
    }

    #[test]
    fn dependence_on_captured_function_is_rejected() {
        let p = parse_program(
            "let val f <- memfn x. flip(1/2) in let val g <- memfn y. f @ y in return true",
        )
        .unwrap();
        let err = den_comp(&p, &empty(), &DenEnv::new(), &BiasState::new()).unwrap_err();
        let DenotError::FreshnessViolation { witness, .. } = err else {
            panic!("expected a freshness violation, got {err}");
        };
        assert_ne!(witness.0.prob, witness.1.prob);
    }

    #[test]
    fn negating_a_captured_function_is_rejected() {
        let p = parse_program("let val f <- memfn x. flip(1/2) in let val g <- memfn x. let val b <- f @ x in if b then return false else return true in return g").unwrap();
        assert!(matches!(
            den_comp(&p, &empty(), &DenEnv::new(), &BiasState::new()),
            Err(DenotError::FreshnessViolation { .. })
        ));
    }

    #[test]
    fn audit_is_clean_on_corpus_program() {
        let p = parse_program("let val x <- fresh() in let val f <- memfn y. let val z <- fresh() in let val c <- y == z in if c then return true else flip(1/4) in let val b <- f @ x in return (f, (x, b))").unwrap();
        let dn = Denoter::audited();
        let d = dn
            .den(&p, &empty(), &DenEnv::new(), &BiasState::new())
            .unwrap();
        assert!(d.mass().is_one());
        let a = dn.audit().unwrap();
        assert!(a.classes > 0);
        assert!(a.violations.is_empty(), "{:?}", a.violations);
    }
}
