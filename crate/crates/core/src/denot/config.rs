//! Denotations of configurations, and the comparison with the operational
//! big-step semantics.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::{
    assignments, bern, canonicalize, prob_true, BiasState, CoendClass, DenEnv, DenotError, Denoter,
};
use crate::bigraph::{BigraphError, Edge, FunLabel, PartialBigraph, TotalBigraph};
use crate::dist::dist_eq;
use crate::opsem::{enumerate_bigstep, Configuration, EnvValue};
use crate::syntax::{Comp, Ident};
use crate::{ExactDist, FinDist, Prob};

/// Denotation of a configuration, as classes over the empty world.
#[derive(Clone, Debug)]
pub struct ConfigDenotation {
    /// Undefined edges resolved function by function in creation order, each
    /// conditioned on the edges of the functions its closure can reach.
    pub chain: ExactDist<CoendClass>,
    /// Every undefined edge `(f, a)` drawn independently with `f`'s bias.
    pub per_function: ExactDist<CoendClass>,
}

struct Leaf {
    graph: TotalBigraph,
    chain: Prob,
    per_function: Prob,
    lam: BiasState,
}

impl Denoter {
    pub fn den_config(
        &self,
        c: &Configuration,
        max_undef: usize,
    ) -> Result<ConfigDenotation, DenotError> {
        let Some(term) = c.term.as_plain() else {
            return Err(DenotError::Unsupported(format!(
                "memo context in `{}`",
                c.term
            )));
        };
        let count = c.graph.undefined_pairs().len();
        if count > max_undef {
            return Err(BigraphError::TooManyUndefined {
                count,
                limit: max_undef,
            }
            .into());
        }
        let funs = c.graph.left().to_vec();
        for f in &funs {
            if !c.closures.contains_key(f) {
                return Err(DenotError::Unsupported(format!("no closure for {f}")));
            }
        }
        let mut leaves = Vec::new();
        self.expand(
            c,
            &funs,
            0,
            c.graph.clone(),
            Prob::one(),
            Prob::one(),
            BiasState::new(),
            &mut leaves,
        )?;

        let empty = TotalBigraph::empty();
        let mut chain = Vec::new();
        let mut per_function = Vec::new();
        for leaf in leaves {
            let d = self.den(term, &leaf.graph, &c.env, &leaf.lam)?;
            for (class, p) in d.iter() {
                let mut biases = leaf.lam.clone();
                biases.extend(class.biases.iter().cloned());
                let k = canonicalize(&empty, &class.world, &class.value, &biases);
                chain.push((k.clone(), &leaf.chain * p));
                per_function.push((k, &leaf.per_function * p));
            }
        }
        Ok(ConfigDenotation {
            chain: FinDist::from_pairs(chain).expect("chain weights sum to one"),
            per_function: FinDist::from_pairs(per_function).expect("bias weights sum to one"),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        &self,
        c: &Configuration,
        funs: &[FunLabel],
        idx: usize,
        graph: PartialBigraph,
        chain: Prob,
        per_function: Prob,
        lam: BiasState,
        out: &mut Vec<Leaf>,
    ) -> Result<(), DenotError> {
        let Some(&f) = funs.get(idx) else {
            let graph = graph.to_total().expect("every edge resolved");
            out.push(Leaf {
                graph,
                chain,
                per_function,
                lam,
            });
            return Ok(());
        };
        let older: BTreeSet<_> = funs[..idx].iter().copied().collect();
        let atoms: BTreeSet<_> = graph.right().iter().copied().collect();
        let world = graph
            .restrict(&older, &atoms)
            .to_total()
            .expect("older functions resolved");
        let closure = &c.closures[&f];
        let bias = self.fresh_bias(
            &world,
            &closure.captured,
            &closure.binder,
            &closure.body,
            &lam,
        )?;

        let undef: Vec<_> = graph
            .right()
            .iter()
            .copied()
            .filter(|a| graph.edge(f, *a) == Some(Edge::Undef))
            .collect();
        let mut ps = Vec::with_capacity(undef.len());
        for a in &undef {
            let mut env = closure.captured.clone();
            env.insert(closure.binder.clone(), EnvValue::Atom(*a));
            ps.push(prob_true(
                &world,
                &self.den(&closure.body, &world, &env, &lam)?,
            )?);
        }
        let mut lam2 = lam.clone();
        lam2.insert(f, bias.clone());
        for bits in assignments(undef.len()) {
            let mut wc = chain.clone();
            let mut wp = per_function.clone();
            let mut g2 = graph.clone();
            for ((a, p), b) in undef.iter().zip(&ps).zip(&bits) {
                wc *= bern(p, *b);
                wp *= bern(&bias, *b);
                g2 = g2.set_edge(f, *a, *b)?;
            }
            if wc.is_zero() && wp.is_zero() {
                continue;
            }
            self.expand(c, funs, idx + 1, g2, wc, wp, lam2.clone(), out)?;
        }
        Ok(())
    }
}

pub fn den_config(c: &Configuration, max_undef: usize) -> Result<ConfigDenotation, DenotError> {
    Denoter::new().den_config(c, max_undef)
}

/// Outcome of comparing `⟦p⟧` with the big-step distribution pushed through
/// the configuration denotation.
#[derive(Clone, Debug)]
pub struct SoundnessReport {
    pub lhs: ExactDist<CoendClass>,
    pub rhs: ExactDist<CoendClass>,
    pub rhs_per_function: ExactDist<CoendClass>,
    pub terminals: usize,
    pub sound: bool,
    pub per_function_agrees: bool,
}

pub fn check_soundness(p: &Comp, max_undef: usize) -> Result<SoundnessReport, DenotError> {
    let dn = Denoter::new();
    let empty = TotalBigraph::empty();
    let lhs = dn.den(p, &empty, &DenEnv::new(), &BiasState::new())?;
    let terminals = enumerate_bigstep(p)?;
    let mut rhs = Vec::new();
    let mut rhs_pf = Vec::new();
    for (c, w) in terminals.iter() {
        let d = dn.den_config(c, max_undef)?;
        rhs.push((w.clone(), d.chain));
        rhs_pf.push((w.clone(), d.per_function));
    }
    let rhs = FinDist::weighted_mix(rhs).expect("big-step weights sum to one");
    let rhs_per_function = FinDist::weighted_mix(rhs_pf).expect("big-step weights sum to one");
    Ok(SoundnessReport {
        sound: dist_eq(&lhs, &rhs),
        per_function_agrees: dist_eq(&lhs, &rhs_per_function),
        lhs,
        rhs,
        rhs_per_function,
        terminals: terminals.len(),
    })
}

/// Commutation and discard of independent bindings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataflowReport {
    pub commutes: bool,
    pub discards: bool,
}

/// Compares `let x1 <- t1 in let x2 <- t2 in u` with the bindings swapped,
/// and `let x1 <- t1 in t2` with `t2`, at world `g`. Requires `x1 ∉ fv(t2)`
/// and `x2 ∉ fv(t1)`.
#[allow(clippy::too_many_arguments)]
pub fn check_dataflow_at(
    g: &TotalBigraph,
    env: &DenEnv,
    lam: &BiasState,
    t1: &Comp,
    t2: &Comp,
    u: &Comp,
    x1: &Ident,
    x2: &Ident,
) -> Result<DataflowReport, DenotError> {
    if t2.free_vars().contains(x1) || t1.free_vars().contains(x2) {
        return Err(DenotError::Unsupported(
            "bindings are not independent".into(),
        ));
    }
    let dn = Denoter::new();
    let bind =
        |x: &Ident, a: &Comp, b: Comp| Comp::Let(x.clone(), Box::new(a.clone()), Box::new(b));
    let left = bind(x1, t1, bind(x2, t2, u.clone()));
    let right = bind(x2, t2, bind(x1, t1, u.clone()));
    let commutes = dist_eq(&dn.den(&left, g, env, lam)?, &dn.den(&right, g, env, lam)?);
    let seq = bind(x1, t1, t2.clone());
    let discards = dist_eq(&dn.den(&seq, g, env, lam)?, &dn.den(t2, g, env, lam)?);
    Ok(DataflowReport { commutes, discards })
}

pub fn check_dataflow(
    t1: &Comp,
    t2: &Comp,
    u: &Comp,
    x1: &Ident,
    x2: &Ident,
) -> Result<DataflowReport, DenotError> {
    check_dataflow_at(
        &TotalBigraph::empty(),
        &DenEnv::new(),
        &BiasState::new(),
        t1,
        t2,
        u,
        x1,
        x2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;
    use crate::syntax::parse_program;

    fn sound(src: &str) -> SoundnessReport {
        let r = check_soundness(&parse_program(src).unwrap(), 20).unwrap();
        assert!(r.sound, "lhs {:?}\nrhs {:?}", r.lhs, r.rhs);
        r
    }

    #[test]
    fn p1_soundness() {
        let r = sound("let val x <- fresh() in let val f <- memfn y. flip(1/3) in f @ x");
        assert_eq!(
            prob_true(&TotalBigraph::empty(), &r.lhs).unwrap(),
            ratio(1, 3)
        );
    }

    #[test]
    fn returned_function_with_pending_edge() {
        sound("let val x <- fresh() in let val f <- memfn y. flip(1/3) in return (f, x)");
        sound("memfn y. flip(1/3)");
        sound("fresh()");
    }

    #[test]
    fn captured_atom_edges_are_not_the_bias() {
        // f is certainly true at x but only has bias 1/2
        let r = sound(
            "let val x <- fresh() in \
             let val f <- memfn y. let val c <- y == x in if c then return true else flip(1/2) in \
             return (f, x)",
        );
        assert!(!r.per_function_agrees);
    }

    #[test]
    fn function_reading_a_captured_edge() {
        let r = sound(
            "let val x <- fresh() in let val w <- fresh() in let val f <- memfn y. flip(1/2) in \
             let val g <- memfn z. f @ x in return (f, (g, (x, w)))",
        );
        assert_eq!(r.terminals, 1);
        sound(
            "let val x <- fresh() in let val f <- memfn y. flip(1/2) in let val b <- f @ x in \
             let val g <- memfn z. f @ x in let val w <- fresh() in return (g, w)",
        );
    }

    #[test]
    fn dataflow_of_independent_coins() {
        let t1 = parse_program("flip(1/3)").unwrap();
        let t2 = parse_program("fresh()").unwrap();
        let u = parse_program("return (a, b)").unwrap();
        let r = check_dataflow(&t1, &t2, &u, &Ident::new("a"), &Ident::new("b")).unwrap();
        assert!(r.commutes && r.discards);
    }
}
