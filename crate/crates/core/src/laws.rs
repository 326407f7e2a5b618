//! Executable laws: memoization, dataflow, the monad laws, naturality and
//! soundness, each checked exactly on generated instances.

use std::collections::BTreeSet;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bigraph::{AtomLabel, Embedding, FunLabel, TotalBigraph};
use crate::denot::{
    check_dataflow_at, check_soundness, BiasState, DenEnv, DenotError, Denoter, Kleisli, MonValue,
};
use crate::dist::dist_eq;
use crate::gen::{BodyInstance, GenConfig, Generator};
use crate::opsem::{
    check_stack_invariants, config_judgement, explore, observational_bigstep, Configuration,
    EnvValue, STEP_BUDGET,
};
use crate::syntax::{fresh_name, Comp, Ident, Ty, Val};
use crate::Prob;

/// Result of running one law over generated instances.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuiteReport {
    pub law: String,
    pub instances: usize,
    pub failures: Vec<String>,
    /// Observations that do not count as failures.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(law: &str) -> Self {
        SuiteReport {
            law: law.into(),
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: Result<bool, String>, what: impl FnOnce() -> String) {
        match ok {
            Ok(true) => {}
            Ok(false) => self.failures.push(what()),
            Err(e) => self.failures.push(format!("{}: {e}", what())),
        }
    }
}

/// The program pairs instantiating the memoization equations for one body.
#[derive(Clone, Debug)]
pub struct MemoPrograms {
    /// `f @ n` against the body with `n` substituted.
    pub one_sample: (Comp, Comp),
    /// Two applications at the same atom against one application reused.
    pub two_sample: (Comp, Comp),
    /// Applications of a memoized function against the split form where the
    /// result at `n` is sampled first and the rest comes from a second
    /// memoized copy.
    pub split: (Comp, Comp),
}

fn let_(x: &Ident, u: Comp, t: Comp) -> Comp {
    Comp::Let(x.clone(), Box::new(u), Box::new(t))
}

fn var(x: &Ident) -> Val {
    Val::Var(x.clone())
}

pub fn memo_programs(inst: &BodyInstance) -> MemoPrograms {
    let mut used: BTreeSet<Ident> = inst.body.all_idents();
    used.insert(inst.binder.clone());
    for (x, t) in &inst.prefix.0 {
        used.insert(x.clone());
        used.extend(t.all_idents());
    }
    let mut name = |s: &str| fresh_name(&Ident::new(s), &mut used);
    let [n, m, f, g, r, v1, v2, y0, c, r1, r2, r3] =
        ["n", "m", "f", "g", "r", "v", "v", "y", "c", "r", "r", "r"].map(&mut name);
    let u = &inst.body;
    let x = &inst.binder;
    let memfn = || Comp::MemFn(x.clone(), Box::new(u.clone()));
    let wrap = |c: Comp| inst.prefix.wrap(c);

    let one_lhs = wrap(let_(
        &n,
        Comp::Fresh,
        let_(
            &f,
            memfn(),
            let_(
                &r,
                Comp::App(var(&f), var(&n)),
                Comp::Return(Val::pair(var(&r), var(&n))),
            ),
        ),
    ));
    let one_rhs = wrap(let_(
        &n,
        Comp::Fresh,
        let_(
            &r,
            u.substitute(x, &var(&n)),
            Comp::Return(Val::pair(var(&r), var(&n))),
        ),
    ));

    let two = |second: bool| {
        let tail = if second {
            let_(
                &v2,
                Comp::App(var(&f), var(&n)),
                Comp::Return(Val::pair(var(&v1), var(&v2))),
            )
        } else {
            Comp::Return(Val::pair(var(&v1), var(&v1)))
        };
        wrap(let_(
            &n,
            Comp::Fresh,
            let_(&f, memfn(), let_(&v1, Comp::App(var(&f), var(&n)), tail)),
        ))
    };

    // applications at m, n, m in both forms
    let apps = |call: &dyn Fn(&Ident) -> Comp| {
        let_(
            &m,
            Comp::Fresh,
            let_(
                &r1,
                call(&m),
                let_(
                    &r2,
                    call(&n),
                    let_(
                        &r3,
                        call(&m),
                        Comp::Return(Val::pair(Val::pair(var(&r1), var(&r2)), var(&r3))),
                    ),
                ),
            ),
        )
    };
    let split_lhs = wrap(let_(
        &n,
        Comp::Fresh,
        let_(&f, memfn(), apps(&|a| Comp::App(var(&f), var(a)))),
    ));
    let split_rhs = wrap(let_(
        &n,
        Comp::Fresh,
        let_(
            &y0,
            u.substitute(x, &var(&n)),
            let_(
                &g,
                memfn(),
                apps(&|a| {
                    let_(
                        &c,
                        Comp::Eq(var(a), var(&n)),
                        Comp::If(
                            var(&c),
                            Box::new(Comp::Return(var(&y0))),
                            Box::new(Comp::App(var(&g), var(a))),
                        ),
                    )
                }),
            ),
        ),
    ));

    MemoPrograms {
        one_sample: (one_lhs, one_rhs),
        two_sample: (two(true), two(false)),
        split: (split_lhs, split_rhs),
    }
}

fn den_eq(a: &Comp, b: &Comp) -> Result<bool, String> {
    let dn = Denoter::new();
    let e = TotalBigraph::empty();
    let da = dn
        .den(a, &e, &DenEnv::new(), &BiasState::new())
        .map_err(|e| e.to_string())?;
    let db = dn
        .den(b, &e, &DenEnv::new(), &BiasState::new())
        .map_err(|e| e.to_string())?;
    Ok(dist_eq(&da, &db))
}

fn op_eq(a: &Comp, b: &Comp) -> Result<bool, String> {
    let da = observational_bigstep(a).map_err(|e| e.to_string())?;
    let db = observational_bigstep(b).map_err(|e| e.to_string())?;
    Ok(dist_eq(&da, &db))
}

/// One- and two-sample memoization equations in both semantics, and the
/// split form of the memoization equation denotationally and operationally.
pub fn run_mem_suite(count: usize, seed: u64) -> SuiteReport {
    let mut gen = Generator::new(seed, GenConfig::default());
    let mut report = SuiteReport::new("memoization");
    for i in 0..count {
        let inst = gen.body_instance();
        let ps = memo_programs(&inst);
        let label = |what: &str| {
            format!(
                "instance {i} ({what}): memfn {}. {}",
                inst.binder, inst.body
            )
        };
        report.check(op_eq(&ps.one_sample.0, &ps.one_sample.1), || {
            label("one sample, operational")
        });
        report.check(den_eq(&ps.one_sample.0, &ps.one_sample.1), || {
            label("one sample, denotational")
        });
        report.check(op_eq(&ps.two_sample.0, &ps.two_sample.1), || {
            label("two samples, operational")
        });
        report.check(den_eq(&ps.two_sample.0, &ps.two_sample.1), || {
            label("two samples, denotational")
        });
        report.check(den_eq(&ps.split.0, &ps.split.1), || {
            label("split, denotational")
        });
        report.check(op_eq(&ps.split.0, &ps.split.1), || {
            label("split, operational")
        });
        report.instances += 1;
    }
    report
}

/// A random rational in `[0, 1]` with a small denominator.
pub fn random_prob(rng: &mut ChaCha8Rng) -> Prob {
    let d: i64 = rng.gen_range(1..=7);
    let n: i64 = rng.gen_range(0..=d);
    Prob::new(BigInt::from(n), BigInt::from(d))
}

/// A world with at most `max_funs` functions and `max_atoms` atoms, random
/// edges, and a variable `wf{i}` / `wa{j}` naming each node.
pub struct World {
    pub graph: TotalBigraph,
    pub env: DenEnv,
    pub ctx: Vec<(Ident, Ty)>,
}

pub fn random_world(rng: &mut ChaCha8Rng, max_funs: u32, max_atoms: u32) -> World {
    let nf = rng.gen_range(0..=max_funs);
    let na = rng.gen_range(0..=max_atoms);
    let bits: Vec<bool> = (0..nf * na).map(|_| rng.gen()).collect();
    let graph = TotalBigraph::from_fn((0..nf).map(FunLabel), (0..na).map(AtomLabel), |f, a| {
        bits[(f.0 * na + a.0) as usize]
    });
    let mut env = DenEnv::new();
    let mut ctx = Vec::new();
    for f in graph.left() {
        let x = Ident::new(format!("wf{}", f.0));
        env.insert(x.clone(), EnvValue::Fun(*f));
        ctx.push((x, Ty::Fun));
    }
    for a in graph.right() {
        let x = Ident::new(format!("wa{}", a.0));
        env.insert(x.clone(), EnvValue::Atom(*a));
        ctx.push((x, Ty::Atom));
    }
    World { graph, env, ctx }
}

pub fn random_biases(rng: &mut ChaCha8Rng, g: &TotalBigraph) -> BiasState {
    g.left().iter().map(|f| (*f, random_prob(rng))).collect()
}

/// Commutation and discard on generated triples at random worlds.
pub fn run_dataflow_suite(count: usize, seed: u64) -> SuiteReport {
    let mut gen = Generator::new(seed, GenConfig::default());
    let mut report = SuiteReport::new("dataflow");
    for i in 0..count {
        let w = random_world(gen.rng(), 2, 2);
        let lam = random_biases(gen.rng(), &w.graph);
        let t = gen.triple(&w.ctx);
        let r = check_dataflow_at(&w.graph, &w.env, &lam, &t.t1, &t.t2, &t.u, &t.x1, &t.x2);
        let label = || format!("instance {i}: {} / {} / {}", t.t1, t.t2, t.u);
        match r {
            Ok(r) => {
                report.check(Ok(r.commutes), || format!("{} (commutation)", label()));
                report.check(Ok(r.discards), || format!("{} (discard)", label()));
            }
            Err(e) => report.failures.push(format!("{}: {e}", label())),
        }
        report.instances += 1;
    }
    report
}

fn kleisli(body: Comp, x: Ident, env: DenEnv) -> Kleisli {
    Rc::new(move |h: &TotalBigraph, v: &EnvValue| {
        let mut env = env.clone();
        env.insert(x.clone(), v.clone());
        let body = body.clone();
        let h2 = h.clone();
        MonValue::new(h.clone(), move |lam| {
            Denoter::new().den(&body, &h2, &env, lam)
        })
    })
}

fn den_mon(body: Comp, g: &TotalBigraph, env: DenEnv) -> MonValue {
    let g2 = g.clone();
    MonValue::new(g.clone(), move |lam| {
        Denoter::new().den(&body, &g2, &env, lam)
    })
}

fn random_value(rng: &mut ChaCha8Rng, g: &TotalBigraph, ty: &Ty) -> Option<EnvValue> {
    match ty {
        Ty::Bool => Some(EnvValue::Bool(rng.gen())),
        Ty::Atom => g.right().choose(rng).map(|a| EnvValue::Atom(*a)),
        Ty::Fun => g.left().choose(rng).map(|f| EnvValue::Fun(*f)),
        Ty::Prod(a, b) => Some(EnvValue::pair(
            random_value(rng, g, a)?,
            random_value(rng, g, b)?,
        )),
    }
}

fn agree(a: &MonValue, b: &MonValue, states: &[BiasState]) -> Result<bool, String> {
    for lam in states {
        let da = a.eval(lam).map_err(|e: DenotError| e.to_string())?;
        let db = b.eval(lam).map_err(|e| e.to_string())?;
        if !dist_eq(&da, &db) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Unit and associativity laws of the monad on generated computations, at
/// `states` random bias states per instance, on worlds with at most two
/// functions and two atoms.
pub fn run_monad_suite(count: usize, seed: u64, states: usize) -> SuiteReport {
    let mut gen = Generator::new(seed, GenConfig::default());
    let mut report = SuiteReport::new("monad");
    for i in 0..count {
        let w = random_world(gen.rng(), 2, 2);
        let lams: Vec<_> = (0..states)
            .map(|_| random_biases(gen.rng(), &w.graph))
            .collect();
        // the left unit law needs a value of the bound type in the world
        let (a, v) = loop {
            let a = gen.any_small_ty();
            if let Some(v) = random_value(gen.rng(), &w.graph, &a) {
                break (a, v);
            }
        };
        let b = gen.any_small_ty();
        let c = gen.any_small_ty();
        let m_body = gen.comp_in(&w.ctx, &a, 3);
        let x = Ident::new("kx");
        let y = Ident::new("ly");
        let mut kctx = w.ctx.clone();
        kctx.push((x.clone(), a.clone()));
        let k_body = gen.comp_in(&kctx, &b, 3);
        let mut lctx = w.ctx.clone();
        lctx.push((y.clone(), b.clone()));
        let l_body = gen.comp_in(&lctx, &c, 3);

        let m = den_mon(m_body.clone(), &w.graph, w.env.clone());
        let k = kleisli(k_body.clone(), x, w.env.clone());
        let l = kleisli(l_body.clone(), y, w.env.clone());
        let label =
            |law: &str| format!("instance {i} ({law}): m = {m_body}, k = {k_body}, l = {l_body}");

        let lhs = MonValue::unit(&w.graph, v.clone()).bind(k.clone());
        let rhs = k(&w.graph, &v);
        report.check(agree(&lhs, &rhs, &lams), || label("left unit"));

        let unit: Kleisli = Rc::new(|h: &TotalBigraph, v: &EnvValue| MonValue::unit(h, v.clone()));
        report.check(agree(&m.bind(unit), &m, &lams), || label("right unit"));

        let k2 = k.clone();
        let l2 = l.clone();
        let assoc_l = m.bind(k.clone()).bind(l.clone());
        let assoc_r = m.bind(Rc::new(move |h: &TotalBigraph, v: &EnvValue| {
            k2(h, v).bind(l2.clone())
        }));
        report.check(agree(&assoc_l, &assoc_r, &lams), || label("associativity"));
        report.instances += 1;
    }
    report
}

/// Transporting a denotation along a one-sided extension of the world
/// agrees with denoting at the extended world.
pub fn run_naturality_suite(count: usize, seed: u64) -> SuiteReport {
    let mut gen = Generator::new(seed, GenConfig::default());
    let mut report = SuiteReport::new("naturality");
    for i in 0..count {
        let w = random_world(gen.rng(), 2, 2);
        let ty = gen.any_small_ty();
        let body = gen.comp_in(&w.ctx, &ty, 4);
        let add_fun = gen.rng().gen_bool(0.5);
        let g2 = if add_fun {
            let bits: Vec<bool> = w.graph.right().iter().map(|_| gen.rng().gen()).collect();
            let right = w.graph.right().to_vec();
            w.graph
                .add_fun_with(|a| bits[right.binary_search(&a).expect("atom")])
                .0
        } else {
            let bits: Vec<bool> = w.graph.left().iter().map(|_| gen.rng().gen()).collect();
            let left = w.graph.left().to_vec();
            w.graph
                .add_atom_with(|f| bits[left.binary_search(&f).expect("function")])
                .0
        };
        let iota = Embedding::inclusion(&w.graph);
        let lams: Vec<_> = (0..3).map(|_| random_biases(gen.rng(), &g2)).collect();
        let moved = den_mon(body.clone(), &w.graph, w.env.clone()).transport(&iota, &g2);
        let direct = den_mon(body.clone(), &g2, w.env.clone());
        report.check(agree(&moved, &direct, &lams), || {
            format!("instance {i}: {body} at {} → {g2}", w.graph)
        });
        report.instances += 1;
    }
    report
}

/// Soundness on generated closed programs, plus the invariant sweeps: every
/// reachable configuration has a configuration judgement and satisfies the
/// memo-stack invariants, and every intermediate denotation has unit mass and
/// canonical class shapes.
pub fn run_soundness_suite(
    count: usize,
    seed: u64,
    max_undef: usize,
) -> (SuiteReport, SuiteReport) {
    let mut gen = Generator::new(seed, GenConfig::default());
    let mut sound = SuiteReport::new("soundness");
    let mut inv = SuiteReport::new("invariants");
    for i in 0..count {
        let p = gen.program();
        match check_soundness(&p, max_undef) {
            Ok(r) => {
                if !r.per_function_agrees {
                    sound.notes.push(format!(
                        "program {i}: per-function bias formula differs: {p}"
                    ));
                }
                sound.check(Ok(r.sound), || format!("program {i}: {p}"))
            }
            Err(e) => sound.failures.push(format!("program {i}: {p}: {e}")),
        }
        sound.instances += 1;
        inv.check(sweep_invariants(&p), || format!("program {i}: {p}"));
        inv.instances += 1;
    }
    (sound, inv)
}

/// Runs both semantics over `p` with every check enabled.
pub fn sweep_invariants(p: &Comp) -> Result<bool, String> {
    let mut bad: Option<String> = None;
    let visit = |c: &Configuration| {
        if bad.is_some() {
            return;
        }
        if let Err(e) = config_judgement(c) {
            bad = Some(format!("no judgement for {c}: {}", e.0));
        } else if !check_stack_invariants(c) {
            bad = Some(format!("stack invariant fails at {c}"));
        }
    };
    let d = explore(Configuration::initial(p), STEP_BUDGET, visit).map_err(|e| e.to_string())?;
    if let Some(b) = bad {
        return Err(b);
    }
    if !d.mass().is_one() {
        return Err(format!("big-step mass {}", d.mass()));
    }
    let dn = Denoter::audited();
    dn.den(p, &TotalBigraph::empty(), &DenEnv::new(), &BiasState::new())
        .map_err(|e| e.to_string())?;
    let audit = dn.audit().expect("audited");
    match audit.violations.first() {
        Some(v) => Err(v.clone()),
        None => Ok(true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn memo_programs_typecheck() {
        let mut gen = Generator::new(2, GenConfig::default());
        for _ in 0..20 {
            let ps = memo_programs(&gen.body_instance());
            for p in [
                &ps.one_sample.0,
                &ps.one_sample.1,
                &ps.two_sample.0,
                &ps.two_sample.1,
                &ps.split.0,
                &ps.split.1,
            ] {
                crate::typecheck::type_of_program(p).unwrap_or_else(|e| panic!("{p}: {e}"));
            }
        }
    }

    #[test]
    fn small_suites_pass() {
        assert!(run_mem_suite(5, 1).passed());
        assert!(run_dataflow_suite(5, 1).passed());
        assert!(run_monad_suite(3, 1, 2).passed());
        assert!(run_naturality_suite(5, 1).passed());
        let (s, i) = run_soundness_suite(5, 1, 20);
        assert!(s.passed(), "{:?}", s.failures);
        assert!(i.passed(), "{:?}", i.failures);
    }

    #[test]
    fn sweep_accepts_p1() {
        let p = parse_program("let val x <- fresh() in let val f <- memfn y. flip(1/3) in f @ x")
            .unwrap();
        assert_eq!(sweep_invariants(&p), Ok(true));
    }
}
