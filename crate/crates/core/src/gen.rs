//! Random well-typed programs for the law and soundness suites.
//!
//! Every `memfn` body the generator emits passes the syntactic freshness
//! check: inside a body, only variables bound outside every enclosing
//! abstraction are used as application arguments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{all_memfns_clean, Comp, Ident, Ty, Val};
use crate::typecheck::{type_of_comp, type_of_program, TyCtx};
use crate::{ratio, Prob};

/// Static maxima on a generated program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub max_flips: usize,
    pub max_freshes: usize,
    pub max_memfns: usize,
    pub max_depth: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_flips: 3,
            max_freshes: 3,
            max_memfns: 2,
            max_depth: 8,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Budget {
    flips: usize,
    freshes: usize,
    memfns: usize,
}

#[derive(Clone, Debug)]
struct Var {
    name: Ident,
    ty: Ty,
    /// Usable as an application argument.
    app_ok: bool,
}

#[derive(Clone, Debug, Default)]
struct Scope {
    vars: Vec<Var>,
    in_memfn: bool,
}

impl Scope {
    fn with(&self, name: Ident, ty: Ty) -> Scope {
        let mut s = self.clone();
        s.vars.push(Var {
            name,
            ty,
            app_ok: !self.in_memfn,
        });
        s
    }

    fn of_ty(&self, ty: &Ty) -> Vec<&Var> {
        // later bindings shadow earlier ones of the same name
        self.vars
            .iter()
            .enumerate()
            .filter(|(i, v)| v.ty == *ty && !self.vars[i + 1..].iter().any(|w| w.name == v.name))
            .map(|(_, v)| v)
            .collect()
    }
}

/// A binding sequence `let x1 <- t1 in … in □` shared by the instances of a
/// law.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prefix(pub Vec<(Ident, Comp)>);

impl Prefix {
    pub fn wrap(&self, tail: Comp) -> Comp {
        self.0.iter().rev().fold(tail, |acc, (x, t)| {
            Comp::Let(x.clone(), Box::new(t.clone()), Box::new(acc))
        })
    }

    pub fn context(&self) -> TyCtx {
        let mut ctx = TyCtx::new();
        for (x, t) in &self.0 {
            let ty = type_of_comp(&ctx, t).expect("prefix bindings are typed");
            ctx.push(x.clone(), ty);
        }
        ctx
    }
}

/// A memoization-law instance: a prefix, and a boolean body over the
/// prefix's variables and the binder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BodyInstance {
    pub prefix: Prefix,
    pub binder: Ident,
    pub body: Comp,
}

/// Two independent computations and a continuation using both results.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub t1: Comp,
    pub t2: Comp,
    pub u: Comp,
    pub x1: Ident,
    pub x2: Ident,
}

pub struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    next: usize,
}

const THETAS: [(i64, i64); 5] = [(1, 2), (1, 3), (2, 3), (1, 4), (3, 5)];

impl Generator {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            next: 0,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn ident(&mut self, stem: &str) -> Ident {
        self.next += 1;
        Ident::new(format!("{stem}{}", self.next))
    }

    fn budget(&self) -> Budget {
        Budget {
            flips: self.cfg.max_flips,
            freshes: self.cfg.max_freshes,
            memfns: self.cfg.max_memfns,
        }
    }

    fn theta(&mut self) -> Prob {
        if self.rng.gen_bool(0.1) {
            return ratio(self.rng.gen_range(0..=1), 1);
        }
        let (n, d) = *THETAS.choose(&mut self.rng).expect("non-empty");
        ratio(n, d)
    }

    fn small_ty(&mut self) -> Ty {
        match self.rng.gen_range(0..10) {
            0..=3 => Ty::Bool,
            4..=6 => Ty::Atom,
            7..=8 => Ty::Fun,
            _ => Ty::prod(Ty::Bool, Ty::Atom),
        }
    }

    /// A closed, well-typed program within the configured maxima.
    pub fn program(&mut self) -> Comp {
        if self.cfg.max_depth >= 6 && self.cfg.max_freshes >= 1 && self.rng.gen_bool(0.4) {
            if let Some(p) = self.memo_program() {
                return p;
            }
        }
        loop {
            let ty = match self.rng.gen_range(0..8) {
                0..=2 => Ty::Bool,
                3 => Ty::Atom,
                4 => Ty::Fun,
                5 => Ty::prod(Ty::Bool, Ty::Bool),
                6 => Ty::prod(Ty::Fun, Ty::Atom),
                _ => Ty::prod(Ty::Bool, Ty::Atom),
            };
            if let Some(p) = self.attempt(&Scope::default(), &ty, self.cfg.max_depth, self.budget())
            {
                debug_assert_eq!(type_of_program(&p).ok(), Some(ty));
                return p;
            }
        }
    }

    /// Atoms and memoized functions first, then a random continuation that
    /// applies them.
    fn memo_program(&mut self) -> Option<Comp> {
        let mut b = self.budget();
        let mut scope = Scope::default();
        let mut binds = Vec::new();
        let steps: &[Ty] = match self.rng.gen_range(0..3) {
            0 => &[Ty::Atom, Ty::Fun],
            1 => &[Ty::Atom, Ty::Fun, Ty::Atom],
            _ => &[Ty::Atom, Ty::Fun, Ty::Fun],
        };
        for ty in steps {
            let c = match ty {
                Ty::Atom if b.freshes > 0 => {
                    b.freshes -= 1;
                    Comp::Fresh
                }
                Ty::Fun if b.memfns > 0 => {
                    b.memfns -= 1;
                    let x = self.ident("x");
                    let mut inner = scope.clone();
                    inner.in_memfn = true;
                    let inner = inner.with(x.clone(), Ty::Atom);
                    let body = self.comp(&inner, &Ty::Bool, 3, &mut b)?;
                    Comp::MemFn(x, Box::new(body))
                }
                _ => return None,
            };
            let v = self.ident(if matches!(ty, Ty::Fun) { "f" } else { "a" });
            scope = scope.with(v.clone(), ty.clone());
            binds.push((v, c));
        }
        let ty = match self.rng.gen_range(0..4) {
            0 => Ty::Bool,
            1 => Ty::prod(Ty::Bool, Ty::Bool),
            2 => Ty::prod(Ty::Fun, Ty::Atom),
            _ => Ty::prod(Ty::Bool, Ty::Atom),
        };
        let rest = self.cfg.max_depth.saturating_sub(binds.len()).max(1);
        let tail = self.comp(&scope, &ty, rest, &mut b)?;
        let p = Prefix(binds).wrap(tail);
        (depth_of(&p) <= self.cfg.max_depth && all_memfns_clean(&p)).then_some(p)
    }

    fn attempt(&mut self, scope: &Scope, ty: &Ty, depth: usize, budget: Budget) -> Option<Comp> {
        for _ in 0..50 {
            let mut b = budget;
            if let Some(c) = self.comp(scope, ty, depth, &mut b) {
                if depth_of(&c) <= depth && all_memfns_clean(&c) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// A prefix of one to three closed bindings.
    pub fn prefix(&mut self) -> Prefix {
        let n = self.rng.gen_range(1..=3);
        let mut scope = Scope::default();
        let mut out = Vec::new();
        let mut budget = Budget {
            flips: 1,
            freshes: 2,
            memfns: 1,
        };
        for _ in 0..n {
            let ty = self.small_ty();
            let mut b = budget;
            if let Some(t) = self.comp(&scope, &ty, 3, &mut b) {
                if !all_memfns_clean(&t) {
                    continue;
                }
                budget = b;
                let x = self.ident("p");
                scope = scope.with(x.clone(), ty);
                out.push((x, t));
            }
        }
        Prefix(out)
    }

    /// A freshness-clean boolean body over the prefix and a binder.
    pub fn body_instance(&mut self) -> BodyInstance {
        let prefix = self.prefix();
        let ctx = prefix.context();
        let binder = self.ident("x");
        let body = self.body(ctx.entries(), &binder);
        BodyInstance {
            prefix,
            binder,
            body,
        }
    }

    /// A boolean body for `memfn binder. □` in `ctx`.
    pub fn body(&mut self, ctx: &[(Ident, Ty)], binder: &Ident) -> Comp {
        let mut scope = Scope::default();
        for (x, ty) in ctx {
            scope = scope.with(x.clone(), ty.clone());
        }
        scope.in_memfn = true;
        scope = scope.with(binder.clone(), Ty::Atom);
        let budget = Budget {
            flips: 2,
            freshes: 1,
            memfns: 1,
        };
        loop {
            if let Some(c) = self.attempt(&scope, &Ty::Bool, 4, budget) {
                let m = Comp::MemFn(binder.clone(), Box::new(c.clone()));
                if all_memfns_clean(&m) {
                    return c;
                }
            }
        }
    }

    /// A triple over the variables of `ctx`, with `t1` and `t2` not
    /// mentioning each other's binder.
    pub fn triple(&mut self, ctx: &[(Ident, Ty)]) -> Triple {
        let mut scope = Scope::default();
        for (x, ty) in ctx {
            scope = scope.with(x.clone(), ty.clone());
        }
        let small = Budget {
            flips: 1,
            freshes: 1,
            memfns: 1,
        };
        loop {
            let a1 = self.small_ty();
            let a2 = self.small_ty();
            let (Some(t1), Some(t2)) = (
                self.attempt(&scope, &a1, 4, small),
                self.attempt(&scope, &a2, 4, small),
            ) else {
                continue;
            };
            let x1 = self.ident("y");
            let x2 = self.ident("z");
            let inner = scope.with(x1.clone(), a1).with(x2.clone(), a2);
            let rty = self.small_ty();
            if let Some(u) = self.attempt(&inner, &rty, 4, small) {
                return Triple { t1, t2, u, x1, x2 };
            }
        }
    }

    /// A computation of type `ty` over the variables of `ctx`, with at most
    /// one flip, fresh and memfn.
    pub fn comp_in(&mut self, ctx: &[(Ident, Ty)], ty: &Ty, depth: usize) -> Comp {
        let mut scope = Scope::default();
        for (x, t) in ctx {
            scope = scope.with(x.clone(), t.clone());
        }
        let small = Budget {
            flips: 1,
            freshes: 1,
            memfns: 1,
        };
        loop {
            if let Some(c) = self.attempt(&scope, ty, depth, small) {
                return c;
            }
        }
    }

    /// A type drawn from booleans, atoms, functions and `bool * atom`.
    pub fn any_small_ty(&mut self) -> Ty {
        self.small_ty()
    }

    /// Type for a new binding, favouring kinds of value not yet in scope.
    fn binding_ty(&mut self, scope: &Scope, ty: &Ty, b: &Budget) -> Ty {
        let no_atoms = scope.of_ty(&Ty::Atom).is_empty();
        if matches!(ty, Ty::Atom) && no_atoms {
            return Ty::Atom;
        }
        if no_atoms && b.freshes > 0 && self.rng.gen_bool(0.4) {
            return Ty::Atom;
        }
        if scope.of_ty(&Ty::Fun).is_empty() && b.memfns > 0 && self.rng.gen_bool(0.3) {
            return Ty::Fun;
        }
        self.small_ty()
    }

    fn let_comp(&mut self, scope: &Scope, ty: &Ty, depth: usize, b: &mut Budget) -> Option<Comp> {
        let t1 = self.binding_ty(scope, ty, b);
        let ud = self.rng.gen_range(1..=(depth - 1).min(4));
        let u = self.comp(scope, &t1, ud, b)?;
        let x = self.ident("v");
        let t = self.comp(&scope.with(x.clone(), t1), ty, depth - 1, b)?;
        Some(Comp::Let(x, Box::new(u), Box::new(t)))
    }

    fn comp(&mut self, scope: &Scope, ty: &Ty, depth: usize, b: &mut Budget) -> Option<Comp> {
        if depth <= 1 {
            return self.leaf(scope, ty, depth, b);
        }
        // leaves are rare near the root so programs have some structure
        let leafy = if depth + 3 > self.cfg.max_depth { 0 } else { 3 };
        match self.rng.gen_range(0..9 + leafy) {
            0..=5 => self.let_comp(scope, ty, depth, b),
            6..=7 => {
                let bools = scope.of_ty(&Ty::Bool);
                let Some(v) = bools.choose(&mut self.rng).map(|v| v.name.clone()) else {
                    return self.let_comp(scope, ty, depth, b);
                };
                let t = self.comp(scope, ty, depth - 1, b)?;
                let e = self.comp(scope, ty, depth - 1, b)?;
                Some(Comp::If(Val::Var(v), Box::new(t), Box::new(e)))
            }
            8 => {
                let pairs: Vec<Var> = scope
                    .vars
                    .iter()
                    .filter(|v| matches!(v.ty, Ty::Prod(..)))
                    .filter(|v| scope.of_ty(&v.ty).iter().any(|w| w.name == v.name))
                    .cloned()
                    .collect();
                let Some(v) = pairs.choose(&mut self.rng).cloned() else {
                    return self.let_comp(scope, ty, depth, b);
                };
                let Ty::Prod(l, r) = &v.ty else {
                    unreachable!()
                };
                let x = self.ident("l");
                let y = self.ident("r");
                let inner = scope
                    .with(x.clone(), (**l).clone())
                    .with(y.clone(), (**r).clone());
                let t = self.comp(&inner, ty, depth - 1, b)?;
                Some(Comp::Match(Val::Var(v.name), x, y, Box::new(t)))
            }
            _ => self.leaf(scope, ty, depth, b),
        }
    }

    fn value(&mut self, scope: &Scope, ty: &Ty) -> Option<Val> {
        match ty {
            Ty::Bool if self.rng.gen_bool(0.4) || scope.of_ty(ty).is_empty() => {
                Some(Val::bool(self.rng.gen()))
            }
            Ty::Prod(a, b) => Some(Val::pair(self.value(scope, a)?, self.value(scope, b)?)),
            _ => scope
                .of_ty(ty)
                .choose(&mut self.rng)
                .map(|v| Val::Var(v.name.clone())),
        }
    }

    fn leaf(&mut self, scope: &Scope, ty: &Ty, depth: usize, b: &mut Budget) -> Option<Comp> {
        match ty {
            Ty::Bool => {
                let atoms = scope.of_ty(&Ty::Atom);
                let funs = scope.of_ty(&Ty::Fun);
                let app_atoms: Vec<_> = atoms
                    .iter()
                    .filter(|v| v.app_ok)
                    .map(|v| v.name.clone())
                    .collect();
                let mut options = vec![0];
                if b.flips > 0 {
                    options.extend([1, 1]);
                }
                if !atoms.is_empty() {
                    options.extend([2, 2]);
                }
                if !funs.is_empty() && !app_atoms.is_empty() {
                    options.extend([3, 3, 3, 3]);
                }
                match *options.choose(&mut self.rng).expect("non-empty") {
                    1 => {
                        b.flips -= 1;
                        Some(Comp::Flip(self.theta()))
                    }
                    2 => {
                        let x = atoms.choose(&mut self.rng)?.name.clone();
                        let mut y = atoms.choose(&mut self.rng)?.name.clone();
                        if y == x {
                            y = atoms.choose(&mut self.rng)?.name.clone();
                        }
                        Some(Comp::Eq(Val::Var(x), Val::Var(y)))
                    }
                    3 => {
                        let f = funs.choose(&mut self.rng)?.name.clone();
                        let a = app_atoms.choose(&mut self.rng)?.clone();
                        Some(Comp::App(Val::Var(f), Val::Var(a)))
                    }
                    _ => Some(Comp::Return(self.value(scope, ty)?)),
                }
            }
            Ty::Atom => {
                let have = !scope.of_ty(ty).is_empty();
                if b.freshes > 0 && (!have || self.rng.gen_bool(0.5)) {
                    b.freshes -= 1;
                    Some(Comp::Fresh)
                } else {
                    Some(Comp::Return(self.value(scope, ty)?))
                }
            }
            Ty::Fun => {
                let have = !scope.of_ty(ty).is_empty();
                if b.memfns > 0 && depth >= 2 && (!have || self.rng.gen_bool(0.6)) {
                    b.memfns -= 1;
                    let x = self.ident("x");
                    let mut inner = scope.clone();
                    inner.in_memfn = true;
                    let inner = inner.with(x.clone(), Ty::Atom);
                    let body = self.comp(&inner, &Ty::Bool, (depth - 1).min(4), b)?;
                    Some(Comp::MemFn(x, Box::new(body)))
                } else {
                    Some(Comp::Return(self.value(scope, ty)?))
                }
            }
            Ty::Prod(l, r) => {
                if let Some(v) = self.value(scope, ty) {
                    return Some(Comp::Return(v));
                }
                if depth < 3 {
                    return None;
                }
                let x = self.ident("v");
                let y = self.ident("v");
                let u1 = self.comp(scope, l, depth - 2, b)?;
                let u2 = self.comp(&scope.with(x.clone(), (**l).clone()), r, depth - 2, b)?;
                Some(Comp::Let(
                    x.clone(),
                    Box::new(u1),
                    Box::new(Comp::Let(
                        y.clone(),
                        Box::new(u2),
                        Box::new(Comp::Return(Val::pair(Val::Var(x), Val::Var(y)))),
                    )),
                ))
            }
        }
    }
}

/// Nesting depth of computation constructors.
pub fn depth_of(c: &Comp) -> usize {
    match c {
        Comp::Let(_, u, t) | Comp::If(_, u, t) => 1 + depth_of(u).max(depth_of(t)),
        Comp::Match(_, _, _, t) | Comp::MemFn(_, t) => 1 + depth_of(t),
        _ => 1,
    }
}

/// Static counts of `(flip, fresh, memfn)` nodes.
pub fn counts(c: &Comp) -> (usize, usize, usize) {
    let mut n = (0, 0, 0);
    c.walk(&mut |s| match s {
        Comp::Flip(_) => n.0 += 1,
        Comp::Fresh => n.1 += 1,
        Comp::MemFn(..) => n.2 += 1,
        _ => {}
    });
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typecheck::type_of_program;

    #[test]
    fn programs_respect_maxima() {
        let mut g = Generator::new(1, GenConfig::default());
        for _ in 0..200 {
            let p = g.program();
            assert!(type_of_program(&p).is_ok(), "{p}");
            assert!(all_memfns_clean(&p), "{p}");
            assert!(depth_of(&p) <= 8);
            let (fl, fr, m) = counts(&p);
            assert!(fl <= 3 && fr <= 3 && m <= 2, "{p}");
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a: Vec<_> = {
            let mut g = Generator::new(9, GenConfig::default());
            (0..20).map(|_| g.program()).collect()
        };
        let mut g = Generator::new(9, GenConfig::default());
        let b: Vec<_> = (0..20).map(|_| g.program()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn bodies_are_clean_and_boolean() {
        let mut g = Generator::new(3, GenConfig::default());
        for _ in 0..100 {
            let inst = g.body_instance();
            let ctx = inst.prefix.context().extend(&inst.binder, Ty::Atom);
            assert_eq!(type_of_comp(&ctx, &inst.body), Ok(Ty::Bool));
            let m = Comp::MemFn(inst.binder.clone(), Box::new(inst.body.clone()));
            assert!(all_memfns_clean(&m), "{m}");
        }
    }

    #[test]
    fn triples_keep_bindings_independent() {
        let mut g = Generator::new(5, GenConfig::default());
        for _ in 0..50 {
            let t = g.triple(&[]);
            assert!(!t.t2.free_vars().contains(&t.x1));
            assert!(!t.t1.free_vars().contains(&t.x2));
        }
    }
}
