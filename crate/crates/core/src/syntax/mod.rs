//! Abstract syntax, concrete syntax and purely syntactic analyses.

mod parse;
mod pretty;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::Prob;

pub use parse::{parse_program, SyntaxError};
pub use pretty::pretty;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(String);

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Letters, digits and underscores, starting with a letter.
    pub fn is_valid(name: &str) -> bool {
        let mut chars = name.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl Serialize for Ident {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Bool,
    Atom,
    Fun,
    Prod(Box<Ty>, Box<Ty>),
}

impl Ty {
    pub fn prod(a: Ty, b: Ty) -> Ty {
        Ty::Prod(Box::new(a), Box::new(b))
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => f.write_str("bool"),
            Ty::Atom => f.write_str("atom"),
            Ty::Fun => f.write_str("fun"),
            Ty::Prod(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Val {
    True,
    False,
    Var(Ident),
    Pair(Box<Val>, Box<Val>),
}

impl Val {
    pub fn var(name: &str) -> Val {
        Val::Var(Ident::new(name))
    }

    pub fn bool(b: bool) -> Val {
        if b {
            Val::True
        } else {
            Val::False
        }
    }

    pub fn pair(a: Val, b: Val) -> Val {
        Val::Pair(Box::new(a), Box::new(b))
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Val::True | Val::False => {}
            Val::Var(x) => {
                out.insert(x.clone());
            }
            Val::Pair(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn vars_in_order(&self, out: &mut Vec<Ident>) {
        match self {
            Val::True | Val::False => {}
            Val::Var(x) => out.push(x.clone()),
            Val::Pair(a, b) => {
                a.vars_in_order(out);
                b.vars_in_order(out);
            }
        }
    }

    fn rename(&self, map: &BTreeMap<Ident, Ident>) -> Val {
        match self {
            Val::Var(x) => Val::Var(map.get(x).cloned().unwrap_or_else(|| x.clone())),
            Val::Pair(a, b) => Val::pair(a.rename(map), b.rename(map)),
            v => v.clone(),
        }
    }

    fn subst(&self, x: &Ident, v: &Val) -> Val {
        match self {
            Val::Var(y) if y == x => v.clone(),
            Val::Pair(a, b) => Val::pair(a.subst(x, v), b.subst(x, v)),
            w => w.clone(),
        }
    }
}

/// Computations of the fine-grained call-by-value calculus.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comp {
    Return(Val),
    Let(Ident, Box<Comp>, Box<Comp>),
    If(Val, Box<Comp>, Box<Comp>),
    Match(Val, Ident, Ident, Box<Comp>),
    Flip(Prob),
    Fresh,
    Eq(Val, Val),
    /// Memoized abstraction `memfn x. u`.
    MemFn(Ident, Box<Comp>),
    /// Memoized application `v @ w`.
    App(Val, Val),
}

impl Comp {
    pub fn ret(v: Val) -> Comp {
        Comp::Return(v)
    }

    pub fn let_in(x: &str, u: Comp, t: Comp) -> Comp {
        Comp::Let(Ident::new(x), Box::new(u), Box::new(t))
    }

    pub fn if_then(v: Val, u: Comp, t: Comp) -> Comp {
        Comp::If(v, Box::new(u), Box::new(t))
    }

    pub fn match_in(v: Val, x: &str, y: &str, t: Comp) -> Comp {
        Comp::Match(v, Ident::new(x), Ident::new(y), Box::new(t))
    }

    pub fn memfn(x: &str, body: Comp) -> Comp {
        Comp::MemFn(Ident::new(x), Box::new(body))
    }

    pub fn app(f: &str, a: &str) -> Comp {
        Comp::App(Val::var(f), Val::var(a))
    }

    pub fn eq(a: &str, b: &str) -> Comp {
        Comp::Eq(Val::var(a), Val::var(b))
    }

    /// Number of AST nodes, values included.
    pub fn size(&self) -> usize {
        fn vsize(v: &Val) -> usize {
            match v {
                Val::Pair(a, b) => 1 + vsize(a) + vsize(b),
                _ => 1,
            }
        }
        match self {
            Comp::Return(v) => 1 + vsize(v),
            Comp::Let(_, u, t) => 1 + u.size() + t.size(),
            Comp::If(v, u, t) => 1 + vsize(v) + u.size() + t.size(),
            Comp::Match(v, _, _, t) => 1 + vsize(v) + t.size(),
            Comp::Flip(_) | Comp::Fresh => 1,
            Comp::Eq(v, w) | Comp::App(v, w) => 1 + vsize(v) + vsize(w),
            Comp::MemFn(_, u) => 1 + u.size(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
        fn add_val(v: &Val, bound: &[Ident], out: &mut BTreeSet<Ident>) {
            for x in v.free_vars() {
                if !bound.contains(&x) {
                    out.insert(x);
                }
            }
        }
        match self {
            Comp::Return(v) => add_val(v, bound, out),
            Comp::Eq(v, w) | Comp::App(v, w) => {
                add_val(v, bound, out);
                add_val(w, bound, out);
            }
            Comp::Flip(_) | Comp::Fresh => {}
            Comp::If(v, u, t) => {
                add_val(v, bound, out);
                u.collect_free(bound, out);
                t.collect_free(bound, out);
            }
            Comp::Let(x, u, t) => {
                u.collect_free(bound, out);
                bound.push(x.clone());
                t.collect_free(bound, out);
                bound.pop();
            }
            Comp::Match(v, x, y, t) => {
                add_val(v, bound, out);
                bound.push(x.clone());
                bound.push(y.clone());
                t.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            Comp::MemFn(x, u) => {
                bound.push(x.clone());
                u.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every identifier occurring anywhere, bound or free.
    pub fn all_idents(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.visit_idents(&mut |x| {
            out.insert(x.clone());
        });
        out
    }

    fn visit_idents(&self, f: &mut impl FnMut(&Ident)) {
        let val = |v: &Val, f: &mut dyn FnMut(&Ident)| {
            for x in v.free_vars() {
                f(&x);
            }
        };
        match self {
            Comp::Return(v) => val(v, f),
            Comp::Eq(v, w) | Comp::App(v, w) => {
                val(v, f);
                val(w, f);
            }
            Comp::Flip(_) | Comp::Fresh => {}
            Comp::If(v, u, t) => {
                val(v, f);
                u.visit_idents(f);
                t.visit_idents(f);
            }
            Comp::Let(x, u, t) => {
                f(x);
                u.visit_idents(f);
                t.visit_idents(f);
            }
            Comp::Match(v, x, y, t) => {
                val(v, f);
                f(x);
                f(y);
                t.visit_idents(f);
            }
            Comp::MemFn(x, u) => {
                f(x);
                u.visit_idents(f);
            }
        }
    }

    /// Capture-avoiding substitution of `v` for the free occurrences of `x`.
    pub fn substitute(&self, x: &Ident, v: &Val) -> Comp {
        let avoid: BTreeSet<Ident> = v.free_vars();
        let mut used = self.all_idents();
        used.extend(avoid.iter().cloned());
        used.insert(x.clone());
        self.subst_inner(x, v, &avoid, &mut used)
    }

    fn subst_inner(
        &self,
        x: &Ident,
        v: &Val,
        avoid: &BTreeSet<Ident>,
        used: &mut BTreeSet<Ident>,
    ) -> Comp {
        // Renames binder `y` in `body` when it would capture a variable of `v`.
        fn open(
            y: &Ident,
            body: &Comp,
            avoid: &BTreeSet<Ident>,
            used: &mut BTreeSet<Ident>,
        ) -> (Ident, Comp) {
            if avoid.contains(y) {
                let fresh = fresh_name(y, used);
                let renamed = body.substitute(y, &Val::Var(fresh.clone()));
                (fresh, renamed)
            } else {
                (y.clone(), body.clone())
            }
        }
        match self {
            Comp::Return(w) => Comp::Return(w.subst(x, v)),
            Comp::Eq(a, b) => Comp::Eq(a.subst(x, v), b.subst(x, v)),
            Comp::App(a, b) => Comp::App(a.subst(x, v), b.subst(x, v)),
            Comp::Flip(_) | Comp::Fresh => self.clone(),
            Comp::If(c, u, t) => Comp::If(
                c.subst(x, v),
                Box::new(u.subst_inner(x, v, avoid, used)),
                Box::new(t.subst_inner(x, v, avoid, used)),
            ),
            Comp::Let(y, u, t) => {
                let u = u.subst_inner(x, v, avoid, used);
                if y == x {
                    return Comp::Let(y.clone(), Box::new(u), t.clone());
                }
                let (y, t) = open(y, t, avoid, used);
                Comp::Let(y, Box::new(u), Box::new(t.subst_inner(x, v, avoid, used)))
            }
            Comp::Match(w, y, z, t) => {
                let w = w.subst(x, v);
                if y == x || z == x {
                    return Comp::Match(w, y.clone(), z.clone(), t.clone());
                }
                // `z` shadows `y` when the names coincide
                let (z, t) = open(z, t, avoid, used);
                let (y, t) = open(y, &t, avoid, used);
                Comp::Match(w, y, z, Box::new(t.subst_inner(x, v, avoid, used)))
            }
            Comp::MemFn(y, u) => {
                if y == x {
                    return self.clone();
                }
                let (y, u) = open(y, u, avoid, used);
                Comp::MemFn(y, Box::new(u.subst_inner(x, v, avoid, used)))
            }
        }
    }

    /// α-equivalence: equal up to a consistent renaming of bound variables.
    pub fn alpha_eq(&self, other: &Comp) -> bool {
        alpha(self, other, &mut Vec::new())
    }

    /// Renames binders so that every binder is distinct from every other
    /// binder and from every free variable. Names already unique are kept.
    pub fn rename_apart(&self) -> Comp {
        let mut used = self.free_vars();
        let mut taken = self.all_idents();
        self.apart(&BTreeMap::new(), &mut used, &mut taken)
    }

    fn apart(
        &self,
        map: &BTreeMap<Ident, Ident>,
        used: &mut BTreeSet<Ident>,
        taken: &mut BTreeSet<Ident>,
    ) -> Comp {
        fn bind(
            x: &Ident,
            map: &mut BTreeMap<Ident, Ident>,
            used: &mut BTreeSet<Ident>,
            taken: &mut BTreeSet<Ident>,
        ) -> Ident {
            let name = if used.contains(x) {
                fresh_name(x, taken)
            } else {
                x.clone()
            };
            used.insert(name.clone());
            taken.insert(name.clone());
            map.insert(x.clone(), name.clone());
            name
        }
        match self {
            Comp::Return(v) => Comp::Return(v.rename(map)),
            Comp::Eq(a, b) => Comp::Eq(a.rename(map), b.rename(map)),
            Comp::App(a, b) => Comp::App(a.rename(map), b.rename(map)),
            Comp::Flip(_) | Comp::Fresh => self.clone(),
            Comp::If(v, u, t) => Comp::If(
                v.rename(map),
                Box::new(u.apart(map, used, taken)),
                Box::new(t.apart(map, used, taken)),
            ),
            Comp::Let(x, u, t) => {
                let u = u.apart(map, used, taken);
                let mut inner = map.clone();
                let x = bind(x, &mut inner, used, taken);
                Comp::Let(x, Box::new(u), Box::new(t.apart(&inner, used, taken)))
            }
            Comp::Match(v, x, y, t) => {
                let v = v.rename(map);
                let mut inner = map.clone();
                let x = bind(x, &mut inner, used, taken);
                let y = bind(y, &mut inner, used, taken);
                Comp::Match(v, x, y, Box::new(t.apart(&inner, used, taken)))
            }
            Comp::MemFn(x, u) => {
                let mut inner = map.clone();
                let x = bind(x, &mut inner, used, taken);
                Comp::MemFn(x, Box::new(u.apart(&inner, used, taken)))
            }
        }
    }

    /// Canonical naming of an abstraction `memfn binder. self`: bound names
    /// become `b0, b1, …` in binding order and free names `v0, v1, …` in
    /// first-occurrence order. Returns the renamed body and the original free
    /// names in canonical order. α-equivalent abstractions produce equal output.
    pub fn canonical_form(&self, binder: &Ident) -> (Comp, Vec<Ident>) {
        let mut free = Vec::new();
        let mut bound_count = 0usize;
        let mut map = BTreeMap::new();
        map.insert(binder.clone(), Ident::new("b0"));
        bound_count += 1;
        let body = self.canon(&map, &mut bound_count, &mut free);
        (body, free)
    }

    fn canon(
        &self,
        map: &BTreeMap<Ident, Ident>,
        bound: &mut usize,
        free: &mut Vec<Ident>,
    ) -> Comp {
        let val = |v: &Val, free: &mut Vec<Ident>| -> Val {
            let mut order = Vec::new();
            v.vars_in_order(&mut order);
            let mut local = map.clone();
            for x in order {
                if !map.contains_key(&x) {
                    let idx = match free.iter().position(|y| *y == x) {
                        Some(i) => i,
                        None => {
                            free.push(x.clone());
                            free.len() - 1
                        }
                    };
                    local.insert(x, Ident::new(format!("v{idx}")));
                }
            }
            v.rename(&local)
        };
        let bind = |x: &Ident, map: &mut BTreeMap<Ident, Ident>, bound: &mut usize| -> Ident {
            let name = Ident::new(format!("b{bound}"));
            *bound += 1;
            map.insert(x.clone(), name.clone());
            name
        };
        match self {
            Comp::Return(v) => Comp::Return(val(v, free)),
            Comp::Eq(a, b) => {
                let a = val(a, free);
                Comp::Eq(a, val(b, free))
            }
            Comp::App(a, b) => {
                let a = val(a, free);
                Comp::App(a, val(b, free))
            }
            Comp::Flip(_) | Comp::Fresh => self.clone(),
            Comp::If(v, u, t) => {
                let v = val(v, free);
                let u = u.canon(map, bound, free);
                Comp::If(v, Box::new(u), Box::new(t.canon(map, bound, free)))
            }
            Comp::Let(x, u, t) => {
                let u = u.canon(map, bound, free);
                let mut inner = map.clone();
                let x = bind(x, &mut inner, bound);
                Comp::Let(x, Box::new(u), Box::new(t.canon(&inner, bound, free)))
            }
            Comp::Match(v, x, y, t) => {
                let v = val(v, free);
                let mut inner = map.clone();
                let x = bind(x, &mut inner, bound);
                let y = bind(y, &mut inner, bound);
                Comp::Match(v, x, y, Box::new(t.canon(&inner, bound, free)))
            }
            Comp::MemFn(x, u) => {
                let mut inner = map.clone();
                let x = bind(x, &mut inner, bound);
                Comp::MemFn(x, Box::new(u.canon(&inner, bound, free)))
            }
        }
    }

    /// Visits every subcomputation, outermost first.
    pub fn walk(&self, f: &mut impl FnMut(&Comp)) {
        f(self);
        match self {
            Comp::Let(_, u, t) | Comp::If(_, u, t) => {
                u.walk(f);
                t.walk(f);
            }
            Comp::Match(_, _, _, t) | Comp::MemFn(_, t) => t.walk(f),
            _ => {}
        }
    }
}

impl fmt::Display for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::pretty_val(self))
    }
}

/// A name derived from `base` that is not in `used`; records it as used.
pub fn fresh_name(base: &Ident, used: &mut BTreeSet<Ident>) -> Ident {
    let stem = base
        .as_str()
        .trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
    let stem = if stem.is_empty() { "v" } else { stem };
    let mut i = 1usize;
    loop {
        let candidate = Ident::new(format!("{stem}_{i}"));
        if !used.contains(&candidate) {
            used.insert(candidate.clone());
            return candidate;
        }
        i += 1;
    }
}

fn alpha(a: &Comp, b: &Comp, env: &mut Vec<(Ident, Ident)>) -> bool {
    fn var_eq(x: &Ident, y: &Ident, env: &[(Ident, Ident)]) -> bool {
        // Innermost binding wins; a variable bound on one side only is unequal.
        for (l, r) in env.iter().rev() {
            if l == x || r == y {
                return l == x && r == y;
            }
        }
        x == y
    }
    fn val_eq(v: &Val, w: &Val, env: &[(Ident, Ident)]) -> bool {
        match (v, w) {
            (Val::True, Val::True) | (Val::False, Val::False) => true,
            (Val::Var(x), Val::Var(y)) => var_eq(x, y, env),
            (Val::Pair(a1, b1), Val::Pair(a2, b2)) => val_eq(a1, a2, env) && val_eq(b1, b2, env),
            _ => false,
        }
    }
    match (a, b) {
        (Comp::Return(v), Comp::Return(w)) => val_eq(v, w, env),
        (Comp::Eq(v1, w1), Comp::Eq(v2, w2)) | (Comp::App(v1, w1), Comp::App(v2, w2)) => {
            val_eq(v1, v2, env) && val_eq(w1, w2, env)
        }
        (Comp::Flip(p), Comp::Flip(q)) => p == q,
        (Comp::Fresh, Comp::Fresh) => true,
        (Comp::If(v1, u1, t1), Comp::If(v2, u2, t2)) => {
            val_eq(v1, v2, env) && alpha(u1, u2, env) && alpha(t1, t2, env)
        }
        (Comp::Let(x1, u1, t1), Comp::Let(x2, u2, t2)) => {
            if !alpha(u1, u2, env) {
                return false;
            }
            env.push((x1.clone(), x2.clone()));
            let ok = alpha(t1, t2, env);
            env.pop();
            ok
        }
        (Comp::Match(v1, x1, y1, t1), Comp::Match(v2, x2, y2, t2)) => {
            if !val_eq(v1, v2, env) {
                return false;
            }
            env.push((x1.clone(), x2.clone()));
            env.push((y1.clone(), y2.clone()));
            let ok = alpha(t1, t2, env);
            env.truncate(env.len() - 2);
            ok
        }
        (Comp::MemFn(x1, u1), Comp::MemFn(x2, u2)) => {
            env.push((x1.clone(), x2.clone()));
            let ok = alpha(u1, u2, env);
            env.pop();
            ok
        }
        _ => false,
    }
}

/// Sufficient condition for freshness invariance of `memfn binder. body`:
/// every application argument inside the body is a variable free in the
/// whole abstraction. Returns the offending applications.
pub fn freshness_offenders(binder: &Ident, body: &Comp) -> Vec<Comp> {
    let abstraction = Comp::MemFn(binder.clone(), Box::new(body.clone()));
    let free = abstraction.free_vars();
    let mut bad = Vec::new();
    body.walk(&mut |c| {
        if let Comp::App(_, w) = c {
            if !w.free_vars().iter().all(|y| free.contains(y)) {
                bad.push(c.clone());
            }
        }
    });
    bad
}

/// Syntactic freshness check on a `memfn` node; `false` for any other node.
pub fn syntactic_freshness_check(f: &Comp) -> bool {
    match f {
        Comp::MemFn(x, body) => freshness_offenders(x, body).is_empty(),
        _ => false,
    }
}

/// Whether every `memfn` subterm of a program passes the syntactic check.
pub fn all_memfns_clean(c: &Comp) -> bool {
    let mut ok = true;
    c.walk(&mut |sub| {
        if matches!(sub, Comp::MemFn(..)) && !syntactic_freshness_check(sub) {
            ok = false;
        }
    });
    ok
}
