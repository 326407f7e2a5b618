//! Type synthesis for values, computations and extended expressions.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::bigraph::{AtomLabel, FunLabel};
pub use crate::opsem::Ext;
use crate::syntax::{Comp, Ident, Ty, Val};

/// Typing context; the rightmost declaration of a name wins.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TyCtx(Vec<(Ident, Ty)>);

impl TyCtx {
    pub fn new() -> Self {
        TyCtx(Vec::new())
    }

    pub fn lookup(&self, x: &Ident) -> Option<&Ty> {
        self.0.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn extend(&self, x: &Ident, ty: Ty) -> TyCtx {
        let mut c = self.clone();
        c.push(x.clone(), ty);
        c
    }

    pub fn push(&mut self, x: Ident, ty: Ty) {
        self.0.push((x, ty));
    }

    pub fn entries(&self) -> &[(Ident, Ty)] {
        &self.0
    }
}

impl FromIterator<(Ident, Ty)> for TyCtx {
    fn from_iter<I: IntoIterator<Item = (Ident, Ty)>>(iter: I) -> Self {
        TyCtx(iter.into_iter().collect())
    }
}

impl fmt::Display for TyCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self.0.iter().map(|(x, t)| format!("{x} : {t}")).collect();
        f.write_str(&parts.join(", "))
    }
}

/// Function–atom pairs whose memoized result is being computed, innermost
/// memo context first.
pub type MemoStack = Vec<(FunLabel, AtomLabel)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Ident),
    #[error("{reason}: expected {expected}, found {found} in `{location}`")]
    TypeMismatch {
        expected: String,
        found: Ty,
        reason: String,
        location: String,
    },
    #[error("memo stack {stack:?} does not match the memo contexts {found:?} of the expression")]
    StackMismatch { stack: MemoStack, found: MemoStack },
    #[error("memo pair ({0}, {1}) occurs twice on the stack")]
    DuplicateStackPair(FunLabel, AtomLabel),
}

fn mismatch(
    expected: impl Into<String>,
    found: Ty,
    reason: &str,
    location: impl fmt::Display,
) -> TypeError {
    TypeError::TypeMismatch {
        expected: expected.into(),
        found,
        reason: reason.to_string(),
        location: location.to_string(),
    }
}

pub fn type_of_value(ctx: &TyCtx, v: &Val) -> Result<Ty, TypeError> {
    match v {
        Val::True | Val::False => Ok(Ty::Bool),
        Val::Var(x) => ctx
            .lookup(x)
            .cloned()
            .ok_or_else(|| TypeError::UnboundVariable(x.clone())),
        Val::Pair(a, b) => Ok(Ty::prod(type_of_value(ctx, a)?, type_of_value(ctx, b)?)),
    }
}

fn expect_value(ctx: &TyCtx, v: &Val, want: &Ty, reason: &str, at: &Comp) -> Result<(), TypeError> {
    let got = type_of_value(ctx, v)?;
    if &got == want {
        Ok(())
    } else {
        Err(mismatch(want.to_string(), got, reason, at))
    }
}

pub fn type_of_comp(ctx: &TyCtx, c: &Comp) -> Result<Ty, TypeError> {
    match c {
        Comp::Return(v) => type_of_value(ctx, v),
        Comp::Let(x, u, t) => {
            let a = type_of_comp(ctx, u)?;
            type_of_comp(&ctx.extend(x, a), t)
        }
        Comp::If(v, u, t) => {
            expect_value(ctx, v, &Ty::Bool, "condition must be bool", c)?;
            let a = type_of_comp(ctx, u)?;
            let b = type_of_comp(ctx, t)?;
            if a != b {
                return Err(mismatch(a.to_string(), b, "branches must agree", c));
            }
            Ok(a)
        }
        Comp::Match(v, x, y, t) => match type_of_value(ctx, v)? {
            Ty::Prod(a, b) => type_of_comp(&ctx.extend(x, *a).extend(y, *b), t),
            other => Err(mismatch(
                "a product",
                other,
                "match scrutinee must be a pair",
                c,
            )),
        },
        Comp::Flip(_) => Ok(Ty::Bool),
        Comp::Fresh => Ok(Ty::Atom),
        Comp::Eq(v, w) => {
            expect_value(ctx, v, &Ty::Atom, "equality compares atoms", c)?;
            expect_value(ctx, w, &Ty::Atom, "equality compares atoms", c)?;
            Ok(Ty::Bool)
        }
        Comp::MemFn(x, u) => {
            let body = type_of_comp(&ctx.extend(x, Ty::Atom), u)?;
            if body != Ty::Bool {
                return Err(mismatch("bool", body, "memfn body must be bool", c));
            }
            Ok(Ty::Fun)
        }
        Comp::App(v, w) => {
            expect_value(
                ctx,
                v,
                &Ty::Fun,
                "only memoized functions can be applied",
                c,
            )?;
            expect_value(ctx, w, &Ty::Atom, "functions are applied to atoms", c)?;
            Ok(Ty::Bool)
        }
    }
}

/// Type of a closed program.
pub fn type_of_program(c: &Comp) -> Result<Ty, TypeError> {
    type_of_comp(&TyCtx::new(), c)
}

/// Memo pairs of an extended expression in post-order: every memo context
/// comes after the contexts nested inside it, and left subterms come first.
pub fn memo_pairs(e: &Ext) -> MemoStack {
    fn go(e: &Ext, out: &mut MemoStack) {
        match e {
            Ext::Plain(_) => {}
            Ext::Let(_, u, t) | Ext::If(_, u, t) => {
                go(u, out);
                go(t, out);
            }
            Ext::Match(_, _, _, t) => go(t, out),
            Ext::Memo {
                inner, fun, atom, ..
            } => {
                go(inner, out);
                out.push((*fun, *atom));
            }
        }
    }
    let mut out = Vec::new();
    go(e, &mut out);
    out
}

/// Types an extended expression against a memo stack. The stack is split
/// deterministically by the positions of the memo contexts in `e`.
pub fn type_of_ext(ctx: &TyCtx, stack: &[(FunLabel, AtomLabel)], e: &Ext) -> Result<Ty, TypeError> {
    let mut seen = BTreeSet::new();
    for &(f, a) in stack {
        if !seen.insert((f, a)) {
            return Err(TypeError::DuplicateStackPair(f, a));
        }
    }
    let mut rest = stack;
    let ty = ext_ty(ctx, &mut rest, e, stack)?;
    if !rest.is_empty() {
        return Err(TypeError::StackMismatch {
            stack: stack.to_vec(),
            found: memo_pairs(e),
        });
    }
    Ok(ty)
}

fn ext_ty(
    ctx: &TyCtx,
    rest: &mut &[(FunLabel, AtomLabel)],
    e: &Ext,
    whole: &[(FunLabel, AtomLabel)],
) -> Result<Ty, TypeError> {
    match e {
        Ext::Plain(c) => type_of_comp(ctx, c),
        Ext::Let(x, u, t) => {
            let a = ext_ty(ctx, rest, u, whole)?;
            ext_ty(&ctx.extend(x, a), rest, t, whole)
        }
        Ext::If(v, u, t) => {
            let ty = type_of_value(ctx, v)?;
            if ty != Ty::Bool {
                return Err(mismatch("bool", ty, "condition must be bool", v));
            }
            let a = ext_ty(ctx, rest, u, whole)?;
            let b = ext_ty(ctx, rest, t, whole)?;
            if a != b {
                return Err(mismatch(a.to_string(), b, "branches must agree", "if"));
            }
            Ok(a)
        }
        Ext::Match(v, x, y, t) => match type_of_value(ctx, v)? {
            Ty::Prod(a, b) => ext_ty(&ctx.extend(x, *a).extend(y, *b), rest, t, whole),
            other => Err(mismatch(
                "a product",
                other,
                "match scrutinee must be a pair",
                v,
            )),
        },
        Ext::Memo {
            inner, fun, atom, ..
        } => {
            let a = ext_ty(ctx, rest, inner, whole)?;
            match rest.split_first() {
                Some((&head, tail)) if head == (*fun, *atom) => {
                    *rest = tail;
                    Ok(a)
                }
                _ => Err(TypeError::StackMismatch {
                    stack: whole.to_vec(),
                    found: memo_pairs(e),
                }),
            }
        }
    }
}
