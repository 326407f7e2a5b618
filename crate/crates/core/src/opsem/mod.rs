//! Small-step operational semantics over configurations
//! `(environment, extended expression, partial bigraph, closures)`.
//!
//! Programs are renamed apart before execution, so a single environment per
//! configuration never confuses two binders of the same name. Memo contexts
//! save the caller's environment and restore it when the memoized result is
//! written back.

mod judge;
mod observe;
mod run;

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bigraph::{AtomLabel, BigraphError, FunLabel, Node, PartialBigraph};
use crate::syntax::{pretty, Comp, Ident, Ty, Val};
use crate::{ExactDist, FinDist, Prob};

pub use judge::{check_stack_invariants, config_judgement, context_of, JudgementFailure};
pub use observe::{observational_bigstep, observe, ClosureObs, Observation};
pub use run::{
    enumerate_bigstep, explore, run_into, run_sampled, run_with, BranchChooser, ForcedChooser,
    SeededChooser, STEP_BUDGET,
};

/// Runtime value: a tree of booleans and labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnvValue {
    Bool(bool),
    Fun(FunLabel),
    Atom(AtomLabel),
    Pair(Box<EnvValue>, Box<EnvValue>),
}

impl EnvValue {
    pub fn pair(a: EnvValue, b: EnvValue) -> EnvValue {
        EnvValue::Pair(Box::new(a), Box::new(b))
    }

    /// The type whose set-theoretic denotation contains this value.
    pub fn ty(&self) -> Ty {
        match self {
            EnvValue::Bool(_) => Ty::Bool,
            EnvValue::Fun(_) => Ty::Fun,
            EnvValue::Atom(_) => Ty::Atom,
            EnvValue::Pair(a, b) => Ty::prod(a.ty(), b.ty()),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            EnvValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Labels in left-to-right order, with repetitions.
    pub fn nodes(&self, out: &mut Vec<Node>) {
        match self {
            EnvValue::Bool(_) => {}
            EnvValue::Fun(f) => out.push(Node::Fun(*f)),
            EnvValue::Atom(a) => out.push(Node::Atom(*a)),
            EnvValue::Pair(a, b) => {
                a.nodes(out);
                b.nodes(out);
            }
        }
    }

    pub fn relabel(
        &self,
        funs: &BTreeMap<FunLabel, FunLabel>,
        atoms: &BTreeMap<AtomLabel, AtomLabel>,
    ) -> EnvValue {
        match self {
            EnvValue::Bool(b) => EnvValue::Bool(*b),
            EnvValue::Fun(f) => EnvValue::Fun(*funs.get(f).unwrap_or(f)),
            EnvValue::Atom(a) => EnvValue::Atom(*atoms.get(a).unwrap_or(a)),
            EnvValue::Pair(a, b) => EnvValue::pair(a.relabel(funs, atoms), b.relabel(funs, atoms)),
        }
    }
}

impl fmt::Display for EnvValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvValue::Bool(b) => write!(f, "{b}"),
            EnvValue::Fun(l) => write!(f, "{l}"),
            EnvValue::Atom(a) => write!(f, "{a}"),
            EnvValue::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

impl Serialize for EnvValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EnvValue::Bool(b) => s.serialize_bool(*b),
            EnvValue::Fun(_) | EnvValue::Atom(_) => s.serialize_str(&self.to_string()),
            EnvValue::Pair(a, b) => (a, b).serialize(s),
        }
    }
}

pub type Env = BTreeMap<Ident, EnvValue>;

/// Renders an environment as `{x ↦ a0, …}`.
pub fn show_env(env: &Env) -> String {
    let parts: Vec<_> = env.iter().map(|(x, v)| format!("{x} ↦ {v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Closure {
    pub binder: Ident,
    pub body: Comp,
    pub captured: Env,
}

impl Closure {
    pub fn abstraction(&self) -> Comp {
        Comp::MemFn(self.binder.clone(), Box::new(self.body.clone()))
    }
}

impl Serialize for Closure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Closure", 2)?;
        st.serialize_field("fn", &pretty(&self.abstraction()))?;
        st.serialize_field("env", &self.captured)?;
        st.end()
    }
}

/// Computations extended with memo contexts `{{e}}^{f,a}_γ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    Plain(Comp),
    Let(Ident, Box<Ext>, Box<Ext>),
    If(Val, Box<Ext>, Box<Ext>),
    Match(Val, Ident, Ident, Box<Ext>),
    Memo {
        inner: Box<Ext>,
        fun: FunLabel,
        atom: AtomLabel,
        restore: Env,
    },
}

impl Ext {
    /// `let` node, collapsed to a plain computation when possible.
    pub fn let_in(x: Ident, u: Ext, t: Ext) -> Ext {
        match (u, t) {
            (Ext::Plain(u), Ext::Plain(t)) => Ext::Plain(Comp::Let(x, Box::new(u), Box::new(t))),
            (u, t) => Ext::Let(x, Box::new(u), Box::new(t)),
        }
    }

    /// Collapses every `let` node whose parts are plain, bottom up.
    pub fn normalized(&self) -> Ext {
        match self {
            Ext::Plain(_) => self.clone(),
            Ext::Let(x, u, t) => Ext::let_in(x.clone(), u.normalized(), t.normalized()),
            Ext::If(v, u, t) => match (u.normalized(), t.normalized()) {
                (Ext::Plain(u), Ext::Plain(t)) => {
                    Ext::Plain(Comp::If(v.clone(), Box::new(u), Box::new(t)))
                }
                (u, t) => Ext::If(v.clone(), Box::new(u), Box::new(t)),
            },
            Ext::Match(v, x, y, t) => match t.normalized() {
                Ext::Plain(t) => {
                    Ext::Plain(Comp::Match(v.clone(), x.clone(), y.clone(), Box::new(t)))
                }
                t => Ext::Match(v.clone(), x.clone(), y.clone(), Box::new(t)),
            },
            Ext::Memo {
                inner,
                fun,
                atom,
                restore,
            } => Ext::Memo {
                inner: Box::new(inner.normalized()),
                fun: *fun,
                atom: *atom,
                restore: restore.clone(),
            },
        }
    }

    pub fn as_plain(&self) -> Option<&Comp> {
        match self {
            Ext::Plain(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Ext::Plain(c) if is_terminal_comp(c))
    }

    /// Memo contexts along every path, outermost first.
    pub fn memo_frames(&self) -> Vec<(FunLabel, AtomLabel, &Env)> {
        let mut out = Vec::new();
        self.collect_frames(&mut out);
        out
    }

    fn collect_frames<'a>(&'a self, out: &mut Vec<(FunLabel, AtomLabel, &'a Env)>) {
        match self {
            Ext::Plain(_) => {}
            Ext::Let(_, u, t) | Ext::If(_, u, t) => {
                u.collect_frames(out);
                t.collect_frames(out);
            }
            Ext::Match(_, _, _, t) => t.collect_frames(out),
            Ext::Memo {
                inner,
                fun,
                atom,
                restore,
            } => {
                out.push((*fun, *atom, restore));
                inner.collect_frames(out);
            }
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Plain(c) => write!(f, "{c}"),
            Ext::Let(x, u, t) => write!(f, "let val {x} <- {u} in {t}"),
            Ext::If(v, u, t) => write!(f, "if {v} then {u} else {t}"),
            Ext::Match(v, x, y, t) => write!(f, "match {v} as ({x}, {y}) in {t}"),
            Ext::Memo {
                inner,
                fun,
                atom,
                restore,
            } => write!(f, "{{{{{inner}}}}}^{{{fun},{atom}}}_{}", show_env(restore)),
        }
    }
}

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn is_terminal_comp(c: &Comp) -> bool {
    matches!(c, Comp::Return(_) | Comp::MemFn(..) | Comp::Fresh)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub env: Env,
    pub term: Ext,
    pub graph: PartialBigraph,
    pub closures: BTreeMap<FunLabel, Closure>,
}

impl Configuration {
    /// `(∅, p, ∅, ∅)` with the binders of `p` renamed apart.
    pub fn initial(p: &Comp) -> Configuration {
        Configuration {
            env: Env::new(),
            term: Ext::Plain(p.rename_apart()),
            graph: PartialBigraph::empty(),
            closures: BTreeMap::new(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.term.is_terminal()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let closures: Vec<_> = self
            .closures
            .iter()
            .map(|(l, c)| format!("{l} ↦ ({}, {})", c.abstraction(), show_env(&c.captured)))
            .collect();
        write!(
            f,
            "({}, {}, {}, {{{}}})",
            show_env(&self.env),
            self.term,
            self.graph,
            closures.join(", ")
        )
    }
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let closures: BTreeMap<String, &Closure> = self
            .closures
            .iter()
            .map(|(f, c)| (f.to_string(), c))
            .collect();
        let mut st = s.serialize_struct("Configuration", 4)?;
        st.serialize_field("env", &self.env)?;
        st.serialize_field("term", &self.term)?;
        st.serialize_field("graph", &self.graph)?;
        st.serialize_field("closures", &closures)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpsemError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Ident),
    #[error("no rule applies: {0}")]
    Stuck(String),
    #[error("malformed configuration: {0}")]
    MalformedConfiguration(String),
    #[error("cannot memoize a non-boolean result {0}")]
    NonBooleanMemo(EnvValue),
    #[error("evaluation exceeded {0} steps")]
    StepBudgetExceeded(usize),
    #[error(transparent)]
    Graph(#[from] BigraphError),
}

pub fn eval_value(env: &Env, v: &Val) -> Result<EnvValue, OpsemError> {
    match v {
        Val::True => Ok(EnvValue::Bool(true)),
        Val::False => Ok(EnvValue::Bool(false)),
        Val::Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| OpsemError::UnboundVariable(x.clone())),
        Val::Pair(a, b) => Ok(EnvValue::pair(eval_value(env, a)?, eval_value(env, b)?)),
    }
}

/// One layer of a reduction context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    /// `let val binder <- [-] in body`
    LetLeft { binder: Ident, body: Ext },
    /// `{{[-]}}^{fun,atom}_restore`
    Memo {
        fun: FunLabel,
        atom: AtomLabel,
        restore: Env,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    Terminal,
    /// `context` lists frames outermost first.
    Redex {
        context: Vec<Frame>,
        redex: Ext,
    },
}

/// Splits `t` into a reduction context and the redex in leftmost-outermost
/// position. A `let` redex is returned split, so `recompose` gives back `t`
/// up to [`Ext::normalized`].
pub fn decompose(t: &Ext) -> Result<Decomposition, OpsemError> {
    let mut context = Vec::new();
    let mut cur = t.clone();
    loop {
        let next = match cur {
            Ext::Plain(ref c) if is_terminal_comp(c) => {
                return if context.is_empty() {
                    Ok(Decomposition::Terminal)
                } else {
                    Err(OpsemError::Stuck(format!(
                        "terminal `{c}` under a memo context"
                    )))
                };
            }
            Ext::Plain(Comp::Let(x, u, t)) => {
                Ext::Let(x, Box::new(Ext::Plain(*u)), Box::new(Ext::Plain(*t)))
            }
            Ext::Let(x, u, t) => {
                if u.is_terminal() {
                    let redex = Ext::Let(x, u, t);
                    return Ok(Decomposition::Redex { context, redex });
                }
                context.push(Frame::LetLeft {
                    binder: x,
                    body: *t,
                });
                *u
            }
            Ext::Memo {
                inner,
                fun,
                atom,
                restore,
            } => {
                if matches!(*inner, Ext::Plain(Comp::Return(_))) {
                    let redex = Ext::Memo {
                        inner,
                        fun,
                        atom,
                        restore,
                    };
                    return Ok(Decomposition::Redex { context, redex });
                }
                context.push(Frame::Memo { fun, atom, restore });
                *inner
            }
            redex => return Ok(Decomposition::Redex { context, redex }),
        };
        cur = next;
    }
}

/// Plugs `e` into a reduction context.
pub fn recompose(context: &[Frame], e: Ext) -> Ext {
    context.iter().rev().fold(e, |inner, frame| match frame {
        Frame::LetLeft { binder, body } => Ext::let_in(binder.clone(), inner, body.clone()),
        Frame::Memo { fun, atom, restore } => Ext::Memo {
            inner: Box::new(inner),
            fun: *fun,
            atom: *atom,
            restore: restore.clone(),
        },
    })
}

/// Result of one step: deterministic, or a coin flip between two successors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Det(Configuration),
    Flip {
        theta: Prob,
        heads: Configuration,
        tails: Configuration,
    },
}

impl Outcome {
    pub fn into_dist(self) -> ExactDist<Configuration> {
        match self {
            Outcome::Det(c) => FinDist::dirac(c),
            Outcome::Flip {
                theta,
                heads,
                tails,
            } => {
                let one_minus = Prob::from_integer(1.into()) - &theta;
                FinDist::from_pairs([(heads, theta), (tails, one_minus)]).expect("flip mass")
            }
        }
    }
}

fn with_term(c: &Configuration, term: Ext) -> Configuration {
    Configuration {
        env: c.env.clone(),
        term,
        graph: c.graph.clone(),
        closures: c.closures.clone(),
    }
}

fn extended(env: &Env, bindings: impl IntoIterator<Item = (Ident, EnvValue)>) -> Env {
    let mut env = env.clone();
    env.extend(bindings);
    env
}

/// Contracts a redex (the whole term of `c`).
fn contract(c: &Configuration) -> Result<Outcome, OpsemError> {
    let env = &c.env;
    let det = |env: Env, term: Ext| {
        Ok(Outcome::Det(Configuration {
            env,
            term,
            graph: c.graph.clone(),
            closures: c.closures.clone(),
        }))
    };
    let ret = |b: bool| Ext::Plain(Comp::Return(Val::bool(b)));
    match &c.term {
        Ext::Let(x, u, body) => match u.as_plain() {
            Some(Comp::Return(v)) => det(
                extended(env, [(x.clone(), eval_value(env, v)?)]),
                (**body).clone(),
            ),
            Some(Comp::MemFn(y, b)) => {
                let (graph, f) = c.graph.add_left_undef();
                let mut closures = c.closures.clone();
                closures.insert(
                    f,
                    Closure {
                        binder: y.clone(),
                        body: (**b).clone(),
                        captured: env.clone(),
                    },
                );
                Ok(Outcome::Det(Configuration {
                    env: extended(env, [(x.clone(), EnvValue::Fun(f))]),
                    term: (**body).clone(),
                    graph,
                    closures,
                }))
            }
            Some(Comp::Fresh) => {
                let (graph, a) = c.graph.add_right_undef();
                Ok(Outcome::Det(Configuration {
                    env: extended(env, [(x.clone(), EnvValue::Atom(a))]),
                    term: (**body).clone(),
                    graph,
                    closures: c.closures.clone(),
                }))
            }
            _ => Err(OpsemError::Stuck(format!("let over non-terminal {u}"))),
        },
        Ext::Memo {
            inner,
            fun,
            atom,
            restore,
        } => {
            let Some(Comp::Return(v)) = inner.as_plain() else {
                return Err(OpsemError::Stuck(format!("memo context over {inner}")));
            };
            let value = eval_value(env, v)?;
            let b = value
                .as_bool()
                .ok_or(OpsemError::NonBooleanMemo(value.clone()))?;
            Ok(Outcome::Det(Configuration {
                env: restore.clone(),
                term: ret(b),
                graph: c.graph.set_edge(*fun, *atom, b)?,
                closures: c.closures.clone(),
            }))
        }
        Ext::If(v, u, t) => match eval_value(env, v)? {
            EnvValue::Bool(true) => det(env.clone(), (**u).clone()),
            EnvValue::Bool(false) => det(env.clone(), (**t).clone()),
            other => Err(OpsemError::Stuck(format!("if on {other}"))),
        },
        Ext::Match(v, x, y, t) => match eval_value(env, v)? {
            EnvValue::Pair(a, b) => det(
                extended(env, [(x.clone(), *a), (y.clone(), *b)]),
                (**t).clone(),
            ),
            other => Err(OpsemError::Stuck(format!("match on {other}"))),
        },
        Ext::Plain(comp) => match comp {
            Comp::If(v, u, t) => contract(&with_term(
                c,
                Ext::If(
                    v.clone(),
                    Box::new(Ext::Plain((**u).clone())),
                    Box::new(Ext::Plain((**t).clone())),
                ),
            )),
            Comp::Match(v, x, y, t) => contract(&with_term(
                c,
                Ext::Match(
                    v.clone(),
                    x.clone(),
                    y.clone(),
                    Box::new(Ext::Plain((**t).clone())),
                ),
            )),
            Comp::Flip(theta) => Ok(Outcome::Flip {
                theta: theta.clone(),
                heads: with_term(c, ret(true)),
                tails: with_term(c, ret(false)),
            }),
            Comp::Eq(v, w) => {
                let (a, b) = (eval_value(env, v)?, eval_value(env, w)?);
                match (&a, &b) {
                    (EnvValue::Atom(_), EnvValue::Atom(_)) => det(env.clone(), ret(a == b)),
                    _ => Err(OpsemError::Stuck(format!("equality on {a} and {b}"))),
                }
            }
            Comp::App(v, w) => {
                let (EnvValue::Fun(f), EnvValue::Atom(a)) =
                    (eval_value(env, v)?, eval_value(env, w)?)
                else {
                    return Err(OpsemError::Stuck(format!("application {comp}")));
                };
                let edge = c.graph.edge(f, a).ok_or_else(|| {
                    OpsemError::MalformedConfiguration(format!("no edge ({f}, {a})"))
                })?;
                if let Some(b) = edge.known() {
                    return det(env.clone(), ret(b));
                }
                let closure = c.closures.get(&f).ok_or_else(|| {
                    OpsemError::MalformedConfiguration(format!("no closure for {f}"))
                })?;
                let callee = extended(
                    &closure.captured,
                    [(closure.binder.clone(), EnvValue::Atom(a))],
                );
                det(
                    callee,
                    Ext::Memo {
                        inner: Box::new(Ext::Plain(closure.body.clone())),
                        fun: f,
                        atom: a,
                        restore: env.clone(),
                    },
                )
            }
            Comp::Let(..) | Comp::Return(_) | Comp::MemFn(..) | Comp::Fresh => {
                Err(OpsemError::Stuck(format!("`{comp}` is not a redex")))
            }
        },
    }
}

/// One reduction step, resolving flips as an explicit choice.
pub fn step_outcome(c: &Configuration) -> Result<Outcome, OpsemError> {
    match decompose(&c.term)? {
        Decomposition::Terminal => Err(OpsemError::Stuck("configuration is terminal".into())),
        Decomposition::Redex { context, redex } => {
            let plug = |r: Configuration| Configuration {
                term: recompose(&context, r.term),
                ..r
            };
            Ok(match contract(&with_term(c, redex))? {
                Outcome::Det(r) => Outcome::Det(plug(r)),
                Outcome::Flip {
                    theta,
                    heads,
                    tails,
                } => Outcome::Flip {
                    theta,
                    heads: plug(heads),
                    tails: plug(tails),
                },
            })
        }
    }
}

/// One reduction step as a distribution over successors.
pub fn step(c: &Configuration) -> Result<ExactDist<Configuration>, OpsemError> {
    step_outcome(c).map(Outcome::into_dist)
}
