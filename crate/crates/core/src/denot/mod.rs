//! Denotational semantics in the probabilistic local state monad on total
//! bigraphs.
//!
//! A computation at world `g` denotes, for each bias state on `g`'s
//! functions, a distribution over classes `[value, biases]_g`: a value living
//! in an extension `h` of `g`, identified up to discarding the nodes of
//! `h − g` the value does not mention and renaming the rest. Classes are kept
//! in a canonical form (see [`canonicalize`]), so distribution equality is
//! class equality.

mod config;
mod eval;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bigraph::{
    canonical_maps, AtomLabel, BigraphError, Embedding, FunLabel, Node, TotalBigraph,
};
use crate::opsem::{EnvValue, OpsemError};
use crate::{ExactDist, FinDist, Prob};

pub use config::{
    check_dataflow, check_dataflow_at, check_soundness, den_config, ConfigDenotation,
    DataflowReport, SoundnessReport,
};
pub use eval::{den_comp, den_flip, den_fresh, den_mem, Audit, Denoter};

/// Probability of each function yielding `true` on a future fresh atom.
pub type BiasState = BTreeMap<FunLabel, Prob>;

/// Environment of a denotation: variables to values over the current world.
pub type DenEnv = crate::opsem::Env;

/// Canonical representative of a class `[value, biases]_g`.
///
/// `world` is the base `g` plus exactly the nodes of the value outside `g`,
/// numbered after `g`'s labels in first-occurrence order; `biases` lists the
/// fresh functions in label order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoendClass {
    pub world: TotalBigraph,
    pub value: EnvValue,
    pub biases: Vec<(FunLabel, Prob)>,
}

impl CoendClass {
    pub fn bias_map(&self) -> BiasState {
        self.biases.iter().cloned().collect()
    }

    /// Nodes of the world outside `g`.
    pub fn fresh_nodes(&self, g: &TotalBigraph) -> (Vec<FunLabel>, Vec<AtomLabel>) {
        let fl = self
            .world
            .left()
            .iter()
            .copied()
            .filter(|f| !g.has_fun(*f))
            .collect();
        let fr = self
            .world
            .right()
            .iter()
            .copied()
            .filter(|a| !g.has_atom(*a))
            .collect();
        (fl, fr)
    }
}

impl fmt::Display for CoendClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.value)?;
        if !self.world.left().is_empty() || !self.world.right().is_empty() {
            write!(f, " @ {}", self.world)?;
        }
        if !self.biases.is_empty() {
            let bs: Vec<_> = self
                .biases
                .iter()
                .map(|(l, p)| format!("{l} ↦ {p}"))
                .collect();
            write!(f, ", biases {{{}}}", bs.join(", "))?;
        }
        f.write_str("]")
    }
}

impl Serialize for CoendClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let biases: BTreeMap<String, String> = self
            .biases
            .iter()
            .map(|(f, p)| {
                (
                    format!("fun{}", f.0),
                    format!("{}/{}", p.numer(), p.denom()),
                )
            })
            .collect();
        let mut st = s.serialize_struct("CoendClass", 3)?;
        st.serialize_field("value", &self.value)?;
        st.serialize_field("graph", &self.world)?;
        st.serialize_field("biases", &biases)?;
        st.end()
    }
}

/// JSON for a distribution over classes: one object per class with its
/// exact probability.
pub fn class_dist_json(d: &ExactDist<CoendClass>) -> serde_json::Value {
    let items = d
        .iter()
        .map(|(c, p)| {
            let mut v = serde_json::to_value(c).expect("class serializes");
            v["prob"] = serde_json::Value::String(format!("{}/{}", p.numer(), p.denom()));
            v
        })
        .collect();
    serde_json::Value::Array(items)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// Edges from existing functions to the fresh atom.
    pub connectivity: Vec<(FunLabel, bool)>,
    /// Probability of the body returning `true` at that atom.
    pub prob: Prob,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let es: Vec<_> = self
            .connectivity
            .iter()
            .map(|(l, b)| format!("{l}: {b}"))
            .collect();
        write!(f, "{} with connectivity {{{}}}", self.prob, es.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DenotError {
    #[error("`{abstraction}` is not freshness-invariant at world {world}: true with probability {} but {}", witness.0, witness.1)]
    FreshnessViolation {
        abstraction: String,
        world: String,
        witness: Box<(Witness, Witness)>,
    },
    #[error("boolean class {0} still carries fresh nodes")]
    NonCollapsedClass(String),
    #[error("ill-typed denotation: {0}")]
    IllTyped(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(crate::Ident),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] BigraphError),
    #[error(transparent)]
    Opsem(#[from] OpsemError),
}

/// The canonical class of `value` over `g`, where `value` lives in `h ⊇ g`
/// and `biases` covers at least the functions of `h − g` used by `value`.
pub fn canonicalize(
    g: &TotalBigraph,
    h: &TotalBigraph,
    value: &EnvValue,
    biases: &BiasState,
) -> CoendClass {
    let mut nodes = Vec::new();
    value.nodes(&mut nodes);
    let mut seen = BTreeSet::new();
    let order: Vec<Node> = nodes
        .into_iter()
        .filter(|n| match *n {
            Node::Fun(f) => !g.has_fun(f),
            Node::Atom(a) => !g.has_atom(a),
        })
        .filter(|n| seen.insert(*n))
        .collect();
    let base_l: BTreeSet<_> = g.left().iter().copied().collect();
    let base_r: BTreeSet<_> = g.right().iter().copied().collect();
    if order.is_empty() {
        return CoendClass {
            world: g.clone(),
            value: value.clone(),
            biases: Vec::new(),
        };
    }
    let mut keep_l = base_l.clone();
    let mut keep_r = base_r.clone();
    for n in &order {
        match *n {
            Node::Fun(f) => keep_l.insert(f),
            Node::Atom(a) => keep_r.insert(a),
        };
    }
    let (funs, atoms) = canonical_maps(&base_l, &base_r, &order);
    let world = h.restrict(&keep_l, &keep_r).relabel(&funs, &atoms);
    let mut fresh_biases: Vec<(FunLabel, Prob)> = funs
        .iter()
        .map(|(old, new)| {
            (
                *new,
                biases
                    .get(old)
                    .cloned()
                    .expect("bias recorded for every fresh function"),
            )
        })
        .collect();
    fresh_biases.sort_by_key(|(f, _)| *f);
    CoendClass {
        world,
        value: value.relabel(&funs, &atoms),
        biases: fresh_biases,
    }
}

/// Probability that a distribution of boolean classes yields `true`.
pub fn prob_true(g: &TotalBigraph, d: &ExactDist<CoendClass>) -> Result<Prob, DenotError> {
    let mut p = Prob::zero();
    for (c, w) in d.iter() {
        let EnvValue::Bool(b) = c.value else {
            return Err(DenotError::IllTyped(format!(
                "expected a boolean class, found {c}"
            )));
        };
        if c.world.left().len() != g.left().len() || c.world.right().len() != g.right().len() {
            return Err(DenotError::NonCollapsedClass(c.to_string()));
        }
        if b {
            p += w;
        }
    }
    Ok(p)
}

/// An argument for [`mem_phi`]: an atom of the world, or a fresh atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomQuery {
    Existing(AtomLabel),
    Fresh,
}

/// Probability that the random function denoted by `d` returns `true` at
/// the queried atom.
pub fn mem_phi(
    g: &TotalBigraph,
    d: &ExactDist<CoendClass>,
    lambda: &BiasState,
    query: AtomQuery,
) -> Result<Prob, DenotError> {
    let mut p = Prob::zero();
    for (c, w) in d.iter() {
        let EnvValue::Fun(f) = c.value else {
            return Err(DenotError::IllTyped(format!(
                "expected a function class, found {c}"
            )));
        };
        let q = match query {
            AtomQuery::Existing(a) => {
                let edge = c
                    .world
                    .edge(f, a)
                    .ok_or_else(|| DenotError::IllTyped(format!("no edge ({f}, {a})")))?;
                if edge {
                    Prob::one()
                } else {
                    Prob::zero()
                }
            }
            AtomQuery::Fresh if g.has_fun(f) => lambda
                .get(&f)
                .cloned()
                .ok_or_else(|| DenotError::IllTyped(format!("no bias for {f}")))?,
            AtomQuery::Fresh => c.bias_map()[&f].clone(),
        };
        p += w * q;
    }
    Ok(p)
}

/// Weight of a boolean outcome under a bias: `p^b (1 − p)^(1 − b)`.
pub(crate) fn bern(p: &Prob, b: bool) -> Prob {
    if b {
        p.clone()
    } else {
        Prob::one() - p
    }
}

/// All boolean assignments to `n` positions, in binary counting order.
pub(crate) fn assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..(1u64 << n)).map(move |bits| (0..n).map(|i| bits >> i & 1 == 1).collect())
}

/// A computation at a fixed world: a function from bias states to
/// distributions over canonical classes.
#[derive(Clone)]
pub struct MonValue {
    pub base: TotalBigraph,
    eval: Rc<BiasFn>,
}

type BiasFn = dyn Fn(&BiasState) -> Result<ExactDist<CoendClass>, DenotError>;

pub type Kleisli = Rc<dyn Fn(&TotalBigraph, &EnvValue) -> MonValue>;

impl MonValue {
    pub fn new(
        base: TotalBigraph,
        eval: impl Fn(&BiasState) -> Result<ExactDist<CoendClass>, DenotError> + 'static,
    ) -> Self {
        MonValue {
            base,
            eval: Rc::new(eval),
        }
    }

    pub fn eval(&self, lambda: &BiasState) -> Result<ExactDist<CoendClass>, DenotError> {
        (self.eval)(lambda)
    }

    /// `η`: the point mass on the class of `value`.
    pub fn unit(g: &TotalBigraph, value: EnvValue) -> Self {
        let class = canonicalize(g, g, &value, &BiasState::new());
        MonValue::new(g.clone(), move |_| Ok(FinDist::dirac(class.clone())))
    }

    /// Kleisli extension: run `self`, continue with `k` in each class's world
    /// under the bias state extended by the class's biases, and re-express
    /// every result over the base.
    pub fn bind(&self, k: Kleisli) -> Self {
        let m = self.clone();
        let g = self.base.clone();
        MonValue::new(self.base.clone(), move |lambda| {
            let d = m.eval(lambda)?;
            bind_classes(&g, &d, lambda, |h, v, lam| k(h, v).eval(lam))
        })
    }

    /// Action along an embedding `ι : g → g2` (see [`transport_class`]).
    pub fn transport(&self, iota: &Embedding, g2: &TotalBigraph) -> Self {
        let m = self.clone();
        let g = self.base.clone();
        let iota = iota.clone();
        let g2c = g2.clone();
        MonValue::new(g2.clone(), move |lambda2| {
            let lambda: BiasState = g
                .left()
                .iter()
                .map(|f| (*f, lambda2[&iota.fun(*f)].clone()))
                .collect();
            m.eval(&lambda)?
                .try_bind(|c| Ok(transport_class(&g, c, &iota, &g2c, lambda2)))
        })
    }
}

/// Shared core of [`MonValue::bind`] and the evaluator's `let`.
pub(crate) fn bind_classes(
    g: &TotalBigraph,
    d: &ExactDist<CoendClass>,
    lambda: &BiasState,
    mut k: impl FnMut(&TotalBigraph, &EnvValue, &BiasState) -> Result<ExactDist<CoendClass>, DenotError>,
) -> Result<ExactDist<CoendClass>, DenotError> {
    d.try_bind(|class| {
        let h = &class.world;
        if class.biases.is_empty()
            && h.right().len() == g.right().len()
            && h.left().len() == g.left().len()
        {
            return k(h, &class.value, lambda);
        }
        let mut lam_h = lambda.clone();
        lam_h.extend(class.biases.iter().cloned());
        let inner = k(h, &class.value, &lam_h)?;
        Ok(inner.map(|c2| {
            let mut all = class.bias_map();
            all.extend(c2.biases.iter().cloned());
            canonicalize(g, &c2.world, &c2.value, &all)
        }))
    })
}

/// Pushes a class over `g` forward along `ι : g → g2`. The world of the
/// class and `g2` are glued over `g`; an edge between a function new in `g2`
/// and a fresh atom of the class is `true` with that function's bias in
/// `lambda2`, and an edge between a fresh function of the class and an atom
/// new in `g2` is `true` with the class's bias for it.
pub fn transport_class(
    g: &TotalBigraph,
    class: &CoendClass,
    iota: &Embedding,
    g2: &TotalBigraph,
    lambda2: &BiasState,
) -> ExactDist<CoendClass> {
    let h = &class.world;
    let (fresh_l, fresh_r) = class.fresh_nodes(g);
    let mut fmap: BTreeMap<FunLabel, FunLabel> =
        g.left().iter().map(|f| (*f, iota.fun(*f))).collect();
    let mut amap: BTreeMap<AtomLabel, AtomLabel> =
        g.right().iter().map(|a| (*a, iota.atom(*a))).collect();
    let mut next_f = g2.next_fun().0;
    for f in &fresh_l {
        fmap.insert(*f, FunLabel(next_f));
        next_f += 1;
    }
    let mut next_a = g2.next_atom().0;
    for a in &fresh_r {
        amap.insert(*a, AtomLabel(next_a));
        next_a += 1;
    }
    let image_l: BTreeSet<_> = g.left().iter().map(|f| iota.fun(*f)).collect();
    let image_r: BTreeSet<_> = g.right().iter().map(|a| iota.atom(*a)).collect();
    let new_l: Vec<_> = g2
        .left()
        .iter()
        .copied()
        .filter(|f| !image_l.contains(f))
        .collect();
    let new_r: Vec<_> = g2
        .right()
        .iter()
        .copied()
        .filter(|a| !image_r.contains(a))
        .collect();
    let biases = class.bias_map();

    // (pushout function, pushout atom, probability of true)
    let mut cross: Vec<(FunLabel, AtomLabel, Prob)> = Vec::new();
    for f2 in &new_l {
        for a in &fresh_r {
            cross.push((*f2, amap[a], lambda2[f2].clone()));
        }
    }
    for f in &fresh_l {
        for a2 in &new_r {
            cross.push((fmap[f], *a2, biases[f].clone()));
        }
    }
    let inv_f: BTreeMap<_, _> = fmap.iter().map(|(k, v)| (*v, *k)).collect();
    let inv_a: BTreeMap<_, _> = amap.iter().map(|(k, v)| (*v, *k)).collect();
    let value = class.value.relabel(&fmap, &amap);
    let pushed_biases: BiasState = class
        .biases
        .iter()
        .map(|(f, p)| (fmap[f], p.clone()))
        .collect();

    let mut out = Vec::new();
    for bits in assignments(cross.len()) {
        let mut weight = Prob::one();
        let mut chosen = BTreeMap::new();
        for ((f, a, p), b) in cross.iter().zip(&bits) {
            weight *= bern(p, *b);
            chosen.insert((*f, *a), *b);
        }
        if weight.is_zero() {
            continue;
        }
        let world = TotalBigraph::from_fn(
            g2.left()
                .iter()
                .copied()
                .chain(fresh_l.iter().map(|f| fmap[f])),
            g2.right()
                .iter()
                .copied()
                .chain(fresh_r.iter().map(|a| amap[a])),
            |f, a| {
                if let Some(e) = g2.edge(f, a) {
                    return e;
                }
                if let Some(b) = chosen.get(&(f, a)) {
                    return *b;
                }
                h.edge(inv_f[&f], inv_a[&a])
                    .expect("edge inherited from the class world")
            },
        );
        out.push((canonicalize(g2, &world, &value, &pushed_biases), weight));
    }
    FinDist::from_pairs(out).expect("transport preserves mass")
}

/// Problems with a class's shape relative to its base world, if any.
pub fn class_shape_violation(g: &TotalBigraph, c: &CoendClass) -> Option<String> {
    let (fl, fr) = c.fresh_nodes(g);
    let recanon = canonicalize(g, &c.world, &c.value, &c.bias_map());
    if recanon != *c {
        return Some(format!("{c} is not in canonical form"));
    }
    if !g.is_subgraph_of(&c.world) {
        return Some(format!("{c} does not extend its base world"));
    }
    let bias_funs: Vec<_> = c.biases.iter().map(|(f, _)| *f).collect();
    if bias_funs != fl {
        return Some(format!("{c} records biases for the wrong functions"));
    }
    let ok = match &c.value {
        EnvValue::Bool(_) => fl.is_empty() && fr.is_empty(),
        EnvValue::Atom(a) => fl.is_empty() && (fr.is_empty() || fr == [*a]),
        EnvValue::Fun(f) => fr.is_empty() && (fl.is_empty() || fl == [*f]),
        EnvValue::Pair(..) => true,
    };
    if ok {
        None
    } else {
        Some(format!("{c} has an unexpected shape"))
    }
}
