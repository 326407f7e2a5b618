//! Memo-table bigraphs: function labels on the left, atom labels on the
//! right, one edge per (function, atom) pair.
//!
//! A [`PartialBigraph`] carries `true`/`false`/undefined edges and is the
//! world of the operational semantics; a [`TotalBigraph`] has every edge
//! defined and is the world of the denotational semantics. Labels are
//! dense naturals allocated per side, and embeddings are explicit label
//! injections.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunLabel(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomLabel(pub u32);

impl fmt::Display for FunLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    True,
    False,
    Undef,
}

impl Edge {
    pub fn known(self) -> Option<bool> {
        match self {
            Edge::True => Some(true),
            Edge::False => Some(false),
            Edge::Undef => None,
        }
    }
}

impl From<bool> for Edge {
    fn from(b: bool) -> Self {
        if b {
            Edge::True
        } else {
            Edge::False
        }
    }
}

/// Edge values a bigraph may carry.
pub trait EdgeValue: Copy + Ord + fmt::Debug {
    fn as_edge(self) -> Edge;
}

impl EdgeValue for Edge {
    fn as_edge(self) -> Edge {
        self
    }
}

impl EdgeValue for bool {
    fn as_edge(self) -> Edge {
        Edge::from(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BigraphError {
    #[error("edge ({0}, {1}) is already defined")]
    EdgeAlreadyDefined(FunLabel, AtomLabel),
    #[error("no such node: {0}")]
    UnknownNode(String),
    #[error("{count} undefined edges exceed the completion limit of {limit}")]
    TooManyUndefined { count: usize, limit: usize },
    #[error("pushout needs edges between nodes added by both legs ({0}, {1})")]
    CrossEdgesRequired(FunLabel, AtomLabel),
    #[error("not an embedding: {0}")]
    NotAnEmbedding(String),
}

/// Bipartite graph with a dense row-major edge matrix.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bigraph<E> {
    left: Vec<FunLabel>,
    right: Vec<AtomLabel>,
    edges: Vec<E>,
}

pub type PartialBigraph = Bigraph<Edge>;
pub type TotalBigraph = Bigraph<bool>;

/// A node of either side, used to specify relabeling orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Fun(FunLabel),
    Atom(AtomLabel),
}

impl<E: EdgeValue> Default for Bigraph<E> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<E: EdgeValue> Bigraph<E> {
    pub fn empty() -> Self {
        Bigraph {
            left: Vec::new(),
            right: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Builds a graph from explicit node lists and an edge function.
    pub fn from_fn(
        left: impl IntoIterator<Item = FunLabel>,
        right: impl IntoIterator<Item = AtomLabel>,
        mut edge: impl FnMut(FunLabel, AtomLabel) -> E,
    ) -> Self {
        let mut left: Vec<_> = left.into_iter().collect();
        let mut right: Vec<_> = right.into_iter().collect();
        left.sort();
        left.dedup();
        right.sort();
        right.dedup();
        let mut edges = Vec::with_capacity(left.len() * right.len());
        for &f in &left {
            for &a in &right {
                edges.push(edge(f, a));
            }
        }
        Bigraph { left, right, edges }
    }

    pub fn left(&self) -> &[FunLabel] {
        &self.left
    }

    pub fn right(&self) -> &[AtomLabel] {
        &self.right
    }

    pub fn has_fun(&self, f: FunLabel) -> bool {
        self.left.binary_search(&f).is_ok()
    }

    pub fn has_atom(&self, a: AtomLabel) -> bool {
        self.right.binary_search(&a).is_ok()
    }

    fn index(&self, f: FunLabel, a: AtomLabel) -> Option<usize> {
        let i = self.left.binary_search(&f).ok()?;
        let j = self.right.binary_search(&a).ok()?;
        Some(i * self.right.len() + j)
    }

    pub fn edge(&self, f: FunLabel, a: AtomLabel) -> Option<E> {
        self.index(f, a).map(|k| self.edges[k])
    }

    /// Next unused function label.
    pub fn next_fun(&self) -> FunLabel {
        FunLabel(self.left.last().map_or(0, |f| f.0 + 1))
    }

    pub fn next_atom(&self) -> AtomLabel {
        AtomLabel(self.right.last().map_or(0, |a| a.0 + 1))
    }

    /// All edges, lexicographically by (function, atom).
    pub fn edges(&self) -> impl Iterator<Item = (FunLabel, AtomLabel, E)> + '_ {
        self.left
            .iter()
            .flat_map(move |&f| self.right.iter().map(move |&a| (f, a)))
            .zip(self.edges.iter())
            .map(|((f, a), &e)| (f, a, e))
    }

    /// Adds a function node whose row is given by `row`.
    pub fn add_fun_with(&self, row: impl Fn(AtomLabel) -> E) -> (Self, FunLabel) {
        let f = self.next_fun();
        let mut g = self.clone();
        g.left.push(f);
        g.edges.extend(self.right.iter().map(|&a| row(a)));
        (g, f)
    }

    /// Adds an atom node whose column is given by `col`.
    pub fn add_atom_with(&self, col: impl Fn(FunLabel) -> E) -> (Self, AtomLabel) {
        let a = self.next_atom();
        let g = Bigraph::from_fn(
            self.left.iter().copied(),
            self.right.iter().copied().chain([a]),
            |f, b| {
                if b == a {
                    col(f)
                } else {
                    self.edge(f, b).expect("existing edge")
                }
            },
        );
        (g, a)
    }

    /// Induced subgraph on the kept nodes (nodes not in the graph are ignored).
    pub fn restrict(
        &self,
        keep_left: &BTreeSet<FunLabel>,
        keep_right: &BTreeSet<AtomLabel>,
    ) -> Self {
        Bigraph::from_fn(
            self.left.iter().copied().filter(|f| keep_left.contains(f)),
            self.right
                .iter()
                .copied()
                .filter(|a| keep_right.contains(a)),
            |f, a| self.edge(f, a).expect("kept edge"),
        )
    }

    /// Applies label maps (identity where a map has no entry). The maps must
    /// be injective on the graph's nodes.
    pub fn relabel(
        &self,
        funs: &BTreeMap<FunLabel, FunLabel>,
        atoms: &BTreeMap<AtomLabel, AtomLabel>,
    ) -> Self {
        let mf = |f: FunLabel| *funs.get(&f).unwrap_or(&f);
        let ma = |a: AtomLabel| *atoms.get(&a).unwrap_or(&a);
        let inv_f: BTreeMap<_, _> = self.left.iter().map(|&f| (mf(f), f)).collect();
        let inv_a: BTreeMap<_, _> = self.right.iter().map(|&a| (ma(a), a)).collect();
        assert_eq!(
            inv_f.len(),
            self.left.len(),
            "function relabeling is not injective"
        );
        assert_eq!(
            inv_a.len(),
            self.right.len(),
            "atom relabeling is not injective"
        );
        Bigraph::from_fn(inv_f.keys().copied(), inv_a.keys().copied(), |f, a| {
            self.edge(inv_f[&f], inv_a[&a]).expect("edge")
        })
    }

    /// Renumbers the nodes listed in `order` (which must be exactly the
    /// nodes outside `base_left`/`base_right`) to consecutive labels after
    /// the base labels, per side, in the given order. Base labels are fixed.
    pub fn canonical_relabel(
        &self,
        base_left: &BTreeSet<FunLabel>,
        base_right: &BTreeSet<AtomLabel>,
        order: &[Node],
    ) -> Self {
        let (funs, atoms) = canonical_maps(base_left, base_right, order);
        debug_assert!(self
            .left
            .iter()
            .all(|f| base_left.contains(f) || funs.contains_key(f)));
        debug_assert!(self
            .right
            .iter()
            .all(|a| base_right.contains(a) || atoms.contains_key(a)));
        self.relabel(&funs, &atoms)
    }
}

/// Label maps sending fresh nodes to consecutive labels after the base.
pub fn canonical_maps(
    base_left: &BTreeSet<FunLabel>,
    base_right: &BTreeSet<AtomLabel>,
    order: &[Node],
) -> (BTreeMap<FunLabel, FunLabel>, BTreeMap<AtomLabel, AtomLabel>) {
    let mut next_f = base_left.iter().next_back().map_or(0, |f| f.0 + 1);
    let mut next_a = base_right.iter().next_back().map_or(0, |a| a.0 + 1);
    let mut funs = BTreeMap::new();
    let mut atoms = BTreeMap::new();
    for node in order {
        match *node {
            Node::Fun(f) => {
                funs.entry(f).or_insert_with(|| {
                    next_f += 1;
                    FunLabel(next_f - 1)
                });
            }
            Node::Atom(a) => {
                atoms.entry(a).or_insert_with(|| {
                    next_a += 1;
                    AtomLabel(next_a - 1)
                });
            }
        }
    }
    (funs, atoms)
}

impl PartialBigraph {
    /// New atom with undefined edges to every existing function.
    pub fn add_right_undef(&self) -> (Self, AtomLabel) {
        self.add_atom_with(|_| Edge::Undef)
    }

    /// New function with undefined edges to every existing atom.
    pub fn add_left_undef(&self) -> (Self, FunLabel) {
        self.add_fun_with(|_| Edge::Undef)
    }

    pub fn set_edge(&self, f: FunLabel, a: AtomLabel, b: bool) -> Result<Self, BigraphError> {
        let k = self
            .index(f, a)
            .ok_or_else(|| BigraphError::UnknownNode(format!("({f}, {a})")))?;
        if self.edges[k] != Edge::Undef {
            return Err(BigraphError::EdgeAlreadyDefined(f, a));
        }
        let mut g = self.clone();
        g.edges[k] = Edge::from(b);
        Ok(g)
    }

    pub fn undefined_pairs(&self) -> Vec<(FunLabel, AtomLabel)> {
        self.edges()
            .filter(|(_, _, e)| *e == Edge::Undef)
            .map(|(f, a, _)| (f, a))
            .collect()
    }

    pub fn to_total(&self) -> Option<TotalBigraph> {
        let edges = self
            .edges
            .iter()
            .map(|e| e.known())
            .collect::<Option<Vec<_>>>()?;
        Some(Bigraph {
            left: self.left.clone(),
            right: self.right.clone(),
            edges,
        })
    }

    /// Fills the undefined edges from `assignment` (which must cover them).
    pub fn complete_with(
        &self,
        assignment: &BTreeMap<(FunLabel, AtomLabel), bool>,
    ) -> TotalBigraph {
        Bigraph::from_fn(
            self.left.iter().copied(),
            self.right.iter().copied(),
            |f, a| match self.edge(f, a).expect("edge") {
                Edge::Undef => assignment[&(f, a)],
                e => e.known().expect("defined"),
            },
        )
    }

    /// Every total extension, paired with its assignment of the undefined
    /// edges, in binary counting order over [`Self::undefined_pairs`].
    #[allow(clippy::type_complexity)]
    pub fn completions(
        &self,
        limit: usize,
    ) -> Result<Vec<(TotalBigraph, BTreeMap<(FunLabel, AtomLabel), bool>)>, BigraphError> {
        let undef = self.undefined_pairs();
        if undef.len() > limit {
            return Err(BigraphError::TooManyUndefined {
                count: undef.len(),
                limit,
            });
        }
        let mut out = Vec::with_capacity(1 << undef.len());
        for bits in 0u64..(1u64 << undef.len()) {
            let assignment: BTreeMap<_, _> = undef
                .iter()
                .enumerate()
                .map(|(i, &p)| (p, bits >> i & 1 == 1))
                .collect();
            out.push((self.complete_with(&assignment), assignment));
        }
        Ok(out)
    }
}

impl TotalBigraph {
    pub fn to_partial(&self) -> PartialBigraph {
        Bigraph {
            left: self.left.clone(),
            right: self.right.clone(),
            edges: self.edges.iter().map(|&b| Edge::from(b)).collect(),
        }
    }

    /// Whether `self` is an edge-consistent restriction of `other` on
    /// shared labels (every node of `self` exists in `other`).
    pub fn is_subgraph_of(&self, other: &TotalBigraph) -> bool {
        self.left.iter().all(|&f| other.has_fun(f))
            && self.right.iter().all(|&a| other.has_atom(a))
            && self.edges().all(|(f, a, e)| other.edge(f, a) == Some(e))
    }
}

/// A pair of label injections between total bigraphs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Embedding {
    pub left: BTreeMap<FunLabel, FunLabel>,
    pub right: BTreeMap<AtomLabel, AtomLabel>,
}

impl Embedding {
    pub fn identity<E: EdgeValue>(g: &Bigraph<E>) -> Self {
        Embedding {
            left: g.left.iter().map(|&f| (f, f)).collect(),
            right: g.right.iter().map(|&a| (a, a)).collect(),
        }
    }

    /// Label-preserving inclusion of `g` (into any graph containing it).
    pub fn inclusion<E: EdgeValue>(g: &Bigraph<E>) -> Self {
        Self::identity(g)
    }

    pub fn fun(&self, f: FunLabel) -> FunLabel {
        self.left[&f]
    }

    pub fn atom(&self, a: AtomLabel) -> AtomLabel {
        self.right[&a]
    }

    /// Injective, defined on every node of `src`, landing in `tgt`, and
    /// neither adding nor removing edges.
    pub fn is_embedding(&self, src: &TotalBigraph, tgt: &TotalBigraph) -> bool {
        let left_ok = src
            .left
            .iter()
            .all(|f| self.left.get(f).is_some_and(|g| tgt.has_fun(*g)));
        let right_ok = src
            .right
            .iter()
            .all(|a| self.right.get(a).is_some_and(|b| tgt.has_atom(*b)));
        if !(left_ok && right_ok) {
            return false;
        }
        let inj_l: BTreeSet<_> = src.left.iter().map(|f| self.left[f]).collect();
        let inj_r: BTreeSet<_> = src.right.iter().map(|a| self.right[a]).collect();
        inj_l.len() == src.left.len()
            && inj_r.len() == src.right.len()
            && src
                .edges()
                .all(|(f, a, e)| tgt.edge(self.left[&f], self.right[&a]) == Some(e))
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Embedding) -> Embedding {
        Embedding {
            left: self.left.iter().map(|(&f, g)| (f, other.left[g])).collect(),
            right: self
                .right
                .iter()
                .map(|(&a, b)| (a, other.right[b]))
                .collect(),
        }
    }
}

/// Pushout of `h ← g → g2` along embeddings `into_h` and `into_g2`.
///
/// The result extends `g2` with the nodes of `h` outside the image of `g`,
/// labeled after `g2`'s labels. Edges between a node added by `h` and a node
/// added by `g2` are not determined by either leg; when such a pair exists
/// the construction fails with [`BigraphError::CrossEdgesRequired`].
pub fn pushout(
    g: &TotalBigraph,
    h: &TotalBigraph,
    into_h: &Embedding,
    g2: &TotalBigraph,
    into_g2: &Embedding,
) -> Result<(TotalBigraph, Embedding, Embedding), BigraphError> {
    if !into_h.is_embedding(g, h) {
        return Err(BigraphError::NotAnEmbedding("g -> h".into()));
    }
    if !into_g2.is_embedding(g, g2) {
        return Err(BigraphError::NotAnEmbedding("g -> g2".into()));
    }
    let image_h_l: BTreeSet<_> = into_h.left.values().copied().collect();
    let image_h_r: BTreeSet<_> = into_h.right.values().copied().collect();
    let image_g2_l: BTreeSet<_> = into_g2.left.values().copied().collect();
    let image_g2_r: BTreeSet<_> = into_g2.right.values().copied().collect();

    // h-node -> pushout node
    let mut from_h = Embedding::default();
    for (&x, &hx) in &into_h.left {
        from_h.left.insert(hx, into_g2.left[&x]);
    }
    for (&x, &hx) in &into_h.right {
        from_h.right.insert(hx, into_g2.right[&x]);
    }
    let mut next_f = g2.next_fun().0;
    for &f in h.left.iter().filter(|f| !image_h_l.contains(f)) {
        from_h.left.insert(f, FunLabel(next_f));
        next_f += 1;
    }
    let mut next_a = g2.next_atom().0;
    for &a in h.right.iter().filter(|a| !image_h_r.contains(a)) {
        from_h.right.insert(a, AtomLabel(next_a));
        next_a += 1;
    }
    let inv_h_l: BTreeMap<_, _> = from_h.left.iter().map(|(&k, &v)| (v, k)).collect();
    let inv_h_r: BTreeMap<_, _> = from_h.right.iter().map(|(&k, &v)| (v, k)).collect();
    let g2_fresh_l = |f: FunLabel| g2.has_fun(f) && !image_g2_l.contains(&f);
    let g2_fresh_r = |a: AtomLabel| g2.has_atom(a) && !image_g2_r.contains(&a);

    let left: Vec<_> = g2
        .left
        .iter()
        .copied()
        .chain(inv_h_l.keys().copied())
        .collect();
    let right: Vec<_> = g2
        .right
        .iter()
        .copied()
        .chain(inv_h_r.keys().copied())
        .collect();
    let mut cross = None;
    let p = Bigraph::from_fn(left, right, |f, a| {
        if let Some(e) = g2.edge(f, a) {
            return e;
        }
        if let (Some(&hf), Some(&ha)) = (inv_h_l.get(&f), inv_h_r.get(&a)) {
            return h.edge(hf, ha).expect("h edge");
        }
        debug_assert!(g2_fresh_l(f) || g2_fresh_r(a));
        cross.get_or_insert((f, a));
        false
    });
    if let Some((f, a)) = cross {
        return Err(BigraphError::CrossEdgesRequired(f, a));
    }
    let from_g2 = Embedding::identity(g2);
    Ok((p, from_h, from_g2))
}

fn edge_name(e: Edge) -> &'static str {
    match e {
        Edge::True => "true",
        Edge::False => "false",
        Edge::Undef => "undef",
    }
}

impl<E: EdgeValue> Serialize for Bigraph<E> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Edges<'a, E>(&'a Bigraph<E>);
        impl<E: EdgeValue> Serialize for Edges<'_, E> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.edges.len()))?;
                for (f, a, e) in self.0.edges() {
                    seq.serialize_element(&(f.0, a.0, edge_name(e.as_edge())))?;
                }
                seq.end()
            }
        }
        let mut st = s.serialize_struct("Bigraph", 3)?;
        st.serialize_field("left", &self.left.iter().map(|f| f.0).collect::<Vec<_>>())?;
        st.serialize_field("right", &self.right.iter().map(|a| a.0).collect::<Vec<_>>())?;
        st.serialize_field("edges", &Edges(self))?;
        st.end()
    }
}

impl<E: EdgeValue> fmt::Display for Bigraph<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fs: Vec<_> = self.left.iter().map(|x| x.to_string()).collect();
        let atoms: Vec<_> = self.right.iter().map(|x| x.to_string()).collect();
        let es: Vec<_> = self
            .edges()
            .map(|(l, r, e)| {
                let tag = match e.as_edge() {
                    Edge::True => "T",
                    Edge::False => "F",
                    Edge::Undef => "⊥",
                };
                format!("{l}-{tag}->{r}")
            })
            .collect();
        write!(
            f,
            "({{{}}}, {{{}}}, {{{}}})",
            fs.join(", "),
            atoms.join(", "),
            es.join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fl(n: u32) -> FunLabel {
        FunLabel(n)
    }
    fn al(n: u32) -> AtomLabel {
        AtomLabel(n)
    }

    #[test]
    fn empty_graph() {
        let g = PartialBigraph::empty();
        assert!(g.left().is_empty() && g.right().is_empty());
        assert!(g.undefined_pairs().is_empty());
    }

    #[test]
    fn add_nodes_with_undefined_edges() {
        let (g, a0) = PartialBigraph::empty().add_right_undef();
        assert_eq!(a0, al(0));
        assert_eq!(g.right(), &[al(0)]);
        assert!(g.undefined_pairs().is_empty());
        let (g, f1) = g.add_left_undef();
        let (g, f2) = g.add_left_undef();
        assert_ne!(f1, f2);
        assert_eq!(g.undefined_pairs(), vec![(f1, a0), (f2, a0)]);
        let (g2, a1) = g.add_right_undef();
        assert_ne!(a0, a1);
        assert_eq!(g2.undefined_pairs().len(), 4);
        let (_, f) = PartialBigraph::empty().add_left_undef();
        assert_eq!(f, fl(0));
    }

    #[test]
    fn set_edge_once() {
        let (g, a) = PartialBigraph::empty().add_right_undef();
        let (g, f) = g.add_left_undef();
        let g = g.set_edge(f, a, true).unwrap();
        assert_eq!(g.edge(f, a), Some(Edge::True));
        assert_eq!(
            g.set_edge(f, a, false),
            Err(BigraphError::EdgeAlreadyDefined(f, a))
        );
        assert!(g.undefined_pairs().is_empty());
        assert!(g.to_total().is_some());
    }

    #[test]
    fn completions_enumerate_all_assignments() {
        let (g, _) = PartialBigraph::empty().add_right_undef();
        let (g, _) = g.add_left_undef();
        let (g, _) = g.add_left_undef();
        let all = g.completions(20).unwrap();
        assert_eq!(all.len(), 4);
        let distinct: BTreeSet<_> = all.iter().map(|(t, _)| t.clone()).collect();
        assert_eq!(distinct.len(), 4);
        let total = all[0].0.clone();
        assert_eq!(total.to_partial().completions(20).unwrap().len(), 1);
        assert!(matches!(
            g.completions(1),
            Err(BigraphError::TooManyUndefined { count: 2, limit: 1 })
        ));
    }

    #[test]
    fn restrict_drops_rows() {
        let g = TotalBigraph::from_fn([fl(0), fl(1)], [al(0), al(1)], |f, a| f.0 == a.0);
        let all_l: BTreeSet<_> = g.left().iter().copied().collect();
        let all_r: BTreeSet<_> = g.right().iter().copied().collect();
        assert_eq!(g.restrict(&all_l, &all_r), g);
        assert_eq!(
            g.restrict(&BTreeSet::new(), &BTreeSet::new()),
            TotalBigraph::empty()
        );
        let only_f1: BTreeSet<_> = [fl(1)].into();
        let r = g.restrict(&only_f1, &all_r);
        assert_eq!(r.left(), &[fl(1)]);
        assert_eq!(r.edges().count(), 2);
        assert_eq!(r.edge(fl(1), al(1)), Some(true));
    }

    #[test]
    fn canonical_relabel_orders_fresh_nodes() {
        let g = TotalBigraph::from_fn([], [al(17)], |_, _| false);
        let c = g.canonical_relabel(&BTreeSet::new(), &BTreeSet::new(), &[Node::Atom(al(17))]);
        assert_eq!(c.right(), &[al(0)]);
        let g = TotalBigraph::from_fn([fl(0)], [al(3), al(5)], |_, a| a.0 == 3);
        let base_l: BTreeSet<_> = [fl(0)].into();
        let a = g.canonical_relabel(
            &base_l,
            &BTreeSet::new(),
            &[Node::Atom(al(3)), Node::Atom(al(5))],
        );
        let b = g.canonical_relabel(
            &base_l,
            &BTreeSet::new(),
            &[Node::Atom(al(5)), Node::Atom(al(3))],
        );
        assert_eq!(a.edge(fl(0), al(0)), Some(true));
        assert_eq!(b.edge(fl(0), al(1)), Some(true));
        let mut ea: Vec<_> = a.edges().map(|(_, _, e)| e).collect();
        let mut eb: Vec<_> = b.edges().map(|(_, _, e)| e).collect();
        ea.sort();
        eb.sort();
        assert_eq!(ea, eb);
        assert_eq!(
            g.canonical_relabel(&base_l, &g.right().iter().copied().collect(), &[]),
            g
        );
    }

    #[test]
    fn pushout_identity_and_disjoint() {
        let g = TotalBigraph::from_fn([fl(0)], [al(0)], |_, _| true);
        let id = Embedding::identity(&g);
        let (p, l, r) = pushout(&g, &g, &id, &g, &id).unwrap();
        assert_eq!(p, g);
        assert!(l.is_embedding(&g, &p) && r.is_embedding(&g, &p));

        let empty = TotalBigraph::empty();
        let one = TotalBigraph::from_fn([], [al(0)], |_, _| false);
        let e = Embedding::default();
        let (p, l, r) = pushout(&empty, &one, &e, &one, &e).unwrap();
        assert_eq!(p.right().len(), 2);
        assert!(l.is_embedding(&one, &p) && r.is_embedding(&one, &p));
    }

    #[test]
    fn pushout_keeps_both_extensions() {
        // g = one function; h adds an atom with edge T, g2 adds an atom with edge F
        let g = TotalBigraph::from_fn([fl(0)], [], |_, _| false);
        let h = TotalBigraph::from_fn([fl(0)], [al(0)], |_, _| true);
        let g2 = TotalBigraph::from_fn([fl(0)], [al(0)], |_, _| false);
        let inc = Embedding::inclusion(&g);
        let (p, from_h, from_g2) = pushout(&g, &h, &inc, &g2, &inc).unwrap();
        assert_eq!(p.left().len(), 1);
        assert_eq!(p.right().len(), 2);
        assert_eq!(p.edge(fl(0), from_h.atom(al(0))), Some(true));
        assert_eq!(p.edge(fl(0), from_g2.atom(al(0))), Some(false));
        assert!(from_h.is_embedding(&h, &p));
        assert!(from_g2.is_embedding(&g2, &p));
    }

    #[test]
    fn pushout_rejects_undetermined_cross_edges() {
        let g = TotalBigraph::empty();
        let h = TotalBigraph::from_fn([fl(0)], [], |_, _| false);
        let g2 = TotalBigraph::from_fn([], [al(0)], |_, _| false);
        let e = Embedding::default();
        assert!(matches!(
            pushout(&g, &h, &e, &g2, &e),
            Err(BigraphError::CrossEdgesRequired(..))
        ));
    }

    #[test]
    fn json_shape() {
        let (g, _) = PartialBigraph::empty().add_right_undef();
        let (g, _) = g.add_left_undef();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"left":[0],"right":[0],"edges":[[0,0,"undef"]]}"#);
    }
}
