//! Observations of terminal configurations: the returned value together with
//! the part of the memo table and the closures reachable from it, with
//! labels renumbered canonically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{
    enumerate_bigstep, eval_value, step_outcome, Configuration, EnvValue, Ext, OpsemError, Outcome,
};
use crate::bigraph::{canonical_maps, Node, PartialBigraph};
use crate::syntax::{fresh_name, pretty, Comp, Ident, Val};
use crate::{ExactDist, FinDist};

/// A retained closure: canonically named body and the values of its free
/// names in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClosureObs {
    pub body: Comp,
    pub args: Vec<EnvValue>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observation {
    pub value: EnvValue,
    pub graph: PartialBigraph,
    /// Indexed by canonical function label.
    pub closures: Vec<ClosureObs>,
}

impl Serialize for ClosureObs {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ClosureObs", 2)?;
        st.serialize_field(
            "fn",
            &pretty(&Comp::MemFn(Ident::new("b0"), Box::new(self.body.clone()))),
        )?;
        st.serialize_field("args", &self.args)?;
        st.end()
    }
}

impl Serialize for Observation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Observation", 3)?;
        st.serialize_field("value", &self.value)?;
        st.serialize_field("graph", &self.graph)?;
        st.serialize_field("closures", &self.closures)?;
        st.end()
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        if self.graph.left().is_empty() && self.graph.right().is_empty() {
            return Ok(());
        }
        write!(f, " in {}", self.graph)?;
        for (i, c) in self.closures.iter().enumerate() {
            let body = pretty(&Comp::MemFn(Ident::new("b0"), Box::new(c.body.clone())));
            let args: Vec<_> = c.args.iter().map(|a| a.to_string()).collect();
            write!(f, "; fun{i} = {body} [{}]", args.join(", "))?;
        }
        Ok(())
    }
}

/// Brings a terminal `fresh()` or `memfn` to the form `return r`.
fn settle(c: &Configuration) -> Result<Configuration, OpsemError> {
    let Ext::Plain(t @ (Comp::Fresh | Comp::MemFn(..))) = &c.term else {
        return Ok(c.clone());
    };
    let mut used: BTreeSet<Ident> = c.env.keys().cloned().collect();
    used.extend(t.all_idents());
    let r = fresh_name(&Ident::new("r"), &mut used);
    let wrapped = Configuration {
        term: Ext::Plain(Comp::Let(
            r.clone(),
            Box::new(t.clone()),
            Box::new(Comp::Return(Val::Var(r))),
        )),
        ..c.clone()
    };
    match step_outcome(&wrapped)? {
        Outcome::Det(next) => Ok(next),
        Outcome::Flip { .. } => unreachable!("allocation is deterministic"),
    }
}

pub fn observe(c: &Configuration) -> Result<Observation, OpsemError> {
    let c = settle(c)?;
    let Ext::Plain(Comp::Return(v)) = &c.term else {
        return Err(OpsemError::Stuck(format!("`{}` is not terminal", c.term)));
    };
    let value = eval_value(&c.env, v)?;

    let mut order = Vec::new();
    value.nodes(&mut order);
    let mut canon_bodies = BTreeMap::new();
    let mut i = 0;
    while i < order.len() {
        if let Node::Fun(f) = order[i] {
            if let std::collections::btree_map::Entry::Vacant(slot) = canon_bodies.entry(f) {
                let cl = c.closures.get(&f).ok_or_else(|| {
                    OpsemError::MalformedConfiguration(format!("no closure for {f}"))
                })?;
                let (body, free) = cl.body.canonical_form(&cl.binder);
                let args = free
                    .iter()
                    .map(|x| {
                        cl.captured
                            .get(x)
                            .cloned()
                            .ok_or_else(|| OpsemError::UnboundVariable(x.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                for a in &args {
                    a.nodes(&mut order);
                }
                slot.insert((body, args));
            }
        }
        i += 1;
    }
    let keep_l: BTreeSet<_> = order
        .iter()
        .filter_map(|n| if let Node::Fun(f) = n { Some(*f) } else { None })
        .collect();
    let keep_r: BTreeSet<_> = order
        .iter()
        .filter_map(|n| {
            if let Node::Atom(a) = n {
                Some(*a)
            } else {
                None
            }
        })
        .collect();
    let (funs, atoms) = canonical_maps(&BTreeSet::new(), &BTreeSet::new(), &order);
    let graph = c.graph.restrict(&keep_l, &keep_r).relabel(&funs, &atoms);
    let mut closures: Vec<_> = canon_bodies
        .into_iter()
        .map(|(f, (body, args))| {
            let args = args.iter().map(|a| a.relabel(&funs, &atoms)).collect();
            (funs[&f], ClosureObs { body, args })
        })
        .collect();
    closures.sort_by_key(|(f, _)| *f);
    Ok(Observation {
        value: value.relabel(&funs, &atoms),
        graph,
        closures: closures.into_iter().map(|(_, o)| o).collect(),
    })
}

/// Big-step semantics pushed forward along [`observe`].
pub fn observational_bigstep(p: &Comp) -> Result<ExactDist<Observation>, OpsemError> {
    let d = enumerate_bigstep(p)?;
    let mut pairs = Vec::with_capacity(d.len());
    for (c, w) in d.iter() {
        pairs.push((observe(c)?, w.clone()));
    }
    Ok(FinDist::from_pairs(pairs).expect("observation preserves mass"))
}
