//! Finitely supported probability distributions.

use std::collections::btree_map;
use std::collections::BTreeMap;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Weight;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("weights sum to {total}, not 1")]
pub struct MassError {
    pub total: String,
}

/// A normalized distribution: positive weights summing to one, keys sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinDist<T: Ord, W> {
    weights: BTreeMap<T, W>,
}

/// Accumulates weighted outcomes, merging equal keys.
struct Acc<T: Ord, W>(BTreeMap<T, W>);

impl<T: Ord, W: Weight> Acc<T, W> {
    fn new() -> Self {
        Acc(BTreeMap::new())
    }

    fn add(&mut self, x: T, w: W) {
        if w.is_zero() {
            return;
        }
        match self.0.entry(x) {
            btree_map::Entry::Vacant(e) => {
                e.insert(w);
            }
            btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + w;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn finish(self) -> FinDist<T, W> {
        let d = FinDist { weights: self.0 };
        debug_assert!(d.mass().is_unit_mass(), "mass {:?}", d.mass());
        d
    }
}

impl<T: Ord, W: Weight> FinDist<T, W> {
    /// Point mass.
    pub fn dirac(x: T) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(x, W::one());
        FinDist { weights }
    }

    /// Builds a distribution from weighted outcomes, merging equal keys and
    /// dropping zero weights. Fails unless the weights sum to one.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, W)>) -> Result<Self, MassError> {
        let mut acc = Acc::new();
        for (x, w) in pairs {
            acc.add(x, w);
        }
        let d = FinDist { weights: acc.0 };
        let total = d.mass();
        if total.is_unit_mass() {
            Ok(d)
        } else {
            Err(MassError {
                total: total.render(),
            })
        }
    }

    /// Convex combination; branch weights must sum to one.
    pub fn weighted_mix(
        branches: impl IntoIterator<Item = (W, FinDist<T, W>)>,
    ) -> Result<Self, MassError>
    where
        T: Clone,
    {
        let mut acc = Acc::new();
        let mut total = W::zero();
        for (w, d) in branches {
            total = total + w.clone();
            for (x, p) in d.weights {
                acc.add(x, w.clone() * p);
            }
        }
        if !total.is_unit_mass() {
            return Err(MassError {
                total: total.render(),
            });
        }
        Ok(acc.finish())
    }

    /// Pushforward along `f`.
    pub fn map<U: Ord>(&self, mut f: impl FnMut(&T) -> U) -> FinDist<U, W> {
        let mut acc = Acc::new();
        for (x, w) in &self.weights {
            acc.add(f(x), w.clone());
        }
        acc.finish()
    }

    /// Kleisli extension: `Σ_t d(t) · k(t)`.
    pub fn bind<U: Ord>(&self, mut k: impl FnMut(&T) -> FinDist<U, W>) -> FinDist<U, W> {
        let mut acc = Acc::new();
        for (x, w) in &self.weights {
            for (y, p) in k(x).weights {
                acc.add(y, w.clone() * p);
            }
        }
        acc.finish()
    }

    /// [`Self::bind`] with a fallible continuation.
    pub fn try_bind<U: Ord, E>(
        &self,
        mut k: impl FnMut(&T) -> Result<FinDist<U, W>, E>,
    ) -> Result<FinDist<U, W>, E> {
        let mut acc = Acc::new();
        for (x, w) in &self.weights {
            for (y, p) in k(x)?.weights {
                acc.add(y, w.clone() * p);
            }
        }
        Ok(acc.finish())
    }

    pub fn prob(&self, x: &T) -> W {
        self.weights.get(x).cloned().unwrap_or_else(W::zero)
    }

    pub fn mass(&self) -> W {
        self.weights.values().fold(W::zero(), |a, w| a + w.clone())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.weights.contains_key(x)
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &W)> {
        self.weights.iter()
    }

    /// Converts weights to another scalar (e.g. exact to float).
    pub fn convert<V: Weight>(&self, f: impl Fn(&W) -> V) -> FinDist<T, V>
    where
        T: Clone,
    {
        FinDist {
            weights: self
                .weights
                .iter()
                .map(|(x, w)| (x.clone(), f(w)))
                .collect(),
        }
    }
}

impl<W: Weight> FinDist<bool, W> {
    /// Bernoulli distribution on booleans.
    pub fn bernoulli(p: W) -> Self {
        let q = W::one() - p.clone();
        FinDist::from_pairs([(true, p), (false, q)]).expect("bernoulli mass")
    }
}

impl<T: Ord> FinDist<T, f64> {
    /// Empirical distribution of a non-empty sample.
    pub fn empirical(samples: impl IntoIterator<Item = T>) -> Self {
        let mut counts: BTreeMap<T, u64> = BTreeMap::new();
        let mut n = 0u64;
        for s in samples {
            *counts.entry(s).or_default() += 1;
            n += 1;
        }
        assert!(n > 0, "empirical distribution of an empty sample");
        FinDist {
            weights: counts
                .into_iter()
                .map(|(x, c)| (x, c as f64 / n as f64))
                .collect(),
        }
    }
}

/// Exact equality of support and weights.
pub fn dist_eq<T: Ord, W: Weight>(a: &FinDist<T, W>, b: &FinDist<T, W>) -> bool {
    a.weights.len() == b.weights.len()
        && a.weights
            .iter()
            .zip(&b.weights)
            .all(|((x, p), (y, q))| x == y && p == q)
}

impl<T: Ord + Serialize, W: Weight> Serialize for FinDist<T, W> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Entry<'a, T, W>(&'a T, &'a W);
        impl<T: Serialize, W: Weight> Serialize for Entry<'_, T, W> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("value", self.0)?;
                m.serialize_entry("prob", &self.1.render())?;
                m.end()
            }
        }
        let mut seq = s.serialize_seq(Some(self.weights.len()))?;
        for (x, w) in &self.weights {
            seq.serialize_element(&Entry(x, w))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ratio, ExactDist, Prob};
    use proptest::prelude::*;

    fn d<T: Ord + Clone>(pairs: &[(T, (i64, i64))]) -> ExactDist<T> {
        FinDist::from_pairs(pairs.iter().map(|(x, (p, q))| (x.clone(), ratio(*p, *q)))).unwrap()
    }

    #[test]
    fn dirac_is_point_mass() {
        assert_eq!(ExactDist::dirac(true).prob(&true), ratio(1, 1));
        assert_eq!(ExactDist::dirac(7).len(), 1);
        let p = ExactDist::dirac(("a", "b"));
        assert_eq!(p.prob(&("a", "b")), ratio(1, 1));
    }

    #[test]
    fn weighted_mix_examples() {
        let half = ratio(1, 2);
        let m = FinDist::weighted_mix([
            (half.clone(), ExactDist::dirac(true)),
            (half, ExactDist::dirac(false)),
        ])
        .unwrap();
        assert!(dist_eq(&m, &d(&[(true, (1, 2)), (false, (1, 2))])));
        let m = FinDist::weighted_mix([(ratio(1, 1), ExactDist::dirac(true))]).unwrap();
        assert!(dist_eq(&m, &ExactDist::dirac(true)));
        let m = FinDist::weighted_mix([
            (ratio(1, 3), ExactDist::dirac(true)),
            (ratio(2, 3), ExactDist::dirac(true)),
        ])
        .unwrap();
        assert!(dist_eq(&m, &ExactDist::dirac(true)));
        let bad = FinDist::weighted_mix([(ratio(1, 3), ExactDist::dirac(true))]);
        assert!(bad.is_err());
    }

    #[test]
    fn map_examples() {
        let coin = d(&[(true, (1, 2)), (false, (1, 2))]);
        assert!(dist_eq(&coin.map(|b| !b), &coin));
        assert!(dist_eq(&coin.map(|_| 0), &ExactDist::dirac(0)));
        let m = d(&[(1, (1, 3)), (2, (2, 3))]).map(|x| x + 1);
        assert!(dist_eq(&m, &d(&[(2, (1, 3)), (3, (2, 3))])));
    }

    #[test]
    fn bind_examples() {
        let coin = d(&[(true, (1, 2)), (false, (1, 2))]);
        assert!(dist_eq(&coin.bind(|&b| ExactDist::dirac(b)), &coin));
        let k = |&i: &i32| d(&[(i, (1, 2)), (i + 1, (1, 2))]);
        assert!(dist_eq(&ExactDist::dirac(4).bind(k), &k(&4)));
        // oracle: enumerate the four paths explicitly
        let mut paths: BTreeMap<i32, Prob> = BTreeMap::new();
        for i in [0, 1] {
            for j in [0, 1] {
                *paths.entry(i + j).or_insert_with(|| ratio(0, 1)) += ratio(1, 4);
            }
        }
        let expected = FinDist::from_pairs(paths).unwrap();
        let got = d(&[(0, (1, 2)), (1, (1, 2))]).bind(k);
        assert!(dist_eq(&got, &expected));
        assert_eq!(got.prob(&1), ratio(1, 2));
    }

    #[test]
    fn dist_eq_examples() {
        let a = d(&[(true, (1, 2)), (false, (1, 2))]);
        let b = d(&[(false, (1, 2)), (true, (1, 2))]);
        assert!(dist_eq(&a, &b));
        assert!(!dist_eq(&ExactDist::dirac(true), &a));
    }

    #[test]
    fn generic_over_scalars() {
        let f: FinDist<bool, f64> = FinDist::<bool, f64>::bernoulli(0.25);
        assert!((f.prob(&true) - 0.25).abs() < 1e-12);
        let r: FinDist<bool, num_rational::Ratio<i64>> =
            FinDist::<bool, num_rational::Ratio<i64>>::bernoulli(num_rational::Ratio::new(1, 3));
        assert!(r.mass().is_unit_mass());
        let e = FinDist::empirical([true, true, false, true]);
        assert!((e.prob(&true) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn json_is_sorted_with_exact_strings() {
        let coin = d(&[(true, (1, 3)), (false, (2, 3))]);
        let s = serde_json::to_string(&coin).unwrap();
        assert_eq!(
            s,
            r#"[{"value":false,"prob":"2/3"},{"value":true,"prob":"1/3"}]"#
        );
    }

    fn arb_dist() -> impl Strategy<Value = ExactDist<u8>> {
        prop::collection::vec((0u8..6, 1i64..10), 1..5).prop_map(|ws| {
            let total: i64 = ws.iter().map(|(_, w)| w).sum();
            FinDist::from_pairs(ws.into_iter().map(|(x, w)| (x, ratio(w, total)))).unwrap()
        })
    }

    fn kleisli(seed: u8) -> impl Fn(&u8) -> ExactDist<u8> {
        move |&x| {
            let a = x.wrapping_mul(seed) % 7;
            let b = (x + seed) % 5;
            FinDist::from_pairs([(a, ratio(1, 3)), (b, ratio(2, 3))]).unwrap()
        }
    }

    proptest! {
        #[test]
        fn monad_laws(m in arb_dist(), x in 0u8..6, s1 in 1u8..9, s2 in 1u8..9) {
            let k = kleisli(s1);
            let l = kleisli(s2);
            prop_assert!(dist_eq(&ExactDist::dirac(x).bind(&k), &k(&x)));
            prop_assert!(dist_eq(&m.bind(|&y| ExactDist::dirac(y)), &m));
            let left = m.bind(&k).bind(&l);
            let right = m.bind(|y| k(y).bind(&l));
            prop_assert!(dist_eq(&left, &right));
            prop_assert!(left.mass().is_unit_mass());
        }

        #[test]
        fn mix_is_order_invariant(a in arb_dist(), b in arb_dist(), w in 0i64..=10) {
            let p = ratio(w, 10);
            let q = ratio(10 - w, 10);
            let ab = FinDist::weighted_mix([(p.clone(), a.clone()), (q.clone(), b.clone())]).unwrap();
            let ba = FinDist::weighted_mix([(q, b), (p, a)]).unwrap();
            prop_assert!(dist_eq(&ab, &ba));
            prop_assert!(ab.mass().is_unit_mass());
        }
    }
}
