//! Finite preorders used as forcing notions.
//!
//! Conditions are numbered `0..n`; the order relation is stored as its
//! reflexive-transitive closure, once as "everything below c" and once as
//! "everything above c". Smaller means stronger. Equivalent conditions
//! (`c ≤ d ≤ c`) are kept apart; no quotient is taken.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::bitset::CondSet;
use crate::error::{Error, Result};

/// The token that always denotes the weakest condition.
pub const TOP_TOKEN: &str = "1";

/// Index of a condition in its preorder.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cond(pub u32);

impl Cond {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct Preorder {
    ids: Vec<String>,
    index: HashMap<String, Cond>,
    top: Cond,
    below: Vec<CondSet>,
    above: Vec<CondSet>,
}

impl Preorder {
    /// Builds a preorder from condition ids and generating pairs `(a, b)`
    /// meaning `a ≤ b`. The closure is computed here; `1` must be a top.
    pub fn new(ids: Vec<String>, generators: &[(String, String)]) -> Result<Self> {
        let n = ids.len();
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), Cond(i as u32)).is_some() {
                return Err(Error::validation(
                    "unique condition ids",
                    format!("condition `{id}` declared twice"),
                ));
            }
        }
        let top = *index.get(TOP_TOKEN).ok_or_else(|| {
            Error::validation("top element", "condition `1` is not declared")
        })?;
        let mut pairs = Vec::with_capacity(generators.len());
        for (a, b) in generators {
            let a = *index.get(a).ok_or_else(|| Error::UnknownCondition(a.clone()))?;
            let b = *index.get(b).ok_or_else(|| Error::UnknownCondition(b.clone()))?;
            pairs.push((a, b));
        }
        Self::from_pairs(ids, index, top, &pairs)
    }

    /// Builds a preorder directly from a closed or unclosed relation over
    /// numbered conditions; used by the family builders.
    pub fn from_relation(ids: Vec<String>, pairs: &[(Cond, Cond)]) -> Result<Self> {
        let index: HashMap<String, Cond> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), Cond(i as u32)))
            .collect();
        if index.len() != ids.len() {
            return Err(Error::validation("unique condition ids", "duplicate id"));
        }
        let top = *index.get(TOP_TOKEN).ok_or_else(|| {
            Error::validation("top element", "condition `1` is not declared")
        })?;
        Self::from_pairs(ids, index, top, pairs)
    }

    fn from_pairs(
        ids: Vec<String>,
        index: HashMap<String, Cond>,
        top: Cond,
        pairs: &[(Cond, Cond)],
    ) -> Result<Self> {
        let n = ids.len();
        // above[a] = { b : a ≤ b }, closed by propagating along successors.
        let mut succ: Vec<Vec<Cond>> = vec![Vec::new(); n];
        for &(a, b) in pairs {
            succ[a.index()].push(b);
        }
        let mut above = Vec::with_capacity(n);
        for a in 0..n {
            let mut set = CondSet::empty(n);
            let mut stack = vec![Cond(a as u32)];
            while let Some(c) = stack.pop() {
                if set.contains(c) {
                    continue;
                }
                set.insert(c);
                stack.extend(succ[c.index()].iter().copied());
            }
            above.push(set);
        }
        let mut below = vec![CondSet::empty(n); n];
        for (a, up) in above.iter().enumerate() {
            for b in up.iter() {
                below[b.index()].insert(Cond(a as u32));
            }
        }
        let order = Preorder {
            ids,
            index,
            top,
            below,
            above,
        };
        if let Some(c) = order.conditions().find(|&c| !order.leq(c, top)) {
            return Err(Error::validation(
                "top element",
                format!("condition `{}` is not below 1", order.id(c)),
            ));
        }
        Ok(order)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn top(&self) -> Cond {
        self.top
    }

    pub fn id(&self, c: Cond) -> &str {
        &self.ids[c.index()]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn conditions(&self) -> impl Iterator<Item = Cond> {
        (0..self.ids.len() as u32).map(Cond)
    }

    /// Resolves a condition token. `root` is accepted as an alias for the top
    /// when no condition carries that id.
    pub fn lookup(&self, token: &str) -> Result<Cond> {
        if let Some(c) = self.index.get(token) {
            return Ok(*c);
        }
        if token == "root" {
            return Ok(self.top);
        }
        Err(Error::UnknownCondition(token.to_string()))
    }

    pub fn lookup_set<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Result<CondSet> {
        let mut s = self.empty_set();
        for t in tokens {
            s.insert(self.lookup(t)?);
        }
        Ok(s)
    }

    pub fn empty_set(&self) -> CondSet {
        CondSet::empty(self.len())
    }

    pub fn full_set(&self) -> CondSet {
        CondSet::full(self.len())
    }

    pub fn leq(&self, a: Cond, b: Cond) -> bool {
        self.above[a.index()].contains(b)
    }

    pub fn leq_by_id(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.leq(self.lookup(a)?, self.lookup(b)?))
    }

    pub fn equivalent(&self, a: Cond, b: Cond) -> bool {
        self.leq(a, b) && self.leq(b, a)
    }

    /// `{ c : c ≤ p }`
    pub fn below(&self, p: Cond) -> &CondSet {
        &self.below[p.index()]
    }

    /// `{ c : p ≤ c }`
    pub fn above(&self, p: Cond) -> &CondSet {
        &self.above[p.index()]
    }

    pub fn compatible(&self, a: Cond, b: Cond) -> bool {
        self.below(a).intersects(self.below(b))
    }

    /// Conditions with some extension inside `d`: `{ q : ∃ r ≤ q, r ∈ d }`.
    pub fn up_closure(&self, d: &CondSet) -> CondSet {
        let mut out = self.empty_set();
        for r in d.iter() {
            out.union_with(self.above(r));
        }
        out
    }

    /// Everything below some member of `d`.
    pub fn down_closure(&self, d: &CondSet) -> CondSet {
        let mut out = self.empty_set();
        for r in d.iter() {
            out.union_with(self.below(r));
        }
        out
    }

    /// Conditions compatible with some member of `d`.
    pub fn compatible_with_some(&self, d: &CondSet) -> CondSet {
        self.up_closure(&self.down_closure(d))
    }

    /// All `p` below which `d` is dense.
    pub fn dense_region(&self, d: &CondSet) -> CondSet {
        let reach = self.up_closure(d);
        let mut out = self.empty_set();
        for p in self.conditions() {
            if self.below(p).is_subset(&reach) {
                out.insert(p);
            }
        }
        out
    }

    /// All `p` below which nothing lies in `d`: the region forcing a negation.
    pub fn avoiding_region(&self, d: &CondSet) -> CondSet {
        self.up_closure(d).complement()
    }

    pub fn dense_below(&self, d: &CondSet, p: Cond) -> bool {
        self.below(p).is_subset(&self.up_closure(d))
    }

    pub fn predense_below(&self, d: &CondSet, p: Cond) -> bool {
        self.below(p).is_subset(&self.compatible_with_some(d))
    }

    /// Every common extension of `p` and `r` has a further extension in `d`.
    pub fn dense_below_pair(&self, d: &CondSet, p: Cond, r: Cond) -> bool {
        self.below(p).meet_is_subset(self.below(r), &self.up_closure(d))
    }

    /// Every common extension of `q` and `s` is compatible with a member of `d`.
    pub fn predense_below_pair(&self, d: &CondSet, q: Cond, s: Cond) -> bool {
        self.below(q)
            .meet_is_subset(self.below(s), &self.compatible_with_some(d))
    }

    /// Conditions `c` such that every `d ≤ c` is equivalent to `c`.
    pub fn minimal_elements(&self) -> Vec<Cond> {
        self.conditions()
            .filter(|&c| self.below(c).iter().all(|d| self.leq(c, d)))
            .collect()
    }

    pub fn format_set(&self, s: &CondSet) -> String {
        let ids: Vec<&str> = s.iter().map(|c| self.id(c)).collect();
        format!("{{{}}}", ids.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys_a() -> Preorder {
        Preorder::new(
            vec!["1".into(), "p".into(), "q".into()],
            &[("p".into(), "1".into()), ("q".into(), "1".into())],
        )
        .unwrap()
    }

    fn set(o: &Preorder, ids: &[&str]) -> CondSet {
        o.lookup_set(ids.iter().copied()).unwrap()
    }

    #[test]
    fn leq_examples() {
        let o = sys_a();
        assert!(o.leq_by_id("p", "1").unwrap());
        assert!(!o.leq_by_id("p", "q").unwrap());
        assert!(o.leq_by_id("p", "p").unwrap());
        assert!(matches!(o.leq_by_id("p", "z"), Err(Error::UnknownCondition(_))));
    }

    #[test]
    fn compatibility_examples() {
        let o = sys_a();
        let c = |a: &str, b: &str| o.compatible(o.lookup(a).unwrap(), o.lookup(b).unwrap());
        assert!(!c("p", "q"));
        assert!(c("p", "1"));
        assert!(c("1", "1"));
    }

    #[test]
    fn density_examples() {
        let o = sys_a();
        let top = o.top();
        let p = o.lookup("p").unwrap();
        let q = o.lookup("q").unwrap();
        assert!(o.dense_below(&set(&o, &["p", "q"]), top));
        assert!(!o.dense_below(&set(&o, &["p"]), top));
        assert!(o.dense_below(&o.full_set(), p));
        assert!(o.predense_below(&set(&o, &["p", "q"]), top));
        assert!(o.predense_below(&set(&o, &["p"]), p));
        assert!(!o.predense_below(&set(&o, &["p"]), q));
        assert!(o.dense_below_pair(&o.empty_set(), p, q));
        assert!(o.dense_below_pair(&set(&o, &["p"]), p, top));
        assert!(!o.dense_below_pair(&set(&o, &["q"]), p, top));
    }

    #[test]
    fn closure_and_top_validation() {
        let o = Preorder::new(
            vec!["1".into(), "a".into(), "b".into(), "c".into()],
            &[
                ("c".into(), "b".into()),
                ("b".into(), "a".into()),
                ("a".into(), "1".into()),
            ],
        )
        .unwrap();
        assert!(o.leq_by_id("c", "1").unwrap());
        assert!(o.leq_by_id("c", "a").unwrap());
        let err = Preorder::new(vec!["1".into(), "a".into()], &[]).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn equivalence_classes_are_kept() {
        let o = Preorder::new(
            vec!["1".into(), "a".into(), "b".into()],
            &[
                ("a".into(), "b".into()),
                ("b".into(), "a".into()),
                ("a".into(), "1".into()),
            ],
        )
        .unwrap();
        assert_eq!(o.len(), 3);
        let a = o.lookup("a").unwrap();
        let b = o.lookup("b").unwrap();
        assert!(o.equivalent(a, b));
        let mins = o.minimal_elements();
        assert_eq!(mins, vec![a, b]);
    }
}
