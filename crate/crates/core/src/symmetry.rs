//! Automorphism groups of a finite preorder and normal filters of subgroups.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::order::{Cond, Preorder};

/// Index of an element of an [`AutomorphismGroup`]. Index 0 is the identity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AutoId(pub u32);

impl AutoId {
    pub const IDENTITY: AutoId = AutoId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for AutoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// A set of group elements; subgroups and stabilizers are values of this type.
pub type AutoSet = BTreeSet<AutoId>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    pub id: String,
    pub map: Vec<Cond>,
}

impl Automorphism {
    pub fn identity(n: usize) -> Self {
        Automorphism {
            id: "id".into(),
            map: (0..n as u32).map(Cond).collect(),
        }
    }

    pub fn apply(&self, c: Cond) -> Cond {
        self.map[c.index()]
    }

    /// Checks bijectivity, two-way order preservation and that the top is
    /// sent to something equivalent to the top.
    pub fn check_against(&self, order: &Preorder) -> Result<()> {
        let n = order.len();
        if self.map.len() != n {
            return Err(Error::validation(
                "automorphism is a bijection",
                format!("`{}` has {} images for {} conditions", self.id, self.map.len(), n),
            ));
        }
        let mut seen = vec![false; n];
        for &c in &self.map {
            if std::mem::replace(&mut seen[c.index()], true) {
                return Err(Error::validation(
                    "automorphism is a bijection",
                    format!("`{}` hits `{}` twice", self.id, order.id(c)),
                ));
            }
        }
        for a in order.conditions() {
            for b in order.conditions() {
                if order.leq(a, b) != order.leq(self.apply(a), self.apply(b)) {
                    return Err(Error::validation(
                        "automorphism preserves order",
                        format!(
                            "`{}` breaks the pair ({}, {})",
                            self.id,
                            order.id(a),
                            order.id(b)
                        ),
                    ));
                }
            }
        }
        if !order.equivalent(self.apply(order.top()), order.top()) {
            return Err(Error::validation(
                "automorphism fixes 1",
                format!("`{}` moves 1", self.id),
            ));
        }
        Ok(())
    }
}

/// A finite group of automorphisms, materialized as its full element table.
#[derive(Clone, Debug)]
pub struct AutomorphismGroup {
    elements: Vec<Automorphism>,
    generators: Vec<AutoId>,
    index: HashMap<Vec<Cond>, AutoId>,
    inverse: Vec<AutoId>,
}

impl AutomorphismGroup {
    /// Closes `generators` under composition by breadth-first products.
    /// Element names are words over generator ids, shortest first.
    pub fn generate(n: usize, generators: Vec<Automorphism>, max_order: usize) -> Result<Self> {
        let id = Automorphism::identity(n);
        let mut elements = vec![id.clone()];
        let mut index = HashMap::new();
        index.insert(id.map.clone(), AutoId::IDENTITY);
        let mut gen_ids = Vec::new();
        for g in &generators {
            if g.map.len() != n {
                return Err(Error::validation(
                    "automorphism is a bijection",
                    format!("`{}` has the wrong arity", g.id),
                ));
            }
        }
        let mut queue = VecDeque::from([AutoId::IDENTITY]);
        for g in &generators {
            if let Some(&existing) = index.get(&g.map) {
                gen_ids.push(existing);
            } else {
                let aid = AutoId(elements.len() as u32);
                index.insert(g.map.clone(), aid);
                elements.push(g.clone());
                gen_ids.push(aid);
                queue.push_back(aid);
            }
        }
        while let Some(cur) = queue.pop_front() {
            for (gi, g) in generators.iter().enumerate() {
                let base = &elements[cur.index()];
                let map: Vec<Cond> = base.map.iter().map(|&c| g.apply(c)).collect();
                if index.contains_key(&map) {
                    continue;
                }
                if elements.len() >= max_order {
                    return Err(Error::resource("automorphism group order", max_order));
                }
                let name = if cur == AutoId::IDENTITY {
                    generators[gi].id.clone()
                } else {
                    format!("{}*{}", g.id, base.id)
                };
                let aid = AutoId(elements.len() as u32);
                index.insert(map.clone(), aid);
                elements.push(Automorphism { id: name, map });
                queue.push_back(aid);
            }
        }
        let mut inverse = vec![AutoId::IDENTITY; elements.len()];
        for (i, e) in elements.iter().enumerate() {
            let mut inv = vec![Cond(0); n];
            for (c, &img) in e.map.iter().enumerate() {
                inv[img.index()] = Cond(c as u32);
            }
            inverse[i] = index[&inv];
        }
        Ok(AutomorphismGroup {
            elements,
            generators: gen_ids,
            index,
            inverse,
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = AutoId> {
        (0..self.elements.len() as u32).map(AutoId)
    }

    pub fn generators(&self) -> &[AutoId] {
        &self.generators
    }

    pub fn get(&self, a: AutoId) -> &Automorphism {
        &self.elements[a.index()]
    }

    pub fn id(&self, a: AutoId) -> &str {
        &self.elements[a.index()].id
    }

    pub fn lookup(&self, token: &str) -> Result<AutoId> {
        self.elements
            .iter()
            .position(|e| e.id == token)
            .map(|i| AutoId(i as u32))
            .ok_or_else(|| Error::UnknownAutomorphism(token.to_string()))
    }

    pub fn full(&self) -> AutoSet {
        self.elements().collect()
    }

    pub fn apply(&self, a: AutoId, c: Cond) -> Cond {
        self.elements[a.index()].apply(c)
    }

    pub fn image(&self, a: AutoId, s: &CondSet) -> CondSet {
        CondSet::from_iter_in(s.universe(), s.iter().map(|c| self.apply(a, c)))
    }

    /// `a ∘ b`: apply `b` first.
    pub fn compose(&self, a: AutoId, b: AutoId) -> AutoId {
        let ea = &self.elements[a.index()];
        let map: Vec<Cond> = self.elements[b.index()]
            .map
            .iter()
            .map(|&c| ea.apply(c))
            .collect();
        self.index[&map]
    }

    pub fn inverse(&self, a: AutoId) -> AutoId {
        self.inverse[a.index()]
    }

    /// Whether a permutation of conditions is an element of the group.
    pub fn find(&self, map: &[Cond]) -> Option<AutoId> {
        self.index.get(map).copied()
    }

    /// `π H π⁻¹`
    pub fn conjugate(&self, pi: AutoId, h: &AutoSet) -> AutoSet {
        let inv = self.inverse(pi);
        h.iter()
            .map(|&x| self.compose(pi, self.compose(x, inv)))
            .collect()
    }

    /// Subgroup generated by the given elements.
    pub fn closure(&self, gens: &[AutoId]) -> AutoSet {
        let mut out: AutoSet = [AutoId::IDENTITY].into();
        let mut queue = VecDeque::from([AutoId::IDENTITY]);
        while let Some(cur) = queue.pop_front() {
            for &g in gens {
                let next = self.compose(g, cur);
                if out.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        out
    }

    /// Explains why `h` is not a subgroup, if it is not.
    pub fn subgroup_defect(&self, h: &AutoSet) -> Option<String> {
        if !h.contains(&AutoId::IDENTITY) {
            return Some("missing identity".into());
        }
        if h.len() == self.order() {
            return None;
        }
        for &a in h {
            for &b in h {
                let c = self.compose(a, b);
                if !h.contains(&c) {
                    return Some(format!(
                        "not closed: {} * {} = {}",
                        self.id(a),
                        self.id(b),
                        self.id(c)
                    ));
                }
            }
        }
        None
    }

    /// `{ π : π[A] = A }`
    pub fn stabilizer_of_set(&self, a: &CondSet) -> AutoSet {
        self.elements()
            .filter(|&pi| &self.image(pi, a) == a)
            .collect()
    }

    /// Elements fixing every listed condition pointwise.
    pub fn pointwise_fixer(&self, conds: &[Cond]) -> AutoSet {
        self.elements()
            .filter(|&pi| conds.iter().all(|&c| self.apply(pi, c) == c))
            .collect()
    }

    pub fn format_set(&self, h: &AutoSet) -> String {
        let ids: Vec<&str> = h.iter().map(|&a| self.id(a)).collect();
        format!("{{{}}}", ids.join(","))
    }
}

/// One entry of a filter base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseEntry {
    pub label: String,
    pub members: AutoSet,
}

/// A normal filter of subgroups, given by a finite base.
#[derive(Clone, Debug)]
pub struct SubgroupFilter {
    base: Vec<BaseEntry>,
}

impl SubgroupFilter {
    pub fn new(base: Vec<BaseEntry>) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::validation(
                "filter base",
                "filter base required (an entry equal to the group)",
            ));
        }
        Ok(SubgroupFilter { base })
    }

    pub fn base(&self) -> &[BaseEntry] {
        &self.base
    }

    /// `H ∈ ℱ` iff some base entry is contained in `H`.
    pub fn contains(&self, h: &AutoSet) -> bool {
        self.base.iter().any(|e| e.members.is_subset(h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys_a_order() -> Preorder {
        Preorder::new(
            vec!["1".into(), "p".into(), "q".into()],
            &[("p".into(), "1".into()), ("q".into(), "1".into())],
        )
        .unwrap()
    }

    fn tau() -> Automorphism {
        Automorphism {
            id: "tau".into(),
            map: vec![Cond(0), Cond(2), Cond(1)],
        }
    }

    #[test]
    fn closure_of_swap() {
        let g = AutomorphismGroup::generate(3, vec![tau()], 100).unwrap();
        assert_eq!(g.order(), 2);
        let t = g.lookup("tau").unwrap();
        assert_eq!(g.compose(t, t), AutoId::IDENTITY);
        assert_eq!(g.inverse(t), t);
        assert!(g.subgroup_defect(&g.full()).is_none());
        assert_eq!(
            g.subgroup_defect(&[t].into()).as_deref(),
            Some("missing identity")
        );
    }

    #[test]
    fn order_preservation_is_checked() {
        let o = Preorder::new(
            vec!["1".into(), "a".into(), "b".into()],
            &[("a".into(), "b".into()), ("b".into(), "1".into())],
        )
        .unwrap();
        let bad = Automorphism {
            id: "bad".into(),
            map: vec![Cond(0), Cond(2), Cond(1)],
        };
        let err = bad.check_against(&o).unwrap_err();
        assert!(err.to_string().contains("breaks the pair"));
        tau().check_against(&sys_a_order()).unwrap();
    }

    #[test]
    fn stabilizers() {
        let o = sys_a_order();
        let g = AutomorphismGroup::generate(3, vec![tau()], 100).unwrap();
        let pq = o.lookup_set(["p", "q"]).unwrap();
        let p = o.lookup_set(["p"]).unwrap();
        assert_eq!(g.stabilizer_of_set(&pq), g.full());
        assert_eq!(g.stabilizer_of_set(&p), [AutoId::IDENTITY].into());
        assert_eq!(g.stabilizer_of_set(&o.full_set()), g.full());
    }

    #[test]
    fn group_cap() {
        // S_4 on four incomparable conditions needs 24 elements.
        let ids: Vec<String> = ["1", "a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let gens = vec![
            Automorphism {
                id: "s".into(),
                map: vec![Cond(0), Cond(2), Cond(1), Cond(3), Cond(4)],
            },
            Automorphism {
                id: "r".into(),
                map: vec![Cond(0), Cond(2), Cond(3), Cond(4), Cond(1)],
            },
        ];
        assert_eq!(ids.len(), 5);
        assert_eq!(AutomorphismGroup::generate(5, gens.clone(), 100).unwrap().order(), 24);
        assert!(matches!(
            AutomorphismGroup::generate(5, gens, 10),
            Err(Error::Resource { .. })
        ));
    }
}
