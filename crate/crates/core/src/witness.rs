//! The auxiliary witness relation and its certificates.
//!
//! `q ⊩wit u R v` for `R ∈ {∈, ⊆}` holds when some set of tuples `f` together
//! with support sets `d` satisfies the closure conditions on every tuple. The
//! union of all such `f` is itself a witness, so the relation is the greatest
//! fixed point of the closure conditions over a finite candidate universe.
//! Every constraint on a tuple mentions only sub-names of its names, so the
//! transitive closure of the query names is a sufficient universe.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::names::{NameId, Rel, Universe};
use crate::order::{Cond, Preorder};
use crate::symmetry::AutoId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct WitnessTuple {
    pub q: Cond,
    pub u: NameId,
    pub rel: Rel,
    pub v: NameId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Support {
    /// `d^e` for a membership tuple.
    Member(CondSet),
    /// `d^e_{w,s}` for each entry `(w, s)` of `u`.
    Subset(Vec<((NameId, Cond), CondSet)>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Certificate {
    pub f: BTreeMap<WitnessTuple, Support>,
}

/// Alive regions for every `(u, R, v)` over a child-closed name universe.
pub struct WitnessTable {
    names: Vec<NameId>,
    index: HashMap<NameId, usize>,
    words: usize,
    plen: usize,
    alive: Vec<u64>,
    rounds: usize,
}

impl WitnessTable {
    /// Runs the deletion iteration to stabilization over the transitive
    /// closure of `roots`.
    pub fn compute(u: &Universe, roots: &[NameId]) -> Result<Self> {
        let names = u.transitive_closure(roots);
        let n = names.len();
        let plen = u.system().order.len();
        let tuples = n.saturating_mul(n).saturating_mul(2).saturating_mul(plen);
        if tuples > u.caps().witness_tuples {
            return Err(Error::resource("witness candidate tuples", u.caps().witness_tuples));
        }
        let index: HashMap<NameId, usize> = names.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let words = plen.div_ceil(64);
        let full_row = u.system().order.full_set();
        let mut table = WitnessTable {
            names,
            index,
            words,
            plen,
            alive: Vec::with_capacity(n * n * 2 * words),
            rounds: 0,
        };
        for _ in 0..n * n * 2 {
            table.alive.extend(full_row.raw_words());
        }

        // Pairs by ascending rank sum: a single sweep then already settles
        // every tuple, and the second sweep confirms stability.
        let mut order: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        order.sort_by_key(|&(i, j)| (u.rank(table.names[i]) + u.rank(table.names[j]), i, j));

        loop {
            table.rounds += 1;
            let mut changed = false;
            for &(i, j) in &order {
                for rel in [Rel::Sub, Rel::In] {
                    let cur = table.get(i, rel, j);
                    let next = table.surviving(u, i, rel, j, &cur);
                    if next != cur {
                        table.set(i, rel, j, &next);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Ok(table)
    }

    fn slot(&self, i: usize, rel: Rel, j: usize) -> usize {
        let r = match rel {
            Rel::In => 0,
            Rel::Sub => 1,
            Rel::Eq => unreachable!("equality is not a witness relation"),
        };
        ((i * self.names.len() + j) * 2 + r) * self.words
    }

    fn get(&self, i: usize, rel: Rel, j: usize) -> CondSet {
        let s = self.slot(i, rel, j);
        CondSet::from_raw(self.len_conds(), &self.alive[s..s + self.words])
    }

    fn set(&mut self, i: usize, rel: Rel, j: usize, v: &CondSet) {
        let s = self.slot(i, rel, j);
        self.alive[s..s + self.words].copy_from_slice(v.raw_words());
    }

    fn len_conds(&self) -> usize {
        self.plen
    }

    fn idx(&self, x: NameId) -> Result<usize> {
        self.index
            .get(&x)
            .copied()
            .ok_or_else(|| Error::UnknownName(format!("{x:?} outside the witness universe")))
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn universe(&self) -> &[NameId] {
        &self.names
    }

    fn member_support(&self, u: &Universe, i: usize, j: usize) -> CondSet {
        let o = &u.system().order;
        let mut d = o.empty_set();
        for &(w, s) in u.entries(self.names[j]).iter() {
            let k = self.index[&w];
            let mut part = o.below(s).clone();
            part.intersect_with(&self.get(i, Rel::Sub, k));
            part.intersect_with(&self.get(k, Rel::Sub, i));
            d.union_with(&part);
        }
        d
    }

    fn surviving(&self, u: &Universe, i: usize, rel: Rel, j: usize, cur: &CondSet) -> CondSet {
        let o = &u.system().order;
        let mut out = cur.clone();
        match rel {
            Rel::In => {
                let cover = o.compatible_with_some(&self.member_support(u, i, j));
                for q in cur.iter() {
                    if !o.below(q).is_subset(&cover) {
                        out.remove(q);
                    }
                }
            }
            Rel::Sub => {
                for &(w, s) in u.entries(self.names[i]).iter() {
                    let k = self.index[&w];
                    let cover = o.compatible_with_some(&self.get(k, Rel::In, j));
                    for q in out.clone().iter() {
                        if !o.below(q).meet_is_subset(o.below(s), &cover) {
                            out.remove(q);
                        }
                    }
                }
            }
            Rel::Eq => unreachable!(),
        }
        out
    }

    /// `{ q : q ⊩wit x R y }`; for `=` both inclusions.
    pub fn region(&self, x: NameId, rel: Rel, y: NameId) -> Result<CondSet> {
        let (i, j) = (self.idx(x)?, self.idx(y)?);
        Ok(match rel {
            Rel::Eq => self.get(i, Rel::Sub, j).intersection(&self.get(j, Rel::Sub, i)),
            r => self.get(i, r, j),
        })
    }

    /// `{ p : {q : q ⊩wit x R y} dense below p }`
    pub fn atomic_region(&self, o: &Preorder, x: NameId, rel: Rel, y: NameId) -> Result<CondSet> {
        Ok(o.dense_region(&self.region(x, rel, y)?))
    }

    /// The certificate generated from the fixed point by the tuples reachable
    /// from `(p, x, R, y)`, with maximal supports.
    pub fn certificate(&self, u: &Universe, p: Cond, x: NameId, rel: Rel, y: NameId) -> Result<Option<Certificate>> {
        if !self.region(x, rel, y)?.contains(p) {
            return Ok(None);
        }
        let roots: Vec<WitnessTuple> = match rel {
            Rel::Eq => vec![
                WitnessTuple { q: p, u: x, rel: Rel::Sub, v: y },
                WitnessTuple { q: p, u: y, rel: Rel::Sub, v: x },
            ],
            r => vec![WitnessTuple { q: p, u: x, rel: r, v: y }],
        };
        let o = &u.system().order;
        let mut cert = Certificate::default();
        let mut stack = roots;
        while let Some(t) = stack.pop() {
            if cert.f.contains_key(&t) {
                continue;
            }
            let (i, j) = (self.idx(t.u)?, self.idx(t.v)?);
            let support = match t.rel {
                Rel::In => {
                    let d = self.member_support(u, i, j);
                    for r in d.iter() {
                        for &(w, s) in u.entries(t.v).iter() {
                            let k = self.index[&w];
                            if o.leq(r, s)
                                && self.get(i, Rel::Sub, k).contains(r)
                                && self.get(k, Rel::Sub, i).contains(r)
                            {
                                stack.push(WitnessTuple { q: r, u: t.u, rel: Rel::Sub, v: w });
                                stack.push(WitnessTuple { q: r, u: w, rel: Rel::Sub, v: t.u });
                                break;
                            }
                        }
                    }
                    Support::Member(d)
                }
                Rel::Sub => {
                    let mut fam = Vec::new();
                    for &(w, s) in u.entries(t.u).iter() {
                        let k = self.index[&w];
                        let d = self.get(k, Rel::In, j);
                        for r in d.iter() {
                            stack.push(WitnessTuple { q: r, u: w, rel: Rel::In, v: t.v });
                        }
                        fam.push(((w, s), d));
                    }
                    Support::Subset(fam)
                }
                Rel::Eq => unreachable!(),
            };
            cert.f.insert(t, support);
        }
        Ok(Some(cert))
    }
}

impl Certificate {
    /// Checks the closure conditions on every tuple, independently of the
    /// search that produced the certificate.
    pub fn validate(&self, u: &Universe) -> Result<()> {
        let o = &u.system().order;
        let bad = |t: &WitnessTuple, why: &str| {
            Err(Error::validation(
                "witness certificate",
                format!(
                    "({}, {}, {}, {}): {why}",
                    o.id(t.q),
                    u.show(t.u),
                    t.rel.symbol(),
                    u.show(t.v)
                ),
            ))
        };
        for (t, support) in &self.f {
            match (t.rel, support) {
                (Rel::In, Support::Member(d)) => {
                    if !o.predense_below(d, t.q) {
                        return bad(t, "support not predense");
                    }
                    for r in d.iter() {
                        let ok = u.entries(t.v).iter().any(|&(w, s)| {
                            o.leq(r, s)
                                && self.f.contains_key(&WitnessTuple { q: r, u: t.u, rel: Rel::Sub, v: w })
                                && self.f.contains_key(&WitnessTuple { q: r, u: w, rel: Rel::Sub, v: t.u })
                        });
                        if !ok {
                            return bad(t, "support condition without a matching entry");
                        }
                    }
                }
                (Rel::Sub, Support::Subset(fam)) => {
                    let entries = u.entries(t.u);
                    let keys: BTreeSet<(NameId, Cond)> = fam.iter().map(|(k, _)| *k).collect();
                    if entries.iter().any(|e| !keys.contains(e)) {
                        return bad(t, "support family misses an entry");
                    }
                    for &((w, s), ref d) in fam {
                        if !o.predense_below_pair(d, t.q, s) {
                            return bad(t, "support not predense below the meet");
                        }
                        for r in d.iter() {
                            if !self.f.contains_key(&WitnessTuple { q: r, u: w, rel: Rel::In, v: t.v }) {
                                return bad(t, "support condition without a membership tuple");
                            }
                        }
                    }
                }
                _ => return bad(t, "support shape does not match the relation"),
            }
        }
        Ok(())
    }

    pub fn contains(&self, t: &WitnessTuple) -> bool {
        self.f.contains_key(t)
    }

    /// Pointwise union of tuples and supports.
    pub fn merge(&self, other: &Certificate) -> Certificate {
        let mut f = self.f.clone();
        for (t, s) in &other.f {
            match (f.get_mut(t), s) {
                (None, _) => {
                    f.insert(*t, s.clone());
                }
                (Some(Support::Member(a)), Support::Member(b)) => a.union_with(b),
                (Some(Support::Subset(a)), Support::Subset(b)) => {
                    for (k, d) in b {
                        match a.iter_mut().find(|(k2, _)| k2 == k) {
                            Some((_, d2)) => d2.union_with(d),
                            None => a.push((*k, d.clone())),
                        }
                    }
                }
                _ => {}
            }
        }
        Certificate { f }
    }

    /// Image of the certificate under an automorphism.
    pub fn apply(&self, u: &Universe, pi: AutoId) -> Certificate {
        let g = &u.system().group;
        let f = self
            .f
            .iter()
            .map(|(t, s)| {
                let t2 = WitnessTuple {
                    q: g.apply(pi, t.q),
                    u: u.apply(pi, t.u),
                    rel: t.rel,
                    v: u.apply(pi, t.v),
                };
                let s2 = match s {
                    Support::Member(d) => Support::Member(g.image(pi, d)),
                    Support::Subset(fam) => Support::Subset(
                        fam.iter()
                            .map(|&((w, c), ref d)| ((u.apply(pi, w), g.apply(pi, c)), g.image(pi, d)))
                            .collect(),
                    ),
                };
                (t2, s2)
            })
            .collect();
        Certificate { f }
    }

    pub fn to_json(&self, u: &Universe) -> serde_json::Value {
        let o = &u.system().order;
        let tuples: Vec<serde_json::Value> = self
            .f
            .iter()
            .map(|(t, s)| {
                let support = match s {
                    Support::Member(d) => serde_json::json!(o.format_set(d)),
                    Support::Subset(fam) => serde_json::Value::Array(
                        fam.iter()
                            .map(|((w, c), d)| {
                                serde_json::json!({
                                    "entry": [u.show(*w), o.id(*c)],
                                    "d": o.format_set(d),
                                })
                            })
                            .collect(),
                    ),
                };
                serde_json::json!({
                    "q": o.id(t.q),
                    "u": u.show(t.u),
                    "rel": t.rel.symbol(),
                    "v": u.show(t.v),
                    "d": support,
                })
            })
            .collect();
        serde_json::json!({ "tuples": tuples })
    }
}

impl Universe {
    /// `p ⊩wit x R y`, with the certificate when it holds.
    pub fn wit_forces(&self, p: Cond, x: NameId, rel: Rel, y: NameId) -> Result<(bool, Option<Certificate>)> {
        let table = WitnessTable::compute(self, &[x, y])?;
        let cert = table.certificate(self, p, x, rel, y)?;
        Ok((cert.is_some(), cert))
    }

    /// `{q : q ⊩wit x R y}` is dense below `p`.
    pub fn wit_atomic_forces(&self, p: Cond, x: NameId, rel: Rel, y: NameId) -> Result<bool> {
        let table = WitnessTable::compute(self, &[x, y])?;
        Ok(table.atomic_region(&self.system().order, x, rel, y)?.contains(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub p: String,
    pub x: String,
    pub rel: Rel,
    pub y: String,
    pub atomic: bool,
    pub witness: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub queries: usize,
    pub disagreements: Vec<Disagreement>,
}

/// Compares the derived witness relation with the atomic engine on every
/// query `(p, x, R, y)` with `x, y` from `names`.
pub fn check_equivalence(u: &Universe, names: &[NameId]) -> Result<EquivalenceReport> {
    let table = WitnessTable::compute(u, names)?;
    let o = &u.system().order;
    let mut report = EquivalenceReport { queries: 0, disagreements: Vec::new() };
    for &x in names {
        for &y in names {
            for rel in Rel::ALL {
                let wit = table.atomic_region(o, x, rel, y)?;
                let at = u.atomic_region(x, rel, y);
                report.queries += o.len();
                if wit != *at {
                    for p in o.conditions() {
                        if wit.contains(p) != at.contains(p) {
                            report.disagreements.push(Disagreement {
                                p: o.id(p).to_string(),
                                x: u.show(x),
                                rel,
                                y: u.show(y),
                                atomic: at.contains(p),
                                witness: wit.contains(p),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}
