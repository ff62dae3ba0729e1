//! Interned ℙ-names and the group action on them.
//!
//! A name is a finite set of `(child, condition)` pairs. Names are hash-consed:
//! the entry list is sorted and deduplicated, and two names are equal exactly
//! when their ids are equal. Children are always interned before their
//! parents, so the store is acyclic by construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::families::FamilyMeta;
use crate::hf::HfSet;
use crate::order::Cond;
use crate::symmetry::{AutoId, AutoSet};
use crate::system::{Caps, SymmetricSystem};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NameId(pub u32);

impl fmt::Debug for NameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

pub type Entries = Arc<[(NameId, Cond)]>;

#[derive(Default)]
struct StoreInner {
    nodes: Vec<(Entries, u32)>,
    index: HashMap<Entries, NameId>,
}

/// Append-only intern table. Interning the same entry set twice, from any
/// thread, yields the same id.
#[derive(Default)]
pub struct NameStore {
    inner: RwLock<StoreInner>,
}

impl NameStore {
    pub fn intern(&self, mut entries: Vec<(NameId, Cond)>) -> NameId {
        entries.sort_unstable();
        entries.dedup();
        let key: Entries = entries.into();
        if let Some(&id) = self.inner.read().unwrap().index.get(&key) {
            return id;
        }
        let mut inner = self.inner.write().unwrap();
        if let Some(&id) = inner.index.get(&key) {
            return id;
        }
        let rank = key
            .iter()
            .map(|(c, _)| inner.nodes[c.0 as usize].1 + 1)
            .max()
            .unwrap_or(0);
        let id = NameId(inner.nodes.len() as u32);
        inner.nodes.push((key.clone(), rank));
        inner.index.insert(key, id);
        id
    }

    pub fn entries(&self, x: NameId) -> Entries {
        self.inner.read().unwrap().nodes[x.0 as usize].0.clone()
    }

    pub fn rank(&self, x: NameId) -> u32 {
        self.inner.read().unwrap().nodes[x.0 as usize].1
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rel {
    #[serde(rename = "in")]
    In,
    #[serde(rename = "sub")]
    Sub,
    #[serde(rename = "eq")]
    Eq,
}

impl Rel {
    pub fn parse(s: &str) -> Result<Rel> {
        match s {
            "in" | "∈" => Ok(Rel::In),
            "sub" | "⊆" => Ok(Rel::Sub),
            "eq" | "=" => Ok(Rel::Eq),
            _ => Err(Error::Scope(format!("unknown relation `{s}`"))),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::In => "in",
            Rel::Sub => "sub",
            Rel::Eq => "=",
        }
    }

    pub const ALL: [Rel; 3] = [Rel::In, Rel::Sub, Rel::Eq];
}

#[derive(Default)]
pub(crate) struct Memo {
    pub apply: RwLock<HashMap<(AutoId, NameId), NameId>>,
    pub sym: RwLock<HashMap<NameId, Arc<AutoSet>>>,
    pub hs: RwLock<HashMap<NameId, bool>>,
    pub atomic: RwLock<HashMap<(NameId, Rel, NameId), Arc<CondSet>>>,
    pub universes: RwLock<HashMap<(usize, CondSet, bool), Arc<Vec<NameId>>>>,
    pub appearing: RwLock<HashMap<NameId, Arc<CondSet>>>,
}

/// A validated symmetric system together with its name store and the shared
/// memo tables of every recursion defined over it.
pub struct Universe {
    sys: SymmetricSystem,
    store: NameStore,
    declared: BTreeMap<String, NameId>,
    labels: HashMap<NameId, String>,
    class_names: BTreeSet<String>,
    caps: Caps,
    family: Option<FamilyMeta>,
    pub(crate) memo: Memo,
}

impl std::fmt::Debug for Universe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Universe")
            .field("system", &self.sys.label)
            .field("names", &self.store.len())
            .field("declared", &self.declared)
            .finish()
    }
}

impl Universe {
    pub fn new(sys: SymmetricSystem, caps: Caps) -> Self {
        Universe {
            sys,
            store: NameStore::default(),
            declared: BTreeMap::new(),
            labels: HashMap::new(),
            class_names: BTreeSet::new(),
            caps,
            family: None,
            memo: Memo::default(),
        }
    }

    pub fn system(&self) -> &SymmetricSystem {
        &self.sys
    }

    /// The built-in family this universe was generated from, if any.
    pub fn family(&self) -> Option<&FamilyMeta> {
        self.family.as_ref()
    }

    pub(crate) fn set_family(&mut self, meta: FamilyMeta) {
        self.family = Some(meta);
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn set_caps(&mut self, caps: Caps) {
        self.caps = caps;
        self.memo.universes.write().unwrap().clear();
    }

    pub fn store(&self) -> &NameStore {
        &self.store
    }

    /// Registers a named name. Class names are flagged; the flag does not
    /// affect interning, so a class name and a set name with the same entries
    /// share an id.
    pub fn declare(&mut self, id: impl Into<String>, x: NameId, class: bool) {
        let id = id.into();
        self.labels.entry(x).or_insert_with(|| id.clone());
        if class {
            self.class_names.insert(id.clone());
        } else {
            self.class_names.remove(&id);
        }
        self.declared.insert(id, x);
    }

    pub fn declared(&self) -> &BTreeMap<String, NameId> {
        &self.declared
    }

    pub fn is_class_decl(&self, id: &str) -> bool {
        self.class_names.contains(id)
    }

    /// Resolves a name token: a declared id, or `check:<literal>`.
    pub fn lookup(&self, token: &str) -> Result<NameId> {
        if let Some(&x) = self.declared.get(token) {
            return Ok(x);
        }
        if let Some(lit) = token.strip_prefix("check:") {
            return self.check_literal(lit);
        }
        Err(Error::UnknownName(token.to_string()))
    }

    pub fn entries(&self, x: NameId) -> Entries {
        self.store.entries(x)
    }

    pub fn rank(&self, x: NameId) -> u32 {
        self.store.rank(x)
    }

    pub fn intern(&self, entries: Vec<(NameId, Cond)>) -> NameId {
        self.store.intern(entries)
    }

    pub fn empty_name(&self) -> NameId {
        self.intern(Vec::new())
    }

    /// `dom(x)` in entry order, deduplicated.
    pub fn domain(&self, x: NameId) -> Vec<NameId> {
        let mut out: Vec<NameId> = self.entries(x).iter().map(|e| e.0).collect();
        out.dedup();
        out
    }

    /// Check name of a von Neumann numeral.
    pub fn check(&self, k: usize) -> Result<NameId> {
        if k > self.caps.literal_depth {
            return Err(Error::resource("check-name literal depth", self.caps.literal_depth));
        }
        self.check_hf(&HfSet::numeral(k))
    }

    /// Canonical name of a hereditarily finite set: every pair attached to 1.
    pub fn check_hf(&self, v: &HfSet) -> Result<NameId> {
        if v.depth() > self.caps.literal_depth {
            return Err(Error::resource("check-name literal depth", self.caps.literal_depth));
        }
        let top = self.sys.order.top();
        let entries = v
            .iter()
            .map(|c| Ok((self.check_hf(c)?, top)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.intern(entries))
    }

    pub fn check_literal(&self, lit: &str) -> Result<NameId> {
        self.check_hf(&HfSet::parse(lit)?)
    }

    /// `X• = { (x, 1) : x ∈ X }`
    pub fn bullet(&self, xs: &[NameId]) -> NameId {
        let top = self.sys.order.top();
        self.intern(xs.iter().map(|&x| (x, top)).collect())
    }

    /// Kuratowski pair name `{ {x}•, {x,y}• }•`.
    pub fn pair_name(&self, x: NameId, y: NameId) -> NameId {
        let single = self.bullet(&[x]);
        let double = self.bullet(&[x, y]);
        self.bullet(&[single, double])
    }

    /// `π(x) = { (π(y), π(p)) : (y, p) ∈ x }`, recursively.
    pub fn apply(&self, pi: AutoId, x: NameId) -> NameId {
        if pi == AutoId::IDENTITY {
            return x;
        }
        if let Some(&y) = self.memo.apply.read().unwrap().get(&(pi, x)) {
            return y;
        }
        let g = &self.sys.group;
        let mapped: Vec<(NameId, Cond)> = self
            .entries(x)
            .iter()
            .map(|&(c, p)| (self.apply(pi, c), g.apply(pi, p)))
            .collect();
        let y = self.intern(mapped);
        self.memo.apply.write().unwrap().insert((pi, x), y);
        y
    }

    /// `{ π ∈ 𝒢 : π(x) = x }`
    pub fn sym_of_name(&self, x: NameId) -> Arc<AutoSet> {
        if let Some(s) = self.memo.sym.read().unwrap().get(&x) {
            return s.clone();
        }
        let s: Arc<AutoSet> = Arc::new(
            self.sys
                .group
                .elements()
                .filter(|&pi| self.apply(pi, x) == x)
                .collect(),
        );
        self.memo.sym.write().unwrap().insert(x, s.clone());
        s
    }

    pub fn is_symmetric(&self, x: NameId) -> bool {
        self.sys.in_filter(&self.sym_of_name(x))
    }

    pub fn is_hereditarily_symmetric(&self, x: NameId) -> bool {
        if let Some(&b) = self.memo.hs.read().unwrap().get(&x) {
            return b;
        }
        let b = self.is_symmetric(x)
            && self
                .domain(x)
                .into_iter()
                .all(|c| self.is_hereditarily_symmetric(c));
        self.memo.hs.write().unwrap().insert(x, b);
        b
    }

    /// Conditions appearing anywhere in `x`.
    pub fn appearing(&self, x: NameId) -> Arc<CondSet> {
        if let Some(s) = self.memo.appearing.read().unwrap().get(&x) {
            return s.clone();
        }
        let mut s = self.sys.order.empty_set();
        for &(c, p) in self.entries(x).iter() {
            s.insert(p);
            s.union_with(&self.appearing(c));
        }
        let s = Arc::new(s);
        self.memo.appearing.write().unwrap().insert(x, s.clone());
        s
    }

    /// `x` together with every name in its transitive closure, children first.
    pub fn transitive_closure(&self, roots: &[NameId]) -> Vec<NameId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &r in roots {
            self.tc_visit(r, &mut seen, &mut out);
        }
        out
    }

    fn tc_visit(&self, x: NameId, seen: &mut BTreeSet<NameId>, out: &mut Vec<NameId>) {
        if !seen.insert(x) {
            return;
        }
        for c in self.domain(x) {
            self.tc_visit(c, seen, out);
        }
        out.push(x);
    }

    /// `HS_α^b`: hereditarily symmetric names of rank below `alpha` in which
    /// only conditions of `b` appear.
    pub fn enumerate_hs(&self, alpha: usize, b: &CondSet) -> Result<Arc<Vec<NameId>>> {
        self.enumerate(alpha, b, true)
    }

    /// All names of rank below `alpha` over `b`, symmetric or not.
    pub fn enumerate_all(&self, alpha: usize, b: &CondSet) -> Result<Arc<Vec<NameId>>> {
        self.enumerate(alpha, b, false)
    }

    fn enumerate(&self, alpha: usize, b: &CondSet, hs_only: bool) -> Result<Arc<Vec<NameId>>> {
        let key = (alpha, b.clone(), hs_only);
        if let Some(v) = self.memo.universes.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let mut current: Vec<NameId> = if alpha == 0 {
            Vec::new()
        } else {
            vec![self.empty_name()]
        };
        for _ in 1..alpha {
            current = self.next_level(&current, b, hs_only)?;
        }
        let current = Arc::new(current);
        if hs_only && alpha > 0 {
            self.check_universe_bullet(&current, b)?;
        }
        self.memo
            .universes
            .write()
            .unwrap()
            .insert(key, current.clone());
        Ok(current)
    }

    /// Orbits of `level × b` under each minimal base subgroup (or under the
    /// identity alone), keeping only orbits that stay inside `level × b`.
    fn pair_orbits(
        &self,
        level: &[NameId],
        b: &CondSet,
        hs_only: bool,
    ) -> (Vec<(NameId, Cond)>, Vec<Vec<Vec<usize>>>) {
        let g = &self.sys.group;
        let pairs: Vec<(NameId, Cond)> = level
            .iter()
            .flat_map(|&x| b.iter().map(move |p| (x, p)))
            .collect();
        let pair_index: HashMap<(NameId, Cond), usize> =
            pairs.iter().enumerate().map(|(i, &pr)| (pr, i)).collect();

        let groups: Vec<AutoSet> = if hs_only {
            minimal_entries(self.sys.filter.base().iter().map(|e| &e.members))
        } else {
            vec![[AutoId::IDENTITY].into()]
        };

        let mut families = Vec::new();
        for h in &groups {
            let mut assigned = vec![false; pairs.len()];
            let mut orbits = Vec::new();
            for start in 0..pairs.len() {
                if assigned[start] {
                    continue;
                }
                let (x, p) = pairs[start];
                let mut orbit = BTreeSet::new();
                let mut inside = true;
                for &pi in h {
                    let img = (self.apply(pi, x), g.apply(pi, p));
                    match pair_index.get(&img) {
                        Some(&i) => {
                            orbit.insert(i);
                        }
                        None => inside = false,
                    }
                }
                for &i in &orbit {
                    assigned[i] = true;
                }
                if inside {
                    orbits.push(orbit.into_iter().collect::<Vec<_>>());
                }
            }
            families.push(orbits);
        }
        (pairs, families)
    }

    /// All subsets of `level × b` invariant under some minimal base subgroup
    /// (or all subsets, when symmetry is not required).
    fn next_level(&self, level: &[NameId], b: &CondSet, hs_only: bool) -> Result<Vec<NameId>> {
        let (pairs, families) = self.pair_orbits(level, b, hs_only);
        let mut total: usize = 0;
        for orbits in &families {
            if orbits.len() >= usize::BITS as usize - 1 {
                return Err(Error::resource("name universe size", self.caps.names));
            }
            total = total.saturating_add(1usize << orbits.len());
            if total > self.caps.names {
                return Err(Error::resource("name universe size", self.caps.names));
            }
        }

        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for orbits in &families {
            for mask in 0u64..(1u64 << orbits.len()) {
                let mut entries = Vec::new();
                for (k, orbit) in orbits.iter().enumerate() {
                    if mask & (1 << k) != 0 {
                        entries.extend(orbit.iter().map(|&i| pairs[i]));
                    }
                }
                let x = self.intern(entries);
                if seen.insert(x) {
                    out.push(x);
                }
            }
        }
        Ok(out)
    }

    /// Hereditarily symmetric names over `level × b` that are unions of at
    /// most `max_orbits` orbits, excluding members of `level`. When more than
    /// `limit` remain, an evenly strided subsequence of length `limit` is
    /// returned. The order is deterministic.
    pub fn layer_sample(&self, level: &[NameId], b: &CondSet, max_orbits: usize, limit: usize) -> Vec<NameId> {
        let (pairs, families) = self.pair_orbits(level, b, true);
        let mut seen: BTreeSet<NameId> = level.iter().copied().collect();
        let mut out = Vec::new();
        for orbits in &families {
            let mut chosen: Vec<usize> = Vec::new();
            self.orbit_combinations(&pairs, orbits, 0, max_orbits, &mut chosen, &mut seen, &mut out);
        }
        if out.len() > limit && limit > 0 {
            let n = out.len();
            out = (0..limit).map(|k| out[k * n / limit]).collect();
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn orbit_combinations(
        &self,
        pairs: &[(NameId, Cond)],
        orbits: &[Vec<usize>],
        from: usize,
        budget: usize,
        chosen: &mut Vec<usize>,
        seen: &mut BTreeSet<NameId>,
        out: &mut Vec<NameId>,
    ) {
        if !chosen.is_empty() {
            let entries = chosen
                .iter()
                .flat_map(|&k| orbits[k].iter().map(|&i| pairs[i]))
                .collect();
            let x = self.intern(entries);
            if seen.insert(x) {
                out.push(x);
            }
        }
        if budget == 0 {
            return;
        }
        for k in from..orbits.len() {
            chosen.push(k);
            self.orbit_combinations(pairs, orbits, k + 1, budget - 1, chosen, seen, out);
            chosen.pop();
        }
    }

    fn check_universe_bullet(&self, names: &[NameId], b: &CondSet) -> Result<()> {
        let bullet = self.bullet(names);
        let sym_b = self.sys.sym_of_condition_set(b);
        if let Some(&pi) = sym_b.iter().find(|&&pi| self.apply(pi, bullet) != bullet) {
            return Err(Error::validation(
                "universe bullet symmetric",
                format!("{} moves the bullet of the bounded universe", self.sys.group.id(pi)),
            ));
        }
        Ok(())
    }

    /// Human-readable rendering: declared id, else the entry set.
    pub fn show(&self, x: NameId) -> String {
        if let Some(l) = self.labels.get(&x) {
            return l.clone();
        }
        let entries = self.entries(x);
        if entries.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = entries
            .iter()
            .map(|&(c, p)| format!("({},{})", self.show(c), self.sys.order.id(p)))
            .collect();
        format!("{{{}}}", parts.join(" "))
    }
}

fn minimal_entries<'a>(sets: impl Iterator<Item = &'a AutoSet>) -> Vec<AutoSet> {
    let all: Vec<&AutoSet> = sets.collect();
    let mut out: Vec<AutoSet> = Vec::new();
    for (i, h) in all.iter().enumerate() {
        let dominated = all.iter().enumerate().any(|(j, k)| {
            j != i && k.is_subset(h) && (k.len() < h.len() || j < i)
        });
        if !dominated {
            out.push((*h).clone());
        }
    }
    out
}
