//! Built-in symmetric systems.
//!
//! * `SYS-A`: conditions `1, p, q` with `p ⊥ q`; the swap `tau` generates the
//!   group and the only base entry is the whole group.
//! * `SYS-A0`: the same preorder with the trivial group.
//! * `SYS-B(M, N)`: sequences of length at most `M` over `N` values ordered by
//!   end-extension, with coordinatewise value permutations and the trivial
//!   filter. A truncation of the cofinal map from ω into the ordinals.
//! * `SYS-C(A, B, C)`: coherent partial functions on `A × B × C` into 2,
//!   ordered by reverse inclusion, with per-coordinate permutations of the
//!   ordinal axis and the filter generated by the groups `fix(e)`. A
//!   truncation of the system adding Cohen reals indexed by ordinals.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::names::{NameId, Universe};
use crate::niceness::DenseFamily;
use crate::order::{Cond, Preorder, TOP_TOKEN};
use crate::symmetry::{AutoSet, Automorphism, AutomorphismGroup, BaseEntry, SubgroupFilter};
use crate::system::{Caps, SymmetricSystem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyMeta {
    A,
    A0,
    B { m: usize, n: usize },
    C { a: usize, b: usize, c: usize },
}

impl FamilyMeta {
    pub fn id(&self) -> &'static str {
        match self {
            FamilyMeta::A => "SYS-A",
            FamilyMeta::A0 => "SYS-A0",
            FamilyMeta::B { .. } => "SYS-B",
            FamilyMeta::C { .. } => "SYS-C",
        }
    }

    /// Dense families registered for this family.
    pub fn dense_family_ids(&self) -> &'static [&'static str] {
        match self {
            FamilyMeta::A | FamilyMeta::A0 => &["pq", "full"],
            FamilyMeta::B { .. } => &["length", "full"],
            FamilyMeta::C { .. } => &["coordinate", "full"],
        }
    }
}

fn finish(sys: SymmetricSystem, caps: Caps, meta: FamilyMeta) -> Result<Universe> {
    sys.validate().into_result()?;
    let mut u = Universe::new(sys, caps);
    u.set_family(meta);
    Ok(u)
}

fn small_order() -> Preorder {
    let ids = vec![TOP_TOKEN.to_string(), "p".into(), "q".into()];
    Preorder::new(ids, &[("p".into(), "1".into()), ("q".into(), "1".into())])
        .expect("fixed preorder is valid")
}

fn declare_small_names(u: &mut Universe) {
    let o = &u.system().order;
    let (p, q) = (o.lookup("p").unwrap(), o.lookup("q").unwrap());
    let zero = u.check(0).unwrap();
    let one = u.check(1).unwrap();
    let y = u.intern(vec![(zero, p), (zero, q)]);
    let xp = u.intern(vec![(zero, p)]);
    let xq = u.intern(vec![(zero, q)]);
    u.declare("zero", zero, false);
    u.declare("one", one, false);
    u.declare("y", y, false);
    u.declare("xp", xp, false);
    u.declare("xq", xq, false);
}

/// The three-condition fixture with the swap of `p` and `q`.
pub fn sys_a() -> Universe {
    sys_a_with(Caps::from_env())
}

pub fn sys_a_with(caps: Caps) -> Universe {
    let order = small_order();
    let tau = Automorphism {
        id: "tau".into(),
        map: vec![Cond(0), Cond(2), Cond(1)],
    };
    let group = AutomorphismGroup::generate(3, vec![tau], caps.group_order).expect("order 2");
    let filter = SubgroupFilter::new(vec![BaseEntry {
        label: "G".into(),
        members: group.full(),
    }])
    .expect("non-empty base");
    let sys = SymmetricSystem::new("SYS-A", order, group, filter);
    let mut u = finish(sys, caps, FamilyMeta::A).expect("SYS-A validates");
    declare_small_names(&mut u);
    u
}

/// The same preorder with the trivial group: every name is symmetric.
pub fn sys_a0() -> Universe {
    sys_a0_with(Caps::from_env())
}

pub fn sys_a0_with(caps: Caps) -> Universe {
    let order = small_order();
    let group = AutomorphismGroup::generate(3, Vec::new(), caps.group_order).expect("trivial");
    let filter = SubgroupFilter::new(vec![BaseEntry {
        label: "G".into(),
        members: group.full(),
    }])
    .expect("non-empty base");
    let sys = SymmetricSystem::new("SYS-A0", order, group, filter);
    let mut u = finish(sys, caps, FamilyMeta::A0).expect("SYS-A0 validates");
    declare_small_names(&mut u);
    u
}

fn check_range(what: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::Family(format!("parameter {what}={v} outside {lo}..={hi}")));
    }
    Ok(())
}

/// Value permutation generators on `n` symbols: a transposition and, when
/// `n ≥ 3`, the full cycle.
fn symbol_generators(n: usize) -> Vec<(&'static str, Vec<usize>)> {
    let mut out = Vec::new();
    if n >= 2 {
        let mut t: Vec<usize> = (0..n).collect();
        t.swap(0, 1);
        out.push(("t", t));
    }
    if n >= 3 {
        out.push(("c", (0..n).map(|i| (i + 1) % n).collect()));
    }
    out
}

pub fn sequence_id(s: &[usize]) -> String {
    if s.is_empty() {
        TOP_TOKEN.to_string()
    } else {
        let digits: String = s.iter().map(|d| char::from_digit(*d as u32, 10).unwrap()).collect();
        format!("s{digits}")
    }
}

/// Sequences of length at most `m` over `n` values.
pub fn sys_b(m: usize, n: usize) -> Result<Universe> {
    sys_b_with(m, n, Caps::from_env())
}

pub fn sys_b_with(m: usize, n: usize, caps: Caps) -> Result<Universe> {
    check_range("M", m, 1, 4)?;
    check_range("N", n, 1, 4)?;
    let mut seqs: Vec<Vec<usize>> = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for s in &layer {
            for v in 0..n {
                let mut t = s.clone();
                t.push(v);
                next.push(t);
            }
        }
        seqs.extend(next.iter().cloned());
        layer = next;
    }
    if seqs.len() > caps.conditions {
        return Err(Error::resource("conditions", caps.conditions));
    }
    let index: HashMap<Vec<usize>, Cond> = seqs
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), Cond(i as u32)))
        .collect();
    let pairs: Vec<(Cond, Cond)> = seqs
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| (index[s], index[&s[..s.len() - 1]]))
        .collect();
    let ids: Vec<String> = seqs.iter().map(|s| sequence_id(s)).collect();
    let order = Preorder::from_relation(ids, &pairs)?;

    let mut gens = Vec::new();
    for k in 0..m {
        for (tag, perm) in symbol_generators(n) {
            let map = seqs
                .iter()
                .map(|s| {
                    let mut t = s.clone();
                    if k < t.len() {
                        t[k] = perm[t[k]];
                    }
                    index[&t]
                })
                .collect();
            gens.push(Automorphism {
                id: format!("{tag}{k}"),
                map,
            });
        }
    }
    let group = AutomorphismGroup::generate(seqs.len(), gens, caps.group_order)?;
    let filter = SubgroupFilter::new(vec![BaseEntry {
        label: "G".into(),
        members: group.full(),
    }])?;
    let sys = SymmetricSystem::new(format!("SYS-B(M={m},N={n})"), order, group, filter);
    let mut u = finish(sys, caps, FamilyMeta::B { m, n })?;
    for i in 0..=m {
        let x = u.check(i)?;
        u.declare(format!("n{i}"), x, false);
    }
    Ok(u)
}

/// State of one `(α, n)` row of a coherent condition: undefined, or the set
/// of defined ordinals together with the common value.
type Row = Option<(BTreeSet<usize>, u8)>;

fn cell_token(alpha: usize, n: usize, gamma: usize, v: u8) -> String {
    format!("a{alpha}n{n}g{gamma}v{v}")
}

fn coherent_id(rows: &[Row], b: usize) -> String {
    let mut tokens = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        if let Some((gammas, v)) = row {
            for &g in gammas {
                tokens.push(cell_token(r / b, r % b, g, *v));
            }
        }
    }
    if tokens.is_empty() {
        TOP_TOKEN.to_string()
    } else {
        tokens.join("_")
    }
}

/// Parses a condition id of the coherent-function family into its cells
/// `(α, n, γ, value)`.
pub fn parse_cells(id: &str) -> Option<Vec<(usize, usize, usize, u8)>> {
    if id == TOP_TOKEN {
        return Some(Vec::new());
    }
    id.split('_')
        .map(|tok| {
            let rest = tok.strip_prefix('a')?;
            let (a, rest) = rest.split_once('n')?;
            let (n, rest) = rest.split_once('g')?;
            let (g, v) = rest.split_once('v')?;
            Some((a.parse().ok()?, n.parse().ok()?, g.parse().ok()?, v.parse().ok()?))
        })
        .collect()
}

pub fn sys_c(a: usize, b: usize, c: usize) -> Result<Universe> {
    sys_c_with(a, b, c, Caps::from_env())
}

pub fn sys_c_with(a: usize, b: usize, c: usize, caps: Caps) -> Result<Universe> {
    check_range("A", a, 1, 2)?;
    check_range("B", b, 1, 2)?;
    check_range("C", c, 1, 4)?;
    let per_row = (1usize << (c + 1)) - 1;
    let total = (0..a * b).try_fold(1usize, |acc, _| acc.checked_mul(per_row));
    match total {
        Some(t) if t <= caps.conditions => {}
        _ => return Err(Error::resource("conditions", caps.conditions)),
    }
    let mut row_states: Vec<Row> = vec![None];
    for mask in 1u32..(1 << c) {
        let set: BTreeSet<usize> = (0..c).filter(|g| mask & (1 << g) != 0).collect();
        for v in 0..2u8 {
            row_states.push(Some((set.clone(), v)));
        }
    }
    let mut conds: Vec<Vec<Row>> = vec![Vec::new()];
    for _ in 0..a * b {
        let mut next = Vec::with_capacity(conds.len() * row_states.len());
        for cnd in &conds {
            for st in &row_states {
                let mut t = cnd.clone();
                t.push(st.clone());
                next.push(t);
            }
        }
        conds = next;
    }
    let index: HashMap<Vec<Row>, Cond> = conds
        .iter()
        .enumerate()
        .map(|(i, r)| (r.clone(), Cond(i as u32)))
        .collect();
    // Immediate extensions: one more ordinal in one row.
    let mut pairs = Vec::new();
    for cnd in &conds {
        for (r, row) in cnd.iter().enumerate() {
            for g in 0..c {
                let ext: Vec<Row> = match row {
                    None => (0..2u8)
                        .map(|v| Some(([g].into(), v)))
                        .collect(),
                    Some((set, v)) if !set.contains(&g) => {
                        let mut s = set.clone();
                        s.insert(g);
                        vec![Some((s, *v))]
                    }
                    _ => Vec::new(),
                };
                for e in ext {
                    let mut t = cnd.clone();
                    t[r] = e;
                    pairs.push((index[&t], index[cnd]));
                }
            }
        }
    }
    let ids: Vec<String> = conds.iter().map(|r| coherent_id(r, b)).collect();
    let order = Preorder::from_relation(ids, &pairs)?;

    let mut gens = Vec::new();
    for alpha in 0..a {
        for (tag, perm) in symbol_generators(c) {
            let map = conds
                .iter()
                .map(|cnd| {
                    let t: Vec<Row> = cnd
                        .iter()
                        .enumerate()
                        .map(|(r, row)| match row {
                            Some((set, v)) if r / b == alpha => {
                                Some((set.iter().map(|&g| perm[g]).collect(), *v))
                            }
                            other => other.clone(),
                        })
                        .collect();
                    index[&t]
                })
                .collect();
            gens.push(Automorphism {
                id: format!("{tag}{alpha}"),
                map,
            });
        }
    }
    let group = AutomorphismGroup::generate(conds.len(), gens, caps.group_order)?;
    let mut base = Vec::new();
    for mask in 0u32..(1 << a) {
        let e: Vec<usize> = (0..a).filter(|x| mask & (1 << x) != 0).collect();
        base.push(BaseEntry {
            label: format!("fix{{{}}}", e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
            members: fix_in(&order, &group, &e),
        });
    }
    let filter = SubgroupFilter::new(base)?;
    let sys = SymmetricSystem::new(format!("SYS-C(A={a},B={b},C={c})"), order, group, filter);
    let mut u = finish(sys, caps, FamilyMeta::C { a, b, c })?;
    for k in 0..a.max(b) {
        let x = u.check(k)?;
        u.declare(format!("n{k}"), x, false);
    }
    Ok(u)
}

fn fix_in(order: &Preorder, group: &AutomorphismGroup, e: &[usize]) -> AutoSet {
    let supported: Vec<Cond> = order
        .conditions()
        .filter(|&c| {
            parse_cells(order.id(c)).is_some_and(|cells| cells.iter().all(|(a, ..)| e.contains(a)))
        })
        .collect();
    group.pointwise_fixer(&supported)
}

/// `fix(e)`: automorphisms fixing every condition supported on the
/// coordinates in `e`.
pub fn fix_subgroup(sys: &SymmetricSystem, e: &[usize]) -> AutoSet {
    fix_in(&sys.order, &sys.group, e)
}

fn coherent_params(u: &Universe) -> Result<(usize, usize, usize)> {
    match u.family() {
        Some(FamilyMeta::C { a, b, c }) => Ok((*a, *b, *c)),
        _ => Err(Error::Family("operation requires a SYS-C system".into())),
    }
}

/// `|{ π(q) : π ∈ fix(e) }|`
pub fn orbit_size(u: &Universe, q: Cond, e: &[usize]) -> Result<usize> {
    let (a, ..) = coherent_params(u)?;
    if let Some(bad) = e.iter().find(|&&x| x >= a) {
        return Err(Error::Family(format!("coordinate {bad} outside 0..{a}")));
    }
    let sys = u.system();
    let orbit: BTreeSet<Cond> = fix_subgroup(sys, e)
        .iter()
        .map(|&pi| sys.group.apply(pi, q))
        .collect();
    Ok(orbit.len())
}

/// The name of the `α`-th Cohen real:
/// `{ (ň, s) : s(α, n, γ) = 1 for some γ }`.
pub fn canonical_cohen_name(u: &Universe, alpha: usize) -> Result<NameId> {
    let (a, b, _) = coherent_params(u)?;
    if alpha >= a {
        return Err(Error::Family(format!("coordinate {alpha} outside 0..{a}")));
    }
    let o = &u.system().order;
    let mut entries = Vec::new();
    for n in 0..b {
        let nn = u.check(n)?;
        for s in o.conditions() {
            let cells = parse_cells(o.id(s)).unwrap_or_default();
            if cells.iter().any(|&(x, m, _, v)| x == alpha && m == n && v == 1) {
                entries.push((nn, s));
            }
        }
    }
    let name = u.intern(entries);
    let fix = fix_subgroup(u.system(), &[alpha]);
    if !u.is_hereditarily_symmetric(name) || !fix.is_subset(&u.sym_of_name(name)) {
        return Err(Error::validation(
            "cohen name symmetric",
            format!("the name of real {alpha} is not fixed by fix({{{alpha}}})"),
        ));
    }
    Ok(name)
}

/// The dense families registered with a family system.
pub fn dense_family(u: &Universe, id: &str) -> Result<DenseFamily> {
    let meta = u
        .family()
        .ok_or_else(|| Error::Family("system was not built from a family".into()))?;
    let o = &u.system().order;
    let zero = u.check(0)?;
    let fam = match (meta, id) {
        (FamilyMeta::A | FamilyMeta::A0, "pq") => {
            DenseFamily::new("pq", vec![zero], vec![o.lookup_set(["p", "q"])?])
        }
        (_, "full") => DenseFamily::new("full", vec![zero], vec![o.full_set()]),
        (FamilyMeta::B { m, .. }, "length") => {
            let mut index = Vec::new();
            let mut members = Vec::new();
            for i in 1..=*m {
                index.push(u.check(i)?);
                members.push(CondSet::from_iter_in(
                    o.len(),
                    o.conditions().filter(|&c| {
                        let id = o.id(c);
                        id != TOP_TOKEN && id.len() > i
                    }),
                ));
            }
            DenseFamily::new("length", index, members)
        }
        (FamilyMeta::C { a, b, .. }, "coordinate") => {
            let mut index = Vec::new();
            let mut members = Vec::new();
            for alpha in 0..*a {
                for n in 0..*b {
                    index.push(u.pair_name(u.check(alpha)?, u.check(n)?));
                    members.push(CondSet::from_iter_in(
                        o.len(),
                        o.conditions().filter(|&c| {
                            parse_cells(o.id(c))
                                .unwrap_or_default()
                                .iter()
                                .any(|&(x, m, ..)| x == alpha && m == n)
                        }),
                    ));
                }
            }
            DenseFamily::new("coordinate", index, members)
        }
        _ => {
            return Err(Error::Family(format!(
                "{} has no dense family `{id}`",
                meta.id()
            )))
        }
    };
    Ok(fam)
}

/// Builds a family system from its id and `k=v` parameters.
pub fn build(id: &str, params: &BTreeMap<String, usize>) -> Result<Universe> {
    build_with(id, params, Caps::from_env())
}

pub fn build_with(id: &str, params: &BTreeMap<String, usize>, caps: Caps) -> Result<Universe> {
    let get = |k: &str, default: Option<usize>| -> Result<usize> {
        params
            .get(k)
            .copied()
            .or(default)
            .ok_or_else(|| Error::Family(format!("{id} needs parameter {k}")))
    };
    let allowed: &[&str] = match id {
        "SYS-A" | "SYS-A0" => &[],
        "SYS-B" => &["M", "N"],
        "SYS-C" => &["A", "B", "C"],
        _ => return Err(Error::Family(format!("unknown family `{id}`"))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Family(format!("{id} takes no parameter {k}")));
    }
    match id {
        "SYS-A" => Ok(sys_a_with(caps)),
        "SYS-A0" => Ok(sys_a0_with(caps)),
        "SYS-B" => sys_b_with(get("M", None)?, get("N", None)?, caps),
        _ => sys_c_with(get("A", Some(1))?, get("B", Some(1))?, get("C", None)?, caps),
    }
}

/// A deterministic name corpus: every hereditarily symmetric name of rank
/// at most one, plus rank-two names built from at most `max_orbits` orbits,
/// thinned to `limit` when larger. The declared names come first.
pub fn corpus(u: &Universe, max_orbits: usize, limit: usize) -> Result<Vec<NameId>> {
    let full = u.system().order.full_set();
    let level = u.enumerate_hs(2, &full)?;
    let mut out: Vec<NameId> = Vec::new();
    let mut seen = BTreeSet::new();
    let declared = u
        .declared()
        .values()
        .copied()
        .filter(|&x| u.is_hereditarily_symmetric(x) && u.rank(x) <= 2);
    for x in declared.chain(level.iter().copied()) {
        if seen.insert(x) {
            out.push(x);
        }
    }
    for x in u.layer_sample(&level, &full, max_orbits, limit) {
        if seen.insert(x) {
            out.push(x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let a = sys_a();
        assert_eq!(a.system().order.len(), 3);
        assert_eq!(a.system().group.order(), 2);
        let b = sys_b(2, 2).unwrap();
        assert_eq!(b.system().order.len(), 7);
        assert_eq!(b.system().group.order(), 4);
        let b3 = sys_b(2, 3).unwrap();
        assert_eq!(b3.system().group.order(), 36);
        let c = sys_c(1, 1, 2).unwrap();
        assert_eq!(c.system().order.len(), 7);
        assert_eq!(sys_c(2, 1, 3).unwrap().system().order.len(), 225);
        assert!(matches!(sys_c(2, 2, 4), Err(Error::Resource { .. })));
        assert!(matches!(sys_b(5, 2), Err(Error::Family(_))));
    }

    #[test]
    fn coherence_forces_equal_values() {
        let c = sys_c(1, 1, 2).unwrap();
        let o = &c.system().order;
        for cond in o.conditions() {
            let cells = parse_cells(o.id(cond)).unwrap();
            let values: BTreeSet<u8> = cells.iter().map(|x| x.3).collect();
            assert!(values.len() <= 1, "{}", o.id(cond));
        }
        assert!(o.lookup("a0n0g0v0_a0n0g1v0").is_ok());
        assert!(o.lookup("a0n0g0v0_a0n0g1v1").is_err());
        let full = o.lookup("a0n0g0v1_a0n0g1v1").unwrap();
        let half = o.lookup("a0n0g1v1").unwrap();
        assert!(o.leq(full, half));
        assert!(!o.leq(half, full));
    }

    #[test]
    fn orbit_examples() {
        let c = sys_c(2, 1, 3).unwrap();
        let o = &c.system().order;
        assert_eq!(orbit_size(&c, o.top(), &[]).unwrap(), 1);
        let q = o.lookup("a1n0g0v1").unwrap();
        assert_eq!(orbit_size(&c, q, &[0]).unwrap(), 3);
        assert_eq!(orbit_size(&c, q, &[1]).unwrap(), 1);
        assert!(orbit_size(&sys_a(), Cond(0), &[]).is_err());
    }

    #[test]
    fn cohen_names() {
        let c = sys_c(1, 1, 1).unwrap();
        let name = canonical_cohen_name(&c, 0).unwrap();
        assert_eq!(c.entries(name).len(), 1);
        let c2 = sys_c(2, 1, 2).unwrap();
        for alpha in 0..2 {
            let name = canonical_cohen_name(&c2, alpha).unwrap();
            let fix = fix_subgroup(c2.system(), &[alpha]);
            assert!(fix.is_subset(&c2.sym_of_name(name)));
        }
    }

    #[test]
    fn corpus_is_deterministic_and_symmetric() {
        let b = sys_b(2, 2).unwrap();
        let c1 = corpus(&b, 2, 400).unwrap();
        let c2 = corpus(&b, 2, 400).unwrap();
        assert_eq!(c1, c2);
        assert!(c1.iter().all(|&x| b.is_hereditarily_symmetric(x)));
        assert!(c1.iter().any(|&x| b.rank(x) == 2));
    }
}
