//! Pretameness witnesses, stratification and the Separation and Collection
//! witness constructions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::atomic::Mode;
use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::extension::truth_lemma_check;
use crate::logic::{forcing_region, parse, Assignment, QuantifierBound};
use crate::names::{NameId, Rel, Universe};
use crate::order::{Cond, Preorder};
use crate::symmetry::AutoSet;

/// An indexed family `⟨D_i | i ∈ I⟩` of dense sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseFamily {
    pub label: String,
    pub index: Vec<NameId>,
    pub members: Vec<CondSet>,
}

impl DenseFamily {
    pub fn new(label: &str, index: Vec<NameId>, members: Vec<CondSet>) -> Self {
        DenseFamily {
            label: label.to_string(),
            index,
            members,
        }
    }

    pub fn validate(&self, u: &Universe) -> Result<()> {
        let o = &u.system().order;
        if self.index.len() != self.members.len() {
            return Err(Error::validation("dense family", "index and members differ in length"));
        }
        for (i, d) in self.members.iter().enumerate() {
            if !o.dense_below(d, o.top()) {
                return Err(Error::validation(
                    "dense family",
                    format!("member {} is not dense", u.show(self.index[i])),
                ));
            }
        }
        Ok(())
    }

    fn position(&self, x: NameId) -> Option<usize> {
        self.index.iter().position(|&y| y == x)
    }

    /// Elements `π` with `π[D_i] = D_{π(i)}` for every index `i`.
    pub fn symmetry_group(&self, u: &Universe) -> AutoSet {
        let g = &u.system().group;
        g.elements()
            .filter(|&pi| {
                self.index.iter().zip(&self.members).all(|(&i, d)| {
                    self.position(u.apply(pi, i))
                        .is_some_and(|k| g.image(pi, d) == self.members[k])
                })
            })
            .collect()
    }

    /// `I•` is symmetric and the family is invariant under a filter group.
    pub fn is_symmetric(&self, u: &Universe) -> bool {
        let bullet = u.bullet(&self.index);
        self.index.iter().all(|&i| u.is_hereditarily_symmetric(i))
            && u.is_symmetric(bullet)
            && u.system().in_filter(&self.symmetry_group(u))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PretamenessWitness {
    pub q: Cond,
    pub d: Vec<CondSet>,
}

impl PretamenessWitness {
    /// Re-checks `q ≤ p`, `d_i ⊆ D_i` and predensity below `q`.
    pub fn validate(&self, o: &Preorder, p: Cond, fam: &DenseFamily) -> Result<()> {
        if !o.leq(self.q, p) {
            return Err(Error::validation("pretameness witness", "q is not below p"));
        }
        if self.d.len() != fam.members.len() {
            return Err(Error::validation("pretameness witness", "wrong number of sets"));
        }
        for (d, big) in self.d.iter().zip(&fam.members) {
            if !d.is_subset(big) {
                return Err(Error::validation("pretameness witness", "d_i is not inside D_i"));
            }
            if !o.predense_below(d, self.q) {
                return Err(Error::validation("pretameness witness", "d_i is not predense below q"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateSizes {
    pub q: String,
    /// Minimal `|d_i|` for each index, in family order.
    pub sizes: Vec<usize>,
    pub exact: bool,
}

impl CandidateSizes {
    pub fn max(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PretameOutcome {
    Witness(PretamenessWitness),
    Refusal(Vec<CandidateSizes>),
}

/// Which `q` the search may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchScope {
    /// Any `q ≤ p`: `p` first, then the rest in condition order.
    BelowP,
    /// Only `q = p`.
    AtP,
}

/// Smallest `d ⊆ candidates` predense below `q`. Exact by branch and bound
/// for at most 64 conditions, greedy beyond that.
pub fn minimal_predense_cover(o: &Preorder, candidates: &CondSet, q: Cond) -> Option<(CondSet, bool)> {
    // Every extension of q has a minimal element below it, and t is
    // compatible with r exactly when some minimal m ≤ t satisfies m ≤ r. So
    // d is predense below q iff every minimal m ≤ q lies below a member of d.
    let mut targets: Vec<Cond> = Vec::new();
    for m in o.minimal_elements() {
        if o.leq(m, q) && !targets.iter().any(|&t| o.equivalent(t, m)) {
            targets.push(m);
        }
    }
    let covers: Vec<(Cond, Vec<usize>)> = candidates
        .iter()
        .map(|r| {
            let hit: Vec<usize> = targets
                .iter()
                .enumerate()
                .filter(|(_, &m)| o.leq(m, r))
                .map(|(i, _)| i)
                .collect();
            (r, hit)
        })
        .filter(|(_, hit)| !hit.is_empty())
        .collect();
    let n = targets.len();
    let mut reachable = vec![false; n];
    for (_, hit) in &covers {
        for &i in hit {
            reachable[i] = true;
        }
    }
    if reachable.iter().any(|r| !r) {
        return None;
    }
    let exact = o.len() <= 64;
    let chosen = if exact {
        let mut best: Option<Vec<usize>> = None;
        let mut cur = Vec::new();
        let mut covered = vec![0usize; n];
        branch(&covers, &mut covered, &mut cur, &mut best);
        best.unwrap()
    } else {
        greedy(&covers, n)
    };
    Some((
        CondSet::from_iter_in(o.len(), chosen.into_iter().map(|k| covers[k].0)),
        exact,
    ))
}

fn greedy(covers: &[(Cond, Vec<usize>)], n: usize) -> Vec<usize> {
    let mut covered = vec![false; n];
    let mut out = Vec::new();
    while covered.iter().any(|c| !c) {
        let (k, _) = covers
            .iter()
            .enumerate()
            .map(|(k, (_, hit))| (k, hit.iter().filter(|&&i| !covered[i]).count()))
            .max_by_key(|&(k, gain)| (gain, std::cmp::Reverse(k)))
            .unwrap();
        for &i in &covers[k].1 {
            covered[i] = true;
        }
        out.push(k);
    }
    out
}

fn branch(
    covers: &[(Cond, Vec<usize>)],
    covered: &mut Vec<usize>,
    cur: &mut Vec<usize>,
    best: &mut Option<Vec<usize>>,
) {
    if best.as_ref().is_some_and(|b| cur.len() >= b.len()) {
        return;
    }
    // Uncovered target with the fewest covering candidates.
    let mut pick: Option<(usize, usize)> = None;
    for t in 0..covered.len() {
        if covered[t] == 0 {
            let options = covers.iter().filter(|(_, hit)| hit.contains(&t)).count();
            if pick.is_none_or(|(_, o)| options < o) {
                pick = Some((t, options));
            }
        }
    }
    let Some((t, _)) = pick else {
        *best = Some(cur.clone());
        return;
    };
    if best.as_ref().is_some_and(|b| cur.len() + 1 >= b.len()) {
        return;
    }
    for (k, (_, hit)) in covers.iter().enumerate() {
        if !hit.contains(&t) {
            continue;
        }
        for &i in hit {
            covered[i] += 1;
        }
        cur.push(k);
        branch(covers, covered, cur, best);
        cur.pop();
        for &i in hit {
            covered[i] -= 1;
        }
    }
}

/// Looks for `q ≤ p` and sets `d_i ⊆ D_i` predense below `q` with every
/// `|d_i| ≤ size_cap`. On failure, reports the minimal sizes for each `q`.
pub fn pretameness_witness(
    u: &Universe,
    p: Cond,
    fam: &DenseFamily,
    size_cap: usize,
    scope: SearchScope,
) -> Result<PretameOutcome> {
    fam.validate(u)?;
    let o = &u.system().order;
    let mut qs = vec![p];
    if scope == SearchScope::BelowP {
        qs.extend(o.below(p).iter().filter(|&q| q != p));
    }
    let mut report = Vec::new();
    for q in qs {
        let mut ds = Vec::new();
        let mut all_exact = true;
        for d in &fam.members {
            let (cover, exact) = minimal_predense_cover(o, d, q)
                .ok_or_else(|| Error::validation("dense family", "member not predense"))?;
            all_exact &= exact;
            ds.push(cover);
        }
        let sizes: Vec<usize> = ds.iter().map(|d| d.count()).collect();
        if sizes.iter().all(|&s| s <= size_cap) {
            let w = PretamenessWitness { q, d: ds };
            w.validate(o, p, fam)?;
            return Ok(PretameOutcome::Witness(w));
        }
        report.push(CandidateSizes {
            q: o.id(q).to_string(),
            sizes,
            exact: all_exact,
        });
    }
    Ok(PretameOutcome::Refusal(report))
}

/// Smallest orbit closure `a ∪ ⋃{π[a] : π ∈ H}` over the filter base.
/// The closure is `H`-invariant, so its stabilizer contains `H` and lies in
/// the filter.
pub fn symmetric_superset(u: &Universe, a: &CondSet) -> CondSet {
    let sys = u.system();
    let mut best: Option<CondSet> = None;
    for entry in sys.filter.base() {
        let mut b = a.clone();
        for &pi in &entry.members {
            b.union_with(&sys.group.image(pi, a));
        }
        if best.as_ref().is_none_or(|x| b.count() < x.count()) {
            best = Some(b);
        }
    }
    best.expect("filter base is never empty")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StratificationReport {
    pub checked: usize,
    pub exhaustive: bool,
    pub failures: Vec<String>,
    /// A few `(a, b)` examples, smallest subsets first.
    pub examples: Vec<(String, String)>,
}

impl StratificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Every subset `a ⊆ P` has a symmetric superset. Exhaustive when
/// `2^|P| ≤ sample_cap`, otherwise a seeded sample of `sample_cap` subsets.
pub fn stratification_check(u: &Universe, sample_cap: usize) -> StratificationReport {
    let sys = u.system();
    let o = &sys.order;
    let n = o.len();
    let exhaustive = n < 63 && (1usize << n) <= sample_cap;
    let subsets: Vec<CondSet> = if exhaustive {
        (0..1u64 << n)
            .map(|mask| CondSet::from_iter_in(n, (0..n).filter(|i| mask & (1 << i) != 0).map(|i| Cond(i as u32))))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let conds: Vec<Cond> = o.conditions().collect();
        (0..sample_cap)
            .map(|k| {
                let size = 1 + k % n.clamp(1, 4);
                CondSet::from_iter_in(n, conds.choose_multiple(&mut rng, size).copied())
            })
            .collect()
    };
    let mut failures = Vec::new();
    let mut examples = Vec::new();
    for a in &subsets {
        let b = symmetric_superset(u, a);
        if !a.is_subset(&b) || !sys.is_symmetric_set(&b) {
            failures.push(o.format_set(a));
        } else if examples.len() < 4 && a.count() == 1 {
            examples.push((o.format_set(a), o.format_set(&b)));
        }
    }
    StratificationReport {
        checked: subsets.len(),
        exhaustive,
        failures,
        examples,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricWitness {
    pub witness: PretamenessWitness,
    pub b: CondSet,
    /// The group for which `π[d_i] = d_{π(i)}` was verified.
    pub certified: AutoSet,
}

/// A symmetric refinement of a plain pretameness witness: `d_i = D_i ∩ b`
/// for a symmetric `b` containing the plain witness.
pub fn symmetric_witness(u: &Universe, p: Cond, fam: &DenseFamily) -> Result<SymmetricWitness> {
    let o = &u.system().order;
    let strat = stratification_check(u, 1 << 12);
    if !strat.passed() {
        return Err(Error::validation("stratified", "system failed the stratification check"));
    }
    if !fam.is_symmetric(u) {
        return Err(Error::validation("symmetric family", format!("`{}` is not symmetric", fam.label)));
    }
    let plain = match pretameness_witness(u, p, fam, usize::MAX, SearchScope::BelowP)? {
        PretameOutcome::Witness(w) => w,
        PretameOutcome::Refusal(_) => unreachable!("an unbounded cap always succeeds"),
    };
    let mut a = o.empty_set();
    for d in &plain.d {
        a.union_with(d);
    }
    let b = symmetric_superset(u, &a);
    let d: Vec<CondSet> = fam.members.iter().map(|big| big.intersection(&b)).collect();
    let witness = PretamenessWitness { q: plain.q, d };
    witness.validate(o, p, fam)?;
    let g = &u.system().group;
    let sym_b = u.system().sym_of_condition_set(&b);
    let certified: AutoSet = fam.symmetry_group(u).intersection(&sym_b).copied().collect();
    for &pi in &certified {
        for (k, &i) in fam.index.iter().enumerate() {
            let j = fam.position(u.apply(pi, i)).expect("family group permutes the index");
            if g.image(pi, &witness.d[k]) != witness.d[j] {
                return Err(Error::validation(
                    "symmetric witness",
                    format!("{} does not carry d_{} to d_{}", g.id(pi), u.show(i), u.show(fam.index[j])),
                ));
            }
        }
    }
    if !u.system().in_filter(&certified) {
        return Err(Error::validation("symmetric witness", "certified group is not in the filter"));
    }
    Ok(SymmetricWitness { witness, b, certified })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstructionReport {
    pub name: String,
    pub hereditarily_symmetric: bool,
    pub forced: bool,
    pub truth_lemma: bool,
    pub detail: String,
}

impl ConstructionReport {
    pub fn passed(&self) -> bool {
        self.hereditarily_symmetric && self.forced && self.truth_lemma
    }
}

/// `u = { (y, s) : s ∈ b, ∃r ((y, r) ∈ z, s ≤ r, s ⊩ y ∈ Γ) }`, verified to
/// be forced by `p` equal to `z ∩ Γ`.
pub fn separation_witness(
    u: &Universe,
    z: NameId,
    gamma: NameId,
    p: Cond,
    b: Option<&CondSet>,
) -> Result<(NameId, ConstructionReport)> {
    let o = &u.system().order;
    let full = o.full_set();
    let b = b.unwrap_or(&full);
    let mut entries = Vec::new();
    for &(y, r) in u.entries(z).iter() {
        let forced = u.atomic_region(y, Rel::In, gamma);
        for s in o.below(r).iter() {
            if b.contains(s) && forced.contains(s) {
                entries.push((y, s));
            }
        }
    }
    let w = u.intern(entries);
    let hs = u.is_hereditarily_symmetric(w);
    let phi = parse("(all y in z . (y in w <-> y in G)) & (all y in w . y in z)")?;
    let env = Assignment::new().set("z", z).set("w", w).class("G", gamma);
    let qb = QuantifierBound::new(1, full.clone());
    let (forced, truth) = if hs {
        let (region, _) = forcing_region(u, &phi, &env, &qb, Mode::Strict)?;
        let truth = truth_lemma_check(u, &phi, &env, &qb)?;
        (region.contains(p), truth.passed())
    } else {
        (false, false)
    };
    Ok((
        w,
        ConstructionReport {
            name: u.show(w),
            hereditarily_symmetric: hs,
            forced,
            truth_lemma: truth,
            detail: format!("{} entries", u.entries(w).len()),
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollectionReport {
    pub premise: bool,
    pub alpha: Option<usize>,
    pub report: Option<ConstructionReport>,
}

impl CollectionReport {
    pub fn passed(&self) -> bool {
        self.premise && self.report.as_ref().is_some_and(|r| r.passed())
    }
}

/// Scans `α = 1, 2, …, max_alpha` for the first `(HS_α^b)•` with
/// `p ⊩ ∀x ∈ z ∃y ∈ (HS_α^b)• ⟨x, y⟩ ∈ Γ`, after checking the premise
/// `p ⊩ ∀x ∈ z ∃y ⟨x, y⟩ ∈ Γ` with the given quantifier bound.
pub fn collection_witness(
    u: &Universe,
    z: NameId,
    gamma: NameId,
    p: Cond,
    qb: &QuantifierBound,
    max_alpha: usize,
) -> Result<(Option<NameId>, CollectionReport)> {
    let premise_phi = parse("all x in z . ex y . <x,y> in G")?;
    let env = Assignment::new().set("z", z).class("G", gamma);
    let (premise, _) = forcing_region(u, &premise_phi, &env, qb, Mode::Strict)?;
    if !premise.contains(p) {
        return Ok((None, CollectionReport { premise: false, alpha: None, report: None }));
    }
    let phi = parse("all x in z . ex y in w . <x,y> in G")?;
    let bound1 = QuantifierBound::new(1, qb.b.clone());
    for alpha in 1..=max_alpha {
        let universe = u.enumerate_hs(alpha, &qb.b)?;
        let w = u.bullet(&universe);
        let env = env.clone().set("w", w);
        let (region, exact) = forcing_region(u, &phi, &env, &bound1, Mode::Strict)?;
        if region.contains(p) && exact {
            let truth = truth_lemma_check(u, &phi, &env, &bound1)?;
            let report = ConstructionReport {
                name: format!("(HS_{alpha}^b)•"),
                hereditarily_symmetric: u.is_hereditarily_symmetric(w),
                forced: true,
                truth_lemma: truth.passed(),
                detail: format!("{} names", universe.len()),
            };
            return Ok((
                Some(w),
                CollectionReport { premise: true, alpha: Some(alpha), report: Some(report) },
            ));
        }
    }
    Ok((None, CollectionReport { premise: true, alpha: None, report: None }))
}

/// Names of the form `{ (⟨x, y⟩, 1) : (x, y) ∈ pairs }`, used as relation
/// class names.
pub fn relation_class(u: &Universe, pairs: &[(NameId, NameId)]) -> NameId {
    let names: Vec<NameId> = pairs.iter().map(|&(x, y)| u.pair_name(x, y)).collect();
    u.bullet(&names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    #[test]
    fn finite_family_has_trivial_witness() {
        let b = families::sys_b(2, 2).unwrap();
        let fam = families::dense_family(&b, "length").unwrap();
        let top = b.system().order.top();
        match pretameness_witness(&b, top, &fam, 100, SearchScope::AtP).unwrap() {
            PretameOutcome::Witness(w) => {
                assert_eq!(w.q, top);
                assert_eq!(w.d.iter().map(|d| d.count()).collect::<Vec<_>>(), vec![2, 4]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn capped_search_moves_below_root() {
        let b = families::sys_b(2, 2).unwrap();
        let fam = families::dense_family(&b, "length").unwrap();
        let o = &b.system().order;
        match pretameness_witness(&b, o.top(), &fam, 1, SearchScope::BelowP).unwrap() {
            PretameOutcome::Witness(w) => assert_eq!(o.id(w.q), "s00"),
            other => panic!("{other:?}"),
        }
        match pretameness_witness(&b, o.top(), &fam, 1, SearchScope::AtP).unwrap() {
            PretameOutcome::Refusal(r) => {
                assert_eq!(r.len(), 1);
                assert_eq!(r[0].sizes, vec![2, 4]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stratification_examples() {
        let a = families::sys_a();
        let o = &a.system().order;
        let p = o.lookup_set(["p"]).unwrap();
        assert_eq!(symmetric_superset(&a, &p), o.lookup_set(["p", "q"]).unwrap());
        assert_eq!(symmetric_superset(&a, &o.full_set()), o.full_set());
        let rep = stratification_check(&a, 1 << 10);
        assert!(rep.exhaustive && rep.passed());
        assert_eq!(rep.checked, 8);
    }

    #[test]
    fn symmetric_witness_on_pq() {
        let a = families::sys_a();
        let fam = families::dense_family(&a, "pq").unwrap();
        let o = &a.system().order;
        let w = symmetric_witness(&a, o.top(), &fam).unwrap();
        assert_eq!(w.b, o.lookup_set(["p", "q"]).unwrap());
        assert_eq!(w.certified, a.system().group.full());
        assert_eq!(w.witness.d, vec![o.lookup_set(["p", "q"]).unwrap()]);
    }

    #[test]
    fn separation_examples() {
        let a = families::sys_a();
        let y = a.lookup("y").unwrap();
        let zero = a.check(0).unwrap();
        let top = a.system().order.top();
        let gamma = a.bullet(&[zero]);
        let (w, rep) = separation_witness(&a, y, gamma, top, None).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(a.entries(w).len() >= 2);
        let empty = a.bullet(&[]);
        let (w0, rep0) = separation_witness(&a, y, empty, top, None).unwrap();
        assert!(rep0.passed());
        assert!(a.entries(w0).is_empty());
    }
}
