//! Generic filters, evaluation of names, satisfaction in the symmetric
//! extension, and the truth lemma and axiom checks built on them.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::atomic::Mode;
use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::hf::HfSet;
use crate::logic::{
    forcing_region, guard, parse, Assignment, Evaluator, Formula, QuantifierBound, Term, HS_CLASS,
};
use crate::names::{NameId, Rel, Universe};
use crate::order::Cond;

/// Largest preorder for which genericity is re-verified against every
/// symmetrically dense subset.
const EXHAUSTIVE_GENERICITY: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenericFilter {
    pub members: CondSet,
}

impl GenericFilter {
    pub fn contains(&self, p: Cond) -> bool {
        self.members.contains(p)
    }
}

/// Upward-closed, contains `1`, and any two members have a common extension
/// inside.
pub fn is_filter(u: &Universe, g: &CondSet) -> bool {
    let o = &u.system().order;
    if !g.contains(o.top()) || o.up_closure(g) != *g {
        return false;
    }
    g.iter().all(|a| {
        g.iter()
            .all(|b| o.below(a).intersection(o.below(b)).intersects(g))
    })
}

/// Meets every symmetrically dense subset, checked by enumerating all
/// subsets of `P`. `None` when the preorder is too large for that.
pub fn meets_all_symmetric_dense(u: &Universe, g: &CondSet) -> Option<bool> {
    let sys = u.system();
    let n = sys.order.len();
    if n > EXHAUSTIVE_GENERICITY {
        return None;
    }
    for mask in 1u64..(1 << n) {
        let d = CondSet::from_iter_in(n, (0..n).filter(|i| mask & (1 << i) != 0).map(|i| Cond(i as u32)));
        if !d.intersects(g) && sys.is_symmetrically_dense(&d) {
            return Some(false);
        }
    }
    Some(true)
}

/// All generic filters: the upward closures of minimal conditions, one per
/// equivalence class.
///
/// The minimal conditions form a dense set fixed by every automorphism, so
/// a generic filter contains one, and then equals its upward closure. Each
/// such closure meets every dense set. On small preorders this argument is
/// re-checked against every symmetrically dense subset.
pub fn enumerate_generics(u: &Universe) -> Result<Vec<GenericFilter>> {
    let o = &u.system().order;
    let mut out: Vec<GenericFilter> = Vec::new();
    let mut seen = BTreeSet::new();
    for m in o.minimal_elements() {
        let g = o.above(m).clone();
        if !seen.insert(g.clone()) {
            continue;
        }
        if !is_filter(u, &g) {
            return Err(Error::validation("generic filter", format!("↑{} is not a filter", o.id(m))));
        }
        if meets_all_symmetric_dense(u, &g) == Some(false) {
            return Err(Error::validation(
                "generic filter",
                format!("↑{} misses a symmetrically dense set", o.id(m)),
            ));
        }
        out.push(GenericFilter { members: g });
    }
    Ok(out)
}

/// `x^G = { y^G : ∃p ∈ G, (y, p) ∈ x }`
pub fn evaluate(u: &Universe, x: NameId, g: &GenericFilter) -> HfSet {
    Evaluation::new(u, g).value(x)
}

/// Memoized evaluation under one filter.
pub struct Evaluation<'a> {
    u: &'a Universe,
    g: &'a GenericFilter,
    memo: std::cell::RefCell<HashMap<NameId, HfSet>>,
}

impl<'a> Evaluation<'a> {
    pub fn new(u: &'a Universe, g: &'a GenericFilter) -> Self {
        Evaluation {
            u,
            g,
            memo: Default::default(),
        }
    }

    pub fn value(&self, x: NameId) -> HfSet {
        if let Some(v) = self.memo.borrow().get(&x) {
            return v.clone();
        }
        let v = HfSet(
            self.u
                .entries(x)
                .iter()
                .filter(|(_, p)| self.g.contains(*p))
                .map(|&(y, _)| self.value(y))
                .collect(),
        );
        self.memo.borrow_mut().insert(x, v.clone());
        v
    }
}

/// Tarskian satisfaction in the finite structure of evaluations of the
/// bounded name universe. Bounded quantifiers range over the elements of
/// their bound.
pub fn satisfies(
    u: &Universe,
    phi: &Formula,
    a: &Assignment,
    g: &GenericFilter,
    qb: &QuantifierBound,
) -> Result<bool> {
    let ev = Evaluator::new(u, qb.clone(), Mode::Strict);
    ev.check_assignment(phi, a)?;
    let model = Model::new(u, g, &ev);
    let env = ValueEnv {
        sets: a.sets.iter().map(|(k, &x)| (k.clone(), model.eval.value(x))).collect(),
        classes: a.classes.iter().map(|(k, &x)| (k.clone(), model.eval.value(x))).collect(),
    };
    model.sat(phi, &env)
}

#[derive(Clone, Default)]
struct ValueEnv {
    sets: HashMap<String, HfSet>,
    classes: HashMap<String, HfSet>,
}

struct Model<'a> {
    eval: Evaluation<'a>,
    ev: &'a Evaluator<'a>,
    domain: std::cell::OnceCell<Vec<HfSet>>,
}

impl<'a> Model<'a> {
    fn new(u: &'a Universe, g: &'a GenericFilter, ev: &'a Evaluator<'a>) -> Self {
        Model {
            eval: Evaluation::new(u, g),
            ev,
            domain: Default::default(),
        }
    }

    fn domain(&self) -> Result<&[HfSet]> {
        if self.domain.get().is_none() {
            let names = self.ev.universe()?;
            let vals: BTreeSet<HfSet> = names.iter().map(|&x| self.eval.value(x)).collect();
            let _ = self.domain.set(vals.into_iter().collect());
        }
        Ok(self.domain.get().unwrap())
    }

    fn term(&self, t: &Term, env: &ValueEnv) -> Result<HfSet> {
        match t {
            Term::Var(v) => env
                .sets
                .get(v)
                .cloned()
                .ok_or_else(|| Error::Scope(format!("set variable `{v}` is not bound"))),
            Term::Pair(a, b) => Ok(HfSet::ordered_pair(self.term(a, env)?, self.term(b, env)?)),
        }
    }

    fn class(&self, c: &str, env: &ValueEnv) -> Result<HfSet> {
        match env.classes.get(c) {
            Some(v) => Ok(v.clone()),
            None if c == HS_CLASS => Ok(self.eval.value(self.ev.hs_class()?)),
            None => Err(Error::Scope(format!("class variable `{c}` is not bound"))),
        }
    }

    fn sat(&self, phi: &Formula, env: &ValueEnv) -> Result<bool> {
        Ok(match phi {
            Formula::Atom(a, rel, b) => {
                let (x, y) = (self.term(a, env)?, self.term(b, env)?);
                match rel {
                    Rel::In => y.contains(&x),
                    Rel::Sub => x.is_subset(&y),
                    Rel::Eq => x == y,
                }
            }
            Formula::MemberClass(t, c) => self.class(c, env)?.contains(&self.term(t, env)?),
            Formula::EqClass(a, b) => {
                let (ca, cb) = (self.class(a, env)?, self.class(b, env)?);
                self.domain()?.iter().all(|v| ca.contains(v) == cb.contains(v))
            }
            Formula::Not(a) => !self.sat(a, env)?,
            Formula::And(a, b) => self.sat(a, env)? && self.sat(b, env)?,
            Formula::Exists(v, body) if guard(v, body).is_some() => {
                let (t, rest) = guard(v, body).unwrap();
                let bound = self.term(t, env)?;
                let mut env2 = env.clone();
                for z in bound.iter() {
                    env2.sets.insert(v.clone(), z.clone());
                    if rest.map_or(Ok(true), |r| self.sat(r, &env2))? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Exists(v, body) => {
                let mut env2 = env.clone();
                for z in self.domain()? {
                    env2.sets.insert(v.clone(), z.clone());
                    if self.sat(body, &env2)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::ExistsIn(v, t, body) => {
                let bound = self.term(t, env)?;
                let mut env2 = env.clone();
                for z in bound.iter() {
                    env2.sets.insert(v.clone(), z.clone());
                    if self.sat(body, &env2)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::ExistsClass(v, body) => {
                let mut env2 = env.clone();
                for z in self.domain()? {
                    env2.classes.insert(v.clone(), z.clone());
                    if self.sat(body, &env2)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruthReport {
    pub formula: String,
    pub generics: usize,
    pub exact: bool,
    pub violations: Vec<String>,
}

impl TruthReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} ({} generics, {})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.generics,
            if self.exact { "exact" } else { "approximate" }
        )
    }
}

/// For every generic `G`: `M[G] ⊨ φ` iff some `p ∈ G` forces `φ`; and `p`
/// forces `φ` iff every generic containing `p` satisfies it.
pub fn truth_lemma_check(
    u: &Universe,
    phi: &Formula,
    a: &Assignment,
    qb: &QuantifierBound,
) -> Result<TruthReport> {
    truth_lemma_check_with(u, phi, a, qb, &enumerate_generics(u)?)
}

/// [`truth_lemma_check`] against a precomputed list of generics.
pub fn truth_lemma_check_with(
    u: &Universe,
    phi: &Formula,
    a: &Assignment,
    qb: &QuantifierBound,
    generics: &[GenericFilter],
) -> Result<TruthReport> {
    let o = &u.system().order;
    let (region, exact) = forcing_region(u, phi, a, qb, Mode::Strict)?;
    let mut sat = Vec::with_capacity(generics.len());
    let mut violations = Vec::new();
    for g in generics {
        let s = satisfies(u, phi, a, g, qb)?;
        let forced_in_g = g.members.intersects(&region);
        if s != forced_in_g {
            violations.push(format!(
                "generic {}: satisfied {s}, forced by a member {forced_in_g}",
                o.format_set(&g.members)
            ));
        }
        sat.push(s);
    }
    for p in o.conditions() {
        let all = generics
            .iter()
            .zip(&sat)
            .filter(|(g, _)| g.contains(p))
            .all(|(_, &s)| s);
        if all != region.contains(p) {
            violations.push(format!(
                "condition {}: forces {}, every generic through it satisfies {all}",
                o.id(p),
                region.contains(p)
            ));
        }
    }
    Ok(TruthReport {
        formula: phi.to_string(),
        generics: generics.len(),
        exact,
        violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub instance: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    /// No failures; skipped checks do not count as failures.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn count(&self, s: Status) -> usize {
        self.checks.iter().filter(|c| c.status == s).count()
    }
}

/// `u = (⋃{ dom(y) : y ∈ dom(x) })•`
pub fn union_name(u: &Universe, x: NameId) -> NameId {
    let mut members = BTreeSet::new();
    for y in u.domain(x) {
        members.extend(u.domain(y));
    }
    u.bullet(&members.into_iter().collect::<Vec<_>>())
}

/// `Π = { (x, p) : x ∈ HS_α^b, p ⊩ φ(x, a) }`
pub fn comprehension_name(
    u: &Universe,
    phi: &Formula,
    var: &str,
    a: &Assignment,
    qb: &QuantifierBound,
) -> Result<NameId> {
    let mut entries = Vec::new();
    for &x in u.enumerate_hs(qb.alpha, &qb.b)?.iter() {
        let env = a.clone().set(var, x);
        let (region, _) = forcing_region(u, phi, &env, qb, Mode::Strict)?;
        entries.extend(region.iter().map(|p| (x, p)));
    }
    Ok(u.intern(entries))
}

struct Checker<'a> {
    u: &'a Universe,
    qb: &'a QuantifierBound,
    report: AxiomReport,
}

impl Checker<'_> {
    /// Records whether `1` forces the instance and whether the truth lemma
    /// holds for it.
    fn forced_by_top(&mut self, axiom: &str, instance: String, phi: &Formula, env: &Assignment) -> Result<()> {
        let top = self.u.system().order.top();
        let (region, exact) = forcing_region(self.u, phi, env, self.qb, Mode::Strict)?;
        let truth = truth_lemma_check(self.u, phi, env, self.qb)?;
        let ok = region.contains(top) && truth.passed();
        self.report.checks.push(AxiomCheck {
            axiom: axiom.into(),
            instance,
            status: if ok { Status::Pass } else { Status::Fail },
            detail: format!(
                "forced by 1: {}; truth lemma: {}",
                region.contains(top),
                truth.summary()
            ) + if exact { "" } else { "; approximate" },
        });
        Ok(())
    }
}

/// Instances of the axioms preserved by every symmetric system, over the
/// given parameter names and comprehension formulas (each with the free
/// variable `x` and parameter `v`). A comprehension name `Π` is checked
/// against the bounded universe `H = (HS_α^b)•` it was collected from:
/// `1 ⊩ (∀x ∈ H (x ∈ Π ↔ φ)) ∧ (∀x ∈ Π x ∈ H)`.
pub fn axiom_preservation_check(
    u: &Universe,
    names: &[NameId],
    comprehension: &[&str],
    qb: &QuantifierBound,
) -> Result<AxiomReport> {
    let mut c = Checker {
        u,
        qb,
        report: AxiomReport::default(),
    };
    let ext = parse("(all z in x . z in y) & (all z in y . z in x) -> x = y")?;
    let pair = parse("x in w & y in w")?;
    let union = parse("all y in x . all z in y . z in w")?;
    let regularity = parse("(ex z in x . z = z) -> ex z in x . !(ex t in z . t in x)")?;
    let class_ext = parse("(all x . (x in X <-> x in Y)) -> X = Y")?;

    for &x in names {
        u.require_hs(x)?;
    }
    for &x in names {
        for &y in names {
            let env = Assignment::new().set("x", x).set("y", y);
            c.forced_by_top("extensionality", format!("{}, {}", u.show(x), u.show(y)), &ext, &env)?;
            let w = u.bullet(&[x, y]);
            if !u.is_hereditarily_symmetric(w) {
                c.report.checks.push(AxiomCheck {
                    axiom: "pairing".into(),
                    instance: format!("{}, {}", u.show(x), u.show(y)),
                    status: Status::Fail,
                    detail: "pair name is not hereditarily symmetric".into(),
                });
                continue;
            }
            c.forced_by_top("pairing", format!("{}, {}", u.show(x), u.show(y)), &pair, &env.set("w", w))?;
        }
    }
    for &x in names {
        let w = union_name(u, x);
        let env = Assignment::new().set("x", x).set("w", w);
        c.forced_by_top("union", u.show(x), &union, &env)?;
        c.forced_by_top("regularity", u.show(x), &regularity, &Assignment::new().set("x", x))?;
    }
    c.report.checks.push(AxiomCheck {
        axiom: "infinity".into(),
        instance: "omega".into(),
        status: Status::Skipped,
        detail: "the check name of omega is infinite".into(),
    });
    if let (Some(&g1), Some(&g2)) = (names.first(), names.last()) {
        let env = Assignment::new().class("X", g1).class("Y", g2);
        c.forced_by_top("class extensionality", format!("{}, {}", u.show(g1), u.show(g2)), &class_ext, &env)?;
    }
    for src in comprehension {
        let phi = parse(src)?;
        for &v in names.iter().take(3) {
            let params = Assignment::new().set("v", v);
            let pi = comprehension_name(u, &phi, "x", &params, qb)?;
            let inst = format!("{src} [v = {}]", u.show(v));
            if !u.is_hereditarily_symmetric(pi) {
                c.report.checks.push(AxiomCheck {
                    axiom: "comprehension".into(),
                    instance: inst,
                    status: Status::Fail,
                    detail: "comprehension name is not hereditarily symmetric".into(),
                });
                continue;
            }
            let hs = u.bullet(&u.enumerate_hs(qb.alpha, &qb.b)?);
            let bicond = Formula::and(
                Formula::forall_in(
                    "x",
                    Term::var("hs"),
                    Formula::iff(Formula::atom("x", Rel::In, "cp"), phi.clone()),
                ),
                Formula::forall_in("x", Term::var("cp"), Formula::atom("x", Rel::In, "hs")),
            );
            let env = params.set("cp", pi).set("hs", hs);
            c.forced_by_top("comprehension", inst, &bicond, &env)?;
        }
    }
    Ok(c.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    #[test]
    fn generics_of_fixtures() {
        for u in [families::sys_a(), families::sys_a0()] {
            let o = &u.system().order;
            let gs = enumerate_generics(&u).unwrap();
            let shown: Vec<String> = gs.iter().map(|g| o.format_set(&g.members)).collect();
            assert_eq!(shown, vec!["{1,p}", "{1,q}"]);
        }
    }

    #[test]
    fn evaluation_examples() {
        let a = families::sys_a();
        let gs = enumerate_generics(&a).unwrap();
        assert_eq!(evaluate(&a, a.check(0).unwrap(), &gs[0]), HfSet::empty());
        assert_eq!(evaluate(&a, a.lookup("y").unwrap(), &gs[0]), HfSet::numeral(1));
        let a0 = families::sys_a0();
        let gs0 = enumerate_generics(&a0).unwrap();
        assert_eq!(evaluate(&a0, a0.lookup("xp").unwrap(), &gs0[1]), HfSet::empty());
        assert_eq!(evaluate(&a0, a0.check(3).unwrap(), &gs0[1]), HfSet::numeral(3));
    }

    #[test]
    fn satisfaction_examples() {
        let a = families::sys_a();
        let qb = QuantifierBound::full(&a, 2);
        let gs = enumerate_generics(&a).unwrap();
        let y = a.lookup("y").unwrap();
        let phi = parse("ex z . z in y").unwrap();
        assert!(satisfies(&a, &phi, &Assignment::new().set("y", y), &gs[0], &qb).unwrap());
        let refl = parse("x = x").unwrap();
        assert!(satisfies(&a, &refl, &Assignment::new().set("x", y), &gs[1], &qb).unwrap());

        let a0 = families::sys_a0();
        let gs0 = enumerate_generics(&a0).unwrap();
        let neg = parse("!(ex z . z in x)").unwrap();
        let xp = a0.lookup("xp").unwrap();
        assert!(satisfies(&a0, &neg, &Assignment::new().set("x", xp), &gs0[1], &qb).unwrap());
    }

    #[test]
    fn truth_lemma_fixture() {
        let a = families::sys_a();
        let qb = QuantifierBound::full(&a, 2);
        let phi = parse("ex z . z in y").unwrap();
        let rep = truth_lemma_check(&a, &phi, &Assignment::new().set("y", a.lookup("y").unwrap()), &qb).unwrap();
        assert_eq!(rep.summary(), "PASS (2 generics, exact)");
    }

    #[test]
    fn axioms_on_sys_a() {
        let a = families::sys_a();
        let qb = QuantifierBound::full(&a, 3);
        let names = vec![a.check(0).unwrap(), a.lookup("y").unwrap()];
        let rep = axiom_preservation_check(&a, &names, &["ex w . w in x"], &qb).unwrap();
        assert!(rep.passed(), "{:#?}", rep.checks.iter().find(|c| c.status == Status::Fail));
        assert_eq!(rep.count(Status::Skipped), 1);
    }

    #[test]
    fn union_name_shape() {
        let a = families::sys_a();
        let two = a.check(2).unwrap();
        let w = union_name(&a, two);
        assert_eq!(w, a.check(1).unwrap());
    }
}
