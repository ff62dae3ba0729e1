//! Forcing for formulas, computed as regions of conditions.
//!
//! Set and class quantifiers range over a bounded name universe. Bounded
//! quantifiers `ex z in t` range over the domain of `t` and need no bound.

use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::atomic::Mode;
use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::names::{NameId, Rel, Universe};
use crate::order::Cond;

use super::{guard, Assignment, Formula, Term, HS_CLASS};

/// Finite stand-in for quantification over all names: rank below `alpha`,
/// appearing conditions inside `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuantifierBound {
    pub alpha: usize,
    pub b: CondSet,
}

impl QuantifierBound {
    pub fn new(alpha: usize, b: CondSet) -> Self {
        QuantifierBound { alpha, b }
    }

    pub fn full(u: &Universe, alpha: usize) -> Self {
        QuantifierBound::new(alpha, u.system().order.full_set())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Forced {
    pub holds: bool,
    /// False when truncating the quantifier universe might have changed the
    /// answer.
    pub exact: bool,
}

type TraceKey = (usize, Assignment);

pub struct Evaluator<'u> {
    u: &'u Universe,
    mode: Mode,
    qb: QuantifierBound,
    universe: OnceCell<Arc<Vec<NameId>>>,
    hs_class: OnceCell<NameId>,
    trace: Option<RefCell<HashMap<TraceKey, CondSet>>>,
}

impl<'u> Evaluator<'u> {
    pub fn new(u: &'u Universe, qb: QuantifierBound, mode: Mode) -> Self {
        Evaluator {
            u,
            mode,
            qb,
            universe: OnceCell::new(),
            hs_class: OnceCell::new(),
            trace: None,
        }
    }

    fn traced(mut self) -> Self {
        self.trace = Some(RefCell::new(HashMap::new()));
        self
    }

    pub fn bound(&self) -> &QuantifierBound {
        &self.qb
    }

    /// The names quantifiers range over.
    pub fn universe(&self) -> Result<Arc<Vec<NameId>>> {
        if let Some(v) = self.universe.get() {
            return Ok(v.clone());
        }
        let v = match self.mode {
            Mode::Strict => self.u.enumerate_hs(self.qb.alpha, &self.qb.b)?,
            Mode::Plain => self.u.enumerate_all(self.qb.alpha, &self.qb.b)?,
        };
        Ok(self.universe.get_or_init(|| v).clone())
    }

    /// `(HS_α^b)•`
    pub fn hs_class(&self) -> Result<NameId> {
        if let Some(&x) = self.hs_class.get() {
            return Ok(x);
        }
        let names = self.u.enumerate_hs(self.qb.alpha, &self.qb.b)?;
        Ok(*self.hs_class.get_or_init(|| self.u.bullet(&names)))
    }

    /// Checks scope and, in strict mode, hereditary symmetry of the bindings.
    pub fn check_assignment(&self, phi: &Formula, a: &Assignment) -> Result<()> {
        let (sets, classes) = phi.free_vars();
        for v in &sets {
            if !a.sets.contains_key(v) {
                return Err(Error::Scope(format!("set variable `{v}` is not bound")));
            }
        }
        for v in &classes {
            if !a.classes.contains_key(v) && v != HS_CLASS {
                return Err(Error::Scope(format!("class variable `{v}` is not bound")));
            }
        }
        if self.mode == Mode::Strict {
            for x in a.names() {
                self.u.require_hs(x)?;
            }
        }
        Ok(())
    }

    /// `{ p : p ⊩ φ[a] }`
    pub fn region(&self, phi: &Formula, a: &Assignment) -> Result<CondSet> {
        self.check_assignment(phi, a)?;
        self.eval(phi, a)
    }

    pub fn term_name(&self, t: &Term, env: &Assignment) -> Result<NameId> {
        match t {
            Term::Var(v) => env
                .sets
                .get(v)
                .copied()
                .ok_or_else(|| Error::Scope(format!("set variable `{v}` is not bound"))),
            Term::Pair(a, b) => Ok(self.u.pair_name(self.term_name(a, env)?, self.term_name(b, env)?)),
        }
    }

    fn class_name(&self, c: &str, env: &Assignment) -> Result<NameId> {
        match env.classes.get(c) {
            Some(&x) => Ok(x),
            None if c == HS_CLASS => self.hs_class(),
            None => Err(Error::Scope(format!("class variable `{c}` is not bound"))),
        }
    }

    fn eval(&self, phi: &Formula, env: &Assignment) -> Result<CondSet> {
        let o = &self.u.system().order;
        let out = match phi {
            Formula::Atom(a, rel, b) => {
                let (x, y) = (self.term_name(a, env)?, self.term_name(b, env)?);
                (*self.u.atomic_region(x, *rel, y)).clone()
            }
            Formula::MemberClass(t, c) => {
                let (x, class) = (self.term_name(t, env)?, self.class_name(c, env)?);
                (*self.u.atomic_region(x, Rel::In, class)).clone()
            }
            Formula::EqClass(a, b) => {
                // ∀v (v ∈ A ↔ v ∈ B)
                let (ca, cb) = (self.class_name(a, env)?, self.class_name(b, env)?);
                let mut counter = o.empty_set();
                for &v in self.universe()?.iter() {
                    let ra = self.u.atomic_region(v, Rel::In, ca);
                    let rb = self.u.atomic_region(v, Rel::In, cb);
                    let ab = o.avoiding_region(&ra.intersection(&o.avoiding_region(&rb)));
                    let ba = o.avoiding_region(&rb.intersection(&o.avoiding_region(&ra)));
                    counter.union_with(&o.avoiding_region(&ab.intersection(&ba)));
                }
                o.avoiding_region(&o.dense_region(&counter))
            }
            Formula::Not(a) => o.avoiding_region(&self.eval(a, env)?),
            Formula::And(a, b) => {
                let ra = self.eval(a, env)?;
                if ra.is_empty() && self.trace.is_none() {
                    ra
                } else {
                    ra.intersection(&self.eval(b, env)?)
                }
            }
            Formula::Exists(v, body) if guard(v, body).is_some() => {
                let (t, rest) = guard(v, body).unwrap();
                let bound = self.term_name(t, env)?;
                let mut d = o.empty_set();
                let mut env2 = env.clone();
                for &(w, s) in self.u.entries(bound).iter() {
                    env2.sets.insert(v.clone(), w);
                    match rest {
                        Some(r) => d.union_with(&o.below(s).intersection(&self.eval(r, &env2)?)),
                        None => d.union_with(o.below(s)),
                    }
                }
                o.dense_region(&d)
            }
            Formula::Exists(v, body) => {
                let mut d = o.empty_set();
                let mut env2 = env.clone();
                for &z in self.universe()?.iter() {
                    env2.sets.insert(v.clone(), z);
                    d.union_with(&self.eval(body, &env2)?);
                }
                o.dense_region(&d)
            }
            Formula::ExistsIn(v, t, body) => {
                let bound = self.term_name(t, env)?;
                let mut d = o.empty_set();
                let mut env2 = env.clone();
                for &(w, s) in self.u.entries(bound).iter() {
                    env2.sets.insert(v.clone(), w);
                    d.union_with(&o.below(s).intersection(&self.eval(body, &env2)?));
                }
                o.dense_region(&d)
            }
            Formula::ExistsClass(v, body) => {
                let mut d = o.empty_set();
                let mut env2 = env.clone();
                for &z in self.universe()?.iter() {
                    env2.classes.insert(v.clone(), z);
                    d.union_with(&self.eval(body, &env2)?);
                }
                o.dense_region(&d)
            }
        };
        if let Some(trace) = &self.trace {
            trace
                .borrow_mut()
                .insert((phi as *const Formula as usize, env.clone()), out.clone());
        }
        Ok(out)
    }
}

/// `{ p : p ⊩ φ[a] }` with its exactness flag.
///
/// Formulas whose quantifiers are all bounded are exact. Otherwise the
/// evaluation is repeated with the rank bound raised by one, and the result
/// counts as exact when no shared sub-result changed. That saturation test is
/// a heuristic certificate. Class quantifiers are never exact.
pub fn forcing_region(
    u: &Universe,
    phi: &Formula,
    a: &Assignment,
    qb: &QuantifierBound,
    mode: Mode,
) -> Result<(CondSet, bool)> {
    if phi.is_bounded() {
        let region = Evaluator::new(u, qb.clone(), mode).region(phi, a)?;
        return Ok((region, true));
    }
    let ev = Evaluator::new(u, qb.clone(), mode).traced();
    let region = ev.region(phi, a)?;
    if phi.has_class_quantifier() {
        return Ok((region, false));
    }
    let wider = QuantifierBound::new(qb.alpha + 1, qb.b.clone());
    let ev2 = Evaluator::new(u, wider, mode).traced();
    let region2 = match ev2.region(phi, a) {
        Ok(r) => r,
        Err(Error::Resource { .. }) => return Ok((region, false)),
        Err(e) => return Err(e),
    };
    let exact = region == region2 && {
        let t1 = ev.trace.as_ref().unwrap().borrow();
        let t2 = ev2.trace.as_ref().unwrap().borrow();
        t1.iter().all(|(k, v)| t2.get(k).is_none_or(|w| w == v))
    };
    Ok((region, exact))
}

/// `p ⊩ φ[a]`
pub fn forces(
    u: &Universe,
    p: Cond,
    phi: &Formula,
    a: &Assignment,
    qb: &QuantifierBound,
    mode: Mode,
) -> Result<Forced> {
    let (region, exact) = forcing_region(u, phi, a, qb, mode)?;
    Ok(Forced {
        holds: region.contains(p),
        exact,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelativizationReport {
    pub formula: String,
    pub conditions: usize,
    pub disagreements: Vec<String>,
    pub exact: bool,
}

impl RelativizationReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compares forcing over the symmetric system with forcing of the
/// relativized formula over the plain forcing notion, condition by
/// condition.
pub fn check_relativization(
    u: &Universe,
    phi: &Formula,
    a: &Assignment,
    qb: &QuantifierBound,
) -> Result<RelativizationReport> {
    let (strict, e1) = forcing_region(u, phi, a, qb, Mode::Strict)?;
    let rel = phi.relativize();
    let (plain, e2) = forcing_region(u, &rel, a, qb, Mode::Plain)?;
    let o = &u.system().order;
    let disagreements = o
        .conditions()
        .filter(|&p| strict.contains(p) != plain.contains(p))
        .map(|p| {
            format!(
                "{}: symmetric {} vs relativized {}",
                o.id(p),
                strict.contains(p),
                plain.contains(p)
            )
        })
        .collect();
    Ok(RelativizationReport {
        formula: phi.to_string(),
        conditions: o.len(),
        disagreements,
        exact: e1 && e2,
    })
}
