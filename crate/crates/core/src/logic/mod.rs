//! First-order formulas over set and class variables.
//!
//! The parser expands `|`, `->`, `<->` and `all` into the core connectives
//! `!`, `&` and `ex`, so every evaluator only has to handle the core forms.

mod eval;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use crate::names::{NameId, Rel};

pub use eval::{
    check_relativization, forces, forcing_region, Evaluator, Forced, QuantifierBound, RelativizationReport,
};
pub use parser::parse;

/// Name of the class parameter standing for the bounded universe in
/// relativized formulas.
pub const HS_CLASS: &str = "HSb";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    /// Kuratowski pair.
    Pair(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(v: &str) -> Term {
        Term::Var(v.to_string())
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => push_unique(out, v),
            Term::Pair(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Term, Rel, Term),
    MemberClass(Term, String),
    EqClass(String, String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    /// `∃z ∈ t. φ`, ranging over the domain of the name `t` denotes.
    ExistsIn(String, Term, Box<Formula>),
    ExistsClass(String, Box<Formula>),
}

impl Formula {
    pub fn atom(a: &str, rel: Rel, b: &str) -> Formula {
        Formula::Atom(Term::var(a), rel, Term::var(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
    }

    pub fn exists(v: &str, body: Formula) -> Formula {
        Formula::Exists(v.to_string(), Box::new(body))
    }

    pub fn forall(v: &str, body: Formula) -> Formula {
        Formula::not(Formula::exists(v, Formula::not(body)))
    }

    pub fn exists_in(v: &str, bound: Term, body: Formula) -> Formula {
        Formula::ExistsIn(v.to_string(), bound, Box::new(body))
    }

    pub fn forall_in(v: &str, bound: Term, body: Formula) -> Formula {
        Formula::not(Formula::exists_in(v, bound, Formula::not(body)))
    }

    pub fn exists_class(v: &str, body: Formula) -> Formula {
        Formula::ExistsClass(v.to_string(), Box::new(body))
    }

    pub fn forall_class(v: &str, body: Formula) -> Formula {
        Formula::not(Formula::exists_class(v, Formula::not(body)))
    }

    /// Free set variables and free class variables, in order of first
    /// occurrence.
    pub fn free_vars(&self) -> (Vec<String>, Vec<String>) {
        let mut sets = Vec::new();
        let mut classes = Vec::new();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut sets, &mut classes);
        (sets, classes)
    }

    fn collect_free(
        &self,
        bound: &mut Vec<String>,
        bound_classes: &mut Vec<String>,
        sets: &mut Vec<String>,
        classes: &mut Vec<String>,
    ) {
        let term_vars = |t: &Term, bound: &Vec<String>, sets: &mut Vec<String>| {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) {
                    push_unique(sets, &v);
                }
            }
        };
        match self {
            Formula::Atom(a, _, b) => {
                term_vars(a, bound, sets);
                term_vars(b, bound, sets);
            }
            Formula::MemberClass(a, c) => {
                term_vars(a, bound, sets);
                if !bound_classes.contains(c) {
                    push_unique(classes, c);
                }
            }
            Formula::EqClass(a, b) => {
                for c in [a, b] {
                    if !bound_classes.contains(c) {
                        push_unique(classes, c);
                    }
                }
            }
            Formula::Not(a) => a.collect_free(bound, bound_classes, sets, classes),
            Formula::And(a, b) => {
                a.collect_free(bound, bound_classes, sets, classes);
                b.collect_free(bound, bound_classes, sets, classes);
            }
            Formula::Exists(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, bound_classes, sets, classes);
                bound.pop();
            }
            Formula::ExistsIn(v, t, body) => {
                term_vars(t, bound, sets);
                bound.push(v.clone());
                body.collect_free(bound, bound_classes, sets, classes);
                bound.pop();
            }
            Formula::ExistsClass(v, body) => {
                bound_classes.push(v.clone());
                body.collect_free(bound, bound_classes, sets, classes);
                bound_classes.pop();
            }
        }
    }

    /// True when every set quantifier is bounded or guarded and no class
    /// quantifier or class equality occurs.
    pub fn is_bounded(&self) -> bool {
        match self {
            Formula::Atom(..) | Formula::MemberClass(..) => true,
            Formula::Exists(v, b) => match guard(v, b) {
                Some((_, rest)) => rest.is_none_or(|r| r.is_bounded()),
                None => false,
            },
            Formula::EqClass(..) | Formula::ExistsClass(..) => false,
            Formula::Not(a) => a.is_bounded(),
            Formula::And(a, b) => a.is_bounded() && b.is_bounded(),
            Formula::ExistsIn(_, _, b) => b.is_bounded(),
        }
    }

    pub fn has_class_quantifier(&self) -> bool {
        match self {
            Formula::ExistsClass(..) => true,
            Formula::Atom(..) | Formula::MemberClass(..) | Formula::EqClass(..) => false,
            Formula::Not(a) => a.has_class_quantifier(),
            Formula::And(a, b) => a.has_class_quantifier() || b.has_class_quantifier(),
            Formula::Exists(_, b) | Formula::ExistsIn(_, _, b) => b.has_class_quantifier(),
        }
    }

    /// Relativization to the class parameter [`HS_CLASS`]: each set
    /// quantifier gains the conjunct `z in HSb`.
    pub fn relativize(&self) -> Formula {
        let guard = |v: &str, body: &Formula| {
            Formula::and(
                Formula::MemberClass(Term::var(v), HS_CLASS.to_string()),
                body.relativize(),
            )
        };
        match self {
            Formula::Atom(..) | Formula::MemberClass(..) | Formula::EqClass(..) => self.clone(),
            Formula::Not(a) => Formula::not(a.relativize()),
            Formula::And(a, b) => Formula::and(a.relativize(), b.relativize()),
            Formula::Exists(v, b) => Formula::exists(v, guard(v, b)),
            Formula::ExistsIn(v, t, b) => Formula::exists_in(v, t.clone(), guard(v, b)),
            Formula::ExistsClass(v, b) => Formula::exists_class(v, b.relativize()),
        }
    }
}

/// Splits the body of `∃v` of the form `v ∈ t` or `v ∈ t ∧ ψ`, with `v` not
/// in `t`, into `t` and `ψ`. Leading double negations are peeled; they do not
/// change the density of the union a quantifier takes.
pub fn guard<'a>(v: &str, body: &'a Formula) -> Option<(&'a Term, Option<&'a Formula>)> {
    let mut body = body;
    while let Formula::Not(inner) = body {
        match inner.as_ref() {
            Formula::Not(b) => body = b,
            _ => break,
        }
    }
    let is_guard = |f: &Formula| match f {
        Formula::Atom(Term::Var(z), Rel::In, t) if z == v => {
            let mut vars = Vec::new();
            t.collect_vars(&mut vars);
            !vars.iter().any(|w| w == v)
        }
        _ => false,
    };
    match body {
        Formula::Atom(_, _, t) if is_guard(body) => Some((t, None)),
        Formula::And(a, rest) if is_guard(a) => match a.as_ref() {
            Formula::Atom(_, _, t) => Some((t, Some(rest))),
            _ => None,
        },
        _ => None,
    }
}

fn push_unique(out: &mut Vec<String>, v: &str) {
    if !out.iter().any(|x| x == v) {
        out.push(v.to_string());
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Pair(a, b) => write!(f, "<{a},{b}>"),
        }
    }
}

/// Canonical serialization in the core syntax; reparses to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a, r, b) => write!(f, "{a} {} {b}", r.symbol()),
            Formula::MemberClass(a, c) => write!(f, "{a} in {c}"),
            Formula::EqClass(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(a) => write!(f, "!({a})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Exists(v, b) => write!(f, "(ex {v} . {b})"),
            Formula::ExistsIn(v, t, b) => write!(f, "(ex {v} in {t} . {b})"),
            Formula::ExistsClass(v, b) => write!(f, "(EX {v} . {b})"),
        }
    }
}

/// Bindings of free variables to names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    pub sets: BTreeMap<String, NameId>,
    pub classes: BTreeMap<String, NameId>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set(mut self, var: &str, x: NameId) -> Self {
        self.sets.insert(var.to_string(), x);
        self
    }

    pub fn class(mut self, var: &str, x: NameId) -> Self {
        self.classes.insert(var.to_string(), x);
        self
    }

    /// Binds a variable to the sort its spelling selects.
    pub fn bind(&mut self, var: &str, x: NameId) {
        if is_class_var(var) {
            self.classes.insert(var.to_string(), x);
        } else {
            self.sets.insert(var.to_string(), x);
        }
    }

    pub fn names(&self) -> impl Iterator<Item = NameId> + '_ {
        self.sets.values().chain(self.classes.values()).copied()
    }

    pub fn map(&self, mut f: impl FnMut(NameId) -> NameId) -> Assignment {
        Assignment {
            sets: self.sets.iter().map(|(k, &v)| (k.clone(), f(v))).collect(),
            classes: self.classes.iter().map(|(k, &v)| (k.clone(), f(v))).collect(),
        }
    }
}

pub fn is_class_var(v: &str) -> bool {
    v.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}
