//! Symmetric systems: a preorder, an automorphism group and a normal filter.

use serde::Serialize;

use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::order::Preorder;
use crate::symmetry::{AutoSet, AutomorphismGroup, SubgroupFilter};

/// Resource limits applied by enumeration and search routines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Largest name universe `enumerate_hs` may produce.
    pub names: usize,
    /// Deepest check-name literal.
    pub literal_depth: usize,
    /// Largest candidate universe for the witness fixed point, in tuples.
    pub witness_tuples: usize,
    pub group_order: usize,
    pub conditions: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            names: 100_000,
            literal_depth: 16,
            witness_tuples: 50_000_000,
            group_order: 50_000,
            conditions: 5_000,
        }
    }
}

impl Caps {
    /// Defaults, with `FORCELAB_CAP` overriding the name-universe cap.
    pub fn from_env() -> Self {
        let mut caps = Caps::default();
        if let Some(n) = std::env::var("FORCELAB_CAP")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            caps.names = n;
        }
        caps
    }
}

#[derive(Clone, Debug)]
pub struct SymmetricSystem {
    pub label: String,
    pub order: Preorder,
    pub group: AutomorphismGroup,
    pub filter: SubgroupFilter,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn pass(&mut self, name: &str, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed: true,
            detail: detail.into(),
        });
    }

    fn fail(&mut self, name: &str, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed: false,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.first_failure() {
            Some(c) => Err(Error::validation(c.name.clone(), c.detail.clone())),
            None => Ok(self),
        }
    }
}

impl SymmetricSystem {
    pub fn new(
        label: impl Into<String>,
        order: Preorder,
        group: AutomorphismGroup,
        filter: SubgroupFilter,
    ) -> Self {
        SymmetricSystem {
            label: label.into(),
            order,
            group,
            filter,
        }
    }

    /// Runs every structural check; the report lists each with pass/fail.
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let o = &self.order;
        let g = &self.group;
        r.pass(
            "preorder",
            format!("{} conditions, reflexive-transitive closure with top 1", o.len()),
        );

        let mut autos_ok = true;
        for &gen in g.generators() {
            if let Err(Error::Validation { check, detail }) = g.get(gen).check_against(o) {
                r.fail(&check, detail);
                autos_ok = false;
                break;
            }
        }
        if autos_ok {
            r.pass(
                "automorphisms",
                format!("{} generators preserve order both ways and fix 1", g.generators().len()),
            );
        } else {
            return r;
        }

        // Closure under left multiplication by generators is enough for a
        // finite generated set containing the identity.
        let closed = g
            .elements()
            .all(|a| g.generators().iter().all(|&s| g.find(&compose_map(g, s, a)).is_some()));
        if closed {
            r.pass("group", format!("closed, order {}", g.order()));
        } else {
            r.fail("group", "element table not closed under generators");
            return r;
        }

        for entry in self.filter.base() {
            if let Some(defect) = g.subgroup_defect(&entry.members) {
                r.fail(
                    "filter base subgroups",
                    format!(
                        "{} is not a subgroup ({})",
                        g.format_set(&entry.members),
                        defect
                    ),
                );
                return r;
            }
        }
        r.pass(
            "filter base subgroups",
            format!("{} entries", self.filter.base().len()),
        );

        let full = g.full();
        if self.filter.base().iter().any(|e| e.members == full) {
            r.pass("filter contains group", "some base entry equals the group");
        } else {
            r.fail("filter contains group", "no base entry equals the full group");
            return r;
        }

        let base = self.filter.base();
        for a in base {
            for b in base {
                let meet: AutoSet = a.members.intersection(&b.members).copied().collect();
                if !base.iter().any(|c| c.members.is_subset(&meet)) {
                    r.fail(
                        "filter base directed",
                        format!("no entry below {} ∩ {}", a.label, b.label),
                    );
                    return r;
                }
            }
        }
        r.pass("filter base directed", "every pairwise meet contains an entry");

        let work: usize = base.iter().map(|e| e.members.len()).sum::<usize>() * g.order();
        let (conjugators, how): (Vec<_>, &str) = if work <= 200_000 {
            (g.elements().collect(), "all group elements")
        } else {
            // Conjugation by products reduces to conjugation by generators.
            (g.generators().to_vec(), "group generators")
        };
        for entry in base {
            for &pi in &conjugators {
                let conj = g.conjugate(pi, &entry.members);
                if !base.iter().any(|c| c.members.is_subset(&conj)) {
                    r.fail(
                        "filter normal",
                        format!(
                            "no entry inside {} {} {}⁻¹",
                            g.id(pi),
                            entry.label,
                            g.id(pi)
                        ),
                    );
                    return r;
                }
            }
        }
        r.pass("filter normal", format!("checked against {how}"));
        r
    }

    /// Filter membership: some base subgroup lies inside `h`.
    pub fn in_filter(&self, h: &AutoSet) -> bool {
        self.filter.contains(h)
    }

    pub fn sym_of_condition_set(&self, a: &CondSet) -> AutoSet {
        self.group.stabilizer_of_set(a)
    }

    pub fn is_symmetric_set(&self, a: &CondSet) -> bool {
        self.in_filter(&self.sym_of_condition_set(a))
    }

    pub fn is_symmetrically_dense(&self, d: &CondSet) -> bool {
        self.order.dense_below(d, self.order.top()) && self.is_symmetric_set(d)
    }
}

fn compose_map(
    g: &AutomorphismGroup,
    a: crate::symmetry::AutoId,
    b: crate::symmetry::AutoId,
) -> Vec<crate::order::Cond> {
    g.get(b).map.iter().map(|&c| g.apply(a, c)).collect()
}
