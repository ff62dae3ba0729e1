//! The atomic forcing relation, computed as forcing regions.
//!
//! For each `(x, R, y)` the engine computes the set of all conditions `p`
//! with `p ⊩ x R y`. The recursion terminates on the measure
//! `(rank x + rank y, weight R)` with `⊆ < = < ∈`.

use std::sync::Arc;

use crate::bitset::CondSet;
use crate::error::{Error, Result};
use crate::names::{NameId, Rel, Universe};
use crate::order::Cond;

/// Whether query names must be hereditarily symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Strict,
    Plain,
}

impl Universe {
    /// `{ p : p ⊩ x R y }`, for arbitrary names.
    pub fn atomic_region(&self, x: NameId, rel: Rel, y: NameId) -> Arc<CondSet> {
        if let Some(s) = self.memo.atomic.read().unwrap().get(&(x, rel, y)) {
            return s.clone();
        }
        let o = &self.system().order;
        let region = match rel {
            Rel::In => {
                let mut d = o.empty_set();
                for &(z, r) in self.entries(y).iter() {
                    let eq = self.atomic_region(x, Rel::Eq, z);
                    d.union_with(&o.below(r).intersection(&eq));
                }
                o.dense_region(&d)
            }
            Rel::Sub => {
                let mut out = o.full_set();
                for &(z, r) in self.entries(x).iter() {
                    let reach = o.up_closure(&self.atomic_region(z, Rel::In, y));
                    for p in out.clone().iter() {
                        if !o.below(p).meet_is_subset(o.below(r), &reach) {
                            out.remove(p);
                        }
                    }
                }
                out
            }
            Rel::Eq => {
                let a = self.atomic_region(x, Rel::Sub, y);
                let b = self.atomic_region(y, Rel::Sub, x);
                a.intersection(&b)
            }
        };
        let region = Arc::new(region);
        self.memo
            .atomic
            .write()
            .unwrap()
            .entry((x, rel, y))
            .or_insert(region)
            .clone()
    }

    pub(crate) fn require_hs(&self, x: NameId) -> Result<()> {
        if self.is_hereditarily_symmetric(x) {
            Ok(())
        } else {
            Err(Error::NotHereditarilySymmetric(self.show(x)))
        }
    }

    /// `p ⊩ x R y`.
    pub fn atomic_forces(&self, p: Cond, x: NameId, rel: Rel, y: NameId, mode: Mode) -> Result<bool> {
        if mode == Mode::Strict {
            self.require_hs(x)?;
            self.require_hs(y)?;
        }
        Ok(self.atomic_region(x, rel, y).contains(p))
    }
}
