//! Depth-first search over stopping regions.
//!
//! States are assigned in/out in an order where everything a state can
//! reach comes first (sink components first). The condition at `z` depends
//! only on `S ∩ reach⁺(z)` and on whether `z ∈ S`, so it is checked as soon
//! as those memberships are fixed, and failing branches are cut early.

use std::collections::HashMap;

use super::{condition, Catalog, EquilibriumKind, RelaxedValues, Status, Sup};
use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::region::StoppingRegion;
use crate::value::{continuation_enclosure, ValueInterval};

struct Plan {
    order: Vec<usize>,
    /// `checks[k]`: states whose condition is decidable once `order[..=k]`
    /// is assigned.
    checks: Vec<Vec<usize>>,
}

/// Catalog searches over one model, sharing hitting-value computations
/// across kinds and slacks.
pub struct Enumerator<'a> {
    model: &'a MarkovModel,
    reach: Vec<u64>,
    rank: Vec<(u32, usize, usize)>,
    cache: HashMap<u64, Vec<ValueInterval>>,
    nodes: u128,
    budget: u128,
}

impl<'a> Enumerator<'a> {
    pub fn new(model: &'a MarkovModel) -> Self {
        let reach: Vec<u64> = model
            .kernel()
            .reach_plus()
            .iter()
            .map(|r| r.bits())
            .collect();
        let n = model.len();
        let closure = |z: usize| reach[z] | 1 << z;
        let rank = (0..n)
            .map(|z| {
                let scc = (0..n)
                    .find(|&w| closure(z) >> w & 1 == 1 && closure(w) >> z & 1 == 1)
                    .unwrap_or(z);
                (closure(z).count_ones(), scc, z)
            })
            .collect();
        Enumerator {
            model,
            reach,
            rank,
            cache: HashMap::new(),
            nodes: 0,
            budget: 1u128 << (model.policy().enum_cap + 1),
        }
    }

    /// Search nodes visited since construction.
    pub fn nodes_visited(&self) -> u128 {
        self.nodes
    }

    fn plan(&self, free: u64) -> Plan {
        let mut order: Vec<usize> = StoppingRegion::from_bits(free).iter().collect();
        order.sort_by_key(|&z| self.rank[z]);
        let mut pos = [usize::MAX; 64];
        for (k, &z) in order.iter().enumerate() {
            pos[z] = k;
        }
        let mut checks = vec![Vec::new(); order.len()];
        for &z in &order {
            let deps = (self.reach[z] | 1 << z) & free;
            let at = StoppingRegion::from_bits(deps)
                .iter()
                .map(|w| pos[w])
                .max()
                .expect("z itself is free");
            checks[at].push(z);
        }
        Plan { order, checks }
    }

    fn continuation(&mut self, region: u64, z: usize) -> ValueInterval {
        let model = self.model;
        self.cache.entry(region).or_insert_with(|| {
            continuation_enclosure(model, StoppingRegion::from_bits(region), model.all_states()).0
        })[z]
    }

    fn status(&mut self, kind: EquilibriumKind, mask: u64, z: usize) -> Status {
        if mask >> z & 1 == 1 && !kind.is_exact() {
            return Status::Holds;
        }
        let cont = self.continuation(mask & self.reach[z], z);
        condition(self.model, StoppingRegion::from_bits(mask), kind, z, &cont)
            .map_or(Status::Holds, |c| c.status)
    }

    /// Walks every assignment of `plan.order` on top of `mask`, calling
    /// `sink(mask, undecided)` on complete ones. Returns `true` when the
    /// sink asked to stop.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &mut self,
        kind: EquilibriumKind,
        plan: &Plan,
        k: usize,
        mask: u64,
        undecided: bool,
        in_first: bool,
        sink: &mut dyn FnMut(u64, bool) -> bool,
    ) -> Result<bool> {
        if k == plan.order.len() {
            return Ok(sink(mask, undecided));
        }
        let z = plan.order[k];
        let choices = if in_first {
            [true, false]
        } else {
            [false, true]
        };
        for inside in choices {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::EnumerationTooLarge {
                    needed: 1u128 << plan.order.len().min(127),
                    cap: self.budget,
                });
            }
            let next = if inside { mask | 1 << z } else { mask };
            let mut undecided = undecided;
            let mut failed = false;
            for &w in &plan.checks[k] {
                match self.status(kind, next, w) {
                    Status::Fails => {
                        failed = true;
                        break;
                    }
                    Status::Indeterminate => undecided = true,
                    Status::Holds => {}
                }
            }
            if !failed && self.dfs(kind, plan, k + 1, next, undecided, in_first, sink)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Full catalog of `kind`.
    pub fn catalog(&mut self, kind: EquilibriumKind) -> Result<Catalog> {
        kind.validate()?;
        let plan = self.plan(self.model.all_states().bits());
        let mut regions = Vec::new();
        let mut indeterminate = Vec::new();
        self.dfs(kind, &plan, 0, 0, false, false, &mut |mask, undecided| {
            let r = StoppingRegion::from_bits(mask);
            if undecided {
                indeterminate.push(r);
            } else {
                regions.push(r);
            }
            false
        })?;
        regions.sort();
        indeterminate.sort();
        Ok(Catalog {
            kind,
            regions,
            indeterminate,
        })
    }

    /// Traces `S ∩ keep` of catalog regions `S`, where `keep` is closed under
    /// reachability. Each trace comes with one full region extending it and
    /// a flag telling whether that region is only undecided.
    pub fn projected(
        &mut self,
        kind: EquilibriumKind,
        keep: StoppingRegion,
    ) -> Result<Vec<(StoppingRegion, StoppingRegion, bool)>> {
        kind.validate()?;
        let keep = keep.bits();
        debug_assert!(StoppingRegion::from_bits(keep)
            .iter()
            .all(|z| self.reach[z] & !keep == 0));
        let inner = self.plan(keep);
        let outer = self.plan(self.model.all_states().bits() & !keep);
        let mut partial = Vec::new();
        self.dfs(kind, &inner, 0, 0, false, false, &mut |mask, undecided| {
            partial.push((mask, undecided));
            false
        })?;
        let mut out = Vec::new();
        for (mask, undecided) in partial {
            let mut found: Option<(u64, bool)> = None;
            self.dfs(kind, &outer, 0, mask, undecided, true, &mut |full, und| {
                if found.is_none_or(|(_, u)| u && !und) {
                    found = Some((full, und));
                }
                !und
            })?;
            if let Some((full, und)) = found {
                out.push((
                    StoppingRegion::from_bits(mask),
                    StoppingRegion::from_bits(full),
                    und,
                ));
            }
        }
        out.sort_by_key(|e| e.0);
        Ok(out)
    }

    /// `J(x, S)` through the shared cache.
    pub fn j(&mut self, region: StoppingRegion, x: usize) -> ValueInterval {
        if region.contains(x) {
            ValueInterval::exact(self.model.reward()[x])
        } else {
            self.continuation(region.bits() & self.reach[x], x)
        }
    }

    fn sup_over(
        &mut self,
        kind: EquilibriumKind,
        targets: StoppingRegion,
    ) -> Result<(Vec<Option<Sup>>, usize)> {
        let n = self.model.len();
        let mut out = vec![None; n];
        let mut undecided = 0;
        let mut by_closure: HashMap<u64, Vec<usize>> = HashMap::new();
        for x in targets.iter() {
            by_closure
                .entry(self.reach[x] | 1 << x)
                .or_default()
                .push(x);
        }
        let mut groups: Vec<_> = by_closure.into_iter().collect();
        groups.sort();
        for (keep, xs) in groups {
            let entries = self.projected(kind, StoppingRegion::from_bits(keep))?;
            undecided = undecided.max(entries.iter().filter(|e| e.2).count());
            for x in xs {
                let mut best: Option<Sup> = None;
                for &(trace, full, und) in &entries {
                    if und {
                        continue;
                    }
                    let v = self.j(trace, x);
                    if best.is_none_or(|b| v.lo > b.value.lo) {
                        best = Some(Sup {
                            value: best.map_or(v, |b| {
                                ValueInterval::new(v.lo, v.hi.max(b.value.hi), v.horizon_used)
                            }),
                            region: full,
                        });
                    } else if let Some(b) = best.as_mut() {
                        b.value.hi = b.value.hi.max(v.hi);
                    }
                }
                out[x] = best;
            }
        }
        Ok((out, undecided))
    }

    /// `V_ε` and `W_ε` at every target state.
    pub fn relaxed(&mut self, eps: f64, targets: StoppingRegion) -> Result<RelaxedValues> {
        let (v, indeterminate_exact) = self.sup_over(EquilibriumKind::Exact { eps }, targets)?;
        let (w, indeterminate_pseudo) = self.sup_over(EquilibriumKind::Pseudo { eps }, targets)?;
        Ok(RelaxedValues {
            eps,
            v,
            w,
            indeterminate_exact,
            indeterminate_pseudo,
        })
    }
}
