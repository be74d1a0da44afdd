//! Equilibrium conditions, the smallest optimal equilibrium, catalogs of
//! (ε-, pseudo ε-) equilibria and the values `V`, `V_ε`, `W_ε`.

mod enumerate;

use std::fmt;

use serde::Serialize;

pub use enumerate::Enumerator;

use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::region::StoppingRegion;
use crate::value::{
    constrained_sup_enclosure, continuation_enclosure, decide_le, j_values, Decision, ValueInterval,
};

/// Which family of conditions a region must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EquilibriumKind {
    /// `f(x) ≤ J(x, S) + ε` off `S` and `f(x) + ε ≥ E_x[δ(ρ(S)) f(X_ρ(S))]` on `S`.
    Exact { eps: f64 },
    /// Only the condition off `S`.
    Pseudo { eps: f64 },
}

impl EquilibriumKind {
    pub const EQUILIBRIUM: EquilibriumKind = EquilibriumKind::Exact { eps: 0.0 };

    pub fn eps(&self) -> f64 {
        match *self {
            EquilibriumKind::Exact { eps } | EquilibriumKind::Pseudo { eps } => eps,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, EquilibriumKind::Exact { .. })
    }

    fn validate(&self) -> Result<()> {
        let eps = self.eps();
        if eps.is_finite() && eps >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "ε must be finite and ≥ 0, got {eps}"
            )))
        }
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumKind::Exact { eps } => write!(f, "exact(ε={eps})"),
            EquilibriumKind::Pseudo { eps } => write!(f, "pseudo(ε={eps})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Fails,
    Indeterminate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "Holds",
            Status::Fails => "Fails",
            Status::Indeterminate => "Indeterminate",
        })
    }
}

impl From<Decision> for Status {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Holds => Status::Holds,
            Decision::Fails => Status::Fails,
            Decision::Undecided => Status::Indeterminate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `x ∉ S`: stopping now must not beat waiting for `ρ(S)`.
    Outside,
    /// `x ∈ S`: waiting for `ρ(S)` must not beat stopping now.
    Inside,
}

/// One instantiated condition. `margin` encloses `rhs − lhs`, so the
/// condition holds when the margin is nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub state: usize,
    pub label: String,
    pub side: Side,
    pub status: Status,
    pub margin: ValueInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub region: StoppingRegion,
    pub kind: EquilibriumKind,
    pub status: Status,
    /// Conditions that fail or cannot be decided.
    pub witnesses: Vec<Condition>,
    /// Every checked condition, by state index.
    pub conditions: Vec<Condition>,
}

/// Evaluates one condition given the continuation enclosure at `x`.
pub(crate) fn condition(
    model: &MarkovModel,
    region: StoppingRegion,
    kind: EquilibriumKind,
    x: usize,
    cont: &ValueInterval,
) -> Option<Condition> {
    let policy = model.policy();
    let fx = ValueInterval::exact(model.reward()[x]);
    let eps = kind.eps();
    let (side, decision, margin) = if region.contains(x) {
        if !kind.is_exact() {
            return None;
        }
        let d = decide_le(cont, &fx, eps, policy.tol, policy.eq_tol);
        let margin = ValueInterval::new(
            fx.lo + eps - cont.hi,
            fx.lo + eps - cont.lo,
            cont.horizon_used,
        );
        (Side::Inside, d, margin)
    } else {
        let d = decide_le(&fx, cont, eps, policy.tol, policy.eq_tol);
        (Side::Outside, d, cont.shift(eps - fx.lo))
    };
    Some(Condition {
        state: x,
        label: model.label(x).to_string(),
        side,
        status: decision.into(),
        margin,
    })
}

fn check_bounds(model: &MarkovModel, region: StoppingRegion) -> Result<()> {
    if region.is_subset(model.all_states()) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: model.len(),
            found: 64 - region.bits().leading_zeros() as usize,
        })
    }
}

/// Checks whether `region` is an equilibrium of the requested kind.
pub fn check_region(
    model: &MarkovModel,
    region: StoppingRegion,
    kind: EquilibriumKind,
) -> Result<Verdict> {
    kind.validate()?;
    check_bounds(model, region)?;
    let targets = if kind.is_exact() {
        model.all_states()
    } else {
        model.all_states().difference(region)
    };
    let (cont, _) = continuation_enclosure(model, region, targets);
    let conditions: Vec<Condition> = (0..model.len())
        .filter_map(|x| condition(model, region, kind, x, &cont[x]))
        .collect();
    Ok(verdict(region, kind, conditions))
}

pub(crate) fn verdict(
    region: StoppingRegion,
    kind: EquilibriumKind,
    conditions: Vec<Condition>,
) -> Verdict {
    let status = if conditions.iter().any(|c| c.status == Status::Fails) {
        Status::Fails
    } else if conditions.iter().any(|c| c.status == Status::Indeterminate) {
        Status::Indeterminate
    } else {
        Status::Holds
    };
    let witnesses = conditions
        .iter()
        .filter(|c| c.status != Status::Holds)
        .cloned()
        .collect();
    Verdict {
        region,
        kind,
        status,
        witnesses,
        conditions,
    }
}

/// Regions satisfying the conditions of `kind`, in increasing mask order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Catalog {
    pub kind: EquilibriumKind,
    pub regions: Vec<StoppingRegion>,
    /// Regions whose membership could not be certified.
    pub indeterminate: Vec<StoppingRegion>,
}

impl Catalog {
    pub fn contains(&self, region: StoppingRegion) -> bool {
        self.regions.binary_search(&region).is_ok()
    }

    /// `∩ regions`, or `None` for an empty catalog.
    pub fn intersection(&self, n: usize) -> Option<StoppingRegion> {
        if self.regions.is_empty() {
            None
        } else {
            Some(
                self.regions
                    .iter()
                    .fold(StoppingRegion::full(n), |acc, r| acc.intersection(*r)),
            )
        }
    }
}

/// Every subset classified, via a pruned search over the state space.
pub fn enumerate(model: &MarkovModel, kind: EquilibriumKind) -> Result<Catalog> {
    Enumerator::new(model).catalog(kind)
}

/// Every subset classified by calling [`check_region`] on each of the
/// `2^|𝕏|` candidates. Reference implementation for [`enumerate`].
pub fn enumerate_exhaustive(model: &MarkovModel, kind: EquilibriumKind) -> Result<Catalog> {
    kind.validate()?;
    let needed = 1u128 << model.len();
    let cap = 1u128 << model.policy().enum_cap;
    if needed > cap {
        return Err(Error::EnumerationTooLarge { needed, cap });
    }
    let mut regions = Vec::new();
    let mut indeterminate = Vec::new();
    for r in model.all_states().subsets() {
        match check_region(model, r, kind)?.status {
            Status::Holds => regions.push(r),
            Status::Indeterminate => indeterminate.push(r),
            Status::Fails => {}
        }
    }
    Ok(Catalog {
        kind,
        regions,
        indeterminate,
    })
}

/// `∩` of every region in the catalog of `kind`.
pub fn intersection_oracle(model: &MarkovModel, kind: EquilibriumKind) -> Result<StoppingRegion> {
    let cat = enumerate(model, kind)?;
    if !cat.indeterminate.is_empty() {
        return Err(Error::IndeterminateCatalog(cat.indeterminate.len()));
    }
    cat.intersection(model.len()).ok_or(Error::EmptyCatalog)
}

/// One round of the expanding iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Round {
    /// `S_k`.
    pub region: StoppingRegion,
    /// `sup_{1 ≤ τ ≤ ρ(S_k)} E_x[δ(τ) f(X_τ)]` for `x ∉ S_k`.
    pub sups: Vec<(usize, ValueInterval)>,
    /// States with `f(x)` strictly above their supremum.
    pub added: StoppingRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct IterationTrace {
    pub rounds: Vec<Round>,
}

impl IterationTrace {
    /// `S_0, S_1, ..., S*`.
    pub fn regions(&self) -> Vec<StoppingRegion> {
        let mut out: Vec<_> = self.rounds.iter().map(|r| r.region).collect();
        if let Some(last) = self.rounds.last() {
            if !last.added.is_empty() {
                out.push(last.region.union(last.added));
            }
        }
        out
    }
}

/// `S_0 = ∅`, `S_{k+1} = S_k ∪ {x ∉ S_k : f(x) > sup_{1 ≤ τ ≤ ρ(S_k)} E_x[δ(τ) f(X_τ)]}`
/// until nothing is added.
pub fn smallest_equilibrium(model: &MarkovModel) -> Result<(StoppingRegion, IterationTrace)> {
    let policy = *model.policy();
    let f = model.reward();
    let decide = |x: usize, v: &ValueInterval| {
        decide_le(
            &ValueInterval::exact(f[x]),
            v,
            0.0,
            policy.tol,
            policy.eq_tol,
        )
    };
    let mut region = StoppingRegion::empty();
    let mut trace = IterationTrace::default();
    loop {
        let outside = model.all_states().difference(region);
        if outside.is_empty() {
            break;
        }
        let (sups, _) = constrained_sup_enclosure(model, region, outside, &|vals| {
            outside
                .iter()
                .all(|x| decide(x, &vals[x]) != Decision::Undecided)
        });
        let mut added = StoppingRegion::empty();
        for x in outside.iter() {
            match decide(x, &sups[x]) {
                Decision::Fails => added.insert(x),
                Decision::Holds => {}
                Decision::Undecided => {
                    return Err(Error::IndeterminateMembership {
                        state: model.label(x).to_string(),
                        reward: f[x],
                        interval: sups[x],
                    })
                }
            }
        }
        trace.rounds.push(Round {
            region,
            sups: outside.iter().map(|x| (x, sups[x])).collect(),
            added,
        });
        if added.is_empty() {
            break;
        }
        region = region.union(added);
    }
    Ok((region, trace))
}

/// `V(x) = J(x, S*)` for every state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalValues {
    pub region: StoppingRegion,
    pub trace: IterationTrace,
    pub values: Vec<ValueInterval>,
}

pub fn optimal_values(model: &MarkovModel) -> Result<OptimalValues> {
    let (region, trace) = smallest_equilibrium(model)?;
    let values = j_values(model, region)?;
    Ok(OptimalValues {
        region,
        trace,
        values,
    })
}

/// A supremum together with a region attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sup {
    pub value: ValueInterval,
    pub region: StoppingRegion,
}

/// `V_ε` (over ε-equilibria) and `W_ε` (over pseudo ε-equilibria) per state;
/// `None` where the catalog is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedValues {
    pub eps: f64,
    pub v: Vec<Option<Sup>>,
    pub w: Vec<Option<Sup>>,
    /// Undecided regions left out of the suprema, per kind.
    pub indeterminate_exact: usize,
    pub indeterminate_pseudo: usize,
}

pub fn relaxed_values(model: &MarkovModel, eps: f64) -> Result<RelaxedValues> {
    Enumerator::new(model).relaxed(eps, model.all_states())
}

/// Same model with reward `(f − ε) ∨ 0`.
pub fn shifted_model(model: &MarkovModel, eps: f64) -> Result<MarkovModel> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shift must be finite and ≥ 0, got {eps}"
        )));
    }
    model.with_reward(model.reward().iter().map(|v| (v - eps).max(0.0)).collect())
}
