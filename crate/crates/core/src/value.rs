//! Certified enclosures of `J(x, S, f)` and of the constrained supremum
//! `sup_{1 ≤ τ ≤ ρ(S)} E_x[δ(τ) f(X_τ)]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::region::StoppingRegion;

/// A closed interval `[lo, hi]` known to contain an expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueInterval {
    pub lo: f64,
    pub hi: f64,
    /// Truncation horizon behind the bounds (0 when exact by construction).
    pub horizon_used: usize,
}

impl ValueInterval {
    pub fn new(lo: f64, hi: f64, horizon_used: usize) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        ValueInterval {
            lo,
            hi,
            horizon_used,
        }
    }

    pub fn exact(v: f64) -> Self {
        ValueInterval::new(v, v, 0)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        self.lo - slack <= v && v <= self.hi + slack
    }

    pub fn intersects(&self, other: &ValueInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &ValueInterval) -> ValueInterval {
        ValueInterval::new(
            self.lo.min(other.lo),
            self.hi.max(other.hi),
            self.horizon_used.max(other.horizon_used),
        )
    }

    /// `[self.lo + c, self.hi + c]`.
    pub fn shift(&self, c: f64) -> ValueInterval {
        ValueInterval::new(self.lo + c, self.hi + c, self.horizon_used)
    }
}

impl fmt::Display for ValueInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// Outcome of comparing `a ≤ b + slack` with certified intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Decision {
    Holds,
    Fails,
    Undecided,
}

/// Decides `a ≤ b + slack` where `a`, `b` are enclosures.
///
/// Separated intervals decide directly. Overlapping intervals that are both
/// converged to `tol` pass, since the condition is a weak inequality.
pub(crate) fn decide_le(
    a: &ValueInterval,
    b: &ValueInterval,
    slack: f64,
    tol: f64,
    eq_tol: f64,
) -> Decision {
    if a.hi <= b.lo + slack + eq_tol {
        Decision::Holds
    } else if a.lo > b.hi + slack + eq_tol {
        Decision::Fails
    } else if a.width() <= tol && b.width() <= tol {
        Decision::Holds
    } else {
        Decision::Undecided
    }
}

fn check_state(model: &MarkovModel, x: usize) -> Result<()> {
    if x >= model.len() {
        return Err(Error::DimensionMismatch {
            expected: model.len(),
            found: x + 1,
        });
    }
    Ok(())
}

fn check_region(model: &MarkovModel, region: StoppingRegion) -> Result<()> {
    if !region.is_subset(model.all_states()) {
        return Err(Error::DimensionMismatch {
            expected: model.len(),
            found: 64 - region.bits().leading_zeros() as usize,
        });
    }
    Ok(())
}

/// Enclosures of `E_x[δ(ρ(S)) f(X_ρ(S))]` for every start state, with
/// `ρ(S) = inf{t ≥ 1 : X_t ∈ S}` (so states inside `S` get their
/// continuation value). Iterates until every state in `targets` has width
/// at most `tol`; the flag reports whether that happened before `t_max`.
pub(crate) fn continuation_enclosure(
    model: &MarkovModel,
    region: StoppingRegion,
    targets: StoppingRegion,
) -> (Vec<ValueInterval>, bool) {
    let n = model.len();
    let kernel = model.kernel();
    let delta = model.discount();
    let policy = model.policy();
    let f = model.reward();
    let m = model.max_reward();
    let live = kernel.can_reach(region);

    // u(y) = E_y[f(X_t) ; ρ = t], s(y) = P_y(ρ > t, X_t still able to reach S)
    let mut u: Vec<f64> = (0..n)
        .map(|y| {
            kernel
                .support(y)
                .iter()
                .filter(|(z, _)| region.contains(*z))
                .map(|&(z, p)| p * f[z])
                .sum()
        })
        .collect();
    let mut s: Vec<f64> = (0..n)
        .map(|y| {
            kernel
                .support(y)
                .iter()
                .filter(|(z, _)| !region.contains(*z) && live.contains(*z))
                .map(|&(_, p)| p)
                .sum()
        })
        .collect();
    let mut lo: Vec<f64> = u.iter().map(|v| delta.at(1) * v).collect();
    let mut nu = vec![0.0; n];
    let mut ns = vec![0.0; n];
    let step = |g: &[f64], out: &mut [f64]| {
        for (y, o) in out.iter_mut().enumerate() {
            *o = kernel
                .support(y)
                .iter()
                .filter(|(z, _)| !region.contains(*z) && live.contains(*z))
                .map(|&(z, p)| p * g[z])
                .sum();
        }
    };
    let mut t = 1;
    loop {
        let tail = delta.at(t + 1) * m;
        let done = targets.iter().all(|x| tail * s[x] <= policy.tol);
        if done || t >= policy.t_max {
            let out = (0..n)
                .map(|x| {
                    let l = lo[x].min(m);
                    ValueInterval::new(l, (lo[x] + tail * s[x]).min(m).max(l), t)
                })
                .collect();
            return (out, done);
        }
        step(&u, &mut nu);
        step(&s, &mut ns);
        std::mem::swap(&mut u, &mut nu);
        std::mem::swap(&mut s, &mut ns);
        t += 1;
        let d = delta.at(t);
        for y in 0..n {
            lo[y] += d * u[y];
        }
    }
}

/// `J(x, S, f)` for every state, exact on `S`.
pub(crate) fn j_enclosure(
    model: &MarkovModel,
    region: StoppingRegion,
    targets: StoppingRegion,
) -> (Vec<ValueInterval>, bool) {
    let (mut cont, ok) = continuation_enclosure(
        model,
        region.intersection(model.all_states()),
        targets.difference(region),
    );
    for x in region.iter() {
        cont[x] = ValueInterval::exact(model.reward()[x]);
    }
    (cont, ok)
}

/// `J(x, S, f) = E_x[δ(ρ(S)) f(X_ρ(S))]` for `x ∉ S`, and `f(x)` for `x ∈ S`.
pub fn j_value(model: &MarkovModel, region: StoppingRegion, x: usize) -> Result<ValueInterval> {
    check_state(model, x)?;
    check_region(model, region)?;
    let (vals, ok) = j_enclosure(model, region, StoppingRegion::empty().with(x));
    finish(model, vals[x], ok)
}

/// [`j_value`] for every state at once.
pub fn j_values(model: &MarkovModel, region: StoppingRegion) -> Result<Vec<ValueInterval>> {
    check_region(model, region)?;
    let (vals, ok) = j_enclosure(model, region, model.all_states());
    all_or_widest(model, vals, ok)
}

fn all_or_widest(
    model: &MarkovModel,
    vals: Vec<ValueInterval>,
    ok: bool,
) -> Result<Vec<ValueInterval>> {
    if ok {
        return Ok(vals);
    }
    let widest = vals
        .iter()
        .copied()
        .max_by(|a, b| a.width().total_cmp(&b.width()))
        .expect("nonempty model");
    Err(Error::HorizonExhausted {
        t_max: model.policy().t_max,
        interval: widest,
    })
}

fn finish(model: &MarkovModel, v: ValueInterval, ok: bool) -> Result<ValueInterval> {
    if ok {
        Ok(v)
    } else {
        Err(Error::HorizonExhausted {
            t_max: model.policy().t_max,
            interval: v,
        })
    }
}

/// Backward induction for `sup_{1 ≤ τ ≤ ρ(barrier)} E_x[δ(τ) f(X_τ)]` with
/// horizon `T`, returning lower and upper bounds for every start state.
///
/// Beyond `T` the payoff of a state `y` still alive is bracketed by
/// `max_k δ(T + k)·g_k(y)` and `δ(T)·h(y)`, where `g_k` is the undiscounted
/// `k`-step stopping value and `h ≥ g_∞` its limit from above.
fn sup_backward(
    model: &MarkovModel,
    barrier: StoppingRegion,
    horizon: usize,
    undiscounted: &Undiscounted,
) -> (Vec<f64>, Vec<f64>) {
    let n = model.len();
    let kernel = model.kernel();
    let delta = model.discount();
    let f = model.reward();
    let mut lo: Vec<f64> = (0..n)
        .map(|y| {
            undiscounted
                .lower
                .iter()
                .enumerate()
                .map(|(k, g)| delta.at(horizon + k) * g[y])
                .fold(0.0, f64::max)
        })
        .collect();
    let mut hi: Vec<f64> = (0..n)
        .map(|y| delta.at(horizon) * undiscounted.upper[y])
        .collect();
    let mut nlo = vec![0.0; n];
    let mut nhi = vec![0.0; n];
    for t in (1..horizon).rev() {
        let d = delta.at(t);
        for y in 0..n {
            let stop = d * f[y];
            if barrier.contains(y) {
                nlo[y] = stop;
                nhi[y] = stop;
            } else {
                nlo[y] = stop.max(kernel.expect(y, &lo));
                nhi[y] = stop.max(kernel.expect(y, &hi));
            }
        }
        std::mem::swap(&mut lo, &mut nlo);
        std::mem::swap(&mut hi, &mut nhi);
    }
    let root_lo = (0..n).map(|x| kernel.expect(x, &lo)).collect();
    let root_hi = (0..n).map(|x| kernel.expect(x, &hi)).collect();
    (root_lo, root_hi)
}

/// Undiscounted stopping values with forced stops on the barrier.
struct Undiscounted {
    barrier: StoppingRegion,
    /// `lower[k][y]`: best `E_y[f(X_σ)]` over `σ ≤ k`.
    lower: Vec<Vec<f64>>,
    /// Pointwise upper bound on the undiscounted value at any horizon.
    upper: Vec<f64>,
    converged: bool,
}

impl Undiscounted {
    fn new(model: &MarkovModel, barrier: StoppingRegion) -> Self {
        let f = model.reward();
        let reach = model.kernel().reach_plus_blocked(barrier);
        let upper = (0..model.len())
            .map(|y| {
                if barrier.contains(y) {
                    f[y]
                } else {
                    reach[y].iter().map(|z| f[z]).fold(f[y], f64::max)
                }
            })
            .collect();
        Undiscounted {
            barrier,
            lower: vec![f.to_vec()],
            upper,
            converged: false,
        }
    }

    fn bellman(&self, model: &MarkovModel, g: &[f64]) -> Vec<f64> {
        let f = model.reward();
        (0..model.len())
            .map(|y| {
                if self.barrier.contains(y) {
                    f[y]
                } else {
                    f[y].max(model.kernel().expect(y, g))
                }
            })
            .collect()
    }

    /// Runs value iteration from both sides until `steps` lower iterates
    /// exist or the two sides meet.
    fn extend(&mut self, model: &MarkovModel, steps: usize) {
        while !self.converged && self.lower.len() <= steps {
            let next = self.bellman(model, self.lower.last().expect("seeded"));
            let next_up: Vec<f64> = self
                .bellman(model, &self.upper)
                .into_iter()
                .zip(&self.upper)
                .map(|(a, b)| a.min(*b))
                .collect();
            self.converged = next
                .iter()
                .zip(&next_up)
                .all(|(a, b)| b - a <= 4.0 * f64::EPSILON * b.max(1.0));
            self.lower.push(next);
            self.upper = next_up;
        }
    }
}

/// Enclosures of `sup_{1 ≤ τ ≤ ρ(barrier)} E_x[δ(τ) f(X_τ)]` for every
/// state. The horizon doubles from 16 until every target is at most `tol`
/// wide or `stop` accepts the intervals; the flag reports convergence.
pub(crate) fn constrained_sup_enclosure(
    model: &MarkovModel,
    barrier: StoppingRegion,
    targets: StoppingRegion,
    stop: &dyn Fn(&[ValueInterval]) -> bool,
) -> (Vec<ValueInterval>, bool) {
    let policy = model.policy();
    let m = model.max_reward();
    let mut horizon = 16.min(policy.t_max);
    let mut undiscounted = Undiscounted::new(model, barrier);
    loop {
        undiscounted.extend(model, horizon);
        let (lo, hi) = sup_backward(model, barrier, horizon, &undiscounted);
        let vals: Vec<ValueInterval> = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| {
                let l = l.min(m);
                ValueInterval::new(l, h.min(m).max(l), horizon)
            })
            .collect();
        let ok = targets.iter().all(|x| vals[x].width() <= policy.tol);
        if ok || horizon >= policy.t_max || stop(&vals) {
            return (vals, ok);
        }
        horizon = (horizon * 2).min(policy.t_max);
    }
}

/// `sup_{1 ≤ τ ≤ ρ(barrier)} E_x[δ(τ) f(X_τ)]`.
pub fn constrained_sup_value(
    model: &MarkovModel,
    barrier: StoppingRegion,
    x: usize,
) -> Result<ValueInterval> {
    check_state(model, x)?;
    check_region(model, barrier)?;
    let (vals, ok) =
        constrained_sup_enclosure(model, barrier, StoppingRegion::empty().with(x), &|_| false);
    finish(model, vals[x], ok)
}

/// [`constrained_sup_value`] for every state at once.
pub fn constrained_sup_values(
    model: &MarkovModel,
    barrier: StoppingRegion,
) -> Result<Vec<ValueInterval>> {
    check_region(model, barrier)?;
    let (vals, ok) = constrained_sup_enclosure(model, barrier, model.all_states(), &|_| false);
    all_or_widest(model, vals, ok)
}

/// Number of regions [`superset_sup_value`] will scan before refusing.
pub const SUPERSET_CAP: u128 = 1 << 20;

/// Best hitting-time payoff over regions `R` with `base ⊆ R ⊆ 𝕏 \ {x}`,
/// together with a maximizing region.
pub fn superset_sup_value(
    model: &MarkovModel,
    base: StoppingRegion,
    x: usize,
) -> Result<(ValueInterval, StoppingRegion)> {
    check_state(model, x)?;
    check_region(model, base)?;
    if base.contains(x) {
        return Err(Error::InvalidParameter(format!(
            "state {} lies in the base region",
            model.label(x)
        )));
    }
    let free = model.all_states().difference(base).without(x);
    let needed = 1u128 << free.len();
    if needed > SUPERSET_CAP {
        return Err(Error::EnumerationTooLarge {
            needed,
            cap: SUPERSET_CAP,
        });
    }
    let target = StoppingRegion::empty().with(x);
    let mut best: Option<(ValueInterval, StoppingRegion)> = None;
    let mut hull_hi = f64::NEG_INFINITY;
    for extra in free.subsets() {
        let r = base.union(extra);
        let (vals, ok) = continuation_enclosure(model, r, target);
        let v = finish(model, vals[x], ok)?;
        hull_hi = hull_hi.max(v.hi);
        if best.is_none_or(|(b, _)| v.lo > b.lo) {
            best = Some((v, r));
        }
    }
    let (v, r) = best.expect("at least one superset");
    Ok((ValueInterval::new(v.lo, hull_hi, v.horizon_used), r))
}
