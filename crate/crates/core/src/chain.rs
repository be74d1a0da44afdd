//! Finite Markov chains: transition kernels, total-variation gaps and
//! first-hitting distributions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::region::{StoppingRegion, MAX_STATES};

/// A row-stochastic transition matrix over `n` states.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    n: usize,
    rows: Vec<f64>,
    support: Vec<Vec<(usize, f64)>>,
}

impl Kernel {
    /// Builds a kernel, checking that every row is a probability vector
    /// within `tol`.
    pub fn new(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::model("kernel", "state space is empty"));
        }
        if n > MAX_STATES {
            return Err(Error::model(
                "kernel",
                format!("at most {MAX_STATES} states are supported, got {n}"),
            ));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::model(
                    format!("kernel[{i}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            if let Some((j, p)) = row
                .iter()
                .enumerate()
                .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
            {
                return Err(Error::model(
                    format!("kernel[{i}][{j}]"),
                    format!("entry {p} is not a probability"),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::model(
                    format!("kernel[{i}]"),
                    format!("row sums to {sum}, expected 1"),
                ));
            }
            flat.extend_from_slice(row);
        }
        let support = (0..n)
            .map(|i| {
                flat[i * n..(i + 1) * n]
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|(_, p)| *p > 0.0)
                    .collect()
            })
            .collect();
        Ok(Kernel {
            n,
            rows: flat,
            support,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.n + j]
    }

    /// Nonzero entries of row `i`.
    pub fn support(&self, i: usize) -> &[(usize, f64)] {
        &self.support[i]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// One step of `μ ↦ μQ`, written into `out`.
    pub(crate) fn push_forward(&self, mu: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(j, p) in &self.support[i] {
                out[j] += m * p;
            }
        }
    }

    /// `Σ_z Q(y, z)·g(z)`.
    pub(crate) fn expect(&self, y: usize, g: &[f64]) -> f64 {
        self.support[y].iter().map(|&(z, p)| p * g[z]).sum()
    }

    fn successors(&self, i: usize) -> u64 {
        self.support[i].iter().fold(0, |m, &(j, _)| m | 1 << j)
    }

    /// For every state, the set of states reachable in one or more steps.
    pub fn reach_plus(&self) -> Vec<StoppingRegion> {
        self.reach_plus_blocked(StoppingRegion::empty())
    }

    /// Like [`Kernel::reach_plus`], but paths may not continue out of
    /// `blocked` states (they can still end there).
    pub fn reach_plus_blocked(&self, blocked: StoppingRegion) -> Vec<StoppingRegion> {
        let succ: Vec<u64> = (0..self.n).map(|i| self.successors(i)).collect();
        let mut reach = succ.clone();
        loop {
            let mut changed = false;
            for i in 0..self.n {
                let mut r = reach[i];
                for j in StoppingRegion::from_bits(reach[i]).iter() {
                    if !blocked.contains(j) {
                        r |= reach[j];
                    }
                }
                if r != reach[i] {
                    reach[i] = r;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        reach.into_iter().map(StoppingRegion::from_bits).collect()
    }

    /// States from which `region` is entered with positive probability at
    /// some time `t ≥ 1`.
    pub fn can_reach(&self, region: StoppingRegion) -> StoppingRegion {
        let reach = self.reach_plus();
        StoppingRegion::from_states(
            (0..self.n).filter(|&i| !reach[i].intersection(region).is_empty()),
        )
    }
}

/// `Σ_y |μ(y) − ν(y)|`: the total-variation distance with test functions
/// valued in `[-1, 1]`.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: nu.len(),
        });
    }
    Ok(mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum())
}

/// Largest row-wise TV distance over `states` (all states when `None`).
pub fn kernel_tv_gap(a: &Kernel, b: &Kernel, states: Option<StoppingRegion>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let states = states.unwrap_or_else(|| StoppingRegion::full(a.len()));
    if states.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(bad) = states.iter().find(|&s| s >= a.len()) {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: bad + 1,
        });
    }
    states
        .iter()
        .map(|x| tv_distance(a.row(x), b.row(x)))
        .try_fold(0.0f64, |acc, d| Ok(acc.max(d?)))
}

/// Law of `(ρ(S), X_ρ(S))` on `{ρ(S) ≤ T}` for a chain started at `source`,
/// where `ρ(S) = inf{t ≥ 1 : X_t ∈ S}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingDistribution {
    pub source: usize,
    pub region: StoppingRegion,
    pub horizon: usize,
    /// `mass[t - 1][y] = P(ρ(S) = t, X_t = y)` for `1 ≤ t ≤ T`.
    pub mass: Vec<Vec<f64>>,
    /// `P(ρ(S) > T)`.
    pub survival: f64,
}

impl HittingDistribution {
    /// `P(ρ(S) = t, X_t = y)`, with `t` counted from 1.
    pub fn at(&self, t: usize, y: usize) -> f64 {
        if t == 0 || t > self.horizon {
            0.0
        } else {
            self.mass[t - 1][y]
        }
    }

    pub fn stopped_mass(&self) -> f64 {
        self.mass.iter().flatten().sum()
    }
}

/// Propagates the chain restricted to the complement of `region`, peeling
/// off the mass that enters `region` at each step.
pub fn hitting_distribution(
    kernel: &Kernel,
    region: StoppingRegion,
    source: usize,
    horizon: usize,
) -> Result<HittingDistribution> {
    let n = kernel.len();
    if source >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: source + 1,
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "hitting horizon must be ≥ 1".into(),
        ));
    }
    let mut live = vec![0.0; n];
    live[source] = 1.0;
    let mut next = vec![0.0; n];
    let mut mass = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        kernel.push_forward(&live, &mut next);
        let mut row = vec![0.0; n];
        for y in 0..n {
            if region.contains(y) {
                row[y] = next[y];
                next[y] = 0.0;
            }
        }
        mass.push(row);
        std::mem::swap(&mut live, &mut next);
    }
    Ok(HittingDistribution {
        source,
        region,
        horizon,
        mass,
        survival: live.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Example chain a(0) ← b(1) ← c(2) with `Q(b, b) = 1/n`.
    fn abc(n: f64) -> Kernel {
        let p = if n.is_infinite() { 0.0 } else { 1.0 / n };
        Kernel::new(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![1.0 - p, p, 0.0],
                vec![0.0, 1.0, 0.0],
            ],
            1e-12,
        )
        .unwrap()
    }

    #[test]
    fn tv_examples() {
        let third = [1.0 / 3.0; 3];
        assert_eq!(tv_distance(&third, &third).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        let d = tv_distance(&[0.9, 0.1], &[1.0, 0.0]).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        assert!(matches!(
            tv_distance(&[1.0], &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kernel_gap_examples() {
        let q10 = abc(10.0);
        let qinf = abc(f64::INFINITY);
        assert_eq!(kernel_tv_gap(&q10, &q10, None).unwrap(), 0.0);
        let b = StoppingRegion::from_states([1]);
        assert!((kernel_tv_gap(&q10, &qinf, Some(b)).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            kernel_tv_gap(&q10, &qinf, Some(StoppingRegion::empty())),
            Err(Error::EmptySubset)
        ));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(Kernel::new(vec![vec![0.5, 0.4], vec![0.0, 1.0]], 1e-12).is_err());
        assert!(Kernel::new(vec![vec![1.5, -0.5], vec![0.0, 1.0]], 1e-12).is_err());
        assert!(Kernel::new(vec![vec![1.0], vec![0.0, 1.0]], 1e-12).is_err());
    }

    #[test]
    fn two_step_path() {
        let h = hitting_distribution(&abc(f64::INFINITY), StoppingRegion::from_states([0]), 2, 5)
            .unwrap();
        assert_eq!(h.at(1, 0), 0.0);
        assert_eq!(h.at(2, 0), 1.0);
        assert_eq!(h.survival, 0.0);
    }

    #[test]
    fn full_and_empty_regions() {
        let q = abc(4.0);
        let full = hitting_distribution(&q, StoppingRegion::full(3), 1, 3).unwrap();
        assert_eq!(full.mass[0], q.row(1).to_vec());
        assert_eq!(full.survival, 0.0);
        let none = hitting_distribution(&q, StoppingRegion::empty(), 1, 3).unwrap();
        assert_eq!(none.stopped_mass(), 0.0);
        assert_eq!(none.survival, 1.0);
    }

    #[test]
    fn reachability() {
        let q = abc(f64::INFINITY);
        let r = q.reach_plus();
        assert_eq!(r[2], StoppingRegion::from_states([0, 1]));
        assert_eq!(r[0], StoppingRegion::from_states([0]));
        let blocked = q.reach_plus_blocked(StoppingRegion::from_states([1]));
        assert_eq!(blocked[2], StoppingRegion::from_states([1]));
        assert_eq!(
            q.can_reach(StoppingRegion::from_states([1])),
            StoppingRegion::from_states([2])
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn kernel_strategy() -> impl Strategy<Value = Kernel> {
            (2usize..10).prop_flat_map(|n| {
                proptest::collection::vec(proptest::collection::vec(0u32..6, n), n).prop_map(
                    move |w| {
                        let rows = w
                            .into_iter()
                            .enumerate()
                            .map(|(i, mut r)| {
                                if r.iter().all(|&x| x == 0) {
                                    r[i] = 1;
                                }
                                let s: u32 = r.iter().sum();
                                r.into_iter().map(|x| x as f64 / s as f64).collect()
                            })
                            .collect();
                        Kernel::new(rows, 1e-12).unwrap()
                    },
                )
            })
        }

        proptest! {
            #[test]
            fn mass_is_conserved(q in kernel_strategy(), bits in any::<u64>(), x in 0usize..10, t in 1usize..=64) {
                let n = q.len();
                let region = StoppingRegion::from_bits(bits & StoppingRegion::full(n).bits());
                let h = hitting_distribution(&q, region, x % n, t).unwrap();
                prop_assert!((h.stopped_mass() + h.survival - 1.0).abs() < 1e-12);
                for row in &h.mass {
                    for (y, m) in row.iter().enumerate() {
                        prop_assert!(region.contains(y) || *m == 0.0);
                    }
                }
            }

            #[test]
            fn longer_horizons_refine(q in kernel_strategy(), bits in any::<u64>(), t in 1usize..32, extra in 1usize..32) {
                let n = q.len();
                let region = StoppingRegion::from_bits(bits & StoppingRegion::full(n).bits());
                let short = hitting_distribution(&q, region, 0, t).unwrap();
                let long = hitting_distribution(&q, region, 0, t + extra).unwrap();
                prop_assert_eq!(&short.mass[..], &long.mass[..t]);
                prop_assert!(long.stopped_mass() >= short.stopped_mass() - 1e-15);
            }

            #[test]
            fn tv_is_a_metric(a in proptest::collection::vec(0u32..9, 5), b in proptest::collection::vec(0u32..9, 5), c in proptest::collection::vec(0u32..9, 5)) {
                let norm = |v: Vec<u32>| {
                    let s: u32 = v.iter().sum::<u32>().max(1);
                    let mut out: Vec<f64> = v.iter().map(|x| *x as f64 / s as f64).collect();
                    if v.iter().all(|&x| x == 0) { out[0] = 1.0; }
                    out
                };
                let (a, b, c) = (norm(a), norm(b), norm(c));
                let ab = tv_distance(&a, &b).unwrap();
                let bc = tv_distance(&b, &c).unwrap();
                let ac = tv_distance(&a, &c).unwrap();
                prop_assert!(ac <= ab + bc + 1e-12);
                prop_assert!(ab <= 2.0 + 1e-12);
                prop_assert!((ab - tv_distance(&b, &a).unwrap()).abs() < 1e-15);
            }
        }
    }
}
