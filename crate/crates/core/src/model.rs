use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::chain::Kernel;
use crate::discount::DiscountFunction;
use crate::error::{Error, Result};
use crate::region::StoppingRegion;

/// Tolerances and caps shared by every numerical routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericPolicy {
    /// Target width of value enclosures.
    pub tol: f64,
    /// Hard cap on the truncation horizon.
    #[serde(alias = "T_max")]
    pub t_max: usize,
    /// Slack granted to weak inequalities in equilibrium conditions.
    pub eq_tol: f64,
    /// Catalog searches may visit at most `2^enum_cap` candidate regions.
    pub enum_cap: u32,
    /// Allowed deviation of kernel row sums from 1.
    pub chain_tol: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            tol: 1e-9,
            t_max: 10_000,
            eq_tol: 1e-9,
            enum_cap: 22,
            chain_tol: 1e-12,
        }
    }
}

impl NumericPolicy {
    // written negated so that NaN is rejected
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::model("policy.tol", "must be positive"));
        }
        if !(self.eq_tol >= 0.0) {
            return Err(Error::model("policy.eq_tol", "must be nonnegative"));
        }
        if self.t_max < 2 {
            return Err(Error::model("policy.t_max", "must be at least 2"));
        }
        if self.enum_cap > 40 {
            return Err(Error::model("policy.enum_cap", "must be at most 40"));
        }
        if !(self.chain_tol >= 0.0) {
            return Err(Error::model("policy.chain_tol", "must be nonnegative"));
        }
        Ok(())
    }
}

/// A finite Markov chain with a reward function and a discount function.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    labels: Vec<String>,
    kernel: Kernel,
    reward: Vec<f64>,
    discount: DiscountFunction,
    policy: NumericPolicy,
}

impl MarkovModel {
    pub fn new(
        labels: Vec<String>,
        kernel: Vec<Vec<f64>>,
        reward: Vec<f64>,
        discount: DiscountFunction,
        policy: NumericPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        discount
            .check_params()
            .map_err(|e| Error::model("discount", e.to_string()))?;
        let kernel = Kernel::new(kernel, policy.chain_tol)?;
        let n = kernel.len();
        if labels.len() != n {
            return Err(Error::model(
                "states",
                format!("{} labels for {n} kernel rows", labels.len()),
            ));
        }
        let mut seen = HashSet::new();
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::model(format!("states[{i}]"), "empty label"));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::model(
                    format!("states[{i}]"),
                    format!("duplicate label `{l}`"),
                ));
            }
        }
        check_reward(&reward, n)?;
        Ok(MarkovModel {
            labels,
            kernel,
            reward,
            discount,
            policy,
        })
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    pub fn discount(&self) -> &DiscountFunction {
        &self.discount
    }

    pub fn policy(&self) -> &NumericPolicy {
        &self.policy
    }

    /// `M = max_x f(x)`.
    pub fn max_reward(&self) -> f64 {
        self.reward.iter().copied().fold(0.0, f64::max)
    }

    pub fn all_states(&self) -> StoppingRegion {
        StoppingRegion::full(self.len())
    }

    pub fn with_reward(&self, reward: Vec<f64>) -> Result<Self> {
        check_reward(&reward, self.len())?;
        Ok(MarkovModel {
            reward,
            ..self.clone()
        })
    }

    pub fn with_policy(&self, policy: NumericPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(MarkovModel {
            policy,
            ..self.clone()
        })
    }

    pub fn with_discount(&self, discount: DiscountFunction) -> Result<Self> {
        discount.check_params()?;
        Ok(MarkovModel {
            discount,
            ..self.clone()
        })
    }

    /// Region from state labels.
    pub fn region<S: AsRef<str>>(&self, labels: &[S]) -> Result<StoppingRegion> {
        labels
            .iter()
            .map(|l| self.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(StoppingRegion::from_states)
    }

    pub fn region_labels(&self, region: StoppingRegion) -> Vec<String> {
        region.iter().map(|i| self.labels[i].clone()).collect()
    }

    /// `{a,b}`-style rendering with labels.
    pub fn format_region(&self, region: StoppingRegion) -> String {
        format!("{{{}}}", self.region_labels(region).join(","))
    }
}

fn check_reward(reward: &[f64], n: usize) -> Result<()> {
    if reward.len() != n {
        return Err(Error::model(
            "reward",
            format!("expected {n} entries, found {}", reward.len()),
        ));
    }
    if let Some((i, r)) = reward
        .iter()
        .enumerate()
        .find(|(_, r)| !r.is_finite() || **r < 0.0)
    {
        return Err(Error::model(
            format!("reward[{i}]"),
            format!("{r} is not a finite nonnegative number"),
        ));
    }
    Ok(())
}
