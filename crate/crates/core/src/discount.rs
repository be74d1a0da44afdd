//! Discount functions `δ: ℕ → [0, 1]` and checks of the standing assumptions.
//!
//! Every family is normalized with `δ(0) = 1`, `δ(1) < 1` and `δ(t) → 0`.
//! The solver additionally relies on log-subadditivity,
//! `δ(t + s) ≥ δ(t)·δ(s)`, which [`DiscountFunction::validate_assumption`]
//! checks on a finite grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the extended time axis `ℕ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Time {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DiscountFunction {
    /// `β^t`
    Exponential { beta: f64 },
    /// `1 / (1 + β t)`
    Hyperbolic { beta: f64 },
    /// `(1 + β t)^(-γ)`
    GenHyperbolic { beta: f64, gamma: f64 },
    /// `w β₁^t + (1 - w) β₂^t`
    PseudoExponential { weight: f64, beta1: f64, beta2: f64 },
    /// Explicit values `δ(0..=k)` followed by a geometric tail
    /// `δ(k + j) = δ(k)·tail^j`.
    Table { values: Vec<f64>, tail: f64 },
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDiscount(format!(
            "{name} must lie in (0, 1), got {v}"
        )))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDiscount(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl DiscountFunction {
    pub fn exponential(beta: f64) -> Result<Self> {
        let d = DiscountFunction::Exponential { beta };
        d.check_params()?;
        Ok(d)
    }

    pub fn hyperbolic(beta: f64) -> Result<Self> {
        let d = DiscountFunction::Hyperbolic { beta };
        d.check_params()?;
        Ok(d)
    }

    pub fn gen_hyperbolic(beta: f64, gamma: f64) -> Result<Self> {
        let d = DiscountFunction::GenHyperbolic { beta, gamma };
        d.check_params()?;
        Ok(d)
    }

    pub fn pseudo_exponential(weight: f64, beta1: f64, beta2: f64) -> Result<Self> {
        let d = DiscountFunction::PseudoExponential {
            weight,
            beta1,
            beta2,
        };
        d.check_params()?;
        Ok(d)
    }

    pub fn table(values: Vec<f64>, tail: f64) -> Result<Self> {
        let d = DiscountFunction::Table { values, tail };
        d.check_params()?;
        Ok(d)
    }

    /// Parameter ranges that guarantee `δ(0) = 1`, `δ(1) < 1` and `δ(t) → 0`.
    pub fn check_params(&self) -> Result<()> {
        match *self {
            DiscountFunction::Exponential { beta } => open_unit("beta", beta),
            DiscountFunction::Hyperbolic { beta } => positive("beta", beta),
            DiscountFunction::GenHyperbolic { beta, gamma } => {
                positive("beta", beta)?;
                positive("gamma", gamma)
            }
            DiscountFunction::PseudoExponential {
                weight,
                beta1,
                beta2,
            } => {
                if !(0.0..=1.0).contains(&weight) {
                    return Err(Error::InvalidDiscount(format!(
                        "weight must lie in [0, 1], got {weight}"
                    )));
                }
                open_unit("beta1", beta1)?;
                open_unit("beta2", beta2)
            }
            DiscountFunction::Table { ref values, tail } => {
                if values.is_empty() {
                    return Err(Error::InvalidDiscount("table is empty".into()));
                }
                if values[0] != 1.0 {
                    return Err(Error::InvalidDiscount(format!(
                        "table must start with δ(0) = 1, got {}",
                        values[0]
                    )));
                }
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidDiscount(format!(
                        "table entries must lie in [0, 1], got {v}"
                    )));
                }
                if !(0.0..1.0).contains(&tail) {
                    return Err(Error::InvalidDiscount(format!(
                        "tail factor must lie in [0, 1), got {tail}"
                    )));
                }
                if self.at(1) >= 1.0 {
                    return Err(Error::InvalidDiscount("δ(1) must be < 1".into()));
                }
                Ok(())
            }
        }
    }

    /// `δ(t)` for finite `t`.
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            DiscountFunction::Exponential { beta } => powu(beta, t),
            DiscountFunction::Hyperbolic { beta } => 1.0 / (1.0 + beta * t as f64),
            DiscountFunction::GenHyperbolic { beta, gamma } => (1.0 + beta * t as f64).powf(-gamma),
            DiscountFunction::PseudoExponential {
                weight,
                beta1,
                beta2,
            } => weight * powu(beta1, t) + (1.0 - weight) * powu(beta2, t),
            DiscountFunction::Table { ref values, tail } => match values.get(t) {
                Some(v) => *v,
                None => {
                    let last = values.len() - 1;
                    values[last] * powu(tail, t - last)
                }
            },
        }
    }

    /// `δ(t)` on the extended axis, with `δ(∞) = 0`.
    pub fn evaluate(&self, t: Time) -> f64 {
        match t {
            Time::Finite(t) => self.at(t),
            Time::Infinite => 0.0,
        }
    }

    pub fn is_exponential(&self) -> bool {
        match *self {
            DiscountFunction::Exponential { .. } => true,
            DiscountFunction::PseudoExponential {
                weight,
                beta1,
                beta2,
            } => beta1 == beta2 || weight == 0.0 || weight == 1.0,
            _ => false,
        }
    }

    /// Scans `0 ≤ s, t` with `s + t ≤ horizon` for violations of the
    /// normalization, monotonicity and log-subadditivity requirements.
    pub fn validate_assumption(&self, horizon: usize) -> AssumptionReport {
        let horizon = horizon.max(2);
        let values: Vec<f64> = (0..=horizon).map(|t| self.at(t)).collect();
        let normalized = values[0] == 1.0;
        let contracting = values[1] < 1.0;
        let monotone_violation = (0..horizon)
            .find(|&t| values[t + 1] > values[t] * (1.0 + REL_SLACK))
            .map(|t| t + 1);
        let mut log_subadditive_violation = None;
        'outer: for s in 1..=horizon / 2 {
            for t in s..=horizon - s {
                let prod = values[s] * values[t];
                if values[s + t] < prod * (1.0 - REL_SLACK) {
                    log_subadditive_violation = Some(Witness {
                        s,
                        t,
                        joint: values[s + t],
                        product: prod,
                    });
                    break 'outer;
                }
            }
        }
        AssumptionReport {
            horizon,
            normalized,
            contracting,
            monotone_violation,
            log_subadditive_violation,
        }
    }
}

const REL_SLACK: f64 = 1e-12;

fn powu(base: f64, t: usize) -> f64 {
    match i32::try_from(t) {
        Ok(t) => base.powi(t),
        Err(_) => base.powf(t as f64),
    }
}

/// A pair `(s, t)` with `δ(s + t) < δ(s)·δ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub s: usize,
    pub t: usize,
    pub joint: f64,
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub horizon: usize,
    pub normalized: bool,
    pub contracting: bool,
    /// First `t` with `δ(t) > δ(t - 1)`.
    pub monotone_violation: Option<usize>,
    pub log_subadditive_violation: Option<Witness>,
}

impl AssumptionReport {
    pub fn passes(&self) -> bool {
        self.normalized
            && self.contracting
            && self.monotone_violation.is_none()
            && self.log_subadditive_violation.is_none()
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passes() {
            return write!(f, "pass (T = {})", self.horizon);
        }
        write!(f, "fail (T = {}):", self.horizon)?;
        if !self.normalized {
            write!(f, " δ(0) ≠ 1;")?;
        }
        if !self.contracting {
            write!(f, " δ(1) ≥ 1;")?;
        }
        if let Some(t) = self.monotone_violation {
            write!(f, " δ increases at t = {t};")?;
        }
        if let Some(w) = self.log_subadditive_violation {
            write!(
                f,
                " δ({}) = {} < δ({})·δ({}) = {};",
                w.s + w.t,
                w.joint,
                w.s,
                w.t,
                w.product
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for DiscountFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscountFunction::Exponential { beta } => write!(f, "exponential:{beta}"),
            DiscountFunction::Hyperbolic { beta } => write!(f, "hyperbolic:{beta}"),
            DiscountFunction::GenHyperbolic { beta, gamma } => {
                write!(f, "gen-hyperbolic:{beta},{gamma}")
            }
            DiscountFunction::PseudoExponential {
                weight,
                beta1,
                beta2,
            } => write!(f, "pseudo-exponential:{weight},{beta1},{beta2}"),
            DiscountFunction::Table { values, tail } => {
                write!(f, "table:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ";{tail}")
            }
        }
    }
}

/// Parses the compact form used on the command line, e.g. `hyperbolic:1`,
/// `exponential:0.9`, `gen-hyperbolic:1,2`, `pseudo-exponential:0.5,0.9,0.6`
/// or `table:1,1/2,1/3;1/2`.
impl FromStr for DiscountFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("discount `{s}` lacks `family:params`")))?;
        let nums = |text: &str| -> Result<Vec<f64>> {
            text.split(',')
                .map(|p| crate::io::parse_number(p.trim()))
                .collect()
        };
        let arity = |v: &[f64], k: usize| -> Result<()> {
            if v.len() == k {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "discount family `{family}` takes {k} parameter(s), got {}",
                    v.len()
                )))
            }
        };
        match family.trim() {
            "exponential" => {
                let p = nums(rest)?;
                arity(&p, 1)?;
                DiscountFunction::exponential(p[0])
            }
            "hyperbolic" => {
                let p = nums(rest)?;
                arity(&p, 1)?;
                DiscountFunction::hyperbolic(p[0])
            }
            "gen-hyperbolic" => {
                let p = nums(rest)?;
                arity(&p, 2)?;
                DiscountFunction::gen_hyperbolic(p[0], p[1])
            }
            "pseudo-exponential" => {
                let p = nums(rest)?;
                arity(&p, 3)?;
                DiscountFunction::pseudo_exponential(p[0], p[1], p[2])
            }
            "table" => {
                let (vals, tail) = rest
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("table discount needs `values;tail`".into()))?;
                DiscountFunction::table(nums(vals)?, crate::io::parse_number(tail.trim())?)
            }
            other => Err(Error::Parse(format!("unknown discount family `{other}`"))),
        }
    }
}
