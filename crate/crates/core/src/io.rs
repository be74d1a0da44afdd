//! JSON model and sequence files.
//!
//! Numbers may be written as JSON numbers or as exact fractions `"p/q"`.
//! The original spelling is kept so that a parsed file serializes back to
//! the same text.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discount::DiscountFunction;
use crate::error::{Error, Result};
use crate::model::{MarkovModel, NumericPolicy};
use crate::stability::ModelSequence;

/// Parses `"3/4"`, `"-1/2"`, `"0.25"` or `"1e-3"`.
pub fn parse_number(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Parse(format!("`{text}` is not a number or fraction p/q"));
    match text.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(Error::Parse(format!("`{text}` has a zero denominator")));
            }
            Ok(p as f64 / q as f64)
        }
        None => {
            let v: f64 = text.parse().map_err(|_| bad())?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        }
    }
}

/// A number as written in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Text(s) => parse_number(s),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Number(v) => write!(f, "{v}"),
            Scalar::Text(s) => write!(f, "{s}"),
        }
    }
}

/// Discount block of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiscountSpec {
    Family {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, Scalar>,
    },
    Table {
        table: Vec<Scalar>,
        tail: Scalar,
    },
}

impl DiscountSpec {
    pub fn to_discount(&self) -> Result<DiscountFunction> {
        match self {
            DiscountSpec::Family { family, params } => {
                let get = |name: &str| -> Result<f64> {
                    params
                        .get(name)
                        .ok_or_else(|| {
                            Error::model(
                                format!("discount.params.{name}"),
                                format!("missing for family `{family}`"),
                            )
                        })?
                        .value()
                        .map_err(|e| Error::model(format!("discount.params.{name}"), e.to_string()))
                };
                let allowed: &[&str] = match family.as_str() {
                    "exponential" | "hyperbolic" => &["beta"],
                    "gen-hyperbolic" => &["beta", "gamma"],
                    "pseudo-exponential" => &["weight", "beta1", "beta2"],
                    other => {
                        return Err(Error::model(
                            "discount.family",
                            format!("unknown family `{other}`"),
                        ))
                    }
                };
                if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
                    return Err(Error::model(
                        format!("discount.params.{extra}"),
                        format!("not a parameter of `{family}`"),
                    ));
                }
                match family.as_str() {
                    "exponential" => DiscountFunction::exponential(get("beta")?),
                    "hyperbolic" => DiscountFunction::hyperbolic(get("beta")?),
                    "gen-hyperbolic" => {
                        DiscountFunction::gen_hyperbolic(get("beta")?, get("gamma")?)
                    }
                    _ => DiscountFunction::pseudo_exponential(
                        get("weight")?,
                        get("beta1")?,
                        get("beta2")?,
                    ),
                }
            }
            DiscountSpec::Table { table, tail } => {
                let values = table
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v.value().map_err(|e| {
                            Error::model(format!("discount.table[{i}]"), e.to_string())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let tail = tail
                    .value()
                    .map_err(|e| Error::model("discount.tail", e.to_string()))?;
                DiscountFunction::table(values, tail)
            }
        }
    }

    pub fn from_discount(d: &DiscountFunction) -> Self {
        let family = |name: &str, ps: &[(&str, f64)]| DiscountSpec::Family {
            family: name.to_string(),
            params: ps
                .iter()
                .map(|(k, v)| (k.to_string(), Scalar::Number(*v)))
                .collect(),
        };
        match d {
            DiscountFunction::Exponential { beta } => family("exponential", &[("beta", *beta)]),
            DiscountFunction::Hyperbolic { beta } => family("hyperbolic", &[("beta", *beta)]),
            DiscountFunction::GenHyperbolic { beta, gamma } => {
                family("gen-hyperbolic", &[("beta", *beta), ("gamma", *gamma)])
            }
            DiscountFunction::PseudoExponential {
                weight,
                beta1,
                beta2,
            } => family(
                "pseudo-exponential",
                &[("weight", *weight), ("beta1", *beta1), ("beta2", *beta2)],
            ),
            DiscountFunction::Table { values, tail } => DiscountSpec::Table {
                table: values.iter().map(|v| Scalar::Number(*v)).collect(),
                tail: Scalar::Number(*tail),
            },
        }
    }
}

/// On-disk form of a [`MarkovModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub kernel: Vec<Vec<Scalar>>,
    pub reward: Vec<Scalar>,
    pub discount: DiscountSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<NumericPolicy>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    pub fn to_model(&self) -> Result<MarkovModel> {
        let kernel = self
            .kernel
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.value()
                            .map_err(|e| Error::model(format!("kernel[{i}][{j}]"), e.to_string()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let reward = self
            .reward
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.value()
                    .map_err(|e| Error::model(format!("reward[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let discount = self.discount.to_discount().map_err(|e| match e {
            Error::InvalidDiscount(msg) => Error::model("discount", msg),
            other => other,
        })?;
        MarkovModel::new(
            self.states.clone(),
            kernel,
            reward,
            discount,
            self.policy.unwrap_or_default(),
        )
    }

    pub fn from_model(model: &MarkovModel) -> Self {
        ModelFile {
            states: model.labels().to_vec(),
            kernel: model
                .kernel()
                .to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(Scalar::Number).collect())
                .collect(),
            reward: model.reward().iter().map(|v| Scalar::Number(*v)).collect(),
            discount: DiscountSpec::from_discount(model.discount()),
            policy: Some(*model.policy()),
        }
    }
}

/// One finite-`n` entry of a sequence file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub n: u64,
    pub model: ModelFile,
}

/// Explicit model sequence `(f^n, Q^n)` together with its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    #[serde(default)]
    pub name: Option<String>,
    pub models: Vec<SequenceEntry>,
    pub limit: ModelFile,
}

impl SequenceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn to_sequence(&self) -> Result<ModelSequence> {
        let mut models = BTreeMap::new();
        for (i, entry) in self.models.iter().enumerate() {
            let m = entry
                .model
                .to_model()
                .map_err(|e| prefixed(e, &format!("models[{i}].model")))?;
            if models.insert(entry.n, m).is_some() {
                return Err(Error::model(
                    format!("models[{i}].n"),
                    format!("duplicate n = {}", entry.n),
                ));
            }
        }
        let limit = self.limit.to_model().map_err(|e| prefixed(e, "limit"))?;
        ModelSequence::explicit(self.name.as_deref().unwrap_or("sequence"), models, limit)
    }
}

fn prefixed(e: Error, path: &str) -> Error {
    match e {
        Error::InvalidModel { field, message } => Error::InvalidModel {
            field: format!("{path}.{field}"),
            message,
        },
        other => other,
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<MarkovModel> {
    ModelFile::from_json(&read_text(path)?)?.to_model()
}

pub fn read_sequence(path: &Path) -> Result<ModelSequence> {
    SequenceFile::from_json(&read_text(path)?)?.to_sequence()
}
