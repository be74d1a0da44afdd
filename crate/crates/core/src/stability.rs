//! Experiments over model sequences `(f^n, Q^n)` and their limit.
//!
//! Asymptotic statements are probed on a finite grid of `n` values:
//! * the n-tail is the last `⌈(len + 1) / 2⌉` grid points;
//! * `liminf` of sets: states in every set of the n-tail;
//! * `limsup` of sets: states in at least two sets of the grid, one of them in
//!   the n-tail (in the only set when the grid has one point);
//! * a gap series evidences convergence when it is nonincreasing and its
//!   last value is at most [`CONVERGENCE_EVIDENCE`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Serialize, Serializer};

use crate::chain::kernel_tv_gap;
use crate::equilibrium::{smallest_equilibrium, Enumerator, Sup};
use crate::error::{Error, Result};
use crate::model::MarkovModel;
use crate::region::StoppingRegion;
use crate::repro::{build_model, ExampleId, ExampleParams};
use crate::value::{j_values, ValueInterval};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest final gap still read as evidence of convergence.
pub const CONVERGENCE_EVIDENCE: f64 = 0.05;

/// Parameters the defining example leaves open, plus remarks on its text.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ScenarioMeta {
    pub id: String,
    pub description: String,
    /// Every parameter with the value used.
    pub params: BTreeMap<String, String>,
    /// Choices made where the example is silent.
    pub defaults: Vec<String>,
    /// Corrected readings of values commonly misstated for the scenario.
    pub errata: Vec<String>,
    #[serde(skip)]
    pub default_x: Vec<String>,
    #[serde(skip)]
    pub default_subset: Vec<String>,
    #[serde(skip)]
    pub default_n: Vec<u64>,
    #[serde(skip)]
    pub default_eps: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Source {
    Example {
        id: ExampleId,
        params: ExampleParams,
    },
    Explicit {
        models: BTreeMap<u64, MarkovModel>,
    },
}

/// `(f^n, Q^n)` for `n` in a grid, and the limit model.
#[derive(Debug, Clone)]
pub struct ModelSequence {
    pub meta: ScenarioMeta,
    pub limit: MarkovModel,
    source: Source,
}

impl ModelSequence {
    pub(crate) fn from_example(
        id: ExampleId,
        params: ExampleParams,
        meta: ScenarioMeta,
    ) -> Result<Self> {
        let limit = build_model(id, &params, None)?;
        Ok(ModelSequence {
            meta,
            limit,
            source: Source::Example { id, params },
        })
    }

    /// A sequence given model by model. All models must share labels and
    /// discount with the limit.
    pub fn explicit(
        name: &str,
        models: BTreeMap<u64, MarkovModel>,
        limit: MarkovModel,
    ) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidParameter(
                "sequence has no finite-n models".into(),
            ));
        }
        for (n, m) in &models {
            if m.labels() != limit.labels() {
                return Err(Error::model(
                    format!("models[n={n}].states"),
                    "labels differ from the limit model",
                ));
            }
            if m.discount() != limit.discount() {
                return Err(Error::model(
                    format!("models[n={n}].discount"),
                    "discount differs from the limit model",
                ));
            }
        }
        let meta = ScenarioMeta {
            id: name.to_string(),
            description: "explicit sequence".into(),
            default_x: limit.labels().to_vec(),
            default_subset: limit.labels().to_vec(),
            default_n: models.keys().copied().collect(),
            default_eps: vec![0.1, 0.01],
            ..ScenarioMeta::default()
        };
        Ok(ModelSequence {
            meta,
            limit,
            source: Source::Explicit { models },
        })
    }

    pub fn model(&self, n: u64) -> Result<MarkovModel> {
        match &self.source {
            Source::Example { id, params } => build_model(*id, params, Some(n)),
            Source::Explicit { models } => models.get(&n).cloned().ok_or_else(|| {
                Error::InvalidParameter(format!("sequence has no model for n = {n}"))
            }),
        }
    }

    pub fn labels(&self) -> &[String] {
        self.limit.labels()
    }
}

/// Position in the index set `ℕ ∪ {∞}`; serializes as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GridIndex {
    Finite(u64),
    Infinite,
}

impl fmt::Display for GridIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridIndex::Finite(n) => write!(f, "{n}"),
            GridIndex::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for GridIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GridIndex::Finite(n) => s.serialize_u64(*n),
            GridIndex::Infinite => s.serialize_str("inf"),
        }
    }
}

/// States in every set of the n-tail.
pub fn set_liminf(sets: &[StoppingRegion]) -> Result<StoppingRegion> {
    if sets.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(tail(sets)
        .iter()
        .fold(StoppingRegion::full(64), |acc, r| acc.intersection(*r)))
}

/// States in at least two sets of the grid, one of them in the n-tail.
pub fn set_limsup(sets: &[StoppingRegion]) -> Result<StoppingRegion> {
    if sets.is_empty() {
        return Err(Error::EmptySubset);
    }
    let need = sets.len().min(2);
    let recent = tail(sets)
        .iter()
        .fold(StoppingRegion::empty(), |a, r| a.union(*r));
    Ok(StoppingRegion::from_states(recent.iter().filter(|&s| {
        sets.iter().filter(|r| r.contains(s)).count() >= need
    })))
}

/// The final half of the grid, `⌈len / 2⌉` entries.
fn tail<T>(xs: &[T]) -> &[T] {
    &xs[xs.len() / 2..]
}

/// Nonincreasing within `slack`, ending at or below the evidence threshold.
fn evidences_convergence(series: &[f64], slack: f64) -> bool {
    series.windows(2).all(|w| w[1] <= w[0] + slack)
        && series.last().is_some_and(|&g| g <= CONVERGENCE_EVIDENCE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub n: GridIndex,
    pub tv_global: f64,
    pub tv_subset: f64,
    pub f_global: f64,
    pub f_subset: f64,
    /// Row-wise TV gap at each subset state.
    pub tv_by_state: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub subset: Vec<String>,
    pub rows: Vec<DiagnosticRow>,
    /// Global gaps of `f` and `Q` evidence uniform convergence.
    pub uniform: bool,
    /// Gaps on the subset evidence convergence there.
    pub local: bool,
    /// `sup_{x ∈ K} Q^∞(x, K)` and `inf_{x ∈ K} Q^∞(x, K)` with `K` the subset.
    pub tightness_sup: f64,
    pub tightness_inf: f64,
    pub mode: String,
}

fn sup_gap(a: &[f64], b: &[f64], states: StoppingRegion) -> f64 {
    states
        .iter()
        .map(|s| (a[s] - b[s]).abs())
        .fold(0.0, f64::max)
}

/// Sup-norm reward gaps and TV kernel gaps against the limit, per grid point.
pub fn convergence_diagnostics(
    seq: &ModelSequence,
    subset: StoppingRegion,
    n_grid: &[u64],
) -> Result<Diagnostics> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let lim = &seq.limit;
    let all = lim.all_states();
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let m = seq.model(n)?;
        let tv_by_state = subset
            .iter()
            .map(|s| {
                kernel_tv_gap(
                    m.kernel(),
                    lim.kernel(),
                    Some(StoppingRegion::empty().with(s)),
                )
                .map(|g| (lim.label(s).to_string(), g))
            })
            .collect::<Result<_>>()?;
        rows.push(DiagnosticRow {
            n: GridIndex::Finite(n),
            tv_global: kernel_tv_gap(m.kernel(), lim.kernel(), None)?,
            tv_subset: kernel_tv_gap(m.kernel(), lim.kernel(), Some(subset))?,
            f_global: sup_gap(m.reward(), lim.reward(), all),
            f_subset: sup_gap(m.reward(), lim.reward(), subset),
            tv_by_state,
        });
    }
    let series = |get: fn(&DiagnosticRow) -> f64| -> Vec<f64> { rows.iter().map(get).collect() };
    let slack = 1e-12;
    let uniform = evidences_convergence(&series(|r| r.tv_global), slack)
        && evidences_convergence(&series(|r| r.f_global), slack);
    let local = evidences_convergence(&series(|r| r.tv_subset), slack)
        && evidences_convergence(&series(|r| r.f_subset), slack);
    let mass_in = |x: usize| -> f64 { subset.iter().map(|y| lim.kernel().get(x, y)).sum() };
    let tightness_sup = subset.iter().map(mass_in).fold(0.0, f64::max);
    let tightness_inf = subset.iter().map(mass_in).fold(1.0, f64::min);
    let mode = if uniform {
        "uniform"
    } else if local {
        "local"
    } else {
        "none"
    };
    Ok(Diagnostics {
        subset: lim.region_labels(subset),
        rows,
        uniform,
        local,
        tightness_sup,
        tightness_inf,
        mode: mode.to_string(),
    })
}

/// Grids and states for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_grid: Vec<u64>,
    pub eps_grid: Vec<f64>,
    pub x: Vec<String>,
    /// Subset for local gaps; defaults to the scenario's choice.
    pub subset: Option<Vec<String>>,
}

impl ExperimentConfig {
    pub fn defaults(seq: &ModelSequence) -> Self {
        ExperimentConfig {
            n_grid: seq.meta.default_n.clone(),
            eps_grid: seq.meta.default_eps.clone(),
            x: seq.meta.default_x.clone(),
            subset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueCell {
    pub x: String,
    pub value: Option<ValueInterval>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupCell {
    pub value: ValueInterval,
    pub region: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedCell {
    pub eps: f64,
    pub x: String,
    pub v_eps: Option<SupCell>,
    pub w_eps: Option<SupCell>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub n: GridIndex,
    pub s_star: Option<Vec<String>>,
    pub values: Vec<ValueCell>,
    pub relaxed: Vec<RelaxedCell>,
    pub error: Option<String>,
    #[serde(skip)]
    region: Option<StoppingRegion>,
}

impl GridRow {
    pub fn value(&self, x: &str) -> Option<ValueInterval> {
        self.values.iter().find(|c| c.x == x).and_then(|c| c.value)
    }

    pub fn relaxed(&self, eps: f64, x: &str) -> Option<&RelaxedCell> {
        self.relaxed.iter().find(|c| c.eps == eps && c.x == x)
    }

    pub fn region(&self) -> Option<StoppingRegion> {
        self.region
    }
}

/// One theorem-shaped inequality checked on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictLine {
    pub id: String,
    pub statement: String,
    pub holds: bool,
    /// Whether the grid evidences the hypothesis under which the statement
    /// is guaranteed; `None` when it has none.
    pub hypothesis_met: Option<bool>,
    /// Whether the inequality is strict on the grid, where meaningful.
    pub strict: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub schema: u32,
    pub scenario: ScenarioMeta,
    pub grid_semantics: String,
    pub n_grid: Vec<u64>,
    pub eps_grid: Vec<f64>,
    pub x: Vec<String>,
    pub rows: Vec<GridRow>,
    pub limit: GridRow,
    pub set_liminf: Option<Vec<String>>,
    pub set_limsup: Option<Vec<String>>,
    pub diagnostics: Diagnostics,
    pub verdicts: Vec<VerdictLine>,
}

pub const GRID_SEMANTICS: &str = "n-tail: last ceil(len/2) grid points; \
liminf: member of every set in the n-tail; \
limsup: member of at least two sets of the grid, one of them in the n-tail; \
convergence evidenced: gap series nonincreasing with last value <= 0.05";

fn sup_cell(model: &MarkovModel, s: &Option<Sup>) -> Option<SupCell> {
    s.map(|s| SupCell {
        value: s.value,
        region: model.region_labels(s.region),
    })
}

fn solve_row(n: GridIndex, model: &MarkovModel, xs: &[usize], eps_grid: &[f64]) -> GridRow {
    let labels = model.labels();
    let mut row = GridRow {
        n,
        s_star: None,
        values: Vec::new(),
        relaxed: Vec::new(),
        error: None,
        region: None,
    };
    match smallest_equilibrium(model).and_then(|(s, _)| Ok((s, j_values(model, s)?))) {
        Ok((s, vals)) => {
            row.s_star = Some(model.region_labels(s));
            row.region = Some(s);
            row.values = xs
                .iter()
                .map(|&x| ValueCell {
                    x: labels[x].clone(),
                    value: Some(vals[x]),
                    error: None,
                })
                .collect();
        }
        Err(e) => {
            row.error = Some(e.to_string());
            row.values = xs
                .iter()
                .map(|&x| ValueCell {
                    x: labels[x].clone(),
                    value: None,
                    error: Some(e.to_string()),
                })
                .collect();
        }
    }
    let targets = StoppingRegion::from_states(xs.iter().copied());
    let mut enumerator = Enumerator::new(model);
    for &eps in eps_grid {
        match enumerator.relaxed(eps, targets) {
            Ok(rel) => row.relaxed.extend(xs.iter().map(|&x| RelaxedCell {
                eps,
                x: labels[x].clone(),
                v_eps: sup_cell(model, &rel.v[x]),
                w_eps: sup_cell(model, &rel.w[x]),
                error: None,
            })),
            Err(e) => row.relaxed.extend(xs.iter().map(|&x| RelaxedCell {
                eps,
                x: labels[x].clone(),
                v_eps: None,
                w_eps: None,
                error: Some(e.to_string()),
            })),
        }
    }
    row
}

fn resolve(model: &MarkovModel, labels: &[String]) -> Result<Vec<usize>> {
    labels.iter().map(|l| model.index_of(l)).collect()
}

/// Fills the `(n, ε, x)` table and evaluates the verdicts. Relaxed values
/// are computed on finite `n` only; a failing cell records its error and
/// the run continues.
pub fn run_sequence_experiment(
    seq: &ModelSequence,
    config: &ExperimentConfig,
) -> Result<StabilityReport> {
    if config.n_grid.is_empty() {
        return Err(Error::InvalidParameter("n grid is empty".into()));
    }
    if let Some(e) = config
        .eps_grid
        .iter()
        .find(|e| !(e.is_finite() && **e >= 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "ε must be finite and ≥ 0, got {e}"
        )));
    }
    let lim = &seq.limit;
    let xs = resolve(lim, &config.x)?;
    let subset_labels = config.subset.as_ref().unwrap_or(&seq.meta.default_subset);
    let subset = StoppingRegion::from_states(resolve(lim, subset_labels)?);
    let mut n_grid = config.n_grid.clone();
    n_grid.sort_unstable();
    n_grid.dedup();
    let mut eps_grid = config.eps_grid.clone();
    eps_grid.sort_by(|a, b| b.total_cmp(a));
    eps_grid.dedup();

    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in &n_grid {
        let model = seq.model(n)?;
        rows.push(solve_row(GridIndex::Finite(n), &model, &xs, &eps_grid));
    }
    let limit = solve_row(GridIndex::Infinite, lim, &xs, &[]);
    let diagnostics = convergence_diagnostics(seq, subset, &n_grid)?;

    let sets: Option<Vec<StoppingRegion>> = rows.iter().map(|r| r.region).collect();
    let liminf = sets.as_ref().map(|s| set_liminf(s)).transpose()?;
    let limsup = sets.as_ref().map(|s| set_limsup(s)).transpose()?;

    let tol = lim.policy().tol;
    let mut verdicts = Vec::new();
    let local_hyp = Some(diagnostics.local);
    let uniform_hyp = Some(diagnostics.uniform);

    verdicts.push(match (limit.region, liminf) {
        (Some(s), Some(li)) => VerdictLine {
            id: "i".into(),
            statement: "S*(f^inf, Q^inf) ⊆ liminf_n S*(f^n, Q^n)".into(),
            holds: s.is_subset(li),
            hypothesis_met: local_hyp,
            strict: Some(s != li),
            detail: format!("{} vs {}", lim.format_region(s), lim.format_region(li)),
        },
        _ => failed_verdict("i", "S*(f^inf, Q^inf) ⊆ liminf_n S*(f^n, Q^n)"),
    });

    let tail_rows = tail(&rows);
    for &x in &xs {
        let label = lim.label(x);
        let statement = format!("V^inf({label}) >= max over n-tail of V^n({label}) - tol");
        let tail_vals: Option<Vec<ValueInterval>> =
            tail_rows.iter().map(|r| r.value(label)).collect();
        verdicts.push(match (limit.value(label), tail_vals) {
            (Some(v), Some(tv)) => {
                let max_lo = tv.iter().map(|v| v.lo).fold(f64::NEG_INFINITY, f64::max);
                let max_hi = tv.iter().map(|v| v.hi).fold(f64::NEG_INFINITY, f64::max);
                VerdictLine {
                    id: "ii".into(),
                    statement,
                    holds: v.hi + tol >= max_lo,
                    hypothesis_met: local_hyp,
                    strict: Some(v.lo > max_hi + tol),
                    detail: format!("V^inf = {v}; n-tail max = {max_hi}"),
                }
            }
            _ => failed_verdict("ii", &statement),
        });
    }

    if let (Some(last), false) = (rows.last(), eps_grid.is_empty()) {
        for &x in &xs {
            let label = lim.label(x);
            let v_inf = limit.value(label);
            for (name, pick, hyp) in [
                (
                    "V",
                    pick_v as fn(&RelaxedCell) -> Option<&SupCell>,
                    uniform_hyp,
                ),
                (
                    "W",
                    pick_w as fn(&RelaxedCell) -> Option<&SupCell>,
                    local_hyp,
                ),
            ] {
                let statement = format!(
                    "|{name}_eps^n_max({label}) - V^inf({label})| is nonincreasing as eps decreases"
                );
                let gaps: Option<Vec<f64>> = eps_grid
                    .iter()
                    .map(|&e| {
                        let cell = last.relaxed(e, label)?;
                        Some((pick(cell)?.value.mid() - v_inf?.mid()).abs())
                    })
                    .collect();
                let trend = n_tail_trend(tail_rows, &eps_grid, label, pick);
                verdicts.push(match gaps {
                    Some(g) => VerdictLine {
                        id: "iii".into(),
                        statement,
                        holds: g.windows(2).all(|w| w[1] <= w[0] + tol),
                        hypothesis_met: hyp,
                        strict: None,
                        detail: format!(
                            "gaps at n = {} for eps = {:?}: {:?}; n-tail by eps: {}",
                            last.n, eps_grid, g, trend
                        ),
                    },
                    None => failed_verdict("iii", &statement),
                });
            }
        }
    }

    verdicts.push(VerdictLine {
        id: "iv".into(),
        statement: "TV convergence mode evidenced on the grid".into(),
        holds: diagnostics.uniform || diagnostics.local,
        hypothesis_met: None,
        strict: None,
        detail: format!(
            "mode = {}; global TV gaps {:?}; subset TV gaps {:?}",
            diagnostics.mode,
            diagnostics
                .rows
                .iter()
                .map(|r| r.tv_global)
                .collect::<Vec<_>>(),
            diagnostics
                .rows
                .iter()
                .map(|r| r.tv_subset)
                .collect::<Vec<_>>()
        ),
    });

    Ok(StabilityReport {
        schema: SCHEMA_VERSION,
        scenario: seq.meta.clone(),
        grid_semantics: GRID_SEMANTICS.to_string(),
        n_grid,
        eps_grid,
        x: config.x.clone(),
        rows,
        limit,
        set_liminf: liminf.map(|r| lim.region_labels(r)),
        set_limsup: limsup.map(|r| lim.region_labels(r)),
        diagnostics,
        verdicts,
    })
}

fn pick_v(c: &RelaxedCell) -> Option<&SupCell> {
    c.v_eps.as_ref()
}

fn pick_w(c: &RelaxedCell) -> Option<&SupCell> {
    c.w_eps.as_ref()
}

fn n_tail_trend(
    rows: &[GridRow],
    eps_grid: &[f64],
    label: &str,
    pick: fn(&RelaxedCell) -> Option<&SupCell>,
) -> String {
    eps_grid
        .iter()
        .map(|&e| {
            let vals: Vec<String> = rows
                .iter()
                .map(|r| {
                    r.relaxed(e, label)
                        .and_then(pick)
                        .map_or("-".to_string(), |c| format!("{:.6}", c.value.mid()))
                })
                .collect();
            format!("{e}: [{}]", vals.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn failed_verdict(id: &str, statement: &str) -> VerdictLine {
    VerdictLine {
        id: id.into(),
        statement: statement.into(),
        holds: false,
        hypothesis_met: None,
        strict: None,
        detail: "a required cell failed".into(),
    }
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// One row per cell: `n,eps,x,quantity,lo,hi,region`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(format!("csv: {e}"));
        w.write_record(["n", "eps", "x", "quantity", "lo", "hi", "region"])
            .map_err(io)?;
        let region = |r: &[String]| format!("{{{}}}", r.join(","));
        for row in self.rows.iter().chain(std::iter::once(&self.limit)) {
            let n = row.n.to_string();
            if let Some(s) = &row.s_star {
                w.write_record([&n, "", "", "S*", "", "", &region(s)])
                    .map_err(io)?;
            }
            for c in &row.values {
                if let Some(v) = c.value {
                    let s = row.s_star.as_deref().map(region).unwrap_or_default();
                    w.write_record([&n, "", &c.x, "V", &v.lo.to_string(), &v.hi.to_string(), &s])
                        .map_err(io)?;
                }
            }
            for c in &row.relaxed {
                for (q, cell) in [("V_eps", &c.v_eps), ("W_eps", &c.w_eps)] {
                    if let Some(s) = cell {
                        w.write_record([
                            &n,
                            &c.eps.to_string(),
                            &c.x,
                            q,
                            &s.value.lo.to_string(),
                            &s.value.hi.to_string(),
                            &region(&s.region),
                        ])
                        .map_err(io)?;
                    }
                }
            }
        }
        for d in &self.diagnostics.rows {
            let n = d.n.to_string();
            for (q, v) in [
                ("tv_global", d.tv_global),
                ("tv_subset", d.tv_subset),
                ("f_global", d.f_global),
                ("f_subset", d.f_subset),
            ] {
                let v = v.to_string();
                w.write_record([&n, "", "", q, &v, &v, ""]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Parse(format!("csv: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(states: &[usize]) -> StoppingRegion {
        StoppingRegion::from_states(states.iter().copied())
    }

    #[test]
    fn liminf_on_grids() {
        let s = r(&[0, 2]);
        assert_eq!(set_liminf(&[s, s, s]).unwrap(), s);
        let grid = [r(&[0]), r(&[0, 1]), r(&[0, 1]), r(&[0, 1])];
        assert_eq!(set_liminf(&grid).unwrap(), r(&[0, 1]));
        assert!(set_liminf(&[]).is_err());
    }

    #[test]
    fn limsup_on_grids() {
        let s = r(&[1]);
        assert_eq!(set_limsup(&[s, s, s]).unwrap(), s);
        let alt = [r(&[0]), r(&[1]), r(&[0]), r(&[1])];
        assert_eq!(set_limsup(&alt).unwrap(), r(&[0, 1]));
        assert_eq!(set_liminf(&alt).unwrap(), StoppingRegion::empty());
        let once = [r(&[0, 1]), r(&[0]), r(&[0])];
        assert_eq!(set_limsup(&once).unwrap(), r(&[0]));
    }

    #[test]
    fn convergence_evidence_rule() {
        assert!(evidences_convergence(&[1.0, 0.4, 0.02], 0.0));
        assert!(!evidences_convergence(&[1.0, 0.4, 0.2], 0.0));
        assert!(!evidences_convergence(&[0.01, 0.02], 0.0));
        assert!(evidences_convergence(&[0.0, 0.0], 0.0));
    }
}
