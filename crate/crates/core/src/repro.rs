//! Built-in scenarios: four model sequences that exhibit (dis)continuity of
//! equilibrium values, with the expected outcome of each.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::discount::DiscountFunction;
use crate::equilibrium::{enumerate, intersection_oracle, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::{MarkovModel, NumericPolicy};
use crate::region::StoppingRegion;
use crate::stability::{
    run_sequence_experiment, ExperimentConfig, GridRow, ModelSequence, ScenarioMeta,
    StabilityReport, SCHEMA_VERSION,
};
use crate::value::ValueInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ExampleId {
    /// Kernel perturbation on three states.
    #[serde(rename = "ex-3.3")]
    Ex33,
    /// Reward perturbation on three states.
    #[serde(rename = "ex-3.4")]
    Ex34,
    /// Weak but not TV convergence on a countable chain.
    #[serde(rename = "ex-3.5")]
    Ex35,
    /// Locally uniform but not uniform convergence.
    #[serde(rename = "ex-4.10")]
    Ex410,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [
        ExampleId::Ex33,
        ExampleId::Ex34,
        ExampleId::Ex35,
        ExampleId::Ex410,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleId::Ex33 => "ex-3.3",
            ExampleId::Ex34 => "ex-3.4",
            ExampleId::Ex35 => "ex-3.5",
            ExampleId::Ex410 => "ex-4.10",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown example `{s}` (expected ex-3.3, ex-3.4, ex-3.5 or ex-4.10)"
                ))
            })
    }
}

/// Overrides for the defaults of a scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExampleParams {
    pub n_grid: Option<Vec<u64>>,
    pub eps_grid: Option<Vec<f64>>,
    /// Truncation level `N` of the countable examples.
    pub truncation: Option<usize>,
    /// Reward at `y` (ex-3.5 and ex-4.10).
    pub y: Option<f64>,
    pub discount: Option<DiscountFunction>,
    pub x: Option<Vec<String>>,
}

pub const DEFAULT_TRUNCATION: usize = 40;
const EX410_FY: f64 = 2.99;

/// Horizon over which overriding discounts are screened.
const ASSUMPTION_HORIZON: usize = 128;

fn discount(params: &ExampleParams) -> Result<DiscountFunction> {
    let d = match &params.discount {
        Some(d) => d.clone(),
        None => DiscountFunction::hyperbolic(1.0)?,
    };
    let report = d.validate_assumption(ASSUMPTION_HORIZON);
    if !report.passes() {
        return Err(Error::InvalidParameter(format!("discount {d}: {report}")));
    }
    Ok(d)
}

fn truncation(params: &ExampleParams) -> Result<usize> {
    let n = params.truncation.unwrap_or(DEFAULT_TRUNCATION);
    if !(2..=60).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "truncation must lie in 2..=60, got {n}"
        )));
    }
    Ok(n)
}

fn labels(names: impl IntoIterator<Item = String>) -> Vec<String> {
    names.into_iter().collect()
}

fn unit_row(n: usize, j: usize) -> Vec<f64> {
    let mut r = vec![0.0; n];
    r[j] = 1.0;
    r
}

/// `x_i = 1 − 1/(i + 1)` with `x_∞ = 1`.
fn ex35_point(i: usize) -> f64 {
    1.0 - 1.0 / (i as f64 + 1.0)
}

/// The model at index `n` (`None` for the limit).
pub fn build_model(id: ExampleId, params: &ExampleParams, n: Option<u64>) -> Result<MarkovModel> {
    let delta = discount(params)?;
    let policy = NumericPolicy::default();
    if n == Some(0) && id != ExampleId::Ex410 {
        return Err(Error::InvalidParameter(format!("{id} needs n ≥ 1")));
    }
    match id {
        ExampleId::Ex33 => {
            // a = 0, b = 1, c = 2
            let p = n.map_or(1.0, |n| 1.0 - 1.0 / n as f64);
            MarkovModel::new(
                labels(["a", "b", "c"].map(String::from)),
                vec![unit_row(3, 0), vec![p, 1.0 - p, 0.0], unit_row(3, 1)],
                vec![2.0, 1.0, 0.5],
                delta,
                policy,
            )
        }
        ExampleId::Ex34 => {
            let h = n.map_or(0.0, |n| 1.0 / n as f64);
            let d1 = delta.at(1);
            MarkovModel::new(
                labels(["a", "b", "c"].map(String::from)),
                vec![unit_row(3, 0), unit_row(3, 0), unit_row(3, 1)],
                vec![2.0, 1.0 + h, 0.5 + (1.0 + d1) * h],
                delta,
                policy,
            )
        }
        ExampleId::Ex35 => {
            // y = 0, x_∞ = 1, x_i = 1 + i
            let big_n = truncation(params)?;
            let size = big_n + 2;
            let y = params.y.unwrap_or(1.0 / delta.at(2) + 1.0);
            let names = ["y".to_string(), "x_inf".to_string()]
                .into_iter()
                .chain((1..=big_n).map(|i| format!("x_{i}")));
            let mut reward = vec![y, 1.0];
            reward.extend((1..=big_n).map(ex35_point));
            let kernel = match n {
                Some(n) => {
                    let n = n as usize;
                    if n > big_n {
                        return Err(Error::InvalidParameter(format!(
                            "n = {n} exceeds the truncation {big_n}"
                        )));
                    }
                    let xn = 1 + n;
                    (0..size)
                        .map(|s| match s {
                            0 => unit_row(size, 0),
                            s if s == xn => unit_row(size, 0),
                            _ => unit_row(size, xn),
                        })
                        .collect()
                }
                None => (0..size)
                    .map(|s| {
                        if s == 0 {
                            unit_row(size, 0)
                        } else {
                            unit_row(size, 1)
                        }
                    })
                    .collect(),
            };
            MarkovModel::new(labels(names), kernel, reward, delta, policy)
        }
        ExampleId::Ex410 => {
            // y = 0, x_i = 1 + i for 0 ≤ i ≤ N
            let big_n = truncation(params)?;
            let size = big_n + 2;
            let fy = params.y.unwrap_or(EX410_FY);
            let names =
                std::iter::once("y".to_string()).chain((0..=big_n).map(|i| format!("x_{i}")));
            let mut reward = vec![fy];
            reward.extend(std::iter::repeat_n(1.0, big_n + 1));
            let split = |i: usize| {
                let mut r = vec![0.0; size];
                r[0] = 0.5;
                r[i + 2] = 0.5;
                r
            };
            let kernel = match n {
                Some(n) => {
                    let n = n as usize;
                    if n > big_n {
                        return Err(Error::InvalidParameter(format!(
                            "n = {n} exceeds the truncation {big_n}"
                        )));
                    }
                    (0..size)
                        .map(|s| {
                            if s == 0 {
                                return unit_row(size, 0);
                            }
                            let i = s - 1;
                            match i.cmp(&n) {
                                std::cmp::Ordering::Less => split(i),
                                std::cmp::Ordering::Equal => unit_row(size, s),
                                std::cmp::Ordering::Greater => unit_row(size, 0),
                            }
                        })
                        .collect()
                }
                // the chain is cut at x_N, whose mass is sent to y
                None => (0..size)
                    .map(|s| {
                        if s == 0 || s == size - 1 {
                            unit_row(size, 0)
                        } else {
                            split(s - 1)
                        }
                    })
                    .collect(),
            };
            MarkovModel::new(labels(names), kernel, reward, delta, policy)
        }
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn fmt_list<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// The sequence with its scenario metadata.
pub fn build_example(id: ExampleId, params: &ExampleParams) -> Result<ModelSequence> {
    let delta = discount(params)?;
    let mut meta = ScenarioMeta {
        id: id.to_string(),
        ..ScenarioMeta::default()
    };
    meta.params.insert("discount".into(), delta.to_string());
    let hyperbolic_note =
        "discount extended beyond δ(1) = 1/2, δ(2) = 1/3 as δ(t) = 1/(1+t)".to_string();
    match id {
        ExampleId::Ex33 => {
            meta.description = "Q^n(c,b) = 1, Q^n(b,a) = 1 - 1/n, Q^n(b,b) = 1/n; \
                f = (a: 2, b: 1, c: 1/2); Q^n → Q^∞ uniformly in TV"
                .into();
            meta.defaults = vec![hyperbolic_note, "row a unspecified; a is absorbing".into()];
            meta.errata = vec![
                "S*(f,Q^∞) is {a}, not {c}: {a} is the intersection of all equilibria".into(),
                "f(c) = δ(1)f(b) = 1/2, not f(c) > δ(1)f(b); the weak inequality makes {a,b} an \
                 equilibrium for finite n, so S*(f,Q^n) = {a,b}, not {a,b,c}; V^n(c) = f(c) is unaffected"
                    .into(),
            ];
            meta.default_x = strings(&["c"]);
            meta.default_subset = strings(&["a", "b", "c"]);
            meta.default_n = vec![2, 5, 10, 100, 1000];
            meta.default_eps = vec![0.1, 0.05, 0.01];
        }
        ExampleId::Ex34 => {
            meta.description =
                "Q(c,b) = Q(b,a) = Q(a,a) = 1; f^n = (2, 1 + 1/n, 1/2 + (1+δ(1))/n); \
                f^n → f^∞ uniformly"
                    .into();
            meta.defaults = vec![hyperbolic_note];
            meta.errata = vec![
                "S*(f^∞,Q) is {a}, not {c}".into(),
                "||f^n - f^∞|| tends to 0, not ∞".into(),
                "the finite-n region is S*(f^n,Q), not S*(f,Q^n)".into(),
            ];
            meta.default_x = strings(&["c"]);
            meta.default_subset = strings(&["a", "b", "c"]);
            meta.default_n = vec![2, 5, 10, 100];
            meta.default_eps = vec![0.1, 0.01];
        }
        ExampleId::Ex35 => {
            let big_n = truncation(params)?;
            let y = params.y.unwrap_or(1.0 / delta.at(2) + 1.0);
            meta.description = "f(x) = x; Q^n sends every x_i (i ≠ n) and x_∞ to x_n, x_n to y; \
                Q^∞ sends every x_i to x_∞; rows converge weakly but not in TV"
                .into();
            meta.params.insert("N".into(), big_n.to_string());
            meta.params.insert("y".into(), y.to_string());
            meta.defaults = vec![
                "δ(t) = 1/(1+t)".into(),
                "x_i = 1 - 1/(i+1), x_∞ = 1, y = x_∞/δ(2) + 1".into(),
                format!(
                    "states x_i with i > N = {big_n} are dropped; no retained state reaches them, \
                     so the truncation is exact"
                ),
            ];
            meta.errata = vec![
                "the inclusion reads {x_∞,y} ⊂ S*(f,Q^∞), not {x,y}".into(),
                "the lower limit is liminf_n V^{Q^n}(x_∞,f), not liminf V^{Q^∞}(x_∞,f)".into(),
            ];
            meta.default_x = strings(&["x_inf"]);
            meta.default_subset = strings(&["x_1", "x_inf"]);
            meta.default_n = vec![3, 10, 30];
            meta.default_eps = vec![0.1, 0.01];
        }
        ExampleId::Ex410 => {
            let big_n = truncation(params)?;
            let fy = params.y.unwrap_or(EX410_FY);
            meta.description =
                "x_i → x_{i+1}, y with probability 1/2 each; under Q^n the state x_n \
                is absorbing and x_i → y for i > n; f(x_i) = 1, f(y) = 2.99"
                    .into();
            meta.params.insert("N".into(), big_n.to_string());
            meta.params.insert("f(y)".into(), fy.to_string());
            meta.defaults = vec![
                format!("states x_i with i > N = {big_n} are dropped; Q^n is exact for n ≤ N"),
                format!(
                    "the limit chain sends x_N to y; the payoff changed by the cut is at most \
                     (1/2)^N δ(N) f(y) = {:.3e}",
                    0.5f64.powi(big_n as i32) * delta.at(big_n) * fy
                ),
            ];
            meta.default_x = strings(&["x_0"]);
            meta.default_subset = (0..=5.min(big_n)).map(|i| format!("x_{i}")).collect();
            meta.default_n = vec![10, 20, 30];
            meta.default_eps = vec![0.002];
        }
    }
    let n_grid = params
        .n_grid
        .clone()
        .unwrap_or_else(|| meta.default_n.clone());
    let eps_grid = params
        .eps_grid
        .clone()
        .unwrap_or_else(|| meta.default_eps.clone());
    meta.params.insert("n_grid".into(), fmt_list(&n_grid));
    meta.params.insert("eps_grid".into(), fmt_list(&eps_grid));
    meta.default_n = n_grid;
    meta.default_eps = eps_grid;
    if let Some(x) = &params.x {
        meta.default_x = x.clone();
    }
    ModelSequence::from_example(id, params.clone(), meta)
}

/// One expectation compared with the computed value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproCheck {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproReport {
    pub schema: u32,
    pub id: ExampleId,
    pub checks: Vec<ReproCheck>,
    pub stability: StabilityReport,
}

impl ReproReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

struct Checks(Vec<ReproCheck>);

impl Checks {
    fn value(&mut self, name: String, expected: f64, observed: Option<ValueInterval>, tol: f64) {
        let (obs, pass) = match observed {
            Some(v) => (v.to_string(), v.contains(expected, tol)),
            None => ("unavailable".into(), false),
        };
        self.0.push(ReproCheck {
            name,
            expected: format!("{expected}"),
            observed: obs,
            tolerance: Some(tol),
            pass,
        });
    }

    fn holds(&mut self, name: String, expected: String, observed: String, pass: bool) {
        self.0.push(ReproCheck {
            name,
            expected,
            observed,
            tolerance: None,
            pass,
        });
    }

    fn region(&mut self, name: String, model: &MarkovModel, expected: &[&str], row: &GridRow) {
        let want = model.region(expected).expect("labels from the scenario");
        let got = row.region();
        self.holds(
            name,
            model.format_region(want),
            got.map_or("unavailable".into(), |r| model.format_region(r)),
            got == Some(want),
        );
    }
}

fn row_at(report: &StabilityReport, n: u64) -> Option<&GridRow> {
    report
        .rows
        .iter()
        .find(|r| r.n == crate::stability::GridIndex::Finite(n))
}

fn fmt_catalog(model: &MarkovModel, regions: &[StoppingRegion]) -> String {
    let parts: Vec<_> = regions.iter().map(|r| model.format_region(*r)).collect();
    format!("[{}]", parts.join(", "))
}

/// Runs the scenario and compares every bundled expectation.
pub fn run_repro(id: ExampleId, params: &ExampleParams) -> Result<ReproReport> {
    let seq = build_example(id, params)?;
    let config = ExperimentConfig::defaults(&seq);
    let report = run_sequence_experiment(&seq, &config)?;
    let lim = &seq.limit;
    let delta = lim.discount().clone();
    let mut c = Checks(Vec::new());
    match id {
        ExampleId::Ex33 | ExampleId::Ex34 => {
            let ex33 = id == ExampleId::Ex33;
            c.value(
                "V^inf(c) = 2/3".into(),
                2.0 / 3.0,
                report.limit.value("c"),
                1e-9,
            );
            c.region("S*(inf) = {a}".into(), lim, &["a"], &report.limit);
            for kind in [
                EquilibriumKind::EQUILIBRIUM,
                EquilibriumKind::Pseudo { eps: 0.0 },
            ] {
                let got = intersection_oracle(lim, kind);
                c.holds(
                    format!("S*(inf) = intersection of the {kind} catalog"),
                    lim.format_region(report.limit.region().unwrap_or_default()),
                    got.as_ref()
                        .map_or_else(|e| e.to_string(), |r| lim.format_region(*r)),
                    got.ok() == report.limit.region(),
                );
            }
            for &n in &report.n_grid {
                let row = row_at(&report, n).expect("grid row");
                let model = seq.model(n)?;
                let want = if ex33 { 0.5 } else { model.reward()[2] };
                let label = if ex33 {
                    format!("V^{n}(c) = f(c) = 1/2")
                } else {
                    format!("V^{n}(c) = f^n(c) = 1/2 + (1+δ(1))/n")
                };
                c.value(label, want, row.value("c"), 1e-9);
                let cat = enumerate(&model, EquilibriumKind::EQUILIBRIUM)?;
                let expected: Vec<StoppingRegion> = if ex33 {
                    vec![model.region(&["a", "b"])?, model.all_states()]
                } else {
                    vec![model.all_states()]
                };
                c.holds(
                    format!("equilibria at n = {n}"),
                    fmt_catalog(&model, &expected),
                    fmt_catalog(&model, &cat.regions),
                    cat.regions == expected && cat.indeterminate.is_empty(),
                );
                if ex33 {
                    c.region(format!("S*({n}) = {{a,b}}"), &model, &["a", "b"], row);
                } else {
                    c.region(
                        format!("S*({n}) = {{a,b,c}}"),
                        &model,
                        &["a", "b", "c"],
                        row,
                    );
                }
            }
            let n_max = *report.n_grid.last().expect("nonempty grid");
            let eps_min = report.eps_grid.last().copied();
            if let (true, Some(eps)) = (ex33 && n_max >= 1000, eps_min.filter(|e| *e <= 0.01)) {
                let cell = row_at(&report, n_max).and_then(|r| r.relaxed(eps, "c"));
                let v = cell.and_then(|c| c.v_eps.as_ref()).map(|s| s.value);
                let w = cell.and_then(|c| c.w_eps.as_ref()).map(|s| s.value);
                c.value(format!("V_{eps}^{n_max}(c) near 2/3"), 2.0 / 3.0, v, 0.02);
                c.value(format!("W_{eps}^{n_max}(c) near 2/3"), 2.0 / 3.0, w, 0.02);
            }
        }
        ExampleId::Ex35 => {
            let y = lim.reward()[0];
            let x1 = lim.index_of("x_1")?;
            for &n in &report.n_grid {
                let row = row_at(&report, n).expect("grid row");
                let model = seq.model(n)?;
                c.region(format!("S*({n}) = {{y}}"), &model, &["y"], row);
                c.value(
                    format!("V^{n}(x_inf) = δ(2)·y"),
                    delta.at(2) * y,
                    row.value("x_inf"),
                    1e-6,
                );
                let gap = crate::chain::kernel_tv_gap(
                    model.kernel(),
                    lim.kernel(),
                    Some(StoppingRegion::empty().with(x1)),
                )?;
                c.holds(
                    format!("TV gap at x_1, n = {n}"),
                    "2".into(),
                    gap.to_string(),
                    (gap - 2.0).abs() < 1e-12,
                );
            }
            let need = lim.region(&["x_inf", "y"])?;
            let got = report.limit.region();
            c.holds(
                "S*(inf) ⊇ {x_inf,y}".into(),
                format!("⊇ {}", lim.format_region(need)),
                got.map_or("unavailable".into(), |r| lim.format_region(r)),
                got.is_some_and(|r| need.is_subset(r)),
            );
            c.value(
                "V^inf(x_inf) = x_inf = 1".into(),
                1.0,
                report.limit.value("x_inf"),
                1e-9,
            );
        }
        ExampleId::Ex410 => {
            let fy = lim.reward()[0];
            let lhs = 0.5 * delta.at(1) * (1.0 + fy);
            let partial: f64 = (1..=3)
                .map(|k| delta.at(k) * 0.5f64.powi(k as i32) * fy)
                .sum();
            c.value(
                "(1/2)δ(1)(1+f(y)) = 0.9975".into(),
                0.9975,
                Some(ValueInterval::exact(lhs)),
                1e-4,
            );
            c.value(
                "f(y)·Σ_{k≤3} δ(k)2^-k = 1.0901".into(),
                1.0901,
                Some(ValueInterval::exact(partial)),
                1e-4,
            );
            c.holds(
                "(1/2)δ(1)(1+f(y)) < 1 < f(y)·Σ_k δ(k)2^-k".into(),
                "true".into(),
                format!("{lhs} < 1 < {partial}"),
                lhs < 1.0 && 1.0 < partial,
            );
            let series: f64 = (1..=60)
                .map(|k| fy * 0.5f64.powi(k) * delta.at(k as usize))
                .sum();
            c.value(
                "V^inf(x_0) = Σ_k f(y) 2^-k δ(k)".into(),
                series,
                report.limit.value("x_0"),
                1e-4,
            );
            c.region("S*(inf) = {y}".into(), lim, &["y"], &report.limit);
            let threshold = 1.0 - lhs;
            for &n in &report.n_grid {
                let row = row_at(&report, n).expect("grid row");
                for &eps in report
                    .eps_grid
                    .iter()
                    .filter(|&&e| e > 0.0 && e < threshold)
                {
                    let v = row
                        .relaxed(eps, "x_0")
                        .and_then(|c| c.v_eps.as_ref())
                        .map(|s| s.value);
                    c.value(format!("V_{eps}^{n}(x_0) = f(x_0) = 1"), 1.0, v, 1e-9);
                }
            }
        }
    }
    for v in &report.verdicts {
        if v.hypothesis_met == Some(true) && v.id != "iv" {
            c.holds(
                format!("verdict ({}) under its hypothesis: {}", v.id, v.statement),
                "holds".into(),
                if v.holds { "holds" } else { "fails" }.into(),
                v.holds,
            );
        }
    }
    Ok(ReproReport {
        schema: SCHEMA_VERSION,
        id,
        checks: c.0,
        stability: report,
    })
}
