use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tistop::equilibrium::Round;
use tistop::io::{parse_number, read_model, read_sequence};
use tistop::repro::{build_example, run_repro, ExampleId, ExampleParams};
use tistop::stability::{run_sequence_experiment, ExperimentConfig, StabilityReport};
use tistop::{
    check_region, enumerate, optimal_values, DiscountFunction, Enumerator, EquilibriumKind, Error,
    MarkovModel, Status, StoppingRegion, Sup, ValueInterval,
};

/// Exit codes.
const OK: u8 = 0;
const INPUT_ERROR: u8 = 1;
const INDETERMINATE: u8 = 2;
const FAILS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "tistop",
    version,
    about = "Equilibrium stopping regions under nonexponential discounting"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Exact,
    Pseudo,
}

#[derive(Subcommand)]
enum Command {
    /// Smallest optimal equilibrium S* and the values V = J(., S*).
    Solve {
        model: PathBuf,
        /// `all` or a comma-separated list of labels.
        #[arg(long, default_value = "all")]
        x: String,
    },
    /// Checks the (ε-, pseudo-) equilibrium conditions of one region.
    Check {
        model: PathBuf,
        /// Comma-separated labels; empty for the empty region.
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long, value_enum, default_value_t = Kind::Exact)]
        kind: Kind,
        #[arg(long, default_value = "0")]
        eps: String,
    },
    /// Lists every region satisfying the conditions.
    Enumerate {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Exact)]
        kind: Kind,
        #[arg(long, default_value = "0")]
        eps: String,
    },
    /// V_ε and W_ε: best payoffs over ε-equilibria and pseudo ε-equilibria.
    Relaxed {
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<String>,
        #[arg(long, default_value = "all")]
        x: String,
    },
    /// Runs a stability experiment over a sequence file or a built-in example.
    Stability {
        /// Sequence file, or one of ex-3.3, ex-3.4, ex-3.5, ex-4.10.
        source: String,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<String>>,
        /// States over which local TV gaps are measured.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
        #[command(flatten)]
        example: ExampleArgs,
        /// Writes the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the CSV table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reproduces a built-in example and compares against its expected values.
    Repro {
        example: String,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<String>>,
        #[command(flatten)]
        example_args: ExampleArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ExampleArgs {
    /// Truncation level of the countable examples.
    #[arg(long)]
    truncation: Option<usize>,
    /// Reward at y.
    #[arg(long)]
    y: Option<String>,
    /// Discount, e.g. `hyperbolic:1` or `table:1,1/2;1/2`.
    #[arg(long)]
    discount: Option<String>,
}

impl ExampleArgs {
    fn params(
        &self,
        n: &Option<Vec<u64>>,
        eps: Option<Vec<f64>>,
        x: &Option<Vec<String>>,
    ) -> Result<ExampleParams, Error> {
        Ok(ExampleParams {
            n_grid: n.clone(),
            eps_grid: eps,
            truncation: self.truncation,
            y: self.y.as_deref().map(parse_number).transpose()?,
            discount: self
                .discount
                .as_deref()
                .map(str::parse::<DiscountFunction>)
                .transpose()?,
            x: x.clone(),
        })
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::HorizonExhausted { .. }
        | Error::IndeterminateMembership { .. }
        | Error::IndeterminateCatalog(_) => INDETERMINATE,
        _ => INPUT_ERROR,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let out = Output { format: cli.format };
    match &cli.command {
        Command::Solve { model, x } => solve(&out, &read_model(model)?, x),
        Command::Check {
            model,
            region,
            kind,
            eps,
        } => {
            let m = read_model(model)?;
            check(&out, &m, &parse_region(&m, region)?, kind_of(*kind, eps)?)
        }
        Command::Enumerate { model, kind, eps } => {
            enumerate_cmd(&out, &read_model(model)?, kind_of(*kind, eps)?)
        }
        Command::Relaxed { model, eps, x } => relaxed(&out, &read_model(model)?, &numbers(eps)?, x),
        Command::Stability {
            source,
            n,
            eps,
            x,
            subset,
            example,
            out: json_path,
            csv,
        } => {
            let eps = eps.as_deref().map(numbers).transpose()?;
            let seq = match source.parse::<ExampleId>() {
                Ok(id) => build_example(id, &example.params(n, eps.clone(), x)?)?,
                Err(_) if Path::new(source).exists() => read_sequence(Path::new(source))?,
                Err(e) => return Err(e),
            };
            let mut config = ExperimentConfig::defaults(&seq);
            if let Some(n) = n {
                config.n_grid = n.clone();
            }
            if let Some(eps) = eps {
                config.eps_grid = eps;
            }
            if let Some(x) = x {
                config.x = x.clone();
            }
            config.subset = subset.clone();
            let report = run_sequence_experiment(&seq, &config)?;
            if let Some(path) = json_path {
                write(path, &report.to_json())?;
            }
            if let Some(path) = csv {
                let file = fs::File::create(path)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                report.write_csv(file)?;
            }
            out.stability(&report);
            Ok(OK)
        }
        Command::Repro {
            example,
            n,
            eps,
            x,
            example_args,
            out: json_path,
        } => {
            let id: ExampleId = example.parse()?;
            let eps = eps.as_deref().map(numbers).transpose()?;
            let report = run_repro(id, &example_args.params(n, eps, x)?)?;
            if let Some(path) = json_path {
                write(path, &report.to_json())?;
            }
            match out.format {
                Format::Json => println!("{}", report.to_json()),
                Format::Text => {
                    println!("{id}");
                    for c in &report.checks {
                        let tol = c
                            .tolerance
                            .map(|t| format!(" (tol {t:e})"))
                            .unwrap_or_default();
                        println!(
                            "{} {}: expected {}, observed {}{tol}",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.name,
                            c.expected,
                            c.observed
                        );
                    }
                }
            }
            Ok(if report.passed() { OK } else { FAILS })
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn numbers(xs: &[String]) -> Result<Vec<f64>, Error> {
    xs.iter().map(|s| parse_number(s)).collect()
}

fn kind_of(kind: Kind, eps: &str) -> Result<EquilibriumKind, Error> {
    let eps = parse_number(eps)?;
    Ok(match kind {
        Kind::Exact => EquilibriumKind::Exact { eps },
        Kind::Pseudo => EquilibriumKind::Pseudo { eps },
    })
}

fn parse_region(model: &MarkovModel, text: &str) -> Result<StoppingRegion, Error> {
    let labels: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    model.region(&labels)
}

fn targets(model: &MarkovModel, text: &str) -> Result<Vec<usize>, Error> {
    if text == "all" {
        return Ok((0..model.len()).collect());
    }
    let r = parse_region(model, text)?;
    if r.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(r.iter().collect())
}

fn interval(v: &ValueInterval) -> String {
    if v.width() == 0.0 {
        format!("{}", v.lo)
    } else {
        format!("{:.9} ± {:.1e}", v.mid(), v.width() / 2.0)
    }
}

fn interval_json(v: &ValueInterval) -> Value {
    json!({ "lo": v.lo, "hi": v.hi, "horizon_used": v.horizon_used })
}

fn sup_json(model: &MarkovModel, s: &Option<Sup>) -> Value {
    match s {
        Some(s) => json!({
            "value": interval_json(&s.value),
            "region": model.region_labels(s.region),
        }),
        None => Value::Null,
    }
}

struct Output {
    format: Format,
}

impl Output {
    fn emit(&self, value: Value, text: impl FnOnce() -> String) {
        match self.format {
            Format::Json => println!(
                "{}",
                serde_json::to_string_pretty(&value).expect("json values serialize")
            ),
            Format::Text => print!("{}", text()),
        }
    }

    fn stability(&self, report: &StabilityReport) {
        match self.format {
            Format::Json => println!("{}", report.to_json()),
            Format::Text => {
                println!("{}: {}", report.scenario.id, report.grid_semantics);
                for row in report.rows.iter().chain(std::iter::once(&report.limit)) {
                    let s = row
                        .s_star
                        .as_ref()
                        .map_or("?".to_string(), |s| format!("{{{}}}", s.join(",")));
                    print!("n={} S*={s}", row.n);
                    for c in &row.values {
                        print!(
                            " V({})={}",
                            c.x,
                            c.value.as_ref().map_or("?".into(), interval)
                        );
                    }
                    for c in &row.relaxed {
                        let v = |s: &Option<tistop::stability::SupCell>| {
                            s.as_ref().map_or("?".into(), |s| interval(&s.value))
                        };
                        print!(
                            " V_{}({})={} W_{}({})={}",
                            c.eps,
                            c.x,
                            v(&c.v_eps),
                            c.eps,
                            c.x,
                            v(&c.w_eps)
                        );
                    }
                    if let Some(e) = &row.error {
                        print!(" error: {e}");
                    }
                    println!();
                }
                let show = |s: &Option<Vec<String>>| {
                    s.as_ref()
                        .map_or("?".to_string(), |s| format!("{{{}}}", s.join(",")))
                };
                println!("set liminf = {}", show(&report.set_liminf));
                println!("set limsup = {}", show(&report.set_limsup));
                for v in &report.verdicts {
                    let hyp = match v.hypothesis_met {
                        Some(true) => " [hypothesis evidenced]",
                        Some(false) => " [hypothesis not evidenced]",
                        None => "",
                    };
                    println!(
                        "({}) {}: {}{hyp}; {}",
                        v.id,
                        v.statement,
                        if v.holds { "holds" } else { "fails" },
                        v.detail
                    );
                }
            }
        }
    }
}

fn trace_json(model: &MarkovModel, rounds: &[Round]) -> Value {
    rounds
        .iter()
        .map(|r| {
            json!({
                "region": model.region_labels(r.region),
                "sups": r.sups.iter().map(|(x, v)| json!({
                    "x": model.label(*x),
                    "f": model.reward()[*x],
                    "sup": interval_json(v),
                })).collect::<Vec<_>>(),
                "added": model.region_labels(r.added),
            })
        })
        .collect()
}

fn solve(out: &Output, model: &MarkovModel, x: &str) -> Result<u8, Error> {
    let xs = targets(model, x)?;
    let opt = optimal_values(model)?;
    let values: Vec<Value> = xs
        .iter()
        .map(|&i| json!({ "x": model.label(i), "value": interval_json(&opt.values[i]) }))
        .collect();
    let path: Vec<String> = opt
        .trace
        .regions()
        .iter()
        .map(|r| model.format_region(*r))
        .collect();
    out.emit(
        json!({
            "schema": 1,
            "s_star": model.region_labels(opt.region),
            "trace": trace_json(model, &opt.trace.rounds),
            "values": values,
        }),
        || {
            let mut s = format!(
                "S* = {}\niteration: {}\n",
                model.format_region(opt.region),
                path.join(" -> ")
            );
            for &i in &xs {
                s += &format!("V({}) = {}\n", model.label(i), interval(&opt.values[i]));
            }
            s
        },
    );
    Ok(OK)
}

fn check(
    out: &Output,
    model: &MarkovModel,
    region: &StoppingRegion,
    kind: EquilibriumKind,
) -> Result<u8, Error> {
    let v = check_region(model, *region, kind)?;
    let cond = |c: &tistop::Condition| {
        json!({
            "x": c.label,
            "side": c.side,
            "status": c.status,
            "margin": interval_json(&c.margin),
        })
    };
    out.emit(
        json!({
            "schema": 1,
            "region": model.region_labels(v.region),
            "kind": v.kind,
            "status": v.status,
            "witnesses": v.witnesses.iter().map(cond).collect::<Vec<_>>(),
            "conditions": v.conditions.iter().map(cond).collect::<Vec<_>>(),
        }),
        || {
            let mut s = format!(
                "{} {}: {}\n",
                model.format_region(v.region),
                v.kind,
                v.status
            );
            for c in &v.conditions {
                let side = match c.side {
                    tistop::Side::Outside => "outside",
                    tistop::Side::Inside => "inside",
                };
                s += &format!(
                    "  {} ({side}): {}, margin {}\n",
                    c.label,
                    c.status,
                    interval(&c.margin)
                );
            }
            s
        },
    );
    Ok(match v.status {
        Status::Holds => OK,
        Status::Fails => FAILS,
        Status::Indeterminate => INDETERMINATE,
    })
}

fn enumerate_cmd(out: &Output, model: &MarkovModel, kind: EquilibriumKind) -> Result<u8, Error> {
    let cat = enumerate(model, kind)?;
    let names = |rs: &[StoppingRegion]| {
        rs.iter()
            .map(|r| model.region_labels(*r))
            .collect::<Vec<_>>()
    };
    let inter = cat.intersection(model.len());
    out.emit(
        json!({
            "schema": 1,
            "kind": kind,
            "regions": names(&cat.regions),
            "indeterminate": names(&cat.indeterminate),
            "intersection": inter.map(|r| model.region_labels(r)),
        }),
        || {
            let mut s = format!("{kind}: {} regions\n", cat.regions.len());
            for r in &cat.regions {
                s += &format!("  {}\n", model.format_region(*r));
            }
            for r in &cat.indeterminate {
                s += &format!("  {} (indeterminate)\n", model.format_region(*r));
            }
            if let Some(r) = inter {
                s += &format!("intersection = {}\n", model.format_region(r));
            }
            s
        },
    );
    Ok(if cat.indeterminate.is_empty() {
        OK
    } else {
        INDETERMINATE
    })
}

fn relaxed(out: &Output, model: &MarkovModel, eps: &[f64], x: &str) -> Result<u8, Error> {
    let xs = targets(model, x)?;
    let mut e = Enumerator::new(model);
    let target_set = StoppingRegion::from_states(xs.iter().copied());
    let mut tables = Vec::new();
    for &eps in eps {
        tables.push(e.relaxed(eps, target_set)?);
    }
    let undecided = tables
        .iter()
        .any(|t| t.indeterminate_exact > 0 || t.indeterminate_pseudo > 0);
    out.emit(
        json!({
            "schema": 1,
            "tables": tables.iter().map(|t| json!({
                "eps": t.eps,
                "indeterminate_exact": t.indeterminate_exact,
                "indeterminate_pseudo": t.indeterminate_pseudo,
                "cells": xs.iter().map(|&i| json!({
                    "x": model.label(i),
                    "v_eps": sup_json(model, &t.v[i]),
                    "w_eps": sup_json(model, &t.w[i]),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
        || {
            let show = |s: &Option<Sup>| {
                s.map_or("none".into(), |s| {
                    format!(
                        "{} at {}",
                        interval(&s.value),
                        model.format_region(s.region)
                    )
                })
            };
            let mut s = String::new();
            for t in &tables {
                for &i in &xs {
                    s += &format!(
                        "eps={} x={}: V_eps = {}, W_eps = {}\n",
                        t.eps,
                        model.label(i),
                        show(&t.v[i]),
                        show(&t.w[i])
                    );
                }
            }
            s
        },
    );
    Ok(if undecided { INDETERMINATE } else { OK })
}
