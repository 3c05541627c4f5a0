//! Batch runs over the registered problems and data export.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::divdiff::{DividedDifferenceKind, PointOrder};
use crate::efficiency::{self, BoundaryCurve, CostModel, ElementaryCostTable, Variant};
use crate::error::{Error, Result};
use crate::linalg::OpCounters;
use crate::methods::{expected_iteration_counts, solve_with, MethodKind, SolveReport, SolverOptions};
use crate::precision::{to_decimal_string, PrecisionContext, DEFAULT_DIGITS};
use crate::problems::{ProblemSpec, REFERENCE_DIGITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "md" | "markdown" => Ok(Self::Markdown),
            _ => Err(Error::Unknown {
                what: "output format",
                value: s.to_string(),
            }),
        }
    }
}

/// Where `mu` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MuSource {
    /// The value used for the published tables.
    Published,
    /// [`efficiency::estimate_mu`] on the problem's usage profile.
    Estimated,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub digits: u32,
    pub methods: Vec<MethodKind>,
    pub dd_kinds: Vec<DividedDifferenceKind>,
    pub max_iters: usize,
    pub format: OutputFormat,
    pub ell: f64,
    pub mu: MuSource,
    pub point_order: PointOrder,
    /// Precision of the cost and efficiency columns.
    pub efficiency_digits: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            digits: DEFAULT_DIGITS,
            methods: MethodKind::ALL.to_vec(),
            dd_kinds: DividedDifferenceKind::ALL.to_vec(),
            max_iters: crate::methods::DEFAULT_MAX_ITERS,
            format: OutputFormat::Markdown,
            ell: 2.5,
            mu: MuSource::Published,
            point_order: PointOrder::default(),
            efficiency_digits: 64,
        }
    }
}

impl RunConfig {
    /// Distinct `(method, dd)` pairs in table order. Phi0 appears once.
    pub fn pairs(&self) -> Result<Vec<(MethodKind, DividedDifferenceKind)>> {
        let mut pairs: Vec<(MethodKind, DividedDifferenceKind)> = Vec::new();
        for &method in &self.methods {
            for &dd in &self.dd_kinds {
                let pair = (method, method.effective_dd(dd));
                if !pairs.contains(&pair) {
                    pairs.push(pair);
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("no (method, dd) pair selected".into()));
        }
        pairs.sort();
        Ok(pairs)
    }
}

/// Deviation of measured per-iteration counts from the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CounterDelta {
    pub scalar_fn_evals: i64,
    pub products: i64,
    pub quotients: i64,
}

impl CounterDelta {
    fn between(measured: &OpCounters, expected: &OpCounters) -> Self {
        let d = |a: u64, b: u64| a as i64 - b as i64;
        Self {
            scalar_fn_evals: d(measured.scalar_fn_evals, expected.scalar_fn_evals),
            products: d(measured.products, expected.products),
            quotients: d(measured.quotients, expected.quotients),
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

/// One result row. High-precision columns are full decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: String,
    pub method: MethodKind,
    pub dd: DividedDifferenceKind,
    pub m: u32,
    pub mu: String,
    pub ell: String,
    /// Order credited in the efficiency index.
    pub rho: u32,
    pub cost: String,
    pub cei: String,
    /// From the index rounded to nine decimals, as published.
    pub time_factor: String,
    pub iterations: Option<usize>,
    pub steps: Option<usize>,
    pub acoc: Option<String>,
    /// Correct decimals of `x_I` against the reference root.
    pub q: Option<u32>,
    /// `-log10 ||x_{I+1} - x_I||`.
    pub q_estimated: Option<u32>,
    pub counters_per_iteration: OpCounters,
    pub counter_delta: CounterDelta,
    /// Informational only.
    pub elapsed_ms: f64,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn label(&self) -> String {
        format!("{} {}", self.problem, Variant::new(self.method, self.dd))
    }
}

fn mu_for(problem: &ProblemSpec, source: MuSource, ctx: &PrecisionContext) -> Float {
    match source {
        MuSource::Published => ctx.from_f64(problem.mu_published),
        MuSource::Fixed(v) => ctx.from_f64(v),
        MuSource::Estimated => efficiency::estimate_mu(
            problem.usage_profile,
            &ElementaryCostTable::default(),
            problem.m() as u32,
            ctx,
        ),
    }
}

/// Cost, index and time factor of one row.
pub fn efficiency_columns(
    problem: &ProblemSpec,
    method: MethodKind,
    dd: DividedDifferenceKind,
    config: &RunConfig,
) -> Result<(CostModel, Float, Float, Float)> {
    let ectx = PrecisionContext::new(config.efficiency_digits)?;
    let variant = problem.variant(method, dd);
    let model = CostModel::new(
        problem.m() as u32,
        mu_for(problem, config.mu, &ectx),
        ectx.from_f64(config.ell),
        method,
        dd,
    )?
    .with_order(variant.rho);
    let cost = model.cost();
    let cei = efficiency::cei(model.order(), &cost);
    let tf = efficiency::published_time_factor(&cei);
    Ok((model, cost, cei, tf))
}

/// Every iteration's counts must equal the formulas exactly.
fn check_counters(label: &str, report: &SolveReport, expected: &OpCounters) -> Result<CounterDelta> {
    for (k, measured) in report.trace.per_iteration.iter().enumerate() {
        if !CounterDelta::between(measured, expected).is_zero() {
            return Err(Error::CounterMismatch {
                row: label.to_string(),
                iteration: k + 1,
                measured: format!("{measured:?}"),
                expected: format!("{expected:?}"),
            });
        }
    }
    Ok(CounterDelta::default())
}

fn run_row(
    problem: &ProblemSpec,
    method: MethodKind,
    dd: DividedDifferenceKind,
    config: &RunConfig,
    ctx: &PrecisionContext,
) -> Result<BenchRow> {
    let (model, cost, cei, tf) = efficiency_columns(problem, method, dd, config)?;
    let expected = expected_iteration_counts(method, dd, problem.m() as u64);
    let mut row = BenchRow {
        problem: problem.id.to_string(),
        method,
        dd: method.effective_dd(dd),
        m: model.m,
        mu: to_decimal_string(&model.mu),
        ell: to_decimal_string(&model.ell),
        rho: model.order(),
        cost: to_decimal_string(&cost),
        cei: to_decimal_string(&cei),
        time_factor: to_decimal_string(&tf),
        iterations: None,
        steps: None,
        acoc: None,
        q: None,
        q_estimated: None,
        counters_per_iteration: expected,
        counter_delta: CounterDelta::default(),
        elapsed_ms: 0.0,
        error: None,
    };

    let opts = SolverOptions {
        max_iters: config.max_iters,
        point_order: config.point_order,
        order: Some(model.order()),
    };
    let start = Instant::now();
    let solved = solve_with(problem.system.as_ref(), &problem.x0(ctx), method, dd, ctx, &opts);
    row.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = match solved {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return Ok(row);
        }
    };
    row.counter_delta = check_counters(&row.label(), &report, &expected)?;
    row.iterations = Some(report.iterations);
    row.steps = Some(report.steps);
    row.acoc = report.acoc.as_ref().map(|a| to_decimal_string(&a.acoc));
    row.q_estimated = report.estimated_decimals(ctx).ok();
    if ctx.digits() <= REFERENCE_DIGITS {
        row.q = report.with_reference(&problem.reference_root(ctx), ctx)?.correct_decimals;
    }
    Ok(row)
}

/// Runs every selected `(method, dd)` pair on `problem`.
///
/// Rows run in parallel and come back in `(method, dd)` order. A solver
/// failure is recorded in its row; a counter mismatch fails the whole run.
pub fn run_benchmark(problem: &ProblemSpec, config: &RunConfig) -> Result<Vec<BenchRow>> {
    let ctx = PrecisionContext::new(config.digits)?;
    let pairs = config.pairs()?;
    pairs
        .par_iter()
        .map(|&(method, dd)| run_row(problem, method, dd, config, &ctx))
        .collect()
}

fn fixed(s: &str, decimals: usize) -> String {
    match Float::parse(s) {
        Ok(v) => efficiency::format_fixed(&Float::with_val(256, v), decimals),
        Err(_) => s.to_string(),
    }
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

const HEADER: [&str; 12] = [
    "problem", "method", "I", "C", "CEI", "TF", "acoc", "q", "q_est", "evals", "delta", "error",
];

fn display_row(r: &BenchRow) -> [String; 12] {
    let c = &r.counters_per_iteration;
    [
        r.problem.clone(),
        Variant::new(r.method, r.dd).to_string(),
        opt(&r.iterations),
        fixed(&r.cost, 1),
        fixed(&r.cei, 9),
        fixed(&r.time_factor, 2),
        r.acoc.as_deref().map(|a| fixed(a, 6)).unwrap_or_default(),
        opt(&r.q),
        opt(&r.q_estimated),
        format!("{}/{}/{}", c.scalar_fn_evals, c.products, c.quotients),
        format!(
            "{}/{}/{}",
            r.counter_delta.scalar_fn_evals, r.counter_delta.products, r.counter_delta.quotients
        ),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Renders rows. JSON keeps full precision; CSV and Markdown print the
/// published rounding.
pub fn render(rows: &[BenchRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(rows).map_err(|e| Error::InvalidArgument(e.to_string())),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
            w.write_record(HEADER).map_err(io)?;
            for r in rows {
                w.write_record(display_row(r)).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Markdown => {
            let mut out = format!("| {} |\n|{}\n", HEADER.join(" | "), "---|".repeat(HEADER.len()));
            for r in rows {
                out.push_str(&format!("| {} |\n", display_row(r).join(" | ")));
            }
            Ok(out)
        }
    }
}

pub fn parse_rows(json: &str) -> Result<Vec<BenchRow>> {
    serde_json::from_str(json).map_err(|e| Error::Parse { input: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub m: f64,
    pub mu: f64,
    /// `false` where the boundary lies at negative `mu`.
    pub in_domain: bool,
}

/// Samples `mu = G(m, l)` at `samples` equally spaced `m` in
/// `[m_min, m_max]`, skipping points within `1e-6` of the pole.
pub fn sample_boundary_curve(
    which: BoundaryCurve,
    ell: f64,
    m_min: f64,
    m_max: f64,
    samples: usize,
) -> Result<Vec<CurveSample>> {
    if !(m_min <= m_max) || samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "need m_min <= m_max and samples > 0, got [{m_min}, {m_max}] with {samples}"
        )));
    }
    let ctx = PrecisionContext::new(64)?;
    let ell = ctx.from_f64(ell);
    let pole = which.pole(ctx.bits()).to_f64();
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let m = if samples == 1 {
            m_min
        } else {
            m_min + (m_max - m_min) * k as f64 / (samples - 1) as f64
        };
        if (m - pole).abs() < 1e-6 {
            continue;
        }
        match efficiency::boundary_g(which, &ctx.from_f64(m), &ell, &ctx) {
            Ok(mu) => {
                let mu = mu.to_f64();
                out.push(CurveSample {
                    m,
                    mu,
                    in_domain: mu > 0.0,
                });
            }
            Err(Error::PoleAtAsymptote { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// CSV with columns `m, mu, domain`.
pub fn export_boundary_curves(
    which: BoundaryCurve,
    ell: f64,
    m_min: f64,
    m_max: f64,
    samples: usize,
) -> Result<String> {
    let rows = sample_boundary_curve(which, ell, m_min, m_max, samples)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(["m", "mu", "domain"]).map_err(io)?;
    for s in rows {
        let domain = if s.in_domain { "in_domain" } else { "out_of_domain" };
        w.write_record([s.m.to_string(), format!("{:.12}", s.mu), domain.to_string()])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
