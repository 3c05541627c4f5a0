//! Derivative-free Ostrowski-type iterations.
//!
//! One outer iteration of each method:
//!
//! ```text
//! Phi0:  y = x - C^{-1} F(x),          C = [x + F(x), x - F(x); F]
//! Phi1:  z = y - M^{-1} F(y),          M = 2 [y, x; F] - C
//! Phi2:  X = z - M^{-1} F(z)
//! ```
//!
//! The operators are applied in a [`PointOrder`]; the default swaps the
//! points of both operators, which only matters for D1.
//!
//! `C` is factorised once; `M` is formed from the stored `C` matrix and
//! factorised once, and that factorisation serves both `z` and `X`.

use std::fmt;
use std::str::FromStr;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::convergence::{self, OrderEstimate};
use crate::divdiff::{central_dd_ordered, DividedDifferenceKind, KnownValues, PointOrder};
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, lu_factor, lu_solve, LuFactorization, Matrix, OpCounters, Vector};
use crate::precision::PrecisionContext;
use crate::system::NonlinearSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodKind {
    Phi0,
    Phi1,
    Phi2,
}

impl MethodKind {
    pub const ALL: [MethodKind; 3] = [Self::Phi0, Self::Phi1, Self::Phi2];

    /// Local order with the given operator. D1 loses order on systems with
    /// non-vanishing mixed second derivatives; the table lists that
    /// degraded order.
    pub fn theoretical_order(self, dd: DividedDifferenceKind) -> u32 {
        use DividedDifferenceKind::*;
        match (self, dd) {
            (Self::Phi0, _) => 2,
            (Self::Phi1, D1) => 3,
            (Self::Phi1, D2) => 4,
            (Self::Phi2, D1) => 4,
            (Self::Phi2, D2) => 6,
        }
    }

    /// Order when the operator matches the integral form to second order
    /// (D2 always, D1 on separable systems).
    pub fn full_order(self) -> u32 {
        self.theoretical_order(DividedDifferenceKind::D2)
    }

    /// Phi0 only uses the central operator and always builds it with D1.
    pub fn effective_dd(self, dd: DividedDifferenceKind) -> DividedDifferenceKind {
        match self {
            Self::Phi0 => DividedDifferenceKind::D1,
            _ => dd,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Phi0 => "phi0",
            Self::Phi1 => "phi1",
            Self::Phi2 => "phi2",
        })
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi0" => Ok(Self::Phi0),
            "phi1" => Ok(Self::Phi1),
            "phi2" => Ok(Self::Phi2),
            _ => Err(Error::Unknown {
                what: "method",
                value: s.to_string(),
            }),
        }
    }
}

/// Scalar evaluations, products and quotients of one outer iteration.
///
/// Products include the D2 convention of one product per operator entry
/// (the factor 1/2), i.e. `2m^2` extra for Phi1/Phi2 with D2.
pub fn expected_iteration_counts(method: MethodKind, dd: DividedDifferenceKind, m: u64) -> OpCounters {
    use DividedDifferenceKind::*;
    let dd = method.effective_dd(dd);
    let scalar_fn_evals = match (method, dd) {
        (MethodKind::Phi0, _) => m * (m + 2),
        (MethodKind::Phi1, D1) => 2 * m * (m + 1),
        (MethodKind::Phi1, D2) => 4 * m * m,
        (MethodKind::Phi2, D1) => m * (2 * m + 3),
        (MethodKind::Phi2, D2) => m * (4 * m + 1),
    };
    let (products, quotients) = match method {
        MethodKind::Phi0 => (m * (2 * m * m + 3 * m - 5) / 6, m * (3 * m + 1) / 2),
        MethodKind::Phi1 => (m * (2 * m * m + 3 * m - 5) / 3, m * (3 * m + 1)),
        MethodKind::Phi2 => (m * (2 * m * m + 6 * m - 8) / 3, m * (3 * m + 2)),
    };
    let halvings = match (method, dd) {
        (MethodKind::Phi0, _) | (_, D1) => 0,
        (_, D2) => 2 * m * m,
    };
    OpCounters {
        scalar_fn_evals,
        products: products + halvings,
        quotients,
    }
}

/// Output of the first step.
#[derive(Debug, Clone)]
pub struct Phi0Step {
    pub y: Vector,
    pub fx: Vector,
    pub central: Matrix,
    pub fact: LuFactorization,
}

pub fn step_phi0(
    sys: &dyn NonlinearSystem,
    x: &Vector,
    dd: DividedDifferenceKind,
    order: PointOrder,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<Phi0Step> {
    let op = central_dd_ordered(sys, x, dd, order, ctx, counters)?;
    let fact = lu_factor(&op.matrix, ctx.eps_machine(), counters);
    let correction = lu_solve(&fact, &op.fx, counters)?;
    Ok(Phi0Step {
        y: x - &correction,
        fx: op.fx,
        central: op.matrix,
        fact,
    })
}

#[derive(Debug, Clone)]
pub struct Phi1Step {
    pub z: Vector,
    /// Factorisation of `2 [y, x; F] - C`.
    pub fact_nu: LuFactorization,
}

pub fn step_phi1(
    sys: &dyn NonlinearSystem,
    x: &Vector,
    first: &Phi0Step,
    dd: DividedDifferenceKind,
    order: PointOrder,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<Phi1Step> {
    let fy = sys.eval(&first.y, counters);
    let known = KnownValues {
        fy: &fy,
        fx: &first.fx,
    };
    let secant = order.operator(dd, sys, &first.y, x, Some(known), ctx, counters)?;
    let nu_inv = secant.double_minus(&first.central);
    let fact_nu = lu_factor(&nu_inv, ctx.eps_machine(), counters);
    let correction = lu_solve(&fact_nu, &fy, counters)?;
    Ok(Phi1Step {
        z: &first.y - &correction,
        fact_nu,
    })
}

pub fn step_phi2(
    sys: &dyn NonlinearSystem,
    z: &Vector,
    fact_nu: &LuFactorization,
    counters: &mut OpCounters,
) -> Result<Vector> {
    let fz = sys.eval(z, counters);
    let correction = lu_solve(fact_nu, &fz, counters)?;
    Ok(z - &correction)
}

/// One outer iteration of `method`.
pub fn iterate(
    sys: &dyn NonlinearSystem,
    x: &Vector,
    method: MethodKind,
    dd: DividedDifferenceKind,
    order: PointOrder,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<Vector> {
    let dd = method.effective_dd(dd);
    let first = step_phi0(sys, x, dd, order, ctx, counters)?;
    if method == MethodKind::Phi0 {
        return Ok(first.y);
    }
    let second = step_phi1(sys, x, &first, dd, order, ctx, counters)?;
    if method == MethodKind::Phi1 {
        return Ok(second.z);
    }
    step_phi2(sys, &second.z, &second.fact_nu, counters)
}

/// Iterates, correction norms `||x_k - x_{k-1}||_inf` and their ratios.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub iterates: Vec<Vector>,
    pub correction_norms: Vec<Float>,
    /// `ratios[k] = correction_norms[k+1] / correction_norms[k]`, i.e.
    /// `E_{k+2}` in 1-based iteration numbering. `None` when the
    /// denominator is zero.
    pub ratios: Vec<Option<Float>>,
    /// Counter deltas of each completed outer iteration.
    pub per_iteration: Vec<OpCounters>,
}

impl IterationTrace {
    fn new(x0: Vector) -> Self {
        Self {
            iterates: vec![x0],
            ..Self::default()
        }
    }

    fn push(&mut self, x: Vector, counts: OpCounters) -> (Float, Option<Float>) {
        let corr = inf_norm(&(&x - self.iterates.last().expect("trace starts with x0")));
        let ratio = self.correction_norms.last().map(|prev| {
            if prev.is_zero() {
                None
            } else {
                Some(Float::with_val(corr.prec(), &corr / prev))
            }
        });
        if let Some(r) = &ratio {
            self.ratios.push(r.clone());
        }
        self.correction_norms.push(corr.clone());
        self.iterates.push(x);
        self.per_iteration.push(counts);
        (corr, ratio.flatten())
    }

    /// Outer iterations performed.
    pub fn len(&self) -> usize {
        self.correction_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correction_norms.is_empty()
    }

    pub fn last(&self) -> &Vector {
        self.iterates.last().expect("trace starts with x0")
    }

    /// Defined ratios in order.
    pub fn defined_ratios(&self) -> Vec<Float> {
        self.ratios.iter().flatten().cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// `E_I <= 0.5 * 10^(-eta)`.
    RatioCriterion,
    /// An operator coordinate collapsed at working precision.
    Degenerate { coordinate: usize },
    /// A correction was exactly zero.
    ExactFixedPoint,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub termination: Termination,
    /// Index `I` of the last iterate whose accuracy the final step
    /// certifies: the final correction `||x_{I+1} - x_I||` bounds its error.
    pub iterations: usize,
    /// Outer iterations actually computed, `I + 1`.
    pub steps: usize,
    pub trace: IterationTrace,
    pub acoc: Option<OrderEstimate>,
    pub final_iterate: Vector,
    pub counters: OpCounters,
    pub eta: f64,
    /// Correct decimals against a reference root, when one was supplied.
    pub correct_decimals: Option<u32>,
}

impl SolveReport {
    /// `x_I`.
    pub fn certified_iterate(&self) -> &Vector {
        &self.trace.iterates[self.iterations]
    }

    /// Correct decimals of `x_I` against `alpha`.
    pub fn with_reference(mut self, alpha: &Vector, ctx: &PrecisionContext) -> Result<Self> {
        self.correct_decimals = Some(convergence::correct_decimals(self.certified_iterate(), Some(alpha), ctx)?);
        Ok(self)
    }

    /// `-log10 ||x_{I+1} - x_I||`, the root-free estimate of the correct
    /// decimals of `x_I`, capped at the working digits.
    pub fn estimated_decimals(&self, ctx: &PrecisionContext) -> Result<u32> {
        let last = self.trace.iterates.last().expect("trace starts with x0");
        convergence::correct_decimals(self.certified_iterate(), Some(last), ctx)
    }
}

/// Consecutive iterations with `E >= 1` before giving up.
const DIVERGENCE_PATIENCE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub point_order: PointOrder,
    /// Order `rho` for the stopping threshold; defaults to the generic
    /// order of the method with the chosen operator.
    pub order: Option<u32>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            point_order: PointOrder::default(),
            order: None,
        }
    }
}

pub const DEFAULT_MAX_ITERS: usize = 200;

/// Runs `method` from `x0` until the root-free ratio test fires.
///
/// Stops after the first step `N` whose ratio
/// `E_N = ||x_N - x_{N-1}|| / ||x_{N-1} - x_{N-2}||` satisfies
/// `E_N <= 0.5 * 10^(-eta)`, `eta = (rho - 1) / rho^2 * digits`, or whose
/// operator collapses at working precision. The report's `I` is `N - 1`.
pub fn solve(
    sys: &dyn NonlinearSystem,
    x0: &Vector,
    method: MethodKind,
    dd: DividedDifferenceKind,
    ctx: &PrecisionContext,
    max_iters: usize,
) -> Result<SolveReport> {
    let opts = SolverOptions {
        max_iters,
        ..SolverOptions::default()
    };
    solve_with(sys, x0, method, dd, ctx, &opts)
}

pub fn solve_with(
    sys: &dyn NonlinearSystem,
    x0: &Vector,
    method: MethodKind,
    dd: DividedDifferenceKind,
    ctx: &PrecisionContext,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let max_iters = opts.max_iters;
    if max_iters < 2 {
        return Err(Error::InvalidArgument(format!("max_iters must be >= 2, got {max_iters}")));
    }
    if x0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: x0.dim(),
        });
    }
    let rho = opts.order.unwrap_or_else(|| method.theoretical_order(dd));
    let eta = convergence::eta(f64::from(rho), ctx.digits());
    let threshold = convergence::ratio_threshold(rho, ctx);

    let mut counters = OpCounters::new();
    let mut trace = IterationTrace::new(x0.with_prec(ctx.bits()));
    let mut growing = 0usize;

    let termination = loop {
        if trace.len() >= max_iters {
            return Err(Error::MaxIterationsExceeded { iterations: trace.len() });
        }
        let before = counters;
        let next = match iterate(sys, trace.last(), method, dd, opts.point_order, ctx, &mut counters) {
            Ok(x) => x,
            Err(Error::DegenerateDividedDifference { coordinate }) => {
                break Termination::Degenerate { coordinate };
            }
            Err(e) => return Err(e),
        };
        let (corr, ratio) = trace.push(next, counters.since(&before));
        if corr.is_zero() {
            break Termination::ExactFixedPoint;
        }
        if let Some(e) = ratio {
            if e <= threshold {
                break Termination::RatioCriterion;
            }
            if e >= 1 {
                growing += 1;
                if growing >= DIVERGENCE_PATIENCE {
                    return Err(Error::MaxIterationsExceeded { iterations: trace.len() });
                }
            } else {
                growing = 0;
            }
        }
    };

    if trace.is_empty() {
        // F(x0) already vanishes at working precision.
        return Ok(SolveReport {
            converged: true,
            termination,
            iterations: 0,
            steps: 0,
            final_iterate: trace.last().clone(),
            acoc: None,
            counters,
            eta,
            correct_decimals: None,
            trace,
        });
    }
    let acoc = convergence::acoc(&trace).ok();
    Ok(SolveReport {
        converged: true,
        termination,
        iterations: trace.len() - 1,
        steps: trace.len(),
        final_iterate: trace.last().clone(),
        acoc,
        counters,
        eta,
        correct_decimals: None,
        trace,
    })
}
