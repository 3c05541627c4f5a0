//! The benchmark systems and their registry entries.
//!
//! New problems are added by implementing [`NonlinearSystem`] and listing a
//! [`ProblemSpec`] in [`registry`].

use std::fmt;
use std::str::FromStr;

use rug::Float;

use crate::divdiff::DividedDifferenceKind::{self, D1, D2};
use crate::efficiency::Variant;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::methods::MethodKind::{self, Phi0, Phi1, Phi2};
use crate::precision::{to_decimal_digits, PrecisionContext};
use crate::system::NonlinearSystem;

/// `F_i(x) = sum_{j != i} x_j - exp(-x_i)`, m = 5.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpSystem;

/// `F_1 = x_1^2 + x_2^2 - 9`, `F_2 = x_1 x_2 - 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadSystem;

/// `F_i(x) = x_i - cos(2 x_i - sum_j x_j)`, m = 3.
#[derive(Debug, Clone, Copy, Default)]
pub struct CosSystem;

pub fn exp5() -> ExpSystem {
    ExpSystem
}

pub fn quad2() -> QuadSystem {
    QuadSystem
}

pub fn cos3() -> CosSystem {
    CosSystem
}

impl NonlinearSystem for ExpSystem {
    fn name(&self) -> &str {
        "exp5"
    }

    fn dim(&self) -> usize {
        5
    }

    fn component(&self, i: usize, x: &[Float]) -> Float {
        let prec = x[0].prec();
        let mut acc = Float::new(prec);
        for (j, xj) in x.iter().enumerate() {
            if j != i {
                acc += xj;
            }
        }
        let e = Float::with_val(prec, -&x[i]).exp();
        acc - e
    }

    fn mu_hint(&self) -> Option<f64> {
        Some(87.8)
    }
}

impl NonlinearSystem for QuadSystem {
    fn name(&self) -> &str {
        "quad2"
    }

    fn dim(&self) -> usize {
        2
    }

    fn component(&self, i: usize, x: &[Float]) -> Float {
        let prec = x[0].prec();
        match i {
            0 => {
                let mut acc = Float::with_val(prec, x[0].square_ref());
                acc += Float::with_val(prec, x[1].square_ref());
                acc - 9u32
            }
            1 => Float::with_val(prec, &x[0] * &x[1]) - 1u32,
            _ => panic!("component {i} out of range for quad2"),
        }
    }

    fn mu_hint(&self) -> Option<f64> {
        Some(1.5)
    }
}

impl NonlinearSystem for CosSystem {
    fn name(&self) -> &str {
        "cos3"
    }

    fn dim(&self) -> usize {
        3
    }

    fn component(&self, i: usize, x: &[Float]) -> Float {
        let prec = x[0].prec();
        let mut arg = Float::with_val(prec, &x[i] * 2u32);
        for xj in x {
            arg -= xj;
        }
        Float::with_val(prec, &x[i] - arg.cos())
    }

    fn mu_hint(&self) -> Option<f64> {
        Some(113.3)
    }
}

/// Registered problem identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemId {
    Exp5,
    Quad2,
    Cos3,
}

impl ProblemId {
    pub const ALL: [ProblemId; 3] = [Self::Exp5, Self::Quad2, Self::Cos3];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exp5 => "exp5",
            Self::Quad2 => "quad2",
            Self::Cos3 => "cos3",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp5" => Ok(Self::Exp5),
            "quad2" => Ok(Self::Quad2),
            "cos3" => Ok(Self::Cos3),
            _ => Err(Error::Unknown {
                what: "problem",
                value: s.to_string(),
            }),
        }
    }
}

/// A benchmark problem: system, start, published cost parameter and a
/// high-precision reference root.
pub struct ProblemSpec {
    pub id: ProblemId,
    pub system: Box<dyn NonlinearSystem>,
    /// Starting point as decimal strings.
    pub x0: &'static [&'static str],
    /// Products per scalar evaluation used in the published tables.
    pub mu_published: f64,
    /// Elementary operations of one full evaluation of `F`, for
    /// [`crate::efficiency::estimate_mu`].
    pub usage_profile: &'static [(crate::efficiency::ElementaryOp, u32)],
    /// Reference root components, one decimal string per line.
    reference_root: &'static str,
    /// Root prefix as printed with the published results.
    pub printed_root: &'static [&'static str],
    /// Every component is a sum of univariate terms. Both operators then
    /// coincide and D1 keeps the full orders 4 and 6.
    pub separable: bool,
    /// Published results from the given start.
    pub published: &'static [PublishedRow],
}

/// One published result row. Decimal columns are kept as printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedRow {
    pub method: MethodKind,
    pub dd: DividedDifferenceKind,
    pub iterations: usize,
    pub cost: &'static str,
    pub cei: &'static str,
    pub time_factor: &'static str,
    pub order: u32,
    pub q: u32,
}

const fn row(
    method: MethodKind,
    dd: DividedDifferenceKind,
    iterations: usize,
    cost: &'static str,
    cei: &'static str,
    time_factor: &'static str,
    order: u32,
    q: u32,
) -> PublishedRow {
    PublishedRow {
        method,
        dd,
        iterations,
        cost,
        cei,
        time_factor,
        order,
        q,
    }
}

impl ProblemSpec {
    pub fn m(&self) -> usize {
        self.system.dim()
    }

    pub fn x0(&self, ctx: &PrecisionContext) -> Vector {
        Vector::parse(ctx, self.x0).expect("registered start is a valid decimal")
    }

    /// Reference root rounded to the context precision. The stored digits
    /// are computed at 8192 digits.
    pub fn reference_root(&self, ctx: &PrecisionContext) -> Vector {
        let comps: Vec<&str> = self.reference_root.lines().filter(|l| !l.trim().is_empty()).collect();
        Vector::parse(ctx, &comps).expect("stored reference root parses")
    }

    /// Method variant with the order it attains on this problem.
    pub fn variant(&self, method: MethodKind, dd: DividedDifferenceKind) -> Variant {
        let v = Variant::new(method, dd);
        if self.separable {
            v.full()
        } else {
            v
        }
    }

    pub fn published_row(&self, method: MethodKind, dd: DividedDifferenceKind) -> Option<&'static PublishedRow> {
        let dd = method.effective_dd(dd);
        self.published.iter().find(|r| r.method == method && r.dd == dd)
    }

    pub fn reference_digits(&self) -> u32 {
        REFERENCE_DIGITS
    }
}

/// Solves `spec` with Phi2/D2 at `digits` and returns the final iterate as
/// decimal strings of `digits` significant digits, together with
/// `||F(root)||_inf`.
pub fn compute_reference_root(spec: &ProblemSpec, digits: u32) -> Result<(Vec<String>, Float)> {
    let ctx = PrecisionContext::new(digits)?;
    let report = crate::methods::solve(
        spec.system.as_ref(),
        &spec.x0(&ctx),
        MethodKind::Phi2,
        D2,
        &ctx,
        crate::methods::DEFAULT_MAX_ITERS,
    )?;
    let root = report.final_iterate;
    let residual = crate::linalg::inf_norm(&spec.system.eval(&root, &mut crate::linalg::OpCounters::new()));
    let digits = digits as usize;
    Ok((root.iter().map(|c| to_decimal_digits(c, digits)).collect(), residual))
}

/// Precision at which the stored reference roots were computed.
pub const REFERENCE_DIGITS: u32 = 8192;

// Published rows, in table order.
const EXP5_PUBLISHED: &[PublishedRow] = &[
    row(Phi0, D1, 11, "3223.0", "1.000215086", "10706.57", 2, 3493),
    row(Phi1, D1, 5, "5568.0", "1.000249006", "9248.26", 4, 1112),
    row(Phi2, D1, 4, "6039.5", "1.000296717", "7761.36", 6, 1191),
];

const QUAD2_PUBLISHED: &[PublishedRow] = &[
    row(Phi0, D1, 11, "32.5", "1.021556664", "107.96", 2, 3334),
    row(Phi1, D1, 7, "59.0", "1.018794991", "123.66", 3, 2908),
    row(Phi1, D2, 5, "65.0", "1.021556664", "107.96", 4, 1951),
    row(Phi2, D1, 5, "69.0", "1.020294410", "114.61", 4, 1384),
    row(Phi2, D2, 4, "75.0", "1.024177781", "96.38", 6, 2392),
];

const COS3_PUBLISHED: &[PublishedRow] = &[
    row(Phi0, D1, 13, "1748.0", "1.000396616", "5806.73", 2, 2575),
    row(Phi1, D1, 8, "2816.2", "1.000390181", "5902.48", 3, 2549),
    row(Phi1, D2, 6, "4175.8", "1.000332038", "6935.85", 4, 2517),
    row(Phi2, D1, 6, "3169.6", "1.000437468", "5264.59", 4, 1514),
    row(Phi2, D2, 4, "4529.2", "1.000395680", "5820.46", 6, 725),
];

pub fn problem(id: ProblemId) -> ProblemSpec {
    use crate::efficiency::ElementaryOp::*;
    match id {
        ProblemId::Exp5 => ProblemSpec {
            id,
            system: Box::new(ExpSystem),
            x0: &["-2.1", "-2.1", "6.4", "6.4", "-2.1"],
            mu_published: 87.8,
            usage_profile: &[(Exp, 5)],
            reference_root: include_str!("../data/exp5_root.txt"),
            printed_root: &["-2.153967996", "-2.153967996", "6.463463374", "6.463463374", "-2.153967996"],
            separable: true,
            published: EXP5_PUBLISHED,
        },
        ProblemId::Quad2 => ProblemSpec {
            id,
            system: Box::new(QuadSystem),
            x0: &["3.0", "0.4"],
            mu_published: 1.5,
            usage_profile: &[(Product, 3)],
            reference_root: include_str!("../data/quad2_root.txt"),
            printed_root: &["2.98118805", "0.335436739"],
            separable: false,
            published: QUAD2_PUBLISHED,
        },
        ProblemId::Cos3 => ProblemSpec {
            id,
            system: Box::new(CosSystem),
            x0: &["0.4", "0.4", "0.9"],
            mu_published: 113.3,
            usage_profile: &[(Cos, 3), (Product, 3)],
            reference_root: include_str!("../data/cos3_root.txt"),
            printed_root: &["0.5438500415", "0.5438500415", "0.9957781534"],
            separable: false,
            published: COS3_PUBLISHED,
        },
    }
}

pub fn registry() -> Vec<ProblemSpec> {
    ProblemId::ALL.into_iter().map(problem).collect()
}
