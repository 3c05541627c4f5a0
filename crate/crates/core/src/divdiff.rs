//! First-order divided-difference operators `[y, x; F]`.
//!
//! Both operators walk the chain of mixed-coordinate points
//!
//! ```text
//! p_k = (y_1, .., y_k, x_{k+1}, .., x_m),   k = 0..m   (p_0 = x, p_m = y)
//! ```
//!
//! and [`DividedDifferenceKind::D2`] also walks the reversed chain
//!
//! ```text
//! r_k = (x_1, .., x_k, y_{k+1}, .., y_m),   k = 0..m   (r_0 = y, r_m = x)
//! ```
//!
//! Each chain point is evaluated once and shared by adjacent columns, so a
//! D1 operator at a fresh pair costs `m(m+1)` scalar evaluations and a D2
//! operator `2m^2`; with `F(x)` and `F(y)` supplied these drop to `m(m-1)`
//! and `2m(m-1)`.

use std::fmt;
use std::str::FromStr;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, Matrix, OpCounters, Vector};
use crate::precision::PrecisionContext;
use crate::system::NonlinearSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DividedDifferenceKind {
    /// Classical forward-chain operator.
    D1,
    /// Symmetrised operator: the mean of the forward and reversed chains.
    D2,
}

impl DividedDifferenceKind {
    pub const ALL: [DividedDifferenceKind; 2] = [Self::D1, Self::D2];
}

impl fmt::Display for DividedDifferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::D1 => "d1",
            Self::D2 => "d2",
        })
    }
}

impl FromStr for DividedDifferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d1" => Ok(Self::D1),
            "d2" => Ok(Self::D2),
            _ => Err(Error::Unknown {
                what: "divided difference",
                value: s.to_string(),
            }),
        }
    }
}

/// Values of `F` at the endpoints that the caller already holds.
#[derive(Clone, Copy)]
pub struct KnownValues<'a> {
    pub fy: &'a Vector,
    pub fx: &'a Vector,
}

fn check_pair(y: &Vector, x: &Vector, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    if y.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let bits = ctx.bits();
    let one = ctx.int(1);
    let mut steps = Vec::with_capacity(x.dim());
    for j in 0..x.dim() {
        let h = Float::with_val(bits, &y[j] - &x[j]);
        let scale = Float::with_val(bits, &*x[j].as_abs()).max(&one);
        let floor = Float::with_val(bits, ctx.eps_machine() * &scale);
        if h.cmp_abs(&floor) == Some(std::cmp::Ordering::Less) {
            return Err(Error::DegenerateDividedDifference { coordinate: j });
        }
        steps.push(h);
    }
    Ok(steps)
}

/// Point with the first `k` coordinates from `first` and the rest from `rest`.
fn mixed(first: &Vector, rest: &Vector, k: usize) -> Vector {
    Vector::from_entries(
        (0..first.dim())
            .map(|j| if j < k { first[j].clone() } else { rest[j].clone() })
            .collect(),
    )
}

/// `F` at every point of a chain `k = 0..=m`, reusing known endpoint values.
fn chain_values(
    sys: &dyn NonlinearSystem,
    first: &Vector,
    rest: &Vector,
    at_start: Option<&Vector>,
    at_end: Option<&Vector>,
    counters: &mut OpCounters,
) -> Vec<Vector> {
    let m = first.dim();
    (0..=m)
        .map(|k| {
            let known = match k {
                0 => at_start,
                k if k == m => at_end,
                _ => None,
            };
            match known {
                Some(v) => v.clone(),
                None => sys.eval(&mixed(first, rest, k), counters),
            }
        })
        .collect()
}

/// Classical operator:
/// `(F_i(p_j) - F_i(p_{j-1})) / (y_j - x_j)`.
pub fn dd_d1(
    sys: &dyn NonlinearSystem,
    y: &Vector,
    x: &Vector,
    known: Option<KnownValues<'_>>,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<Matrix> {
    let steps = check_pair(y, x, ctx)?;
    let m = x.dim();
    let bits = ctx.bits();
    let forward = chain_values(
        sys,
        y,
        x,
        known.map(|k| k.fx),
        known.map(|k| k.fy),
        counters,
    );
    let mut op = Matrix::zeros(m, bits);
    for i in 0..m {
        for j in 0..m {
            let num = Float::with_val(bits, &forward[j + 1][i] - &forward[j][i]);
            op[(i, j)] = Float::with_val(bits, &num / &steps[j]);
            counters.quotients += 1;
        }
    }
    Ok(op)
}

/// Symmetric operator: the forward numerator of [`dd_d1`] plus the
/// reversed-chain numerator `F_i(r_{j-1}) - F_i(r_j)`, over `2 (y_j - x_j)`.
///
/// Each entry is one quotient by `y_j - x_j` followed by one product with
/// `1/2`.
pub fn dd_d2(
    sys: &dyn NonlinearSystem,
    y: &Vector,
    x: &Vector,
    known: Option<KnownValues<'_>>,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<Matrix> {
    let steps = check_pair(y, x, ctx)?;
    let m = x.dim();
    let bits = ctx.bits();
    let fx = match known {
        Some(k) => k.fx.clone(),
        None => sys.eval(x, counters),
    };
    let fy = match known {
        Some(k) => k.fy.clone(),
        None => sys.eval(y, counters),
    };
    let forward = chain_values(sys, y, x, Some(&fx), Some(&fy), counters);
    let reversed = chain_values(sys, x, y, Some(&fy), Some(&fx), counters);
    let half = Float::with_val(bits, 0.5);
    let mut op = Matrix::zeros(m, bits);
    for i in 0..m {
        for j in 0..m {
            let mut num = Float::with_val(bits, &forward[j + 1][i] - &forward[j][i]);
            num += &reversed[j][i];
            num -= &reversed[j + 1][i];
            let q = Float::with_val(bits, &num / &steps[j]);
            counters.quotients += 1;
            op[(i, j)] = Float::with_val(bits, &q * &half);
            counters.products += 1;
        }
    }
    Ok(op)
}

pub fn divided_difference(
    kind: DividedDifferenceKind,
    sys: &dyn NonlinearSystem,
    y: &Vector,
    x: &Vector,
    known: Option<KnownValues<'_>>,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<Matrix> {
    match kind {
        DividedDifferenceKind::D1 => dd_d1(sys, y, x, known, ctx, counters),
        DividedDifferenceKind::D2 => dd_d2(sys, y, x, known, ctx, counters),
    }
}

/// Order in which the solvers hand the two points to an operator. Only
/// D1 notices: D2 is symmetric in its arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum PointOrder {
    /// `[x + F(x), x - F(x); F]` and `[y, x; F]`.
    Written,
    /// `[x - F(x), x + F(x); F]` and `[x, y; F]`. This is the orientation
    /// under which D1 reproduces the published iteration histories.
    #[default]
    Swapped,
}

impl PointOrder {
    /// `[y, x; F]` in this orientation.
    #[allow(clippy::too_many_arguments)]
    pub fn operator(
        self,
        kind: DividedDifferenceKind,
        sys: &dyn NonlinearSystem,
        y: &Vector,
        x: &Vector,
        known: Option<KnownValues<'_>>,
        ctx: &PrecisionContext,
        counters: &mut OpCounters,
    ) -> Result<Matrix> {
        match self {
            Self::Written => divided_difference(kind, sys, y, x, known, ctx, counters),
            Self::Swapped => {
                let known = known.map(|k| KnownValues { fy: k.fx, fx: k.fy });
                divided_difference(kind, sys, x, y, known, ctx, counters)
            }
        }
    }
}

impl fmt::Display for PointOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Written => "written",
            Self::Swapped => "swapped",
        })
    }
}

impl FromStr for PointOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "written" => Ok(Self::Written),
            "swapped" => Ok(Self::Swapped),
            _ => Err(Error::Unknown {
                what: "point order",
                value: s.to_string(),
            }),
        }
    }
}

/// The derivative-free Jacobian substitute `[x + F(x), x - F(x); F]`.
#[derive(Debug, Clone)]
pub struct CentralOperator {
    pub matrix: Matrix,
    /// `F(x)`, evaluated once and handed back for reuse.
    pub fx: Vector,
}

/// Builds the central operator at `x`.
///
/// On a degenerate coordinate (`|F_j(x)| < eps`), the error is returned
/// together with the already evaluated `F(x)` discarded; callers test their
/// stopping rule before calling this.
pub fn central_dd(
    sys: &dyn NonlinearSystem,
    x: &Vector,
    kind: DividedDifferenceKind,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<CentralOperator> {
    central_dd_ordered(sys, x, kind, PointOrder::Written, ctx, counters)
}

/// [`central_dd`] with the points passed in the given order.
pub fn central_dd_ordered(
    sys: &dyn NonlinearSystem,
    x: &Vector,
    kind: DividedDifferenceKind,
    order: PointOrder,
    ctx: &PrecisionContext,
    counters: &mut OpCounters,
) -> Result<CentralOperator> {
    let fx = sys.eval(x, counters);
    for j in 0..fx.dim() {
        if fx[j].cmp_abs(ctx.eps_machine()) == Some(std::cmp::Ordering::Less) {
            return Err(Error::DegenerateDividedDifference { coordinate: j });
        }
    }
    let u = x.add(&fx);
    let v = x - &fx;
    let matrix = order.operator(kind, sys, &u, &v, None, ctx, counters)?;
    Ok(CentralOperator { matrix, fx })
}

/// `|| op (y - x) - (F(y) - F(x)) ||_inf`.
pub fn check_secant(op: &Matrix, sys: &dyn NonlinearSystem, y: &Vector, x: &Vector) -> Float {
    let mut scratch = OpCounters::new();
    let lhs = op.mul_vec(&(y - x));
    let rhs = &sys.eval(y, &mut scratch) - &sys.eval(x, &mut scratch);
    inf_norm(&(&lhs - &rhs))
}

/// `|| op(y, x) - op(x, y) ||_inf`.
pub fn check_symmetry(
    sys: &dyn NonlinearSystem,
    y: &Vector,
    x: &Vector,
    kind: DividedDifferenceKind,
    ctx: &PrecisionContext,
) -> Result<Float> {
    let mut scratch = OpCounters::new();
    let a = divided_difference(kind, sys, y, x, None, ctx, &mut scratch)?;
    let b = divided_difference(kind, sys, x, y, None, ctx, &mut scratch)?;
    Ok(a.sub(&b).norm_inf())
}

/// Residual of the Potra identity
/// `[u, v; F] = 2 [u, 2v - u; F] - [v, 2v - u; F]`, which characterises
/// operators equal to the mean-value integral of the Jacobian.
pub fn check_potra(
    sys: &dyn NonlinearSystem,
    kind: DividedDifferenceKind,
    u: &Vector,
    v: &Vector,
    ctx: &PrecisionContext,
) -> Result<Float> {
    let mut scratch = OpCounters::new();
    let w = &v.scaled(&ctx.int(2)) - u;
    let lhs = divided_difference(kind, sys, u, v, None, ctx, &mut scratch)?;
    let a = divided_difference(kind, sys, u, &w, None, ctx, &mut scratch)?;
    let b = divided_difference(kind, sys, v, &w, None, ctx, &mut scratch)?;
    let rhs = a.double_minus(&b);
    Ok(lhs.sub(&rhs).norm_inf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use crate::system::FnSystem;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(64).unwrap()
    }

    fn v(ctx: &PrecisionContext, xs: &[f64]) -> Vector {
        Vector::from_f64(ctx, xs)
    }

    fn m(ctx: &PrecisionContext, rows: &[&[f64]]) -> Matrix {
        Matrix::from_f64(ctx, rows)
    }

    fn assert_close(a: &Matrix, b: &Matrix, tol: &Float) {
        let d = a.sub(b).norm_inf();
        assert!(d <= *tol, "{a:?} vs {b:?}: {d}");
    }

    #[test]
    fn d1_quadratic_closed_form() {
        let ctx = ctx();
        let sys = problems::quad2();
        let mut c = OpCounters::new();
        let op = dd_d1(&sys, &v(&ctx, &[2.0, 2.0]), &v(&ctx, &[1.0, 1.0]), None, &ctx, &mut c).unwrap();
        assert_eq!(op, m(&ctx, &[&[3.0, 3.0], &[1.0, 2.0]]));
        assert_eq!(c.scalar_fn_evals, 6);
        assert_eq!(c.quotients, 4);

        // [x+h, x]^(1) = [[2x1+h1, 2x2+h2], [x2, x1+h1]]
        let x = v(&ctx, &[0.7, -1.3]);
        let h = v(&ctx, &[0.25, 0.125]);
        let op = dd_d1(&sys, &x.add(&h), &x, None, &ctx, &mut c).unwrap();
        let want = m(&ctx, &[&[1.65, -2.475], &[-1.3, 0.95]]);
        assert_close(&op, &want, ctx.check_tolerance());
    }

    #[test]
    fn d2_quadratic_closed_form() {
        let ctx = ctx();
        let sys = problems::quad2();
        let mut c = OpCounters::new();
        let op = dd_d2(&sys, &v(&ctx, &[2.0, 2.0]), &v(&ctx, &[1.0, 1.0]), None, &ctx, &mut c).unwrap();
        assert_eq!(op, m(&ctx, &[&[3.0, 3.0], &[1.5, 1.5]]));
        assert_eq!(c.scalar_fn_evals, 8);
        assert_eq!(c.quotients, 4);
        assert_eq!(c.products, 4);

        // [x+h, x]^(2) = [[2x1+h1, 2x2+h2], [x2+h2/2, x1+h1/2]]
        let x = v(&ctx, &[0.7, -1.3]);
        let h = v(&ctx, &[0.25, 0.125]);
        let op = dd_d2(&sys, &x.add(&h), &x, None, &ctx, &mut c).unwrap();
        let want = m(&ctx, &[&[1.65, -2.475], &[-1.2375, 0.825]]);
        assert_close(&op, &want, ctx.check_tolerance());
    }

    #[test]
    fn affine_systems_are_exact() {
        let ctx = ctx();
        let a = vec![vec![2.0, -1.0, 0.5], vec![0.0, 3.0, 1.0], vec![1.0, 1.0, -4.0]];
        let sys = FnSystem::affine(a.clone(), vec![1.0, -2.0, 0.25]);
        let rows: Vec<&[f64]> = a.iter().map(|r| r.as_slice()).collect();
        let want = m(&ctx, &rows);
        let y = v(&ctx, &[0.3, 1.7, -2.2]);
        let x = v(&ctx, &[-1.1, 0.4, 0.9]);
        for kind in DividedDifferenceKind::ALL {
            let mut c = OpCounters::new();
            let op = divided_difference(kind, &sys, &y, &x, None, &ctx, &mut c).unwrap();
            assert_close(&op, &want, ctx.check_tolerance());
            let central = central_dd(&sys, &x, kind, &ctx, &mut c).unwrap();
            assert_close(&central.matrix, &want, ctx.check_tolerance());
            assert!(check_symmetry(&sys, &y, &x, kind, &ctx).unwrap() <= *ctx.check_tolerance());
            assert!(check_potra(&sys, kind, &y, &x, &ctx).unwrap() <= *ctx.check_tolerance());
        }
    }

    #[test]
    fn scalar_central_operator() {
        let ctx = ctx();
        let sys = FnSystem::new("x^2-1", 1, |_, x| Float::with_val(x[0].prec(), x[0].square_ref()) - 1u32);
        let mut c = OpCounters::new();
        let op = central_dd(&sys, &v(&ctx, &[2.0]), DividedDifferenceKind::D1, &ctx, &mut c).unwrap();
        assert_eq!(op.matrix[(0, 0)], 4);
        assert_eq!(op.fx[0], 3);
        // F(x) plus the two fresh chain points.
        assert_eq!(c.scalar_fn_evals, 3);
    }

    #[test]
    fn evaluation_counts_with_known_endpoints() {
        let ctx = ctx();
        let sys = problems::cos3();
        let y = v(&ctx, &[0.5, 0.6, 0.9]);
        let x = v(&ctx, &[0.4, 0.45, 1.0]);
        let mut scratch = OpCounters::new();
        let fy = sys.eval(&y, &mut scratch);
        let fx = sys.eval(&x, &mut scratch);
        let known = KnownValues { fy: &fy, fx: &fx };

        let mut c = OpCounters::new();
        let with = dd_d1(&sys, &y, &x, Some(known), &ctx, &mut c).unwrap();
        assert_eq!(c.scalar_fn_evals, 6);
        let without = dd_d1(&sys, &y, &x, None, &ctx, &mut OpCounters::new()).unwrap();
        assert_eq!(with, without);

        let mut c = OpCounters::new();
        let with = dd_d2(&sys, &y, &x, Some(known), &ctx, &mut c).unwrap();
        assert_eq!(c.scalar_fn_evals, 12);
        let mut c2 = OpCounters::new();
        let without = dd_d2(&sys, &y, &x, None, &ctx, &mut c2).unwrap();
        assert_eq!(c2.scalar_fn_evals, 18);
        assert_eq!(with, without);
    }

    #[test]
    fn degenerate_coordinate_is_an_error() {
        let ctx = ctx();
        let sys = problems::quad2();
        let err = dd_d1(&sys, &v(&ctx, &[1.0, 2.0]), &v(&ctx, &[1.0, 1.0]), None, &ctx, &mut OpCounters::new());
        assert_eq!(err.unwrap_err(), Error::DegenerateDividedDifference { coordinate: 0 });

        // F_2 vanishes at (1, 1), so u_2 == v_2.
        let err = central_dd(&sys, &v(&ctx, &[1.0, 1.0]), DividedDifferenceKind::D2, &ctx, &mut OpCounters::new());
        assert_eq!(err.unwrap_err(), Error::DegenerateDividedDifference { coordinate: 1 });
    }

    #[test]
    fn secant_examples() {
        let ctx = ctx();
        let sys = problems::quad2();
        let (y, x) = (v(&ctx, &[2.0, 2.0]), v(&ctx, &[1.0, 1.0]));
        let op = dd_d1(&sys, &y, &x, None, &ctx, &mut OpCounters::new()).unwrap();
        assert_eq!(check_secant(&op, &sys, &y, &x), 0);

        let sys = problems::cos3();
        let x = v(&ctx, &[0.4, 0.4, 0.9]);
        let tiny = ctx.pow10(-30);
        let mut y = x.clone();
        y[0] += &tiny;
        // Only the first column is defined; perturb the others by distinct tiny steps.
        y[1] += Float::with_val(ctx.bits(), &tiny * 2u32);
        y[2] -= Float::with_val(ctx.bits(), &tiny * 3u32);
        for kind in DividedDifferenceKind::ALL {
            let op = divided_difference(kind, &sys, &y, &x, None, &ctx, &mut OpCounters::new()).unwrap();
            assert!(check_secant(&op, &sys, &y, &x) <= *ctx.check_tolerance());
        }
    }

    #[test]
    fn symmetry_examples() {
        let ctx = ctx();
        let sys = problems::quad2();
        let (y, x) = (v(&ctx, &[2.0, 2.0]), v(&ctx, &[1.0, 1.0]));
        assert!(check_symmetry(&sys, &y, &x, DividedDifferenceKind::D2, &ctx).unwrap() <= *ctx.check_tolerance());
        // Row 2 of D1 is (x2, y1) versus (y2, x1): differences (-1, 1).
        assert_eq!(check_symmetry(&sys, &y, &x, DividedDifferenceKind::D1, &ctx).unwrap(), 2);
    }

    #[test]
    fn potra_examples() {
        let ctx = ctx();
        let sys = problems::quad2();
        let (u, w) = (v(&ctx, &[1.0, 0.0]), v(&ctx, &[0.0, 1.0]));
        assert_eq!(check_potra(&sys, DividedDifferenceKind::D1, &u, &w, &ctx).unwrap(), 2);
        assert!(check_potra(&sys, DividedDifferenceKind::D2, &u, &w, &ctx).unwrap() <= *ctx.check_tolerance());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("D2".parse::<DividedDifferenceKind>().unwrap(), DividedDifferenceKind::D2);
        assert!("d3".parse::<DividedDifferenceKind>().is_err());
        assert_eq!(DividedDifferenceKind::D1.to_string(), "d1");
    }
}
