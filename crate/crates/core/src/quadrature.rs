//! Gauss-Legendre quadrature at working precision and the integral form of
//! the divided difference, `int_0^1 F'(x + t (y - x)) dt`.
//!
//! The integral form is a test oracle. The Jacobian at each node is built
//! from central differences with step `10^(-digits/4)`, so its accuracy is
//! governed by [`PrecisionContext::oracle_tolerance`].

use rug::float::Constant;
use rug::Float;

use crate::linalg::{Matrix, OpCounters, Vector};
use crate::precision::PrecisionContext;
use crate::system::NonlinearSystem;

/// Nodes and weights on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p0 = Float::with_val(prec, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        // k P_k = (2k-1) x P_{k-1} - (k-1) P_{k-2}
        let mut p2 = Float::with_val(prec, x * &p1);
        p2 *= (2 * k - 1) as u32;
        p2 -= Float::with_val(prec, &p0 * (k - 1) as u32);
        p2 /= k as u32;
        p0 = p1;
        p1 = p2;
    }
    // (x^2 - 1) P_n' = n (x P_n - P_{n-1})
    let mut dp = Float::with_val(prec, x * &p1);
    dp -= &p0;
    dp *= n as u32;
    let denom = Float::with_val(prec, x.square_ref()) - 1u32;
    (p1, dp / denom)
}

impl GaussLegendre {
    /// `n`-point rule with nodes refined by Newton's method at `bits` of
    /// precision.
    pub fn new(n: usize, bits: u32) -> Self {
        assert!(n >= 2, "at least two nodes");
        let pi = Float::with_val(bits, Constant::Pi);
        let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 8));
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for k in 1..=n {
            // Tricomi's initial guess for the k-th root of P_n in (-1, 1).
            let theta = Float::with_val(bits, &pi * (4 * k - 1) as u32) / (4 * n + 2) as u32;
            let mut x = theta.cos();
            for _ in 0..200 {
                let (p, dp) = legendre(n, &x);
                let dx = Float::with_val(bits, &p / &dp);
                x -= &dx;
                if dx.cmp_abs(&tol) != Some(std::cmp::Ordering::Greater) {
                    break;
                }
            }
            let (_, dp) = legendre(n, &x);
            // w = 2 / ((1 - x^2) P_n'(x)^2), halved for [0, 1].
            let one_minus = Float::with_val(bits, 1) - Float::with_val(bits, x.square_ref());
            let w = Float::with_val(bits, 1) / (one_minus * dp.square());
            let t = (Float::with_val(bits, 1) + &x) / 2u32;
            nodes.push(t);
            weights.push(w);
        }
        Self { nodes, weights }
    }

    /// `int_0^1 g(t) dt`.
    pub fn integrate(&self, g: impl Fn(&Float) -> Float) -> Float {
        let prec = self.nodes[0].prec();
        let mut acc = Float::new(prec);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += Float::with_val(prec, g(t) * w);
        }
        acc
    }
}

/// Central-difference Jacobian with step `10^(-digits/4)`.
pub fn fd_jacobian(sys: &dyn NonlinearSystem, x: &Vector, ctx: &PrecisionContext) -> Matrix {
    let m = x.dim();
    let bits = ctx.bits();
    let step = ctx.pow10(-i64::from(ctx.digits() / 4));
    let two_step = Float::with_val(bits, &step * 2u32);
    let mut scratch = OpCounters::new();
    let mut jac = Matrix::zeros(m, bits);
    for j in 0..m {
        let mut plus = x.clone();
        plus[j] += &step;
        let mut minus = x.clone();
        minus[j] -= &step;
        let fp = sys.eval(&plus, &mut scratch);
        let fm = sys.eval(&minus, &mut scratch);
        for i in 0..m {
            jac[(i, j)] = Float::with_val(bits, &fp[i] - &fm[i]) / &two_step;
        }
    }
    jac
}

/// `int_0^1 F'(x + t (y - x)) dt` by `nodes`-point Gauss-Legendre over
/// finite-difference Jacobians.
pub fn integral_dd_oracle(
    sys: &dyn NonlinearSystem,
    y: &Vector,
    x: &Vector,
    nodes: usize,
    ctx: &PrecisionContext,
) -> Matrix {
    let rule = GaussLegendre::new(nodes, ctx.bits());
    let h = y - x;
    let m = x.dim();
    let mut acc = Matrix::zeros(m, ctx.bits());
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let point = x.add(&h.scaled(t));
        let jac = fd_jacobian(sys, &point, ctx);
        for i in 0..m {
            for j in 0..m {
                acc[(i, j)] += Float::with_val(ctx.bits(), &jac[(i, j)] * w);
            }
        }
    }
    acc
}
