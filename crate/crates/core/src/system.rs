//! Nonlinear systems `F: R^m -> R^m` evaluated one scalar component at a
//! time, so that evaluation counts can be tracked exactly.

use rug::Float;

use crate::linalg::{OpCounters, Vector};

/// A system of `m` scalar equations in `m` unknowns.
///
/// Implementations must be pure: `component` depends only on its arguments.
/// Components are computed at the precision of the point's entries.
pub trait NonlinearSystem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// `F_i(x)`, uncounted. Callers inside the solver go through
    /// [`eval_component`](NonlinearSystem::eval_component).
    fn component(&self, i: usize, x: &[Float]) -> Float;

    /// Products per scalar-function evaluation, when known.
    fn mu_hint(&self) -> Option<f64> {
        None
    }

    fn eval_component(&self, i: usize, x: &Vector, counters: &mut OpCounters) -> Float {
        counters.scalar_fn_evals += 1;
        self.component(i, x.as_slice())
    }

    fn eval(&self, x: &Vector, counters: &mut OpCounters) -> Vector {
        Vector::from_entries((0..self.dim()).map(|i| self.eval_component(i, x, counters)).collect())
    }
}

type ComponentFn = dyn Fn(usize, &[Float]) -> Float + Send + Sync;

/// A system given by a closure, for ad-hoc problems and tests.
pub struct FnSystem {
    name: String,
    dim: usize,
    mu: Option<f64>,
    f: Box<ComponentFn>,
}

impl FnSystem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(usize, &[Float]) -> Float + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            mu: None,
            f: Box::new(f),
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    /// `F(x) = A x + b` with `A` and `b` given as decimal-intent doubles.
    pub fn affine(a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        let m = b.len();
        assert!(a.len() == m && a.iter().all(|r| r.len() == m));
        Self::new("affine", m, move |i, x| {
            let prec = x[0].prec();
            let dec = |v: f64| Float::with_val(prec, Float::parse(format!("{v:e}")).unwrap());
            let mut acc = dec(b[i]);
            for (aij, xj) in a[i].iter().zip(x) {
                acc += Float::with_val(prec, dec(*aij) * xj);
            }
            acc
        })
    }
}

impl NonlinearSystem for FnSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn component(&self, i: usize, x: &[Float]) -> Float {
        (self.f)(i, x)
    }

    fn mu_hint(&self) -> Option<f64> {
        self.mu
    }
}
