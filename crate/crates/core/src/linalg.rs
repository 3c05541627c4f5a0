//! Dense vectors and matrices over MPFR reals, LU with partial pivoting and
//! instrumented operation counters.

use std::fmt;
use std::ops::{AddAssign, Index, IndexMut, Sub};

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{to_decimal_string, PrecisionContext};

/// Counts of the operations that enter the cost model.
///
/// Additions, subtractions, exact scalings by powers of two and pivot
/// comparisons are not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub scalar_fn_evals: u64,
    pub products: u64,
    pub quotients: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    /// Component-wise difference `self - earlier`.
    pub fn since(&self, earlier: &OpCounters) -> OpCounters {
        OpCounters {
            scalar_fn_evals: self.scalar_fn_evals - earlier.scalar_fn_evals,
            products: self.products - earlier.products,
            quotients: self.quotients - earlier.quotients,
        }
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.scalar_fn_evals += rhs.scalar_fn_evals;
        self.products += rhs.products;
        self.quotients += rhs.quotients;
    }
}

#[derive(Clone, PartialEq)]
pub struct Vector {
    entries: Vec<Float>,
}

impl Vector {
    pub fn from_entries(entries: Vec<Float>) -> Self {
        assert!(!entries.is_empty(), "vectors have dimension >= 1");
        Self { entries }
    }

    pub fn zeros(ctx: &PrecisionContext, m: usize) -> Self {
        Self::from_entries(vec![ctx.zero(); m])
    }

    pub fn from_f64(ctx: &PrecisionContext, values: &[f64]) -> Self {
        Self::from_entries(values.iter().map(|&v| ctx.from_f64(v)).collect())
    }

    pub fn parse(ctx: &PrecisionContext, values: &[&str]) -> Result<Self> {
        let entries = values
            .iter()
            .map(|s| ctx.parse(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_entries(entries))
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn prec(&self) -> u32 {
        self.entries[0].prec()
    }

    pub fn as_slice(&self) -> &[Float] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Float> {
        self.entries.iter()
    }

    /// Rounds every entry to `bits` of precision.
    pub fn with_prec(&self, bits: u32) -> Vector {
        Vector::from_entries(self.iter().map(|x| Float::with_val(bits, x)).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        let prec = self.prec();
        Vector::from_entries(
            self.iter()
                .zip(other.iter())
                .map(|(a, b)| Float::with_val(prec, a + b))
                .collect(),
        )
    }

    pub fn scaled(&self, c: &Float) -> Vector {
        let prec = self.prec();
        Vector::from_entries(self.iter().map(|a| Float::with_val(prec, a * c)).collect())
    }

    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.iter().map(to_decimal_string).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.iter().map(Float::to_f64).collect()
    }
}

impl Sub for &Vector {
    type Output = Vector;

    fn sub(self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        let prec = self.prec();
        Vector::from_entries(
            self.iter()
                .zip(other.iter())
                .map(|(a, b)| Float::with_val(prec, a - b))
                .collect(),
        )
    }
}

impl Index<usize> for Vector {
    type Output = Float;
    fn index(&self, i: usize) -> &Float {
        &self.entries[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut Float {
        &mut self.entries[i]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.iter().map(|x| x.to_string_radix(10, Some(20))))
            .finish()
    }
}

/// `max_i |v_i|`.
pub fn inf_norm(v: &Vector) -> Float {
    let mut best = Float::new(v.prec());
    for x in v.iter() {
        if x.cmp_abs(&best) == Some(std::cmp::Ordering::Greater) {
            best = Float::with_val(v.prec(), &*x.as_abs());
        }
    }
    best
}

/// Square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    m: usize,
    data: Vec<Float>,
}

impl Matrix {
    pub fn zeros(m: usize, bits: u32) -> Self {
        assert!(m >= 1);
        Self {
            m,
            data: vec![Float::new(bits); m * m],
        }
    }

    pub fn identity(m: usize, bits: u32) -> Self {
        let mut a = Self::zeros(m, bits);
        for i in 0..m {
            a[(i, i)] = Float::with_val(bits, 1);
        }
        a
    }

    pub fn from_rows(rows: Vec<Vec<Float>>) -> Self {
        let m = rows.len();
        assert!(m >= 1 && rows.iter().all(|r| r.len() == m), "matrix must be square");
        Self {
            m,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_f64(ctx: &PrecisionContext, rows: &[&[f64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| ctx.from_f64(v)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn prec(&self) -> u32 {
        self.data[0].prec()
    }

    pub fn row(&self, i: usize) -> &[Float] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// `A x`; uncounted, used by diagnostics only.
    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.m, x.dim());
        let prec = self.prec().max(x.prec());
        Vector::from_entries(
            (0..self.m)
                .map(|i| {
                    let mut acc = Float::new(prec);
                    for (a, b) in self.row(i).iter().zip(x.iter()) {
                        acc += Float::with_val(prec, a * b);
                    }
                    acc
                })
                .collect(),
        )
    }

    /// `self - other`.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.m, other.m);
        let prec = self.prec();
        Matrix {
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| Float::with_val(prec, a - b))
                .collect(),
        }
    }

    /// `2 self - other`. Doubling is an exponent shift and is not counted.
    pub fn double_minus(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.m, other.m);
        let prec = self.prec();
        Matrix {
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| {
                    let mut d = Float::with_val(prec, a);
                    d <<= 1;
                    d -= b;
                    d
                })
                .collect(),
        }
    }

    pub fn scaled(&self, c: &Float) -> Matrix {
        let prec = self.prec();
        Matrix {
            m: self.m,
            data: self.data.iter().map(|a| Float::with_val(prec, a * c)).collect(),
        }
    }

    /// Induced infinity norm, the maximum absolute row sum.
    pub fn norm_inf(&self) -> Float {
        let prec = self.prec();
        let mut best = Float::new(prec);
        for i in 0..self.m {
            let mut sum = Float::new(prec);
            for x in self.row(i) {
                sum += &*x.as_abs();
            }
            if sum > best {
                best = sum;
            }
        }
        best
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> Float {
        let mut best = Float::new(self.prec());
        for x in &self.data {
            if x.cmp_abs(&best) == Some(std::cmp::Ordering::Greater) {
                best = Float::with_val(self.prec(), &*x.as_abs());
            }
        }
        best
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.m)
            .map(|i| self.row(i).iter().map(Float::to_f64).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Float;
    fn index(&self, (i, j): (usize, usize)) -> &Float {
        &self.data[i * self.m + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Float {
        &mut self.data[i * self.m + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_f64()).finish()
    }
}

/// `P A = L U` in packed storage: the strict lower triangle holds the unit
/// lower factor, the upper triangle holds `U`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: Matrix,
    perm: Vec<usize>,
    singular: Option<(usize, Float)>,
}

impl LuFactorization {
    pub fn is_singular(&self) -> bool {
        self.singular.is_some()
    }

    /// Row `i` of `P A` is row `perm[i]` of `A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn packed(&self) -> &Matrix {
        &self.lu
    }

    pub fn lower(&self) -> Matrix {
        let m = self.lu.dim();
        let mut l = Matrix::identity(m, self.lu.prec());
        for i in 0..m {
            for j in 0..i {
                l[(i, j)] = self.lu[(i, j)].clone();
            }
        }
        l
    }

    pub fn upper(&self) -> Matrix {
        let m = self.lu.dim();
        let mut u = Matrix::zeros(m, self.lu.prec());
        for i in 0..m {
            for j in i..m {
                u[(i, j)] = self.lu[(i, j)].clone();
            }
        }
        u
    }

    pub fn ensure_nonsingular(&self) -> Result<()> {
        match &self.singular {
            Some((column, pivot)) => Err(Error::SingularOperator {
                column: *column,
                pivot: pivot.to_string_radix(10, Some(10)),
            }),
            None => Ok(()),
        }
    }
}

/// Gaussian elimination with partial pivoting.
///
/// Adds exactly `m(m-1)(2m-1)/6` products and `m(m-1)/2` quotients to
/// `counters` whatever the matrix values. A pivot with magnitude below
/// `eps` marks the factorization singular; elimination continues with zero
/// multipliers in that column so the loop structure (and the counts) stay
/// fixed.
pub fn lu_factor(a: &Matrix, eps: &Float, counters: &mut OpCounters) -> LuFactorization {
    let m = a.dim();
    let prec = a.prec();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut singular = None;

    for k in 0..m {
        let mut p = k;
        for i in k + 1..m {
            if lu[(i, k)].cmp_abs(&lu[(p, k)]) == Some(std::cmp::Ordering::Greater) {
                p = i;
            }
        }
        if p != k {
            for j in 0..m {
                lu.data.swap(k * m + j, p * m + j);
            }
            perm.swap(k, p);
        }
        let pivot_ok = lu[(k, k)].cmp_abs(eps) != Some(std::cmp::Ordering::Less);
        if !pivot_ok && singular.is_none() {
            singular = Some((k, lu[(k, k)].clone()));
        }
        for i in k + 1..m {
            let l = if pivot_ok {
                Float::with_val(prec, &lu[(i, k)] / &lu[(k, k)])
            } else {
                Float::new(prec)
            };
            counters.quotients += 1;
            for j in k + 1..m {
                let t = Float::with_val(prec, &l * &lu[(k, j)]);
                lu[(i, j)] -= t;
                counters.products += 1;
            }
            lu[(i, k)] = l;
        }
    }

    LuFactorization { lu, perm, singular }
}

/// Solves `A x = b` with a factorization from [`lu_factor`].
///
/// Adds exactly `m(m-1)` products and `m` quotients.
pub fn lu_solve(fact: &LuFactorization, b: &Vector, counters: &mut OpCounters) -> Result<Vector> {
    fact.ensure_nonsingular()?;
    let lu = &fact.lu;
    let m = lu.dim();
    if b.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.dim(),
        });
    }
    let prec = lu.prec();

    // Forward substitution with unit lower factor.
    let mut y: Vec<Float> = Vec::with_capacity(m);
    for i in 0..m {
        let mut acc = Float::with_val(prec, &b[fact.perm[i]]);
        for (j, yj) in y.iter().enumerate() {
            acc -= Float::with_val(prec, &lu[(i, j)] * yj);
            counters.products += 1;
        }
        y.push(acc);
    }

    // Back substitution.
    let mut x = vec![Float::new(prec); m];
    for i in (0..m).rev() {
        let mut acc = std::mem::replace(&mut y[i], Float::new(prec));
        for j in i + 1..m {
            acc -= Float::with_val(prec, &lu[(i, j)] * &x[j]);
            counters.products += 1;
        }
        x[i] = Float::with_val(prec, &acc / &lu[(i, i)]);
        counters.quotients += 1;
    }

    Ok(Vector::from_entries(x))
}

/// Products added by one factorization of an `m x m` matrix.
pub fn lu_factor_products(m: u64) -> u64 {
    m * (m.saturating_sub(1)) * (2 * m).saturating_sub(1) / 6
}

pub fn lu_factor_quotients(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

pub fn lu_solve_products(m: u64) -> u64 {
    m * m.saturating_sub(1)
}

pub fn lu_solve_quotients(m: u64) -> u64 {
    m
}
