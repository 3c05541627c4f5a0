//! Cost per iteration `C = a(m) mu + p(m, l)`, efficiency index
//! `CEI = rho^(1/C)`, time factor and pairwise comparisons.
//!
//! Everything is evaluated in MPFR at the caller's precision so that table
//! values can be compared digit for digit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::divdiff::DividedDifferenceKind;
use crate::error::{Error, Result};
use crate::methods::MethodKind;
use crate::precision::PrecisionContext;

/// A method, the operator it uses (Phi0 is always D1) and the order `rho`
/// credited to it in the efficiency index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variant {
    pub method: MethodKind,
    pub dd: DividedDifferenceKind,
    pub rho: u32,
}

impl Variant {
    /// Credits the generic order of the method with this operator.
    pub fn new(method: MethodKind, dd: DividedDifferenceKind) -> Self {
        let dd = method.effective_dd(dd);
        Self {
            method,
            dd,
            rho: method.theoretical_order(dd),
        }
    }

    pub const PHI0: Variant = Variant {
        method: MethodKind::Phi0,
        dd: DividedDifferenceKind::D1,
        rho: 2,
    };

    /// Credits the order the method reaches with an exact Jacobian
    /// (2, 4, 6), as on systems where D1 loses nothing.
    pub fn full(self) -> Self {
        self.with_order(self.method.full_order())
    }

    pub fn with_order(self, rho: u32) -> Self {
        Self { rho, ..self }
    }

    pub fn order(&self) -> u32 {
        self.rho
    }

    /// Scalar evaluations per iteration, `a(m)`, for real `m`.
    pub fn evals(&self, m: &Float) -> Float {
        use DividedDifferenceKind::*;
        let prec = m.prec();
        let mm = Float::with_val(prec, m.square_ref());
        match (self.method, self.dd) {
            (MethodKind::Phi0, _) => mm + Float::with_val(prec, m * 2u32),
            (MethodKind::Phi1, D1) => (mm + m) * 2u32,
            (MethodKind::Phi1, D2) => mm * 4u32,
            (MethodKind::Phi2, D1) => mm * 2u32 + Float::with_val(prec, m * 3u32),
            (MethodKind::Phi2, D2) => mm * 4u32 + m,
        }
    }

    /// Products plus `l`-weighted quotients per iteration, `p(m, l)`.
    pub fn products(&self, m: &Float, ell: &Float) -> Float {
        let prec = m.prec();
        let mm = Float::with_val(prec, m.square_ref());
        // m (2m^2 + 3m - 5), m (2m^2 + 6m - 8), m (3m + 1), m (3m + 2)
        let cubic = |b: i32, c: i32| -> Float {
            let mut t = Float::with_val(prec, &mm * 2u32);
            t += Float::with_val(prec, m * b);
            t += c;
            t * m
        };
        let linear = |c: u32| -> Float {
            let t = Float::with_val(prec, m * 3u32) + c;
            t * m
        };
        match self.method {
            MethodKind::Phi0 => cubic(3, -5) / 6u32 + linear(1) * ell / 2u32,
            MethodKind::Phi1 => cubic(3, -5) / 3u32 + linear(1) * ell,
            MethodKind::Phi2 => cubic(6, -8) / 3u32 + linear(2) * ell,
        }
    }

    /// `C(mu, m, l)` for real `m`.
    pub fn cost_at(&self, m: &Float, mu: &Float, ell: &Float) -> Float {
        self.evals(m) * mu + self.products(m, ell)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            MethodKind::Phi0 => write!(f, "phi0"),
            _ => write!(f, "{}{}", self.method, self.dd),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CostModel {
    pub m: u32,
    pub mu: Float,
    pub ell: Float,
    pub variant: Variant,
}

impl CostModel {
    pub fn new(m: u32, mu: Float, ell: Float, method: MethodKind, dd: DividedDifferenceKind) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("cost model needs m >= 2, got {m}")));
        }
        if mu <= 0 {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        if ell < 1 {
            return Err(Error::InvalidArgument(format!("l must be >= 1, got {ell}")));
        }
        Ok(Self {
            m,
            mu,
            ell,
            variant: Variant::new(method, dd),
        })
    }

    /// Builds the model from decimal-intent doubles, e.g. `113.3`.
    pub fn from_f64(
        ctx: &PrecisionContext,
        m: u32,
        mu: f64,
        ell: f64,
        method: MethodKind,
        dd: DividedDifferenceKind,
    ) -> Result<Self> {
        Self::new(m, ctx.from_f64(mu), ctx.from_f64(ell), method, dd)
    }

    pub fn order(&self) -> u32 {
        self.variant.order()
    }

    pub fn cost(&self) -> Float {
        let m = Float::with_val(self.mu.prec(), self.m);
        self.variant.cost_at(&m, &self.mu, &self.ell)
    }

    pub fn cei(&self) -> Float {
        cei(self.order(), &self.cost())
    }

    /// Overrides the credited order, e.g. on a separable system.
    pub fn with_order(mut self, rho: u32) -> Self {
        self.variant = self.variant.with_order(rho);
        self
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }
}

pub fn cost(model: &CostModel) -> Float {
    model.cost()
}

/// `rho^(1/C)`.
pub fn cei(rho: u32, cost: &Float) -> Float {
    let prec = cost.prec();
    let exponent = Float::with_val(prec, cost.recip_ref());
    let base = Float::with_val(prec, rho);
    let lg = base.ln() * exponent;
    lg.exp()
}

/// `1 / log10(CEI)`.
pub fn time_factor(cei_value: &Float) -> Float {
    let prec = cei_value.prec();
    Float::with_val(prec, cei_value.log10_ref()).recip()
}

/// Decimals to which efficiency indices are published.
pub const CEI_DECIMALS: usize = 9;

/// Time factor of the efficiency index as published, i.e. rounded to
/// [`CEI_DECIMALS`] places first. The rounding shifts the second decimal of
/// the time factor for costs in the thousands.
pub fn published_time_factor(cei_value: &Float) -> Float {
    time_factor(&round_decimals(cei_value, CEI_DECIMALS))
}

/// `x` rounded to `decimals` places (half away from zero).
pub fn round_decimals(x: &Float, decimals: usize) -> Float {
    let prec = x.prec();
    let scale = Float::with_val(prec, Float::u_pow_u(10, decimals as u32));
    Float::with_val(prec, x * &scale).round() / scale
}

/// `R_{a,b} = log CEI_a / log CEI_b = ln(rho_a) C_b / (ln(rho_b) C_a)`.
pub fn ratio(a: &CostModel, b: &CostModel) -> Float {
    ratio_at(a.variant, b.variant, &Float::with_val(a.mu.prec(), a.m), &a.mu, &a.ell)
}

/// [`ratio`] at real `m`.
pub fn ratio_at(a: Variant, b: Variant, m: &Float, mu: &Float, ell: &Float) -> Float {
    let prec = mu.prec();
    let ln_a = Float::with_val(prec, a.order()).ln();
    let ln_b = Float::with_val(prec, b.order()).ln();
    (ln_a * b.cost_at(m, mu, ell)) / (ln_b * a.cost_at(m, mu, ell))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    FirstWins,
    SecondWins,
    Boundary,
}

/// `|R - 1|` at or below which two methods are declared equally efficient.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

pub fn classify_region(first: Variant, second: Variant, m: &Float, mu: &Float, ell: &Float) -> Region {
    let r = ratio_at(first, second, m, mu, ell);
    let dev = Float::with_val(r.prec(), &r - 1u32);
    if dev.clone().abs() <= BOUNDARY_TOLERANCE {
        Region::Boundary
    } else if dev > 0 {
        Region::FirstWins
    } else {
        Region::SecondWins
    }
}

/// Boundary curves `mu = G(m, l)` on which two variants have equal CEI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCurve {
    /// Phi2 with D2 against Phi0.
    G20,
    /// Phi2 with D2 against Phi2 with D1.
    G22,
    /// Phi1 with D2 against Phi1 with D1.
    G11,
}

impl BoundaryCurve {
    pub const ALL: [BoundaryCurve; 3] = [Self::G20, Self::G22, Self::G11];

    /// `(first, second)` such that `R_{first,second} = 1` on the curve and
    /// `R > 1` above it.
    pub fn pair(self) -> (Variant, Variant) {
        use DividedDifferenceKind::*;
        use MethodKind::*;
        match self {
            Self::G20 => (Variant::new(Phi2, D2), Variant::PHI0),
            Self::G22 => (Variant::new(Phi2, D2), Variant::new(Phi2, D1)),
            Self::G11 => (Variant::new(Phi1, D2), Variant::new(Phi1, D1)),
        }
    }

    /// Numerator and denominator of the curve; the denominator vanishes at
    /// the vertical asymptote.
    fn parts(self, m: &Float, ell: &Float) -> (Float, Float) {
        let prec = m.prec();
        let ln = |n: u32, d: u32| Float::with_val(prec, Float::with_val(prec, n) / d).ln();
        let mm = Float::with_val(prec, m.square_ref());
        match self {
            Self::G20 => {
                let (q, r) = (ln(3, 2), ln(8, 3));
                // (1/3) (2q m^2 + 3(3ql - r) m - 3rl - (2q - 3r)) / (2rm - (7q + 3r))
                let mut num = Float::with_val(prec, &q * 2u32) * &mm;
                let lin = (Float::with_val(prec, &q * ell) * 3u32 - &r) * 3u32;
                num += lin * m;
                num -= Float::with_val(prec, &r * ell) * 3u32;
                num -= Float::with_val(prec, &q * 2u32) - Float::with_val(prec, &r * 3u32);
                let den = Float::with_val(prec, &r * 2u32) * m
                    - (Float::with_val(prec, &q * 7u32) + Float::with_val(prec, &r * 3u32));
                (num / 3u32, den)
            }
            Self::G22 => {
                let (q, r) = (ln(3, 2), ln(8, 3));
                // (1/3) (2q m^2 + 3q(3l + 2) m + 6ql - 8q) / (2rm - (5q + 2r))
                let mut num = Float::with_val(prec, &q * 2u32) * &mm;
                num += Float::with_val(prec, &q * 3u32) * (Float::with_val(prec, ell * 3u32) + 2u32) * m;
                num += Float::with_val(prec, &q * ell) * 6u32;
                num -= Float::with_val(prec, &q * 8u32);
                let den = Float::with_val(prec, &r * 2u32) * m
                    - (Float::with_val(prec, &q * 5u32) + Float::with_val(prec, &r * 2u32));
                (num / 3u32, den)
            }
            Self::G11 => {
                let (s, t) = (ln(4, 3), ln(2, 1));
                // (1/12) (2s m^2 + 3s(3l + 1) m + 3sl - 5s) / ((t - s) m - t)
                let mut num = Float::with_val(prec, &s * 2u32) * &mm;
                num += Float::with_val(prec, &s * 3u32) * (Float::with_val(prec, ell * 3u32) + 1u32) * m;
                num += Float::with_val(prec, &s * ell) * 3u32;
                num -= Float::with_val(prec, &s * 5u32);
                let den = Float::with_val(prec, &t - &s) * m - &t;
                (num / 12u32, den)
            }
        }
    }

    /// Location of the vertical asymptote in `m`, from the closed forms.
    pub fn pole(self, prec: u32) -> Float {
        let ln = |n: u32, d: u32| Float::with_val(prec, Float::with_val(prec, n) / d).ln();
        match self {
            Self::G20 => {
                let (q, r) = (ln(3, 2), ln(8, 3));
                (q * 7u32 + Float::with_val(prec, &r * 3u32)) / (r * 2u32)
            }
            Self::G22 => {
                let (q, r) = (ln(3, 2), ln(8, 3));
                (q * 5u32 + Float::with_val(prec, &r * 2u32)) / (r * 2u32)
            }
            Self::G11 => {
                let (s, t) = (ln(4, 3), ln(2, 1));
                let d = Float::with_val(prec, &t - &s);
                t / d
            }
        }
    }
}

impl fmt::Display for BoundaryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::G20 => "g20",
            Self::G22 => "g22",
            Self::G11 => "g11",
        })
    }
}

impl FromStr for BoundaryCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g20" => Ok(Self::G20),
            "g22" => Ok(Self::G22),
            "g11" => Ok(Self::G11),
            _ => Err(Error::Unknown {
                what: "boundary curve",
                value: s.to_string(),
            }),
        }
    }
}

/// `mu` on the boundary `R = 1` of the named comparison.
pub fn boundary_g(which: BoundaryCurve, m: &Float, ell: &Float, ctx: &PrecisionContext) -> Result<Float> {
    let (num, den) = which.parts(m, ell);
    if den.cmp_abs(ctx.eps_machine()) == Some(std::cmp::Ordering::Less) {
        return Err(Error::PoleAtAsymptote {
            m: m.to_string_radix(10, Some(12)),
        });
    }
    Ok(num / den)
}

/// Coefficient of `mu` in `ln(rho_a) C_b - ln(rho_b) C_a`, divided by `m`.
/// Its zero in `m` is where the boundary `R_{a,b} = 1` has its vertical
/// asymptote.
pub fn mu_balance(a: Variant, b: Variant, m: &Float) -> Float {
    let prec = m.prec();
    let ln_a = Float::with_val(prec, a.order()).ln();
    let ln_b = Float::with_val(prec, b.order()).ln();
    (ln_a * b.evals(m) - ln_b * a.evals(m)) / m
}

/// Positive root of [`mu_balance`] in `(lo, hi)` by bisection, if the
/// balance changes sign there.
pub fn asymptote(a: Variant, b: Variant, lo: f64, hi: f64, ctx: &PrecisionContext) -> Option<Float> {
    let bits = ctx.bits();
    let mut lo = ctx.from_f64(lo);
    let mut hi = ctx.from_f64(hi);
    let f_lo = mu_balance(a, b, &lo);
    let f_hi = mu_balance(a, b, &hi);
    if f_lo.is_sign_negative() == f_hi.is_sign_negative() {
        return None;
    }
    let lo_negative = f_lo.is_sign_negative();
    for _ in 0..bits.min(400) {
        let mid = Float::with_val(bits, &lo + &hi) / 2u32;
        if mu_balance(a, b, &mid).is_sign_negative() == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(Float::with_val(bits, &lo + &hi) / 2u32)
}

/// Elementary operations with a tabulated cost in product units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ElementaryOp {
    Product,
    Quotient,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Arctan,
}

#[derive(Debug, Clone)]
pub struct ElementaryCostTable {
    costs: BTreeMap<ElementaryOp, f64>,
}

impl ElementaryCostTable {
    /// Costs measured with MPFR at 4096 digits.
    pub fn mpfr_4096() -> Self {
        use ElementaryOp::*;
        Self {
            costs: [
                (Product, 1.0),
                (Quotient, 2.5),
                (Sqrt, 1.7),
                (Exp, 87.8),
                (Ln, 66.0),
                (Sin, 116.0),
                (Cos, 113.0),
                (Arctan, 228.0),
            ]
            .into_iter()
            .collect(),
        }
    }

    pub fn cost(&self, op: ElementaryOp) -> f64 {
        self.costs[&op]
    }
}

impl Default for ElementaryCostTable {
    fn default() -> Self {
        Self::mpfr_4096()
    }
}

/// `mu = (sum count * cost) / m` over one full evaluation of `F`.
pub fn estimate_mu(profile: &[(ElementaryOp, u32)], table: &ElementaryCostTable, m: u32, ctx: &PrecisionContext) -> Float {
    let mut total = ctx.zero();
    for &(op, count) in profile {
        total += ctx.from_f64(table.cost(op)) * count;
    }
    total / m
}

/// Rounds `x` to `decimals` places and prints it in fixed notation.
pub fn format_fixed(x: &Float, decimals: usize) -> String {
    let prec = x.prec().max(64);
    let scale = Float::with_val(prec, Float::u_pow_u(10, decimals as u32));
    let scaled = Float::with_val(prec, x * &scale).round();
    let digits = scaled.to_integer().expect("finite value").to_string();
    let (neg, digits) = match digits.strip_prefix('-') {
        Some(d) => (true, d.to_string()),
        None => (false, digits),
    };
    let padded = format!("{digits:0>width$}", width = decimals + 1);
    let (int, frac) = padded.split_at(padded.len() - decimals);
    let sign = if neg { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Whether `x` agrees with the printed decimal `printed` to its last
/// place, i.e. `|x - printed| < 10^-decimals`. Accepts either rounding or
/// truncation of `x`.
pub fn agrees_to_printed(x: &Float, printed: &str) -> bool {
    let decimals = printed.split_once('.').map_or(0, |(_, f)| f.len());
    let prec = x.prec().max(64);
    let Ok(p) = Float::parse(printed) else {
        return false;
    };
    let diff = Float::with_val(prec, x - Float::with_val(prec, p)).abs();
    let unit = Float::with_val(prec, Float::u_pow_u(10, decimals as u32)).recip();
    diff < unit
}

#[cfg(test)]
mod tests {
    use super::*;
    use DividedDifferenceKind::*;
    use MethodKind::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(64).unwrap()
    }

    fn model(m: u32, mu: f64, method: MethodKind, dd: DividedDifferenceKind) -> CostModel {
        CostModel::from_f64(&ctx(), m, mu, 2.5, method, dd).unwrap()
    }

    #[test]
    fn cost_examples() {
        assert_eq!(format_fixed(&model(5, 87.8, Phi0, D1).cost(), 1), "3223.0");
        assert_eq!(format_fixed(&model(2, 1.5, Phi1, D2).cost(), 1), "65.0");
        assert_eq!(format_fixed(&model(3, 113.3, Phi2, D2).cost(), 1), "4529.2");
        // Phi0 ignores the operator kind.
        assert_eq!(model(3, 113.3, Phi0, D2).cost(), model(3, 113.3, Phi0, D1).cost());
    }

    #[test]
    fn cei_and_time_factor_examples() {
        let ctx = ctx();
        assert_eq!(format_fixed(&cei(2, &ctx.from_f64(32.5)), 9), "1.021556664");
        assert_eq!(format_fixed(&cei(6, &ctx.from_f64(6039.5)), 9), "1.000296717");
        let a = cei(2, &ctx.from_f64(1e3));
        let b = cei(2, &ctx.from_f64(1e6));
        assert!(a > b && b > 1);
        let c = cei(6, &ctx.from_f64(6039.5));
        assert_eq!(format_fixed(&time_factor(&c), 2), "7761.34");
        assert_eq!(format_fixed(&published_time_factor(&c), 2), "7761.36");
        assert_eq!(format_fixed(&time_factor(&cei(2, &ctx.from_f64(32.5))), 2), "107.96");
        assert_eq!(time_factor(&ctx.int(10)), 1);
    }

    #[test]
    fn ratio_examples() {
        let a = model(5, 87.8, Phi2, D1);
        assert_eq!(ratio(&a, &a), 1);
        assert!(ratio(&a, &model(5, 87.8, Phi1, D1)) > 1);
        let r = ratio(&model(2, 1.5, Phi1, D2), &model(2, 1.5, Phi0, D1));
        assert!(Float::with_val(64, &r - 1u32).abs() < 1e-50);
    }

    #[test]
    fn regions() {
        let ctx = ctx();
        let (m3, mu, ell) = (ctx.int(3), ctx.from_f64(113.3), ctx.from_f64(2.5));
        assert_eq!(
            classify_region(Variant::new(Phi2, D1), Variant::PHI0, &m3, &mu, &ell),
            Region::FirstWins
        );
        for mu in [0.1, 7.0, 300.0] {
            assert_eq!(
                classify_region(Variant::new(Phi1, D2), Variant::PHI0, &ctx.int(2), &ctx.from_f64(mu), &ell),
                Region::Boundary
            );
        }
    }

    #[test]
    fn poles() {
        let ctx = ctx();
        // 2.94686.. and 2.03348.. are printed truncated.
        assert_eq!(format_fixed(&BoundaryCurve::G20.pole(ctx.bits()), 4), "2.9469");
        assert!(agrees_to_printed(&BoundaryCurve::G20.pole(ctx.bits()), "2.9468"));
        assert!(agrees_to_printed(&BoundaryCurve::G22.pole(ctx.bits()), "2.0334"));
        assert!(agrees_to_printed(&BoundaryCurve::G11.pole(ctx.bits()), "1.7095"));
        assert!(!agrees_to_printed(&BoundaryCurve::G11.pole(ctx.bits()), "1.7097"));
        let at_pole = BoundaryCurve::G11.pole(ctx.bits());
        assert!(matches!(
            boundary_g(BoundaryCurve::G11, &at_pole, &ctx.from_f64(2.5), &ctx),
            Err(Error::PoleAtAsymptote { .. })
        ));
    }

    #[test]
    fn curves_are_ratio_level_sets() {
        let ctx = ctx();
        let ell = ctx.from_f64(2.5);
        for curve in BoundaryCurve::ALL {
            let (a, b) = curve.pair();
            for m in [3.5, 5.0, 12.0] {
                let m = ctx.from_f64(m);
                let mu = boundary_g(curve, &m, &ell, &ctx).unwrap();
                let r = ratio_at(a, b, &m, &mu, &ell);
                assert!(Float::with_val(64, &r - 1u32).abs() < 1e-40, "{curve}");
            }
        }
    }

    #[test]
    fn mu_estimates() {
        use ElementaryOp::*;
        let ctx = ctx();
        let t = ElementaryCostTable::default();
        assert_eq!(estimate_mu(&[(Product, 3)], &t, 2, &ctx), ctx.from_f64(1.5));
        assert_eq!(format_fixed(&estimate_mu(&[(Exp, 5)], &t, 5, &ctx), 1), "87.8");
        assert_eq!(estimate_mu(&[(Product, 4)], &t, 4, &ctx), 1);
        assert_eq!(estimate_mu(&[(Cos, 3), (Product, 3)], &t, 3, &ctx), 114);
    }

    #[test]
    fn model_validation() {
        let ctx = ctx();
        assert!(CostModel::from_f64(&ctx, 1, 1.0, 2.5, Phi0, D1).is_err());
        assert!(CostModel::from_f64(&ctx, 2, 0.0, 2.5, Phi0, D1).is_err());
        assert!(CostModel::from_f64(&ctx, 2, 1.0, 0.5, Phi0, D1).is_err());
    }

    #[test]
    fn fixed_formatting() {
        let ctx = ctx();
        assert_eq!(format_fixed(&ctx.from_f64(0.00449), 2), "0.00");
        assert_eq!(format_fixed(&ctx.from_f64(-1.25), 1), "-1.3");
        assert_eq!(format_fixed(&ctx.from_f64(96.375), 0), "96");
        assert_eq!(format_fixed(&ctx.from_f64(0.05), 3), "0.050");
    }
}
