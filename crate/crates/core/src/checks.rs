//! Invariant suites run by the command-line `check` subcommand.

use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::Float;
use serde::Serialize;

use crate::bench::{efficiency_columns, RunConfig};
use crate::divdiff::{check_potra, check_secant, check_symmetry, divided_difference, DividedDifferenceKind, PointOrder};
use crate::efficiency::{self, classify_region, format_fixed, agrees_to_printed, BoundaryCurve, Region, Variant};
use crate::error::{Error, Result};
use crate::linalg::{OpCounters, Vector};
use crate::methods::{expected_iteration_counts, iterate, solve_with, MethodKind, SolverOptions};
use crate::precision::PrecisionContext;
use crate::problems::{registry, ProblemSpec};
use crate::quadrature::integral_dd_oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    Operators,
    Counters,
    Tables,
    Theorems,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Self::Operators, Self::Counters, Self::Tables, Self::Theorems];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Operators => "operators",
            Self::Counters => "counters",
            Self::Tables => "tables",
            Self::Theorems => "theorems",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|suite| suite.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Unknown {
                what: "check suite",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Precision of the table solves.
    pub digits: u32,
    /// Precision of the operator checks.
    pub operator_digits: u32,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            digits: crate::precision::DEFAULT_DIGITS,
            operator_digits: 256,
            pairs: 100,
            seed: 0x5eed,
        }
    }
}

struct Recorder {
    suite: Suite,
    out: Vec<CheckOutcome>,
}

impl Recorder {
    fn new(suite: Suite) -> Self {
        Self { suite, out: Vec::new() }
    }

    fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.out.push(CheckOutcome {
            suite: self.suite,
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

pub fn run_suite(suite: Suite, config: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    match suite {
        Suite::Operators => operators(config),
        Suite::Counters => counters(),
        Suite::Tables => tables(config),
        Suite::Theorems => theorems(),
    }
}

fn sci(x: &Float) -> String {
    x.to_string_radix(10, Some(4))
}

fn jitter(base: &Vector, rng: &mut StdRng, ctx: &PrecisionContext) -> Vector {
    let v: Vec<f64> = base.to_f64().into_iter().map(|b| b + rng.gen_range(-0.3..0.3)).collect();
    Vector::from_f64(ctx, &v)
}

fn operators(config: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let ctx = PrecisionContext::new(config.operator_digits)?;
    let tol = ctx.check_tolerance().clone();
    let mut rec = Recorder::new(Suite::Operators);
    let mut rng = StdRng::seed_from_u64(config.seed);
    for spec in registry() {
        let sys = spec.system.as_ref();
        let base = spec.x0(&ctx);
        let mut worst_secant = [ctx.zero(), ctx.zero()];
        let mut worst_symmetry = ctx.zero();
        for _ in 0..config.pairs {
            let x = jitter(&base, &mut rng, &ctx);
            let y = jitter(&base, &mut rng, &ctx);
            for (k, kind) in DividedDifferenceKind::ALL.into_iter().enumerate() {
                let op = divided_difference(kind, sys, &y, &x, None, &ctx, &mut OpCounters::new())?;
                worst_secant[k].max_mut(&check_secant(&op, sys, &y, &x));
            }
            worst_symmetry.max_mut(&check_symmetry(sys, &y, &x, DividedDifferenceKind::D2, &ctx)?);
        }
        for (k, kind) in DividedDifferenceKind::ALL.into_iter().enumerate() {
            rec.record(
                format!("{} secant {kind}", spec.id),
                worst_secant[k] <= tol,
                format!("max residual {} over {} pairs", sci(&worst_secant[k]), config.pairs),
            );
        }
        rec.record(
            format!("{} symmetry d2", spec.id),
            worst_symmetry <= tol,
            format!("max residual {}", sci(&worst_symmetry)),
        );
    }

    let quad = crate::problems::quad2();
    let v = |a: f64, b: f64| Vector::from_f64(&ctx, &[a, b]);
    let asym = check_symmetry(&quad, &v(2.0, 2.0), &v(1.0, 1.0), DividedDifferenceKind::D1, &ctx)?;
    rec.record("quad2 d1 asymmetry", asym > 0, format!("||[y,x] - [x,y]|| = {}", sci(&asym)));
    let potra1 = check_potra(&quad, DividedDifferenceKind::D1, &v(1.0, 0.0), &v(0.0, 1.0), &ctx)?;
    let dev = Float::with_val(ctx.bits(), &potra1 - 2u32).abs();
    rec.record("quad2 d1 potra residual is 2", dev <= tol, format!("residual {}", sci(&potra1)));
    let potra2 = check_potra(&quad, DividedDifferenceKind::D2, &v(1.0, 0.0), &v(0.0, 1.0), &ctx)?;
    rec.record("quad2 d2 potra residual vanishes", potra2 <= tol, format!("residual {}", sci(&potra2)));

    // Accuracy orders against the integral form, y = x + h, h halved.
    let cos = crate::problems::cos3();
    let x = Vector::from_f64(&ctx, &[0.4, 0.4, 0.9]);
    let dir = Vector::from_f64(&ctx, &[1.0, -0.7, 0.4]);
    for (kind, lo, hi) in [(DividedDifferenceKind::D1, 1.7, 2.3), (DividedDifferenceKind::D2, 3.4, 4.6)] {
        let mut errors = Vec::new();
        let mut scale = ctx.pow10(-3);
        for _ in 0..4 {
            let y = x.add(&dir.scaled(&scale));
            let op = divided_difference(kind, &cos, &y, &x, None, &ctx, &mut OpCounters::new())?;
            let oracle = integral_dd_oracle(&cos, &y, &x, 24, &ctx);
            errors.push(op.sub(&oracle).norm_inf());
            scale /= 2u32;
        }
        let ratios: Vec<f64> = errors.windows(2).map(|w| Float::with_val(64, &w[0] / &w[1]).to_f64()).collect();
        let ok = ratios.iter().all(|r| (lo..=hi).contains(r));
        rec.record(format!("cos3 {kind} accuracy order"), ok, format!("halving ratios {ratios:.4?}"));
    }
    Ok(rec.out)
}

fn counters() -> Result<Vec<CheckOutcome>> {
    let ctx = PrecisionContext::new(64)?;
    let mut rec = Recorder::new(Suite::Counters);
    for spec in registry() {
        let m = spec.m() as u64;
        for method in MethodKind::ALL {
            for dd in DividedDifferenceKind::ALL {
                for order in [PointOrder::Written, PointOrder::Swapped] {
                    let mut c = OpCounters::new();
                    iterate(spec.system.as_ref(), &spec.x0(&ctx), method, dd, order, &ctx, &mut c)?;
                    let want = expected_iteration_counts(method, dd, m);
                    rec.record(
                        format!("{} {method}{dd} {order}", spec.id),
                        c == want,
                        format!("measured {c:?}, formula {want:?}"),
                    );
                }
            }
        }
    }
    Ok(rec.out)
}

fn table_rows(spec: &ProblemSpec, digits: u32, rec: &mut Recorder) -> Result<()> {
    let ctx = PrecisionContext::new(digits)?;
    let config = RunConfig::default();
    for row in spec.published {
        let label = format!("{} {}", spec.id, Variant::new(row.method, row.dd));
        let (_, cost, cei, tf) = efficiency_columns(spec, row.method, row.dd, &config)?;
        let printed = (format_fixed(&cost, 1), format_fixed(&cei, 9), format_fixed(&tf, 2));
        rec.record(
            format!("{label} C/CEI/TF"),
            printed == (row.cost.into(), row.cei.into(), row.time_factor.into()),
            format!("{printed:?}"),
        );

        let opts = SolverOptions {
            order: Some(row.order),
            ..SolverOptions::default()
        };
        let report = solve_with(spec.system.as_ref(), &spec.x0(&ctx), row.method, row.dd, &ctx, &opts)?;
        let i_ok = report.iterations.abs_diff(row.iterations) <= 1;
        rec.record(
            format!("{label} I"),
            i_ok,
            format!("I = {} (published {})", report.iterations, row.iterations),
        );
        let acoc = report.acoc.as_ref().map(|a| a.acoc.to_f64());
        let acoc_ok = acoc.is_some_and(|a| (a - f64::from(row.order)).abs() <= 1e-3);
        rec.record(format!("{label} acoc"), acoc_ok, format!("{acoc:?} vs {}", row.order));
        if digits >= 4096 {
            let q = report.estimated_decimals(&ctx)?;
            let q_ok = (f64::from(q) - f64::from(row.q)).abs() <= 0.1 * f64::from(row.q);
            rec.record(format!("{label} q"), q_ok, format!("q = {q} (published {})", row.q));
        }
    }
    Ok(())
}

fn tables(config: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    let mut rec = Recorder::new(Suite::Tables);
    for spec in registry() {
        table_rows(&spec, config.digits, &mut rec)?;
    }
    Ok(rec.out)
}

fn cei_of(v: Variant, m: &Float, mu: &Float, ell: &Float) -> Float {
    efficiency::cei(v.order(), &v.cost_at(m, mu, ell))
}

fn theorems() -> Result<Vec<CheckOutcome>> {
    use DividedDifferenceKind::{D1, D2};
    use MethodKind::{Phi1, Phi2};
    let ctx = PrecisionContext::new(64)?;
    let mut rec = Recorder::new(Suite::Theorems);

    let phi0 = Variant::PHI0;
    let (p1d1, p2d1) = (Variant::new(Phi1, D1), Variant::new(Phi2, D1));
    let (p1d2, p2d2) = (Variant::new(Phi1, D2), Variant::new(Phi2, D2));
    let mut violations = [0usize; 3];
    let mut points = 0usize;
    for m in 2..=50u32 {
        let mf = ctx.int(i64::from(m));
        for mu in [0.1, 1.0, 10.0, 100.0, 200.0] {
            let mu = ctx.from_f64(mu);
            for ell in [1.0, 2.5, 5.0] {
                let ell = ctx.from_f64(ell);
                points += 1;
                // Orders 2, 4, 6 with D1 costs.
                let (c0, c1, c2) = (
                    cei_of(phi0, &mf, &mu, &ell),
                    cei_of(p1d1.full(), &mf, &mu, &ell),
                    cei_of(p2d1.full(), &mf, &mu, &ell),
                );
                if !(c2 > c1 && c1 > c0) {
                    violations[0] += 1;
                }
                if cei_of(p2d2, &mf, &mu, &ell) <= cei_of(p1d2, &mf, &mu, &ell) {
                    violations[1] += 1;
                }
                let r = classify_region(p1d2, phi0, &mf, &mu, &ell);
                let expected = if m == 2 { Region::Boundary } else { Region::SecondWins };
                let d2_vs_d1 = m != 2 || classify_region(p2d2, p2d1, &mf, &mu, &ell) == Region::FirstWins;
                if r != expected || !d2_vs_d1 {
                    violations[2] += 1;
                }
            }
        }
    }
    let names = [
        "CEI2 > CEI1 > CEI0 (D1 costs, orders 2/4/6)",
        "CEI2(2) > CEI1(2)",
        "CEI0 = CEI1(2) at m = 2, CEI0 > CEI1(2) for m > 2, CEI2(2) > CEI2(1) at m = 2",
    ];
    for (name, v) in names.iter().zip(violations) {
        rec.record(*name, v == 0, format!("{v} violations over {points} grid points"));
    }

    let bits = ctx.bits();
    for (curve, want) in [
        (BoundaryCurve::G20, "2.9468"),
        (BoundaryCurve::G22, "2.0334"),
        (BoundaryCurve::G11, "1.7095"),
    ] {
        let (a, b) = curve.pair();
        let root = efficiency::asymptote(a, b, 0.5, 10.0, &ctx);
        let closed = curve.pole(bits);
        let ok = root.as_ref().is_some_and(|r| agrees_to_printed(r, want)) && agrees_to_printed(&closed, want);
        rec.record(
            format!("{curve} asymptote"),
            ok,
            format!("root {:?}, closed form {}", root.map(|r| format_fixed(&r, 6)), format_fixed(&closed, 6)),
        );
    }
    for (a, b, want) in [(p2d1.full(), p1d1.full(), "0.7095"), (p2d2, p1d2, "0.8548")] {
        let root = efficiency::asymptote(a, b, 0.1, 10.0, &ctx);
        let ok = root.as_ref().is_some_and(|r| agrees_to_printed(r, want));
        rec.record(
            format!("{a} vs {b} asymptote"),
            ok,
            format!("{:?} vs {want}", root.map(|r| format_fixed(&r, 6))),
        );
    }

    let mut boundary_ok = true;
    for curve in BoundaryCurve::ALL {
        let (a, b) = curve.pair();
        for m in [3.5, 6.0, 20.0] {
            let m = ctx.from_f64(m);
            let ell = ctx.from_f64(2.5);
            let g = efficiency::boundary_g(curve, &m, &ell, &ctx)?;
            let delta = ctx.from_f64(1e-3);
            let above = classify_region(a, b, &m, &Float::with_val(bits, &g + &delta), &ell);
            let below = classify_region(a, b, &m, &Float::with_val(bits, &g - &delta), &ell);
            let r = efficiency::ratio_at(a, b, &m, &g, &ell);
            boundary_ok &= above != below && Float::with_val(bits, &r - 1u32).abs() < 1e-9;
        }
    }
    rec.record("boundary curves separate the regions", boundary_ok, "");

    // The orderings stated for the two worked cases.
    let at = |m: u32, mu: f64, v: Variant| cei_of(v, &ctx.int(i64::from(m)), &ctx.from_f64(mu), &ctx.from_f64(2.5));
    let (a, b, c, d, e) = (
        at(2, 1.5, p2d2),
        at(2, 1.5, p1d2),
        at(2, 1.5, phi0),
        at(2, 1.5, p1d1),
        at(2, 1.5, p2d1),
    );
    let equal = Float::with_val(bits, &b - &c).abs() <= *ctx.eps_machine();
    rec.record(
        "(2, 1.5, 2.5): CEI2(2) > CEI1(2) = CEI0 > CEI1(1), CEI2(2) > CEI2(1)",
        a > b && equal && c > d && a > e,
        "",
    );
    let (a, b, c, d, e) = (
        at(3, 113.3, p2d1),
        at(3, 113.3, phi0),
        at(3, 113.3, p2d2),
        at(3, 113.3, p1d2),
        at(3, 113.3, p1d1),
    );
    rec.record(
        "(3, 113.3, 2.5): CEI2(1) > CEI0 > CEI2(2) > CEI1(2), CEI1(1) > CEI1(2)",
        a > b && b > c && c > d && e > d,
        "",
    );
    Ok(rec.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_pass(out: &[CheckOutcome]) {
        for o in out {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }

    #[test]
    fn suite_names() {
        for s in Suite::ALL {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        all_pass(&run_suite(Suite::Counters, &CheckConfig::default()).unwrap());
        all_pass(&run_suite(Suite::Theorems, &CheckConfig::default()).unwrap());
    }

    #[test]
    fn operator_suite_passes() {
        let config = CheckConfig {
            operator_digits: 128,
            pairs: 10,
            ..CheckConfig::default()
        };
        all_pass(&run_suite(Suite::Operators, &config).unwrap());
    }
}
