//! Property tests over random inputs for the linear algebra, the operators
//! and the cost model.

use proptest::prelude::*;
use rug::Float;

use ddroot::divdiff::{check_secant, check_symmetry, divided_difference, DividedDifferenceKind};
use ddroot::efficiency::Variant;
use ddroot::linalg::{inf_norm, lu_factor, lu_solve};
use ddroot::methods::MethodKind;
use ddroot::problems::{problem, ProblemId};
use ddroot::quadrature::integral_dd_oracle;
use ddroot::{Matrix, OpCounters, PrecisionContext, Vector};

const DIGITS: u32 = 128;

fn ctx() -> PrecisionContext {
    PrecisionContext::new(DIGITS).unwrap()
}

fn f(ctx: &PrecisionContext, v: f64) -> Float {
    Float::with_val(ctx.bits(), v)
}

/// Random point near the start of a registered problem.
fn near_start(id: ProblemId, offsets: &[f64], ctx: &PrecisionContext) -> Vector {
    let base = problem(id).x0(ctx);
    Vector::from_entries(base.iter().zip(offsets).map(|(x, d)| Float::with_val(ctx.bits(), x + *d)).collect())
}

fn problem_ids() -> impl Strategy<Value = ProblemId> {
    prop::sample::select(ProblemId::ALL.to_vec())
}

fn offsets() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-0.3f64..0.3, 5), prop::collection::vec(-0.3f64..0.3, 5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lu_solves_and_counts_exactly(
        m in 1usize..7,
        entries in prop::collection::vec(-1.0f64..1.0, 49),
        rhs in prop::collection::vec(-100.0f64..100.0, 7),
    ) {
        let ctx = ctx();
        // Diagonal dominance keeps the matrix nonsingular.
        let rows: Vec<Vec<Float>> = (0..m)
            .map(|i| (0..m).map(|j| {
                let v = entries[i * 7 + j];
                f(&ctx, if i == j { v + 2.0 * m as f64 } else { v })
            }).collect())
            .collect();
        let a = Matrix::from_rows(rows);
        let b = Vector::from_f64(&ctx, &rhs[..m]);
        let mut c = OpCounters::new();
        let fact = lu_factor(&a, ctx.eps_machine(), &mut c);
        let x = lu_solve(&fact, &b, &mut c).unwrap();
        let residual = inf_norm(&(&a.mul_vec(&x) - &b));
        let scale = inf_norm(&b).max(&f(&ctx, 1.0));
        prop_assert!(residual <= Float::with_val(ctx.bits(), ctx.check_tolerance() * &scale));
        let m = m as u64;
        prop_assert_eq!(c.products, m * (m - 1) * (2 * m - 1) / 6 + m * (m - 1));
        prop_assert_eq!(c.quotients, m * (m - 1) / 2 + m);
    }

    #[test]
    fn inf_norm_is_absolutely_homogeneous(v in prop::collection::vec(-1e3f64..1e3, 1..8), c in -50.0f64..50.0) {
        let ctx = ctx();
        let x = Vector::from_f64(&ctx, &v);
        let lhs = inf_norm(&x.scaled(&f(&ctx, c)));
        let rhs = Float::with_val(ctx.bits(), inf_norm(&x) * c.abs());
        let dev = Float::with_val(ctx.bits(), &lhs - &rhs).abs();
        prop_assert!(dev <= Float::with_val(ctx.bits(), ctx.check_tolerance() * &rhs.max(&f(&ctx, 1.0))));
        let zero = inf_norm(&Vector::zeros(&ctx, v.len()));
        prop_assert!(zero.is_zero());
        prop_assert_eq!(lhs.is_zero(), c == 0.0 || v.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn secant_identity_holds(id in problem_ids(), (dx, dy) in offsets()) {
        let ctx = ctx();
        let spec = problem(id);
        let sys = spec.system.as_ref();
        let (x, y) = (near_start(id, &dx, &ctx), near_start(id, &dy, &ctx));
        prop_assume!(x.iter().zip(y.iter()).all(|(a, b)| a != b));
        let df = inf_norm(&(&sys.eval(&y, &mut OpCounters::new()) - &sys.eval(&x, &mut OpCounters::new())));
        let tol = Float::with_val(ctx.bits(), ctx.check_tolerance() * &df.max(&f(&ctx, 1.0)));
        for kind in DividedDifferenceKind::ALL {
            let op = divided_difference(kind, sys, &y, &x, None, &ctx, &mut OpCounters::new()).unwrap();
            prop_assert!(check_secant(&op, sys, &y, &x) <= tol, "{id} {kind}");
        }
    }

    #[test]
    fn central_operator_is_symmetric(id in problem_ids(), (dx, dy) in offsets()) {
        let ctx = ctx();
        let spec = problem(id);
        let (x, y) = (near_start(id, &dx, &ctx), near_start(id, &dy, &ctx));
        prop_assume!(x.iter().zip(y.iter()).all(|(a, b)| a != b));
        let asym = check_symmetry(spec.system.as_ref(), &y, &x, DividedDifferenceKind::D2, &ctx).unwrap();
        prop_assert!(asym <= *ctx.check_tolerance());
    }

    #[test]
    fn central_operator_is_exact_on_quadratics((dx, dy) in offsets()) {
        let ctx = ctx();
        let spec = problem(ProblemId::Quad2);
        let sys = spec.system.as_ref();
        let (x, y) = (near_start(ProblemId::Quad2, &dx, &ctx), near_start(ProblemId::Quad2, &dy, &ctx));
        prop_assume!(x.iter().zip(y.iter()).all(|(a, b)| a != b));
        let op = divided_difference(DividedDifferenceKind::D2, sys, &y, &x, None, &ctx, &mut OpCounters::new()).unwrap();
        let oracle = integral_dd_oracle(sys, &y, &x, 8, &ctx);
        prop_assert!(op.sub(&oracle).norm_inf() <= ctx.oracle_tolerance());
    }

    #[test]
    fn third_step_costs_m_mu_plus_m_m_minus_1_plus_l_m(m in 2u32..60, mu in 0.01f64..500.0, ell in 1.0f64..10.0) {
        let ctx = PrecisionContext::new(64).unwrap();
        let (mf, muf, lf) = (ctx.int(i64::from(m)), ctx.from_f64(mu), ctx.from_f64(ell));
        let m = f64::from(m);
        let want = m * mu + m * (m - 1.0) + ell * m;
        for dd in DividedDifferenceKind::ALL {
            let c2 = Variant::new(MethodKind::Phi2, dd).cost_at(&mf, &muf, &lf);
            let c1 = Variant::new(MethodKind::Phi1, dd).cost_at(&mf, &muf, &lf);
            let diff = Float::with_val(64, &c2 - &c1).to_f64();
            prop_assert!((diff - want).abs() <= 1e-9 * want, "{dd}: {diff} vs {want}");
        }
    }
}
