//! Root-free order estimation and accuracy against a reference root.

use rug::Float;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, Vector};
use crate::methods::IterationTrace;
use crate::precision::PrecisionContext;

/// `rho_hat = ln E_I / ln E_{I-1}`.
#[derive(Debug, Clone)]
pub struct OrderEstimate {
    pub acoc: Float,
    /// `(I - 1, I)`, 1-based iteration numbers of the ratios used.
    pub indices: (usize, usize),
    /// `|rho_hat(I) - rho_hat(I - 1)|` when a third ratio is available. An
    /// informal stability indicator, not an error bound.
    pub spread: Option<Float>,
}

fn contracting(index: usize, e: &Float) -> Result<()> {
    if *e > 0 && *e < 1 {
        Ok(())
    } else {
        Err(Error::NonContractingTrace {
            index,
            value: e.to_string_radix(10, Some(10)),
        })
    }
}

fn log_ratio(newer: &Float, older: &Float) -> Float {
    let prec = newer.prec();
    Float::with_val(prec, newer.ln_ref()) / Float::with_val(prec, older.ln_ref())
}

/// Order estimate from the last two defined ratios of `trace`.
pub fn acoc(trace: &IterationTrace) -> Result<OrderEstimate> {
    acoc_from_ratios(&trace.defined_ratios())
}

/// As [`acoc`], from ratios `E_2, E_3, ...`.
pub fn acoc_from_ratios(ratios: &[Float]) -> Result<OrderEstimate> {
    let n = ratios.len();
    if n < 2 {
        return Err(Error::InsufficientTrace { ratios: n });
    }
    // ratios[k] is E_{k+2}
    let last = n + 1;
    contracting(last, &ratios[n - 1])?;
    contracting(last - 1, &ratios[n - 2])?;
    let acoc = log_ratio(&ratios[n - 1], &ratios[n - 2]);
    let spread = if n >= 3 && contracting(last - 2, &ratios[n - 3]).is_ok() {
        let previous = log_ratio(&ratios[n - 2], &ratios[n - 3]);
        Some(Float::with_val(acoc.prec(), &acoc - &previous).abs())
    } else {
        None
    };
    Ok(OrderEstimate {
        acoc,
        indices: (last - 1, last),
        spread,
    })
}

/// Digit threshold of the ratio test, `(rho - 1) / rho^2 * digits`.
pub fn eta(rho: f64, digits: u32) -> f64 {
    (rho - 1.0) / (rho * rho) * f64::from(digits)
}

/// `0.5 * 10^(-eta)` at working precision, with `eta` formed exactly as a
/// rational in `rho` and the digit count.
pub fn ratio_threshold(rho: u32, ctx: &PrecisionContext) -> Float {
    let bits = ctx.bits();
    let mut eta = Float::with_val(bits, u64::from(ctx.digits()) * u64::from(rho - 1));
    eta /= u64::from(rho) * u64::from(rho);
    let neg = Float::with_val(bits, -eta);
    ctx.pow10_real(&neg) / 2u32
}

/// `floor(-log10 ||x - alpha||_inf)`, clamped to `[0, digits]`.
pub fn correct_decimals(x: &Vector, alpha: Option<&Vector>, ctx: &PrecisionContext) -> Result<u32> {
    let alpha = alpha.ok_or(Error::MissingReferenceRoot)?;
    let err = inf_norm(&(x - &alpha.with_prec(x.prec())));
    if err.is_zero() {
        return Ok(ctx.digits());
    }
    let lg = Float::with_val(64, err.log10_ref()).to_f64();
    let q = (-lg).floor();
    Ok(q.clamp(0.0, f64::from(ctx.digits())) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(200).unwrap()
    }

    #[test]
    fn geometric_doubling() {
        let ctx = ctx();
        let est = acoc_from_ratios(&[ctx.pow10(-2), ctx.pow10(-4), ctx.pow10(-8)]).unwrap();
        let err = Float::with_val(ctx.bits(), &est.acoc - 2u32).abs();
        assert!(err < ctx.pow10(-150));
        assert_eq!(est.indices, (3, 4));
        assert!(est.spread.unwrap() < ctx.pow10(-150));
    }

    #[test]
    fn short_or_growing_traces() {
        let ctx = ctx();
        assert_eq!(
            acoc_from_ratios(&[ctx.pow10(-3)]).unwrap_err(),
            Error::InsufficientTrace { ratios: 1 }
        );
        assert!(matches!(
            acoc_from_ratios(&[ctx.int(2), ctx.pow10(-3)]),
            Err(Error::NonContractingTrace { index: 2, .. })
        ));
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(2.0, 4096), 1024.0);
        assert_eq!(eta(4.0, 4096), 768.0);
        assert!((eta(6.0, 4096) - 5120.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_is_half_decimal_power() {
        let ctx = PrecisionContext::new(4096).unwrap();
        let t = ratio_threshold(2, &ctx);
        let want = ctx.pow10(-1024) / 2u32;
        let rel = (Float::with_val(ctx.bits(), &t - &want) / &want).abs();
        assert!(rel < ctx.pow10(-4000));
    }

    #[test]
    fn correct_decimal_examples() {
        let ctx = ctx();
        let alpha = Vector::from_f64(&ctx, &[1.0, 2.0]);
        assert_eq!(correct_decimals(&alpha, Some(&alpha), &ctx).unwrap(), 200);
        let mut x = alpha.clone();
        x[1] += ctx.pow10(-100);
        assert_eq!(correct_decimals(&x, Some(&alpha), &ctx).unwrap(), 100);
        let far = Vector::from_f64(&ctx, &[40.0, 2.0]);
        assert_eq!(correct_decimals(&far, Some(&alpha), &ctx).unwrap(), 0);
        assert_eq!(correct_decimals(&x, None, &ctx).unwrap_err(), Error::MissingReferenceRoot);
    }

    /// Norms `e_{k+1} = e_k^p` built exactly from the exponents.
    fn synthetic_ratios(ctx: &PrecisionContext, p: u32, e0_exp: i64, n: usize) -> Vec<Float> {
        let mut exps = vec![e0_exp];
        for _ in 1..n {
            exps.push(exps.last().unwrap() * i64::from(p));
        }
        exps.windows(2).map(|w| ctx.pow10(w[1] - w[0])).collect()
    }

    #[test]
    fn synthetic_powers_recover_the_order() {
        let ctx = PrecisionContext::new(4096).unwrap();
        for p in [2u32, 3, 4, 6] {
            let ratios = synthetic_ratios(&ctx, p, -1, 5);
            let est = acoc_from_ratios(&ratios).unwrap();
            let err = Float::with_val(64, &est.acoc - p).abs().to_f64();
            assert!(err < 1e-6, "p = {p}: {err}");
        }
    }

    proptest! {
        #[test]
        fn acoc_is_scale_free(a in 1.0f64..50.0, b in 1.0f64..50.0, c in -20.0f64..20.0) {
            let ctx = PrecisionContext::new(64).unwrap();
            // Three correction norms 10^-a, 10^-(a+b), 10^-(a+b+2b), then scaled by 10^c.
            let factor = ctx.pow10_real(&ctx.from_f64(c));
            let norms: Vec<Float> = [-a, -(a + b), -(a + 3.0 * b)]
                .iter()
                .map(|e| ctx.pow10_real(&ctx.from_f64(*e)) * &factor)
                .collect();
            let plain: Vec<Float> = [-a, -(a + b), -(a + 3.0 * b)]
                .iter()
                .map(|e| ctx.pow10_real(&ctx.from_f64(*e)))
                .collect();
            let r = |n: &[Float]| -> Vec<Float> { n.windows(2).map(|w| Float::with_val(ctx.bits(), &w[1] / &w[0])).collect() };
            let scaled = acoc_from_ratios(&r(&norms)).unwrap().acoc;
            let base = acoc_from_ratios(&r(&plain)).unwrap().acoc;
            let diff = Float::with_val(ctx.bits(), &scaled - &base).abs();
            prop_assert!(diff < ctx.pow10(-40));
        }
    }
}
