//! Automatic gain control: the relay adjusts its power gain `g` so the output
//! power stays at the nominal level even while part of the output couples back
//! into the input.
//!
//! In normalized units the condition reduces to a polynomial equation in the
//! single unknown `x = alpha * g`:
//!
//! ```text
//! sum_{k=1}^{K+1} (1 - k (1 - rho)) x^k = rho * LG
//! ```
//!
//! All coefficients are strictly positive for rho < 1, so the left side is
//! monotonically increasing on [0, inf) and the equation has exactly one
//! non-negative root.

use crate::error::{Error, Result};
use crate::scenario::{derive_grid, validate_rho, Rational, Scenario};
use num_traits::ToPrimitive;

const MAX_BISECTION_STEPS: usize = 200;
const REL_TOL: f64 = 1e-13;

/// Solved gain-control operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgcSolution {
    /// Normalized loop gain `alpha * g` (the unique non-negative root).
    pub alpha_g: f64,
    /// Effective per-subcarrier SNR `mu = alpha_g * snr / (rho * LG)`
    /// (equals `snr / rho` when the loop gain is zero).
    pub mu: f64,
    /// Final polynomial residual at the returned root.
    pub residual: f64,
}

/// Solve the gain-control equation for a bandwidth ratio, loop gain and
/// reference SNR.
///
/// rho = 1 is handled in closed form (`alpha_g = LG / (1 + LG)`), as is the
/// degenerate no-coupling case `lg = 0`. The echo count entering the
/// polynomial degree is derived from `rho`, which keeps it consistent with
/// the subcarrier grid by construction.
pub fn solve_agc(rho: Rational, lg: f64, snr: f64) -> Result<AgcSolution> {
    validate_rho(rho)?;
    if !lg.is_finite() || lg < 0.0 {
        return Err(Error::InvalidLoopGain(lg));
    }
    if !snr.is_finite() || snr <= 0.0 {
        return Err(Error::InvalidSnr(snr));
    }
    let rho_f = rho.to_f64().expect("rho fits in f64");

    if rho == Rational::from_integer(1) {
        let alpha_g = lg / (1.0 + lg);
        return Ok(AgcSolution {
            alpha_g,
            mu: snr / (1.0 + lg),
            residual: 0.0,
        });
    }
    if lg == 0.0 {
        return Ok(AgcSolution {
            alpha_g: 0.0,
            mu: snr / rho_f,
            residual: 0.0,
        });
    }

    let coeffs = polynomial_coeffs(rho)?;
    let target = rho_f * lg;
    let f = |x: f64| eval_poly(&coeffs, x) - target;

    // K = 0 only happens at rho = 1/2, where the equation is linear.
    if coeffs.len() == 1 {
        let root = target / coeffs[0];
        return Ok(AgcSolution {
            alpha_g: root,
            mu: root * snr / target,
            residual: f(root),
        });
    }

    // f(0) = -target < 0; double the upper end until the sign changes.
    let mut hi = 1.0f64;
    let mut steps = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > MAX_BISECTION_STEPS {
            return Err(Error::AgcNoConvergence {
                steps,
                residual: f(hi),
            });
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= REL_TOL * hi {
            break;
        }
    }
    let mut root = 0.5 * (lo + hi);

    // One guarded Newton polish; the root is simple so this only sharpens it.
    let fx = f(root);
    let fpx = eval_poly_derivative(&coeffs, root);
    if fpx > 0.0 {
        let cand = root - fx / fpx;
        if cand.is_finite() && cand > 0.0 && f(cand).abs() < fx.abs() {
            root = cand;
        }
    }

    Ok(AgcSolution {
        alpha_g: root,
        mu: root * snr / target,
        residual: f(root),
    })
}

/// Gain-control solution at a scenario's operating point.
pub fn solve_for_scenario(scn: &Scenario) -> Result<AgcSolution> {
    solve_agc(scn.rho, scn.lg, scn.snr)
}

/// Coefficients `1 - k (1 - rho)` for k = 1..=K+1, evaluated from the exact
/// rational so the highest one stays positive even when it is tiny.
pub(crate) fn polynomial_coeffs(rho: Rational) -> Result<Vec<f64>> {
    let g = derive_grid(rho, 1)?;
    let k_max = g.k_finite()? as i64;
    let p = *rho.numer();
    let q = *rho.denom();
    Ok((1..=k_max + 1)
        .map(|k| (q - k * (q - p)) as f64 / q as f64)
        .collect())
}

/// Horner evaluation of `sum c_k x^k` with coefficients for k = 1..=K+1.
pub(crate) fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc * x
}

fn eval_poly_derivative(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * x + (k + 1) as f64 * c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn full_overlap_closed_form() {
        let s = solve_agc(r(1, 1), 1.0, 10.0).unwrap();
        assert_eq!(s.alpha_g, 0.5);
        assert_eq!(s.mu, 5.0);
        assert_eq!(s.residual, 0.0);
        // Exactly LG / (1 + LG) for arbitrary loop gains.
        for lg in [0.01, 0.3162, 3.1623, 1e4] {
            let s = solve_agc(r(1, 1), lg, 1.0).unwrap();
            assert_eq!(s.alpha_g, lg / (1.0 + lg));
        }
    }

    #[test]
    fn zero_loop_gain() {
        for rho in [r(1, 2), r(2, 3), r(9, 11), r(1, 1)] {
            let s = solve_agc(rho, 0.0, 10.0).unwrap();
            assert_eq!(s.alpha_g, 0.0);
            let rho_f = rho.to_f64().unwrap();
            assert!((s.mu - 10.0 / rho_f).abs() < 1e-15);
        }
    }

    #[test]
    fn half_duplex_linear_case() {
        // At rho = 1/2 the polynomial is linear and alpha_g = LG exactly.
        for lg in [0.1, 1.0, 31.6227766] {
            let s = solve_agc(r(1, 2), lg, 10.0).unwrap();
            assert_eq!(s.alpha_g, lg);
            assert!((s.mu - 20.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_oracle_two_thirds() {
        // rho = 2/3 has K = 1: (2/3) x + (1/3) x^2 = (2/3) LG, i.e.
        // x^2 + 2x - 2 LG = 0 with positive root sqrt(1 + 2 LG) - 1.
        for lg in [0.05, 0.3162, 1.0, 3.1623, 10.0, 1000.0] {
            let s = solve_agc(r(2, 3), lg, 10.0).unwrap();
            let oracle = (1.0 + 2.0 * lg).sqrt() - 1.0;
            assert!(
                (s.alpha_g - oracle).abs() <= 1e-12 * oracle.max(1.0),
                "lg = {lg}: got {}, oracle {oracle}",
                s.alpha_g
            );
        }
        let s = solve_agc(r(2, 3), 1.0, 10.0).unwrap();
        assert!((s.alpha_g - (3f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn residual_bound() {
        for rho in [r(2, 3), r(3, 4), r(7, 10), r(9, 11), r(99, 100)] {
            for lg in [0.01, 0.3162, 1.0, 3.1623, 31.6228] {
                let s = solve_agc(rho, lg, 10.0).unwrap();
                let rho_f = rho.to_f64().unwrap();
                assert!(
                    s.residual.abs() <= 1e-10 * (rho_f * lg).max(1.0),
                    "rho = {rho}, lg = {lg}: residual {}",
                    s.residual
                );
            }
        }
    }

    #[test]
    fn alpha_g_can_exceed_one_below_full_overlap() {
        let s = solve_agc(r(2, 3), 100.0, 10.0).unwrap();
        assert!(s.alpha_g > 1.0);
    }

    #[test]
    fn monotone_in_loop_gain() {
        for rho in [r(2, 3), r(3, 4), r(7, 10), r(9, 11)] {
            let mut prev = 0.0;
            for i in 1..=40 {
                let lg = 10f64.powf(-2.0 + i as f64 * 0.1);
                let s = solve_agc(rho, lg, 1.0).unwrap();
                assert!(s.alpha_g >= prev, "rho = {rho}, lg = {lg}");
                prev = s.alpha_g;
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(solve_agc(r(2, 3), -1.0, 10.0).is_err());
        assert!(solve_agc(r(2, 3), 1.0, 0.0).is_err());
        assert!(solve_agc(r(1, 3), 1.0, 10.0).is_err());
    }

    /// Numerator/denominator pairs with 1/2 <= p/q < 1.
    fn rho_strategy(max_den: i64) -> impl Strategy<Value = (i64, i64)> {
        (3i64..max_den).prop_flat_map(|q| ((q + 1) / 2..q).prop_map(move |p| (p, q)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        // The root is simple: the polynomial changes sign across
        // alpha_g * (1 -/+ 1e-6).
        #[test]
        fn root_is_simple_and_bracketed(
            (p, q) in rho_strategy(40),
            lg_exp in -1.0f64..2.0,
        ) {
            let rho = r(p, q);
            let lg = 10f64.powf(lg_exp);
            let s = solve_agc(rho, lg, 1.0).unwrap();
            let coeffs = polynomial_coeffs(rho).unwrap();
            let target = rho.to_f64().unwrap() * lg;
            let lo = eval_poly(&coeffs, s.alpha_g * (1.0 - 1e-6)) - target;
            let hi = eval_poly(&coeffs, s.alpha_g * (1.0 + 1e-6)) - target;
            prop_assert!(lo < 0.0, "no sign change below root: {lo}");
            prop_assert!(hi > 0.0, "no sign change above root: {hi}");
        }
    }
}
