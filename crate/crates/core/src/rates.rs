//! Spectral efficiency of every receiver strategy, in bps/Hz.
//!
//! The optimal (ML) rate has two mutually validating computation paths:
//!
//! * a scalar recursion over the characteristic polynomial of the banded
//!   inverse Gram matrix, `q_k(-mu) = (1 + alpha_g + mu) q_{k-1} - alpha_g q_{k-2}`,
//!   weighted by the fractional part of `rho / (1 - rho)`;
//! * a dense log-det over the explicit intercarrier-interference matrix.
//!
//! The recursion carries `log2` of the consecutive ratios rather than the raw
//! `q_k` values, which grow like `mu^k` and overflow long before the rates
//! stop being interesting.
//!
//! Suboptimal receivers (direct decoding, zero forcing, linear MMSE,
//! successive cancellation) follow their per-subcarrier SINR expressions, and
//! the half/full-duplex endpoints have dedicated closed forms.

use crate::agc::{self, AgcSolution};
use crate::error::{Error, Result};
use crate::freq_channel;
use crate::linalg::CMat;
use crate::scenario::{derive_grid, Rational, Scenario};
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

/// Receiver strategies with a defined spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Receiver {
    Ml,
    Direct,
    Zf,
    Lmmse,
    Sic,
    NoSi,
    Hd,
    FdMl,
    FdDirect,
    FdDirectPc,
}

impl Receiver {
    pub const ALL: [Receiver; 10] = [
        Receiver::Ml,
        Receiver::Direct,
        Receiver::Zf,
        Receiver::Lmmse,
        Receiver::Sic,
        Receiver::NoSi,
        Receiver::Hd,
        Receiver::FdMl,
        Receiver::FdDirect,
        Receiver::FdDirectPc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Receiver::Ml => "ml",
            Receiver::Direct => "direct",
            Receiver::Zf => "zf",
            Receiver::Lmmse => "lmmse",
            Receiver::Sic => "sic",
            Receiver::NoSi => "nosi",
            Receiver::Hd => "hd",
            Receiver::FdMl => "fd-ml",
            Receiver::FdDirect => "fd-direct",
            Receiver::FdDirectPc => "fd-direct-pc",
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Receiver::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown receiver {s:?}; expected one of ml, direct, zf, lmmse, sic, nosi, hd, fd-ml, fd-direct, fd-direct-pc"
                ))
            })
    }
}

/// Which computation path produced a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatePath {
    ClosedForm,
    Recursion,
    DenseMatrix,
    TimeDomain,
}

impl fmt::Display for RatePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatePath::ClosedForm => "closed_form",
            RatePath::Recursion => "recursion",
            RatePath::DenseMatrix => "dense_matrix",
            RatePath::TimeDomain => "time_domain",
        })
    }
}

/// A spectral efficiency tagged with its receiver, computation path and the
/// operating point it belongs to.
#[derive(Debug, Clone)]
pub struct RateResult {
    pub receiver: Receiver,
    /// Spectral efficiency in bps/Hz.
    pub se: f64,
    pub path: RatePath,
    pub scenario: Scenario,
    /// Normalized loop gain at the operating point.
    pub alpha_g: f64,
    /// Effective per-subcarrier SNR at the operating point.
    pub mu: f64,
}

/// Full-power rate plus the optimal transmit-power fraction for the
/// power-controlled full-duplex direct decoder.
#[derive(Debug, Clone)]
pub struct PowerControlledRate {
    pub rate: RateResult,
    /// Optimal fraction `p* = min(1, 1/sqrt(LG * snr))` of the power budget.
    pub power_fraction: f64,
}

#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Log-domain ratios of the characteristic recursion at `lambda = -mu`.
///
/// With `s_j = q_j / q_{j-1}` and `e_j = s_j - 1`, the recursion becomes
/// `e_1 = mu`, `e_j = mu + alpha_g e_{j-1} / (1 + e_{j-1})`, all terms
/// non-negative. Returns `(sum_{j=1}^{K} log2 s_j, log2 s_{K+1})`, so that
/// `log2 q_K = sum` and `log2 q_{K+1} = sum + last`.
fn ml_log2_factors(alpha_g: f64, mu: f64, k: u32) -> (f64, f64) {
    let mut excess = mu;
    let mut sum = 0.0;
    for _ in 1..=k {
        sum += log2_1p(excess);
        excess = mu + alpha_g * excess / (1.0 + excess);
    }
    (sum, log2_1p(excess))
}

/// Characteristic recursion `q_k(lambda)` evaluated directly; test support
/// for small k where the raw values stay in range.
#[cfg(test)]
pub(crate) fn q_char(k: u32, lambda: f64, alpha_g: f64) -> f64 {
    let mut prev = 1.0; // q_0
    let mut cur = 1.0 - lambda; // q_1
    if k == 0 {
        return prev;
    }
    for _ in 2..=k {
        let next = (1.0 + alpha_g - lambda) * cur - alpha_g * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn require_partial_overlap(scn: &Scenario, receiver: &'static str) -> Result<(u32, f64)> {
    let g = derive_grid(scn.rho, 1)?;
    match (g.k, g.delta) {
        (Some(k), Some(d)) => Ok((k, d)),
        _ => Err(Error::ReceiverUndefinedAtFullOverlap(receiver)),
    }
}

fn result(
    scn: &Scenario,
    receiver: Receiver,
    path: RatePath,
    se: f64,
    sol: &AgcSolution,
) -> RateResult {
    RateResult {
        receiver,
        se,
        path,
        scenario: scn.clone(),
        alpha_g: sol.alpha_g,
        mu: sol.mu,
    }
}

// ---------------------------------------------------------------------------
// Optimal (ML) receiver
// ---------------------------------------------------------------------------

/// ML spectral efficiency through the scalar characteristic recursion.
///
/// `se = (1 - rho) [ delta log2 q_K(-mu) + (1 - delta) log2 q_{K+1}(-mu) ]`.
/// Requires rho < 1; the full-overlap limit is [`se_fd_ml`].
pub fn se_ml_recursion(scn: &Scenario) -> Result<RateResult> {
    let (k, delta) = require_partial_overlap(scn, "ml (recursion)")?;
    let sol = agc::solve_for_scenario(scn)?;
    let (sum_to_k, last) = ml_log2_factors(sol.alpha_g, sol.mu, k);
    let se = scn.one_minus_rho() * (sum_to_k + (1.0 - delta) * last);
    Ok(result(scn, Receiver::Ml, RatePath::Recursion, se, &sol))
}

/// ML spectral efficiency as `(1/L) log2 det(I + mu T T^H)` over an explicit
/// matrix with at least `n_hint` occupied subcarriers. This is the dense
/// reference the recursion is checked against.
pub fn se_ml_dense(scn: &Scenario, n_hint: usize) -> Result<RateResult> {
    let grid = derive_grid(scn.rho, n_hint)?;
    if grid.p == 0 {
        return Err(Error::ReceiverUndefinedAtFullOverlap("ml (dense)"));
    }
    let sol = agc::solve_for_scenario(scn)?;
    let t = freq_channel::build_t(grid.n, grid.p, sol.alpha_g, scn.theta0, scn.phi0)?;
    let logdet = freq_channel::logdet_capacity(&t, sol.mu)?;
    let se = logdet / grid.l as f64;
    Ok(result(scn, Receiver::Ml, RatePath::DenseMatrix, se, &sol))
}

// ---------------------------------------------------------------------------
// Suboptimal receivers
// ---------------------------------------------------------------------------

/// Direct decoding: each subcarrier decoded independently with all
/// interference treated as noise. The k-th echo group sees interference
/// power `a_k = alpha_g (1 - alpha_g^{k-1}) / (1 - alpha_g)`, accumulated
/// here as the geometric sum `a_k = alpha_g (1 + a_{k-1})`, which is stable
/// through alpha_g = 1.
pub fn se_direct(scn: &Scenario) -> Result<RateResult> {
    if scn.rho == Rational::from_integer(1) {
        let fd = se_fd_direct(scn)?;
        return Ok(RateResult {
            receiver: Receiver::Direct,
            ..fd
        });
    }
    let (k, delta) = require_partial_overlap(scn, "direct")?;
    let sol = agc::solve_for_scenario(scn)?;
    let mu = sol.mu;
    let mut interference = 0.0;
    let mut acc = 0.0;
    for j in 1..=k + 1 {
        if j > 1 {
            interference = sol.alpha_g * (1.0 + interference);
        }
        let term = log2_1p(mu / (1.0 + mu * interference));
        acc += if j <= k { term } else { (1.0 - delta) * term };
    }
    let se = scn.one_minus_rho() * acc;
    Ok(result(
        scn,
        Receiver::Direct,
        RatePath::ClosedForm,
        se,
        &sol,
    ))
}

/// Zero-forcing receiver: invert the channel, then decode per subcarrier.
/// The noise-enhancement penalty term is non-positive and vanishes without
/// coupling.
pub fn se_zf(scn: &Scenario) -> Result<RateResult> {
    let sol = agc::solve_for_scenario(scn)?;
    let rho = scn.rho_f64();
    let (ag, mu) = (sol.alpha_g, sol.mu);
    let penalty =
        (2.0 * rho - 1.0) * ((1.0 + ag + mu).log2() - (1.0 + ag + (1.0 + ag) * mu).log2());
    let se = rho * log2_1p(mu) + penalty;
    Ok(result(scn, Receiver::Zf, RatePath::ClosedForm, se, &sol))
}

/// Linear MMSE receiver. No closed form exists; the per-subcarrier SINR
/// comes from the diagonal of `(I + mu T^H T)^{-1}` at a finite grid of at
/// least `n_hint` occupied subcarriers.
pub fn se_lmmse(scn: &Scenario, n_hint: usize) -> Result<RateResult> {
    let grid = derive_grid(scn.rho, n_hint)?;
    if grid.p == 0 {
        return Err(Error::ReceiverUndefinedAtFullOverlap("lmmse"));
    }
    let sol = agc::solve_for_scenario(scn)?;
    let (n, p) = (grid.n, grid.p);
    let t = freq_channel::build_t(n, p, sol.alpha_g, scn.theta0, scn.phi0)?;

    // A = I + mu T^H T assembled from the nonzero pattern of T (entries only
    // at column offsets that are multiples of p).
    let mut a = CMat::identity(n);
    for l in 0..n {
        let k_max = l / p;
        for k1 in 0..=k_max {
            let i = l - k1 * p;
            let ti = t.get(l, i).conj() * sol.mu;
            for k2 in 0..=k_max {
                let j = l - k2 * p;
                a.add_assign_at(i, j, ti * t.get(l, j));
            }
        }
    }

    let inv_diag = a.hpd_inverse_diagonal()?;
    let mut clamped = 0usize;
    let mut acc = 0.0;
    for d in inv_diag {
        let d = if d <= 0.0 {
            clamped += 1;
            f64::MIN_POSITIVE
        } else {
            d
        };
        // 1 + sinr_n = 1/d_n with sinr_n = q_n / (1 - q_n), q_n = 1 - d_n.
        let sinr = (1.0 - d) / d;
        acc += log2_1p(sinr);
    }
    if clamped > 0 {
        eprintln!(
            "warning: lmmse clamped {clamped} subcarriers with q_n >= 1 (ill-conditioned at mu = {:e})",
            sol.mu
        );
    }
    let se = (scn.rho_f64() / n as f64 * acc).max(0.0);
    Ok(result(
        scn,
        Receiver::Lmmse,
        RatePath::DenseMatrix,
        se,
        &sol,
    ))
}

/// Successive interference cancellation: decode subcarriers in triangular
/// order, subtracting known echoes. Rate `rho log2(1 + mu)`; the penalty
/// relative to the interference-free case is the power fraction
/// `alpha_g / LG` spent on the useful component.
pub fn se_sic(scn: &Scenario) -> Result<RateResult> {
    let sol = agc::solve_for_scenario(scn)?;
    let se = scn.rho_f64() * log2_1p(sol.mu);
    Ok(result(scn, Receiver::Sic, RatePath::ClosedForm, se, &sol))
}

/// Interference-free upper bound `rho log2(1 + snr / rho)`.
pub fn se_nosi(scn: &Scenario) -> Result<RateResult> {
    let rho = scn.rho_f64();
    let mu = scn.snr / rho;
    let se = rho * log2_1p(mu);
    let sol = AgcSolution {
        alpha_g: 0.0,
        mu,
        residual: 0.0,
    };
    Ok(result(scn, Receiver::NoSi, RatePath::ClosedForm, se, &sol))
}

/// Half-duplex reference `0.5 log2(1 + 2 snr)`, independent of the loop gain.
pub fn se_hd(scn: &Scenario) -> Result<RateResult> {
    let se = 0.5 * log2_1p(2.0 * scn.snr);
    // rho = 1/2 equivalence: alpha_g = LG and mu = 2 snr.
    let sol = AgcSolution {
        alpha_g: scn.lg,
        mu: 2.0 * scn.snr,
        residual: 0.0,
    };
    Ok(result(scn, Receiver::Hd, RatePath::ClosedForm, se, &sol))
}

// ---------------------------------------------------------------------------
// Full-duplex closed forms
// ---------------------------------------------------------------------------

fn fd_agc(scn: &Scenario) -> AgcSolution {
    AgcSolution {
        alpha_g: scn.lg / (1.0 + scn.lg),
        mu: scn.snr / (1.0 + scn.lg),
        residual: 0.0,
    }
}

/// Full-overlap ML limit:
/// `log2( (1 + snr + 2 LG + sqrt((1+snr)^2 + 4 LG snr)) / (2 (1 + LG)) )`.
///
/// Evaluated as `log2(1 + eps)` with `eps` assembled from non-negative terms
/// so the small-snr regime keeps full relative precision.
pub fn se_fd_ml(scn: &Scenario) -> Result<RateResult> {
    let (snr, lg) = (scn.snr, scn.lg);
    let x = (1.0 + snr) * (1.0 + snr) + 4.0 * lg * snr;
    let sqrt_x = x.sqrt();
    let eps =
        (snr + (2.0 * snr + snr * snr + 4.0 * lg * snr) / (1.0 + sqrt_x)) / (2.0 * (1.0 + lg));
    let se = log2_1p(eps);
    Ok(result(
        scn,
        Receiver::FdMl,
        RatePath::ClosedForm,
        se,
        &fd_agc(scn),
    ))
}

/// Full-overlap direct decoding: `log2(1 + snr / (1 + LG + LG snr))`.
/// Saturates at `log2(1 + 1/LG)` as snr grows.
pub fn se_fd_direct(scn: &Scenario) -> Result<RateResult> {
    let (snr, lg) = (scn.snr, scn.lg);
    let se = log2_1p(snr / (1.0 + lg + lg * snr));
    Ok(result(
        scn,
        Receiver::FdDirect,
        RatePath::ClosedForm,
        se,
        &fd_agc(scn),
    ))
}

/// Full-overlap direct decoding with transmit power control.
///
/// Backing off to the fraction `p* = min(1, 1/sqrt(LG snr))` of the power
/// budget is optimal; above the threshold `LG >= 1/snr` the rate becomes
/// `log2(1 + snr / (LG + 2 sqrt(LG snr)))`.
pub fn se_fd_direct_pc(scn: &Scenario) -> Result<PowerControlledRate> {
    let (snr, lg) = (scn.snr, scn.lg);
    let product = lg * snr;
    let (se, power_fraction) = if product <= 1.0 {
        (log2_1p(snr / (1.0 + lg + lg * snr)), 1.0)
    } else {
        let p_star = 1.0 / product.sqrt();
        (log2_1p(snr / (lg + 2.0 * product.sqrt())), p_star)
    };
    let eff_lg = power_fraction * lg;
    let sol = AgcSolution {
        alpha_g: eff_lg / (1.0 + eff_lg),
        mu: power_fraction * snr / (1.0 + eff_lg),
        residual: 0.0,
    };
    Ok(PowerControlledRate {
        rate: result(scn, Receiver::FdDirectPc, RatePath::ClosedForm, se, &sol),
        power_fraction,
    })
}

/// High-SNR asymptote `rho log2 snr + rho log2(alpha_g / (rho LG))` of the
/// ML rate; used for slope checks and plot annotations only.
pub fn se_ml_asymptote(scn: &Scenario) -> Result<f64> {
    let rho = scn.rho_f64();
    if scn.lg == 0.0 {
        return Ok(rho * (scn.snr / rho).log2());
    }
    let sol = agc::solve_for_scenario(scn)?;
    Ok(rho * scn.snr.log2() + rho * (sol.alpha_g / (rho * scn.lg)).log2())
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Compute the rate for a named receiver, routing rho = 1 to the closed
/// forms where they exist. The result keeps the requested receiver tag.
pub fn compute_rate(receiver: Receiver, scn: &Scenario) -> Result<RateResult> {
    let full_overlap = scn.rho == Rational::from_integer(1);
    let mut r = match receiver {
        Receiver::Ml => {
            if full_overlap {
                se_fd_ml(scn)?
            } else {
                se_ml_recursion(scn)?
            }
        }
        Receiver::Direct => se_direct(scn)?,
        Receiver::Zf => se_zf(scn)?,
        Receiver::Lmmse => se_lmmse(scn, scn.n_subcarriers_hint)?,
        Receiver::Sic => se_sic(scn)?,
        Receiver::NoSi => se_nosi(scn)?,
        Receiver::Hd => se_hd(scn)?,
        Receiver::FdMl => se_fd_ml(scn)?,
        Receiver::FdDirect => se_fd_direct(scn)?,
        Receiver::FdDirectPc => se_fd_direct_pc(scn)?.rate,
    };
    r.receiver = receiver;
    Ok(r)
}
