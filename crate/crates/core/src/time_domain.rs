//! Time-domain channel model: the relay as a sampled linear periodically
//! time-varying system.
//!
//! When `1/(1 - rho)` is an integer `N_ch`, sampling at the full bandwidth
//! makes the end-to-end response `N_ch`-periodic and the link reduces to a
//! banded block channel `r = sqrt(g) P x + w` with a finite impulse response
//! per output phase. A finite-block log-det capacity over that model is an
//! independent cross-check of the frequency-domain rates: it never touches
//! the subcarrier matrices or the characteristic recursion.
//!
//! This path is O(M^3) in the block size and exists for validation, not for
//! sweeps.

use crate::agc;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rates::{RatePath, RateResult, Receiver};
use crate::scenario::{Rational, Scenario};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Filter group delay in samples per channel period (`ell = factor * N_ch`).
pub const DEFAULT_ELL_FACTOR: usize = 5;
/// Extra whole periods appended to the minimal block size.
pub const DEFAULT_KAPPA: usize = 300;

const AGC_MAX_ITERATIONS: usize = 500;
const AGC_REL_TOL: f64 = 1e-10;

/// Configuration for the time-domain model. Units are normalized so that the
/// source and relay power budgets are 1, which makes the coupling gain equal
/// the loop gain numerically.
#[derive(Debug, Clone)]
pub struct TdConfig {
    /// Channels per period; the bandwidth ratio is `(n_ch - 1) / n_ch`.
    pub n_ch: usize,
    /// Loop gain (linear, >= 0).
    pub lg: f64,
    /// Group delay factor: `ell = ell_factor * n_ch` samples.
    pub ell_factor: usize,
    /// Extra periods in the input block beyond the response length.
    pub kappa: usize,
    /// Constant filter phase shift.
    pub theta0: f64,
}

impl TdConfig {
    pub fn new(n_ch: usize, lg: f64) -> Self {
        TdConfig {
            n_ch,
            lg,
            ell_factor: DEFAULT_ELL_FACTOR,
            kappa: DEFAULT_KAPPA,
            theta0: 0.0,
        }
    }
}

/// Sampled periodic impulse response `p_n(m)`, one row per output phase
/// `n = 0..N_ch-1`, support truncated to `0 <= m <= ell_p`.
#[derive(Debug, Clone)]
pub struct ImpulseResponse {
    pub n_ch: usize,
    pub ell: usize,
    pub ell_p: usize,
    /// taps[n][m] for n in 0..n_ch, m in 0..=ell_p.
    taps: Vec<Vec<Complex64>>,
}

impl ImpulseResponse {
    #[inline]
    pub fn tap(&self, n: usize, m: usize) -> Complex64 {
        self.taps[n % self.n_ch][m]
    }

    /// Energy of the response at output phase `n`.
    pub fn energy(&self, n: usize) -> f64 {
        self.taps[n % self.n_ch].iter().map(|z| z.norm_sqr()).sum()
    }
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Build the sampled impulse response for a given normalized loop gain
/// `g_alpha = g * alpha`. Echo k contributes a truncated-sinc pulse of
/// fractional bandwidth `1 - k/N_ch`, delayed by `k * ell` samples and scaled
/// by `sqrt(g_alpha)^{k-1}`:
///
/// ```text
/// p_n(m) = sum_{k=1}^{N_ch - 1} sqrt(g_alpha)^{k-1}
///          e^{-j k theta0} e^{j pi (1 - k/N_ch)(m - k ell)}
///          (1 - k/N_ch) sinc[(1 - k/N_ch)(m - k ell)] e^{j 2 pi k n / N_ch}
/// ```
pub fn build_impulse_response(
    n_ch: usize,
    ell: usize,
    g_alpha: f64,
    theta0: f64,
) -> Result<ImpulseResponse> {
    if n_ch < 2 {
        return Err(Error::InvalidParameter(format!(
            "time-domain model needs n_ch >= 2, got {n_ch}"
        )));
    }
    if ell < 1 {
        return Err(Error::InvalidParameter("ell must be >= 1".into()));
    }
    if !g_alpha.is_finite() || g_alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "g_alpha must be non-negative, got {g_alpha}"
        )));
    }
    let k_terms = n_ch - 1;
    let ell_p = 2 * k_terms * ell;
    let sqrt_ga = g_alpha.sqrt();
    let mut taps = vec![vec![Complex64::new(0.0, 0.0); ell_p + 1]; n_ch];
    for k in 1..=k_terms {
        let frac = 1.0 - k as f64 / n_ch as f64;
        let weight = sqrt_ga.powi(k as i32 - 1);
        let base_phase = -(k as f64) * theta0;
        for m in 0..=ell_p {
            let arg = frac * (m as f64 - (k * ell) as f64);
            let lke = weight * frac * sinc(arg) * Complex64::from_polar(1.0, base_phase + PI * arg);
            for (n, row) in taps.iter_mut().enumerate() {
                let rot = Complex64::from_polar(1.0, 2.0 * PI * (k * n) as f64 / n_ch as f64);
                row[m] += lke * rot;
            }
        }
    }
    Ok(ImpulseResponse {
        n_ch,
        ell,
        ell_p,
        taps,
    })
}

/// Time-domain model with the gain control resolved.
#[derive(Debug, Clone)]
pub struct TdModel {
    pub n_ch: usize,
    pub ell: usize,
    pub ell_p: usize,
    /// Input block size M (multiple of n_ch).
    pub m_block: usize,
    /// Loop gain.
    pub lg: f64,
    /// Constant filter phase shift the response was built with.
    pub theta0: f64,
    /// Resolved relay power gain.
    pub g: f64,
    /// |g * trace(P C_x P^H)/(M - ell_p) - 1| at the returned gain.
    pub agc_residual: f64,
    pub agc_iterations: usize,
    ir: ImpulseResponse,
    /// Input autocorrelation c(m) for m = 0..m_block-1 (Hermitian extension
    /// for negative lags).
    cx_row: Vec<Complex64>,
}

impl TdModel {
    /// Build the model and solve the output-power fixed point
    /// `g * trace(P C_x P^H) / (M - ell_p) = 1` by damped iteration, seeded
    /// from the frequency-domain gain-control solution.
    pub fn build(cfg: &TdConfig) -> Result<TdModel> {
        if cfg.n_ch < 2 {
            return Err(Error::InvalidParameter(format!(
                "time-domain model needs n_ch >= 2, got {}",
                cfg.n_ch
            )));
        }
        if !cfg.lg.is_finite() || cfg.lg < 0.0 {
            return Err(Error::InvalidLoopGain(cfg.lg));
        }
        if cfg.ell_factor < 1 || cfg.kappa < 1 {
            return Err(Error::InvalidParameter(
                "ell_factor and kappa must be >= 1".into(),
            ));
        }
        let n_ch = cfg.n_ch;
        let ell = cfg.ell_factor * n_ch;
        let ell_p = 2 * (n_ch - 1) * ell;
        let m_block = ((ell_p + 1).div_ceil(n_ch) + cfg.kappa) * n_ch;
        let out_len = m_block - ell_p;

        // Flat spectrum over the occupied band: c(m) = sinc(rho m) e^{j pi rho m}.
        let rho_f = (n_ch - 1) as f64 / n_ch as f64;
        let cx_row: Vec<Complex64> = (0..m_block)
            .map(|m| {
                let lag = rho_f * m as f64;
                sinc(lag) * Complex64::from_polar(1.0, PI * lag)
            })
            .collect();

        let alpha = cfg.lg;
        let trace_at = |g: f64| -> Result<(f64, ImpulseResponse)> {
            let ir = build_impulse_response(n_ch, ell, g * alpha, cfg.theta0)?;
            let tr = banded_output_trace(&ir, &cx_row, out_len);
            Ok((tr, ir))
        };

        let (g, agc_residual, agc_iterations, ir) = if alpha == 0.0 {
            // The response does not depend on g: one step lands exactly.
            let (tr, ir) = trace_at(1.0)?;
            let g = out_len as f64 / tr;
            (g, 0.0, 1, ir)
        } else {
            let seed = agc::solve_agc(Rational::new(n_ch as i64 - 1, n_ch as i64), alpha, 1.0)?
                .alpha_g
                / alpha;
            let mut g = seed;
            let mut iterations = 0;
            loop {
                iterations += 1;
                let (tr, _) = trace_at(g)?;
                let target = out_len as f64 / tr;
                let g_new = 0.5 * (g + target);
                let converged = (g_new - g).abs() <= AGC_REL_TOL * g_new.abs().max(1e-300);
                g = g_new;
                if converged {
                    break;
                }
                if iterations >= AGC_MAX_ITERATIONS {
                    let (tr, _) = trace_at(g)?;
                    let residual = (g * tr / out_len as f64 - 1.0).abs();
                    return Err(Error::AgcNoConvergence {
                        steps: iterations,
                        residual,
                    });
                }
            }
            let (tr, ir) = trace_at(g)?;
            let residual = (g * tr / out_len as f64 - 1.0).abs();
            (g, residual, iterations, ir)
        };

        Ok(TdModel {
            n_ch,
            ell,
            ell_p,
            m_block,
            lg: cfg.lg,
            theta0: cfg.theta0,
            g,
            agc_residual,
            agc_iterations,
            ir,
            cx_row,
        })
    }

    /// Input autocorrelation at signed lag `m`.
    #[inline]
    pub fn cx(&self, m: i64) -> Complex64 {
        let v = self.cx_row[m.unsigned_abs() as usize];
        if m < 0 {
            v.conj()
        } else {
            v
        }
    }

    /// Channel-matrix entry `[P]_{r,c}`; nonzero only for `r <= c <= r + ell_p`.
    #[inline]
    pub fn p_entry(&self, r: usize, c: usize) -> Complex64 {
        if c < r || c > r + self.ell_p {
            Complex64::new(0.0, 0.0)
        } else {
            self.ir.tap(self.ell_p + r, self.ell_p + r - c)
        }
    }

    /// Rows of the banded channel matrix.
    #[inline]
    pub fn out_len(&self) -> usize {
        self.m_block - self.ell_p
    }

    /// Dense channel matrix; test support for small blocks.
    pub fn p_dense(&self) -> CMat {
        CMat::from_fn(self.out_len(), self.m_block, |r, c| self.p_entry(r, c))
    }

    /// Dense leading `size x size` block of the input covariance.
    pub fn cx_dense(&self, size: usize) -> CMat {
        assert!(size <= self.m_block);
        CMat::from_fn(size, size, |r, c| self.cx(r as i64 - c as i64))
    }

    /// Relay output power delivered at the resolved gain (should be 1).
    pub fn output_power(&self) -> f64 {
        self.g * banded_output_trace(&self.ir, &self.cx_row, self.out_len()) / self.out_len() as f64
    }

    pub fn impulse_response(&self) -> &ImpulseResponse {
        &self.ir
    }
}

/// `trace(P C_x P^H)` using the band structure: each row of P touches only
/// `ell_p + 1` consecutive columns, and the quadratic form per row depends
/// only on the row phase, not on its absolute position.
fn banded_output_trace(ir: &ImpulseResponse, cx_row: &[Complex64], out_len: usize) -> f64 {
    let n_ch = ir.n_ch;
    let bw = ir.ell_p + 1;
    let cx = |m: i64| -> Complex64 {
        let v = cx_row[m.unsigned_abs() as usize];
        if m < 0 {
            v.conj()
        } else {
            v
        }
    };
    let mut per_phase = vec![0.0f64; n_ch];
    for (phase, value) in per_phase.iter_mut().enumerate() {
        // Row with output phase `phase`: taps indexed m = ell_p - j.
        let mut acc = Complex64::new(0.0, 0.0);
        for j1 in 0..bw {
            let a = ir.taps[phase][ir.ell_p - j1];
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            for j2 in 0..bw {
                let b = ir.taps[phase][ir.ell_p - j2];
                acc += a * cx(j1 as i64 - j2 as i64) * b.conj();
            }
        }
        *value = acc.re;
    }
    (0..out_len).map(|r| per_phase[(ir.ell_p + r) % n_ch]).sum()
}

/// Finite-block spectral efficiency
/// `log2 det(I + g snr P C_x P^H) / (M - ell_p)` of the time-domain model.
pub fn td_capacity(model: &TdModel, snr: f64) -> Result<RateResult> {
    if !snr.is_finite() || snr <= 0.0 {
        return Err(Error::InvalidSnr(snr));
    }
    let nr = model.out_len();
    let m = model.m_block;
    let bw = model.ell_p + 1;

    // W = P C_x, row by row over the band of P.
    let w_rows: Vec<Vec<Complex64>> = (0..nr)
        .into_par_iter()
        .map(|r| {
            let mut row = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..bw {
                let b = model.p_entry(r, r + j);
                if b.re == 0.0 && b.im == 0.0 {
                    continue;
                }
                let src = (r + j) as i64;
                for (c, out) in row.iter_mut().enumerate() {
                    *out += b * model.cx(src - c as i64);
                }
            }
            row
        })
        .collect();

    // A = I + g snr (W P^H).
    let scale = model.g * snr;
    let a_data: Vec<Complex64> = (0..nr)
        .into_par_iter()
        .flat_map_iter(|r| {
            let w_r = &w_rows[r];
            (0..nr).map(move |s| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..bw {
                    let b = model.p_entry(s, s + j);
                    if b.re != 0.0 || b.im != 0.0 {
                        acc += w_r[s + j] * b.conj();
                    }
                }
                let v = acc * scale;
                if r == s {
                    v + 1.0
                } else {
                    v
                }
            })
        })
        .collect();
    let a = CMat::from_fn(nr, nr, |r, c| a_data[r * nr + c]);

    let se = a.hpd_log2_det()? / nr as f64;
    let rho = Rational::new(model.n_ch as i64 - 1, model.n_ch as i64);
    let scenario = Scenario::new(rho, snr, model.lg)?.with_phases(model.theta0, 1.0);
    let rho_f = (model.n_ch - 1) as f64 / model.n_ch as f64;
    Ok(RateResult {
        receiver: Receiver::Ml,
        se,
        path: RatePath::TimeDomain,
        scenario,
        alpha_g: model.g * model.lg,
        mu: model.g * snr / rho_f,
    })
}
