//! Frequency-domain model of the partial-duplex relay channel.
//!
//! Slicing the band into L subcarriers with N occupied turns the relay into a
//! lower-triangular intercarrier-interference matrix acting on the occupied
//! carriers: echo k lands kP bins below its source, scaled by
//! `sqrt(alpha g)^k`. Entry conventions are 0-based for 0 <= n, m <= N-1:
//!
//! ```text
//! [T]_{n, n-kP} = sqrt(alpha g)^k e^{-j k theta0} e^{-j (n k - P k(k-1)/2) phi0}
//! [D]_{n, n}    = e^{-j (n phi0 + theta0)}
//! [S]_{n, n-P}  = e^{-j n phi0}              (rows n = P .. N-1)
//! ```
//!
//! `T^{-1} = I - sqrt(alpha g) e^{-j theta0} S`, so `Q = (T T^H)^{-1}` is
//! banded with entries only on the main diagonal and the P-th super- and
//! sub-diagonals.

use crate::agc;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scenario::Scenario;
use num_complex::Complex64;

/// The structured matrices of one operating point.
#[derive(Debug, Clone)]
pub struct ChannelMatrices {
    /// N x N lower-triangular intercarrier-interference matrix.
    pub t: CMat,
    /// Diagonal of the unit-modulus phase matrix.
    pub d: Vec<Complex64>,
    /// Single sub-band shift matrix from the explicit inverse of `t`.
    pub s: CMat,
    /// `(T T^H)^{-1}`, Hermitian and banded.
    pub q: CMat,
    /// Occupied subcarriers.
    pub n: usize,
    /// Band offset (unused subcarriers).
    pub p_off: usize,
}

fn check_shape(n: usize, p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::FullOverlapMatrixPath);
    }
    if p > n {
        return Err(Error::InvalidParameter(format!(
            "band offset P = {p} exceeds matrix size N = {n}"
        )));
    }
    Ok(())
}

fn check_alpha_g(alpha_g: f64) -> Result<()> {
    if !alpha_g.is_finite() || alpha_g < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha_g must be non-negative and finite, got {alpha_g}"
        )));
    }
    Ok(())
}

/// Build the intercarrier-interference matrix T.
pub fn build_t(n: usize, p: usize, alpha_g: f64, theta0: f64, phi0: f64) -> Result<CMat> {
    check_shape(n, p)?;
    check_alpha_g(alpha_g)?;
    let sqrt_ag = alpha_g.sqrt();
    let mut t = CMat::zeros(n, n);
    for row in 0..n {
        for k in 0..=row / p {
            let col = row - k * p;
            let ki = k as i64;
            let phase_steps = (row as i64) * ki - (p as i64) * ki * (ki - 1) / 2;
            let ang = -(ki as f64) * theta0 - phase_steps as f64 * phi0;
            t.set(row, col, Complex64::from_polar(sqrt_ag.powi(k as i32), ang));
        }
    }
    Ok(t)
}

/// Diagonal of the phase matrix D.
pub fn build_d(n: usize, theta0: f64, phi0: f64) -> Vec<Complex64> {
    (0..n)
        .map(|row| Complex64::from_polar(1.0, -(row as f64 * phi0 + theta0)))
        .collect()
}

/// Build the shift matrix S with a single sub-band at offset P.
pub fn build_s(n: usize, p: usize, phi0: f64) -> Result<CMat> {
    check_shape(n, p)?;
    let mut s = CMat::zeros(n, n);
    for row in p..n {
        s.set(
            row,
            row - p,
            Complex64::from_polar(1.0, -(row as f64) * phi0),
        );
    }
    Ok(s)
}

/// Build `Q = (T T^H)^{-1}` entrywise from its banded closed form.
pub fn build_q(n: usize, p: usize, alpha_g: f64, theta0: f64, phi0: f64) -> Result<CMat> {
    check_shape(n, p)?;
    check_alpha_g(alpha_g)?;
    let sqrt_ag = alpha_g.sqrt();
    let mut q = CMat::zeros(n, n);
    for row in 0..n {
        let d = if row + p < n { 1.0 + alpha_g } else { 1.0 };
        q.set(row, row, Complex64::new(d, 0.0));
    }
    for row in p..n {
        let v = -sqrt_ag * Complex64::from_polar(1.0, -(theta0 + row as f64 * phi0));
        q.set(row, row - p, v);
        q.set(row - p, row, v.conj());
    }
    Ok(q)
}

/// `log2 det(I + mu T T^H)` through a Hermitian factorization.
pub fn logdet_capacity(t: &CMat, mu: f64) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mu must be non-negative and finite, got {mu}"
        )));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let n = t.rows();
    let mut a = t.mul_adjoint();
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j) * mu;
            a.set(i, j, if i == j { v + 1.0 } else { v });
        }
    }
    a.hpd_log2_det()
}

/// Assemble all structured matrices for a scenario, resolving the gain
/// control internally.
pub fn build_all(scn: &Scenario) -> Result<ChannelMatrices> {
    let grid = scn.grid();
    let sol = agc::solve_for_scenario(scn)?;
    let (n, p) = (grid.n, grid.p);
    Ok(ChannelMatrices {
        t: build_t(n, p, sol.alpha_g, scn.theta0, scn.phi0)?,
        d: build_d(n, scn.theta0, scn.phi0),
        s: build_s(n, p, scn.phi0)?,
        q: build_q(n, p, sol.alpha_g, scn.theta0, scn.phi0)?,
        n,
        p_off: p,
    })
}
