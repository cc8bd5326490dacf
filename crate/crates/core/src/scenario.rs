//! Operating point of the relay link and the subcarrier grid derived from it.
//!
//! All physical quantities enter through dimensionless combinations: the
//! bandwidth ratio `rho` (input band over full band), the reference SNR at the
//! destination, the loop gain of the self-interference path, and two phase
//! parameters of the relay filter that provably never affect any rate.

use crate::error::{Error, Result};
use num_rational::Ratio;
use num_traits::ToPrimitive;

/// Exact rational type used for the bandwidth ratio.
pub type Rational = Ratio<i64>;

/// Default target number of occupied subcarriers for matrix-path computations.
pub const DEFAULT_N_HINT: usize = 1000;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// One operating point of the relay link.
///
/// `rho` is kept as an exact rational: the rate formulas branch on
/// `ceil(rho / (1 - rho))`, which is discontinuous, and a float ratio would
/// misplace those transition points.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Bandwidth ratio, exact rational in [1/2, 1].
    pub rho: Rational,
    /// Reference SNR (linear, > 0).
    pub snr: f64,
    /// Loop gain of the self-interference path (linear, >= 0).
    pub lg: f64,
    /// Constant filter phase shift in radians.
    pub theta0: f64,
    /// Per-subcarrier phase increment in radians.
    pub phi0: f64,
    /// Target number of occupied subcarriers for matrix paths.
    pub n_subcarriers_hint: usize,
}

impl Scenario {
    /// Operating point with default phases (theta0 = 0, phi0 = 1 rad) and the
    /// default subcarrier hint.
    pub fn new(rho: Rational, snr: f64, lg: f64) -> Result<Self> {
        validate_rho(rho)?;
        if !snr.is_finite() || snr <= 0.0 {
            return Err(Error::InvalidSnr(snr));
        }
        if !lg.is_finite() || lg < 0.0 {
            return Err(Error::InvalidLoopGain(lg));
        }
        Ok(Scenario {
            rho,
            snr,
            lg,
            theta0: 0.0,
            phi0: 1.0,
            n_subcarriers_hint: DEFAULT_N_HINT,
        })
    }

    /// Same as [`Scenario::new`] but with SNR and loop gain given in dB.
    pub fn from_db(rho: Rational, snr_db: f64, lg_db: f64) -> Result<Self> {
        Self::new(rho, db_to_linear(snr_db), db_to_linear(lg_db))
    }

    pub fn with_phases(mut self, theta0: f64, phi0: f64) -> Self {
        self.theta0 = theta0;
        self.phi0 = phi0;
        self
    }

    pub fn with_n_hint(mut self, n_hint: usize) -> Result<Self> {
        if n_hint == 0 {
            return Err(Error::InvalidParameter(
                "subcarrier hint must be at least 1".into(),
            ));
        }
        self.n_subcarriers_hint = n_hint;
        Ok(self)
    }

    /// Bandwidth ratio as a float.
    #[inline]
    pub fn rho_f64(&self) -> f64 {
        self.rho.to_f64().expect("rho fits in f64")
    }

    /// `1 - rho` evaluated from the exact rational.
    #[inline]
    pub fn one_minus_rho(&self) -> f64 {
        let p = *self.rho.numer() as f64;
        let q = *self.rho.denom() as f64;
        (q - p) / q
    }

    /// Subcarrier grid at this scenario's hint.
    pub fn grid(&self) -> Grid {
        derive_grid(self.rho, self.n_subcarriers_hint).expect("scenario already validated")
    }
}

/// Subcarrier grid: `n` occupied carriers out of `l`, `p = l - n` unused,
/// with `n / l` equal to `rho` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Occupied subcarriers.
    pub n: usize,
    /// Unused subcarriers (the frequency-shift offset of the echoes).
    pub p: usize,
    /// Total subcarriers.
    pub l: usize,
    /// Number of self-interference echoes; `None` when rho = 1 (unbounded).
    pub k: Option<u32>,
    /// Fractional part weight `ceil(rho/(1-rho)) - rho/(1-rho)`; `None` at rho = 1.
    pub delta: Option<f64>,
}

impl Grid {
    /// Echo count, or an error for the full-overlap case.
    pub fn k_finite(&self) -> Result<u32> {
        self.k.ok_or(Error::FullOverlapMatrixPath)
    }
}

pub(crate) fn validate_rho(rho: Rational) -> Result<()> {
    let half = Rational::new(1, 2);
    let one = Rational::from_integer(1);
    if rho < half || rho > one {
        return Err(Error::RhoOutOfRange(rho.to_string()));
    }
    Ok(())
}

/// Derive the subcarrier grid for a bandwidth ratio `rho = p/q`.
///
/// For rho < 1 the grid is the smallest multiple of (p, q) with at least
/// `n_hint` occupied carriers, so that `n / l = rho` holds exactly. For
/// rho = 1 there are no unused carriers and the echo count is unbounded.
pub fn derive_grid(rho: Rational, n_hint: usize) -> Result<Grid> {
    validate_rho(rho)?;
    if n_hint == 0 {
        return Err(Error::InvalidParameter(
            "subcarrier hint must be at least 1".into(),
        ));
    }
    if rho == Rational::from_integer(1) {
        return Ok(Grid {
            n: n_hint,
            p: 0,
            l: n_hint,
            k: None,
            delta: None,
        });
    }
    let p = *rho.numer() as usize;
    let q = *rho.denom() as usize;
    let gap = q - p; // >= 1 since rho < 1
    let m = n_hint.div_ceil(p);
    let n = p * m;
    let l = q * m;
    let ceil_ratio = p.div_ceil(gap) as u64;
    let k = u32::try_from(ceil_ratio - 1).map_err(|_| {
        Error::InvalidParameter(format!("rho = {rho} is too close to 1 for the grid"))
    })?;
    let delta = (ceil_ratio as f64 * gap as f64 - p as f64) / gap as f64;
    Ok(Grid {
        n,
        p: l - n,
        l,
        k: Some(k),
        delta: Some(delta),
    })
}

/// Parse a bandwidth ratio from either a fraction ("2/3") or a decimal.
///
/// Decimals are snapped to the closest rational with denominator at most
/// 1000; the second return value reports whether snapping happened so a
/// caller can echo the interpreted value back to the user.
pub fn parse_rho(s: &str) -> Result<(Rational, bool)> {
    let s = s.trim();
    if let Ok(r) = s.parse::<Rational>() {
        validate_rho(r)?;
        return Ok((r, false));
    }
    let x: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse rho from {s:?}")))?;
    if !x.is_finite() {
        return Err(Error::Parse(format!("cannot parse rho from {s:?}")));
    }
    let r = snap_to_rational(x, 1000);
    validate_rho(r)?;
    Ok((r, true))
}

/// Closest rational p/q to `x` with 1 <= q <= `max_den`.
fn snap_to_rational(x: f64, max_den: i64) -> Rational {
    let mut best = Rational::new(x.round() as i64, 1);
    let mut best_err = (x - best.to_f64().unwrap()).abs();
    for q in 1..=max_den {
        let p = (x * q as f64).round() as i64;
        let err = (x - p as f64 / q as f64).abs();
        if err < best_err {
            best = Rational::new(p, q);
            best_err = err;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_examples() {
        let g = derive_grid(Rational::new(2, 3), 1000).unwrap();
        assert_eq!(g.k, Some(1));

        let g = derive_grid(Rational::new(3, 4), 1000).unwrap();
        assert_eq!(g.k, Some(2));

        let g = derive_grid(Rational::new(1, 2), 1000).unwrap();
        assert_eq!(g.k, Some(0));
        assert_eq!(g.delta, Some(0.0));

        let g = derive_grid(Rational::new(7, 10), 1000).unwrap();
        assert_eq!(g.k, Some(2));
        assert!((g.delta.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn grid_minimal_multiple() {
        // rho = 2/3, hint 1000: m = 500 gives exactly N = 1000.
        let g = derive_grid(Rational::new(2, 3), 1000).unwrap();
        assert_eq!((g.n, g.p, g.l), (1000, 500, 1500));

        // hint 999 also needs m = 500 (smallest N >= hint that is a multiple of 2).
        let g = derive_grid(Rational::new(2, 3), 999).unwrap();
        assert_eq!(g.n, 1000);

        // rho = 7/10, hint 4: m = 1 suffices.
        let g = derive_grid(Rational::new(7, 10), 4).unwrap();
        assert_eq!((g.n, g.p, g.l), (7, 3, 10));
    }

    #[test]
    fn grid_full_overlap_sentinels() {
        let g = derive_grid(Rational::from_integer(1), 64).unwrap();
        assert_eq!((g.n, g.p, g.l), (64, 0, 64));
        assert_eq!(g.k, None);
        assert_eq!(g.delta, None);
        assert!(g.k_finite().is_err());
    }

    #[test]
    fn rho_domain_errors() {
        assert!(derive_grid(Rational::new(1, 3), 10).is_err());
        assert!(derive_grid(Rational::new(5, 4), 10).is_err());
        assert!(Scenario::new(Rational::new(2, 3), 0.0, 0.0).is_err());
        assert!(Scenario::new(Rational::new(2, 3), 1.0, -0.1).is_err());
        assert!(Scenario::new(Rational::new(2, 3), f64::NAN, 0.0).is_err());
    }

    #[test]
    fn parse_rho_forms() {
        let (r, snapped) = parse_rho("2/3").unwrap();
        assert_eq!(r, Rational::new(2, 3));
        assert!(!snapped);

        let (r, snapped) = parse_rho("0.6667").unwrap();
        assert_eq!(r, Rational::new(2, 3));
        assert!(snapped);

        let (r, _) = parse_rho("1").unwrap();
        assert_eq!(r, Rational::from_integer(1));

        let (r, snapped) = parse_rho("0.5").unwrap();
        assert_eq!(r, Rational::new(1, 2));
        assert!(snapped);

        assert!(parse_rho("0.3").is_err());
        assert!(parse_rho("abc").is_err());
    }

    proptest! {
        // Exponent non-negativity used by the characteristic-polynomial
        // factorization: (K+1)P - N >= 0 and N - KP >= 1 for every rho < 1.
        #[test]
        fn grid_exponent_invariants(
            (p, q) in (3i64..200).prop_flat_map(|q| ((q + 1) / 2..q).prop_map(move |p| (p, q))),
            hint in 1usize..500,
        ) {
            let rho = Rational::new(p, q);
            let g = derive_grid(rho, hint).unwrap();
            let k = g.k.unwrap() as i64;
            let (n, p_c) = (g.n as i64, g.p as i64);
            prop_assert!((k + 1) * p_c - n >= 0);
            prop_assert!(n - k * p_c >= 1);
            prop_assert_eq!(g.n * *rho.denom() as usize, g.l * *rho.numer() as usize);
            prop_assert!(g.n >= hint);
            // delta = 0 exactly when rho/(1-rho) is an integer, and then (K+1)P = N.
            let delta = g.delta.unwrap();
            if p % (q - p) == 0 {
                prop_assert_eq!(delta, 0.0);
                prop_assert_eq!((k + 1) * p_c, n);
            } else {
                prop_assert!(delta > 0.0 && delta < 1.0);
            }
            // Deterministic.
            prop_assert_eq!(g, derive_grid(rho, hint).unwrap());
        }
    }
}
