//! Batch evaluation: rate tables over a parameter axis, the loop-gain
//! boundary where full-duplex and half-duplex break even, and flat-file
//! emission (CSV and a plain two-section plot-data format).
//!
//! Sweep rows are independent and evaluated on a worker pool; output
//! assembly restores deterministic row order. A failing cell never aborts a
//! sweep: it is written as `nan` with the reason recorded in the trailing
//! column.

use crate::error::{Error, Result};
use crate::rates::{self, compute_rate, Receiver};
use crate::scenario::{db_to_linear, derive_grid, linear_to_db, Rational, Scenario};
use rayon::prelude::*;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

// ---------------------------------------------------------------------------
// Axis and spec
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Rho,
    SnrDb,
    LgDb,
}

impl AxisKind {
    pub fn name(&self) -> &'static str {
        match self {
            AxisKind::Rho => "rho",
            AxisKind::SnrDb => "snr_db",
            AxisKind::LgDb => "lg_db",
        }
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(AxisKind::Rho),
            "snr_db" => Ok(AxisKind::SnrDb),
            "lg_db" => Ok(AxisKind::LgDb),
            _ => Err(Error::Parse(format!(
                "unknown axis {s:?}; expected rho, snr_db or lg_db"
            ))),
        }
    }
}

/// Sweep axis. Bandwidth-ratio axes enumerate explicit rationals so the
/// echo-count transitions at 2/3, 3/4, 4/5, ... are sampled exactly; dB axes
/// take either explicit values or an evenly spaced range.
#[derive(Debug, Clone)]
pub enum SweepAxis {
    Rho(Vec<Rational>),
    SnrDb(Vec<f64>),
    LgDb(Vec<f64>),
}

impl SweepAxis {
    pub fn kind(&self) -> AxisKind {
        match self {
            SweepAxis::Rho(_) => AxisKind::Rho,
            SweepAxis::SnrDb(_) => AxisKind::SnrDb,
            SweepAxis::LgDb(_) => AxisKind::LgDb,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Rho(v) => v.len(),
            SweepAxis::SnrDb(v) | SweepAxis::LgDb(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "linspace needs at least two points");
    let step = (stop - start) / (count - 1) as f64;
    let mut v: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
    v[count - 1] = stop;
    v
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Values for the non-axis parameters (the axis field is ignored).
    pub fixed: Scenario,
    pub receivers: Vec<Receiver>,
}

// ---------------------------------------------------------------------------
// Table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    /// Spectral efficiency, NaN when the receiver failed at this point.
    pub se: f64,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Exact axis label: the rational for rho axes, a formatted dB value
    /// otherwise.
    pub label: String,
    /// Axis value as a float (rho rows carry the ratio).
    pub value: f64,
    /// Echo count for rho-axis rows (`None` means unbounded, i.e. rho = 1);
    /// unused for dB axes.
    pub k: Option<u32>,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: AxisKind,
    pub receivers: Vec<Receiver>,
    pub fixed: Scenario,
    pub rows: Vec<SweepRow>,
}

/// Run a sweep. The axis domain is validated up front; per-cell failures
/// (for example the LMMSE matrix path at rho = 1) are NaN-marked and the
/// sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    if spec.axis.len() < 2 {
        return Err(Error::InvalidSweep("axis needs at least two points".into()));
    }
    if spec.receivers.is_empty() {
        return Err(Error::InvalidSweep("no receivers selected".into()));
    }

    let rows: Result<Vec<SweepRow>> = match &spec.axis {
        SweepAxis::Rho(values) => {
            // Validate the whole axis before spending time on any row.
            for &rho in values {
                derive_grid(rho, 1)?;
            }
            Ok(values
                .par_iter()
                .map(|&rho| {
                    let mut scn = spec.fixed.clone();
                    scn.rho = rho;
                    let k = derive_grid(rho, 1).expect("validated above").k;
                    SweepRow {
                        label: rho.to_string(),
                        value: *rho.numer() as f64 / *rho.denom() as f64,
                        k,
                        cells: eval_cells(&spec.receivers, &scn),
                    }
                })
                .collect())
        }
        SweepAxis::SnrDb(values) => {
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidSweep(format!("non-finite snr_db {bad}")));
            }
            Ok(values
                .par_iter()
                .map(|&db| {
                    let mut scn = spec.fixed.clone();
                    scn.snr = db_to_linear(db);
                    SweepRow {
                        label: fmt_float(db),
                        value: db,
                        k: None,
                        cells: eval_cells(&spec.receivers, &scn),
                    }
                })
                .collect())
        }
        SweepAxis::LgDb(values) => {
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidSweep(format!("non-finite lg_db {bad}")));
            }
            Ok(values
                .par_iter()
                .map(|&db| {
                    let mut scn = spec.fixed.clone();
                    scn.lg = db_to_linear(db);
                    SweepRow {
                        label: fmt_float(db),
                        value: db,
                        k: None,
                        cells: eval_cells(&spec.receivers, &scn),
                    }
                })
                .collect())
        }
    };

    Ok(SweepTable {
        axis: spec.axis.kind(),
        receivers: spec.receivers.clone(),
        fixed: spec.fixed.clone(),
        rows: rows?,
    })
}

fn eval_cells(receivers: &[Receiver], scn: &Scenario) -> Vec<SweepCell> {
    receivers
        .iter()
        .map(|&rx| match compute_rate(rx, scn) {
            Ok(r) => SweepCell {
                se: r.se,
                reason: None,
            },
            Err(e) => SweepCell {
                se: f64::NAN,
                reason: Some(format!("{rx}: {e}").replace(',', ";")),
            },
        })
        .collect()
}

// ---------------------------------------------------------------------------
// HD/FD boundary
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryStrategy {
    Ml,
    Direct,
    DirectPc,
}

impl BoundaryStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryStrategy::Ml => "ml",
            BoundaryStrategy::Direct => "direct",
            BoundaryStrategy::DirectPc => "direct_pc",
        }
    }
}

impl fmt::Display for BoundaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(BoundaryStrategy::Ml),
            "direct" => Ok(BoundaryStrategy::Direct),
            "direct_pc" | "direct-pc" => Ok(BoundaryStrategy::DirectPc),
            _ => Err(Error::Parse(format!(
                "unknown boundary strategy {s:?}; expected ml, direct or direct_pc"
            ))),
        }
    }
}

/// One point on the break-even curve. `lg_db` is the loop gain at which the
/// full-duplex rate equals the half-duplex rate for this SNR; `None` when the
/// two never cross inside the search interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub snr_db: f64,
    pub lg_db: Option<f64>,
}

/// Loop-gain search interval for the boundary bisection, in dB.
pub const BOUNDARY_LG_DB_RANGE: (f64, f64) = (-40.0, 40.0);
const BOUNDARY_TOL_DB: f64 = 1e-4;
const BOUNDARY_GAP_TOL: f64 = 1e-8;

fn fd_rate(strategy: BoundaryStrategy, snr: f64, lg: f64) -> Result<f64> {
    let scn = Scenario::new(Rational::from_integer(1), snr, lg)?;
    Ok(match strategy {
        BoundaryStrategy::Ml => rates::se_fd_ml(&scn)?.se,
        BoundaryStrategy::Direct => rates::se_fd_direct(&scn)?.se,
        BoundaryStrategy::DirectPc => rates::se_fd_direct_pc(&scn)?.rate.se,
    })
}

/// For each SNR on the grid, bisect over the loop gain (in dB) for the root
/// of `SE_FD - SE_HD`. The difference is decreasing in the loop gain, so a
/// sign change across the interval pins the root; without one, a no-crossing
/// marker is emitted. Bisection continues past the 1e-4 dB interval width
/// until the rate gap at the returned point is below 1e-8 bps/Hz.
pub fn find_boundary(
    strategy: BoundaryStrategy,
    snr_db_grid: &[f64],
) -> Result<Vec<BoundaryPoint>> {
    let (lo_db, hi_db) = BOUNDARY_LG_DB_RANGE;
    snr_db_grid
        .iter()
        .map(|&snr_db| {
            let snr = db_to_linear(snr_db);
            let hd = 0.5 * rates::log2_1p(2.0 * snr);
            let gap = |lg_db: f64| -> Result<f64> {
                Ok(fd_rate(strategy, snr, db_to_linear(lg_db))? - hd)
            };
            let (g_lo, g_hi) = (gap(lo_db)?, gap(hi_db)?);
            if !(g_lo > 0.0 && g_hi < 0.0) {
                return Ok(BoundaryPoint {
                    snr_db,
                    lg_db: None,
                });
            }
            let (mut lo, mut hi) = (lo_db, hi_db);
            let mut mid = 0.5 * (lo + hi);
            for _ in 0..200 {
                mid = 0.5 * (lo + hi);
                let g_mid = gap(mid)?;
                if hi - lo <= BOUNDARY_TOL_DB && g_mid.abs() <= BOUNDARY_GAP_TOL {
                    break;
                }
                if g_mid > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(BoundaryPoint {
                snr_db,
                lg_db: Some(mid),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Emission and parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    PlotData,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "plot-data" | "plot_data" => Ok(OutputFormat::PlotData),
            _ => Err(Error::Parse(format!(
                "unknown output format {s:?}; expected csv or plot-data"
            ))),
        }
    }
}

/// Floats are emitted with 12 significant digits; NaN is spelled `nan`.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.11e}")
    }
}

fn k_label(k: Option<u32>) -> String {
    match k {
        Some(k) => k.to_string(),
        None => "inf".to_string(),
    }
}

fn fixed_param_lines(table: &SweepTable) -> String {
    let mut out = String::new();
    let f = &table.fixed;
    if table.axis != AxisKind::Rho {
        out.push_str(&format!("# rho = {}\n", f.rho));
    }
    if table.axis != AxisKind::SnrDb {
        out.push_str(&format!("# snr_db = {}\n", fmt_float(linear_to_db(f.snr))));
    }
    if table.axis != AxisKind::LgDb {
        let lg_db = if f.lg == 0.0 {
            "-inf".to_string()
        } else {
            fmt_float(linear_to_db(f.lg))
        };
        out.push_str(&format!("# lg_db = {lg_db}\n"));
    }
    out.push_str(&format!("# theta0 = {}\n", fmt_float(f.theta0)));
    out.push_str(&format!("# phi0 = {}\n", fmt_float(f.phi0)));
    out.push_str(&format!("# n_hint = {}\n", f.n_subcarriers_hint));
    out
}

/// CSV with `#` metadata comments, header `axis,<receivers...>,reason`, and
/// echo-count transition annotations on rho axes.
pub fn to_csv(table: &SweepTable) -> String {
    let mut out = String::new();
    out.push_str("# pd-relay sweep\n");
    out.push_str(&format!("# axis = {}\n", table.axis));
    out.push_str(&fixed_param_lines(table));
    out.push_str("axis,");
    out.push_str(
        &table
            .receivers
            .iter()
            .map(|r| r.name())
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push_str(",reason\n");
    let mut prev_k: Option<Option<u32>> = None;
    for row in &table.rows {
        if table.axis == AxisKind::Rho {
            if let Some(prev) = prev_k {
                if prev != row.k {
                    out.push_str(&format!(
                        "# K changes: {} -> {}\n",
                        k_label(prev),
                        k_label(row.k)
                    ));
                }
            } else {
                out.push_str(&format!("# K = {}\n", k_label(row.k)));
            }
            prev_k = Some(row.k);
        }
        out.push_str(&row.label);
        for cell in &row.cells {
            out.push(',');
            out.push_str(&fmt_float(cell.se));
        }
        out.push(',');
        let reasons: Vec<&str> = row
            .cells
            .iter()
            .filter_map(|c| c.reason.as_deref())
            .collect();
        out.push_str(&reasons.join("; "));
        out.push('\n');
    }
    out
}

/// Plain two-section plot data: a metadata header, a blank line, then
/// whitespace-separated columns with a column-name line first.
pub fn to_plot_data(table: &SweepTable) -> String {
    let mut out = String::new();
    out.push_str("# pd-relay sweep\n");
    out.push_str(&format!("# axis = {}\n", table.axis));
    out.push_str(&fixed_param_lines(table));
    out.push_str(&format!(
        "# receivers = {}\n",
        table
            .receivers
            .iter()
            .map(|r| r.name())
            .collect::<Vec<_>>()
            .join(",")
    ));
    out.push('\n');
    out.push_str("axis ");
    out.push_str(
        &table
            .receivers
            .iter()
            .map(|r| r.name())
            .collect::<Vec<_>>()
            .join(" "),
    );
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.label);
        for cell in &row.cells {
            out.push(' ');
            out.push_str(&fmt_float(cell.se));
        }
        out.push('\n');
    }
    out
}

/// Parse a CSV produced by [`to_csv`] back into a table.
///
/// Fixed parameters not present in the file (the axis one) fall back to
/// defaults; re-emitting the parsed table reproduces the input byte for
/// byte.
pub fn parse_csv(text: &str) -> Result<SweepTable> {
    let mut axis: Option<AxisKind> = None;
    let mut rho = Rational::new(1, 2);
    let mut snr_db = 0.0f64;
    let mut lg_db: Option<f64> = Some(0.0);
    let mut theta0 = 0.0f64;
    let mut phi0 = 1.0f64;
    let mut n_hint = crate::scenario::DEFAULT_N_HINT;
    let mut receivers: Vec<Receiver> = Vec::new();
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut header_seen = false;

    for line in text.lines() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some((key, value)) = comment.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "axis" => axis = Some(value.parse()?),
                    "rho" => rho = parse_rational(value)?,
                    "snr_db" => snr_db = parse_float(value)?,
                    "lg_db" => {
                        lg_db = if value == "-inf" {
                            None
                        } else {
                            Some(parse_float(value)?)
                        }
                    }
                    "theta0" => theta0 = parse_float(value)?,
                    "phi0" => phi0 = parse_float(value)?,
                    "n_hint" => {
                        n_hint = value
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad n_hint {value:?}")))?
                    }
                    _ => {} // K annotations and other commentary
                }
            }
            continue;
        }
        if !header_seen {
            let mut cols = line.split(',');
            if cols.next() != Some("axis") {
                return Err(Error::Parse("expected header starting with 'axis'".into()));
            }
            let names: Vec<&str> = cols.collect();
            if names.last() != Some(&"reason") {
                return Err(Error::Parse("expected trailing 'reason' column".into()));
            }
            receivers = names[..names.len() - 1]
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()?;
            header_seen = true;
            continue;
        }
        let axis_kind = axis.ok_or_else(|| Error::Parse("missing '# axis =' line".into()))?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != receivers.len() + 2 {
            return Err(Error::Parse(format!(
                "row has {} fields, expected {}",
                fields.len(),
                receivers.len() + 2
            )));
        }
        let label = fields[0].to_string();
        let (value, k) = match axis_kind {
            AxisKind::Rho => {
                let r = parse_rational(&label)?;
                let g = derive_grid(r, 1)?;
                (*r.numer() as f64 / *r.denom() as f64, g.k)
            }
            _ => (parse_float(&label)?, None),
        };
        let reason_field = fields[fields.len() - 1];
        let mut reasons: Vec<&str> = if reason_field.is_empty() {
            Vec::new()
        } else {
            reason_field.split("; ").collect()
        };
        reasons.reverse();
        let cells = fields[1..fields.len() - 1]
            .iter()
            .map(|s| {
                let se = parse_float(s)?;
                let reason = if se.is_nan() {
                    reasons.pop().map(|r| r.to_string())
                } else {
                    None
                };
                Ok(SweepCell { se, reason })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(SweepRow {
            label,
            value,
            k,
            cells,
        });
    }

    let axis = axis.ok_or_else(|| Error::Parse("missing '# axis =' line".into()))?;
    if !header_seen {
        return Err(Error::Parse("missing header row".into()));
    }
    let fixed = Scenario::new(rho, db_to_linear(snr_db), lg_db.map_or(0.0, db_to_linear))?
        .with_phases(theta0, phi0)
        .with_n_hint(n_hint)?;
    Ok(SweepTable {
        axis,
        receivers,
        fixed,
        rows,
    })
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad float {s:?}")))
}

fn parse_rational(s: &str) -> Result<Rational> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))
}

/// Boundary curve as CSV: `snr_db,lg_db,reason` with `nan` plus a marker on
/// rows where the rates never cross.
pub fn boundary_to_csv(strategy: BoundaryStrategy, points: &[BoundaryPoint]) -> String {
    let (lo, hi) = BOUNDARY_LG_DB_RANGE;
    let mut out = String::new();
    out.push_str("# pd-relay hd/fd boundary\n");
    out.push_str(&format!("# strategy = {strategy}\n"));
    out.push_str(&format!("# lg_db_search_interval = {lo}:{hi}\n"));
    out.push_str("snr_db,lg_db,reason\n");
    for p in points {
        match p.lg_db {
            Some(lg) => out.push_str(&format!("{},{},\n", fmt_float(p.snr_db), fmt_float(lg))),
            None => out.push_str(&format!(
                "{},nan,no crossing in [{lo}; {hi}] dB\n",
                fmt_float(p.snr_db)
            )),
        }
    }
    out
}

/// Write a table to disk in the requested format.
pub fn write_table(table: &SweepTable, path: &Path, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(table),
        OutputFormat::PlotData => to_plot_data(table),
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::log2_1p;

    fn fixed(snr_db: f64, lg_db: f64) -> Scenario {
        Scenario::from_db(Rational::new(2, 3), snr_db, lg_db)
            .unwrap()
            .with_n_hint(90)
            .unwrap()
    }

    #[test]
    fn hd_column_matches_formula() {
        let spec = SweepSpec {
            axis: SweepAxis::SnrDb(linspace(-10.0, 20.0, 7)),
            fixed: fixed(0.0, 0.0),
            receivers: vec![Receiver::Hd],
        };
        let table = run_sweep(&spec).unwrap();
        for row in &table.rows {
            let snr = db_to_linear(row.value);
            let expect = 0.5 * log2_1p(2.0 * snr);
            assert_eq!(row.cells[0].se, expect);
        }
    }

    #[test]
    fn rho_sweep_gains_and_upper_bound() {
        let spec = SweepSpec {
            axis: SweepAxis::Rho(vec![
                Rational::new(1, 2),
                Rational::new(3, 5),
                Rational::new(2, 3),
                Rational::new(7, 10),
                Rational::new(3, 4),
            ]),
            fixed: fixed(15.0, -5.0),
            receivers: vec![Receiver::Ml, Receiver::Sic, Receiver::NoSi],
        };
        let table = run_sweep(&spec).unwrap();
        let hd = table.rows[0].cells[0].se;
        let ml_two_thirds = table.rows[2].cells[0].se;
        assert!(ml_two_thirds >= 1.2 * hd, "{ml_two_thirds} vs {hd}");
        for row in &table.rows {
            let nosi = row.cells[2].se;
            for cell in &row.cells {
                assert!(cell.se <= nosi + 1e-9, "row {}", row.label);
            }
        }
        // Echo counts recorded per row.
        assert_eq!(table.rows[0].k, Some(0));
        assert_eq!(table.rows[2].k, Some(1));
        assert_eq!(table.rows[4].k, Some(2));
    }

    #[test]
    fn per_cell_errors_do_not_abort() {
        let spec = SweepSpec {
            axis: SweepAxis::Rho(vec![Rational::new(2, 3), Rational::from_integer(1)]),
            fixed: fixed(10.0, 0.0),
            receivers: vec![Receiver::Lmmse, Receiver::Ml],
        };
        let table = run_sweep(&spec).unwrap();
        assert!(table.rows[0].cells[0].se.is_finite());
        assert!(table.rows[1].cells[0].se.is_nan());
        assert!(table.rows[1].cells[0].reason.is_some());
        assert!(table.rows[1].cells[1].se.is_finite()); // ml falls back to the closed form
    }

    #[test]
    fn sweep_validation_errors() {
        let spec = SweepSpec {
            axis: SweepAxis::SnrDb(vec![1.0]),
            fixed: fixed(0.0, 0.0),
            receivers: vec![Receiver::Hd],
        };
        assert!(run_sweep(&spec).is_err());

        let spec = SweepSpec {
            axis: SweepAxis::Rho(vec![Rational::new(1, 3), Rational::new(2, 3)]),
            fixed: fixed(0.0, 0.0),
            receivers: vec![Receiver::Hd],
        };
        assert!(run_sweep(&spec).is_err());

        let spec = SweepSpec {
            axis: SweepAxis::SnrDb(linspace(0.0, 1.0, 3)),
            fixed: fixed(0.0, 0.0),
            receivers: vec![],
        };
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let spec = SweepSpec {
            axis: SweepAxis::Rho(vec![
                Rational::new(1, 2),
                Rational::new(2, 3),
                Rational::new(3, 4),
                Rational::from_integer(1),
            ]),
            fixed: fixed(10.0, -3.0),
            receivers: vec![Receiver::Ml, Receiver::Lmmse, Receiver::Zf],
        };
        let table = run_sweep(&spec).unwrap();
        let emitted = to_csv(&table);
        let parsed = parse_csv(&emitted).unwrap();
        assert_eq!(to_csv(&parsed), emitted);

        // Same through a dB axis.
        let spec = SweepSpec {
            axis: SweepAxis::LgDb(linspace(-10.0, 10.0, 5)),
            fixed: fixed(10.0, 0.0),
            receivers: vec![Receiver::Ml, Receiver::Hd],
        };
        let table = run_sweep(&spec).unwrap();
        let emitted = to_csv(&table);
        assert_eq!(to_csv(&parse_csv(&emitted).unwrap()), emitted);

        // Zero loop gain serializes as lg_db = -inf and survives the trip.
        let mut fixed_nolg = fixed(10.0, 0.0);
        fixed_nolg.lg = 0.0;
        let spec = SweepSpec {
            axis: SweepAxis::SnrDb(linspace(0.0, 10.0, 3)),
            fixed: fixed_nolg,
            receivers: vec![Receiver::Ml],
        };
        let emitted = to_csv(&run_sweep(&spec).unwrap());
        assert!(emitted.contains("# lg_db = -inf"));
        assert_eq!(to_csv(&parse_csv(&emitted).unwrap()), emitted);
    }

    #[test]
    fn plot_data_has_two_sections() {
        let spec = SweepSpec {
            axis: SweepAxis::SnrDb(linspace(0.0, 10.0, 3)),
            fixed: fixed(0.0, 0.0),
            receivers: vec![Receiver::Hd, Receiver::FdMl],
        };
        let table = run_sweep(&spec).unwrap();
        let text = to_plot_data(&table);
        let mut sections = text.split("\n\n");
        let header = sections.next().unwrap();
        let data = sections.next().unwrap();
        assert!(header.lines().all(|l| l.starts_with('#')));
        let mut lines = data.lines();
        assert_eq!(lines.next().unwrap(), "axis hd fd-ml");
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn boundary_ml_asymptotes() {
        let points = find_boundary(BoundaryStrategy::Ml, &[-40.0, 40.0]).unwrap();
        let low = points[0].lg_db.unwrap();
        assert!((low - (-3.0103)).abs() < 0.1, "low-snr boundary {low}");
        let high = points[1].lg_db.unwrap();
        let expect = 10.0 * (db_to_linear(40.0) / 2.0).sqrt().log10();
        assert!((high - expect).abs() < 0.5, "high-snr boundary {high}");
    }

    #[test]
    fn boundary_ml_monotone() {
        let grid = linspace(-30.0, 50.0, 17);
        let points = find_boundary(BoundaryStrategy::Ml, &grid).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for p in points {
            let lg = p.lg_db.expect("ml boundary exists on this grid");
            assert!(lg >= prev - 1e-6);
            prev = lg;
        }
    }

    #[test]
    fn boundary_points_sit_on_the_curve() {
        for strategy in [
            BoundaryStrategy::Ml,
            BoundaryStrategy::Direct,
            BoundaryStrategy::DirectPc,
        ] {
            let points = find_boundary(strategy, &linspace(-20.0, 20.0, 5)).unwrap();
            for p in points {
                let lg = p.lg_db.expect("crossing exists at moderate snr");
                let snr = db_to_linear(p.snr_db);
                let fd = fd_rate(strategy, snr, db_to_linear(lg)).unwrap();
                let hd = 0.5 * log2_1p(2.0 * snr);
                assert!(
                    (fd - hd).abs() <= 1e-8,
                    "{strategy} snr_db={}: |gap| = {:e}",
                    p.snr_db,
                    (fd - hd).abs()
                );
            }
        }
    }

    #[test]
    fn fd_beats_hd_below_minus_three_db() {
        for snr_db in linspace(-40.0, 60.0, 26) {
            let snr = db_to_linear(snr_db);
            let fd = fd_rate(BoundaryStrategy::Ml, snr, db_to_linear(-3.11)).unwrap();
            let hd = 0.5 * log2_1p(2.0 * snr);
            assert!(fd > hd, "snr_db = {snr_db}: fd {fd} <= hd {hd}");
        }
    }

    #[test]
    fn direct_pc_never_beats_hd_at_moderate_coupling() {
        // The direct-decoding break-even loop gain tops out near -6.84 dB
        // (around snr = 4 dB); above that, half duplex wins at every snr.
        for lg_db in [-6.8, -5.0, 0.0, 10.0] {
            for snr_db in linspace(-20.0, 60.0, 161) {
                let snr = db_to_linear(snr_db);
                let fd = fd_rate(BoundaryStrategy::DirectPc, snr, db_to_linear(lg_db)).unwrap();
                let hd = 0.5 * log2_1p(2.0 * snr);
                assert!(
                    fd <= hd + 1e-12,
                    "lg_db = {lg_db}, snr_db = {snr_db}: fd {fd} > hd {hd}"
                );
            }
        }
        // Just below the peak of the break-even curve the direct decoder
        // still wins somewhere.
        let beats_hd_somewhere = linspace(-20.0, 60.0, 161).iter().any(|&snr_db| {
            let snr = db_to_linear(snr_db);
            let fd = fd_rate(BoundaryStrategy::DirectPc, snr, db_to_linear(-6.9)).unwrap();
            fd > 0.5 * log2_1p(2.0 * snr)
        });
        assert!(beats_hd_somewhere);
    }

    #[test]
    fn boundary_csv_marks_missing_crossings() {
        // At snr far above the interval cap the ml crossing leaves [-40, 40].
        let points = find_boundary(BoundaryStrategy::Ml, &[120.0]).unwrap();
        assert_eq!(points[0].lg_db, None);
        let csv = boundary_to_csv(BoundaryStrategy::Ml, &points);
        assert!(csv.contains("nan,no crossing"));
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-40.0, 60.0, 101);
        assert_eq!(v.len(), 101);
        assert_eq!(v[0], -40.0);
        assert_eq!(v[100], 60.0);
        assert!((v[1] - (-39.0)).abs() < 1e-12);
    }
}
