//! Command-line interface for the partial-duplex relay analysis library.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pd_relay::rates::se_ml_recursion;
use pd_relay::scenario::{parse_rho, Rational, Scenario};
use pd_relay::sweep::{
    self, boundary_to_csv, find_boundary, linspace, run_sweep, BoundaryStrategy, OutputFormat,
    SweepAxis, SweepSpec,
};
use pd_relay::time_domain::{td_capacity, TdConfig, TdModel};
use pd_relay::{compute_rate, solve_agc, Receiver};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "pd-relay",
    version,
    about = "Spectral efficiency of a partial-duplex amplify-and-forward relay under self-interference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the relay gain-control fixed point.
    Agc(ScenarioArgs),
    /// Spectral efficiency of one receiver at one operating point.
    Rate {
        /// ml | direct | zf | lmmse | sic | nosi | hd | fd-ml | fd-direct | fd-direct-pc
        #[arg(long)]
        receiver: String,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Dump the structured channel matrices as complex CSV files
    /// (<prefix>.T.csv and <prefix>.Q.csv).
    Matrices {
        /// Output path prefix.
        #[arg(long)]
        dump: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Cross-check the time-domain channel model against the
    /// frequency-domain rate.
    TdCheck {
        /// Channels per period; the bandwidth ratio is (nch-1)/nch.
        #[arg(long)]
        nch: usize,
        #[arg(long, allow_negative_numbers = true)]
        snr_db: f64,
        #[arg(long, allow_negative_numbers = true)]
        lg_db: f64,
        /// Extra whole periods in the input block.
        #[arg(long, default_value_t = 300)]
        kappa: usize,
        /// Filter group delay in periods.
        #[arg(long, default_value_t = 5)]
        ell_factor: usize,
    },
    /// Evaluate receivers over a parameter sweep and write a table.
    Sweep(SweepArgs),
    /// Trace the loop gain at which full-duplex and half-duplex rates meet.
    Boundary(BoundaryArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Bandwidth ratio as a fraction ("2/3") or a decimal (snapped to the
    /// closest rational with denominator <= 1000).
    #[arg(long)]
    rho: Option<String>,
    /// Reference SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: f64,
    /// Loop gain in dB.
    #[arg(long, allow_negative_numbers = true)]
    lg_db: f64,
    /// Constant filter phase shift in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta0: f64,
    /// Per-subcarrier phase increment in radians.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    phi0: f64,
    /// Target number of occupied subcarriers for matrix paths.
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Args, Default)]
struct SweepArgs {
    /// rho | snr_db | lg_db
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated axis values (rationals for the rho axis).
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// Axis range start:stop:count (dB axes only).
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lg_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi0: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated receiver list.
    #[arg(long)]
    receivers: Option<String>,
    /// Output file path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | plot-data
    #[arg(long)]
    format: Option<String>,
    /// Key = value defaults; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Default)]
struct BoundaryArgs {
    /// ml | direct | direct_pc
    #[arg(long)]
    strategy: Option<String>,
    /// SNR grid start:stop:count in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db_range: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key = value defaults; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Agc(args) => cmd_agc(&args),
        Command::Rate { receiver, scenario } => cmd_rate(&receiver, &scenario),
        Command::Matrices { dump, scenario } => cmd_matrices(&dump, &scenario),
        Command::TdCheck {
            nch,
            snr_db,
            lg_db,
            kappa,
            ell_factor,
        } => cmd_td_check(nch, snr_db, lg_db, kappa, ell_factor),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Boundary(args) => cmd_boundary(args),
    }
}

fn scenario_from(args: &ScenarioArgs) -> Result<Scenario> {
    let rho_str = args
        .rho
        .as_deref()
        .ok_or_else(|| anyhow!("--rho is required for this command"))?;
    let (rho, snapped) = parse_rho(rho_str)?;
    if snapped {
        eprintln!("note: rho {rho_str} interpreted as {rho}");
    }
    Ok(Scenario::from_db(rho, args.snr_db, args.lg_db)?
        .with_phases(args.theta0, args.phi0)
        .with_n_hint(args.n)?)
}

fn cmd_agc(args: &ScenarioArgs) -> Result<()> {
    let scn = scenario_from(args)?;
    let sol = solve_agc(scn.rho, scn.lg, scn.snr)?;
    println!(
        "alpha_g={} mu={} residual={}",
        sol.alpha_g, sol.mu, sol.residual
    );
    Ok(())
}

fn cmd_rate(receiver: &str, args: &ScenarioArgs) -> Result<()> {
    let rx: Receiver = receiver.parse()?;
    let needs_rho = matches!(
        rx,
        Receiver::Ml
            | Receiver::Direct
            | Receiver::Zf
            | Receiver::Lmmse
            | Receiver::Sic
            | Receiver::NoSi
    );
    let scn = if needs_rho || args.rho.is_some() {
        scenario_from(args)?
    } else {
        // Half- and full-duplex receivers ignore the bandwidth ratio.
        Scenario::from_db(Rational::from_integer(1), args.snr_db, args.lg_db)?
            .with_phases(args.theta0, args.phi0)
            .with_n_hint(args.n)?
    };
    let rate = compute_rate(rx, &scn)?;
    println!(
        "se_bps_hz={} path={} alpha_g={} mu={}",
        rate.se, rate.path, rate.alpha_g, rate.mu
    );
    Ok(())
}

fn cmd_matrices(prefix: &Path, args: &ScenarioArgs) -> Result<()> {
    let scn = scenario_from(args)?;
    let cm = pd_relay::build_all(&scn)?;
    let write = |suffix: &str, m: &pd_relay::linalg::CMat| -> Result<PathBuf> {
        let mut path = prefix.as_os_str().to_owned();
        path.push(suffix);
        let path = PathBuf::from(path);
        let mut text = format!("# N={} P={}\n", cm.n, cm.p_off);
        for r in 0..m.rows() {
            let row: Vec<String> = (0..m.cols())
                .map(|c| {
                    let v = m.get(r, c);
                    format!("{:.15e},{:.15e}", v.re, v.im)
                })
                .collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    };
    let t_path = write(".T.csv", &cm.t)?;
    let q_path = write(".Q.csv", &cm.q)?;
    println!(
        "wrote {} and {} (N={} P={})",
        t_path.display(),
        q_path.display(),
        cm.n,
        cm.p_off
    );
    Ok(())
}

fn cmd_td_check(
    nch: usize,
    snr_db: f64,
    lg_db: f64,
    kappa: usize,
    ell_factor: usize,
) -> Result<()> {
    let lg = pd_relay::db_to_linear(lg_db);
    let snr = pd_relay::db_to_linear(snr_db);
    let model = TdModel::build(&TdConfig {
        n_ch: nch,
        lg,
        ell_factor,
        kappa,
        theta0: 0.0,
    })?;
    let td = td_capacity(&model, snr)?;
    let rho = Rational::new(nch as i64 - 1, nch as i64);
    let fd = se_ml_recursion(&Scenario::new(rho, snr, lg)?)?;
    println!(
        "se_td={} se_fd={} gap={} g={} agc_residual={} agc_iterations={} m_block={}",
        td.se,
        fd.se,
        (td.se - fd.se).abs(),
        model.g,
        model.agc_residual,
        model.agc_iterations,
        model.m_block
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Config-file merging for sweep and boundary
// ---------------------------------------------------------------------------

/// Plain `key = value` config; `#` starts a comment, keys are normalized so
/// `snr-db` and `snr_db` are the same key.
fn load_config(path: &Path) -> Result<HashMap<String, String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), idx + 1))?;
        map.insert(
            key.trim().replace('-', "_").to_lowercase(),
            value.trim().to_string(),
        );
    }
    Ok(map)
}

fn merge<T: Clone, E: std::fmt::Display>(
    flag: &Option<T>,
    config: &HashMap<String, String>,
    key: &str,
    parse: impl Fn(&str) -> std::result::Result<T, E>,
) -> Result<Option<T>> {
    if let Some(v) = flag {
        return Ok(Some(v.clone()));
    }
    match config.get(key) {
        Some(raw) => parse(raw)
            .map(Some)
            .map_err(|e| anyhow!("config key {key}: {e}")),
        None => Ok(None),
    }
}

fn merge_string(
    flag: &Option<String>,
    config: &HashMap<String, String>,
    key: &str,
) -> Option<String> {
    flag.clone().or_else(|| config.get(key).cloned())
}

fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("range must be start:stop:count, got {spec:?}");
    }
    let start: f64 = parts[0].parse().context("range start")?;
    let stop: f64 = parts[1].parse().context("range stop")?;
    let count: usize = parts[2].parse().context("range count")?;
    if count < 2 {
        bail!("range count must be at least 2");
    }
    Ok(linspace(start, stop, count))
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let axis_name = merge_string(&args.axis, &config, "axis")
        .ok_or_else(|| anyhow!("--axis is required (rho, snr_db or lg_db)"))?;
    let values = merge_string(&args.values, &config, "values");
    let range = merge_string(&args.range, &config, "range");

    let axis = match axis_name.as_str() {
        "rho" => {
            let list = values.ok_or_else(|| anyhow!("rho axis needs --values"))?;
            let mut rhos = Vec::new();
            for tok in list.split(',') {
                let tok = tok.trim();
                let (rho, snapped) = parse_rho(tok)?;
                if snapped {
                    eprintln!("note: rho {tok} interpreted as {rho}");
                }
                rhos.push(rho);
            }
            SweepAxis::Rho(rhos)
        }
        "snr_db" | "lg_db" => {
            let grid = match (values, range) {
                (Some(list), None) => list
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().context("axis value"))
                    .collect::<Result<Vec<_>>>()?,
                (None, Some(spec)) => parse_range(&spec)?,
                (Some(_), Some(_)) => bail!("give either --values or --range, not both"),
                (None, None) => bail!("axis {axis_name} needs --values or --range"),
            };
            if axis_name == "snr_db" {
                SweepAxis::SnrDb(grid)
            } else {
                SweepAxis::LgDb(grid)
            }
        }
        other => bail!("unknown axis {other:?}"),
    };

    let rho = match (&axis, merge_string(&args.rho, &config, "rho")) {
        (SweepAxis::Rho(_), _) => Rational::new(1, 2), // placeholder, replaced per row
        (_, Some(s)) => {
            let (rho, snapped) = parse_rho(&s)?;
            if snapped {
                eprintln!("note: rho {s} interpreted as {rho}");
            }
            rho
        }
        (_, None) => bail!("--rho is required when it is not the sweep axis"),
    };
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| anyhow!("--{name} is required when it is not the sweep axis"))
    };
    let snr_db = match &axis {
        SweepAxis::SnrDb(_) => 0.0,
        _ => need(
            "snr-db",
            merge(&args.snr_db, &config, "snr_db", f64::from_str)?,
        )?,
    };
    let lg_db = match &axis {
        SweepAxis::LgDb(_) => 0.0,
        _ => need(
            "lg-db",
            merge(&args.lg_db, &config, "lg_db", f64::from_str)?,
        )?,
    };
    let theta0 = merge(&args.theta0, &config, "theta0", f64::from_str)?.unwrap_or(0.0);
    let phi0 = merge(&args.phi0, &config, "phi0", f64::from_str)?.unwrap_or(1.0);
    let n = merge(&args.n, &config, "n", usize::from_str)?.unwrap_or(1000);
    let receivers = merge_string(&args.receivers, &config, "receivers")
        .ok_or_else(|| anyhow!("--receivers is required"))?
        .split(',')
        .map(|t| t.trim().parse::<Receiver>())
        .collect::<pd_relay::Result<Vec<_>>>()?;
    let out = merge_string(
        &args.out.clone().map(|p| p.display().to_string()),
        &config,
        "out",
    )
    .map(PathBuf::from)
    .ok_or_else(|| anyhow!("--out is required"))?;
    let format = match merge_string(&args.format, &config, "format") {
        Some(name) => name.parse::<OutputFormat>()?,
        None => OutputFormat::Csv,
    };

    let fixed = Scenario::from_db(rho, snr_db, lg_db)?
        .with_phases(theta0, phi0)
        .with_n_hint(n)?;
    let spec = SweepSpec {
        axis,
        fixed,
        receivers,
    };
    let table = run_sweep(&spec)?;
    sweep::write_table(&table, &out, format)?;
    println!(
        "wrote {} rows x {} receivers to {}",
        table.rows.len(),
        table.receivers.len(),
        out.display()
    );
    Ok(())
}

fn cmd_boundary(args: BoundaryArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let strategy = merge(
        &args
            .strategy
            .as_ref()
            .map(|s| s.parse::<BoundaryStrategy>())
            .transpose()?,
        &config,
        "strategy",
        BoundaryStrategy::from_str,
    )?
    .ok_or_else(|| anyhow!("--strategy is required (ml, direct or direct_pc)"))?;
    let range = merge_string(&args.snr_db_range, &config, "snr_db_range")
        .ok_or_else(|| anyhow!("--snr-db-range is required (start:stop:count)"))?;
    let out = merge_string(
        &args.out.clone().map(|p| p.display().to_string()),
        &config,
        "out",
    )
    .map(PathBuf::from)
    .ok_or_else(|| anyhow!("--out is required"))?;

    let grid = parse_range(&range)?;
    let points = find_boundary(strategy, &grid)?;
    let crossings = points.iter().filter(|p| p.lg_db.is_some()).count();
    std::fs::write(&out, boundary_to_csv(strategy, &points))
        .with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {} points ({} crossings) to {}",
        points.len(),
        crossings,
        out.display()
    );
    Ok(())
}
