//! Spectral-efficiency analysis of a partial-duplex amplify-and-forward relay
//! under self-interference.
//!
//! A partial-duplex relay retransmits its input in a band that partially
//! overlaps the receive band, so part of the output couples back into the
//! input as a chain of frequency-shifted echoes. Rather than writing those
//! echoes off as noise, the model here treats them as structured,
//! information-bearing components and computes the achievable spectral
//! efficiency at the destination for several receiver strategies.
//!
//! The crate is organized around two mutually validating computation paths:
//!
//! * [`freq_channel`] builds the structured intercarrier-interference
//!   matrices of the subcarrier model, and [`rates`] evaluates the optimal
//!   (ML) rate both through a scalar characteristic recursion and through a
//!   dense log-det over those matrices;
//! * [`time_domain`] assembles the sampled periodically time-varying channel
//!   directly and computes a block capacity that serves as an independent
//!   cross-check of the frequency-domain results.
//!
//! [`scenario`] defines the operating point (bandwidth ratio, SNR, loop
//! gain), [`agc`] resolves the relay's gain-control fixed point, and
//! [`sweep`] batch-evaluates rates over parameter grids, traces the
//! half-duplex/full-duplex boundary, and emits CSV or plot-ready tables.

pub mod agc;
pub mod error;
pub mod freq_channel;
pub mod linalg;
pub mod rates;
pub mod scenario;
pub mod sweep;
pub mod time_domain;

pub use agc::{solve_agc, AgcSolution};
pub use error::{Error, Result};
pub use freq_channel::{build_all, ChannelMatrices};
pub use rates::{compute_rate, RatePath, RateResult, Receiver};
pub use scenario::{
    db_to_linear, derive_grid, linear_to_db, parse_rho, Grid, Rational, Scenario, DEFAULT_N_HINT,
};
pub use sweep::{find_boundary, run_sweep, BoundaryPoint, BoundaryStrategy, SweepSpec, SweepTable};
pub use time_domain::{td_capacity, TdConfig, TdModel};
