//! Bound evaluation over a parameter grid.

use multiprobe_core::prelude::*;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Point, SweepConfig};
use crate::error::{CliError, Result};
use crate::presets::{resolve, Strategy};

/// Column set of a bounds table. Bump with any change to [`Row`].
pub const BOUNDS_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub family: &'static str,
    pub background: f64,
    pub target: f64,
    pub eps: Option<f64>,
    pub m: usize,
    pub space: String,
    pub probe: String,
    pub mu: f64,
    pub ns: f64,
    pub copies: f64,
    pub mbar: f64,
    pub method: &'static str,
    pub rounds: Option<usize>,
    pub lower_raw: f64,
    pub upper_raw: f64,
    pub lower: f64,
    pub upper: f64,
    pub classical_lower: Option<f64>,
    pub classical_upper: Option<f64>,
    pub delta_perr: Option<f64>,
}

pub const BOUNDS_COLUMNS: [&str; 20] = [
    "family",
    "background",
    "target",
    "eps",
    "m",
    "space",
    "probe",
    "mu",
    "ns",
    "copies",
    "mbar",
    "method",
    "rounds",
    "lower_raw",
    "upper_raw",
    "lower",
    "upper",
    "classical_lower",
    "classical_upper",
    "delta_perr",
];

/// Channel family at `point`. Identical channels are allowed here (every fidelity is then 1).
pub fn family_at(config: &SweepConfig, point: &Point) -> Result<ChannelFamily> {
    Ok(ChannelFamily::from_values_unchecked(config.family, point.background, point.target, point.eps)?)
}

/// Bounds at one grid point.
pub fn evaluate(config: &SweepConfig, point: &Point) -> Result<Row> {
    let family = family_at(config, point)?;
    let (mu, ns) = (point.mu(), point.ns());
    let m = point.m;
    let space = config.space.build(m)?;
    let strategy = resolve(&config.probe, m, mu)?;
    let copies = match (point.copies, point.mbar) {
        (Some(c), _) => c,
        (None, Some(mbar)) => strategy.copies_for(mbar),
        (None, None) => return Err(CliError::usage("missing `copies` or `mbar`")),
    };
    let mut report = match &strategy {
        Strategy::Quantum(spec) => bounds_auto(&space, spec, &family, copies)?,
        Strategy::Classical => classical_benchmark(&space, &family, ns, copies)?,
    };
    let mut classical = None;
    if config.compare {
        let c = classical_benchmark(&space, &family, ns, report.mbar)?;
        report.delta_perr = Some(guaranteed_advantage(&c, &report)?);
        classical = Some(c);
    }
    Ok(Row {
        family: config.family.name(),
        background: point.background,
        target: point.target,
        eps: point.eps,
        m,
        space: config.space.to_string(),
        probe: config.probe.to_string(),
        mu,
        ns,
        copies: report.copies,
        mbar: report.mbar,
        method: report.method.tag(),
        rounds: report.rounds,
        lower_raw: report.lower_raw,
        upper_raw: report.upper_raw,
        lower: report.lower,
        upper: report.upper,
        classical_lower: classical.as_ref().map(|c| c.lower),
        classical_upper: classical.as_ref().map(|c| c.upper),
        delta_perr: report.delta_perr,
    })
}

/// Every grid point, evaluated in parallel and returned in grid order.
pub fn run(config: &SweepConfig) -> Result<Vec<Row>> {
    config.points().par_iter().map(|p| evaluate(config, p)).collect()
}
