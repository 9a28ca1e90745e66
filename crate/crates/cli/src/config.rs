//! Sweep configuration from flags and TOML files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use multiprobe_core::prelude::*;
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::presets::ProbeChoice;

/// Every configurable field, all optional. Flags and files both produce one of these.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub family: Option<String>,
    pub background: Option<f64>,
    pub target: Option<f64>,
    pub eps: Option<f64>,
    pub m: Option<usize>,
    pub space: Option<String>,
    pub probe: Option<String>,
    pub mu: Option<f64>,
    pub ns: Option<f64>,
    pub copies: Option<f64>,
    pub mbar: Option<f64>,
    pub grid: Option<Vec<String>>,
    pub compare: Option<bool>,
    pub buckets: Option<u32>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    /// Combines file and flag values; the file wins, and each conflict yields a warning.
    pub fn merge(file: PartialConfig, flags: PartialConfig) -> (PartialConfig, Vec<String>) {
        let mut warnings = Vec::new();
        macro_rules! pick {
            ($($field:ident),*) => {
                PartialConfig {
                    $($field: match (file.$field, flags.$field) {
                        (Some(f), Some(c)) => {
                            if f != c {
                                warnings.push(format!(
                                    "`{}` given as {:?} on the command line and {:?} in the config file; using the file value",
                                    stringify!($field), c, f
                                ));
                            }
                            Some(f)
                        }
                        (f, c) => f.or(c),
                    },)*
                }
            };
        }
        let merged = pick!(
            family, background, target, eps, m, space, probe, mu, ns, copies, mbar, grid, compare, buckets, out, format
        );
        (merged, warnings)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json-lines" => Ok(Format::Jsonl),
            _ => Err(CliError::usage(format!("format: expected csv or jsonl, got `{s}`"))),
        }
    }
}

/// Image space request, resolved once `m` is known.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSpec {
    Full,
    Cpf(usize),
    Bcpf(Vec<usize>),
    File(PathBuf),
}

impl SpaceSpec {
    pub fn build(&self, m: usize) -> Result<ImageSpace> {
        let space = match self {
            SpaceSpec::Full => ImageSpace::full(m)?,
            SpaceSpec::Cpf(k) => ImageSpace::cpf(m, *k)?,
            SpaceSpec::Bcpf(ks) => ImageSpace::bcpf(m, ks)?,
            SpaceSpec::File(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                let space = ImageSpace::parse_text(&text)?;
                if space.m() != m {
                    return Err(CliError::usage(format!(
                        "space file {} has patterns of length {}, expected m = {m}",
                        path.display(),
                        space.m()
                    )));
                }
                space
            }
        };
        Ok(space)
    }
}

impl FromStr for SpaceSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::usage(format!("space: expected full, cpf:K, bcpf:K1,K2,... or file:PATH, got `{s}`"));
        let s = s.trim();
        if s == "full" {
            return Ok(SpaceSpec::Full);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "cpf" => arg.trim().parse().map(SpaceSpec::Cpf).map_err(|_| bad()),
            "bcpf" => arg
                .split(',')
                .map(|k| k.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(SpaceSpec::Bcpf)
                .map_err(|_| bad()),
            "file" => Ok(SpaceSpec::File(PathBuf::from(arg))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Full => f.write_str("full"),
            SpaceSpec::Cpf(k) => write!(f, "cpf:{k}"),
            SpaceSpec::Bcpf(ks) => {
                let ks: Vec<String> = ks.iter().map(usize::to_string).collect();
                write!(f, "bcpf:{}", ks.join(","))
            }
            SpaceSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Parameters that may be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    Background,
    Target,
    Eps,
    M,
    Mu,
    Ns,
    Copies,
    Mbar,
}

impl FromStr for Param {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "background" => Param::Background,
            "target" => Param::Target,
            "eps" => Param::Eps,
            "m" => Param::M,
            "mu" => Param::Mu,
            "ns" => Param::Ns,
            "copies" | "M" => Param::Copies,
            "mbar" => Param::Mbar,
            _ => return Err(CliError::usage(format!("grid: unknown parameter `{s}`"))),
        })
    }
}

/// `param=start:stop:steps`, optionally suffixed `:log` for geometric spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub param: Param,
    pub values: Vec<f64>,
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| CliError::usage(format!("grid `{s}`: {why}"));
        let (name, range) = s.split_once('=').ok_or_else(|| bad("expected PARAM=START:STOP:STEPS"))?;
        let param: Param = name.trim().parse()?;
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            4 if parts[3] == "lin" => false,
            _ => return Err(bad("expected START:STOP:STEPS[:log]")),
        };
        let start: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
        let stop: f64 = parts[1].parse().map_err(|_| bad("stop is not a number"))?;
        let steps: usize = parts[2].parse().map_err(|_| bad("steps is not a positive integer"))?;
        if steps == 0 {
            return Err(bad("steps must be at least 1"));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        if log && (start <= 0.0 || stop <= 0.0) {
            return Err(bad("log spacing needs positive bounds"));
        }
        let values = (0..steps)
            .map(|i| {
                if steps == 1 {
                    return start;
                }
                let t = i as f64 / (steps - 1) as f64;
                if i == steps - 1 {
                    stop
                } else if log {
                    start * (stop / start).powf(t)
                } else {
                    start + (stop - start) * t
                }
            })
            .collect();
        Ok(Grid { param, values })
    }
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub family: ChannelKind,
    pub background: Option<f64>,
    pub target: Option<f64>,
    pub eps: Option<f64>,
    pub m: Option<usize>,
    pub space: SpaceSpec,
    pub probe: ProbeChoice,
    pub mu: Option<f64>,
    pub ns: Option<f64>,
    pub copies: Option<f64>,
    pub mbar: Option<f64>,
    pub grids: Vec<Grid>,
    pub compare: bool,
    pub buckets: u32,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Significant digits used to bucket fidelities in a census.
pub const DEFAULT_BUCKET_DIGITS: u32 = 10;

impl SweepConfig {
    /// Checks required fields. `need_resource` is false for the census, which
    /// has no copy number.
    pub fn resolve(p: PartialConfig, need_resource: bool) -> Result<Self> {
        let family: ChannelKind = p
            .family
            .as_deref()
            .ok_or_else(|| CliError::usage("missing `family` (pure-loss, additive-noise or thermal)"))?
            .parse()
            .map_err(|e| CliError::usage(format!("family: {e}")))?;
        let grids = p.grid.unwrap_or_default().iter().map(|g| g.parse()).collect::<Result<Vec<Grid>>>()?;
        let config = SweepConfig {
            family,
            background: p.background,
            target: p.target,
            eps: p.eps,
            m: p.m,
            space: p.space.as_deref().unwrap_or("full").parse()?,
            probe: p.probe.as_deref().ok_or_else(|| CliError::usage("missing `probe`"))?.parse()?,
            mu: p.mu,
            ns: p.ns,
            copies: p.copies,
            mbar: p.mbar,
            grids,
            compare: p.compare.unwrap_or(false),
            buckets: p.buckets.unwrap_or(DEFAULT_BUCKET_DIGITS),
            out: p.out,
            format: p.format.as_deref().map(str::parse).transpose()?.unwrap_or_default(),
        };
        config.check(need_resource)?;
        Ok(config)
    }

    fn swept(&self, param: Param) -> bool {
        self.grids.iter().any(|g| g.param == param)
    }

    fn check(&self, need_resource: bool) -> Result<()> {
        let has = |param: Param, scalar: bool| scalar || self.swept(param);
        for (param, scalar, name) in [
            (Param::Background, self.background.is_some(), "background"),
            (Param::Target, self.target.is_some(), "target"),
            (Param::M, self.m.is_some(), "m"),
        ] {
            if !has(param, scalar) {
                return Err(CliError::usage(format!("missing `{name}`")));
            }
        }
        if self.family == ChannelKind::Thermal && !has(Param::Eps, self.eps.is_some()) {
            return Err(CliError::usage("thermal family needs `eps`"));
        }
        let mu = has(Param::Mu, self.mu.is_some());
        let ns = has(Param::Ns, self.ns.is_some());
        if mu == ns {
            return Err(CliError::usage("give exactly one of `mu` and `ns` (scalar or grid)"));
        }
        let copies = has(Param::Copies, self.copies.is_some());
        let mbar = has(Param::Mbar, self.mbar.is_some());
        if need_resource && copies == mbar {
            return Err(CliError::usage("give exactly one of `copies` and `mbar` (scalar or grid)"));
        }
        for (i, g) in self.grids.iter().enumerate() {
            if self.grids[..i].iter().any(|h| h.param == g.param) {
                return Err(CliError::usage(format!("parameter {:?} is swept twice", g.param)));
            }
            if g.param == Param::M && g.values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                return Err(CliError::usage("grid over `m` must take positive integer values"));
            }
        }
        if self.buckets == 0 || self.buckets > 17 {
            return Err(CliError::usage("buckets: significant digits must be in 1..=17"));
        }
        Ok(())
    }

    /// Grid points in row-major order, the first grid varying slowest.
    pub fn points(&self) -> Vec<Point> {
        let base = Point {
            background: self.background.unwrap_or(f64::NAN),
            target: self.target.unwrap_or(f64::NAN),
            eps: self.eps,
            m: self.m.unwrap_or(0),
            mu: self.mu,
            ns: self.ns,
            copies: self.copies,
            mbar: self.mbar,
        };
        let mut points = vec![base];
        for g in &self.grids {
            points = points.into_iter().flat_map(|p| g.values.iter().map(move |&v| p.with(g.param, v))).collect();
        }
        points
    }
}

/// One fully specified evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub background: f64,
    pub target: f64,
    pub eps: Option<f64>,
    pub m: usize,
    pub mu: Option<f64>,
    pub ns: Option<f64>,
    pub copies: Option<f64>,
    pub mbar: Option<f64>,
}

impl Point {
    fn with(mut self, param: Param, v: f64) -> Self {
        match param {
            Param::Background => self.background = v,
            Param::Target => self.target = v,
            Param::Eps => self.eps = Some(v),
            Param::M => self.m = v as usize,
            Param::Mu => self.mu = Some(v),
            Param::Ns => self.ns = Some(v),
            Param::Copies => self.copies = Some(v),
            Param::Mbar => self.mbar = Some(v),
        }
        self
    }

    /// `mu = N_S + 1/2`.
    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or_else(|| self.ns.unwrap_or(f64::NAN) + 0.5)
    }

    pub fn ns(&self) -> f64 {
        self.ns.unwrap_or_else(|| self.mu.unwrap_or(f64::NAN) - 0.5)
    }
}
