//! Named probe presets and partition literals.

use std::fmt;
use std::str::FromStr;

use multiprobe_core::bounds::classical_probe_state;
use multiprobe_core::prelude::*;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// One GHZ block over all channels.
    FullGhz,
    /// Adjacent TMSV pairs; odd `m` ends with a three-channel GHZ block.
    TmsvDisjoint,
    /// TMSV pairs; odd `m` puts a coherent state on the last channel.
    TmsvHybrid,
    /// TMSV pairs; odd `m` puts a TMSV with one idler on the last channel.
    TmsvDisjointIdler,
    /// Nearest-neighbour ring of TMSVs, probed in rounds.
    Nn,
    /// Every channel pair.
    AllPairs,
    /// A TMSV with its idler on every channel.
    IdlerFull,
    /// Coherent states (pure loss) or vacuum (additive noise).
    Classical,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::FullGhz,
        Preset::TmsvDisjoint,
        Preset::TmsvHybrid,
        Preset::TmsvDisjointIdler,
        Preset::Nn,
        Preset::AllPairs,
        Preset::IdlerFull,
        Preset::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::FullGhz => "full-ghz",
            Preset::TmsvDisjoint => "tmsv-disjoint",
            Preset::TmsvHybrid => "tmsv-hybrid",
            Preset::TmsvDisjointIdler => "tmsv-disjoint-idler",
            Preset::Nn => "nn",
            Preset::AllPairs => "all-pairs",
            Preset::IdlerFull => "idler-full",
            Preset::Classical => "classical",
        }
    }
}

/// What the user asked for: a preset or a partition literal such as `12|34`,
/// `12*|3*` (idlers) or `12|23|31` (overlapping blocks).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProbeChoice {
    Preset(Preset),
    Literal(String),
}

impl FromStr for ProbeChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(p) = Preset::ALL.into_iter().find(|p| p.name() == s) {
            return Ok(ProbeChoice::Preset(p));
        }
        if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit() || "|*, ".contains(c)) {
            let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            return Err(CliError::usage(format!(
                "probe `{s}` is neither a preset ({}) nor a partition literal",
                names.join(", ")
            )));
        }
        Ok(ProbeChoice::Literal(s.to_string()))
    }
}

impl fmt::Display for ProbeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeChoice::Preset(p) => f.write_str(p.name()),
            ProbeChoice::Literal(s) => f.write_str(s),
        }
    }
}

/// A probe ready for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Quantum(ProbeSpec),
    Classical,
}

impl Strategy {
    /// Copies giving average channel use `mbar`.
    pub fn copies_for(&self, mbar: f64) -> f64 {
        match self {
            Strategy::Quantum(spec) => copies_for_mbar(spec, mbar),
            Strategy::Classical => mbar,
        }
    }

    /// Average channel use of `copies` probes.
    pub fn mbar_for(&self, copies: f64) -> f64 {
        match self {
            Strategy::Quantum(spec) => average_channel_use(spec, copies),
            Strategy::Classical => copies,
        }
    }

    /// The probe as assembled over `m` channels; classical probes become one
    /// classical block per channel.
    pub fn spec(&self, family: &ChannelFamily, m: usize, ns: f64) -> ProbeSpec {
        match self {
            Strategy::Quantum(spec) => spec.clone(),
            Strategy::Classical => ProbeSpec::Classical { m, state: classical_probe_state(family, ns) },
        }
    }
}

/// Builds the probe for `m` channels at squeezing `mu`.
pub fn resolve(choice: &ProbeChoice, m: usize, mu: f64) -> Result<Strategy> {
    let preset = match choice {
        ProbeChoice::Literal(s) => return literal(s, m, mu).map(Strategy::Quantum),
        ProbeChoice::Preset(p) => *p,
    };
    let spec = match preset {
        Preset::FullGhz => ProbeSpec::disjoint(DisjointPartition::new(m, vec![(0..m).collect()])?, mu),
        Preset::TmsvDisjoint => ProbeSpec::disjoint(tmsv_disjoint_partition(m)?, mu),
        Preset::TmsvHybrid | Preset::TmsvDisjointIdler if m.is_multiple_of(2) => {
            ProbeSpec::disjoint(tmsv_disjoint_partition(m)?, mu)
        }
        Preset::TmsvHybrid => odd_m_disjoint_spec(m, OddStrategy::HybridCoherent, mu)?,
        Preset::TmsvDisjointIdler => odd_m_disjoint_spec(m, OddStrategy::SingleIdler, mu)?,
        Preset::Nn => ProbeSpec::non_disjoint(nn_partition(m)?, mu),
        Preset::AllPairs => ProbeSpec::non_disjoint(all_pairs_partition(m)?, mu),
        Preset::IdlerFull => {
            let singles = DisjointPartition::with_singletons(m, (0..m).map(|k| vec![k]).collect())?;
            ProbeSpec::idler(IdlerPartition::new(singles, vec![1; m])?, mu)
        }
        Preset::Classical => return Ok(Strategy::Classical),
    };
    Ok(Strategy::Quantum(spec))
}

fn literal(s: &str, m: usize, mu: f64) -> Result<ProbeSpec> {
    let spec = if s.contains('*') {
        ProbeSpec::idler(s.parse::<IdlerPartition>()?, mu)
    } else {
        match s.parse::<DisjointPartition>() {
            Ok(p) => ProbeSpec::disjoint(p, mu),
            Err(disjoint_err) => match s.parse::<NonDisjointPartition>() {
                Ok(p) if !p.is_disjoint() => ProbeSpec::non_disjoint(p, mu),
                _ => return Err(disjoint_err.into()),
            },
        }
    };
    if spec.m() != m {
        return Err(CliError::usage(format!("probe `{s}` covers {} channels but m = {m}", spec.m())));
    }
    Ok(spec)
}
