//! Histogram of pairwise output fidelities.

use std::collections::BTreeMap;

use multiprobe_core::bounds::{classical_channel_fidelity, fidelity_power};
use multiprobe_core::prelude::*;
use serde::Serialize;

use crate::config::{Point, SweepConfig};
use crate::error::{CliError, Result};
use crate::presets::{resolve, Strategy};
use crate::sweep::family_at;

pub const CENSUS_SCHEMA_VERSION: u32 = 1;

pub const CENSUS_COLUMNS: [&str; 7] = ["m", "probe", "mu", "fidelity", "multiplicity", "bucket_min", "bucket_max"];

/// One bucket: pairs `(i, j)`, `i != j`, whose fidelity rounds to `fidelity`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRow {
    pub m: usize,
    pub probe: String,
    pub mu: f64,
    pub fidelity: f64,
    pub multiplicity: u64,
    pub bucket_min: f64,
    pub bucket_max: f64,
}

/// Pairwise single-copy fidelities over the image space, upper triangle.
///
/// Mutual-probing probes use their extended disjoint representation.
pub fn fidelity_table(config: &SweepConfig, point: &Point) -> Result<FidelityTable> {
    let family = family_at(config, point)?;
    let space = config.space.build(point.m)?;
    Ok(match resolve(&config.probe, point.m, point.mu())? {
        Strategy::Classical => {
            let f = classical_channel_fidelity(&family, point.ns())?;
            let patterns = space.enumerate()?;
            let mut values = Vec::with_capacity(patterns.len() * patterns.len().saturating_sub(1) / 2);
            for (i, a) in patterns.iter().enumerate() {
                for b in &patterns[i + 1..] {
                    values.push(fidelity_power(f, hamming(a, b)? as f64));
                }
            }
            FidelityTable::from_values(patterns.len(), values)?
        }
        Strategy::Quantum(ProbeSpec::NonDisjoint { partition, mu }) if !partition.is_disjoint() => {
            let (extended_partition, extended) = extend_for_mutual_probing(&partition, &space)?;
            let probe = assemble_probe(&ProbeSpec::disjoint(extended_partition.clone(), mu), extended_partition.m())?;
            FidelityTable::blockwise(&extended.enumerate()?, &probe, &family)?
        }
        Strategy::Quantum(spec) => {
            let probe = assemble_probe(&spec, point.m)?;
            FidelityTable::blockwise(&space.enumerate()?, &probe, &family)?
        }
    })
}

/// Buckets the table to `digits` significant digits; multiplicities count ordered pairs.
pub fn census(config: &SweepConfig, point: &Point) -> Result<Vec<CensusRow>> {
    let table = fidelity_table(config, point)?;
    let mut buckets: BTreeMap<u64, (u64, f64, f64)> = BTreeMap::new();
    for &f in table.values() {
        let key: f64 = format!("{:.*e}", config.buckets as usize - 1, f).parse().expect("formatted float parses");
        let e = buckets.entry(key.to_bits()).or_insert((0, f, f));
        e.0 += 2;
        e.1 = e.1.min(f);
        e.2 = e.2.max(f);
    }
    Ok(buckets
        .into_iter()
        .map(|(key, (multiplicity, lo, hi))| CensusRow {
            m: point.m,
            probe: config.probe.to_string(),
            mu: point.mu(),
            fidelity: f64::from_bits(key),
            multiplicity,
            bucket_min: lo,
            bucket_max: hi,
        })
        .collect())
}

/// Censuses for every grid point, concatenated in grid order.
pub fn run(config: &SweepConfig) -> Result<Vec<CensusRow>> {
    let points = config.points();
    if points.is_empty() {
        return Err(CliError::usage("empty grid"));
    }
    let mut rows = Vec::new();
    for p in &points {
        rows.extend(census(config, p)?);
    }
    Ok(rows)
}
