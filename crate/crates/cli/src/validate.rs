//! Oracle-equivalence and invariant suites.

use std::collections::BTreeMap;
use std::str::FromStr;

use multiprobe_core::bounds::{
    bounds_counting_probe, classical_channel_fidelity, output_state, output_state_in_frame, TABLE_LIMIT,
};
use multiprobe_core::gaussian::{symplectic_form, symplectic_spectrum_with, SHOT_NOISE};
use multiprobe_core::imagespace::block_class;
use multiprobe_core::prelude::*;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// `m <= 4`, reduced parameter grids.
    Quick,
    /// `m <= 6`, full grids and mutual probing.
    Full,
}

impl Scale {
    fn max_m(self) -> usize {
        match self {
            Scale::Quick => 4,
            Scale::Full => 6,
        }
    }
}

impl FromStr for Scale {
    type Err = CliError;

    fn from_str(s: &str) -> std::result::Result<Self, CliError> {
        match s {
            "quick" => Ok(Scale::Quick),
            "full" => Ok(Scale::Full),
            _ => Err(CliError::usage(format!("scale: expected quick or full, got `{s}`"))),
        }
    }
}

/// Knobs for negative testing of the suites themselves.
#[derive(Clone, Copy, Debug, Default)]
pub struct Context {
    /// Flip the sign of the first mode's block of the symplectic form.
    pub corrupt_omega: bool,
}

impl Context {
    fn omega(&self, n: usize) -> DMatrix<f64> {
        let mut o = symplectic_form(n);
        if self.corrupt_omega {
            o[(0, 1)] = -o[(0, 1)];
            o[(1, 0)] = -o[(1, 0)];
        }
        o
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Location of the worst deviation, or the error that stopped the suite.
    pub detail: String,
}

struct Tracker {
    checks: usize,
    max: f64,
    worst: String,
}

impl Tracker {
    fn new() -> Self {
        Self { checks: 0, max: 0.0, worst: String::new() }
    }

    fn record(&mut self, deviation: f64, at: impl FnOnce() -> String) {
        self.checks += 1;
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        if deviation > self.max || (self.checks == 1 && deviation == 0.0) {
            self.max = deviation;
            self.worst = at();
        }
    }
}

type Outcome = multiprobe_core::Result<()>;

type BlockClass = (usize, usize, usize);

fn suite(name: &'static str, tolerance: f64, body: impl FnOnce(&mut Tracker) -> Outcome) -> SuiteReport {
    let mut t = Tracker::new();
    match body(&mut t) {
        Ok(()) => SuiteReport {
            suite: name,
            passed: t.max <= tolerance,
            checks: t.checks,
            max_deviation: t.max,
            tolerance,
            detail: t.worst,
        },
        Err(e) => SuiteReport {
            suite: name,
            passed: false,
            checks: t.checks,
            max_deviation: f64::INFINITY,
            tolerance,
            detail: format!("error: {e}"),
        },
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn families() -> [ChannelFamily; 2] {
    [ChannelFamily::pure_loss(0.99, 0.97).unwrap(), ChannelFamily::additive_noise(0.02, 0.01).unwrap()]
}

fn chain(m: usize) -> String {
    if m < 10 {
        (1..=m).map(|k| char::from(b'0' + k as u8)).collect()
    } else {
        (1..=m).map(|k| k.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// Probes checked at every `m`: one GHZ block, TMSV pairs (odd `m` closes
/// with a coherent state), and `{3,3}` at `m = 6`.
pub fn partition_probes(m: usize, mu: f64) -> multiprobe_core::Result<Vec<(String, ProbeSpec)>> {
    let mut out = vec![(format!("{{{m}}}"), ProbeSpec::disjoint(chain(m).parse()?, mu))];
    if m >= 3 {
        let pairs = if m.is_multiple_of(2) {
            ProbeSpec::disjoint(tmsv_disjoint_partition(m)?, mu)
        } else {
            odd_m_disjoint_spec(m, OddStrategy::HybridCoherent, mu)?
        };
        out.push(("{2,...}".into(), pairs));
    }
    if m == 6 {
        out.push(("{3,3}".into(), ProbeSpec::disjoint("123|456".parse()?, mu)));
    }
    Ok(out)
}

/// Image spaces of the counting suite.
pub fn spaces(m: usize) -> multiprobe_core::Result<Vec<(String, ImageSpace)>> {
    Ok(vec![
        ("full".into(), ImageSpace::full(m)?),
        ("cpf:1".into(), ImageSpace::cpf(m, 1)?),
        ("cpf:2".into(), ImageSpace::cpf(m, 2)?),
        ("bcpf:1,2".into(), ImageSpace::bcpf(m, &[1, 2])?),
    ])
}

fn bona_fide(scale: Scale, ctx: &Context) -> SuiteReport {
    suite("bona-fide", multiprobe_core::gaussian::PHYSICAL_TOL, |t| {
        let fams = [
            ChannelFamily::pure_loss(0.99, 0.5).unwrap(),
            ChannelFamily::additive_noise(0.02, 0.2).unwrap(),
            ChannelFamily::thermal(0.9, 0.6, 0.95, 0.7).unwrap(),
        ];
        for fam in fams {
            for mu in [0.6, 5.0, 20.5] {
                for m in 2..=scale.max_m() {
                    let singles = DisjointPartition::with_singletons(m, (0..m).map(|k| vec![k]).collect())?;
                    let mut specs = vec![
                        ProbeSpec::disjoint(chain(m).parse()?, mu),
                        ProbeSpec::idler(IdlerPartition::new(singles, vec![1; m])?, mu),
                    ];
                    if m >= 3 {
                        specs.push(ProbeSpec::disjoint(tmsv_disjoint_partition(m)?, mu));
                    }
                    for spec in &specs {
                        let probe = assemble_probe(spec, m)?;
                        for pattern in ImageSpace::full(m)?.enumerate()? {
                            let out = output_state(&probe, &fam, &pattern)?;
                            let omega = ctx.omega(out.n_modes());
                            let nu = symplectic_spectrum_with(out.matrix(), &omega)?.min();
                            t.record(SHOT_NOISE - nu, || {
                                format!("{} {spec} pattern {pattern}: nu_min = {nu}", fam.kind())
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

fn ghz_outputs(m: usize, mu: f64, fam: &ChannelFamily) -> multiprobe_core::Result<Vec<(Pattern, CovMatrix)>> {
    let probe = assemble_probe(&ProbeSpec::disjoint(chain(m).parse()?, mu), m)?;
    ImageSpace::full(m)?.enumerate()?.into_iter().map(|p| Ok((p, output_state_in_frame(&probe, fam, &p)?))).collect()
}

fn fidelity_symmetry(scale: Scale) -> SuiteReport {
    suite("fidelity-symmetry-range", 1e-10, |t| {
        for fam in families() {
            for mu in [0.6, 20.5, 1e3] {
                for m in 2..=scale.max_m() {
                    let outs = ghz_outputs(m, mu, &fam)?;
                    for (i, (pa, a)) in outs.iter().enumerate() {
                        t.record((gaussian_fidelity(a, a)? - 1.0).abs(), || format!("F(a,a) m={m} mu={mu} {pa}"));
                        for (pb, b) in outs.iter().skip(i + 1).step_by(1 + m / 4) {
                            let ab = gaussian_fidelity(a, b)?;
                            let ba = gaussian_fidelity(b, a)?;
                            t.record((ab - ba).abs(), || format!("symmetry m={m} mu={mu} {pa} {pb}"));
                            t.record((ab - 1.0).max(-ab).max(0.0), || format!("range m={m} mu={mu} {pa} {pb}: {ab}"));
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

fn degeneracy(scale: Scale) -> SuiteReport {
    suite("degeneracy", 1e-10, |t| {
        for fam in families() {
            for m in 2..=scale.max_m() {
                for (label, spec) in partition_probes(m, 20.5)? {
                    let probe = assemble_probe(&spec, m)?;
                    let patterns = ImageSpace::full(m)?.enumerate()?;
                    let outs = patterns
                        .iter()
                        .map(|p| output_state(&probe, &fam, p))
                        .collect::<multiprobe_core::Result<Vec<_>>>()?;
                    let mut classes: BTreeMap<Vec<BlockClass>, (f64, f64)> = BTreeMap::new();
                    for i in 0..patterns.len() {
                        for j in i + 1..patterns.len() {
                            let key: Vec<_> = probe
                                .blocks()
                                .iter()
                                .map(|b| block_class(&patterns[i], &patterns[j], &b.channels))
                                .collect();
                            let f = fidelity_dense(&outs[i], &outs[j])?;
                            let e = classes.entry(key).or_insert((f, f));
                            e.0 = e.0.min(f);
                            e.1 = e.1.max(f);
                        }
                    }
                    for (key, (lo, hi)) in classes {
                        t.record(hi - lo, || format!("{} m={m} {label} class {key:?}", fam.kind()));
                    }
                }
            }
        }
        Ok(())
    })
}

fn multiplicativity(scale: Scale) -> SuiteReport {
    suite("block-multiplicativity", 1e-10, |t| {
        for fam in families() {
            for m in 3..=scale.max_m() {
                for (label, spec) in partition_probes(m, 20.5)?.into_iter().skip(1) {
                    let probe = assemble_probe(&spec, m)?;
                    let patterns = ImageSpace::full(m)?.enumerate()?;
                    let dense = FidelityTable::brute_force(&patterns, &probe, &fam)?;
                    let blocks = FidelityTable::blockwise(&patterns, &probe, &fam)?;
                    for (k, (a, b)) in dense.values().iter().zip(blocks.values()).enumerate() {
                        t.record(rel_dev(*a, *b), || format!("{} m={m} {label} pair #{k}", fam.kind()));
                    }
                }
            }
        }
        Ok(())
    })
}

fn monotonicity(scale: Scale) -> SuiteReport {
    suite("monotone-in-copies", 1e-12, |t| {
        let copies: Vec<f64> = (0..25).map(|k| 10f64.powf(k as f64 / 8.0)).collect();
        for fam in families() {
            for m in 2..=scale.max_m() {
                for (sl, space) in spaces(m)? {
                    for (pl, spec) in partition_probes(m, 20.5)? {
                        let probe = assemble_probe(&spec, m)?;
                        let mut prev: Option<BoundReport> = None;
                        for &c in &copies {
                            let r = bounds_counting_probe(&space, &probe, &fam, c)?;
                            if let Some(p) = &prev {
                                let up = (r.upper_raw - p.upper_raw) / p.upper_raw.max(f64::MIN_POSITIVE);
                                let lo = (r.lower_raw - p.lower_raw) / p.lower_raw.max(f64::MIN_POSITIVE);
                                t.record(up.max(lo).max(0.0), || format!("{} m={m} {sl} {pl} M={c}", fam.kind()));
                            }
                            prev = Some(r);
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

fn counting_vs_brute(scale: Scale) -> SuiteReport {
    suite("counting-vs-brute", 1e-10, |t| {
        for fam in families() {
            for m in 2..=scale.max_m() {
                for (sl, space) in spaces(m)? {
                    for (pl, spec) in partition_probes(m, 20.5)? {
                        let probe = assemble_probe(&spec, m)?;
                        for copies in [1.0, 10.0] {
                            let fast = bounds_counting_probe(&space, &probe, &fam, copies)?;
                            let slow = bounds_brute_force(&space, &probe, &fam, copies)?;
                            let d =
                                rel_dev(fast.upper_raw, slow.upper_raw).max(rel_dev(fast.lower_raw, slow.lower_raw));
                            t.record(d, || format!("{} m={m} {sl} {pl} M={copies}", fam.kind()));
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

fn closed_form_d2(scale: Scale) -> SuiteReport {
    suite("closed-form-d2", 1e-10, |t| {
        for fam in families() {
            for m in 2..=scale.max_m() {
                let space = ImageSpace::full(m)?;
                let (spec, closed): (ProbeSpec, Box<dyn Fn(f64) -> multiprobe_core::Result<BoundReport>>) =
                    if m % 2 == 0 {
                        (
                            ProbeSpec::disjoint(tmsv_disjoint_partition(m)?, 20.5),
                            Box::new(move |c| bounds_d2(&fam, 20.5, c, m)),
                        )
                    } else {
                        (
                            odd_m_disjoint_spec(m, OddStrategy::HybridCoherent, 20.5)?,
                            Box::new(move |c| bounds_d2_odd(&fam, 20.5, c, m, OddStrategy::HybridCoherent)),
                        )
                    };
                let probe = assemble_probe(&spec, m)?;
                for copies in [1.0, 10.0] {
                    let slow = bounds_brute_force(&space, &probe, &fam, copies)?;
                    let r = closed(copies)?;
                    let d = rel_dev(r.upper_raw, slow.upper_raw).max(rel_dev(r.lower_raw, slow.lower_raw));
                    t.record(d, || format!("{} m={m} M={copies}", fam.kind()));
                }
            }
        }
        Ok(())
    })
}

/// Start of the extrapolation ladder. The expansion parameter is `1 / (mu (1 - eta))`,
/// so this has to sit well above `1 / (1 - eta)` for the largest transmissivity.
pub const LIMIT_MU0: f64 = 1e6;

/// Polynomial extrapolation of `f(mu)` to `1/mu -> 0` from `mu0 * 2^k`, `k < 4`.
pub fn extrapolate_infinite(f: impl Fn(f64) -> multiprobe_core::Result<f64>, mu0: f64) -> multiprobe_core::Result<f64> {
    let hs: Vec<f64> = (0..4).map(|k| 1.0 / (mu0 * f64::powi(2.0, k))).collect();
    let mut p = hs.iter().map(|&h| f(1.0 / h)).collect::<multiprobe_core::Result<Vec<_>>>()?;
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (hs[i], hs[i + level]);
            p[i] = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
        }
    }
    Ok(p[0])
}

/// Grids of the closed-form oracle suite.
pub fn oracle_grid(scale: Scale) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    match scale {
        Scale::Quick => (vec![0.005, 0.02, 0.1], vec![0.9, 0.99, 0.999], vec![0.6, 20.5, 1e4]),
        Scale::Full => (
            vec![0.005, 0.01, 0.02, 0.05, 0.1],
            vec![0.9, 0.95, 0.97, 0.99, 0.999],
            vec![0.6, 1.0, 2.0, 5.0, 10.0, 20.5, 100.0, 1e3, 1e4],
        ),
    }
}

fn subfidelity_oracles(scale: Scale) -> SuiteReport {
    suite("subfidelity-oracles", 1e-9, |t| {
        let (nus, etas, mus) = oracle_grid(scale);
        for &nb in &nus {
            for &nt in nus.iter().filter(|&&nt| nt != nb) {
                let fam = ChannelFamily::additive_noise(nb, nt)?;
                for &mu in &mus {
                    let c = SubFidelityClass::F11;
                    let d = rel_dev(
                        subfidelity_numeric(&fam, mu, c)?,
                        subfidelity_closed_form(&fam, Energy::Finite(mu), c)?,
                    );
                    t.record(d, || format!("additive F11 nu=({nb},{nt}) mu={mu}"));
                }
                for c in [SubFidelityClass::F01, SubFidelityClass::F02, SubFidelityClass::F12] {
                    let limit = extrapolate_infinite(|mu| subfidelity_numeric(&fam, mu, c), LIMIT_MU0)?;
                    let d = rel_dev(limit, subfidelity_closed_form(&fam, Energy::Infinite, c)?);
                    t.record(d, || format!("additive {c:?} limit nu=({nb},{nt})"));
                }
            }
        }
        for &eb in &etas {
            for &et in etas.iter().filter(|&&et| et != eb) {
                let fam = ChannelFamily::pure_loss(eb, et)?;
                let c = SubFidelityClass::F02;
                for &mu in &mus {
                    let d = rel_dev(
                        subfidelity_numeric(&fam, mu, c)?,
                        subfidelity_closed_form(&fam, Energy::Finite(mu), c)?,
                    );
                    t.record(d, || format!("loss F02 eta=({eb},{et}) mu={mu}"));
                }
                let limit = extrapolate_infinite(|mu| subfidelity_numeric(&fam, mu, c), LIMIT_MU0)?;
                let d = rel_dev(limit, subfidelity_closed_form(&fam, Energy::Infinite, c)?);
                t.record(d, || format!("loss F02 limit eta=({eb},{et})"));
            }
        }
        Ok(())
    })
}

fn classical_closed_forms(scale: Scale) -> SuiteReport {
    suite("classical-closed-forms", 1e-12, |t| {
        let (nus, etas, _) = oracle_grid(scale);
        let zero = Pattern::new(1, 0)?;
        let one = Pattern::new(1, 1)?;
        for &eb in &etas {
            for &et in etas.iter().filter(|&&et| et != eb) {
                let fam = ChannelFamily::pure_loss(eb, et)?;
                for ns in [0.1f64, 1.0, 20.0, 100.0] {
                    let probe = CovMatrix::coherent(&[ns.sqrt()]);
                    let numeric =
                        gaussian_fidelity(&apply_pattern(&probe, &fam, &zero)?, &apply_pattern(&probe, &fam, &one)?)?;
                    t.record(rel_dev(numeric, classical_channel_fidelity(&fam, ns)?), || {
                        format!("loss eta=({eb},{et}) ns={ns}")
                    });
                }
            }
        }
        for &nb in &nus {
            for &nt in nus.iter().filter(|&&nt| nt != nb) {
                let fam = ChannelFamily::additive_noise(nb, nt)?;
                let probe = CovMatrix::vacuum(1);
                let numeric =
                    gaussian_fidelity(&apply_pattern(&probe, &fam, &zero)?, &apply_pattern(&probe, &fam, &one)?)?;
                t.record(rel_dev(numeric, classical_channel_fidelity(&fam, 20.0)?), || {
                    format!("additive nu=({nb},{nt})")
                });
            }
        }
        Ok(())
    })
}

fn mutual_vs_extended() -> SuiteReport {
    suite("mutual-vs-extended", 1e-12, |t| {
        for fam in families() {
            for m in [3usize, 4] {
                let nn = nn_partition(m)?;
                for space in [ImageSpace::cpf(m, 1)?, ImageSpace::full(m)?] {
                    let (partition, extended) = extend_for_mutual_probing(&nn, &space)?;
                    t.record((extended.len()? as f64 - space.len()? as f64).abs(), || format!("|U| m={m}"));
                    let probe = assemble_probe(&ProbeSpec::disjoint(partition.clone(), 20.5), partition.m())?;
                    let patterns = extended.enumerate()?;
                    if patterns.len() > TABLE_LIMIT {
                        continue;
                    }
                    let table = FidelityTable::brute_force(&patterns, &probe, &fam)?;
                    for copies in [1.0, 10.0] {
                        let slow = bounds_generic(&table, &extended.priors()?, copies)?;
                        let fast = bounds_mutual(&space, &nn, &fam, 20.5, copies)?;
                        let d = rel_dev(fast.upper_raw, slow.upper_raw).max(rel_dev(fast.lower_raw, slow.lower_raw));
                        t.record(d, || format!("{} m={m} |U|={} M={copies}", fam.kind(), patterns.len()));
                    }
                }
                if m % 2 == 0 {
                    let rounds = decompose_rounds(&nn).len();
                    t.record((rounds as f64 - 2.0).abs(), || format!("rounds m={m}: {rounds}"));
                }
            }
        }
        Ok(())
    })
}

/// Runs every suite for `scale`.
pub fn run(scale: Scale, ctx: &Context) -> Vec<SuiteReport> {
    let mut reports = vec![
        bona_fide(scale, ctx),
        fidelity_symmetry(scale),
        degeneracy(scale),
        multiplicativity(scale),
        monotonicity(scale),
        counting_vs_brute(scale),
        closed_form_d2(scale),
        subfidelity_oracles(scale),
        classical_closed_forms(scale),
    ];
    if scale == Scale::Full {
        reports.push(mutual_vs_extended());
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolation_exact_for_cubics() {
        let f = |mu: f64| Ok(2.0 + 3.0 / mu - 5.0 / (mu * mu) + 7.0 / (mu * mu * mu));
        assert!((extrapolate_infinite(f, 10.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn corrupted_omega_fails_bona_fide() {
        let r = bona_fide(Scale::Quick, &Context { corrupt_omega: true });
        assert!(!r.passed);
        assert!(r.max_deviation > 0.1);
        assert!(bona_fide(Scale::Quick, &Context::default()).passed);
    }

    #[test]
    fn rel_dev_edges() {
        assert_eq!(rel_dev(0.0, 0.0), 0.0);
        assert_eq!(rel_dev(1.0, 1.0), 0.0);
        assert!((rel_dev(1.0, 2.0) - 0.5).abs() < 1e-15);
    }
}
