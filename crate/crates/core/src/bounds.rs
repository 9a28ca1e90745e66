//! Error-probability bounds for pattern discrimination.
//!
//! With fidelities `F_ij` between single-copy outputs and `M` copies,
//!
//! * upper: `Σ_{i≠j} sqrt(π_i π_j) F_ij^M`
//! * lower: `½ Σ_{i≠j} π_i π_j F_ij^{2M}`
//!
//! Raw values are kept alongside values clipped to `[0, 1]`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::channels::{apply_pattern_in_frame, apply_pattern_with_idlers, ChannelFamily, ChannelKind, Pattern};
use crate::combinatorics::pair_count;
use crate::gaussian::{
    check_energy, collective_modes, fidelity_dense, gaussian_fidelity, ghz_cm_collective, CovMatrix,
};
use crate::imagespace::{block_class, ImageSpace, SpaceKind};
use crate::probes::{
    assemble_probe, average_channel_use, decompose_rounds, extend_for_mutual_probing, BlockState, ChannelCover,
    ClassicalState, IdlerPartition, NonDisjointPartition, OddStrategy, Probe, ProbeBlock, ProbeSpec,
};
use crate::{Error, Result};

/// Largest image space for which pairwise tables are built.
pub const TABLE_LIMIT: usize = 4096;
/// Relative tolerance when matching average channel use between reports.
pub const MBAR_TOL: f64 = 1e-9;

/// How a report was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Brute,
    Counting,
    ClosedFormD2,
    Mutual,
    Classical,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Counting => "counting",
            Method::ClosedFormD2 => "closed-form-D2",
            Method::Mutual => "mutual",
            Method::Classical => "classical",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub lower_raw: f64,
    pub upper_raw: f64,
    pub lower: f64,
    pub upper: f64,
    /// Probe copies `M`.
    pub copies: f64,
    /// Average channel use `M̄`.
    pub mbar: f64,
    pub delta_perr: Option<f64>,
    pub method: Method,
    /// Disjoint rounds per probing, for mutual probes.
    pub rounds: Option<usize>,
}

impl BoundReport {
    fn new(lower_raw: f64, upper_raw: f64, copies: f64, mbar: f64, method: Method) -> Self {
        let upper = upper_raw.clamp(0.0, 1.0);
        let lower = lower_raw.clamp(0.0, 1.0).min(upper);
        Self { lower_raw, upper_raw, lower, upper, copies, mbar, delta_perr: None, method, rounds: None }
    }

    fn with_mbar(mut self, mbar: f64) -> Self {
        self.mbar = mbar;
        self
    }
}

fn check_copies(copies: f64) -> Result<()> {
    if !(copies >= 1.0 && copies.is_finite()) {
        return Err(Error::InvalidPartition(format!("copy number {copies} must be finite and >= 1")));
    }
    Ok(())
}

/// `f^p`, through logarithms so tiny fidelities underflow to 0 cleanly.
pub fn fidelity_power(f: f64, p: f64) -> f64 {
    if f <= 0.0 {
        0.0
    } else if f >= 1.0 {
        1.0
    } else {
        libm::exp(p * libm::log(f))
    }
}

/// Fidelities between distinct patterns, upper triangle in row order.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityTable {
    n: usize,
    values: Vec<f64>,
}

impl FidelityTable {
    /// `values[k]` for pairs `(0,1), (0,2), ..., (1,2), ...`.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::Dimension { expected: n * n.saturating_sub(1) / 2, found: values.len() });
        }
        if let Some(f) = values.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::Numeric(format!("fidelity {f} outside [0, 1]")));
        }
        Ok(Self { n, values })
    }

    fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        if n > TABLE_LIMIT {
            return Err(Error::Capacity { requested: n, limit: TABLE_LIMIT });
        }
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                values.push(f(i, j)?);
            }
        }
        Ok(Self { n, values })
    }

    /// Dense fidelity of the full output states for every pair.
    pub fn brute_force(patterns: &[Pattern], probe: &Probe, family: &ChannelFamily) -> Result<Self> {
        let outputs = patterns.iter().map(|p| output_state_in_frame(probe, family, p)).collect::<Result<Vec<_>>>()?;
        Self::from_fn(patterns.len(), |i, j| fidelity_dense(&outputs[i], &outputs[j]))
    }

    /// Products of memoised block fidelities, one evaluation per block class.
    pub fn blockwise(patterns: &[Pattern], probe: &Probe, family: &ChannelFamily) -> Result<Self> {
        let mut cache = BlockFidelities::new(*family);
        Self::from_fn(patterns.len(), |i, j| {
            probe.blocks().iter().try_fold(1.0, |acc, b| {
                let (v, u, d) = block_class(&patterns[i], &patterns[j], &b.channels);
                Ok(acc * cache.get(b, v, u, d)?)
            })
        })
    }

    pub fn n_patterns(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j || i >= self.n || j >= self.n {
            return None;
        }
        let (i, j) = (i.min(j), i.max(j));
        Some(self.values[i * (2 * self.n - i - 1) / 2 + (j - i - 1)])
    }

    /// Upper-triangle values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Output of `probe` after the channel pattern `pattern`.
pub fn output_state(probe: &Probe, family: &ChannelFamily, pattern: &Pattern) -> Result<CovMatrix> {
    apply_pattern_with_idlers(&probe.covariance()?, family, pattern, &probe.layout())
}

/// [`output_state`] in the probe's collective frame; same fidelities, better conditioned.
pub fn output_state_in_frame(probe: &Probe, family: &ChannelFamily, pattern: &Pattern) -> Result<CovMatrix> {
    apply_pattern_in_frame(&probe.covariance_in_frame()?, &probe.frame(), family, pattern, &probe.layout())
}

type BlockKey = (usize, usize, u8, u64, usize, usize, usize);

/// Memoised fidelity of a single block between two local sub-patterns of class `(v, u, d)`.
///
/// Blocks are permutation symmetric over their probe modes, so the class fixes
/// the fidelity.
#[derive(Clone, Debug)]
pub struct BlockFidelities {
    family: ChannelFamily,
    cache: BTreeMap<BlockKey, f64>,
}

impl BlockFidelities {
    pub fn new(family: ChannelFamily) -> Self {
        Self { family, cache: BTreeMap::new() }
    }

    pub fn get(&mut self, block: &ProbeBlock, v: usize, u: usize, d: usize) -> Result<f64> {
        let (v, u) = (v.min(u), v.max(u));
        let (tag, bits) = match block.state {
            BlockState::Ghz { mu } => (0u8, mu.to_bits()),
            BlockState::Classical(ClassicalState::Vacuum) => (1, 0),
            BlockState::Classical(ClassicalState::Coherent(a)) => (2, a.to_bits()),
        };
        let key = (block.channels.len(), block.idlers, tag, bits, v, u, d);
        if let Some(&f) = self.cache.get(&key) {
            return Ok(f);
        }
        let f = block_fidelity(block, &self.family, v, u, d)?;
        self.cache.insert(key, f);
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }
}

/// Local representatives `a = 1^v 0^(n-v)` and `b` shifted to overlap `a` in `(v+u-d)/2` places.
fn representatives(n: usize, v: usize, u: usize, d: usize) -> Result<(Pattern, Pattern)> {
    if !(v + u + d).is_multiple_of(2) || d > v + u || v + u > n + (v + u - d) / 2 || d < v.abs_diff(u) {
        return Err(Error::InvalidPartition(format!("no sub-patterns of class ({v}, {u}, {d}) on {n} channels")));
    }
    let overlap = (v + u - d) / 2;
    let a: Vec<bool> = (0..n).map(|k| k < v).collect();
    let b: Vec<bool> = (0..n).map(|k| k >= v - overlap && k < v - overlap + u).collect();
    Ok((Pattern::from_bits(&a)?, Pattern::from_bits(&b)?))
}

fn block_fidelity(block: &ProbeBlock, family: &ChannelFamily, v: usize, u: usize, d: usize) -> Result<f64> {
    if d == 0 {
        return Ok(1.0);
    }
    let (a, b) = representatives(block.channels.len(), v, u, d)?;
    let cm = block.covariance_in_frame()?;
    let frame = block.frame();
    let layout = block.local_layout();
    let out_a = apply_pattern_in_frame(&cm, &frame, family, &a, &layout)?;
    let out_b = apply_pattern_in_frame(&cm, &frame, family, &b, &layout)?;
    gaussian_fidelity(&out_a, &out_b)
}

/// Bounds from an explicit fidelity table and priors.
pub fn bounds_generic(table: &FidelityTable, priors: &[f64], copies: f64) -> Result<BoundReport> {
    check_copies(copies)?;
    let n = table.n_patterns();
    if priors.len() != n {
        return Err(Error::Dimension { expected: n, found: priors.len() });
    }
    let uniform = priors.windows(2).all(|w| w[0] == w[1]);
    let (mut upper, mut lower) = (0.0, 0.0);
    if uniform {
        for &f in table.values() {
            upper += fidelity_power(f, copies);
            lower += fidelity_power(f, 2.0 * copies);
        }
        let n = n as f64;
        // Both sums run over unordered pairs, hence the factors of 2.
        upper *= 2.0 / n;
        lower *= 2.0 / (2.0 * n * n);
    } else {
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let f = table.values()[k];
                k += 1;
                upper += 2.0 * libm::sqrt(priors[i] * priors[j]) * fidelity_power(f, copies);
                lower += priors[i] * priors[j] * fidelity_power(f, 2.0 * copies);
            }
        }
    }
    Ok(BoundReport::new(lower, upper, copies, copies, Method::Brute))
}

/// Generic bounds by dense brute force over every pattern pair.
pub fn bounds_brute_force(
    space: &ImageSpace,
    probe: &Probe,
    family: &ChannelFamily,
    copies: f64,
) -> Result<BoundReport> {
    let patterns = space.enumerate()?;
    let table = FidelityTable::brute_force(&patterns, probe, family)?;
    Ok(bounds_generic(&table, &space.priors()?, copies)?.with_mbar(average_channel_use(probe, copies)))
}

/// Bounds by degeneracy counting over block classes.
///
/// Sums `Π_j f_j(v_j, u_j, d_j)^M` over block occupancies weighted by the number
/// of pattern pairs realising them, excluding identical pairs. Needs a disjoint
/// probe and a uniform full, CPF or bounded-CPF space.
pub fn bounds_via_counting(
    space: &ImageSpace,
    probe_spec: &ProbeSpec,
    family: &ChannelFamily,
    copies: f64,
) -> Result<BoundReport> {
    let probe = assemble_probe(probe_spec, space.m())?;
    bounds_counting_probe(space, &probe, family, copies)
}

/// [`bounds_via_counting`] for an assembled probe.
pub fn bounds_counting_probe(
    space: &ImageSpace,
    probe: &Probe,
    family: &ChannelFamily,
    copies: f64,
) -> Result<BoundReport> {
    check_copies(copies)?;
    if !space.is_uniform() || matches!(space.kind(), SpaceKind::Custom) {
        return Err(Error::Unsupported("counting needs a uniform full, CPF or bounded-CPF space".into()));
    }
    if !probe.is_disjoint() {
        return Err(Error::Unsupported("counting needs disjoint blocks".into()));
    }
    if probe.m() != space.m() {
        return Err(Error::Dimension { expected: space.m(), found: probe.m() });
    }
    let m = space.m();
    let mut cache = BlockFidelities::new(*family);
    // state[(v, u, nonzero)] -> (Σ F^M, Σ F^2M)
    let idx = |v: usize, u: usize, nz: usize| (v * (m + 1) + u) * 2 + nz;
    let mut state = alloc::vec![(0.0f64, 0.0f64); (m + 1) * (m + 1) * 2];
    state[idx(0, 0, 0)] = (1.0, 1.0);
    let mut reach = 0;
    for block in probe.blocks() {
        let n = block.channels.len();
        let mut next = alloc::vec![(0.0f64, 0.0f64); state.len()];
        let mut terms: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
        for bv in 0..=n {
            for bu in 0..=n {
                for t in bv.max(bu)..=(bv + bu).min(n) {
                    let d = 2 * t - bv - bu;
                    let count = pair_count(n, bv, bu, t) as f64;
                    let f = cache.get(block, bv, bu, d)?;
                    terms.push((bv, bu, d, count * fidelity_power(f, copies), count * fidelity_power(f, 2.0 * copies)));
                }
            }
        }
        for v in 0..=reach {
            for u in 0..=reach {
                for nz in 0..2 {
                    let (s1, s2) = state[idx(v, u, nz)];
                    if s1 == 0.0 && s2 == 0.0 {
                        continue;
                    }
                    for &(bv, bu, d, w1, w2) in &terms {
                        let k = idx(v + bv, u + bu, usize::from(nz == 1 || d > 0));
                        next[k].0 += s1 * w1;
                        next[k].1 += s2 * w2;
                    }
                }
            }
        }
        reach += n;
        state = next;
    }
    let ks = space.weights();
    let (mut s1, mut s2) = (0.0, 0.0);
    for &v in &ks {
        for &u in &ks {
            let (a, b) = state[idx(v, u, 1)];
            s1 += a;
            s2 += b;
        }
    }
    let n = space.len()? as f64;
    let report =
        BoundReport::new(s2 / (2.0 * n * n), s1 / n, copies, average_channel_use(probe, copies), Method::Counting);
    Ok(report)
}

/// Two-mode sub-fidelity classes of a TMSV pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubFidelityClass {
    /// `00` vs `01`.
    F01,
    /// `00` vs `11`.
    F02,
    /// `01` vs `10`.
    F11,
    /// `01` vs `11`.
    F12,
}

impl SubFidelityClass {
    pub const ALL: [SubFidelityClass; 4] =
        [SubFidelityClass::F01, SubFidelityClass::F02, SubFidelityClass::F11, SubFidelityClass::F12];

    /// Representative patterns.
    pub fn patterns(self) -> (Pattern, Pattern) {
        let (a, b) = match self {
            SubFidelityClass::F01 => (0b00, 0b01),
            SubFidelityClass::F02 => (0b00, 0b11),
            SubFidelityClass::F11 => (0b01, 0b10),
            SubFidelityClass::F12 => (0b01, 0b11),
        };
        (Pattern::new(2, a).expect("2-bit"), Pattern::new(2, b).expect("2-bit"))
    }
}

/// Squeezing at which a closed form is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    Finite(f64),
    Infinite,
}

/// Numeric TMSV sub-fidelity at finite `mu`.
pub fn subfidelity_numeric(family: &ChannelFamily, mu: f64, class: SubFidelityClass) -> Result<f64> {
    let v = ghz_cm_collective(2, mu)?;
    let frame = collective_modes(2);
    let (a, b) = class.patterns();
    let layout = crate::channels::IdlerLayout::unassisted(2);
    let out_a = apply_pattern_in_frame(&v, &frame, family, &a, &layout)?;
    let out_b = apply_pattern_in_frame(&v, &frame, family, &b, &layout)?;
    gaussian_fidelity(&out_a, &out_b)
}

/// Closed-form TMSV sub-fidelities where one is known.
///
/// Additive noise: `F01`, `F02`, `F12` in the infinite-squeezing limit and `F11`
/// at any squeezing. Pure loss: `F02` at any squeezing and its limit; `F01`,
/// `F11`, `F12` vanish in the limit.
pub fn subfidelity_closed_form(family: &ChannelFamily, energy: Energy, class: SubFidelityClass) -> Result<f64> {
    if let Energy::Finite(mu) = energy {
        check_energy(mu)?;
    }
    match family.kind() {
        ChannelKind::AdditiveNoise => {
            let (nb, nt) = (family.background().nu(), family.target().nu());
            let limit01 = |nb: f64, nt: f64| 2.0 * libm::sqrt(2.0 * nb * (nb + nt)) / (3.0 * nb + nt);
            match (class, energy) {
                (SubFidelityClass::F01, Energy::Infinite) => Ok(limit01(nb, nt)),
                (SubFidelityClass::F12, Energy::Infinite) => Ok(limit01(nt, nb)),
                (SubFidelityClass::F02, Energy::Infinite) => Ok(2.0 * libm::sqrt(nt * nb) / (nb + nt)),
                (SubFidelityClass::F11, Energy::Infinite) => Ok(1.0),
                (SubFidelityClass::F11, Energy::Finite(mu)) => {
                    let theta = 2.0 * nb * nt + 1.0 + 2.0 * mu * (nb + nt);
                    let xi_m = theta - 1.0 - (nb - nt);
                    let xi_p = theta - 1.0 + (nb - nt);
                    Ok(1.0 / (theta - libm::sqrt(xi_m * xi_p)))
                }
                _ => Err(Error::NoClosedForm),
            }
        }
        ChannelKind::PureLoss => {
            let (eb, et) = (family.background().tau(), family.target().tau());
            match (class, energy) {
                (SubFidelityClass::F02, Energy::Finite(mu)) => {
                    let ns = mu - 0.5;
                    let k1 = eb * et * (et - 1.0) * (eb - 1.0);
                    let base = 1.0 - ns * (eb + et - 2.0) * (eb + et);
                    let k2 = base + 4.0 * ns * ns * k1;
                    Ok((2.0 * ns * libm::sqrt(k1) + libm::sqrt(k2)) / base)
                }
                (SubFidelityClass::F02, Energy::Infinite) => {
                    let s = eb + et;
                    Ok(4.0 * libm::sqrt(eb * et * (eb - 1.0) * (et - 1.0) / ((s - 2.0) * (s - 2.0) * s * s)))
                }
                (_, Energy::Infinite) => Ok(0.0),
                _ => Err(Error::NoClosedForm),
            }
        }
        ChannelKind::Thermal => Err(Error::NoClosedForm),
    }
}

/// The four TMSV sub-fidelities, each raised to `p`.
fn d2_sum(f: &BTreeMap<SubFidelityClass, f64>, p: f64) -> f64 {
    let g = |c| fidelity_power(f[&c], p);
    g(SubFidelityClass::F01) + g(SubFidelityClass::F12) + 0.5 * (g(SubFidelityClass::F11) + g(SubFidelityClass::F02))
}

fn d2_fidelities(family: &ChannelFamily, mu: f64) -> Result<BTreeMap<SubFidelityClass, f64>> {
    SubFidelityClass::ALL.iter().map(|&c| Ok((c, subfidelity_numeric(family, mu, c)?))).collect()
}

impl PartialOrd for SubFidelityClass {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SubFidelityClass {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

/// `D₂[M]^{m/2} - 1`, computed without cancellation.
fn d2_power(x: f64, half_m: f64) -> f64 {
    libm::expm1(half_m * libm::log1p(x))
}

/// Closed-form bounds for TMSV pairs on a uniform full space with even `m`:
/// `UB = D₂[M]^{m/2} - 1`, `LB = (D₂[2M]^{m/2} - 1)/2^{m+1}`.
pub fn bounds_d2(family: &ChannelFamily, mu: f64, copies: f64, m: usize) -> Result<BoundReport> {
    check_copies(copies)?;
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::InvalidPartition(format!("D2 bounds need even m, got {m}")));
    }
    let f = d2_fidelities(family, mu)?;
    let half = m as f64 / 2.0;
    let upper = d2_power(d2_sum(&f, copies), half);
    let lower = d2_power(d2_sum(&f, 2.0 * copies), half) / libm::pow(2.0, m as f64 + 1.0);
    Ok(BoundReport::new(lower, upper, copies, copies, Method::ClosedFormD2))
}

/// Odd-`m` closed form `(1 + F_x^M) D₂[M]^{(m-1)/2} - 1`, with `F_x` the
/// single-channel fidelity of the coherent or idler-assisted last channel.
pub fn bounds_d2_odd(
    family: &ChannelFamily,
    mu: f64,
    copies: f64,
    m: usize,
    strategy: OddStrategy,
) -> Result<BoundReport> {
    check_copies(copies)?;
    if m < 3 || m.is_multiple_of(2) {
        return Err(Error::InvalidPartition(format!("odd-m D2 bounds need odd m >= 3, got {m}")));
    }
    let f = d2_fidelities(family, mu)?;
    let probe = assemble_probe(&crate::probes::odd_m_disjoint_spec(m, strategy, mu)?, m)?;
    let last = probe.blocks().last().expect("odd-m probe has a last block");
    let fx = BlockFidelities::new(*family).get(last, 0, 1, 1)?;
    let half = (m - 1) as f64 / 2.0;
    let d_odd = |p: f64| {
        let even = libm::exp(half * libm::log1p(d2_sum(&f, p)));
        (1.0 + fidelity_power(fx, p)) * even - 1.0
    };
    let upper = d_odd(copies);
    let lower = d_odd(2.0 * copies) / libm::pow(2.0, m as f64 + 1.0);
    Ok(BoundReport::new(lower, upper, copies, copies, Method::ClosedFormD2))
}

/// Bounds for a mutual-probing probe on its extended disjoint representation.
pub fn bounds_mutual(
    space: &ImageSpace,
    d: &NonDisjointPartition,
    family: &ChannelFamily,
    mu: f64,
    copies: f64,
) -> Result<BoundReport> {
    check_copies(copies)?;
    let (partition, extended) = extend_for_mutual_probing(d, space)?;
    let m_ext = partition.m();
    let probe = assemble_probe(&ProbeSpec::disjoint(partition, mu), m_ext)?;
    let patterns = extended.enumerate()?;
    let table = FidelityTable::blockwise(&patterns, &probe, family)?;
    let mut report = bounds_generic(&table, &extended.priors()?, copies)?;
    report.method = Method::Mutual;
    report.mbar = average_channel_use(d, copies);
    report.rounds = Some(decompose_rounds(d).len());
    Ok(report)
}

/// Picks the fastest applicable path for `probe` over `space`.
pub fn bounds_auto(space: &ImageSpace, spec: &ProbeSpec, family: &ChannelFamily, copies: f64) -> Result<BoundReport> {
    if let ProbeSpec::NonDisjoint { partition, mu } = spec {
        if !partition.is_disjoint() {
            return bounds_mutual(space, partition, family, *mu, copies);
        }
    }
    let probe = assemble_probe(spec, space.m())?;
    match bounds_counting_probe(space, &probe, family, copies) {
        Err(Error::Unsupported(_)) => {
            let patterns = space.enumerate()?;
            let table = FidelityTable::blockwise(&patterns, &probe, family)?;
            Ok(bounds_generic(&table, &space.priors()?, copies)?.with_mbar(average_channel_use(&probe, copies)))
        }
        other => other,
    }
}

/// Single-copy, single-channel fidelity of the classical strategy: a coherent
/// state of `n_s` photons for pure loss, the vacuum for additive noise.
pub fn classical_channel_fidelity(family: &ChannelFamily, n_s: f64) -> Result<f64> {
    match family.kind() {
        ChannelKind::PureLoss => {
            if !(n_s >= 0.0 && n_s.is_finite()) {
                return Err(Error::InvalidEnergy(n_s));
            }
            let diff = libm::sqrt(family.background().tau()) - libm::sqrt(family.target().tau());
            Ok(libm::exp(-0.5 * n_s * diff * diff))
        }
        ChannelKind::AdditiveNoise => {
            let (nb, nt) = (family.background().nu(), family.target().nu());
            Ok(1.0 / (libm::sqrt((nt + 1.0) * (nb + 1.0)) - libm::sqrt(nt * nb)))
        }
        ChannelKind::Thermal => {
            Err(Error::Unsupported("no classical benchmark is defined for thermal channels".into()))
        }
    }
}

/// The classical state matching [`classical_channel_fidelity`].
pub fn classical_probe_state(family: &ChannelFamily, n_s: f64) -> ClassicalState {
    match family.kind() {
        ChannelKind::AdditiveNoise => ClassicalState::Vacuum,
        _ => ClassicalState::Coherent(libm::sqrt(n_s.max(0.0))),
    }
}

/// Classical benchmark: per-channel fidelity `F`, pair fidelity `F^d`.
pub fn classical_benchmark(space: &ImageSpace, family: &ChannelFamily, n_s: f64, copies: f64) -> Result<BoundReport> {
    check_copies(copies)?;
    let f = classical_channel_fidelity(family, n_s)?;
    let m = space.m();
    if space.is_uniform() && !matches!(space.kind(), SpaceKind::Custom) {
        let ks = space.weights();
        let (mut s1, mut s2) = (0.0, 0.0);
        for &v in &ks {
            for &u in &ks {
                for t in v.max(u)..=(v + u).min(m) {
                    let d = 2 * t - v - u;
                    if d == 0 {
                        continue;
                    }
                    let c = pair_count(m, v, u, t) as f64;
                    s1 += c * fidelity_power(f, copies * d as f64);
                    s2 += c * fidelity_power(f, 2.0 * copies * d as f64);
                }
            }
        }
        let n = space.len()? as f64;
        return Ok(BoundReport::new(s2 / (2.0 * n * n), s1 / n, copies, copies, Method::Classical));
    }
    let patterns = space.enumerate()?;
    let table = FidelityTable::from_fn(patterns.len(), |i, j| {
        Ok(fidelity_power(f, crate::imagespace::hamming(&patterns[i], &patterns[j])? as f64))
    })?;
    let mut report = bounds_generic(&table, &space.priors()?, copies)?;
    report.method = Method::Classical;
    Ok(report)
}

/// `Δp_err = classical lower - quantum upper`, for reports with equal `M̄`.
pub fn guaranteed_advantage(classical: &BoundReport, quantum: &BoundReport) -> Result<f64> {
    let scale = classical.mbar.abs().max(quantum.mbar.abs()).max(1.0);
    if (classical.mbar - quantum.mbar).abs() > MBAR_TOL * scale {
        return Err(Error::Comparability { classical: classical.mbar, quantum: quantum.mbar });
    }
    Ok(classical.lower - quantum.upper)
}

/// Copies needed for a probe to reach average channel use `mbar`.
pub fn copies_for_mbar<C: ChannelCover + ?Sized>(cover: &C, mbar: f64) -> f64 {
    mbar * cover.m() as f64 / cover.channel_uses() as f64
}

/// Probe used by the single-idler odd-`m` closed form, for cross-checks.
pub fn single_idler_partition(m: usize) -> Result<IdlerPartition> {
    match crate::probes::odd_m_disjoint_spec(m, OddStrategy::SingleIdler, 1.0)? {
        ProbeSpec::Idler { partition, .. } => Ok(partition),
        _ => unreachable!("single-idler spec is idler-assisted"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::{nn_partition, DisjointPartition};
    use approx::assert_relative_eq;

    fn loss() -> ChannelFamily {
        ChannelFamily::pure_loss(0.99, 0.97).unwrap()
    }

    fn additive() -> ChannelFamily {
        ChannelFamily::additive_noise(0.02, 0.01).unwrap()
    }

    fn disjoint(s: &str, mu: f64) -> ProbeSpec {
        ProbeSpec::disjoint(s.parse::<DisjointPartition>().unwrap(), mu)
    }

    #[test]
    fn generic_trivial_cases() {
        let zero = FidelityTable::from_values(3, alloc::vec![0.0; 3]).unwrap();
        let r = bounds_generic(&zero, &[1.0 / 3.0; 3], 1.0).unwrap();
        assert_eq!((r.lower, r.upper), (0.0, 0.0));
        let f = 0.7;
        let two = FidelityTable::from_values(2, alloc::vec![f]).unwrap();
        let r = bounds_generic(&two, &[0.5, 0.5], 3.0).unwrap();
        assert_relative_eq!(r.upper, f.powi(3), max_relative = 1e-14);
        assert_relative_eq!(r.lower, f.powi(6) / 4.0, max_relative = 1e-14);
        let r = bounds_generic(&two, &[0.25, 0.75], 1.0).unwrap();
        assert_relative_eq!(r.upper, 2.0 * (0.25f64 * 0.75).sqrt() * f, max_relative = 1e-14);
        assert!(FidelityTable::from_values(3, alloc::vec![0.5; 2]).is_err());
        assert!(FidelityTable::from_values(2, alloc::vec![1.5]).is_err());
        assert!(bounds_generic(&two, &[0.5, 0.5], 0.5).is_err());
    }

    #[test]
    fn table_indexing() {
        let t = FidelityTable::from_values(4, alloc::vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_eq!(t.get(0, 1), Some(0.1));
        assert_eq!(t.get(3, 0), Some(0.3));
        assert_eq!(t.get(1, 2), Some(0.4));
        assert_eq!(t.get(2, 3), Some(0.6));
        assert_eq!(t.get(2, 2), None);
    }

    #[test]
    fn cpf_single_ghz_closed_form() {
        for m in [3, 4, 5] {
            let space = ImageSpace::cpf(m, 1).unwrap();
            let spec = disjoint(&(1..=m).map(|k| char::from(b'0' + k as u8)).collect::<alloc::string::String>(), 5.0);
            let probe = assemble_probe(&spec, m).unwrap();
            let f = BlockFidelities::new(loss()).get(&probe.blocks()[0], 1, 1, 2).unwrap();
            let r = bounds_via_counting(&space, &spec, &loss(), 10.0).unwrap();
            let mm = m as f64;
            assert_relative_eq!(r.upper_raw, (mm - 1.0) * f.powf(10.0), max_relative = 1e-12);
            assert_relative_eq!(r.lower_raw, (mm - 1.0) / (2.0 * mm) * f.powf(20.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn counting_matches_brute_force_small() {
        let cases: [(ImageSpace, &str); 4] = [
            (ImageSpace::full(4).unwrap(), "12|34"),
            (ImageSpace::cpf(4, 2).unwrap(), "1234"),
            (ImageSpace::bcpf(5, &[1, 2]).unwrap(), "12|345"),
            (ImageSpace::full(3).unwrap(), "123"),
        ];
        for family in [loss(), additive()] {
            for (space, part) in &cases {
                let spec = disjoint(part, 20.5);
                let probe = assemble_probe(&spec, space.m()).unwrap();
                for copies in [1.0, 10.0] {
                    let c = bounds_via_counting(space, &spec, &family, copies).unwrap();
                    let b = bounds_brute_force(space, &probe, &family, copies).unwrap();
                    assert_relative_eq!(c.upper_raw, b.upper_raw, max_relative = 1e-10);
                    assert_relative_eq!(c.lower_raw, b.lower_raw, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn d2_matches_counting() {
        let spec = disjoint("12|34", 20.5);
        let space = ImageSpace::full(4).unwrap();
        let c = bounds_via_counting(&space, &spec, &loss(), 10.0).unwrap();
        let d = bounds_d2(&loss(), 20.5, 10.0, 4).unwrap();
        assert_relative_eq!(c.upper_raw, d.upper_raw, max_relative = 1e-12);
        assert_relative_eq!(c.lower_raw, d.lower_raw, max_relative = 1e-12);
        let two = bounds_d2(&loss(), 20.5, 1.0, 2).unwrap();
        let f = |c| subfidelity_numeric(&loss(), 20.5, c).unwrap();
        let direct = f(SubFidelityClass::F01)
            + f(SubFidelityClass::F12)
            + 0.5 * (f(SubFidelityClass::F11) + f(SubFidelityClass::F02));
        assert_relative_eq!(two.upper_raw, direct, max_relative = 1e-13);
        assert!(bounds_d2(&loss(), 20.5, 1.0, 3).is_err());
    }

    #[test]
    fn d2_odd_matches_brute_force() {
        for strategy in [OddStrategy::SingleIdler, OddStrategy::HybridCoherent] {
            let spec = crate::probes::odd_m_disjoint_spec(3, strategy, 20.5).unwrap();
            let probe = assemble_probe(&spec, 3).unwrap();
            let space = ImageSpace::full(3).unwrap();
            for copies in [1.0, 10.0] {
                let b = bounds_brute_force(&space, &probe, &additive(), copies).unwrap();
                let d = bounds_d2_odd(&additive(), 20.5, copies, 3, strategy).unwrap();
                assert_relative_eq!(b.upper_raw, d.upper_raw, max_relative = 1e-12);
                assert_relative_eq!(b.lower_raw, d.lower_raw, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn mutual_nn3_matches_extended_brute_force() {
        let nn = nn_partition(3).unwrap();
        let space = ImageSpace::full(3).unwrap();
        let r = bounds_mutual(&space, &nn, &additive(), 20.5, 10.0).unwrap();
        let probe = assemble_probe(&ProbeSpec::non_disjoint(nn.clone(), 20.5), 3).unwrap();
        let b = bounds_brute_force(&space, &probe, &additive(), 10.0).unwrap();
        assert_relative_eq!(r.upper_raw, b.upper_raw, max_relative = 1e-12);
        assert_relative_eq!(r.lower_raw, b.lower_raw, max_relative = 1e-12);
        assert_eq!(r.mbar, 20.0);
        assert_eq!(r.rounds, Some(3));
    }

    #[test]
    fn mutual_disjoint_is_plain() {
        let d: NonDisjointPartition = "12|34".parse().unwrap();
        let space = ImageSpace::full(4).unwrap();
        let m = bounds_mutual(&space, &d, &loss(), 20.5, 3.0).unwrap();
        let c = bounds_via_counting(&space, &disjoint("12|34", 20.5), &loss(), 3.0).unwrap();
        assert_relative_eq!(m.upper_raw, c.upper_raw, max_relative = 1e-12);
        assert_relative_eq!(m.lower_raw, c.lower_raw, max_relative = 1e-12);
        assert_eq!(m.rounds, Some(1));
    }

    #[test]
    fn closed_forms_match_numerics() {
        let mu = 20.5;
        let f11 = subfidelity_closed_form(&additive(), Energy::Finite(mu), SubFidelityClass::F11).unwrap();
        assert_relative_eq!(
            f11,
            subfidelity_numeric(&additive(), mu, SubFidelityClass::F11).unwrap(),
            max_relative = 1e-9
        );
        let f02 = subfidelity_closed_form(&loss(), Energy::Finite(mu), SubFidelityClass::F02).unwrap();
        assert_relative_eq!(f02, subfidelity_numeric(&loss(), mu, SubFidelityClass::F02).unwrap(), max_relative = 1e-9);
        let lim = subfidelity_closed_form(&loss(), Energy::Infinite, SubFidelityClass::F02).unwrap();
        assert!((lim - 0.8659803159).abs() < 1e-9);
        assert!(matches!(
            subfidelity_closed_form(&additive(), Energy::Finite(mu), SubFidelityClass::F01),
            Err(Error::NoClosedForm)
        ));
    }

    #[test]
    fn classical_examples() {
        let space = ImageSpace::cpf(9, 1).unwrap();
        let f = classical_channel_fidelity(&loss(), 20.0).unwrap();
        let expected = (-10.0 * (0.99f64.sqrt() - 0.97f64.sqrt()).powi(2)).exp();
        assert_relative_eq!(f, expected, max_relative = 1e-15);
        let r = classical_benchmark(&space, &loss(), 20.0, 100.0).unwrap();
        assert_relative_eq!(r.upper_raw, 8.0 * f.powf(200.0), max_relative = 1e-12);
        let flat = ChannelFamily::new_unchecked(
            ChannelKind::AdditiveNoise,
            crate::channels::GpiParams::additive_noise(0.01).unwrap(),
            crate::channels::GpiParams::additive_noise(0.01).unwrap(),
        );
        assert_relative_eq!(classical_channel_fidelity(&flat, 0.0).unwrap(), 1.0, max_relative = 1e-15);
        let r = classical_benchmark(&ImageSpace::full(3).unwrap(), &flat, 0.0, 1.0).unwrap();
        assert_relative_eq!(r.upper_raw, 7.0, max_relative = 1e-14);
        assert_eq!(r.upper, 1.0);
        let thermal = ChannelFamily::thermal(0.9, 1.0, 0.8, 1.0).unwrap();
        assert!(matches!(classical_benchmark(&space, &thermal, 1.0, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn classical_custom_space_matches_uniform_path() {
        let space = ImageSpace::bcpf(4, &[1, 2]).unwrap();
        let custom = ImageSpace::custom(space.enumerate().unwrap()).unwrap();
        let a = classical_benchmark(&space, &additive(), 0.0, 7.0).unwrap();
        let b = classical_benchmark(&custom, &additive(), 0.0, 7.0).unwrap();
        assert_relative_eq!(a.upper_raw, b.upper_raw, max_relative = 1e-12);
        assert_relative_eq!(a.lower_raw, b.lower_raw, max_relative = 1e-12);
    }

    #[test]
    fn advantage_requires_matched_mbar() {
        let q = BoundReport::new(0.0, 0.0, 100.0, 100.0, Method::Counting);
        let c = BoundReport::new(0.3, 0.5, 100.0, 100.0, Method::Classical);
        assert_eq!(guaranteed_advantage(&c, &q).unwrap(), 0.3);
        assert!(guaranteed_advantage(&c, &c).unwrap() <= 0.0);
        let q2 = BoundReport::new(0.0, 0.0, 100.0, 200.0, Method::Mutual);
        assert!(matches!(guaranteed_advantage(&c, &q2), Err(Error::Comparability { .. })));
    }

    #[test]
    fn auto_falls_back_for_custom_spaces() {
        let space = ImageSpace::parse_text("0011 1\n0101 1\n1100 2\n").unwrap();
        let spec = disjoint("12|34", 4.0);
        let a = bounds_auto(&space, &spec, &loss(), 2.0).unwrap();
        let probe = assemble_probe(&spec, 4).unwrap();
        let b = bounds_brute_force(&space, &probe, &loss(), 2.0).unwrap();
        assert_relative_eq!(a.upper_raw, b.upper_raw, max_relative = 1e-10);
        assert_eq!(a.method, Method::Brute);
    }
}
