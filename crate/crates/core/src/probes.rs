//! Partition sets, probe-state assembly, mutual-probing extension and round
//! decomposition.
//!
//! Partition literals list blocks separated by `|`. Channel labels are 1-based.
//! A block is either a run of single digits (`"12|34"`) or, for labels above
//! 9, labels separated by commas or spaces (`"1,2|9 10 11"`). Each trailing
//! `*` adds one idler to its block (`"1*|23"`).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channels::{IdlerLayout, MAX_PATTERN_LEN};
use crate::gaussian::{check_energy, collective_modes, ghz_cm, ghz_cm_collective, CovMatrix};
use crate::imagespace::{ExtendedImageSpace, ImageSpace};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Largest `m` accepted by the partition enumerators.
pub const ENUMERATION_LIMIT: usize = 10;
/// Largest block count for which round decomposition is proven minimal.
pub const EXHAUSTIVE_ROUNDS_LIMIT: usize = 12;

/// Anything that assigns probe modes to channels.
pub trait ChannelCover {
    /// Number of channels `m`.
    fn m(&self) -> usize;
    /// Probe modes sent through channels, `m + l`.
    fn channel_uses(&self) -> usize;
}

/// Probings per channel, `(m + l)/m · M`.
pub fn average_channel_use<C: ChannelCover + ?Sized>(cover: &C, copies: f64) -> f64 {
    cover.channel_uses() as f64 / cover.m() as f64 * copies
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct ParsedBlock {
    channels: Vec<usize>,
    idlers: usize,
}

fn parse_blocks(s: &str) -> Result<Vec<ParsedBlock>> {
    let err = |message: String| Error::Parse { line: 0, message };
    let s = s.trim();
    if s.is_empty() {
        return Err(err("empty partition".into()));
    }
    s.split('|')
        .map(|raw| {
            let raw = raw.trim();
            let body = raw.trim_end_matches('*');
            let idlers = raw.len() - body.len();
            let body = body.trim();
            let labels: Vec<&str> = if body.contains(|c: char| c == ',' || c.is_whitespace()) {
                body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect()
            } else {
                body.char_indices().map(|(i, c)| &body[i..i + c.len_utf8()]).collect()
            };
            if labels.is_empty() {
                return Err(err(format!("empty block in '{s}'")));
            }
            let channels = labels
                .iter()
                .map(|t| match t.parse::<usize>() {
                    Ok(n) if n >= 1 => Ok(n - 1),
                    _ => Err(err(format!("bad channel label '{t}'"))),
                })
                .collect::<Result<Vec<usize>>>()?;
            Ok(ParsedBlock { channels, idlers })
        })
        .collect()
}

fn write_blocks(f: &mut fmt::Formatter<'_>, blocks: &[Vec<usize>], idlers: Option<&[usize]>) -> fmt::Result {
    let wide = blocks.iter().flatten().any(|&c| c >= 9);
    for (j, b) in blocks.iter().enumerate() {
        if j > 0 {
            f.write_str("|")?;
        }
        for (k, c) in b.iter().enumerate() {
            if wide && k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", c + 1)?;
        }
        if let Some(ids) = idlers {
            for _ in 0..ids[j] {
                f.write_str("*")?;
            }
        }
    }
    Ok(())
}

fn infer_m(blocks: &[Vec<usize>]) -> usize {
    blocks.iter().flatten().map(|c| c + 1).max().unwrap_or(0)
}

fn check_cover(m: usize, blocks: &[Vec<usize>], disjoint: bool) -> Result<()> {
    if m == 0 || m > MAX_PATTERN_LEN {
        return Err(Error::Capacity { requested: m, limit: MAX_PATTERN_LEN });
    }
    let mut count = alloc::vec![0usize; m];
    for b in blocks {
        if b.is_empty() {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        let mut sorted = b.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartition(format!("block repeats a channel: {:?}", one_based(b))));
        }
        for &c in b {
            if c >= m {
                return Err(Error::InvalidPartition(format!("channel {} outside 1..{m}", c + 1)));
            }
            count[c] += 1;
        }
    }
    if let Some(c) = count.iter().position(|&n| n == 0) {
        return Err(Error::InvalidPartition(format!("channel {} is not covered", c + 1)));
    }
    if disjoint {
        if let Some(c) = count.iter().position(|&n| n > 1) {
            return Err(Error::InvalidPartition(format!("channel {} appears in two blocks", c + 1)));
        }
    }
    Ok(())
}

fn one_based(b: &[usize]) -> Vec<usize> {
    b.iter().map(|c| c + 1).collect()
}

/// Pairwise disjoint blocks covering `0..m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DisjointPartition {
    m: usize,
    blocks: Vec<Vec<usize>>,
}

impl DisjointPartition {
    /// Unassisted partition: every block holds at least two channels.
    pub fn new(m: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let p = Self::with_singletons(m, blocks)?;
        if let Some(b) = p.blocks.iter().find(|b| b.len() < 2) {
            return Err(Error::InvalidPartition(format!(
                "unassisted block {:?} needs at least two channels",
                one_based(b)
            )));
        }
        Ok(p)
    }

    /// Allows single-channel blocks, for idler-assisted or hybrid probes.
    pub fn with_singletons(m: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        check_cover(m, &blocks, true)?;
        Ok(Self { m, blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block sizes.
    pub fn shape(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

impl ChannelCover for DisjointPartition {
    fn m(&self) -> usize {
        self.m
    }
    fn channel_uses(&self) -> usize {
        self.m
    }
}

impl FromStr for DisjointPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = parse_blocks(s)?;
        if parsed.iter().any(|b| b.idlers > 0) {
            return Err(Error::Parse { line: 0, message: "idlers are not allowed here".into() });
        }
        let blocks: Vec<Vec<usize>> = parsed.into_iter().map(|b| b.channels).collect();
        Self::new(infer_m(&blocks), blocks)
    }
}

impl fmt::Display for DisjointPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks, None)
    }
}

/// Disjoint partition with per-block idler counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdlerPartition {
    partition: DisjointPartition,
    idlers: Vec<usize>,
}

impl IdlerPartition {
    pub fn new(partition: DisjointPartition, idlers: Vec<usize>) -> Result<Self> {
        if idlers.len() != partition.blocks.len() {
            return Err(Error::Dimension { expected: partition.blocks.len(), found: idlers.len() });
        }
        for (b, &s) in partition.blocks.iter().zip(&idlers) {
            if b.len() + s < 2 {
                return Err(Error::InvalidPartition(format!(
                    "block {:?} needs an idler or a second channel",
                    one_based(b)
                )));
            }
        }
        Ok(Self { partition, idlers })
    }

    pub fn partition(&self) -> &DisjointPartition {
        &self.partition
    }

    pub fn idlers(&self) -> &[usize] {
        &self.idlers
    }

    /// Total modes `m + Σ s̃_j`.
    pub fn total_modes(&self) -> usize {
        self.partition.m + self.idlers.iter().sum::<usize>()
    }
}

impl ChannelCover for IdlerPartition {
    fn m(&self) -> usize {
        self.partition.m
    }
    fn channel_uses(&self) -> usize {
        self.partition.m
    }
}

impl FromStr for IdlerPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = parse_blocks(s)?;
        let idlers = parsed.iter().map(|b| b.idlers).collect();
        let blocks: Vec<Vec<usize>> = parsed.into_iter().map(|b| b.channels).collect();
        Self::new(DisjointPartition::with_singletons(infer_m(&blocks), blocks)?, idlers)
    }
}

impl fmt::Display for IdlerPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.partition.blocks, Some(&self.idlers))
    }
}

/// Blocks that cover `0..m`, possibly overlapping.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NonDisjointPartition {
    m: usize,
    blocks: Vec<Vec<usize>>,
}

impl NonDisjointPartition {
    pub fn new(m: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        check_cover(m, &blocks, false)?;
        if let Some(b) = blocks.iter().find(|b| b.len() < 2) {
            return Err(Error::InvalidPartition(format!(
                "unassisted block {:?} needs at least two channels",
                one_based(b)
            )));
        }
        let uses: usize = blocks.iter().map(Vec::len).sum();
        if uses > MAX_PATTERN_LEN {
            return Err(Error::Capacity { requested: uses, limit: MAX_PATTERN_LEN });
        }
        Ok(Self { m, blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Overlap count `l = Σ|d_j| - m`.
    pub fn overlap(&self) -> usize {
        self.channel_uses() - self.m
    }

    pub fn is_disjoint(&self) -> bool {
        self.overlap() == 0
    }
}

impl ChannelCover for NonDisjointPartition {
    fn m(&self) -> usize {
        self.m
    }
    fn channel_uses(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

impl FromStr for NonDisjointPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = parse_blocks(s)?;
        if parsed.iter().any(|b| b.idlers > 0) {
            return Err(Error::Parse { line: 0, message: "idlers are not allowed here".into() });
        }
        let blocks: Vec<Vec<usize>> = parsed.into_iter().map(|b| b.channels).collect();
        Self::new(infer_m(&blocks), blocks)
    }
}

impl fmt::Display for NonDisjointPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks, None)
    }
}

/// Classical single-mode state used by classical and hybrid probes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClassicalState {
    Vacuum,
    /// Real coherent amplitude; mean photon number is its square.
    Coherent(f64),
}

/// Description of a probe state over `m` channels.
#[derive(Clone, Debug, PartialEq)]
pub enum ProbeSpec {
    Disjoint {
        partition: DisjointPartition,
        mu: f64,
    },
    Idler {
        partition: IdlerPartition,
        mu: f64,
    },
    NonDisjoint {
        partition: NonDisjointPartition,
        mu: f64,
    },
    /// One classical mode per channel.
    Classical {
        m: usize,
        state: ClassicalState,
    },
    /// GHZ blocks on the multi-channel blocks; single-channel blocks get `state`.
    Hybrid {
        partition: DisjointPartition,
        mu: f64,
        state: ClassicalState,
    },
}

impl ProbeSpec {
    pub fn disjoint(partition: DisjointPartition, mu: f64) -> Self {
        ProbeSpec::Disjoint { partition, mu }
    }

    pub fn idler(partition: IdlerPartition, mu: f64) -> Self {
        ProbeSpec::Idler { partition, mu }
    }

    pub fn non_disjoint(partition: NonDisjointPartition, mu: f64) -> Self {
        ProbeSpec::NonDisjoint { partition, mu }
    }

    pub fn m(&self) -> usize {
        match self {
            ProbeSpec::Disjoint { partition, .. } | ProbeSpec::Hybrid { partition, .. } => partition.m,
            ProbeSpec::Idler { partition, .. } => partition.m(),
            ProbeSpec::NonDisjoint { partition, .. } => partition.m,
            ProbeSpec::Classical { m, .. } => *m,
        }
    }
}

impl ChannelCover for ProbeSpec {
    fn m(&self) -> usize {
        ProbeSpec::m(self)
    }
    fn channel_uses(&self) -> usize {
        match self {
            ProbeSpec::NonDisjoint { partition, .. } => partition.channel_uses(),
            _ => ProbeSpec::m(self),
        }
    }
}

/// State of one probe block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlockState {
    /// GHZ state over the block's idlers and probe modes.
    Ghz {
        mu: f64,
    },
    Classical(ClassicalState),
}

/// A block of a probe: the channels its probe modes visit and its idler count.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeBlock {
    pub channels: Vec<usize>,
    pub idlers: usize,
    pub state: BlockState,
}

impl ProbeBlock {
    pub fn n_modes(&self) -> usize {
        self.channels.len() + self.idlers
    }

    /// Covariance matrix of the block, idlers first.
    pub fn covariance(&self) -> Result<CovMatrix> {
        match self.state {
            BlockState::Ghz { mu } => ghz_cm(self.n_modes(), mu),
            BlockState::Classical(ClassicalState::Vacuum) => Ok(CovMatrix::vacuum(self.n_modes())),
            BlockState::Classical(ClassicalState::Coherent(a)) => {
                Ok(CovMatrix::coherent(&alloc::vec![a; self.n_modes()]))
            }
        }
    }

    /// Mode basis in which [`Self::covariance_in_frame`] is written.
    pub fn frame(&self) -> DMatrix<f64> {
        match self.state {
            BlockState::Ghz { .. } => collective_modes(self.n_modes()),
            BlockState::Classical(_) => DMatrix::identity(self.n_modes(), self.n_modes()),
        }
    }

    /// The block state in its [`Self::frame`], diagonal for GHZ blocks.
    pub fn covariance_in_frame(&self) -> Result<CovMatrix> {
        match self.state {
            BlockState::Ghz { mu } => ghz_cm_collective(self.n_modes(), mu),
            BlockState::Classical(_) => self.covariance(),
        }
    }

    /// Layout of the block alone, channels renumbered `0..len`.
    pub fn local_layout(&self) -> IdlerLayout {
        let local: Vec<usize> = (0..self.channels.len()).collect();
        IdlerLayout::from_blocks([(self.idlers, &local[..])])
    }
}

/// An assembled probe: a tensor product of blocks, modes ordered block by block.
///
/// A channel may be visited by modes of several blocks (mutual probing); each
/// such mode sees the same channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    m: usize,
    blocks: Vec<ProbeBlock>,
}

impl Probe {
    pub fn new(m: usize, blocks: Vec<ProbeBlock>) -> Result<Self> {
        let chans: Vec<Vec<usize>> = blocks.iter().map(|b| b.channels.clone()).collect();
        check_cover(m, &chans, false)?;
        for b in &blocks {
            match b.state {
                BlockState::Ghz { mu } => {
                    check_energy(mu)?;
                    if b.n_modes() < 2 {
                        return Err(Error::InvalidPartition("a GHZ block needs at least 2 modes".into()));
                    }
                }
                BlockState::Classical(ClassicalState::Coherent(a)) if !a.is_finite() => {
                    return Err(Error::InvalidEnergy(a));
                }
                BlockState::Classical(_) => {}
            }
        }
        Ok(Self { m, blocks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[ProbeBlock] {
        &self.blocks
    }

    /// Channel lists of the blocks.
    pub fn block_channels(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.channels.clone()).collect()
    }

    pub fn is_disjoint(&self) -> bool {
        self.channel_uses() == self.m
    }

    pub fn n_modes(&self) -> usize {
        self.blocks.iter().map(ProbeBlock::n_modes).sum()
    }

    pub fn covariance(&self) -> Result<CovMatrix> {
        let parts = self.blocks.iter().map(ProbeBlock::covariance).collect::<Result<Vec<_>>>()?;
        CovMatrix::direct_sum(&parts)
    }

    /// Block-diagonal sum of the block frames.
    pub fn frame(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        let mut f = DMatrix::zeros(n, n);
        let mut at = 0;
        for b in &self.blocks {
            let k = b.n_modes();
            f.view_mut((at, at), (k, k)).copy_from(&b.frame());
            at += k;
        }
        f
    }

    pub fn covariance_in_frame(&self) -> Result<CovMatrix> {
        let parts = self.blocks.iter().map(ProbeBlock::covariance_in_frame).collect::<Result<Vec<_>>>()?;
        CovMatrix::direct_sum(&parts)
    }

    pub fn layout(&self) -> IdlerLayout {
        IdlerLayout::from_blocks(self.blocks.iter().map(|b| (b.idlers, &b.channels[..])))
    }
}

impl ChannelCover for Probe {
    fn m(&self) -> usize {
        self.m
    }
    fn channel_uses(&self) -> usize {
        self.blocks.iter().map(|b| b.channels.len()).sum()
    }
}

/// Builds the probe described by `spec` for `m` channels.
pub fn assemble_probe(spec: &ProbeSpec, m: usize) -> Result<Probe> {
    if spec.m() != m {
        return Err(Error::InvalidPartition(format!("probe covers {} channels, pattern has {m}", spec.m())));
    }
    let ghz = |channels: &Vec<usize>, idlers: usize, mu: f64| ProbeBlock {
        channels: channels.clone(),
        idlers,
        state: BlockState::Ghz { mu },
    };
    let blocks = match spec {
        ProbeSpec::Disjoint { partition, mu } => partition.blocks.iter().map(|b| ghz(b, 0, *mu)).collect(),
        ProbeSpec::Idler { partition, mu } => {
            partition.partition.blocks.iter().zip(&partition.idlers).map(|(b, &s)| ghz(b, s, *mu)).collect()
        }
        ProbeSpec::NonDisjoint { partition, mu } => partition.blocks.iter().map(|b| ghz(b, 0, *mu)).collect(),
        ProbeSpec::Classical { m, state } => (0..*m)
            .map(|c| ProbeBlock { channels: alloc::vec![c], idlers: 0, state: BlockState::Classical(*state) })
            .collect(),
        ProbeSpec::Hybrid { partition, mu, state } => partition
            .blocks
            .iter()
            .map(|b| {
                if b.len() == 1 {
                    ProbeBlock { channels: b.clone(), idlers: 0, state: BlockState::Classical(*state) }
                } else {
                    ghz(b, 0, *mu)
                }
            })
            .collect(),
    };
    Probe::new(m, blocks)
}

/// Relabels every channel instance of `d` as its own channel, giving a disjoint
/// partition over `m + l` channels and the matching extended image space.
///
/// Extended channels are numbered block by block in the order of `d`.
pub fn extend_for_mutual_probing(
    d: &NonDisjointPartition,
    space: &ImageSpace,
) -> Result<(DisjointPartition, ExtendedImageSpace)> {
    if space.m() != d.m {
        return Err(Error::Dimension { expected: d.m, found: space.m() });
    }
    let mut source = Vec::new();
    let mut blocks = Vec::new();
    for b in &d.blocks {
        let start = source.len();
        source.extend_from_slice(b);
        blocks.push((start..source.len()).collect());
    }
    let partition = DisjointPartition::new(source.len(), blocks)?;
    let extended = ExtendedImageSpace::new(space.clone(), source)?;
    Ok((partition, extended))
}

/// One round of simultaneous, non-overlapping blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjointRound {
    pub blocks: Vec<Vec<usize>>,
}

impl fmt::Display for DisjointRound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks, None)
    }
}

/// Splits `d` into rounds of pairwise disjoint blocks.
///
/// Greedy DSatur colouring of the overlap graph, then an exact search for
/// fewer colours when there are at most [`EXHAUSTIVE_ROUNDS_LIMIT`] blocks.
/// Rounds list blocks in their original order.
pub fn decompose_rounds(d: &NonDisjointPartition) -> Vec<DisjointRound> {
    let n = d.blocks.len();
    let conflict: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && d.blocks[i].iter().any(|c| d.blocks[j].contains(c))).collect())
        .collect();
    let mut colour = dsatur(&conflict);
    let mut rounds = colour.iter().max().map_or(0, |c| c + 1);
    if n <= EXHAUSTIVE_ROUNDS_LIMIT {
        while rounds > 1 {
            let mut trial = alloc::vec![usize::MAX; n];
            if colour_with(&conflict, rounds - 1, 0, &mut trial) {
                colour = trial;
                rounds -= 1;
            } else {
                break;
            }
        }
    }
    (0..rounds)
        .map(|r| DisjointRound { blocks: (0..n).filter(|&j| colour[j] == r).map(|j| d.blocks[j].clone()).collect() })
        .collect()
}

fn dsatur(conflict: &[Vec<bool>]) -> Vec<usize> {
    let n = conflict.len();
    let mut colour = alloc::vec![usize::MAX; n];
    for _ in 0..n {
        let saturation = |v: usize| {
            let mut used: Vec<usize> =
                (0..n).filter(|&w| conflict[v][w] && colour[w] != usize::MAX).map(|w| colour[w]).collect();
            used.sort_unstable();
            used.dedup();
            used.len()
        };
        let degree = |v: usize| conflict[v].iter().filter(|&&e| e).count();
        let v = (0..n)
            .filter(|&v| colour[v] == usize::MAX)
            .max_by(|&a, &b| {
                (saturation(a), degree(a), usize::MAX - a).cmp(&(saturation(b), degree(b), usize::MAX - b))
            })
            .expect("uncoloured vertex");
        colour[v] = (0..).find(|&c| (0..n).all(|w| !(conflict[v][w] && colour[w] == c))).unwrap_or(0);
    }
    colour
}

fn colour_with(conflict: &[Vec<bool>], k: usize, v: usize, colour: &mut [usize]) -> bool {
    if v == conflict.len() {
        return true;
    }
    // Colours above the largest used so far are interchangeable.
    let limit = colour[..v].iter().copied().max().map_or(1, |c| (c + 2).min(k));
    for c in 0..limit {
        if (0..v).all(|w| !(conflict[v][w] && colour[w] == c)) {
            colour[v] = c;
            if colour_with(conflict, k, v + 1, colour) {
                return true;
            }
        }
    }
    colour[v] = usize::MAX;
    false
}

/// Ring of adjacent pairs `{12|23|...|m1}`.
pub fn nn_partition(m: usize) -> Result<NonDisjointPartition> {
    if m < 3 {
        return Err(Error::InvalidPartition(format!("nearest-neighbour ring needs m >= 3, got {m}")));
    }
    NonDisjointPartition::new(m, (0..m).map(|k| alloc::vec![k, (k + 1) % m]).collect())
}

/// Every pair of channels as its own block.
pub fn all_pairs_partition(m: usize) -> Result<NonDisjointPartition> {
    if m < 2 {
        return Err(Error::InvalidPartition(format!("all-pairs needs m >= 2, got {m}")));
    }
    let blocks = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| alloc::vec![i, j])).collect();
    NonDisjointPartition::new(m, blocks)
}

/// Adjacent TMSV pairs; odd `m` closes with a three-channel block.
pub fn tmsv_disjoint_partition(m: usize) -> Result<DisjointPartition> {
    if m < 2 {
        return Err(Error::InvalidPartition(format!("TMSV pairs need m >= 2, got {m}")));
    }
    let pairs = if m.is_multiple_of(2) { m / 2 } else { m / 2 - 1 };
    let mut blocks: Vec<Vec<usize>> = (0..pairs).map(|k| alloc::vec![2 * k, 2 * k + 1]).collect();
    if m % 2 == 1 {
        blocks.push(alloc::vec![m - 3, m - 2, m - 1]);
    }
    DisjointPartition::new(m, blocks)
}

/// Treatment of the unpaired channel when `m` is odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OddStrategy {
    /// Coherent state of `N_S = mu - 1/2` photons on the last channel.
    HybridCoherent,
    /// TMSV with one idler on the last channel.
    SingleIdler,
}

/// `(m-1)/2` TMSV pairs plus a last channel handled by `strategy`.
pub fn odd_m_disjoint_spec(m: usize, strategy: OddStrategy, mu: f64) -> Result<ProbeSpec> {
    if m.is_multiple_of(2) || m < 3 {
        return Err(Error::InvalidPartition(format!("odd-m construction needs odd m >= 3, got {m}")));
    }
    check_energy(mu)?;
    let mut blocks: Vec<Vec<usize>> = (0..m / 2).map(|k| alloc::vec![2 * k, 2 * k + 1]).collect();
    blocks.push(alloc::vec![m - 1]);
    let partition = DisjointPartition::with_singletons(m, blocks)?;
    Ok(match strategy {
        OddStrategy::HybridCoherent => {
            ProbeSpec::Hybrid { partition, mu, state: ClassicalState::Coherent(libm::sqrt(mu - 0.5)) }
        }
        OddStrategy::SingleIdler => {
            let mut idlers = alloc::vec![0; m / 2];
            idlers.push(1);
            ProbeSpec::Idler { partition: IdlerPartition::new(partition, idlers)?, mu }
        }
    })
}

/// Set partitions of `0..m` with every block of size at least `min_block`,
/// in restricted-growth order.
pub fn disjoint_partitions(m: usize, min_block: usize) -> Result<impl Iterator<Item = DisjointPartition>> {
    if m == 0 || m > ENUMERATION_LIMIT {
        return Err(Error::Capacity { requested: m, limit: ENUMERATION_LIMIT });
    }
    Ok(RestrictedGrowth { codes: Some(alloc::vec![0; m]) }.filter_map(move |codes| {
        let n = codes.iter().max().map_or(0, |c| c + 1);
        let mut blocks = alloc::vec![Vec::new(); n];
        for (c, &b) in codes.iter().enumerate() {
            blocks[b].push(c);
        }
        if blocks.iter().any(|b| b.len() < min_block) {
            return None;
        }
        DisjointPartition::with_singletons(m, blocks).ok()
    }))
}

struct RestrictedGrowth {
    codes: Option<Vec<usize>>,
}

impl Iterator for RestrictedGrowth {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.codes.take()?;
        let mut next = current.clone();
        let m = next.len();
        let mut i = m;
        while i > 1 {
            i -= 1;
            let prefix_max = next[..i].iter().copied().max().unwrap_or(0);
            if next[i] <= prefix_max {
                next[i] += 1;
                for x in next.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                self.codes = Some(next);
                break;
            }
        }
        Some(current)
    }
}

/// Covers of `0..m` by exactly `n_blocks` distinct channel pairs, in
/// lexicographic order of pair indices.
pub fn pair_covers(m: usize, n_blocks: usize) -> Result<impl Iterator<Item = NonDisjointPartition>> {
    if !(2..=ENUMERATION_LIMIT).contains(&m) {
        return Err(Error::Capacity { requested: m, limit: ENUMERATION_LIMIT });
    }
    let pairs: Vec<[usize; 2]> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| [i, j])).collect();
    if n_blocks == 0 || n_blocks > pairs.len() || 2 * n_blocks > MAX_PATTERN_LEN {
        return Err(Error::Capacity { requested: n_blocks, limit: pairs.len().min(MAX_PATTERN_LEN / 2) });
    }
    let total = pairs.len();
    let mut idx: Option<Vec<usize>> = Some((0..n_blocks).collect());
    Ok(core::iter::from_fn(move || loop {
        let current = idx.take()?;
        let mut next = current.clone();
        let mut i = n_blocks;
        while i > 0 {
            i -= 1;
            if next[i] < total - n_blocks + i {
                next[i] += 1;
                for k in (i + 1)..n_blocks {
                    next[k] = next[k - 1] + 1;
                }
                idx = Some(next);
                break;
            }
        }
        let blocks: Vec<Vec<usize>> = current.iter().map(|&p| pairs[p].to_vec()).collect();
        if let Ok(d) = NonDisjointPartition::new(m, blocks) {
            return Some(d);
        }
    }))
}

/// Channel-use count per channel for a cover, for diagnostics.
pub fn coverage(blocks: &[Vec<usize>]) -> BTreeMap<usize, usize> {
    let mut map = BTreeMap::new();
    for &c in blocks.iter().flatten() {
        *map.entry(c).or_insert(0) += 1;
    }
    map
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeSpec::Disjoint { partition, mu } => write!(f, "disjoint {partition} mu={mu}"),
            ProbeSpec::Idler { partition, mu } => write!(f, "idler {partition} mu={mu}"),
            ProbeSpec::NonDisjoint { partition, mu } => write!(f, "mutual {partition} mu={mu}"),
            ProbeSpec::Classical { m, state } => write!(f, "classical m={m} {}", state_label(state)),
            ProbeSpec::Hybrid { partition, mu, state } => {
                write!(f, "hybrid {partition} mu={mu} {}", state_label(state))
            }
        }
    }
}

fn state_label(s: &ClassicalState) -> String {
    match s {
        ClassicalState::Vacuum => "vacuum".to_string(),
        ClassicalState::Coherent(a) => format!("coherent({a})"),
    }
}
