//! Image spaces: prior-weighted sets of channel patterns.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::channels::{Pattern, MAX_PATTERN_LEN};
use crate::combinatorics::binomial;
use crate::{Error, Result};

/// Tolerance on the sum of priors.
pub const PRIOR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// Every pattern of length `m`.
    Full,
    /// Exactly `k` targets.
    Cpf(usize),
    /// Any number of targets from the set.
    Bcpf(Vec<usize>),
    /// An explicit list of patterns.
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageSpace {
    m: usize,
    kind: SpaceKind,
    custom: Vec<Pattern>,
    priors: Option<Vec<f64>>,
}

impl ImageSpace {
    pub fn full(m: usize) -> Result<Self> {
        check_len(m)?;
        Ok(Self { m, kind: SpaceKind::Full, custom: Vec::new(), priors: None })
    }

    pub fn cpf(m: usize, k: usize) -> Result<Self> {
        check_len(m)?;
        if k > m {
            return Err(Error::InvalidPartition(format!("{k}-CPF needs k <= m = {m}")));
        }
        Ok(Self { m, kind: SpaceKind::Cpf(k), custom: Vec::new(), priors: None })
    }

    /// Patterns whose target count lies in `ks` (duplicates removed).
    pub fn bcpf(m: usize, ks: &[usize]) -> Result<Self> {
        check_len(m)?;
        let mut ks = ks.to_vec();
        ks.sort_unstable();
        ks.dedup();
        if ks.is_empty() || ks.iter().any(|&k| k > m) {
            return Err(Error::InvalidPartition(format!("bounded CPF set {ks:?} invalid for m = {m}")));
        }
        Ok(Self { m, kind: SpaceKind::Bcpf(ks), custom: Vec::new(), priors: None })
    }

    /// An explicit space; patterns are sorted and must be distinct.
    pub fn custom(mut patterns: Vec<Pattern>) -> Result<Self> {
        let m = patterns
            .first()
            .map(Pattern::len)
            .ok_or_else(|| Error::InvalidPartition("custom image space is empty".into()))?;
        if let Some(p) = patterns.iter().find(|p| p.len() != m) {
            return Err(Error::Dimension { expected: m, found: p.len() });
        }
        patterns.sort_unstable();
        if patterns.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartition("custom image space repeats a pattern".into()));
        }
        Ok(Self { m, kind: SpaceKind::Custom, custom: patterns, priors: None })
    }

    /// Attaches priors in enumeration order. They must be nonnegative and sum to 1.
    pub fn with_priors(mut self, priors: Vec<f64>) -> Result<Self> {
        let n = self.len()?;
        if priors.len() != n {
            return Err(Error::Dimension { expected: n, found: priors.len() });
        }
        if priors.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidPartition("priors must be finite and nonnegative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidPartition(format!("priors sum to {total}, not 1")));
        }
        self.priors = Some(priors);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn is_uniform(&self) -> bool {
        self.priors.is_none()
    }

    /// Target counts present in the space, ascending.
    pub fn weights(&self) -> Vec<usize> {
        match &self.kind {
            SpaceKind::Full => (0..=self.m).collect(),
            SpaceKind::Cpf(k) => alloc::vec![*k],
            SpaceKind::Bcpf(ks) => ks.clone(),
            SpaceKind::Custom => {
                let mut w: Vec<usize> = self.custom.iter().map(Pattern::weight).collect();
                w.sort_unstable();
                w.dedup();
                w
            }
        }
    }

    /// Number of patterns.
    pub fn len(&self) -> Result<usize> {
        let n: u128 = match &self.kind {
            SpaceKind::Custom => self.custom.len() as u128,
            _ => self.weights().iter().map(|&k| binomial(self.m, k)).sum(),
        };
        usize::try_from(n).map_err(|_| Error::Capacity { requested: usize::MAX, limit: 1 << MAX_PATTERN_LEN })
    }

    /// Always false: every space holds at least one pattern.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Patterns in lexicographic (bitstring) order.
    pub fn enumerate(&self) -> Result<Vec<Pattern>> {
        if let SpaceKind::Custom = self.kind {
            return Ok(self.custom.clone());
        }
        check_len(self.m)?;
        let ks = self.weights();
        let mut member = [false; MAX_PATTERN_LEN + 1];
        for &k in &ks {
            member[k] = true;
        }
        let mut out = Vec::with_capacity(self.len()?);
        for value in 0..(1u32 << self.m) {
            if member[value.count_ones() as usize] {
                out.push(Pattern::new(self.m, value)?);
            }
        }
        Ok(out)
    }

    /// Prior of each pattern in enumeration order.
    pub fn priors(&self) -> Result<Vec<f64>> {
        match &self.priors {
            Some(p) => Ok(p.clone()),
            None => {
                let n = self.len()?;
                Ok(alloc::vec![1.0 / n as f64; n])
            }
        }
    }

    pub fn contains(&self, p: &Pattern) -> bool {
        p.len() == self.m
            && match &self.kind {
                SpaceKind::Full => true,
                SpaceKind::Cpf(k) => p.weight() == *k,
                SpaceKind::Bcpf(ks) => ks.contains(&p.weight()),
                SpaceKind::Custom => self.custom.binary_search(p).is_ok(),
            }
    }

    /// Reads the line format: one bitstring per line, optionally followed by a
    /// weight. `#` starts a comment. Weights are normalised; a file with no
    /// weights gives uniform priors.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows: Vec<(Pattern, Option<f64>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bits = fields.next().unwrap_or_default();
            let pattern: Pattern = bits.parse().map_err(|e| Error::Parse { line: i + 1, message: format!("{e}") })?;
            let weight = match fields.next() {
                Some(w) => Some(
                    w.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, message: format!("bad weight '{w}'") })?,
                ),
                None => None,
            };
            if fields.next().is_some() {
                return Err(Error::Parse { line: i + 1, message: "trailing fields".into() });
            }
            rows.push((pattern, weight));
        }
        let weighted = rows.iter().filter(|r| r.1.is_some()).count();
        if weighted != 0 && weighted != rows.len() {
            return Err(Error::Parse { line: 0, message: "either every pattern has a weight or none does".into() });
        }
        rows.sort_by_key(|a| a.0);
        let space = Self::custom(rows.iter().map(|r| r.0).collect())?;
        if weighted == 0 {
            return Ok(space);
        }
        let total: f64 = rows.iter().filter_map(|r| r.1).sum();
        if total.is_nan() || total <= 0.0 || rows.iter().any(|r| r.1.unwrap_or(0.0) < 0.0) {
            return Err(Error::Parse { line: 0, message: "weights must be nonnegative with a positive sum".into() });
        }
        space.with_priors(rows.iter().map(|r| r.1.unwrap_or(0.0) / total).collect())
    }

    /// Writes the line format read by [`ImageSpace::parse_text`].
    pub fn to_text(&self) -> Result<String> {
        let patterns = self.enumerate()?;
        let mut out = String::new();
        for (k, p) in patterns.iter().enumerate() {
            match &self.priors {
                Some(w) => writeln!(out, "{p} {:e}", w[k]),
                None => writeln!(out, "{p}"),
            }
            .map_err(|_| Error::Numeric("formatting failed".into()))?;
        }
        Ok(out)
    }
}

fn check_len(m: usize) -> Result<()> {
    if m == 0 || m > MAX_PATTERN_LEN {
        return Err(Error::Capacity { requested: m, limit: MAX_PATTERN_LEN });
    }
    Ok(())
}

/// Number of positions where two patterns differ.
pub fn hamming(a: &Pattern, b: &Pattern) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), found: b.len() });
    }
    Ok((a.value() ^ b.value()).count_ones() as usize)
}

/// Block-local class `(min(v, u), max(v, u), d)` of a pattern pair restricted to `channels`.
pub fn block_class(a: &Pattern, b: &Pattern, channels: &[usize]) -> (usize, usize, usize) {
    let (mut v, mut u, mut d) = (0, 0, 0);
    for &c in channels {
        let (x, y) = (a.bit(c), b.bit(c));
        v += usize::from(x);
        u += usize::from(y);
        d += usize::from(x != y);
    }
    (v.min(u), v.max(u), d)
}

/// Ordered off-diagonal pattern pairs grouped by their per-block classes.
pub type Census = BTreeMap<Vec<(usize, usize, usize)>, u64>;

/// Groups every ordered pair of distinct patterns by the tuple of block classes.
///
/// Blocks may overlap; each block sees its own channels. The counts sum to
/// `|U|^2 - |U|`.
pub fn pair_degeneracy_census(space: &ImageSpace, blocks: &[Vec<usize>]) -> Result<Census> {
    if let Some(c) = blocks.iter().flatten().find(|&&c| c >= space.m()) {
        return Err(Error::Dimension { expected: space.m(), found: c + 1 });
    }
    let patterns = space.enumerate()?;
    let mut census = Census::new();
    for (i, a) in patterns.iter().enumerate() {
        for b in &patterns[i + 1..] {
            let key: Vec<_> = blocks.iter().map(|s| block_class(a, b, s)).collect();
            *census.entry(key).or_insert(0) += 2;
        }
    }
    Ok(census)
}

/// An image space carried over to copy-channel labels: extended channel `e`
/// takes the bit of original channel `source[e]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedImageSpace {
    base: ImageSpace,
    source: Vec<usize>,
}

impl ExtendedImageSpace {
    pub fn new(base: ImageSpace, source: Vec<usize>) -> Result<Self> {
        if source.len() > MAX_PATTERN_LEN {
            return Err(Error::Capacity { requested: source.len(), limit: MAX_PATTERN_LEN });
        }
        let mut seen = alloc::vec![false; base.m()];
        for &c in &source {
            if c >= base.m() {
                return Err(Error::Dimension { expected: base.m(), found: c + 1 });
            }
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            // A channel that is never probed would make the map non-injective.
            return Err(Error::InvalidPartition("extension leaves a channel unprobed".into()));
        }
        Ok(Self { base, source })
    }

    pub fn base(&self) -> &ImageSpace {
        &self.base
    }

    /// Original channel behind each extended channel.
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    /// Extended pattern length `m + l`.
    pub fn extended_len(&self) -> usize {
        self.source.len()
    }

    pub fn map(&self, p: &Pattern) -> Result<Pattern> {
        p.select(&self.source)
    }

    /// Extended patterns in base enumeration order.
    pub fn enumerate(&self) -> Result<Vec<Pattern>> {
        self.base.enumerate()?.iter().map(|p| self.map(p)).collect()
    }

    pub fn priors(&self) -> Result<Vec<f64>> {
        self.base.priors()
    }

    pub fn len(&self) -> Result<usize> {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::pair_count;

    fn strs(ps: &[Pattern]) -> Vec<String> {
        ps.iter().map(|p| format!("{p}")).collect()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(strs(&ImageSpace::full(2).unwrap().enumerate().unwrap()), ["00", "01", "10", "11"]);
        assert_eq!(ImageSpace::cpf(9, 1).unwrap().enumerate().unwrap().len(), 9);
        let b = ImageSpace::bcpf(4, &[1, 2]).unwrap();
        assert_eq!(b.enumerate().unwrap().len(), 10);
        assert_eq!(b.len().unwrap(), 10);
        assert!(ImageSpace::full(25).is_err());
        assert!(ImageSpace::cpf(3, 4).is_err());
    }

    #[test]
    fn hierarchy() {
        let full = ImageSpace::full(6).unwrap();
        let b = ImageSpace::bcpf(6, &[2, 3]).unwrap();
        for p in ImageSpace::cpf(6, 2).unwrap().enumerate().unwrap() {
            assert!(b.contains(&p) && full.contains(&p));
        }
    }

    #[test]
    fn priors_uniform_and_checked() {
        let s = ImageSpace::cpf(4, 2).unwrap();
        let p = s.priors().unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < PRIOR_TOL);
        assert!(s.clone().with_priors(alloc::vec![0.5; 6]).is_err());
        assert!(s.with_priors(alloc::vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn hamming_examples() {
        let a: Pattern = "01".parse().unwrap();
        let b: Pattern = "10".parse().unwrap();
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&a, &b).unwrap(), 2);
        assert!(hamming(&a, &"011".parse().unwrap()).is_err());
    }

    #[test]
    fn cpf_distance_support() {
        for m in 1..=8 {
            for v in 0..=m {
                for u in v..=m {
                    let a = ImageSpace::cpf(m, v).unwrap().enumerate().unwrap();
                    let b = ImageSpace::cpf(m, u).unwrap().enumerate().unwrap();
                    let mut seen = alloc::collections::BTreeSet::new();
                    for x in &a {
                        for y in &b {
                            seen.insert(hamming(x, y).unwrap());
                        }
                    }
                    let expected: alloc::collections::BTreeSet<usize> =
                        (u..=(v + u).min(m)).map(|t| 2 * t - (v + u)).collect();
                    assert_eq!(seen, expected, "m={m} v={v} u={u}");
                }
            }
        }
    }

    #[test]
    fn census_single_block_m2() {
        let c = pair_degeneracy_census(&ImageSpace::full(2).unwrap(), &[alloc::vec![0, 1]]).unwrap();
        assert_eq!(c[&alloc::vec![(0, 1, 1)]], 4);
        assert_eq!(c[&alloc::vec![(0, 2, 2)]], 2);
        assert_eq!(c[&alloc::vec![(1, 1, 2)]], 2);
        assert_eq!(c[&alloc::vec![(1, 2, 1)]], 4);
        assert_eq!(c.values().sum::<u64>(), 12);
    }

    #[test]
    fn census_totals() {
        let s = ImageSpace::full(4).unwrap();
        let c = pair_degeneracy_census(&s, &[alloc::vec![0, 1], alloc::vec![2, 3]]).unwrap();
        assert_eq!(c.values().sum::<u64>(), 240);
        let s = ImageSpace::bcpf(5, &[1, 3]).unwrap();
        let n = s.len().unwrap() as u64;
        let c = pair_degeneracy_census(&s, &[alloc::vec![0, 1, 2, 3, 4]]).unwrap();
        assert_eq!(c.values().sum::<u64>(), n * n - n);
    }

    #[test]
    fn census_matches_cpf_binomials() {
        for m in 2..=10 {
            for k in 1..m {
                let s = ImageSpace::cpf(m, k).unwrap();
                let c = pair_degeneracy_census(&s, &[(0..m).collect()]).unwrap();
                for t in (k + 1)..=(2 * k).min(m) {
                    let d = 2 * (t - k);
                    let expected = pair_count(m, k, k, t) as u64;
                    assert_eq!(c.get(&alloc::vec![(k, k, d)]).copied().unwrap_or(0), expected);
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let s = ImageSpace::parse_text("# two patterns\n011 3\n100 1\n").unwrap();
        assert_eq!(s.priors().unwrap(), [0.75, 0.25]);
        let again = ImageSpace::parse_text(&s.to_text().unwrap()).unwrap();
        assert_eq!(again, s);
        let u = ImageSpace::parse_text("01\n10\n").unwrap();
        assert!(u.is_uniform());
        assert!(ImageSpace::parse_text("01 1\n10\n").is_err());
        assert!(matches!(ImageSpace::parse_text("01\n1x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(ImageSpace::parse_text("01\n01\n").is_err());
    }

    #[test]
    fn extension_is_injective() {
        let base = ImageSpace::full(3).unwrap();
        let ext = ExtendedImageSpace::new(base, alloc::vec![0, 1, 1, 2, 0, 2]).unwrap();
        let pats = ext.enumerate().unwrap();
        assert_eq!(pats.len(), 8);
        let mut sorted = pats.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
        assert_eq!(ext.map(&"110".parse().unwrap()).unwrap().to_string(), "111010");
        assert!(ExtendedImageSpace::new(ImageSpace::full(3).unwrap(), alloc::vec![0, 1]).is_err());
    }
}
