//! Gaussian phase-insensitive channels and their action on probe states.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::gaussian::CovMatrix;
use crate::{Error, Result};

/// Longest pattern accepted anywhere in the crate.
pub const MAX_PATTERN_LEN: usize = 24;

/// Transmissivity and added noise of a single GPI channel, `V -> τV + νI`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpiParams {
    tau: f64,
    nu: f64,
}

impl GpiParams {
    /// Pure loss with transmissivity `eta`; the noise is fixed at `(1 - eta)/2`.
    pub fn pure_loss(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidChannel(format!("transmissivity {eta} not in [0, 1]")));
        }
        Ok(Self { tau: eta, nu: (1.0 - eta) / 2.0 })
    }

    /// Additive Gaussian noise of variance `nu`.
    pub fn additive_noise(nu: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidChannel(format!("added noise {nu} must be finite and >= 0")));
        }
        Ok(Self { tau: 1.0, nu })
    }

    /// Thermal loss (`tau < 1`) or amplifier (`tau > 1`) with `nu = eps |1 - tau|`.
    pub fn thermal(tau: f64, eps: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidChannel(format!("transmissivity {tau} must be finite and > 0")));
        }
        if !(eps >= 0.5 && eps.is_finite()) {
            return Err(Error::InvalidChannel(format!("thermal noise {eps} must be >= 1/2")));
        }
        Ok(Self { tau, nu: eps * (1.0 - tau).abs() })
    }

    pub fn identity() -> Self {
        Self { tau: 1.0, nu: 0.0 }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    PureLoss,
    AdditiveNoise,
    Thermal,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::PureLoss => "pure-loss",
            ChannelKind::AdditiveNoise => "additive-noise",
            ChannelKind::Thermal => "thermal",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure-loss" | "loss" => Ok(ChannelKind::PureLoss),
            "additive-noise" | "additive" => Ok(ChannelKind::AdditiveNoise),
            "thermal" => Ok(ChannelKind::Thermal),
            other => Err(Error::InvalidChannel(format!("unknown channel family '{other}'"))),
        }
    }
}

/// Background (bit 0) and target (bit 1) channels of one family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelFamily {
    kind: ChannelKind,
    background: GpiParams,
    target: GpiParams,
}

impl ChannelFamily {
    /// Rejects identical background and target channels.
    pub fn new(kind: ChannelKind, background: GpiParams, target: GpiParams) -> Result<Self> {
        let family = Self::new_unchecked(kind, background, target);
        if family.is_degenerate() {
            return Err(Error::DegenerateFamily);
        }
        Ok(family)
    }

    /// Builds a family without the distinctness check. Every fidelity is then 1.
    pub fn new_unchecked(kind: ChannelKind, background: GpiParams, target: GpiParams) -> Self {
        Self { kind, background, target }
    }

    pub fn pure_loss(eta_b: f64, eta_t: f64) -> Result<Self> {
        Self::new(ChannelKind::PureLoss, GpiParams::pure_loss(eta_b)?, GpiParams::pure_loss(eta_t)?)
    }

    pub fn additive_noise(nu_b: f64, nu_t: f64) -> Result<Self> {
        Self::new(ChannelKind::AdditiveNoise, GpiParams::additive_noise(nu_b)?, GpiParams::additive_noise(nu_t)?)
    }

    /// Thermal channels `(tau_b, eps_b)` and `(tau_t, eps_t)`.
    pub fn thermal(tau_b: f64, eps_b: f64, tau_t: f64, eps_t: f64) -> Result<Self> {
        Self::new(ChannelKind::Thermal, GpiParams::thermal(tau_b, eps_b)?, GpiParams::thermal(tau_t, eps_t)?)
    }

    /// Builds a family from the two numbers a user would quote: transmissivities for
    /// pure loss, noise variances for additive noise. Thermal families need `eps`.
    pub fn from_values(kind: ChannelKind, background: f64, target: f64, eps: Option<f64>) -> Result<Self> {
        let family = Self::from_values_unchecked(kind, background, target, eps)?;
        if family.is_degenerate() {
            return Err(Error::DegenerateFamily);
        }
        Ok(family)
    }

    /// [`Self::from_values`] without the distinctness check.
    pub fn from_values_unchecked(kind: ChannelKind, background: f64, target: f64, eps: Option<f64>) -> Result<Self> {
        let (b, t) = match kind {
            ChannelKind::PureLoss => (GpiParams::pure_loss(background)?, GpiParams::pure_loss(target)?),
            ChannelKind::AdditiveNoise => (GpiParams::additive_noise(background)?, GpiParams::additive_noise(target)?),
            ChannelKind::Thermal => {
                let eps = eps.ok_or_else(|| Error::InvalidChannel("thermal family needs eps".into()))?;
                (GpiParams::thermal(background, eps)?, GpiParams::thermal(target, eps)?)
            }
        };
        Ok(Self::new_unchecked(kind, b, t))
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn background(&self) -> GpiParams {
        self.background
    }

    pub fn target(&self) -> GpiParams {
        self.target
    }

    pub fn channel(&self, bit: bool) -> GpiParams {
        if bit {
            self.target
        } else {
            self.background
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.background == self.target
    }
}

/// A binary channel pattern; bit `k` is 1 when channel `k` is the target.
///
/// Stored as an integer with channel 0 in the most significant position, so
/// integer order is lexicographic bitstring order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    len: u8,
    value: u32,
}

impl Pattern {
    pub fn new(len: usize, value: u32) -> Result<Self> {
        if len == 0 || len > MAX_PATTERN_LEN {
            return Err(Error::Capacity { requested: len, limit: MAX_PATTERN_LEN });
        }
        if u64::from(value) >> len != 0 {
            return Err(Error::Dimension { expected: len, found: 32 - value.leading_zeros() as usize });
        }
        Ok(Self { len: len as u8, value })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let value = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        Self::new(bits.len(), if bits.len() > 32 { 0 } else { value })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(len, 0)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn bit(&self, k: usize) -> bool {
        debug_assert!(k < self.len());
        (self.value >> (self.len() - 1 - k)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |k| self.bit(k))
    }

    /// Number of target channels.
    pub fn weight(&self) -> usize {
        self.value.count_ones() as usize
    }

    /// Sub-pattern on the listed channels, in that order.
    pub fn select(&self, channels: &[usize]) -> Result<Pattern> {
        let bits: Vec<bool> = channels.iter().map(|&c| self.bit(c)).collect();
        Pattern::from_bits(&bits)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' | 'B' | 'b' => Ok(false),
                '1' | 'T' | 't' => Ok(true),
                other => Err(Error::Parse { line: 0, message: format!("bad pattern symbol '{other}'") }),
            })
            .collect::<Result<Vec<bool>>>()?;
        Pattern::from_bits(&bits)
    }
}

/// `⊕_k x_{i_k} I_2`, the diagonal of per-channel scalings in quadrature order.
pub fn pattern_scaling(x_b: f64, x_t: f64, pattern: &Pattern) -> DMatrix<f64> {
    let diag = pattern.bits().flat_map(|b| [if b { x_t } else { x_b }; 2]);
    DMatrix::from_diagonal(&DVector::from_iterator(2 * pattern.len(), diag))
}

/// `V -> X V X^T + Y` with `X = I[sqrt(τ)]`, `Y = I[ν]` for the channels of `pattern`.
pub fn apply_pattern(v: &CovMatrix, family: &ChannelFamily, pattern: &Pattern) -> Result<CovMatrix> {
    let layout = IdlerLayout::unassisted(pattern.len());
    apply_pattern_with_idlers(v, family, pattern, &layout)
}

/// Which channel (if any) each mode of a probe state passes through.
///
/// Modes mapped to `None` are idlers and stay with the user. The layout is
/// built block by block, idlers first, then the block's probe modes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdlerLayout {
    mode_channels: Vec<Option<usize>>,
}

impl IdlerLayout {
    /// Mode `k` probes channel `k`.
    pub fn unassisted(m: usize) -> Self {
        Self { mode_channels: (0..m).map(Some).collect() }
    }

    /// Per-block idler counts and channel lists.
    pub fn from_blocks<'a, I>(blocks: I) -> Self
    where
        I: IntoIterator<Item = (usize, &'a [usize])>,
    {
        let mut mode_channels = Vec::new();
        for (idlers, channels) in blocks {
            mode_channels.extend(core::iter::repeat_n(None, idlers));
            mode_channels.extend(channels.iter().map(|&c| Some(c)));
        }
        Self { mode_channels }
    }

    pub fn from_mode_channels(mode_channels: Vec<Option<usize>>) -> Self {
        Self { mode_channels }
    }

    pub fn mode_channels(&self) -> &[Option<usize>] {
        &self.mode_channels
    }

    pub fn n_modes(&self) -> usize {
        self.mode_channels.len()
    }

    pub fn n_idlers(&self) -> usize {
        self.mode_channels.iter().filter(|c| c.is_none()).count()
    }

    fn validate(&self, n_modes: usize, m: usize) -> Result<()> {
        if self.n_modes() != n_modes {
            return Err(Error::Dimension { expected: self.n_modes(), found: n_modes });
        }
        if let Some(c) = self.mode_channels.iter().flatten().find(|&&c| c >= m) {
            return Err(Error::Dimension { expected: m, found: c + 1 });
        }
        Ok(())
    }
}

/// [`apply_pattern`] for probes with idlers or a non-identity mode-to-channel map.
pub fn apply_pattern_with_idlers(
    v: &CovMatrix,
    family: &ChannelFamily,
    pattern: &Pattern,
    layout: &IdlerLayout,
) -> Result<CovMatrix> {
    let (gain, noise) = mode_channels(v, family, pattern, layout)?;
    let dim = v.dim();
    let x = DMatrix::from_fn(dim, dim, |r, s| if r == s { gain[r / 2] } else { 0.0 });
    let y = DMatrix::from_fn(dim, dim, |r, s| if r == s { noise[r / 2] } else { 0.0 });
    Ok(v.transform(&x, &y))
}

/// [`apply_pattern_with_idlers`] for a state written in the mode basis `frame`,
/// i.e. `(F ⊗ I₂) V (F ⊗ I₂)ᵀ` for an orthogonal `F`. The output stays in that basis.
pub fn apply_pattern_in_frame(
    v: &CovMatrix,
    frame: &DMatrix<f64>,
    family: &ChannelFamily,
    pattern: &Pattern,
    layout: &IdlerLayout,
) -> Result<CovMatrix> {
    if frame.nrows() != v.n_modes() || frame.ncols() != v.n_modes() {
        return Err(Error::Dimension { expected: v.n_modes(), found: frame.nrows() });
    }
    let (gain, noise) = mode_channels(v, family, pattern, layout)?;
    let rotate = |d: &[f64]| {
        let n = d.len();
        let m = DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| frame[(i, k)] * d[k] * frame[(j, k)]).sum::<f64>());
        DMatrix::from_fn(2 * n, 2 * n, |r, s| if r % 2 == s % 2 { m[(r / 2, s / 2)] } else { 0.0 })
    };
    Ok(v.transform(&rotate(&gain), &rotate(&noise)))
}

/// Per-mode `sqrt(τ)` and `ν`.
fn mode_channels(
    v: &CovMatrix,
    family: &ChannelFamily,
    pattern: &Pattern,
    layout: &IdlerLayout,
) -> Result<(Vec<f64>, Vec<f64>)> {
    layout.validate(v.n_modes(), pattern.len())?;
    Ok(layout
        .mode_channels
        .iter()
        .map(|channel| {
            let p = match channel {
                Some(c) => family.channel(pattern.bit(*c)),
                None => GpiParams::identity(),
            };
            (libm::sqrt(p.tau), p.nu)
        })
        .unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{gaussian_fidelity, tmsv_cm};
    use approx::assert_relative_eq;

    #[test]
    fn scaling_unrolled() {
        let p: Pattern = "01".parse().unwrap();
        let d = pattern_scaling(0.99f64.sqrt(), 0.97f64.sqrt(), &p);
        assert_eq!(d.diagonal().as_slice(), &[0.99f64.sqrt(), 0.99f64.sqrt(), 0.97f64.sqrt(), 0.97f64.sqrt()]);
        let p: Pattern = "110".parse().unwrap();
        let d = pattern_scaling(0.02, 0.01, &p);
        assert_eq!(d.diagonal().as_slice(), &[0.01, 0.01, 0.01, 0.01, 0.02, 0.02]);
        assert_eq!(pattern_scaling(1.0, 1.0, &p), DMatrix::identity(6, 6));
    }

    #[test]
    fn pattern_bits_and_order() {
        let p: Pattern = "1011".parse().unwrap();
        assert_eq!(p.value(), 0b1011);
        assert!(p.bit(0) && !p.bit(1));
        assert_eq!(p.to_string(), "1011");
        assert_eq!(p.weight(), 3);
        assert_eq!(p.select(&[1, 3]).unwrap().to_string(), "01");
        assert!(Pattern::new(25, 0).is_err());
        assert!(Pattern::new(2, 4).is_err());
        assert!("012".parse::<Pattern>().is_err());
    }

    #[test]
    fn param_validation() {
        assert!(GpiParams::pure_loss(1.2).is_err());
        assert!(GpiParams::additive_noise(-0.1).is_err());
        assert!(GpiParams::thermal(0.5, 0.4).is_err());
        assert!((GpiParams::pure_loss(0.9).unwrap().nu() - 0.05).abs() < 1e-16);
        assert!(ChannelFamily::pure_loss(0.9, 0.9).is_err());
        assert!(ChannelFamily::additive_noise(0.02, 0.01).is_ok());
        let amp = GpiParams::thermal(2.0, 0.75).unwrap();
        assert_eq!(amp.nu(), 0.75);
    }

    #[test]
    fn vacuum_is_fixed_by_loss() {
        let f = ChannelFamily::pure_loss(0.3, 0.8).unwrap();
        let p: Pattern = "101".parse().unwrap();
        let out = apply_pattern(&CovMatrix::vacuum(3), &f, &p).unwrap();
        assert!((out.matrix() - CovMatrix::vacuum(3).matrix()).amax() < 1e-15);
    }

    #[test]
    fn identity_channel_leaves_state() {
        let f = ChannelFamily::new_unchecked(
            ChannelKind::AdditiveNoise,
            GpiParams::additive_noise(0.0).unwrap(),
            GpiParams::additive_noise(0.0).unwrap(),
        );
        let v = tmsv_cm(3.0).unwrap();
        let out = apply_pattern(&v, &f, &"10".parse().unwrap()).unwrap();
        assert_eq!(out.matrix(), v.matrix());
    }

    #[test]
    fn tmsv_through_loss_hand_expansion() {
        let (eb, et, mu) = (0.99, 0.97, 20.5);
        let f = ChannelFamily::pure_loss(eb, et).unwrap();
        let out = apply_pattern(&tmsv_cm(mu).unwrap(), &f, &"01".parse().unwrap()).unwrap();
        let c = (mu * mu - 0.25f64).sqrt();
        let m = out.matrix();
        assert_relative_eq!(m[(0, 0)], eb * mu + (1.0 - eb) / 2.0, max_relative = 1e-15);
        assert_relative_eq!(m[(3, 3)], et * mu + (1.0 - et) / 2.0, max_relative = 1e-15);
        assert_relative_eq!(m[(0, 2)], (eb * et).sqrt() * c, max_relative = 1e-14);
        assert_relative_eq!(m[(1, 3)], -(eb * et).sqrt() * c, max_relative = 1e-14);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn idlers_untouched() {
        let f = ChannelFamily::pure_loss(1.0, 0.5).unwrap();
        let layout = IdlerLayout::from_blocks([(1usize, &[0usize][..])]);
        let v = tmsv_cm(2.0).unwrap();
        let out = apply_pattern_with_idlers(&v, &f, &"1".parse().unwrap(), &layout).unwrap();
        assert_eq!(out.matrix()[(0, 0)], 2.0);
        assert_relative_eq!(out.matrix()[(2, 2)], 0.5 * 2.0 + 0.25, max_relative = 1e-15);
        let bad = IdlerLayout::from_blocks([(2usize, &[0usize][..])]);
        assert!(apply_pattern_with_idlers(&v, &f, &"1".parse().unwrap(), &bad).is_err());
    }

    #[test]
    fn full_idler_assistance_squares_choi_fidelity() {
        let f = ChannelFamily::additive_noise(0.02, 0.01).unwrap();
        let mu = 5.0;
        let choi_b = apply_pattern_with_idlers(
            &tmsv_cm(mu).unwrap(),
            &f,
            &"0".parse().unwrap(),
            &IdlerLayout::from_blocks([(1usize, &[0usize][..])]),
        )
        .unwrap();
        let choi_t = apply_pattern_with_idlers(
            &tmsv_cm(mu).unwrap(),
            &f,
            &"1".parse().unwrap(),
            &IdlerLayout::from_blocks([(1usize, &[0usize][..])]),
        )
        .unwrap();
        let f_choi = gaussian_fidelity(&choi_b, &choi_t).unwrap();
        let probe = CovMatrix::direct_sum(&[tmsv_cm(mu).unwrap(), tmsv_cm(mu).unwrap()]).unwrap();
        let layout = IdlerLayout::from_blocks([(1usize, &[0usize][..]), (1, &[1][..])]);
        let a = apply_pattern_with_idlers(&probe, &f, &"00".parse().unwrap(), &layout).unwrap();
        let b = apply_pattern_with_idlers(&probe, &f, &"11".parse().unwrap(), &layout).unwrap();
        assert_relative_eq!(gaussian_fidelity(&a, &b).unwrap(), f_choi * f_choi, max_relative = 1e-12);
    }

    #[test]
    fn frame_application_commutes() {
        let fam = ChannelFamily::pure_loss(0.9, 0.6).unwrap();
        let p: Pattern = "101".parse().unwrap();
        let layout = IdlerLayout::from_blocks([(1, &[0usize, 1, 2][..])]);
        let v = crate::gaussian::ghz_cm(4, 2.0).unwrap();
        let o = crate::gaussian::collective_modes(4);
        let big = o.kronecker(&DMatrix::<f64>::identity(2, 2));
        let direct = apply_pattern_with_idlers(&v, &fam, &p, &layout).unwrap();
        let framed =
            apply_pattern_in_frame(&crate::gaussian::ghz_cm_collective(4, 2.0).unwrap(), &o, &fam, &p, &layout)
                .unwrap();
        assert_relative_eq!(&big * direct.matrix() * big.transpose(), framed.matrix().clone(), epsilon = 1e-12);
    }
}
