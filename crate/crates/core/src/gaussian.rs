//! Covariance-matrix algebra for zero-structured Gaussian states: construction,
//! symplectic spectra, the bona fide condition and the multimode fidelity.
//!
//! Quadratures are interleaved, `(x1, p1, ..., xn, pn)`, and the vacuum has
//! covariance `I/2`. A state may carry a mean vector; it is zero unless set.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Vacuum shot noise.
pub const SHOT_NOISE: f64 = 0.5;
/// Asymmetry accepted (and removed) when building a [`CovMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Tolerance for the bona fide condition and the fidelity range check.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Covariance matrix of an `n`-mode Gaussian state, with its mean vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CovMatrix {
    data: DMatrix<f64>,
    mean: DVector<f64>,
}

impl CovMatrix {
    /// Builds a covariance matrix from a `2n x 2n` real matrix.
    ///
    /// The matrix must be finite and symmetric up to [`SYMMETRY_TOL`] (relative to
    /// its largest entry); the stored matrix is the exact symmetric part.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let dim = data.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || data.ncols() != dim {
            return Err(Error::Dimension { expected: 2 * (dim / 2).max(1), found: dim });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("covariance matrix has non-finite entries".into()));
        }
        let scale = data.amax().max(1.0);
        let asym = (&data - data.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Numeric(format!("covariance matrix is not symmetric ({asym:e})")));
        }
        let data = (&data + data.transpose()) * 0.5;
        Ok(Self { mean: DVector::zeros(dim), data })
    }

    /// `n`-mode vacuum.
    pub fn vacuum(n_modes: usize) -> Self {
        Self::thermal(&alloc::vec![0.0; n_modes])
    }

    /// Product of thermal states with the given mean photon numbers.
    pub fn thermal(photons: &[f64]) -> Self {
        let diag: Vec<f64> = photons.iter().flat_map(|&n| [n + SHOT_NOISE; 2]).collect();
        let dim = diag.len();
        Self { data: DMatrix::from_diagonal(&DVector::from_vec(diag)), mean: DVector::zeros(dim) }
    }

    /// Product of coherent states with real amplitudes `alpha_k`.
    ///
    /// Mode `k` gets mean `x_k = sqrt(2) alpha_k`, so `|<alpha|beta>| = exp(-|alpha-beta|^2/2)`.
    pub fn coherent(amplitudes: &[f64]) -> Self {
        let mut state = Self::vacuum(amplitudes.len());
        for (k, &alpha) in amplitudes.iter().enumerate() {
            state.mean[2 * k] = core::f64::consts::SQRT_2 * alpha;
        }
        state
    }

    /// Replaces the mean vector.
    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: mean.len() });
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("mean vector has non-finite entries".into()));
        }
        self.mean = mean;
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn has_displacement(&self) -> bool {
        self.mean.iter().any(|&x| x != 0.0)
    }

    /// Direct sum `A ⊕ B ⊕ ...` (tensor product of the states).
    pub fn direct_sum(parts: &[CovMatrix]) -> Result<Self> {
        let dim: usize = parts.iter().map(CovMatrix::dim).sum();
        if dim == 0 {
            return Err(Error::Dimension { expected: 2, found: 0 });
        }
        let mut data = DMatrix::zeros(dim, dim);
        let mut mean = DVector::zeros(dim);
        let mut offset = 0;
        for part in parts {
            let d = part.dim();
            data.view_mut((offset, offset), (d, d)).copy_from(&part.data);
            mean.rows_mut(offset, d).copy_from(&part.mean);
            offset += d;
        }
        Ok(Self { data, mean })
    }

    /// Reduced state on the listed modes, in the listed order.
    pub fn select_modes(&self, modes: &[usize]) -> Result<Self> {
        let n = self.n_modes();
        if let Some(&bad) = modes.iter().find(|&&k| k >= n) {
            return Err(Error::Dimension { expected: n, found: bad + 1 });
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let d = idx.len();
        let data = DMatrix::from_fn(d, d, |r, c| self.data[(idx[r], idx[c])]);
        let mean = DVector::from_fn(d, |r, _| self.mean[idx[r]]);
        Ok(Self { data, mean })
    }

    /// Applies the affine map `V -> X V X^T + Y`, `d -> X d`.
    pub(crate) fn transform(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        let data = x * &self.data * x.transpose() + y;
        let data = (&data + data.transpose()) * 0.5;
        Self { data, mean: x * &self.mean }
    }

    /// Whether every symplectic eigenvalue is at least `1/2 - PHYSICAL_TOL`.
    pub fn is_bona_fide(&self) -> Result<bool> {
        Ok(symplectic_spectrum(self)?.min() >= SHOT_NOISE - PHYSICAL_TOL)
    }

    /// Whether the state is pure to working precision.
    ///
    /// Symplectic eigenvalues are only resolved to about `eps * |V|^2`, so the
    /// comparison against `1/2` scales with the largest entry.
    pub fn is_pure(&self) -> Result<bool> {
        let spectrum = symplectic_spectrum(self)?;
        let tol = purity_tolerance(&self.data);
        Ok(spectrum.values().iter().all(|&v| (v - SHOT_NOISE).abs() <= tol))
    }

    fn lexicographic_cmp(&self, other: &Self) -> Ordering {
        self.data
            .iter()
            .chain(self.mean.iter())
            .zip(other.data.iter().chain(other.mean.iter()))
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

fn purity_tolerance(v: &DMatrix<f64>) -> f64 {
    let scale = v.amax().max(1.0);
    16.0 * f64::EPSILON * scale * scale
}

/// Symplectic eigenvalues, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// The symplectic form `⊕ [[0, 1], [-1, 0]]` for interleaved quadratures.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Williamson eigenvalues of `V`: the moduli of the eigenvalues of `iΩV`.
pub fn symplectic_spectrum(v: &CovMatrix) -> Result<SymplecticSpectrum> {
    symplectic_spectrum_with(v.matrix(), &symplectic_form(v.n_modes()))
}

/// [`symplectic_spectrum`] against an explicit symplectic form.
///
/// For positive-definite `V = L L^T` the values are the singular values of the
/// antisymmetric `L^T Ω L`, each appearing twice; otherwise the moduli of the
/// eigenvalues of `ΩV` are paired up.
pub fn symplectic_spectrum_with(v: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<SymplecticSpectrum> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite covariance matrix".into()));
    }
    let n = v.nrows() / 2;
    let mut raw: Vec<f64> = match v.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let a = l.transpose() * omega * &l;
            a.singular_values().iter().copied().collect()
        }
        None => {
            let m = omega * v;
            crate::eigen::eigenvalues(m)?.into_iter().map(|(re, im)| libm::hypot(re, im)).collect()
        }
    };
    raw.sort_by(f64::total_cmp);
    let values = raw.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect::<Vec<_>>();
    debug_assert_eq!(values.len(), n);
    Ok(SymplecticSpectrum { values })
}

/// Maximal correlation of an `m`-mode GHZ block: `sqrt(mu^2 - 1/4) / (m - 1)`.
pub fn ghz_correlation(m: usize, mu: f64) -> Result<f64> {
    check_energy(mu)?;
    if m < 2 {
        return Err(Error::InvalidPartition(format!("a GHZ block needs at least 2 modes, got {m}")));
    }
    Ok(libm::sqrt(mu * mu - 0.25) / (m - 1) as f64)
}

pub(crate) fn check_energy(mu: f64) -> Result<()> {
    if !mu.is_finite() || mu < SHOT_NOISE {
        return Err(Error::InvalidEnergy(mu));
    }
    Ok(())
}

/// Symmetric `m`-mode CV-GHZ covariance matrix with `mu I` diagonal blocks and
/// `diag(c, -c)` off-diagonal blocks at the bona fide limit.
pub fn ghz_cm(m: usize, mu: f64) -> Result<CovMatrix> {
    let c = ghz_correlation(m, mu)?;
    let dim = 2 * m;
    let data = DMatrix::from_fn(dim, dim, |r, s| {
        let (jr, js) = (r / 2, s / 2);
        let (qr, qs) = (r % 2, s % 2);
        if qr != qs {
            0.0
        } else if jr == js {
            mu
        } else if qr == 0 {
            c
        } else {
            -c
        }
    });
    Ok(CovMatrix { data, mean: DVector::zeros(dim) })
}

/// Orthogonal Helmert basis of `m` modes: row 0 is the uniform superposition,
/// row `k` is `(1, ..., 1, -k, 0, ...) / sqrt(k (k + 1))`.
pub fn collective_modes(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |k, j| {
        if k == 0 {
            1.0 / libm::sqrt(m as f64)
        } else {
            let norm = libm::sqrt((k * (k + 1)) as f64);
            match j.cmp(&k) {
                core::cmp::Ordering::Less => 1.0 / norm,
                core::cmp::Ordering::Equal => -(k as f64) / norm,
                core::cmp::Ordering::Greater => 0.0,
            }
        }
    })
}

/// [`ghz_cm`] expressed in the [`collective_modes`] basis, where it is diagonal.
///
/// The squeezed quadratures are formed without cancellation, so the state
/// stays accurate at large `mu` where `mu - c` would lose digits.
pub fn ghz_cm_collective(m: usize, mu: f64) -> Result<CovMatrix> {
    let c = ghz_correlation(m, mu)?;
    let root = libm::sqrt(mu * mu - 0.25);
    let squeezed = 0.25 / (mu + root);
    let mut diag = Vec::with_capacity(2 * m);
    diag.extend([mu + root, squeezed]);
    for _ in 1..m {
        let lo = if m == 2 { squeezed } else { mu - c };
        diag.extend([lo, mu + c]);
    }
    Ok(CovMatrix { data: DMatrix::from_diagonal(&DVector::from_vec(diag)), mean: DVector::zeros(2 * m) })
}

/// Two-mode squeezed vacuum, the `m = 2` GHZ state.
pub fn tmsv_cm(mu: f64) -> Result<CovMatrix> {
    ghz_cm(2, mu)
}

/// Closed-form GHZ spectrum `(sqrt((mu - c)(mu + c)), sqrt((mu + (m-1)c)(mu - (m-1)c)))`;
/// the first value is `(m-1)`-fold degenerate, the second is single.
pub fn ghz_spectrum_closed_form(m: usize, mu: f64) -> Result<(f64, f64)> {
    let c = ghz_correlation(m, mu)?;
    let k = (m - 1) as f64;
    let degenerate = libm::sqrt((mu - c) * (mu + c));
    let single = libm::sqrt(((mu + k * c) * (mu - k * c)).max(0.0));
    Ok((degenerate, single))
}

/// Root fidelity between two Gaussian states.
///
/// The modes are first split into the connected components of the coupling
/// pattern shared by both matrices; the fidelity is multiplicative over those
/// components, which keeps block-diagonal probe outputs cheap and lets pure
/// components take the exact pure-state expression.
pub fn gaussian_fidelity(a: &CovMatrix, b: &CovMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), found: b.dim() });
    }
    let (a, b) = canonical_pair(a, b);
    let components = coupled_components(a, b);
    if components.len() == 1 {
        return log_fidelity_dense(a, b).and_then(finish);
    }
    let mut log_f = 0.0;
    for modes in &components {
        let sa = a.select_modes(modes)?;
        let sb = b.select_modes(modes)?;
        log_f += log_fidelity_dense(&sa, &sb)?;
    }
    finish(log_f)
}

/// Root fidelity evaluated on the full matrices, without block factorisation.
pub fn fidelity_dense(a: &CovMatrix, b: &CovMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), found: b.dim() });
    }
    let (a, b) = canonical_pair(a, b);
    log_fidelity_dense(a, b).and_then(finish)
}

fn canonical_pair<'a>(a: &'a CovMatrix, b: &'a CovMatrix) -> (&'a CovMatrix, &'a CovMatrix) {
    // Evaluation order is fixed so that F(a, b) and F(b, a) agree bit for bit.
    if a.lexicographic_cmp(b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

fn finish(log_f: f64) -> Result<f64> {
    let f = libm::exp(log_f);
    if !f.is_finite() || f > 1.0 + PHYSICAL_TOL {
        return Err(Error::Numeric(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

fn coupled_components(a: &CovMatrix, b: &CovMatrix) -> Vec<Vec<usize>> {
    let n = a.n_modes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut k: usize) -> usize {
        while parent[k] != k {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        k
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let coupled = [a.matrix(), b.matrix()]
                .iter()
                .any(|m| (0..2).any(|p| (0..2).any(|q| m[(2 * i + p, 2 * j + q)] != 0.0)));
            if coupled {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = alloc::vec![usize::MAX; n];
    for k in 0..n {
        let r = root(&mut parent, k);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(k);
    }
    groups
}

/// `ln F` for two states of equal size.
///
/// `F = F_tot det(V_a + V_b)^(-1/4) exp(-δ^T (V_a + V_b)^(-1) δ / 4)` with
/// `F_tot^4 = det[2 (sqrt(1 + (V_aux Ω)^(-2)/4) + 1) V_aux]` and
/// `V_aux = Ω^T (V_a + V_b)^(-1) (Ω/4 + V_b Ω V_a)`. The eigenvalues of
/// `V_aux Ω` come in pairs `±i v_k`, which reduces `F_tot` to
/// `prod_k sqrt(2 v_k + sqrt(4 v_k^2 - 1))`.
///
/// Near `v_k = 1/2` the square root turns rounding error `ε` into `sqrt(ε)`.
/// Exactly pure modes force such eigenvalues, so their number is read off the
/// symplectic spectra and the matching `4 v_k^2 - 1` are set to zero.
fn log_fidelity_dense(a: &CovMatrix, b: &CovMatrix) -> Result<f64> {
    let sum = a.matrix() + b.matrix();
    let chol = sum.clone().cholesky().ok_or_else(|| Error::Numeric("V_a + V_b is not positive definite".into()))?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|x| libm::log(*x)).sum::<f64>();
    let delta = a.mean() - b.mean();
    let displacement = if delta.iter().any(|&x| x != 0.0) { delta.dot(&chol.solve(&delta)) } else { 0.0 };
    let n = a.n_modes();
    let pure = pure_mode_count(a)?.max(pure_mode_count(b)?);
    let log_tot = if pure == n {
        0.0
    } else {
        let mut excess = if is_quadrature_split(a) && is_quadrature_split(b) {
            split_excess(a, b)?
        } else {
            general_excess(a, b, &chol)?
        };
        excess.sort_by(f64::total_cmp);
        excess.iter().skip(pure).map(|&l| 0.5 * libm::asinh(libm::sqrt(l.max(0.0)))).sum()
    };
    Ok(log_tot - 0.25 * log_det - 0.25 * displacement)
}

fn pure_mode_count(v: &CovMatrix) -> Result<usize> {
    let tol = purity_tolerance(v.matrix());
    Ok(symplectic_spectrum(v)?.values().iter().filter(|&&x| x - SHOT_NOISE <= tol).count())
}

/// No correlations between any `x` and any `p` quadrature.
fn is_quadrature_split(v: &CovMatrix) -> bool {
    let d = v.dim();
    (0..d).all(|r| ((r + 1) % 2..d).step_by(2).all(|c| v.matrix()[(r, c)] == 0.0))
}

fn quadrature_blocks(v: &CovMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = v.n_modes();
    let m = v.matrix();
    (DMatrix::from_fn(n, n, |i, j| m[(2 * i, 2 * j)]), DMatrix::from_fn(n, n, |i, j| m[(2 * i + 1, 2 * j + 1)]))
}

fn spd_inverse(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.cholesky().map(|c| c.inverse()).ok_or_else(|| Error::Numeric("covariance block is not positive definite".into()))
}

/// `4 v_k^2 - 1` for states of the form `X ⊕ P`.
///
/// With `Q_i = P_i - X_i^(-1)/4` and `R = (X_a^(-1) + X_b^(-1))/4` these are the
/// eigenvalues of `(P_a + P_b)^(-1) Q_b R^(-1) Q_a`, a product that vanishes
/// with the mixedness instead of cancelling towards it.
fn split_excess(a: &CovMatrix, b: &CovMatrix) -> Result<Vec<f64>> {
    let (xa, pa) = quadrature_blocks(a);
    let (xb, pb) = quadrature_blocks(b);
    let xa_inv = spd_inverse(xa)? * 0.25;
    let xb_inv = spd_inverse(xb)? * 0.25;
    let qa = &pa - &xa_inv;
    let qb = &pb - &xb_inv;
    let r_inv = spd_inverse(xa_inv + xb_inv)?;
    let sp_inv = spd_inverse(pa + pb)?;
    let k = sp_inv * qb * r_inv * qa;
    real_eigenvalues(k)
}

/// `4 v_k^2 - 1` from the full `2n x 2n` auxiliary matrix `W = V_aux Ω`,
/// as the eigenvalues of `-4 W^2 - I` (each appears twice).
fn general_excess(a: &CovMatrix, b: &CovMatrix, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> Result<Vec<f64>> {
    let dim = a.dim();
    let omega = symplectic_form(a.n_modes());
    let inner = &omega * 0.25 + b.matrix() * &omega * a.matrix();
    let w = omega.transpose() * chol.solve(&inner) * &omega;
    let k = -(&w * &w) * 4.0 - DMatrix::identity(dim, dim);
    let mut values = real_eigenvalues(k)?;
    values.sort_by(f64::total_cmp);
    Ok(values.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Eigenvalues of a matrix known to have a real, nonnegative spectrum.
fn real_eigenvalues(k: DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(crate::eigen::eigenvalues(k)?.into_iter().map(|z| z.0).collect())
}
