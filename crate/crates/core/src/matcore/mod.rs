//! Dense complex linear algebra underneath everything else: Hermitian
//! certification, the Loewner order, functional calculus, Kronecker products,
//! real/imaginary parts, numerical-range sectors and the Douglas factor.
//!
//! All tolerances are relative: a threshold `tau` applied to a matrix `M` means
//! `tau * (1 + ||M||_F)` unless stated otherwise.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod random;
pub mod serial;

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
/// General (not necessarily square or Hermitian) complex matrix.
pub type GenMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Numerical thresholds shared by all modules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermitian defect.
    pub herm: f64,
    /// Negative eigenvalues tolerated in PSD and Loewner-order checks.
    pub psd: f64,
    /// Relative rank cutoff for pseudoinverses and range checks.
    pub rank: f64,
    /// Equality of matrices and convergence of iterations.
    pub eq: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { herm: 1e-9, psd: 1e-9, rank: 1e-10, eq: 1e-8 }
    }
}

impl Tolerances {
    pub fn new(herm: f64, psd: f64, rank: f64, eq: f64) -> Result<Self> {
        let t = Tolerances { herm, psd, rank, eq };
        if [herm, psd, rank, eq].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::BadConfig(format!("tolerances must be finite and nonnegative: {t:?}")));
        }
        Ok(t)
    }

    /// Allowed negative eigenvalue for a PSD test of `m`.
    pub fn psd_slack(&self, m: &GenMat) -> f64 {
        self.psd * (1.0 + frob(m))
    }
}

pub fn frob(m: &GenMat) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn op_norm(m: &GenMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Singular values in decreasing order.
pub fn singular_values(m: &GenMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `max |m_ij - conj(m_ji)|`.
pub fn hermitian_defect(m: &GenMat) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

pub(crate) fn ensure_square(m: &GenMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Spectral decomposition `A = V diag(values) V*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: GenMat,
}

impl Eigh {
    /// `V diag(f(values)) V*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GenMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = re(f(self.values[j]));
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of the Hermitian part of a square matrix.
pub fn eigh(m: &GenMat) -> Eigh {
    let n = m.nrows();
    if n == 0 {
        return Eigh { values: vec![], vectors: GenMat::zeros(0, 0) };
    }
    let h = (m + m.adjoint()) * re(0.5);
    let e = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = GenMat::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    Eigh { values, vectors }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eig(m: &GenMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()) * re(0.5);
    SymmetricEigen::new(h).eigenvalues.min()
}

/// Complex square matrix certified Hermitian; stored symmetrized.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMat(GenMat);

impl HermMat {
    /// Accepts `m` when `max |m_ij - conj(m_ji)| <= tau_herm (1 + ||m||_F)` and
    /// returns `(m + m*)/2`.
    pub fn certify(m: &GenMat, tol: &Tolerances) -> Result<Self> {
        let n = ensure_square(m)?;
        if n == 0 {
            return Err(Error::BadConfig("empty matrix".into()));
        }
        let defect = hermitian_defect(m);
        let allowed = tol.herm * (1.0 + frob(m));
        if defect > allowed || !defect.is_finite() {
            return Err(Error::NotHermitian { defect, allowed });
        }
        Ok(HermMat::symmetrize(m))
    }

    /// `(m + m*)/2` without any check. Panics on non-square input.
    pub fn symmetrize(m: &GenMat) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "symmetrize needs a square matrix");
        HermMat((m + m.adjoint()) * re(0.5))
    }

    pub fn identity(n: usize) -> Self {
        HermMat(GenMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        HermMat(GenMat::zeros(n, n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        HermMat(GenMat::identity(n, n) * re(s))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        HermMat(GenMat::from_fn(n, n, |i, j| if i == j { re(d[i]) } else { ZERO }))
    }

    /// Real symmetric matrix from row-major entries (symmetrized).
    pub fn from_real_rows(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n);
        HermMat::symmetrize(&GenMat::from_fn(n, n, |i, j| re(entries[i * n + j])))
    }

    /// Rank-one projector-like matrix `v v*`.
    pub fn outer(v: &CVec) -> Self {
        HermMat::symmetrize(&(v * v.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &GenMat {
        &self.0
    }

    pub fn into_mat(self) -> GenMat {
        self.0
    }

    pub fn eigh(&self) -> Eigh {
        eigh(&self.0)
    }

    pub fn min_eig(&self) -> f64 {
        min_eig(&self.0)
    }

    pub fn max_eig(&self) -> f64 {
        self.eigh().max()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `U* H U` for any (possibly rectangular) `U`.
    pub fn congruence(&self, u: &GenMat) -> HermMat {
        HermMat::symmetrize(&(u.adjoint() * &self.0 * u))
    }

    pub fn scale(&self, s: f64) -> HermMat {
        HermMat(&self.0 * re(s))
    }

    /// `true` when the matrix is PSD within `tau_psd (1 + ||A||_F)`.
    pub fn is_psd(&self, tol: &Tolerances) -> bool {
        self.min_eig() >= -tol.psd_slack(&self.0)
    }
}

impl Deref for HermMat {
    type Target = GenMat;
    fn deref(&self) -> &GenMat {
        &self.0
    }
}

impl AsRef<GenMat> for HermMat {
    fn as_ref(&self) -> &GenMat {
        &self.0
    }
}

impl Add for &HermMat {
    type Output = HermMat;
    fn add(self, rhs: &HermMat) -> HermMat {
        HermMat(&self.0 + &rhs.0)
    }
}

impl Sub for &HermMat {
    type Output = HermMat;
    fn sub(self, rhs: &HermMat) -> HermMat {
        HermMat(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HermMat {
    type Output = HermMat;
    fn mul(self, rhs: f64) -> HermMat {
        self.scale(rhs)
    }
}

pub fn herm_certify(m: &GenMat, tol: &Tolerances) -> Result<HermMat> {
    HermMat::certify(m, tol)
}

/// Square matrices that can sit in a [`MatTuple`].
pub trait SquareMat: Clone + std::fmt::Debug {
    fn mat(&self) -> &GenMat;
}

impl SquareMat for GenMat {
    fn mat(&self) -> &GenMat {
        self
    }
}

impl SquareMat for HermMat {
    fn mat(&self) -> &GenMat {
        &self.0
    }
}

/// A k-tuple of square matrices sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MatTuple<M = HermMat> {
    mats: Vec<M>,
}

impl<M: SquareMat> MatTuple<M> {
    pub fn new(mats: Vec<M>) -> Result<Self> {
        let first = mats.first().ok_or_else(|| Error::BadConfig("tuple needs at least one member".into()))?;
        let n = ensure_square(first.mat())?;
        if n == 0 {
            return Err(Error::BadConfig("empty matrix in tuple".into()));
        }
        for m in &mats[1..] {
            ensure_square(m.mat())?;
            ensure_dim(n, m.mat().nrows())?;
        }
        Ok(MatTuple { mats })
    }

    pub fn arity(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.mats[0].mat().nrows()
    }

    pub fn mats(&self) -> &[M] {
        &self.mats
    }

    pub fn iter(&self) -> std::slice::Iter<'_, M> {
        self.mats.iter()
    }

    pub fn into_vec(self) -> Vec<M> {
        self.mats
    }

    /// Sum of operator norms, the tuple norm used for Lipschitz estimates.
    pub fn norm(&self) -> f64 {
        self.mats.iter().map(|m| op_norm(m.mat())).sum()
    }

    pub fn ensure_arity(&self, k: usize) -> Result<()> {
        if self.arity() != k {
            return Err(Error::ArityMismatch { expected: k, found: self.arity() });
        }
        Ok(())
    }
}

impl<M: SquareMat> std::ops::Index<usize> for MatTuple<M> {
    type Output = M;
    fn index(&self, i: usize) -> &M {
        &self.mats[i]
    }
}

impl MatTuple<HermMat> {
    /// Tuple of 1x1 matrices.
    pub fn scalars(values: &[f64]) -> Result<Self> {
        MatTuple::new(values.iter().map(|&x| HermMat::from_real_diagonal(&[x])).collect())
    }

    /// `(c I_n, ..., c I_n)`.
    pub fn constant(k: usize, n: usize, c: f64) -> Self {
        MatTuple { mats: vec![HermMat::scaled_identity(n, c); k] }
    }

    pub fn to_general(&self) -> MatTuple<GenMat> {
        MatTuple { mats: self.mats.iter().map(|m| m.as_mat().clone()).collect() }
    }

    pub fn map(&self, f: impl Fn(&HermMat) -> HermMat) -> Self {
        MatTuple { mats: self.mats.iter().map(f).collect() }
    }

    /// Component-wise `U* X_i U`.
    pub fn congruence(&self, u: &GenMat) -> Self {
        self.map(|m| m.congruence(u))
    }

    /// Component-wise `X_i (+) Y_i`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        self.ensure_arity_of(other)?;
        MatTuple::new(self.mats.iter().zip(&other.mats).map(|(a, b)| HermMat(direct_sum(a, b))).collect())
    }

    /// `(1 - t) X + t Y`.
    pub fn lerp(&self, other: &Self, t: f64) -> Result<Self> {
        self.ensure_arity_of(other)?;
        ensure_dim(self.dim(), other.dim())?;
        Ok(MatTuple {
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| &(a * (1.0 - t)) + &(b * t)).collect(),
        })
    }

    /// `X + s H`.
    pub fn add_scaled(&self, h: &Self, s: f64) -> Result<Self> {
        self.ensure_arity_of(h)?;
        ensure_dim(self.dim(), h.dim())?;
        Ok(MatTuple { mats: self.mats.iter().zip(&h.mats).map(|(a, b)| a + &(b * s)).collect() })
    }

    /// `X + c I` in every slot.
    pub fn shift(&self, c: f64) -> Self {
        let n = self.dim();
        let s = HermMat::scaled_identity(n, c);
        self.map(|m| m + &s)
    }

    /// Smallest eigenvalue over all members.
    pub fn min_eig(&self) -> f64 {
        self.mats.iter().map(|m| m.min_eig()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_eig(&self) -> f64 {
        self.mats.iter().map(|m| m.max_eig()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Component-wise Loewner order, worst margin `min_i lambda_min(Y_i - X_i)`.
    pub fn loewner_margin_to(&self, other: &Self) -> Result<f64> {
        self.ensure_arity_of(other)?;
        let mut worst = f64::INFINITY;
        for (a, b) in self.mats.iter().zip(&other.mats) {
            worst = worst.min(loewner_margin(a, b)?);
        }
        Ok(worst)
    }

    fn ensure_arity_of(&self, other: &Self) -> Result<()> {
        self.ensure_arity(other.arity())
    }
}

/// `lambda_min(B - A)`.
pub fn loewner_margin(a: &HermMat, b: &HermMat) -> Result<f64> {
    ensure_dim(a.dim(), b.dim())?;
    Ok(min_eig(&(b.as_mat() - a.as_mat())))
}

/// `A <= B` in the Loewner order: `lambda_min(B - A) >= -tau_psd (1 + ||B - A||_F)`.
pub fn loewner_leq(a: &HermMat, b: &HermMat, tol: &Tolerances) -> Result<bool> {
    ensure_dim(a.dim(), b.dim())?;
    let d = b.as_mat() - a.as_mat();
    Ok(min_eig(&d) >= -tol.psd_slack(&d))
}

/// `U f(Lambda) U*`. Fails when `f` is not finite somewhere on the spectrum.
pub fn funcalc(f: impl Fn(f64) -> f64, a: &HermMat) -> Result<HermMat> {
    let e = a.eigh();
    for &l in &e.values {
        if !f(l).is_finite() {
            return Err(Error::SpectrumOutOfDomain { eigenvalue: l });
        }
    }
    Ok(HermMat::symmetrize(&e.map(f)))
}

/// PSD square root with negative rounding noise clipped to zero.
pub fn sqrt_psd(a: &HermMat) -> HermMat {
    HermMat::symmetrize(&a.eigh().map(|x| x.max(0.0).sqrt()))
}

/// Moore-Penrose pseudoinverse of a Hermitian matrix, eigenvalues with
/// `|lambda| <= rel_cut * max |lambda|` treated as zero.
pub fn pinv_herm(a: &HermMat, rel_cut: f64) -> HermMat {
    let e = a.eigh();
    let top = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cut = rel_cut * top;
    HermMat::symmetrize(&e.map(|x| if x.abs() <= cut || top == 0.0 { 0.0 } else { 1.0 / x }))
}

/// Inverse of a positive definite matrix.
pub fn inv_pd(a: &HermMat) -> Result<HermMat> {
    let e = a.eigh();
    let top = e.max().abs().max(1.0);
    if e.min() <= f64::EPSILON * top {
        return Err(Error::NotPositiveDefinite { min_eig: e.min() });
    }
    Ok(HermMat::symmetrize(&e.map(|x| 1.0 / x)))
}

/// Pseudoinverse of a general matrix by SVD with relative cutoff.
pub fn pinv(m: &GenMat, rel_cut: f64) -> GenMat {
    if m.is_empty() {
        return GenMat::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.max();
    let cut = rel_cut * top;
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let r = svd.singular_values.len();
    let mut out = GenMat::zeros(m.ncols(), m.nrows());
    for s in 0..r {
        let sv = svd.singular_values[s];
        if sv > cut && sv > 0.0 {
            let ucol = u.column(s);
            let vrow = vt.row(s);
            out += vrow.adjoint() * ucol.adjoint() * re(1.0 / sv);
        }
    }
    out
}

/// Inverse through LU; `None` if singular.
pub fn inverse(m: &GenMat) -> Option<GenMat> {
    m.clone().try_inverse()
}

/// Kronecker product; block `(i, j)` of the result is `A[i][j] * B`.
pub fn tensor(a: &GenMat, b: &GenMat) -> GenMat {
    a.kronecker(b)
}

/// Block-diagonal `A (+) B`.
pub fn direct_sum(a: &GenMat, b: &GenMat) -> GenMat {
    let mut out = GenMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

/// Block-diagonal of several blocks.
pub fn block_diag(blocks: &[GenMat]) -> GenMat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = GenMat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `(A + A*)/2`.
pub fn re_part(a: &GenMat) -> Result<HermMat> {
    ensure_square(a)?;
    Ok(HermMat::symmetrize(a))
}

/// `(A - A*)/(2i)`.
pub fn im_part(a: &GenMat) -> Result<HermMat> {
    ensure_square(a)?;
    let d = (a - a.adjoint()) * C64::new(0.0, -0.5);
    Ok(HermMat::symmetrize(&d))
}

/// `||U* U - I||_F`.
pub fn unitary_defect(u: &GenMat) -> f64 {
    let n = u.ncols();
    frob(&(u.adjoint() * u - GenMat::identity(n, n)))
}

/// Outcome of a numerical-range sector estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorEstimate {
    /// Largest `|arg z|` over the sampled boundary points of `W(A)`.
    pub alpha: f64,
    /// Largest `|arg z|` over the vertices of the circumscribed polygon built
    /// from the same support lines; always `>= alpha` and an upper bound for
    /// the true sector angle.
    pub alpha_upper: f64,
    /// `min Re W(A) = lambda_min(Re A)`.
    pub margin: f64,
}

impl SectorEstimate {
    /// `sec^2` of the certified (upper) angle.
    pub fn sec2(&self) -> f64 {
        let c = self.alpha_upper.cos();
        1.0 / (c * c)
    }
}

pub const DEFAULT_SECTOR_GRID: usize = 256;

/// Samples `W(A)` through the extremal eigenpairs of `Re(e^{i theta} A)` on a
/// uniform grid of `grid` angles.
pub fn sector_estimate(a: &GenMat, grid: usize) -> Result<SectorEstimate> {
    let n = ensure_square(a)?;
    if grid < 8 {
        return Err(Error::BadConfig(format!("sector grid must have at least 8 points, got {grid}")));
    }
    if n == 0 {
        return Err(Error::BadConfig("empty matrix".into()));
    }
    let margin = min_eig(a);
    let slack = Tolerances::default().psd_slack(a);
    if margin <= slack {
        return Err(Error::NotSectorial { margin });
    }
    let adj = a.adjoint();
    let mut alpha: f64 = 0.0;
    let mut support = Vec::with_capacity(grid);
    let thetas: Vec<f64> = (0..grid).map(|j| 2.0 * PI * j as f64 / grid as f64).collect();
    for &theta in &thetas {
        let rot = C64::from_polar(1.0, theta);
        let h = (a * rot + &adj * rot.conj()) * re(0.5);
        let e = eigh(&h);
        let x = e.vectors.column(n - 1).into_owned();
        let z = (x.adjoint() * a * &x)[(0, 0)];
        if z.re <= 0.0 {
            return Err(Error::NotSectorial { margin: z.re });
        }
        alpha = alpha.max(z.im.atan2(z.re).abs());
        support.push(e.max());
    }
    // Vertices of the polygon of support lines Re(e^{i theta} z) = h(theta).
    let mut alpha_upper = alpha;
    for j in 0..grid {
        let (t0, t1) = (thetas[j], thetas[(j + 1) % grid]);
        let (h0, h1) = (support[j], support[(j + 1) % grid]);
        // x cos t - y sin t = h
        let det = -t0.cos() * t1.sin() + t0.sin() * t1.cos();
        let x = (h0 * -t1.sin() + t0.sin() * h1) / det;
        let y = (t0.cos() * h1 - h0 * t1.cos()) / det;
        if x <= 0.0 {
            alpha_upper = FRAC_PI_2;
            break;
        }
        alpha_upper = alpha_upper.max(y.atan2(x).abs());
    }
    Ok(SectorEstimate { alpha, alpha_upper, margin })
}

/// Douglas factor: `C` with `A22^{1/2} C = A21`, computed from the
/// rank-truncated pseudoinverse of `A22^{1/2}`.
pub fn douglas_factor(a22: &HermMat, a21: &GenMat, tol: &Tolerances) -> Result<GenMat> {
    douglas_factor_with_defect(a22, a21, tol).map(|(c, _)| c)
}

/// [`douglas_factor`] together with `||A22^{1/2} C - A21||_F`.
///
/// The residual is the part of `A21` on the discarded eigenvectors of `A22`,
/// which avoids multiplying the root by its pseudoinverse in floating point.
pub fn douglas_factor_with_defect(a22: &HermMat, a21: &GenMat, tol: &Tolerances) -> Result<(GenMat, f64)> {
    douglas_factor_scaled(a22, a21, frob(a21) + frob(a22), tol)
}

/// [`douglas_factor_with_defect`] with the range residual allowed up to
/// `tau_rank * scale`.
pub(crate) fn douglas_factor_scaled(a22: &HermMat, a21: &GenMat, scale: f64, tol: &Tolerances) -> Result<(GenMat, f64)> {
    ensure_dim(a22.dim(), a21.nrows())?;
    let e = a22.eigh();
    let roots: Vec<f64> = e.values.iter().map(|x| x.max(0.0).sqrt()).collect();
    let top = roots.iter().fold(0.0f64, |m, x| m.max(*x));
    let cut = tol.rank * top;
    let projected = e.vectors.adjoint() * a21;
    let mut scaled = projected.clone();
    let mut residual2 = 0.0;
    for (j, &r) in roots.iter().enumerate() {
        let keep = top > 0.0 && r > cut;
        for col in 0..scaled.ncols() {
            if keep {
                scaled[(j, col)] /= re(r);
            } else {
                residual2 += projected[(j, col)].norm_sqr();
                scaled[(j, col)] = ZERO;
            }
        }
    }
    let residual = residual2.sqrt();
    let allowed = tol.rank * scale;
    if residual > allowed {
        return Err(Error::RangeInclusionViolated { residual, allowed });
    }
    Ok((&e.vectors * scaled, residual))
}

/// Orthonormal basis (columns) of the orthogonal complement of the column
/// span of the orthonormal `basis` inside `C^n`.
pub fn orthogonal_complement(basis: &GenMat) -> GenMat {
    let n = basis.nrows();
    let r = basis.ncols();
    if r == 0 {
        return GenMat::identity(n, n);
    }
    if let Some(idx) = coordinate_columns(basis) {
        let rest: Vec<usize> = (0..n).filter(|i| !idx.contains(i)).collect();
        return GenMat::from_fn(n, rest.len(), |i, j| if i == rest[j] { ONE } else { ZERO });
    }
    let p = GenMat::identity(n, n) - basis * basis.adjoint();
    let e = eigh(&p);
    let keep: Vec<usize> = (0..n).filter(|&j| e.values[j] > 0.5).collect();
    GenMat::from_fn(n, keep.len(), |i, j| e.vectors[(i, keep[j])])
}

/// If every column is exactly a standard basis vector, their indices.
pub(crate) fn coordinate_columns(basis: &GenMat) -> Option<Vec<usize>> {
    let mut idx = Vec::with_capacity(basis.ncols());
    for col in basis.column_iter() {
        let mut hit = None;
        for (i, z) in col.iter().enumerate() {
            if *z == ONE {
                if hit.is_some() {
                    return None;
                }
                hit = Some(i);
            } else if *z != ZERO {
                return None;
            }
        }
        idx.push(hit?);
    }
    Some(idx)
}
