//! Supporting pencils, Schur-complement reconstruction and pencil
//! representations of monotone free functions.
//!
//! Coefficients act on the left tensor factor. For a support certificate at
//! `(A, v)` on `N = C^n` the coefficient space is the transpose picture of `N`:
//! `B_i = G_i^T` for the gradient `G_i` of `X -> v* F(X) v`, and the pivot is
//! `span(conj v)`. With this convention `vec(I) = sum_j e_j (x) e_j` is a
//! kernel vector of the support pencil at `(F(A), A)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cert::hypo_sample;
use crate::error::{Error, Result};
use crate::freefun::{frechet_derivative, lookup, Domain, FreeFn, Props};
use crate::matcore::random::{self, trial_rng};
use crate::matcore::{
    block_diag, coordinate_columns, frob, im_part, min_eig, op_norm, re, tensor, CVec, GenMat, HermMat, MatTuple,
    Tolerances, C64, ONE, ZERO,
};
use crate::pencil::{LinearPencil, RawPencil};
use crate::schur::{schur_pencil, shorted_with_bases, HalfSpace, PivotSubspace};

/// Support pencil `L(Y, X) = B_0 (x) I - P (x) Y + sum B_i (x) (X_i - I)`
/// at a boundary point `(F(A), A)` of the hypograph, `P = conj(v) conj(v)*`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportCertificate {
    pub function: String,
    pub base_point: MatTuple,
    pub v: CVec,
    pub pencil: LinearPencil,
    /// `tr B_0`, the normalisation of the supporting affine functional.
    pub c: f64,
    /// Gradients `G_i` of `X -> v* F(X) v` at `A`.
    pub gradient_mats: Vec<HermMat>,
    pub validation: SupportValidation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportValidation {
    pub samples: usize,
    /// Smallest `lambda_min(L(Y, X))` over the hypograph samples.
    pub support_margin: f64,
    /// `F(c2, ..., c2) / min(1, c1)`.
    pub trace_bound: f64,
    /// `trace_bound - tr B_0`.
    pub trace_slack: f64,
    pub interval: (f64, f64),
}

impl SupportCertificate {
    pub fn dim(&self) -> usize {
        self.base_point.dim()
    }

    /// The pivot `span(conj v)` inside the coefficient space.
    pub fn pivot(&self) -> Result<PivotSubspace> {
        PivotSubspace::span(&self.v.conjugate())
    }

    /// `L(Y, X)` at arguments of any size.
    pub fn eval(&self, y: &HermMat, x: &MatTuple) -> Result<GenMat> {
        crate::matcore::ensure_dim(x.dim(), y.dim())?;
        let p = HermMat::outer(&self.v.conjugate());
        Ok(self.pencil.eval_shifted(x)? - tensor(&p, y))
    }
}

/// Options for building and validating a support certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportOptions {
    /// Spectral interval `[c1, c2]` of the base point.
    pub interval: (f64, f64),
    /// Hypograph samples, split between sizes `n` and `2n`.
    pub samples: usize,
    pub seed: u64,
}

impl Default for SupportOptions {
    fn default() -> Self {
        SupportOptions { interval: (0.5, 2.0), samples: 200, seed: 0 }
    }
}

/// Orthonormal basis of `n x n` Hermitian matrices for the trace inner product.
fn hermitian_basis(n: usize) -> Vec<HermMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in j..n {
            let mut m = GenMat::zeros(n, n);
            if j == k {
                m[(j, j)] = ONE;
                out.push(HermMat::symmetrize(&m));
                continue;
            }
            m[(j, k)] = re(s);
            m[(k, j)] = re(s);
            out.push(HermMat::symmetrize(&m));
            let mut m = GenMat::zeros(n, n);
            m[(j, k)] = C64::new(0.0, s);
            m[(k, j)] = C64::new(0.0, -s);
            out.push(HermMat::symmetrize(&m));
        }
    }
    out
}

/// `v* DF(A)[H] v` by Richardson-extrapolated central differences, falling
/// back to the validated derivative when a step leaves the domain.
fn directional(f: &FreeFn, a: &MatTuple, h: &MatTuple, v: &CVec, step: f64, tol: &Tolerances) -> Result<f64> {
    let quad = |x: &MatTuple| -> Result<f64> { Ok((v.adjoint() * f.eval(x)?.as_mat() * v)[(0, 0)].re) };
    let central = |s: f64| -> Result<f64> { Ok((quad(&a.add_scaled(h, s)?)? - quad(&a.add_scaled(h, -s)?)?) / (2.0 * s)) };
    match (central(step), central(step / 2.0)) {
        (Ok(d1), Ok(d2)) => Ok((4.0 * d2 - d1) / 3.0),
        _ => {
            let d = frechet_derivative(f, a, h, None, tol)?;
            Ok((v.adjoint() * d.as_mat() * v)[(0, 0)].re)
        }
    }
}

/// Gradient of `X -> v* F(X) v` at `A`, one matrix per argument slot.
pub fn gradient_mats(f: &FreeFn, a: &MatTuple, v: &CVec, tol: &Tolerances) -> Result<Vec<HermMat>> {
    let (k, n) = (a.arity(), a.dim());
    let basis = hermitian_basis(n);
    let step = 1e-3 * a.min_eig().clamp(f64::MIN_POSITIVE, 1.0);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut g = GenMat::zeros(n, n);
        for h in &basis {
            let dirs = (0..k).map(|j| if j == i { h.clone() } else { HermMat::zeros(n) }).collect();
            let coef = directional(f, a, &MatTuple::new(dirs)?, v, step, tol)?;
            g += h.as_mat() * re(coef);
        }
        out.push(HermMat::symmetrize(&g));
    }
    Ok(out)
}

/// Clips eigenvalues of a nearly PSD matrix at zero.
fn clip_psd(h: &HermMat) -> HermMat {
    HermMat::symmetrize(&h.eigh().map(|x| x.max(0.0)))
}

/// Builds the support pencil of `F` at `(A, v)` and validates it on random
/// hypograph points of sizes `n` and `2n`.
///
/// `B_0` is the unique matrix for which `vec(I)` lies in the kernel of
/// `L(F(A), A)`: `B_0^T = Herm(F(A) v v* - sum (A_i - I) G_i)`.
pub fn support_pencil(f: &FreeFn, a: &MatTuple, v: &CVec, opts: &SupportOptions, tol: &Tolerances) -> Result<SupportCertificate> {
    a.ensure_arity(f.arity())?;
    let n = a.dim();
    crate::matcore::ensure_dim(n, v.len())?;
    let (c1, c2) = opts.interval;
    if !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
        return Err(Error::BadConfig(format!("interval must satisfy 0 < c1 < c2, got [{c1}, {c2}]")));
    }
    let lo = a.min_eig();
    let hi = a.max_eig();
    let slack = tol.eq * (1.0 + c2);
    if lo < c1 - slack || hi > c2 + slack {
        return Err(Error::BadConfig(format!("base point spectrum [{lo:.6}, {hi:.6}] leaves [{c1}, {c2}]")));
    }
    if (v.norm() - 1.0).abs() > tol.eq {
        return Err(Error::BadConfig("v must be a unit vector".into()));
    }

    let raw_grads = gradient_mats(f, a, v, tol)?;
    let mut grads = Vec::with_capacity(raw_grads.len());
    for (index, g) in raw_grads.iter().enumerate() {
        let m = g.min_eig();
        if m < -10.0 * tol.psd {
            return Err(Error::GradientNotPSD { index, min_eig: m });
        }
        grads.push(clip_psd(g));
    }
    let fa = f.eval(a)?;
    let mut m = fa.as_mat() * v * v.adjoint();
    for (ai, g) in a.iter().zip(&grads) {
        m -= (ai.as_mat() - GenMat::identity(n, n)) * g.as_mat();
    }
    let m = HermMat::symmetrize(&m);
    let alpha = m.trace();
    if !(alpha > 0.0) {
        return Err(Error::NegativeNormalization { alpha });
    }
    let mut coeffs = vec![HermMat::symmetrize(&m.as_mat().transpose())];
    coeffs.extend(grads.iter().map(|g| HermMat::symmetrize(&g.as_mat().transpose())));
    let pencil = RawPencil::new(coeffs)?.validate(&certificate_tolerances(tol))?;

    let trace_bound = f.scalar(&vec![c2; f.arity()])? / c1.min(1.0);
    let mut cert = SupportCertificate {
        function: f.id().to_string(),
        base_point: a.clone(),
        v: v.clone(),
        pencil,
        c: alpha,
        gradient_mats: grads,
        validation: SupportValidation {
            samples: 0,
            support_margin: f64::INFINITY,
            trace_bound,
            trace_slack: trace_bound - alpha,
            interval: opts.interval,
        },
    };
    let sample_interval = match f.domain() {
        Domain::Positive => (0.5 * c1, 2.0 * c2),
        Domain::Interval { lo, hi } => (lo.max(0.5 * c1), hi.min(2.0 * c2)),
    };
    for s in 0..opts.samples {
        let mut rng = trial_rng(opts.seed, s as u64);
        let size = if s % 2 == 0 { n } else { 2 * n };
        let h = hypo_sample(f, size, sample_interval, &mut rng)?;
        let l = cert.eval(&h.y, &h.x)?;
        let margin = min_eig(&l);
        cert.validation.support_margin = cert.validation.support_margin.min(margin);
        cert.validation.samples += 1;
        if margin < -tol.psd_slack(&l) {
            return Err(Error::SupportViolated { sample: s, min_eig: margin });
        }
    }
    if cert.validation.trace_slack < -tol.eq {
        return Err(Error::VerificationFailed { index: 0, residual: -cert.validation.trace_slack });
    }
    Ok(cert)
}

/// Gradients come from finite differences, so certificate coefficients are
/// only PSD (and range-consistent) up to the derivative accuracy.
pub fn certificate_tolerances(tol: &Tolerances) -> Tolerances {
    Tolerances { psd: tol.psd.max(10.0 * tol.eq), rank: tol.rank.max(tol.eq), ..*tol }
}

/// The four compressions `P B P`, `P B P'`, `P' B P`, `P' B P'` of every
/// coefficient, each padded back to full size.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedCoeffs {
    pub b11: Vec<GenMat>,
    pub b12: Vec<GenMat>,
    pub b21: Vec<GenMat>,
    pub b22: Vec<GenMat>,
}

impl PartitionedCoeffs {
    /// `B_i` as the sum of its four blocks.
    pub fn reassemble(&self, i: usize) -> GenMat {
        &self.b11[i] + &self.b12[i] + &self.b21[i] + &self.b22[i]
    }
}

pub fn partition_coeffs(pencil: &RawPencil, pivot: &PivotSubspace) -> Result<PartitionedCoeffs> {
    crate::matcore::ensure_dim(pencil.dim(), pivot.ambient_dim())?;
    let d = pencil.dim();
    let p = pivot.projection().as_mat();
    let q = GenMat::identity(d, d) - p;
    let mut out = PartitionedCoeffs { b11: vec![], b12: vec![], b21: vec![], b22: vec![] };
    for b in pencil.coeffs() {
        let b = b.as_mat();
        out.b11.push(p * b * p);
        out.b12.push(p * b * &q);
        out.b21.push(&q * b * p);
        out.b22.push(&q * b * &q);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    /// Schur complement of the shifted pencil at `A`, applied to `v`.
    pub value: CVec,
    /// Norm of the tightness vector `x`; it vanishes for an exact certificate.
    pub residual: f64,
    /// `residual <= residual_tol`.
    pub tight: bool,
}

/// `D^{+1/2} r` for PSD `D`, eigenvalues up to `cut` treated as zero.
fn pinv_sqrt_apply(d: &HermMat, r: &CVec, cut: f64) -> CVec {
    let inv = d.eigh().map(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 });
    inv * r
}

fn defective(e: Error) -> Error {
    match e {
        Error::RangeInclusionViolated { residual, .. } => Error::EliminatedBlockDefective { residual },
        other => other,
    }
}

/// Evaluates the Schur-complement formula for `F(A) v` from a certificate,
/// eliminating `span(conj v)^perp (x) N` with a pseudoinverse.
pub fn reconstruct(cert: &SupportCertificate, residual_tol: f64, tol: &Tolerances) -> Result<Reconstruction> {
    let n = cert.dim();
    let pivot = cert.pivot()?;
    let m = cert.pencil.eval_shifted(&cert.base_point)?;
    let id = GenMat::identity(n, n);
    let keep = tensor(pivot.basis(), &id);
    let elim = tensor(&pivot.complement_basis(), &id);
    let s = shorted_with_bases(&m, &keep, &elim, &certificate_tolerances(tol)).map_err(defective)?;
    let value = s.shorted.as_mat() * &cert.v;
    if elim.ncols() == 0 {
        return Ok(Reconstruction { value, residual: 0.0, tight: true });
    }
    let xi = CVec::from_fn(n * n, |r, _| if r / n == r % n { ONE } else { ZERO });
    let d = HermMat::symmetrize(&(elim.adjoint() * &m * &elim));
    let r = elim.adjoint() * (&m * &xi);
    let cut = certificate_tolerances(tol).rank * op_norm(&m);
    let residual = pinv_sqrt_apply(&d, &r, cut).norm();
    Ok(Reconstruction { value, residual, tight: residual <= residual_tol })
}

/// A pencil, a pivot subspace of its coefficient space and a density matrix:
/// `F(X) = (w (x) I)(S(L(X)))` with `w = tr(T .)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PencilRepresentation {
    pub pencil: LinearPencil,
    pub pivot: PivotSubspace,
    pub state: HermMat,
}

impl PencilRepresentation {
    pub fn new(pencil: LinearPencil, pivot: PivotSubspace, state: HermMat, tol: &Tolerances) -> Result<Self> {
        crate::matcore::ensure_dim(pencil.dim(), pivot.ambient_dim())?;
        crate::matcore::ensure_dim(pencil.dim(), state.dim())?;
        let m = state.min_eig();
        if m < -tol.psd_slack(&state) {
            return Err(Error::NotPSD { min_eig: m });
        }
        let t = state.trace();
        if (t - 1.0).abs() > tol.eq {
            return Err(Error::BadConfig(format!("state trace is {t}, expected 1")));
        }
        Ok(PencilRepresentation { pencil, pivot, state })
    }

    pub fn arity(&self) -> usize {
        self.pencil.arity()
    }

    /// The representation as a black-box free function.
    pub fn free_fn(&self, id: impl Into<String>, tol: Tolerances) -> FreeFn {
        let rep = Arc::new(self.clone());
        let complex = rep.clone();
        let props = Props::ALL;
        FreeFn::new(id, self.arity(), Domain::Positive, props, move |x| rep_eval(&rep, x, &tol))
            .with_complex(move |x| rep_eval_complex(&complex, x, crate::matcore::DEFAULT_SECTOR_GRID, &tol))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectSumRep {
    pub rep: PencilRepresentation,
    /// Unit vector of the coefficient space carrying the pure state.
    pub w_vector: CVec,
    pub certificate: SupportCertificate,
    /// `||S(A_j) v_j - F(A_j) v_j|| / (1 + ||F(A_j) v_j||)` per point.
    pub residuals: Vec<f64>,
}

/// One certificate at `(sum A_j, sum v_j / sqrt J)`; its Schur complement
/// reproduces `F(A_j) v_j` at every point.
pub fn direct_sum_rep(
    f: &FreeFn,
    points: &[(MatTuple, CVec)],
    opts: &SupportOptions,
    residual_tol: f64,
    tol: &Tolerances,
) -> Result<DirectSumRep> {
    let (first, rest) = points.split_first().ok_or_else(|| Error::BadConfig("no points".into()))?;
    let mut a = first.0.clone();
    for (aj, _) in rest {
        a = a.direct_sum(aj)?;
    }
    let scale = re(1.0 / (points.len() as f64).sqrt());
    let mut entries = Vec::with_capacity(a.dim());
    for (aj, vj) in points {
        crate::matcore::ensure_dim(aj.dim(), vj.len())?;
        entries.extend(vj.iter().map(|z| z * scale));
    }
    let v = CVec::from_vec(entries);
    let certificate = support_pencil(f, &a, &v, opts, tol)?;
    let pivot = certificate.pivot()?;
    let w_vector: CVec = pivot.basis().column(0).into_owned();
    let state = HermMat::outer(&w_vector);
    let rep = PencilRepresentation::new(certificate.pencil.clone(), pivot, state, tol)?;
    let mut residuals = Vec::with_capacity(points.len());
    for (index, (aj, vj)) in points.iter().enumerate() {
        let got = rep_eval(&rep, aj, &certificate_tolerances(tol))?.as_mat() * vj;
        let want = f.eval(aj)?.as_mat() * vj;
        let residual = (&got - &want).norm() / (1.0 + want.norm());
        residuals.push(residual);
        if residual > residual_tol {
            return Err(Error::VerificationFailed { index, residual });
        }
    }
    Ok(DirectSumRep { rep, w_vector, certificate, residuals })
}

/// A block of coefficient indices closed under the pencil's sparsity, with
/// the positions (inside the block) of pivot coordinates.
struct Component {
    idx: Vec<usize>,
    pivot_pos: Vec<usize>,
}

/// Connected components of the coefficient sparsity graph, available when the
/// pivot is spanned by standard basis vectors.
fn components(rep: &PencilRepresentation) -> Option<Vec<Component>> {
    let pivot_idx = coordinate_columns(rep.pivot.basis())?;
    let d = rep.pencil.dim();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for b in rep.pencil.coeffs().iter().map(|b| b.as_mat()).chain(std::iter::once(rep.state.as_mat())) {
        for i in 0..d {
            for j in (i + 1)..d {
                if b[(i, j)] != ZERO {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..d {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out = Vec::new();
    for idx in groups.into_values() {
        let pivot_pos: Vec<usize> = idx.iter().enumerate().filter(|(_, i)| pivot_idx.contains(i)).map(|(p, _)| p).collect();
        if !pivot_pos.is_empty() {
            out.push(Component { idx, pivot_pos });
        }
    }
    Some(out)
}

fn select(m: &GenMat, idx: &[usize]) -> GenMat {
    GenMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// `(pencil, pivot, state)` restricted to one component, or the whole
/// representation.
fn pieces(rep: &PencilRepresentation) -> Result<Vec<(RawPencil, PivotSubspace, GenMat)>> {
    match components(rep) {
        Some(comps) if comps.len() > 1 => comps
            .into_iter()
            .map(|c| {
                let coeffs = rep.pencil.coeffs().iter().map(|b| HermMat::symmetrize(&select(b.as_mat(), &c.idx))).collect();
                let pivot = PivotSubspace::coordinates(c.idx.len(), &c.pivot_pos)?;
                let t = select(rep.state.as_mat(), &c.idx);
                let tq = pivot.basis().adjoint() * t * pivot.basis();
                Ok((RawPencil::new(coeffs)?, pivot, tq))
            })
            .collect(),
        _ => {
            let tq = rep.pivot.basis().adjoint() * rep.state.as_mat() * rep.pivot.basis();
            Ok(vec![(rep.pencil.raw().clone(), rep.pivot.clone(), tq)])
        }
    }
}

/// `sum_{a b} T_{ab} S_{ba}` for the `p x p` block matrix `S` with `n x n` blocks.
fn partial_trace(t: &GenMat, s: &GenMat, n: usize) -> GenMat {
    let p = t.nrows();
    let mut out = GenMat::zeros(n, n);
    for a in 0..p {
        for b in 0..p {
            let w = t[(a, b)];
            if w != ZERO {
                out += s.view((b * n, a * n), (n, n)) * w;
            }
        }
    }
    out
}

/// `(w (x) I)(S(B_0 (x) I + sum B_i (x) (X_i - I)))` for positive definite `X`.
pub fn rep_eval(rep: &PencilRepresentation, x: &MatTuple, tol: &Tolerances) -> Result<HermMat> {
    x.ensure_arity(rep.arity())?;
    let lo = x.min_eig();
    if lo <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: lo });
    }
    let n = x.dim();
    let id = GenMat::identity(n, n);
    let mut out = GenMat::zeros(n, n);
    for (pencil, pivot, t) in pieces(rep)? {
        let m = pencil.eval_shifted(x)?;
        let keep = tensor(pivot.basis(), &id);
        let elim = tensor(&pivot.complement_basis(), &id);
        let s = shorted_with_bases(&m, &keep, &elim, tol).map_err(defective)?;
        out += partial_trace(&t, s.shorted.as_mat(), n);
    }
    Ok(HermMat::symmetrize(&out))
}

/// Analytic continuation of [`rep_eval`] to tuples in the right or upper half
/// plane, through rotated Schur complements.
pub fn rep_eval_complex(rep: &PencilRepresentation, x: &MatTuple<GenMat>, grid: usize, tol: &Tolerances) -> Result<GenMat> {
    x.ensure_arity(rep.arity())?;
    let n = x.dim();
    let mut out = GenMat::zeros(n, n);
    let mut halfspace = HalfSpace::Right;
    for (pencil, pivot, t) in pieces(rep)? {
        let s = schur_pencil(&pencil, x, &pivot, grid, tol)?;
        halfspace = s.halfspace;
        out += partial_trace(&t, &s.value, n);
    }
    if halfspace == HalfSpace::Upper {
        let im = im_part(&out)?;
        let m = im.min_eig();
        if m < -tol.psd_slack(&im) {
            return Err(Error::HalfPlaneViolated { min_eig: m });
        }
    }
    Ok(out)
}

/// Integral representations over the kernel `x / (x + lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LownerIntegral {
    /// `x^p = sin(p pi)/pi int_R e^{p y} x / (x + e^y) dy`, `0 < p < 1`.
    Pow(f64),
    /// `log(1 + x) = int_0^1 (1/s) x / (x + 1/s) ds`.
    Log1p,
}

impl LownerIntegral {
    pub fn from_fn(f: &FreeFn) -> Result<Self> {
        let id = f.id();
        if id == "sqrt" {
            return Ok(LownerIntegral::Pow(0.5));
        }
        if id == "log1p" {
            return Ok(LownerIntegral::Log1p);
        }
        if let Some(p) = id.strip_prefix("pow:p=") {
            let p: f64 = p.parse().map_err(|_| Error::BadConfig(format!("bad exponent in {id}")))?;
            if p > 0.0 && p < 1.0 {
                return Ok(LownerIntegral::Pow(p));
            }
        }
        Err(Error::UnknownFunction(format!("{id} has no built-in integral representation")))
    }

    pub fn scalar(&self, x: f64) -> f64 {
        match *self {
            LownerIntegral::Pow(p) => x.powf(p),
            LownerIntegral::Log1p => x.ln_1p(),
        }
    }
}

/// `a + b x + sum_j c_j x / (x + lambda_j)` with nonnegative parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalSum {
    /// `(c_j, lambda_j)`.
    pub terms: Vec<(f64, f64)>,
    pub a: f64,
    pub b: f64,
}

impl RationalSum {
    pub fn scalar(&self, x: f64) -> f64 {
        self.a + self.b * x + self.terms.iter().map(|&(c, l)| c * x / (x + l)).sum::<f64>()
    }

    /// Largest relative error against `f` on `points` geometrically spaced
    /// points of `[c1, c2]`.
    pub fn max_rel_error(&self, f: impl Fn(f64) -> f64, interval: (f64, f64), points: usize) -> f64 {
        let (c1, c2) = interval;
        (0..points)
            .map(|j| {
                let x = c1 * (c2 / c1).powf(j as f64 / (points - 1).max(1) as f64);
                let want = f(x);
                (self.scalar(x) - want).abs() / want.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

/// Quadrature poles stay in `[c1 / POLE_WINDOW, c2 * POLE_WINDOW]`.
pub const POLE_WINDOW: f64 = 1e6;

/// Validation grid size for quadrature rules.
pub const QUADRATURE_GRID: usize = 100;

/// Gauss-Legendre nodes and weights on `[0, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let jac = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let e = SymmetricEigen::new(jac);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|j| ((e.eigenvalues[j] + 1.0) / 2.0, e.eigenvectors[(0, j)].powi(2)))
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Trapezoid rule in `y = log(lambda)` for `x^p` with `nodes` points of step
/// `h` starting at `y0`; the truncated tails become the affine part.
fn pow_rule(p: f64, nodes: usize, h: f64, y0: f64) -> RationalSum {
    let k = (p * PI).sin() / PI;
    let terms = (0..nodes)
        .map(|j| {
            let y = y0 + j as f64 * h;
            (k * h * (p * y).exp(), y.exp())
        })
        .collect();
    let left = y0 - h / 2.0;
    let right = y0 + (nodes as f64 - 0.5) * h;
    RationalSum { terms, a: k * (p * left).exp() / p, b: k * ((p - 1.0) * right).exp() / (1.0 - p) }
}

/// Rational approximation of `f` on `[c1, c2]` with `nodes` terms, validated
/// against the scalar function on a geometric grid.
pub fn quadrature_rule(kind: LownerIntegral, nodes: usize, interval: (f64, f64), rel_tol: f64) -> Result<RationalSum> {
    let (c1, c2) = interval;
    if nodes < 4 || !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
        return Err(Error::BadConfig("quadrature needs at least 4 nodes and 0 < c1 < c2".into()));
    }
    let rule = match kind {
        LownerIntegral::Log1p => RationalSum {
            terms: gauss_legendre(nodes).into_iter().map(|(s, w)| (w / s, 1.0 / s)).collect(),
            a: 0.0,
            b: 0.0,
        },
        LownerIntegral::Pow(p) => {
            // poles stay within a factor 1e6 of the interval; search step and
            // offset inside that window
            let (ylo, yhi) = (c1.ln() - POLE_WINDOW.ln(), c2.ln() + POLE_WINDOW.ln());
            let mut best: Option<(f64, RationalSum)> = None;
            for hi in 1..=60 {
                let span = (yhi - ylo) * hi as f64 / 60.0;
                let h = span / (nodes as f64 - 1.0);
                for oi in 0..=20 {
                    let y0 = ylo + (yhi - ylo - span) * oi as f64 / 20.0;
                    let rule = pow_rule(p, nodes, h, y0);
                    let err = rule.max_rel_error(|x| x.powf(p), interval, QUADRATURE_GRID);
                    if best.as_ref().is_none_or(|(e, _)| err < *e) {
                        best = Some((err, rule));
                    }
                }
            }
            best.expect("search grid is nonempty").1
        }
    };
    let error = rule.max_rel_error(|x| kind.scalar(x), interval, QUADRATURE_GRID);
    if !(error <= rel_tol) {
        return Err(Error::QuadratureInaccurate { error, tol: rel_tol });
    }
    Ok(rule)
}

/// Representation of a rational sum: one `2 x 2` cell
/// `C [[1, r], [r, 1]], C [[0, 0], [0, m]]` with `m = 1/(1 + l)`, `r^2 = l m`
/// per term (Schur complement `C x / (x + l)`) and a `1 x 1` cell for the affine part; the
/// state weighs each cell's first coordinate by its share of `C`.
pub fn rep_from_rational(sum: &RationalSum, tol: &Tolerances) -> Result<PencilRepresentation> {
    if sum.a < 0.0 || sum.b < 0.0 || sum.terms.iter().any(|&(c, l)| !(c > 0.0 && l > 0.0)) {
        return Err(Error::BadConfig("rational sums need positive weights and poles".into()));
    }
    let affine = sum.a + sum.b;
    let total: f64 = sum.terms.iter().map(|t| t.0).sum::<f64>() + affine;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::BadConfig("empty rational sum".into()));
    }
    let mut b0 = Vec::new();
    let mut b1 = Vec::new();
    let mut weights = Vec::new();
    let mut pivot = Vec::new();
    let mut offset = 0;
    for &(c, l) in &sum.terms {
        let mu = 1.0 / (1.0 + l);
        let r = (l * mu).sqrt();
        b0.push(GenMat::from_row_slice(2, 2, &[re(total), re(total * r), re(total * r), re(total)]));
        b1.push(GenMat::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, re(total * mu)]));
        weights.extend([c / total, 0.0]);
        pivot.push(offset);
        offset += 2;
    }
    if affine > 0.0 {
        b0.push(GenMat::from_element(1, 1, re(total)));
        b1.push(GenMat::from_element(1, 1, re(total * sum.b / affine)));
        weights.push(affine / total);
        pivot.push(offset);
        offset += 1;
    }
    let pencil = RawPencil::new(vec![HermMat::symmetrize(&block_diag(&b0)), HermMat::symmetrize(&block_diag(&b1))])?
        .validate(tol)?;
    let pivot = PivotSubspace::coordinates(offset, &pivot)?;
    let sum_w: f64 = weights.iter().sum();
    let state = HermMat::from_real_diagonal(&weights.iter().map(|w| w / sum_w).collect::<Vec<_>>());
    PencilRepresentation::new(pencil, pivot, state, tol)
}

/// Pencil representation of `sqrt`, `log1p` or `pow:p=..` from a quadrature
/// of its integral representation.
pub fn rep_from_quadrature(f: &FreeFn, nodes: usize, interval: (f64, f64), rel_tol: f64, tol: &Tolerances) -> Result<PencilRepresentation> {
    let kind = LownerIntegral::from_fn(f)?;
    rep_from_rational(&quadrature_rule(kind, nodes, interval, rel_tol)?, tol)
}

/// Default node count for quadrature representations.
pub const DEFAULT_NODES: usize = 64;

/// Random hypograph base points with a unit vector, used by examples and tests.
pub fn random_base_point<R: Rng + ?Sized>(k: usize, n: usize, interval: (f64, f64), rng: &mut R) -> (MatTuple, CVec) {
    (random::tuple_in_interval(k, n, interval.0, interval.1, rng), random::unit_vector(n, rng))
}

/// `||value - F(A) v|| / (1 + ||F(A) v||)`.
pub fn reconstruction_error(f: &FreeFn, cert: &SupportCertificate, value: &CVec) -> Result<f64> {
    let want = f.eval(&cert.base_point)?.as_mat() * &cert.v;
    Ok((value - &want).norm() / (1.0 + want.norm()))
}

/// Convenience: certificate for a catalogue identifier.
pub fn support_for(id: &str, a: &MatTuple, v: &CVec, opts: &SupportOptions, tol: &Tolerances) -> Result<SupportCertificate> {
    support_pencil(&lookup(id)?, a, v, opts, tol)
}

/// `||U* F(X) U - F(U* X U)||_F` for a representation and a unitary `U`.
pub fn equivariance_defect(rep: &PencilRepresentation, x: &MatTuple, u: &GenMat, tol: &Tolerances) -> Result<f64> {
    let lhs = rep_eval(rep, x, tol)?.congruence(u);
    let rhs = rep_eval(rep, &x.congruence(u), tol)?;
    Ok(frob(&(lhs.as_mat() - rhs.as_mat())))
}

/// Largest singular value of `value - expected`, relative to `expected`.
pub fn relative_op_error(value: &GenMat, expected: &GenMat) -> f64 {
    op_norm(&(value - expected)) / op_norm(expected).max(f64::MIN_POSITIVE)
}
