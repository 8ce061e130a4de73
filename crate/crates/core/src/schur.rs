//! Shorted operators and Schur complements.
//!
//! A [`PivotSubspace`] `S` is always the *kept* block under [`Keep::Subspace`];
//! [`Keep::Complement`] keeps `S^perp` instead and eliminates `S`. The shorted
//! operator of a PSD matrix keeps `S`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    douglas_factor_scaled, ensure_dim, frob, im_part, min_eig, op_norm, orthogonal_complement, re_part, sector_estimate,
    singular_values, tensor, CVec, GenMat, HermMat, MatTuple, SectorEstimate, Tolerances, C64, ONE, ZERO,
};
use crate::pencil::{range_basis, RawPencil};

/// Orthonormal basis of a subspace `S` of `C^ambient` and its projection.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotSubspace {
    basis: GenMat,
    projection: HermMat,
}

impl PivotSubspace {
    /// Accepts `basis` when `basis* basis = I` within `tau_eq`.
    pub fn new(basis: GenMat, tol: &Tolerances) -> Result<Self> {
        let r = basis.ncols();
        if basis.nrows() == 0 || r > basis.nrows() {
            return Err(Error::BadConfig(format!("pivot basis has shape {}x{}", basis.nrows(), r)));
        }
        let defect = frob(&(basis.adjoint() * &basis - GenMat::identity(r, r)));
        if defect > tol.eq {
            return Err(Error::BadConfig(format!("pivot basis is not orthonormal (defect {defect:.3e})")));
        }
        let projection = HermMat::symmetrize(&(&basis * basis.adjoint()));
        Ok(PivotSubspace { basis, projection })
    }

    /// Span of the standard basis vectors with the given indices.
    pub fn coordinates(ambient: usize, idx: &[usize]) -> Result<Self> {
        let mut seen = vec![false; ambient];
        for &i in idx {
            if i >= ambient || seen[i] {
                return Err(Error::BadConfig(format!("invalid pivot index {i} for dimension {ambient}")));
            }
            seen[i] = true;
        }
        let basis = GenMat::from_fn(ambient, idx.len(), |i, j| if i == idx[j] { ONE } else { ZERO });
        PivotSubspace::new(basis, &Tolerances::default())
    }

    /// `span(v)`.
    pub fn span(v: &CVec) -> Result<Self> {
        let nv = v.norm();
        if !(nv > 0.0) {
            return Err(Error::BadConfig("pivot vector is zero".into()));
        }
        let basis = GenMat::from_column_slice(v.len(), 1, (v / C64::new(nv, 0.0)).as_slice());
        PivotSubspace::new(basis, &Tolerances::default())
    }

    pub fn full(n: usize) -> Self {
        PivotSubspace { basis: GenMat::identity(n, n), projection: HermMat::identity(n) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &GenMat {
        &self.basis
    }

    pub fn projection(&self) -> &HermMat {
        &self.projection
    }

    /// Orthonormal basis of `S^perp`.
    pub fn complement_basis(&self) -> GenMat {
        orthogonal_complement(&self.basis)
    }

    /// `S (x) C^n` inside `C^ambient (x) C^n`.
    pub fn tensor_identity(&self, n: usize) -> PivotSubspace {
        PivotSubspace {
            basis: tensor(&self.basis, &GenMat::identity(n, n)),
            projection: HermMat::symmetrize(&tensor(&self.projection, &GenMat::identity(n, n))),
        }
    }

    fn bases(&self, keep: Keep) -> (GenMat, GenMat) {
        match keep {
            Keep::Subspace => (self.basis.clone(), self.complement_basis()),
            Keep::Complement => (self.complement_basis(), self.basis.clone()),
        }
    }
}

/// Which block of a partition survives the Schur complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Keep {
    Subspace,
    Complement,
}

/// `S(A) = A_11 - C* C` with `A_22^{1/2} C = A_21`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortedResult {
    pub shorted: HermMat,
    pub factor_c: GenMat,
    /// `||A_22^{1/2} C - A_21||_F`.
    pub defect: f64,
}

/// Shorted operator of a PSD matrix onto `S`, with pseudoinverse elimination.
pub fn shorted_psd(a: &HermMat, s: &PivotSubspace, tol: &Tolerances) -> Result<ShortedResult> {
    ensure_dim(s.ambient_dim(), a.dim())?;
    let m = a.min_eig();
    if m < -tol.psd_slack(a) {
        return Err(Error::NotPSD { min_eig: m });
    }
    let (k, e) = s.bases(Keep::Subspace);
    shorted_with_bases(a, &k, &e, tol)
}

/// Shorted operator for explicit kept/eliminated orthonormal bases; no PSD check.
pub(crate) fn shorted_with_bases(a: &GenMat, k: &GenMat, e: &GenMat, tol: &Tolerances) -> Result<ShortedResult> {
    let a11 = HermMat::symmetrize(&(k.adjoint() * a * k));
    if e.ncols() == 0 {
        return Ok(ShortedResult { shorted: a11, factor_c: GenMat::zeros(0, k.ncols()), defect: 0.0 });
    }
    let a22 = HermMat::symmetrize(&(e.adjoint() * a * e));
    let a21 = e.adjoint() * a * k;
    let (c, defect) = douglas_factor_scaled(&a22, &a21, frob(a), tol)?;
    let shorted = HermMat::symmetrize(&(a11.as_mat() - c.adjoint() * &c));
    Ok(ShortedResult { shorted, factor_c: c, defect })
}

/// Zero-padding `iota(Y) = Q Y Q*` of an operator on `S` into the ambient space.
pub fn embed(s: &PivotSubspace, y: &GenMat) -> GenMat {
    s.basis() * y * s.basis().adjoint()
}

/// Schur complement through the inverse of the eliminated block.
pub fn schur_generic(a: &GenMat, s: &PivotSubspace, keep: Keep, tol: &Tolerances) -> Result<GenMat> {
    ensure_dim(s.ambient_dim(), a.nrows())?;
    ensure_dim(a.nrows(), a.ncols())?;
    let (k, e) = s.bases(keep);
    schur_with_bases(a, &k, &e, tol)
}

pub(crate) fn schur_with_bases(a: &GenMat, k: &GenMat, e: &GenMat, tol: &Tolerances) -> Result<GenMat> {
    let akk = k.adjoint() * a * k;
    if e.ncols() == 0 {
        return Ok(akk);
    }
    let aee = e.adjoint() * a * e;
    let sv = singular_values(&aee);
    let ratio = sv.last().copied().unwrap_or(0.0) / sv[0].max(f64::MIN_POSITIVE);
    if !(ratio > tol.rank) {
        return Err(Error::EliminatedBlockSingular { ratio });
    }
    let ake = k.adjoint() * a * e;
    let aek = e.adjoint() * a * k;
    let solved = aee.lu().solve(&aek).ok_or(Error::EliminatedBlockSingular { ratio })?;
    Ok(akk - ake * solved)
}

/// Singular values of a Schur complement against the sector bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorBoundReport {
    /// Sampled sector angle.
    pub alpha: f64,
    /// Certified upper bound on the sector angle; the bound uses this one.
    pub alpha_upper: f64,
    pub sec2: f64,
    /// `(sigma_j(S(A)), sec^2(alpha) sigma_j(A_kept))`, decreasing order.
    pub singular_value_pairs: Vec<(f64, f64)>,
    pub schur_norm: f64,
    /// `sec^2(alpha) ||A||`.
    pub norm_bound: f64,
    pub pairs_pass: bool,
    pub norm_pass: bool,
    pub pass: bool,
}

pub fn sector_bound_check(
    a: &GenMat,
    s: &PivotSubspace,
    keep: Keep,
    grid: usize,
    tol: &Tolerances,
) -> Result<SectorBoundReport> {
    let sector = sector_estimate(a, grid)?;
    let schur = schur_generic(a, s, keep, tol)?;
    let (k, _) = s.bases(keep);
    let kept = k.adjoint() * a * &k;
    let sec2 = sector.sec2();
    let lhs = singular_values(&schur);
    let rhs = singular_values(&kept);
    let singular_value_pairs: Vec<(f64, f64)> = lhs.iter().zip(&rhs).map(|(&x, &y)| (x, sec2 * y)).collect();
    let pairs_pass = singular_value_pairs.iter().all(|&(x, b)| x <= b * (1.0 + tol.eq));
    let schur_norm = lhs.first().copied().unwrap_or(0.0);
    let norm_bound = sec2 * op_norm(a);
    let norm_pass = schur_norm <= norm_bound * (1.0 + tol.eq);
    Ok(SectorBoundReport {
        alpha: sector.alpha,
        alpha_upper: sector.alpha_upper,
        sec2,
        singular_value_pairs,
        schur_norm,
        norm_bound,
        pairs_pass,
        norm_pass,
        pass: pairs_pass && norm_pass,
    })
}

/// Right half-space `Sigma^k` (all `Re X_i > 0`) or upper half-space `Pi^k`
/// (all `Im X_i > 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfSpace {
    Right,
    Upper,
}

pub fn classify(x: &MatTuple<GenMat>, tol: &Tolerances) -> Result<HalfSpace> {
    let positive = |part: fn(&GenMat) -> Result<HermMat>| -> Result<bool> {
        for xi in x.iter() {
            let h = part(xi)?;
            if h.min_eig() <= tol.psd_slack(&h) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if positive(re_part)? {
        Ok(HalfSpace::Right)
    } else if positive(im_part)? {
        Ok(HalfSpace::Upper)
    } else {
        Err(Error::DomainViolation)
    }
}

pub const ROTATION_GRID: usize = 180;

/// Schur complement of a shifted pencil evaluation with its bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct PencilSchur {
    pub value: GenMat,
    pub halfspace: HalfSpace,
    /// Rotation `theta` in `(-pi/2, 0]` used for the elimination.
    pub theta: f64,
    /// Sector of `e^{i theta} L(X)` on `ran(B_0) (x) E`; `None` when nothing
    /// was eliminated.
    pub sector: Option<SectorEstimate>,
}

/// Schur complement of `B_0 (x) I + sum B_i (x) (X_i - I)` keeping `S (x) E`.
///
/// The coefficients are expected PSD with `B_0 >= sum B_i`, so rows of the
/// eliminated block outside `ran(B_0)` vanish and are dropped before inversion.
pub fn schur_pencil(
    l: &RawPencil,
    x: &MatTuple<GenMat>,
    s: &PivotSubspace,
    grid: usize,
    tol: &Tolerances,
) -> Result<PencilSchur> {
    ensure_dim(l.dim(), s.ambient_dim())?;
    let halfspace = classify(x, tol)?;
    let n = x.dim();
    let m = l.eval_shifted(x)?;
    let id = GenMat::identity(n, n);
    let keep = tensor(s.basis(), &id);
    let r = s.complement_basis();
    let w = if r.ncols() == 0 { r } else { &r * range_basis(&l.b0().congruence(&r), tol.rank) };
    if w.ncols() == 0 {
        return Ok(PencilSchur { value: keep.adjoint() * &m * &keep, halfspace, theta: 0.0, sector: None });
    }
    let elim = tensor(&w, &id);
    let v = tensor(&range_basis(l.b0(), tol.rank), &id);
    let mv = v.adjoint() * &m * &v;
    let slack = tol.psd_slack(&mv);
    let mut theta = None;
    for j in 0..ROTATION_GRID {
        let t = -FRAC_PI_2 * j as f64 / ROTATION_GRID as f64;
        if min_eig(&(&mv * C64::from_polar(1.0, t))) > slack {
            theta = Some(t);
            break;
        }
    }
    let theta = theta.ok_or(Error::RotationNotFound)?;
    let rot = C64::from_polar(1.0, theta);
    let sector = sector_estimate(&(&mv * rot), grid)?;
    let rotated = schur_with_bases(&(&m * rot), &keep, &elim, tol)?;
    let bound = sector.sec2() * op_norm(&m);
    let schur_norm = op_norm(&rotated);
    if schur_norm > bound * (1.0 + tol.eq) {
        return Err(Error::VerificationFailed { index: 0, residual: schur_norm - bound });
    }
    Ok(PencilSchur { value: rotated * rot.conj(), halfspace, theta, sector: Some(sector) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{random, re, I};
    use crate::pencil::pencil_new;
    use rand::Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn random_pivot<R: Rng>(n: usize, rng: &mut R) -> PivotSubspace {
        let r = rng.random_range(1..n);
        if rng.random_bool(0.5) {
            PivotSubspace::new(random::isometry(n, r, rng), &tol()).unwrap()
        } else {
            let mut idx: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                idx.swap(i, rng.random_range(0..=i));
            }
            idx.truncate(r);
            PivotSubspace::coordinates(n, &idx).unwrap()
        }
    }

    #[test]
    fn pivot_subspace_invariants() {
        let mut rng = random::rng_from_seed(1);
        let s = PivotSubspace::new(random::isometry(5, 2, &mut rng), &tol()).unwrap();
        let p = s.projection().as_mat();
        assert!(frob(&(p * p - p)) < 1e-12);
        assert!(crate::matcore::hermitian_defect(p) < 1e-15);
        assert!(PivotSubspace::new(GenMat::from_element(2, 1, re(2.0)), &tol()).is_err());
        assert!(PivotSubspace::coordinates(3, &[0, 0]).is_err());
    }

    #[test]
    fn shorted_examples() {
        let a = HermMat::from_real_rows(2, &[2.0, 1.0, 1.0, 1.0]);
        let s = PivotSubspace::coordinates(2, &[0]).unwrap();
        let r = shorted_psd(&a, &s, &tol()).unwrap();
        assert!((r.shorted[(0, 0)].re - 1.0).abs() < 1e-12);

        let b = HermMat::from_real_diagonal(&[3.0, 5.0]);
        let r = shorted_psd(&b, &s, &tol()).unwrap();
        assert_eq!(r.shorted[(0, 0)], re(3.0));

        let v = CVec::from_vec(vec![re(0.6), re(0.8)]);
        let r = shorted_psd(&HermMat::outer(&v), &s, &tol()).unwrap();
        assert!(r.shorted[(0, 0)].norm() < 1e-12);

        let neg = HermMat::from_real_diagonal(&[1.0, -1.0]);
        assert!(matches!(shorted_psd(&neg, &s, &tol()), Err(Error::NotPSD { .. })));
    }

    #[test]
    fn schur_generic_examples() {
        let (a, b, c, d) = (C64::new(1.0, 2.0), C64::new(-0.5, 0.3), C64::new(2.0, 0.0), C64::new(0.7, -1.0));
        let m = GenMat::from_row_slice(2, 2, &[a, b, c, d]);
        let s = PivotSubspace::coordinates(2, &[0]).unwrap();
        let out = schur_generic(&m, &s, Keep::Subspace, &tol()).unwrap();
        assert!((out[(0, 0)] - (a - b * c / d)).norm() < 1e-14);
        let out = schur_generic(&m, &s, Keep::Complement, &tol()).unwrap();
        assert!((out[(0, 0)] - (d - c * b / a)).norm() < 1e-14);

        let bd = crate::matcore::direct_sum(&GenMat::identity(2, 2), &(GenMat::identity(1, 1) * I));
        let s2 = PivotSubspace::coordinates(3, &[0, 1]).unwrap();
        assert_eq!(schur_generic(&bd, &s2, Keep::Subspace, &tol()).unwrap(), GenMat::identity(2, 2));

        let sing = GenMat::from_row_slice(2, 2, &[ONE, ONE, ONE, ZERO]);
        assert!(matches!(
            schur_generic(&sing, &s, Keep::Subspace, &tol()),
            Err(Error::EliminatedBlockSingular { .. })
        ));
    }

    #[test]
    fn schur_generic_is_homogeneous() {
        let mut rng = random::rng_from_seed(2);
        for _ in 0..20 {
            let n = rng.random_range(2..7);
            let a = random::gaussian(n, n, &mut rng);
            let s = random_pivot(n, &mut rng);
            let rot = C64::from_polar(1.0, rng.random_range(-3.0..3.0));
            let lhs = schur_generic(&(&a * rot), &s, Keep::Subspace, &tol()).unwrap();
            let rhs = schur_generic(&a, &s, Keep::Subspace, &tol()).unwrap() * rot;
            assert!(frob(&(lhs - &rhs)) < 1e-10 * (1.0 + frob(&rhs)));
        }
    }

    #[test]
    fn sector_bound_examples() {
        let mut rng = random::rng_from_seed(3);
        let a = random::psd(4, &mut rng);
        let s = PivotSubspace::coordinates(4, &[2, 3]).unwrap();
        let rep = sector_bound_check(a.as_mat(), &s, Keep::Subspace, 256, &tol()).unwrap();
        assert!(rep.alpha_upper < 1e-6 && rep.pass);

        let m = GenMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::new(1.0, 1.0)]);
        let s = PivotSubspace::coordinates(2, &[0]).unwrap();
        let rep = sector_bound_check(&m, &s, Keep::Complement, 256, &tol()).unwrap();
        assert!((rep.singular_value_pairs[0].0 - 2f64.sqrt()).abs() < 1e-12);
        assert!(rep.sec2 >= 2.0 - 1e-12 && rep.pass);

        for _ in 0..20 {
            let a = random::sectorial(8, 1.0, &mut rng);
            let s = random_pivot(8, &mut rng);
            assert!(sector_bound_check(&a, &s, Keep::Subspace, 256, &tol()).unwrap().pass);
        }
        let neg = GenMat::identity(2, 2) * re(-1.0);
        assert!(matches!(
            sector_bound_check(&neg, &s, Keep::Subspace, 256, &tol()),
            Err(Error::NotSectorial { .. })
        ));
    }

    #[test]
    fn shorted_maximality_and_order() {
        let t = tol();
        let mut rng = random::rng_from_seed(4);
        for _ in 0..40 {
            let n = rng.random_range(2..8);
            let a = random::psd_rank(n, rng.random_range(1..=n), &mut rng);
            let s = random_pivot(n, &mut rng);
            let r = shorted_psd(&a, &s, &t).unwrap();
            assert!(r.shorted.min_eig() >= -t.psd_slack(&r.shorted));
            assert!(r.defect <= t.rank * (1.0 + frob(&a)));
            let gap = a.as_mat() - embed(&s, &r.shorted);
            assert!(min_eig(&gap) >= -1e-9 * (1.0 + frob(&gap)));
            let a11 = a.congruence(s.basis());
            assert!(crate::matcore::loewner_leq(&r.shorted, &a11, &t).unwrap());
            // any feasible Y sits below the shorted operator
            let y = &r.shorted - &random::psd(s.dim(), &mut rng).scale(rng.random_range(0.0..1.0));
            assert!(crate::matcore::loewner_leq(&y, &r.shorted, &t).unwrap());
        }
    }

    #[test]
    fn shorted_agrees_with_schur_generic() {
        let t = tol();
        let mut rng = random::rng_from_seed(5);
        for _ in 0..30 {
            let n = rng.random_range(2..8);
            let a = random::psd(n, &mut rng);
            let s = random_pivot(n, &mut rng);
            let r = shorted_psd(&a, &s, &t).unwrap();
            let g = schur_generic(&a, &s, Keep::Subspace, &t).unwrap();
            assert!(frob(&(r.shorted.as_mat() - g)) <= t.eq * op_norm(&a));
        }
    }

    #[test]
    fn half_planes_are_preserved() {
        let t = tol();
        let mut rng = random::rng_from_seed(6);
        for _ in 0..50 {
            let n = rng.random_range(2..7);
            let a = random::upper_half_plane(n, 0.0, 1.0, &mut rng);
            let s = random_pivot(n, &mut rng);
            let out = schur_generic(&a, &s, Keep::Subspace, &t).unwrap();
            assert!(im_part(&out).unwrap().min_eig() >= -1e-8);
            let b = random::sectorial(n, 1.0, &mut rng);
            let out = schur_generic(&b, &s, Keep::Complement, &t).unwrap();
            assert!(re_part(&out).unwrap().min_eig() >= -1e-8);
        }
    }

    fn quad_cell(lambda: f64) -> crate::pencil::LinearPencil {
        let b0 = HermMat::from_real_rows(2, &[1.0, lambda.sqrt(), lambda.sqrt(), 1.0 + lambda]);
        let b1 = HermMat::from_real_diagonal(&[0.0, 1.0]);
        pencil_new(vec![b0, b1], &tol()).unwrap()
    }

    #[test]
    fn schur_pencil_examples() {
        let t = tol();
        let cell = quad_cell(2.0);
        let s = PivotSubspace::coordinates(2, &[0]).unwrap();
        // lambda x / (x + lambda) through the cell
        let x = MatTuple::new(vec![GenMat::identity(2, 2) * re(2.0)]).unwrap();
        let out = schur_pencil(cell.raw(), &x, &s, 256, &t).unwrap();
        assert_eq!(out.halfspace, HalfSpace::Right);
        assert!(frob(&(out.value - GenMat::identity(2, 2) * re(0.5))) < 1e-12);

        let xi = MatTuple::new(vec![GenMat::identity(2, 2) * I]).unwrap();
        let out = schur_pencil(cell.raw(), &xi, &s, 256, &t).unwrap();
        assert_eq!(out.halfspace, HalfSpace::Upper);
        assert!(out.theta < 0.0);
        let expect = I / (I + re(2.0));
        assert!((out.value[(0, 0)] - expect).norm() < 1e-12);
        assert!(im_part(&out.value).unwrap().min_eig() >= -t.psd);

        let full = PivotSubspace::full(2);
        let out = schur_pencil(cell.raw(), &x, &full, 256, &t).unwrap();
        assert_eq!(out.value, cell.eval_shifted(&x).unwrap());

        let bad = MatTuple::new(vec![GenMat::identity(2, 2) * re(-1.0)]).unwrap();
        assert!(matches!(schur_pencil(cell.raw(), &bad, &s, 256, &t), Err(Error::DomainViolation)));
    }

    #[test]
    fn schur_pencil_real_arguments_match_hermitian_elimination() {
        let t = tol();
        let mut rng = random::rng_from_seed(7);
        for _ in 0..20 {
            let k = rng.random_range(1..3);
            let d = rng.random_range(2..5);
            let lin: Vec<HermMat> = (0..k).map(|_| random::psd(d, &mut rng)).collect();
            let mut b0 = random::psd(d, &mut rng);
            for b in &lin {
                b0 = &b0 + b;
            }
            let mut coeffs = vec![b0];
            coeffs.extend(lin);
            let l = pencil_new(coeffs, &t).unwrap();
            let n = rng.random_range(1..4);
            let x = random::tuple_in_interval(k, n, 0.5, 2.0, &mut rng);
            let s = random_pivot(d, &mut rng);
            let out = schur_pencil(l.raw(), &x.to_general(), &s, 128, &t).unwrap();
            let m = HermMat::symmetrize(&l.eval_shifted(&x).unwrap());
            let short = shorted_psd(&m, &s.tensor_identity(n), &t).unwrap();
            assert!(frob(&(out.value - short.shorted.as_mat())) < 1e-9 * (1.0 + frob(short.shorted.as_mat())));
            let xu = MatTuple::new((0..k).map(|_| random::upper_half_plane(n, 0.2, 1.0, &mut rng)).collect()).unwrap();
            let out = schur_pencil(l.raw(), &xu, &s, 128, &t).unwrap();
            assert!(im_part(&out.value).unwrap().min_eig() >= -1e-8);
        }
    }
}
