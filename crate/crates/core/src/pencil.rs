//! Linear matrix pencils `L(X) = B_0 (x) I + sum_i B_i (x) X_i`.
//!
//! The coefficient space is always the left tensor factor: with `B_i` of size
//! `d` and `X_i` of size `n`, entry `(a n + p, b n + q)` of `L(X)` is
//! `sum_i B_i[a][b] X_i[p][q]`.

use crate::error::{Error, Result};
use crate::matcore::{
    block_diag, ensure_dim, sector_estimate, tensor, GenMat, HermMat, MatTuple, SectorEstimate,
    SquareMat, Tolerances,
};

/// Coefficients `B_0, ..., B_k` with only shape checks.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPencil {
    coeffs: Vec<HermMat>,
}

impl RawPencil {
    /// `coeffs[0]` is `B_0`; at least one linear coefficient is required.
    pub fn new(coeffs: Vec<HermMat>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::BadConfig("a pencil needs B_0 and at least one linear coefficient".into()));
        }
        let d = coeffs[0].dim();
        for b in &coeffs[1..] {
            ensure_dim(d, b.dim())?;
        }
        Ok(RawPencil { coeffs })
    }

    /// Homogeneous pencil `sum_i B_i (x) X_i` (`B_0 = 0`).
    pub fn homogeneous(linear: Vec<HermMat>) -> Result<Self> {
        let d = linear.first().map(|b| b.dim()).unwrap_or(0);
        let mut coeffs = vec![HermMat::zeros(d)];
        coeffs.extend(linear);
        RawPencil::new(coeffs)
    }

    pub fn arity(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Size of the coefficient space.
    pub fn dim(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn coeffs(&self) -> &[HermMat] {
        &self.coeffs
    }

    pub fn b0(&self) -> &HermMat {
        &self.coeffs[0]
    }

    /// `B_1, ..., B_k`.
    pub fn linear(&self) -> &[HermMat] {
        &self.coeffs[1..]
    }

    /// `sum_{i >= 1} B_i`.
    pub fn linear_sum(&self) -> HermMat {
        let mut s = HermMat::zeros(self.dim());
        for b in self.linear() {
            s = &s + b;
        }
        s
    }

    /// `L(X)` for Hermitian or general square arguments.
    pub fn eval<M: SquareMat>(&self, x: &MatTuple<M>) -> Result<GenMat> {
        x.ensure_arity(self.arity())?;
        let n = x.dim();
        let mut out = tensor(self.b0(), &GenMat::identity(n, n));
        for (b, xi) in self.linear().iter().zip(x.iter()) {
            out += tensor(b, xi.mat());
        }
        Ok(out)
    }

    /// `B_0 (x) I + sum_i B_i (x) (X_i - I)`.
    pub fn eval_shifted<M: SquareMat>(&self, x: &MatTuple<M>) -> Result<GenMat> {
        x.ensure_arity(self.arity())?;
        let n = x.dim();
        let id = GenMat::identity(n, n);
        let mut out = tensor(self.b0(), &id);
        for (b, xi) in self.linear().iter().zip(x.iter()) {
            out += tensor(b, &(xi.mat() - &id));
        }
        Ok(out)
    }

    /// Checks positivity of every coefficient and `B_0 >= sum B_i`.
    pub fn validate(self, tol: &Tolerances) -> Result<LinearPencil> {
        let mut psd_margin = f64::INFINITY;
        for (index, b) in self.coeffs.iter().enumerate() {
            let m = b.min_eig();
            if m < -tol.psd_slack(b) {
                return Err(Error::CoefficientNotPSD { index, min_eig: m });
            }
            psd_margin = psd_margin.min(m);
        }
        let gap = self.b0() - &self.linear_sum();
        let dominance_margin = gap.min_eig();
        if dominance_margin < -tol.psd_slack(&gap) {
            return Err(Error::DominanceViolated { min_eig: dominance_margin });
        }
        Ok(LinearPencil { raw: self, psd_margin, dominance_margin })
    }
}

/// Pencil with PSD coefficients and `B_0 >= sum_{i>=1} B_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPencil {
    raw: RawPencil,
    /// Smallest eigenvalue over all coefficients.
    pub psd_margin: f64,
    /// `lambda_min(B_0 - sum B_i)`.
    pub dominance_margin: f64,
}

impl std::ops::Deref for LinearPencil {
    type Target = RawPencil;
    fn deref(&self) -> &RawPencil {
        &self.raw
    }
}

impl LinearPencil {
    pub fn raw(&self) -> &RawPencil {
        &self.raw
    }

    pub fn into_raw(self) -> RawPencil {
        self.raw
    }
}

pub fn pencil_new(coeffs: Vec<HermMat>, tol: &Tolerances) -> Result<LinearPencil> {
    RawPencil::new(coeffs)?.validate(tol)
}

pub fn pencil_eval<M: SquareMat>(l: &RawPencil, x: &MatTuple<M>) -> Result<GenMat> {
    l.eval(x)
}

pub fn pencil_eval_shifted<M: SquareMat>(l: &RawPencil, x: &MatTuple<M>) -> Result<GenMat> {
    l.eval_shifted(x)
}

/// Block-diagonal assembly of raw pencils of equal arity.
pub fn raw_direct_sum(ls: &[&RawPencil]) -> Result<RawPencil> {
    let first = ls.first().ok_or_else(|| Error::BadConfig("direct sum of no pencils".into()))?;
    let k = first.arity();
    for l in ls {
        if l.arity() != k {
            return Err(Error::ArityMismatch { expected: k, found: l.arity() });
        }
    }
    let coeffs = (0..=k)
        .map(|i| {
            let blocks: Vec<GenMat> = ls.iter().map(|l| l.coeffs()[i].as_mat().clone()).collect();
            HermMat::symmetrize(&block_diag(&blocks))
        })
        .collect();
    RawPencil::new(coeffs)
}

/// Coefficient-wise block-diagonal pencil. The invariants carry over, so the
/// margins are the minima of the summands' margins.
pub fn pencil_direct_sum(ls: &[LinearPencil]) -> Result<LinearPencil> {
    let raws: Vec<&RawPencil> = ls.iter().map(|l| l.raw()).collect();
    let raw = raw_direct_sum(&raws)?;
    Ok(LinearPencil {
        raw,
        psd_margin: ls.iter().map(|l| l.psd_margin).fold(f64::INFINITY, f64::min),
        dominance_margin: ls.iter().map(|l| l.dominance_margin).fold(f64::INFINITY, f64::min),
    })
}

/// Orthonormal basis of the range of a PSD matrix, eigenvalues below
/// `rel_cut * lambda_max` discarded.
pub fn range_basis(h: &HermMat, rel_cut: f64) -> GenMat {
    let e = h.eigh();
    let top = e.max();
    let keep: Vec<usize> = (0..h.dim()).filter(|&j| top > 0.0 && e.values[j] > rel_cut * top).collect();
    GenMat::from_fn(h.dim(), keep.len(), |i, j| e.vectors[(i, keep[j])])
}

/// Sector of `L(X)` compressed to `N(sum B_i)^perp (x) E`, for sectorial
/// arguments `X_i`.
pub fn pencil_sectorial_check(l: &RawPencil, x: &MatTuple<GenMat>, grid: usize) -> Result<SectorEstimate> {
    x.ensure_arity(l.arity())?;
    for (index, xi) in x.iter().enumerate() {
        match sector_estimate(xi, grid) {
            Ok(_) => {}
            Err(Error::NotSectorial { .. }) => return Err(Error::InputNotSectorial { index }),
            Err(e) => return Err(e),
        }
    }
    let q = range_basis(&l.linear_sum(), Tolerances::default().rank);
    if q.ncols() == 0 {
        return Err(Error::BadConfig("pencil has a vanishing linear part".into()));
    }
    let n = x.dim();
    let p = tensor(&q, &GenMat::identity(n, n));
    let lx = l.eval(x)?;
    sector_estimate(&(p.adjoint() * lx * &p), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{frob, min_eig, random, re, I};
    use rand::Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalar(x: f64) -> HermMat {
        HermMat::from_real_diagonal(&[x])
    }

    #[test]
    fn constructor_examples() {
        assert!(pencil_new(vec![scalar(1.0), scalar(1.0)], &tol()).is_ok());
        let i2 = HermMat::identity(2);
        assert!(matches!(
            pencil_new(vec![i2.clone(), i2.clone(), i2.clone()], &tol()),
            Err(Error::DominanceViolated { .. })
        ));
        assert!(matches!(
            pencil_new(vec![scalar(1.0), scalar(-1.0)], &tol()),
            Err(Error::CoefficientNotPSD { index: 1, .. })
        ));
        let l = pencil_new(vec![scalar(3.0), scalar(1.0)], &tol()).unwrap();
        assert!((l.dominance_margin - 2.0).abs() < 1e-14 && (l.psd_margin - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eval_examples() {
        let l = pencil_new(vec![scalar(1.0), scalar(1.0)], &tol()).unwrap();
        let x = MatTuple::constant(1, 2, 3.0);
        assert!(frob(&(l.eval(&x).unwrap() - GenMat::identity(2, 2) * re(4.0))) < 1e-14);

        let mut rng = random::rng_from_seed(1);
        let b: Vec<HermMat> = (0..3).map(|_| random::psd(2, &mut rng)).collect();
        let raw = RawPencil::new(b.clone()).unwrap();
        let ones = MatTuple::constant(2, 3, 1.0);
        let expect = tensor(&(&(&b[0] + &b[1]) + &b[2]), &GenMat::identity(3, 3));
        assert!(frob(&(raw.eval(&ones).unwrap() - expect)) < 1e-13);

        let xs = [0.7, -1.3];
        let scalar_tuple = MatTuple::scalars(&xs).unwrap();
        let oracle = b[0].as_mat() + b[1].as_mat() * re(xs[0]) + b[2].as_mat() * re(xs[1]);
        assert!(frob(&(raw.eval(&scalar_tuple).unwrap() - oracle)) < 1e-13);
        assert!(matches!(raw.eval(&MatTuple::constant(1, 2, 1.0)), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn shifted_examples() {
        let mut rng = random::rng_from_seed(2);
        let b: Vec<HermMat> = (0..3).map(|_| random::psd(3, &mut rng)).collect();
        let raw = RawPencil::new(b.clone()).unwrap();
        let id = GenMat::identity(2, 2);
        let at_one = raw.eval_shifted(&MatTuple::constant(2, 2, 1.0)).unwrap();
        assert!(frob(&(at_one - tensor(&b[0], &id))) < 1e-13);
        let at_two = raw.eval_shifted(&MatTuple::constant(2, 2, 2.0)).unwrap();
        assert!(frob(&(at_two - raw.eval(&MatTuple::constant(2, 2, 1.0)).unwrap())) < 1e-13);
        let x = random::tuple_in_interval(2, 2, 0.1, 3.0, &mut rng);
        let lhs = raw.eval_shifted(&x).unwrap();
        let rhs = raw.eval(&x.shift(-1.0)).unwrap();
        assert!(frob(&(lhs - rhs)) < 1e-13);
    }

    fn random_pencil<R: Rng>(k: usize, d: usize, rng: &mut R) -> LinearPencil {
        let lin: Vec<HermMat> = (0..k).map(|_| random::psd(d, rng)).collect();
        let mut b0 = random::psd(d, rng);
        for b in &lin {
            b0 = &b0 + b;
        }
        let mut coeffs = vec![b0];
        coeffs.extend(lin);
        pencil_new(coeffs, &Tolerances::default()).unwrap()
    }

    #[test]
    fn direct_sum_examples() {
        let mut rng = random::rng_from_seed(3);
        let l = random_pencil(2, 2, &mut rng);
        let s = pencil_direct_sum(&[l.clone(), l.clone()]).unwrap();
        for i in 0..3 {
            let expect = block_diag(&[l.coeffs()[i].as_mat().clone(), l.coeffs()[i].as_mat().clone()]);
            assert_eq!(s.coeffs()[i].as_mat(), &expect);
        }
        assert_eq!(pencil_direct_sum(std::slice::from_ref(&l)).unwrap().coeffs(), l.coeffs());

        // evaluation of a direct sum against block-diagonal evaluations,
        // through an explicit permutation of tensor factors
        let m = random_pencil(2, 3, &mut rng);
        let sum = pencil_direct_sum(&[l.clone(), m.clone()]).unwrap();
        let x = random::tuple_in_interval(2, 2, 0.5, 2.0, &mut rng);
        let lhs = sum.eval(&x).unwrap();
        let rhs = block_diag(&[l.eval(&x).unwrap(), m.eval(&x).unwrap()]);
        let n = 2;
        let (d1, d2) = (2, 3);
        // position of basis vector (a, p) of (K1 + K2) (x) E inside (K1 (x) E) + (K2 (x) E)
        let perm: Vec<usize> = (0..(d1 + d2) * n)
            .map(|idx| {
                let (a, p) = (idx / n, idx % n);
                if a < d1 {
                    a * n + p
                } else {
                    d1 * n + (a - d1) * n + p
                }
            })
            .collect();
        let pm = GenMat::from_fn(perm.len(), perm.len(), |i, j| if perm[j] == i { re(1.0) } else { re(0.0) });
        assert!(frob(&(pm.transpose() * rhs * &pm - lhs)) < 1e-13);

        let other_arity = random_pencil(1, 2, &mut rng);
        assert!(matches!(pencil_direct_sum(&[l, other_arity]), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn eval_is_unitarily_equivariant() {
        let mut rng = random::rng_from_seed(4);
        for _ in 0..20 {
            let k = rng.random_range(1..4);
            let n = rng.random_range(1..5);
            let l = random_pencil(k, rng.random_range(1..4), &mut rng);
            let x = random::tuple_in_interval(k, n, -1.0, 2.0, &mut rng);
            let u = random::unitary(n, &mut rng);
            let lhs = l.eval(&x.congruence(&u)).unwrap();
            let big = tensor(&GenMat::identity(l.dim(), l.dim()), &u);
            let rhs = big.adjoint() * l.eval(&x).unwrap() * &big;
            assert!(frob(&(lhs - rhs)) < 1e-10);
        }
    }

    #[test]
    fn shifted_eval_is_psd_above_identity() {
        let mut rng = random::rng_from_seed(5);
        for _ in 0..30 {
            let k = rng.random_range(1..4);
            let l = random_pencil(k, rng.random_range(1..4), &mut rng);
            let x = random::tuple_in_interval(k, rng.random_range(1..4), 1.0, 3.0, &mut rng);
            let m = l.eval_shifted(&x).unwrap();
            assert!(min_eig(&m) >= -1e-12 * (1.0 + frob(&m)));
        }
    }

    #[test]
    fn sectorial_examples() {
        let mut rng = random::rng_from_seed(6);
        let l = random_pencil(2, 3, &mut rng);
        let ones = MatTuple::constant(2, 2, 1.0).to_general();
        let s = pencil_sectorial_check(l.raw(), &ones, 256).unwrap();
        assert!(s.alpha < 1e-12);

        let raw = RawPencil::homogeneous(vec![scalar(1.0)]).unwrap();
        let x1 = GenMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(1.0), re(1.0) + I * re(0.9)]));
        let x = MatTuple::new(vec![x1.clone()]).unwrap();
        let s = pencil_sectorial_check(&raw, &x, 256).unwrap();
        let res = 2.0 * std::f64::consts::PI / 256.0;
        assert!(s.alpha <= std::f64::consts::FRAC_PI_4 + res);

        let bad = MatTuple::new(vec![GenMat::identity(2, 2) * re(-1.0)]).unwrap();
        assert!(matches!(pencil_sectorial_check(&raw, &bad, 256), Err(Error::InputNotSectorial { index: 0 })));
    }

    #[test]
    fn homogeneous_real_part_lower_bound() {
        let mut rng = random::rng_from_seed(7);
        for _ in 0..20 {
            let k = rng.random_range(1..4);
            let d = rng.random_range(2..4);
            let n = rng.random_range(1..4);
            let lin: Vec<HermMat> = (0..k).map(|_| random::psd_rank(d, 1, &mut rng)).collect();
            let raw = RawPencil::homogeneous(lin).unwrap();
            let xs: Vec<GenMat> = (0..k).map(|_| random::sectorial(n, 0.5, &mut rng)).collect();
            let eps = xs.iter().map(min_eig).fold(f64::INFINITY, f64::min);
            let x = MatTuple::new(xs).unwrap();
            let q = range_basis(&raw.linear_sum(), 1e-10);
            let delta = raw.linear_sum().congruence(&q).min_eig();
            let p = tensor(&q, &GenMat::identity(n, n));
            let comp = p.adjoint() * raw.eval(&x).unwrap() * &p;
            assert!(min_eig(&comp) >= eps * delta - 1e-9 * (1.0 + frob(&comp)));
            let s = pencil_sectorial_check(&raw, &x, 128).unwrap();
            let worst_input = x.iter().map(|xi| sector_estimate(xi, 128).unwrap().alpha_upper).fold(0.0, f64::max);
            assert!(s.alpha <= worst_input + 2.0 * std::f64::consts::PI / 128.0);
        }
    }
}
