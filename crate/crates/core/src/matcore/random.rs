//! Seeded random matrices for certification and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{re, CVec, GenMat, HermMat, MatTuple, C64, ONE};

pub type Rng64 = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> Rng64 {
    rng_from_seed(splitmix(seed ^ splitmix(trial.wrapping_add(1))))
}

/// Complex Ginibre matrix, entries with `E|z|^2 = 1`.
pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> GenMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    GenMat::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        C64::new(s * a, s * b)
    })
}

/// Haar-distributed unitary.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GenMat {
    let qr = gaussian(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / re(d.norm()) } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `n x m` isometry (`m <= n`), orthonormal columns.
pub fn isometry<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> GenMat {
    assert!(m <= n);
    unitary(n, rng).columns(0, m).into_owned()
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermMat {
    HermMat::symmetrize(&gaussian(n, n, rng))
}

/// `G G* / n`, full rank almost surely.
pub fn psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermMat {
    psd_rank(n, n, rng)
}

/// PSD of rank `r`.
pub fn psd_rank<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> HermMat {
    let g = gaussian(n, r, rng);
    HermMat::symmetrize(&(&g * g.adjoint() * re(1.0 / n.max(1) as f64)))
}

/// Hermitian with spectrum drawn uniformly from `[lo, hi]` and Haar eigenbasis.
pub fn pd_in_interval<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> HermMat {
    let d: Vec<f64> = (0..n).map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect();
    HermMat::from_real_diagonal(&d).congruence(&unitary(n, rng).adjoint())
}

pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let g = gaussian(n, 1, rng);
    let v: CVec = g.column(0).into_owned();
    let nv = v.norm();
    v / re(nv)
}

/// Tuple of `k` Hermitian matrices with spectra in `[lo, hi]`.
pub fn tuple_in_interval<R: Rng + ?Sized>(k: usize, n: usize, lo: f64, hi: f64, rng: &mut R) -> MatTuple {
    MatTuple::new((0..k).map(|_| pd_in_interval(n, lo, hi, rng)).collect()).expect("consistent dimensions")
}

/// `A + i B` with `A` positive definite (spectrum in `[1, 1 + spread]`) and
/// `B` Hermitian of comparable size.
pub fn sectorial<R: Rng + ?Sized>(n: usize, spread: f64, rng: &mut R) -> GenMat {
    let a = pd_in_interval(n, 1.0, 1.0 + spread, rng);
    let b = hermitian(n, rng).scale(spread);
    a.as_mat() + b.as_mat() * super::I
}

/// `A + i B` with `B` positive definite and `A` Hermitian: an element of the
/// upper half-plane.
pub fn upper_half_plane<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> GenMat {
    let a = hermitian(n, rng);
    let b = pd_in_interval(n, lo, hi, rng);
    a.as_mat() + b.as_mat() * super::I
}
