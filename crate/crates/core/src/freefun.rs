//! Free (noncommutative) functions and a catalogue of concrete ones.
//!
//! Catalogue identifiers are `name` or `name:key=value;key=value`, list values
//! comma-separated: `sqrt`, `pow:p=0.7`, `harmonic:w=0.25,0.75`,
//! `power:t=0.5;k=3`, `karcher:w=0.5,0.5`, `mobius:a=1;b=0;c=1;d=1`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::random::{self, trial_rng};
use crate::matcore::{
    direct_sum, eigh, frob, funcalc, inv_pd, op_norm, re, GenMat, HermMat, MatTuple, Tolerances, C64,
};

/// Where a free function is meant to be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// Tuples of positive definite matrices.
    Positive,
    /// Tuples with spectra in `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Props {
    pub monotone: bool,
    pub concave: bool,
    pub positive: bool,
}

impl Props {
    pub const ALL: Props = Props { monotone: true, concave: true, positive: true };
    pub const NONE: Props = Props { monotone: false, concave: false, positive: false };
}

type Eval = Arc<dyn Fn(&MatTuple) -> Result<HermMat> + Send + Sync>;
type ComplexEval = Arc<dyn Fn(&MatTuple<GenMat>) -> Result<GenMat> + Send + Sync>;

/// A graded function on k-tuples of Hermitian matrices.
#[derive(Clone)]
pub struct FreeFn {
    id: String,
    arity: usize,
    domain: Domain,
    props: Props,
    eval: Eval,
    complex: Option<ComplexEval>,
}

impl fmt::Debug for FreeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FreeFn")
            .field("id", &self.id)
            .field("arity", &self.arity)
            .field("domain", &self.domain)
            .field("props", &self.props)
            .field("complex", &self.complex.is_some())
            .finish()
    }
}

impl FreeFn {
    pub fn new(
        id: impl Into<String>,
        arity: usize,
        domain: Domain,
        props: Props,
        eval: impl Fn(&MatTuple) -> Result<HermMat> + Send + Sync + 'static,
    ) -> Self {
        FreeFn { id: id.into(), arity, domain, props, eval: Arc::new(eval), complex: None }
    }

    pub fn with_complex(mut self, f: impl Fn(&MatTuple<GenMat>) -> Result<GenMat> + Send + Sync + 'static) -> Self {
        self.complex = Some(Arc::new(f));
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn props(&self) -> Props {
        self.props
    }

    pub fn has_complex(&self) -> bool {
        self.complex.is_some()
    }

    pub fn eval(&self, x: &MatTuple) -> Result<HermMat> {
        x.ensure_arity(self.arity)?;
        let y = (self.eval)(x)?;
        if y.dim() != x.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
        }
        Ok(y)
    }

    pub fn eval_complex(&self, x: &MatTuple<GenMat>) -> Result<GenMat> {
        x.ensure_arity(self.arity)?;
        let f = self
            .complex
            .as_ref()
            .ok_or_else(|| Error::BadConfig(format!("{} has no complex evaluator", self.id)))?;
        f(x)
    }

    /// Value at the tuple of 1x1 matrices `(x_1, ..., x_k)`.
    pub fn scalar(&self, xs: &[f64]) -> Result<f64> {
        Ok(self.eval(&MatTuple::scalars(xs)?)?[(0, 0)].re)
    }
}

/// Functional-calculus lift of a scalar function (arity 1).
pub fn lift_scalar(
    id: impl Into<String>,
    props: Props,
    f: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
) -> FreeFn {
    FreeFn::new(id, 1, Domain::Positive, props, move |x| funcalc(f.clone(), &x[0]))
}

pub fn identity() -> FreeFn {
    FreeFn::new("identity", 1, Domain::Positive, Props::ALL, |x| Ok(x[0].clone())).with_complex(|x| Ok(x[0].clone()))
}

pub fn sqrt() -> FreeFn {
    lift_scalar("sqrt", Props::ALL, f64::sqrt)
}

pub fn log1p() -> FreeFn {
    lift_scalar("log1p", Props::ALL, f64::ln_1p)
}

/// `x^p` for `p` in `(0, 1]`.
pub fn pow(p: f64) -> Result<FreeFn> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadConfig(format!("pow needs p in (0, 1], got {p}")));
    }
    Ok(lift_scalar(format!("pow:p={p}"), Props::ALL, move |x| x.powf(p)))
}

/// `x^2`: positive but neither monotone nor concave on the positive cone.
pub fn xsq() -> FreeFn {
    let props = Props { positive: true, ..Props::NONE };
    FreeFn::new("xsq", 1, Domain::Positive, props, |x| Ok(HermMat::symmetrize(&(x[0].as_mat() * x[0].as_mat()))))
}

/// `exp(-tr X / n) X^2`, which ignores direct sums and breaks monotonicity.
pub fn tracefake() -> FreeFn {
    let props = Props { positive: true, ..Props::NONE };
    FreeFn::new("tracefake", 1, Domain::Positive, props, |x| {
        let a = &x[0];
        let s = (-a.trace() / a.dim() as f64).exp();
        Ok(HermMat::symmetrize(&(a.as_mat() * a.as_mat() * re(s))))
    })
}

/// `a I + b X`.
pub fn affine(a: f64, b: f64) -> FreeFn {
    let props = Props { monotone: b >= 0.0, concave: true, positive: a >= 0.0 && b >= 0.0 };
    let f = FreeFn::new(format!("affine:a={a};b={b}"), 1, Domain::Positive, props, move |x| {
        Ok(&HermMat::scaled_identity(x.dim(), a) + &x[0].scale(b))
    });
    f.with_complex(move |x| {
        let n = x.dim();
        Ok(GenMat::identity(n, n) * re(a) + &x[0] * re(b))
    })
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() || w.len() > 8 {
        return Err(Error::BadConfig(format!("between 1 and 8 weights are supported, got {}", w.len())));
    }
    if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::BadConfig(format!("weights must be positive: {w:?}")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::BadConfig(format!("weights must sum to 1, got {s}")));
    }
    Ok(())
}

pub fn equal_weights(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

fn fmt_weights(w: &[f64]) -> String {
    w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn mean_fn(
    name: &str,
    w: &[f64],
    eval: impl Fn(&[f64], &MatTuple) -> Result<HermMat> + Send + Sync + 'static,
) -> Result<FreeFn> {
    check_weights(w)?;
    let weights = w.to_vec();
    Ok(FreeFn::new(format!("{name}:w={}", fmt_weights(w)), w.len(), Domain::Positive, Props::ALL, move |x| {
        eval(&weights, x)
    }))
}

/// `sum w_i X_i`.
pub fn arithmetic_mean_value(w: &[f64], x: &MatTuple) -> HermMat {
    let mut acc = HermMat::zeros(x.dim());
    for (wi, xi) in w.iter().zip(x.iter()) {
        acc = &acc + &xi.scale(*wi);
    }
    acc
}

pub fn arithmetic_mean(w: &[f64]) -> Result<FreeFn> {
    mean_fn("arithmetic", w, |w, x| Ok(arithmetic_mean_value(w, x)))
}

/// `(sum w_i X_i^{-1})^{-1}`.
pub fn harmonic_mean_value(w: &[f64], x: &MatTuple) -> Result<HermMat> {
    let mut acc = HermMat::zeros(x.dim());
    for (index, (wi, xi)) in w.iter().zip(x.iter()).enumerate() {
        let inv = inv_pd(xi).map_err(|_| Error::SingularArgument { index })?;
        acc = &acc + &inv.scale(*wi);
    }
    inv_pd(&acc).map_err(|_| Error::SingularArgument { index: 0 })
}

pub fn harmonic_mean(w: &[f64]) -> Result<FreeFn> {
    mean_fn("harmonic", w, harmonic_mean_value)
}

fn require_pd(a: &HermMat) -> Result<crate::matcore::Eigh> {
    let e = a.eigh();
    if e.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: e.min() });
    }
    Ok(e)
}

/// `A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
pub fn geometric_mean_weighted(a: &HermMat, b: &HermMat, t: f64) -> Result<HermMat> {
    let e = require_pd(a)?;
    require_pd(b)?;
    let half = e.map(f64::sqrt);
    let inv_half = e.map(|x| 1.0 / x.sqrt());
    let inner = HermMat::symmetrize(&(&inv_half * b.as_mat() * &inv_half));
    let powered = HermMat::symmetrize(&inner.eigh().map(|x| x.max(0.0).powf(t)));
    Ok(HermMat::symmetrize(&(&half * powered.as_mat() * &half)))
}

/// `A # B`.
pub fn geometric_mean_2(a: &HermMat, b: &HermMat) -> Result<HermMat> {
    geometric_mean_weighted(a, b, 0.5)
}

/// Two-variable geometric mean as a free function.
pub fn geometric() -> FreeFn {
    FreeFn::new("geometric", 2, Domain::Positive, Props::ALL, |x| geometric_mean_2(&x[0], &x[1]))
}

pub const MEAN_ITERATION_CAP: usize = 10_000;

/// Value of an iterative mean with its convergence data.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanOutcome {
    pub value: HermMat,
    pub iterations: usize,
    /// `||g(Z) - Z||_F` for the defining fixed-point map `g` at the last
    /// iterate (for the Karcher mean, the map solving the Karcher equation).
    pub residual: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Stop {
    /// Successive iterates closer than `tau_eq (1 + ||Z||)`.
    Loose(f64),
    /// Iterate down to rounding level.
    Tight,
}

fn check_pd_tuple(x: &MatTuple) -> Result<()> {
    for xi in x.iter() {
        require_pd(xi)?;
    }
    Ok(())
}

const ANDERSON_DEPTH: usize = 4;

fn to_real(m: &GenMat) -> DVector<f64> {
    let n = m.nrows();
    DVector::from_fn(2 * n * n, |i, _| {
        let z = m[(i / 2 % n, i / 2 / n)];
        if i % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

fn from_real(v: &DVector<f64>, n: usize) -> GenMat {
    GenMat::from_fn(n, n, |r, c| {
        let i = 2 * (c * n + r);
        C64::new(v[i], v[i + 1])
    })
}

/// Fixed point of `map` on positive definite matrices by Anderson-accelerated
/// iteration. Candidates that leave the cone fall back to the plain step.
fn fixed_point(
    start: HermMat,
    stop: Stop,
    mut map: impl FnMut(&HermMat) -> Result<HermMat>,
) -> Result<MeanOutcome> {
    let n = start.dim();
    let floor = 16.0 * f64::EPSILON * n as f64;
    let mut z = start;
    let mut xs: Vec<DVector<f64>> = Vec::new();
    let mut fs: Vec<DVector<f64>> = Vec::new();
    let mut gs: Vec<DVector<f64>> = Vec::new();
    let mut best = f64::INFINITY;
    let mut stalls = 0;
    let mut last = f64::INFINITY;
    for it in 1..=MEAN_ITERATION_CAP {
        let g = map(&z)?;
        let change = frob(&(g.as_mat() - z.as_mat()));
        let scale = 1.0 + frob(&g);
        last = change;
        let done = match stop {
            Stop::Loose(eps) => change < eps * scale,
            Stop::Tight => {
                if change < 0.9 * best {
                    stalls = 0;
                } else {
                    stalls += 1;
                }
                change <= floor * scale || (stalls >= 4 && change <= 1e-11 * scale)
            }
        };
        best = best.min(change);
        if done {
            return Ok(MeanOutcome { value: g, iterations: it, residual: change });
        }
        let xv = to_real(&z);
        let gv = to_real(&g);
        let fv = &gv - &xv;
        xs.push(xv);
        gs.push(gv);
        fs.push(fv);
        if xs.len() > ANDERSON_DEPTH + 1 {
            xs.remove(0);
            gs.remove(0);
            fs.remove(0);
        }
        let m = fs.len() - 1;
        let mut next = g.clone();
        if m > 0 {
            let df = DMatrix::from_fn(fs[0].len(), m, |r, c| fs[c + 1][r] - fs[c][r]);
            let dg = DMatrix::from_fn(gs[0].len(), m, |r, c| gs[c + 1][r] - gs[c][r]);
            if let Ok(gamma) = df.svd(true, true).solve(&fs[m], 1e-12) {
                let cand = HermMat::symmetrize(&from_real(&(&gs[m] - dg * gamma), n));
                if cand.min_eig() > 0.0 && cand.as_mat().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                    next = cand;
                }
            }
        }
        if stalls >= 2 {
            // restart the history when acceleration stops paying off
            xs.clear();
            gs.clear();
            fs.clear();
            next = g;
        }
        z = next;
    }
    Err(Error::NoConvergence { iterations: MEAN_ITERATION_CAP, change: last })
}

/// One step of `Z -> sum w_i (Z #_t X_i)`.
fn power_map(w: &[f64], x: &MatTuple, t: f64, z: &HermMat) -> Result<HermMat> {
    let e = require_pd(z)?;
    let half = e.map(f64::sqrt);
    let inv_half = e.map(|v| 1.0 / v.sqrt());
    let mut acc = GenMat::zeros(x.dim(), x.dim());
    for (wi, xi) in w.iter().zip(x.iter()) {
        let inner = HermMat::symmetrize(&(&inv_half * xi.as_mat() * &inv_half));
        acc += inner.eigh().map(|v| v.max(0.0).powf(t)) * re(*wi);
    }
    Ok(HermMat::symmetrize(&(&half * acc * &half)))
}

/// One step of `Z -> Z^{1/2} exp(sum w_i log(Z^{-1/2} X_i Z^{-1/2})) Z^{1/2}`.
fn karcher_map(w: &[f64], x: &MatTuple, z: &HermMat) -> Result<HermMat> {
    let e = require_pd(z)?;
    let half = e.map(f64::sqrt);
    let inv_half = e.map(|v| 1.0 / v.sqrt());
    let mut grad = GenMat::zeros(x.dim(), x.dim());
    for (wi, xi) in w.iter().zip(x.iter()) {
        let inner = HermMat::symmetrize(&(&inv_half * xi.as_mat() * &inv_half));
        grad += inner.eigh().map(|v| v.max(f64::MIN_POSITIVE).ln()) * re(*wi);
    }
    let expo = eigh(&grad).map(f64::exp);
    Ok(HermMat::symmetrize(&(&half * expo * &half)))
}

/// Power mean `P_t(w; X)`: the fixed point of `Z -> sum w_i (Z #_t X_i)`.
pub fn power_mean_value(t: f64, w: &[f64], x: &MatTuple) -> Result<MeanOutcome> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::BadConfig(format!("power mean needs t in (0, 1], got {t}")));
    }
    check_weights(w)?;
    x.ensure_arity(w.len())?;
    check_pd_tuple(x)?;
    let start = arithmetic_mean_value(w, x);
    if t == 1.0 {
        return Ok(MeanOutcome { value: start, iterations: 0, residual: 0.0 });
    }
    fixed_point(start, Stop::Tight, |z| power_map(w, x, t, z))
}

pub fn power_mean(t: f64, w: &[f64]) -> Result<FreeFn> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::BadConfig(format!("power mean needs t in (0, 1], got {t}")));
    }
    check_weights(w)?;
    let weights = w.to_vec();
    let id = format!("power:t={t};w={}", fmt_weights(w));
    Ok(FreeFn::new(id, w.len(), Domain::Positive, Props::ALL, move |x| {
        power_mean_value(t, &weights, x).map(|o| o.value)
    }))
}

pub const KARCHER_LADDER: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

/// Karcher mean: Richardson extrapolation of `P_t` along [`KARCHER_LADDER`],
/// then refined on the Karcher equation `sum w_i log(Z^{-1/2} X_i Z^{-1/2}) = 0`.
pub fn karcher_mean_value(w: &[f64], x: &MatTuple, tol: &Tolerances) -> Result<MeanOutcome> {
    check_weights(w)?;
    x.ensure_arity(w.len())?;
    check_pd_tuple(x)?;
    let mut iterations = 0;
    let mut table: Vec<GenMat> = Vec::new();
    let mut z = arithmetic_mean_value(w, x);
    for &t in &KARCHER_LADDER {
        let o = fixed_point(z, Stop::Loose(tol.eq), |z| power_map(w, x, t, z))?;
        iterations += o.iterations;
        z = o.value;
        table.push(z.as_mat().clone());
    }
    // Richardson table for halving steps, extrapolating to t = 0.
    for m in 1..table.len() {
        let f = (1u64 << m) as f64;
        for j in (m..table.len()).rev() {
            table[j] = (&table[j] * re(f) - &table[j - 1]) * re(1.0 / (f - 1.0));
        }
    }
    let extrapolated = HermMat::symmetrize(table.last().expect("non-empty ladder"));
    let start = if extrapolated.min_eig() > 0.0 { extrapolated } else { z };
    let polished = fixed_point(start, Stop::Tight, |z| karcher_map(w, x, z))?;
    Ok(MeanOutcome { iterations: iterations + polished.iterations, ..polished })
}

pub fn karcher_mean(w: &[f64]) -> Result<FreeFn> {
    check_weights(w)?;
    let weights = w.to_vec();
    let id = format!("karcher:w={}", fmt_weights(w));
    Ok(FreeFn::new(id, w.len(), Domain::Positive, Props::ALL, move |x| {
        karcher_mean_value(&weights, x, &Tolerances::default()).map(|o| o.value)
    }))
}

/// `g(x) = (a x + b) / (c x + d)` with `a d - b c > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if ![a, b, c, d].iter().all(|v| v.is_finite()) || !(det > 0.0) {
            return Err(Error::BadConfig(format!("Mobius map needs ad - bc > 0, got {det}")));
        }
        Ok(MobiusMap { a, b, c, d })
    }

    pub fn scalar(&self, x: f64) -> f64 {
        (self.a * x + self.b) / (self.c * x + self.d)
    }

    pub fn apply(&self, x: &GenMat) -> Result<GenMat> {
        mobius_apply(self, x)
    }

    /// Monotone wherever defined; concave on the positive axis when the pole
    /// `-d/c` is not positive and `c >= 0`.
    pub fn free_fn(&self) -> FreeFn {
        let g = *self;
        let props = Props {
            monotone: true,
            concave: g.c >= 0.0 && g.d >= 0.0,
            positive: g.a >= 0.0 && g.b >= 0.0 && g.c >= 0.0 && g.d >= 0.0,
        };
        let id = format!("mobius:a={};b={};c={};d={}", g.a, g.b, g.c, g.d);
        FreeFn::new(id, 1, Domain::Positive, props, move |x| {
            mobius_apply(&g, x[0].as_mat()).map(|m| HermMat::symmetrize(&m))
        })
        .with_complex(move |x| mobius_apply(&g, &x[0]))
    }
}

/// `(a X + b I)(c X + d I)^{-1}`.
pub fn mobius_apply(g: &MobiusMap, x: &GenMat) -> Result<GenMat> {
    let n = crate::matcore::ensure_square(x)?;
    let id = GenMat::identity(n, n);
    let den = x * re(g.c) + &id * re(g.d);
    let sv = crate::matcore::singular_values(&den);
    let smallest = sv.last().copied().unwrap_or(0.0);
    if !(smallest > 1e-14 * (1.0 + sv[0])) {
        return Err(Error::PoleHit);
    }
    let num = x * re(g.a) + id * re(g.b);
    let inv = den.try_inverse().ok_or(Error::PoleHit)?;
    Ok(num * inv)
}

/// Default finite-difference step for [`frechet_derivative`].
pub fn default_step(x: &MatTuple) -> f64 {
    let size = x.iter().map(|m| op_norm(m)).fold(0.0, f64::max);
    1e-5 * (1.0 + size)
}

pub const MAX_HALVINGS: usize = 40;

/// Central-difference directional derivative `DF(X)(H)`, halving the step
/// until two successive estimates agree within `tau_eq`.
pub fn frechet_derivative(f: &FreeFn, x: &MatTuple, h: &MatTuple, step: Option<f64>, tol: &Tolerances) -> Result<HermMat> {
    x.ensure_arity(f.arity())?;
    h.ensure_arity(f.arity())?;
    crate::matcore::ensure_dim(x.dim(), h.dim())?;
    let mut s = step.unwrap_or_else(|| default_step(x));
    let central = |s: f64| -> Result<HermMat> {
        let plus = f.eval(&x.add_scaled(h, s)?)?;
        let minus = f.eval(&x.add_scaled(h, -s)?)?;
        Ok((&plus - &minus).scale(0.5 / s))
    };
    // the first step may leave the domain; shrink until both sides evaluate
    let mut prev = loop {
        match central(s) {
            Ok(d) => break d,
            Err(e) if s < 1e-300 => return Err(e),
            Err(_) => s *= 0.5,
        }
    };
    let mut discrepancy = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        s *= 0.5;
        let d = central(s)?;
        discrepancy = frob(&(d.as_mat() - prev.as_mat()));
        if discrepancy <= tol.eq * (1.0 + frob(&d)) {
            return Ok(d);
        }
        prev = d;
    }
    Err(Error::StepUnderflow { discrepancy })
}

/// Worst defects of the two NC axioms over random trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcReport {
    pub function: String,
    pub trials: usize,
    pub seed: u64,
    /// `max ||F(U* X U) - U* F(X) U||_F / (1 + ||F(X)||_F)`.
    pub unitary_defect: f64,
    /// `max ||F(X + Y) - F(X) + F(Y)||_F / (1 + ||F(X + Y)||_F)` for direct sums.
    pub direct_sum_defect: f64,
    pub pass: bool,
}

pub fn nc_axiom_check(
    f: &FreeFn,
    n: usize,
    trials: usize,
    seed: u64,
    interval: (f64, f64),
    tol: &Tolerances,
) -> Result<NcReport> {
    let (lo, hi) = interval;
    let k = f.arity();
    let mut unitary_defect: f64 = 0.0;
    let mut direct_sum_defect: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let x = random::tuple_in_interval(k, n, lo, hi, &mut rng);
        let u = random::unitary(n, &mut rng);
        let fx = f.eval(&x)?;
        let lhs = f.eval(&x.congruence(&u))?;
        let rhs = fx.congruence(&u);
        unitary_defect = unitary_defect.max(frob(&(lhs.as_mat() - rhs.as_mat())) / (1.0 + frob(&fx)));

        let m = 1 + (trial % n.max(1));
        let y = random::tuple_in_interval(k, m, lo, hi, &mut rng);
        let fy = f.eval(&y)?;
        let fxy = f.eval(&x.direct_sum(&y)?)?;
        let blocks = direct_sum(&fx, &fy);
        direct_sum_defect = direct_sum_defect.max(frob(&(fxy.as_mat() - blocks)) / (1.0 + frob(&fxy)));
    }
    Ok(NcReport {
        function: f.id().to_string(),
        trials,
        seed,
        unitary_defect,
        direct_sum_defect,
        pass: unitary_defect <= tol.eq && direct_sum_defect <= tol.eq,
    })
}

fn parse_params(id: &str, raw: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if raw.is_empty() {
        return Ok(out);
    }
    for part in raw.split(';') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::BadConfig(format!("malformed parameter '{part}' in '{id}'")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn num(id: &str, params: &BTreeMap<String, String>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v.parse::<f64>().map_err(|_| Error::BadConfig(format!("bad value for {key} in '{id}'"))),
        None => default.ok_or_else(|| Error::BadConfig(format!("'{id}' needs parameter {key}"))),
    }
}

fn weights(id: &str, params: &BTreeMap<String, String>) -> Result<Vec<f64>> {
    if let Some(w) = params.get("w") {
        return w
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::BadConfig(format!("bad weights in '{id}'"))))
            .collect();
    }
    let k = num(id, params, "k", Some(2.0))?;
    if !((1.0..=8.0).contains(&k) && k.fract() == 0.0) {
        return Err(Error::BadConfig(format!("k must be an integer in 1..=8 in '{id}'")));
    }
    Ok(equal_weights(k as usize))
}

/// Resolves a catalogue identifier.
/// Family, weights and power parameter of a mean identifier such as
/// `karcher:k=3` or `power:t=0.5;w=0.2,0.8`.
pub fn mean_params(id: &str) -> Result<(String, Vec<f64>, Option<f64>)> {
    let (name, raw) = id.split_once(':').unwrap_or((id, ""));
    let params = parse_params(id, raw)?;
    match name {
        "harmonic" | "arithmetic" | "karcher" => Ok((name.to_string(), weights(id, &params)?, None)),
        "power" => Ok((name.to_string(), weights(id, &params)?, Some(num(id, &params, "t", None)?))),
        "geometric" => Ok((name.to_string(), vec![0.5, 0.5], None)),
        _ => Err(Error::UnknownFunction(id.to_string())),
    }
}

pub fn lookup(id: &str) -> Result<FreeFn> {
    let (name, raw) = id.split_once(':').unwrap_or((id, ""));
    let params = parse_params(id, raw)?;
    let allowed: &[&str] = match name {
        "identity" | "sqrt" | "log1p" | "xsq" | "tracefake" | "geometric" => &[],
        "pow" => &["p"],
        "affine" => &["a", "b"],
        "harmonic" | "arithmetic" | "karcher" => &["w", "k"],
        "power" => &["t", "w", "k"],
        "mobius" => &["a", "b", "c", "d"],
        _ => return Err(Error::UnknownFunction(id.to_string())),
    };
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::BadConfig(format!("unknown parameter '{bad}' in '{id}'")));
    }
    match name {
        "identity" => Ok(identity()),
        "sqrt" => Ok(sqrt()),
        "log1p" => Ok(log1p()),
        "xsq" => Ok(xsq()),
        "tracefake" => Ok(tracefake()),
        "geometric" => Ok(geometric()),
        "pow" => pow(num(id, &params, "p", None)?),
        "affine" => Ok(affine(num(id, &params, "a", Some(0.0))?, num(id, &params, "b", Some(1.0))?)),
        "harmonic" => harmonic_mean(&weights(id, &params)?),
        "arithmetic" => arithmetic_mean(&weights(id, &params)?),
        "karcher" => karcher_mean(&weights(id, &params)?),
        "power" => power_mean(num(id, &params, "t", None)?, &weights(id, &params)?),
        "mobius" => Ok(MobiusMap::new(
            num(id, &params, "a", None)?,
            num(id, &params, "b", None)?,
            num(id, &params, "c", None)?,
            num(id, &params, "d", None)?,
        )?
        .free_fn()),
        _ => unreachable!("name filtered above"),
    }
}

/// Identifiers of the operator monotone catalogue entries used as defaults.
pub const MONOTONE_CATALOGUE: &[&str] = &[
    "sqrt",
    "log1p",
    "pow:p=0.7",
    "harmonic:k=2",
    "geometric",
    "power:t=0.25;k=2",
    "power:t=0.5;k=2",
    "power:t=1;k=2",
    "karcher:k=2",
];

/// Negative controls.
pub const NEGATIVE_CONTROLS: &[&str] = &["xsq", "tracefake"];
