//! Randomized certification of order properties of free functions.
//!
//! Every trial draws from its own stream `trial_rng(seed, trial)`, so a report
//! is a pure function of its inputs, and the search stops at the first
//! violation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freefun::{frechet_derivative, Domain, FreeFn};
use crate::matcore::random::{self, trial_rng, Rng64};
use crate::matcore::{frob, min_eig, op_norm, re, serial, unitary_defect, GenMat, HermMat, MatTuple, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Counterexample,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Monotone,
    Concave,
    Derivative,
    Hypograph,
    Doubling,
    Chain,
}

/// A named list of matrices (a tuple, a single matrix, an isometry, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedMats {
    pub name: String,
    #[serde(with = "serial::mats")]
    pub mats: Vec<GenMat>,
}

impl NamedMats {
    fn tuple(name: &str, x: &MatTuple) -> Self {
        NamedMats { name: name.into(), mats: x.iter().map(|m| m.as_mat().clone()).collect() }
    }

    fn single(name: &str, m: &GenMat) -> Self {
        NamedMats { name: name.into(), mats: vec![m.clone()] }
    }
}

/// Inputs of a violated inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    /// Smallest eigenvalue of the difference that should have been PSD.
    pub margin: f64,
    /// Convex weight, when the property has one.
    pub lambda: Option<f64>,
    pub inputs: Vec<NamedMats>,
}

impl Counterexample {
    fn input(&self, name: &str) -> Result<&[GenMat]> {
        self.inputs
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.mats.as_slice())
            .ok_or_else(|| Error::Parse(format!("counterexample lacks input {name}")))
    }

    fn tuple(&self, name: &str, tol: &Tolerances) -> Result<MatTuple> {
        let mats = self.input(name)?.iter().map(|m| HermMat::certify(m, tol)).collect::<Result<Vec<_>>>()?;
        MatTuple::new(mats)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub function: String,
    pub property: Property,
    pub verdict: Verdict,
    pub n: usize,
    pub seed: u64,
    pub trials_run: usize,
    /// Most negative margin seen (the smallest eigenvalue of the difference
    /// that the property requires to be PSD).
    pub worst_margin: f64,
    pub counterexample: Option<Counterexample>,
    /// First evaluation failure, when some trials could not be completed.
    pub note: Option<String>,
}

/// Shared knobs of the randomized testers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertParams {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Spectra of sampled arguments stay in `[c1, c2]`.
    pub interval: (f64, f64),
    pub tol: Tolerances,
}

impl Default for CertParams {
    fn default() -> Self {
        CertParams { n: 2, trials: 1000, seed: 0, interval: (0.5, 2.0), tol: Tolerances::default() }
    }
}

impl CertParams {
    fn validate(&self) -> Result<()> {
        let (c1, c2) = self.interval;
        if !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
            return Err(Error::BadConfig(format!("interval must satisfy 0 < c1 < c2, got [{c1}, {c2}]")));
        }
        if self.n == 0 {
            return Err(Error::BadConfig("n must be positive".into()));
        }
        Ok(())
    }

    /// The sampling interval, narrowed to the function's own domain.
    fn interval_for(&self, f: &FreeFn) -> (f64, f64) {
        match f.domain() {
            Domain::Positive => self.interval,
            Domain::Interval { lo, hi } => (self.interval.0.max(lo), self.interval.1.min(hi)),
        }
    }
}

/// Outcome of one trial.
enum Trial {
    Margin(f64),
    Violation(Counterexample),
}

struct Runner<'a> {
    f: &'a FreeFn,
    property: Property,
    params: CertParams,
}

impl Runner<'_> {
    fn run(&self, mut trial: impl FnMut(usize, &mut Rng64) -> Result<Trial>) -> CertReport {
        let p = &self.params;
        let mut worst = f64::INFINITY;
        let mut note = None;
        let mut completed = 0;
        let mut counterexample = None;
        let mut trials_run = 0;
        for t in 0..p.trials {
            trials_run = t + 1;
            let mut rng = trial_rng(p.seed, t as u64);
            match trial(t, &mut rng) {
                Ok(Trial::Margin(m)) if !m.is_finite() => {
                    if note.is_none() {
                        note = Some(format!("trial {t}: non-finite margin"));
                    }
                }
                Ok(Trial::Margin(m)) => {
                    completed += 1;
                    worst = worst.min(m);
                }
                Ok(Trial::Violation(ce)) => {
                    worst = worst.min(ce.margin);
                    counterexample = Some(ce);
                    break;
                }
                Err(e) => {
                    if note.is_none() {
                        note = Some(format!("trial {t}: {e}"));
                    }
                }
            }
        }
        let verdict = if counterexample.is_some() {
            Verdict::Counterexample
        } else if completed == p.trials && p.trials > 0 {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        CertReport {
            function: self.f.id().to_string(),
            property: self.property,
            verdict,
            n: p.n,
            seed: p.seed,
            trials_run,
            worst_margin: if worst.is_finite() { worst } else { 0.0 },
            counterexample,
            note,
        }
    }
}

/// `lambda_min(d)` and whether it breaks `d >= -scale * tau_psd (1 + ||d||_F)`.
fn check_psd(d: &GenMat, scale: f64, tol: &Tolerances) -> (f64, bool) {
    let m = min_eig(d);
    (m, m < -scale * tol.psd_slack(d))
}

fn tuple_in(k: usize, n: usize, lo: f64, hi: f64, rng: &mut Rng64) -> MatTuple {
    random::tuple_in_interval(k, n, lo, hi, rng)
}

/// PSD direction of random rank with operator norm `size`.
fn psd_direction(n: usize, size: f64, rng: &mut Rng64) -> HermMat {
    let r = rng.random_range(1..=n);
    let p = random::psd_rank(n, r, rng);
    let nrm = op_norm(&p);
    if nrm > 0.0 {
        p.scale(size / nrm)
    } else {
        p
    }
}

/// Samples `A <= B` with spectra in `[c1, c2]` and checks `F(A) <= F(B)`.
pub fn monotone_test(f: &FreeFn, params: &CertParams) -> Result<CertReport> {
    params.validate()?;
    let (c1, c2) = params.interval_for(f);
    let (n, k, tol) = (params.n, f.arity(), params.tol);
    let runner = Runner { f, property: Property::Monotone, params: *params };
    Ok(runner.run(|t, rng| {
        let split = c1 + (c2 - c1) * rng.random_range(0.3..0.9);
        let a = tuple_in(k, n, c1, split, rng);
        let mut b = Vec::with_capacity(k);
        for ai in a.iter() {
            let room = c2 - ai.max_eig();
            let size = if rng.random_bool(0.2) { 0.0 } else { room * rng.random_range(0.0..1.0) };
            b.push(ai + &psd_direction(n, size, rng));
        }
        let b = MatTuple::new(b)?;
        let d = f.eval(&b)?.into_mat() - f.eval(&a)?.into_mat();
        let (m, bad) = check_psd(&d, 1.0, &tol);
        Ok(if bad {
            Trial::Violation(Counterexample {
                trial: t,
                margin: m,
                lambda: None,
                inputs: vec![NamedMats::tuple("A", &a), NamedMats::tuple("B", &b)],
            })
        } else {
            Trial::Margin(m)
        })
    }))
}

const LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Checks `(1 - l) F(A) + l F(B) <= F((1 - l) A + l B)`.
pub fn concave_test(f: &FreeFn, params: &CertParams) -> Result<CertReport> {
    params.validate()?;
    let (c1, c2) = params.interval_for(f);
    let (n, k, tol) = (params.n, f.arity(), params.tol);
    let runner = Runner { f, property: Property::Concave, params: *params };
    Ok(runner.run(|t, rng| {
        let a = tuple_in(k, n, c1, c2, rng);
        let b = tuple_in(k, n, c1, c2, rng);
        let l = if t % 4 < 3 { LAMBDAS[t % 4] } else { rng.random_range(0.0..1.0) };
        let mid = a.lerp(&b, l)?;
        let chord = f.eval(&a)?.scale(1.0 - l).into_mat() + f.eval(&b)?.scale(l).into_mat();
        let d = f.eval(&mid)?.into_mat() - chord;
        let (m, bad) = check_psd(&d, 1.0, &tol);
        Ok(if bad {
            Trial::Violation(Counterexample {
                trial: t,
                margin: m,
                lambda: Some(l),
                inputs: vec![NamedMats::tuple("A", &a), NamedMats::tuple("B", &b)],
            })
        } else {
            Trial::Margin(m)
        })
    }))
}

/// Checks `DF(X)(H) >= -10 tau_psd` for interior `X` and PSD directions `H`.
///
/// A failing derivative (step underflow) aborts the whole test.
pub fn derivative_monotone_test(f: &FreeFn, params: &CertParams) -> Result<CertReport> {
    params.validate()?;
    let (c1, c2) = params.interval_for(f);
    let margin = 0.05 * (c2 - c1);
    let (n, k, tol) = (params.n, f.arity(), params.tol);
    let runner = Runner { f, property: Property::Derivative, params: *params };
    let mut fatal = None;
    let report = runner.run(|t, rng| {
        if fatal.is_some() {
            return Err(Error::BadConfig("aborted".into()));
        }
        let x = tuple_in(k, n, c1 + margin, c2 - margin, rng);
        let mut dirs = Vec::with_capacity(k);
        for _ in 0..k {
            let size = if k > 1 && rng.random_bool(0.25) { 0.0 } else { 1.0 };
            dirs.push(psd_direction(n, size, rng));
        }
        let h = MatTuple::new(dirs)?;
        let d = match frechet_derivative(f, &x, &h, None, &tol) {
            Ok(d) => d,
            Err(e @ Error::StepUnderflow { .. }) => {
                fatal = Some(e.clone());
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        let (m, bad) = check_psd(&d, 10.0, &tol);
        Ok(if bad {
            Trial::Violation(Counterexample {
                trial: t,
                margin: m,
                lambda: None,
                inputs: vec![NamedMats::tuple("X", &x), NamedMats::tuple("H", &h)],
            })
        } else {
            Trial::Margin(m)
        })
    });
    match fatal {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Hypograph member `Y <= F(X)` with its slack `lambda_min(F(X) - Y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypoSample {
    pub y: HermMat,
    pub x: MatTuple,
    pub slack: f64,
}

/// Draws `X` with spectra in `[c1, c2]` and `Y = F(X) - P` for a random PSD
/// `P` that vanishes with probability one half.
pub fn hypo_sample(f: &FreeFn, n: usize, interval: (f64, f64), rng: &mut Rng64) -> Result<HypoSample> {
    let x = tuple_in(f.arity(), n, interval.0, interval.1, rng);
    let fx = f.eval(&x)?;
    let y = if rng.random_bool(0.5) {
        fx.clone()
    } else {
        let size = rng.random_range(0.0..1.0) * (1.0 + op_norm(&fx));
        &fx - &psd_direction(n, size, rng)
    };
    let slack = min_eig(&(fx.as_mat() - y.as_mat()));
    Ok(HypoSample { y, x, slack })
}

/// Checks that the hypograph is closed under isometric compression
/// `V* Y V <= F(V* X V)` (`V: C^m -> C^n`) and under convex combinations.
pub fn hypograph_convexity_test(f: &FreeFn, m: usize, params: &CertParams) -> Result<CertReport> {
    params.validate()?;
    if m == 0 || m > params.n {
        return Err(Error::BadConfig(format!("isometry target dimension must be in 1..={}, got {m}", params.n)));
    }
    let interval = params.interval_for(f);
    let (n, tol) = (params.n, params.tol);
    let runner = Runner { f, property: Property::Hypograph, params: *params };
    Ok(runner.run(|t, rng| {
        let s = hypo_sample(f, n, interval, rng)?;
        let v = random::isometry(n, m, rng);
        let d = f.eval(&s.x.congruence(&v))?.into_mat() - s.y.congruence(&v).into_mat();
        let (m1, bad) = check_psd(&d, 1.0, &tol);
        if bad {
            return Ok(Trial::Violation(Counterexample {
                trial: t,
                margin: m1,
                lambda: None,
                inputs: vec![
                    NamedMats::single("Y", &s.y),
                    NamedMats::tuple("X", &s.x),
                    NamedMats::single("V", &v),
                ],
            }));
        }
        let s2 = hypo_sample(f, n, interval, rng)?;
        let l = rng.random_range(0.0..1.0);
        let y = &s.y.scale(1.0 - l) + &s2.y.scale(l);
        let x = s.x.lerp(&s2.x, l)?;
        let d = f.eval(&x)?.into_mat() - y.as_mat();
        let (m2, bad) = check_psd(&d, 1.0, &tol);
        Ok(if bad {
            Trial::Violation(Counterexample {
                trial: t,
                margin: m2,
                lambda: Some(l),
                inputs: vec![
                    NamedMats::single("Y", &s.y),
                    NamedMats::tuple("X", &s.x),
                    NamedMats::single("Y2", &s2.y),
                    NamedMats::tuple("X2", &s2.x),
                ],
            })
        } else {
            Trial::Margin(m1.min(m2))
        })
    }))
}

/// The unitary `[[l^{1/2} I, -(1-l)^{1/2} I], [(1-l)^{1/2} I, l^{1/2} I]]`.
pub fn doubling_unitary(n: usize, lambda: f64) -> GenMat {
    let (a, b) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    GenMat::from_fn(2 * n, 2 * n, |i, j| {
        if i % n != j % n {
            return re(0.0);
        }
        match (i < n, j < n) {
            (true, true) | (false, false) => re(a),
            (true, false) => re(-b),
            (false, true) => re(b),
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub report: CertReport,
    pub max_unitarity_defect: f64,
    /// Largest deviation of `V* diag(A, B) V` from its closed block form.
    pub max_block_defect: f64,
    /// Largest `||F(V* (A + B) V) - V* (F(A) + F(B)) V||_F`.
    pub max_equivariance_defect: f64,
    /// Smallest eigenvalue of `diag(l A + (1-l) B + eps I, 2Z) - V* diag(A, B) V`.
    pub worst_dominance_margin: f64,
    /// Smallest eigenvalue of `F(l A + (1-l) B + eps I) - l F(A) - (1-l) F(B)`.
    pub worst_inequality_margin: f64,
}

/// Layer-by-layer check of the doubling argument turning `2n`-monotonicity
/// into `n`-concavity. `pairs` random pairs `(A, B)` are drawn per
/// `(lambda, eps)` configuration.
pub fn doubling_concavity_check(
    f: &FreeFn,
    lambdas: &[f64],
    epsilons: &[f64],
    pairs: usize,
    params: &CertParams,
) -> Result<DoublingReport> {
    params.validate()?;
    if lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::BadConfig("lambda must lie in [0, 1] and eps must be positive".into()));
    }
    let (c1, c2) = params.interval_for(f);
    let (n, k, tol) = (params.n, f.arity(), params.tol);
    let configs: Vec<(f64, f64)> = lambdas.iter().flat_map(|&l| epsilons.iter().map(move |&e| (l, e))).collect();
    let mut sub = *params;
    sub.trials = configs.len() * pairs;
    let mut stats = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY, f64::INFINITY);
    let runner = Runner { f, property: Property::Doubling, params: sub };
    let report = runner.run(|t, rng| {
        let (l, eps) = configs[t / pairs.max(1)];
        let v = doubling_unitary(n, l);
        stats.0 = stats.0.max(unitary_defect(&v));
        let a = tuple_in(k, n, c1, c2, rng);
        let b = tuple_in(k, n, c1, c2, rng);
        let cross = (l * (1.0 - l)).sqrt();
        let mut big = Vec::with_capacity(k);
        let mut upper = Vec::with_capacity(k);
        for (ai, bi) in a.iter().zip(b.iter()) {
            let conj = v.adjoint() * crate::matcore::direct_sum(ai, bi) * &v;
            let top = ai.as_mat() * re(l) + bi.as_mat() * re(1.0 - l);
            let bottom = ai.as_mat() * re(1.0 - l) + bi.as_mat() * re(l);
            let off = (bi.as_mat() - ai.as_mat()) * re(cross);
            let mut expect = GenMat::zeros(2 * n, 2 * n);
            expect.view_mut((0, 0), (n, n)).copy_from(&top);
            expect.view_mut((0, n), (n, n)).copy_from(&off);
            expect.view_mut((n, 0), (n, n)).copy_from(&off);
            expect.view_mut((n, n), (n, n)).copy_from(&bottom);
            stats.1 = stats.1.max(frob(&(&conj - expect)));
            // Z = (1-l) A + l B + D^2 / eps dominates both requirements
            let d = &off * re(-1.0);
            let z = &bottom + &d * &d * re(1.0 / eps);
            let shifted = top + GenMat::identity(n, n) * re(eps);
            let dom = crate::matcore::direct_sum(&shifted, &(z * re(2.0)));
            stats.3 = stats.3.min(min_eig(&(&dom - &conj)));
            big.push(HermMat::symmetrize(&conj));
            upper.push(HermMat::symmetrize(&dom));
        }
        let big = MatTuple::new(big)?;
        let (fa, fb) = (f.eval(&a)?, f.eval(&b)?);
        let f_big = f.eval(&big)?;
        let rotated = v.adjoint() * crate::matcore::direct_sum(&fa, &fb) * &v;
        stats.2 = stats.2.max(frob(&(f_big.as_mat() - rotated)));
        let rhs = f.eval(&a.lerp(&b, 1.0 - l)?.shift(eps))?;
        let d = rhs.into_mat() - fa.scale(l).into_mat() - fb.scale(1.0 - l).into_mat();
        let (m, bad) = check_psd(&d, 1.0, &tol);
        stats.4 = stats.4.min(m);
        Ok(if bad {
            Trial::Violation(Counterexample {
                trial: t,
                margin: m,
                lambda: Some(l),
                inputs: vec![NamedMats::tuple("A", &a), NamedMats::tuple("B", &b)],
            })
        } else {
            Trial::Margin(m)
        })
    });
    let mut report = report;
    let structural = stats.0 <= tol.eq && stats.1 <= tol.eq && stats.3 >= -tol.psd * (1.0 + 2.0 * c2);
    if report.verdict == Verdict::Pass && !structural {
        report.verdict = Verdict::Inconclusive;
        report.note = Some("structural layer of the doubling construction out of tolerance".into());
    }
    Ok(DoublingReport {
        report,
        max_unitarity_defect: stats.0,
        max_block_defect: stats.1,
        max_equivariance_defect: stats.2,
        worst_dominance_margin: stats.3,
        worst_inequality_margin: stats.4,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `max ||F(Y) - F(X)|| / ||Y - X||` over sampled pairs in `B(center, r)`.
    pub quotient: f64,
    /// Observed `max ||F(Z)||` over `B(center, 2r)`.
    pub local_bound: f64,
    pub bound_m_over_r: f64,
    pub bound_2m_over_r: f64,
    pub samples: usize,
}

/// Random Hermitian tuple whose tuple norm (sum of operator norms) is `size`.
fn hermitian_offset(k: usize, n: usize, size: f64, rng: &mut Rng64) -> Result<MatTuple> {
    let mut v = Vec::with_capacity(k);
    for _ in 0..k {
        let h = random::hermitian(n, rng);
        let nrm = op_norm(&h).max(f64::MIN_POSITIVE);
        v.push(h.scale(size / (k as f64 * nrm)));
    }
    MatTuple::new(v)
}

/// Empirical Lipschitz quotient on `B(center, r)` in the tuple norm
/// `||X|| = sum ||X_i||`, next to the two bounds `M/r` and `2M/r`.
pub fn lipschitz_estimate(f: &FreeFn, center: &MatTuple, r: f64, samples: usize, seed: u64) -> Result<LipschitzReport> {
    if !(r > 0.0) || samples == 0 {
        return Err(Error::BadConfig("radius and sample count must be positive".into()));
    }
    let (k, n) = (f.arity(), center.dim());
    let mut local = op_norm(f.eval(center)?.as_mat());
    let mut quotient: f64 = 0.0;
    for s in 0..samples {
        let mut rng = trial_rng(seed, s as u64);
        let x = center.add_scaled(&hermitian_offset(k, n, r * rng.random_range(0.0..1.0), &mut rng)?, 1.0)?;
        let y = center.add_scaled(&hermitian_offset(k, n, r * rng.random_range(0.0..1.0), &mut rng)?, 1.0)?;
        let z = center.add_scaled(&hermitian_offset(k, n, 2.0 * r * rng.random_range(0.0..1.0), &mut rng)?, 1.0)?;
        let (fx, fy) = (f.eval(&x)?, f.eval(&y)?);
        local = local.max(op_norm(f.eval(&z)?.as_mat())).max(op_norm(&fx)).max(op_norm(&fy));
        let dist: f64 = x.iter().zip(y.iter()).map(|(a, b)| op_norm(&(a.as_mat() - b.as_mat()))).sum();
        if dist > 0.0 {
            quotient = quotient.max(op_norm(&(fy.as_mat() - fx.as_mat())) / dist);
        }
    }
    Ok(LipschitzReport {
        quotient,
        local_bound: local,
        bound_m_over_r: local / r,
        bound_2m_over_r: 2.0 * local / r,
        samples,
    })
}

/// Checks `F(A_j) <= F(A_last)` along an increasing chain.
pub fn chain_semicontinuity_test(f: &FreeFn, chain: &[MatTuple], tol: &Tolerances) -> Result<CertReport> {
    let last = chain.last().ok_or_else(|| Error::BadConfig("empty chain".into()))?;
    for (position, w) in chain.windows(2).enumerate() {
        let m = w[0].loewner_margin_to(&w[1])?;
        let scale = w[1].iter().map(|x| frob(x)).fold(0.0, f64::max);
        if m < -tol.psd * (1.0 + scale) {
            return Err(Error::ChainNotIncreasing { position });
        }
    }
    let top = f.eval(last)?;
    let mut worst = f64::INFINITY;
    let mut counterexample = None;
    let mut trials_run = 0;
    for (j, a) in chain.iter().enumerate() {
        trials_run = j + 1;
        let d = top.as_mat() - f.eval(a)?.into_mat();
        let (m, bad) = check_psd(&d, 1.0, tol);
        worst = worst.min(m);
        if bad {
            counterexample = Some(Counterexample {
                trial: j,
                margin: m,
                lambda: None,
                inputs: vec![NamedMats::tuple("A", a), NamedMats::tuple("sup", last)],
            });
            break;
        }
    }
    Ok(CertReport {
        function: f.id().to_string(),
        property: Property::Chain,
        verdict: if counterexample.is_some() { Verdict::Counterexample } else { Verdict::Pass },
        n: last.dim(),
        seed: 0,
        trials_run,
        worst_margin: worst,
        counterexample,
        note: None,
    })
}

/// Re-evaluates the inequality stored in a counterexample and returns its
/// margin (negative for a genuine violation).
pub fn replay(f: &FreeFn, property: Property, ce: &Counterexample, tol: &Tolerances) -> Result<f64> {
    let d = match property {
        Property::Monotone => {
            f.eval(&ce.tuple("B", tol)?)?.into_mat() - f.eval(&ce.tuple("A", tol)?)?.into_mat()
        }
        Property::Concave | Property::Doubling => {
            let l = ce.lambda.ok_or_else(|| Error::Parse("counterexample lacks lambda".into()))?;
            let (a, b) = (ce.tuple("A", tol)?, ce.tuple("B", tol)?);
            if property == Property::Concave {
                f.eval(&a.lerp(&b, l)?)?.into_mat() - f.eval(&a)?.scale(1.0 - l).into_mat() - f.eval(&b)?.scale(l).into_mat()
            } else {
                return Err(Error::BadConfig("doubling counterexamples depend on eps; replay the whole check".into()));
            }
        }
        Property::Derivative => {
            frechet_derivative(f, &ce.tuple("X", tol)?, &ce.tuple("H", tol)?, None, tol)?.into_mat()
        }
        Property::Hypograph => {
            let y = HermMat::certify(&ce.input("Y")?[0], tol)?;
            let x = ce.tuple("X", tol)?;
            match ce.lambda {
                None => {
                    let v = &ce.input("V")?[0];
                    f.eval(&x.congruence(v))?.into_mat() - y.congruence(v).into_mat()
                }
                Some(l) => {
                    let y2 = HermMat::certify(&ce.input("Y2")?[0], tol)?;
                    let x2 = ce.tuple("X2", tol)?;
                    f.eval(&x.lerp(&x2, l)?)?.into_mat() - (&y.scale(1.0 - l) + &y2.scale(l)).into_mat()
                }
            }
        }
        Property::Chain => f.eval(&ce.tuple("sup", tol)?)?.into_mat() - f.eval(&ce.tuple("A", tol)?)?.into_mat(),
    };
    Ok(min_eig(&d))
}
