mod common;

use std::time::Instant;

use common::{fixture, fixtures_dir, loewner, report};
use loewner::cert::{
    concave_test, derivative_monotone_test, doubling_concavity_check, hypo_sample, hypograph_convexity_test,
    monotone_test, CertParams, Verdict,
};
use loewner::cli::MatrixFile;
use loewner::freefun::{
    arithmetic_mean_value, harmonic_mean_value, karcher_mean_value, lookup, mobius_apply, sqrt, MobiusMap,
    MONOTONE_CATALOGUE, NEGATIVE_CONTROLS,
};
use loewner::matcore::random::{self, rng_from_seed, Rng64};
use loewner::matcore::{
    funcalc, im_part, inverse, min_eig, op_norm, singular_values, CVec, GenMat, HermMat, MatTuple, Tolerances, C64,
    DEFAULT_SECTOR_GRID,
};
use loewner::represent::{
    certificate_tolerances, direct_sum_rep, reconstruct, relative_op_error, rep_eval, rep_eval_complex,
    rep_from_quadrature, support_pencil, SupportOptions,
};
use loewner::schur::{embed, schur_generic, sector_bound_check, shorted_psd, Keep, PivotSubspace};
use rand::Rng;

type Check = Result<String, String>;

fn run(name: &str, body: impl FnOnce() -> Check) {
    let start = Instant::now();
    let r = body();
    let secs = start.elapsed().as_secs_f64();
    match &r {
        Ok(d) => report(true, name, &format!("{d} ({secs:.1}s)")),
        Err(d) => report(false, name, &format!("{d} ({secs:.1}s)")),
    }
    if let Err(d) = r {
        panic!("{name}: {d}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn random_pivot(n: usize, rng: &mut Rng64) -> PivotSubspace {
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

/// PSD with random rank (full rank half of the time).
fn random_psd(n: usize, rng: &mut Rng64) -> HermMat {
    let r = if rng.random_bool(0.5) { n } else { rng.random_range(1..=n) };
    random::psd_rank(n, r, rng)
}

fn lerp(a: &HermMat, b: &HermMat, l: f64) -> HermMat {
    HermMat::symmetrize(&(a.as_mat() * C64::new(l, 0.0) + b.as_mat() * C64::new(1.0 - l, 0.0)))
}

#[test]
fn schur_complement_order_properties() {
    run("shorted operator is monotone and concave", || {
        let mut rng = rng_from_seed(101);
        let mut worst: f64 = f64::INFINITY;
        for t in 0..500 {
            let n = rng.random_range(4..=10);
            let a = random_psd(n, &mut rng);
            let b = HermMat::symmetrize(&(a.as_mat() + random_psd(n, &mut rng).as_mat()));
            let c = random_psd(n, &mut rng);
            let s = random_pivot(n, &mut rng);
            let sa = shorted_psd(&a, &s, &tol()).map_err(|e| format!("pair {t}: {e}"))?.shorted;
            let sb = shorted_psd(&b, &s, &tol()).map_err(|e| format!("pair {t}: {e}"))?.shorted;
            let sc = shorted_psd(&c, &s, &tol()).map_err(|e| format!("pair {t}: {e}"))?.shorted;
            let scale = 1.0 + op_norm(b.as_mat()).max(op_norm(c.as_mat()));
            let m = min_eig(&(sb.as_mat() - sa.as_mat())) / scale;
            worst = worst.min(m);
            ensure(m >= -1e-8, || format!("pair {t}: monotonicity margin {m:.3e}"))?;
            for l in [0.25, 0.5, 0.75] {
                let smix = shorted_psd(&lerp(&a, &c, l), &s, &tol()).map_err(|e| format!("pair {t}: {e}"))?.shorted;
                let m = min_eig(&(smix.as_mat() - lerp(&sa, &sc, l).as_mat())) / scale;
                worst = worst.min(m);
                ensure(m >= -1e-8, || format!("pair {t}, lambda {l}: concavity margin {m:.3e}"))?;
            }
        }
        Ok(format!("500 pairs, worst relative margin {worst:.2e}"))
    });
}

#[test]
fn shorted_operator_maximality() {
    run("shorted operator is the largest feasible element", || {
        let mut rng = rng_from_seed(202);
        let (mut worst_below, mut worst_max): (f64, f64) = (f64::INFINITY, f64::INFINITY);
        for t in 0..200 {
            let n = rng.random_range(2..=8);
            // singular half of the time for the first property; feasible-Y
            // scaling below needs A invertible
            let a = if t % 2 == 0 {
                random_psd(n, &mut rng)
            } else {
                let lo = 10f64.powf(-rng.random_range(0.0..3.0));
                random::pd_in_interval(n, lo, 10.0, &mut rng)
            };
            let s = random_pivot(n, &mut rng);
            let sh = shorted_psd(&a, &s, &tol()).map_err(|e| format!("matrix {t}: {e}"))?.shorted;
            let m = min_eig(&(a.as_mat() - embed(&s, sh.as_mat())));
            worst_below = worst_below.min(m);
            ensure(m >= -1e-8, || format!("matrix {t}: A - iota(S(A)) has eigenvalue {m:.3e}"))?;
            if t % 2 == 0 {
                continue;
            }
            let inv_sqrt = funcalc(|x| 1.0 / x.sqrt(), &a).map_err(|e| e.to_string())?;
            for j in 0..50 {
                let w = random_psd(s.dim(), &mut rng);
                let big = inv_sqrt.as_mat() * embed(&s, w.as_mat()) * inv_sqrt.as_mat();
                let top = -min_eig(&(-big));
                if top <= 0.0 {
                    continue;
                }
                // u = 1 puts Y on the boundary of the feasible set
                let u = if j % 5 == 0 { 1.0 } else { rng.random_range(0.0..1.0) };
                let y = w.as_mat() * C64::new(u / top, 0.0);
                let m = min_eig(&(sh.as_mat() - &y));
                worst_max = worst_max.min(m);
                ensure(m >= -1e-8, || format!("matrix {t}, Y {j}: S(A) - Y has eigenvalue {m:.3e}"))?;
            }
        }
        Ok(format!("200 matrices, worst A - iota(S) {worst_below:.2e}, worst S - Y {worst_max:.2e}"))
    });
}

#[test]
fn sectorial_schur_bound() {
    run("sectorial Schur complement singular value bound", || {
        let mut rng = rng_from_seed(303);
        let (mut worst, mut est_pass) = (f64::NEG_INFINITY, 0);
        for t in 0..500 {
            let n = rng.random_range(2..=12);
            let alpha = rng.random_range(0.0..75f64.to_radians());
            // C* D C with the phases of D inside [-alpha, alpha] is sectorial
            // with half-angle at most alpha
            let c = random::gaussian(n, n, &mut rng) + GenMat::identity(n, n) * C64::new(0.1, 0.0);
            let mut d = GenMat::zeros(n, n);
            for i in 0..n {
                let phi = match i {
                    0 => alpha,
                    1 => -alpha,
                    _ => rng.random_range(-alpha..=alpha),
                };
                d[(i, i)] = C64::from_polar(rng.random_range(0.2..2.0), phi);
            }
            let a = c.adjoint() * d * &c;
            let s = random_pivot(n, &mut rng);
            let keep = if rng.random_bool(0.5) { Keep::Subspace } else { Keep::Complement };
            let schur = schur_generic(&a, &s, keep, &tol()).map_err(|e| format!("matrix {t}: {e}"))?;
            let kb = match keep {
                Keep::Subspace => s.basis().clone(),
                Keep::Complement => s.complement_basis(),
            };
            let kept = kb.adjoint() * &a * &kb;
            let sec2 = 1.0 / alpha.cos().powi(2);
            for (j, (x, y)) in singular_values(&schur).iter().zip(singular_values(&kept)).enumerate() {
                let r = x / (sec2 * y);
                worst = worst.max(r);
                ensure(*x <= sec2 * y * (1.0 + 1e-8), || format!("matrix {t}: sigma_{j} ratio {r:.12}"))?;
            }
            let r = op_norm(&schur) / (sec2 * op_norm(&a));
            worst = worst.max(r);
            ensure(r <= 1.0 + 1e-8, || format!("matrix {t}: norm ratio {r:.12}"))?;
            // the library's own sampled angle gives a tighter certified bound
            let est = sector_bound_check(&a, &s, keep, DEFAULT_SECTOR_GRID, &tol()).map_err(|e| e.to_string())?;
            ensure(est.pass, || format!("matrix {t}: bound with estimated angle {:.6} failed", est.alpha_upper))?;
            est_pass += 1;
        }
        Ok(format!("500 matrices, worst bound ratio {worst:.6}, estimated-angle check passed {est_pass}/500"))
    });
}

#[test]
fn half_plane_preservation() {
    run("Schur complement preserves the upper half-plane", || {
        let mut rng = rng_from_seed(404);
        let (mut worst, mut tested, mut skipped) = (f64::INFINITY, 0, 0);
        while tested < 500 {
            let n = rng.random_range(2..=10);
            let h = random::hermitian(n, &mut rng);
            let k = random_psd(n, &mut rng);
            let a = h.as_mat() + k.as_mat() * C64::new(0.0, 1.0);
            let s = random_pivot(n, &mut rng);
            let keep = if rng.random_bool(0.5) { Keep::Subspace } else { Keep::Complement };
            let e = match keep {
                Keep::Subspace => s.complement_basis(),
                Keep::Complement => s.basis().clone(),
            };
            let sv = singular_values(&(e.adjoint() * &a * &e));
            if sv.last().copied().unwrap_or(0.0) < 1e-6 * sv[0] {
                skipped += 1;
                continue;
            }
            let schur = schur_generic(&a, &s, keep, &tol()).map_err(|e| format!("matrix {tested}: {e}"))?;
            let m = im_part(&schur).map_err(|e| e.to_string())?.min_eig();
            worst = worst.min(m);
            ensure(m >= -1e-8, || format!("matrix {tested}: Im S(A) eigenvalue {m:.3e}"))?;
            tested += 1;
        }
        Ok(format!("500 matrices ({skipped} near-singular eliminated blocks redrawn), worst {worst:.2e}"))
    });
}

fn verdicts(id: &str, n: usize, seed: u64) -> Result<[Verdict; 4], String> {
    let f = lookup(id).map_err(|e| e.to_string())?;
    let p = CertParams { n, trials: 1000, seed, ..CertParams::default() };
    let err = |e: loewner::Error| format!("{id} n={n}: {e}");
    Ok([
        monotone_test(&f, &p).map_err(err)?.verdict,
        concave_test(&f, &p).map_err(err)?.verdict,
        derivative_monotone_test(&f, &p).map_err(err)?.verdict,
        hypograph_convexity_test(&f, n.div_ceil(2), &p).map_err(err)?.verdict,
    ])
}

#[test]
fn certification_correctness() {
    run("certifiers accept the catalogue and reject the controls", || {
        let extra = ["harmonic:k=3", "power:t=0.5;k=3", "karcher:k=3"];
        let mut runs = 0;
        for (i, id) in MONOTONE_CATALOGUE.iter().chain(extra.iter()).enumerate() {
            let iterative = id.starts_with("power") || id.starts_with("karcher");
            let sizes: &[usize] = if iterative { &[2, 4] } else { &[2, 6] };
            for &n in sizes {
                let v = verdicts(id, n, 500 + i as u64)?;
                ensure(v.iter().all(|v| *v == Verdict::Pass), || format!("{id} n={n}: verdicts {v:?}"))?;
                runs += 4;
            }
        }
        for (i, id) in NEGATIVE_CONTROLS.iter().enumerate() {
            let v = verdicts(id, 2, 900 + i as u64)?;
            ensure(v.iter().all(|v| *v == Verdict::Counterexample), || format!("{id}: verdicts {v:?}"))?;
            runs += 4;
        }
        Ok(format!("{runs} runs of 1000 trials, verdicts agree per function and size"))
    });
}

#[test]
fn doubling_construction() {
    run("doubling construction layers", || {
        let mut summary = Vec::new();
        for id in ["sqrt", "harmonic:k=2"] {
            let f = lookup(id).map_err(|e| e.to_string())?;
            for n in [2, 3] {
                let p = CertParams { n, seed: 600 + n as u64, ..CertParams::default() };
                let r = doubling_concavity_check(&f, &[0.25, 0.5, 0.75], &[1e-1, 1e-3, 1e-6], 100, &p)
                    .map_err(|e| format!("{id} n={n}: {e}"))?;
                ensure(r.report.verdict == Verdict::Pass, || format!("{id} n={n}: {:?}", r.report.verdict))?;
                ensure(r.max_unitarity_defect <= 1e-12, || format!("{id} n={n}: unitarity {:.2e}", r.max_unitarity_defect))?;
                ensure(r.max_block_defect <= 1e-10, || format!("{id} n={n}: block defect {:.2e}", r.max_block_defect))?;
                ensure(r.worst_inequality_margin >= -1e-8, || {
                    format!("{id} n={n}: inequality margin {:.2e}", r.worst_inequality_margin)
                })?;
                summary.push(r.worst_inequality_margin);
            }
        }
        let w = summary.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(format!("2 functions x 2 sizes x 9 configurations x 100 pairs, worst margin {w:.2e}"))
    });
}

#[test]
fn support_and_reconstruction() {
    run("supporting pencils and reconstruction", || {
        let t = tol();
        let (mut margin, mut slack, mut resid, mut err): (f64, f64, f64, f64) =
            (f64::INFINITY, f64::INFINITY, 0.0, 0.0);
        let mut count = 0;
        for (i, id) in MONOTONE_CATALOGUE.iter().enumerate() {
            let f = lookup(id).map_err(|e| e.to_string())?;
            let k = f.arity();
            let sizes = if id.starts_with("power") || id.starts_with("karcher") { 4 } else { 6 };
            let mut rng = rng_from_seed(700 + i as u64);
            for j in 0..50 {
                let n = 1 + j % sizes;
                let a = random::tuple_in_interval(k, n, 0.5, 2.0, &mut rng);
                let v = random::unit_vector(n, &mut rng);
                let opts = SupportOptions { interval: (0.5, 2.0), samples: 200, seed: j as u64 };
                let at = |e: loewner::Error| format!("{id} point {j} (n={n}): {e}");
                let cert = support_pencil(&f, &a, &v, &opts, &t).map_err(at)?;
                // (a) positivity and dominance
                let coeffs = cert.pencil.coeffs();
                let scale = 1e-8 * (1.0 + op_norm(coeffs[0].as_mat()));
                let mut dom = coeffs[0].as_mat().clone();
                for b in coeffs {
                    ensure(b.min_eig() >= -scale, || format!("{id} point {j}: coefficient eigenvalue {:.2e}", b.min_eig()))?;
                }
                for b in &coeffs[1..] {
                    dom -= b.as_mat();
                }
                ensure(min_eig(&dom) >= -scale, || format!("{id} point {j}: dominance {:.2e}", min_eig(&dom)))?;
                // (b) support on the validation samples plus fresh ones
                ensure(cert.validation.samples == 200, || "validation sample count".into())?;
                let mut m = cert.validation.support_margin;
                let mut hyp = rng_from_seed(10_000 + j as u64);
                for _ in 0..10 {
                    let h = hypo_sample(&f, n, (0.5, 2.0), &mut hyp).map_err(at)?;
                    m = m.min(min_eig(&cert.eval(&h.y, &h.x).map_err(at)?));
                }
                ensure(m >= -1e-7, || format!("{id} point {j}: support margin {m:.2e}"))?;
                // (c) trace bound, recomputed from the scalar function
                let bound = f.scalar(&vec![2.0; k]).map_err(at)? / 0.5f64.min(1.0);
                let s = bound - coeffs[0].trace();
                ensure(s >= -1e-8, || format!("{id} point {j}: trace slack {s:.2e}"))?;
                let r = reconstruct(&cert, 1e-6, &t).map_err(at)?;
                ensure(r.residual <= 1e-6, || format!("{id} point {j}: residual {:.2e}", r.residual))?;
                let want = f.eval(&a).map_err(at)?.as_mat() * &v;
                let e = (&r.value - &want).norm() / (1.0 + want.norm());
                ensure(e <= 1e-6, || format!("{id} point {j}: reconstruction error {e:.2e}"))?;
                margin = margin.min(m);
                slack = slack.min(s);
                resid = resid.max(r.residual);
                err = err.max(e);
                count += 1;
            }
        }
        Ok(format!(
            "{count} certificates, support margin {margin:.2e}, trace slack {slack:.2e}, residual {resid:.2e}, error {err:.2e}"
        ))
    });
}

#[test]
fn direct_sum_representation() {
    run("direct-sum representation reproduces F on its points", || {
        let t = tol();
        let mut worst: f64 = 0.0;
        for (i, id) in ["geometric", "harmonic:k=2"].iter().enumerate() {
            let f = lookup(id).map_err(|e| e.to_string())?;
            let mut rng = rng_from_seed(800 + i as u64);
            let points: Vec<(MatTuple, CVec)> = (0..4)
                .map(|_| (random::tuple_in_interval(2, 3, 0.5, 2.0, &mut rng), random::unit_vector(3, &mut rng)))
                .collect();
            let opts = SupportOptions { interval: (0.5, 2.0), samples: 200, seed: 8 };
            let rep = direct_sum_rep(&f, &points, &opts, 1e-6, &t).map_err(|e| format!("{id}: {e}"))?;
            for (j, (a, v)) in points.iter().enumerate() {
                let got = rep_eval(&rep.rep, a, &certificate_tolerances(&t)).map_err(|e| format!("{id}: {e}"))?;
                let want = f.eval(a).map_err(|e| e.to_string())?.as_mat() * v;
                let r = (got.as_mat() * v - &want).norm() / (1.0 + want.norm());
                worst = worst.max(r).max(rep.residuals[j]);
                ensure(r <= 1e-6 && rep.residuals[j] <= 1e-6, || format!("{id} point {j}: residual {r:.2e}"))?;
            }
        }
        Ok(format!("2 functions x 4 points at n = 3, worst residual {worst:.2e}"))
    });
}

fn sqrt_rep() -> loewner::represent::PencilRepresentation {
    rep_from_quadrature(&sqrt(), 64, (0.1, 10.0), 1e-3, &tol()).expect("quadrature representation")
}

#[test]
fn quadrature_round_trip() {
    run("quadrature representation of sqrt", || {
        let t = tol();
        let rep = sqrt_rep();
        let mut rng = rng_from_seed(909);
        let mut worst: f64 = 0.0;
        for j in 0..100 {
            let n = rng.random_range(1..=8);
            let x = random::pd_in_interval(n, 0.1, 10.0, &mut rng);
            let got = rep_eval(&rep, &MatTuple::new(vec![x.clone()]).unwrap(), &t).map_err(|e| e.to_string())?;
            let want = funcalc(f64::sqrt, &x).map_err(|e| e.to_string())?;
            let e = relative_op_error(got.as_mat(), want.as_mat());
            worst = worst.max(e);
            ensure(e <= 1e-3, || format!("matrix {j}: relative error {e:.2e}"))?;
        }
        let f = rep.free_fn("sqrt-quadrature", t);
        let p = CertParams { n: 2, trials: 1000, seed: 91, interval: (0.1, 10.0), tol: t };
        let m = monotone_test(&f, &p).map_err(|e| e.to_string())?;
        let c = concave_test(&f, &p).map_err(|e| e.to_string())?;
        ensure(m.verdict == Verdict::Pass && c.verdict == Verdict::Pass, || {
            format!("black-box verdicts {:?} / {:?}", m.verdict, c.verdict)
        })?;
        Ok(format!("100 matrices, worst relative error {worst:.2e}; monotone and concave pass"))
    });
}

#[test]
fn analytic_continuation() {
    run("quadrature representation continues to the upper half-plane", || {
        let t = tol();
        let rep = sqrt_rep();
        let mut rng = rng_from_seed(1010);
        let mut worst = f64::INFINITY;
        for j in 0..200 {
            let n = rng.random_range(1..=6);
            let x = random::upper_half_plane(n, 0.1, 3.0, &mut rng);
            let out = rep_eval_complex(&rep, &MatTuple::new(vec![x]).unwrap(), DEFAULT_SECTOR_GRID, &t)
                .map_err(|e| format!("point {j}: {e}"))?;
            let m = im_part(&out).map_err(|e| e.to_string())?.min_eig();
            worst = worst.min(m);
            ensure(m >= -1e-8, || format!("point {j}: Im output eigenvalue {m:.2e}"))?;
        }
        let z = C64::new(1.0, 1.0);
        let x = GenMat::identity(3, 3) * z;
        let got = rep_eval_complex(&rep, &MatTuple::new(vec![x]).unwrap(), DEFAULT_SECTOR_GRID, &t)
            .map_err(|e| e.to_string())?;
        let e = relative_op_error(&got, &(GenMat::identity(3, 3) * z.sqrt()));
        ensure(e <= 2e-3, || format!("(1+i)I: relative error {e:.2e}"))?;
        Ok(format!("200 points, worst Im eigenvalue {worst:.2e}; error at (1+i)I {e:.2e}"))
    });
}

#[test]
fn mobius_transform() {
    run("Mobius map x/(x+1)", || {
        let g = MobiusMap::new(1.0, 0.0, 1.0, 1.0).map_err(|e| e.to_string())?;
        let r = monotone_test(&g.free_fn(), &CertParams { seed: 111, ..CertParams::default() })
            .map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Pass, || format!("monotone verdict {:?}", r.verdict))?;
        let mut rng = rng_from_seed(1111);
        let mut worst = f64::INFINITY;
        for j in 0..200 {
            let n = rng.random_range(1..=6);
            let z = random::upper_half_plane(n, 0.01, 2.0, &mut rng);
            let out = mobius_apply(&g, &z).map_err(|e| format!("point {j}: {e}"))?;
            let id = GenMat::identity(n, n);
            let direct = &id - inverse(&(&z + &id)).ok_or("singular Z + I")?;
            ensure(relative_op_error(&out, &direct) <= 1e-10, || format!("point {j}: disagrees with I - (Z+I)^-1"))?;
            let m = im_part(&out).map_err(|e| e.to_string())?.min_eig();
            worst = worst.min(m);
            ensure(m >= -1e-8, || format!("point {j}: Im g(Z) eigenvalue {m:.2e}"))?;
        }
        Ok(format!("monotone over 1000 trials; 200 points, worst Im eigenvalue {worst:.2e}"))
    });
}

fn random_weights(k: usize, rng: &mut Rng64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

#[test]
fn means_sanity() {
    run("Karcher mean against scalar and AGH oracles", || {
        let t = tol();
        let mut rng = rng_from_seed(1212);
        let mut diag_err: f64 = 0.0;
        for j in 0..100 {
            let k = rng.random_range(2..=4);
            let n = rng.random_range(1..=5);
            let w = random_weights(k, &mut rng);
            let d: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(0.1..10.0)).collect()).collect();
            let x = MatTuple::new(d.iter().map(|r| HermMat::from_real_diagonal(r)).collect()).unwrap();
            let got = karcher_mean_value(&w, &x, &t).map_err(|e| format!("tuple {j}: {e}"))?.value;
            let want: Vec<f64> = (0..n).map(|i| (0..k).map(|l| d[l][i].powf(w[l])).product()).collect();
            let e = op_norm(&(got.as_mat() - HermMat::from_real_diagonal(&want).as_mat()));
            diag_err = diag_err.max(e);
            ensure(e <= 1e-8, || format!("diagonal tuple {j}: error {e:.2e}"))?;
        }
        let mut worst = f64::INFINITY;
        for j in 0..200 {
            let k = rng.random_range(2..=4);
            let n = rng.random_range(1..=5);
            let w = random_weights(k, &mut rng);
            let x = random::tuple_in_interval(k, n, 0.1, 10.0, &mut rng);
            let h = harmonic_mean_value(&w, &x).map_err(|e| e.to_string())?;
            let g = karcher_mean_value(&w, &x, &t).map_err(|e| format!("tuple {j}: {e}"))?.value;
            let a = arithmetic_mean_value(&w, &x);
            let m = min_eig(&(g.as_mat() - h.as_mat())).min(min_eig(&(a.as_mat() - g.as_mat())));
            worst = worst.min(m);
            ensure(m >= -1e-8, || format!("tuple {j}: AGH margin {m:.2e}"))?;
        }
        Ok(format!("diagonal error {diag_err:.2e}; AGH worst margin {worst:.2e} over 200 tuples"))
    });
}

#[test]
fn cli_determinism_round_trip_and_exit_codes() {
    run("command line determinism, fixtures and exit codes", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

        // identical seeds, identical bytes
        let det: [&[&str]; 3] = [
            &["check", "harmonic:k=2", "monotone", "--n", "3", "--trials", "200", "--seed", "42", "--format", "json"],
            &["check", "xsq", "concave", "--seed", "3", "--format", "json"],
            &["support", "geometric", &fixture("pair_general.json"), "--v", "1,2", "--seed", "5", "--format", "json"],
        ];
        for args in det {
            let a = loewner(args);
            let b = loewner(args);
            ensure(a.stdout == b.stdout && !a.stdout.is_empty(), || format!("nondeterministic: {args:?}"))?;
        }
        let (fa, fb) = (out("a.json"), out("b.json"));
        for f in [&fa, &fb] {
            loewner(&["check", "xsq", "monotone", "--seed", "9", "--out", f]);
        }
        let (ra, rb) = (std::fs::read(&fa).map_err(|e| e.to_string())?, std::fs::read(&fb).map_err(|e| e.to_string())?);
        ensure(ra == rb, || "counterexample reports differ".into())?;

        // fixtures round-trip
        let mut fixtures = 0;
        for entry in std::fs::read_dir(fixtures_dir()).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
            let parsed = MatrixFile::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            let again = parsed.to_json().map_err(|e| e.to_string())? + "\n";
            ensure(again == text, || format!("{} does not re-serialize identically", path.display()))?;
            ensure(MatrixFile::from_json(&again).map_err(|e| e.to_string())? == parsed, || "reparse differs".into())?;
            fixtures += 1;
        }

        // exit codes
        let cases: Vec<(Vec<String>, i32)> = vec![
            (vec!["check", "sqrt", "monotone", "--n", "4", "--trials", "1000", "--seed", "7"], 0),
            (vec!["check", "xsq", "monotone", "--n", "2"], 2),
            (vec!["check", "xsq", "monotone", "--interval", "1e200,1e201", "--trials", "5"], 3),
            (vec!["check", "nosuchfn", "monotone"], 64),
            (vec!["check", "sqrt", "monotone", "--interval", "2,1"], 64),
            (vec!["schur", &fixture("shorted_example.json"), "--pivot", "0"], 0),
            (vec!["schur", &fixture("not_psd.json"), "--pivot", "0", "--psd"], 1),
            (vec!["schur", &fixture("sectorial3.json"), "--pivot", "0,1", "--sector-bound"], 0),
            (vec!["schur", &fixture("pencil_sum.json"), "--pivot", "0"], 65),
            (vec!["pencil-eval", &fixture("pencil_sum.json"), &fixture("pair_4i_9i.json")], 0),
            (vec!["pencil-eval", &fixture("pencil_sum.json"), &fixture("diag_1_4.json")], 1),
            (vec!["support", "sqrt", &fixture("diag_1_4.json"), "--v", "1,0", "--out", &out("c.json")], 0),
            (vec!["support", "nosuchfn", &fixture("diag_1_4.json"), "--v", "1,0"], 64),
            (vec!["reconstruct", &fixture("harmonic_cert.json")], 0),
            (vec!["reconstruct", &fixture("identity2.json")], 65),
            (vec!["repeval", &fixture("sqrt_rep8.json"), &fixture("diag_1_4.json")], 0),
            (vec!["repeval", &fixture("sqrt_rep8.json"), &fixture("upper_half_plane.json"), "--complex"], 0),
            (vec!["repeval", &fixture("sqrt_rep8.json"), &fixture("pair_4i_9i.json")], 1),
            (vec!["mean", "geometric", &fixture("pair_4i_9i.json")], 0),
            (vec!["mean", "karcher", &fixture("diagonal_triple.json")], 0),
            (vec!["mean", "karcher", &fixture("not_pd_pair.json")], 65),
            (vec!["quadrep", "sqrt", "--nodes", "8", "--rel-tol", "2e-2", "--out", &out("r.json")], 0),
            (vec!["quadrep", "sqrt", "--nodes", "4", "--rel-tol", "1e-9"], 1),
            (vec!["frobnicate"], 64),
        ]
        .into_iter()
        .map(|(a, c)| (a.into_iter().map(String::from).collect(), c))
        .collect();
        for (args, code) in &cases {
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let r = loewner(&argv);
            ensure(r.code == *code, || format!("{argv:?}: exit {} (want {code}), stderr {}", r.code, r.stderr.trim()))?;
        }
        Ok(format!("3 deterministic commands, {fixtures} fixtures, {} exit-code cases", cases.len()))
    });
}
