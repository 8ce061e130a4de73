//! Quadrature pencils for x^p and log(1 + x), continued into the upper
//! half-plane, plus a Mobius map.

use loewner::freefun::{lookup, MobiusMap};
use loewner::matcore::random::{self, rng_from_seed};
use loewner::matcore::{funcalc, im_part, GenMat, MatTuple, Tolerances, C64, DEFAULT_SECTOR_GRID};
use loewner::represent::{
    quadrature_rule, relative_op_error, rep_eval, rep_eval_complex, rep_from_quadrature, LownerIntegral,
    QUADRATURE_GRID,
};

fn main() -> loewner::Result<()> {
    let tol = Tolerances::default();
    let interval = (0.1, 10.0);
    for nodes in [8, 16, 64] {
        let rule = quadrature_rule(LownerIntegral::Pow(0.5), nodes, interval, 1.0)?;
        println!("sqrt with {nodes:>2} nodes: max relative error {:.2e}", rule.max_rel_error(f64::sqrt, interval, QUADRATURE_GRID));
    }

    let rep = rep_from_quadrature(&lookup("sqrt")?, 64, interval, 1e-3, &tol)?;
    let mut rng = rng_from_seed(2);
    let x = random::pd_in_interval(4, 0.1, 10.0, &mut rng);
    let got = rep_eval(&rep, &MatTuple::new(vec![x.clone()])?, &tol)?;
    println!("4x4 check against the eigendecomposition: {:.2e}", relative_op_error(got.as_mat(), funcalc(f64::sqrt, &x)?.as_mat()));

    let z = C64::new(1.0, 1.0);
    let out = rep_eval_complex(&rep, &MatTuple::new(vec![GenMat::identity(2, 2) * z])?, DEFAULT_SECTOR_GRID, &tol)?;
    println!("sqrt((1+i) I) = {:.6} (principal root {:.6})", out[(0, 0)], z.sqrt());

    let y = random::upper_half_plane(3, 0.1, 1.0, &mut rng);
    let out = rep_eval_complex(&rep, &MatTuple::new(vec![y])?, DEFAULT_SECTOR_GRID, &tol)?;
    println!("lambda_min(Im sqrt(Z)) = {:.4}", im_part(&out)?.min_eig());

    let log_rep = rep_from_quadrature(&lookup("log1p")?, 32, interval, 1e-2, &tol)?;
    let w = rep_eval(&log_rep, &MatTuple::scalars(&[3.0])?, &tol)?;
    println!("log(1 + 3) ~ {:.5} (exact {:.5})", w.as_mat()[(0, 0)].re, 4f64.ln());

    let g = MobiusMap::new(1.0, 0.0, 1.0, 1.0)?;
    let gz = g.apply(&(GenMat::identity(2, 2) * z))?;
    println!("x/(x+1) at (1+i) I: {:.6}", gz[(0, 0)]);
    Ok(())
}
