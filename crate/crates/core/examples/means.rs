//! Operator means from the catalogue and their iterations.

use loewner::freefun::{
    arithmetic_mean_value, geometric_mean_2, harmonic_mean_value, karcher_mean_value, lookup, power_mean_value,
};
use loewner::matcore::random::{self, rng_from_seed};
use loewner::matcore::{min_eig, HermMat, MatTuple, Tolerances};

fn main() -> loewner::Result<()> {
    let tol = Tolerances::default();
    let g = geometric_mean_2(&HermMat::scaled_identity(2, 4.0), &HermMat::scaled_identity(2, 9.0))?;
    println!("4I # 9I = {:.6} I", g.as_mat()[(0, 0)].re);

    // commuting arguments reduce to scalar weighted geometric means
    let x = MatTuple::new(vec![
        HermMat::from_real_diagonal(&[1.0, 2.0]),
        HermMat::from_real_diagonal(&[3.0, 0.5]),
        HermMat::from_real_diagonal(&[2.0, 8.0]),
    ])?;
    let w = [0.5, 0.25, 0.25];
    let k = karcher_mean_value(&w, &x, &tol)?;
    let want = 3f64.powf(0.25) * 2f64.powf(0.25);
    println!("karcher diag: {:.12} (scalar {want:.12}), {} iterations", k.value.as_mat()[(0, 0)].re, k.iterations);

    let mut rng = rng_from_seed(5);
    let x = random::tuple_in_interval(3, 4, 0.2, 5.0, &mut rng);
    let w = [0.2, 0.3, 0.5];
    let h = harmonic_mean_value(&w, &x)?;
    let kar = karcher_mean_value(&w, &x, &tol)?;
    let a = arithmetic_mean_value(&w, &x);
    println!(
        "H <= K <= A margins: {:.3e}, {:.3e}",
        min_eig(&(kar.value.as_mat() - h.as_mat())),
        min_eig(&(a.as_mat() - kar.value.as_mat()))
    );
    for t in [1.0, 0.5, 0.25, 0.05] {
        let p = power_mean_value(t, &w, &x)?;
        println!("  power mean t = {t:<4}: {:>3} iterations, residual {:.1e}", p.iterations, p.residual);
    }

    let f = lookup("karcher:w=0.2,0.3,0.5")?;
    println!("{} has arity {}", f.id(), f.arity());
    Ok(())
}
