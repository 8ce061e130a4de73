//! One pencil representation reproducing a mean at several points.

use loewner::freefun::lookup;
use loewner::matcore::random::{self, rng_from_seed};
use loewner::matcore::{CVec, MatTuple, Tolerances};
use loewner::represent::{certificate_tolerances, direct_sum_rep, rep_eval, SupportOptions};

fn main() -> loewner::Result<()> {
    let tol = Tolerances::default();
    let f = lookup("geometric")?;
    let mut rng = rng_from_seed(8);
    let points: Vec<(MatTuple, CVec)> = (0..3)
        .map(|_| (random::tuple_in_interval(2, 2, 0.5, 2.0, &mut rng), random::unit_vector(2, &mut rng)))
        .collect();
    let rep = direct_sum_rep(&f, &points, &SupportOptions::default(), 1e-6, &tol)?;
    println!("coefficient dimension {}, residuals {:?}", rep.rep.pencil.dim(), rep.residuals);
    for (j, (a, v)) in points.iter().enumerate() {
        let got = rep_eval(&rep.rep, a, &certificate_tolerances(&tol))?;
        let want = f.eval(a)?;
        println!(
            "point {j}: |Psi(A) v - F(A) v| = {:.2e}",
            (got.as_mat() * v - want.as_mat() * v).norm()
        );
    }
    Ok(())
}
