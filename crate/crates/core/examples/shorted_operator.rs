//! Shorted operators of PSD matrices, including a singular eliminated block.

use loewner::matcore::random::{self, rng_from_seed};
use loewner::matcore::{min_eig, HermMat, Tolerances};
use loewner::schur::{embed, shorted_psd, PivotSubspace};

fn main() -> loewner::Result<()> {
    let tol = Tolerances::default();

    // [[2, 1], [1, 1]] shorted to the first coordinate: 2 - 1 * 1 / 1 = 1
    let a = HermMat::from_real_rows(2, &[2.0, 1.0, 1.0, 1.0]);
    let s = PivotSubspace::coordinates(2, &[0])?;
    let r = shorted_psd(&a, &s, &tol)?;
    println!("S([[2,1],[1,1]]) = {:.6}", r.shorted.as_mat()[(0, 0)].re);

    // eliminated block [[1,1],[1,1]] is singular but A21 lies in its range
    let b = HermMat::from_real_rows(3, &[3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    let r = shorted_psd(&b, &PivotSubspace::coordinates(3, &[0])?, &tol)?;
    println!("singular block: shorted = {:.6}, Douglas defect = {:.2e}", r.shorted.as_mat()[(0, 0)].re, r.defect);

    // a random subspace; iota(S(A)) sits below A
    let mut rng = rng_from_seed(3);
    let a = random::psd(6, &mut rng);
    let s = PivotSubspace::new(random::isometry(6, 2, &mut rng), &tol)?;
    let r = shorted_psd(&a, &s, &tol)?;
    let gap = min_eig(&(a.as_mat() - embed(&s, r.shorted.as_mat())));
    println!("A in C^6, 2-dim subspace: lambda_min(A - iota(S(A))) = {gap:.2e}");

    // and above anything else that fits under A
    let y = r.shorted.scale(0.9);
    println!(
        "0.9 S(A) fits under A: {}, 1.1 S(A) fits: {}",
        min_eig(&(a.as_mat() - embed(&s, y.as_mat()))) >= -1e-12,
        min_eig(&(a.as_mat() - embed(&s, r.shorted.scale(1.1).as_mat()))) >= -1e-12
    );

    match shorted_psd(&HermMat::from_real_rows(2, &[1.0, 2.0, 2.0, 1.0]), &PivotSubspace::coordinates(2, &[0])?, &tol) {
        Err(e) => println!("indefinite input rejected: {}", e.name()),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
