//! Linear pencils: validation, tensor evaluation and direct sums.

use loewner::matcore::{min_eig, HermMat, MatTuple, Tolerances};
use loewner::pencil::{pencil_direct_sum, pencil_new};

fn main() -> loewner::Result<()> {
    let tol = Tolerances::default();
    let l = pencil_new(
        vec![
            HermMat::from_real_rows(2, &[2.0, 0.5, 0.5, 1.5]),
            HermMat::from_real_diagonal(&[1.0, 0.0]),
            HermMat::from_real_rows(2, &[0.5, 0.5, 0.5, 0.5]),
        ],
        &tol,
    )?;
    println!("arity {}, psd margin {:.3}, dominance margin {:.3}", l.arity(), l.psd_margin, l.dominance_margin);

    let x = MatTuple::new(vec![
        HermMat::from_real_rows(2, &[1.0, 0.2, 0.2, 2.0]),
        HermMat::from_real_diagonal(&[0.5, 3.0]),
    ])?;
    let m = l.eval(&x)?;
    println!("L(X) is {}x{}, lambda_min = {:.4}", m.nrows(), m.ncols(), min_eig(&m));
    let shifted = l.eval_shifted(&x)?;
    println!("B0 (x) I + sum B_i (x) (X_i - I): lambda_min = {:.4}", min_eig(&shifted));

    let bad = pencil_new(vec![HermMat::from_real_diagonal(&[0.5]), HermMat::from_real_diagonal(&[1.0])], &tol);
    println!("B0 below B1: {}", bad.err().map(|e| e.name()).unwrap_or("accepted"));

    let both = pencil_direct_sum(&[l.clone(), l])?;
    println!("direct sum has coefficient dimension {}", both.dim());
    Ok(())
}
