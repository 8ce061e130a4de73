//! Schur complements of sectorial and half-plane matrices.

use loewner::matcore::random::{self, rng_from_seed};
use loewner::matcore::{im_part, sector_estimate, GenMat, Tolerances, C64, DEFAULT_SECTOR_GRID};
use loewner::schur::{schur_generic, sector_bound_check, Keep, PivotSubspace};

fn main() -> loewner::Result<()> {
    let tol = Tolerances::default();
    let mut rng = rng_from_seed(11);

    let a = random::sectorial(6, 1.5, &mut rng);
    let est = sector_estimate(&a, DEFAULT_SECTOR_GRID)?;
    println!(
        "numerical range: sampled angle {:.2} deg, certified {:.2} deg, min Re W(A) = {:.3}",
        est.alpha.to_degrees(),
        est.alpha_upper.to_degrees(),
        est.margin
    );

    let s = PivotSubspace::coordinates(6, &[0, 1, 2])?;
    let rep = sector_bound_check(&a, &s, Keep::Subspace, DEFAULT_SECTOR_GRID, &tol)?;
    println!("sec^2(alpha) = {:.4}", rep.sec2);
    for (j, (x, b)) in rep.singular_value_pairs.iter().enumerate() {
        println!("  sigma_{j}(S(A)) = {x:.4} <= {b:.4}");
    }
    println!("||S(A)|| = {:.4} <= {:.4}; pass = {}", rep.schur_norm, rep.norm_bound, rep.pass);

    // upper half-plane in, upper half-plane out
    let z = random::upper_half_plane(5, 0.0, 1.0, &mut rng) + GenMat::identity(5, 5) * C64::new(0.0, 0.05);
    let sz = schur_generic(&z, &PivotSubspace::coordinates(5, &[3, 4])?, Keep::Complement, &tol)?;
    println!("lambda_min(Im S(Z)) = {:.4}", im_part(&sz)?.min_eig());
    Ok(())
}
