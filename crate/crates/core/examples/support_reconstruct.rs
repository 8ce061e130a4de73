//! A supporting pencil at a base point and the value it reconstructs.

use loewner::freefun::lookup;
use loewner::matcore::random::{self, rng_from_seed};
use loewner::matcore::Tolerances;
use loewner::represent::{reconstruct, reconstruction_error, support_pencil, SupportOptions};

fn main() -> loewner::Result<()> {
    let tol = Tolerances::default();
    let mut rng = rng_from_seed(21);
    for id in ["sqrt", "harmonic:k=2", "karcher:k=2"] {
        let f = lookup(id)?;
        let a = random::tuple_in_interval(f.arity(), 3, 0.5, 2.0, &mut rng);
        let v = random::unit_vector(3, &mut rng);
        let cert = support_pencil(&f, &a, &v, &SupportOptions::default(), &tol)?;
        let val = &cert.validation;
        println!(
            "{id}: tr B0 = {:.4}, dominance {:.1e}, support margin {:.1e} over {} samples, trace slack {:.3}",
            cert.c, cert.pencil.dominance_margin, val.support_margin, val.samples, val.trace_slack
        );
        let r = reconstruct(&cert, 1e-6, &tol)?;
        println!(
            "    residual {:.1e}, |S(M) v - F(A) v| / (1 + |F(A) v|) = {:.1e}",
            r.residual,
            reconstruction_error(&f, &cert, &r.value)?
        );
    }
    Ok(())
}
