//! Randomized certification of operator monotonicity and concavity.

use loewner::cert::{
    concave_test, derivative_monotone_test, doubling_concavity_check, hypograph_convexity_test, lipschitz_estimate,
    monotone_test, replay, CertParams, Property,
};
use loewner::freefun::lookup;
use loewner::matcore::{MatTuple, Tolerances};

fn main() -> loewner::Result<()> {
    let params = CertParams { n: 3, trials: 300, seed: 1, ..CertParams::default() };
    for id in ["sqrt", "log1p", "harmonic:k=2", "xsq", "tracefake"] {
        let f = lookup(id)?;
        let p = CertParams { n: if id == "xsq" || id == "tracefake" { 2 } else { 3 }, ..params };
        let m = monotone_test(&f, &p)?;
        let c = concave_test(&f, &p)?;
        let d = derivative_monotone_test(&f, &p)?;
        let h = hypograph_convexity_test(&f, 1, &p)?;
        println!("{id:<14} {:?} {:?} {:?} {:?}", m.verdict, c.verdict, d.verdict, h.verdict);
        if let Some(ce) = &m.counterexample {
            let again = replay(&f, Property::Monotone, ce, &Tolerances::default())?;
            println!("{:14} counterexample at trial {} replays to {again:.3e}", "", ce.trial);
        }
    }

    let sqrt = lookup("sqrt")?;
    let r = doubling_concavity_check(&sqrt, &[0.25, 0.5, 0.75], &[1e-1, 1e-6], 20, &CertParams { n: 2, ..params })?;
    println!(
        "doubling: unitarity {:.1e}, blocks {:.1e}, inequality margin {:.2e}",
        r.max_unitarity_defect, r.max_block_defect, r.worst_inequality_margin
    );

    let l = lipschitz_estimate(&sqrt, &MatTuple::constant(1, 3, 1.0), 0.2, 200, 4)?;
    println!(
        "Lipschitz quotient {:.4} against M/r = {:.4} and 2M/r = {:.4}",
        l.quotient, l.bound_m_over_r, l.bound_2m_over_r
    );
    Ok(())
}
