//! Closed-form and finite-difference oracle suites on the built-in fixtures
//! (what `nls-rhp selftest` runs).

use nls_rhp::contour::build_contour;
use nls_rhp::fixtures;
use nls_rhp::rhp::RhpSolution;
use nls_rhp::selftest;

fn main() -> nls_rhp::Result<()> {
    let tols = selftest::oracle_tolerances();
    for fx in [fixtures::pre_break(), fixtures::post_break()] {
        let s = fx.solve(&tols)?;
        let sol = RhpSolution::new(build_contour(&s.alphas, fx.params.mu)?, fx.params, 1e-13)?;
        let mut checks = selftest::quadrature_oracles(fx.name, &s.alphas, fx.params.mu, 1e-13)?;
        checks.extend(selftest::rhp_residuals(fx.name, &sol)?);
        checks.extend(selftest::jacobian_diagonality(fx.name, &fx, &tols)?);
        checks.extend(selftest::derivative_oracles(fx.name, &fx, &tols)?);
        for c in &checks {
            println!("{c}");
        }
    }
    Ok(())
}
