//! Solves the modulation equations from the fixture seeds, then the scalar
//! RHP on the converged branchpoints: the constants `W`, `Omega` and a few
//! values of `h`.
//!
//!     cargo run --example solve            # genus 2, after the first break
//!     cargo run --example solve -- pre     # genus 0, before it

use nls_rhp::contour::build_contour;
use nls_rhp::fixtures;
use nls_rhp::modulation::newton_solve;
use nls_rhp::rhp::RhpSolution;
use nls_rhp::{Complex64, Tolerances};

fn main() -> nls_rhp::Result<()> {
    let fx = match std::env::args().nth(1).as_deref() {
        Some("pre") => fixtures::pre_break(),
        _ => fixtures::post_break(),
    };
    let tols = Tolerances { newton: 1e-12, ..Tolerances::default() };
    // Perturb the stored seed so Newton has something to do.
    let seed = nls_rhp::radical::BranchpointSet::new(fx.seed.upper().iter().map(|a| a * 1.02).collect())?;
    let rep = newton_solve(&seed, &fx.params, &tols)?;
    println!("{} fixture {:?}: {} Newton iterations", fx.name, fx.params, rep.iterations);
    for (j, (a, r)) in rep.alphas.upper().iter().zip(&rep.residuals).enumerate() {
        println!("  alpha_{} = {a:.14}   |K| = {r:.1e}   dK/dalpha = {:.6}", 2 * j, rep.jacobian_diag[j]);
    }

    let sol = RhpSolution::new(build_contour(&rep.alphas, fx.params.mu)?, fx.params, 1e-12)?;
    println!("W = {:?}, Omega = {:?}, D = {:.6}", sol.w, sol.omega, sol.d);
    let (dw, dom) = sol.solve_constants_mu()?;
    println!("dW/dmu = {dw:?}, dOmega/dmu = {dom:?}");
    for z in [Complex64::new(0.0, 1.5), Complex64::new(-0.4, 0.3), Complex64::new(1.5, 0.2)] {
        let (h, hp) = sol.eval_h_and_prime(z)?;
        println!("h({z}) = {h:.10}, h' = {hp:.10}");
    }
    Ok(())
}
