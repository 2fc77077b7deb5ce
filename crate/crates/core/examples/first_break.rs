//! Locates the first break along `x = 0.5`, `mu = 2`: the genus-0 branch is
//! tracked in `t` from the exact `t = 0` branchpoint, and `t` is bisected on
//! the sign of `Im h` at the saddle of `h` where the admissible corridor to
//! the real axis pinches off.

use nls_rhp::contour::build_contour;
use nls_rhp::modulation::newton_solve;
use nls_rhp::radical::BranchpointSet;
use nls_rhp::rhp::RhpSolution;
use nls_rhp::{Complex64, ProblemParams, Result, Tolerances};

fn solve(t: f64, guess: Complex64) -> Result<(Complex64, RhpSolution)> {
    let p = ProblemParams::new(0.5, t, 2.0, 0)?;
    let r = newton_solve(&BranchpointSet::new(vec![guess])?, &p, &Tolerances::default())?;
    let sol = RhpSolution::new(build_contour(&r.alphas, p.mu)?, p, 1e-12)?;
    Ok((r.alphas.upper()[0], sol))
}

/// Newton on `h'` with a difference quotient for `h''`.
fn saddle(sol: &RhpSolution, mut z: Complex64) -> Result<Complex64> {
    for _ in 0..30 {
        let e = 1e-5;
        let d = sol.eval_h_prime(z)?;
        let dd = (sol.eval_h_prime(z + e)? - sol.eval_h_prime(z - e)?) / (2.0 * e);
        let step = d / dd;
        z -= step;
        if step.norm() < 1e-12 {
            break;
        }
    }
    Ok(z)
}

fn main() -> Result<()> {
    let x: f64 = 0.5;
    let mut alpha = Complex64::new(x.tanh(), 1.0 / x.cosh());
    let mut t = 0.0;
    while t < 0.24 {
        t += 0.02;
        alpha = solve(t, alpha)?.0;
    }
    let mut s = Complex64::new(-0.86, 1.09);
    let (mut lo, mut hi) = (0.24, 0.30);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        let (a, sol) = solve(mid, alpha)?;
        alpha = a;
        s = saddle(&sol, s)?;
        let im = sol.eval_h(s)?.im;
        if im > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    println!("first break at t = {:.7} (saddle {s:.5}, alpha {alpha:.8})", 0.5 * (lo + hi));
    Ok(())
}
