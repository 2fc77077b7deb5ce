//! The scattering function `f`, its derivatives, the branch value `T(mu)`
//! and the closed-form boundary profile `Im f(x + i0)` on the real axis.
//!
//!     cargo run --example scattering -- 1.5

use nls_rhp::scattering::{eval_f, eval_f_mu, eval_f_prime, eval_t, im_f_real_axis};
use nls_rhp::{Complex64, ProblemParams, Side};

fn main() -> nls_rhp::Result<()> {
    let mu: f64 = std::env::args().nth(1).map_or(Ok(2.0), |s| s.parse()).expect("mu must be a number");
    let p = ProblemParams::new(0.5, 0.3, mu, 0)?;
    println!("T({mu}) = {}", eval_t(mu));

    println!("{:>18} {:>40} {:>40}", "z", "f(z)", "f'(z)");
    for z in [Complex64::new(0.0, 1.0), Complex64::new(0.7, 0.4), Complex64::new(-1.2, 0.9)] {
        let f = eval_f(z, Side::Upper, &p)?;
        let fp = eval_f_prime(z, Side::Upper, &p)?;
        println!("{:>18} {:>40} {:>40}", format!("{z:.3}"), format!("{f:.12}"), format!("{fp:.12}"));
    }
    let z = Complex64::new(0.2, 0.8);
    println!("f_mu({z}) = {:.12}", eval_f_mu(z, Side::Upper, mu)?);

    // Schwarz symmetry: the lower half-plane value is the conjugate.
    let up = eval_f(z, Side::Upper, &p)?;
    let down = eval_f(z.conj(), Side::Lower, &p)?;
    println!("|f(conj z) - conj f(z)| = {:.1e}", (down - up.conj()).norm());

    println!("\nIm f(x + i0), closed form vs. the upper boundary value:");
    for x in [-1.5, -0.5, 0.0, 0.4, 0.9, 1.6] {
        let closed = im_f_real_axis(x, mu);
        let boundary = eval_f(Complex64::new(x, 0.0), Side::RealFromAbove, &p)?.im;
        println!("  x = {x:5.2}: {closed:+.12} {boundary:+.12}");
    }
    Ok(())
}
