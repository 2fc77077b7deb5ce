//! Loop integrals `∮ k(ζ) w(ζ)/R(ζ) dζ` over the big loop, checked against
//! the residue at infinity, and a batch of weighted moments.

use std::f64::consts::PI;

use nls_rhp::contour::{build_contour, LoopKind};
use nls_rhp::fixtures;
use nls_rhp::quadrature::{integrate_family, IntegralSpec, Kernel, Weight};
use nls_rhp::scattering::NlsScattering;
use nls_rhp::Complex64;

fn main() -> nls_rhp::Result<()> {
    let fx = fixtures::post_break();
    let cs = build_contour(&fx.seed, fx.params.mu)?;
    let f = NlsScattering::new(&fx.params);

    // R grows like ζ^3, so the moments of 1/R vanish below n = 2 and equal -2πi at n = 2.
    let specs: Vec<IntegralSpec> = (0..4).map(|n| IntegralSpec::new(LoopKind::Big, Kernel::Power(n), Weight::One)).collect();
    let v = integrate_family(&specs, &cs, &f, 1e-13)?;
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    let half_sum: Complex64 = cs.alphas.full().iter().sum::<Complex64>() * 0.5;
    let exact = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), -i2pi, -i2pi * half_sum];
    for (n, (a, b)) in v.iter().zip(&exact).enumerate() {
        println!("∮ ζ^{n}/R = {a:.14}   closed form {b:.14}   |diff| {:.1e}", (a - b).norm());
    }

    let weighted: Vec<IntegralSpec> = [Weight::F, Weight::FMu, Weight::FPrime, Weight::FX, Weight::FT]
        .into_iter()
        .map(|w| IntegralSpec::new(LoopKind::Big, Kernel::Power(0), w))
        .collect();
    for (s, val) in weighted.iter().zip(integrate_family(&weighted, &cs, &f, 1e-12)?) {
        println!("∮ {:?}/R = {val:.12}", s.weight);
    }
    Ok(())
}
