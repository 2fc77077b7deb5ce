use nls_rhp::contour::build_contour;
use nls_rhp::fixtures;
use nls_rhp::scattering::{eval_f, eval_f_mu, eval_f_prime};
use nls_rhp::{Complex64, ProblemParams, Side};
use proptest::prelude::*;

fn upper_point() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, 0.05f64..2.5).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scattering_is_schwarz_symmetric(z in upper_point(), x in -1.0f64..1.0, t in 0.0f64..1.0, mu in 0.3f64..3.5) {
        let p = ProblemParams::new(x, t, mu, 0).unwrap();
        let pairs = [
            (eval_f(z, Side::Upper, &p), eval_f(z.conj(), Side::Lower, &p)),
            (eval_f_prime(z, Side::Upper, &p), eval_f_prime(z.conj(), Side::Lower, &p)),
            (eval_f_mu(z, Side::Upper, mu), eval_f_mu(z.conj(), Side::Lower, mu)),
        ];
        for (up, down) in pairs {
            match (up, down) {
                (Ok(a), Ok(b)) => prop_assert!((a.conj() - b).norm() <= 1e-13 * (1.0 + a.norm())),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "one side failed: {a:?} / {b:?}"),
            }
        }
    }

    #[test]
    fn radical_squares_to_the_polynomial(re in -4.0f64..4.0, im in -4.0f64..4.0) {
        let fx = fixtures::post_break();
        let cs = build_contour(&fx.seed, fx.params.mu).unwrap();
        let z = Complex64::new(re, im);
        let Ok(r) = cs.radical.eval(z) else { return Ok(()) };
        let poly: Complex64 = cs.alphas.full().iter().map(|a| z - a).product();
        prop_assert!((r * r - poly).norm() <= 1e-12 * poly.norm());
        if let Ok(rc) = cs.radical.eval(z.conj()) {
            prop_assert!((rc - r.conj()).norm() <= 1e-12 * r.norm());
        }
    }
}

#[test]
fn scattering_is_continuous_across_mu_two() {
    // Steps of f in mu, less the part explained by the derivative.
    let z = Complex64::new(1.0, 1.0);
    let h = 1e-6;
    let f = |mu: f64| eval_f(z, Side::Upper, &ProblemParams::new(0.5, 0.45, mu, 0).unwrap()).unwrap();
    for k in 0..2000 {
        let mu = 2.0 - 1e-3 + h * k as f64;
        let mid = eval_f_mu(z, Side::Upper, mu + 0.5 * h).unwrap();
        let jump = (f(mu + h) - f(mu) - h * mid).norm();
        assert!(jump < 1e-8, "jump {jump:.3e} at mu = {mu}");
    }
}
