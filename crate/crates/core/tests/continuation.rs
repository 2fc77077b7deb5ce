use nls_rhp::continuation::{
    from_json, read_csv, second_differences, sweep, sweep_range, to_json, write_csv, Method, Sample, SweepParam, SweepSpec,
};
use nls_rhp::fixtures;
use nls_rhp::{Complex64, Tolerances};
use proptest::prelude::*;

fn spec(from: f64, to: f64, step: f64, method: Method) -> SweepSpec {
    SweepSpec { param: SweepParam::Mu, from, to, step, method, polish_every: None }
}

#[test]
fn zero_length_sweep_is_one_sample() {
    let fx = fixtures::post_break();
    let tr = sweep(&spec(2.0, 2.0, 0.01, Method::Both), &fx.params, &fx.seed, &Tolerances::default()).unwrap();
    for s in [&tr.ode, &tr.resolve] {
        let s = s.as_ref().unwrap();
        assert_eq!(s.samples.len(), 1);
        assert!(s.frontiers.is_empty());
        assert!(s.samples[0].alphas.iter().zip(fx.seed.upper()).all(|(a, b)| (a - b).norm() < 1e-9));
    }
    assert_eq!(tr.max_deviation(), Some(0.0));
}

#[test]
fn sweep_out_and_back_returns_to_start() {
    let fx = fixtures::post_break();
    let tols = Tolerances::default();
    let out = sweep(&spec(2.0, 2.1, 0.01, Method::Ode), &fx.params, &fx.seed, &tols).unwrap();
    let end = out.ode.as_ref().unwrap().samples.last().unwrap();
    assert_eq!(end.value, 2.1);
    let far = nls_rhp::radical::BranchpointSet::new(end.alphas.clone()).unwrap();
    let back = sweep(&spec(2.1, 2.0, 0.01, Method::Ode), &fx.params, &far, &tols).unwrap();
    let home = back.ode.as_ref().unwrap().samples.last().unwrap();
    assert_eq!(home.value, 2.0);
    let err = home.alphas.iter().zip(fx.seed.upper()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-6, "returned {err:.3e} away from the start");
}

#[test]
fn csv_and_json_round_trip() {
    let fx = fixtures::post_break();
    let tr = sweep_range(SweepParam::T, 0.44, 0.46, 0.01, Method::Both, None, &fx.params, &fx.seed, &Tolerances::default())
        .unwrap();
    assert_eq!(tr.deviation.len(), 3);
    assert!(tr.max_deviation().unwrap() < 1e-6);

    let mut buf = Vec::new();
    write_csv(&tr, &mut buf).unwrap();
    let rows = read_csv(buf.as_slice()).unwrap();
    let expected: Vec<(&str, &Sample)> = [("ode", &tr.ode), ("resolve", &tr.resolve)]
        .into_iter()
        .flat_map(|(m, s)| s.as_ref().unwrap().samples.iter().map(move |x| (m, x)))
        .collect();
    assert_eq!(rows.len(), expected.len());
    for ((m, s), (em, es)) in rows.iter().zip(&expected) {
        assert_eq!(m, em);
        assert_eq!(s, *es);
    }

    let text = to_json(&tr).unwrap();
    assert_eq!(from_json(&text).unwrap(), tr);
    let bumped = text.replacen("\"schema\": 1", "\"schema\": 7", 1);
    assert!(from_json(&bumped).is_err());
}

#[test]
fn malformed_csv_is_an_error() {
    let text = "method,mu,alpha0_re,alpha0_im\node,2.0,abc,0.5\n";
    assert!(read_csv(text.as_bytes()).is_err());
}

fn quadratic_samples(h: f64, n: usize, c: f64) -> Vec<Sample> {
    (0..n)
        .map(|k| {
            let v = 1.0 + h * k as f64;
            Sample {
                value: v,
                alphas: vec![Complex64::new(c * v * v, 1.0)],
                dalpha: vec![Complex64::new(2.0 * c * v, 0.0)],
                w: vec![],
                omega: vec![],
                dw: vec![],
                domega: vec![],
                residual: 0.0,
                signs: None,
            }
        })
        .collect()
}

#[test]
fn second_differences_of_a_parabola() {
    let d2 = second_differences(&quadratic_samples(0.125, 9, 3.0));
    assert_eq!(d2.len(), 7);
    for (v, d) in d2 {
        assert!((d - 6.0).abs() < 1e-10, "at {v}: {d}");
    }
}

proptest! {
    #[test]
    fn grid_is_uniform_and_hits_both_ends(from in -5.0f64..5.0, span in -3.0f64..3.0, step in 1e-3f64..0.5) {
        let to = from + span;
        let g = spec(from, to, step, Method::Ode).grid().unwrap();
        prop_assert_eq!(g[0], from);
        prop_assert_eq!(*g.last().unwrap(), to);
        if g.len() > 1 {
            let h = (to - from) / (g.len() - 1) as f64;
            prop_assert!(h.abs() <= step * (1.0 + 1e-9));
            for w in g.windows(2) {
                prop_assert!((w[1] - w[0] - h).abs() < 1e-12);
            }
        } else {
            prop_assert!(span.abs() < step);
        }
    }

    #[test]
    fn grid_rejects_bad_steps(step in -1.0f64..=0.0) {
        prop_assert!(spec(0.0, 1.0, step, Method::Ode).grid().is_err());
    }
}
