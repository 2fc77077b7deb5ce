use nls_rhp::contour::{build_contour, build_contour_with, ContourOptions, LoopKind};
use nls_rhp::fixtures;
use nls_rhp::modulation::{grid_refine_seed, newton_solve, SearchBox};
use nls_rhp::polygon::distance_to_polyline;
use nls_rhp::quadrature::{integrate_loop, Kernel, Weight};
use nls_rhp::rhp::RhpSolution;
use nls_rhp::scattering::NlsScattering;
use nls_rhp::{Complex64, ProblemParams, RhpError, Tolerances};

#[test]
fn one_cell_grid_returns_the_box_centre() {
    let p = fixtures::pre_break().params;
    let bx = SearchBox { re: [0.5, 1.0], im: [0.6, 1.2] };
    let s = grid_refine_seed(&p, &bx, 1, &Tolerances::default()).unwrap();
    assert!((s.upper()[0] - Complex64::new(0.75, 0.9)).norm() < 1e-15);
}

#[test]
fn degenerate_boxes_and_higher_genus_are_rejected() {
    let tols = Tolerances::default();
    let p = fixtures::pre_break().params;
    for bx in [SearchBox { re: [0.5, 0.5], im: [0.6, 1.2] }, SearchBox { re: [0.5, 1.0], im: [0.9, 0.9] }] {
        assert!(grid_refine_seed(&p, &bx, 4, &tols).is_err());
    }
    let bx = SearchBox { re: [0.5, 1.0], im: [0.6, 1.2] };
    assert!(grid_refine_seed(&p, &bx, 0, &tols).is_err());
    assert!(grid_refine_seed(&fixtures::post_break().params, &bx, 4, &tols).is_err());
}

#[test]
fn grid_seed_lands_in_the_newton_basin() {
    let fx = fixtures::pre_break();
    let tols = Tolerances::default();
    let bx = SearchBox { re: [0.3, 1.3], im: [0.4, 1.4] };
    let seed = grid_refine_seed(&fx.params, &bx, 6, &tols).unwrap();
    let rep = newton_solve(&seed, &fx.params, &tols).unwrap();
    assert!(rep.converged);
    assert!((rep.alphas.upper()[0] - fx.seed.upper()[0]).norm() < 1e-9);
}

#[test]
fn newton_reaches_the_fixtures_from_nearby() {
    let tols = Tolerances::default();
    for fx in [fixtures::pre_break(), fixtures::post_break()] {
        let bumped: Vec<Complex64> = fx.seed.upper().iter().map(|a| a + Complex64::new(0.01, -0.01)).collect();
        let rep = newton_solve(&nls_rhp::radical::BranchpointSet::new(bumped).unwrap(), &fx.params, &tols).unwrap();
        assert!(rep.converged && rep.max_residual() < tols.newton);
        assert!(rep.alphas.max_abs_diff(&fx.seed) < 1e-9, "{}", fx.name);
    }
}

#[test]
fn full_branchpoint_list_is_conjugate_closed() {
    let s = fixtures::post_break().seed;
    let full = s.full();
    assert_eq!(full.len(), 6);
    for a in s.upper() {
        assert!(full.contains(&a.conj()));
    }
}

#[test]
fn loop_integrals_ignore_inflation() {
    let fx = fixtures::post_break();
    let f = NlsScattering::new(&fx.params);
    let items = [(Kernel::Power(0), Weight::F), (Kernel::Power(1), Weight::FMu), (Kernel::Power(2), Weight::One)];
    let base = build_contour(&fx.seed, fx.params.mu).unwrap();
    let reference = integrate_loop(&base.big, &items, &base.radical, &f, 1e-13).unwrap();
    for inflate in [1.05, 1.25, 1.5] {
        let cs = build_contour_with(&fx.seed, fx.params.mu, &ContourOptions { inflate, ..Default::default() }).unwrap();
        let v = integrate_loop(&cs.big, &items, &cs.radical, &f, 1e-13).unwrap();
        for (a, b) in v.iter().zip(&reference) {
            assert!((a - b).norm() <= 1e-9 * b.norm().max(1.0), "inflate {inflate}: {a} vs {b}");
        }
        let sol = RhpSolution::new(cs, fx.params, 1e-12).unwrap();
        let base_sol = RhpSolution::new(base.clone(), fx.params, 1e-12).unwrap();
        assert!((sol.w[0] - base_sol.w[0]).abs() < 1e-9 && (sol.omega[0] - base_sol.omega[0]).abs() < 1e-9);
    }
}

#[test]
fn reversing_a_loop_negates_its_integrals() {
    let fx = fixtures::post_break();
    let f = NlsScattering::new(&fx.params);
    let cs = build_contour(&fx.seed, fx.params.mu).unwrap();
    let items = [(Kernel::Power(0), Weight::F), (Kernel::Power(1), Weight::FPrime)];
    for kind in std::iter::once(LoopKind::Big).chain(cs.row_loops()) {
        let lp = cs.loop_by_kind(kind);
        let fwd = integrate_loop(lp, &items, &cs.radical, &f, 1e-13).unwrap();
        let back = integrate_loop(&lp.reversed(), &items, &cs.radical, &f, 1e-13).unwrap();
        for (a, b) in fwd.iter().zip(&back) {
            assert!((a + b).norm() <= 1e-10 * a.norm().max(1.0), "{kind:?}: {a} vs {b}");
        }
    }
}

#[test]
fn contour_moves_continuously_with_mu() {
    let fx = fixtures::post_break();
    let a = build_contour(&fx.seed, 2.0).unwrap();
    let b = build_contour(&fx.seed, 2.001).unwrap();
    let one_way = |p: &[Complex64], q: &[Complex64]| p.iter().map(|z| distance_to_polyline(*z, q)).fold(0.0, f64::max);
    let d = one_way(&a.gamma, &b.gamma).max(one_way(&b.gamma, &a.gamma));
    assert!(d < 5e-3, "Hausdorff distance {d:.3e}");
}

#[test]
fn solution_symmetry_of_h() {
    let fx = fixtures::post_break();
    let sol = RhpSolution::new(build_contour(&fx.seed, fx.params.mu).unwrap(), fx.params, 1e-12).unwrap();
    for z in [Complex64::new(0.2, 1.6), Complex64::new(-1.7, 0.3), Complex64::new(1.4, 0.9)] {
        let (up, down) = (sol.eval_dh_dmu(z).unwrap(), sol.eval_dh_dmu(z.conj()).unwrap());
        assert!((up.im + down.im).abs() < 1e-9, "at {z}: {up} / {down}");
    }
}

#[test]
fn nonpositive_mu_is_rejected() {
    assert!(matches!(ProblemParams::new(0.5, 0.1, 0.0, 0), Err(RhpError::InvalidParams(_))));
}
