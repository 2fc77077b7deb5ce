//! One line per acceptance criterion; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::time::Instant;

use nls_rhp::analysis::{detect_genus, SignOptions};
use nls_rhp::continuation::{second_differences, sweep_range, Method, SweepParam};
use nls_rhp::contour::build_contour;
use nls_rhp::fixtures::{self, Fixture};
use nls_rhp::radical::BranchpointSet;
use nls_rhp::rhp::RhpSolution;
use nls_rhp::selftest::{self, worst, Check};
use nls_rhp::{Result, Tolerances};

const AGREEMENT: f64 = 1e-3;
const KINK_FACTOR: f64 = 10.0;
const QUAD_TOL: f64 = 1e-13;

const C1: &str = "two-method agreement, mu in [1, 3], step 1e-2";
const C2: &str = "smoothness across mu = 2";

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn from_checks(id: usize, title: &'static str, checks: Result<Vec<Check>>) -> Line {
    match checks {
        Ok(c) => {
            let passed = !c.is_empty() && selftest::all_passed(&c);
            for x in &c {
                println!("    {x}");
            }
            let detail = match worst(&c) {
                Some(w) => format!("{} checks, tightest: {}", c.len(), w),
                None => "no checks ran".into(),
            };
            Line { id, title, passed, detail }
        }
        Err(e) => Line { id, title, passed: false, detail: format!("error: {e}") },
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criteria_1_2(fx: &Fixture, tols: &Tolerances) -> (Line, Line) {
    let t0 = Instant::now();
    let tr = match sweep_range(SweepParam::Mu, 1.0, 3.0, 1e-2, Method::Both, None, &fx.params, &fx.seed, tols) {
        Ok(tr) => tr,
        Err(e) => {
            let fail = |id, title| Line { id, title, passed: false, detail: format!("sweep failed: {e}") };
            return (fail(1, C1), fail(2, C2));
        }
    };
    let mut problems = Vec::new();
    if let Some(f) = tr.frontier() {
        problems.push(format!("sweep stopped at mu = {}: {}", f.value, f.message));
    }
    if tr.deviation.len() != 201 {
        problems.push(format!("{} paired samples instead of 201", tr.deviation.len()));
    }
    let dev = tr.max_deviation().unwrap_or(f64::INFINITY);
    let c1 = Line {
        id: 1,
        title: C1,
        passed: problems.is_empty() && dev < AGREEMENT,
        detail: if problems.is_empty() {
            format!("max |alpha_ode - alpha_resolve| = {dev:.3e} (need < {AGREEMENT:e}); {:.1} s", t0.elapsed().as_secs_f64())
        } else {
            problems.join("; ")
        },
    };
    let d2: Vec<(f64, f64)> = [&tr.ode, &tr.resolve].into_iter().flatten().flat_map(|s| second_differences(&s.samples)).collect();
    let med = median(d2.iter().map(|x| x.1).collect());
    let near: f64 = d2.iter().filter(|x| (1.9 - 1e-9..=2.1 + 1e-9).contains(&x.0)).map(|x| x.1).fold(0.0, f64::max);
    let c2 = Line {
        id: 2,
        title: C2,
        passed: problems.is_empty() && !d2.is_empty() && near <= KINK_FACTOR * med,
        detail: format!(
            "max second difference on [1.9, 2.1] = {near:.3e}, median on [1, 3] = {med:.3e}, ratio {:.2} (need <= {KINK_FACTOR})",
            near / med
        ),
    };
    (c1, c2)
}

fn solved(fx: &Fixture, tols: &Tolerances) -> Result<RhpSolution> {
    let s = fx.solve(tols)?;
    RhpSolution::new(build_contour(&s.alphas, fx.params.mu)?, fx.params, QUAD_TOL)
}

fn detect_line(label: &str, fx: &Fixture, seeds: BTreeMap<u32, BranchpointSet>, want: u32, tols: &Tolerances) -> (bool, String) {
    match detect_genus(&fx.params, &seeds, tols, &SignOptions::default()) {
        Ok(d) => {
            let ok = d.genus == Some(want);
            let rejected: Vec<String> = d
                .candidates
                .iter()
                .filter(|c| Some(c.genus) != d.genus)
                .map(|c| format!("genus {} rejected", c.genus))
                .collect();
            println!("    {} {label}: genus {:?} {}", if ok { "ok  " } else { "FAIL" }, d.genus, rejected.join(", "));
            (ok, format!("{label} -> {}", d.genus.map_or("none".into(), |g| g.to_string())))
        }
        Err(e) => (false, format!("{label}: {e}")),
    }
}

fn criterion_7(pre: &Fixture, post: &Fixture, tols: &Tolerances) -> Line {
    let mut results = vec![detect_line(
        "pre-break mu = 2",
        pre,
        BTreeMap::from([(0, pre.seed.clone()), (2, post.seed.clone())]),
        0,
        tols,
    )];
    for mu in [1.95, 2.0, 2.05] {
        results.push(match post.at_mu(mu) {
            Ok(fx) => detect_line(
                &format!("post-break mu = {mu}"),
                &fx,
                BTreeMap::from([(0, fixtures::post_break_genus_zero_seed()), (2, post.seed.clone())]),
                2,
                tols,
            ),
            Err(e) => (false, e.to_string()),
        });
    }
    Line {
        id: 7,
        title: "genus detection and preservation",
        passed: results.iter().all(|r| r.0),
        detail: results.into_iter().map(|r| r.1).collect::<Vec<_>>().join(", "),
    }
}

fn main() {
    let tols = Tolerances::default();
    let oracle = selftest::oracle_tolerances();
    let pre = fixtures::pre_break();
    let post = fixtures::post_break();
    println!(
        "fixtures: pre-break (x, t, mu) = ({}, {}, {}), post-break (x, t, mu) = ({}, {}, {})",
        pre.params.x, pre.params.t, pre.params.mu, post.params.x, post.params.t, post.params.mu
    );
    let mut lines = Vec::new();

    let (c1, c2) = criteria_1_2(&post, &tols);
    lines.push(c1);
    lines.push(c2);

    let c3 = (|| {
        let mut v = Vec::new();
        for fx in [&pre, &post] {
            let s = fx.solve(&oracle)?;
            v.extend(selftest::quadrature_oracles(fx.name, &s.alphas, fx.params.mu, QUAD_TOL)?);
        }
        Ok(v)
    })();
    lines.push(from_checks(3, "quadrature oracles (relative 1e-9)", c3));

    let c4 = (|| {
        let mut v = selftest::derivative_oracles(pre.name, &pre, &oracle)?;
        v.extend(selftest::derivative_oracles(post.name, &post, &oracle)?);
        Ok(v)
    })();
    lines.push(from_checks(4, "derivative formulas vs central differences (order >= 1.9)", c4));

    let c5 = (|| {
        let mut v = selftest::rhp_residuals(pre.name, &solved(&pre, &oracle)?)?;
        v.extend(selftest::rhp_residuals(post.name, &solved(&post, &oracle)?)?);
        Ok(v)
    })();
    lines.push(from_checks(5, "RHP jump residuals and determinant form", c5));

    let c6 = (|| {
        let mut v = selftest::jacobian_diagonality(pre.name, &pre, &oracle)?;
        v.extend(selftest::jacobian_diagonality(post.name, &post, &oracle)?);
        Ok(v)
    })();
    lines.push(from_checks(6, "Jacobian diagonality (ratio < 1e-6)", c6));

    lines.push(criterion_7(&pre, &post, &tols));

    let c8 = (|| {
        let s = post.solve(&oracle)?;
        let mut v = Vec::new();
        for mu in [1.5, 2.0, 2.5] {
            let p = post.at_mu(mu)?.params;
            v.extend(selftest::pinched_loop_derivatives(&format!("post-break mu = {mu}"), &s.alphas, &p, QUAD_TOL)?);
        }
        Ok(v)
    })();
    lines.push(from_checks(8, "mu-derivatives of loop integrals", c8));

    println!();
    lines.sort_by_key(|l| l.id);
    for l in &lines {
        println!("criterion {} {}: {} -- {}", l.id, if l.passed { "PASS" } else { "FAIL" }, l.title, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
