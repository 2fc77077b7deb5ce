//! Oracle suites: closed-form loop integrals, finite-difference checks of
//! every derivative formula, jump relations of `h`, diagonality of the
//! modulation Jacobian, and the mu-independence of the pinched-loop moments.
//!
//! Each suite returns plain [`Check`] records so the same code drives the
//! `selftest` command and the test targets.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::continuation::{fd_dalpha, rates, SweepParam};
use crate::contour::{build_contour, ContourOptions, ContourSystem, LoopKind, build_contour_with};
use crate::error::Result;
use crate::fixtures::Fixture;
use crate::modulation::{evaluate, newton_solve};
use crate::params::{ProblemParams, Tolerances};
use crate::quadrature::{integrate_family, integrate_loop, IntegralSpec, Kernel, Weight};
use crate::radical::BranchpointSet;
use crate::rhp::RhpSolution;
use crate::scattering::{NlsScattering, ZeroScattering};

type C64 = Complex64;

const I2PI: C64 = C64::new(0.0, 2.0 * PI);

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `true` when `value` must stay below `limit`, `false` for a lower bound.
    pub upper: bool,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, upper: true, passed: value < limit }
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, upper: false, passed: value >= limit }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = if self.upper { "<" } else { ">=" };
        let tag = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{tag} {}: {:.3e} (need {op} {:e})", self.name, self.value, self.limit)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Worst check of a suite, as a ratio to its limit.
pub fn worst(checks: &[Check]) -> Option<&Check> {
    let badness = |c: &Check| if c.upper { c.value / c.limit } else { c.limit / c.value.max(f64::MIN_POSITIVE) };
    checks.iter().max_by(|a, b| badness(a).total_cmp(&badness(b)).then(std::cmp::Ordering::Greater))
}

/// Tolerances used by the suites: tighter than the defaults so that the
/// finite-difference noise floor stays below the `δ^2` truncation terms.
pub fn oracle_tolerances() -> Tolerances {
    Tolerances { newton: 1e-12, quad: 1e-14, ..Tolerances::default() }
}

/// Coefficients `e_k` of `prod_i (1 - a_i/z)^{-1/2} = sum_k e_k z^{-k}` over
/// all roots, `k = 0..=kmax`.
fn inverse_sqrt_series(roots: &[C64], kmax: usize) -> Vec<C64> {
    // log of the product is (1/2) sum_k p_k / (k z^k); exponentiate term by term.
    let p: Vec<C64> = (0..=kmax).map(|k| roots.iter().map(|a| a.powu(k as u32)).sum()).collect();
    let mut e = vec![C64::new(0.0, 0.0); kmax + 1];
    e[0] = C64::new(1.0, 0.0);
    for n in 1..=kmax {
        // n e_n = sum_{k=1..n} (k * (1/2) p_k / k) e_{n-k}
        let s: C64 = (1..=n).map(|k| 0.5 * p[k] * e[n - k]).sum();
        e[n] = s / n as f64;
    }
    e
}

/// Coefficients (ascending) of `prod_i (z - a_i)`.
fn root_polynomial(roots: &[C64]) -> Vec<C64> {
    let mut c = vec![C64::new(1.0, 0.0)];
    for a in roots {
        let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
        for (k, v) in c.iter().enumerate() {
            next[k + 1] += v;
            next[k] -= a * v;
        }
        c = next;
    }
    c
}

fn rel(err: C64, exact: C64) -> f64 {
    err.norm() / exact.norm().max(1.0)
}

/// Weight-one loop integrals against closed forms.
///
/// Big loop: `∮ ζ^n / R = -2πi e_{n-2N}` (residue at infinity, zero for
/// `n < 2N`), `∮ 1/((ζ-z)R)` equal to `-2πi/R(z)` outside and `0` inside,
/// and the squared Cauchy kernel `2πi R'(z)/R(z)^2` outside. Every loop:
/// `∮ d(ζ^k R)/dζ = 0` written as a combination of power moments.
pub fn quadrature_oracles(label: &str, alphas: &BranchpointSet, mu: f64, tol: f64) -> Result<Vec<Check>> {
    const LIMIT: f64 = 1e-9;
    let cs = build_contour(alphas, mu)?;
    let f = ZeroScattering { mu };
    let n2 = 2 * cs.order();
    let roots = cs.alphas.full();
    let e = inverse_sqrt_series(&roots, 3);
    let mut out = Vec::new();

    let powers: Vec<IntegralSpec> =
        (0..=n2 + 3).map(|n| IntegralSpec::new(LoopKind::Big, Kernel::Power(n as u32), Weight::One)).collect();
    let v = integrate_family(&powers, &cs, &f, tol)?;
    let worst_power = (0..=n2 + 3)
        .map(|n| {
            let exact = if n < n2 { C64::new(0.0, 0.0) } else { -I2PI * e[n - n2] };
            rel(v[n] - exact, exact)
        })
        .fold(0.0, f64::max);
    out.push(Check::below(format!("{label}: big-loop power moments vs residue at infinity"), worst_power, LIMIT));

    let far = [C64::new(2.7, 0.9), C64::new(-2.4, 1.3), C64::new(0.3, 2.9), C64::new(1.1, -2.6)];
    let outside: Vec<C64> = far.iter().copied().filter(|z| !cs.big.contains(*z)).collect();
    let inside: Vec<C64> = roots.clone();
    let mut specs = Vec::new();
    for z in &outside {
        specs.push(IntegralSpec::new(LoopKind::Big, Kernel::Cauchy(*z), Weight::One));
        specs.push(IntegralSpec::new(LoopKind::Big, Kernel::CauchySquared(*z), Weight::One));
    }
    for z in &inside {
        specs.push(IntegralSpec::new(LoopKind::Big, Kernel::Cauchy(*z), Weight::One));
    }
    let v = integrate_family(&specs, &cs, &f, tol)?;
    let (mut w_out, mut w_sq, mut w_in) = (0.0f64, 0.0f64, 0.0f64);
    for (i, z) in outside.iter().enumerate() {
        let r = cs.radical.eval(*z)?;
        let exact = -I2PI / r;
        w_out = w_out.max(rel(v[2 * i] - exact, exact));
        let exact_sq = I2PI * cs.radical.log_derivative(*z) / r;
        w_sq = w_sq.max(rel(v[2 * i + 1] - exact_sq, exact_sq));
    }
    for (i, _) in inside.iter().enumerate() {
        w_in = w_in.max(v[2 * outside.len() + i].norm());
    }
    out.push(Check::below(format!("{label}: big-loop Cauchy integral outside the loop"), w_out, LIMIT));
    out.push(Check::below(format!("{label}: big-loop squared Cauchy integral outside the loop"), w_sq, LIMIT));
    out.push(Check::below(format!("{label}: big-loop Cauchy integral at the branchpoints (zero)"), w_in, LIMIT));

    // d/dζ (ζ^k R) = (k ζ^{k-1} P + ζ^k P'/2) / R with P = R^2.
    let poly = root_polynomial(&roots);
    let deg = poly.len() - 1;
    let dpoly: Vec<C64> = (1..=deg).map(|k| poly[k] * k as f64).collect();
    let mut loops = vec![LoopKind::Big];
    loops.extend(cs.row_loops());
    for kind in loops {
        let lp = cs.loop_by_kind(kind);
        let items: Vec<(Kernel, Weight)> = (0..=deg + 2).map(|n| (Kernel::Power(n as u32), Weight::One)).collect();
        let m = integrate_loop(lp, &items, &cs.radical, &f, tol)?;
        let mut worst_exact: f64 = 0.0;
        for k in 0..=2usize {
            let mut c = vec![C64::new(0.0, 0.0); deg + 3];
            if k > 0 {
                for (i, a) in poly.iter().enumerate() {
                    c[i + k - 1] += a * k as f64;
                }
            }
            for (i, a) in dpoly.iter().enumerate() {
                c[i + k] += 0.5 * a;
            }
            let s: C64 = c.iter().zip(&m).map(|(a, b)| a * b).sum();
            let scale: f64 = c.iter().zip(&m).map(|(a, b)| (a * b).norm()).sum::<f64>().max(1.0);
            worst_exact = worst_exact.max(s.norm() / scale);
        }
        out.push(Check::below(format!("{label}: {kind:?} loop, exact derivatives integrate to zero"), worst_exact, LIMIT));
    }
    Ok(out)
}

/// Step pair for the convergence-order checks.
pub const FD_STEPS: [f64; 2] = [1e-3, 1e-4];
/// Observed order required from the step pair.
pub const MIN_ORDER: f64 = 1.9;

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_diff_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Observed order `log(e1/e2) / log(δ1/δ2)`, plus an absolute bound on the
/// error at the smaller step when one is given.
fn order_checks(name: &str, errs: [f64; 2], abs_limit: Option<f64>) -> Vec<Check> {
    let order = (errs[0] / errs[1]).log10() / (FD_STEPS[0] / FD_STEPS[1]).log10();
    let mut out = Vec::new();
    if let Some(limit) = abs_limit {
        out.push(Check::below(format!("{name}: central-difference error at step {:e}", FD_STEPS[1]), errs[1], limit));
    }
    out.push(Check::above(format!("{name}: observed convergence order"), order, MIN_ORDER));
    out
}

/// Finite-difference oracles for `dalpha_d{mu,x,t}`, `dK/dmu` and
/// `(W_mu, Omega_mu)` at a solved configuration.
pub fn derivative_oracles(label: &str, fx: &Fixture, tols: &Tolerances) -> Result<Vec<Check>> {
    let sol = newton_solve(&fx.seed, &fx.params, tols)?;
    let alphas = sol.alphas;
    let p = fx.params;
    let qt = crate::modulation::solver_quad_tol(tols);
    let mut out = Vec::new();

    for param in [SweepParam::Mu, SweepParam::X, SweepParam::T] {
        let analytic = rates(&alphas, &p, param, qt)?.dalpha;
        let mut errs = [0.0; 2];
        for (i, d) in FD_STEPS.iter().enumerate() {
            errs[i] = max_diff(&fd_dalpha(&alphas, &p, param, *d, tols)?, &analytic);
        }
        let abs = (param == SweepParam::Mu).then_some(1e-6);
        out.extend(order_checks(&format!("{label}: dalpha/d{}", param.name()), errs, abs));
    }

    let cs = build_contour(&alphas, p.mu)?;
    let sol = RhpSolution::new(cs, p, qt)?;
    let up = alphas.upper().to_vec();
    let dk: Vec<C64> = up.iter().map(|z| sol.eval_dk_dmu(*z)).collect::<Result<_>>()?;
    let (dw, dom) = sol.solve_constants_mu()?;
    let mut errs_k = [0.0; 2];
    let mut errs_c = [0.0; 2];
    for (i, d) in FD_STEPS.iter().enumerate() {
        let side = |s: f64| -> Result<(Vec<C64>, Vec<f64>, Vec<f64>)> {
            let q = p.with_mu(p.mu + s * d);
            let k = evaluate(&alphas, &q, qt)?.k;
            let r = RhpSolution::new(build_contour(&alphas, q.mu)?, q, qt)?;
            Ok((k, r.w, r.omega))
        };
        let (kp, wp, op) = side(1.0)?;
        let (km, wm, om) = side(-1.0)?;
        let fd_k: Vec<C64> = kp.iter().zip(&km).map(|(a, b)| (a - b) / (2.0 * d)).collect();
        errs_k[i] = max_diff(&fd_k, &dk);
        let fd_w: Vec<f64> = wp.iter().zip(&wm).map(|(a, b)| (a - b) / (2.0 * d)).collect();
        let fd_o: Vec<f64> = op.iter().zip(&om).map(|(a, b)| (a - b) / (2.0 * d)).collect();
        errs_c[i] = max_diff_real(&fd_w, &dw).max(max_diff_real(&fd_o, &dom));
    }
    out.extend(order_checks(&format!("{label}: dK/dmu at the branchpoints"), errs_k, None));
    if p.order() > 0 {
        out.extend(order_checks(&format!("{label}: dW/dmu, dOmega/dmu"), errs_c, None));
    }
    Ok(out)
}

/// Richardson-extrapolated `r(0)` from `r(e)`, `r(e/2)`, `r(e/4)` with
/// `r(e) = r(0) + a e + b e^2 + ...`.
fn richardson(r: [C64; 3]) -> C64 {
    let a = 2.0 * r[1] - r[0];
    let b = 2.0 * r[2] - r[1];
    (4.0 * b - a) / 3.0
}

/// Left unit normal of the oriented segment `a -> b`.
fn left_normal(a: C64, b: C64) -> C64 {
    let d = b - a;
    C64::new(-d.im, d.re) / d.norm()
}

/// Jump relations of `h` on the drawn arcs, the determinant form of `h`
/// against the loop formula, and deformation invariance.
pub fn rhp_residuals(label: &str, sol: &RhpSolution) -> Result<Vec<Check>> {
    let cs = &sol.contour;
    let n = cs.order();
    let mut out = Vec::new();
    let scale = cs.arc_scale();
    let eps = 1e-3 * scale;

    let jump = |pts: &[C64], combine: &dyn Fn(C64, C64) -> C64| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in pts.windows(2) {
            for s in [0.25, 0.5, 0.75] {
                let z = w[0] + (w[1] - w[0]) * s;
                if z.im.abs() < 4.0 * eps {
                    continue;
                }
                let nrm = left_normal(w[0], w[1]);
                let mut r = [C64::new(0.0, 0.0); 3];
                for (k, e) in [eps, eps / 2.0, eps / 4.0].iter().enumerate() {
                    r[k] = combine(sol.eval_h(z + nrm * *e)?, sol.eval_h(z - nrm * *e)?);
                }
                worst = worst.max(richardson(r).norm());
            }
        }
        Ok(worst)
    };
    for j in 0..=n {
        let wj = if j == 0 { 0.0 } else { sol.w[j - 1] };
        let v = jump(&cs.main_arcs[j][0].points, &|a, b| a + b - 2.0 * wj)?;
        let what = if j == 0 { "main arc 0, |h+ + h-| with W_0 = 0".to_string() } else { format!("main arc {j}, |h+ + h- - 2W_{j}|") };
        out.push(Check::below(format!("{label}: {what}"), v, 1e-6));
    }
    for j in 1..=n {
        let oj = sol.omega[j - 1];
        let v = jump(&cs.comp_arcs[j - 1][0].points, &|a, b| a - b - 2.0 * oj)?;
        out.push(Check::below(format!("{label}: complementary arc {j}, |h+ - h- - 2Omega_{j}|"), v, 1e-6));
    }

    // Loop formula h = -R/(2πi) [∮_big f/((ζ-z)R) + sum W_j ∮_{m_j} + sum Omega_j ∮_{c_j}],
    // valid as written inside the big loop and outside the small ones.
    let f = NlsScattering::new(&sol.params);
    let rows = cs.row_loops();
    let clear = 0.1 * cs.small_offset.min(cs.big_offset - cs.small_offset).abs();
    let mut pts = Vec::new();
    for i in 0..80 {
        for k in 1..40 {
            let z = C64::new(-2.0 + 4.0 * i as f64 / 79.0, 2.0 * k as f64 / 40.0);
            let free = rows.iter().all(|r| {
                let lp = cs.loop_by_kind(*r);
                !lp.contains(z) && lp.distance(z) > clear
            });
            if free && cs.big.contains(z) && cs.big.distance(z) > clear {
                pts.push(z);
            }
        }
    }
    let mut worst_det: f64 = 0.0;
    for z in pts.iter().step_by((pts.len() / 6).max(1)) {
        let mut specs = vec![IntegralSpec::new(LoopKind::Big, Kernel::Cauchy(*z), Weight::F)];
        for k in &rows {
            specs.push(IntegralSpec::new(*k, Kernel::Cauchy(*z), Weight::One));
        }
        let v = integrate_family(&specs, cs, &f, sol.tol)?;
        let consts = sol.w.iter().chain(&sol.omega);
        let bracket: C64 = v[0] + consts.zip(&v[1..]).map(|(c, x)| *c * x).sum::<C64>();
        let loop_h = -cs.radical.eval(*z)? * bracket / I2PI;
        let h = sol.eval_h(*z)?;
        worst_det = worst_det.max((h - loop_h).norm() / h.norm().max(1e-300));
    }
    if pts.is_empty() {
        worst_det = f64::INFINITY;
    }
    out.push(Check::below(format!("{label}: h = R K / D against the loop formula (relative)"), worst_det, 1e-8));

    // The same h from a contour with wider loops.
    let wide = ContourOptions { inflate: 1.5, ..ContourOptions::default() };
    let cs2 = build_contour_with(&cs.alphas, cs.mu, &wide)?;
    let sol2 = RhpSolution::new(cs2, sol.params, sol.tol)?;
    let probe: Vec<C64> = [C64::new(0.35, 0.45), C64::new(-0.2, 1.6), C64::new(1.6, 0.6)]
        .into_iter()
        .filter(|z| cs.big.distance(*z) > 0.02 && sol2.contour.big.distance(*z) > 0.02)
        .collect();
    let mut worst_def: f64 = max_diff_real(&sol.w, &sol2.w).max(max_diff_real(&sol.omega, &sol2.omega));
    for z in &probe {
        worst_def = worst_def.max((sol.eval_h(*z)? - sol2.eval_h(*z)?).norm());
    }
    out.push(Check::below(format!("{label}: W, Omega and h unchanged by widening the loops"), worst_def, 1e-8));
    Ok(out)
}

/// `(∂K(α_j)/∂α_l, ∂K(α_j)/∂conj(α_l))` by central differences in the real
/// and imaginary directions (each branchpoint moves with its conjugate).
pub fn fd_jacobian(alphas: &BranchpointSet, p: &ProblemParams, h: f64, qt: f64) -> Result<Vec<Vec<(C64, C64)>>> {
    let up = alphas.upper().to_vec();
    let m = up.len();
    let mut jac = vec![vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); m]; m];
    for l in 0..m {
        let mut dir = [vec![C64::new(0.0, 0.0); m], vec![C64::new(0.0, 0.0); m]];
        for (k, step) in [C64::new(h, 0.0), C64::new(0.0, h)].iter().enumerate() {
            let shifted = |s: f64| -> Result<Vec<C64>> {
                let mut v = up.clone();
                v[l] += step * s;
                Ok(evaluate(&BranchpointSet::new(v)?, p, qt)?.k)
            };
            let (a, b) = (shifted(1.0)?, shifted(-1.0)?);
            dir[k] = a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect();
        }
        for j in 0..m {
            // Wirtinger derivatives from the two directional derivatives.
            let (a, b) = (dir[0][j], dir[1][j]);
            let i = C64::new(0.0, 1.0);
            jac[j][l] = ((a - i * b) * 0.5, (a + i * b) * 0.5);
        }
    }
    Ok(jac)
}

/// Off-diagonal to diagonal ratio of the full FD Jacobian at a solution.
pub fn jacobian_diagonality(label: &str, fx: &Fixture, tols: &Tolerances) -> Result<Vec<Check>> {
    let sol = newton_solve(&fx.seed, &fx.params, tols)?;
    let qt = crate::modulation::solver_quad_tol(tols);
    let jac = fd_jacobian(&sol.alphas, &fx.params, 1e-5, qt)?;
    let m = jac.len();
    let diag_min = (0..m).map(|j| jac[j][j].0.norm()).fold(f64::INFINITY, f64::min);
    let mut off: f64 = 0.0;
    for (j, row) in jac.iter().enumerate() {
        for (l, (d, dbar)) in row.iter().enumerate() {
            if l != j {
                off = off.max(d.norm());
            }
            off = off.max(dbar.norm());
        }
    }
    let analytic = max_diff(&(0..m).map(|j| jac[j][j].0).collect::<Vec<_>>(), &sol.jacobian_diag);
    Ok(vec![
        Check::below(format!("{label}: FD Jacobian off-diagonal / diagonal"), off / diag_min, 1e-6),
        Check::below(format!("{label}: FD diagonal vs analytic diagonal (relative)"), analytic / diag_min, 1e-6),
    ])
}

/// mu-derivatives of the loop integrals at fixed branchpoints, the big loop
/// being re-pinched at `mu/2` for every `mu`.
pub fn pinched_loop_derivatives(label: &str, alphas: &BranchpointSet, p: &ProblemParams, tol: f64) -> Result<Vec<Check>> {
    let delta = 1e-4;
    let up = alphas.upper().to_vec();
    let row_specs = |cs: &ContourSystem| -> Vec<IntegralSpec> {
        let mut v = Vec::new();
        for k in cs.row_loops() {
            for n in 0..4 {
                v.push(IntegralSpec::new(k, Kernel::Power(n), Weight::One));
            }
            for z in &up {
                v.push(IntegralSpec::new(k, Kernel::Cauchy(*z), Weight::One));
            }
        }
        v
    };
    let big_specs = |w: Weight| -> Vec<IntegralSpec> {
        let mut v: Vec<IntegralSpec> = (0..4).map(|n| IntegralSpec::new(LoopKind::Big, Kernel::Power(n), w)).collect();
        v.extend(up.iter().map(|z| IntegralSpec::new(LoopKind::Big, Kernel::Cauchy(*z), w)));
        v
    };
    let at = |mu: f64, w: Weight| -> Result<(Vec<C64>, Vec<C64>)> {
        let q = p.with_mu(mu);
        let cs = build_contour(alphas, mu)?;
        let f = NlsScattering::new(&q);
        Ok((integrate_family(&big_specs(w), &cs, &f, tol)?, integrate_family(&row_specs(&cs), &cs, &f, tol)?))
    };
    let (direct, _) = at(p.mu, Weight::FMu)?;
    let (bp, rp) = at(p.mu + delta, Weight::F)?;
    let (bm, rm) = at(p.mu - delta, Weight::F)?;
    let fd: Vec<C64> = bp.iter().zip(&bm).map(|(a, b)| (a - b) / (2.0 * delta)).collect();
    let big_err = max_diff(&fd, &direct);
    let small = rp.iter().zip(&rm).map(|(a, b)| ((a - b) / (2.0 * delta)).norm()).fold(0.0, f64::max);
    let mut out = vec![Check::below(
        format!("{label}: d/dmu of pinched big-loop integrals vs integrals of f_mu"),
        big_err,
        1e-6,
    )];
    if !rp.is_empty() {
        out.push(Check::below(format!("{label}: d/dmu of small-loop integrals"), small, 1e-9));
    }
    Ok(out)
}
