//! Damped Newton iteration for the modulation system `K(alpha_j) = 0`.
//!
//! Only the upper representatives are unknowns; the conjugate equations hold
//! by Schwarz symmetry. The Jacobian of `(K(alpha_0), K(alpha_2), ...)` is
//! diagonal at solutions, with entries `(D/2πi) ∮_cw f'/((ζ-α_j)R)`, so each
//! branchpoint gets its own scalar Newton update.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{build_contour, ContourSystem};
use crate::error::{Result, RhpError};
use crate::params::{ProblemParams, Tolerances};
use crate::quadrature::Weight;
use crate::radical::BranchpointSet;
use crate::rhp::{assemble, Request};
use crate::scattering::NlsScattering;

type C64 = Complex64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub alphas: BranchpointSet,
    /// `|K(alpha_j)|` per upper branchpoint.
    pub residuals: Vec<f64>,
    pub jacobian_diag: Vec<C64>,
    pub d: C64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Residuals and Jacobian diagonal at one configuration.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub k: Vec<C64>,
    pub jac: Vec<C64>,
    pub d: C64,
    pub contour: ContourSystem,
}

/// Quadrature tolerance used inside the solver for a given `tol_K`.
pub fn solver_quad_tol(tols: &Tolerances) -> f64 {
    tols.quad.min(1e-2 * tols.newton)
}

/// `K(alpha_j)` and `∂K(alpha_j)/∂alpha_j` for every upper branchpoint.
pub fn evaluate(alphas: &BranchpointSet, p: &ProblemParams, quad_tol: f64) -> Result<Evaluation> {
    let cs = build_contour(alphas, p.mu)?;
    evaluate_on(cs, p, quad_tol)
}

pub fn evaluate_on(cs: ContourSystem, p: &ProblemParams, quad_tol: f64) -> Result<Evaluation> {
    let f = NlsScattering::new(p);
    let up = cs.alphas.upper().to_vec();
    let mut reqs = Vec::with_capacity(2 * up.len());
    for z in &up {
        reqs.push(Request::Det { z: *z, weight: Weight::F, squared: false });
    }
    for z in &up {
        reqs.push(Request::Big { z: *z, weight: Weight::FPrime });
    }
    let asm = assemble(&cs, &f, &[], &reqs, quad_tol, None)?;
    let d = if cs.order() == 0 { C64::new(1.0, 0.0) } else { asm.d };
    let m = up.len();
    Ok(Evaluation {
        k: asm.values[..m].to_vec(),
        jac: asm.values[m..].iter().map(|v| d * v).collect(),
        d,
        contour: cs,
    })
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Damped Newton solve from `guess`.
pub fn newton_solve(guess: &BranchpointSet, p: &ProblemParams, tols: &Tolerances) -> Result<SolveReport> {
    if guess.genus() != p.genus {
        return Err(RhpError::InvalidBranchpoints(format!(
            "seed has genus {} but the problem asks for genus {}",
            guess.genus(),
            p.genus
        )));
    }
    let qt = solver_quad_tol(tols);
    let mut alphas = guess.clone();
    let mut ev = evaluate(&alphas, p, qt)?;
    let mut res = max_norm(&ev.k);
    for it in 0..=tols.max_iterations {
        if res < tols.newton {
            return Ok(report(alphas, &ev, it, true));
        }
        if it == tols.max_iterations {
            break;
        }
        let floor = tols.degeneracy * ev.d.norm();
        if let Some((j, jv)) = ev.jac.iter().enumerate().find(|(_, v)| !(v.norm() > floor)) {
            return Err(RhpError::NearBreak(format!(
                "Jacobian entry {} has magnitude {:.3e} at {:?}",
                2 * j,
                jv.norm(),
                alphas.upper()
            )));
        }
        let step: Vec<C64> = ev.k.iter().zip(&ev.jac).map(|(k, j)| -k / j).collect();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=tols.max_halvings {
            let trial: Vec<C64> = alphas.upper().iter().zip(&step).map(|(a, s)| a + lambda * s).collect();
            if let Ok(b) = BranchpointSet::new(trial) {
                if let Ok(e) = evaluate(&b, p, qt) {
                    let r = max_norm(&e.k);
                    if r < res {
                        accepted = Some((b, e, r));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((b, e, r)) => {
                log::debug!("newton {it}: residual {res:.3e} -> {r:.3e} (lambda {lambda})");
                alphas = b;
                ev = e;
                res = r;
            }
            None => {
                return Err(RhpError::Divergence { iterations: it + 1, residual: res });
            }
        }
    }
    Err(RhpError::Divergence { iterations: tols.max_iterations, residual: res })
}

fn report(alphas: BranchpointSet, ev: &Evaluation, iterations: usize, converged: bool) -> SolveReport {
    SolveReport {
        alphas,
        residuals: ev.k.iter().map(|k| k.norm()).collect(),
        jacobian_diag: ev.jac.clone(),
        d: ev.d,
        iterations,
        converged,
    }
}

/// Validated seeds for a genus.
pub fn seed_from_config(genus: u32, seeds: &[[f64; 2]]) -> Result<BranchpointSet> {
    BranchpointSet::for_genus(genus, seeds.iter().map(|s| C64::new(s[0], s[1])).collect())
}

/// Axis-aligned search box in the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

/// Genus-0 seed minimising `|K(alpha)|` over an `n x n` grid of cell centres.
pub fn grid_refine_seed(p: &ProblemParams, bx: &SearchBox, n: usize, tols: &Tolerances) -> Result<BranchpointSet> {
    if p.genus != 0 {
        return Err(RhpError::InvalidParams("grid seeding is for genus 0 only".into()));
    }
    if !(bx.re[1] > bx.re[0]) || !(bx.im[1] > bx.im[0]) || bx.im[0] < 0.0 || n == 0 {
        return Err(RhpError::InvalidParams("degenerate search box".into()));
    }
    let qt = tols.quad.max(1e-8);
    let mut best: Option<(f64, C64)> = None;
    for i in 0..n {
        for j in 0..n {
            let z = C64::new(
                bx.re[0] + (bx.re[1] - bx.re[0]) * (i as f64 + 0.5) / n as f64,
                bx.im[0] + (bx.im[1] - bx.im[0]) * (j as f64 + 0.5) / n as f64,
            );
            let Ok(b) = BranchpointSet::new(vec![z]) else { continue };
            let Ok(e) = evaluate(&b, p, qt) else { continue };
            let r = e.k[0].norm();
            if r.is_finite() && best.map_or(true, |(v, _)| r < v) {
                best = Some((r, z));
            }
        }
    }
    let (_, z) = best.ok_or_else(|| RhpError::InvalidParams("no admissible point in the search box".into()))?;
    BranchpointSet::new(vec![z])
}
