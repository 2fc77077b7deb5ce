//! Assembly and evaluation of the explicit solution `h`, the determinant
//! function `K`, and the constants `W_j`, `Omega_j`.
//!
//! With counterclockwise loops the solution reads
//!
//! ```text
//! h(z) = -R(z)/(2 pi i) [ ∮_big f/((ζ-z)R) + Σ W_j ∮_{m,j} 1/((ζ-z)R) + Σ Ω_j ∮_{c,j} 1/((ζ-z)R) ]
//!      = R(z) K(z) / D,
//! ```
//!
//! where `D = det A`, `A[r][n] = ∮_r ζ^n / R` over the rows `m,1..m,N, c,1..c,N`
//! and `n = 0..2N-1`, and `K = -det(M)/(2 pi i)` for the bordered matrix `M`
//! whose extra column holds the Cauchy integrals and whose extra row holds
//! the `f` moments. Replacing the `f` row by `f_mu`, `f_x = -z` or
//! `f_t = -2 z^2` gives the parameter derivatives of `K`.
//!
//! `K` itself is evaluated with the loops as built, so at a branchpoint the
//! neighbouring small loops enclose the evaluation point. `h` is evaluated
//! for points anywhere off the loops by removing the residue picked up from
//! every loop that encloses the point.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::contour::{ContourSystem, LoopKind, Sheet};
use crate::error::{Result, RhpError};
use crate::linalg;
use crate::params::{ProblemParams, Side};
use crate::quadrature::{integrate_family_mesh, IntegralSpec, Kernel, Mesh, Weight};
use crate::scattering::{NlsScattering, ScatteringFunction};

type C64 = Complex64;

const TWO_PI_I: C64 = C64::new(0.0, 2.0 * PI);

/// One determinant-type evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Request {
    /// `K`-type determinant with the given weight row, Cauchy (or squared
    /// Cauchy) column at `z`.
    Det { z: C64, weight: Weight, squared: bool },
    /// Only the big-loop integral `-(1/2 pi i) ∮ w/((ζ-z)R)`.
    Big { z: C64, weight: Weight },
}

/// Output of one batched assembly.
#[derive(Clone, Debug)]
pub struct Assembly {
    /// Moment matrix rows `m,1..m,N, c,1..c,N`, columns `ζ^0..ζ^{2N-1}`.
    pub a: Vec<Vec<C64>>,
    pub d: C64,
    /// Big-loop moments per weight.
    pub moments: BTreeMap<Weight, Vec<C64>>,
    /// One value per request.
    pub values: Vec<C64>,
    pub mesh: Mesh,
}

/// Evaluates the moment matrix, the requested weighted moments and the
/// requests in a single quadrature batch.
pub fn assemble(
    cs: &ContourSystem,
    f: &dyn ScatteringFunction,
    moment_weights: &[Weight],
    requests: &[Request],
    tol: f64,
    mesh: Option<&Mesh>,
) -> Result<Assembly> {
    let n2 = 2 * cs.order();
    let rows = cs.row_loops();
    let mut specs = Vec::new();
    for r in &rows {
        for n in 0..n2 {
            specs.push(IntegralSpec::new(*r, Kernel::Power(n as u32), Weight::One));
        }
    }
    let mut weights: Vec<Weight> = moment_weights.to_vec();
    for q in requests {
        if let Request::Det { weight, .. } = q {
            weights.push(*weight);
        }
    }
    weights.sort();
    weights.dedup();
    let mom_start = specs.len();
    for w in &weights {
        for n in 0..n2 {
            specs.push(IntegralSpec::new(LoopKind::Big, Kernel::Power(n as u32), *w));
        }
    }
    let req_start = specs.len();
    for q in requests {
        match *q {
            Request::Det { z, weight, squared } => {
                let k = if squared { Kernel::CauchySquared(z) } else { Kernel::Cauchy(z) };
                for r in &rows {
                    specs.push(IntegralSpec::new(*r, k, Weight::One));
                }
                specs.push(IntegralSpec::new(LoopKind::Big, k, weight));
            }
            Request::Big { z, weight } => {
                specs.push(IntegralSpec::new(LoopKind::Big, Kernel::Cauchy(z), weight));
            }
        }
    }
    let tol_each = tol;
    let (vals, used) = integrate_family_mesh(&specs, cs, f, tol_each, mesh)?;

    let a: Vec<Vec<C64>> = (0..n2).map(|r| vals[r * n2..(r + 1) * n2].to_vec()).collect();
    let d = linalg::det(&a);
    let mut moments = BTreeMap::new();
    for (k, w) in weights.iter().enumerate() {
        let s = mom_start + k * n2;
        moments.insert(*w, vals[s..s + n2].to_vec());
    }
    let mut values = Vec::with_capacity(requests.len());
    let mut pos = req_start;
    for q in requests {
        match *q {
            Request::Det { weight, .. } => {
                let col = &vals[pos..pos + n2 + 1];
                values.push(k_from_parts(&a, &moments[&weight], col));
                pos += n2 + 1;
            }
            Request::Big { .. } => {
                values.push(-vals[pos] / TWO_PI_I);
                pos += 1;
            }
        }
    }
    Ok(Assembly { a, d, moments, values, mesh: used })
}

/// `-det(M) / (2 pi i)` for the bordered matrix.
pub fn k_from_parts(a: &[Vec<C64>], weight_moments: &[C64], column: &[C64]) -> C64 {
    let n2 = a.len();
    let mut m: Vec<Vec<C64>> = a
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut v = row.clone();
            v.push(column[r]);
            v
        })
        .collect();
    let mut last = weight_moments.to_vec();
    last.push(column[n2]);
    m.push(last);
    -linalg::det(&m) / TWO_PI_I
}

/// Solves `A^T x = -b` for the constants attached to the rows of `A`.
pub fn solve_rows(a: &[Vec<C64>], b: &[C64]) -> Result<Vec<C64>> {
    let rhs: Vec<C64> = b.iter().map(|v| -v).collect();
    linalg::solve(&linalg::transpose(a), &rhs)
}

/// The solved scalar RHP at fixed branchpoints.
#[derive(Clone, Debug)]
pub struct RhpSolution {
    pub params: ProblemParams,
    pub contour: ContourSystem,
    /// `W_1..W_N` (`W_0 = 0` by normalisation).
    pub w: Vec<f64>,
    pub omega: Vec<f64>,
    pub d: C64,
    pub a: Vec<Vec<C64>>,
    pub f_moments: Vec<C64>,
    pub tol: f64,
    /// Largest discarded imaginary residue of the constants.
    pub imag_residue: f64,
    mesh: Option<Mesh>,
}

impl RhpSolution {
    pub fn new(cs: ContourSystem, params: ProblemParams, tol: f64) -> Result<Self> {
        Self::build(cs, params, tol, None, 1e-8)
    }

    /// Variant that replays a fixed quadrature mesh for the moments.
    pub fn with_mesh(cs: ContourSystem, params: ProblemParams, tol: f64, mesh: Mesh) -> Result<Self> {
        Self::build(cs, params, tol, Some(mesh), 1e-8)
    }

    pub fn build(
        cs: ContourSystem,
        params: ProblemParams,
        tol: f64,
        mesh: Option<Mesh>,
        realness: f64,
    ) -> Result<Self> {
        if (cs.mu - params.mu).abs() > 0.0 {
            return Err(RhpError::InvalidParams("contour and parameters disagree on mu".into()));
        }
        let f = NlsScattering::new(&params);
        let asm = assemble(&cs, &f, &[Weight::F], &[], tol, mesh.as_ref())?;
        let n = cs.order();
        if n > 0 && !(asm.d.norm() > 0.0) {
            return Err(RhpError::SingularSystem);
        }
        let b = asm.moments[&Weight::F].clone();
        let x = solve_rows(&asm.a, &b)?;
        let (consts, imag_residue) = realify(&x, realness, "W/Omega")?;
        Ok(Self {
            params,
            w: consts[..n].to_vec(),
            omega: consts[n..].to_vec(),
            d: asm.d,
            a: asm.a,
            f_moments: b,
            tol,
            imag_residue,
            contour: cs,
            mesh,
        })
    }

    pub fn order(&self) -> usize {
        self.contour.order()
    }

    fn scattering(&self) -> NlsScattering {
        NlsScattering::new(&self.params)
    }

    fn constants(&self) -> Vec<C64> {
        self.w.iter().chain(&self.omega).map(|v| C64::new(*v, 0.0)).collect()
    }

    /// Residuals of the moment equations with the stored (real) constants.
    pub fn moment_residuals(&self) -> Vec<f64> {
        let x = self.constants();
        (0..2 * self.order())
            .map(|n| {
                let s: C64 = self.a.iter().zip(&x).map(|(row, c)| row[n] * c).sum();
                (s + self.f_moments[n]).norm()
            })
            .collect()
    }

    fn run(&self, f: &dyn ScatteringFunction, weights: &[Weight], reqs: &[Request]) -> Result<Assembly> {
        assemble(&self.contour, f, weights, reqs, self.tol, self.mesh.as_ref())
    }

    /// `K(z)` with the loops as built.
    pub fn eval_k(&self, z: C64) -> Result<C64> {
        Ok(self.run(&self.scattering(), &[], &[Request::Det { z, weight: Weight::F, squared: false }])?.values[0])
    }

    /// `K'(z)` (squared Cauchy column).
    pub fn eval_k_prime(&self, z: C64) -> Result<C64> {
        Ok(self.run(&self.scattering(), &[], &[Request::Det { z, weight: Weight::F, squared: true }])?.values[0])
    }

    /// `∂K/∂p (z)` for `p` in `{mu, x, t}` selected by the weight.
    pub fn eval_dk(&self, z: C64, weight: Weight) -> Result<C64> {
        Ok(self.run(&self.scattering(), &[], &[Request::Det { z, weight, squared: false }])?.values[0])
    }

    pub fn eval_dk_dmu(&self, z: C64) -> Result<C64> {
        self.eval_dk(z, Weight::FMu)
    }

    /// `∂K(alpha_j)/∂alpha_j = (D/2πi) ∮_cw f'/((ζ-α_j)R)` for every upper branchpoint.
    pub fn jacobian_diag(&self) -> Result<Vec<C64>> {
        let reqs: Vec<Request> = self
            .contour
            .alphas
            .upper()
            .iter()
            .map(|z| Request::Big { z: *z, weight: Weight::FPrime })
            .collect();
        let asm = self.run(&self.scattering(), &[], &reqs)?;
        Ok(asm.values.iter().map(|v| self.d * v).collect())
    }

    /// `K(alpha_j)` for every upper branchpoint.
    pub fn residuals(&self) -> Result<Vec<C64>> {
        let reqs: Vec<Request> = self
            .contour
            .alphas
            .upper()
            .iter()
            .map(|z| Request::Det { z: *z, weight: Weight::F, squared: false })
            .collect();
        Ok(self.run(&self.scattering(), &[], &reqs)?.values)
    }

    /// `(∂W/∂p, ∂Omega/∂p)` from `A^T x = -(weighted moments)`.
    pub fn constants_derivative(&self, weight: Weight) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.order();
        if n == 0 {
            return Ok((Vec::new(), Vec::new()));
        }
        let asm = self.run(&self.scattering(), &[weight], &[])?;
        let x = solve_rows(&self.a, &asm.moments[&weight])?;
        let (v, _) = realify(&x, 1e-6, "derivative of W/Omega")?;
        Ok((v[..n].to_vec(), v[n..].to_vec()))
    }

    pub fn solve_constants_mu(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        self.constants_derivative(Weight::FMu)
    }

    /// `h(z)` for `z` strictly off the real axis.
    pub fn eval_h(&self, z: C64) -> Result<C64> {
        let side = Side::of(z).ok_or(RhpError::Placement("use eval_h_side on the real axis".into()))?;
        self.eval_h_weighted(z, side, Weight::F)
    }

    /// `h(z)` with an explicit side (required on the real axis).
    pub fn eval_h_side(&self, z: C64, side: Side) -> Result<C64> {
        self.eval_h_weighted(z, side, Weight::F)
    }

    /// `∂h/∂mu (z)` at frozen branchpoints, `R(z) K_mu(z) / D` with the same
    /// residue bookkeeping as `h`.
    pub fn eval_dh_dmu(&self, z: C64) -> Result<C64> {
        let side = Side::of(z).ok_or(RhpError::Placement("point on the real axis".into()))?;
        self.eval_h_weighted(z, side, Weight::FMu)
    }

    /// `h'(z)`, by differentiating `R K / D` with the residue corrections.
    pub fn eval_h_prime(&self, z: C64) -> Result<C64> {
        Ok(self.eval_h_and_prime(z)?.1)
    }

    /// `(h(z), h'(z))` from one quadrature batch.
    pub fn eval_h_and_prime(&self, z: C64) -> Result<(C64, C64)> {
        let side = Side::of(z).ok_or(RhpError::Placement("point on the real axis".into()))?;
        let f = self.scattering();
        let (k, kp) = self.corrected_k(z, side, Weight::F, &f, true)?;
        let r = self.contour.radical.eval(z)?;
        let rp = r * self.contour.radical.log_derivative(z);
        let d = self.d_or_one();
        Ok((r * k / d, (rp * k + r * kp.unwrap()) / d))
    }

    fn d_or_one(&self) -> C64 {
        if self.order() == 0 {
            C64::new(1.0, 0.0)
        } else {
            self.d
        }
    }

    fn eval_h_weighted(&self, z: C64, side: Side, weight: Weight) -> Result<C64> {
        side.check(z)?;
        let f = self.scattering();
        let r = self.contour.radical.eval(z)?;
        let (k, _) = self.corrected_k(z, side, weight, &f, false)?;
        Ok(r * k / self.d_or_one())
    }

    /// `K` with every loop containing `z` replaced by its outside branch;
    /// optionally also `K'`.
    fn corrected_k(
        &self,
        z: C64,
        side: Side,
        weight: Weight,
        f: &dyn ScatteringFunction,
        derivative: bool,
    ) -> Result<(C64, Option<C64>)> {
        let cs = &self.contour;
        let rows = cs.row_loops();
        let n2 = rows.len();
        // Cauchy points on the real axis are shifted by nothing: the loops
        // never touch the axis except at the pinch.
        let mut specs = Vec::new();
        let kernels: Vec<Kernel> = if derivative {
            vec![Kernel::Cauchy(z), Kernel::CauchySquared(z)]
        } else {
            vec![Kernel::Cauchy(z)]
        };
        for k in &kernels {
            for r in &rows {
                specs.push(IntegralSpec::new(*r, *k, Weight::One));
            }
            specs.push(IntegralSpec::new(LoopKind::Big, *k, weight));
        }
        let mut moment_specs = Vec::new();
        if n2 > 0 && weight != Weight::F {
            for n in 0..n2 {
                moment_specs.push(IntegralSpec::new(LoopKind::Big, Kernel::Power(n as u32), weight));
            }
        }
        let all: Vec<IntegralSpec> = specs.iter().chain(&moment_specs).copied().collect();
        let (vals, _) = integrate_family_mesh(&all, cs, f, self.tol, None)?;
        let mut cols: Vec<Vec<C64>> = vals[..specs.len()].chunks(n2 + 1).map(|c| c.to_vec()).collect();
        let moments = if weight == Weight::F { self.f_moments.clone() } else { vals[specs.len()..].to_vec() };

        for (ri, r) in rows.iter().enumerate() {
            let lp = cs.loop_by_kind(*r);
            if let Some(part) = lp.part_containing(z) {
                let rl = match &part.sheet {
                    Sheet::Local(lr) => lr.value(z),
                    Sheet::Fixed => cs.radical.value(z),
                };
                let inv = 1.0 / rl;
                cols[0][ri] -= TWO_PI_I * inv;
                if derivative {
                    // d/dz of 1/R_local = -(1/R_local) R'/R.
                    cols[1][ri] -= TWO_PI_I * (-inv * cs.radical.log_derivative(z));
                }
            }
        }
        if !cs.big.contains(z) {
            let r = cs.radical.value(z);
            let wv = weight_value(f, weight, z, side)?;
            cols[0][n2] += TWO_PI_I * wv / r;
            if derivative {
                let wp = match weight {
                    Weight::F => f.z_derivative(z, side)?,
                    _ => return Err(RhpError::Placement("derivative only for the f row".into())),
                };
                let lr = cs.radical.log_derivative(z);
                cols[1][n2] += TWO_PI_I * (wp / r - wv * lr / r);
            }
        }
        let k = if n2 == 0 { -cols[0][0] / TWO_PI_I } else { k_from_parts(&self.a, &moments, &cols[0]) };
        let kp = if derivative {
            Some(if n2 == 0 { -cols[1][0] / TWO_PI_I } else { k_from_parts(&self.a, &moments, &cols[1]) })
        } else {
            None
        };
        Ok((k, kp))
    }
}

pub(crate) fn weight_value(f: &dyn ScatteringFunction, w: Weight, z: C64, side: Side) -> Result<C64> {
    match w {
        Weight::One => Ok(C64::new(1.0, 0.0)),
        Weight::F => f.value(z, side),
        Weight::FMu => f.mu_derivative(z, side),
        Weight::FPrime => f.z_derivative(z, side),
        Weight::FX => f.x_derivative(z, side),
        Weight::FT => f.t_derivative(z, side),
    }
}

/// Drops imaginary parts below `tol * max(1, |x|)`; errors above.
pub(crate) fn realify(x: &[C64], tol: f64, name: &str) -> Result<(Vec<f64>, f64)> {
    let mut worst: f64 = 0.0;
    for v in x {
        let bound = tol * v.norm().max(1.0);
        if v.im.abs() > bound {
            return Err(RhpError::NonReal { name: name.into(), residue: v.im.abs() });
        }
        worst = worst.max(v.im.abs());
    }
    if worst > 0.0 {
        log::debug!("discarded imaginary residue {worst:.3e} from {name}");
    }
    Ok((x.iter().map(|v| v.re).collect(), worst))
}
