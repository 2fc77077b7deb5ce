//! Branchpoint evolution in `mu`, `x` or `t`: the implicit-function ODE
//! `dα_j/dp = -K_p(α_j) / (∂K(α_j)/∂α_j)` integrated by classical RK4, and
//! direct Newton re-solves on the same grid for comparison.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::SignReport;
use crate::contour::build_contour;
use crate::error::{Result, RhpError};
use crate::modulation::{newton_solve, solver_quad_tol};
use crate::params::{ProblemParams, Tolerances};
use crate::quadrature::Weight;
use crate::radical::BranchpointSet;
use crate::rhp::{assemble, realify, solve_rows, Request};
use crate::scattering::NlsScattering;

type C64 = Complex64;

/// Relative floor on the Jacobian diagonal below which a configuration is
/// treated as a breaking point.
pub const NEAR_BREAK_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Mu,
    X,
    T,
}

impl SweepParam {
    pub fn weight(self) -> Weight {
        match self {
            SweepParam::Mu => Weight::FMu,
            SweepParam::X => Weight::FX,
            SweepParam::T => Weight::FT,
        }
    }

    pub fn value(self, p: &ProblemParams) -> f64 {
        match self {
            SweepParam::Mu => p.mu,
            SweepParam::X => p.x,
            SweepParam::T => p.t,
        }
    }

    pub fn apply(self, p: &ProblemParams, v: f64) -> Result<ProblemParams> {
        match self {
            SweepParam::Mu => ProblemParams::new(p.x, p.t, v, p.genus),
            SweepParam::X => ProblemParams::new(v, p.t, p.mu, p.genus),
            SweepParam::T => ProblemParams::new(p.x, v, p.mu, p.genus),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::X => "x",
            SweepParam::T => "t",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = RhpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(SweepParam::Mu),
            "x" => Ok(SweepParam::X),
            "t" => Ok(SweepParam::T),
            _ => Err(RhpError::Config(format!("unknown sweep parameter `{s}` (expected mu, x or t)"))),
        }
    }
}

/// Everything the evolution equations need at one configuration, from a
/// single quadrature batch.
#[derive(Clone, Debug)]
pub struct Rates {
    pub dalpha: Vec<C64>,
    pub k: Vec<C64>,
    pub jac: Vec<C64>,
    pub d: C64,
    pub w: Vec<f64>,
    pub omega: Vec<f64>,
    pub dw: Vec<f64>,
    pub domega: Vec<f64>,
    pub arc_scale: f64,
}

impl Rates {
    pub fn max_residual(&self) -> f64 {
        self.k.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `dα_j/dp` together with the constants and their derivatives.
pub fn rates(alphas: &BranchpointSet, p: &ProblemParams, param: SweepParam, quad_tol: f64) -> Result<Rates> {
    let cs = build_contour(alphas, p.mu)?;
    let f = NlsScattering::new(p);
    let weight = param.weight();
    let up = alphas.upper().to_vec();
    let m = up.len();
    let mut reqs = Vec::with_capacity(3 * m);
    for z in &up {
        reqs.push(Request::Det { z: *z, weight: Weight::F, squared: false });
    }
    for z in &up {
        reqs.push(Request::Det { z: *z, weight, squared: false });
    }
    for z in &up {
        reqs.push(Request::Big { z: *z, weight: Weight::FPrime });
    }
    let asm = assemble(&cs, &f, &[Weight::F, weight], &reqs, quad_tol, None)?;
    let n = cs.order();
    let d = if n == 0 { C64::new(1.0, 0.0) } else { asm.d };
    let k = asm.values[..m].to_vec();
    let kp = &asm.values[m..2 * m];
    let jac: Vec<C64> = asm.values[2 * m..].iter().map(|v| d * v).collect();
    let arc_scale = cs.arc_scale();
    let floor = NEAR_BREAK_FLOOR * d.norm() * arc_scale;
    if let Some((j, v)) = jac.iter().enumerate().find(|(_, v)| !(v.norm() > floor)) {
        return Err(RhpError::NearBreak(format!(
            "denominator for alpha_{} is {:.3e}, below {:.3e}",
            2 * j,
            v.norm(),
            floor
        )));
    }
    let dalpha = kp.iter().zip(&jac).map(|(a, b)| -a / b).collect();
    let (w, omega, dw, domega) = if n == 0 {
        Default::default()
    } else {
        let (c, _) = realify(&solve_rows(&asm.a, &asm.moments[&Weight::F])?, 1e-6, "W/Omega")?;
        let (dc, _) = realify(&solve_rows(&asm.a, &asm.moments[&weight])?, 1e-6, "derivative of W/Omega")?;
        (c[..n].to_vec(), c[n..].to_vec(), dc[..n].to_vec(), dc[n..].to_vec())
    };
    Ok(Rates { dalpha, k, jac, d, w, omega, dw, domega, arc_scale })
}

pub fn dalpha_dmu(alphas: &BranchpointSet, p: &ProblemParams, tols: &Tolerances) -> Result<Vec<C64>> {
    Ok(rates(alphas, p, SweepParam::Mu, solver_quad_tol(tols))?.dalpha)
}

pub fn dalpha_dx(alphas: &BranchpointSet, p: &ProblemParams, tols: &Tolerances) -> Result<Vec<C64>> {
    Ok(rates(alphas, p, SweepParam::X, solver_quad_tol(tols))?.dalpha)
}

pub fn dalpha_dt(alphas: &BranchpointSet, p: &ProblemParams, tols: &Tolerances) -> Result<Vec<C64>> {
    Ok(rates(alphas, p, SweepParam::T, solver_quad_tol(tols))?.dalpha)
}

/// Central difference of Newton re-solves, the reference for `dalpha_*`.
pub fn fd_dalpha(
    alphas: &BranchpointSet,
    p: &ProblemParams,
    param: SweepParam,
    delta: f64,
    tols: &Tolerances,
) -> Result<Vec<C64>> {
    let v = param.value(p);
    let plus = newton_solve(alphas, &param.apply(p, v + delta)?, tols)?;
    let minus = newton_solve(alphas, &param.apply(p, v - delta)?, tols)?;
    Ok(plus.alphas.upper().iter().zip(minus.alphas.upper()).map(|(a, b)| (a - b) / (2.0 * delta)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ode,
    Resolve,
    Both,
}

impl std::str::FromStr for Method {
    type Err = RhpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ode" => Ok(Method::Ode),
            "resolve" => Ok(Method::Resolve),
            "both" => Ok(Method::Both),
            _ => Err(RhpError::Config(format!("unknown method `{s}` (expected ode, resolve or both)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// Start and end of the sweep; `to < from` sweeps downward.
    pub from: f64,
    pub to: f64,
    /// Largest allowed spacing; the grid is uniform with endpoints hit exactly.
    pub step: f64,
    pub method: Method,
    /// Newton polish of the ODE state every `k` steps (`None`: never).
    pub polish_every: Option<usize>,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !self.from.is_finite() || !self.to.is_finite() {
            return Err(RhpError::Config("sweep needs finite bounds and a positive step".into()));
        }
        let span = self.to - self.from;
        let n = (span.abs() / self.step - 1e-9).ceil().max(0.0) as usize;
        if n == 0 {
            return Ok(vec![self.from]);
        }
        Ok((0..=n).map(|k| if k == n { self.to } else { self.from + span * k as f64 / n as f64 }).collect())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub alphas: Vec<C64>,
    pub dalpha: Vec<C64>,
    pub w: Vec<f64>,
    pub omega: Vec<f64>,
    pub dw: Vec<f64>,
    pub domega: Vec<f64>,
    /// `max_j |K(alpha_j)|`.
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<SignReport>,
}

impl Sample {
    fn new(value: f64, alphas: &BranchpointSet, r: &Rates) -> Self {
        Self {
            value,
            alphas: alphas.upper().to_vec(),
            dalpha: r.dalpha.clone(),
            w: r.w.clone(),
            omega: r.omega.clone(),
            dw: r.dw.clone(),
            domega: r.domega.clone(),
            residual: r.max_residual(),
            signs: None,
        }
    }
}

impl PartialEq for SignReport {
    fn eq(&self, other: &Self) -> bool {
        serde_json::to_value(self).ok() == serde_json::to_value(other).ok()
    }
}

/// Where and why a sweep stopped early.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Frontier {
    pub value: f64,
    pub near_break: bool,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Series {
    pub samples: Vec<Sample>,
    /// Early stops; at most one per sweep direction.
    pub frontiers: Vec<Frontier>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ContinuationTrace {
    pub schema: u32,
    pub param: SweepParam,
    pub method: Method,
    pub base: ProblemParams,
    /// Upper branchpoints the run was seeded with.
    #[serde(default)]
    pub seed: Vec<C64>,
    pub ode: Option<Series>,
    pub resolve: Option<Series>,
    /// `(value, max_j |α_j^ode - α_j^resolve|)` at every grid point both reached.
    pub deviation: Vec<(f64, f64)>,
}

impl ContinuationTrace {
    pub fn max_deviation(&self) -> Option<f64> {
        self.deviation.iter().map(|d| d.1).reduce(f64::max)
    }

    pub fn frontier(&self) -> Option<&Frontier> {
        self.ode.iter().chain(&self.resolve).find_map(|s| s.frontiers.first())
    }

    /// The series that carries the primary result of the run.
    pub fn primary(&self) -> &Series {
        self.resolve.as_ref().or(self.ode.as_ref()).expect("trace holds at least one series")
    }
}

/// Runs a sweep from the solved branchpoints `start` (at `p0` with the swept
/// parameter replaced by `spec.from`).
pub fn sweep(spec: &SweepSpec, p0: &ProblemParams, start: &BranchpointSet, tols: &Tolerances) -> Result<ContinuationTrace> {
    let grid = spec.grid()?;
    let p_start = spec.param.apply(p0, grid[0])?;
    let first = newton_solve(start, &p_start, tols)?;
    let run_ode = matches!(spec.method, Method::Ode | Method::Both);
    let run_resolve = matches!(spec.method, Method::Resolve | Method::Both);
    let (ode, resolve) = std::thread::scope(|s| {
        let ode = run_ode.then(|| s.spawn(|| integrate(spec, &grid, p0, &first.alphas, tols)));
        let resolve = run_resolve.then(|| s.spawn(|| resolve_series(spec, &grid, p0, &first.alphas, tols)));
        (
            ode.map(|h| h.join().expect("ODE worker panicked")),
            resolve.map(|h| h.join().expect("resolve worker panicked")),
        )
    });
    let ode = ode.transpose()?;
    let resolve = resolve.transpose()?;
    let deviation = deviations(ode.as_ref(), resolve.as_ref());
    Ok(ContinuationTrace {
        schema: 1,
        param: spec.param,
        method: spec.method,
        base: p_start,
        seed: start.upper().to_vec(),
        ode,
        resolve,
        deviation,
    })
}

/// Pairs samples of the two series by parameter value (both use the same grid).
fn deviations(ode: Option<&Series>, resolve: Option<&Series>) -> Vec<(f64, f64)> {
    let (Some(a), Some(b)) = (ode, resolve) else { return Vec::new() };
    a.samples
        .iter()
        .filter_map(|x| {
            let y = b.samples.iter().find(|y| y.value == x.value)?;
            Some((x.value, x.alphas.iter().zip(&y.alphas).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)))
        })
        .collect()
}

/// Sweep over `[lo, hi]` anchored at the parameter value of `p0`, where
/// `start` is solved. With the anchor strictly inside the range, the two
/// halves are run outward from it and merged in increasing order; the grid
/// has spacing `step` measured from the anchor on each side.
pub fn sweep_range(
    param: SweepParam,
    lo: f64,
    hi: f64,
    step: f64,
    method: Method,
    polish_every: Option<usize>,
    p0: &ProblemParams,
    start: &BranchpointSet,
    tols: &Tolerances,
) -> Result<ContinuationTrace> {
    if !(lo <= hi) {
        return Err(RhpError::Config(format!("sweep range [{lo}, {hi}] is empty")));
    }
    let anchor = param.value(p0).clamp(lo, hi);
    let spec = |to: f64| SweepSpec { param, from: anchor, to, step, method, polish_every };
    let mut halves = Vec::new();
    if anchor > lo || lo == hi {
        halves.push(sweep(&spec(lo), p0, start, tols)?);
    }
    if anchor < hi {
        halves.push(sweep(&spec(hi), p0, start, tols)?);
    }
    let mut merged = halves.remove(0);
    if let Some(upper) = halves.pop() {
        let join = |a: &mut Option<Series>, b: Option<Series>| {
            if let (Some(a), Some(b)) = (a.as_mut(), b) {
                a.samples.extend(b.samples.into_iter().filter(|s| s.value > anchor));
                a.frontiers.extend(b.frontiers);
            }
        };
        join(&mut merged.ode, upper.ode);
        join(&mut merged.resolve, upper.resolve);
    }
    for s in merged.ode.iter_mut().chain(merged.resolve.iter_mut()) {
        s.samples.sort_by(|a, b| a.value.total_cmp(&b.value));
    }
    merged.deviation = deviations(merged.ode.as_ref(), merged.resolve.as_ref());
    Ok(merged)
}

fn frontier_from(e: RhpError, value: f64) -> Result<Frontier> {
    match e {
        RhpError::NearBreak(m) => Ok(Frontier { value, near_break: true, message: m }),
        e @ (RhpError::Divergence { .. } | RhpError::Contour(_) | RhpError::SingularSystem) => {
            Ok(Frontier { value, near_break: false, message: e.to_string() })
        }
        e => Err(e),
    }
}

/// Fixed-step RK4 on the grid.
fn integrate(spec: &SweepSpec, grid: &[f64], p0: &ProblemParams, start: &BranchpointSet, tols: &Tolerances) -> Result<Series> {
    let qt = solver_quad_tol(tols);
    let param = spec.param;
    let rhs = |v: f64, a: &BranchpointSet| -> Result<Rates> { rates(a, &param.apply(p0, v)?, param, qt) };
    let shift = |a: &BranchpointSet, k: &[C64], h: f64| -> Result<BranchpointSet> {
        BranchpointSet::new(a.upper().iter().zip(k).map(|(x, d)| x + d * h).collect())
    };
    let mut out = Series::default();
    let mut alphas = start.clone();
    let mut here = match rhs(grid[0], &alphas) {
        Ok(r) => r,
        Err(e) => {
            out.frontiers.push(frontier_from(e, grid[0])?);
            return Ok(out);
        }
    };
    out.samples.push(Sample::new(grid[0], &alphas, &here));
    for (i, w) in grid.windows(2).enumerate() {
        let (v, h) = (w[0], w[1] - w[0]);
        let step = || -> Result<(BranchpointSet, Rates)> {
            let k1 = &here.dalpha;
            let k2 = rhs(v + 0.5 * h, &shift(&alphas, k1, 0.5 * h)?)?.dalpha;
            let k3 = rhs(v + 0.5 * h, &shift(&alphas, &k2, 0.5 * h)?)?.dalpha;
            let k4 = rhs(v + h, &shift(&alphas, &k3, h)?)?.dalpha;
            let incr: Vec<C64> = (0..k1.len()).map(|j| (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0).collect();
            let mut next = shift(&alphas, &incr, h)?;
            if spec.polish_every.is_some_and(|k| k > 0 && (i + 1) % k == 0) {
                next = newton_solve(&next, &param.apply(p0, w[1])?, tols)?.alphas;
            }
            let r = rhs(w[1], &next)?;
            Ok((next, r))
        };
        match step() {
            Ok((next, r)) => {
                alphas = next;
                here = r;
                out.samples.push(Sample::new(w[1], &alphas, &here));
            }
            Err(e) => {
                out.frontiers.push(frontier_from(e, w[1])?);
                break;
            }
        }
    }
    Ok(out)
}

/// Newton re-solve at every grid point, seeded by the previous solution.
fn resolve_series(
    spec: &SweepSpec,
    grid: &[f64],
    p0: &ProblemParams,
    start: &BranchpointSet,
    tols: &Tolerances,
) -> Result<Series> {
    let qt = solver_quad_tol(tols);
    let mut out = Series::default();
    let mut seed = start.clone();
    for &v in grid {
        let attempt = || -> Result<(BranchpointSet, Rates)> {
            let p = spec.param.apply(p0, v)?;
            let sol = newton_solve(&seed, &p, tols)?;
            let r = rates(&sol.alphas, &p, spec.param, qt)?;
            Ok((sol.alphas, r))
        };
        match attempt() {
            Ok((a, r)) => {
                out.samples.push(Sample::new(v, &a, &r));
                seed = a;
            }
            Err(e) => {
                out.frontiers.push(frontier_from(e, v)?);
                break;
            }
        }
    }
    Ok(out)
}

/// Second differences `|α(v+h) - 2α(v) + α(v-h)| / h^2`, maximised over
/// the branchpoints, at the interior samples of a series.
pub fn second_differences(samples: &[Sample]) -> Vec<(f64, f64)> {
    samples
        .windows(3)
        .map(|w| {
            let h = 0.5 * (w[2].value - w[0].value);
            let v = (0..w[1].alphas.len())
                .map(|j| (w[2].alphas[j] - 2.0 * w[1].alphas[j] + w[0].alphas[j]).norm() / (h * h))
                .fold(0.0, f64::max);
            (w[1].value, v)
        })
        .collect()
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV header for traces whose branchpoint count is `m` and constant count `n`.
pub fn csv_header(param: SweepParam, m: usize, n: usize) -> Vec<String> {
    let mut h = vec!["method".to_string(), param.name().to_string()];
    for j in 0..m {
        h.push(format!("alpha{}_re", 2 * j));
        h.push(format!("alpha{}_im", 2 * j));
    }
    for j in 0..m {
        h.push(format!("dalpha{}_re", 2 * j));
        h.push(format!("dalpha{}_im", 2 * j));
    }
    for (name, count) in [("W", n), ("Omega", n), ("dW", n), ("dOmega", n)] {
        for j in 1..=count {
            h.push(format!("{name}{j}"));
        }
    }
    h.push("residual".into());
    h
}

/// Writes the samples of every series, one row each, 17 significant digits.
pub fn write_csv<W: Write>(trace: &ContinuationTrace, out: W) -> Result<()> {
    let first = trace.ode.iter().chain(&trace.resolve).flat_map(|s| s.samples.first()).next();
    let (m, n) = first.map_or((0, 0), |s| (s.alphas.len(), s.w.len()));
    let mut wtr = csv::Writer::from_writer(out);
    let io = |e: csv::Error| RhpError::Format(e.to_string());
    wtr.write_record(csv_header(trace.param, m, n)).map_err(io)?;
    for (name, series) in [("ode", &trace.ode), ("resolve", &trace.resolve)] {
        let Some(series) = series else { continue };
        for s in &series.samples {
            let mut row = vec![name.to_string(), fmt17(s.value)];
            for a in s.alphas.iter().chain(&s.dalpha) {
                row.push(fmt17(a.re));
                row.push(fmt17(a.im));
            }
            for v in s.w.iter().chain(&s.omega).chain(&s.dw).chain(&s.domega) {
                row.push(fmt17(*v));
            }
            row.push(fmt17(s.residual));
            wtr.write_record(&row).map_err(io)?;
        }
    }
    wtr.flush().map_err(|e| RhpError::Format(e.to_string()))
}

/// Parses rows written by [`write_csv`] back into `(method, sample)` pairs.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<(String, Sample)>> {
    let mut rdr = csv::Reader::from_reader(input);
    let io = |e: csv::Error| RhpError::Format(e.to_string());
    let header = rdr.headers().map_err(io)?.clone();
    let m = header.iter().filter(|h| h.starts_with("alpha") && h.ends_with("_re")).count();
    let n = header.iter().filter(|h| h.starts_with('W')).count();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(io)?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| RhpError::Format(format!("short CSV row: {rec:?}")))?
                .parse::<f64>()
                .map_err(|e| RhpError::Format(format!("bad number in column {i}: {e}")))
        };
        let cplx = |i: usize| -> Result<C64> { Ok(C64::new(num(i)?, num(i + 1)?)) };
        let mut col = 2;
        let mut alphas = Vec::with_capacity(m);
        for _ in 0..m {
            alphas.push(cplx(col)?);
            col += 2;
        }
        let mut dalpha = Vec::with_capacity(m);
        for _ in 0..m {
            dalpha.push(cplx(col)?);
            col += 2;
        }
        let mut reals = |count: usize| -> Result<Vec<f64>> {
            let v = (col..col + count).map(num).collect::<Result<Vec<f64>>>()?;
            col += count;
            Ok(v)
        };
        let (w, omega, dw, domega) = (reals(n)?, reals(n)?, reals(n)?, reals(n)?);
        let residual = num(col)?;
        let sample = Sample { value: num(1)?, alphas, dalpha, w, omega, dw, domega, residual, signs: None };
        out.push((rec.get(0).unwrap_or_default().to_string(), sample));
    }
    Ok(out)
}

/// Pretty JSON with the schema version.
pub fn to_json(trace: &ContinuationTrace) -> Result<String> {
    serde_json::to_string_pretty(trace).map_err(|e| RhpError::Format(e.to_string()))
}

pub fn from_json(text: &str) -> Result<ContinuationTrace> {
    let t: ContinuationTrace = serde_json::from_str(text).map_err(|e| RhpError::Format(e.to_string()))?;
    if t.schema != 1 {
        return Err(RhpError::Format(format!("unsupported trace schema {}", t.schema)));
    }
    Ok(t)
}
