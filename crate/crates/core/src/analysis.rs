//! Sign conditions on `gamma^inf` and genus detection.
//!
//! The zero set of `Im h` does not depend on where the arcs are drawn (the
//! constants `W_j`, `Omega_j` are real), so the main arcs are recovered by
//! tracing the level curves `Im h = 0` between their endpoints with the
//! solution computed on the straight contour. Complementary arcs and the tail
//! are routed through the region `Im h >= 0` by a bottleneck path search on a
//! grid. The contour is then rebuilt from these paths and every condition is
//! sampled on it.

use std::collections::{BTreeMap, BinaryHeap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{build_contour, build_contour_with, ContourOptions, ContourSystem, Tails};
use crate::error::{Result, RhpError};
use crate::modulation::{newton_solve, SolveReport};
use crate::params::{ProblemParams, Tolerances};
use crate::polygon;
use crate::radical::{BranchpointSet, CutPath};
use crate::rhp::RhpSolution;
use crate::scattering::{eval_t, im_f_real_axis};

type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Sampling and acceptance knobs for [`check_signs`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignOptions {
    /// Samples per arc.
    pub samples: usize,
    /// Near and far side offsets, in units of the arc scale.
    pub near: f64,
    pub far: f64,
    /// Main-arc sides must satisfy `Im h < -margin`.
    pub margin: f64,
    /// Complementary arcs and tails must satisfy `Im h >= -tol`.
    pub comp_tol: f64,
    pub hprime_floor: f64,
    /// Largest accepted `|Im h|` on a traced main arc.
    pub on_arc_tol: f64,
    /// Largest accepted `|K(alpha_j)|` after rebuilding the contour.
    pub residual_tol: f64,
    /// Grid resolution of the path search (cells along the longer side).
    pub grid: usize,
}

impl Default for SignOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            near: 1e-3,
            far: 1e-2,
            margin: 0.0,
            comp_tol: 1e-8,
            hprime_floor: 1e-6,
            on_arc_tol: 1e-6,
            residual_tol: 1e-6,
            grid: 48,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MainArcCheck {
    pub index: usize,
    pub on_arc_max_abs: f64,
    pub side_max_near: f64,
    pub side_max_far: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompArcCheck {
    pub index: usize,
    pub min_im_h: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailCheck {
    /// Minimum over the part of the tail in the upper half-plane.
    pub min_im_h_path: f64,
    /// Minimum of the closed form `-Im f(x + i0)` for `x <= axis_start`.
    pub min_im_h_axis: f64,
    pub axis_start: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SignReport {
    pub genus: u32,
    pub main_arcs: Vec<MainArcCheck>,
    pub comp_arcs: Vec<CompArcCheck>,
    pub tail: TailCheck,
    pub hprime_over_r_min: f64,
    /// `max |K(alpha_j)|` on the rebuilt contour.
    pub contour_residual: f64,
    pub passed: bool,
    /// Upper-half pieces of the checked contour followed by the tail.
    #[serde(skip)]
    pub paths: Vec<Vec<C64>>,
}

impl SignReport {
    /// Largest `Im h` over all main-arc side samples.
    pub fn main_side_max(&self) -> f64 {
        self.main_arcs.iter().map(|m| m.side_max_near.max(m.side_max_far)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn comp_min(&self) -> f64 {
        self.comp_arcs.iter().map(|c| c.min_im_h).fold(f64::INFINITY, f64::min)
    }

    fn decide(&mut self, opts: &SignOptions) {
        self.passed = self.main_side_max() < -opts.margin
            && self.main_arcs.iter().all(|m| m.on_arc_max_abs <= opts.on_arc_tol)
            && self.comp_min() >= -opts.comp_tol
            && self.tail.min_im_h_path >= -opts.comp_tol
            && self.tail.min_im_h_axis >= -opts.comp_tol
            && self.hprime_over_r_min > opts.hprime_floor
            && self.contour_residual <= opts.residual_tol;
    }
}

/// Traces the main arcs, routes the complementary arcs and the tail, and
/// samples the sign conditions on the resulting `gamma^inf`.
pub fn check_signs(sol: &RhpSolution, opts: &SignOptions) -> Result<SignReport> {
    let cs = admissible_contour(sol, opts)?;
    let checked = RhpSolution::new(cs, sol.params, sol.tol)?;
    check_signs_on(&checked, opts)
}

/// Samples the sign conditions on the contour carried by `sol`, which must
/// already follow the level curves and have tails attached.
pub fn check_signs_on(sol: &RhpSolution, opts: &SignOptions) -> Result<SignReport> {
    let cs = &sol.contour;
    let tails = cs.tails.clone().ok_or_else(|| RhpError::Contour("contour has no tails".into()))?;
    let scale = cs.arc_scale();
    let pieces = cs.upper_pieces();
    let n = cs.order();
    let contour_residual = sol.residuals()?.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let main_idx: Vec<usize> = (0..=n).map(|j| 2 * j).collect();
    let comp_idx: Vec<usize> = (1..=n).map(|j| 2 * j - 1).collect();

    let (mains, comps, tail_path) = std::thread::scope(|s| {
        let mains: Vec<_> = main_idx
            .iter()
            .map(|&k| {
                let piece = &pieces[k];
                s.spawn(move || check_main(sol, piece, k / 2, scale, opts))
            })
            .collect();
        let comps: Vec<_> = comp_idx
            .iter()
            .map(|&k| {
                let piece = &pieces[k];
                s.spawn(move || sample_continuous(sol, piece, scale, opts.samples))
            })
            .collect();
        let tail = s.spawn(|| sample_continuous(sol, &tails.upper[..tails.upper.len() - 1], scale, opts.samples));
        let mains: Vec<_> = mains.into_iter().map(|h| h.join().expect("sign worker panicked")).collect();
        let comps: Vec<_> = comps.into_iter().map(|h| h.join().expect("sign worker panicked")).collect();
        (mains, comps, tail.join().expect("sign worker panicked"))
    });

    let mut hpr = f64::INFINITY;
    let mut main_arcs = Vec::new();
    for m in mains {
        let (check, ratio) = m?;
        hpr = hpr.min(ratio);
        main_arcs.push(check);
    }
    let mut comp_arcs = Vec::new();
    for (j, c) in comps.into_iter().enumerate() {
        let (min, ratio) = c?;
        hpr = hpr.min(ratio);
        comp_arcs.push(CompArcCheck { index: j + 1, min_im_h: min });
    }
    let (tail_min, ratio) = tail_path?;
    hpr = hpr.min(ratio);

    let mut report = SignReport {
        genus: cs.alphas.genus(),
        main_arcs,
        comp_arcs,
        tail: TailCheck {
            min_im_h_path: tail_min,
            min_im_h_axis: axis_tail_min(tails.axis_start, cs.mu, scale),
            axis_start: tails.axis_start,
        },
        hprime_over_r_min: hpr,
        contour_residual,
        passed: false,
        paths: pieces.into_iter().chain(std::iter::once(tails.upper.clone())).collect(),
    };
    report.decide(opts);
    Ok(report)
}

/// `Im h(x + i0) = -Im f(x + i0)` on the real axis left of `gamma`.
pub fn im_h_on_axis(x: f64, mu: f64) -> f64 {
    -im_f_real_axis(x, mu)
}

fn axis_tail_min(start: f64, mu: f64, scale: f64) -> f64 {
    // The closed form is linear left of -mu/2; a modest sample range covers
    // the one kink it can have.
    (0..=64).map(|k| im_h_on_axis(start - 10.0 * scale * k as f64 / 64.0, mu)).fold(f64::INFINITY, f64::min)
}

fn check_main(
    sol: &RhpSolution,
    piece: &[C64],
    index: usize,
    scale: f64,
    opts: &SignOptions,
) -> Result<(MainArcCheck, f64)> {
    let tiny = 1e-9 * scale;
    let mut on_arc: f64 = 0.0;
    let mut near = f64::NEG_INFINITY;
    let mut far = f64::NEG_INFINITY;
    let mut ratio = f64::INFINITY;
    // Traced vertices lie on the level curve; chord midpoints do not, and
    // their sag is comparable to the near offset.
    for (z, normal) in interior_vertices(piece, opts.samples) {
        let zt = z + normal * tiny;
        on_arc = on_arc.max(sol.eval_h(zt)?.im.abs());
        ratio = ratio.min(hprime_ratio(sol, zt)?);
        for (eps, slot) in [(opts.near, &mut near), (opts.far, &mut far)] {
            // Keep the offset points in the upper half-plane near mu/2.
            let d = (eps * scale).min(0.5 * z.im);
            for sign in [1.0, -1.0] {
                let w = z + normal * d * sign;
                *slot = slot.max(sol.eval_h(w)?.im);
            }
        }
    }
    Ok((MainArcCheck { index, on_arc_max_abs: on_arc, side_max_near: near, side_max_far: far }, ratio))
}

/// Vertices of a traced path closest to `m` evenly spaced arclength
/// positions, excluding the endpoints, with unit left normals.
fn interior_vertices(piece: &[C64], m: usize) -> Vec<(C64, C64)> {
    if piece.len() < 3 {
        let path = CutPath::new(piece.to_vec());
        return (0..m)
            .map(|k| {
                let (z, t) = path.point_at((k as f64 + 0.5) / m as f64);
                (z, I * t)
            })
            .collect();
    }
    let mut cum = vec![0.0];
    for w in piece.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut out: Vec<(C64, C64)> = Vec::new();
    let mut last = usize::MAX;
    for k in 0..m {
        let target = total * (k as f64 + 0.5) / m as f64;
        let idx = (1..piece.len() - 1)
            .min_by(|&a, &b| (cum[a] - target).abs().total_cmp(&(cum[b] - target).abs()))
            .unwrap();
        if idx == last {
            continue;
        }
        last = idx;
        let t = piece[idx + 1] - piece[idx - 1];
        out.push((piece[idx], I * t / t.norm()));
    }
    out
}

/// Minimum of `Im h` and of `|h'/R|` along a path where `Im h` is continuous.
fn sample_continuous(sol: &RhpSolution, piece: &[C64], scale: f64, m: usize) -> Result<(f64, f64)> {
    let path = CutPath::new(piece.to_vec());
    let tiny = 1e-9 * scale;
    let mut min = f64::INFINITY;
    let mut ratio = f64::INFINITY;
    for k in 0..m {
        let (z, tangent) = path.point_at((k as f64 + 0.5) / m as f64);
        let z = z + I * tangent * tiny;
        if z.im <= 0.0 {
            continue;
        }
        min = min.min(sol.eval_h(z)?.im);
        ratio = ratio.min(hprime_ratio(sol, z)?);
    }
    Ok((min, ratio))
}

fn hprime_ratio(sol: &RhpSolution, z: C64) -> Result<f64> {
    Ok((sol.eval_h_prime(z)? / sol.contour.radical.value(z)).norm())
}

/// Builds the contour on which the sign conditions are checked.
pub fn admissible_contour(sol: &RhpSolution, opts: &SignOptions) -> Result<ContourSystem> {
    let cs = &sol.contour;
    let up = cs.alphas.upper().to_vec();
    let n = cs.order();
    let zc = C64::new(cs.z0, 0.0);
    let mut pieces = cs.upper_pieces();

    // Main arcs first: they decide the sign of Im h on either side.
    let traced: Vec<Result<Vec<C64>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..=n)
            .map(|j| {
                let (from, to) = if j == 0 { (up[0], zc) } else { (up[2 * j - 1], up[2 * j]) };
                s.spawn(move || trace_zero_level(sol, from, to))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("trace worker panicked")).collect()
    });
    for (j, t) in traced.into_iter().enumerate() {
        let mut path = t?;
        if j == 0 {
            path.reverse();
        }
        pieces[2 * j] = path;
    }
    let mains_only = build_contour_with(&cs.alphas, cs.mu, &ContourOptions { paths: Some(pieces.clone()), ..Default::default() })?;
    let stage = RhpSolution::new(mains_only, sol.params, sol.tol)?;

    let grid = Grid::sample(&stage, opts.grid)?;
    let main_paths: Vec<Vec<C64>> = (0..=n).map(|j| pieces[2 * j].clone()).collect();
    for j in 1..=n {
        pieces[2 * j - 1] = grid.route(&stage, up[j * 2 - 2], Goal::Point(up[2 * j - 1]), &main_paths)?;
    }
    let tail = grid.route(&stage, up[2 * n], Goal::Axis(-cs.z0), &main_paths)?;
    let mut out = build_contour_with(&cs.alphas, cs.mu, &ContourOptions { paths: Some(pieces.clone()), ..Default::default() })?;
    let mut upper_gamma: Vec<C64> = vec![zc];
    for p in &pieces {
        upper_gamma.extend_from_slice(&p[1..]);
    }
    if tail.len() > 2 && polygon::polyline_crosses(&tail[1..], &upper_gamma) {
        return Err(RhpError::Contour("tail crosses gamma".into()));
    }
    let axis_start = tail.last().unwrap().re;
    out.tails = Some(Tails { upper: tail, axis_start });
    Ok(out)
}

/// Follows the curve `Im h = 0` from the branchpoint `from` to `to`.
pub fn trace_zero_level(sol: &RhpSolution, from: C64, to: C64) -> Result<Vec<C64>> {
    let len = (to - from).norm();
    let rays = zero_rays(sol, from, 0.02 * len)?;
    let aim = (to - from) / len;
    let mut order: Vec<C64> = rays.clone();
    order.sort_by(|a, b| (b - from).dot_dir(aim).total_cmp(&(a - from).dot_dir(aim)));
    let mut last_err = None;
    for start in order {
        match march(sol, from, start, to, len) {
            Ok(p) => return Ok(p),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| RhpError::Contour(format!("no zero level of Im h leaves {from}"))))
}

trait DotDir {
    fn dot_dir(&self, u: C64) -> f64;
}

impl DotDir for C64 {
    fn dot_dir(&self, u: C64) -> f64 {
        (self.re * u.re + self.im * u.im) / self.norm()
    }
}

/// Points where `Im h` vanishes on the circle of radius `r` around `centre`.
///
/// Crossing a main arc flips the sign of `Im h`; the samples are multiplied
/// by a sign that flips at every such crossing so that only genuine zeros of
/// the continued function are reported.
fn zero_rays(sol: &RhpSolution, centre: C64, r: f64) -> Result<Vec<C64>> {
    let barriers = main_barriers(&sol.contour);
    let m = 360;
    let angle = |k: f64| 2.0 * std::f64::consts::PI * k / m as f64;
    let pts: Vec<C64> = (0..=m).map(|k| centre + C64::from_polar(r, angle(k as f64))).collect();
    let mut vals = Vec::with_capacity(m + 1);
    let mut sign = 1.0;
    for k in 0..=m {
        if k > 0 && crossings(&barriers, pts[k - 1], pts[k]) % 2 == 1 {
            sign = -sign;
        }
        vals.push(if pts[k].im > 0.0 { Some(sign * sol.eval_h(pts[k])?.im) } else { None });
    }
    let mut out = Vec::new();
    for k in 0..m {
        let (Some(a), Some(b)) = (vals[k], vals[k + 1]) else { continue };
        if a.signum() == b.signum() {
            continue;
        }
        let flip = crossings(&barriers, pts[k], pts[k + 1]) % 2 == 1;
        let (mut lo, mut hi) = (angle(k as f64), angle((k + 1) as f64));
        if flip {
            // A barrier and a zero in one interval: keep the coarse midpoint.
            out.push(centre + C64::from_polar(r, 0.5 * (lo + hi)));
            continue;
        }
        let mut flo = sol.eval_h(pts[k])?.im;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            let v = sol.eval_h(centre + C64::from_polar(r, mid))?.im;
            if v.signum() == flo.signum() {
                lo = mid;
                flo = v;
            } else {
                hi = mid;
            }
        }
        out.push(centre + C64::from_polar(r, 0.5 * (lo + hi)));
    }
    Ok(out)
}

fn crossings(barriers: &[Vec<C64>], a: C64, b: C64) -> usize {
    barriers
        .iter()
        .flat_map(|p| p.windows(2))
        .filter(|w| polygon::segment_intersection(a, b, w[0], w[1]).is_some())
        .count()
}

fn main_barriers(cs: &ContourSystem) -> Vec<Vec<C64>> {
    let pieces = cs.upper_pieces();
    (0..=cs.order()).map(|j| pieces[2 * j].clone()).collect()
}

/// Predictor-corrector continuation of `Im h = 0` starting at `first`.
fn march(sol: &RhpSolution, from: C64, first: C64, to: C64, len: f64) -> Result<Vec<C64>> {
    let max_step = 0.04 * len;
    let min_step = 1e-7 * len;
    let radial = (first - from) / (first - from).norm();
    let first = correct(sol, first, radial, len)?.filter(|p| p.im > 0.0).unwrap_or(first);
    let mut path = vec![from, first];
    let mut z = first;
    let mut dir = (first - from) / (first - from).norm();
    let mut step = max_step;
    let mut travelled = 0.0;
    let fail = |why: &str| RhpError::Contour(format!("level curve from {from} towards {to}: {why}"));
    for _ in 0..20_000 {
        let dist = (to - z).norm();
        if dist <= 1.5 * step.max(0.02 * len) && (to - z).dot_dir(dir) > 0.5 {
            path.push(to);
            return Ok(path);
        }
        travelled += (z - path[path.len() - 2]).norm();
        if travelled > 4.0 * len || (path.len() > 4 && (z - from).norm() < 0.01 * len) {
            return Err(fail("curve wanders away"));
        }
        let g = sol.eval_h_prime(z)?;
        let mut v = g.conj() / g.norm();
        if v.dot_dir(dir) < 0.0 {
            v = -v;
        }
        let mut accepted = None;
        while step >= min_step {
            if let Some(p) = correct(sol, z + v * step, v, len)? {
                let d = p - z;
                if d.norm() < 1.6 * step && d.dot_dir(dir) > 0.9 {
                    accepted = Some(p);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(p) = accepted else { return Err(fail("step size underflow")) };
        if p.im <= 0.0 {
            if (p - to).norm() < 0.05 * len && to.im == 0.0 {
                path.push(to);
                return Ok(path);
            }
            return Err(fail("curve reaches the real axis"));
        }
        dir = (p - z) / (p - z).norm();
        z = p;
        path.push(p);
        step = (step * 1.5).min(max_step).min(0.5 * (to - z).norm().max(min_step));
    }
    Err(fail("too many steps"))
}

/// Newton correction along the normal `i v` onto `Im h = 0`.
fn correct(sol: &RhpSolution, mut p: C64, v: C64, len: f64) -> Result<Option<C64>> {
    let n = I * v;
    for _ in 0..12 {
        if p.im <= 0.0 {
            return Ok(Some(p));
        }
        let (h, g) = sol.eval_h_and_prime(p)?;
        let slope = (g * n).im;
        if slope == 0.0 {
            return Ok(None);
        }
        let ds = -h.im / slope;
        p += n * ds;
        if ds.abs() < 1e-13 * len.max(1.0) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

enum Goal {
    Point(C64),
    /// Any point of the real axis left of the given abscissa.
    Axis(f64),
}

/// `Im h` sampled on a rectangular grid of the upper half-plane.
struct Grid {
    origin: C64,
    cell: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl Grid {
    fn sample(sol: &RhpSolution, resolution: usize) -> Result<Self> {
        let cs = &sol.contour;
        let up = cs.alphas.upper();
        let (mut lo, mut hi) = (C64::new(-cs.z0, 0.0), C64::new(cs.z0, 0.0));
        for a in up {
            lo = C64::new(lo.re.min(a.re), 0.0);
            hi = C64::new(hi.re.max(a.re), hi.im.max(a.im));
        }
        let pad = 0.3 * (hi.re - lo.re).max(hi.im);
        let width = hi.re - lo.re + 2.0 * pad;
        let height = hi.im + pad;
        let cell = width.max(height) / resolution as f64;
        let nx = (width / cell).ceil() as usize + 1;
        let ny = (height / cell).ceil() as usize;
        let origin = C64::new(lo.re - pad, 0.5 * cell);
        let pts: Vec<C64> = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| origin + C64::new(i as f64 * cell, j as f64 * cell)))
            .collect();
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(16);
        let chunk = pts.len().div_ceil(workers);
        let values: Result<Vec<f64>> = std::thread::scope(|s| {
            let handles: Vec<_> = pts
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(|z| sol.eval_h(*z).map(|h| h.im)).collect::<Result<Vec<f64>>>()))
                .collect();
            let mut all = Vec::with_capacity(pts.len());
            for h in handles {
                all.extend(h.join().expect("grid worker panicked")?);
            }
            Ok(all)
        });
        Ok(Self { origin, cell, nx, ny, values: values? })
    }

    fn point(&self, k: usize) -> C64 {
        self.origin + C64::new((k % self.nx) as f64 * self.cell, (k / self.nx) as f64 * self.cell)
    }

    fn neighbours(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = ((k % self.nx) as i64, (k / self.nx) as i64);
        [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)].into_iter().filter_map(move |(di, dj)| {
            let (a, b) = (i + di, j + dj);
            (a >= 0 && b >= 0 && a < self.nx as i64 && b < self.ny as i64).then(|| b as usize * self.nx + a as usize)
        })
    }

    /// Path from the branchpoint `from` to `goal` through the largest values
    /// of `Im h`, never crossing a main arc or the cut of `f`.
    fn route(&self, sol: &RhpSolution, from: C64, goal: Goal, mains: &[Vec<C64>]) -> Result<Vec<C64>> {
        let cs = &sol.contour;
        let mut barriers: Vec<Vec<C64>> = mains.to_vec();
        let t = eval_t(cs.mu);
        if t.re == 0.0 && t.im > 0.0 {
            barriers.push(vec![C64::new(0.0, 0.0), C64::new(0.0, t.im + self.cell)]);
        }
        let near_radius = 3.0 * self.cell;
        let start_pt = positive_exit(sol, from, 2.0 * self.cell)?;
        let (end_pt, is_goal): (Option<C64>, Box<dyn Fn(usize) -> bool>) = match goal {
            Goal::Point(b) => {
                let e = positive_exit(sol, b, 2.0 * self.cell)?;
                let cell = self.cell;
                let me: &Grid = self;
                (Some(e), Box::new(move |k| (me.point(k) - e).norm() <= 1.5 * cell))
            }
            Goal::Axis(x) => {
                let cell = self.cell;
                let me: &Grid = self;
                (None, Box::new(move |k| k / me.nx == 0 && me.point(k).re <= x - cell))
            }
        };
        let endpoints: Vec<C64> = match goal {
            Goal::Point(b) => vec![from, b],
            Goal::Axis(_) => vec![from],
        };
        let weight = |k: usize| {
            let v = self.values[k];
            let z = self.point(k);
            if v > 0.0 && endpoints.iter().any(|e| (z - e).norm() < near_radius) {
                f64::INFINITY
            } else {
                v
            }
        };
        let blocked = |a: usize, b: usize| {
            let seg = [self.point(a), self.point(b)];
            barriers.iter().any(|p| polygon::polyline_crosses(&seg, p))
                || cs.alphas.upper().iter().any(|r| polygon::distance_to_segment(*r, seg[0], seg[1]) < 0.5 * self.cell)
        };
        let starts: Vec<usize> = (0..self.values.len())
            .filter(|&k| (self.point(k) - start_pt).norm() <= 1.5 * self.cell)
            .collect();
        if starts.is_empty() {
            return Err(RhpError::Contour(format!("no grid node near the exit from {from}")));
        }

        // Widest-path search for the best attainable bottleneck.
        let mut best = vec![f64::NEG_INFINITY; self.values.len()];
        let mut heap = BinaryHeap::new();
        for &k in &starts {
            best[k] = weight(k);
            heap.push((Ordered(best[k]), k));
        }
        let mut bottleneck = f64::NEG_INFINITY;
        while let Some((Ordered(b), k)) = heap.pop() {
            if b < best[k] {
                continue;
            }
            if is_goal(k) {
                bottleneck = b;
                break;
            }
            for nb in self.neighbours(k) {
                if blocked(k, nb) {
                    continue;
                }
                let c = b.min(weight(nb));
                if c > best[nb] {
                    best[nb] = c;
                    heap.push((Ordered(c), nb));
                }
            }
        }
        if bottleneck == f64::NEG_INFINITY {
            return Err(RhpError::Contour(format!("no admissible path leaves {from}")));
        }

        // Shortest path among nodes that keep a fraction of that bottleneck.
        let floor = if bottleneck > 0.0 { 0.25 * bottleneck.min(1.0) } else { bottleneck };
        let mut dist = vec![f64::INFINITY; self.values.len()];
        let mut prev = vec![usize::MAX; self.values.len()];
        let mut heap = BinaryHeap::new();
        for &k in &starts {
            if weight(k) >= floor {
                dist[k] = (self.point(k) - start_pt).norm();
                heap.push((Ordered(-dist[k]), k));
            }
        }
        let mut reached = None;
        while let Some((Ordered(nd), k)) = heap.pop() {
            let d = -nd;
            if d > dist[k] {
                continue;
            }
            if is_goal(k) {
                reached = Some(k);
                break;
            }
            for nb in self.neighbours(k) {
                if weight(nb) < floor || blocked(k, nb) {
                    continue;
                }
                let c = d + (self.point(nb) - self.point(k)).norm();
                if c < dist[nb] {
                    dist[nb] = c;
                    prev[nb] = k;
                    heap.push((Ordered(-c), nb));
                }
            }
        }
        let mut k = reached.ok_or_else(|| RhpError::Contour(format!("path search from {from} failed")))?;
        let mut nodes = vec![self.point(k)];
        while prev[k] != usize::MAX {
            k = prev[k];
            nodes.push(self.point(k));
        }
        nodes.reverse();
        let mut path = vec![from, start_pt];
        path.extend(nodes.into_iter().filter(|z| (z - start_pt).norm() > 1e-12));
        match (goal, end_pt) {
            (Goal::Point(b), Some(e)) => {
                path.push(e);
                path.push(b);
            }
            _ => {
                let last = *path.last().unwrap();
                path.push(C64::new(last.re, 0.0));
            }
        }
        Ok(remove_loops(polygon::simplify(&dedup(path), 0.25 * self.cell)))
    }
}

/// Cuts out the closed excursions of a polyline at its self-intersections.
fn remove_loops(mut path: Vec<C64>) -> Vec<C64> {
    'outer: loop {
        for i in 0..path.len().saturating_sub(1) {
            for j in (i + 2..path.len() - 1).rev() {
                if let Some((s, _)) = polygon::segment_intersection(path[i], path[i + 1], path[j], path[j + 1]) {
                    let x = path[i] + (path[i + 1] - path[i]) * s;
                    path.splice(i + 1..=j, std::iter::once(x));
                    continue 'outer;
                }
            }
        }
        return path;
    }
}

fn dedup(path: Vec<C64>) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::with_capacity(path.len());
    for z in path {
        if out.last().map_or(true, |l| (z - l).norm() > 1e-12) {
            out.push(z);
        }
    }
    out
}

/// Point at distance `r` from the branchpoint `a` in the middle of the sector
/// where `Im h > 0`.
fn positive_exit(sol: &RhpSolution, a: C64, r: f64) -> Result<C64> {
    let barriers = main_barriers(&sol.contour);
    let m = 72;
    let mut best: Option<(f64, C64)> = None;
    for k in 0..m {
        let z = a + C64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
        if z.im <= 0.0 || barriers.iter().any(|p| polygon::polyline_crosses(&[a, z], p) && (p[0] - a).norm() > 1e-12 && (p.last().unwrap() - a).norm() > 1e-12) {
            continue;
        }
        let v = sol.eval_h(z)?.im;
        if best.map_or(true, |(bv, _)| v > bv) {
            best = Some((v, z));
        }
    }
    best.map(|(_, z)| z).ok_or_else(|| RhpError::Contour(format!("no exit direction from {a}")))
}

#[derive(PartialEq, PartialOrd, Clone, Copy)]
struct Ordered(f64);

impl Eq for Ordered {}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// One candidate genus considered by [`detect_genus`].
#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub genus: u32,
    pub solve: Option<SolveReport>,
    pub signs: Option<SignReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenusDetection {
    /// `None` when no candidate passes, typically close to a breaking curve.
    pub genus: Option<u32>,
    pub candidates: Vec<Candidate>,
}

/// Solves each candidate genus in increasing order and returns the first
/// whose solve converges and whose sign conditions hold.
pub fn detect_genus(
    p: &ProblemParams,
    seeds: &BTreeMap<u32, BranchpointSet>,
    tols: &Tolerances,
    opts: &SignOptions,
) -> Result<GenusDetection> {
    let mut candidates = Vec::new();
    for (&genus, seed) in seeds {
        if genus != 0 && genus != 2 {
            return Err(RhpError::InvalidParams(format!("genus {genus} is not a candidate")));
        }
        let params = ProblemParams::new(p.x, p.t, p.mu, genus)?;
        let mut cand = Candidate { genus, solve: None, signs: None, error: None };
        match newton_solve(seed, &params, tols) {
            Ok(report) => {
                let signs = build_contour(&report.alphas, params.mu)
                    .and_then(|cs| RhpSolution::new(cs, params, tols.quad))
                    .and_then(|sol| check_signs(&sol, opts));
                match signs {
                    Ok(s) => cand.signs = Some(s),
                    Err(e) => cand.error = Some(e.to_string()),
                }
                cand.solve = Some(report);
            }
            Err(e) => cand.error = Some(e.to_string()),
        }
        let ok = cand.signs.as_ref().is_some_and(|s| s.passed);
        candidates.push(cand);
        if ok {
            return Ok(GenusDetection { genus: Some(genus), candidates });
        }
    }
    Ok(GenusDetection { genus: None, candidates })
}
