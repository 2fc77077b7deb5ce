//! The contour `gamma`, its main/complementary partition, the tails of
//! `gamma^inf` and the loop contours used by the quadrature.
//!
//! `gamma` runs `alpha_{4N+1} -> ... -> alpha_1 -> mu/2 -> alpha_0 -> ... -> alpha_{4N}`.
//! Arc pieces are polylines (straight segments unless explicit paths are
//! supplied). Loops are polygons:
//!
//! * the big loop is two lobes, each the pinched offset outline of one half
//!   of `gamma`, meeting only at `mu/2`;
//! * every other loop is a stadium around one piece of one arc, split into
//!   an upper and a lower part.
//!
//! All loops are counterclockwise. The big loop evaluates `R` with the fixed
//! cuts; each small loop carries its own continuation of `R` (see
//! [`LoopRadical`]), anchored so that on a complementary loop it agrees with
//! the fixed branch on the left side of the oriented piece.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, RhpError};
use crate::polygon;
use crate::radical::{BranchpointSet, CutPath, LoopRadical, Radical};
use crate::scattering::eval_t;

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LoopKind {
    Big,
    /// Loop around `gamma_{m,j}`, `j >= 1`.
    Main(usize),
    /// Loop around `gamma_{c,j}`, `j >= 1`.
    Comp(usize),
}

/// How `R` is continued along a loop part.
#[derive(Clone, Debug)]
pub enum Sheet {
    Fixed,
    Local(LoopRadical),
}

#[derive(Clone, Debug)]
pub struct LoopPart {
    /// Closed counterclockwise polygon.
    pub vertices: Vec<C64>,
    /// Vertex 0 is the pinch point `mu/2`.
    pub pinched: bool,
    pub sheet: Sheet,
}

#[derive(Clone, Debug)]
pub struct Loop {
    pub kind: LoopKind,
    pub parts: Vec<LoopPart>,
}

impl Loop {
    pub fn contains(&self, z: C64) -> bool {
        self.parts.iter().any(|p| polygon::contains(&p.vertices, z))
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.parts
            .iter()
            .map(|p| polygon::distance_to_boundary(z, &p.vertices))
            .fold(f64::INFINITY, f64::min)
    }

    /// The part whose polygon contains `z`, if any.
    pub fn part_containing(&self, z: C64) -> Option<&LoopPart> {
        self.parts.iter().find(|p| polygon::contains(&p.vertices, z))
    }

    /// Same loop with every part traversed clockwise.
    pub fn reversed(&self) -> Loop {
        let parts = self
            .parts
            .iter()
            .map(|p| {
                let mut v = p.vertices.clone();
                v.reverse();
                if p.pinched {
                    v.rotate_right(1);
                }
                LoopPart { vertices: v, pinched: p.pinched, sheet: p.sheet.clone() }
            })
            .collect();
        Loop { kind: self.kind, parts }
    }
}

/// Semi-infinite complementary tails of `gamma^inf`: the compact segment
/// from `alpha_{4N}` to `-mu/2 + i0` followed by the real axis to `-infinity`
/// (and the conjugate).
#[derive(Clone, Debug, Serialize)]
pub struct Tails {
    pub upper: Vec<C64>,
    pub axis_start: f64,
}

/// Construction knobs. `paths` overrides the upper-half arc pieces in
/// contour order: `[mu/2 -> alpha_0, alpha_0 -> alpha_2, alpha_2 -> alpha_4, ...]`.
#[derive(Clone, Debug)]
pub struct ContourOptions {
    pub paths: Option<Vec<Vec<C64>>>,
    pub small_offset: f64,
    pub big_offset: f64,
    pub inflate: f64,
    pub cap_steps: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self { paths: None, small_offset: 0.25, big_offset: 0.4, inflate: 1.0, cap_steps: 8 }
    }
}

#[derive(Clone, Debug)]
pub struct ContourSystem {
    pub mu: f64,
    pub z0: f64,
    pub alphas: BranchpointSet,
    /// Full polyline of `gamma` from `alpha_{4N+1}` to `alpha_{4N}`.
    pub gamma: Vec<C64>,
    /// `main_arcs[0]` is the single piece through `mu/2`; `main_arcs[j]` holds
    /// the upper and lower pieces of `gamma_{m,j}`.
    pub main_arcs: Vec<Vec<CutPath>>,
    /// `comp_arcs[j-1]` holds the upper and lower pieces of `gamma_{c,j}`.
    pub comp_arcs: Vec<Vec<CutPath>>,
    pub radical: Radical,
    pub big: Loop,
    pub main_loops: Vec<Loop>,
    pub comp_loops: Vec<Loop>,
    pub tails: Option<Tails>,
    pub small_offset: f64,
    pub big_offset: f64,
}

/// Builds the default contour system for `alphas` at phase parameter `mu`.
pub fn build_contour(alphas: &BranchpointSet, mu: f64) -> Result<ContourSystem> {
    build_contour_with(alphas, mu, &ContourOptions::default())
}

pub fn build_contour_with(alphas: &BranchpointSet, mu: f64, opts: &ContourOptions) -> Result<ContourSystem> {
    let z0 = mu / 2.0;
    let zc = C64::new(z0, 0.0);
    let up = alphas.upper();
    let n = alphas.order();
    let sep = alphas.min_separation(z0);
    if !(sep > 0.0) {
        return Err(RhpError::Contour("branchpoints coincide with each other or with mu/2".into()));
    }

    let pieces: Vec<Vec<C64>> = match &opts.paths {
        Some(p) => {
            if p.len() != 2 * n + 1 {
                return Err(RhpError::Contour(format!("expected {} arc paths, got {}", 2 * n + 1, p.len())));
            }
            p.clone()
        }
        None => {
            let clearance = 2.5 * opts.big_offset * sep * opts.inflate;
            let mut v = vec![detour(zc, up[0], mu, clearance)];
            for k in 1..up.len() {
                v.push(detour(up[k - 1], up[k], mu, clearance));
            }
            v
        }
    };
    check_pieces(&pieces, zc, up)?;

    let mut upper_gamma = vec![zc];
    for p in &pieces {
        upper_gamma.extend_from_slice(&p[1..]);
    }
    let mut gamma: Vec<C64> = upper_gamma.iter().rev().map(|z| z.conj()).collect();
    gamma.extend_from_slice(&upper_gamma[1..]);
    if !upper_gamma[1..].iter().all(|z| z.im > 0.0) || !polyline_is_simple(&upper_gamma) {
        return Err(RhpError::Contour("gamma self-intersects or touches the real axis".into()));
    }
    let f_cut = f_cut_segment(mu);
    if let Some(top) = f_cut {
        if polygon::polyline_crosses(&upper_gamma, &[C64::new(0.0, 0.0), top, C64::new(0.0, 0.0)]) {
            return Err(RhpError::Contour("gamma crosses the cut of f on [0, T]".into()));
        }
    }

    let m0_upper = CutPath::new(pieces[0].clone());
    let mut m0_points: Vec<C64> = pieces[0].iter().rev().map(|z| z.conj()).collect();
    m0_points.extend_from_slice(&pieces[0][1..]);
    let mut main_arcs = vec![vec![CutPath::new(m0_points)]];
    let mut comp_arcs = Vec::new();
    for j in 1..=n {
        let m_up = CutPath::new(pieces[2 * j].clone());
        let c_up = CutPath::new(pieces[2 * j - 1].clone());
        main_arcs.push(vec![m_up.clone(), m_up.reflected()]);
        comp_arcs.push(vec![c_up.clone(), c_up.reflected()]);
    }
    let _ = m0_upper;
    let radical = Radical::new(main_arcs.iter().flatten().cloned().collect());

    let d_small = opts.small_offset * sep * opts.inflate;
    let d_big = opts.big_offset * sep * opts.inflate;
    let big = shrinking(d_big, |d| build_big_loop(&upper_gamma, d, opts.cap_steps, f_cut))?;

    let all_roots = alphas.full();
    let mut main_loops = Vec::new();
    for j in 1..=n {
        main_loops.push(shrinking(d_small, |d| build_small_loop(LoopKind::Main(j), &main_arcs[j], &all_roots, &radical, d, opts))?);
    }
    let mut comp_loops = Vec::new();
    for j in 1..=n {
        comp_loops.push(shrinking(d_small, |d| build_small_loop(LoopKind::Comp(j), &comp_arcs[j - 1], &all_roots, &radical, d, opts))?);
    }
    for l in main_loops.iter().chain(&comp_loops) {
        for part in &l.parts {
            if part.vertices.iter().any(|v| v.im == 0.0)
                || part.vertices.iter().any(|v| v.im.signum() != part.vertices[0].im.signum())
            {
                return Err(RhpError::Contour(format!("loop {:?} touches the real axis", l.kind)));
            }
            if let Some(top) = f_cut {
                let seg = [C64::new(0.0, 0.0), top];
                if polygon::polyline_crosses(&seg, &part.vertices) || polygon::contains(&part.vertices, top * 0.5) {
                    return Err(RhpError::Contour(format!("loop {:?} meets the cut of f", l.kind)));
                }
            }
        }
    }

    Ok(ContourSystem {
        mu,
        z0,
        alphas: alphas.clone(),
        gamma,
        main_arcs,
        comp_arcs,
        radical,
        big,
        main_loops,
        comp_loops,
        tails: None,
        small_offset: d_small,
        big_offset: d_big,
    })
}

/// Retries a loop construction with smaller offsets when sharp turns reject it.
fn shrinking<T>(d: f64, mut build: impl FnMut(f64) -> Result<T>) -> Result<T> {
    let mut radius = d;
    let mut last = None;
    for _ in 0..4 {
        match build(radius) {
            Ok(v) => return Ok(v),
            Err(e @ RhpError::Contour(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
        radius *= 0.5;
    }
    Err(last.unwrap())
}

/// Straight piece from `a` to `b`, bent over the top of the cut of `f` when
/// the chord would pass within `clearance` of it.
fn detour(a: C64, b: C64, mu: f64, clearance: f64) -> Vec<C64> {
    let Some(top) = f_cut_segment(mu) else { return vec![a, b] };
    let origin = C64::new(0.0, 0.0);
    let near = polygon::segment_intersection(a, b, origin, top).is_some()
        || polygon::distance_to_segment(top, a, b) < clearance;
    let crosses_axis_line = (a.re <= 0.0) != (b.re <= 0.0);
    if !near || !crosses_axis_line {
        return vec![a, b];
    }
    let h = top.im + clearance;
    let (first, second) = if a.re > b.re { (clearance, -clearance) } else { (-clearance, clearance) };
    vec![a, C64::new(first, h), C64::new(second, h), b]
}

/// `[0, T]` when `0 < mu < 2`.
fn f_cut_segment(mu: f64) -> Option<C64> {
    let t = eval_t(mu);
    (t.re == 0.0 && t.im > 0.0).then_some(t)
}

fn check_pieces(pieces: &[Vec<C64>], zc: C64, up: &[C64]) -> Result<()> {
    let close = |a: C64, b: C64| (a - b).norm() <= 1e-12 * (1.0 + a.norm());
    for (k, p) in pieces.iter().enumerate() {
        let (s, e) = if k == 0 { (zc, up[0]) } else { (up[k - 1], up[k]) };
        if p.len() < 2 || !close(p[0], s) || !close(*p.last().unwrap(), e) {
            return Err(RhpError::Contour(format!("arc path {k} does not join {s} to {e}")));
        }
    }
    Ok(())
}

fn polyline_is_simple(path: &[C64]) -> bool {
    for i in 0..path.len().saturating_sub(1) {
        for j in i + 2..path.len() - 1 {
            if polygon::segment_intersection(path[i], path[i + 1], path[j], path[j + 1]).is_some() {
                return false;
            }
        }
    }
    true
}

fn build_big_loop(upper_gamma: &[C64], d: f64, cap_steps: usize, f_cut: Option<C64>) -> Result<Loop> {
    let simplified = polygon::simplify(upper_gamma, 0.25 * d);
    let radii: Vec<f64> = simplified
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 { 0.0 } else { d.min(0.8 * v.im) })
        .collect();
    let lobe = polygon::stroke_outline(&simplified, &radii, cap_steps)?;
    if lobe[1..].iter().any(|v| !(v.im > 0.0)) {
        return Err(RhpError::Contour("big loop leaves the upper half-plane".into()));
    }
    if upper_gamma[1..].iter().any(|z| !polygon::contains(&lobe, *z)) {
        return Err(RhpError::Contour("big loop does not enclose gamma".into()));
    }
    if let Some(top) = f_cut {
        let seg = [C64::new(0.0, 0.0), top];
        if polygon::polyline_crosses(&seg, &lobe) || polygon::contains(&lobe, top * 0.5) {
            return Err(RhpError::Contour("big loop meets the cut of f on [0, T]".into()));
        }
    }
    let mut lower: Vec<C64> = lobe.iter().map(|z| z.conj()).collect();
    lower[1..].reverse();
    Ok(Loop {
        kind: LoopKind::Big,
        parts: vec![
            LoopPart { vertices: lobe, pinched: true, sheet: Sheet::Fixed },
            LoopPart { vertices: lower, pinched: true, sheet: Sheet::Fixed },
        ],
    })
}

fn build_small_loop(
    kind: LoopKind,
    pieces: &[CutPath],
    roots: &[C64],
    radical: &Radical,
    d: f64,
    opts: &ContourOptions,
) -> Result<Loop> {
    let mut parts = Vec::new();
    for piece in pieces {
        let simplified = polygon::simplify(&piece.points, 0.25 * d);
        let radii = vec![d; simplified.len()];
        let poly = polygon::stroke_outline(&simplified, &radii, opts.cap_steps)?;
        let (a, b) = (piece.start(), piece.end());
        let close = |r: &C64, s: C64| (r - s).norm() <= 1e-12 * (1.0 + s.norm());
        let others: Vec<C64> = roots.iter().copied().filter(|r| !close(r, a) && !close(r, b)).collect();
        if others.iter().any(|r| polygon::contains(&poly, *r) || polygon::distance_to_boundary(*r, &poly) < 1e-3 * d) {
            return Err(RhpError::Contour(format!("loop {kind:?} encloses a foreign branchpoint")));
        }
        if piece.points.iter().skip(1).take(piece.points.len() - 2).any(|z| !polygon::contains(&poly, *z)) {
            return Err(RhpError::Contour(format!("loop {kind:?} does not enclose its arc")));
        }
        let centre = (a + b) * 0.5;
        let reach = 4.0 * poly.iter().chain(roots).map(|z| (z - centre).norm()).fold(1.0, f64::max);
        let mut rays = Vec::new();
        for r in &others {
            rays.push((*r, ray_direction(*r, centre, &poly, reach)?));
        }
        let (mid, tangent) = piece.point_at(0.5);
        let anchor = mid + C64::new(0.0, 1.0) * tangent * d;
        let reference = radical.eval(anchor)?;
        let lr = LoopRadical::new(piece.clone(), rays, anchor, reference);
        if matches!(kind, LoopKind::Main(_)) {
            for v in &poly {
                let fixed = radical.value(*v);
                if (lr.value(*v) - fixed).norm() > 1e-8 * fixed.norm() {
                    return Err(RhpError::Contour(format!("a cut crosses main loop {kind:?}")));
                }
            }
        }
        parts.push(LoopPart { vertices: poly, pinched: false, sheet: Sheet::Local(lr) });
    }
    Ok(Loop { kind, parts })
}

/// Direction for the cut of an outside root that does not cross `poly`.
fn ray_direction(root: C64, centre: C64, poly: &[C64], reach: f64) -> Result<C64> {
    let base = (root - centre) / (root - centre).norm();
    for k in 0..36 {
        let angle = if k % 2 == 0 { 1.0 } else { -1.0 } * ((k + 1) / 2) as f64 * std::f64::consts::PI / 18.0;
        let u = base * C64::from_polar(1.0, angle);
        if !polygon::polyline_crosses(&[root, root + u * reach], poly) {
            return Ok(u);
        }
    }
    Err(RhpError::Contour(format!("no admissible ray cut for branchpoint {root}")))
}

/// Adds the tails of `gamma^inf`.
pub fn extend_gamma_inf(cs: &ContourSystem) -> ContourSystem {
    let end = *cs.alphas.upper().last().unwrap();
    let mut out = cs.clone();
    out.tails = Some(Tails { upper: vec![end, C64::new(-cs.z0, 0.0)], axis_start: -cs.z0 });
    out
}

#[derive(Serialize)]
struct DumpSegment {
    kind: String,
    endpoints: [[f64; 2]; 2],
    samples: Vec<[f64; 2]>,
}

impl ContourSystem {
    pub fn order(&self) -> usize {
        self.alphas.order()
    }

    /// Upper-half arc pieces in contour order, in the layout accepted by
    /// [`ContourOptions::paths`].
    pub fn upper_pieces(&self) -> Vec<Vec<C64>> {
        let m0 = &self.main_arcs[0][0].points;
        let start = m0.len() / 2;
        let mut out = vec![m0[start..].to_vec()];
        for j in 1..=self.order() {
            out.push(self.comp_arcs[j - 1][0].points.clone());
            out.push(self.main_arcs[j][0].points.clone());
        }
        out
    }

    /// Typical length scale of the configuration.
    pub fn arc_scale(&self) -> f64 {
        self.gamma.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>() / self.gamma.len().max(2) as f64
    }

    pub fn loop_by_kind(&self, kind: LoopKind) -> &Loop {
        match kind {
            LoopKind::Big => &self.big,
            LoopKind::Main(j) => &self.main_loops[j - 1],
            LoopKind::Comp(j) => &self.comp_loops[j - 1],
        }
    }

    /// Loops of the moment matrix in row order `m,1..m,N, c,1..c,N`.
    pub fn row_loops(&self) -> Vec<LoopKind> {
        let n = self.order();
        (1..=n).map(LoopKind::Main).chain((1..=n).map(LoopKind::Comp)).collect()
    }

    /// JSON array of path segments for plotting.
    pub fn dump_json(&self) -> String {
        let mut segs = Vec::new();
        let pt = |z: &C64| [z.re, z.im];
        let mut push = |kind: String, pts: &[C64]| {
            segs.push(DumpSegment {
                kind,
                endpoints: [pt(&pts[0]), pt(pts.last().unwrap())],
                samples: pts.iter().map(pt).collect(),
            });
        };
        for (j, arc) in self.main_arcs.iter().enumerate() {
            for p in arc {
                push(format!("main-{j}"), &p.points);
            }
        }
        for (j, arc) in self.comp_arcs.iter().enumerate() {
            for p in arc {
                push(format!("comp-{}", j + 1), &p.points);
            }
        }
        let loops = std::iter::once(&self.big).chain(&self.main_loops).chain(&self.comp_loops);
        for l in loops {
            for p in &l.parts {
                let mut v = p.vertices.clone();
                v.push(v[0]);
                push(format!("loop-{:?}", l.kind).to_lowercase(), &v);
            }
        }
        if let Some(t) = &self.tails {
            push("tail".into(), &t.upper);
            let lower: Vec<C64> = t.upper.iter().map(|z| z.conj()).collect();
            push("tail".into(), &lower);
        }
        serde_json::to_string_pretty(&segs).expect("contour dump serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn genus2() -> BranchpointSet {
        BranchpointSet::new(vec![C64::new(0.8, 0.9), C64::new(-0.2, 1.3), C64::new(-1.3, 0.8)]).unwrap()
    }

    #[test]
    fn genus_zero_minimal_contour() {
        let a = BranchpointSet::new(vec![C64::new(0.0, 1.0)]).unwrap();
        let cs = build_contour(&a, 2.0).unwrap();
        assert_eq!(cs.gamma, vec![C64::new(0.0, -1.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        assert_eq!(cs.big.parts.len(), 2);
        assert!(cs.main_loops.is_empty() && cs.comp_loops.is_empty());
    }

    #[test]
    fn loops_are_ccw_and_symmetric() {
        let cs = build_contour(&genus2(), 2.0).unwrap();
        for l in std::iter::once(&cs.big).chain(&cs.main_loops).chain(&cs.comp_loops) {
            for p in &l.parts {
                assert!(polygon::signed_area(&p.vertices) > 0.0, "{:?}", l.kind);
                assert!(polygon::is_simple(&p.vertices));
            }
            let up: Vec<C64> = l.parts[0].vertices.iter().map(|z| z.conj()).collect();
            let mut lo = l.parts[1].vertices.clone();
            lo.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            let mut up = up;
            up.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            assert_eq!(up.len(), lo.len());
            for (a, b) in up.iter().zip(&lo) {
                assert!((a - b).norm() < 1e-12, "{:?}: {a} vs {b}", l.kind);
            }
        }
        let mut pts = cs.gamma.clone();
        let mut conj: Vec<C64> = pts.iter().map(|z| z.conj()).collect();
        let key = |a: &C64, b: &C64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
        pts.sort_by(key);
        conj.sort_by(key);
        assert_eq!(pts, conj);
    }

    #[test]
    fn deterministic_build() {
        let a = build_contour(&genus2(), 2.3).unwrap();
        let b = build_contour(&genus2(), 2.3).unwrap();
        assert_eq!(a.dump_json(), b.dump_json());
    }

    #[test]
    fn rejects_crossing_the_f_cut() {
        let a = BranchpointSet::new(vec![C64::new(-0.5, 0.5)]).unwrap();
        let straight = ContourOptions { paths: Some(vec![vec![C64::new(0.5, 0.0), C64::new(-0.5, 0.5)]]), ..Default::default() };
        assert!(build_contour_with(&a, 1.0, &straight).is_err());
    }

    #[test]
    fn default_arcs_detour_over_the_f_cut() {
        let a = BranchpointSet::new(vec![C64::new(-0.5, 0.5)]).unwrap();
        let cs = build_contour(&a, 1.0).unwrap();
        let top = eval_t(1.0).im;
        let piece = &cs.upper_pieces()[0];
        assert_eq!(piece.len(), 4);
        assert!(piece[1].im > top && piece[2].im > top);
    }
}
