//! Loop integrals `∮ k(ζ) w(ζ) / R(ζ) dζ` by adaptive Gauss–Kronrod panels.
//!
//! A loop part is a closed polygon; each edge starts as one panel, except the
//! two edges meeting the pinch point `mu/2`, which are pre-split
//! geometrically (ratio 1/2 down to length 1e-12) toward the pinch. Panels
//! are bisected globally by largest error until the summed estimate meets the
//! tolerance, taken relative to `∮ |integrand|` once that exceeds one. All specs on one loop share the `R`, `f`, `f'`, `f_mu`
//! evaluations at every node.
//!
//! The final panel partition can be kept as a [`Mesh`] and replayed on a
//! perturbed contour with the same vertex structure; finite-difference checks
//! use this so the discretisation does not change between the two sides of a
//! difference quotient.

use std::collections::{BTreeMap, BinaryHeap};

use num_complex::Complex64;

use crate::contour::{ContourSystem, Loop, LoopKind, LoopPart, Sheet};
use crate::error::{Result, RhpError};
use crate::params::Side;
use crate::radical::Radical;
use crate::scattering::ScatteringFunction;

type C64 = Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_PANELS: usize = 40_000;
const GRADING_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// `ζ^n`
    Power(u32),
    /// `1 / (ζ - z)`
    Cauchy(C64),
    /// `1 / (ζ - z)^2`
    CauchySquared(C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weight {
    One,
    F,
    FMu,
    FPrime,
    FX,
    FT,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralSpec {
    pub loop_kind: LoopKind,
    pub kernel: Kernel,
    pub weight: Weight,
}

impl IntegralSpec {
    pub fn new(loop_kind: LoopKind, kernel: Kernel, weight: Weight) -> Self {
        Self { loop_kind, kernel, weight }
    }
}

/// Panel partition of every loop part, as `(edge, s0, s1)` in edge parameters.
#[derive(Clone, Debug, Default)]
pub struct Mesh {
    parts: BTreeMap<(LoopKey, usize), Vec<(usize, f64, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct LoopKey(u8, usize);

impl From<LoopKind> for LoopKey {
    fn from(k: LoopKind) -> Self {
        match k {
            LoopKind::Big => LoopKey(0, 0),
            LoopKind::Main(j) => LoopKey(1, j),
            LoopKind::Comp(j) => LoopKey(2, j),
        }
    }
}

impl Mesh {
    pub fn panel_count(&self) -> usize {
        self.parts.values().map(Vec::len).sum()
    }
}

/// Single integral.
pub fn integrate(spec: &IntegralSpec, cs: &ContourSystem, f: &dyn ScatteringFunction, tol: f64) -> Result<C64> {
    Ok(integrate_family(std::slice::from_ref(spec), cs, f, tol)?[0])
}

/// Batch of integrals sharing integrand evaluations per loop.
pub fn integrate_family(
    specs: &[IntegralSpec],
    cs: &ContourSystem,
    f: &dyn ScatteringFunction,
    tol: f64,
) -> Result<Vec<C64>> {
    Ok(integrate_family_mesh(specs, cs, f, tol, None)?.0)
}

/// Batch integration that either adapts (returning the mesh it settled on)
/// or replays a given mesh without adaptation.
pub fn integrate_family_mesh(
    specs: &[IntegralSpec],
    cs: &ContourSystem,
    f: &dyn ScatteringFunction,
    tol: f64,
    mesh: Option<&Mesh>,
) -> Result<(Vec<C64>, Mesh)> {
    if !(tol > 0.0) {
        return Err(RhpError::InvalidParams("quadrature tolerance must be positive".into()));
    }
    let mut out = vec![C64::new(0.0, 0.0); specs.len()];
    let mut new_mesh = Mesh::default();
    let mut groups: BTreeMap<LoopKey, (LoopKind, Vec<usize>)> = BTreeMap::new();
    for (i, s) in specs.iter().enumerate() {
        groups.entry(s.loop_kind.into()).or_insert((s.loop_kind, Vec::new())).1.push(i);
    }
    for (key, (kind, idx)) in groups {
        let lp = cs.loop_by_kind(kind);
        let local: Vec<(Kernel, Weight)> = idx.iter().map(|&i| (specs[i].kernel, specs[i].weight)).collect();
        let part_meshes: Vec<Option<&Vec<(usize, f64, f64)>>> = (0..lp.parts.len())
            .map(|p| mesh.and_then(|m| m.parts.get(&(key, p))))
            .collect();
        let (vals, used) = integrate_loop_impl(lp, &local, &cs.radical, f, tol, &part_meshes)?;
        for (k, &i) in idx.iter().enumerate() {
            out[i] = vals[k];
        }
        for (p, m) in used.into_iter().enumerate() {
            new_mesh.parts.insert((key, p), m);
        }
    }
    Ok((out, new_mesh))
}

/// Integrates `(kernel, weight)` pairs over an arbitrary loop.
pub fn integrate_loop(
    lp: &Loop,
    items: &[(Kernel, Weight)],
    radical: &Radical,
    f: &dyn ScatteringFunction,
    tol: f64,
) -> Result<Vec<C64>> {
    let none = vec![None; lp.parts.len()];
    Ok(integrate_loop_impl(lp, items, radical, f, tol, &none)?.0)
}

type PartMesh = Vec<(usize, f64, f64)>;

fn integrate_loop_impl(
    lp: &Loop,
    items: &[(Kernel, Weight)],
    radical: &Radical,
    f: &dyn ScatteringFunction,
    tol: f64,
    meshes: &[Option<&PartMesh>],
) -> Result<(Vec<C64>, Vec<PartMesh>)> {
    let scale = lp.parts.iter().flat_map(|p| &p.vertices).map(|v| v.norm()).fold(1.0, f64::max);
    for (k, _) in items {
        if let Kernel::Cauchy(z) | Kernel::CauchySquared(z) = k {
            if lp.distance(*z) <= 1e-10 * scale {
                return Err(RhpError::Placement(format!("Cauchy point {z} lies on loop {:?}", lp.kind)));
            }
        }
    }
    let mut total = vec![C64::new(0.0, 0.0); items.len()];
    let mut used = Vec::new();
    let part_tol = tol / lp.parts.len() as f64;
    for (pi, part) in lp.parts.iter().enumerate() {
        let ev = Evaluator { part, items, radical, f };
        let (vals, mesh) = match meshes.get(pi).copied().flatten() {
            Some(m) => (ev.on_mesh(m)?, m.clone()),
            None => ev.adaptive(part_tol)?,
        };
        for (t, v) in total.iter_mut().zip(vals) {
            *t += v;
        }
        used.push(mesh);
    }
    Ok((total, used))
}

struct Evaluator<'a> {
    part: &'a LoopPart,
    items: &'a [(Kernel, Weight)],
    radical: &'a Radical,
    f: &'a dyn ScatteringFunction,
}

struct Panel {
    edge: usize,
    s0: f64,
    s1: f64,
    kronrod: Vec<C64>,
    err: f64,
    /// `max_j ∫ |integrand_j|` over the panel.
    mag: f64,
}

struct Ranked(f64, usize);

impl PartialEq for Ranked {
    fn eq(&self, o: &Self) -> bool {
        self.0 == o.0 && self.1 == o.1
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Ranked {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0).then(o.1.cmp(&self.1))
    }
}

impl<'a> Evaluator<'a> {
    fn edge(&self, e: usize) -> (C64, C64) {
        let v = &self.part.vertices;
        (v[e], v[(e + 1) % v.len()])
    }

    fn initial_panels(&self) -> Vec<(usize, f64, f64)> {
        let n = self.part.vertices.len();
        let mut out = Vec::new();
        for e in 0..n {
            let graded_start = self.part.pinched && e == 0;
            let graded_end = self.part.pinched && e == n - 1;
            if !(graded_start || graded_end) {
                out.push((e, 0.0, 1.0));
                continue;
            }
            let (a, b) = self.edge(e);
            let len = (b - a).norm();
            let levels = ((len / GRADING_FLOOR).log2().ceil() as i32).max(1);
            let mut cuts: Vec<f64> = (0..=levels).map(|k| 0.5f64.powi(k)).collect();
            cuts.push(0.0);
            cuts.reverse();
            for w in cuts.windows(2) {
                if graded_start {
                    out.push((e, w[0], w[1]));
                } else {
                    out.push((e, 1.0 - w[1], 1.0 - w[0]));
                }
            }
        }
        if self.part.pinched {
            out.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        }
        out
    }

    fn weights_needed(&self) -> [bool; 5] {
        let mut need = [false; 5];
        for (_, w) in self.items {
            match w {
                Weight::One => {}
                Weight::F => need[0] = true,
                Weight::FMu => need[1] = true,
                Weight::FPrime => need[2] = true,
                Weight::FX => need[3] = true,
                Weight::FT => need[4] = true,
            }
        }
        need
    }

    /// Integrand vector (already divided by `R`) at `zeta`.
    fn integrand(&self, zeta: C64, need: &[bool; 5], out: &mut [C64]) -> Result<()> {
        let r = match &self.part.sheet {
            Sheet::Fixed => self.radical.value(zeta),
            Sheet::Local(lr) => lr.value(zeta),
        };
        let inv_r = 1.0 / r;
        let mut w = [C64::new(0.0, 0.0); 5];
        if need.iter().any(|b| *b) {
            let side = Side::of(zeta).ok_or_else(|| {
                RhpError::Placement(format!("quadrature node {zeta} on the real axis"))
            })?;
            if need[0] {
                w[0] = self.f.value(zeta, side)?;
            }
            if need[1] {
                w[1] = self.f.mu_derivative(zeta, side)?;
            }
            if need[2] {
                w[2] = self.f.z_derivative(zeta, side)?;
            }
            if need[3] {
                w[3] = self.f.x_derivative(zeta, side)?;
            }
            if need[4] {
                w[4] = self.f.t_derivative(zeta, side)?;
            }
        }
        for (o, (k, wt)) in out.iter_mut().zip(self.items) {
            let kv = match k {
                Kernel::Power(n) => zeta.powu(*n),
                Kernel::Cauchy(z) => 1.0 / (zeta - z),
                Kernel::CauchySquared(z) => {
                    let d = zeta - z;
                    1.0 / (d * d)
                }
            };
            let wv = match wt {
                Weight::One => C64::new(1.0, 0.0),
                Weight::F => w[0],
                Weight::FMu => w[1],
                Weight::FPrime => w[2],
                Weight::FX => w[3],
                Weight::FT => w[4],
            };
            *o = kv * wv * inv_r;
        }
        Ok(())
    }

    fn panel(&self, edge: usize, s0: f64, s1: f64, need: &[bool; 5]) -> Result<Panel> {
        let (a, b) = self.edge(edge);
        let pa = a + (b - a) * s0;
        let pb = a + (b - a) * s1;
        let mid = (pa + pb) * 0.5;
        let half = (pb - pa) * 0.5;
        let m = self.items.len();
        let mut kr = vec![C64::new(0.0, 0.0); m];
        let mut ga = vec![C64::new(0.0, 0.0); m];
        let mut abs = vec![0.0; m];
        let mut buf = vec![C64::new(0.0, 0.0); m];
        self.integrand(mid, need, &mut buf)?;
        for j in 0..m {
            kr[j] = buf[j] * WGK[7];
            ga[j] = buf[j] * WG[3];
            abs[j] = buf[j].norm() * WGK[7];
        }
        for k in 0..7 {
            for sgn in [-1.0, 1.0] {
                self.integrand(mid + half * (sgn * XGK[k]), need, &mut buf)?;
                for j in 0..m {
                    kr[j] += buf[j] * WGK[k];
                    abs[j] += buf[j].norm() * WGK[k];
                    if k % 2 == 1 {
                        ga[j] += buf[j] * WG[k / 2];
                    }
                }
            }
        }
        let mut err: f64 = 0.0;
        let mut mag: f64 = 0.0;
        for j in 0..m {
            kr[j] *= half;
            ga[j] *= half;
            let resabs = abs[j] * half.norm();
            mag = mag.max(resabs);
            // Differences at the rounding level of the panel carry no information.
            let e = (kr[j] - ga[j]).norm();
            if e > 50.0 * f64::EPSILON * resabs {
                err = err.max(e);
            }
        }
        if kr.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(RhpError::Quadrature { error: f64::INFINITY, worst: mid });
        }
        Ok(Panel { edge, s0, s1, kronrod: kr, err, mag })
    }

    fn adaptive(&self, tol: f64) -> Result<(Vec<C64>, PartMesh)> {
        let need = self.weights_needed();
        let mut panels: Vec<Option<Panel>> = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut total_err = 0.0;
        let mut total_mag = 0.0;
        for (e, s0, s1) in self.initial_panels() {
            let p = self.panel(e, s0, s1, &need)?;
            total_err += p.err;
            total_mag += p.mag;
            heap.push(Ranked(p.err, panels.len()));
            panels.push(Some(p));
        }
        // Relative to the size of the integrand once that exceeds one.
        while total_err > tol * f64::max(1.0, total_mag) {
            if panels.len() > MAX_PANELS {
                let Ranked(err, i) = *heap.peek().unwrap();
                let p = panels[i].as_ref().unwrap();
                let (a, b) = self.edge(p.edge);
                return Err(RhpError::Quadrature { error: err, worst: a + (b - a) * p.s0 });
            }
            let Ranked(_, i) = heap.pop().unwrap();
            let p = panels[i].take().unwrap();
            let sm = 0.5 * (p.s0 + p.s1);
            if !(sm > p.s0 && sm < p.s1) {
                let (a, b) = self.edge(p.edge);
                return Err(RhpError::Quadrature { error: p.err, worst: a + (b - a) * p.s0 });
            }
            let left = self.panel(p.edge, p.s0, sm, &need)?;
            let right = self.panel(p.edge, sm, p.s1, &need)?;
            total_err += left.err + right.err - p.err;
            total_mag += left.mag + right.mag - p.mag;
            for q in [left, right] {
                heap.push(Ranked(q.err, panels.len()));
                panels.push(Some(q));
            }
        }
        let mut live: Vec<Panel> = panels.into_iter().flatten().collect();
        live.sort_by(|x, y| x.edge.cmp(&y.edge).then(x.s0.total_cmp(&y.s0)));
        let mesh = live.iter().map(|p| (p.edge, p.s0, p.s1)).collect();
        Ok((pairwise_sum(&live, self.items.len()), mesh))
    }

    fn on_mesh(&self, mesh: &PartMesh) -> Result<Vec<C64>> {
        let need = self.weights_needed();
        let n = self.part.vertices.len();
        let mut live = Vec::with_capacity(mesh.len());
        for &(e, s0, s1) in mesh {
            if e >= n {
                return Err(RhpError::Placement("mesh does not match the loop structure".into()));
            }
            live.push(self.panel(e, s0, s1, &need)?);
        }
        Ok(pairwise_sum(&live, self.items.len()))
    }
}

fn pairwise_sum(panels: &[Panel], m: usize) -> Vec<C64> {
    match panels.len() {
        0 => vec![C64::new(0.0, 0.0); m],
        1 => panels[0].kronrod.clone(),
        n => {
            let (a, b) = panels.split_at(n / 2);
            pairwise_sum(a, m).into_iter().zip(pairwise_sum(b, m)).map(|(x, y)| x + y).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::build_contour;
    use crate::radical::BranchpointSet;
    use crate::scattering::{NlsScattering, ZeroScattering};
    use crate::ProblemParams;
    use std::f64::consts::PI;

    #[test]
    fn genus_zero_residue_at_infinity() {
        let a = BranchpointSet::new(vec![C64::new(0.3, 0.8)]).unwrap();
        let cs = build_contour(&a, 2.0).unwrap();
        let f = ZeroScattering { mu: 2.0 };
        let specs = [
            IntegralSpec::new(LoopKind::Big, Kernel::Power(0), Weight::One),
            IntegralSpec::new(LoopKind::Big, Kernel::Power(1), Weight::One),
        ];
        let v = integrate_family(&specs, &cs, &f, 1e-12).unwrap();
        let i2pi = C64::new(0.0, 2.0 * PI);
        assert!((v[0] + i2pi).norm() < 1e-10, "{}", v[0]);
        assert!((v[1] + i2pi * 0.3).norm() < 1e-10, "{}", v[1]);
    }

    #[test]
    fn batch_equals_single_and_empty_is_empty() {
        let p = ProblemParams::new(0.5, 0.1, 1.6, 0).unwrap();
        let f = NlsScattering::new(&p);
        let a = BranchpointSet::new(vec![C64::new(0.6, 0.9)]).unwrap();
        let cs = build_contour(&a, p.mu).unwrap();
        let specs = [
            IntegralSpec::new(LoopKind::Big, Kernel::Cauchy(C64::new(0.6, 0.9)), Weight::F),
            IntegralSpec::new(LoopKind::Big, Kernel::Power(2), Weight::FMu),
        ];
        let batch = integrate_family(&specs, &cs, &f, 1e-12).unwrap();
        for (s, b) in specs.iter().zip(&batch) {
            let single = integrate(s, &cs, &f, 1e-12).unwrap();
            assert!((single - b).norm() < 1e-13);
        }
        assert!(integrate_family(&[], &cs, &f, 1e-12).unwrap().is_empty());
    }

    #[test]
    fn zero_weight_gives_zero() {
        let a = BranchpointSet::new(vec![C64::new(0.6, 0.9)]).unwrap();
        let cs = build_contour(&a, 2.0).unwrap();
        let f = ZeroScattering { mu: 2.0 };
        let v = integrate(&IntegralSpec::new(LoopKind::Big, Kernel::Power(3), Weight::F), &cs, &f, 1e-10).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
    }

    #[test]
    fn cauchy_on_loop_is_rejected() {
        let a = BranchpointSet::new(vec![C64::new(0.6, 0.9)]).unwrap();
        let cs = build_contour(&a, 2.0).unwrap();
        let f = ZeroScattering { mu: 2.0 };
        let z = cs.big.parts[0].vertices[3];
        let r = integrate(&IntegralSpec::new(LoopKind::Big, Kernel::Cauchy(z), Weight::One), &cs, &f, 1e-10);
        assert!(matches!(r, Err(RhpError::Placement(_))));
    }
}
