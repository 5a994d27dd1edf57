//! Dense Biot-Savart and Newtonian-potential sums.
//!
//! Sources are packed once into structure-of-arrays form with the quadrature
//! weight `h³/4π` folded in, keeping only cells with a nonzero value. Each
//! target then runs a single pass over the sources with four interleaved
//! accumulators that are combined in a fixed order, so the result for a
//! target never depends on how targets are split between workers.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{curl, SampledField, VectorField};
use crate::geometry::{MaskedGrid, PolylineCurve, Vec3};
use crate::par;
use crate::special::gauss_legendre;

/// Where the operator is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    /// Every masked cell of the source grid.
    Cells,
    Points(Vec<Vec3>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsOptions {
    /// Kernel smoothing length. Zero selects the skip-self-cell rule.
    pub regularization: f64,
    /// Minimum number of targets handed to one worker.
    pub chunk: usize,
}

impl Default for BsOptions {
    fn default() -> Self {
        Self { regularization: 0.0, chunk: 64 }
    }
}

impl BsOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.regularization.is_finite() && self.regularization >= 0.0) {
            return Err(Error::InvalidParameter(format!("regularization {} must be finite and >= 0", self.regularization)));
        }
        if self.chunk == 0 {
            return Err(Error::InvalidParameter("chunk must be positive".into()));
        }
        Ok(())
    }
}

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Weighted point sources `w_k V_k` at positions `x_k`.
#[derive(Clone, Debug, Default)]
pub struct SourceSet {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    vx: Vec<f64>,
    vy: Vec<f64>,
    vz: Vec<f64>,
}

impl SourceSet {
    /// Packs the nonzero cells of `f`, weighted by `h³/4π`.
    pub fn from_field(f: &SampledField) -> Self {
        let g = f.grid();
        let w = g.cell_volume() / FOUR_PI;
        let mut s = Self::default();
        for (o, v) in f.values().iter().enumerate() {
            if *v != Vec3::zeros() {
                s.push(g.center(o), v * w);
            }
        }
        s
    }

    /// Sources at arbitrary points; `weights` multiply the values and should
    /// include the quadrature volume (the `1/4π` is added here).
    pub fn from_parts(points: &[Vec3], values: &[Vec3], weights: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySource);
        }
        if points.len() != values.len() || points.len() != weights.len() {
            return Err(Error::InvalidParameter("source arrays differ in length".into()));
        }
        let mut s = Self::default();
        for ((p, v), w) in points.iter().zip(values).zip(weights) {
            let wv = v * (w / FOUR_PI);
            if wv != Vec3::zeros() {
                s.push(*p, wv);
            }
        }
        Ok(s)
    }

    pub fn position(&self, k: usize) -> Vec3 {
        Vec3::new(self.x[k], self.y[k], self.z[k])
    }

    /// Weighted value `h³ V / 4π` of source `k`.
    pub fn weighted_value(&self, k: usize) -> Vec3 {
        Vec3::new(self.vx[k], self.vy[k], self.vz[k])
    }

    fn push(&mut self, p: Vec3, wv: Vec3) {
        self.x.push(p.x);
        self.y.push(p.y);
        self.z.push(p.z);
        self.vx.push(wv.x);
        self.vy.push(wv.y);
        self.vz.push(wv.z);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `Σ w V × (y − x)/|y − x|³` at `t`, skipping coincident sources when
    /// `eps2 == 0`.
    #[inline]
    pub fn curl_kernel_at(&self, t: &Vec3, eps2: f64) -> Vec3 {
        self.curl_kernel_from(0, t, eps2)
    }

    /// [`SourceSet::curl_kernel_at`] restricted to sources `start..`.
    #[inline]
    pub fn curl_kernel_from(&self, start: usize, t: &Vec3, eps2: f64) -> Vec3 {
        let n = self.len();
        let full = start + (n - start.min(n)) / LANES * LANES;
        let mut ax = [0.0f64; LANES];
        let mut ay = [0.0f64; LANES];
        let mut az = [0.0f64; LANES];
        for c in (start..full).step_by(LANES) {
            let xs = &self.x[c..c + LANES];
            let ys = &self.y[c..c + LANES];
            let zs = &self.z[c..c + LANES];
            let vx = &self.vx[c..c + LANES];
            let vy = &self.vy[c..c + LANES];
            let vz = &self.vz[c..c + LANES];
            for l in 0..LANES {
                let dx = t.x - xs[l];
                let dy = t.y - ys[l];
                let dz = t.z - zs[l];
                let inv = inv_cube(dx * dx + dy * dy + dz * dz + eps2);
                ax[l] += (vy[l] * dz - vz[l] * dy) * inv;
                ay[l] += (vz[l] * dx - vx[l] * dz) * inv;
                az[l] += (vx[l] * dy - vy[l] * dx) * inv;
            }
        }
        for k in full..n {
            let dx = t.x - self.x[k];
            let dy = t.y - self.y[k];
            let dz = t.z - self.z[k];
            let inv = inv_cube(dx * dx + dy * dy + dz * dz + eps2);
            ax[0] += (self.vy[k] * dz - self.vz[k] * dy) * inv;
            ay[0] += (self.vz[k] * dx - self.vx[k] * dz) * inv;
            az[0] += (self.vx[k] * dy - self.vy[k] * dx) * inv;
        }
        Vec3::new(lane_sum(&ax), lane_sum(&ay), lane_sum(&az))
    }

    /// `Σ w V /|y − x|` at `t` with the same singular-cell rule.
    #[inline]
    pub fn potential_kernel_at(&self, t: &Vec3, eps2: f64) -> Vec3 {
        let n = self.len();
        let full = n / LANES * LANES;
        let mut ax = [0.0f64; LANES];
        let mut ay = [0.0f64; LANES];
        let mut az = [0.0f64; LANES];
        for c in (0..full).step_by(LANES) {
            let xs = &self.x[c..c + LANES];
            let ys = &self.y[c..c + LANES];
            let zs = &self.z[c..c + LANES];
            let vx = &self.vx[c..c + LANES];
            let vy = &self.vy[c..c + LANES];
            let vz = &self.vz[c..c + LANES];
            for l in 0..LANES {
                let dx = t.x - xs[l];
                let dy = t.y - ys[l];
                let dz = t.z - zs[l];
                let inv = inv_dist(dx * dx + dy * dy + dz * dz + eps2);
                ax[l] += vx[l] * inv;
                ay[l] += vy[l] * inv;
                az[l] += vz[l] * inv;
            }
        }
        for k in full..n {
            let dx = t.x - self.x[k];
            let dy = t.y - self.y[k];
            let dz = t.z - self.z[k];
            let inv = inv_dist(dx * dx + dy * dy + dz * dz + eps2);
            ax[0] += self.vx[k] * inv;
            ay[0] += self.vy[k] * inv;
            az[0] += self.vz[k] * inv;
        }
        Vec3::new(lane_sum(&ax), lane_sum(&ay), lane_sum(&az))
    }
}

/// Independent accumulators per target. Fixed, so the summation tree is too.
pub(crate) const LANES: usize = 8;

// Both helpers select instead of branching so the lane loop vectorises.
#[inline(always)]
pub(crate) fn inv_cube(r2: f64) -> f64 {
    let ok = r2 > 0.0;
    let safe = if ok { r2 } else { 1.0 };
    let v = 1.0 / (safe * safe.sqrt());
    if ok { v } else { 0.0 }
}

#[inline(always)]
fn inv_dist(r2: f64) -> f64 {
    let ok = r2 > 0.0;
    let safe = if ok { r2 } else { 1.0 };
    let v = 1.0 / safe.sqrt();
    if ok { v } else { 0.0 }
}

#[inline(always)]
pub(crate) fn lane_sum(a: &[f64; LANES]) -> f64 {
    ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]))
}

fn resolve_targets(source: &SampledField, targets: &Targets) -> Vec<Vec3> {
    match targets {
        Targets::Cells => source.grid().centers(),
        Targets::Points(p) => p.clone(),
    }
}

fn warn_if_not_solenoidal(source: &SampledField) {
    if let Ok(div) = crate::fields::divergence(source) {
        let vmax = source.max_norm();
        if vmax > 0.0 && div.max_abs() * source.grid().spacing() > 0.1 * vmax {
            log::warn!(
                "Biot-Savart source looks non-solenoidal: max |div| {:.3e} at h = {}",
                div.max_abs(),
                source.grid().spacing()
            );
        }
    }
}

fn eval_kernel(
    sources: &SourceSet,
    pts: &[Vec3],
    opts: &BsOptions,
    kernel: fn(&SourceSet, &Vec3, f64) -> Vec3,
) -> Vec<Vec3> {
    let eps2 = opts.regularization * opts.regularization;
    if sources.is_empty() {
        return vec![Vec3::zeros(); pts.len()];
    }
    par::map_indexed_chunked(pts.len(), opts.chunk, |i| kernel(sources, &pts[i], eps2))
}

/// Midpoint-rule Biot-Savart field of `source` at the requested targets.
pub fn bs_field(source: &SampledField, targets: &Targets, opts: &BsOptions) -> Result<Vec<Vec3>> {
    opts.validate()?;
    warn_if_not_solenoidal(source);
    let pts = resolve_targets(source, targets);
    let sources = SourceSet::from_field(source);
    Ok(eval_kernel(&sources, &pts, opts, SourceSet::curl_kernel_at))
}

/// Biot-Savart field at every masked cell of the source grid.
pub fn bs_on_grid(source: &SampledField, opts: &BsOptions) -> Result<SampledField> {
    let values = bs_field(source, &Targets::Cells, opts)?;
    SampledField::from_values(source.grid(), values)
}

/// Biot-Savart field of `source` sampled on the masked cells of `grid`.
pub fn bs_on(source: &SampledField, grid: &Arc<MaskedGrid>, opts: &BsOptions) -> Result<SampledField> {
    let values = bs_field(source, &Targets::Points(grid.centers()), opts)?;
    SampledField::from_values(grid, values)
}

/// `∫ |x|⁻¹ dx` over the unit cube centred on the origin.
const CUBE_SELF_POTENTIAL: f64 = 2.380_077_363_979_553;

/// Newtonian vector potential `(1/4π) ∫ V(x)/|y − x| dx` at the targets.
///
/// At cell targets the skipped self cell is replaced by its exact integral
/// `V h² C / 4π` (the curl kernel has no such term, being odd).
pub fn vector_potential(source: &SampledField, targets: &Targets, opts: &BsOptions) -> Result<Vec<Vec3>> {
    opts.validate()?;
    let pts = resolve_targets(source, targets);
    let sources = SourceSet::from_field(source);
    let mut out = eval_kernel(&sources, &pts, opts, SourceSet::potential_kernel_at);
    if matches!(targets, Targets::Cells) && opts.regularization == 0.0 {
        let h = source.grid().spacing();
        let c = CUBE_SELF_POTENTIAL * h * h / FOUR_PI;
        for (o, v) in out.iter_mut().enumerate() {
            *v += source.value(o) * c;
        }
    }
    Ok(out)
}

/// Central-difference curl of the vector potential at `points`, using
/// potential evaluations at `p ± delta·e_k`. A `delta` below the cell size
/// keeps the stencil error well under the quadrature error of either sum.
pub fn potential_curl_at(source: &SampledField, points: &[Vec3], delta: f64, opts: &BsOptions) -> Result<Vec<Vec3>> {
    opts.validate()?;
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("stencil offset must be positive, got {delta}")));
    }
    let sources = SourceSet::from_field(source);
    let eps2 = opts.regularization * opts.regularization;
    Ok(par::map_indexed_chunked(points.len(), opts.chunk, |i| {
        let p = points[i];
        let mut d = [Vec3::zeros(); 3];
        for (axis, slot) in d.iter_mut().enumerate() {
            let mut e = Vec3::zeros();
            e[axis] = delta;
            *slot = (sources.potential_kernel_at(&(p + e), eps2) - sources.potential_kernel_at(&(p - e), eps2)) / (2.0 * delta);
        }
        Vec3::new(d[1].z - d[2].y, d[2].x - d[0].z, d[0].y - d[1].x)
    }))
}

/// Pointwise evaluator of the Biot-Savart field of a fixed source.
#[derive(Clone, Debug)]
pub struct BiotSavartField {
    sources: SourceSet,
    eps2: f64,
}

impl BiotSavartField {
    pub fn new(source: &SampledField, opts: &BsOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self { sources: SourceSet::from_field(source), eps2: opts.regularization * opts.regularization })
    }

    pub fn from_sources(sources: SourceSet, opts: &BsOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self { sources, eps2: opts.regularization * opts.regularization })
    }

    /// Values at many points, parallel over points.
    pub fn eval_many(&self, pts: &[Vec3]) -> Vec<Vec3> {
        par::map_indexed_chunked(pts.len(), 16, |i| self.sources.curl_kernel_at(&pts[i], self.eps2))
    }
}

impl VectorField for BiotSavartField {
    fn eval(&self, p: &Vec3) -> Vec3 {
        self.sources.curl_kernel_at(p, self.eps2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurlInverseReport {
    /// `‖∇×BS(V) − V‖ / ‖V‖` over the stencil cells.
    pub residual: f64,
    pub n_cells: usize,
    pub h: f64,
}

/// Compares the stencil curl of `BS(V)` with `V` at cells of depth ≥ 2.
pub fn verify_curl_inverse(source: &SampledField, opts: &BsOptions) -> Result<CurlInverseReport> {
    let h = source.grid().spacing();
    let bs = bs_on_grid(source, opts)?;
    let c = curl(&bs)?;
    let residual = if source.support().is_empty() { 0.0 } else { c.relative_residual(source)? };
    Ok(CurlInverseReport { residual, n_cells: c.n_cells(), h })
}

/// Number of Gauss-Legendre nodes per polyline segment in [`loop_integral`].
pub const LOOP_NODES: usize = 3;

/// Circulation `∮ F·dl` along a closed polyline, integrating each straight
/// segment with three-point Gauss-Legendre.
pub fn loop_integral<F: VectorField + ?Sized>(f: &F, curve: &PolylineCurve) -> Result<f64> {
    if !curve.is_closed() {
        return Err(Error::OpenCurve);
    }
    let (nodes, weights) = gauss_legendre(LOOP_NODES);
    let n = curve.n_segments();
    let per_segment = par::map_indexed(n, |k| {
        let (a, b) = curve.segment(k);
        let d = b - a;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            let p = a + d * (0.5 * (x + 1.0));
            s += 0.5 * w * f.eval(&p).dot(&d);
        }
        s
    });
    Ok(per_segment.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{AnalyticField, FnField};
    use crate::geometry::{rotation_about, AxisymTorus, Ball, Domain, Frame, Mat3};
    use std::f64::consts::PI;

    fn torus_grid(r: f64, a: f64, h: f64) -> Arc<MaskedGrid> {
        Arc::new(MaskedGrid::build(&Domain::Torus(AxisymTorus::standard(r, a).unwrap()), h, 2).unwrap())
    }

    /// On-axis field of a circular filament of radius R carrying unit current,
    /// averaged over the bump cross-section by direct 2-D quadrature of the
    /// filament formula `R² / (2 (R² + z²)^{3/2})`.
    fn tube_axis_oracle(rc: f64, eps: f64) -> f64 {
        let n = 400;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) / n as f64 * eps;
            for j in 0..n {
                let b = (j as f64 + 0.5) / n as f64 * 2.0 * PI;
                let w = crate::fields::bump(r / eps) * r;
                let rad = rc + r * b.cos();
                let z = r * b.sin();
                num += w * rad * rad / (2.0 * (rad * rad + z * z).powf(1.5));
                den += w;
            }
        }
        num / den
    }

    #[test]
    fn potential_self_cell_term() {
        // Gaussian density e^{-r²/s²}: potential M erf(r/s)/(4πr) with M = π^{3/2}s³
        let s = 0.3;
        let ball = Domain::Ball(Ball::new(Vec3::zeros(), 5.0 * s).unwrap());
        let g = Arc::new(MaskedGrid::build(&ball, 0.05, 1).unwrap());
        let v = SampledField::sample(&g, &FnField(|p: &Vec3| Vec3::x() * (-p.norm_squared() / (s * s)).exp()));
        let mass = PI.powf(1.5) * s * s * s;
        let oracle = |r: f64| mass * libm::erf(r / s) / (4.0 * PI * r);
        let targets: Vec<usize> = (0..g.len()).filter(|&o| g.center(o).norm() < 0.4).collect();
        let p = vector_potential(&v, &Targets::Cells, &BsOptions::default()).unwrap();
        let pts: Vec<Vec3> = targets.iter().map(|&o| g.center(o)).collect();
        let skip = vector_potential(&v, &Targets::Points(pts.clone()), &BsOptions::default()).unwrap();
        let (mut with_self, mut without) = (0.0f64, 0.0f64);
        for (k, &o) in targets.iter().enumerate() {
            let exact = oracle(pts[k].norm());
            with_self = with_self.max((p[o].x - exact).abs() / exact);
            without = without.max((skip[k].x - exact).abs() / exact);
        }
        assert!(with_self < 2e-3, "{with_self}");
        assert!(without > 5.0 * with_self, "{without} vs {with_self}");
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = torus_grid(1.0, 0.3, 0.1);
        let f = SampledField::zeros(&g);
        let out = bs_field(&f, &Targets::Cells, &BsOptions::default()).unwrap();
        assert!(out.iter().all(|v| *v == Vec3::zeros()));
        let out = vector_potential(&f, &Targets::Points(vec![Vec3::zeros()]), &BsOptions::default()).unwrap();
        assert_eq!(out[0], Vec3::zeros());
        assert_eq!(verify_curl_inverse(&f, &BsOptions::default()).unwrap().residual, 0.0);
    }

    #[test]
    fn tube_center_field_matches_loop_current() {
        let g = torus_grid(1.0, 0.25, 0.05);
        let tube = AnalyticField::tube(Frame::standard(), 1.0, 0.2, 1.0).unwrap();
        let f = SampledField::sample(&g, &tube);
        let b = bs_field(&f, &Targets::Points(vec![Vec3::zeros()]), &BsOptions::default()).unwrap()[0];
        let oracle = tube_axis_oracle(1.0, 0.2);
        assert!((oracle - 0.5).abs() < 0.01);
        assert!(b.x.abs() < 1e-3 && b.y.abs() < 1e-3);
        assert!((b.z / 0.5 - 1.0).abs() < 0.03, "B_z {}", b.z);
        assert!((b.z / oracle - 1.0).abs() < 0.03);
    }

    #[test]
    fn rotation_equivariance() {
        let rot = rotation_about(&Vec3::new(0.3, -0.5, 0.8), 0.7);
        let shift = Vec3::zeros();
        let frame = Frame::from_axis(Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.0, 0.3, 1.0)).unwrap();
        let tube = TubeFieldPair::new(frame, &rot, &shift);
        let t = Vec3::new(0.2, -0.4, 0.3);
        let b0 = tube.a.eval(&t);
        let b1 = tube.b.eval(&(rot * t));
        assert!((rot * b0 - b1).norm() <= 1e-12 * b0.norm().max(1e-30) + 1e-15);
    }

    /// Point sources built directly from an analytic tube and its rotated copy.
    struct TubeFieldPair {
        a: BiotSavartField,
        b: BiotSavartField,
    }

    impl TubeFieldPair {
        fn new(frame: Frame, rot: &Mat3, shift: &Vec3) -> Self {
            let tube = AnalyticField::tube(frame.clone(), 1.0, 0.3, 1.0).unwrap();
            let moved = AnalyticField::tube(frame.moved(rot, shift), 1.0, 0.3, 1.0).unwrap();
            let h = 0.08;
            let mut pts = Vec::new();
            for i in -20..=20 {
                for j in -20..=20 {
                    for k in -8..=8 {
                        pts.push(Vec3::new(i as f64, j as f64, k as f64) * h);
                    }
                }
            }
            let local: Vec<Vec3> = pts.iter().map(|p| frame.to_world(p)).collect();
            let vals: Vec<Vec3> = local.iter().map(|p| tube.eval(p)).collect();
            let moved_pts: Vec<Vec3> = local.iter().map(|p| rot * p + shift).collect();
            let moved_vals: Vec<Vec3> = moved_pts.iter().map(|p| moved.eval(p)).collect();
            let w = vec![h * h * h; pts.len()];
            let opts = BsOptions::default();
            Self {
                a: BiotSavartField::from_sources(SourceSet::from_parts(&local, &vals, &w).unwrap(), &opts).unwrap(),
                b: BiotSavartField::from_sources(SourceSet::from_parts(&moved_pts, &moved_vals, &w).unwrap(), &opts)
                    .unwrap(),
            }
        }
    }

    #[test]
    fn potential_curl_matches_bs() {
        let g = torus_grid(1.0, 0.35, 0.05);
        let tube = AnalyticField::tube(Frame::standard(), 1.0, 0.3, 1.0).unwrap();
        let f = SampledField::sample(&g, &tube);
        let opts = BsOptions::default();
        let pts: Vec<Vec3> = g.stencil_cells().iter().step_by(7).map(|&o| g.center(o)).collect();
        let cp = potential_curl_at(&f, &pts, 0.5 * g.spacing(), &opts).unwrap();
        let bs = bs_field(&f, &Targets::Points(pts.clone()), &opts).unwrap();
        let num: f64 = cp.iter().zip(&bs).map(|(a, b)| (a - b).norm_squared()).sum();
        let den: f64 = bs.iter().map(|b| b.norm_squared()).sum();
        let res = (num / den).sqrt();
        assert!(res < 0.03, "residual {res}");
    }

    #[test]
    fn linearity() {
        let g = torus_grid(1.0, 0.35, 0.08);
        let t1 = SampledField::sample(&g, &AnalyticField::tube(Frame::standard(), 1.0, 0.3, 1.0).unwrap());
        let t2 = SampledField::sample(
            &g,
            &AnalyticField::Tube(crate::fields::TubeField::twisted(Frame::standard(), 1.0, 0.3, 0.5, 1.5).unwrap()),
        );
        let combo = t1.axpby(2.0, &t2, -0.7).unwrap();
        let opts = BsOptions::default();
        let pts = Targets::Points(vec![Vec3::new(0.0, 0.0, 0.5), Vec3::new(1.0, 0.1, 0.0)]);
        let a = bs_field(&t1, &pts, &opts).unwrap();
        let b = bs_field(&t2, &pts, &opts).unwrap();
        let c = bs_field(&combo, &pts, &opts).unwrap();
        let pa = vector_potential(&t1, &pts, &opts).unwrap();
        let pc = vector_potential(&t1.scaled(3.0), &pts, &opts).unwrap();
        for i in 0..2 {
            assert!((c[i] - (a[i] * 2.0 - b[i] * 0.7)).norm() < 1e-12 * c[i].norm().max(1.0));
            assert!((pc[i] - pa[i] * 3.0).norm() < 1e-12 * pc[i].norm().max(1.0));
        }
    }

    #[test]
    fn bs_output_is_solenoidal() {
        let g = torus_grid(1.0, 0.4, 0.06);
        let f = SampledField::sample(&g, &AnalyticField::tube(Frame::standard(), 1.0, 0.35, 1.0).unwrap());
        let bs = bs_on_grid(&f, &BsOptions::default()).unwrap();
        let div = crate::fields::divergence(&bs).unwrap();
        assert!(div.max_abs() <= 5e-2 * f.max_norm(), "div {}", div.max_abs());
    }

    #[test]
    fn curl_inverse_on_tube() {
        let g = torus_grid(1.0, 0.5, 1.0 / 16.0);
        let f = SampledField::sample(&g, &AnalyticField::tube(Frame::standard(), 1.0, 0.45, 1.0).unwrap());
        let rep = verify_curl_inverse(&f, &BsOptions::default()).unwrap();
        assert!(rep.residual <= 0.05, "residual {}", rep.residual);
    }

    #[test]
    fn regularization_changes_little_far_away() {
        let g = torus_grid(1.0, 0.35, 0.08);
        let f = SampledField::sample(&g, &AnalyticField::tube(Frame::standard(), 1.0, 0.3, 1.0).unwrap());
        let pts = Targets::Points(vec![Vec3::new(0.0, 0.0, 3.0)]);
        let a = bs_field(&f, &pts, &BsOptions::default()).unwrap()[0];
        let b = bs_field(&f, &pts, &BsOptions { regularization: 1e-3, chunk: 8 }).unwrap()[0];
        assert!((a - b).norm() < 1e-6 * a.norm());
        assert!(BsOptions { regularization: f64::NAN, chunk: 1 }.validate().is_err());
    }

    #[test]
    fn amperian_loops() {
        let g = torus_grid(1.0, 0.35, 0.05);
        let f = SampledField::sample(&g, &AnalyticField::tube(Frame::standard(), 1.0, 0.3, 1.0).unwrap());
        let bs = BiotSavartField::new(&f, &BsOptions::default()).unwrap();
        // small loop around the tube core in the xz-plane, threaded once
        let around = PolylineCurve::circle(
            &Frame { origin: Vec3::new(1.0, 0.0, 0.0), axes: Mat3::from_columns(&[Vec3::x(), Vec3::z(), -Vec3::y()]) },
            0.5,
            128,
        )
        .unwrap();
        let c = loop_integral(&bs, &around).unwrap();
        assert!((c.abs() - 1.0).abs() < 0.02, "threaded {c}");
        // coplanar circle in the hole bounds a disk the tube never crosses
        let hole = PolylineCurve::circle(&Frame::standard(), 0.4, 128).unwrap();
        let c = loop_integral(&bs, &hole).unwrap();
        assert!(c.abs() < 0.02, "hole circle {c}");
        let far = PolylineCurve::circle(&Frame::from_axis(Vec3::new(8.0, 0.0, 0.0), Vec3::z()).unwrap(), 0.5, 64).unwrap();
        assert!(loop_integral(&bs, &far).unwrap().abs() < 1e-3);
    }

    #[test]
    fn constant_field_has_zero_circulation() {
        let c = FnField(|_: &Vec3| Vec3::new(0.3, -1.2, 2.0));
        let poly = PolylineCurve::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.2, 0.0), Vec3::new(0.5, 1.5, 0.7), Vec3::new(-0.3, 0.4, -0.2)],
            true,
        )
        .unwrap();
        assert!(loop_integral(&c, &poly).unwrap().abs() < 1e-12);
        let open = PolylineCurve::new(vec![Vec3::zeros(), Vec3::x()], false).unwrap();
        assert_eq!(loop_integral(&c, &open), Err(Error::OpenCurve));
    }

    #[test]
    fn empty_explicit_source() {
        assert_eq!(SourceSet::from_parts(&[], &[], &[]).unwrap_err(), Error::EmptySource);
        let _ = Ball::new(Vec3::zeros(), 1.0).unwrap();
    }
}
