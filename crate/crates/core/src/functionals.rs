//! Scalar functionals: writhe, linking, helicity estimators, ΔH and energy rate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::biot_savart::{bs_on, bs_on_grid, BiotSavartField, BsOptions, SourceSet};
use crate::error::{Error, Result};
use crate::fields::{curl, curl_of_rule, l2_inner, SampledField, VectorField};
use crate::geometry::{MaskedGrid, PolylineCurve, SurfacePatchSet, Vec3};
use crate::par;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelicityMethod {
    DoubleIntegral,
    BsInnerProduct,
    Physical,
    DeltaVolume,
    DeltaSurface,
    FluxCirculation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelicityReport {
    pub value: f64,
    pub method: HelicityMethod,
    pub h: f64,
    pub n_cells: usize,
}

/// Gauss double sum over segment pairs with midpoint positions and segment
/// vectors as tangents.
fn gauss_sum(a: &PolylineCurve, b: &PolylineCurve, skip_diagonal: bool) -> f64 {
    let seg = |c: &PolylineCurve| -> (Vec<Vec3>, Vec<Vec3>) {
        (0..c.n_segments())
            .map(|k| {
                let (p, q) = c.segment(k);
                (0.5 * (p + q), q - p)
            })
            .unzip()
    };
    let (ma, da) = seg(a);
    let (mb, db) = seg(b);
    let rows = par::map_indexed(ma.len(), |i| {
        let mut s = 0.0;
        for j in 0..mb.len() {
            if skip_diagonal && i == j {
                continue;
            }
            let r = ma[i] - mb[j];
            let r2 = r.norm_squared();
            s += da[i].cross(&db[j]).dot(&r) / (r2 * r2.sqrt());
        }
        s
    });
    rows.iter().sum::<f64>() / FOUR_PI
}

/// Writhe of a closed polyline; self pairs are skipped.
pub fn writhe(c: &PolylineCurve) -> Result<f64> {
    if !c.is_closed() {
        return Err(Error::OpenCurve);
    }
    if c.vertices().len() < 16 {
        return Err(Error::InvalidCurve(format!("writhe needs at least 16 vertices, got {}", c.vertices().len())));
    }
    Ok(gauss_sum(c, c, true))
}

/// Closest distance between segments `p0p1` and `q0q1`.
fn segment_distance(p0: Vec3, p1: Vec3, q0: Vec3, q1: Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let c = d1.dot(&r);
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Minimum distance between two polylines, segment against segment.
pub fn curve_distance(a: &PolylineCurve, b: &PolylineCurve) -> f64 {
    let rows = par::map_indexed(a.n_segments(), |i| {
        let (p0, p1) = a.segment(i);
        (0..b.n_segments()).fold(f64::INFINITY, |m, j| {
            let (q0, q1) = b.segment(j);
            m.min(segment_distance(p0, p1, q0, q1))
        })
    });
    rows.into_iter().fold(f64::INFINITY, f64::min)
}

/// Gauss linking integral of two disjoint closed polylines.
pub fn linking_number(c1: &PolylineCurve, c2: &PolylineCurve) -> Result<f64> {
    if !c1.is_closed() || !c2.is_closed() {
        return Err(Error::OpenCurve);
    }
    let distance = curve_distance(c1, c2);
    let scale = c1.length().max(c2.length());
    if distance <= 1e-12 * scale {
        return Err(Error::IntersectingCurves { distance });
    }
    Ok(gauss_sum(c1, c2, false))
}

/// Pairwise double sum `(1/4π) ΣΣ V(x)×V(y)·(x−y)/|x−y|³ h⁶`, self pairs
/// skipped, accumulated as twice the upper triangle.
pub fn helicity_double_integral(v: &SampledField) -> HelicityReport {
    let sources = SourceSet::from_field(v);
    let n = sources.len();
    // V_i · Σ_{j>i} w V_j × (x_i − x_j)/r³ is one upper-triangle row
    let s = par::sum_indexed(n, |i| {
        let row = sources.curl_kernel_from(i + 1, &sources.position(i), 0.0);
        sources.weighted_value(i).dot(&row)
    });
    let g = v.grid();
    HelicityReport {
        value: 2.0 * FOUR_PI * s,
        method: HelicityMethod::DoubleIntegral,
        h: g.spacing(),
        n_cells: g.len(),
    }
}

/// `⟨V | BS(V)⟩` over the masked cells.
pub fn helicity_bs(v: &SampledField, opts: &BsOptions) -> Result<HelicityReport> {
    let bs = bs_on_grid(v, opts)?;
    helicity_bs_with(v, &bs)
}

/// `⟨V | B⟩` for a precomputed `B = BS(V)` on the same grid.
pub fn helicity_bs_with(v: &SampledField, bs: &SampledField) -> Result<HelicityReport> {
    Ok(HelicityReport {
        value: l2_inner(v, bs)?,
        method: HelicityMethod::BsInnerProduct,
        h: v.grid().spacing(),
        n_cells: v.grid().len(),
    })
}

/// True when some masked cell center of `b` falls in a masked cell of `a` or
/// the other way round.
pub fn grids_overlap(a: &MaskedGrid, b: &MaskedGrid) -> bool {
    let hits = |x: &MaskedGrid, y: &MaskedGrid| {
        let probe = SampledField::zeros(&Arc::new(x.clone()));
        (0..y.len()).any(|o| probe.at_point(&y.center(o)).is_ok())
    };
    hits(a, b) || hits(b, a)
}

/// Mutual helicity `⟨V₁ | BS(V₂)⟩` of fields on disjoint domains.
pub fn mutual_helicity(v1: &SampledField, v2: &SampledField, opts: &BsOptions) -> Result<f64> {
    if grids_overlap(v1.grid(), v2.grid()) {
        return Err(Error::OverlappingDomains);
    }
    let bs = bs_on(v2, v1.grid(), opts)?;
    l2_inner(v1, &bs)
}

/// Which vorticity enters the physical helicity.
pub enum CurlSource<'a> {
    /// Central-difference curl of the samples, at depth ≥ 2 cells only.
    Stencil,
    /// Central differences of an evaluation rule at every masked cell.
    Rule(&'a dyn VectorField),
    /// Vorticity given on the same grid.
    Supplied(&'a SampledField),
}

/// `⟨u | ∇×u⟩` with the requested curl path.
pub fn helicity_physical(u: &SampledField, source: CurlSource<'_>) -> Result<HelicityReport> {
    let (value, n_cells, path) = match source {
        CurlSource::Stencil => {
            let c = curl(u)?;
            (c.inner_with(u)?, c.n_cells(), "stencil")
        }
        CurlSource::Rule(rule) => {
            let c = curl_of_rule(u.grid(), rule);
            (c.inner_with(u)?, c.n_cells(), "rule stencil")
        }
        CurlSource::Supplied(w) => (l2_inner(u, w)?, u.grid().len(), "supplied"),
    };
    log::debug!("physical helicity via {path} curl over {n_cells} cells");
    Ok(HelicityReport { value, method: HelicityMethod::Physical, h: u.grid().spacing(), n_cells })
}

/// Volume form `∫ (u − BS(ω))·ω`.
pub fn delta_h_volume(u: &SampledField, omega: &SampledField, opts: &BsOptions) -> Result<HelicityReport> {
    if !u.same_grid(omega) {
        return Err(Error::GridMismatch);
    }
    warn_if_curl_mismatch(u, omega);
    let bs = bs_on_grid(omega, opts)?;
    let diff = u.axpby(1.0, &bs, -1.0)?;
    Ok(HelicityReport {
        value: l2_inner(&diff, omega)?,
        method: HelicityMethod::DeltaVolume,
        h: u.grid().spacing(),
        n_cells: u.grid().len(),
    })
}

fn warn_if_curl_mismatch(u: &SampledField, omega: &SampledField) {
    if let Ok(c) = curl(u) {
        if let Ok(r) = c.relative_residual(omega) {
            if r > 0.1 {
                log::warn!("vorticity differs from the stencil curl of u by {r:.3e} (relative)");
            }
        }
    }
}

/// Surface form `∮ (BS(ω) × u)·n dA` with BS evaluated at the boundary
/// samples themselves.
pub fn delta_h_surface(
    u: &dyn VectorField,
    omega: &SampledField,
    boundary: &SurfacePatchSet,
    opts: &BsOptions,
) -> Result<HelicityReport> {
    let bs = BiotSavartField::new(omega, opts)?;
    let pts: Vec<Vec3> = boundary.samples.iter().map(|s| s.point).collect();
    let b = bs.eval_many(&pts);
    let value = par::sum_indexed(pts.len(), |k| {
        let s = &boundary.samples[k];
        b[k].cross(&u.eval(&s.point)).dot(&s.normal) * s.area
    });
    Ok(HelicityReport {
        value,
        method: HelicityMethod::DeltaSurface,
        h: omega.grid().spacing(),
        n_cells: boundary.len(),
    })
}

/// Weighted volume points plus oriented surface samples; the quadrature
/// carrier of [`energy_rate_quadrature`].
pub struct RateQuadrature<'a> {
    pub points: &'a [Vec3],
    pub weights: &'a [f64],
    /// Offset for the central-difference curl of the vorticity rule.
    pub delta: f64,
    pub surface: &'a [crate::geometry::SurfaceSample],
}

/// `2⟨W | ω×(∇×ω)⟩ − ∮ |ω|² W·n dA` on an arbitrary quadrature.
pub fn energy_rate_quadrature(omega: &dyn VectorField, w: &dyn VectorField, q: &RateQuadrature<'_>) -> f64 {
    let d = q.delta;
    let volume = par::sum_indexed(q.points.len(), |k| {
        let p = q.points[k];
        let o = omega.eval(&p);
        if o == Vec3::zeros() && q.weights[k] == 0.0 {
            return 0.0;
        }
        let mut cols = [Vec3::zeros(); 3];
        for (axis, col) in cols.iter_mut().enumerate() {
            let mut e = Vec3::zeros();
            e[axis] = d;
            *col = (omega.eval(&(p + e)) - omega.eval(&(p - e))) / (2.0 * d);
        }
        let c = Vec3::new(cols[1].z - cols[2].y, cols[2].x - cols[0].z, cols[0].y - cols[1].x);
        w.eval(&p).dot(&o.cross(&c)) * q.weights[k]
    });
    let surface = par::sum_indexed(q.surface.len(), |k| {
        let s = &q.surface[k];
        let o = omega.eval(&s.point);
        o.norm_squared() * w.eval(&s.point).dot(&s.normal) * s.area
    });
    2.0 * volume - surface
}

/// Energy rate on a masked grid with the vorticity curl taken by central
/// differences of the rule at every masked cell.
pub fn energy_rate(
    omega: &dyn VectorField,
    w: &dyn VectorField,
    grid: &Arc<MaskedGrid>,
    boundary: &SurfacePatchSet,
) -> f64 {
    let points = grid.centers();
    let weights = vec![grid.cell_volume(); points.len()];
    energy_rate_quadrature(
        omega,
        w,
        &RateQuadrature { points: &points, weights: &weights, delta: grid.spacing(), surface: &boundary.samples },
    )
}
