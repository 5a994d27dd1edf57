//! Domains, masked grids and the quadrature carriers built on them.
//!
//! Orientation conventions are fixed here once: boundary normals point
//! outward, a torus core loop runs counter-clockwise about the torus axis and
//! its meridian cross-section is oriented along the loop tangent.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Rigid pose: an origin and an orthonormal right-handed set of axes stored
/// as matrix columns. The third axis is the symmetry axis of whatever lives
/// in the frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub origin: Vec3,
    pub axes: Mat3,
}

impl Frame {
    pub fn standard() -> Self {
        Self { origin: Vec3::zeros(), axes: Mat3::identity() }
    }

    /// Frame with the given symmetry axis. The first axis is the world axis
    /// least aligned with `axis`, orthogonalised, so the standard frame is
    /// recovered for `axis = z`.
    pub fn from_axis(origin: Vec3, axis: Vec3) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter("frame axis must be a nonzero finite vector".into()));
        }
        let e3 = axis / n;
        let mut best = 0;
        for k in 1..3 {
            if e3[k].abs() < e3[best].abs() {
                best = k;
            }
        }
        let mut seed = Vec3::zeros();
        seed[best] = 1.0;
        let e1 = (seed - e3 * seed.dot(&e3)).normalize();
        let e2 = e3.cross(&e1);
        Ok(Self { origin, axes: Mat3::from_columns(&[e1, e2, e3]) })
    }

    pub fn axis(&self) -> Vec3 {
        self.axes.column(2).into_owned()
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        self.axes.tr_mul(&(p - self.origin))
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        self.origin + self.axes * local
    }

    pub fn vector_to_world(&self, v: &Vec3) -> Vec3 {
        self.axes * v
    }

    pub fn vector_to_local(&self, v: &Vec3) -> Vec3 {
        self.axes.tr_mul(v)
    }

    /// Image of the frame under `p ↦ rotation·p + shift`.
    pub fn moved(&self, rotation: &Mat3, shift: &Vec3) -> Self {
        Self { origin: rotation * self.origin + shift, axes: rotation * self.axes }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidDomain(format!("ball radius {radius} must be positive and finite")));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (p - self.center).norm_squared() <= self.radius * self.radius
    }
}

/// Solid torus `(ρ − R)² + z² ≤ a²` in the cylindrical coordinates of its frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisymTorus {
    pub frame: Frame,
    pub major_radius: f64,
    pub minor_radius: f64,
}

impl AxisymTorus {
    pub fn new(frame: Frame, major_radius: f64, minor_radius: f64) -> Result<Self> {
        if !(minor_radius.is_finite() && major_radius.is_finite())
            || minor_radius <= 0.0
            || minor_radius >= major_radius
        {
            return Err(Error::InvalidDomain(format!(
                "torus needs 0 < a < R, got R = {major_radius}, a = {minor_radius}"
            )));
        }
        Ok(Self { frame, major_radius, minor_radius })
    }

    /// Torus about the world z-axis centred at the origin.
    pub fn standard(major_radius: f64, minor_radius: f64) -> Result<Self> {
        Self::new(Frame::standard(), major_radius, minor_radius)
    }

    /// Local cylindrical coordinates (ρ, φ, z).
    pub fn cylindrical(&self, p: &Vec3) -> (f64, f64, f64) {
        let q = self.frame.to_local(p);
        (q.x.hypot(q.y), q.y.atan2(q.x), q.z)
    }

    /// Distance from the core circle.
    pub fn meridian_radius(&self, p: &Vec3) -> f64 {
        let (rho, _, z) = self.cylindrical(p);
        (rho - self.major_radius).hypot(z)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let q = self.frame.to_local(p);
        let rho = q.x.hypot(q.y);
        let dr = rho - self.major_radius;
        dr * dr + q.z * q.z <= self.minor_radius * self.minor_radius
    }

    pub fn volume(&self) -> f64 {
        2.0 * PI * PI * self.major_radius * self.minor_radius * self.minor_radius
    }

    pub fn area(&self) -> f64 {
        4.0 * PI * PI * self.major_radius * self.minor_radius
    }

    fn aabb(&self) -> (Vec3, Vec3) {
        let n = self.frame.axis();
        let mut half = Vec3::zeros();
        for k in 0..3 {
            half[k] = self.major_radius * (1.0 - n[k] * n[k]).max(0.0).sqrt() + self.minor_radius;
        }
        (self.frame.origin - half, self.frame.origin + half)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Ball(Ball),
    Torus(AxisymTorus),
    Union(Vec<Domain>),
}

impl Domain {
    /// Union of balls and tori whose bounding spheres are pairwise separated.
    pub fn union(components: Vec<Domain>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDomain("union needs at least one component".into()));
        }
        if components.iter().any(|c| matches!(c, Domain::Union(_))) {
            return Err(Error::InvalidDomain("union components must be balls or tori".into()));
        }
        for i in 0..components.len() {
            for j in i + 1..components.len() {
                let (ci, ri) = components[i].bounding_sphere();
                let (cj, rj) = components[j].bounding_sphere();
                if (ci - cj).norm() <= ri + rj {
                    return Err(Error::InvalidDomain(format!(
                        "union components {i} and {j} are not separated by their bounding spheres"
                    )));
                }
            }
        }
        Ok(Domain::Union(components))
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        match self {
            Domain::Ball(b) => b.contains(p),
            Domain::Torus(t) => t.contains(p),
            Domain::Union(cs) => cs.iter().any(|c| c.contains(p)),
        }
    }

    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        match self {
            Domain::Ball(b) => (b.center, b.radius),
            Domain::Torus(t) => (t.frame.origin, t.major_radius + t.minor_radius),
            Domain::Union(_) => {
                let (lo, hi) = self.aabb();
                let c = 0.5 * (lo + hi);
                (c, 0.5 * (hi - lo).norm())
            }
        }
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        match self {
            Domain::Ball(b) => {
                let r = Vec3::repeat(b.radius);
                (b.center - r, b.center + r)
            }
            Domain::Torus(t) => t.aabb(),
            Domain::Union(cs) => {
                let mut lo = Vec3::repeat(f64::INFINITY);
                let mut hi = Vec3::repeat(f64::NEG_INFINITY);
                for c in cs {
                    let (l, h) = c.aabb();
                    lo = lo.inf(&l);
                    hi = hi.sup(&h);
                }
                (lo, hi)
            }
        }
    }

    /// Analytic volume.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Ball(b) => 4.0 / 3.0 * PI * b.radius.powi(3),
            Domain::Torus(t) => t.volume(),
            Domain::Union(cs) => cs.iter().map(Domain::volume).sum(),
        }
    }

    /// Balls and tori in order, flattening a union.
    pub fn components(&self) -> Vec<&Domain> {
        match self {
            Domain::Union(cs) => cs.iter().collect(),
            other => vec![other],
        }
    }

    pub fn tori(&self) -> Vec<&AxisymTorus> {
        self.components()
            .into_iter()
            .filter_map(|c| match c {
                Domain::Torus(t) => Some(t),
                _ => None,
            })
            .collect()
    }

    /// Image of the domain under the rigid motion `p ↦ rotation·p + shift`.
    pub fn moved(&self, rotation: &Mat3, shift: &Vec3) -> Self {
        match self {
            Domain::Ball(b) => Domain::Ball(Ball { center: rotation * b.center + shift, radius: b.radius }),
            Domain::Torus(t) => Domain::Torus(AxisymTorus {
                frame: t.frame.moved(rotation, shift),
                major_radius: t.major_radius,
                minor_radius: t.minor_radius,
            }),
            Domain::Union(cs) => Domain::Union(cs.iter().map(|c| c.moved(rotation, shift)).collect()),
        }
    }
}

/// Deepest interior level tracked by [`MaskedGrid::depth`].
pub const MAX_DEPTH: u8 = 3;

/// Cell-centred Cartesian grid with an inside mask.
///
/// Masked cells are enumerated in increasing dense index (x fastest), and that
/// enumeration is the fixed accumulation order used by every reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedGrid {
    origin: Vec3,
    h: f64,
    dims: [usize; 3],
    inside: Vec<bool>,
    depth: Vec<u8>,
    cells: Vec<usize>,
    ordinal: Vec<u32>,
}

const OUTSIDE: u32 = u32::MAX;

impl MaskedGrid {
    /// Grid over the bounding box of `domain` grown by `padding` cells on every
    /// side, starting at the lower corner of the grown box.
    pub fn build(domain: &Domain, h: f64, padding: usize) -> Result<Self> {
        Self::build_with(h, padding, domain.aabb(), |p| domain.contains(p))
    }

    /// Same as [`MaskedGrid::build`] with an arbitrary box and membership rule.
    pub fn build_with<F: Fn(&Vec3) -> bool>(
        h: f64,
        padding: usize,
        (lo, hi): (Vec3, Vec3),
        inside: F,
    ) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
        }
        let mut dims = [0usize; 3];
        let pad = padding as f64 * h;
        let origin = lo - Vec3::repeat(pad);
        for k in 0..3 {
            let extent = hi[k] - lo[k] + 2.0 * pad;
            dims[k] = ((extent / h).ceil() as usize).max(1);
        }
        let total = dims[0] * dims[1] * dims[2];
        if total > 200_000_000 {
            return Err(Error::InvalidParameter(format!("grid with {total} cells is too large")));
        }
        let mut mask = vec![false; total];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h;
                    mask[i + dims[0] * (j + dims[1] * k)] = inside(&p);
                }
            }
        }
        let cells: Vec<usize> = (0..total).filter(|&d| mask[d]).collect();
        if cells.is_empty() {
            return Err(Error::DegenerateGrid { h });
        }
        let mut ordinal = vec![OUTSIDE; total];
        for (o, &d) in cells.iter().enumerate() {
            ordinal[d] = o as u32;
        }
        let depth = interior_depth(&mask, dims);
        Ok(Self { origin, h, dims, inside: mask, depth, cells, ordinal })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Number of masked cells.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn masked_volume(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    pub fn is_inside(&self, dense: usize) -> bool {
        self.inside[dense]
    }

    /// Dense index of the `ordinal`-th masked cell.
    pub fn dense_index(&self, ordinal: usize) -> usize {
        self.cells[ordinal]
    }

    pub fn ordinal_of(&self, dense: usize) -> Option<usize> {
        match self.ordinal[dense] {
            OUTSIDE => None,
            o => Some(o as usize),
        }
    }

    pub fn ijk(&self, dense: usize) -> [usize; 3] {
        let i = dense % self.dims[0];
        let j = (dense / self.dims[0]) % self.dims[1];
        let k = dense / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Dense-index offset of one step along axis `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    pub fn center_of_dense(&self, dense: usize) -> Vec3 {
        let [i, j, k] = self.ijk(dense);
        self.origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.h
    }

    /// Center of the `ordinal`-th masked cell.
    pub fn center(&self, ordinal: usize) -> Vec3 {
        self.center_of_dense(self.cells[ordinal])
    }

    pub fn centers(&self) -> Vec<Vec3> {
        (0..self.len()).map(|o| self.center(o)).collect()
    }

    /// Interior depth of a masked cell: 1 for any masked cell, `d + 1` when
    /// all 26 neighbours have depth at least `d`, capped at [`MAX_DEPTH`].
    pub fn depth(&self, ordinal: usize) -> u8 {
        self.depth[self.cells[ordinal]]
    }

    /// Ordinals of cells where a central stencil fits comfortably.
    pub fn stencil_cells(&self) -> Vec<usize> {
        (0..self.len()).filter(|&o| self.depth(o) >= 2).collect()
    }
}

fn interior_depth(mask: &[bool], dims: [usize; 3]) -> Vec<u8> {
    let mut depth: Vec<u8> = mask.iter().map(|&m| m as u8).collect();
    let [nx, ny, nz] = dims;
    for level in 1..MAX_DEPTH {
        let prev = depth.clone();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let d = i + nx * (j + ny * k);
                    if prev[d] < level {
                        continue;
                    }
                    let mut ok = true;
                    'nb: for dk in -1i64..=1 {
                        for dj in -1i64..=1 {
                            for di in -1i64..=1 {
                                let (a, b, c) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                                if a < 0 || b < 0 || c < 0 || a >= nx as i64 || b >= ny as i64 || c >= nz as i64 {
                                    ok = false;
                                    break 'nb;
                                }
                                let nd = a as usize + nx * (b as usize + ny * c as usize);
                                if prev[nd] < level {
                                    ok = false;
                                    break 'nb;
                                }
                            }
                        }
                    }
                    if ok {
                        depth[d] = level + 1;
                    }
                }
            }
        }
    }
    depth
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub point: Vec3,
    pub normal: Vec3,
    pub area: f64,
}

impl SurfaceSample {
    /// Oriented area element `n dA`.
    pub fn vector_area(&self) -> Vec3 {
        self.normal * self.area
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfacePatchSet {
    pub samples: Vec<SurfaceSample>,
}

impl SurfacePatchSet {
    pub fn total_area(&self) -> f64 {
        self.samples.iter().map(|s| s.area).sum()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Oriented surface integral `Σ F·n dA`.
    pub fn flux_of<F: Fn(&Vec3) -> Vec3>(&self, f: F) -> f64 {
        self.samples.iter().map(|s| f(&s.point).dot(&s.normal) * s.area).sum()
    }
}

/// Outward boundary samples on the analytic parametrisation: polar/azimuthal
/// angles for a sphere, toroidal/poloidal angles for a torus; midpoint rule
/// in both parameters with exact normals and area elements.
pub fn boundary_samples(domain: &Domain, n_u: usize, n_v: usize) -> Result<SurfacePatchSet> {
    if n_u < 8 || n_v < 8 {
        return Err(Error::InvalidParameter(format!("boundary sampling needs n_u, n_v >= 8, got {n_u}x{n_v}")));
    }
    let mut samples = Vec::with_capacity(n_u * n_v);
    for comp in domain.components() {
        match comp {
            Domain::Ball(b) => {
                let dth = PI / n_u as f64;
                let dph = 2.0 * PI / n_v as f64;
                for iu in 0..n_u {
                    let th = (iu as f64 + 0.5) * dth;
                    for iv in 0..n_v {
                        let ph = (iv as f64 + 0.5) * dph;
                        let n = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                        samples.push(SurfaceSample {
                            point: b.center + n * b.radius,
                            normal: n,
                            area: b.radius * b.radius * th.sin() * dth * dph,
                        });
                    }
                }
            }
            Domain::Torus(t) => {
                let (r0, a) = (t.major_radius, t.minor_radius);
                let dphi = 2.0 * PI / n_u as f64;
                let dal = 2.0 * PI / n_v as f64;
                for iu in 0..n_u {
                    let phi = (iu as f64 + 0.5) * dphi;
                    for iv in 0..n_v {
                        let al = (iv as f64 + 0.5) * dal;
                        let rho = r0 + a * al.cos();
                        let local = Vec3::new(rho * phi.cos(), rho * phi.sin(), a * al.sin());
                        let n_local = Vec3::new(al.cos() * phi.cos(), al.cos() * phi.sin(), al.sin());
                        samples.push(SurfaceSample {
                            point: t.frame.to_world(&local),
                            normal: t.frame.vector_to_world(&n_local),
                            area: a * rho * dphi * dal,
                        });
                    }
                }
            }
            Domain::Union(_) => unreachable!("components are flattened"),
        }
    }
    Ok(SurfacePatchSet { samples })
}

/// Piecewise-linear curve. A closed curve does not repeat its first vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolylineCurve {
    vertices: Vec<Vec3>,
    closed: bool,
}

impl PolylineCurve {
    pub fn new(vertices: Vec<Vec3>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidCurve("a curve needs at least two vertices".into()));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidCurve("vertex with non-finite coordinate".into()));
        }
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidCurve("consecutive vertices coincide".into()));
            }
        }
        if closed && vertices.first() == vertices.last() {
            return Err(Error::InvalidCurve("closed curve repeats its first vertex".into()));
        }
        Ok(Self { vertices, closed })
    }

    /// Circle of radius `radius` about the frame axis, counter-clockwise.
    pub fn circle(frame: &Frame, radius: f64, n_seg: usize) -> Result<Self> {
        if !(radius > 0.0) || n_seg < 3 {
            return Err(Error::InvalidCurve(format!("circle needs radius > 0 and >= 3 segments")));
        }
        let vertices = (0..n_seg)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n_seg as f64;
                frame.to_world(&Vec3::new(radius * phi.cos(), radius * phi.sin(), 0.0))
            })
            .collect();
        Self::new(vertices, true)
    }

    /// (p, q) torus knot on the torus of radii `major`, `minor` about z.
    pub fn torus_knot(p: u32, q: u32, major: f64, minor: f64, n_seg: usize) -> Result<Self> {
        let vertices = (0..n_seg)
            .map(|k| {
                let s = 2.0 * PI * k as f64 / n_seg as f64;
                let rho = major + minor * (q as f64 * s).cos();
                Vec3::new(rho * (p as f64 * s).cos(), rho * (p as f64 * s).sin(), minor * (q as f64 * s).sin())
            })
            .collect();
        Self::new(vertices, true)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn n_segments(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    /// Endpoints of segment `k`.
    pub fn segment(&self, k: usize) -> (Vec3, Vec3) {
        let n = self.vertices.len();
        (self.vertices[k], self.vertices[(k + 1) % n])
    }

    pub fn length(&self) -> f64 {
        (0..self.n_segments()).map(|k| {
            let (a, b) = self.segment(k);
            (b - a).norm()
        }).sum()
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices, closed: self.closed }
    }

    /// Image under `p ↦ rotation·p + shift`.
    pub fn moved(&self, rotation: &Mat3, shift: &Vec3) -> Self {
        Self { vertices: self.vertices.iter().map(|v| rotation * v + shift).collect(), closed: self.closed }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { vertices: self.vertices.iter().map(|v| v * factor).collect(), closed: self.closed }
    }
}

/// Meridian disk of one torus, sampled in polar coordinates about the core.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub torus_index: usize,
    pub samples: Vec<SurfaceSample>,
}

impl CrossSection {
    pub fn area(&self) -> f64 {
        self.samples.iter().map(|s| s.area).sum()
    }

    pub fn flux_of<F: Fn(&Vec3) -> Vec3>(&self, f: F) -> f64 {
        self.samples.iter().map(|s| f(&s.point).dot(&s.normal) * s.area).sum()
    }
}

/// Core circle ρ = R of the torus, counter-clockwise about its axis.
pub fn core_loop(torus: &AxisymTorus, n_seg: usize) -> Result<PolylineCurve> {
    if n_seg < 16 {
        return Err(Error::InvalidParameter(format!("core loop needs >= 16 segments, got {n_seg}")));
    }
    PolylineCurve::circle(&torus.frame, torus.major_radius, n_seg)
}

/// Meridian disk at azimuth 0 with normal along the core-loop tangent there
/// (the local y-axis).
pub fn cross_section(torus: &AxisymTorus, torus_index: usize, n_r: usize, n_phi: usize) -> Result<CrossSection> {
    if n_r < 8 || n_phi < 8 {
        return Err(Error::InvalidParameter(format!("cross-section needs n_r, n_phi >= 8, got {n_r}x{n_phi}")));
    }
    let a = torus.minor_radius;
    let dr = a / n_r as f64;
    let db = 2.0 * PI / n_phi as f64;
    let normal = torus.frame.vector_to_world(&Vec3::y());
    let mut samples = Vec::with_capacity(n_r * n_phi);
    for ir in 0..n_r {
        let r = (ir as f64 + 0.5) * dr;
        for ib in 0..n_phi {
            let b = (ib as f64 + 0.5) * db;
            let local = Vec3::new(torus.major_radius + r * b.cos(), 0.0, r * b.sin());
            samples.push(SurfaceSample { point: torus.frame.to_world(&local), normal, area: r * dr * db });
        }
    }
    Ok(CrossSection { torus_index, samples })
}

/// Rotation matrix about a unit axis by `angle` (right-hand rule).
pub fn rotation_about(axis: &Vec3, angle: f64) -> Mat3 {
    let u = axis.normalize();
    let (s, c) = angle.sin_cos();
    let k = Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0);
    Mat3::identity() + k * s + k * k * (1.0 - c)
}
