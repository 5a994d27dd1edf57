//! Analytic field catalog, grid-sampled fields and central-difference operators.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AxisymTorus, Ball, Frame, MaskedGrid, Mat3, Vec3};
use crate::par;
use crate::special::{first_j1_root, sph_j1, sph_j1_over_x, sph_j1_prime};

/// Anything that can be evaluated pointwise.
pub trait VectorField: Send + Sync {
    fn eval(&self, p: &Vec3) -> Vec3;
}

/// Adapter turning a closure into a [`VectorField`].
pub struct FnField<F>(pub F);

impl<F: Fn(&Vec3) -> Vec3 + Send + Sync> VectorField for FnField<F> {
    fn eval(&self, p: &Vec3) -> Vec3 {
        (self.0)(p)
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn eval(&self, p: &Vec3) -> Vec3 {
        (**self).eval(p)
    }
}

impl<T: VectorField + ?Sized> VectorField for Arc<T> {
    fn eval(&self, p: &Vec3) -> Vec3 {
        (**self).eval(p)
    }
}

/// Bump profile `exp(−1/(1−s²))` on `[0, 1)`, zero beyond.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

const PROFILE_NODES: usize = 200;

/// `2π ∫₀¹ p(s) s ds` by the 200-point midpoint rule, the meridian-disk
/// integral of the profile for unit tube radius.
pub fn bump_disk_integral() -> f64 {
    let ds = 1.0 / PROFILE_NODES as f64;
    let mut acc = 0.0;
    for k in 0..PROFILE_NODES {
        let s = (k as f64 + 0.5) * ds;
        acc += bump(s) * s;
    }
    2.0 * PI * acc * ds
}

/// Solenoidal field concentrated in a thin solid torus around a circle.
///
/// The toroidal part has meridian-disk flux `flux`. The optional poloidal part
/// winds right-handedly around the core with strength `twist` relative to the
/// toroidal one, so positive twist gives positive self-helicity;
/// it is of the form ∇ψ×∇φ and so leaves divergence and flux unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeField {
    pub frame: Frame,
    pub loop_radius: f64,
    pub tube_radius: f64,
    pub flux: f64,
    pub twist: f64,
    norm: f64,
}

impl TubeField {
    pub fn new(frame: Frame, loop_radius: f64, tube_radius: f64, flux: f64) -> Result<Self> {
        Self::twisted(frame, loop_radius, tube_radius, flux, 0.0)
    }

    pub fn twisted(frame: Frame, loop_radius: f64, tube_radius: f64, flux: f64, twist: f64) -> Result<Self> {
        if !(tube_radius > 0.0 && tube_radius < loop_radius && loop_radius.is_finite()) {
            return Err(Error::InvalidTube { tube_radius, loop_radius });
        }
        if !flux.is_finite() || !twist.is_finite() {
            return Err(Error::InvalidParameter("tube flux and twist must be finite".into()));
        }
        let norm = bump_disk_integral() * tube_radius * tube_radius;
        Ok(Self { frame, loop_radius, tube_radius, flux, twist, norm })
    }

    /// The solid torus carrying the support.
    pub fn support(&self) -> AxisymTorus {
        AxisymTorus { frame: self.frame.clone(), major_radius: self.loop_radius, minor_radius: self.tube_radius }
    }

    pub fn eval(&self, p: &Vec3) -> Vec3 {
        let q = self.frame.to_local(p);
        let rho = q.x.hypot(q.y);
        let dr = rho - self.loop_radius;
        let r = dr.hypot(q.z);
        let s = r / self.tube_radius;
        if s >= 1.0 || rho == 0.0 {
            return Vec3::zeros();
        }
        let amp = self.flux * bump(s) / self.norm;
        let phi_hat = Vec3::new(-q.y / rho, q.x / rho, 0.0);
        let mut local = phi_hat * amp;
        if self.twist != 0.0 && r > 0.0 {
            // poloidal unit vector (sin α ρ̂ − cos α ẑ) turning right-handed
            // about φ̂, scaled by s·R_c/ρ
            let rho_hat = Vec3::new(q.x / rho, q.y / rho, 0.0);
            let alpha_hat = rho_hat * (q.z / r) - Vec3::z() * (dr / r);
            local += alpha_hat * (self.twist * amp * s * self.loop_radius / rho);
        }
        self.frame.vector_to_world(&local)
    }
}

/// `h = φ̂/(2πρ)` on the solid torus, zero elsewhere, scaled by `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTorusField {
    pub torus: AxisymTorus,
    pub scale: f64,
}

/// Relative inflation of the support test so boundary samples evaluate to
/// the interior limit despite round-off.
const SUPPORT_SLACK: f64 = 1e-9;

impl HarmonicTorusField {
    pub fn new(torus: AxisymTorus) -> Self {
        Self { torus, scale: 1.0 }
    }

    /// Flux of the unscaled field through a meridian disk: `R − √(R² − a²)`.
    pub fn unit_flux(&self) -> f64 {
        let (r, a) = (self.torus.major_radius, self.torus.minor_radius);
        r - (r * r - a * a).sqrt()
    }

    pub fn eval(&self, p: &Vec3) -> Vec3 {
        let q = self.torus.frame.to_local(p);
        let rho2 = q.x * q.x + q.y * q.y;
        let rho = rho2.sqrt();
        let dr = rho - self.torus.major_radius;
        let a = self.torus.minor_radius * (1.0 + SUPPORT_SLACK);
        if dr * dr + q.z * q.z > a * a {
            return Vec3::zeros();
        }
        let c = self.scale / (2.0 * PI * rho2);
        self.torus.frame.vector_to_world(&Vec3::new(-q.y * c, q.x * c, 0.0))
    }
}

/// Axisymmetric force-free ball field with `∇×F = ξF`, tangent to the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpheromakField {
    pub ball: Ball,
    pub amplitude: f64,
    pub eigenvalue: f64,
}

impl SpheromakField {
    pub fn new(ball: Ball, amplitude: f64) -> Self {
        let eigenvalue = first_j1_root() / ball.radius;
        Self { ball, amplitude, eigenvalue }
    }

    /// Evaluates the closed form. It extends smoothly past the sphere, which
    /// stencils near the boundary rely on.
    pub fn eval(&self, p: &Vec3) -> Vec3 {
        let q = p - self.ball.center;
        let r = q.norm();
        let b0 = self.amplitude;
        if r < 1e-14 {
            return Vec3::new(0.0, 0.0, 2.0 * b0 / 3.0);
        }
        let x = self.eigenvalue * r;
        let j1x = sph_j1_over_x(x);
        let j1 = sph_j1(x);
        let dj1 = sph_j1_prime(x);
        let cos_t = q.z / r;
        let rho = q.x.hypot(q.y);
        let sin_t = rho / r;
        let br = 2.0 * b0 * j1x * cos_t;
        let bt = -b0 * (j1x + dj1) * sin_t;
        let bp = b0 * j1 * sin_t;
        let r_hat = q / r;
        let (cos_p, sin_p) = if rho > 0.0 { (q.x / rho, q.y / rho) } else { (1.0, 0.0) };
        let t_hat = Vec3::new(cos_t * cos_p, cos_t * sin_p, -sin_t);
        let p_hat = Vec3::new(-sin_p, cos_p, 0.0);
        r_hat * br + t_hat * bt + p_hat * bp
    }
}

/// Scalar potentials whose gradients serve as curl-free test fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarPotential {
    /// `½ xᵀQx + b·x` with symmetric `Q`.
    Quadratic { q: Mat3, b: Vec3 },
    /// `amplitude · exp(−|x − c|²/width²)`.
    Gaussian { center: Vec3, width: f64, amplitude: f64 },
}

impl ScalarPotential {
    pub fn value(&self, p: &Vec3) -> f64 {
        match self {
            ScalarPotential::Quadratic { q, b } => 0.5 * p.dot(&(q * p)) + b.dot(p),
            ScalarPotential::Gaussian { center, width, amplitude } => {
                amplitude * (-(p - center).norm_squared() / (width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, p: &Vec3) -> Vec3 {
        match self {
            ScalarPotential::Quadratic { q, b } => 0.5 * (q + q.transpose()) * p + b,
            ScalarPotential::Gaussian { center, width, amplitude } => {
                let d = p - center;
                let w2 = width * width;
                d * (-2.0 * amplitude / w2 * (-d.norm_squared() / w2).exp())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AnalyticField {
    Tube(TubeField),
    HarmonicTorus(HarmonicTorusField),
    Spheromak(SpheromakField),
    Gradient(ScalarPotential),
    /// `M x + c`; constant fields and rigid rotations are special cases.
    Linear { matrix: Mat3, offset: Vec3 },
    Combination(Vec<(f64, AnalyticField)>),
}

impl AnalyticField {
    pub fn tube(frame: Frame, loop_radius: f64, tube_radius: f64, flux: f64) -> Result<Self> {
        Ok(AnalyticField::Tube(TubeField::new(frame, loop_radius, tube_radius, flux)?))
    }

    pub fn harmonic(torus: AxisymTorus) -> Self {
        AnalyticField::HarmonicTorus(HarmonicTorusField::new(torus))
    }

    /// Spheromak on `ball` together with its curl eigenvalue.
    pub fn spheromak(ball: Ball, amplitude: f64) -> (Self, f64) {
        let f = SpheromakField::new(ball, amplitude);
        let xi = f.eigenvalue;
        (AnalyticField::Spheromak(f), xi)
    }

    pub fn constant(c: Vec3) -> Self {
        AnalyticField::Linear { matrix: Mat3::zeros(), offset: c }
    }

    pub fn combination(terms: Vec<(f64, AnalyticField)>) -> Result<Self> {
        if terms.iter().any(|(c, _)| !c.is_finite()) {
            return Err(Error::InvalidParameter("combination coefficients must be finite".into()));
        }
        Ok(AnalyticField::Combination(terms))
    }

    pub fn scaled(self, c: f64) -> Self {
        AnalyticField::Combination(vec![(c, self)])
    }
}

impl VectorField for AnalyticField {
    fn eval(&self, p: &Vec3) -> Vec3 {
        match self {
            AnalyticField::Tube(t) => t.eval(p),
            AnalyticField::HarmonicTorus(h) => h.eval(p),
            AnalyticField::Spheromak(s) => s.eval(p),
            AnalyticField::Gradient(g) => g.gradient(p),
            AnalyticField::Linear { matrix, offset } => matrix * p + offset,
            AnalyticField::Combination(terms) => {
                terms.iter().fold(Vec3::zeros(), |acc, (c, f)| acc + f.eval(p) * *c)
            }
        }
    }
}

/// Positive scalar density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DensityField {
    Uniform(f64),
    /// `base + amplitude·exp(−|x − c|²/width²)` with `base > 0`, `amplitude ≥ 0`.
    Gaussian { base: f64, amplitude: f64, center: Vec3, width: f64 },
}

impl Default for DensityField {
    fn default() -> Self {
        DensityField::Uniform(1.0)
    }
}

impl DensityField {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DensityField::Uniform(c) => c.is_finite() && *c > 0.0,
            DensityField::Gaussian { base, amplitude, width, .. } => {
                base.is_finite() && *base > 0.0 && amplitude.is_finite() && *amplitude >= 0.0 && *width > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("density must be strictly positive and finite".into()))
        }
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        match self {
            DensityField::Uniform(c) => *c,
            DensityField::Gaussian { base, amplitude, center, width } => {
                base + amplitude * (-(p - center).norm_squared() / (width * width)).exp()
            }
        }
    }
}

/// Values at the masked cells of a shared grid, in cell order.
#[derive(Clone, Debug)]
pub struct SampledField {
    grid: Arc<MaskedGrid>,
    values: Vec<Vec3>,
}

impl SampledField {
    pub fn sample<F: VectorField + ?Sized>(grid: &Arc<MaskedGrid>, f: &F) -> Self {
        let values = par::map_indexed(grid.len(), |o| f.eval(&grid.center(o)));
        Self { grid: Arc::clone(grid), values }
    }

    pub fn from_values(grid: &Arc<MaskedGrid>, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: Arc::clone(grid), values })
    }

    pub fn zeros(grid: &Arc<MaskedGrid>) -> Self {
        Self { grid: Arc::clone(grid), values: vec![Vec3::zeros(); grid.len()] }
    }

    pub fn grid(&self) -> &Arc<MaskedGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn value(&self, ordinal: usize) -> Vec3 {
        self.values[ordinal]
    }

    /// Value at the masked cell whose center is `p` (nearest cell lookup).
    pub fn at_point(&self, p: &Vec3) -> Result<Vec3> {
        let g = &self.grid;
        let rel = (p - g.origin()) / g.spacing();
        let dims = g.dims();
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let c = rel[k].floor();
            if c < 0.0 || c >= dims[k] as f64 {
                return Err(Error::OutsideImage);
            }
            idx[k] = c as usize;
        }
        let dense = idx[0] + dims[0] * (idx[1] + dims[1] * idx[2]);
        g.ordinal_of(dense).map(|o| self.values[o]).ok_or(Error::OutsideImage)
    }

    pub fn same_grid(&self, other: &SampledField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// `a·self + b·other` on the same grid.
    pub fn axpby(&self, a: f64, other: &SampledField, b: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x * a + y * b).collect();
        Ok(Self { grid: Arc::clone(&self.grid), values })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: Arc::clone(&self.grid), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Ordinals of cells with a nonzero value.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&o| self.values[o] != Vec3::zeros()).collect()
    }
}

/// Stencil output: values on a subset of a grid's masked cells.
#[derive(Clone, Debug)]
pub struct StencilField {
    grid: Arc<MaskedGrid>,
    cells: Arc<Vec<usize>>,
    values: Vec<Vec3>,
}

impl StencilField {
    pub fn grid(&self) -> &Arc<MaskedGrid> {
        &self.grid
    }

    /// Cell ordinals where the stencil was evaluated.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖self − other‖ / ‖other‖` over the evaluated cells; `other` is a full sampled field.
    pub fn relative_residual(&self, other: &SampledField) -> Result<f64> {
        self.relative_residual_scaled(other, 1.0)
    }

    /// `‖self − c·other‖ / ‖c·other‖`, zero when both vanish.
    pub fn relative_residual_scaled(&self, other: &SampledField, c: f64) -> Result<f64> {
        if !(Arc::ptr_eq(&self.grid, other.grid()) || *self.grid == **other.grid()) {
            return Err(Error::GridMismatch);
        }
        let n = self.cells.len();
        let num = par::sum_indexed(n, |k| (self.values[k] - other.values[self.cells[k]] * c).norm_squared());
        let den = par::sum_indexed(n, |k| (other.values[self.cells[k]] * c).norm_squared());
        Ok(if den == 0.0 {
            if num == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            (num / den).sqrt()
        })
    }

    /// `Σ self·other h³` over the evaluated cells.
    pub fn inner_with(&self, other: &SampledField) -> Result<f64> {
        if !(Arc::ptr_eq(&self.grid, other.grid()) || *self.grid == **other.grid()) {
            return Err(Error::GridMismatch);
        }
        let s = par::sum_indexed(self.cells.len(), |k| self.values[k].dot(&other.values[self.cells[k]]));
        Ok(s * self.grid.cell_volume())
    }

    /// Root-mean-square norm over the evaluated cells.
    pub fn l2_norm(&self) -> f64 {
        (par::sum_indexed(self.values.len(), |k| self.values[k].norm_squared()) * self.grid.cell_volume()).sqrt()
    }
}

/// Scalar stencil output on a subset of cells.
#[derive(Clone, Debug)]
pub struct StencilScalar {
    pub cells: Arc<Vec<usize>>,
    pub values: Vec<f64>,
}

impl StencilScalar {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

fn stencil_cells(grid: &MaskedGrid) -> Result<Arc<Vec<usize>>> {
    let cells = grid.stencil_cells();
    if cells.is_empty() {
        return Err(Error::DegenerateStencil);
    }
    Ok(Arc::new(cells))
}

/// Central derivative matrix `D[i][j] = ∂F_i/∂x_j` at a depth ≥ 2 cell.
fn jacobian_at(f: &SampledField, ordinal: usize) -> Mat3 {
    let g = f.grid();
    let d = g.dense_index(ordinal);
    let inv = 0.5 / g.spacing();
    let mut m = Mat3::zeros();
    for axis in 0..3 {
        let s = g.stride(axis);
        // depth >= 2 guarantees both neighbours are masked
        let plus = g.ordinal_of(d + s).expect("stencil neighbour inside");
        let minus = g.ordinal_of(d - s).expect("stencil neighbour inside");
        let col = (f.values[plus] - f.values[minus]) * inv;
        m.set_column(axis, &col);
    }
    m
}

fn curl_from_jacobian(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// Second-order central curl at cells of interior depth ≥ 2.
pub fn curl(f: &SampledField) -> Result<StencilField> {
    let cells = stencil_cells(f.grid())?;
    let values = par::map_indexed(cells.len(), |k| curl_from_jacobian(&jacobian_at(f, cells[k])));
    Ok(StencilField { grid: Arc::clone(f.grid()), cells, values })
}

/// Second-order central divergence at cells of interior depth ≥ 2.
pub fn divergence(f: &SampledField) -> Result<StencilScalar> {
    let cells = stencil_cells(f.grid())?;
    let values = par::map_indexed(cells.len(), |k| jacobian_at(f, cells[k]).trace());
    Ok(StencilScalar { cells, values })
}

/// Central-difference curl of an evaluation rule at every masked cell, using
/// off-grid evaluations `p ± h e_k`. Meant for rules that extend smoothly a
/// little past the domain.
pub fn curl_of_rule<F: VectorField + ?Sized>(grid: &Arc<MaskedGrid>, f: &F) -> StencilField {
    curl_of_rule_with(grid, f, grid.spacing())
}

/// [`curl_of_rule`] with an explicit difference offset `h`.
pub fn curl_of_rule_with<F: VectorField + ?Sized>(grid: &Arc<MaskedGrid>, f: &F, h: f64) -> StencilField {
    let values = par::map_indexed(grid.len(), |o| {
        let p = grid.center(o);
        let mut m = Mat3::zeros();
        for axis in 0..3 {
            let mut e = Vec3::zeros();
            e[axis] = h;
            m.set_column(axis, &((f.eval(&(p + e)) - f.eval(&(p - e))) / (2.0 * h)));
        }
        curl_from_jacobian(&m)
    });
    StencilField { grid: Arc::clone(grid), cells: Arc::new((0..grid.len()).collect()), values }
}

/// Wraps explicit curl values as a stencil field over all masked cells.
pub fn full_stencil(f: &SampledField) -> StencilField {
    StencilField { grid: Arc::clone(f.grid()), cells: Arc::new((0..f.grid().len()).collect()), values: f.values.clone() }
}

/// Stencil field values expanded to a full sampled field, zero off the stencil set.
pub fn stencil_to_sampled(s: &StencilField) -> SampledField {
    let mut values = vec![Vec3::zeros(); s.grid.len()];
    for (k, &o) in s.cells.iter().enumerate() {
        values[o] = s.values[k];
    }
    SampledField { grid: Arc::clone(&s.grid), values }
}

/// `Σ f·g h³` over masked cells in cell order.
pub fn l2_inner(f: &SampledField, g: &SampledField) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let s = par::sum_indexed(f.values.len(), |o| f.values[o].dot(&g.values[o]));
    Ok(s * f.grid.cell_volume())
}

pub fn field_energy(f: &SampledField) -> f64 {
    l2_inner(f, f).expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_samples, cross_section, Domain};

    fn grid(domain: &Domain, h: f64) -> Arc<MaskedGrid> {
        Arc::new(MaskedGrid::build(domain, h, 2).unwrap())
    }

    fn unit_ball() -> Ball {
        Ball::new(Vec3::zeros(), 1.0).unwrap()
    }

    #[test]
    fn tube_flux_through_meridian_disk() {
        let tube = TubeField::new(Frame::standard(), 1.0, 0.2, 1.0).unwrap();
        // section quadrature is finer than the 200-node profile normalisation
        let torus = AxisymTorus::standard(1.0, 0.2).unwrap();
        let sec = cross_section(&torus, 0, 64, 32).unwrap();
        let flux = sec.flux_of(|p| tube.eval(p));
        assert!((flux - 1.0).abs() < 5e-3, "flux {flux}");
    }

    #[test]
    fn tube_validation_and_zero_flux() {
        assert_eq!(
            TubeField::new(Frame::standard(), 1.0, 1.0, 1.0).unwrap_err(),
            Error::InvalidTube { tube_radius: 1.0, loop_radius: 1.0 }
        );
        let t = TubeField::new(Frame::standard(), 1.0, 0.3, 0.0).unwrap();
        assert_eq!(t.eval(&Vec3::new(1.0, 0.0, 0.1)), Vec3::zeros());
    }

    /// The bump profile has large third derivatives (about 500 times its peak),
    /// so the stencil tolerance needs h near ε/20.
    fn max_div_ratio(tube: &TubeField, h: f64) -> f64 {
        let dom = Domain::Torus(AxisymTorus::new(tube.frame.clone(), tube.loop_radius, tube.tube_radius + 3.0 * h).unwrap());
        let g = grid(&dom, h);
        let f = SampledField::sample(&g, &AnalyticField::Tube(tube.clone()));
        divergence(&f).unwrap().max_abs() / (f.max_norm() / tube.tube_radius)
    }

    #[test]
    fn twisted_tube_keeps_flux_and_is_solenoidal() {
        let tube = TubeField::twisted(Frame::standard(), 1.0, 0.4, 1.0, 1.0).unwrap();
        let torus = AxisymTorus::standard(1.0, 0.4).unwrap();
        let sec = cross_section(&torus, 0, 64, 32).unwrap();
        assert!((sec.flux_of(|p| tube.eval(p)) - 1.0).abs() < 5e-3);
        let r = max_div_ratio(&tube, 0.014);
        assert!(r <= 5e-2, "div ratio {r}");
    }

    #[test]
    fn tube_divergence_small() {
        let tube = TubeField::new(Frame::standard(), 1.0, 0.3, 1.0).unwrap();
        let r = max_div_ratio(&tube, 0.015);
        assert!(r <= 5e-2, "div ratio {r}");
    }

    #[test]
    fn harmonic_field_values() {
        let t = AxisymTorus::standard(2.0, 1.0).unwrap();
        let h = HarmonicTorusField::new(t.clone());
        let v = h.eval(&Vec3::new(2.0, 0.0, 0.0));
        assert!((v.norm() - 1.0 / (4.0 * PI)).abs() < 1e-12);
        assert!((v.normalize() - Vec3::y()).norm() < 1e-12);
        assert!((h.unit_flux() - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        let sec = cross_section(&t, 0, 64, 64).unwrap();
        assert!((sec.flux_of(|p| h.eval(p)) - (2.0 - 3f64.sqrt())).abs() < 1e-3);
        assert_eq!(h.eval(&Vec3::zeros()), Vec3::zeros());
    }

    #[test]
    fn harmonic_energy_equals_flux() {
        let t = AxisymTorus::standard(2.0, 1.0).unwrap();
        let g = grid(&Domain::Torus(t.clone()), 0.05);
        let f = SampledField::sample(&g, &AnalyticField::harmonic(t));
        let e = field_energy(&f);
        let phi = 2.0 - 3f64.sqrt();
        assert!((e / phi - 1.0).abs() < 0.01, "energy {e}");
    }

    #[test]
    fn harmonic_curl_small() {
        let t = AxisymTorus::standard(2.0, 1.0).unwrap();
        let g = grid(&Domain::Torus(t.clone()), 0.1);
        let f = SampledField::sample(&g, &AnalyticField::harmonic(t));
        let c = curl(&f).unwrap();
        assert!(c.max_norm() <= 0.02 * f.max_norm() / 1.0);
    }

    #[test]
    fn spheromak_eigenvalue_and_tangency() {
        let (f, xi) = AnalyticField::spheromak(unit_ball(), 1.0);
        assert!((xi - 4.493409).abs() < 1e-5);
        for k in 0..20 {
            let th = 0.05 + k as f64 * 0.15;
            let n = Vec3::new(th.sin(), 0.0, th.cos());
            assert!(f.eval(&n).dot(&n).abs() <= 1e-10);
        }
    }

    #[test]
    fn spheromak_is_beltrami_by_fine_differences() {
        let (f, xi) = AnalyticField::spheromak(unit_ball(), 1.3);
        let d = 1e-5;
        for p in [Vec3::new(0.3, -0.2, 0.4), Vec3::new(-0.5, 0.1, -0.6), Vec3::new(0.01, 0.02, 0.7)] {
            let mut m = Mat3::zeros();
            for a in 0..3 {
                let mut e = Vec3::zeros();
                e[a] = d;
                m.set_column(a, &((f.eval(&(p + e)) - f.eval(&(p - e))) / (2.0 * d)));
            }
            let c = curl_from_jacobian(&m);
            assert!((c - f.eval(&p) * xi).norm() < 1e-7, "{p:?}");
            assert!(m.trace().abs() < 1e-7);
        }
    }

    #[test]
    fn spheromak_stencil_curl() {
        let (f, xi) = AnalyticField::spheromak(unit_ball(), 1.0);
        let g = grid(&Domain::Ball(unit_ball()), 2.0 / 48.0);
        let s = SampledField::sample(&g, &f);
        let c = curl(&s).unwrap();
        let res = c.relative_residual_scaled(&s, xi).unwrap();
        assert!(res <= 0.02, "residual {res}");
    }

    #[test]
    fn linear_fields_are_exact() {
        let g = grid(&Domain::Ball(unit_ball()), 0.1);
        let rot = AnalyticField::Linear {
            matrix: Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            offset: Vec3::zeros(),
        };
        let c = curl(&SampledField::sample(&g, &rot)).unwrap();
        for v in c.values() {
            assert!((v - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-10);
        }
        let k = SampledField::sample(&g, &AnalyticField::constant(Vec3::new(1.0, 2.0, 3.0)));
        assert!(curl(&k).unwrap().values().iter().all(|v| *v == Vec3::zeros()));
        assert!(divergence(&k).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn inner_products() {
        let g = grid(&Domain::Ball(unit_ball()), 0.1);
        let a = SampledField::sample(&g, &AnalyticField::constant(Vec3::x()));
        let b = SampledField::sample(&g, &AnalyticField::constant(Vec3::y()));
        assert_eq!(l2_inner(&a, &b).unwrap(), 0.0);
        let (s, _) = AnalyticField::spheromak(unit_ball(), 1.0);
        let f = SampledField::sample(&g, &s);
        let two = f.scaled(2.0);
        assert!((l2_inner(&two, &f).unwrap() - 2.0 * field_energy(&f)).abs() < 1e-12);
        let other = grid(&Domain::Ball(unit_ball()), 0.2);
        let z = SampledField::zeros(&other);
        assert_eq!(l2_inner(&f, &z), Err(Error::GridMismatch));
    }

    #[test]
    fn degenerate_stencil() {
        let ball = Domain::Ball(unit_ball());
        let g = Arc::new(MaskedGrid::build(&ball, 0.9, 0).unwrap());
        let f = SampledField::zeros(&g);
        assert_eq!(curl(&f).unwrap_err(), Error::DegenerateStencil);
    }

    #[test]
    fn catalog_fields_are_tangent() {
        let t = AxisymTorus::standard(2.0, 1.0).unwrap();
        let samples = boundary_samples(&Domain::Torus(t.clone()), 32, 32).unwrap();
        let tube = AnalyticField::Tube(TubeField::twisted(Frame::standard(), 2.0, 1.0 - 1e-9, 1.0, 1.0).unwrap());
        for f in [AnalyticField::harmonic(t), tube] {
            let max = samples.samples.iter().map(|s| f.eval(&s.point).norm()).fold(1e-300, f64::max);
            for s in &samples.samples {
                assert!(f.eval(&s.point).dot(&s.normal).abs() <= 1e-10 * max.max(1.0));
            }
        }
        let ball = Domain::Ball(unit_ball());
        let (sph, _) = AnalyticField::spheromak(unit_ball(), 1.0);
        for s in &boundary_samples(&ball, 32, 32).unwrap().samples {
            assert!(sph.eval(&s.point).dot(&s.normal).abs() <= 1e-10);
        }
    }

    #[test]
    fn refinement_shrinks_residuals() {
        // relative L2 stencil residuals for the divergence of a tube and the
        // curl of a harmonic field
        let tube = AnalyticField::tube(Frame::standard(), 2.0, 0.5, 1.0).unwrap();
        let dom = Domain::Torus(AxisymTorus::standard(2.0, 0.6).unwrap());
        let div_l2 = |h: f64| {
            let g = grid(&dom, h);
            let f = SampledField::sample(&g, &tube);
            let d = divergence(&f).unwrap();
            let num: f64 = d.values.iter().map(|v| v * v).sum();
            let den: f64 = f.values().iter().map(|v| v.norm_squared()).sum();
            (num / den).sqrt()
        };
        let (coarse, fine) = (div_l2(0.04), div_l2(0.02));
        assert!(coarse / fine >= 3.0, "div {coarse} -> {fine}");
        let t = AxisymTorus::standard(2.0, 1.0).unwrap();
        let hdom = Domain::Torus(t.clone());
        let curl_l2 = |h: f64| {
            let g = grid(&hdom, h);
            let f = SampledField::sample(&g, &AnalyticField::harmonic(t.clone()));
            curl(&f).unwrap().l2_norm() / field_energy(&f).sqrt()
        };
        let (coarse, fine) = (curl_l2(0.1), curl_l2(0.05));
        assert!(coarse / fine >= 3.0, "curl {coarse} -> {fine}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn sampling_and_operators_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let ball = unit_ball();
                let g = grid(&Domain::Ball(ball.clone()), 0.2);
                let (s, _) = AnalyticField::spheromak(ball, 1.0);
                let q = AnalyticField::Gradient(ScalarPotential::Gaussian { center: Vec3::new(0.1, 0.0, 0.2), width: 0.5, amplitude: 1.0 });
                let combo = AnalyticField::combination(vec![(a, s.clone()), (b, q.clone())]).unwrap();
                let fs = SampledField::sample(&g, &s);
                let fq = SampledField::sample(&g, &q);
                let fc = SampledField::sample(&g, &combo);
                let lin = fs.axpby(a, &fq, b).unwrap();
                for (x, y) in fc.values().iter().zip(lin.values()) {
                    prop_assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()));
                }
                let cc = curl(&fc).unwrap();
                let cs = curl(&fs).unwrap();
                let cq = curl(&fq).unwrap();
                for k in 0..cc.n_cells() {
                    let e = cs.values()[k] * a + cq.values()[k] * b;
                    prop_assert!((cc.values()[k] - e).norm() <= 1e-9 * (1.0 + e.norm()));
                }
                let ip = l2_inner(&fc, &fs).unwrap();
                let expected = a * field_energy(&fs) + b * l2_inner(&fq, &fs).unwrap();
                prop_assert!((ip - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
            }
        }
    }
}
