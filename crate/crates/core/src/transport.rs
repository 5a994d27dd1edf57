//! Diffeomorphism families, pushforward transport and conservation sweeps.
//!
//! A [`FlowFamily`] maps initial points `x` to `y = h_t(x)` and supplies the
//! Jacobi matrix `Λ_t = ∂y/∂x`, its determinant `J_t` and the Eulerian
//! velocity `W_t(y) = ∂_t h_t(x)`. Vorticity is carried as
//! `ω_t(y) = Λ_t ω_0(x) / J_t`, density as `λ_t(y) = λ_0(x) / J_t`.
//!
//! Sweeps never remesh the image domain. Volume integrals are evaluated on
//! the fixed initial grid with weights `J_t h³`, surfaces are carried by the
//! cofactor rule `dS_t = J Λ⁻ᵀ dS_0`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::biot_savart::{BsOptions, SourceSet};
use crate::error::{Error, Result};
use crate::fields::{curl, AnalyticField, DensityField, SampledField, VectorField};
use crate::functionals::{energy_rate_quadrature, RateQuadrature};
use crate::geometry::{
    boundary_samples, cross_section, rotation_about, Domain, MaskedGrid, Mat3, SurfaceSample, Vec3,
};
use crate::par;

/// Central-difference step for the radial-compression Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-5;
/// Time step for centered time derivatives in residual checks.
pub const TIME_STEP: f64 = 1e-4;

fn zero() -> Vec3 {
    Vec3::zeros()
}

fn unit_z() -> Vec3 {
    Vec3::z()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowFamily {
    /// Rotation by `rate·t` about `axis` through `center`.
    RigidRotation {
        #[serde(default = "unit_z")]
        axis: Vec3,
        rate: f64,
        #[serde(default = "zero")]
        center: Vec3,
    },
    /// `y = c + s(t)(x − c)` with `s(t) = 1 + A sin(νt)`.
    UniformPulsation {
        amplitude: f64,
        frequency: f64,
        #[serde(default = "zero")]
        center: Vec3,
    },
    /// Azimuthal shift `t·g₀·exp(−(ρ² + z²)/σ²)` about `axis`.
    DifferentialTwist {
        rate: f64,
        width: f64,
        #[serde(default = "unit_z")]
        axis: Vec3,
        #[serde(default = "zero")]
        center: Vec3,
    },
    /// `r ↦ r(1 + A sin(νt) exp(−r²/σ²))` about `center`.
    RadialCompress {
        amplitude: f64,
        width: f64,
        frequency: f64,
        #[serde(default = "zero")]
        center: Vec3,
    },
    /// Applied in list order: the first entry acts first.
    Composite { families: Vec<FlowFamily> },
}

/// Map data at one initial point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSample {
    pub y: Vec3,
    pub lambda: Mat3,
    pub jacobian: f64,
    /// Velocity at `y`.
    pub velocity: Vec3,
}

fn unit(axis: &Vec3) -> Result<Vec3> {
    let n = axis.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParameter("flow axis must be a nonzero finite vector".into()));
    }
    Ok(axis / n)
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

fn amplitude_ok(a: f64) -> Result<()> {
    if (0.0..1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("amplitude must lie in [0, 1), got {a}")))
    }
}

fn width_ok(w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("width must be positive, got {w}")))
    }
}

/// Radial stretch factor `1 + a·exp(−r²/σ²)`.
fn radial_factor(a: f64, width: f64, r2: f64) -> f64 {
    1.0 + a * (-r2 / (width * width)).exp()
}

impl FlowFamily {
    /// Parameter checks that guarantee `J_t > 0` for all `t`.
    pub fn validate(&self) -> Result<()> {
        match self {
            FlowFamily::RigidRotation { axis, rate, center } => {
                unit(axis)?;
                finite("rate", *rate)?;
                finite("center", center.norm())
            }
            FlowFamily::UniformPulsation { amplitude, frequency, center } => {
                amplitude_ok(*amplitude)?;
                finite("frequency", *frequency)?;
                finite("center", center.norm())
            }
            FlowFamily::DifferentialTwist { rate, width, axis, center } => {
                unit(axis)?;
                finite("rate", *rate)?;
                width_ok(*width)?;
                finite("center", center.norm())
            }
            FlowFamily::RadialCompress { amplitude, width, frequency, center } => {
                // r(1 + a e^{-u}) has derivative 1 + a e^{-u}(1 − 2u) ≥ 1 − 2|a|e^{-3/2} > 0
                amplitude_ok(*amplitude)?;
                width_ok(*width)?;
                finite("frequency", *frequency)?;
                finite("center", center.norm())
            }
            FlowFamily::Composite { families } => families.iter().try_for_each(FlowFamily::validate),
        }
    }

    /// Maps `x` forward to time `t`.
    pub fn map(&self, t: f64, x: &Vec3) -> Result<Vec3> {
        Ok(self.sample_unchecked(t, x)?.y)
    }

    fn sample_unchecked(&self, t: f64, x: &Vec3) -> Result<FlowSample> {
        match self {
            FlowFamily::RigidRotation { axis, rate, center } => {
                let k = unit(axis)?;
                let r = rotation_about(&k, rate * t);
                let y = center + r * (x - center);
                Ok(FlowSample { y, lambda: r, jacobian: 1.0, velocity: k.cross(&(y - center)) * *rate })
            }
            FlowFamily::UniformPulsation { amplitude, frequency, center } => {
                let s = 1.0 + amplitude * (frequency * t).sin();
                let ds = amplitude * frequency * (frequency * t).cos();
                let y = center + (x - center) * s;
                Ok(FlowSample {
                    y,
                    lambda: Mat3::identity() * s,
                    jacobian: s * s * s,
                    velocity: (y - center) * (ds / s),
                })
            }
            FlowFamily::DifferentialTwist { rate, width, axis, center } => {
                let k = unit(axis)?;
                let q = x - center;
                let g = (-q.norm_squared() / (width * width)).exp();
                let theta = t * rate * g;
                let rot = rotation_about(&k, theta);
                let y = center + rot * q;
                // Λ = R(θ)(I + (k × q) ∇θᵀ) and ∇θ ∥ q, so det Λ = 1
                let grad_theta = q * (-2.0 * theta / (width * width));
                let lambda = rot * (Mat3::identity() + k.cross(&q) * grad_theta.transpose());
                Ok(FlowSample {
                    y,
                    lambda,
                    jacobian: lambda.determinant(),
                    velocity: k.cross(&(y - center)) * (rate * g),
                })
            }
            FlowFamily::RadialCompress { amplitude, width, frequency, center } => {
                let a = amplitude * (frequency * t).sin();
                let da = amplitude * frequency * (frequency * t).cos();
                let f = |p: &Vec3| {
                    let q = p - center;
                    center + q * radial_factor(a, *width, q.norm_squared())
                };
                let y = f(x);
                let mut lambda = Mat3::zeros();
                for axis in 0..3 {
                    let mut e = Vec3::zeros();
                    e[axis] = JACOBIAN_STEP;
                    lambda.set_column(axis, &((f(&(x + e)) - f(&(x - e))) / (2.0 * JACOBIAN_STEP)));
                }
                let q = x - center;
                let velocity = q * (da * (-q.norm_squared() / (width * width)).exp());
                Ok(FlowSample { y, lambda, jacobian: lambda.determinant(), velocity })
            }
            FlowFamily::Composite { families } => {
                let mut acc = FlowSample { y: *x, lambda: Mat3::identity(), jacobian: 1.0, velocity: Vec3::zeros() };
                for fam in families {
                    let s = fam.sample_unchecked(t, &acc.y)?;
                    acc = FlowSample {
                        y: s.y,
                        lambda: s.lambda * acc.lambda,
                        jacobian: s.jacobian * acc.jacobian,
                        velocity: s.velocity + s.lambda * acc.velocity,
                    };
                }
                Ok(acc)
            }
        }
    }

    /// Solves `h_t(x) = y` for `x`.
    pub fn inverse(&self, t: f64, y: &Vec3) -> Result<Vec3> {
        match self {
            FlowFamily::RigidRotation { axis, rate, center } => {
                let r = rotation_about(&unit(axis)?, -rate * t);
                Ok(center + r * (y - center))
            }
            FlowFamily::UniformPulsation { amplitude, frequency, center } => {
                let s = 1.0 + amplitude * (frequency * t).sin();
                Ok(center + (y - center) / s)
            }
            FlowFamily::DifferentialTwist { rate, width, axis, center } => {
                // |q| is preserved by the rotation, so θ can be read off at y
                let q = y - center;
                let theta = t * rate * (-q.norm_squared() / (width * width)).exp();
                Ok(center + rotation_about(&unit(axis)?, -theta) * q)
            }
            FlowFamily::RadialCompress { amplitude, width, frequency, center } => {
                let a = amplitude * (frequency * t).sin();
                let q = y - center;
                let target = q.norm();
                if target == 0.0 {
                    return Ok(*center);
                }
                let s2 = width * width;
                let f = |r: f64| r * radial_factor(a, *width, r * r) - target;
                let df = |r: f64| 1.0 + a * (-r * r / s2).exp() * (1.0 - 2.0 * r * r / s2);
                let (mut lo, mut hi) = (target / (1.0 + a.abs()), target / (1.0 - a.abs()));
                let mut r = target / radial_factor(a, *width, target * target);
                for _ in 0..100 {
                    let v = f(r);
                    if v.abs() <= 1e-15 * target {
                        break;
                    }
                    if v > 0.0 {
                        hi = r;
                    } else {
                        lo = r;
                    }
                    let step = r - v / df(r);
                    r = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
                }
                Ok(center + q * (r / target))
            }
            FlowFamily::Composite { families } => {
                let mut x = *y;
                for fam in families.iter().rev() {
                    x = fam.inverse(t, &x)?;
                }
                Ok(x)
            }
        }
    }
}

/// `{y, Λ, J, W}` at `x`, rejecting non-positive Jacobians.
pub fn evaluate_flow(fam: &FlowFamily, t: f64, x: &Vec3) -> Result<FlowSample> {
    let s = fam.sample_unchecked(t, x)?;
    if !(s.jacobian > 0.0) {
        return Err(Error::SingularFlow { t, det: s.jacobian });
    }
    Ok(s)
}

/// Eulerian velocity `W_t` as an evaluation rule in `y`.
#[derive(Clone, Debug)]
pub struct FlowVelocity {
    pub family: FlowFamily,
    pub t: f64,
}

impl VectorField for FlowVelocity {
    fn eval(&self, y: &Vec3) -> Vec3 {
        self.family
            .inverse(self.t, y)
            .and_then(|x| self.family.sample_unchecked(self.t, &x))
            .map(|s| s.velocity)
            .unwrap_or_else(|_| Vec3::zeros())
    }
}

/// Pushforward `ω_t(y) = Λ ω₀(x) / J` with `x = h_t⁻¹(y)`.
///
/// The rule extends the catalog field past the image domain; use
/// [`TransportedField::try_eval`] to reject points outside it.
#[derive(Clone, Debug)]
pub struct TransportedField {
    pub family: FlowFamily,
    pub t: f64,
    pub omega0: AnalyticField,
    pub domain0: Domain,
}

impl TransportedField {
    pub fn new(family: FlowFamily, t: f64, omega0: AnalyticField, domain0: Domain) -> Result<Self> {
        family.validate()?;
        Ok(Self { family, t, omega0, domain0 })
    }

    fn at_initial(&self, x: &Vec3) -> Result<Vec3> {
        let s = evaluate_flow(&self.family, self.t, x)?;
        Ok(s.lambda * self.omega0.eval(x) / s.jacobian)
    }

    pub fn try_eval(&self, y: &Vec3) -> Result<Vec3> {
        let x = self.family.inverse(self.t, y)?;
        if !self.domain0.contains(&x) {
            return Err(Error::OutsideImage);
        }
        self.at_initial(&x)
    }
}

impl VectorField for TransportedField {
    fn eval(&self, y: &Vec3) -> Vec3 {
        self.family
            .inverse(self.t, y)
            .and_then(|x| self.at_initial(&x))
            .unwrap_or_else(|_| Vec3::zeros())
    }
}

pub fn transported_field(
    fam: &FlowFamily,
    t: f64,
    omega0: &AnalyticField,
    domain0: &Domain,
) -> Result<TransportedField> {
    TransportedField::new(fam.clone(), t, omega0.clone(), domain0.clone())
}

/// `λ_t(y) = λ₀(x)/J_t(x)`.
pub fn transported_density(fam: &FlowFamily, t: f64, density0: &DensityField, y: &Vec3) -> Result<f64> {
    let x = fam.inverse(t, y)?;
    let s = evaluate_flow(fam, t, &x)?;
    Ok(density0.eval(&x) / s.jacobian)
}

/// Masked grid over the image `h_t(Ω₀)`, built by mapping a lattice of
/// `Ω₀` for the bounding box and testing membership through the inverse.
pub fn image_grid(fam: &FlowFamily, t: f64, domain0: &Domain, h: f64, padding: usize) -> Result<MaskedGrid> {
    fam.validate()?;
    let (lo, hi) = domain0.aabb();
    let n = 24;
    let mut blo = Vec3::repeat(f64::INFINITY);
    let mut bhi = Vec3::repeat(f64::NEG_INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let f = Vec3::new(i as f64, j as f64, k as f64) / n as f64;
                let x = lo + (hi - lo).component_mul(&f);
                let y = fam.map(t, &x)?;
                blo = blo.inf(&y);
                bhi = bhi.sup(&y);
            }
        }
    }
    // lattice extremes can miss the true hull between samples
    let slack = (bhi - blo).norm() / n as f64;
    let pad = Vec3::repeat(slack);
    MaskedGrid::build_with(h, padding, (blo - pad, bhi + pad), |y| {
        fam.inverse(t, y).map(|x| domain0.contains(&x)).unwrap_or(false)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub max_abs: f64,
    /// Largest `|∂λ/∂t|` or `|∇·(λW)|` seen, the normalisation of `relative`.
    pub scale: f64,
    /// `max_abs / scale`, or `max_abs` when the scale vanishes.
    pub relative: f64,
}

/// Centered-difference residual of `∂λ/∂t + ∇·(λW) = 0` at fixed probes.
pub fn continuity_residual(
    fam: &FlowFamily,
    density0: &DensityField,
    times: &[f64],
    probes: &[Vec3],
    h: f64,
) -> Result<ContinuityReport> {
    fam.validate()?;
    density0.validate()?;
    if !(h > 0.0) {
        return Err(Error::DegenerateGrid { h });
    }
    let lam = |t: f64, y: &Vec3| transported_density(fam, t, density0, y);
    let flux = |t: f64, y: &Vec3| -> Result<Vec3> {
        let x = fam.inverse(t, y)?;
        let s = evaluate_flow(fam, t, &x)?;
        Ok(s.velocity * (density0.eval(&x) / s.jacobian))
    };
    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &t in times {
        for p in probes {
            let dt = (lam(t + TIME_STEP, p)? - lam(t - TIME_STEP, p)?) / (2.0 * TIME_STEP);
            let mut div = 0.0;
            for axis in 0..3 {
                let mut e = Vec3::zeros();
                e[axis] = h;
                div += (flux(t, &(p + e))?[axis] - flux(t, &(p - e))?[axis]) / (2.0 * h);
            }
            max_abs = max_abs.max((dt + div).abs());
            scale = scale.max(dt.abs()).max(div.abs());
        }
    }
    let relative = if scale > 0.0 { max_abs / scale } else { max_abs };
    Ok(ContinuityReport { max_abs, scale, relative })
}

/// Relative L² residual of `∂ω/∂t = ∇×(W×ω)` at stencil cells of `grid`,
/// which should cover the image domain at time `t`.
pub fn transport_pde_residual(
    fam: &FlowFamily,
    t: f64,
    omega0: &AnalyticField,
    domain0: &Domain,
    grid: &Arc<MaskedGrid>,
) -> Result<f64> {
    let at = |s: f64| transported_field(fam, s, omega0, domain0);
    let now = SampledField::sample(grid, &at(t)?);
    let plus = SampledField::sample(grid, &at(t + TIME_STEP)?);
    let minus = SampledField::sample(grid, &at(t - TIME_STEP)?);
    let dwdt = plus.axpby(1.0 / (2.0 * TIME_STEP), &minus, -1.0 / (2.0 * TIME_STEP))?;
    let w = FlowVelocity { family: fam.clone(), t };
    let wxo: Vec<Vec3> = par::map_indexed(grid.len(), |o| w.eval(&grid.center(o)).cross(&now.values()[o]));
    let rhs = curl(&SampledField::from_values(grid, wxo)?)?;
    let r = rhs.relative_residual(&dwdt)?;
    if r.is_finite() {
        return Ok(r);
    }
    // ∂ω/∂t vanishes on the stencil set: report the size of the curl term instead
    Ok(rhs.max_norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub bs: BsOptions,
    /// Boundary sampling resolution for surface terms.
    pub boundary_u: usize,
    pub boundary_v: usize,
    pub section_radial: usize,
    pub section_angular: usize,
    /// Time step for the centered energy derivative, as a fraction of the
    /// sweep span.
    pub fd_fraction: f64,
    /// Offset of the rule curl in the energy-rate volume term, as a
    /// fraction of the grid spacing.
    pub curl_fraction: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            bs: BsOptions::default(),
            boundary_u: 96,
            boundary_v: 48,
            section_radial: 48,
            section_angular: 32,
            fd_fraction: 1e-4,
            curl_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub h_bs: f64,
    pub energy: f64,
    pub de_dt_formula: f64,
    pub de_dt_fd: f64,
    /// Flux through the transported meridian section of each torus.
    pub fluxes: Vec<f64>,
    /// `max |J − 1|` over the grid.
    pub max_jacobian_deviation: f64,
}

/// Surface samples carried by `dS_t = J Λ⁻ᵀ dS₀`.
pub fn transport_surface(fam: &FlowFamily, t: f64, samples: &[SurfaceSample]) -> Result<Vec<SurfaceSample>> {
    samples
        .iter()
        .map(|s| {
            let f = evaluate_flow(fam, t, &s.point)?;
            let inv_t = f.lambda.try_inverse().ok_or(Error::SingularFlow { t, det: f.jacobian })?.transpose();
            let da = inv_t * s.vector_area() * f.jacobian;
            let area = da.norm();
            let normal = if area > 0.0 { da / area } else { s.normal };
            Ok(SurfaceSample { point: f.y, normal, area })
        })
        .collect()
}

struct Pullback {
    points: Vec<Vec3>,
    weights: Vec<f64>,
    omega: Vec<Vec3>,
    max_dev: f64,
}

fn pull_back(fam: &FlowFamily, t: f64, omega0: &[Vec3], grid: &MaskedGrid) -> Result<Pullback> {
    let h3 = grid.cell_volume();
    let samples = par::map_indexed(grid.len(), |o| evaluate_flow(fam, t, &grid.center(o)));
    let mut out = Pullback {
        points: Vec::with_capacity(grid.len()),
        weights: Vec::with_capacity(grid.len()),
        omega: Vec::with_capacity(grid.len()),
        max_dev: 0.0,
    };
    for (o, s) in samples.into_iter().enumerate() {
        let s = s?;
        out.points.push(s.y);
        out.weights.push(s.jacobian * h3);
        out.omega.push(s.lambda * omega0[o] / s.jacobian);
        out.max_dev = out.max_dev.max((s.jacobian - 1.0).abs());
    }
    Ok(out)
}

fn pulled_energy(p: &Pullback) -> f64 {
    par::sum_indexed(p.points.len(), |k| p.omega[k].norm_squared() * p.weights[k])
}

/// Energy `E(t)` by pullback quadrature on the initial grid.
pub fn transported_energy(fam: &FlowFamily, t: f64, omega0: &AnalyticField, grid: &MaskedGrid) -> Result<f64> {
    let w0: Vec<Vec3> = grid.centers().iter().map(|x| omega0.eval(x)).collect();
    Ok(pulled_energy(&pull_back(fam, t, &w0, grid)?))
}

/// Conservation table over `times`; one row per requested time.
pub fn conservation_sweep(
    fam: &FlowFamily,
    omega0: &AnalyticField,
    domain0: &Domain,
    times: &[f64],
    grid0: &Arc<MaskedGrid>,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    fam.validate()?;
    opts.bs.validate()?;
    if times.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one time".into()));
    }
    let w0: Vec<Vec3> = grid0.centers().iter().map(|x| omega0.eval(x)).collect();
    let span = times.iter().copied().fold(f64::NEG_INFINITY, f64::max) - times.iter().copied().fold(f64::INFINITY, f64::min);
    let dt = opts.fd_fraction * if span > 0.0 { span } else { 1.0 };
    let boundary0 = boundary_samples(domain0, opts.boundary_u, opts.boundary_v)?;
    let sections0 = domain0
        .tori()
        .into_iter()
        .enumerate()
        .map(|(i, t)| cross_section(t, i, opts.section_radial, opts.section_angular))
        .collect::<Result<Vec<_>>>()?;
    let eps2 = opts.bs.regularization * opts.bs.regularization;

    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let p = pull_back(fam, t, &w0, grid0)?;
        let sources = SourceSet::from_parts(&p.points, &p.omega, &p.weights)?;
        let bs = par::map_indexed_chunked(p.points.len(), 16, |k| {
            if p.omega[k] == Vec3::zeros() {
                Vec3::zeros()
            } else {
                sources.curl_kernel_at(&p.points[k], eps2)
            }
        });
        let h_bs = par::sum_indexed(p.points.len(), |k| p.omega[k].dot(&bs[k]) * p.weights[k]);
        let energy = pulled_energy(&p);
        let e_plus = pulled_energy(&pull_back(fam, t + dt, &w0, grid0)?);
        let e_minus = pulled_energy(&pull_back(fam, t - dt, &w0, grid0)?);

        let omega_t = transported_field(fam, t, omega0, domain0)?;
        let w = FlowVelocity { family: fam.clone(), t };
        let surface = transport_surface(fam, t, &boundary0.samples)?;
        let de_dt_formula = energy_rate_quadrature(
            &omega_t,
            &w,
            &RateQuadrature {
                points: &p.points,
                weights: &p.weights,
                delta: opts.curl_fraction * grid0.spacing(),
                surface: &surface,
            },
        );
        let fluxes = sections0
            .iter()
            .map(|s| {
                let moved = transport_surface(fam, t, &s.samples)?;
                Ok(moved.iter().map(|m| omega_t.eval(&m.point).dot(&m.normal) * m.area).sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        log::debug!("sweep t={t}: H={h_bs:.6e} E={energy:.6e}");
        rows.push(SweepRow {
            t,
            h_bs,
            energy,
            de_dt_formula,
            de_dt_fd: (e_plus - e_minus) / (2.0 * dt),
            fluxes,
            max_jacobian_deviation: p.max_dev,
        });
    }
    Ok(rows)
}

/// Writes sweep rows as CSV with 17 significant digits.
pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    let n = rows.first().map_or(0, |r| r.fluxes.len());
    write!(out, "t,H_bs,E,dEdt_formula,dEdt_fd")?;
    for i in 1..=n {
        write!(out, ",phi_{i}")?;
    }
    writeln!(out)?;
    for r in rows {
        write!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.h_bs, r.energy, r.de_dt_formula, r.de_dt_fd)?;
        for f in &r.fluxes {
            write!(out, ",{f:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Largest relative deviation of `values` from their first entry.
pub fn relative_drift(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else { return 0.0 };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    values.iter().map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}
