//! Magnetic helicities: Biot-Savart, potential (with a harmonic gauge term)
//! and cross helicity, plus the linked thin-tube identity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::biot_savart::{bs_on, bs_on_grid, vector_potential, BsOptions, Targets};
use crate::error::{Error, Result};
use crate::fields::{curl, curl_of_rule_with, l2_inner, stencil_to_sampled, AnalyticField, SampledField, ScalarPotential, TubeField, VectorField};
use crate::functionals::{curve_distance, helicity_bs, linking_number, HelicityReport};
use crate::geometry::{boundary_samples, Domain, MaskedGrid, PolylineCurve, Vec3};
use crate::hodge::{flux, HkBasis};
use crate::par;
use crate::transport::{FlowFamily, FlowVelocity};

/// Gate on `‖∇×A − B‖/‖B‖` at stencil cells.
pub const CURL_GATE: f64 = 5e-2;

/// Gauge freedom in the induction law for `A`: a scalar gradient and a
/// harmonic term `Π = Σ κ_i l_i`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeChoice {
    #[serde(default)]
    pub scalar: Option<ScalarPotential>,
    /// Circulations of `Π` over the basis loops.
    #[serde(default)]
    pub kappa: Vec<f64>,
}

impl GaugeChoice {
    pub fn harmonic(kappa: Vec<f64>) -> Self {
        Self { scalar: None, kappa }
    }

    fn check(&self, basis: &HkBasis) -> Result<()> {
        if self.kappa.len() != basis.len() {
            return Err(Error::InvalidParameter(format!(
                "gauge has {} circulations for a basis of {}",
                self.kappa.len(),
                basis.len()
            )));
        }
        Ok(())
    }

    /// `Π` as a field over the basis.
    pub fn pi(&self, basis: &HkBasis) -> Result<AnalyticField> {
        self.check(basis)?;
        Ok(basis.circulation_expansion(&self.kappa))
    }
}

/// Magnetic field and a vector potential on one grid.
#[derive(Clone, Debug)]
pub struct MagneticState {
    b: SampledField,
    a: SampledField,
    b_rule: Option<AnalyticField>,
    curl_residual: f64,
}

fn curl_residual(a: &SampledField, b: &SampledField) -> Result<f64> {
    curl(a)?.relative_residual(b)
}

impl MagneticState {
    /// Pairs `A` with `B`, rejecting pairs whose stencil curl misses `B`.
    pub fn new(a: SampledField, b: SampledField) -> Result<Self> {
        if !a.same_grid(&b) {
            return Err(Error::GridMismatch);
        }
        let r = if b.max_norm() == 0.0 && a.max_norm() == 0.0 { 0.0 } else { curl_residual(&a, &b)? };
        if r > CURL_GATE {
            return Err(Error::CurlMismatch { residual: r, tolerance: CURL_GATE });
        }
        Ok(Self { b, a, b_rule: None, curl_residual: r })
    }

    /// `A = BS(B)`, whose curl is `B` for solenoidal fields tangent to the boundary.
    pub fn from_biot_savart(b_rule: &AnalyticField, grid: &Arc<MaskedGrid>, opts: &BsOptions) -> Result<Self> {
        let b = SampledField::sample(grid, b_rule);
        let a = if b.max_norm() == 0.0 { SampledField::zeros(grid) } else { bs_on_grid(&b, opts)? };
        let mut s = Self::new(a, b)?;
        s.b_rule = Some(b_rule.clone());
        Ok(s)
    }

    /// `A = P(∇×B)`, the Newtonian potential of the current, for fields that
    /// vanish near the boundary. The current is differenced from the rule
    /// with an offset far below the grid spacing.
    pub fn from_current_potential(b_rule: &AnalyticField, grid: &Arc<MaskedGrid>, opts: &BsOptions) -> Result<Self> {
        let b = SampledField::sample(grid, b_rule);
        let a = if b.max_norm() == 0.0 {
            SampledField::zeros(grid)
        } else {
            let j = stencil_to_sampled(&curl_of_rule_with(grid, b_rule, 1e-3 * grid.spacing()));
            SampledField::from_values(grid, vector_potential(&j, &Targets::Cells, opts)?)?
        };
        let mut s = Self::new(a, b)?;
        s.b_rule = Some(b_rule.clone());
        Ok(s)
    }

    /// Adds a curl-free field to `A`; `B` and the gate are unchanged in the
    /// continuum, so the gate is re-evaluated on the grid.
    pub fn with_added_potential<F: VectorField + ?Sized>(&self, extra: &F) -> Result<Self> {
        let e = SampledField::sample(self.a.grid(), extra);
        let mut s = Self::new(self.a.axpby(1.0, &e, 1.0)?, self.b.clone())?;
        s.b_rule = self.b_rule.clone();
        Ok(s)
    }

    /// `A + Σ κ_i l_i`.
    pub fn with_harmonic_offset(&self, basis: &HkBasis, kappa: &[f64]) -> Result<Self> {
        if kappa.len() != basis.len() {
            return Err(Error::InvalidParameter("offset length differs from basis size".into()));
        }
        self.with_added_potential(&basis.circulation_expansion(kappa))
    }

    /// `A + ∇χ`.
    pub fn gauge_shifted(&self, chi: &ScalarPotential) -> Result<Self> {
        self.with_added_potential(&AnalyticField::Gradient(chi.clone()))
    }

    pub fn b(&self) -> &SampledField {
        &self.b
    }

    pub fn a(&self) -> &SampledField {
        &self.a
    }

    pub fn curl_residual(&self) -> f64 {
        self.curl_residual
    }
}

pub fn magnetic_bs_helicity(b: &SampledField, opts: &BsOptions) -> Result<HelicityReport> {
    if b.max_norm() == 0.0 {
        return Ok(HelicityReport {
            value: 0.0,
            method: crate::functionals::HelicityMethod::BsInnerProduct,
            h: b.grid().spacing(),
            n_cells: b.grid().len(),
        });
    }
    helicity_bs(b, opts)
}

/// `⟨A | B⟩`.
pub fn potential_helicity(state: &MagneticState) -> Result<f64> {
    l2_inner(&state.a, &state.b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmRate {
    /// `Σ Φ_i(B) κ_i` from section fluxes.
    pub flux_circulation: f64,
    /// `⟨Π | B⟩` on the grid.
    pub l2: f64,
}

impl HmRate {
    pub fn discrepancy(&self) -> f64 {
        (self.flux_circulation - self.l2).abs()
    }
}

/// Rate of the potential helicity for the given gauge.
pub fn hm_rate<F: VectorField + ?Sized>(
    gauge: &GaugeChoice,
    b: &F,
    grid: &Arc<MaskedGrid>,
    basis: &HkBasis,
) -> Result<HmRate> {
    let pi = gauge.pi(basis)?;
    let flux_circulation = basis.sections.iter().zip(&gauge.kappa).map(|(s, k)| flux(b, s) * k).sum();
    let bs = SampledField::sample(grid, b);
    let ps = SampledField::sample(grid, &pi);
    Ok(HmRate { flux_circulation, l2: l2_inner(&ps, &bs)? })
}

/// Gauge coefficients with `Σ Φ_i κ_i = 0` on two tori: `κ = (c, −c Φ₁/Φ₂)`.
pub fn null_gauge(fluxes: [f64; 2], c: f64) -> Result<GaugeChoice> {
    if fluxes[1] == 0.0 {
        return Err(Error::InvalidParameter("second flux must be nonzero".into()));
    }
    Ok(GaugeChoice::harmonic(vec![c, -c * fluxes[0] / fluxes[1]]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmRateCheck {
    pub rate_formula: HmRate,
    pub rate_fd: f64,
    pub dt: f64,
    /// `rate_fd − rate_formula.flux_circulation`.
    pub drift: f64,
}

fn boundary_gap(domain: &Domain, y: &Vec3) -> f64 {
    match domain {
        Domain::Ball(b) => ((y - b.center).norm() - b.radius).abs(),
        Domain::Torus(t) => (t.meridian_radius(y) - t.minor_radius).abs(),
        Domain::Union(cs) => cs.iter().map(|c| boundary_gap(c, y)).fold(f64::INFINITY, f64::min),
    }
}

/// Checks that the family carries boundary samples of `domain` onto its
/// boundary at `t` and `t + dt`.
pub fn check_domain_preserving(fam: &FlowFamily, domain: &Domain, t: f64, dt: f64) -> Result<()> {
    let (_, radius) = domain.bounding_sphere();
    let samples = boundary_samples(domain, 24, 12)?;
    for s in &samples.samples {
        for time in [t, t + dt] {
            let y = fam.map(time, &s.point)?;
            if boundary_gap(domain, &y) > 1e-9 * radius {
                return Err(Error::NonPreservingFlow);
            }
        }
    }
    Ok(())
}

/// One explicit Euler step `A′ = A + Δt(u×B + Π + ∇φ)` with `B = ∇_h×A`,
/// compared against [`hm_rate`].
///
/// Both helicities are taken as `⟨A | ∇_h×A⟩` over stencil cells, so the
/// step sees a discrete curl that is consistent at both ends.
pub fn hm_rate_fd_check(
    state: &MagneticState,
    fam: &FlowFamily,
    t: f64,
    gauge: &GaugeChoice,
    basis: &HkBasis,
    domain: &Domain,
    dt: f64,
) -> Result<HmRateCheck> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    fam.validate()?;
    check_domain_preserving(fam, domain, t, dt)?;
    let grid = state.a.grid();
    let rate_formula = match &state.b_rule {
        Some(rule) => hm_rate(gauge, rule, grid, basis)?,
        None => {
            let nearest = crate::fields::FnField(|p: &Vec3| state.b.at_point(p).unwrap_or_else(|_| Vec3::zeros()));
            hm_rate(gauge, &nearest, grid, basis)?
        }
    };

    let b_h = curl(&state.a)?;
    let h0 = b_h.inner_with(&state.a)?;
    let b_full = stencil_to_sampled(&b_h);
    let u = FlowVelocity { family: fam.clone(), t };
    let pi = gauge.pi(basis)?;
    let rhs = par::map_indexed(grid.len(), |o| {
        let p = grid.center(o);
        let mut v = u.eval(&p).cross(&b_full.values()[o]) + pi.eval(&p);
        if let Some(chi) = &gauge.scalar {
            v += chi.gradient(&p);
        }
        v
    });
    let a1 = state.a.axpby(1.0, &SampledField::from_values(grid, rhs)?, dt)?;
    let h1 = curl(&a1)?.inner_with(&a1)?;
    let rate_fd = (h1 - h0) / dt;
    Ok(HmRateCheck { rate_formula, rate_fd, dt, drift: rate_fd - rate_formula.flux_circulation })
}

/// `⟨u | B⟩`.
pub fn cross_helicity(u: &SampledField, b: &SampledField) -> Result<f64> {
    l2_inner(u, b)
}

/// `⟨u − αA | B⟩`.
pub fn helicity_difference_mhd(u: &SampledField, a: &SampledField, b: &SampledField, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter("alpha must be finite".into()));
    }
    l2_inner(&u.axpby(1.0, a, -alpha)?, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinTubeReport {
    /// `⟨BS(ω) | B⟩` over the B-tube grid.
    pub cross_helicity: f64,
    /// `⟨BS(B) | ω⟩` over the ω-tube grid.
    pub mutual_helicity: f64,
    pub link: f64,
    /// `Link · Φ_B · Φ_ω`.
    pub expected: f64,
}

fn core_curve(t: &TubeField) -> Result<PolylineCurve> {
    PolylineCurve::circle(&t.frame, t.loop_radius, 256)
}

/// Cross helicity of two thin tubes against the linking identity.
///
/// `u` is reconstructed as `BS(ω)`, so `∇×u` is the ω-tube. Each tube is
/// sampled on its own grid of spacing `h` over its support.
pub fn thin_tube_check(omega_tube: &TubeField, b_tube: &TubeField, h: f64, opts: &BsOptions) -> Result<ThinTubeReport> {
    let (cw, cb) = (core_curve(omega_tube)?, core_curve(b_tube)?);
    if curve_distance(&cw, &cb) <= omega_tube.tube_radius + b_tube.tube_radius {
        return Err(Error::OverlappingDomains);
    }
    let gw = Arc::new(MaskedGrid::build(&Domain::Torus(omega_tube.support()), h, 1)?);
    let gb = Arc::new(MaskedGrid::build(&Domain::Torus(b_tube.support()), h, 1)?);
    let w = SampledField::sample(&gw, &AnalyticField::Tube(omega_tube.clone()));
    let b = SampledField::sample(&gb, &AnalyticField::Tube(b_tube.clone()));
    let u = bs_on(&w, &gb, opts)?;
    let v = bs_on(&b, &gw, opts)?;
    let link = linking_number(&cw, &cb)?;
    Ok(ThinTubeReport {
        cross_helicity: l2_inner(&u, &b)?,
        mutual_helicity: l2_inner(&v, &w)?,
        link,
        expected: link * omega_tube.flux * b_tube.flux,
    })
}
