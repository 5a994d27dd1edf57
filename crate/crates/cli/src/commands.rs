use std::sync::Arc;

use helicity_core::biot_savart::{bs_on_grid, verify_curl_inverse, BiotSavartField, BsOptions};
use helicity_core::fields::{
    curl, field_energy, AnalyticField, FnField, SampledField, VectorField,
};
use helicity_core::functionals::{
    delta_h_surface, delta_h_volume, helicity_bs, helicity_double_integral, helicity_physical, linking_number,
    writhe, CurlSource,
};
use helicity_core::geometry::{boundary_samples, Domain, MaskedGrid};
use helicity_core::hodge::{
    build_hk_basis, circulation, decompose_curlfree, flux, gram_check, hk_project, inner_product_flux_circ,
    HkBasis, HkResolution,
};
use helicity_core::mhd::{hm_rate_fd_check, potential_helicity, GaugeChoice, MagneticState};
use helicity_core::transport::{conservation_sweep, relative_drift, write_sweep_csv, SweepOptions};
use helicity_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{CurveSpec, ExperimentConfig, PotentialSpec};
use crate::error::CliError;

/// Finished result of one subcommand, not yet written anywhere.
pub struct Outcome {
    pub body: String,
    pub summary: String,
    pub extension: &'static str,
}

fn json_outcome(command: &str, config: &ExperimentConfig, result: serde_json::Value, summary: String) -> Outcome {
    let doc = json!({ "command": command, "config": config, "result": result });
    let mut body = serde_json::to_string_pretty(&doc).expect("json values always serialize");
    body.push('\n');
    Outcome { body, summary, extension: "json" }
}

fn zero() -> f64 {
    0.0
}

fn default_chunk() -> usize {
    64
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelOptions {
    #[serde(default = "zero")]
    pub regularization: f64,
    #[serde(default = "default_chunk")]
    pub chunk: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { regularization: 0.0, chunk: 64 }
    }
}

impl KernelOptions {
    fn resolve(self) -> Result<BsOptions, CliError> {
        let o = BsOptions { regularization: self.regularization, chunk: self.chunk };
        o.validate().map_err(CliError::config)?;
        Ok(o)
    }
}

fn tori_basis(domain: &Domain, res: HkResolution) -> Result<HkBasis, CliError> {
    let tori: Vec<_> = domain.tori().into_iter().cloned().collect();
    build_hk_basis(&tori, res).map_err(CliError::config)
}

fn check_tolerance(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WritheOptions {
    curve: CurveSpec,
}

pub fn writhe_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: WritheOptions = cfg.options()?;
    let c = o.curve.build()?;
    let wr = writhe(&c)?;
    let result = json!({ "writhe": wr, "segments": c.n_segments(), "length": c.length() });
    Ok(json_outcome("writhe", &cfg, result, format!("writhe = {wr:.6}")))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkOptions {
    curves: [CurveSpec; 2],
}

pub fn link_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: LinkOptions = cfg.options()?;
    let a = o.curves[0].build()?;
    let b = o.curves[1].build()?;
    let lk = linking_number(&a, &b)?;
    let result = json!({ "link": lk, "segments": [a.n_segments(), b.n_segments()] });
    Ok(json_outcome("link", &cfg, result, format!("link = {lk:.3}")))
}

fn default_curl_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BsCmdOptions {
    #[serde(default)]
    kernel: KernelOptions,
    /// Largest accepted relative residual of `∇×BS(V) − V`.
    #[serde(default = "default_curl_tolerance")]
    tolerance: f64,
}

pub fn bs_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: BsCmdOptions = cfg.options()?;
    check_tolerance("tolerance", o.tolerance)?;
    let opts = o.kernel.resolve()?;
    let domain = cfg.require_domain()?;
    let field = cfg.require_field()?;
    let grid = cfg.require_grid(&domain)?;
    let v = SampledField::sample(&grid, &field);
    let report = verify_curl_inverse(&v, &opts)?;
    if report.residual > o.tolerance {
        return Err(CliError::Gate(Error::CurlMismatch { residual: report.residual, tolerance: o.tolerance }));
    }
    let result = json!({
        "curl_residual": report.residual,
        "stencil_cells": report.n_cells,
        "cells": grid.len(),
        "h": report.h,
        "energy": field_energy(&v),
    });
    Ok(json_outcome("bs", &cfg, result, format!("curl residual = {:.4e} over {} cells", report.residual, report.n_cells)))
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum HelicityPath {
    #[default]
    Bs,
    DoubleIntegral,
    Physical,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HelicityOptions {
    #[serde(default)]
    method: HelicityPath,
    #[serde(default)]
    kernel: KernelOptions,
}

pub fn helicity_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: HelicityOptions = cfg.options()?;
    let opts = o.kernel.resolve()?;
    let domain = cfg.require_domain()?;
    let field = cfg.require_field()?;
    let grid = cfg.require_grid(&domain)?;
    let v = SampledField::sample(&grid, &field);
    let report = match o.method {
        HelicityPath::Bs => helicity_bs(&v, &opts)?,
        HelicityPath::DoubleIntegral => helicity_double_integral(&v),
        HelicityPath::Physical => helicity_physical(&v, CurlSource::Rule(&field))?,
    };
    let summary = format!("helicity = {:.6e}", report.value);
    let result = json!({ "report": report, "energy": field_energy(&v) });
    Ok(json_outcome("helicity", &cfg, result, summary))
}

fn default_boundary_u() -> usize {
    96
}

fn default_boundary_v() -> usize {
    48
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaOptions {
    /// Coefficients `c_i` of the harmonic fields `l_i` added to `BS(ω)`.
    #[serde(default)]
    coefficients: Vec<f64>,
    #[serde(default = "default_boundary_u")]
    boundary_u: usize,
    #[serde(default = "default_boundary_v")]
    boundary_v: usize,
    #[serde(default)]
    resolution: HkResolution,
    #[serde(default)]
    kernel: KernelOptions,
}

/// Velocity `u = BS(ω) + Σ c_i l_i` and the three helicity-difference forms.
pub fn delta_h_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: DeltaOptions = cfg.options()?;
    let opts = o.kernel.resolve()?;
    let domain = cfg.require_domain()?;
    let omega_rule = cfg.require_field()?;
    let grid = cfg.require_grid(&domain)?;
    let basis = tori_basis(&domain, o.resolution)?;
    let coefficients = if o.coefficients.is_empty() { vec![0.0; basis.len()] } else { o.coefficients.clone() };
    if coefficients.len() != basis.len() {
        return Err(CliError::Config(format!(
            "{} coefficients given for a domain with {} tori",
            coefficients.len(),
            basis.len()
        )));
    }
    let boundary = boundary_samples(&domain, o.boundary_u, o.boundary_v).map_err(CliError::config)?;

    let omega = SampledField::sample(&grid, &omega_rule);
    let harmonic = AnalyticField::combination(
        coefficients.iter().zip(&basis.l_fields).map(|(c, l)| (*c, l.clone())).collect(),
    )
    .map_err(CliError::config)?;
    let bs_cells = bs_on_grid(&omega, &opts)?;
    let u = bs_cells.axpby(1.0, &SampledField::sample(&grid, &harmonic), 1.0)?;
    let volume = delta_h_volume(&u, &omega, &opts)?;

    let bs_rule = BiotSavartField::new(&omega, &opts)?;
    let u_rule = FnField(|p: &helicity_core::Vec3| bs_rule.eval(p) + harmonic.eval(p));
    let surface = delta_h_surface(&u_rule, &omega, &boundary, &opts)?;

    let fluxes: Vec<f64> = basis.sections.iter().map(|s| flux(&omega_rule, s)).collect();
    let kappa = basis.loops.iter().map(|l| circulation(&harmonic, l)).collect::<Result<Vec<_>, _>>()?;
    let flux_circulation: f64 = fluxes.iter().zip(&kappa).map(|(f, k)| f * k).sum();

    let summary = format!(
        "delta_h volume = {:.6e}, surface = {:.6e}, flux_circulation = {:.6e}",
        volume.value, surface.value, flux_circulation
    );
    let result = json!({
        "volume": volume.value,
        "surface": surface.value,
        "flux_circulation": flux_circulation,
        "fluxes": fluxes,
        "kappa": kappa,
        "cells": grid.len(),
        "boundary_samples": boundary.len(),
    });
    Ok(json_outcome("delta-h", &cfg, result, summary))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HodgeOptions {
    #[serde(default)]
    resolution: HkResolution,
}

/// Harmonic-knot basis of the configured tori: Gram matrix, and optionally
/// the coordinates of `field` (and `field2`) and their duality product.
pub fn hodge_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: HodgeOptions = cfg.options()?;
    let domain = cfg.require_domain()?;
    let basis = tori_basis(&domain, o.resolution)?;
    if basis.is_empty() {
        return Err(CliError::Config("hodge needs a domain with at least one torus".into()));
    }
    let grid = cfg.require_grid(&domain)?;
    let fields = [cfg.field.as_ref(), cfg.field2.as_ref()]
        .into_iter()
        .flatten()
        .map(|f| f.build())
        .collect::<Result<Vec<_>, _>>()?;

    let gram = gram_check(&basis, &grid)?;
    let mut result = json!({ "fluxes": basis.fluxes, "gram": gram, "cells": grid.len() });
    let mut summary = format!("gram diagonal = {:?}", (0..gram.len()).map(|i| gram[i][i]).collect::<Vec<_>>());
    let mut coords = Vec::new();
    for (name, f) in ["field", "field2"].iter().zip(&fields) {
        let d = decompose_curlfree(f, &basis, &grid)?;
        let c = hk_project(f, &basis)?;
        result[*name] = json!({ "decomposition": d, "coordinates": c });
        coords.push(c);
    }
    if let [a, b] = coords.as_slice() {
        let p = inner_product_flux_circ(a, b)?;
        summary = format!("flux-circulation product = {:.6e}", p.value);
        result["product"] = json!(p);
    } else if let [a] = coords.as_slice() {
        summary = format!("kappa = {:?}, phi = {:?}", a.kappa, a.phi);
    }
    Ok(json_outcome("hodge", &cfg, result, summary))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConserveOptions {
    #[serde(default)]
    kernel: KernelOptions,
    #[serde(default = "default_boundary_u")]
    boundary_u: usize,
    #[serde(default = "default_boundary_v")]
    boundary_v: usize,
    #[serde(default = "default_section_radial")]
    section_radial: usize,
    #[serde(default = "default_section_angular")]
    section_angular: usize,
    #[serde(default = "default_fd_fraction")]
    fd_fraction: f64,
    #[serde(default = "default_curl_fraction")]
    curl_fraction: f64,
}

fn default_section_radial() -> usize {
    SweepOptions::default().section_radial
}

fn default_section_angular() -> usize {
    SweepOptions::default().section_angular
}

fn default_fd_fraction() -> f64 {
    SweepOptions::default().fd_fraction
}

fn default_curl_fraction() -> f64 {
    SweepOptions::default().curl_fraction
}

/// Conservation sweep over `times`, written as CSV.
pub fn conserve_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: ConserveOptions = cfg.options()?;
    check_tolerance("fd_fraction", o.fd_fraction)?;
    check_tolerance("curl_fraction", o.curl_fraction)?;
    let opts = SweepOptions {
        bs: o.kernel.resolve()?,
        boundary_u: o.boundary_u,
        boundary_v: o.boundary_v,
        section_radial: o.section_radial,
        section_angular: o.section_angular,
        fd_fraction: o.fd_fraction,
        curl_fraction: o.curl_fraction,
    };
    let domain = cfg.require_domain()?;
    let omega0 = cfg.require_field()?;
    let flow = cfg.require_flow()?;
    let times = cfg.require_times()?;
    let grid = cfg.require_grid(&domain)?;
    let rows = conservation_sweep(&flow, &omega0, &domain, &times, &grid, &opts)?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows).map_err(|e| CliError::Io(e.to_string()))?;
    let h: Vec<f64> = rows.iter().map(|r| r.h_bs).collect();
    let summary = format!("conserve: {} rows, helicity drift = {:.3e}", rows.len(), relative_drift(&h));
    Ok(Outcome { body: String::from_utf8(buf).expect("csv is ascii"), summary, extension: "csv" })
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PotentialPath {
    /// `A = BS(B)`.
    #[default]
    BiotSavart,
    /// `A = P(∇×B)` with `P` the Newton potential.
    CurrentPotential,
}

fn default_dt() -> f64 {
    1e-3
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MhdOptions {
    #[serde(default)]
    t: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    /// Harmonic gauge circulations, one per torus. Empty means zero.
    #[serde(default)]
    kappa: Vec<f64>,
    #[serde(default)]
    scalar: Option<PotentialSpec>,
    #[serde(default)]
    potential: PotentialPath,
    #[serde(default)]
    resolution: HkResolution,
    #[serde(default)]
    kernel: KernelOptions,
}

/// Rate of the potential helicity: flux-circulation formula against an
/// explicit Euler step of the induction law.
pub fn mhd_rate_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: MhdOptions = cfg.options()?;
    check_tolerance("dt", o.dt)?;
    if !o.t.is_finite() {
        return Err(CliError::Config("t must be finite".into()));
    }
    let opts = o.kernel.resolve()?;
    let domain = cfg.require_domain()?;
    let b_rule = cfg.require_field()?;
    let flow = cfg.require_flow()?;
    let grid = cfg.require_grid(&domain)?;
    let basis = tori_basis(&domain, o.resolution)?;
    let kappa = if o.kappa.is_empty() { vec![0.0; basis.len()] } else { o.kappa.clone() };
    if kappa.len() != basis.len() {
        return Err(CliError::Config(format!("{} gauge circulations for {} tori", kappa.len(), basis.len())));
    }
    let gauge = GaugeChoice { scalar: o.scalar.as_ref().map(PotentialSpec::build).transpose()?, kappa };

    let state = match o.potential {
        PotentialPath::BiotSavart => MagneticState::from_biot_savart(&b_rule, &grid, &opts)?,
        PotentialPath::CurrentPotential => MagneticState::from_current_potential(&b_rule, &grid, &opts)?,
    };
    let check = hm_rate_fd_check(&state, &flow, o.t, &gauge, &basis, &domain, o.dt)?;
    let summary = format!(
        "rate formula = {:.6e}, finite difference = {:.6e}",
        check.rate_formula.flux_circulation, check.rate_fd
    );
    let result = json!({
        "rate_formula": check.rate_formula,
        "rate_fd": check.rate_fd,
        "dt": check.dt,
        "drift": check.drift,
        "potential_helicity": potential_helicity(&state)?,
        "curl_residual": state.curl_residual(),
    });
    Ok(json_outcome("mhd-rate", &cfg, result, summary))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpheromakOptions {
    #[serde(default = "unit")]
    amplitude: f64,
    #[serde(default)]
    kernel: KernelOptions,
}

fn unit() -> f64 {
    1.0
}

/// Beltrami identities of the spheromak on the configured ball.
pub fn spheromak_cmd(mut cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    let o: SpheromakOptions = cfg.options()?;
    if !(o.amplitude.is_finite() && o.amplitude != 0.0) {
        return Err(CliError::Config("amplitude must be finite and nonzero".into()));
    }
    let opts = o.kernel.resolve()?;
    let domain = cfg.require_domain()?;
    let Domain::Ball(ball) = &domain else {
        return Err(CliError::Config("spheromak-check needs a ball domain".into()));
    };
    let grid: Arc<MaskedGrid> = cfg.require_grid(&domain)?;
    let (field, xi) = AnalyticField::spheromak(ball.clone(), o.amplitude);
    let f = SampledField::sample(&grid, &field);
    let beltrami = curl(&f)?.relative_residual_scaled(&f, xi)?;
    let h_bs = helicity_bs(&f, &opts)?.value;
    let energy = field_energy(&f);
    let gap = (h_bs - energy / xi).abs() / (energy / xi).abs();
    let summary = format!("xi = {xi:.6}, beltrami residual = {beltrami:.3e}, |H - E/xi|/(E/xi) = {gap:.3e}");
    let result = json!({
        "xi": xi,
        "xi_unit_ball": xi * ball.radius,
        "beltrami_residual": beltrami,
        "helicity_bs": h_bs,
        "energy": energy,
        "energy_over_xi": energy / xi,
        "relative_gap": gap,
    });
    Ok(json_outcome("spheromak-check", &cfg, result, summary))
}
