//! Harmonic-knot fields on disjoint unions of axisymmetric solid tori.
//!
//! Each torus carries one harmonic field `h_i = φ̂/(2πρ)`, which has unit
//! circulation around its core loop. The circulation basis is `l_i = h_i`
//! and the flux basis is `f_i = h_i / Φ(h_i)`, so the two are biorthogonal:
//! `⟨l_i | f_j⟩ = δ_ij`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::biot_savart::loop_integral;
use crate::error::{Error, Result};
use crate::fields::{curl, l2_inner, AnalyticField, HarmonicTorusField, SampledField, VectorField};
use crate::functionals::curve_distance;
use crate::geometry::{core_loop, cross_section, AxisymTorus, CrossSection, MaskedGrid, PolylineCurve, Vec3};

/// Relative stencil-curl gate for [`decompose_curlfree`].
pub const CURL_FREE_TOLERANCE: f64 = 5e-2;

/// Sampling resolution of loops and sections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkResolution {
    pub loop_segments: usize,
    pub section_radial: usize,
    pub section_angular: usize,
}

impl Default for HkResolution {
    fn default() -> Self {
        Self { loop_segments: 256, section_radial: 48, section_angular: 32 }
    }
}

#[derive(Clone, Debug)]
pub struct HkBasis {
    pub tori: Vec<AxisymTorus>,
    pub loops: Vec<PolylineCurve>,
    pub sections: Vec<CrossSection>,
    pub l_fields: Vec<AnalyticField>,
    pub f_fields: Vec<AnalyticField>,
    /// Analytic fluxes `Φ(h_i)`.
    pub fluxes: Vec<f64>,
}

/// Circulation and flux coordinates of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkCoordinates {
    pub kappa: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Rejects tori whose core circles come closer than the sum of their minor
/// radii (plus the chord sag of the sampled loops).
fn check_disjoint(tori: &[AxisymTorus], res: &HkResolution) -> Result<()> {
    for i in 0..tori.len() {
        for j in i + 1..tori.len() {
            let a = core_loop(&tori[i], res.loop_segments)?;
            let b = core_loop(&tori[j], res.loop_segments)?;
            let sag = |t: &AxisymTorus| {
                let half = std::f64::consts::PI / res.loop_segments as f64;
                t.major_radius * (1.0 - half.cos())
            };
            let d = curve_distance(&a, &b);
            if d <= tori[i].minor_radius + tori[j].minor_radius + sag(&tori[i]) + sag(&tori[j]) {
                return Err(Error::OverlappingDomains);
            }
        }
    }
    Ok(())
}

pub fn build_hk_basis(tori: &[AxisymTorus], res: HkResolution) -> Result<HkBasis> {
    check_disjoint(tori, &res)?;
    let mut basis = HkBasis {
        tori: tori.to_vec(),
        loops: Vec::with_capacity(tori.len()),
        sections: Vec::with_capacity(tori.len()),
        l_fields: Vec::with_capacity(tori.len()),
        f_fields: Vec::with_capacity(tori.len()),
        fluxes: Vec::with_capacity(tori.len()),
    };
    for (i, t) in tori.iter().enumerate() {
        let h = HarmonicTorusField::new(t.clone());
        let phi = h.unit_flux();
        basis.loops.push(core_loop(t, res.loop_segments)?);
        basis.sections.push(cross_section(t, i, res.section_radial, res.section_angular)?);
        basis.l_fields.push(AnalyticField::HarmonicTorus(h.clone()));
        basis.f_fields.push(AnalyticField::HarmonicTorus(HarmonicTorusField { scale: 1.0 / phi, ..h }));
        basis.fluxes.push(phi);
    }
    Ok(basis)
}

impl HkBasis {
    pub fn len(&self) -> usize {
        self.tori.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tori.is_empty()
    }

    /// `Σ κ_i l_i`.
    pub fn circulation_expansion(&self, kappa: &[f64]) -> AnalyticField {
        AnalyticField::Combination(kappa.iter().copied().zip(self.l_fields.iter().cloned()).collect())
    }

    /// `Σ Φ_i f_i`.
    pub fn flux_expansion(&self, phi: &[f64]) -> AnalyticField {
        AnalyticField::Combination(phi.iter().copied().zip(self.f_fields.iter().cloned()).collect())
    }
}

pub fn circulation<F: VectorField + ?Sized>(field: &F, c: &PolylineCurve) -> Result<f64> {
    loop_integral(field, c)
}

pub fn flux<F: VectorField + ?Sized>(field: &F, section: &CrossSection) -> f64 {
    section.flux_of(|p| field.eval(p))
}

/// Matrix of `⟨l_i | f_j⟩` by grid quadrature.
pub fn gram_check(basis: &HkBasis, grid: &Arc<MaskedGrid>) -> Result<Vec<Vec<f64>>> {
    let ls: Vec<SampledField> = basis.l_fields.iter().map(|f| SampledField::sample(grid, f)).collect();
    let fs: Vec<SampledField> = basis.f_fields.iter().map(|f| SampledField::sample(grid, f)).collect();
    ls.iter().map(|l| fs.iter().map(|f| l2_inner(l, f)).collect()).collect()
}

/// Circulations around every core loop and fluxes through every section.
pub fn hk_project<F: VectorField + ?Sized>(field: &F, basis: &HkBasis) -> Result<HkCoordinates> {
    let kappa = basis.loops.iter().map(|c| circulation(field, c)).collect::<Result<Vec<_>>>()?;
    let phi = basis.sections.iter().map(|s| flux(field, s)).collect();
    Ok(HkCoordinates { kappa, phi })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurlFreeDecomposition {
    /// Circulations of the input; the harmonic part is `Σ κ_i l_i`.
    pub kappa: Vec<f64>,
    /// Circulations of `v − Υ` around each core loop.
    pub remainder_circulations: Vec<f64>,
    /// `ℓ‖∇×v‖/‖v‖` with ℓ the smallest minor radius.
    pub curl_residual: f64,
}

/// Splits a curl-free field into its harmonic part and a gradient remainder.
///
/// The curl gate uses the stencil curl of `v` sampled on `grid`.
pub fn decompose_curlfree<F: VectorField + ?Sized>(
    v: &F,
    basis: &HkBasis,
    grid: &Arc<MaskedGrid>,
) -> Result<CurlFreeDecomposition> {
    let sampled = SampledField::sample(grid, v);
    let c = curl(&sampled)?;
    let norm = l2_inner(&sampled, &sampled)?.sqrt();
    let length = basis.tori.iter().map(|t| t.minor_radius).fold(f64::INFINITY, f64::min);
    let length = if length.is_finite() { length } else { grid.spacing() };
    let curl_residual = if norm == 0.0 { 0.0 } else { c.l2_norm() * length / norm };
    if curl_residual > CURL_FREE_TOLERANCE {
        return Err(Error::NotCurlFree { residual: curl_residual, tolerance: CURL_FREE_TOLERANCE });
    }
    let kappa = basis.loops.iter().map(|l| circulation(v, l)).collect::<Result<Vec<_>>>()?;
    let upsilon = basis.circulation_expansion(&kappa);
    let remainder = crate::fields::FnField(|p: &Vec3| v.eval(p) - upsilon.eval(p));
    let remainder_circulations = basis.loops.iter().map(|l| circulation(&remainder, l)).collect::<Result<Vec<_>>>()?;
    Ok(CurlFreeDecomposition { kappa, remainder_circulations, curl_residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxCirculationProduct {
    /// Mean of `Σ Φ(ω₁)_k κ(ω₂)_k` and `Σ Φ(ω₂)_k κ(ω₁)_k`.
    pub value: f64,
    /// Difference of the two orderings.
    pub asymmetry: f64,
}

pub fn inner_product_flux_circ(a: &HkCoordinates, b: &HkCoordinates) -> Result<FluxCirculationProduct> {
    let n = a.kappa.len();
    if a.phi.len() != n || b.kappa.len() != n || b.phi.len() != n {
        return Err(Error::InvalidParameter("coordinate vectors differ in length".into()));
    }
    let ab: f64 = (0..n).map(|k| a.phi[k] * b.kappa[k]).sum();
    let ba: f64 = (0..n).map(|k| b.phi[k] * a.kappa[k]).sum();
    Ok(FluxCirculationProduct { value: 0.5 * (ab + ba), asymmetry: ab - ba })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FnField, ScalarPotential, TubeField};
    use crate::geometry::{Domain, Frame, Mat3};

    fn one_torus() -> AxisymTorus {
        AxisymTorus::standard(2.0, 1.0).unwrap()
    }

    fn two_tori() -> Vec<AxisymTorus> {
        vec![
            AxisymTorus::standard(2.0, 1.0).unwrap(),
            AxisymTorus::new(Frame::from_axis(Vec3::new(8.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 1.0)).unwrap(), 1.5, 0.5)
                .unwrap(),
        ]
    }

    #[test]
    fn single_torus_constants() {
        let b = build_hk_basis(&[one_torus()], HkResolution::default()).unwrap();
        assert!((b.fluxes[0] - 0.267_949_192_431_122_7).abs() < 1e-12);
        let f = b.f_fields[0].eval(&Vec3::new(2.0, 0.0, 0.0)).norm();
        let oracle = 1.0 / (4.0 * std::f64::consts::PI * (2.0 - 3f64.sqrt()));
        assert!((f - oracle).abs() < 1e-12, "{f}");
        assert!((f - 0.297_00).abs() < 5e-5);
        let c = circulation(&b.l_fields[0], &b.loops[0]).unwrap();
        assert!((c - 1.0).abs() < 1e-6, "circulation {c}");
        assert!((flux(&b.f_fields[0], &b.sections[0]) - 1.0).abs() < 1e-3);
        assert!((flux(&b.l_fields[0], &b.sections[0]) - b.fluxes[0]).abs() < 1e-3);
    }

    #[test]
    fn empty_and_overlapping() {
        assert!(build_hk_basis(&[], HkResolution::default()).unwrap().is_empty());
        let t = one_torus();
        let moved = AxisymTorus::new(Frame::from_axis(Vec3::new(1.0, 0.0, 0.0), Vec3::z()).unwrap(), 2.0, 1.0).unwrap();
        assert_eq!(build_hk_basis(&[t, moved], HkResolution::default()).unwrap_err(), Error::OverlappingDomains);
    }

    #[test]
    fn two_tori_cross_terms_vanish() {
        let b = build_hk_basis(&two_tori(), HkResolution::default()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let c = circulation(&b.l_fields[i], &b.loops[j]).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((c - expected).abs() < if i == j { 1e-6 } else { 1e-9 });
                let f = flux(&b.f_fields[i], &b.sections[j]);
                assert!((f - expected).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn gram_matrix_single_and_pair() {
        let t = one_torus();
        let b = build_hk_basis(&[t.clone()], HkResolution::default()).unwrap();
        let g = Arc::new(MaskedGrid::build(&Domain::Torus(t), 0.05, 1).unwrap());
        let m = gram_check(&b, &g).unwrap();
        assert!((m[0][0] - 1.0).abs() < 0.01, "{}", m[0][0]);
        let tori = two_tori();
        let b = build_hk_basis(&tori, HkResolution::default()).unwrap();
        let dom = Domain::union(tori.into_iter().map(Domain::Torus).collect()).unwrap();
        let g = Arc::new(MaskedGrid::build(&dom, 0.06, 1).unwrap());
        let m = gram_check(&b, &g).unwrap();
        assert!((m[0][0] - 1.0).abs() < 0.02 && (m[1][1] - 1.0).abs() < 0.02);
        assert!(m[0][1].abs() < 1e-9 && m[1][0].abs() < 1e-9);
    }

    #[test]
    fn projections() {
        let t = one_torus();
        let b = build_hk_basis(&[t.clone()], HkResolution::default()).unwrap();
        let three = b.l_fields[0].clone().scaled(3.0);
        let c = hk_project(&three, &b).unwrap();
        assert!((c.kappa[0] - 3.0).abs() < 1e-6);
        assert!((c.phi[0] - 3.0 * b.fluxes[0]).abs() < 3e-3);
        let grad = AnalyticField::Gradient(ScalarPotential::Gaussian { center: Vec3::new(2.0, 0.3, 0.1), width: 0.6, amplitude: 2.0 });
        assert!(hk_project(&grad, &b).unwrap().kappa[0].abs() < 1e-6);
        let tube = AnalyticField::Tube(TubeField::new(Frame::standard(), 2.0, 0.6, 1.0).unwrap());
        let c = hk_project(&tube, &b).unwrap();
        assert!((c.phi[0] - 1.0).abs() < 0.01);
        let harmonic = b.flux_expansion(&c.phi);
        let remainder = FnField(|p: &Vec3| tube.eval(p) - harmonic.eval(p));
        assert!(flux(&remainder, &b.sections[0]).abs() < 0.01);
    }

    #[test]
    fn expansions_agree_pointwise() {
        let b = build_hk_basis(&two_tori(), HkResolution::default()).unwrap();
        let field = b.circulation_expansion(&[0.7, -1.3]);
        let c = hk_project(&field, &b).unwrap();
        let via_flux = b.flux_expansion(&c.phi);
        for p in [Vec3::new(2.0, 0.1, 0.2), Vec3::new(-1.5, 1.0, -0.4), Vec3::new(8.0, 1.4, 0.0)] {
            let (a, z) = (field.eval(&p), via_flux.eval(&p));
            assert!((a - z).norm() <= 3e-3 * a.norm().max(1e-12), "{p:?}");
        }
    }

    #[test]
    fn decomposition_of_curl_free_fields() {
        let t = one_torus();
        let b = build_hk_basis(&[t.clone()], HkResolution::default()).unwrap();
        let g = Arc::new(MaskedGrid::build(&Domain::Torus(t), 0.1, 1).unwrap());
        let v = AnalyticField::combination(vec![(1.0, b.l_fields[0].clone()), (1.0, AnalyticField::constant(Vec3::new(0.2, -0.1, 0.3)))]).unwrap();
        let d = decompose_curlfree(&v, &b, &g).unwrap();
        assert!((d.kappa[0] - 1.0).abs() < 1e-6);
        assert!(d.remainder_circulations[0].abs() < 1e-6);
        let q = AnalyticField::Gradient(ScalarPotential::Quadratic { q: Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0), b: Vec3::zeros() });
        let d = decompose_curlfree(&q, &b, &g).unwrap();
        assert!(d.kappa[0].abs() < 1e-6);
        let tube = AnalyticField::Tube(TubeField::new(Frame::standard(), 2.0, 0.8, 1.0).unwrap());
        assert!(matches!(decompose_curlfree(&tube, &b, &g), Err(Error::NotCurlFree { .. })));
    }

    #[test]
    fn flux_circulation_product() {
        let b = build_hk_basis(&[one_torus()], HkResolution::default()).unwrap();
        let c = hk_project(&b.l_fields[0], &b).unwrap();
        let p = inner_product_flux_circ(&c, &c).unwrap();
        assert!((p.value - (2.0 - 3f64.sqrt())).abs() < 0.01 * p.value);
        let zero = HkCoordinates { kappa: vec![0.0], phi: vec![0.0] };
        assert_eq!(inner_product_flux_circ(&c, &zero).unwrap().value, 0.0);
        let json = serde_json::to_string(&HkCoordinates { kappa: vec![1.0], phi: vec![0.5] }).unwrap();
        assert_eq!(json, r#"{"kappa":[1.0],"phi":[0.5]}"#);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn product_is_bilinear(k1 in -3.0f64..3.0, k2 in -3.0f64..3.0, s in -4.0f64..4.0) {
                let b = build_hk_basis(&two_tori(), HkResolution::default()).unwrap();
                let c = hk_project(&b.circulation_expansion(&[k1, k2]), &b).unwrap();
                let cs = hk_project(&b.circulation_expansion(&[s * k1, s * k2]), &b).unwrap();
                let base = inner_product_flux_circ(&c, &c).unwrap().value;
                let scaled = inner_product_flux_circ(&cs, &c).unwrap().value;
                prop_assert!((scaled - s * base).abs() <= 1e-9 * (1.0 + base.abs()));
            }

            #[test]
            fn equal_circulations_mean_equal_fields(k1 in -3.0f64..3.0, k2 in -3.0f64..3.0) {
                // a harmonic field is fixed by its circulations: rebuilding from
                // the measured circulations reproduces it in L2
                let tori = two_tori();
                let b = build_hk_basis(&tori, HkResolution::default()).unwrap();
                let original = b.circulation_expansion(&[k1, k2]);
                let c = hk_project(&original, &b).unwrap();
                let rebuilt = b.circulation_expansion(&c.kappa);
                let dom = Domain::union(tori.into_iter().map(Domain::Torus).collect()).unwrap();
                let g = Arc::new(MaskedGrid::build(&dom, 0.2, 1).unwrap());
                let a = SampledField::sample(&g, &original);
                let r = SampledField::sample(&g, &rebuilt);
                let d = a.axpby(1.0, &r, -1.0).unwrap();
                let e = l2_inner(&a, &a).unwrap();
                prop_assert!(l2_inner(&d, &d).unwrap() <= 1e-10 * (1.0 + e));
            }
        }
    }
}
