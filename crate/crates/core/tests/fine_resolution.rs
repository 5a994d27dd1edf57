//! Checks that need finer grids than the unit tests can afford.

use std::sync::Arc;

use helicity_core::biot_savart::{BiotSavartField, BsOptions};
use helicity_core::fields::{AnalyticField, FnField, SampledField, ScalarPotential, TubeField, VectorField};
use helicity_core::functionals::mutual_helicity;
use helicity_core::geometry::{AxisymTorus, Domain, Frame, MaskedGrid};
use helicity_core::hodge::{build_hk_basis, circulation, decompose_curlfree, HkResolution};
use helicity_core::transport::{conservation_sweep, image_grid, transport_pde_residual, FlowFamily, SweepOptions};
use helicity_core::{Mat3, Vec3};

fn families() -> Vec<(&'static str, FlowFamily)> {
    vec![
        ("rotation", FlowFamily::RigidRotation { axis: Vec3::x(), rate: 1.0, center: Vec3::zeros() }),
        ("pulsation", FlowFamily::UniformPulsation { amplitude: 0.3, frequency: 1.0, center: Vec3::zeros() }),
        (
            "twist",
            FlowFamily::DifferentialTwist { rate: 1.0, width: 1.0, axis: Vec3::x(), center: Vec3::new(0.5, 0.0, 0.0) },
        ),
    ]
}

#[test]
fn transport_pde_holds_on_fine_grid() {
    // the bump profile is steep, so the stencil needs ~30 cells across the tube
    let (eps, h) = (0.6, 0.02);
    let omega0 = AnalyticField::Tube(TubeField::new(Frame::standard(), 1.2, eps, 1.0).unwrap());
    let domain0 = Domain::Torus(AxisymTorus::standard(1.2, eps + 3.0 * h).unwrap());
    for (name, fam) in families() {
        let t = 0.7;
        let grid = Arc::new(image_grid(&fam, t, &domain0, h, 2).unwrap());
        let r = transport_pde_residual(&fam, t, &omega0, &domain0, &grid).unwrap();
        assert!(r <= 0.03, "{name}: residual {r}");
    }
}

#[test]
fn pulsation_energy_rate_matches_scaling_law() {
    let omega0 = AnalyticField::Tube(TubeField::twisted(Frame::standard(), 1.2, 0.3, 1.0, 1.0).unwrap());
    let h = 0.05;
    let domain0 = Domain::Torus(AxisymTorus::standard(1.2, 0.3 + 3.0 * h).unwrap());
    let grid = Arc::new(MaskedGrid::build(&domain0, h, 1).unwrap());
    let (a, nu) = (0.3, 1.0);
    let fam = FlowFamily::UniformPulsation { amplitude: a, frequency: nu, center: Vec3::zeros() };
    let rows = conservation_sweep(&fam, &omega0, &domain0, &[0.0, 0.8], &grid, &SweepOptions::default()).unwrap();
    let e0 = rows[0].energy;
    for r in &rows {
        let s = 1.0 + a * (nu * r.t).sin();
        let s_dot = a * nu * (nu * r.t).cos();
        let analytic = -s_dot * e0 / (s * s);
        assert!((r.de_dt_formula - analytic).abs() <= 0.03 * analytic.abs(), "t={}: {} vs {analytic}", r.t, r.de_dt_formula);
    }
}

#[test]
fn thin_hopf_tubes_mutual_helicity() {
    let eps = 0.15;
    let w = AnalyticField::Tube(TubeField::new(Frame::standard(), 1.0, eps, 1.0).unwrap());
    let frame = Frame { origin: Vec3::new(1.0, 0.0, 0.0), axes: Mat3::from_columns(&[Vec3::x(), -Vec3::z(), Vec3::y()]) };
    let b = AnalyticField::Tube(TubeField::new(frame.clone(), 1.0, eps, 1.0).unwrap());
    let h = 0.03;
    let grid_of = |f: &Frame| {
        let support = AxisymTorus::new(f.clone(), 1.0, eps).unwrap();
        Arc::new(MaskedGrid::build(&Domain::Torus(support), h, 1).unwrap())
    };
    let v1 = SampledField::sample(&grid_of(&Frame::standard()), &w);
    let v2 = SampledField::sample(&grid_of(&frame), &b);
    let opts = BsOptions::default();
    let m12 = mutual_helicity(&v1, &v2, &opts).unwrap();
    let m21 = mutual_helicity(&v2, &v1, &opts).unwrap();
    assert!((m12 - 1.0).abs() <= 0.03, "{m12}");
    assert!((m12 - m21).abs() <= 0.01 * m12.abs());
    let scaled = mutual_helicity(&v1, &v2.scaled(5.0), &opts).unwrap();
    assert!((scaled - 5.0 * m12).abs() <= 1e-10 * scaled.abs());
}

/// `∮u·dl = ∮BS(ω)·dl + ∮Υ·dl` on the core loop, with `Υ` recovered from
/// the curl-free part `u − BS(ω)` by the decomposition rather than assumed.
#[test]
fn loop_circulation_splits_into_bs_and_harmonic_parts() {
    let torus = AxisymTorus::standard(1.0, 0.6).unwrap();
    let domain = Domain::Torus(torus.clone());
    let grid = Arc::new(MaskedGrid::build(&domain, 0.05, 1).unwrap());
    let basis = build_hk_basis(&[torus], HkResolution::default()).unwrap();
    let omega = SampledField::sample(
        &grid,
        &AnalyticField::Tube(TubeField::twisted(Frame::standard(), 1.0, 0.4, 1.0, 1.0).unwrap()),
    );
    let bs = BiotSavartField::new(&omega, &BsOptions::default()).unwrap();
    let chi = ScalarPotential::Gaussian { center: Vec3::new(0.8, 0.3, 0.1), width: 0.5, amplitude: 0.3 };
    let extra = AnalyticField::combination(vec![
        (0.4, basis.l_fields[0].clone()),
        (1.0, AnalyticField::Gradient(chi)),
    ])
    .unwrap();
    let u = FnField(|p: &Vec3| bs.eval(p) + extra.eval(p));

    let split = decompose_curlfree(&extra, &basis, &grid).unwrap();
    let upsilon = basis.circulation_expansion(&split.kappa);
    let lhs = circulation(&u, &basis.loops[0]).unwrap();
    let rhs = circulation(&bs, &basis.loops[0]).unwrap() + circulation(&upsilon, &basis.loops[0]).unwrap();
    assert!((lhs - rhs).abs() <= 0.02 * lhs.abs(), "{lhs} vs {rhs}");
    assert!((split.kappa[0] - 0.4).abs() <= 1e-3);
}
