//! Browser bindings for three small experiments: the linking number of two
//! circles, a planar slice through an analytic field, and a helicity sweep
//! under uniform pulsation.
//!
//! Each export wraps a plain Rust function so the numerics can be tested
//! natively; only the wrappers touch `wasm_bindgen` types.

use std::sync::Arc;

use helicity_core::fields::{AnalyticField, SpheromakField, TubeField, VectorField};
use helicity_core::functionals::linking_number;
use helicity_core::geometry::{AxisymTorus, Ball, Domain, Frame, MaskedGrid, PolylineCurve};
use helicity_core::transport::{conservation_sweep, FlowFamily, SweepOptions};
use helicity_core::Vec3;
use wasm_bindgen::prelude::*;

/// Coarsest spacing accepted by the sweep; finer grids stall the page.
pub const MIN_SWEEP_SPACING: f64 = 0.06;

/// Unit circle in the xy-plane against a unit circle in the xz-plane
/// centred at `(separation, 0, 0)`.
pub fn two_circle_link(separation: f64, segments: usize) -> Result<f64, String> {
    let n = segments.max(8);
    let a = PolylineCurve::circle(&Frame::standard(), 1.0, n).map_err(|e| e.to_string())?;
    let frame = Frame::from_axis(Vec3::new(separation, 0.0, 0.0), Vec3::y()).map_err(|e| e.to_string())?;
    let b = PolylineCurve::circle(&frame, 1.0, n).map_err(|e| e.to_string())?;
    linking_number(&a, &b).map_err(|e| e.to_string())
}

fn slice_field(kind: &str, twist: f64) -> Result<AnalyticField, String> {
    match kind {
        "tube" => TubeField::twisted(Frame::standard(), 1.0, 0.4, 1.0, twist)
            .map(AnalyticField::Tube)
            .map_err(|e| e.to_string()),
        "spheromak" => {
            let ball = Ball::new(Vec3::zeros(), 1.2).map_err(|e| e.to_string())?;
            Ok(AnalyticField::Spheromak(SpheromakField::new(ball, 1.0)))
        }
        other => Err(format!("unknown field kind {other:?}; expected \"tube\" or \"spheromak\"")),
    }
}

/// Samples the field on an `n × n` pixel grid of the plane `y = 0` over
/// `[-1.5, 1.5]²`, row-major from the top-left, three values per pixel:
/// the in-plane components `(F_x, F_z)` then the normal component `F_y`.
pub fn sample_slice(kind: &str, n: usize, twist: f64) -> Result<Vec<f64>, String> {
    if !(2..=512).contains(&n) {
        return Err(format!("resolution {n} outside 2..=512"));
    }
    let f = slice_field(kind, twist)?;
    let half = 1.5;
    let step = 2.0 * half / (n - 1) as f64;
    let mut out = Vec::with_capacity(3 * n * n);
    for row in 0..n {
        let z = half - row as f64 * step;
        for col in 0..n {
            let x = -half + col as f64 * step;
            let v = f.eval(&Vec3::new(x, 0.0, z));
            out.extend_from_slice(&[v.x, v.z, v.y]);
        }
    }
    Ok(out)
}

/// Twisted tube of loop radius 1 under uniform pulsation. Returns five
/// numbers per time: `t, H_bs, E, dE/dt (formula), dE/dt (difference)`.
pub fn run_pulsation_sweep(amplitude: f64, frequency: f64, h: f64, n_times: usize) -> Result<Vec<f64>, String> {
    if !(h >= MIN_SWEEP_SPACING && h <= 0.25) {
        return Err(format!("spacing {h} outside [{MIN_SWEEP_SPACING}, 0.25]"));
    }
    if !(2..=24).contains(&n_times) {
        return Err(format!("time count {n_times} outside 2..=24"));
    }
    let tube_radius = 0.3;
    let omega0 = TubeField::twisted(Frame::standard(), 1.0, tube_radius, 1.0, 1.0)
        .map(AnalyticField::Tube)
        .map_err(|e| e.to_string())?;
    let torus = AxisymTorus::standard(1.0, tube_radius + 1.5 * h).map_err(|e| e.to_string())?;
    let domain = Domain::Torus(torus);
    let grid = Arc::new(MaskedGrid::build(&domain, h, 1).map_err(|e| e.to_string())?);
    let flow = FlowFamily::UniformPulsation { amplitude, frequency, center: Vec3::zeros() };
    let span = 1.5;
    let times: Vec<f64> = (0..n_times).map(|k| span * k as f64 / (n_times - 1) as f64).collect();
    let opts = SweepOptions { boundary_u: 48, boundary_v: 24, ..SweepOptions::default() };
    let rows = conservation_sweep(&flow, &omega0, &domain, &times, &grid, &opts).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.t, r.h_bs, r.energy, r.de_dt_formula, r.de_dt_fd]).collect())
}

#[wasm_bindgen]
pub fn hopf_link(separation: f64, segments: usize) -> Result<f64, JsError> {
    two_circle_link(separation, segments).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn field_slice(kind: &str, n: usize, twist: f64) -> Result<Vec<f64>, JsError> {
    sample_slice(kind, n, twist).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pulsation_sweep(amplitude: f64, frequency: f64, h: f64, n_times: usize) -> Result<Vec<f64>, JsError> {
    run_pulsation_sweep(amplitude, frequency, h, n_times).map_err(|e| JsError::new(&e))
}
