//! Browser bindings for three small interactive views of ris-core:
//! the contact potential along a force line, a viscous double-well run, and an optimal
//! transition path. Results are flat `Float64Array`s consumed by `www/index.html`.

use ris_core::solver::{solve_ip_eps, TimeGrid};
use ris_core::transitions::jump_cost;
use ris_core::{ContactPotential, Energy, EnergyFunctional, Loading, ViscousPotential};
use wasm_bindgen::prelude::*;

const HORIZON: f64 = 2.0;
const MAX_STEPS: f64 = 200_000.0;

fn double_well() -> Energy {
    Energy::double_well(Loading::ramp(vec![1.0], HORIZON), HORIZON).expect("valid catalog energy")
}

fn contact() -> ContactPotential {
    ContactPotential::new(ViscousPotential::quadratic_1d())
}

/// Interleaved (w, 𝔭(v, w)) for `samples` forces in [w_min, w_max].
pub fn contact_samples(v: f64, w_min: f64, w_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(w_max > w_min) || !(2..=100_000).contains(&samples) {
        return Err("need w_max > w_min and 2 ≤ samples ≤ 100000".into());
    }
    let cp = contact();
    Ok((0..samples)
        .flat_map(|k| {
            let w = w_min + (w_max - w_min) * k as f64 / (samples - 1) as f64;
            [w, cp.eval(&[v], &[w])]
        })
        .collect())
}

/// Interleaved (t, u) of the viscous double-well trajectory from u = −1 under ℓ(t) = t.
pub fn viscous_samples(eps: f64, tau: f64) -> Result<Vec<f64>, String> {
    if !(tau > 0.0) || HORIZON / tau > MAX_STEPS {
        return Err(format!("tau must be positive with at most {MAX_STEPS} steps"));
    }
    let grid = TimeGrid::new(HORIZON, tau).map_err(|e| e.to_string())?;
    let sol = solve_ip_eps(&double_well(), contact().psi(), eps, &grid, &[-1.0]).map_err(|e| e.to_string())?;
    Ok(sol.times().iter().zip(sol.values()).flat_map(|(t, u)| [*t, u[0]]).collect())
}

/// [cost, θ₀, w₀, θ₁, w₁, …] of the optimal double-well transition from u0 to u1 at time t.
pub fn transition_samples(t: f64, u0: f64, u1: f64, segments: usize) -> Result<Vec<f64>, String> {
    let energy = double_well();
    if !(0.0..=HORIZON).contains(&t) {
        return Err(format!("t must lie in [0, {HORIZON}]"));
    }
    let cp = contact();
    let (cost, path) = jump_cost(&energy, &cp, t, &[u0], &[u1], segments).map_err(|e| e.to_string())?;
    let mut out = vec![cost];
    for (theta, w) in path.theta.iter().zip(&path.w) {
        out.extend([theta[0], w[0]]);
    }
    Ok(out)
}

/// The energy E(t, u) on the double-well, for drawing the landscape.
pub fn energy_at(t: f64, u: f64) -> f64 {
    double_well().value(t, &[u])
}

#[wasm_bindgen(js_name = contactCurve)]
pub fn contact_curve(v: f64, w_min: f64, w_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    contact_samples(v, w_min, w_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = viscousDoubleWell)]
pub fn viscous_double_well(eps: f64, tau: f64) -> Result<Vec<f64>, JsError> {
    viscous_samples(eps, tau).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = transitionPath)]
pub fn transition_path(t: f64, u0: f64, u1: f64, segments: usize) -> Result<Vec<f64>, JsError> {
    transition_samples(t, u0, u1, segments).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = doubleWellEnergy)]
pub fn double_well_energy(t: f64, u: f64) -> f64 {
    energy_at(t, u)
}
