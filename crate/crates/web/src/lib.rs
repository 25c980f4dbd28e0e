//! wasm-bindgen bindings for the browser demo. Each export takes plain
//! numbers and returns a JSON string; the `*_value` functions hold the logic
//! so they can be exercised natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use photonsrc::correlations::efficiency;
use photonsrc::experiments::{emission, fock_dynamics, run_pulse, run_spectrum, steady_scan, Numerics};
use photonsrc::hilbert::SpaceSignature;
use photonsrc::models::{DriveTarget, ModelKind, ModelSpec, PulseSpec};

pub const MAX_GRID_POINTS: usize = 400;

fn kind_of(name: &str) -> Result<ModelKind, String> {
    match name {
        "two_photon_jc" => Ok(ModelKind::TwoPhotonJc),
        "standard_jc" => Ok(ModelKind::StandardJc),
        _ => Err(format!("unknown model kind `{name}`")),
    }
}

fn model(
    kind: &str,
    lambda: u32,
    g: f64,
    gamma: f64,
    gamma_phi: f64,
    pulse: PulseSpec,
) -> Result<ModelSpec, String> {
    let spec = match kind_of(kind)? {
        ModelKind::TwoPhotonJc => ModelSpec::two_photon(g, gamma, gamma_phi, pulse),
        ModelKind::StandardJc => ModelSpec::standard(
            g,
            gamma,
            gamma_phi,
            pulse,
            DriveTarget::from_lambda(lambda as i64).map_err(|e| e.to_string())?,
        ),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn grid(lo: f64, hi: f64, points: usize, log: bool) -> Result<Vec<f64>, String> {
    if !(2..=MAX_GRID_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_GRID_POINTS}"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo && (!log || lo > 0.0)) {
        return Err("invalid range".into());
    }
    let (a, b) = if log { (lo.ln(), hi.ln()) } else { (lo, hi) };
    Ok((0..points)
        .map(|k| {
            let x = a + (b - a) * k as f64 / (points - 1) as f64;
            if log { x.exp() } else { x }
        })
        .collect())
}

/// Dressed levels of the undriven Hamiltonian on a linear grid of `g`.
pub fn spectrum_value(kind: &str, g_max: f64, points: usize, n_max: usize) -> Result<Value, String> {
    let g = grid(0.0, g_max, points, false)?;
    let base = model(kind, 0, 1.0, 0.0, 0.0, PulseSpec::constant(0.0))?;
    let sig = SpaceSignature::new(n_max + 3).map_err(|e| e.to_string())?;
    let rows = run_spectrum(&base, &g, n_max, sig).map_err(|e| e.to_string())?;
    let mut levels: Vec<(String, usize, Vec<f64>)> = Vec::new();
    for r in rows {
        match levels.iter_mut().find(|(l, _, _)| *l == r.label) {
            Some((_, _, e)) => e.push(r.numeric),
            None => levels.push((r.label, r.manifold, vec![r.numeric])),
        }
    }
    Ok(json!({
        "g": g,
        "levels": levels
            .into_iter()
            .map(|(label, manifold, energy)| json!({ "label": label, "manifold": manifold, "energy": energy }))
            .collect::<Vec<_>>(),
    }))
}

/// Fock-state dynamics under one Gaussian pulse. Purity and
/// indistinguishability need the two-time map and are only computed when
/// `merits` is set.
#[allow(clippy::too_many_arguments)]
pub fn pulse_value(
    kind: &str,
    lambda: u32,
    g: f64,
    gamma: f64,
    gamma_phi: f64,
    omega: f64,
    eta: f64,
    merits: bool,
) -> Result<Value, String> {
    let spec = model(kind, lambda, g, gamma, gamma_phi, PulseSpec::gaussian(omega, eta))?;
    let numerics = Numerics::default();
    let (run, report) = if merits {
        let o = run_pulse(&spec, &numerics, false).map_err(|e| e.to_string())?;
        (o.run, Some(o.merits))
    } else {
        (emission(&spec, &numerics, false).map_err(|e| e.to_string())?, None)
    };
    let e = match &report {
        Some(m) => m.efficiency,
        None => efficiency(&run.trajectory, spec.kappa).map_err(|e| e.to_string())?,
    };
    let rows = fock_dynamics(&run);
    Ok(json!({
        "t": rows.iter().map(|r| r.t).collect::<Vec<_>>(),
        "p_fock1": rows.iter().map(|r| r.p_fock1).collect::<Vec<_>>(),
        "p_fock2": rows.iter().map(|r| r.p_fock2).collect::<Vec<_>>(),
        "drive": rows.iter().map(|r| r.drive).collect::<Vec<_>>(),
        "efficiency": e,
        "purity": report.as_ref().map(|m| m.purity),
        "indistinguishability": report.as_ref().map(|m| m.indistinguishability),
        "fock_cutoff": run.kernel.signature().fock_cutoff(),
    }))
}

/// Steady-state `g2(0)` and `⟨a†a⟩` of the two-photon model under constant
/// drive, on a log grid of `g`.
pub fn steady_value(
    g_min: f64,
    g_max: f64,
    points: usize,
    gamma: f64,
    gamma_phi: f64,
    epsilon: f64,
) -> Result<Value, String> {
    let g = grid(g_min, g_max, points, true)?;
    let base = model("two_photon_jc", 0, 1.0, gamma, gamma_phi, PulseSpec::constant(epsilon))?;
    let rows = steady_scan(&base, &g, &Numerics::default()).map_err(|e| e.to_string())?;
    Ok(json!({
        "g": g,
        "g2_zero": rows.iter().map(|r| r.g2_zero).collect::<Vec<_>>(),
        "mean_photon_number": rows.iter().map(|r| r.mean_photon_number).collect::<Vec<_>>(),
        "dominant_excited": rows.iter().map(|r| r.dominant_excited().unwrap_or("")).collect::<Vec<_>>(),
    }))
}

fn export(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum(kind: &str, g_max: f64, points: usize, n_max: usize) -> Result<String, JsError> {
    export(spectrum_value(kind, g_max, points, n_max))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn pulse(
    kind: &str,
    lambda: u32,
    g: f64,
    gamma: f64,
    gamma_phi: f64,
    omega: f64,
    eta: f64,
    merits: bool,
) -> Result<String, JsError> {
    export(pulse_value(kind, lambda, g, gamma, gamma_phi, omega, eta, merits))
}

#[wasm_bindgen]
pub fn steady(
    g_min: f64,
    g_max: f64,
    points: usize,
    gamma: f64,
    gamma_phi: f64,
    epsilon: f64,
) -> Result<String, JsError> {
    export(steady_value(g_min, g_max, points, gamma, gamma_phi, epsilon))
}
