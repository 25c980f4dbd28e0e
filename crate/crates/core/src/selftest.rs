//! Analytic-oracle suite run by the `selftest` command: closed-form decay
//! and Rabi laws, the driven empty cavity through the full merit pipeline,
//! and randomized property checks on propagated states and correlators.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    evolve_probe, propagate_with_kernel, uniform_grid, IntegratorConfig, Observable,
    PropagateOptions,
};
use crate::error::Result;
use crate::experiments::{kernel_for, run_pulse, Numerics};
use crate::hilbert::{
    build_operator_set, hermiticity_defect, AtomLevel, CMatrix, QuantumState, SpaceSignature,
    StateTolerances, C64, STATE_TRACE_TOL,
};
use crate::models::{DriveTarget, ModelSpec, PulseSpec};

pub const ORACLE_TOL: f64 = 1e-6;
pub const PIPELINE_TOL: f64 = 1e-3;
pub const PROPERTY_CASES: usize = 100;
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Worst deviation found (or failing-case count for property suites).
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn within(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn tight() -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        max_step: Some(0.05),
    }
}

fn undriven(g: f64, gamma: f64, gamma_phi: f64) -> ModelSpec {
    ModelSpec::two_photon(g, gamma, gamma_phi, PulseSpec::constant(0.0))
}

/// Largest deviation of `⟨op⟩(t)` from `want(t)` starting at `rho0`.
fn worst_deviation(
    spec: &ModelSpec,
    sig: SpaceSignature,
    rho0: &QuantumState,
    op: crate::hilbert::Operator,
    want: impl Fn(f64) -> f64,
) -> Result<f64> {
    let grid = uniform_grid(0.0, 8.0, 161);
    let tr = propagate_with_kernel(
        &kernel_for(spec, sig)?,
        rho0,
        &grid,
        &[Observable::new("x", op)],
        &tight(),
        PropagateOptions {
            record_states: false,
            cutoff_guard: false,
        },
    )?;
    let x = tr.real_series("x").expect("recorded");
    Ok(grid
        .iter()
        .zip(&x)
        .map(|(&t, &v)| (v - want(t)).abs())
        .fold(0.0, f64::max))
}

fn atom_decay() -> Result<Check> {
    let sig = SpaceSignature::new(3)?;
    let ops = build_operator_set(sig);
    let gamma = 0.35;
    let rho0 = QuantumState::basis(sig, AtomLevel::Excited, 0)?;
    let err = worst_deviation(
        &undriven(0.0, gamma, 0.4),
        sig,
        &rho0,
        &ops.sigma_plus * &ops.sigma_minus,
        |t| (-2.0 * gamma * t).exp(),
    )?;
    Ok(Check::within(
        "atom_decay",
        err,
        ORACLE_TOL,
        format!("P_e(t) = exp(-2 Gamma t), Gamma = {gamma}"),
    ))
}

fn coherence_decay() -> Result<Check> {
    let sig = SpaceSignature::new(3)?;
    let (gamma, gamma_phi) = (0.5, 0.3);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = vec![C64::new(0.0, 0.0); sig.dim()];
    psi[sig.index(AtomLevel::Ground, 0)] = C64::new(r, 0.0);
    psi[sig.index(AtomLevel::Excited, 0)] = C64::new(r, 0.0);
    let rho0 = QuantumState::pure(sig, &psi)?;
    // ⟨σ_x⟩ = 2 Re ρ_eg, and nothing rotates the coherence at g = 0
    let ops = build_operator_set(sig);
    let sx = &ops.sigma_minus + &ops.sigma_plus;
    let err = worst_deviation(
        &undriven(0.0, gamma, gamma_phi),
        sig,
        &rho0,
        sx,
        |t| (-(gamma + 2.0 * gamma_phi) * t).exp(),
    )?;
    Ok(Check::within(
        "coherence_decay",
        err,
        ORACLE_TOL,
        format!(
            "<sigma_x>(t) = exp(-(Gamma + 2 Gamma_phi) t), Gamma = {gamma}, Gamma_phi = {gamma_phi}"
        ),
    ))
}

fn cavity_decay() -> Result<Check> {
    let sig = SpaceSignature::new(5)?;
    let ops = build_operator_set(sig);
    let rho0 = QuantumState::basis(sig, AtomLevel::Ground, 3)?;
    let err = worst_deviation(&undriven(0.0, 0.5, 0.5), sig, &rho0, ops.n_op, |t| {
        3.0 * (-2.0 * t).exp()
    })?;
    Ok(Check::within(
        "cavity_decay",
        err,
        ORACLE_TOL,
        "<n>(t) = 3 exp(-2 kappa t) from |g,3>".into(),
    ))
}

fn two_photon_rabi() -> Result<Check> {
    let sig = SpaceSignature::new(5)?;
    let g = 0.8;
    let spec = undriven(g, 0.0, 0.0);
    let ops = build_operator_set(sig);
    let parts = crate::models::build_hamiltonian(&spec, sig)?;
    let kernel = crate::dynamics::LindbladKernel::new(
        &parts,
        &crate::dynamics::CollapseChannels::new(vec![]),
    )?;
    let rho0 = QuantumState::basis(sig, AtomLevel::Ground, 2)?;
    let grid = uniform_grid(0.0, 8.0, 161);
    let tr = propagate_with_kernel(
        &kernel,
        &rho0,
        &grid,
        &[Observable::new("pe", &ops.sigma_plus * &ops.sigma_minus)],
        &tight(),
        PropagateOptions {
            record_states: false,
            cutoff_guard: false,
        },
    )?;
    let pe = tr.real_series("pe").expect("recorded");
    let err = grid
        .iter()
        .zip(&pe)
        .map(|(&t, &p)| (p - (2f64.sqrt() * g * t).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    Ok(Check::within(
        "two_photon_rabi",
        err,
        ORACLE_TOL,
        format!("P_e(t) = sin^2(sqrt(2) g t) from |g,2>, g = {g}, no loss"),
    ))
}

/// A coherent drive on an uncoupled cavity leaves a coherent state, so the
/// pulsed g²(0) and the indistinguishability are both exactly 1.
fn empty_cavity_pipeline() -> Result<Vec<Check>> {
    let spec = ModelSpec::two_photon(0.0, 0.0, 0.0, PulseSpec::gaussian(0.8, 2.0));
    let numerics = Numerics {
        t_points: 200,
        ..Numerics::default()
    };
    let m = run_pulse(&spec, &numerics, false)?.merits;
    Ok(vec![
        Check::within(
            "empty_cavity_g2",
            (m.g2_zero_pulsed - 1.0).abs(),
            PIPELINE_TOL,
            format!("pulsed g2(0) = {}", m.g2_zero_pulsed),
        ),
        Check::within(
            "empty_cavity_indistinguishability",
            (m.indistinguishability - 1.0).abs(),
            PIPELINE_TOL,
            format!("I = {}", m.indistinguishability),
        ),
    ])
}

fn random_spec(rng: &mut ChaCha8Rng) -> ModelSpec {
    let pulse = if rng.random_bool(0.5) {
        PulseSpec::constant(rng.random_range(0.0..1.5))
    } else {
        let eta = rng.random_range(0.3..2.0);
        PulseSpec::Gaussian {
            omega: rng.random_range(0.0..2.0),
            eta,
            t_center: rng.random_range(0.0..3.0),
        }
    };
    let (g, gamma, gamma_phi) = (
        rng.random_range(0.0..8.0),
        rng.random_range(0.0..1.0),
        rng.random_range(0.0..1.0),
    );
    if rng.random_bool(0.5) {
        ModelSpec::two_photon(g, gamma, gamma_phi, pulse)
    } else {
        let target = if rng.random_bool(0.5) {
            DriveTarget::Cavity
        } else {
            DriveTarget::Atom
        };
        let mut s = ModelSpec::standard(g, gamma, gamma_phi, pulse, target);
        s.delta = Some(rng.random_range(-3.0..3.0));
        s
    }
}

/// `G G† / tr(G G†)` for a random complex `d × r` matrix `G` of random
/// rank `r`, pure states included.
fn random_state(rng: &mut ChaCha8Rng, sig: SpaceSignature) -> Result<QuantumState> {
    let d = sig.dim();
    let r = rng.random_range(1..=d);
    let g = CMatrix::from_fn(d, r, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    QuantumState::new(sig, rho / C64::new(tr, 0.0))
}

/// Propagated states stay unit-trace, Hermitian and positive.
fn state_properties(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for case in 0..PROPERTY_CASES {
        let sig = SpaceSignature::new(rng.random_range(3..6))?;
        let spec = random_spec(&mut rng);
        let rho0 = random_state(&mut rng, sig)?;
        let grid = uniform_grid(0.0, rng.random_range(0.5..4.0), 9);
        let ops = build_operator_set(sig);
        let tr = propagate_with_kernel(
            &kernel_for(&spec, sig)?,
            &rho0,
            &grid,
            &[Observable::new("trace", ops.identity.clone())],
            &IntegratorConfig::default(),
            PropagateOptions {
                record_states: true,
                cutoff_guard: false,
            },
        );
        let tr = match tr {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let traces = tr.series("trace").expect("recorded");
        for (s, raw_trace) in tr.states.iter().flatten().zip(traces) {
            let m = s.matrix();
            let trace_err = (raw_trace - C64::new(1.0, 0.0)).norm();
            let herm = hermiticity_defect(m);
            let neg = (-s.min_eigenvalue()).max(0.0);
            worst = worst.max(trace_err).max(herm).max(neg);
            if trace_err > STATE_TRACE_TOL
                || QuantumState::with_tolerances(sig, m.clone(), StateTolerances::CONSTRUCTION)
                    .is_err()
            {
                failures.push(format!(
                    "case {case}: trace error {trace_err:e}, Hermiticity {herm:e}, negativity {neg:e}"
                ));
                break;
            }
        }
    }
    Ok(Check {
        name: "state_properties".into(),
        value: failures.len() as f64,
        tolerance: 0.0,
        passed: failures.is_empty(),
        detail: format!(
            "{PROPERTY_CASES} random models and states; worst defect {worst:e}{}",
            failures
                .first()
                .map(|f| format!("; first failure {f}"))
                .unwrap_or_default()
        ),
    })
}

/// `|⟨a†(t)a(t+τ)⟩|² ≤ ⟨n(t)⟩⟨n(t+τ)⟩` and `⟨a†(t)n(t+τ)a(t)⟩ ≥ 0` along
/// randomized regression runs.
fn cauchy_schwarz(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let cfg = tight();
    let slack = 1e-8;
    let mut failures = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for case in 0..PROPERTY_CASES {
        let sig = SpaceSignature::new(rng.random_range(3..6))?;
        let spec = random_spec(&mut rng);
        let kernel = kernel_for(&spec, sig)?;
        let ops = build_operator_set(sig);
        let rho0 = random_state(&mut rng, sig)?;
        let t0 = rng.random_range(0.0..2.0);
        let taus = uniform_grid(t0, t0 + rng.random_range(0.5..4.0), 9);
        let n_tr = propagate_with_kernel(
            &kernel,
            &rho0,
            &taus,
            &[Observable::new("n", ops.n_op.clone())],
            &cfg,
            PropagateOptions {
                record_states: false,
                cutoff_guard: false,
            },
        )?;
        let n = n_tr.real_series("n").expect("recorded");
        let rho = rho0.matrix();
        let x1 = ops.a.matrix() * rho;
        let x2 = ops.a.matrix() * rho * ops.a_dag.matrix();
        let (c1, _) = evolve_probe(&kernel, &x1, t0, &taus, ops.a_dag.matrix(), &cfg)?;
        let (c2, _) = evolve_probe(&kernel, &x2, t0, &taus, ops.n_op.matrix(), &cfg)?;
        for k in 0..taus.len() {
            let bound = n[0] * n[k];
            let excess = c1[k].norm_sqr() - bound;
            worst = worst.max(excess / bound.max(1e-300));
            if excess > slack * bound.max(1.0) || c2[k].re < -slack {
                failures.push(format!(
                    "case {case}, tau = {}: |C1|^2 = {:e}, bound {bound:e}, C2 = {:e}",
                    taus[k] - t0,
                    c1[k].norm_sqr(),
                    c2[k].re
                ));
                break;
            }
        }
    }
    Ok(Check {
        name: "cauchy_schwarz".into(),
        value: failures.len() as f64,
        tolerance: 0.0,
        passed: failures.is_empty(),
        detail: format!(
            "{PROPERTY_CASES} random models and states; largest relative excess {worst:e}{}",
            failures
                .first()
                .map(|f| format!("; first failure {f}"))
                .unwrap_or_default()
        ),
    })
}

pub fn run_selftest(seed: u64) -> Result<SelftestReport> {
    let start = Instant::now();
    let mut checks = vec![
        atom_decay()?,
        coherence_decay()?,
        cavity_decay()?,
        two_photon_rabi()?,
    ];
    checks.extend(empty_cavity_pipeline()?);
    checks.push(state_properties(seed)?);
    checks.push(cauchy_schwarz(seed)?);
    Ok(SelftestReport {
        checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}
