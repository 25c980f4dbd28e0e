//! Time-dependent Lindblad propagation and the steady-state solver.

pub mod integrator;
pub mod lindblad;
pub mod steady;

use serde::Serialize;

pub use integrator::{IntegrationStats, IntegratorConfig};
pub use lindblad::{liouvillian_apply, CollapseChannels, LindbladKernel};
pub use steady::{steady_state, steady_state_with_kernel};

use crate::error::{Error, Result};
use crate::hilbert::{
    hermiticity_defect, trace_of_product, AtomLevel, CMatrix, Operator, QuantumState,
    SpaceSignature, C64,
};
use crate::models::HamiltonianParts;

/// Population allowed in the two highest Fock levels before a run is
/// rejected as under-resolved.
pub const CUTOFF_GUARD: f64 = 1e-8;
/// Largest trace drift that is silently renormalised.
pub const TRACE_DRIFT_TOL: f64 = 1e-7;

/// Population of the two highest Fock levels, summed over the atom.
pub fn top_fock_population(sig: SpaceSignature, rho: &[C64]) -> f64 {
    let n = sig.fock_cutoff();
    let d = sig.dim();
    let mut p = 0.0;
    for atom in [AtomLevel::Ground, AtomLevel::Excited] {
        for level in [n - 2, n - 1] {
            let i = sig.index(atom, level);
            p += rho[i + i * d].re;
        }
    }
    p
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub op: Operator,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: Operator) -> Self {
        Self {
            name: name.into(),
            op,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t_grid: Vec<f64>,
    pub states: Option<Vec<QuantumState>>,
    pub observables: Vec<Series>,
    /// Largest population seen in the two highest Fock levels.
    pub guard_peak: f64,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<&[C64]> {
        self.observables
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    pub fn real_series(&self, name: &str) -> Option<Vec<f64>> {
        self.series(name).map(|v| v.iter().map(|z| z.re).collect())
    }

    pub fn states(&self) -> Result<&[QuantumState]> {
        self.states.as_deref().ok_or(Error::MissingStates)
    }

    pub fn final_state(&self) -> Result<&QuantumState> {
        self.states()?.last().ok_or(Error::MissingStates)
    }
}

/// Options beyond the integrator tolerances.
#[derive(Clone, Copy, Debug)]
pub struct PropagateOptions {
    pub record_states: bool,
    /// Enforce [`CUTOFF_GUARD`] on every accepted step.
    pub cutoff_guard: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            record_states: true,
            cutoff_guard: true,
        }
    }
}

fn validate_recorded(sig: SpaceSignature, t: f64, flat: &[C64]) -> Result<QuantumState> {
    let d = sig.dim();
    let m = CMatrix::from_column_slice(d, d, flat);
    if flat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState(format!("non-finite state at t = {t}")));
    }
    let tr = m.trace();
    let drift = (tr - C64::new(1.0, 0.0)).norm();
    if drift > TRACE_DRIFT_TOL {
        return Err(Error::TraceDrift { time: t, drift });
    }
    let herm = hermiticity_defect(&m);
    if herm > 1e-7 {
        return Err(Error::InvalidState(format!(
            "Hermiticity defect {herm:e} at t = {t}"
        )));
    }
    let m = (&m + m.adjoint()) * C64::new(0.5 / tr.re, 0.0);
    match QuantumState::with_tolerances(sig, m.clone(), crate::hilbert::StateTolerances::TRAJECTORY) {
        Ok(s) => Ok(s),
        Err(Error::InvalidState(_)) => {
            let min_eigenvalue = crate::hilbert::min_eigenvalue(&m);
            Err(Error::PositivityLost {
                time: t,
                min_eigenvalue,
            })
        }
        Err(e) => Err(e),
    }
}

/// Propagates `rho0` from `t_grid[0]` (any absolute time) through `t_grid`,
/// recording the requested observables and optionally the states.
pub fn propagate_with_kernel(
    kernel: &LindbladKernel,
    rho0: &QuantumState,
    t_grid: &[f64],
    record: &[Observable],
    cfg: &IntegratorConfig,
    opts: PropagateOptions,
) -> Result<Trajectory> {
    let sig = kernel.signature();
    if rho0.signature() != sig {
        return Err(Error::SignatureMismatch {
            left: sig,
            right: rho0.signature(),
        });
    }
    for obs in record {
        if obs.op.signature() != sig {
            return Err(Error::SignatureMismatch {
                left: sig,
                right: obs.op.signature(),
            });
        }
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly ascending".into(),
        ));
    }

    let d = sig.dim();
    let mut y = rho0.matrix().as_slice().to_vec();
    let mut states = opts.record_states.then(|| Vec::with_capacity(t_grid.len()));
    let mut series: Vec<Series> = record
        .iter()
        .map(|o| Series {
            name: o.name.clone(),
            values: Vec::with_capacity(t_grid.len()),
        })
        .collect();
    let mut guard_peak = top_fock_population(sig, &y);
    if opts.cutoff_guard && guard_peak > CUTOFF_GUARD {
        return Err(Error::CutoffTooSmall {
            cutoff: sig.fock_cutoff(),
            population: guard_peak,
            time: t_grid[0],
        });
    }

    let stats = {
        let guard_peak = &mut guard_peak;
        integrator::integrate(
            |t, x, out| kernel.apply(t, x, out),
            &mut y,
            t_grid[0],
            t_grid,
            cfg,
            |t, x| {
                let p = top_fock_population(sig, x);
                *guard_peak = guard_peak.max(p);
                if opts.cutoff_guard && p > CUTOFF_GUARD {
                    return Err(Error::CutoffTooSmall {
                        cutoff: sig.fock_cutoff(),
                        population: p,
                        time: t,
                    });
                }
                Ok(())
            },
            |_, t, x| {
                let state = validate_recorded(sig, t, x)?;
                for (s, obs) in series.iter_mut().zip(record) {
                    s.values
                        .push(trace_of_product(obs.op.matrix(), state.matrix()));
                }
                if let Some(st) = states.as_mut() {
                    st.push(state);
                }
                Ok(())
            },
        )?
    };
    debug_assert_eq!(y.len(), d * d);
    Ok(Trajectory {
        t_grid: t_grid.to_vec(),
        states,
        observables: series,
        guard_peak,
        stats,
    })
}

pub fn propagate(
    parts: &HamiltonianParts,
    channels: &CollapseChannels,
    rho0: &QuantumState,
    t_grid: &[f64],
    record: &[Observable],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let kernel = LindbladKernel::new(parts, channels)?;
    propagate_with_kernel(
        &kernel,
        rho0,
        t_grid,
        record,
        cfg,
        PropagateOptions::default(),
    )
}

/// Evolves an arbitrary (not necessarily physical) operator `x0` under the
/// generator from absolute time `t0`, reporting `Tr(probe · x(t))` at each
/// time in `times`. This is the regression-theorem workhorse.
pub fn evolve_probe(
    kernel: &LindbladKernel,
    x0: &CMatrix,
    t0: f64,
    times: &[f64],
    probe: &CMatrix,
    cfg: &IntegratorConfig,
) -> Result<(Vec<C64>, IntegrationStats)> {
    let (mut out, stats) = evolve_probes(kernel, &[(x0, probe)], t0, times, cfg)?;
    Ok((out.pop().unwrap_or_default(), stats))
}

/// Stacked form of [`evolve_probe`]: every `(x0, probe)` pair is evolved by
/// the same integrator run, so all blocks share one step sequence.
pub fn evolve_probes(
    kernel: &LindbladKernel,
    blocks: &[(&CMatrix, &CMatrix)],
    t0: f64,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<(Vec<Vec<C64>>, IntegrationStats)> {
    let d = kernel.dim();
    let dd = d * d;
    let zero = C64::new(0.0, 0.0);
    let mut y = Vec::with_capacity(dd * blocks.len());
    // Tr(P X) = Σ_{i,k} P[i,k] X[k,i]; only nonzero probe entries matter
    let mut probes: Vec<Vec<(usize, C64)>> = Vec::with_capacity(blocks.len());
    for (x0, probe) in blocks {
        if x0.nrows() != d || x0.ncols() != d || probe.nrows() != d || probe.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: format!("{d}x{d}"),
                got: format!(
                    "{}x{} / {}x{}",
                    x0.nrows(),
                    x0.ncols(),
                    probe.nrows(),
                    probe.ncols()
                ),
            });
        }
        y.extend_from_slice(x0.as_slice());
        let mut entries = Vec::new();
        for k in 0..d {
            for i in 0..d {
                let v = probe[(i, k)];
                if v != zero {
                    entries.push((k + i * d, v));
                }
            }
        }
        probes.push(entries);
    }
    let mut out: Vec<Vec<C64>> = vec![Vec::with_capacity(times.len()); blocks.len()];
    if times.is_empty() {
        return Ok((out, IntegrationStats::default()));
    }
    let stats = integrator::integrate(
        |t, x, o| {
            for (xb, ob) in x.chunks_exact(dd).zip(o.chunks_exact_mut(dd)) {
                kernel.apply(t, xb, ob);
            }
        },
        &mut y,
        t0,
        times,
        cfg,
        |_, _| Ok(()),
        |_, _, x| {
            for ((xb, entries), series) in x.chunks_exact(dd).zip(&probes).zip(out.iter_mut()) {
                series.push(
                    entries
                        .iter()
                        .fold(zero, |acc, &(idx, v)| acc + v * xb[idx]),
                );
            }
            Ok(())
        },
    )?;
    Ok((out, stats))
}

/// Uniform grid of `points` samples on `[start, end]`.
pub fn uniform_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs at least two points");
    let h = (end - start) / (points - 1) as f64;
    (0..points)
        .map(|k| {
            if k + 1 == points {
                end
            } else {
                start + k as f64 * h
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_operator_set, AtomLevel};
    use crate::models::{build_hamiltonian, ModelSpec, PulseSpec};

    fn undriven(g: f64, gamma: f64, gamma_phi: f64) -> ModelSpec {
        ModelSpec::two_photon(g, gamma, gamma_phi, PulseSpec::constant(0.0))
    }

    fn run(
        spec: &ModelSpec,
        sig: SpaceSignature,
        rho0: &QuantumState,
        grid: &[f64],
        obs: &[Observable],
    ) -> Trajectory {
        let parts = build_hamiltonian(spec, sig).unwrap();
        let ch = CollapseChannels::canonical(spec, sig);
        propagate(&parts, &ch, rho0, grid, obs, &IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn atom_decay_is_exponential() {
        let sig = SpaceSignature::new(3).unwrap();
        let ops = build_operator_set(sig);
        let spec = undriven(0.0, 0.5, 0.0);
        let grid = uniform_grid(0.0, 10.0, 101);
        let rho0 = QuantumState::basis(sig, AtomLevel::Excited, 0).unwrap();
        let tr = run(
            &spec,
            sig,
            &rho0,
            &grid,
            &[Observable::new("pe", &ops.sigma_plus * &ops.sigma_minus)],
        );
        let pe = tr.real_series("pe").unwrap();
        let worst = grid
            .iter()
            .zip(&pe)
            .map(|(t, p)| (p - (-t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "max error {worst}");
    }

    #[test]
    fn coherence_dephasing_rate() {
        let sig = SpaceSignature::new(3).unwrap();
        let (gamma, gamma_phi) = (0.5, 0.3);
        let spec = undriven(0.0, gamma, gamma_phi);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![C64::new(0.0, 0.0); sig.dim()];
        psi[sig.index(AtomLevel::Ground, 0)] = C64::new(r, 0.0);
        psi[sig.index(AtomLevel::Excited, 0)] = C64::new(r, 0.0);
        let rho0 = QuantumState::pure(sig, &psi).unwrap();
        let grid = uniform_grid(0.0, 10.0, 51);
        let tr = run(&spec, sig, &rho0, &grid, &[]);
        let (g0, e0) = (
            sig.index(AtomLevel::Ground, 0),
            sig.index(AtomLevel::Excited, 0),
        );
        for (t, s) in grid.iter().zip(tr.states().unwrap()) {
            let want = 0.5 * (-(gamma + 2.0 * gamma_phi) * t).exp();
            assert!((s.matrix()[(g0, e0)].norm() - want).abs() <= 1e-6);
        }
    }

    #[test]
    fn lossless_two_photon_rabi() {
        let sig = SpaceSignature::new(5).unwrap();
        let spec = ModelSpec {
            kappa: 1.0,
            ..undriven(1.0, 0.0, 0.0)
        };
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let ch = CollapseChannels::new(vec![]);
        let rho0 = QuantumState::basis(sig, AtomLevel::Ground, 2).unwrap();
        let grid = uniform_grid(0.0, 10.0, 201);
        let tr = propagate(&parts, &ch, &rho0, &grid, &[], &IntegratorConfig::default()).unwrap();
        for (t, s) in grid.iter().zip(tr.states().unwrap()) {
            let want = (2f64.sqrt() * t).sin().powi(2);
            assert!((s.population(AtomLevel::Excited, 0) - want).abs() <= 1e-6);
        }
    }

    #[test]
    fn propagation_from_an_absolute_time() {
        let sig = SpaceSignature::new(4).unwrap();
        let ops = build_operator_set(sig);
        let spec = undriven(0.0, 0.0, 0.0);
        let rho0 = QuantumState::basis(sig, AtomLevel::Ground, 1).unwrap();
        let grid = uniform_grid(40.0, 42.0, 5);
        let tr = run(
            &spec,
            sig,
            &rho0,
            &grid,
            &[Observable::new("n", ops.n_op.clone())],
        );
        let n = tr.real_series("n").unwrap();
        for (t, v) in grid.iter().zip(n) {
            assert!((v - (-2.0 * (t - 40.0)).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn cutoff_guard_trips() {
        // strong resonant drive on an empty cavity overflows three levels
        let sig = SpaceSignature::new(3).unwrap();
        let spec = ModelSpec::two_photon(0.0, 0.5, 0.5, PulseSpec::constant(2.0));
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let ch = CollapseChannels::canonical(&spec, sig);
        let r = propagate(
            &parts,
            &ch,
            &QuantumState::ground(sig),
            &uniform_grid(0.0, 5.0, 11),
            &[],
            &IntegratorConfig::default(),
        );
        assert!(matches!(r, Err(Error::CutoffTooSmall { cutoff: 3, .. })));
    }

    #[test]
    fn rejects_bad_grids() {
        let sig = SpaceSignature::new(3).unwrap();
        let spec = undriven(1.0, 0.5, 0.5);
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let ch = CollapseChannels::canonical(&spec, sig);
        let rho0 = QuantumState::ground(sig);
        assert!(propagate(
            &parts,
            &ch,
            &rho0,
            &[1.0, 0.5],
            &[],
            &IntegratorConfig::default()
        )
        .is_err());
        assert!(propagate(&parts, &ch, &rho0, &[], &[], &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn tolerance_refinement_converges() {
        let sig = SpaceSignature::new(8).unwrap();
        let spec = ModelSpec::two_photon(5.0, 0.5, 0.5, PulseSpec::gaussian(1.0, 2.0));
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let ch = CollapseChannels::canonical(&spec, sig);
        let grid = uniform_grid(0.0, 20.0, 3);
        let rho0 = QuantumState::ground(sig);
        let base = IntegratorConfig::for_pulse(&spec.pulse);
        let tight = IntegratorConfig {
            rel_tol: base.rel_tol / 2.0,
            abs_tol: base.abs_tol / 2.0,
            ..base
        };
        let a = propagate(&parts, &ch, &rho0, &grid, &[], &base).unwrap();
        let b = propagate(&parts, &ch, &rho0, &grid, &[], &tight).unwrap();
        let diff = crate::hilbert::max_abs(
            &(a.final_state().unwrap().matrix() - b.final_state().unwrap().matrix()),
        );
        assert!(diff <= 10.0 * tight.rel_tol, "diff {diff}");
    }

    #[test]
    fn probe_evolution_of_cavity_coherence() {
        // X = a |1><1| = |0><1| rotates into nothing but decays at rate κ
        let sig = SpaceSignature::new(3).unwrap();
        let ops = build_operator_set(sig);
        let spec = undriven(0.0, 0.0, 0.0);
        let kernel = LindbladKernel::new(
            &build_hamiltonian(&spec, sig).unwrap(),
            &CollapseChannels::canonical(&spec, sig),
        )
        .unwrap();
        let rho1 = QuantumState::basis(sig, AtomLevel::Ground, 1).unwrap();
        let x0 = ops.a.matrix() * rho1.matrix();
        let times = uniform_grid(0.0, 5.0, 11);
        let (vals, _) = evolve_probe(
            &kernel,
            &x0,
            0.0,
            &times,
            ops.a_dag.matrix(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        for (t, v) in times.iter().zip(vals) {
            assert!((v.re - (-t).exp()).abs() < 1e-8);
            assert!(v.im.abs() < 1e-12);
        }
    }
}
