//! Steady state of a time-independent generator as the null vector of the
//! vectorised Liouvillian, with one equation swapped for `Tr ρ = 1`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::{max_abs, CMatrix, QuantumState, StateTolerances, C64};
use crate::models::HamiltonianParts;

use super::lindblad::{CollapseChannels, LindbladKernel};
use super::{top_fock_population, CUTOFF_GUARD};

/// Relative threshold on the second smallest singular value of the
/// Liouvillian below which the null space is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;
/// Residual `max |L(ρ_ss)|` accepted for the solution.
pub const RESIDUAL_TOL: f64 = 1e-9;

pub fn steady_state(parts: &HamiltonianParts, channels: &CollapseChannels) -> Result<QuantumState> {
    if !parts.pulse.is_constant() {
        return Err(Error::NonConstantDrive);
    }
    let kernel = LindbladKernel::new(parts, channels)?;
    steady_state_with_kernel(&kernel)
}

pub fn steady_state_with_kernel(kernel: &LindbladKernel) -> Result<QuantumState> {
    if !kernel.drive().is_constant() {
        return Err(Error::NonConstantDrive);
    }
    let sig = kernel.signature();
    let d = sig.dim();
    let n = d * d;
    let sup = kernel.superoperator(0.0);

    let scale = max_abs(&sup).max(1.0);
    let sv = sup.clone().singular_values();
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() > 1 && sorted[1] < DEGENERACY_THRESHOLD * scale {
        return Err(Error::DegenerateSteadyState(sorted[1]));
    }

    // replace the first equation (the (0,0) element of dρ/dt) by the trace
    let mut system = sup;
    let mut rhs = DVector::from_element(n, C64::new(0.0, 0.0));
    for c in 0..n {
        system[(0, c)] = C64::new(0.0, 0.0);
    }
    for i in 0..d {
        system[(0, i + i * d)] = C64::new(1.0, 0.0);
    }
    rhs[0] = C64::new(1.0, 0.0);
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SteadyStateFailed("singular system".into()))?;

    let rho = CMatrix::from_column_slice(d, d, x.as_slice());
    let residual = max_abs(&kernel.apply_matrix(0.0, &rho));
    if residual > RESIDUAL_TOL {
        return Err(Error::SteadyStateFailed(format!("residual {residual:e}")));
    }
    let top = top_fock_population(sig, rho.as_slice());
    if top > CUTOFF_GUARD {
        return Err(Error::CutoffTooSmall {
            cutoff: sig.fock_cutoff(),
            population: top,
            time: f64::INFINITY,
        });
    }
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    QuantumState::with_tolerances(sig, rho, StateTolerances::TRAJECTORY)
}
