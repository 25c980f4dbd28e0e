//! Hamiltonian families, drive pulses, analytic spectra and dressed-state
//! projectors.
//!
//! Everything is expressed with κ = 1 as the unit: rates and amplitudes are
//! multiples of κ, times are multiples of 1/κ. Hamiltonians are written in
//! the interaction picture, so the spectra reported here carry no free
//! `(n - 1)ω` offset.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    build_operator_set, hermitian_eigensystem, AtomLevel, Operator, SpaceSignature, C64,
};

/// Default pulse arrival time in units of the pulse width η.
pub const DEFAULT_CENTER_IN_ETA: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PulseSpec {
    /// `ε(t) = ε_max exp(-(t - T)² / 2η²)` with `ε_max = Ω / sqrt(η sqrt(π))`,
    /// so that `∫ ε² dt = Ω²`.
    Gaussian {
        omega: f64,
        eta: f64,
        t_center: f64,
    },
    Constant {
        epsilon0: f64,
    },
}

impl PulseSpec {
    /// Gaussian pulse centred at `5η`.
    pub fn gaussian(omega: f64, eta: f64) -> Self {
        PulseSpec::Gaussian {
            omega,
            eta,
            t_center: DEFAULT_CENTER_IN_ETA * eta,
        }
    }

    pub fn constant(epsilon0: f64) -> Self {
        PulseSpec::Constant { epsilon0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseSpec::Gaussian {
                omega,
                eta,
                t_center,
            } => {
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "pulse eta must be > 0, got {eta}"
                    )));
                }
                if !(omega >= 0.0 && omega.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "pulse omega must be >= 0, got {omega}"
                    )));
                }
                if !t_center.is_finite() {
                    return Err(Error::InvalidModel("pulse t_center must be finite".into()));
                }
            }
            PulseSpec::Constant { epsilon0 } => {
                if !(epsilon0 >= 0.0 && epsilon0.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "pulse epsilon0 must be >= 0, got {epsilon0}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn peak_amplitude(&self) -> f64 {
        match *self {
            PulseSpec::Gaussian { omega, eta, .. } => omega / (eta * PI.sqrt()).sqrt(),
            PulseSpec::Constant { epsilon0 } => epsilon0,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, PulseSpec::Constant { .. })
    }

    /// Mean photon number of the input pulse, `n_p = (Ω/κ)²`.
    pub fn mean_photon_number(&self) -> Option<f64> {
        match *self {
            PulseSpec::Gaussian { omega, .. } => Some(omega * omega),
            PulseSpec::Constant { .. } => None,
        }
    }
}

pub fn eval_pulse(p: &PulseSpec, t: f64) -> f64 {
    match *p {
        PulseSpec::Gaussian { eta, t_center, .. } => {
            let x = (t - t_center) / eta;
            p.peak_amplitude() * (-0.5 * x * x).exp()
        }
        PulseSpec::Constant { epsilon0 } => epsilon0,
    }
}

/// Drive amplitude as a function of absolute time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Drive {
    Single(PulseSpec),
    /// `count` copies of a Gaussian pulse, the k-th shifted by `k * period`.
    Train {
        pulse: PulseSpec,
        period: f64,
        count: usize,
    },
}

impl Drive {
    pub fn amplitude(&self, t: f64) -> f64 {
        match self {
            Drive::Single(p) => eval_pulse(p, t),
            Drive::Train {
                pulse,
                period,
                count,
            } => (0..*count)
                .map(|k| eval_pulse(pulse, t - k as f64 * period))
                .sum(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Drive::Single(PulseSpec::Constant { .. }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `H = g(a²σ₊ + a†²σ₋) + ε(t)(a + a†)`.
    TwoPhotonJc,
    /// `H = Δa†a + Δσ_z/2 + g(aσ₊ + a†σ₋) + ε(t)V`.
    StandardJc,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::TwoPhotonJc => "two_photon_jc",
            ModelKind::StandardJc => "standard_jc",
        }
    }
}

/// Which subsystem the external field couples to (`λ = 0` cavity, `λ = 1` atom).
/// Only meaningful for [`ModelKind::StandardJc`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveTarget {
    Cavity,
    Atom,
}

impl DriveTarget {
    pub fn from_lambda(lambda: i64) -> Result<Self> {
        match lambda {
            0 => Ok(DriveTarget::Cavity),
            1 => Ok(DriveTarget::Atom),
            _ => Err(Error::InvalidModel(format!(
                "lambda must be 0 or 1, got {lambda}"
            ))),
        }
    }

    pub fn lambda(&self) -> u8 {
        match self {
            DriveTarget::Cavity => 0,
            DriveTarget::Atom => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub g: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
    pub kappa: f64,
    pub pulse: PulseSpec,
    /// Detuning `Δ = ω - ω_p` of the standard JC model; `None` means `Δ = g`
    /// (drive on the lower polariton). Ignored for the two-photon model.
    pub delta: Option<f64>,
    pub drive_target: DriveTarget,
}

impl ModelSpec {
    pub fn two_photon(g: f64, gamma: f64, gamma_phi: f64, pulse: PulseSpec) -> Self {
        Self {
            kind: ModelKind::TwoPhotonJc,
            g,
            gamma,
            gamma_phi,
            kappa: 1.0,
            pulse,
            delta: None,
            drive_target: DriveTarget::Cavity,
        }
    }

    pub fn standard(
        g: f64,
        gamma: f64,
        gamma_phi: f64,
        pulse: PulseSpec,
        target: DriveTarget,
    ) -> Self {
        Self {
            kind: ModelKind::StandardJc,
            g,
            gamma,
            gamma_phi,
            kappa: 1.0,
            pulse,
            delta: None,
            drive_target: target,
        }
    }

    /// The parameter point used throughout the single-pulse benchmarks:
    /// g = 10, Ω = 1, η = 12.5, Γ = Γφ = 0.5.
    pub fn reference_point() -> Self {
        Self::two_photon(10.0, 0.5, 0.5, PulseSpec::gaussian(1.0, 12.5))
    }

    pub fn effective_delta(&self) -> f64 {
        match self.kind {
            ModelKind::TwoPhotonJc => 0.0,
            ModelKind::StandardJc => self.delta.unwrap_or(self.g),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("g", self.g),
            ("gamma", self.gamma),
            ("gamma_phi", self.gamma_phi),
        ];
        for (name, v) in checks {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidModel(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if let Some(d) = self.delta {
            if !d.is_finite() {
                return Err(Error::InvalidModel("delta must be finite".into()));
            }
        }
        self.pulse.validate()
    }
}

/// `H(t) = h0 + ε(t) v`.
#[derive(Clone, Debug)]
pub struct HamiltonianParts {
    pub h0: Operator,
    pub v: Operator,
    pub pulse: PulseSpec,
}

impl HamiltonianParts {
    pub fn at(&self, t: f64) -> Operator {
        &self.h0 + &self.v.scale(eval_pulse(&self.pulse, t))
    }

    pub fn signature(&self) -> SpaceSignature {
        self.h0.signature()
    }
}

pub fn build_hamiltonian(spec: &ModelSpec, sig: SpaceSignature) -> Result<HamiltonianParts> {
    spec.validate()?;
    let ops = build_operator_set(sig);
    let g = spec.g;
    let (h0, v) = match spec.kind {
        ModelKind::TwoPhotonJc => {
            let a2 = &ops.a * &ops.a;
            let coupling = &(&a2 * &ops.sigma_plus) + &(&a2.adjoint() * &ops.sigma_minus);
            (coupling.scale(g), &ops.a + &ops.a_dag)
        }
        ModelKind::StandardJc => {
            let delta = spec.effective_delta();
            let coupling = &(&ops.a * &ops.sigma_plus) + &(&ops.a_dag * &ops.sigma_minus);
            let h0 =
                &(&ops.n_op.scale(delta) + &ops.sigma_z.scale(delta / 2.0)) + &coupling.scale(g);
            let v = match spec.drive_target {
                DriveTarget::Cavity => &ops.a + &ops.a_dag,
                DriveTarget::Atom => &ops.sigma_plus + &ops.sigma_minus,
            };
            (h0, v)
        }
    };
    Ok(HamiltonianParts {
        h0,
        v,
        pulse: spec.pulse,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumLevel {
    pub label: String,
    /// Excitation manifold (photon number of the `|g, n⟩` component).
    pub manifold: usize,
    pub energy: f64,
}

/// Closed-form eigenenergies of `h0` up to manifold `n_max`, in the rotating
/// frame.
pub fn analytic_spectrum(
    spec: &ModelSpec,
    sig: SpaceSignature,
    n_max: usize,
) -> Result<Vec<SpectrumLevel>> {
    if n_max >= sig.fock_cutoff() {
        return Err(Error::InvalidArgument(format!(
            "n_max = {n_max} must be below the cutoff {}",
            sig.fock_cutoff()
        )));
    }
    let g = spec.g;
    let mut levels = Vec::new();
    match spec.kind {
        ModelKind::TwoPhotonJc => {
            for n in 0..=n_max.min(1) {
                levels.push(SpectrumLevel {
                    label: format!("g,{n}"),
                    manifold: n,
                    energy: 0.0,
                });
            }
            for n in 2..=n_max {
                let split = g * ((n * (n - 1)) as f64).sqrt();
                levels.push(SpectrumLevel {
                    label: format!("-,{n}"),
                    manifold: n,
                    energy: -split,
                });
                levels.push(SpectrumLevel {
                    label: format!("+,{n}"),
                    manifold: n,
                    energy: split,
                });
            }
        }
        ModelKind::StandardJc => {
            let delta = spec.effective_delta();
            levels.push(SpectrumLevel {
                label: "g,0".into(),
                manifold: 0,
                energy: -delta / 2.0,
            });
            for n in 1..=n_max {
                let base = (n as f64 - 0.5) * delta;
                let split = g * (n as f64).sqrt();
                levels.push(SpectrumLevel {
                    label: format!("-,{n}"),
                    manifold: n,
                    energy: base - split,
                });
                levels.push(SpectrumLevel {
                    label: format!("+,{n}"),
                    manifold: n,
                    energy: base + split,
                });
            }
        }
    }
    Ok(levels)
}

/// Largest distance between an analytic level (manifolds `n ≤ N - 3`) and its
/// matched numerical eigenvalue of `h0`. Each numerical eigenvalue is used at
/// most once.
pub fn spectrum_deviation(spec: &ModelSpec, sig: SpaceSignature) -> Result<f64> {
    let parts = build_hamiltonian(spec, sig)?;
    let numeric = hermitian_eigensystem(&parts.h0)?.values;
    let n_max = sig.fock_cutoff() - 3;
    let analytic = analytic_spectrum(spec, sig, n_max)?;
    let mut used = vec![false; numeric.len()];
    let mut worst = 0.0_f64;
    for level in &analytic {
        let (idx, dist) = numeric
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, &e)| (i, (e - level.energy).abs()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .ok_or_else(|| {
                Error::InvalidArgument("more analytic levels than eigenvalues".into())
            })?;
        used[idx] = true;
        worst = worst.max(dist);
    }
    Ok(worst)
}

/// Projectors onto the bare ground states and the dressed doublets of `h0`.
///
/// Two-photon model: `|g,0⟩`, `|g,1⟩`, `|±,n⟩ = (|g,n⟩ ± |e,n-2⟩)/√2` for
/// `2 ≤ n ≤ N-1`. Standard JC: `|g,0⟩`, `|±,n⟩ = (|g,n⟩ ± |e,n-1⟩)/√2` for
/// `1 ≤ n ≤ N-1`.
pub fn dressed_projectors(spec: &ModelSpec, sig: SpaceSignature) -> Vec<(String, Operator)> {
    let n_cut = sig.fock_cutoff();
    let zero = C64::new(0.0, 0.0);
    let basis = |atom, n| {
        let mut psi = vec![zero; sig.dim()];
        psi[sig.index(atom, n)] = C64::new(1.0, 0.0);
        psi
    };
    let doublet = |n: usize, shift: usize, sign: f64| {
        let mut psi = vec![zero; sig.dim()];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        psi[sig.index(AtomLevel::Ground, n)] = C64::new(r, 0.0);
        psi[sig.index(AtomLevel::Excited, n - shift)] = C64::new(sign * r, 0.0);
        psi
    };
    let proj = |psi: Vec<C64>| Operator::projector(sig, &psi).expect("length matches signature");

    let mut out = vec![("g,0".to_string(), proj(basis(AtomLevel::Ground, 0)))];
    let (first, shift) = match spec.kind {
        ModelKind::TwoPhotonJc => {
            out.push(("g,1".to_string(), proj(basis(AtomLevel::Ground, 1))));
            (2, 2)
        }
        ModelKind::StandardJc => (1, 1),
    };
    for n in first..n_cut {
        out.push((format!("+,{n}"), proj(doublet(n, shift, 1.0))));
        out.push((format!("-,{n}"), proj(doublet(n, shift, -1.0))));
    }
    out
}
