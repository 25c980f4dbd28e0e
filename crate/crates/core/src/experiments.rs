//! Single-pulse pipeline and the figure protocols built on it: steady-state
//! blockade scan, pulse-width sweeps, pulse-train HBT, iso-efficiency curve
//! and the standard JC baseline.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::correlations::{
    efficiency, emission_observables, g2_comb, merit_report, CombResult, CombSpec, Convergence,
    MeritReport, TwoTimeLayout, OBS_N, OBS_P1, OBS_P2, TAIL_THRESHOLD,
};
use crate::dynamics::{
    propagate_with_kernel, steady_state_with_kernel, CollapseChannels, IntegratorConfig,
    LindbladKernel, PropagateOptions, Trajectory,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    build_operator_set, expectation, hermitian_eigensystem, QuantumState, SpaceSignature,
};
use crate::models::{
    analytic_spectrum, build_hamiltonian, dressed_projectors, eval_pulse, DriveTarget, ModelKind,
    ModelSpec, PulseSpec,
};
use crate::par;

/// Decay tail appended after `T + 8η`.
pub const WINDOW_TAIL: f64 = 12.0;
pub const MAX_WINDOW_EXTENSIONS: usize = 20;
pub const AUTO_CUTOFF_START: usize = 6;
pub const AUTO_CUTOFF_STEP: usize = 2;
pub const AUTO_CUTOFF_MAX: usize = 40;

/// Numerical resolution shared by every pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Fixed Fock cutoff; `None` grows the cutoff until the guard holds.
    pub fock_cutoff: Option<usize>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` uses `η/20` for pulses and `0.05` otherwise.
    pub max_step: Option<f64>,
    /// Start times of the two-time grids.
    pub t_points: usize,
    /// Upper bound on the delay resolution near `τ = 0`.
    pub tau_fine_step: f64,
    /// Delay range sampled at the fine resolution.
    pub tau_fine_span: f64,
    /// Relative reference mass first-order rows may skip at their far end.
    pub truncation: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            fock_cutoff: None,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            t_points: 300,
            tau_fine_step: 0.05,
            tau_fine_span: 12.0,
            truncation: 1e-6,
        }
    }
}

impl Numerics {
    pub fn integrator(&self, pulse: &PulseSpec) -> IntegratorConfig {
        let base = IntegratorConfig::for_pulse(pulse);
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step.or(base.max_step),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.fock_cutoff {
            SpaceSignature::new(n)?;
        }
        if self.t_points < 3 {
            return Err(Error::InvalidArgument("t_points must be at least 3".into()));
        }
        if !(self.truncation >= 0.0 && self.truncation < 1e-2) {
            return Err(Error::InvalidArgument(
                "truncation must lie in [0, 0.01)".into(),
            ));
        }
        if !(self.tau_fine_step > 0.0 && self.tau_fine_span >= 0.0) {
            return Err(Error::InvalidArgument(
                "delay resolution must be positive".into(),
            ));
        }
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
        }
        .validate()
    }
}

/// Runs `f` on growing cutoffs until the top-level guard holds, or once on
/// the fixed cutoff. Returns the result and the cutoff used.
pub fn with_auto_cutoff<T>(
    numerics: &Numerics,
    mut f: impl FnMut(SpaceSignature) -> Result<T>,
) -> Result<(T, usize)> {
    match numerics.fock_cutoff {
        Some(n) => f(SpaceSignature::new(n)?).map(|v| (v, n)),
        None => grow_cutoff(AUTO_CUTOFF_START, f),
    }
}

fn grow_cutoff<T>(
    start: usize,
    mut f: impl FnMut(SpaceSignature) -> Result<T>,
) -> Result<(T, usize)> {
    let mut n = start.max(3);
    loop {
        match f(SpaceSignature::new(n)?) {
            Err(Error::CutoffTooSmall { .. }) if n + AUTO_CUTOFF_STEP <= AUTO_CUTOFF_MAX => {
                n += AUTO_CUTOFF_STEP
            }
            other => return other.map(|v| (v, n)),
        }
    }
}

/// Time lattice for one emission window `[0, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub t_end: f64,
    pub points: usize,
    pub layout: TwoTimeLayout,
}

impl Lattice {
    pub fn new(t_end: f64, numerics: &Numerics) -> Self {
        let rows = numerics.t_points - 1;
        let h_rows = t_end / rows as f64;
        let stride = (h_rows / numerics.tau_fine_step).ceil().max(1.0) as usize;
        let step = h_rows / stride as f64;
        Self {
            t_end,
            points: rows * stride + 1,
            layout: TwoTimeLayout {
                row_stride: stride,
                fine_offsets: (numerics.tau_fine_span / step).ceil() as usize,
                truncation: numerics.truncation,
            },
        }
    }

    pub fn step(&self) -> f64 {
        self.t_end / (self.points - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.t_end
                } else {
                    k as f64 * h
                }
            })
            .collect()
    }
}

/// `T + 8η + 12/κ` for a Gaussian pulse.
pub fn emission_window(pulse: &PulseSpec) -> Result<f64> {
    match *pulse {
        PulseSpec::Gaussian { eta, t_center, .. } => Ok(t_center + 8.0 * eta + WINDOW_TAIL),
        PulseSpec::Constant { .. } => Err(Error::InvalidArgument(
            "pulsed pipelines need a Gaussian pulse".into(),
        )),
    }
}

/// Lindblad kernel of `spec` with the canonical collapse channels.
pub fn kernel_for(spec: &ModelSpec, sig: SpaceSignature) -> Result<LindbladKernel> {
    let parts = build_hamiltonian(spec, sig)?;
    LindbladKernel::new(&parts, &CollapseChannels::canonical(spec, sig))
}

/// Propagation of one pulse from the ground state over a window that is
/// extended until the cavity has emptied.
#[derive(Clone, Debug)]
pub struct EmissionRun {
    pub spec: ModelSpec,
    pub kernel: LindbladKernel,
    pub trajectory: Trajectory,
    pub lattice: Lattice,
    pub window_extensions: usize,
    pub integrator: IntegratorConfig,
}

fn emission_on(
    spec: &ModelSpec,
    sig: SpaceSignature,
    numerics: &Numerics,
    record_states: bool,
) -> Result<EmissionRun> {
    let kernel = kernel_for(spec, sig)?;
    let cfg = numerics.integrator(&spec.pulse);
    let mut t_end = emission_window(&spec.pulse)?;
    let observables = emission_observables(sig);
    for extensions in 0..=MAX_WINDOW_EXTENSIONS {
        let lattice = Lattice::new(t_end, numerics);
        let traj = propagate_with_kernel(
            &kernel,
            &QuantumState::ground(sig),
            &lattice.grid(),
            &observables,
            &cfg,
            PropagateOptions {
                record_states,
                cutoff_guard: true,
            },
        )?;
        let tail = *traj
            .real_series(OBS_N)
            .expect("recorded")
            .last()
            .expect("nonempty");
        if tail <= TAIL_THRESHOLD {
            return Ok(EmissionRun {
                spec: *spec,
                kernel,
                trajectory: traj,
                lattice,
                window_extensions: extensions,
                integrator: cfg,
            });
        }
        if extensions == MAX_WINDOW_EXTENSIONS {
            return Err(Error::WindowNotConverged {
                time: t_end,
                population: tail,
            });
        }
        t_end += WINDOW_TAIL;
    }
    unreachable!()
}

pub fn emission(spec: &ModelSpec, numerics: &Numerics, record_states: bool) -> Result<EmissionRun> {
    spec.validate()?;
    numerics.validate()?;
    with_auto_cutoff(numerics, |sig| {
        emission_on(spec, sig, numerics, record_states)
    })
    .map(|(r, _)| r)
}

/// Merits of a single pulse. `with_hbt` also computes the `C²` map.
#[derive(Clone, Debug)]
pub struct PulseOutcome {
    pub run: EmissionRun,
    pub merits: MeritReport,
}

pub fn run_pulse(spec: &ModelSpec, numerics: &Numerics, with_hbt: bool) -> Result<PulseOutcome> {
    let run = emission(spec, numerics, true)?;
    let mut merits = merit_report(
        &run.kernel,
        &run.trajectory,
        run.lattice.layout,
        &run.integrator,
        spec.kappa,
        with_hbt,
    )?;
    merits.convergence.window_extensions = run.window_extensions;
    Ok(PulseOutcome { run, merits })
}

/// Efficiency alone, without recording states or two-time maps.
pub fn pulse_efficiency(spec: &ModelSpec, numerics: &Numerics) -> Result<f64> {
    let run = emission(spec, numerics, false)?;
    efficiency(&run.trajectory, spec.kappa)
}

// ---------------------------------------------------------------- spectrum

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub g: f64,
    pub label: String,
    pub manifold: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Interaction-frame levels of `h0` for each coupling, analytic next to the
/// closest unused numerical eigenvalue.
pub fn run_spectrum(
    base: &ModelSpec,
    g_values: &[f64],
    n_max: usize,
    sig: SpaceSignature,
) -> Result<Vec<SpectrumRow>> {
    let mut rows = Vec::new();
    for &g in g_values {
        let spec = ModelSpec { g, ..*base };
        let levels = analytic_spectrum(&spec, sig, n_max)?;
        let parts = build_hamiltonian(&spec, sig)?;
        let numeric = hermitian_eigensystem(&parts.h0)?.values;
        let mut used = vec![false; numeric.len()];
        for level in levels {
            let (idx, _) = numeric
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, &e)| (i, (e - level.energy).abs()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("more eigenvalues than listed levels");
            used[idx] = true;
            rows.push(SpectrumRow {
                g,
                label: level.label,
                manifold: level.manifold,
                analytic: level.energy,
                numeric: numeric[idx],
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- steady state

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyRow {
    pub g: f64,
    /// Populations of the dressed projectors, in projector order.
    pub occupations: Vec<(String, f64)>,
    pub mean_photon_number: f64,
    /// `⟨a†a†aa⟩ / ⟨a†a⟩²`
    pub g2_zero: f64,
    pub fock_cutoff: usize,
}

impl SteadyRow {
    /// Most populated state other than `|g,0⟩`.
    pub fn dominant_excited(&self) -> Option<&str> {
        self.occupations
            .iter()
            .filter(|(l, _)| l != "g,0")
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(l, _)| l.as_str())
    }
}

pub fn steady_point(spec: &ModelSpec, numerics: &Numerics) -> Result<SteadyRow> {
    spec.validate()?;
    if !spec.pulse.is_constant() {
        return Err(Error::NonConstantDrive);
    }
    let (rho, n_cut) = with_auto_cutoff(numerics, |sig| {
        steady_state_with_kernel(&kernel_for(spec, sig)?)
    })?;
    let sig = rho.signature();
    let ops = build_operator_set(sig);
    let n = expectation(&ops.n_op, &rho)?.re;
    let n2 = expectation(&(&ops.a_dag * &(&ops.a_dag * &(&ops.a * &ops.a))), &rho)?.re;
    let occupations = dressed_projectors(spec, sig)
        .into_iter()
        .map(|(label, p)| Ok((label, expectation(&p, &rho)?.re)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SteadyRow {
        g: spec.g,
        occupations,
        mean_photon_number: n,
        g2_zero: if n > 0.0 { n2 / (n * n) } else { f64::NAN },
        fock_cutoff: n_cut,
    })
}

/// Steady states of `base` for each coupling in `g_values`.
pub fn steady_scan(
    base: &ModelSpec,
    g_values: &[f64],
    numerics: &Numerics,
) -> Result<Vec<SteadyRow>> {
    if g_values.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::InvalidArgument(
            "coupling values must be >= 0".into(),
        ));
    }
    par::try_map(g_values.len(), |i| {
        steady_point(
            &ModelSpec {
                g: g_values[i],
                ..*base
            },
            numerics,
        )
    })
}

/// Base point of the blockade scan: constant drive `ε = κ`, `Γ = Γφ = κ/2`.
pub fn fig1c_base() -> ModelSpec {
    ModelSpec::two_photon(10.0, 0.5, 0.5, PulseSpec::constant(1.0))
}

pub fn run_fig1c(g_values: &[f64], numerics: &Numerics) -> Result<Vec<SteadyRow>> {
    steady_scan(&fig1c_base(), g_values, numerics)
}

// ---------------------------------------------------------------- sweeps

/// Parameters a sweep axis may set.
pub const SWEEP_PARAMETERS: [&str; 9] = [
    "g",
    "gamma",
    "gamma_phi",
    "kappa",
    "omega",
    "eta",
    "delta",
    "lambda",
    "epsilon0",
];

/// Sets one named parameter. Changing `eta` keeps the pulse centred at `5η`.
pub fn set_parameter(spec: &mut ModelSpec, name: &str, value: f64) -> Result<()> {
    match name {
        "g" => spec.g = value,
        "gamma" => spec.gamma = value,
        "gamma_phi" => spec.gamma_phi = value,
        "kappa" => spec.kappa = value,
        "delta" => spec.delta = Some(value),
        "lambda" => {
            if value.fract() != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "lambda must be 0 or 1, got {value}"
                )));
            }
            spec.drive_target = DriveTarget::from_lambda(value as i64)?;
        }
        "omega" | "eta" => match &mut spec.pulse {
            PulseSpec::Gaussian {
                omega,
                eta,
                t_center,
            } => {
                if name == "omega" {
                    *omega = value;
                } else {
                    *eta = value;
                    *t_center = crate::models::DEFAULT_CENTER_IN_ETA * value;
                }
            }
            PulseSpec::Constant { .. } => {
                return Err(Error::InvalidArgument(format!(
                    "`{name}` needs a Gaussian pulse"
                )));
            }
        },
        "epsilon0" => match &mut spec.pulse {
            PulseSpec::Constant { epsilon0 } => *epsilon0 = value,
            PulseSpec::Gaussian { .. } => {
                return Err(Error::InvalidArgument(
                    "`epsilon0` needs a constant drive".into(),
                ));
            }
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown sweep parameter `{other}`"
            )))
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Fig1c,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    SingleRun,
}

/// A grid of model points: the cartesian product of the axes applied to
/// `base`, first axis slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: ModelSpec,
    pub axes: Vec<Axis>,
    pub pipeline: Pipeline,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        for axis in &self.axes {
            if !SWEEP_PARAMETERS.contains(&axis.parameter.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "unknown sweep parameter `{}`",
                    axis.parameter
                )));
            }
            if axis.values.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "axis `{}` has no values",
                    axis.parameter
                )));
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Result<Vec<(Vec<(String, f64)>, ModelSpec)>> {
        self.validate()?;
        let mut out = vec![(Vec::new(), self.base)];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(out.len() * axis.values.len());
            for (coords, spec) in &out {
                for &v in &axis.values {
                    let mut s = *spec;
                    set_parameter(&mut s, &axis.parameter, v)?;
                    let mut c = coords.clone();
                    c.push((axis.parameter.clone(), v));
                    next.push((c, s));
                }
            }
            out = next;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<(String, f64)>,
    pub spec: ModelSpec,
    pub merits: Option<MeritReport>,
    pub error: Option<String>,
    pub flags: Vec<String>,
}

fn point_flags(result: &Result<MeritReport>) -> Vec<String> {
    let mut flags = Vec::new();
    match result {
        Ok(m) => {
            if m.convergence.indistinguishability_clamped {
                flags.push("clamped".to_string());
            }
            if m.convergence.window_extensions > 0 {
                flags.push(format!(
                    "window_extended_{}",
                    m.convergence.window_extensions
                ));
            }
        }
        Err(Error::CutoffTooSmall { .. }) => flags.push("cutoff_guard".to_string()),
        Err(Error::WindowNotConverged { .. }) => flags.push("window_not_converged".to_string()),
        Err(_) => flags.push("failed".to_string()),
    }
    flags
}

/// Merits at every plan point. Failures are recorded per row.
pub fn run_sweep(plan: &SweepPlan, numerics: &Numerics) -> Result<Vec<SweepRow>> {
    numerics.validate()?;
    let points = plan.points()?;
    let results = par::map_each(points.len(), |i| {
        run_pulse(&points[i].1, numerics, false).map(|o| o.merits)
    });
    Ok(points
        .into_iter()
        .zip(results)
        .enumerate()
        .map(|(index, ((coords, spec), result))| {
            let flags = point_flags(&result);
            if let Err(e) = &result {
                warn!("sweep point {index} failed: {e}");
            }
            let (merits, error) = match result {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRow {
                index,
                coords,
                spec,
                merits,
                error,
                flags,
            }
        })
        .collect())
}

/// Pulse-width sweep of the two-photon source at `Ω = κ`, `Γ = Γφ = κ/2`.
pub fn fig2_plan(g_values: &[f64], eta_values: &[f64]) -> SweepPlan {
    SweepPlan {
        base: ModelSpec::two_photon(10.0, 0.5, 0.5, PulseSpec::gaussian(1.0, 12.5)),
        axes: vec![
            Axis {
                parameter: "g".into(),
                values: g_values.to_vec(),
            },
            Axis {
                parameter: "eta".into(),
                values: eta_values.to_vec(),
            },
        ],
        pipeline: Pipeline::Fig2,
    }
}

/// Default pulse widths: 15 log-spaced values on `[1, 50]`.
pub fn default_eta_grid() -> Vec<f64> {
    let (lo, hi, n) = (1.0_f64.ln(), 50.0_f64.ln(), 15);
    (0..n)
        .map(|k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

pub const DEFAULT_G_GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];

/// Trend notes for a sweep: per coupling, merits that drop as `η` grows.
pub fn eta_trend_warnings(rows: &[SweepRow]) -> Vec<String> {
    let mut notes = Vec::new();
    let mut by_g: Vec<((ModelKind, u8, f64), Vec<&SweepRow>)> = Vec::new();
    for r in rows {
        let key = (r.spec.kind, r.spec.drive_target.lambda(), r.spec.g);
        match by_g.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => by_g.push((key, vec![r])),
        }
    }
    for ((_, _, g), rs) in by_g {
        let pts: Vec<(f64, &MeritReport)> = rs
            .iter()
            .filter_map(|r| match (r.spec.pulse, &r.merits) {
                (PulseSpec::Gaussian { eta, .. }, Some(m)) => Some((eta, m)),
                _ => None,
            })
            .collect();
        for w in pts.windows(2) {
            let ((e0, m0), (e1, m1)) = (w[0], w[1]);
            if e1 <= e0 {
                continue;
            }
            if m1.efficiency < m0.efficiency {
                notes.push(format!(
                    "g={g}: efficiency drops between eta={e0} and eta={e1}"
                ));
            }
            if m1.indistinguishability < m0.indistinguishability {
                notes.push(format!(
                    "g={g}: indistinguishability drops between eta={e0} and eta={e1}"
                ));
            }
        }
    }
    notes
}

pub fn run_fig2(
    g_values: &[f64],
    eta_values: &[f64],
    numerics: &Numerics,
) -> Result<Vec<SweepRow>> {
    if eta_values.iter().any(|&e| e < 1.0) {
        return Err(Error::InvalidArgument(
            "pulse widths below 1/kappa are not supported".into(),
        ));
    }
    let rows = run_sweep(&fig2_plan(g_values, eta_values), numerics)?;
    for note in eta_trend_warnings(&rows) {
        warn!("{note}");
    }
    Ok(rows)
}

/// Standard JC baseline at `Δ = g` for each drive target.
pub fn fig5_plan(g_values: &[f64], eta_values: &[f64], lambdas: &[u8]) -> SweepPlan {
    SweepPlan {
        base: ModelSpec::standard(
            10.0,
            0.5,
            0.5,
            PulseSpec::gaussian(1.0, 12.5),
            DriveTarget::Cavity,
        ),
        axes: vec![
            Axis {
                parameter: "lambda".into(),
                values: lambdas.iter().map(|&l| l as f64).collect(),
            },
            Axis {
                parameter: "g".into(),
                values: g_values.to_vec(),
            },
            Axis {
                parameter: "eta".into(),
                values: eta_values.to_vec(),
            },
        ],
        pipeline: Pipeline::Fig5,
    }
}

/// Two-photon point against the JC rows at the same `(g, η)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub g: f64,
    pub eta: f64,
    pub lambda: u8,
    pub two_photon: MeritReport,
    pub standard: MeritReport,
    pub dominates: bool,
}

pub fn run_fig5(
    g_values: &[f64],
    eta_values: &[f64],
    lambdas: &[u8],
    numerics: &Numerics,
) -> Result<(Vec<SweepRow>, Vec<BaselineComparison>)> {
    if eta_values.iter().any(|&e| e < 1.0) {
        return Err(Error::InvalidArgument(
            "pulse widths below 1/kappa are not supported".into(),
        ));
    }
    let jc = run_sweep(&fig5_plan(g_values, eta_values, lambdas), numerics)?;
    let tp = run_sweep(&fig2_plan(g_values, eta_values), numerics)?;
    let mut cmp = Vec::new();
    for r in &jc {
        let (Some(m), PulseSpec::Gaussian { eta, .. }) = (&r.merits, r.spec.pulse) else {
            continue;
        };
        let twin = tp.iter().find(|t| {
            t.spec.g == r.spec.g
                && matches!(t.spec.pulse, PulseSpec::Gaussian { eta: e, .. } if e == eta)
        });
        if let Some(Some(tm)) = twin.map(|t| &t.merits) {
            cmp.push(BaselineComparison {
                g: r.spec.g,
                eta,
                lambda: r.spec.drive_target.lambda(),
                two_photon: tm.clone(),
                standard: m.clone(),
                dominates: tm.efficiency > m.efficiency
                    && tm.purity > m.purity
                    && tm.indistinguishability > m.indistinguishability,
            });
        }
    }
    Ok((jc, cmp))
}

// ---------------------------------------------------------------- single pulse and comb

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockRow {
    pub t: f64,
    pub p_fock1: f64,
    pub p_fock2: f64,
    pub drive: f64,
}

/// Fock-state probabilities and drive along the emission trajectory, one
/// row per correlation start time.
pub fn fock_dynamics(run: &EmissionRun) -> Vec<FockRow> {
    let traj = &run.trajectory;
    let p1 = traj.real_series(OBS_P1).expect("recorded");
    let p2 = traj.real_series(OBS_P2).expect("recorded");
    (0..traj.t_grid.len())
        .step_by(run.lattice.layout.row_stride.max(1))
        .map(|k| FockRow {
            t: traj.t_grid[k],
            p_fock1: p1[k],
            p_fock2: p2[k],
            drive: eval_pulse(&run.spec.pulse, traj.t_grid[k]),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Fig3Output {
    pub dynamics: Vec<FockRow>,
    pub merits: MeritReport,
    pub comb: Option<CombResult>,
}

/// Reference-point pulse: Fock dynamics, merits and (optionally) the
/// pulse-train HBT comb with period `100/κ`.
pub fn run_fig3(
    spec: &ModelSpec,
    numerics: &Numerics,
    comb: Option<CombSpec>,
) -> Result<Fig3Output> {
    let outcome = run_pulse(spec, numerics, true)?;
    let comb = match comb {
        None => None,
        Some(c) => Some(run_comb(
            spec,
            numerics,
            c,
            Some(outcome.run.kernel.signature().fock_cutoff()),
        )?),
    };
    Ok(Fig3Output {
        dynamics: fock_dynamics(&outcome.run),
        merits: outcome.merits,
        comb,
    })
}

pub const COMB_WARN_PULSES: usize = 50;

pub fn run_comb(
    spec: &ModelSpec,
    numerics: &Numerics,
    comb: CombSpec,
    start_cutoff: Option<usize>,
) -> Result<CombResult> {
    spec.validate()?;
    numerics.validate()?;
    if comb.pulses > COMB_WARN_PULSES {
        warn!(
            "a comb of {} pulses integrates long delays; expect a long run",
            comb.pulses
        );
    }
    let cfg = numerics.integrator(&spec.pulse);
    let run = |sig: SpaceSignature| {
        g2_comb(
            &kernel_for(spec, sig)?,
            &QuantumState::ground(sig),
            comb,
            &cfg,
        )
    };
    match (numerics.fock_cutoff, start_cutoff) {
        // the single-pulse cutoff is a floor; the guard may still ask for more
        (None, Some(n)) => grow_cutoff(n, run).map(|(r, _)| r),
        _ => with_auto_cutoff(numerics, run).map(|(r, _)| r),
    }
}

// ---------------------------------------------------------------- iso-efficiency

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoEfficiencyPoint {
    pub omega: f64,
    pub eta_star: f64,
    pub achieved_efficiency: f64,
    pub purity: f64,
    pub indistinguishability: f64,
    pub g2_zero_pulsed: f64,
    pub iterations: usize,
    pub convergence: Convergence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoSettings {
    pub target: f64,
    pub tolerance: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub max_iterations: usize,
}

impl Default for IsoSettings {
    fn default() -> Self {
        Self {
            target: 0.99,
            tolerance: 0.002,
            eta_min: 0.1,
            eta_max: 200.0,
            max_iterations: 60,
        }
    }
}

fn with_eta(base: &ModelSpec, omega: f64, eta: f64) -> Result<ModelSpec> {
    let mut s = *base;
    set_parameter(&mut s, "omega", omega)?;
    set_parameter(&mut s, "eta", eta)?;
    Ok(s)
}

/// Pulse width `η*` with `E(Ω, η*) = target ± tolerance`, by bisection in
/// `ln η`. The bracket is found by halving η downward from `eta_max` until E
/// falls below the target, so the long-pulse crossing is the one returned;
/// short strong pulses make E oscillate with pulse area. E must increase
/// across the bracket, which is checked at the bracket ends and midpoint of
/// every step.
pub fn iso_efficiency_eta(
    base: &ModelSpec,
    omega: f64,
    numerics: &Numerics,
    iso: &IsoSettings,
) -> Result<(f64, f64, usize)> {
    let eff = |eta: f64| pulse_efficiency(&with_eta(base, omega, eta)?, numerics);
    let near = |e: f64| (e - iso.target).abs() <= iso.tolerance;
    let mut hi = iso.eta_max;
    let mut e_hi = eff(hi)?;
    if near(e_hi) {
        return Ok((hi, e_hi, 0));
    }
    if e_hi < iso.target {
        return Err(Error::NoBracket { omega });
    }
    let (mut lo, mut e_lo) = loop {
        let lo = (hi / 2.0).max(iso.eta_min);
        let e_lo = eff(lo)?;
        if near(e_lo) {
            return Ok((lo, e_lo, 0));
        }
        if e_lo < iso.target {
            break (lo, e_lo);
        }
        if lo <= iso.eta_min {
            return Err(Error::NoBracket { omega });
        }
        hi = lo;
        e_hi = e_lo;
    };
    for it in 1..=iso.max_iterations {
        let mid = (lo * hi).sqrt();
        let e_mid = eff(mid)?;
        if !(e_lo <= e_mid && e_mid <= e_hi) {
            return Err(Error::InvalidArgument(format!(
                "efficiency is not monotone in eta on [{lo}, {hi}] at omega = {omega}"
            )));
        }
        if (e_mid - iso.target).abs() <= iso.tolerance {
            return Ok((mid, e_mid, it));
        }
        if e_mid < iso.target {
            lo = mid;
            e_lo = e_mid;
        } else {
            hi = mid;
            e_hi = e_mid;
        }
    }
    Err(Error::NoBracket { omega })
}

/// Iso-efficiency curve of the two-photon source with `base` supplying `g`
/// and the rates; one result per `Ω`.
pub fn run_fig4(
    omega_values: &[f64],
    base: &ModelSpec,
    numerics: &Numerics,
    iso: &IsoSettings,
) -> Vec<Result<IsoEfficiencyPoint>> {
    par::map_each(omega_values.len(), |i| {
        let omega = omega_values[i];
        if omega < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "omega must be >= 1, got {omega}"
            )));
        }
        let (eta_star, achieved, iterations) = iso_efficiency_eta(base, omega, numerics, iso)?;
        info!("omega={omega}: eta*={eta_star} E={achieved}");
        let outcome = run_pulse(&with_eta(base, omega, eta_star)?, numerics, false)?;
        Ok(IsoEfficiencyPoint {
            omega,
            eta_star,
            achieved_efficiency: outcome.merits.efficiency,
            purity: outcome.merits.purity,
            indistinguishability: outcome.merits.indistinguishability,
            g2_zero_pulsed: outcome.merits.g2_zero_pulsed,
            iterations,
            convergence: outcome.merits.convergence,
        })
    })
}
