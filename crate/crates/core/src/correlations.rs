//! Two-time correlators from the quantum regression theorem and the source
//! figures of merit built on them.
//!
//! Grids live on the uniform time lattice of the emission trajectory: the
//! correlation rows are every `row_stride`-th lattice point, and every delay
//! is a whole number of lattice steps, so `⟨a†a⟩(t + τ)` is always read off
//! the recorded trajectory without interpolation.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    evolve_probes, propagate_with_kernel, IntegrationStats, IntegratorConfig, LindbladKernel,
    Observable, PropagateOptions, Trajectory,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    build_operator_set, AtomLevel, CMatrix, Operator, QuantumState, SpaceSignature, C64,
};
use crate::models::{Drive, PulseSpec};
use crate::par;

/// `⟨a†a⟩`
pub const OBS_N: &str = "n";
/// `⟨a†a†aa⟩`
pub const OBS_N2: &str = "n2";
pub const OBS_P1: &str = "p_fock1";
pub const OBS_P2: &str = "p_fock2";

/// Largest `⟨a†a⟩` tolerated at the end of an emission window.
pub const TAIL_THRESHOLD: f64 = 1e-8;
/// Indistinguishability values are clamped into `[0, 1 + CLAMP_SLACK]`.
pub const CLAMP_SLACK: f64 = 1e-6;

/// Cavity observables recorded along every emission trajectory.
pub fn emission_observables(sig: SpaceSignature) -> Vec<Observable> {
    let ops = build_operator_set(sig);
    let n2 = &ops.a_dag * &(&ops.a_dag * &(&ops.a * &ops.a));
    let fock = |n: usize| {
        let mut m = CMatrix::zeros(sig.dim(), sig.dim());
        for atom in [AtomLevel::Ground, AtomLevel::Excited] {
            let i = sig.index(atom, n);
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        Operator::from_matrix(sig, m).expect("square by construction")
    };
    vec![
        Observable::new(OBS_N, ops.n_op.clone()),
        Observable::new(OBS_N2, n2),
        Observable::new(OBS_P1, fock(1)),
        Observable::new(OBS_P2, fock(2)),
    ]
}

/// Spacing of a uniform grid, or an error if the grid is not uniform.
pub fn uniform_spacing(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::InvalidArgument(
            "grid needs at least two points".into(),
        ));
    }
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let tol = 1e-9 * h.max(t[t.len() - 1].abs());
    if !(h > 0.0)
        || t.iter()
            .enumerate()
            .any(|(k, &x)| (x - (t[0] + k as f64 * h)).abs() > tol)
    {
        return Err(Error::InvalidArgument(
            "trajectory grid is not uniform".into(),
        ));
    }
    Ok(h)
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(h: f64, y: &[f64]) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1])),
    }
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let left = if j > 0 { x[j] - x[j - 1] } else { 0.0 };
            let right = if j + 1 < n { x[j + 1] - x[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Placement of a two-time grid on the trajectory lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoTimeLayout {
    /// Lattice steps between consecutive correlation rows.
    pub row_stride: usize,
    /// Delays `0, 1, …, fine_offsets` lattice steps are sampled individually;
    /// beyond that the delay advances by `row_stride`.
    pub fine_offsets: usize,
    /// Relative mass of the bound `⟨a†a⟩(t)⟨a†a⟩(t+τ)` that first-order rows
    /// may leave uncomputed at their far end; zero computes every entry.
    /// By Cauchy–Schwarz the skipped `|C¹|²` mass is no larger.
    #[serde(default)]
    pub truncation: f64,
}

impl TwoTimeLayout {
    /// Lattice offsets of the delay grid, up to `max_offset` inclusive.
    pub fn offsets(&self, max_offset: usize) -> Vec<usize> {
        let stride = self.row_stride.max(1);
        let mut out: Vec<usize> = (0..=self.fine_offsets.min(max_offset)).collect();
        let mut next = (self.fine_offsets / stride + 1) * stride;
        while next <= max_offset {
            out.push(next);
            next += stride;
        }
        out
    }
}

/// `C[i][j]` at `(t_grid[i], tau_grid[j])`. Entries with `t + τ` past the end
/// of the trajectory are outside the window and stored as zero.
#[derive(Clone, Debug)]
pub struct CorrelationGrid {
    pub t_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub values: CMatrix,
    /// Lattice index of each row time.
    pub row_index: Vec<usize>,
    /// Lattice offset of each delay.
    pub tau_offset: Vec<usize>,
    pub stats: IntegrationStats,
    /// Fraction of the reference mass left uncomputed (see
    /// [`TwoTimeLayout::truncation`]).
    pub skipped_fraction: f64,
}

impl CorrelationGrid {
    pub fn rows(&self) -> usize {
        self.t_grid.len()
    }

    /// Whether `(i, j)` lies inside the trajectory window.
    pub fn in_window(&self, i: usize, j: usize, lattice_len: usize) -> bool {
        self.row_index[i] + self.tau_offset[j] < lattice_len
    }

    fn weights(&self) -> (Vec<f64>, Vec<f64>) {
        (
            trapezoid_weights(&self.t_grid),
            trapezoid_weights(&self.tau_grid),
        )
    }
}

/// Per-row count of delays to compute so that the skipped part of the
/// reference mass `Σ w n(t) n(t+τ)` stays below `tol` of the total, and the
/// fraction actually skipped.
fn row_limits(
    n: &[f64],
    row_index: &[usize],
    tau_offset: &[usize],
    wt: &[f64],
    wtau: &[f64],
    tol: f64,
) -> (Vec<usize>, f64) {
    let k_len = n.len();
    let rows: Vec<Vec<f64>> = row_index
        .iter()
        .zip(wt)
        .map(|(&i, &w)| {
            tau_offset
                .iter()
                .zip(wtau)
                .take_while(|(&o, _)| i + o < k_len)
                .map(|(&o, &v)| w * v * n[i].max(0.0) * n[i + o].max(0.0))
                .collect()
        })
        .collect();
    let full: Vec<usize> = rows.iter().map(Vec::len).collect();
    let total: f64 = rows.iter().flatten().sum();
    if !(tol > 0.0) || !(total > 0.0) {
        return (full, 0.0);
    }
    let budget = tol * total / rows.len() as f64;
    let mut skipped = 0.0;
    let limits = rows
        .iter()
        .map(|row| {
            let mut tail = 0.0;
            let mut keep = row.len();
            while keep > 0 && tail + row[keep - 1] <= budget {
                tail += row[keep - 1];
                keep -= 1;
            }
            skipped += tail;
            keep
        })
        .collect();
    (limits, skipped / total)
}

/// Which correlators a regression pass should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Wanted {
    g1: bool,
    g2: bool,
}

fn regression_maps(
    kernel: &LindbladKernel,
    traj: &Trajectory,
    layout: TwoTimeLayout,
    cfg: &IntegratorConfig,
    wanted: Wanted,
) -> Result<(Option<CorrelationGrid>, Option<CorrelationGrid>)> {
    let states = traj.states()?;
    let h = uniform_spacing(&traj.t_grid)?;
    let k_len = traj.t_grid.len();
    let stride = layout.row_stride.max(1);
    let sig = kernel.signature();
    if states.first().map(|s| s.signature()) != Some(sig) {
        return Err(Error::InvalidArgument(
            "trajectory and kernel spaces differ".into(),
        ));
    }
    let ops = build_operator_set(sig);
    let a = ops.a.matrix();
    let a_dag = ops.a_dag.matrix();
    let n_op = ops.n_op.matrix();

    let row_index: Vec<usize> = (0..k_len).step_by(stride).collect();
    let tau_offset = layout.offsets(k_len - 1);
    let t0 = traj.t_grid[0];
    let t_grid: Vec<f64> = row_index.iter().map(|&i| traj.t_grid[i]).collect();
    let tau_grid: Vec<f64> = tau_offset.iter().map(|&o| o as f64 * h).collect();
    let (limits, skipped) = if wanted.g2 || layout.truncation <= 0.0 {
        let full = row_index
            .iter()
            .map(|&i| tau_offset.iter().take_while(|&&o| i + o < k_len).count())
            .collect();
        (full, 0.0)
    } else {
        let n = photon_series(traj)?;
        let wt = trapezoid_weights(&t_grid);
        let wtau = trapezoid_weights(&tau_grid);
        row_limits(&n, &row_index, &tau_offset, &wt, &wtau, layout.truncation)
    };

    let rows = par::try_map(
        row_index.len(),
        |r| -> Result<(Vec<C64>, Vec<C64>, IntegrationStats)> {
            let i = row_index[r];
            if limits[r] == 0 {
                return Ok((Vec::new(), Vec::new(), IntegrationStats::default()));
            }
            let rho = states[i].matrix();
            let times: Vec<f64> = tau_offset[..limits[r]]
                .iter()
                .map(|&o| t0 + (i + o) as f64 * h)
                .collect();
            let x1 = a * rho;
            let x2 = a * rho * a_dag;
            let mut blocks: Vec<(&CMatrix, &CMatrix)> = Vec::with_capacity(2);
            if wanted.g1 {
                blocks.push((&x1, a_dag));
            }
            if wanted.g2 {
                blocks.push((&x2, n_op));
            }
            // the first output coincides with the start time
            let (mut series, stats) = evolve_probes(kernel, &blocks, times[0], &times, cfg)?;
            let c2 = if wanted.g2 {
                series.pop().unwrap_or_default()
            } else {
                Vec::new()
            };
            let c1 = if wanted.g1 {
                series.pop().unwrap_or_default()
            } else {
                Vec::new()
            };
            Ok((c1, c2, stats))
        },
    )?;

    let mut stats = IntegrationStats::default();
    let mut m1 = CMatrix::zeros(row_index.len(), tau_offset.len());
    let mut m2 = CMatrix::zeros(row_index.len(), tau_offset.len());
    for (r, (c1, c2, st)) in rows.iter().enumerate() {
        stats.merge(st);
        for (j, v) in c1.iter().enumerate() {
            m1[(r, j)] = *v;
        }
        for (j, v) in c2.iter().enumerate() {
            m2[(r, j)] = *v;
        }
    }
    let make = |values: CMatrix| CorrelationGrid {
        t_grid: t_grid.clone(),
        tau_grid: tau_grid.clone(),
        values,
        row_index: row_index.clone(),
        tau_offset: tau_offset.clone(),
        stats,
        skipped_fraction: skipped,
    };
    Ok((wanted.g1.then(|| make(m1)), wanted.g2.then(|| make(m2))))
}

/// `C¹(t, τ) = Tr[a† Λ_{t→t+τ}(a ρ(t))]`.
pub fn g1_map(
    kernel: &LindbladKernel,
    traj: &Trajectory,
    layout: TwoTimeLayout,
    cfg: &IntegratorConfig,
) -> Result<CorrelationGrid> {
    let (g1, _) = regression_maps(
        kernel,
        traj,
        layout,
        cfg,
        Wanted {
            g1: true,
            g2: false,
        },
    )?;
    Ok(g1.expect("requested"))
}

/// `C²(t, τ) = Tr[a†a Λ_{t→t+τ}(a ρ(t) a†)]`.
pub fn g2_map(
    kernel: &LindbladKernel,
    traj: &Trajectory,
    layout: TwoTimeLayout,
    cfg: &IntegratorConfig,
) -> Result<CorrelationGrid> {
    let (_, g2) = regression_maps(
        kernel,
        traj,
        layout,
        cfg,
        Wanted {
            g1: false,
            g2: true,
        },
    )?;
    Ok(g2.expect("requested"))
}

/// Both maps from a single regression pass per row.
pub fn correlation_maps(
    kernel: &LindbladKernel,
    traj: &Trajectory,
    layout: TwoTimeLayout,
    cfg: &IntegratorConfig,
) -> Result<(CorrelationGrid, CorrelationGrid)> {
    let (g1, g2) = regression_maps(kernel, traj, layout, cfg, Wanted { g1: true, g2: true })?;
    Ok((g1.expect("requested"), g2.expect("requested")))
}

fn photon_series(traj: &Trajectory) -> Result<Vec<f64>> {
    traj.real_series(OBS_N)
        .ok_or_else(|| Error::InvalidArgument(format!("trajectory does not record `{OBS_N}`")))
}

/// `E = κ ∫⟨a†a⟩ dt` by the trapezoid rule on the trajectory grid.
pub fn efficiency(traj: &Trajectory, kappa: f64) -> Result<f64> {
    let n = photon_series(traj)?;
    let h = uniform_spacing(&traj.t_grid)?;
    let last = *n.last().expect("grid has two points");
    if last > TAIL_THRESHOLD {
        return Err(Error::WindowNotConverged {
            time: *traj.t_grid.last().expect("nonempty"),
            population: last,
        });
    }
    Ok(kappa * trapezoid(h, &n))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    /// `∫⟨a†a†aa⟩ dt / ∫⟨a†a⟩² dt`
    pub g2_zero_pulsed: f64,
    pub purity: f64,
    /// `2 ∫∫ C² dt dτ / (∫⟨a†a⟩ dt)²`, the zero-delay HBT peak area over the
    /// squared pulse photon number. Only available when a `C²` map is given.
    pub hbt_area_ratio: Option<f64>,
}

/// Pulsed `g²(0)` and purity `1 − g²(0)`.
pub fn pulsed_purity(g2grid: Option<&CorrelationGrid>, traj: &Trajectory) -> Result<PurityReport> {
    let n = photon_series(traj)?;
    let n2 = traj
        .real_series(OBS_N2)
        .ok_or_else(|| Error::InvalidArgument(format!("trajectory does not record `{OBS_N2}`")))?;
    let h = uniform_spacing(&traj.t_grid)?;
    let num = trapezoid(h, &n2);
    let den = trapezoid(h, &n.iter().map(|x| x * x).collect::<Vec<_>>());
    if !(den > 0.0) {
        return Err(Error::NoEmission);
    }
    if num < -1e-8 {
        return Err(Error::Quadrature(format!(
            "negative two-photon integral {num:e}"
        )));
    }
    let g2_zero = num.max(0.0) / den;

    let hbt_area_ratio = match g2grid {
        None => None,
        Some(g) => {
            let (wt, wtau) = g.weights();
            let mut area = 0.0;
            for i in 0..g.rows() {
                for j in 0..g.tau_grid.len() {
                    area += wt[i] * wtau[j] * g.values[(i, j)].re;
                }
            }
            if area < -1e-8 {
                return Err(Error::Quadrature(format!(
                    "negative HBT peak area {area:e}"
                )));
            }
            let total = trapezoid(h, &n);
            if !(total > 0.0) {
                return Err(Error::NoEmission);
            }
            Some(2.0 * area.max(0.0) / (total * total))
        }
    };
    Ok(PurityReport {
        g2_zero_pulsed: g2_zero,
        purity: 1.0 - g2_zero,
        hbt_area_ratio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndistinguishabilityReport {
    pub value: f64,
    /// Ratio before clamping.
    pub raw: f64,
    pub clamped: bool,
}

/// `I = ∫∫|C¹(t,τ)|² / ∫∫⟨a†a⟩(t)⟨a†a⟩(t+τ)`.
pub fn indistinguishability(
    g1grid: &CorrelationGrid,
    traj: &Trajectory,
) -> Result<IndistinguishabilityReport> {
    let n = photon_series(traj)?;
    let k_len = n.len();
    let (wt, wtau) = g1grid.weights();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..g1grid.rows() {
        let ri = g1grid.row_index[i];
        for j in 0..g1grid.tau_grid.len() {
            if !g1grid.in_window(i, j, k_len) {
                break;
            }
            let w = wt[i] * wtau[j];
            num += w * g1grid.values[(i, j)].norm_sqr();
            den += w * n[ri] * n[ri + g1grid.tau_offset[j]];
        }
    }
    if !(den > 0.0) {
        return Err(Error::NoEmission);
    }
    let raw = num / den;
    let value = raw.clamp(0.0, 1.0 + CLAMP_SLACK);
    let clamped = value != raw;
    if clamped {
        warn!("indistinguishability {raw} clamped to {value}");
    }
    Ok(IndistinguishabilityReport {
        value,
        raw,
        clamped,
    })
}

/// Numerical settings behind a merit evaluation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub fock_cutoff: usize,
    /// Peak population of the two highest Fock levels along the trajectory.
    pub guard_peak: f64,
    pub window_end: f64,
    pub window_extensions: usize,
    pub lattice_step: f64,
    pub lattice_points: usize,
    pub t_points: usize,
    pub tau_points: usize,
    pub tail_population: f64,
    pub indistinguishability_clamped: bool,
    pub skipped_reference_fraction: f64,
    pub rhs_evals: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    pub efficiency: f64,
    pub purity: f64,
    pub indistinguishability: f64,
    pub g2_zero_pulsed: f64,
    pub hbt_area_ratio: Option<f64>,
    pub convergence: Convergence,
}

/// All three merits from one trajectory. `with_hbt` adds the `C²` map and
/// with it the HBT area ratio.
pub fn merit_report(
    kernel: &LindbladKernel,
    traj: &Trajectory,
    layout: TwoTimeLayout,
    cfg: &IntegratorConfig,
    kappa: f64,
    with_hbt: bool,
) -> Result<MeritReport> {
    let efficiency = efficiency(traj, kappa)?;
    let (g1, g2) = regression_maps(
        kernel,
        traj,
        layout,
        cfg,
        Wanted {
            g1: true,
            g2: with_hbt,
        },
    )?;
    let g1 = g1.expect("requested");
    let purity = pulsed_purity(g2.as_ref(), traj)?;
    let ind = indistinguishability(&g1, traj)?;
    let n = photon_series(traj)?;
    let mut stats = traj.stats;
    stats.merge(&g1.stats);
    Ok(MeritReport {
        efficiency,
        purity: purity.purity,
        indistinguishability: ind.value,
        g2_zero_pulsed: purity.g2_zero_pulsed,
        hbt_area_ratio: purity.hbt_area_ratio,
        convergence: Convergence {
            fock_cutoff: kernel.signature().fock_cutoff(),
            guard_peak: traj.guard_peak,
            window_end: *traj.t_grid.last().expect("nonempty"),
            window_extensions: 0,
            lattice_step: uniform_spacing(&traj.t_grid)?,
            lattice_points: traj.t_grid.len(),
            t_points: g1.rows(),
            tau_points: g1.tau_grid.len(),
            tail_population: *n.last().expect("nonempty"),
            indistinguishability_clamped: ind.clamped,
            skipped_reference_fraction: g1.skipped_fraction,
            rhs_evals: stats.rhs_evals,
        },
    })
}

/// Pulse-train HBT settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombSpec {
    pub period: f64,
    pub pulses: usize,
    /// Delay resolution; also the lattice step of the train trajectory.
    pub tau_step: f64,
    /// Lattice steps between start times summed into `G²(τ)`.
    pub row_stride: usize,
}

impl CombSpec {
    pub fn new(period: f64, pulses: usize) -> Self {
        Self {
            period,
            pulses,
            tau_step: 0.25,
            row_stride: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombPeak {
    pub order: usize,
    pub tau_center: f64,
    pub area: f64,
    /// Same area for the uncorrelated reference `∫⟨a†a⟩(t)⟨a†a⟩(t+τ)dt`.
    pub reference_area: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombResult {
    pub tau: Vec<f64>,
    /// `G²(τ) = ∫⟨a†(t)a†(t+τ)a(t+τ)a(t)⟩ dt` over one settled period.
    pub g2_raw: Vec<f64>,
    pub reference: Vec<f64>,
    pub peaks: Vec<CombPeak>,
    /// `G²(0) / reference(0)`
    pub g2_zero: f64,
    /// Zero-delay peak area over the first side peak area.
    pub central_to_side: Option<f64>,
    pub start_window: (f64, f64),
    pub fock_cutoff: usize,
}

/// Length a single pulse occupies in a train: `±3η` around its centre plus a
/// `12/κ` decay tail.
pub fn comb_emission_length(pulse: &PulseSpec) -> Option<f64> {
    match *pulse {
        PulseSpec::Gaussian { eta, .. } => Some(6.0 * eta + 12.0),
        PulseSpec::Constant { .. } => None,
    }
}

/// HBT correlation of a train of `spec.pulses` identical pulses. The start
/// time is integrated over one period centred on the second pulse (the
/// first when there are fewer than three), and the train is started from
/// `rho0`.
pub fn g2_comb(
    kernel: &LindbladKernel,
    rho0: &QuantumState,
    spec: CombSpec,
    cfg: &IntegratorConfig,
) -> Result<CombResult> {
    let pulse = match kernel.drive() {
        Drive::Single(p @ PulseSpec::Gaussian { .. }) => *p,
        _ => {
            return Err(Error::InvalidArgument(
                "comb needs a single Gaussian pulse".into(),
            ))
        }
    };
    let (eta, t_center) = match pulse {
        PulseSpec::Gaussian { eta, t_center, .. } => (eta, t_center),
        PulseSpec::Constant { .. } => unreachable!(),
    };
    let length = comb_emission_length(&pulse).expect("gaussian");
    if spec.period < length {
        return Err(Error::InvalidArgument(format!(
            "pulse period {} is shorter than the emission window {length}",
            spec.period
        )));
    }
    if spec.pulses < 2 {
        return Err(Error::InvalidArgument(
            "comb needs at least two pulses".into(),
        ));
    }
    if !(spec.tau_step > 0.0) || spec.row_stride == 0 {
        return Err(Error::InvalidArgument(
            "comb resolution must be positive".into(),
        ));
    }
    let train = kernel.clone().with_drive(Drive::Train {
        pulse,
        period: spec.period,
        count: spec.pulses,
    });
    let dt = spec.tau_step;
    let k0 = if spec.pulses >= 3 { 1 } else { 0 };
    let idx = |t: f64| (t / dt).round() as usize;
    let ws = idx((k0 as f64 * spec.period + t_center - 0.5 * spec.period).max(0.0));
    let we = ws + idx(spec.period);
    let end = idx((spec.pulses - 1) as f64 * spec.period + t_center + 8.0 * eta + 12.0).max(we + 1);
    let lattice = |from: usize, to: usize| (from..=to).map(|k| k as f64 * dt).collect::<Vec<_>>();
    let sig = kernel.signature();
    let obs = emission_observables(sig);
    let n_obs = &obs[..1];

    // lead-in up to the start window, then the window with states, then the rest
    let start_state = if ws == 0 {
        rho0.clone()
    } else {
        let lead = propagate_with_kernel(
            &train,
            rho0,
            &[0.0, ws as f64 * dt],
            &[],
            cfg,
            PropagateOptions::default(),
        )?;
        lead.final_state()?.clone()
    };
    let window = propagate_with_kernel(
        &train,
        &start_state,
        &lattice(ws, we),
        n_obs,
        cfg,
        PropagateOptions::default(),
    )?;
    let rest = propagate_with_kernel(
        &train,
        window.final_state()?,
        &lattice(we, end),
        n_obs,
        cfg,
        PropagateOptions {
            record_states: false,
            cutoff_guard: true,
        },
    )?;
    let mut n = window.real_series(OBS_N).expect("recorded");
    n.extend(
        rest.real_series(OBS_N)
            .expect("recorded")
            .into_iter()
            .skip(1),
    );
    let states = window.states()?;

    let ops = build_operator_set(sig);
    let (a, a_dag, n_op) = (ops.a.matrix(), ops.a_dag.matrix(), ops.n_op.matrix());
    let rows: Vec<usize> = (0..=we - ws).step_by(spec.row_stride).collect();
    let j_max = end - we;
    let c2_rows = par::try_map(rows.len(), |r| {
        let i = rows[r];
        let x = a * states[i].matrix() * a_dag;
        let t_i = (ws + i) as f64 * dt;
        let times: Vec<f64> = (0..=j_max).map(|j| (ws + i + j) as f64 * dt).collect();
        let (mut s, _) = evolve_probes(&train, &[(&x, n_op)], t_i, &times, cfg)?;
        Ok(s.pop().unwrap_or_default())
    })?;

    let row_t: Vec<f64> = rows.iter().map(|&i| i as f64 * dt).collect();
    let wt = trapezoid_weights(&row_t);
    let tau: Vec<f64> = (0..=j_max).map(|j| j as f64 * dt).collect();
    let mut g2_raw = vec![0.0; tau.len()];
    let mut reference = vec![0.0; tau.len()];
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..=j_max {
            g2_raw[j] += wt[r] * c2_rows[r][j].re;
            reference[j] += wt[r] * n[i] * n[i + j];
        }
    }

    let wtau = trapezoid_weights(&tau);
    let half = 0.5 * spec.period;
    let tau_max = *tau.last().expect("nonempty");
    let mut peaks = Vec::new();
    for order in 0.. {
        let center = order as f64 * spec.period;
        if center + half > tau_max + 1e-9 {
            break;
        }
        let lo = (center - half).max(0.0);
        let hi = center + half;
        let (mut area, mut ref_area) = (0.0, 0.0);
        for j in 0..tau.len() {
            if tau[j] >= lo - 1e-9 && tau[j] < hi - 1e-9 {
                // split the boundary sample between neighbouring peaks
                let w = if order > 0 && (tau[j] - lo).abs() < 1e-9 {
                    0.5 * wtau[j]
                } else {
                    wtau[j]
                };
                area += w * g2_raw[j];
                ref_area += w * reference[j];
            }
        }
        if order == 0 {
            // G²(−τ) = G²(τ) for a train of identical pulses
            area *= 2.0;
            ref_area *= 2.0;
        }
        peaks.push(CombPeak {
            order,
            tau_center: center,
            area,
            reference_area: ref_area,
        });
    }
    let g2_zero = if reference[0] > 0.0 {
        g2_raw[0] / reference[0]
    } else {
        0.0
    };
    let central_to_side = match peaks.as_slice() {
        [c, s, ..] if s.area > 0.0 => Some(c.area / s.area),
        _ => None,
    };
    Ok(CombResult {
        tau,
        g2_raw,
        reference,
        peaks,
        g2_zero,
        central_to_side,
        start_window: (ws as f64 * dt, we as f64 * dt),
        fock_cutoff: sig.fock_cutoff(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{uniform_grid, CollapseChannels};
    use crate::models::{build_hamiltonian, eval_pulse, ModelSpec};

    fn run(
        spec: &ModelSpec,
        n: usize,
        t_end: f64,
        points: usize,
    ) -> (LindbladKernel, Trajectory, IntegratorConfig) {
        let sig = SpaceSignature::new(n).unwrap();
        let parts = build_hamiltonian(spec, sig).unwrap();
        let kernel = LindbladKernel::new(&parts, &CollapseChannels::canonical(spec, sig)).unwrap();
        let cfg = IntegratorConfig::for_pulse(&spec.pulse);
        let traj = propagate_with_kernel(
            &kernel,
            &QuantumState::ground(sig),
            &uniform_grid(0.0, t_end, points),
            &emission_observables(sig),
            &cfg,
            PropagateOptions::default(),
        )
        .unwrap();
        (kernel, traj, cfg)
    }

    /// Cavity amplitude `α̇ = −iε(t) − κα` by classic RK4 on a fine step.
    fn alpha_oracle(pulse: &PulseSpec, times: &[f64]) -> Vec<C64> {
        let f = |t: f64, a: C64| C64::new(0.0, -eval_pulse(pulse, t)) - a;
        let mut out = Vec::new();
        let (mut t, mut a) = (0.0_f64, C64::new(0.0, 0.0));
        let h = 1e-3_f64;
        for &target in times {
            while t < target - 1e-12 {
                let s = h.min(target - t);
                let k1 = f(t, a);
                let k2 = f(t + s / 2.0, a + k1 * (s / 2.0));
                let k3 = f(t + s / 2.0, a + k2 * (s / 2.0));
                let k4 = f(t + s, a + k3 * s);
                a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (s / 6.0);
                t += s;
            }
            out.push(a);
        }
        out
    }

    #[test]
    fn empty_cavity_matches_linear_oracle() {
        let spec = ModelSpec::two_photon(0.0, 0.5, 0.5, PulseSpec::gaussian(0.6, 1.0));
        let (kernel, traj, cfg) = run(&spec, 10, 20.0, 201);
        let layout = TwoTimeLayout {
            row_stride: 4,
            fine_offsets: 40,
            truncation: 0.0,
        };
        let (g1, g2) = correlation_maps(&kernel, &traj, layout, &cfg).unwrap();
        let alpha = alpha_oracle(&spec.pulse, &traj.t_grid);
        let scale = alpha.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        for i in 0..g1.rows() {
            for j in 0..g1.tau_grid.len() {
                if !g1.in_window(i, j, traj.t_grid.len()) {
                    continue;
                }
                let (a, b) = (
                    alpha[g1.row_index[i]],
                    alpha[g1.row_index[i] + g1.tau_offset[j]],
                );
                let want1 = b.conj() * a;
                let want2 = a.norm_sqr() * b.norm_sqr();
                assert!(
                    (g1.values[(i, j)] - want1).norm() <= 1e-4 * scale,
                    "C1 at ({i},{j})"
                );
                assert!(
                    (g2.values[(i, j)].re - want2).abs() <= 1e-4 * scale * scale,
                    "C2 at ({i},{j})"
                );
            }
        }
        let purity = pulsed_purity(Some(&g2), &traj).unwrap();
        assert!((purity.g2_zero_pulsed - 1.0).abs() < 1e-6);
        assert!((purity.hbt_area_ratio.unwrap() - 1.0).abs() < 2e-2);
        let ind = indistinguishability(&g1, &traj).unwrap();
        assert!((ind.raw - 1.0).abs() < 1e-3, "{ind:?}");
    }

    #[test]
    fn decaying_fock_state_oracles() {
        let spec = ModelSpec::two_photon(0.0, 0.5, 0.5, PulseSpec::constant(0.0));
        let sig = SpaceSignature::new(4).unwrap();
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let kernel = LindbladKernel::new(&parts, &CollapseChannels::canonical(&spec, sig)).unwrap();
        let cfg = IntegratorConfig::default();
        let rho0 = QuantumState::basis(sig, AtomLevel::Ground, 1).unwrap();
        let opts = PropagateOptions {
            record_states: true,
            cutoff_guard: false,
        };
        let traj = propagate_with_kernel(
            &kernel,
            &rho0,
            &uniform_grid(0.0, 12.0, 241),
            &emission_observables(sig),
            &cfg,
            opts,
        )
        .unwrap();
        let layout = TwoTimeLayout {
            row_stride: 8,
            fine_offsets: 20,
            truncation: 0.0,
        };
        let (g1, g2) = correlation_maps(&kernel, &traj, layout, &cfg).unwrap();
        for i in 0..g1.rows() {
            for j in 0..g1.tau_grid.len() {
                if !g1.in_window(i, j, traj.t_grid.len()) {
                    continue;
                }
                let (t, tau) = (g1.t_grid[i], g1.tau_grid[j]);
                let want = (-2.0 * t).exp() * (-tau).exp();
                assert!((g1.values[(i, j)].re - want).abs() < 1e-5);
                assert!(g2.values[(i, j)].norm() < 1e-12);
            }
        }
        let window = |t_end: f64, points: usize| {
            propagate_with_kernel(
                &kernel,
                &rho0,
                &uniform_grid(0.0, t_end, points),
                &emission_observables(sig),
                &cfg,
                opts,
            )
            .unwrap()
        };
        assert!(matches!(
            efficiency(&window(5.0, 1001), 1.0),
            Err(Error::WindowNotConverged { .. })
        ));
        // E = κ ∫ e^{-2κt} dt = 1/2
        let longer = window(20.0, 4001);
        assert!((efficiency(&longer, 1.0).unwrap() - 0.5).abs() < 1e-5);
        assert_eq!(pulsed_purity(None, &longer).unwrap().purity, 1.0);
    }

    #[test]
    fn vacuum_has_no_emission() {
        let spec = ModelSpec::two_photon(3.0, 0.5, 0.5, PulseSpec::gaussian(0.0, 1.0));
        let (kernel, traj, cfg) = run(&spec, 4, 20.0, 81);
        assert_eq!(efficiency(&traj, 1.0).unwrap(), 0.0);
        let g1 = g1_map(
            &kernel,
            &traj,
            TwoTimeLayout {
                row_stride: 4,
                fine_offsets: 8,
                truncation: 0.0,
            },
            &cfg,
        )
        .unwrap();
        assert!(g1.values.iter().all(|z| z.norm() == 0.0));
        assert!(matches!(
            indistinguishability(&g1, &traj),
            Err(Error::NoEmission)
        ));
    }

    #[test]
    fn blockaded_pulse_respects_cauchy_schwarz() {
        let spec = ModelSpec::two_photon(10.0, 0.5, 0.5, PulseSpec::gaussian(1.0, 2.0));
        let sig = SpaceSignature::new(8).unwrap();
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let kernel = LindbladKernel::new(&parts, &CollapseChannels::canonical(&spec, sig)).unwrap();
        // tolerances two decades below the defaults so that integrator noise
        // stays under the 1e-8 sign checks
        let cfg = IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            ..IntegratorConfig::for_pulse(&spec.pulse)
        };
        let grid = uniform_grid(0.0, 40.0, 401);
        let traj = propagate_with_kernel(
            &kernel,
            &QuantumState::ground(sig),
            &grid,
            &emission_observables(sig),
            &cfg,
            PropagateOptions::default(),
        )
        .unwrap();
        let layout = TwoTimeLayout {
            row_stride: 5,
            fine_offsets: 30,
            truncation: 0.0,
        };
        let (g1, g2) = correlation_maps(&kernel, &traj, layout, &cfg).unwrap();
        let n = traj.real_series(OBS_N).unwrap();
        let n2 = traj.real_series(OBS_N2).unwrap();
        for i in 0..g1.rows() {
            let ri = g1.row_index[i];
            assert!((g1.values[(i, 0)].re - n[ri]).abs() < 1e-8);
            assert!(g1.values[(i, 0)].im.abs() < 1e-8);
            assert!((g2.values[(i, 0)].re - n2[ri]).abs() < 1e-8);
            for j in 0..g1.tau_grid.len() {
                if !g1.in_window(i, j, n.len()) {
                    continue;
                }
                let bound = n[ri] * n[ri + g1.tau_offset[j]];
                assert!(g1.values[(i, j)].norm_sqr() <= bound + 1e-8);
                assert!(
                    g2.values[(i, j)].re >= -1e-8 && g2.values[(i, j)].im.abs() < 1e-8,
                    "{i} {j} {}",
                    g2.values[(i, j)]
                );
            }
        }
        let p = pulsed_purity(Some(&g2), &traj).unwrap();
        assert!(p.purity > 0.9 && p.purity <= 1.0);
        let ind = indistinguishability(&g1, &traj).unwrap();
        assert!(ind.value > 0.0 && ind.value <= 1.0);
    }

    #[test]
    fn layout_offsets() {
        let l = TwoTimeLayout {
            row_stride: 4,
            fine_offsets: 5,
            truncation: 0.0,
        };
        assert_eq!(l.offsets(17), vec![0, 1, 2, 3, 4, 5, 8, 12, 16]);
        assert_eq!(l.offsets(3), vec![0, 1, 2, 3]);
    }

    #[test]
    fn comb_of_coherent_pulses_has_equal_peaks() {
        let spec = ModelSpec::two_photon(0.0, 0.5, 0.5, PulseSpec::gaussian(0.5, 1.0));
        let sig = SpaceSignature::new(8).unwrap();
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let kernel = LindbladKernel::new(&parts, &CollapseChannels::canonical(&spec, sig)).unwrap();
        let cfg = IntegratorConfig::for_pulse(&spec.pulse);
        let comb = g2_comb(
            &kernel,
            &QuantumState::ground(sig),
            CombSpec::new(20.0, 4),
            &cfg,
        )
        .unwrap();
        assert!(comb.peaks.len() >= 2);
        let first = comb.peaks[0].area;
        for p in &comb.peaks {
            assert!((p.area / first - 1.0).abs() < 0.02, "{p:?}");
            assert!((p.area / p.reference_area - 1.0).abs() < 0.02, "{p:?}");
        }
        assert!((comb.g2_zero - 1.0).abs() < 1e-3);
    }

    #[test]
    fn comb_rejects_short_period_and_vanishes_without_drive() {
        let spec = ModelSpec::two_photon(10.0, 0.5, 0.5, PulseSpec::gaussian(0.0, 1.0));
        let sig = SpaceSignature::new(4).unwrap();
        let parts = build_hamiltonian(&spec, sig).unwrap();
        let kernel = LindbladKernel::new(&parts, &CollapseChannels::canonical(&spec, sig)).unwrap();
        let cfg = IntegratorConfig::for_pulse(&spec.pulse);
        let g = QuantumState::ground(sig);
        assert!(matches!(
            g2_comb(&kernel, &g, CombSpec::new(10.0, 3), &cfg),
            Err(Error::InvalidArgument(_))
        ));
        let comb = g2_comb(&kernel, &g, CombSpec::new(20.0, 3), &cfg).unwrap();
        assert!(comb.g2_raw.iter().all(|&v| v == 0.0));
    }
}
