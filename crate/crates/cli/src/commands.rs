use serde_json::json;

use photonsrc::experiments::{
    default_eta_grid, eta_trend_warnings, fig1c_base, fig2_plan, fock_dynamics, run_comb,
    run_fig4, run_fig5, run_pulse, run_spectrum, run_sweep, steady_scan, Axis, Pipeline,
    SweepPlan, SweepRow, DEFAULT_G_GRID,
};
use photonsrc::hilbert::SpaceSignature;
use photonsrc::io::config::{axis_key, RunConfig};
use photonsrc::io::table::{Cell, Table};
use photonsrc::selftest::{run_selftest, DEFAULT_SEED};
use photonsrc::{Error, Result};

use crate::Command;

const SPECTRUM_WARN: f64 = 1e-8;

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub convergence: serde_json::Value,
    pub warnings: Vec<String>,
    /// Set when the command ran to completion but its result is a failure.
    pub failure: Option<String>,
    pub summary: Vec<String>,
}

pub fn default_config(command: Command) -> RunConfig {
    let mut cfg = RunConfig::default();
    let g_axis = Axis {
        parameter: "g".into(),
        values: DEFAULT_G_GRID.to_vec(),
    };
    match command {
        Command::Spectrum => cfg.pipeline.axes = vec![g_axis],
        Command::Steady => {
            cfg.model = fig1c_base();
            cfg.pipeline.kind = Pipeline::Fig1c;
            cfg.pipeline.axes = vec![g_axis];
        }
        Command::Sweep => {
            let plan = fig2_plan(&DEFAULT_G_GRID, &default_eta_grid());
            cfg.model = plan.base;
            cfg.pipeline.kind = Pipeline::Fig2;
            cfg.pipeline.axes = plan.axes;
        }
        Command::Iso => cfg.pipeline.kind = Pipeline::Fig4,
        Command::Pulse | Command::Comb => cfg.pipeline.kind = Pipeline::Fig3,
        Command::Selftest => {}
    }
    cfg
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Spectrum => spectrum(cfg),
        Command::Steady => steady(cfg),
        Command::Pulse => pulse(cfg),
        Command::Sweep => sweep(cfg),
        Command::Iso => iso(cfg),
        Command::Comb => comb(cfg),
        Command::Selftest => selftest(),
    }
}

fn g_values(cfg: &RunConfig) -> Vec<f64> {
    cfg.pipeline
        .axis("g")
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![cfg.model.g])
}

fn column(internal: &str) -> String {
    axis_key(internal).unwrap_or(internal).to_string()
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let n_max = cfg.pipeline.n_max;
    let cutoff = cfg.numerics.fock_cutoff.unwrap_or(n_max + 3);
    let sig = SpaceSignature::new(cutoff)?;
    let mut out = Outcome::default();
    if n_max + 3 > cutoff {
        out.warnings.push(format!(
            "manifolds above {} are affected by the Fock cutoff {cutoff}",
            cutoff.saturating_sub(3)
        ));
    }
    let rows = run_spectrum(&cfg.model, &g_values(cfg), n_max, sig)?;
    let mut table = Table::new([
        "g_per_kappa",
        "state",
        "manifold",
        "analytic_per_kappa",
        "numeric_per_kappa",
        "abs_error_per_kappa",
    ]);
    let mut worst: f64 = 0.0;
    for r in &rows {
        let err = (r.analytic - r.numeric).abs();
        worst = worst.max(err);
        table.push(vec![
            r.g.into(),
            r.label.as_str().into(),
            r.manifold.into(),
            r.analytic.into(),
            r.numeric.into(),
            err.into(),
        ]);
    }
    if worst > SPECTRUM_WARN {
        out.warnings
            .push(format!("analytic and numerical levels differ by up to {worst:e}"));
    }
    out.summary.push(format!(
        "{} levels, max |analytic - numeric| = {worst:e}",
        rows.len()
    ));
    out.convergence = json!({ "fock_cutoff": cutoff, "n_max": n_max, "max_abs_error": worst });
    out.tables.push(("spectrum".into(), table));
    Ok(out)
}

fn steady(cfg: &RunConfig) -> Result<Outcome> {
    let rows = steady_scan(&cfg.model, &g_values(cfg), &cfg.numerics)?;
    let mut table = Table::new([
        "g_per_kappa",
        "mean_photon_number",
        "g2_zero",
        "dominant_excited",
        "fock_cutoff",
    ]);
    let mut occ = Table::new(["g_per_kappa", "state", "occupation"]);
    let mut out = Outcome::default();
    for r in &rows {
        table.push(vec![
            r.g.into(),
            r.mean_photon_number.into(),
            r.g2_zero.into(),
            r.dominant_excited().unwrap_or("").into(),
            r.fock_cutoff.into(),
        ]);
        for (label, p) in &r.occupations {
            occ.push(vec![r.g.into(), label.as_str().into(), (*p).into()]);
        }
        out.summary.push(format!(
            "g={}: <n>={:.6e} g2(0)={:.6}",
            r.g, r.mean_photon_number, r.g2_zero
        ));
    }
    out.convergence = json!({
        "fock_cutoff": rows.iter().map(|r| r.fock_cutoff).collect::<Vec<_>>(),
    });
    out.tables.push(("steady".into(), table));
    out.tables.push(("occupations".into(), occ));
    Ok(out)
}

fn pulse(cfg: &RunConfig) -> Result<Outcome> {
    let outcome = run_pulse(&cfg.model, &cfg.numerics, true)?;
    let m = &outcome.merits;
    let mut dynamics = Table::new([
        "t_per_inv_kappa",
        "p_fock1",
        "p_fock2",
        "drive_amplitude_per_kappa",
    ]);
    for r in fock_dynamics(&outcome.run) {
        dynamics.push(vec![r.t.into(), r.p_fock1.into(), r.p_fock2.into(), r.drive.into()]);
    }
    let mut merits = Table::new([
        "efficiency",
        "purity",
        "indistinguishability",
        "g2_zero_pulsed",
        "hbt_area_ratio",
        "fock_cutoff",
        "window_end_per_inv_kappa",
    ]);
    merits.push(vec![
        m.efficiency.into(),
        m.purity.into(),
        m.indistinguishability.into(),
        m.g2_zero_pulsed.into(),
        m.hbt_area_ratio.into(),
        m.convergence.fock_cutoff.into(),
        m.convergence.window_end.into(),
    ]);
    let mut out = Outcome::default();
    if m.convergence.indistinguishability_clamped {
        out.warnings
            .push("indistinguishability was clamped to [0, 1]".into());
    }
    out.summary.push(format!(
        "E={:.6} P={:.6} I={:.6} g2(0)={:.6e}",
        m.efficiency, m.purity, m.indistinguishability, m.g2_zero_pulsed
    ));
    out.convergence = json!(m.convergence);
    out.tables.push(("dynamics".into(), dynamics));
    out.tables.push(("merits".into(), merits));
    Ok(out)
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let coords: Vec<String> = rows
        .first()
        .map(|r| r.coords.iter().map(|(k, _)| column(k)).collect())
        .unwrap_or_default();
    let mut cols: Vec<&str> = coords.iter().map(String::as_str).collect();
    cols.extend([
        "efficiency",
        "purity",
        "indistinguishability",
        "g2_zero_pulsed",
        "fock_cutoff",
        "flags",
        "error",
    ]);
    let mut table = Table::new(cols);
    for r in rows {
        let mut row: Vec<Cell> = r.coords.iter().map(|(_, v)| (*v).into()).collect();
        match &r.merits {
            Some(m) => row.extend([
                m.efficiency.into(),
                m.purity.into(),
                m.indistinguishability.into(),
                m.g2_zero_pulsed.into(),
                m.convergence.fock_cutoff.into(),
            ]),
            None => row.extend(std::iter::repeat_n(Cell::Empty, 5)),
        }
        row.push(r.flags.join(";").into());
        row.push(r.error.clone().unwrap_or_default().into());
        table.push(row);
    }
    table
}

fn sweep_convergence(rows: &[SweepRow]) -> serde_json::Value {
    json!(rows
        .iter()
        .map(|r| json!({
            "index": r.index,
            "convergence": r.merits.as_ref().map(|m| &m.convergence),
        }))
        .collect::<Vec<_>>())
}

fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let rows = if cfg.pipeline.kind == Pipeline::Fig5 {
        let g = g_values(cfg);
        let eta = cfg
            .pipeline
            .axis("eta")
            .map(<[f64]>::to_vec)
            .unwrap_or_else(default_eta_grid);
        let lambdas: Vec<u8> = match cfg.pipeline.axis("lambda") {
            Some(v) => v
                .iter()
                .map(|&l| match l {
                    0.0 => Ok(0),
                    1.0 => Ok(1),
                    _ => Err(Error::InvalidArgument(format!("lambda must be 0 or 1, got {l}"))),
                })
                .collect::<Result<_>>()?,
            None => vec![0, 1],
        };
        let (rows, cmp) = run_fig5(&g, &eta, &lambdas, &cfg.numerics)?;
        let mut table = Table::new([
            "lambda",
            "g_per_kappa",
            "eta_per_inv_kappa",
            "two_photon_efficiency",
            "two_photon_purity",
            "two_photon_indistinguishability",
            "standard_efficiency",
            "standard_purity",
            "standard_indistinguishability",
            "dominates",
        ]);
        for c in &cmp {
            table.push(vec![
                (c.lambda as usize).into(),
                c.g.into(),
                c.eta.into(),
                c.two_photon.efficiency.into(),
                c.two_photon.purity.into(),
                c.two_photon.indistinguishability.into(),
                c.standard.efficiency.into(),
                c.standard.purity.into(),
                c.standard.indistinguishability.into(),
                (c.dominates as usize).into(),
            ]);
        }
        let wins = cmp.iter().filter(|c| c.dominates).count();
        out.summary.push(format!(
            "two-photon source dominates at {wins} of {} matched points",
            cmp.len()
        ));
        out.tables.push(("comparison".into(), table));
        rows
    } else {
        let plan = SweepPlan {
            base: cfg.model,
            axes: cfg.pipeline.axes.clone(),
            pipeline: cfg.pipeline.kind,
        };
        run_sweep(&plan, &cfg.numerics)?
    };
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    for r in rows.iter().filter(|r| r.error.is_some()) {
        out.warnings.push(format!(
            "point {} failed: {}",
            r.index,
            r.error.as_deref().unwrap_or_default()
        ));
    }
    out.warnings.extend(eta_trend_warnings(&rows));
    out.summary
        .insert(0, format!("{} points, {failed} failed", rows.len()));
    out.convergence = sweep_convergence(&rows);
    out.tables.insert(0, ("sweep".into(), sweep_table(&rows)));
    Ok(out)
}

fn iso(cfg: &RunConfig) -> Result<Outcome> {
    let omegas = &cfg.pipeline.omega_values;
    let results = run_fig4(omegas, &cfg.model, &cfg.numerics, &cfg.pipeline.iso);
    let mut table = Table::new([
        "omega_per_kappa",
        "eta_star_per_inv_kappa",
        "efficiency",
        "purity",
        "indistinguishability",
        "g2_zero_pulsed",
        "iterations",
        "fock_cutoff",
        "error",
    ]);
    let mut out = Outcome::default();
    let mut conv = Vec::new();
    let mut prev: Option<(f64, f64, f64)> = None;
    for (&omega, r) in omegas.iter().zip(&results) {
        match r {
            Ok(p) => {
                table.push(vec![
                    p.omega.into(),
                    p.eta_star.into(),
                    p.achieved_efficiency.into(),
                    p.purity.into(),
                    p.indistinguishability.into(),
                    p.g2_zero_pulsed.into(),
                    p.iterations.into(),
                    p.convergence.fock_cutoff.into(),
                    "".into(),
                ]);
                if let Some((o, pp, pi)) = prev {
                    if p.purity > pp || p.indistinguishability > pi {
                        out.warnings.push(format!(
                            "purity or indistinguishability rises between omega={o} and omega={}",
                            p.omega
                        ));
                    }
                }
                prev = Some((p.omega, p.purity, p.indistinguishability));
                out.summary.push(format!(
                    "omega={}: eta*={:.4} E={:.4} P={:.4} I={:.4}",
                    p.omega, p.eta_star, p.achieved_efficiency, p.purity, p.indistinguishability
                ));
                conv.push(json!({ "omega": p.omega, "convergence": p.convergence }));
            }
            Err(e) => {
                let mut row = vec![omega.into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 7));
                row.push(e.to_string().into());
                table.push(row);
                out.warnings.push(format!("omega={omega}: {e}"));
                conv.push(json!({ "omega": omega, "error": e.to_string() }));
            }
        }
    }
    if results.iter().all(|r| r.is_err()) {
        out.failure = Some("no iso-efficiency point converged".into());
    }
    out.convergence = json!(conv);
    out.tables.push(("iso".into(), table));
    Ok(out)
}

fn comb(cfg: &RunConfig) -> Result<Outcome> {
    let c = run_comb(&cfg.model, &cfg.numerics, cfg.pipeline.comb, None)?;
    let mut trace = Table::new(["tau_per_inv_kappa", "g2_raw", "reference"]);
    for ((t, g), r) in c.tau.iter().zip(&c.g2_raw).zip(&c.reference) {
        trace.push(vec![(*t).into(), (*g).into(), (*r).into()]);
    }
    let mut peaks = Table::new([
        "order",
        "tau_center_per_inv_kappa",
        "area",
        "reference_area",
        "normalized_area",
    ]);
    for p in &c.peaks {
        peaks.push(vec![
            p.order.into(),
            p.tau_center.into(),
            p.area.into(),
            p.reference_area.into(),
            (p.area / p.reference_area).into(),
        ]);
    }
    let mut out = Outcome::default();
    out.summary.push(format!(
        "g2(0)={:.6e} central/side={}",
        c.g2_zero,
        c.central_to_side
            .map(|v| format!("{v:.6e}"))
            .unwrap_or_else(|| "n/a".into())
    ));
    out.convergence = json!({
        "fock_cutoff": c.fock_cutoff,
        "start_window": [c.start_window.0, c.start_window.1],
        "pulses": cfg.pipeline.comb.pulses,
    });
    out.tables.push(("comb".into(), trace));
    out.tables.push(("peaks".into(), peaks));
    Ok(out)
}

fn selftest() -> Result<Outcome> {
    let report = run_selftest(DEFAULT_SEED)?;
    let mut table = Table::new(["check", "passed", "value", "tolerance", "detail"]);
    let mut out = Outcome::default();
    for c in &report.checks {
        table.push(vec![
            c.name.as_str().into(),
            (c.passed as usize).into(),
            c.value.into(),
            c.tolerance.into(),
            c.detail.as_str().into(),
        ]);
        out.summary.push(format!(
            "{} {}: {:e} (tol {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        ));
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        out.failure = Some(format!("{failed} selftest check(s) failed"));
    }
    out.convergence = json!({ "seed": DEFAULT_SEED, "seconds": report.seconds });
    out.tables.push(("selftest".into(), table));
    Ok(out)
}
