//! Dormand–Prince 5(4) with embedded error estimate and step-size control,
//! specialised to complex state vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::C64;
use crate::models::PulseSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None` leaves the step unbounded.
    pub max_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: Some(0.05),
        }
    }
}

impl IntegratorConfig {
    /// Defaults with the step bound tied to the pulse: `η/20` for Gaussian
    /// pulses, `0.05/κ` otherwise.
    pub fn for_pulse(pulse: &PulseSpec) -> Self {
        let max_step = match pulse {
            PulseSpec::Gaussian { eta, .. } => eta / 20.0,
            PulseSpec::Constant { .. } => 0.05,
        };
        Self {
            max_step: Some(max_step),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "integrator tolerances must be > 0".into(),
            ));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument("max_step must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl IntegrationStats {
    pub fn merge(&mut self, other: &IntegrationStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn axpy(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

fn weighted_rms(err: &[C64], y0: &[C64], y1: &[C64], atol: f64, rtol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `dy/dt = rhs(t, y)` from `t0`, stopping exactly at each time in
/// `outputs` (ascending, all `>= t0`) and calling `on_output(index, t, y)`.
/// `on_step` sees every accepted step.
pub fn integrate<F, S, O>(
    rhs: F,
    y: &mut Vec<C64>,
    t0: f64,
    outputs: &[f64],
    cfg: &IntegratorConfig,
    mut on_step: S,
    mut on_output: O,
) -> Result<IntegrationStats>
where
    F: Fn(f64, &[C64], &mut [C64]),
    S: FnMut(f64, &[C64]) -> Result<()>,
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    cfg.validate()?;
    let n = y.len();
    let mut stats = IntegrationStats::default();
    let mut t = t0;
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY);

    let zero = C64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut err = vec![zero; n];

    rhs(t, y, &mut k1);
    stats.rhs_evals += 1;
    let mut h = f64::NAN;
    let mut last_rejected = false;

    for (idx, &t_out) in outputs.iter().enumerate() {
        if t_out < t {
            return Err(Error::InvalidArgument(format!(
                "output time {t_out} precedes current time {t}"
            )));
        }
        while t < t_out {
            if h.is_nan() {
                h = initial_step(&rhs, t, y, &k1, cfg, &mut tmp, &mut k2).min(max_step);
                stats.rhs_evals += 1;
            }
            let remaining = t_out - t;
            let mut step = h.min(max_step);
            let mut lands = false;
            if step >= remaining * (1.0 - 1e-12) {
                step = remaining;
                lands = true;
            }
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { time: t, step });
            }

            axpy(&mut tmp, y, step, &[(A21, &k1)]);
            rhs(t + C2 * step, &tmp, &mut k2);
            axpy(&mut tmp, y, step, &[(A31, &k1), (A32, &k2)]);
            rhs(t + C3 * step, &tmp, &mut k3);
            axpy(&mut tmp, y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            rhs(t + C4 * step, &tmp, &mut k4);
            axpy(
                &mut tmp,
                y,
                step,
                &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            );
            rhs(t + C5 * step, &tmp, &mut k5);
            axpy(
                &mut tmp,
                y,
                step,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            rhs(t + step, &tmp, &mut k6);
            axpy(
                &mut tmp,
                y,
                step,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let t_new = if lands { t_out } else { t + step };
            rhs(t_new, &tmp, &mut k7);
            stats.rhs_evals += 6;

            for i in 0..n {
                err[i] =
                    (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                        * step;
            }
            let e = weighted_rms(&err, y, &tmp, cfg.abs_tol, cfg.rel_tol);
            if !e.is_finite() {
                return Err(Error::StepSizeUnderflow { time: t, step });
            }

            if e <= 1.0 {
                stats.accepted += 1;
                std::mem::swap(y, &mut tmp);
                std::mem::swap(&mut k1, &mut k7);
                t = t_new;
                on_step(t, y)?;
                let mut fac = if e == 0.0 {
                    FAC_MAX
                } else {
                    SAFETY * e.powf(-0.2)
                };
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                // a step shortened to land on an output says nothing about h
                if !lands || step >= h {
                    h = step * fac;
                }
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h = step * (SAFETY * e.powf(-0.2)).max(FAC_MIN);
            }
        }
        on_output(idx, t, y)?;
    }
    Ok(stats)
}

fn initial_step<F>(
    rhs: &F,
    t: f64,
    y: &[C64],
    f0: &[C64],
    cfg: &IntegratorConfig,
    y1: &mut [C64],
    f1: &mut [C64],
) -> f64
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    let scale = |v: &[C64], i: usize| v[i].norm() / (cfg.abs_tol + cfg.rel_tol * y[i].norm());
    let n = y.len().max(1) as f64;
    let d0 = ((0..y.len()).map(|i| scale(y, i).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = ((0..y.len()).map(|i| scale(f0, i).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    for i in 0..y.len() {
        y1[i] = y[i] + f0[i] * h0;
    }
    rhs(t + h0, y1, f1);
    let d2 = ((0..y.len())
        .map(|i| ((f1[i] - f0[i]).norm() / (cfg.abs_tol + cfg.rel_tol * y[i].norm())).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn complex_oscillator() {
        // y' = i w y  ->  y = exp(i w t)
        let w = 3.0;
        let mut y = vec![C64::new(1.0, 0.0)];
        let outputs: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let mut got = Vec::new();
        let cfg = IntegratorConfig {
            max_step: None,
            ..Default::default()
        };
        integrate(
            |_, y, dy| dy[0] = C64::new(0.0, w) * y[0],
            &mut y,
            0.0,
            &outputs,
            &cfg,
            |_, _| Ok(()),
            |_, t, y| {
                got.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(got.len(), outputs.len());
        for (t, v) in got {
            let exact = C64::new(0.0, w * t).exp();
            assert!((v - exact).norm() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn time_dependent_scalar() {
        // y' = -2 t y, y(0)=1 -> exp(-t^2)
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut last = 0.0;
        integrate(
            |t, y, dy| dy[0] = y[0] * (-2.0 * t),
            &mut y,
            0.0,
            &[2.0],
            &IntegratorConfig::default(),
            |_, _| Ok(()),
            |_, _, y| {
                last = y[0].re;
                Ok(())
            },
        )
        .unwrap();
        assert_abs_diff_eq!(last, (-4.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn output_at_start_and_ordering() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut seen = Vec::new();
        integrate(
            |_, _, dy| dy[0] = C64::new(0.0, 0.0),
            &mut y,
            1.0,
            &[1.0, 2.0],
            &IntegratorConfig::default(),
            |_, _| Ok(()),
            |i, t, _| {
                seen.push((i, t));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, vec![(0, 1.0), (1, 2.0)]);

        let mut y = vec![C64::new(1.0, 0.0)];
        let r = integrate(
            |_, _, dy| dy[0] = C64::new(0.0, 0.0),
            &mut y,
            1.0,
            &[0.5],
            &IntegratorConfig::default(),
            |_, _| Ok(()),
            |_, _, _| Ok(()),
        );
        assert!(r.is_err());
    }

    #[test]
    fn bad_tolerances_rejected() {
        let cfg = IntegratorConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
