use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{delta_integral, GridFunction};
use crate::error::{Error, Result};
use crate::timescale::{tol_at, TimeScale};

/// Thresholds used to classify a sequence of partial values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitConfig {
    /// Relative spread tolerance for convergence.
    pub tol_conv: f64,
    /// Absolute floor for the convergence tolerance.
    pub tol_abs: f64,
    /// Magnitude beyond which a monotone tail counts as divergent outright.
    pub div_threshold: f64,
    /// Number of trailing partials inspected.
    pub window: usize,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            tol_conv: 1e-8,
            tol_abs: 1e-10,
            div_threshold: 1e6,
            window: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    Converged { value: f64 },
    DivergesPlus,
    DivergesMinus,
    Oscillates { lo: f64, hi: f64 },
    Undetermined,
}

/// Classified outcome of a limit computation together with the
/// `(horizon, partial value)` pairs it was read from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    #[serde(flatten)]
    pub kind: LimitKind,
    pub evidence: Vec<(f64, f64)>,
}

impl LimitEstimate {
    pub fn value(&self) -> Option<f64> {
        match self.kind {
            LimitKind::Converged { value } => Some(value),
            _ => None,
        }
    }

    pub fn is_converged_to(&self, target: f64, tol: f64) -> bool {
        self.value().is_some_and(|v| (v - target).abs() <= tol)
    }
}

/// Increments of a monotone tail, normalised by horizon spacing, do not
/// decay by more than half across the window.
fn non_decaying(tail: &[(f64, f64)]) -> bool {
    let rate = |w: &[(f64, f64)]| (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
    let first = rate(&tail[..2]);
    let last = rate(&tail[tail.len() - 2..]);
    last.abs() >= 0.5 * first.abs()
}

/// Reads the limit of `evidence` (horizon, partial) from its last
/// `cfg.window` entries.
///
/// - converged: the trailing partials sit within `max(tol_conv |mean|, tol_abs)`
///   of their mean;
/// - diverging: the trailing partials are strictly monotone and either exceed
///   `div_threshold` in magnitude or grow at a non-decaying rate;
/// - oscillating: increments change sign and the two halves of the window
///   have means closer than half the range (bounded drift);
/// - otherwise undetermined.
pub fn classify_limit(evidence: Vec<(f64, f64)>, cfg: &LimitConfig) -> Result<LimitEstimate> {
    let w = cfg.window.max(3);
    if evidence.len() < w {
        return Err(Error::InsufficientHorizons {
            needed: w,
            got: evidence.len(),
        });
    }
    if evidence.windows(2).any(|p| p[1].0 <= p[0].0) {
        return Err(Error::InvalidHorizons);
    }
    let tail = &evidence[evidence.len() - w..];
    let vals: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let last = vals[w - 1];
    let mean = vals.iter().sum::<f64>() / w as f64;
    let spread = vals.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let kind = if spread <= (cfg.tol_conv * mean.abs()).max(cfg.tol_abs) {
        LimitKind::Converged { value: last }
    } else {
        let incs: Vec<f64> = vals.windows(2).map(|p| p[1] - p[0]).collect();
        if incs.iter().all(|d| *d > 0.0) {
            if last > cfg.div_threshold || non_decaying(tail) {
                LimitKind::DivergesPlus
            } else {
                LimitKind::Undetermined
            }
        } else if incs.iter().all(|d| *d < 0.0) {
            if last < -cfg.div_threshold || non_decaying(tail) {
                LimitKind::DivergesMinus
            } else {
                LimitKind::Undetermined
            }
        } else {
            let half = w / 2;
            let m1 = vals[..half].iter().sum::<f64>() / half as f64;
            let m2 = vals[w - half..].iter().sum::<f64>() / half as f64;
            if (m2 - m1).abs() <= 0.5 * (hi - lo) {
                LimitKind::Oscillates { lo, hi }
            } else if last.abs() > cfg.div_threshold {
                if last > 0.0 {
                    LimitKind::DivergesPlus
                } else {
                    LimitKind::DivergesMinus
                }
            } else {
                LimitKind::Undetermined
            }
        }
    };
    Ok(LimitEstimate { kind, evidence })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImproperConfig {
    /// Sampling step on continuous pieces.
    pub h: f64,
    #[serde(flatten)]
    pub limit: LimitConfig,
}

impl Default for ImproperConfig {
    fn default() -> Self {
        ImproperConfig {
            h: 1e-3,
            limit: LimitConfig::default(),
        }
    }
}

/// `int_lo^hi f(t) Delta t` for an evaluator, sampled at step `h`.
pub fn integrate_fn(
    ts: &TimeScale,
    f: &(dyn Fn(f64) -> f64 + Sync),
    lo: f64,
    hi: f64,
    h: f64,
) -> Result<f64> {
    let lo_s = ts.snap(lo)?;
    let hi_s = ts.snap(hi)?;
    if (lo_s - hi_s).abs() <= tol_at(hi_s) {
        return Ok(0.0);
    }
    let (a, b, sign) = if lo_s < hi_s {
        (lo_s, hi_s, 1.0)
    } else {
        (hi_s, lo_s, -1.0)
    };
    let grid = Arc::new(ts.build_grid(a, b, h)?);
    let g = GridFunction::scalar_fn(grid, f)?;
    Ok(sign * delta_integral(&g, a, b)?[0])
}

/// Improper delta integral `lim_{b -> inf} int_a^b f Delta t`, read off the
/// partial integrals at the given horizons.
pub fn improper_integral(
    ts: &TimeScale,
    f: &(dyn Fn(f64) -> f64 + Sync),
    a: f64,
    horizons: &[f64],
    cfg: &ImproperConfig,
) -> Result<LimitEstimate> {
    let w = cfg.limit.window;
    if w < 3 || horizons.len() < w {
        return Err(Error::InsufficientHorizons {
            needed: w.max(3),
            got: horizons.len(),
        });
    }
    let a = ts.snap(a)?;
    let hs: Vec<f64> = horizons
        .iter()
        .map(|b| ts.snap(*b).map_err(|_| Error::InvalidHorizons))
        .collect::<Result<_>>()?;
    if hs[0] < a || hs.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidHorizons);
    }
    let mut starts = vec![a];
    starts.extend_from_slice(&hs[..hs.len() - 1]);
    let pieces: Vec<f64> = starts
        .par_iter()
        .zip(hs.par_iter())
        .map(|(lo, hi)| integrate_fn(ts, f, *lo, *hi, cfg.h))
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    let evidence = hs
        .iter()
        .zip(pieces)
        .map(|(b, p)| {
            acc += p;
            (*b, acc)
        })
        .collect();
    classify_limit(evidence, &cfg.limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(vals: &[f64]) -> Vec<(f64, f64)> {
        vals.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect()
    }

    #[test]
    fn classifies_basic_shapes() {
        let cfg = LimitConfig::default();
        let c = classify_limit(seq(&[1.0; 6]), &cfg).unwrap();
        assert_eq!(c.kind, LimitKind::Converged { value: 1.0 });
        let up = classify_limit(seq(&[1.0, 2.0, 3.0, 4.0, 5.0]), &cfg).unwrap();
        assert_eq!(up.kind, LimitKind::DivergesPlus);
        let down = classify_limit(seq(&[-1.0, -2.0, -3.0, -4.0, -5.0]), &cfg).unwrap();
        assert_eq!(down.kind, LimitKind::DivergesMinus);
        let osc = classify_limit(seq(&[0.0, 1.0, 0.0, 1.0, 0.0]), &cfg).unwrap();
        assert_eq!(osc.kind, LimitKind::Oscillates { lo: 0.0, hi: 1.0 });
        let slow = classify_limit(seq(&[1.0, 1.5, 1.6, 1.62, 1.621]), &cfg).unwrap();
        assert_eq!(slow.kind, LimitKind::Undetermined);
    }

    #[test]
    fn needs_enough_evidence() {
        let cfg = LimitConfig::default();
        assert!(matches!(
            classify_limit(seq(&[1.0, 2.0]), &cfg),
            Err(Error::InsufficientHorizons { .. })
        ));
    }

    #[test]
    fn geometric_series_converges() {
        let ts = TimeScale::naturals();
        let hs: Vec<f64> = (1..=10).map(|k| 10.0 * k as f64).collect();
        let est = improper_integral(&ts, &|t| 0.5f64.powf(t), 0.0, &hs, &Default::default())
            .unwrap();
        assert!(est.is_converged_to(2.0, 1e-6), "{est:?}");
    }

    #[test]
    fn constant_on_ray_diverges() {
        let ts = TimeScale::ray(0.0);
        let hs: Vec<f64> = (1..=8).map(|k| k as f64).collect();
        let est = improper_integral(&ts, &|_| 1.0, 0.0, &hs, &Default::default()).unwrap();
        assert_eq!(est.kind, LimitKind::DivergesPlus);
    }

    #[test]
    fn alternating_sum_oscillates() {
        let ts = TimeScale::naturals();
        let hs: Vec<f64> = (1..=12).map(|k| k as f64).collect();
        let f = |t: f64| if (t as i64) % 2 == 0 { 1.0 } else { -1.0 };
        let est = improper_integral(&ts, &f, 0.0, &hs, &Default::default()).unwrap();
        assert_eq!(est.kind, LimitKind::Oscillates { lo: 0.0, hi: 1.0 });
        assert!(est.evidence.iter().all(|(_, p)| *p == 0.0 || *p == 1.0));
    }
}
