//! Candidate verification: Euler-Lagrange residual over growing windows,
//! the transversality lim-inf, weak-maximality probes and the Gateaux
//! diagnostics, combined into a verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::residual::{el_residual, transversality_series};
use super::weak::{
    gateaux_report, liminf_over_tails, variation_quotient, weak_max_compare, weakly_consistent,
    GateauxReport,
};
use super::{Path, Problem, Trajectory};
use crate::calculus::{LimitConfig, LimitEstimate};
use crate::error::{Error, Result};

/// Variations `p` with `p(a) = 0`, applied to every component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// Zero up to `start`, a smoothstep ramp of length `ramp`, then `level`.
    TailConstant { start: f64, ramp: f64, level: f64 },
    /// `amplitude (t - a) exp(-rate (t - a))`.
    Decaying { amplitude: f64, rate: f64 },
    /// `amplitude (1 - ((t - center) / half_width)^2)^2` on its support.
    Bump {
        center: f64,
        half_width: f64,
        amplitude: f64,
    },
}

impl Perturbation {
    pub fn eval(&self, a: f64, t: f64) -> f64 {
        match *self {
            Perturbation::TailConstant { start, ramp, level } => {
                let u = ((t - start) / ramp).clamp(0.0, 1.0);
                level * u * u * (3.0 - 2.0 * u)
            }
            Perturbation::Decaying { amplitude, rate } => {
                let s = t - a;
                amplitude * s * (-rate * s).exp()
            }
            Perturbation::Bump {
                center,
                half_width,
                amplitude,
            } => {
                let z = (t - center) / half_width;
                if z.abs() < 1.0 {
                    let q = 1.0 - z * z;
                    amplitude * q * q
                } else {
                    0.0
                }
            }
        }
    }

    pub fn path(&self, a: f64, dim: usize) -> Path {
        let p = *self;
        Path::new(dim, move |t, out| out.fill(p.eval(a, t)))
    }

    pub fn id(&self) -> String {
        match self {
            Perturbation::TailConstant { level, .. } => format!("tail-constant({level:+})"),
            Perturbation::Decaying { amplitude, .. } => format!("decaying({amplitude:+})"),
            Perturbation::Bump { amplitude, .. } => format!("bump({amplitude:+})"),
        }
    }

    /// Tail-constant, decaying and bump shapes with amplitudes `+-amp`,
    /// placed relative to `a`.
    pub fn default_family(a: f64, amp: f64) -> Vec<Perturbation> {
        [amp, -amp]
            .into_iter()
            .flat_map(|c| {
                [
                    Perturbation::TailConstant {
                        start: a + 1.0,
                        ramp: 2.0,
                        level: c,
                    },
                    Perturbation::Decaying {
                        amplitude: c,
                        rate: 0.5,
                    },
                    Perturbation::Bump {
                        center: a + 3.0,
                        half_width: 2.0,
                        amplitude: c,
                    },
                ]
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Sampling step on continuous pieces.
    pub h: f64,
    /// Euler-Lagrange windows `[a, a + w]`.
    pub el_windows: Vec<f64>,
    /// Horizons `T'` sampled on `[a + horizon_lo, a + horizon_hi]` with step
    /// `horizon_step` (all scattered points in between are included).
    pub horizon_lo: f64,
    pub horizon_hi: f64,
    pub horizon_step: f64,
    /// Tail starts `T`, as offsets from `a`, snapped to the horizons.
    pub tails: Vec<f64>,
    /// `None` selects [`Perturbation::default_family`] with amplitude 0.1.
    pub probes: Option<Vec<Perturbation>>,
    pub el_tol: f64,
    pub trans_tol: f64,
    pub weak_tol: f64,
    /// `eps` values for the Gateaux diagnostics.
    pub eps: Vec<f64>,
    /// Variation used for the Gateaux diagnostics; `None` selects a
    /// tail-constant shape of level 1.
    pub gateaux_probe: Option<Perturbation>,
    pub limit: LimitConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            h: 1e-3,
            el_windows: vec![5.0, 10.0, 20.0],
            horizon_lo: 10.0,
            horizon_hi: 60.0,
            horizon_step: 1.0,
            tails: (0..7).map(|k| 10.0 + 5.0 * k as f64).collect(),
            probes: None,
            el_tol: 1e-5,
            trans_tol: 1e-8,
            weak_tol: 1e-8,
            eps: vec![1e-1, 1e-2, 1e-3],
            gateaux_probe: None,
            limit: LimitConfig::default(),
        }
    }
}

impl VerifyConfig {
    fn probes(&self, a: f64) -> Vec<Perturbation> {
        self.probes
            .clone()
            .unwrap_or_else(|| Perturbation::default_family(a, 0.1))
    }

    fn gateaux_probe(&self, a: f64) -> Perturbation {
        self.gateaux_probe.unwrap_or(Perturbation::TailConstant {
            start: a + 1.0,
            ramp: 2.0,
            level: 1.0,
        })
    }

    /// Horizon nodes and tail starts for `problem`.
    pub fn sampling(&self, problem: &Problem) -> Result<(Vec<f64>, Vec<f64>)> {
        let ts = problem.timescale();
        let a = problem.a();
        let lo = ts.next_member_at_or_after(a + self.horizon_lo);
        let hi = ts.next_member_at_or_after(a + self.horizon_hi);
        if !(hi > lo) {
            return Err(Error::InvalidHorizons);
        }
        let horizons = ts.build_grid(lo, hi, self.horizon_step)?.nodes().to_vec();
        let mut tails: Vec<f64> = self
            .tails
            .iter()
            .map(|off| {
                let t = a + off;
                let j = horizons.partition_point(|h| *h < t);
                horizons[j.min(horizons.len() - 1)]
            })
            .collect();
        tails.dedup();
        Ok((horizons, tails))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every check is consistent with the candidate being weakly maximal.
    Consistent,
    /// The candidate does not satisfy the Euler-Lagrange equation.
    ElViolated,
    /// Euler-Lagrange holds but transversality fails while the Gateaux
    /// hypotheses of the necessary condition are themselves violated.
    ElFailsTransversality,
    /// Some check rules out weak maximality.
    NotWeaklyMaximal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub id: String,
    pub estimate: LimitEstimate,
    pub consistent: bool,
}

/// `A(eps, T')` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientSample {
    pub eps: f64,
    pub t_prime: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisDiagnostics {
    pub probe: Perturbation,
    pub quotients: Vec<QuotientSample>,
    pub gateaux: GateauxReport,
    /// `V(eps, T) / eps` runs off to infinity in `T` for some `eps`.
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub el_sup_norm: f64,
    /// `(window end, sup-norm of the residual on [a, window end])`.
    pub el_windows: Vec<(f64, f64)>,
    pub transversality: LimitEstimate,
    pub weak_max_probes: Vec<ProbeResult>,
    pub hypothesis_diagnostics: HypothesisDiagnostics,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn transversality_holds(&self, tol: f64) -> bool {
        self.transversality.is_converged_to(0.0, tol)
    }
}

fn el_sup_on(problem: &Problem, x: &Path, end: f64, h: f64) -> Result<(f64, f64)> {
    let end = problem.timescale().next_member_at_or_after(end);
    let grid = problem.grid_past(end, h, &[])?;
    let traj = Trajectory::from_path(problem, x, grid.clone())?;
    let r = el_residual(problem, &traj)?;
    let stop = grid.index_of(end)?;
    let len = r.len().min(stop + 1);
    Ok((end, r.truncate(len).sup_norm()))
}

/// [`verify_candidate_with`] without extra competitors.
pub fn verify_candidate(problem: &Problem, x: &Path, cfg: &VerifyConfig) -> Result<VerificationReport> {
    verify_candidate_with(problem, x, &[], cfg)
}

/// Runs every check on the candidate `x` and derives a verdict.
///
/// Besides the perturbation family, `competitors` (other admissible paths)
/// are compared against `x` under weak maximality.
///
/// Verdict rules, in order:
/// 1. residual sup-norm above `el_tol`: `ElViolated`;
/// 2. transversality not converged to zero: `ElFailsTransversality` when the
///    Gateaux diagnostics show `V(eps, T) / eps` unbounded in `T` (the
///    necessary condition does not apply), otherwise `NotWeaklyMaximal`;
/// 3. some weak-maximality probe inconsistent: `NotWeaklyMaximal`;
/// 4. otherwise `Consistent`.
pub fn verify_candidate_with(
    problem: &Problem,
    x: &Path,
    competitors: &[(String, Path)],
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    let a = problem.a();
    let (horizons, tails) = cfg.sampling(problem)?;
    let last = *horizons.last().expect("non-empty horizons");

    let el_windows = cfg
        .el_windows
        .par_iter()
        .map(|w| el_sup_on(problem, x, a + w, cfg.h))
        .collect::<Result<Vec<_>>>()?;
    let el_sup_norm = el_windows.iter().fold(0.0_f64, |m, w| m.max(w.1));

    let grid = problem.grid_past(last, cfg.h, &horizons)?;
    let traj = Trajectory::from_path(problem, x, grid.clone())?;
    let series = transversality_series(problem, &traj)?;
    let samples = horizons
        .iter()
        .map(|&t| Ok((t, series.value(grid.index_of(t)?)[0])))
        .collect::<Result<Vec<_>>>()?;
    let transversality = liminf_over_tails(&samples, &tails, &cfg.limit)?;

    let mut jobs: Vec<(String, Path)> = cfg
        .probes(a)
        .iter()
        .map(|p| (p.id(), x.add_scaled(&p.path(a, problem.dim()), 1.0)))
        .collect();
    jobs.extend(competitors.iter().cloned());
    let weak_max_probes = jobs
        .par_iter()
        .map(|(id, competitor)| {
            let estimate =
                weak_max_compare(problem, competitor, x, &horizons, &tails, cfg.h, &cfg.limit)?;
            Ok(ProbeResult {
                id: id.clone(),
                consistent: weakly_consistent(&estimate, cfg.weak_tol),
                estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let probe = cfg.gateaux_probe(a);
    let p_path = probe.path(a, problem.dim());
    let gateaux = gateaux_report(
        problem, x, &p_path, &cfg.eps, &horizons, &tails, cfg.h, &cfg.limit,
    )?;
    let pv = p_path.sample(grid)?;
    let quotients = cfg
        .eps
        .iter()
        .flat_map(|&eps| tails.iter().map(move |&t| (eps, t)))
        .map(|(eps, t_prime)| {
            Ok(QuotientSample {
                eps,
                t_prime,
                value: variation_quotient(problem, &traj, &pv, eps, t_prime)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violated = gateaux.unbounded_in_t();

    let verdict = if el_sup_norm > cfg.el_tol {
        Verdict::ElViolated
    } else if !transversality.is_converged_to(0.0, cfg.trans_tol) {
        if violated {
            Verdict::ElFailsTransversality
        } else {
            Verdict::NotWeaklyMaximal
        }
    } else if weak_max_probes.iter().any(|p| !p.consistent) {
        Verdict::NotWeaklyMaximal
    } else {
        Verdict::Consistent
    };

    Ok(VerificationReport {
        el_sup_norm,
        el_windows,
        transversality,
        weak_max_probes,
        hypothesis_diagnostics: HypothesisDiagnostics {
            probe,
            quotients,
            gateaux,
            violated,
        },
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbations_vanish_at_a() {
        for p in Perturbation::default_family(2.0, 0.1) {
            assert_eq!(p.eval(2.0, 2.0), 0.0, "{p:?}");
        }
    }

    #[test]
    fn tail_constant_reaches_level() {
        let p = Perturbation::TailConstant {
            start: 1.0,
            ramp: 2.0,
            level: 0.3,
        };
        assert_eq!(p.eval(0.0, 3.0), 0.3);
        assert_eq!(p.eval(0.0, 50.0), 0.3);
        assert!((p.eval(0.0, 2.0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn default_sampling_on_integers() {
        use crate::timescale::TimeScale;
        use crate::variational::Lagrangian;
        let p = Problem::new(
            TimeScale::naturals(),
            vec![0.0],
            Lagrangian::new(1, |_, u, _| u[0]),
        )
        .unwrap();
        let (h, t) = VerifyConfig::default().sampling(&p).unwrap();
        assert_eq!(h.len(), 51);
        assert_eq!(t, vec![10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
    }
}
