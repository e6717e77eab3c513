//! Weak maximality: lim-inf over tails of accumulated payoff differences,
//! and the difference quotients `A(eps, T')`, `V(eps, T) / eps` built from
//! them.

use serde::{Deserialize, Serialize};

use super::residual::{check_variation, lagrangian_along};
use super::{Path, Problem, Trajectory};
use crate::calculus::{
    antiderivative, classify_limit, delta_integral, GridFunction, LimitConfig, LimitEstimate,
    LimitKind,
};
use crate::error::{Error, Result};
use crate::timescale::tol_at;

/// `lim_{T -> inf} inf_{T' >= T} v(T')` from samples `(T', v(T'))`.
///
/// For every tail start `T` the infimum over the sampled `T' >= T` is taken
/// and the resulting sequence is classified. When the raw samples are still
/// falling at a non-decaying rate at the end, the sampled infimum is not
/// resolved and the estimate is `DivergesMinus`.
pub fn liminf_over_tails(
    values: &[(f64, f64)],
    tails: &[f64],
    cfg: &LimitConfig,
) -> Result<LimitEstimate> {
    let w = cfg.window.max(3);
    if tails.len() < w || values.len() < w {
        return Err(Error::InsufficientHorizons {
            needed: w,
            got: tails.len().min(values.len()),
        });
    }
    if values.windows(2).any(|p| p[1].0 <= p[0].0) || tails.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidHorizons);
    }
    let mut evidence = Vec::with_capacity(tails.len());
    for &t in tails {
        let start = values.partition_point(|(tp, _)| *tp < t - tol_at(t));
        if start >= values.len() || (values[start].0 - t).abs() > tol_at(t) * 1e3 {
            return Err(Error::InvalidHorizons);
        }
        let inf = values[start..]
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min);
        evidence.push((t, inf));
    }

    let tail = &values[values.len() - w..];
    let falling = tail.windows(2).all(|p| p[1].1 < p[0].1);
    if falling {
        let rate = |p: &[(f64, f64)]| (p[1].1 - p[0].1) / (p[1].0 - p[0].0);
        let first = rate(&tail[..2]);
        let last = rate(&tail[w - 2..]);
        if tail[w - 1].1 < -cfg.div_threshold || last.abs() >= 0.5 * first.abs() {
            return Ok(LimitEstimate {
                kind: LimitKind::DivergesMinus,
                evidence,
            });
        }
    }
    classify_limit(evidence, cfg)
}

/// Node values of `F` at the listed horizons.
fn at_horizons(f: &GridFunction, horizons: &[f64]) -> Result<Vec<(f64, f64)>> {
    horizons
        .iter()
        .map(|&t| {
            let i = f.grid().index_of(t)?;
            if i >= f.len() {
                return Err(Error::BoundaryUndefined(t));
            }
            Ok((f.grid().nodes()[i], f.value(i)[0]))
        })
        .collect()
}

fn snap_all(problem: &Problem, pts: &[f64]) -> Result<Vec<f64>> {
    pts.iter()
        .map(|t| problem.timescale().snap(*t).map_err(|_| Error::InvalidHorizons))
        .collect()
}

/// `D(T') = int_a^{T'} [L(x) - L(x_star)] Delta t` at the horizons.
pub fn payoff_difference(
    problem: &Problem,
    x: &Path,
    x_star: &Path,
    horizons: &[f64],
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    let a = problem.a();
    let (xa, xsa) = (x.eval(a), x_star.eval(a));
    let tol = super::problem::admissibility_tol(problem.x_a());
    if xa.iter().zip(&xsa).any(|(p, q)| (p - q).abs() > tol) {
        return Err(Error::InadmissiblePath {
            expected: xsa,
            got: xa,
        });
    }
    let hs = snap_all(problem, horizons)?;
    let last = *hs.last().ok_or(Error::InsufficientHorizons { needed: 1, got: 0 })?;
    let grid = problem.grid_past(last, h, &hs)?;
    let lx = lagrangian_along(problem, &x.sample(grid.clone())?)?;
    let ls = lagrangian_along(problem, &x_star.sample(grid)?)?;
    let diff = GridFunction::zip_map(&[&lx, &ls], 1, |_, v, out| out[0] = v[0][0] - v[1][0])?;
    at_horizons(&antiderivative(&diff)?, &hs)
}

/// Weak-maximality comparison of `x_star` against the competitor `x`:
/// the lim-inf over tails of `D(T')`. `x_star` passes against `x` iff the
/// estimate is `Converged(v <= tol)` or `DivergesMinus`.
pub fn weak_max_compare(
    problem: &Problem,
    x: &Path,
    x_star: &Path,
    horizons: &[f64],
    tails: &[f64],
    h: f64,
    cfg: &LimitConfig,
) -> Result<LimitEstimate> {
    let d = payoff_difference(problem, x, x_star, horizons, h)?;
    let tails = snap_all(problem, tails)?;
    liminf_over_tails(&d, &tails, cfg)
}

/// True when a weak-maximality estimate does not contradict maximality.
pub fn weakly_consistent(est: &LimitEstimate, tol: f64) -> bool {
    match est.kind {
        LimitKind::Converged { value } => value <= tol,
        LimitKind::DivergesMinus => true,
        _ => false,
    }
}

fn perturbed(x_star: &GridFunction, p: &GridFunction, eps: f64) -> Result<GridFunction> {
    GridFunction::zip_map(&[x_star, p], x_star.dim(), |_, a, out| {
        for k in 0..out.len() {
            out[k] = a[0][k] + eps * a[1][k];
        }
    })
}

/// `A(eps, T') = int_a^{T'} [L(x* + eps p) - L(x*)] / eps Delta t`.
pub fn variation_quotient(
    problem: &Problem,
    x_star: &Trajectory,
    p: &GridFunction,
    eps: f64,
    t_prime: f64,
) -> Result<f64> {
    if eps == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    check_variation(p)?;
    let xp = perturbed(x_star.x(), p, eps)?;
    let l1 = lagrangian_along(problem, &xp)?;
    let l0 = lagrangian_along(problem, x_star.x())?;
    let q = GridFunction::zip_map(&[&l1, &l0], 1, |_, v, out| out[0] = (v[0][0] - v[1][0]) / eps)?;
    Ok(delta_integral(&q, problem.a(), t_prime)?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateauxRow {
    pub eps: f64,
    pub tail_start: f64,
    /// `V(eps, T) / eps`.
    pub quotient: f64,
}

/// Tabulated `V(eps, T) / eps`, the per-`eps` limit in `T`, and the spread
/// across `eps` at each `T` (the uniformity diagnostic). No verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateauxReport {
    pub rows: Vec<GateauxRow>,
    pub limits: Vec<(f64, LimitEstimate)>,
    pub spread_by_tail: Vec<(f64, f64)>,
}

impl GateauxReport {
    /// Some `eps` shows `V(eps, T) / eps` running off to infinity in `T`.
    pub fn unbounded_in_t(&self) -> bool {
        self.limits.iter().any(|(_, e)| {
            matches!(e.kind, LimitKind::DivergesPlus | LimitKind::DivergesMinus)
        })
    }
}

/// Samples `V(eps, T) = inf_{T' >= T} int_a^{T'} [L(x* + eps p) - L(x*)]`
/// over the horizons and reports `V / eps`.
#[allow(clippy::too_many_arguments)]
pub fn gateaux_report(
    problem: &Problem,
    x_star: &Path,
    p: &Path,
    eps_list: &[f64],
    horizons: &[f64],
    tails: &[f64],
    h: f64,
    cfg: &LimitConfig,
) -> Result<GateauxReport> {
    if eps_list.iter().any(|e| *e == 0.0) {
        return Err(Error::ZeroEpsilon);
    }
    let hs = snap_all(problem, horizons)?;
    let tails = snap_all(problem, tails)?;
    let last = *hs.last().ok_or(Error::InsufficientHorizons { needed: 1, got: 0 })?;
    let grid = problem.grid_past(last, h, &hs)?;
    let xs = x_star.sample(grid.clone())?;
    let pv = p.sample(grid)?;
    check_variation(&pv)?;
    let l0 = lagrangian_along(problem, &xs)?;

    let mut rows = Vec::new();
    let mut limits = Vec::new();
    for &eps in eps_list {
        let l1 = lagrangian_along(problem, &perturbed(&xs, &pv, eps)?)?;
        let diff = GridFunction::zip_map(&[&l1, &l0], 1, |_, v, out| out[0] = v[0][0] - v[1][0])?;
        let num = at_horizons(&antiderivative(&diff)?, &hs)?;
        let mut seq = Vec::with_capacity(tails.len());
        for &t in &tails {
            let start = num.partition_point(|(tp, _)| *tp < t - tol_at(t));
            let inf = num[start..].iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
            let quotient = inf / eps;
            rows.push(GateauxRow {
                eps,
                tail_start: t,
                quotient,
            });
            seq.push((t, quotient));
        }
        limits.push((eps, classify_limit(seq, cfg)?));
    }
    let spread_by_tail = tails
        .iter()
        .map(|&t| {
            let qs = rows.iter().filter(|r| r.tail_start == t).map(|r| r.quotient);
            let (lo, hi) = qs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| {
                (lo.min(q), hi.max(q))
            });
            (t, hi - lo)
        })
        .collect();
    Ok(GateauxReport {
        rows,
        limits,
        spread_by_tail,
    })
}
