//! Quantities evaluated along a sampled path: the integrand, its partials,
//! the Euler-Lagrange residual and the transversality term.

use super::{Problem, Trajectory};
use crate::calculus::{delta, delta_integral, sigma_shift, GridFunction};
use crate::error::{Error, Result};

fn shift_and_delta(x: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    Ok((sigma_shift(x)?, delta(x)?))
}

/// `t -> L(t, x^sigma(t), x^Delta(t))`.
pub fn lagrangian_along(problem: &Problem, x: &GridFunction) -> Result<GridFunction> {
    let (xs, xd) = shift_and_delta(x)?;
    let l = problem.lagrangian();
    let out = GridFunction::zip_map(&[&xs, &xd], 1, |t, a, out| out[0] = l.eval(t, a[0], a[1]))?;
    check_finite(&out)?;
    Ok(out)
}

/// `(d2 L, d3 L)` evaluated along `(t, x^sigma, x^Delta)`.
pub fn partials_along(problem: &Problem, x: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let (xs, xd) = shift_and_delta(x)?;
    let l = problem.lagrangian();
    let n = problem.dim();
    let d2 = GridFunction::zip_map(&[&xs, &xd], n, |t, a, out| l.d2(t, a[0], a[1], out))?;
    let d3 = GridFunction::zip_map(&[&xs, &xd], n, |t, a, out| l.d3(t, a[0], a[1], out))?;
    Ok((d2, d3))
}

fn check_finite(f: &GridFunction) -> Result<()> {
    match f.values().iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(f.times()[k / f.dim()])),
        None => Ok(()),
    }
}

/// `R(t) = (Delta/Delta t) d3L(t, x^sigma, x^Delta) - d2L(t, x^sigma, x^Delta)`
/// on every node where both terms are defined. The outer derivative is taken
/// of the sampled composite, never of second derivatives of `L`.
pub fn el_residual(problem: &Problem, x: &Trajectory) -> Result<GridFunction> {
    let grid = x.grid();
    if grid.len() < 3 {
        return Err(Error::GridTooSmall {
            needed: 3,
            got: grid.len(),
        });
    }
    let (d2, d3) = partials_along(problem, x.x())?;
    let outer = delta(&d3)?;
    GridFunction::zip_map(&[&outer, &d2], problem.dim(), |_, a, out| {
        for k in 0..out.len() {
            out[k] = a[0][k] - a[1][k];
        }
    })
}

/// `d3L(t, x^sigma, x^Delta) . x(t)` on the nodes where it is defined.
pub fn transversality_series(problem: &Problem, x: &Trajectory) -> Result<GridFunction> {
    let (_, d3) = partials_along(problem, x.x())?;
    d3.dot(x.x())
}

/// `d3L(T', x^sigma(T'), x^Delta(T')) . x(T')`.
pub fn transversality_term(problem: &Problem, x: &Trajectory, t_prime: f64) -> Result<f64> {
    let series = transversality_series(problem, x)?;
    let i = x.grid().index_of(t_prime)?;
    if i >= series.len() {
        return Err(Error::BoundaryUndefined(t_prime));
    }
    Ok(series.value(i)[0])
}

pub(crate) fn check_variation(p: &GridFunction) -> Result<()> {
    let p0 = p.value(0);
    if p0.iter().any(|v| v.abs() > 1e-12) {
        return Err(Error::InadmissibleVariation(p0.to_vec()));
    }
    Ok(())
}

/// First variation `int_a^{T'} [d2L . p^sigma + d3L . p^Delta] Delta t`
/// along `x_star`.
pub fn first_variation(
    problem: &Problem,
    x_star: &Trajectory,
    p: &GridFunction,
    t_prime: f64,
) -> Result<f64> {
    check_variation(p)?;
    let (d2, d3) = partials_along(problem, x_star.x())?;
    let (ps, pd) = shift_and_delta(p)?;
    let integrand = GridFunction::zip_map(&[&d2, &ps, &d3, &pd], 1, |_, a, out| {
        out[0] = dot(a[0], a[1]) + dot(a[2], a[3]);
    })?;
    Ok(delta_integral(&integrand, problem.a(), t_prime)?[0])
}

/// The same first variation after integrating by parts:
/// returns `(int_a^{T'} [d2L - (d3L)^Delta] . p^sigma Delta t, d3L(T') . p(T'))`.
/// Their sum equals [`first_variation`] whenever `p(a) = 0`.
pub fn first_variation_by_parts(
    problem: &Problem,
    x_star: &Trajectory,
    p: &GridFunction,
    t_prime: f64,
) -> Result<(f64, f64)> {
    check_variation(p)?;
    let (d2, d3) = partials_along(problem, x_star.x())?;
    let outer = delta(&d3)?;
    let ps = sigma_shift(p)?;
    let integrand = GridFunction::zip_map(&[&d2, &outer, &ps], 1, |_, a, out| {
        out[0] = a[0]
            .iter()
            .zip(a[1])
            .zip(a[2])
            .map(|((d2, d3d), p)| (d2 - d3d) * p)
            .sum();
    })?;
    let integral = delta_integral(&integrand, problem.a(), t_prime)?[0];
    let i = p.grid().index_of(t_prime)?;
    if i >= d3.len() || i >= p.len() {
        return Err(Error::BoundaryUndefined(t_prime));
    }
    // left limits: the integral stops at T' and never sees the jump there
    Ok((integral, dot(d3.left_value(i), p.left_value(i))))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
