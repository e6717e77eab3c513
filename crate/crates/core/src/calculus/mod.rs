//! Delta differentiation and integration on sample grids.
//!
//! At right-scattered nodes everything is exact: `f^Delta(t)` is the forward
//! difference quotient over `mu(t)` and the integral over `[t, sigma(t)]` is
//! `mu(t) f(t)`. Continuous pieces use five-point differences and the
//! composite trapezoid rule.

mod function;
mod identities;
mod limit;

use std::collections::BTreeMap;

pub use function::GridFunction;
pub use identities::{identity_pack, IdentityReport, PointwiseResiduals};
pub use limit::{
    classify_limit, improper_integral, integrate_fn, ImproperConfig, LimitConfig, LimitEstimate,
    LimitKind,
};

use crate::error::{Error, Result};

/// Weights `w_j` with `g'(x0) ~ sum_j w_j g(x0 + d_j)`, from the derivative
/// of the Lagrange interpolant through the offsets `d`.
fn derivative_weights(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|j| {
            let denom: f64 = (0..n).filter(|&l| l != j).map(|l| d[j] - d[l]).product();
            let num: f64 = (0..n)
                .filter(|&m| m != j)
                .map(|m| {
                    (0..n)
                        .filter(|&l| l != j && l != m)
                        .map(|l| -d[l])
                        .product::<f64>()
                })
                .sum();
            num / denom
        })
        .collect()
}

const STENCIL: usize = 5;

/// Nodes `k..=m` of the continuous piece through node `i`, clipped to the
/// stencil reach and to the domain of `f` (`m` may be the right-scattered
/// node closing the piece).
fn piece(f: &GridFunction, i: usize) -> (usize, usize) {
    let mu = f.grid().mu();
    let mut k = i;
    while k > 0 && i - k < STENCIL && mu[k - 1] == 0.0 {
        k -= 1;
    }
    let mut m = i;
    while m + 1 < f.len() && m - i < STENCIL && mu[m] == 0.0 {
        m += 1;
    }
    (k, m)
}

/// Derivative at node `at` from the stencil `lo..=hi` of one continuous
/// piece; the value at `hi` is its left limit.
fn stencil_derivative(f: &GridFunction, at: usize, lo: usize, hi: usize) -> Vec<f64> {
    let x = f.grid().nodes();
    let offsets: Vec<f64> = (lo..=hi).map(|j| x[j] - x[at]).collect();
    let w = derivative_weights(&offsets);
    let sample = |j: usize| if j == hi { f.left_value(j) } else { f.value(j) };
    // weights sum to zero, so differencing against the centre keeps constants exact
    let centre = sample(at);
    let mut out = vec![0.0; f.dim()];
    for (j, wj) in (lo..=hi).zip(w) {
        if j == at {
            continue;
        }
        for ((o, vk), ck) in out.iter_mut().zip(sample(j)).zip(centre) {
            *o += wj * (vk - ck);
        }
    }
    out
}

/// Delta derivative of `f` at node `i`.
///
/// Right-scattered nodes use `(f(sigma(t)) - f(t)) / mu(t)`. Dense nodes
/// differentiate the interpolant through up to five neighbouring samples of
/// the same continuous piece, centred where possible and one-sided near the
/// ends of the piece (fourth order on uniform spacing).
pub fn delta_derivative(f: &GridFunction, i: usize) -> Result<Vec<f64>> {
    let grid = f.grid();
    let t = *grid
        .nodes()
        .get(i)
        .filter(|_| i < f.len())
        .ok_or_else(|| Error::NodeNotInGrid(grid.nodes().get(i).copied().unwrap_or(f64::NAN)))?;
    let mu = grid.mu()[i];
    let dim = f.dim();
    if mu > 0.0 {
        let next = f.forward_value(i).ok_or(Error::BoundaryUndefined(t))?;
        return Ok((0..dim).map(|k| (next[k] - f.value(i)[k]) / mu).collect());
    }
    if i + 1 >= f.len() {
        return Err(Error::BoundaryUndefined(t));
    }
    let (k, m) = piece(f, i);
    let lo = i.saturating_sub(STENCIL / 2).max(k).min(m.saturating_sub(STENCIL - 1).max(k));
    let hi = (lo + STENCIL - 1).min(m);
    Ok(stencil_derivative(f, i, lo, hi))
}

/// Backward derivative on the continuous piece ending at junction node `i`:
/// the left limit of `f^Delta` there.
fn left_derivative(f: &GridFunction, i: usize) -> Vec<f64> {
    let (k, _) = piece(f, i - 1);
    let lo = i.saturating_sub(STENCIL - 1).max(k);
    stencil_derivative(f, i, lo, i)
}

/// `f^Delta` on every node where it is defined, with left limits recorded at
/// junction nodes.
pub fn delta(f: &GridFunction) -> Result<GridFunction> {
    let n = f.len();
    let mut values = Vec::with_capacity(n * f.dim());
    for i in 0..n {
        match delta_derivative(f, i) {
            Ok(d) => values.extend(d),
            Err(Error::BoundaryUndefined(_)) if i + 1 == n => break,
            Err(e) => return Err(e),
        }
    }
    let len = values.len() / f.dim();
    let grid = f.grid().clone();
    let left: BTreeMap<usize, Vec<f64>> = (1..len)
        .filter(|&i| grid.is_junction(i))
        .map(|i| (i, left_derivative(f, i)))
        .collect();
    GridFunction::from_parts(grid, f.dim(), values, left, None)
}

/// `f^sigma = f o sigma`: the next node's value at right-scattered nodes and
/// `f` itself on continuous pieces.
pub fn sigma_shift(f: &GridFunction) -> Result<GridFunction> {
    let grid = f.grid().clone();
    if grid.len() < 2 {
        return Err(Error::GridTooSmall {
            needed: 2,
            got: grid.len(),
        });
    }
    let n = f.len();
    let mut values = Vec::with_capacity(n * f.dim());
    for i in 0..n {
        if grid.mu()[i] > 0.0 {
            match f.forward_value(i) {
                Some(v) => values.extend_from_slice(v),
                None if i + 1 == n => break,
                None => return Err(Error::BoundaryUndefined(grid.nodes()[i])),
            }
        } else {
            values.extend_from_slice(f.value(i));
        }
    }
    let len = values.len() / f.dim();
    let left: BTreeMap<usize, Vec<f64>> = (1..len)
        .filter(|&i| grid.is_junction(i))
        .map(|i| (i, f.left_value(i).to_vec()))
        .collect();
    GridFunction::from_parts(grid, f.dim(), values, left, None)
}

fn node_in_domain(f: &GridFunction, t: f64) -> Result<usize> {
    let i = f.grid().index_of(t)?;
    if i >= f.len() {
        return Err(Error::BoundaryUndefined(t));
    }
    Ok(i)
}

/// Delta integral of `f` between two grid nodes (oriented).
pub fn delta_integral(f: &GridFunction, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let ilo = node_in_domain(f, lo)?;
    let ihi = node_in_domain(f, hi)?;
    let (from, to, sign) = if ilo <= ihi {
        (ilo, ihi, 1.0)
    } else {
        (ihi, ilo, -1.0)
    };
    let mut acc = vec![0.0; f.dim()];
    for i in from..to {
        accumulate_cell(f, i, &mut acc);
    }
    acc.iter_mut().for_each(|v| *v *= sign);
    Ok(acc)
}

fn accumulate_cell(f: &GridFunction, i: usize, acc: &mut [f64]) {
    let grid = f.grid();
    let mu = grid.mu()[i];
    let v = f.value(i);
    if mu > 0.0 {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += mu * x;
        }
    } else {
        let w = grid.nodes()[i + 1] - grid.nodes()[i];
        let r = f.left_value(i + 1);
        for k in 0..acc.len() {
            acc[k] += 0.5 * w * (v[k] + r[k]);
        }
    }
}

/// `F(t) = int_{t_0}^{t} f Delta tau` on the domain of `f`.
pub fn antiderivative(f: &GridFunction) -> Result<GridFunction> {
    let dim = f.dim();
    let mut acc = vec![0.0; dim];
    let mut values = Vec::with_capacity(f.values().len());
    values.extend_from_slice(&acc);
    for i in 0..f.len().saturating_sub(1) {
        accumulate_cell(f, i, &mut acc);
        values.extend_from_slice(&acc);
    }
    GridFunction::new(f.grid().clone(), dim, values)
}
