//! Direct method for the truncated problem `int_a^T L Delta t -> max`.
//!
//! The functional is discretized cell by cell: a right-scattered cell
//! `[t_i, sigma(t_i)]` contributes `mu L(t_i, x_{i+1}, d)` exactly, a dense
//! cell of width `w` contributes `w/2 [L(t_i, x_i, d) + L(t_{i+1}, x_{i+1}, d)]`,
//! with `d = (x_{i+1} - x_i) / w` in both cases. The objective couples only
//! neighbouring nodes, so its Hessian is block tridiagonal; the ascent is a
//! damped Newton iteration on that structure with an Armijo backtracking
//! line search.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Problem, Trajectory};
use crate::calculus::GridFunction;
use crate::error::{Error, Result};
use crate::timescale::SampleGrid;

/// Boundary condition at the truncation horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Free,
    Pinned(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when the sup-norm of the discrete gradient drops below this.
    pub g_tol: f64,
    pub max_iter: usize,
    /// Number of initial guesses; the first is deterministic.
    pub starts: usize,
    pub seed: u64,
    /// Amplitude of the random perturbation applied to the other starts.
    pub spread: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            g_tol: 1e-8,
            max_iter: 10_000,
            starts: 3,
            seed: 0,
            spread: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Cells<'a> {
    problem: &'a Problem,
    grid: &'a SampleGrid,
}

impl Cells<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let l = self.problem.lagrangian();
        let t = self.grid.nodes();
        let mut d = vec![0.0; n];
        let mut total = 0.0;
        for i in 0..t.len() - 1 {
            let w = t[i + 1] - t[i];
            let (xi, xj) = (&x[i * n..(i + 1) * n], &x[(i + 1) * n..(i + 2) * n]);
            for k in 0..n {
                d[k] = (xj[k] - xi[k]) / w;
            }
            total += if self.grid.mu()[i] > 0.0 {
                w * l.eval(t[i], xj, &d)
            } else {
                0.5 * w * (l.eval(t[i], xi, &d) + l.eval(t[i + 1], xj, &d))
            };
        }
        total
    }

    /// Gradient with respect to every node value (including the fixed ones).
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let l = self.problem.lagrangian();
        let t = self.grid.nodes();
        out.fill(0.0);
        let mut d = vec![0.0; n];
        let (mut d2a, mut d3a, mut d2b, mut d3b) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..t.len() - 1 {
            let w = t[i + 1] - t[i];
            let (xi, xj) = (&x[i * n..(i + 1) * n], &x[(i + 1) * n..(i + 2) * n]);
            for k in 0..n {
                d[k] = (xj[k] - xi[k]) / w;
            }
            if self.grid.mu()[i] > 0.0 {
                l.d2(t[i], xj, &d, &mut d2b);
                l.d3(t[i], xj, &d, &mut d3b);
                for k in 0..n {
                    out[i * n + k] -= d3b[k];
                    out[(i + 1) * n + k] += w * d2b[k] + d3b[k];
                }
            } else {
                l.d2(t[i], xi, &d, &mut d2a);
                l.d3(t[i], xi, &d, &mut d3a);
                l.d2(t[i + 1], xj, &d, &mut d2b);
                l.d3(t[i + 1], xj, &d, &mut d3b);
                for k in 0..n {
                    let s3 = 0.5 * (d3a[k] + d3b[k]);
                    out[i * n + k] += 0.5 * w * d2a[k] - s3;
                    out[(i + 1) * n + k] += 0.5 * w * d2b[k] + s3;
                }
            }
        }
    }
}

/// Discretized truncated objective of `x` over its whole grid.
pub fn discrete_objective(problem: &Problem, x: &GridFunction) -> Result<f64> {
    check_full(problem, x)?;
    let cells = Cells {
        problem,
        grid: x.grid(),
    };
    let v = cells.objective(x.values());
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective)
    }
}

/// Gradient of [`discrete_objective`] with respect to every node value.
pub fn discrete_gradient(problem: &Problem, x: &GridFunction) -> Result<GridFunction> {
    check_full(problem, x)?;
    let cells = Cells {
        problem,
        grid: x.grid(),
    };
    let mut g = vec![0.0; x.values().len()];
    cells.gradient(x.values(), &mut g);
    GridFunction::new(x.grid().clone(), x.dim(), g)
}

fn check_full(problem: &Problem, x: &GridFunction) -> Result<()> {
    if x.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x.dim(),
        });
    }
    if x.len() != x.grid().len() || x.len() < 2 {
        return Err(Error::GridTooSmall {
            needed: 2.max(x.grid().len()),
            got: x.len(),
        });
    }
    Ok(())
}

/// Free unknowns are node values `first..last` (exclusive), all components.
struct Ascent<'a> {
    cells: Cells<'a>,
    first: usize,
    last: usize,
    opts: SolverOptions,
}

struct Outcome {
    x: Vec<f64>,
    objective: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

impl Ascent<'_> {
    fn free_grad(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        self.cells.gradient(x, buf);
        let n = self.cells.dim();
        buf[self.first * n..self.last * n]
            .iter()
            .fold(0.0_f64, |m, g| m.max(g.abs()))
    }

    /// Block-tridiagonal Hessian of the objective over the free nodes, by
    /// central differences of the gradient. Nodes three apart do not
    /// interact, so every third node is perturbed at once.
    fn hessian(&self, x: &[f64]) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let n = self.cells.dim();
        let m = self.last - self.first;
        let mut diag = vec![DMatrix::zeros(n, n); m];
        let mut upper = vec![DMatrix::zeros(n, n); m.saturating_sub(1)];
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; x.len()];
        let mut gm = vec![0.0; x.len()];
        for colour in 0..3 {
            for k in 0..n {
                let nodes: Vec<usize> = (self.first..self.last)
                    .filter(|j| (j - self.first) % 3 == colour)
                    .collect();
                if nodes.is_empty() {
                    continue;
                }
                let step = |j: usize| 1e-5 * (1.0 + x[j * n + k].abs());
                for &j in &nodes {
                    xp[j * n + k] = x[j * n + k] + step(j);
                }
                self.cells.gradient(&xp, &mut gp);
                for &j in &nodes {
                    xp[j * n + k] = x[j * n + k] - step(j);
                }
                self.cells.gradient(&xp, &mut gm);
                for &j in &nodes {
                    xp[j * n + k] = x[j * n + k];
                    let s = 2.0 * step(j);
                    let col = j - self.first;
                    for r in 0..n {
                        diag[col][(r, k)] = (gp[j * n + r] - gm[j * n + r]) / s;
                        if col > 0 {
                            // row j-1, column j
                            upper[col - 1][(r, k)] = (gp[(j - 1) * n + r] - gm[(j - 1) * n + r]) / s;
                        }
                    }
                }
            }
        }
        // symmetrize
        for d in diag.iter_mut() {
            let s = (&*d + d.transpose()) * 0.5;
            *d = s;
        }
        (diag, upper)
    }

    fn run(&self, mut x: Vec<f64>) -> Result<Outcome> {
        let n = self.cells.dim();
        let m = self.last - self.first;
        let mut g = vec![0.0; x.len()];
        let mut f = self.cells.objective(&x);
        if !f.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        let mut gnorm = self.free_grad(&x, &mut g);
        let mut lambda = 1e-8;
        let mut iterations = 0;
        let mut stalled = 0;
        while gnorm > self.opts.g_tol && iterations < self.opts.max_iter && m > 0 {
            iterations += 1;
            let (diag, upper) = self.hessian(&x);
            let rhs: Vec<f64> = g[self.first * n..self.last * n].to_vec();
            let scale = diag
                .iter()
                .map(|d| d.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
                .fold(1e-12_f64, f64::max);
            let mut accepted = false;
            for _ in 0..30 {
                let Some(step) = solve_block_tridiagonal(&diag, &upper, lambda * scale, &rhs, n)
                else {
                    lambda = (lambda * 10.0).max(1e-8);
                    continue;
                };
                let slope: f64 = step.iter().zip(&rhs).map(|(s, g)| s * g).sum();
                if !(slope > 0.0) {
                    lambda = (lambda * 10.0).max(1e-8);
                    continue;
                }
                let mut alpha = 1.0;
                let mut trial = x.clone();
                for _ in 0..40 {
                    for (k, s) in step.iter().enumerate() {
                        trial[self.first * n + k] = x[self.first * n + k] + alpha * s;
                    }
                    let ft = self.cells.objective(&trial);
                    if ft.is_finite() && ft >= f + 1e-4 * alpha * slope {
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if accepted {
                    x = trial;
                    lambda = (lambda * if alpha == 1.0 { 0.1 } else { 2.0 }).max(1e-12);
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                stalled += 1;
                if stalled > 3 {
                    break;
                }
                continue;
            }
            let fnew = self.cells.objective(&x);
            if !fnew.is_finite() {
                return Err(Error::NonFiniteObjective);
            }
            f = fnew;
            gnorm = self.free_grad(&x, &mut g);
        }
        Ok(Outcome {
            x,
            objective: f,
            grad_norm: gnorm,
            iterations,
            converged: gnorm <= self.opts.g_tol,
        })
    }
}

/// Solves `(-H + shift I) s = g` for a block-tridiagonal symmetric `H` given
/// by its diagonal blocks and the blocks above the diagonal. `None` if the
/// shifted matrix is not positive definite.
fn solve_block_tridiagonal(
    diag: &[DMatrix<f64>],
    upper: &[DMatrix<f64>],
    shift: f64,
    rhs: &[f64],
    n: usize,
) -> Option<Vec<f64>> {
    let m = diag.len();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut chols: Vec<Cholesky<f64, nalgebra::Dyn>> = Vec::with_capacity(m);
    // couplings C_j = S_j^{-1} B_j with B_j = -(upper_j)
    let mut coupling: Vec<DMatrix<f64>> = Vec::with_capacity(m);
    let mut y: Vec<DVector<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut s = -&diag[j] + &eye * shift;
        let mut b = DVector::from_column_slice(&rhs[j * n..(j + 1) * n]);
        if j > 0 {
            let bprev = -&upper[j - 1];
            s -= bprev.transpose() * &coupling[j - 1];
            b -= bprev.transpose() * chols[j - 1].solve(&y[j - 1]);
        }
        let c = Cholesky::new(s)?;
        if j + 1 < m {
            coupling.push(c.solve(&(-&upper[j])));
        }
        y.push(b);
        chols.push(c);
    }
    let mut out = vec![0.0; m * n];
    let mut next: Option<DVector<f64>> = None;
    for j in (0..m).rev() {
        let mut v = chols[j].solve(&y[j]);
        if let Some(nx) = &next {
            v -= &coupling[j] * nx;
        }
        out[j * n..(j + 1) * n].copy_from_slice(v.as_slice());
        next = Some(v);
    }
    Some(out)
}

/// Maximizes the discretized truncated functional on `[a, T]` by damped
/// Newton ascent from `opts.starts` initial guesses and returns the best
/// stationary point.
///
/// With `MaxIterExceeded` the best iterate is still returned inside the error.
pub fn solve_truncated(
    problem: &Problem,
    horizon: f64,
    terminal: &Terminal,
    h: f64,
    opts: &SolverOptions,
) -> Result<Solution> {
    let ts = problem.timescale();
    let a = problem.a();
    if !ts.contains(horizon) || horizon <= a {
        return Err(Error::InvalidWindow { lo: a, hi: horizon });
    }
    let grid: Arc<SampleGrid> = problem.grid(ts.snap(horizon)?, h, &[])?;
    let n = problem.dim();
    let len = grid.len();
    let x_a = problem.x_a();
    let last = match terminal {
        Terminal::Free => len,
        Terminal::Pinned(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            len - 1
        }
    };
    let target = match terminal {
        Terminal::Pinned(v) => v.clone(),
        Terminal::Free => x_a.to_vec(),
    };
    let t = grid.nodes();
    let span = t[len - 1] - t[0];
    let mut base = Vec::with_capacity(len * n);
    for ti in t {
        let s = (ti - t[0]) / span;
        base.extend((0..n).map(|k| x_a[k] + s * (target[k] - x_a[k])));
    }
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|s| {
            let mut x = base.clone();
            if s > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(s as u64));
                for v in &mut x[n..last * n] {
                    *v += opts.spread * (1.0 + v.abs()) * rng.gen_range(-1.0..1.0);
                }
            }
            x
        })
        .collect();
    let ascent = Ascent {
        cells: Cells {
            problem,
            grid: &grid,
        },
        first: 1,
        last,
        opts: *opts,
    };
    let outcomes: Vec<Result<Outcome>> = starts.into_par_iter().map(|x| ascent.run(x)).collect();
    let mut best: Option<Outcome> = None;
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(o) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        (o.converged && !b.converged)
                            || (o.converged == b.converged && o.objective > b.objective)
                    }
                };
                if better {
                    best = Some(o);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.unwrap_or(Error::NonFiniteObjective));
    };
    let x = GridFunction::new(grid, n, best.x)?;
    let solution = Solution {
        trajectory: Trajectory::new(problem, x)?,
        objective: best.objective,
        grad_norm: best.grad_norm,
        iterations: best.iterations,
        converged: best.converged,
    };
    if solution.converged {
        Ok(solution)
    } else {
        Err(Error::MaxIterExceeded(Box::new(solution)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timescale::TimeScale;
    use crate::variational::{Lagrangian, PartialFn};

    fn lqr(ts: TimeScale) -> Problem {
        let d2: Arc<PartialFn> = Arc::new(|_, u, _, o| o[0] = -2.0 * u[0]);
        let d3: Arc<PartialFn> = Arc::new(|_, _, v, o| o[0] = -2.0 * v[0]);
        let l = Lagrangian::new(1, |_, u, v| -(v[0] * v[0] + u[0] * u[0]))
            .with_partials(Some(d2), Some(d3))
            .unwrap();
        Problem::new(ts, vec![1.0], l).unwrap()
    }

    /// `x_{j+1} - 3 x_j + x_{j-1} = 0`, `2 x_T - x_{T-1} = 0`, `x_0 = 1`.
    fn tridiagonal_oracle(horizon: usize) -> Vec<f64> {
        let m = horizon;
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for r in 0..m {
            if r + 1 < m {
                a[(r, r)] = -3.0;
                a[(r, r + 1)] = 1.0;
            } else {
                a[(r, r)] = 2.0;
            }
            if r > 0 {
                a[(r, r - 1)] = 1.0 * if r + 1 < m { 1.0 } else { -1.0 };
            } else {
                b[0] = -1.0;
            }
        }
        if m == 1 {
            b[0] = 1.0;
        }
        let sol = a.lu().solve(&b).unwrap();
        std::iter::once(1.0).chain(sol.iter().copied()).collect()
    }

    #[test]
    fn lqr_on_integers_matches_linear_recurrence() {
        let p = lqr(TimeScale::naturals());
        let s = solve_truncated(&p, 4.0, &Terminal::Free, 1.0, &SolverOptions::default()).unwrap();
        let oracle = tridiagonal_oracle(4);
        for (x, y) in s.trajectory.x().values().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn pinned_geodesic_is_a_line() {
        let d3: Arc<PartialFn> = Arc::new(|_, _, v, o| o[0] = -v[0] / (1.0 + v[0] * v[0]).sqrt());
        let l = Lagrangian::new(1, |_, _, v| -(1.0 + v[0] * v[0]).sqrt())
            .with_partials(None, Some(d3))
            .unwrap();
        let p = Problem::new(TimeScale::ray(0.0), vec![1.0], l).unwrap();
        let s = solve_truncated(&p, 2.0, &Terminal::Pinned(vec![2.0]), 0.1, &SolverOptions::default())
            .unwrap();
        assert!((s.objective + 2.0 * 1.25f64.sqrt()).abs() < 1e-9);
        for (t, x) in s.trajectory.x().times().iter().zip(s.trajectory.x().values()) {
            assert!((x - (1.0 + t / 2.0)).abs() < 1e-7);
        }
    }

    #[test]
    fn unbounded_objective_does_not_converge() {
        // (x^sigma)^2 is convex in x, so the maximization runs away
        let l = Lagrangian::new(1, |_, u, _| u[0] * u[0]);
        let p = Problem::new(TimeScale::naturals(), vec![1.0], l).unwrap();
        let opts = SolverOptions {
            max_iter: 20,
            ..SolverOptions::default()
        };
        let err = solve_truncated(&p, 3.0, &Terminal::Free, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::MaxIterExceeded(_) | Error::NonFiniteObjective));
    }
}
