use std::fmt;
use std::sync::Arc;

use super::Lagrangian;
use crate::calculus::GridFunction;
use crate::error::{Error, Result};
use crate::timescale::{SampleGrid, TimeScale};

/// `int_a^inf L(t, x^sigma, x^Delta) Delta t -> max` subject to `x(a) = x_a`.
#[derive(Clone, Debug)]
pub struct Problem {
    ts: TimeScale,
    x_a: Vec<f64>,
    lagrangian: Lagrangian,
}

impl Problem {
    pub fn new(ts: TimeScale, x_a: Vec<f64>, lagrangian: Lagrangian) -> Result<Self> {
        if x_a.len() != lagrangian.dim() {
            return Err(Error::DimensionMismatch {
                expected: lagrangian.dim(),
                got: x_a.len(),
            });
        }
        Ok(Problem { ts, x_a, lagrangian })
    }

    pub fn timescale(&self) -> &TimeScale {
        &self.ts
    }

    pub fn a(&self) -> f64 {
        self.ts.a()
    }

    pub fn x_a(&self) -> &[f64] {
        &self.x_a
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    pub fn dim(&self) -> usize {
        self.x_a.len()
    }

    /// Grid over `[a, hi]` with the listed members forced in as nodes.
    pub fn grid(&self, hi: f64, h: f64, breaks: &[f64]) -> Result<Arc<SampleGrid>> {
        Ok(Arc::new(
            self.ts.build_grid_with_breaks(self.a(), hi, h, breaks)?,
        ))
    }

    /// Grid over `[a, hi']` where `hi'` is one step past `last`, so every node
    /// up to `last` has a forward neighbour.
    pub fn grid_past(&self, last: f64, h: f64, breaks: &[f64]) -> Result<Arc<SampleGrid>> {
        let last = self.ts.snap(last)?;
        let hi = self.ts.step_forward(last, h)?;
        let mut b = breaks.to_vec();
        b.push(last);
        self.grid(hi, h, &b)
    }
}

/// A closed-form path `t -> x(t) in R^n`, evaluated on demand so horizons can
/// grow without bound.
#[derive(Clone)]
pub struct Path {
    dim: usize,
    f: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>,
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Path").field("dim", &self.dim).finish()
    }
}

impl Path {
    pub fn new(dim: usize, f: impl Fn(f64, &mut [f64]) + Send + Sync + 'static) -> Self {
        Path {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Path::new(1, move |t, out| out[0] = f(t))
    }

    pub fn constant(value: Vec<f64>) -> Self {
        Path::new(value.len(), move |_, out| out.copy_from_slice(&value))
    }

    pub fn zero(dim: usize) -> Self {
        Path::new(dim, |_, out| out.fill(0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.f)(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        (self.f)(t, out)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Path, s: f64) -> Path {
        let (a, b) = (self.clone(), other.clone());
        Path::new(self.dim, move |t, out| {
            a.eval_into(t, out);
            let p = b.eval(t);
            for (o, q) in out.iter_mut().zip(p) {
                *o += s * q;
            }
        })
    }

    pub fn sample(&self, grid: Arc<SampleGrid>) -> Result<GridFunction> {
        GridFunction::from_fn(grid, self.dim, |t, out| self.eval_into(t, out))
    }
}

/// An admissible path sampled on a grid that starts at `a`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    x: GridFunction,
}

pub(crate) fn admissibility_tol(x_a: &[f64]) -> f64 {
    1e-12 * x_a.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

impl Trajectory {
    pub fn new(problem: &Problem, x: GridFunction) -> Result<Self> {
        if x.dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: x.dim(),
            });
        }
        if x.is_empty() || (x.grid().lo() - problem.a()).abs() > 1e-12 * problem.a().abs().max(1.0)
        {
            return Err(Error::InadmissiblePath {
                expected: problem.x_a().to_vec(),
                got: vec![],
            });
        }
        let x0 = x.value(0);
        let tol = admissibility_tol(problem.x_a());
        if x0.iter().zip(problem.x_a()).any(|(a, b)| (a - b).abs() > tol) {
            return Err(Error::InadmissiblePath {
                expected: problem.x_a().to_vec(),
                got: x0.to_vec(),
            });
        }
        Ok(Trajectory { x })
    }

    pub fn from_path(problem: &Problem, path: &Path, grid: Arc<SampleGrid>) -> Result<Self> {
        Trajectory::new(problem, path.sample(grid)?)
    }

    pub fn x(&self) -> &GridFunction {
        &self.x
    }

    pub fn grid(&self) -> &Arc<SampleGrid> {
        self.x.grid()
    }

    pub fn into_inner(self) -> GridFunction {
        self.x
    }
}
