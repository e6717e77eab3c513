use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::timescale::SampleGrid;

/// A vector-valued function sampled on (a prefix of) a [`SampleGrid`].
///
/// Besides the node values it may carry
/// - left limits at junction nodes (right-scattered nodes that end a
///   continuous piece), where rd-continuous functions such as `x^Delta` or
///   `x^sigma` jump;
/// - an overhang value at `sigma` of the last grid node when that node is
///   right-scattered, so forward differences are available there.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<SampleGrid>,
    dim: usize,
    values: Vec<f64>,
    left: BTreeMap<usize, Vec<f64>>,
    overhang: Option<Vec<f64>>,
}

impl GridFunction {
    /// Wraps row-major node values (`dim` entries per node). Fewer rows than
    /// grid nodes is allowed: the function is then defined on a prefix.
    pub fn new(grid: Arc<SampleGrid>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 || values.len() / dim > grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * dim.max(1),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(grid.nodes()[k / dim]));
        }
        Ok(GridFunction {
            grid,
            dim,
            values,
            left: BTreeMap::new(),
            overhang: None,
        })
    }

    /// Samples `f` at every node, and at `sigma` of the last node when that
    /// node is right-scattered.
    pub fn from_fn(
        grid: Arc<SampleGrid>,
        dim: usize,
        f: impl Fn(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; grid.len() * dim];
        for (t, out) in grid.nodes().iter().zip(values.chunks_mut(dim)) {
            f(*t, out);
        }
        let mut gf = GridFunction::new(grid, dim, values)?;
        if gf.grid.mu().last().is_some_and(|&m| m > 0.0) {
            let ts = gf.grid.sigma_of_last();
            let mut v = vec![0.0; dim];
            f(ts, &mut v);
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(ts));
            }
            gf.overhang = Some(v);
        }
        Ok(gf)
    }

    pub fn scalar_fn(grid: Arc<SampleGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::from_fn(grid, 1, |t, out| out[0] = f(t))
    }

    pub fn with_overhang(mut self, value: Vec<f64>) -> Result<Self> {
        if value.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: value.len(),
            });
        }
        self.overhang = Some(value);
        Ok(self)
    }

    /// Records the left limit at a junction node.
    pub fn with_left_limit(mut self, node: usize, value: Vec<f64>) -> Result<Self> {
        if value.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: value.len(),
            });
        }
        if node < self.len() && self.grid.is_junction(node) {
            self.left.insert(node, value);
        }
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<SampleGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes the function is defined on.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.grid.nodes()[..self.len()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Left limit at node `i`: differs from [`GridFunction::value`] only at
    /// junctions where one was recorded.
    pub fn left_value(&self, i: usize) -> &[f64] {
        self.left
            .get(&i)
            .map(Vec::as_slice)
            .unwrap_or_else(|| self.value(i))
    }

    pub fn left_limits(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.left.iter().map(|(i, v)| (*i, v.as_slice()))
    }

    pub fn overhang(&self) -> Option<&[f64]> {
        self.overhang.as_deref()
    }

    /// Value at `sigma(t_i)` when it is available.
    pub(crate) fn forward_value(&self, i: usize) -> Option<&[f64]> {
        if i + 1 < self.len() {
            Some(self.value(i + 1))
        } else if i + 1 == self.grid.len() {
            self.overhang()
        } else {
            None
        }
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.chunks(self.dim).map(|v| v[k]).collect()
    }

    /// `max_i max_k |f_k(t_i)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    /// Pointwise combination of functions on a shared grid. The result lives
    /// on the common domain; left limits and the overhang are propagated
    /// wherever the inputs provide them.
    pub fn zip_map(
        inputs: &[&GridFunction],
        out_dim: usize,
        f: impl Fn(f64, &[&[f64]], &mut [f64]),
    ) -> Result<GridFunction> {
        let first = inputs.first().ok_or(Error::GridMismatch)?;
        if inputs.iter().any(|g| !g.same_grid(first)) {
            return Err(Error::GridMismatch);
        }
        let len = inputs.iter().map(|g| g.len()).min().unwrap_or(0);
        let grid = first.grid.clone();
        let nodes = grid.nodes();
        let mut values = vec![0.0; len * out_dim];
        let mut args: Vec<&[f64]> = Vec::with_capacity(inputs.len());
        for i in 0..len {
            args.clear();
            args.extend(inputs.iter().map(|g| g.value(i)));
            f(nodes[i], &args, &mut values[i * out_dim..(i + 1) * out_dim]);
        }
        let mut out = GridFunction::new(grid.clone(), out_dim, values)?;

        let junctions: std::collections::BTreeSet<usize> = inputs
            .iter()
            .flat_map(|g| g.left.keys().copied())
            .filter(|&i| i < len)
            .collect();
        for i in junctions {
            args.clear();
            args.extend(inputs.iter().map(|g| g.left_value(i)));
            let mut v = vec![0.0; out_dim];
            f(nodes[i], &args, &mut v);
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(nodes[i]));
            }
            out.left.insert(i, v);
        }

        if len == grid.len() {
            let over: Option<Vec<&[f64]>> = inputs.iter().map(|g| g.overhang()).collect();
            if let Some(over) = over {
                let mut v = vec![0.0; out_dim];
                f(grid.sigma_of_last(), &over, &mut v);
                if v.iter().all(|x| x.is_finite()) {
                    out.overhang = Some(v);
                }
            }
        }
        Ok(out)
    }

    /// Pointwise map of a single function.
    pub fn map(&self, out_dim: usize, f: impl Fn(f64, &[f64], &mut [f64])) -> Result<GridFunction> {
        GridFunction::zip_map(&[self], out_dim, |t, a, out| f(t, a[0], out))
    }

    /// Restricts the domain to the first `len` nodes.
    pub fn truncate(&self, len: usize) -> GridFunction {
        let len = len.min(self.len());
        let mut out = self.clone();
        out.values.truncate(len * self.dim);
        out.left.retain(|i, _| *i < len);
        if len < self.grid.len() {
            out.overhang = None;
        }
        out
    }

    pub(crate) fn from_parts(
        grid: Arc<SampleGrid>,
        dim: usize,
        values: Vec<f64>,
        left: BTreeMap<usize, Vec<f64>>,
        overhang: Option<Vec<f64>>,
    ) -> Result<GridFunction> {
        let mut out = GridFunction::new(grid, dim, values)?;
        out.left = left;
        out.overhang = overhang;
        Ok(out)
    }
}

/// Scalar helpers used by the identity checks and the tests.
impl GridFunction {
    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_scalar_pair(other)?;
        GridFunction::zip_map(&[self, other], 1, |_, a, out| out[0] = a[0][0] * a[1][0])
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        GridFunction::zip_map(&[self, other], self.dim, |_, a, out| {
            for k in 0..out.len() {
                out[k] = a[0][k] + a[1][k];
            }
        })
    }

    pub fn scale(&self, alpha: f64) -> Result<GridFunction> {
        self.map(self.dim, |_, a, out| {
            for k in 0..out.len() {
                out[k] = alpha * a[k];
            }
        })
    }

    /// Inner product of two vector functions of the same dimension.
    pub fn dot(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        GridFunction::zip_map(&[self, other], 1, |_, a, out| {
            out[0] = a[0].iter().zip(a[1]).map(|(x, y)| x * y).sum();
        })
    }

    fn check_scalar_pair(&self, other: &GridFunction) -> Result<()> {
        if self.dim != 1 || other.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim.max(other.dim),
            });
        }
        Ok(())
    }
}
