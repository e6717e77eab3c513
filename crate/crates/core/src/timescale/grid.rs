use serde::{Deserialize, Serialize};

use super::{tol_at, Segment, TimeScale};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// A right-scattered member of the scale, stored exactly.
    ScatteredExact,
    /// A sample of a continuous piece.
    DenseSample,
}

/// Ordered evaluation nodes over a window `[lo, hi]` of a time scale.
///
/// Invariants:
/// - every right-scattered member in the window is a node, with
///   `mu = sigma(t) - t`, so the node after it is `sigma(t)` (unless it is the
///   last node);
/// - `mu[i] == 0` exactly when node `i + 1` lies on the same continuous piece;
/// - dense spacing never exceeds `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    nodes: Vec<f64>,
    mu: Vec<f64>,
    kind: Vec<NodeKind>,
    h: f64,
}

impl SampleGrid {
    pub(super) fn build(
        ts: &TimeScale,
        lo: f64,
        hi: f64,
        h: f64,
        breaks: &[f64],
    ) -> Result<SampleGrid> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::StepNotPositive(h));
        }
        let lo = ts.snap(lo)?;
        let hi = ts.snap(hi)?;
        if lo >= hi {
            return Err(Error::InvalidWindow { lo, hi });
        }
        let mut breaks: Vec<f64> = breaks
            .iter()
            .filter(|b| **b > lo && **b < hi)
            .map(|b| ts.snap(*b))
            .collect::<Result<_>>()?;
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|x, y| (*x - *y).abs() <= tol_at(*x));

        let mut nodes: Vec<f64> = Vec::new();
        let push = |t: f64, nodes: &mut Vec<f64>| {
            if nodes.last().map_or(true, |&last| t > last + tol_at(t)) {
                nodes.push(t);
            }
        };

        for seg in ts.segments() {
            if seg.min() > hi {
                break;
            }
            if seg.max().is_some_and(|m| m < lo) {
                continue;
            }
            match seg {
                Segment::Interval { lo: l, hi: r } => {
                    let a = l.max(lo);
                    let b = r.min(hi);
                    dense_piece(a, b, h, &breaks, |t| push(t, &mut nodes));
                }
                Segment::Ray { start } => {
                    let a = start.max(lo);
                    dense_piece(a, hi, h, &breaks, |t| push(t, &mut nodes));
                }
                Segment::Points { points } => {
                    for &p in points.iter().filter(|p| **p >= lo && **p <= hi) {
                        push(p, &mut nodes);
                    }
                }
                Segment::Arith { start, step } => {
                    let k0 = ((lo - start) / step).round().max(0.0) as u64;
                    let mut k = k0;
                    loop {
                        let t = start + k as f64 * step;
                        if t > hi + tol_at(hi) {
                            break;
                        }
                        if t >= lo - tol_at(lo) {
                            push(t, &mut nodes);
                        }
                        k += 1;
                    }
                }
            }
        }

        // pin the window ends to their canonical values
        if let Some(first) = nodes.first_mut() {
            *first = lo;
        }
        if let Some(last) = nodes.last_mut() {
            *last = hi;
        }

        let mut mu = Vec::with_capacity(nodes.len());
        let mut kind = Vec::with_capacity(nodes.len());
        for &t in &nodes {
            let m = ts.mu(t)?;
            mu.push(m);
            kind.push(if m > 0.0 {
                NodeKind::ScatteredExact
            } else {
                NodeKind::DenseSample
            });
        }
        Ok(SampleGrid { nodes, mu, kind, h })
    }

    /// A grid from explicit nodes and graininess, checked for consistency.
    /// Used for grids that are not windows of a [`TimeScale`] value.
    pub fn from_parts(nodes: Vec<f64>, mu: Vec<f64>, h: f64) -> Result<SampleGrid> {
        if nodes.len() != mu.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: mu.len(),
            });
        }
        if nodes.len() < 2 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidWindow {
                lo: nodes.first().copied().unwrap_or(f64::NAN),
                hi: nodes.last().copied().unwrap_or(f64::NAN),
            });
        }
        for i in 0..nodes.len() - 1 {
            let gap = nodes[i + 1] - nodes[i];
            if mu[i] > 0.0 && (gap - mu[i]).abs() > tol_at(nodes[i + 1]) * 16.0 {
                return Err(Error::InvalidTimeScale(format!(
                    "node {} has graininess {} but the next node is {} away",
                    nodes[i], mu[i], gap
                )));
            }
        }
        let kind = mu
            .iter()
            .map(|&m| {
                if m > 0.0 {
                    NodeKind::ScatteredExact
                } else {
                    NodeKind::DenseSample
                }
            })
            .collect();
        Ok(SampleGrid { nodes, mu, kind, h })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kind
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    /// `sigma` of the last node; equal to it when the window ends on a
    /// continuous piece.
    pub fn sigma_of_last(&self) -> f64 {
        self.hi() + self.mu.last().copied().unwrap_or(0.0)
    }

    /// True when node `i` is left-dense inside the grid (its predecessor is on
    /// the same continuous piece).
    pub fn left_dense(&self, i: usize) -> bool {
        i > 0 && self.mu[i - 1] == 0.0
    }

    /// Right-scattered node whose predecessor is on a continuous piece: the
    /// place where an rd-continuous function may jump.
    pub fn is_junction(&self, i: usize) -> bool {
        self.mu[i] > 0.0 && self.left_dense(i)
    }

    /// Index of the node equal to `t` (relative tolerance `1e-9`).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        let j = self.nodes.partition_point(|x| *x < t);
        [j.checked_sub(1), Some(j)]
            .into_iter()
            .flatten()
            .filter(|&k| k < self.nodes.len())
            .min_by(|&x, &y| {
                (self.nodes[x] - t)
                    .abs()
                    .total_cmp(&(self.nodes[y] - t).abs())
            })
            .filter(|&k| (self.nodes[k] - t).abs() <= tol)
            .ok_or(Error::NodeNotInGrid(t))
    }
}

/// Emits nodes of `[a, b]` split at `breaks`, each sub-piece cut into
/// `ceil(len / h)` equal cells.
fn dense_piece(a: f64, b: f64, h: f64, breaks: &[f64], mut emit: impl FnMut(f64)) {
    if a > b {
        return;
    }
    if a == b {
        emit(a);
        return;
    }
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    cuts.push(b);
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        let n = ((e - s) / h - 1e-9).ceil().max(1.0) as usize;
        for k in 0..n {
            emit(s + (e - s) * k as f64 / n as f64);
        }
    }
    emit(b);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_grid() {
        let g = TimeScale::naturals().build_grid(0.0, 5.0, 0.1).unwrap();
        assert_eq!(g.nodes(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(g.mu().iter().all(|&m| m == 1.0));
        assert!(g.kinds().iter().all(|&k| k == NodeKind::ScatteredExact));
    }

    #[test]
    fn ray_grid() {
        let g = TimeScale::ray(0.0).build_grid(0.0, 1.0, 0.25).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(g.mu().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn mixed_grid() {
        let ts = TimeScale::parse("union(interval(0,1), points(2), ray(3))").unwrap();
        let g = ts.build_grid(0.0, 3.0, 0.5).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0, 2.0, 3.0]);
        assert_eq!(g.mu(), &[0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(g.kinds()[2], NodeKind::ScatteredExact);
        assert_eq!(g.kinds()[4], NodeKind::DenseSample);
        assert!(g.is_junction(2));
        assert!(!g.is_junction(3));
    }

    #[test]
    fn last_node_keeps_true_mu() {
        let ts = TimeScale::parse("union(interval(0,1), ray(3))").unwrap();
        let g = ts.build_grid(0.0, 1.0, 0.5).unwrap();
        assert_eq!(g.mu().last(), Some(&2.0));
        assert_eq!(g.sigma_of_last(), 3.0);
    }

    #[test]
    fn breaks_become_nodes() {
        let g = TimeScale::ray(0.0)
            .build_grid_with_breaks(0.0, 1.0, 0.3, &[0.55])
            .unwrap();
        assert!(g.index_of(0.55).is_ok());
        assert!(g.nodes().windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-12));
    }

    #[test]
    fn grid_errors() {
        let ts = TimeScale::ray(0.0);
        assert!(matches!(ts.build_grid(0.0, 1.0, 0.0), Err(Error::StepNotPositive(_))));
        assert!(matches!(ts.build_grid(1.0, 1.0, 0.1), Err(Error::InvalidWindow { .. })));
        assert!(matches!(ts.build_grid(-1.0, 1.0, 0.1), Err(Error::NotInTimeScale(_))));
        let g = ts.build_grid(0.0, 1.0, 0.5).unwrap();
        assert!(matches!(g.index_of(0.3), Err(Error::NodeNotInGrid(_))));
    }
}
