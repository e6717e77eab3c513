//! Finitely described unbounded time scales.
//!
//! A [`TimeScale`] is an ordered union of closed intervals, finite point sets
//! and exactly one unbounded tail (a continuous ray or an arithmetic
//! progression). That restriction keeps the forward jump `sigma`, backward
//! jump `rho` and graininess `mu` exactly computable.

mod dsl;
mod grid;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{NodeKind, SampleGrid};

/// Absolute membership tolerance used at segment endpoints and progression
/// members. It is scaled by `max(1, |t|)` so that large progressions keep
/// recognising their own members.
pub const TOL_MEM: f64 = 1e-12;

pub(crate) fn tol_at(t: f64) -> f64 {
    TOL_MEM * t.abs().max(1.0)
}

/// One piece of a time scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Closed interval `[lo, hi]`; `lo == hi` is a single point.
    Interval { lo: f64, hi: f64 },
    /// Finite, strictly increasing list of isolated points.
    Points { points: Vec<f64> },
    /// Continuous ray `[start, +inf)`.
    Ray { start: f64 },
    /// `{start, start + step, start + 2 step, ...}`.
    Arith { start: f64, step: f64 },
}

impl Segment {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Segment::Interval { lo, hi }
    }

    pub fn points(points: impl Into<Vec<f64>>) -> Self {
        Segment::Points {
            points: points.into(),
        }
    }

    pub fn ray(start: f64) -> Self {
        Segment::Ray { start }
    }

    pub fn arith(start: f64, step: f64) -> Self {
        Segment::Arith { start, step }
    }

    pub fn min(&self) -> f64 {
        match self {
            Segment::Interval { lo, .. } => *lo,
            Segment::Points { points } => points[0],
            Segment::Ray { start } | Segment::Arith { start, .. } => *start,
        }
    }

    /// Largest element, `None` for the unbounded tails.
    pub fn max(&self) -> Option<f64> {
        match self {
            Segment::Interval { hi, .. } => Some(*hi),
            Segment::Points { points } => points.last().copied(),
            Segment::Ray { .. } | Segment::Arith { .. } => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.max().is_none()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTimeScale(m));
        match self {
            Segment::Interval { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return bad(format!("interval({lo}, {hi}) needs finite lo <= hi"));
                }
            }
            Segment::Points { points } => {
                if points.is_empty() {
                    return bad("points() needs at least one point".into());
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return bad("points must be finite".into());
                }
                if points.windows(2).any(|w| w[1] - w[0] <= tol_at(w[1])) {
                    return bad("points must be strictly increasing".into());
                }
            }
            Segment::Ray { start } => {
                if !start.is_finite() {
                    return bad("ray start must be finite".into());
                }
            }
            Segment::Arith { start, step } => {
                if !start.is_finite() || !step.is_finite() || *step <= 0.0 {
                    return bad(format!("arith({start}, {step}) needs a positive finite step"));
                }
            }
        }
        Ok(())
    }
}

/// Left/right density of a point with respect to the jump operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Dense,
    Scattered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointClass {
    pub left: Density,
    pub right: Density,
}

impl PointClass {
    pub fn is_isolated(&self) -> bool {
        self.left == Density::Scattered && self.right == Density::Scattered
    }

    pub fn is_dense(&self) -> bool {
        self.left == Density::Dense && self.right == Density::Dense
    }
}

/// Where a member sits inside its segment.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Site {
    IntervalLo,
    IntervalHi,
    IntervalInterior,
    IntervalSingleton,
    Point(usize),
    RayStart,
    RayInterior,
    Arith(u64),
}

/// An unbounded closed subset of the reals with `sup = +inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeScale {
    segments: Vec<Segment>,
}

impl TimeScale {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidTimeScale("no segments".into()));
        }
        for s in &segments {
            s.validate()?;
        }
        let last = segments.len() - 1;
        for (i, s) in segments.iter().enumerate() {
            if s.is_unbounded() != (i == last) {
                return Err(Error::InvalidTimeScale(
                    "exactly one unbounded segment (ray or arith) is required, and it must come last"
                        .into(),
                ));
            }
        }
        for w in segments.windows(2) {
            let prev_max = w[0].max().expect("bounded");
            let next_min = w[1].min();
            if next_min - prev_max <= tol_at(next_min) {
                return Err(Error::InvalidTimeScale(format!(
                    "segments must be disjoint and ordered: {prev_max} is not below {next_min}"
                )));
            }
        }
        Ok(TimeScale { segments })
    }

    /// Parses the textual form, e.g. `union(interval(0,1), points(2,3), ray(5))`.
    pub fn parse(src: &str) -> Result<Self> {
        dsl::parse(src)
    }

    /// The continuous half line `[start, +inf)`.
    pub fn ray(start: f64) -> Self {
        TimeScale::new(vec![Segment::ray(start)]).expect("valid ray")
    }

    /// `{start, start + step, ...}`; `arith(0, 1)` is the non-negative integers.
    pub fn arith(start: f64, step: f64) -> Result<Self> {
        TimeScale::new(vec![Segment::arith(start, step)])
    }

    pub fn naturals() -> Self {
        TimeScale::arith(0.0, 1.0).expect("valid progression")
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Left endpoint `a = min T`.
    pub fn a(&self) -> f64 {
        self.segments[0].min()
    }

    /// True if the scale has no continuous piece.
    pub fn is_purely_scattered(&self) -> bool {
        self.segments.iter().all(|s| match s {
            Segment::Interval { lo, hi } => lo == hi,
            Segment::Points { .. } | Segment::Arith { .. } => true,
            Segment::Ray { .. } => false,
        })
    }

    fn locate(&self, t: f64) -> Option<(usize, Site)> {
        if !t.is_finite() {
            return None;
        }
        let tol = tol_at(t);
        for (i, seg) in self.segments.iter().enumerate() {
            if t < seg.min() - tol {
                return None;
            }
            let site = match seg {
                Segment::Interval { lo, hi } => {
                    if t > hi + tol {
                        None
                    } else if lo == hi {
                        Some(Site::IntervalSingleton)
                    } else if (t - lo).abs() <= tol {
                        Some(Site::IntervalLo)
                    } else if (t - hi).abs() <= tol {
                        Some(Site::IntervalHi)
                    } else {
                        Some(Site::IntervalInterior)
                    }
                }
                Segment::Points { points } => {
                    let j = points.partition_point(|p| *p < t);
                    [j.checked_sub(1), Some(j)]
                        .into_iter()
                        .flatten()
                        .filter(|&k| k < points.len())
                        .find(|&k| (points[k] - t).abs() <= tol)
                        .map(Site::Point)
                }
                Segment::Ray { start } => Some(if (t - start).abs() <= tol {
                    Site::RayStart
                } else {
                    Site::RayInterior
                }),
                Segment::Arith { start, step } => {
                    let k = ((t - start) / step).round().max(0.0);
                    let member = start + k * step;
                    ((member - t).abs() <= tol).then_some(Site::Arith(k as u64))
                }
            };
            if let Some(site) = site {
                return Some((i, site));
            }
        }
        None
    }

    fn locate_or_err(&self, t: f64) -> Result<(usize, Site)> {
        self.locate(t).ok_or(Error::NotInTimeScale(t))
    }

    /// Membership test, exact up to [`TOL_MEM`].
    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_some()
    }

    /// The stored value of the member nearest to `t` (endpoints and
    /// progression members are returned exactly).
    pub fn snap(&self, t: f64) -> Result<f64> {
        let (i, site) = self.locate_or_err(t)?;
        Ok(match (&self.segments[i], site) {
            (Segment::Interval { lo, .. }, Site::IntervalLo | Site::IntervalSingleton) => *lo,
            (Segment::Interval { hi, .. }, Site::IntervalHi) => *hi,
            (Segment::Points { points }, Site::Point(j)) => points[j],
            (Segment::Ray { start }, Site::RayStart) => *start,
            (Segment::Arith { start, step }, Site::Arith(k)) => start + k as f64 * step,
            _ => t,
        })
    }

    fn next_min(&self, i: usize) -> f64 {
        self.segments[i + 1].min()
    }

    fn prev_max(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|p| self.segments[p].max())
    }

    /// Forward jump: `inf { s in T : s > t }`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let (i, site) = self.locate_or_err(t)?;
        Ok(match (&self.segments[i], site) {
            (_, Site::IntervalHi | Site::IntervalSingleton) => self.next_min(i),
            (Segment::Points { points }, Site::Point(j)) => match points.get(j + 1) {
                Some(p) => *p,
                None => self.next_min(i),
            },
            (Segment::Arith { step, .. }, Site::Arith(_)) => t + step,
            _ => t,
        })
    }

    /// Backward jump: `sup { s in T : s < t }`, with `rho(a) = a`.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let (i, site) = self.locate_or_err(t)?;
        let first = self.segments[0].min();
        let before = |fallback: f64| self.prev_max(i).unwrap_or(fallback);
        Ok(match (&self.segments[i], site) {
            (_, Site::IntervalLo | Site::IntervalSingleton | Site::RayStart) => before(first),
            (Segment::Points { points }, Site::Point(j)) => {
                if j > 0 {
                    points[j - 1]
                } else {
                    before(first)
                }
            }
            (Segment::Arith { step, .. }, Site::Arith(k)) => {
                if k > 0 {
                    t - step
                } else {
                    before(first)
                }
            }
            _ => t,
        })
    }

    /// Graininess `sigma(t) - t`.
    pub fn mu(&self, t: f64) -> Result<f64> {
        let (i, site) = self.locate_or_err(t)?;
        if let (Segment::Arith { step, .. }, Site::Arith(_)) = (&self.segments[i], site) {
            return Ok(*step);
        }
        let s = self.sigma(t)?;
        Ok((s - t).max(0.0))
    }

    pub fn classify(&self, t: f64) -> Result<PointClass> {
        let s = self.sigma(t)?;
        let r = self.rho(t)?;
        let side = |scattered: bool| {
            if scattered {
                Density::Scattered
            } else {
                Density::Dense
            }
        };
        Ok(PointClass {
            left: side(r < t),
            right: side(s > t),
        })
    }

    /// Smallest member `>= t` (for `t` below `a` this is `a`).
    pub fn next_member_at_or_after(&self, t: f64) -> f64 {
        let tol = tol_at(t);
        for seg in &self.segments {
            if let Some(m) = seg.max() {
                if m < t - tol {
                    continue;
                }
            }
            if t <= seg.min() + tol {
                return seg.min();
            }
            return match seg {
                Segment::Interval { .. } | Segment::Ray { .. } => t,
                Segment::Points { points } => {
                    let j = points.partition_point(|p| *p < t - tol);
                    points[j]
                }
                Segment::Arith { start, step } => {
                    let k = ((t - start) / step - TOL_MEM).ceil().max(0.0);
                    let m = start + k * step;
                    if m < t - tol {
                        m + step
                    } else {
                        m
                    }
                }
            };
        }
        unreachable!("the last segment is unbounded")
    }

    /// Steps forward from a member: `sigma(t)` at right-scattered points,
    /// otherwise `t + h` clipped to the end of the continuous piece.
    pub fn step_forward(&self, t: f64, h: f64) -> Result<f64> {
        let (i, site) = self.locate_or_err(t)?;
        let s = self.sigma(t)?;
        if s > t {
            return Ok(s);
        }
        Ok(match (&self.segments[i], site) {
            (Segment::Interval { hi, .. }, _) => (t + h).min(*hi),
            _ => t + h,
        })
    }

    /// Uniform-ish grid over `[lo, hi]` (see [`SampleGrid`]).
    pub fn build_grid(&self, lo: f64, hi: f64, h: f64) -> Result<SampleGrid> {
        SampleGrid::build(self, lo, hi, h, &[])
    }

    /// Like [`TimeScale::build_grid`] but every member listed in `breaks`
    /// becomes a node as well.
    pub fn build_grid_with_breaks(
        &self,
        lo: f64,
        hi: f64,
        h: f64,
        breaks: &[f64],
    ) -> Result<SampleGrid> {
        SampleGrid::build(self, lo, hi, h, breaks)
    }
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Interval { lo, hi } => format!("interval({lo}, {hi})"),
                Segment::Points { points } => {
                    let p: Vec<String> = points.iter().map(|p| p.to_string()).collect();
                    format!("points({})", p.join(", "))
                }
                Segment::Ray { start } => format!("ray({start})"),
                Segment::Arith { start, step } => format!("arith({start}, {step})"),
            })
            .collect();
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "union({})", parts.join(", "))
        }
    }
}
