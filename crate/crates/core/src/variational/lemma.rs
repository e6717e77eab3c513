//! Numerical probe for the fundamental lemma: if `g` is not identically zero
//! on a window, build a variation `eta` with `eta(a) = 0` and
//! `int g eta^sigma Delta t > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timescale::{tol_at, TimeScale};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LemmaConfig {
    /// `|g| <= tol_zero` counts as zero.
    pub tol_zero: f64,
    /// Trapezoid subintervals used on the support of a bump.
    pub refine: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig {
            tol_zero: 1e-10,
            refine: 64,
        }
    }
}

/// Shape of the constructed variation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eta {
    /// `scale (t - lo)(hi - t)` on `[lo, hi]`, zero elsewhere.
    Bump { lo: f64, hi: f64, scale: f64 },
    /// `value` at the single point `at` (up to the membership tolerance),
    /// zero elsewhere.
    PointMass { at: f64, value: f64 },
    /// `value` at `at`, decaying linearly to zero at `tail_end` along the
    /// continuous piece that starts there.
    PointMassWithTail { at: f64, value: f64, tail_end: f64 },
}

impl Eta {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Eta::Bump { lo, hi, scale } => {
                if (lo..=hi).contains(&t) {
                    scale * (t - lo) * (hi - t)
                } else {
                    0.0
                }
            }
            Eta::PointMass { at, value } => {
                if (t - at).abs() <= tol_at(at) {
                    value
                } else {
                    0.0
                }
            }
            Eta::PointMassWithTail {
                at,
                value,
                tail_end,
            } => {
                if (at..=tail_end).contains(&t) {
                    value * (1.0 - (t - at) / (tail_end - at))
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// First sampled point with `|g| > tol_zero`.
    pub t0: f64,
    pub eta: Eta,
    /// `int_a^b g eta^sigma Delta t`.
    pub integral: f64,
}

fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n.max(2);
    let w = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|k| f(lo + k as f64 * w)).sum();
    w * (0.5 * (f(lo) + f(hi)) + inner)
}

/// Halves `[lo, hi]` towards `anchor` until `integral` turns positive.
fn shrink_until_positive(
    anchor: f64,
    mut lo: f64,
    mut hi: f64,
    integral: impl Fn(f64, f64) -> f64,
) -> Option<(f64, f64, f64)> {
    for _ in 0..80 {
        let v = integral(lo, hi);
        if v > 0.0 {
            return Some((lo, hi, v));
        }
        lo = anchor - 0.5 * (anchor - lo);
        hi = anchor + 0.5 * (hi - anchor);
        if hi - lo <= 0.0 {
            break;
        }
    }
    None
}

/// Scans `[a, b]` (sampled with step `h` on continuous pieces) for a point
/// where `g` is non-zero and builds the corresponding witness.
///
/// - dense `t0`: a parabola bump on a run of samples where `g` keeps its sign;
/// - right-scattered `t0` with `sigma(t0)` right-scattered: a point mass
///   `eta(sigma(t0)) = g(t0)`, integral `mu(t0) g(t0)^2`;
/// - right-scattered `t0` with `sigma(t0)` right-dense: a bump starting at
///   `sigma(t0)` when `g` is non-zero there, otherwise the point mass with a
///   short linear tail.
///
/// Returns `None` when `|g| <= tol_zero` on every sample before `b`.
pub fn fundamental_lemma_probe(
    ts: &TimeScale,
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    h: f64,
    cfg: &LemmaConfig,
) -> Result<Option<Witness>> {
    if !(a < b) || !ts.contains(a) || !ts.contains(b) {
        return Err(Error::InvalidWindow { lo: a, hi: b });
    }
    let grid = ts.build_grid(a, b, h)?;
    let x = grid.nodes();
    let mu = grid.mu();
    let n = x.len();
    let gv: Vec<f64> = x.iter().map(|&t| g(t)).collect();
    if let Some(k) = gv.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(x[k]));
    }
    let Some(i) = (0..n - 1).find(|&i| gv[i].abs() > cfg.tol_zero) else {
        return Ok(None);
    };
    let t0 = x[i];
    let g0 = gv[i];
    let bump_integral = |scale: f64| {
        move |lo: f64, hi: f64| {
            trapezoid(|t| g(t) * scale * (t - lo) * (hi - t), lo, hi, cfg.refine)
        }
    };
    // index of the node closing the continuous piece that starts at node j
    let piece_end = |j: usize| {
        let mut k = j;
        while k + 1 < n && mu[k] == 0.0 {
            k += 1;
        }
        k
    };

    if mu[i] == 0.0 {
        let sign = g0.signum();
        let same = |j: usize| gv[j].abs() > cfg.tol_zero && gv[j].signum() == sign;
        let mut lo = i;
        while lo > 0 && mu[lo - 1] == 0.0 && same(lo - 1) {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < n && mu[hi] == 0.0 && same(hi + 1) {
            hi += 1;
        }
        let l = if lo == i && i > 0 && mu[i - 1] == 0.0 {
            0.5 * (x[i - 1] + x[i])
        } else {
            x[lo]
        };
        let r = if hi == i { 0.5 * (x[i] + x[i + 1]) } else { x[hi] };
        let Some((lo, hi, v)) = shrink_until_positive(t0, l, r, bump_integral(g0)) else {
            return Ok(None);
        };
        return Ok(Some(Witness {
            t0,
            eta: Eta::Bump { lo, hi, scale: g0 },
            integral: v,
        }));
    }

    let j = i + 1;
    let t1 = x[j];
    let point_mass = mu[i] * g0 * g0;
    if j == n - 1 || mu[j] > 0.0 {
        return Ok(Some(Witness {
            t0,
            eta: Eta::PointMass { at: t1, value: g0 },
            integral: point_mass,
        }));
    }
    let end = x[piece_end(j)];
    let reach = end.min(t1 + 8.0 * h);
    let g1 = gv[j];
    if g1.abs() > cfg.tol_zero {
        if let Some((lo, hi, v)) = shrink_until_positive(t1, t1, reach, bump_integral(g1)) {
            return Ok(Some(Witness {
                t0,
                eta: Eta::Bump { lo, hi, scale: g1 },
                integral: v,
            }));
        }
    }
    let tail = |_: f64, hi: f64| {
        point_mass
            + trapezoid(
                |t| g(t) * g0 * (1.0 - (t - t1) / (hi - t1)),
                t1,
                hi,
                cfg.refine,
            )
    };
    Ok(shrink_until_positive(t1, t1, reach, tail).map(|(_, hi, v)| Witness {
        t0,
        eta: Eta::PointMassWithTail {
            at: t1,
            value: g0,
            tail_end: hi,
        },
        integral: v,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_function_has_no_witness() {
        let ts = TimeScale::parse("union(interval(0,1), arith(2,1))").unwrap();
        let w = fundamental_lemma_probe(&ts, &|_| 0.0, 0.0, 10.0, 0.01, &LemmaConfig::default());
        assert_eq!(w.unwrap(), None);
    }

    #[test]
    fn isolated_point_mass_on_integers() {
        let ts = TimeScale::naturals();
        let g = |t: f64| if t == 3.0 { 2.0 } else { 0.0 };
        let w = fundamental_lemma_probe(&ts, &g, 0.0, 10.0, 1.0, &LemmaConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(w.t0, 3.0);
        assert_eq!(w.eta, Eta::PointMass { at: 4.0, value: 2.0 });
        assert_eq!(w.integral, 4.0);
    }

    #[test]
    fn tent_on_ray_gives_bump() {
        let ts = TimeScale::ray(0.0);
        let g = |t: f64| (1.0 - (t - 5.0).abs()).max(0.0);
        let w = fundamental_lemma_probe(&ts, &g, 0.0, 10.0, 0.01, &LemmaConfig::default())
            .unwrap()
            .unwrap();
        assert!(w.integral > 0.0);
        let Eta::Bump { lo, hi, .. } = w.eta else { panic!("{w:?}") };
        assert!(lo >= 4.0 - 1e-9 && hi <= 6.0 + 1e-9);
    }

    #[test]
    fn scattered_into_dense_uses_tail() {
        // g vanishes on the ray, so the jump into it needs the tail form
        let ts = TimeScale::parse("union(points(0), ray(1))").unwrap();
        let g = |t: f64| if t < 0.5 { -3.0 } else { 0.0 };
        let w = fundamental_lemma_probe(&ts, &g, 0.0, 4.0, 0.1, &LemmaConfig::default())
            .unwrap()
            .unwrap();
        assert!(matches!(w.eta, Eta::PointMassWithTail { at, .. } if at == 1.0));
        assert!((w.integral - 9.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_window() {
        let ts = TimeScale::naturals();
        assert!(matches!(
            fundamental_lemma_probe(&ts, &|_| 1.0, 3.0, 3.0, 1.0, &LemmaConfig::default()),
            Err(Error::InvalidWindow { .. })
        ));
    }
}
