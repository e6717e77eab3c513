use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type LagrangianFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;
pub type PartialFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// Default relative step for finite-difference partials.
pub const FD_STEP: f64 = 1e-6;

/// `L(t, u, v)` with `u = x^sigma`, `v = x^Delta`, plus its partial
/// gradients in `u` (`d2`) and `v` (`d3`). Missing analytic partials fall
/// back to central differences with step `fd_step * (1 + |arg|)`.
#[derive(Clone)]
pub struct Lagrangian {
    dim: usize,
    eval: Arc<LagrangianFn>,
    d2: Option<Arc<PartialFn>>,
    d3: Option<Arc<PartialFn>>,
    fd_step: f64,
}

impl fmt::Debug for Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lagrangian")
            .field("dim", &self.dim)
            .field("analytic_d2", &self.d2.is_some())
            .field("analytic_d3", &self.d3.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl Lagrangian {
    pub fn new(
        dim: usize,
        eval: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Lagrangian {
            dim,
            eval: Arc::new(eval),
            d2: None,
            d3: None,
            fd_step: FD_STEP,
        }
    }

    /// Attaches analytic partials after checking them against central
    /// differences on a fixed set of probe points.
    pub fn with_partials(
        mut self,
        d2: Option<Arc<PartialFn>>,
        d3: Option<Arc<PartialFn>>,
    ) -> Result<Self> {
        self.d2 = d2;
        self.d3 = d3;
        self.check_partials(64, 0x7e57)?;
        Ok(self)
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_partials(&self) -> (bool, bool) {
        (self.d2.is_some(), self.d3.is_some())
    }

    pub fn eval(&self, t: f64, u: &[f64], v: &[f64]) -> f64 {
        (self.eval)(t, u, v)
    }

    pub fn d2(&self, t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        match &self.d2 {
            Some(f) => f(t, u, v, out),
            None => self.fd_d2(t, u, v, out),
        }
    }

    pub fn d3(&self, t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        match &self.d3 {
            Some(f) => f(t, u, v, out),
            None => self.fd_d3(t, u, v, out),
        }
    }

    /// Central-difference gradient in `u`.
    pub fn fd_d2(&self, t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        let mut w = u.to_vec();
        for k in 0..self.dim {
            let d = self.fd_step * (1.0 + u[k].abs());
            w[k] = u[k] + d;
            let plus = self.eval(t, &w, v);
            w[k] = u[k] - d;
            let minus = self.eval(t, &w, v);
            w[k] = u[k];
            out[k] = (plus - minus) / (2.0 * d);
        }
    }

    /// Central-difference gradient in `v`.
    pub fn fd_d3(&self, t: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        let mut w = v.to_vec();
        for k in 0..self.dim {
            let d = self.fd_step * (1.0 + v[k].abs());
            w[k] = v[k] + d;
            let plus = self.eval(t, u, &w);
            w[k] = v[k] - d;
            let minus = self.eval(t, u, &w);
            w[k] = v[k];
            out[k] = (plus - minus) / (2.0 * d);
        }
    }

    /// Compares analytic partials with finite differences at `count` random
    /// points `t in [0, 10]`, `u, v in [-2, 2]^n`; the tolerance is
    /// `1e-4 (1 + |analytic|)`. Points where `L` is not finite are skipped.
    pub fn check_partials(&self, count: usize, seed: u64) -> Result<()> {
        if self.d2.is_none() && self.d3.is_none() {
            return Ok(());
        }
        let n = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        let (mut an, mut fd) = (vec![0.0; n], vec![0.0; n]);
        for _ in 0..count {
            let t = rng.gen_range(0.0..10.0);
            u.iter_mut().for_each(|x| *x = rng.gen_range(-2.0..2.0));
            v.iter_mut().for_each(|x| *x = rng.gen_range(-2.0..2.0));
            if !self.eval(t, &u, &v).is_finite() {
                continue;
            }
            let pairs: [(&'static str, &Option<Arc<PartialFn>>); 2] =
                [("d2", &self.d2), ("d3", &self.d3)];
            for (which, analytic) in pairs {
                let Some(f) = analytic else { continue };
                f(t, &u, &v, &mut an);
                if which == "d2" {
                    self.fd_d2(t, &u, &v, &mut fd);
                } else {
                    self.fd_d3(t, &u, &v, &mut fd);
                }
                for k in 0..n {
                    if !fd[k].is_finite() {
                        continue;
                    }
                    if !((an[k] - fd[k]).abs() <= 1e-4 * (1.0 + an[k].abs())) {
                        return Err(Error::PartialsMismatch {
                            which,
                            t,
                            analytic: an[k],
                            numeric: fd[k],
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(f: impl Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static) -> Option<Arc<PartialFn>> {
        Some(Arc::new(f))
    }

    #[test]
    fn fd_matches_closed_form() {
        let l = Lagrangian::new(1, |_, _, v| -(1.0 + v[0] * v[0]).sqrt());
        let mut out = [0.0];
        l.d3(0.0, &[0.0], &[1.0], &mut out);
        assert!((out[0] + 1.0 / 2f64.sqrt()).abs() < 1e-9);
        l.d2(0.0, &[0.0], &[1.0], &mut out);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn accepts_correct_partials() {
        let l = Lagrangian::new(1, |_, u, v| (u[0] - 1.0).powi(2) + 2.0 * v[0])
            .with_partials(
                arc(|_, u, _, o| o[0] = 2.0 * (u[0] - 1.0)),
                arc(|_, _, _, o| o[0] = 2.0),
            )
            .unwrap();
        assert_eq!(l.has_analytic_partials(), (true, true));
    }

    #[test]
    fn rejects_wrong_partials() {
        let err = Lagrangian::new(1, |_, u, _| u[0] * u[0])
            .with_partials(arc(|_, u, _, o| o[0] = 3.0 * u[0]), None)
            .unwrap_err();
        assert!(matches!(err, Error::PartialsMismatch { which: "d2", .. }));
    }
}
