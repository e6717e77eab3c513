use serde::{Deserialize, Serialize};

use super::{delta, delta_integral, sigma_shift, GridFunction};
use crate::error::{Error, Result};

/// Max absolute residuals of the pointwise identities over a node set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointwiseResiduals {
    /// `f^sigma - f - mu f^Delta`
    pub shift: f64,
    /// `(fg)^Delta - f^Delta g^sigma - f g^Delta`
    pub product_sigma_g: f64,
    /// `(fg)^Delta - f^Delta g - f^sigma g^Delta`
    pub product_sigma_f: f64,
}

impl PointwiseResiduals {
    fn absorb(&mut self, shift: f64, pg: f64, pf: f64) {
        self.shift = self.shift.max(shift.abs());
        self.product_sigma_g = self.product_sigma_g.max(pg.abs());
        self.product_sigma_f = self.product_sigma_f.max(pf.abs());
    }

    pub fn max(&self) -> f64 {
        self.shift.max(self.product_sigma_g).max(self.product_sigma_f)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Residuals at right-scattered nodes.
    pub scattered: PointwiseResiduals,
    /// Residuals at dense sample nodes.
    pub dense: PointwiseResiduals,
    /// `int f^sigma g^Delta - ([fg] - int f^Delta g)` over the window.
    pub parts_sigma_first: f64,
    /// `int f g^Delta - ([fg] - int f^Delta g^sigma)` over the window.
    pub parts_sigma_second: f64,
    /// Window end used for the integration-by-parts checks.
    pub window_end: f64,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        self.scattered
            .max()
            .max(self.dense.max())
            .max(self.parts_sigma_first.abs())
            .max(self.parts_sigma_second.abs())
    }
}

/// Evaluates the shift formula, both product rules and both
/// integration-by-parts formulas for scalar `f`, `g` on a shared grid.
pub fn identity_pack(f: &GridFunction, g: &GridFunction) -> Result<IdentityReport> {
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim().max(g.dim()),
        });
    }
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let fd = delta(f)?;
    let gd = delta(g)?;
    let fs = sigma_shift(f)?;
    let gs = sigma_shift(g)?;
    let fg = f.mul(g)?;
    let fgd = delta(&fg)?;

    let grid = f.grid().clone();
    let n = [fd.len(), gd.len(), fs.len(), gs.len(), fgd.len()]
        .into_iter()
        .min()
        .unwrap_or(0);
    let mut report = IdentityReport::default();
    for i in 0..n {
        let mu = grid.mu()[i];
        let (fv, gv) = (f.value(i)[0], g.value(i)[0]);
        let (fdv, gdv) = (fd.value(i)[0], gd.value(i)[0]);
        let (fsv, gsv) = (fs.value(i)[0], gs.value(i)[0]);
        let pd = fgd.value(i)[0];
        let shift = fsv - fv - mu * fdv;
        let pg = pd - fdv * gsv - fv * gdv;
        let pf = pd - fdv * gv - fsv * gdv;
        if mu > 0.0 {
            report.scattered.absorb(shift, pg, pf);
        } else {
            report.dense.absorb(shift, pg, pf);
        }
    }

    // integration by parts on [t_0, t_{n-1}]
    let lo = grid.nodes()[0];
    let hi = grid.nodes()[n - 1];
    let boundary = fg.value(n - 1)[0] - fg.value(0)[0];
    let int = |h: &GridFunction| -> Result<f64> { Ok(delta_integral(h, lo, hi)?[0]) };
    let lhs7 = int(&fs.mul(&gd)?)?;
    let rhs7 = boundary - int(&fd.mul(g)?)?;
    let lhs8 = int(&f.mul(&gd)?)?;
    let rhs8 = boundary - int(&fd.mul(&gs)?)?;
    report.parts_sigma_first = lhs7 - rhs7;
    report.parts_sigma_second = lhs8 - rhs8;
    report.window_end = hi;
    Ok(report)
}
