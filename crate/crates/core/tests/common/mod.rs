#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tsvar::TimeScale;

/// A random hybrid scale starting at 0: an interval, a few isolated points,
/// a second interval and an arithmetic tail. Returns the scale and a window
/// end inside its bounded part.
pub fn mixed_scale(rng: &mut ChaCha8Rng) -> (TimeScale, f64) {
    let l1 = rng.gen_range(0.5..1.5);
    let p1 = l1 + rng.gen_range(0.2..0.6);
    let p2 = p1 + rng.gen_range(0.2..0.6);
    let c = p2 + rng.gen_range(0.2..0.6);
    let d = c + rng.gen_range(0.5..1.5);
    let s = d + rng.gen_range(0.3..0.8);
    let step = rng.gen_range(0.25..0.75);
    let src = format!(
        "union(interval(0, {l1}), points({p1}, {p2}), interval({c}, {d}), arith({s}, {step}))"
    );
    let ts = TimeScale::parse(&src).expect("generated scale is valid");
    let end = ts.next_member_at_or_after(s + 3.0 * step);
    (ts, end)
}

/// Cubic with coefficients scaled so that `|p| <= 4` on `[0, width]`.
#[derive(Clone, Copy, Debug)]
pub struct Cubic([f64; 4]);

impl Cubic {
    pub fn random(rng: &mut ChaCha8Rng, width: f64) -> Cubic {
        let mut c = [0.0; 4];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = rng.gen_range(-1.0..1.0) / width.powi(k as i32);
        }
        Cubic(c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// Thomas algorithm for `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
pub fn tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Free-end truncation of `L = -((x^Delta)^2 + (x^sigma)^2)` on `{0, ..., T}`
/// with `x(0) = 1`: interior `x(t+1) - 3x(t) + x(t-1) = 0`, end `2x(T) = x(T-1)`.
pub fn lqr_z_oracle(horizon: usize) -> Vec<f64> {
    let n = horizon;
    let mut sub = vec![1.0; n];
    let mut diag = vec![-3.0; n];
    let mut sup = vec![1.0; n];
    let mut rhs = vec![0.0; n];
    rhs[0] = -1.0;
    sub[0] = 0.0;
    sup[n - 1] = 0.0;
    sub[n - 1] = -1.0;
    diag[n - 1] = 2.0;
    let mut x = vec![1.0];
    x.extend(tridiagonal(&sub, &diag, &sup, &rhs));
    x
}
