//! Monotone piecewise-cubic (Fritsch-Carlson) interpolation for tabulated data.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    /// Integral from xs[0] to xs[k].
    prefix: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid("table columns differ in length"));
        }
        if xs.len() < 2 {
            return Err(Error::invalid("table needs at least two rows"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("table abscissae must be strictly increasing"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("table contains non-finite values"));
        }
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let (d0, d1) = (secants[k - 1], secants[k]);
            if d0 * d1 <= 0.0 {
                slopes[k] = 0.0;
            } else {
                // weighted harmonic mean keeps each segment monotone
                let h0 = xs[k] - xs[k - 1];
                let h1 = xs[k + 1] - xs[k];
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                slopes[k] = (w0 + w1) / (w0 / d0 + w1 / d1);
            }
        }
        let mut out = MonotoneCubic {
            xs,
            ys,
            slopes,
            prefix: vec![0.0; n],
        };
        for k in 0..n - 1 {
            out.prefix[k + 1] = out.prefix[k] + out.segment_integral(k, 1.0);
        }
        Ok(out)
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value, with linear extrapolation by the end slopes outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x_min() {
            return self.ys[0] + self.slopes[0] * (x - self.x_min());
        }
        if x >= self.x_max() {
            let n = self.xs.len();
            return self.ys[n - 1] + self.slopes[n - 1] * (x - self.x_max());
        }
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.x_min() {
            return self.slopes[0];
        }
        if x >= self.x_max() {
            return *self.slopes.last().unwrap();
        }
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.ys[k]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * self.slopes[k]
            + (-6.0 * t2 + 6.0 * t) * self.ys[k + 1]
            + (3.0 * t2 - 2.0 * t) * h * self.slopes[k + 1])
            / h
    }

    fn segment_integral(&self, k: usize, t: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        h * ((t - t3 + 0.5 * t4) * self.ys[k]
            + (0.5 * t2 - 2.0 * t3 / 3.0 + 0.25 * t4) * h * self.slopes[k]
            + (t3 - 0.5 * t4) * self.ys[k + 1]
            + (-t3 / 3.0 + 0.25 * t4) * h * self.slopes[k + 1])
    }

    /// Exact integral of the interpolant from `x_min()` to `x`, for `x` inside the table.
    pub fn integral_from_start(&self, x: f64) -> f64 {
        let x = x.clamp(self.x_min(), self.x_max());
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        self.prefix[k] + self.segment_integral(k, (x - self.xs[k]) / h)
    }
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_data_nodes_and_monotone_segments() {
        let xs: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let p = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.eval(*x) - y).abs() < 1e-14);
        }
        let mut prev = p.eval(0.0);
        for k in 1..=1000 {
            let v = p.eval(k as f64 * 1e-3);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn integral_matches_quadrature() {
        let xs: Vec<f64> = (0..21).map(|k| k as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|s| s * (1.0 - s)).collect();
        let p = MonotoneCubic::new(xs, ys).unwrap();
        for &x in &[0.13, 0.5, 0.77, 1.0] {
            // split at the nodes so Simpson never straddles a kink
            let mut q = 0.0;
            let mut a = 0.0;
            for &b in p.xs().iter().skip(1) {
                let b = b.min(x);
                if b > a {
                    q += adaptive_simpson(&|s| p.eval(s), a, b, 1e-14);
                    a = b;
                }
            }
            assert!((p.integral_from_start(x) - q).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let xs: Vec<f64> = (0..21).map(|k| k as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|s| (3.0 * s).sin()).collect();
        let p = MonotoneCubic::new(xs, ys).unwrap();
        for &x in &[0.11, 0.42, 0.93] {
            let h = 1e-6;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            assert!((p.derivative(x) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_unsorted_table() {
        assert!(MonotoneCubic::new(vec![0.0, 0.5, 0.2], vec![0.0; 3]).is_err());
        assert!(MonotoneCubic::new(vec![0.0], vec![0.0]).is_err());
    }
}
