//! Natural cubic spline used by tabulated spectral densities.

use crate::error::{Result, ZenoError};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(ZenoError::InvalidConfig("spline abscissae and ordinates differ in length".into()));
        }
        if n < 4 {
            return Err(ZenoError::InvalidConfig(format!("spline needs at least 4 points, got {n}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(ZenoError::InvalidConfig("spline data must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ZenoError::InvalidConfig("spline abscissae must be strictly increasing".into()));
        }

        // tridiagonal system for interior second derivatives, m[0] = m[n-1] = 0
        let mut m = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            diag[i] = 2.0 * (h0 + h1);
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        // Thomas algorithm; sub- and super-diagonals are the interval widths
        for i in 2..n - 1 {
            let h = x[i] - x[i - 1];
            let w = h / diag[i - 1];
            diag[i] -= w * h;
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            let h1 = x[i + 1] - x[i];
            let upper = if i + 1 < n - 1 { h1 * m[i + 1] } else { 0.0 };
            m[i] = (rhs[i] - upper) / diag[i];
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn interval(&self, t: f64) -> usize {
        match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            i => (i - 1).min(self.x.len() - 2),
        }
    }

    /// Spline value; `None` outside the knot range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        Some(
            a * self.y[i]
                + b * self.y[i + 1]
                + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0,
        )
    }

    /// Second derivative of the spline (piecewise linear in t).
    pub fn second_derivative(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        Some(a * self.m[i] + (1.0 - a) * self.m[i + 1])
    }

    /// Exact integral of the spline over its whole domain.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let h = w[1] - w[0];
                0.5 * h * (self.y[i] + self.y[i + 1]) - h * h * h * (self.m[i] + self.m[i + 1]) / 24.0
            })
            .sum()
    }
}
