//! One-dimensional interpolation used to resample speed sequences.
//!
//! The cubic spline uses not-a-knot end conditions, so it reproduces any cubic
//! polynomial exactly. Evaluation outside the knot range extends the first or
//! last polynomial piece.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Interpolant {
    Constant(f64),
    Linear { x: Vec<f64>, y: Vec<f64> },
    /// Single parabola through three points (the not-a-knot spline of 3 knots).
    Quadratic { x: [f64; 3], y: [f64; 3] },
    Cubic(CubicSpline),
}

impl Interpolant {
    /// Piecewise-linear interpolant with linear extension past the ends.
    pub fn linear(x: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(x, y)?;
        if x.len() == 1 {
            return Ok(Interpolant::Constant(y[0]));
        }
        Ok(Interpolant::Linear {
            x: x.to_vec(),
            y: y.to_vec(),
        })
    }

    /// Not-a-knot cubic spline. Falls back to lower order for fewer than
    /// four knots.
    pub fn cubic(x: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(x, y)?;
        Ok(match x.len() {
            1 => Interpolant::Constant(y[0]),
            2 => Interpolant::Linear {
                x: x.to_vec(),
                y: y.to_vec(),
            },
            3 => Interpolant::Quadratic {
                x: [x[0], x[1], x[2]],
                y: [y[0], y[1], y[2]],
            },
            _ => Interpolant::Cubic(CubicSpline::not_a_knot(x, y)),
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Interpolant::Constant(c) => *c,
            Interpolant::Linear { x, y } => {
                let i = segment(x, u);
                let t = (u - x[i]) / (x[i + 1] - x[i]);
                y[i] + t * (y[i + 1] - y[i])
            }
            Interpolant::Quadratic { x, y } => {
                let l0 = (u - x[1]) * (u - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
                let l1 = (u - x[0]) * (u - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
                let l2 = (u - x[0]) * (u - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
                y[0] * l0 + y[1] * l1 + y[2] * l2
            }
            Interpolant::Cubic(s) => s.eval(u),
        }
    }
}

fn check_knots(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "interpolation needs matching non-empty knots, got {} x and {} y",
            x.len(),
            y.len()
        )));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("interpolation knots must be strictly increasing".into()));
    }
    Ok(())
}

/// Index of the polynomial piece used for `u`, clamped to the end pieces.
fn segment(x: &[f64], u: f64) -> usize {
    let n = x.len();
    x.partition_point(|&k| k <= u).clamp(1, n - 1) - 1
}

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    fn not_a_knot(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        debug_assert!(n >= 4);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = y.windows(2).zip(&h).map(|(w, hi)| (w[1] - w[0]) / hi).collect();

        // Unknowns m[1..n-1]. The not-a-knot conditions (continuous third
        // derivative at x[1] and x[n-2]) are eliminated into the first and last
        // rows, leaving a tridiagonal system.
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
            rhs[r] = 6.0 * (d[i] - d[i - 1]);
        }
        // m0 = m1 (1 + h0/h1) - m2 h0/h1
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (1.0 + h0 / h1);
        sup[0] -= h0 * h0 / h1;
        // m[n-1] = m[n-2] (1 + hl/hp) - m[n-3] hl/hp
        let (hp, hl) = (h[n - 3], h[n - 2]);
        diag[k - 1] += hl * (1.0 + hl / hp);
        sub[k - 1] -= hl * hl / hp;

        let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        m[0] = m[1] * (1.0 + h0 / h1) - m[2] * h0 / h1;
        m[n - 1] = m[n - 2] * (1.0 + hl / hp) - m[n - 3] * hl / hp;

        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let i = segment(&self.x, u);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - u, u - x0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (self.y[i] / h - m0 * h / 6.0) * a
            + (self.y[i + 1] / h - m1 * h / 6.0) * b
    }
}

/// Thomas algorithm. Rows are `sub[r] x[r-1] + diag[r] x[r] + sup[r] x[r+1]`.
/// For `len == 2` the system is solved directly since the reduced first and
/// last rows may not be diagonally dominant.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let k = diag.len();
    if k == 1 {
        return vec![rhs[0] / diag[0]];
    }
    if k == 2 {
        let det = diag[0] * diag[1] - sup[0] * sub[1];
        return vec![
            (rhs[0] * diag[1] - sup[0] * rhs[1]) / det,
            (diag[0] * rhs[1] - sub[1] * rhs[0]) / det,
        ];
    }
    let mut c = vec![0.0; k];
    let mut g = vec![0.0; k];
    c[0] = sup[0] / diag[0];
    g[0] = rhs[0] / diag[0];
    for r in 1..k {
        let denom = diag[r] - sub[r] * c[r - 1];
        c[r] = if r + 1 < k { sup[r] / denom } else { 0.0 };
        g[r] = (rhs[r] - sub[r] * g[r - 1]) / denom;
    }
    let mut out = vec![0.0; k];
    out[k - 1] = g[k - 1];
    for r in (0..k - 1).rev() {
        out[r] = g[r] - c[r] * out[r + 1];
    }
    out
}
