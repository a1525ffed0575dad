//! The model: a scalar delay equation with cubic delayed feedback,
//!
//! ```text
//! D^a x(t) = delta x(t - tau) - epsilon x(t - tau)^3 - p x(t)^2 + q x(t)
//! ```
//!
//! where D^a is the Caputo derivative of order a in (0, 1]. This module
//! holds the parameter struct, the right-hand side, the equilibrium roots,
//! the linearization about an equilibrium, and the history functions the
//! integrators start from.

use crate::error::{Error, Result};

/// Parameters of the delay equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Caputo derivative order, in (0, 1].
    pub alpha: f64,
    /// Delay, nonnegative; zero gives the ordinary (memoryless) limit.
    pub tau: f64,
    /// Linear delayed-feedback gain.
    pub delta: f64,
    /// Cubic delayed-feedback gain.
    pub epsilon: f64,
    /// Quadratic instantaneous coefficient.
    pub p: f64,
    /// Linear instantaneous coefficient.
    pub q: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, tau: f64, delta: f64, epsilon: f64, p: f64, q: f64) -> Self {
        ModelParams { alpha, tau, delta, epsilon, p, q }
    }

    /// Same parameters with a different delay.
    pub fn with_tau(&self, tau: f64) -> Self {
        ModelParams { tau, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "tau must be finite and nonnegative, got {}",
                self.tau
            )));
        }
        for (name, v) in [
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("p", self.p),
            ("q", self.q),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which root of the equilibrium equation a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The origin.
    X1,
    /// The quadratic root (-p + sqrt(p^2 + 4 eps (delta + q))) / (2 eps).
    X2,
    /// The quadratic root (-p - sqrt(p^2 + 4 eps (delta + q))) / (2 eps).
    X3,
}

/// An equilibrium value together with its branch label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub branch: Branch,
    pub value: f64,
}

/// Coefficients of the linearization D^a xi = a xi(t) + b xi(t - tau)
/// about an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoeffs {
    /// Instantaneous coefficient, q - 2 p x*.
    pub a: f64,
    /// Delayed coefficient, delta - 3 eps x*^2.
    pub b: f64,
}

/// Right-hand side f(x, x_delayed) of the equation.
pub fn rhs(params: &ModelParams, x: f64, xd: f64) -> f64 {
    params.delta * xd - params.epsilon * xd * xd * xd - params.p * x * x + params.q * x
}

// Double roots of the quadratic arise at discriminant zero; clamp a sliver
// of negative rounding dust so they are not lost.
const DISC_CLAMP: f64 = -1e-14;

/// All distinct equilibria, origin first. Nonzero equilibria solve
/// eps u^2 + p u - (delta + q) = 0; a double root is reported once, as X2,
/// and a root that collides with the origin is dropped.
pub fn equilibria(params: &ModelParams) -> Vec<Equilibrium> {
    let ModelParams { delta, epsilon, p, q, .. } = *params;
    let mut out = vec![Equilibrium { branch: Branch::X1, value: 0.0 }];
    if epsilon == 0.0 {
        if p != 0.0 {
            let r = (delta + q) / p;
            if r != 0.0 {
                out.push(Equilibrium { branch: Branch::X2, value: r });
            }
        }
        return out;
    }
    let mut disc = p * p + 4.0 * epsilon * (delta + q);
    if (DISC_CLAMP..0.0).contains(&disc) {
        disc = 0.0;
    }
    if disc < 0.0 {
        return out;
    }
    let root = disc.sqrt();
    let x2 = (-p + root) / (2.0 * epsilon);
    let x3 = (-p - root) / (2.0 * epsilon);
    if x2 != 0.0 {
        out.push(Equilibrium { branch: Branch::X2, value: x2 });
    }
    if disc > 0.0 && x3 != 0.0 && x3 != x2 {
        out.push(Equilibrium { branch: Branch::X3, value: x3 });
    }
    out
}

/// Linearization coefficients about x*.
pub fn linearize(params: &ModelParams, x_star: f64) -> LinearCoeffs {
    LinearCoeffs {
        a: params.q - 2.0 * params.p * x_star,
        b: params.delta - 3.0 * params.epsilon * x_star * x_star,
    }
}

/// Initial data on [-tau, 0] for the integrators.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryFn {
    /// x(t) = value for every t <= 0.
    Constant(f64),
    /// Monotone piecewise-cubic interpolation through given samples.
    Sampled(SampledHistory),
}

impl HistoryFn {
    /// Value at time t <= 0 (sampled histories clamp outside their range).
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            HistoryFn::Constant(v) => *v,
            HistoryFn::Sampled(s) => s.eval(t),
        }
    }

    /// Whether the history is defined on all of [-tau, 0].
    pub fn covers(&self, tau: f64) -> bool {
        match self {
            HistoryFn::Constant(_) => true,
            HistoryFn::Sampled(s) => s.ts[0] <= -tau,
        }
    }
}

/// History given by samples at strictly increasing times ending at 0,
/// interpolated with the shape-preserving cubic of Fritsch and Carlson
/// (no overshoot between samples, C1 across knots).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledHistory {
    ts: Vec<f64>,
    xs: Vec<f64>,
    slopes: Vec<f64>,
}

impl SampledHistory {
    /// Builds the interpolant. Times must be finite, strictly increasing,
    /// and end exactly at 0; at least two samples are required.
    pub fn new(ts: Vec<f64>, xs: Vec<f64>) -> Result<Self> {
        if ts.len() != xs.len() {
            return Err(Error::Config(format!(
                "history has {} times but {} values",
                ts.len(),
                xs.len()
            )));
        }
        if ts.len() < 2 {
            return Err(Error::Config("history needs at least two samples".into()));
        }
        if ts.iter().chain(xs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("history samples must be finite".into()));
        }
        if ts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("history times must be strictly increasing".into()));
        }
        if *ts.last().unwrap() != 0.0 {
            return Err(Error::Config("history must end at t = 0".into()));
        }
        let slopes = pchip_slopes(&ts, &xs);
        Ok(SampledHistory { ts, xs, slopes })
    }

    /// Interpolated value; clamps to the end values outside [ts[0], 0].
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.xs[0];
        }
        if t >= self.ts[n - 1] {
            return self.xs[n - 1];
        }
        let i = self.ts.partition_point(|&tk| tk <= t) - 1;
        let h = self.ts[i + 1] - self.ts[i];
        let s = (t - self.ts[i]) / h;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        x0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * (s3 - 2.0 * s2 + s)
            + x1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * (s3 - s2)
    }
}

// Derivative values at the knots per Fritsch and Carlson: a weighted
// harmonic mean of adjacent secants interiorly (zero at local extrema),
// one-sided three-point estimates at the ends, limited so the cubic stays
// monotone on each interval.
fn pchip_slopes(ts: &[f64], xs: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let h: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = xs
        .windows(2)
        .zip(&h)
        .map(|(w, hk)| (w[1] - w[0]) / hk)
        .collect();
    if n == 2 {
        return vec![d[0], d[0]];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    m[0] = edge_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}
