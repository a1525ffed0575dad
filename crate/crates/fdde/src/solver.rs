//! Time stepping for the delay equation.
//!
//! [`integrate`] advances the Caputo-order equation with a fractional
//! Adams-Bashforth-Moulton predictor-corrector adapted to a delayed
//! argument: the grid step is nudged so the delay is an exact multiple of
//! it, making the delayed state an earlier sample rather than an
//! interpolation. One corrector pass per step, full memory by default (the
//! cost of a run is quadratic in the step count).
//!
//! [`reference_rk4`] is a classical fourth-order method-of-steps integrator
//! for the ordinary limit alpha = 1, kept deliberately independent of the
//! fractional scheme so the two can cross-check each other, and
//! [`mittag_leffler_1p`] evaluates the function that solves the scalar
//! linear test equation D^alpha x = lambda x.
//!
//! All memory sums accumulate oldest to newest in a fixed order, so a rerun
//! with the same configuration is bit-identical.

use crate::error::{Error, Result};
use crate::model::{rhs, HistoryFn, ModelParams};

/// Uniformly sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Time of the first sample.
    pub t0: f64,
    /// Step between consecutive samples, after any delay alignment.
    pub h: f64,
    /// Samples x(t0), x(t0 + h), x(t0 + 2h), ...
    pub xs: Vec<f64>,
    /// Set when integration stopped early because the state left the
    /// divergence threshold or became non-finite; the series is truncated
    /// at that point.
    pub divergent: bool,
}

impl TimeSeries {
    /// Time of sample i.
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Step-size and run-length configuration for the integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Requested step; the effective step divides tau exactly and is
    /// reported back through [`TimeSeries::h`].
    pub h: f64,
    /// Integration window is [0, t_end].
    pub t_end: f64,
    /// |x| beyond this truncates the run and flags it divergent.
    pub divergence_threshold: f64,
    /// Full memory when `None`; otherwise only the most recent `n` samples
    /// enter the memory sums. Truncation is an approximation and trades
    /// accuracy for linear cost on very long runs.
    pub memory_window: Option<usize>,
}

impl SolverConfig {
    pub fn new(h: f64, t_end: f64) -> Self {
        SolverConfig { h, t_end, divergence_threshold: 1e8, memory_window: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("step must be positive and finite, got {}", self.h)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be positive and finite, got {}",
                self.t_end
            )));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::Config(format!(
                "divergence threshold must be positive, got {}",
                self.divergence_threshold
            )));
        }
        if self.memory_window == Some(0) {
            return Err(Error::Config("memory window must hold at least one sample".into()));
        }
        Ok(())
    }
}

/// Largest number of steps a single run may take.
const MAX_STEPS: usize = 20_000_000;

/// Aligns the step with the delay. Returns the effective step and the
/// delay expressed in samples; the offset is zero only for tau = 0.
pub fn commensurate_step(tau: f64, h: f64) -> (f64, usize) {
    if tau == 0.0 {
        return (h, 0);
    }
    let m = (tau / h).round().max(1.0) as usize;
    (tau / m as f64, m)
}

fn steps_for(t_end: f64, h: f64) -> Result<usize> {
    // the grid runs to the first multiple of h at or past t_end
    let n = (t_end / h - 1e-9).ceil();
    if n < 1.0 {
        return Err(Error::Config(format!("window [0, {t_end}] is shorter than one step {h}")));
    }
    if n > MAX_STEPS as f64 {
        return Err(Error::Config(format!(
            "{n:.0} steps requested, limit is {MAX_STEPS}"
        )));
    }
    Ok(n as usize)
}

/// Integrates the delay equation from its history with the fractional
/// Adams-Bashforth-Moulton scheme.
///
/// The predictor is the fractional rectangle rule, the corrector the
/// fractional trapezoid with one pass. For tau > 0 the delayed argument of
/// the predictor stage is the same earlier sample the corrector uses; for
/// tau = 0 the predictor value itself stands in, and the stored stage value
/// is refreshed from the corrected state.
pub fn integrate(
    params: &ModelParams,
    history: &HistoryFn,
    config: &SolverConfig,
) -> Result<TimeSeries> {
    params.validate()?;
    config.validate()?;
    if !history.covers(params.tau) {
        return Err(Error::Config("history does not cover [-tau, 0]".into()));
    }
    let (h, m) = commensurate_step(params.tau, config.h);
    let n_steps = steps_for(config.t_end, h)?;
    let alpha = params.alpha;

    // Kernel weights depend only on the age n - j of each sample: c backs
    // the predictor, d the corrector for ages >= 1 (age 0 and the newest
    // point carry scalar weights handled in the loop).
    let mut c = Vec::with_capacity(n_steps);
    let mut d = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let kf = k as f64;
        c.push((kf + 1.0).powf(alpha) - kf.powf(alpha));
        d.push(
            (kf + 2.0).powf(alpha + 1.0) + kf.powf(alpha + 1.0)
                - 2.0 * (kf + 1.0).powf(alpha + 1.0),
        );
    }
    let wp = h.powf(alpha) / gamma(alpha + 1.0);
    let wc = h.powf(alpha) / gamma(alpha + 2.0);

    let x0 = history.eval(0.0);
    let mut xs = Vec::with_capacity(n_steps + 1);
    let mut fs = Vec::with_capacity(n_steps + 1);
    xs.push(x0);
    fs.push(rhs(params, x0, if m == 0 { x0 } else { history.eval(-params.tau) }));
    let mut divergent = false;

    for next in 1..=n_steps {
        let n = next - 1;
        let lagged = if m == 0 {
            None
        } else if next >= m {
            Some(xs[next - m])
        } else {
            Some(history.eval(next as f64 * h - params.tau))
        };
        let lo = config.memory_window.map_or(0, |w| next.saturating_sub(w));

        let mut acc = 0.0;
        for (f, w) in fs[lo..=n].iter().zip(c[..=n - lo].iter().rev()) {
            acc += f * w;
        }
        let x_pred = x0 + wp * acc;
        let f_pred = rhs(params, x_pred, lagged.unwrap_or(x_pred));

        let mut acc = 0.0;
        if n >= 1 {
            let lo1 = lo.max(1);
            for (f, w) in fs[lo1..=n].iter().zip(d[..=n - lo1].iter().rev()) {
                acc += f * w;
            }
        }
        if lo == 0 {
            let nf = n as f64;
            let a0 = nf.powf(alpha + 1.0) - (nf - alpha) * (nf + 1.0).powf(alpha);
            acc += a0 * fs[0];
        }
        let x_new = x0 + wc * (f_pred + acc);

        if !x_new.is_finite() {
            divergent = true;
            break;
        }
        xs.push(x_new);
        fs.push(rhs(params, x_new, lagged.unwrap_or(x_new)));
        if x_new.abs() > config.divergence_threshold {
            divergent = true;
            break;
        }
    }

    Ok(TimeSeries { t0: 0.0, h, xs, divergent })
}

/// Classical RK4 with method of steps, valid only for alpha = 1. Delayed
/// stage values come from cubic Lagrange interpolation of the computed
/// grid (linear on the first few points of a run, before four samples
/// exist).
pub fn reference_rk4(
    params: &ModelParams,
    history: &HistoryFn,
    config: &SolverConfig,
) -> Result<TimeSeries> {
    params.validate()?;
    config.validate()?;
    if params.alpha != 1.0 {
        return Err(Error::Domain(format!(
            "the reference integrator handles alpha = 1 only, got {}",
            params.alpha
        )));
    }
    if !history.covers(params.tau) {
        return Err(Error::Config("history does not cover [-tau, 0]".into()));
    }
    let (h, m) = commensurate_step(params.tau, config.h);
    let n_steps = steps_for(config.t_end, h)?;
    let tau = params.tau;

    let x0 = history.eval(0.0);
    let mut xs = Vec::with_capacity(n_steps + 1);
    xs.push(x0);
    let mut divergent = false;

    let delayed = |xs: &[f64], t: f64| {
        if t <= 0.0 {
            history.eval(t)
        } else {
            interp_cubic(xs, h, t)
        }
    };

    for n in 0..n_steps {
        let tn = n as f64 * h;
        let x = xs[n];
        let x_new = if m == 0 {
            let k1 = rhs(params, x, x);
            let s2 = x + 0.5 * h * k1;
            let k2 = rhs(params, s2, s2);
            let s3 = x + 0.5 * h * k2;
            let k3 = rhs(params, s3, s3);
            let s4 = x + h * k3;
            let k4 = rhs(params, s4, s4);
            x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        } else {
            let d1 = delayed(&xs, tn - tau);
            let d2 = delayed(&xs, tn + 0.5 * h - tau);
            let d4 = delayed(&xs, tn + h - tau);
            let k1 = rhs(params, x, d1);
            let k2 = rhs(params, x + 0.5 * h * k1, d2);
            let k3 = rhs(params, x + 0.5 * h * k2, d2);
            let k4 = rhs(params, x + h * k3, d4);
            x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        };
        if !x_new.is_finite() {
            divergent = true;
            break;
        }
        xs.push(x_new);
        if x_new.abs() > config.divergence_threshold {
            divergent = true;
            break;
        }
    }

    Ok(TimeSeries { t0: 0.0, h, xs, divergent })
}

// Cubic Lagrange interpolation on the uniform grid t_k = k h, stencil
// centered on the bracketing interval and clamped at the ends; falls back
// to linear while fewer than four samples exist.
fn interp_cubic(xs: &[f64], h: f64, t: f64) -> f64 {
    let n = xs.len();
    debug_assert!(n >= 1);
    if n == 1 {
        return xs[0];
    }
    let u = t / h;
    let i = (u.floor() as isize).clamp(0, n as isize - 2) as usize;
    if n < 4 {
        let s = u - i as f64;
        return xs[i] * (1.0 - s) + xs[i + 1] * s;
    }
    let s0 = (i as isize - 1).clamp(0, n as isize - 4) as usize;
    let du = u - s0 as f64;
    let mut val = 0.0;
    for (k, &xk) in xs[s0..s0 + 4].iter().enumerate() {
        let mut w = 1.0;
        for j in 0..4 {
            if j != k {
                w *= (du - j as f64) / (k as f64 - j as f64);
            }
        }
        val += w * xk;
    }
    val
}

const ML_MAX_TERMS: usize = 600;

/// One-parameter Mittag-Leffler function,
/// E_alpha(z) = sum_k z^k / Gamma(alpha k + 1).
///
/// Plain truncated series with term-magnitude stopping, evaluated through
/// logarithms to postpone overflow. Accepted domain is alpha in (0, 1] and
/// |z| <= 5; outside it the series needs too many terms or sheds digits to
/// cancellation, and a domain error is returned instead of a wrong number.
/// Accuracy degrades toward the corner of the box where the series
/// alternates with large terms; expect absolute errors up to about 1e-4 at
/// alpha = 0.5, z = -5, and near machine precision for |z| <= 1.
pub fn mittag_leffler_1p(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !z.is_finite() || z.abs() > 5.0 {
        return Err(Error::Domain(format!("argument must satisfy |z| <= 5, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let ln_abs_z = z.abs().ln();
    let mut sum = 0.0f64;
    let mut prev = f64::INFINITY;
    for k in 0..ML_MAX_TERMS {
        let kf = k as f64;
        let mag = (kf * ln_abs_z - ln_gamma(alpha * kf + 1.0)).exp();
        if !mag.is_finite() {
            return Err(Error::Domain(format!(
                "series term overflowed at k = {k} for alpha = {alpha}, z = {z}"
            )));
        }
        sum += if z < 0.0 && k % 2 == 1 { -mag } else { mag };
        if k >= 4 && mag < prev && mag <= f64::EPSILON * sum.abs().max(1e-3) {
            return Ok(sum);
        }
        prev = mag;
    }
    Err(Error::Domain(format!(
        "series did not converge within {ML_MAX_TERMS} terms for alpha = {alpha}, z = {z}"
    )))
}

// Lanczos approximation with g = 7 and 9 coefficients, about 1e-13
// relative accuracy over the positive axis; the reflection formula covers
// arguments below one half. Callers in this crate only need x > 0.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x)
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let xm1 = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (xm1 + i as f64 + 1.0);
    }
    let t = xm1 + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (xm1 + 0.5) * t.ln() - t + acc.ln()
}

fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}
