//! Stability chart of the X2 equilibrium in the (q, delta) plane at fixed
//! p > 0, epsilon > 0.
//!
//! Two curve families organize the plane. Below delta = -q the equilibrium
//! is unstable for every delay (the linearization coefficients satisfy
//! a + b > 0 there). Above it, stability is decided by the sign of a - b,
//! which vanishes along a parabola-like arc with an upper branch g1 and a
//! lower branch g2 meeting at q = 9p^2/(16 eps): between the branches the
//! equilibrium is stable for every delay, outside them a critical delay
//! exists. The labels split the delay-dependent side into A (beyond the
//! reach of the curves) and Ci (threaded by them), and the stable side
//! into B (q < 0) and Cii (between the branches).

use crate::error::{Error, Result};

/// Region labels for the chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    /// Delay-dependent, q beyond the reach of the g curves.
    ADelayDependent,
    /// Stable for every delay: q < 0, between delta = -q and g1.
    BStableAllTau,
    /// Delay-dependent, alongside the g curves.
    CiDelayDependent,
    /// Stable for every delay, between g2 and g1.
    CiiStableAllTau,
    /// Below delta = -q: unstable at every delay.
    UnstableNoPositiveSum,
    /// The equilibrium equation has no real nonzero root.
    NoRealEquilibrium,
    /// Within tolerance of delta = -q, g1, or g2.
    OnBifurcationCurve,
}

impl RegionLabel {
    /// Short code used in file output.
    pub fn code(self) -> &'static str {
        match self {
            RegionLabel::ADelayDependent => "A",
            RegionLabel::BStableAllTau => "B",
            RegionLabel::CiDelayDependent => "CI",
            RegionLabel::CiiStableAllTau => "CII",
            RegionLabel::UnstableNoPositiveSum => "UNS",
            RegionLabel::NoRealEquilibrium => "NOEQ",
            RegionLabel::OnBifurcationCurve => "CURVE",
        }
    }
}

/// Characteristic abscissas and ordinates of the chart, all scaling like
/// p^2 / eps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionLandmarks {
    /// q at the minimum of g2.
    pub q0: f64,
    /// q where g2 returns to zero.
    pub q1: f64,
    /// Largest q for which the g curves exist; g1 and g2 meet here.
    pub q2: f64,
    /// Smallest q for which g2 is defined (its radicand differs from g1's
    /// below zero).
    pub q3: f64,
    /// g1 at q = 0.
    pub delta0: f64,
    /// Minimum value of g2, attained at q0.
    pub delta1: f64,
}

fn check_pe(p: f64, eps: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() && eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "the chart is defined for p > 0 and eps > 0, got p = {p}, eps = {eps}"
        )))
    }
}

fn check_point(q: f64, delta: f64) -> Result<()> {
    if q.is_finite() && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("plane point must be finite, got q = {q}, delta = {delta}")))
    }
}

// Shared radicand of the g curves; exact-arithmetic zeros at q = 9p^2/(16
// eps) pick up rounding dust, absorbed here so sqrt stays real.
fn radicand(p: f64, q: f64, eps: f64) -> f64 {
    let p2 = p * p;
    let r = 9.0 * p2 * p2 - 16.0 * p2 * q * eps;
    if r < 0.0 && r > -1e-12 * 9.0 * p2 * p2 {
        0.0
    } else {
        r
    }
}

/// Upper branch of the a - b = 0 curve. Defined for q <= 9p^2/(16 eps).
pub fn g1(p: f64, q: f64, eps: f64) -> Result<f64> {
    check_pe(p, eps)?;
    check_point(q, 0.0)?;
    let r = radicand(p, q, eps);
    if r < 0.0 {
        return Err(Error::Domain(format!(
            "g1 exists only for q <= 9 p^2 / (16 eps), got q = {q}"
        )));
    }
    Ok((15.0 * p * p - 16.0 * q * eps + 5.0 * r.sqrt()) / (8.0 * eps))
}

/// Lower branch of the a - b = 0 curve. Defined for
/// -p^2/eps <= q <= 9p^2/(16 eps).
pub fn g2(p: f64, q: f64, eps: f64) -> Result<f64> {
    check_pe(p, eps)?;
    check_point(q, 0.0)?;
    if q < -p * p / eps {
        return Err(Error::Domain(format!(
            "g2 exists only for q >= -p^2 / eps, got q = {q}"
        )));
    }
    let r = radicand(p, q, eps);
    if r < 0.0 {
        return Err(Error::Domain(format!(
            "g2 exists only for q <= 9 p^2 / (16 eps), got q = {q}"
        )));
    }
    Ok((15.0 * p * p - 16.0 * q * eps - 5.0 * r.sqrt()) / (8.0 * eps))
}

/// The chart's characteristic points.
pub fn landmarks(p: f64, eps: f64) -> Result<RegionLandmarks> {
    check_pe(p, eps)?;
    let p2 = p * p;
    Ok(RegionLandmarks {
        q0: 11.0 * p2 / (64.0 * eps),
        q1: 5.0 * p2 / (16.0 * eps),
        q2: 9.0 * p2 / (16.0 * eps),
        q3: -p2 / eps,
        delta0: 30.0 * p2 / (8.0 * eps),
        delta1: -p2 / (32.0 * eps),
    })
}

/// Half-width of the band around each curve mapped to
/// [`RegionLabel::OnBifurcationCurve`], measured vertically in delta.
pub const CURVE_TOL: f64 = 1e-9;

/// Labels one point of the (q, delta) plane.
pub fn classify_region(p: f64, eps: f64, q: f64, delta: f64) -> Result<RegionLabel> {
    check_pe(p, eps)?;
    check_point(q, delta)?;
    let disc = p * p + 4.0 * eps * (delta + q);
    if disc < 0.0 {
        return Ok(RegionLabel::NoRealEquilibrium);
    }
    let lm = landmarks(p, eps)?;
    if (delta + q).abs() <= CURVE_TOL {
        return Ok(RegionLabel::OnBifurcationCurve);
    }
    if q <= lm.q2 {
        if let Ok(up) = g1(p, q, eps) {
            if (delta - up).abs() <= CURVE_TOL {
                return Ok(RegionLabel::OnBifurcationCurve);
            }
        }
        if q >= lm.q3 {
            if let Ok(low) = g2(p, q, eps) {
                if (delta - low).abs() <= CURVE_TOL {
                    return Ok(RegionLabel::OnBifurcationCurve);
                }
            }
        }
    }
    if delta < -q {
        return Ok(RegionLabel::UnstableNoPositiveSum);
    }
    if q < 0.0 {
        // the stable band here runs from delta = -q up to g1 (g2 stays
        // below the line delta = -q wherever it exists)
        let up = g1(p, q, eps).expect("q < 0 is inside g1's domain");
        return Ok(if delta < up {
            RegionLabel::BStableAllTau
        } else {
            RegionLabel::CiDelayDependent
        });
    }
    if q <= lm.q2 {
        let up = g1(p, q, eps).expect("q <= q2 is inside g1's domain");
        let low = g2(p, q, eps).expect("0 <= q <= q2 is inside g2's domain");
        let inside = delta > low && delta < up;
        return Ok(if inside {
            RegionLabel::CiiStableAllTau
        } else if q <= lm.q1 {
            RegionLabel::CiDelayDependent
        } else {
            RegionLabel::ADelayDependent
        });
    }
    Ok(RegionLabel::ADelayDependent)
}

/// Rectangular sampling of the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub q_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    /// Row-major labels: the q index varies fastest.
    pub labels: Vec<RegionLabel>,
}

/// Labels an nq x ndelta rectangle of the plane.
pub fn sample_grid(
    p: f64,
    eps: f64,
    q_range: (f64, f64),
    delta_range: (f64, f64),
    nq: usize,
    ndelta: usize,
) -> Result<RegionGrid> {
    check_pe(p, eps)?;
    for (name, (lo, hi)) in [("q", q_range), ("delta", delta_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("{name} range must be finite with lo < hi, got ({lo}, {hi})")));
        }
    }
    if nq < 2 || ndelta < 2 {
        return Err(Error::Config(format!("grid needs at least 2 points per axis, got {nq} x {ndelta}")));
    }
    let q_values = linspace(q_range.0, q_range.1, nq);
    let delta_values = linspace(delta_range.0, delta_range.1, ndelta);
    let mut labels = Vec::with_capacity(nq * ndelta);
    for &dv in &delta_values {
        for &qv in &q_values {
            labels.push(classify_region(p, eps, qv, dv)?);
        }
    }
    Ok(RegionGrid { q_values, delta_values, labels })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    v[n - 1] = hi;
    v
}
