//! Linearized stability analysis of the delay equation.
//!
//! The linearization about an equilibrium has the form
//!
//! ```text
//! D^alpha xi(t) = a xi(t) + b xi(t - tau)
//! ```
//!
//! whose characteristic equation is s^alpha = a + b exp(-s tau). Over the
//! (a, b) plane, away from the boundary lines b = -a and b = -|a|:
//!
//! * b < -|a|: asymptotically stable for tau below a critical delay and
//!   unstable beyond it (a pair of roots crosses the imaginary axis).
//! * b > -a: unstable for every delay.
//! * a < b < -a (only possible for a < 0): stable for every delay.
//!
//! [`crit_delay`] evaluates the closed form of the first crossing delay,
//! [`crossing_oracle`] finds the same point by bisection on the modulus
//! condition without using that formula, and [`classify_equilibrium`] wires
//! the classification to the model, cross-checking it against closed-form
//! parameter conditions where one applies.

use crate::error::{Error, Result};
use crate::model::{linearize, Branch, Equilibrium, ModelParams};
use std::f64::consts::{FRAC_PI_2, PI};

/// How an equilibrium responds to the delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityKind {
    /// Asymptotically stable no matter the delay.
    StableAllDelays,
    /// Unstable no matter the delay.
    UnstableAllDelays,
    /// Stable for tau < tau_star, unstable for tau > tau_star.
    DelayDependent { tau_star: f64 },
}

/// Where a verdict came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictSource {
    /// The sign classification of (a, b) alone.
    GeneralClassifier,
    /// A closed-form parameter condition applied and agreed with the
    /// general classifier.
    Theorem(TheoremId),
}

/// Verdict for one equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    pub source: VerdictSource,
}

/// Closed-form parameter conditions with a known verdict. Each names the
/// equilibrium branch it covers and the sign pattern of (epsilon, p) or the
/// inequality on delta + q that activates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremId {
    /// Origin, delta + q > 0: unstable for every delay.
    X1PositiveSum,
    /// Origin, delta + q < 0 and delta >= q: stable for every delay.
    X1StableSector,
    /// Origin, delta + q < 0 and delta < q: delay-dependent.
    X1DelayDependent,
    /// X2 with epsilon > 0, p > 0, 0 < -q < delta < -2q: stable for every
    /// delay.
    X2StableSector,
    /// X2 with epsilon > 0, p > 0, delta < -p^2/(32 eps), delta + q > 0:
    /// delay-dependent.
    X2DelayDependentPosP,
    /// X2 with epsilon > 0, p > 0, delta + q < 0: unstable for every delay.
    X2UnstablePosEps,
    /// X2 with epsilon < 0, p > 0, delta + q < 0: unstable for every delay.
    X2UnstableNegEpsPosP,
    /// X2 with epsilon > 0, p < 0, delta <= 3p^2/(4 eps) and a real root
    /// pair: delay-dependent.
    X2DelayDependentNegP,
    /// X2 with epsilon < 0, p < 0, delta + q < 0: unstable for every delay.
    X2UnstableNegEpsNegP,
}

// Coarse verdict classes, used to compare a theorem's claim with the
// general classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KindClass {
    Stable,
    Unstable,
    DelayDependent,
}

impl TheoremId {
    fn claims(self) -> KindClass {
        use TheoremId::*;
        match self {
            X1StableSector | X2StableSector => KindClass::Stable,
            X1PositiveSum | X2UnstablePosEps | X2UnstableNegEpsPosP | X2UnstableNegEpsNegP => {
                KindClass::Unstable
            }
            X1DelayDependent | X2DelayDependentPosP | X2DelayDependentNegP => {
                KindClass::DelayDependent
            }
        }
    }
}

fn class_of(kind: &StabilityKind) -> KindClass {
    match kind {
        StabilityKind::StableAllDelays => KindClass::Stable,
        StabilityKind::UnstableAllDelays => KindClass::Unstable,
        StabilityKind::DelayDependent { .. } => KindClass::DelayDependent,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

fn check_coeffs(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("coefficients must be finite, got a = {a}, b = {b}")))
    }
}

/// Half-width of the strip around the lines b = -a and b = -|a| where
/// classification is refused.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Classifies the linear delay equation by the signs of a and b. Errors
/// with [`Error::Boundary`] within [`BOUNDARY_TOL`] of a boundary line.
pub fn classify_linear(a: f64, b: f64, alpha: f64) -> Result<StabilityVerdict> {
    check_alpha(alpha)?;
    check_coeffs(a, b)?;
    if (b + a.abs()).abs() <= BOUNDARY_TOL || (b + a).abs() <= BOUNDARY_TOL {
        return Err(Error::Boundary(format!(
            "(a, b) = ({a}, {b}) lies within {BOUNDARY_TOL} of a classification boundary"
        )));
    }
    let kind = if b < -a.abs() {
        StabilityKind::DelayDependent { tau_star: crit_delay(a, b, alpha)? }
    } else if b > -a {
        StabilityKind::UnstableAllDelays
    } else {
        StabilityKind::StableAllDelays
    };
    Ok(StabilityVerdict { kind, source: VerdictSource::GeneralClassifier })
}

/// First delay at which a characteristic root pair reaches the imaginary
/// axis, for b < -|a|.
///
/// Writing s = i omega with omega > 0 and splitting the characteristic
/// equation into real and imaginary parts gives u = omega^alpha as a root
/// of u^2 - 2 a cos(alpha pi / 2) u + a^2 - b^2. Only the positive branch
/// survives (the root product a^2 - b^2 is negative here), and the delay
/// follows from the real part; the principal arccos is the correct branch
/// because sin(omega tau) = omega^alpha sin(alpha pi / 2) / (-b) >= 0.
pub fn crit_delay(a: f64, b: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_coeffs(a, b)?;
    if !(b < -a.abs()) {
        return Err(Error::NoCrossing(format!(
            "roots reach the imaginary axis only for b < -|a|, got a = {a}, b = {b}"
        )));
    }
    let theta = alpha * FRAC_PI_2;
    let (sin_t, cos_t) = theta.sin_cos();
    let radicand = b * b - a * a * sin_t * sin_t;
    let u = a * cos_t + radicand.sqrt();
    debug_assert!(u > 0.0, "b < -|a| forces the positive branch");
    let omega = u.powf(1.0 / alpha);
    let cos_arg = ((u * cos_t - a) / b).clamp(-1.0, 1.0);
    Ok(cos_arg.acos() / omega)
}

/// Imaginary-axis crossing found without the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingPoint {
    /// Crossing frequency, omega > 0.
    pub omega: f64,
    /// Smallest positive delay putting a root at +/- i omega.
    pub tau: f64,
}

/// Locates the imaginary-axis crossing by scanning and bisecting the
/// modulus condition |(i omega)^alpha - a| = |b|, then reading the delay
/// off the phase. Exists to cross-check [`crit_delay`] through an
/// independent route; the residual of the full characteristic equation is
/// verified before returning.
pub fn crossing_oracle(a: f64, b: f64, alpha: f64) -> Result<CrossingPoint> {
    check_alpha(alpha)?;
    check_coeffs(a, b)?;
    if !(b < -a.abs()) {
        return Err(Error::NoCrossing(format!(
            "roots reach the imaginary axis only for b < -|a|, got a = {a}, b = {b}"
        )));
    }
    let theta = alpha * FRAC_PI_2;
    let modulus_gap = |omega: f64| {
        let u = omega.powf(alpha);
        (u * theta.cos() - a).hypot(u * theta.sin()) - b.abs()
    };
    // The gap is negative at omega = 0 (it equals |a| - |b|) and grows
    // without bound, with a single sign change for b < -|a|.
    let omega_max = 2.0 * (a.abs() + b.abs()).powf(1.0 / alpha);
    let cells = 4096;
    let mut bracket = None;
    for i in 1..=cells {
        let w = omega_max * i as f64 / cells as f64;
        if modulus_gap(w) >= 0.0 {
            bracket = Some((omega_max * (i - 1) as f64 / cells as f64, w));
            break;
        }
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| Error::NoCrossing("no modulus crossing below the scan bound".into()))?;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if modulus_gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let omega = 0.5 * (lo + hi);
    let u = omega.powf(alpha);
    // exp(-i omega tau) = ((i omega)^alpha - a) / b, a unit complex number
    let re = (u * theta.cos() - a) / b;
    let im = u * theta.sin() / b;
    let phase = im.atan2(re);
    let mut tau = (-phase).rem_euclid(2.0 * PI) / omega;
    if tau == 0.0 {
        tau = 2.0 * PI / omega;
    }
    let (sin_wt, cos_wt) = (omega * tau).sin_cos();
    let residual = (u * theta.cos() - a - b * cos_wt).hypot(u * theta.sin() + b * sin_wt);
    if residual > 1e-9 * (1.0 + a.abs() + b.abs()) {
        return Err(Error::NoCrossing(format!(
            "characteristic residual {residual:.3e} at omega = {omega} is too large"
        )));
    }
    Ok(CrossingPoint { omega, tau })
}

/// The closed-form condition that covers these parameters at this branch,
/// if any.
fn theorem_for(params: &ModelParams, branch: Branch) -> Option<TheoremId> {
    use TheoremId::*;
    let ModelParams { delta, epsilon, p, q, .. } = *params;
    let sum = delta + q;
    match branch {
        Branch::X1 => {
            if sum > 0.0 {
                Some(X1PositiveSum)
            } else if sum < 0.0 && delta >= q {
                Some(X1StableSector)
            } else if sum < 0.0 {
                Some(X1DelayDependent)
            } else {
                None
            }
        }
        Branch::X2 => {
            if epsilon > 0.0 && p > 0.0 {
                if q < 0.0 && -q < delta && delta < -2.0 * q {
                    Some(X2StableSector)
                } else if sum > 0.0 && delta < -p * p / (32.0 * epsilon) {
                    Some(X2DelayDependentPosP)
                } else if sum < 0.0 {
                    Some(X2UnstablePosEps)
                } else {
                    None
                }
            } else if epsilon < 0.0 && p > 0.0 {
                if sum < 0.0 {
                    Some(X2UnstableNegEpsPosP)
                } else {
                    None
                }
            } else if epsilon > 0.0 && p < 0.0 {
                let disc = p * p + 4.0 * epsilon * sum;
                if delta <= 3.0 * p * p / (4.0 * epsilon) && disc > 0.0 {
                    Some(X2DelayDependentNegP)
                } else {
                    None
                }
            } else if epsilon < 0.0 && p < 0.0 {
                if sum < 0.0 {
                    Some(X2UnstableNegEpsNegP)
                } else {
                    None
                }
            } else {
                None
            }
        }
        Branch::X3 => None,
    }
}

/// Classifies one equilibrium of the full model. When a closed-form
/// parameter condition covers the branch, its claim is checked against the
/// general classifier: agreement tags the verdict with the condition,
/// disagreement is an [`Error::Consistency`] bug signal.
pub fn classify_equilibrium(params: &ModelParams, eq: &Equilibrium) -> Result<StabilityVerdict> {
    params.validate()?;
    let lc = linearize(params, eq.value);
    let general = classify_linear(lc.a, lc.b, params.alpha)?;
    match theorem_for(params, eq.branch) {
        None => Ok(general),
        Some(id) => {
            if id.claims() == class_of(&general.kind) {
                Ok(StabilityVerdict { kind: general.kind, source: VerdictSource::Theorem(id) })
            } else {
                Err(Error::Consistency(format!(
                    "condition {id:?} claims {:?} but the classifier found {:?} \
                     at x* = {} (a = {}, b = {})",
                    id.claims(),
                    general.kind,
                    eq.value,
                    lc.a,
                    lc.b,
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::equilibria;
    use proptest::prelude::*;

    fn tau_star(v: &StabilityVerdict) -> f64 {
        match v.kind {
            StabilityKind::DelayDependent { tau_star } => tau_star,
            ref k => panic!("expected a delay-dependent verdict, got {k:?}"),
        }
    }

    #[test]
    fn classical_pure_delay_crossing_is_pi_over_two() {
        // D x = -x(t - tau) flips stability at tau = pi/2
        let t = crit_delay(0.0, -1.0, 1.0).unwrap();
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn classical_crossing_with_instantaneous_term() {
        // a = -2, b = -3, alpha = 1: omega = sqrt(5), tau = arccos(-2/3)/omega
        let t = crit_delay(-2.0, -3.0, 1.0).unwrap();
        assert!((t - 1.0288256019810915).abs() < 1e-14);
    }

    #[test]
    fn crossing_delay_for_fractional_orders() {
        for (alpha, expect) in [
            (0.8, 1.3230149514166577),
            (0.9, 1.1682986942719373),
            (0.95, 1.0966775369026277),
            (0.97, 1.0690895988886059),
            (1.0, 1.0288256019810915),
        ] {
            let t = crit_delay(-2.0, -3.0, alpha).unwrap();
            assert!((t - expect).abs() < 1e-12, "alpha = {alpha}: {t} vs {expect}");
        }
    }

    #[test]
    fn crossing_delay_grows_as_alpha_drops() {
        // smaller order damps the rotation, postponing the crossing
        let mut prev = 0.0;
        for i in (2..=10).rev() {
            let alpha = i as f64 / 10.0;
            let t = crit_delay(-2.0, -3.0, alpha).unwrap();
            assert!(t > prev, "tau* should increase as alpha decreases");
            prev = t;
        }
    }

    #[test]
    fn crossing_delay_with_positive_instantaneous_term() {
        let t = crit_delay(1.0, -2.0, 0.97).unwrap();
        assert!((t - 0.60434520566694672).abs() < 1e-13);
    }

    #[test]
    fn crit_delay_requires_dominant_delayed_coefficient() {
        assert!(matches!(crit_delay(-2.0, -1.0, 0.9), Err(Error::NoCrossing(_))));
        assert!(matches!(crit_delay(-2.0, 3.0, 0.9), Err(Error::NoCrossing(_))));
        assert!(matches!(crit_delay(0.0, -1.0, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn oracle_agrees_with_the_closed_form() {
        for (a, b, alpha) in [
            (0.0, -1.0, 1.0),
            (-2.0, -3.0, 1.0),
            (-2.0, -3.0, 0.97),
            (1.0, -2.0, 0.97),
            (-2.0244449484588149, -3.9633325773117776, 0.95),
            (-0.3, -0.31, 0.85),
        ] {
            let t = crit_delay(a, b, alpha).unwrap();
            let c = crossing_oracle(a, b, alpha).unwrap();
            assert!(
                ((t - c.tau) / t).abs() < 1e-8,
                "a = {a}, b = {b}, alpha = {alpha}: {t} vs {}",
                c.tau
            );
            let u = c.omega.powf(alpha);
            let theta = alpha * FRAC_PI_2;
            assert!((u * theta.sin() - (-b) * (c.omega * c.tau).sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn classify_covers_all_three_cones() {
        let v = classify_linear(-2.0, -3.0, 0.9).unwrap();
        assert!(matches!(v.kind, StabilityKind::DelayDependent { .. }));
        let v = classify_linear(-2.0, 1.0, 0.9).unwrap();
        assert!(matches!(v.kind, StabilityKind::StableAllDelays));
        let v = classify_linear(-2.0, 2.5, 0.9).unwrap();
        assert!(matches!(v.kind, StabilityKind::UnstableAllDelays));
        let v = classify_linear(1.0, 2.0, 0.9).unwrap();
        assert!(matches!(v.kind, StabilityKind::UnstableAllDelays));
        let v = classify_linear(1.0, -2.0, 0.9).unwrap();
        assert!(matches!(v.kind, StabilityKind::DelayDependent { .. }));
    }

    #[test]
    fn classify_refuses_boundaries() {
        assert!(matches!(classify_linear(-2.0, 2.0, 0.9), Err(Error::Boundary(_))));
        assert!(matches!(classify_linear(-2.0, -2.0, 0.9), Err(Error::Boundary(_))));
        assert!(matches!(classify_linear(1.0, -1.0, 0.9), Err(Error::Boundary(_))));
        assert!(matches!(classify_linear(0.0, 0.0, 0.9), Err(Error::Boundary(_))));
        assert!(matches!(classify_linear(-2.0, 2.0 + 1e-13, 0.9), Err(Error::Boundary(_))));
    }

    #[test]
    fn origin_verdicts_follow_the_sum_and_order_of_delta_and_q() {
        let pr = |delta, q| ModelParams::new(0.9, 0.0, delta, 1.0, 1.0, q);
        let x1 = Equilibrium { branch: Branch::X1, value: 0.0 };

        let v = classify_equilibrium(&pr(2.0, 1.0), &x1).unwrap();
        assert!(matches!(v.kind, StabilityKind::UnstableAllDelays));
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X1PositiveSum));

        let v = classify_equilibrium(&pr(2.0, -3.0), &x1).unwrap();
        assert!(matches!(v.kind, StabilityKind::StableAllDelays));
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X1StableSector));

        let v = classify_equilibrium(&pr(-3.0, -2.0), &x1).unwrap();
        assert!(matches!(v.kind, StabilityKind::DelayDependent { .. }));
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X1DelayDependent));
    }

    #[test]
    fn origin_critical_delay_uses_q_and_delta_directly() {
        // delta = -3, q = -2: the linearization is a = -2, b = -3
        let pr = ModelParams::new(0.97, 0.0, -3.0, 1.0, 1.0, -2.0);
        let x1 = Equilibrium { branch: Branch::X1, value: 0.0 };
        let v = classify_equilibrium(&pr, &x1).unwrap();
        assert!((tau_star(&v) - 1.0690895988886059).abs() < 1e-12);
    }

    #[test]
    fn x2_stable_sector_verdict() {
        // eps = 1, p = 3, q = -1, delta = 1.5: 0 < -q < delta < -2q
        let pr = ModelParams::new(0.9, 0.0, 1.5, 1.0, 3.0, -1.0);
        let eq = equilibria(&pr);
        let x2 = eq.iter().find(|e| e.branch == Branch::X2).unwrap();
        let v = classify_equilibrium(&pr, x2).unwrap();
        assert!(matches!(v.kind, StabilityKind::StableAllDelays));
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X2StableSector));
    }

    #[test]
    fn x2_delay_dependent_verdicts_on_both_p_signs() {
        // eps = 1, p = 1, delta = -0.1 < -1/32, q = 0.5: the sliver of the
        // plane below the dip of the stable band, still above delta = -q
        let pr = ModelParams::new(0.9, 0.0, -0.1, 1.0, 1.0, 0.5);
        let eq = equilibria(&pr);
        let x2 = eq.iter().find(|e| e.branch == Branch::X2).unwrap();
        let v = classify_equilibrium(&pr, x2).unwrap();
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X2DelayDependentPosP));
        assert!(tau_star(&v) > 0.0);

        // eps = 2, p = -1, delta = 3/8 <= 3p^2/(4 eps), q = 1
        let pr = ModelParams::new(0.97, 0.0, 0.375, 2.0, -1.0, 1.0);
        let eq = equilibria(&pr);
        let x2 = eq.iter().find(|e| e.branch == Branch::X2).unwrap();
        assert!((x2.value - 1.1160254037844386).abs() < 1e-14);
        let v = classify_equilibrium(&pr, x2).unwrap();
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X2DelayDependentNegP));
        assert!((tau_star(&v) - 0.16705086828922253).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_point_is_delay_dependent_via_the_general_route() {
        // eps = 2, p = 0.01, q = -2, delta = 5: no closed-form condition
        // covers this corner of the plane, the classifier handles it
        let pr = ModelParams::new(0.95, 0.0, 5.0, 2.0, 0.01, -2.0);
        let eq = equilibria(&pr);
        let x2 = eq.iter().find(|e| e.branch == Branch::X2).unwrap();
        let v = classify_equilibrium(&pr, x2).unwrap();
        assert_eq!(v.source, VerdictSource::GeneralClassifier);
        assert!((tau_star(&v) - 0.63102733983581706).abs() < 1e-12);
    }

    #[test]
    fn x2_unstable_verdicts_across_sign_patterns() {
        let x2_of = |pr: &ModelParams| {
            equilibria(pr).into_iter().find(|e| e.branch == Branch::X2).unwrap()
        };
        // eps > 0, p > 0, delta + q < 0
        let pr = ModelParams::new(0.9, 0.0, -2.0, 1.0, 3.0, 1.0);
        let v = classify_equilibrium(&pr, &x2_of(&pr)).unwrap();
        assert!(matches!(v.kind, StabilityKind::UnstableAllDelays));
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X2UnstablePosEps));
        // eps < 0, p > 0, delta + q < 0
        let pr = ModelParams::new(0.9, 0.0, -2.0, -1.0, 1.0, 1.0);
        let v = classify_equilibrium(&pr, &x2_of(&pr)).unwrap();
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X2UnstableNegEpsPosP));
        // eps < 0, p < 0, delta + q < 0
        let pr = ModelParams::new(0.9, 0.0, -2.0, -1.0, -1.0, 1.0);
        let v = classify_equilibrium(&pr, &x2_of(&pr)).unwrap();
        assert_eq!(v.source, VerdictSource::Theorem(TheoremId::X2UnstableNegEpsNegP));
    }

    #[test]
    fn x3_falls_back_to_the_general_classifier() {
        let pr = ModelParams::new(0.95, 0.0, 5.0, 2.0, 0.01, -2.0);
        let eq = equilibria(&pr);
        let x3 = eq.iter().find(|e| e.branch == Branch::X3).unwrap();
        let v = classify_equilibrium(&pr, x3).unwrap();
        assert_eq!(v.source, VerdictSource::GeneralClassifier);
        assert!((tau_star(&v) - 0.6011746151559715).abs() < 1e-12);
    }

    #[test]
    fn crit_delay_is_continuous_into_the_classical_limit() {
        // at alpha = 1 the crossing is omega = sqrt(b^2 - a^2),
        // tau = arccos(-a/b) / omega
        let classical = |a: f64, b: f64| (-a / b).acos() / (b * b - a * a).sqrt();
        let gap = |a: f64, b: f64, alpha: f64| {
            let c = classical(a, b);
            ((crit_delay(a, b, alpha).unwrap() - c) / c).abs()
        };
        for (a, b) in [(0.0f64, -1.0f64), (-2.0, -3.0), (1.0, -2.0), (-0.5, -4.0)] {
            let t1 = crit_delay(a, b, 1.0).unwrap();
            let c = classical(a, b);
            assert!((t1 - c).abs() < 1e-12, "a = {a}, b = {b}: {t1} vs {c}");
        }
        // within 0.1% already at alpha = 0.999 where the sensitivity to
        // alpha is mild
        for (a, b) in [(1.0f64, -2.0f64), (-0.5, -4.0), (2.0, -2.5)] {
            assert!(gap(a, b, 0.999) <= 1e-3, "a = {a}, b = {b}");
        }
        // where the sensitivity is steeper the gap still shrinks linearly
        // toward the limit and is under 0.1% one decade closer
        for (a, b) in [(0.0f64, -1.0f64), (-2.0, -3.0), (-1.0, -1.5)] {
            let g3 = gap(a, b, 0.999);
            let g4 = gap(a, b, 0.9999);
            assert!(g4 < g3 && g3 < gap(a, b, 0.99), "a = {a}, b = {b}");
            assert!(g4 <= 1e-3, "a = {a}, b = {b}: {g4}");
        }
    }

    #[test]
    fn closed_form_conditions_agree_with_the_classifier_across_their_regions() {
        use rand::{Rng, SeedableRng};
        use TheoremId::*;

        let x2_of = |pr: &ModelParams| {
            equilibria(pr).into_iter().find(|e| e.branch == Branch::X2).expect("X2 exists here")
        };
        let x1 = Equilibrium { branch: Branch::X1, value: 0.0 };

        // one sampler per condition, covering its whole activation region
        // with a small margin from the classification boundaries
        type Sampler = fn(&mut rand_chacha::ChaCha8Rng) -> ModelParams;
        let cases: [(TheoremId, Branch, Sampler); 9] = [
            (X1PositiveSum, Branch::X1, |r| {
                let q = r.gen_range(-3.0..3.0);
                let sum: f64 = r.gen_range(0.05..4.0);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, sum - q, r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), q)
            }),
            (X1StableSector, Branch::X1, |r| {
                let q: f64 = r.gen_range(-3.0..-0.2);
                let delta = r.gen_range(q + 0.05..-q - 0.05);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), q)
            }),
            (X1DelayDependent, Branch::X1, |r| {
                let q: f64 = r.gen_range(-3.0..3.0);
                let delta = -(q.abs() + r.gen_range(0.05..4.0));
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), q)
            }),
            (X2StableSector, Branch::X2, |r| {
                let q: f64 = r.gen_range(-3.0..-0.3);
                let delta = -q * r.gen_range(1.05..1.95);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, r.gen_range(0.1..3.0), r.gen_range(0.1..3.0), q)
            }),
            (X2DelayDependentPosP, Branch::X2, |r| {
                let p = r.gen_range(0.1..2.0);
                let eps = r.gen_range(0.1..3.0);
                let delta = r.gen_range(-3.0..-p * p / (32.0 * eps) - 0.02);
                let q = -delta + r.gen_range(0.05..3.0);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, eps, p, q)
            }),
            (X2UnstablePosEps, Branch::X2, |r| {
                // delta + q must stay above -p^2/(4 eps) for X2 to exist
                let p = r.gen_range(0.5..3.0);
                let eps = r.gen_range(0.1..2.0);
                let sum = -p * p / (4.0 * eps) * r.gen_range(0.05..0.9);
                let delta = r.gen_range(-3.0..3.0);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, eps, p, sum - delta)
            }),
            (X2UnstableNegEpsPosP, Branch::X2, |r| {
                let delta = r.gen_range(-3.0..3.0);
                let sum = r.gen_range(-4.0..-0.05);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, r.gen_range(-2.0..-0.1), r.gen_range(0.1..3.0), sum - delta)
            }),
            (X2DelayDependentNegP, Branch::X2, |r| {
                let eps = r.gen_range(0.2..2.0);
                let p = r.gen_range(-2.0..-0.2);
                let delta = r.gen_range(-3.0..3.0 * p * p / (4.0 * eps) - 0.02);
                let sum = -p * p / (4.0 * eps) * r.gen_range(-0.9..-0.05) + r.gen_range(0.0..2.0);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, eps, p, sum - delta)
            }),
            (X2UnstableNegEpsNegP, Branch::X2, |r| {
                let delta = r.gen_range(-3.0..3.0);
                let sum = r.gen_range(-4.0..-0.05);
                ModelParams::new(r.gen_range(0.3..1.0), 0.0, delta, r.gen_range(-2.0..-0.1), r.gen_range(-3.0..-0.1), sum - delta)
            }),
        ];

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for (id, branch, sample) in cases {
            for i in 0..1000 {
                let pr = sample(&mut rng);
                let eq = match branch {
                    Branch::X1 => x1,
                    _ => x2_of(&pr),
                };
                // a Consistency error here means the condition and the
                // classifier disagree somewhere inside the condition's region
                let v = classify_equilibrium(&pr, &eq)
                    .unwrap_or_else(|e| panic!("{id:?} draw {i}: {e} for {pr:?}"));
                assert_eq!(v.source, VerdictSource::Theorem(id), "draw {i} for {pr:?}");
            }
        }
    }

    proptest! {
        // Sampling strategy keeps a comfortable margin from both boundary
        // lines so the closed form and the oracle are well conditioned.
        #[test]
        fn oracle_and_closed_form_agree_everywhere_in_the_crossing_cone(
            a in -3.0..3.0f64,
            margin in 0.05..4.0f64,
            alpha in 0.55..1.0f64,
        ) {
            let b = -(a.abs() + margin);
            let t = crit_delay(a, b, alpha).unwrap();
            let c = crossing_oracle(a, b, alpha).unwrap();
            prop_assert!(((t - c.tau) / t).abs() < 1e-7,
                "a = {a}, b = {b}, alpha = {alpha}: {t} vs {}", c.tau);
        }

        #[test]
        fn delay_dependent_verdicts_always_carry_a_positive_critical_delay(
            a in -3.0..3.0f64,
            margin in 0.05..4.0f64,
            alpha in 0.55..1.0f64,
        ) {
            let b = -(a.abs() + margin);
            let v = classify_linear(a, b, alpha).unwrap();
            let t = match v.kind {
                StabilityKind::DelayDependent { tau_star } => tau_star,
                ref k => return Err(TestCaseError::fail(format!("wrong kind {k:?}"))),
            };
            prop_assert!(t > 0.0 && t.is_finite());
        }
    }
}
