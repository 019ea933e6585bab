//! Coupon game with identity-matrix payments: A wins one unit on a correct guess.

use serde::{Deserialize, Serialize};

use crate::error::{BneError, Result};
use crate::model::{BStrategy, CouponValues, GuessPolicy, Prior};
use crate::privacy::dp_epsilon;
use crate::scalar::{first_reaching, last_not_exceeding, Extended, Scalar};

/// Expected utilities `(uA, uB0, uB1)`.
pub fn identity_utilities<T: Scalar>(prior: &Prior<T>, coupons: &CouponValues<T>, b: &BStrategy<T>, a: &GuessPolicy<T>) -> (T, T, T) {
    let one = T::one();
    let (d0, d1) = (prior.d0(), prior.d1());
    let (p, q, x, y) = (b.p, b.q, a.x, a.y);
    let ua = d0 * p * x + d0 * (one - p) * (one - y) + d1 * q * y + d1 * (one - q) * (one - x);
    let ub0 = p * (coupons.rho0 - x) + (one - p) * (y - one);
    let ub1 = q * (coupons.rho1 - y) + (one - q) * (x - one);
    (ua, ub0, ub1)
}

/// Case of the fixed-valuation characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdentityCase {
    Rho0Greater,
    RhoEqual,
    Rho1Greater,
    DegenerateEqualPrior,
    /// Both valuations at least one: truth-telling is dominant.
    Separating,
}

/// Equilibrium of the identity-payment game.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityBne<T = f64> {
    /// Representative B-strategy.
    pub b: BStrategy<T>,
    /// Endpoints of the segment of B-strategies when B's choice is a family.
    pub b_segment: Option<(BStrategy<T>, BStrategy<T>)>,
    /// Representative A-policy.
    pub a: GuessPolicy<T>,
    /// Range of `y` supporting the equilibrium, when not a single point.
    pub y_interval: Option<(T, T)>,
    pub case: IdentityCase,
    pub rr_point: Option<BStrategy<T>>,
    pub dp_epsilon: Extended<T>,
    pub unique: bool,
    pub notes: Vec<String>,
}

/// Position of a point relative to one indifference line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Above,
    On,
    Below,
}

/// Position of `(p, q)` relative to both lines of A's indifference.
///
/// `l1`: `D0 p = D1 (1 - q)` (signal 0); `l2`: `D0 (1 - p) = D1 q` (signal 1).
/// "Above" means a larger `q` than the line at the same `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinePosition {
    pub l1: Side,
    pub l2: Side,
}

fn side<T: Scalar>(v: T) -> Side {
    let tol = T::tol(1e-10);
    if v.abs() <= tol {
        Side::On
    } else if v > T::zero() {
        Side::Above
    } else {
        Side::Below
    }
}

pub fn lines_membership<T: Scalar>(prior: &Prior<T>, b: &BStrategy<T>) -> LinePosition {
    let one = T::one();
    let (d0, d1) = (prior.d0(), prior.d1());
    LinePosition { l1: side(d0 * b.p - d1 * (one - b.q)), l2: side(d1 * b.q - d0 * (one - b.p)) }
}

/// Equilibrium of the identity-payment game with fixed valuations.
///
/// The type with the larger valuation tells the truth; the other mixes along
/// A's signal-1 indifference line, and A guesses 0 after signal 0.
pub fn solve_identity_bne<T: Scalar>(prior: &Prior<T>, coupons: &CouponValues<T>) -> Result<IdentityBne<T>> {
    prior.ensure_ordered()?;
    let (zero, one) = (T::zero(), T::one());
    let (d0, d1) = (prior.d0(), prior.d1());
    let (r0, r1) = (coupons.rho0, coupons.rho1);
    let tol = T::tol(1e-9) * r0.max(r1).max(one);
    let half = T::lit(0.5);
    let mut notes = Vec::new();

    if r0.min(r1) >= one - tol {
        let b = BStrategy { p: one, q: one };
        let unique = r0.min(r1) > one + tol;
        if !unique {
            notes.push("a valuation equals one; the truthful type is indifferent".into());
        }
        return Ok(IdentityBne {
            b,
            b_segment: None,
            a: GuessPolicy { x: one, y: one },
            y_interval: None,
            case: IdentityCase::Separating,
            rr_point: None,
            dp_epsilon: dp_epsilon(&b),
            unique,
            notes,
        });
    }

    let low_high = |lo: T, hi: T| (lo.min(one), hi.min(one));

    if prior.is_uniform() {
        let (b, y_interval, segment, rr) = if r0 > r1 + tol {
            (BStrategy { p: one, q: zero }, Some(low_high(r1, r0)), None, None)
        } else if r1 > r0 + tol {
            (BStrategy { p: zero, q: one }, Some(low_high(r0, r1)), None, None)
        } else {
            let rr = BStrategy { p: half, q: half };
            (rr, None, Some((BStrategy { p: one, q: zero }, BStrategy { p: zero, q: one })), Some(rr))
        };
        notes.push("equal prior: the type with the larger valuation tells the truth".into());
        let y = y_interval.map_or(r0, |(lo, hi)| (lo + hi) * half);
        return Ok(IdentityBne {
            b,
            b_segment: segment,
            a: GuessPolicy { x: one, y },
            y_interval,
            case: IdentityCase::DegenerateEqualPrior,
            rr_point: rr,
            dp_epsilon: dp_epsilon(&b),
            unique: false,
            notes,
        });
    }

    if r0 > r1 + tol {
        let b = BStrategy { p: one, q: zero };
        let (lo, hi) = low_high(r1, r0);
        if r0 > one {
            notes.push("rho0 > 1: A's y ranges up to 1".into());
        }
        notes.push("signal 1 is off path".into());
        return Ok(IdentityBne {
            b,
            b_segment: None,
            a: GuessPolicy { x: one, y: (lo + hi) * half },
            y_interval: Some((lo, hi)),
            case: IdentityCase::Rho0Greater,
            rr_point: None,
            dp_epsilon: dp_epsilon(&b),
            unique: true,
            notes,
        });
    }

    let corner = BStrategy { p: (d0 - d1) / d0, q: one };
    if r1 > r0 + tol {
        return Ok(IdentityBne {
            b: corner,
            b_segment: None,
            a: GuessPolicy { x: one, y: r0 },
            y_interval: None,
            case: IdentityCase::Rho1Greater,
            rr_point: None,
            dp_epsilon: dp_epsilon(&corner),
            unique: true,
            notes,
        });
    }

    let rr = BStrategy { p: d0, q: d0 };
    notes.push("B may play any point of the signal-1 indifference line; the randomized-response point is reported".into());
    Ok(IdentityBne {
        b: rr,
        b_segment: Some((BStrategy { p: one, q: zero }, corner)),
        a: GuessPolicy { x: one, y: r0 },
        y_interval: None,
        case: IdentityCase::RhoEqual,
        rr_point: Some(rr),
        dp_epsilon: dp_epsilon(&rr),
        unique: false,
        notes,
    })
}

/// Distribution of B's coupon valuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValuationDistribution {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    /// Knots `(value, cdf)` of a piecewise-linear CDF.
    Piecewise { knots: Vec<(f64, f64)> },
}

impl ValuationDistribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BneError::InvalidDistribution(m));
        match self {
            ValuationDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo) {
                    return bad(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            ValuationDistribution::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("exponential rate {rate} must be positive"));
                }
            }
            ValuationDistribution::Piecewise { knots } => {
                if knots.len() < 2 {
                    return bad("piecewise CDF needs at least two knots".into());
                }
                if knots[0].0 < 0.0 || knots[0].1 != 0.0 {
                    return bad("piecewise CDF must start at a nonnegative value with cdf 0".into());
                }
                if knots.last().expect("two knots").1 != 1.0 {
                    return bad("piecewise CDF must end with cdf 1".into());
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 || !w[1].0.is_finite() {
                        return bad("knot values must increase and cdf values must not decrease".into());
                    }
                }
                if knots.iter().any(|k| !(0.0..=1.0).contains(&k.1)) {
                    return bad("cdf values must lie in [0, 1]".into());
                }
            }
        }
        Ok(())
    }

    /// `Pr[rho < x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ValuationDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ValuationDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            ValuationDistribution::Piecewise { knots } => {
                if x <= knots[0].0 {
                    return 0.0;
                }
                for w in knots.windows(2) {
                    let ((x0, c0), (x1, c1)) = (w[0], w[1]);
                    if x <= x1 {
                        return c0 + (c1 - c0) * (x - x0) / (x1 - x0);
                    }
                }
                1.0
            }
        }
    }

    /// Interval carrying essentially all of the mass.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ValuationDistribution::Uniform { lo, hi } => (*lo, *hi),
            ValuationDistribution::Exponential { rate } => (0.0, 1e-9f64.ln().abs() / rate),
            ValuationDistribution::Piecewise { knots } => (knots[0].0, knots.last().expect("two knots").0),
        }
    }
}

/// Threshold equilibrium under continuously distributed valuations.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousThreshold {
    pub a: GuessPolicy<f64>,
    /// B tells the truth iff its valuation exceeds this threshold.
    pub threshold: f64,
    /// All roots of `CDF_B(y) = D1` in `[0, 1]`; a single point when unique.
    pub root_interval: (f64, f64),
    /// Induced truth-telling probabilities of each type.
    pub b: BStrategy<f64>,
    /// Only reported when both types share one distribution.
    pub dp_epsilon: Option<Extended<f64>>,
}

/// Solves for A's guess `y*` and B's threshold when valuations are random.
///
/// `y*` is the smallest root of `D0 CDF0(y) + D1 CDF1(y) = D1` on `[0, 1]`,
/// or 1 when `CDF_B(1) < D1`. `dist1 = None` means both types share `dist0`.
pub fn solve_continuous_threshold(prior: &Prior<f64>, dist0: &ValuationDistribution, dist1: Option<&ValuationDistribution>) -> Result<ContinuousThreshold> {
    prior.ensure_ordered()?;
    if prior.is_uniform() {
        return Err(BneError::InvalidParameter("the threshold characterization needs d0 != d1".into()));
    }
    dist0.validate()?;
    if let Some(d) = dist1 {
        d.validate()?;
    }
    let d1dist = dist1.unwrap_or(dist0);
    let (d0, d1) = (prior.d0(), prior.d1());
    let cdf_b = |y: f64| d0 * dist0.cdf(y) + d1 * d1dist.cdf(y);
    // Rounding in the mixture can leave a flat CDF segment a few ulps off d1.
    let band = 16.0 * f64::EPSILON;
    let (ystar, root_interval) = match first_reaching(cdf_b, d1 - band, 0.0, 1.0) {
        Some(lo) => {
            let hi = last_not_exceeding(cdf_b, d1 + band, lo, 1.0).unwrap_or(lo).max(lo);
            if hi - lo > 1e-9 {
                (lo, (lo, hi))
            } else {
                // A strictly increasing CDF: re-solve against the exact target.
                let y = first_reaching(cdf_b, d1, 0.0, 1.0).unwrap_or(lo);
                (y, (y, y))
            }
        }
        None => (1.0, (1.0, 1.0)),
    };
    let b = BStrategy { p: 1.0 - dist0.cdf(ystar), q: 1.0 - d1dist.cdf(ystar) };
    Ok(ContinuousThreshold {
        a: GuessPolicy { x: 1.0, y: ystar },
        threshold: ystar,
        root_interval,
        b,
        dp_epsilon: dist1.is_none().then(|| dp_epsilon(&b)),
    })
}
