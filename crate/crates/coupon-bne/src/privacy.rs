//! Differential-privacy accounting for B-strategies and the privacy-aware baselines.

use serde::{Deserialize, Serialize};

use crate::error::{BneError, Result};
use crate::model::{BStrategy, CouponValues, Prior};
use crate::scalar::{bisect, Extended, Scalar};

fn ratio<T: Scalar>(num: T, den: T) -> Extended<T> {
    if den <= T::zero() {
        if num <= T::zero() {
            Extended::Finite(T::one())
        } else {
            Extended::PosInf
        }
    } else {
        Extended::Finite(num / den)
    }
}

/// Largest likelihood ratio between the two types' signal distributions.
///
/// Uses `0/0 = 1` and `x/0 = inf` for `x > 0`.
pub fn x_game<T: Scalar>(b: &BStrategy<T>) -> Extended<T> {
    let one = T::one();
    let (p, q) = (b.p, b.q);
    [ratio(p, one - q), ratio(one - q, p), ratio(q, one - p), ratio(one - p, q)]
        .into_iter()
        .max()
        .expect("four ratios")
}

/// Differential-privacy level `ln X_game` of a B-strategy, in nats.
pub fn dp_epsilon<T: Scalar>(b: &BStrategy<T>) -> Extended<T> {
    match x_game(b).ln() {
        Extended::Finite(e) => Extended::Finite(e.max(T::zero())),
        other => other,
    }
}

/// True when B tells the truth with the same probability `p` in `[1/2, 1)` for both types.
pub fn is_randomized_response<T: Scalar>(b: &BStrategy<T>, tol: T) -> bool {
    let half = T::lit(0.5);
    (b.p - b.q).abs() <= tol && b.p >= half - tol && b.p < T::one()
}

/// Parameters of a single privacy-aware agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyAwareParams<T = f64> {
    pub prior: Prior<T>,
    pub coupons: CouponValues<T>,
    /// Utility lost per nat of privacy.
    pub v: T,
}

impl<T: Scalar> PrivacyAwareParams<T> {
    pub fn new(prior: Prior<T>, coupons: CouponValues<T>, v: T) -> Result<Self> {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(BneError::InvalidParameter(format!("privacy valuation v = {v} must be positive")));
        }
        Ok(PrivacyAwareParams { prior, coupons, v })
    }

    /// Expected coupon value of always telling the truth, `D0 rho0 + D1 rho1`.
    pub fn y(&self) -> T {
        self.prior.d0() * self.coupons.rho0 + self.prior.d1() * self.coupons.rho1
    }
}

/// Ex-ante utility `D0 rho0 p + D1 rho1 q - v ln X_game`.
pub fn privacy_aware_utility<T: Scalar>(params: &PrivacyAwareParams<T>, b: &BStrategy<T>) -> Extended<T> {
    let gain = params.prior.d0() * params.coupons.rho0 * b.p + params.prior.d1() * params.coupons.rho1 * b.q;
    dp_epsilon(b).scale_add(gain, -params.v)
}

/// Maximizer of the privacy-aware utility.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyAwareOptimum<T = f64> {
    pub b: BStrategy<T>,
    pub utility: Extended<T>,
    /// The interior randomized-response candidate, when it exists.
    pub interior: Option<(BStrategy<T>, Extended<T>)>,
    /// Set when several candidates attain the maximum.
    pub degeneracy: Option<String>,
}

/// The interior candidate `p* = (1 + sqrt(1 - 4v/Y)) / 2`, defined when `Y > 4v`.
pub fn privacy_aware_interior<T: Scalar>(params: &PrivacyAwareParams<T>) -> Option<T> {
    let y = params.y();
    let four_v = T::lit(4.0) * params.v;
    if y > four_v {
        Some(T::lit(0.5) * (T::one() + (T::one() - four_v / y).sqrt()))
    } else {
        None
    }
}

/// Compares the two pure corners against the interior randomized-response candidate.
pub fn solve_privacy_aware<T: Scalar>(params: &PrivacyAwareParams<T>) -> PrivacyAwareOptimum<T> {
    let (zero, one) = (T::zero(), T::one());
    let mut candidates = vec![BStrategy { p: one, q: zero }, BStrategy { p: zero, q: one }];
    let interior = privacy_aware_interior(params).map(|p| {
        let b = BStrategy { p, q: p };
        (b, privacy_aware_utility(params, &b))
    });
    if let Some((b, _)) = interior {
        candidates.push(b);
    }
    let scored: Vec<_> = candidates.iter().map(|b| (*b, privacy_aware_utility(params, b))).collect();
    let best = scored.iter().map(|(_, u)| *u).max().expect("candidates");
    let tol = T::tol(1e-12) * best.finite().map_or(one, |u| u.abs().max(one));
    let winners: Vec<_> = scored
        .iter()
        .filter(|(_, u)| match (u.finite(), best.finite()) {
            (Some(a), Some(b)) => (a - b).abs() <= tol,
            _ => *u == best,
        })
        .collect();
    let degeneracy = (winners.len() > 1).then(|| {
        let list: Vec<String> = winners.iter().map(|(b, _)| format!("({}, {})", b.p, b.q)).collect();
        format!("indifferent between {}", list.join(" and "))
    });
    PrivacyAwareOptimum { b: winners[0].0, utility: best, interior, degeneracy }
}

/// Equilibrium shapes of the two-player privacy game with common coupon value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TwoPlayerNeCategory<T = f64> {
    /// Both types send signal 1 with the same small probability `z`: `(p, q) = (1 - z, z)`.
    PoolOnZero { z: T },
    /// Both types send signal 1 with the same large probability `z`: `(p, q) = (1 - z, z)`.
    PoolOnOne { z: T },
    /// `p = q = z`.
    RandomizedResponse { z: T },
    NotEquilibrium,
}

fn two_player_bracket<T: Scalar>(rho: T, v: T) -> Result<T> {
    if !(rho > T::zero() && v > T::zero()) {
        return Err(BneError::InvalidParameter("rho and v must be positive".into()));
    }
    let low = T::one() - v / rho;
    if low <= T::lit(0.5) {
        return Err(BneError::NoRoot { what: format!("need 1 - v/rho > 1/2, got {low}") });
    }
    Ok(low)
}

/// Upper end of the randomized-response family.
///
/// Root on `[1 - v/rho, 1)` of `rho (2z - 1) - v ln(z / (1 - z))`: the point
/// where a type facing `p = q = z` is indifferent between matching it and
/// switching to the uninformative `1 - z`. `1 - z*` bounds the pooling families.
pub fn two_player_zstar<T: Scalar>(rho: T, v: T) -> Result<T> {
    let low = two_player_bracket(rho, v)?;
    let h = |z: T| rho * (T::lit(2.0) * z - T::one()) - v * (z / (T::one() - z)).ln();
    let hi = T::one() - T::tol(1e-15);
    bisect(h, low, hi, "randomized-response indifference equation")
}

/// Root on `(1 - v/rho, 1)` of `rho z - v ln(z / (1 - z)) - v`.
///
/// This variant of the indifference equation replaces `rho (1 - z)` by `v`;
/// the two agree only at `z = 1 - v/rho`. Kept for comparison with
/// [`two_player_zstar`], which the classifier uses.
pub fn literal_zstar<T: Scalar>(rho: T, v: T) -> Result<T> {
    let low = two_player_bracket(rho, v)?;
    let h = |z: T| rho * z - v * (z / (T::one() - z)).ln() - v;
    let hi = T::one() - T::tol(1e-15);
    bisect(h, low, hi, "shifted indifference equation")
}

/// Privacy-game utility of one type: coupon value of the truthful signal minus privacy cost.
pub fn two_player_utility<T: Scalar>(b: &BStrategy<T>, rho: T, v: T, ty: u8) -> Extended<T> {
    let truthful = if ty == 0 { b.p } else { b.q };
    dp_epsilon(b).scale_add(rho * truthful, -v)
}

/// Best gain either type can get by a unilateral deviation.
///
/// Searches a grid of step `grid_step` plus the analytic candidates
/// `1 - other`, `other`, `1 - v/rho` and `v/rho`.
pub fn two_player_deviation_gain<T: Scalar>(b: &BStrategy<T>, rho: T, v: T, grid_step: T) -> (Extended<T>, Extended<T>) {
    let n = (T::one() / grid_step).ceil().to_usize().unwrap_or(1).max(1);
    let gain = |ty: u8| {
        let other = if ty == 0 { b.q } else { b.p };
        let mut xs: Vec<T> = (0..=n).map(|i| (T::from_usize(i).unwrap() / T::from_usize(n).unwrap()).min(T::one())).collect();
        xs.extend([T::one() - other, other, T::one() - v / rho, v / rho].into_iter().filter(|x| *x >= T::zero() && *x <= T::one()));
        let now = two_player_utility(b, rho, v, ty);
        let best = xs
            .into_iter()
            .map(|x| {
                let dev = if ty == 0 { BStrategy { p: x, q: b.q } } else { BStrategy { p: b.p, q: x } };
                two_player_utility(&dev, rho, v, ty)
            })
            .max()
            .expect("nonempty grid");
        match (best, now) {
            (Extended::Finite(a), Extended::Finite(c)) => Extended::Finite((a - c).max(T::zero())),
            (a, c) if a == c => Extended::Finite(T::zero()),
            (_, Extended::NegInf) => Extended::PosInf,
            _ => Extended::Finite(T::zero()),
        }
    };
    (gain(0), gain(1))
}

/// Places `(p, q)` into one of the equilibrium families of the two-player privacy game.
pub fn classify_two_player_ne<T: Scalar>(b: &BStrategy<T>, rho: T, v: T) -> Result<TwoPlayerNeCategory<T>> {
    let zstar = two_player_zstar(rho, v)?;
    let tol = T::tol(1e-9);
    let one = T::one();
    if (b.p - (one - b.q)).abs() <= tol {
        let z = b.q;
        if z <= one - zstar + tol {
            return Ok(TwoPlayerNeCategory::PoolOnZero { z });
        }
        if z >= zstar - tol {
            return Ok(TwoPlayerNeCategory::PoolOnOne { z });
        }
    }
    if (b.p - b.q).abs() <= tol {
        let z = b.p;
        if z >= one - v / rho - tol && z <= zstar + tol {
            return Ok(TwoPlayerNeCategory::RandomizedResponse { z });
        }
    }
    Ok(TwoPlayerNeCategory::NotEquilibrium)
}
