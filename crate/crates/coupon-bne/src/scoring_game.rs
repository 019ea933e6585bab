//! Coupon game where A is paid by a proper scoring rule on her report.

use serde::{Deserialize, Serialize};

use crate::error::{BneError, Result};
use crate::model::{bayes_posteriors, BStrategy, CouponValues, Prior, ScoringReportPair};
use crate::scalar::{bisect, first_reaching, last_not_exceeding, Scalar};
use crate::scoring::ScoringRule;

/// Which branch of the equilibrium characterization applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoringRegime {
    /// Both types send signal 0.
    Pooling10,
    /// Both types tell the truth.
    Separating11,
    /// Both types mix.
    Interior,
}

/// Equilibrium of the scoring-rule game.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringBne<T = f64> {
    pub b: BStrategy<T>,
    pub a: ScoringReportPair<T>,
    /// Off-path report interval for signal 1 in the pooling regime.
    pub x1_interval: Option<(T, T)>,
    pub y0: Option<T>,
    pub y1: Option<T>,
    /// `ln(y1 / (1 - y1))`, infinite when separating.
    pub posterior_epsilon: T,
    pub a_profit: T,
    pub benchmark_profit: T,
    pub regime: ScoringRegime,
    pub unique: bool,
    pub notes: Vec<String>,
}

/// B's pure or free choice for one type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    Zero,
    One,
    Free,
}

/// A's expected payment with no signal: `g(D1)`.
pub fn benchmark_profit<T: Scalar>(prior: &Prior<T>, rule: &ScoringRule<T>) -> T {
    rule.g(prior.d1())
}

fn spread<T: Scalar>(a: T, b: T) -> T {
    if a.is_infinite() && a == b {
        T::zero()
    } else {
        a - b
    }
}

fn choose<T: Scalar>(rho: T, spread: T) -> Choice {
    let tol = T::tol(1e-9) * rho.abs().max(T::one());
    if (rho - spread).abs() <= tol {
        Choice::Free
    } else if rho > spread {
        Choice::One
    } else {
        Choice::Zero
    }
}

/// B's best response to fixed reports: `(choice of p, choice of q)`.
///
/// Type 0 prefers truth iff `rho0 > f0(x0) - f0(x1)`; type 1 iff `rho1 > f1(x1) - f1(x0)`.
pub fn b_best_response<T: Scalar>(rule: &ScoringRule<T>, reports: &ScoringReportPair<T>, coupons: &CouponValues<T>) -> (Choice, Choice) {
    let s0 = spread(rule.f0v(reports.x0), rule.f0v(reports.x1));
    let s1 = spread(rule.f1v(reports.x1), rule.f1v(reports.x0));
    (choose(coupons.rho0, s0), choose(coupons.rho1, s1))
}

fn weighted<T: Scalar>(w: T, f: T) -> T {
    if w == T::zero() {
        T::zero()
    } else {
        w * f
    }
}

/// Expected utilities `(uA, uB0, uB1)` of a profile.
pub fn scoring_utilities<T: Scalar>(
    prior: &Prior<T>,
    rule: &ScoringRule<T>,
    coupons: &CouponValues<T>,
    b: &BStrategy<T>,
    a: &ScoringReportPair<T>,
) -> (T, T, T) {
    let one = T::one();
    let (f00, f01) = (rule.f0v(a.x0), rule.f0v(a.x1));
    let (f10, f11) = (rule.f1v(a.x0), rule.f1v(a.x1));
    let ub0 = weighted(b.p, coupons.rho0 - f00) - weighted(one - b.p, f01);
    let ub1 = weighted(b.q, coupons.rho1 - f11) - weighted(one - b.q, f10);
    let (d0, d1) = (prior.d0(), prior.d1());
    let ua = weighted(d0 * b.p, f00) + weighted(d1 * (one - b.q), f10) + weighted(d0 * (one - b.p), f01) + weighted(d1 * b.q, f11);
    (ua, ub0, ub1)
}

/// `D0^2 p (1 - p) - D1^2 q (1 - q)`, zero at every mixed equilibrium.
pub fn posterior_symmetry_residual<T: Scalar>(prior: &Prior<T>, b: &BStrategy<T>) -> T {
    let one = T::one();
    let (d0, d1) = (prior.d0(), prior.d1());
    d0 * d0 * b.p * (one - b.p) - d1 * d1 * b.q * (one - b.q)
}

fn check_inputs<T: Scalar>(prior: &Prior<T>, rule: &ScoringRule<T>, rhos: &[T]) -> Result<()> {
    prior.ensure_ordered()?;
    if !rule.is_symmetric() {
        return Err(BneError::NonSymmetricRule(rule.name().to_string()));
    }
    for &rho in rhos {
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(BneError::InvalidRange { rho: rho.as_f64() });
        }
    }
    Ok(())
}

/// Root of `g'(y1) = rho` on `[1/2, 1]`.
fn interior_y1<T: Scalar>(rule: &ScoringRule<T>, rho: T) -> Result<T> {
    bisect(|y| rule.dg(y) - rho, T::lit(0.5), T::one(), "g'(y1) = rho on [1/2, 1]")
}

/// Mixed strategy that makes the posteriors `(1 - y1, y1)`.
pub fn interior_strategy<T: Scalar>(prior: &Prior<T>, y1: T) -> BStrategy<T> {
    let one = T::one();
    let (d0, d1) = (prior.d0(), prior.d1());
    let r = y1 / (one - y1);
    let den = r * r - one;
    BStrategy { p: (r * r - r * d1 / d0) / den, q: (r * r - r * d0 / d1) / den }
}

/// Off-path reports for signal 1 that keep both types pooling on signal 0.
fn pooling_x1_interval<T: Scalar>(prior: &Prior<T>, rho: T, rule: &ScoringRule<T>) -> (T, T) {
    let d1 = prior.d1();
    let one = T::one();
    let lo = first_reaching(|x| rule.f1v(x) - rule.f1v(d1), rho, d1, one).unwrap_or(prior.d0());
    let hi = last_not_exceeding(|x| rule.f0v(d1) - rule.f0v(x), rho, d1, one).unwrap_or(d1);
    if lo <= hi {
        (lo, hi)
    } else {
        (hi, lo)
    }
}

/// Equilibrium of the scoring-rule game with a common coupon value `rho`.
///
/// Truth-telling when `rho >= f1(1) - f1(0)`, pooling on signal 0 when
/// `rho <= f1(D0) - f1(D1)`, and otherwise the unique mixed equilibrium with
/// posteriors `(1 - y1, y1)` where `g'(y1) = rho`.
pub fn solve_scoring_bne<T: Scalar>(prior: &Prior<T>, rho: T, rule: &ScoringRule<T>) -> Result<ScoringBne<T>> {
    check_inputs(prior, rule, &[rho])?;
    let (zero, one) = (T::zero(), T::one());
    let (d0, d1) = (prior.d0(), prior.d1());
    let tol = T::tol(1e-9) * rho.max(one);
    let separating_at = spread(rule.f1v(one), rule.f1v(zero));
    let pooling_at = rule.f1v(d0) - rule.f1v(d1);
    let benchmark = benchmark_profit(prior, rule);
    let coupons = CouponValues { rho0: rho, rho1: rho };
    let mut notes = Vec::new();

    if rho >= separating_at - tol {
        let b = BStrategy { p: one, q: one };
        let a = ScoringReportPair { x0: zero, x1: one };
        let unique = (rho - separating_at).abs() > tol;
        if !unique {
            notes.push(format!("rho equals the separating threshold {separating_at}; the mixed branch meets y1 = 1 here"));
        }
        let (ua, _, _) = scoring_utilities(prior, rule, &coupons, &b, &a);
        return Ok(ScoringBne {
            b,
            a,
            x1_interval: None,
            y0: Some(zero),
            y1: Some(one),
            posterior_epsilon: T::infinity(),
            a_profit: ua,
            benchmark_profit: benchmark,
            regime: ScoringRegime::Separating11,
            unique,
            notes,
        });
    }

    if rho <= pooling_at + tol {
        let b = BStrategy { p: one, q: zero };
        let (lo, hi) = pooling_x1_interval(prior, rho, rule);
        let a = ScoringReportPair { x0: d1, x1: (lo + hi) / T::lit(2.0) };
        let unique = (rho - pooling_at).abs() > tol;
        notes.push(format!("signal 1 is off path; any report x1 in [{lo}, {hi}] supports pooling"));
        if !unique {
            notes.push(format!("rho equals the pooling threshold {pooling_at}; the mixed branch meets y1 = D0 here"));
        }
        return Ok(ScoringBne {
            b,
            a,
            x1_interval: Some((lo, hi)),
            y0: Some(d1),
            y1: None,
            posterior_epsilon: zero,
            a_profit: benchmark,
            benchmark_profit: benchmark,
            regime: ScoringRegime::Pooling10,
            unique,
            notes,
        });
    }

    let y1 = interior_y1(rule, rho)?;
    let b = interior_strategy(prior, y1);
    let b = BStrategy { p: b.p.max(zero).min(one), q: b.q.max(zero).min(one) };
    Ok(ScoringBne {
        b,
        a: ScoringReportPair { x0: one - y1, x1: y1 },
        x1_interval: None,
        y0: Some(one - y1),
        y1: Some(y1),
        posterior_epsilon: (y1 / (one - y1)).ln(),
        a_profit: rule.g(y1),
        benchmark_profit: benchmark,
        regime: ScoringRegime::Interior,
        unique: true,
        notes,
    })
}

/// `g(y1) - g(D1)` for the mixed-branch posterior `y1` solving `g'(y1) = rho`.
///
/// Only realized as A's gain when `rho` lies in the mixed regime.
pub fn a_profit_advantage<T: Scalar>(prior: &Prior<T>, rho: T, rule: &ScoringRule<T>) -> Result<T> {
    check_inputs(prior, rule, &[rho])?;
    let y1 = interior_y1(rule, rho)?;
    Ok(rule.g(y1) - rule.g(prior.d1()))
}

/// Mixed strategy reproducing posteriors `(y0, y1)`, from the two linear Bayes equations.
pub fn strategy_from_posteriors<T: Scalar>(prior: &Prior<T>, y0: T, y1: T) -> Option<BStrategy<T>> {
    let one = T::one();
    let (d0, d1) = (prior.d0(), prior.d1());
    // y0 D0 p + (1 - y0) D1 q = (1 - y0) D1
    // y1 D0 p + (1 - y1) D1 q = y1 D0
    let (a11, a12, c1) = (y0 * d0, (one - y0) * d1, (one - y0) * d1);
    let (a21, a22, c2) = (y1 * d0, (one - y1) * d1, y1 * d0);
    let det = a11 * a22 - a12 * a21;
    if det == T::zero() {
        return None;
    }
    Some(BStrategy { p: (c1 * a22 - a12 * c2) / det, q: (a11 * c2 - c1 * a21) / det })
}

/// Mixed equilibrium of the scoring-rule game with distinct coupon values.
///
/// Solves `rho0 = f0(y0) - f0(y1)` and `rho1 = f1(y1) - f1(y0)` with
/// `y0 < y1` by nested bisection: the inner solve gives `y0` from `y1`
/// through the monotone `f1`, and the outer residual is increasing in `y1`.
pub fn solve_scoring_bne_asymmetric<T: Scalar>(prior: &Prior<T>, coupons: &CouponValues<T>, rule: &ScoringRule<T>) -> Result<ScoringBne<T>> {
    check_inputs(prior, rule, &[coupons.rho0, coupons.rho1])?;
    let (zero, one) = (T::zero(), T::one());
    let (rho0, rho1) = (coupons.rho0, coupons.rho1);
    let no_solution = |why: &str| BneError::NoInteriorSolution(why.to_string());

    let f1_0 = rule.f1v(zero);
    let lo = if f1_0.is_finite() {
        first_reaching(|y| rule.f1v(y) - f1_0, rho1, zero, one).ok_or_else(|| no_solution("rho1 exceeds the largest type-1 spread"))?
    } else {
        zero
    };
    let y0_of = |y1: T| first_reaching(|y| rule.f1v(y), rule.f1v(y1) - rho1, zero, y1).unwrap_or(zero);
    let residual = |y1: T| spread(rule.f0v(y0_of(y1)), rule.f0v(y1)) - rho0;
    let y1 = bisect(residual, lo, one, "type-0 indifference").map_err(|_| no_solution("type-0 indifference has no sign change"))?;
    let y0 = y0_of(y1);
    if !(y0 < y1) || y1 >= one || y0 <= zero {
        return Err(no_solution("posteriors are not interior with y0 < y1"));
    }
    let b = strategy_from_posteriors(prior, y0, y1).ok_or_else(|| no_solution("posteriors do not determine a strategy"))?;
    let tol = T::tol(1e-9);
    if b.p < -tol || b.p > one + tol || b.q < -tol || b.q > one + tol {
        return Err(no_solution("recovered strategy is not a probability pair"));
    }
    let b = BStrategy { p: b.p.max(zero).min(one), q: b.q.max(zero).min(one) };
    let a = ScoringReportPair { x0: y0, x1: y1 };
    let (ua, _, _) = scoring_utilities(prior, rule, coupons, &b, &a);
    let odds = (y1 / (one - y1)).ln().max(((one - y0) / y0).ln());
    Ok(ScoringBne {
        b,
        a,
        x1_interval: None,
        y0: Some(y0),
        y1: Some(y1),
        posterior_epsilon: odds,
        a_profit: ua,
        benchmark_profit: benchmark_profit(prior, rule),
        regime: ScoringRegime::Interior,
        unique: true,
        notes: vec!["boundary equilibria with one pure type are not constructed for distinct coupon values".into()],
    })
}

/// Residuals of both indifference conditions at `(y0, y1)`.
pub fn asymmetric_residuals<T: Scalar>(rule: &ScoringRule<T>, coupons: &CouponValues<T>, y0: T, y1: T) -> (T, T) {
    (
        rule.f0v(y0) - rule.f0v(y1) - coupons.rho0,
        rule.f1v(y1) - rule.f1v(y0) - coupons.rho1,
    )
}

/// Posteriors implied by the solved strategy; `None` for off-path signals.
pub fn realized_posteriors<T: Scalar>(prior: &Prior<T>, bne: &ScoringBne<T>) -> Option<(T, T)> {
    bayes_posteriors(prior, &bne.b).ok()
}
