//! Coupon game where A may accuse either type or opt out, paid by a general matrix.

use serde::{Deserialize, Serialize};

use crate::error::{BneError, Result};
use crate::model::{BStrategy, CouponValues, OptOutPolicy, PaymentMatrix, Prior};
use crate::privacy::dp_epsilon;
use crate::scalar::{Extended, Scalar};

/// Region of the parameter space, numbered as the rows of the case table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptOutCase {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
    /// Parameters on the boundary of the listed rows.
    Boundary(Vec<u8>),
    /// The strawman assumptions fail.
    Infeasible,
}

impl OptOutCase {
    pub(crate) fn from_row(row: u8) -> Self {
        match row {
            1 => OptOutCase::Case1,
            2 => OptOutCase::Case2,
            3 => OptOutCase::Case3,
            4 => OptOutCase::Case4,
            5 => OptOutCase::Case5,
            _ => OptOutCase::Case6,
        }
    }

    pub fn label(&self) -> String {
        match self {
            OptOutCase::Boundary(rows) => {
                let r: Vec<String> = rows.iter().map(|r| r.to_string()).collect();
                format!("Boundary({})", r.join(","))
            }
            other => format!("{other:?}"),
        }
    }
}

/// Equilibrium of the opt-out game.
#[derive(Debug, Clone, PartialEq)]
pub struct OptOutBne<T = f64> {
    pub b: BStrategy<T>,
    pub a: OptOutPolicy<T>,
    pub case: OptOutCase,
    /// Every candidate equilibrium when the parameters sit on a boundary.
    pub candidates: Vec<(u8, BStrategy<T>, OptOutPolicy<T>)>,
    pub dp_epsilon: Extended<T>,
    /// B plays randomized response.
    pub rr: bool,
    pub unique: bool,
    pub notes: Vec<String>,
}

/// Checks that without a signal A prefers opting out to either accusation.
///
/// True iff `M00 / M01 < D1 / D0` and `M11 / M10 < D0 / D1`, compared
/// cross-multiplied so a zero denominator reads as an infinite ratio.
pub fn check_strawman<T: Scalar>(prior: &Prior<T>, m: &PaymentMatrix<T>) -> Result<bool> {
    Ok(strawman_violations(prior, m)?.is_empty())
}

/// Human-readable list of the violated strawman inequalities.
pub fn strawman_violations<T: Scalar>(prior: &Prior<T>, m: &PaymentMatrix<T>) -> Result<Vec<String>> {
    let zero = T::zero();
    if m.m00 == zero && m.m01 == zero {
        return Err(BneError::DivisionByZero("m00 / m01 with m00 = m01 = 0"));
    }
    if m.m11 == zero && m.m10 == zero {
        return Err(BneError::DivisionByZero("m11 / m10 with m11 = m10 = 0"));
    }
    let (d0, d1) = (prior.d0(), prior.d1());
    let mut out = Vec::new();
    if !(m.m00 * d0 < d1 * m.m01) {
        out.push(format!("m00/m01 < d1/d0 fails: {}/{} vs {}/{}", m.m00, m.m01, d1, d0));
    }
    if !(m.m11 * d1 < d0 * m.m10) {
        out.push(format!("m11/m10 < d0/d1 fails: {}/{} vs {}/{}", m.m11, m.m10, d0, d1));
    }
    Ok(out)
}

/// True iff `D0^2 M00 M10 = D1^2 M01 M11` within a relative tolerance.
pub fn rr_condition<T: Scalar>(prior: &Prior<T>, m: &PaymentMatrix<T>, tol: T) -> bool {
    let (d0, d1) = (prior.d0(), prior.d1());
    let lhs = d0 * d0 * m.m00 * m.m10;
    let rhs = d1 * d1 * m.m01 * m.m11;
    (lhs - rhs).abs() <= tol * lhs.max(rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Holds {
    Strict,
    Tight,
    Fails,
}

/// `lhs <= rhs`, compared relative to the larger side.
fn compare<T: Scalar>(lhs: T, rhs: T, tol: T) -> (Holds, T) {
    let scale = lhs.abs().max(rhs.abs()).max(T::min_positive_value());
    let slack = (rhs - lhs) / scale;
    let holds = if slack.abs() <= tol {
        Holds::Tight
    } else if slack > T::zero() {
        Holds::Strict
    } else {
        Holds::Fails
    };
    (holds, slack)
}

/// Inequalities `lhs <= rhs` of each case row, with only nonnegative terms on each side.
fn rows<T: Scalar>(m: &PaymentMatrix<T>, c: &CouponValues<T>) -> [Vec<(T, T)>; 6] {
    let PaymentMatrix { m00, m01, m10, m11 } = *m;
    let (r0, r1) = (c.rho0, c.rho1);
    let big = m01 * m10;
    let small = m00 * m11;
    [
        vec![(m00 + m10, r0), (m01 + m11, r1)],
        vec![(r0, m00), (r0 * m01, r1 * m00)],
        vec![(m00, r0), (r0, m00 + m10), (big + r0 * m11, r1 * m10 + small)],
        vec![(r1, m11), (r1 * m10, r0 * m11)],
        vec![(m11, r1), (r1, m11 + m01), (big + r1 * m00, r0 * m01 + small)],
        vec![
            (r0 * m11, r1 * m10),
            (r1 * m10 + small, big + r0 * m11),
            (r1 * m00, r0 * m01),
            (r0 * m01 + small, big + r1 * m00),
        ],
    ]
}

fn row_status<T: Scalar>(ineqs: &[(T, T)], tol: T) -> Holds {
    let mut status = Holds::Strict;
    for &(l, r) in ineqs {
        match compare(l, r, tol).0 {
            Holds::Fails => return Holds::Fails,
            Holds::Tight => status = Holds::Tight,
            Holds::Strict => {}
        }
    }
    status
}

/// Smallest relative slack over every inequality of every row.
///
/// Draws with a margin above `1e-6` are far from all case boundaries.
pub fn case_margin<T: Scalar>(m: &PaymentMatrix<T>, coupons: &CouponValues<T>) -> T {
    rows(m, coupons)
        .iter()
        .flatten()
        .map(|&(l, r)| compare(l, r, T::zero()).1.abs())
        .fold(T::infinity(), T::min)
}

/// Places the parameters into one of the six regions, or on a boundary between them.
pub fn classify_case<T: Scalar>(prior: &Prior<T>, m: &PaymentMatrix<T>, coupons: &CouponValues<T>) -> Result<OptOutCase> {
    if !check_strawman(prior, m)? {
        return Ok(OptOutCase::Infeasible);
    }
    let tol = T::tol(1e-9);
    let mut strict = Vec::new();
    let mut tight = Vec::new();
    for (i, ineqs) in rows(m, coupons).iter().enumerate() {
        match row_status(ineqs, tol) {
            Holds::Strict => strict.push(i as u8 + 1),
            Holds::Tight => tight.push(i as u8 + 1),
            Holds::Fails => {}
        }
    }
    match (strict.len(), tight.len()) {
        (1, 0) => Ok(OptOutCase::from_row(strict[0])),
        (0, 0) => Err(BneError::InternalInconsistency("no case row holds; the covering property failed".into())),
        (s, _) if s > 1 => Err(BneError::InternalInconsistency(format!("rows {strict:?} hold strictly at once; exclusivity failed"))),
        _ => {
            let mut all: Vec<u8> = strict.into_iter().chain(tight).collect();
            all.sort_unstable();
            Ok(OptOutCase::Boundary(all))
        }
    }
}

/// Expected utilities `(uA, uB0, uB1)`; opting out transfers nothing.
pub fn optout_utilities<T: Scalar>(
    prior: &Prior<T>,
    m: &PaymentMatrix<T>,
    coupons: &CouponValues<T>,
    b: &BStrategy<T>,
    a: &OptOutPolicy<T>,
) -> (T, T, T) {
    let one = T::one();
    let (p, q) = (b.p, b.q);
    let PaymentMatrix { m00, m01, m10, m11 } = *m;
    let ub0 = p * (coupons.rho0 - a.x0 * m00 + a.x1 * m10) + (one - p) * (-a.y0 * m00 + a.y1 * m10);
    let ub1 = q * (coupons.rho1 - a.y1 * m11 + a.y0 * m01) + (one - q) * (-a.x1 * m11 + a.x0 * m01);
    let (v0, v1, w0, w1) = accusation_values(prior, m, b);
    let ua = a.x0 * v0 + a.x1 * v1 + a.y0 * w0 + a.y1 * w1;
    (ua, ub0, ub1)
}

/// A's value of each accusation relative to opting out.
///
/// Returns `(signal 0 accuse 0, signal 0 accuse 1, signal 1 accuse 0, signal 1 accuse 1)`,
/// each weighted by the signal's probability mass.
pub fn accusation_values<T: Scalar>(prior: &Prior<T>, m: &PaymentMatrix<T>, b: &BStrategy<T>) -> (T, T, T, T) {
    let one = T::one();
    let (d0, d1) = (prior.d0(), prior.d1());
    let (p, q) = (b.p, b.q);
    let PaymentMatrix { m00, m01, m10, m11 } = *m;
    (
        d0 * p * m00 - d1 * (one - q) * m01,
        -d0 * p * m10 + d1 * (one - q) * m11,
        d0 * (one - p) * m00 - d1 * q * m01,
        -d0 * (one - p) * m10 + d1 * q * m11,
    )
}

fn candidate<T: Scalar>(row: u8, prior: &Prior<T>, m: &PaymentMatrix<T>, c: &CouponValues<T>) -> (BStrategy<T>, OptOutPolicy<T>) {
    let (zero, one) = (T::zero(), T::one());
    let (d0, d1) = (prior.d0(), prior.d1());
    let PaymentMatrix { m00, m01, m10, m11 } = *m;
    let (r0, r1) = (c.rho0, c.rho1);
    let clamp = |x: T| x.max(zero).min(one);
    let policy = |x0: T, y1: T| OptOutPolicy { x0: clamp(x0), x1: zero, y0: zero, y1: clamp(y1) };
    match row {
        1 => (BStrategy { p: one, q: one }, policy(one, one)),
        2 => (BStrategy { p: zero, q: one }, policy(r0 / m00, zero)),
        3 => (BStrategy { p: one - d1 * m11 / (d0 * m10), q: one }, policy(one, (r0 - m00) / m10)),
        4 => (BStrategy { p: one, q: zero }, policy(zero, r1 / m11)),
        5 => (BStrategy { p: one, q: one - d0 * m00 / (d1 * m01) }, policy((r1 - m11) / m01, one)),
        _ => {
            let delta = m01 * m10 - m00 * m11;
            let den = d0 * d1 * delta;
            let b = BStrategy { p: d1 * m01 * (d0 * m10 - d1 * m11) / den, q: d0 * m10 * (d1 * m01 - d0 * m00) / den };
            (b, policy((m10 * r1 - m11 * r0) / delta, (m01 * r0 - m00 * r1) / delta))
        }
    }
}

/// Equilibrium of the opt-out game.
///
/// A never accuses the type opposite to the signal (`x1 = y0 = 0`). In rows
/// 2 and 4 one signal is off path and the reported accusation probability
/// for it is one canonical choice among many.
pub fn solve_optout_bne<T: Scalar>(prior: &Prior<T>, m: &PaymentMatrix<T>, coupons: &CouponValues<T>) -> Result<OptOutBne<T>> {
    prior.ensure_ordered()?;
    let violations = strawman_violations(prior, m)?;
    if !violations.is_empty() {
        return Err(BneError::StrawmanViolated(violations.join("; ")));
    }
    let case = classify_case(prior, m, coupons)?;
    let (rows_used, unique): (Vec<u8>, bool) = match &case {
        OptOutCase::Boundary(rows) => (rows.clone(), false),
        OptOutCase::Case1 => (vec![1], true),
        OptOutCase::Case2 => (vec![2], false),
        OptOutCase::Case3 => (vec![3], true),
        OptOutCase::Case4 => (vec![4], false),
        OptOutCase::Case5 => (vec![5], true),
        OptOutCase::Case6 => (vec![6], true),
        OptOutCase::Infeasible => unreachable!("strawman checked above"),
    };
    let candidates: Vec<_> = rows_used
        .iter()
        .map(|&r| {
            let (b, a) = candidate(r, prior, m, coupons);
            (r, b, a)
        })
        .collect();
    let (_, b, a) = candidates[0];
    let mut notes = Vec::new();
    match rows_used[0] {
        2 => notes.push("signal 0 is off path; x0 = rho0/m00 is the canonical choice from a feasible set".into()),
        4 => notes.push("signal 1 is off path; y1 = rho1/m11 is the canonical choice from a feasible set".into()),
        _ => {}
    }
    let rr = case == OptOutCase::Case6 && rr_condition(prior, m, T::tol(1e-9));
    if rr {
        let eps = (prior.d1() * m.m01 / (prior.d0() * m.m00)).ln();
        notes.push(format!("randomized response with epsilon ln(d1 m01 / (d0 m00)) = {eps}"));
    }
    Ok(OptOutBne { b, a, case, candidates, dp_epsilon: dp_epsilon(&b), rr, unique, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: f64, b: f64, c: f64, d: f64) -> PaymentMatrix {
        PaymentMatrix::new(a, b, c, d).unwrap()
    }

    fn example_prior() -> Prior {
        let s = 1.5f64.sqrt();
        Prior::from_d0(s / (1.0 + s)).unwrap()
    }

    #[test]
    fn strawman_examples() {
        assert!(!check_strawman(&Prior::from_d0(0.6).unwrap(), &m(1.0, 0.0, 0.0, 1.0)).unwrap());
        assert!(check_strawman(&Prior::from_d0(0.5505).unwrap(), &m(1.0, 3.0, 2.0, 1.0)).unwrap());
        assert!(check_strawman(&Prior::from_d0(0.5).unwrap(), &m(1.0, 2.0, 2.0, 1.0)).unwrap());
        assert!(matches!(check_strawman(&Prior::from_d0(0.5).unwrap(), &m(0.0, 0.0, 2.0, 1.0)), Err(BneError::DivisionByZero(_))));
    }

    #[test]
    fn rr_condition_examples() {
        assert!(rr_condition(&example_prior(), &m(1.0, 3.0, 2.0, 1.0), 1e-12));
        assert!(rr_condition(&Prior::from_d0(0.5).unwrap(), &m(1.0, 2.0, 2.0, 1.0), 1e-12));
        assert!(!rr_condition(&Prior::from_d0(0.7).unwrap(), &m(1.0, 3.0, 2.0, 1.0), 1e-9));
    }

    #[test]
    fn case6_reference() {
        let c = CouponValues::new(1.0, 1.2).unwrap();
        let bne = solve_optout_bne(&example_prior(), &m(1.0, 3.0, 2.0, 1.0), &c).unwrap();
        assert_eq!(bne.case, OptOutCase::Case6);
        assert!((bne.a.x0 - 0.28).abs() < 1e-12 && (bne.a.y1 - 0.36).abs() < 1e-12);
        assert!((bne.b.p - bne.b.q).abs() < 1e-12 && (bne.b.p - 0.7101).abs() < 1e-4);
        assert!(bne.rr);
        assert!((bne.dp_epsilon.finite().unwrap() - 6f64.sqrt().ln()).abs() < 1e-10);
    }

    #[test]
    fn corner_cases() {
        let p = example_prior();
        let mm = m(1.0, 3.0, 2.0, 1.0);
        let bne = solve_optout_bne(&p, &mm, &CouponValues::new(5.0, 5.0).unwrap()).unwrap();
        assert_eq!((bne.case, bne.b), (OptOutCase::Case1, BStrategy { p: 1.0, q: 1.0 }));
        let bne = solve_optout_bne(&p, &mm, &CouponValues::new(3.0, 0.5).unwrap()).unwrap();
        assert_eq!((bne.case, bne.b), (OptOutCase::Case4, BStrategy { p: 1.0, q: 0.0 }));
        let bne = solve_optout_bne(&p, &mm, &CouponValues::new(0.5, 3.0).unwrap()).unwrap();
        assert_eq!((bne.case, bne.b), (OptOutCase::Case2, BStrategy { p: 0.0, q: 1.0 }));
    }

    #[test]
    fn boundary_lists_rows() {
        let p = example_prior();
        let mm = m(1.0, 3.0, 2.0, 1.0);
        let case = classify_case(&p, &mm, &CouponValues::new(3.0, 4.0).unwrap()).unwrap();
        assert!(matches!(case, OptOutCase::Boundary(ref r) if r.contains(&1)));
    }

    #[test]
    fn strawman_failure_is_reported() {
        let err = solve_optout_bne(&Prior::from_d0(0.6).unwrap(), &m(1.0, 0.5, 2.0, 1.0), &CouponValues::new(1.0, 1.0).unwrap());
        assert!(matches!(err, Err(BneError::StrawmanViolated(ref s)) if s.contains("m00/m01")));
    }

    #[test]
    fn all_opt_out_gives_a_nothing() {
        let (ua, _, _) = optout_utilities(&example_prior(), &m(1.0, 3.0, 2.0, 1.0), &CouponValues::new(1.0, 1.2).unwrap(), &BStrategy { p: 0.3, q: 0.8 }, &OptOutPolicy::opt_out());
        assert_eq!(ua, 0.0);
    }

    #[test]
    fn truthful_caught_type0_pays_m00() {
        let c = CouponValues::new(1.0, 1.2).unwrap();
        let (_, ub0, _) = optout_utilities(&example_prior(), &m(1.0, 3.0, 2.0, 1.0), &c, &BStrategy { p: 1.0, q: 1.0 }, &OptOutPolicy::accuse_signaled(1.0, 1.0).unwrap());
        assert_eq!(ub0, 0.0);
    }
}
