//! Proper scoring rules built from a convex generator `g`.
//!
//! A report `x` is A's probability that B is of type 1. A type-`t` agent pays
//! `f_t(x)` where `f0(x) = g(x) - x g'(x)` and `f1(x) = g(x) + (1 - x) g'(x)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{BneError, Result};
use crate::scalar::{Extended, Scalar};

type Eval<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
enum Generator<T> {
    Quadratic,
    Spherical,
    Logarithmic,
    Custom { g: Eval<T>, dg: Eval<T>, d2g: Eval<T> },
}

/// A proper scoring rule with closed-form generator and derivatives.
#[derive(Clone)]
pub struct ScoringRule<T = f64> {
    name: String,
    generator: Generator<T>,
    symmetric: bool,
}

impl<T> fmt::Debug for ScoringRule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoringRule").field("name", &self.name).field("symmetric", &self.symmetric).finish()
    }
}

/// `g(x) = 2 - 2x + 2x^2`, paying `f0 = 2 - 2x^2` and `f1 = 4x - 2x^2`.
pub fn make_quadratic<T: Scalar>() -> ScoringRule<T> {
    ScoringRule { name: "quadratic".into(), generator: Generator::Quadratic, symmetric: true }
}

/// `g(x) = sqrt(x^2 + (1 - x)^2)`.
pub fn make_spherical<T: Scalar>() -> ScoringRule<T> {
    ScoringRule { name: "spherical".into(), generator: Generator::Spherical, symmetric: true }
}

/// `g(x) = x ln x + (1 - x) ln(1 - x)`, paying `f0 = ln(1 - x)` and `f1 = ln x`.
pub fn make_logarithmic<T: Scalar>() -> ScoringRule<T> {
    ScoringRule { name: "logarithmic".into(), generator: Generator::Logarithmic, symmetric: true }
}

fn xlnx<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.ln()
    }
}

impl<T: Scalar> ScoringRule<T> {
    /// Looks up `"quadratic"`, `"spherical"` or `"logarithmic"`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "quadratic" => Ok(make_quadratic()),
            "spherical" => Ok(make_spherical()),
            "logarithmic" => Ok(make_logarithmic()),
            other => Err(BneError::InvalidRule { name: other.into(), reason: "unknown rule name".into() }),
        }
    }

    /// Builds a rule from user-supplied `g`, `g'` and `g''`.
    ///
    /// Convexity (`g'' > 0`) is checked on the interior of a `1e-3` grid and
    /// the symmetry flag is set when `g(x) = g(1 - x)` there within `1e-10`.
    pub fn custom<G, D, D2>(name: &str, g: G, dg: D, d2g: D2) -> Result<Self>
    where
        G: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
        D2: Fn(T) -> T + Send + Sync + 'static,
    {
        let invalid = |reason: String| BneError::InvalidRule { name: name.into(), reason };
        let mut symmetric = true;
        for i in 1..1000 {
            let x = T::lit(i as f64 * 1e-3);
            let c = d2g(x);
            if !(c > T::zero()) {
                return Err(invalid(format!("g''({x}) = {c} is not positive")));
            }
            if !g(x).is_finite() || !dg(x).is_finite() {
                return Err(invalid(format!("g or g' is not finite at {x}")));
            }
            if (g(x) - g(T::one() - x)).abs() > T::tol(1e-10) {
                symmetric = false;
            }
        }
        Ok(ScoringRule {
            name: name.into(),
            generator: Generator::Custom { g: Arc::new(g), dg: Arc::new(dg), d2g: Arc::new(d2g) },
            symmetric,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn check(x: T) -> Result<()> {
        if x.is_nan() || x < T::zero() || x > T::one() {
            return Err(BneError::DomainError { x: x.as_f64() });
        }
        Ok(())
    }

    pub fn g(&self, x: T) -> T {
        let one = T::one();
        let two = T::lit(2.0);
        match &self.generator {
            Generator::Quadratic => two - two * x + two * x * x,
            Generator::Spherical => (x * x + (one - x) * (one - x)).sqrt(),
            Generator::Logarithmic => xlnx(x) + xlnx(one - x),
            Generator::Custom { g, .. } => g(x),
        }
    }

    pub fn dg(&self, x: T) -> T {
        let one = T::one();
        let two = T::lit(2.0);
        match &self.generator {
            Generator::Quadratic => -two + T::lit(4.0) * x,
            Generator::Spherical => (two * x - one) / self.g(x),
            Generator::Logarithmic => x.ln() - (one - x).ln(),
            Generator::Custom { dg, .. } => dg(x),
        }
    }

    pub fn d2g(&self, x: T) -> T {
        let one = T::one();
        match &self.generator {
            Generator::Quadratic => T::lit(4.0),
            Generator::Spherical => self.g(x).powi(-3),
            Generator::Logarithmic => one / x + one / (one - x),
            Generator::Custom { d2g, .. } => d2g(x),
        }
    }

    /// `f0` as a float; `-inf` at the logarithmic rule's singular endpoint.
    pub(crate) fn f0v(&self, x: T) -> T {
        match &self.generator {
            Generator::Quadratic => T::lit(2.0) - T::lit(2.0) * x * x,
            Generator::Logarithmic => (T::one() - x).ln(),
            _ => self.g(x) - x * self.dg(x),
        }
    }

    /// `f1` as a float; `-inf` at the logarithmic rule's singular endpoint.
    pub(crate) fn f1v(&self, x: T) -> T {
        match &self.generator {
            Generator::Quadratic => T::lit(4.0) * x - T::lit(2.0) * x * x,
            Generator::Logarithmic => x.ln(),
            _ => self.g(x) + (T::one() - x) * self.dg(x),
        }
    }

    /// Payment of a type-0 agent when A reports `x`.
    pub fn f0(&self, x: T) -> Result<Extended<T>> {
        Self::check(x)?;
        Ok(Extended::from_float(self.f0v(x)))
    }

    /// Payment of a type-1 agent when A reports `x`.
    pub fn f1(&self, x: T) -> Result<Extended<T>> {
        Self::check(x)?;
        Ok(Extended::from_float(self.f1v(x)))
    }

    /// Expected payment `F_mu(x) = g(x) - (x - mu) g'(x)` when the truth is `mu`.
    pub fn expected_payment(&self, mu: T, x: T) -> Result<Extended<T>> {
        Self::check(mu)?;
        Self::check(x)?;
        let one = T::one();
        let f0 = self.f0v(x);
        let f1 = self.f1v(x);
        // Mixing with zero weight must not turn -inf into NaN.
        let part = |w: T, f: T| if w == T::zero() { T::zero() } else { w * f };
        Ok(Extended::from_float(part(one - mu, f0) + part(mu, f1)))
    }
}

/// Grid maximizer of `F_mu` over `x`, skipping reports with infinite loss.
pub fn grid_argmax_expected_payment<T: Scalar>(rule: &ScoringRule<T>, mu: T, step: T) -> T {
    let n = (T::one() / step).round().to_usize().unwrap_or(1).max(1);
    let nf = T::from_usize(n).unwrap();
    let mut best = (Extended::NegInf, T::zero());
    for i in 0..=n {
        let x = T::from_usize(i).unwrap() / nf;
        let v = rule.expected_payment(mu, x).expect("grid point in [0,1]");
        if v > best.0 {
            best = (v, x);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_values() {
        let r = make_quadratic::<f64>();
        assert!((r.f1(0.75).unwrap().finite().unwrap() - 1.875).abs() < 1e-15);
        assert_eq!(r.dg(0.75), 1.0);
        assert_eq!(r.d2g(0.3), 4.0);
        let x = 0.37;
        assert!((r.f0v(x) - (r.g(x) - x * r.dg(x))).abs() < 1e-14);
        assert!((r.f1v(x) - (r.g(x) + (1.0 - x) * r.dg(x))).abs() < 1e-14);
    }

    #[test]
    fn spherical_symmetry_point() {
        let r = make_spherical::<f64>();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.f0(0.5).unwrap().finite().unwrap() - h).abs() < 1e-15);
        assert!((r.f1(0.5).unwrap().finite().unwrap() - h).abs() < 1e-15);
    }

    #[test]
    fn logarithmic_endpoints() {
        let r = make_logarithmic::<f64>();
        assert_eq!(r.f1(1.0).unwrap(), Extended::Finite(0.0));
        assert_eq!(r.f0(1.0).unwrap(), Extended::NegInf);
        assert_eq!(r.f1(0.0).unwrap(), Extended::NegInf);
        assert_eq!(r.dg(0.5), 0.0);
        assert_eq!(r.expected_payment(1.0, 1.0).unwrap(), Extended::Finite(0.0));
    }

    #[test]
    fn domain_errors() {
        let r = make_quadratic::<f64>();
        assert!(matches!(r.f0(1.5), Err(BneError::DomainError { .. })));
        assert!(r.expected_payment(-0.1, 0.5).is_err());
    }

    #[test]
    fn expected_payment_reference() {
        let r = make_quadratic::<f64>();
        let v = r.expected_payment(0.5, 0.25).unwrap().finite().unwrap();
        assert!((v - 1.375).abs() < 1e-15);
        assert!((r.expected_payment(0.3, 0.3).unwrap().finite().unwrap() - r.g(0.3)).abs() < 1e-15);
    }

    #[test]
    fn custom_rule_validation() {
        let r = ScoringRule::<f64>::custom("quad2", |x| x * x + (1.0 - x) * (1.0 - x), |x| 4.0 * x - 2.0, |_| 4.0).unwrap();
        assert!(r.is_symmetric());
        let skew = ScoringRule::<f64>::custom("skew", |x| x * x, |x| 2.0 * x, |_| 2.0).unwrap();
        assert!(!skew.is_symmetric());
        assert!(ScoringRule::<f64>::custom("concave", |x| -x * x, |x| -2.0 * x, |_| -2.0).is_err());
    }

    #[test]
    fn lookup_by_name() {
        for n in ["quadratic", "spherical", "logarithmic"] {
            assert_eq!(ScoringRule::<f64>::by_name(n).unwrap().name(), n);
        }
        assert!(ScoringRule::<f64>::by_name("brier").is_err());
    }

    #[test]
    fn f32_rules_evaluate() {
        let r = make_spherical::<f32>();
        assert!((r.dg(0.75f32) - 0.5 / (0.625f32).sqrt()).abs() < 1e-6);
    }
}
