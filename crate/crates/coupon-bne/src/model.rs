//! Shared domain types and Bayes posteriors.

use serde::{Deserialize, Serialize};

use crate::error::{BneError, Result};
use crate::scalar::{Scalar, PROB_TOL};

/// Validates a probability with the crate-wide absolute tolerance, then clamps.
pub fn checked_probability<T: Scalar>(name: &'static str, x: T) -> Result<T> {
    let tol = T::tol(PROB_TOL);
    if x.is_nan() || x < -tol || x > T::one() + tol {
        return Err(BneError::InvalidProbability { name, value: x.as_f64() });
    }
    Ok(x.max(T::zero()).min(T::one()))
}

/// Distribution `(D0, D1)` of B's secret type.
///
/// [`Prior::new`] relabels the types when `d0 < d1`, so every solver sees
/// `d0 >= d1`. [`Prior::relabeled`] records whether that happened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior<T = f64> {
    d0: T,
    d1: T,
    relabeled: bool,
}

impl<T: Scalar> Prior<T> {
    pub fn new(d0: T, d1: T) -> Result<Self> {
        let d0 = checked_probability("d0", d0)?;
        let d1 = checked_probability("d1", d1)?;
        if (d0 + d1 - T::one()).abs() > T::tol(PROB_TOL) {
            return Err(BneError::InvalidPrior { sum: (d0 + d1).as_f64() });
        }
        if d1 <= T::zero() || d0 <= T::zero() {
            return Err(BneError::InvalidParameter("both types need positive prior mass".into()));
        }
        if d0 < d1 {
            Ok(Prior { d0: d1, d1: d0, relabeled: true })
        } else {
            Ok(Prior { d0, d1, relabeled: false })
        }
    }

    /// Prior from `d0` alone, with `d1 = 1 - d0`.
    pub fn from_d0(d0: T) -> Result<Self> {
        Self::new(d0, T::one() - d0)
    }

    /// Prior that keeps the given labels, even when `d0 < d1`.
    ///
    /// Utility evaluators accept either orientation; solvers do not.
    pub fn unordered(d0: T) -> Result<Self> {
        let d0 = checked_probability("d0", d0)?;
        let d1 = T::one() - d0;
        if d1 <= T::zero() || d0 <= T::zero() {
            return Err(BneError::InvalidParameter("both types need positive prior mass".into()));
        }
        Ok(Prior { d0, d1, relabeled: false })
    }

    pub fn d0(&self) -> T {
        self.d0
    }

    pub fn d1(&self) -> T {
        self.d1
    }

    pub fn relabeled(&self) -> bool {
        self.relabeled
    }

    pub fn is_uniform(&self) -> bool {
        (self.d0 - self.d1).abs() <= T::tol(1e-12)
    }

    pub(crate) fn ensure_ordered(&self) -> Result<()> {
        if self.d0 < self.d1 {
            return Err(BneError::InvalidParameter("solver expects d0 >= d1; build the prior with Prior::new".into()));
        }
        Ok(())
    }
}

/// B's mixed signaling strategy.
///
/// `p = Pr[signal 0 | type 0]`, `q = Pr[signal 1 | type 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BStrategy<T = f64> {
    pub p: T,
    pub q: T,
}

impl<T: Scalar> BStrategy<T> {
    pub fn new(p: T, q: T) -> Result<Self> {
        Ok(BStrategy { p: checked_probability("p", p)?, q: checked_probability("q", q)? })
    }

    /// Probability mass of each signal under the prior.
    pub fn signal_mass(&self, prior: &Prior<T>) -> (T, T) {
        let one = T::one();
        let m0 = prior.d0() * self.p + prior.d1() * (one - self.q);
        let m1 = prior.d0() * (one - self.p) + prior.d1() * self.q;
        (m0, m1)
    }

    /// The same strategy seen with type and signal labels swapped.
    pub fn swapped(&self) -> Self {
        BStrategy { p: self.q, q: self.p }
    }

    pub fn to_f64(self) -> BStrategy<f64> {
        BStrategy { p: self.p.as_f64(), q: self.q.as_f64() }
    }
}

/// Coupon valuations `rho0`, `rho1` of the two types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouponValues<T = f64> {
    pub rho0: T,
    pub rho1: T,
}

impl<T: Scalar> CouponValues<T> {
    pub fn new(rho0: T, rho1: T) -> Result<Self> {
        for (name, r) in [("rho0", rho0), ("rho1", rho1)] {
            if !(r > T::zero()) || !r.is_finite() {
                return Err(BneError::InvalidParameter(format!("{name} = {r} must be positive and finite")));
            }
        }
        Ok(CouponValues { rho0, rho1 })
    }

    pub fn symmetric(rho: T) -> Result<Self> {
        Self::new(rho, rho)
    }

    pub fn swapped(&self) -> Self {
        CouponValues { rho0: self.rho1, rho1: self.rho0 }
    }
}

/// Payment matrix of the opt-out game.
///
/// Diagonal entries are paid to A on a correct accusation; off-diagonal
/// entries are paid by A on a wrong one. Row is the true type, column the
/// accused type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaymentMatrix<T = f64> {
    pub m00: T,
    pub m01: T,
    pub m10: T,
    pub m11: T,
}

impl<T: Scalar> PaymentMatrix<T> {
    pub fn new(m00: T, m01: T, m10: T, m11: T) -> Result<Self> {
        for (name, m) in [("m00", m00), ("m01", m01), ("m10", m10), ("m11", m11)] {
            if !(m >= T::zero()) || !m.is_finite() {
                return Err(BneError::InvalidParameter(format!("{name} = {m} must be finite and >= 0")));
            }
        }
        Ok(PaymentMatrix { m00, m01, m10, m11 })
    }

    pub fn swapped(&self) -> Self {
        PaymentMatrix { m00: self.m11, m01: self.m10, m10: self.m01, m11: self.m00 }
    }
}

/// A's probability reports after each signal in the scoring-rule game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringReportPair<T = f64> {
    pub x0: T,
    pub x1: T,
}

impl<T: Scalar> ScoringReportPair<T> {
    pub fn new(x0: T, x1: T) -> Result<Self> {
        Ok(ScoringReportPair { x0: checked_probability("x0", x0)?, x1: checked_probability("x1", x1)? })
    }
}

/// A's guessing policy in the identity-payment game.
///
/// `x = Pr[guess 0 | signal 0]`, `y = Pr[guess 1 | signal 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessPolicy<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> GuessPolicy<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        Ok(GuessPolicy { x: checked_probability("x", x)?, y: checked_probability("y", y)? })
    }
}

/// A's policy in the opt-out game; leftover mass per signal is the opt-out.
///
/// `x0, x1`: accuse type 0 / type 1 after signal 0.
/// `y0, y1`: accuse type 0 / type 1 after signal 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptOutPolicy<T = f64> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
    pub y1: T,
}

impl<T: Scalar> OptOutPolicy<T> {
    pub fn new(x0: T, x1: T, y0: T, y1: T) -> Result<Self> {
        let p = OptOutPolicy {
            x0: checked_probability("x0", x0)?,
            x1: checked_probability("x1", x1)?,
            y0: checked_probability("y0", y0)?,
            y1: checked_probability("y1", y1)?,
        };
        let tol = T::tol(PROB_TOL);
        if p.x0 + p.x1 > T::one() + tol || p.y0 + p.y1 > T::one() + tol {
            return Err(BneError::InvalidParameter("accusation probabilities per signal exceed one".into()));
        }
        Ok(p)
    }

    /// Accuses the signaled type with the given probabilities, never the other.
    pub fn accuse_signaled(x0: T, y1: T) -> Result<Self> {
        Self::new(x0, T::zero(), T::zero(), y1)
    }

    pub fn opt_out() -> Self {
        OptOutPolicy { x0: T::zero(), x1: T::zero(), y0: T::zero(), y1: T::zero() }
    }

    pub fn swapped(&self) -> Self {
        OptOutPolicy { x0: self.y1, x1: self.y0, y0: self.x1, y1: self.x0 }
    }
}

/// Posterior probabilities that B is of type 1 after each signal.
///
/// Fails with [`BneError::ZeroSignalMass`] when a signal is never sent.
pub fn bayes_posteriors<T: Scalar>(prior: &Prior<T>, b: &BStrategy<T>) -> Result<(T, T)> {
    Ok((posterior(prior, b, 0)?, posterior(prior, b, 1)?))
}

/// Posterior `Pr[type 1 | signal]` for a single signal.
pub fn posterior<T: Scalar>(prior: &Prior<T>, b: &BStrategy<T>, signal: u8) -> Result<T> {
    let one = T::one();
    let (d0, d1) = (prior.d0(), prior.d1());
    let (num, den) = if signal == 0 {
        let num = d1 * (one - b.q);
        (num, d0 * b.p + num)
    } else {
        let num = d1 * b.q;
        (num, d0 * (one - b.p) + num)
    };
    if den <= T::zero() {
        return Err(BneError::ZeroSignalMass { signal });
    }
    Ok((num / den).max(T::zero()).min(one))
}

/// Posterior of a signal, or `None` when it is off the equilibrium path.
pub fn posterior_or_free<T: Scalar>(prior: &Prior<T>, b: &BStrategy<T>, signal: u8) -> Option<T> {
    posterior(prior, b, signal).ok()
}
