//! Game specifications, strategy profiles and solver dispatch.
//!
//! Configs are plain `f64` documents whose field names follow the model's
//! symbols (`d0`, `rho0`, `m00`, `v`). A spec with `d0 < 1/2` is solved with
//! type labels swapped and the report is translated back.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{BneError, Result};
use crate::identity_game::{identity_utilities, solve_continuous_threshold, solve_identity_bne, ValuationDistribution};
use crate::model::{bayes_posteriors, posterior_or_free, BStrategy, CouponValues, GuessPolicy, OptOutPolicy, PaymentMatrix, Prior, ScoringReportPair};
use crate::optout_game::{optout_utilities, solve_optout_bne};
use crate::privacy::{dp_epsilon, solve_privacy_aware, PrivacyAwareParams};
use crate::scalar::Extended;
use crate::scoring::ScoringRule;
use crate::scoring_game::{scoring_utilities, solve_scoring_bne, solve_scoring_bne_asymmetric};

/// A game to solve or verify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    PrivacyAware {
        d0: f64,
        rho0: f64,
        rho1: f64,
        v: f64,
    },
    Scoring {
        d0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho1: Option<f64>,
        rule: String,
    },
    Identity {
        d0: f64,
        rho0: f64,
        rho1: f64,
    },
    IdentityContinuous {
        d0: f64,
        valuation: ValuationDistribution,
        /// Type 1's distribution when it differs from type 0's.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        valuation1: Option<ValuationDistribution>,
    },
    OptOut {
        d0: f64,
        rho0: f64,
        rho1: f64,
        m00: f64,
        m01: f64,
        m10: f64,
        m11: f64,
    },
}

/// A's side of a strategy profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AStrategy {
    /// The single-agent privacy game has no second player.
    None,
    Reports(ScoringReportPair),
    Guess(GuessPolicy),
    /// Guess policy plus B's valuation threshold.
    Threshold { x: f64, y: f64, t: f64 },
    OptOut(OptOutPolicy),
}

impl AStrategy {
    fn swapped(&self) -> Self {
        match *self {
            AStrategy::None => AStrategy::None,
            AStrategy::Reports(r) => AStrategy::Reports(ScoringReportPair { x0: 1.0 - r.x1, x1: 1.0 - r.x0 }),
            AStrategy::Guess(g) => AStrategy::Guess(GuessPolicy { x: g.y, y: g.x }),
            AStrategy::Threshold { x, y, t } => AStrategy::Threshold { x: y, y: x, t },
            AStrategy::OptOut(o) => AStrategy::OptOut(o.swapped()),
        }
    }
}

/// Strategies of both players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub b: BStrategy,
    pub a: AStrategy,
}

impl Profile {
    fn swapped(&self) -> Self {
        Profile { b: self.b.swapped(), a: self.a.swapped() }
    }
}

/// `Pr[type 1 | signal]`; `None` marks an off-path signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posteriors {
    pub y0: Option<f64>,
    pub y1: Option<f64>,
}

/// Expected utilities; `None` where the quantity is not defined for the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Utilities {
    pub a: Option<f64>,
    pub b0: Option<f64>,
    pub b1: Option<f64>,
}

/// Everything a solver reports about one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub game: String,
    pub case_label: String,
    pub unique: bool,
    pub profile: Profile,
    pub posteriors: Posteriors,
    pub utilities: Utilities,
    /// Headline privacy level: the posterior log-odds spread `ln(y1 / y0)`
    /// in the scoring game, `dp_epsilon` everywhere else.
    pub epsilon: Option<Extended<f64>>,
    /// `ln X_game` of B's strategy.
    pub dp_epsilon: Option<Extended<f64>>,
    /// Type labels were swapped internally because `d0 < d1`.
    pub relabeled: bool,
    pub notes: Vec<String>,
    pub details: BTreeMap<String, Value>,
}

fn ext(x: f64) -> Value {
    serde_json::to_value(Extended::from_float(x)).expect("extended real serializes")
}

fn strat(b: &BStrategy) -> Value {
    json!({"p": b.p, "q": b.q})
}

impl GameSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GameSpec::PrivacyAware { .. } => "privacy_aware",
            GameSpec::Scoring { rho0: Some(_), .. } | GameSpec::Scoring { rho1: Some(_), .. } => "scoring_asymmetric",
            GameSpec::Scoring { .. } => "scoring",
            GameSpec::Identity { .. } => "identity",
            GameSpec::IdentityContinuous { .. } => "identity_continuous",
            GameSpec::OptOut { .. } => "opt_out",
        }
    }

    pub fn d0(&self) -> f64 {
        match self {
            GameSpec::PrivacyAware { d0, .. }
            | GameSpec::Scoring { d0, .. }
            | GameSpec::Identity { d0, .. }
            | GameSpec::IdentityContinuous { d0, .. }
            | GameSpec::OptOut { d0, .. } => *d0,
        }
    }

    /// Coupon values of the spec, resolving the scoring game's `rho` shorthand.
    pub fn coupons(&self) -> Result<CouponValues> {
        match *self {
            GameSpec::PrivacyAware { rho0, rho1, .. } | GameSpec::Identity { rho0, rho1, .. } | GameSpec::OptOut { rho0, rho1, .. } => CouponValues::new(rho0, rho1),
            GameSpec::Scoring { rho, rho0, rho1, .. } => match (rho, rho0, rho1) {
                (Some(r), None, None) => CouponValues::symmetric(r),
                (None, Some(a), Some(b)) => CouponValues::new(a, b),
                _ => Err(BneError::InvalidParameter("scoring game needs either rho or both rho0 and rho1".into())),
            },
            GameSpec::IdentityContinuous { .. } => Err(BneError::InvalidParameter("continuous game has no fixed coupon values".into())),
        }
    }

    fn rule(&self) -> Result<ScoringRule> {
        match self {
            GameSpec::Scoring { rule, .. } => ScoringRule::by_name(rule),
            _ => Err(BneError::InvalidParameter("not a scoring game".into())),
        }
    }

    /// Checks every component without solving.
    pub fn validate(&self) -> Result<()> {
        Prior::from_d0(self.d0())?;
        match self {
            GameSpec::PrivacyAware { v, .. } => {
                PrivacyAwareParams::new(Prior::from_d0(self.d0())?, self.coupons()?, *v)?;
            }
            GameSpec::Scoring { .. } => {
                self.coupons()?;
                self.rule()?;
            }
            GameSpec::Identity { .. } => {
                self.coupons()?;
            }
            GameSpec::IdentityContinuous { valuation, valuation1, .. } => {
                valuation.validate()?;
                if let Some(v) = valuation1 {
                    v.validate()?;
                }
            }
            GameSpec::OptOut { m00, m01, m10, m11, .. } => {
                self.coupons()?;
                PaymentMatrix::new(*m00, *m01, *m10, *m11)?;
            }
        }
        Ok(())
    }

    /// The same game with type and signal labels swapped.
    pub fn swapped(&self) -> Self {
        let d0 = 1.0 - self.d0();
        match self.clone() {
            GameSpec::PrivacyAware { rho0, rho1, v, .. } => GameSpec::PrivacyAware { d0, rho0: rho1, rho1: rho0, v },
            GameSpec::Scoring { rho, rho0, rho1, rule, .. } => GameSpec::Scoring { d0, rho, rho0: rho1, rho1: rho0, rule },
            GameSpec::Identity { rho0, rho1, .. } => GameSpec::Identity { d0, rho0: rho1, rho1: rho0 },
            GameSpec::IdentityContinuous { valuation, valuation1, .. } => match valuation1 {
                Some(v1) => GameSpec::IdentityContinuous { d0, valuation: v1, valuation1: Some(valuation) },
                None => GameSpec::IdentityContinuous { d0, valuation, valuation1: None },
            },
            GameSpec::OptOut { rho0, rho1, m00, m01, m10, m11, .. } => GameSpec::OptOut { d0, rho0: rho1, rho1: rho0, m00: m11, m01: m10, m10: m01, m11: m00 },
        }
    }

    /// Returns a copy with one parameter replaced, for sweeps.
    pub fn with_param(&self, axis: &str, value: f64) -> Result<Self> {
        let mut g = self.clone();
        let unsupported = || BneError::InvalidParameter(format!("axis `{axis}` does not apply to {}", self.kind()));
        match (&mut g, axis) {
            (GameSpec::PrivacyAware { d0, .. }, "d0")
            | (GameSpec::Scoring { d0, .. }, "d0")
            | (GameSpec::Identity { d0, .. }, "d0")
            | (GameSpec::IdentityContinuous { d0, .. }, "d0")
            | (GameSpec::OptOut { d0, .. }, "d0") => *d0 = value,
            (GameSpec::PrivacyAware { v, .. }, "v") => *v = value,
            (GameSpec::Scoring { rho, rho0, rho1, .. }, "rho") => {
                *rho = Some(value);
                *rho0 = None;
                *rho1 = None;
            }
            (GameSpec::Scoring { rho, rho0, rho1, .. }, "rho0" | "rho1") => {
                let base = *rho;
                *rho0 = rho0.or(base);
                *rho1 = rho1.or(base);
                *rho = None;
                if axis == "rho0" {
                    *rho0 = Some(value);
                } else {
                    *rho1 = Some(value);
                }
            }
            (GameSpec::PrivacyAware { rho0, rho1, .. }, a) | (GameSpec::Identity { rho0, rho1, .. }, a) | (GameSpec::OptOut { rho0, rho1, .. }, a)
                if matches!(a, "rho" | "rho0" | "rho1") =>
            {
                if a != "rho1" {
                    *rho0 = value;
                }
                if a != "rho0" {
                    *rho1 = value;
                }
            }
            _ => return Err(unsupported()),
        }
        Ok(g)
    }
}

/// Solves a game, translating labels back when `d0 < d1`.
pub fn solve(spec: &GameSpec) -> Result<EquilibriumReport> {
    spec.validate()?;
    if spec.d0() < 0.5 {
        let mut report = solve_ordered(&spec.swapped())?;
        report.relabeled = true;
        report.profile = report.profile.swapped();
        report.posteriors = Posteriors { y0: report.posteriors.y1.map(|y| 1.0 - y), y1: report.posteriors.y0.map(|y| 1.0 - y) };
        report.utilities = Utilities { a: report.utilities.a, b0: report.utilities.b1, b1: report.utilities.b0 };
        report.game = spec.kind().to_string();
        report.notes.push("d0 < d1: solved with type labels swapped; strategies are reported in the original labels".into());
        return Ok(report);
    }
    solve_ordered(spec)
}

fn posteriors_of(prior: &Prior, b: &BStrategy) -> Posteriors {
    Posteriors { y0: posterior_or_free(prior, b, 0), y1: posterior_or_free(prior, b, 1) }
}

fn solve_ordered(spec: &GameSpec) -> Result<EquilibriumReport> {
    let prior = Prior::from_d0(spec.d0())?;
    let mut details = BTreeMap::new();
    let report = match spec {
        GameSpec::PrivacyAware { v, .. } => {
            let params = PrivacyAwareParams::new(prior, spec.coupons()?, *v)?;
            let opt = solve_privacy_aware(&params);
            let u = opt.utility.finite();
            if let Some((b, ub)) = opt.interior {
                details.insert("interior_candidate".into(), json!({"p": b.p, "q": b.q, "utility": ub}));
            }
            details.insert("y".into(), json!(params.y()));
            let interior = opt.interior.is_some_and(|(b, _)| b == opt.b);
            EquilibriumReport {
                game: spec.kind().into(),
                case_label: if interior { "RandomizedResponse".into() } else { "Corner".into() },
                unique: opt.degeneracy.is_none(),
                profile: Profile { b: opt.b, a: AStrategy::None },
                posteriors: posteriors_of(&prior, &opt.b),
                utilities: Utilities { a: None, b0: u, b1: u },
                epsilon: Some(dp_epsilon(&opt.b)),
                dp_epsilon: Some(dp_epsilon(&opt.b)),
                relabeled: false,
                notes: opt.degeneracy.into_iter().collect(),
                details,
            }
        }
        GameSpec::Scoring { rho, .. } => {
            let rule = spec.rule()?;
            let coupons = spec.coupons()?;
            let bne = match rho {
                Some(r) => solve_scoring_bne(&prior, *r, &rule)?,
                None => solve_scoring_bne_asymmetric(&prior, &coupons, &rule)?,
            };
            let (ua, ub0, ub1) = scoring_utilities(&prior, &rule, &coupons, &bne.b, &bne.a);
            details.insert("regime".into(), json!(format!("{:?}", bne.regime)));
            details.insert("posterior_epsilon".into(), ext(bne.posterior_epsilon));
            details.insert("a_profit".into(), json!(bne.a_profit));
            details.insert("benchmark_profit".into(), json!(bne.benchmark_profit));
            details.insert("rule".into(), json!(rule.name()));
            if let Some((lo, hi)) = bne.x1_interval {
                details.insert("x1_interval".into(), json!([lo, hi]));
            }
            EquilibriumReport {
                game: spec.kind().into(),
                case_label: format!("{:?}", bne.regime),
                unique: bne.unique,
                profile: Profile { b: bne.b, a: AStrategy::Reports(bne.a) },
                posteriors: posteriors_of(&prior, &bne.b),
                utilities: Utilities { a: Some(ua), b0: Some(ub0), b1: Some(ub1) },
                epsilon: Some(Extended::from_float(bne.posterior_epsilon)),
                dp_epsilon: Some(dp_epsilon(&bne.b)),
                relabeled: false,
                notes: bne.notes,
                details,
            }
        }
        GameSpec::Identity { .. } => {
            let coupons = spec.coupons()?;
            let bne = solve_identity_bne(&prior, &coupons)?;
            let (ua, ub0, ub1) = identity_utilities(&prior, &coupons, &bne.b, &bne.a);
            if let Some((lo, hi)) = bne.y_interval {
                details.insert("y_interval".into(), json!([lo, hi]));
            }
            if let Some(rr) = bne.rr_point {
                details.insert("rr_point".into(), strat(&rr));
            }
            if let Some((s, e)) = bne.b_segment {
                details.insert("b_segment".into(), json!([strat(&s), strat(&e)]));
            }
            EquilibriumReport {
                game: spec.kind().into(),
                case_label: format!("{:?}", bne.case),
                unique: bne.unique,
                profile: Profile { b: bne.b, a: AStrategy::Guess(bne.a) },
                posteriors: posteriors_of(&prior, &bne.b),
                utilities: Utilities { a: Some(ua), b0: Some(ub0), b1: Some(ub1) },
                epsilon: Some(bne.dp_epsilon.to_f64()),
                dp_epsilon: Some(bne.dp_epsilon.to_f64()),
                relabeled: false,
                notes: bne.notes,
                details,
            }
        }
        GameSpec::IdentityContinuous { valuation, valuation1, .. } => {
            let sol = solve_continuous_threshold(&prior, valuation, valuation1.as_ref())?;
            details.insert("threshold".into(), json!(sol.threshold));
            details.insert("root_interval".into(), json!([sol.root_interval.0, sol.root_interval.1]));
            let mut notes = Vec::new();
            let unique = sol.root_interval.0 == sol.root_interval.1;
            if !unique {
                notes.push("CDF_B equals d1 on an interval; the smallest root is reported".into());
            }
            if valuation1.is_some() {
                notes.push("valuation distributions differ by type; epsilon omitted".into());
            }
            let (ua, _, _) = identity_utilities(&prior, &CouponValues { rho0: 1.0, rho1: 1.0 }, &sol.b, &sol.a);
            EquilibriumReport {
                game: spec.kind().into(),
                case_label: if sol.threshold < 1.0 { "Threshold".into() } else { "ThresholdAtOne".into() },
                unique,
                profile: Profile { b: sol.b, a: AStrategy::Threshold { x: sol.a.x, y: sol.a.y, t: sol.threshold } },
                posteriors: posteriors_of(&prior, &sol.b),
                utilities: Utilities { a: Some(ua), b0: None, b1: None },
                epsilon: sol.dp_epsilon,
                dp_epsilon: sol.dp_epsilon,
                relabeled: false,
                notes,
                details,
            }
        }
        GameSpec::OptOut { m00, m01, m10, m11, .. } => {
            let m = PaymentMatrix::new(*m00, *m01, *m10, *m11)?;
            let coupons = spec.coupons()?;
            let bne = solve_optout_bne(&prior, &m, &coupons)?;
            let (ua, ub0, ub1) = optout_utilities(&prior, &m, &coupons, &bne.b, &bne.a);
            details.insert("rr".into(), json!(bne.rr));
            if bne.candidates.len() > 1 {
                let c: Vec<Value> = bne.candidates.iter().map(|(r, b, a)| json!({"row": r, "b": strat(b), "a": a})).collect();
                details.insert("candidates".into(), Value::Array(c));
            }
            EquilibriumReport {
                game: spec.kind().into(),
                case_label: bne.case.label(),
                unique: bne.unique,
                profile: Profile { b: bne.b, a: AStrategy::OptOut(bne.a) },
                posteriors: posteriors_of(&prior, &bne.b),
                utilities: Utilities { a: Some(ua), b0: Some(ub0), b1: Some(ub1) },
                epsilon: Some(bne.dp_epsilon.to_f64()),
                dp_epsilon: Some(bne.dp_epsilon.to_f64()),
                relabeled: false,
                notes: bne.notes,
                details,
            }
        }
    };
    Ok(report)
}

/// Posteriors of a profile under the spec's prior, in the spec's own labels.
pub fn profile_posteriors(spec: &GameSpec, b: &BStrategy) -> Result<(f64, f64)> {
    bayes_posteriors(&Prior::unordered(spec.d0())?, b)
}
