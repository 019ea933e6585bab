//! Brute-force verification on strategy grids.
//!
//! [`best_response_gap`] measures how much each player could gain by
//! deviating from a profile. [`enumerate_equilibria`] scans B's strategy grid
//! for approximate equilibria and clusters the hits into connected
//! components. Both work in the spec's own labels, without relabeling.
//!
//! A's best response is exact per signal in the identity, continuous and
//! opt-out games (at most three pure actions) and gridded over reports in
//! the scoring game. B's utility is linear in its own mixing probability in
//! every game except the privacy-aware one, which is searched on a joint grid.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BneError, Result};
use crate::game::{AStrategy, GameSpec, Profile};
use crate::identity_game::{identity_utilities, ValuationDistribution};
use crate::model::{posterior_or_free, BStrategy, CouponValues, GuessPolicy, OptOutPolicy, PaymentMatrix, Prior, ScoringReportPair};
use crate::optout_game::{accusation_values, optout_utilities};
use crate::privacy::{privacy_aware_utility, PrivacyAwareParams};
use crate::scoring::ScoringRule;
use crate::scoring_game::scoring_utilities;

/// Grid evaluations allowed in one enumeration.
pub const EVALUATION_BUDGET: u64 = 10_000_000;

/// Hits at most this many cells apart (per axis) join one component.
///
/// Equilibrium lines rarely have slope 0 or 1 on the grid: the segment
/// `q = 1 - 1.5 p` only meets grid points 2 cells apart in `p` and 3 in `q`.
const LINK_RADIUS: i64 = 3;

/// Gains below this are rounding noise and are not described.
const NOTE_FLOOR: f64 = 1e-12;

/// Finest grid accepted by [`enumerate_equilibria`].
pub const MIN_ENUMERATION_STEP: f64 = 1e-3;

/// Largest deviation gains found for each player.
///
/// Gains are never negative because the null deviation is always available.
/// A gain is `+inf` when the profile itself has utility `-inf` and some
/// deviation does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    #[serde(with = "extended_f64")]
    pub gap_a: f64,
    #[serde(with = "extended_f64")]
    pub gap_b0: f64,
    #[serde(with = "extended_f64")]
    pub gap_b1: f64,
    pub grid_step: f64,
    /// Most profitable deviation of each player that gains anything.
    pub argmax_deviations: Vec<String>,
}

impl GapReport {
    pub fn max_gap(&self) -> f64 {
        self.gap_a.max(self.gap_b0).max(self.gap_b1)
    }

    /// True when the profile is a `tol`-approximate equilibrium.
    pub fn passes(&self, tol: f64) -> bool {
        self.max_gap() <= tol
    }
}

/// Serializes infinite floats as `"inf"` / `"-inf"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::scalar::Extended;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        Extended::from_float(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Extended::<f64>::deserialize(d)?.to_float())
    }
}

/// A connected set of grid profiles that all pass the gap check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumComponent {
    /// Member with the smallest largest gap.
    pub representative: Profile,
    pub max_gap: f64,
    pub size: usize,
    pub p_range: (f64, f64),
    pub q_range: (f64, f64),
    pub members: Vec<Profile>,
}

/// One row of [`utility_surface`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub p: f64,
    pub q: f64,
    pub u_b0: f64,
    pub u_b1: f64,
    /// A's utility when best-responding; empty for the single-agent game.
    pub u_a: Option<f64>,
}

enum Model {
    Privacy(PrivacyAwareParams),
    Scoring { prior: Prior, rule: ScoringRule, coupons: CouponValues },
    Identity { prior: Prior, coupons: CouponValues },
    Continuous { prior: Prior, dist0: ValuationDistribution, dist1: ValuationDistribution },
    OptOut { prior: Prior, m: PaymentMatrix, coupons: CouponValues },
}

impl Model {
    fn new(spec: &GameSpec) -> Result<Self> {
        spec.validate()?;
        let prior = Prior::unordered(spec.d0())?;
        Ok(match spec {
            GameSpec::PrivacyAware { v, .. } => Model::Privacy(PrivacyAwareParams::new(prior, spec.coupons()?, *v)?),
            GameSpec::Scoring { rule, .. } => Model::Scoring { prior, rule: ScoringRule::by_name(rule)?, coupons: spec.coupons()? },
            GameSpec::Identity { .. } => Model::Identity { prior, coupons: spec.coupons()? },
            GameSpec::IdentityContinuous { valuation, valuation1, .. } => Model::Continuous {
                prior,
                dist0: valuation.clone(),
                dist1: valuation1.clone().unwrap_or_else(|| valuation.clone()),
            },
            GameSpec::OptOut { m00, m01, m10, m11, .. } => Model::OptOut { prior, m: PaymentMatrix::new(*m00, *m01, *m10, *m11)?, coupons: spec.coupons()? },
        })
    }

    /// `(uA, uB0, uB1)` for the games where B's utility is linear in `(p, q)`.
    fn linear_utilities(&self, b: &BStrategy, a: &AStrategy) -> Result<(f64, f64, f64)> {
        match (self, a) {
            (Model::Scoring { prior, rule, coupons }, AStrategy::Reports(r)) => Ok(scoring_utilities(prior, rule, coupons, b, r)),
            (Model::Identity { prior, coupons }, AStrategy::Guess(g)) => Ok(identity_utilities(prior, coupons, b, g)),
            (Model::OptOut { prior, m, coupons }, AStrategy::OptOut(o)) => Ok(optout_utilities(prior, m, coupons, b, o)),
            _ => Err(mismatch()),
        }
    }
}

fn mismatch() -> BneError {
    BneError::InvalidParameter("profile strategy does not match the game kind".into())
}

fn grid_points(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(BneError::InvalidParameter(format!("grid step {step} must lie in (0, 1]")));
    }
    let n = (1.0 / step).round().max(1.0) as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// Gain of the best deviation over `current`, floored at zero.
fn gain(best: f64, current: f64) -> f64 {
    if current == f64::NEG_INFINITY {
        return if best == f64::NEG_INFINITY { 0.0 } else { f64::INFINITY };
    }
    (best - current).max(0.0)
}

/// Best value of `f` over the grid, with its argument.
fn grid_max(grid: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64) {
    grid.iter().fold((f64::NEG_INFINITY, grid[0]), |best, &x| {
        let v = f(x);
        if v > best.0 {
            (v, x)
        } else {
            best
        }
    })
}

fn weighted(w: f64, f: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * f
    }
}

/// Signal-0 and signal-1 contributions to A's scoring payoff.
fn scoring_signal_values(prior: &Prior, rule: &ScoringRule, b: &BStrategy, x: f64, signal: u8) -> f64 {
    let (d0, d1) = (prior.d0(), prior.d1());
    let (w0, w1) = if signal == 0 { (d0 * b.p, d1 * (1.0 - b.q)) } else { (d0 * (1.0 - b.p), d1 * b.q) };
    weighted(w0, rule.f0v(x)) + weighted(w1, rule.f1v(x))
}

/// A's values of guessing "type 0" and "type 1" at each signal.
fn guess_values(prior: &Prior, b: &BStrategy) -> [(f64, f64); 2] {
    let (d0, d1) = (prior.d0(), prior.d1());
    [(d0 * b.p, d1 * (1.0 - b.q)), (d0 * (1.0 - b.p), d1 * b.q)]
}

/// Exact gap of A's guess policy; `x` is `Pr[guess 0 | signal 0]` and `y` is `Pr[guess 1 | signal 1]`.
fn guess_gap(prior: &Prior, b: &BStrategy, a: &GuessPolicy, notes: &mut Vec<String>) -> f64 {
    let [(g00, g01), (g10, g11)] = guess_values(prior, b);
    let c0 = a.x * g00 + (1.0 - a.x) * g01;
    let c1 = (1.0 - a.y) * g10 + a.y * g11;
    let (gap0, gap1) = (gain(g00.max(g01), c0), gain(g10.max(g11), c1));
    if gap0 > NOTE_FLOOR {
        notes.push(format!("A: signal 0 -> guess {} (gain {gap0:.6e})", if g00 >= g01 { 0 } else { 1 }));
    }
    if gap1 > NOTE_FLOOR {
        notes.push(format!("A: signal 1 -> guess {} (gain {gap1:.6e})", if g11 >= g10 { 1 } else { 0 }));
    }
    gap0 + gap1
}

fn optout_gap(prior: &Prior, m: &PaymentMatrix, b: &BStrategy, a: &OptOutPolicy, notes: &mut Vec<String>) -> f64 {
    let (v0, v1, w0, w1) = accusation_values(prior, m, b);
    let names = ["opt out", "accuse 0", "accuse 1"];
    let mut total = 0.0;
    for (signal, vals, current) in [(0, [0.0, v0, v1], a.x0 * v0 + a.x1 * v1), (1, [0.0, w0, w1], a.y0 * w0 + a.y1 * w1)] {
        let (k, best) = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        let g = gain(best, current);
        if g > NOTE_FLOOR {
            notes.push(format!("A: signal {signal} -> {} (gain {g:.6e})", names[k]));
        }
        total += g;
    }
    total
}

/// Deviation gains of every player at a profile.
///
/// B's deviations range over the grid `{0, step, ..., 1}`; A's are exact or
/// gridded as described in the module docs. In the continuous game B's
/// signal probabilities follow from the threshold in `profile.a`, so
/// `profile.b` is not consulted, and B's gain is the worst loss of any
/// valuation in the support.
pub fn best_response_gap(game: &GameSpec, profile: &Profile, grid_step: f64) -> Result<GapReport> {
    let model = Model::new(game)?;
    let grid = grid_points(grid_step)?;
    let b = profile.b;
    let mut notes = Vec::new();
    let (gap_a, gap_b0, gap_b1) = match &model {
        Model::Privacy(params) => {
            if profile.a != AStrategy::None {
                return Err(mismatch());
            }
            let current = privacy_aware_utility(params, &b).to_float();
            let (best, arg) = grid
                .par_iter()
                .map(|&p| {
                    let (v, q) = grid_max(&grid, |q| privacy_aware_utility(params, &BStrategy { p, q }).to_float());
                    (v, (p, q))
                })
                .reduce(|| (f64::NEG_INFINITY, (0.0, 0.0)), |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x });
            let g = gain(best, current);
            if g > NOTE_FLOOR {
                notes.push(format!("B: (p, q) = ({}, {}) (gain {g:.6e})", arg.0, arg.1));
            }
            (0.0, g, g)
        }
        Model::Continuous { prior, dist0, dist1 } => {
            let AStrategy::Threshold { x, y, t } = profile.a else {
                return Err(mismatch());
            };
            let induced = BStrategy { p: 1.0 - dist0.cdf(t), q: 1.0 - dist1.cdf(t) };
            let gap_a = guess_gap(prior, &induced, &GuessPolicy { x, y }, &mut notes);
            let s = x + y - 1.0;
            let mut b_gap = |dist: &ValuationDistribution, ty: u8| {
                let (lo, hi) = dist.support();
                let n = (((hi - lo) / grid_step).ceil() as usize).clamp(1, 1_000_000);
                let h = 0.5 * grid_step;
                let (worst, at) = (0..=n)
                    .map(|k| lo + (hi - lo) * k as f64 / n as f64)
                    .chain(std::iter::once(t))
                    .filter(|&rho| dist.cdf(rho + h) > dist.cdf(rho - h))
                    .map(|rho| (if rho >= t { (s - rho).max(0.0) } else { (rho - s).max(0.0) }, rho))
                    .fold((0.0, f64::NAN), |acc, v| if v.0 > acc.0 { v } else { acc });
                if worst > NOTE_FLOOR {
                    let act = if at >= t { "lie" } else { "tell the truth" };
                    notes.push(format!("B type {ty}: valuation {at} should {act} (gain {worst:.6e})"));
                }
                worst
            };
            let g0 = b_gap(dist0, 0);
            let g1 = b_gap(dist1, 1);
            (gap_a, g0, g1)
        }
        _ => {
            let (_, ub0, ub1) = model.linear_utilities(&b, &profile.a)?;
            let (best0, p_dev) = grid_max(&grid, |p| model.linear_utilities(&BStrategy { p, q: b.q }, &profile.a).map_or(f64::NAN, |u| u.1));
            let (best1, q_dev) = grid_max(&grid, |q| model.linear_utilities(&BStrategy { p: b.p, q }, &profile.a).map_or(f64::NAN, |u| u.2));
            let (g0, g1) = (gain(best0, ub0), gain(best1, ub1));
            if g0 > NOTE_FLOOR {
                notes.push(format!("B type 0: p = {p_dev} (gain {g0:.6e})"));
            }
            if g1 > NOTE_FLOOR {
                notes.push(format!("B type 1: q = {q_dev} (gain {g1:.6e})"));
            }
            let gap_a = match (&model, &profile.a) {
                (Model::Scoring { prior, rule, .. }, AStrategy::Reports(r)) => {
                    let mut total = 0.0;
                    for (signal, x) in [(0u8, r.x0), (1u8, r.x1)] {
                        let current = scoring_signal_values(prior, rule, &b, x, signal);
                        let (best, arg) = grid_max(&grid, |x| scoring_signal_values(prior, rule, &b, x, signal));
                        let g = gain(best, current);
                        if g > NOTE_FLOOR {
                            notes.push(format!("A: signal {signal} -> report {arg} (gain {g:.6e})"));
                        }
                        total += g;
                    }
                    total
                }
                (Model::Identity { prior, .. }, AStrategy::Guess(a)) => guess_gap(prior, &b, a, &mut notes),
                (Model::OptOut { prior, m, .. }, AStrategy::OptOut(a)) => optout_gap(prior, m, &b, a, &mut notes),
                _ => return Err(mismatch()),
            };
            (gap_a, g0, g1)
        }
    };
    Ok(GapReport { gap_a, gap_b0, gap_b1, grid_step, argmax_deviations: notes })
}

/// Mixtures over the actions whose values lie within `tol` of the best.
///
/// Returns probability vectors over the given actions; ties are mixed on the
/// grid (a segment for two actions, a simplex for three).
fn near_best_mixtures(values: &[f64], tol: f64, grid: &[f64]) -> Vec<Vec<f64>> {
    let near = near_best(values, tol);
    let unit = |pairs: &[(usize, f64)]| {
        let mut v = vec![0.0; values.len()];
        for &(k, w) in pairs {
            v[k] = w;
        }
        v
    };
    match near.as_slice() {
        [k] => vec![unit(&[(*k, 1.0)])],
        [a, b] => grid.iter().map(|&w| unit(&[(*a, 1.0 - w), (*b, w)])).collect(),
        _ => {
            let n = grid.len() - 1;
            let mut out = Vec::new();
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (w1, w2) = (grid[i], grid[j]);
                    out.push(unit(&[(near[0], (1.0 - w1 - w2).max(0.0)), (near[1], w1), (near[2], w2)]));
                }
            }
            out
        }
    }
}

fn near_best(values: &[f64], tol: f64) -> Vec<usize> {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len()).filter(|&k| values[k] >= best - tol).collect()
}

/// Size of [`near_best_mixtures`] without building it; `n` is the number of grid steps.
fn mixture_count(values: &[f64], tol: f64, n: u64) -> u64 {
    match near_best(values, tol).len() {
        1 => 1,
        2 => n + 1,
        _ => (n + 1) * (n + 2) / 2,
    }
}

/// Number of A candidates [`a_signal_options`] produces at `b`.
fn a_option_count(model: &Model, b: &BStrategy, tol: f64, n: u64) -> u64 {
    match model {
        Model::Scoring { prior, .. } => {
            let count = |signal: u8| if posterior_or_free(prior, b, signal).is_some() { 1 } else { n + 1 };
            count(0) * count(1)
        }
        Model::Identity { prior, .. } => {
            let [(g00, g01), (g10, g11)] = guess_values(prior, b);
            mixture_count(&[g00, g01], tol, n) * mixture_count(&[g10, g11], tol, n)
        }
        Model::OptOut { prior, m, .. } => {
            let (v0, v1, w0, w1) = accusation_values(prior, m, b);
            mixture_count(&[0.0, v0, v1], tol, n) * mixture_count(&[0.0, w0, w1], tol, n)
        }
        Model::Privacy(_) => 2,
        Model::Continuous { .. } => 1,
    }
}

/// A's near-best options at each signal, as probability vectors.
///
/// Scoring options are one-element vectors holding the report; guess options
/// are `[Pr[guess 0], Pr[guess 1]]`; opt-out options are
/// `[Pr[opt out], Pr[accuse 0], Pr[accuse 1]]`.
fn a_signal_options(model: &Model, b: &BStrategy, tol: f64, grid: &[f64]) -> [Vec<Vec<f64>>; 2] {
    match model {
        Model::Scoring { prior, .. } => {
            let choices = |signal: u8| match posterior_or_free(prior, b, signal) {
                Some(y) => vec![vec![y]],
                None => grid.iter().map(|&x| vec![x]).collect(),
            };
            [choices(0), choices(1)]
        }
        Model::Identity { prior, .. } => {
            let [(g00, g01), (g10, g11)] = guess_values(prior, b);
            [near_best_mixtures(&[g00, g01], tol, grid), near_best_mixtures(&[g10, g11], tol, grid)]
        }
        Model::OptOut { prior, m, .. } => {
            let (v0, v1, w0, w1) = accusation_values(prior, m, b);
            [near_best_mixtures(&[0.0, v0, v1], tol, grid), near_best_mixtures(&[0.0, w0, w1], tol, grid)]
        }
        Model::Privacy(_) | Model::Continuous { .. } => unreachable!("no per-signal A options"),
    }
}

fn combine(model: &Model, s0: &[f64], s1: &[f64]) -> AStrategy {
    match model {
        Model::Scoring { .. } => AStrategy::Reports(ScoringReportPair { x0: s0[0], x1: s1[0] }),
        Model::Identity { .. } => AStrategy::Guess(GuessPolicy { x: s0[0], y: s1[1] }),
        Model::OptOut { .. } => AStrategy::OptOut(OptOutPolicy { x0: s0[1], x1: s0[2], y0: s1[1], y1: s1[2] }),
        Model::Privacy(_) | Model::Continuous { .. } => unreachable!("no per-signal A options"),
    }
}

/// Largest B gain when B's utility is linear in its own probability.
fn linear_b_gap(model: &Model, b: &BStrategy, a: &AStrategy) -> f64 {
    let u = |p: f64, q: f64| model.linear_utilities(&BStrategy { p, q }, a).expect("candidate matches model");
    let (_, ub0, ub1) = u(b.p, b.q);
    let best0 = u(0.0, b.q).1.max(u(1.0, b.q).1);
    let best1 = u(b.p, 0.0).2.max(u(b.p, 1.0).2);
    gain(best0, ub0).max(gain(best1, ub1))
}

struct Hit {
    cell: (usize, usize),
    profile: Profile,
    gap: f64,
}

/// Scans for profiles whose gaps are all at most `tol` and clusters them.
///
/// The scan runs over B's `(p, q)` grid, pairing each point with the A
/// strategy that minimizes B's gain among A's `tol`-best responses. In the
/// continuous game the scan runs over A's `(x, y)` grid instead, with B's
/// threshold at its best response `x + y - 1`. Hits within three cells of
/// each other share a component; components are ordered by their first cell.
pub fn enumerate_equilibria(game: &GameSpec, grid_step: f64, tol: f64) -> Result<Vec<EquilibriumComponent>> {
    if !(grid_step >= MIN_ENUMERATION_STEP) {
        return Err(BneError::InvalidParameter(format!("enumeration grid step must be at least {MIN_ENUMERATION_STEP}")));
    }
    if !(tol > 0.0) {
        return Err(BneError::InvalidParameter("tol must be positive".into()));
    }
    let model = Model::new(game)?;
    let grid = grid_points(grid_step)?;
    let n = grid.len();
    let cells = (n * n) as u64;
    if cells > EVALUATION_BUDGET {
        return Err(BneError::BudgetExceeded { evaluations: cells, budget: EVALUATION_BUDGET });
    }
    // Price the whole scan before doing any of it.
    let steps = (n - 1) as u64;
    let cost: u64 = (0..n * n)
        .into_par_iter()
        .map(|k| a_option_count(&model, &BStrategy { p: grid[k / n], q: grid[k % n] }, tol, steps))
        .sum();
    if cost > EVALUATION_BUDGET {
        return Err(BneError::BudgetExceeded { evaluations: cost, budget: EVALUATION_BUDGET });
    }

    let privacy_best = match &model {
        Model::Privacy(params) => Some(
                grid.par_iter()
                    .map(|&p| grid_max(&grid, |q| privacy_aware_utility(params, &BStrategy { p, q }).to_float()).0)
                    .reduce(|| f64::NEG_INFINITY, f64::max),
        ),
        _ => None,
    };

    let evaluate = |i: usize, j: usize| -> Option<Hit> {
        let (u, w) = (grid[i], grid[j]);
        match &model {
            Model::Privacy(params) => {
                let b = BStrategy { p: u, q: w };
                let g = gain(privacy_best.expect("computed above"), privacy_aware_utility(params, &b).to_float());
                (g <= tol).then_some(Hit { cell: (i, j), profile: Profile { b, a: AStrategy::None }, gap: g })
            }
            Model::Continuous { prior, dist0, dist1 } => {
                let t = u + w - 1.0;
                let b = BStrategy { p: 1.0 - dist0.cdf(t), q: 1.0 - dist1.cdf(t) };
                let g = guess_gap(prior, &b, &GuessPolicy { x: u, y: w }, &mut Vec::new());
                (g <= tol).then_some(Hit { cell: (i, j), profile: Profile { b, a: AStrategy::Threshold { x: u, y: w, t } }, gap: g })
            }
            _ => {
                let b = BStrategy { p: u, q: w };
                let [s0, s1] = a_signal_options(&model, &b, tol, &grid);
                let best = s0
                    .iter()
                    .flat_map(|x| s1.iter().map(move |y| (x, y)))
                    .map(|(x, y)| combine(&model, x, y))
                    .map(|a| (linear_b_gap(&model, &b, &a), a))
                    .fold(None::<(f64, AStrategy)>, |acc, c| match acc {
                        Some(prev) if prev.0 <= c.0 => Some(prev),
                        _ => Some(c),
                    });
                best.filter(|(g, _)| *g <= tol).map(|(g, a)| Hit { cell: (i, j), profile: Profile { b, a }, gap: g })
            }
        }
    };

    let hits: Vec<Hit> = (0..n * n)
        .into_par_iter()
        .filter_map(|k| evaluate(k / n, k % n))
        .collect();
    Ok(cluster(hits, n))
}

fn cluster(hits: Vec<Hit>, n: usize) -> Vec<EquilibriumComponent> {
    let mut index = vec![usize::MAX; n * n];
    for (k, h) in hits.iter().enumerate() {
        index[h.cell.0 * n + h.cell.1] = k;
    }
    let mut seen = vec![false; hits.len()];
    let mut out = Vec::new();
    for start in 0..hits.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        while let Some(k) = queue.pop_front() {
            members.push(k);
            let (i, j) = hits[k].cell;
            for di in -LINK_RADIUS..=LINK_RADIUS {
                for dj in -LINK_RADIUS..=LINK_RADIUS {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                        continue;
                    }
                    let m = index[ni as usize * n + nj as usize];
                    if m != usize::MAX && !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
        members.sort_unstable();
        let rep = *members.iter().min_by(|&&a, &&b| hits[a].gap.total_cmp(&hits[b].gap).then(a.cmp(&b))).expect("nonempty");
        let range = |f: fn(&BStrategy) -> f64| {
            members.iter().map(|&k| f(&hits[k].profile.b)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        };
        out.push(EquilibriumComponent {
            representative: hits[rep].profile,
            max_gap: hits[rep].gap,
            size: members.len(),
            p_range: range(|b| b.p),
            q_range: range(|b| b.q),
            members: members.iter().map(|&k| hits[k].profile).collect(),
        });
    }
    out
}

/// A's best response to `b` with deterministic tie-breaking toward truthful
/// guesses, opting out, and the extreme report on an off-path signal.
fn a_best_response(model: &Model, b: &BStrategy) -> AStrategy {
    match model {
        Model::Privacy(_) | Model::Continuous { .. } => AStrategy::None,
        Model::Scoring { prior, .. } => AStrategy::Reports(ScoringReportPair {
            x0: posterior_or_free(prior, b, 0).unwrap_or(0.0),
            x1: posterior_or_free(prior, b, 1).unwrap_or(1.0),
        }),
        Model::Identity { prior, .. } => {
            let [(g00, g01), (g10, g11)] = guess_values(prior, b);
            AStrategy::Guess(GuessPolicy { x: if g00 >= g01 { 1.0 } else { 0.0 }, y: if g11 >= g10 { 1.0 } else { 0.0 } })
        }
        Model::OptOut { prior, m, .. } => {
            let (v0, v1, w0, w1) = accusation_values(prior, m, b);
            let pick = |a: f64, c: f64| -> (f64, f64) {
                if a <= 0.0 && c <= 0.0 {
                    (0.0, 0.0)
                } else if a >= c {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                }
            };
            let (x0, x1) = pick(v0, v1);
            let (y0, y1) = pick(w0, w1);
            AStrategy::OptOut(OptOutPolicy { x0, x1, y0, y1 })
        }
    }
}

/// Utilities on a `(resolution + 1)^2` grid of B-strategies, with A
/// best-responding.
///
/// Rows are ordered by `p`, then `q`. In the privacy-aware game both B
/// columns hold the ex-ante utility.
pub fn utility_surface(game: &GameSpec, resolution: usize) -> Result<Vec<SurfaceRow>> {
    if resolution == 0 {
        return Err(BneError::InvalidParameter("resolution must be at least 1".into()));
    }
    let model = Model::new(game)?;
    if matches!(model, Model::Continuous { .. }) {
        return Err(BneError::InvalidParameter("the continuous game has no fixed-valuation utility surface".into()));
    }
    let grid: Vec<f64> = (0..=resolution).map(|i| i as f64 / resolution as f64).collect();
    let mut rows = Vec::with_capacity(grid.len() * grid.len());
    for &p in &grid {
        for &q in &grid {
            let b = BStrategy { p, q };
            let row = match &model {
                Model::Privacy(params) => {
                    let u = privacy_aware_utility(params, &b).to_float();
                    SurfaceRow { p, q, u_b0: u, u_b1: u, u_a: None }
                }
                _ => {
                    let (ua, ub0, ub1) = model.linear_utilities(&b, &a_best_response(&model, &b))?;
                    SurfaceRow { p, q, u_b0: ub0, u_b1: ub1, u_a: Some(ua) }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}
