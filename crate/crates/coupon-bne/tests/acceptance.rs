//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Reference values are computed here from closed forms, independently of
//! the solver code paths they check.

use std::process::Command;
use std::time::{Duration, Instant};

use coupon_bne::game::{AStrategy, GameSpec, Profile};
use coupon_bne::identity_game::{solve_continuous_threshold, solve_identity_bne, IdentityCase, ValuationDistribution};
use coupon_bne::model::{bayes_posteriors, BStrategy, CouponValues, GuessPolicy, PaymentMatrix, Prior};
use coupon_bne::optout_game::{accusation_values, case_margin, check_strawman, classify_case, solve_optout_bne, OptOutCase};
use coupon_bne::oracle::best_response_gap;
use coupon_bne::privacy::{dp_epsilon, solve_privacy_aware, PrivacyAwareParams};
use coupon_bne::scoring::{grid_argmax_expected_payment, ScoringRule};
use coupon_bne::scoring_game::{posterior_symmetry_residual, solve_scoring_bne, ScoringRegime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn prior(d0: f64) -> Prior {
    Prior::from_d0(d0).unwrap()
}

fn criterion_1() -> Check {
    let rule = ScoringRule::by_name("quadratic").unwrap();
    for rho in [0.2, 0.5, 1.0, 1.5] {
        let bne = solve_scoring_bne(&prior(0.5), rho, &rule).map_err(|e| e.to_string())?;
        let (y0, y1) = bayes_posteriors(&prior(0.5), &bne.b).map_err(|e| e.to_string())?;
        let (e0, e1) = ((2.0 - rho) / 4.0, (2.0 + rho) / 4.0);
        let eps = ((2.0 + rho) / (2.0 - rho)).ln();
        ensure!(close(y0, e0, 1e-10) && close(y1, e1, 1e-10), "rho {rho}: posteriors ({y0}, {y1}) vs ({e0}, {e1})");
        ensure!(close(bne.posterior_epsilon, eps, 1e-10), "rho {rho}: epsilon {} vs {eps}", bne.posterior_epsilon);
    }
    Ok("rho in {0.2, 0.5, 1.0, 1.5}".into())
}

fn criterion_2() -> Check {
    let rule = ScoringRule::by_name("logarithmic").unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=30 {
        let rho = 0.1 * k as f64;
        let bne = solve_scoring_bne(&prior(0.5), rho, &rule).map_err(|e| e.to_string())?;
        worst = worst.max((bne.posterior_epsilon - rho).abs());
    }
    ensure!(worst <= 1e-10, "max |epsilon - rho| = {worst:e}");
    Ok(format!("30 steps on (0, 3], max error {worst:.1e}"))
}

fn criterion_3() -> Check {
    let rule = ScoringRule::by_name("spherical").unwrap();
    for rho in [0.3, 0.6, 0.9] {
        let bne = solve_scoring_bne(&prior(0.5), rho, &rule).map_err(|e| e.to_string())?;
        let (y0, y1) = bayes_posteriors(&prior(0.5), &bne.b).map_err(|e| e.to_string())?;
        let h = 0.5 * (rho * rho / (2.0 - rho * rho)).sqrt();
        ensure!(close(y0, 0.5 - h, 1e-10) && close(y1, 0.5 + h, 1e-10), "rho {rho}: ({y0}, {y1}) vs ({}, {})", 0.5 - h, 0.5 + h);
    }
    Ok("rho in {0.3, 0.6, 0.9}".into())
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rules = ["quadratic", "spherical", "logarithmic"];
    let mut worst_gap: f64 = 0.0;
    for k in 0..100 {
        let name = rules[k % 3];
        let rule = ScoringRule::by_name(name).unwrap();
        let d0 = rng.gen_range(0.5..0.85);
        // Interior regime: g'(d0) < rho < g'(1).
        let lo = rule.dg(d0);
        let hi = if name == "logarithmic" { lo + 4.0 } else { rule.dg(1.0) };
        let rho = lo + (hi - lo) * rng.gen_range(0.05..0.95);
        let bne = solve_scoring_bne(&prior(d0), rho, &rule).map_err(|e| e.to_string())?;
        ensure!(bne.regime == ScoringRegime::Interior, "{name} d0={d0} rho={rho}: regime {:?}", bne.regime);
        let (y0, y1) = bayes_posteriors(&prior(d0), &bne.b).map_err(|e| e.to_string())?;
        ensure!((y0 - (1.0 - y1)).abs() <= 1e-10, "{name} d0={d0} rho={rho}: y0 + y1 - 1 = {:e}", y0 + y1 - 1.0);
        let r = posterior_symmetry_residual(&prior(d0), &bne.b);
        ensure!(r.abs() <= 1e-10, "{name} d0={d0} rho={rho}: residual {r:e}");
        let game = GameSpec::Scoring { d0, rho: Some(rho), rho0: None, rho1: None, rule: name.into() };
        let gap = best_response_gap(&game, &Profile { b: bne.b, a: AStrategy::Reports(bne.a) }, 1e-3).map_err(|e| e.to_string())?;
        ensure!(gap.passes(1e-4), "{name} d0={d0} rho={rho}: gap {:e}", gap.max_gap());
        worst_gap = worst_gap.max(gap.max_gap());
    }
    Ok(format!("100 draws, worst gap {worst_gap:.1e}"))
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let (d0, rho, v) = (0.5, 100.0, 1.0);
    let params = PrivacyAwareParams::new(prior(d0), CouponValues::symmetric(rho).unwrap(), v).unwrap();
    let p_star = 0.5 * (1.0 + 0.96f64.sqrt());
    let opt = solve_privacy_aware(&params);
    ensure!(close(opt.b.p, p_star, 1e-12) && close(opt.b.q, p_star, 1e-12), "solver returned {:?}", opt.b);
    // Independent utility: D0 rho p + D1 rho q - v ln max(likelihood ratios).
    let u = |p: f64, q: f64| {
        let ratio = |a: f64, b: f64| if a == 0.0 && b == 0.0 { 1.0 } else { a / b };
        let x = [ratio(p, 1.0 - q), ratio(1.0 - q, p), ratio(q, 1.0 - p), ratio(1.0 - p, q)].into_iter().fold(f64::NEG_INFINITY, f64::max);
        d0 * rho * p + (1.0 - d0) * rho * q - v * x.ln().max(0.0)
    };
    let interior = u(p_star, p_star);
    ensure!(interior > u(1.0, 0.0) && interior > u(0.0, 1.0), "interior {interior} does not beat the corners");
    let n = 1000;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=n {
        for j in 0..=n {
            let (p, q) = (i as f64 / n as f64, j as f64 / n as f64);
            let val = u(p, q);
            if val > best.0 {
                best = (val, p, q);
            }
        }
    }
    ensure!((best.1 - p_star).abs() <= 1e-3 && (best.2 - p_star).abs() <= 1e-3, "grid argmax ({}, {}) vs {p_star}", best.1, best.2);
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("p* = {p_star:.12}, grid argmax ({}, {}), {elapsed:.2?}", best.1, best.2))
}

fn criterion_6() -> Check {
    let coupons = CouponValues::new(0.8, 0.5).unwrap();
    let bne = solve_identity_bne(&prior(0.6), &coupons).map_err(|e| e.to_string())?;
    ensure!(bne.b == BStrategy { p: 1.0, q: 0.0 }, "b = {:?}", bne.b);
    let (lo, hi) = bne.y_interval.ok_or("no y-interval")?;
    ensure!(close(lo, 0.5, 1e-12) && close(hi, 0.8, 1e-12), "y-interval [{lo}, {hi}]");
    let game = GameSpec::Identity { d0: 0.6, rho0: 0.8, rho1: 0.5 };
    let mid = Profile { b: bne.b, a: AStrategy::Guess(GuessPolicy { x: 1.0, y: 0.5 * (lo + hi) }) };
    let gap = best_response_gap(&game, &mid, 1e-3).map_err(|e| e.to_string())?;
    ensure!(gap.passes(1e-9), "midpoint gap {:e}", gap.max_gap());

    let eq = solve_identity_bne(&prior(0.6), &CouponValues::symmetric(0.5).unwrap()).map_err(|e| e.to_string())?;
    ensure!(eq.case == IdentityCase::RhoEqual, "case {:?}", eq.case);
    let rr = eq.rr_point.ok_or("no randomized-response point")?;
    ensure!(close(rr.p, 0.6, 1e-12) && close(rr.q, 0.6, 1e-12), "rr point {rr:?}");
    let eps = dp_epsilon(&rr).finite().ok_or("infinite epsilon")?;
    ensure!(close(eps, 1.5f64.ln(), 1e-12), "epsilon {eps} vs ln 1.5");
    let game = GameSpec::Identity { d0: 0.6, rho0: 0.5, rho1: 0.5 };
    let gap = best_response_gap(&game, &Profile { b: rr, a: AStrategy::Guess(eq.a) }, 1e-3).map_err(|e| e.to_string())?;
    ensure!(gap.max_gap() == 0.0, "rr gap {:e}", gap.max_gap());
    Ok("b = (1, 0), y in [0.5, 0.8]; rr (0.6, 0.6) with epsilon ln 1.5".into())
}

fn criterion_7() -> Check {
    let p = prior(0.7);
    let u = solve_continuous_threshold(&p, &ValuationDistribution::Uniform { lo: 0.0, hi: 1.0 }, None).map_err(|e| e.to_string())?;
    ensure!(close(u.threshold, 0.3, 1e-10), "uniform y* = {}", u.threshold);
    let eps = u.dp_epsilon.and_then(|e| e.finite()).ok_or("no epsilon")?;
    ensure!(close(eps, (7.0f64 / 3.0).ln(), 1e-10), "epsilon {eps} vs ln(7/3)");
    let e = solve_continuous_threshold(&p, &ValuationDistribution::Exponential { rate: 0.1 }, None).map_err(|e| e.to_string())?;
    ensure!(e.threshold == 1.0, "exponential y* = {}", e.threshold);
    Ok("uniform y* = 0.3, exponential y* = 1".into())
}

fn criterion_8() -> Check {
    let s = 1.5f64.sqrt();
    let p = prior(s / (1.0 + s));
    let m = PaymentMatrix::new(1.0, 3.0, 2.0, 1.0).unwrap();
    let c = CouponValues::new(1.0, 1.2).unwrap();
    ensure!(classify_case(&p, &m, &c).map_err(|e| e.to_string())? == OptOutCase::Case6, "not Case6");
    let bne = solve_optout_bne(&p, &m, &c).map_err(|e| e.to_string())?;
    ensure!(close(bne.a.x0, 0.28, 1e-12) && close(bne.a.y1, 0.36, 1e-12), "a = {:?}", bne.a);
    ensure!(close(bne.b.p, bne.b.q, 1e-10) && bne.b.p > 0.5, "b = {:?}", bne.b);
    let eps = bne.dp_epsilon.finite().ok_or("infinite epsilon")?;
    ensure!(close(eps, 6f64.sqrt().ln(), 1e-10), "epsilon {eps} vs ln sqrt 6");
    let b_res = [m.m00 * bne.a.x0 + m.m10 * bne.a.y1 - c.rho0, m.m01 * bne.a.x0 + m.m11 * bne.a.y1 - c.rho1];
    let (v0, _, _, w1) = accusation_values(&p, &m, &bne.b);
    let worst = b_res.iter().chain([v0, w1].iter()).fold(0.0f64, |w, r| w.max(r.abs()));
    ensure!(worst <= 1e-10, "indifference residual {worst:e}");
    let game = GameSpec::OptOut { d0: p.d0(), rho0: 1.0, rho1: 1.2, m00: 1.0, m01: 3.0, m10: 2.0, m11: 1.0 };
    let gap = best_response_gap(&game, &Profile { b: bne.b, a: AStrategy::OptOut(bne.a) }, 1e-3).map_err(|e| e.to_string())?;
    ensure!(gap.passes(1e-6), "gap {:e}", gap.max_gap());
    Ok(format!("p = q = {:.10}, residual {worst:.1e}, gap {:.1e}", bne.b.p, gap.max_gap()))
}

fn criterion_9() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut accepted, mut attempts) = (0, 0);
    let mut counts = [0usize; 6];
    while accepted < 10_000 {
        attempts += 1;
        ensure!(attempts < 10_000_000, "sampler starved after {accepted} draws");
        let d0 = rng.gen_range(0.5..0.95);
        let m = PaymentMatrix { m00: rng.gen_range(0.1..5.0), m01: rng.gen_range(0.1..5.0), m10: rng.gen_range(0.1..5.0), m11: rng.gen_range(0.1..5.0) };
        let c = CouponValues { rho0: rng.gen_range(0.01..1.5 * (m.m00 + m.m10)), rho1: rng.gen_range(0.01..1.5 * (m.m01 + m.m11)) };
        let p = prior(d0);
        if !check_strawman(&p, &m).unwrap() || case_margin(&m, &c) <= 1e-6 {
            continue;
        }
        accepted += 1;
        let case = classify_case(&p, &m, &c).map_err(|e| format!("d0={d0} {m:?} {c:?}: {e}"))?;
        let row = match case {
            OptOutCase::Case1 => 0,
            OptOutCase::Case2 => 1,
            OptOutCase::Case3 => 2,
            OptOutCase::Case4 => 3,
            OptOutCase::Case5 => 4,
            OptOutCase::Case6 => 5,
            other => return Err(format!("d0={d0} {m:?} {c:?}: {other:?}")),
        };
        counts[row] += 1;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("10000 draws, per-case counts {counts:?}, {elapsed:.2?}"))
}

fn criterion_10() -> Check {
    let bin = env!("CARGO_BIN_EXE_coupon-bne");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let names = ["privacy_aware", "scoring_quadratic", "scoring_asymmetric", "identity", "identity_continuous", "optout_case6"];
    for name in names {
        let config = format!("{configs}/{name}.json");
        let report = dir.path().join(format!("{name}.json"));
        let solve = Command::new(bin).args(["--config", &config, "--format", "json", "--out"]).arg(&report).arg("solve").output().map_err(|e| e.to_string())?;
        ensure!(solve.status.code() == Some(0), "{name}: solve exited {:?}: {}", solve.status.code(), String::from_utf8_lossy(&solve.stderr));
        let verify = Command::new(bin).args(["--config", &config, "verify"]).arg(&report).output().map_err(|e| e.to_string())?;
        ensure!(verify.status.code() == Some(0), "{name}: verify exited {:?}: {}", verify.status.code(), String::from_utf8_lossy(&verify.stdout));
    }
    Ok(format!("{} configs re-verify with exit 0", names.len()))
}

fn criterion_11() -> Check {
    for name in ["quadratic", "spherical", "logarithmic"] {
        let rule = ScoringRule::<f64>::by_name(name).unwrap();
        for k in 1..=20 {
            let mu = k as f64 / 21.0;
            let x = grid_argmax_expected_payment(&rule, mu, 1e-3);
            ensure!((x - mu).abs() <= 1e-3, "{name}: mu {mu} argmax {x}");
        }
    }
    Ok("3 rules x 20 values of mu".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("quadratic rule posteriors and epsilon", criterion_1),
        ("logarithmic rule epsilon equals rho", criterion_2),
        ("spherical rule posteriors", criterion_3),
        ("interior scoring equilibria: symmetry, residual, oracle", criterion_4),
        ("privacy-aware optimum vs corners and grid", criterion_5),
        ("identity game interval and randomized response", criterion_6),
        ("continuous valuations threshold", criterion_7),
        ("opt-out randomized-response instance", criterion_8),
        ("opt-out case exclusivity and covering", criterion_9),
        ("solve/verify round trip", criterion_10),
        ("scoring rule properness on a grid", criterion_11),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
