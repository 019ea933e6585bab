use coupon_bne::game::{solve, AStrategy, GameSpec};
use coupon_bne::model::{bayes_posteriors, BStrategy, CouponValues, PaymentMatrix, Prior};
use coupon_bne::optout_game::{classify_case, solve_optout_bne, OptOutCase};
use coupon_bne::oracle::best_response_gap;
use coupon_bne::privacy::{dp_epsilon, privacy_aware_utility, solve_privacy_aware, x_game, PrivacyAwareParams};
use coupon_bne::scalar::Extended;
use coupon_bne::scoring::ScoringRule;
use coupon_bne::scoring_game::{posterior_symmetry_residual, solve_scoring_bne, ScoringRegime};
use proptest::prelude::*;

fn rule_name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("quadratic"), Just("spherical"), Just("logarithmic")]
}

/// `(d0, rho)` strictly inside the interior regime of `rule`.
fn interior(rule: &ScoringRule, d0: f64, t: f64) -> f64 {
    let lo = rule.dg(d0);
    let hi = if rule.name() == "logarithmic" { lo + 5.0 } else { rule.dg(1.0) };
    lo + (hi - lo) * t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prior_is_ordered(d0 in 0.001f64..0.999) {
        let p = Prior::new(d0, 1.0 - d0).unwrap();
        prop_assert!(p.d0() >= p.d1());
        prop_assert_eq!(p.relabeled(), d0 < 0.5);
    }

    #[test]
    fn posteriors_are_probabilities(d0 in 0.5f64..0.99, p in 0.01f64..0.99, q in 0.01f64..0.99) {
        let (y0, y1) = bayes_posteriors(&Prior::from_d0(d0).unwrap(), &BStrategy { p, q }).unwrap();
        prop_assert!((0.0..=1.0).contains(&y0) && (0.0..=1.0).contains(&y1));
    }

    #[test]
    fn privacy_level_is_label_free(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let b = BStrategy { p, q };
        prop_assert!(x_game(&b) >= Extended::Finite(1.0));
        prop_assert_eq!(x_game(&b), x_game(&b.swapped()));
        prop_assert!(dp_epsilon(&b) >= Extended::Finite(0.0));
    }

    #[test]
    fn truthful_reports_maximize_expected_payment(name in rule_name(), mu in 0.0f64..=1.0, x in 0.0f64..=1.0) {
        let rule = ScoringRule::by_name(name).unwrap();
        prop_assert!(rule.expected_payment(mu, mu).unwrap() >= rule.expected_payment(mu, x).unwrap());
    }

    #[test]
    fn payments_follow_the_generator(name in rule_name(), x in 0.01f64..0.99) {
        let rule = ScoringRule::by_name(name).unwrap();
        let f0 = rule.f0(x).unwrap().finite().unwrap();
        let f1 = rule.f1(x).unwrap().finite().unwrap();
        prop_assert!((f0 - (rule.g(x) - x * rule.dg(x))).abs() < 1e-12);
        prop_assert!((f1 - (rule.g(x) + (1.0 - x) * rule.dg(x))).abs() < 1e-12);
        // Symmetric rules mirror their payments.
        prop_assert!((f1 - rule.f0(1.0 - x).unwrap().finite().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn interior_scoring_equilibria_are_symmetric(name in rule_name(), d0 in 0.5f64..0.9, t in 0.02f64..0.98) {
        let rule = ScoringRule::by_name(name).unwrap();
        let rho = interior(&rule, d0, t);
        let prior = Prior::from_d0(d0).unwrap();
        let bne = solve_scoring_bne(&prior, rho, &rule).unwrap();
        prop_assert_eq!(bne.regime, ScoringRegime::Interior);
        let (y0, y1) = bayes_posteriors(&prior, &bne.b).unwrap();
        prop_assert!((y0 + y1 - 1.0).abs() < 1e-10);
        prop_assert!(y1 > 0.5);
        prop_assert!((bne.a.x0 - (1.0 - y1)).abs() < 1e-10);
        prop_assert!(posterior_symmetry_residual(&prior, &bne.b).abs() < 1e-10);
        // The signal-level privacy loss is never below the posterior spread.
        let dp = dp_epsilon(&bne.b).finite().unwrap();
        prop_assert!(dp >= bne.posterior_epsilon - 1e-9, "dp {} < posterior {}", dp, bne.posterior_epsilon);
    }

    #[test]
    fn posterior_spread_grows_with_coupon(name in rule_name(), d0 in 0.5f64..0.9, t in 0.02f64..0.9, dt in 0.001f64..0.08) {
        let rule = ScoringRule::by_name(name).unwrap();
        let prior = Prior::from_d0(d0).unwrap();
        let a = solve_scoring_bne(&prior, interior(&rule, d0, t), &rule).unwrap();
        let b = solve_scoring_bne(&prior, interior(&rule, d0, t + dt), &rule).unwrap();
        prop_assert!(b.y1.unwrap() >= a.y1.unwrap() - 1e-12);
    }

    #[test]
    fn f32_solver_tracks_f64(d0 in 0.5f64..0.8, t in 0.1f64..0.9) {
        let r64 = ScoringRule::<f64>::by_name("quadratic").unwrap();
        let r32 = ScoringRule::<f32>::by_name("quadratic").unwrap();
        let rho = interior(&r64, d0, t);
        let a = solve_scoring_bne(&Prior::<f64>::from_d0(d0).unwrap(), rho, &r64).unwrap();
        let b = solve_scoring_bne(&Prior::<f32>::from_d0(d0 as f32).unwrap(), rho as f32, &r32).unwrap();
        prop_assert!((a.y1.unwrap() - b.y1.unwrap() as f64).abs() < 1e-4);
    }

    #[test]
    fn privacy_optimum_beats_every_strategy(d0 in 0.5f64..0.95, rho in 0.1f64..50.0, v in 0.01f64..5.0, p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let params = PrivacyAwareParams::new(Prior::from_d0(d0).unwrap(), CouponValues::symmetric(rho).unwrap(), v).unwrap();
        let opt = solve_privacy_aware(&params);
        let other = privacy_aware_utility(&params, &BStrategy { p, q });
        prop_assert!(opt.utility.finite().unwrap() >= other.to_float() - 1e-9);
    }

    #[test]
    fn solving_with_swapped_labels_agrees(d0 in 0.05f64..0.95, rho0 in 0.05f64..2.0, rho1 in 0.05f64..2.0) {
        prop_assume!((d0 - 0.5).abs() > 1e-6);
        let g = GameSpec::Identity { d0, rho0, rho1 };
        let (Ok(a), Ok(b)) = (solve(&g), solve(&g.swapped())) else { return Ok(()); };
        prop_assert_eq!(a.profile.b, b.profile.b.swapped());
        prop_assert_eq!(a.case_label, b.case_label);
    }

    #[test]
    fn identity_equilibria_pass_the_oracle(d0 in 0.05f64..0.95, rho0 in 0.05f64..2.0, rho1 in 0.05f64..2.0) {
        prop_assume!((d0 - 0.5).abs() > 1e-6 && (rho0 - rho1).abs() > 1e-6 && (rho0 - 1.0).abs() > 1e-6 && (rho1 - 1.0).abs() > 1e-6);
        let g = GameSpec::Identity { d0, rho0, rho1 };
        let r = solve(&g).unwrap();
        let gap = best_response_gap(&g, &r.profile, 1e-2).unwrap();
        prop_assert!(gap.passes(1e-9), "{:?} {:?}", r.profile, gap);
    }

    #[test]
    fn optout_equilibria_pass_the_oracle(
        d0 in 0.5f64..0.9,
        m in (0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0),
        r in (0.0f64..1.5, 0.0f64..1.5),
    ) {
        let m = PaymentMatrix::new(m.0, m.1, m.2, m.3).unwrap();
        let c = CouponValues::new(0.01 + r.0 * (m.m00 + m.m10), 0.01 + r.1 * (m.m01 + m.m11)).unwrap();
        let prior = Prior::from_d0(d0).unwrap();
        let Ok(bne) = solve_optout_bne(&prior, &m, &c) else { return Ok(()); };
        prop_assert_eq!((bne.a.x1, bne.a.y0), (0.0, 0.0));
        if matches!(bne.case, OptOutCase::Boundary(_)) {
            return Ok(());
        }
        let g = GameSpec::OptOut { d0, rho0: c.rho0, rho1: c.rho1, m00: m.m00, m01: m.m01, m10: m.m10, m11: m.m11 };
        let gap = best_response_gap(&g, &coupon_bne::Profile { b: bne.b, a: AStrategy::OptOut(bne.a) }, 1e-2).unwrap();
        prop_assert!(gap.passes(1e-6), "{:?} {:?}", bne.case, gap);
    }

    #[test]
    fn case6_strategy_ignores_coupon_values(u in 0.05f64..0.95, w in 0.05f64..0.95, du in -0.03f64..0.03, dw in -0.03f64..0.03) {
        let s = 1.5f64.sqrt();
        let prior = Prior::from_d0(s / (1.0 + s)).unwrap();
        let m = PaymentMatrix::new(1.0, 3.0, 2.0, 1.0).unwrap();
        let delta = m.m01 * m.m10 - m.m00 * m.m11;
        let coupons = |u: f64, w: f64| CouponValues::new((m.m00 * u + m.m10 * w) / delta, (m.m01 * u + m.m11 * w) / delta).unwrap();
        let a = solve_optout_bne(&prior, &m, &coupons(u * delta, w * delta)).unwrap();
        let b = solve_optout_bne(&prior, &m, &coupons((u + du) * delta, (w + dw) * delta)).unwrap();
        prop_assert_eq!(a.case, OptOutCase::Case6);
        prop_assert_eq!(b.case, OptOutCase::Case6);
        prop_assert!((a.b.p - b.b.p).abs() < 1e-15 && (a.b.q - b.b.q).abs() < 1e-15);
        prop_assert!(a.a != b.a || (du == 0.0 && dw == 0.0));
    }

    #[test]
    fn case_rows_are_exclusive(
        d0 in 0.5f64..0.95,
        m in (0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0),
        rho0 in 0.01f64..12.0,
        rho1 in 0.01f64..12.0,
    ) {
        let m = PaymentMatrix::new(m.0, m.1, m.2, m.3).unwrap();
        let r = classify_case(&Prior::from_d0(d0).unwrap(), &m, &CouponValues::new(rho0, rho1).unwrap());
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn spec_json_round_trips(d0 in 0.01f64..0.99, rho in 0.01f64..3.0) {
        let g = GameSpec::Scoring { d0, rho: Some(rho), rho0: None, rho1: None, rule: "spherical".into() };
        let back: GameSpec = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }
}
