mod common;

use approx::assert_relative_eq;
use common::Oracle;
use proptest::prelude::*;
use selfsim::phi::phi_rhs;
use selfsim::profile::{r_series_max, rhs_fg, rhs_w_logr, series_eval};
use selfsim::*;

/// Residual of the second-order equation F' + (N−1)F/r + β(μf + r f') − |f'|^{p/2}
/// with F = |f'|^{p−2} f' = −g, given (f', g') from the first-order system.
fn second_order_residual(pr: &Params, beta: f64, r: f64, f: f64, g: f64) -> (f64, f64) {
    let (fp, gp) = rhs_fg(pr, beta, r, f, g);
    let big_f = -g;
    let dbig_f = -gp;
    let res = dbig_f + (pr.nf() - 1.0) * big_f / r + beta * (pr.mu * f + r * fp) - fp.abs().powf(pr.p / 2.0);
    let scale = 1.0 + (beta * pr.mu * f).abs() + gp.abs() + big_f.abs() / r;
    (res, scale)
}

#[test]
fn rhs_fg_spec_point() {
    let pr = make_params(2, 1.6).unwrap();
    let (fp, gp) = rhs_fg(&pr, 1.0, 1.0, 0.5, 0.1);
    let fp_want = -(0.1f64.powf(5.0 / 3.0));
    assert_relative_eq!(fp, fp_want, max_relative = 1e-14);
    let gp_want = -0.1 + (4.0 * 0.5 + fp_want) - 0.1f64.powf(4.0 / 3.0);
    assert_relative_eq!(gp, gp_want, max_relative = 1e-14);
}

#[test]
fn rhs_fg_vanishing_flux() {
    let pr = make_params(2, 1.6).unwrap();
    let (fp, gp) = rhs_fg(&pr, 0.7, 2.0, 0.3, 0.0);
    assert_eq!(fp, 0.0);
    assert_relative_eq!(gp, 0.7 * pr.mu * 0.3, max_relative = 1e-15);
}

#[test]
fn rhs_w_constant_solutions() {
    for (n, p) in [(1, 1.5), (2, 1.6), (3, 1.8)] {
        let pr = make_params(n, p).unwrap();
        let (dw, dv) = rhs_w_logr(&pr, 0.9, 0.0, pr.w_star, 0.0);
        assert_eq!(dw, 0.0);
        assert!(dv.abs() < 1e-12 * pr.w_star, "{dv}");
        assert_eq!(rhs_w_logr(&pr, 0.9, 0.0, 0.0, 0.0), (0.0, 0.0));
    }
}

proptest! {
    #[test]
    fn rhs_fg_solves_second_order_form(
        r in 0.01f64..20.0, f in 0.01f64..1.0, g in 1e-4f64..5.0, beta in 0.01f64..10.0, pick in 0usize..3
    ) {
        let (n, p) = [(1, 1.5), (2, 1.6), (3, 1.7)][pick];
        let pr = make_params(n, p).unwrap();
        let (res, scale) = second_order_residual(&pr, beta, r, f, g);
        prop_assert!(res.abs() <= 1e-13 * scale, "res {res} scale {scale}");
    }

    #[test]
    fn rhs_w_is_chain_rule_of_rhs_fg(
        r in 0.05f64..50.0, f in 0.01f64..1.0, g in 1e-3f64..2.0, beta in 0.01f64..5.0, pick in 0usize..2
    ) {
        let (n, p) = [(1, 1.5), (2, 1.6)][pick];
        let pr = make_params(n, p).unwrap();
        let mu = pr.mu;
        let (fp, gp) = rhs_fg(&pr, beta, r, f, g);
        // f' = −|g|^{1/(p−1)−1} g, so f'' = −|g|^{(2−p)/(p−1)} g' / (p−1)
        let fpp = -g.abs().powf((2.0 - p) / (p - 1.0)) * gp / (p - 1.0);
        let w = r.powf(mu) * f;
        let v = r.powf(mu) * (mu * f + r * fp);
        let dv_want = mu * v + r.powf(mu + 1.0) * ((mu + 1.0) * fp + r * fpp);
        let (dw, dv) = rhs_w_logr(&pr, beta, r.ln(), w, v);
        prop_assert!((dw - v).abs() <= 1e-15 * v.abs().max(1.0));
        let scale = v.abs() + (mu * mu * w).abs() + r.powf(mu + 2.0) * fpp.abs() + 1e-300;
        prop_assert!((dv - dv_want).abs() <= 1e-11 * scale, "{dv} vs {dv_want}");
    }

    #[test]
    fn phi_rhs_is_log_derivative_ratio(xi in 1e-3f64..50.0, frac in 0.01f64..0.99, beta in 0.01f64..5.0) {
        let pr = make_params(2, 1.6).unwrap();
        let phi = frac * pr.mu * xi;
        let (dw, dv) = rhs_w_logr(&pr, beta, 0.0, xi, phi);
        let want = dv / dw;
        let got = phi_rhs(&pr, beta, xi, phi).unwrap();
        prop_assert!((got - want).abs() <= 1e-11 * (1.0 + want.abs()), "{got} vs {want}");
    }

    #[test]
    fn params_accept_exactly_the_open_interval(n in 1u32..6, p in 0.9f64..2.2) {
        let pc = 2.0 * n as f64 / (n as f64 + 1.0);
        // near p = 2 the constants overflow, which is also refused
        let res = make_params(n, p);
        if !(p > pc && p < 2.0) {
            prop_assert!(matches!(res, Err(Error::InvalidParams(_))));
        } else if p < 1.9 {
            prop_assert!(res.is_ok());
        }
    }
}

#[test]
fn series_matches_oracle_integration() {
    // leading-order oracle start at 1e-6, fine fixed RK4 steps to 1e-3
    let pr = make_params(1, 1.5).unwrap();
    let path = Oracle::new(1, 1.5, 1.0).path(1e-6, 1e-3, 1e-3);
    let &(r, f_or, fp_or) = path.last().unwrap();
    assert_relative_eq!(r, 1e-3, max_relative = 1e-12);
    let (f_ser, fp_ser) = series_eval(&pr, 1.0, 1e-3).unwrap();
    assert!((f_or - f_ser).abs() <= 1e-12, "{f_or} vs {f_ser}");
    assert!((fp_or - fp_ser).abs() <= 1e-6 * fp_ser.abs(), "{fp_or} vs {fp_ser}");
    assert!((f_ser - (1.0 - 3e-9)).abs() < 1e-12);
}

#[test]
fn numeric_from_deep_start_matches_series() {
    let pr = make_params(1, 1.5).unwrap();
    let sol = integrate_profile(&pr, 1.0, &IntegratorOptions { r_start: Some(1e-6), ..Default::default() }).unwrap();
    let (f_ser, _) = series_eval(&pr, 1.0, 1e-3).unwrap();
    assert!((sol.eval(1e-3).unwrap().f - f_ser).abs() <= 1e-12);
}

#[test]
fn series_refuses_large_radius() {
    let pr = make_params(2, 1.6).unwrap();
    let bound = r_series_max(&pr, 1.0);
    assert!(series_eval(&pr, 1.0, 0.5 * bound).is_ok());
    assert!(matches!(series_eval(&pr, 1.0, 2.0 * bound), Err(Error::SeriesRange { .. })));
    let opts = IntegratorOptions { r_start: Some(2.0 * bound), ..Default::default() };
    assert!(matches!(integrate_profile(&pr, 1.0, &opts), Err(Error::SeriesRange { .. })));
}

#[test]
fn invalid_inputs_rejected() {
    let pr = make_params(2, 1.6).unwrap();
    assert!(matches!(integrate_profile(&pr, 0.0, &IntegratorOptions::default()), Err(Error::InvalidOption(_))));
    assert!(integrate_profile(&pr, -1.0, &IntegratorOptions::default()).is_err());
    let bad = IntegratorOptions { rtol: -1.0, ..Default::default() };
    assert!(matches!(integrate_profile(&pr, 1.0, &bad), Err(Error::InvalidOption(_))));
}

#[test]
fn exceedance_at_small_beta() {
    let pr = make_params(2, 1.6).unwrap();
    let sol = integrate_profile(&pr, 0.05, &IntegratorOptions::default()).unwrap();
    assert_eq!(sol.termination, Termination::WExceedsWStar);
    assert!(sol.last().w >= pr.w_star * (1.0 + 1e-6) * (1.0 - 1e-12));
}

#[test]
fn zero_of_f_at_large_beta_matches_oracle() {
    let pr = make_params(2, 1.6).unwrap();
    let sol = integrate_profile(&pr, 10.0, &IntegratorOptions::default()).unwrap();
    assert_eq!(sol.termination, Termination::FZero);
    let (r1, r) = (sol.events.r1.unwrap(), sol.events.r.unwrap());
    assert!(r1 < r && sol.events.w_max < pr.w_star);

    let path = Oracle::new(2, 1.6, 10.0).path(1e-5, 1.0, 1e-5);
    let k = path.iter().position(|s| s.1 <= 0.0).unwrap();
    let (a, b) = (path[k - 1], path[k]);
    let r_or = a.0 + (b.0 - a.0) * a.1 / (a.1 - b.1);
    assert!((r - r_or).abs() < 1e-6, "{r} vs {r_or}");
}

#[test]
fn sample_invariants_and_bounds() {
    for (n, p, beta) in [(1, 1.5, 1.0), (2, 1.6, 0.3), (2, 1.6, 3.0)] {
        let pr = make_params(n, p).unwrap();
        let sol = integrate_profile(&pr, beta, &IntegratorOptions::default()).unwrap();
        assert!(sol.samples.windows(2).all(|w| w[1].r >= w[0].r));
        assert!(sol.samples[0].r == sol.r_start && sol.r_start > 0.0);
        let lower = -(beta * pr.mu).powf(2.0 / p);
        for s in sol.positive_samples() {
            let g = -s.fp.abs().powf(p - 2.0) * s.fp;
            assert_relative_eq!(s.g, g, max_relative = 1e-12, epsilon = 1e-300);
            assert_relative_eq!(s.w, s.r.powf(pr.mu) * s.f, max_relative = 1e-12, epsilon = 1e-300);
            assert!(s.fp < 0.0 && s.fp >= lower - 1e-9);
        }
        let jump = sol.positive_samples().windows(2).map(|w| w[1].e - w[0].e).fold(f64::MIN, f64::max);
        assert!(jump <= 1e-9, "energy rises by {jump}");
        let s0 = &sol.samples[0];
        let e0 = (p - 1.0) * s0.fp.abs().powf(p) / p + pr.mu * beta * s0.f * s0.f / 2.0;
        assert_relative_eq!(s0.e, e0, max_relative = 1e-8);
    }
}

#[test]
fn chart_switch_is_seamless() {
    let pr = make_params(2, 1.6).unwrap();
    let a = integrate_profile(&pr, 0.5, &IntegratorOptions { r_switch: Some(0.2), ..Default::default() }).unwrap();
    let b = integrate_profile(&pr, 0.5, &IntegratorOptions { r_switch: Some(2.0), ..Default::default() }).unwrap();
    assert_eq!(a.termination, Termination::WExceedsWStar);
    assert_eq!(b.termination, Termination::WExceedsWStar);
    assert!(a.r_end() > 2.0);
    assert_relative_eq!(a.r_end(), b.r_end(), max_relative = 1e-8);
    for r in [0.05, 0.2, 0.7, 1.5, 2.0, 0.99 * a.r_end()] {
        let (x, y) = (a.eval(r).unwrap(), b.eval(r).unwrap());
        assert_relative_eq!(x.w, y.w, max_relative = 1e-9);
        assert_relative_eq!(x.wp, y.wp, max_relative = 1e-8);
    }
}

#[test]
fn log_chart_reaches_far_radii() {
    let pr = make_params(2, 1.6).unwrap();
    let opts = IntegratorOptions { stop_at_exceed: false, ..Default::default() };
    let sol = integrate_profile(&pr, 0.3, &opts).unwrap();
    assert_eq!(sol.termination, Termination::RMaxReached);
    assert_relative_eq!(sol.r_end().ln(), 30.0, max_relative = 1e-12);
    assert!(sol.last().f > 0.0 && sol.last().w > pr.w_star);
}

#[test]
fn step_budget_failure_carries_partial_data() {
    let pr = make_params(2, 1.6).unwrap();
    let opts = IntegratorOptions { max_steps: 10, ..Default::default() };
    match integrate_profile(&pr, 0.3, &opts) {
        Err(e @ Error::StepFailure { .. }) => {
            assert_eq!(e.exit_code(), 2);
            if let Error::StepFailure { partial: Some(sol), samples, .. } = e {
                assert_eq!(sol.samples.len(), samples);
                assert_eq!(sol.termination, Termination::StepFailure);
            } else {
                panic!("no partial data");
            }
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn energy_of_power_profile_decreases() {
    // f = w* r^{−μ}: both energy terms decrease in r
    let pr = make_params(2, 1.6).unwrap();
    let e = |r: f64| {
        let f = pr.w_star * r.powf(-pr.mu);
        let fp = -pr.mu * f / r;
        (pr.p - 1.0) * fp.abs().powf(pr.p) / pr.p + pr.mu * 0.5 * f * f / 2.0
    };
    let rs: Vec<f64> = (1..200).map(|k| 0.1 * k as f64).collect();
    assert!(rs.windows(2).all(|w| e(w[1]) < e(w[0])));
}
