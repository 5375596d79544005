use approx::assert_relative_eq;
use proptest::prelude::*;
use pspin_core::chaos::*;
use pspin_core::finite_temp::{beta_sweep, eval_parisi_p, minimize_parisi_b, FiniteTempOrder};
use pspin_core::zero_temp::*;
use pspin_core::{Error, MixtureSpec};

fn frsb_model(h: f64) -> MixtureSpec {
    MixtureSpec::from_squared([(2, 0.5), (4, 1.0 / 24.0)], h).unwrap()
}

fn context(m: &MixtureSpec) -> ChaosContext {
    ChaosContext::build(m, &closed_form(m, 1e-14).unwrap()).unwrap()
}

fn trapezoid(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let dx = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * dx)).sum();
    dx * (0.5 * (f(a) + f(b)) + inner)
}

#[test]
fn replica_symmetric_context_values() {
    let ctx = context(&MixtureSpec::sk(1.0));
    let r = 0.5f64.sqrt();
    assert_relative_eq!(ctx.delta0, r, epsilon = 1e-15);
    assert_relative_eq!(ctx.v0, r, epsilon = 1e-15);
    assert_relative_eq!(ctx.b, r + 2f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(ctx.b - ctx.d(0.0), 2f64.sqrt(), epsilon = 1e-14);
    assert_eq!(ctx.d(1.0), 0.0);
}

#[test]
fn full_rsb_context_values() {
    let m = frsb_model(0.0);
    let ctx = context(&m);
    assert_relative_eq!(ctx.delta0, m.xi2(1.0).powf(-0.5), epsilon = 1e-9);
    assert_relative_eq!(ctx.b - ctx.d(0.0), m.xi2(ctx.q0()).sqrt(), epsilon = 1e-8);
    assert!(ctx.identity_residual() <= IDENTITY_TOL);
}

#[test]
fn one_step_context_values() {
    let ctx = context(&MixtureSpec::pure(4, 0.0).unwrap());
    let z = one_rsb_z(4).unwrap();
    let delta = z / (1.0 + z);
    assert_relative_eq!(ctx.delta0, (delta / z).sqrt(), epsilon = 1e-12);
    assert!(ctx.identity_residual() <= 1e-12);
}

#[test]
fn context_rejects_odd_and_uncertified_inputs() {
    let m = MixtureSpec::pure(3, 0.0).unwrap();
    let sol = closed_form_1rsb(3).unwrap();
    assert!(matches!(ChaosContext::build(&m, &sol), Err(Error::Precondition(_))));

    let m = MixtureSpec::sk(1.0);
    let mut sol = closed_form_rs(&m).unwrap();
    sol.param = sol.param.with_l(sol.l0() * 1.1);
    sol.certificate = certificate(&m, &sol.param).unwrap();
    assert!(matches!(ChaosContext::build(&m, &sol), Err(Error::Precondition(_))));
}

#[test]
fn context_rejects_inconsistent_certified_solution() {
    // A certificate computed for a different point than the one reported.
    let m = frsb_model(0.0);
    let mut sol = closed_form_frsb(&m, 1e-14).unwrap();
    sol.param = sol.param.with_l(sol.l0() * 1.01);
    assert!(matches!(ChaosContext::build(&m, &sol), Err(Error::Inconsistent(_))));
}

#[test]
fn d_is_bounded_and_monotone() {
    for m in [frsb_model(0.0), frsb_model(0.1), MixtureSpec::pure(4, 0.0).unwrap()] {
        let ctx = context(&m);
        let d0 = ctx.d(0.0);
        let mut prev = d0;
        for k in 0..=200 {
            let d = ctx.d(k as f64 / 200.0);
            assert!(d >= 0.0 && d <= prev + 1e-15 && d < ctx.b);
            prev = d;
        }
    }
}

#[test]
fn overlap_equation_examples() {
    let sk1 = context(&MixtureSpec::sk(1.0));
    assert!(f_t(&sk1, 0.5, 0.0) > 0.0 && f_t(&sk1, 0.5, 1.0) < 0.0);
    assert!((solve_u_t(&sk1, 0.5, 1e-15).unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let m = frsb_model(0.0);
    let ctx = context(&m);
    assert_eq!(f_t(&ctx, 0.3, 0.0), 0.0);
    for t in [0.1, 0.5, 0.9] {
        assert_eq!(solve_u_t(&ctx, t, 1e-12).unwrap(), 0.0);
    }
    assert!(solve_u_t(&ctx, 1.0, 1e-12).is_err());

    // Lemma: L0^2 (xi'(q0) + h^2) = q0 at t = 1.
    let ctx = context(&frsb_model(0.1));
    assert!(f_t(&ctx, 1.0, ctx.q0()).abs() <= 1e-6);
}

#[test]
fn overlap_root_approaches_q0_as_t_grows() {
    let ctx = context(&frsb_model(0.1));
    let q0 = ctx.q0();
    let u: Vec<f64> = [0.5, 0.9, 0.99].iter().map(|&t| solve_u_t(&ctx, t, 1e-14).unwrap()).collect();
    assert!(u.iter().all(|&v| v > 0.0 && v < q0));
    assert!(u[0] < u[1] && u[1] < u[2]);
    assert!(q0 - u[2] < q0 - u[1]);
    for (&t, &v) in [0.5, 0.9, 0.99].iter().zip(&u) {
        assert!(f_t(&ctx, t, v).abs() < 1e-12);
    }
}

#[test]
fn chi_for_sk_with_field_matches_dense_oracle() {
    let ctx = context(&MixtureSpec::sk(1.0));
    // u_t = 1/(2 - t) by hand, xi(u) = u^2/2.
    let oracle = trapezoid(100_000, 0.0, 1.0, |t| 0.5 / ((2.0 - t) * (2.0 - t)));
    assert!((chi(&ctx, 40).unwrap() - oracle).abs() <= 1e-8);
    assert_eq!(chi(&context(&MixtureSpec::sk(0.0)), 40).unwrap(), 0.0);
}

#[test]
fn chi_increases_with_field() {
    let c: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&h| chi(&context(&MixtureSpec::sk(h)), 40).unwrap()).collect();
    assert!(c[0] > 0.0 && c[0] < c[1] && c[1] < c[2]);
}

#[test]
fn profile_reports_roots_on_the_grid() {
    let ctx = context(&MixtureSpec::sk(1.0));
    let t = [0.25, 0.5, 0.75];
    let prof = chaos_profile(&ctx, &t, 30).unwrap();
    for (t, u) in prof.t_grid.iter().zip(&prof.u_t_vals) {
        assert!((u - 1.0 / (2.0 - t)).abs() < 1e-12);
    }
    assert!((prof.chi - 0.25).abs() < 1e-10);
    assert!(chaos_profile(&ctx, &[0.5, 0.25], 30).is_err());
}

#[test]
fn coupled_functional_equals_twice_gs_inside_support_gap() {
    for m in [frsb_model(0.1), MixtureSpec::from_squared([(2, 0.2), (4, 0.5)], 0.3).unwrap()] {
        let sol = minimize_q(&m, 1000, 1e-7).unwrap();
        let ctx = ChaosContext::build(&m, &sol).unwrap();
        let q0 = ctx.q0();
        for t in [0.2, 0.5, 0.9] {
            for u in [0.0, q0 / 2.0, q0] {
                let e = eval_e(&ctx, t, u, 0.0).unwrap();
                assert!((e - 2.0 * ctx.gs()).abs() <= 1e-6, "t={t} u={u}");
                assert!(eval_error_term(&ctx, t, u).unwrap().abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn lambda_derivative_is_overlap_equation() {
    let ctx = context(&frsb_model(0.1));
    let q0 = ctx.q0();
    let step = 1e-5;
    for t in [0.3, 0.7] {
        for u in [0.0, 0.3 * q0, q0, -0.5 * q0] {
            let fd = (eval_e(&ctx, t, u, step).unwrap() - eval_e(&ctx, t, u, -step).unwrap()) / (2.0 * step);
            assert!((fd - f_t(&ctx, t, u)).abs() <= 1e-4, "t={t} u={u}: {fd} vs {}", f_t(&ctx, t, u));
        }
    }
}

#[test]
fn full_coupling_has_no_error_term() {
    // At t = 1 the bulk term vanishes; only the field term of negative
    // overlaps survives.
    let with_field = context(&frsb_model(0.1));
    let no_field = context(&frsb_model(0.0));
    for u in [0.0, 0.5, 0.99] {
        assert_eq!(eval_error_term(&with_field, 1.0, u).unwrap(), 0.0);
        assert!((eval_e(&with_field, 1.0, u, 0.0).unwrap() - 2.0 * with_field.gs()).abs() <= 1e-12);
    }
    for u in [-0.9, -0.2, 0.5, 0.99] {
        assert_eq!(eval_error_term(&no_field, 1.0, u).unwrap(), 0.0);
        assert!((eval_e(&no_field, 1.0, u, 0.0).unwrap() - 2.0 * no_field.gs()).abs() <= 1e-12);
    }
    assert!(eval_error_term(&with_field, 1.0, -0.9).unwrap() > 0.0);
}

#[test]
fn error_term_is_positive_outside_support_gap() {
    let ctx = context(&frsb_model(0.0));
    let u = (ctx.q0() + 1.0) / 2.0;
    assert!(eval_error_term(&ctx, 0.5, u).unwrap() >= 1e-6);
    assert!(eval_error_term(&ctx, 0.5, -u).unwrap() >= 1e-6);
    for t in [0.1, 0.5, 0.9] {
        for u in [0.2, 0.6, 1.0] {
            assert!(eval_e(&ctx, t, u, 0.0).unwrap() < 2.0 * ctx.gs());
        }
    }
    let sk = context(&MixtureSpec::sk(1.0));
    assert!(eval_e(&sk, 0.5, 1.0, 0.0).unwrap() < 2.0 * sk.gs());
    assert!(eval_e(&sk, 0.5, -1.0, 0.0).unwrap() < 2.0 * sk.gs());
}

#[test]
fn error_identity_at_random_points() {
    let ctx = context(&frsb_model(0.1));
    let mut state = 17u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    for _ in 0..20 {
        let (t, u) = (next(), 2.0 * next() - 1.0);
        let e = eval_e(&ctx, t, u, 0.0).unwrap();
        let eps = eval_error_term(&ctx, t, u).unwrap();
        assert!((e - (2.0 * ctx.gs() - eps)).abs() <= 1e-8, "t={t} u={u}");
    }
}

#[test]
fn coupled_functional_is_even_without_field() {
    let ctx = context(&frsb_model(0.0));
    for (t, u) in [(0.3, 0.4), (0.8, 0.95), (0.5, 1.0)] {
        assert!((eval_e(&ctx, t, u, 0.0).unwrap() - eval_e(&ctx, t, -u, 0.0).unwrap()).abs() < 1e-13);
    }
}

#[test]
fn eval_e_preconditions() {
    let ctx = context(&MixtureSpec::sk(1.0));
    let gap = ctx.b - ctx.d(0.0);
    assert!(matches!(eval_e(&ctx, 0.5, 0.2, gap), Err(Error::Precondition(_))));
    assert!(matches!(eval_e(&ctx, 1.5, 0.2, 0.0), Err(Error::Precondition(_))));
    assert!(matches!(eval_e(&ctx, 0.5, 1.2, 0.0), Err(Error::Precondition(_))));
}

#[test]
fn finite_temperature_bound_collapses_at_full_coupling() {
    let m = MixtureSpec::from_squared([(2, 0.5), (4, 0.2)], 0.4).unwrap();
    let o = FiniteTempOrder::new(vec![0.1, 0.4, 0.8], vec![0.2, 0.6, 1.0], 2.5).unwrap();
    let (b, _) = minimize_parisi_b(&m, &o).unwrap();
    for b in [b, 1.5 * b] {
        let twice = 2.0 * eval_parisi_p(&m, &o, b).unwrap();
        let hb2 = (0.4f64 * 2.5).powi(2);
        let d = |q: f64| {
            // int_q^1 xi_b'' x, by hand for this x
            let xi1 = |s: f64| 6.25 * (s + 0.8 * s * s * s);
            let pieces = [(0.1, 0.4, 0.2), (0.4, 0.8, 0.6), (0.8, 1.0, 1.0)];
            pieces.iter().map(|&(a, e, x): &(f64, f64, f64)| x * (xi1(e) - xi1(a.max(q))).max(0.0)).sum::<f64>()
        };
        for u in [-0.7f64, 0.0, 0.3, 1.0] {
            let v = eval_coupled_parisi(&m, &o, 1.0, u, b, 0.0).unwrap();
            // Negative overlaps see the field through d(|u|) instead of d(0).
            let expected = if u < 0.0 { twice - hb2 / (b - d(0.0)) + hb2 / (b - d(u.abs())) } else { twice };
            assert!((v - expected).abs() <= 1e-8 * twice.abs(), "u={u}: {v} vs {expected}");
        }
    }
}

#[test]
fn finite_temperature_bound_is_even_in_lambda_at_zero_overlap() {
    let m = MixtureSpec::from_squared([(2, 0.5), (4, 0.2)], 0.0).unwrap();
    let o = FiniteTempOrder::new(vec![0.2, 0.6], vec![0.5, 1.0], 2.0).unwrap();
    let (b, _) = minimize_parisi_b(&m, &o).unwrap();
    let b = b + 1.0;
    for lambda in [0.1, 0.5] {
        let a = eval_coupled_parisi(&m, &o, 0.4, 0.0, b, lambda).unwrap();
        let c = eval_coupled_parisi(&m, &o, 0.4, 0.0, b, -lambda).unwrap();
        assert!((a - c).abs() < 1e-12);
    }
    assert!(matches!(eval_coupled_parisi(&m, &o, 0.4, 0.0, 0.5, 0.0), Err(Error::Precondition(_))));
}

#[test]
fn scaled_finite_temperature_bound_approaches_zero_temperature() {
    let m = MixtureSpec::sk(1.0);
    let ctx = context(&m);
    let (t, u, lambda) = (0.5, 0.5, 0.1);
    let target = eval_e(&ctx, t, u, lambda).unwrap();
    let rows = beta_sweep(&m, &[4.0, 8.0, 16.0, 32.0], 2).unwrap();
    let gaps: Vec<f64> = rows
        .iter()
        .map(|r| {
            let o = FiniteTempOrder::new(r.q.clone(), r.x.clone(), r.beta).unwrap();
            let (b, _) = minimize_parisi_b(&m, &o).unwrap();
            let v = eval_coupled_parisi(&m, &o, t, u, b, r.beta * lambda).unwrap() / r.beta;
            (v - target).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_u_never_exceeds_d0(t in 0.0f64..1.0, u in -1.0f64..1.0, frac in 0.0f64..1.0) {
        let ctx = context(&frsb_model(0.1));
        let q = frac * u.abs();
        prop_assert!(ctx.d_u(t, u, q) <= ctx.d(0.0) + 1e-14);
    }
}
