use proptest::prelude::*;
use pspin_core::finite_temp::*;
use pspin_core::zero_temp::{closed_form_1rsb, closed_form_rs};
use pspin_core::{Error, MixtureSpec};

fn trapezoid(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let dx = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * dx)).sum();
    dx * (0.5 * (f(a) + f(b)) + inner)
}

/// Crisanti–Sommers value by brute-force quadrature of the original form.
fn cs_oracle(m: &MixtureSpec, o: &FiniteTempOrder) -> f64 {
    let b2 = o.beta() * o.beta();
    let h2 = m.h() * m.h();
    let x_hat = |q: f64| trapezoid(4000, q, 1.0, |s| o.x_at(s));
    let mut breaks = vec![0.0];
    breaks.extend_from_slice(o.q());
    breaks.push(1.0);
    let mut linear = 0.0;
    let mut tail = 0.0;
    for w in breaks.windows(2) {
        // x is constant on (w[0], w[1]); sample it at the midpoint.
        let x = o.x_at(0.5 * (w[0] + w[1]));
        linear += x * trapezoid(2000, w[0], w[1], |q| b2 * (m.xi1(q) + h2));
        if w[1] <= o.q_hat() {
            tail += trapezoid(200, w[0], w[1], |q| 1.0 / x_hat(q));
        }
    }
    0.5 * (linear + tail + (1.0 - o.q_hat()).ln())
}

fn random_order(seed: u64, k: usize, beta: f64) -> FiniteTempOrder {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    let mut q: Vec<f64> = (0..k).map(|_| 0.95 * next()).collect();
    let mut x: Vec<f64> = (0..k - 1).map(|_| next()).collect();
    q.sort_by(f64::total_cmp);
    x.sort_by(f64::total_cmp);
    x.push(1.0);
    FiniteTempOrder::new(q, x, beta).unwrap()
}

fn rs_overlap_oracle(beta: f64, h: f64) -> f64 {
    // SK: q/(1-q)^2 = beta^2 (q + h^2)
    let f = |q: f64| q / ((1.0 - q) * (1.0 - q)) - beta * beta * (q + h * h);
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn one_jump_at_zero_has_symbolic_value() {
    // x = 1 on [0, 1]: Q = beta^2 (xi(1) + h^2) / 2
    let o = FiniteTempOrder::replica_symmetric(0.0, 0.5).unwrap();
    let sk0 = MixtureSpec::sk(0.0);
    assert!((eval_cs(&sk0, &o).unwrap() - 0.0625).abs() < 1e-15);
    let m = MixtureSpec::from_squared([(2, 0.3), (4, 0.2)], 0.7).unwrap();
    let o = FiniteTempOrder::replica_symmetric(0.0, 1.3).unwrap();
    let expected = 0.5 * 1.69 * (0.5 + 0.49);
    assert!((eval_cs(&m, &o).unwrap() - expected).abs() < 1e-14);
    assert!(eval_cs(&sk0, &FiniteTempOrder::replica_symmetric(0.0, 0.1).unwrap()).unwrap().is_finite());
}

#[test]
fn closed_forms_match_quadrature_oracle() {
    let m = MixtureSpec::from_squared([(2, 0.5), (3, 0.2), (4, 1.0 / 24.0)], 0.4).unwrap();
    for seed in 0..6 {
        let o = random_order(seed, 1 + (seed as usize % 3), 1.0 + seed as f64);
        let oracle = cs_oracle(&m, &o);
        let value = eval_cs(&m, &o).unwrap();
        assert!((value - oracle).abs() < 1e-5 * (1.0 + oracle.abs()), "{value} vs {oracle}");
    }
}

#[test]
fn rs_optimum_matches_stationarity_oracle() {
    let m = MixtureSpec::sk(1.0);
    for beta in [1.0, 4.0] {
        let fit = minimize_cs_krsb(&m, beta, 1, 1e-10).unwrap();
        let q = rs_overlap_oracle(beta, 1.0);
        assert!((fit.order.q()[0] - q).abs() < 1e-5, "beta={beta}");
        let at_oracle = eval_cs(&m, &FiniteTempOrder::replica_symmetric(q, beta).unwrap()).unwrap();
        assert!((fit.value - at_oracle).abs() < 1e-10);
    }
}

#[test]
fn minimization_dominates_trivial_point() {
    let m = MixtureSpec::sk(0.0);
    let fit = minimize_cs_krsb(&m, 0.5, 2, 1e-9).unwrap();
    let trivial = eval_cs(&m, &FiniteTempOrder::replica_symmetric(0.0, 0.5).unwrap()).unwrap();
    assert!(fit.value <= trivial + 1e-12);
    assert!(fit.agreeing_restarts >= 1 && fit.agreeing_restarts <= fit.restarts);
}

#[test]
fn value_is_nonincreasing_in_k() {
    for m in [MixtureSpec::sk(0.5), MixtureSpec::pure(3, 0.0).unwrap()] {
        let v: Vec<f64> = (1..=3).map(|k| minimize_cs_krsb(&m, 4.0, k, 1e-9).unwrap().value).collect();
        assert!(v[1] <= v[0] + 1e-8 && v[2] <= v[1] + 1e-8, "{v:?}");
    }
}

#[test]
fn pure_three_spin_breaks_replica_symmetry_at_low_temperature() {
    let m = MixtureSpec::pure(3, 0.0).unwrap();
    let one = minimize_cs_krsb(&m, 4.0, 1, 1e-9).unwrap().value;
    let two = minimize_cs_krsb(&m, 4.0, 2, 1e-9).unwrap().value;
    assert!(two < one - 1e-3);
}

#[test]
fn parisi_minimum_over_b_matches_cs_at_optimum() {
    for (m, beta) in [(MixtureSpec::sk(0.0), 0.5), (MixtureSpec::sk(1.0), 2.0), (MixtureSpec::pure(3, 0.0).unwrap(), 4.0)] {
        for k in 1..=2 {
            let fit = minimize_cs_krsb(&m, beta, k, 1e-10).unwrap();
            let (_, p) = minimize_parisi_b(&m, &fit.order).unwrap();
            assert!((p - fit.value).abs() <= 1e-6, "beta={beta} k={k}: {p} vs {}", fit.value);
        }
    }
}

#[test]
fn parisi_in_b_is_convex_and_grows() {
    let m = MixtureSpec::sk(0.3);
    let o = random_order(3, 2, 2.0);
    let (b0, p0) = minimize_parisi_b(&m, &o).unwrap();
    let p = |b: f64| eval_parisi_p(&m, &o, b).unwrap();
    assert!((p(b0) - p0).abs() < 1e-14);
    for (a, b) in [(b0 * 1.01, b0 * 3.0), (b0 * 1.5, b0 * 10.0), (b0 * 1.001, b0 * 1.002)] {
        assert!(p(0.5 * (a + b)) < 0.5 * (p(a) + p(b)));
    }
    assert!(p(1e6) > 4e5);
    assert!(p(1e8) > p(1e6));
    assert!(matches!(eval_parisi_p(&m, &o, 0.5), Err(Error::Precondition(_))));
}

#[test]
fn free_energy_over_beta_stays_below_ground_state() {
    // With respect to the uniform probability measure, F_N(beta) <= beta L_N / N.
    for h in [0.0, 1.0] {
        let m = MixtureSpec::sk(h);
        let gs = closed_form_rs(&m).unwrap().gs_value;
        let rows = beta_sweep(&m, &[2.0, 4.0, 8.0, 16.0, 32.0], 2).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for r in &rows {
            assert!(r.f_over_beta <= gs);
            assert!(r.f_over_beta > prev);
            prev = r.f_over_beta;
        }
    }
}

#[test]
fn replica_symmetric_sweep_converges_to_zero_temperature_solution() {
    let m = MixtureSpec::sk(1.0);
    let l0 = closed_form_rs(&m).unwrap().l0();
    let rows = beta_sweep(&m, &[4.0, 8.0, 16.0, 32.0], 2).unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| (r.l_beta - l0).abs()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[3] < 0.05);
    // No mass of beta x_beta on [0, 0.95] once q_beta > 0.95.
    assert!(rows[3].scaled_x.iter().all(|&v| v == 0.0));
    assert_eq!(rows[3].scaled_x.len(), sweep_grid().len());
}

#[test]
fn one_step_sweep_approaches_closed_form() {
    let m = MixtureSpec::pure(3, 0.0).unwrap();
    let l0 = closed_form_1rsb(3).unwrap().l0();
    let rows = beta_sweep(&m, &[4.0, 8.0, 16.0, 32.0], 2).unwrap();
    assert!((rows[3].l_beta - l0).abs() < 0.05, "{} vs {l0}", rows[3].l_beta);
}

#[test]
fn sweep_rejects_unsorted_betas() {
    assert!(beta_sweep(&MixtureSpec::sk(0.0), &[4.0, 2.0], 2).is_err());
    assert!(beta_sweep(&MixtureSpec::sk(0.0), &[], 2).is_err());
    assert!(minimize_cs_krsb(&MixtureSpec::sk(0.0), 1.0, 0, 1e-9).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn both_cs_forms_agree(seed in 0u64..1_000_000, k in 1usize..5, beta in 0.1f64..20.0, h in 0.0f64..2.0) {
        let m = MixtureSpec::from_squared([(2, 0.5), (3, 0.1), (6, 0.05)], h).unwrap();
        let o = random_order(seed, k, beta);
        let a = eval_cs(&m, &o).unwrap();
        let b = eval_cs_direct(&m, &o).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn cs_is_independent_of_cutoff(seed in 0u64..1_000_000, k in 1usize..4, beta in 0.1f64..10.0, t in 0.0f64..0.99) {
        let m = MixtureSpec::from_squared([(2, 0.5), (4, 0.1)], 0.3).unwrap();
        let o = random_order(seed, k, beta);
        let q_hat = o.q_hat() + t * (1.0 - o.q_hat());
        prop_assume!(q_hat < 1.0 - 1e-6);
        let a = eval_cs(&m, &o).unwrap();
        let b = eval_cs_at(&m, &o, q_hat).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }
}
