//! End-to-end checks on the 3-state/2-input benchmark plant: reference-gain
//! reproduction, oracle agreement, the moment-sum representation of the
//! primal solution, duality at the optimum, and the exact-data learner.

mod common;

use common::{
    bench_ensemble, bench_initial_gains, bench_reference_f_hat_star, bench_reference_f_star,
    bench_system,
};
use mflqr_core::lyapunov::{is_stabilizing, solve_gle_primal, triple_radius, OperatorTriple};
use mflqr_core::model_free::{data_dual_update, run_pdmf, DataSource, PartialModel, PdmfConfig};
use mflqr_core::ops::{augmented_ops, closed_loop_2n};
use mflqr_core::primal_dual::{
    dual_update, duality_gap, injection_from_z, kkt_residuals, primal_update, run_pd,
    solve_primal_at,
};
use mflqr_core::riccati::{
    gare_residual, optimal_cost, policy_evaluation, q_matrices, run_pi, value_iteration_oracle,
};
use mflqr_core::simulator::{exact_moments, mc_cost, NoiseModel};
use mflqr_core::system::min_eig;
use nalgebra::DMatrix;

/// truncate to two decimals, toward zero, matching the reference precision
fn trunc2(x: f64) -> f64 {
    (x * 100.0).trunc() / 100.0
}

#[test]
fn reference_gains_reproduced_by_policy_iteration() {
    let (sys, w) = bench_system();
    let g0 = bench_initial_gains();
    let check = is_stabilizing(&sys, &g0).unwrap();
    assert!(check.stabilizing, "initial gains: radius {}", check.radius);

    let trace = run_pi(&sys, &w, &g0, 1e-12, 100).unwrap();
    assert!(trace.converged);
    let f = &trace.final_gains.f;
    let f_hat = trace.final_gains.f_hat();
    let f_ref = bench_reference_f_star();
    let fh_ref = bench_reference_f_hat_star();
    for i in 0..2 {
        for j in 0..3 {
            assert_eq!(
                trunc2(f[(i, j)]),
                f_ref[(i, j)],
                "F*[{i},{j}] = {} does not truncate to the reference value",
                f[(i, j)]
            );
            assert_eq!(
                trunc2(f_hat[(i, j)]),
                fh_ref[(i, j)],
                "Fhat*[{i},{j}] = {} does not truncate to the reference value",
                f_hat[(i, j)]
            );
            assert!((f[(i, j)] - f_ref[(i, j)]).abs() <= 1e-2);
            assert!((f_hat[(i, j)] - fh_ref[(i, j)]).abs() <= 1e-2);
        }
    }
}

#[test]
fn closed_loop_radius_strictly_inside_unit_disc() {
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let cl = closed_loop_2n(&sys, &trace.final_gains).unwrap();
    let triple = OperatorTriple::new(cl.a1cl, cl.a2cl, cl.a3cl).unwrap();
    let rho = triple_radius(&triple).unwrap();
    assert!(rho > 0.0 && rho < 1.0, "radius {rho}");

    // independent oracle: the decay rate of repeated operator application
    // on the identity equals the measured radius
    let mut x = DMatrix::<f64>::identity(6, 6);
    for _ in 0..40 {
        x = triple.apply_dual(&x);
    }
    let n40 = x.norm();
    for _ in 0..10 {
        x = triple.apply_dual(&x);
    }
    let rate = (x.norm() / n40).powf(0.1);
    assert!(
        (rate - rho).abs() <= 1e-3 * (1.0 + rho),
        "decay rate {rate} vs radius {rho}"
    );
    // the augmented loop is stable exactly when the 2n loop is
    let aug = augmented_ops(&sys, &trace.final_gains).unwrap();
    let rho_aug =
        triple_radius(&OperatorTriple::new(aug.s1, aug.s2, aug.s3).unwrap()).unwrap();
    assert!(rho_aug < 1.0);
}

#[test]
fn fixed_point_consistency_and_oracle() {
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let v = trace.final_values();
    let (r1, r2) = gare_residual(&sys, &w, v).unwrap();
    assert!(r1.norm() <= 1e-9 && r2.norm() <= 1e-9);

    let oracle = value_iteration_oracle(&sys, &w, 2000).unwrap();
    let (o1, o2) = gare_residual(&sys, &w, &oracle).unwrap();
    assert!(o1.norm() <= 1e-8 && o2.norm() <= 1e-8);
    assert!((&oracle.p - &v.p).norm() <= 1e-8 * (1.0 + v.p.norm()));
    assert!((&oracle.p_bar - &v.p_bar).norm() <= 1e-8 * (1.0 + v.p_bar.norm()));

    // evaluating the optimal policy returns the optimal values
    let v_eval = policy_evaluation(&sys, &w, &trace.final_gains).unwrap();
    assert!((&v_eval.p - &v.p).norm() <= 1e-9 * (1.0 + v.p.norm()));
}

#[test]
fn q_matrix_blocks_give_back_the_gains() {
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let q = q_matrices(&sys, &w, trace.final_values()).unwrap();
    // the dual variable assembled from the Q blocks must reproduce the gains
    let x = dual_update(&sys, &w, &trace.final_gains).unwrap();
    assert!((x.x_mat() - &q.x).norm() <= 1e-9 * (1.0 + q.x.norm()));
    assert!((x.x_bar() - &q.x_bar).norm() <= 1e-9 * (1.0 + q.x_bar.norm()));
    let g = primal_update(&x).unwrap();
    assert!((&g.f - &trace.final_gains.f).norm() <= 1e-9);
    assert!((&g.f_bar - &trace.final_gains.f_bar).norm() <= 1e-9);
}

#[test]
fn primal_solution_equals_truncated_moment_sum() {
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let g = &trace.final_gains;
    let e = bench_ensemble(2024);
    assert!(e.check_aleph().unwrap() > 0.0);

    let aug = augmented_ops(&sys, g).unwrap();
    let triple = OperatorTriple::new(aug.s1, aug.s2, aug.s3).unwrap();
    let seed = e.initial_second_moment();
    let s_gle = solve_gle_primal(&triple, &seed).unwrap();
    assert!(min_eig(&s_gle) > 0.0);

    let (_, data) = exact_moments(&sys, g, &e, 500).unwrap();
    assert!(
        (&data.sm - &s_gle).norm() <= 1e-8 * (1.0 + s_gle.norm()),
        "truncated sum differs from the equation solution by {}",
        (&data.sm - &s_gle).norm()
    );
    let _ = w;
}

#[test]
fn duality_and_analytic_cost_at_the_optimum() {
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let g = &trace.final_gains;
    let v = trace.final_values();
    let e = bench_ensemble(7);
    let z1 = e.z1();
    let z2 = e.z2();
    e.check_z_order().unwrap();

    let inj = injection_from_z(&sys, g, &z1, &z2).unwrap();
    let p = solve_primal_at(&sys, g, &inj).unwrap();
    let x = dual_update(&sys, &w, g).unwrap();
    let rep = duality_gap(&w, &z1, &z2, &p, &x).unwrap();
    assert!(
        rep.gap.abs() <= 1e-8 * (1.0 + rep.j_primal.abs()),
        "duality gap {} at J_P = {}",
        rep.gap,
        rep.j_primal
    );
    let analytic = optimal_cost(v, &z1, &z2).unwrap();
    assert!(
        (rep.j_primal - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()),
        "primal objective {} vs analytic cost {analytic}",
        rep.j_primal
    );

    // KKT residuals at the optimum, seeded by the initial second moment
    let aleph = e.initial_second_moment();
    let p5 = solve_primal_at(&sys, g, &aleph).unwrap();
    let k = kkt_residuals(&sys, &w, &p5, g, &x, &aleph).unwrap();
    let scale = 1.0 + p5.s_tilde.norm().max(x.x_tilde.norm());
    assert!(k.r1 <= 1e-8 * scale && k.r3 <= 1e-8 * scale);
    assert!(k.r4 <= 1e-8 * scale && k.r5 <= 1e-8 * scale);
    assert!(k.r2 > 0.0);
}

#[test]
fn monte_carlo_cost_matches_analytic_value() {
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let e = bench_ensemble(7);
    let analytic = optimal_cost(trace.final_values(), &e.z1(), &e.z2()).unwrap();
    let mc = mc_cost(
        &sys,
        &w,
        &trace.final_gains,
        &e,
        200,
        2000,
        NoiseModel::normal(90210),
    )
    .unwrap();
    let z = (mc.estimate - analytic).abs() / mc.std_error;
    assert!(
        z <= 3.0,
        "Monte Carlo {} vs analytic {analytic}: {z:.2} standard errors",
        mc.estimate
    );
    assert!(mc.tail_bound < mc.std_error, "truncation tail dominates");
}

#[test]
fn exact_data_learner_tracks_model_based_iteration() {
    let (sys, w) = bench_system();
    let e = bench_ensemble(11);
    let g0 = bench_initial_gains();
    let cfg = PdmfConfig {
        horizon: 500,
        rollouts: 2,
        eps: 0.0,
        max_iter: 10,
        noise: NoiseModel::normal(1),
        source: DataSource::ExactMoments,
    };
    let learner = run_pdmf(&sys, &w, &e, &g0, &cfg).unwrap();
    let pd = run_pd(&sys, &w, &g0, 1e-14, 50).unwrap();
    for (a, b) in learner.iterates.iter().zip(pd.iterates.iter()) {
        let diff = (&a.gains.f - &b.gains.f).norm() + (&a.gains.f_bar - &b.gains.f_bar).norm();
        assert!(
            diff <= 1e-6,
            "iterate {}: learner deviates from the dual solve by {diff:.3e}",
            a.index
        );
    }
}

#[test]
fn exact_data_dual_residual_decreases_with_horizon() {
    // the model-based dual variable satisfies the finite-horizon data
    // equation up to a truncation error that shrinks with the horizon
    let (sys, w) = bench_system();
    let g = bench_initial_gains();
    let pm = PartialModel::from_system(&sys, &w);
    let e = bench_ensemble(13);
    let model = dual_update(&sys, &w, &g).unwrap();
    let residual_at = |horizon: usize| -> f64 {
        let (_, data) = exact_moments(&sys, &g, &e, horizon).unwrap();
        let (s2, s3) = pm.augmented_noise_ops(&g);
        let x = &model.x_tilde;
        let image = &data.wm * x * data.wm.transpose()
            + &data.sm * (s2.transpose() * x * &s2) * &data.sm
            + &data.sm * (s3.transpose() * x * &s3) * &data.sm
            + &data.sm * (w.lambda_tilde() - x) * &data.sm;
        image.norm() / data.sm.norm_squared()
    };
    // the one-step cross sum satisfies W = S A1' exactly at every finite
    // horizon, so the model dual solves the data equation to machine
    // precision regardless of truncation depth
    let errs: Vec<f64> = [3usize, 8, 16].iter().map(|&h| residual_at(h)).collect();
    for (h, err) in [3usize, 8, 16].iter().zip(errs.iter()) {
        assert!(*err <= 1e-12, "horizon {h}: exact-data residual {err}");
    }

    // with a long horizon the data-driven solve recovers the model dual
    let (_, data) = exact_moments(&sys, &g, &e, 500).unwrap();
    let (x, _) = data_dual_update(&pm, &g, &data).unwrap();
    let err = (&x.x_tilde - &model.x_tilde).norm() / model.x_tilde.norm();
    assert!(err <= 1e-6, "long-horizon recovery error {err}");
}

#[test]
fn mean_channel_gain_row_is_the_total_gain() {
    // the reference "mean" gain row equals F* + Fb*, not Fb* alone;
    // this pins the interpretation used across the test suite
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let fb = &trace.final_gains.f_bar;
    let fh_ref = bench_reference_f_hat_star();
    let direct_err = (fb - &fh_ref).norm();
    let hat_err = (trace.final_gains.f_hat() - &fh_ref).norm();
    assert!(hat_err < 0.05 && direct_err > 0.3);
    let _: DMatrix<f64> = fh_ref;
}

#[test]
fn sampled_data_matrices_track_exact_moments() {
    // statistical accuracy of the empirical data matrices at the learner's
    // operating point: 3-seed median relative error within 0.35
    let (sys, w) = bench_system();
    let trace = run_pi(&sys, &w, &bench_initial_gains(), 1e-12, 100).unwrap();
    let g0 = trace.final_gains.clone();
    let e = bench_ensemble(2024);
    let (_, exact) = exact_moments(&sys, &g0, &e, 100).unwrap();
    let mut errs: Vec<f64> = [101u64, 102, 103]
        .iter()
        .map(|&seed| {
            let cfg = mflqr_core::simulator::RolloutConfig {
                horizon: 100,
                rollouts: 30,
                mean_mode: mflqr_core::simulator::MeanMode::Sample,
                initial_input: mflqr_core::simulator::InitialInput::FreeEnsemble,
                noise: NoiseModel::normal(seed),
            };
            let batch = mflqr_core::simulator::rollout(&sys, &g0, &e, &cfg).unwrap();
            let sampled = mflqr_core::simulator::data_matrices(&batch).unwrap();
            (&sampled.sm - &exact.sm).norm() / exact.sm.norm()
        })
        .collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(errs[1] <= 0.35, "median SM relative error {:.3}", errs[1]);
    let _ = w;
}

#[test]
fn sampling_error_shrinks_with_rollout_count() {
    // law of large numbers: the median data-matrix error is non-increasing
    // over H in {10, 100, 1000}
    let (sys, _) = bench_system();
    let g0 = bench_initial_gains();
    let e = bench_ensemble(31);
    let horizon = 12;
    let (_, exact) = exact_moments(&sys, &g0, &e, horizon).unwrap();
    let median_err = |rollouts: usize| -> f64 {
        let mut errs: Vec<f64> = [7u64, 8, 9]
            .iter()
            .map(|&seed| {
                let cfg = mflqr_core::simulator::RolloutConfig {
                    horizon,
                    rollouts,
                    mean_mode: mflqr_core::simulator::MeanMode::Sample,
                    initial_input: mflqr_core::simulator::InitialInput::FreeEnsemble,
                    noise: NoiseModel::normal(seed),
                };
                let batch = mflqr_core::simulator::rollout(&sys, &g0, &e, &cfg).unwrap();
                let sampled = mflqr_core::simulator::data_matrices(&batch).unwrap();
                (&sampled.sm - &exact.sm).norm() / exact.sm.norm()
            })
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        errs[1]
    };
    let e10 = median_err(10);
    let e100 = median_err(100);
    let e1000 = median_err(1000);
    assert!(
        e100 <= e10 && e1000 <= e100,
        "medians not non-increasing: {e10:.4} {e100:.4} {e1000:.4}"
    );
}
