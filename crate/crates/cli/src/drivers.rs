//! Subcommand drivers: `run` (one of the three algorithms), `compare`
//! (learner vs. identification baseline), and `check` (assumption report).

use crate::config::{Algorithm, DataTag, Experiment, NoiseTag};
use crate::output::{self, DualityDoc, GainsDoc, ResultDoc, ValuesDoc};
use mflqr_core::ensemble::InitialStateEnsemble;
use mflqr_core::lyapunov::is_stabilizing;
use mflqr_core::model_free::{run_pdmf, DataSource, PdmfConfig};
use mflqr_core::primal_dual::{
    dual_update, duality_gap, injection_from_z, run_pd, solve_primal_at,
};
use mflqr_core::riccati::{find_stabilizing_gains, optimal_cost, run_pi};
use mflqr_core::simulator::{
    identify_drift, rollout, InitialInput, MeanMode, NoiseKind, NoiseModel, RolloutConfig,
};
use mflqr_core::system::{validate_weights, GainPair, MfSystem, WeightSpec};
use mflqr_core::Error as CoreError;
use std::path::Path;
use std::time::Instant;

/// Exit codes: 1 parse, 2 invariant, 3 not stabilizing, 4 solver,
/// 5 divergence, 6 iteration limit.
pub fn exit_code_for(err: &CoreError) -> i32 {
    match err {
        CoreError::NotStabilizing(_) => 3,
        CoreError::MaxIterExceeded(_) => 6,
        CoreError::Divergence(_)
        | CoreError::NonFiniteState { .. }
        | CoreError::DivergentRollout { .. } => 5,
        CoreError::DimensionMismatch(_)
        | CoreError::IndefiniteWeight { .. }
        | CoreError::InvalidHorizon(_)
        | CoreError::InsufficientRollouts(_)
        | CoreError::InvalidEnsemble(_) => 2,
        _ => 4,
    }
}

pub struct RunOutcome {
    pub exit: i32,
    pub messages: Vec<String>,
}

fn noise_model(tag: NoiseTag, seed: u64) -> NoiseModel {
    match tag {
        NoiseTag::Normal => NoiseModel {
            kind: NoiseKind::StandardNormal,
            seed,
        },
        NoiseTag::Rademacher => NoiseModel {
            kind: NoiseKind::Rademacher,
            seed,
        },
    }
}

/// Duality block computed at converged gains.
fn duality_at(
    sys: &MfSystem<f64>,
    w: &WeightSpec<f64>,
    ensemble: &InitialStateEnsemble<f64>,
    gains: &GainPair<f64>,
) -> Result<DualityDoc, CoreError> {
    let z1 = ensemble.z1();
    let z2 = ensemble.z2();
    let inj = injection_from_z(sys, gains, &z1, &z2)?;
    let p = solve_primal_at(sys, gains, &inj)?;
    let x = dual_update(sys, w, gains)?;
    let rep = duality_gap(w, &z1, &z2, &p, &x)?;
    Ok(DualityDoc {
        j_primal: rep.j_primal,
        j_dual: rep.j_dual,
        gap: rep.gap,
    })
}

pub fn cmd_run(exp: &Experiment, out_dir: &Path) -> Result<RunOutcome, (i32, String)> {
    std::fs::create_dir_all(out_dir).map_err(|e| (1, format!("output dir: {e}")))?;
    let started = Instant::now();
    let run = &exp.config.run;
    let fail = |e: CoreError| (exit_code_for(&e), e.to_string());

    let g0 = exp.initial_gains().map_err(fail)?;
    let mut messages = Vec::new();

    match run.algorithm {
        Algorithm::Pi | Algorithm::Pd => {
            let (gains, values, iters, converged, sign) = match run.algorithm {
                Algorithm::Pi => {
                    let t = run_pi(&exp.system, &exp.weights, &g0, run.eps, run.max_iter)
                        .map_err(fail)?;
                    output::write_pi_trace(&out_dir.join("trace.csv"), &t)
                        .map_err(|e| (4, e.to_string()))?;
                    let values = t.final_values().clone();
                    (t.final_gains, values, t.iterates.len(), t.converged, None)
                }
                _ => {
                    let t = run_pd(&exp.system, &exp.weights, &g0, run.eps, run.max_iter)
                        .map_err(fail)?;
                    output::write_pd_trace(&out_dir.join("trace.csv"), &t)
                        .map_err(|e| (4, e.to_string()))?;
                    // evaluate the final policy to report values
                    let values = mflqr_core::riccati::policy_evaluation(
                        &exp.system,
                        &exp.weights,
                        &t.final_gains,
                    )
                    .map_err(fail)?;
                    (
                        t.final_gains,
                        values,
                        t.iterates.len(),
                        t.converged,
                        Some(t.sign_convention.to_string()),
                    )
                }
            };
            let radius = is_stabilizing(&exp.system, &gains).map_err(fail)?.radius;
            let cost = optimal_cost(&values, &exp.ensemble.z1(), &exp.ensemble.z2())
                .map_err(fail)?;
            let duality =
                duality_at(&exp.system, &exp.weights, &exp.ensemble, &gains).map_err(fail)?;
            let doc = ResultDoc {
                algorithm: run.algorithm.to_string(),
                converged,
                iterations: iters,
                gains: GainsDoc::from(&gains),
                values: Some(ValuesDoc {
                    p: output::matrix_doc(&values.p),
                    p_bar: output::matrix_doc(&values.p_bar),
                }),
                optimal_cost: Some(cost),
                duality: Some(duality),
                closed_loop_radius: Some(radius),
                sign_convention: sign,
                diverged_at: None,
                seed: run.seed,
                timing_ms: started.elapsed().as_millis(),
            };
            output::write_result(&out_dir.join("result.json"), &doc)
                .map_err(|e| (4, e.to_string()))?;
            messages.push(format!(
                "{} converged in {} iterations; optimal cost {:.6}; duality gap {:.3e}",
                run.algorithm, iters, cost, doc.duality.as_ref().unwrap().gap
            ));
            output::write_summary(
                &out_dir.join("summary.txt"),
                &summary_lines(exp, &messages),
            )
            .map_err(|e| (4, e.to_string()))?;
            Ok(RunOutcome { exit: 0, messages })
        }
        Algorithm::Pdmf => {
            let cfg = PdmfConfig {
                horizon: run.horizon,
                rollouts: run.rollouts,
                eps: run.eps,
                max_iter: run.max_iter,
                noise: noise_model(run.noise, run.seed),
                source: match run.data {
                    DataTag::Sampled => DataSource::Sampled,
                    DataTag::Exact => DataSource::ExactMoments,
                },
            };
            let trace = run_pdmf(&exp.system, &exp.weights, &exp.ensemble, &g0, &cfg)
                .map_err(fail)?;
            output::write_pdmf_trace(&out_dir.join("trace.csv"), &trace)
                .map_err(|e| (4, e.to_string()))?;
            let doc = ResultDoc {
                algorithm: run.algorithm.to_string(),
                converged: trace.converged,
                iterations: trace.iterations(),
                gains: GainsDoc::from(&trace.final_gains),
                values: None,
                optimal_cost: None,
                duality: None,
                closed_loop_radius: None,
                sign_convention: None,
                diverged_at: trace.diverged_at,
                seed: run.seed,
                timing_ms: started.elapsed().as_millis(),
            };
            output::write_result(&out_dir.join("result.json"), &doc)
                .map_err(|e| (4, e.to_string()))?;
            let exit = if trace.diverged_at.is_some() { 5 } else { 0 };
            messages.push(match trace.diverged_at {
                Some(i) => format!("learning aborted: rollouts diverged at iteration {i}"),
                None => format!(
                    "learner ran {} iterations (converged: {})",
                    trace.iterations(),
                    trace.converged
                ),
            });
            output::write_summary(
                &out_dir.join("summary.txt"),
                &summary_lines(exp, &messages),
            )
            .map_err(|e| (4, e.to_string()))?;
            Ok(RunOutcome { exit, messages })
        }
        Algorithm::Compare => cmd_compare(exp, out_dir),
    }
}

/// Identification baseline vs. the partially model-free learner at a
/// matched per-update data budget (one batch of `rollouts x horizon`
/// trajectories per ensemble member).
pub fn cmd_compare(exp: &Experiment, out_dir: &Path) -> Result<RunOutcome, (i32, String)> {
    std::fs::create_dir_all(out_dir).map_err(|e| (1, format!("output dir: {e}")))?;
    let run = &exp.config.run;
    let fail = |e: CoreError| (exit_code_for(&e), e.to_string());
    let g0 = exp.initial_gains().map_err(fail)?;

    // ground truth
    let truth = run_pi(&exp.system, &exp.weights, &g0, 1e-12, 500).map_err(fail)?;
    let f_hat_star = truth.final_gains.f_hat();

    // (a) identification on one batch collected at the initial gains
    let id_noise = noise_model(run.noise, run.seed ^ 0x1d_ba5e);
    let batch = rollout(
        &exp.system,
        &g0,
        &exp.ensemble,
        &RolloutConfig {
            horizon: run.horizon,
            rollouts: run.rollouts,
            mean_mode: MeanMode::Sample,
            initial_input: InitialInput::FreeEnsemble,
            noise: id_noise,
        },
    )
    .map_err(fail)?;
    let est = identify_drift(&batch).map_err(fail)?;
    let est_sys = MfSystem::new(
        est.a1.clone(),
        est.a1_bar.clone(),
        exp.system.a2.clone(),
        exp.system.a2_bar.clone(),
        est.b1.clone(),
        est.b1_bar.clone(),
        exp.system.b2.clone(),
        exp.system.b2_bar.clone(),
    )
    .map_err(fail)?;
    let id_trace = run_pi(&est_sys, &exp.weights, &g0, 1e-12, 500).map_err(fail)?;
    let id_err = (id_trace.final_gains.f_hat() - &f_hat_star).norm();

    // (b) the learner with the same per-iteration budget
    let cfg = PdmfConfig {
        horizon: run.horizon,
        rollouts: run.rollouts,
        eps: run.eps,
        max_iter: run.max_iter,
        noise: noise_model(run.noise, run.seed),
        source: DataSource::Sampled,
    };
    let learner = run_pdmf(&exp.system, &exp.weights, &exp.ensemble, &g0, &cfg)
        .map_err(fail)?;
    if let Some(i) = learner.diverged_at {
        let err = CoreError::DivergentRollout {
            iteration: i,
            limit: mflqr_core::simulator::DIVERGENCE_LIMIT,
        };
        return Err((exit_code_for(&err), err.to_string()));
    }
    let learned_err = (learner.final_gains.f_hat() - &f_hat_star).norm();

    output::write_compare(&out_dir.join("compare.csv"), id_err, learned_err)
        .map_err(|e| (4, e.to_string()))?;
    let messages = vec![
        format!("identification |Fhat - Fhat*|_F = {id_err:.6}"),
        format!("learned        |Fhat - Fhat*|_F = {learned_err:.6}"),
        format!("ratio learned/identification   = {:.4}", learned_err / id_err),
    ];
    output::write_summary(
        &out_dir.join("summary.txt"),
        &summary_lines(exp, &messages),
    )
    .map_err(|e| (4, e.to_string()))?;
    Ok(RunOutcome { exit: 0, messages })
}

/// Assumption report: weight conditions, stabilizing evidence for the
/// supplied or searched gains, and ensemble rank conditions. Report only;
/// findings are encoded in the output text.
pub fn cmd_check(exp: &Experiment, out_dir: &Path) -> Result<RunOutcome, (i32, String)> {
    std::fs::create_dir_all(out_dir).map_err(|e| (1, format!("output dir: {e}")))?;
    let mut lines = Vec::new();

    match validate_weights(&exp.weights) {
        Ok(rep) => {
            lines.push(format!(
                "weights: ok (min eig Q {:.3e}, Q+Q_bar {:.3e}, R {:.3e}, R+R_bar {:.3e})",
                rep.min_eig_q, rep.min_eig_q_hat, rep.min_eig_r, rep.min_eig_r_hat
            ));
        }
        Err(e) => lines.push(format!("weights: FAILED - {e}")),
    }

    match &exp.gains {
        Some(g) => match is_stabilizing(&exp.system, g) {
            Ok(c) if c.stabilizing => {
                lines.push(format!("gains: supplied pair stabilizing (radius {:.6})", c.radius))
            }
            Ok(c) => lines.push(format!(
                "gains: FAILED - supplied pair not stabilizing (radius {:.6})",
                c.radius
            )),
            Err(e) => lines.push(format!("gains: FAILED - {e}")),
        },
        None => match find_stabilizing_gains(&exp.system, exp.config.run.seed, 400) {
            Ok(g) => {
                let c = is_stabilizing(&exp.system, &g).unwrap();
                lines.push(format!(
                    "gains: none supplied; search found a stabilizing pair (radius {:.6})",
                    c.radius
                ));
            }
            Err(e) => lines.push(format!("gains: FAILED - search found none ({e})")),
        },
    }

    match exp.ensemble.check_z_order() {
        Ok((z2, gap)) => lines.push(format!(
            "ensemble: Z_2 > 0 (min eig {z2:.3e}), Z_1 - Z_2 > 0 (min eig {gap:.3e})"
        )),
        Err(e) => lines.push(format!("ensemble: FAILED - {e}")),
    }
    match exp.ensemble.check_aleph() {
        Ok(me) => lines.push(format!(
            "ensemble: stacked Gram matrix positive definite (min eig {me:.3e}, r = {})",
            exp.ensemble.r()
        )),
        Err(e) => lines.push(format!("ensemble: FLAGGED - {e}")),
    }

    output::write_summary(&out_dir.join("check.txt"), &summary_lines(exp, &lines))
        .map_err(|e| (4, e.to_string()))?;
    Ok(RunOutcome {
        exit: 0,
        messages: lines,
    })
}

fn summary_lines(exp: &Experiment, messages: &[String]) -> Vec<String> {
    let run = &exp.config.run;
    let mut lines = vec![
        format!(
            "mflqr | algorithm {} | n {} m {} r {} | seed {}",
            run.algorithm,
            exp.system.n,
            exp.system.m,
            exp.ensemble.r(),
            run.seed
        ),
        format!(
            "eps {:.1e} | max_iter {} | horizon {} | rollouts {}",
            run.eps, run.max_iter, run.horizon, run.rollouts
        ),
    ];
    lines.extend(messages.iter().cloned());
    lines
}
