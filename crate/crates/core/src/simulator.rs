//! Stochastic rollouts, Monte Carlo moment and cost estimation, empirical
//! data matrices for the model-free learner, and the least-squares drift
//! identification baseline.
//!
//! Initial states are realized with alternating signs: rollout `h` of
//! ensemble member `l` starts at `mean_l + (-1)^h dev_l`, so for even `H`
//! the sample mean and sample covariance at step zero are exact. Process
//! noise `w_k` is drawn per (seed, member, rollout) from an independent
//! ChaCha stream, which makes batches reproducible regardless of execution
//! order.

use crate::ensemble::InitialStateEnsemble;
use crate::error::{Error, Result};
use crate::lyapunov::{is_stabilizing, OperatorTriple};
use crate::ops::{augmented_ops, closed_loop_2n, q_tilde};
use crate::scalar::{s, to_f64, Scalar};
use crate::system::{block_diag, min_eig, symmetrize, GainPair, MfSystem, WeightSpec};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;

/// State-norm threshold beyond which a rollout counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

/// Distribution of the multiplicative noise (zero mean, unit variance).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    StandardNormal,
    Rademacher,
}

/// Noise source: distribution tag plus the master stream seed.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn normal(seed: u64) -> Self {
        Self {
            kind: NoiseKind::StandardNormal,
            seed,
        }
    }

    pub fn rademacher(seed: u64) -> Self {
        Self {
            kind: NoiseKind::Rademacher,
            seed,
        }
    }

    fn stream(&self, member: usize, rollout: usize) -> ChaCha12Rng {
        // splitmix-style mixing of (seed, member, rollout) into one word
        let mut z = self
            .seed
            .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(1 + member as u64))
            .wrapping_add(0xbf58_476d_1ce4_e5b9u64.wrapping_mul(1 + rollout as u64));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ChaCha12Rng::seed_from_u64(z ^ (z >> 31))
    }

    fn draw<S: Scalar>(&self, rng: &mut ChaCha12Rng) -> S {
        match self.kind {
            NoiseKind::StandardNormal => {
                let x: f64 = StandardNormal.sample(rng);
                s(x)
            }
            NoiseKind::Rademacher => {
                if rng.random::<bool>() {
                    s(1.0)
                } else {
                    s(-1.0)
                }
            }
        }
    }
}

/// How the population mean in the dynamics and controller is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanMode {
    /// Propagate `E x_{k+1} = (A1_hat + B1_hat (F+Fb)) E x_k` exactly.
    Exact,
    /// Replace `E x_k` by the sample mean over the batch rollouts.
    Sample,
}

/// What drives the input at step zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialInput {
    /// Apply the feedback policy from step zero.
    Policy,
    /// Use the ensemble's freely chosen initial inputs; the policy starts
    /// at step one.
    FreeEnsemble,
}

/// Rollout configuration.
#[derive(Debug, Clone, Copy)]
pub struct RolloutConfig {
    /// Data horizon `M`; trajectories are simulated through step `M + 1`.
    pub horizon: usize,
    /// Rollout count `H` per ensemble member.
    pub rollouts: usize,
    pub mean_mode: MeanMode,
    pub initial_input: InitialInput,
    pub noise: NoiseModel,
}

/// Trajectories of one ensemble member: `states[h][k]`, `inputs[h][k]`, and
/// the noise draw used to advance from step `k`. `means[k]`/`input_means[k]`
/// hold the mean actually used in the dynamics at step `k`.
#[derive(Debug, Clone)]
pub struct MemberTrajectories<S: Scalar> {
    pub states: Vec<Vec<DVector<S>>>,
    pub inputs: Vec<Vec<DVector<S>>>,
    pub noises: Vec<Vec<S>>,
    pub means: Vec<DVector<S>>,
    pub input_means: Vec<DVector<S>>,
}

/// A full batch of seeded rollouts over the ensemble.
#[derive(Debug, Clone)]
pub struct TrajectoryBatch<S: Scalar> {
    pub members: Vec<MemberTrajectories<S>>,
    pub n: usize,
    pub m: usize,
    pub config: RolloutConfig,
}

impl<S: Scalar> TrajectoryBatch<S> {
    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn rollouts(&self) -> usize {
        self.config.rollouts
    }

    /// CSV export with header `l,h,k,x_1..x_n,u_1..u_m,w`. The `w` column
    /// holds the noise used to advance from step `k`; the final row of a
    /// rollout has none and is left empty.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "l,h,k")?;
        for i in 1..=self.n {
            write!(out, ",x_{i}")?;
        }
        for i in 1..=self.m {
            write!(out, ",u_{i}")?;
        }
        writeln!(out, ",w")?;
        for (l, member) in self.members.iter().enumerate() {
            for (h, states) in member.states.iter().enumerate() {
                for (k, x) in states.iter().enumerate() {
                    write!(out, "{l},{h},{k}")?;
                    for v in x.iter() {
                        write!(out, ",{}", fmt_float(to_f64(*v)))?;
                    }
                    for v in member.inputs[h][k].iter() {
                        write!(out, ",{}", fmt_float(to_f64(*v)))?;
                    }
                    match member.noises[h].get(k) {
                        Some(w) => writeln!(out, ",{}", fmt_float(to_f64(*w)))?,
                        None => writeln!(out, ",")?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// 17 significant digits: round-trip exact for 64-bit floats.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Simulate `H` rollouts per ensemble member through step `horizon + 1`.
pub fn rollout<S: Scalar>(
    sys: &MfSystem<S>,
    g: &GainPair<S>,
    ensemble: &InitialStateEnsemble<S>,
    cfg: &RolloutConfig,
) -> Result<TrajectoryBatch<S>> {
    if cfg.horizon == 0 {
        return Err(Error::InvalidHorizon("horizon must be at least 1".into()));
    }
    if cfg.rollouts < 2 {
        return Err(Error::InsufficientRollouts(cfg.rollouts));
    }
    if ensemble.n() != sys.n || ensemble.m() != sys.m {
        return Err(Error::DimensionMismatch(
            "ensemble dimensions disagree with the plant".into(),
        ));
    }
    let h_count = cfg.rollouts;
    let steps = cfg.horizon + 1; // simulate through horizon + 1 states
    let mean_cl = sys.a1_hat() + sys.b1_hat() * g.f_hat();
    let mut members = Vec::with_capacity(ensemble.r());

    for l in 0..ensemble.r() {
        let mut rngs: Vec<ChaCha12Rng> = (0..h_count)
            .map(|h| cfg.noise.stream(l, h))
            .collect();
        let mut states: Vec<Vec<DVector<S>>> = Vec::with_capacity(h_count);
        let mut inputs: Vec<Vec<DVector<S>>> = vec![Vec::with_capacity(steps + 1); h_count];
        let mut noises: Vec<Vec<S>> = vec![Vec::with_capacity(steps); h_count];
        for h in 0..h_count {
            let sign = if h % 2 == 0 { s::<S>(1.0) } else { s::<S>(-1.0) };
            states.push(vec![ensemble.state_mean(l) + ensemble.state_dev(l) * sign]);
        }
        let mut exact_mean = ensemble.state_mean(l).clone();
        let mut means: Vec<DVector<S>> = Vec::with_capacity(steps + 1);
        let mut input_means: Vec<DVector<S>> = Vec::with_capacity(steps + 1);

        for k in 0..=steps {
            // population mean at step k
            let mean_k = match cfg.mean_mode {
                MeanMode::Exact => exact_mean.clone(),
                MeanMode::Sample => {
                    let mut acc = DVector::zeros(sys.n);
                    for st in states.iter() {
                        acc += &st[k];
                    }
                    acc / s::<S>(h_count as f64)
                }
            };
            // inputs at step k
            for (h, st) in states.iter().enumerate() {
                let u = if k == 0 && cfg.initial_input == InitialInput::FreeEnsemble {
                    let sign = if h % 2 == 0 { s::<S>(1.0) } else { s::<S>(-1.0) };
                    ensemble.input_mean(l) + ensemble.input_dev(l) * sign
                } else {
                    &g.f * &st[k] + &g.f_bar * &mean_k
                };
                inputs[h].push(u);
            }
            let input_mean_k = {
                let mut acc = DVector::zeros(sys.m);
                for inp in inputs.iter() {
                    acc += &inp[k];
                }
                acc / s::<S>(h_count as f64)
            };
            means.push(mean_k.clone());
            input_means.push(input_mean_k.clone());
            if k == steps {
                break;
            }
            // advance every rollout with its own noise stream
            for h in 0..h_count {
                let w: S = cfg.noise.draw(&mut rngs[h]);
                let x = &states[h][k];
                let u = &inputs[h][k];
                let drift = &sys.a1 * x + &sys.a1_bar * &mean_k + &sys.b1 * u + &sys.b1_bar * &input_mean_k;
                let diffusion =
                    &sys.a2 * x + &sys.a2_bar * &mean_k + &sys.b2 * u + &sys.b2_bar * &input_mean_k;
                let next = drift + diffusion * w;
                if !to_f64(next.norm()).is_finite() || to_f64(next.norm()) > DIVERGENCE_LIMIT {
                    return Err(Error::NonFiniteState {
                        ensemble: l,
                        rollout: h,
                        step: k + 1,
                    });
                }
                noises[h].push(w);
                states[h].push(next);
            }
            exact_mean = &mean_cl * exact_mean;
        }
        members.push(MemberTrajectories {
            states,
            inputs,
            noises,
            means,
            input_means,
        });
    }
    Ok(TrajectoryBatch {
        members,
        n: sys.n,
        m: sys.m,
        config: *cfg,
    })
}

/// Truncated second-moment data: `SM = sum_{k<=M} E[V_k V_k']` and the
/// one-step cross sum `WM = sum_{k<=M} E[V_k V_{k+1}']`, both block
/// diagonal over the mean/deviation split.
#[derive(Debug, Clone)]
pub struct DataMatrices<S: Scalar> {
    pub sm: DMatrix<S>,
    pub wm: DMatrix<S>,
    pub horizon: usize,
    pub rollouts: usize,
    pub members: usize,
}

impl<S: Scalar> DataMatrices<S> {
    pub fn sm_min_eig(&self) -> f64 {
        min_eig(&self.sm)
    }
}

/// Exact moment propagation on the augmented system from the ensemble's
/// initial second moment: returns the per-step moments `E[V_k V_k']`,
/// `k = 0..=M`, and the exact data matrices with `WM = SM * S1'`.
pub fn exact_moments<S: Scalar>(
    sys: &MfSystem<S>,
    g: &GainPair<S>,
    ensemble: &InitialStateEnsemble<S>,
    horizon: usize,
) -> Result<(Vec<DMatrix<S>>, DataMatrices<S>)> {
    if ensemble.n() != sys.n || ensemble.m() != sys.m {
        return Err(Error::DimensionMismatch(
            "ensemble dimensions disagree with the plant".into(),
        ));
    }
    let aug = augmented_ops(sys, g)?;
    let triple = OperatorTriple::new(aug.s1.clone(), aug.s2, aug.s3)?;
    let mut step = ensemble.initial_second_moment();
    let mut per_step = Vec::with_capacity(horizon + 1);
    let mut sm = DMatrix::zeros(step.nrows(), step.ncols());
    for _ in 0..=horizon {
        sm += &step;
        per_step.push(step.clone());
        step = symmetrize(&triple.apply_primal(&step));
    }
    let wm = &sm * aug.s1.transpose();
    Ok((
        per_step,
        DataMatrices {
            sm: symmetrize(&sm),
            wm,
            horizon,
            rollouts: 0,
            members: ensemble.r(),
        },
    ))
}

/// Empirical data matrices from a sampled batch: augmented vectors
/// `[sample mean; sample deviation]`, outer products averaged over
/// rollouts and summed over steps `0..=M` and members. Cross blocks
/// between the mean and deviation halves vanish by construction and are
/// zeroed exactly.
pub fn data_matrices<S: Scalar>(batch: &TrajectoryBatch<S>) -> Result<DataMatrices<S>> {
    let h_count = batch.rollouts();
    if h_count < 2 {
        return Err(Error::InsufficientRollouts(h_count));
    }
    let (n, m) = (batch.n, batch.m);
    let d = n + m;
    let horizon = batch.horizon();
    let inv_h = s::<S>(1.0 / h_count as f64);
    let mut sm_mean = DMatrix::<S>::zeros(d, d);
    let mut sm_dev = DMatrix::<S>::zeros(d, d);
    let mut wm_mean = DMatrix::<S>::zeros(d, d);
    let mut wm_dev = DMatrix::<S>::zeros(d, d);

    let stack = |x: &DVector<S>, u: &DVector<S>| -> DVector<S> {
        let mut v = DVector::zeros(d);
        v.rows_mut(0, n).copy_from(x);
        v.rows_mut(n, m).copy_from(u);
        v
    };

    for member in &batch.members {
        // sample means per step (independent of the means used in the
        // dynamics, so the estimator is the same in both mean modes)
        let sample_mean = |k: usize| -> (DVector<S>, DVector<S>) {
            let mut xm = DVector::zeros(n);
            let mut um = DVector::zeros(m);
            for h in 0..h_count {
                xm += &member.states[h][k];
                um += &member.inputs[h][k];
            }
            (xm * inv_h, um * inv_h)
        };
        let mut cur = sample_mean(0);
        for k in 0..=horizon {
            let next = sample_mean(k + 1);
            let vbar = stack(&cur.0, &cur.1);
            let vbar_next = stack(&next.0, &next.1);
            sm_mean += &vbar * vbar.transpose();
            wm_mean += &vbar * vbar_next.transpose();
            let mut dev_acc = DMatrix::zeros(d, d);
            let mut wdev_acc = DMatrix::zeros(d, d);
            for h in 0..h_count {
                let vt = stack(
                    &(&member.states[h][k] - &cur.0),
                    &(&member.inputs[h][k] - &cur.1),
                );
                let vt_next = stack(
                    &(&member.states[h][k + 1] - &next.0),
                    &(&member.inputs[h][k + 1] - &next.1),
                );
                dev_acc += &vt * vt.transpose();
                wdev_acc += &vt * vt_next.transpose();
            }
            sm_dev += dev_acc * inv_h;
            wm_dev += wdev_acc * inv_h;
            cur = next;
        }
    }
    let sm = symmetrize(&block_diag(&sm_mean, &sm_dev));
    let wm = block_diag(&wm_mean, &wm_dev);
    let data = DataMatrices {
        sm,
        wm,
        horizon,
        rollouts: h_count,
        members: batch.members.len(),
    };
    let me = data.sm_min_eig();
    if me <= 0.0 {
        return Err(Error::RankDeficient(me));
    }
    Ok(data)
}

/// Monte Carlo cost estimate with standard error and a geometric tail
/// bound for the truncation.
#[derive(Debug, Clone, Copy)]
pub struct McCost {
    pub estimate: f64,
    pub std_error: f64,
    /// Upper estimate of the truncated tail `sum_{k > M}` stage costs.
    pub tail_bound: f64,
}

/// Truncated Monte Carlo estimate of the ensemble cost under a stabilizing
/// policy applied from step zero, with the mean propagated exactly.
pub fn mc_cost<S: Scalar>(
    sys: &MfSystem<S>,
    w: &WeightSpec<S>,
    g: &GainPair<S>,
    ensemble: &InitialStateEnsemble<S>,
    horizon: usize,
    rollouts: usize,
    noise: NoiseModel,
) -> Result<McCost> {
    let check = is_stabilizing(sys, g)?;
    if !check.stabilizing {
        return Err(Error::NotStabilizing(check.radius));
    }
    let cfg = RolloutConfig {
        horizon,
        rollouts,
        mean_mode: MeanMode::Exact,
        initial_input: InitialInput::Policy,
        noise,
    };
    let batch = rollout(sys, g, ensemble, &cfg)?;
    let q_bar = &w.q_bar;
    let r_bar = &w.r_bar;
    let mut estimate = 0.0f64;
    let mut var_acc = 0.0f64;
    for member in &batch.members {
        // deterministic mean-channel part of the cost
        let mut mean_part = 0.0f64;
        for k in 0..=horizon {
            let ex = &member.means[k];
            let eu = &member.input_means[k];
            mean_part += to_f64((ex.transpose() * q_bar * ex)[(0, 0)])
                + to_f64((eu.transpose() * r_bar * eu)[(0, 0)]);
        }
        // per-rollout stochastic part
        let mut costs = Vec::with_capacity(rollouts);
        for h in 0..rollouts {
            let mut c = 0.0f64;
            for k in 0..=horizon {
                let x = &member.states[h][k];
                let u = &member.inputs[h][k];
                c += to_f64((x.transpose() * &w.q * x)[(0, 0)])
                    + to_f64((u.transpose() * &w.r * u)[(0, 0)]);
            }
            costs.push(c);
        }
        let mean_c = costs.iter().sum::<f64>() / rollouts as f64;
        let var_c = costs.iter().map(|c| (c - mean_c).powi(2)).sum::<f64>()
            / (rollouts as f64 - 1.0);
        estimate += mean_c + mean_part;
        var_acc += var_c / rollouts as f64;
    }
    // geometric tail bound: stage cost at M decays at the operator radius
    let tail_bound = {
        let cl = closed_loop_2n(sys, g)?;
        let triple = OperatorTriple::new(cl.a1cl, cl.a2cl, cl.a3cl)?;
        let qt = q_tilde(w, g);
        let mut moment = ensemble.initial_state_moment();
        for _ in 0..=horizon {
            moment = symmetrize(&triple.apply_primal(&moment));
        }
        let stage = to_f64((qt * moment).trace()).abs();
        let rho = check.radius;
        stage / (1.0 - rho)
    };
    Ok(McCost {
        estimate,
        std_error: var_acc.sqrt(),
        tail_bound,
    })
}

/// Estimated drift matrices with regression diagnostics.
#[derive(Debug, Clone)]
pub struct DriftEstimate<S: Scalar> {
    pub a1: DMatrix<S>,
    pub a1_bar: DMatrix<S>,
    pub b1: DMatrix<S>,
    pub b1_bar: DMatrix<S>,
    /// Root-mean-square residual of the mean-channel regression.
    pub residual_mean: f64,
    /// Root-mean-square residual of the deviation-channel regression.
    pub residual_dev: f64,
}

/// Least squares on the expectation relations of the trajectories:
/// the sample-mean dynamics estimate `(A1_hat, B1_hat)` and the centered
/// dynamics estimate `(A1, B1)`; the bar matrices are the differences.
///
/// Identifiability comes from the free initial inputs: from step one on,
/// the input deviation is collinear with the state deviation.
pub fn identify_drift<S: Scalar>(batch: &TrajectoryBatch<S>) -> Result<DriftEstimate<S>> {
    let (n, m) = (batch.n, batch.m);
    let d = n + m;
    let h_count = batch.rollouts();
    if h_count < 2 {
        return Err(Error::InsufficientRollouts(h_count));
    }
    let horizon = batch.horizon();
    let inv_h = s::<S>(1.0 / h_count as f64);

    // normal equations G theta = T, accumulated over samples
    let mut g_mean = DMatrix::<S>::zeros(d, d);
    let mut t_mean = DMatrix::<S>::zeros(d, n);
    let mut g_dev = DMatrix::<S>::zeros(d, d);
    let mut t_dev = DMatrix::<S>::zeros(d, n);
    let mut count_mean = 0usize;
    let mut count_dev = 0usize;

    let stack = |x: &DVector<S>, u: &DVector<S>| -> DVector<S> {
        let mut v = DVector::zeros(d);
        v.rows_mut(0, n).copy_from(x);
        v.rows_mut(n, m).copy_from(u);
        v
    };

    for member in &batch.members {
        let sample_mean = |k: usize| -> (DVector<S>, DVector<S>) {
            let mut xm = DVector::zeros(n);
            let mut um = DVector::zeros(m);
            for h in 0..h_count {
                xm += &member.states[h][k];
                um += &member.inputs[h][k];
            }
            (xm * inv_h, um * inv_h)
        };
        let mut cur = sample_mean(0);
        for k in 0..=horizon {
            let next = sample_mean(k + 1);
            let reg = stack(&cur.0, &cur.1);
            g_mean += &reg * reg.transpose();
            t_mean += &reg * next.0.transpose();
            count_mean += 1;
            for h in 0..h_count {
                let regd = stack(
                    &(&member.states[h][k] - &cur.0),
                    &(&member.inputs[h][k] - &cur.1),
                );
                let target = &member.states[h][k + 1] - &next.0;
                g_dev += &regd * regd.transpose();
                t_dev += &regd * target.transpose();
                count_dev += 1;
            }
            cur = next;
        }
    }

    let rank_of = |g: &DMatrix<S>| -> usize {
        let eigs = symmetrize(g).symmetric_eigenvalues();
        let max = to_f64(eigs.amax()).max(f64::MIN_POSITIVE);
        eigs.iter()
            .filter(|&&e| to_f64(e) > 1e-10 * max)
            .count()
    };
    for (g, label) in [(&g_mean, "mean"), (&g_dev, "deviation")] {
        let rank = rank_of(g);
        if rank < d {
            let _ = label;
            return Err(Error::RankDeficientRegressor { rank, need: d });
        }
    }

    let solve = |g: &DMatrix<S>, t: &DMatrix<S>| -> Result<DMatrix<S>> {
        g.clone()
            .lu()
            .solve(t)
            .map(|x| x.transpose()) // n x (n+m): [A, B]
            .ok_or(Error::SingularSystem)
    };
    let hat_ab = solve(&g_mean, &t_mean)?;
    let dev_ab = solve(&g_dev, &t_dev)?;

    let a1 = dev_ab.view((0, 0), (n, n)).clone_owned();
    let b1 = dev_ab.view((0, n), (n, m)).clone_owned();
    let a1_hat = hat_ab.view((0, 0), (n, n)).clone_owned();
    let b1_hat = hat_ab.view((0, n), (n, m)).clone_owned();

    // residuals: second pass over the data
    let mut res_mean = 0.0f64;
    let mut res_dev = 0.0f64;
    for member in &batch.members {
        let sample_mean = |k: usize| -> (DVector<S>, DVector<S>) {
            let mut xm = DVector::zeros(n);
            let mut um = DVector::zeros(m);
            for h in 0..h_count {
                xm += &member.states[h][k];
                um += &member.inputs[h][k];
            }
            (xm * inv_h, um * inv_h)
        };
        let mut cur = sample_mean(0);
        for k in 0..=horizon {
            let next = sample_mean(k + 1);
            let pred = &a1_hat * &cur.0 + &b1_hat * &cur.1;
            res_mean += to_f64((&next.0 - pred).norm_squared());
            for h in 0..h_count {
                let xd = &member.states[h][k] - &cur.0;
                let ud = &member.inputs[h][k] - &cur.1;
                let pred = &a1 * xd + &b1 * ud;
                let target = &member.states[h][k + 1] - &next.0;
                res_dev += to_f64((target - pred).norm_squared());
            }
            cur = next;
        }
    }
    Ok(DriftEstimate {
        a1_bar: &a1_hat - &a1,
        b1_bar: &b1_hat - &b1,
        a1,
        b1,
        residual_mean: (res_mean / count_mean as f64).sqrt(),
        residual_dev: (res_dev / count_dev as f64).sqrt(),
    })
}
