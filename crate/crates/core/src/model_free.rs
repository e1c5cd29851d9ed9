//! Partially model-free primal-dual learning.
//!
//! The learner knows the diffusion matrices `A2, A2_bar, B2, B2_bar` and
//! the cost weights but not the drift matrices. Each iteration collects
//! fresh seeded rollouts under the current gains, forms the truncated data
//! matrices `S^M`, `W^M`, solves the data-driven stationarity equation
//!
//! ```text
//! W X W' + S (A2' X A2) S + S (A3' X A3) S + S (Lambda_tilde - X) S = 0
//! ```
//!
//! for the block-diagonal symmetric dual variable `X`, and applies the
//! primal gain update. The drift enters only through the data matrix `W`.

use crate::ensemble::InitialStateEnsemble;
use crate::error::{Error, Result};
use crate::primal_dual::{primal_update, DualVar};
use crate::scalar::{s, to_f64, Scalar};
use crate::simulator::{
    data_matrices, exact_moments, rollout, DataMatrices, InitialInput, MeanMode, NoiseModel,
    RolloutConfig,
};
use crate::system::{symmetrize, GainPair, MfSystem, WeightSpec};
use nalgebra::{DMatrix, DVector};

/// Condition-number threshold above which the data-driven solve is
/// reported as ill conditioned.
pub const CONDITION_LIMIT: f64 = 1e14;

/// The part of the plant the learner is allowed to see: dimensions,
/// diffusion matrices, and weights. Drift matrices cannot be represented.
#[derive(Debug, Clone)]
pub struct PartialModel<S: Scalar> {
    pub n: usize,
    pub m: usize,
    pub a2: DMatrix<S>,
    pub a2_bar: DMatrix<S>,
    pub b2: DMatrix<S>,
    pub b2_bar: DMatrix<S>,
    pub weights: WeightSpec<S>,
}

impl<S: Scalar> PartialModel<S> {
    /// Restrict a full plant description to its known part.
    pub fn from_system(sys: &MfSystem<S>, weights: &WeightSpec<S>) -> Self {
        Self {
            n: sys.n,
            m: sys.m,
            a2: sys.a2.clone(),
            a2_bar: sys.a2_bar.clone(),
            b2: sys.b2.clone(),
            b2_bar: sys.b2_bar.clone(),
            weights: weights.clone(),
        }
    }

    /// Augmented noise-channel operators for gains `g`; these involve only
    /// the diffusion matrices and the gains.
    pub fn augmented_noise_ops(&self, g: &GainPair<S>) -> (DMatrix<S>, DMatrix<S>) {
        let (n, m) = (self.n, self.m);
        let d = n + m;
        let cell = |a: &DMatrix<S>, b: &DMatrix<S>, gain: &DMatrix<S>| -> DMatrix<S> {
            let mut out = DMatrix::zeros(d, d);
            out.view_mut((0, 0), (n, n)).copy_from(a);
            out.view_mut((0, n), (n, m)).copy_from(b);
            out.view_mut((n, 0), (m, n)).copy_from(&(gain * a));
            out.view_mut((n, n), (m, m)).copy_from(&(gain * b));
            out
        };
        let mut s2 = DMatrix::zeros(2 * d, 2 * d);
        s2.view_mut((d, d), (d, d))
            .copy_from(&cell(&self.a2, &self.b2, &g.f));
        let mut s3 = DMatrix::zeros(2 * d, 2 * d);
        s3.view_mut((d, 0), (d, d)).copy_from(&cell(
            &(&self.a2 + &self.a2_bar),
            &(&self.b2 + &self.b2_bar),
            &g.f,
        ));
        (s2, s3)
    }
}

/// Diagnostics of one data-driven dual solve.
#[derive(Debug, Clone, Copy)]
pub struct DataDualReport {
    /// Frobenius residual of the data-driven equation at the solution.
    pub residual: f64,
    /// Condition number of the least-squares system.
    pub condition: f64,
}

/// Solve the data-driven stationarity equation for the block-diagonal
/// symmetric dual variable by minimum-norm least squares over the
/// `2 (n+m)(n+m+1)/2` block parameters.
pub fn data_dual_update<S: Scalar>(
    pm: &PartialModel<S>,
    g: &GainPair<S>,
    data: &DataMatrices<S>,
) -> Result<(DualVar<S>, DataDualReport)> {
    let (n, m) = (pm.n, pm.m);
    let d = n + m;
    let dd = 2 * d;
    if data.sm.nrows() != dd {
        return Err(Error::DimensionMismatch(format!(
            "data matrices must be {dd}x{dd}, got {}x{}",
            data.sm.nrows(),
            data.sm.ncols()
        )));
    }
    let sm_min = data.sm_min_eig();
    if sm_min <= 0.0 {
        return Err(Error::SingularData(sm_min));
    }
    let (s2, s3) = pm.augmented_noise_ops(g);
    let lambda_tilde = pm.weights.lambda_tilde();
    let sm = &data.sm;
    let wm = &data.wm;

    // symmetric basis of the two diagonal blocks
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(d * (d + 1));
    for block in 0..2 {
        let off = block * d;
        for i in 0..d {
            for j in i..d {
                basis.push((off + i, off + j));
            }
        }
    }
    let p = basis.len();
    let mut lhs = DMatrix::<S>::zeros(dd * dd, p);
    for (col, &(i, j)) in basis.iter().enumerate() {
        let mut e = DMatrix::<S>::zeros(dd, dd);
        e[(i, j)] = s(1.0);
        e[(j, i)] = s(1.0);
        let image = wm * &e * wm.transpose()
            + sm * (s2.transpose() * &e * &s2) * sm
            + sm * (s3.transpose() * &e * &s3) * sm
            - sm * &e * sm;
        lhs.view_mut((0, col), (dd * dd, 1))
            .copy_from(&DVector::from_column_slice(image.as_slice()));
    }
    let rhs_mat = -(sm * &lambda_tilde * sm);
    let rhs = DVector::from_column_slice(rhs_mat.as_slice());

    let svd = lhs.svd(true, true);
    let smax = to_f64(svd.singular_values.max());
    let smin = to_f64(svd.singular_values.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned(condition));
    }
    let theta = svd
        .solve(&rhs, s::<S>(1e-12 * smax.max(1.0)))
        .map_err(|_| Error::SingularSystem)?;

    let mut x = DMatrix::<S>::zeros(dd, dd);
    for (col, &(i, j)) in basis.iter().enumerate() {
        x[(i, j)] += theta[col];
        if i != j {
            x[(j, i)] += theta[col];
        }
    }
    let x = symmetrize(&x);

    let residual = {
        let image = wm * &x * wm.transpose()
            + sm * (s2.transpose() * &x * &s2) * sm
            + sm * (s3.transpose() * &x * &s3) * sm
            + sm * (&lambda_tilde - &x) * sm;
        to_f64(image.norm())
    };
    Ok((
        DualVar::new(x, n, m)?,
        DataDualReport {
            residual,
            condition,
        },
    ))
}

/// Where the learner's data comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    /// Fresh seeded rollouts each iteration (the real algorithm).
    Sampled,
    /// Noise-free moment recursion (oracle mode for equivalence tests).
    ExactMoments,
}

/// Learner configuration.
#[derive(Debug, Clone, Copy)]
pub struct PdmfConfig {
    pub horizon: usize,
    pub rollouts: usize,
    pub eps: f64,
    pub max_iter: usize,
    pub noise: NoiseModel,
    pub source: DataSource,
}

/// One learning iterate.
#[derive(Debug, Clone)]
pub struct PdmfIterate<S: Scalar> {
    pub index: usize,
    pub gains: GainPair<S>,
    pub dual: DualVar<S>,
    pub gain_change_f: f64,
    pub gain_change_f_bar: f64,
    pub kkt_residual: f64,
    pub sm_min_eig: f64,
    /// Set when the sampled 22-block needed an eigenvalue floor before
    /// inversion.
    pub repaired_22_block: bool,
}

/// Full learning record.
#[derive(Debug, Clone)]
pub struct PdmfTrace<S: Scalar> {
    pub iterates: Vec<PdmfIterate<S>>,
    pub final_gains: GainPair<S>,
    pub converged: bool,
    /// Iteration at which data collection diverged, if any; the trace up
    /// to that point is kept.
    pub diverged_at: Option<usize>,
    pub seed: u64,
}

impl<S: Scalar> PdmfTrace<S> {
    pub fn iterations(&self) -> usize {
        self.iterates.len()
    }
}

/// Run the partially model-free learner against a simulated plant.
///
/// `sys` is the ground truth used only to generate trajectories; the
/// update path sees `PartialModel::from_system(sys, w)` and the data. The
/// initial gains are validated through simulation boundedness, not a
/// spectral test, since the drift is treated as unknown.
pub fn run_pdmf<S: Scalar>(
    sys: &MfSystem<S>,
    w: &WeightSpec<S>,
    ensemble: &InitialStateEnsemble<S>,
    g0: &GainPair<S>,
    cfg: &PdmfConfig,
) -> Result<PdmfTrace<S>> {
    let pm = PartialModel::from_system(sys, w);
    let mut gains = g0.clone();
    let mut iterates: Vec<PdmfIterate<S>> = Vec::new();
    let mut converged = false;

    for index in 0..cfg.max_iter {
        let data = match cfg.source {
            DataSource::Sampled => {
                // fresh seeds each iteration
                let noise = NoiseModel {
                    kind: cfg.noise.kind,
                    seed: cfg
                        .noise
                        .seed
                        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1)),
                };
                let rc = RolloutConfig {
                    horizon: cfg.horizon,
                    rollouts: cfg.rollouts,
                    mean_mode: MeanMode::Sample,
                    initial_input: InitialInput::FreeEnsemble,
                    noise,
                };
                let batch = match rollout(sys, &gains, ensemble, &rc) {
                    Ok(b) => b,
                    Err(Error::NonFiniteState { .. }) => {
                        return Ok(PdmfTrace {
                            iterates,
                            final_gains: gains,
                            converged: false,
                            diverged_at: Some(index),
                            seed: cfg.noise.seed,
                        });
                    }
                    Err(other) => return Err(other),
                };
                data_matrices(&batch)?
            }
            DataSource::ExactMoments => exact_moments(sys, &gains, ensemble, cfg.horizon)?.1,
        };
        let (dual, report) = data_dual_update(&pm, &gains, &data)?;
        let (dual, repaired) = repair_22_blocks(dual)?;
        let next = primal_update(&dual)?;
        let change_f = to_f64((&gains.f - &next.f).norm());
        let change_f_bar = to_f64((&gains.f_bar - &next.f_bar).norm());
        iterates.push(PdmfIterate {
            index,
            gains: gains.clone(),
            dual,
            gain_change_f: change_f,
            gain_change_f_bar: change_f_bar,
            kkt_residual: report.residual,
            sm_min_eig: data.sm_min_eig(),
            repaired_22_block: repaired,
        });
        gains = next;
        if change_f + change_f_bar <= cfg.eps {
            converged = true;
            break;
        }
    }
    Ok(PdmfTrace {
        iterates,
        final_gains: gains,
        converged,
        diverged_at: None,
        seed: cfg.noise.seed,
    })
}

/// Floor the 22-block eigenvalues of a sampled dual variable at `1e-10`
/// so the primal update stays defined under noise; flags the event.
fn repair_22_blocks<S: Scalar>(dual: DualVar<S>) -> Result<(DualVar<S>, bool)> {
    let (n, m) = (dual.n(), dual.m());
    let d = n + m;
    let mut x = dual.x_tilde.clone();
    let mut repaired = false;
    for off in [n, d + n] {
        let block = x.view((off, off), (m, m)).clone_owned();
        let eig = symmetrize(&block).symmetric_eigen();
        if to_f64(eig.eigenvalues.min()) < 1e-10 {
            repaired = true;
            let floored = DVector::from_iterator(
                m,
                eig.eigenvalues
                    .iter()
                    .map(|&l| if to_f64(l) < 1e-10 { s(1e-10) } else { l }),
            );
            let fixed =
                &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
            x.view_mut((off, off), (m, m)).copy_from(&fixed);
        }
    }
    Ok((DualVar::new(x, n, m)?, repaired))
}
