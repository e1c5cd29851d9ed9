//! Primal-dual machinery on the augmented `(2n+2m)` system: the model-based
//! primal-dual iteration, primal/dual objectives, KKT residuals, gain
//! recovery, and the duality gap.
//!
//! Sign convention: the greedy gains are recovered from the dual variable
//! as `F = -(X22)^{-1} (X12)'`. With the Q-function blocks `X12 = M'` and
//! `X22 = Ups` this reproduces the Riccati update `F = -Ups^{-1} M`, and
//! makes the primal-dual iteration coincide with policy iteration exactly.

use crate::error::{Error, Result};
use crate::lyapunov::{
    is_stabilizing, solve_gle_dual_blockdiag, solve_gle_primal_blockdiag, OperatorTriple,
};
use crate::ops::augmented_ops;
use crate::scalar::{to_f64, Scalar};
use crate::system::{min_eig, symmetrize, GainPair, MfSystem, WeightSpec};
use nalgebra::DMatrix;

/// How the primal update derives gains from the dual variable.
pub const GAIN_SIGN_CONVENTION: &str = "F = -(X22)^-1 (X12)'";

/// Block-diagonal primal variable `diag(S_bar, S)` of moment matrices.
#[derive(Debug, Clone)]
pub struct PrimalVar<S: Scalar> {
    pub s_tilde: DMatrix<S>,
    n: usize,
    m: usize,
}

/// Block-diagonal dual variable `diag(X_bar, X)` of value matrices.
#[derive(Debug, Clone)]
pub struct DualVar<S: Scalar> {
    pub x_tilde: DMatrix<S>,
    n: usize,
    m: usize,
}

macro_rules! block_accessors {
    ($ty:ident, $field:ident, $upper:ident, $lower:ident) => {
        impl<S: Scalar> $ty<S> {
            pub fn new(mat: DMatrix<S>, n: usize, m: usize) -> Result<Self> {
                let d = n + m;
                if mat.nrows() != 2 * d || mat.ncols() != 2 * d {
                    return Err(Error::DimensionMismatch(format!(
                        "expected {0}x{0}, got {1}x{2}",
                        2 * d,
                        mat.nrows(),
                        mat.ncols()
                    )));
                }
                Ok(Self {
                    $field: mat,
                    n,
                    m,
                })
            }

            pub fn n(&self) -> usize {
                self.n
            }

            pub fn m(&self) -> usize {
                self.m
            }

            /// Upper `(n+m)` diagonal block (mean channel).
            pub fn $upper(&self) -> DMatrix<S> {
                let d = self.n + self.m;
                self.$field.view((0, 0), (d, d)).clone_owned()
            }

            /// Lower `(n+m)` diagonal block (deviation channel).
            pub fn $lower(&self) -> DMatrix<S> {
                let d = self.n + self.m;
                self.$field.view((d, d), (d, d)).clone_owned()
            }
        }
    };
}

block_accessors!(PrimalVar, s_tilde, s_bar, s_mat);
block_accessors!(DualVar, x_tilde, x_bar, x_mat);

fn sub_blocks<S: Scalar>(
    block: &DMatrix<S>,
    n: usize,
    m: usize,
) -> (DMatrix<S>, DMatrix<S>, DMatrix<S>) {
    let b11 = block.view((0, 0), (n, n)).clone_owned();
    let b12 = block.view((0, n), (n, m)).clone_owned();
    let b22 = block.view((n, n), (m, m)).clone_owned();
    (b11, b12, b22)
}

/// Dual update of the model-based iteration: solve the `(2n+2m)` dual-form
/// equation with weight `diag(Lambda+Lambda_bar, Lambda)` over the
/// augmented closed loop. The block-diagonal structure is exploited; the
/// full-space solve must agree (tested).
pub fn dual_update<S: Scalar>(
    sys: &MfSystem<S>,
    w: &WeightSpec<S>,
    g: &GainPair<S>,
) -> Result<DualVar<S>> {
    let check = is_stabilizing(sys, g)?;
    if !check.stabilizing {
        return Err(Error::NotStabilizing(check.radius));
    }
    let aug = augmented_ops(sys, g)?;
    let triple = OperatorTriple::new(aug.s1, aug.s2, aug.s3)?;
    let x = solve_gle_dual_blockdiag(&triple, &w.lambda_tilde(), sys.n + sys.m)?;
    DualVar::new(symmetrize(&x), sys.n, sys.m)
}

/// Primal update: greedy gains from the dual variable,
/// `F = -(X22)^{-1}(X12)'` and `F + Fb = -(Xbar22)^{-1}(Xbar12)'`.
pub fn primal_update<S: Scalar>(x: &DualVar<S>) -> Result<GainPair<S>> {
    let (n, m) = (x.n(), x.m());
    let (_, x12, x22) = sub_blocks(&x.x_mat(), n, m);
    let (_, xb12, xb22) = sub_blocks(&x.x_bar(), n, m);
    let chol = |mat: DMatrix<S>| mat.cholesky().ok_or(Error::Singular22Block);
    let f = -chol(x22)?.solve(&x12.transpose());
    let f_hat = -chol(xb22)?.solve(&xb12.transpose());
    let f_bar = &f_hat - &f;
    GainPair::new(f, f_bar)
}

/// One primal-dual iterate.
#[derive(Debug, Clone)]
pub struct PdIterate<S: Scalar> {
    pub index: usize,
    pub gains: GainPair<S>,
    pub dual: DualVar<S>,
    pub gain_change: f64,
    pub radius: f64,
}

/// Trace of the model-based primal-dual iteration.
#[derive(Debug, Clone)]
pub struct PdTrace<S: Scalar> {
    pub iterates: Vec<PdIterate<S>>,
    pub final_gains: GainPair<S>,
    pub converged: bool,
    /// Sign convention used by the primal update.
    pub sign_convention: &'static str,
}

impl<S: Scalar> PdTrace<S> {
    pub fn iterations(&self) -> usize {
        self.iterates.len()
    }
}

/// Model-based primal-dual iteration. Iterate-by-iterate identical to
/// policy iteration from the same start.
pub fn run_pd<S: Scalar>(
    sys: &MfSystem<S>,
    w: &WeightSpec<S>,
    g0: &GainPair<S>,
    eps: f64,
    max_iter: usize,
) -> Result<PdTrace<S>> {
    let mut gains = g0.clone();
    let mut iterates = Vec::new();
    for index in 0..max_iter {
        let check = is_stabilizing(sys, &gains)?;
        if !check.stabilizing {
            return Err(Error::NotStabilizing(check.radius));
        }
        let dual = dual_update(sys, w, &gains)?;
        let next = primal_update(&dual)?;
        let gain_change =
            to_f64((&gains.f - &next.f).norm() + (&gains.f_bar - &next.f_bar).norm());
        iterates.push(PdIterate {
            index,
            gains: gains.clone(),
            dual,
            gain_change,
            radius: check.radius,
        });
        gains = next;
        if gain_change <= eps {
            return Ok(PdTrace {
                iterates,
                final_gains: gains,
                converged: true,
                sign_convention: GAIN_SIGN_CONVENTION,
            });
        }
    }
    Err(Error::MaxIterExceeded(max_iter))
}

/// Injection `F1 Z2 F1' + F2 (Z1 - Z2) F2'` of the static primal problem.
pub fn injection_from_z<S: Scalar>(
    sys: &MfSystem<S>,
    g: &GainPair<S>,
    z1: &DMatrix<S>,
    z2: &DMatrix<S>,
) -> Result<DMatrix<S>> {
    let aug = augmented_ops(sys, g)?;
    let gap = z1 - z2;
    Ok(symmetrize(
        &(&aug.fmap1 * z2 * aug.fmap1.transpose() + &aug.fmap2 * gap * aug.fmap2.transpose()),
    ))
}

/// Solve the primal constraint equation at gains `g` with a given
/// injection: `S = sum_i Ai S Ai' + injection` on the augmented loop.
pub fn solve_primal_at<S: Scalar>(
    sys: &MfSystem<S>,
    g: &GainPair<S>,
    injection: &DMatrix<S>,
) -> Result<PrimalVar<S>> {
    let check = is_stabilizing(sys, g)?;
    if !check.stabilizing {
        return Err(Error::NotStabilizing(check.radius));
    }
    let aug = augmented_ops(sys, g)?;
    let triple = OperatorTriple::new(aug.s1, aug.s2, aug.s3)?;
    let st = solve_gle_primal_blockdiag(&triple, injection, sys.n + sys.m)?;
    PrimalVar::new(symmetrize(&st), sys.n, sys.m)
}

/// Primal objective `Tr(diag(Lambda+Lambda_bar, Lambda) S_tilde)`.
pub fn primal_objective<S: Scalar>(p: &PrimalVar<S>, w: &WeightSpec<S>) -> Result<S> {
    let lt = w.lambda_tilde();
    if lt.nrows() != p.s_tilde.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "primal objective: weight is {}x{}, variable is {}x{}",
            lt.nrows(),
            lt.ncols(),
            p.s_tilde.nrows(),
            p.s_tilde.ncols()
        )));
    }
    Ok((lt * &p.s_tilde).trace())
}

/// Recover gains from a feasible primal variable:
/// `F = (S12)'(S11)^{-1}`, `F + Fb = (Sbar12)'(Sbar11)^{-1}`.
pub fn gains_from_primal<S: Scalar>(p: &PrimalVar<S>) -> Result<GainPair<S>> {
    let (n, m) = (p.n(), p.m());
    let (s11, s12, _) = sub_blocks(&p.s_mat(), n, m);
    let (sb11, sb12, _) = sub_blocks(&p.s_bar(), n, m);
    let solve = |a: DMatrix<S>, b: DMatrix<S>| -> Result<DMatrix<S>> {
        // x A = B' solved as A' x' = B
        a.transpose()
            .lu()
            .solve(&b)
            .map(|x| x.transpose())
            .ok_or(Error::Singular11Block)
    };
    // guard against numerically singular 11-blocks that LU still "solves"
    for (name, blk) in [("S11", &s11), ("Sbar11", &sb11)] {
        let _ = name;
        let eigs = symmetrize(blk).symmetric_eigenvalues();
        let max = to_f64(eigs.amax());
        let min = to_f64(eigs.min());
        if min.abs() <= 1e-12 * (1.0 + max) {
            return Err(Error::Singular11Block);
        }
    }
    let f = solve(s11, s12)?;
    let f_hat = solve(sb11, sb12)?;
    let f_bar = &f_hat - &f;
    GainPair::new(f, f_bar)
}

/// KKT residuals of the convex primal problem at a candidate quintuple.
#[derive(Debug, Clone)]
pub struct KktResiduals<S: Scalar> {
    /// Frobenius residual of the primal constraint equation.
    pub r1: f64,
    /// Minimum eigenvalue of the primal variable (feasibility `S > 0`).
    pub r2: f64,
    /// Frobenius residual of the dual stationarity equation.
    pub r3: f64,
    /// Stationarity in the mean-channel gain.
    pub r4: f64,
    /// Stationarity in the deviation-channel gain.
    pub r5: f64,
    /// The curvature matrix of the deviation-channel stationarity test.
    pub psi: DMatrix<S>,
}

impl<S: Scalar> KktResiduals<S> {
    /// All stationarity/feasibility residuals below `tol` and `S > 0`.
    pub fn satisfied(&self, tol: f64) -> bool {
        self.r1 <= tol && self.r2 > 0.0 && self.r3 <= tol && self.r4 <= tol && self.r5 <= tol
    }
}

/// Evaluate the five KKT conditions at `(S_tilde, F, Fb, X_tilde)` with
/// injection `aleph`.
pub fn kkt_residuals<S: Scalar>(
    sys: &MfSystem<S>,
    w: &WeightSpec<S>,
    p: &PrimalVar<S>,
    g: &GainPair<S>,
    x: &DualVar<S>,
    aleph: &DMatrix<S>,
) -> Result<KktResiduals<S>> {
    let aug = augmented_ops(sys, g)?;
    let triple = OperatorTriple::new(aug.s1, aug.s2, aug.s3)?;
    let d = 2 * (sys.n + sys.m);
    if aleph.nrows() != d || aleph.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "aleph must be {d}x{d}, got {}x{}",
            aleph.nrows(),
            aleph.ncols()
        )));
    }

    let r1 = to_f64((triple.apply_primal(&p.s_tilde) + aleph - &p.s_tilde).norm());
    let r2 = min_eig(&p.s_tilde);
    let r3 = to_f64((triple.apply_dual(&x.x_tilde) + w.lambda_tilde() - &x.x_tilde).norm());

    let (n, m) = (sys.n, sys.m);
    let (_, x12, x22) = sub_blocks(&x.x_mat(), n, m);
    let (_, xb12, xb22) = sub_blocks(&x.x_bar(), n, m);
    let s_bar = p.s_bar();
    let s_mat = p.s_mat();

    // [A B] row concatenations of the plant channels
    let row = |a: &DMatrix<S>, b: &DMatrix<S>| -> DMatrix<S> {
        let mut out = DMatrix::zeros(n, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(a);
        out.view_mut((0, n), (n, m)).copy_from(b);
        out
    };
    let ab1_hat = row(&sys.a1_hat(), &sys.b1_hat());
    let ab1 = row(&sys.a1, &sys.b1);
    let ab2 = row(&sys.a2, &sys.b2);
    let ab2_hat = row(&sys.a2_hat(), &sys.b2_hat());

    let stat_mean = (xb12.transpose() + &xb22 * g.f_hat()) * &ab1_hat * &s_bar * ab1_hat.transpose();
    let psi = &ab1 * &s_mat * ab1.transpose()
        + &ab2 * &s_mat * ab2.transpose()
        + &ab2_hat * &s_bar * ab2_hat.transpose();
    let stat_dev = (x12.transpose() + &x22 * &g.f) * &psi;

    Ok(KktResiduals {
        r1,
        r2,
        r3,
        r4: to_f64(stat_mean.norm()),
        r5: to_f64(stat_dev.norm()),
        psi,
    })
}

/// Primal and dual objective values and their gap.
#[derive(Debug, Clone, Copy)]
pub struct DualityReport<S: Scalar> {
    pub j_primal: S,
    pub j_dual: S,
    pub gap: S,
}

/// Evaluate both sides of the strong-duality claim at a candidate optimum.
///
/// `j_primal` is the trace objective of the primal variable. `j_dual` is
/// the dual function at `x`: the gain-minimized quadratic
/// `Tr[Z2 schur(X_bar)] + Tr[(Z1-Z2) schur(X)]` where `schur` is the Schur
/// complement of the 22 block, i.e. the closed-form infimum over gains of
/// `Tr[Z2 F1'XF1 + (Z1-Z2) F2'XF2]`.
pub fn duality_gap<S: Scalar>(
    w: &WeightSpec<S>,
    z1: &DMatrix<S>,
    z2: &DMatrix<S>,
    p: &PrimalVar<S>,
    x: &DualVar<S>,
) -> Result<DualityReport<S>> {
    let j_primal = primal_objective(p, w)?;
    let j_dual = dual_value(z1, z2, x)?;
    Ok(DualityReport {
        j_primal,
        j_dual,
        gap: j_primal - j_dual,
    })
}

/// Dual function at a feasible dual variable (closed-form infimum over
/// gains). By weak duality this never exceeds the primal objective of any
/// feasible primal point.
pub fn dual_value<S: Scalar>(
    z1: &DMatrix<S>,
    z2: &DMatrix<S>,
    x: &DualVar<S>,
) -> Result<S> {
    let (n, m) = (x.n(), x.m());
    if z1.nrows() != n || z2.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "dual value: Z matrices must be {n}x{n}"
        )));
    }
    let schur = |block: &DMatrix<S>| -> Result<DMatrix<S>> {
        let (b11, b12, b22) = sub_blocks(block, n, m);
        let c = b22.cholesky().ok_or(Error::Singular22Block)?;
        Ok(&b11 - &b12 * c.solve(&b12.transpose()))
    };
    let mean = schur(&x.x_bar())?;
    let dev = schur(&x.x_mat())?;
    Ok((z2 * mean).trace() + ((z1 - z2) * dev).trace())
}
