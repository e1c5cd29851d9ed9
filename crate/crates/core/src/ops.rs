//! Closed-loop operator matrices.
//!
//! Two coordinate systems are used throughout:
//! - the `2n` system acting on `[E x; x - E x]`, and
//! - the `(2n+2m)` augmented system acting on `[E v; v - E v]` with
//!   `v = [x; u]`.

use crate::error::{Error, Result};
use crate::system::{GainPair, MfSystem, WeightSpec};
use crate::Scalar;
use nalgebra::DMatrix;

/// The three `2n x 2n` matrices of the closed-loop mean/deviation dynamics.
///
/// `a1cl` is block diagonal, `a2cl` lives in the lower-right block, `a3cl`
/// in the lower-left block; all other blocks are exactly zero.
#[derive(Debug, Clone)]
pub struct ClosedLoopOps2n<S: Scalar> {
    pub a1cl: DMatrix<S>,
    pub a2cl: DMatrix<S>,
    pub a3cl: DMatrix<S>,
}

/// Closed-loop matrices of the `2n` system under `u = F x + Fb E[x]`:
/// the mean block is `A1_hat + B1_hat (F+Fb)`, the deviation block
/// `A1 + B1 F`, the noise block `A2 + B2 F`, and the mean-to-deviation
/// noise block `A2_hat + B2_hat (F+Fb)`.
pub fn closed_loop_2n<S: Scalar>(sys: &MfSystem<S>, g: &GainPair<S>) -> Result<ClosedLoopOps2n<S>> {
    check_gain_dims(sys, g)?;
    let n = sys.n;
    let f_hat = g.f_hat();
    let mean = sys.a1_hat() + sys.b1_hat() * &f_hat;
    let dev = &sys.a1 + &sys.b1 * &g.f;
    let dev_noise = &sys.a2 + &sys.b2 * &g.f;
    let mean_noise = sys.a2_hat() + sys.b2_hat() * &f_hat;

    let mut a1cl = DMatrix::zeros(2 * n, 2 * n);
    a1cl.view_mut((0, 0), (n, n)).copy_from(&mean);
    a1cl.view_mut((n, n), (n, n)).copy_from(&dev);
    let mut a2cl = DMatrix::zeros(2 * n, 2 * n);
    a2cl.view_mut((n, n), (n, n)).copy_from(&dev_noise);
    let mut a3cl = DMatrix::zeros(2 * n, 2 * n);
    a3cl.view_mut((n, 0), (n, n)).copy_from(&mean_noise);
    Ok(ClosedLoopOps2n { a1cl, a2cl, a3cl })
}

/// Weight `diag(Q_hat + (F+Fb)' R_hat (F+Fb), Q + F' R F)` of the policy
/// evaluation equation on the `2n` system.
pub fn q_tilde<S: Scalar>(w: &WeightSpec<S>, g: &GainPair<S>) -> DMatrix<S> {
    let n = w.n();
    let f_hat = g.f_hat();
    let mean = w.q_hat() + f_hat.transpose() * w.r_hat() * &f_hat;
    let dev = &w.q + g.f.transpose() * &w.r * &g.f;
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(&mean);
    out.view_mut((n, n), (n, n)).copy_from(&dev);
    out
}

/// Augmented closed-loop matrices on `[E v; v - E v]`, `v = [x; u]`,
/// plus the injection maps from the initial state.
///
/// `s1` is block diagonal with two `(n+m)` blocks; `s2` is nonzero only in
/// the lower-right block, `s3` only in the lower-left block. `fmap1` and
/// `fmap2` are the `(2n+2m) x n` maps with `V_0 = fmap1 E[z] + fmap2 (z - E[z])`.
#[derive(Debug, Clone)]
pub struct AugmentedOps<S: Scalar> {
    pub s1: DMatrix<S>,
    pub s2: DMatrix<S>,
    pub s3: DMatrix<S>,
    pub fmap1: DMatrix<S>,
    pub fmap2: DMatrix<S>,
}

pub fn augmented_ops<S: Scalar>(sys: &MfSystem<S>, g: &GainPair<S>) -> Result<AugmentedOps<S>> {
    check_gain_dims(sys, g)?;
    let n = sys.n;
    let m = sys.m;
    let d = n + m;
    let f_hat = g.f_hat();

    // Each nonzero block is [[A, B], [G A, G B]]: the state rows propagate
    // [x; u], the input rows apply the feedback to the propagated state.
    let cell = |a: &DMatrix<S>, b: &DMatrix<S>, gain: &DMatrix<S>| -> DMatrix<S> {
        let mut out = DMatrix::zeros(d, d);
        out.view_mut((0, 0), (n, n)).copy_from(a);
        out.view_mut((0, n), (n, m)).copy_from(b);
        out.view_mut((n, 0), (m, n)).copy_from(&(gain * a));
        out.view_mut((n, n), (m, m)).copy_from(&(gain * b));
        out
    };

    // The mean block sees the total gain F + Fb; every deviation block sees
    // F alone, because u - E[u] = F (x - E[x]).
    let mean = cell(&sys.a1_hat(), &sys.b1_hat(), &f_hat);
    let dev = cell(&sys.a1, &sys.b1, &g.f);
    let dev_noise = cell(&sys.a2, &sys.b2, &g.f);
    let mean_noise = cell(&sys.a2_hat(), &sys.b2_hat(), &g.f);

    let mut s1 = DMatrix::zeros(2 * d, 2 * d);
    s1.view_mut((0, 0), (d, d)).copy_from(&mean);
    s1.view_mut((d, d), (d, d)).copy_from(&dev);
    let mut s2 = DMatrix::zeros(2 * d, 2 * d);
    s2.view_mut((d, d), (d, d)).copy_from(&dev_noise);
    let mut s3 = DMatrix::zeros(2 * d, 2 * d);
    s3.view_mut((d, 0), (d, d)).copy_from(&mean_noise);

    let mut fmap1 = DMatrix::zeros(2 * d, n);
    fmap1.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    fmap1.view_mut((n, 0), (m, n)).copy_from(&f_hat);
    let mut fmap2 = DMatrix::zeros(2 * d, n);
    fmap2.view_mut((d, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    fmap2.view_mut((d + n, 0), (m, n)).copy_from(&g.f);

    Ok(AugmentedOps {
        s1,
        s2,
        s3,
        fmap1,
        fmap2,
    })
}

fn check_gain_dims<S: Scalar>(sys: &MfSystem<S>, g: &GainPair<S>) -> Result<()> {
    if g.f.nrows() != sys.m || g.f.ncols() != sys.n {
        return Err(Error::DimensionMismatch(format!(
            "gain F: expected {}x{}, got {}x{}",
            sys.m,
            sys.n,
            g.f.nrows(),
            g.f.ncols()
        )));
    }
    Ok(())
}
