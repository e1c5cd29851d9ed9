//! Generalized Lyapunov operators: spectrum, stability test, and direct
//! solvers for both orientations of the generalized Lyapunov equation.
//!
//! A triple `(M1, M2, M3)` of `d x d` matrices defines the map
//! `X -> M1' X M1 + M2' X M2 + M3' X M3` on symmetric matrices and its
//! adjoint `S -> M1 S M1' + M2 S M2' + M3 S M3'`. Stability of the
//! closed-loop moment dynamics is the spectral radius of this map being
//! below one, and both fixed-point equations
//!
//! ```text
//! X = M1' X M1 + M2' X M2 + M3' X M3 + Q      (dual form, value matrices)
//! S = M1 S M1' + M2 S M2' + M3 S M3' + N      (primal form, moment matrices)
//! ```
//!
//! are solved exactly by LU on the `d^2`-dimensional vectorization.

use crate::error::{Error, Result};
use crate::ops::closed_loop_2n;
use crate::scalar::{to_f64, Scalar};
use crate::system::{symmetrize, GainPair, MfSystem};
use nalgebra::{ComplexField, DMatrix, DVector};

/// Margin below one used by the stability predicate: a spectral radius in
/// `[1 - MARGIN_TOL, 1)` is treated as not stabilizing.
pub const MARGIN_TOL: f64 = 1e-9;

/// Coefficient matrices of a generalized Lyapunov map.
#[derive(Debug, Clone)]
pub struct OperatorTriple<S: Scalar> {
    pub m1: DMatrix<S>,
    pub m2: DMatrix<S>,
    pub m3: DMatrix<S>,
}

impl<S: Scalar> OperatorTriple<S> {
    pub fn new(m1: DMatrix<S>, m2: DMatrix<S>, m3: DMatrix<S>) -> Result<Self> {
        let d = m1.nrows();
        for (name, m) in [("M1", &m1), ("M2", &m2), ("M3", &m3)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{name}: expected {d}x{d}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self { m1, m2, m3 })
    }

    pub fn dim(&self) -> usize {
        self.m1.nrows()
    }

    /// Adjoint application `M1 S M1' + M2 S M2' + M3 S M3'` (moment push-forward).
    pub fn apply_primal(&self, x: &DMatrix<S>) -> DMatrix<S> {
        &self.m1 * x * self.m1.transpose()
            + &self.m2 * x * self.m2.transpose()
            + &self.m3 * x * self.m3.transpose()
    }

    /// Application `M1' X M1 + M2' X M2 + M3' X M3` (value pull-back).
    pub fn apply_dual(&self, x: &DMatrix<S>) -> DMatrix<S> {
        self.m1.transpose() * x * &self.m1
            + self.m2.transpose() * x * &self.m2
            + self.m3.transpose() * x * &self.m3
    }

    /// Matrix of the dual map on column-stacked `X`:
    /// `vec(M' X M) = (M' (x) M') vec(X)`, summed over the three terms.
    /// Its eigenvalues are the operator spectrum.
    pub fn operator_matrix(&self) -> DMatrix<S> {
        let d = self.dim();
        let mut t = DMatrix::zeros(d * d, d * d);
        for m in [&self.m1, &self.m2, &self.m3] {
            let mt = m.transpose();
            t += mt.kronecker(&mt);
        }
        t
    }
}

/// Largest eigenvalue modulus of a (generally nonsymmetric) matrix.
pub fn spectral_radius<S: Scalar>(t: &DMatrix<S>) -> Result<f64> {
    if t.nrows() != t.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "spectral radius needs a square matrix, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    if t.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let eps = <S as approx::AbsDiffEq>::default_epsilon();
    let schur = t
        .clone()
        .try_schur(eps, 10_000)
        .ok_or(Error::EigenFailure)?;
    let eigs = schur.complex_eigenvalues();
    Ok(eigs.iter().map(|c| to_f64(c.modulus())).fold(0.0, f64::max))
}

/// Spectral radius of the generalized Lyapunov operator of a triple.
pub fn triple_radius<S: Scalar>(t: &OperatorTriple<S>) -> Result<f64> {
    spectral_radius(&t.operator_matrix())
}

/// Outcome of the stabilization test on the `2n` closed loop.
#[derive(Debug, Clone, Copy)]
pub struct StabilityCheck {
    pub stabilizing: bool,
    pub radius: f64,
}

/// Whether `(F, Fb)` stabilizes the plant in mean square: the closed-loop
/// operator radius must lie below `1 - MARGIN_TOL`.
pub fn is_stabilizing<S: Scalar>(sys: &MfSystem<S>, g: &GainPair<S>) -> Result<StabilityCheck> {
    let cl = closed_loop_2n(sys, g)?;
    let triple = OperatorTriple::new(cl.a1cl, cl.a2cl, cl.a3cl)?;
    let radius = triple_radius(&triple)?;
    Ok(StabilityCheck {
        stabilizing: radius < 1.0 - MARGIN_TOL,
        radius,
    })
}

fn vec_of<S: Scalar>(m: &DMatrix<S>) -> DVector<S> {
    DVector::from_column_slice(m.as_slice())
}

fn unvec<S: Scalar>(v: &DVector<S>, d: usize) -> DMatrix<S> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// Solve the dual-form equation `X = M1'XM1 + M2'XM2 + M3'XM3 + Q` for
/// symmetric `X`. Requires the operator radius below one.
pub fn solve_gle_dual<S: Scalar>(t: &OperatorTriple<S>, q: &DMatrix<S>) -> Result<DMatrix<S>> {
    let d = t.dim();
    if q.nrows() != d || q.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side: expected {d}x{d}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let radius = triple_radius(t)?;
    if radius >= 1.0 {
        return Err(Error::Unstable(radius));
    }
    let top = t.operator_matrix();
    let lhs = DMatrix::identity(d * d, d * d) - top;
    let x = lhs
        .lu()
        .solve(&vec_of(q))
        .ok_or(Error::SingularSystem)?;
    Ok(symmetrize(&unvec(&x, d)))
}

/// Solve the primal-form equation `S = M1 S M1' + M2 S M2' + M3 S M3' + N`
/// for symmetric `S`. Requires the operator radius below one.
pub fn solve_gle_primal<S: Scalar>(t: &OperatorTriple<S>, n: &DMatrix<S>) -> Result<DMatrix<S>> {
    let transposed = OperatorTriple::new(
        t.m1.transpose(),
        t.m2.transpose(),
        t.m3.transpose(),
    )?;
    solve_gle_dual(&transposed, n)
}

/// Dual-form solve specialized to the block pattern of the closed-loop
/// triples: `M1 = diag(U, L1)`, `M2` nonzero only in the lower-right block
/// `L2`, `M3` nonzero only in the lower-left block `L3`, and block-diagonal
/// `Q = diag(Qu, Ql)`. The solution is `diag(Xu, Xl)` with
///
/// ```text
/// Xl = L1' Xl L1 + L2' Xl L2 + Ql
/// Xu = U' Xu U + L3' Xl L3 + Qu
/// ```
///
/// which halves the number of unknowns. Must agree with [`solve_gle_dual`].
pub fn solve_gle_dual_blockdiag<S: Scalar>(
    t: &OperatorTriple<S>,
    q: &DMatrix<S>,
    split: usize,
) -> Result<DMatrix<S>> {
    let d = t.dim();
    if split == 0 || split >= d {
        return Err(Error::DimensionMismatch(format!(
            "invalid block split {split} for dimension {d}"
        )));
    }
    let h = split;
    let k = d - split;
    check_zero_pattern(t, q, h)?;
    let u = t.m1.view((0, 0), (h, h)).clone_owned();
    let l1 = t.m1.view((h, h), (k, k)).clone_owned();
    let l2 = t.m2.view((h, h), (k, k)).clone_owned();
    let l3 = t.m3.view((h, 0), (k, h)).clone_owned();
    let qu = q.view((0, 0), (h, h)).clone_owned();
    let ql = q.view((h, h), (k, k)).clone_owned();

    // lower (deviation) block first
    let lower_triple = OperatorTriple::new(l1, l2, DMatrix::zeros(k, k))?;
    let xl = solve_gle_dual(&lower_triple, &ql)?;
    // upper (mean) block with the coupling term as a constant
    let coupling = l3.transpose() * &xl * &l3;
    let upper_triple =
        OperatorTriple::new(u, DMatrix::zeros(h, h), DMatrix::zeros(h, h))?;
    let xu = solve_gle_dual(&upper_triple, &(qu + coupling))?;

    let mut out = DMatrix::zeros(d, d);
    out.view_mut((0, 0), (h, h)).copy_from(&xu);
    out.view_mut((h, h), (k, k)).copy_from(&xl);
    Ok(out)
}

/// Primal-form solve under the same block pattern: here the upper block is
/// self-contained and feeds the lower block through `L3`.
pub fn solve_gle_primal_blockdiag<S: Scalar>(
    t: &OperatorTriple<S>,
    n: &DMatrix<S>,
    split: usize,
) -> Result<DMatrix<S>> {
    let d = t.dim();
    if split == 0 || split >= d {
        return Err(Error::DimensionMismatch(format!(
            "invalid block split {split} for dimension {d}"
        )));
    }
    let h = split;
    let k = d - split;
    check_zero_pattern(t, n, h)?;
    let u = t.m1.view((0, 0), (h, h)).clone_owned();
    let l1 = t.m1.view((h, h), (k, k)).clone_owned();
    let l2 = t.m2.view((h, h), (k, k)).clone_owned();
    let l3 = t.m3.view((h, 0), (k, h)).clone_owned();
    let nu = n.view((0, 0), (h, h)).clone_owned();
    let nl = n.view((h, h), (k, k)).clone_owned();

    let upper_triple =
        OperatorTriple::new(u, DMatrix::zeros(h, h), DMatrix::zeros(h, h))?;
    let su = solve_gle_primal(&upper_triple, &nu)?;
    let coupling = &l3 * &su * l3.transpose();
    let lower_triple = OperatorTriple::new(l1, l2, DMatrix::zeros(k, k))?;
    let sl = solve_gle_primal(&lower_triple, &(nl + coupling))?;

    let mut out = DMatrix::zeros(d, d);
    out.view_mut((0, 0), (h, h)).copy_from(&su);
    out.view_mut((h, h), (k, k)).copy_from(&sl);
    Ok(out)
}

fn check_zero_pattern<S: Scalar>(
    t: &OperatorTriple<S>,
    rhs: &DMatrix<S>,
    h: usize,
) -> Result<()> {
    let d = t.dim();
    let k = d - h;
    let zero = |m: &DMatrix<S>, r, c, rr, cc| to_f64(m.view((r, c), (rr, cc)).norm()) == 0.0;
    let ok = zero(&t.m1, 0, h, h, k)
        && zero(&t.m1, h, 0, k, h)
        && zero(&t.m2, 0, 0, h, d)
        && zero(&t.m2, h, 0, k, h)
        && zero(&t.m3, 0, 0, h, d)
        && zero(&t.m3, h, h, k, k)
        && zero(rhs, 0, h, h, k)
        && zero(rhs, h, 0, k, h);
    if !ok {
        return Err(Error::DimensionMismatch(
            "operator triple does not match the block-diagonal pattern".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_triple(m1: f64, m2: f64, m3: f64) -> OperatorTriple<f64> {
        OperatorTriple::new(
            DMatrix::from_element(1, 1, m1),
            DMatrix::from_element(1, 1, m2),
            DMatrix::from_element(1, 1, m3),
        )
        .unwrap()
    }

    #[test]
    fn zero_triple_zero_operator() {
        let t = scalar_triple(0.0, 0.0, 0.0);
        assert_eq!(t.operator_matrix(), DMatrix::zeros(1, 1));
        assert_eq!(triple_radius(&t).unwrap(), 0.0);
    }

    #[test]
    fn scalar_square() {
        let t = scalar_triple(0.5, 0.0, 0.0);
        assert_eq!(t.operator_matrix()[(0, 0)], 0.25);
        assert_relative_eq!(triple_radius(&t).unwrap(), 0.25);
    }

    #[test]
    fn geometric_series_dual_and_primal() {
        let t = scalar_triple(0.5, 0.0, 0.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let x = solve_gle_dual(&t, &q).unwrap();
        assert_relative_eq!(x[(0, 0)], 4.0 / 3.0, max_relative = 1e-14);
        let s = solve_gle_primal(&t, &q).unwrap();
        assert_relative_eq!(s[(0, 0)], 4.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_map_returns_rhs() {
        let t = OperatorTriple::new(
            DMatrix::<f64>::zeros(3, 3),
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 3),
        )
        .unwrap();
        let q = DMatrix::from_fn(3, 3, |i, j| ((i + j) as f64).cos());
        let q = symmetrize(&q);
        assert!((solve_gle_dual(&t, &q).unwrap() - &q).norm() < 1e-14);
    }

    #[test]
    fn unstable_triple_rejected() {
        let t = scalar_triple(2.0, 0.0, 0.0);
        assert_relative_eq!(triple_radius(&t).unwrap(), 4.0);
        assert!(matches!(
            solve_gle_dual(&t, &DMatrix::from_element(1, 1, 1.0)),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn uncontrollable_unstable_scalar_not_stabilizing() {
        let mut sys = MfSystem::<f64>::zero(1, 1);
        sys.a1[(0, 0)] = 2.0; // B1 = 0: cannot be stabilized
        let g = GainPair::zero(1, 1);
        let check = is_stabilizing(&sys, &g).unwrap();
        assert!(!check.stabilizing);
        assert_relative_eq!(check.radius, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_system_is_stable() {
        let sys = MfSystem::<f64>::zero(2, 1);
        let g = GainPair::new(
            DMatrix::from_row_slice(1, 2, &[5.0, -3.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        )
        .unwrap();
        let check = is_stabilizing(&sys, &g).unwrap();
        assert!(check.stabilizing);
        assert_eq!(check.radius, 0.0);
    }

    #[test]
    fn dual_solution_matches_truncated_series() {
        // random-ish stable triple
        let m1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4]);
        let m2 = DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, -0.1]);
        let m3 = DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.1, 0.0]);
        let t = OperatorTriple::new(m1, m2, m3).unwrap();
        let q = symmetrize(&DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]));
        let x = solve_gle_dual(&t, &q).unwrap();
        let mut acc = q.clone();
        let mut term = q.clone();
        for _ in 0..500 {
            term = t.apply_dual(&term);
            acc += &term;
        }
        assert!((x - acc).norm() < 1e-10);
    }

    #[test]
    fn blockdiag_solvers_agree_with_full() {
        // build a structured triple out of a small closed loop
        let sys = MfSystem::new(
            DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.2]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.1, 0.1]),
            DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.0, 0.1]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.1, 0.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.5]),
            DMatrix::from_row_slice(2, 1, &[0.1, 0.2]),
            DMatrix::from_row_slice(2, 1, &[0.2, 0.1]),
            DMatrix::from_row_slice(2, 1, &[0.1, 0.1]),
        )
        .unwrap();
        let g = GainPair::new(
            DMatrix::from_row_slice(1, 2, &[-0.1, -0.2]),
            DMatrix::from_row_slice(1, 2, &[0.05, 0.0]),
        )
        .unwrap();
        let cl = closed_loop_2n(&sys, &g).unwrap();
        let t = OperatorTriple::new(cl.a1cl, cl.a2cl, cl.a3cl).unwrap();
        let q = crate::system::block_diag(
            &DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]),
            &DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 3.0]),
        );
        let full = solve_gle_dual(&t, &q).unwrap();
        let block = solve_gle_dual_blockdiag(&t, &q, 2).unwrap();
        assert!((&full - &block).norm() < 1e-11 * (1.0 + full.norm()));

        let sp_full = solve_gle_primal(&t, &q).unwrap();
        let sp_block = solve_gle_primal_blockdiag(&t, &q, 2).unwrap();
        assert!((&sp_full - &sp_block).norm() < 1e-11 * (1.0 + sp_full.norm()));
    }

    #[test]
    fn generic_scalar_smoke_f32() {
        let t = OperatorTriple::<f32>::new(
            DMatrix::from_element(1, 1, 0.5f32),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let x = solve_gle_dual(&t, &DMatrix::from_element(1, 1, 1.0f32)).unwrap();
        assert!((x[(0, 0)] - 4.0 / 3.0).abs() < 1e-5);
    }
}
