//! System, weight, and gain types for the mean-field stochastic plant
//!
//! The plant is
//! `x_{k+1} = (A1 x + A1b E[x] + B1 u + B1b E[u]) + (A2 x + A2b E[x] + B2 u + B2b E[u]) w_k`
//! with scalar zero-mean unit-variance noise `w_k`, under the feedback law
//! `u_k = F x_k + Fb E[x_k]`.

use crate::error::{Error, Result};
use crate::scalar::{s, to_f64, Scalar};
use nalgebra::{DMatrix, DVector};

/// Eigenvalues above this (negative) floor count as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

fn check_dims<S: Scalar>(name: &str, m: &DMatrix<S>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "{name}: expected {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::DimensionMismatch(format!("{name}: non-finite entry")));
    }
    Ok(())
}

/// The eight plant matrices. Hats are always recomputed, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MfSystem<S: Scalar> {
    pub n: usize,
    pub m: usize,
    pub a1: DMatrix<S>,
    pub a1_bar: DMatrix<S>,
    pub a2: DMatrix<S>,
    pub a2_bar: DMatrix<S>,
    pub b1: DMatrix<S>,
    pub b1_bar: DMatrix<S>,
    pub b2: DMatrix<S>,
    pub b2_bar: DMatrix<S>,
}

impl<S: Scalar> MfSystem<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a1: DMatrix<S>,
        a1_bar: DMatrix<S>,
        a2: DMatrix<S>,
        a2_bar: DMatrix<S>,
        b1: DMatrix<S>,
        b1_bar: DMatrix<S>,
        b2: DMatrix<S>,
        b2_bar: DMatrix<S>,
    ) -> Result<Self> {
        let n = a1.nrows();
        let m = b1.ncols();
        if n == 0 || m == 0 {
            return Err(Error::DimensionMismatch("n and m must be positive".into()));
        }
        check_dims("A1", &a1, n, n)?;
        check_dims("A1_bar", &a1_bar, n, n)?;
        check_dims("A2", &a2, n, n)?;
        check_dims("A2_bar", &a2_bar, n, n)?;
        check_dims("B1", &b1, n, m)?;
        check_dims("B1_bar", &b1_bar, n, m)?;
        check_dims("B2", &b2, n, m)?;
        check_dims("B2_bar", &b2_bar, n, m)?;
        Ok(Self {
            n,
            m,
            a1,
            a1_bar,
            a2,
            a2_bar,
            b1,
            b1_bar,
            b2,
            b2_bar,
        })
    }

    /// Plant with every matrix zero (useful as a degenerate fixture).
    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            a1: DMatrix::zeros(n, n),
            a1_bar: DMatrix::zeros(n, n),
            a2: DMatrix::zeros(n, n),
            a2_bar: DMatrix::zeros(n, n),
            b1: DMatrix::zeros(n, m),
            b1_bar: DMatrix::zeros(n, m),
            b2: DMatrix::zeros(n, m),
            b2_bar: DMatrix::zeros(n, m),
        }
    }

    pub fn a1_hat(&self) -> DMatrix<S> {
        &self.a1 + &self.a1_bar
    }

    pub fn b1_hat(&self) -> DMatrix<S> {
        &self.b1 + &self.b1_bar
    }

    pub fn a2_hat(&self) -> DMatrix<S> {
        &self.a2 + &self.a2_bar
    }

    pub fn b2_hat(&self) -> DMatrix<S> {
        &self.b2 + &self.b2_bar
    }
}

/// Cost weights `Q, Q_bar, R, R_bar` with the standing condition
/// `Q >= 0`, `Q + Q_bar >= 0`, `R > 0`, `R + R_bar > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec<S: Scalar> {
    pub q: DMatrix<S>,
    pub q_bar: DMatrix<S>,
    pub r: DMatrix<S>,
    pub r_bar: DMatrix<S>,
}

impl<S: Scalar> WeightSpec<S> {
    pub fn new(
        q: DMatrix<S>,
        q_bar: DMatrix<S>,
        r: DMatrix<S>,
        r_bar: DMatrix<S>,
    ) -> Result<Self> {
        let n = q.nrows();
        let m = r.nrows();
        check_dims("Q", &q, n, n)?;
        check_dims("Q_bar", &q_bar, n, n)?;
        check_dims("R", &r, m, m)?;
        check_dims("R_bar", &r_bar, m, m)?;
        Ok(Self { q, q_bar, r, r_bar })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn m(&self) -> usize {
        self.r.nrows()
    }

    pub fn q_hat(&self) -> DMatrix<S> {
        &self.q + &self.q_bar
    }

    pub fn r_hat(&self) -> DMatrix<S> {
        &self.r + &self.r_bar
    }

    /// `Lambda = diag(Q, R)`, the per-step weight on `[x; u]`.
    pub fn lambda(&self) -> DMatrix<S> {
        block_diag(&self.q, &self.r)
    }

    /// `Lambda_bar = diag(Q_bar, R_bar)`, the weight on `[E x; E u]`.
    pub fn lambda_bar(&self) -> DMatrix<S> {
        block_diag(&self.q_bar, &self.r_bar)
    }

    /// `diag(Lambda + Lambda_bar, Lambda)`, the augmented-state weight.
    pub fn lambda_tilde(&self) -> DMatrix<S> {
        block_diag(
            &block_diag(&self.q_hat(), &self.r_hat()),
            &self.lambda(),
        )
    }
}

/// Result of [`validate_weights`]: the minimum eigenvalue of each condition.
#[derive(Debug, Clone, Copy)]
pub struct WeightReport {
    pub min_eig_q: f64,
    pub min_eig_q_hat: f64,
    pub min_eig_r: f64,
    pub min_eig_r_hat: f64,
}

/// Check the weight conditions by eigenvalue: `Q, Q+Q_bar >= 0` and
/// `R, R+R_bar > 0`.
pub fn validate_weights<S: Scalar>(w: &WeightSpec<S>) -> Result<WeightReport> {
    let min_sym_eig = |m: &DMatrix<S>| -> f64 {
        let sym = (m + m.transpose()) * s::<S>(0.5);
        to_f64(sym.symmetric_eigenvalues().min())
    };
    let min_eig_q = min_sym_eig(&w.q);
    let min_eig_q_hat = min_sym_eig(&w.q_hat());
    let min_eig_r = min_sym_eig(&w.r);
    let min_eig_r_hat = min_sym_eig(&w.r_hat());
    if min_eig_q < -PSD_TOL {
        return Err(Error::IndefiniteWeight {
            condition: "Q >= 0",
            eigenvalue: min_eig_q,
        });
    }
    if min_eig_q_hat < -PSD_TOL {
        return Err(Error::IndefiniteWeight {
            condition: "Q + Q_bar >= 0",
            eigenvalue: min_eig_q_hat,
        });
    }
    if min_eig_r <= 0.0 {
        return Err(Error::IndefiniteWeight {
            condition: "R > 0",
            eigenvalue: min_eig_r,
        });
    }
    if min_eig_r_hat <= 0.0 {
        return Err(Error::IndefiniteWeight {
            condition: "R + R_bar > 0",
            eigenvalue: min_eig_r_hat,
        });
    }
    Ok(WeightReport {
        min_eig_q,
        min_eig_q_hat,
        min_eig_r,
        min_eig_r_hat,
    })
}

/// Feedback gain pair of `u_k = F x_k + Fb E[x_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPair<S: Scalar> {
    pub f: DMatrix<S>,
    pub f_bar: DMatrix<S>,
}

impl<S: Scalar> GainPair<S> {
    pub fn new(f: DMatrix<S>, f_bar: DMatrix<S>) -> Result<Self> {
        let m = f.nrows();
        let n = f.ncols();
        check_dims("F", &f, m, n)?;
        check_dims("F_bar", &f_bar, m, n)?;
        Ok(Self { f, f_bar })
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            f: DMatrix::zeros(m, n),
            f_bar: DMatrix::zeros(m, n),
        }
    }

    pub fn f_hat(&self) -> DMatrix<S> {
        &self.f + &self.f_bar
    }
}

/// Stack two square blocks on the diagonal.
pub fn block_diag<S: Scalar>(a: &DMatrix<S>, b: &DMatrix<S>) -> DMatrix<S> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = DMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Symmetrize in place: `(X + X') / 2`. Applied after every solve so that
/// floating-point drift cannot break later eigenvalue checks.
pub fn symmetrize<S: Scalar>(x: &DMatrix<S>) -> DMatrix<S> {
    (x + x.transpose()) * s::<S>(0.5)
}

/// Minimum eigenvalue of the symmetric part, as `f64`.
pub fn min_eig<S: Scalar>(x: &DMatrix<S>) -> f64 {
    to_f64(symmetrize(x).symmetric_eigenvalues().min())
}

/// Diagonal matrix from a slice of `f64` entries.
pub fn diag<S: Scalar>(entries: &[f64]) -> DMatrix<S> {
    DMatrix::from_diagonal(&DVector::from_iterator(
        entries.len(),
        entries.iter().map(|&x| s::<S>(x)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    type W = WeightSpec<f64>;

    #[test]
    fn weight_boundary_q_zero_is_valid() {
        let w = W::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let rep = validate_weights(&w).unwrap();
        assert!(rep.min_eig_q.abs() <= PSD_TOL);
        assert!(rep.min_eig_r > 0.0);
    }

    #[test]
    fn weight_negative_r_rejected() {
        let w = W::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            -DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        match validate_weights(&w) {
            Err(Error::IndefiniteWeight { condition, .. }) => assert_eq!(condition, "R > 0"),
            other => panic!("expected IndefiniteWeight, got {other:?}"),
        }
    }

    #[test]
    fn weight_indefinite_r_hat_rejected() {
        // R = I is fine but R + R_bar has a negative eigenvalue.
        let w = W::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            diag(&[-2.0, 0.0]),
        )
        .unwrap();
        match validate_weights(&w) {
            Err(Error::IndefiniteWeight { condition, .. }) => {
                assert_eq!(condition, "R + R_bar > 0")
            }
            other => panic!("expected IndefiniteWeight, got {other:?}"),
        }
    }

    #[test]
    fn section5_weights_are_valid() {
        let w = W::new(
            diag(&[0.0, 1.5, 1.0]),
            diag(&[1.0, 1.0, 0.0]),
            DMatrix::identity(2, 2),
            diag(&[1.5, 1.0]),
        )
        .unwrap();
        validate_weights(&w).unwrap();
    }

    #[test]
    fn hats_are_sums() {
        let sys = MfSystem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 1),
        )
        .unwrap();
        assert_eq!(
            sys.a1_hat(),
            DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 3.0, 5.0])
        );
        assert_eq!(sys.b1_hat(), DMatrix::from_row_slice(2, 1, &[1.0, 1.0]));
    }

    #[test]
    fn dimension_mismatch_caught() {
        let bad = MfSystem::<f64>::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 3),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 1),
        );
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn lambda_tilde_layout() {
        let w = W::new(
            diag(&[1.0, 2.0]),
            diag(&[3.0, 4.0]),
            diag(&[5.0]),
            diag(&[6.0]),
        )
        .unwrap();
        let lt = w.lambda_tilde();
        assert_eq!(lt.nrows(), 6);
        assert_eq!(lt[(0, 0)], 4.0); // Q + Q_bar
        assert_eq!(lt[(2, 2)], 11.0); // R + R_bar
        assert_eq!(lt[(3, 3)], 1.0); // Q
        assert_eq!(lt[(5, 5)], 5.0); // R
    }
}
