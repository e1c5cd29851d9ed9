//! Initial-state ensembles.
//!
//! Each member `l` contributes a mean vector `E[z_l]` and a deviation vector
//! `z_l - E[z_l]`; the member's initial state is a random variable with that
//! mean and rank-one covariance `(z_l - E z_l)(z_l - E z_l)'`. For the
//! augmented problems the ensemble also carries a freely chosen initial
//! input `u_0` per member, split the same way into mean and deviation.

use crate::error::{Error, Result};
use crate::scalar::{s, Scalar};
use crate::system::{block_diag, min_eig, symmetrize};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct InitialStateEnsemble<S: Scalar> {
    state_means: Vec<DVector<S>>,
    state_devs: Vec<DVector<S>>,
    input_means: Vec<DVector<S>>,
    input_devs: Vec<DVector<S>>,
}

impl<S: Scalar> InitialStateEnsemble<S> {
    /// Ensemble with explicitly given initial inputs.
    pub fn new(
        state_means: Vec<DVector<S>>,
        state_devs: Vec<DVector<S>>,
        input_means: Vec<DVector<S>>,
        input_devs: Vec<DVector<S>>,
    ) -> Result<Self> {
        let r = state_means.len();
        if r == 0 {
            return Err(Error::InvalidEnsemble("ensemble is empty".into()));
        }
        if state_devs.len() != r || input_means.len() != r || input_devs.len() != r {
            return Err(Error::InvalidEnsemble(format!(
                "member counts disagree: {} / {} / {} / {}",
                r,
                state_devs.len(),
                input_means.len(),
                input_devs.len()
            )));
        }
        let n = state_means[0].len();
        let m = input_means[0].len();
        for l in 0..r {
            if state_means[l].len() != n || state_devs[l].len() != n {
                return Err(Error::InvalidEnsemble(format!(
                    "state vector of member {l} has wrong dimension"
                )));
            }
            if input_means[l].len() != m || input_devs[l].len() != m {
                return Err(Error::InvalidEnsemble(format!(
                    "input vector of member {l} has wrong dimension"
                )));
            }
        }
        Ok(Self {
            state_means,
            state_devs,
            input_means,
            input_devs,
        })
    }

    /// Ensemble from state parts only; the free initial inputs are drawn
    /// uniformly with the given seed, scaled to the per-coordinate RMS of
    /// the corresponding state parts. Matching the state magnitude keeps
    /// the input channels of the data matrices as well excited as the
    /// state channels, which the data-driven dual solve needs.
    pub fn with_seeded_inputs(
        state_means: Vec<DVector<S>>,
        state_devs: Vec<DVector<S>>,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x75_70_73_69); // "upsi"
        let r = state_means.len();
        let rms = |vs: &[DVector<S>]| -> f64 {
            let mut acc = 0.0;
            let mut count = 0usize;
            for v in vs {
                acc += crate::scalar::to_f64(v.norm_squared());
                count += v.len();
            }
            let out = (acc / count.max(1) as f64).sqrt();
            if out > 0.0 {
                out
            } else {
                1.0
            }
        };
        let scale_mean = rms(&state_means);
        let scale_dev = rms(&state_devs);
        let draw = |rng: &mut ChaCha12Rng, scale: f64| -> DVector<S> {
            DVector::from_iterator(
                m,
                (0..m).map(|_| s::<S>(rng.random_range(-scale..=scale))),
            )
        };
        let input_means = (0..r).map(|_| draw(&mut rng, scale_mean)).collect();
        let input_devs = (0..r).map(|_| draw(&mut rng, scale_dev)).collect();
        Self::new(state_means, state_devs, input_means, input_devs)
    }

    pub fn r(&self) -> usize {
        self.state_means.len()
    }

    pub fn n(&self) -> usize {
        self.state_means[0].len()
    }

    pub fn m(&self) -> usize {
        self.input_means[0].len()
    }

    pub fn state_mean(&self, l: usize) -> &DVector<S> {
        &self.state_means[l]
    }

    pub fn state_dev(&self, l: usize) -> &DVector<S> {
        &self.state_devs[l]
    }

    pub fn input_mean(&self, l: usize) -> &DVector<S> {
        &self.input_means[l]
    }

    pub fn input_dev(&self, l: usize) -> &DVector<S> {
        &self.input_devs[l]
    }

    /// Augmented mean `E[v_l] = [E x; E u]` of member `l`.
    pub fn v_mean(&self, l: usize) -> DVector<S> {
        stack(&self.state_means[l], &self.input_means[l])
    }

    /// Augmented deviation `v_l - E[v_l]` of member `l`.
    pub fn v_dev(&self, l: usize) -> DVector<S> {
        stack(&self.state_devs[l], &self.input_devs[l])
    }

    /// `Z_2 = sum_l (E z_l)(E z_l)'`.
    pub fn z2(&self) -> DMatrix<S> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for v in &self.state_means {
            out += v * v.transpose();
        }
        out
    }

    /// `Z_1 = sum_l E[z_l z_l'] = Z_2 + sum_l (z_l - E z_l)(z_l - E z_l)'`.
    pub fn z1(&self) -> DMatrix<S> {
        let n = self.n();
        let mut dev = DMatrix::zeros(n, n);
        for v in &self.state_devs {
            dev += v * v.transpose();
        }
        self.z2() + dev
    }

    /// Stacked `(2n+2m)` Gram matrix `sum_l [E v; v - E v][E v; v - E v]'`.
    ///
    /// Positive definiteness needs `r >= 2n+2m`; this is the feasibility
    /// certificate for the convex primal problem.
    pub fn aleph(&self) -> DMatrix<S> {
        let d = self.n() + self.m();
        let mut out = DMatrix::zeros(2 * d, 2 * d);
        for l in 0..self.r() {
            let v = stack(&self.v_mean(l), &self.v_dev(l));
            out += &v * v.transpose();
        }
        symmetrize(&out)
    }

    /// Exact initial second moment `sum_l E[V_0 V_0']`, which is block
    /// diagonal: the mean/deviation cross terms vanish in expectation.
    pub fn initial_second_moment(&self) -> DMatrix<S> {
        let d = self.n() + self.m();
        let mut mean = DMatrix::zeros(d, d);
        let mut dev = DMatrix::zeros(d, d);
        for l in 0..self.r() {
            let vm = self.v_mean(l);
            let vd = self.v_dev(l);
            mean += &vm * vm.transpose();
            dev += &vd * vd.transpose();
        }
        block_diag(&mean, &dev)
    }

    /// State-space moment seed `diag(Z_2, Z_1 - Z_2)` on the `2n` system.
    pub fn initial_state_moment(&self) -> DMatrix<S> {
        let z2 = self.z2();
        let dev = self.z1() - &z2;
        block_diag(&z2, &dev)
    }

    /// Check `Z_1 > Z_2 > 0` (the Problem-1 condition on the ensemble).
    pub fn check_z_order(&self) -> Result<(f64, f64)> {
        let z2 = self.z2();
        let gap = self.z1() - &z2;
        let min_z2 = min_eig(&z2);
        let min_gap = min_eig(&gap);
        if min_z2 <= 0.0 {
            return Err(Error::InvalidEnsemble(format!(
                "Z_2 is not positive definite (min eigenvalue {min_z2:.3e}); means must span the state space"
            )));
        }
        if min_gap <= 0.0 {
            return Err(Error::InvalidEnsemble(format!(
                "Z_1 - Z_2 is not positive definite (min eigenvalue {min_gap:.3e}); deviations must span the state space"
            )));
        }
        Ok((min_z2, min_gap))
    }

    /// Check that the stacked Gram matrix is positive definite
    /// (needs `r >= 2n+2m`).
    pub fn check_aleph(&self) -> Result<f64> {
        let d = 2 * (self.n() + self.m());
        if self.r() < d {
            return Err(Error::InvalidEnsemble(format!(
                "need at least {d} members for a positive definite Gram matrix, got {}",
                self.r()
            )));
        }
        let me = min_eig(&self.aleph());
        if me <= 0.0 {
            return Err(Error::InvalidEnsemble(format!(
                "stacked Gram matrix is rank deficient (min eigenvalue {me:.3e})"
            )));
        }
        Ok(me)
    }
}

fn stack<S: Scalar>(a: &DVector<S>, b: &DVector<S>) -> DVector<S> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}
