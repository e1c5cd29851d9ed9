#![allow(dead_code)]

//! Shared fixtures: the 3-state/2-input benchmark plant and randomized
//! stabilizable instances.

use mflqr_core::ensemble::InitialStateEnsemble;
use mflqr_core::system::{diag, GainPair, MfSystem, WeightSpec};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn bench_system() -> (MfSystem<f64>, WeightSpec<f64>) {
    let sys = MfSystem::new(
        DMatrix::from_row_slice(3, 3, &[0.2, 0.4, 0.2, 0.0, 0.2, 0.6, 0.6, 0.4, 0.2]),
        DMatrix::from_row_slice(3, 3, &[0.3, 0.4, 0.2, 0.0, 0.2, 0.7, 0.6, 0.5, 0.2]),
        DMatrix::from_row_slice(3, 3, &[0.2, 0.4, 0.6, 0.4, 0.2, 0.6, 0.2, 0.4, 0.2]),
        DMatrix::from_row_slice(3, 3, &[0.3, 0.4, 0.6, 0.4, 0.3, 0.6, 0.2, 0.4, 0.3]),
        DMatrix::from_row_slice(3, 2, &[0.4, 0.2, 0.2, 0.4, 0.3, 0.3]),
        DMatrix::from_row_slice(3, 2, &[0.5, 0.2, 0.2, 0.5, 0.2, 0.3]),
        DMatrix::from_row_slice(3, 2, &[0.2, 0.6, 0.6, 0.4, 0.3, 0.1]),
        DMatrix::from_row_slice(3, 2, &[0.3, 0.5, 0.5, 0.4, 0.3, 0.3]),
    )
    .unwrap();
    let w = WeightSpec::new(
        diag(&[0.0, 1.5, 1.0]),
        diag(&[1.0, 1.0, 0.0]),
        diag(&[1.0, 1.0]),
        diag(&[1.5, 1.0]),
    )
    .unwrap();
    (sys, w)
}

pub fn bench_initial_gains() -> GainPair<f64> {
    GainPair::new(
        DMatrix::from_row_slice(2, 3, &[-0.73, -1.50, -1.30, 0.23, 0.97, -0.26]),
        DMatrix::from_row_slice(2, 3, &[1.21, 1.81, 0.66, -0.18, -0.16, -1.50]),
    )
    .unwrap()
}

/// Reference optimal gains for the benchmark, quoted to two decimals
/// (truncated): `F*` and the total gain `F* + Fb*`.
pub fn bench_reference_f_star() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 3, &[-0.34, -0.32, -0.42, -0.24, -0.29, -0.49])
}

pub fn bench_reference_f_hat_star() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 3, &[-0.32, -0.42, -0.34, -0.31, -0.43, -0.77])
}

pub const BENCH_MEANS: [[f64; 3]; 20] = [
    [9.59, 1.55, 3.15],
    [8.74, 2.85, 2.85],
    [3.71, 1.71, 7.35],
    [6.90, 2.52, 5.17],
    [2.54, 2.49, 6.13],
    [5.04, 1.32, 1.67],
    [1.32, 7.40, 6.21],
    [7.58, 7.55, 0.93],
    [2.55, 2.97, 2.34],
    [1.74, 1.72, 0.72],
    [1.45, 5.21, 0.30],
    [4.90, 0.70, 2.58],
    [5.65, 6.15, 3.05],
    [6.02, 5.13, 7.47],
    [5.31, 6.65, 6.87],
    [3.62, 0.09, 1.45],
    [8.98, 3.18, 9.92],
    [2.85, 3.58, 2.57],
    [7.35, 3.72, 7.35],
    [9.50, 4.54, 4.02],
];

pub const BENCH_DEVIATIONS: [[f64; 3]; 20] = [
    [-5.50, 6.65, 11.47],
    [-3.05, 3.85, -3.65],
    [8.58, 12.14, 7.27],
    [-4.92, 7.72, -3.98],
    [11.51, 4.60, -2.93],
    [8.66, 1.77, -1.64],
    [3.69, 6.37, 0.35],
    [-3.62, -4.21, 0.29],
    [-1.04, 10.41, 6.30],
    [3.57, 3.39, 7.02],
    [8.54, -2.21, 3.30],
    [-0.64, 1.39, 3.37],
    [7.51, 4.67, 7.87],
    [5.09, -1.92, 0.92],
    [1.49, -4.78, 2.09],
    [11.17, 11.02, 11.89],
    [5.00, 11.70, -8.55],
    [5.80, 1.03, 10.92],
    [-3.16, 0.33, 1.54],
    [-6.89, 9.02, 6.52],
];

pub fn bench_ensemble(seed: u64) -> InitialStateEnsemble<f64> {
    let means = BENCH_MEANS
        .iter()
        .map(|r| DVector::from_row_slice(r))
        .collect();
    let devs = BENCH_DEVIATIONS
        .iter()
        .map(|r| DVector::from_row_slice(r))
        .collect();
    InitialStateEnsemble::with_seeded_inputs(means, devs, 2, seed).unwrap()
}

/// Random instance with the zero gain pair stabilizing by construction:
/// all eight matrices are scaled so the open-loop operator radius lands
/// below the requested target.
pub fn random_stabilizable(
    seed: u64,
    n: usize,
    m: usize,
) -> (MfSystem<f64>, WeightSpec<f64>) {
    use mflqr_core::lyapunov::{triple_radius, OperatorTriple};
    use mflqr_core::ops::closed_loop_2n;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut mat = |r: usize, c: usize| -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..=1.0))
    };
    let mut sys = MfSystem::new(
        mat(n, n),
        mat(n, n),
        mat(n, n),
        mat(n, n),
        mat(n, m),
        mat(n, m),
        mat(n, m),
        mat(n, m),
    )
    .unwrap();
    let target = rng.random_range(0.3..=0.85);
    let cl = closed_loop_2n(&sys, &GainPair::zero(n, m)).unwrap();
    let rho = triple_radius(&OperatorTriple::new(cl.a1cl, cl.a2cl, cl.a3cl).unwrap()).unwrap();
    // the operator is quadratic in the matrices
    let scale = (target / rho.max(1e-12)).sqrt();
    for m in [
        &mut sys.a1,
        &mut sys.a1_bar,
        &mut sys.a2,
        &mut sys.a2_bar,
    ] {
        *m *= scale;
    }
    for m in [
        &mut sys.b1,
        &mut sys.b1_bar,
        &mut sys.b2,
        &mut sys.b2_bar,
    ] {
        *m *= scale;
    }

    let psd = |rng: &mut ChaCha12Rng, k: usize, shift: f64| -> DMatrix<f64> {
        let g = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..=1.0));
        &g * g.transpose() + DMatrix::identity(k, k) * shift
    };
    let w = WeightSpec::new(
        psd(&mut rng, n, 0.0),
        psd(&mut rng, n, 0.0),
        psd(&mut rng, m, 0.5),
        psd(&mut rng, m, 0.1),
    )
    .unwrap();
    (sys, w)
}
