use lqcs::guarantee::{certify, CertificateStatus};
use lqcs::harness::{gen_gaussian, gen_sparse, MatrixEnsemble, SignalDistribution};
use lqcs::ric::{ric_profile, RicMethod, DEFAULT_ENUMERATION_BUDGET};
use lqcs::solver::*;
use lqcs::{DenseVector, SenseMatrix};

fn planted(n: usize, p: usize, k: usize, seed: u64, ensemble: MatrixEnsemble) -> (SenseMatrix, DenseVector, DenseVector) {
    let a = gen_gaussian(n, p, seed, ensemble).unwrap();
    let x = gen_sparse(p, k, seed + 1, SignalDistribution::Gaussian).unwrap();
    let y = a.mul_vec(&x).unwrap();
    (a, x, y)
}

fn rel_error(x_hat: &DenseVector, x: &DenseVector) -> f64 {
    x_hat.sub(x).unwrap().norm2() / x.norm2()
}

#[test]
fn recovers_pinned_three_sparse_signal() {
    let (a, x, y) = planted(20, 40, 3, 31, MatrixEnsemble::GaussianIID);
    let oracle = l0_oracle(&a, &y, 3, 1e-9).unwrap().expect("x is 3-sparse");
    assert_eq!(oracle.k, 3);
    assert_eq!(oracle.fitting_supports, 1);
    assert_eq!(oracle.support, x.support());

    let out = irls_lq(&a, &y, 0.5, &SolverOptions::default()).unwrap();
    assert!(out.converged);
    assert!(rel_error(&out.x_hat, &x) <= 1e-6, "{}", rel_error(&out.x_hat, &x));
    assert!(out.residual2 <= 1e-9 * y.norm2());
    assert!(rel_error(&out.x_hat, &oracle.x) <= 1e-6);
}

#[test]
fn equality_iterates_stay_feasible_and_repeat() {
    let (a, _, y) = planted(15, 30, 4, 8, MatrixEnsemble::GaussianIID);
    let opts = SolverOptions { seed: 99, ..SolverOptions::default() };
    let first = irls_lq(&a, &y, 0.3, &opts).unwrap();
    assert!(first.residual2 <= 1e-9 * y.norm2());
    assert_eq!(first, irls_lq(&a, &y, 0.3, &opts).unwrap());
}

#[test]
fn objective_trace_does_not_increase() {
    for seed in 0..5 {
        let (a, _, y) = planted(20, 40, 5, 200 + seed, MatrixEnsemble::GaussianIID);
        let out = irls_lq(&a, &y, 0.5, &SolverOptions::default()).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{:?}", out.objective_trace);
        }
    }
}

#[test]
fn tiny_noise_radius_matches_the_equality_solution() {
    let (a, x, y) = planted(20, 40, 3, 31, MatrixEnsemble::GaussianIID);
    let exact = irls_lq(&a, &y, 0.5, &SolverOptions::default()).unwrap();
    let noisy = irls_lq_denoise(&a, &y, 0.5, 1e-6, &SolverOptions::default()).unwrap();
    assert!(noisy.residual2 <= 1e-6 * (1.0 + 1e-6));
    assert!(noisy.lambda.is_some());
    assert!(noisy.x_hat.sub(&exact.x_hat).unwrap().norm2() <= 1e-3 * x.norm2());
}

#[test]
fn certified_instance_survives_the_null_space_probe() {
    let (a, x, y) = planted(24, 32, 1, 2024, MatrixEnsemble::RowOrthonormal);
    let deltas = ric_profile(&a, 2..=4, RicMethod::Exact { budget: DEFAULT_ENUMERATION_BUDGET }).unwrap();
    let cert = certify(&deltas, 1, 0.5, 4).unwrap();
    assert_eq!(cert.status, CertificateStatus::Certified);

    let probe = null_space_probe(&a, &x, 0.5, 2000, 3.0 * x.norm2(), 17).unwrap();
    assert_eq!(probe.null_dim, 8);
    assert_eq!(probe.violations, 0);
    assert!(probe.min_gap > 0.0);

    let out = irls_lq(&a, &y, 0.5, &SolverOptions::default()).unwrap();
    assert!(rel_error(&out.x_hat, &x) <= 1e-6);
}

#[test]
fn oracle_reports_ties() {
    // columns 0 and 1 coincide, so y = a_0 has two sparsest explanations
    let a = SenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let y = DenseVector::new(vec![2.0, 0.0]).unwrap();
    let sol = l0_oracle(&a, &y, 2, 1e-12).unwrap().unwrap();
    assert_eq!(sol.k, 1);
    assert_eq!(sol.fitting_supports, 2);
    assert_eq!(sol.support, vec![0]);
}
