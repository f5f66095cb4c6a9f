use lqcs::combinations::Combinations;
use lqcs::ric::*;
use lqcs::rng::SplitMix64;
use lqcs::{Error, SenseMatrix};

fn gaussian(n: usize, p: usize, seed: u64) -> SenseMatrix {
    let mut rng = SplitMix64::new(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.normal() * scale).collect()).collect();
    SenseMatrix::from_rows(&rows).unwrap()
}

/// Eigenvalues of the symmetric matrix `[[a, b], [b, c]]`.
fn eig2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mid - rad, mid + rad)
}

#[test]
fn order_two_matches_closed_form_eigenvalues() {
    for seed in 0..5 {
        let a = gaussian(6, 8, seed);
        let m = a.as_dmatrix();
        let mut expected = f64::NEG_INFINITY;
        let mut count = 0;
        for s in Combinations::new(8, 2) {
            let (ci, cj) = (m.column(s[0]), m.column(s[1]));
            let (lo, hi) = eig2(ci.dot(&ci), ci.dot(&cj), cj.dot(&cj));
            expected = expected.max((hi - 1.0).max(1.0 - lo));
            count += 1;
        }
        assert_eq!(count, 28);
        let est = exact_ric(&a, 2).unwrap();
        assert_eq!(est.supports_examined, 28);
        assert!((est.value - expected).abs() <= 1e-10, "{} vs {expected}", est.value);
    }
}

#[test]
fn identity_and_duplicate_columns() {
    for k in 1..=4 {
        assert!(exact_ric(&SenseMatrix::identity(6), k).unwrap().value.abs() < 1e-12);
    }
    let dup = SenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    assert!((exact_ric(&dup, 2).unwrap().value - 1.0).abs() < 1e-12);
    assert!(exact_ric(&dup, 1).unwrap().value.abs() < 1e-12);
}

#[test]
fn constants_grow_with_order() {
    for seed in 0..10 {
        let a = gaussian(8, 12, 100 + seed);
        let profile = ric_profile(&a, 1..=4, RicMethod::Exact { budget: DEFAULT_ENUMERATION_BUDGET }).unwrap();
        for k in 1..4 {
            assert!(profile[&k].value <= profile[&(k + 1)].value + 1e-12);
        }
    }
}

#[test]
fn scaling_moves_the_gram_spectrum() {
    let a = gaussian(5, 7, 3);
    let c = 1.3;
    let scaled = a.scaled(c).unwrap();
    let mut expected = f64::NEG_INFINITY;
    for s in Combinations::new(7, 3) {
        let (lo, hi) = gram_extremes(&a, &s).unwrap();
        expected = expected.max((c * c * hi - 1.0).max(1.0 - c * c * lo));
    }
    assert!((exact_ric(&scaled, 3).unwrap().value - expected).abs() < 1e-10);
}

#[test]
fn sampled_constant_is_a_lower_bound() {
    let a = gaussian(6, 10, 11);
    for k in 1..=3 {
        let exact = exact_ric(&a, k).unwrap();
        let sampled = mc_ric_lower(&a, k, 200, 5).unwrap();
        assert_eq!(sampled.mode, RicMode::LowerBound);
        assert!(sampled.value <= exact.value + 1e-12);
        assert_eq!(sampled, mc_ric_lower(&a, k, 200, 5).unwrap());
    }
}

#[test]
fn enumeration_budget_is_enforced() {
    let a = gaussian(10, 40, 1);
    let err = exact_ric_with_budget(&a, 5, 1000).unwrap_err();
    assert!(matches!(err, Error::Budget(_)));
    assert_eq!(err.exit_code(), 3);
}
