use nalgebra::{DMatrix, DVector};

use super::{SolverOptions, SolverResult};
use crate::dense::{DenseVector, SenseMatrix};
use crate::error::{Error, Result};
use crate::norms::{check_q_unit, power_sum};
use crate::rng::{derive_seed, SplitMix64};

/// Minimizes `||x||_q^q` subject to `Ax = y`.
///
/// Each step is the weighted least-norm solution
/// `x <- W A^T (A W A^T)^{-1} y` with `W = diag((x_i^2 + eps^2)^(1 - q/2))`,
/// computed from a QR factorization of `W^{1/2} A^T` so that the ill
/// conditioning of `A W A^T` near sparse iterates never gets squared. The
/// smoothing `eps` starts at `opts.eps0` and is multiplied by
/// `opts.eps_decay` whenever the inner loop stalls or exhausts its budget,
/// down to `opts.eps_floor`.
/// The run has converged once a step at the floor moves `x` by at most
/// `opts.step_tol`.
pub fn irls_lq(a: &SenseMatrix, y: &DenseVector, q: f64, opts: &SolverOptions) -> Result<SolverResult> {
    check_inputs(a, y, q, opts)?;
    check_full_row_rank(a)?;
    run(a, y, q, 0.0, opts)
}

/// Minimizes `||x||_q^q` subject to `||Ax - y||_2 <= eta`.
///
/// Solves the penalized problems `lambda ||x||_q^q + 0.5 ||Ax - y||^2` by
/// reweighting (`x <- W A^T (A W A^T + lambda q I)^{-1} y`) and bisects
/// `lambda` on a log scale until the residual lands in `[0.99 eta, eta]`.
/// If the residual path jumps over that window the largest `lambda` whose
/// solution is feasible and converged is kept. When `eta >= ||y||_2` the zero
/// vector is returned with `degenerate` set.
pub fn irls_lq_denoise(
    a: &SenseMatrix,
    y: &DenseVector,
    q: f64,
    eta: f64,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    check_inputs(a, y, q, opts)?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!("eta must be positive, got {eta}")));
    }
    let y_norm = y.norm2();
    if eta >= y_norm {
        let zero = DenseVector::zeros(a.cols());
        let mut out = summarize(a, y, q, zero, 0, opts.eps0, true, vec![0.0])?;
        out.degenerate = true;
        out.lambda = None;
        return Ok(out);
    }
    check_full_row_rank(a)?;

    let feasible = |r: &SolverResult| r.residual2 <= eta * (1.0 + 1e-6);
    let in_window = |r: &SolverResult| r.converged && feasible(r) && r.residual2 >= 0.99 * eta;

    let corr = a.transpose_mul_vec(y)?.norm_inf();
    let mut hi = corr.max(f64::MIN_POSITIVE);
    let mut hi_result = run(a, y, q, hi * q, opts)?;
    let mut grow = 0;
    while hi_result.residual2 < eta && grow < 20 {
        if in_window(&hi_result) {
            return Ok(with_lambda(hi_result, hi));
        }
        hi *= 10.0;
        hi_result = run(a, y, q, hi * q, opts)?;
        grow += 1;
    }

    let mut lo = hi * 1e-12;
    let mut best = run(a, y, q, lo * q, opts)?;
    if !feasible(&best) {
        // tiny penalties should reproduce the equality solution; fall back to it
        lo = 0.0;
        best = run(a, y, q, 0.0, opts)?;
        if !feasible(&best) {
            return Err(Error::numerical(format!(
                "noisy solver could not meet the residual bound {eta}"
            )));
        }
    }
    let mut best_lambda = lo;
    if in_window(&best) {
        return Ok(with_lambda(best, best_lambda));
    }
    for _ in 0..60 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi * 1e-12 };
        let r = run(a, y, q, mid * q, opts)?;
        if feasible(&r) {
            lo = mid;
            let done = in_window(&r);
            // near a jump of the residual path the iteration slows down
            // without bound, so a converged smaller lambda is preferred
            if r.converged || !best.converged {
                best = r;
                best_lambda = mid;
            }
            if done {
                break;
            }
        } else {
            hi = mid;
        }
        if lo > 0.0 && hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    Ok(with_lambda(best, best_lambda))
}

fn with_lambda(mut r: SolverResult, lambda: f64) -> SolverResult {
    r.lambda = Some(lambda);
    r
}

fn check_inputs(a: &SenseMatrix, y: &DenseVector, q: f64, opts: &SolverOptions) -> Result<()> {
    check_q_unit(q)?;
    opts.validate()?;
    if y.len() != a.rows() {
        return Err(Error::domain(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            a.rows()
        )));
    }
    Ok(())
}

fn check_full_row_rank(a: &SenseMatrix) -> Result<()> {
    let (n, p) = (a.rows(), a.cols());
    if n > p {
        return Err(Error::numerical(format!(
            "a {n}x{p} matrix cannot have full row rank"
        )));
    }
    let sv = a.as_dmatrix().singular_values();
    let top = sv.max();
    let bottom = sv.min();
    if !(bottom > top * 1e-12 * p as f64) {
        return Err(Error::numerical(format!(
            "measurement matrix is rank deficient (singular values {bottom:e} .. {top:e})"
        )));
    }
    Ok(())
}

/// `W^{1/2} z` with `z` the least-norm solution of
/// `min ||B^T z - y||^2 + mu ||z||^2`, where `B = W^{1/2} A^T`.
fn weighted_step(at: &DMatrix<f64>, sqrt_w: &[f64], y: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
    let (p, n) = at.shape();
    let extra = if mu > 0.0 { n } else { 0 };
    let mut stacked = DMatrix::zeros(p + extra, n);
    for i in 0..p {
        for j in 0..n {
            stacked[(i, j)] = sqrt_w[i] * at[(i, j)];
        }
    }
    let root_mu = mu.sqrt();
    for j in 0..extra {
        stacked[(p + j, j)] = root_mu;
    }
    let qr = stacked.qr();
    let r = qr.r();
    let c = r
        .tr_solve_upper_triangular(y)
        .ok_or_else(|| Error::numerical("singular weighted system"))?;
    let z = qr.q().rows(0, p) * c;
    Ok(DVector::from_fn(p, |i, _| sqrt_w[i] * z[i]))
}

fn run(a: &SenseMatrix, y: &DenseVector, q: f64, mu: f64, opts: &SolverOptions) -> Result<SolverResult> {
    let at = a.as_dmatrix().transpose();
    let p = a.cols();
    let yv = y.as_dvector();
    let exponent = 0.5 * (1.0 - q / 2.0);
    let mut jitter = SplitMix64::new(derive_seed(opts.seed, &[0x1e15]));

    let mut x = weighted_step(&at, &vec![1.0; p], yv, mu)?;
    let mut trace = vec![power_sum(x.as_slice(), q)];
    let mut eps = opts.eps0.max(opts.eps_floor);
    let mut iterations = 0;
    let mut converged = false;
    let mut first = true;

    for _ in 0..opts.max_outer {
        let at_floor = eps <= opts.eps_floor;
        let stall = if at_floor {
            opts.step_tol
        } else {
            opts.step_tol.max(opts.stall_ratio * eps)
        };
        let mut last_step = f64::INFINITY;
        for _ in 0..opts.max_inner {
            let mut sqrt_w: Vec<f64> = x.iter().map(|xi| (xi * xi + eps * eps).powf(exponent)).collect();
            if first {
                for w in &mut sqrt_w {
                    *w *= 1.0 + opts.weight_jitter * (2.0 * jitter.uniform() - 1.0);
                }
                first = false;
            }
            let next = weighted_step(&at, &sqrt_w, yv, mu)?;
            last_step = (&next - &x).norm();
            x = next;
            iterations += 1;
            if last_step <= stall {
                break;
            }
        }
        if at_floor && last_step <= opts.step_tol {
            converged = true;
            break;
        }
        if !at_floor {
            eps = (eps * opts.eps_decay).max(opts.eps_floor);
            trace.push(power_sum(x.as_slice(), q));
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("solver produced non-finite iterate"));
    }
    summarize(a, y, q, DenseVector::from_dvector(x), iterations, eps, converged, trace)
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    a: &SenseMatrix,
    y: &DenseVector,
    q: f64,
    x_hat: DenseVector,
    iterations: usize,
    eps_final: f64,
    converged: bool,
    objective_trace: Vec<f64>,
) -> Result<SolverResult> {
    let residual = a.mul_vec(&x_hat)?.sub(y)?;
    Ok(SolverResult {
        objective: power_sum(x_hat.as_slice(), q),
        residual2: residual.norm2(),
        correlation_residual: a.transpose_mul_vec(&residual)?.norm_inf(),
        x_hat,
        iterations,
        eps_final,
        converged,
        objective_trace,
        lambda: None,
        degenerate: false,
    })
}
