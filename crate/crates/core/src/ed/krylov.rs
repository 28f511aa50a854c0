//! Lanczos-exponential propagator `exp(−iHτ)v` for real symmetric `H`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::hamiltonian::SectorHamiltonian;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub max_dim: usize,
    /// Accepted a-posteriori error per step, relative to the vector norm.
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { max_dim: 30, tol: 1e-13, max_halvings: 10 }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// One Krylov step; returns the propagated vector and the error estimate.
fn krylov_step(
    h: &SectorHamiltonian,
    v: &[Complex64],
    tau: f64,
    opts: &KrylovOptions,
) -> (Vec<Complex64>, f64) {
    let dim = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 || dim == 0 {
        return (v.to_vec(), 0.0);
    }
    let m_max = opts.max_dim.min(dim);
    let mut q: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);
    let mut w = vec![Complex64::default(); dim];
    let mut coeffs = DVector::from_element(1, Complex64::new(1.0, 0.0));
    let mut err = f64::INFINITY;
    for j in 0..m_max {
        h.apply(&q[j], &mut w);
        let a = dot(&q[j], &w).re;
        for (wi, qi) in w.iter_mut().zip(&q[j]) {
            *wi -= qi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, qi) in w.iter_mut().zip(&q[j - 1]) {
                *wi -= qi * b;
            }
        }
        // one pass of local reorthogonalization against the last two vectors
        for qi in q.iter().rev().take(2) {
            let c = dot(qi, &w);
            for (wk, qk) in w.iter_mut().zip(qi) {
                *wk -= qk * c;
            }
        }
        alpha.push(a);
        let b = norm(&w);
        let k = j + 1;
        let check = k == m_max || b < 1e-14 * beta0.max(1.0) || k % 4 == 0;
        if check {
            coeffs = tridiag_expm_e1(&alpha, &beta, tau);
            err = if b < 1e-14 { 0.0 } else { b * coeffs[k - 1].norm() };
            if err <= opts.tol || k == m_max || b < 1e-14 {
                break;
            }
        }
        beta.push(b);
        q.push(w.iter().map(|x| x / b).collect());
    }
    let mut out = vec![Complex64::default(); dim];
    for (c, qj) in coeffs.iter().zip(&q) {
        let c = c * beta0;
        for (o, x) in out.iter_mut().zip(qj) {
            *o += c * x;
        }
    }
    (out, err)
}

/// `exp(−iTτ) e₁` for the tridiagonal `T` with diagonal `alpha`, off-diagonal `beta`.
fn tridiag_expm_e1(alpha: &[f64], beta: &[f64], tau: f64) -> DVector<Complex64> {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    DVector::from_fn(k, |r, _| {
        (0..k)
            .map(|l| {
                let v0 = eig.eigenvectors[(0, l)];
                let vr = eig.eigenvectors[(r, l)];
                Complex64::from_polar(v0 * vr, -eig.eigenvalues[l] * tau)
            })
            .sum()
    })
}

/// Advances `psi` by `t` with adaptive sub-steps no longer than `max_step`.
///
/// A step whose error estimate exceeds the tolerance is halved, up to
/// `max_halvings` times before giving up.
pub fn evolve_vector(
    h: &SectorHamiltonian,
    psi: &mut Vec<Complex64>,
    t: f64,
    max_step: f64,
    opts: &KrylovOptions,
) -> Result<()> {
    if t == 0.0 || psi.is_empty() {
        return Ok(());
    }
    let scale = norm(psi).max(f64::MIN_POSITIVE);
    let mut done = 0.0;
    let mut step = max_step.min(t);
    let mut halvings = 0;
    while done < t {
        let tau = step.min(t - done);
        let (next, err) = krylov_step(h, psi, tau, opts);
        if err > opts.tol * scale {
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::Numerical(format!(
                    "Krylov propagator did not converge after {} halvings (sector n_up={}, error {err:.2e})",
                    opts.max_halvings, h.n_up
                )));
            }
            step *= 0.5;
            continue;
        }
        *psi = next;
        done += tau;
    }
    Ok(())
}
