//! Extremal generalized Rayleigh quotients u*Au / u*Gu by Lanczos in the
//! G inner product, with full reorthogonalisation.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::C64;
use crate::sparse::{CsrMatrix, SparseLu};

use super::{Assembler, SesquilinearSystem, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityEstimate {
    pub beta1: f64,
    pub beta2: f64,
    pub iterations: usize,
    /// Largest Ritz residual of the two extremal pairs, relative to beta2.
    pub residual: f64,
}

const SEED: u64 = 0x5eed_1a2c;

fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Extremal eigenvalues of A x = lambda G x for Hermitian A and Hermitian
/// positive definite G.
pub fn lanczos_extremes(a: &CsrMatrix, g: &CsrMatrix, tol: f64, max_steps: usize) -> Result<CoercivityEstimate> {
    let n = a.nrows();
    if g.nrows() != n || a.ncols() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: g.nrows(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty system".into()));
    }
    let glu = SparseLu::factor(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut q: Vec<C64> = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
    let mut gq = g.mul_vec(&q);
    let nrm = dotc(&q, &gq).re.sqrt();
    q.iter_mut().for_each(|v| *v /= nrm);
    gq.iter_mut().for_each(|v| *v /= nrm);

    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut gbasis: Vec<Vec<C64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let steps = max_steps.min(n);
    let mut last = None;
    for j in 0..steps {
        let aq = a.mul_vec(&q);
        let mut w = glu.solve(&aq);
        let aj = dotc(&q, &aq).re;
        alpha.push(aj);
        basis.push(q.clone());
        gbasis.push(gq.clone());
        // Two passes of classical Gram-Schmidt in the G inner product.
        for _ in 0..2 {
            for (qi, gqi) in basis.iter().zip(&gbasis) {
                let c = dotc(gqi, &w);
                w.iter_mut().zip(qi).for_each(|(wk, qk)| *wk -= c * qk);
            }
        }
        let gw = g.mul_vec(&w);
        let bj = dotc(&w, &gw).re.max(0.0).sqrt();
        let m = j + 1;
        let done = bj <= 1e-14 * aj.abs().max(1.0) || m == steps;
        if done || m % 10 == 0 {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imin, imax) = eig.eigenvalues.iter().enumerate().fold((0, 0), |(lo, hi), (i, &v)| {
                (
                    if v < eig.eigenvalues[lo] { i } else { lo },
                    if v > eig.eigenvalues[hi] { i } else { hi },
                )
            });
            let scale = eig.eigenvalues.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
            let res = |i: usize| bj * eig.eigenvectors[(m - 1, i)].abs() / scale;
            let residual = if bj <= 1e-14 * aj.abs().max(1.0) { 0.0 } else { res(imin).max(res(imax)) };
            let est = CoercivityEstimate {
                beta1: eig.eigenvalues[imin],
                beta2: eig.eigenvalues[imax],
                iterations: m,
                residual,
            };
            if residual <= tol || bj <= 1e-14 * aj.abs().max(1.0) || m == n {
                return Ok(est);
            }
            last = Some(est);
        }
        if done {
            break;
        }
        beta.push(bj);
        q = w.iter().map(|v| v / bj).collect();
        gq = gw.iter().map(|v| v / bj).collect();
    }
    let est = last.expect("at least one Ritz check runs");
    Err(Error::NoConvergence {
        method: "lanczos",
        iterations: est.iterations,
        residual: est.residual,
    })
}

/// Coercivity constants of a B_gamma system relative to the H1 Gram matrix.
pub fn coercivity_probe(system: &SesquilinearSystem, h1_gram: &CsrMatrix) -> Result<CoercivityEstimate> {
    if system.meta().kind != SystemKind::Bgamma {
        return Err(Error::InvalidArgument("coercivity probe needs a B_gamma system".into()));
    }
    lanczos_extremes(system.matrix(), h1_gram, 1e-10, 600)
}

/// Dense generalized eigensolve; returns (beta1, beta2).
pub fn dense_coercivity(a: &CsrMatrix, g: &CsrMatrix) -> Result<(f64, f64)> {
    let ad = a.to_dense();
    let gd = g.to_dense();
    let chol = gd
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    let c = &linv * ad * linv.adjoint();
    let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(c).eigenvalues;
    Ok((eig.min(), eig.max()))
}

/// gamma = 1 + sup|q| + sup|sigma|^2 * C_tr, with C_tr the largest
/// eigenvalue of the obstacle trace mass relative to the H1 Gram matrix.
pub fn auto_gamma(asm: &Assembler) -> Result<f64> {
    let sigma = asm.coefficients().sigma_bound();
    let mut gamma = 1.0 + asm.potential_sup();
    if sigma > 0.0 {
        let dofs = asm.bgamma(0.0)?.dofs().clone();
        let trace = asm.obstacle_trace_matrix(&dofs);
        let gram = asm.h1_gram(&dofs);
        let c_tr = lanczos_extremes(&trace, &gram, 1e-8, 600)?.beta2;
        gamma += sigma * sigma * c_tr;
    }
    Ok(gamma)
}
