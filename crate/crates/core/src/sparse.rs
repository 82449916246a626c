//! Complex CSR matrices, the sparse LU wrapper and restarted GMRES.

use std::io::Write;

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::field::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Row-compressed sparse matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<C64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), nrows + 1);
        debug_assert_eq!(indices.len(), values.len());
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Duplicates are summed in (row, col, insertion) order, so the result
    /// does not depend on how the triplets were produced.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self::from_raw(nrows, ncols, indptr, indices, values)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(p) => self.values[span.start + p],
            Err(_) => ZERO,
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = self.transpose();
        t.values.iter_mut().for_each(|v| *v = v.conj());
        t
    }

    /// `self + alpha * other`, on the union of both patterns.
    pub fn add_scaled(&self, alpha: C64, other: &CsrMatrix) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                got: other.nrows,
            });
        }
        let mut t: Vec<_> = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect();
        t.extend((0..other.nrows).flat_map(|i| other.row(i).map(move |(j, v)| (i, j, alpha * v))));
        Ok(Self::from_triplets(self.nrows, self.ncols, t))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entrywise max |self - other|.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> Result<f64> {
        Ok(self.add_scaled(C64::new(-1.0, 0.0), other)?.max_abs())
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let mut d = nalgebra::DMatrix::from_element(self.nrows, self.ncols, ZERO);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Coordinate text export: one `row col re im` line per stored entry.
    pub fn write_coordinate(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {:.17e} {:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, C64>> {
        let triplets: Vec<_> = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::InvalidArgument(format!("sparse conversion failed: {e:?}")))
    }
}

/// Sparse LU factorization (fill-reducing column ordering, partial pivoting).
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, C64>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch {
                expected: a.nrows,
                got: a.ncols,
            });
        }
        let lu = a.to_faer()?.sp_lu().map_err(|e| Error::SingularSystem {
            k: f64::NAN,
            eps: f64::NAN,
            detail: format!("{e:?}"),
        })?;
        Ok(Self { n: a.nrows, lu })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::<C64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Outcome of a linear solve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveStats {
    pub relative_residual: f64,
    pub refinement_steps: usize,
    pub gmres_iterations: usize,
}

/// Solve `a x = b` with a factorization of `a` (or of a nearby matrix),
/// polishing by iterative refinement and then by preconditioned GMRES until
/// the relative residual is below `tol`.
pub fn solve_preconditioned(
    a: &CsrMatrix,
    lu: &SparseLu,
    b: &[C64],
    tol: f64,
) -> Result<(Vec<C64>, SolveStats)> {
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        let stats = SolveStats {
            relative_residual: 0.0,
            refinement_steps: 0,
            gmres_iterations: 0,
        };
        return Ok((vec![ZERO; b.len()], stats));
    }
    let residual = |x: &[C64]| -> Vec<C64> {
        let ax = a.mul_vec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let mut x = lu.solve(b);
    let mut r = residual(&x);
    let mut rel = norm2(&r) / bnorm;
    let mut steps = 0;
    while rel > tol && steps < 3 {
        let dx = lu.solve(&r);
        let trial: Vec<C64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let tr = residual(&trial);
        let trel = norm2(&tr) / bnorm;
        steps += 1;
        if trel >= rel * 0.5 {
            break;
        }
        x = trial;
        r = tr;
        rel = trel;
    }
    let mut its = 0;
    if rel > tol {
        let (xg, it, res) = gmres(|v| a.mul_vec(v), |v| lu.solve(v), b, &x, tol, 60, 600)?;
        x = xg;
        rel = res;
        its = it;
    }
    Ok((
        x,
        SolveStats {
            relative_residual: rel,
            refinement_steps: steps,
            gmres_iterations: its,
        },
    ))
}

/// Right-preconditioned restarted GMRES. Returns the solution, the number
/// of inner iterations and the final true relative residual.
pub fn gmres(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    precond: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    x0: &[C64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Result<(Vec<C64>, usize, f64)> {
    let n = b.len();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = x0.to_vec();
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta / bnorm <= tol {
            return Ok((x, total, beta / bnorm));
        }
        if total >= max_iterations {
            return Err(Error::NoConvergence {
                method: "gmres",
                iterations: total,
                residual: beta / bnorm,
            });
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<C64>> = Vec::new();
        let mut h: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<C64> = Vec::new();
        let mut sn: Vec<C64> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut m = 0;
        while m < restart && total < max_iterations {
            let zm = precond(&v[m]);
            let mut w = apply(&zm);
            z.push(zm);
            let mut col = vec![ZERO; m + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dotc(vi, &w);
                col[i] = hij;
                w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let wn = norm2(&w);
            col[m + 1] = C64::new(wn, 0.0);
            for i in 0..m {
                let t = cs[i].conj() * col[i] + sn[i].conj() * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = (col[m].norm_sqr() + col[m + 1].norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (C64::new(1.0, 0.0), ZERO)
            } else {
                (col[m] / denom, col[m + 1] / denom)
            };
            col[m] = c.conj() * col[m] + s.conj() * col[m + 1];
            col[m + 1] = ZERO;
            g.push(-s * g[m]);
            g[m] = c.conj() * g[m];
            cs.push(c);
            sn.push(s);
            h.push(col);
            total += 1;
            m += 1;
            if wn == 0.0 || g[m].norm() / bnorm <= tol * 0.5 {
                break;
            }
            v.push(w.iter().map(|wk| wk / wn).collect());
        }
        let mut y = vec![ZERO; m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for j in i + 1..m {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (yj, zj) in y.iter().zip(&z) {
            x.iter_mut().zip(zj).for_each(|(xk, zk)| *xk += yj * zk);
        }
        debug_assert_eq!(x.len(), n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: C64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(2.0, 0.0) + shift));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.0)));
                t.push((i + 1, i, C64::new(-1.0, 0.0)));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn triplets_are_summed() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(1, 0, C64::new(1.0, 0.0)), (0, 1, C64::new(2.0, 0.0)), (1, 0, C64::new(0.5, 1.0))],
        );
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 0), C64::new(1.5, 1.0));
        assert_eq!(a.get(0, 0), ZERO);
        assert_eq!(a.transpose().get(0, 1), C64::new(1.5, 1.0));
    }

    #[test]
    fn lu_and_gmres_agree() {
        let a = laplacian_1d(200, C64::new(-0.01, 0.05));
        let b: Vec<C64> = (0..200).map(|i| C64::new((i % 7) as f64, 1.0)).collect();
        let lu = SparseLu::factor(&a).unwrap();
        let (x, stats) = solve_preconditioned(&a, &lu, &b, 1e-12).unwrap();
        assert!(stats.relative_residual < 1e-12);
        // A nearby factorization as a preconditioner.
        let near = SparseLu::factor(&laplacian_1d(200, C64::new(-0.01, 0.2))).unwrap();
        let (y, stats) = solve_preconditioned(&a, &near, &b, 1e-12).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        let diff: Vec<C64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
        assert!(norm2(&diff) < 1e-9 * norm2(&x));
        let (z, _, res) = gmres(|v| a.mul_vec(v), |v| v.to_vec(), &b, &vec![ZERO; 200], 1e-10, 250, 2000).unwrap();
        assert!(res <= 1e-10);
        let diff: Vec<C64> = x.iter().zip(&z).map(|(p, q)| p - q).collect();
        assert!(norm2(&diff) < 1e-6 * norm2(&x));
    }

    #[test]
    fn coordinate_export() {
        let a = laplacian_1d(3, ZERO);
        let mut out = Vec::new();
        a.write_coordinate(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + a.nnz());
        assert!(text.lines().nth(1).unwrap().starts_with("0 0 2.0"));
    }
}
