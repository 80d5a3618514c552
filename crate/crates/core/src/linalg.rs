//! Sparse matrices and the solvers used by the stepper and the reconstructions.

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::Serialize;

use crate::error::{Error, Result};

/// Row-compressed sparse matrix built from triplets (duplicates summed).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (r, yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
        out
    }

    /// Squared column norms, the diagonal of AᵀA.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (c, v) in self.indices.iter().zip(&self.data) {
            out[*c] += v * v;
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|r| self.row(r).filter(|(c, _)| *c == r).map(|(_, v)| v).sum())
            .collect()
    }

    /// `AᵀA + ridge·I` by row-wise accumulation over the column structure of A.
    pub fn gram(&self, ridge: f64) -> CsrMatrix {
        // column → (row, value) lists
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ncols];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                cols[c].push((r, v));
            }
        }
        let mut acc = vec![0.0; self.ncols];
        let mut mark = vec![usize::MAX; self.ncols];
        let mut indptr = vec![0; self.ncols + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..self.ncols {
            let mut touched = Vec::new();
            for &(r, vi) in &cols[i] {
                for (j, vj) in self.row(r) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += vi * vj;
                }
            }
            if mark[i] != i {
                mark[i] = i;
                acc[i] = 0.0;
                touched.push(i);
            }
            acc[i] += ridge;
            touched.sort_unstable();
            for j in touched {
                indices.push(j);
                data.push(acc[j]);
            }
            indptr[i + 1] = indices.len();
        }
        CsrMatrix { nrows: self.ncols, ncols: self.ncols, indptr, indices, data }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trip: Vec<Triplet<usize, usize, f64>> = (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub method: String,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for a symmetric positive semidefinite operator.
/// `precond` holds the inverse of a diagonal preconditioner.
pub fn pcg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveStats) {
    let n = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = norm(b);
    let stats = |iterations, rel: f64, method: &str| SolveStats {
        method: method.into(),
        iterations,
        relative_residual: rel,
        converged: rel <= tol,
    };
    if bnorm == 0.0 {
        return (vec![0.0; n], stats(0, 0.0, "pcg"));
    }
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let prec = |r: &[f64]| -> Vec<f64> {
        match precond {
            Some(m) => r.iter().zip(m).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        }
    };
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while rel > tol && it < max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = prec(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = norm(&r) / bnorm;
        it += 1;
    }
    (x, stats(it, rel, "pcg"))
}

/// CG on `(AᵀA + αI) x = Aᵀb` with Jacobi preconditioning.
pub fn cgnr(a: &CsrMatrix, b: &[f64], alpha: f64, tol: f64, max_iter: usize) -> (Vec<f64>, SolveStats) {
    let atb = a.matvec_t(b);
    let diag: Vec<f64> = a.column_sq_norms().iter().map(|d| 1.0 / (d + alpha).max(1e-300)).collect();
    let (x, mut st) = pcg(
        |x| {
            let mut y = a.matvec_t(&a.matvec(x));
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += alpha * xi;
            }
            y
        },
        &atb,
        None,
        Some(&diag),
        tol,
        max_iter,
    );
    st.method = "cgnr".into();
    (x, st)
}

/// Least-squares solution of `A x ≈ b` by sparse QR.
pub fn lstsq_qr(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows < a.ncols {
        return Err(Error::InvalidArgument(format!(
            "least squares needs at least as many rows ({}) as unknowns ({})",
            a.nrows, a.ncols
        )));
    }
    let m = a.to_faer()?;
    let qr = m.sp_qr().map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut rhs = Mat::from_fn(a.nrows, 1, |i, _| b[i]);
    qr.solve_lstsq_in_place(rhs.as_mut());
    let x: Vec<f64> = (0..a.ncols).map(|i| rhs[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("least-squares solution is not finite".into()));
    }
    Ok(x)
}

/// Solves a symmetric positive definite system by sparse Cholesky.
pub fn cholesky_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let m = a.to_faer()?;
    let llt = m.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut rhs = Mat::from_fn(a.nrows, 1, |i, _| b[i]);
    llt.solve_in_place(rhs.as_mut());
    Ok((0..a.nrows).map(|i| rhs[(i, 0)]).collect())
}

/// Least squares through the normal equations `(AᵀA + ridge·I) x = Aᵀb`: one sparse Cholesky
/// factorization followed by iterative refinement against the unfactored operator.
pub fn normal_equations_solve(
    a: &CsrMatrix,
    b: &[f64],
    ridge: f64,
    tol: f64,
    max_refine: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let atb = a.matvec_t(b);
    let bnorm = norm(&atb);
    let mut stats = SolveStats { method: "normal_cholesky".into(), iterations: 0, relative_residual: 0.0, converged: true };
    if bnorm == 0.0 {
        return Ok((vec![0.0; a.ncols], stats));
    }
    let g = a.gram(ridge).to_faer()?;
    let llt = g.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let solve = |r: &[f64]| -> Vec<f64> {
        let mut rhs = Mat::from_fn(r.len(), 1, |i, _| r[i]);
        llt.solve_in_place(rhs.as_mut());
        (0..r.len()).map(|i| rhs[(i, 0)]).collect()
    };
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = a.matvec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let mut out = a.matvec_t(&r);
        for (o, xi) in out.iter_mut().zip(x) {
            *o -= ridge * xi;
        }
        out
    };
    let mut x = solve(&atb);
    let mut r = residual(&x);
    let mut rel = norm(&r) / bnorm;
    while rel > tol && stats.iterations < max_refine {
        let dx = solve(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let rc = residual(&cand);
        let relc = norm(&rc) / bnorm;
        stats.iterations += 1;
        if !(relc < rel) {
            break;
        }
        x = cand;
        r = rc;
        rel = relc;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("normal-equation solution is not finite".into()));
    }
    stats.relative_residual = rel;
    stats.converged = rel <= tol;
    Ok((x, stats))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn gram_matches_dense_product_and_normal_solve_matches_qr() {
        let a = CsrMatrix::from_triplets(
            5,
            3,
            vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0), (2, 0, 3.0), (2, 1, 1.0), (3, 2, 4.0), (4, 0, 0.5), (4, 2, -1.0)],
        );
        let g = a.gram(0.1);
        for i in 0..3 {
            let ei: Vec<f64> = (0..3).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
            let col = a.matvec_t(&a.matvec(&ei));
            let gi = g.matvec(&ei);
            for j in 0..3 {
                let expect = col[j] + if i == j { 0.1 } else { 0.0 };
                assert!((gi[j] - expect).abs() < 1e-14);
            }
        }
        let b = [1.0, 2.0, -1.0, 0.5, 3.0];
        let (x, st) = normal_equations_solve(&a, &b, 0.0, 1e-12, 5).unwrap();
        let xq = lstsq_qr(&a, &b).unwrap();
        assert!(st.converged);
        assert!(x.iter().zip(&xq).all(|(p, q)| (p - q).abs() < 1e-10));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![4.0, 2.0]);
        assert_eq!(a.matvec_t(&[1.0, 0.0]), vec![4.0, 0.0]);
    }

    #[test]
    fn solvers_agree() {
        let n = 50;
        let a = laplace_1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let (x, st) = pcg(|x| a.matvec(x), &b, None, None, 1e-12, 500);
        assert!(st.converged);
        let xc = cholesky_solve(&a, &b).unwrap();
        let xq = lstsq_qr(&a, &b).unwrap();
        let (xn, stn) = cgnr(&a, &b, 0.0, 1e-13, 5000);
        assert!(stn.converged, "{stn:?}");
        for i in 0..n {
            assert!((x[i] - xc[i]).abs() < 1e-8);
            assert!((xq[i] - xc[i]).abs() < 1e-8);
            assert!((xn[i] - xc[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn overdetermined_least_squares() {
        // fit y = 1 + 2x through exact points plus a duplicate row
        let xs = [0.0, 1.0, 2.0, 3.0];
        let mut t = Vec::new();
        for (r, x) in xs.iter().enumerate() {
            t.push((r, 0, 1.0));
            t.push((r, 1, *x));
        }
        let a = CsrMatrix::from_triplets(4, 2, t);
        let b: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        let sol = lstsq_qr(&a, &b).unwrap();
        assert!((sol[0] - 1.0).abs() < 1e-12 && (sol[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplace_1d(5);
        let (x, st) = pcg(|x| a.matvec(x), &[0.0; 5], None, None, 1e-10, 10);
        assert!(x.iter().all(|v| *v == 0.0) && st.converged);
    }
}
