use crate::error::{FemError, Result};
use faer::sparse::{SparseColMat, Triplet};
use faer::linalg::solvers::Solve;
use faer::Mat;

/// Square sparse matrix in compressed-row layout with sorted, merged columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            assert!(i < n && j < n, "entry ({i}, {j}) outside a {n}x{n} matrix");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(pos) => self.values[r.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Deletes row and column `p`, renumbering the remaining indices.
    pub fn without(&self, p: usize) -> CsrMatrix {
        let shift = |j: usize| if j > p { j - 1 } else { j };
        let entries = (0..self.n)
            .filter(|&i| i != p)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .filter(|&(_, j, _)| j != p)
            .map(|(i, j, v)| (shift(i), shift(j), v))
            .collect();
        CsrMatrix::from_triplets(self.n - 1, entries)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Linear solver used for the reduced SPD system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Sparse Cholesky factorisation.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients (relative tolerance 1e-12,
    /// at most `10·n` iterations).
    Pcg,
}

pub(crate) fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

pub fn solve_spd(a: &CsrMatrix, b: &[f64], solver: LinearSolver) -> Result<Vec<f64>> {
    if b.len() != a.n() {
        return Err(FemError::DimensionMismatch {
            expected: a.n(),
            found: b.len(),
        });
    }
    if a.n() == 0 {
        return Ok(Vec::new());
    }
    match solver {
        LinearSolver::Direct => cholesky(a, b),
        LinearSolver::Pcg => pcg(a, b, 1e-12, 10 * a.n()),
    }
}

fn cholesky(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let triplets: Vec<Triplet<usize, usize, f64>> = (0..a.n())
        .flat_map(|i| a.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
        .collect();
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n(), a.n(), &triplets)
        .map_err(|e| FemError::Solver(format!("{e:?}")))?;
    let llt = m
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| FemError::Solver(format!("Cholesky factorisation failed: {e:?}")))?;
    let rhs = Mat::<f64>::from_fn(a.n(), 1, |i, _| b[i]);
    let x = llt.solve(&rhs);
    Ok((0..a.n()).map(|i| x[(i, 0)]).collect())
}

fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(FemError::Solver("non-positive diagonal entry".into()));
    }
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let nb = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = a.matvec(&p);
        let step = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * nb {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::Solver(format!(
        "conjugate gradients did not reach {tol:e} in {max_iter} iterations"
    )))
}
