//! Discrete Helmholtz decompositions
//! `P₀(T; R²) = ∇_NC CR¹₀(T) ⊕ Curl(P₁(T) ∩ Y)` on triangles and
//! `X₁^rect(T) = ∇_NC V_NC^rot(T) ⊕ Curl V_{Q,1}(T)` on squares.

use super::cr::CrSpace;
use crate::error::{FemError, Result};
use crate::mesh::{SquarePartition, Triangulation};
use nalgebra::{DMatrix, Matrix4, Vector4};

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    /// Dimension of the full space.
    pub dim_total: usize,
    /// Dimension of the nonconforming gradient part.
    pub dim_gradients: usize,
    /// Dimension of the Curl part.
    pub dim_curls: usize,
    /// `dim_total == dim_gradients + dim_curls`.
    pub dims_match: bool,
    /// Largest normalised entry of the cross Gram block.
    pub gram_block: f64,
    /// Numerical rank of all basis vectors together.
    pub rank: usize,
}

impl DecompositionReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.dims_match && self.gram_block <= tol && self.rank == self.dim_total
    }
}

fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * max).count()
}

/// Normalised cross Gram block, with columns given in an L²-orthonormal
/// coordinate system.
fn cross_gram(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let g = a.transpose() * b;
    let mut worst: f64 = 0.0;
    for i in 0..a.ncols() {
        for j in 0..b.ncols() {
            let s = a.column(i).norm() * b.column(j).norm();
            if s > 0.0 {
                worst = worst.max(g[(i, j)].abs() / s);
            }
        }
    }
    worst
}

fn report(a: DMatrix<f64>, b: DMatrix<f64>, dim_total: usize) -> DecompositionReport {
    let gram_block = cross_gram(&a, &b);
    let combined = DMatrix::from_fn(dim_total, a.ncols() + b.ncols(), |i, j| {
        if j < a.ncols() {
            a[(i, j)]
        } else {
            b[(i, j - a.ncols())]
        }
    });
    DecompositionReport {
        dim_total,
        dim_gradients: a.ncols(),
        dim_curls: b.ncols(),
        dims_match: dim_total == a.ncols() + b.ncols(),
        gram_block,
        rank: rank(&combined),
    }
}

/// Triangle version with k = 0. Coordinates are `sqrt|T|` times the
/// piecewise constant values, so the Euclidean inner product is the L² one.
pub fn check_triangle_decomposition(mesh: &Triangulation) -> Result<DecompositionReport> {
    mesh.validate()?;
    let nt = mesh.num_triangles();
    let cr = CrSpace::new(mesh);
    let mut grads = DMatrix::<f64>::zeros(2 * nt, cr.dim());
    let mut curls = DMatrix::<f64>::zeros(2 * nt, mesh.num_vertices() - 1);
    for t in 0..nt {
        let s = mesh.area(t).sqrt();
        let g = cr.local_gradients(t);
        for (i, d) in cr.local_dofs(t).iter().enumerate() {
            if let Some(d) = *d {
                grads[(2 * t, d)] += s * g[i][0];
                grads[(2 * t + 1, d)] += s * g[i][1];
            }
        }
        // the hat of vertex 0 is dropped: the remaining Curls span Curl(P₁ ∩ Y)
        let lam = mesh.barycentric_gradients(t);
        for (i, &v) in mesh.triangles()[t].iter().enumerate() {
            if v == 0 {
                continue;
            }
            curls[(2 * t, v - 1)] += s * lam[i][1];
            curls[(2 * t + 1, v - 1)] -= s * lam[i][0];
        }
    }
    Ok(report(grads, curls, 2 * nt))
}

/// Rannacher–Turek shape functions on the unit square: column `e` holds the
/// coefficients in `{1, x, y, x² - y²}` of the function with mean one on
/// edge `e` (bottom, right, top, left) and mean zero on the others.
fn rannacher_turek_coefficients() -> Matrix4<f64> {
    // edge means of 1, x, y, x² - y²
    let means = Matrix4::new(
        1.0, 0.5, 0.0, 1.0 / 3.0, // bottom, y = 0
        1.0, 1.0, 0.5, 2.0 / 3.0, // right, x = 1
        1.0, 0.5, 1.0, -2.0 / 3.0, // top, y = 1
        1.0, 0.0, 0.5, -1.0 / 3.0, // left, x = 0
    );
    means.try_inverse().expect("Rannacher–Turek moments are unisolvent")
}

/// Orthonormal coordinates of the local basis `{(-x̂, ŷ), e₁, e₂}` of X₁^rect
/// on a square of side `h`, with `x̂, ŷ ∈ [0, 1]`.
///
/// Returns the matrix `R` with `coords = R · (a, d₁, d₂)`.
fn rect_coordinates(h: f64) -> DMatrix<f64> {
    // Gram matrix of the local basis on [0,h]²
    let a2 = h * h;
    let g = nalgebra::Matrix3::new(
        2.0 / 3.0 * a2,
        -0.5 * a2,
        0.5 * a2,
        -0.5 * a2,
        a2,
        0.0,
        0.5 * a2,
        0.0,
        a2,
    );
    let l = g.cholesky().expect("local Gram matrix is SPD").l();
    DMatrix::from_fn(3, 3, |i, j| l[(j, i)])
}

/// Square version with k = 1 on congruent square cells.
pub fn check_square_decomposition(sq: &SquarePartition) -> Result<DecompositionReport> {
    if !sq.is_square() {
        return Err(FemError::NonSquareCells { hx: sq.hx, hy: sq.hy });
    }
    let h = sq.hx;
    let nc = sq.num_cells();
    let rt = rannacher_turek_coefficients();
    let r = rect_coordinates(h);

    let mut interior = vec![None; sq.edges.len()];
    let mut ne = 0;
    for (i, e) in sq.edges.iter().enumerate() {
        if !e.is_boundary() {
            interior[i] = Some(ne);
            ne += 1;
        }
    }

    // local coordinates (a, d₁, d₂) of each field, then mapped by R
    let mut grads = DMatrix::<f64>::zeros(3 * nc, ne);
    let mut curls = DMatrix::<f64>::zeros(3 * nc, sq.num_vertices() - 1);
    let put = |m: &mut DMatrix<f64>, c: usize, col: usize, local: [f64; 3]| {
        let v = &r * nalgebra::DVector::from_column_slice(&local);
        for i in 0..3 {
            m[(3 * c + i, col)] += v[i];
        }
    };
    for c in 0..nc {
        for (le, &e) in sq.cell_edges[c].iter().enumerate() {
            let Some(col) = interior[e] else { continue };
            // v = c0 + c1 x̂ + c2 ŷ + c3 (x̂² - ŷ²), ∇v = (c1 + 2c3 x̂, c2 - 2c3 ŷ)/h
            let co: Vector4<f64> = rt.column(le).into();
            put(&mut grads, c, col, [-2.0 * co[3] / h, co[1] / h, co[2] / h]);
        }
        // bilinear hats at the corners (lower-left, lower-right, upper-right, upper-left)
        let shapes: [(f64, f64, f64, f64); 4] = [
            (1.0, -1.0, -1.0, 1.0),
            (0.0, 1.0, 0.0, -1.0),
            (0.0, 0.0, 0.0, 1.0),
            (0.0, 0.0, 1.0, -1.0),
        ];
        for (corner, &(_, b1, b2, b3)) in shapes.iter().enumerate() {
            let v = sq.cells[c][corner];
            if v == 0 {
                continue;
            }
            // β = b0 + b1 x̂ + b2 ŷ + b3 x̂ŷ, Curl β = (b2 + b3 x̂, -b1 - b3 ŷ) / h
            put(&mut curls, c, v - 1, [-b3 / h, b2 / h, -b1 / h]);
        }
    }
    Ok(report(grads, curls, 3 * nc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rannacher_turek_moments() {
        let rt = rannacher_turek_coefficients();
        // mean of basis function e on edge f equals δ_ef
        let means = [
            [1.0, 0.5, 0.0, 1.0 / 3.0],
            [1.0, 1.0, 0.5, 2.0 / 3.0],
            [1.0, 0.5, 1.0, -2.0 / 3.0],
            [1.0, 0.0, 0.5, -1.0 / 3.0],
        ];
        for e in 0..4 {
            for (f, m) in means.iter().enumerate() {
                let v: f64 = (0..4).map(|i| rt[(i, e)] * m[i]).sum();
                assert!((v - if e == f { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn triangle_counts() {
        let r = check_triangle_decomposition(&Triangulation::lshape()).unwrap();
        assert_eq!((r.dim_total, r.dim_gradients, r.dim_curls), (12, 5, 7));
        assert!(r.holds(1e-12), "{r:?}");
        let r = check_triangle_decomposition(&Triangulation::unit_square()).unwrap();
        assert_eq!((r.dim_total, r.dim_gradients, r.dim_curls), (4, 1, 3));
        assert!(r.holds(1e-12), "{r:?}");
    }

    #[test]
    fn square_counts() {
        let two = SquarePartition::new(2, 2, [[0.0, 0.0], [1.0, 1.0]]);
        let r = check_square_decomposition(&two).unwrap();
        assert_eq!((r.dim_total, r.dim_gradients, r.dim_curls), (12, 4, 8));
        assert!(r.holds(1e-12), "{r:?}");
        let strip = SquarePartition::new(1, 2, [[0.0, 0.0], [1.0, 2.0]]);
        let r = check_square_decomposition(&strip).unwrap();
        assert_eq!((r.dim_total, r.dim_gradients, r.dim_curls), (6, 1, 5));
        assert!(r.holds(1e-12), "{r:?}");
    }

    #[test]
    fn rectangles_are_rejected() {
        let sq = SquarePartition::new(2, 2, [[0.0, 0.0], [2.0, 1.0]]);
        assert!(matches!(check_square_decomposition(&sq), Err(FemError::NonSquareCells { .. })));
    }
}
