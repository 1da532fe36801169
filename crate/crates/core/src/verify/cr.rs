//! Crouzeix–Raviart oracle, assembled independently of the mixed solver.

use crate::error::{FemError, Result};
use crate::mesh::{Point, Triangulation};
use crate::spaces::{VectorField, XhSpace};
use nalgebra::{DMatrix, DVector};

/// Gradients of the barycentric coordinates computed directly from the
/// corner coordinates (deliberately not reusing the mesh helpers).
fn hat_gradients(c: [Point; 3]) -> ([Point; 3], f64) {
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = c[(i + 1) % 3];
        let b = c[(i + 2) % 3];
        // ∇λ_i is the inward normal of the opposite edge scaled by 1/height
        g[i] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    }
    (g, 0.5 * det.abs())
}

/// `CR¹₀(T)`: one basis function per interior edge, `1 - 2λ_z` on each
/// neighbour, with `z` the vertex opposite the edge.
#[derive(Debug, Clone)]
pub struct CrSpace<'a> {
    mesh: &'a Triangulation,
    /// Interior edge number of each global edge.
    dof_of_edge: Vec<Option<usize>>,
    ndof: usize,
}

impl<'a> CrSpace<'a> {
    pub fn new(mesh: &'a Triangulation) -> Self {
        let mut ndof = 0;
        let dof_of_edge = mesh
            .edges()
            .iter()
            .map(|e| {
                (!e.is_boundary()).then(|| {
                    ndof += 1;
                    ndof - 1
                })
            })
            .collect();
        CrSpace {
            mesh,
            dof_of_edge,
            ndof,
        }
    }

    pub fn dim(&self) -> usize {
        self.ndof
    }

    /// Local DOFs of triangle `t`: entry `i` belongs to the edge opposite vertex `i`.
    pub fn local_dofs(&self, t: usize) -> [Option<usize>; 3] {
        self.mesh.triangle_edges(t).map(|e| self.dof_of_edge[e])
    }

    /// Piecewise constant `∇_NC` of every local basis function on `t`.
    pub fn local_gradients(&self, t: usize) -> [Point; 3] {
        let (g, _) = hat_gradients(self.mesh.corners(t));
        g.map(|v| [-2.0 * v[0], -2.0 * v[1]])
    }

    /// Elementwise gradients of a CR function.
    pub fn gradient(&self, u: &[f64]) -> Vec<Point> {
        (0..self.mesh.num_triangles())
            .map(|t| {
                let g = self.local_gradients(t);
                let mut out = [0.0; 2];
                for (i, d) in self.local_dofs(t).iter().enumerate() {
                    if let Some(d) = d {
                        out[0] += u[*d] * g[i][0];
                        out[1] += u[*d] * g[i][1];
                    }
                }
                out
            })
            .collect()
    }

    /// Stiffness matrix as (row, col, value) triplets and the load vector for
    /// a piecewise constant `f`.
    pub fn assemble(&self, f: &[f64]) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ndof];
        let mut b = vec![0.0; self.ndof];
        for (t, &ft) in f.iter().enumerate().take(self.mesh.num_triangles()) {
            let (_, area) = hat_gradients(self.mesh.corners(t));
            let g = self.local_gradients(t);
            let dofs = self.local_dofs(t);
            for i in 0..3 {
                let Some(di) = dofs[i] else { continue };
                // ∫_T (1 - 2λ) = |T| / 3
                b[di] += ft * area / 3.0;
                for j in 0..3 {
                    if let Some(dj) = dofs[j] {
                        rows[di].push((dj, area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
                    }
                }
            }
        }
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.len());
            for &(j, v) in r.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            *r = merged;
        }
        (rows, b)
    }
}

fn matvec(rows: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
}

/// Plain conjugate gradients with Jacobi scaling.
fn conjugate_gradients(rows: &[Vec<(usize, f64)>], b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let diag: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1))
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..20 * n + 100 {
        let ap = matvec(rows, &p);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * nb {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for i in 0..n {
            p[i] = z[i] + rz_new / rz * p[i];
        }
        rz = rz_new;
    }
    Err(FemError::Solver("CR conjugate gradients did not converge".into()))
}

/// Dense LU solve, used as a brute-force reference for small systems.
pub fn dense_solve(rows: &[Vec<(usize, f64)>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        for &(j, v) in r {
            a[(i, j)] += v;
        }
    }
    a.lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| FemError::Solver("singular CR matrix".into()))
}

/// CR solution for piecewise constant `f`; returns coefficients and `∇_NC u_CR`.
pub fn cr_solve(mesh: &Triangulation, f: &[f64]) -> Result<(Vec<f64>, Vec<Point>)> {
    if f.len() != mesh.num_triangles() {
        return Err(FemError::DimensionMismatch {
            expected: mesh.num_triangles(),
            found: f.len(),
        });
    }
    let space = CrSpace::new(mesh);
    let (rows, b) = space.assemble(f);
    let u = if space.dim() <= 50 {
        dense_solve(&rows, &b)?
    } else {
        conjugate_gradients(&rows, &b, 1e-14)?
    };
    let grad = space.gradient(&u);
    Ok((u, grad))
}

/// Checks that `φ` is of the form `a_T + b_T x` on every triangle and
/// returns `f_T = -div φ = -2 b_T`.
pub fn lowest_order_rt_divergence(mesh: &Triangulation, phi: &VectorField) -> Result<Vec<f64>> {
    (0..mesh.num_triangles())
        .map(|t| {
            let c = mesh.corners(t);
            let m = mesh.centroid(t);
            let pm = phi.eval(m);
            let mut bs = Vec::new();
            for v in c {
                let pv = phi.eval(v);
                let d = [v[0] - m[0], v[1] - m[1]];
                let dd = d[0] * d[0] + d[1] * d[1];
                let b = ((pv[0] - pm[0]) * d[0] + (pv[1] - pm[1]) * d[1]) / dd;
                let res = (pv[0] - pm[0] - b * d[0]).abs() + (pv[1] - pm[1] - b * d[1]).abs();
                let scale = 1.0 + pm[0].abs() + pm[1].abs();
                if res > 1e-12 * scale {
                    return Err(FemError::Precondition(format!(
                        "datum is not a lowest-order Raviart–Thomas field on triangle {t}"
                    )));
                }
                bs.push(b);
            }
            if (bs[0] - bs[1]).abs() + (bs[0] - bs[2]).abs() > 1e-12 * (1.0 + bs[0].abs()) {
                return Err(FemError::Precondition(format!("divergence not constant on triangle {t}")));
            }
            Ok(-2.0 * bs[0])
        })
        .collect()
}

/// Largest elementwise `|p_h - ∇_NC u_CR|` for a given discrete `p_h` (k = 0).
pub fn cr_deviation(mesh: &Triangulation, p: &[f64], phi: &VectorField) -> Result<f64> {
    let f = lowest_order_rt_divergence(mesh, phi)?;
    let (_, grad) = cr_solve(mesh, &f)?;
    let x = XhSpace::new(mesh, 0);
    if p.len() != x.dim() {
        return Err(FemError::DimensionMismatch {
            expected: x.dim(),
            found: p.len(),
        });
    }
    Ok((0..mesh.num_triangles())
        .map(|t| {
            let v = x.evaluate(p, t, &[1.0 / 3.0; 3]);
            (v[0] - grad[t][0]).abs().max((v[1] - grad[t][1]).abs())
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_load() {
        let mesh = Triangulation::lshape();
        let (u, g) = cr_solve(&mesh, &[0.0; 6]).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
        assert!(g.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn single_interior_edge_on_the_square() {
        // diagonal basis: ∇(1 - 2λ_z) = ±(-2, 2) on both halves, so a = 2 · ½ · 8 = 8
        // and b = 2 · (½ / 3) = 1/3, hence u = 1/24
        let mesh = Triangulation::unit_square();
        let (u, _) = cr_solve(&mesh, &[1.0, 1.0]).unwrap();
        assert_eq!(u.len(), 1);
        assert!((u[0] - 1.0 / 24.0).abs() < 1e-15, "{}", u[0]);
    }

    #[test]
    fn iterative_and_dense_solves_agree() {
        let mesh = Triangulation::lshape().red_refine_times(2);
        let space = CrSpace::new(&mesh);
        let f: Vec<f64> = (0..mesh.num_triangles()).map(|t| (t as f64).sin()).collect();
        let (rows, b) = space.assemble(&f);
        assert!(space.dim() > 50);
        let dense = dense_solve(&rows, &b).unwrap();
        let cg = conjugate_gradients(&rows, &b, 1e-14).unwrap();
        for (a, c) in dense.iter().zip(&cg) {
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn lshape_dimension() {
        assert_eq!(CrSpace::new(&Triangulation::lshape()).dim(), 5);
    }

    #[test]
    fn rt_precondition() {
        let mesh = Triangulation::lshape();
        let f = lowest_order_rt_divergence(&mesh, &VectorField::polynomial(1, |p| [p[0] / 2.0, p[1] / 2.0])).unwrap();
        assert!(f.iter().all(|&v| (v + 1.0).abs() < 1e-14));
        assert!(lowest_order_rt_divergence(&mesh, &VectorField::new(|p| [p[1], 0.0])).is_err());
    }
}
