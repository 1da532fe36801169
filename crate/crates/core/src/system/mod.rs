//! Assembly and solution of the reduced Curl–Curl system.
//!
//! The discrete mixed problem
//! `(p_h, q_h) + (q_h, Curl α_h) = (φ, q_h)`, `(p_h, Curl β_h) = (∇u_D, Curl β_h)`
//! is solved by eliminating `p_h`: since `Curl Y_h ⊆ X_h`, `α_h` solves
//! `(Curl α_h, Curl β_h) = (φ - ∇u_D, Curl β_h)` and `p_h = Π_k φ - Curl α_h`.

mod sparse;

pub use sparse::{solve_spd, CsrMatrix, LinearSolver};

use crate::error::{FemError, Result};
use crate::mesh::Triangulation;
use crate::quadrature::TriangleRule;
use crate::spaces::{default_quad_degree, VectorField, XhSpace, YhSpace};

/// Options for [`solve_mixed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    pub solver: LinearSolver,
    /// Quadrature exactness for data projections; `None` uses `max(2k+2, 8)`.
    pub quad_degree: Option<usize>,
}

impl SolveOptions {
    pub fn quad_degree_for(&self, k: usize) -> usize {
        self.quad_degree.unwrap_or_else(|| default_quad_degree(k))
    }
}

/// Full (unpinned) Curl–Curl matrix with its right-hand side.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub pinned: usize,
}

impl SparseSystem {
    /// Matrix and right-hand side with the pinned row and column removed.
    pub fn reduced(&self) -> (CsrMatrix, Vec<f64>) {
        let rhs = self
            .rhs
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.pinned)
            .map(|(_, &v)| v)
            .collect();
        (self.matrix.without(self.pinned), rhs)
    }
}

/// Discrete solution `(p_h, α_h)` together with `Π_k φ`.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub k: usize,
    /// Coefficients of `α_h` in Y_h, normalised to zero mean.
    pub alpha: Vec<f64>,
    /// Coefficients of `p_h` in X_h.
    pub p: Vec<f64>,
    /// Coefficients of `Π_k φ` in X_h.
    pub pi_phi: Vec<f64>,
    /// Coefficients of `Curl α_h` in X_h.
    pub curl_alpha: Vec<f64>,
    pub ndof: usize,
    /// Relative residual `‖A x - b‖ / ‖b‖` of the reduced system.
    pub residual: f64,
}

/// Per-triangle matrix whose row `i` holds the X_h coefficients of
/// `Curl β_i|_T` for the local Lagrange basis functions.
pub fn local_curl_matrix(x: &XhSpace, y: &YhSpace, rule: &TriangleRule, t: usize) -> Vec<Vec<f64>> {
    let d = x.local_dim();
    let n = y.element().len();
    let area = x.mesh().area(t);
    let mut c = vec![vec![0.0; 2 * d]; n];
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        let psi = x.basis_values(t, l);
        let grads = y.local_gradients(t, &y.element().barycentric_derivatives(l));
        for (i, g) in grads.iter().enumerate() {
            let curl = [g[1], -g[0]];
            for j in 0..d {
                c[i][j] += area * w * psi[j] * curl[0];
                c[i][d + j] += area * w * psi[j] * curl[1];
            }
        }
    }
    c
}

fn curl_rule(k: usize) -> TriangleRule {
    TriangleRule::new((2 * k).max(1)).expect("degree within the supported range")
}

/// `∫_Ω Curl β_i · Curl β_j`, the P_{k+1} Laplace stiffness matrix.
pub fn assemble_curl_curl(y: &YhSpace) -> CsrMatrix {
    let mesh = y.mesh();
    let rule = curl_rule(y.k());
    let table = y.tabulate(&rule);
    let n = y.element().len();
    let mut entries = Vec::with_capacity(mesh.num_triangles() * n * n);
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        let mut local = vec![vec![0.0; n]; n];
        for (q, w) in rule.weights.iter().enumerate() {
            let g = y.local_gradients(t, &table.derivatives[q]);
            for i in 0..n {
                for j in 0..n {
                    local[i][j] += area * w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        let dofs = y.dofs(t);
        for i in 0..n {
            for j in 0..n {
                entries.push((dofs[i], dofs[j], local[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(y.dim(), entries)
}

/// `∫_Ω g_h · Curl β_i` for `g_h ∈ X_h` given by its coefficients.
pub fn rhs_from_coefficients(x: &XhSpace, y: &YhSpace, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != x.dim() {
        return Err(FemError::DimensionMismatch {
            expected: x.dim(),
            found: g.len(),
        });
    }
    let rule = curl_rule(x.k());
    let d = x.local_dim();
    let mut b = vec![0.0; y.dim()];
    for t in 0..x.mesh().num_triangles() {
        let c = local_curl_matrix(x, y, &rule, t);
        let g0 = &g[x.index(t, 0, 0)..][..d];
        let g1 = &g[x.index(t, 1, 0)..][..d];
        for (row, &dof) in c.iter().zip(y.dofs(t)) {
            b[dof] += row[..d].iter().zip(g0).map(|(a, b)| a * b).sum::<f64>()
                + row[d..].iter().zip(g1).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    Ok(b)
}

/// `∫_Ω g · Curl β_i`, computed as `(Π_k g, Curl β_i)` since `Curl β_i ∈ X_h`.
pub fn assemble_rhs(g: &VectorField, y: &YhSpace, quad_degree: usize) -> Result<Vec<f64>> {
    let x = XhSpace::new(y.mesh(), y.k());
    rhs_from_coefficients(&x, y, &x.project(g, quad_degree)?)
}

/// X_h coefficients of `Curl α_h`.
pub fn curl_coefficients(x: &XhSpace, y: &YhSpace, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != y.dim() {
        return Err(FemError::DimensionMismatch {
            expected: y.dim(),
            found: alpha.len(),
        });
    }
    let rule = curl_rule(x.k());
    let d = x.local_dim();
    let mut out = vec![0.0; x.dim()];
    for t in 0..x.mesh().num_triangles() {
        let c = local_curl_matrix(x, y, &rule, t);
        let base = x.index(t, 0, 0);
        for (row, &dof) in c.iter().zip(y.dofs(t)) {
            for j in 0..2 * d {
                out[base + j] += row[j] * alpha[dof];
            }
        }
    }
    Ok(out)
}

/// Solves the discrete mixed problem on `mesh` with X_h degree `k`.
///
/// With `grad_ud` present the Curl–Curl right-hand side uses `φ - ∇u_D`,
/// while `p_h = Π_k φ - Curl α_h` in both cases.
pub fn solve_mixed(
    mesh: &Triangulation,
    k: usize,
    phi: &VectorField,
    grad_ud: Option<&VectorField>,
    options: &SolveOptions,
) -> Result<DiscreteSolution> {
    let x = XhSpace::new(mesh, k);
    let y = YhSpace::new(mesh, k);
    let quad = options.quad_degree_for(k);
    let pi_phi = x.project(phi, quad)?;
    let datum = match grad_ud {
        Some(lift) => {
            let pi_lift = x.project(lift, quad)?;
            pi_phi.iter().zip(&pi_lift).map(|(a, b)| a - b).collect()
        }
        None => pi_phi.clone(),
    };
    let system = SparseSystem {
        matrix: assemble_curl_curl(&y),
        rhs: rhs_from_coefficients(&x, &y, &datum)?,
        pinned: y.pinned(),
    };
    solve_system(&x, &y, &system, pi_phi, options.solver)
}

/// Solves an assembled system and forms `p_h = Π_k φ - Curl α_h`.
pub fn solve_system(
    x: &XhSpace,
    y: &YhSpace,
    system: &SparseSystem,
    pi_phi: Vec<f64>,
    solver: LinearSolver,
) -> Result<DiscreteSolution> {
    let (a, b) = system.reduced();
    let reduced = solve_spd(&a, &b, solver)?;
    let residual = sparse::relative_residual(&a, &reduced, &b);
    if !residual.is_finite() || residual > 1e-8 {
        return Err(FemError::Solver(format!("relative residual {residual:e} too large")));
    }
    let mut alpha = Vec::with_capacity(y.dim());
    let mut it = reduced.into_iter();
    for i in 0..y.dim() {
        alpha.push(if i == system.pinned { 0.0 } else { it.next().unwrap() });
    }
    y.normalize_mean(&mut alpha)?;
    let curl_alpha = curl_coefficients(x, y, &alpha)?;
    let p = pi_phi.iter().zip(&curl_alpha).map(|(a, b)| a - b).collect();
    Ok(DiscreteSolution {
        k: x.k(),
        alpha,
        p,
        pi_phi,
        curl_alpha,
        ndof: y.ndof(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn reference_stiffness() {
        let mesh = Triangulation::reference_triangle();
        let y = YhSpace::new(&mesh, 0);
        let k = assemble_curl_curl(&y).to_dense();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums() {
        let mesh = Triangulation::lshape().red_refine().bisect(&[0, 5]).unwrap();
        for k in 0..3 {
            let y = YhSpace::new(&mesh, k);
            let a = assemble_curl_curl(&y);
            assert!(a.asymmetry() < 1e-13);
            let ones = vec![1.0; y.dim()];
            assert!(max_abs(&a.matvec(&ones)) < 1e-12);
            assert!(a.diagonal().iter().all(|&d| d >= 0.0));
        }
    }

    #[test]
    fn rhs_of_a_curl_is_a_matrix_column() {
        let mesh = Triangulation::lshape().red_refine();
        let k = 1;
        let x = XhSpace::new(&mesh, k);
        let y = YhSpace::new(&mesh, k);
        let j = 11;
        let mut e = vec![0.0; y.dim()];
        e[j] = 1.0;
        let g = curl_coefficients(&x, &y, &e).unwrap();
        let b = rhs_from_coefficients(&x, &y, &g).unwrap();
        let a = assemble_curl_curl(&y);
        for (i, bi) in b.iter().enumerate() {
            assert!((bi - a.get(i, j)).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_datum_gives_zero_for_interior_functions() {
        let mesh = Triangulation::lshape().red_refine();
        let y = YhSpace::new(&mesh, 2);
        let b = assemble_rhs(&VectorField::constant([0.3, -1.2]), &y, 4).unwrap();
        for (i, bi) in b.iter().enumerate() {
            if !y.is_boundary_dof(i) {
                assert!(bi.abs() < 1e-14, "{i}: {bi}");
            }
        }
    }

    #[test]
    fn rhs_matches_brute_force_quadrature() {
        let mesh = Triangulation::lshape();
        let y = YhSpace::new(&mesh, 0);
        let b = assemble_rhs(&VectorField::polynomial(1, |p| [p[0] / 2.0, p[1] / 2.0]), &y, 2).unwrap();
        // Curl of a P1 hat is constant per triangle: ∫_T φ·c = |T| φ(centroid)·c
        let mut oracle = vec![0.0; y.dim()];
        for t in 0..mesh.num_triangles() {
            let c = mesh.centroid(t);
            let g = mesh.barycentric_gradients(t);
            for (local, &v) in mesh.triangles()[t].iter().enumerate() {
                let curl = [g[local][1], -g[local][0]];
                oracle[v] += mesh.area(t) * 0.5 * (c[0] * curl[0] + c[1] * curl[1]);
            }
        }
        for (a, b) in b.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_datum() {
        let mesh = Triangulation::lshape();
        let s = solve_mixed(&mesh, 1, &VectorField::zero(), None, &SolveOptions::default()).unwrap();
        assert_eq!(max_abs(&s.p), 0.0);
        assert_eq!(max_abs(&s.alpha), 0.0);
        assert_eq!(s.ndof, YhSpace::new(&mesh, 1).ndof());
    }

    #[test]
    fn gradient_datum_has_no_curl_part() {
        let mesh = Triangulation::unit_square().red_refine_times(2);
        // φ = ∇w with w = x(1-x)y(1-y) ∈ H¹₀, and ∇w ∈ P_3
        let k = 3;
        let w = |p: Point| [(1.0 - 2.0 * p[0]) * p[1] * (1.0 - p[1]), p[0] * (1.0 - p[0]) * (1.0 - 2.0 * p[1])];
        let phi = VectorField::polynomial(3, w);
        let s = solve_mixed(&mesh, k, &phi, None, &SolveOptions::default()).unwrap();
        assert!(max_abs(&s.alpha) < 1e-12);
        let x = XhSpace::new(&mesh, k);
        let e: f64 = x.squared_distance(&s.p, 8, w).unwrap().iter().sum();
        assert!(e.sqrt() < 1e-12);
    }

    #[test]
    fn curl_datum_is_recovered() {
        let mesh = Triangulation::lshape().red_refine();
        for k in 0..3 {
            let x = XhSpace::new(&mesh, k);
            let y = YhSpace::new(&mesh, k);
            let mut beta = y.interpolate(|p| (p[0] + 0.3).powi(k as i32 + 1) - p[1] * p[0]);
            y.normalize_mean(&mut beta).unwrap();
            let g = curl_coefficients(&x, &y, &beta).unwrap();
            let system = SparseSystem {
                matrix: assemble_curl_curl(&y),
                rhs: rhs_from_coefficients(&x, &y, &g).unwrap(),
                pinned: 0,
            };
            let s = solve_system(&x, &y, &system, g, LinearSolver::Direct).unwrap();
            assert!(max_abs(&s.p) < 1e-12);
            for (a, b) in s.alpha.iter().zip(&beta) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn strong_equation_and_pythagoras() {
        let mesh = Triangulation::lshape().red_refine();
        let phi = VectorField::new(|p| [p[1].sin() + p[0], (2.0 * p[0]).cos()]);
        for k in 0..3 {
            let s = solve_mixed(&mesh, k, &phi, None, &SolveOptions::default()).unwrap();
            let sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
            let lhs = sq(&s.p) + sq(&s.curl_alpha);
            assert!((lhs - sq(&s.pi_phi)).abs() <= 1e-12 * sq(&s.pi_phi));
            for i in 0..s.p.len() {
                assert!((s.p[i] + s.curl_alpha[i] - s.pi_phi[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pcg_matches_direct_solver() {
        let mesh = Triangulation::lshape().red_refine_times(2);
        let phi = VectorField::polynomial(1, |p| [p[0] / 2.0, p[1] / 2.0]);
        let a = solve_mixed(&mesh, 1, &phi, None, &SolveOptions::default()).unwrap();
        let opts = SolveOptions {
            solver: LinearSolver::Pcg,
            quad_degree: None,
        };
        let b = solve_mixed(&mesh, 1, &phi, None, &opts).unwrap();
        for (u, v) in a.p.iter().zip(&b.p) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn result_does_not_depend_on_the_pinned_dof() {
        let mesh = Triangulation::lshape().red_refine();
        let k = 1;
        let x = XhSpace::new(&mesh, k);
        let y = YhSpace::new(&mesh, k);
        let phi = x.project(&VectorField::new(|p| [p[0] * p[1], p[0].exp()]), 8).unwrap();
        let mut system = SparseSystem {
            matrix: assemble_curl_curl(&y),
            rhs: rhs_from_coefficients(&x, &y, &phi).unwrap(),
            pinned: 0,
        };
        let a = solve_system(&x, &y, &system, phi.clone(), LinearSolver::Direct).unwrap();
        system.pinned = y.dim() - 1;
        let b = solve_system(&x, &y, &system, phi, LinearSolver::Direct).unwrap();
        for (u, v) in a.alpha.iter().zip(&b.alpha) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
