use super::{VectorField, YhSpace};
use crate::error::{FemError, Result};
use crate::mesh::{Point, Triangulation};
use crate::quadrature::TriangleRule;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Piecewise vector polynomials `P_k(T; R²)` without continuity.
///
/// Each triangle carries an `L²(T)`-orthonormal scalar basis
/// `ψ_i(x) = ψ̂_i(x̂) / sqrt(2|T|)`, where `ψ̂` orthonormalises the monomials
/// `x̂^a ŷ^b` (`a + b ≤ k`) on the reference triangle. Coefficient `(t, c, i)`
/// multiplies `ψ_i e_c` and lives at index `(2t + c)·d + i`, so the L² norm of
/// a field equals the Euclidean norm of its coefficient vector.
#[derive(Debug, Clone)]
pub struct XhSpace<'a> {
    mesh: &'a Triangulation,
    k: usize,
    exponents: Vec<(usize, usize)>,
    /// Rows express `ψ̂_i` in the monomial basis (lower triangular).
    transform: Vec<Vec<f64>>,
}

impl<'a> XhSpace<'a> {
    pub fn new(mesh: &'a Triangulation, k: usize) -> Self {
        let exponents: Vec<(usize, usize)> = (0..=k)
            .flat_map(|deg| (0..=deg).map(move |b| (deg - b, b)))
            .collect();
        let d = exponents.len();
        let gram: Vec<Vec<f64>> = exponents
            .iter()
            .map(|&(a1, b1)| {
                exponents
                    .iter()
                    .map(|&(a2, b2)| {
                        let (a, b) = (a1 + a2, b1 + b2);
                        factorial(a) * factorial(b) / factorial(a + b + 2)
                    })
                    .collect()
            })
            .collect();
        // Cholesky gram = L Lᵀ, then ψ̂ = L⁻¹ m
        let mut l = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = gram[i][j] - (0..j).map(|p| l[i][p] * l[j][p]).sum::<f64>();
                l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
            }
        }
        let mut inv = vec![vec![0.0; d]; d];
        for col in 0..d {
            for i in col..d {
                let rhs = if i == col { 1.0 } else { 0.0 };
                let s: f64 = rhs - (col..i).map(|p| l[i][p] * inv[p][col]).sum::<f64>();
                inv[i][col] = s / l[i][i];
            }
        }
        XhSpace {
            mesh,
            k,
            exponents,
            transform: inv,
        }
    }

    pub fn mesh(&self) -> &'a Triangulation {
        self.mesh
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Scalar basis size per triangle, `(k+1)(k+2)/2`.
    pub fn local_dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.mesh.num_triangles() * self.local_dim()
    }

    #[inline]
    pub fn index(&self, t: usize, comp: usize, i: usize) -> usize {
        (2 * t + comp) * self.local_dim() + i
    }

    fn scale(&self, t: usize) -> f64 {
        1.0 / (2.0 * self.mesh.area(t)).sqrt()
    }

    fn reference_values(&self, lambda: &[f64; 3]) -> Vec<f64> {
        let (x, y) = (lambda[1], lambda[2]);
        let mono: Vec<f64> = self
            .exponents
            .iter()
            .map(|&(a, b)| x.powi(a as i32) * y.powi(b as i32))
            .collect();
        self.transform
            .iter()
            .map(|row| row.iter().zip(&mono).map(|(c, m)| c * m).sum())
            .collect()
    }

    fn reference_gradients(&self, lambda: &[f64; 3]) -> Vec<[f64; 2]> {
        let (x, y) = (lambda[1], lambda[2]);
        let pw = |v: f64, e: usize| if e == 0 { 0.0 } else { e as f64 * v.powi(e as i32 - 1) };
        let mono: Vec<[f64; 2]> = self
            .exponents
            .iter()
            .map(|&(a, b)| [pw(x, a) * y.powi(b as i32), x.powi(a as i32) * pw(y, b)])
            .collect();
        self.transform
            .iter()
            .map(|row| {
                let mut g = [0.0; 2];
                for (c, m) in row.iter().zip(&mono) {
                    g[0] += c * m[0];
                    g[1] += c * m[1];
                }
                g
            })
            .collect()
    }

    /// Values of the scalar basis `ψ_i^T` at barycentric point `lambda`.
    pub fn basis_values(&self, t: usize, lambda: &[f64; 3]) -> Vec<f64> {
        let s = self.scale(t);
        self.reference_values(lambda).into_iter().map(|v| v * s).collect()
    }

    /// Physical gradients of the scalar basis `ψ_i^T`.
    pub fn basis_gradients(&self, t: usize, lambda: &[f64; 3]) -> Vec<Point> {
        let s = self.scale(t);
        let g = self.mesh.barycentric_gradients(t);
        self.reference_gradients(lambda)
            .into_iter()
            .map(|r| {
                [
                    s * (r[0] * g[1][0] + r[1] * g[2][0]),
                    s * (r[0] * g[1][1] + r[1] * g[2][1]),
                ]
            })
            .collect()
    }

    fn check(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(FemError::DimensionMismatch {
                expected: self.dim(),
                found: coeffs.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, coeffs: &[f64], t: usize, lambda: &[f64; 3]) -> Point {
        let v = self.basis_values(t, lambda);
        let d = self.local_dim();
        let c0 = &coeffs[self.index(t, 0, 0)..][..d];
        let c1 = &coeffs[self.index(t, 1, 0)..][..d];
        [
            v.iter().zip(c0).map(|(a, b)| a * b).sum(),
            v.iter().zip(c1).map(|(a, b)| a * b).sum(),
        ]
    }

    /// Piecewise curl `∂₁q₂ - ∂₂q₁` of a discrete field on triangle `t`.
    pub fn curl_nc(&self, coeffs: &[f64], t: usize, lambda: &[f64; 3]) -> f64 {
        let g = self.basis_gradients(t, lambda);
        let d = self.local_dim();
        let c0 = &coeffs[self.index(t, 0, 0)..][..d];
        let c1 = &coeffs[self.index(t, 1, 0)..][..d];
        g.iter()
            .zip(c0.iter().zip(c1))
            .map(|(g, (a, b))| b * g[0] - a * g[1])
            .sum()
    }

    /// Piecewise divergence `∂₁q₁ + ∂₂q₂` on triangle `t`.
    pub fn div_nc(&self, coeffs: &[f64], t: usize, lambda: &[f64; 3]) -> f64 {
        let g = self.basis_gradients(t, lambda);
        let d = self.local_dim();
        let c0 = &coeffs[self.index(t, 0, 0)..][..d];
        let c1 = &coeffs[self.index(t, 1, 0)..][..d];
        g.iter()
            .zip(c0.iter().zip(c1))
            .map(|(g, (a, b))| a * g[0] + b * g[1])
            .sum()
    }

    /// L² projection `Π_k` of an arbitrary pointwise field.
    pub fn project_fn(&self, quad_degree: usize, f: impl Fn(usize, Point) -> Point) -> Result<Vec<f64>> {
        let rule = TriangleRule::new(quad_degree)?;
        let table: Vec<Vec<f64>> = rule.points.iter().map(|l| self.reference_values(l)).collect();
        let d = self.local_dim();
        let mut out = vec![0.0; self.dim()];
        for t in 0..self.mesh.num_triangles() {
            // ∫_T f ψ_i = |T| Σ w_q f(x_q) ψ̂_i(q) / sqrt(2|T|)
            let factor = self.mesh.area(t) * self.scale(t);
            for (q, (l, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let v = f(t, self.mesh.point(t, l));
                for i in 0..d {
                    let b = factor * w * table[q][i];
                    out[self.index(t, 0, i)] += b * v[0];
                    out[self.index(t, 1, i)] += b * v[1];
                }
            }
        }
        Ok(out)
    }

    /// L² projection of `field`; polynomial fields are integrated exactly.
    pub fn project(&self, field: &VectorField, quad_degree: usize) -> Result<Vec<f64>> {
        let degree = match field.degree {
            Some(p) => (p + self.k).max(1),
            None => quad_degree,
        };
        self.project_fn(degree, |_, x| field.eval(x))
    }

    /// Coefficients of `Curl β_h` for `β_h ∈ Y_h`; the result lies in X_h exactly.
    pub fn curl_of(&self, y: &YhSpace, beta: &[f64]) -> Result<Vec<f64>> {
        if y.mesh().num_triangles() != self.mesh.num_triangles() {
            return Err(FemError::Precondition("Y_h lives on a different mesh".into()));
        }
        if beta.len() != y.dim() {
            return Err(FemError::DimensionMismatch {
                expected: y.dim(),
                found: beta.len(),
            });
        }
        self.project_fn((2 * self.k).max(1), |t, x| {
            let lambda = self.barycentric_of(t, x);
            y.curl(beta, t, &lambda)
        })
    }

    /// Barycentric coordinates of `x` relative to triangle `t`.
    pub fn barycentric_of(&self, t: usize, x: Point) -> [f64; 3] {
        barycentric(self.mesh, t, x)
    }

    /// `‖q_h‖_{L²(Ω)}`, the Euclidean norm of the coefficients.
    pub fn norm(&self, coeffs: &[f64]) -> Result<f64> {
        self.check(coeffs)?;
        Ok(coeffs.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// Per-triangle `‖q_h - f‖²_{L²(T)}` by quadrature.
    pub fn squared_distance(
        &self,
        coeffs: &[f64],
        quad_degree: usize,
        f: impl Fn(Point) -> Point,
    ) -> Result<Vec<f64>> {
        self.check(coeffs)?;
        let rule = TriangleRule::new(quad_degree)?;
        Ok((0..self.mesh.num_triangles())
            .map(|t| {
                let area = self.mesh.area(t);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| {
                        let v = self.evaluate(coeffs, t, l);
                        let e = f(self.mesh.point(t, l));
                        w * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2))
                    })
                    .sum::<f64>()
                    * area
            })
            .collect())
    }
}

pub(crate) fn barycentric(mesh: &Triangulation, t: usize, x: Point) -> [f64; 3] {
    let [a, b, c] = mesh.corners(t);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (x[1] - a[1]) * (c[0] - a[0])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / det;
    [1.0 - l1 - l2, l1, l2]
}
