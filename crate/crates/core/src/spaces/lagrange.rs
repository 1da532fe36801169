use crate::error::{FemError, Result};
use crate::mesh::{Point, Triangulation};
use crate::quadrature::TriangleRule;

/// Nodal Lagrange element of degree `m` on a triangle, in barycentric form.
///
/// Nodes are the lattice points `α/m` with `|α| = m`, ordered: the three
/// vertices, then the `m - 1` nodes of local edges 0, 1, 2 (edge `i` runs from
/// local vertex `i+1` to `i+2`), then interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeElement {
    pub degree: usize,
    pub nodes: Vec<[usize; 3]>,
}

impl LagrangeElement {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "Lagrange elements start at degree one");
        let m = degree;
        let mut nodes = Vec::new();
        for i in 0..3 {
            let mut a = [0; 3];
            a[i] = m;
            nodes.push(a);
        }
        for i in 0..3 {
            let (p, q) = ((i + 1) % 3, (i + 2) % 3);
            for s in 1..m {
                let mut a = [0; 3];
                a[p] = m - s;
                a[q] = s;
                nodes.push(a);
            }
        }
        for a0 in 1..m {
            for a1 in 1..m {
                if a0 + a1 < m {
                    nodes.push([a0, a1, m - a0 - a1]);
                }
            }
        }
        LagrangeElement { degree, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn factor(&self, a: usize, x: f64) -> (f64, f64) {
        // ℓ_a(x) = Π_{s<a} (m x - s)/(s + 1) and its derivative
        let m = self.degree as f64;
        let mut value = 1.0;
        let mut deriv = 0.0;
        for s in 0..a {
            let num = m * x - s as f64;
            let den = (s + 1) as f64;
            deriv = (deriv * num + value * m) / den;
            value = value * num / den;
        }
        (value, deriv)
    }

    /// Basis values at barycentric coordinates `lambda`.
    pub fn values(&self, lambda: &[f64; 3]) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|a| (0..3).map(|c| self.factor(a[c], lambda[c]).0).product())
            .collect()
    }

    /// Partial derivatives of every basis function with respect to `λ₀, λ₁, λ₂`.
    pub fn barycentric_derivatives(&self, lambda: &[f64; 3]) -> Vec<[f64; 3]> {
        self.nodes
            .iter()
            .map(|a| {
                let f: Vec<(f64, f64)> = (0..3).map(|c| self.factor(a[c], lambda[c])).collect();
                [
                    f[0].1 * f[1].0 * f[2].0,
                    f[0].0 * f[1].1 * f[2].0,
                    f[0].0 * f[1].0 * f[2].1,
                ]
            })
            .collect()
    }
}

/// Basis values and barycentric derivatives tabulated on a quadrature rule.
#[derive(Debug, Clone)]
pub struct LagrangeTable {
    pub values: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<[f64; 3]>>,
}

/// Continuous `P_{k+1}` Lagrange space with the zero-mean constraint realised
/// by pinning the lowest-index vertex DOF.
#[derive(Debug, Clone)]
pub struct YhSpace<'a> {
    mesh: &'a Triangulation,
    k: usize,
    element: LagrangeElement,
    local_to_global: Vec<usize>,
    nodes: Vec<Point>,
    on_boundary: Vec<bool>,
}

impl<'a> YhSpace<'a> {
    /// Space `P_{k+1}(T) ∩ C⁰(Ω)` on `mesh` for the X_h degree `k`.
    pub fn new(mesh: &'a Triangulation, k: usize) -> Self {
        let m = k + 1;
        let element = LagrangeElement::new(m);
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let per_edge = m - 1;
        let interior = element.len() - 3 - 3 * per_edge;
        let n = nv + ne * per_edge + mesh.num_triangles() * interior;

        let mut nodes = vec![[0.0; 2]; n];
        let mut on_boundary = vec![false; n];
        let mut local_to_global = Vec::with_capacity(mesh.num_triangles() * element.len());
        for e in mesh.edges() {
            if e.is_boundary() {
                on_boundary[e.vertices[0]] = true;
                on_boundary[e.vertices[1]] = true;
            }
        }
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangles()[t];
            let tedges = mesh.triangle_edges(t);
            for (local, a) in element.nodes.iter().enumerate() {
                let lambda = a.map(|x| x as f64 / m as f64);
                let global = if local < 3 {
                    tri[local]
                } else if local < 3 + 3 * per_edge {
                    let i = (local - 3) / per_edge;
                    let s = (local - 3) % per_edge + 1;
                    let edge = &mesh.edges()[tedges[i]];
                    // `s` counts from local vertex i+1 towards i+2
                    let from_first = if tri[(i + 1) % 3] == edge.vertices[0] { s } else { m - s };
                    let g = nv + tedges[i] * per_edge + from_first - 1;
                    on_boundary[g] = edge.is_boundary();
                    g
                } else {
                    nv + ne * per_edge + t * interior + (local - 3 - 3 * per_edge)
                };
                nodes[global] = mesh.point(t, &lambda);
                local_to_global.push(global);
            }
        }
        YhSpace {
            mesh,
            k,
            element,
            local_to_global,
            nodes,
            on_boundary,
        }
    }

    pub fn mesh(&self) -> &'a Triangulation {
        self.mesh
    }

    /// Degree `k` of the companion X_h space; the Lagrange degree is `k + 1`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn element(&self) -> &LagrangeElement {
        &self.element
    }

    /// Number of continuous nodal DOFs `n_Y`.
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Size of the reduced system after pinning: `n_Y - 1`.
    pub fn ndof(&self) -> usize {
        self.dim() - 1
    }

    /// The pinned DOF (vertex 0).
    pub fn pinned(&self) -> usize {
        0
    }

    pub fn dofs(&self, t: usize) -> &[usize] {
        let n = self.element.len();
        &self.local_to_global[t * n..(t + 1) * n]
    }

    pub fn node(&self, dof: usize) -> Point {
        self.nodes[dof]
    }

    pub fn is_boundary_dof(&self, dof: usize) -> bool {
        self.on_boundary[dof]
    }

    pub fn tabulate(&self, rule: &TriangleRule) -> LagrangeTable {
        LagrangeTable {
            values: rule.points.iter().map(|l| self.element.values(l)).collect(),
            derivatives: rule
                .points
                .iter()
                .map(|l| self.element.barycentric_derivatives(l))
                .collect(),
        }
    }

    /// Physical gradients of the local basis from barycentric derivatives.
    pub fn local_gradients(&self, t: usize, derivs: &[[f64; 3]]) -> Vec<Point> {
        let g = self.mesh.barycentric_gradients(t);
        derivs
            .iter()
            .map(|d| {
                [
                    d[0] * g[0][0] + d[1] * g[1][0] + d[2] * g[2][0],
                    d[0] * g[0][1] + d[1] * g[1][1] + d[2] * g[2][1],
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

    /// Nodal interpolation of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&p| f(p)).collect()
    }

    pub fn evaluate(&self, coeffs: &[f64], t: usize, lambda: &[f64; 3]) -> f64 {
        self.element
            .values(lambda)
            .iter()
            .zip(self.dofs(t))
            .map(|(v, &g)| v * coeffs[g])
            .sum()
    }

    pub fn gradient(&self, coeffs: &[f64], t: usize, lambda: &[f64; 3]) -> Point {
        let grads = self.local_gradients(t, &self.element.barycentric_derivatives(lambda));
        let mut out = [0.0; 2];
        for (g, &dof) in grads.iter().zip(self.dofs(t)) {
            out[0] += g[0] * coeffs[dof];
            out[1] += g[1] * coeffs[dof];
        }
        out
    }

    /// `Curl β = (∂β/∂y, -∂β/∂x)` at a point of triangle `t`.
    pub fn curl(&self, coeffs: &[f64], t: usize, lambda: &[f64; 3]) -> Point {
        let g = self.gradient(coeffs, t, lambda);
        [g[1], -g[0]]
    }

    /// `∫_Ω β_h dx`.
    pub fn integral(&self, coeffs: &[f64]) -> Result<f64> {
        self.check(coeffs)?;
        let rule = TriangleRule::new(self.element.degree.max(1))?;
        let table = self.tabulate(&rule);
        let mut total = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let dofs = self.dofs(t);
            let mut s = 0.0;
            for (q, w) in rule.weights.iter().enumerate() {
                let v: f64 = table.values[q].iter().zip(dofs).map(|(b, &g)| b * coeffs[g]).sum();
                s += w * v;
            }
            total += self.mesh.area(t) * s;
        }
        Ok(total)
    }

    /// Subtracts the integral mean; nodal bases reproduce constants, so this
    /// shifts every coefficient by the same amount.
    pub fn normalize_mean(&self, coeffs: &mut [f64]) -> Result<()> {
        let mean = self.integral(coeffs)? / self.mesh.domain_area();
        coeffs.iter_mut().for_each(|c| *c -= mean);
        Ok(())
    }
}
