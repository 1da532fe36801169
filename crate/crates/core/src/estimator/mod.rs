//! Residual error estimator `λ`, data oscillation `μ` and exact errors.
//!
//! ```text
//! λ²(T) = ‖h_T curl_NC p_h‖²_T + h_T Σ_{E ∈ E(T)} ‖[p_h]_E · τ_E‖²_E
//! μ²(T) = ‖g - Π_k g‖²_T,            g = φ - ∇u_D
//! ```
//! with `h_T = |T|^{1/2}`. On boundary edges the jump is `p_h·τ_E - ∇u_D·τ_E`.

use crate::error::{FemError, Result};
use crate::mesh::Point;
use crate::quadrature::{circle_meets_triangle, polar_rule, LineRule, TriangleRule};
use crate::spaces::{VectorField, XhSpace};

/// Local and total estimator contributions on one mesh.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub k: usize,
    pub lambda2: Vec<f64>,
    pub mu2: Vec<f64>,
}

impl EstimatorReport {
    pub fn lambda2_total(&self) -> f64 {
        self.lambda2.iter().sum()
    }

    pub fn mu2_total(&self) -> f64 {
        self.mu2.iter().sum()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda2_total().sqrt()
    }

    pub fn mu(&self) -> f64 {
        self.mu2_total().sqrt()
    }

    /// `sqrt(λ² + μ²)`.
    pub fn combined(&self) -> f64 {
        (self.lambda2_total() + self.mu2_total()).sqrt()
    }
}

/// Gauss–Legendre rule used for edge jumps: `k + 3` points.
pub fn edge_rule(k: usize) -> LineRule {
    LineRule::gauss_legendre(k + 3)
}

fn check(x: &XhSpace, p: &[f64]) -> Result<()> {
    if p.len() != x.dim() {
        return Err(FemError::DimensionMismatch {
            expected: x.dim(),
            found: p.len(),
        });
    }
    Ok(())
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Per-triangle `λ²(T)` for a discrete field `p` in X_h.
pub fn estimate_lambda(x: &XhSpace, p: &[f64], grad_ud: Option<&VectorField>) -> Result<Vec<f64>> {
    check(x, p)?;
    let mesh = x.mesh();
    let rule = TriangleRule::new((2 * x.k()).max(1))?;
    let mut out: Vec<f64> = (0..mesh.num_triangles())
        .map(|t| {
            let area = mesh.area(t);
            let volume: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(l, w)| w * x.curl_nc(p, t, l).powi(2))
                .sum::<f64>()
                * area;
            // h_T² ‖curl‖² with h_T² = |T|
            area * volume
        })
        .collect();

    let line = edge_rule(x.k());
    for edge in mesh.edges() {
        let a = mesh.vertices()[edge.vertices[0]];
        let b = mesh.vertices()[edge.vertices[1]];
        let mut jump2 = 0.0;
        for (&s, &w) in line.points.iter().zip(&line.weights) {
            let pt = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let plus = x.evaluate(p, edge.plus, &x.barycentric_of(edge.plus, pt));
            let other = match edge.minus {
                Some(m) => x.evaluate(p, m, &x.barycentric_of(m, pt)),
                None => grad_ud.map_or([0.0, 0.0], |g| g.eval(pt)),
            };
            let j = dot([plus[0] - other[0], plus[1] - other[1]], edge.tangent);
            jump2 += w * j * j;
        }
        jump2 *= edge.length;
        out[edge.plus] += mesh.h(edge.plus) * jump2;
        if let Some(m) = edge.minus {
            out[m] += mesh.h(m) * jump2;
        }
    }
    Ok(out)
}

/// The oscillation datum `g = φ - ∇u_D`.
pub fn oscillation_datum(phi: &VectorField, grad_ud: Option<&VectorField>) -> VectorField {
    match grad_ud {
        Some(lift) => phi.minus(lift),
        None => phi.clone(),
    }
}

/// Triangle rule for `μ²`, or `None` when `g ∈ P_k` and μ vanishes.
pub fn oscillation_rule(g: &VectorField, k: usize, quad_degree: usize) -> Result<Option<TriangleRule>> {
    match g.degree {
        Some(d) if d <= k => Ok(None),
        Some(d) => TriangleRule::new((d + k).max(2 * d).max(1)).map(Some),
        None => TriangleRule::new(quad_degree).map(Some),
    }
}

/// Gauss points per direction of the polar rule on triangles cut by a kink.
const POLAR_POINTS: usize = 16;

/// `μ²(T) = ‖g - Π_k g‖²_T` on one triangle. Triangles met by one of the
/// field's kink circles are integrated with a polar rule split at the kinks.
pub fn triangle_mu2(x: &XhSpace, t: usize, g: &VectorField, rule: &TriangleRule) -> f64 {
    let mesh = x.mesh();
    let corners = mesh.corners(t);
    let points: Vec<(Point, f64)> = if g.radial_kinks.iter().any(|&r| circle_meets_triangle(corners, r)) {
        polar_rule(corners, &g.radial_kinks, POLAR_POINTS)
    } else {
        let area = mesh.area(t);
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(l, w)| (mesh.point(t, l), area * w))
            .collect()
    };
    let samples: Vec<(Vec<f64>, Point, f64)> = points
        .into_iter()
        .map(|(pt, w)| (x.basis_values(t, &x.barycentric_of(t, pt)), g.eval(pt), w))
        .collect();
    let d = x.local_dim();
    let mut c = vec![[0.0; 2]; d];
    for (psi, v, w) in &samples {
        for i in 0..d {
            c[i][0] += w * psi[i] * v[0];
            c[i][1] += w * psi[i] * v[1];
        }
    }
    samples
        .iter()
        .map(|(psi, v, w)| {
            let mut e = *v;
            for i in 0..d {
                e[0] -= c[i][0] * psi[i];
                e[1] -= c[i][1] * psi[i];
            }
            w * (e[0] * e[0] + e[1] * e[1])
        })
        .sum()
}

/// Per-triangle `μ²(T) = ‖g - Π_k g‖²_T` with `g = φ - ∇u_D`.
pub fn estimate_mu(
    x: &XhSpace,
    phi: &VectorField,
    grad_ud: Option<&VectorField>,
    quad_degree: usize,
) -> Result<Vec<f64>> {
    let g = oscillation_datum(phi, grad_ud);
    let n = x.mesh().num_triangles();
    Ok(match oscillation_rule(&g, x.k(), quad_degree)? {
        None => vec![0.0; n],
        Some(rule) => (0..n).map(|t| triangle_mu2(x, t, &g, &rule)).collect(),
    })
}

/// Both estimators for a discrete field `p`.
pub fn estimate(
    x: &XhSpace,
    p: &[f64],
    phi: &VectorField,
    grad_ud: Option<&VectorField>,
    quad_degree: usize,
) -> Result<EstimatorReport> {
    Ok(EstimatorReport {
        k: x.k(),
        lambda2: estimate_lambda(x, p, grad_ud)?,
        mu2: estimate_mu(x, phi, grad_ud, quad_degree)?,
    })
}

/// `‖f - q_h‖_{L²(Ω)}` for a discrete field `q_h`.
pub fn exact_error(x: &XhSpace, q: &[f64], exact: &VectorField, quad_degree: usize) -> Result<f64> {
    Ok(x.squared_distance(q, quad_degree, |pt| exact.eval(pt))?
        .iter()
        .sum::<f64>()
        .sqrt())
}
