//! Discrete spaces: discontinuous vector fields `X_h = P_k(T; R²)` and the
//! continuous Lagrange space `Y_h = P_{k+1}(T) ∩ H¹ ∩ L²₀`.

mod field;
mod lagrange;
mod vector;

pub use field::{ScalarField, VectorField};
pub use lagrange::{LagrangeElement, YhSpace};
pub use vector::XhSpace;

use crate::error::Result;
use crate::mesh::{Point, Triangulation};
use crate::quadrature::TriangleRule;

/// Default quadrature exactness used for data integrals: `max(2k + 2, 8)`.
pub fn default_quad_degree(k: usize) -> usize {
    (2 * k + 2).max(8)
}

/// Per-triangle integrals of `f` with a rule exact to degree `quad_degree`.
pub fn integrate<F>(mesh: &Triangulation, quad_degree: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(Point) -> f64,
{
    let rule = TriangleRule::new(quad_degree)?;
    Ok((0..mesh.num_triangles())
        .map(|t| {
            let area = mesh.area(t);
            area * rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(l, w)| w * f(mesh.point(t, l)))
                .sum::<f64>()
        })
        .collect())
}

/// `∫_Ω f` with a rule exact to degree `quad_degree` on every triangle.
pub fn integrate_total<F>(mesh: &Triangulation, quad_degree: usize, f: F) -> Result<f64>
where
    F: Fn(Point) -> f64,
{
    Ok(integrate(mesh, quad_degree, f)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_reference_monomials() {
        let mesh = Triangulation::reference_triangle();
        assert!((integrate_total(&mesh, 1, |_| 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((integrate_total(&mesh, 2, |p| p[0] * p[0]).unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn integrates_smooth_function_on_square() {
        let mesh = Triangulation::unit_square();
        let v = integrate_total(&mesh, 20, |p| (PI * p[0]).sin() * (PI * p[1]).sin()).unwrap();
        assert!((v - 4.0 / (PI * PI)).abs() < 1e-10, "{v}");
    }

    #[test]
    fn rejects_degree_zero() {
        assert!(integrate(&Triangulation::unit_square(), 0, |_| 1.0).is_err());
    }
}
