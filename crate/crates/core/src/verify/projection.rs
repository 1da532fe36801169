//! Projection property: `Π_k ∇v ⊥ Curl Y_h` for conforming `v` with zero trace.

use crate::error::{FemError, Result};
use crate::mesh::Triangulation;
use crate::quadrature::TriangleRule;
use crate::spaces::{XhSpace, YhSpace};
use crate::system::{assemble_curl_curl, rhs_from_coefficients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random `v ∈ P_{k+1}(T) ∩ H¹₀(Ω)` given by its Y_h coefficients.
pub fn random_conforming(y: &YhSpace, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..y.dim())
        .map(|i| if y.is_boundary_dof(i) { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect()
}

/// Projects the piecewise gradient of `v` (living on `fine`) onto X_h of
/// `coarse`, integrating exactly over the fine triangles.
fn project_gradient(coarse: &XhSpace, fine: &YhSpace, v: &[f64]) -> Result<Vec<f64>> {
    let ancestors = coarse.mesh().ancestors_in(fine.mesh())?;
    let rule = TriangleRule::new((2 * coarse.k()).max(1))?;
    let d = coarse.local_dim();
    let mut out = vec![0.0; coarse.dim()];
    for (t, &parent) in ancestors.iter().enumerate() {
        let area = fine.mesh().area(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let g = fine.gradient(v, t, l);
            let x = fine.mesh().point(t, l);
            let psi = coarse.basis_values(parent, &coarse.barycentric_of(parent, x));
            for i in 0..d {
                out[coarse.index(parent, 0, i)] += area * w * psi[i] * g[0];
                out[coarse.index(parent, 1, i)] += area * w * psi[i] * g[1];
            }
        }
    }
    Ok(out)
}

/// `max_β |(Π_k ∇v, Curl β)| / (‖∇v‖ ‖Curl β‖)` over the Y_h basis of
/// `coarse`, where `v` is a conforming function on `fine` (a refinement of
/// `coarse`, possibly equal to it).
pub fn projection_residual(coarse: &Triangulation, fine: &Triangulation, k: usize, v: &[f64]) -> Result<f64> {
    let yf = YhSpace::new(fine, k);
    if v.len() != yf.dim() {
        return Err(FemError::DimensionMismatch {
            expected: yf.dim(),
            found: v.len(),
        });
    }
    let x = XhSpace::new(coarse, k);
    let y = YhSpace::new(coarse, k);
    let pg = project_gradient(&x, &yf, v)?;
    let grad_norm = assemble_curl_curl(&yf).matvec(v).iter().zip(v).map(|(a, b)| a * b).sum::<f64>().sqrt();
    if grad_norm == 0.0 {
        return Ok(0.0);
    }
    let b = rhs_from_coefficients(&x, &y, &pg)?;
    let diag = assemble_curl_curl(&y).diagonal();
    Ok(b.iter()
        .zip(&diag)
        .map(|(bi, d)| bi.abs() / (grad_norm * d.sqrt()))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_function() {
        let mesh = Triangulation::lshape();
        let y = YhSpace::new(&mesh, 1);
        assert_eq!(projection_residual(&mesh, &mesh, 1, &vec![0.0; y.dim()]).unwrap(), 0.0);
    }

    #[test]
    fn same_seed_same_field() {
        let mesh = Triangulation::lshape().red_refine();
        let y = YhSpace::new(&mesh, 2);
        assert_eq!(random_conforming(&y, 3), random_conforming(&y, 3));
        assert_ne!(random_conforming(&y, 3), random_conforming(&y, 4));
    }

    #[test]
    fn nonconforming_field_is_detected() {
        // a discrete function that does not vanish on the boundary is not in H¹₀
        let mesh = Triangulation::lshape().red_refine();
        let y = YhSpace::new(&mesh, 0);
        let v = y.interpolate(|p| p[0] + 2.0 * p[1]);
        assert!(projection_residual(&mesh, &mesh, 0, &v).unwrap() > 1e-3);
    }
}
