//! Independent oracles for the structural properties of the discretisation.

mod cr;
mod decomposition;
mod projection;

pub use cr::{cr_deviation, cr_solve, dense_solve, lowest_order_rt_divergence, CrSpace};
pub use decomposition::{check_square_decomposition, check_triangle_decomposition, DecompositionReport};
pub use projection::{projection_residual, random_conforming};

use crate::error::Result;
use crate::mesh::{SquarePartition, Triangulation};
use crate::quadrature::TriangleRule;
use crate::spaces::{VectorField, XhSpace, YhSpace};
use crate::system::{solve_mixed, SolveOptions};

/// Residuals of the two identities every discrete solution satisfies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identities {
    /// `|‖p_h‖² + ‖Curl α_h‖² - ‖Π_k φ‖²| / ‖Π_k φ‖²`.
    pub pythagoras: f64,
    /// Largest pointwise `|p_h + Curl α_h - Π_k φ|`, with `Curl α_h` taken
    /// from the Lagrange representation rather than from X_h coefficients.
    pub strong: f64,
}

/// Solves with homogeneous boundary data and measures both identities.
pub fn check_identities(mesh: &Triangulation, k: usize, phi: &VectorField) -> Result<Identities> {
    let sol = solve_mixed(mesh, k, phi, None, &SolveOptions::default())?;
    let x = XhSpace::new(mesh, k);
    let y = YhSpace::new(mesh, k);
    let pi = x.norm(&sol.pi_phi)?.powi(2);
    let pythagoras = if pi == 0.0 {
        0.0
    } else {
        (x.norm(&sol.p)?.powi(2) + x.norm(&sol.curl_alpha)?.powi(2) - pi).abs() / pi
    };
    let rule = TriangleRule::new(2 * k + 2)?;
    let mut strong: f64 = 0.0;
    for t in 0..mesh.num_triangles() {
        for l in &rule.points {
            let p = x.evaluate(&sol.p, t, l);
            let c = y.curl(&sol.alpha, t, l);
            let q = x.evaluate(&sol.pi_phi, t, l);
            strong = strong.max((p[0] + c[0] - q[0]).abs()).max((p[1] + c[1] - q[1]).abs());
        }
    }
    Ok(Identities { pythagoras, strong })
}

/// Largest projection residual over `count` random conforming fields built
/// on `fine` and tested against the Curl basis of `coarse`.
pub fn check_projection_property(
    coarse: &Triangulation,
    fine: &Triangulation,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let y = YhSpace::new(fine, k);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let v = random_conforming(&y, seed.wrapping_add(i as u64));
        worst = worst.max(projection_residual(coarse, fine, k, &v)?);
    }
    Ok(worst)
}

/// Largest `|p_h - ∇_NC u_CR|` for k = 0. With `fault` set, `p_h` is
/// perturbed by `1e-3` on the first triangle before comparing.
pub fn check_cr_equivalence(mesh: &Triangulation, phi: &VectorField, fault: bool) -> Result<f64> {
    let sol = solve_mixed(mesh, 0, phi, None, &SolveOptions::default())?;
    let mut p = sol.p;
    if fault {
        // the P0 basis value is 1/sqrt|T|
        p[0] += 1e-3 * mesh.area(0).sqrt();
    }
    cr_deviation(mesh, &p, phi)
}

/// Datum whose divergence is piecewise constant, used by the CR checks.
pub fn cr_datum() -> VectorField {
    VectorField::polynomial(1, |p| [p[0] / 2.0, p[1] / 2.0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn push(&mut self, name: String, value: f64, tol: f64) {
        self.checks.push(Check {
            name,
            passed: value <= tol,
            detail: format!("{value:.3e} (tol {tol:.0e})"),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every oracle on the standard mesh set: the L-shape and its red
/// refinements, and 2×2, 4×4 and 8×8 square partitions.
pub fn verify_all(inject_fault: bool) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let t0 = Triangulation::lshape();
    let meshes = [t0.clone(), t0.red_refine(), t0.red_refine_times(2)];
    let smooth = VectorField::new(|p| [(3.0 * p[1]).sin() + p[0] * p[0], (2.0 * p[0]).cos() * p[1]]);

    for (level, mesh) in meshes.iter().enumerate() {
        for k in 0..=2 {
            let id = check_identities(mesh, k, &smooth)?;
            report.push(format!("pythagoras level {level} k={k}"), id.pythagoras, 1e-9);
            report.push(format!("strong equation level {level} k={k}"), id.strong, 1e-10);
            let r = check_projection_property(mesh, mesh, k, 20, 17 + level as u64)?;
            report.push(format!("projection level {level} k={k}"), r, 1e-12);
        }
    }
    for k in 0..=2 {
        let r = check_projection_property(&meshes[0], &meshes[2], k, 5, 99)?;
        report.push(format!("two-level projection k={k}"), r, 1e-12);
    }

    let datum = cr_datum();
    for (level, mesh) in [&meshes[0], &meshes[2], &t0.red_refine_times(4)].iter().enumerate() {
        let d = check_cr_equivalence(mesh, &datum, inject_fault)?;
        report.push(format!("CR equivalence mesh {level}"), d, 1e-9);
    }

    for (level, mesh) in meshes.iter().enumerate() {
        let r = check_triangle_decomposition(mesh)?;
        report.checks.push(decomposition_check(format!("triangle decomposition level {level}"), &r));
    }
    for n in [2, 4, 8] {
        let sq = SquarePartition::new(n, n, [[0.0, 0.0], [1.0, 1.0]]);
        let r = check_square_decomposition(&sq)?;
        report.checks.push(decomposition_check(format!("square decomposition {n}x{n}"), &r));
    }
    Ok(report)
}

fn decomposition_check(name: String, r: &DecompositionReport) -> Check {
    Check {
        name,
        passed: r.holds(1e-12),
        detail: format!(
            "{} = {} + {}, gram {:.3e}, rank {}",
            r.dim_total, r.dim_gradients, r.dim_curls, r.gram_block, r.rank
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_datum_has_zero_cr_deviation() {
        let mesh = Triangulation::lshape().red_refine();
        let d = check_cr_equivalence(&mesh, &VectorField::constant([1.0, -2.0]), false).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn fault_is_detected() {
        let mesh = Triangulation::lshape();
        assert!(check_cr_equivalence(&mesh, &cr_datum(), false).unwrap() < 1e-9);
        assert!(check_cr_equivalence(&mesh, &cr_datum(), true).unwrap() > 1e-4);
    }
}
