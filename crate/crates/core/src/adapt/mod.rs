//! Adaptive algorithm with separate marking.
//!
//! Each level solves, estimates `λ_ℓ` and `μ_ℓ`, and then either applies
//! Dörfler marking on `λ²` (when `μ_ℓ² ≤ κ λ_ℓ²`) or reduces the data
//! oscillation below `ρ_B μ_ℓ²` and overlays the result with the current mesh.

use crate::error::{FemError, Result};
use crate::estimator::{estimate, exact_error, oscillation_datum, oscillation_rule, triangle_mu2, EstimatorReport};
use crate::mesh::Triangulation;
use crate::spaces::{VectorField, XhSpace};
use crate::system::{solve_mixed, DiscreteSolution, LinearSolver, SolveOptions};
use crate::quadrature::TriangleRule;
use std::collections::HashMap;
use std::fmt;

/// Data of one Poisson problem in the Helmholtz formulation.
#[derive(Debug, Clone)]
pub struct ProblemData {
    /// Any field with `-div φ = f`.
    pub phi: VectorField,
    /// Gradient of the Dirichlet lift, for inhomogeneous boundary data.
    pub grad_ud: Option<VectorField>,
    /// Exact `p = ∇u`, when known.
    pub p_exact: Option<VectorField>,
    /// Exact `Curl α`, when known.
    pub curl_alpha_exact: Option<VectorField>,
}

impl ProblemData {
    pub fn new(phi: VectorField) -> Self {
        ProblemData {
            phi,
            grad_ud: None,
            p_exact: None,
            curl_alpha_exact: None,
        }
    }
}

/// Marking branch taken after a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Doerfler,
    Data,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Doerfler => "doerfler",
            Branch::Data => "data",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfemConfig {
    pub k: usize,
    pub theta: f64,
    pub kappa: f64,
    pub rho: f64,
    /// Stop once a level reaches this many degrees of freedom.
    pub max_ndof: usize,
    pub max_levels: usize,
    pub quad_degree: Option<usize>,
    pub solver: LinearSolver,
}

impl AfemConfig {
    pub fn new(k: usize) -> Self {
        AfemConfig {
            k,
            theta: 0.1,
            kappa: 0.5,
            rho: 0.75,
            max_ndof: 200_000,
            max_levels: 40,
            quad_degree: None,
            solver: LinearSolver::Direct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(FemError::Precondition(format!("theta = {} not in (0, 1]", self.theta)));
        }
        if !(self.kappa > 0.0) {
            return Err(FemError::Precondition(format!("kappa = {} must be positive", self.kappa)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(FemError::Precondition(format!("rho = {} not in (0, 1)", self.rho)));
        }
        if self.max_levels == 0 {
            return Err(FemError::Precondition("max_levels must be at least one".into()));
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            solver: self.solver,
            quad_degree: self.quad_degree,
        }
    }
}

/// One row of a convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct AfemRecord {
    pub level: usize,
    pub ndof: usize,
    pub card_t: usize,
    pub lambda: f64,
    pub mu: f64,
    /// `‖p - p_h‖` when the exact gradient is known.
    pub error: Option<f64>,
    /// `‖Curl(α - α_h)‖` when the exact Curl part is known.
    pub curl_error: Option<f64>,
    /// Branch chosen by the guard `μ² ≤ κ λ²`; `None` for uniform runs.
    pub branch: Option<Branch>,
}

/// Everything computed on one mesh.
#[derive(Debug, Clone)]
pub struct LevelOutput {
    pub solution: DiscreteSolution,
    pub report: EstimatorReport,
    pub error: Option<f64>,
    pub curl_error: Option<f64>,
}

/// Solve, estimate and measure errors on `mesh`.
pub fn solve_level(mesh: &Triangulation, k: usize, data: &ProblemData, options: &SolveOptions) -> Result<LevelOutput> {
    let solution = solve_mixed(mesh, k, &data.phi, data.grad_ud.as_ref(), options)?;
    let x = XhSpace::new(mesh, k);
    let quad = options.quad_degree_for(k);
    let report = estimate(&x, &solution.p, &data.phi, data.grad_ud.as_ref(), quad)?;
    let error = data
        .p_exact
        .as_ref()
        .map(|p| exact_error(&x, &solution.p, p, quad))
        .transpose()?;
    let curl_error = data
        .curl_alpha_exact
        .as_ref()
        .map(|c| exact_error(&x, &solution.curl_alpha, c, quad))
        .transpose()?;
    Ok(LevelOutput {
        solution,
        report,
        error,
        curl_error,
    })
}

/// Minimal set `M` with `θ Σ λ² ≤ Σ_{T∈M} λ²(T)`.
///
/// Candidates are taken in order of decreasing `λ²(T)`, ties by increasing
/// triangle id, which makes the prefix minimal in cardinality.
pub fn doerfler_mark(lambda2: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(FemError::Precondition(format!("theta = {theta} not in (0, 1]")));
    }
    let mut order: Vec<usize> = (0..lambda2.len()).collect();
    order.sort_by(|&a, &b| lambda2[b].total_cmp(&lambda2[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&t| lambda2[t]).sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let goal = theta * total;
    let mut marked = Vec::new();
    let mut sum = 0.0;
    for t in order {
        if sum >= goal || lambda2[t] <= 0.0 {
            break;
        }
        sum += lambda2[t];
        marked.push(t);
    }
    Ok(marked)
}

/// Maximum number of greedy rounds in [`data_mark`].
pub const DATA_MARK_MAX_ROUNDS: usize = 200;

/// Refines `mesh` until `Σ μ² ≤ ρ Σ mu2`.
///
/// Each round bisects the largest contributions carrying the remaining
/// excess `Σ μ² - ρ Σ mu2` (so the target is approached from above without
/// refining much more than needed), completes the mesh and re-evaluates `μ²`
/// through `mu2_of`.
pub fn data_mark<F>(mesh: &Triangulation, mu2: &[f64], rho: f64, mut mu2_of: F) -> Result<Triangulation>
where
    F: FnMut(&Triangulation) -> Result<Vec<f64>>,
{
    let start: f64 = mu2.iter().sum();
    if start <= 0.0 {
        return Err(FemError::Precondition("data marking needs positive oscillation".into()));
    }
    let target = rho * start;
    let mut current = mesh.clone();
    let mut values = mu2.to_vec();
    let mut best = start;
    let mut stalled = 0;
    let mut now = start;
    for round in 0..DATA_MARK_MAX_ROUNDS {
        let marked = doerfler_mark(&values, ((now - target) / now).clamp(1e-3, 1.0))?;
        current = current.bisect(&marked)?;
        values = mu2_of(&current)?;
        now = values.iter().sum();
        if now <= target {
            return Ok(current);
        }
        if now < best * (1.0 - 1e-12) {
            best = now;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 5 {
                return Err(FemError::DataMarkStalled {
                    rounds: round + 1,
                    mu2: now,
                    target,
                });
            }
        }
    }
    Err(FemError::DataMarkStalled {
        rounds: DATA_MARK_MAX_ROUNDS,
        mu2: values.iter().sum(),
        target,
    })
}

/// Memoised `μ²(T)`, keyed by the refinement history of each triangle, so
/// repeated evaluations during data marking only touch new triangles.
pub struct OscillationCache {
    k: usize,
    g: VectorField,
    rule: Option<TriangleRule>,
    values: HashMap<(usize, Vec<u8>), f64>,
}

impl OscillationCache {
    pub fn new(data: &ProblemData, k: usize, quad_degree: usize) -> Result<Self> {
        let g = oscillation_datum(&data.phi, data.grad_ud.as_ref());
        let rule = oscillation_rule(&g, k, quad_degree)?;
        Ok(OscillationCache {
            k,
            g,
            rule,
            values: HashMap::new(),
        })
    }

    /// Per-triangle `μ²` on `mesh`, identical to [`crate::estimator::estimate_mu`].
    pub fn mu2(&mut self, mesh: &Triangulation) -> Vec<f64> {
        let Some(rule) = &self.rule else {
            return vec![0.0; mesh.num_triangles()];
        };
        let x = XhSpace::new(mesh, self.k);
        (0..mesh.num_triangles())
            .map(|t| {
                let l = mesh.lineage(t);
                *self
                    .values
                    .entry((l.root, l.path.clone()))
                    .or_insert_with(|| triangle_mu2(&x, t, &self.g, rule))
            })
            .collect()
    }
}

/// Result of an adaptive run.
#[derive(Debug, Clone)]
pub struct AfemHistory {
    pub records: Vec<AfemRecord>,
    /// Mesh of the last recorded level.
    pub final_mesh: Triangulation,
}

/// Runs the adaptive loop starting at `initial`.
///
/// The loop stops after the first level with `ndof ≥ max_ndof`, after
/// `max_levels` levels, or when there is nothing left to mark.
pub fn afem_loop(initial: &Triangulation, data: &ProblemData, config: &AfemConfig) -> Result<AfemHistory> {
    config.validate()?;
    let options = config.solve_options();
    let quad = options.quad_degree_for(config.k);
    let mut mesh = initial.clone();
    let mut records = Vec::new();
    let mut cache = OscillationCache::new(data, config.k, quad)?;
    for level in 0..config.max_levels {
        let out = solve_level(&mesh, config.k, data, &options)?;
        let lambda2 = out.report.lambda2_total();
        let mu2 = out.report.mu2_total();
        let branch = if mu2 <= config.kappa * lambda2 {
            Branch::Doerfler
        } else {
            Branch::Data
        };
        records.push(AfemRecord {
            level,
            ndof: out.solution.ndof,
            card_t: mesh.num_triangles(),
            lambda: lambda2.sqrt(),
            mu: mu2.sqrt(),
            error: out.error,
            curl_error: out.curl_error,
            branch: Some(branch),
        });
        if out.solution.ndof >= config.max_ndof || level + 1 == config.max_levels {
            break;
        }
        if lambda2 == 0.0 && mu2 == 0.0 {
            break;
        }
        let next = match branch {
            Branch::Doerfler => {
                let marked = doerfler_mark(&out.report.lambda2, config.theta)?;
                if marked.is_empty() {
                    break;
                }
                mesh.bisect(&marked)?
            }
            Branch::Data => {
                let data_mesh = data_mark(&mesh, &out.report.mu2, config.rho, |m| Ok(cache.mu2(m)))?;
                mesh.overlay(&data_mesh)?
            }
        };
        mesh = next;
    }
    Ok(AfemHistory {
        records,
        final_mesh: mesh,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Slope over the last `n` records of `value` against ndof.
pub fn tail_rate(records: &[AfemRecord], n: usize, value: impl Fn(&AfemRecord) -> Option<f64>) -> Option<f64> {
    let tail = &records[records.len().saturating_sub(n)..];
    let pts: Option<Vec<(f64, f64)>> = tail.iter().map(|r| value(r).map(|v| (r.ndof as f64, v))).collect();
    loglog_slope(&pts?)
}
