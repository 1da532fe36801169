//! Benchmark problems on the L-shaped domain and the unit square, with
//! uniform and adaptive drivers and CSV output.

use crate::adapt::{afem_loop, solve_level, tail_rate, AfemConfig, AfemRecord, ProblemData};
use crate::error::{FemError, Result};
use crate::mesh::{Point, Triangulation};
use crate::spaces::VectorField;
use crate::system::SolveOptions;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    /// Harmonic corner singularity with inhomogeneous Dirichlet data, `φ = 0`.
    LshapeDirichlet,
    /// `f = -1` with `φ = (x, y)/2` and homogeneous Dirichlet data.
    LshapeConst,
    /// Smooth `u` with a singular Curl part added to `φ`.
    SingularAlpha,
    /// Smooth solution on the unit square.
    SquareSmooth,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 4] = [
        ExperimentId::LshapeDirichlet,
        ExperimentId::LshapeConst,
        ExperimentId::SingularAlpha,
        ExperimentId::SquareSmooth,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::LshapeDirichlet => "lshape-dirichlet",
            ExperimentId::LshapeConst => "lshape-const",
            ExperimentId::SingularAlpha => "singular-alpha",
            ExperimentId::SquareSmooth => "square-smooth",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| FemError::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Uniform,
    Adaptive,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Uniform => "uniform",
            Mode::Adaptive => "adaptive",
        })
    }
}

impl FromStr for Mode {
    type Err = FemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Mode::Uniform),
            "adaptive" => Ok(Mode::Adaptive),
            other => Err(FemError::Precondition(format!("unknown mode '{other}'"))),
        }
    }
}

/// Polar coordinates on the L-shaped domain, angle in `[0, 2π)`.
pub fn polar(p: Point) -> (f64, f64) {
    let r = p[0].hypot(p[1]);
    let mut t = p[1].atan2(p[0]);
    if t < 0.0 {
        t += 2.0 * PI;
    }
    (r, t)
}

/// `r^{2/3} sin(2θ/3)`.
pub fn corner_singularity(p: Point) -> f64 {
    let (r, t) = polar(p);
    r.powf(2.0 / 3.0) * (2.0 * t / 3.0).sin()
}

/// Gradient of [`corner_singularity`]; unbounded at the origin.
pub fn corner_singularity_gradient(p: Point) -> Point {
    let (r, t) = polar(p);
    let c = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
    [-c * (t / 3.0).sin(), c * (t / 3.0).cos()]
}

/// Radial cut-off: 0 for `r ≤ 1/2`, 1 for `r ≥ 1`, a quartic in between.
pub fn cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        0.0
    } else if r >= 1.0 {
        1.0
    } else {
        (((16.0 * r - 64.0) * r + 88.0) * r - 48.0) * r + 9.0
    }
}

pub fn cutoff_derivative(r: f64) -> f64 {
    if r <= 0.5 || r >= 1.0 {
        0.0
    } else {
        ((64.0 * r - 192.0) * r + 176.0) * r - 48.0
    }
}

/// `∇(g u)` for the cut-off `g` and the corner singularity `u`.
pub fn dirichlet_lift_gradient(p: Point) -> Point {
    let r = p[0].hypot(p[1]);
    if r <= 0.5 {
        return [0.0, 0.0];
    }
    let g = cutoff(r);
    let dg = cutoff_derivative(r);
    let u = corner_singularity(p);
    let du = corner_singularity_gradient(p);
    [g * du[0] + u * dg * p[0] / r, g * du[1] + u * dg * p[1] / r]
}

/// Problem definition with its initial mesh.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: ExperimentId,
    pub initial: Triangulation,
    pub data: ProblemData,
}

impl Experiment {
    pub fn new(id: ExperimentId) -> Self {
        let (initial, data) = match id {
            ExperimentId::LshapeDirichlet => (
                Triangulation::lshape(),
                ProblemData {
                    phi: VectorField::zero(),
                    grad_ud: Some(VectorField::new(dirichlet_lift_gradient).with_radial_kinks(&[0.5, 1.0])),
                    p_exact: Some(VectorField::new(corner_singularity_gradient)),
                    curl_alpha_exact: None,
                },
            ),
            ExperimentId::LshapeConst => (
                Triangulation::lshape(),
                ProblemData::new(VectorField::polynomial(1, |p| [p[0] / 2.0, p[1] / 2.0])),
            ),
            ExperimentId::SingularAlpha => {
                let grad_u = |p: Point| {
                    [
                        PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
                        PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
                    ]
                };
                // Curl α̃ = (∂₂α̃, -∂₁α̃) for α̃ = r^{2/3} sin(2θ/3)
                let curl = |p: Point| {
                    let g = corner_singularity_gradient(p);
                    [g[1], -g[0]]
                };
                (
                    Triangulation::lshape(),
                    ProblemData {
                        phi: VectorField::new(move |p| {
                            let a = grad_u(p);
                            let b = curl(p);
                            [a[0] + b[0], a[1] + b[1]]
                        }),
                        grad_ud: None,
                        p_exact: Some(VectorField::new(grad_u)),
                        curl_alpha_exact: Some(VectorField::new(curl)),
                    },
                )
            }
            ExperimentId::SquareSmooth => {
                let grad_u = |p: Point| {
                    [
                        PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
                        PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
                    ]
                };
                let phi = |p: Point| [2.0 * PI * (PI * p[1]).sin() * ((PI * p[0]).cos() - 1.0), 0.0];
                (
                    Triangulation::unit_square(),
                    ProblemData {
                        phi: VectorField::new(phi),
                        grad_ud: None,
                        p_exact: Some(VectorField::new(grad_u)),
                        curl_alpha_exact: Some(VectorField::new(move |p| {
                            let a = phi(p);
                            let b = grad_u(p);
                            [a[0] - b[0], a[1] - b[1]]
                        })),
                    },
                )
            }
        };
        Experiment { id, initial, data }
    }
}

/// Red-refinement history, stopping after the first level with
/// `ndof ≥ max_ndof` or after `max_levels` levels.
pub fn run_uniform(
    exp: &Experiment,
    k: usize,
    max_ndof: usize,
    max_levels: usize,
    options: &SolveOptions,
) -> Result<Vec<AfemRecord>> {
    let mut mesh = exp.initial.clone();
    let mut records = Vec::new();
    for level in 0..max_levels {
        let out = solve_level(&mesh, k, &exp.data, options)?;
        records.push(AfemRecord {
            level,
            ndof: out.solution.ndof,
            card_t: mesh.num_triangles(),
            lambda: out.report.lambda(),
            mu: out.report.mu(),
            error: out.error,
            curl_error: out.curl_error,
            branch: None,
        });
        if out.solution.ndof >= max_ndof {
            break;
        }
        mesh = mesh.red_refine();
    }
    Ok(records)
}

pub fn run_adaptive(exp: &Experiment, config: &AfemConfig) -> Result<Vec<AfemRecord>> {
    Ok(afem_loop(&exp.initial, &exp.data, config)?.records)
}

pub const CSV_HEADER: &str = "experiment,mode,k,level,ndof,card_T,error,lambda,mu,branch";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(
    out: &mut W,
    id: ExperimentId,
    mode: Mode,
    k: usize,
    records: &[AfemRecord],
) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:e},{:e},{}",
            id,
            mode,
            k,
            r.level,
            r.ndof,
            r.card_t,
            opt(r.error),
            r.lambda,
            r.mu,
            r.branch.map(|b| b.to_string()).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Number of trailing levels used for rate fits.
pub fn rate_window(mode: Mode) -> usize {
    match mode {
        Mode::Uniform => 3,
        Mode::Adaptive => 5,
    }
}

/// Rate of the error, or of `λ` when no exact solution is known.
pub fn summary_rate(records: &[AfemRecord], mode: Mode) -> Option<(&'static str, f64)> {
    let n = rate_window(mode);
    if records.iter().all(|r| r.error.is_some()) {
        tail_rate(records, n, |r| r.error).map(|s| ("error", s))
    } else {
        tail_rate(records, n, |r| Some(r.lambda)).map(|s| ("lambda", s))
    }
}
