//! Gauss rules on the unit interval and on triangles.
//!
//! Triangle rules are conical products of Gauss–Legendre rules mapped through
//! the collapsed (Duffy) coordinates, so any exactness degree can be produced
//! on demand. Points are expressed in barycentric coordinates and weights sum
//! to one, i.e. `∫_T f ≈ |T| Σ w_q f(x_q)`.

use crate::error::FemError;
use std::f64::consts::PI;

/// Highest polynomial exactness degree accepted for triangle rules.
pub const MAX_TRIANGLE_DEGREE: usize = 40;

/// Gauss–Legendre rule on `[0, 1]` (weights sum to one).
#[derive(Debug, Clone)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        LineRule { points, weights }
    }

    /// Smallest Gauss rule exact for degree `degree`.
    pub fn with_degree(degree: usize) -> Self {
        Self::gauss_legendre(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on a triangle in barycentric coordinates.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Rule exact for all polynomials of total degree `degree`.
    pub fn new(degree: usize) -> Result<Self, FemError> {
        if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
            return Err(FemError::UnsupportedQuadrature(degree));
        }
        // The collapsed map contributes a factor (1 - s), raising the degree by one
        // in the s-direction.
        let rs = LineRule::with_degree(degree);
        let rt = LineRule::with_degree(degree + 1);
        let mut points = Vec::with_capacity(rs.len() * rt.len());
        let mut weights = Vec::with_capacity(rs.len() * rt.len());
        for (&s, &ws) in rt.points.iter().zip(&rt.weights) {
            for (&t, &wt) in rs.points.iter().zip(&rs.weights) {
                let x = s;
                let y = (1.0 - s) * t;
                points.push([1.0 - x - y, x, y]);
                // area of the reference triangle is 1/2; normalise to 1
                weights.push(2.0 * ws * wt * (1.0 - s));
            }
        }
        Ok(TriangleRule {
            degree,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Whether the circle `|x| = radius` meets the closed triangle.
pub fn circle_meets_triangle(c: [[f64; 2]; 3], radius: f64) -> bool {
    let max = c.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    min_distance_to_origin(c) <= radius && radius <= max
}

fn min_distance_to_origin(c: [[f64; 2]; 3]) -> f64 {
    let cross = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];
    let s: Vec<f64> = (0..3).map(|i| cross(c[i], c[(i + 1) % 3])).collect();
    if s.iter().all(|&v| v >= 0.0) || s.iter().all(|&v| v <= 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|i| {
            let (a, b) = (c[i], c[(i + 1) % 3]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let t = (-(a[0] * d[0] + a[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
            (a[0] + t * d[0]).hypot(a[1] + t * d[1])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Boundary of the angular sector seen from the origin: either the origin
/// itself or the line `n · x = c` through an edge.
#[derive(Clone, Copy)]
enum Side {
    Origin,
    Line { n: [f64; 2], c: f64 },
}

impl Side {
    fn through(p: [f64; 2], q: [f64; 2]) -> Side {
        let n = [q[1] - p[1], p[0] - q[0]];
        let c = n[0] * p[0] + n[1] * p[1];
        let scale = n[0].hypot(n[1]) * p[0].hypot(p[1]).max(q[0].hypot(q[1]));
        if c.abs() <= 1e-14 * scale {
            Side::Origin
        } else {
            Side::Line { n, c }
        }
    }

    fn radius(&self, theta: f64) -> f64 {
        match *self {
            Side::Origin => 0.0,
            Side::Line { n, c } => c / (n[0] * theta.cos() + n[1] * theta.sin()),
        }
    }

    /// Angles at which the side meets the circle of radius `r`.
    fn crossings(&self, r: f64) -> Vec<f64> {
        let Side::Line { n, c } = *self else { return Vec::new() };
        let s = c / (r * n[0].hypot(n[1]));
        if s.abs() > 1.0 {
            return Vec::new();
        }
        let base = n[1].atan2(n[0]);
        let wrap = |t: f64| (t + PI).rem_euclid(2.0 * PI) - PI;
        vec![wrap(base + s.acos()), wrap(base - s.acos())]
    }
}

/// Quadrature on a triangle in polar coordinates about the origin, with the
/// radial and angular ranges split wherever a circle `|x| = r` for `r` in
/// `radii` crosses the triangle. Integrands that are smooth on each side of
/// these circles are then integrated to near machine precision.
///
/// Returns Cartesian points with absolute weights (summing to the area).
pub fn polar_rule(c: [[f64; 2]; 3], radii: &[f64], n: usize) -> Vec<([f64; 2], f64)> {
    let lengths = c.map(|v| v[0].hypot(v[1]));
    let scale = lengths.iter().cloned().fold(0.0, f64::max);
    let at_origin: Vec<bool> = lengths.iter().map(|&l| l <= 1e-14 * scale).collect();
    if !at_origin.iter().any(|&b| b) && min_distance_to_origin(c) == 0.0 {
        // origin inside or on an edge: split into cones with apex at the origin
        let o = [0.0, 0.0];
        return (0..3)
            .map(|i| (c[i], c[(i + 1) % 3]))
            .filter(|(a, b)| (a[0] * b[1] - a[1] * b[0]).abs() > 1e-14 * scale * scale)
            .flat_map(|(a, b)| polar_rule([o, a, b], radii, n))
            .collect();
    }

    // rotate so that the triangle is seen around the positive x axis
    let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
    let len = centroid[0].hypot(centroid[1]);
    let d = [centroid[0] / len, centroid[1] / len];
    let rot = |v: [f64; 2]| [d[0] * v[0] + d[1] * v[1], d[0] * v[1] - d[1] * v[0]];
    let back = |v: [f64; 2]| [d[0] * v[0] - d[1] * v[1], d[1] * v[0] + d[0] * v[1]];
    let r = c.map(rot);

    let mut others: Vec<(f64, [f64; 2])> = (0..3)
        .filter(|&i| !at_origin[i])
        .map(|i| (r[i][1].atan2(r[i][0]), r[i]))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut ranges: Vec<(f64, f64, Side, Side)> = Vec::new();
    if others.len() == 2 {
        let far = Side::through(others[0].1, others[1].1);
        ranges.push((others[0].0, others[1].0, Side::Origin, far));
    } else {
        let [(ta, a), (tb, b), (tc, cc)] = [others[0], others[1], others[2]];
        let long = Side::through(a, cc);
        for (t0, t1, short) in [(ta, tb, Side::through(a, b)), (tb, tc, Side::through(b, cc))] {
            if t1 - t0 <= 1e-15 {
                continue;
            }
            let mid = 0.5 * (t0 + t1);
            let (near, far) = if short.radius(mid) < long.radius(mid) {
                (short, long)
            } else {
                (long, short)
            };
            ranges.push((t0, t1, near, far));
        }
    }

    let line = LineRule::gauss_legendre(n);
    let mut out = Vec::new();
    for (t0, t1, near, far) in ranges {
        let mut cuts = vec![t0, t1];
        for &rad in radii {
            for side in [near, far] {
                cuts.extend(side.crossings(rad).into_iter().filter(|&t| t > t0 && t < t1));
            }
        }
        // wide sectors make r(θ) far from polynomial, so cap the panel width
        let pieces = ((t1 - t0) / 0.2).ceil().max(1.0) as usize;
        cuts.extend((1..pieces).map(|i| t0 + (t1 - t0) * i as f64 / pieces as f64));
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            for (x, wx) in line.points.iter().zip(&line.weights) {
                let theta = a + (b - a) * x;
                let wt = (b - a) * wx;
                let (r0, r1) = (near.radius(theta), far.radius(theta));
                let mut knots = vec![r0, r1];
                knots.extend(radii.iter().cloned().filter(|&rad| rad > r0 && rad < r1));
                knots.sort_by(f64::total_cmp);
                let (cs, sn) = (theta.cos(), theta.sin());
                for k in knots.windows(2) {
                    let (s0, s1) = (k[0], k[1]);
                    for (y, wy) in line.points.iter().zip(&line.weights) {
                        let rr = s0 + (s1 - s0) * y;
                        out.push((back([rr * cs, rr * sn]), wt * (s1 - s0) * wy * rr));
                    }
                }
            }
        }
    }
    out
}
