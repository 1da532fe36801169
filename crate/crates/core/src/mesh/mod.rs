//! Conforming triangulations, newest-vertex bisection, red refinement,
//! overlays and square partitions.

mod io;
mod refine;
mod square;

pub use io::{read_mesh, read_mesh_file, write_mesh};
pub use square::{SquareEdge, SquarePartition};

use crate::error::{FemError, Result};
use std::collections::HashMap;
use std::sync::Arc;

pub type Point = [f64; 2];

/// Child codes stored in a [`Lineage`] path.
pub(crate) const BISECT_LEFT: u8 = 0;
pub(crate) const BISECT_RIGHT: u8 = 1;
pub(crate) const RED_FIRST: u8 = 2;

/// Position of a triangle in the refinement forest of its initial mesh.
///
/// `path` lists the child taken at each refinement step: `0`/`1` for the two
/// halves of a bisection and `2..=5` for the four children of a red split.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lineage {
    pub root: usize,
    pub path: Vec<u8>,
}

impl Lineage {
    pub fn root(root: usize) -> Self {
        Lineage {
            root,
            path: Vec::new(),
        }
    }

    pub(crate) fn child(&self, code: u8) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(code);
        Lineage {
            root: self.root,
            path,
        }
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    /// `true` if `self` is `other` or one of its ancestors.
    pub fn contains(&self, other: &Lineage) -> bool {
        self.root == other.root && other.path.starts_with(&self.path)
    }
}

/// Edge of a triangulation with its fixed orientation.
///
/// `plus` is the triangle `T₊` whose outer normal defines `normal`; the edge is
/// traversed `vertices[0] → vertices[1]` counterclockwise in `T₊`, so `tangent`
/// points from the first to the second vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub plus: usize,
    pub minus: Option<usize>,
    pub normal: Point,
    pub tangent: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    pub fn midpoint(&self, mesh: &Triangulation) -> Point {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

#[derive(Debug, PartialEq)]
pub(crate) struct InitialMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub refinement_edge: Vec<u8>,
}

/// Conforming triangulation of a polygonal domain.
///
/// Triangles are counterclockwise vertex triples; local edge `i` is the edge
/// opposite local vertex `i`. The refinement edge of a triangle is the local
/// edge opposite its newest vertex. Meshes are immutable: every refinement
/// returns a new value.
#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    refinement_edge: Vec<u8>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    lineage: Vec<Lineage>,
    initial: Arc<InitialMesh>,
}

/// Combinatorial summary returned by [`Triangulation::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountsReport {
    pub triangles: usize,
    pub vertices: usize,
    pub edges: usize,
    pub interior_edges: usize,
    pub boundary_edges: usize,
    /// Smallest interior angle in radians.
    pub min_angle: f64,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn local_edge(tri: &[usize; 3], i: usize) -> (usize, usize) {
    (tri[(i + 1) % 3], tri[(i + 2) % 3])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Longest edge of every triangle, ties broken by the smallest global index
/// of the opposite vertex.
pub fn longest_edge_refinement(vertices: &[Point], triangles: &[[usize; 3]]) -> Vec<u8> {
    triangles
        .iter()
        .map(|tri| {
            let lengths: Vec<f64> = (0..3)
                .map(|i| {
                    let (a, b) = local_edge(tri, i);
                    dist(vertices[a], vertices[b])
                })
                .collect();
            let longest = lengths.iter().cloned().fold(0.0, f64::max);
            let tol = 1e-12 * longest;
            (0..3)
                .filter(|&i| lengths[i] >= longest - tol)
                .min_by_key(|&i| tri[i])
                .unwrap() as u8
        })
        .collect()
}

impl Triangulation {
    /// Builds an initial (root) triangulation after validating conformity.
    pub fn build_initial(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
    ) -> Result<Self> {
        if refinement_edge.len() != triangles.len() {
            return Err(FemError::DimensionMismatch {
                expected: triangles.len(),
                found: refinement_edge.len(),
            });
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(FemError::VertexOutOfRange {
                        triangle: t,
                        index: v,
                    });
                }
            }
            if refinement_edge[t] > 2 {
                return Err(FemError::InvalidRefinementEdge {
                    triangle: t,
                    edge: refinement_edge[t],
                });
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = signed_area(a, b, c);
            let scale = dist(a, b).max(dist(b, c)).max(dist(c, a));
            if area.abs() <= 1e-14 * scale * scale || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(FemError::DegenerateTriangle(t));
            }
            if area < 0.0 {
                return Err(FemError::Orientation(t));
            }
        }
        let initial = Arc::new(InitialMesh {
            vertices: vertices.clone(),
            triangles: triangles.clone(),
            refinement_edge: refinement_edge.clone(),
        });
        let lineage = (0..triangles.len()).map(Lineage::root).collect();
        let mesh = Self::assemble(vertices, triangles, refinement_edge, lineage, initial)?;
        mesh.check_conformity()?;
        Ok(mesh)
    }

    /// Initial mesh with longest-edge refinement edges.
    pub fn with_longest_edges(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let r = longest_edge_refinement(&vertices, &triangles);
        Self::build_initial(vertices, triangles, r)
    }

    /// The reference triangle `(0,0), (1,0), (0,1)`.
    pub fn reference_triangle() -> Self {
        Self::with_longest_edges(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])
            .expect("reference triangle is valid")
    }

    /// Unit square `(0,1)²` split along the diagonal from `(0,0)` to `(1,1)`.
    pub fn unit_square() -> Self {
        Self::with_longest_edges(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .expect("unit square is valid")
    }

    /// L-shaped domain `(-1,1)² \ [0,1]×[-1,0]` with six triangles: each of
    /// the three unit squares is cut along its diagonal parallel to `(1,1)`.
    pub fn lshape() -> Self {
        let vertices = vec![
            [-1.0, -1.0],
            [0.0, -1.0],
            [-1.0, 0.0],
            [0.0, 0.0],
            [1.0, 0.0],
            [-1.0, 1.0],
            [0.0, 1.0],
            [1.0, 1.0],
        ];
        let triangles = vec![
            [0, 1, 3],
            [0, 3, 2],
            [2, 3, 6],
            [2, 6, 5],
            [3, 4, 7],
            [3, 7, 6],
        ];
        Self::with_longest_edges(vertices, triangles).expect("L-shaped mesh is valid")
    }

    fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
        lineage: Vec<Lineage>,
        initial: Arc<InitialMesh>,
    ) -> Result<Self> {
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2 + 4);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut ids = [0; 3];
            for (i, id) in ids.iter_mut().enumerate() {
                let (a, b) = local_edge(tri, i);
                match lookup.get(&edge_key(a, b)) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.minus.is_some() {
                            return Err(FemError::NonConforming(format!(
                                "edge ({a}, {b}) is shared by more than two triangles"
                            )));
                        }
                        if edge.vertices != [b, a] {
                            return Err(FemError::Orientation(t));
                        }
                        edge.minus = Some(t);
                        *id = e;
                    }
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let length = dist(pa, pb);
                        let tangent = [(pb[0] - pa[0]) / length, (pb[1] - pa[1]) / length];
                        let normal = [tangent[1], -tangent[0]];
                        lookup.insert(edge_key(a, b), edges.len());
                        *id = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            plus: t,
                            minus: None,
                            normal,
                            tangent,
                            length,
                        });
                    }
                }
            }
            triangle_edges.push(ids);
        }
        Ok(Triangulation {
            vertices,
            triangles,
            refinement_edge,
            edges,
            triangle_edges,
            lineage,
            initial,
        })
    }

    /// Rejects hanging vertices: two boundary edges leaving the same vertex in
    /// the same direction overlap, which is exactly what a T-junction produces.
    fn check_conformity(&self) -> Result<()> {
        let mut outgoing: Vec<Vec<Point>> = vec![Vec::new(); self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let [a, b] = e.vertices;
            outgoing[a].push(e.tangent);
            outgoing[b].push([-e.tangent[0], -e.tangent[1]]);
        }
        for (v, dirs) in outgoing.iter().enumerate() {
            for i in 0..dirs.len() {
                for j in i + 1..dirs.len() {
                    let cross = dirs[i][0] * dirs[j][1] - dirs[i][1] * dirs[j][0];
                    let dot = dirs[i][0] * dirs[j][0] + dirs[i][1] * dirs[j][1];
                    if cross.abs() < 1e-12 && dot > 0.0 {
                        return Err(FemError::NonConforming(format!(
                            "hanging vertex on a boundary edge at vertex {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn refinement_edges(&self) -> &[u8] {
        &self.refinement_edge
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge ids of a triangle, indexed by local edge.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn lineage(&self, t: usize) -> &Lineage {
        &self.lineage[t]
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    /// Mesh size `h_T = |T|^{1/2}`.
    pub fn h(&self, t: usize) -> f64 {
        self.area(t).sqrt()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three barycentric coordinates on triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.corners(t);
        let twice = 2.0 * signed_area(a, b, c);
        [
            [(b[1] - c[1]) / twice, (c[0] - b[0]) / twice],
            [(c[1] - a[1]) / twice, (a[0] - c[0]) / twice],
            [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice],
        ]
    }

    /// Maps barycentric coordinates on triangle `t` to a physical point.
    pub fn point(&self, t: usize, lambda: &[f64; 3]) -> Point {
        let [a, b, c] = self.corners(t);
        [
            lambda[0] * a[0] + lambda[1] * b[0] + lambda[2] * c[0],
            lambda[0] * a[1] + lambda[1] * b[1] + lambda[2] * c[1],
        ]
    }

    /// `+1` if `t` is the `T₊` side of its local edge `i`, `-1` otherwise.
    pub fn edge_sign(&self, t: usize, i: usize) -> f64 {
        if self.edges[self.triangle_edges[t][i]].plus == t {
            1.0
        } else {
            -1.0
        }
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| triangle_min_angle(self.corners(t)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn domain_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Checks all combinatorial invariants and returns the counts.
    pub fn validate(&self) -> Result<CountsReport> {
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.corners(t);
            if signed_area(a, b, c) <= 0.0 {
                return Err(FemError::InvariantViolation(format!(
                    "triangle {t} has non-positive signed area"
                )));
            }
        }
        self.check_conformity()
            .map_err(|e| FemError::InvariantViolation(e.to_string()))?;
        let mut used = vec![false; self.num_vertices()];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(FemError::InvariantViolation(format!(
                "vertex {v} belongs to no triangle"
            )));
        }
        let nt = self.num_triangles();
        let nv = self.num_vertices();
        let ne = self.num_edges();
        let ni = self.num_interior_edges();
        if ne + ni != 3 * nt {
            return Err(FemError::InvariantViolation(format!(
                "Euler identity card(E) + card(E(Ω)) = 3 card(T) fails: {ne} + {ni} != 3 * {nt}"
            )));
        }
        if ni + nv != 2 * nt + 1 {
            return Err(FemError::InvariantViolation(format!(
                "Euler identity card(E(Ω)) + card(N) = 2 card(T) + 1 fails: {ni} + {nv} != 2 * {nt} + 1"
            )));
        }
        Ok(CountsReport {
            triangles: nt,
            vertices: nv,
            edges: ne,
            interior_edges: ni,
            boundary_edges: ne - ni,
            min_angle: self.min_angle(),
        })
    }

    /// `true` if both meshes refine the same initial triangulation.
    pub fn same_root(&self, other: &Triangulation) -> bool {
        Arc::ptr_eq(&self.initial, &other.initial) || *self.initial == *other.initial
    }

    /// The initial triangulation this mesh was refined from.
    pub fn initial_mesh(&self) -> Triangulation {
        let init = &self.initial;
        Self::assemble(
            init.vertices.clone(),
            init.triangles.clone(),
            init.refinement_edge.clone(),
            (0..init.triangles.len()).map(Lineage::root).collect(),
            Arc::clone(init),
        )
        .expect("initial mesh was validated on construction")
    }

    /// For every triangle of `fine`, the index of the triangle of `self`
    /// containing it. Fails unless `fine` refines `self`.
    pub fn ancestors_in(&self, fine: &Triangulation) -> Result<Vec<usize>> {
        if !self.same_root(fine) {
            return Err(FemError::DifferentRoots);
        }
        let lookup: HashMap<(usize, &[u8]), usize> = self
            .lineage
            .iter()
            .enumerate()
            .map(|(t, l)| ((l.root, l.path.as_slice()), t))
            .collect();
        fine.lineage
            .iter()
            .enumerate()
            .map(|(t, l)| {
                (0..=l.path.len())
                    .find_map(|d| lookup.get(&(l.root, &l.path[..d])).copied())
                    .ok_or_else(|| {
                        FemError::NotNested(format!("triangle {t} has no ancestor in the coarse mesh"))
                    })
            })
            .collect()
    }

    /// `true` if every triangle of `fine` lies inside a triangle of `self`.
    pub fn is_refined_by(&self, fine: &Triangulation) -> bool {
        self.ancestors_in(fine).is_ok()
    }
}

fn triangle_min_angle(p: [Point; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let a = p[i];
            let b = p[(i + 1) % 3];
            let c = p[(i + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let cross = u[0] * v[1] - u[1] * v[0];
            let dot = u[0] * v[0] + u[1] * v[1];
            cross.abs().atan2(dot)
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_triangle_counts() {
        let mesh = Triangulation::reference_triangle();
        let c = mesh.validate().unwrap();
        assert_eq!((c.triangles, c.edges, c.interior_edges, c.vertices), (1, 3, 0, 3));
        assert_eq!(c.edges + c.interior_edges, 3 * c.triangles);
        assert_eq!(c.interior_edges + c.vertices, 2 * c.triangles + 1);
        // hypotenuse is opposite vertex 0
        assert_eq!(mesh.refinement_edges(), &[0]);
    }

    #[test]
    fn lshape_counts() {
        let mesh = Triangulation::lshape();
        let c = mesh.validate().unwrap();
        assert_eq!(c.vertices, 8);
        assert_eq!(c.triangles, 6);
        assert_eq!(c.edges, 13);
        assert_eq!(c.interior_edges, 5);
        assert!((mesh.domain_area() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn unit_square_counts() {
        let c = Triangulation::unit_square().validate().unwrap();
        assert_eq!((c.triangles, c.edges, c.interior_edges), (2, 5, 1));
    }

    #[test]
    fn edge_orientation_follows_plus_triangle() {
        let mesh = Triangulation::unit_square();
        for e in mesh.edges() {
            let [a, b] = e.vertices;
            let pa = mesh.vertices()[a];
            let pb = mesh.vertices()[b];
            // tangent is the counterclockwise direction in T+, normal points out of T+
            let c = mesh.centroid(e.plus);
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            let out = (mid[0] - c[0]) * e.normal[0] + (mid[1] - c[1]) * e.normal[1];
            assert!(out > 0.0);
            // tau = (0,-1;1,0) nu
            assert!((e.tangent[0] + e.normal[1]).abs() < 1e-15);
            assert!((e.tangent[1] - e.normal[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_degenerate_and_clockwise() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            Triangulation::build_initial(v.clone(), vec![[0, 1, 2]], vec![0]),
            Err(FemError::DegenerateTriangle(0))
        ));
        assert!(matches!(
            Triangulation::build_initial(v, vec![[0, 3, 1]], vec![0]),
            Err(FemError::Orientation(0))
        ));
    }

    #[test]
    fn rejects_hanging_vertex() {
        // big triangle on top of two small ones sharing the midpoint of its base
        let v = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [1.0, 0.0], [1.0, -1.0]];
        let t = vec![[0, 1, 2], [0, 4, 3], [3, 4, 1]];
        let err = Triangulation::build_initial(v, t, vec![0, 0, 0]).unwrap_err();
        assert!(matches!(err, FemError::NonConforming(_)), "{err}");
    }

    #[test]
    fn rejects_overlapping_triangles() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.0]];
        // triangles 0 and 1 both lie on the same side of edge (0, 1)
        let t = vec![[0, 1, 2], [0, 1, 3]];
        assert!(Triangulation::build_initial(v.clone(), t, vec![0, 0]).is_err());
        let t = vec![[0, 1, 2], [1, 0, 4], [0, 1, 3]];
        assert!(Triangulation::build_initial(v, t, vec![0, 0, 0]).is_err());
    }

    #[test]
    fn rejects_bad_indices() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Triangulation::build_initial(v.clone(), vec![[0, 1, 3]], vec![0]).is_err());
        assert!(Triangulation::build_initial(v.clone(), vec![[0, 1, 2]], vec![3]).is_err());
        assert!(Triangulation::build_initial(v, vec![[0, 1, 2]], vec![]).is_err());
    }

    #[test]
    fn longest_edge_ties_use_smallest_opposite_vertex() {
        // equilateral-ish: all edges equal, pick the edge opposite the smallest vertex id
        let s = 3f64.sqrt() / 2.0;
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, s]];
        let r = longest_edge_refinement(&v, &[[1, 2, 0]]);
        // vertex 0 sits at local position 2
        assert_eq!(r, vec![2]);
    }

    #[test]
    fn barycentric_gradients_sum_to_zero() {
        let mesh = Triangulation::lshape();
        for t in 0..mesh.num_triangles() {
            let g = mesh.barycentric_gradients(t);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-14);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-14);
        }
    }
}
