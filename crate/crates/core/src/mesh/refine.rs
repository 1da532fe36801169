use super::{
    edge_key, InitialMesh, Lineage, Point, Triangulation, BISECT_LEFT, BISECT_RIGHT, RED_FIRST,
};
use crate::error::{FemError, Result};
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

#[derive(Debug, Clone)]
struct WorkTriangle {
    vertices: [usize; 3],
    refinement_edge: u8,
    lineage: Lineage,
}

/// Mutable working copy of a mesh used while refining.
///
/// `midpoints` records every edge that has been split; a live triangle owning
/// such an edge carries a hanging vertex. `owners` maps each current edge to
/// the (at most two) live triangles that contain it.
struct Refiner {
    vertices: Vec<Point>,
    triangles: Vec<WorkTriangle>,
    alive: Vec<bool>,
    midpoints: HashMap<(usize, usize), usize>,
    owners: HashMap<(usize, usize), [usize; 2]>,
    initial: Arc<InitialMesh>,
}

const NONE: usize = usize::MAX;

impl Refiner {
    fn new(mesh: &Triangulation) -> Self {
        let mut refiner = Refiner {
            vertices: mesh.vertices.clone(),
            triangles: Vec::with_capacity(mesh.num_triangles() * 2),
            alive: Vec::with_capacity(mesh.num_triangles() * 2),
            midpoints: HashMap::new(),
            owners: HashMap::with_capacity(mesh.num_edges()),
            initial: Arc::clone(&mesh.initial),
        };
        for t in 0..mesh.num_triangles() {
            refiner.push(WorkTriangle {
                vertices: mesh.triangles[t],
                refinement_edge: mesh.refinement_edge[t],
                lineage: mesh.lineage[t].clone(),
            });
        }
        refiner
    }

    fn from_initial(initial: &Arc<InitialMesh>) -> Self {
        let mut refiner = Refiner {
            vertices: initial.vertices.clone(),
            triangles: Vec::new(),
            alive: Vec::new(),
            midpoints: HashMap::new(),
            owners: HashMap::new(),
            initial: Arc::clone(initial),
        };
        for (t, tri) in initial.triangles.iter().enumerate() {
            refiner.push(WorkTriangle {
                vertices: *tri,
                refinement_edge: initial.refinement_edge[t],
                lineage: Lineage::root(t),
            });
        }
        refiner
    }

    fn push(&mut self, tri: WorkTriangle) -> usize {
        let id = self.triangles.len();
        for i in 0..3 {
            let key = edge_key(tri.vertices[(i + 1) % 3], tri.vertices[(i + 2) % 3]);
            let slot = self.owners.entry(key).or_insert([NONE, NONE]);
            if slot[0] == NONE {
                slot[0] = id;
            } else {
                slot[1] = id;
            }
        }
        self.triangles.push(tri);
        self.alive.push(true);
        id
    }

    fn kill(&mut self, id: usize) {
        self.alive[id] = false;
        let verts = self.triangles[id].vertices;
        for i in 0..3 {
            let key = edge_key(verts[(i + 1) % 3], verts[(i + 2) % 3]);
            if let Some(slot) = self.owners.get_mut(&key) {
                if slot[0] == id {
                    slot[0] = slot[1];
                    slot[1] = NONE;
                } else if slot[1] == id {
                    slot[1] = NONE;
                }
                if slot[0] == NONE {
                    self.owners.remove(&key);
                }
            }
        }
    }

    fn other_owner(&self, key: (usize, usize), id: usize) -> Option<usize> {
        self.owners.get(&key).and_then(|slot| {
            slot.iter()
                .copied()
                .find(|&t| t != NONE && t != id)
        })
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = edge_key(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let m = self.vertices.len();
        self.vertices
            .push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        self.midpoints.insert(key, m);
        m
    }

    fn has_hanging_edge(&self, id: usize) -> bool {
        let v = self.triangles[id].vertices;
        (0..3).any(|i| {
            self.midpoints
                .contains_key(&edge_key(v[(i + 1) % 3], v[(i + 2) % 3]))
        })
    }

    /// Newest-vertex bisection of one live triangle. Returns the neighbour
    /// across the refinement edge (now hanging) and the two children.
    fn bisect(&mut self, id: usize) -> (Option<usize>, [usize; 2]) {
        let tri = self.triangles[id].clone();
        let r = tri.refinement_edge as usize;
        let apex = tri.vertices[r];
        let b = tri.vertices[(r + 1) % 3];
        let c = tri.vertices[(r + 2) % 3];
        let neighbour = self.other_owner(edge_key(b, c), id);
        let m = self.midpoint(b, c);
        self.kill(id);
        let left = self.push(WorkTriangle {
            vertices: [m, apex, b],
            refinement_edge: 0,
            lineage: tri.lineage.child(BISECT_LEFT),
        });
        let right = self.push(WorkTriangle {
            vertices: [m, c, apex],
            refinement_edge: 0,
            lineage: tri.lineage.child(BISECT_RIGHT),
        });
        (neighbour, [left, right])
    }

    /// Red split into four similar children; every child keeps the parent's
    /// local refinement-edge index, i.e. a refinement edge parallel to the
    /// parent's.
    fn red_split(&mut self, id: usize) -> Vec<usize> {
        let tri = self.triangles[id].clone();
        let [v0, v1, v2] = tri.vertices;
        let mut touched = Vec::new();
        for (a, b) in [(v1, v2), (v2, v0), (v0, v1)] {
            if let Some(n) = self.other_owner(edge_key(a, b), id) {
                touched.push(n);
            }
        }
        let m0 = self.midpoint(v1, v2);
        let m1 = self.midpoint(v2, v0);
        let m2 = self.midpoint(v0, v1);
        self.kill(id);
        let children = [[v0, m2, m1], [m2, v1, m0], [m1, m0, v2], [m0, m1, m2]];
        for (i, verts) in children.into_iter().enumerate() {
            let child = self.push(WorkTriangle {
                vertices: verts,
                refinement_edge: tri.refinement_edge,
                lineage: tri.lineage.child(RED_FIRST + i as u8),
            });
            touched.push(child);
        }
        touched
    }

    /// Bisects every triangle carrying a hanging vertex until none is left.
    fn close(&mut self, mut queue: Vec<usize>) {
        while let Some(id) = queue.pop() {
            if !self.alive[id] || !self.has_hanging_edge(id) {
                continue;
            }
            let (neighbour, children) = self.bisect(id);
            queue.extend(neighbour);
            queue.extend(children);
        }
    }

    fn finish(self) -> Result<Triangulation> {
        let mut triangles = Vec::new();
        let mut refinement_edge = Vec::new();
        let mut lineage = Vec::new();
        for (tri, alive) in self.triangles.into_iter().zip(self.alive) {
            if alive {
                triangles.push(tri.vertices);
                refinement_edge.push(tri.refinement_edge);
                lineage.push(tri.lineage);
            }
        }
        Triangulation::assemble(self.vertices, triangles, refinement_edge, lineage, self.initial)
    }
}

impl Triangulation {
    /// Smallest conforming newest-vertex-bisection refinement in which every
    /// marked triangle is bisected at least once.
    pub fn bisect(&self, marked: &[usize]) -> Result<Triangulation> {
        if let Some(&bad) = marked.iter().find(|&&t| t >= self.num_triangles()) {
            return Err(FemError::InvalidTriangle(bad));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        let mut refiner = Refiner::new(self);
        let mut queue = Vec::new();
        let mut seen = HashSet::new();
        for &t in marked {
            if !seen.insert(t) || !refiner.alive[t] {
                continue;
            }
            let (neighbour, children) = refiner.bisect(t);
            queue.extend(neighbour);
            queue.extend(children);
        }
        refiner.close(queue);
        refiner.finish()
    }

    /// Bisects all triangles (plus closure), `sweeps` times.
    pub fn bisect_uniform(&self, sweeps: usize) -> Result<Triangulation> {
        let mut mesh = self.clone();
        for _ in 0..sweeps {
            let all: Vec<usize> = (0..mesh.num_triangles()).collect();
            mesh = mesh.bisect(&all)?;
        }
        Ok(mesh)
    }

    /// Uniform red refinement: every triangle is replaced by four similar
    /// children through its edge midpoints.
    pub fn red_refine(&self) -> Triangulation {
        let mut refiner = Refiner::new(self);
        for t in 0..self.num_triangles() {
            refiner.red_split(t);
        }
        refiner
            .finish()
            .expect("red refinement of a conforming mesh is conforming")
    }

    pub fn red_refine_times(&self, times: usize) -> Triangulation {
        let mut mesh = self.clone();
        for _ in 0..times {
            mesh = mesh.red_refine();
        }
        mesh
    }

    /// Coarsest common refinement of two refinements of the same initial mesh,
    /// obtained as the leaves of the union of both refinement forests.
    pub fn overlay(&self, other: &Triangulation) -> Result<Triangulation> {
        if !self.same_root(other) {
            return Err(FemError::DifferentRoots);
        }
        // interior forest nodes, keyed by lineage, with the kind of split applied
        let mut split: HashMap<(usize, Vec<u8>), bool> = HashMap::new();
        for mesh in [self, other] {
            for l in &mesh.lineage {
                for d in 0..l.path.len() {
                    let red = l.path[d] >= RED_FIRST;
                    let key = (l.root, l.path[..d].to_vec());
                    if let Some(&prev) = split.get(&key) {
                        if prev != red {
                            return Err(FemError::NotNested(
                                "a triangle is bisected in one mesh and red-refined in the other"
                                    .into(),
                            ));
                        }
                    } else {
                        split.insert(key, red);
                    }
                }
            }
        }
        let mut refiner = Refiner::from_initial(&self.initial);
        let mut stack: Vec<usize> = (0..refiner.triangles.len()).collect();
        let mut closure = Vec::new();
        while let Some(id) = stack.pop() {
            if !refiner.alive[id] {
                continue;
            }
            let key = {
                let l = &refiner.triangles[id].lineage;
                (l.root, l.path.clone())
            };
            match split.get(&key) {
                None => closure.push(id),
                Some(false) => {
                    let (neighbour, children) = refiner.bisect(id);
                    closure.extend(neighbour);
                    stack.extend(children);
                }
                Some(true) => {
                    let touched = refiner.red_split(id);
                    let n = touched.len();
                    closure.extend_from_slice(&touched[..n - 4]);
                    stack.extend_from_slice(&touched[n - 4..]);
                }
            }
        }
        refiner.close(closure);
        refiner.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(mesh: &Triangulation) -> (usize, usize, usize) {
        let c = mesh.validate().unwrap();
        (c.triangles, c.edges, c.interior_edges)
    }

    #[test]
    fn empty_marking_is_identity() {
        let mesh = Triangulation::lshape();
        let same = mesh.bisect(&[]).unwrap();
        assert_eq!(same.vertices(), mesh.vertices());
        assert_eq!(same.triangles(), mesh.triangles());
        assert_eq!(same.refinement_edges(), mesh.refinement_edges());
    }

    #[test]
    fn single_bisection() {
        let mesh = Triangulation::reference_triangle();
        let fine = mesh.bisect(&[0]).unwrap();
        assert_eq!(fine.num_triangles(), 2);
        // new vertex is the midpoint of the hypotenuse and both children share it
        assert_eq!(fine.vertices()[3], [0.5, 0.5]);
        for t in 0..2 {
            assert_eq!(fine.triangles()[t][0], 3);
            assert_eq!(fine.refinement_edges()[t], 0);
        }
        assert_eq!(counts(&fine), (2, 5, 1));
    }

    #[test]
    fn closure_propagates_on_lshape() {
        let mesh = Triangulation::lshape();
        // triangle 1 = (-1,-1), (0,0), (-1,0) touches the reentrant corner
        let fine = mesh.bisect(&[1]).unwrap();
        fine.validate().unwrap();
        assert!(fine.num_triangles() > mesh.num_triangles() + 1);
        // the hypotenuse is shared with triangle 0, so both get bisected
        assert_eq!(fine.num_triangles(), 8);
        let fine = fine.bisect(&[0]).unwrap();
        fine.validate().unwrap();
    }

    #[test]
    fn invalid_marked_id() {
        let mesh = Triangulation::unit_square();
        assert!(matches!(mesh.bisect(&[2]), Err(FemError::InvalidTriangle(2))));
    }

    #[test]
    fn red_refinement_counts() {
        let one = Triangulation::reference_triangle();
        assert_eq!(counts(&one.red_refine()), (4, 9, 3));
        assert_eq!(one.red_refine_times(2).num_triangles(), 16);
        let l = Triangulation::lshape().red_refine();
        assert_eq!(l.num_triangles(), 24);
        l.validate().unwrap();
    }

    #[test]
    fn red_children_are_similar() {
        let one = Triangulation::reference_triangle();
        let fine = one.red_refine();
        for t in 0..4 {
            assert!((fine.area(t) - 0.125).abs() < 1e-15);
            assert!((triangle_angle_sum(&fine, t) - std::f64::consts::PI).abs() < 1e-12);
        }
        assert!((fine.min_angle() - one.min_angle()).abs() < 1e-12);
    }

    fn triangle_angle_sum(mesh: &Triangulation, t: usize) -> f64 {
        let p = mesh.corners(t);
        (0..3)
            .map(|i| {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1])
            })
            .sum()
    }

    #[test]
    fn overlay_basic_laws() {
        let t0 = Triangulation::unit_square();
        let a = t0.bisect(&[0]).unwrap();
        assert_eq!(a.overlay(&a).unwrap().num_triangles(), a.num_triangles());
        let b = a.bisect(&[0]).unwrap();
        let ab = a.overlay(&b).unwrap();
        assert_eq!(ab.num_triangles(), b.num_triangles());
        assert!(b.is_refined_by(&ab) && ab.is_refined_by(&b));
    }

    #[test]
    fn overlay_of_disjoint_bisections() {
        // two triangles sharing the diagonal; refine the leaf opposite the
        // diagonal in each half separately
        let t0 = Triangulation::unit_square();
        let base = t0.bisect(&[0]).unwrap(); // closure bisects both: 4 triangles
        assert_eq!(base.num_triangles(), 4);
        let a = base.bisect(&[0]).unwrap();
        let b = base.bisect(&[3]).unwrap();
        let ab = a.overlay(&b).unwrap();
        ab.validate().unwrap();
        assert!(a.is_refined_by(&ab) && b.is_refined_by(&ab));
        let ba = b.overlay(&a).unwrap();
        let mut la: Vec<_> = (0..ab.num_triangles()).map(|t| ab.lineage(t).clone()).collect();
        let mut lb: Vec<_> = (0..ba.num_triangles()).map(|t| ba.lineage(t).clone()).collect();
        la.sort();
        lb.sort();
        assert_eq!(la, lb);
        assert!(ab.num_triangles() >= a.num_triangles().max(b.num_triangles()));
    }

    #[test]
    fn overlay_rejects_foreign_roots() {
        let a = Triangulation::unit_square();
        let b = Triangulation::lshape();
        assert!(matches!(a.overlay(&b), Err(FemError::DifferentRoots)));
    }

    #[test]
    fn ancestors_recover_nesting() {
        let coarse = Triangulation::lshape().bisect(&[2]).unwrap();
        let fine = coarse.bisect(&[0, 3]).unwrap().red_refine();
        let parents = coarse.ancestors_in(&fine).unwrap();
        let mut area = vec![0.0; coarse.num_triangles()];
        for (t, &p) in parents.iter().enumerate() {
            area[p] += fine.area(t);
            let c = fine.centroid(t);
            assert!(point_in_triangle(&coarse, p, c));
        }
        for t in 0..coarse.num_triangles() {
            assert!((area[t] - coarse.area(t)).abs() < 1e-14);
        }
        assert!(fine.ancestors_in(&coarse).is_err());
    }

    fn point_in_triangle(mesh: &Triangulation, t: usize, p: Point) -> bool {
        let [a, b, c] = mesh.corners(t);
        let s = super::super::signed_area;
        s(a, b, p) >= -1e-14 && s(b, c, p) >= -1e-14 && s(c, a, p) >= -1e-14
    }
}
