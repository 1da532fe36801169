//! Axis-aligned tensor partitions of a rectangle.

use super::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareEdge {
    pub vertices: [usize; 2],
    /// Adjacent cells; the second entry is `None` on the boundary.
    pub cells: [Option<usize>; 2],
    pub horizontal: bool,
}

impl SquareEdge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// Partition of `[x0,x1]×[y0,y1]` into `nx × ny` congruent axis-aligned cells.
///
/// Cells are squares when `hx == hy`; rectangular cells are representable but
/// rejected by the square-only checks.
#[derive(Debug, Clone)]
pub struct SquarePartition {
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub hx: f64,
    pub hy: f64,
    pub vertices: Vec<Point>,
    /// Counterclockwise corner indices starting at the lower-left corner.
    pub cells: Vec<[usize; 4]>,
    pub edges: Vec<SquareEdge>,
    /// Edge ids of every cell: bottom, right, top, left.
    pub cell_edges: Vec<[usize; 4]>,
}

impl SquarePartition {
    pub fn new(nx: usize, ny: usize, domain: [Point; 2]) -> Self {
        assert!(nx >= 1 && ny >= 1, "partition needs at least one cell per direction");
        let [lo, hi] = domain;
        let hx = (hi[0] - lo[0]) / nx as f64;
        let hy = (hi[1] - lo[1]) / ny as f64;
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([lo[0] + i as f64 * hx, lo[1] + j as f64 * hy]);
            }
        }
        let cid = |i: usize, j: usize| j * nx + i;
        let cells = (0..ny)
            .flat_map(|j| {
                (0..nx).map(move |i| [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
            })
            .collect();

        let mut edges = Vec::new();
        // horizontal edges: (i,j)-(i+1,j), cells below (j-1) and above (j)
        let mut horizontal = vec![0; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                let below = (j > 0).then(|| cid(i, j - 1));
                let above = (j < ny).then(|| cid(i, j));
                let cells = match (below, above) {
                    (Some(a), b) => [Some(a), b],
                    (None, b) => [b, None],
                };
                horizontal[j * nx + i] = edges.len();
                edges.push(SquareEdge {
                    vertices: [vid(i, j), vid(i + 1, j)],
                    cells,
                    horizontal: true,
                });
            }
        }
        let mut vertical = vec![0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                let left = (i > 0).then(|| cid(i - 1, j));
                let right = (i < nx).then(|| cid(i, j));
                let cells = match (left, right) {
                    (Some(a), b) => [Some(a), b],
                    (None, b) => [b, None],
                };
                vertical[j * (nx + 1) + i] = edges.len();
                edges.push(SquareEdge {
                    vertices: [vid(i, j), vid(i, j + 1)],
                    cells,
                    horizontal: false,
                });
            }
        }
        let cell_edges = (0..ny)
            .flat_map(|j| {
                let horizontal = &horizontal;
                let vertical = &vertical;
                (0..nx).map(move |i| {
                    [
                        horizontal[j * nx + i],
                        vertical[j * (nx + 1) + i + 1],
                        horizontal[(j + 1) * nx + i],
                        vertical[j * (nx + 1) + i],
                    ]
                })
            })
            .collect();
        SquarePartition {
            nx,
            ny,
            origin: lo,
            hx,
            hy,
            vertices,
            cells,
            edges,
            cell_edges,
        }
    }

    pub fn is_square(&self) -> bool {
        (self.hx - self.hy).abs() <= 1e-12 * self.hx.max(self.hy)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    /// `3 card(T) + 1 = card(E(Ω)) + card(N)`.
    pub fn euler_holds(&self) -> bool {
        3 * self.num_cells() + 1 == self.num_interior_edges() + self.num_vertices()
    }

    pub fn cell_origin(&self, c: usize) -> Point {
        self.vertices[self.cells[c][0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(nx: usize, ny: usize) -> SquarePartition {
        SquarePartition::new(nx, ny, [[0.0, 0.0], [nx as f64, ny as f64]])
    }

    #[test]
    fn counts_match_hand_enumeration() {
        for (nx, ny, n, ei) in [(1, 1, 4, 0), (2, 2, 9, 4), (4, 2, 15, 10), (1, 2, 6, 1)] {
            let sq = unit(nx, ny);
            assert_eq!(sq.num_cells(), nx * ny);
            assert_eq!(sq.num_vertices(), n);
            assert_eq!(sq.num_interior_edges(), ei);
            assert!(sq.euler_holds());
            assert!(sq.is_square());
        }
    }

    #[test]
    fn euler_for_many_sizes() {
        for nx in 1..9 {
            for ny in 1..9 {
                assert!(unit(nx, ny).euler_holds());
            }
        }
    }

    #[test]
    fn cell_edges_are_consistent() {
        let sq = unit(3, 2);
        for (c, ids) in sq.cell_edges.iter().enumerate() {
            for &e in ids {
                assert!(sq.edges[e].cells.contains(&Some(c)));
            }
        }
    }

    #[test]
    fn rectangles_are_not_squares() {
        let sq = SquarePartition::new(2, 2, [[0.0, 0.0], [2.0, 1.0]]);
        assert!(!sq.is_square());
    }
}
