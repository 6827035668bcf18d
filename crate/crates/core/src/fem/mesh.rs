use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem_model::{Domain, PerforationLattice, Point, MAX_DIM};

/// Finite element family on the tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    /// P1 on the Kuhn (Freudenthal) split of every cell into `n!` simplices.
    #[default]
    Simplex,
    /// Bilinear / trilinear (Q1) on every cell.
    Multilinear,
}

/// Uniform tensor grid over a box. Axes beyond `dim` have a single node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: Domain,
    pub h: f64,
    pub cells: [usize; MAX_DIM],
    pub element: ElementKind,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn nodes_per_axis(&self) -> [usize; MAX_DIM] {
        let mut n = [1; MAX_DIM];
        for k in 0..self.dim() {
            n[k] = self.cells[k] + 1;
        }
        n
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes_per_axis().iter().product()
    }

    pub fn num_cells(&self) -> usize {
        (0..self.dim()).map(|k| self.cells[k]).product()
    }

    /// Strides of the lexicographic node numbering (axis 0 fastest).
    pub fn strides(&self) -> [usize; MAX_DIM] {
        let n = self.nodes_per_axis();
        [1, n[0], n[0] * n[1]]
    }

    pub fn node_index(&self, ijk: [usize; MAX_DIM]) -> usize {
        let s = self.strides();
        ijk[0] * s[0] + ijk[1] * s[1] + ijk[2] * s[2]
    }

    pub fn node_ijk(&self, mut index: usize) -> [usize; MAX_DIM] {
        let n = self.nodes_per_axis();
        let i = index % n[0];
        index /= n[0];
        let j = index % n[1];
        index /= n[1];
        [i, j, index]
    }

    pub fn node_point(&self, index: usize) -> Point {
        let ijk = self.node_ijk(index);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            x[k] = self.domain.lower[k] + ijk[k] as f64 * self.h;
        }
        x
    }

    pub fn cell_ijk(&self, mut index: usize) -> [usize; MAX_DIM] {
        let c = self.cells;
        let i = index % c[0];
        index /= c[0];
        if self.dim() == 2 {
            return [i, index, 0];
        }
        let j = index % c[1];
        [i, j, index / c[1]]
    }

    /// Lowest-corner node of a cell.
    pub fn cell_origin(&self, cell: usize) -> usize {
        self.node_index(self.cell_ijk(cell))
    }

    pub fn cell_midpoint(&self, cell: usize) -> Point {
        let ijk = self.cell_ijk(cell);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            x[k] = self.domain.lower[k] + (ijk[k] as f64 + 0.5) * self.h;
        }
        x
    }

    /// Global node numbers of the `2^dim` cell corners; bit `a` of the
    /// local index selects the upper end along axis `a`.
    pub fn cell_nodes(&self, cell: usize) -> [usize; 8] {
        let origin = self.cell_origin(cell);
        let s = self.strides();
        let mut out = [0; 8];
        for (l, o) in out.iter_mut().enumerate().take(1 << self.dim()) {
            *o = origin + (0..self.dim()).filter(|a| l >> a & 1 == 1).map(|a| s[a]).sum::<usize>();
        }
        out
    }

    pub fn is_outer_boundary(&self, index: usize) -> bool {
        let ijk = self.node_ijk(index);
        (0..self.dim()).any(|k| ijk[k] == 0 || ijk[k] == self.cells[k])
    }

    /// Same node layout.
    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }

    /// Grid padded by `margin` cells on every side, same spacing.
    pub fn padded(&self, margin: usize) -> Grid {
        let mut g = *self;
        for k in 0..self.dim() {
            g.domain.lower[k] -= margin as f64 * self.h;
            g.domain.upper[k] += margin as f64 * self.h;
            g.cells[k] += 2 * margin;
        }
        g
    }
}

/// Node tag with respect to the outer boundary and the holes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    OuterBoundary,
    /// Inside a closed hole; constrained under hole-Dirichlet measures.
    HoleInterior,
    /// Free node sharing a cell with a hole node.
    HoleBoundary,
}

/// Summary of a hole classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleReport {
    pub lattice: PerforationLattice,
    pub tagged_nodes: usize,
    pub holes_meeting_domain: usize,
    pub holes_with_nodes: usize,
    /// Set when `r_hole < h`.
    pub under_resolved: bool,
}

/// A grid plus per-node classification.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub grid: Grid,
    pub node_class: Vec<NodeClass>,
    pub holes: Option<HoleReport>,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.node_class.len()
    }

    pub fn is_hole(&self, node: usize) -> bool {
        self.node_class[node] == NodeClass::HoleInterior
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.node_class.iter().filter(|c| **c == class).count()
    }

    /// Overrides the tag of one node (used to carve custom hole sets).
    pub fn set_class(&mut self, node: usize, class: NodeClass) {
        self.node_class[node] = class;
    }

    /// Whether this mesh was classified against the given lattice.
    pub fn classified_for(&self, lattice: &PerforationLattice) -> bool {
        self.holes.as_ref().is_some_and(|h| &h.lattice == lattice)
    }
}

/// Tensor grid with spacing `h` over the box.
pub fn build_mesh(domain: &Domain, h: f64, element: ElementKind) -> Result<Mesh> {
    if !(h > 0.0) {
        return Err(Error::BadMesh { h, reason: "spacing must be positive".into() });
    }
    let mut cells = [0; MAX_DIM];
    for k in 0..domain.dim {
        let len = domain.edge(k);
        let m = (len / h).round();
        if (m * h - len).abs() > 1e-9 * len {
            return Err(Error::BadMesh { h, reason: format!("does not divide edge {k} of length {len}") });
        }
        if m < 2.0 {
            return Err(Error::BadMesh { h, reason: format!("fewer than 3 nodes along axis {k}") });
        }
        cells[k] = m as usize;
    }
    Ok(mesh_from_grid(Grid { domain: *domain, h, cells, element }))
}

/// Tensor grid with `cells` cells along every axis; the box must be a cube
/// up to rounding.
pub fn build_mesh_cells(domain: &Domain, cells: usize, element: ElementKind) -> Result<Mesh> {
    build_mesh(domain, domain.edge(0) / cells as f64, element)
}

pub(crate) fn mesh_from_grid(grid: Grid) -> Mesh {
    let node_class = (0..grid.num_nodes())
        .map(|i| if grid.is_outer_boundary(i) { NodeClass::OuterBoundary } else { NodeClass::Interior })
        .collect();
    Mesh { grid, node_class, holes: None }
}

/// Tags every node within `r_hole` of a lattice centre as a hole node.
/// Outer-boundary nodes keep their tag.
pub fn classify_holes(mesh: &Mesh, lattice: &PerforationLattice) -> Mesh {
    let grid = mesh.grid;
    let mut node_class = mesh.node_class.clone();
    // Relative slack so nodes lying exactly on the sphere count as inside.
    let cutoff = lattice.r_hole * (1.0 + 1e-12);
    let mut tagged = 0;
    let mut holes_hit = std::collections::BTreeSet::new();
    for (i, class) in node_class.iter_mut().enumerate() {
        let x = grid.node_point(i);
        let (c, d) = lattice.nearest_center(&x);
        if d <= cutoff {
            let key: Vec<i64> = (0..grid.dim()).map(|k| (c[k] / lattice.eps).round() as i64).collect();
            holes_hit.insert(key);
            if *class != NodeClass::OuterBoundary {
                *class = NodeClass::HoleInterior;
                tagged += 1;
            }
        }
    }
    let hole_boundary: Vec<usize> = (0..grid.num_cells())
        .flat_map(|c| {
            let nodes = grid.cell_nodes(c);
            let nodes = &nodes[..1 << grid.dim()];
            if nodes.iter().any(|n| node_class[*n] == NodeClass::HoleInterior) {
                nodes.iter().copied().filter(|n| node_class[*n] == NodeClass::Interior).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    for n in hole_boundary {
        node_class[n] = NodeClass::HoleBoundary;
    }
    let meeting = crate::problem_model::lattice_centers(lattice, &grid.domain)
        .iter()
        .filter(|c| grid.domain.distance(c) <= lattice.r_hole)
        .count();
    let report = HoleReport {
        lattice: *lattice,
        tagged_nodes: tagged,
        holes_meeting_domain: meeting,
        holes_with_nodes: holes_hit.len(),
        under_resolved: lattice.r_hole < grid.h,
    };
    if report.under_resolved {
        log::warn!("hole radius {} below mesh spacing {}", lattice.r_hole, grid.h);
    }
    Mesh { grid, node_class, holes: Some(report) }
}
