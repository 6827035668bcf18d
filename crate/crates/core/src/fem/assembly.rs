//! Assembly of `int A Du.Dv dx + int u v dmu` and its right-hand side.
//!
//! Rows are assembled by gathering from the (at most `2^n`) cells around
//! each node, so blocks of rows can be built independently and the result
//! does not depend on scheduling. The coefficient is sampled once per cell
//! at the cell midpoint; masses are lumped.

use super::element::{ReferenceCell, MAX_LOCAL};
use super::field::NodalField;
use super::mesh::{Grid, Mesh, NodeClass};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::par::{self, Execution, CHUNK};
use crate::problem_model::{CoefficientSource, Load, MeasureSpec, Point, MAX_DIM};

/// Assembled linear system with Dirichlet constraints kept separate from
/// the operator, so the unconstrained equations stay available for
/// reaction forces.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub grid: Grid,
    /// Unconstrained operator (stiffness plus measure term).
    pub matrix: CsrMatrix,
    /// Unconstrained right-hand side.
    pub rhs: Vec<f64>,
    pub constrained: Vec<bool>,
    /// Prescribed values; only read at constrained nodes.
    pub fixed_values: Vec<f64>,
}

impl SparseSystem {
    pub fn num_free(&self) -> usize {
        self.constrained.iter().filter(|c| !**c).count()
    }
}

/// Calls `f(local_corner, cell_origin_ijk)` for every cell touching the node.
#[inline]
pub(crate) fn for_each_adjacent_cell(grid: &Grid, ijk: [usize; MAX_DIM], mut f: impl FnMut(usize, [usize; MAX_DIM])) {
    let dim = grid.dim();
    'corners: for l in 0..(1usize << dim) {
        let mut origin = [0usize; MAX_DIM];
        for a in 0..dim {
            if l >> a & 1 == 1 {
                if ijk[a] == 0 {
                    continue 'corners;
                }
                origin[a] = ijk[a] - 1;
            } else {
                if ijk[a] >= grid.cells[a] {
                    continue 'corners;
                }
                origin[a] = ijk[a];
            }
        }
        f(l, origin);
    }
}

#[inline]
pub(crate) fn origin_midpoint(grid: &Grid, origin: &[usize; MAX_DIM]) -> Point {
    let mut x = [0.0; MAX_DIM];
    for k in 0..grid.dim() {
        x[k] = grid.domain.lower[k] + (origin[k] as f64 + 0.5) * grid.h;
    }
    x
}

/// `int phi_i dx` for every node.
pub fn lumped_mass(grid: &Grid) -> Vec<f64> {
    let cell = ReferenceCell::new(grid.element, grid.dim());
    let vol = grid.h.powi(grid.dim() as i32);
    (0..grid.num_nodes())
        .map(|p| {
            let mut m = 0.0;
            for_each_adjacent_cell(grid, grid.node_ijk(p), |l, _| m += vol * cell.lumped[l]);
            m
        })
        .collect()
}

/// Nodal density of `mu` (per unit volume) for the absolutely continuous
/// variants; `None` for `Zero`; error for `HoleDirichlet`.
pub fn measure_density(mesh: &Mesh, mu: &MeasureSpec) -> Result<Option<Vec<f64>>> {
    mu.validate()?;
    let n = mesh.num_nodes();
    Ok(match mu {
        MeasureSpec::Zero => None,
        MeasureSpec::ConstantDensity(m) => Some(vec![*m; n]),
        MeasureSpec::GridDensity(field) => {
            if !field.grid.same_as(&mesh.grid) {
                return Err(Error::MeshMismatch);
            }
            Some(field.values.clone())
        }
        MeasureSpec::Penalized { lattice, k } => {
            if !mesh.classified_for(lattice) {
                return Err(Error::UnclassifiedMesh);
            }
            Some((0..n).map(|i| if mesh.is_hole(i) { *k } else { 0.0 }).collect())
        }
        MeasureSpec::HoleDirichlet(_) => {
            return Err(Error::InvalidParameter(
                "hole-Dirichlet measure is a constraint, not a density".into(),
            ))
        }
    })
}

/// Stiffness of `coef` plus `diag_extra` on the diagonal.
pub fn assemble_operator<C: CoefficientSource>(grid: &Grid, coef: &C, diag_extra: Option<&[f64]>, exec: Execution) -> CsrMatrix {
    let dim = grid.dim();
    let cell = ReferenceCell::new(grid.element, dim);
    let scale = grid.h.powi(dim as i32 - 2);
    let diag_only = coef.diagonal_only();
    let strides = grid.strides();
    let n = grid.num_nodes();
    let center_code: usize = (0..dim).map(|a| 3usize.pow(a as u32)).sum();
    let ncodes = 3usize.pow(dim as u32);

    let build_block = |b: usize| {
        let lo = b * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut counts = Vec::with_capacity(hi - lo);
        let mut cols = Vec::with_capacity((hi - lo) * 7);
        let mut vals = Vec::with_capacity((hi - lo) * 7);
        let mut krow = [0.0; MAX_LOCAL];
        for p in lo..hi {
            let ijk = grid.node_ijk(p);
            let mut stencil = [0.0f64; 27];
            for_each_adjacent_cell(grid, ijk, |l, origin| {
                let a_mat = coef.matrix_at(&origin_midpoint(grid, &origin), dim);
                cell.stiffness_row(&a_mat, diag_only, l, &mut krow);
                for (m, k) in krow.iter().enumerate().take(cell.nloc) {
                    let mut code = 0;
                    let mut pow = 1;
                    for a in 0..dim {
                        let d = (m >> a & 1) as isize - (l >> a & 1) as isize;
                        code += ((d + 1) as usize) * pow;
                        pow *= 3;
                    }
                    stencil[code] += scale * k;
                }
            });
            if let Some(extra) = diag_extra {
                stencil[center_code] += extra[p];
            }
            let biggest = stencil.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let cutoff = 1e-13 * biggest;
            let mut count = 0;
            for (code, v) in stencil.iter().enumerate().take(ncodes) {
                if code != center_code && v.abs() <= cutoff {
                    continue;
                }
                let mut col = p as isize;
                let mut rem = code;
                for s in strides.iter().take(dim) {
                    col += ((rem % 3) as isize - 1) * *s as isize;
                    rem /= 3;
                }
                cols.push(col as u32);
                vals.push(*v);
                count += 1;
            }
            counts.push(count);
        }
        (counts, cols, vals)
    };
    let blocks = par::map(exec, n.div_ceil(CHUNK), build_block);
    CsrMatrix::from_blocks(n, blocks)
}

/// `int F . grad(phi_i) dx` for a cellwise vector field sampled at cell
/// midpoints.
pub fn vector_load(grid: &Grid, field: impl Fn(&Point) -> Point + Sync) -> Vec<f64> {
    let dim = grid.dim();
    let cell = ReferenceCell::new(grid.element, dim);
    let scale = grid.h.powi(dim as i32 - 1);
    let mut out = vec![0.0; grid.num_nodes()];
    par::fill(Execution::default(), &mut out, |p| {
        let mut acc = 0.0;
        for_each_adjacent_cell(grid, grid.node_ijk(p), |l, origin| {
            let f = field(&origin_midpoint(grid, &origin));
            for a in 0..dim {
                acc += scale * f[a] * cell.grad_integral[a][l];
            }
        });
        acc
    });
    out
}

/// Discrete relaxed Dirichlet problem with homogeneous outer boundary data.
pub fn assemble<C: CoefficientSource>(mesh: &Mesh, coef: &C, mu: &MeasureSpec, load: &Load) -> Result<SparseSystem> {
    assemble_with(mesh, coef, mu, load, Execution::default())
}

pub fn assemble_with<C: CoefficientSource>(
    mesh: &Mesh,
    coef: &C,
    mu: &MeasureSpec,
    load: &Load,
    exec: Execution,
) -> Result<SparseSystem> {
    let grid = mesh.grid;
    if !load.f.grid.same_as(&grid) || load.g.as_ref().is_some_and(|g| !g.grid.same_as(&grid)) {
        return Err(Error::MeshMismatch);
    }
    if let Some(lattice) = mu.lattice() {
        if !mesh.classified_for(lattice) {
            return Err(Error::UnclassifiedMesh);
        }
    }
    let mass = lumped_mass(&grid);
    let density = match mu {
        MeasureSpec::HoleDirichlet(_) => {
            mu.validate()?;
            None
        }
        _ => measure_density(mesh, mu)?,
    };
    let diag_extra: Option<Vec<f64>> = density.as_ref().map(|d| mass.iter().zip(d).map(|(m, d)| m * d).collect());
    let matrix = assemble_operator(&grid, coef, diag_extra.as_deref(), exec);

    let mut rhs: Vec<f64> = mass.iter().zip(&load.f.values).map(|(m, f)| m * f).collect();
    if let (Some(g), Some(weights)) = (&load.g, &diag_extra) {
        for ((r, w), gv) in rhs.iter_mut().zip(weights).zip(&g.values) {
            *r += w * gv;
        }
    }
    let hole_constraint = matches!(mu, MeasureSpec::HoleDirichlet(_));
    let constrained = mesh
        .node_class
        .iter()
        .map(|c| *c == NodeClass::OuterBoundary || (hole_constraint && *c == NodeClass::HoleInterior))
        .collect();
    Ok(SparseSystem { grid, matrix, rhs, constrained, fixed_values: vec![0.0; grid.num_nodes()] })
}

/// Interpolates `f` and wraps it as a load without measure part.
pub fn load_from_fn(grid: Grid, f: impl Fn(&Point) -> f64) -> Load {
    Load::new(NodalField::from_fn(grid, f))
}
