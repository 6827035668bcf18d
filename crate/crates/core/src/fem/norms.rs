//! Energies, weighted masses, discrete gradients and error norms.

use super::assembly::{for_each_adjacent_cell, lumped_mass, measure_density};
use super::element::{ReferenceCell, MAX_LOCAL};
use super::field::NodalField;
use super::mesh::{Grid, Mesh};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::problem_model::{CoefficientSource, Domain, MeasureSpec, Point, MAX_DIM};

fn corner_values(grid: &Grid, cell: usize, u: &[f64]) -> [f64; MAX_LOCAL] {
    let nodes = grid.cell_nodes(cell);
    let mut out = [0.0; MAX_LOCAL];
    for l in 0..(1 << grid.dim()) {
        out[l] = u[nodes[l]];
    }
    out
}

fn cell_in_region(grid: &Grid, cell: usize, region: Option<&Domain>) -> bool {
    region.is_none_or(|r| r.contains(&grid.cell_midpoint(cell)))
}

/// `int A Du.Du dx`, optionally restricted to the cells whose midpoint lies
/// in `region`.
pub fn energy_seminorm_in<C: CoefficientSource>(u: &NodalField, coef: &C, region: Option<&Domain>) -> f64 {
    let grid = u.grid;
    let dim = grid.dim();
    let cell = ReferenceCell::new(grid.element, dim);
    let scale = grid.h.powi(dim as i32 - 2);
    let diag_only = coef.diagonal_only();
    par::sum(Execution::default(), grid.num_cells(), |c| {
        if !cell_in_region(&grid, c, region) {
            return 0.0;
        }
        let a_mat = coef.matrix_at(&grid.cell_midpoint(c), dim);
        let uc = corner_values(&grid, c, &u.values);
        let mut krow = [0.0; MAX_LOCAL];
        let mut e = 0.0;
        for l in 0..cell.nloc {
            cell.stiffness_row(&a_mat, diag_only, l, &mut krow);
            e += uc[l] * (0..cell.nloc).map(|m| krow[m] * uc[m]).sum::<f64>();
        }
        scale * e
    })
}

pub fn energy_seminorm<C: CoefficientSource>(u: &NodalField, coef: &C) -> f64 {
    energy_seminorm_in(u, coef, None)
}

/// `int |Du|^2 dx`.
pub fn gradient_sq_norm_in(u: &NodalField, region: Option<&Domain>) -> f64 {
    let identity = crate::problem_model::CoefficientField::isotropic(1.0, u.grid.dim()).expect("identity");
    energy_seminorm_in(u, &identity, region)
}

/// Lumped `int u v dmu`.
pub fn weighted_mass(mesh: &Mesh, u: &NodalField, v: &NodalField, mu: &MeasureSpec) -> Result<f64> {
    u.check_same_grid(v)?;
    if !u.grid.same_as(&mesh.grid) {
        return Err(Error::MeshMismatch);
    }
    let Some(density) = measure_density(mesh, mu)? else {
        return Ok(0.0);
    };
    let mass = lumped_mass(&mesh.grid);
    Ok((0..mass.len()).map(|i| mass[i] * density[i] * u.values[i] * v.values[i]).sum())
}

/// Lumped `int u v dx`.
pub fn lumped_inner(u: &NodalField, v: &NodalField) -> Result<f64> {
    u.check_same_grid(v)?;
    let mass = lumped_mass(&u.grid);
    Ok((0..mass.len()).map(|i| mass[i] * u.values[i] * v.values[i]).sum())
}

/// `(|u - u*|_{H^1}, ||u - u*||_{L^2})` by cellwise quadrature.
pub fn h1_l2_errors(
    u: &NodalField,
    exact: impl Fn(&Point) -> f64 + Sync,
    exact_grad: impl Fn(&Point) -> Point + Sync,
) -> (f64, f64) {
    let grid = u.grid;
    let dim = grid.dim();
    let cell = ReferenceCell::new(grid.element, dim);
    let vol = grid.h.powi(dim as i32);
    let per_cell = par::map(Execution::default(), grid.num_cells(), |c| {
        let uc = corner_values(&grid, c, &u.values);
        let origin = grid.node_point(grid.cell_origin(c));
        let (mut e1, mut e0) = (0.0, 0.0);
        for (y, w) in &cell.quadrature {
            let mut x = [0.0; MAX_DIM];
            for k in 0..dim {
                x[k] = origin[k] + y[k] * grid.h;
            }
            let (v, g) = cell.eval(y, &uc);
            let ge = exact_grad(&x);
            e0 += w * (v - exact(&x)).powi(2);
            e1 += w * (0..dim).map(|a| (g[a] / grid.h - ge[a]).powi(2)).sum::<f64>();
        }
        (vol * e1, vol * e0)
    });
    let (h1, l2) = per_cell.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    (h1.sqrt(), l2.sqrt())
}

/// Cell-average gradients averaged to the nodes, one field per axis.
pub fn nodal_gradient(u: &NodalField) -> Vec<NodalField> {
    let grid = u.grid;
    let dim = grid.dim();
    let cell = ReferenceCell::new(grid.element, dim);
    (0..dim)
        .map(|a| {
            let values = par::map(Execution::default(), grid.num_nodes(), |p| {
                let (mut acc, mut count) = (0.0, 0.0);
                for_each_adjacent_cell(&grid, grid.node_ijk(p), |_, origin| {
                    let c = origin[0] + grid.cells[0] * (origin[1] + grid.cells[1] * origin[2]);
                    let uc = corner_values(&grid, c, &u.values);
                    // the reference cell has unit volume
                    acc += (0..cell.nloc).map(|l| cell.grad_integral[a][l] * uc[l]).sum::<f64>() / grid.h;
                    count += 1.0;
                });
                acc / count
            });
            NodalField { grid, values }
        })
        .collect()
}

/// `int (A Du).g dx` for a constant vector `g` per cell, optionally weighted
/// by a smooth test function's gradient.
pub fn flux_pairing<C: CoefficientSource>(u: &NodalField, coef: &C, test_grad: impl Fn(&Point) -> Point + Sync) -> f64 {
    let grid = u.grid;
    let dim = grid.dim();
    let cell = ReferenceCell::new(grid.element, dim);
    let vol = grid.h.powi(dim as i32);
    par::sum(Execution::default(), grid.num_cells(), |c| {
        let uc = corner_values(&grid, c, &u.values);
        let origin = grid.node_point(grid.cell_origin(c));
        let a_mat = coef.matrix_at(&grid.cell_midpoint(c), dim);
        let mut acc = 0.0;
        for (y, w) in &cell.quadrature {
            let mut x = [0.0; MAX_DIM];
            for k in 0..dim {
                x[k] = origin[k] + y[k] * grid.h;
            }
            let (_, g) = cell.eval(y, &uc);
            let mut du = [0.0; MAX_DIM];
            for k in 0..dim {
                du[k] = g[k] / grid.h;
            }
            let flux = a_mat.apply(&du);
            let tg = test_grad(&x);
            acc += w * (0..dim).map(|k| flux[k] * tg[k]).sum::<f64>();
        }
        vol * acc
    })
}

/// Average over the cells of `(A (Du + e_j)) . e_k`.
pub fn mean_flux<C: CoefficientSource>(u: &NodalField, coef: &C, j: usize, k: usize, region: Option<&Domain>) -> f64 {
    let grid = u.grid;
    let dim = grid.dim();
    let cell = ReferenceCell::new(grid.element, dim);
    let vol = grid.h.powi(dim as i32);
    let cells: Vec<usize> = (0..grid.num_cells()).filter(|&c| cell_in_region(&grid, c, region)).collect();
    let total = par::sum(Execution::default(), cells.len(), |i| {
        let c = cells[i];
        let uc = corner_values(&grid, c, &u.values);
        let a_mat = coef.matrix_at(&grid.cell_midpoint(c), dim);
        let mut grad = [0.0; MAX_DIM];
        for (a, ga) in grad.iter_mut().enumerate().take(dim) {
            *ga = (0..cell.nloc).map(|l| cell.grad_integral[a][l] * uc[l]).sum::<f64>() / grid.h;
        }
        grad[j] += 1.0;
        vol * a_mat.apply(&grad)[k]
    });
    total / (cells.len() as f64 * vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{build_mesh, ElementKind};
    use crate::problem_model::{CoefficientField, SymMat};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn square(h: f64, kind: ElementKind) -> Mesh {
        build_mesh(&Domain::unit(2).unwrap(), h, kind).unwrap()
    }

    #[test]
    fn energy_of_linear_fields() {
        for kind in [ElementKind::Simplex, ElementKind::Multilinear] {
            let mesh = square(0.125, kind);
            let c = NodalField::constant(mesh.grid, 3.0);
            let id = CoefficientField::isotropic(1.0, 2).unwrap();
            assert!(energy_seminorm(&c, &id).abs() < 1e-14);
            let x1 = NodalField::from_fn(mesh.grid, |x| x[0]);
            assert_relative_eq!(energy_seminorm(&x1, &id), 1.0, epsilon = 1e-13);
            let aniso = CoefficientField::constant(SymMat::diagonal(&[4.0, 1.0]), 2, 1.0, 4.0).unwrap();
            assert_relative_eq!(energy_seminorm(&x1, &aniso), 4.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn weighted_mass_cases() {
        let mesh = square(0.125, ElementKind::Simplex);
        let one = NodalField::constant(mesh.grid, 1.0);
        let zero = NodalField::zeros(mesh.grid);
        assert_eq!(weighted_mass(&mesh, &one, &one, &MeasureSpec::Zero).unwrap(), 0.0);
        assert_relative_eq!(weighted_mass(&mesh, &one, &one, &MeasureSpec::ConstantDensity(2.5)).unwrap(), 2.5, epsilon = 1e-13);
        assert_eq!(weighted_mass(&mesh, &one, &zero, &MeasureSpec::ConstantDensity(2.5)).unwrap(), 0.0);
        let lat = crate::problem_model::PerforationLattice::new(0.5, 2.0, 3).unwrap();
        assert!(weighted_mass(&mesh, &one, &one, &MeasureSpec::HoleDirichlet(lat)).is_err());
    }

    #[test]
    fn errors_of_interpolated_linear_vanish() {
        for kind in [ElementKind::Simplex, ElementKind::Multilinear] {
            let mesh = square(0.25, kind);
            let f = |x: &Point| 1.0 + 2.0 * x[0] - x[1];
            let u = NodalField::from_fn(mesh.grid, f);
            let (e1, e0) = h1_l2_errors(&u, f, |_| [2.0, -1.0, 0.0]);
            assert!(e1 < 1e-12 && e0 < 1e-12);
            let z = NodalField::zeros(mesh.grid);
            assert_eq!(h1_l2_errors(&z, |_| 0.0, |_| [0.0; 3]), (0.0, 0.0));
        }
    }

    #[test]
    fn interpolation_error_rates() {
        let exact = |x: &Point| (PI * x[0]).sin() * (PI * x[1]).sin();
        let grad = |x: &Point| {
            [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos(), 0.0]
        };
        for kind in [ElementKind::Simplex, ElementKind::Multilinear] {
            let errs: Vec<(f64, f64)> = [16.0, 32.0]
                .iter()
                .map(|m| h1_l2_errors(&NodalField::from_fn(square(1.0 / m, kind).grid, exact), exact, grad))
                .collect();
            let r1 = (errs[0].0 / errs[1].0).log2();
            let r0 = (errs[0].1 / errs[1].1).log2();
            assert!((r1 - 1.0).abs() < 0.1, "{r1}");
            assert!((r0 - 2.0).abs() < 0.1, "{r0}");
        }
    }

    #[test]
    fn nodal_gradient_of_linear() {
        let mesh = build_mesh(&Domain::unit(3).unwrap(), 0.25, ElementKind::Simplex).unwrap();
        let u = NodalField::from_fn(mesh.grid, |x| 3.0 * x[0] - x[2]);
        let g = nodal_gradient(&u);
        assert!(g[0].values.iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert!(g[1].values.iter().all(|v| v.abs() < 1e-12));
        assert!(g[2].values.iter().all(|v| (v + 1.0).abs() < 1e-12));
    }

    #[test]
    fn mean_flux_of_zero_corrector() {
        let mesh = square(0.125, ElementKind::Simplex);
        let a = CoefficientField::constant(SymMat::diagonal(&[2.0, 3.0]), 2, 1.0, 3.0).unwrap();
        let z = NodalField::zeros(mesh.grid);
        assert_relative_eq!(mean_flux(&z, &a, 0, 0, None), 2.0, epsilon = 1e-13);
        assert_relative_eq!(mean_flux(&z, &a, 1, 1, None), 3.0, epsilon = 1e-13);
        assert!(mean_flux(&z, &a, 0, 1, None).abs() < 1e-14);
    }
}
