//! Preconditioned conjugate gradients on the free degrees of freedom.

use serde::{Deserialize, Serialize};

use super::assembly::SparseSystem;
use super::field::NodalField;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { rel_tol: 1e-8, max_iter: 20_000, preconditioner: Preconditioner::Jacobi, execution: Execution::default() }
    }
}

impl SolverParams {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "solver needs rel_tol in (0,1) and max_iter >= 1, got {} / {}",
                self.rel_tol, self.max_iter
            )));
        }
        Ok(())
    }
}

/// Convergence record of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn solve(system: &SparseSystem, params: &SolverParams) -> Result<NodalField> {
    solve_with_stats(system, params).map(|(u, _)| u)
}

pub fn solve_with_stats(system: &SparseSystem, params: &SolverParams) -> Result<(NodalField, SolveStats)> {
    params.validate()?;
    let exec = params.execution;
    let n = system.matrix.nrows;
    let a = &system.matrix;
    let fixed = &system.constrained;

    let mut x: Vec<f64> = (0..n).map(|i| if fixed[i] { system.fixed_values[i] } else { 0.0 }).collect();
    let inv_diag: Vec<f64> = match params.preconditioner {
        Preconditioner::Jacobi => a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect(),
        Preconditioner::None => vec![1.0; n],
    };

    let mut r = vec![0.0; n];
    a.mul_vec_into(&x, &mut r, exec);
    par::update(exec, &mut r, |i, ax| if fixed[i] { 0.0 } else { system.rhs[i] - ax });
    let r0 = par::sum(exec, n, |i| r[i] * r[i]).sqrt();
    if r0 == 0.0 {
        let stats = SolveStats { iterations: 0, relative_residual: 0.0 };
        return Ok((NodalField { grid: system.grid, values: x }, stats));
    }

    let mut z = vec![0.0; n];
    par::fill(exec, &mut z, |i| inv_diag[i] * r[i]);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = par::sum(exec, n, |i| r[i] * z[i]);
    let mut rel = 1.0;

    for it in 1..=params.max_iter {
        if !(rz > 0.0) {
            return Err(Error::NotPositiveDefinite { iteration: it, curvature: rz });
        }
        a.mul_vec_into(&p, &mut q, exec);
        par::update(exec, &mut q, |i, v| if fixed[i] { 0.0 } else { v });
        let pq = par::sum(exec, n, |i| p[i] * q[i]);
        if !(pq > 0.0) {
            return Err(Error::NotPositiveDefinite { iteration: it, curvature: pq });
        }
        let alpha = rz / pq;
        par::update(exec, &mut x, |i, v| v + alpha * p[i]);
        par::update(exec, &mut r, |i, v| v - alpha * q[i]);
        let rr = par::sum(exec, n, |i| r[i] * r[i]);
        rel = rr.sqrt() / r0;
        if rel <= params.rel_tol {
            let stats = SolveStats { iterations: it, relative_residual: rel };
            return Ok((NodalField { grid: system.grid, values: x }, stats));
        }
        par::fill(exec, &mut z, |i| inv_diag[i] * r[i]);
        let rz_new = par::sum(exec, n, |i| r[i] * z[i]);
        let beta = rz_new / rz;
        rz = rz_new;
        par::update(exec, &mut p, |i, v| z[i] + beta * v);
    }
    Err(Error::NotConverged { iterations: params.max_iter, residual: rel })
}

/// Full unconstrained residual `b - A u`: the discrete reaction measure at
/// constrained nodes. Fails if `u` does not solve the free equations to
/// relative accuracy `tol`.
pub fn reaction_forces(system: &SparseSystem, u: &NodalField, tol: f64) -> Result<NodalField> {
    if !u.grid.same_as(&system.grid) {
        return Err(Error::MeshMismatch);
    }
    let au = system.matrix.mul_vec(&u.values);
    let r: Vec<f64> = system.rhs.iter().zip(&au).map(|(b, a)| b - a).collect();
    let (mut free_res, mut free_rhs) = (0.0, 0.0);
    for i in 0..r.len() {
        if !system.constrained[i] {
            free_res += r[i] * r[i];
            free_rhs += system.rhs[i] * system.rhs[i];
        }
    }
    let rel = if free_rhs > 0.0 { (free_res / free_rhs).sqrt() } else { free_res.sqrt() };
    if rel > tol {
        return Err(Error::NotASolution { residual: rel });
    }
    Ok(NodalField { grid: u.grid, values: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::assemble;
    use crate::fem::mesh::{build_mesh, ElementKind};
    use crate::fem::sparse::CsrMatrix;
    use crate::problem_model::{CoefficientField, Domain, Load, MeasureSpec};
    use approx::assert_relative_eq;

    fn toy_grid() -> crate::fem::mesh::Grid {
        build_mesh(&Domain::unit(2).unwrap(), 0.5, ElementKind::Simplex).unwrap().grid
    }

    fn raw_system(matrix: CsrMatrix, rhs: Vec<f64>) -> SparseSystem {
        let grid = toy_grid();
        let n = matrix.nrows;
        SparseSystem { grid, matrix, rhs, constrained: vec![false; n], fixed_values: vec![0.0; n] }
    }

    #[test]
    fn identity_system() {
        let mut rhs = vec![0.0; 9];
        rhs[0] = 1.0;
        let sys = raw_system(CsrMatrix::identity(9), rhs.clone());
        let u = solve(&sys, &SolverParams::default()).unwrap();
        assert_eq!(u.values, rhs);
    }

    #[test]
    fn one_node_poisson() {
        let mesh = build_mesh(&Domain::unit(2).unwrap(), 0.5, ElementKind::Simplex).unwrap();
        let a = CoefficientField::isotropic(1.0, 2).unwrap();
        let load = Load::new(NodalField::constant(mesh.grid, 1.0));
        let sys = assemble(&mesh, &a, &MeasureSpec::Zero, &load).unwrap();
        let u = solve(&sys, &SolverParams::with_tol(1e-10)).unwrap();
        assert_relative_eq!(u.values[4], 0.0625, epsilon = 1e-14);
        let sys = assemble(&mesh, &a, &MeasureSpec::ConstantDensity(4.0), &load).unwrap();
        let u = solve(&sys, &SolverParams::with_tol(1e-10)).unwrap();
        assert_relative_eq!(u.values[4], 0.05, epsilon = 1e-14);
        assert_eq!(u.values[0], 0.0);
    }

    #[test]
    fn indefinite_is_reported() {
        let mut t: Vec<_> = (0..9).map(|i| (i, i, 1.0)).collect();
        t.extend([(0, 1, 2.0), (1, 0, 2.0)]);
        let mut rhs = vec![0.0; 9];
        rhs[0] = 1.0;
        rhs[1] = -1.0;
        let sys = raw_system(CsrMatrix::from_triplets(9, &t), rhs);
        let err = solve(&sys, &SolverParams::default()).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn non_convergence_reports_residual() {
        let mesh = build_mesh(&Domain::unit(2).unwrap(), 1.0 / 32.0, ElementKind::Simplex).unwrap();
        let a = CoefficientField::isotropic(1.0, 2).unwrap();
        let load = Load::new(NodalField::constant(mesh.grid, 1.0));
        let sys = assemble(&mesh, &a, &MeasureSpec::Zero, &load).unwrap();
        let params = SolverParams { max_iter: 3, ..SolverParams::default() };
        match solve(&sys, &params) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mesh = build_mesh(&Domain::unit(2).unwrap(), 0.25, ElementKind::Simplex).unwrap();
        let a = CoefficientField::isotropic(1.0, 2).unwrap();
        let load = Load::new(NodalField::zeros(mesh.grid));
        let sys = assemble(&mesh, &a, &MeasureSpec::Zero, &load).unwrap();
        let u = solve(&sys, &SolverParams::default()).unwrap();
        assert!(u.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn jacobi_and_plain_agree() {
        let mesh = build_mesh(&Domain::unit(2).unwrap(), 1.0 / 16.0, ElementKind::Multilinear).unwrap();
        let a = CoefficientField::isotropic(2.0, 2).unwrap();
        let load = Load::new(NodalField::from_fn(mesh.grid, |x| x[0] + x[1]));
        let sys = assemble(&mesh, &a, &MeasureSpec::ConstantDensity(3.0), &load).unwrap();
        let u1 = solve(&sys, &SolverParams::with_tol(1e-12)).unwrap();
        let plain = SolverParams { preconditioner: Preconditioner::None, ..SolverParams::with_tol(1e-12) };
        let u2 = solve(&sys, &plain).unwrap();
        for (a, b) in u1.values.iter().zip(&u2.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(SolverParams::with_tol(0.0).validate().is_err());
        assert!(SolverParams { max_iter: 0, ..Default::default() }.validate().is_err());
    }
}
