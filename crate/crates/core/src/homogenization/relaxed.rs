use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_with, lumped_mass, measure_density};
use crate::fem::{reaction_forces, solve_with_stats, Mesh, NodalField, NodeClass, SolveStats, SolverParams};
use crate::problem_model::{CoefficientField, Load, MeasureSpec};

/// Discrete solution of `int A Du Dy + int u y dmu = <f,y> + int g y dmu`
/// with `u = 0` on the outer boundary.
pub fn solve_relaxed(
    a: &CoefficientField,
    mu: &MeasureSpec,
    load: &Load,
    mesh: &Mesh,
    params: &SolverParams,
) -> Result<NodalField> {
    Ok(solve_relaxed_with_stats(a, mu, load, mesh, params)?.0)
}

pub fn solve_relaxed_with_stats(
    a: &CoefficientField,
    mu: &MeasureSpec,
    load: &Load,
    mesh: &Mesh,
    params: &SolverParams,
) -> Result<(NodalField, SolveStats)> {
    let system = assemble_with(mesh, a, mu, load, params.execution)?;
    solve_with_stats(&system, params)
}

/// Relaxed problem with right-hand side 1.
pub fn solve_w(a: &CoefficientField, mu: &MeasureSpec, mesh: &Mesh, params: &SolverParams) -> Result<NodalField> {
    Ok(w_and_reactions(a, mu, mesh, params)?.w)
}

/// `w` together with the measure `nu = 1 + div(A Dw)` it generates.
#[derive(Debug, Clone)]
pub struct WSolve {
    pub w: NodalField,
    /// Nodal masses of `nu`: reactions at hole nodes for hole constraints,
    /// `w dmu` for absolutely continuous measures.
    pub nu: NodalField,
    /// Reactions at the outer boundary nodes.
    pub boundary_reaction: f64,
    pub stats: SolveStats,
}

pub fn w_and_reactions(a: &CoefficientField, mu: &MeasureSpec, mesh: &Mesh, params: &SolverParams) -> Result<WSolve> {
    let grid = mesh.grid;
    let load = Load::new(NodalField::constant(grid, 1.0));
    let system = assemble_with(mesh, a, mu, &load, params.execution)?;
    let (w, stats) = solve_with_stats(&system, params)?;
    // the residual check is looser than the solver tolerance by a safety factor
    let reactions = reaction_forces(&system, &w, 100.0 * params.rel_tol)?;
    let boundary_reaction = (0..grid.num_nodes())
        .filter(|&i| mesh.node_class[i] == NodeClass::OuterBoundary)
        .map(|i| reactions.values[i])
        .sum();
    let nu = match mu {
        MeasureSpec::Zero => vec![0.0; grid.num_nodes()],
        MeasureSpec::HoleDirichlet(_) => (0..grid.num_nodes())
            .map(|i| if mesh.node_class[i] == NodeClass::HoleInterior { reactions.values[i] } else { 0.0 })
            .collect(),
        _ => {
            let density = measure_density(mesh, mu)?.unwrap_or_default();
            let mass = lumped_mass(&grid);
            (0..grid.num_nodes())
                .map(|i| if mesh.node_class[i] == NodeClass::OuterBoundary { 0.0 } else { mass[i] * density[i] * w.values[i] })
                .collect()
        }
    };
    Ok(WSolve { w, nu: NodalField { grid, values: nu }, boundary_reaction, stats })
}

/// Nodal reaction measure of the hole-constrained `w` problem.
pub fn reaction_measure(a: &CoefficientField, mu: &MeasureSpec, mesh: &Mesh, params: &SolverParams) -> Result<NodalField> {
    if !matches!(mu, MeasureSpec::HoleDirichlet(_)) {
        return Err(Error::InvalidParameter("reaction measure needs a hole-Dirichlet measure".into()));
    }
    Ok(w_and_reactions(a, mu, mesh, params)?.nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, classify_holes, ElementKind};
    use crate::problem_model::{Domain, PerforationLattice};
    use approx::assert_relative_eq;

    fn params() -> SolverParams {
        SolverParams::with_tol(1e-10)
    }

    #[test]
    fn square_center_value() {
        let mesh = build_mesh(&Domain::unit(2).unwrap(), 0.5, ElementKind::Simplex).unwrap();
        let a = CoefficientField::isotropic(1.0, 2).unwrap();
        let w = solve_w(&a, &MeasureSpec::Zero, &mesh, &params()).unwrap();
        assert_relative_eq!(w.values[4], 1.0 / 16.0, epsilon = 1e-14);
    }

    #[test]
    fn torsion_center_value_self_converges() {
        let a = CoefficientField::isotropic(1.0, 2).unwrap();
        let center = |m: usize| {
            let mesh = build_mesh(&Domain::unit(2).unwrap(), 1.0 / m as f64, ElementKind::Simplex).unwrap();
            let w = solve_w(&a, &MeasureSpec::Zero, &mesh, &params()).unwrap();
            w.values[mesh.grid.node_index([m / 2, m / 2, 0])]
        };
        let (c64, c128) = (center(64), center(128));
        assert!((c64 - c128).abs() < 2e-4);
        assert!((c64 - 0.0737).abs() < 5e-4, "{c64}");
    }

    #[test]
    fn holes_vanish_and_reactions_balance() {
        let domain = Domain::unit(3).unwrap();
        let lattice = PerforationLattice::new(0.5, 2.0, 3).unwrap();
        let mesh = classify_holes(&build_mesh(&domain, 1.0 / 16.0, ElementKind::Simplex).unwrap(), &lattice);
        let a = CoefficientField::isotropic(1.0, 3).unwrap();
        let sol = w_and_reactions(&a, &MeasureSpec::HoleDirichlet(lattice), &mesh, &params()).unwrap();
        for i in 0..mesh.num_nodes() {
            if mesh.is_hole(i) {
                assert_eq!(sol.w.values[i], 0.0);
            }
        }
        assert!(sol.nu.min() >= -1e-12);
        let total: f64 = sol.nu.values.iter().sum();
        assert!(total > 0.0 && total <= 1.0);
        assert_relative_eq!(total + sol.boundary_reaction, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn reaction_measure_requires_holes() {
        let mesh = build_mesh(&Domain::unit(2).unwrap(), 0.25, ElementKind::Simplex).unwrap();
        let a = CoefficientField::isotropic(1.0, 2).unwrap();
        assert!(reaction_measure(&a, &MeasureSpec::Zero, &mesh, &params()).is_err());
        let sol = w_and_reactions(&a, &MeasureSpec::Zero, &mesh, &params()).unwrap();
        assert_eq!(sol.nu.max_abs(), 0.0);
    }
}
