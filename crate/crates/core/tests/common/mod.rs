//! Property checks shared by the proptest suites and the acceptance run.
//! Each returns `Err` with a description of the first violation.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use homlab::experiments::{run, Experiment, RunConfig};
use homlab::fem::assembly::assemble_operator;
use homlab::fem::norms::gradient_sq_norm_in;
use homlab::fem::{assemble_with, build_mesh_cells, classify_holes, lumped_mass, solve, ElementKind, Mesh, NodalField, SolverParams};
use homlab::homogenization::{comparison_bounds_check, extract_strange_term, solve_relaxed, w_and_reactions};
use homlab::par::Execution;
use homlab::problem_model::{CoefficientField, Domain, Load, MeasureSpec, PerforationLattice};

pub type Check = Result<(), String>;

/// Deterministic pseudo-random value in `[0, 1)` from a seed and an index.
pub fn hash01(seed: u64, i: usize) -> f64 {
    let mut x = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    (x >> 11) as f64 / (1u64 << 53) as f64
}

pub fn random_field(mesh: &Mesh, seed: u64, zero_on_boundary: bool) -> NodalField {
    let grid = mesh.grid;
    let values = (0..grid.num_nodes())
        .map(|i| if zero_on_boundary && grid.is_outer_boundary(i) { 0.0 } else { hash01(seed, i) })
        .collect();
    NodalField { grid, values }
}

pub fn params() -> SolverParams {
    SolverParams::with_tol(1e-11)
}

/// Perforated unit cube with `cells` cells per axis and the two-phase
/// coefficient `a`/`b`.
pub struct Perforated {
    pub mesh: Mesh,
    pub lattice: PerforationLattice,
    pub coef: CoefficientField,
}

pub fn perforated(eps: f64, cells: usize, a: f64, b: f64) -> Perforated {
    let lattice = PerforationLattice::new(eps, 2.0, 3).unwrap();
    let mesh = classify_holes(&build_mesh_cells(&Domain::unit(3).unwrap(), cells, ElementKind::Simplex).unwrap(), &lattice);
    let coef = CoefficientField::two_phase(a, b, lattice, a.min(b), a.max(b)).unwrap();
    Perforated { mesh, lattice, coef }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `u^T K u >= alpha int |Du|^2` for fields vanishing on the boundary.
pub fn coercivity(p: &Perforated, seed: u64) -> Check {
    let k = assemble_operator(&p.mesh.grid, &p.coef, None, Execution::Sequential);
    let u = random_field(&p.mesh, seed, true);
    let form = dot(&u.values, &k.mul_vec(&u.values));
    let lower = p.coef.alpha * gradient_sq_norm_in(&u, None);
    if form >= lower * (1.0 - 1e-12) && form > 0.0 {
        Ok(())
    } else {
        Err(format!("u^T K u = {form} below alpha |Du|^2 = {lower}"))
    }
}

/// Energy estimate: `alpha ||Du|| <= ||f|| / sqrt(lambda_h)` with the discrete
/// Dirichlet eigenvalue `lambda_h = n (2/h)^2 sin^2(pi h / 2)` of the unit cube.
pub fn poincare_energy(p: &Perforated, seed: u64) -> Check {
    let f = random_field(&p.mesh, seed, false);
    let u = solve_relaxed(&p.coef, &MeasureSpec::HoleDirichlet(p.lattice), &Load::new(f.clone()), &p.mesh, &params())
        .map_err(|e| e.to_string())?;
    let grid = p.mesh.grid;
    let h = grid.h;
    let lambda = 3.0 * (2.0 / h).powi(2) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let mass = lumped_mass(&grid);
    let f_norm = (0..mass.len()).map(|i| mass[i] * f.values[i].powi(2)).sum::<f64>().sqrt();
    let u_norm = (0..mass.len()).map(|i| mass[i] * u.values[i].powi(2)).sum::<f64>().sqrt();
    let grad = gradient_sq_norm_in(&u, None).sqrt();
    let bound = f_norm / (p.coef.alpha * lambda.sqrt());
    let slack = 1.0 + 1e-8;
    if p.coef.alpha * grad <= slack * f_norm / lambda.sqrt() && u_norm <= slack * bound / lambda.sqrt() {
        Ok(())
    } else {
        Err(format!("|Du| = {grad}, ||u|| = {u_norm}, bound {bound}"))
    }
}

/// `f >= 0` gives `u >= 0`; `f1 <= f2` gives `u1 <= u2` (isotropic A).
pub fn max_and_comparison(p: &Perforated, seed: u64) -> Check {
    let mu = MeasureSpec::HoleDirichlet(p.lattice);
    let f1 = random_field(&p.mesh, seed, false);
    let f2 = NodalField { grid: f1.grid, values: f1.values.iter().enumerate().map(|(i, v)| v + hash01(seed + 1, i)).collect() };
    let u1 = solve_relaxed(&p.coef, &mu, &Load::new(f1), &p.mesh, &params()).map_err(|e| e.to_string())?;
    let u2 = solve_relaxed(&p.coef, &mu, &Load::new(f2), &p.mesh, &params()).map_err(|e| e.to_string())?;
    let tol = 1e-9 * u2.max_abs();
    if u1.min() < -tol {
        return Err(format!("maximum principle: min u = {}", u1.min()));
    }
    match (0..u1.len()).find(|&i| u1.values[i] > u2.values[i] + tol) {
        Some(i) => Err(format!("comparison principle at node {i}: {} > {}", u1.values[i], u2.values[i])),
        None => Ok(()),
    }
}

/// `0 <= w_mu <= w_0` for several measures.
pub fn w_bounds(p: &Perforated, density: f64, k: f64) -> Check {
    let w0 = w_and_reactions(&p.coef, &MeasureSpec::Zero, &p.mesh, &params()).map_err(|e| e.to_string())?.w;
    let tol = 1e-9 * w0.max_abs();
    for mu in [
        MeasureSpec::HoleDirichlet(p.lattice),
        MeasureSpec::ConstantDensity(density),
        MeasureSpec::Penalized { lattice: p.lattice, k },
    ] {
        let w = w_and_reactions(&p.coef, &mu, &p.mesh, &params()).map_err(|e| e.to_string())?.w;
        if w.min() < -tol {
            return Err(format!("{mu:?}: min w = {}", w.min()));
        }
        if let Some(i) = (0..w.len()).find(|&i| w.values[i] > w0.values[i] + tol) {
            return Err(format!("{mu:?}: w > w_0 at node {i}"));
        }
    }
    Ok(())
}

/// Penalized solutions decrease in `k` and approach the constrained one.
pub fn penalization(p: &Perforated, ks: &[f64]) -> Check {
    let load = Load::new(NodalField::constant(p.mesh.grid, 1.0));
    let exact =
        solve_relaxed(&p.coef, &MeasureSpec::HoleDirichlet(p.lattice), &load, &p.mesh, &params()).map_err(|e| e.to_string())?;
    let mass = lumped_mass(&p.mesh.grid);
    let mut prev: Option<(NodalField, f64)> = None;
    for &k in ks {
        let u = solve_relaxed(&p.coef, &MeasureSpec::Penalized { lattice: p.lattice, k }, &load, &p.mesh, &params())
            .map_err(|e| e.to_string())?;
        let dist = (0..mass.len()).map(|i| mass[i] * (u.values[i] - exact.values[i]).powi(2)).sum::<f64>().sqrt();
        if let Some((up, dp)) = &prev {
            if !(dist < *dp) {
                return Err(format!("distance not decreasing at k = {k}: {dist} >= {dp}"));
            }
            let tol = 1e-9 * up.max_abs();
            if let Some(i) = (0..u.len()).find(|&i| u.values[i] > up.values[i] + tol) {
                return Err(format!("u_k increased at node {i} for k = {k}"));
            }
        }
        prev = Some((u, dist));
    }
    let (_, last) = prev.ok_or("no penalties")?;
    let scale = (0..mass.len()).map(|i| mass[i] * exact.values[i].powi(2)).sum::<f64>().sqrt();
    if last <= 1e-4 * scale {
        Ok(())
    } else {
        Err(format!("final distance {last} vs solution norm {scale}"))
    }
}

/// `u(f1 + c f2) = u(f1) + c u(f2)`.
pub fn linearity(p: &Perforated, seed: u64, c: f64) -> Check {
    let mu = MeasureSpec::HoleDirichlet(p.lattice);
    let f1 = random_field(&p.mesh, seed, false);
    let f2 = random_field(&p.mesh, seed + 7, false);
    let f3 = f1.axpy(c, &f2).unwrap();
    let solve_f = |f: NodalField| solve_relaxed(&p.coef, &mu, &Load::new(f), &p.mesh, &params());
    let (u1, u2, u3) = (
        solve_f(f1).map_err(|e| e.to_string())?,
        solve_f(f2).map_err(|e| e.to_string())?,
        solve_f(f3).map_err(|e| e.to_string())?,
    );
    let combo = u1.axpy(c, &u2).unwrap();
    let err = u3.sub(&combo).unwrap().max_abs();
    if err <= 1e-7 * u3.max_abs().max(1e-300) {
        Ok(())
    } else {
        Err(format!("max |u3 - u1 - c u2| = {err}"))
    }
}

/// `u^T K (w phi) - w^T K (u phi) = b_f . (w phi) - b_1 . (u phi)` with the
/// nodal products as test functions.
pub fn duality(p: &Perforated, seed: u64) -> Check {
    let mu = MeasureSpec::HoleDirichlet(p.lattice);
    let grid = p.mesh.grid;
    let f = random_field(&p.mesh, seed, false);
    let phi = random_field(&p.mesh, seed + 3, false);
    let sys_f = assemble_with(&p.mesh, &p.coef, &mu, &Load::new(f), Execution::Sequential).map_err(|e| e.to_string())?;
    let sys_1 = assemble_with(&p.mesh, &p.coef, &mu, &Load::new(NodalField::constant(grid, 1.0)), Execution::Sequential)
        .map_err(|e| e.to_string())?;
    let u = solve(&sys_f, &params()).map_err(|e| e.to_string())?;
    let w = solve(&sys_1, &params()).map_err(|e| e.to_string())?;
    let wphi = w.mul(&phi).unwrap();
    let uphi = u.mul(&phi).unwrap();
    let k = &sys_f.matrix;
    let lhs = dot(&u.values, &k.mul_vec(&wphi.values)) - dot(&w.values, &k.mul_vec(&uphi.values));
    let rhs = dot(&sys_f.rhs, &wphi.values) - dot(&sys_1.rhs, &uphi.values);
    let scale = dot(&sys_f.rhs, &wphi.values).abs();
    if (lhs - rhs).abs() <= 1e-8 * scale {
        Ok(())
    } else {
        Err(format!("pairing identity: {lhs} vs {rhs}"))
    }
}

/// Reactions are nonnegative and sum with the boundary reaction to `meas(Omega)`.
pub fn reactions(p: &Perforated) -> Check {
    let sol = w_and_reactions(&p.coef, &MeasureSpec::HoleDirichlet(p.lattice), &p.mesh, &params())
        .map_err(|e| e.to_string())?;
    let total: f64 = sol.nu.values.iter().sum();
    let scale = sol.nu.max_abs();
    if sol.nu.min() < -1e-8 * scale {
        return Err(format!("negative reaction {}", sol.nu.min()));
    }
    if (total + sol.boundary_reaction - 1.0).abs() > 1e-8 {
        return Err(format!("sum of reactions {} + {} != 1", total, sol.boundary_reaction));
    }
    if !(total > 0.0) {
        return Err("no hole reaction".into());
    }
    Ok(())
}

/// `extract(c nu, w) = c extract(nu, w)` windowwise.
pub fn extraction_linearity(p: &Perforated, c: f64) -> Check {
    let sol = w_and_reactions(&p.coef, &MeasureSpec::HoleDirichlet(p.lattice), &p.mesh, &params())
        .map_err(|e| e.to_string())?;
    let eps = p.lattice.eps;
    let e1 = extract_strange_term(&sol.nu, &sol.w, eps, 1e-6, eps).map_err(|e| e.to_string())?;
    let e2 = extract_strange_term(&sol.nu.scaled(c), &sol.w, eps, 1e-6, eps).map_err(|e| e.to_string())?;
    for (a, b) in e1.windows.iter().zip(&e2.windows) {
        if (b.mu_hat - c * a.mu_hat).abs() > 1e-12 * (c * a.mu_hat).abs().max(1e-300) {
            return Err(format!("window {:?}: {} vs {}", a.index, b.mu_hat, c * a.mu_hat));
        }
    }
    Ok(())
}

/// Reflexive, and symmetric under swapping the two measures.
pub fn comparison_properties(mu: &[f64], nu: &[f64], alpha: f64, beta: f64) -> Check {
    let refl = comparison_bounds_check(mu, mu, alpha, beta, 0.0).map_err(|e| e.to_string())?;
    if !refl.pass {
        return Err("comparison is not reflexive".into());
    }
    let ab = comparison_bounds_check(mu, nu, alpha, beta, 0.0).map_err(|e| e.to_string())?;
    let ba = comparison_bounds_check(nu, mu, alpha, beta, 0.0).map_err(|e| e.to_string())?;
    if ab.cell_pass != ba.cell_pass {
        return Err("swapping the measures changed the verdict".into());
    }
    Ok(())
}

/// Two runs of the same configuration give byte-identical CSV, and the
/// sequential and parallel kernels give bit-identical solutions.
pub fn determinism() -> Check {
    let mut cfg = RunConfig::defaults(Experiment::Mms);
    cfg.levels = vec![8, 16, 32];
    let a = run(&cfg).map_err(|e| e.to_string())?.to_csv().map_err(|e| e.to_string())?;
    let b = run(&cfg).map_err(|e| e.to_string())?.to_csv().map_err(|e| e.to_string())?;
    if a != b {
        return Err("CSV differs between reruns".into());
    }
    let p = perforated(0.5, 16, 1.0, 2.0);
    let load = Load::new(random_field(&p.mesh, 11, false));
    let mu = MeasureSpec::HoleDirichlet(p.lattice);
    let mut out = Vec::new();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let sys = assemble_with(&p.mesh, &p.coef, &mu, &load, exec).map_err(|e| e.to_string())?;
        let params = SolverParams { execution: exec, ..params() };
        out.push(solve(&sys, &params).map_err(|e| e.to_string())?.values);
    }
    let same = out[0].iter().zip(&out[1]).all(|(x, y)| x.to_bits() == y.to_bits());
    if same {
        Ok(())
    } else {
        Err("sequential and parallel solutions differ".into())
    }
}
