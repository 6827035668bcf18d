use super::config::{cells_for_eps, CorrectorCase, RunConfig};
use super::report::{strictly_decreasing, Cell, Check, ConvergenceReport};
use super::strange_term::{perforated_setup, two_phase};
use crate::error::{Error, Result};
use crate::example6::omega_field_assemble;
use crate::fem::norms::mean_flux;
use crate::fem::{build_mesh_cells, Mesh, NodalField};
use crate::homogenization::{
    build_corrector, choose_psi_delta, corrector_error, probe_row, solve_relaxed, CorrectorError, CorrectorSet,
};
use crate::problem_model::{mu0_prediction, CoefficientField, Load, MeasureSpec};

const MARGIN: usize = 2;
/// Relative tolerance on the homogenized flux entries.
pub const FLUX_TOL: f64 = 0.03;

const BASE: &[&str] = &[
    "eps",
    "cells",
    "h",
    "naive_energy",
    "naive_measure",
    "naive_total",
    "corrector_energy",
    "corrector_measure",
    "corrector_total",
    "ratio",
    "naive_local",
    "corrector_local",
    "ratio_local",
    "psi_attained",
];

const TAIL: &[&str] = &["l2_gap", "flux_gap", "ratio_within_tol", "below_naive", "below_naive_local"];

/// Column names; the `z{j}_sup`, `flux_{jj}` and `flux_{jj}_rel_dev` groups
/// depend on the dimension.
pub fn columns(dim: usize) -> Vec<String> {
    let mut out: Vec<String> = BASE.iter().map(|s| s.to_string()).collect();
    out.extend((0..dim).map(|j| format!("z{j}_sup")));
    out.extend((0..dim).map(|j| format!("flux_{j}{j}")));
    out.extend((0..dim).map(|j| format!("flux_{j}{j}_rel_dev")));
    out.extend(TAIL.iter().map(|s| s.to_string()));
    out
}

struct Case {
    eps: f64,
    mesh: Mesh,
    cells: usize,
    a_eps: CoefficientField,
    a0: CoefficientField,
    mu_eps: MeasureSpec,
    mu0: MeasureSpec,
    omega: NodalField,
    set: CorrectorSet,
}

fn laminate_case(config: &RunConfig, eps: f64) -> Result<Case> {
    let domain = config.domain()?;
    let cells = cells_for_eps(config.grid, eps);
    let mesh = build_mesh_cells(&domain, cells, config.element)?;
    let a_eps = CoefficientField::laminate(0, eps, vec![(0.5, config.a), (0.5, config.b)], config.alpha, config.beta)?;
    let a0 = a_eps.laminate_h_limit(config.dim).ok_or_else(|| Error::InvalidParameter("laminate H-limit".into()))?;
    let set = CorrectorSet::solve(&a_eps, &a0, eps, &mesh, MARGIN, &config.solver())?;
    let omega = NodalField::constant(mesh.grid, 1.0);
    Ok(Case { eps, mesh, cells, a_eps, a0, mu_eps: MeasureSpec::Zero, mu0: MeasureSpec::Zero, omega, set })
}

fn perforated_case(config: &RunConfig, eps: f64) -> Result<Case> {
    let setup = perforated_setup(config, eps)?;
    let a_eps = two_phase(&setup, config.a, config.b)?;
    // the outer balls have vanishing volume, so the H-limit is a I
    let a0 = CoefficientField::isotropic(config.a, config.dim)?;
    let set = if config.a == config.b {
        CorrectorSet::trivial(&a0, eps, &setup.mesh)
    } else {
        CorrectorSet::solve(&a_eps, &a0, eps, &setup.mesh, MARGIN, &config.solver())?
    };
    let omega = omega_field_assemble(&setup.lattice, &setup.mesh)?.field;
    Ok(Case {
        eps,
        cells: setup.cells,
        a_eps,
        a0,
        mu_eps: MeasureSpec::HoleDirichlet(setup.lattice),
        mu0: MeasureSpec::ConstantDensity(mu0_prediction(config.b, config.dim)?),
        omega,
        set,
        mesh: setup.mesh,
    })
}

/// Corrector estimate study: the error of `v = (psi + sum D_j psi z_j) omega`
/// against the naive approximation `u0`, globally and on the inner half-box.
pub fn run_corrector(config: &RunConfig) -> Result<ConvergenceReport> {
    let dim = config.dim;
    let cols = columns(dim);
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut report = ConvergenceReport::new(config, &names);
    let params = config.solver();
    let inner = config.domain()?.scaled(0.5);
    for &eps in &config.eps_list {
        let case = match config.case {
            CorrectorCase::Laminate => laminate_case(config, eps)?,
            CorrectorCase::Perforated => perforated_case(config, eps)?,
        };
        let load = Load::new(NodalField::constant(case.mesh.grid, 1.0));
        let u_eps = solve_relaxed(&case.a_eps, &case.mu_eps, &load, &case.mesh, &params)?;
        let u0 = solve_relaxed(&case.a0, &case.mu0, &load, &case.mesh, &params)?;
        let ones = NodalField::constant(case.mesh.grid, 1.0);
        let psi = choose_psi_delta(&u0, &ones, config.theta, config.radius, config.beta, &case.mu0, &case.mesh)?;
        let v = build_corrector(&psi.psi, &case.set, &case.omega)?;
        let err = |w: &NodalField, region| corrector_error(&u_eps, w, &case.a_eps, &case.mu_eps, &case.mesh, region);
        let naive: CorrectorError = err(&u0, None)?;
        let corr = err(&v, None)?;
        let naive_local = err(&u0, Some(&inner))?.total();
        let corr_local = err(&v, Some(&inner))?.total();
        let ratio = corr.total() / naive.total();

        let probe = probe_row(eps, &u_eps, &case.a_eps, &u0, &case.a0)?;

        let mut row: Vec<Cell> = vec![
            case.eps.into(),
            case.cells.into(),
            case.mesh.grid.h.into(),
            naive.energy.into(),
            naive.measure.into(),
            naive.total().into(),
            corr.energy.into(),
            corr.measure.into(),
            corr.total().into(),
            ratio.into(),
            naive_local.into(),
            corr_local.into(),
            (corr_local / naive_local).into(),
            psi.attained.into(),
        ];
        row.extend(case.set.sup_norms.iter().map(|s| Cell::Num(*s)));
        let target = |j: usize| case.a0.eval(&case.mesh.grid.domain.center(), dim).m[j][j];
        let fluxes: Vec<f64> = match config.case {
            CorrectorCase::Laminate => (0..dim).map(|j| mean_flux(&case.set.z[j], &case.a_eps, j, j, None)).collect(),
            CorrectorCase::Perforated => vec![f64::NAN; dim],
        };
        row.extend(fluxes.iter().map(|f| if f.is_finite() { Cell::Num(*f) } else { Cell::Missing }));
        row.extend((0..dim).map(|j| {
            let d = fluxes[j] / target(j) - 1.0;
            if d.is_finite() {
                Cell::Num(d)
            } else {
                Cell::Missing
            }
        }));
        row.extend([
            probe.l2_gap.into(),
            probe.flux_gap.into(),
            (ratio <= config.tol).into(),
            (corr.total() < naive.total()).into(),
            (corr_local < naive_local).into(),
        ]);
        report.push_row(row);
    }

    let last = report.rows.len() - 1;
    let last_eps = config.eps_list[last];
    match config.case {
        CorrectorCase::Laminate => {
            let ratio = report.get(last, "ratio").and_then(Cell::as_f64);
            report.checks.push(Check::new(
                "ratio_within_tol",
                ratio.is_some_and(|r| r <= config.tol),
                format!("corrector/naive = {ratio:?} at eps={last_eps} (tol {})", config.tol),
            ));
            let devs: Vec<Option<f64>> =
                (0..dim).map(|j| report.get(last, &format!("flux_{j}{j}_rel_dev")).and_then(Cell::as_f64)).collect();
            report.checks.push(Check::new(
                "flux_within_tol",
                devs.iter().all(|d| d.is_some_and(|d| d.abs() <= FLUX_TOL)),
                format!("relative deviations {devs:?} at eps={last_eps} (tol {FLUX_TOL})"),
            ));
            for name in ["l2_gap", "flux_gap"] {
                let v = report.values(name);
                if let Some(pass) = strictly_decreasing(&v) {
                    report.checks.push(Check::new(&format!("{name}_decreasing"), pass, format!("{v:?}")));
                }
            }
        }
        CorrectorCase::Perforated => {
            for name in ["below_naive", "below_naive_local"] {
                let c = report.column(name).expect("known column");
                let flags: Vec<bool> = report.rows.iter().map(|r| r[c].as_flag().unwrap_or(false)).collect();
                report.checks.push(Check::new(name, flags.iter().all(|f| *f), format!("per eps {flags:?}")));
            }
        }
    }
    Ok(report)
}
