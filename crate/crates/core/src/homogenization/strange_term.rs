use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::assembly::lumped_mass;
use crate::fem::NodalField;
use crate::problem_model::{Point, MAX_DIM};

/// One coarse-graining window.
#[derive(Debug, Clone, Serialize)]
pub struct WindowRecord {
    pub index: [usize; MAX_DIM],
    pub center: Point,
    /// Lebesgue measure of the window inside the domain.
    pub volume: f64,
    pub nu_sum: f64,
    pub w_mean: f64,
    pub mu_hat: f64,
    /// `w_mean` fell below the floor; `mu_hat` then uses the floor.
    pub saturated: bool,
    /// Centre at least one window away from the outer boundary.
    pub interior: bool,
}

#[derive(Debug, Clone)]
pub struct StrangeTermEstimate {
    pub eps: f64,
    pub window: f64,
    pub floor: f64,
    pub windows: Vec<WindowRecord>,
    /// Window densities spread back to the nodes.
    pub mu_hat: NodalField,
    pub total_mass: f64,
    pub reference_w: NodalField,
}

impl StrangeTermEstimate {
    fn interior_values(&self) -> Vec<f64> {
        self.windows.iter().filter(|w| w.interior).map(|w| w.mu_hat).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.windows.iter().filter(|w| w.interior).count()
    }

    /// Mean of the interior window densities; NaN when there are none.
    pub fn interior_mean(&self) -> f64 {
        let v = self.interior_values();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Population standard deviation of the interior window densities.
    pub fn interior_std(&self) -> f64 {
        let v = self.interior_values();
        let m = self.interior_mean();
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    }

    pub fn saturated_count(&self) -> usize {
        self.windows.iter().filter(|w| w.saturated).count()
    }

    /// `int mu_hat dx` by lumped quadrature of the nodal field.
    pub fn nodal_mass(&self) -> f64 {
        let m = lumped_mass(&self.mu_hat.grid);
        m.iter().zip(&self.mu_hat.values).map(|(a, b)| a * b).sum()
    }
}

/// Window slots of one coordinate: one slot, or two half-weighted slots for
/// nodes exactly on a window face.
fn axis_slots(t: f64, count: usize) -> [(usize, f64); 2] {
    let clamp = |k: f64| (k.max(0.0) as usize).min(count - 1);
    let base = t.floor();
    if (t - base - 0.5).abs() < 1e-9 {
        [(clamp(base), 0.5), (clamp(base + 1.0), 0.5)]
    } else {
        [(clamp(t.round()), 1.0), (0, 0.0)]
    }
}

/// Coarse-grained density `mu_hat = sum(nu) / (volume * max(mean(w), floor))`
/// on windows of side `window` centred at `lower + k * window`.
pub fn extract_strange_term(nu: &NodalField, w: &NodalField, window: f64, floor: f64, eps: f64) -> Result<StrangeTermEstimate> {
    nu.check_same_grid(w)?;
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter(format!("floor must be positive, got {floor}")));
    }
    if !(window >= eps * (1.0 - 1e-9)) {
        return Err(Error::WindowTooSmall { window, eps });
    }
    let grid = nu.grid;
    let dim = grid.dim();
    let d = grid.domain;
    let mut counts = [1usize; MAX_DIM];
    for (k, c) in counts.iter_mut().enumerate().take(dim) {
        *c = (d.edge(k) / window - 1e-9).ceil() as usize + 1;
    }
    let nwin = counts.iter().product::<usize>();
    let flat = |ix: &[usize; MAX_DIM]| ix[0] + counts[0] * (ix[1] + counts[1] * ix[2]);

    let mass = lumped_mass(&grid);
    let mut vol = vec![0.0; nwin];
    let mut nu_sum = vec![0.0; nwin];
    let mut w_int = vec![0.0; nwin];
    let mut node_slots: Vec<Vec<(usize, f64)>> = Vec::with_capacity(grid.num_nodes());
    for p in 0..grid.num_nodes() {
        let x = grid.node_point(p);
        let mut slots = vec![([0usize; MAX_DIM], 1.0)];
        for k in 0..dim {
            let axis = axis_slots((x[k] - d.lower[k]) / window, counts[k]);
            let mut next = Vec::with_capacity(2 * slots.len());
            for (ix, wt) in &slots {
                for (s, ws) in axis.iter().filter(|s| s.1 > 0.0) {
                    let mut j = *ix;
                    j[k] = *s;
                    next.push((j, wt * ws));
                }
            }
            slots = next;
        }
        let flat_slots: Vec<(usize, f64)> = slots.iter().map(|(ix, wt)| (flat(ix), *wt)).collect();
        for &(q, wt) in &flat_slots {
            vol[q] += wt * mass[p];
            nu_sum[q] += wt * nu.values[p];
            w_int[q] += wt * mass[p] * w.values[p];
        }
        node_slots.push(flat_slots);
    }

    let mut windows = Vec::with_capacity(nwin);
    for q in 0..nwin {
        let index = [q % counts[0], (q / counts[0]) % counts[1], q / (counts[0] * counts[1])];
        let mut center = [0.0; MAX_DIM];
        let mut interior = true;
        for k in 0..dim {
            center[k] = d.lower[k] + index[k] as f64 * window;
            let gap = (center[k] - d.lower[k]).min(d.upper[k] - center[k]);
            interior &= gap >= window * (1.0 - 1e-9);
        }
        let w_mean = if vol[q] > 0.0 { w_int[q] / vol[q] } else { 0.0 };
        let saturated = w_mean < floor;
        let mu_hat = if vol[q] > 0.0 { nu_sum[q] / (vol[q] * w_mean.max(floor)) } else { 0.0 };
        windows.push(WindowRecord { index, center, volume: vol[q], nu_sum: nu_sum[q], w_mean, mu_hat, saturated, interior });
    }
    let values = node_slots.iter().map(|s| s.iter().map(|&(q, wt)| wt * windows[q].mu_hat).sum()).collect();
    let total_mass = windows.iter().map(|w| w.mu_hat * w.volume).sum();
    Ok(StrangeTermEstimate {
        eps,
        window,
        floor,
        windows,
        mu_hat: NodalField { grid, values },
        total_mass,
        reference_w: w.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, ElementKind};
    use crate::problem_model::Domain;
    use approx::assert_relative_eq;

    fn grid3(h: f64) -> crate::fem::Grid {
        build_mesh(&Domain::unit(3).unwrap(), h, ElementKind::Simplex).unwrap().grid
    }

    #[test]
    fn zero_reaction_gives_zero_density() {
        let g = grid3(1.0 / 8.0);
        let est = extract_strange_term(&NodalField::zeros(g), &NodalField::constant(g, 0.3), 0.25, 1e-6, 0.25).unwrap();
        assert!(est.windows.iter().all(|w| w.mu_hat == 0.0));
        assert_eq!(est.total_mass, 0.0);
    }

    #[test]
    fn windows_tile_the_domain() {
        let g = grid3(1.0 / 12.0);
        let est = extract_strange_term(&NodalField::zeros(g), &NodalField::constant(g, 1.0), 1.0 / 3.0, 1e-6, 1.0 / 3.0).unwrap();
        assert_eq!(est.windows.len(), 64);
        assert_eq!(est.interior_count(), 8);
        let total: f64 = est.windows.iter().map(|w| w.volume).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        for w in est.windows.iter().filter(|w| w.interior) {
            assert_relative_eq!(w.volume, 1.0 / 27.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_nu_recovers_density() {
        let g = grid3(1.0 / 16.0);
        let m = lumped_mass(&g);
        let w = NodalField::constant(g, 0.5);
        let nu = NodalField { grid: g, values: m.iter().map(|mi| 3.0 * 0.5 * mi).collect() };
        let est = extract_strange_term(&nu, &w, 0.25, 1e-6, 0.25).unwrap();
        for win in &est.windows {
            assert_relative_eq!(win.mu_hat, 3.0, epsilon = 1e-12);
        }
        assert_relative_eq!(est.total_mass, 3.0, epsilon = 1e-12);
        assert_relative_eq!(est.nodal_mass(), est.total_mass, epsilon = 1e-12);
        assert_eq!(est.interior_std(), 0.0);
    }

    #[test]
    fn floor_saturates() {
        let g = grid3(0.25);
        let mut nu = NodalField::zeros(g);
        nu.values[g.node_index([2, 2, 2])] = 1.0;
        let est = extract_strange_term(&nu, &NodalField::zeros(g), 0.5, 0.1, 0.5).unwrap();
        assert!(est.windows.iter().all(|w| w.saturated));
        let c = est.windows.iter().find(|w| w.index == [1, 1, 1]).unwrap();
        assert_relative_eq!(c.mu_hat, 1.0 / (0.125 * 0.1), epsilon = 1e-12);
    }

    #[test]
    fn small_windows_rejected() {
        let g = grid3(0.25);
        let z = NodalField::zeros(g);
        assert!(matches!(extract_strange_term(&z, &z, 0.2, 1e-6, 0.25), Err(Error::WindowTooSmall { .. })));
        assert!(extract_strange_term(&z, &z, 0.25, 0.0, 0.25).is_err());
    }
}
