//! Closed forms of the periodic-holes example: radial cell solutions, cell
//! energies, the glued test function `omega_eps` and the surface pairing
//! `int phi d lambda_eps`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{Mesh, NodalField};
use crate::par::{self, Execution};
use crate::problem_model::{c_eps, lattice_centers, unit_sphere_area, Domain, PerforationLattice, Point, MAX_DIM};

/// One cell of the lattice: the shell between the hole and the outer ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialCell {
    pub eps: f64,
    pub n: usize,
    pub gamma: f64,
    pub center: Point,
    pub c: f64,
}

impl RadialCell {
    pub fn new(eps: f64, n: usize, gamma: f64, center: Point) -> Result<Self> {
        PerforationLattice::new(eps, gamma, n)?;
        Ok(Self { eps, n, gamma, center, c: c_eps(eps, n, gamma)? })
    }

    pub fn from_lattice(lattice: &PerforationLattice, center: Point) -> Self {
        Self { eps: lattice.eps, n: lattice.dim, gamma: lattice.gamma, center, c: lattice.c_eps() }
    }

    pub fn r_hole(&self) -> f64 {
        self.eps.powf(self.n as f64 / (self.n as f64 - 2.0))
    }

    pub fn r_outer(&self) -> f64 {
        self.eps.powf(self.gamma)
    }

    /// `c - c eps^n r^(2-n)` without any range check.
    pub fn profile(&self, r: f64) -> f64 {
        self.c - self.c * self.eps.powi(self.n as i32) * r.powi(2 - self.n as i32)
    }

    /// `d omega / dr = (n-2) c eps^n r^(1-n)`.
    pub fn profile_derivative(&self, r: f64) -> f64 {
        (self.n as f64 - 2.0) * self.c * self.eps.powi(self.n as i32) * r.powi(1 - self.n as i32)
    }

    fn radius_of(&self, x: &Point) -> f64 {
        (0..self.n).map(|k| (x[k] - self.center[k]).powi(2)).sum::<f64>().sqrt()
    }
}

/// Radial solution on the shell; exactly 0 and 1 on the two spheres.
pub fn omega_radial_eval(cell: &RadialCell, x: &Point) -> Result<f64> {
    let r = cell.radius_of(x);
    let (ri, ro) = (cell.r_hole(), cell.r_outer());
    let tol = 1e-12;
    if r < ri * (1.0 - tol) || r > ro * (1.0 + tol) {
        return Err(Error::InvalidParameter(format!("radius {r} outside the shell [{ri}, {ro}]")));
    }
    if (r - ri).abs() <= tol * ri {
        return Ok(0.0);
    }
    if (r - ro).abs() <= tol * ro {
        return Ok(1.0);
    }
    Ok(cell.profile(r).clamp(0.0, 1.0))
}

/// `omega_eps` at the nodes, with a flag when holes are thinner than two cells.
#[derive(Debug, Clone)]
pub struct OmegaField {
    pub field: NodalField,
    pub under_resolved: bool,
}

/// Glues the cell solutions: 0 in the holes, 1 outside the outer balls.
pub fn omega_field_assemble(lattice: &PerforationLattice, mesh: &Mesh) -> Result<OmegaField> {
    let grid = mesh.grid;
    if grid.dim() != lattice.dim {
        return Err(Error::InvalidParameter("lattice and mesh dimensions differ".into()));
    }
    let values = par::map(Execution::default(), grid.num_nodes(), |p| {
        let x = grid.node_point(p);
        let (center, d) = lattice.nearest_center(&x);
        if mesh.node_class[p] == crate::fem::NodeClass::HoleInterior || d <= lattice.r_hole * (1.0 + 1e-12) {
            0.0
        } else if d >= lattice.r_outer {
            1.0
        } else {
            omega_radial_eval(&RadialCell::from_lattice(lattice, center), &x).unwrap_or(1.0)
        }
    });
    let under_resolved = lattice.r_hole < 2.0 * grid.h;
    if under_resolved {
        log::warn!("holes of radius {} are resolved by fewer than two cells of size {}", lattice.r_hole, grid.h);
    }
    Ok(OmegaField { field: NodalField { grid, values }, under_resolved })
}

/// `int |D omega_i|^2 = (n-2) S_{n-1} c eps^n` over one shell.
pub fn cell_energy_closed_form(eps: f64, n: usize, gamma: f64) -> Result<f64> {
    let c = c_eps(eps, n, gamma)?;
    Ok((n as f64 - 2.0) * unit_sphere_area(n) * c * eps.powi(n as i32))
}

/// Composite Simpson rule for `S_{n-1} r^(n-1) |omega'(r)|^2` on `[r_in, r_out]`
/// with an even number of subintervals, uniform in `ln r`.
pub fn radial_energy_quadrature(cell: &RadialCell, r_in: f64, r_out: f64, intervals: usize) -> Result<f64> {
    if intervals < 16 || intervals % 2 == 1 {
        return Err(Error::InvalidParameter(format!("need an even number >= 16 of radial intervals, got {intervals}")));
    }
    if !(r_in > 0.0 && r_out >= r_in) {
        return Err(Error::InvalidParameter(format!("bad radial range [{r_in}, {r_out}]")));
    }
    let s = unit_sphere_area(cell.n);
    // dr = r ds
    let f = |t: f64| {
        let r = t.exp();
        s * r.powi(cell.n as i32) * cell.profile_derivative(r).powi(2)
    };
    let (t0, t1) = (r_in.ln(), r_out.ln());
    let h = (t1 - t0) / intervals as f64;
    let mut acc = f(t0) + f(t1);
    for k in 1..intervals {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t0 + k as f64 * h);
    }
    Ok(acc * h / 3.0)
}

pub fn cell_energy_quadrature(cell: &RadialCell, radial_points: usize) -> Result<f64> {
    radial_energy_quadrature(cell, cell.r_hole(), cell.r_outer(), radial_points)
}

/// Both sides of `int_Omega |D omega|^2 <= (n-2) S_{n-1} c N eps^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBound {
    /// Centres at distance less than `eps` from the domain.
    pub n_eps: usize,
    /// Balls entirely inside the closed domain.
    pub n_interior: usize,
    pub cell_energy: f64,
    /// Exact `int_Omega |D omega|^2`, shells cut by the boundary weighted by
    /// the fraction inside.
    pub lhs: f64,
    pub rhs: f64,
}

fn fibonacci_sphere(points: usize) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..points)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / points as f64;
            let rho = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            [rho * t.cos(), rho * t.sin(), z]
        })
        .collect()
}

/// Fraction of a shell inside the box: exact orthant factors when the centre
/// lies on faces, sphere sampling at the energy-median radius otherwise.
fn shell_fraction(lattice: &PerforationLattice, domain: &Domain, center: &Point) -> f64 {
    let r = lattice.r_outer;
    let mut factor = 1.0;
    let mut exact = true;
    for k in 0..lattice.dim {
        for d in [center[k] - domain.lower[k], domain.upper[k] - center[k]] {
            if d >= r {
                continue;
            }
            if d.abs() <= 1e-12 * lattice.eps {
                factor *= 0.5;
            } else {
                exact = false;
            }
        }
    }
    if exact {
        return factor;
    }
    let rm = 2.0 / (1.0 / lattice.r_hole + 1.0 / lattice.r_outer);
    let pts = fibonacci_sphere(2000);
    let inside = pts
        .iter()
        .filter(|p| {
            let mut x = [0.0; MAX_DIM];
            for k in 0..MAX_DIM {
                x[k] = center[k] + rm * p[k];
            }
            domain.contains(&x)
        })
        .count();
    inside as f64 / pts.len() as f64
}

pub fn energy_bound_check(lattice: &PerforationLattice, domain: &Domain) -> Result<EnergyBound> {
    if domain.dim != lattice.dim {
        return Err(Error::InvalidParameter("lattice and domain dimensions differ".into()));
    }
    let cell_energy = cell_energy_closed_form(lattice.eps, lattice.dim, lattice.gamma)?;
    let centers = lattice_centers(lattice, domain);
    let fractions: Vec<f64> = centers.iter().map(|c| shell_fraction(lattice, domain, c)).collect();
    let n_interior = fractions.iter().filter(|f| **f == 1.0).count();
    let lhs = cell_energy * fractions.iter().sum::<f64>();
    Ok(EnergyBound { n_eps: centers.len(), n_interior, cell_energy, lhs, rhs: centers.len() as f64 * cell_energy })
}

/// How balls cut by the boundary enter the surface pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum SphereClipping {
    /// Drop sphere points outside the domain.
    #[default]
    Clipped,
    /// Use only balls contained in the closed domain, with all their points.
    InteriorOnly,
}

/// `int phi d lambda_eps` with `lambda_eps = b (n-2) c eps^(n - gamma(n-1)) sigma_eps`
/// by equal-weight Fibonacci quadrature on every outer sphere. Only `n = 3`.
pub fn lambda_pairing(
    lattice: &PerforationLattice,
    domain: &Domain,
    phi: impl Fn(&Point) -> f64 + Sync,
    b: f64,
    sphere_points: usize,
    clipping: SphereClipping,
) -> Result<f64> {
    if lattice.dim != 3 || domain.dim != 3 {
        return Err(Error::InvalidParameter("the sphere quadrature is implemented for n = 3 only".into()));
    }
    if sphere_points < 50 {
        return Err(Error::InvalidParameter(format!("need at least 50 sphere points, got {sphere_points}")));
    }
    let n = 3.0;
    let r = lattice.r_outer;
    let weight = unit_sphere_area(3) * r * r / sphere_points as f64;
    let pts = fibonacci_sphere(sphere_points);
    let centers = lattice_centers(lattice, domain);
    let inside_closed = |c: &Point| (0..3).all(|k| c[k] - r >= domain.lower[k] - 1e-12 * r && c[k] + r <= domain.upper[k] + 1e-12 * r);
    let total = par::sum(Execution::default(), centers.len(), |i| {
        let c = &centers[i];
        if clipping == SphereClipping::InteriorOnly && !inside_closed(c) {
            return 0.0;
        }
        let mut acc = 0.0;
        for p in &pts {
            let x = [c[0] + r * p[0], c[1] + r * p[1], c[2] + r * p[2]];
            if clipping == SphereClipping::Clipped && !domain.contains(&x) {
                continue;
            }
            acc += phi(&x);
        }
        weight * acc
    });
    let density = b * (n - 2.0) * lattice.c_eps() * lattice.eps.powf(n - lattice.gamma * (n - 1.0));
    Ok(density * total)
}

/// Number of balls contained in the closed domain.
pub fn interior_ball_count(lattice: &PerforationLattice, domain: &Domain) -> usize {
    let r = lattice.r_outer;
    lattice_centers(lattice, domain)
        .iter()
        .filter(|c| (0..lattice.dim).all(|k| c[k] - r >= domain.lower[k] - 1e-12 * r && c[k] + r <= domain.upper[k] + 1e-12 * r))
        .count()
}
