//! Domains, coefficient fields, perforation lattices, measures and loads.
//!
//! Points and matrices are stored padded to three components; a 2D object
//! simply ignores the third axis. This keeps the hot loops free of
//! allocation and lets one code path serve both dimensions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::NodalField;

/// Largest supported spatial dimension for meshes.
pub const MAX_DIM: usize = 3;

pub type Point = [f64; MAX_DIM];

/// Axis-aligned box `(lower, upper)` in `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    pub lower: Point,
    pub upper: Point,
}

impl Domain {
    pub fn new(dim: usize, lower: &[f64], upper: &[f64]) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim} not in {{2,3}}")));
        }
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "box corners must have {dim} coordinates"
            )));
        }
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..dim {
            if !(upper[k] > lower[k]) || !lower[k].is_finite() || !upper[k].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "box edge {k} is empty: [{}, {}]",
                    lower[k], upper[k]
                )));
            }
            lo[k] = lower[k];
            hi[k] = upper[k];
        }
        Ok(Self { dim, lower: lo, upper: hi })
    }

    /// The unit square or cube.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(dim, &vec![0.0; dim], &vec![1.0; dim])
    }

    pub fn edge(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|k| self.edge(k)).product()
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; MAX_DIM];
        for k in 0..self.dim {
            c[k] = 0.5 * (self.lower[k] + self.upper[k]);
        }
        c
    }

    /// Euclidean distance from `x` to the closed box.
    pub fn distance(&self, x: &Point) -> f64 {
        (0..self.dim)
            .map(|k| {
                let d = (self.lower[k] - x[k]).max(x[k] - self.upper[k]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim).all(|k| x[k] >= self.lower[k] && x[k] <= self.upper[k])
    }

    /// Concentric sub-box scaled by `factor` (0.5 gives the inner half-box).
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        let mut out = *self;
        for k in 0..self.dim {
            let half = 0.5 * factor * self.edge(k);
            out.lower[k] = c[k] - half;
            out.upper[k] = c[k] + half;
        }
        out
    }
}

/// Symmetric matrix padded to 3x3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    pub m: [[f64; MAX_DIM]; MAX_DIM],
}

impl SymMat {
    pub fn scalar(s: f64, dim: usize) -> Self {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (k, row) in m.iter_mut().enumerate().take(dim) {
            row[k] = s;
        }
        Self { m }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (k, v) in d.iter().enumerate() {
            m[k][k] = *v;
        }
        Self { m }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n || n > MAX_DIM {
                return Err(Error::InvalidParameter("matrix must be square, at most 3x3".into()));
            }
            m[i][..n].copy_from_slice(r);
        }
        for i in 0..n {
            for j in 0..i {
                if (m[i][j] - m[j][i]).abs() > 1e-12 * (m[i][j].abs() + m[j][i].abs() + 1.0) {
                    return Err(Error::InvalidParameter("matrix is not symmetric".into()));
                }
            }
        }
        Ok(Self { m })
    }

    /// Eigenvalues of the leading `dim x dim` block, ascending.
    pub fn eigenvalues(&self, dim: usize) -> Vec<f64> {
        let a = DMatrix::from_fn(dim, dim, |i, j| self.m[i][j]);
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn is_diagonal(&self) -> bool {
        (0..MAX_DIM).all(|i| (0..MAX_DIM).all(|j| i == j || self.m[i][j] == 0.0))
    }

    pub fn apply(&self, v: &Point) -> Point {
        let mut out = [0.0; MAX_DIM];
        for i in 0..MAX_DIM {
            out[i] = (0..MAX_DIM).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }
}

/// Surface measure `S_{n-1}` of the unit sphere in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // S_{n-1} = 2 pi^{n/2} / Gamma(n/2), Gamma at half-integers by recursion.
    let half_gamma = |n: usize| -> f64 {
        let (mut g, mut x) = if n.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
        let target = n as f64 / 2.0;
        while x < target - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * PI.powf(n as f64 / 2.0) / half_gamma(n)
}

/// Periodic arrangement of holes: centres `eps * i`, outer balls of radius
/// `eps^gamma` (where the coefficient switches) and closed holes of radius
/// `eps^(n/(n-2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerforationLattice {
    pub eps: f64,
    pub gamma: f64,
    pub dim: usize,
    pub r_outer: f64,
    pub r_hole: f64,
}

impl PerforationLattice {
    pub fn new(eps: f64, gamma: f64, dim: usize) -> Result<Self> {
        check_lattice_params(eps, dim, gamma)?;
        let n = dim as f64;
        let r_outer = eps.powf(gamma);
        let r_hole = eps.powf(n / (n - 2.0));
        if r_outer > 0.5 * eps * (1.0 + 1e-12) {
            return Err(Error::DegenerateGeometry(format!(
                "outer balls overlap: eps^gamma = {r_outer} > eps/2 (need eps <= 2^(1/(1-gamma)))"
            )));
        }
        Ok(Self { eps, gamma, dim, r_outer, r_hole })
    }

    /// Lattice centre nearest to `x` and the distance to it.
    pub fn nearest_center(&self, x: &Point) -> (Point, f64) {
        let mut c = [0.0; MAX_DIM];
        let mut d2 = 0.0;
        for k in 0..self.dim {
            c[k] = (x[k] / self.eps).round() * self.eps;
            d2 += (x[k] - c[k]).powi(2);
        }
        (c, d2.sqrt())
    }

    /// True if `x` lies in some open outer ball `B_i`.
    pub fn in_outer_ball(&self, x: &Point) -> bool {
        self.nearest_center(x).1 < self.r_outer
    }

    /// True if `x` lies in some closed hole `C_i`.
    pub fn in_hole(&self, x: &Point) -> bool {
        self.nearest_center(x).1 <= self.r_hole
    }

    pub fn c_eps(&self) -> f64 {
        c_eps_unchecked(self.eps, self.dim, self.gamma)
    }
}

fn check_lattice_params(eps: f64, n: usize, gamma: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "periodic holes need n >= 3, got n = {n}"
        )));
    }
    let upper = n as f64 / (n as f64 - 2.0);
    if !(gamma > 1.0 && gamma < upper) {
        return Err(Error::DegenerateGeometry(format!(
            "gamma = {gamma} outside (1, {upper})"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DegenerateGeometry(format!("eps = {eps} outside (0, 1)")));
    }
    Ok(())
}

fn c_eps_unchecked(eps: f64, n: usize, gamma: f64) -> f64 {
    let n = n as f64;
    1.0 / (1.0 - eps.powf(n - gamma * (n - 2.0)))
}

/// Normalising constant `c^eps = 1 / (1 - eps^(n - gamma (n-2)))` of the
/// radial cell solution.
pub fn c_eps(eps: f64, n: usize, gamma: f64) -> Result<f64> {
    check_lattice_params(eps, n, gamma)?;
    Ok(c_eps_unchecked(eps, n, gamma))
}

/// Predicted limit density `b (n-2) S_{n-1}` of the strange term.
pub fn mu0_prediction(b: f64, n: usize) -> Result<f64> {
    if !(b > 0.0) || n < 3 {
        return Err(Error::InvalidParameter(format!("need b > 0 and n >= 3, got b={b}, n={n}")));
    }
    Ok(b * (n as f64 - 2.0) * unit_sphere_area(n))
}

/// Centres `eps * i` whose distance to the box is less than `eps`.
pub fn lattice_centers(lattice: &PerforationLattice, domain: &Domain) -> Vec<Point> {
    let eps = lattice.eps;
    let dim = lattice.dim.min(domain.dim);
    let mut ranges = [(0i64, 0i64); MAX_DIM];
    for (k, r) in ranges.iter_mut().enumerate().take(dim) {
        *r = (
            ((domain.lower[k] - eps) / eps).floor() as i64,
            ((domain.upper[k] + eps) / eps).ceil() as i64,
        );
    }
    let cutoff = eps * (1.0 - 1e-12);
    let mut out = Vec::new();
    let mut idx = [0i64; MAX_DIM];
    let count: i64 = (0..dim).map(|k| ranges[k].1 - ranges[k].0 + 1).product();
    for flat in 0..count {
        let mut rem = flat;
        for k in 0..dim {
            let len = ranges[k].1 - ranges[k].0 + 1;
            idx[k] = ranges[k].0 + rem % len;
            rem /= len;
        }
        let mut x = [0.0; MAX_DIM];
        for k in 0..dim {
            x[k] = eps * idx[k] as f64;
        }
        if domain.distance(&x) < cutoff {
            out.push(x);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoefficientKind {
    Constant(SymMat),
    /// `a I` off the outer balls, `b I` inside them.
    TwoPhasePerforation { a: f64, b: f64, lattice: PerforationLattice },
    /// Isotropic layers stacked along `axis` with the given period; the
    /// profile lists `(volume fraction, value)` per layer.
    Laminate { axis: usize, period: f64, profile: Vec<(f64, f64)> },
}

/// Matrix field in `M_alpha^beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub kind: CoefficientKind,
    pub alpha: f64,
    pub beta: f64,
}

impl CoefficientField {
    pub fn constant(m: SymMat, dim: usize, alpha: f64, beta: f64) -> Result<Self> {
        check_bounds(alpha, beta)?;
        let ev = m.eigenvalues(dim);
        let tol = 1e-12 * beta;
        if ev[0] < alpha - tol || ev[dim - 1] > beta + tol {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues {ev:?} outside [{alpha}, {beta}]"
            )));
        }
        Ok(Self { kind: CoefficientKind::Constant(m), alpha, beta })
    }

    /// `s I` with the tight bounds `alpha = beta = s`.
    pub fn isotropic(s: f64, dim: usize) -> Result<Self> {
        Self::constant(SymMat::scalar(s, dim), dim, s, s)
    }

    pub fn two_phase(a: f64, b: f64, lattice: PerforationLattice, alpha: f64, beta: f64) -> Result<Self> {
        check_bounds(alpha, beta)?;
        for (name, v) in [("a", a), ("b", b)] {
            if v < alpha || v > beta {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [{alpha}, {beta}]"
                )));
            }
        }
        Ok(Self { kind: CoefficientKind::TwoPhasePerforation { a, b, lattice }, alpha, beta })
    }

    pub fn laminate(axis: usize, period: f64, profile: Vec<(f64, f64)>, alpha: f64, beta: f64) -> Result<Self> {
        check_bounds(alpha, beta)?;
        if !(period > 0.0) || profile.is_empty() {
            return Err(Error::InvalidParameter("laminate needs a positive period and layers".into()));
        }
        let total: f64 = profile.iter().map(|p| p.0).sum();
        if (total - 1.0).abs() > 1e-12 || profile.iter().any(|p| p.0 <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "laminate fractions must be positive and sum to 1 (got {total})"
            )));
        }
        if profile.iter().any(|p| p.1 < alpha || p.1 > beta) {
            return Err(Error::InvalidParameter(format!(
                "laminate values outside [{alpha}, {beta}]"
            )));
        }
        Ok(Self { kind: CoefficientKind::Laminate { axis, period, profile }, alpha, beta })
    }

    /// Pointwise matrix `A(x)`.
    pub fn eval(&self, x: &Point, dim: usize) -> SymMat {
        match &self.kind {
            CoefficientKind::Constant(m) => *m,
            CoefficientKind::TwoPhasePerforation { a, b, lattice } => {
                SymMat::scalar(if lattice.in_outer_ball(x) { *b } else { *a }, dim)
            }
            CoefficientKind::Laminate { axis, period, profile } => {
                let t = (x[*axis] / period).rem_euclid(1.0);
                let mut acc = 0.0;
                let mut value = profile[profile.len() - 1].1;
                for (frac, v) in profile {
                    acc += frac;
                    if t < acc {
                        value = *v;
                        break;
                    }
                }
                SymMat::scalar(value, dim)
            }
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match &self.kind {
            CoefficientKind::Constant(m) => m.is_diagonal(),
            _ => true,
        }
    }

    /// Same field with `alpha I` outside `domain`, the extension used for
    /// correctors posed on an enlarged box.
    pub fn extended_outside(&self, domain: Domain) -> ExtendedCoefficient<'_> {
        self.extended_by(domain, self.alpha)
    }

    /// Same field with `s I` outside `domain`.
    pub fn extended_by(&self, domain: Domain, s: f64) -> ExtendedCoefficient<'_> {
        ExtendedCoefficient { inner: self, domain, outside: s }
    }

    /// Closed-form H-limit of a laminate: harmonic mean across the layers,
    /// arithmetic mean along them.
    pub fn laminate_h_limit(&self, dim: usize) -> Option<CoefficientField> {
        match &self.kind {
            CoefficientKind::Laminate { axis, profile, .. } => {
                let harmonic = 1.0 / profile.iter().map(|(f, v)| f / v).sum::<f64>();
                let arithmetic: f64 = profile.iter().map(|(f, v)| f * v).sum();
                let mut d = vec![arithmetic; dim];
                d[*axis] = harmonic;
                let m = SymMat::diagonal(&d);
                CoefficientField::constant(m, dim, self.alpha, self.beta).ok()
            }
            _ => None,
        }
    }
}

/// A coefficient field restricted to a box and extended by a multiple of
/// the identity.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedCoefficient<'a> {
    pub inner: &'a CoefficientField,
    pub domain: Domain,
    pub outside: f64,
}

/// Anything that can be sampled cellwise during assembly.
pub trait CoefficientSource: Sync {
    fn matrix_at(&self, x: &Point, dim: usize) -> SymMat;
    fn diagonal_only(&self) -> bool;
    fn alpha(&self) -> f64;
}

impl CoefficientSource for CoefficientField {
    fn matrix_at(&self, x: &Point, dim: usize) -> SymMat {
        self.eval(x, dim)
    }
    fn diagonal_only(&self) -> bool {
        self.is_diagonal()
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl CoefficientSource for ExtendedCoefficient<'_> {
    fn matrix_at(&self, x: &Point, dim: usize) -> SymMat {
        let inside = (0..dim).all(|k| x[k] > self.domain.lower[k] && x[k] < self.domain.upper[k]);
        if inside {
            self.inner.eval(x, dim)
        } else {
            SymMat::scalar(self.outside, dim)
        }
    }
    fn diagonal_only(&self) -> bool {
        self.inner.is_diagonal()
    }
    fn alpha(&self) -> f64 {
        self.inner.alpha.min(self.outside)
    }
}

/// Pointwise evaluation of a coefficient field.
pub fn coefficient_eval(field: &CoefficientField, x: &Point, dim: usize) -> SymMat {
    field.eval(x, dim)
}

fn check_bounds(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < alpha <= beta, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(())
}

/// The representable nonnegative measures.
#[derive(Debug, Clone)]
pub enum MeasureSpec {
    Zero,
    ConstantDensity(f64),
    GridDensity(NodalField),
    /// Infinite on the holes: `u = 0` there.
    HoleDirichlet(PerforationLattice),
    /// `k` times Lebesgue measure on the holes.
    Penalized { lattice: PerforationLattice, k: f64 },
}

impl MeasureSpec {
    pub fn lattice(&self) -> Option<&PerforationLattice> {
        match self {
            MeasureSpec::HoleDirichlet(l) | MeasureSpec::Penalized { lattice: l, .. } => Some(l),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureSpec::ConstantDensity(m) if !(*m >= 0.0 && m.is_finite()) => {
                Err(Error::NegativeDensity { node: 0, value: *m })
            }
            MeasureSpec::GridDensity(field) => {
                match field.values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
                    Some(node) => Err(Error::NegativeDensity { node, value: field.values[node] }),
                    None => Ok(()),
                }
            }
            MeasureSpec::Penalized { k, .. } if !(*k > 0.0 && k.is_finite()) => {
                Err(Error::InvalidParameter(format!("penalty k = {k} must be finite and positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Right-hand side `L(y) = <f, y> + int g y dmu`.
#[derive(Debug, Clone)]
pub struct Load {
    pub f: NodalField,
    pub g: Option<NodalField>,
}

impl Load {
    pub fn new(f: NodalField) -> Self {
        Self { f, g: None }
    }

    pub fn with_measure_part(f: NodalField, g: NodalField) -> Self {
        Self { f, g: Some(g) }
    }
}
