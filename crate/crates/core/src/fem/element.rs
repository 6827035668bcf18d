//! Reference data on the unit cell `[0,1]^n` for both element families.
//!
//! Local corner `l` sits at the vertex whose coordinate along axis `a` is
//! bit `a` of `l`. Everything here is for `h = 1`; callers scale stiffness
//! by `h^(n-2)`, masses by `h^n` and gradient integrals by `h^(n-1)`.

use super::mesh::ElementKind;
use crate::problem_model::{Point, SymMat, MAX_DIM};

pub const MAX_LOCAL: usize = 1 << MAX_DIM;

const GAUSS2: [(f64, f64); 2] = [(0.211_324_865_405_187_1, 0.5), (0.788_675_134_594_812_9, 0.5)];

fn gauss3() -> [(f64, f64); 3] {
    let d = (0.6f64).sqrt() / 2.0;
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}

#[derive(Debug, Clone)]
pub struct ReferenceCell {
    pub dim: usize,
    pub kind: ElementKind,
    pub nloc: usize,
    /// `stiffness[a][b][i][j] = int d_a phi_i d_b phi_j`.
    pub stiffness: [[[[f64; MAX_LOCAL]; MAX_LOCAL]; MAX_DIM]; MAX_DIM],
    /// `int phi_i`, the row sums of the consistent mass matrix.
    pub lumped: [f64; MAX_LOCAL],
    /// `grad_integral[a][i] = int d_a phi_i`.
    pub grad_integral: [[f64; MAX_LOCAL]; MAX_DIM],
    /// Quadrature rule for smooth integrands on the cell (weights sum to 1).
    pub quadrature: Vec<(Point, f64)>,
}

/// Permutations of `0..n`, lexicographic.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|r| if r >= first { r + 1 } else { r }));
            out.push(p);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Kuhn simplex for the axis ordering `sigma`: its vertices as local corner
/// indices and the constant gradients of its barycentric coordinates.
fn kuhn_simplex(sigma: &[usize]) -> (Vec<usize>, Vec<Point>) {
    let n = sigma.len();
    let mut verts = vec![0usize];
    for k in 0..n {
        verts.push(verts[k] | (1 << sigma[k]));
    }
    let mut grads = vec![[0.0; MAX_DIM]; n + 1];
    grads[0][sigma[0]] = -1.0;
    for k in 1..n {
        grads[k][sigma[k - 1]] = 1.0;
        grads[k][sigma[k]] = -1.0;
    }
    grads[n][sigma[n - 1]] = 1.0;
    (verts, grads)
}

/// Axis ordering of the Kuhn simplex containing `y` (descending coordinates).
fn simplex_order(y: &Point, dim: usize) -> [usize; MAX_DIM] {
    let mut order = [0, 1, 2];
    order[..dim].sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    order
}

fn q1_value(l: usize, y: &Point, dim: usize) -> f64 {
    (0..dim).map(|a| if l >> a & 1 == 1 { y[a] } else { 1.0 - y[a] }).product()
}

fn q1_grad(l: usize, y: &Point, dim: usize) -> Point {
    let mut g = [0.0; MAX_DIM];
    for (a, ga) in g.iter_mut().enumerate().take(dim) {
        let mut v = if l >> a & 1 == 1 { 1.0 } else { -1.0 };
        for b in (0..dim).filter(|&b| b != a) {
            v *= if l >> b & 1 == 1 { y[b] } else { 1.0 - y[b] };
        }
        *ga = v;
    }
    g
}

fn tensor_rule(rule: &[(f64, f64)], dim: usize) -> Vec<(Point, f64)> {
    let m = rule.len();
    let count = m.pow(dim as u32);
    (0..count)
        .map(|flat| {
            let mut y = [0.0; MAX_DIM];
            let mut w = 1.0;
            let mut rem = flat;
            for ya in y.iter_mut().take(dim) {
                let (p, pw) = rule[rem % m];
                *ya = p;
                w *= pw;
                rem /= m;
            }
            (y, w)
        })
        .collect()
}

impl ReferenceCell {
    pub fn new(kind: ElementKind, dim: usize) -> Self {
        let nloc = 1 << dim;
        let mut cell = Self {
            dim,
            kind,
            nloc,
            stiffness: [[[[0.0; MAX_LOCAL]; MAX_LOCAL]; MAX_DIM]; MAX_DIM],
            lumped: [0.0; MAX_LOCAL],
            grad_integral: [[0.0; MAX_LOCAL]; MAX_DIM],
            quadrature: Vec::new(),
        };
        match kind {
            ElementKind::Simplex => cell.fill_simplex(),
            ElementKind::Multilinear => cell.fill_multilinear(),
        }
        cell
    }

    fn fill_simplex(&mut self) {
        let dim = self.dim;
        let vol = 1.0 / factorial(dim);
        let g3 = gauss3();
        // collapsed (Duffy) rule on the ordered simplex t_0 >= t_1 >= ...
        let collapsed: Vec<(Point, f64)> = tensor_rule(&g3, dim)
            .into_iter()
            .map(|(s, w)| {
                let mut t = [0.0; MAX_DIM];
                let mut prod = 1.0;
                let mut jac = 1.0;
                for k in 0..dim {
                    prod *= s[k];
                    t[k] = prod;
                    jac *= s[k].powi((dim - 1 - k) as i32);
                }
                (t, w * jac)
            })
            .collect();
        for sigma in permutations(dim) {
            let (verts, grads) = kuhn_simplex(&sigma);
            for i in 0..=dim {
                self.lumped[verts[i]] += vol / (dim as f64 + 1.0);
                for a in 0..dim {
                    self.grad_integral[a][verts[i]] += vol * grads[i][a];
                    for b in 0..dim {
                        for j in 0..=dim {
                            self.stiffness[a][b][verts[i]][verts[j]] += vol * grads[i][a] * grads[j][b];
                        }
                    }
                }
            }
            for (t, w) in &collapsed {
                let mut y = [0.0; MAX_DIM];
                for k in 0..dim {
                    y[sigma[k]] = t[k];
                }
                self.quadrature.push((y, *w));
            }
        }
    }

    fn fill_multilinear(&mut self) {
        let dim = self.dim;
        for (y, w) in tensor_rule(&GAUSS2, dim) {
            for i in 0..self.nloc {
                let gi = q1_grad(i, &y, dim);
                self.lumped[i] += w * q1_value(i, &y, dim);
                for a in 0..dim {
                    self.grad_integral[a][i] += w * gi[a];
                }
                for j in 0..self.nloc {
                    let gj = q1_grad(j, &y, dim);
                    for a in 0..dim {
                        for b in 0..dim {
                            self.stiffness[a][b][i][j] += w * gi[a] * gj[b];
                        }
                    }
                }
            }
        }
        self.quadrature = tensor_rule(&gauss3(), dim);
    }

    /// Row `l` of the cell stiffness for coefficient `m`, unscaled.
    #[inline]
    pub fn stiffness_row(&self, m: &SymMat, diagonal_only: bool, l: usize, out: &mut [f64; MAX_LOCAL]) {
        *out = [0.0; MAX_LOCAL];
        for a in 0..self.dim {
            for b in 0..self.dim {
                if diagonal_only && a != b {
                    continue;
                }
                let c = m.m[a][b];
                if c == 0.0 {
                    continue;
                }
                let row = &self.stiffness[a][b][l];
                for (o, r) in out.iter_mut().zip(row.iter()).take(self.nloc) {
                    *o += c * r;
                }
            }
        }
    }

    /// Value and reference-cell gradient of the interpolant with corner
    /// values `u` at local point `y`.
    pub fn eval(&self, y: &Point, u: &[f64; MAX_LOCAL]) -> (f64, Point) {
        match self.kind {
            ElementKind::Multilinear => {
                let mut v = 0.0;
                let mut g = [0.0; MAX_DIM];
                for (l, ul) in u.iter().enumerate().take(self.nloc) {
                    v += ul * q1_value(l, y, self.dim);
                    let gl = q1_grad(l, y, self.dim);
                    for a in 0..self.dim {
                        g[a] += ul * gl[a];
                    }
                }
                (v, g)
            }
            ElementKind::Simplex => {
                let order = simplex_order(y, self.dim);
                let mut corner = 0usize;
                let mut v = u[0];
                let mut g = [0.0; MAX_DIM];
                for &axis in order.iter().take(self.dim) {
                    let next = corner | (1 << axis);
                    let slope = u[next] - u[corner];
                    v += slope * y[axis];
                    g[axis] = slope;
                    corner = next;
                }
                (v, g)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn partition_of_unity() {
        for kind in [ElementKind::Simplex, ElementKind::Multilinear] {
            for dim in 2..=3 {
                let c = ReferenceCell::new(kind, dim);
                let total: f64 = c.lumped[..c.nloc].iter().sum();
                assert_relative_eq!(total, 1.0, epsilon = 1e-14);
                let wsum: f64 = c.quadrature.iter().map(|q| q.1).sum();
                assert_relative_eq!(wsum, 1.0, epsilon = 1e-13);
                for a in 0..dim {
                    for i in 0..c.nloc {
                        let s: f64 = c.stiffness[a][a][i][..c.nloc].iter().sum();
                        assert!(s.abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn q1_laplacian_stencils() {
        let c = ReferenceCell::new(ElementKind::Multilinear, 2);
        let lap = |i: usize, j: usize| c.stiffness[0][0][i][j] + c.stiffness[1][1][i][j];
        assert_relative_eq!(lap(0, 0), 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(lap(0, 1), -1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(lap(0, 3), -1.0 / 3.0, epsilon = 1e-14);
        let c3 = ReferenceCell::new(ElementKind::Multilinear, 3);
        let lap3 = |i: usize, j: usize| (0..3).map(|a| c3.stiffness[a][a][i][j]).sum::<f64>();
        assert_relative_eq!(lap3(0, 0), 1.0 / 3.0, epsilon = 1e-14);
        assert!(lap3(0, 1).abs() < 1e-15);
        assert_relative_eq!(lap3(0, 3), -1.0 / 12.0, epsilon = 1e-14);
        assert_relative_eq!(lap3(0, 7), -1.0 / 12.0, epsilon = 1e-14);
    }

    #[test]
    fn kuhn_laplacian_is_axis_stencil() {
        let c = ReferenceCell::new(ElementKind::Simplex, 3);
        let lap = |i: usize, j: usize| (0..3).map(|a| c.stiffness[a][a][i][j]).sum::<f64>();
        // corners differing in two or more axes never couple
        for i in 0..8usize {
            for j in 0..8usize {
                if (i ^ j).count_ones() >= 2 {
                    assert_eq!(lap(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn eval_reproduces_linear_functions() {
        for kind in [ElementKind::Simplex, ElementKind::Multilinear] {
            let c = ReferenceCell::new(kind, 3);
            let f = |y: &Point| 0.3 + 1.5 * y[0] - 2.0 * y[1] + 0.25 * y[2];
            let mut u = [0.0; MAX_LOCAL];
            for (l, ul) in u.iter_mut().enumerate() {
                *ul = f(&[(l & 1) as f64, (l >> 1 & 1) as f64, (l >> 2 & 1) as f64]);
            }
            let y = [0.2, 0.7, 0.4];
            let (v, g) = c.eval(&y, &u);
            assert_relative_eq!(v, f(&y), epsilon = 1e-14);
            assert_relative_eq!(g[0], 1.5, epsilon = 1e-14);
            assert_relative_eq!(g[1], -2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn simplex_quadrature_exact_for_quadratics() {
        let c = ReferenceCell::new(ElementKind::Simplex, 3);
        let q: f64 = c.quadrature.iter().map(|(y, w)| w * y[0] * y[1]).sum();
        assert_relative_eq!(q, 0.25, epsilon = 1e-14);
        let q: f64 = c.quadrature.iter().map(|(y, w)| w * y[2] * y[2]).sum();
        assert_relative_eq!(q, 1.0 / 3.0, epsilon = 1e-14);
    }
}
