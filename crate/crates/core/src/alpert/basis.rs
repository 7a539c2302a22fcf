//! Orthonormal Alpert multiwavelets with vanishing moments on dyadic squares.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::DyadicSquare;
use crate::quadrature::GaussLegendre;

/// Exponents `α` with `|α| ≤ κ−1`, ordered by total degree, then by `α₁` descending.
pub fn monomials(kappa: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for d in 0..kappa {
        for a1 in (0..=d).rev() {
            out.push([a1, d - a1]);
        }
    }
    out
}

/// Child rectangles of the unit square in mother coordinates, in the order of
/// [`DyadicSquare::children`]: `(0,0), (0,1), (1,0), (1,1)`.
pub const CHILD_OFFSETS: [[usize; 2]; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];

/// Child index of a point of `[0,1)²`, or `None` outside.
pub fn child_of(u: [f64; 2]) -> Option<usize> {
    if !(0.0..1.0).contains(&u[0]) || !(0.0..1.0).contains(&u[1]) {
        return None;
    }
    let di = (u[0] >= 0.5) as usize;
    let dj = (u[1] >= 0.5) as usize;
    Some(2 * di + dj)
}

/// Piecewise polynomial on the four children of a square. With `u = (x − x₀)/ℓ` the
/// function on child `k` is `ℓ⁻¹·P_k(u − c_k)`, `c_k` the child center in mother
/// coordinates; `coeffs[k]` holds the monomial coefficients of `P_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePolynomial {
    pub square: DyadicSquare,
    pub coeffs: [Vec<f64>; 4],
}

/// Alpert basis of order κ on the unit square (mother coordinates).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotherBasis {
    pub kappa: usize,
    pub exponents: Vec<[usize; 2]>,
    /// `coeffs[a][k][m]`: coefficient of `(u − c_k)^{exponents[m]}` on child `k` of function `a`.
    pub coeffs: Vec<[Vec<f64>; 4]>,
    /// Rank of the moment constraint matrix.
    pub constraint_rank: usize,
}

/// Orthonormal shifted Legendre polynomials on `[0, 1]` as monomial coefficients.
fn shifted_legendre(n: usize) -> Vec<Vec<f64>> {
    // P_k(2t−1) via the three-term recurrence on coefficient vectors in t.
    let mut p: Vec<Vec<f64>> = vec![vec![1.0]];
    if n > 1 {
        p.push(vec![-1.0, 2.0]);
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        // (k+1) P_{k+1} = (2k+1)(2t−1) P_k − k P_{k−1}
        for (i, &c) in p[k].iter().enumerate() {
            next[i + 1] += (2.0 * kf + 1.0) * 2.0 * c;
            next[i] -= (2.0 * kf + 1.0) * c;
        }
        for (i, &c) in p[k - 1].iter().enumerate() {
            next[i] -= kf * c;
        }
        for c in &mut next {
            *c /= kf + 1.0;
        }
        p.push(next);
    }
    p.into_iter()
        .enumerate()
        .map(|(k, c)| c.into_iter().map(|v| v * (2.0 * k as f64 + 1.0).sqrt()).collect())
        .collect()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients in `w` of `q(a·w + b)` for a polynomial `q` in `t`.
fn substitute(q: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![0.0; q.len()];
    for (j, &c) in q.iter().enumerate() {
        for i in 0..=j {
            out[i] += c * binom(j, i) * a.powi(i as i32) * b.powi((j - i) as i32);
        }
    }
    out
}

/// Center of child interval `e ∈ {0, 1}` along one mother axis.
pub fn axis_center(e: usize) -> f64 {
    0.25 + 0.5 * e as f64
}

/// Center of child `k` in mother coordinates.
pub fn child_center(k: usize) -> [f64; 2] {
    let off = CHILD_OFFSETS[k];
    [axis_center(off[0]), axis_center(off[1])]
}

/// Child-centered coordinates `u − c_k`.
pub(crate) fn centered(u: [f64; 2], k: usize) -> [f64; 2] {
    let c = child_center(k);
    [u[0] - c[0], u[1] - c[1]]
}

pub(crate) fn eval_poly2(exps: &[[usize; 2]], coeffs: &[f64], u: [f64; 2]) -> f64 {
    let mut px = [1.0; 8];
    let mut py = [1.0; 8];
    for k in 1..8 {
        px[k] = px[k - 1] * u[0];
        py[k] = py[k - 1] * u[1];
    }
    exps.iter().zip(coeffs).map(|(e, c)| c * px[e[0]] * py[e[1]]).sum()
}

impl MotherBasis {
    pub fn new(kappa: usize) -> Result<Self> {
        if kappa == 0 {
            return invalid("Alpert order κ must be at least 1");
        }
        if kappa > 6 {
            return invalid("Alpert order κ above 6 is not supported");
        }
        let exps = monomials(kappa);
        let nm = exps.len();
        let n = 4 * nm;
        let leg = shifted_legendre(kappa);
        // Local orthonormal basis: e_{k,(i,j)}(u) = 2 p_i(2u₁−d₁) p_j(2u₂−d₂) on child k,
        // stored in the centered variable w = u − c_k, so 2u − d = 2w + 1/2.
        let mut local: Vec<(usize, [usize; 2], Vec<f64>)> = Vec::with_capacity(n);
        for k in 0..4 {
            for e in &exps {
                let px = substitute(&leg[e[0]], 2.0, 0.5);
                let py = substitute(&leg[e[1]], 2.0, 0.5);
                let mut c = vec![0.0; nm];
                for (m, t) in exps.iter().enumerate() {
                    if t[0] < px.len() && t[1] < py.len() {
                        c[m] = 2.0 * px[t[0]] * py[t[1]];
                    }
                }
                local.push((k, *e, c));
            }
        }
        // Constraint matrix A[β][col] = ∫ (u − ½)^β e_col(u) du, exact by Gauss. Centered
        // monomials span the same space as u^β and keep A well conditioned.
        let gl = GaussLegendre::new(kappa + 1);
        let mut a = DMatrix::<f64>::zeros(nm, n);
        for (col, (k, _, c)) in local.iter().enumerate() {
            let off = CHILD_OFFSETS[*k];
            for (row, b) in exps.iter().enumerate() {
                let mut s = 0.0;
                for (ta, wa) in gl.nodes.iter().zip(&gl.weights) {
                    for (tb, wb) in gl.nodes.iter().zip(&gl.weights) {
                        let u = [0.5 * (off[0] as f64 + ta), 0.5 * (off[1] as f64 + tb)];
                        let m = (u[0] - 0.5).powi(b[0] as i32) * (u[1] - 0.5).powi(b[1] as i32);
                        s += wa * wb * 0.25 * m * eval_poly2(&exps, c, centered(u, *k));
                    }
                }
                a[(row, col)] = s;
            }
        }
        let sv = a.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > 1e-10 * smax).count();
        if rank < nm {
            return Err(Error::Construction("moment constraint matrix is rank deficient".into()));
        }
        let dim = n - rank;
        // Projector onto ker A: I − Q Qᵀ with Aᵀ = QR.
        let q = a.transpose().qr().q();
        let proj = DMatrix::<f64>::identity(n, n) - &q * q.transpose();
        // Pivot order: degree of the local polynomial, then child, then exponent order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| {
            let (k, e, _) = &local[i];
            let pos = exps.iter().position(|x| x == e).unwrap();
            (e[0] + e[1], *k, pos)
        });
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
        for &i in &order {
            if basis.len() == dim {
                break;
            }
            let mut v: Vec<f64> = proj.column(i).iter().copied().collect();
            for _ in 0..2 {
                for b in &basis {
                    let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    for (x, y) in v.iter_mut().zip(b) {
                        *x -= d * y;
                    }
                }
            }
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 1e-8 {
                basis.push(v.into_iter().map(|x| x / nrm).collect());
            }
        }
        if basis.len() != dim {
            return Err(Error::Construction(format!("found {} of {dim} basis functions", basis.len())));
        }
        let coeffs = basis
            .iter()
            .map(|v| {
                let mut out: [Vec<f64>; 4] = Default::default();
                for o in out.iter_mut() {
                    *o = vec![0.0; nm];
                }
                for (col, (k, _, c)) in local.iter().enumerate() {
                    for m in 0..nm {
                        out[*k][m] += v[col] * c[m];
                    }
                }
                out
            })
            .collect();
        Ok(Self { kappa, exponents: exps, coeffs, constraint_rank: rank })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Value of mother function `a` at `u` (zero outside `[0,1)²`).
    pub fn eval(&self, a: usize, u: [f64; 2]) -> f64 {
        match child_of(u) {
            Some(k) => eval_poly2(&self.exponents, &self.coeffs[a][k], centered(u, k)),
            None => 0.0,
        }
    }

    /// All function values at `u`.
    pub fn eval_all(&self, u: [f64; 2], out: &mut [f64]) {
        match child_of(u) {
            Some(k) => {
                for (a, o) in out.iter_mut().enumerate() {
                    *o = eval_poly2(&self.exponents, &self.coeffs[a][k], centered(u, k));
                }
            }
            None => out.fill(0.0),
        }
    }

    /// Gram matrix by exact Gauss quadrature on the children.
    pub fn gram(&self) -> DMatrix<f64> {
        let d = self.dim();
        let gl = GaussLegendre::new(self.kappa + 1);
        let mut g = DMatrix::zeros(d, d);
        let mut va = vec![0.0; d];
        for off in CHILD_OFFSETS {
            for (ta, wa) in gl.nodes.iter().zip(&gl.weights) {
                for (tb, wb) in gl.nodes.iter().zip(&gl.weights) {
                    let u = [0.5 * (off[0] as f64 + ta), 0.5 * (off[1] as f64 + tb)];
                    self.eval_all(u, &mut va);
                    let w = wa * wb * 0.25;
                    for i in 0..d {
                        for j in 0..d {
                            g[(i, j)] += w * va[i] * va[j];
                        }
                    }
                }
            }
        }
        g
    }

    /// `max_{a, |β|<κ} |∫ H_a u^β du|` by exact quadrature.
    pub fn max_moment(&self) -> f64 {
        let gl = GaussLegendre::new(self.kappa + 1);
        let mut worst: f64 = 0.0;
        for a in 0..self.dim() {
            for b in &self.exponents {
                let mut s = 0.0;
                for off in CHILD_OFFSETS {
                    for (ta, wa) in gl.nodes.iter().zip(&gl.weights) {
                        for (tb, wb) in gl.nodes.iter().zip(&gl.weights) {
                            let u = [0.5 * (off[0] as f64 + ta), 0.5 * (off[1] as f64 + tb)];
                            s += wa * wb * 0.25 * u[0].powi(b[0] as i32) * u[1].powi(b[1] as i32) * self.eval(a, u);
                        }
                    }
                }
                worst = worst.max(s.abs());
            }
        }
        worst
    }
}

/// Alpert basis `{h^a_{Q;κ}}` on a square: the affine push of the mother basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlpertBasis {
    pub square: DyadicSquare,
    pub kappa: usize,
    pub mother: Arc<MotherBasis>,
}

impl AlpertBasis {
    pub fn dim(&self) -> usize {
        self.mother.dim()
    }

    /// `h^a_Q(x) = ℓ⁻¹ H_a((x − x₀)/ℓ)`.
    pub fn eval(&self, a: usize, x: [f64; 2]) -> f64 {
        let p = self.square.lower_left();
        let l = self.square.side();
        self.mother.eval(a, [(x[0] - p[0]) / l, (x[1] - p[1]) / l]) / l
    }

    pub fn element(&self, a: usize) -> PiecewisePolynomial {
        PiecewisePolynomial { square: self.square, coeffs: self.mother.coeffs[a].clone() }
    }
}

pub fn build_alpert_basis(q: &DyadicSquare, kappa: usize) -> Result<AlpertBasis> {
    Ok(AlpertBasis { square: *q, kappa, mother: Arc::new(MotherBasis::new(kappa)?) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BaseDomain;

    #[test]
    fn dimensions_and_rank() {
        for kappa in 1..=4 {
            let m = MotherBasis::new(kappa).unwrap();
            let nm = kappa * (kappa + 1) / 2;
            assert_eq!(m.constraint_rank, nm);
            assert_eq!(m.dim(), 3 * nm);
        }
        assert_eq!(MotherBasis::new(1).unwrap().dim(), 3);
        assert!(MotherBasis::new(0).is_err());
    }

    #[test]
    fn orthonormal_with_vanishing_moments() {
        for kappa in 1..=4 {
            let m = MotherBasis::new(kappa).unwrap();
            let g = m.gram();
            let e = (g - DMatrix::identity(m.dim(), m.dim())).abs().max();
            assert!(e < 1e-12, "κ={kappa} gram error {e}");
            assert!(m.max_moment() < 1e-12);
        }
    }

    #[test]
    fn haar_case_is_mean_zero_child_constants() {
        let m = MotherBasis::new(1).unwrap();
        for a in 0..3 {
            let v: Vec<f64> = (0..4).map(|k| m.coeffs[a][k][0]).collect();
            assert!(v.iter().sum::<f64>().abs() < 1e-14);
            assert!(m.coeffs[a].iter().all(|c| c.len() == 1));
        }
    }

    #[test]
    fn affine_push() {
        let d = BaseDomain::unit();
        let q = DyadicSquare::new(&d, 2, [1, 3]);
        let b = build_alpert_basis(&q, 2).unwrap();
        let u = [0.3, 0.7];
        let x = [0.25 + 0.25 * u[0], 0.75 + 0.25 * u[1]];
        for a in 0..b.dim() {
            assert!((b.eval(a, x) - 4.0 * b.mother.eval(a, u)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(MotherBasis::new(3).unwrap(), MotherBasis::new(3).unwrap());
    }
}
