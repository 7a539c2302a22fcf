//! Mollifier `φ = p·b` with vanishing moments of positive order below κ.
//!
//! `b(y) = β(y₁)β(y₂)` with `β(t) = exp(−1/(1 − (t/c)²))` on `|t| < c = 1/√2`,
//! so `supp b ⊂ [−c, c]² ⊂ B(0, 1)`. The separable bump makes every quantity
//! below reducible to one-dimensional incomplete moments `F_j(s) = ∫_{−c}^{s} t^j β(t) dt`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::basis::monomials;
use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussLegendre;

pub const BUMP_HALF_WIDTH: f64 = std::f64::consts::FRAC_1_SQRT_2;

const TABLE_INTERVALS: usize = 4096;
const LOCAL_ORDER: usize = 10;

pub fn bump1(t: f64) -> f64 {
    let s = t / BUMP_HALF_WIDTH;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Tabulated incomplete moments `F_j` for `j ≤ max_power`.
#[derive(Debug, Clone)]
pub struct IncompleteMoments {
    pub max_power: usize,
    h: f64,
    /// `table[i][j] = F_j(−c + i·h)`.
    table: Vec<Vec<f64>>,
    gl: GaussLegendre,
}

impl IncompleteMoments {
    pub fn new(max_power: usize) -> Self {
        let c = BUMP_HALF_WIDTH;
        let h = 2.0 * c / TABLE_INTERVALS as f64;
        let gl = GaussLegendre::new(LOCAL_ORDER);
        let mut table = Vec::with_capacity(TABLE_INTERVALS + 1);
        let mut acc = vec![0.0; max_power + 1];
        table.push(acc.clone());
        for i in 0..TABLE_INTERVALS {
            let a = -c + i as f64 * h;
            let inc = Self::local(&gl, max_power, a, a + h);
            for (x, y) in acc.iter_mut().zip(&inc) {
                *x += y;
            }
            table.push(acc.clone());
        }
        Self { max_power, h, table, gl }
    }

    fn local(gl: &GaussLegendre, max_power: usize, a: f64, b: f64) -> Vec<f64> {
        let mut out = vec![0.0; max_power + 1];
        let w = b - a;
        for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
            let x = a + w * t;
            let v = wt * w * bump1(x);
            let mut p = 1.0;
            for o in out.iter_mut() {
                *o += v * p;
                p *= x;
            }
        }
        out
    }

    /// `F_j(s)` for all `j`, written into `out`.
    pub fn eval(&self, s: f64, out: &mut [f64]) {
        let c = BUMP_HALF_WIDTH;
        if s <= -c {
            out.fill(0.0);
            return;
        }
        let s = s.min(c);
        let i = (((s + c) / self.h) as usize).min(TABLE_INTERVALS - 1);
        let a = -c + i as f64 * self.h;
        out.copy_from_slice(&self.table[i][..out.len()]);
        if s > a {
            let inc = Self::local(&self.gl, out.len() - 1, a, s);
            for (x, y) in out.iter_mut().zip(&inc) {
                *x += y;
            }
        }
    }

    /// Complete moments `M_j = F_j(c)`.
    pub fn complete(&self) -> Vec<f64> {
        self.table[TABLE_INTERVALS].clone()
    }
}

/// `φ(y) = p(y) b(y)` with `∫φ = 1` and `∫φ y^γ = 0` for `0 < |γ| < κ`.
#[derive(Debug, Clone, Serialize)]
pub struct Mollifier {
    pub kappa: usize,
    pub eta: f64,
    pub half_width: f64,
    /// Exponents and coefficients of `p`.
    pub exponents: Vec<[usize; 2]>,
    pub coeffs: Vec<f64>,
    #[serde(skip)]
    pub moments: IncompleteMoments,
}

impl Mollifier {
    pub fn new(kappa: usize, eta: f64) -> Result<Self> {
        if kappa == 0 {
            return invalid("mollifier order κ must be at least 1");
        }
        if !(eta > 0.0) {
            return invalid("mollifier scale η must be positive");
        }
        // Moments up to degree 2(κ−1) of p·b, and up to 2(κ−1) + (κ−1) for smooth wavelets.
        let moments = IncompleteMoments::new(3 * kappa);
        let m = moments.complete();
        let exps = monomials(kappa);
        let n = exps.len();
        let a = DMatrix::from_fn(n, n, |r, col| {
            let (g, al) = (exps[r], exps[col]);
            m[g[0] + al[0]] * m[g[1] + al[1]]
        });
        let mut rhs = DVector::zeros(n);
        rhs[0] = 1.0;
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Construction("mollifier moment system is singular".into()))?;
        Ok(Self { kappa, eta, half_width: BUMP_HALF_WIDTH, exponents: exps, coeffs: sol.iter().copied().collect(), moments })
    }

    /// `φ(y)` (unscaled).
    pub fn value(&self, y: [f64; 2]) -> f64 {
        let b = bump1(y[0]) * bump1(y[1]);
        if b == 0.0 {
            return 0.0;
        }
        b * super::basis::eval_poly2(&self.exponents, &self.coeffs, y)
    }

    /// `φ_η(x) = η⁻² φ(x/η)`.
    pub fn scaled_value(&self, x: [f64; 2], scale: f64) -> f64 {
        self.value([x[0] / scale, x[1] / scale]) / (scale * scale)
    }

    /// `∫ φ y^γ` from the tabulated one-dimensional moments.
    pub fn moment(&self, g: [usize; 2]) -> f64 {
        let m = self.moments.complete();
        self.exponents
            .iter()
            .zip(&self.coeffs)
            .map(|(a, c)| c * m[a[0] + g[0]] * m[a[1] + g[1]])
            .sum()
    }
}

pub fn build_mollifier(kappa: usize, eta: f64) -> Result<Mollifier> {
    Mollifier::new(kappa, eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent 2-D composite Gauss–Legendre moment, with far more panels than the table.
    fn brute_moment(phi: &Mollifier, g: [usize; 2], scale: f64) -> f64 {
        let gl = GaussLegendre::new(20);
        let panels = 64;
        let c = BUMP_HALF_WIDTH * scale;
        let h = 2.0 * c / panels as f64;
        let mut s = 0.0;
        for i in 0..panels {
            for j in 0..panels {
                for (ta, wa) in gl.nodes.iter().zip(&gl.weights) {
                    for (tb, wb) in gl.nodes.iter().zip(&gl.weights) {
                        let x = [-c + (i as f64 + ta) * h, -c + (j as f64 + tb) * h];
                        s += wa * wb * h * h * phi.scaled_value(x, scale) * x[0].powi(g[0] as i32) * x[1].powi(g[1] as i32);
                    }
                }
            }
        }
        s
    }

    #[test]
    fn kappa_one_is_normalized_bump() {
        let phi = Mollifier::new(1, 0.1).unwrap();
        assert_eq!(phi.coeffs.len(), 1);
        assert!((phi.moment([0, 0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_three_moments_vanish_by_quadrature() {
        let phi = Mollifier::new(3, 0.05).unwrap();
        assert!((brute_moment(&phi, [0, 0], 1.0) - 1.0).abs() < 1e-10);
        for g in [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2]] {
            assert!(brute_moment(&phi, g, 1.0).abs() < 1e-10, "{g:?}");
        }
    }

    #[test]
    fn scaled_mass_is_one() {
        let phi = Mollifier::new(2, 0.1).unwrap();
        for eta in [0.1, 0.01] {
            assert!((brute_moment(&phi, [0, 0], eta) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn incomplete_moments_are_consistent() {
        let t = IncompleteMoments::new(4);
        let mut out = vec![0.0; 5];
        t.eval(0.0, &mut out);
        let full = t.complete();
        assert!((2.0 * out[0] - full[0]).abs() < 1e-15);
        assert!(full[1].abs() < 1e-16 && full[3].abs() < 1e-16);
        t.eval(10.0, &mut out);
        assert_eq!(out, full[..5]);
        let gl = GaussLegendre::new(30);
        let direct: f64 = (0..200).map(|i| {
            let a = -BUMP_HALF_WIDTH + i as f64 * 0.001;
            gl.integrate(a, a + 0.001, |x| x * x * bump1(x))
        }).sum();
        t.eval(-BUMP_HALF_WIDTH + 0.2, &mut out);
        assert!((out[2] - direct).abs() < 1e-15);
    }
}
