//! Gauss–Legendre rules on `[0, 1]` and Lagrange interpolation on their nodes.

use serde::Serialize;

/// Gauss–Legendre rule with `g` nodes on `[0, 1]`. Weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(g: usize) -> Self {
        assert!(g >= 1, "Gauss–Legendre order must be positive");
        let mut nodes = vec![0.0; g];
        let mut weights = vec![0.0; g];
        let n = g as f64;
        for k in 0..g.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_g.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(g, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(g, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1], ascending order
            nodes[k] = 0.5 * (1.0 - x);
            nodes[g - 1 - k] = 0.5 * (1.0 + x);
            weights[k] = 0.5 * w;
            weights[g - 1 - k] = 0.5 * w;
        }
        if g % 2 == 1 {
            nodes[g / 2] = 0.5;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_a^b f(t) dt.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(a + h * t))
            .sum::<f64>()
            * h
    }

    /// Barycentric weights for interpolation on the rule's nodes.
    pub fn barycentric(&self) -> Vec<f64> {
        let g = self.len();
        (0..g)
            .map(|j| {
                let mut p = 1.0;
                for k in 0..g {
                    if k != j {
                        p *= self.nodes[j] - self.nodes[k];
                    }
                }
                1.0 / p
            })
            .collect()
    }

    /// Lagrange basis values `ℓ_j(t)` for all nodes at a point of `[0, 1]` (or beyond).
    pub fn lagrange_at(&self, bary: &[f64], t: f64) -> Vec<f64> {
        let g = self.len();
        if let Some(j) = self.nodes.iter().position(|&x| x == t) {
            let mut out = vec![0.0; g];
            out[j] = 1.0;
            return out;
        }
        let terms: Vec<f64> = (0..g).map(|j| bary[j] / (t - self.nodes[j])).collect();
        let s: f64 = terms.iter().sum();
        terms.into_iter().map(|v| v / s).collect()
    }

    /// Interpolation matrix from this rule's nodes on `[0,1]` to the nodes of `target`
    /// placed on each of the `m` equal subintervals. Row-major `(m·g_t) × g`.
    pub fn refinement_matrix(&self, target: &GaussLegendre, m: usize) -> Vec<f64> {
        let bary = self.barycentric();
        let mut out = Vec::with_capacity(m * target.len() * self.len());
        for c in 0..m {
            for &t in &target.nodes {
                out.extend(self.lagrange_at(&bary, (c as f64 + t) / m as f64));
            }
        }
        out
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_nodes_interior() {
        for g in 1..40 {
            let r = GaussLegendre::new(g);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "g={g} sum={s}");
            assert!(r.nodes.iter().all(|&t| t > 0.0 && t < 1.0));
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn exact_for_degree_2g_minus_1() {
        for g in 1..20 {
            let r = GaussLegendre::new(g);
            for d in 0..2 * g {
                let v = r.integrate(0.0, 1.0, |t| t.powi(d as i32));
                assert!((v - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "g={g} d={d}");
            }
        }
    }

    #[test]
    fn three_point_rule_matches_closed_form() {
        let r = GaussLegendre::new(3);
        let x = 0.5 * (0.6f64).sqrt();
        assert!((r.nodes[0] - (0.5 - x)).abs() < 1e-15);
        assert!((r.weights[1] - 4.0 / 9.0).abs() < 1e-15);
        assert!((r.weights[0] - 5.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_reproduces_polynomials() {
        let r = GaussLegendre::new(5);
        let m = r.refinement_matrix(&r, 3);
        let vals: Vec<f64> = r.nodes.iter().map(|&t| 1.0 - 2.0 * t + t.powi(4)).collect();
        for c in 0..3 {
            for (k, &t) in r.nodes.iter().enumerate() {
                let row = &m[(c * 5 + k) * 5..(c * 5 + k + 1) * 5];
                let v: f64 = row.iter().zip(&vals).map(|(a, b)| a * b).sum();
                let x = (c as f64 + t) / 3.0;
                assert!((v - (1.0 - 2.0 * x + x.powi(4))).abs() < 1e-12);
            }
        }
    }
}
