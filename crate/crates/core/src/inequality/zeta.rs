//! The envelope `ζ_λ(w) = 2^{−3λ} ζ(w/2^λ)` and its lattice sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::extension::norm3;
use crate::grid::ball_lattice;

/// Width parameter of the default bump `ρ(w) = exp(−σ|w|²/2)`.
pub const DEFAULT_SIGMA: f64 = 32.0;

/// `ζ(w) = sup_{|w − w′| ≤ 1} ρ(w′) = exp(−σ·max(|w| − 1, 0)²/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zeta {
    pub sigma: f64,
}

impl Default for Zeta {
    fn default() -> Self {
        Self { sigma: DEFAULT_SIGMA }
    }
}

impl Zeta {
    pub fn envelope(&self, w: &[f64; 3]) -> f64 {
        let t = (norm3(w) - 1.0).max(0.0);
        (-0.5 * self.sigma * t * t).exp()
    }

    pub fn at_scale(&self, lambda: u32, w: &[f64; 3]) -> f64 {
        let s = (lambda as f64).exp2();
        s.powi(-3) * self.envelope(&[w[0] / s, w[1] / s, w[2] / s])
    }

    /// `Σ_{a ∈ Γ_λ(R)} ζ_λ(z − a)`.
    pub fn lattice_sum(&self, lambda: u32, radius: f64, z: &[f64; 3]) -> f64 {
        ball_lattice(lambda, radius)
            .centers
            .iter()
            .map(|a| self.at_scale(lambda, &[z[0] - a[0], z[1] - a[1], z[2] - a[2]]))
            .sum()
    }

    /// `2^{3λ} max_z Σ_a ζ_λ(z − a)` over `count` random `z ∈ B(0, R)` plus the
    /// deep-hole point `2^{λ−1}(1,1,1)`.
    pub fn lattice_cap(&self, lambda: u32, radius: f64, count: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (lambda as f64).exp2();
        let mut zs = vec![[0.5 * s; 3]];
        while zs.len() < count + 1 {
            let z = [rng.gen_range(-radius..radius), rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)];
            if norm3(&z) <= radius {
                zs.push(z);
            }
        }
        let worst = crate::par::map_slice(&zs, |z| self.lattice_sum(lambda, radius, z))
            .into_iter()
            .fold(0.0, f64::max);
        worst * s.powi(3)
    }
}

/// `ζ_λ(w)` with the default envelope.
pub fn zeta_envelope(lambda: u32, w: &[f64; 3]) -> f64 {
    Zeta::default().at_scale(lambda, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn origin_value() {
        assert_eq!(zeta_envelope(2, &[0.0; 3]), 2f64.powi(-6));
    }

    #[test]
    fn unit_width_bump_breaks_the_cap() {
        let wide = Zeta { sigma: 1.0 };
        assert!(wide.lattice_cap(2, 64.0, 20, 1) > 10.0);
    }

    proptest! {
        #[test]
        fn radial_and_nonincreasing(l in 0u32..5, r1 in 0.0f64..200.0, dr in 0.0f64..50.0, th in 0.0f64..6.28) {
            let s = (l as f64).exp2();
            let r1 = r1.max(s);
            let a = zeta_envelope(l, &[r1, 0.0, 0.0]);
            let b = zeta_envelope(l, &[(r1 + dr) * th.cos(), (r1 + dr) * th.sin(), 0.0]);
            prop_assert!(a >= b * (1.0 - 1e-12));
            let c = zeta_envelope(l, &[0.0, r1 * th.sin(), r1 * th.cos()]);
            prop_assert!((a - c).abs() <= 1e-12 * a.max(1e-300));
        }
    }
}
