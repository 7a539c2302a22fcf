//! Named test-function generators used by the constant estimators and sweeps.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::funcrep::{QuadratureRule, SampledFunction};
use crate::grid::{build_grid, BaseDomain, DyadicSquare, Rect};

/// Searchable family standing in for the sup over `L^∞(U)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Constants,
    /// `1_I` for every `I ∈ G_level[U]`.
    Indicators { level: u32 },
    /// `count` independent `±1` tensors on `G_level[U]`.
    RandomSigns { level: u32, count: usize },
    /// `count` bumps of radius `side/8` with random centers and modulations.
    Bumps { count: usize },
}

/// One labelled family member.
#[derive(Debug, Clone)]
pub struct Member {
    pub label: String,
    pub f: SampledFunction,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Piecewise-constant `±1` on the level-`level` descendants of `k`.
pub fn random_signs(k: &DyadicSquare, level: u32, seed: u64, rule: &QuadratureRule) -> Result<SampledFunction> {
    if level < k.level {
        return invalid(format!("sign level {level} is coarser than the square level {}", k.level));
    }
    let cells: Vec<Rect> = k.descendants(level).iter().map(|q| q.rect()).collect();
    let mut r = rng(seed, 7);
    let signs: Vec<f64> = (0..cells.len()).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let n = 1usize << (level - k.level);
    let p = k.lower_left();
    let l = k.side() / n as f64;
    SampledFunction::sample_cells(
        move |x| {
            let i = (((x[0] - p[0]) / l).floor() as usize).min(n - 1);
            let j = (((x[1] - p[1]) / l).floor() as usize).min(n - 1);
            Complex64::new(signs[i * n + j], 0.0)
        },
        cells,
        Arc::new(rule.clone()),
    )
}

/// Smooth bump `exp(−1/(1 − |x − c|²/r²))` times `e^{iΦ(x)·z}`.
pub fn modulated_bump(center: [f64; 2], radius: f64, z: [f64; 3]) -> impl Fn([f64; 2]) -> Complex64 {
    move |x| {
        let r2 = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
        if r2 >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ph = x[0] * z[0] + x[1] * z[1] + (x[0] * x[0] + x[1] * x[1]) * z[2];
        Complex64::from_polar((-1.0 / (1.0 - r2)).exp() * std::f64::consts::E, ph)
    }
}

pub fn members(family: &Family, domain: &BaseDomain, seed: u64, rule: &QuadratureRule) -> Result<Vec<Member>> {
    let root = DyadicSquare::root(domain);
    Ok(match *family {
        Family::Constants => {
            let g = build_grid(domain, 0)?;
            vec![Member { label: "constant".into(), f: SampledFunction::sample(|_| Complex64::new(1.0, 0.0), &g, rule)? }]
        }
        Family::Indicators { level } => root
            .descendants(level)
            .iter()
            .map(|q| {
                let f = SampledFunction::sample_cells(|_| Complex64::new(1.0, 0.0), vec![q.rect()], Arc::new(rule.clone()))?;
                Ok(Member { label: format!("indicator[{},{}]", q.index[0], q.index[1]), f })
            })
            .collect::<Result<_>>()?,
        Family::RandomSigns { level, count } => (0..count)
            .map(|k| Ok(Member { label: format!("signs#{k}"), f: random_signs(&root, level, seed.wrapping_add(k as u64), rule)? }))
            .collect::<Result<_>>()?,
        Family::Bumps { count } => {
            let g = build_grid(domain, 3)?;
            let mut r = rng(seed, 11);
            let side = domain.side;
            let rad = side / 8.0;
            (0..count)
                .map(|k| {
                    let c = [
                        domain.origin[0] + rad + r.gen::<f64>() * (side - 2.0 * rad),
                        domain.origin[1] + rad + r.gen::<f64>() * (side - 2.0 * rad),
                    ];
                    let z = [r.gen_range(-8.0..8.0), r.gen_range(-8.0..8.0), r.gen_range(-8.0..8.0)];
                    let f = SampledFunction::sample(modulated_bump(c, rad, z), &g, rule)?;
                    Ok(Member { label: format!("bump#{k}"), f })
                })
                .collect::<Result<_>>()?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signs_are_unimodular_and_seeded() {
        let d = BaseDomain::unit();
        let r = QuadratureRule::new(2, 1);
        let a = random_signs(&DyadicSquare::root(&d), 3, 5, &r).unwrap();
        let b = random_signs(&DyadicSquare::root(&d), 3, 5, &r).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        assert_eq!(a.cells.len(), 64);
    }

    #[test]
    fn family_sizes() {
        let d = BaseDomain::centered(1.0).unwrap();
        let r = QuadratureRule::new(4, 1);
        assert_eq!(members(&Family::Indicators { level: 2 }, &d, 0, &r).unwrap().len(), 16);
        let b = members(&Family::Bumps { count: 3 }, &d, 1, &r).unwrap();
        assert!(b.iter().all(|m| m.f.max_abs() <= 1.0 + 1e-12));
    }
}
