//! The paraboloid map, the extension operator and frequency sets.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::funcrep::SampledFunction;
use crate::grid::DyadicSquare;
use crate::par;

/// `Φ(x) = (x₁, x₂, x₁² + x₂²)`.
pub fn phi(x: [f64; 2]) -> [f64; 3] {
    [x[0], x[1], x[0] * x[0] + x[1] * x[1]]
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// How a frequency set was generated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyKind {
    /// Radially stratified Monte Carlo in `B(0, R)`.
    Ball { radius: f64 },
    /// Radially stratified Monte Carlo in `A(0, 2^r) = {2^{r−1} < |ξ| ≤ 2^r}`.
    Annulus { r: i32 },
    /// `B(0,1)` followed by the shells `A(0, 2^j)`, `j = 1..=k`; the set for `k`
    /// is a prefix of the set for `k + 1`.
    DyadicBall { k: u32 },
    /// `spacing·Z³ ∩ B(0, R)`.
    Lattice { spacing: f64, radius: f64 },
    Explicit,
}

/// Points `ξ` with integration weights for the region they sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySet {
    pub kind: FrequencyKind,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn unit_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let t: f64 = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * t.cos(), s * t.sin(), z]
}

/// Stratified samples with `a < |ξ| ≤ b`: stratum `k` holds one point with
/// `|ξ|³` uniform in the `k`-th equal slice of `(a³, b³]`.
fn shell(a: f64, b: f64, count: usize, rng: &mut ChaCha8Rng) -> (Vec<[f64; 3]>, Vec<f64>) {
    let (a3, b3) = (a * a * a, b * b * b);
    let w = 4.0 / 3.0 * PI * (b3 - a3) / count as f64;
    let mut pts = Vec::with_capacity(count);
    for k in 0..count {
        let u: f64 = rng.gen();
        let t = 1.0 - (k as f64 + u) / count as f64;
        let r = (a3 + t * (b3 - a3)).cbrt().clamp(a.max(f64::MIN_POSITIVE), b);
        let r = if r <= a { b.min(a + (b - a) * 1e-12) } else { r };
        let d = unit_direction(rng);
        pts.push([r * d[0], r * d[1], r * d[2]]);
    }
    (pts, vec![w; count])
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl FrequencySet {
    pub fn ball(radius: f64, count: usize, seed: u64) -> Self {
        let (points, weights) = shell(0.0, radius, count, &mut seeded(seed, 0));
        Self { kind: FrequencyKind::Ball { radius }, points, weights }
    }

    pub fn annulus(r: i32, count: usize, seed: u64) -> Self {
        let b = (r as f64).exp2();
        let (points, weights) = shell(0.5 * b, b, count, &mut seeded(seed, 1000 + r as u64));
        Self { kind: FrequencyKind::Annulus { r }, points, weights }
    }

    pub fn dyadic_ball(k: u32, per_shell: usize, seed: u64) -> Self {
        let (mut points, mut weights) = shell(0.0, 1.0, per_shell, &mut seeded(seed, 1000));
        for j in 1..=k {
            let (p, w) = shell((j as f64 - 1.0).exp2(), (j as f64).exp2(), per_shell, &mut seeded(seed, 1000 + j as u64));
            points.extend(p);
            weights.extend(w);
        }
        Self { kind: FrequencyKind::DyadicBall { k }, points, weights }
    }

    pub fn lattice(spacing: f64, radius: f64) -> Self {
        let k = (radius / spacing).floor() as i64;
        let mut points = Vec::new();
        for i in -k..=k {
            for j in -k..=k {
                for l in -k..=k {
                    let p = [i as f64 * spacing, j as f64 * spacing, l as f64 * spacing];
                    if norm3(&p) <= radius {
                        points.push(p);
                    }
                }
            }
        }
        let weights = vec![spacing.powi(3); points.len()];
        Self { kind: FrequencyKind::Lattice { spacing, radius }, points, weights }
    }

    /// Unit weights.
    pub fn explicit(points: Vec<[f64; 3]>) -> Self {
        let weights = vec![1.0; points.len()];
        Self { kind: FrequencyKind::Explicit, points, weights }
    }

    /// Uniform random points in `B(0, R)` with unit weights.
    pub fn random_in_ball(count: usize, radius: f64, seed: u64) -> Self {
        let mut s = Self::ball(radius, count, seed);
        s.kind = FrequencyKind::Explicit;
        s.weights = vec![1.0; count];
        s
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(norm3).fold(0.0, f64::max)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same weights, points mapped by `f`.
    pub fn map_points<F: Fn(&[f64; 3]) -> [f64; 3]>(&self, f: F) -> Self {
        Self { kind: FrequencyKind::Explicit, points: self.points.iter().map(f).collect(), weights: self.weights.clone() }
    }

    /// First `n` points (used with the prefix property of dyadic balls).
    pub fn prefix(&self, n: usize) -> Self {
        Self { kind: self.kind.clone(), points: self.points[..n].to_vec(), weights: self.weights[..n].to_vec() }
    }
}

/// Quadrature accuracy controls for [`extend`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtendOptions {
    /// Largest phase change `|ξ|(1+2·radius)·side` allowed per cell.
    pub phase_per_cell: f64,
    /// Maximum node × point products per call.
    pub budget: f64,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        Self { phase_per_cell: PI / 4.0, budget: 4e9 }
    }
}

/// Record of the mesh actually used by an extension call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// Bound on the phase change over any cell, at the largest `|ξ|`.
    pub max_phase_per_cell: f64,
    pub nodes: usize,
    pub products: f64,
}

/// Values of `Ef` over a frequency set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionField {
    pub source: String,
    pub set: FrequencySet,
    pub values: Vec<Complex64>,
    pub certificate: Certificate,
}

impl ExtensionField {
    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// CSV with columns `xi1, xi2, xi3, weight, re, im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(w, "xi1,xi2,xi3,weight,re,im")?;
        for ((p, wt), v) in self.set.points.iter().zip(&self.set.weights).zip(&self.values) {
            writeln!(w, "{},{},{},{},{},{}", p[0], p[1], p[2], wt, v.re, v.im)?;
        }
        Ok(())
    }
}

/// Tensor block of nodes: `vals[a·ny + b]` is the weighted value at `(xs[a], ys[b])`.
#[derive(Debug, Clone)]
pub(crate) struct TensorBlock {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub vals: Vec<Complex64>,
}

impl TensorBlock {
    /// `Σ_{a,b} vals[a,b] e^{−i(Φ(x_a, y_b)·ξ)}` using the separable phase.
    pub fn eval(&self, xi: &[f64; 3], bufa: &mut Vec<Complex64>, bufb: &mut Vec<Complex64>) -> Complex64 {
        bufa.clear();
        bufb.clear();
        bufa.extend(self.xs.iter().map(|&x| Complex64::from_polar(1.0, -(x * xi[0] + x * x * xi[2]))));
        bufb.extend(self.ys.iter().map(|&y| Complex64::from_polar(1.0, -(y * xi[1] + y * y * xi[2]))));
        let ny = self.ys.len();
        let mut s = Complex64::new(0.0, 0.0);
        for (a, ea) in bufa.iter().enumerate() {
            let row = &self.vals[a * ny..(a + 1) * ny];
            let mut t = Complex64::new(0.0, 0.0);
            for (v, eb) in row.iter().zip(bufb.iter()) {
                t += v * eb;
            }
            s += t * ea;
        }
        s
    }
}

/// Evaluate a list of blocks at every point, in parallel over points.
pub(crate) fn eval_blocks(blocks: &[TensorBlock], points: &[[f64; 3]]) -> Vec<Complex64> {
    par::map_slice(points, |xi| {
        let mut a = Vec::new();
        let mut b = Vec::new();
        blocks.iter().map(|bl| bl.eval(xi, &mut a, &mut b)).sum()
    })
}

/// Per-cell refinement needed so that each subcell changes phase by at most
/// `phase_per_cell` at frequency `xi_max`.
fn refinement_for(f: &SampledFunction, xi_max: f64, opts: &ExtendOptions) -> (Vec<usize>, f64) {
    let radius = f.support_radius();
    let k = xi_max * (1.0 + 2.0 * radius);
    let mut worst: f64 = 0.0;
    let ms = f
        .cells
        .iter()
        .map(|c| {
            let side = c.w.max(c.h);
            let m = ((side * k / opts.phase_per_cell).ceil() as usize).max(1);
            worst = worst.max(side / m as f64 * k);
            m
        })
        .collect();
    (ms, worst)
}

fn build_blocks(f: &SampledFunction, ms: &[usize]) -> Vec<TensorBlock> {
    let g = f.rule.order;
    let gl = f.rule.gauss();
    let mut cache: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut blocks = Vec::with_capacity(f.cells.len());
    for (k, c) in f.cells.iter().enumerate() {
        let vals = &f.values[k * g * g..(k + 1) * g * g];
        let m = ms[k];
        let mg = m * g;
        let l = cache.entry(m).or_insert_with(|| gl.refinement_matrix(&gl, m));
        let mut xs = Vec::with_capacity(mg);
        let mut ys = Vec::with_capacity(mg);
        let mut wx = Vec::with_capacity(mg);
        let mut wy = Vec::with_capacity(mg);
        for ci in 0..m {
            for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                xs.push(c.x0 + c.w * (ci as f64 + t) / m as f64);
                ys.push(c.y0 + c.h * (ci as f64 + t) / m as f64);
                wx.push(w * c.w / m as f64);
                wy.push(w * c.h / m as f64);
            }
        }
        let mut tmp = vec![Complex64::new(0.0, 0.0); mg * g];
        for ra in 0..mg {
            for b in 0..g {
                let mut s = Complex64::new(0.0, 0.0);
                for a in 0..g {
                    s += vals[a * g + b] * l[ra * g + a];
                }
                tmp[ra * g + b] = s;
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); mg * mg];
        for ra in 0..mg {
            for rb in 0..mg {
                let mut s = Complex64::new(0.0, 0.0);
                for b in 0..g {
                    s += tmp[ra * g + b] * l[rb * g + b];
                }
                out[ra * mg + rb] = s * (wx[ra] * wy[rb]);
            }
        }
        blocks.push(TensorBlock { xs, ys, vals: out });
    }
    blocks
}

/// `Ef(ξ) = Σ_nodes w_j f(x_j) e^{−iΦ(x_j)·ξ}` with the mesh refined by
/// interpolation until every cell changes phase by at most `phase_per_cell`.
pub fn extend(f: &SampledFunction, set: &FrequencySet, opts: &ExtendOptions) -> Result<ExtensionField> {
    if set.is_empty() {
        return invalid("empty frequency set");
    }
    let f = f.compact();
    let xi_max = set.max_norm();
    let (ms, worst) = refinement_for(&f, xi_max, opts);
    let g2 = (f.rule.order * f.rule.order) as f64;
    let nodes: f64 = ms.iter().map(|&m| (m * m) as f64 * g2).sum();
    let products = nodes * set.len() as f64;
    if products > opts.budget {
        return Err(Error::Capacity(format!(
            "extension needs {products:.3e} node-point products (budget {:.3e}); use fewer or Monte Carlo frequencies",
            opts.budget
        )));
    }
    let blocks = build_blocks(&f, &ms);
    let values = eval_blocks(&blocks, &set.points);
    Ok(ExtensionField {
        source: "sampled".into(),
        set: set.clone(),
        values,
        certificate: Certificate { max_phase_per_cell: worst, nodes: nodes as usize, products },
    })
}

/// Localized piece `T_I f(ξ) = e^{+iΦ(c_I)·ξ} E(f_I)(ξ)`, so that
/// `Ef = Σ_I e^{−iΦ(c_I)·ξ} T_I f`.
pub fn extend_localized(
    f: &SampledFunction,
    i: &DyadicSquare,
    set: &FrequencySet,
    opts: &ExtendOptions,
) -> Result<ExtensionField> {
    let fi = f.restrict(i)?;
    let mut field = extend(&fi, set, opts)?;
    let c = phi(i.center());
    for (v, xi) in field.values.iter_mut().zip(&set.points) {
        *v *= Complex64::from_polar(1.0, dot3(&c, xi));
    }
    field.source = "localized".into();
    Ok(field)
}

/// `max_ξ | |T_I f(ξ − z)| − |E(M̃_z f_I)(ξ)| |`. With the `e^{−iΦ·ξ}` convention
/// `E(M̃_z g)(ξ) = Eg(ξ − z)`, so the discrepancy is pure quadrature error.
pub fn modulation_shift_check(
    f: &SampledFunction,
    i: &DyadicSquare,
    z: [f64; 3],
    set: &FrequencySet,
    opts: &ExtendOptions,
) -> Result<f64> {
    let shifted = set.map_points(|x| [x[0] - z[0], x[1] - z[1], x[2] - z[2]]);
    let lhs = extend_localized(f, i, &shifted, opts)?;
    let fi = f.restrict(i)?.compact();
    // resolve the modulation factor on the mesh before multiplying
    let (ms, _) = refinement_for(&fi, norm3(&z), opts);
    let m = ms.into_iter().max().unwrap_or(1);
    let rhs = extend(&fi.refined(m).modulate(z), set, opts)?;
    Ok(lhs
        .values
        .iter()
        .zip(&rhs.values)
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max))
}

/// `(Σ_j w_j |Ef(ξ_j)|^q)^{1/q}`.
pub fn local_lq_norm(field: &ExtensionField, q: f64) -> Result<f64> {
    weighted_lq(&field.values, &field.set.weights, q)
}

pub fn weighted_lq(values: &[Complex64], weights: &[f64], q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return invalid(format!("L^q norm needs q ≥ 1, got {q}"));
    }
    let s: f64 = values.iter().zip(weights).map(|(v, w)| w * v.norm().powf(q)).sum();
    Ok(s.powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::QuadratureRule;
    use crate::grid::{build_grid, BaseDomain};

    #[test]
    fn phi_examples() {
        assert_eq!(phi([0.0, 0.0]), [0.0, 0.0, 0.0]);
        assert_eq!(phi([0.25, 0.0]), [0.25, 0.0, 0.0625]);
        let p = phi([-1.0 / 3.0, 1.0 / 3.0]);
        assert!((p[2] - 2.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn annulus_bounds_and_volume() {
        let a = FrequencySet::annulus(4, 5000, 3);
        assert!(a.points.iter().all(|p| norm3(p) > 8.0 && norm3(p) <= 16.0));
        let vol = 4.0 / 3.0 * PI * (16f64.powi(3) - 8f64.powi(3));
        assert!((a.total_weight() - vol).abs() < 0.01 * vol);
        let b = FrequencySet::ball(2.0, 100, 1);
        assert!(b.points.iter().all(|p| norm3(p) <= 2.0));
    }

    #[test]
    fn dyadic_ball_is_nested() {
        let a = FrequencySet::dyadic_ball(3, 20, 9);
        let b = FrequencySet::dyadic_ball(5, 20, 9);
        assert_eq!(a.points[..], b.points[..a.len()]);
    }

    #[test]
    fn constant_at_zero_frequency() {
        let d = BaseDomain::centered(0.5).unwrap();
        let g = build_grid(&d, 1).unwrap();
        let f = SampledFunction::sample_real(|_| 1.0, &g, &QuadratureRule::new(4, 1)).unwrap();
        let e = extend(&f, &FrequencySet::explicit(vec![[0.0; 3]]), &ExtendOptions::default()).unwrap();
        assert!((e.values[0] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matches_closed_form_for_linear_phase() {
        // ξ = (a, 0, 0) on [0,1)²: ∫ e^{−i a x} dx = (1 − e^{−ia})/(ia)
        let g = build_grid(&BaseDomain::unit(), 0).unwrap();
        let f = SampledFunction::sample_real(|_| 1.0, &g, &QuadratureRule::new(8, 1)).unwrap();
        let a = 37.0;
        let e = extend(&f, &FrequencySet::explicit(vec![[a, 0.0, 0.0]]), &ExtendOptions::default()).unwrap();
        let exact = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -a)) / Complex64::new(0.0, a);
        assert!((e.values[0] - exact).norm() < 1e-13);
        assert!(e.certificate.max_phase_per_cell <= PI / 4.0 + 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let g = build_grid(&BaseDomain::unit(), 2).unwrap();
        let f = SampledFunction::sample_real(|_| 1.0, &g, &QuadratureRule::new(8, 1)).unwrap();
        let opts = ExtendOptions { budget: 10.0, ..Default::default() };
        let r = extend(&f, &FrequencySet::explicit(vec![[1.0, 0.0, 0.0]]), &opts);
        assert!(matches!(r, Err(Error::Capacity(_))));
    }

    #[test]
    fn localized_pieces_resum() {
        let d = BaseDomain::centered(0.5).unwrap();
        let g = build_grid(&d, 2).unwrap();
        let f = SampledFunction::sample(|p| Complex64::new(p[0].cos(), p[1]), &g, &QuadratureRule::new(6, 1)).unwrap();
        let set = FrequencySet::ball(20.0, 30, 5);
        let opts = ExtendOptions::default();
        let full = extend(&f, &set, &opts).unwrap();
        let mut acc = vec![Complex64::new(0.0, 0.0); set.len()];
        for q in &g.squares {
            let t = extend_localized(&f, q, &set, &opts).unwrap();
            let c = phi(q.center());
            for ((a, v), xi) in acc.iter_mut().zip(&t.values).zip(&set.points) {
                *a += v * Complex64::from_polar(1.0, -dot3(&c, xi));
            }
        }
        for (a, b) in acc.iter().zip(&full.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
