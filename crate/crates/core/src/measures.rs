//! Pushforward measures `Φ_*(g dx)` and the density of their line-fiber convolution.
//!
//! The fiber `{(u + a′, u) : 2a′·u = a₃ − |a′|²}` is the level set of
//! `(u, v) ↦ (v − u, |v|² − |u|²)`, so the density computed here is that of the
//! difference `Φ(v) − Φ(u)` with `v ~ g₁`, `u ~ g₂`, i.e. of `μ¹ ∗ μ̌²`. Its Fourier
//! transform is `Eg₁(ξ)·Eg₂(−ξ)`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::extension::{extend, ExtendOptions, FrequencySet};
use crate::funcrep::{Evaluator, SampledFunction};
use crate::grid::Rect;
use crate::par;
use crate::quadrature::GaussLegendre;

/// `Φ_*(g dx)`; its Fourier transform is `extend(g, ·)`.
#[derive(Debug, Clone)]
pub struct PushforwardMeasure {
    pub base: SampledFunction,
}

impl PushforwardMeasure {
    pub fn mass(&self) -> Complex64 {
        self.base.integrate()
    }
}

/// Axis-aligned box in `R³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Box3 {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Box3 {
    pub fn extent(&self) -> [f64; 3] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }
    pub fn contains(&self, a: &[f64; 3]) -> bool {
        (0..3).all(|k| a[k] >= self.lo[k] && a[k] <= self.hi[k])
    }
}

fn sq_range(a: f64, b: f64) -> (f64, f64) {
    let hi = (a * a).max(b * b);
    let lo = if a <= 0.0 && b >= 0.0 { 0.0 } else { (a * a).min(b * b) };
    (lo, hi)
}

/// Exact bounding box of `{Φ(v) − Φ(u) : v ∈ U₁, u ∈ U₂}`.
pub fn support_box(u1: &Rect, u2: &Rect) -> Box3 {
    let (vx, vy) = (sq_range(u1.x0, u1.x1()), sq_range(u1.y0, u1.y1()));
    let (ux, uy) = (sq_range(u2.x0, u2.x1()), sq_range(u2.y0, u2.y1()));
    Box3 {
        lo: [u1.x0 - u2.x1(), u1.y0 - u2.y1(), vx.0 + vy.0 - ux.1 - uy.1],
        hi: [u1.x1() - u2.x0, u1.y1() - u2.y0, vx.1 + vy.1 - ux.0 - uy.0],
    }
}

/// Density sampled at the cell centers of a uniform grid over `bbox`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvolutionDensity {
    #[serde(rename = "box")]
    pub bbox: Box3,
    pub counts: [usize; 3],
    pub spacing: [f64; 3],
    pub nu: f64,
    #[serde(skip)]
    pub values: Vec<Complex64>,
}

impl ConvolutionDensity {
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.bbox.lo[0] + (i as f64 + 0.5) * self.spacing[0],
            self.bbox.lo[1] + (j as f64 + 0.5) * self.spacing[1],
            self.bbox.lo[2] + (k as f64 + 0.5) * self.spacing[2],
        ]
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.counts[1] + j) * self.counts[2] + k
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.values[self.idx(i, j, k)]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Midpoint-rule total integral.
    pub fn mass(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.cell_volume()
    }

    /// Midpoint-rule `∫ D(a) e^{−ia·ξ} da`.
    pub fn fourier(&self, xi: &[f64; 3]) -> Complex64 {
        let [n0, n1, n2] = self.counts;
        // separable phase: e^{−ia·ξ} = Π_k e^{−i a_k ξ_k}
        let e = |k: usize, n: usize| -> Vec<Complex64> {
            (0..n)
                .map(|i| Complex64::from_polar(1.0, -(self.bbox.lo[k] + (i as f64 + 0.5) * self.spacing[k]) * xi[k]))
                .collect()
        };
        let (e0, e1, e2) = (e(0, n0), e(1, n1), e(2, n2));
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n0 {
            let mut si = Complex64::new(0.0, 0.0);
            for j in 0..n1 {
                let row = &self.values[self.idx(i, j, 0)..self.idx(i, j, 0) + n2];
                let sj: Complex64 = row.iter().zip(&e2).map(|(v, w)| v * w).sum();
                si += sj * e1[j];
            }
            s += si * e0[i];
        }
        s * self.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// JSON header describing the grid.
    pub fn header_json(&self) -> String {
        serde_json::to_string(self).expect("density header serializes")
    }

    /// CSV rows `a1, a2, a3, value, value_im` after a schema line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# schema=1")?;
        writeln!(w, "a1,a2,a3,value,value_im")?;
        for i in 0..self.counts[0] {
            for j in 0..self.counts[1] {
                for k in 0..self.counts[2] {
                    let a = self.point(i, j, k);
                    let v = self.value(i, j, k);
                    writeln!(w, "{},{},{},{},{}", a[0], a[1], a[2], v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Sorted distinct cell edges of a sampled function, per axis.
fn cell_lines(f: &SampledFunction) -> (Vec<f64>, Vec<f64>) {
    let mut xs: Vec<f64> = f.cells.iter().flat_map(|c| [c.x0, c.x1()]).collect();
    let mut ys: Vec<f64> = f.cells.iter().flat_map(|c| [c.y0, c.y1()]).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    }
    (xs, ys)
}

/// Line-integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberOptions {
    /// Gauss nodes on a fiber segment without interior breakpoints.
    pub nodes_unsplit: usize,
    /// Gauss nodes per piece between breakpoints.
    pub nodes_per_piece: usize,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self { nodes_unsplit: 64, nodes_per_piece: 8 }
    }
}

struct FiberIntegrator<'a> {
    e1: Evaluator<'a>,
    e2: Evaluator<'a>,
    r1: Rect,
    r2: Rect,
    lines1: (Vec<f64>, Vec<f64>),
    lines2: (Vec<f64>, Vec<f64>),
    gl_unsplit: GaussLegendre,
    gl_piece: GaussLegendre,
}

impl FiberIntegrator<'_> {
    /// `(1/(2|a′|)) ∫ g₁(u + a′) g₂(u) dτ` over the fiber of `a`.
    fn density(&self, a: &[f64; 3]) -> Complex64 {
        let ap = [a[0], a[1]];
        let r = (ap[0] * ap[0] + ap[1] * ap[1]).sqrt();
        let n = [ap[0] / r, ap[1] / r];
        let e = [-n[1], n[0]];
        let sigma = (a[2] - r * r) / (2.0 * r);
        let shifted = Rect::new(self.r1.x0 - ap[0], self.r1.y0 - ap[1], self.r1.w, self.r1.h);
        let Some(box2) = self.r2.intersect(&shifted) else {
            return Complex64::new(0.0, 0.0);
        };
        let base = [sigma * n[0], sigma * n[1]];
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for (k, (lo, hi)) in [(box2.x0, box2.x1()), (box2.y0, box2.y1())].into_iter().enumerate() {
            if e[k].abs() < 1e-15 {
                if base[k] < lo || base[k] > hi {
                    return Complex64::new(0.0, 0.0);
                }
                continue;
            }
            let (a0, a1) = ((lo - base[k]) / e[k], (hi - base[k]) / e[k]);
            t0 = t0.max(a0.min(a1));
            t1 = t1.min(a0.max(a1));
        }
        if t1 <= t0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut cuts = vec![t0, t1];
        let mut add = |lines: &[f64], k: usize, shift: f64| {
            if e[k].abs() < 1e-15 {
                return;
            }
            for &c in lines {
                let t = (c - shift - base[k]) / e[k];
                if t > t0 && t < t1 {
                    cuts.push(t);
                }
            }
        };
        add(&self.lines1.0, 0, ap[0]);
        add(&self.lines1.1, 1, ap[1]);
        add(&self.lines2.0, 0, 0.0);
        add(&self.lines2.1, 1, 0.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        let gl = if cuts.len() == 2 { &self.gl_unsplit } else { &self.gl_piece };
        let mut s = Complex64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
                let tau = lo + (hi - lo) * t;
                let u = [base[0] + tau * e[0], base[1] + tau * e[1]];
                let v1 = self.e1.eval([u[0] + ap[0], u[1] + ap[1]]);
                if v1 == Complex64::new(0.0, 0.0) {
                    continue;
                }
                s += v1 * self.e2.eval(u) * (wt * (hi - lo));
            }
        }
        s / (2.0 * r)
    }
}

/// Density of the difference convolution on a `counts` grid over `bbox`.
pub fn convolve_pushforwards(
    g1: &SampledFunction,
    g2: &SampledFunction,
    bbox: Box3,
    counts: [usize; 3],
    nu: f64,
    opts: FiberOptions,
) -> Result<ConvolutionDensity> {
    if counts.iter().any(|&c| c == 0) {
        return invalid("density grid needs at least one point per axis");
    }
    let spacing = [
        (bbox.hi[0] - bbox.lo[0]) / counts[0] as f64,
        (bbox.hi[1] - bbox.lo[1]) / counts[1] as f64,
        (bbox.hi[2] - bbox.lo[2]) / counts[2] as f64,
    ];
    let mut dens = ConvolutionDensity { bbox, counts, spacing, nu, values: Vec::new() };
    // the fiber parameterization needs |a′| bounded below
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            let a = dens.point(i, j, 0);
            let r = a[0].hypot(a[1]);
            if r < 0.5 * nu {
                return Err(Error::DegenerateFiber { norm: r, threshold: 0.5 * nu });
            }
        }
    }
    let (Some(r1), Some(r2)) = (g1.bounding_rect(), g2.bounding_rect()) else {
        return invalid("empty input function");
    };
    let fi = FiberIntegrator {
        e1: g1.evaluator(),
        e2: g2.evaluator(),
        r1,
        r2,
        lines1: cell_lines(g1),
        lines2: cell_lines(g2),
        gl_unsplit: GaussLegendre::new(opts.nodes_unsplit),
        gl_piece: GaussLegendre::new(opts.nodes_per_piece),
    };
    let n = counts[0] * counts[1] * counts[2];
    let d = &dens;
    let values = par::map_range(n, |idx| {
        let k = idx % counts[2];
        let j = (idx / counts[2]) % counts[1];
        let i = idx / (counts[1] * counts[2]);
        fi.density(&d.point(i, j, k))
    });
    dens.values = values;
    Ok(dens)
}

/// Comparison of the density's transform with `Eg₁(ξ)·Eg₂(−ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// `‖D̂ − Eg₁·Eg₂(−·)‖ / ‖Eg₁·Eg₂(−·)‖` in `ℓ²` over the test frequencies.
    pub relative_l2: f64,
    pub max_abs_error: f64,
    pub points: usize,
}

pub fn fourier_oracle(
    density: &ConvolutionDensity,
    g1: &SampledFunction,
    g2: &SampledFunction,
    set: &FrequencySet,
    opts: &ExtendOptions,
) -> Result<OracleReport> {
    let e1 = extend(g1, set, opts)?;
    let neg = set.map_points(|x| [-x[0], -x[1], -x[2]]);
    let e2 = extend(g2, &neg, opts)?;
    let got: Vec<Complex64> = par::map_slice(&set.points, |xi| density.fourier(xi));
    let mut num = 0.0;
    let mut den = 0.0;
    let mut worst: f64 = 0.0;
    for ((a, b), c) in e1.values.iter().zip(&e2.values).zip(&got) {
        let want = a * b;
        num += (c - want).norm_sqr();
        den += want.norm_sqr();
        worst = worst.max((c - want).norm());
    }
    Ok(OracleReport { relative_l2: (num / den).sqrt(), max_abs_error: worst, points: set.len() })
}

/// Largest finite-difference derivatives of a density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeProbe {
    pub order: usize,
    /// `max |∂^m_k D|` per axis over interior grid points.
    pub max_per_axis: [f64; 3],
    pub max_derivative: f64,
    pub max_density: f64,
    /// `(max|∂^m D| / max|D|)^{1/m}`: the inverse length scale of the density.
    pub fitted_scale: f64,
}

/// Central differences of order `m ∈ {0, 1, 2}`; requires `h ≤ ν 2^{−s₂}/8` on every axis.
pub fn derivative_scale_probe(density: &ConvolutionDensity, m: usize, s2: u32) -> Result<DerivativeProbe> {
    if m > 2 {
        return invalid("derivative order must be 0, 1 or 2");
    }
    let hmax = density.nu * (-(s2 as f64)).exp2() / 8.0;
    if density.spacing.iter().any(|&h| h > hmax) {
        return Err(Error::Precondition(format!(
            "grid spacing {:?} coarser than ν·2^-s₂/8 = {hmax:.3e}",
            density.spacing
        )));
    }
    let max_density = density.max_abs();
    if m == 0 {
        return Ok(DerivativeProbe {
            order: 0,
            max_per_axis: [max_density; 3],
            max_derivative: max_density,
            max_density,
            fitted_scale: 1.0,
        });
    }
    let c = density.counts;
    let mut per = [0.0f64; 3];
    for i in 1..c[0].saturating_sub(1) {
        for j in 1..c[1].saturating_sub(1) {
            for k in 1..c[2].saturating_sub(1) {
                let v = density.value(i, j, k);
                let nb = [
                    (density.value(i - 1, j, k), density.value(i + 1, j, k)),
                    (density.value(i, j - 1, k), density.value(i, j + 1, k)),
                    (density.value(i, j, k - 1), density.value(i, j, k + 1)),
                ];
                for (ax, (lo, hi)) in nb.iter().enumerate() {
                    let h = density.spacing[ax];
                    let d = if m == 1 { (hi - lo).norm() / (2.0 * h) } else { (hi - v * 2.0 + lo).norm() / (h * h) };
                    per[ax] = per[ax].max(d);
                }
            }
        }
    }
    let max_derivative = per.iter().cloned().fold(0.0, f64::max);
    let fitted_scale = if max_density > 0.0 { (max_derivative / max_density).powf(1.0 / m as f64) } else { 0.0 };
    Ok(DerivativeProbe { order: m, max_per_axis: per, max_derivative, max_density, fitted_scale })
}

/// Density at a single point (used for spot checks and the symmetry property).
pub fn density_at(g1: &SampledFunction, g2: &SampledFunction, a: [f64; 3], opts: FiberOptions) -> Complex64 {
    let (Some(r1), Some(r2)) = (g1.bounding_rect(), g2.bounding_rect()) else {
        return Complex64::new(0.0, 0.0);
    };
    if a[0].hypot(a[1]) == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let fi = FiberIntegrator {
        e1: g1.evaluator(),
        e2: g2.evaluator(),
        r1,
        r2,
        lines1: cell_lines(g1),
        lines2: cell_lines(g2),
        gl_unsplit: GaussLegendre::new(opts.nodes_unsplit),
        gl_piece: GaussLegendre::new(opts.nodes_per_piece),
    };
    fi.density(&a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::QuadratureRule;
    use crate::grid::{build_grid, BaseDomain};

    fn square_fn(x0: f64, y0: f64, side: f64, f: impl Fn([f64; 2]) -> f64) -> SampledFunction {
        let d = BaseDomain::new([x0, y0], side).unwrap();
        let g = build_grid(&d, 0).unwrap();
        SampledFunction::sample_real(f, &g, &QuadratureRule::new(6, 1)).unwrap()
    }

    #[test]
    fn degenerate_squares_box_is_a_point() {
        let b = support_box(&Rect::new(0.1, 0.2, 0.0, 0.0), &Rect::new(-0.3, 0.05, 0.0, 0.0));
        let p1 = crate::extension::phi([0.1, 0.2]);
        let p2 = crate::extension::phi([-0.3, 0.05]);
        for k in 0..3 {
            assert!((b.lo[k] - (p1[k] - p2[k])).abs() < 1e-15 && (b.hi[k] - b.lo[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn box_contains_dense_samples_and_grows() {
        let u1 = Rect::new(0.25, -0.125, 0.125, 0.125);
        let u2 = Rect::new(-0.375, 0.125, 0.125, 0.125);
        let b = support_box(&u1, &u2);
        let mut lo3 = f64::INFINITY;
        let mut hi3 = f64::NEG_INFINITY;
        let n = 12;
        for a in 0..=n {
            for bb in 0..=n {
                for c in 0..=n {
                    for d in 0..=n {
                        let v = [u1.x0 + u1.w * a as f64 / n as f64, u1.y0 + u1.h * bb as f64 / n as f64];
                        let u = [u2.x0 + u2.w * c as f64 / n as f64, u2.y0 + u2.h * d as f64 / n as f64];
                        let z = v[0] * v[0] + v[1] * v[1] - u[0] * u[0] - u[1] * u[1];
                        lo3 = lo3.min(z);
                        hi3 = hi3.max(z);
                    }
                }
            }
        }
        assert!(b.lo[2] <= lo3 + 1e-15 && b.hi[2] >= hi3 - 1e-15);
        assert!(b.hi[2] - b.lo[2] <= hi3 - lo3 + 2.0 * 0.125f64.powi(2) / 4.0);
        let bigger = support_box(&u1.dilate(1.5), &u2.dilate(1.5));
        for k in 0..3 {
            assert!(bigger.lo[k] <= b.lo[k] && bigger.hi[k] >= b.hi[k]);
        }
    }

    #[test]
    fn outside_box_is_zero_and_small_shift_errors() {
        let g1 = square_fn(0.25, 0.0, 0.125, |_| 1.0);
        let g2 = square_fn(-0.25, 0.0, 0.125, |_| 1.0);
        let b = support_box(&g1.bounding_rect().unwrap(), &g2.bounding_rect().unwrap());
        let outside = [b.hi[0] + 0.05, 0.0, 0.0];
        assert_eq!(density_at(&g1, &g2, outside, FiberOptions::default()), Complex64::new(0.0, 0.0));
        let bad = Box3 { lo: [-0.01, -0.01, 0.0], hi: [0.01, 0.01, 0.1] };
        assert!(matches!(
            convolve_pushforwards(&g1, &g2, bad, [2, 2, 2], 0.125, FiberOptions::default()),
            Err(Error::DegenerateFiber { .. })
        ));
    }

    #[test]
    fn swapping_inputs_reflects_density() {
        let g1 = square_fn(0.25, 0.0, 0.125, |p| 1.0 + p[0]);
        let g2 = square_fn(-0.25, 0.125, 0.125, |p| 2.0 - p[1]);
        let o = FiberOptions::default();
        for a in [[0.5, -0.1, 0.05], [0.52, -0.13, 0.1], [0.45, -0.06, 0.0]] {
            let x = density_at(&g1, &g2, a, o);
            let y = density_at(&g2, &g1, [-a[0], -a[1], -a[2]], o);
            assert!((x - y).norm() < 1e-12, "{x} {y}");
        }
    }
}
