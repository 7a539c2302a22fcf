//! Complex functions on the base domain as per-cell tensor Gauss–Legendre samples.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::extension::phi;
use crate::grid::{DyadicSquare, Grid, Rect};
use crate::quadrature::GaussLegendre;

/// Tensor Gauss–Legendre rule of order `g` per axis; `refinement` is the number of
/// cells per square side used when sampling on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub order: usize,
    pub refinement: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(order: usize, refinement: usize) -> Self {
        let gl = GaussLegendre::new(order);
        Self { order, refinement: refinement.max(1), nodes: gl.nodes, weights: gl.weights }
    }

    pub fn gauss(&self) -> GaussLegendre {
        GaussLegendre { nodes: self.nodes.clone(), weights: self.weights.clone() }
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::new(8, 1)
    }
}

/// Node values on disjoint cells. Within a cell the node `(a, b)` sits at
/// `(x0 + t_a w, y0 + t_b h)` and is stored at offset `a·g + b`.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub cells: Vec<Rect>,
    pub rule: Arc<QuadratureRule>,
    pub values: Vec<Complex64>,
}

impl SampledFunction {
    fn g2(&self) -> usize {
        self.rule.order * self.rule.order
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    /// Sample `f` at the nodes of every square of `grid`, split into `m × m` cells.
    pub fn sample<F>(f: F, grid: &Grid, rule: &QuadratureRule) -> Result<Self>
    where
        F: Fn([f64; 2]) -> Complex64,
    {
        let cells = split_cells(grid.squares.iter().map(|q| q.rect()), rule.refinement);
        Self::sample_cells(f, cells, Arc::new(rule.clone()))
    }

    pub fn sample_cells<F>(f: F, cells: Vec<Rect>, rule: Arc<QuadratureRule>) -> Result<Self>
    where
        F: Fn([f64; 2]) -> Complex64,
    {
        let g = rule.order;
        let mut values = Vec::with_capacity(cells.len() * g * g);
        for c in &cells {
            for &ta in &rule.nodes {
                for &tb in &rule.nodes {
                    let p = [c.x0 + ta * c.w, c.y0 + tb * c.h];
                    let v = f(p);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::NonFinite { x: p[0], y: p[1], value: format!("{v}") });
                    }
                    values.push(v);
                }
            }
        }
        Ok(Self { cells, rule, values })
    }

    /// Real-valued convenience wrapper around [`SampledFunction::sample`].
    pub fn sample_real<F>(f: F, grid: &Grid, rule: &QuadratureRule) -> Result<Self>
    where
        F: Fn([f64; 2]) -> f64,
    {
        Self::sample(|p| Complex64::new(f(p), 0.0), grid, rule)
    }

    /// Piecewise-constant function with one value per grid square (exact at every node).
    pub fn piecewise_constant(grid: &Grid, rule: &QuadratureRule, vals: &[Complex64]) -> Result<Self> {
        if vals.len() != grid.len() {
            return invalid("one value per square required");
        }
        let m = rule.refinement;
        let g2 = rule.order * rule.order;
        let cells = split_cells(grid.squares.iter().map(|q| q.rect()), m);
        let mut values = Vec::with_capacity(cells.len() * g2);
        for v in vals {
            for _ in 0..m * m * g2 {
                values.push(*v);
            }
        }
        Ok(Self { cells, rule: Arc::new(rule.clone()), values })
    }

    pub fn zeros_like(&self) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); self.values.len()], ..self.clone() }
    }

    /// `(x, y, weight)` of every node in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.cells.iter().flat_map(move |c| {
            let r = &self.rule;
            r.nodes.iter().zip(&r.weights).flat_map(move |(&ta, &wa)| {
                r.nodes
                    .iter()
                    .zip(&r.weights)
                    .map(move |(&tb, &wb)| ([c.x0 + ta * c.w, c.y0 + tb * c.h], wa * wb * c.area()))
            })
        })
    }

    pub fn area(&self) -> f64 {
        self.cells.iter().map(Rect::area).sum()
    }

    pub fn bounding_rect(&self) -> Option<Rect> {
        let mut it = self.cells.iter();
        let first = *it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x0, first.y0, first.x1(), first.y1());
        for c in it {
            x0 = x0.min(c.x0);
            y0 = y0.min(c.y0);
            x1 = x1.max(c.x1());
            y1 = y1.max(c.y1());
        }
        Some(Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// Largest `|x|` over cells carrying a nonzero value.
    pub fn support_radius(&self) -> f64 {
        let g2 = self.g2();
        self.cells
            .iter()
            .enumerate()
            .filter(|(k, _)| self.values[k * g2..(k + 1) * g2].iter().any(|v| v.norm_sqr() > 0.0))
            .map(|(_, c)| c.max_radius())
            .fold(0.0, f64::max)
    }

    /// Zero every cell outside `k`. Cells straddling the boundary of `k` are an error.
    pub fn restrict_rect(&self, k: &Rect) -> Result<Self> {
        let tol = 1e-12 * k.w.max(k.h);
        let g2 = self.g2();
        let mut out = self.clone();
        for (i, c) in self.cells.iter().enumerate() {
            if k.contains_rect(c, tol) {
                continue;
            }
            if k.interior_disjoint(c, tol) {
                out.values[i * g2..(i + 1) * g2].fill(Complex64::new(0.0, 0.0));
            } else {
                return invalid(format!("cell {c:?} straddles the restriction square {k:?}"));
            }
        }
        Ok(out)
    }

    pub fn restrict(&self, k: &DyadicSquare) -> Result<Self> {
        self.restrict_rect(&k.rect())
    }

    /// Drop cells that are identically zero.
    pub fn compact(&self) -> Self {
        let g2 = self.g2();
        let mut cells = Vec::new();
        let mut values = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            let v = &self.values[i * g2..(i + 1) * g2];
            if v.iter().any(|z| z.norm_sqr() > 0.0) {
                cells.push(*c);
                values.extend_from_slice(v);
            }
        }
        Self { cells, rule: self.rule.clone(), values }
    }

    /// Discrete `L^p` norm; `p = ∞` is the maximum over nodes.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return invalid(format!("L^p norm needs p ≥ 1, got {p}"));
        }
        if p.is_infinite() {
            return Ok(self.max_abs());
        }
        let s: f64 = self.nodes().zip(&self.values).map(|((_, w), v)| w * v.norm().powf(p)).sum();
        Ok(s.powf(1.0 / p))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn integrate(&self) -> Complex64 {
        self.nodes().zip(&self.values).map(|((_, w), v)| v * w).sum()
    }

    /// `∫ f(x) k(x) dx` for a weight function `k`.
    pub fn integrate_against<K: Fn([f64; 2]) -> Complex64>(&self, k: K) -> Complex64 {
        self.nodes().zip(&self.values).map(|((p, w), v)| v * k(p) * w).sum()
    }

    /// Multiply by `e^{i⟨z, Φ(x)⟩}`. The caller refines beforehand when `|z|` is large
    /// relative to the cell size, since the product is only known at the nodes.
    pub fn modulate(&self, z: [f64; 3]) -> Self {
        let values = self
            .nodes()
            .zip(&self.values)
            .map(|((p, _), v)| {
                let q = phi(p);
                v * Complex64::from_polar(1.0, z[0] * q[0] + z[1] * q[1] + z[2] * q[2])
            })
            .collect();
        Self { values, ..self.clone() }
    }

    pub fn map_values<F: Fn([f64; 2], Complex64) -> Complex64>(&self, f: F) -> Self {
        let values = self.nodes().zip(&self.values).map(|((p, _), v)| f(p, *v)).collect();
        Self { values, ..self.clone() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Pointwise sum; both functions must share cells and rule.
    pub fn add(&self, o: &Self) -> Result<Self> {
        if self.cells != o.cells || self.rule != o.rule {
            return invalid("sum of sampled functions on different meshes");
        }
        let values = self.values.iter().zip(&o.values).map(|(a, b)| a + b).collect();
        Ok(Self { values, ..self.clone() })
    }

    /// Split every cell into `m × m` subcells with values interpolated from the
    /// cell's nodes (exact for polynomials of degree < g per axis).
    pub fn refined(&self, m: usize) -> Self {
        if m <= 1 {
            return self.clone();
        }
        let g = self.rule.order;
        let gl = self.rule.gauss();
        let l = gl.refinement_matrix(&gl, m);
        let mut cells = Vec::with_capacity(self.cells.len() * m * m);
        let mut values = Vec::with_capacity(self.values.len() * m * m);
        let mg = m * g;
        let mut tmp = vec![Complex64::new(0.0, 0.0); mg * g];
        for (k, c) in self.cells.iter().enumerate() {
            let f = &self.values[k * g * g..(k + 1) * g * g];
            // tmp[A][b] = Σ_a L[A][a] f[a][b]
            for ra in 0..mg {
                for b in 0..g {
                    let mut s = Complex64::new(0.0, 0.0);
                    for a in 0..g {
                        s += f[a * g + b] * l[ra * g + a];
                    }
                    tmp[ra * g + b] = s;
                }
            }
            let (w, h) = (c.w / m as f64, c.h / m as f64);
            for ci in 0..m {
                for cj in 0..m {
                    cells.push(Rect::new(c.x0 + ci as f64 * w, c.y0 + cj as f64 * h, w, h));
                    for a in 0..g {
                        let ra = ci * g + a;
                        for b in 0..g {
                            let rb = cj * g + b;
                            let mut s = Complex64::new(0.0, 0.0);
                            for bb in 0..g {
                                s += tmp[ra * g + bb] * l[rb * g + bb];
                            }
                            values.push(s);
                        }
                    }
                }
            }
        }
        let mut rule = (*self.rule).clone();
        rule.refinement *= m;
        Self { cells, rule: Arc::new(rule), values }
    }

    /// `u ↦ f(ȳ + ρu)` on `[−1/2, 1/2)²`, built from the cells of `f` inside
    /// `ȳ + ρ[−1/2, 1/2)²` by the affine change of variables. Node values are reused,
    /// so the discrete `L^∞` norm over that square is preserved exactly.
    pub fn parabolic_rescale(&self, ybar: [f64; 2], rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return invalid(format!("rescaling factor ρ = {rho} outside (0, 1]"));
        }
        let s = Rect::new(ybar[0] - 0.5 * rho, ybar[1] - 0.5 * rho, rho, rho);
        let tol = 1e-12;
        let g2 = self.g2();
        let mut cells = Vec::new();
        let mut values = Vec::new();
        let mut covered = 0.0;
        for (k, c) in self.cells.iter().enumerate() {
            if s.contains_rect(c, tol) {
                cells.push(Rect::new((c.x0 - ybar[0]) / rho, (c.y0 - ybar[1]) / rho, c.w / rho, c.h / rho));
                values.extend_from_slice(&self.values[k * g2..(k + 1) * g2]);
                covered += c.area();
            } else if !s.interior_disjoint(c, tol) {
                return invalid(format!("cell {c:?} straddles the rescaling square"));
            }
        }
        if (covered - s.area()).abs() > 1e-9 * s.area() {
            return invalid("rescaling square is not covered by the sampled domain");
        }
        Ok(Self { cells, rule: self.rule.clone(), values })
    }

    /// Point evaluator with a bucket index over the cells.
    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(self)
    }
}

fn split_cells(rects: impl Iterator<Item = Rect>, m: usize) -> Vec<Rect> {
    let mut out = Vec::new();
    for r in rects {
        let (w, h) = (r.w / m as f64, r.h / m as f64);
        for i in 0..m {
            for j in 0..m {
                out.push(Rect::new(r.x0 + i as f64 * w, r.y0 + j as f64 * h, w, h));
            }
        }
    }
    out
}

/// Evaluates a sampled function off the nodes by per-cell Lagrange interpolation.
pub struct Evaluator<'a> {
    f: &'a SampledFunction,
    bary: Vec<f64>,
    gl: GaussLegendre,
    bbox: Rect,
    nb: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> Evaluator<'a> {
    fn new(f: &'a SampledFunction) -> Self {
        let gl = f.rule.gauss();
        let bary = gl.barycentric();
        let bbox = f.bounding_rect().unwrap_or(Rect::new(0.0, 0.0, 1.0, 1.0));
        let nb = ((f.cells.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let mut buckets = vec![Vec::new(); nb * nb];
        let bw = bbox.w / nb as f64;
        let bh = bbox.h / nb as f64;
        for (k, c) in f.cells.iter().enumerate() {
            let i0 = (((c.x0 - bbox.x0) / bw).floor() as isize).clamp(0, nb as isize - 1) as usize;
            let i1 = (((c.x1() - bbox.x0) / bw).ceil() as isize - 1).clamp(0, nb as isize - 1) as usize;
            let j0 = (((c.y0 - bbox.y0) / bh).floor() as isize).clamp(0, nb as isize - 1) as usize;
            let j1 = (((c.y1() - bbox.y0) / bh).ceil() as isize - 1).clamp(0, nb as isize - 1) as usize;
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[i * nb + j].push(k);
                }
            }
        }
        Self { f, bary, gl, bbox, nb, buckets }
    }

    /// Index of the cell containing `p` (half-open cells).
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let b = &self.bbox;
        if p[0] < b.x0 || p[1] < b.y0 || p[0] > b.x1() || p[1] > b.y1() {
            return None;
        }
        let i = (((p[0] - b.x0) / b.w * self.nb as f64) as usize).min(self.nb - 1);
        let j = (((p[1] - b.y0) / b.h * self.nb as f64) as usize).min(self.nb - 1);
        self.buckets[i * self.nb + j].iter().copied().find(|&k| self.f.cells[k].contains(p))
    }

    /// Interpolated value; zero outside every cell.
    pub fn eval(&self, p: [f64; 2]) -> Complex64 {
        let Some(k) = self.locate(p) else {
            return Complex64::new(0.0, 0.0);
        };
        let c = &self.f.cells[k];
        let g = self.f.rule.order;
        let la = self.gl.lagrange_at(&self.bary, (p[0] - c.x0) / c.w);
        let lb = self.gl.lagrange_at(&self.bary, (p[1] - c.y0) / c.h);
        let v = &self.f.values[k * g * g..(k + 1) * g * g];
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..g {
            let mut t = Complex64::new(0.0, 0.0);
            for b in 0..g {
                t += v[a * g + b] * lb[b];
            }
            s += t * la[a];
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, BaseDomain};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn constant_and_linear_integrals() {
        let g = build_grid(&BaseDomain::unit(), 2).unwrap();
        let f = SampledFunction::sample(|_| c(1.0), &g, &QuadratureRule::new(3, 1)).unwrap();
        assert!(f.values.iter().all(|v| *v == c(1.0)));
        assert!((f.lp_norm(1.0).unwrap() - 1.0).abs() < 1e-14);
        let f = SampledFunction::sample_real(|p| p[0], &g, &QuadratureRule::new(2, 1)).unwrap();
        assert!((f.integrate().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn norms_of_unit_constant_and_child_indicator() {
        let g = build_grid(&BaseDomain::unit(), 1).unwrap();
        let one = SampledFunction::sample(|_| c(1.0), &g, &QuadratureRule::new(4, 1)).unwrap();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((one.lp_norm(p).unwrap() - 1.0).abs() < 1e-14);
        }
        let ind = SampledFunction::sample_real(|p| if p[0] < 0.5 && p[1] < 0.5 { 1.0 } else { 0.0 }, &g, &QuadratureRule::new(4, 1))
            .unwrap();
        assert!((ind.lp_norm(2.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(one.lp_norm(0.5).is_err());
    }

    #[test]
    fn non_finite_reported_with_node() {
        let g = build_grid(&BaseDomain::unit(), 0).unwrap();
        let r = SampledFunction::sample_real(|p| 1.0 / (p[0] - p[0]), &g, &QuadratureRule::new(2, 1));
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn restriction_partition_sums_back() {
        let d = BaseDomain::unit();
        let g = build_grid(&d, 3).unwrap();
        let f = SampledFunction::sample(|p| Complex64::new(p[0].sin(), p[1] * p[0]), &g, &QuadratureRule::new(3, 1)).unwrap();
        assert_eq!(f.restrict(&d.root()).unwrap().values, f.values);
        let g1 = build_grid(&d, 1).unwrap();
        let mut acc = f.zeros_like();
        for q in &g1.squares {
            acc = acc.add(&f.restrict(q).unwrap()).unwrap();
        }
        assert_eq!(acc.values, f.values);
        // straddling is rejected
        let coarse = SampledFunction::sample(|_| c(1.0), &g1, &QuadratureRule::new(3, 1)).unwrap();
        assert!(coarse.restrict(&g.squares[0]).is_err());
    }

    #[test]
    fn restricted_l1_matches_direct_integral() {
        let d = BaseDomain::unit();
        let g = build_grid(&d, 2).unwrap();
        let rule = QuadratureRule::new(6, 1);
        let f = SampledFunction::sample_real(|p| 2.0 + (3.0 * p[0]).cos() + p[1], &g, &rule).unwrap();
        let k = DyadicSquare::new(&d, 1, [1, 0]);
        let masked = f.restrict(&k).unwrap().lp_norm(1.0).unwrap();
        let gl = GaussLegendre::new(20);
        let direct = gl.integrate(0.5, 1.0, |x| gl.integrate(0.0, 0.5, |y| (2.0 + (3.0 * x).cos() + y).abs()));
        assert!((masked - direct).abs() < 1e-12);
    }

    #[test]
    fn modulation_is_unimodular() {
        let g = build_grid(&BaseDomain::unit(), 2).unwrap();
        let f = SampledFunction::sample(|p| Complex64::new(p[0], -p[1]), &g, &QuadratureRule::new(3, 1)).unwrap();
        assert_eq!(f.modulate([0.0; 3]).values, f.values);
        let m = f.modulate([3.0, -2.0, 7.5]);
        for (a, b) in m.values.iter().zip(&f.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn refinement_is_exact_on_polynomials_and_interpolation_works() {
        let g = build_grid(&BaseDomain::unit(), 1).unwrap();
        let rule = QuadratureRule::new(4, 1);
        let poly = |p: [f64; 2]| c(p[0].powi(3) - 2.0 * p[0] * p[1] + p[1] * p[1]);
        let f = SampledFunction::sample(poly, &g, &rule).unwrap();
        let r = f.refined(3);
        let exact = SampledFunction::sample_cells(poly, r.cells.clone(), r.rule.clone()).unwrap();
        for (a, b) in r.values.iter().zip(&exact.values) {
            assert!((a - b).norm() < 1e-13);
        }
        let e = f.evaluator();
        for p in [[0.1, 0.2], [0.77, 0.31], [0.5, 0.5]] {
            assert!((e.eval(p) - poly(p)).norm() < 1e-13);
        }
        assert_eq!(e.eval([1.5, 0.5]), c(0.0));
    }

    #[test]
    fn rescale_identity_and_sup_norm() {
        let d = BaseDomain::centered(1.0).unwrap();
        let g = build_grid(&d, 2).unwrap();
        let rule = QuadratureRule::new(3, 1);
        let f = SampledFunction::sample(|p| Complex64::new(p[0], p[1] * p[1]), &g, &rule).unwrap();
        let same = f.parabolic_rescale([0.0, 0.0], 1.0).unwrap();
        assert_eq!(same.values, f.values);
        let half = f.parabolic_rescale([0.25, 0.25], 0.5).unwrap();
        assert_eq!(half.cells.len(), 4);
        let sub = f.restrict_rect(&Rect::new(0.0, 0.0, 0.5, 0.5)).unwrap();
        assert_eq!(half.max_abs(), sub.max_abs());
        assert!(f.parabolic_rescale([0.0, 0.0], 1.5).is_err());
        assert!(f.parabolic_rescale([0.1, 0.0], 0.5).is_err());
    }
}
