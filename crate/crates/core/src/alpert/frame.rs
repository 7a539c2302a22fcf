//! The truncated frame operator `S_η` in the plain Alpert coordinates.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::basis::MotherBasis;
use super::smooth::{axis_nodes, split_intervals, MeshSpec, SmoothBasis};
use crate::error::{invalid, Error, Result};
use crate::funcrep::SampledFunction;
use crate::grid::{BaseDomain, DyadicSquare};

/// Limits applied when building a frame operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameLimits {
    pub max_level: u32,
    pub eta_max: f64,
    pub max_condition: f64,
}

impl Default for FrameLimits {
    fn default() -> Self {
        Self { max_level: 4, eta_max: 0.1, max_condition: 1e6 }
    }
}

/// Truncated `S_η`: column `(I, a)` holds the plain coefficients `⟨h^{a,η}_I, h^b_J⟩`
/// of the smooth wavelet over all wavelets `(J, b)` with levels `≤ s_max`.
pub struct FrameOperator {
    pub smooth: Arc<SmoothBasis>,
    pub domain: BaseDomain,
    pub s_max: u32,
    pub matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub condition: f64,
    /// `‖S_η − I‖₂` on the truncated space.
    pub deviation: f64,
}

impl std::fmt::Debug for FrameOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameOperator")
            .field("s_max", &self.s_max)
            .field("size", &self.matrix.nrows())
            .field("condition", &self.condition)
            .field("deviation", &self.deviation)
            .finish()
    }
}

fn level_offset(level: u32) -> usize {
    ((1usize << (2 * level)) - 1) / 3
}

/// Plain wavelet values at `x` for the square of level `s` containing it.
fn plain_at(mb: &MotherBasis, domain: &BaseDomain, s: u32, x: [f64; 2], out: &mut [f64]) -> Option<DyadicSquare> {
    let l = domain.side * (-(s as f64)).exp2();
    let i = ((x[0] - domain.origin[0]) / l).floor() as i64;
    let j = ((x[1] - domain.origin[1]) / l).floor() as i64;
    let k = 1i64 << s;
    if !(0..k).contains(&i) || !(0..k).contains(&j) {
        return None;
    }
    let q = DyadicSquare::new(domain, s, [i, j]);
    let p = q.lower_left();
    mb.eval_all([(x[0] - p[0]) / l, (x[1] - p[1]) / l], out);
    for v in out.iter_mut() {
        *v /= l;
    }
    Some(q)
}

impl FrameOperator {
    pub fn build(smooth: Arc<SmoothBasis>, domain: &BaseDomain, s_max: u32, spec: MeshSpec, limits: FrameLimits) -> Result<Self> {
        if s_max > limits.max_level {
            return Err(Error::Capacity(format!("frame truncation {s_max} exceeds the configured maximum {}", limits.max_level)));
        }
        if smooth.eta() > limits.eta_max {
            return invalid(format!("η = {} above η_max = {}", smooth.eta(), limits.eta_max));
        }
        let d = smooth.dim();
        let n = level_offset(s_max + 1) * d;
        let mb = smooth.basis.clone();
        let mut matrix = DMatrix::<f64>::zeros(n, n);
        let urect = domain.rect();
        for t in 0..=s_max {
            // Mother mesh of level-t squares, split at the child lines of level s_max.
            let step = (-((s_max + 1 - t) as f64)).exp2();
            let cuts: Vec<f64> = (-4..=((1i64 << (s_max + 1 - t)) + 4)).map(|k| k as f64 * step).collect();
            let iv = split_intervals(&spec.intervals(smooth.eta()), &cuts);
            let (nodes, weights) = axis_nodes(&iv, spec.order);
            let vals = smooth.eval_grid(&nodes, &nodes);
            let squares = DyadicSquare::root(domain).descendants(t);
            let blocks: Vec<(usize, Vec<(usize, Vec<f64>)>)> = crate::par::map_slice(&squares, |q| {
                let col0 = (level_offset(t) + (q.index[0] as usize) * (1 << t) + q.index[1] as usize) * d;
                let p = q.lower_left();
                let l = q.side();
                let mut acc: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
                let mut pv = vec![0.0; d];
                let nn = nodes.len();
                for i in 0..nn {
                    for j in 0..nn {
                        let x = [p[0] + l * nodes[i], p[1] + l * nodes[j]];
                        if !urect.contains(x) {
                            continue;
                        }
                        let w = weights[i] * weights[j] * l; // ℓ² du · ℓ⁻¹ normalization
                        for s in 0..=s_max {
                            let Some(jq) = plain_at(&mb, domain, s, x, &mut pv) else { continue };
                            let row0 = (level_offset(s) + (jq.index[0] as usize) * (1 << s) + jq.index[1] as usize) * d;
                            let e = acc.entry(row0).or_insert_with(|| vec![0.0; d * d]);
                            for a in 0..d {
                                let h = w * vals[a][i * nn + j];
                                if h == 0.0 {
                                    continue;
                                }
                                for b in 0..d {
                                    e[b * d + a] += h * pv[b];
                                }
                            }
                        }
                    }
                }
                (col0, acc.into_iter().collect())
            });
            for (col0, rows) in blocks {
                for (row0, e) in rows {
                    for b in 0..d {
                        for a in 0..d {
                            matrix[(row0 + b, col0 + a)] = e[b * d + a];
                        }
                    }
                }
            }
        }
        let sv = matrix.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > limits.max_condition {
            return Err(Error::IllConditioned(condition));
        }
        let dev = (&matrix - DMatrix::<f64>::identity(n, n)).svd(false, false).singular_values;
        let deviation = dev.iter().cloned().fold(0.0, f64::max);
        let lu = matrix.clone().lu();
        Ok(Self { smooth, domain: domain.clone(), s_max, matrix, lu, condition, deviation })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Coordinate offset of square `q`, if it is inside the truncation.
    pub fn offset(&self, q: &DyadicSquare) -> Option<usize> {
        if q.level > self.s_max || q.origin != self.domain.origin || q.root_side != self.domain.side {
            return None;
        }
        let k = 1i64 << q.level;
        if !(0..k).contains(&q.index[0]) || !(0..k).contains(&q.index[1]) {
            return None;
        }
        Some((level_offset(q.level) + (q.index[0] as usize) * (1 << q.level) + q.index[1] as usize) * self.smooth.dim())
    }

    /// All squares of the truncation in coordinate order.
    pub fn squares(&self) -> Vec<DyadicSquare> {
        (0..=self.s_max).flat_map(|t| DyadicSquare::root(&self.domain).descendants(t)).collect()
    }

    /// Plain coefficients `⟨f, h^b_J⟩` of a sampled function over the truncation.
    pub fn analyze(&self, f: &SampledFunction) -> Vec<Complex64> {
        let d = self.smooth.dim();
        let mut c = vec![Complex64::new(0.0, 0.0); self.size()];
        let mut pv = vec![0.0; d];
        for ((x, w), v) in f.nodes().zip(&f.values) {
            if *v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for s in 0..=self.s_max {
                if let Some(q) = plain_at(&self.smooth.basis, &self.domain, s, x, &mut pv) {
                    let o = self.offset(&q).unwrap();
                    for b in 0..d {
                        c[o + b] += v * (w * pv[b]);
                    }
                }
            }
        }
        c
    }

    /// `S_η⁻¹ c`.
    pub fn solve(&self, c: &[Complex64]) -> Result<Vec<Complex64>> {
        let re = DVector::from_iterator(c.len(), c.iter().map(|z| z.re));
        let im = DVector::from_iterator(c.len(), c.iter().map(|z| z.im));
        let sr = self.lu.solve(&re).ok_or(Error::IllConditioned(self.condition))?;
        let si = self.lu.solve(&im).ok_or(Error::IllConditioned(self.condition))?;
        Ok(sr.iter().zip(si.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect())
    }

    /// `S_η c`.
    pub fn apply(&self, c: &[Complex64]) -> Vec<Complex64> {
        let n = self.size();
        (0..n)
            .map(|r| (0..n).map(|k| c[k] * self.matrix[(r, k)]).sum())
            .collect()
    }

    /// `‖f − Σ_I Δ^η_I f‖₂ / ‖f‖₂` for `f = Σ c h` in the truncated span, where
    /// `Σ_I Δ^η_I f = Σ_{I,a} (S_η⁻¹c)_{I,a} h^{a,η}_I` is expressed in plain coordinates.
    pub fn reconstruction_error(&self, c: &[Complex64]) -> Result<f64> {
        let d = self.solve(c)?;
        let back = self.apply(&d);
        let num: f64 = back.iter().zip(c).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        Ok((num / den).sqrt())
    }

    /// `‖(Σ_I |Δ^η_I f|²)^{1/2}‖₂ / ‖f‖₂` for `f = Σ c h`, using the Gram matrix of the
    /// smooth mother functions (the `L²` norm is scale invariant under `ℓ⁻¹` normalization).
    pub fn square_function_ratio(&self, c: &[Complex64], spec: MeshSpec) -> Result<f64> {
        let g = smooth_gram(&self.smooth, spec);
        let dcoef = self.solve(c)?;
        let d = self.smooth.dim();
        let mut num = 0.0;
        for blk in dcoef.chunks(d) {
            for a in 0..d {
                for b in 0..d {
                    num += (blk[a].conj() * blk[b]).re * g[(a, b)];
                }
            }
        }
        let den: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        Ok((num / den).sqrt())
    }
}

/// Gram matrix of the smooth mother functions on a table mesh.
pub fn smooth_gram(sb: &SmoothBasis, spec: MeshSpec) -> DMatrix<f64> {
    let t = sb.table(spec);
    let n = t.n();
    let d = sb.dim();
    DMatrix::from_fn(d, d, |a, b| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += t.weights[i] * t.weights[j] * t.values[a][i * n + j] * t.values[b][i * n + j];
            }
        }
        s
    })
}

pub fn build_frame_operator(smooth: Arc<SmoothBasis>, domain: &BaseDomain, s_max: u32) -> Result<FrameOperator> {
    FrameOperator::build(smooth, domain, s_max, MeshSpec::STANDARD, FrameLimits::default())
}
