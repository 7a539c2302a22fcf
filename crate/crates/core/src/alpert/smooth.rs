//! Smooth Alpert wavelets `h^{a,η}_Q = h^a_Q ∗ φ_{ηℓ(Q)}`, evaluated exactly from
//! incomplete bump moments, their quadrature tables and expansions in them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::Serialize;

use super::basis::{axis_center, MotherBasis, CHILD_OFFSETS};
use super::mollifier::Mollifier;
use crate::error::{invalid, Error, Result};
use crate::extension::{dot3, eval_blocks, phi, Certificate, ExtendOptions, ExtensionField, FrequencySet, TensorBlock};
use crate::funcrep::{QuadratureRule, SampledFunction};
use crate::grid::{DyadicSquare, Rect};
use crate::quadrature::GaussLegendre;

/// Quadrature mesh of the enlarged mother square `[−ηc, 1+ηc]²`: transition bands
/// `[L − ηc, L + ηc]` around the child lines `L ∈ {0, 1/2, 1}` split into
/// `band_cells` pieces, the rest into `interior_cells` pieces per half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MeshSpec {
    pub order: usize,
    pub band_cells: usize,
    pub interior_cells: usize,
}

impl MeshSpec {
    /// For moment checks at the 1e−9 level.
    pub const FINE: MeshSpec = MeshSpec { order: 16, band_cells: 8, interior_cells: 4 };
    pub const STANDARD: MeshSpec = MeshSpec { order: 12, band_cells: 4, interior_cells: 4 };
    pub const COARSE: MeshSpec = MeshSpec { order: 8, band_cells: 2, interior_cells: 2 };

    /// Intervals of one axis, in increasing order.
    pub fn intervals(&self, eta: f64) -> Vec<(f64, f64)> {
        let w = eta * super::mollifier::BUMP_HALF_WIDTH;
        let mut out = Vec::new();
        let band = |l: f64, out: &mut Vec<(f64, f64)>| {
            let h = 2.0 * w / self.band_cells as f64;
            for i in 0..self.band_cells {
                out.push((l - w + i as f64 * h, l - w + (i + 1) as f64 * h));
            }
        };
        let interior = |a: f64, b: f64, out: &mut Vec<(f64, f64)>| {
            let h = (b - a) / self.interior_cells as f64;
            for i in 0..self.interior_cells {
                out.push((a + i as f64 * h, a + (i + 1) as f64 * h));
            }
        };
        band(0.0, &mut out);
        interior(w, 0.5 - w, &mut out);
        band(0.5, &mut out);
        interior(0.5 + w, 1.0 - w, &mut out);
        band(1.0, &mut out);
        out
    }

    /// Widest interval of the axis mesh.
    pub fn max_width(&self, eta: f64) -> f64 {
        self.intervals(eta).iter().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Same mesh with every band and interior subdivided `factor` more times.
    pub fn refined(&self, factor: usize) -> Self {
        Self { order: self.order, band_cells: self.band_cells * factor, interior_cells: self.interior_cells * factor }
    }
}

/// Split intervals at the given points.
pub fn split_intervals(iv: &[(f64, f64)], cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(iv.len() + cuts.len());
    for &(a, b) in iv {
        let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > a + 1e-13 && c < b - 1e-13).collect();
        pts.sort_by(f64::total_cmp);
        let mut lo = a;
        for p in pts {
            out.push((lo, p));
            lo = p;
        }
        out.push((lo, b));
    }
    out
}

/// Gauss nodes and weights of an axis mesh.
pub fn axis_nodes(iv: &[(f64, f64)], order: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(order);
    let mut xs = Vec::with_capacity(iv.len() * order);
    let mut ws = Vec::with_capacity(iv.len() * order);
    for &(a, b) in iv {
        for (t, w) in gl.nodes.iter().zip(&gl.weights) {
            xs.push(a + (b - a) * t);
            ws.push(w * (b - a));
        }
    }
    (xs, ws)
}

/// Values of the smooth mother functions on a tensor mesh.
#[derive(Debug, Clone)]
pub struct MotherTable {
    pub spec: MeshSpec,
    pub intervals: Vec<(f64, f64)>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[a][i·n + j]` at `(nodes[i], nodes[j])`.
    pub values: Vec<Vec<f64>>,
}

impl MotherTable {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }
}

/// The smooth mother wavelets `H^{a,η}(u) = ∫ H_a(u − ηy) φ(y) dy`.
#[derive(Debug)]
pub struct SmoothBasis {
    pub basis: Arc<MotherBasis>,
    pub mollifier: Arc<Mollifier>,
    tables: Mutex<HashMap<MeshSpec, Arc<MotherTable>>>,
    moments: std::sync::OnceLock<Arc<MomentTable>>,
}

/// Highest per-axis degree of the tabulated centered moments.
pub const MOMENT_DEGREE: usize = 48;

/// Largest per-axis majorant `|a|ρ + |b|ρ²` accepted by the Taylor route.
const TAYLOR_MAJORANT: f64 = 4.0;

/// Centered moments `M_a[β] = ∫ H^{a,η}(u) (u − ½)^β du`, `β₁, β₂ ≤ MOMENT_DEGREE`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub degree: usize,
    /// `values[a][β₁·(degree+1) + β₂]`.
    pub values: Vec<Vec<f64>>,
}

/// Coefficients `t_j` of `e^{−i(aw + bw²)} = Σ_j t_j w^j` for `j ≤ n`.
pub fn taylor_phase(a: f64, b: f64, n: usize, out: &mut Vec<Complex64>) {
    out.clear();
    out.push(Complex64::new(1.0, 0.0));
    if n == 0 {
        return;
    }
    out.push(Complex64::new(0.0, -a));
    // (j+1) t_{j+1} = −ia t_j − 2ib t_{j−1}
    for j in 1..n {
        let v = (Complex64::new(0.0, -a) * out[j] + Complex64::new(0.0, -2.0 * b) * out[j - 1]) / (j + 1) as f64;
        out.push(v);
    }
}

/// Smallest degree `J` with `A^J/J! < 1e−18` past the peak of the majorant series.
fn taylor_degree(a: f64) -> usize {
    let mut t = 1.0;
    let mut j = 0usize;
    loop {
        j += 1;
        t *= a / j as f64;
        if (j as f64) > a && t < 1e-18 {
            return j;
        }
    }
}

/// How the extension of a smooth expansion is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendRoute {
    /// Taylor moments where the mother frequency is small, the table elsewhere.
    Auto,
    /// Always the phase-resolved mother table.
    Table,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl SmoothBasis {
    pub fn new(kappa: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.25 / super::mollifier::BUMP_HALF_WIDTH) {
            return invalid(format!("η = {eta} must lie in (0, {:.3})", 0.25 / super::mollifier::BUMP_HALF_WIDTH));
        }
        Ok(Self {
            basis: Arc::new(MotherBasis::new(kappa)?),
            mollifier: Arc::new(Mollifier::new(kappa, eta)?),
            tables: Mutex::new(HashMap::new()),
            moments: std::sync::OnceLock::new(),
        })
    }

    pub fn kappa(&self) -> usize {
        self.basis.kappa
    }

    pub fn eta(&self) -> f64 {
        self.mollifier.eta
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Support half-width of the mollifier in mother units, `ηc`.
    pub fn spill(&self) -> f64 {
        self.eta() * self.mollifier.half_width
    }

    /// Per-axis factors `L[e][α][γ](u) = ∫ (u − c_e − ηt)^α t^γ β(t) dt` over
    /// `{t : u − ηt ∈ [e/2, e/2 + 1/2]}`, flattened as `[e][α][γ]`.
    fn axis_factors(&self, u: f64, out: &mut [f64]) {
        let k = self.kappa();
        let eta = self.eta();
        let c = self.mollifier.half_width;
        let np = 2 * k - 1;
        let mut fa = vec![0.0; np];
        let mut fb = vec![0.0; np];
        let mut g = vec![0.0; np];
        let mut upow = vec![1.0; k];
        for e in 0..2 {
            let w = u - axis_center(e);
            for i in 1..k {
                upow[i] = upow[i - 1] * w;
            }
            let lo = ((u - (0.5 * e as f64 + 0.5)) / eta).max(-c);
            let hi = ((u - 0.5 * e as f64) / eta).min(c);
            let base = e * k * k;
            if hi <= lo {
                out[base..base + k * k].fill(0.0);
                continue;
            }
            self.mollifier.moments.eval(lo, &mut fa);
            self.mollifier.moments.eval(hi, &mut fb);
            for j in 0..np {
                g[j] = fb[j] - fa[j];
            }
            for al in 0..k {
                for ga in 0..k {
                    let mut s = 0.0;
                    for i in 0..=al {
                        s += binom(al, i) * upow[al - i] * (-eta).powi(i as i32) * g[ga + i];
                    }
                    out[base + al * k + ga] = s;
                }
            }
        }
    }

    /// Exact values of every smooth mother function on the tensor grid `xs × ys`,
    /// `out[a][i·|ys| + j]`.
    pub fn eval_grid(&self, xs: &[f64], ys: &[f64]) -> Vec<Vec<f64>> {
        let k = self.kappa();
        let d = self.dim();
        let exps = &self.basis.exponents;
        let nm = exps.len();
        let lx: Vec<Vec<f64>> = xs.iter().map(|&u| { let mut o = vec![0.0; 2 * k * k]; self.axis_factors(u, &mut o); o }).collect();
        let ly: Vec<Vec<f64>> = ys.iter().map(|&u| { let mut o = vec![0.0; 2 * k * k]; self.axis_factors(u, &mut o); o }).collect();
        let pexp = &self.mollifier.exponents;
        let pco = &self.mollifier.coeffs;
        let rows: Vec<Vec<Vec<f64>>> = crate::par::map_range(xs.len(), |i| {
            let mut out = vec![vec![0.0; ys.len()]; d];
            let mut kv = vec![0.0; nm];
            for (j, lyj) in ly.iter().enumerate() {
                for (ch, off) in CHILD_OFFSETS.iter().enumerate() {
                    let fx = &lx[i][off[0] * k * k..(off[0] + 1) * k * k];
                    let fy = &lyj[off[1] * k * k..(off[1] + 1) * k * k];
                    if fx.iter().all(|v| *v == 0.0) || fy.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    for (m, al) in exps.iter().enumerate() {
                        let mut s = 0.0;
                        for (ga, p) in pexp.iter().zip(pco) {
                            s += p * fx[al[0] * k + ga[0]] * fy[al[1] * k + ga[1]];
                        }
                        kv[m] = s;
                    }
                    for (a, o) in out.iter_mut().enumerate() {
                        let c = &self.basis.coeffs[a][ch];
                        o[j] += c.iter().zip(&kv).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
            }
            out
        });
        let mut res = vec![Vec::with_capacity(xs.len() * ys.len()); d];
        for row in rows {
            for (a, r) in row.into_iter().enumerate() {
                res[a].extend(r);
            }
        }
        res
    }

    /// Exact value of smooth mother function `a` at `u`.
    pub fn eval(&self, a: usize, u: [f64; 2]) -> f64 {
        self.eval_grid(&[u[0]], &[u[1]])[a][0]
    }

    /// Cached table on the mesh `spec`.
    pub fn table(&self, spec: MeshSpec) -> Arc<MotherTable> {
        if let Some(t) = self.tables.lock().unwrap().get(&spec) {
            return t.clone();
        }
        let intervals = spec.intervals(self.eta());
        let (nodes, weights) = axis_nodes(&intervals, spec.order);
        let values = self.eval_grid(&nodes, &nodes);
        let t = Arc::new(MotherTable { spec, intervals, nodes, weights, values });
        self.tables.lock().unwrap().insert(spec, t.clone());
        t
    }

    /// Centered moments on the FINE table, computed once.
    pub fn moment_table(&self) -> Arc<MomentTable> {
        self.moments
            .get_or_init(|| {
                let t = self.table(MeshSpec::FINE);
                let n = t.n();
                let m = MOMENT_DEGREE + 1;
                let pw = |x: f64| -> Vec<f64> {
                    let mut v = vec![1.0; m];
                    for k in 1..m {
                        v[k] = v[k - 1] * (x - 0.5);
                    }
                    v
                };
                let p: Vec<Vec<f64>> = t.nodes.iter().map(|&x| pw(x)).collect();
                let values = crate::par::map_slice(&t.values, |vals| {
                    let mut out = vec![0.0; m * m];
                    let mut row = vec![0.0; m];
                    for i in 0..n {
                        row.fill(0.0);
                        for j in 0..n {
                            let v = t.weights[j] * vals[i * n + j];
                            if v == 0.0 {
                                continue;
                            }
                            for (r, q) in row.iter_mut().zip(&p[j]) {
                                *r += v * q;
                            }
                        }
                        for b1 in 0..m {
                            let w = t.weights[i] * p[i][b1];
                            for b2 in 0..m {
                                out[b1 * m + b2] += w * row[b2];
                            }
                        }
                    }
                    out
                });
                Arc::new(MomentTable { degree: MOMENT_DEGREE, values })
            })
            .clone()
    }

    /// Smallest refinement of `base` whose cells change phase by at most
    /// `phase_per_cell` when the mother frequency gradient is bounded by `grad`.
    pub fn spec_for(&self, base: MeshSpec, grad: f64, phase_per_cell: f64) -> MeshSpec {
        let mut factor = 1;
        while base.refined(factor).max_width(self.eta()) * grad > phase_per_cell && factor < 4096 {
            factor *= 2;
        }
        base.refined(factor)
    }

    /// `max |∫ H^{a,η} u^β du|` over `a` and `|β| < κ` on the given mesh.
    pub fn max_moment(&self, spec: MeshSpec) -> f64 {
        let t = self.table(spec);
        let n = t.n();
        let mut worst: f64 = 0.0;
        for vals in &t.values {
            for b in &self.basis.exponents {
                let mut s = 0.0;
                for i in 0..n {
                    let xi = t.weights[i] * t.nodes[i].powi(b[0] as i32);
                    let mut r = 0.0;
                    for j in 0..n {
                        r += t.weights[j] * t.nodes[j].powi(b[1] as i32) * vals[i * n + j];
                    }
                    s += xi * r;
                }
                worst = worst.max(s.abs());
            }
        }
        worst
    }
}

/// A single smooth wavelet `h^{a,η}_Q` with its sampled values on the enlarged square.
#[derive(Debug, Clone)]
pub struct SmoothWavelet {
    pub square: DyadicSquare,
    pub index: usize,
    pub eta: f64,
    pub samples: SampledFunction,
}

/// Sample `h^{a,η}_Q` on the enlarged square `(1 + 2ηc)Q` with the mesh `spec`.
pub fn smooth_wavelet(sb: &Arc<SmoothBasis>, q: &DyadicSquare, a: usize, spec: MeshSpec) -> Result<SmoothWavelet> {
    if a >= sb.dim() {
        return invalid(format!("wavelet index {a} out of range {}", sb.dim()));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); sb.dim()];
    coeffs[a] = Complex64::new(1.0, 0.0);
    let e = SmoothExpansion { smooth: sb.clone(), terms: vec![(*q, coeffs)] };
    Ok(SmoothWavelet { square: *q, index: a, eta: sb.eta(), samples: e.term_sampled(0, spec, &[]) })
}

/// `Σ_terms Σ_a c_a h^{a,η}_I` for squares `I` with complex coefficient vectors.
#[derive(Debug, Clone)]
pub struct SmoothExpansion {
    pub smooth: Arc<SmoothBasis>,
    pub terms: Vec<(DyadicSquare, Vec<Complex64>)>,
}

impl SmoothExpansion {
    pub fn empty(smooth: Arc<SmoothBasis>) -> Self {
        Self { smooth, terms: Vec::new() }
    }

    /// Enlarged support rectangle of term `t`.
    pub fn term_rect(&self, t: usize) -> Rect {
        let (q, _) = &self.terms[t];
        let p = q.lower_left();
        let l = q.side();
        let s = self.smooth.spill() * l;
        Rect::new(p[0] - s, p[1] - s, l + 2.0 * s, l + 2.0 * s)
    }

    /// Complex values of the term at mother-grid values (un-normalized by ℓ).
    fn combine(&self, t: usize, vals: &[Vec<f64>]) -> Vec<Complex64> {
        let c = &self.terms[t].1;
        let n = vals[0].len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (a, v) in vals.iter().enumerate() {
            if c[a] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, x) in out.iter_mut().zip(v) {
                *o += c[a] * x;
            }
        }
        out
    }

    /// Sampled term `t` on its own mesh, optionally split at extra absolute lines
    /// `cuts` (applied to both axes after mapping to mother coordinates).
    pub fn term_sampled(&self, t: usize, spec: MeshSpec, cuts: &[[f64; 2]]) -> SampledFunction {
        let (q, _) = &self.terms[t];
        let p = q.lower_left();
        let l = q.side();
        let base = spec.intervals(self.smooth.eta());
        let cx: Vec<f64> = cuts.iter().map(|c| (c[0] - p[0]) / l).collect();
        let cy: Vec<f64> = cuts.iter().map(|c| (c[1] - p[1]) / l).collect();
        let ivx = split_intervals(&base, &cx);
        let ivy = split_intervals(&base, &cy);
        let gl = GaussLegendre::new(spec.order);
        let g = spec.order;
        let rule = Arc::new(QuadratureRule::new(g, 1));
        let mut cells = Vec::with_capacity(ivx.len() * ivy.len());
        let mut values = Vec::with_capacity(ivx.len() * ivy.len() * g * g);
        for &(a0, a1) in &ivx {
            let xs: Vec<f64> = gl.nodes.iter().map(|t| a0 + (a1 - a0) * t).collect();
            for &(b0, b1) in &ivy {
                let ys: Vec<f64> = gl.nodes.iter().map(|t| b0 + (b1 - b0) * t).collect();
                let vals = self.smooth.eval_grid(&xs, &ys);
                let comb = self.combine(t, &vals);
                cells.push(Rect::new(p[0] + l * a0, p[1] + l * b0, l * (a1 - a0), l * (b1 - b0)));
                values.extend(comb.into_iter().map(|v| v / l));
            }
        }
        SampledFunction { cells, rule, values }
    }

    /// Exact values on the tensor grid `xs × ys` (absolute coordinates), `out[i·|ys| + j]`.
    pub fn eval_tensor(&self, xs: &[f64], ys: &[f64]) -> Vec<Complex64> {
        let ny = ys.len();
        let mut out = vec![Complex64::new(0.0, 0.0); xs.len() * ny];
        for t in 0..self.terms.len() {
            let r = self.term_rect(t);
            let ix: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] > r.x0 && xs[i] < r.x1()).collect();
            let iy: Vec<usize> = (0..ny).filter(|&j| ys[j] > r.y0 && ys[j] < r.y1()).collect();
            if ix.is_empty() || iy.is_empty() {
                continue;
            }
            let (q, _) = &self.terms[t];
            let p = q.lower_left();
            let l = q.side();
            let ux: Vec<f64> = ix.iter().map(|&i| (xs[i] - p[0]) / l).collect();
            let uy: Vec<f64> = iy.iter().map(|&j| (ys[j] - p[1]) / l).collect();
            let vals = self.smooth.eval_grid(&ux, &uy);
            let comb = self.combine(t, &vals);
            for (a, &i) in ix.iter().enumerate() {
                for (b, &j) in iy.iter().enumerate() {
                    out[i * ny + j] += comb[a * iy.len() + b] / l;
                }
            }
        }
        out
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        self.eval_tensor(&[x[0]], &[x[1]])[0]
    }

    /// Exact samples on the cells and rule of `like`.
    pub fn sample_on(&self, cells: Vec<Rect>, rule: Arc<QuadratureRule>) -> SampledFunction {
        let g = rule.order;
        let mut values = Vec::with_capacity(cells.len() * g * g);
        for c in &cells {
            let xs: Vec<f64> = rule.nodes.iter().map(|t| c.x0 + c.w * t).collect();
            let ys: Vec<f64> = rule.nodes.iter().map(|t| c.y0 + c.h * t).collect();
            values.extend(self.eval_tensor(&xs, &ys));
        }
        SampledFunction { cells, rule, values }
    }

    /// `Σ` of the terms' extensions, each by the mother rescaling
    /// `E h_I(ξ) = ℓ e^{−iΦ(x₀)·ξ} Ê_H(ℓ(ξ′ + 2x₀ξ₃), ℓ²ξ₃)`.
    pub fn extend(&self, set: &FrequencySet, base: MeshSpec, opts: &ExtendOptions) -> Result<ExtensionField> {
        self.extend_with(set, base, opts, ExtendRoute::Auto)
    }

    /// As [`Self::extend`]. With [`ExtendRoute::Auto`], a mother frequency `ζ` small enough
    /// that the per-axis phase majorant `|ζₖ + ζ₃|ρ + |ζ₃|ρ²` (ρ the half-width of the
    /// enlarged mother square about its center) stays below 4 is handled by the Taylor series
    /// of the phase against tabulated centered moments; other frequencies use the mother table
    /// refined until the phase change per cell is at most `opts.phase_per_cell`.
    pub fn extend_with(&self, set: &FrequencySet, base: MeshSpec, opts: &ExtendOptions, route: ExtendRoute) -> Result<ExtensionField> {
        let npts = set.len();
        let mut values = vec![Complex64::new(0.0, 0.0); npts];
        let active: Vec<usize> = (0..self.terms.len())
            .filter(|&t| self.terms[t].1.iter().any(|c| c.norm_sqr() > 0.0))
            .collect();
        let empty_cert = Certificate { max_phase_per_cell: 0.0, nodes: 0, products: 0.0 };
        if active.is_empty() {
            return Ok(ExtensionField { source: "smooth-expansion".into(), set: set.clone(), values, certificate: empty_cert });
        }
        let rho = 0.5 + self.smooth.spill();
        let zeta = |q: &DyadicSquare, xi: &[f64; 3]| -> [f64; 3] {
            let p = q.lower_left();
            let l = q.side();
            [l * (xi[0] + 2.0 * p[0] * xi[2]), l * (xi[1] + 2.0 * p[1] * xi[2]), l * l * xi[2]]
        };
        let majorant = |z: &[f64; 3]| ((z[0] + z[2]).abs().max((z[1] + z[2]).abs())) * rho + z[2].abs() * rho * rho;
        // Mother phase gradient |ζ′ + 2uζ₃| with |u| ≤ 1.6 over the enlarged square.
        let grad = |z: &[f64; 3]| z[0].hypot(z[1]) + 3.2 * z[2].abs();
        let mut table_pts: Vec<Vec<usize>> = vec![Vec::new(); active.len()];
        let mut taylor_terms: Vec<usize> = Vec::new();
        let mut gmax: f64 = 0.0;
        let mut products = 0.0;
        let mut jmax = 0usize;
        for (k, &t) in active.iter().enumerate() {
            let q = &self.terms[t].0;
            let mut any_taylor = false;
            for (pi, xi) in set.points.iter().enumerate() {
                let z = zeta(q, xi);
                let m = majorant(&z);
                if route == ExtendRoute::Auto && m <= TAYLOR_MAJORANT {
                    let j = taylor_degree(m);
                    jmax = jmax.max(j);
                    products += ((j + 1) * (j + 1)) as f64;
                    any_taylor = true;
                } else {
                    table_pts[k].push(pi);
                    gmax = gmax.max(grad(&z));
                }
            }
            if any_taylor {
                taylor_terms.push(k);
            }
        }
        let table_count: usize = table_pts.iter().map(|v| v.len()).sum();
        let spec = self.smooth.spec_for(base, gmax, opts.phase_per_cell);
        let n = if table_count > 0 { spec.intervals(self.smooth.eta()).len() * spec.order } else { 0 };
        products += (n * n) as f64 * table_count as f64;
        if products > opts.budget {
            return Err(Error::Capacity(format!(
                "smooth expansion extension needs {products:.3e} products (budget {:.3e})",
                opts.budget
            )));
        }
        if !taylor_terms.is_empty() {
            let mt = self.smooth.moment_table();
            let m = mt.degree + 1;
            // combined centered moments of each term, truncated to degree jmax per axis
            let jm = jmax.min(mt.degree);
            let combined: Vec<Vec<Complex64>> = crate::par::map_slice(&taylor_terms, |&k| {
                let c = &self.terms[active[k]].1;
                let mut out = vec![Complex64::new(0.0, 0.0); (jm + 1) * (jm + 1)];
                for (a, ca) in c.iter().enumerate() {
                    if *ca == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for b1 in 0..=jm {
                        for b2 in 0..=jm {
                            out[b1 * (jm + 1) + b2] += ca * mt.values[a][b1 * m + b2];
                        }
                    }
                }
                out
            });
            let add: Vec<Complex64> = crate::par::map_range(npts, |pi| {
                let xi = &set.points[pi];
                let mut tx = Vec::with_capacity(jm + 1);
                let mut ty = Vec::with_capacity(jm + 1);
                let mut acc = Complex64::new(0.0, 0.0);
                for (ci, &k) in taylor_terms.iter().enumerate() {
                    let q = &self.terms[active[k]].0;
                    let z = zeta(q, xi);
                    let mj = majorant(&z);
                    if mj > TAYLOR_MAJORANT {
                        continue;
                    }
                    let j = taylor_degree(mj).min(jm);
                    taylor_phase(z[0] + z[2], z[2], j, &mut tx);
                    taylor_phase(z[1] + z[2], z[2], j, &mut ty);
                    let mo = &combined[ci];
                    let mut s = Complex64::new(0.0, 0.0);
                    for b1 in 0..=j {
                        let row = &mo[b1 * (jm + 1)..b1 * (jm + 1) + j + 1];
                        let r: Complex64 = row.iter().zip(&ty).map(|(x, y)| x * y).sum();
                        s += tx[b1] * r;
                    }
                    // u = w + (½, ½): constant phase (ζ₁ + ζ₂)/2 + ζ₃/2, then the x₀ translation
                    let l = q.side();
                    let c0 = phi(q.lower_left());
                    let ph = -(0.5 * (z[0] + z[1]) + 0.5 * z[2]) - dot3(&c0, xi);
                    acc += s * l * Complex64::from_polar(1.0, ph);
                }
                acc
            });
            for (v, a) in values.iter_mut().zip(add) {
                *v += a;
            }
        }
        let mut worst: f64 = 0.0;
        if table_count > 0 {
            let table = self.smooth.table(spec);
            let n = table.n();
            for (k, &t) in active.iter().enumerate() {
                if table_pts[k].is_empty() {
                    continue;
                }
                let comb = self.combine(t, &table.values);
                let mut vals = comb;
                for i in 0..n {
                    for j in 0..n {
                        vals[i * n + j] *= table.weights[i] * table.weights[j];
                    }
                }
                let block = [TensorBlock { xs: table.nodes.clone(), ys: table.nodes.clone(), vals }];
                let (q, _) = &self.terms[t];
                let l = q.side();
                let c0 = phi(q.lower_left());
                let etas: Vec<[f64; 3]> = table_pts[k].iter().map(|&pi| zeta(q, &set.points[pi])).collect();
                let ev = eval_blocks(&block, &etas);
                for (&pi, e) in table_pts[k].iter().zip(ev) {
                    let xi = &set.points[pi];
                    values[pi] += e * l * Complex64::from_polar(1.0, -dot3(&c0, xi));
                }
            }
            worst = spec.max_width(self.smooth.eta()) * gmax;
        }
        Ok(ExtensionField {
            source: "smooth-expansion".into(),
            set: set.clone(),
            values,
            certificate: Certificate { max_phase_per_cell: worst, nodes: n * n * active.len(), products },
        })
    }

    /// Sum with another expansion over the same smooth basis.
    pub fn concat(mut self, other: SmoothExpansion) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            smooth: self.smooth.clone(),
            terms: self.terms.iter().map(|(q, v)| (*q, v.iter().map(|x| x * c).collect())).collect(),
        }
    }
}

/// Default phase budget for mother-table refinement.
pub fn default_phase() -> f64 {
    PI / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BaseDomain;

    #[test]
    fn mesh_intervals_cover_enlarged_square() {
        let iv = MeshSpec::STANDARD.intervals(0.1);
        let w = 0.1 * super::super::mollifier::BUMP_HALF_WIDTH;
        assert!((iv[0].0 + w).abs() < 1e-15 && (iv.last().unwrap().1 - 1.0 - w).abs() < 1e-15);
        assert!(iv.windows(2).all(|p| (p[0].1 - p[1].0).abs() < 1e-15));
        // child lines are breakpoints
        for l in [0.0, 0.5, 1.0] {
            assert!(iv.iter().any(|(a, _)| (a - l).abs() < 1e-15));
        }
    }

    #[test]
    fn converges_to_plain_wavelet_away_from_lines() {
        let pts = [[0.2, 0.3], [0.7, 0.15], [0.62, 0.88]];
        let plain = MotherBasis::new(2).unwrap();
        for &(eta, tol) in &[(0.1, 1e-12), (0.05, 1e-12), (0.025, 1e-12)] {
            let sb = SmoothBasis::new(2, eta).unwrap();
            for u in pts {
                for a in 0..sb.dim() {
                    // mollifier moments vanish, so locally polynomial data is reproduced
                    assert!((sb.eval(a, u) - plain.eval(a, u)).abs() < tol, "η={eta} u={u:?}");
                }
            }
        }
    }

    #[test]
    fn support_is_enlarged_square() {
        let sb = SmoothBasis::new(2, 0.1).unwrap();
        let s = sb.spill();
        for a in 0..sb.dim() {
            assert_eq!(sb.eval(a, [-s - 1e-9, 0.5]), 0.0);
            assert_eq!(sb.eval(a, [0.5, 1.0 + s + 1e-9]), 0.0);
        }
        assert!(sb.eval(0, [-0.5 * s, 0.25]).abs() > 0.0 || sb.eval(1, [-0.5 * s, 0.25]).abs() > 0.0);
    }

    #[test]
    fn smooth_moments_vanish() {
        for kappa in 1..=3 {
            for eta in [0.1, 0.05] {
                let sb = SmoothBasis::new(kappa, eta).unwrap();
                let m = sb.max_moment(MeshSpec::FINE);
                assert!(m < 1e-9, "κ={kappa} η={eta} moment {m}");
            }
        }
    }

    #[test]
    fn taylor_route_matches_table_route() {
        let sb = Arc::new(SmoothBasis::new(3, 0.05).unwrap());
        let d = BaseDomain::centered(1.0).unwrap();
        let terms: Vec<(DyadicSquare, Vec<Complex64>)> = [[13i64, 17i64], [40, 2], [63, 63]]
            .iter()
            .enumerate()
            .map(|(k, idx)| {
                let c = (0..sb.dim()).map(|a| Complex64::new(((a + k) as f64).sin(), ((a * k) as f64).cos())).collect();
                (DyadicSquare::new(&d, 6, *idx), c)
            })
            .collect();
        let e = SmoothExpansion { smooth: sb.clone(), terms };
        // |ξ| up to 2⁸ puts ℓ|ξ| on both sides of the Taylor threshold
        let set = FrequencySet::ball(256.0, 40, 9);
        let opts = ExtendOptions::default();
        let a = e.extend_with(&set, MeshSpec::STANDARD, &opts, ExtendRoute::Auto).unwrap();
        let b = e.extend_with(&set, MeshSpec::FINE, &opts, ExtendRoute::Table).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn taylor_phase_coefficients() {
        let mut t = Vec::new();
        taylor_phase(0.7, -0.3, 30, &mut t);
        for w in [0.2f64, -0.45, 0.5] {
            let s: Complex64 = t.iter().enumerate().map(|(j, c)| c * w.powi(j as i32)).sum();
            let want = Complex64::from_polar(1.0, -(0.7 * w - 0.3 * w * w));
            assert!((s - want).norm() < 1e-14);
        }
    }

    #[test]
    fn extension_by_rescaling_matches_direct_quadrature() {
        let sb = Arc::new(SmoothBasis::new(2, 0.05).unwrap());
        let d = BaseDomain::centered(0.5).unwrap();
        let q = DyadicSquare::new(&d, 2, [1, 2]);
        let mut c = vec![Complex64::new(0.0, 0.0); sb.dim()];
        c[0] = Complex64::new(1.0, 0.5);
        c[4] = Complex64::new(-0.3, 0.0);
        let e = SmoothExpansion { smooth: sb.clone(), terms: vec![(q, c)] };
        let set = FrequencySet::ball(60.0, 12, 4);
        let opts = ExtendOptions::default();
        let a = e.extend(&set, MeshSpec::STANDARD, &opts).unwrap();
        let sampled = e.term_sampled(0, MeshSpec::FINE, &[]);
        let b = crate::extension::extend(&sampled, &set, &opts).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
    }
}
