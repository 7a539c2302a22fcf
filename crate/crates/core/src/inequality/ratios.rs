//! Ratio testers for the linear, trilinear, annular Alpert and probabilistic inequalities.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::families::{members, random_signs, Family, Member};
use crate::alpert::{scale_projection, MeshSpec, Projection, SmoothBasis, SmoothExpansion};
use crate::error::{invalid, Result};
use crate::extension::{extend, local_lq_norm, weighted_lq, ExtendOptions, FrequencySet};
use crate::funcrep::{QuadratureRule, SampledFunction};
use crate::grid::{is_nu_disjoint, BaseDomain, DyadicSquare, Rect};
use crate::report::{ratio, RatioReport, SweepPoint};

/// `(Σ_j w_j |Π_k v_k(ξ_j)|^{q/3})^{3/q}`.
pub fn trilinear_norm(fields: [&[Complex64]; 3], weights: &[f64], q: f64) -> f64 {
    let p = q / 3.0;
    let s: f64 = weights
        .iter()
        .enumerate()
        .map(|(j, w)| w * (fields[0][j].norm() * fields[1][j].norm() * fields[2][j].norm()).powf(p))
        .sum();
    s.powf(1.0 / p)
}

/// `max` over a family of `‖Ef‖_{L^q(B_R)}/‖f‖_∞`.
pub fn qr_estimate(q: f64, set: &FrequencySet, family: &[Member], seed: u64, opts: &ExtendOptions) -> Result<RatioReport> {
    if !(q >= 1.0) {
        return invalid(format!("q must be at least 1, got {q}"));
    }
    let mut best: Option<RatioReport> = None;
    for m in family {
        let lhs = local_lq_norm(&extend(&m.f, set, opts)?, q)?;
        let rhs = m.f.max_abs();
        let mut r = RatioReport::new("qr", q, format!("{:?}", set.kind), lhs, rhs, seed);
        r.detail = m.label.clone();
        if best.as_ref().map_or(true, |b| r.ratio > b.ratio) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| crate::Error::InvalidInput("empty family".into()))
}

/// `Q_R` over `R = 2^k`, `k ∈ ks`, on one nested dyadic ball sample, so the estimate is
/// monotone in `R` on matched points. The exponent is the slope of `log₂ Q_R` in `log₂ R`.
pub fn qr_sweep(
    q: f64,
    ks: &[u32],
    per_shell: usize,
    family: &Family,
    domain: &BaseDomain,
    seed: u64,
    rule: &QuadratureRule,
    opts: &ExtendOptions,
) -> Result<RatioReport> {
    let kmax = *ks.iter().max().ok_or_else(|| crate::Error::InvalidInput("empty sweep".into()))?;
    let set = FrequencySet::dyadic_ball(kmax, per_shell, seed);
    let fam = members(family, domain, seed, rule)?;
    let fields: Vec<Vec<Complex64>> = fam.iter().map(|m| extend(&m.f, &set, opts).map(|e| e.values)).collect::<Result<_>>()?;
    let mut sweep = Vec::new();
    let mut detail = String::new();
    for &k in ks {
        let n = per_shell * (k as usize + 1);
        let mut best = (0.0, 1.0, 0.0, 0usize);
        for (i, (m, v)) in fam.iter().zip(&fields).enumerate() {
            let lhs = weighted_lq(&v[..n], &set.weights[..n], q)?;
            let rhs = m.f.max_abs();
            let r = ratio(lhs, rhs);
            if r > best.2 {
                best = (lhs, rhs, r, i);
            }
        }
        detail = fam[best.3].label.clone();
        sweep.push(SweepPoint { x: k as f64, lhs: best.0, rhs: best.1, ratio: best.2 });
    }
    let mut r = RatioReport::new("qr-sweep", q, format!("dyadic_ball(k≤{kmax})"), 0.0, 0.0, seed).with_sweep(sweep);
    r.scales = ks.iter().map(|&k| k as i64).collect();
    r.detail = detail;
    Ok(r)
}

/// Right-hand side normalization of the trilinear tester.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RhsNorm {
    Linf,
    Lq,
}

/// Trilinear ratio with the three linear ratios on the same samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrilinearOutcome {
    pub report: RatioReport,
    pub linear: [f64; 3],
}

pub fn trilinear_ratio(
    fs: [&SampledFunction; 3],
    triple: Option<(&[DyadicSquare; 3], f64)>,
    q: f64,
    set: &FrequencySet,
    rhs_norm: RhsNorm,
    seed: u64,
    opts: &ExtendOptions,
) -> Result<TrilinearOutcome> {
    if !(q >= 3.0) {
        return invalid(format!("trilinear tester needs q ≥ 3, got {q}"));
    }
    if let Some((t, nu)) = triple {
        if !is_nu_disjoint(t, nu) {
            return invalid(format!("triple is not {nu}-disjoint"));
        }
    }
    let e: Vec<Vec<Complex64>> = fs.iter().map(|f| extend(f, set, opts).map(|x| x.values)).collect::<Result<_>>()?;
    let norm = |f: &SampledFunction| -> Result<f64> {
        match rhs_norm {
            RhsNorm::Linf => Ok(f.max_abs()),
            RhsNorm::Lq => f.lp_norm(q),
        }
    };
    let rhs_k = [norm(fs[0])?, norm(fs[1])?, norm(fs[2])?];
    let lhs = trilinear_norm([&e[0], &e[1], &e[2]], &set.weights, q);
    let mut linear = [0.0; 3];
    for k in 0..3 {
        linear[k] = ratio(weighted_lq(&e[k], &set.weights, q)?, rhs_k[k]);
    }
    let mut report = RatioReport::new("trilinear", q, format!("{:?}", set.kind), lhs, rhs_k.iter().product(), seed);
    report.nu = triple.map(|t| t.1);
    Ok(TrilinearOutcome { report, linear })
}

/// Shared settings of the smooth Alpert testers.
#[derive(Clone)]
pub struct AlpertSetup<'a> {
    pub smooth: Arc<SmoothBasis>,
    pub mode: Projection<'a>,
    pub base: MeshSpec,
    pub extend: ExtendOptions,
}

impl<'a> AlpertSetup<'a> {
    pub fn plain(smooth: Arc<SmoothBasis>) -> Self {
        Self { smooth, mode: Projection::Plain, base: MeshSpec::STANDARD, extend: ExtendOptions::default() }
    }

    fn field(&self, f: &SampledFunction, k: &DyadicSquare, s: u32, set: &FrequencySet) -> Result<Vec<Complex64>> {
        let g = scale_projection(f, k, s, &self.smooth, self.mode)?;
        Ok(g.extend(set, self.base, &self.extend)?.values)
    }
}

/// Warnings for the annular scale window `r/(1+δ) < s₂ ≤ s₃ < r/(1−δ)` and `κ > 20/δ`.
pub fn annular_warnings(scales: [u32; 3], r: i32, delta: f64, kappa: usize) -> Vec<String> {
    let mut w = Vec::new();
    let (s2, s3) = (scales[1] as f64, scales[2] as f64);
    let rf = r as f64;
    if !(rf / (1.0 + delta) < s2 && s3 < rf / (1.0 - delta)) {
        w.push(format!("scales ({s2}, {s3}) outside the window ({:.3}, {:.3}) for r = {r}", rf / (1.0 + delta), rf / (1.0 - delta)));
    }
    if !(kappa as f64 > 20.0 / delta) {
        w.push(format!("κ = {kappa} does not exceed 20/δ = {:.1}", 20.0 / delta));
    }
    w
}

/// Trilinear smooth Alpert ratio on the annulus sample `set`.
#[allow(clippy::too_many_arguments)]
pub fn alpert_annular_ratio(
    fs: [&SampledFunction; 3],
    us: [DyadicSquare; 3],
    scales: [u32; 3],
    r: i32,
    q: f64,
    delta: f64,
    set: &FrequencySet,
    setup: &AlpertSetup<'_>,
    seed: u64,
) -> Result<RatioReport> {
    if !(scales[0] <= scales[1] && scales[1] <= scales[2]) {
        return invalid(format!("scales {scales:?} must satisfy s₁ ≤ s₂ ≤ s₃"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("δ = {delta} outside (0, 1)"));
    }
    let e: Vec<Vec<Complex64>> = (0..3).map(|k| setup.field(fs[k], &us[k], scales[k], set)).collect::<Result<_>>()?;
    let lhs = trilinear_norm([&e[0], &e[1], &e[2]], &set.weights, q);
    let rhs = fs.iter().map(|f| f.max_abs()).product();
    let mut rep = RatioReport::new("annular", q, format!("annulus(r={r})"), lhs, rhs, seed);
    rep.scales = scales.iter().map(|&s| s as i64).collect();
    rep.warnings = annular_warnings(scales, r, delta, setup.smooth.kappa());
    Ok(rep)
}

/// RMS of `|E Q^η_{s,U} f|` over the annulus sample for each `s`, against `s − r`.
pub fn annular_decay(
    f: &SampledFunction,
    u: &DyadicSquare,
    scales: &[u32],
    r: i32,
    set: &FrequencySet,
    setup: &AlpertSetup<'_>,
    seed: u64,
) -> Result<RatioReport> {
    let rhs = f.max_abs();
    let tw = set.total_weight();
    let mut sweep = Vec::new();
    for &s in scales {
        let v = setup.field(f, u, s, set)?;
        let ms: f64 = v.iter().zip(&set.weights).map(|(x, w)| w * x.norm_sqr()).sum::<f64>() / tw;
        let lhs = ms.sqrt();
        sweep.push(SweepPoint { x: s as f64 - r as f64, lhs, rhs, ratio: ratio(lhs, rhs) });
    }
    let mut rep = RatioReport::new("annular-decay", 2.0, format!("annulus(r={r})"), 0.0, 0.0, seed).with_sweep(sweep);
    rep.scales = scales.iter().map(|&s| s as i64).collect();
    Ok(rep)
}

/// Both sides of the parabolic rescaling identity on matched samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub prefactor: f64,
    pub discrepancy: f64,
}

/// `‖Int_ρ‖_{L^q(B_R)}` directly, and as `ρ^{2−4/q}‖Eg‖_{L^q(A·B_R)}` with
/// `g(u) = f(ȳ + ρu)` and `A(ξ′, ξ₃) = (ρξ′ + 2ρξ₃ȳ, ρ²ξ₃)`, on the image of the same samples.
pub fn rescale_identity_check(
    f: &SampledFunction,
    ybar: [f64; 2],
    rho: f64,
    q: f64,
    set: &FrequencySet,
    opts: &ExtendOptions,
) -> Result<RescaleCheck> {
    let square = Rect::new(ybar[0] - 0.5 * rho, ybar[1] - 0.5 * rho, rho, rho);
    let local = f.restrict_rect(&square)?.compact();
    let lhs = local_lq_norm(&extend(&local, set, opts)?, q)?;
    let g = f.parabolic_rescale(ybar, rho)?;
    let mut image = set.map_points(|x| [rho * x[0] + 2.0 * rho * x[2] * ybar[0], rho * x[1] + 2.0 * rho * x[2] * ybar[1], rho * rho * x[2]]);
    let jac = rho.powi(4);
    for w in &mut image.weights {
        *w *= jac;
    }
    let prefactor = rho.powf(2.0 - 4.0 / q);
    let rhs = prefactor * local_lq_norm(&extend(&g, &image, opts)?, q)?;
    Ok(RescaleCheck { lhs, rhs, prefactor, discrepancy: (lhs - rhs).abs() / lhs })
}

/// Per-square extensions `E(1_{U₀} Δ^η_I f)` and `S_Fourier f = (Σ_I |·|²)^{1/2}`.
#[derive(Debug, Clone)]
pub struct SquareFunctionField {
    pub squares: Vec<DyadicSquare>,
    pub terms: Vec<Vec<Complex64>>,
    pub values: Vec<f64>,
}

impl SquareFunctionField {
    /// Mean over the sample of `E_±|Σ ±E_I| / S`, from `draws` sign patterns.
    pub fn khintchine_ratio(&self, draws: usize, seed: u64) -> f64 {
        let n = self.values.len();
        let mut avg = vec![0.0; n];
        for d in 0..draws {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(d as u64);
            let signs: Vec<f64> = (0..self.terms.len()).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            for (j, a) in avg.iter_mut().enumerate() {
                let s: Complex64 = self.terms.iter().zip(&signs).map(|(t, e)| t[j] * *e).sum();
                *a += s.norm() / draws as f64;
            }
        }
        let used: Vec<f64> = avg.iter().zip(&self.values).filter(|(_, s)| **s > 0.0).map(|(a, s)| a / s).collect();
        used.iter().sum::<f64>() / used.len().max(1) as f64
    }
}

#[allow(clippy::too_many_arguments)]
pub fn square_function(
    f: &SampledFunction,
    k: &DyadicSquare,
    s: u32,
    u0: &Rect,
    set: &FrequencySet,
    setup: &AlpertSetup<'_>,
    sample_spec: MeshSpec,
) -> Result<SquareFunctionField> {
    let proj = scale_projection(f, k, s, &setup.smooth, setup.mode)?;
    let cuts = [[u0.x0, u0.y0], [u0.x1(), u0.y1()]];
    let mut squares = Vec::new();
    let mut terms = Vec::new();
    for t in 0..proj.terms.len() {
        let single = SmoothExpansion { smooth: setup.smooth.clone(), terms: vec![proj.terms[t].clone()] };
        let g = single.term_sampled(0, sample_spec, &cuts).restrict_rect(u0)?.compact();
        let v = if g.cells.is_empty() {
            vec![Complex64::new(0.0, 0.0); set.len()]
        } else {
            extend(&g, set, &setup.extend)?.values
        };
        squares.push(proj.terms[t].0);
        terms.push(v);
    }
    let values = (0..set.len()).map(|j| terms.iter().map(|t| t[j].norm_sqr()).sum::<f64>().sqrt()).collect();
    Ok(SquareFunctionField { squares, terms, values })
}

/// Monte Carlo estimate of `E_± ‖E[(±Q^s_U) f]‖_{L^q}` with one sign per square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleOutcome {
    pub mean: f64,
    pub stderr: f64,
    /// Standard error from the first half of the draws.
    pub stderr_half: f64,
    pub draws: usize,
    pub squares: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn martingale_mc(
    f: &SampledFunction,
    u: &DyadicSquare,
    s: u32,
    q: f64,
    draws: usize,
    seed: u64,
    set: &FrequencySet,
    setup: &AlpertSetup<'_>,
) -> Result<MartingaleOutcome> {
    if draws < 64 {
        return invalid(format!("martingale Monte Carlo needs at least 64 draws, got {draws}"));
    }
    let proj = scale_projection(f, u, s, &setup.smooth, setup.mode)?;
    let fields: Vec<Vec<Complex64>> = proj
        .terms
        .iter()
        .map(|t| {
            let single = SmoothExpansion { smooth: setup.smooth.clone(), terms: vec![t.clone()] };
            single.extend(set, setup.base, &setup.extend).map(|e| e.values)
        })
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = crate::par::map_range(draws, |d| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(d as u64);
        let signs: Vec<f64> = (0..fields.len()).map(|_| if r.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let v: Vec<Complex64> = (0..set.len()).map(|j| fields.iter().zip(&signs).map(|(fl, e)| fl[j] * *e).sum()).collect();
        weighted_lq(&v, &set.weights, q).unwrap_or(f64::NAN)
    });
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let (mean, stderr) = stats(&norms);
    let (_, stderr_half) = stats(&norms[..draws / 2]);
    Ok(MartingaleOutcome { mean, stderr, stderr_half, draws, squares: fields.len() })
}

/// `ε̂_q` sweep: for each `s`, `f` is a fresh `±1` pattern at level `s + 2` on `U`
/// (so its scale-`s` content does not vanish), and the ratio is
/// `E_±‖E[(±Q^s_U) f]‖_{L^q(B(0,2^s))} / ‖f‖_{L^q(U)}`. The exponent field is `ε̂ = −slope`.
#[allow(clippy::too_many_arguments)]
pub fn martingale_sweep(
    u: &DyadicSquare,
    scales: &[u32],
    q: f64,
    draws: usize,
    ball_count: usize,
    seed: u64,
    rule: &QuadratureRule,
    setup: &AlpertSetup<'_>,
) -> Result<RatioReport> {
    let mut sweep = Vec::new();
    let mut notes = Vec::new();
    for &s in scales {
        let f = random_signs(u, s + 2, seed.wrapping_add(s as u64), rule)?;
        let set = FrequencySet::ball((s as f64).exp2(), ball_count, seed.wrapping_add(100 + s as u64));
        let mc = martingale_mc(&f, u, s, q, draws, seed, &set, setup)?;
        let rhs = f.lp_norm(q)?;
        notes.push(format!("s={s}: mean {:.4e} ± {:.1e} (half draws ± {:.1e})", mc.mean, mc.stderr, mc.stderr_half));
        sweep.push(SweepPoint { x: s as f64, lhs: mc.mean, rhs, ratio: ratio(mc.mean, rhs) });
    }
    let mut rep = RatioReport::new("martingale", q, "ball(2^s)".into(), 0.0, 0.0, seed).with_sweep(sweep);
    rep.exponent = rep.exponent.map(|e| -e);
    rep.scales = scales.iter().map(|&s| s as i64).collect();
    rep.detail = notes.join("; ");
    Ok(rep)
}
