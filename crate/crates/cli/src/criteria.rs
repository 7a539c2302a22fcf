//! The numbered acceptance checks. Subcommands call these with the resolved config;
//! the acceptance test calls them with the defaults.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use parex_core::alpert::{FrameLimits, FrameOperator, MeshSpec, MotherBasis, SmoothBasis};
use parex_core::extension::{extend, modulation_shift_check, ExtendOptions, FrequencySet};
use parex_core::funcrep::{QuadratureRule, SampledFunction};
use parex_core::grid::{build_grid, is_nu_disjoint, BaseDomain, DyadicSquare};
use parex_core::inequality::zeta::Zeta;
use parex_core::inequality::{
    alpert_annular_ratio, annular_decay, lambda_of_q, martingale_sweep, nu_of_q, random_signs, rescale_identity_check,
    trilinear_ratio, AlpertSetup, RhsNorm,
};
use parex_core::measures::{convolve_pushforwards, fourier_oracle, support_box, FiberOptions};
use parex_core::report::RatioReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::*;
use crate::outcome::{Check, CliError};

type Res<T> = Result<T, CliError>;

pub fn centered(side: f64) -> Res<BaseDomain> {
    Ok(BaseDomain::centered(side)?)
}

fn timed<T>(f: impl FnOnce() -> Res<T>) -> Res<(T, f64)> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

/// 1. Gram = I, vanishing moments and `d_{Q;1} = 3`.
pub fn alpert_construction(c: &AlpertConfig) -> Res<Check> {
    let ((gram, moment, d1), secs) = timed(|| {
        let mut gram: f64 = 0.0;
        let mut moment: f64 = 0.0;
        let mut d1 = 3;
        for &k in &c.kappas {
            let mb = MotherBasis::new(k)?;
            let g = mb.gram();
            let n = g.nrows();
            for i in 0..n {
                for j in 0..n {
                    gram = gram.max((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            moment = moment.max(mb.max_moment());
            if k == 1 {
                d1 = mb.dim();
            }
        }
        Ok((gram, moment, d1))
    })?;
    let pass = gram <= c.gram_tol && moment <= c.moment_tol && d1 == 3 && secs <= c.construction_seconds;
    let mut ch = Check::new(
        "alpert-construction",
        pass,
        gram.max(moment),
        Some(c.gram_tol.min(c.moment_tol)),
        format!("κ ∈ {:?}: max|G − I| = {gram:.2e}, max moment = {moment:.2e}, d(κ=1) = {d1}{}, limit {}s", c.kappas, if c.kappas.contains(&1) { "" } else { " (κ=1 not requested)" }, c.construction_seconds),
    );
    ch.seconds = secs;
    Ok(ch)
}

/// 2. Moments of the smooth wavelets.
pub fn smooth_moments(c: &AlpertConfig) -> Res<Check> {
    let (worst, secs) = timed(|| {
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for &eta in &c.etas {
            for &k in &c.smooth_kappas {
                let m = SmoothBasis::new(k, eta)?.max_moment(MeshSpec::FINE);
                parts.push(format!("κ={k} η={eta}: {m:.1e}"));
                worst = worst.max(m);
            }
        }
        Ok((worst, parts.join("; ")))
    })?;
    let pass = worst.0 <= c.smooth_moment_tol && secs <= c.smooth_seconds;
    let mut ch = Check::new("smooth-moments", pass, worst.0, Some(c.smooth_moment_tol), worst.1);
    ch.seconds = secs;
    Ok(ch)
}

/// 3. Reconstruction on the truncated span and the condition number of `S_η`.
pub fn frame_reconstruction(c: &AlpertConfig, seed: u64) -> Res<Check> {
    let ((err, cond), secs) = timed(|| {
        let sb = Arc::new(SmoothBasis::new(c.frame_kappa, c.frame_eta)?);
        let fr = FrameOperator::build(sb, &BaseDomain::unit(), c.frame_s_max, MeshSpec::STANDARD, FrameLimits::default())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<Complex64> = (0..fr.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Ok((fr.reconstruction_error(&coeffs)?, fr.condition))
    })?;
    let pass = err < c.reconstruction_tol && cond < c.condition_max;
    let mut ch = Check::new(
        "frame-reconstruction",
        pass,
        err,
        Some(c.reconstruction_tol),
        format!("κ={} η={} s_max={}: relative error {err:.2e}, cond(S_η) = {cond:.3}", c.frame_kappa, c.frame_eta, c.frame_s_max),
    );
    ch.seconds = secs;
    Ok(ch)
}

/// Real test function for the extension checks.
pub fn extension_test_function(c: &ExtendConfig) -> Res<SampledFunction> {
    let g = build_grid(&centered(1.0)?, c.level)?;
    Ok(SampledFunction::sample_real(
        |x| 1.0 + x[0] - 0.5 * x[1] * x[1] + 0.3 * (4.0 * x[0] * x[1]).cos(),
        &g,
        &QuadratureRule::new(c.order, 1),
    )?)
}

pub fn extend_options(c: &ExtendConfig) -> ExtendOptions {
    ExtendOptions { budget: c.budget, phase_per_cell: c.phase_per_cell }
}

/// 4. `|Ef| ≤ ‖f‖₁`, self-convergence under cell halving and conjugate symmetry.
pub fn extension_sanity(c: &ExtendConfig, seed: u64) -> Res<Check> {
    let ((bound, halving, sym), secs) = timed(|| {
        let f = extension_test_function(c)?;
        let opts = extend_options(c);
        let set = FrequencySet::random_in_ball(c.points, c.radius, seed);
        let l1 = f.lp_norm(1.0)?;
        let e = extend(&f, &set, &opts)?;
        let bound = e.values.iter().map(|v| v.norm() - l1).fold(f64::NEG_INFINITY, f64::max);
        // halve every quadrature cell
        let finer = ExtendOptions { phase_per_cell: 0.5 * opts.phase_per_cell, ..opts };
        let eh = extend(&f, &set, &finer)?;
        let halving = e.values.iter().zip(&eh.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / l1;
        let neg = set.map_points(|x| [-x[0], -x[1], -x[2]]);
        let en = extend(&f, &neg, &opts)?;
        let sym = e.values.iter().zip(&en.values).map(|(a, b)| (a.conj() - b).norm()).fold(0.0, f64::max);
        Ok((bound, halving, sym))
    })?;
    let pass = bound <= c.bound_tol && halving < c.halving_tol && sym < c.symmetry_tol && secs <= c.seconds;
    let mut ch = Check::new(
        "extension-sanity",
        pass,
        halving,
        Some(c.halving_tol),
        format!(
            "{} points |ξ| ≤ {}: max(|Ef| − ‖f‖₁) = {bound:.2e}, halving {halving:.2e}, conjugate symmetry {sym:.2e}, limit {}s",
            c.points, c.radius, c.seconds
        ),
    );
    ch.seconds = secs;
    Ok(ch)
}

/// 5. `|T_I f(ξ − z)| = |E(M̃_z f_I)(ξ)|` on random `(I, z)`.
pub fn modulation_identity(c: &ExtendConfig, seed: u64) -> Res<Check> {
    let (worst, secs) = timed(|| {
        let f = extension_test_function(c)?.map_values(|x, v| v * Complex64::from_polar(1.0, 3.0 * x[1]));
        let g = build_grid(&centered(1.0)?, c.level)?;
        let opts = extend_options(c);
        let zs = FrequencySet::random_in_ball(c.modulation_instances, c.modulation_radius, seed ^ 0x5eed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for (k, z) in zs.points.iter().enumerate() {
            let i = g.squares[rng.gen_range(0..g.len())];
            let set = FrequencySet::ball(c.modulation_radius, c.modulation_points, seed + k as u64);
            worst = worst.max(modulation_shift_check(&f, &i, *z, &set, &opts)?);
        }
        Ok(worst)
    })?;
    let mut ch = Check::new(
        "modulation-identity",
        worst <= c.modulation_tol,
        worst,
        Some(c.modulation_tol),
        format!("{} random (I, z), |z| ≤ {}: max discrepancy {worst:.2e}", c.modulation_instances, c.modulation_radius),
    );
    ch.seconds = secs;
    Ok(ch)
}

/// 6. Parabolic rescaling identity.
pub fn rescaling_identity(c: &RescaleConfig, seed: u64) -> Res<Check> {
    let ((worst, parts), secs) = timed(|| {
        let g = build_grid(&centered(1.0)?, c.level)?;
        let f = SampledFunction::sample(|x| Complex64::new(1.0 + x[0] * x[1], (2.0 * x[0]).sin()), &g, &QuadratureRule::new(c.order, 1))?;
        let set = FrequencySet::ball(c.radius, c.points, seed);
        let mut worst: f64 = 0.0;
        let mut parts = Vec::new();
        for &rho in &c.rhos {
            for &q in &c.qs {
                let r = rescale_identity_check(&f, c.ybar, rho, q, &set, &ExtendOptions::default())?;
                parts.push(format!("ρ={rho} q={q}: {:.1e}", r.discrepancy));
                worst = worst.max(r.discrepancy);
            }
        }
        Ok((worst, parts.join("; ")))
    })?;
    let mut ch = Check::new("rescaling-identity", worst <= c.tol && secs <= c.seconds, worst, Some(c.tol), parts);
    ch.seconds = secs;
    Ok(ch)
}

/// Inputs of the convolution check: two bounded smooth functions on ν-sized squares.
pub fn convolution_inputs(c: &ConvolveConfig) -> Res<(SampledFunction, SampledFunction)> {
    let d = centered(1.0)?;
    let rule = QuadratureRule::new(c.order, 1);
    let make = |idx: [i64; 2], f: &dyn Fn([f64; 2]) -> f64| -> Res<SampledFunction> {
        let q = DyadicSquare::new(&d, c.level, idx);
        let sub = BaseDomain::new(q.lower_left(), q.side())?;
        Ok(SampledFunction::sample_real(f, &build_grid(&sub, 0)?, &rule)?)
    };
    let g1 = make(c.u1_index, &|x| 1.0 + 0.3 * (5.0 * x[0]).sin())?;
    let g2 = make(c.u2_index, &|x| 0.8 + 0.2 * (3.0 * x[1]).cos())?;
    Ok((g1, g2))
}

/// 7. Fourier-product oracle, refinement and mass conservation.
pub fn convolution_oracle(c: &ConvolveConfig, seed: u64) -> Res<(Check, parex_core::measures::ConvolutionDensity)> {
    let t = Instant::now();
    let (g1, g2) = convolution_inputs(c)?;
    let bbox = support_box(&g1.bounding_rect().expect("nonempty"), &g2.bounding_rect().expect("nonempty"));
    let set = FrequencySet::random_in_ball(c.oracle_points, c.xi_radius, seed);
    let opts = ExtendOptions::default();
    let half = (c.counts / 2).max(1);
    let coarse = convolve_pushforwards(&g1, &g2, bbox, [half; 3], c.nu, FiberOptions::default())?;
    let fine = convolve_pushforwards(&g1, &g2, bbox, [c.counts; 3], c.nu, FiberOptions::default())?;
    let oc = fourier_oracle(&coarse, &g1, &g2, &set, &opts)?;
    let of = fourier_oracle(&fine, &g1, &g2, &set, &opts)?;
    let want = g1.integrate() * g2.integrate();
    let mass = (fine.mass() - want).norm() / want.norm();
    let secs = t.elapsed().as_secs_f64();
    let pass = of.relative_l2 <= c.oracle_tol && of.relative_l2 < oc.relative_l2 && mass <= c.mass_tol && secs <= c.seconds;
    let mut ch = Check::new(
        "convolution-oracle",
        pass,
        of.relative_l2,
        Some(c.oracle_tol),
        format!(
            "{} ξ, |ξ| ≤ {}: relative error {:.2e} at {}³ (was {:.2e} at {}³), mass error {mass:.2e}",
            c.oracle_points, c.xi_radius, of.relative_l2, c.counts, oc.relative_l2, half
        ),
    );
    ch.seconds = secs;
    Ok((ch, fine))
}

/// 8. Closed forms of ν(q) and λ(q).
pub fn closed_forms(c: &BgConfig) -> Res<Check> {
    let nu = nu_of_q(c.nu_q)?;
    let lambda = lambda_of_q(c.lambda_q)?;
    Ok(Check::new(
        "closed-forms",
        nu == c.nu_expected && lambda == c.lambda_expected,
        nu,
        Some(c.nu_expected),
        format!("ν({}) = {nu}, λ({}) = {lambda}", c.nu_q, c.lambda_q),
    ))
}

/// The first unordered ν-disjoint triple at `level`.
pub fn first_triple(side: f64, level: u32, nu: f64) -> Res<[DyadicSquare; 3]> {
    let g = build_grid(&centered(side)?, level)?;
    let all = parex_core::grid::nu_disjoint_triples(&g.squares, &g.squares, &g.squares, nu)?;
    all.first().copied().ok_or_else(|| CliError::Core(parex_core::Error::InvalidInput(format!("no {nu}-disjoint triple at level {level}"))))
}

/// 9. Trilinear ratio against the product of linear ratios on shared samples.
pub fn holder_dominance(c: &TrilinearConfig, seed: u64) -> Res<Check> {
    let t = Instant::now();
    let triple = first_triple(1.0, c.square_level, c.nu)?;
    let rule = QuadratureRule::new(c.order, 1);
    let opts = ExtendOptions::default();
    let mut worst = f64::NEG_INFINITY;
    for inst in 0..c.instances as u64 {
        let s = seed.wrapping_mul(1000).wrapping_add(inst);
        let fs: Vec<SampledFunction> =
            triple.iter().enumerate().map(|(k, u)| random_signs(u, c.sign_level, 3 * s + k as u64, &rule)).collect::<Result<_, _>>()?;
        let set = FrequencySet::ball(c.holder_radius, c.holder_points, s);
        // spread q over (3, 6]
        let q = 3.0 + 3.0 * ((inst % 12) as f64 + 1.0) / 12.0;
        let norm = if inst % 2 == 0 { RhsNorm::Linf } else { RhsNorm::Lq };
        let out = trilinear_ratio([&fs[0], &fs[1], &fs[2]], Some((&triple, c.nu)), q, &set, norm, s, &opts)?;
        let prod: f64 = out.linear.iter().product();
        worst = worst.max(out.report.ratio / prod - 1.0);
    }
    let mut ch = Check::new(
        "holder-dominance",
        worst <= c.holder_tol,
        worst,
        Some(c.holder_tol),
        format!("{} instances: max(trilinear/Π linear − 1) = {worst:.2e}", c.instances),
    );
    ch.seconds = t.elapsed().as_secs_f64();
    Ok(ch)
}

fn annular_setup<'a>(kappa: usize, eta: f64) -> Res<AlpertSetup<'a>> {
    Ok(AlpertSetup::plain(Arc::new(SmoothBasis::new(kappa, eta)?)))
}

/// 10. Slope of the annular decay of `|E Q^η_{s₃} f|` in `s₃ − r`.
pub fn kappa_moment_decay(c: &AnnularConfig, seed: u64) -> Res<(Check, Vec<RatioReport>)> {
    let t = Instant::now();
    let d = centered(1.0)?;
    let u = DyadicSquare::new(&d, c.u_level, c.u_index);
    let f = random_signs(&u, c.sign_level, seed, &QuadratureRule::new(2, 1))?;
    let set = FrequencySet::annulus(c.r, c.points, seed);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut reports = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for &k in &c.kappas {
        let rep = annular_decay(&f, &u, &c.scales, c.r, &set, &annular_setup(k, c.eta)?, seed)?;
        let slope = rep.exponent.unwrap_or(f64::NAN);
        let bound = -(k as f64) + c.slope_margin;
        pass &= slope <= bound;
        worst = worst.max(slope + k as f64);
        parts.push(format!("κ={k}: slope {slope:.3} (bound {bound})"));
        reports.push(rep);
    }
    let secs = t.elapsed().as_secs_f64();
    let mut ch = Check::new("kappa-moment-decay", pass && secs <= c.decay_seconds, worst, Some(c.slope_margin), parts.join("; "));
    ch.seconds = secs;
    Ok((ch, reports))
}

/// 11. Annular trilinear LHS as `r − s₂` grows at fixed `s₃`.
pub fn low_scale_decay(c: &AnnularConfig, seed: u64) -> Res<(Check, RatioReport)> {
    let t = Instant::now();
    let d = centered(1.0)?;
    let us = c.low_indices.map(|i| DyadicSquare::new(&d, c.low_level, i));
    if !is_nu_disjoint(&us, c.low_nu) {
        return Err(parex_core::Error::InvalidInput(format!("configured squares are not {}-disjoint", c.low_nu)).into());
    }
    let rule = QuadratureRule::new(2, 1);
    let fs: Vec<SampledFunction> =
        us.iter().enumerate().map(|(k, u)| random_signs(u, c.low_sign_level, seed + k as u64, &rule)).collect::<Result<_, _>>()?;
    let set = FrequencySet::annulus(c.low_r, c.low_points, seed);
    let setup = annular_setup(c.low_kappa, c.eta)?;
    let mut sweep = Vec::new();
    let mut warnings = Vec::new();
    for &s2 in &c.low_s2 {
        let rep = alpert_annular_ratio([&fs[0], &fs[1], &fs[2]], us, [c.low_s1, s2, c.low_s3], c.low_r, c.q, c.delta, &set, &setup, seed)?;
        warnings.extend(rep.warnings);
        sweep.push(parex_core::report::SweepPoint { x: (c.low_r - s2 as i32) as f64, lhs: rep.lhs, rhs: rep.rhs, ratio: rep.ratio });
    }
    let lhs: Vec<f64> = sweep.iter().map(|p| p.lhs).collect();
    let decreasing = lhs.windows(2).all(|w| w[1] < w[0]);
    let mut rep = RatioReport::new("annular-low-scale", c.q, format!("annulus(r={})", c.low_r), 0.0, 0.0, seed).with_sweep(sweep);
    rep.nu = Some(c.low_nu);
    rep.scales = c.low_s2.iter().map(|&s| s as i64).collect();
    warnings.sort();
    warnings.dedup();
    rep.warnings = warnings;
    let steps: Vec<f64> = lhs.windows(2).map(|w| w[1] / w[0]).collect();
    let mut ch = Check::new(
        "low-scale-decay",
        decreasing,
        steps.iter().copied().fold(0.0, f64::max),
        Some(1.0),
        format!("r − s₂ = {:?}: LHS {}", rep.sweep.iter().map(|p| p.x).collect::<Vec<_>>(), fmt_list(&lhs)),
    );
    ch.seconds = t.elapsed().as_secs_f64();
    Ok((ch, rep))
}

/// 12. `2^{3λ} max_z Σ_a ζ_λ(z − a) ≤ cap`.
pub fn zeta_cap(c: &BgConfig, seed: u64) -> Res<Check> {
    let t = Instant::now();
    let z = Zeta { sigma: c.zeta_sigma };
    let caps: Vec<f64> = c.zeta_lambdas.iter().map(|&l| z.lattice_cap(l, c.zeta_radius, c.zeta_points, seed)).collect();
    let worst = caps.iter().copied().fold(0.0, f64::max);
    let mut ch = Check::new(
        "zeta-lattice-cap",
        worst <= c.zeta_cap,
        worst,
        Some(c.zeta_cap),
        format!("σ = {}, λ ∈ {:?}, R = {}: C = {}", c.zeta_sigma, c.zeta_lambdas, c.zeta_radius, fmt_list(&caps)),
    );
    ch.seconds = t.elapsed().as_secs_f64();
    Ok(ch)
}

/// 13. Martingale Monte Carlo decay exponent (reported; passes when positive).
pub fn martingale_exponent(c: &EpsConfig, seed: u64) -> Res<(Check, RatioReport)> {
    let t = Instant::now();
    let d = centered(1.0)?;
    let u = DyadicSquare::new(&d, c.u_level, c.u_index);
    let setup = annular_setup(c.kappa, c.eta)?;
    let rep = martingale_sweep(&u, &c.scales, c.q, c.draws, c.ball_points, seed, &QuadratureRule::new(2, 1), &setup)?;
    let eps = rep.exponent.unwrap_or(f64::NAN);
    let mut ch = Check::new(
        "martingale-exponent",
        eps > 0.0,
        eps,
        Some(0.0),
        format!("q={} s ∈ {:?}, {} draws: ε̂ = {eps:.3}", c.q, c.scales, c.draws),
    );
    ch.seconds = t.elapsed().as_secs_f64();
    Ok((ch, rep))
}
