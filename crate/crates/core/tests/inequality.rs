use std::sync::Arc;

use num_complex::Complex64;
use parex_core::alpert::SmoothBasis;
use parex_core::extension::{ExtendOptions, FrequencySet};
use parex_core::funcrep::{QuadratureRule, SampledFunction};
use parex_core::grid::{build_grid, is_nu_disjoint, BaseDomain, DyadicSquare};
use parex_core::inequality::*;

fn centered() -> BaseDomain {
    BaseDomain::centered(1.0).unwrap()
}

#[test]
fn rescaling_identity_holds_on_matched_samples() {
    let d = centered();
    let rule = QuadratureRule::new(6, 1);
    let g = build_grid(&d, 3).unwrap();
    let f = SampledFunction::sample(|x| Complex64::new(1.0 + x[0] * x[1], (2.0 * x[0]).sin()), &g, &rule).unwrap();
    let set = FrequencySet::ball(32.0, 512, 4);
    for rho in [0.5, 0.25] {
        for q in [3.5, 4.0, 6.0] {
            let c = rescale_identity_check(&f, [0.125, -0.125], rho, q, &set, &ExtendOptions::default()).unwrap();
            eprintln!("rho {rho} q {q}: {:.3e}", c.discrepancy);
            assert!(c.discrepancy <= 1e-3);
        }
    }
}

#[test]
fn annular_decay_slope() {
    let d = centered();
    let u = DyadicSquare::new(&d, 5, [16, 16]);
    let rule = QuadratureRule::new(2, 1);
    let f = random_signs(&u, 12, 9, &rule).unwrap();
    let set = FrequencySet::annulus(6, 256, 3);
    for kappa in [2, 3] {
        let setup = AlpertSetup::plain(Arc::new(SmoothBasis::new(kappa, 0.05).unwrap()));
        let t = std::time::Instant::now();
        let rep = annular_decay(&f, &u, &[7, 8, 9, 10], 6, &set, &setup, 1).unwrap();
        eprintln!("kappa {kappa}: slope {:?} {:?} in {:?}", rep.exponent, rep.sweep.iter().map(|p| p.ratio).collect::<Vec<_>>(), t.elapsed());
        assert!(rep.exponent.unwrap() <= -(kappa as f64) + 1.0);
    }
}

/// At desk scale the low-scale sweep is outside the regime where the
/// smoothness of the convolution gives decay, so only sanity is asserted here.
#[test]
fn annular_ratio_contract() {
    let d = centered();
    let us = [DyadicSquare::new(&d, 3, [2, 4]), DyadicSquare::new(&d, 3, [5, 4]), DyadicSquare::new(&d, 3, [4, 1])];
    assert!(is_nu_disjoint(&us, 0.125));
    let rule = QuadratureRule::new(2, 1);
    let fs: Vec<SampledFunction> = us.iter().enumerate().map(|(k, u)| random_signs(u, 7, 20 + k as u64, &rule).unwrap()).collect();
    let set = FrequencySet::annulus(7, 256, 5);
    let setup = AlpertSetup::plain(Arc::new(SmoothBasis::new(2, 0.05).unwrap()));
    let rep = alpert_annular_ratio([&fs[0], &fs[1], &fs[2]], us, [3, 5, 7], 7, 4.0, 0.5, &set, &setup, 1).unwrap();
    assert!(rep.lhs.is_finite() && rep.lhs > 0.0);
    assert_eq!(rep.scales, vec![3, 5, 7]);
    // κ = 2 never exceeds 20/δ.
    assert!(rep.warnings.iter().any(|w| w.contains("20/δ")));
    let zero = fs[1].zeros_like();
    let z = alpert_annular_ratio([&fs[0], &zero, &fs[2]], us, [3, 5, 7], 7, 4.0, 0.5, &set, &setup, 1).unwrap();
    assert_eq!(z.ratio, 0.0);
    assert!(alpert_annular_ratio([&fs[0], &fs[1], &fs[2]], us, [5, 3, 7], 7, 4.0, 0.5, &set, &setup, 1).is_err());
}

#[test]
fn martingale_exponent() {
    let d = centered();
    let u = DyadicSquare::new(&d, 2, [1, 1]);
    let rule = QuadratureRule::new(2, 1);
    let setup = AlpertSetup::plain(Arc::new(SmoothBasis::new(2, 0.05).unwrap()));
    let t = std::time::Instant::now();
    let rep = martingale_sweep(&u, &[3, 4, 5, 6], 4.0, 128, 512, 2, &rule, &setup).unwrap();
    eprintln!("eps {:?} {} in {:?}", rep.exponent, rep.detail, t.elapsed());
    assert!(rep.exponent.unwrap() > 0.0);
}

#[test]
fn discrete_holder_dominance() {
    let d = centered();
    let rule = QuadratureRule::new(3, 1);
    let us = [DyadicSquare::new(&d, 3, [2, 4]), DyadicSquare::new(&d, 3, [5, 4]), DyadicSquare::new(&d, 3, [4, 1])];
    let opts = ExtendOptions::default();
    for inst in 0..50u64 {
        let fs: Vec<SampledFunction> = us.iter().enumerate().map(|(k, u)| random_signs(u, 5, 3 * inst + k as u64, &rule).unwrap()).collect();
        let set = FrequencySet::ball(16.0, 64, inst);
        let q = 3.0 + (inst % 7) as f64 * 0.5 + 0.25;
        let out = trilinear_ratio([&fs[0], &fs[1], &fs[2]], Some((&us, 0.125)), q, &set, RhsNorm::Linf, inst, &opts).unwrap();
        let prod: f64 = out.linear.iter().product();
        assert!(out.report.ratio <= prod * (1.0 + 1e-12), "instance {inst}: {} > {prod}", out.report.ratio);
    }
}

#[test]
fn trilinear_zero_and_disjointness_gate() {
    let d = centered();
    let rule = QuadratureRule::new(3, 1);
    let us = [DyadicSquare::new(&d, 3, [2, 4]), DyadicSquare::new(&d, 3, [5, 4]), DyadicSquare::new(&d, 3, [4, 1])];
    let f = random_signs(&us[0], 4, 1, &rule).unwrap();
    let z = f.zeros_like();
    let set = FrequencySet::ball(8.0, 32, 1);
    let opts = ExtendOptions::default();
    let out = trilinear_ratio([&f, &z, &f], None, 4.0, &set, RhsNorm::Lq, 0, &opts).unwrap();
    assert_eq!(out.report.ratio, 0.0);
    let close = [us[0], DyadicSquare::new(&d, 3, [3, 4]), us[2]];
    assert!(trilinear_ratio([&f, &f, &f], Some((&close, 0.125)), 4.0, &set, RhsNorm::Linf, 0, &opts).is_err());
}

#[test]
fn qr_small_ball_and_monotone_sweep() {
    let d = centered();
    let rule = QuadratureRule::new(4, 1);
    let opts = ExtendOptions::default();
    let fam = members(&Family::Constants, &d, 0, &rule).unwrap();
    let r = 0.5;
    let set = FrequencySet::ball(r, 400, 2);
    let rep = qr_estimate(4.0, &set, &fam, 0, &opts).unwrap();
    let vol = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
    // |Ef| ≥ cos(R·max|Φ|)·|U| on B(0,R).
    let floor = (r * 0.75f64.sqrt()).cos() * vol.powf(0.25);
    assert!(rep.ratio >= floor * 0.99, "{} < {floor}", rep.ratio);
    let sweep = qr_sweep(4.0, &[3, 4, 5, 6, 7], 48, &Family::RandomSigns { level: 3, count: 3 }, &d, 7, &rule, &opts).unwrap();
    for w in sweep.sweep.windows(2) {
        assert!(w[1].ratio >= w[0].ratio);
    }
    assert!(sweep.exponent.is_some());
}

#[test]
fn rescaling_prefactor_and_refinement() {
    let d = centered();
    let g = build_grid(&d, 3).unwrap();
    let set = FrequencySet::ball(16.0, 256, 1);
    let one = |_: [f64; 2]| Complex64::new(1.0, 0.0);
    let coarse = SampledFunction::sample(one, &g, &QuadratureRule::new(2, 1)).unwrap();
    let c = rescale_identity_check(&coarse, [0.125, 0.125], 0.5, 4.0, &set, &ExtendOptions::default()).unwrap();
    assert!((c.prefactor - 0.5).abs() < 1e-15);
    assert!(c.discrepancy <= 1e-3);
    let fine = SampledFunction::sample(one, &g, &QuadratureRule::new(6, 2)).unwrap();
    let e = rescale_identity_check(&fine, [0.125, 0.125], 0.5, 4.0, &set, &ExtendOptions::default()).unwrap();
    assert!(e.discrepancy <= c.discrepancy.max(1e-13));
    assert!(rescale_identity_check(&coarse, [0.4, 0.4], 0.5, 4.0, &set, &ExtendOptions::default()).is_err());
}

#[test]
fn square_function_properties() {
    let d = BaseDomain::unit();
    let k = DyadicSquare::root(&d);
    let rule = QuadratureRule::new(3, 1);
    let f = random_signs(&k, 4, 3, &rule).unwrap();
    let setup = AlpertSetup::plain(Arc::new(SmoothBasis::new(2, 0.05).unwrap()));
    let set = FrequencySet::ball(8.0, 64, 9);
    let u0 = d.rect();
    let sq = square_function(&f, &k, 2, &u0, &set, &setup, parex_core::alpert::MeshSpec::COARSE).unwrap();
    assert_eq!(sq.terms.len(), 16);
    for t in &sq.terms {
        for (v, s) in t.iter().zip(&sq.values) {
            assert!(v.norm() <= s * (1.0 + 1e-12));
        }
    }
    let kh = sq.khintchine_ratio(256, 4);
    assert!((1.0 / 3.0..=3.0).contains(&kh), "{kh}");

    // A single square: the square function is the modulus of its one term.
    let one = square_function(&f, &DyadicSquare::new(&d, 2, [1, 2]), 2, &u0, &set, &setup, parex_core::alpert::MeshSpec::COARSE).unwrap();
    assert_eq!(one.terms.len(), 1);
    for (v, s) in one.terms[0].iter().zip(&one.values) {
        assert!((v.norm() - s).abs() <= 1e-14 * s.max(1.0));
    }
}

#[test]
fn martingale_single_square_is_deterministic() {
    let d = centered();
    let u = DyadicSquare::new(&d, 2, [1, 1]);
    let rule = QuadratureRule::new(2, 1);
    let f = random_signs(&u, 4, 1, &rule).unwrap();
    let setup = AlpertSetup::plain(Arc::new(SmoothBasis::new(2, 0.05).unwrap()));
    let set = FrequencySet::ball(8.0, 128, 1);
    let mc = martingale_mc(&f, &u, 2, 4.0, 64, 5, &set, &setup).unwrap();
    assert_eq!(mc.squares, 1);
    assert!(mc.stderr <= 1e-12 * mc.mean);
    assert!(martingale_mc(&f, &u, 2, 4.0, 32, 5, &set, &setup).is_err());
    let many = martingale_mc(&f, &u, 4, 4.0, 256, 5, &set, &setup).unwrap();
    // Doubling the draws shrinks the standard error by about √2.
    let r = many.stderr_half / many.stderr;
    assert!(r > 1.0 && r < 2.0, "{r}");
}
