use std::sync::Arc;

use num_complex::Complex64;
use parex_core::alpert::{pseudoproject, FrameLimits, FrameOperator, MeshSpec, Projection, SmoothBasis, SmoothExpansion};
use parex_core::grid::{BaseDomain, DyadicSquare};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame(kappa: usize, eta: f64, s_max: u32) -> FrameOperator {
    let sb = Arc::new(SmoothBasis::new(kappa, eta).unwrap());
    FrameOperator::build(sb, &BaseDomain::unit(), s_max, MeshSpec::STANDARD, FrameLimits::default()).unwrap()
}

fn level_cuts(s: u32) -> Vec<[f64; 2]> {
    let n = 1 << s;
    (0..=n).map(|k| [k as f64 / n as f64; 2]).collect()
}

#[test]
fn reconstruction_on_truncated_span() {
    let fr = frame(2, 0.05, 3);
    assert!(fr.condition < 1e3, "condition {}", fr.condition);
    assert!(fr.deviation > 0.0 && fr.deviation < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c: Vec<Complex64> = (0..fr.size()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let e = fr.reconstruction_error(&c).unwrap();
    assert!(e < 1e-6, "reconstruction {e}");
    let r = fr.square_function_ratio(&c, MeshSpec::STANDARD).unwrap();
    assert!(r > 0.2 && r < 5.0, "square function ratio {r}");
}

#[test]
fn columns_match_finely_sampled_smooth_wavelets() {
    let fr = frame(2, 0.05, 2);
    let d = fr.smooth.dim();
    let dom = BaseDomain::unit();
    for (q, a) in [(DyadicSquare::new(&dom, 1, [1, 0]), 4), (DyadicSquare::new(&dom, 2, [0, 3]), 1), (DyadicSquare::root(&dom), 7)] {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d];
        coeffs[a] = Complex64::new(1.0, 0.0);
        let e = SmoothExpansion { smooth: fr.smooth.clone(), terms: vec![(q, coeffs)] };
        let s = e.term_sampled(0, MeshSpec::FINE, &level_cuts(3));
        let col = fr.analyze(&s);
        let o = fr.offset(&q).unwrap() + a;
        for (r, v) in col.iter().enumerate() {
            assert!((v.re - fr.matrix[(r, o)]).abs() < 1e-8, "row {r}: {} vs {}", v.re, fr.matrix[(r, o)]);
        }
    }
}

#[test]
fn full_mode_reproduces_a_smooth_wavelet() {
    let fr = frame(2, 0.05, 2);
    let d = fr.smooth.dim();
    let dom = BaseDomain::unit();
    let q = DyadicSquare::new(&dom, 2, [1, 2]);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d];
    coeffs[2] = Complex64::new(1.0, 0.0);
    let e = SmoothExpansion { smooth: fr.smooth.clone(), terms: vec![(q, coeffs.clone())] };
    let f = e.term_sampled(0, MeshSpec::FINE, &level_cuts(3));
    let p = pseudoproject(&f, &q, &fr.smooth, Projection::Full(&fr)).unwrap();
    for (x, y) in p.terms[0].1.iter().zip(&coeffs) {
        assert!((x - y).norm() < 1e-6);
    }
    let other = DyadicSquare::new(&dom, 2, [3, 3]);
    let p = pseudoproject(&f, &other, &fr.smooth, Projection::Full(&fr)).unwrap();
    assert!(p.terms[0].1.iter().all(|c| c.norm() < 1e-6));
}

#[test]
fn eta_to_zero_approaches_identity() {
    let a = frame(1, 0.05, 2).deviation;
    let b = frame(1, 0.0125, 2).deviation;
    assert!(b < a, "{b} !< {a}");
}

#[test]
fn limits_are_enforced() {
    let sb = Arc::new(SmoothBasis::new(2, 0.05).unwrap());
    assert!(FrameOperator::build(sb.clone(), &BaseDomain::unit(), 5, MeshSpec::COARSE, FrameLimits::default()).is_err());
    let big = Arc::new(SmoothBasis::new(2, 0.2).unwrap());
    assert!(FrameOperator::build(big, &BaseDomain::unit(), 1, MeshSpec::COARSE, FrameLimits::default()).is_err());
}
