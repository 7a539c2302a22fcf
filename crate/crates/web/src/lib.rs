//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every function returns a flat row-major `Float64Array` of length `n·n`
//! (or `counts²` for the density slice). Errors become JS exceptions.

use std::sync::Arc;

use num_complex::Complex64;
use parex_core::alpert::SmoothBasis;
use parex_core::extension::{extend, ExtendOptions, FrequencySet};
use parex_core::funcrep::{QuadratureRule, SampledFunction};
use parex_core::grid::{build_grid, BaseDomain, DyadicSquare};
use parex_core::measures::{convolve_pushforwards, support_box, FiberOptions};
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

/// Test function on `[-1/2, 1/2)²`: 0 is the indicator, 1 a smooth bump, 2 a modulated bump.
fn source(kind: u32) -> parex_core::Result<SampledFunction> {
    let g = build_grid(&BaseDomain::centered(1.0)?, 2)?;
    let rule = QuadratureRule::new(8, 1);
    match kind {
        0 => SampledFunction::sample_real(|_| 1.0, &g, &rule),
        1 => SampledFunction::sample_real(|x| (1.0 - 4.0 * x[0] * x[0]) * (1.0 - 4.0 * x[1] * x[1]), &g, &rule),
        _ => SampledFunction::sample(
            |x| Complex64::from_polar((1.0 - 4.0 * x[0] * x[0]) * (1.0 - 4.0 * x[1] * x[1]), 12.0 * x[0]),
            &g,
            &rule,
        ),
    }
}

pub fn extension_slice_native(kind: u32, xi3: f64, radius: f64, n: usize) -> parex_core::Result<Vec<f64>> {
    let f = source(kind)?;
    let ax = axis(-radius, radius, n);
    let pts = ax.iter().flat_map(|&a| ax.iter().map(move |&b| [a, b, xi3])).collect();
    let e = extend(&f, &FrequencySet::explicit(pts), &ExtendOptions::default())?;
    Ok(e.abs())
}

/// `|Ef(ξ₁, ξ₂, ξ₃)|` on an `n × n` grid of `[-radius, radius]²` at fixed `ξ₃`.
#[wasm_bindgen]
pub fn extension_slice(kind: u32, xi3: f64, radius: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    extension_slice_native(kind, xi3, radius, n).map_err(js)
}

pub fn wavelet_count_native(kappa: usize) -> parex_core::Result<usize> {
    Ok(SmoothBasis::new(kappa, 0.1)?.dim())
}

/// Number of smooth mother wavelets for `κ`.
#[wasm_bindgen]
pub fn wavelet_count(kappa: usize) -> Result<usize, JsValue> {
    wavelet_count_native(kappa).map_err(js)
}

pub fn smooth_wavelet_native(kappa: usize, eta: f64, index: usize, n: usize) -> parex_core::Result<Vec<f64>> {
    let sb = Arc::new(SmoothBasis::new(kappa, eta)?);
    if index >= sb.dim() {
        return Err(parex_core::Error::InvalidInput(format!("index {index} out of range {}", sb.dim())));
    }
    let ax = axis(-0.25, 1.25, n);
    Ok(sb.eval_grid(&ax, &ax).swap_remove(index))
}

/// Smooth mother wavelet `index` on `[-1/4, 5/4]²`.
#[wasm_bindgen]
pub fn smooth_wavelet(kappa: usize, eta: f64, index: usize, n: usize) -> Result<Vec<f64>, JsValue> {
    smooth_wavelet_native(kappa, eta, index, n).map_err(js)
}

pub fn convolution_slice_native(nu: f64, counts: usize, k: usize) -> parex_core::Result<Vec<f64>> {
    let d = BaseDomain::centered(1.0)?;
    let rule = QuadratureRule::new(6, 1);
    let make = |idx: [i64; 2], f: &dyn Fn([f64; 2]) -> f64| -> parex_core::Result<SampledFunction> {
        let q = DyadicSquare::new(&d, 3, idx);
        SampledFunction::sample_real(f, &build_grid(&BaseDomain::new(q.lower_left(), q.side())?, 0)?, &rule)
    };
    let g1 = make([6, 4], &|x| 1.0 + 0.3 * (5.0 * x[0]).sin())?;
    let g2 = make([1, 3], &|x| 0.8 + 0.2 * (3.0 * x[1]).cos())?;
    let (r1, r2) = (g1.bounding_rect().expect("nonempty"), g2.bounding_rect().expect("nonempty"));
    let dens = convolve_pushforwards(&g1, &g2, support_box(&r1, &r2), [counts; 3], nu, FiberOptions::default())?;
    let k = k.min(counts - 1);
    Ok((0..counts).flat_map(|i| (0..counts).map(move |j| (i, j))).map(|(i, j)| dens.value(i, j, k).norm()).collect())
}

/// `|density|` of the difference convolution on the plane `a₃ = k` of a `counts³` grid.
#[wasm_bindgen]
pub fn convolution_slice(nu: f64, counts: usize, k: usize) -> Result<Vec<f64>, JsValue> {
    convolution_slice_native(nu, counts, k).map_err(js)
}
