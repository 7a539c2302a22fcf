//! Alpert multiwavelets, the mollifier, smooth wavelets, the truncated frame operator
//! and the pseudoprojections `Δ^η_{I;κ}` and `Q^η_{s,K;κ}`.

pub mod basis;
pub mod frame;
pub mod mollifier;
pub mod smooth;

use num_complex::Complex64;

pub use basis::{build_alpert_basis, AlpertBasis, MotherBasis, PiecewisePolynomial};
pub use frame::{build_frame_operator, FrameLimits, FrameOperator};
pub use mollifier::{build_mollifier, Mollifier};
pub use smooth::{smooth_wavelet, ExtendRoute, MeshSpec, SmoothBasis, SmoothExpansion, SmoothWavelet};

use crate::error::{invalid, Result};
use crate::funcrep::SampledFunction;
use crate::grid::DyadicSquare;
use std::sync::Arc;

/// How coefficients of a pseudoprojection are obtained.
#[derive(Debug, Clone, Copy)]
pub enum Projection<'a> {
    /// `S_η⁻¹` replaced by the identity: coefficients are `⟨f, h^a_I⟩`.
    Plain,
    /// Coefficients `⟨S_η⁻¹ f, h^a_I⟩` through the truncated frame operator.
    Full(&'a FrameOperator),
}

/// Plain coefficients `⟨f, h^a_I⟩` for every `I ∈ G_s[K]`, in row-major order.
pub fn plain_coefficients(
    f: &SampledFunction,
    k: &DyadicSquare,
    s: u32,
    basis: &MotherBasis,
) -> Result<Vec<(DyadicSquare, Vec<Complex64>)>> {
    if s < k.level {
        return invalid(format!("scale {s} is coarser than the square level {}", k.level));
    }
    let squares = k.descendants(s);
    let n = 1i64 << (s - k.level);
    let d = basis.dim();
    let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); d]; squares.len()];
    let kp = k.lower_left();
    let l = squares[0].side();
    let mut pv = vec![0.0; d];
    for ((x, w), v) in f.nodes().zip(&f.values) {
        if *v == Complex64::new(0.0, 0.0) {
            continue;
        }
        let i = ((x[0] - kp[0]) / l).floor() as i64;
        let j = ((x[1] - kp[1]) / l).floor() as i64;
        if !(0..n).contains(&i) || !(0..n).contains(&j) {
            continue;
        }
        let q = &squares[(i * n + j) as usize];
        let p = q.lower_left();
        basis.eval_all([(x[0] - p[0]) / l, (x[1] - p[1]) / l], &mut pv);
        let c = &mut coeffs[(i * n + j) as usize];
        for b in 0..d {
            c[b] += v * (w * pv[b] / l);
        }
    }
    Ok(squares.into_iter().zip(coeffs).collect())
}

/// `Δ^η_{I;κ} f = Σ_a ⟨S_η⁻¹ f, h^a_I⟩ h^{a,η}_I` as a one-term smooth expansion.
pub fn pseudoproject(
    f: &SampledFunction,
    i: &DyadicSquare,
    smooth: &Arc<SmoothBasis>,
    mode: Projection<'_>,
) -> Result<SmoothExpansion> {
    let coeffs = match mode {
        Projection::Plain => plain_coefficients(f, i, i.level, &smooth.basis)?.remove(0).1,
        Projection::Full(frame) => {
            let o = frame
                .offset(i)
                .ok_or_else(|| crate::error::Error::InvalidInput(format!("square {:?} outside the frame truncation", i.index)))?;
            let c = frame.solve(&frame.analyze(f))?;
            c[o..o + smooth.dim()].to_vec()
        }
    };
    Ok(SmoothExpansion { smooth: smooth.clone(), terms: vec![(*i, coeffs)] })
}

/// `Q^η_{s,K;κ} f = Σ_{I ∈ G_s[K]} Δ^η_{I;κ} f`.
pub fn scale_projection(
    f: &SampledFunction,
    k: &DyadicSquare,
    s: u32,
    smooth: &Arc<SmoothBasis>,
    mode: Projection<'_>,
) -> Result<SmoothExpansion> {
    if s < k.level {
        return invalid(format!("ℓ(K) = 2^-{} is smaller than 2^-{s}", k.level));
    }
    let terms = match mode {
        Projection::Plain => plain_coefficients(f, k, s, &smooth.basis)?,
        Projection::Full(frame) => {
            let c = frame.solve(&frame.analyze(f))?;
            let mut out = Vec::new();
            for q in k.descendants(s) {
                let o = frame
                    .offset(&q)
                    .ok_or_else(|| crate::error::Error::InvalidInput(format!("level {s} outside the frame truncation")))?;
                out.push((q, c[o..o + smooth.dim()].to_vec()));
            }
            out
        }
    };
    Ok(SmoothExpansion { smooth: smooth.clone(), terms })
}

/// `max_{|β|<κ} |∫ g x^β dx|` by the function's own quadrature.
pub fn moment_check(g: &SampledFunction, kappa: usize) -> f64 {
    basis::monomials(kappa)
        .iter()
        .map(|b| {
            g.integrate_against(|x| Complex64::new(x[0].powi(b[0] as i32) * x[1].powi(b[1] as i32), 0.0))
                .norm()
        })
        .fold(0.0, f64::max)
}
