//! Weights `w_I^a(f)` and the Case 1/2/3 classifier.

use serde::Serialize;

use super::params::BGParams;
use crate::error::{invalid, Error, Result};
use crate::extension::{extend, ExtendOptions, FrequencySet};
use crate::funcrep::SampledFunction;
use crate::grid::{DyadicSquare, Grid};

/// Monte Carlo controls for [`weight_field`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightOptions {
    pub samples: usize,
    /// Cap on `samples × squares`.
    pub max_evaluations: usize,
    pub seed: u64,
    pub extend: ExtendOptions,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self { samples: 256, max_evaluations: 4_000_000, seed: 0, extend: ExtendOptions::default() }
    }
}

/// Weights of every square of `G_λ[U]` at one center `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightField {
    pub center: [f64; 3],
    pub lambda: u32,
    pub squares: Vec<DyadicSquare>,
    pub weights: Vec<f64>,
    pub argmax: usize,
    pub max_weight: f64,
    /// `max_I w_I / (2^{−2λ}‖f‖_∞)`, with `2^{−λ}` measured in units of the root side.
    pub cap_constant: f64,
}

/// `w_I^a ≈ (1/|B(a, 2^λ)|) ∫_{B(a,2^λ)} |E f_I|`, by Monte Carlo on a shared sample.
pub fn weight_field(f: &SampledFunction, grid: &Grid, a: [f64; 3], opts: &WeightOptions) -> Result<WeightField> {
    let lambda = grid.level;
    let n = opts.samples * grid.len();
    if n > opts.max_evaluations {
        return Err(Error::Capacity(format!("weight field needs {n} evaluations (cap {})", opts.max_evaluations)));
    }
    if opts.samples == 0 {
        return invalid("weight field needs at least one sample");
    }
    let r = (lambda as f64).exp2();
    let set = FrequencySet::random_in_ball(opts.samples, r, opts.seed).map_points(|x| [x[0] + a[0], x[1] + a[1], x[2] + a[2]]);
    let mut squares: Vec<DyadicSquare> = grid.squares.clone();
    squares.sort_by_key(|q| q.index);
    let mut weights = Vec::with_capacity(squares.len());
    for q in &squares {
        let fi = f.restrict(q)?;
        if fi.values.iter().all(|v| v.norm_sqr() == 0.0) {
            weights.push(0.0);
            continue;
        }
        let e = extend(&fi, &set, &opts.extend)?;
        weights.push(e.values.iter().map(|v| v.norm()).sum::<f64>() / opts.samples as f64);
    }
    // lexicographic tie-break: the first maximal square in index order
    let mut argmax = 0;
    for (k, w) in weights.iter().enumerate() {
        if *w > weights[argmax] {
            argmax = k;
        }
    }
    let max_weight = weights[argmax];
    let fmax = f.max_abs();
    let unit = grid.domain.side * (-(lambda as f64)).exp2();
    let cap_constant = if fmax > 0.0 { max_weight / (unit * unit * fmax) } else { 0.0 };
    Ok(WeightField { center: a, lambda, squares, weights, argmax, max_weight, cap_constant })
}

/// Outcome of the Bourgain–Guth pigeonholing at one center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CaseLabel {
    /// Three squares of near-maximal weight, pairwise separated.
    Case1 { triple: [DyadicSquare; 3] },
    /// Every far square has small weight.
    Case2,
    /// A far square `witness` keeps weight above `2^{−δλ} w_*`.
    Case3 { star: DyadicSquare, witness: DyadicSquare },
}

fn dist(a: &DyadicSquare, b: &DyadicSquare) -> f64 {
    let (p, q) = (a.center(), b.center());
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Deterministic classification in index order.
pub fn classify_center(wf: &WeightField, params: &BGParams) -> Result<CaseLabel> {
    params.validate()?;
    if wf.lambda != params.lambda {
        return invalid(format!("weight field built at λ = {}, parameters have λ = {}", wf.lambda, params.lambda));
    }
    let l = params.lambda as f64;
    let w_star = wf.max_weight;
    if w_star <= 0.0 {
        return Ok(CaseLabel::Case2);
    }
    let sep = params.nu();
    let big: Vec<usize> = (0..wf.weights.len()).filter(|&k| wf.weights[k] > (-params.alpha * l).exp2() * w_star).collect();
    for (x, &i) in big.iter().enumerate() {
        for (y, &j) in big.iter().enumerate().skip(x + 1) {
            if dist(&wf.squares[i], &wf.squares[j]) <= sep {
                continue;
            }
            for &k in big.iter().skip(y + 1) {
                if dist(&wf.squares[i], &wf.squares[k]) > sep && dist(&wf.squares[j], &wf.squares[k]) > sep {
                    return Ok(CaseLabel::Case1 { triple: [wf.squares[i], wf.squares[j], wf.squares[k]] });
                }
            }
        }
    }
    let star = wf.squares[wf.argmax];
    let far = (-params.gamma * params.lambda_prime as f64).exp2();
    let small = (-params.delta * l).exp2() * w_star;
    for (q, w) in wf.squares.iter().zip(&wf.weights) {
        if dist(q, &star) > far && *w > small {
            return Ok(CaseLabel::Case3 { star, witness: *q });
        }
    }
    Ok(CaseLabel::Case2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcrep::QuadratureRule;
    use crate::grid::{build_grid, BaseDomain};
    use num_complex::Complex64;

    fn bumps(centers: &[[f64; 2]]) -> SampledFunction {
        let d = BaseDomain::centered(1.0).unwrap();
        let g = build_grid(&d, 3).unwrap();
        let cs = centers.to_vec();
        SampledFunction::sample(
            move |x| {
                let mut s = Complex64::new(0.0, 0.0);
                for c in &cs {
                    let r2 = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / 0.1f64.powi(2);
                    if r2 < 1.0 {
                        s += Complex64::from_polar((-1.0 / (1.0 - r2)).exp(), 3.0 * x[0]);
                    }
                }
                s
            },
            &g,
            &QuadratureRule::new(6, 1),
        )
        .unwrap()
    }

    fn field(f: &SampledFunction) -> WeightField {
        let g = build_grid(&BaseDomain::centered(1.0).unwrap(), 2).unwrap();
        weight_field(f, &g, [1.0, -2.0, 0.5], &WeightOptions { samples: 64, ..Default::default() }).unwrap()
    }

    fn params() -> BGParams {
        BGParams { separation_prefactor: 1.0, ..BGParams::with_lambda_prime(1) }
    }

    #[test]
    fn single_square_support_is_case_2() {
        let wf = field(&bumps(&[[-0.375, -0.375]]));
        assert_eq!(wf.squares[wf.argmax].index, [0, 0]);
        assert!(wf.weights.iter().enumerate().all(|(k, w)| k == wf.argmax || *w == 0.0));
        assert!(wf.cap_constant <= 1.0);
        assert_eq!(classify_center(&wf, &params()).unwrap(), CaseLabel::Case2);
    }

    #[test]
    fn three_far_bumps_are_case_1() {
        let wf = field(&bumps(&[[-0.375, -0.375], [0.375, -0.375], [-0.375, 0.375]]));
        match classify_center(&wf, &params()).unwrap() {
            CaseLabel::Case1 { triple } => {
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    assert!(dist(&triple[a], &triple[b]) > params().nu());
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_far_bumps_are_case_3() {
        let wf = field(&bumps(&[[-0.375, -0.375], [0.375, 0.375]]));
        match classify_center(&wf, &params()).unwrap() {
            CaseLabel::Case3 { star, witness } => {
                let mut got = [star.index, witness.index];
                got.sort();
                assert_eq!(got, [[0, 0], [3, 3]]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lambda_mismatch_is_rejected() {
        let wf = field(&bumps(&[[0.1, 0.1]]));
        assert!(classify_center(&wf, &BGParams::default()).is_err());
    }
}
