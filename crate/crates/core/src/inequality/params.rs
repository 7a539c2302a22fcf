//! Parameter formulas `ν(q)`, `λ(q)` and the Bourgain–Guth parameter set.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn check_q(q: f64) -> Result<()> {
    if !(q > 3.0) {
        return invalid(format!("q must exceed 3, got {q}"));
    }
    Ok(())
}

/// `ν = 2^{10}·2^{−3q/(q−3)}`. Tends to 128 as `q → ∞`; in practice `ν` is capped
/// by `diam Φ(U)`.
pub fn nu_of_q(q: f64) -> Result<f64> {
    check_q(q)?;
    Ok((10.0 - 3.0 * q / (q - 3.0)).exp2())
}

/// `λ = ⌈3q/(q−3)⌉`.
pub fn lambda_of_q(q: f64) -> Result<u32> {
    check_q(q)?;
    let x = 3.0 * q / (q - 3.0);
    // exact integers such as q = 6 must not round up
    Ok((x - 1e-12 * x).ceil() as u32)
}

/// Bourgain–Guth parameters. `ν = separation_prefactor · 2^{−βλ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BGParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda: u32,
    pub lambda_prime: u32,
    /// `2^{10}` in the paper.
    pub separation_prefactor: f64,
}

impl Default for BGParams {
    fn default() -> Self {
        Self { alpha: 2.0, beta: 1.0, gamma: 2.0, delta: 2.0, lambda: 4, lambda_prime: 2, separation_prefactor: 1024.0 }
    }
}

impl BGParams {
    /// Defaults with `λ′` the smallest integer above `(3/2)·q/(q−3)` and `λ = 2λ′`.
    pub fn for_q(q: f64) -> Result<Self> {
        check_q(q)?;
        let lp = (1.5 * q / (q - 3.0)).floor() as u32 + 1;
        Ok(Self { lambda: 2 * lp, lambda_prime: lp, ..Self::default() })
    }

    /// Default exponents at a given `λ′` (`λ = 2λ′`).
    pub fn with_lambda_prime(lp: u32) -> Self {
        Self { lambda: 2 * lp, lambda_prime: lp, ..Self::default() }
    }

    pub fn nu(&self) -> f64 {
        self.separation_prefactor * (-self.beta * self.lambda as f64).exp2()
    }

    pub fn validate(&self) -> Result<()> {
        if [self.alpha, self.beta, self.gamma, self.delta, self.separation_prefactor].iter().any(|v| !(*v > 0.0)) {
            return invalid("BG exponents and prefactor must be positive");
        }
        if self.lambda == 0 || self.lambda_prime == 0 {
            return invalid("λ and λ′ must be positive");
        }
        Ok(())
    }

    /// `λ′ > (3/2)·q/(q−3)`.
    pub fn admissible_for(&self, q: f64) -> Result<bool> {
        check_q(q)?;
        Ok(self.lambda_prime as f64 > 1.5 * q / (q - 3.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(nu_of_q(4.0).unwrap(), 0.25);
        assert_eq!(lambda_of_q(6.0).unwrap(), 6);
        assert!((nu_of_q(1e12).unwrap() - 128.0).abs() < 1e-6);
        assert!(nu_of_q(3.0).is_err());
        assert!(lambda_of_q(2.5).is_err());
    }

    #[test]
    fn defaults_follow_the_paper_choice() {
        let p = BGParams::default();
        assert_eq!((p.alpha, p.beta, p.gamma, p.delta), (2.0, 1.0, 2.0, 2.0));
        assert_eq!(p.lambda, 2 * p.lambda_prime);
        let p = BGParams::for_q(4.0).unwrap();
        assert!(p.admissible_for(4.0).unwrap());
        assert_eq!(p.lambda_prime, 7);
    }

    proptest! {
        #[test]
        fn formulas_match_closed_forms(q in 3.0001f64..20.0) {
            let x = 3.0 * q / (q - 3.0);
            prop_assert!((nu_of_q(q).unwrap() - 1024.0 * (-x).exp2()).abs() <= 1e-12 * 1024.0 * (-x).exp2());
            let l = lambda_of_q(q).unwrap() as f64;
            prop_assert!(l >= x - 1e-9 && l < x + 1.0);
        }
    }
}
