//! Problem instance `(N, p)` and the closed-form constants derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the small-`r` expansion of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    #[serde(rename = "B1")]
    pub b1: f64,
}

/// Validated problem instance. Derived values are computed once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub p_c: f64,
    pub mu: f64,
    pub w_star: f64,
    #[serde(flatten)]
    pub exp_coeffs: ExpansionCoeffs,
}

impl Params {
    /// Spatial dimension as a float.
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Reject non-finite or non-positive `beta`.
    pub fn check_beta(beta: f64) -> Result<()> {
        if beta.is_finite() && beta > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidOption(format!("beta must be finite and > 0, got {beta}")))
        }
    }
}

pub fn make_params(n: u32, p: f64) -> Result<Params> {
    if n < 1 {
        return Err(Error::InvalidParams(format!("N must be >= 1, got {n}")));
    }
    let nf = n as f64;
    let p_c = 2.0 * nf / (nf + 1.0);
    if !p.is_finite() || p <= p_c || p >= 2.0 {
        return Err(Error::InvalidParams(format!(
            "p = {p} outside the admissible open interval ({p_c}, 2) for N = {n}"
        )));
    }
    let mu = p / (2.0 - p);
    let w_star = (mu - nf).powf(2.0 / (2.0 - p)) / mu;
    let mut params = Params {
        n,
        p,
        p_c,
        mu,
        w_star,
        exp_coeffs: ExpansionCoeffs { c1: 0.0, c2: 0.0, c3: 0.0, b0: 0.0, b1: 0.0 },
    };
    params.exp_coeffs = expansion_coeffs(&params);
    if !(mu > nf && w_star > 0.0 && w_star.is_finite()) {
        return Err(Error::InvalidParams(format!("derived constants not finite for N = {n}, p = {p}")));
    }
    Ok(params)
}

pub fn expansion_coeffs(params: &Params) -> ExpansionCoeffs {
    let (p, nf) = (params.p, params.nf());
    let s = p * (2.0 * nf + 1.0) - 2.0 * nf;
    let m = p + nf * (p - 1.0);
    let b0 = p * (2.0 - p) / s;
    ExpansionCoeffs {
        c1: (p - 1.0) / p,
        c2: 4.0 * (p - 1.0) / (3.0 * p * s),
        c3: (p - 1.0) / (2.0 * p * (2.0 - p) * m),
        b0,
        b1: b0 + 2.0 * m * b0 * b0 / (p * p),
    }
}

/// Asymptotic constants at a given `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub beta: f64,
    /// Large-ξ slope of Φ against ξ^{p/2}.
    #[serde(rename = "K_of_beta")]
    pub k_of_beta: f64,
    #[serde(rename = "K_infty")]
    pub k_infty: f64,
    /// Coefficient of the nonlinear term linearized at w*.
    #[serde(rename = "B_star")]
    pub cal_b_star: f64,
    pub a_star: f64,
    pub b_star: f64,
    #[serde(rename = "K_star")]
    pub k_star: f64,
    /// Growth rate in log r of the unstable direction at (w*, 0).
    pub lambda_unstable: f64,
}

pub fn theory_constants(params: &Params, beta: f64) -> Result<TheoryConstants> {
    Params::check_beta(beta)?;
    let (p, mu, nf, ws) = (params.p, params.mu, params.nf(), params.w_star);
    let k = mu.powf(p / 2.0) / beta;
    let cal_b = 0.5 * (2.0 - p) * (mu * ws).powf(-p / 2.0);
    let a = 2.0 * ((p - 1.0) * mu - beta * (mu - nf).powi(2) - mu * ws * cal_b) / (p - 1.0);
    let b = mu * mu * ws * cal_b / (p - 1.0);
    let disc = (a * a + 16.0 * b).sqrt();
    Ok(TheoryConstants {
        beta,
        k_of_beta: k,
        k_infty: k / (mu + 1.0),
        cal_b_star: cal_b,
        a_star: a,
        b_star: b,
        k_star: (disc - a) / 4.0,
        lambda_unstable: (disc + a) / 4.0,
    })
}

/// Upper-bound constant max{K(β), (pμ−N)/(μ−N)} for Φ/ξ^{p/2}.
pub fn phi_upper_constant(params: &Params, beta: f64) -> f64 {
    let (p, mu, nf) = (params.p, params.mu, params.nf());
    (mu.powf(p / 2.0) / beta).max((p * mu - nf) / (mu - nf))
}
