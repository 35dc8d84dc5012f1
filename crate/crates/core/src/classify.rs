//! A/C decision procedure, bisection for the critical parameter, and the
//! large-β limit profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::profile::{
    integrate_profile, run_profile, IntegratorOptions, ProfileSolution, ProfileSystem, Start,
};

const BETA_CAP: f64 = 1e6;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    A,
    C,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Witness {
    /// First zero of w' with the maximum of w, and the zero of f if reached.
    A {
        #[serde(rename = "R1")]
        r1: Option<f64>,
        w_max: f64,
        #[serde(rename = "R")]
        r: Option<f64>,
    },
    C { r_cross: f64 },
    Inconclusive { r_max: f64, w: f64, wp: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub beta: f64,
    pub verdict: Verdict,
    pub witness: Witness,
}

impl Classification {
    /// The radius certifying the verdict (or the radius reached).
    pub fn witness_r(&self) -> f64 {
        match self.witness {
            Witness::A { r1: Some(r1), .. } => r1,
            Witness::A { r, .. } => r.unwrap_or(f64::NAN),
            Witness::C { r_cross } => r_cross,
            Witness::Inconclusive { r_max, .. } => r_max,
        }
    }
}

pub fn classify_solution(sol: &ProfileSolution) -> Classification {
    let ev = sol.events;
    let w_star = sol.params.w_star;
    let (verdict, witness) = if ev.r1.is_some() && ev.w_max < w_star || ev.r.is_some() {
        (Verdict::A, Witness::A { r1: ev.r1, w_max: ev.w_max, r: ev.r })
    } else if let Some(r_cross) = ev.r_cross {
        (Verdict::C, Witness::C { r_cross })
    } else {
        let last = sol.last();
        (Verdict::Inconclusive, Witness::Inconclusive { r_max: last.r, w: last.w, wp: last.wp })
    };
    Classification { beta: sol.beta, verdict, witness }
}

pub fn classify(params: &Params, beta: f64, opts: &IntegratorOptions) -> Result<Classification> {
    integrate_profile(params, beta, opts).map(|sol| classify_solution(&sol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub beta: f64,
    pub verdict: Verdict,
    pub witness_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BisectionStatus {
    /// Bracket width reached `tol_beta`.
    Converged,
    /// A midpoint stayed inconclusive after one r_max doubling.
    Inconclusive,
    /// Iteration budget exhausted.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub beta_star: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub iterations: usize,
    pub tol_beta: f64,
    pub r_max: f64,
    pub history: Vec<HistoryEntry>,
    pub status: BisectionStatus,
}

/// Largest β whose guaranteed supremum of w exceeds 2w*.
pub fn c_guarantee_beta(params: &Params) -> f64 {
    let (p, mu) = (params.p, params.mu);
    (2.0 * params.w_star).powf(-(2.0 - p) / 2.0) / (2.0 * mu)
}

pub fn find_beta_star(params: &Params, tol_beta: f64, opts: &IntegratorOptions) -> Result<BisectionReport> {
    if !(tol_beta.is_finite() && tol_beta > 0.0) {
        return Err(Error::InvalidOption(format!("tol_beta must be finite and > 0, got {tol_beta}")));
    }
    opts.validate()?;
    let mut opts = *opts;

    let mut lo = c_guarantee_beta(params) * (1.0 - 1e-9);
    loop {
        if classify(params, lo, &opts)?.verdict == Verdict::C {
            break;
        }
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Integrity("no C-verdict found below the closed-form guarantee".into()));
        }
    }
    let mut hi = if lo < 1.0 { 1.0 } else { 2.0 * lo };
    loop {
        if classify(params, hi, &opts)?.verdict == Verdict::A {
            break;
        }
        hi *= 2.0;
        if hi > BETA_CAP {
            return Err(Error::NoBracket { cap: BETA_CAP });
        }
    }

    let mut history = Vec::new();
    let mut doubled = false;
    let mut status = BisectionStatus::Converged;
    while hi - lo > tol_beta {
        if history.len() >= MAX_ITERATIONS {
            status = BisectionStatus::Budget;
            break;
        }
        let mid = 0.5 * (lo + hi);
        let mut c = classify(params, mid, &opts)?;
        if c.verdict == Verdict::Inconclusive && !doubled {
            doubled = true;
            opts.r_max *= 2.0;
            c = classify(params, mid, &opts)?;
        }
        history.push(HistoryEntry { beta: mid, verdict: c.verdict, witness_r: c.witness_r() });
        match c.verdict {
            Verdict::C => lo = mid,
            Verdict::A => hi = mid,
            Verdict::Inconclusive => {
                status = BisectionStatus::Inconclusive;
                break;
            }
        }
    }

    Ok(BisectionReport {
        n: params.n,
        p: params.p,
        beta_star: 0.5 * (lo + hi),
        bracket_lo: lo,
        bracket_hi: hi,
        iterations: history.len(),
        tol_beta,
        r_max: opts.r_max,
        history,
        status,
    })
}

/// Solution of the large-β limit problem (no absorption, unit β, in the
/// rescaled variable s = r β^{1/p}).
#[derive(Debug, Clone)]
pub struct LimitProfile {
    /// `(s, h, h')` samples.
    pub samples: Vec<(f64, f64, f64)>,
    /// First zero of h.
    pub s0: f64,
    pub solution: ProfileSolution,
}

impl LimitProfile {
    /// Dense evaluation of `h` on `[0, S0]`.
    pub fn h(&self, s: f64) -> Option<f64> {
        if s < self.solution.r_start {
            return (s >= 0.0).then(|| limit_series(&self.solution.params, s).0);
        }
        self.solution.eval(s).map(|smp| smp.f)
    }
}

fn limit_series(params: &Params, s: f64) -> (f64, f64) {
    let p = params.p;
    let c = params.exp_coeffs;
    let m = params.mu / params.nf();
    let b = m.powf(1.0 / (p - 1.0));
    let k3 = c.c3 * m.powf((3.0 - p) / (p - 1.0));
    let q = p / (p - 1.0);
    let h = 1.0 - c.c1 * b * s.powf(q) + k3 * s.powf(2.0 * p / (p - 1.0));
    let hp = -b * s.powf(1.0 / (p - 1.0)) + k3 * 2.0 * q * s.powf((p + 1.0) / (p - 1.0));
    (h, hp)
}

pub fn solve_limit_profile(params: &Params, opts: &IntegratorOptions) -> Result<LimitProfile> {
    opts.validate()?;
    let p = params.p;
    let k3 = params.exp_coeffs.c3 * (params.mu / params.nf()).powf((3.0 - p) / (p - 1.0));
    let s_start = opts
        .r_start
        .unwrap_or_else(|| (1e-13 / k3).powf((p - 1.0) / (2.0 * p)).clamp(1e-8, 1e-3));
    let (h, hp) = limit_series(params, s_start);
    let mut o = *opts;
    o.stop_at_exceed = false;
    o.stop_at_wprime_zero = false;
    let sys = ProfileSystem { params: *params, beta: 1.0, absorb: 0.0 };
    let sol = run_profile(sys, Start { r: s_start, f: h, fp: hp }, &o)?;
    let s0 = sol
        .events
        .r
        .ok_or_else(|| Error::Integrity(format!("limit profile has no zero up to s = {}", sol.r_end())))?;
    let samples = sol.samples.iter().map(|smp| (smp.r, smp.f, smp.fp)).collect();
    Ok(LimitProfile { samples, s0, solution: sol })
}
