//! Invariant suite: profile bounds, energy, Φ-plane bounds and β-ordering
//! over a sweep of shooting parameters.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_solution, find_beta_star, Verdict};
use crate::error::Result;
use crate::params::Params;
use crate::phi::{
    check_lower_bound, check_phi_bounds, check_refined_upper_bound, check_strip, check_upper_bound, solve_phi,
    xi_eps, BoundCheck, PhiOptions, PhiRegime, PhiSolution,
};
use crate::profile::{integrate_profile, IntegratorOptions, ProfileSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub tol: f64,
    /// Sweep points below and above the critical estimate.
    pub c_points: usize,
    pub a_points: usize,
    /// Random β pairs for the ordering check.
    pub pairs: usize,
    pub seed: u64,
    /// Bracket width used to place the sweep.
    pub tol_beta: f64,
    /// Cap on ξ for C-regime Φ runs.
    pub xi_cap: f64,
    pub integrator: IntegratorOptions,
    pub phi: PhiOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            tol: 1e-9,
            c_points: 7,
            a_points: 4,
            pairs: 5,
            seed: 7,
            tol_beta: 1e-6,
            xi_cap: 1e13,
            integrator: IntegratorOptions::default(),
            phi: PhiOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub beta_star_estimate: f64,
    pub betas: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Sweep: geometric below the estimate up to 0.95 β̂*, then above from 1.05 β̂*.
pub fn sweep_betas(beta_star: f64, c_points: usize, a_points: usize) -> Vec<f64> {
    let geo = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![hi],
            _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
        }
    };
    let mut v = geo(0.1 * beta_star, 0.95 * beta_star, c_points);
    v.extend(geo(1.05 * beta_star, 10.0 * beta_star, a_points));
    v
}

/// ξ range for a C-regime run: two decades past both bound thresholds.
fn xi_max_for(params: &Params, beta: f64, cap: f64) -> f64 {
    let Params { p, mu, .. } = *params;
    let nf = params.nf();
    let k = mu.powf(p / 2.0) / beta;
    let kk = (p * mu - nf) / (mu - nf);
    let xi0 = (k.max(kk) * (p * mu - nf) / (mu * (mu - nf))).powf(2.0 / (2.0 - p));
    (100.0 * xi_eps(params, beta, 0.5 * k).max(xi0)).clamp(1e8, cap)
}

struct Run {
    beta: f64,
    verdict: Verdict,
    profile: ProfileSolution,
    phi: PhiSolution,
}

fn run_one(params: &Params, beta: f64, opts: &SuiteOptions) -> Result<Run> {
    let profile = integrate_profile(params, beta, &opts.integrator)?;
    let verdict = classify_solution(&profile).verdict;
    let mut po = opts.phi;
    po.xi_max = xi_max_for(params, beta, opts.xi_cap);
    let phi = solve_phi(params, beta, &po)?;
    Ok(Run { beta, verdict, profile, phi })
}

/// Lemma-type bounds on f': −(βμ)^{2/p} ≤ f' < 0 before the zero of f.
fn check_fp(sol: &ProfileSolution, tol: f64) -> (BoundCheck, BoundCheck) {
    let lower = -(sol.beta * sol.params.mu).powf(2.0 / sol.params.p);
    let mut neg = BoundCheck::new("fp_negative");
    let mut low = BoundCheck::new("fp_lower_bound");
    for s in sol.positive_samples().iter().filter(|s| s.r > 0.0) {
        neg.checked += 1;
        neg.worst_excess = neg.worst_excess.max(s.fp);
        if !(s.fp < 0.0) {
            neg.violations += 1;
        }
        low.le(lower, s.fp, tol);
    }
    (neg, low)
}

fn check_energy(sol: &ProfileSolution, tol: f64) -> BoundCheck {
    let mut c = BoundCheck::new("energy_nonincreasing");
    for w in sol.positive_samples().windows(2) {
        c.le(w[1].e, w[0].e, tol);
    }
    c
}

/// w(r; β₂) ≤ w(r; β₁) where both are still increasing.
fn check_w_order(lo: &ProfileSolution, hi: &ProfileSolution, tol: f64) -> BoundCheck {
    let mut c = BoundCheck::new("w_ordering_in_beta");
    let r_hi = lo.events.r1.unwrap_or(f64::INFINITY).min(hi.events.r1.unwrap_or(f64::INFINITY));
    for s in hi.samples.iter().filter(|s| s.r < r_hi && s.wp > 0.0) {
        if let Some(o) = lo.eval(s.r) {
            if o.wp > 0.0 {
                c.le(s.w, o.w, tol);
            }
        }
    }
    c
}

/// sup |f'| f^{-2/p}: finite and unchanged when the run is doubled in r.
fn check_gradient_ratio(params: &Params, beta: f64, opts: &SuiteOptions) -> Result<BoundCheck> {
    let mut o = opts.integrator;
    o.stop_at_exceed = false;
    let mut ratio = |r_max: f64| -> Result<f64> {
        o.r_max = r_max;
        let sol = integrate_profile(params, beta, &o)?;
        Ok(sol
            .positive_samples()
            .iter()
            .map(|s| s.fp.abs() * s.f.powf(-2.0 / params.p))
            .fold(0.0, f64::max))
    };
    let r1 = ratio(10f64.exp())?;
    let r2 = ratio(2.0 * 10f64.exp())?;
    let mut c = BoundCheck::new("gradient_ratio_stable");
    c.le(r2, r1, opts.tol);
    if !r1.is_finite() {
        c.violations += 1;
    }
    Ok(c)
}

fn merge(checks: &mut Vec<BoundCheck>, c: BoundCheck) {
    match checks.iter_mut().find(|x| x.name == c.name) {
        Some(x) => x.absorb(&c),
        None => checks.push(c),
    }
}

pub fn run_suite(params: &Params, opts: &SuiteOptions) -> Result<SuiteReport> {
    opts.integrator.validate()?;
    opts.phi.validate()?;
    let bis = find_beta_star(params, opts.tol_beta, &opts.integrator)?;
    let betas = sweep_betas(bis.beta_star, opts.c_points, opts.a_points);
    let runs: Vec<Run> = betas.par_iter().map(|&b| run_one(params, b, opts)).collect::<Result<_>>()?;
    let grads: Vec<BoundCheck> = runs
        .par_iter()
        .filter(|r| r.verdict == Verdict::C)
        .map(|r| check_gradient_ratio(params, r.beta, opts))
        .collect::<Result<_>>()?;

    let tol = opts.tol;
    let mut checks = Vec::new();
    for r in &runs {
        let (neg, low) = check_fp(&r.profile, tol);
        merge(&mut checks, neg);
        merge(&mut checks, low);
        merge(&mut checks, check_energy(&r.profile, tol));
        merge(&mut checks, check_strip(&r.phi));
        merge(&mut checks, check_upper_bound(&r.phi, tol));
        let mut regime = BoundCheck::new("phi_regime_matches_verdict");
        regime.checked = 1;
        regime.worst_excess = 0.0;
        let expected = match r.verdict {
            Verdict::C => r.phi.regime == PhiRegime::Unbounded,
            Verdict::A => matches!(r.phi.regime, PhiRegime::Collapsed | PhiRegime::ApproachingWStar),
            Verdict::Inconclusive => true,
        };
        if !expected {
            regime.violations = 1;
        }
        merge(&mut checks, regime);
        if r.verdict == Verdict::C {
            merge(&mut checks, check_refined_upper_bound(&r.phi, tol).0);
            let k = params.mu.powf(params.p / 2.0) / r.beta;
            merge(&mut checks, check_lower_bound(&r.phi, 0.5 * k, tol).0);
        }
    }
    for w in runs.windows(2) {
        merge(&mut checks, check_w_order(&w[0].profile, &w[1].profile, tol));
    }
    for g in grads {
        merge(&mut checks, g);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pairs = Vec::new();
    for _ in 0..opts.pairs {
        let idx = sample(&mut rng, runs.len(), 2);
        let (i, j) = (idx.index(0).min(idx.index(1)), idx.index(0).max(idx.index(1)));
        let rep = check_phi_bounds(&runs[i].phi, &runs[j].phi, tol);
        let mut ord = rep.ordering;
        if rep.equal_beta {
            ord.violations += 1;
        }
        merge(&mut checks, ord);
        pairs.push((runs[i].beta, runs[j].beta));
    }

    let passed = checks.iter().all(|c| c.passed() && c.checked > 0);
    Ok(SuiteReport {
        n: params.n,
        p: params.p,
        beta_star_estimate: bis.beta_star,
        betas,
        pairs,
        checks,
        passed,
    })
}
