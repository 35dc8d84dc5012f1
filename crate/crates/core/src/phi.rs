//! Phase-plane function Φ(ξ) defined by Φ(w(r)) = r w'(r).
//!
//! Integrated in t = log ξ. While Φ is close to the line μξ the unknown is
//! the deficit η = μξ − Φ, which avoids cancellation at small ξ; once η
//! exceeds μξ/2 the unknown is Φ itself.

use serde::{Deserialize, Serialize};

use crate::dopri::{locate_event, DenseStep, StepError, Stepper, StepperOptions, System};
use crate::error::{Error, Result};
use crate::numeric::apow;
use crate::params::{phi_upper_constant, theory_constants, Params};

const EVENT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiOptions {
    pub rtol: f64,
    pub atol: f64,
    pub xi_start: f64,
    pub xi_max: f64,
    /// Stop once Φ < floor_rel · μξ.
    pub floor_rel: f64,
    /// Relative half-width of the neighbourhood of w* treated as the saddle.
    pub near_rel: f64,
    pub max_steps: usize,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions {
            rtol: 1e-12,
            atol: 1e-300,
            xi_start: 1e-16,
            xi_max: 1e14,
            floor_rel: 1e-6,
            near_rel: 1e-2,
            max_steps: 5_000_000,
        }
    }
}

impl PhiOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("xi_start", self.xi_start),
            ("xi_max", self.xi_max),
            ("floor_rel", self.floor_rel),
            ("near_rel", self.near_rel),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidOption(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.xi_max <= self.xi_start {
            return Err(Error::InvalidOption(format!(
                "xi_max = {} must exceed xi_start = {}",
                self.xi_max, self.xi_start
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiRegime {
    /// Reached xi_max beyond w* (C-type).
    Unbounded,
    /// Φ decays to the floor, or turns, in the neighbourhood of w* (critical).
    ApproachingWStar,
    /// Φ decays to the floor away from w* (A-type).
    Collapsed,
    /// Reached xi_max before w*.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSample {
    pub xi: f64,
    pub phi: f64,
    /// μξ − Φ, carried without cancellation while it is small.
    pub deficit: f64,
    /// dΦ/dξ.
    pub dphi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiStop {
    XiMax,
    Floor,
    /// Minimum of Φ inside the w* neighbourhood.
    Turn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiEndState {
    pub xi: f64,
    pub phi: f64,
    pub stop: PhiStop,
}

#[derive(Debug, Clone, Copy)]
enum Var {
    Deficit,
    Phi,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    var: Var,
    /// ξ at the segment end (clipped at a terminating event).
    xi_end: f64,
    step: DenseStep<1>,
}

#[derive(Debug, Clone)]
pub struct PhiSolution {
    pub beta: f64,
    pub params: Params,
    pub samples: Vec<PhiSample>,
    pub regime: PhiRegime,
    pub end_state: PhiEndState,
    segments: Vec<Segment>,
}

pub fn phi_rhs(params: &Params, beta: f64, xi: f64, phi: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::Range { what: "phi", value: phi, lo: 0.0, hi: f64::INFINITY });
    }
    Ok(rhs_phi(params, beta, xi, phi))
}

fn rhs_phi(params: &Params, beta: f64, xi: f64, phi: f64) -> f64 {
    let Params { p, mu, .. } = *params;
    let nf = params.nf();
    let m = (phi - mu * xi).abs();
    ((mu * p - nf) * phi - mu * (mu - nf) * xi - apow(m, 2.0 - p) * (beta * phi - apow(m, p / 2.0)))
        / ((p - 1.0) * phi)
}

/// dη/dξ for η = μξ − Φ, arranged without the cancelling terms.
fn rhs_deficit(params: &Params, beta: f64, xi: f64, eta: f64) -> f64 {
    let Params { p, mu, .. } = *params;
    let nf = params.nf();
    let phi = mu * xi - eta;
    ((mu - nf) * eta + beta * phi * apow(eta, 2.0 - p) - apow(eta, (4.0 - p) / 2.0)) / ((p - 1.0) * phi)
}

struct LogChart<'a> {
    params: &'a Params,
    beta: f64,
    var: Var,
}

impl LogChart<'_> {
    fn phi_of(&self, xi: f64, y: f64) -> f64 {
        match self.var {
            Var::Deficit => self.params.mu * xi - y,
            Var::Phi => y,
        }
    }

    fn sample(&self, t: f64, y: f64) -> PhiSample {
        let xi = t.exp();
        let mu = self.params.mu;
        let (phi, deficit) = match self.var {
            Var::Deficit => (mu * xi - y, y),
            Var::Phi => (y, mu * xi - y),
        };
        PhiSample { xi, phi, deficit, dphi: rhs_phi(self.params, self.beta, xi, phi) }
    }
}

impl System<1> for LogChart<'_> {
    fn rhs(&self, t: f64, y: &[f64; 1]) -> [f64; 1] {
        let xi = t.exp();
        [xi * match self.var {
            Var::Deficit => rhs_deficit(self.params, self.beta, xi, y[0]),
            Var::Phi => rhs_phi(self.params, self.beta, xi, y[0]),
        }]
    }
}

pub fn solve_phi(params: &Params, beta: f64, opts: &PhiOptions) -> Result<PhiSolution> {
    Params::check_beta(beta)?;
    opts.validate()?;
    let Params { p, mu, w_star, .. } = *params;
    let b = (mu * beta / params.nf()).powf(1.0 / (p - 1.0));
    let xi0 = opts.xi_start;
    let eta0 = b * xi0.powf(1.0 / (p - 1.0));
    if !(eta0 < 0.5 * mu * xi0) {
        return Err(Error::InvalidOption(format!("xi_start = {xi0} too large for the two-term start")));
    }

    let t_end = opts.xi_max.ln();
    let near_lo = w_star * (1.0 - opts.near_rel);
    let near_hi = w_star * (1.0 + opts.near_rel);
    let phi_near = opts.near_rel * mu * w_star;
    let sopts = StepperOptions { rtol: opts.rtol, atol: opts.atol, max_step: f64::INFINITY, min_step_rel: 1e-15 };

    let mut chart = LogChart { params, beta, var: Var::Deficit };
    let mut samples = vec![chart.sample(xi0.ln(), eta0)];
    let mut segments: Vec<Segment> = Vec::new();
    let (mut t, mut y) = (xi0.ln(), eta0);
    let mut steps = 0usize;

    let floor_ev = |ch: &LogChart, t: f64, y: f64| {
        let xi = t.exp();
        ch.phi_of(xi, y) - opts.floor_rel * mu * xi
    };
    let turn_ev = |ch: &LogChart, t: f64, y: f64| {
        let xi = t.exp();
        rhs_phi(params, beta, xi, ch.phi_of(xi, y))
    };

    let end = 'outer: loop {
        let mut st = Stepper::new(&chart, t, [y], t_end - t, sopts);
        let mut g_floor = floor_ev(&chart, t, y);
        let mut g_turn = turn_ev(&chart, t, y);
        loop {
            if st.t >= t_end {
                let last = *samples.last().unwrap();
                break 'outer PhiEndState { xi: last.xi, phi: last.phi, stop: PhiStop::XiMax };
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(step_failure(&samples));
            }
            let step = match st.step(t_end) {
                Ok(s) => s,
                Err(StepError::Underflow { .. } | StepError::NonFinite { .. }) => {
                    let last = *samples.last().unwrap();
                    if last.phi < 1e3 * opts.floor_rel * mu * last.xi {
                        break 'outer PhiEndState { xi: last.xi, phi: last.phi, stop: PhiStop::Floor };
                    }
                    return Err(step_failure(&samples));
                }
            };
            let y1 = step.y1[0];
            let t1 = step.t1();

            let mut hits: Vec<(f64, PhiStop)> = Vec::new();
            if let Some(te) = locate_event(&step, g_floor, |t, y| floor_ev(&chart, t, y[0]), EVENT_REL_TOL) {
                hits.push((te, PhiStop::Floor));
            }
            if g_turn < 0.0 {
                if let Some(te) = locate_event(&step, g_turn, |t, y| turn_ev(&chart, t, y[0]), EVENT_REL_TOL) {
                    let xe = te.exp();
                    let pe = chart.phi_of(xe, step.eval(te)[0]);
                    if (near_lo..=near_hi).contains(&xe) && pe < phi_near {
                        hits.push((te, PhiStop::Turn));
                    }
                }
            }
            hits.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(&(te, stop)) = hits.first() {
                let s = chart.sample(te, step.eval(te)[0]);
                segments.push(Segment { var: chart.var, xi_end: s.xi, step });
                samples.push(s);
                break 'outer PhiEndState { xi: s.xi, phi: s.phi, stop };
            }

            let s1 = chart.sample(t1, y1);
            if !(s1.deficit > 0.0) {
                return Err(Error::Integrity(format!(
                    "Φ = {} reached μξ = {} at ξ = {}",
                    s1.phi,
                    mu * s1.xi,
                    s1.xi
                )));
            }
            segments.push(Segment { var: chart.var, xi_end: s1.xi, step });
            samples.push(s1);

            if matches!(chart.var, Var::Deficit) && s1.deficit >= 0.5 * mu * s1.xi {
                chart.var = Var::Phi;
                t = t1;
                y = s1.phi;
                continue 'outer;
            }
            g_floor = floor_ev(&chart, t1, y1);
            g_turn = turn_ev(&chart, t1, y1);
        }
    };

    let regime = match end.stop {
        PhiStop::XiMax if end.xi > w_star => PhiRegime::Unbounded,
        PhiStop::XiMax => PhiRegime::Truncated,
        PhiStop::Turn => PhiRegime::ApproachingWStar,
        PhiStop::Floor if end.xi >= near_lo => PhiRegime::ApproachingWStar,
        PhiStop::Floor => PhiRegime::Collapsed,
    };
    Ok(PhiSolution { beta, params: *params, samples, regime, end_state: end, segments })
}

fn step_failure(samples: &[PhiSample]) -> Error {
    let last = samples.last().map_or(f64::NAN, |s| s.xi);
    Error::StepFailure { at: last, samples: samples.len(), partial: None }
}

impl PhiSolution {
    pub fn xi_start(&self) -> f64 {
        self.samples[0].xi
    }

    pub fn xi_end(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.xi)
    }

    /// Build a solution from tabulated data; evaluation between samples is
    /// linear in (log ξ, log Φ), so pure power laws are reproduced exactly.
    pub fn from_samples(params: &Params, beta: f64, xi: &[f64], phi: &[f64]) -> Result<PhiSolution> {
        if xi.len() != phi.len() || xi.len() < 2 {
            return Err(Error::InvalidOption("need at least two (xi, phi) pairs of equal length".into()));
        }
        if xi.windows(2).any(|w| !(w[1] > w[0])) || xi[0] <= 0.0 || phi.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidOption("xi must be positive and increasing, phi positive".into()));
        }
        let mu = params.mu;
        let samples: Vec<PhiSample> = xi
            .iter()
            .zip(phi)
            .map(|(&x, &f)| PhiSample { xi: x, phi: f, deficit: mu * x - f, dphi: rhs_phi(params, beta, x, f) })
            .collect();
        let last = *samples.last().unwrap();
        Ok(PhiSolution {
            beta,
            params: *params,
            samples,
            regime: if last.xi > params.w_star { PhiRegime::Unbounded } else { PhiRegime::Truncated },
            end_state: PhiEndState { xi: last.xi, phi: last.phi, stop: PhiStop::XiMax },
            segments: Vec::new(),
        })
    }

    /// Evaluate Φ at `xi` inside the computed range.
    pub fn eval(&self, xi: f64) -> Option<PhiSample> {
        if !(xi >= self.xi_start() && xi <= self.xi_end()) {
            return None;
        }
        let mu = self.params.mu;
        if self.segments.is_empty() {
            let xs: Vec<f64> = self.samples.iter().map(|s| s.xi).collect();
            let i = crate::numeric::bracket(&xs, xi);
            let (a, b) = (self.samples[i], self.samples[i + 1]);
            let th = (xi / a.xi).ln() / (b.xi / a.xi).ln();
            let phi = (a.phi.ln() + th * (b.phi / a.phi).ln()).exp();
            return Some(PhiSample {
                xi,
                phi,
                deficit: mu * xi - phi,
                dphi: rhs_phi(&self.params, self.beta, xi, phi),
            });
        }
        let i = self.segments.partition_point(|s| s.xi_end < xi);
        let seg = self.segments.get(i)?;
        let chart = LogChart { params: &self.params, beta: self.beta, var: seg.var };
        Some(chart.sample(xi.ln(), seg.step.eval(xi.ln())[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailKind {
    #[serde(rename = "K_C")]
    KC,
    #[serde(rename = "K_log")]
    KLog,
    #[serde(rename = "K_star")]
    KStar,
}

impl std::str::FromStr for TailKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K_C" => Ok(TailKind::KC),
            "K_log" => Ok(TailKind::KLog),
            "K_star" => Ok(TailKind::KStar),
            _ => Err(Error::InvalidOption(format!("unknown tail kind {s:?} (K_C, K_log, K_star)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub kind: TailKind,
    pub fitted: f64,
    pub theory: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub rel_err: f64,
}

/// Input to [`fit_tail`].
#[derive(Debug, Clone, Copy)]
pub enum TailData<'a> {
    Phi(&'a PhiSolution),
    Profile(&'a crate::profile::ProfileSolution),
}

/// Number of resampling points in a fitting window.
const FIT_POINTS: usize = 400;
/// Upper end of the default K_star window, relative to w*.
const KSTAR_WINDOW_HI: f64 = 1e-2;

/// Fit an asymptotic constant on its default window.
///
/// K_C uses the last decade of ξ, K_log the last decade of log r, and
/// K_star the decade w*−ξ ∈ [1e-3 w*, 1e-2 w*].
pub fn fit_tail(data: TailData<'_>, kind: TailKind) -> Result<TailFit> {
    fit_tail_window(data, kind, None)
}

/// As [`fit_tail`], with an explicit window in the kind's abscissa
/// (ξ for K_C, log r for K_log, w*−ξ for K_star).
pub fn fit_tail_window(data: TailData<'_>, kind: TailKind, window: Option<(f64, f64)>) -> Result<TailFit> {
    let decade = |lo: f64, hi: f64| {
        if lo > 0.0 && hi >= 10.0 * lo * (1.0 - 1e-12) {
            Ok(())
        } else {
            Err(Error::FitWindow(format!("window [{lo}, {hi}] is shorter than one decade")))
        }
    };
    let log_grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..FIT_POINTS)
            .map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (FIT_POINTS - 1) as f64).exp().clamp(lo, hi))
            .collect()
    };
    match (kind, data) {
        (TailKind::KC, TailData::Phi(sol)) => {
            let p = sol.params.p;
            let (lo, hi) = window.unwrap_or((sol.xi_end() / 10.0, sol.xi_end()));
            decade(lo, hi)?;
            covered(lo >= sol.xi_start() && hi <= sol.xi_end(), lo, hi)?;
            let ys: Vec<f64> = log_grid(lo, hi)
                .into_iter()
                .map(|x| sol.eval(x).map(|s| s.phi * x.powf(-p / 2.0)).unwrap())
                .collect();
            let theory = theory_constants(&sol.params, sol.beta)?.k_of_beta;
            Ok(tail(kind, crate::numeric::mean(&ys), theory, lo, hi))
        }
        (TailKind::KLog, TailData::Profile(sol)) => {
            let p = sol.params.p;
            let s_end = sol.r_end().ln();
            let (lo, hi) = window.unwrap_or((s_end / 10.0, s_end));
            decade(lo, hi)?;
            covered(lo >= sol.r_start.ln() && hi <= s_end, lo, hi)?;
            let ys: Vec<f64> = (0..FIT_POINTS)
                .map(|k| {
                    let s = (lo + (hi - lo) * k as f64 / (FIT_POINTS - 1) as f64).min(hi);
                    let w = sol.eval(s.exp().min(sol.r_end())).unwrap().w;
                    w.powf((2.0 - p) / 2.0) / s
                })
                .collect();
            let theory = theory_constants(&sol.params, sol.beta)?.k_infty;
            Ok(tail(kind, crate::numeric::mean(&ys), theory, lo, hi))
        }
        (TailKind::KStar, TailData::Phi(sol)) => {
            let ws = sol.params.w_star;
            let (lo, hi) = window.unwrap_or((KSTAR_WINDOW_HI * ws / 10.0, KSTAR_WINDOW_HI * ws));
            decade(lo, hi)?;
            covered(ws - hi >= sol.xi_start() && ws - lo <= sol.xi_end(), lo, hi)?;
            let us = log_grid(lo, hi);
            let phis: Vec<f64> = us.iter().map(|u| sol.eval(ws - u).unwrap().phi).collect();
            let theory = theory_constants(&sol.params, sol.beta)?.k_star;
            Ok(tail(kind, crate::numeric::slope_through_origin(&us, &phis), theory, lo, hi))
        }
        (TailKind::KLog, TailData::Phi(_)) => {
            Err(Error::InvalidOption("K_log is fitted on a profile solution".into()))
        }
        (_, TailData::Profile(_)) => {
            Err(Error::InvalidOption("K_C and K_star are fitted on a Φ solution".into()))
        }
    }
}

fn covered(ok: bool, lo: f64, hi: f64) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::FitWindow(format!("window [{lo}, {hi}] not covered by the solution")))
    }
}

fn tail(kind: TailKind, fitted: f64, theory: f64, lo: f64, hi: f64) -> TailFit {
    TailFit { kind, fitted, theory, window_lo: lo, window_hi: hi, rel_err: (fitted - theory).abs() / theory.abs() }
}

/// Outcome of one family of inequality checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Largest excess of the checked quantity over its bound (≤ 0 when satisfied).
    pub worst_excess: f64,
}

impl BoundCheck {
    pub(crate) fn new(name: &str) -> Self {
        BoundCheck { name: name.into(), worst_excess: f64::NEG_INFINITY, ..Default::default() }
    }

    /// Record `lhs ≤ rhs` with tolerance `tol · max(1, |rhs|)`.
    pub(crate) fn le(&mut self, lhs: f64, rhs: f64, tol: f64) {
        let excess = lhs - rhs;
        self.checked += 1;
        self.worst_excess = self.worst_excess.max(excess);
        if !(excess <= tol * rhs.abs().max(1.0)) {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Fold another check of the same family into this one.
    pub fn absorb(&mut self, other: &BoundCheck) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.worst_excess = self.worst_excess.max(other.worst_excess);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiBoundsReport {
    pub beta1: f64,
    pub beta2: f64,
    pub equal_beta: bool,
    pub overlap_lo: f64,
    pub overlap_hi: f64,
    pub ordering: BoundCheck,
    /// Lower-bound checks for each of the two solutions.
    pub lower: Vec<BoundCheck>,
    pub xi_eps: Vec<f64>,
}

impl PhiBoundsReport {
    pub fn passed(&self) -> bool {
        !self.equal_beta && self.ordering.passed() && self.lower.iter().all(BoundCheck::passed)
    }
}

/// ξ_ε of the lower bound for ε ∈ (0, K(β)).
pub fn xi_eps(params: &Params, beta: f64, eps: f64) -> f64 {
    let Params { p, mu, .. } = *params;
    let nf = params.nf();
    let k = mu.powf(p / 2.0) / beta;
    let m = (2.0 * (p * mu - nf) / (p * (p - 1.0) * k))
        .min(mu / (2.0 * k))
        .min((beta / 2.0).powf(2.0 / p) * eps.powf(2.0 / p) / k)
        .min(beta * eps / (2.0 * mu * (mu - nf)) * (mu / 2.0).powf(2.0 - p));
    m.powf(2.0 / (p - 2.0))
}

/// Lower bound Φ ≥ (K−ε)(ξ^{p/2} − ξ_ε^{p/2}) for ξ > ξ_ε on the samples.
pub fn check_lower_bound(sol: &PhiSolution, eps: f64, tol: f64) -> (BoundCheck, f64) {
    let p = sol.params.p;
    let k = sol.params.mu.powf(p / 2.0) / sol.beta;
    let xe = xi_eps(&sol.params, sol.beta, eps);
    let mut c = BoundCheck::new("phi_lower_bound");
    for s in sol.samples.iter().filter(|s| s.xi > xe) {
        let bound = (k - eps) * (s.xi.powf(p / 2.0) - xe.powf(p / 2.0));
        c.le(bound, s.phi, tol);
    }
    (c, xe)
}

/// Upper bound Φ ≤ max{K(β), (pμ−N)/(μ−N)} ξ^{p/2} on all samples.
pub fn check_upper_bound(sol: &PhiSolution, tol: f64) -> BoundCheck {
    let p = sol.params.p;
    let k = phi_upper_constant(&sol.params, sol.beta);
    let mut c = BoundCheck::new("phi_upper_bound");
    for s in &sol.samples {
        c.le(s.phi, k * s.xi.powf(p / 2.0), tol);
    }
    c
}

/// Refined upper bound K(β)ξ^{p/2} + ((pμ−N)/(μ−N) − K(β))₊ ξ₀^{p/2} for ξ > ξ₀.
pub fn check_refined_upper_bound(sol: &PhiSolution, tol: f64) -> (BoundCheck, f64) {
    let Params { p, mu, .. } = sol.params;
    let nf = sol.params.nf();
    let k = mu.powf(p / 2.0) / sol.beta;
    let kk = (p * mu - nf) / (mu - nf);
    let xi0 = (k.max(kk) * (p * mu - nf) / (mu * (mu - nf))).powf(2.0 / (2.0 - p));
    let m = (kk - k).max(0.0);
    let mut c = BoundCheck::new("phi_refined_upper_bound");
    for s in sol.samples.iter().filter(|s| s.xi > xi0) {
        c.le(s.phi, k * s.xi.powf(p / 2.0) + m * xi0.powf(p / 2.0), tol);
    }
    (c, xi0)
}

/// Strip 0 < Φ < μξ on all samples.
pub fn check_strip(sol: &PhiSolution) -> BoundCheck {
    let mut c = BoundCheck::new("phi_strip");
    for s in &sol.samples {
        // both sides strict, no tolerance
        c.checked += 1;
        c.worst_excess = c.worst_excess.max((-s.phi).max(-s.deficit));
        if !(s.phi > 0.0 && s.deficit > 0.0) {
            c.violations += 1;
        }
    }
    c
}

/// Ordering of Φ in β and the lower bound for both solutions.
pub fn check_phi_bounds(sol1: &PhiSolution, sol2: &PhiSolution, tol: f64) -> PhiBoundsReport {
    let (lo_sol, hi_sol) = if sol1.beta <= sol2.beta { (sol1, sol2) } else { (sol2, sol1) };
    let lo = lo_sol.xi_start().max(hi_sol.xi_start());
    let hi = lo_sol.xi_end().min(hi_sol.xi_end());
    let mut ordering = BoundCheck::new("phi_ordering_in_beta");
    let equal_beta = lo_sol.beta == hi_sol.beta;
    if !equal_beta {
        for s in hi_sol.samples.iter().filter(|s| s.xi >= lo && s.xi <= hi) {
            if let Some(o) = lo_sol.eval(s.xi) {
                // Φ(β₂) ≤ Φ(β₁), compared through the deficits to keep small-ξ accuracy
                ordering.le(o.deficit, s.deficit, tol);
            }
        }
    }
    let mut lower = Vec::new();
    let mut xes = Vec::new();
    for s in [lo_sol, hi_sol] {
        let k = s.params.mu.powf(s.params.p / 2.0) / s.beta;
        let (c, xe) = check_lower_bound(s, 0.5 * k, tol);
        lower.push(c);
        xes.push(xe);
    }
    PhiBoundsReport {
        beta1: lo_sol.beta,
        beta2: hi_sol.beta,
        equal_beta,
        overlap_lo: lo,
        overlap_hi: hi,
        ordering,
        lower,
        xi_eps: xes,
    }
}
