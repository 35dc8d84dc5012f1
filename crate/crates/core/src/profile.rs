//! Shooting integration of the radial profile equation.
//!
//! Near the origin the state is `(f, g)` with `g = −|f'|^{p−2} f'`; past
//! `r_switch` it is `(w, v)` with `w = r^μ f`, `v = dw/ds` and `s = log r`.
//! Events (zero of f, zero of w', exceedance of w*) are localized on the
//! dense output of the stepper.

use serde::{Deserialize, Serialize};

use crate::dopri::{locate_event, DenseStep, StepError, Stepper, StepperOptions, System};
use crate::error::{Error, Result};
use crate::numeric::{apow, spow};
use crate::params::Params;

/// Expansion variable `C1·b·r^q` allowed at the series handoff.
const SERIES_MAX_EXPANSION: f64 = 1e-2;
/// Target size of the last retained series term at the default start.
const SERIES_LAST_TERM: f64 = 1e-13;
const EVENT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Series handoff radius; chosen from the last series term when `None`.
    pub r_start: Option<f64>,
    /// Chart switch radius; `max(1, 10 r_start)` when `None`.
    pub r_switch: Option<f64>,
    pub r_max: f64,
    /// Relative exceedance margin certifying the C-verdict.
    pub delta_c: f64,
    pub invariant_tol: f64,
    /// Upper bound on the step in the chart's independent variable (r, then log r).
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Stop at the first w' = 0 instead of continuing to the zero of f.
    pub stop_at_wprime_zero: bool,
    /// Stop at the w* exceedance; when false the run continues to `r_max`.
    pub stop_at_exceed: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-12,
            atol: 1e-14,
            r_start: None,
            r_switch: None,
            r_max: 30f64.exp(),
            delta_c: 1e-6,
            invariant_tol: 1e-9,
            max_step: None,
            max_steps: 5_000_000,
            stop_at_wprime_zero: false,
            stop_at_exceed: true,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidOption(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        pos("rtol", self.rtol)?;
        pos("atol", self.atol)?;
        pos("r_max", self.r_max)?;
        pos("delta_c", self.delta_c)?;
        pos("invariant_tol", self.invariant_tol)?;
        if let Some(r) = self.r_start {
            pos("r_start", r)?;
        }
        if let Some(r) = self.r_switch {
            pos("r_switch", r)?;
        }
        if let Some(h) = self.max_step {
            pos("max_step", h)?;
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidOption("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Same options with both tolerances scaled by `factor`.
    pub fn with_tolerance_scale(mut self, factor: f64) -> Self {
        self.rtol *= factor;
        self.atol *= factor;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub f: f64,
    pub fp: f64,
    pub g: f64,
    pub w: f64,
    pub wp: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EventSet {
    /// First zero of w'.
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    /// Zero of f.
    #[serde(rename = "R")]
    pub r: Option<f64>,
    /// First radius with w ≥ w*(1+δ_C).
    pub r_cross: Option<f64>,
    pub w_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    FZero,
    WPrimeZero,
    WExceedsWStar,
    RMaxReached,
    StepFailure,
}

#[derive(Debug, Clone, Copy)]
enum ChartKind {
    Fg,
    Wv,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    kind: ChartKind,
    /// Radius at the end of the segment (clipped at a terminating event).
    r_end: f64,
    step: DenseStep<2>,
}

#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub beta: f64,
    pub params: Params,
    pub samples: Vec<ProfileSample>,
    pub events: EventSet,
    pub termination: Termination,
    pub r_start: f64,
    pub r_switch: f64,
    pub r_max: f64,
    /// Right-hand side evaluations used.
    pub nfev: usize,
    absorb: f64,
    segments: Vec<Segment>,
}

/// Right-hand side of the profile equation in either chart.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ProfileSystem {
    pub params: Params,
    pub beta: f64,
    /// Coefficient of the gradient absorption (1 for the full problem).
    pub absorb: f64,
}

impl ProfileSystem {
    fn e_flux(&self) -> f64 {
        let p = self.params.p;
        (2.0 - p) / (p - 1.0)
    }

    pub fn fg(&self, r: f64, f: f64, g: f64) -> (f64, f64) {
        let p = self.params.p;
        let fp = -spow(g, self.e_flux());
        let dg = -(self.params.nf() - 1.0) * g / r + self.beta * (self.params.mu * f + r * fp)
            - self.absorb * apow(g, p / (2.0 * (p - 1.0)));
        (fp, dg)
    }

    pub fn wv(&self, w: f64, v: f64) -> (f64, f64) {
        let Params { p, mu, .. } = self.params;
        let nf = self.params.nf();
        let m = (v - mu * w).abs();
        let c1 = nf - 1.0 - 2.0 * mu * (p - 1.0);
        let nl = apow(m, 2.0 - p) * (self.beta * v - self.absorb * apow(m, p / 2.0));
        (v, v - (c1 * v + mu * (mu - nf) * w + nl) / (p - 1.0))
    }

    fn sample_fg(&self, r: f64, f: f64, g: f64) -> ProfileSample {
        let fp = -spow(g, self.e_flux());
        self.sample(r, f, fp, g, r.powf(self.params.mu) * f)
    }

    fn sample_wv(&self, s: f64, w: f64, v: f64) -> ProfileSample {
        let mu = self.params.mu;
        let r = s.exp();
        let f = w * (-mu * s).exp();
        let fp = (v - mu * w) * (-(mu + 1.0) * s).exp();
        let g = -spow(fp, self.params.p - 2.0);
        let mut smp = self.sample(r, f, fp, g, w);
        smp.wp = v / r;
        smp
    }

    fn sample(&self, r: f64, f: f64, fp: f64, g: f64, w: f64) -> ProfileSample {
        let Params { p, mu, .. } = self.params;
        ProfileSample {
            r,
            f,
            fp,
            g,
            w,
            wp: r.powf(mu - 1.0) * (mu * f + r * fp),
            e: energy(p, mu, self.beta, f, fp),
        }
    }
}

pub(crate) fn energy(p: f64, mu: f64, beta: f64, f: f64, fp: f64) -> f64 {
    (p - 1.0) * apow(fp, p) / p + 0.5 * mu * beta * f * f
}

struct FgChart(ProfileSystem);
struct WvChart(ProfileSystem);

impl System<2> for FgChart {
    fn rhs(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        let (a, b) = self.0.fg(r, y[0], y[1]);
        [a, b]
    }
}

impl System<2> for WvChart {
    fn rhs(&self, _s: f64, y: &[f64; 2]) -> [f64; 2] {
        let (a, b) = self.0.wv(y[0], y[1]);
        [a, b]
    }
}

/// Chart-specific event functions; each is positive before its event.
trait Chart: System<2> {
    const KIND: ChartKind;
    fn r_of(t: f64) -> f64;
    fn sample(&self, t: f64, y: &[f64; 2]) -> ProfileSample;
    fn ev_f(&self, t: f64, y: &[f64; 2]) -> f64;
    fn ev_wp(&self, t: f64, y: &[f64; 2]) -> f64;
    fn ev_c(&self, t: f64, y: &[f64; 2], w_cap: f64) -> f64;
}

impl Chart for FgChart {
    const KIND: ChartKind = ChartKind::Fg;
    fn r_of(t: f64) -> f64 {
        t
    }
    fn sample(&self, t: f64, y: &[f64; 2]) -> ProfileSample {
        self.0.sample_fg(t, y[0], y[1])
    }
    fn ev_f(&self, _t: f64, y: &[f64; 2]) -> f64 {
        y[0]
    }
    fn ev_wp(&self, t: f64, y: &[f64; 2]) -> f64 {
        self.0.params.mu * y[0] - t * spow(y[1], self.0.e_flux())
    }
    fn ev_c(&self, t: f64, y: &[f64; 2], w_cap: f64) -> f64 {
        w_cap - t.powf(self.0.params.mu) * y[0]
    }
}

impl Chart for WvChart {
    const KIND: ChartKind = ChartKind::Wv;
    fn r_of(t: f64) -> f64 {
        t.exp()
    }
    fn sample(&self, t: f64, y: &[f64; 2]) -> ProfileSample {
        self.0.sample_wv(t, y[0], y[1])
    }
    fn ev_f(&self, _t: f64, y: &[f64; 2]) -> f64 {
        y[0]
    }
    fn ev_wp(&self, _t: f64, y: &[f64; 2]) -> f64 {
        y[1]
    }
    fn ev_c(&self, _t: f64, y: &[f64; 2], w_cap: f64) -> f64 {
        w_cap - y[0]
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ev {
    F,
    Wp,
    C,
}

struct Run {
    sys: ProfileSystem,
    opts: IntegratorOptions,
    samples: Vec<ProfileSample>,
    segments: Vec<Segment>,
    events: EventSet,
    nfev: usize,
    steps: usize,
}

enum ChartEnd {
    Reached([f64; 2]),
    Stopped(Termination),
}

impl Run {
    fn push(&mut self, s: ProfileSample) {
        if s.w > self.events.w_max {
            self.events.w_max = s.w;
        }
        self.samples.push(s);
    }

    fn run_chart<C: Chart>(&mut self, chart: &C, t0: f64, y0: [f64; 2], t_end: f64) -> Result<ChartEnd, f64> {
        let w_cap = self.sys.params.w_star * (1.0 + self.opts.delta_c);
        let sopts = StepperOptions {
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            max_step: self.opts.max_step.unwrap_or(f64::INFINITY),
            min_step_rel: 1e-14,
        };
        let mut st = Stepper::new(chart, t0, y0, t_end - t0, sopts);
        let mut g_prev = [chart.ev_f(t0, &y0), chart.ev_wp(t0, &y0), chart.ev_c(t0, &y0, w_cap)];
        let result = loop {
            if st.t >= t_end {
                break ChartEnd::Reached(st.y);
            }
            if self.steps >= self.opts.max_steps {
                self.nfev += st.nfev;
                return Err(C::r_of(st.t));
            }
            let step = match st.step(t_end) {
                Ok(s) => s,
                Err(StepError::Underflow { t } | StepError::NonFinite { t }) => {
                    self.nfev += st.nfev;
                    return Err(C::r_of(t));
                }
            };
            self.steps += 1;

            let active = [
                (Ev::F, true),
                (Ev::Wp, self.events.r1.is_none()),
                (Ev::C, self.events.r_cross.is_none()),
            ];
            let mut hits: Vec<(f64, Ev)> = Vec::new();
            for (k, (ev, on)) in active.iter().enumerate() {
                if !on {
                    continue;
                }
                let te = match ev {
                    Ev::F => locate_event(&step, g_prev[k], |t, y| chart.ev_f(t, y), EVENT_REL_TOL),
                    Ev::Wp => locate_event(&step, g_prev[k], |t, y| chart.ev_wp(t, y), EVENT_REL_TOL),
                    Ev::C => locate_event(&step, g_prev[k], |t, y| chart.ev_c(t, y, w_cap), EVENT_REL_TOL),
                };
                if let Some(te) = te {
                    hits.push((te, *ev));
                }
            }
            hits.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut stop = None;
            for (te, ev) in hits {
                let ye = step.eval(te);
                let re = C::r_of(te);
                let smp = chart.sample(te, &ye);
                match ev {
                    Ev::F => {
                        self.events.r = Some(re);
                        stop = Some((te, smp, Termination::FZero));
                    }
                    Ev::Wp => {
                        self.events.r1 = Some(re);
                        if self.opts.stop_at_wprime_zero {
                            stop = Some((te, smp, Termination::WPrimeZero));
                        }
                    }
                    Ev::C => {
                        self.events.r_cross = Some(re);
                        if self.opts.stop_at_exceed {
                            stop = Some((te, smp, Termination::WExceedsWStar));
                        }
                    }
                }
                if let Some((te, smp, _)) = stop {
                    self.segments.push(Segment { kind: C::KIND, r_end: C::r_of(te), step });
                    if smp.r > self.samples.last().map_or(0.0, |s| s.r) {
                        self.push(smp);
                    }
                    break;
                }
                if smp.r > self.samples.last().map_or(0.0, |s| s.r) && smp.r < C::r_of(step.t1()) {
                    self.push(smp);
                }
            }
            if let Some((_, _, term)) = stop {
                break ChartEnd::Stopped(term);
            }
            self.segments.push(Segment { kind: C::KIND, r_end: C::r_of(step.t1()), step });
            self.push(chart.sample(step.t1(), &step.y1));
            g_prev = [
                chart.ev_f(step.t1(), &step.y1),
                chart.ev_wp(step.t1(), &step.y1),
                chart.ev_c(step.t1(), &step.y1, w_cap),
            ];
        };
        self.nfev += st.nfev;
        Ok(result)
    }
}

/// Initial point handed to the integrator.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Start {
    pub r: f64,
    pub f: f64,
    pub fp: f64,
}

pub(crate) fn run_profile(sys: ProfileSystem, start: Start, opts: &IntegratorOptions) -> Result<ProfileSolution> {
    opts.validate()?;
    if !(opts.r_max > start.r) {
        return Err(Error::InvalidOption(format!(
            "r_max = {} must exceed r_start = {}",
            opts.r_max, start.r
        )));
    }
    let r_switch = opts.r_switch.unwrap_or_else(|| (10.0 * start.r).max(1.0)).max(start.r);
    let p = sys.params.p;
    let g0 = -spow(start.fp, p - 2.0);
    let mut run = Run {
        sys,
        opts: *opts,
        samples: Vec::new(),
        segments: Vec::new(),
        events: EventSet { w_max: f64::NEG_INFINITY, ..Default::default() },
        nfev: 0,
        steps: 0,
    };
    run.push(sys.sample_fg(start.r, start.f, g0));

    let fg_end = r_switch.min(opts.r_max);
    let outcome = match run.run_chart(&FgChart(sys), start.r, [start.f, g0], fg_end) {
        Ok(ChartEnd::Reached(y)) if fg_end < opts.r_max => {
            let r = fg_end;
            let mu = sys.params.mu;
            let fp = -spow(y[1], sys.e_flux());
            let w = r.powf(mu) * y[0];
            let v = r.powf(mu) * (mu * y[0] + r * fp);
            run.run_chart(&WvChart(sys), r.ln(), [w, v], opts.r_max.ln())
        }
        other => other,
    };
    let termination = match outcome {
        Ok(ChartEnd::Reached(_)) => Termination::RMaxReached,
        Ok(ChartEnd::Stopped(t)) => t,
        Err(_) => Termination::StepFailure,
    };
    let sol = ProfileSolution {
        beta: sys.beta,
        params: sys.params,
        samples: run.samples,
        events: run.events,
        termination,
        r_start: start.r,
        r_switch,
        r_max: opts.r_max,
        nfev: run.nfev,
        absorb: sys.absorb,
        segments: run.segments,
    };
    if let Err(at) = outcome {
        return Err(Error::StepFailure { at, samples: sol.samples.len(), partial: Some(Box::new(sol)) });
    }
    Ok(sol)
}

fn series_scales(params: &Params, beta: f64) -> (f64, f64, f64) {
    let p = params.p;
    let bm = beta * params.mu / params.nf();
    (bm, bm.powf(1.0 / (p - 1.0)), p / (p - 1.0))
}

/// Largest radius at which the series start is accepted.
pub fn r_series_max(params: &Params, beta: f64) -> f64 {
    let (_, b, q) = series_scales(params, beta);
    (SERIES_MAX_EXPANSION / (params.exp_coeffs.c1 * b)).powf(1.0 / q)
}

/// Default handoff radius: the last series term is about 1e-13.
pub fn default_r_start(params: &Params, beta: f64) -> f64 {
    let p = params.p;
    let (bm, _, _) = series_scales(params, beta);
    let c = params.exp_coeffs;
    let coef = (c.c3 * (beta - c.b1)).abs() * bm.powf((3.0 - p) / (p - 1.0));
    let r = if coef > 0.0 {
        (SERIES_LAST_TERM / coef).powf((p - 1.0) / (2.0 * p))
    } else {
        1e-3
    };
    r.clamp(1e-8, 1e-3).min(r_series_max(params, beta))
}

/// Three-term small-r expansion of `(f, f')`.
pub fn series_eval(params: &Params, beta: f64, r: f64) -> Result<(f64, f64)> {
    Params::check_beta(beta)?;
    let bound = r_series_max(params, beta);
    if !(r >= 0.0 && r <= bound) {
        return Err(Error::SeriesRange { r, bound });
    }
    if r == 0.0 {
        return Ok((1.0, 0.0));
    }
    let (p, nf) = (params.p, params.nf());
    let c = params.exp_coeffs;
    let (bm, b, q) = series_scales(params, beta);
    let pm1 = p - 1.0;
    let s = p * (2.0 * nf + 1.0) - 2.0 * nf;
    let m = p + nf * pm1;
    let k2 = bm.powf((4.0 - p) / (2.0 * pm1));
    let k3 = bm.powf((3.0 - p) / pm1);
    let f = 1.0 - c.c1 * b * r.powf(q) + c.c2 * k2 * r.powf(3.0 * p / (2.0 * pm1))
        + c.c3 * (beta - c.b1) * k3 * r.powf(2.0 * p / pm1);
    let fp = -b * r.powf(1.0 / pm1)
        + 2.0 / s * k2 * r.powf((p + 2.0) / (2.0 * pm1))
        + ((beta - c.b0) / ((2.0 - p) * m) - 2.0 * c.b0 * c.b0 / (p * p * (2.0 - p)))
            * k3
            * r.powf((p + 1.0) / pm1);
    Ok((f, fp))
}

pub fn rhs_fg(params: &Params, beta: f64, r: f64, f: f64, g: f64) -> (f64, f64) {
    ProfileSystem { params: *params, beta, absorb: 1.0 }.fg(r, f, g)
}

pub fn rhs_w_logr(params: &Params, beta: f64, _s: f64, w: f64, v: f64) -> (f64, f64) {
    ProfileSystem { params: *params, beta, absorb: 1.0 }.wv(w, v)
}

pub fn integrate_profile(params: &Params, beta: f64, opts: &IntegratorOptions) -> Result<ProfileSolution> {
    Params::check_beta(beta)?;
    opts.validate()?;
    let r0 = opts.r_start.unwrap_or_else(|| default_r_start(params, beta));
    let (f, fp) = series_eval(params, beta, r0)?;
    run_profile(ProfileSystem { params: *params, beta, absorb: 1.0 }, Start { r: r0, f, fp }, opts)
}

pub fn energy_series(sol: &ProfileSolution) -> Vec<(f64, f64)> {
    sol.samples.iter().map(|s| (s.r, s.e)).collect()
}

impl ProfileSolution {
    pub fn last(&self) -> &ProfileSample {
        self.samples.last().expect("a solution always holds its start sample")
    }

    /// Radius up to which dense evaluation is available.
    pub fn r_end(&self) -> f64 {
        self.last().r
    }

    /// Whether the run reached its end through a terminating event or r_max.
    pub fn is_conclusive(&self) -> bool {
        !matches!(self.termination, Termination::StepFailure)
    }

    /// Evaluate the solution at `r` from the stepper's continuous extension.
    /// Below `r_start` the series is used.
    pub fn eval(&self, r: f64) -> Option<ProfileSample> {
        let sys = ProfileSystem { params: self.params, beta: self.beta, absorb: self.absorb };
        if r < self.r_start {
            if r < 0.0 || self.absorb != 1.0 {
                return None;
            }
            let (f, fp) = series_eval(&self.params, self.beta, r).ok()?;
            let g = -spow(fp, self.params.p - 2.0);
            return Some(if r == 0.0 {
                ProfileSample { r, f, fp, g, w: 0.0, wp: 0.0, e: energy(self.params.p, self.params.mu, self.beta, f, fp) }
            } else {
                sys.sample_fg(r, f, g)
            });
        }
        if r > self.r_end() {
            return None;
        }
        let i = self.segments.partition_point(|s| s.r_end < r);
        let seg = self.segments.get(i)?;
        Some(match seg.kind {
            ChartKind::Fg => {
                let y = seg.step.eval(r);
                sys.sample_fg(r, y[0], y[1])
            }
            ChartKind::Wv => {
                let s = r.ln();
                let y = seg.step.eval(s);
                sys.sample_wv(s, y[0], y[1])
            }
        })
    }

    /// Solution restricted to `(0, R)`: samples before the zero of f.
    pub fn positive_samples(&self) -> &[ProfileSample] {
        match self.events.r {
            Some(rz) => {
                let k = self.samples.partition_point(|s| s.r < rz);
                &self.samples[..k]
            }
            None => &self.samples,
        }
    }
}
