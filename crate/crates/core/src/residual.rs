//! The eternal self-similar solution `U(t, r) = e^{-μβ(t+t0)} f(r e^{-β(t+t0)})`
//! and a finite-difference check that it solves the PDE.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{affine_fit, apow, bracket, hermite, mean, monotone_slopes, spow};
use crate::params::Params;
use crate::profile::{integrate_profile, IntegratorOptions, ProfileSolution};

/// Cells whose profile slope is below this are excluded from the residual.
pub const EXCLUDE_SLOPE: f64 = 1e-10;
/// Relative margin added to the profile range needed by a grid.
const RANGE_MARGIN: f64 = 0.1;
/// Step cap (in r, then log r) for profiles feeding the interpolant.
const RESIDUAL_MAX_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
enum Shape {
    Numeric { sol: Box<ProfileSolution>, table: Table },
    /// `f(ρ) = c ρ^{-μ}`, defined for ρ > 0.
    PowerLaw { c: f64 },
}

/// Monotone cubic Hermite table on the profile samples.
#[derive(Debug, Clone)]
struct Table {
    r: Vec<f64>,
    f: Vec<f64>,
    slopes: Vec<(f64, f64)>,
}

impl Table {
    fn new(sol: &ProfileSolution) -> Table {
        let mut r = Vec::with_capacity(sol.samples.len());
        let mut f = Vec::with_capacity(sol.samples.len());
        let mut fp = Vec::with_capacity(sol.samples.len());
        for s in &sol.samples {
            if r.last().is_some_and(|&last| s.r <= last) {
                continue;
            }
            r.push(s.r);
            f.push(s.f);
            fp.push(s.fp);
        }
        let slopes = (0..r.len().saturating_sub(1))
            .map(|i| monotone_slopes(r[i], r[i + 1], f[i], f[i + 1], fp[i], fp[i + 1]))
            .collect();
        Table { r, f, slopes }
    }

    /// Value and slope of the interpolant.
    fn eval(&self, x: f64) -> (f64, f64) {
        let i = bracket(&self.r, x);
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let (y0, y1) = (self.f[i], self.f[i + 1]);
        let (d0, d1) = self.slopes[i];
        let h = x1 - x0;
        let t = (x - x0) / h;
        let dy = (6.0 * t * t - 6.0 * t) * (y0 - y1) / h
            + (3.0 * t * t - 4.0 * t + 1.0) * d0
            + (3.0 * t * t - 2.0 * t) * d1;
        (hermite(x0, x1, y0, y1, d0, d1, x), dy)
    }
}

#[derive(Debug, Clone)]
pub struct SelfSimilarSpec {
    pub beta: f64,
    pub t0: f64,
    /// Decay rate, always `μ·β`.
    pub alpha: f64,
    /// Multiplies the profile; values other than 1 give a negative control.
    pub amplitude: f64,
    pub params: Params,
    shape: Shape,
}

impl SelfSimilarSpec {
    pub fn new(profile: ProfileSolution, t0: f64) -> Result<SelfSimilarSpec> {
        if !t0.is_finite() {
            return Err(Error::InvalidOption(format!("t0 must be finite, got {t0}")));
        }
        let table = Table::new(&profile);
        if table.r.len() < 2 {
            return Err(Error::InvalidOption("profile has fewer than two samples".into()));
        }
        Ok(SelfSimilarSpec {
            beta: profile.beta,
            t0,
            alpha: profile.params.mu * profile.beta,
            amplitude: 1.0,
            params: profile.params,
            shape: Shape::Numeric { sol: Box::new(profile), table },
        })
    }

    /// The singular solution built from the constant `w = w*`.
    pub fn power_law(params: &Params, beta: f64, t0: f64) -> Result<SelfSimilarSpec> {
        Params::check_beta(beta)?;
        Ok(SelfSimilarSpec {
            beta,
            t0,
            alpha: params.mu * beta,
            amplitude: 1.0,
            params: *params,
            shape: Shape::PowerLaw { c: params.w_star },
        })
    }

    /// Integrates a profile long enough for `grid`, keeping samples dense
    /// enough for the interpolant.
    pub fn for_grid(
        params: &Params,
        beta: f64,
        t0: f64,
        grid: &ResidualGrid,
        opts: &IntegratorOptions,
    ) -> Result<SelfSimilarSpec> {
        grid.validate()?;
        Params::check_beta(beta)?;
        let (k, h) = grid.spacing();
        let rho = (grid.r_hi + h) * (-beta * (grid.t_lo - k + t0)).exp();
        let mut o = *opts;
        o.stop_at_exceed = false;
        o.stop_at_wprime_zero = false;
        o.r_max = rho * (1.0 + RANGE_MARGIN);
        o.max_step = Some(o.max_step.map_or(RESIDUAL_MAX_STEP, |m| m.min(RESIDUAL_MAX_STEP)));
        SelfSimilarSpec::new(integrate_profile(params, beta, &o)?, t0)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn profile(&self) -> Option<&ProfileSolution> {
        match &self.shape {
            Shape::Numeric { sol, .. } => Some(sol),
            Shape::PowerLaw { .. } => None,
        }
    }

    /// Largest rescaled radius that can be evaluated.
    pub fn rho_max(&self) -> f64 {
        match &self.shape {
            Shape::Numeric { table, .. } => *table.r.last().unwrap(),
            Shape::PowerLaw { .. } => f64::INFINITY,
        }
    }

    /// `(f, f')` at rescaled radius ρ, scaled by the amplitude.
    pub fn profile_at(&self, rho: f64) -> Option<(f64, f64)> {
        let (f, fp) = match &self.shape {
            Shape::Numeric { sol, table } => {
                if !(rho >= 0.0 && rho <= *table.r.last().unwrap()) {
                    return None;
                }
                if rho < table.r[0] {
                    let s = sol.eval(rho)?;
                    (s.f, s.fp)
                } else {
                    table.eval(rho)
                }
            }
            Shape::PowerLaw { c } => {
                if !(rho > 0.0 && rho.is_finite()) {
                    return None;
                }
                let mu = self.params.mu;
                let f = c * rho.powf(-mu);
                (f, -mu * f / rho)
            }
        };
        Some((self.amplitude * f, self.amplitude * fp))
    }

    fn rescale(&self, t: f64) -> f64 {
        (-self.beta * (t + self.t0)).exp()
    }

    /// `(U, U_r)` at `(t, r)`.
    pub fn eval_u_and_ur(&self, t: f64, r: f64) -> Result<(f64, f64)> {
        let sc = self.rescale(t);
        let rho = r * sc;
        let (f, fp) = self
            .profile_at(rho)
            .ok_or(Error::Region { t, r, rho_max: self.rho_max() })?;
        let decay = (-self.alpha * (t + self.t0)).exp();
        Ok((decay * f, decay * sc * fp))
    }

    pub fn eval_u(&self, t: f64, r: f64) -> Result<f64> {
        self.eval_u_and_ur(t, r).map(|(u, _)| u)
    }
}

/// Nodes `t_lo + i k`, `r_lo + j h` with `t_steps` and `r_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualGrid {
    pub t_lo: f64,
    pub t_hi: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub t_steps: usize,
    pub r_steps: usize,
}

impl Default for ResidualGrid {
    fn default() -> Self {
        ResidualGrid { t_lo: 0.0, t_hi: 1.0, r_lo: 0.5, r_hi: 5.0, t_steps: 200, r_steps: 200 }
    }
}

impl ResidualGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidOption(m));
        if !(self.t_lo.is_finite() && self.t_hi.is_finite() && self.t_lo < self.t_hi) {
            return bad(format!("need finite t_lo < t_hi, got [{}, {}]", self.t_lo, self.t_hi));
        }
        if !(self.r_lo.is_finite() && self.r_hi.is_finite() && self.r_lo < self.r_hi) {
            return bad(format!("need finite r_lo < r_hi, got [{}, {}]", self.r_lo, self.r_hi));
        }
        if self.t_steps < 1 || self.r_steps < 1 {
            return bad("grid needs at least one step in t and r".into());
        }
        let (_, h) = self.spacing();
        if self.r_lo - h <= 0.0 {
            return bad(format!("r_lo = {} must stay one cell ({h}) away from the origin", self.r_lo));
        }
        Ok(())
    }

    /// `(k, h)`.
    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.t_hi - self.t_lo) / self.t_steps as f64,
            (self.r_hi - self.r_lo) / self.r_steps as f64,
        )
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        let (k, h) = self.spacing();
        let mut v = Vec::with_capacity((self.t_steps + 1) * (self.r_steps + 1));
        for i in 0..=self.t_steps {
            for j in 0..=self.r_steps {
                v.push((self.t_lo + i as f64 * k, self.r_lo + j as f64 * h));
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCell {
    pub t: f64,
    pub r: f64,
    /// `None` where the cell was excluded for a vanishing slope.
    pub residual: Option<f64>,
}

/// PDE residual at one node with stencil spacing `(k, h)`.
fn residual_at(spec: &SelfSimilarSpec, t: f64, r: f64, k: f64, h: f64) -> Result<Option<f64>> {
    let p = spec.params.p;
    let nm1 = spec.params.nf() - 1.0;
    let (u, ur) = spec.eval_u_and_ur(t, r)?;
    let (up, urp) = spec.eval_u_and_ur(t, r + h)?;
    let (um, urm) = spec.eval_u_and_ur(t, r - h)?;
    let ut_p = spec.eval_u(t + k, r)?;
    let ut_m = spec.eval_u(t - k, r)?;
    let scale = spec.amplitude.abs() * spec.rescale(t).powf(spec.params.mu + 1.0);
    if [ur, urp, urm].iter().any(|d| d.abs() < EXCLUDE_SLOPE * scale) {
        return Ok(None);
    }
    let flux = |d: f64| spow(d, p - 2.0);
    let ut = (ut_p - ut_m) / (2.0 * k);
    let d_right = (up - u) / h;
    let d_left = (u - um) / h;
    let d_mid = (up - um) / (2.0 * h);
    let div = (flux(d_right) - flux(d_left)) / h + nm1 / r * flux(d_mid);
    Ok(Some(ut - div + apow(d_mid, p / 2.0)))
}

/// Residual on the grid nodes with the stencil spacing divided by `2^level`.
pub fn residual_field(spec: &SelfSimilarSpec, grid: &ResidualGrid, level: u32) -> Result<Vec<ResidualCell>> {
    grid.validate()?;
    let (k, h) = grid.spacing();
    let div = f64::from(1u32 << level);
    let (k, h) = (k / div, h / div);
    grid.nodes()
        .into_par_iter()
        .map(|(t, r)| residual_at(spec, t, r, k, h).map(|residual| ResidualCell { t, r, residual }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub grid: ResidualGrid,
    /// Sup of |residual| with the grid's own stencil spacing.
    pub sup_residual: f64,
    /// Root mean square of the residual over the included nodes.
    pub l2_residual: f64,
    /// Same quantities with the stencil spacing halved.
    pub sup_residual_refined: f64,
    pub l2_residual_refined: f64,
    /// `log2` of the sup ratio under halving.
    pub refinement_order: f64,
    /// `log2` of the L2 ratio; agreement with the sup order indicates a clean fit.
    pub l2_order: f64,
    pub excluded_cells: usize,
}

fn norms(cells: &[ResidualCell]) -> (f64, f64, usize) {
    let vals: Vec<f64> = cells.iter().filter_map(|c| c.residual).collect();
    let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    let l2 = if sq.is_empty() { 0.0 } else { mean(&sq).sqrt() };
    (sup, l2, cells.len() - vals.len())
}

pub fn pde_residual(spec: &SelfSimilarSpec, grid: &ResidualGrid) -> Result<ResidualReport> {
    let coarse = residual_field(spec, grid, 0)?;
    let fine = residual_field(spec, grid, 1)?;
    let (sup, l2, ex0) = norms(&coarse);
    let (sup_f, l2_f, ex1) = norms(&fine);
    Ok(ResidualReport {
        grid: *grid,
        sup_residual: sup,
        l2_residual: l2,
        sup_residual_refined: sup_f,
        l2_residual_refined: l2_f,
        refinement_order: (sup / sup_f).log2(),
        l2_order: (l2 / l2_f).log2(),
        excluded_cells: ex0.max(ex1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEntry {
    pub t: f64,
    pub sup_norm: f64,
    pub predicted: f64,
}

/// Sup over r of `U(t, ·)` against `e^{-μβ(t+t0)}`.
pub fn decay_report(spec: &SelfSimilarSpec, times: &[f64]) -> Result<Vec<DecayEntry>> {
    let fmax = match &spec.shape {
        Shape::Numeric { table, .. } => table.f.iter().fold(1.0f64, |m, &v| m.max(v)) * spec.amplitude,
        Shape::PowerLaw { .. } => {
            return Err(Error::InvalidOption("the power-law profile is unbounded at the origin".into()))
        }
    };
    times
        .iter()
        .map(|&t| {
            if !t.is_finite() {
                return Err(Error::InvalidOption(format!("time must be finite, got {t}")));
            }
            let predicted = (-spec.alpha * (t + spec.t0)).exp();
            Ok(DecayEntry { t, sup_norm: predicted * fmax, predicted })
        })
        .collect()
}

/// Slope of `log sup_norm` against t.
pub fn decay_slope(entries: &[DecayEntry]) -> f64 {
    let ts: Vec<f64> = entries.iter().map(|e| e.t).collect();
    let ls: Vec<f64> = entries.iter().map(|e| e.sup_norm.ln()).collect();
    affine_fit(&ts, &ls).1
}
