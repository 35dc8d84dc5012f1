//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::checks::{run_suite, SuiteOptions};
use crate::classify::{classify, find_beta_star, BisectionReport, Classification};
use crate::error::{Error, Result};
use crate::io::{phi_csv, profile_csv, residual_csv, to_json, write_text, BisectCache, CacheKey};
use crate::params::{make_params, Params};
use crate::phi::{fit_tail, solve_phi, PhiOptions, TailData, TailKind};
use crate::profile::{integrate_profile, EventSet, IntegratorOptions, Termination};
use crate::residual::{pde_residual, residual_field, ResidualGrid, SelfSimilarSpec};

#[derive(Parser, Debug)]
#[command(name = "selfsim", version, about = "Self-similar profiles: shooting, classification and verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Derived constants for (N, p)
    Params(ParamArgs),
    /// Integrate one profile
    Profile {
        #[command(flatten)]
        pa: ParamArgs,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        integ: IntegArgs,
        /// Continue past the w* exceedance up to r_max
        #[arg(long)]
        no_stop_at_exceed: bool,
        /// Write samples as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// A/C verdict for one or several β
    Classify {
        #[command(flatten)]
        pa: ParamArgs,
        #[arg(long, required_unless_present = "beta_list", conflicts_with = "beta_list")]
        beta: Option<f64>,
        /// Comma-separated list, classified in parallel
        #[arg(long, value_delimiter = ',')]
        beta_list: Option<Vec<f64>>,
        #[command(flatten)]
        integ: IntegArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bisection for the critical β
    Bisect {
        #[command(flatten)]
        pa: ParamArgs,
        #[arg(long = "tol", default_value_t = 1e-8)]
        tol_beta: f64,
        #[command(flatten)]
        integ: IntegArgs,
        /// Cache directory (overrides the environment)
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve the Φ-equation
    Phi {
        #[command(flatten)]
        pa: ParamArgs,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit an asymptotic constant (K_C, K_log, K_star)
    Tailfit {
        #[command(flatten)]
        pa: ParamArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        kind: TailKind,
        #[command(flatten)]
        phi: PhiArgs,
        #[command(flatten)]
        integ: IntegArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Finite-difference PDE residual of the self-similar solution
    Residual {
        #[command(flatten)]
        pa: ParamArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 0.0)]
        t_lo: f64,
        #[arg(long, default_value_t = 1.0)]
        t_hi: f64,
        #[arg(long, default_value_t = 0.5)]
        r_lo: f64,
        #[arg(long, default_value_t = 5.0)]
        r_hi: f64,
        #[arg(long, default_value_t = 200)]
        t_steps: usize,
        #[arg(long, default_value_t = 200)]
        r_steps: usize,
        /// Profile multiplier; 1.01 gives the negative control
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[command(flatten)]
        integ: IntegArgs,
        /// Residual field on the base grid as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the invariant suite; exit 2 on any violation
    Check {
        #[command(flatten)]
        pa: ParamArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    #[arg(long = "N")]
    n: u32,
    #[arg(long)]
    p: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<Params> {
        make_params(self.n, self.p)
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct IntegArgs {
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    r_start: Option<f64>,
    #[arg(long)]
    r_switch: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    delta_c: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
}

impl IntegArgs {
    fn options(&self) -> Result<IntegratorOptions> {
        let mut o = IntegratorOptions::default();
        o.rtol = self.rtol.unwrap_or(o.rtol);
        o.atol = self.atol.unwrap_or(o.atol);
        o.r_start = self.r_start.or(o.r_start);
        o.r_switch = self.r_switch.or(o.r_switch);
        o.r_max = self.r_max.unwrap_or(o.r_max);
        o.delta_c = self.delta_c.unwrap_or(o.delta_c);
        o.max_step = self.max_step.or(o.max_step);
        o.max_steps = self.max_steps.unwrap_or(o.max_steps);
        o.validate()?;
        Ok(o)
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct PhiArgs {
    #[arg(long)]
    xi_start: Option<f64>,
    #[arg(long)]
    xi_max: Option<f64>,
    #[arg(long)]
    floor_rel: Option<f64>,
    #[arg(long)]
    phi_rtol: Option<f64>,
}

impl PhiArgs {
    fn options(&self) -> Result<PhiOptions> {
        let mut o = PhiOptions::default();
        o.xi_start = self.xi_start.unwrap_or(o.xi_start);
        o.xi_max = self.xi_max.unwrap_or(o.xi_max);
        o.floor_rel = self.floor_rel.unwrap_or(o.floor_rel);
        o.rtol = self.phi_rtol.unwrap_or(o.rtol);
        o.validate()?;
        Ok(o)
    }
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// Also write the JSON result to this file
    #[arg(long)]
    json: Option<PathBuf>,
}

fn check_beta(beta: f64) -> Result<()> {
    Params::check_beta(beta)
}

#[derive(Serialize)]
struct ProfileSummary {
    beta: f64,
    termination: Termination,
    events: EventSet,
    r_start: f64,
    r_switch: f64,
    r_end: f64,
    samples: usize,
    nfev: usize,
}

#[derive(Serialize)]
struct PhiSummary {
    beta: f64,
    regime: crate::phi::PhiRegime,
    end_state: crate::phi::PhiEndState,
    xi_start: f64,
    samples: usize,
}

#[derive(Serialize)]
struct ResidualOut {
    sup_residual: f64,
    l2_residual: f64,
    refinement_order: f64,
    excluded_cells: usize,
    sup_residual_refined: f64,
    l2_residual_refined: f64,
    l2_order: f64,
    grid: ResidualGrid,
}

/// Outcome of a subcommand: JSON text and whether a check failed.
struct Output {
    json: String,
    findings: bool,
}

fn emit<T: Serialize>(out: &OutArgs, value: &T) -> Result<Output> {
    let json = to_json(value);
    if let Some(path) = &out.json {
        write_text(path, &json)?;
    }
    Ok(Output { json, findings: false })
}

fn dispatch(cmd: Cmd) -> Result<Output> {
    match cmd {
        Cmd::Params(pa) => emit(&OutArgs { json: None }, &pa.params()?),
        Cmd::Profile { pa, beta, integ, no_stop_at_exceed, csv, out } => {
            let params = pa.params()?;
            check_beta(beta)?;
            let mut o = integ.options()?;
            o.stop_at_exceed = !no_stop_at_exceed;
            let sol = match integrate_profile(&params, beta, &o) {
                Ok(sol) => sol,
                Err(Error::StepFailure { at, samples, partial: Some(sol) }) => {
                    if let Some(path) = &csv {
                        write_text(path, &profile_csv(&sol))?;
                    }
                    return Err(Error::StepFailure { at, samples, partial: None });
                }
                Err(e) => return Err(e),
            };
            if let Some(path) = &csv {
                write_text(path, &profile_csv(&sol))?;
            }
            emit(
                &out,
                &ProfileSummary {
                    beta,
                    termination: sol.termination,
                    events: sol.events,
                    r_start: sol.r_start,
                    r_switch: sol.r_switch,
                    r_end: sol.r_end(),
                    samples: sol.samples.len(),
                    nfev: sol.nfev,
                },
            )
        }
        Cmd::Classify { pa, beta, beta_list, integ, out } => {
            let params = pa.params()?;
            let o = integ.options()?;
            match (beta, beta_list) {
                (Some(b), _) => {
                    check_beta(b)?;
                    emit(&out, &classify(&params, b, &o)?)
                }
                (None, Some(list)) => {
                    list.iter().try_for_each(|&b| check_beta(b))?;
                    let res: Vec<Classification> =
                        list.par_iter().map(|&b| classify(&params, b, &o)).collect::<Result<_>>()?;
                    emit(&out, &res)
                }
                (None, None) => Err(Error::InvalidOption("need --beta or --beta-list".into())),
            }
        }
        Cmd::Bisect { pa, tol_beta, integ, cache_dir, no_cache, out } => {
            let params = pa.params()?;
            if !(tol_beta.is_finite() && tol_beta > 0.0) {
                return Err(Error::InvalidOption(format!("tol must be finite and > 0, got {tol_beta}")));
            }
            let o = integ.options()?;
            let key = CacheKey { n: params.n, p: params.p, tol_beta, r_max: o.r_max };
            let cache = (!no_cache).then(|| BisectCache::locate(cache_dir));
            let report: BisectionReport = match cache.as_ref().and_then(|c| c.get(&key)) {
                Some(r) => r,
                None => {
                    let r = find_beta_star(&params, tol_beta, &o)?;
                    if let Some(c) = &cache {
                        c.put(&key, &r)?;
                    }
                    r
                }
            };
            emit(&out, &report)
        }
        Cmd::Phi { pa, beta, phi, csv, out } => {
            let params = pa.params()?;
            check_beta(beta)?;
            let sol = solve_phi(&params, beta, &phi.options()?)?;
            if let Some(path) = &csv {
                write_text(path, &phi_csv(&sol))?;
            }
            emit(
                &out,
                &PhiSummary {
                    beta,
                    regime: sol.regime,
                    end_state: sol.end_state,
                    xi_start: sol.xi_start(),
                    samples: sol.samples.len(),
                },
            )
        }
        Cmd::Tailfit { pa, beta, kind, phi, integ, out } => {
            let params = pa.params()?;
            check_beta(beta)?;
            let fit = match kind {
                TailKind::KLog => {
                    let mut o = integ.options()?;
                    o.stop_at_exceed = false;
                    let sol = integrate_profile(&params, beta, &o)?;
                    fit_tail(TailData::Profile(&sol), kind)?
                }
                TailKind::KC | TailKind::KStar => {
                    let sol = solve_phi(&params, beta, &phi.options()?)?;
                    fit_tail(TailData::Phi(&sol), kind)?
                }
            };
            emit(&out, &fit)
        }
        Cmd::Residual { pa, beta, t0, t_lo, t_hi, r_lo, r_hi, t_steps, r_steps, amplitude, integ, csv, out } => {
            let params = pa.params()?;
            check_beta(beta)?;
            if !(amplitude.is_finite() && amplitude > 0.0) {
                return Err(Error::InvalidOption(format!("amplitude must be finite and > 0, got {amplitude}")));
            }
            let grid = ResidualGrid { t_lo, t_hi, r_lo, r_hi, t_steps, r_steps };
            let spec = SelfSimilarSpec::for_grid(&params, beta, t0, &grid, &integ.options()?)?.with_amplitude(amplitude);
            let rep = pde_residual(&spec, &grid)?;
            if let Some(path) = &csv {
                write_text(path, &residual_csv(&residual_field(&spec, &grid, 0)?))?;
            }
            emit(
                &out,
                &ResidualOut {
                    sup_residual: rep.sup_residual,
                    l2_residual: rep.l2_residual,
                    refinement_order: rep.refinement_order,
                    excluded_cells: rep.excluded_cells,
                    sup_residual_refined: rep.sup_residual_refined,
                    l2_residual_refined: rep.l2_residual_refined,
                    l2_order: rep.l2_order,
                    grid: rep.grid,
                },
            )
        }
        Cmd::Check { pa, tol, seed, out } => {
            let params = pa.params()?;
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::InvalidOption(format!("tol must be finite and > 0, got {tol}")));
            }
            let rep = run_suite(&params, &SuiteOptions { tol, seed, ..Default::default() })?;
            let mut o = emit(&out, &rep)?;
            o.findings = !rep.passed;
            Ok(o)
        }
    }
}

/// Parse `argv` (program name first), run the subcommand and return the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.json.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return 1;
            }
            if out.findings {
                eprintln!("selfsim: invariant violations found");
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("selfsim: {e}");
            e.exit_code()
        }
    }
}
