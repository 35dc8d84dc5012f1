//! Eternal self-similar profiles for fast diffusion with critical gradient
//! absorption: shooting, classification, critical-parameter bisection,
//! phase-plane analysis and PDE residual verification.

pub mod checks;
pub mod classify;
pub mod cli;
mod dopri;
pub mod error;
pub mod io;
pub mod numeric;
pub mod params;
pub mod phi;
pub mod profile;
pub mod residual;

pub use error::{Error, Result};
pub use params::{make_params, theory_constants, ExpansionCoeffs, Params, TheoryConstants};
pub use profile::{
    integrate_profile, IntegratorOptions, ProfileSample, ProfileSolution, Termination,
};
pub use classify::{classify, find_beta_star, BisectionReport, Classification, Verdict};
pub use phi::{fit_tail, solve_phi, PhiOptions, PhiSolution, TailFit, TailKind};
pub use residual::{pde_residual, ResidualGrid, ResidualReport, SelfSimilarSpec};
