//! Blow-up certificates for semilinear heat equations driven by the mixed
//! local-nonlocal operator `L = -a Lap + b (-Lap)^s` on `R^N`.
//!
//! The library builds the explicit weight
//! `kappa_eps(x) = eps^{N/2}/c_beta (1 + eps|x|^2)^{-beta}` (beta > N/2),
//! certifies that it is a subsolution of `-L kappa + lambda kappa >= 0` for
//! every `lambda >= eps^s lambda_0` with a fully computed constant
//! `lambda_0`, and turns that into a checkable blow-up criterion: whenever
//!
//! ```text
//! int kappa_eps u0 > s_f(eps^s lambda_0),    s_f(l) = inf{z > 0 : f(z)/z > l},
//! ```
//!
//! no global classical solution with initial datum `u0` exists, and the
//! scalar comparison problem bounds the blow-up time. A pseudospectral
//! solver cross-validates certificates on periodic boxes.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── special_functions.rs    # log-gamma, 2F1, C_{N,s}, c_beta
//! ├── fractional_laplacian.rs # PV quadrature vs spectral vs closed form
//! ├── kaplan_construction.rs  # A, B, R0, eta1, eta2, lambda0 + verification
//! ├── ode_comparison.rs       # Osgood bound vs adaptive integration
//! ├── certify_blowup.rs       # a full certificate for a gaussian datum
//! ├── fujita_scan.rs          # exponent scan across p_F = 1 + 2s/N
//! └── simulate_blowup.rs      # pseudospectral run tracking Phi(t)
//! ```
//!
//! Run one with `cargo run --release --example certify_blowup`.
//!
//! The same workflows are scriptable through the thin `blowup` binary,
//! driven by a strict JSON config (see the README).

pub mod certifier;
pub mod cli;
pub mod error;
pub mod fracops;
pub mod kaplan;
pub mod quad;
pub mod reaction;
pub mod simulator;
pub mod specfun;

pub use certifier::{
    certify, epsilon_search, fujita_exponent, fujita_scan, weighted_mass, InitialDatum,
    KaplanCertificate, Verdict,
};
pub use error::{Error, Result};
pub use fracops::{
    bilinear_form, frac_laplacian_pv, ibp_check, make_cutoff, spectral_apply, tail_terms,
    Cutoff, GridField, RadialProfile,
};
pub use kaplan::{
    calibrate_theta, closed_form_frac_psi, compute_bounds, kappa_eps, laplacian_kappa1,
    psi_beta, verify_subsolution, KaplanBounds, KaplanParams,
};
pub use reaction::{
    integrate_comparison, osgood_blowup_bound, s_f, validate_reaction, ReactionSpec,
};
pub use simulator::{convergence_probe, run as run_simulation, SimConfig, Trajectory};
pub use specfun::{
    abs_gamma_negative, frac_constant, gauss_2f1, log_gamma, psi_mass, HyperParams,
    OperatorParams,
};
