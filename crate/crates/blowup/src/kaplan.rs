//! The explicit Kaplan function
//! `kappa_eps(x) = eps^{N/2} / c_beta * (1 + eps |x|^2)^{-beta}`
//! and the constants that make it a subsolution of `-L kappa + lambda kappa
//! >= 0`.
//!
//! The nonlocal part has the closed form
//!
//! ```text
//! (-Lap)^s Psi_beta(x) = theta (1+|x|^2)^{-(beta+s)}
//!                        2F1(-s, beta+s; N/2; |x|^2/(1+|x|^2)),
//! ```
//!
//! with a positive prefactor `theta` that this module calibrates against
//! the principal-value quadrature at the origin and cross-checks at several
//! radii (a single scalar has to reconcile all of them, which validates the
//! functional form itself). All certificate constants are assembled from
//! grid searches with golden-section refinement:
//!
//! * `A  = sup |Lap kappa_1|`, `B = sup |(-Lap)^s kappa_1|`;
//! * `R0 >= 1` past which `-(-Lap)^s kappa_1 > 0` and the weighted envelope
//!   `(1+r^2)^{N/2+s} (-(-Lap)^s kappa_1)` stays inside a band of ratio <= 3
//!   over `(R0, 100 R0]`, with measured band ends `eta1 <= eta2`;
//! * `lambda_1 = 2 a beta N (1+R0^2)^{-2}`,
//!   `lambda_2 = c_beta (1+R0^2)^beta (a A + b B)`,
//!   `lambda_0 = max(lambda_1, lambda_2)`.

use crate::error::{Error, Result};
use crate::fracops::{frac_laplacian_pv_tol, spectral_apply, GridField, RadialProfile};
use crate::quad;
use crate::specfun::{gauss_2f1, psi_mass, HyperParams, OperatorParams};
use serde::{Deserialize, Serialize};

/// Parameters of the Kaplan family: tail weight `beta > N/2` and scale
/// `eps` in `(0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct KaplanParams {
    pub beta: f64,
    pub epsilon: f64,
    pub op: OperatorParams,
}

impl KaplanParams {
    pub fn new(beta: f64, epsilon: f64, op: OperatorParams) -> Result<Self> {
        op.validate()?;
        if !(beta > op.n as f64 / 2.0) {
            return Err(Error::Domain(format!(
                "Kaplan weight requires beta > N/2 = {}, got beta = {beta}",
                op.n as f64 / 2.0
            )));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Domain(format!(
                "Kaplan scale requires eps in (0, 1], got {epsilon}"
            )));
        }
        Ok(KaplanParams { beta, epsilon, op })
    }

    pub fn mass_constant(&self) -> Result<f64> {
        psi_mass(self.beta, self.op.n)
    }
}

/// Certificate constants of the explicit construction, computed at
/// `eps = 1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KaplanBounds {
    pub beta: f64,
    pub eps: f64,
    /// sup |Lap kappa_1|
    #[serde(rename = "A")]
    pub lap_sup: f64,
    /// sup |(-Lap)^s kappa_1|
    #[serde(rename = "B")]
    pub frac_sup: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda0: f64,
    pub theta: f64,
}

/// `Psi_beta(x) = (1+|x|^2)^{-beta}` at radius `r = |x|`.
pub fn psi_beta(r: f64, beta: f64) -> f64 {
    (1.0 + r * r).powf(-beta)
}

/// The Kaplan function at radius `r`; unit mass holds by the change of
/// variables `x -> sqrt(eps) x`.
pub fn kappa_eps(r: f64, kp: &KaplanParams) -> Result<f64> {
    let c_beta = kp.mass_constant()?;
    Ok(kp.epsilon.powf(kp.op.n as f64 / 2.0) / c_beta
        * (1.0 + kp.epsilon * r * r).powf(-kp.beta))
}

/// Closed-form Laplacian of `kappa_1`:
/// `2 beta / (c_beta (1+r^2)^{beta+2}) * ((2 beta - N + 2) r^2 - N)`.
pub fn laplacian_kappa1(r: f64, beta: f64, n: usize) -> Result<f64> {
    let c_beta = psi_mass(beta, n)?;
    let nf = n as f64;
    let r2 = r * r;
    Ok(2.0 * beta / (c_beta * (1.0 + r2).powf(beta + 2.0))
        * ((2.0 * beta - nf + 2.0) * r2 - nf))
}

/// Closed form of `(-Lap)^s Psi_beta` at radius `r`, given the calibrated
/// prefactor `theta`. Uses the Pfaff-transformed argument
/// `w = r^2/(1+r^2)` in `[0, 1)`, which every radius maps into.
pub fn closed_form_frac_psi(r: f64, beta: f64, op: &OperatorParams, theta: f64) -> Result<f64> {
    let w = r * r / (1.0 + r * r);
    let f = gauss_2f1(&HyperParams::new(-op.s, beta + op.s, op.n as f64 / 2.0, w)?)?;
    Ok(theta * (1.0 + r * r).powf(-(beta + op.s)) * f)
}

/// The untransformed variant `theta * 2F1(N/2+s, beta+s; N/2; -r^2)`;
/// only used to cross-check the Pfaff identity where its series converges.
pub fn closed_form_frac_psi_untransformed(
    r: f64,
    beta: f64,
    op: &OperatorParams,
    theta: f64,
) -> Result<f64> {
    let f = gauss_2f1(&HyperParams::new(
        op.n as f64 / 2.0 + op.s,
        beta + op.s,
        op.n as f64 / 2.0,
        -r * r,
    )?)?;
    Ok(theta * f)
}

/// Calibrates `theta` so that the closed form reproduces the
/// principal-value quadrature of `(-Lap)^s Psi_beta` at the origin, then
/// cross-checks five more radii to 1e-4 relative. Radii close to the sign
/// change of the closed form are skipped when picking the five checkpoints.
pub fn calibrate_theta(beta: f64, op: &OperatorParams) -> Result<f64> {
    op.validate()?;
    if !(beta > op.n as f64 / 2.0) {
        return Err(Error::Domain("calibrate_theta requires beta > N/2".into()));
    }
    let profile = RadialProfile::psi(beta);
    let origin = vec![0.0; op.n];
    let at0 = frac_laplacian_pv_tol(&profile, &origin, op, 1e-9)?;
    // the hypergeometric factor is 1 at the origin
    let theta = at0.value;
    if !(theta > 0.0) {
        return Err(Error::Calibration(format!(
            "(-Lap)^s Psi_beta(0) must be positive, quadrature returned {theta}"
        )));
    }

    let mut checked = 0;
    let mut r = 0.3;
    while checked < 5 && r < 60.0 {
        let closed = closed_form_frac_psi(r, beta, op, theta)?;
        // skip radii where the closed form is tiny relative to theta (near
        // the sign change the relative comparison is meaningless)
        if closed.abs() >= 0.02 * theta * (1.0 + r * r).powf(-(beta + op.s)).max(1e-6)
            && closed.abs() >= 1e-5 * theta
        {
            let mut point = vec![0.0; op.n];
            point[0] = r;
            let pv = frac_laplacian_pv_tol(&profile, &point, op, (1e-6 * closed.abs()).min(1e-9))?;
            let rel = (closed - pv.value).abs() / pv.value.abs().max(1e-300);
            if rel > 1e-4 {
                return Err(Error::Calibration(format!(
                    "theta = {theta} fails the cross-check at r = {r}: closed {closed} vs \
                     quadrature {} ({rel:.2e} relative)",
                    pv.value
                )));
            }
            checked += 1;
        }
        r *= 1.9;
    }
    if checked < 5 {
        return Err(Error::Calibration(
            "could not place five usable cross-check radii".into(),
        ));
    }
    Ok(theta)
}

/// Alternative calibration against the spectral route on a large periodic
/// box; used by consistency tests.
pub fn calibrate_theta_spectral(beta: f64, op: &OperatorParams) -> Result<f64> {
    if op.n != 1 {
        return Err(Error::Domain("spectral calibration implemented on the line".into()));
    }
    let field = GridField::from_radial(|r| psi_beta(r, beta), 800.0, 1 << 17, 1)?;
    let pure_frac = OperatorParams::new(0.0, op.b, op.s, op.n)?;
    let out = spectral_apply(&field, &pure_frac)?;
    let j0 = field.points_per_dim / 2; // coordinate 0
    Ok(out.data[j0] / op.b)
}

/// `(-Lap)^s kappa_1` at radius `r` (the closed form divided by `c_beta`).
fn frac_kappa1(r: f64, beta: f64, op: &OperatorParams, theta: f64, c_beta: f64) -> Result<f64> {
    Ok(closed_form_frac_psi(r, beta, op, theta)? / c_beta)
}

/// Computes every constant of the explicit construction for `eps = 1`.
///
/// `A` and `B` come from dense radial grids with golden-section refinement;
/// `R0` is the smallest grid radius `>= 1` past which the nonlocal term has
/// the right sign and the weighted envelope stays in a band of ratio <= 3
/// over `(R0, 100 R0]`; `eta1, eta2` are the measured band ends.
pub fn compute_bounds(kp0: &KaplanParams) -> Result<KaplanBounds> {
    if (kp0.epsilon - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("compute_bounds expects the eps = 1 normal form".into()));
    }
    let beta = kp0.beta;
    let op = &kp0.op;
    let c_beta = kp0.mass_constant()?;
    let theta = calibrate_theta(beta, op)?;

    // A = sup |Lap kappa_1|: the closed form decays like r^{-2 beta - 2},
    // so the sup lives on a bounded range
    let lap_abs = |r: f64| laplacian_kappa1(r, beta, op.n).map(f64::abs).unwrap_or(0.0);
    let lap_sup = grid_golden_max(&lap_abs, 0.0, 50.0, 4000);

    // B = sup |(-Lap)^s kappa_1|
    let frac_abs =
        |r: f64| frac_kappa1(r, beta, op, theta, c_beta).map(f64::abs).unwrap_or(0.0);
    let frac_sup = grid_golden_max(&frac_abs, 0.0, 50.0, 4000);

    // R0 search on a log grid of 2000 radii in [1, 1000]; envelope sampled
    // out to 100 R0
    let envelope = |r: f64| -> Result<f64> {
        let v = -frac_kappa1(r, beta, op, theta, c_beta)?;
        Ok((1.0 + r * r).powf(op.n as f64 / 2.0 + op.s) * v)
    };
    let grid_n = 2000usize;
    let log_max: f64 = 1000.0;
    let master_n = 2800usize;
    // master table out to 100 * 1000
    let master: Vec<(f64, f64)> = (0..=master_n)
        .map(|i| {
            let r = 10f64.powf(5.0 * i as f64 / master_n as f64); // [1, 1e5]
            envelope(r).map(|g| (r, g))
        })
        .collect::<Result<_>>()?;

    let mut found: Option<(f64, f64, f64)> = None;
    'candidates: for i in 0..=grid_n {
        let r0 = 10f64.powf(log_max.log10() * i as f64 / grid_n as f64);
        let hi = 100.0 * r0;
        let mut lo_val = f64::INFINITY;
        let mut hi_val = f64::NEG_INFINITY;
        for &(r, g) in master.iter().filter(|(r, _)| *r > r0 && *r <= hi) {
            if g <= 0.0 {
                continue 'candidates;
            }
            lo_val = lo_val.min(g);
            hi_val = hi_val.max(g);
            let _ = r;
        }
        if !lo_val.is_finite() || !hi_val.is_finite() {
            continue;
        }
        if hi_val <= 3.0 * lo_val {
            found = Some((r0, lo_val, hi_val));
            break;
        }
    }
    let (r0, eta1, eta2) = found.ok_or_else(|| {
        Error::EnvelopeFailure(format!(
            "no R0 <= 1000 satisfies the sign and band conditions for beta = {beta}, \
             s = {}, N = {}",
            op.s, op.n
        ))
    })?;

    let nf = op.n as f64;
    let lambda1 = 2.0 * op.a * beta * nf * (1.0 + r0 * r0).powi(-2);
    let lambda2 = c_beta * (1.0 + r0 * r0).powf(beta) * (op.a * lap_sup + op.b * frac_sup);
    let lambda0 = lambda1.max(lambda2);

    Ok(KaplanBounds {
        beta,
        eps: 1.0,
        lap_sup,
        frac_sup,
        r0,
        eta1,
        eta2,
        lambda1,
        lambda2,
        lambda0,
        theta,
    })
}

fn grid_golden_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut best_r = lo;
    for i in 0..=n {
        let r = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(r);
        if v > best {
            best = v;
            best_r = r;
        }
    }
    let h = (hi - lo) / n as f64;
    let (_, refined) = quad::golden_maximize(f, (best_r - h).max(lo), (best_r + h).min(hi), 1e-10);
    refined.max(best)
}

/// Report of a pointwise subsolution verification.
#[derive(Debug, Clone, Serialize)]
pub struct SubsolutionReport {
    /// worst value of `(a Lap - b (-Lap)^s + lambda) kappa_eps / kappa_eps`
    pub min_margin: f64,
    pub pass: bool,
    pub samples: usize,
    /// radius attaining the worst normalized margin
    pub argmin_radius: f64,
}

/// Verifies `a Lap kappa_eps - b (-Lap)^s kappa_eps + lambda kappa_eps >= 0`
/// on the given radii, using the exact operator scalings
/// `Lap kappa_eps(x) = eps^{1+N/2} (Lap kappa_1)(sqrt(eps) x)` and
/// `(-Lap)^s kappa_eps(x) = eps^{s+N/2} ((-Lap)^s kappa_1)(sqrt(eps) x)`.
/// Passes iff the margin stays above `-1e-10 kappa_eps` at every sample.
pub fn verify_subsolution(
    kp: &KaplanParams,
    lambda: f64,
    radii: &[f64],
    bounds: &KaplanBounds,
) -> Result<SubsolutionReport> {
    let op = &kp.op;
    let eps = kp.epsilon;
    let c_beta = kp.mass_constant()?;
    let nf = op.n as f64;
    let mut min_margin = f64::INFINITY;
    let mut argmin = 0.0;
    for &r in radii {
        let rs = eps.sqrt() * r;
        let lap = eps.powf(1.0 + nf / 2.0) * laplacian_kappa1(rs, kp.beta, op.n)?;
        let frac = eps.powf(op.s + nf / 2.0) * frac_kappa1(rs, kp.beta, op, bounds.theta, c_beta)?;
        let kap = kappa_eps(r, kp)?;
        let margin = op.a * lap - op.b * frac + lambda * kap;
        let normalized = margin / kap;
        if normalized < min_margin {
            min_margin = normalized;
            argmin = r;
        }
    }
    Ok(SubsolutionReport {
        min_margin,
        pass: min_margin >= -1e-10,
        samples: radii.len(),
        argmin_radius: argmin,
    })
}

/// Dense radial sample set for subsolution verification: linear core,
/// logarithmic far field out to `100 R0 / sqrt(eps)`, plus probes.
pub fn default_verification_radii(count: usize, r0: f64, eps: f64) -> Vec<f64> {
    let mut radii = Vec::with_capacity(count + 2);
    let half = count / 2;
    let r_lin = 4.0 * r0;
    for i in 0..half {
        radii.push(r_lin * i as f64 / half as f64);
    }
    let far = 100.0 * r0 / eps.sqrt().max(1e-6);
    for i in 0..(count - half) {
        let t = i as f64 / (count - half) as f64;
        radii.push(r_lin * (far / r_lin).powf(t));
    }
    radii.push(far);
    radii.push(2.0 * far);
    radii
}
