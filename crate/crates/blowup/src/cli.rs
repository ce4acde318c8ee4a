//! Configuration-driven front end.
//!
//! A run is described by a single strict-schema JSON document whose
//! `command` field selects the workflow: `certify`, `kaplan-verify`,
//! `simulate`, or `fujita-scan`. The binary is a thin wrapper around
//! [`run`], which returns the process exit code:
//!
//! * 0 - success (certified / verified / simulated / scan complete)
//! * 1 - error (validation, quadrature, i/o, config)
//! * 2 - verification negative (kaplan-verify failed, scan incomplete)
//! * 3 - not certified
//!
//! Identical config + seed produce byte-identical output files.

use crate::certifier::{
    certify, epsilon_search, fujita_exponent, fujita_scan, InitialDatum, KaplanCertificate,
    Verdict,
};
use crate::error::{Error, Result};
use crate::kaplan::{
    compute_bounds, default_verification_radii, verify_subsolution, KaplanParams,
};
use crate::reaction::{validate_reaction, ReactionConfig, ReactionSpec};
use crate::simulator::{convergence_probe, run as run_sim, SimConfig, Termination};
use crate::specfun::OperatorParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY_NEGATIVE: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 3;

/// Scale selection: a fixed number or the string `"search"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonChoice {
    Fixed(f64),
    Mode(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KaplanSection {
    pub beta: f64,
    pub epsilon: EpsilonChoice,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub box_halfwidth: f64,
    pub points_per_dim: usize,
    pub dt_init: f64,
    pub t_max: f64,
    #[serde(default = "default_blowup_threshold")]
    pub blowup_threshold: f64,
    /// also certify and compare t_b against the Osgood bound
    #[serde(default)]
    pub with_certificate: bool,
}

fn default_blowup_threshold() -> f64 {
    1e10
}

/// The single configuration document (strict: unknown keys abort).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub operator: OperatorParams,
    #[serde(default)]
    pub reaction: Option<ReactionConfig>,
    #[serde(default)]
    pub datum: Option<InitialDatum>,
    #[serde(default)]
    pub kaplan: Option<KaplanSection>,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub p_grid: Option<Vec<f64>>,
    /// lambda override for kaplan-verify (0 demonstrates non-vacuity)
    #[serde(default)]
    pub lambda_override: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Parsed command line of the thin binary.
#[derive(Debug, Clone)]
pub struct CliArgs {
    pub config: PathBuf,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub verbose: bool,
}

/// Entry point used by the binary: returns the process exit code and
/// prints diagnostics to stderr on failure.
pub fn run(args: &CliArgs) -> i32 {
    match dispatch(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(args: &CliArgs) -> Result<i32> {
    let raw = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config: RunConfig = serde_json::from_str(&raw)
        .map_err(|e| Error::Config(format!("config rejected: {e}")))?;
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    let out_dir = args
        .output
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;
    config.operator.validate()?;

    match config.command.as_str() {
        "certify" => cmd_certify(&config, &out_dir, args.verbose),
        "kaplan-verify" => cmd_kaplan_verify(&config, &out_dir, args.verbose),
        "simulate" => cmd_simulate(&config, &out_dir, args.verbose),
        "fujita-scan" => cmd_fujita_scan(&config, &out_dir, args.verbose),
        other => Err(Error::Config(format!(
            "unknown command '{other}' (expected certify | kaplan-verify | simulate | fujita-scan)"
        ))),
    }
}

fn require_reaction(config: &RunConfig) -> Result<ReactionSpec> {
    let cfg = config
        .reaction
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs a 'reaction' section".into()))?;
    let spec = ReactionSpec::from_config(cfg)?;
    if !spec.is_zero() {
        let report = validate_reaction(&spec);
        if !report.pass {
            let failed: Vec<String> = report
                .items
                .iter()
                .filter(|i| !i.pass)
                .map(|i| i.name.clone())
                .collect();
            return Err(Error::Validation(format!(
                "reaction {} fails structural hypotheses: {}",
                spec.describe(),
                failed.join("; ")
            )));
        }
    }
    Ok(spec)
}

fn require_datum(config: &RunConfig) -> Result<InitialDatum> {
    let datum = config
        .datum
        .clone()
        .ok_or_else(|| Error::Config("this command needs a 'datum' section".into()))?;
    datum.validate()?;
    Ok(datum)
}

fn require_kaplan(config: &RunConfig) -> Result<&KaplanSection> {
    config
        .kaplan
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs a 'kaplan' section".into()))
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    Ok(())
}

/// `certify`: compute bounds, then a single certificate or a scale search.
pub fn cmd_certify(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<i32> {
    let spec = require_reaction(config)?;
    let datum = require_datum(config)?;
    let ks = require_kaplan(config)?;
    let op = config.operator;

    let cert: KaplanCertificate = match &ks.epsilon {
        EpsilonChoice::Fixed(eps) => {
            let kp = KaplanParams::new(ks.beta, *eps, op)?;
            let kp1 = KaplanParams::new(ks.beta, 1.0, op)?;
            let bounds = compute_bounds(&kp1)?;
            certify(&datum, &spec, &kp, &bounds)?
        }
        EpsilonChoice::Mode(mode) if mode == "search" => {
            let report = epsilon_search(&datum, &spec, ks.beta, &op)?;
            match report.best {
                Some(c) => c,
                None => {
                    // keep the audit of the attempt: report the best margin
                    let best_margin = report
                        .margin_curve
                        .iter()
                        .map(|(_, m)| *m)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let summary = format!(
                        "verdict: not certified\nno scale on the search grid certified; best \
                         margin {best_margin:.6e}\n"
                    );
                    write_text(&out_dir.join("certificate_summary.txt"), &summary)?;
                    if verbose {
                        eprintln!("{summary}");
                    }
                    return Ok(EXIT_NOT_CERTIFIED);
                }
            }
        }
        EpsilonChoice::Mode(other) => {
            return Err(Error::Config(format!(
                "kaplan.epsilon must be a number or \"search\", got \"{other}\""
            )));
        }
    };

    write_text(
        &out_dir.join("certificate.json"),
        &serde_json::to_string_pretty(&cert)?,
    )?;
    let summary = render_certificate_summary(&cert, &spec, &op);
    write_text(&out_dir.join("certificate_summary.txt"), &summary)?;
    if verbose {
        eprintln!("{summary}");
    }
    Ok(if cert.verdict == Verdict::Certified { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

fn render_certificate_summary(
    cert: &KaplanCertificate,
    spec: &ReactionSpec,
    op: &OperatorParams,
) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "operator: -{} Lap + {} (-Lap)^{} on R^{}\n",
        op.a, op.b, op.s, op.n
    ));
    s.push_str(&format!("reaction: {}\n", spec.describe()));
    s.push_str(&format!("kaplan weight: beta = {}, eps = {:.6e}\n", cert.beta, cert.epsilon));
    s.push_str(&format!("lambda = eps^s lambda0 = {:.12e}\n", cert.lambda));
    s.push_str(&format!("weighted mass I = {:.12e}\n", cert.integral_i));
    s.push_str(&format!("threshold s_f(lambda) = {:.12e}\n", cert.threshold));
    s.push_str(&format!("margin = {:.12e}\n", cert.margin));
    s.push_str(&format!(
        "verdict: {}\n",
        if cert.verdict == Verdict::Certified { "certified" } else { "not certified" }
    ));
    if let Some(tb) = cert.blowup_time_bound {
        s.push_str(&format!("blow-up time bound T* = {tb:.12e}\n"));
    }
    s.push_str(&format!("standing assumption: {}\n", cert.standing_assumption));
    s
}

/// Audit record of a kaplan-verify run.
#[derive(Debug, Serialize)]
struct KaplanAudit {
    bounds: crate::kaplan::KaplanBounds,
    exponent_note: String,
    checks: Vec<KaplanCheck>,
    all_pass: bool,
}

#[derive(Debug, Serialize)]
struct KaplanCheck {
    epsilon: f64,
    lambda: f64,
    min_margin: f64,
    samples: usize,
    pass: bool,
}

/// `kaplan-verify`: compute the constants and verify the subsolution
/// inequality across the scale grid (or at a fixed lambda override).
pub fn cmd_kaplan_verify(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<i32> {
    let ks = require_kaplan(config)?;
    let op = config.operator;
    let kp1 = KaplanParams::new(ks.beta, 1.0, op)?;
    let bounds = compute_bounds(&kp1)?;
    let seed = config.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let eps_grid: Vec<f64> = match &ks.epsilon {
        EpsilonChoice::Fixed(e) => vec![*e],
        _ => vec![1.0, 0.1, 0.01],
    };
    let mut checks = Vec::new();
    for &eps in &eps_grid {
        let kp = KaplanParams::new(ks.beta, eps, op)?;
        let lambda = config
            .lambda_override
            .unwrap_or_else(|| eps.powf(op.s) * bounds.lambda0);
        let mut radii = default_verification_radii(2000, bounds.r0, eps);
        // seeded far-field probes on top of the deterministic grid
        for _ in 0..32 {
            radii.push(rng.gen_range(0.0..200.0 * bounds.r0));
        }
        let rep = verify_subsolution(&kp, lambda, &radii, &bounds)?;
        checks.push(KaplanCheck {
            epsilon: eps,
            lambda,
            min_margin: rep.min_margin,
            samples: rep.samples,
            pass: rep.pass,
        });
    }
    let all_pass = checks.iter().all(|c| c.pass);
    let audit = KaplanAudit {
        bounds,
        exponent_note: "scale threshold implemented as lambda = eps^s lambda0, following the \
                        proof and the explicit nonexistence condition; the statement's printed \
                        eps^{1/s} exponent is flagged as a suspected typo (for eps < 1 it is \
                        weaker than the proof delivers)"
            .into(),
        checks,
        all_pass,
    };
    write_text(&out_dir.join("kaplan_audit.json"), &serde_json::to_string_pretty(&audit)?)?;
    if verbose {
        eprintln!(
            "kaplan-verify: lambda0 = {:.6e}, R0 = {:.4}, all_pass = {all_pass}",
            audit.bounds.lambda0, audit.bounds.r0
        );
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_VERIFY_NEGATIVE })
}

/// Sidecar metadata of a simulation run.
#[derive(Debug, Serialize)]
struct SimSidecar {
    termination: Termination,
    significant_clamps: usize,
    total_clamps: usize,
    tail_mass_indicator: f64,
    lambda: Option<f64>,
    certificate: Option<CertComparison>,
    convergence: Option<ConvergenceSummary>,
}

#[derive(Debug, Serialize)]
struct CertComparison {
    certified: bool,
    blowup_time_bound: Option<f64>,
    detected_blowup_time: Option<f64>,
    within_safety_factor: Option<bool>,
}

#[derive(Debug, Serialize)]
struct ConvergenceSummary {
    drift: f64,
    refined_termination: Termination,
}

/// `simulate`: run the pseudospectral solver, write the trajectory CSV and
/// a structured sidecar; optionally compare against a certificate.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<i32> {
    let spec = require_reaction(config)?;
    let datum = require_datum(config)?;
    let sim_section = config
        .sim
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs a 'sim' section".into()))?;
    let op = config.operator;

    let (kaplan, lambda, certificate) = match &config.kaplan {
        Some(ks) => {
            let eps = match ks.epsilon {
                EpsilonChoice::Fixed(e) => e,
                _ => 1.0,
            };
            let kp = KaplanParams::new(ks.beta, eps, op)?;
            let kp1 = KaplanParams::new(ks.beta, 1.0, op)?;
            let bounds = compute_bounds(&kp1)?;
            let lambda = eps.powf(op.s) * bounds.lambda0;
            let cert = if sim_section.with_certificate && !spec.is_zero() {
                Some(certify(&datum, &spec, &kp, &bounds)?)
            } else {
                None
            };
            (Some(kp), Some(lambda), cert)
        }
        None => (None, None, None),
    };

    let sim = SimConfig {
        op,
        reaction: spec,
        u0: datum,
        box_halfwidth: sim_section.box_halfwidth,
        points_per_dim: sim_section.points_per_dim,
        dt_init: sim_section.dt_init,
        t_max: sim_section.t_max,
        blowup_threshold: sim_section.blowup_threshold,
        kaplan,
        kaplan_lambda: lambda,
    };
    let traj = run_sim(&sim)?;
    write_text(&out_dir.join("trajectory.csv"), &traj.to_csv())?;

    let convergence = if sim_section.with_certificate {
        let rep = convergence_probe(&sim)?;
        Some(ConvergenceSummary {
            drift: rep.drift,
            refined_termination: rep.refined_termination,
        })
    } else {
        None
    };

    let cert_cmp = certificate.as_ref().map(|c| {
        let tb = traj.blowup_time();
        CertComparison {
            certified: c.verdict == Verdict::Certified,
            blowup_time_bound: c.blowup_time_bound,
            detected_blowup_time: tb,
            within_safety_factor: match (c.blowup_time_bound, tb) {
                (Some(bound), Some(t)) => Some(t <= 1.5 * bound),
                _ => None,
            },
        }
    });
    if let Some(c) = &certificate {
        write_text(&out_dir.join("certificate.json"), &serde_json::to_string_pretty(c)?)?;
    }

    let sidecar = SimSidecar {
        termination: traj.termination,
        significant_clamps: traj.significant_clamps,
        total_clamps: traj.total_clamps,
        tail_mass_indicator: traj.tail_mass_indicator,
        lambda: traj.lambda,
        certificate: cert_cmp,
        convergence,
    };
    write_text(
        &out_dir.join("trajectory_meta.json"),
        &serde_json::to_string_pretty(&sidecar)?,
    )?;
    if verbose {
        eprintln!("simulate: {:?}, {} snapshots", traj.termination, traj.snapshots.len());
    }
    Ok(EXIT_OK)
}

/// `fujita-scan`: scan the exponent grid and write the CSV table.
pub fn cmd_fujita_scan(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<i32> {
    let datum = require_datum(config)?;
    let ks = require_kaplan(config)?;
    let op = config.operator;
    let p_grid = config
        .p_grid
        .clone()
        .ok_or_else(|| Error::Config("fujita-scan needs a 'p_grid' list".into()))?;
    if p_grid.is_empty() {
        return Err(Error::Config("p_grid must not be empty".into()));
    }
    match fujita_scan(&op, &datum, ks.beta, &p_grid) {
        Ok(table) => {
            write_text(&out_dir.join("fujita_scan.csv"), &table.to_csv())?;
            if verbose {
                eprintln!(
                    "fujita-scan: p_F = {}, {} rows",
                    fujita_exponent(&op),
                    table.rows.len()
                );
            }
            let all_subcritical_ok = table
                .rows
                .iter()
                .filter(|r| r.p < table.p_fujita && !datum.is_zero())
                .all(|r| r.certified);
            Ok(if all_subcritical_ok { EXIT_OK } else { EXIT_VERIFY_NEGATIVE })
        }
        Err(Error::ScanIncomplete(msg)) => {
            eprintln!("scan incomplete: {msg}");
            Ok(EXIT_VERIFY_NEGATIVE)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_config_rejects_unknown_keys() {
        let raw = r#"{
            "command": "certify",
            "operator": {"a": 1.0, "b": 1.0, "s": 0.5, "dim": 1},
            "mystery_knob": 7
        }"#;
        let parsed: std::result::Result<RunConfig, _> = serde_json::from_str(raw);
        assert!(parsed.is_err());
    }

    #[test]
    fn config_roundtrip_minimal() {
        let raw = r#"{
            "command": "kaplan-verify",
            "operator": {"a": 1.0, "b": 1.0, "s": 0.5, "dim": 1},
            "kaplan": {"beta": 1.5, "epsilon": "search"},
            "seed": 7
        }"#;
        let parsed: RunConfig = serde_json::from_str(raw).unwrap();
        assert_eq!(parsed.command, "kaplan-verify");
        assert_eq!(parsed.seed, Some(7));
        match &parsed.kaplan.as_ref().unwrap().epsilon {
            EpsilonChoice::Mode(m) => assert_eq!(m, "search"),
            _ => panic!("expected search mode"),
        }
    }

    #[test]
    fn epsilon_choice_numeric() {
        let raw = r#"{"beta": 1.0, "epsilon": 0.25}"#;
        let section: KaplanSection = serde_json::from_str(raw).unwrap();
        match section.epsilon {
            EpsilonChoice::Fixed(v) => assert_eq!(v, 0.25),
            _ => panic!("expected fixed epsilon"),
        }
    }
}
