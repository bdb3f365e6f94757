use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Complex;
use serde_json::{json, Value};

use schur_agler::certificate::{certificate_residual, certify, hereditary_spot_check, CertifyOptions};
use schur_agler::detrep::{extract_detrep, stability_scan, verify_detrep, DetRepOptions};
use schur_agler::domains::{archimedean_check, make_preset, DomainSpec, Preset};
use schur_agler::error::Error;
use schur_agler::realization::{eval_realization, realize, verify_realization, RationalMatFn, RealizeOptions};
use schur_agler::sdp::{DEFAULT_MAX_ITER, DEFAULT_RANK_TOL, DEFAULT_TOL};
use schur_agler_cli::json::{
    mat_to_json, parse, parse_poly, read_file, CertificateJson, ColligationJson, DetRepJson, DomainJson, HermPolyJson,
    InputError,
};

#[derive(Parser)]
#[command(name = "schur-agler", version, about = "Hermitian square certificates, contractive realizations and determinantal representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a sum-of-squares certificate of a Hermitian target.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Hermitian polynomial JSON.
        #[arg(long)]
        target: PathBuf,
        /// Random commuting tuples used to spot-check the certificate.
        #[arg(long, default_value_t = 8)]
        spot_trials: usize,
    },
    /// Build a contractive colligation for Q R^{-1}.
    Realize {
        #[command(flatten)]
        common: Common,
        #[arg(long = "Q")]
        q: PathBuf,
        #[arg(long = "R")]
        r: PathBuf,
    },
    /// Extract a contractive determinantal representation of p.
    Detrep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: PathBuf,
    },
    /// Evaluate a stored colligation or determinantal representation at one point.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "detrep", required_unless_present = "detrep")]
        colligation: Option<PathBuf>,
        #[arg(long)]
        detrep: Option<PathBuf>,
        /// Point as JSON, e.g. `[[0.1,0.0],[0.0,0.2]]`.
        #[arg(long)]
        z: String,
    },
    /// Re-check a stored certificate, colligation or determinantal representation.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "target")]
        certificate: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, requires_all = ["q", "r"])]
        colligation: Option<PathBuf>,
        #[arg(long = "Q")]
        q: Option<PathBuf>,
        #[arg(long = "R")]
        r: Option<PathBuf>,
        #[arg(long, requires = "p")]
        detrep: Option<PathBuf>,
        #[arg(long)]
        p: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        spot_trials: usize,
    },
    /// Certify coordinate bounds |z_i| <= r_i for the domain.
    Archimedean {
        #[command(flatten)]
        common: Common,
        /// Largest radius tried.
        #[arg(long, default_value_t = 10.0)]
        rmax: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Preset: polydisk:d, cartan1:LxM, cartan2:m, cartan3:m.
    #[arg(long, conflicts_with = "domain_file", required_unless_present = "domain_file")]
    domain: Option<String>,
    #[arg(long)]
    domain_file: Option<PathBuf>,
    /// Fixes the witness degree (sets both --Dmin and --Dmax).
    #[arg(long, conflicts_with_all = ["d_min", "d_max"])]
    degree: Option<usize>,
    #[arg(long = "Dmin", default_value_t = 0)]
    d_min: usize,
    #[arg(long = "Dmax", default_value_t = 4)]
    d_max: usize,
    /// Solver feasibility tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Threshold for the checks on sampled points.
    #[arg(long, default_value_t = 1e-6)]
    verify_tol: f64,
    /// Sample count for screens and verification.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// How a run ended: the exit code and, when one exists, the report.
struct Failure {
    code: u8,
    message: String,
    report: Option<Value>,
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure { code: 1, message: e.0, report: None }
    }
}

type Run<T> = Result<T, Failure>;

fn input(msg: impl Into<String>) -> Failure {
    Failure { code: 1, message: msg.into(), report: None }
}

fn pairs_json(p: &[(f64, f64)]) -> Value {
    json!(p.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>())
}

/// Numerical pipeline failures exit with 2 and still produce a report; malformed
/// input and parameter errors exit with 1.
fn pipeline_error(e: Error, base: Value) -> Failure {
    let (status, diagnostics) = match &e {
        Error::NotFound(nf) => (
            "not_found",
            json!({
                "highest_degree": nf.highest_degree,
                "attempts": nf.attempts.iter().map(|a| json!({
                    "degree": a.degree, "outcome": a.outcome, "iterations": a.iterations,
                    "slack": a.slack, "residual": a.residual,
                })).collect::<Vec<_>>(),
                "screen_witness": nf.screen_witness.as_deref().map(pairs_json),
                "screen_value": nf.screen_value,
            }),
        ),
        Error::ScreenFailure { reason, point, value } => {
            ("screen_failure", json!({ "reason": reason, "witness": pairs_json(point), "value": value }))
        }
        Error::NoScale(d) => ("no_scale", json!({ "degree": d })),
        Error::DivisionRemainder(r) => ("division_remainder", json!({ "remainder": r })),
        Error::ContractionViolation(s) => ("not_contractive", json!({ "sigma_max": s })),
        Error::Consistency(m) => ("inconsistent", json!({ "mismatch": m })),
        Error::NearSingular(c) => ("near_singular", json!({ "condition": c })),
        Error::Solver(s) => ("solver_failure", json!({ "message": s })),
        _ => return input(e.to_string()),
    };
    let message = match &e {
        Error::NotFound(nf) if nf.highest_degree.is_none() => {
            format!("necessity screen rejected the target at z = {:?}", nf.screen_witness.as_deref().unwrap_or(&[]))
        }
        _ => e.to_string(),
    };
    let mut report = base;
    report["status"] = json!(status);
    report["diagnostics"] = diagnostics;
    Failure { code: 2, message, report: Some(report) }
}

fn core<T>(r: schur_agler::Result<T>) -> Run<T> {
    r.map_err(|e| input(e.to_string()))
}

struct Setup {
    domain: DomainSpec<f64>,
    domain_json: Value,
    d_min: usize,
    d_max: usize,
}

impl Common {
    fn setup(&self) -> Run<Setup> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(input(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.verify_tol > 0.0 && self.verify_tol.is_finite()) {
            return Err(input(format!("--verify-tol must be positive, got {}", self.verify_tol)));
        }
        if self.samples == 0 {
            return Err(input("--samples must be at least 1"));
        }
        let (d_min, d_max) = self.degree.map_or((self.d_min, self.d_max), |d| (d, d));
        if d_min > d_max {
            return Err(input(format!("--Dmin {d_min} exceeds --Dmax {d_max}")));
        }
        let (domain, domain_json) = match (&self.domain, &self.domain_file) {
            (Some(s), _) => {
                let preset: Preset = s.parse().map_err(|e: Error| input(e.to_string()))?;
                (core(make_preset(preset))?, json!({ "preset": preset.to_string() }))
            }
            (None, Some(path)) => {
                let dj: DomainJson = read_file(path)?;
                let dom = dj.to_domain().map_err(|e| input(format!("{}: {e}", path.display())))?;
                (dom, json!({ "spec": dj }))
            }
            (None, None) => return Err(input("one of --domain or --domain-file is required")),
        };
        Ok(Setup { domain, domain_json, d_min, d_max })
    }

    fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            rank_tol: DEFAULT_RANK_TOL,
            screen: true,
            screen_samples: self.samples,
            seed: self.seed,
        }
    }

    fn base(&self, command: &str, s: &Setup) -> Value {
        let o = self.certify_options();
        json!({
            "command": command,
            "status": "ok",
            "domain": s.domain_json,
            "parameters": {
                "d_min": s.d_min,
                "d_max": s.d_max,
                "tol": o.tol,
                "max_iter": o.max_iter,
                "rank_tol": o.rank_tol,
                "verify_tol": self.verify_tol,
                "samples": self.samples,
                "seed": self.seed,
            },
        })
    }
}

fn parse_point(text: &str, d: usize) -> Run<Vec<Complex<f64>>> {
    let z: Vec<[f64; 2]> = parse(text, "--z")?;
    if z.len() != d {
        return Err(input(format!("--z has {} coordinates, the domain has {d}", z.len())));
    }
    if z.iter().flatten().any(|v| !v.is_finite()) {
        return Err(input("--z has a non-finite coordinate"));
    }
    Ok(z.iter().map(|c| Complex::new(c[0], c[1])).collect())
}

fn load_rational(q: &Path, r: &Path, d: usize) -> Run<RationalMatFn<f64>> {
    let (q, r) = (parse_poly(q)?, parse_poly(r)?);
    if q.nvars() != d || r.nvars() != d {
        return Err(input(format!("Q and R must have d = {d} variables")));
    }
    core(RationalMatFn::new(q, r))
}

fn load_scalar(p: &Path, d: usize) -> Run<schur_agler::MatPoly64> {
    let p = parse_poly(p)?;
    if p.nvars() != d || p.shape() != (1, 1) {
        return Err(input(format!("p must be a 1x1 polynomial in d = {d} variables")));
    }
    Ok(p)
}

/// Exit 2 with the report when a post-hoc check fails.
fn gate(mut report: Value, ok: bool) -> Run<Value> {
    if ok {
        return Ok(report);
    }
    report["status"] = json!("verification_failed");
    Err(Failure { code: 2, message: "verification failed".into(), report: Some(report) })
}

fn spot_json(r: &schur_agler::certificate::SpotCheckReport, trials: usize, size: usize) -> Value {
    json!({
        "trials": trials,
        "matrix_size": size,
        "failures": r.failures,
        "max_mismatch": r.max_mismatch(),
        "min_target_eig": if r.trials.is_empty() { None } else { Some(r.min_target_eig()) },
        "tol": r.tol,
    })
}

const SPOT_SIZE: usize = 4;

fn run(cli: Cli) -> Run<Value> {
    match cli.command {
        Command::Certify { common, target, spot_trials } => {
            let s = common.setup()?;
            let base = common.base("certify", &s);
            let t = read_file::<HermPolyJson>(&target)?.to_poly().map_err(|e| input(format!("{}: {e}", target.display())))?;
            if t.nvars() != s.domain.nvars() {
                return Err(input(format!("target has {} variables, the domain has {}", t.nvars(), s.domain.nvars())));
            }
            let cert = match certify(&t, &s.domain, s.d_min, s.d_max, &common.certify_options()) {
                Ok(c) => c,
                Err(e) => return Err(pipeline_error(e, base)),
            };
            let residual = core(certificate_residual(&t, &cert, &s.domain))?;
            let spot = core(hereditary_spot_check(&t, &cert, &s.domain, spot_trials, SPOT_SIZE, common.seed, common.verify_tol))?;
            let mut report = base;
            report["certificate"] = json!(CertificateJson::from_cert(&cert));
            report["verification"] = json!({ "coefficient_residual": residual, "spot_check": spot_json(&spot, spot_trials, SPOT_SIZE) });
            gate(report, residual <= common.verify_tol && spot.failures == 0)
        }
        Command::Realize { common, q, r } => {
            let s = common.setup()?;
            let base = common.base("realize", &s);
            let f = load_rational(&q, &r, s.domain.nvars())?;
            let opts = RealizeOptions { certify: common.certify_options(), screen_samples: common.samples };
            let col = match realize(&f, &s.domain, s.d_min, s.d_max, &opts) {
                Ok(c) => c,
                Err(e) => {
                    let exhausted = matches!(e, Error::NotFound(_));
                    let mut fail = pipeline_error(e, base);
                    if let (true, Some(r)) = (exhausted, fail.report.as_mut()) {
                        // the sup-norm screen passed, so this is either a norm question or a degree question
                        r["diagnostics"]["interpretation"] =
                            json!("degree exhausted: the sampled sup norm is below 1, but the Agler norm may be >= 1 or --Dmax may be too low");
                    }
                    return Err(fail);
                }
            };
            let v = core(verify_realization(&col, &f, &s.domain, common.samples, common.seed))?;
            let mut report = base;
            report["colligation"] = json!(ColligationJson::from_col(&col));
            report["verification"] = json!({
                "max_error": v.max_error, "sigma_max": v.sigma_max,
                "samples": v.samples, "seed": v.seed, "margin": v.margin,
            });
            gate(report, v.max_error <= common.verify_tol && v.sigma_max <= 1.0 + common.verify_tol)
        }
        Command::Detrep { common, p } => {
            let s = common.setup()?;
            let mut base = common.base("detrep", &s);
            let p = load_scalar(&p, s.domain.nvars())?;
            let opts = DetRepOptions {
                certify: common.certify_options(),
                screen_samples: common.samples,
                verify_samples: common.samples,
                ..DetRepOptions::default()
            };
            base["parameters"]["c_tol"] = json!(opts.c_tol);
            base["parameters"]["safety"] = json!(opts.safety);
            let rep = match extract_detrep(&p, &s.domain, s.d_min, s.d_max, &opts) {
                Ok(r) => r,
                Err(e) => return Err(pipeline_error(e, base)),
            };
            let v = core(verify_detrep(&rep, &p, &s.domain, common.samples, common.seed))?;
            let scan = core(stability_scan(&rep.q, &s.domain, common.samples, common.seed))?;
            let mut report = base;
            report["detrep"] = json!(DetRepJson::from_rep(&rep));
            report["verification"] = detrep_json(&v, &scan);
            gate(report, v.max_residual <= common.verify_tol && v.sigma_max <= 1.0 + common.verify_tol && !scan.flagged)
        }
        Command::Eval { common, colligation, detrep, z } => {
            let s = common.setup()?;
            let mut report = common.base("eval", &s);
            let z = parse_point(&z, s.domain.nvars())?;
            report["z"] = json!(z.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>());
            if let Some(path) = colligation {
                let col = read_file::<ColligationJson>(&path)?.to_col()?;
                report["value"] = json!(mat_to_json(&core(eval_realization(&col, &s.domain, &z))?));
            } else if let Some(path) = detrep {
                let rep = read_file::<DetRepJson>(&path)?.to_rep()?;
                let det = core(rep.pencil_det(&s.domain, &z))?;
                let q = core(rep.q.eval_scalar(&z))?;
                report["pencil_det"] = json!([det.re, det.im]);
                report["q"] = json!([q.re, q.im]);
            }
            Ok(report)
        }
        Command::Verify { common, certificate, target, colligation, q, r, detrep, p, spot_trials } => {
            let s = common.setup()?;
            let mut report = common.base("verify", &s);
            let tol = common.verify_tol;
            if let (Some(cp), Some(tp)) = (certificate, target) {
                let cert = read_file::<CertificateJson>(&cp)?.to_cert()?;
                let t = read_file::<HermPolyJson>(&tp)?.to_poly().map_err(|e| input(format!("{}: {e}", tp.display())))?;
                let residual = core(certificate_residual(&t, &cert, &s.domain))?;
                let spot = core(hereditary_spot_check(&t, &cert, &s.domain, spot_trials, SPOT_SIZE, common.seed, tol))?;
                report["verification"] = json!({ "coefficient_residual": residual, "spot_check": spot_json(&spot, spot_trials, SPOT_SIZE) });
                gate(report, residual <= tol && spot.failures == 0)
            } else if let (Some(cp), Some(q), Some(r)) = (colligation, q, r) {
                let col = read_file::<ColligationJson>(&cp)?.to_col()?;
                let f = load_rational(&q, &r, s.domain.nvars())?;
                let v = core(verify_realization(&col, &f, &s.domain, common.samples, common.seed))?;
                report["verification"] = json!({
                    "max_error": v.max_error, "sigma_max": v.sigma_max,
                    "samples": v.samples, "seed": v.seed, "margin": v.margin,
                });
                gate(report, v.max_error <= tol && v.sigma_max <= 1.0 + tol)
            } else if let (Some(dp), Some(pp)) = (detrep, p) {
                let rep = read_file::<DetRepJson>(&dp)?.to_rep()?;
                let p = load_scalar(&pp, s.domain.nvars())?;
                let v = core(verify_detrep(&rep, &p, &s.domain, common.samples, common.seed))?;
                let scan = core(stability_scan(&rep.q, &s.domain, common.samples, common.seed))?;
                report["verification"] = detrep_json(&v, &scan);
                gate(report, v.max_residual <= tol && v.sigma_max <= 1.0 + tol && !scan.flagged)
            } else {
                Err(input("verify needs --certificate/--target, --colligation/--Q/--R or --detrep/--p"))
            }
        }
        Command::Archimedean { common, rmax } => {
            let s = common.setup()?;
            let mut report = common.base("archimedean", &s);
            if !(rmax > 0.0 && rmax.is_finite()) {
                return Err(input(format!("--rmax must be positive, got {rmax}")));
            }
            report["parameters"]["rmax"] = json!(rmax);
            let a = core(archimedean_check(&s.domain, s.d_max, rmax))?;
            report["parameters"]["bisection_tol"] = json!(a.bisection_tol);
            report["variables"] = json!(a
                .variables
                .iter()
                .map(|v| json!({
                    "variable": v.variable,
                    "radius": v.radius,
                    "degree": v.feasible_degree,
                    "certificate": v.certificate.as_ref().map(CertificateJson::from_cert),
                }))
                .collect::<Vec<_>>());
            report["max_radius"] = json!(a.max_radius());
            if a.all_certified() {
                Ok(report)
            } else {
                report["status"] = json!("not_certified");
                Err(Failure { code: 2, message: "some coordinate has no certified bound".into(), report: Some(report) })
            }
        }
    }
}

fn detrep_json(v: &schur_agler::detrep::DetRepReport, scan: &schur_agler::detrep::StabilityReport) -> Value {
    json!({
        "max_residual": v.max_residual,
        "sigma_max": v.sigma_max,
        "origin_error": v.origin_error,
        "samples": v.samples,
        "seed": v.seed,
        "margin": v.margin,
        "q_scan": {
            "margins": scan.margins.iter().map(|m| json!({
                "margin": m.margin, "min_modulus": m.min_modulus, "point": pairs_json(&m.point),
            })).collect::<Vec<_>>(),
            "min": scan.min,
            "flagged": scan.flagged,
        },
    })
}

fn write_report(report: &Value, out: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

fn out_path(cli: &Cli) -> Option<PathBuf> {
    let c = match &cli.command {
        Command::Certify { common, .. }
        | Command::Realize { common, .. }
        | Command::Detrep { common, .. }
        | Command::Eval { common, .. }
        | Command::Verify { common, .. }
        | Command::Archimedean { common, .. } => common,
    };
    c.out.clone()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = out_path(&cli);
    let (code, report, message) = match run(cli) {
        Ok(r) => (0, Some(r), None),
        Err(f) => (f.code, f.report, Some(f.message)),
    };
    if let Some(r) = &report {
        if let Err(e) = write_report(r, out.as_deref()) {
            eprintln!("error: cannot write report: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(m) = message {
        eprintln!("error: {m}");
    }
    ExitCode::from(code)
}
