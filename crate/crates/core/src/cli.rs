//! Batch front door: loads an economy file, dispatches one analysis, and
//! emits a machine- or human-readable report, optionally exporting the
//! benefits network in DOT form.
//!
//! Exit-code contract (applied by the binary): 0 success, 1 input error
//! (unreadable/invalid files or flags), 2 analysis error (e.g. a profile
//! that is not efficient where efficiency is required).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde_json::{json, Value};
use thiserror::Error;

use crate::efficiency::{self, Verdict};
use crate::lindahl::{self, SolveOptions};
use crate::model::{self, ActionProfile, EconomySpec};
use crate::report;
use crate::spectral;
use crate::structure;
use crate::tolerances::Tolerances;

pub const MAX_ITER_ENV: &str = "EXTERNET_MAX_ITER";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("analysis error: {0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn analysis<E: std::fmt::Display>(module: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Analysis(format!("{module}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Diagnose,
    Solve,
    Weights,
    Essential,
    Separate,
    Cycles,
    Validate,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Diagnose => "diagnose",
            Command::Solve => "solve",
            Command::Weights => "weights",
            Command::Essential => "essential",
            Command::Separate => "separate",
            Command::Cycles => "cycles",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Table,
}

/// An action profile given either inline (`"1.5,2,0.25"`) or as a path to a
/// JSON array file.
#[derive(Debug, Clone)]
pub enum ProfileSource {
    Inline(Vec<f64>),
    File(PathBuf),
}

/// Parses a `--profile` argument: a comma-separated float list counts as
/// inline, anything else is a file path.
pub fn parse_profile_arg(s: &str) -> ProfileSource {
    let parts: Vec<&str> = s.split(',').collect();
    let floats: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match floats {
        Some(v) if !v.is_empty() => ProfileSource::Inline(v),
        _ => ProfileSource::File(PathBuf::from(s)),
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: PathBuf,
    pub profile: Option<ProfileSource>,
    /// 1-based agent ids, as they appear in files and reports.
    pub partition: Option<Vec<usize>>,
    pub tol_eig: Option<f64>,
    pub tol_pareto: Option<f64>,
    pub tol_fix: Option<f64>,
    pub output_format: OutputFormat,
    pub dot_export: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Iteration cap override; the `EXTERNET_MAX_ITER` environment variable
    /// fills this when unset.
    pub max_iter: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, input_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            input_path: input_path.into(),
            profile: None,
            partition: None,
            tol_eig: None,
            tol_pareto: None,
            tol_fix: None,
            output_format: OutputFormat::Json,
            dot_export: None,
            seed: None,
            max_iter: None,
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    /// The full report document.
    pub report: Value,
    /// What goes to stdout: the JSON document or the rendered table.
    pub rendered: String,
}

fn positive_override(name: &str, value: Option<f64>, default: f64) -> Result<f64, CliError> {
    match value {
        None => Ok(default),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(CliError::Input(format!(
            "{name} must be a positive number, got {v}"
        ))),
    }
}

fn build_tolerances(config: &RunConfig) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    tol.eig = positive_override("--tol-eig", config.tol_eig, tol.eig)?;
    tol.pareto = positive_override("--tol-pareto", config.tol_pareto, tol.pareto)?;
    tol.fix = positive_override("--tol-fix", config.tol_fix, tol.fix)?;
    tol.max_iter = config.max_iter;
    if tol.max_iter.is_none() {
        if let Ok(raw) = std::env::var(MAX_ITER_ENV) {
            let parsed: usize = raw
                .parse()
                .map_err(|_| CliError::Input(format!("{MAX_ITER_ENV}={raw} is not an integer")))?;
            tol.max_iter = Some(parsed);
        }
    }
    Ok(tol)
}

fn resolve_profile(
    source: &ProfileSource,
    n: usize,
) -> Result<ActionProfile, CliError> {
    let values = match source {
        ProfileSource::Inline(v) => v.clone(),
        ProfileSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(input(&format!("profile file {}", path.display())))?;
            serde_json::from_str::<Vec<f64>>(&text)
                .map_err(input(&format!("profile file {}", path.display())))?
        }
    };
    if values.len() != n {
        return Err(CliError::Input(format!(
            "profile has {} entries, economy has {n} agents",
            values.len()
        )));
    }
    ActionProfile::new(values).map_err(input("profile"))
}

fn partition_zero_based(partition: &[usize], n: usize) -> Result<Vec<usize>, CliError> {
    partition
        .iter()
        .map(|&id| {
            if id == 0 || id > n {
                Err(CliError::Input(format!(
                    "partition agent id {id} out of range 1..={n}"
                )))
            } else {
                Ok(id - 1)
            }
        })
        .collect()
}

/// Rounds to `digits` significant digits; used by table mode (6) and DOT
/// labels (4).
fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (x * factor).round() / factor
}

fn sig6(x: f64) -> String {
    format!("{}", round_sig(x, 6))
}

fn vec6(v: &[f64]) -> String {
    v.iter().map(|&x| sig6(x)).collect::<Vec<_>>().join(", ")
}

/// Writes the benefits network in DOT form: edge `j -> i` (provider to
/// beneficiary) labeled with `B_ij` to 4 significant digits.
pub fn export_dot(b: &Array2<f64>, path: &Path) -> Result<(), CliError> {
    let n = b.nrows();
    let mut out = String::from("digraph benefits {\n");
    for i in 0..n {
        let _ = writeln!(out, "  {};", i + 1);
    }
    for i in 0..n {
        for j in 0..n {
            let v = b[[i, j]];
            if v > 0.0 {
                let _ = writeln!(
                    out,
                    "  {} -> {} [label=\"{}\"];",
                    j + 1,
                    i + 1,
                    round_sig(v, 4)
                );
            }
        }
    }
    out.push_str("}\n");
    std::fs::write(path, out).map_err(input(&format!("dot export {}", path.display())))
}

pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let text = std::fs::read_to_string(&config.input_path)
        .map_err(input(&format!("economy file {}", config.input_path.display())))?;
    let spec = EconomySpec::from_json_str(&text).map_err(input("economy file"))?;
    let tol = build_tolerances(config)?;
    let n = spec.n();

    let profile = match &config.profile {
        Some(src) => Some(resolve_profile(src, n)?),
        None => None,
    };

    let mut envelope = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.command.as_str(),
        "input": config.input_path.display().to_string(),
        "tolerances": {
            "eig": tol.eig,
            "pareto": tol.pareto,
            "fix": tol.fix,
        },
    });
    let body = envelope.as_object_mut().expect("envelope is an object");

    let mut table = String::new();
    let mut dot_matrix: Option<Array2<f64>> = None;

    match config.command {
        Command::Diagnose => {
            let report = match &profile {
                Some(a) => efficiency::classify_interior(&spec, a, &tol)
                    .map_err(analysis("efficiency"))?,
                None => efficiency::classify_status_quo(&spec, &tol)
                    .map_err(analysis("efficiency"))?,
            };
            if !(report.verdict == Verdict::StatusQuoImprovable && spec.has_log_terms()) {
                dot_matrix = model::benefits_at(&spec, &report.profile).ok().map(|b| b.matrix().clone());
            }
            let _ = writeln!(table, "verdict        {}", report.verdict.as_str());
            let _ = writeln!(table, "rho            {}", sig6(report.rho));
            if let Some(d) = &report.direction {
                let _ = writeln!(table, "direction      [{}]", vec6(&d.to_vec()));
            }
            if let Some(w) = &report.weights {
                let _ = writeln!(table, "weights        [{}]", vec6(&w.to_vec()));
            }
            if let Some(note) = &report.note {
                let _ = writeln!(table, "note           {note}");
            }
            body.insert("efficiency".into(), report::efficiency_json(&report));
        }
        Command::Solve => {
            let opts = SolveOptions {
                seed: config.seed,
                max_iter: tol.max_iter,
                tol,
                ..SolveOptions::default()
            };
            let cert = lindahl::solve_centrality(&spec, profile.as_ref(), &opts)
                .map_err(analysis("lindahl"))?;
            let verification =
                lindahl::verify_lindahl(&spec, &cert, &tol).map_err(analysis("lindahl"))?;
            dot_matrix = model::benefits_at(&spec, &cert.a_star)
                .ok()
                .map(|b| b.matrix().clone());
            let _ = writeln!(table, "a_star         [{}]", vec6(&cert.a_star.to_vec()));
            let _ = writeln!(table, "theta          [{}]", vec6(&cert.theta.to_vec()));
            let _ = writeln!(
                table,
                "residuals      centrality {}  budget {}  rho {}",
                sig6(cert.residual_centrality),
                sig6(cert.residual_budget),
                sig6(cert.residual_rho)
            );
            let _ = writeln!(table, "scale_free     {}", cert.scale_free);
            let _ = writeln!(table, "verified       {}", verification.pass);
            body.insert("certificate".into(), report::certificate_json(&cert));
            body.insert(
                "verification".into(),
                report::verification_json(&verification),
            );
        }
        Command::Weights => {
            let a = profile.ok_or_else(|| {
                CliError::Input("weights requires --profile (the efficient profile)".into())
            })?;
            let w =
                efficiency::pareto_weights(&spec, &a, &tol).map_err(analysis("efficiency"))?;
            dot_matrix = model::benefits_at(&spec, &a).ok().map(|b| b.matrix().clone());
            let _ = writeln!(table, "theta          [{}]", vec6(&w.theta.to_vec()));
            let _ = writeln!(table, "foc_residual   {}", sig6(w.foc_residual));
            let _ = writeln!(table, "rho            {}", sig6(w.rho));
            body.insert("weights".into(), report::weights_json(&w));
        }
        Command::Essential => {
            let report =
                structure::essential_agents(&spec, &tol).map_err(analysis("structure"))?;
            dot_matrix = model::benefits_at(&spec, &ActionProfile::zeros(n))
                .ok()
                .map(|b| b.matrix().clone());
            let _ = writeln!(table, "rho_full       {}", sig6(report.rho_full));
            for (i, &rho) in report.rho_without.iter().enumerate() {
                let _ = writeln!(table, "without {:>2}     {}", i + 1, sig6(rho));
            }
            let essential_ids: Vec<String> = report
                .essential
                .iter()
                .map(|&i| (i + 1).to_string())
                .collect();
            let _ = writeln!(table, "essential      [{}]", essential_ids.join(", "));
            body.insert("essential".into(), report::essential_json(&report));
        }
        Command::Separate => {
            let partition = config.partition.as_ref().ok_or_else(|| {
                CliError::Input("separate requires --partition (1-based agent ids)".into())
            })?;
            let m = partition_zero_based(partition, n)?;
            let (a_star, theta) = match &profile {
                Some(a) => {
                    let w = efficiency::pareto_weights(&spec, a, &tol)
                        .map_err(analysis("efficiency"))?;
                    (a.clone(), w.theta)
                }
                None => {
                    let opts = SolveOptions {
                        seed: config.seed,
                        max_iter: tol.max_iter,
                        tol,
                        ..SolveOptions::default()
                    };
                    let cert = lindahl::solve_centrality(&spec, None, &opts)
                        .map_err(analysis("lindahl"))?;
                    (cert.a_star, cert.theta)
                }
            };
            let report = structure::separation_bound(&spec, &a_star, &theta, &m, &tol)
                .map_err(analysis("structure"))?;
            dot_matrix = model::benefits_at(&spec, &a_star)
                .ok()
                .map(|b| b.matrix().clone());
            let ids: Vec<String> = report.partition.iter().map(|&i| (i + 1).to_string()).collect();
            let _ = writeln!(table, "partition      [{}]", ids.join(", "));
            let _ = writeln!(table, "bound          {}", sig6(report.bound));
            for t in &report.cross_terms {
                let _ = writeln!(
                    table,
                    "cross {:>2} {:>2}    {}",
                    t.i + 1,
                    t.j + 1,
                    sig6(t.value)
                );
            }
            body.insert("separation".into(), report::separation_json(&report));
        }
        Command::Cycles => {
            let at = match &profile {
                Some(a) => a.clone(),
                None => ActionProfile::zeros(n),
            };
            let b = model::benefits_at(&spec, &at).map_err(analysis("model"))?;
            let lmax = (5 * n).max(20);
            let values =
                spectral::cycle_value_estimate(b.matrix(), lmax).map_err(analysis("spectral"))?;
            let rho = spectral::spectral_radius_tol(b.matrix(), &tol)
                .map_err(analysis("spectral"))?;
            let running_max = values.iter().cloned().fold(0.0_f64, f64::max);
            dot_matrix = Some(b.matrix().clone());
            let _ = writeln!(table, "{:>4}  {}", "l", "trace(B^l)^(1/l)");
            for (idx, v) in values.iter().enumerate() {
                let _ = writeln!(table, "{:>4}  {}", idx + 1, sig6(*v));
            }
            let _ = writeln!(table, "max            {}", sig6(running_max));
            let _ = writeln!(table, "rho            {}", sig6(rho));
            body.insert(
                "cycles".into(),
                json!({
                    "lmax": lmax,
                    "values": values,
                    "running_max": running_max,
                    "rho": rho,
                }),
            );
        }
        Command::Validate => {
            let samples: Vec<ActionProfile> = profile.clone().into_iter().collect();
            let report = model::validate(&spec, &samples);
            if let Ok(b) = model::benefits_at(&spec, &ActionProfile::ones(n)) {
                dot_matrix = Some(b.matrix().clone());
            }
            for s in &report.samples {
                let _ = writeln!(
                    table,
                    "sample [{}]  costly {}  positive {}  irreducible {}",
                    vec6(&s.profile),
                    s.costly_actions,
                    s.positive_externalities,
                    s.irreducible
                );
            }
            let _ = writeln!(table, "pass           {}", report.pass);
            body.insert("validation".into(), report::validation_json(&report));
        }
    }

    if let Some(dot_path) = &config.dot_export {
        match &dot_matrix {
            Some(m) => {
                export_dot(m, dot_path)?;
                body.insert("dot".into(), json!(dot_path.display().to_string()));
            }
            None => {
                body.insert("dot".into(), Value::Null);
            }
        }
    }

    let rendered = match config.output_format {
        OutputFormat::Json => {
            serde_json::to_string_pretty(&envelope).expect("report serializes")
        }
        OutputFormat::Table => table.trim_end().to_string(),
    };
    Ok(RunOutput {
        report: envelope,
        rendered,
    })
}
