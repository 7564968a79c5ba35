//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure (error JSON on stderr),
//! 2 input guard violation or malformed invocation.

use crate::bifurcation::{self, BifurcationCurve, DEFAULT_S_MIN};
use crate::error::Error;
use crate::integrator::transform::{shift_of_beta, v_of_w};
use crate::integrator::{flux_identity_defect, picard_solve_t};
use crate::intersections;
use crate::model::{self, ProblemConfig};
use crate::stability;
use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Exponents,
    Singular,
    Trace,
    Classify,
    Stability,
    Intersections,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Exp,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "weighted-gelfand", about = "Bifurcation diagrams for -Δu = λ V_k(|x|) f(u) on the unit disc", allow_negative_numbers = true)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Nonlinearity: exp (e^u) or pow ((1+u)^p).
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Weight exponent k > 0.
    #[arg(long)]
    k: Option<f64>,
    /// Power exponent, p > k + 1.
    #[arg(long)]
    p: Option<f64>,
    /// Line-oriented `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    output: Option<Format>,
    /// Write the payload here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    /// Lower end of the canonical orbit in s.
    #[arg(long)]
    s_min: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub command: Command,
    pub model: ModelKind,
    pub k: f64,
    pub p: Option<f64>,
    #[serde(skip)]
    pub config: ProblemConfig,
    pub tol: f64,
    pub s_min: f64,
    pub samples: Option<usize>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub output: Format,
    pub out: Option<PathBuf>,
}

/// A rejected invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub guard: String,
    pub message: String,
}

impl CliError {
    fn guard(guard: &str, message: impl Into<String>) -> Self {
        Self {
            code: 2,
            guard: guard.to_owned(),
            message: message.into(),
        }
    }

    fn from_error(e: &Error) -> Self {
        Self {
            code: if e.is_input_guard() { 2 } else { 1 },
            guard: e.kind().to_owned(),
            message: e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.guard, "message": self.message, "exit_code": self.code }).to_string()
    }
}

const CONFIG_KEYS: [&str; 15] = [
    "model", "k", "p", "output", "out", "tol", "s_min", "samples", "beta", "gamma", "t_min", "t_max", "beta_min", "beta_max", "command",
];

fn read_config_file(path: &PathBuf) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::guard("config_file", format!("cannot read {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::guard("config_file", format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) || key == "command" {
            return Err(CliError::guard("config_file", format!("line {}: unknown key `{key}`", n + 1)));
        }
        entries.push((key, value.trim().to_owned()));
    }
    Ok(entries)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::guard("config_file", format!("invalid value `{value}` for `{key}`")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, CliError> {
    T::from_str(value, true).map_err(|_| CliError::guard("config_file", format!("invalid value `{value}` for `{key}`")))
}

/// Parses the tokens after the program name, merging an optional config
/// file underneath the flags.
pub fn parse_run_spec<I, S>(tokens: I) -> Result<RunSpec, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("weighted-gelfand")).chain(tokens.into_iter().map(Into::into));
    let mut args = Args::try_parse_from(argv).map_err(|e| CliError {
        code: if e.use_stderr() { 2 } else { 0 },
        guard: "usage".to_owned(),
        message: e.to_string(),
    })?;
    if let Some(path) = args.config.clone() {
        for (key, value) in read_config_file(&path)? {
            match key.as_str() {
                "model" => {
                    args.model.get_or_insert(parse_enum(&key, &value)?);
                }
                "k" => {
                    args.k.get_or_insert(parse_value(&key, &value)?);
                }
                "p" => {
                    args.p.get_or_insert(parse_value(&key, &value)?);
                }
                "output" => {
                    args.output.get_or_insert(parse_enum(&key, &value)?);
                }
                "out" => {
                    args.out.get_or_insert(PathBuf::from(&value));
                }
                "tol" => {
                    args.tol.get_or_insert(parse_value(&key, &value)?);
                }
                "s_min" => {
                    args.s_min.get_or_insert(parse_value(&key, &value)?);
                }
                "samples" => {
                    args.samples.get_or_insert(parse_value(&key, &value)?);
                }
                "beta" => {
                    args.beta.get_or_insert(parse_value(&key, &value)?);
                }
                "gamma" => {
                    args.gamma.get_or_insert(parse_value(&key, &value)?);
                }
                "t_min" => {
                    args.t_min.get_or_insert(parse_value(&key, &value)?);
                }
                "t_max" => {
                    args.t_max.get_or_insert(parse_value(&key, &value)?);
                }
                "beta_min" => {
                    args.beta_min.get_or_insert(parse_value(&key, &value)?);
                }
                "beta_max" => {
                    args.beta_max.get_or_insert(parse_value(&key, &value)?);
                }
                _ => unreachable!("keys are filtered by read_config_file"),
            }
        }
    }
    let model = args.model.ok_or_else(|| CliError::guard("missing_model", "--model exp|pow is required"))?;
    let k = args.k.ok_or_else(|| CliError::guard("missing_k", "--k is required"))?;
    let config = match model {
        ModelKind::Exp => ProblemConfig::exponential(k),
        ModelKind::Pow => {
            let p = args.p.ok_or_else(|| CliError::guard("missing_p", "the power model requires --p with p > p_s = k + 1"))?;
            ProblemConfig::power(k, p)
        }
    }
    .map_err(|e| CliError::from_error(&e))?;
    let tol = args.tol.unwrap_or(bifurcation::DEFAULT_TOL);
    if !(tol > 0.0) {
        return Err(CliError::guard("tolerance", format!("tol must be positive (got {tol})")));
    }
    Ok(RunSpec {
        command: args.command,
        model,
        k,
        p: if model == ModelKind::Pow { args.p } else { None },
        config,
        tol,
        s_min: args.s_min.unwrap_or(DEFAULT_S_MIN),
        samples: args.samples,
        beta: args.beta,
        gamma: args.gamma,
        t_min: args.t_min,
        t_max: args.t_max,
        beta_min: args.beta_min,
        beta_max: args.beta_max,
        output: args.output.unwrap_or(Format::Json),
        out: args.out,
    })
}

/// Result of [`run`]: exit code and the text for each stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Shortest round-trip formatting.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Payload {
    json: Value,
    csv: String,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn exponents(spec: &RunSpec) -> Payload {
    let table = spec.config.exponent_table();
    let ex = table.exponents;
    let eig: Vec<Value> = table.eigenvalues.iter().map(|z| json!({ "re": z.re, "im": z.im })).collect();
    let json = json!({
        "model": spec.model,
        "k": spec.k,
        "p": spec.p,
        "p_s": ex.p_s,
        "p_jl_minus": ex.p_jl_minus,
        "p_c": ex.p_c,
        "p_jl_plus": ex.p_jl_plus,
        "eigenvalues": eig,
        "hardy_coefficient": table.hardy_coefficient,
        "oscillates": table.oscillates,
    });
    let mut csv = String::from("key,value\n");
    for (key, value) in [
        ("p_s", num(ex.p_s)),
        ("p_jl_minus", num(ex.p_jl_minus)),
        ("p_c", num(ex.p_c)),
        ("p_jl_plus", ex.p_jl_plus.finite().map(num).unwrap_or_else(|| "Infinity".into())),
        ("eig_plus_re", num(table.eigenvalues[0].re)),
        ("eig_plus_im", num(table.eigenvalues[0].im)),
        ("eig_minus_re", num(table.eigenvalues[1].re)),
        ("eig_minus_im", num(table.eigenvalues[1].im)),
        ("hardy_coefficient", num(table.hardy_coefficient)),
        ("oscillates", table.oscillates.to_string()),
    ] {
        csv.push_str(&format!("{key},{value}\n"));
    }
    Payload { json, csv }
}

fn singular(spec: &RunSpec) -> Payload {
    let (t_min, t_max) = (spec.t_min.unwrap_or(-30.0), spec.t_max.unwrap_or(30.0));
    let rows = model::singular_table(&spec.config, t_min, t_max, spec.samples.unwrap_or(100));
    let sol = model::singular_solution(&spec.config);
    let h1 = model::singular_h1_membership(&spec.config);
    let max_residual = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let mut csv = String::from("t,r,U_star,residual\n");
    for (t, r, u, res) in &rows {
        csv.push_str(&format!("{},{},{},{}\n", num(*t), opt_num(*r), num(*u), num(*res)));
    }
    let json = json!({
        "lambda_star": sol.lambda_star,
        "h1_member": sol.h1_member,
        "h1_verdict": h1.verdict,
        "h1_partials": h1.partials,
        "max_residual": max_residual,
        "rows": rows.iter().map(|(t, r, u, res)| json!({ "t": t, "r": r, "U_star": u, "residual": res })).collect::<Vec<_>>(),
    });
    Payload { json, csv }
}

fn curve(spec: &RunSpec) -> Result<BifurcationCurve, Error> {
    let orbit = bifurcation::canonical_trajectory_with(&spec.config, spec.s_min, spec.tol)?;
    let grid = match (spec.beta_min, spec.beta_max) {
        (Some(lo), Some(hi)) => {
            let n = spec.samples.unwrap_or(2001).max(2);
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
        (None, None) => bifurcation::default_beta_grid(&orbit),
        _ => return Err(Error::domain("beta_window", "give both --beta-min and --beta-max, or neither")),
    };
    bifurcation::trace_curve_on(&orbit, &grid)
}

fn trace(spec: &RunSpec) -> Result<Payload, Error> {
    let curve = curve(spec)?;
    Ok(Payload {
        csv: curve.to_csv(),
        json: to_value(&curve),
    })
}

fn classify(spec: &RunSpec) -> Result<Payload, Error> {
    let curve = curve(spec)?;
    let classification = match (&curve.classification, &curve.classification_note) {
        (Some(c), _) => c.clone(),
        (None, Some(note)) => return Err(Error::Inconclusive(note.clone())),
        (None, None) => return Err(Error::Inconclusive("no classification".into())),
    };
    let json = json!({
        "config": curve.config_label,
        "classification": classification.label,
        "empirical": classification.empirical,
        "predicted": classification.predicted,
        "advisory": classification.advisory,
        "lambda_star": curve.lambda_star,
        "lambda_sup": curve.lambda_sup,
        "beta_star": curve.beta_star.map(|b| b.as_exponent()),
        "beta_peak": curve.beta_peak,
        "turning_points": curve.turning_points,
        "evidence": classification.evidence,
    });
    let mut csv = String::from("key,value\n");
    csv.push_str(&format!("classification,{}\n", classification.label));
    csv.push_str(&format!("lambda_star,{}\n", num(curve.lambda_star)));
    csv.push_str(&format!("beta_star,{}\n", curve.beta_star.map(|b| b.as_exponent().to_string()).unwrap_or_default()));
    csv.push_str(&format!("turning_points,{}\n", classification.evidence.turning_points));
    csv.push_str(&format!("sign_changes,{}\n", classification.evidence.sign_changes));
    Ok(Payload { json, csv })
}

fn stability_report(spec: &RunSpec) -> Result<Payload, Error> {
    let report = stability::morse_classification(&spec.config)?;
    let mut csv = String::from("n,epsilon,Q\n");
    for b in &report.bands {
        csv.push_str(&format!("{},{},{}\n", b.n, num(b.epsilon), num(b.q)));
    }
    Ok(Payload {
        json: to_value(&report),
        csv,
    })
}

fn intersections_report(spec: &RunSpec) -> Result<Payload, Error> {
    let orbit = bifurcation::canonical_trajectory_with(&spec.config, spec.s_min, spec.tol)?;
    let (beta, gamma) = (spec.beta.unwrap_or(1.0), spec.gamma.unwrap_or(2.0));
    let window = (spec.t_min.unwrap_or(-40.0), spec.t_max.unwrap_or(5.0));
    let count = intersections::intersection_count(&orbit, beta, gamma, window)?;
    let separation = intersections::separation_check(&orbit, beta, gamma, window)?;
    let zero = if spec.config.is_exponential() {
        None
    } else {
        Some(intersections::zero_before_e(&orbit, beta)?)
    };
    let verdict = if separation.separated {
        "separated"
    } else if count.count > 0 {
        "intersecting"
    } else {
        "ordered_below_singular_violated"
    };
    let json = json!({
        "count": count.count,
        "locations": count.locations,
        "periods": count.periods,
        "asymptotic_period": count.asymptotic_period,
        "verdict": verdict,
        "separation": separation,
        "zero_before_e": zero,
    });
    let n = spec.samples.unwrap_or(1000).max(2);
    let mut csv = String::from("t,r_or_flag,w_beta,w_gamma,diff\n");
    for i in 0..n {
        let t = window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64;
        let a = intersections::family_value(&orbit, beta, t)?[0];
        let b = intersections::family_value(&orbit, gamma, t)?[0];
        let r = crate::coords::r_of_t(t).map(num).unwrap_or_else(|| if t < 0.0 { "≈e".into() } else { "≈0".into() });
        csv.push_str(&format!("{},{},{},{},{}\n", num(t), r, num(a), num(b), num(b - a)));
    }
    Ok(Payload { json, csv })
}

fn oracle(spec: &RunSpec) -> Result<Payload, Error> {
    let beta = spec.beta.unwrap_or(2.0);
    let t_stop = spec.t_min.unwrap_or(0.0);
    let solution = picard_solve_t(&spec.config, beta, t_stop, spec.tol)?;
    let orbit = bifurcation::canonical_trajectory_with(&spec.config, spec.s_min, spec.tol)?;
    let shift = shift_of_beta(&spec.config, beta)?;
    let mut max_diff: f64 = 0.0;
    let mut max_v: f64 = 0.0;
    let mut rows = Vec::new();
    let stride = (solution.samples.len() / spec.samples.unwrap_or(200).max(1)).max(1);
    for x in solution.samples.iter().step_by(stride) {
        let [w, dw] = orbit.eval(x.t - shift)?;
        let (v, _) = v_of_w(&spec.config, x.t, w, dw);
        max_diff = max_diff.max((v - x.v).abs());
        max_v = max_v.max(x.v.abs());
        rows.push((x.t, x.v, v));
    }
    let (v_picard, _) = solution.value_at_t(t_stop)?;
    let [w, dw] = orbit.eval(t_stop - shift)?;
    let v_transformed = v_of_w(&spec.config, t_stop, w, dw).0;
    let json = json!({
        "beta": beta,
        "t_stop": t_stop,
        "v_picard": v_picard,
        "v_transformed": v_transformed,
        "rel_diff_at_stop": (v_picard - v_transformed).abs() / v_picard.abs(),
        "max_rel_diff": max_diff / max_v,
        "flux_defect": flux_identity_defect(&spec.config, &solution),
        "apriori_excess": solution.apriori_excess(),
        "monotonicity_defect": solution.monotonicity_defect(),
        "zero_crossing_t": solution.zero_crossing,
        "picard": solution.picard,
    });
    let mut csv = String::from("t,v_picard,v_transformed\n");
    for (t, a, b) in rows {
        csv.push_str(&format!("{},{},{}\n", num(t), num(a), num(b)));
    }
    Ok(Payload { json, csv })
}

/// Dispatches a validated spec.
pub fn run(spec: &RunSpec) -> Outcome {
    let payload = match spec.command {
        Command::Exponents => Ok(exponents(spec)),
        Command::Singular => Ok(singular(spec)),
        Command::Trace => trace(spec),
        Command::Classify => classify(spec),
        Command::Stability => stability_report(spec),
        Command::Intersections => intersections_report(spec),
        Command::Oracle => oracle(spec),
    };
    let payload = match payload {
        Ok(p) => p,
        Err(e) => {
            let err = CliError::from_error(&e);
            return Outcome {
                code: err.code,
                stdout: String::new(),
                stderr: err.to_json() + "\n",
            };
        }
    };
    let text = match spec.output {
        Format::Json => serde_json::to_string_pretty(&payload.json).expect("json") + "\n",
        Format::Csv => payload.csv,
    };
    match &spec.out {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => Outcome {
                code: 0,
                stdout: String::new(),
                stderr: String::new(),
            },
            Err(e) => {
                let err = CliError {
                    code: 1,
                    guard: "io".into(),
                    message: format!("cannot write {}: {e}", path.display()),
                };
                Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: err.to_json() + "\n",
                }
            }
        },
        None => Outcome {
            code: 0,
            stdout: text,
            stderr: String::new(),
        },
    }
}

/// Parses and runs; the entry point used by the binary.
pub fn main_with<I, S>(tokens: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match parse_run_spec(tokens) {
        Ok(spec) => run(&spec),
        Err(e) if e.code == 0 => Outcome {
            code: 0,
            stdout: e.message,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.code,
            stdout: String::new(),
            stderr: format!("{}\n{}\n", e.message.trim_end(), e.to_json()),
        },
    }
}
