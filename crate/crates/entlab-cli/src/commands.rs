//! Subcommand arguments and their execution. Argument structs double as
//! the `parameters` of a run manifest.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use entlab::bsg_construct::{bsg_entropy_report, verify_lemma_weak_bsg};
use entlab::covering_experiments::{run_experiments, ExperimentConfig};
use entlab::distance_energy::{distance_entropy_report, riesz_energy, DistanceMode};
use entlab::entropy_core::{conditional_entropy, entropy, entropy_of_axes, mutual_information};
use entlab::examples_gallery::{expected_claims, generate, run_example_suite, ExampleSpec, Family};
use entlab::frostman_cert::{conditional_frostman_constant, frostman_constant_1d, hierarchy_report, joint_and_square_constants};
use entlab::pushforward::ScalarMap;
use entlab::{Dist, Error, FORMAT_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::suites::{self, Suite};

/// Failure of a run before any check could be evaluated.
#[derive(Debug, thiserror::Error)]
pub enum UsageError {
    #[error("{0}")]
    Lib(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

pub type UsageResult<T> = core::result::Result<T, UsageError>;

fn read(path: &Path) -> UsageResult<String> {
    std::fs::read_to_string(path).map_err(|source| UsageError::Io {
        path: path.to_owned(),
        source,
    })
}

/// A law from a JSON file or an example generator.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InputArgs {
    /// Distribution file (`{format_version, grid, cells}`).
    #[arg(long, conflicts_with = "family")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<PathBuf>,
    /// Example family to generate instead of reading a file.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[arg(long, default_value_t = 2)]
    #[serde(default)]
    pub m: u32,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub l: u32,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl InputArgs {
    pub fn load(&self) -> UsageResult<Dist> {
        match (&self.dist, self.family) {
            (Some(path), None) => Ok(Dist::from_json_str(&read(path)?)?),
            (None, Some(family)) => {
                let mut spec = ExampleSpec::new(family, self.m, self.l);
                spec.eta = self.eta;
                Ok(generate(&spec)?)
            }
            _ => Err(UsageError::Invalid("give exactly one of --dist or --family".into())),
        }
    }

    /// As [`InputArgs::load`], but a one-axis family becomes the i.i.d.
    /// pair its claims are stated for. Files are used as given.
    pub fn load_pair(&self) -> UsageResult<Dist> {
        let d = self.load()?;
        Ok(if self.family.is_some() && d.dim() == 1 { d.product(&d) } else { d })
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Discretization level; defaults to the level of the law.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// Axes to condition on.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditional: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FrostmanKind {
    Marginal,
    Joint,
    Conditional,
    Hierarchy,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "marginal")]
    pub kind: FrostmanKind,
    #[arg(long)]
    pub s1: f64,
    /// Second exponent; defaults to `s1`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<f64>,
    /// Measured axis of a conditional certificate, or the axis of a
    /// marginal one.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub axis: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MapChoice {
    Identity,
    Square,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsgArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Coarse level of the coupling; defaults to the level of the law.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Map applied to `X`; `Y` always uses the identity.
    #[arg(long, value_enum, default_value = "identity")]
    pub f: MapChoice,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    pub inner: f64,
    #[arg(long, default_value_t = 1.0)]
    pub outer: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Distance,
    DistanceSmallS,
    Squared,
}

impl From<ModeChoice> for DistanceMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::Distance => DistanceMode::Distance,
            ModeChoice::DistanceSmallS => DistanceMode::DistanceSmallS,
            ModeChoice::Squared => DistanceMode::Squared,
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "squared")]
    pub mode: ModeChoice,
    #[arg(long)]
    pub s: f64,
    /// Frostman constant of the law, for the `log C` corrected excess.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Also report the Riesz energy at this exponent.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riesz: Option<f64>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleArgs {
    pub family: Family,
    #[arg(long)]
    pub m: u32,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub l: u32,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// List the expectations without evaluating them.
    #[arg(long)]
    #[serde(default)]
    pub claims: bool,
}

impl ExampleArgs {
    pub fn spec(&self) -> ExampleSpec {
        ExampleSpec {
            family: self.family,
            m: self.m,
            l: self.l,
            n: self.n,
            eta: self.eta,
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringArgs {
    /// Sweep file `{format_version, experiments: [...]}`.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Extra two-axis distribution files added to the corpus.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixture: Vec<PathBuf>,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "parameters", rename_all = "snake_case")]
pub enum Command {
    /// Discretized entropies of a law.
    Entropy(EntropyArgs),
    /// Frostman certificates.
    Frostman(FrostmanArgs),
    /// Entropy BSG coupling and its conclusions.
    Bsg(BsgArgs),
    /// Entropy of the distance law.
    Distance(DistanceArgs),
    /// Example family generators and their claims.
    Example(ExampleArgs),
    /// Covering-number sweeps.
    Covering(CoveringArgs),
    /// Seeded verification suites.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Entropy(_) => "entropy",
            Command::Frostman(_) => "frostman",
            Command::Bsg(_) => "bsg",
            Command::Distance(_) => "distance",
            Command::Example(_) => "example",
            Command::Covering(_) => "covering",
            Command::Verify(_) => "verify",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Verify(v) => Some(v.seed),
            _ => None,
        }
    }
}

/// JSON result, an optional CSV table and the verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub json: Value,
    pub csv: Option<String>,
    pub pass: bool,
    /// Human-readable lines for stderr.
    pub log: Vec<String>,
}

impl Outcome {
    fn new(command: &Command, result: Value, pass: bool) -> Self {
        let (name, parameters) = match serde_json::to_value(command).expect("serializable") {
            Value::Object(mut map) => (map.remove("command"), map.remove("parameters")),
            _ => (None, None),
        };
        Outcome {
            json: json!({
                "format_version": FORMAT_VERSION,
                "command": name,
                "parameters": parameters,
                "pass": pass,
                "result": result,
            }),
            csv: None,
            pass,
            log: Vec::new(),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn csv_string<T: Serialize>(rows: &[T], header: &[&str]) -> UsageResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(|e| UsageError::Invalid(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| UsageError::Invalid(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| UsageError::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn execute(command: &Command) -> UsageResult<Outcome> {
    match command {
        Command::Entropy(a) => entropy_cmd(command, a),
        Command::Frostman(a) => frostman_cmd(command, a),
        Command::Bsg(a) => bsg_cmd(command, a),
        Command::Distance(a) => distance_cmd(command, a),
        Command::Example(a) => example_cmd(command, a),
        Command::Covering(a) => covering_cmd(command, a),
        Command::Verify(a) => verify_cmd(command, a),
    }
}

fn entropy_cmd(command: &Command, a: &EntropyArgs) -> UsageResult<Outcome> {
    let d = a.input.load()?;
    let level = a.level.unwrap_or(d.level());
    let d = d.change_level(level);
    let marginals = (0..d.dim()).map(|i| entropy_of_axes(&d, &[i])).collect::<Result<Vec<_>, _>>()?;
    let mut result = json!({
        "level": level,
        "entropy": entropy(&d),
        "marginals": marginals,
    });
    if !a.conditional.is_empty() {
        result["conditional"] = json!({
            "given": a.conditional,
            "value": conditional_entropy(&d, &a.conditional)?,
        });
    }
    if d.dim() == 2 {
        result["mutual_information"] = json!(mutual_information(&d, &[0], &[1])?);
    }
    Ok(Outcome::new(command, result, true))
}

fn frostman_cmd(command: &Command, a: &FrostmanArgs) -> UsageResult<Outcome> {
    let d = match a.kind {
        FrostmanKind::Marginal => a.input.load()?,
        _ => a.input.load_pair()?,
    };
    let s2 = a.s2.unwrap_or(a.s1);
    let (result, pass) = match a.kind {
        FrostmanKind::Marginal => {
            let m = if d.dim() == 1 { d } else { d.marginal(&[a.axis])? };
            (to_value(&frostman_constant_1d(&m, a.s1)?), true)
        }
        FrostmanKind::Joint => {
            let (joint, square) = joint_and_square_constants(&d, a.s1, s2)?;
            (json!({ "joint": joint, "square": square }), true)
        }
        FrostmanKind::Conditional => (to_value(&conditional_frostman_constant(&d, a.s1, a.axis)?), true),
        FrostmanKind::Hierarchy => {
            let h = hierarchy_report(&d, a.s1, s2)?;
            let pass = h.reports.iter().all(|r| r.pass);
            (to_value(&h), pass)
        }
    };
    Ok(Outcome::new(command, result, pass))
}

fn bsg_cmd(command: &Command, a: &BsgArgs) -> UsageResult<Outcome> {
    let d = a.input.load_pair()?;
    let n = a.n.unwrap_or(d.level());
    let f = match a.f {
        MapChoice::Identity => ScalarMap::identity(),
        MapChoice::Square => ScalarMap::square(a.alpha, a.inner, a.outer)?,
    };
    let g = ScalarMap::identity();
    let report = bsg_entropy_report(&d, n, &f, &g)?;
    let weak = verify_lemma_weak_bsg(&d, n, &f, &g)?;
    let pass = report.normative_pass() && weak.pass;
    let mut out = Outcome::new(command, json!({ "report": report, "weak_bsg": weak }), pass);
    out.log = report
        .reports()
        .iter()
        .chain([&weak])
        .map(|r| format!("{} {}: slack {:.6}", if r.pass { "ok" } else { "FAIL" }, r.name, r.slack))
        .collect();
    Ok(out)
}

fn distance_cmd(command: &Command, a: &DistanceArgs) -> UsageResult<Outcome> {
    let d = a.input.load()?;
    let n = a.n.unwrap_or(d.level());
    let report = distance_entropy_report(&d, a.mode.into(), a.s, a.c, n)?;
    let mut result = json!({ "report": report });
    if let Some(s) = a.riesz {
        result["riesz"] = to_value(&riesz_energy(&d, s)?);
    }
    Ok(Outcome::new(command, result, true))
}

fn example_cmd(command: &Command, a: &ExampleArgs) -> UsageResult<Outcome> {
    let spec = a.spec();
    if a.claims {
        return Ok(Outcome::new(command, json!({ "claims": expected_claims(&spec)? }), true));
    }
    let reports = run_example_suite(&spec)?;
    let pass = reports.iter().all(|r| r.pass);
    let mut out = Outcome::new(command, json!({ "reports": reports }), pass);
    out.log = reports
        .iter()
        .map(|r| format!("{} {}: {} vs {}", if r.pass { "ok" } else { "FAIL" }, r.name, r.lhs, r.rhs))
        .collect();
    Ok(out)
}

/// Sweep file contents.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepFile {
    pub format_version: u32,
    /// Parsed one at a time so a bad entry only fails its own row.
    pub experiments: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringRow {
    pub index: usize,
    pub config: String,
    pub size: Option<usize>,
    pub edges: Option<usize>,
    pub count_set: Option<usize>,
    pub count_first: Option<usize>,
    pub count_form: Option<usize>,
    pub exponent_hat: Option<f64>,
    pub exponent_first: Option<f64>,
    pub exponent_form: Option<f64>,
    pub nonconc_c: Option<f64>,
    pub error: Option<String>,
}

pub const COVERING_HEADER: [&str; 12] = [
    "index",
    "config",
    "size",
    "edges",
    "count_set",
    "count_first",
    "count_form",
    "exponent_hat",
    "exponent_first",
    "exponent_form",
    "nonconc_c",
    "error",
];

fn covering_cmd(command: &Command, a: &CoveringArgs) -> UsageResult<Outcome> {
    let text = read(&a.config)?;
    let sweep: SweepFile = serde_json::from_str(&text).map_err(|e| UsageError::Invalid(format!("{}: {e}", a.config.display())))?;
    if sweep.format_version != FORMAT_VERSION {
        return Err(UsageError::Invalid(format!("unsupported format_version {}", sweep.format_version)));
    }
    let parsed: Vec<Result<ExperimentConfig, String>> = sweep
        .experiments
        .iter()
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| format!("bad config: {e}")))
        .collect();
    let valid: Vec<ExperimentConfig> = parsed.iter().filter_map(|p| p.as_ref().ok().cloned()).collect();
    let mut results = run_experiments(&valid).into_iter();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (index, (raw, p)) in sweep.experiments.iter().zip(&parsed).enumerate() {
        let outcome = match p {
            Ok(_) => results.next().expect("one result per valid config").map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        let mut row = CoveringRow {
            index,
            config: serde_json::to_string(raw).expect("serializable"),
            size: None,
            edges: None,
            count_set: None,
            count_first: None,
            count_form: None,
            exponent_hat: None,
            exponent_first: None,
            exponent_form: None,
            nonconc_c: None,
            error: None,
        };
        match &outcome {
            Ok(r) => {
                row.size = Some(r.size);
                row.edges = Some(r.edges);
                row.count_set = Some(r.counts.set);
                row.count_first = Some(r.counts.first);
                row.count_form = Some(r.counts.form);
                row.exponent_hat = Some(r.exponent_hat);
                row.exponent_first = Some(r.exponent_first);
                row.exponent_form = Some(r.exponent_form);
                row.nonconc_c = Some(r.nonconc_c);
                entries.push(json!({ "index": index, "config": raw, "result": r }));
            }
            Err(e) => {
                row.error = Some(e.clone());
                entries.push(json!({ "index": index, "config": raw, "error": e }));
            }
        }
        rows.push(row);
    }
    let pass = rows.iter().all(|r| r.error.is_none());
    let mut out = Outcome::new(command, json!({ "experiments": entries }), pass);
    out.log = rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("row {}: {e}", r.index)))
        .collect();
    out.csv = Some(csv_string(&rows, &COVERING_HEADER)?);
    Ok(out)
}

/// Frozen values a fixture file may carry next to its law.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureExpectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub marginals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutual_information: Option<f64>,
}

/// Tolerance for frozen fixture values.
pub const FIXTURE_TOL: f64 = 1e-9;

fn fixture_reports(name: &str, d: &Dist, e: &FixtureExpectations) -> UsageResult<Vec<suites::Tagged>> {
    let mut out = Vec::new();
    let mut push = |what: String, got: f64, want: f64| {
        out.push(suites::Tagged {
            check: "fixture_expectations".into(),
            report: entlab::Report::eq(format!("{name}: {what}"), got, want, FIXTURE_TOL),
        })
    };
    if let Some(h) = e.entropy {
        push("entropy".into(), entropy(d), h);
    }
    if !e.marginals.is_empty() && e.marginals.len() != d.dim() {
        return Err(UsageError::Invalid(format!("{name}: {} marginals for {} axes", e.marginals.len(), d.dim())));
    }
    for (i, &h) in e.marginals.iter().enumerate() {
        push(format!("marginal {i}"), entropy_of_axes(d, &[i])?, h);
    }
    if let Some(mi) = e.mutual_information {
        push("mutual information".into(), mutual_information(d, &[0], &[1])?, mi);
    }
    Ok(out)
}

fn verify_cmd(command: &Command, a: &VerifyArgs) -> UsageResult<Outcome> {
    let mut extra = Vec::new();
    let mut frozen = Vec::new();
    for path in &a.fixture {
        let text = read(path)?;
        let value: Value = serde_json::from_str(&text).map_err(|e| UsageError::Invalid(format!("{}: {e}", path.display())))?;
        let d = Dist::from_json_value(&value)?;
        if d.dim() != 2 {
            return Err(UsageError::Invalid(format!("{}: fixtures must have two axes", path.display())));
        }
        if let Some(e) = value.get("expected") {
            let e: FixtureExpectations =
                serde_json::from_value(e.clone()).map_err(|e| UsageError::Invalid(format!("{}: {e}", path.display())))?;
            frozen.extend(fixture_reports(&path.display().to_string(), &d, &e)?);
        }
        extra.push(d);
    }
    let mut tagged = suites::run_suite(a.suite, a.seed, a.trials, &extra)?;
    tagged.extend(frozen);
    let summary = suites::summarize(&tagged);
    let failures = suites::failures(&tagged);
    let pass = failures.is_empty();
    let mut out = Outcome::new(
        command,
        json!({
            "suite": a.suite.name(),
            "checks": tagged.len(),
            "failures": failures,
            "summary": summary,
        }),
        pass,
    );
    out.log = summary
        .iter()
        .map(|r| format!("{:<32} {:>6} checks {:>4} failures  min slack {:.3e}", r.check, r.count, r.failures, r.min_slack))
        .chain(failures.iter().map(|t| format!("FAIL {}: {}", t.check, serde_json::to_string(&t.report).expect("serializable"))))
        .collect();
    out.csv = Some(csv_string(
        &summary,
        &["check", "count", "failures", "normative", "min_slack", "median_slack", "max_slack"],
    )?);
    Ok(out)
}
