//! JSON-configured experiment batches.
//!
//! A configuration lists experiments; each runs from its own seed, derived
//! from the master seed as the first `u64` of stream `j` (its position in
//! the list). Random instances inside an experiment use stream `i` of that
//! seed, so results do not depend on the number of worker threads.
//!
//! Exit statuses: 0 no violations, 1 at least one violation, 2 schema or
//! input error, 3 solver or I/O failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::concentration::{self, TargetSet};
use crate::config::{Counts, Functional, Point, PointMeasure, PointSet, UStatistic};
use crate::error::{input, Error, Result};
use crate::ground::{AlphaFamily, CostFunction, EuclideanBox, FiniteSpace};
use crate::inequalities::{self, reports_to_csv, BaseCertificate, BaseCost, VerificationReport};
use crate::logsob::{self, EntropySpec};
use crate::measures::DiscreteMeasure;
use crate::processes::{
    binomial_law, chain_rule_check, law_tv, mixed_binomial_law, poisson_law, sample_mixed_binomial, sample_poisson,
    thin_law, ConfigurationSpaceIndex, ProcessLaw,
};
use crate::stats::stream_rng;
use crate::transport::{marton_cost, ot_lp, weak_transport};

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Slack added to every verifier tolerance.
    #[serde(default)]
    pub extra_tolerance: f64,
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    /// Used for output file names; defaults to `<position>_<kind>`.
    #[serde(default)]
    pub name: Option<String>,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Transport(TransportParams),
    Laws(LawsParams),
    VerifyDembo(DemboParams),
    VerifyMarton(MartonParams),
    VerifyTalagrand(TalagrandParams),
    Concentration(ConcentrationParams),
    Logsob(LogsobParams),
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Transport(_) => "transport",
            ExperimentSpec::Laws(_) => "laws",
            ExperimentSpec::VerifyDembo(_) => "verify-dembo",
            ExperimentSpec::VerifyMarton(_) => "verify-marton",
            ExperimentSpec::VerifyTalagrand(_) => "verify-talagrand",
            ExperimentSpec::Concentration(_) => "concentration",
            ExperimentSpec::Logsob(_) => "logsob",
        }
    }
}

/// Optimal transport, Marton cost and the weak `u²`/Hamming cost on random
/// probability pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportParams {
    /// Number of ground points (ignored when `points` is given).
    #[serde(default)]
    pub k: Option<usize>,
    /// Euclidean coordinates of the ground points.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_cost")]
    pub cost: CostFunction,
    pub pairs: usize,
}

fn default_cost() -> CostFunction {
    CostFunction::Hamming
}

/// Point-process law on the enumerated configurations of `k` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    Binomial { n: u32 },
    MixedBinomial { kappa: Vec<f64> },
    /// Poisson with intensity `intensity · μ`, truncated at the mass cap.
    Poisson { intensity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawsParams {
    pub mu: Vec<f64>,
    pub cap: u32,
    pub process: ProcessSpec,
    /// Random laws for the chain-rule identity.
    #[serde(default)]
    pub chain_rule_laws: usize,
    /// Monte Carlo draws compared with the enumerated law.
    #[serde(default)]
    pub samples: usize,
    /// Thinning parameters; the thinned law is compared with the Poisson
    /// law of the same intensity.
    #[serde(default)]
    pub thin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemboParams {
    pub k: usize,
    pub t: Vec<f64>,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartonParams {
    pub mu: Vec<f64>,
    pub cap: u32,
    pub process: ProcessSpec,
    pub t: Vec<f64>,
    /// Random pairs of laws.
    pub pairs: usize,
    /// Also check every pair of point-mass laws.
    #[serde(default)]
    pub point_masses: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TalagrandParams {
    /// Binomial processes of unit-variance Gaussian points with the
    /// translation coupling; `a` is the constant on each entropy.
    Gaussian { m: Vec<f64>, n: Vec<u32>, a: f64 },
    /// Mixed binomial processes on a finite space with an estimated base
    /// constant for the linear cost.
    Discrete {
        mu: Vec<f64>,
        kappa: Vec<f64>,
        #[serde(default)]
        points: Option<Vec<Vec<f64>>>,
        #[serde(default = "default_cost")]
        cost: CostFunction,
        pairs: usize,
        constant_samples: usize,
        inflation: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConcentrationParams {
    /// Exact two-set bounds for `A = {mass ≤ mass_threshold}` under a
    /// truncated Poisson law with intensity `intensity · μ`.
    TwoSet {
        mu: Vec<f64>,
        cap: u32,
        intensity: f64,
        mass_threshold: u64,
        t: f64,
        r: Vec<f64>,
    },
    /// `c_A = d_A²/2` on random instances.
    ConvexDistance {
        k: usize,
        max_multiplicity: u32,
        max_set: usize,
        instances: usize,
    },
    /// Edge count of the random geometric graph on `[0,1]^dimension`.
    Deviation {
        rate: f64,
        dimension: usize,
        radius: f64,
        delta: f64,
        beta: f64,
        r: Vec<f64>,
        samples: usize,
    },
}

/// Functionals of Euclidean configurations for the monotone inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EuclideanFunctional {
    Mass,
    /// `scale · mass²`.
    MassSquared { scale: f64 },
    /// Number of ordered pairs at distance at most `radius`, times `scale`.
    EdgeCount { radius: f64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LogsobParams {
    /// Infimum-convolution inequality for random `F` with `|F| ≤ bound`.
    Rc {
        mu: Vec<f64>,
        cap: u32,
        intensity: f64,
        functions: usize,
        bound: f64,
        lambdas: Vec<f64>,
        #[serde(default)]
        entropy: EntropySpec,
    },
    /// `F - R_{λc₁}F ≤ λ Σ α₁*(D⁻F/λ)` for random convex nondecreasing `F`
    /// on every simple configuration.
    Gradient {
        k: usize,
        cap: u32,
        functions: usize,
        #[serde(default = "one")]
        lambda: f64,
    },
    /// Monte Carlo check for a Poisson process on `[0,1]^dimension`.
    Monotone {
        rate: f64,
        dimension: usize,
        functional: EuclideanFunctional,
        lambdas: Vec<f64>,
        samples: usize,
    },
}

fn one() -> f64 {
    1.0
}

/// Summary of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub name: String,
    pub kind: String,
    pub seed: u64,
    pub checks: usize,
    pub violations: usize,
    pub summary: Value,
    /// `(file name, CSV contents)`.
    #[serde(skip)]
    pub tables: Vec<(String, String)>,
}

/// Outcome of a batch: the JSON report and the CSV tables.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub status: i32,
    pub report: Value,
    pub tables: Vec<(String, String)>,
}

pub const STATUS_OK: i32 = 0;
pub const STATUS_VIOLATION: i32 = 1;
pub const STATUS_SCHEMA: i32 = 2;
pub const STATUS_FAILURE: i32 = 3;

/// Status for an error raised while parsing or running.
pub fn status_of(err: &Error) -> i32 {
    match err {
        Error::Solver { .. } | Error::Io(_) => STATUS_FAILURE,
        _ => STATUS_SCHEMA,
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)?;
    validate(&config)?;
    Ok(config)
}

fn check_prob(name: &str, w: &[f64]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::probability(w.to_vec()).map_err(|e| Error::Input(format!("{name}: {e}")))
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        input(format!("t must lie in (0,1), got {t}"))
    }
}

fn check_process(mu: &[f64], cap: u32, p: &ProcessSpec) -> Result<()> {
    check_prob("mu", mu)?;
    if mu.is_empty() {
        return input("mu must be nonempty");
    }
    match p {
        ProcessSpec::Binomial { n } if *n > cap => input(format!("binomial size {n} exceeds the mass cap {cap}")),
        ProcessSpec::MixedBinomial { kappa } => {
            check_prob("kappa", kappa)?;
            if kappa.len() > cap as usize + 1 {
                return input("kappa charges masses above the cap");
            }
            Ok(())
        }
        ProcessSpec::Poisson { intensity } if !(*intensity > 0.0 && intensity.is_finite()) => {
            input(format!("intensity must be positive, got {intensity}"))
        }
        _ => Ok(()),
    }
}

fn check_space(k: Option<usize>, points: &Option<Vec<Vec<f64>>>, cost: &CostFunction) -> Result<FiniteSpace> {
    let space = match (points, k) {
        (Some(p), _) => FiniteSpace::from_points(p)?,
        (None, Some(k)) => FiniteSpace::discrete(k)?,
        (None, None) => return input("either k or points is required"),
    };
    cost.matrix(&space)?;
    Ok(space)
}

/// Semantic checks that serde cannot express.
pub fn validate(config: &ExperimentConfig) -> Result<()> {
    if config.experiments.is_empty() {
        return input("no experiments configured");
    }
    if !(config.extra_tolerance >= 0.0 && config.extra_tolerance.is_finite()) {
        return input("extra_tolerance must be finite and nonnegative");
    }
    let mut names = std::collections::BTreeSet::new();
    for (j, e) in config.experiments.iter().enumerate() {
        let name = experiment_name(j, e);
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return input(format!("experiment name {name:?} must be nonempty ASCII alphanumerics, '-' or '_'"));
        }
        if !names.insert(name.clone()) {
            return input(format!("duplicate experiment name {name}"));
        }
        validate_spec(&e.spec).map_err(|err| Error::Input(format!("experiment {name}: {err}")))?;
    }
    Ok(())
}

fn validate_spec(spec: &ExperimentSpec) -> Result<()> {
    match spec {
        ExperimentSpec::Transport(p) => {
            check_space(p.k, &p.points, &p.cost)?;
        }
        ExperimentSpec::Laws(p) => {
            check_process(&p.mu, p.cap, &p.process)?;
            for &t in &p.thin {
                if !(0.0..=1.0).contains(&t) {
                    return input(format!("thinning parameter must lie in [0,1], got {t}"));
                }
            }
        }
        ExperimentSpec::VerifyDembo(p) => {
            if p.k == 0 {
                return input("k must be positive");
            }
            p.t.iter().try_for_each(|&t| check_t(t))?;
        }
        ExperimentSpec::VerifyMarton(p) => {
            check_process(&p.mu, p.cap, &p.process)?;
            if matches!(p.process, ProcessSpec::MixedBinomial { .. }) {
                return input("the weak process inequality needs a binomial or Poisson reference");
            }
            p.t.iter().try_for_each(|&t| check_t(t))?;
        }
        ExperimentSpec::VerifyTalagrand(TalagrandParams::Gaussian { m, n, a }) => {
            if m.iter().any(|v| !v.is_finite()) || n.is_empty() || m.is_empty() || !(*a > 0.0) {
                return input("gaussian mode needs finite means, sizes and a positive constant");
            }
        }
        ExperimentSpec::VerifyTalagrand(TalagrandParams::Discrete {
            mu,
            kappa,
            points,
            cost,
            constant_samples,
            inflation,
            ..
        }) => {
            check_prob("mu", mu)?;
            check_prob("kappa", kappa)?;
            let space = check_space(Some(mu.len()), points, cost)?;
            if space.len() != mu.len() {
                return input("points and mu have different lengths");
            }
            if *constant_samples == 0 || !(*inflation >= 1.0) {
                return input("constant_samples must be positive and inflation at least 1");
            }
        }
        ExperimentSpec::Concentration(ConcentrationParams::TwoSet { mu, intensity, t, .. }) => {
            check_process(mu, 0, &ProcessSpec::Poisson { intensity: *intensity })?;
            check_t(*t)?;
        }
        ExperimentSpec::Concentration(ConcentrationParams::ConvexDistance {
            k,
            max_multiplicity,
            max_set,
            ..
        }) => {
            if *k == 0 || *max_multiplicity == 0 || *max_set == 0 {
                return input("k, max_multiplicity and max_set must be positive");
            }
        }
        ExperimentSpec::Concentration(ConcentrationParams::Deviation {
            rate,
            dimension,
            radius,
            delta,
            beta,
            samples,
            ..
        }) => {
            if !(*rate >= 0.0) || *dimension == 0 || !(*radius >= 0.0) || !(*delta > 0.0) || !(0.0..2.0).contains(beta) || *samples == 0 {
                return input("deviation parameters out of range");
            }
        }
        ExperimentSpec::Logsob(LogsobParams::Rc {
            mu,
            intensity,
            bound,
            lambdas,
            ..
        }) => {
            check_process(mu, 0, &ProcessSpec::Poisson { intensity: *intensity })?;
            if !(*bound >= 0.0) {
                return input("bound must be nonnegative");
            }
            lambdas.iter().try_for_each(|&l| check_t(l))?;
        }
        ExperimentSpec::Logsob(LogsobParams::Gradient { k, lambda, .. }) => {
            if *k == 0 || !(*lambda > 0.0) {
                return input("k and lambda must be positive");
            }
        }
        ExperimentSpec::Logsob(LogsobParams::Monotone {
            rate,
            dimension,
            lambdas,
            samples,
            functional,
        }) => {
            if !(*rate >= 0.0) || *dimension == 0 || *samples < 2 {
                return input("monotone parameters out of range");
            }
            if lambdas.iter().any(|l| !(0.0..1.0).contains(l)) {
                return input("lambda must lie in [0,1)");
            }
            match functional {
                EuclideanFunctional::MassSquared { scale } | EuclideanFunctional::EdgeCount { scale, .. } if !(*scale >= 0.0) => {
                    return input("scale must be nonnegative");
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn experiment_name(j: usize, e: &Experiment) -> String {
    e.name.clone().unwrap_or_else(|| format!("{j}_{}", e.spec.kind().replace('-', "_")))
}

/// Seed of experiment `j` under `master`.
pub fn experiment_seed(master: u64, j: usize) -> u64 {
    stream_rng(master, j as u64).gen()
}

/// SHA-256 of the configuration text, hex encoded.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Runs every experiment (in parallel) and assembles the report.
pub fn run_batch(config: &ExperimentConfig, hash: &str) -> BatchOutcome {
    let results: Vec<(String, &'static str, u64, Result<ExperimentOutput>)> = config
        .experiments
        .par_iter()
        .enumerate()
        .map(|(j, e)| {
            let name = experiment_name(j, e);
            let seed = experiment_seed(config.seed, j);
            let out = run_experiment(&name, &e.spec, seed, config.extra_tolerance);
            (name, e.spec.kind(), seed, out)
        })
        .collect();
    let mut status = STATUS_OK;
    let mut entries = Vec::new();
    let mut tables = Vec::new();
    for (name, kind, seed, r) in results {
        match r {
            Ok(out) => {
                if out.violations > 0 {
                    status = status.max(STATUS_VIOLATION);
                }
                entries.push(serde_json::to_value(&out).unwrap_or(Value::Null));
                tables.extend(out.tables);
            }
            Err(err) => {
                status = status.max(status_of(&err));
                entries.push(json!({
                    "name": name,
                    "kind": kind,
                    "seed": seed,
                    "error": err.to_string(),
                    "diagnostics": error_diagnostics(&err),
                }));
            }
        }
    }
    let report = json!({
        "config_hash": hash,
        "seed": config.seed,
        "status": status,
        "experiments": entries,
    });
    BatchOutcome { status, report, tables }
}

fn error_diagnostics(err: &Error) -> Value {
    match err {
        Error::Solver {
            best_value, residual, ..
        } => json!({ "best_value": best_value, "residual": residual }),
        _ => Value::Null,
    }
}

/// Writes `report.json` and the tables into `dir`.
pub fn write_outputs(dir: &Path, outcome: &BatchOutcome) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let report = dir.join("report.json");
    std::fs::write(&report, serde_json::to_string_pretty(&outcome.report)? + "\n")?;
    written.push(report);
    for (file, contents) in &outcome.tables {
        let path = dir.join(file);
        std::fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Runs one experiment from its derived seed.
pub fn run_experiment(name: &str, spec: &ExperimentSpec, seed: u64, extra_tol: f64) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput {
        name: name.to_string(),
        kind: spec.kind().to_string(),
        seed,
        checks: 0,
        violations: 0,
        summary: Value::Null,
        tables: Vec::new(),
    };
    match spec {
        ExperimentSpec::Transport(p) => run_transport(p, seed, &mut out)?,
        ExperimentSpec::Laws(p) => run_laws(p, seed, &mut out)?,
        ExperimentSpec::VerifyDembo(p) => run_dembo(p, seed, extra_tol, &mut out)?,
        ExperimentSpec::VerifyMarton(p) => run_marton(p, seed, extra_tol, &mut out)?,
        ExperimentSpec::VerifyTalagrand(p) => run_talagrand(p, seed, extra_tol, &mut out)?,
        ExperimentSpec::Concentration(p) => run_concentration(p, seed, &mut out)?,
        ExperimentSpec::Logsob(p) => run_logsob(p, seed, extra_tol, &mut out)?,
    }
    Ok(out)
}

/// Random weights: `Exp(1)` entries, each zeroed with probability
/// `zero_prob`, keeping at least one positive entry.
pub fn random_weights<R: Rng>(rng: &mut R, k: usize, zero_prob: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| {
            let v: f64 = Exp1.sample(rng);
            if rng.gen::<f64>() < zero_prob {
                0.0
            } else {
                v + 1e-3
            }
        })
        .collect();
    if w.iter().all(|v| *v == 0.0) && k > 0 {
        w[rng.gen_range(0..k)] = 1.0;
    }
    w
}

pub fn random_probability<R: Rng>(rng: &mut R, k: usize, zero_prob: f64) -> Result<DiscreteMeasure> {
    DiscreteMeasure::normalized(random_weights(rng, k, zero_prob))
}

/// Random law on the configurations accepted by `keep`.
pub fn random_law<R: Rng>(
    rng: &mut R,
    index: &Arc<ConfigurationSpaceIndex>,
    keep: impl Fn(&Counts) -> bool,
    zero_prob: f64,
) -> Result<ProcessLaw> {
    let allowed: Vec<usize> = (0..index.len()).filter(|&i| keep(&index.configs()[i])).collect();
    if allowed.is_empty() {
        return input("no configuration satisfies the restriction");
    }
    let w = random_weights(rng, allowed.len(), zero_prob);
    let mut full = vec![0.0; index.len()];
    for (i, v) in allowed.into_iter().zip(w) {
        full[i] = v;
    }
    ProcessLaw::from_weights(index.clone(), full)
}

/// Random law whose mass distribution is `kappa`.
pub fn random_law_with_masses<R: Rng>(rng: &mut R, index: &Arc<ConfigurationSpaceIndex>, kappa: &[f64]) -> Result<ProcessLaw> {
    let mut full = vec![0.0; index.len()];
    for (n, &kn) in kappa.iter().enumerate() {
        if kn == 0.0 {
            continue;
        }
        let range = index.mass_range(n as u32);
        let w = random_weights(rng, range.len(), 0.3);
        let s: f64 = w.iter().sum();
        for (i, v) in range.zip(w) {
            full[i] = kn * v / s;
        }
    }
    ProcessLaw::new(index.clone(), full)
}

fn build_law(mu: &DiscreteMeasure, index: Arc<ConfigurationSpaceIndex>, p: &ProcessSpec) -> Result<ProcessLaw> {
    match p {
        ProcessSpec::Binomial { n } => binomial_law(mu, *n, index),
        ProcessSpec::MixedBinomial { kappa } => mixed_binomial_law(mu, &DiscreteMeasure::probability(kappa.clone())?, index),
        ProcessSpec::Poisson { intensity } => poisson_law(&mu.scaled(*intensity)?, index),
    }
}

fn judge(report: &mut VerificationReport, extra_tol: f64) {
    if extra_tol > 0.0 && !report.vacuous {
        report.tolerance += extra_tol;
        report.violated = report.margin < -report.tolerance;
    }
}

fn tally(out: &mut ExperimentOutput, reports: &[(String, VerificationReport)]) {
    out.checks += reports.len();
    out.violations += reports.iter().filter(|(_, r)| r.violated).count();
}

fn run_transport(p: &TransportParams, seed: u64, out: &mut ExperimentOutput) -> Result<()> {
    let space = check_space(p.k, &p.points, &p.cost)?;
    let cost = p.cost.matrix(&space)?;
    let k = space.len();
    let hamming = inequalities::hamming(k);
    let rows: Vec<Result<(f64, f64, f64, f64)>> = (0..p.pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let nu1 = random_probability(&mut rng, k, 0.2)?;
            let nu2 = random_probability(&mut rng, k, 0.2)?;
            let (ot, _) = ot_lp(&cost, &nu1, &nu2)?;
            let marton = marton_cost(&nu1, &nu2)?;
            let weak = weak_transport(&AlphaFamily::Square, &hamming, &nu2, &nu1)?;
            Ok((ot, marton, weak.value, weak.gap))
        })
        .collect();
    let mut csv = String::from("pair,ot_cost,marton,weak_square_hamming,difference\n");
    let mut worst: f64 = 0.0;
    for (i, r) in rows.into_iter().enumerate() {
        let (ot, marton, weak, gap) = r?;
        let diff = (marton - weak).abs();
        worst = worst.max(diff);
        out.checks += 1;
        if diff > 1e-5 + gap {
            out.violations += 1;
        }
        let _ = writeln!(csv, "{i},{ot},{marton},{weak},{diff}");
    }
    out.summary = json!({ "pairs": p.pairs, "max_marton_difference": worst });
    out.tables.push((format!("{}.csv", out.name), csv));
    Ok(())
}

fn run_laws(p: &LawsParams, seed: u64, out: &mut ExperimentOutput) -> Result<()> {
    let mu = check_prob("mu", &p.mu)?;
    let index = Arc::new(ConfigurationSpaceIndex::new(mu.len(), p.cap)?);
    let law = build_law(&mu, index.clone(), &p.process)?;
    out.tables.push((format!("{}_law.csv", out.name), law.to_csv()));
    let mut chain = String::from("law,total,decomposed,difference\n");
    let mut worst: f64 = 0.0;
    for i in 0..p.chain_rule_laws {
        let mut rng = stream_rng(seed, i as u64);
        let pi = random_law(&mut rng, &index, |_| true, 0.3)?;
        let rep = chain_rule_check(&pi, &law)?;
        out.checks += 1;
        if !rep.holds {
            out.violations += 1;
        }
        if rep.difference.is_finite() {
            worst = worst.max(rep.difference.abs());
        }
        let _ = writeln!(chain, "{i},{},{},{}", rep.total, rep.decomposed, rep.difference);
    }
    if p.chain_rule_laws > 0 {
        out.tables.push((format!("{}_chain_rule.csv", out.name), chain));
    }
    let mut summary = json!({
        "configurations": index.len(),
        "tail_bound": law.tail_bound(),
        "max_chain_rule_difference": worst,
    });
    if p.samples > 0 {
        let kappa = match &p.process {
            ProcessSpec::Binomial { n } => {
                let mut w = vec![0.0; *n as usize + 1];
                w[*n as usize] = 1.0;
                Some(DiscreteMeasure::probability(w)?)
            }
            ProcessSpec::MixedBinomial { kappa } => Some(DiscreteMeasure::probability(kappa.clone())?),
            ProcessSpec::Poisson { .. } => None,
        };
        let nu = match &p.process {
            ProcessSpec::Poisson { intensity } => Some(mu.scaled(*intensity)?),
            _ => None,
        };
        let draws: Vec<Result<Counts>> = crate::stats::par_draws(p.samples, seed ^ 0x5eed, |rng, _| match (&kappa, &nu) {
            (Some(k), _) => sample_mixed_binomial(&mu, k, rng),
            (_, Some(nu)) => sample_poisson(nu, rng),
            _ => unreachable!("one of kappa or nu is set"),
        });
        let mut counts = vec![0usize; index.len()];
        let mut outside = 0usize;
        for d in draws {
            match index.index_of(&d?) {
                Some(i) => counts[i] += 1,
                None => outside += 1,
            }
        }
        let mut csv = String::from("index,configuration,empirical,exact\n");
        let mut tv = 0.5 * outside as f64 / p.samples as f64;
        for (i, c) in index.configs().iter().enumerate() {
            let emp = counts[i] as f64 / p.samples as f64;
            tv += 0.5 * (emp - law.probabilities()[i]).abs();
            let _ = writeln!(csv, "{i},{c},{emp},{}", law.probabilities()[i]);
        }
        out.tables.push((format!("{}_samples.csv", out.name), csv));
        summary["sample_tv"] = json!(tv);
        summary["samples_beyond_cap"] = json!(outside);
    }
    if !p.thin.is_empty() {
        let mean_mass: f64 = index
            .configs()
            .iter()
            .zip(law.probabilities())
            .map(|(c, q)| c.mass() as f64 * q)
            .sum();
        let mut csv = String::from("t,tv_to_poisson\n");
        for &t in &p.thin {
            let thinned = thin_law(&law, t)?;
            let reference = poisson_law(&mu.scaled(t * mean_mass)?, index.clone())?;
            let _ = writeln!(csv, "{t},{}", law_tv(&thinned, &reference)?);
        }
        out.tables.push((format!("{}_thinning.csv", out.name), csv));
    }
    out.summary = summary;
    Ok(())
}

fn run_dembo(p: &DemboParams, seed: u64, extra_tol: f64, out: &mut ExperimentOutput) -> Result<()> {
    let jobs: Vec<(usize, f64)> = (0..p.instances).flat_map(|i| p.t.iter().map(move |&t| (i, t))).collect();
    let reports: Vec<Result<(String, VerificationReport)>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let mut rng = stream_rng(seed, i as u64);
            let gamma = random_probability(&mut rng, p.k, 0.0)?;
            let nu1 = random_probability(&mut rng, p.k, 0.3)?;
            let nu2 = random_probability(&mut rng, p.k, 0.3)?;
            let mut r = inequalities::verify_base_dembo(&gamma, &nu1, &nu2, t)?;
            judge(&mut r, extra_tol);
            Ok((format!("{i}_t{t}"), r))
        })
        .collect();
    let reports: Vec<_> = reports.into_iter().collect::<Result<_>>()?;
    tally(out, &reports);
    out.summary = json!({ "instances": p.instances, "t": p.t, "min_margin": min_margin(&reports) });
    out.tables.push((format!("{}.csv", out.name), reports_to_csv(&reports)));
    Ok(())
}

fn min_margin(reports: &[(String, VerificationReport)]) -> Option<f64> {
    reports
        .iter()
        .filter(|(_, r)| !r.vacuous && r.margin.is_finite())
        .map(|(_, r)| r.margin)
        .min_by(f64::total_cmp)
}

fn run_marton(p: &MartonParams, seed: u64, extra_tol: f64, out: &mut ExperimentOutput) -> Result<()> {
    let mu = check_prob("mu", &p.mu)?;
    let index = Arc::new(ConfigurationSpaceIndex::new(mu.len(), p.cap)?);
    let law = build_law(&mu, index.clone(), &p.process)?;
    let fixed = match p.process {
        ProcessSpec::Binomial { n } => Some(n),
        _ => None,
    };
    let keep = move |c: &Counts| fixed.map_or(true, |n| c.mass() == n as u64);
    let mut pairs: Vec<(String, ProcessLaw, ProcessLaw)> = Vec::new();
    if p.point_masses {
        let support: Vec<&Counts> = index.configs().iter().filter(|c| keep(c)).collect();
        for a in &support {
            for b in &support {
                pairs.push((
                    format!("dirac_{}_{}", a.to_string().replace(',', " "), b.to_string().replace(',', " ")),
                    ProcessLaw::dirac(index.clone(), a)?,
                    ProcessLaw::dirac(index.clone(), b)?,
                ));
            }
        }
    }
    for i in 0..p.pairs {
        let mut rng = stream_rng(seed, i as u64);
        let a = random_law(&mut rng, &index, keep, 0.3)?;
        let b = random_law(&mut rng, &index, keep, 0.3)?;
        pairs.push((format!("random_{i}"), a, b));
    }
    let jobs: Vec<(usize, f64)> = (0..pairs.len()).flat_map(|i| p.t.iter().map(move |&t| (i, t))).collect();
    let reports: Vec<Result<(String, VerificationReport)>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let (name, a, b) = &pairs[i];
            let mut r = inequalities::verify_marton_process(&law, a, b, t)?;
            judge(&mut r, extra_tol);
            Ok((format!("{name}_t{t}"), r))
        })
        .collect();
    let reports: Vec<_> = reports.into_iter().collect::<Result<_>>()?;
    tally(out, &reports);
    out.summary = json!({
        "pairs": pairs.len(),
        "t": p.t,
        "tail_bound": law.tail_bound(),
        "min_margin": min_margin(&reports),
    });
    out.tables.push((format!("{}.csv", out.name), reports_to_csv(&reports)));
    Ok(())
}

fn run_talagrand(p: &TalagrandParams, seed: u64, extra_tol: f64, out: &mut ExperimentOutput) -> Result<()> {
    let reports: Vec<(String, VerificationReport)> = match p {
        TalagrandParams::Gaussian { m, n, a } => {
            let mut v = Vec::new();
            for &m1 in m {
                for &m2 in m {
                    for &size in n {
                        let mut r = inequalities::gaussian_talagrand_lift(m1, m2, size, *a);
                        judge(&mut r, extra_tol);
                        v.push((format!("m1_{m1}_m2_{m2}_n{size}"), r));
                    }
                }
            }
            v
        }
        TalagrandParams::Discrete {
            mu,
            kappa,
            points,
            cost,
            pairs,
            constant_samples,
            inflation,
        } => {
            let mu_m = check_prob("mu", mu)?;
            let kappa_m = check_prob("kappa", kappa)?;
            let space = check_space(Some(mu.len()), points, cost)?;
            let rho = cost.matrix(&space)?;
            let cert = BaseCertificate::estimated(BaseCost::Linear { rho }, &mu_m, *constant_samples, *inflation, seed)?;
            let cap = (kappa.len() - 1) as u32;
            let index = Arc::new(ConfigurationSpaceIndex::new(mu.len(), cap)?);
            let results: Vec<Result<(String, VerificationReport)>> = (0..*pairs)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, 1 + i as u64);
                    let a = random_law_with_masses(&mut rng, &index, kappa)?;
                    let b = random_law_with_masses(&mut rng, &index, kappa)?;
                    let mut r = inequalities::verify_talagrand_process(&cert, &mu_m, &kappa_m, &a, &b)?;
                    judge(&mut r, extra_tol);
                    Ok((format!("random_{i}"), r))
                })
                .collect();
            out.summary = json!({
                "estimated_constant": cert.a1,
                "note": "base constant estimated from samples; a pass is evidence, not proof",
            });
            results.into_iter().collect::<Result<_>>()?
        }
    };
    tally(out, &reports);
    let base = if out.summary.is_null() { json!({}) } else { out.summary.clone() };
    let mut summary = base;
    summary["instances"] = json!(reports.len());
    summary["min_margin"] = json!(min_margin(&reports));
    out.summary = summary;
    out.tables.push((format!("{}.csv", out.name), reports_to_csv(&reports)));
    Ok(())
}

fn run_concentration(p: &ConcentrationParams, seed: u64, out: &mut ExperimentOutput) -> Result<()> {
    match p {
        ConcentrationParams::TwoSet {
            mu,
            cap,
            intensity,
            mass_threshold,
            t,
            r,
        } => {
            let mu = check_prob("mu", mu)?;
            let index = Arc::new(ConfigurationSpaceIndex::new(mu.len(), *cap)?);
            let law = poisson_law(&mu.scaled(*intensity)?, index.clone())?;
            let members: Vec<Counts> = index.configs().iter().filter(|c| c.mass() <= *mass_threshold).cloned().collect();
            let threshold = *mass_threshold;
            let set = TargetSet::with_predicate(members, move |c: &Counts| c.mass() <= threshold)?;
            let rows = concentration::two_set_experiment(&law, &set, *t, r)?;
            out.checks += 2 * rows.len();
            out.violations += rows.iter().map(|w| w.convex_violated as usize + w.distance_violated as usize).sum::<usize>();
            out.summary = json!({ "p_a": rows.first().map(|w| w.p_a), "tail_bound": law.tail_bound() });
            out.tables.push((format!("{}.csv", out.name), concentration::two_set_to_csv(&rows)));
        }
        ConcentrationParams::ConvexDistance {
            k,
            max_multiplicity,
            max_set,
            instances,
        } => {
            let rows: Vec<Result<(f64, f64, f64, f64)>> = (0..*instances)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let draw = |rng: &mut rand_chacha::ChaCha20Rng| Counts((0..*k).map(|_| rng.gen_range(0..=*max_multiplicity)).collect());
                    let xi = draw(&mut rng);
                    let size = rng.gen_range(1..=*max_set);
                    let members: Vec<Counts> = (0..size).map(|_| draw(&mut rng)).collect();
                    let set = TargetSet::finite(members)?;
                    let ca = concentration::convex_distance_ca(&xi, &set, &AlphaFamily::HalfSquare)?.value;
                    let direct = concentration::sup_inf_da(&xi, &set, 1e-5, 200_000);
                    Ok((ca, (2.0 * ca).sqrt(), direct.lower, direct.upper))
                })
                .collect();
            let mut csv = String::from("instance,c_a,sqrt_two_c_a,d_a_lower,d_a_upper,relative_difference\n");
            let mut worst: f64 = 0.0;
            for (i, r) in rows.into_iter().enumerate() {
                let (ca, from_ca, lo, hi) = r?;
                let mid = 0.5 * (lo + hi);
                let rel = if from_ca.max(mid) > 0.0 { (from_ca - mid).abs() / from_ca.max(mid) } else { 0.0 };
                worst = worst.max(rel);
                out.checks += 1;
                if rel > concentration::DA_REL_TOL {
                    out.violations += 1;
                }
                let _ = writeln!(csv, "{i},{ca},{from_ca},{lo},{hi},{rel}");
            }
            out.summary = json!({ "instances": instances, "max_relative_difference": worst });
            out.tables.push((format!("{}.csv", out.name), csv));
        }
        ConcentrationParams::Deviation {
            rate,
            dimension,
            radius,
            delta,
            beta,
            r,
            samples,
        } => {
            let stat = concentration::edge_kernel(*radius)?;
            let domain = EuclideanBox::unit(*dimension)?;
            let rep = concentration::br_experiment(&stat, *rate, &domain, *delta, *beta, r, *samples, seed)?;
            out.checks += rep.rows.len() + 1;
            out.violations += rep.rows.iter().filter(|w| w.violated).count() + usize::from(!rep.hypothesis_holds);
            out.tables.push((format!("{}.csv", out.name), rep.to_csv()));
            out.summary = json!({
                "hypothesis_holds": rep.hypothesis_holds,
                "worst_ratio": rep.worst_ratio,
                "median": rep.median,
                "median_ci": rep.median_ci,
                "notes": rep.notes,
            });
        }
    }
    Ok(())
}

/// `F(ξ) = a⟨w,ξ⟩ + b⟨w,ξ⟩² + c (⟨v,ξ⟩ - d)_+` with nonnegative
/// coefficients: convex and nondecreasing on configurations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomConvex {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RandomConvex {
    pub fn draw<R: Rng>(rng: &mut R, k: usize) -> Self {
        Self {
            w: (0..k).map(|_| rng.gen_range(0.0..1.0)).collect(),
            v: (0..k).map(|_| rng.gen_range(0.0..1.0)).collect(),
            a: rng.gen_range(0.0..2.0),
            b: rng.gen_range(0.0..0.5),
            c: rng.gen_range(0.0..1.0),
            d: rng.gen_range(0.0..2.0),
        }
    }

    pub fn eval(&self, xi: &Counts) -> f64 {
        let dot = |u: &[f64]| -> f64 { u.iter().zip(xi.as_slice()).map(|(a, m)| a * *m as f64).sum() };
        let s = dot(&self.w);
        self.a * s + self.b * s * s + self.c * (dot(&self.v) - self.d).max(0.0)
    }

    pub fn functional(self) -> Functional<Counts> {
        Functional::new("random convex", move |c: &Counts| self.eval(c)).with_claims(true, true)
    }
}

fn euclidean_functional(f: &EuclideanFunctional) -> Result<Functional<PointSet>> {
    Ok(match f {
        EuclideanFunctional::Mass => Functional::total_mass(),
        EuclideanFunctional::MassSquared { scale } => {
            let s = *scale;
            Functional::new("mass squared", move |c: &PointSet| s * (c.mass() as f64).powi(2)).with_claims(true, true)
        }
        EuclideanFunctional::EdgeCount { radius, scale } => {
            let stat: UStatistic<Point> = concentration::edge_kernel(*radius)?;
            let s = *scale;
            let f = stat.functional::<PointSet>(true);
            Functional::new("edge count", move |c: &PointSet| s * f.eval(c)).with_claims(true, true)
        }
    })
}

fn run_logsob(p: &LogsobParams, seed: u64, extra_tol: f64, out: &mut ExperimentOutput) -> Result<()> {
    match p {
        LogsobParams::Rc {
            mu,
            cap,
            intensity,
            functions,
            bound,
            lambdas,
            entropy,
        } => {
            let mu = check_prob("mu", mu)?;
            let index = Arc::new(ConfigurationSpaceIndex::new(mu.len(), *cap)?);
            let law = poisson_law(&mu.scaled(*intensity)?, index.clone())?;
            let jobs: Vec<(usize, f64)> = (0..*functions).flat_map(|i| lambdas.iter().map(move |&l| (i, l))).collect();
            let results: Vec<Result<(String, VerificationReport)>> = jobs
                .par_iter()
                .map(|&(i, lambda)| {
                    let mut rng = stream_rng(seed, i as u64);
                    let vals: Vec<f64> = (0..index.len()).map(|_| rng.gen_range(-*bound..=*bound)).collect();
                    let lookup = index.clone();
                    let f = Functional::new("random", move |c: &Counts| lookup.index_of(c).map_or(0.0, |j| vals[j]));
                    let mut r = logsob::verify_logsob_rc(&law, &f, lambda, *entropy)?;
                    judge(&mut r, extra_tol);
                    Ok((format!("f{i}_lambda{lambda}"), r))
                })
                .collect();
            let reports: Vec<_> = results.into_iter().collect::<Result<_>>()?;
            tally(out, &reports);
            out.summary = json!({
                "functions": functions,
                "entropy": entropy.name(),
                "tail_bound": law.tail_bound(),
                "min_margin": min_margin(&reports),
            });
            out.tables.push((format!("{}.csv", out.name), reports_to_csv(&reports)));
        }
        LogsobParams::Gradient { k, cap, functions, lambda } => {
            let index = ConfigurationSpaceIndex::new(*k, *cap)?;
            let simple: Vec<Counts> = index.configs().iter().filter(|c| c.is_simple()).cloned().collect();
            let rows: Vec<Result<Vec<(usize, String, f64, f64)>>> = (0..*functions)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let f = RandomConvex::draw(&mut rng, *k).functional();
                    simple
                        .iter()
                        .map(|xi| {
                            let (lhs, rhs) = logsob::rc_gradient_bound(&f, &index, xi, *lambda)?;
                            Ok((i, xi.to_string(), lhs, rhs))
                        })
                        .collect()
                })
                .collect();
            let mut csv = String::from("function,configuration,lhs,rhs,margin\n");
            let mut worst = f64::INFINITY;
            for r in rows {
                for (i, xi, lhs, rhs) in r? {
                    out.checks += 1;
                    if lhs > rhs + 1e-5 + extra_tol {
                        out.violations += 1;
                    }
                    worst = worst.min(rhs - lhs);
                    let _ = writeln!(csv, "{i},\"{xi}\",{lhs},{rhs},{}", rhs - lhs);
                }
            }
            out.summary = json!({ "functions": functions, "configurations": simple.len(), "min_margin": worst });
            out.tables.push((format!("{}.csv", out.name), csv));
        }
        LogsobParams::Monotone {
            rate,
            dimension,
            functional,
            lambdas,
            samples,
        } => {
            let domain = EuclideanBox::unit(*dimension)?;
            let f = euclidean_functional(functional)?;
            let mut rows = Vec::new();
            let mut wu = Vec::new();
            for &lambda in lambdas {
                let mut rep = logsob::verify_logsob_monotone(*rate, &domain, &f, lambda, *samples, seed)?;
                judge(&mut rep.report, extra_tol);
                wu.push(json!({
                    "lambda": lambda,
                    "rhs_wu": rep.wu.rhs_wu.mean,
                    "rhs_lambda": rep.rhs.mean,
                    "samples_in_region": rep.wu.samples_in_region,
                    "inconsistent": rep.wu.inconsistent,
                }));
                out.checks += 1;
                out.violations += usize::from(rep.report.violated);
                rows.push((lambda, rep.report));
            }
            out.summary = json!({ "samples": samples, "wu_comparison": wu });
            out.tables.push((format!("{}.csv", out.name), logsob::lambda_reports_to_csv(&rows)));
        }
    }
    Ok(())
}
