//! Subcommand implementations and exit-code policy.
//!
//! Exit codes: 0 success, 2 usage/IO/parse errors, 3 solver errors,
//! 4 verification failures (oracle violations).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use l0path_core::csbr::{csbr, StoppingRule};
use l0path_core::dict::{Dictionary, Observation, Support};
use l0path_core::l0pd::{l0pd, L0pdConfig};
use l0path_core::oracle::{check_theorem1, check_theorem2, exact_paths, ExactPaths, OracleError};
use l0path_core::path::PathResult;
use l0path_core::problems::{draw_instance_with, Instance, Scenario};
use l0path_core::sbr::{sbr, SbrError, SbrMove, SbrOptions};
use l0path_core::select::{ic_select, mdlc_select, IcRule};

use crate::bench::{run_algo, Algo, AlgoReport};
use crate::csv_io;
use crate::json::{PathJson, RunManifest, ScenarioJson, StoppingJson};
use crate::svg::{Chart, Series};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// An error tagged with the process exit code it maps to.
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

pub type CmdResult = Result<(), Failure>;

fn usage_err<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(|error| Failure {
        code: EXIT_USAGE,
        error,
    })
}

fn solver_err<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(|error| Failure {
        code: EXIT_SOLVER,
        error,
    })
}

#[derive(Parser)]
#[command(
    name = "l0path",
    version,
    about = "Approximate l0-penalized regularization paths: solvers, oracle checks and benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a benchmark instance and write it as CSV + metadata.
    Gen(GenArgs),
    /// Solve one instance with sbr, csbr or l0pd.
    Solve(SolveArgs),
    /// Exhaustive structural checks on small random instances.
    Oracle(OracleArgs),
    /// Multi-trial benchmark campaign with support-recovery scoring.
    Bench(BenchArgs),
    /// Model-order selection over a previously saved path.
    Select(SelectArgs),
    /// Render SVG charts from saved results.
    Plot(PlotArgs),
}

#[derive(Args)]
pub struct ScenarioSpec {
    /// Scenario preset letter (A-J) or a path to a scenario JSON file.
    #[arg(long)]
    pub scenario: String,
    /// Base seed (overrides the scenario file's seed).
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ScenarioSpec {
    pub fn resolve(&self) -> Result<Scenario> {
        let mut scenario = if self.scenario.len() == 1 {
            let letter = self.scenario.chars().next().unwrap();
            Scenario::preset(letter)
                .ok_or_else(|| anyhow!("unknown scenario preset {letter:?} (expected A-J)"))?
        } else {
            let text = fs::read_to_string(&self.scenario)
                .with_context(|| format!("cannot read scenario file {}", self.scenario))?;
            let json: ScenarioJson =
                serde_json::from_str(&text).context("invalid scenario JSON")?;
            json.to_scenario()?
        };
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        Ok(scenario)
    }
}

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub scenario: ScenarioSpec,
    /// Trial index within the scenario's seed stream.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Algorithm: sbr | csbr | l0pd.
    #[arg(long)]
    pub algo: String,
    /// Dictionary CSV (first line m,n then row-major rows).
    #[arg(long = "A")]
    pub a: Option<PathBuf>,
    /// Observation CSV (single column).
    #[arg(long = "y")]
    pub y: Option<PathBuf>,
    /// Alternatively, generate the instance of a scenario preset.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    /// Penalty weight (sbr only).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Early stop: lowest λ breakpoint to resolve (csbr/l0pd).
    #[arg(long, default_value_t = 0.0)]
    pub lambda_stop: f64,
    /// Early stop: maximum cardinality.
    #[arg(long)]
    pub k_stop: Option<usize>,
    /// Early stop: minimum squared error.
    #[arg(long)]
    pub eps_stop: Option<f64>,
    /// Dump accepted replacements as JSON lines on stderr (sbr only).
    #[arg(long, default_value_t = false)]
    pub trace: bool,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OracleArgs {
    /// Number of dictionary columns (≤ 14 for full enumeration).
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Number of rows (defaults to n + 2).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Checks to run: theorems | dominance | all.
    #[arg(long, default_value = "all")]
    pub check: String,
    /// Dictionary family: gaussian | deconv | jumps | mixed.
    #[arg(long, default_value = "mixed")]
    pub dict: String,
    /// Report JSON destination (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to dump a violating instance for replay.
    #[arg(long, default_value = "oracle-violation")]
    pub dump_dir: PathBuf,
    /// Re-run the checks on a previously dumped instance directory.
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scenario: ScenarioSpec,
    /// Comma-separated algorithms (csbr | l0pd).
    #[arg(long, default_value = "csbr,l0pd")]
    pub algo: String,
    #[arg(long, default_value_t = 30)]
    pub trials: u64,
    /// Results JSON destination.
    #[arg(long, default_value = "results.json")]
    pub out: PathBuf,
    /// Optional CSV summary (Table-style rows).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Optional directory for SVG charts.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args)]
pub struct SelectArgs {
    /// Path JSON produced by `solve`.
    #[arg(long)]
    pub path: PathBuf,
    /// Number of observation rows of the instance.
    #[arg(long)]
    pub m: usize,
    /// Criterion: mdlc | aic | mdl | hq.
    #[arg(long, default_value = "mdlc")]
    pub rule: String,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Path JSON: renders the approximate curve.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Bench results JSON: renders the mean-cost panel and per-trial curves.
    #[arg(long)]
    pub bench: Option<PathBuf>,
    /// Output SVG file (curve) or directory (bench panels).
    #[arg(long)]
    pub out: PathBuf,
}

fn manifest_for(command: &str) -> RunManifest {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut m = RunManifest::new(args.join(" "));
    if m.command.is_empty() {
        m.command = command.to_string();
    }
    m
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(p, text + "\n").with_context(|| format!("cannot write {}", p.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GenMeta {
    manifest: RunManifest,
    scenario: ScenarioJson,
    trial: u64,
    m: usize,
    n: usize,
    sigma_n_sq: f64,
    support_star: Vec<usize>,
    files: std::collections::BTreeMap<String, String>,
}

pub fn cmd_gen(args: &GenArgs) -> CmdResult {
    let scenario = usage_err(args.scenario.resolve())?;
    let started = Instant::now();
    let dict = solver_err(scenario.dictionary().map_err(|e| anyhow!("{e}")))?;
    let dict = Arc::new(dict);
    let inst = draw_instance_with(&scenario, &dict, args.trial);
    usage_err(fs::create_dir_all(&args.out).context("creating output directory"))?;

    let m = dict.rows();
    let n = dict.cols();
    let mut row_major = vec![0.0; m * n];
    for c in 0..n {
        for (r, v) in dict.column(c).iter().enumerate() {
            row_major[r * n + c] = *v;
        }
    }
    let a_path = args.out.join("A.csv");
    let y_path = args.out.join("y.csv");
    let x_path = args.out.join("xstar.csv");
    usage_err(csv_io::write_matrix(&a_path, m, n, &row_major))?;
    usage_err(csv_io::write_vector(&y_path, inst.obs.values()))?;
    usage_err(csv_io::write_vector(&x_path, &inst.x_star))?;

    let mut manifest = manifest_for("gen");
    manifest.scenario = Some(scenario.name.clone());
    manifest.seed = Some(scenario.seed);
    manifest
        .wall_clock_ms
        .insert("total".to_string(), started.elapsed().as_secs_f64() * 1e3);
    let mut files = std::collections::BTreeMap::new();
    files.insert("dictionary".to_string(), "A.csv".to_string());
    files.insert("observation".to_string(), "y.csv".to_string());
    files.insert("x_star".to_string(), "xstar.csv".to_string());
    let meta = GenMeta {
        manifest,
        scenario: ScenarioJson::from(&scenario),
        trial: args.trial,
        m,
        n,
        sigma_n_sq: inst.sigma_n_sq,
        support_star: inst.support_star.indices().to_vec(),
        files,
    };
    usage_err(write_json(Some(&args.out.join("meta.json")), &meta))?;
    eprintln!(
        "wrote {m}x{n} instance (scenario {}, trial {}) to {}",
        scenario.name,
        args.trial,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SbrJson {
    manifest: RunManifest,
    algorithm: String,
    lambda: f64,
    support: Vec<usize>,
    error: f64,
    delta_e_add: f64,
    ell_add: Option<usize>,
    replacements: usize,
    amplitudes: Vec<f64>,
}

fn load_instance(args: &SolveArgs) -> Result<(Arc<Dictionary>, Observation, Option<Scenario>)> {
    match (&args.a, &args.y, &args.scenario) {
        (Some(a), Some(y), None) => {
            let mat = csv_io::read_matrix(a)?;
            let dict = Dictionary::from_rows(mat.rows, mat.cols, &mat.data)
                .map_err(|e| anyhow!("dictionary: {e}"))?;
            let yv = csv_io::read_vector(y)?;
            Ok((Arc::new(dict), Observation::new(yv), None))
        }
        (None, None, Some(_)) => {
            let spec = ScenarioSpec {
                scenario: args.scenario.clone().unwrap(),
                seed: args.seed,
            };
            let scenario = spec.resolve()?;
            let dict = Arc::new(scenario.dictionary().map_err(|e| anyhow!("{e}"))?);
            let inst = draw_instance_with(&scenario, &dict, args.trial);
            Ok((dict, inst.obs, Some(scenario)))
        }
        _ => bail!("provide either --A and --y, or --scenario"),
    }
}

fn print_segment_table(path: &PathResult, to_stderr: bool) {
    let mut lines = Vec::new();
    lines.push(format!(
        "{:>8}  {:>14}  {:>14}  {:>5}  {:>14}",
        "segment", "lambda_hi", "lambda_lo", "|S|", "E(S)"
    ));
    for j in 0..path.segment_count() {
        let hi = if j == 0 {
            "inf".to_string()
        } else {
            format!("{:.6e}", path.lambdas[j - 1])
        };
        lines.push(format!(
            "{:>8}  {:>14}  {:>14.6e}  {:>5}  {:>14.6e}",
            j,
            hi,
            path.lambdas[j],
            path.supports[j].len(),
            path.errors[j]
        ));
    }
    for l in lines {
        if to_stderr {
            eprintln!("{l}");
        } else {
            println!("{l}");
        }
    }
}

pub fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let (dict, obs, scenario) = usage_err(load_instance(args))?;
    let mut manifest = manifest_for("solve");
    manifest.algorithm = Some(args.algo.clone());
    manifest.scenario = scenario.as_ref().map(|s| s.name.clone());
    manifest.seed = scenario.as_ref().map(|s| s.seed);
    manifest.stopping = Some(StoppingJson {
        lambda_stop: args.lambda_stop,
        k_stop: args.k_stop,
        eps_stop: args.eps_stop,
    });
    let started = Instant::now();

    match args.algo.as_str() {
        "sbr" => {
            let lambda = usage_err(
                args.lambda
                    .ok_or_else(|| anyhow!("--lambda is required for sbr")),
            )?;
            let opts = SbrOptions {
                record_trace: args.trace,
                ..SbrOptions::default()
            };
            let outcome =
                solver_err(sbr(&dict, &obs, lambda, &Support::empty(), &opts).map_err(
                    |e| match e {
                        SbrError::CapExceeded(_) => anyhow!("sbr: iteration cap exceeded"),
                        SbrError::State(e) => anyhow!("sbr: {e}"),
                    },
                ))?;
            if let Some(trace) = &outcome.trace {
                for entry in trace {
                    eprintln!(
                        "{}",
                        serde_json::json!({
                            "move": match entry.mv { SbrMove::Insert => "insert", SbrMove::Remove => "remove" },
                            "atom": entry.atom,
                            "j_value": entry.j_value,
                        })
                    );
                }
            }
            manifest
                .wall_clock_ms
                .insert("solve".to_string(), started.elapsed().as_secs_f64() * 1e3);
            let out = SbrJson {
                manifest,
                algorithm: "sbr".to_string(),
                lambda,
                support: outcome.state.support().indices().to_vec(),
                error: outcome.state.error(),
                delta_e_add: outcome.delta_e_add,
                ell_add: outcome.ell_add,
                replacements: outcome.replacements,
                amplitudes: outcome.state.amplitudes(),
            };
            usage_err(write_json(args.out.as_deref(), &out))?;
            Ok(())
        }
        "csbr" => {
            let rule = StoppingRule {
                lambda_stop: args.lambda_stop,
                k_stop: args.k_stop,
                eps_stop: args.eps_stop,
                max_segments: None,
            };
            let path =
                solver_err(csbr(&dict, &obs, &rule).map_err(|e| anyhow!("csbr: {e:?}")))?;
            manifest
                .wall_clock_ms
                .insert("solve".to_string(), started.elapsed().as_secs_f64() * 1e3);
            print_segment_table(&path, args.out.is_none());
            let json = PathJson::new(&path, None, manifest);
            usage_err(write_json(args.out.as_deref(), &json))?;
            Ok(())
        }
        "l0pd" => {
            let cfg = L0pdConfig {
                lambda_stop: args.lambda_stop,
                k_stop: args.k_stop,
                eps_stop: args.eps_stop,
                ..L0pdConfig::for_dictionary(&dict)
            };
            let out =
                solver_err(l0pd(&dict, &obs, &cfg).map_err(|e| anyhow!("l0pd: {e:?}")))?;
            manifest
                .wall_clock_ms
                .insert("solve".to_string(), started.elapsed().as_secs_f64() * 1e3);
            print_segment_table(&out.path, args.out.is_none());
            let json = PathJson::new(&out.path, Some(&out.polygon), manifest);
            usage_err(write_json(args.out.as_deref(), &json))?;
            Ok(())
        }
        other => Err(Failure {
            code: EXIT_USAGE,
            error: anyhow!("unknown algorithm {other:?} (expected sbr|csbr|l0pd)"),
        }),
    }
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OracleInstanceReport {
    trial: u64,
    dict_kind: String,
    m: usize,
    n: usize,
    violations: Vec<String>,
    strict_pareto_points: usize,
    checks: usize,
    dominance_checked: bool,
}

#[derive(Serialize)]
struct OracleReportJson {
    manifest: RunManifest,
    n: usize,
    m: usize,
    trials: u64,
    seed: u64,
    check: String,
    dict: String,
    instances: Vec<OracleInstanceReport>,
    total_violations: usize,
}

fn oracle_instance(
    kind: &str,
    m: usize,
    n: usize,
    seed: u64,
    trial: u64,
) -> Result<(Dictionary, Observation)> {
    use rand::{Rng, SeedableRng};
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..].copy_from_slice(b"l0path/oracle\0\0\0");
    let mut rng = rand_chacha::ChaCha12Rng::from_seed(key);
    let dict = match kind {
        "gaussian" => {
            let data: Vec<f64> = (0..m * n)
                .map(|_| {
                    use rand_distr::{Distribution, StandardNormal};
                    StandardNormal.sample(&mut rng)
                })
                .collect();
            Dictionary::from_rows(m, n, &data).map_err(|e| anyhow!("{e}"))?
        }
        "deconv" => {
            // Reduced Gaussian deconvolution: σ = 1 so n = m_base − 6.
            let m_base = n + 6;
            let d = l0path_core::problems::gaussian_deconv_dictionary(m_base, 1, 1)
                .map_err(|e| anyhow!("{e}"))?;
            d
        }
        "jumps" => l0path_core::problems::jump_dictionary(n),
        other => bail!("unknown dictionary family {other:?}"),
    };
    let rows = dict.rows();
    let y: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
    Ok((dict, Observation::new(y)))
}

fn dominance_violations(dict: &Dictionary, obs: &Observation, paths: &ExactPaths) -> Vec<String> {
    let mut violations = Vec::new();
    let Ok(cpath) = csbr(dict, obs, &StoppingRule::default()) else {
        violations.push("csbr failed".to_string());
        return violations;
    };
    let Ok(lres) = l0pd(dict, obs, &L0pdConfig::for_dictionary(dict)) else {
        violations.push("l0pd failed".to_string());
        return violations;
    };
    let top = cpath.lambdas[0].max(1.0) * 1.5;
    for s in 1..=160 {
        let lambda = top * s as f64 / 160.0;
        let exact = paths.curve.value_at(lambda);
        let slack = 1e-9 * (1.0 + exact);
        if let Ok(v) = cpath.value_at(lambda) {
            if v < exact - slack {
                violations.push(format!("csbr curve below exact curve at λ={lambda}"));
            }
        }
        let (v, _) = lres.polygon.evaluate(lambda);
        if v < exact - slack {
            violations.push(format!("l0pd curve below exact curve at λ={lambda}"));
        }
    }
    if lres.polygon.check_invariants().is_err() {
        violations.push("l0pd polygon invariants failed".to_string());
    }
    violations
}

fn dump_violation(dir: &Path, dict: &Dictionary, obs: &Observation, info: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let m = dict.rows();
    let n = dict.cols();
    let mut row_major = vec![0.0; m * n];
    for c in 0..n {
        for (r, v) in dict.column(c).iter().enumerate() {
            row_major[r * n + c] = *v;
        }
    }
    csv_io::write_matrix(&dir.join("A.csv"), m, n, &row_major)?;
    csv_io::write_vector(&dir.join("y.csv"), obs.values())?;
    fs::write(dir.join("info.txt"), info)?;
    Ok(())
}

pub fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let m_default = args.n + 2;
    let m = args.m.unwrap_or(m_default);
    if args.n > 14 {
        return Err(Failure {
            code: EXIT_USAGE,
            error: anyhow!(OracleError::TooLarge { n: args.n }),
        });
    }
    let run_checks = |dict: &Dictionary, obs: &Observation| -> Result<(Vec<String>, usize, usize, bool)> {
        let paths = exact_paths(dict, obs, None).map_err(|e| anyhow!("{e}"))?;
        let mut violations = Vec::new();
        let mut checks = 0usize;
        let mut strict = 0usize;
        if args.check == "theorems" || args.check == "all" {
            let r1 = check_theorem1(&paths);
            let r2 = check_theorem2(&paths);
            checks += r1.checks + r2.checks;
            strict = r2.strict_pareto_points;
            violations.extend(r1.violations);
            violations.extend(r2.violations);
        }
        let mut dominance_checked = false;
        if args.check == "dominance" || args.check == "all" {
            dominance_checked = true;
            violations.extend(dominance_violations(dict, obs, &paths));
        }
        Ok((violations, checks, strict, dominance_checked))
    };

    let mut manifest = manifest_for("oracle");
    manifest.seed = Some(args.seed);
    let started = Instant::now();
    let mut instances = Vec::new();
    let mut total_violations = 0usize;
    let mut first_violation: Option<PathBuf> = None;

    if let Some(replay_dir) = &args.replay {
        let mat = usage_err(csv_io::read_matrix(&replay_dir.join("A.csv")))?;
        let dict = usage_err(
            Dictionary::from_rows(mat.rows, mat.cols, &mat.data).map_err(|e| anyhow!("{e}")),
        )?;
        let y = usage_err(csv_io::read_vector(&replay_dir.join("y.csv")))?;
        let obs = Observation::new(y);
        let (violations, checks, strict, dom) = solver_err(run_checks(&dict, &obs))?;
        total_violations += violations.len();
        instances.push(OracleInstanceReport {
            trial: 0,
            dict_kind: "replay".to_string(),
            m: dict.rows(),
            n: dict.cols(),
            violations,
            strict_pareto_points: strict,
            checks,
            dominance_checked: dom,
        });
    } else {
        let kinds: Vec<&str> = match args.dict.as_str() {
            "mixed" => vec!["gaussian", "deconv", "jumps"],
            single => vec![single],
        };
        for trial in 0..args.trials {
            let kind = kinds[trial as usize % kinds.len()];
            let (dict, obs) =
                usage_err(oracle_instance(kind, m, args.n, args.seed, trial))?;
            let (violations, checks, strict, dom) = solver_err(run_checks(&dict, &obs))?;
            if !violations.is_empty() && first_violation.is_none() {
                let dir = args.dump_dir.join(format!("trial-{trial}"));
                let info = format!(
                    "kind={kind} seed={} trial={trial} violations:\n{}",
                    args.seed,
                    violations.join("\n")
                );
                usage_err(dump_violation(&dir, &dict, &obs, &info))?;
                first_violation = Some(dir);
            }
            total_violations += violations.len();
            instances.push(OracleInstanceReport {
                trial,
                dict_kind: kind.to_string(),
                m: dict.rows(),
                n: dict.cols(),
                violations,
                strict_pareto_points: strict,
                checks,
                dominance_checked: dom,
            });
        }
    }

    manifest
        .wall_clock_ms
        .insert("total".to_string(), started.elapsed().as_secs_f64() * 1e3);
    let report = OracleReportJson {
        manifest,
        n: args.n,
        m,
        trials: args.trials,
        seed: args.seed,
        check: args.check.clone(),
        dict: args.dict.clone(),
        instances,
        total_violations,
    };
    usage_err(write_json(args.out.as_deref(), &report))?;
    if total_violations > 0 {
        let hint = first_violation
            .map(|d| format!("; offending instance dumped to {}", d.display()))
            .unwrap_or_default();
        return Err(Failure {
            code: EXIT_VERIFY,
            error: anyhow!("{total_violations} structural violations{hint}"),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct BenchJson {
    pub manifest: RunManifest,
    pub scenario: ScenarioJson,
    pub trials: u64,
    pub grid_points: usize,
    pub algorithms: Vec<AlgoReport>,
}

fn bench_csv(report: &BenchJson) -> String {
    let mut out = String::new();
    let manifest_line =
        serde_json::to_string(&report.manifest).unwrap_or_else(|_| "{}".to_string());
    out.push_str(&format!("# manifest: {manifest_line}\n"));
    out.push_str("scenario,metric");
    for a in &report.algorithms {
        out.push_str(&format!(",{}", a.name));
    }
    out.push('\n');
    let metrics: [(&str, fn(&AlgoReport) -> f64); 8] = [
        ("SE", |a| a.aggregate.se),
        ("TP", |a| a.aggregate.tp),
        ("Order", |a| a.aggregate.order),
        ("MDLc-SE", |a| a.aggregate.mdlc_se),
        ("MDLc-TP", |a| a.aggregate.mdlc_tp),
        ("MDLc-Order", |a| a.aggregate.mdlc_order),
        ("CPU-ms", |a| a.timing.mean_solve_ms),
        ("CPU-ms-per-grid-point", |a| {
            a.timing.mean_solve_ms_per_grid_point
        }),
    ];
    for (name, get) in metrics {
        out.push_str(&format!("{},{}", report.scenario.name, name));
        for a in &report.algorithms {
            out.push_str(&format!(",{:.4}", get(a)));
        }
        out.push('\n');
    }
    out
}

fn bench_plots(dir: &Path, report: &BenchJson) -> Result<()> {
    fs::create_dir_all(dir)?;
    // Mean-cost panel: one series per algorithm over the grid (x from the
    // first trial's grid anchor).
    let mut panel = Chart {
        title: format!("scenario {}: mean J per grid point", report.scenario.name),
        x_label: "lambda (log)".to_string(),
        y_label: "mean J".to_string(),
        log_x: true,
        series: Vec::new(),
    };
    for a in &report.algorithms {
        let Some(first) = a.trials.first() else { continue };
        let top = first.lambda1;
        let points: Vec<(f64, f64)> = a
            .mean_j_per_grid_point
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let lambda = top * 10f64.powf(-4.0 * i as f64 / 10.0);
                (lambda, v)
            })
            .collect();
        panel.series.push(Series {
            label: a.name.clone(),
            points,
        });
    }
    fs::write(dir.join("j_panel.svg"), panel.render())?;

    // Per-trial sampled curves, one chart per algorithm.
    for a in &report.algorithms {
        let mut chart = Chart {
            title: format!(
                "scenario {}: {} cost curves per trial",
                report.scenario.name, a.name
            ),
            x_label: "lambda (log)".to_string(),
            y_label: "J".to_string(),
            log_x: true,
            series: Vec::new(),
        };
        for t in &a.trials {
            let points: Vec<(f64, f64)> = t
                .j_values
                .iter()
                .enumerate()
                .filter_map(|(i, v)| {
                    v.map(|v| (t.lambda1 * 10f64.powf(-4.0 * i as f64 / 10.0), v))
                })
                .collect();
            chart.series.push(Series {
                label: format!("trial {}", t.trial),
                points,
            });
        }
        fs::write(dir.join(format!("curves_{}.svg", a.name)), chart.render())?;
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let scenario = usage_err(args.scenario.resolve())?;
    let algos = usage_err(Algo::parse_list(&args.algo))?;
    let started = Instant::now();
    let dict = solver_err(scenario.dictionary().map_err(|e| anyhow!("{e}")))?;
    let dict = Arc::new(dict);
    let dict_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut algorithms = Vec::new();
    let mut manifest = manifest_for("bench");
    manifest.scenario = Some(scenario.name.clone());
    manifest.seed = Some(scenario.seed);
    manifest.algorithm = Some(args.algo.clone());
    manifest
        .wall_clock_ms
        .insert("dictionary".to_string(), dict_ms);
    for algo in algos {
        let t0 = Instant::now();
        let report = solver_err(run_algo(&scenario, &dict, algo, args.trials))?;
        manifest.wall_clock_ms.insert(
            format!("bench_{}", algo.name()),
            t0.elapsed().as_secs_f64() * 1e3,
        );
        algorithms.push(report);
    }
    let report = BenchJson {
        manifest,
        scenario: ScenarioJson::from(&scenario),
        trials: args.trials,
        grid_points: 11,
        algorithms,
    };
    usage_err(write_json(Some(&args.out), &report))?;
    if let Some(csv_path) = &args.csv {
        usage_err(
            fs::write(csv_path, bench_csv(&report))
                .with_context(|| format!("cannot write {}", csv_path.display())),
        )?;
    }
    if let Some(plot_dir) = &args.plot {
        usage_err(bench_plots(plot_dir, &report))?;
    }
    for a in &report.algorithms {
        eprintln!(
            "{}: SE {:.2}  TP {:.2}  Order {:.2}  MDLc-Order {:.2}  ({:.1} ms/solve)",
            a.name,
            a.aggregate.se,
            a.aggregate.tp,
            a.aggregate.order,
            a.aggregate.mdlc_order,
            a.timing.mean_solve_ms
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SelectJson {
    manifest: RunManifest,
    rule: String,
    selected_segment: usize,
    lambda_hi: crate::json::MaybeInf,
    lambda_lo: f64,
    support: Vec<usize>,
    card: usize,
    error: f64,
}

pub fn cmd_select(args: &SelectArgs) -> CmdResult {
    let text = usage_err(
        fs::read_to_string(&args.path)
            .with_context(|| format!("cannot read {}", args.path.display())),
    )?;
    let json: PathJson = usage_err(serde_json::from_str(&text).context("invalid path JSON"))?;
    let path = json.to_path();
    let selected = solver_err(
        match args.rule.as_str() {
            "mdlc" => mdlc_select(&path, args.m),
            "aic" => ic_select(&path, args.m, IcRule::Aic),
            "mdl" => ic_select(&path, args.m, IcRule::Mdl),
            "hq" => ic_select(&path, args.m, IcRule::HannanQuinn),
            other => {
                return Err(Failure {
                    code: EXIT_USAGE,
                    error: anyhow!("unknown rule {other:?} (expected mdlc|aic|mdl|hq)"),
                })
            }
        }
        .map_err(|e| anyhow!("{e}")),
    )?;
    let lambda_hi = if selected == 0 {
        crate::json::MaybeInf::from(f64::INFINITY)
    } else {
        crate::json::MaybeInf::from(path.lambdas[selected - 1])
    };
    let out = SelectJson {
        manifest: manifest_for("select"),
        rule: args.rule.clone(),
        selected_segment: selected,
        lambda_hi,
        lambda_lo: path.lambdas[selected],
        support: path.supports[selected].indices().to_vec(),
        card: path.supports[selected].len(),
        error: path.errors[selected],
    };
    usage_err(write_json(None, &out))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

fn curve_chart(json: &PathJson) -> Chart {
    let path = json.to_path();
    let positive_min = path
        .lambdas
        .iter()
        .copied()
        .filter(|&l| l > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if positive_min.is_finite() {
        positive_min / 10.0
    } else {
        1e-3
    };
    let mut series = Vec::new();
    let mut points = Vec::new();
    for j in 0..path.segment_count() {
        let hi = if j == 0 {
            path.lambdas[0] * 3.0
        } else {
            path.lambdas[j - 1]
        };
        let lo = path.lambdas[j].max(floor);
        if !(hi > lo) {
            continue;
        }
        let card = path.supports[j].len() as f64;
        points.push((hi, path.errors[j] + hi * card));
        points.push((lo, path.errors[j] + lo * card));
    }
    series.push(Series {
        label: json.producer.clone(),
        points,
    });
    Chart {
        title: format!("approximate l0 curve ({})", json.producer),
        x_label: "lambda (log)".to_string(),
        y_label: "J".to_string(),
        log_x: true,
        series,
    }
}

pub fn cmd_plot(args: &PlotArgs) -> CmdResult {
    match (&args.path, &args.bench) {
        (Some(path), None) => {
            let text = usage_err(
                fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display())),
            )?;
            let json: PathJson =
                usage_err(serde_json::from_str(&text).context("invalid path JSON"))?;
            let chart = curve_chart(&json);
            usage_err(
                fs::write(&args.out, chart.render())
                    .with_context(|| format!("cannot write {}", args.out.display())),
            )?;
            Ok(())
        }
        (None, Some(bench_path)) => {
            let text = usage_err(
                fs::read_to_string(bench_path)
                    .with_context(|| format!("cannot read {}", bench_path.display())),
            )?;
            let report: BenchJson =
                usage_err(serde_json::from_str(&text).context("invalid results JSON"))?;
            usage_err(bench_plots(&args.out, &report))?;
            Ok(())
        }
        _ => Err(Failure {
            code: EXIT_USAGE,
            error: anyhow!("provide exactly one of --path or --bench"),
        }),
    }
}

/// Allows tests to reuse the instance loader.
pub fn instance_for_tests(scenario: &Scenario, trial: u64) -> Result<Instance> {
    let dict = Arc::new(scenario.dictionary().map_err(|e| anyhow!("{e}"))?);
    Ok(draw_instance_with(scenario, &dict, trial))
}
