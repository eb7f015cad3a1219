//! Command-line surface: reproducible experiments, exact solves, and the
//! verification table.
//!
//! Every artifact embeds the fully resolved [`Config`] and a format-version
//! string. Exit codes: 0 success, 1 precondition violation (bad arguments,
//! missing seed, unparsable input), 2 verification failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excursion::builtin_functionals;
use crate::exact::axis::axis_absorption;
use crate::exact::cone::{cone_exit, reverse_sum};
use crate::exact::invariant::constants;
use crate::asymptotics::semianalytic::{cone_exit_semianalytic, eta_tail_semianalytic};
use crate::lattice::{LatticePoint, WalkParams};
use crate::montecarlo::{replicate, Campaign};
use crate::verify::{run_all, VerifyConfig};

pub const FORMAT_VERSION: &str = "pwalk-artifact-1";

#[derive(Parser, Debug)]
#[command(name = "pwalk", version, about = "Perturbed planar walk laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: Overrides,

    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Optional settings as given (file and flags merged, flags winning);
/// resolved to concrete values in [`Config`].
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct Overrides {
    /// Perturbation exponent.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Simulation horizon (accepts scientific notation, e.g. 1e6).
    #[arg(long, global = true)]
    pub n: Option<f64>,
    #[arg(long, global = true)]
    pub replicas: Option<u32>,
    /// Base seed; required by every randomized command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Spatial truncation radius.
    #[arg(long = "R", global = true)]
    pub r: Option<usize>,
    /// Time-stepping horizon for forward/backward DPs.
    #[arg(long = "T", global = true)]
    pub t: Option<usize>,
    /// Convergence tolerance for power iteration.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads (default: available cores); results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Permit alpha <= 3 in `constants` and `verify`.
    #[arg(long, global = true)]
    #[serde(default)]
    pub allow_subcritical: Option<bool>,
}

impl Overrides {
    /// File values filled in wherever the flags left a hole.
    fn or(self, file: Overrides) -> Overrides {
        Overrides {
            alpha: self.alpha.or(file.alpha),
            n: self.n.or(file.n),
            replicas: self.replicas.or(file.replicas),
            seed: self.seed.or(file.seed),
            r: self.r.or(file.r),
            t: self.t.or(file.t),
            tol: self.tol.or(file.tol),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            jobs: self.jobs.or(file.jobs),
            allow_subcritical: self.allow_subcritical.or(file.allow_subcritical),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// The fully resolved run configuration embedded in every artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub alpha: f64,
    pub n: u64,
    pub replicas: u32,
    pub base_seed: Option<u64>,
    pub r: usize,
    pub t: usize,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub jobs: Option<usize>,
    pub allow_subcritical: bool,
}

impl Config {
    pub fn resolve(ov: &Overrides) -> Result<Config> {
        let n = ov.n.unwrap_or(1e6);
        if !(n.is_finite() && n >= 1.0 && n < 1e18) {
            return Err(Error::Precondition(format!("horizon n = {n} out of range")));
        }
        Ok(Config {
            alpha: ov.alpha.unwrap_or(4.0),
            n: n as u64,
            replicas: ov.replicas.unwrap_or(10),
            base_seed: ov.seed,
            r: ov.r.unwrap_or(200),
            t: ov.t.unwrap_or(100_000),
            tol: ov.tol.unwrap_or(1e-10),
            out_dir: ov.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            format: ov.format.unwrap_or(OutputFormat::Json),
            jobs: ov.jobs,
            allow_subcritical: ov.allow_subcritical.unwrap_or(false),
        })
    }

    fn seed(&self) -> Result<u64> {
        self.base_seed.ok_or_else(|| {
            Error::Precondition(
                "this command is randomized; pass an explicit --seed".to_string(),
            )
        })
    }

    fn require_supercritical(&self) -> Result<()> {
        if self.alpha <= 3.0 && !self.allow_subcritical {
            return Err(Error::Precondition(format!(
                "alpha = {} is not in the renewal regime (alpha > 3); \
                 pass --allow-subcritical to proceed",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a Monte Carlo campaign and write the estimate report.
    Simulate,
    /// Run one exact-solver or semi-analytic operation.
    Exact {
        #[command(subcommand)]
        op: ExactOp,
    },
    /// Compute the renewal constants for (alpha, R).
    Constants,
    /// Run the acceptance suite and write the pass/fail table.
    Verify {
        /// Use the reduced problem sizes.
        #[arg(long)]
        quick: bool,
    },
    /// Merge prior artifacts from the output directory into one summary.
    Report,
}

#[derive(Subcommand, Debug)]
pub enum ExactOp {
    /// Truncated boundary sum of hitting probabilities of an axis site.
    ReverseSum {
        /// Target axis site as "x1,x2".
        #[arg(long)]
        x: String,
    },
    /// Forward DP for the cone exit law from a cone site.
    ConeExit {
        /// Start site as "x1,x2".
        #[arg(long)]
        start: String,
        /// Retain per-step exit laws up to this step.
        #[arg(long, default_value_t = 0)]
        joint_cap: usize,
    },
    /// Axis-chain absorption law and moments from an axis site.
    AxisAbsorption {
        /// Start site as "x1,x2".
        #[arg(long)]
        start: String,
        /// Survival-function horizon.
        #[arg(long, default_value_t = 0)]
        horizon: usize,
    },
    /// Semi-analytic exit-site probability P_(1,x)(exit at (y,0)).
    ExitSite {
        #[arg(long)]
        x: i64,
        #[arg(long, default_value_t = 1)]
        y: i64,
        /// Cutoff on the exit time sum (default 16 x^2).
        #[arg(long)]
        k_max: Option<u64>,
    },
    /// Semi-analytic exit-time probability P_(1,x)(eta = k).
    EtaTail {
        #[arg(long, default_value_t = 1)]
        x: i64,
        #[arg(long)]
        k: u64,
    },
}

/// "x1,x2" -> lattice point.
pub fn parse_point(s: &str) -> Result<LatticePoint> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || Error::Precondition(format!("expected a point as \"x1,x2\", got {s:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let x1 = parts[0].trim().parse::<i64>().map_err(|_| bad())?;
    let x2 = parts[1].trim().parse::<i64>().map_err(|_| bad())?;
    Ok(LatticePoint::new(x1, x2))
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    format_version: &'static str,
    config: &'a Config,
    kind: &'static str,
    payload: T,
}

fn write_json<T: Serialize>(
    cfg: &Config,
    kind: &'static str,
    file: &str,
    payload: T,
) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)?;
    let artifact = Artifact {
        format_version: FORMAT_VERSION,
        config: cfg,
        kind,
        payload,
    };
    let path = cfg.out_dir.join(file);
    let mut bytes = serde_json::to_vec_pretty(&artifact)?;
    bytes.push(b'\n');
    fs::write(&path, bytes)?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn write_csv(cfg: &Config, file: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(file);
    let mut w = csv::Writer::from_path(&path)?;
    // The resolved config rides along as two preamble records, padded to the
    // table width so the file stays rectangular.
    let pad = |mut rec: Vec<String>| {
        rec.resize(header.len().max(rec.len()), String::new());
        rec
    };
    w.write_record(pad(vec!["format_version".into(), FORMAT_VERSION.into()]))?;
    w.write_record(pad(vec!["config".into(), serde_json::to_string(cfg)?]))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn cmd_simulate(cfg: &Config) -> Result<i32> {
    let params = WalkParams::new(cfg.alpha)?;
    let mut campaign = Campaign::new(params, cfg.n, cfg.replicas, cfg.seed()?);
    campaign.functionals = builtin_functionals();
    let report = replicate(&campaign)?;
    write_json(cfg, "estimate-report", "simulate.json", &report)?;
    if cfg.format == OutputFormat::Csv {
        let rows: Vec<Vec<String>> = report
            .estimators
            .iter()
            .map(|e| {
                vec![
                    e.name.clone(),
                    format!("{:.17e}", e.mean),
                    format!("{:.17e}", e.stderr),
                    e.replicas.to_string(),
                ]
            })
            .collect();
        write_csv(cfg, "estimators.csv", &["estimator", "mean", "stderr", "replicas"], &rows)?;
        for (name, measure) in [
            ("entry_measure.csv", &report.merged.entry_histogram),
            ("exit_measure.csv", &report.merged.exit_histogram),
        ] {
            let rows: Vec<Vec<String>> = measure
                .iter()
                .map(|(p, &m)| vec![p.x1.to_string(), p.x2.to_string(), format!("{m}")])
                .collect();
            write_csv(cfg, name, &["x1", "x2", "count"], &rows)?;
        }
    }
    Ok(0)
}

fn cmd_exact(cfg: &Config, op: &ExactOp) -> Result<i32> {
    match op {
        ExactOp::ReverseSum { x } => {
            let target = parse_point(x)?;
            let rs = reverse_sum(target, cfg.r as i64, cfg.t)?;
            write_json(cfg, "reverse-sum", "reverse_sum.json", rs)?;
        }
        ExactOp::ConeExit { start, joint_cap } => {
            let start = parse_point(start)?;
            let law = cone_exit(start, cfg.r as i64, cfg.t, *joint_cap)?;
            write_json(cfg, "cone-exit", "cone_exit.json", &law)?;
        }
        ExactOp::AxisAbsorption { start, horizon } => {
            let start = parse_point(start)?;
            let params = WalkParams::new(cfg.alpha)?;
            let res = axis_absorption(start, params, cfg.r, *horizon)?;
            write_json(cfg, "axis-absorption", "axis_absorption.json", &res)?;
        }
        ExactOp::ExitSite { x, y, k_max } => {
            let k_max = k_max.unwrap_or(16 * (*x as u64).pow(2).max(25));
            let res = cone_exit_semianalytic(*x, *y, k_max)?;
            write_json(cfg, "exit-site", "exit_site.json", res)?;
        }
        ExactOp::EtaTail { x, k } => {
            let res = eta_tail_semianalytic(*x, *k, None)?;
            write_json(cfg, "eta-tail", "eta_tail.json", res)?;
        }
    }
    Ok(0)
}

fn cmd_constants(cfg: &Config) -> Result<i32> {
    let params = WalkParams::new(cfg.alpha)?;
    let cons = constants(params, cfg.r, cfg.tol, cfg.allow_subcritical)?;
    write_json(cfg, "constants", "constants.json", &cons)?;
    if cfg.format == OutputFormat::Csv {
        let value: serde_json::Value = serde_json::to_value(&cons)?;
        let rows: Vec<Vec<String>> = value
            .as_object()
            .unwrap()
            .iter()
            .map(|(k, v)| vec![k.clone(), v.to_string()])
            .collect();
        write_csv(cfg, "constants.csv", &["name", "value"], &rows)?;
    }
    Ok(0)
}

fn cmd_verify(cfg: &Config, ov: &Overrides, quick: bool) -> Result<i32> {
    cfg.require_supercritical()?;
    let seed = cfg.seed()?;
    let mut vcfg = if quick {
        VerifyConfig::quick(cfg.alpha, seed)
    } else {
        VerifyConfig::full(cfg.alpha, seed)
    };
    // The campaign and truncation sizes follow explicit settings only; the
    // acceptance-scale defaults stay in force otherwise.
    if let Some(n) = ov.n {
        vcfg.mc_n = n as u64;
    }
    if let Some(reps) = ov.replicas {
        vcfg.mc_replicas = reps;
    }
    if let Some(r) = ov.r {
        vcfg.r = r;
    }
    vcfg.mc_snapshots.retain(|&s| s < vcfg.mc_n);
    let results = run_all(&vcfg);
    for res in &results {
        println!(
            "{} {}: {}",
            if res.passed { "PASS" } else { "FAIL" },
            res.name,
            res.details
        );
    }
    write_json(cfg, "verify-table", "verify.json", &results)?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.name.clone(), r.passed.to_string(), r.details.clone()])
        .collect();
    write_csv(cfg, "verify.csv", &["check", "passed", "details"], &rows)?;
    let failing: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if failing.is_empty() {
        Ok(0)
    } else {
        eprintln!("verification failed: {}", failing.join(", "));
        Ok(2)
    }
}

const REPORT_SOURCES: &[&str] = &[
    "simulate.json",
    "constants.json",
    "verify.json",
    "reverse_sum.json",
    "cone_exit.json",
    "axis_absorption.json",
    "exit_site.json",
    "eta_tail.json",
];

fn cmd_report(cfg: &Config) -> Result<i32> {
    let mut merged = serde_json::Map::new();
    for name in REPORT_SOURCES {
        let path = cfg.out_dir.join(name);
        if path.exists() {
            let value: serde_json::Value = serde_json::from_slice(&fs::read(&path)?)?;
            merged.insert(name.to_string(), value);
        }
    }
    if merged.is_empty() {
        return Err(Error::Precondition(format!(
            "no prior artifacts found in {}",
            cfg.out_dir.display()
        )));
    }
    write_json(cfg, "summary", "summary.json", serde_json::Value::Object(merged))?;
    Ok(0)
}

fn load_file_overrides(path: &Path) -> Result<Overrides> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run(argv: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are successes; bad usage is a
            // precondition violation.
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    match run_parsed(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run_parsed(cli: Cli) -> Result<i32> {
    let mut ov = cli.overrides;
    if let Some(path) = &cli.config {
        ov = ov.or(load_file_overrides(path)?);
    }
    let cfg = Config::resolve(&ov)?;
    if let Some(jobs) = cfg.jobs {
        // Results are identical for any worker count; a pool that was
        // already installed (e.g. under tests) is left alone.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match &cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Exact { op } => cmd_exact(&cfg, op),
        Command::Constants => cmd_constants(&cfg),
        Command::Verify { quick } => cmd_verify(&cfg, &ov, *quick),
        Command::Report => cmd_report(&cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("pwalk-cli-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("pwalk".to_string()).chain(args.iter().map(|s| s.to_string())))
    }

    #[test]
    fn points_parse_and_reject() {
        assert_eq!(parse_point("0,3").unwrap(), LatticePoint::new(0, 3));
        assert_eq!(parse_point(" -2 , 5 ").unwrap(), LatticePoint::new(-2, 5));
        assert!(parse_point("3").is_err());
        assert!(parse_point("a,b").is_err());
        assert!(parse_point("1,2,3").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = scratch("cfg");
        let file = dir.join("config.json");
        fs::write(&file, r#"{"alpha": 3.5, "n": 5000.0, "replicas": 3}"#).unwrap();
        let flags = Overrides {
            alpha: Some(4.0),
            ..Default::default()
        };
        let merged = flags.or(load_file_overrides(&file).unwrap());
        let cfg = Config::resolve(&merged).unwrap();
        assert_eq!(cfg.alpha, 4.0); // flag wins
        assert_eq!(cfg.n, 5000); // file fills the hole
        assert_eq!(cfg.replicas, 3);
        assert_eq!(cfg.r, 200); // default fills the rest
    }

    #[test]
    fn randomized_commands_demand_a_seed() {
        let dir = scratch("seed");
        let out = dir.to_str().unwrap();
        assert_eq!(run_args(&["simulate", "--out", out]), 1);
        assert_eq!(run_args(&["verify", "--quick", "--out", out]), 1);
    }

    #[test]
    fn bad_usage_exits_one_and_help_exits_zero() {
        assert_eq!(run_args(&["no-such-command"]), 1);
        assert_eq!(run_args(&["--help"]), 0);
    }

    #[test]
    fn subcritical_alpha_is_gated() {
        let dir = scratch("gate");
        let out = dir.to_str().unwrap();
        assert_eq!(
            run_args(&["verify", "--quick", "--alpha", "2", "--seed", "1", "--out", out]),
            1
        );
    }

    #[test]
    fn constants_artifact_embeds_config_and_identities() {
        let dir = scratch("constants");
        let out = dir.to_str().unwrap();
        let code = run_args(&[
            "constants", "--alpha", "4", "--R", "80", "--format", "csv", "--out", out,
        ]);
        assert_eq!(code, 0);
        let value: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.join("constants.json")).unwrap()).unwrap();
        assert_eq!(value["format_version"], FORMAT_VERSION);
        assert_eq!(value["config"]["alpha"], 4.0);
        assert_eq!(value["config"]["r"], 80);
        let c1 = value["payload"]["c1"].as_f64().unwrap();
        let c2 = value["payload"]["c2"].as_f64().unwrap();
        assert!((c1 * c2 - 0.25).abs() < 1e-12, "c1 c2 = {}", c1 * c2);
        assert!(dir.join("constants.csv").exists());
    }

    #[test]
    fn exact_reverse_sum_lands_in_the_band() {
        let dir = scratch("reverse");
        let out = dir.to_str().unwrap();
        let code = run_args(&[
            "exact", "reverse-sum", "--x", "0,1", "--R", "60", "--T", "8000", "--out", out,
        ]);
        assert_eq!(code, 0);
        let value: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.join("reverse_sum.json")).unwrap()).unwrap();
        let raw = value["payload"]["raw"].as_f64().unwrap();
        assert!((1.9..=2.0).contains(&raw), "raw = {raw}");
    }

    #[test]
    fn simulate_artifacts_are_reproducible_bytes() {
        let mut artifacts = Vec::new();
        for tag in ["sim-a", "sim-b"] {
            let dir = scratch(tag);
            let out = dir.to_str().unwrap();
            let code = run_args(&[
                "simulate", "--alpha", "4", "--n", "2e4", "--replicas", "2", "--seed", "11",
                "--format", "csv", "--out", out,
            ]);
            assert_eq!(code, 0);
            // The embedded config differs by out_dir; compare payloads.
            let value: serde_json::Value =
                serde_json::from_slice(&fs::read(dir.join("simulate.json")).unwrap()).unwrap();
            assert!(dir.join("estimators.csv").exists());
            assert!(dir.join("entry_measure.csv").exists());
            artifacts.push(value["payload"].to_string());
        }
        assert_eq!(artifacts[0], artifacts[1]);
    }

    #[test]
    fn report_merges_prior_artifacts() {
        let dir = scratch("report");
        let out = dir.to_str().unwrap();
        assert_eq!(run_args(&["report", "--out", out]), 1); // nothing yet
        assert_eq!(run_args(&["constants", "--alpha", "4", "--R", "60", "--out", out]), 0);
        assert_eq!(run_args(&["report", "--out", out]), 0);
        let value: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
        assert!(value["payload"]["constants.json"]["payload"]["c1"].is_f64());
    }
}
