//! Batch front-end: one TOML configuration file names a scenario, a norm,
//! and an optional domain; a run executes the matching verification suite
//! and writes its artifacts (a JSON report, a CSV of check records, one CSV
//! per plot series, and a machine-readable summary line per check on
//! stdout). The process exit status is 0 exactly when every check passes.
//!
//! ```toml
//! scenario = "solve_and_verify"
//! seed = 7
//!
//! [norm]
//! family = "quadratic"
//! A = [4.0, 0.0, 0.0, 1.0]
//!
//! [resolution]
//! source_nodes = 2000
//! target_nodes = 1200
//! ```
//!
//! Scenario-specific inputs: `converse` requires a non-Wulff `[domain]`
//! (polygon or ellipse); `wulff_identities` and `solve_and_verify` default
//! to the unit Wulff ball of `[norm]`. All randomness flows from `seed`,
//! and identical configurations produce bitwise-identical reports at a
//! fixed thread count.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_domain, DomainDescriptor, DomainKind};
use crate::norms::NormSpec;
use crate::transport::SolverOpts;
use crate::verifier::{
    converse_suite, convergence_study_suite, norm_identity_suite, solve_and_verify_suite,
    wulff_identity_suite, SuiteOutput,
};

/// Environment variable consulted for the output directory when neither
/// `--output` nor the configuration provides one.
pub const OUTPUT_DIR_ENV: &str = "FMA_OUTPUT_DIR";

/// Named verification scenario; selects which suite a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Norm-calculus identity battery on random points.
    NormIdentities,
    /// Radial-path identity suite on the unit Wulff ball.
    WulffIdentities,
    /// Entropic solve plus the full solver-path battery.
    SolveAndVerify,
    /// Wulff vs non-Wulff boundary-oscillation comparison.
    Converse,
    /// Grid-refinement study of the radial residual.
    ConvergenceStudy,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::NormIdentities => "norm_identities",
            Scenario::WulffIdentities => "wulff_identities",
            Scenario::SolveAndVerify => "solve_and_verify",
            Scenario::Converse => "converse",
            Scenario::ConvergenceStudy => "convergence_study",
        }
    }
}

/// Domain block of the configuration. `kind` plus its fields mirror
/// [`DomainKind`]; a Wulff ball may omit `norm` to reuse the top-level
/// norm, and `radius` defaults to 1.
#[derive(Debug, Clone, Deserialize)]
pub struct DomainConfig {
    #[serde(flatten)]
    pub kind: DomainKindConfig,
    #[serde(default)]
    pub center: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainKindConfig {
    WulffBall {
        #[serde(default)]
        norm: Option<NormSpec>,
        #[serde(default)]
        radius: Option<f64>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Ellipse {
        matrix: [[f64; 2]; 2],
    },
}

/// Discretization knobs. `grid_h` wins when given; otherwise it is derived
/// so the (area-normalized) domain carries at least `source_nodes`
/// interior quadrature nodes.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    #[serde(default)]
    pub grid_h: Option<f64>,
    #[serde(default)]
    pub source_nodes: Option<usize>,
    #[serde(default)]
    pub target_nodes: Option<usize>,
}

/// Solver knobs; every field falls back to the [`SolverOpts`] default.
/// `weak_tol` is the tolerance handed to the weak-form battery of the
/// `solve_and_verify` scenario.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub eps_final: Option<f64>,
    #[serde(default)]
    pub marginal_tol: Option<f64>,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
    #[serde(default)]
    pub weak_tol: Option<f64>,
}

/// One parsed run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub norm: NormSpec,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub resolution: ResolutionConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl RunConfig {
    /// Parse a configuration document, then apply `key=value` overrides
    /// (dot paths, e.g. `solver.max_sweeps=500`).
    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut value: toml::Value = toml::from_str(text)
            .map_err(|e| Error::Config(format!("configuration parse error: {e}")))?;
        for entry in overrides {
            let (path, raw) = entry.split_once('=').ok_or_else(|| {
                Error::Config(format!("override `{entry}` is not of the form key=value"))
            })?;
            apply_override(&mut value, path.trim(), raw.trim())?;
        }
        value
            .try_into()
            .map_err(|e| Error::Config(format!("configuration field error: {e}")))
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read configuration {}: {e}", path.display()))
        })?;
        RunConfig::from_str_with_overrides(&text, overrides)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The lattice step for domain-building scenarios: explicit `grid_h`,
    /// else sized so the area-normalized domain carries at least
    /// `source_nodes` interior nodes (with a 15% sizing margin), else the
    /// scenario default.
    fn effective_grid_h(&self) -> Result<f64> {
        if let Some(h) = self.resolution.grid_h {
            if h <= 0.0 || !h.is_finite() {
                return Err(Error::Config(format!(
                    "resolution.grid_h must be positive, got {h}"
                )));
            }
            return Ok(h);
        }
        let default_nodes = match self.scenario {
            Scenario::SolveAndVerify => 2000,
            Scenario::Converse => 500,
            _ => 0,
        };
        let nodes = self.resolution.source_nodes.unwrap_or(default_nodes);
        if nodes == 0 {
            // Identity suites: a fixed fine lattice.
            return Ok(1.0 / 64.0);
        }
        // Solver domains are dilated to the unit Wulff ball's area, so the
        // interior count is ≈ area/h² regardless of the descriptor.
        let area = build_domain(&DomainDescriptor::wulff_ball(
            self.norm.clone(),
            1.0,
            1.0 / 16.0,
        ))?
        .area;
        Ok((area / (1.15 * nodes as f64)).sqrt())
    }

    /// The domain descriptor for solver scenarios (defaults to the unit
    /// Wulff ball of the top-level norm).
    fn descriptor(&self) -> Result<DomainDescriptor> {
        let grid_h = self.effective_grid_h()?;
        let Some(domain) = &self.domain else {
            return Ok(DomainDescriptor::wulff_ball(self.norm.clone(), 1.0, grid_h));
        };
        let mut desc = match &domain.kind {
            DomainKindConfig::WulffBall { norm, radius } => DomainDescriptor::wulff_ball(
                norm.clone().unwrap_or_else(|| self.norm.clone()),
                radius.unwrap_or(1.0),
                grid_h,
            ),
            DomainKindConfig::Polygon { vertices } => {
                DomainDescriptor::polygon(vertices.clone(), grid_h)
            }
            DomainKindConfig::Ellipse { matrix } => DomainDescriptor::ellipse(*matrix, grid_h),
        };
        if let Some(c) = domain.center {
            desc.center = c;
        }
        Ok(desc)
    }

    fn solver_opts(&self) -> SolverOpts {
        let defaults = SolverOpts::default();
        SolverOpts {
            eps_final: self.solver.eps_final,
            marginal_tol: self.solver.marginal_tol.unwrap_or(defaults.marginal_tol),
            max_sweeps: self.solver.max_sweeps.unwrap_or(defaults.max_sweeps),
            target_nodes: self
                .resolution
                .target_nodes
                .unwrap_or(defaults.target_nodes),
        }
    }

    /// Execute the configured scenario and return its reports and plots.
    pub fn run_scenario(&self) -> Result<SuiteOutput> {
        match self.scenario {
            Scenario::NormIdentities => norm_identity_suite(&self.norm, 100, self.seed),
            Scenario::WulffIdentities => {
                wulff_identity_suite(&self.norm, self.effective_grid_h()?)
            }
            Scenario::ConvergenceStudy => convergence_study_suite(&self.norm),
            Scenario::SolveAndVerify => {
                let weak_tol = self.solver.weak_tol.unwrap_or(0.03);
                solve_and_verify_suite(&self.norm, &self.descriptor()?, &self.solver_opts(), weak_tol)
            }
            Scenario::Converse => {
                let desc = self.descriptor()?;
                if matches!(desc.kind, DomainKind::WulffBall { .. }) && self.domain.is_none() {
                    return Err(Error::Config(
                        "the converse scenario needs a non-Wulff [domain] (polygon or ellipse)"
                            .into(),
                    ));
                }
                converse_suite(&self.norm, &desc, &self.solver_opts())
            }
        }
    }
}

/// Walk `root` along the dot path, creating tables as needed, and set the
/// leaf to `raw` parsed as a TOML value (string fallback).
fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    if path.is_empty() {
        return Err(Error::Config("override with an empty key".into()));
    }
    let leaf_value = parse_override_value(raw);
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let table = cursor.as_table_mut().ok_or_else(|| {
            Error::Config(format!(
                "override `{path}`: `{}` is not a table",
                segments[..i].join(".")
            ))
        })?;
        if i + 1 == segments.len() {
            table.insert(segment.to_string(), leaf_value);
            return Ok(());
        }
        cursor = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    unreachable!("segments is non-empty");
}

/// `3`, `0.05`, `true`, `[1, 2]`, `"text"` parse as the corresponding TOML
/// values; anything else is taken as a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

// ---------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------

#[derive(Serialize)]
struct Report<'a> {
    scenario: &'a str,
    seed: u64,
    all_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    reports: &'a [crate::verifier::CheckReport],
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Write `report.json`, `checks.csv`, `summary.txt`, and one
/// `plot_<name>.csv` per plot series into `out_dir`, echoing the summary
/// lines on stdout. Returns the process exit code (0 all pass, 1 failures,
/// 2 scenario error).
pub fn write_artifacts(
    cfg: &RunConfig,
    outcome: &Result<SuiteOutput>,
    out_dir: &Path,
) -> Result<i32> {
    fs::create_dir_all(out_dir)?;
    let (reports, plots, error) = match outcome {
        Ok(out) => (out.reports.as_slice(), out.plots.as_slice(), None),
        Err(e) => (&[] as &[_], &[] as &[_], Some(e.to_string())),
    };
    let all_pass = error.is_none() && reports.iter().all(|r| r.pass);

    let report = Report {
        scenario: cfg.scenario.name(),
        seed: cfg.seed,
        all_pass,
        error: error.clone(),
        reports,
    };
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(out_dir.join("report.json"), json + "\n")?;

    let mut checks = String::from("name,relation,lhs,rhs,abs_err,rel_err,tol,pass\n");
    for r in reports {
        checks.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_quote(&r.name),
            r.relation,
            r.lhs,
            r.rhs,
            r.abs_err,
            r.rel_err,
            r.tol,
            r.pass
        ));
    }
    fs::write(out_dir.join("checks.csv"), checks)?;

    for plot in plots {
        let mut file = fs::File::create(out_dir.join(format!("plot_{}.csv", plot.name)))?;
        plot.write_csv(&mut file)?;
    }

    let mut summary = String::new();
    for r in reports {
        summary.push_str(&r.summary_line());
        summary.push('\n');
    }
    if let Some(e) = &error {
        summary.push_str(&format!("[FAIL] scenario error: {e}\n"));
    }
    fs::write(out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!(
        "{}: {} ({} checks, artifacts in {})",
        cfg.scenario.name(),
        if all_pass { "all checks passed" } else { "FAILURES" },
        reports.len(),
        out_dir.display()
    );

    Ok(if error.is_some() {
        2
    } else if all_pass {
        0
    } else {
        1
    })
}

// ---------------------------------------------------------------------
// Argument parsing and entry point
// ---------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "fma",
    version,
    about = "Finsler Monge-Ampère verification scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run configuration and write its report artifacts.
    Run {
        /// Path to the TOML run configuration.
        config: PathBuf,
        /// Output directory (precedence: this flag, the configuration's
        /// `output_dir`, $FMA_OUTPUT_DIR, then `runs/<scenario>`).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Replace the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Size of the global thread pool (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Dot-path configuration override, repeatable
        /// (e.g. --override solver.max_sweeps=500).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

/// Run one CLI invocation; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            output,
            seed,
            threads,
            overrides,
        } => match run_command(&config, output, seed, threads, &overrides) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    }
}

fn run_command(
    config_path: &Path,
    output: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    overrides: &[String],
) -> Result<i32> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = RunConfig::from_file(config_path, overrides)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = output
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.scenario.name()));
    let outcome = cfg.run_scenario();
    // Write artifacts even when the scenario errored; the report records
    // the failure.
    let code = write_artifacts(&cfg, &outcome, &out_dir)?;
    std::io::stdout().flush()?;
    Ok(code)
}
