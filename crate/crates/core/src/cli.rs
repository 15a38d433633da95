//! Command implementations behind the `fairswap` binary.
//!
//! Each command returns its output as a string so the binary only handles
//! argument parsing, printing and exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::allocation::utility_vector;
use crate::audit::{audit, AuditError, AuditOptions};
use crate::exchange::ExchangeGraph;
use crate::generate::{random_instance, rng_for, Family};
use crate::io::{named_bundles, AllocationFile, FormatError, InstanceFile, FORMAT_VERSION};
use crate::oracle::{achievable_utility_vectors, optimum_over, OracleError};
use crate::solver::{solve_with, Criterion, GainFunction, SolveError, SolveOptions};
use crate::valuation::Instance;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 for internal invariant failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(SolveError::Invariant(_)) => 1,
            _ => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = read(path)?;
    InstanceFile::parse(&text)
        .and_then(|f| f.to_instance())
        .map_err(|source| CliError::Format {
            path: path.to_path_buf(),
            source,
        })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleInfo {
    pub a: u64,
    pub b: u64,
    /// Utilities in the original units, `a` times the rescaled ones.
    pub original_utilities: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOutput {
    pub version: u32,
    pub criterion: String,
    pub agents: Vec<String>,
    pub bundles: BTreeMap<String, Vec<String>>,
    pub clean: BTreeMap<String, Vec<String>>,
    pub supplementary: BTreeMap<String, Vec<String>>,
    /// In agent order, matching `agents`.
    pub utilities: Vec<u64>,
    pub sorted_utilities: Vec<u64>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleInfo>,
}

#[derive(Clone, Debug, Default)]
pub struct SolveArgs {
    pub trace: Option<PathBuf>,
    pub dot: Option<PathBuf>,
}

pub fn solve_output(
    inst: &Instance,
    criterion: Criterion,
    args: &SolveArgs,
) -> Result<SolveOutput, CliError> {
    criterion.validate()?;
    let sol = solve_with(
        inst,
        &criterion,
        SolveOptions {
            check_invariants: true,
        },
    )?;
    if let Some(path) = &args.trace {
        write(path, &sol.trace.to_json_lines())?;
    }
    if let Some(path) = &args.dot {
        let graph = ExchangeGraph::build(inst, &sol.decomposition.clean)
            .map_err(|e| SolveError::Invariant(e.to_string()))?;
        write(path, &graph.to_dot(inst))?;
    }
    let utilities = utility_vector(inst, &sol.allocation);
    let mut sorted_utilities = utilities.clone();
    sorted_utilities.sort_unstable();
    Ok(SolveOutput {
        version: FORMAT_VERSION,
        criterion: criterion.to_string(),
        agents: inst.agents().iter().map(|a| a.name.clone()).collect(),
        bundles: named_bundles(inst, sol.allocation.bundles()),
        clean: named_bundles(inst, &sol.decomposition.clean.bundles),
        supplementary: named_bundles(inst, &sol.decomposition.supplementary),
        scale: inst.scale().map(|s| ScaleInfo {
            a: s.a,
            b: s.b,
            original_utilities: utilities.iter().map(|u| u * s.a).collect(),
        }),
        utilities,
        sorted_utilities,
        iterations: sol.trace.len(),
    })
}

pub fn cmd_solve(path: &Path, criterion: Criterion, args: &SolveArgs) -> Result<String, CliError> {
    let inst = load_instance(path)?;
    let out = solve_output(&inst, criterion, args)?;
    Ok(serde_json::to_string_pretty(&out).expect("solve output serializes"))
}

pub fn cmd_audit(
    instance_path: &Path,
    allocation_path: &Path,
    opts: &AuditOptions,
    table: bool,
) -> Result<String, CliError> {
    let inst = load_instance(instance_path)?;
    let alloc = AllocationFile::parse(&read(allocation_path)?)
        .and_then(|f| f.to_allocation(&inst))
        .map_err(|source| CliError::Format {
            path: allocation_path.to_path_buf(),
            source,
        })?;
    let report = audit(&inst, &alloc, opts)?;
    Ok(if table {
        report.to_table(&inst)
    } else {
        serde_json::to_string_pretty(&report).expect("audit report serializes")
    })
}

pub fn cmd_gen(family: Family, n: usize, m: usize, c: u64, seed: u64) -> Result<String, CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let inst =
        random_instance(family, n, m, c, &mut rng_for(seed)).map_err(|e| CliError::Format {
            path: PathBuf::from("<generated>"),
            source: e.into(),
        })?;
    Ok(InstanceFile::from_instance(&inst).to_json() + "\n")
}

#[derive(Clone, Debug)]
pub struct OracleCheckConfig {
    pub families: Vec<Family>,
    pub count: usize,
    pub max_n: usize,
    pub max_m: usize,
    pub cs: Vec<u64>,
    pub criteria: Vec<Criterion>,
    pub seed: u64,
    pub jobs: usize,
    pub report_dir: Option<PathBuf>,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            families: Family::ALL.to_vec(),
            count: 200,
            max_n: 3,
            max_m: 6,
            cs: vec![2, 3],
            criteria: vec![
                Criterion::Mnw,
                Criterion::Leximin,
                Criterion::PMean { p: 0.5 },
                Criterion::PMean { p: -1.0 },
                Criterion::PMean { p: -2.0 },
            ],
            seed: 0,
            jobs: 1,
            report_dir: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleMismatch {
    pub family: Family,
    pub index: usize,
    pub criterion: String,
    pub instance: InstanceFile,
    /// Empty when the solver returned an error.
    pub solver_utilities: Vec<u64>,
    pub optimal_sorted: Vec<u64>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OracleSummary {
    pub instances: usize,
    pub checks: usize,
    pub per_family: BTreeMap<String, usize>,
    pub mismatches: Vec<OracleMismatch>,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} instances, {} checks, {} mismatches\n",
            self.instances,
            self.checks,
            self.mismatches.len()
        );
        for (family, k) in &self.per_family {
            out += &format!("  {family}: {k} instances\n");
        }
        for mm in &self.mismatches {
            out += &format!(
                "  MISMATCH {} #{} {}: solver {:?}, optimum {:?} ({})\n",
                mm.family,
                mm.index,
                mm.criterion,
                mm.solver_utilities,
                mm.optimal_sorted,
                mm.reason
            );
        }
        out
    }
}

fn check_instance(
    family: Family,
    index: usize,
    inst: &Instance,
    criteria: &[Criterion],
    gain_override: Option<&(dyn GainFunction + Sync)>,
) -> Result<Vec<OracleMismatch>, OracleError> {
    let vectors = achievable_utility_vectors(inst)?;
    let mut out = Vec::new();
    for &criterion in criteria {
        let optimum = optimum_over(criterion, &vectors);
        let gain: &dyn GainFunction = match gain_override {
            Some(g) => g,
            None => &criterion,
        };
        let result = solve_with(
            inst,
            gain,
            SolveOptions {
                check_invariants: true,
            },
        );
        let (solver_utilities, reason) = match result {
            Err(e) => (Vec::new(), Some(e.to_string())),
            Ok(sol) if !sol.allocation.is_complete() => (
                utility_vector(inst, &sol.allocation),
                Some("incomplete allocation".into()),
            ),
            Ok(sol) => {
                let u = utility_vector(inst, &sol.allocation);
                let bad = !optimum.contains(&u);
                (u, bad.then(|| "not optimal".to_string()))
            }
        };
        if let Some(reason) = reason {
            out.push(OracleMismatch {
                family,
                index,
                criterion: criterion.to_string(),
                instance: InstanceFile::from_instance(inst),
                solver_utilities,
                optimal_sorted: optimum.best_sorted.clone(),
                reason,
            });
        }
    }
    Ok(out)
}

/// Solver against exhaustive search on random instances. Pass
/// `gain_override` to drive the solver with a different gain function while
/// still judging against each criterion's true optimum.
pub fn oracle_check(
    cfg: &OracleCheckConfig,
    gain_override: Option<&(dyn GainFunction + Sync)>,
) -> Result<OracleSummary, CliError> {
    if cfg.max_n == 0 || cfg.cs.iter().any(|&c| c < 2) {
        return Err(CliError::Usage("need --max-n >= 1 and every c >= 2".into()));
    }
    for c in &cfg.criteria {
        c.validate()?;
    }
    // draw every instance up front so the result is independent of --jobs
    let mut jobs = Vec::new();
    for (fi, &family) in cfg.families.iter().enumerate() {
        let mut rng = rng_for(cfg.seed.wrapping_add((fi as u64) << 32));
        for index in 0..cfg.count {
            let n = rng.gen_range(1..=cfg.max_n);
            let m = rng.gen_range(1..=cfg.max_m.max(1));
            let c = cfg.cs[rng.gen_range(0..cfg.cs.len())];
            let inst =
                random_instance(family, n, m, c, &mut rng).map_err(|e| CliError::Format {
                    path: PathBuf::from("<generated>"),
                    source: e.into(),
                })?;
            jobs.push((family, index, inst));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let results: Vec<Result<Vec<OracleMismatch>, OracleError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(family, index, inst)| {
                check_instance(*family, *index, inst, &cfg.criteria, gain_override)
            })
            .collect()
    });

    let mut summary = OracleSummary {
        instances: jobs.len(),
        checks: jobs.len() * cfg.criteria.len(),
        ..Default::default()
    };
    for (family, _, _) in &jobs {
        *summary.per_family.entry(family.to_string()).or_default() += 1;
    }
    for r in results {
        summary.mismatches.extend(r?);
    }
    if let Some(dir) = &cfg.report_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for mm in &summary.mismatches {
            let name = format!(
                "{}-{}-{}.json",
                mm.family,
                mm.index,
                mm.criterion.replace(':', "_")
            );
            write(
                &dir.join(name),
                &serde_json::to_string_pretty(mm).expect("mismatch serializes"),
            )?;
        }
    }
    Ok(summary)
}
