use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fairswap::audit::AuditOptions;
use fairswap::cli::{self, CliError, OracleCheckConfig, SolveArgs};
use fairswap::generate::Family;
use fairswap::solver::Criterion;

#[derive(Parser)]
#[command(
    name = "fairswap",
    version,
    about = "Fair allocation under bivalued submodular valuations"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an allocation for an instance file.
    Solve {
        instance: PathBuf,
        /// mnw, leximin or pmean
        #[arg(long, default_value = "mnw")]
        criterion: String,
        /// Exponent for --criterion pmean.
        #[arg(long, allow_negative_numbers = true)]
        p: Option<f64>,
        /// Write the iteration trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the final exchange graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Fairness and welfare report for an allocation.
    Audit {
        instance: PathBuf,
        allocation: PathBuf,
        /// Compute maximin shares (n <= 4, m <= 12).
        #[arg(long)]
        mms: bool,
        /// Criterion that produced the allocation, to check its MMS guarantee.
        #[arg(long)]
        criterion: Option<String>,
        /// p-mean welfare to report; repeatable.
        #[arg(long = "p", allow_negative_numbers = true)]
        p_values: Vec<f64>,
        /// Print a table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        c: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the solver with exhaustive search on random instances.
    OracleCheck {
        /// Families to draw from; defaults to all.
        #[arg(long, value_delimiter = ',')]
        family: Vec<Family>,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long, default_value_t = 6)]
        max_m: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        c: Vec<u64>,
        /// Comma-separated, e.g. mnw,leximin,pmean:-1
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "mnw,leximin,pmean:0.5,pmean:-1,pmean:-2"
        )]
        criteria: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write one JSON file per mismatch here.
        #[arg(long)]
        report_dir: Option<PathBuf>,
    },
}

fn criterion(name: &str, p: Option<f64>) -> Result<Criterion, CliError> {
    let spec = match (name, p) {
        ("pmean", Some(p)) => format!("pmean:{p}"),
        ("pmean", None) => return Err(CliError::Usage("--criterion pmean needs --p".into())),
        (other, _) => other.to_string(),
    };
    Ok(spec.parse()?)
}

fn run(args: Args) -> Result<(String, bool), CliError> {
    match args.command {
        Command::Solve {
            instance,
            criterion: name,
            p,
            trace,
            dot,
        } => {
            let crit = criterion(&name, p)?;
            Ok((
                cli::cmd_solve(&instance, crit, &SolveArgs { trace, dot })?,
                true,
            ))
        }
        Command::Audit {
            instance,
            allocation,
            mms,
            criterion: name,
            p_values,
            table,
        } => {
            let opts = AuditOptions {
                p_values,
                mms,
                criterion_hint: name.map(|n| criterion(&n, None)).transpose()?,
            };
            Ok((cli::cmd_audit(&instance, &allocation, &opts, table)?, true))
        }
        Command::Gen {
            family,
            n,
            m,
            c,
            seed,
        } => Ok((cli::cmd_gen(family, n, m, c, seed)?, true)),
        Command::OracleCheck {
            family,
            count,
            max_n,
            max_m,
            c,
            criteria,
            seed,
            jobs,
            report_dir,
        } => {
            let cfg = OracleCheckConfig {
                families: if family.is_empty() {
                    Family::ALL.to_vec()
                } else {
                    family
                },
                count,
                max_n,
                max_m,
                cs: c,
                criteria: criteria
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_, _>>()?,
                seed,
                jobs,
                report_dir,
            };
            let summary = cli::oracle_check(&cfg, None)?;
            Ok((summary.to_text(), summary.passed()))
        }
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok((out, ok)) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
