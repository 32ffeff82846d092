use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multiplicity_audit::commands::{
    run_audit, run_compare, run_probe, run_score, write_comparison, write_probe, write_scored,
    PROBE_CSV, SCORED_CSV,
};
use multiplicity_audit::config::RunConfig;
use multiplicity_audit::AuditError;

#[derive(Parser)]
#[command(
    name = "mpaudit",
    version,
    about = "Predictive multiplicity audits for decision trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Rashomon set from a config and report conflicts on the test rows.
    Audit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `rashomon.master_seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Conflict ratios of new, possibly unlabelled, rows under a saved set.
    Score {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Rows with conflict strictly above this are flagged.
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long)]
        id_column: Option<String>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise profile distances and curves of several saved sets.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        sets: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        id_column: Option<String>,
        #[arg(long, default_value = "compare_out")]
        out: PathBuf,
    },
    /// Best cross-validated score per training sample size.
    Probe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), AuditError> {
    match cli.command {
        Command::Audit { config, out, seed } => {
            let cfg = RunConfig::load(&config)?.with_seed(seed);
            let out = out.unwrap_or_else(|| cfg.output.dir.clone());
            let outcome = run_audit(&cfg, &out)?;
            print!("{}", outcome.report.render_text());
            println!("\nartifacts written to {}", out.display());
        }
        Command::Score {
            set,
            data,
            delta,
            id_column,
            out,
        } => {
            let rows = run_score(&set, &data, delta, id_column.as_deref())?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| AuditError::Runtime(e.to_string()))?;
                    let path = dir.join(SCORED_CSV);
                    let f =
                        fs::File::create(&path).map_err(|e| AuditError::Runtime(e.to_string()))?;
                    write_scored(&rows, BufWriter::new(f))
                        .map_err(|e| AuditError::Runtime(e.to_string()))?;
                    let flagged = rows.iter().filter(|r| r.flagged).count();
                    println!(
                        "{} rows scored, {flagged} flagged; written to {}",
                        rows.len(),
                        path.display()
                    );
                }
                None => write_scored(&rows, std::io::stdout().lock())
                    .map_err(|e| AuditError::Runtime(e.to_string()))?,
            }
        }
        Command::Compare {
            sets,
            data,
            id_column,
            out,
        } => {
            let c = run_compare(&sets, &data, id_column.as_deref())?;
            write_comparison(&c, &out)?;
            print!("{}", c.note());
        }
        Command::Probe {
            config,
            sizes,
            repeats,
            seed,
            out,
        } => {
            let cfg = RunConfig::load(&config)?.with_seed(seed);
            let rows = run_probe(&cfg, &sizes, repeats)?;
            write_probe(&rows, std::io::stdout().lock())
                .map_err(|e| AuditError::Runtime(e.to_string()))?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| AuditError::Runtime(e.to_string()))?;
                let f = fs::File::create(dir.join(PROBE_CSV))
                    .map_err(|e| AuditError::Runtime(e.to_string()))?;
                write_probe(&rows, BufWriter::new(f))
                    .map_err(|e| AuditError::Runtime(e.to_string()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpaudit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
