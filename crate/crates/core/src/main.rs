use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nearwall::cli::{self, ReportDocument};
use nearwall::config::RunConfig;
use nearwall::{Error, Result};

/// Near-wall momentum-balance diagnostics.
#[derive(Parser)]
#[command(name = "nearwall", version)]
struct Args {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Surface quadrature order override.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite on the configured field.
    Verify,
    /// Run the configured parameter sweeps.
    Sweep,
    /// Evaluate one pairing and print it as JSON.
    Pair { id: String },
    /// Print an example configuration covering every block.
    Schema,
}

fn load(args: &Args) -> Result<(RunConfig, PathBuf)> {
    let path = args.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(q) = args.quad_order {
        cfg.quadrature.surface = q;
    }
    cfg.validate()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn summarize(doc: &ReportDocument) {
    for v in &doc.verdicts {
        let value = v.value.map_or(String::new(), |x| format!(" ({x:e})"));
        eprintln!("{} {}{} {}", if v.pass { "PASS" } else { "FAIL" }, v.name, value, v.detail);
    }
    eprintln!(
        "{}: {}/{} verdicts passed in {:.1} s",
        doc.command,
        doc.summary.verdicts - doc.summary.failed,
        doc.summary.verdicts,
        doc.elapsed_seconds
    );
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(args: &Args) -> Result<bool> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Command::Schema = args.command {
        emit(&RunConfig::example().to_json());
        return Ok(true);
    }
    let (cfg, base) = load(args)?;
    let doc = match &args.command {
        Command::Verify => cli::verify(&cfg, &base)?,
        Command::Sweep => cli::sweep(&cfg, &base)?,
        Command::Pair { id } => {
            let doc = cli::pair(&cfg, &base, id)?;
            emit(&serde_json::to_string_pretty(&doc.pairings[0])?);
            doc
        }
        Command::Schema => unreachable!(),
    };
    // --out is relative to the working directory, output_dir to the config.
    let out = args.out.clone().unwrap_or_else(|| base.join(&cfg.output_dir));
    cli::write_report(&doc, &out)?;
    summarize(&doc);
    Ok(doc.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
