use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use foliation_verify::{emit_report, run_suite, Format, Mode, Scenario};

/// Run a seeded verification suite and report every check.
#[derive(Parser, Debug)]
#[command(name = "verify", version)]
struct Cli {
    /// jets | pfaffian | schwarzian | projective | isotropy | maurer-cartan | prolong-structure | all
    suite: Option<String>,
    #[arg(long, env = "VERIFY_SEED")]
    seed: Option<u64>,
    /// Truncation order T.
    #[arg(long)]
    order: Option<u32>,
    /// Projective dimension n.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON scenario file; flags override its fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

fn build(cli: &Cli) -> Result<Scenario, String> {
    let mut sc = match &cli.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Scenario::from_json(&text).map_err(|e| e.to_string())?
        }
        None => Scenario::default(),
    };
    if let Some(s) = &cli.suite {
        sc.suite = s.clone();
    } else if cli.scenario.is_none() {
        return Err("missing suite name".into());
    }
    match (cli.seed, &cli.scenario) {
        (Some(seed), _) => sc.seed = seed,
        (None, None) => return Err("a seed is required: pass --seed or set VERIFY_SEED".into()),
        _ => {}
    }
    if let Some(t) = cli.order {
        sc.order = t;
    }
    if let Some(n) = cli.dim {
        sc.dim = n;
    }
    if let Some(k) = cli.trials {
        sc.trials = k;
    }
    if let Some(m) = cli.mode {
        sc.mode = m;
    }
    Ok(sc)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sc = match build(&cli) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("verify: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run_suite(&sc) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("verify: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit_report(&report, cli.format, cli.out.as_deref()) {
        eprintln!("verify: {e}");
        return ExitCode::from(2);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
