use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use transmission_cli::{run_campaign, validate, CliError, RawConfig};
use transmission_core::transmission::{sign_self_test, INTERFACE_SIGN};

#[derive(Parser)]
#[command(name = "transmission", version, about = "Interface-fitted FEM campaigns for elliptic transmission problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    config: PathBuf,
    /// Artifact directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set solver.h=0.05`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Basis order, 1 or 2.
    #[arg(long)]
    order: Option<u8>,
    /// Target mesh size of the coarsest mesh.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write a report.
    Solve(Common),
    /// Solve with both pipelines and write their difference.
    Compare(Common),
    /// Refine `levels - 1` times and tabulate errors against `[exact]`.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Mean oscillation of the gradient and the coefficient modulus.
    Probe {
        #[command(flatten)]
        common: Common,
        /// Ball center `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Mesh statistics and export.
    MeshInfo(Common),
}

fn fail(e: CliError) -> ExitCode {
    let message = e.to_string().replace('\n', " ");
    eprintln!("error category={} code={}: {message}", e.category(), e.exit_code());
    ExitCode::from(e.exit_code() as u8)
}

fn load(common: &Common, campaign: &str, extra: Vec<String>) -> Result<transmission_cli::RunConfig, CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", common.config.display())))?;
    let mut raw = RawConfig::parse(&text)?;
    let mut sets = vec![format!("run.campaign={campaign}")];
    if let Some(o) = &common.out {
        sets.push(format!("run.out={}", o.display()));
    }
    if let Some(s) = common.seed {
        sets.push(format!("run.seed={s}"));
    }
    if let Some(o) = common.order {
        sets.push(format!("solver.order={o}"));
    }
    if let Some(h) = common.h {
        sets.push(format!("solver.h={h}"));
    }
    sets.extend(extra);
    sets.extend(common.set.iter().cloned());
    for s in &sets {
        raw.set(s)?;
    }
    Ok(validate(&raw)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, campaign, extra) = match &cli.command {
        Command::Solve(c) => (c, "solve", Vec::new()),
        Command::Compare(c) => (c, "compare", Vec::new()),
        Command::MeshInfo(c) => (c, "mesh-info", Vec::new()),
        Command::Convergence { common, levels } => {
            (common, "convergence", levels.iter().map(|l| format!("solver.levels={l}")).collect())
        }
        Command::Probe { common, center, mu, levels } => {
            let mut extra = Vec::new();
            if let Some(c) = center {
                extra.push(format!("analysis.center={c}"));
            }
            if let Some(m) = mu {
                extra.push(format!("analysis.mu={m}"));
            }
            if let Some(l) = levels {
                extra.push(format!("analysis.levels={l}"));
            }
            (common, "probe", extra)
        }
    };
    let cfg = match load(common, campaign, extra) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match sign_self_test(0.2) {
        Ok(s) if s == INTERFACE_SIGN => {}
        Ok(s) => return fail(CliError::Numerical(format!("interface sign self-test found {s}, expected {INTERFACE_SIGN}"))),
        Err(e) => return fail(e.into()),
    }
    match run_campaign(&cfg) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
