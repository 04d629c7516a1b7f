use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pd_meshfree::runner::{self, OutputOptions, RunConfig};
use pd_meshfree::Error;

#[derive(Parser)]
#[command(name = "pd-meshfree", version, about = "Meshfree peridynamic correspondence benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the refinement ladder of a single configuration.
    Run(Common),
    /// Run the cross product given in the [sweep] table.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write per-level bond weights.
    #[arg(long)]
    dump_weights: bool,
    /// Write per-level nodal displacements and errors.
    #[arg(long)]
    dump_fields: bool,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn exit_for(e: &Error) -> ExitCode {
    ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_SOLVER })
}

fn load(common: &Common, single: bool) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    cfg.apply_env(std::env::vars())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if single {
        cfg.sweep = None;
    }
    for cell in cfg.expand_sweep()? {
        cell.validate()?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, single) = match &cli.command {
        Command::Run(c) => (c, true),
        Command::Sweep(c) => (c, false),
    };
    let cfg = match load(common, single) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let outcomes = if single {
        vec![runner::run(&cfg)]
    } else {
        match runner::sweep(&cfg) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_for(&e);
            }
        }
    };
    let opts = OutputOptions {
        dir: common.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out")),
        dump_fields: common.dump_fields,
        dump_weights: common.dump_weights,
    };
    if let Err(e) = runner::write_outputs(&outcomes, &opts) {
        eprintln!("error: {e}");
        return exit_for(&e);
    }
    for row in runner::report(&outcomes).rows {
        let num = |v: Option<f64>| v.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
        println!(
            "{} {} n={} L{} h={:.4e} rms={} rate={} {}",
            row.case,
            row.formulation,
            row.order,
            row.level,
            row.h,
            num(row.rms),
            row.rate.map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into()),
            row.status
        );
    }
    // A single run reports its own failure; a sweep records failures per row.
    if single {
        if let Some(e) = &outcomes[0].error {
            eprintln!("error: {e}");
            return exit_for(e);
        }
    }
    ExitCode::SUCCESS
}
