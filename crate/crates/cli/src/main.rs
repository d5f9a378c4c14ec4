use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ncbe_cli::error::{CliError, Result};
use ncbe_cli::experiments;
use ncbe_cli::RunConfig;
use ncbe_core::CaseId;

#[derive(Parser)]
#[command(name = "ncbe", version, about = "Finite element solver for the nonlinear collisional breakage equation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// March one case on one mesh and write trajectory and snapshot tables.
    Run(Opts),
    /// Moment tables over several meshes.
    Moments(Opts),
    /// Error norms and observed orders over a mesh sequence.
    Convergence(Opts),
    /// Print the case registry.
    ListCases,
    /// Write the closure consistency checks.
    Discrepancies {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Opts {
    /// `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    /// Elements per axis, comma separated.
    #[arg(long, short = 'n')]
    n: Option<String>,
    /// Polynomial degrees, comma separated.
    #[arg(long, short = 'r')]
    degree: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long, visible_alias = "T")]
    t_final: Option<String>,
    /// Snapshot times, comma separated.
    #[arg(long)]
    snapshots: Option<String>,
    /// `consistent` or `hadamard`.
    #[arg(long)]
    mode: Option<String>,
    /// `bdf2` or `backward_euler`.
    #[arg(long)]
    scheme: Option<String>,
    /// `uniform`, `geometric[:ratio]` or `random`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Name of a breakage kernel variant.
    #[arg(long)]
    breakage: Option<String>,
    #[arg(long)]
    quad_points: Option<String>,
    #[arg(long)]
    newton_tol: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    dump_operators: bool,
    #[arg(long)]
    reuse_operators: bool,
    #[arg(long)]
    save_coefficients: bool,
}

impl Opts {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(CaseId::M1);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            cfg.apply_file_text(&text)?;
        }
        let pairs = [
            ("case", self.case),
            ("n", self.n),
            ("degree", self.degree),
            ("tau", self.tau),
            ("t_final", self.t_final),
            ("snapshots", self.snapshots),
            ("mode", self.mode),
            ("scheme", self.scheme),
            ("grid", self.grid),
            ("seed", self.seed),
            ("breakage", self.breakage),
            ("quad_points", self.quad_points),
            ("newton_tol", self.newton_tol),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.output.is_some() {
            cfg.output = self.output;
        }
        cfg.dump_operators |= self.dump_operators;
        cfg.reuse_operators |= self.reuse_operators;
        cfg.save_coefficients |= self.save_coefficients;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let dir = match cli.command {
        Cmd::Run(o) => experiments::cmd_run(&o.into_config()?)?,
        Cmd::Moments(o) => experiments::cmd_moments(&o.into_config()?)?,
        Cmd::Convergence(o) => experiments::cmd_convergence(&o.into_config()?)?,
        Cmd::ListCases => {
            print!("{}", experiments::list_cases());
            return Ok(());
        }
        Cmd::Discrepancies { output } => {
            let mut cfg = RunConfig::new(CaseId::M3);
            cfg.output = output;
            experiments::cmd_discrepancies(&cfg)?
        }
    };
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
