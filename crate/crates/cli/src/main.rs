use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxwell_hdg::par::configure_threads;
use maxwell_hdg_cli::commands::{
    converge_space, converge_time, describe_run, mesh_for_info, mesh_info,
};
use maxwell_hdg_cli::config::{ConfigError, MeshConfig};
use maxwell_hdg_cli::{simulate, CliError, Options, RunConfig};

#[derive(Parser)]
#[command(
    name = "maxwell-hdg",
    version,
    about = "HDG time-domain Maxwell solvers"
)]
struct Cli {
    /// Worker threads for element loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for CSV and VTK output.
    #[arg(long, global = true, default_value = "output")]
    output_dir: PathBuf,

    /// Allow runs above the element-unknown budget.
    #[arg(long, global = true)]
    override_budget: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run(ConfigArg),
    /// Spatial convergence study over mesh resolutions.
    ConvergeSpace {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated resolutions, overriding `study.resolutions`.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<usize>,
    },
    /// Temporal convergence study over `1/Δt`.
    ConvergeTime {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated values of 1/Δt, overriding `study.inverse_dt`.
        #[arg(long, value_delimiter = ',')]
        inverse_dt: Vec<f64>,
    },
    /// Run and export pointwise temporal transforms of E.
    Dft {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated frequencies in Hz, overriding `output.dft_frequencies`.
        #[arg(long, value_delimiter = ',')]
        frequencies: Vec<f64>,
    },
    /// Print mesh statistics and validation diagnostics.
    MeshInfo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["cube_hex", "cube_tet"])]
        msh: Option<PathBuf>,
        #[arg(long, conflicts_with = "cube_tet")]
        cube_hex: Option<usize>,
        #[arg(long)]
        cube_tet: Option<usize>,
    },
}

fn load(path: &Path) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn missing(key: &str) -> CliError {
    ConfigError::Invalid {
        key: key.into(),
        reason: "empty list".into(),
    }
    .into()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        configure_threads(n);
    }
    let opts = |base_dir: PathBuf| Options {
        output_dir: Some(cli.output_dir.clone()),
        override_budget: cli.override_budget,
        base_dir,
        ..Options::default()
    };
    match cli.command {
        Command::Run(c) => {
            let (cfg, base) = load(&c.config)?;
            let out = simulate(&cfg, &opts(base))?;
            print!("{}", describe_run(&cfg, &out));
        }
        Command::ConvergeSpace {
            config,
            resolutions,
        } => {
            let (cfg, base) = load(&config.config)?;
            let res = if resolutions.is_empty() {
                cfg.study.resolutions.clone()
            } else {
                resolutions
            };
            if res.is_empty() {
                return Err(missing("study.resolutions"));
            }
            let report = converge_space(&cfg, &res, &opts(base), |n, out| {
                eprintln!("n = {n}: error {:.6e}", out.error.unwrap_or(f64::NAN));
            })?;
            print!("{}", report.to_csv());
        }
        Command::ConvergeTime { config, inverse_dt } => {
            let (cfg, base) = load(&config.config)?;
            let inv = if inverse_dt.is_empty() {
                cfg.study.inverse_dt.clone()
            } else {
                inverse_dt
            };
            if inv.is_empty() {
                return Err(missing("study.inverse_dt"));
            }
            let report = converge_time(&cfg, &inv, &opts(base), |r, out| {
                eprintln!("1/dt = {r}: error {:.6e}", out.error.unwrap_or(f64::NAN));
            })?;
            print!("{}", report.to_csv());
        }
        Command::Dft {
            config,
            frequencies,
        } => {
            let (mut cfg, base) = load(&config.config)?;
            if !frequencies.is_empty() {
                cfg.output.dft_frequencies = frequencies;
                cfg.validate()?;
            }
            if cfg.output.dft_frequencies.is_empty() {
                return Err(missing("output.dft_frequencies"));
            }
            let out = simulate(&cfg, &opts(base))?;
            print!("{}", describe_run(&cfg, &out));
        }
        Command::MeshInfo {
            config,
            msh,
            cube_hex,
            cube_tet,
        } => {
            let loaded = config.as_deref().map(load).transpose()?;
            let source = match (msh, cube_hex, cube_tet) {
                (Some(path), _, _) => Some(MeshConfig::Msh { path }),
                (_, Some(n), _) => Some(MeshConfig::CubeHex { n }),
                (_, _, Some(n)) => Some(MeshConfig::CubeTet {
                    n,
                    jitter: 0.0,
                    seed: 0,
                }),
                _ => None,
            };
            let base = loaded.as_ref().map(|(_, b)| b.clone()).unwrap_or_default();
            let mesh = mesh_for_info(loaded.as_ref().map(|(c, _)| c), source, &base)?;
            print!("{}", mesh_info(&mesh)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
