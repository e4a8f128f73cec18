//! `shearlab` command-line interface.
//!
//! Exit codes: 0 success, 1 failed verification, 2 configuration or argument
//! error, 3 solver failure (partial artifacts are kept).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use shearlab::bounds::{BoundInputs, DeltaRule};
use shearlab::error::ExperimentError;
use shearlab::experiment::{
    cmd_bounds_sweep, cmd_compare, cmd_mesh, cmd_run, cmd_verify, load_domain, load_seed, point_bounds, DomainConfig,
    ExperimentConfig, RunOptions, SweepSpec, DEFAULT_THRESHOLD,
};
use shearlab::mesh::MarkerTable;

#[derive(Parser)]
#[command(name = "shearlab", version, about = "Dissipation experiments for NSE and the Smagorinsky model")]
struct Cli {
    /// Single-threaded assembly and factorization for reproducible output.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured transient simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[outputs] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the self-check suite; exits 1 if any check fails.
    Verify {
        /// Only `seed` is read from the file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for `verify.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate the dissipation bounds at a point, or write sweep tables.
    Bounds(BoundsArgs),
    /// Run an NSE and a Smagorinsky configuration and compare them.
    Compare {
        #[arg(long)]
        nse: PathBuf,
        #[arg(long)]
        sm: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Largest std(ke) ratio counted as laminarized.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Generate the mesh of a configuration, or inspect a Gmsh file.
    Mesh {
        #[arg(long, conflicts_with = "msh", required_unless_present = "msh")]
        config: Option<PathBuf>,
        /// MSH 2.2 file; physical names matching marker names are mapped.
        #[arg(long)]
        msh: Option<PathBuf>,
        /// Directory for `mesh.vtk`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 4500.0)]
    re: f64,
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    #[arg(long, default_value_t = 0.17)]
    cs: f64,
    /// Filter length; defaults to `h`.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "length", default_value_t = 1.0)]
    length: f64,
    #[arg(long = "speed", default_value_t = 1.0)]
    speed: f64,
    /// Prefactor of the bounds.
    #[arg(long = "prefactor", default_value_t = 1.0)]
    c: f64,
    /// Write surface, level-set and minimizer tables to `--out`.
    #[arg(long, requires = "out")]
    sweep: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, num_args = 3, value_names = ["MIN", "MAX", "N"], default_values = ["100", "1e6", "21"])]
    re_range: Vec<String>,
    /// Range of h/L.
    #[arg(long, num_args = 3, value_names = ["MIN", "MAX", "N"], default_values = ["1e-6", "0.5", "61"])]
    h_range: Vec<String>,
    /// `equal-h`, `h-pow:<p>` or `fixed:<delta>`.
    #[arg(long, default_value = "equal-h")]
    delta_rule: String,
}

fn config_error(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

fn parse_range(v: &[String]) -> Result<(f64, f64, usize), ExperimentError> {
    let num = |s: &String| s.parse::<f64>().map_err(|_| config_error(format!("not a number: {s}")));
    let (a, b) = (num(&v[0])?, num(&v[1])?);
    let n: usize = v[2].parse().map_err(|_| config_error(format!("not a count: {}", v[2])))?;
    if !(a > 0.0 && b >= a && n >= 1) {
        return Err(config_error(format!("invalid range {a}..{b} with {n} points")));
    }
    Ok((a, b, n))
}

fn print_json(v: &impl serde::Serialize) {
    use std::io::Write;
    // A closed pipe (`| head`) is not an error worth a panic.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("output serializes"));
}

fn bounds(args: &BoundsArgs) -> Result<(), ExperimentError> {
    if args.sweep {
        let rule: DeltaRule = args.delta_rule.parse()?;
        let spec = SweepSpec::log_grid(parse_range(&args.re_range)?, parse_range(&args.h_range)?, args.cs, rule, args.c);
        let out = args.out.as_deref().expect("clap enforces --out with --sweep");
        let art = cmd_bounds_sweep(&spec, out)?;
        print_json(&art);
        return Ok(());
    }
    let inputs = BoundInputs {
        re: args.re,
        h: args.h,
        cs: args.cs,
        delta: args.delta.unwrap_or(args.h),
        length: args.length,
        u_ref: args.speed,
        c: args.c,
    };
    print_json(&point_bounds(&inputs)?);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<ExitCode, ExperimentError> {
    let opts = RunOptions { sequential: cli.sequential };
    opts.apply_global();
    match &cli.command {
        Command::Run { config, out, seed } => {
            let r = cmd_run(config, out.as_deref(), *seed, opts)?;
            print_json(&r.summary);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { config, out, seed } => {
            let seed = seed.or(config.as_deref().map(load_seed).transpose()?.flatten()).unwrap_or(0);
            let report = cmd_verify(seed)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(dir).map_err(|e| config_error(format!("{}: {e}", dir.display())))?;
                let path = dir.join("verify.json");
                let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                std::fs::write(&path, text).map_err(|e| ExperimentError::Io { path, source: e })?;
            }
            print_json(&report);
            Ok(if report.all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Bounds(args) => bounds(args).map(|_| ExitCode::SUCCESS),
        Command::Compare { nse, sm, out, threshold } => {
            let a = ExperimentConfig::load(nse)?;
            let b = ExperimentConfig::load(sm)?;
            let r = cmd_compare(&a, &b, out, *threshold, opts)?;
            print_json(&r.report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Mesh { config, msh, out } => {
            let (domain, base) = match (config, msh) {
                (Some(c), _) => (load_domain(c)?, c.parent().map(Path::to_path_buf)),
                (None, Some(m)) => {
                    let mut markers = MarkerTable::default();
                    for marker in shearlab::mesh::Marker::ALL {
                        markers.by_name.insert(marker.name().to_string(), marker);
                    }
                    (DomainConfig::Msh { path: m.clone(), markers }, None)
                }
                (None, None) => unreachable!("clap requires --config or --msh"),
            };
            let info = cmd_mesh(&domain, base.as_deref(), out.as_deref())?;
            print_json(&json!({ "mesh": info }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
