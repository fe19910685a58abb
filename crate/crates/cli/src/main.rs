use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wardrop_approx::analysis::{
    alpha_profile, bound_inputs, bound_no_utility, bound_with_utility, bound_with_utility_proof,
    truncated_profile_bound,
};
use wardrop_approx_cli::experiment::build_element;
use wardrop_approx_cli::report::format_float;
use wardrop_approx_cli::{load_config, run_experiment, write_artifacts, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "wardrop-approx", version, about = "Atomic approximations of Wardrop equilibria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the convergence experiment and write its artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Stopping tolerance of the approximations; overrides `solver.kkt_tol`.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        nu_ref: Option<usize>,
        /// Record wall-clock seconds in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Check a config and list every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the bound constants and bounds for one size.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        nu: usize,
    },
}

fn solve(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    tol: Option<f64>,
    nu_ref: Option<usize>,
    timing: bool,
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.experiment.seed = seed;
    }
    if let Some(tol) = tol {
        cfg.solver.kkt_tol = tol;
    }
    if let Some(nu_ref) = nu_ref {
        cfg.experiment.nu_ref = nu_ref;
    }
    cfg.validate()?;
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let outcome = run_experiment(&cfg, RunOptions { timing })?;
    let path = write_artifacts(&outcome, &cfg, &dir)?;
    println!("{}", path.display());
    for row in &outcome.report.rows {
        println!(
            "nu={} players={} profile_dist_sq={} bound_with_u={} agg_dist_sq={} bound_no_u={} converged={}",
            row.nu,
            row.players,
            format_float(row.profile_dist_sq),
            format_float(row.bound_with_u),
            format_float(row.agg_dist_sq),
            format_float(row.bound_no_u),
            row.converged
        );
    }
    match outcome.unconverged() {
        0 => Ok(()),
        n => Err(CliError::NotConverged(n)),
    }
}

fn bounds(config: &Path, nu: usize) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let instance = cfg.instance().map_err(CliError::Model)?;
    let element = build_element(&instance, nu, cfg.experiment.construction.into()).map_err(CliError::Model)?;
    let b = bound_inputs(&instance, &element);
    let show = |r: wardrop_approx::Result<f64>| match r {
        Ok(v) => format_float(v),
        Err(e) => format!("undefined ({e})"),
    };
    println!("nu = {nu}");
    println!("players = {}", element.num_players());
    for (name, v) in [
        ("c_min", b.c_min),
        ("C", b.lipschitz),
        ("M", b.radius),
        ("B_c", b.b_c),
        ("Gamma", b.gamma),
        ("alpha", b.alpha),
        ("mu_bar", b.mu_bar),
        ("delta_bar", b.delta_bar),
        ("d_bar", b.d_bar),
    ] {
        println!("{name} = {}", format_float(v));
    }
    println!("bound_no_u = {}", show(bound_no_utility(&b)));
    println!("bound_with_u = {}", show(bound_with_utility(&b)));
    println!("bound_with_u_proof = {}", show(bound_with_utility_proof(&b)));
    println!(
        "bound_with_u_trunc = {}",
        format_float(truncated_profile_bound(&b, &alpha_profile(&instance)))
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            config,
            out,
            seed,
            tol,
            nu_ref,
            timing,
        } => solve(&config, out, seed, tol, nu_ref, timing),
        Command::Validate { config } => load_config(&config).map(|cfg| {
            println!(
                "ok: {} links, {} segments, nu = {:?}, nu_ref = {}",
                cfg.links.len(),
                cfg.segments.len(),
                cfg.experiment.nu,
                cfg.experiment.nu_ref
            );
        }),
        Command::Bounds { config, nu } => bounds(&config, nu),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
