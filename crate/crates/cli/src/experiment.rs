//! Convergence runs: one approximation per `ν`, each compared against a
//! fine-grid reference equilibrium.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use wardrop_approx::aas::{
    build_meshgrid_aas, build_uniform_aas, minkowski_sum_distance_check, AasElement, Construction,
};
use wardrop_approx::analysis::{
    alpha_profile, bound_inputs, bound_no_utility, bound_with_utility, bound_with_utility_proof,
    continuity_scan, dominance_slack, profile_distance, truncated_profile_bound, BoundInputs,
    ConvergenceReport, ConvergenceRow, Jump,
};
use wardrop_approx::equilibrium::{
    disaggregate, solve_ne, wardrop_aggregate_beckmann, wardrop_reference, BeckmannSolution,
    EquilibriumResult, Init, ReferenceSolution, SolverConfig,
};
use wardrop_approx::game::{NonatomicInstance, PiecewiseProfile};
use wardrop_approx::vecops::dist_sq;

use crate::config::ExperimentConfig;
use crate::report::{emit_csv, format_float};
use crate::CliError;

/// Random directions used for the aggregate-set support check.
const SUPPORT_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock seconds; otherwise the column is 0 so that reports
    /// are reproducible byte for byte.
    pub timing: bool,
}

/// Everything computed for one `ν`.
#[derive(Debug, Clone)]
pub struct NuRun {
    pub nu: usize,
    pub row: ConvergenceRow,
    pub element: Option<AasElement>,
    pub result: Option<EquilibriumResult>,
    pub profile: Option<PiecewiseProfile>,
    pub inputs: Option<BoundInputs>,
    /// Support-function estimate of the aggregate-set distance.
    pub support_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub instance: NonatomicInstance,
    pub report: ConvergenceReport,
    pub reference: ReferenceSolution,
    pub beckmann: Option<BeckmannSolution>,
    /// Discontinuities of the reference profile.
    pub jumps: Vec<Jump>,
    pub runs: Vec<NuRun>,
    /// Allowed excess of a measured distance over its bound.
    pub slack: f64,
}

impl ExperimentOutcome {
    pub fn unconverged(&self) -> usize {
        self.runs.iter().filter(|r| !r.row.converged).count()
    }
}

pub fn build_element(instance: &NonatomicInstance, nu: usize, construction: Construction) -> wardrop_approx::Result<AasElement> {
    match construction {
        Construction::Uniform => build_uniform_aas(instance, nu),
        Construction::Meshgrid => build_meshgrid_aas(instance, nu),
    }
}

/// Builds the instance, solves the reference and every requested size.
///
/// A size whose solve fails is recorded as an unconverged row and the run
/// continues; only a failed reference aborts.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentOutcome, CliError> {
    config.validate()?;
    let instance = config.instance().map_err(CliError::Model)?;
    let exp = &config.experiment;

    let mut reference_config = SolverConfig {
        kkt_tol: exp.reference_tol,
        ..config.solver.clone()
    };
    if matches!(reference_config.init, Init::Supplied { .. }) {
        reference_config.init = Init::PreferredProfile;
    }
    let reference = wardrop_reference(&instance, exp.nu_ref, &reference_config).map_err(CliError::Solver)?;
    log::info!(
        "reference ν = {}: {} sweeps, Wardrop residual {:e}",
        exp.nu_ref,
        reference.result.sweeps,
        reference.we_residual
    );

    let reference_inputs = bound_inputs(&instance, &reference.element);
    let jumps = continuity_scan(
        &instance,
        &reference.element,
        &reference.profile,
        &reference_inputs,
        exp.reference_tol,
    )
    .map_err(CliError::Solver)?;

    let beckmann = if instance.has_utilities() {
        None
    } else {
        match wardrop_aggregate_beckmann(&instance) {
            Ok(b) => Some(b),
            Err(e) => {
                log::warn!("potential minimizer unavailable: {e}");
                None
            }
        }
    };

    let alphas = alpha_profile(&instance);
    let mut nus = exp.nu.clone();
    nus.sort_unstable();
    nus.dedup();
    let ctx = Context {
        instance: &instance,
        config,
        reference: &reference,
        beckmann: beckmann.as_ref(),
        alphas: &alphas,
        options,
    };
    let runs: Vec<NuRun> = nus.par_iter().map(|&nu| ctx.run(nu)).collect();
    let report = ConvergenceReport {
        rows: runs.iter().map(|r| r.row.clone()).collect(),
    };
    Ok(ExperimentOutcome {
        slack: dominance_slack(config.solver.kkt_tol, instance.radius()),
        instance,
        report,
        reference,
        beckmann,
        jumps,
        runs,
    })
}

struct Context<'a> {
    instance: &'a NonatomicInstance,
    config: &'a ExperimentConfig,
    reference: &'a ReferenceSolution,
    beckmann: Option<&'a BeckmannSolution>,
    alphas: &'a [(f64, f64)],
    options: RunOptions,
}

impl Context<'_> {
    fn run(&self, nu: usize) -> NuRun {
        let start = Instant::now();
        match self.try_run(nu, start) {
            Ok(run) => run,
            Err(e) => {
                log::error!("ν = {nu}: {e}");
                let nan = f64::NAN;
                NuRun {
                    nu,
                    row: ConvergenceRow {
                        nu,
                        players: 0,
                        mu_bar: nan,
                        delta_bar: nan,
                        d_bar: nan,
                        agg_dist_sq: nan,
                        profile_dist_sq: nan,
                        bound_no_u: nan,
                        bound_with_u: nan,
                        residual: nan,
                        sweeps: 0,
                        seconds: self.seconds(start),
                        bound_with_u_proof: nan,
                        bound_with_u_trunc: nan,
                        converged: false,
                        beckmann_agg_dist_sq: None,
                    },
                    element: None,
                    result: None,
                    profile: None,
                    inputs: None,
                    support_gap: None,
                    error: Some(e.to_string()),
                }
            }
        }
    }

    fn seconds(&self, start: Instant) -> f64 {
        if self.options.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }

    fn try_run(&self, nu: usize, start: Instant) -> wardrop_approx::Result<NuRun> {
        let instance = self.instance;
        let element = build_element(instance, nu, self.config.experiment.construction.into())?;
        let result = solve_ne(&element.game, &self.config.solver)?;
        let profile = disaggregate(&result, &element)?;
        let seconds = self.seconds(start);
        if !result.converged {
            log::warn!("ν = {nu}: not converged after {} sweeps", result.sweeps);
        }

        let aggregate = result.profile.aggregate();
        let agg_dist_sq = dist_sq(&aggregate, &self.reference.profile.aggregate());
        let profile_dist_sq = profile_distance(&profile, &self.reference.profile)?;
        let inputs = bound_inputs(instance, &element);
        let infinite = |r: wardrop_approx::Result<f64>| r.unwrap_or(f64::INFINITY);
        let seed = self.config.experiment.seed.wrapping_add(nu as u64);
        let support_gap = match minkowski_sum_distance_check(instance, &element, seed, SUPPORT_DIRECTIONS) {
            Ok(g) => Some(g),
            Err(e) => {
                log::warn!("ν = {nu}: {e}");
                None
            }
        };
        let row = ConvergenceRow {
            nu,
            players: element.num_players(),
            mu_bar: element.metrics.mu_bar,
            delta_bar: element.metrics.delta_bar,
            d_bar: element.metrics.d_bar,
            agg_dist_sq,
            profile_dist_sq,
            bound_no_u: infinite(bound_no_utility(&inputs)),
            bound_with_u: infinite(bound_with_utility(&inputs)),
            residual: result.residual,
            sweeps: result.sweeps,
            seconds,
            bound_with_u_proof: infinite(bound_with_utility_proof(&inputs)),
            bound_with_u_trunc: truncated_profile_bound(&inputs, self.alphas),
            converged: result.converged,
            beckmann_agg_dist_sq: self.beckmann.map(|b| dist_sq(&aggregate, &b.aggregate)),
        };
        log::info!(
            "ν = {nu}: {} players, {} sweeps, profile distance {:e}",
            row.players,
            row.sweeps,
            row.profile_dist_sq
        );
        Ok(NuRun {
            nu,
            row,
            element: Some(element),
            result: Some(result),
            profile: Some(profile),
            inputs: Some(inputs),
            support_gap,
            error: None,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_profile(profile: &PiecewiseProfile, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    let mut header = vec!["theta_lo".to_string(), "theta_hi".to_string()];
    header.extend((1..=profile.dim()).map(|t| format!("x_{t}")));
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for cell in profile.cells() {
        let mut fields = vec![format_float(cell.lo), format_float(cell.hi)];
        fields.extend(cell.x.iter().map(|v| format_float(*v)));
        writeln!(w, "{}", fields.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes `report.csv`, `profile_nu<ν>.csv`, `reference_profile.csv`,
/// `plot.csv`, `checks.csv` and `jumps.csv` into `dir`. Returns the report path.
pub fn write_artifacts(outcome: &ExperimentOutcome, config: &ExperimentConfig, dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let report_path = dir.join("report.csv");
    emit_csv(&outcome.report, &report_path)?;

    for run in &outcome.runs {
        if let Some(profile) = &run.profile {
            write_profile(profile, &dir.join(format!("profile_nu{}.csv", run.nu)))?;
        }
    }
    write_profile(&outcome.reference.profile, &dir.join("reference_profile.csv"))?;

    let link = config.plot_link() - 1;
    let path = dir.join("plot.csv");
    let mut w = create(&path)?;
    let io = |e| CliError::io(&path, e);
    let mut header = vec!["theta".to_string()];
    let series: Vec<&NuRun> = outcome.runs.iter().filter(|r| r.profile.is_some()).collect();
    header.extend(series.iter().map(|r| format!("nu_{}", r.nu)));
    header.push("reference".into());
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for theta in outcome.reference.profile.midpoints() {
        let mut fields = vec![format_float(theta)];
        for run in &series {
            let p = run.profile.as_ref().expect("filtered");
            fields.push(format_float(p.value_at(theta)[link]));
        }
        fields.push(format_float(outcome.reference.profile.value_at(theta)[link]));
        writeln!(w, "{}", fields.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let path = dir.join("checks.csv");
    let mut w = create(&path)?;
    let io = |e| CliError::io(&path, e);
    writeln!(w, "nu,support_gap,delta_bar,grid_points").map_err(io)?;
    for run in &outcome.runs {
        let gap = run.support_gap.map(format_float).unwrap_or_default();
        let grid = run.element.as_ref().map(|e| e.metrics.grid_points.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", run.nu, gap, format_float(run.row.delta_bar), grid).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let path = dir.join("jumps.csv");
    let mut w = create(&path)?;
    let io = |e| CliError::io(&path, e);
    writeln!(w, "theta,jump_sq,local_bound").map_err(io)?;
    for j in &outcome.jumps {
        writeln!(
            w,
            "{},{},{}",
            format_float(j.theta),
            format_float(j.jump_sq),
            format_float(j.local_bound)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(report_path)
}
