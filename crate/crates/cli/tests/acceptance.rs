//! Acceptance criteria for the harness, one pass/fail line each.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wardrop_approx::aas::build_uniform_aas;
use wardrop_approx::analysis::{
    alpha_profile, bound_inputs, bound_no_utility, truncated_profile_bound,
};
use wardrop_approx::equilibrium::{
    beckmann_potential, solve_ne, wardrop_aggregate_beckmann, Init, SolverConfig, StopRule,
};
use wardrop_approx::game::{
    eval_network_cost, ne_vi_residual, player_cost_gradient, AtomicInstance, AtomicProfile, CostFunction,
    CostKind, NonatomicInstance, ParamFn, Player, Segment, SetFamily, Utility, UtilityFamily,
};
use wardrop_approx::sets::{project_box_simplex, BoxSimplex};
use wardrop_approx::vecops::{dist, dot, norm, sub};
use wardrop_approx_cli::config::{ExperimentConfig, ExperimentSection, OutputSection, SegmentConfig};
use wardrop_approx_cli::{load_config, run_experiment, write_artifacts, ExperimentOutcome, RunOptions};

type Verdict = Result<String, String>;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn two_link_config() -> ExperimentConfig {
    let mut cfg = load_config(&example("two_links.cfg")).unwrap();
    cfg.solver.kkt_tol = 1e-3;
    cfg
}

fn plain_config() -> ExperimentConfig {
    let mut cfg = load_config(&example("two_links_no_utility.cfg")).unwrap();
    cfg.solver.kkt_tol = 1e-3;
    cfg
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. The two-link experiment converges as ν grows.
fn reproduction(outcome: &ExperimentOutcome, elapsed: Duration) -> Verdict {
    let rows = &outcome.report.rows;
    let nus: Vec<usize> = rows.iter().map(|r| r.nu).collect();
    ensure(nus == [5, 20, 40, 100], || format!("sizes {nus:?}"))?;
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    ensure(rows.iter().all(|r| r.converged), || "a size did not converge".into())?;
    let d: Vec<f64> = rows.iter().map(|r| r.profile_dist_sq).collect();
    ensure(d.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {d:?}"))?;
    ensure(d[3] < 0.25 * d[0], || format!("ν=100 gives {} against {} at ν=5", d[3], d[0]))?;
    let shown: Vec<String> = d.iter().map(|v| format!("{v:.3e}")).collect();
    Ok(format!("profile_dist_sq [{}] in {:.1}s", shown.join(", "), elapsed.as_secs_f64()))
}

fn random_param(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> ParamFn {
    let base = rng.gen_range(lo..hi);
    match rng.gen_range(0..3) {
        0 => ParamFn::constant(base),
        1 => ParamFn::Linear {
            intercept: base,
            slope: rng.gen_range(0.0..(hi - base).max(1e-3)),
        },
        _ => ParamFn::Sine {
            amplitude: 0.5 * (base - lo),
            frequency: rng.gen_range(1.0..3.0),
            phase: 0.0,
            offset: base,
        },
    }
}

/// Affine costs with slopes in [0.5, 2] and quadratic preferences with
/// weights of at least 0.5, so `c_min ≥ 0.5` and `α ≥ 1`.
fn random_config(rng: &mut ChaCha8Rng, with_utility: bool) -> ExperimentConfig {
    let dim = rng.gen_range(2..=3);
    let links = (0..dim)
        .map(|_| CostKind::Affine {
            slope: rng.gen_range(0.5..2.0),
            intercept: rng.gen_range(0.0..1.0),
        })
        .collect();
    let mut edges = vec![0.0];
    if rng.gen_bool(0.5) {
        edges.push(rng.gen_range(0.3..0.7));
    }
    edges.push(1.0);
    let segments = edges
        .windows(2)
        .map(|w| {
            let demand = random_param(rng, 0.3, 1.0);
            let utility = if with_utility {
                UtilityFamily::QuadPref {
                    weight: random_param(rng, 0.5, 2.0),
                    preferred: (0..dim).map(|_| random_param(rng, 0.0, 0.6)).collect(),
                }
            } else {
                UtilityFamily::None
            };
            SegmentConfig {
                start: w[0],
                end: w[1],
                set: SetFamily::Simplex {
                    demand,
                    lower: None,
                    upper: None,
                },
                utility,
            }
        })
        .collect();
    ExperimentConfig {
        experiment: ExperimentSection {
            nu: vec![4, 10],
            nu_ref: 200,
            reference_tol: 1e-6,
            seed: 1,
            construction: Default::default(),
            radius: None,
        },
        solver: SolverConfig {
            kkt_tol: 1e-3,
            ..SolverConfig::default()
        },
        output: OutputSection::default(),
        links,
        segments,
    }
}

fn dominated(outcome: &ExperimentOutcome, label: &str, aggregate: bool) -> Result<usize, String> {
    let mut checked = 0;
    for r in outcome.report.rows.iter().filter(|r| r.converged) {
        let s = outcome.slack;
        ensure(r.profile_dist_sq <= r.bound_with_u + s, || {
            format!("{label} ν={}: profile {} > {}", r.nu, r.profile_dist_sq, r.bound_with_u)
        })?;
        ensure(r.profile_dist_sq <= r.bound_with_u_trunc + s, || {
            format!("{label} ν={}: profile {} > truncated {}", r.nu, r.profile_dist_sq, r.bound_with_u_trunc)
        })?;
        if aggregate {
            ensure(r.agg_dist_sq <= r.bound_no_u + s, || {
                format!("{label} ν={}: aggregate {} > {}", r.nu, r.agg_dist_sq, r.bound_no_u)
            })?;
            let exact = r.beckmann_agg_dist_sq.ok_or_else(|| format!("{label}: no potential column"))?;
            ensure(exact <= r.bound_no_u + s, || format!("{label} ν={}: {exact} > {}", r.nu, r.bound_no_u))?;
        }
        checked += 1;
    }
    Ok(checked)
}

// 2. Measured distances stay below their bounds.
fn dominance(two_links: &ExperimentOutcome, plain: &ExperimentOutcome) -> Verdict {
    let mut rows = dominated(two_links, "two-link", false)? + dominated(plain, "two-link without utilities", true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..20 {
        let cfg = random_config(&mut rng, true);
        let out = run_experiment(&cfg, RunOptions::default()).map_err(|e| format!("instance {k}: {e}"))?;
        ensure(out.report.rows.iter().all(|r| r.bound_with_u.is_finite()), || format!("instance {k}: α = 0"))?;
        rows += dominated(&out, &format!("instance {k}"), false)?;
        let mut plain_cfg = cfg.clone();
        for s in &mut plain_cfg.segments {
            s.utility = UtilityFamily::None;
        }
        let out = run_experiment(&plain_cfg, RunOptions::default()).map_err(|e| format!("instance {k}: {e}"))?;
        rows += dominated(&out, &format!("instance {k} without utilities"), true)?;
    }
    Ok(format!("{rows} converged rows within bound + slack"))
}

fn two_links() -> Vec<CostFunction> {
    vec![CostFunction::affine(1.0, 0.0), CostFunction::affine(2.0, 1.0)]
}

// 3. Fine-grid equilibrium and potential minimizer agree.
fn oracle_equivalence() -> Verdict {
    let cfg = plain_config();
    let inst = cfg.instance().map_err(|e| e.to_string())?;
    let element = build_uniform_aas(&inst, 1000).map_err(|e| e.to_string())?;
    let ne = solve_ne(&element.game, &cfg.solver).map_err(|e| e.to_string())?;
    ensure(ne.converged, || "ν=1000 solve did not converge".into())?;
    let exact = wardrop_aggregate_beckmann(&inst).map_err(|e| e.to_string())?;
    let bound = bound_no_utility(&bound_inputs(&inst, &element)).map_err(|e| e.to_string())?;
    let gap = dist(&ne.profile.aggregate(), &exact.aggregate);
    ensure(gap <= bound.sqrt(), || format!("‖Δ‖ = {gap} > √bound = {}", bound.sqrt()))?;

    let unit = NonatomicInstance::new(
        two_links(),
        vec![Segment {
            start: 0.0,
            end: 1.0,
            set: SetFamily::Simplex {
                demand: ParamFn::constant(1.0),
                lower: None,
                upper: None,
            },
            utility: UtilityFamily::None,
        }],
        None,
    )
    .map_err(|e| e.to_string())?;
    let x = wardrop_aggregate_beckmann(&unit).map_err(|e| e.to_string())?.aggregate;
    ensure(dist(&x, &[1.0, 0.0]) <= 1e-6, || format!("unit demand gives {x:?}"))?;
    Ok(format!("‖Δ‖ = {gap:.2e} ≤ {:.2e}; unit demand → ({:.7}, {:.7})", bound.sqrt(), x[0], x[1]))
}

// 4. The reference has one discontinuity, at the demand step.
fn discontinuity(outcome: &ExperimentOutcome) -> Verdict {
    let at: Vec<f64> = outcome.jumps.iter().map(|j| j.theta).collect();
    ensure(at.len() == 1 && at[0] > 0.68 && at[0] < 0.72, || format!("jumps at {at:?}"))?;
    Ok(format!("single jump at θ = {}", at[0]))
}

fn grid_projection(set: &BoxSimplex, p: &[f64]) -> Vec<f64> {
    let search = |centre: Option<&[f64]>, step: f64, radius: f64| -> Vec<f64> {
        let range = |t: usize| match centre {
            Some(c) => ((c[t] - radius).max(set.lower[t]), (c[t] + radius).min(set.upper[t])),
            None => (set.lower[t], set.upper[t]),
        };
        let last = set.dim() - 1;
        let mut best = (f64::INFINITY, Vec::new());
        let mut consider = |x: Vec<f64>| {
            if x[last] >= set.lower[last] - 1e-12 && x[last] <= set.upper[last] + 1e-12 {
                let d = dist(&x, p);
                if d < best.0 {
                    best = (d, x);
                }
            }
        };
        let (lo0, hi0) = range(0);
        for i in 0..=((hi0 - lo0) / step).floor() as usize {
            let x0 = lo0 + i as f64 * step;
            if set.dim() == 2 {
                consider(vec![x0, set.total - x0]);
            } else {
                let (lo1, hi1) = range(1);
                for j in 0..=((hi1 - lo1) / step).floor() as usize {
                    let x1 = lo1 + j as f64 * step;
                    consider(vec![x0, x1, set.total - x0 - x1]);
                }
            }
        }
        best.1
    };
    let coarse = search(None, 1e-2, 0.0);
    search(Some(&coarse), 1e-4, 0.03)
}

// 5. Bounded-simplex projection against a grid search.
fn projection_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let dim = 2 + case % 2;
        let total = rng.gen_range(0.3..1.5);
        let lower: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..0.2) * total).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.5..1.2) * total).collect();
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let z = project_box_simplex(&p, total, &lower, &upper).map_err(|e| e.to_string())?;
        let set = BoxSimplex::new(total, lower, upper).map_err(|e| e.to_string())?;
        let grid = grid_projection(&set, &p);
        let err = dist(&z, &grid);
        worst = worst.max(err);
        ensure(err <= 2e-4, || format!("case {case}: {z:?} vs grid {grid:?}"))?;
        let (_, lambda) = set.project_with_multiplier(&p).map_err(|e| e.to_string())?;
        for t in 0..dim {
            let clamped = (p[t] + lambda).clamp(set.lower[t], set.upper[t]);
            ensure((z[t] - clamped).abs() <= 1e-12, || format!("case {case}: not a clamped shift"))?;
        }
        ensure((z.iter().sum::<f64>() - total).abs() <= 1e-12, || format!("case {case}: total"))?;
    }
    Ok(format!("200 cases, largest deviation from grid {worst:.1e}"))
}

fn random_game(rng: &mut ChaCha8Rng, polynomial: bool) -> AtomicInstance {
    let dim = rng.gen_range(2..=3);
    let costs: Vec<CostFunction> = (0..dim)
        .map(|_| {
            if polynomial && rng.gen_bool(0.5) {
                CostFunction::polynomial(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.5..2.0), rng.gen_range(0.0..1.0)])
            } else {
                CostFunction::affine(rng.gen_range(0.5..2.0), rng.gen_range(0.0..1.0))
            }
        })
        .collect();
    let players = (0..rng.gen_range(1..=3))
        .map(|_| {
            let total = rng.gen_range(0.3..1.0);
            let set = if rng.gen_bool(0.5) {
                BoxSimplex::simplex(total, dim).unwrap()
            } else {
                let lower: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..0.2) * total / dim as f64).collect();
                let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.6..1.0) * total).collect();
                BoxSimplex::new(total, lower, upper).unwrap()
            };
            let utility = match rng.gen_range(0..3) {
                0 => Utility::None,
                1 => Utility::quad_pref(rng.gen_range(0.5..2.0), (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect()),
                _ => Utility::log_benefit(rng.gen_range(0.2..2.0)),
            };
            Player::new(rng.gen_range(0.2..1.0), set.into(), utility)
        })
        .collect();
    AtomicInstance::new(players, costs).unwrap()
}

/// `Σ_t x_t c_t(R_t + x_t) − u(x)` for opponents' load `R`.
fn own_cost(costs: &[CostFunction], others: &[f64], utility: &Utility, x: &[f64]) -> f64 {
    (0..x.len()).map(|t| x[t] * costs[t].value(others[t] + x[t])).sum::<f64>() - utility.value(x)
}

fn own_gradient(costs: &[CostFunction], others: &[f64], utility: &Utility, x: &[f64]) -> Vec<f64> {
    let du = utility.gradient(x);
    (0..x.len())
        .map(|t| {
            let load = others[t] + x[t];
            costs[t].value(load) + x[t] * costs[t].derivative(load) - du[t]
        })
        .collect()
}

/// Largest gain of a player from moving to a vertex of its set, with the
/// vertices from generic enumeration.
fn vertex_gaps(game: &AtomicInstance, profile: &AtomicProfile) -> Vec<f64> {
    let agg = profile.aggregate();
    game.players()
        .iter()
        .zip(&profile.loads)
        .map(|(p, x)| {
            let others = sub(&agg, x);
            let g = own_gradient(game.costs(), &others, &p.utility, x);
            p.set
                .to_polytope()
                .unwrap()
                .vertices()
                .unwrap()
                .iter()
                .map(|v| dot(&g, &sub(x, v)))
                .fold(0.0, f64::max)
        })
        .collect()
}

// 6. The Nash residual vanishes exactly at verified equilibria.
fn residual_soundness() -> Verdict {
    let config = SolverConfig {
        kkt_tol: 1e-12,
        stop_rule: StopRule::Absolute,
        ..SolverConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cases = 0;
    let mut smallest_perturbed = f64::INFINITY;
    while cases < 50 {
        let game = random_game(&mut rng, false);
        let ne = solve_ne(&game, &config).map_err(|e| e.to_string())?;
        ensure(ne.converged, || format!("case {cases}: not converged"))?;
        let brute = vertex_gaps(&game, &ne.profile).into_iter().fold(0.0, f64::max);
        ensure(brute <= 1e-9, || format!("case {cases}: vertex gap {brute}"))?;
        let r = ne_vi_residual(&game, &ne.profile).map_err(|e| e.to_string())?;
        ensure(r <= 1e-9, || format!("case {cases}: residual {r} at an equilibrium"))?;

        let mut perturbed = None;
        'players: for (i, p) in game.players().iter().enumerate() {
            let x = &ne.profile.loads[i];
            for v in p.set.to_polytope().unwrap().vertices().unwrap() {
                let d = sub(v, x);
                let len = norm(&d);
                if len >= 0.05 {
                    let mut loads = ne.profile.loads.clone();
                    loads[i] = x.iter().zip(&d).map(|(a, b)| a + 0.05 * b / len).collect();
                    perturbed = Some(AtomicProfile::new(loads));
                    break 'players;
                }
            }
        }
        let Some(perturbed) = perturbed else { continue };
        let r = ne_vi_residual(&game, &perturbed).map_err(|e| e.to_string())?;
        ensure(r > 1e-3, || format!("case {cases}: residual {r} after displacement"))?;
        smallest_perturbed = smallest_perturbed.min(r);
        cases += 1;
    }
    Ok(format!("50 instances; smallest residual after displacement {smallest_perturbed:.2e}"))
}

// 7. Different starting profiles reach nearby aggregates.
fn aggregate_uniqueness() -> Verdict {
    let mut worst: f64 = 0.0;
    for (cfg, label) in [(two_link_config(), "with utilities"), (plain_config(), "without utilities")] {
        let inst = cfg.instance().map_err(|e| e.to_string())?;
        let alphas = alpha_profile(&inst);
        for nu in [5, 20, 40, 100] {
            let element = build_uniform_aas(&inst, nu).map_err(|e| e.to_string())?;
            let inputs = bound_inputs(&inst, &element);
            let bound = if inst.has_utilities() {
                truncated_profile_bound(&inputs, &alphas)
            } else {
                bound_no_utility(&inputs).map_err(|e| e.to_string())?
            };
            let mut aggregates = Vec::new();
            for init in [Init::ZerosProjected, Init::UniformSplit, Init::PreferredProfile] {
                let config = SolverConfig { init, ..cfg.solver.clone() };
                let ne = solve_ne(&element.game, &config).map_err(|e| e.to_string())?;
                ensure(ne.converged, || format!("{label} ν={nu}: not converged"))?;
                aggregates.push(ne.profile.aggregate());
            }
            for a in &aggregates {
                for b in &aggregates {
                    let gap = dist(a, b);
                    worst = worst.max(gap / bound.sqrt());
                    ensure(gap <= 2.0 * bound.sqrt(), || format!("{label} ν={nu}: {gap} > 2√{bound}"))?;
                }
            }
        }
    }
    Ok(format!("largest ‖ΔX‖/√bound = {worst:.2e}"))
}

fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    let h = 1e-5 * norm(x).max(1.0);
    (0..x.len())
        .map(|t| {
            let (mut up, mut down) = (x.to_vec(), x.to_vec());
            up[t] += h;
            down[t] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn relative(analytic: &[f64], numeric: &[f64]) -> f64 {
    norm(&sub(analytic, numeric)) / norm(analytic).max(1.0)
}

// 8. Analytic gradients against central differences.
fn gradient_checks() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = [0.0f64; 3];
    for k in 0..100 {
        let game = random_game(&mut rng, true);
        let profile = AtomicProfile::new(
            game.players().iter().map(|p| p.set.sample(&mut rng).unwrap()).collect(),
        );
        let agg = profile.aggregate();
        let i = k % game.num_players();
        let p = &game.players()[i];
        let others = sub(&agg, &profile.loads[i]);
        let g = player_cost_gradient(&game, i, &profile).map_err(|e| e.to_string())?;
        let fd = central_difference(|y| own_cost(game.costs(), &others, &p.utility, y), &profile.loads[i]);
        worst[0] = worst[0].max(relative(&g, &fd));

        let inst = NonatomicInstance::new(
            game.costs().to_vec(),
            vec![Segment {
                start: 0.0,
                end: 1.0,
                set: SetFamily::Simplex {
                    demand: ParamFn::constant(2.0),
                    lower: None,
                    upper: None,
                },
                utility: UtilityFamily::None,
            }],
            None,
        )
        .map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..inst.dim()).map(|_| rng.gen_range(0.1..1.0)).collect();
        let c = eval_network_cost(inst.costs(), &x).map_err(|e| e.to_string())?;
        let fd = central_difference(|y| beckmann_potential(&inst, y), &x);
        worst[1] = worst[1].max(relative(&c, &fd));

        let y: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        for u in [
            Utility::quad_pref(rng.gen_range(0.1..3.0), y.clone()),
            Utility::LogBenefit {
                weight: rng.gen_range(0.1..3.0),
                scale: rng.gen_range(0.1..2.0),
            },
        ] {
            let fd = central_difference(|z| u.value(z), &x);
            worst[2] = worst[2].max(relative(&u.gradient(&x), &fd));
        }
    }
    ensure(worst.iter().all(|w| *w <= 1e-6), || format!("relative errors {worst:?}"))?;
    Ok(format!("relative errors player/potential/utility {:.1e}/{:.1e}/{:.1e}", worst[0], worst[1], worst[2]))
}

// 9. Identical config and seed give identical files.
fn determinism() -> Verdict {
    let cfg = two_link_config();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = run_experiment(&cfg, RunOptions::default()).map_err(|e| e.to_string())?;
        write_artifacts(&out, &cfg, d.path()).map_err(|e| e.to_string())?;
    }
    let mut files: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    for f in &files {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        ensure(a == b, || format!("{} differs", f.to_string_lossy()))?;
    }
    Ok(format!("{} artifacts byte-identical", files.len()))
}

#[test]
fn acceptance_criteria() {
    let start = Instant::now();
    let main = run_experiment(&two_link_config(), RunOptions::default()).expect("two-link experiment");
    let elapsed = start.elapsed();
    let plain = run_experiment(&plain_config(), RunOptions::default()).expect("experiment without utilities");

    let verdicts: Vec<(&str, Verdict)> = vec![
        ("reproduction", reproduction(&main, elapsed)),
        ("bound dominance", dominance(&main, &plain)),
        ("oracle equivalence", oracle_equivalence()),
        ("discontinuity localization", discontinuity(&main)),
        ("projection oracle", projection_oracle()),
        ("residual soundness", residual_soundness()),
        ("aggregate uniqueness", aggregate_uniqueness()),
        ("gradient checks", gradient_checks()),
        ("determinism", determinism()),
    ];
    let mut failed = Vec::new();
    for (k, (name, verdict)) in verdicts.iter().enumerate() {
        match verdict {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", k + 1),
            Err(detail) => {
                println!("criterion {} ({name}): FAIL: {detail}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
