//! One function per subcommand. Each writes its trace and plot under `out`
//! and returns the summary line.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rand::Rng;
use riemopt::karcher::{
    best_grid_point, generate_instance, grid_search, run_experiment, ExperimentConfig, ETA_GRID,
    LAMBDA_GRID, PLOT_FILE, TRACE_FILE,
};
use riemopt::prelude::*;
use riemopt::riod::streams::{drifting_targets, TargetStream};
use riemopt::riod::{
    best_fixed_comparator, online_trace, regret, regret_bound, riod_run, Comparators, HintPolicy,
    RiodConfig,
};
use riemopt::rioda::problems::{BusemannSaddle, QuadraticSaddle};
use riemopt::rioda::{rioda_run_observed, InnerSolve, MinMaxConfig, MinMaxRow, SaddleOracle};
use riemopt::rng::stream;
use riemopt::subsolvers::StepSize;
use riemopt::suite::{default_manifolds, run_suite, DEFAULT_TOLERANCE};
use riemopt::trace::{log_plot_svg, write_csv, Series, TraceWriter};

use crate::config::{CommandKind, RunConfig};

pub const DEFAULT_OUT: &str = "out";

fn outdir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        bail!("{name} is not finite ({v})")
    }
}

pub fn run(cfg: &RunConfig) -> Result<String> {
    match cfg
        .command
        .ok_or_else(|| anyhow!("missing required field `command`"))?
    {
        CommandKind::Karcher => karcher(cfg),
        CommandKind::Online => online(cfg),
        CommandKind::Minmax => minmax(cfg),
        CommandKind::Geomtest => geomtest(cfg),
    }
}

fn karcher(cfg: &RunConfig) -> Result<String> {
    if cfg.subsolver != ProxMethod::Prgd {
        bail!("karcher runs fixed projected gradient steps; `subsolver` must be prgd");
    }
    if cfg.epsilon.is_some() {
        bail!("karcher runs a fixed number of rounds; `epsilon` applies to minmax only");
    }
    let spec = cfg.manifold()?;
    let inst = generate_instance(spec, cfg.anchors(), cfg.rbar, cfg.seed)?;
    let defaults = ExperimentConfig::default();
    let mut exp = ExperimentConfig {
        iterations: cfg.iters.unwrap_or(defaults.iterations),
        inner_steps: cfg.inner_steps.unwrap_or(defaults.inner_steps),
        lambda: cfg.lambda,
        eta: cfg.eta.unwrap_or(defaults.eta),
        gap_cadence: cfg.gap_cadence,
        ..defaults
    };
    if cfg.grid {
        let points = grid_search(&inst, &exp, &LAMBDA_GRID, &ETA_GRID);
        let best = best_grid_point(&points).ok_or_else(|| anyhow!("every grid point failed"))?;
        exp.lambda = best.lambda;
        exp.eta = best.eta;
    }
    let dir = outdir(cfg)?;
    let r = run_experiment(&inst, &exp, Some(&dir))?;
    let (_, gap, slack) = *r
        .gaps
        .last()
        .ok_or_else(|| anyhow!("no duality gap was measured"))?;
    finite("final duality gap", gap)?;
    Ok(format!(
        "karcher {spec} n={} iters={} seed={} lambda={} eta={}: final_gap={gap:.6e} gap_slack={slack:.3e} gradient_calls={} wall_time_ms={:.1} trace={}",
        inst.n(),
        exp.iterations,
        cfg.seed,
        exp.lambda,
        exp.eta,
        r.gradient_calls,
        r.wall_time_ms,
        dir.join(TRACE_FILE).display()
    ))
}

fn online(cfg: &RunConfig) -> Result<String> {
    if cfg.epsilon.is_some() || cfg.inner_steps.is_some() {
        bail!("`epsilon` and `inner_steps` do not apply to online runs");
    }
    let spec = cfg.manifold()?;
    let m = spec.build();
    let horizon = cfg.iters.unwrap_or(200);
    let mut rng = stream(cfg.seed, "cli/online");
    let center = m.random_point(&mut rng);
    let targets = drifting_targets(m.as_ref(), &center, 1.0, horizon, cfg.drift, &mut rng)?;
    let losses = TargetStream::new(m.clone(), targets, 1.0, 2.0)?;
    let set = ConstraintSet::ball(center.clone(), 1.0)?;
    let mut rc = RiodConfig::new(
        cfg.eta.unwrap_or(0.5),
        set.clone(),
        m.curvature().kmin(),
        losses.smoothness,
        horizon,
    );
    rc.method = cfg.subsolver;
    let start = Instant::now();
    let rec = riod_run(m.as_ref(), &losses, &HintPolicy::PreviousLoss, &rc, &center)?;
    let u = best_fixed_comparator(m.as_ref(), &losses, horizon, &set, &center)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let total = finite("regret", regret(&rec, &losses, m.as_ref(), &set, &u)?)?;
    let bound = regret_bound(&rec, &rc, m.as_ref(), Comparators::Static(&u), 0.0)?;
    let dir = outdir(cfg)?;
    let path = dir.join(TRACE_FILE);
    write_csv(&path, &online_trace(&rec, &losses, &u))?;
    let calls: usize = rec.oracle_calls.iter().sum();
    Ok(format!(
        "online {spec} T={horizon} seed={} eta={}: regret={total:.6e} bound={:.6e} gradient_calls={calls} wall_time_ms={wall:.1} trace={}",
        cfg.seed,
        rc.eta,
        bound.value(),
        path.display()
    ))
}

/// Test saddle with a known solution, its feasible sets and a start.
struct MinMaxProblem {
    oracle: Box<dyn SaddleOracle>,
    sets: Option<(ConstraintSet, ConstraintSet)>,
    start: (Point, Point),
    saddle: (Point, Point),
}

fn minmax_problem(cfg: &RunConfig) -> Result<MinMaxProblem> {
    let spec = cfg.manifold()?;
    let mut rng = stream(cfg.seed, "cli/minmax");
    match spec {
        ManifoldSpec::Euclidean(d) => {
            let mut draw = |r: usize, c: usize| {
                nalgebra::DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
            };
            let coupling = draw(d, d);
            let a = draw(d, 1).column(0).into_owned();
            let b = draw(d, 1).column(0).into_owned();
            let start = (
                Point::new(draw(d, 1).column(0).into_owned()),
                Point::new(draw(d, 1).column(0).into_owned()),
            );
            let q = QuadraticSaddle::new(cfg.mu, cfg.mu, coupling, a, b)?;
            let saddle = q
                .saddle()
                .ok_or_else(|| anyhow!("the drawn coupling is singular; try another seed"))?;
            Ok(MinMaxProblem {
                oracle: Box::new(q),
                sets: None,
                start,
                saddle,
            })
        }
        ManifoldSpec::Hyperbolic(d) => {
            let (level, y_radius) = (0.5, 0.25);
            let s = BusemannSaddle::new(d, cfg.mu, cfg.mu, level, 1.0, y_radius)?;
            let x_set = ConstraintSet::ball(s.apex(), 1.0)?;
            let y_center = Point::new(nalgebra::DVector::from_element(3, level));
            let y_set = ConstraintSet::ball(y_center.clone(), y_radius)?;
            let mx = s.x_manifold().clone();
            let my = s.y_manifold().clone();
            let vx = mx.random_unit_tangent(&s.apex(), &mut rng).scale(0.6);
            let vy = my
                .random_unit_tangent(&y_center, &mut rng)
                .scale(0.5 * y_radius);
            let start = (mx.exp(&s.apex(), &vx)?, my.exp(&y_center, &vy)?);
            let saddle = s.saddle_near(&start.1);
            Ok(MinMaxProblem {
                oracle: Box::new(s),
                sets: Some((x_set, y_set)),
                start,
                saddle,
            })
        }
        ManifoldSpec::Spd(_) => {
            bail!("minmax test saddles exist on euclidean and hyperbolic manifolds; use karcher for spd")
        }
    }
}

fn minmax(cfg: &RunConfig) -> Result<String> {
    let spec = cfg.manifold()?;
    let p = minmax_problem(cfg)?;
    let o = p.oracle.as_ref();
    let (x1, y1) = &p.start;
    let radius = o.x_manifold().dist(x1, &p.saddle.0) + o.y_manifold().dist(y1, &p.saddle.1);
    let mut mm = MinMaxConfig::new(o, cfg.iters.unwrap_or(200))?;
    if let Some((xs, ys)) = p.sets.clone() {
        mm = mm.with_sets(xs, ys);
    }
    mm.radius = Some(radius.max(f64::MIN_POSITIVE));
    if let Some(eps) = cfg.epsilon {
        if cfg.iters.is_some() {
            bail!("set either `iters` or `epsilon`, not both");
        }
        mm = mm.targeted(o, eps, radius.max(f64::MIN_POSITIVE))?;
    }
    mm.inner = match cfg.inner_steps {
        Some(steps) => InnerSolve::Fixed {
            steps,
            step: StepSize::Fixed(cfg.lambda),
        },
        None => InnerSolve::Certified {
            method: cfg.subsolver,
            adaptive: true,
        },
    };
    if let Some(eta) = cfg.eta {
        if cfg.inner_steps.is_none() {
            bail!("the certified schedule fixes eta = 1/(4L); `eta` needs `inner_steps`");
        }
        mm.eta = eta;
    }
    mm.gap_cadence = Some(cfg.gap_cadence);
    mm.reference = Some(p.saddle.clone());

    let dir = outdir(cfg)?;
    let path = dir.join(TRACE_FILE);
    let mut writer = TraceWriter::create::<MinMaxRow>(&path)?;
    let start = Instant::now();
    let run = rioda_run_observed(o, &mm, x1, y1, |row| writer.write(row))?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let gaps: Vec<(f64, f64)> = run
        .trace
        .rows
        .iter()
        .filter_map(|r| Some((r.round as f64, r.duality_gap?)))
        .collect();
    plot(&dir, &format!("RIODA on {spec}"), gaps.clone())?;
    let gap = finite("final duality gap", gaps.last().map_or(f64::NAN, |g| g.1))?;
    let last = run.trace.rows.last().expect("at least one round");
    Ok(format!(
        "minmax {spec} mu={} rounds={} seed={}: final_gap={gap:.6e} gap_slack={:.3e} dist_to_saddle={:.3e} gradient_calls={} wall_time_ms={wall:.1} trace={}",
        cfg.mu,
        mm.rounds,
        cfg.seed,
        last.gap_slack.unwrap_or(f64::NAN),
        last.dist_to_saddle.unwrap_or(f64::NAN),
        run.trace.gradient_calls,
        path.display()
    ))
}

fn plot(dir: &Path, title: &str, points: Vec<(f64, f64)>) -> Result<()> {
    let svg = log_plot_svg(
        title,
        "iteration",
        "duality gap",
        &[Series {
            label: "duality gap".into(),
            points,
        }],
    );
    let path = dir.join(PLOT_FILE);
    fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))
}

fn geomtest(cfg: &RunConfig) -> Result<String> {
    let manifolds: Vec<Arc<dyn Manifold>> = match cfg.manifold {
        Some(spec) => vec![spec.build()],
        None => default_manifolds(),
    };
    let mut failed = 0;
    let mut checks = 0;
    for m in &manifolds {
        let report = run_suite(
            m.as_ref(),
            cfg.samples,
            cfg.seed,
            DEFAULT_TOLERANCE,
            Execution::default(),
        )?;
        print!("{report}");
        checks += report.checks.len();
        failed += report.checks.iter().filter(|c| !c.ok()).count();
    }
    let line = format!(
        "geomtest samples={} seed={}: {}/{checks} checks passed",
        cfg.samples,
        cfg.seed,
        checks - failed
    );
    if failed > 0 {
        bail!("{line}");
    }
    Ok(line)
}
