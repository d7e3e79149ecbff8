mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use riemopt::exec::Execution;
use riemopt::prelude::*;
use riemopt::rioda::problems::{QuadraticSaddle, ZeroSaddle};
use riemopt::rioda::{
    duality_gap, iterate_radius_audit, rioda_run, GapOptions, InnerSolve, MinMaxConfig,
    OutputSelection, SaddleOracle,
};
use riemopt::rng::stream;
use riemopt::subsolvers::StepSize;

use common::*;

fn random_quadratic(seed: u64, mu: f64) -> QuadraticSaddle {
    let mut rng = stream(seed, "rioda/quadratic");
    let mut draw = |n: usize| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let coupling = DMatrix::from_column_slice(3, 2, draw(6).as_slice());
    let (a, b) = (draw(3), draw(2));
    QuadraticSaddle::new(mu, mu, coupling, a, b).unwrap()
}

/// `max_y f(x, .) - min_x f(., y)` in closed form.
fn closed_form_gap(q: &QuadraticSaddle, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let (mx, my, b) = (q.mu_x, q.mu_y, &q.coupling);
    let upper = 0.5 * mx * (x - &q.a).norm_squared()
        + x.dot(&(b * &q.b))
        + (b.transpose() * x).norm_squared() / (2.0 * my);
    let lower = q.a.dot(&(b * y))
        - (b * y).norm_squared() / (2.0 * mx)
        - 0.5 * my * (y - &q.b).norm_squared();
    upper - lower
}

fn random_pair(seed: u64, scale: f64) -> (Point, Point) {
    let mut rng = stream(seed, "rioda/start");
    let x = DVector::from_fn(3, |_, _| rng.random_range(-scale..scale));
    let y = DVector::from_fn(2, |_, _| rng.random_range(-scale..scale));
    (Point::new(x), Point::new(y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gap_matches_the_closed_form(seed in any::<u64>(), mu in 0.2f64..2.0) {
        let q = random_quadratic(seed, mu);
        let (x, y) = random_pair(seed, 2.0);
        let r = duality_gap(&q, &ConstraintSet::Whole, &ConstraintSet::Whole, &x, &y, &GapOptions::default())
            .unwrap();
        let exact = closed_form_gap(&q, x.coords(), y.coords());
        prop_assert!((r.gap - exact).abs() <= 1e-6 * (1.0 + exact), "{} vs {}", r.gap, exact);
        prop_assert!(r.gap <= exact + 1e-9 && exact <= r.upper() + 1e-9);
    }

    #[test]
    fn euclidean_average_is_the_arithmetic_mean(seed in any::<u64>(), rounds in 1usize..30) {
        let o = euclidean_bilinear();
        let mut cfg = MinMaxConfig::new(&o, rounds).unwrap();
        cfg.gap_cadence = None;
        cfg.inner = InnerSolve::Fixed { steps: 2, step: StepSize::Fixed(0.1) };
        let mut rng = stream(seed, "rioda/average");
        let x1 = Point::new(DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)));
        let y1 = Point::new(DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)));
        let run = rioda_run(&o, &cfg, &x1, &y1).unwrap();
        let n = run.trace.played.len() as f64;
        let mx = run.trace.played.iter().fold(DVector::zeros(2), |s, p| s + p.0.coords()) / n;
        let my = run.trace.played.iter().fold(DVector::zeros(2), |s, p| s + p.1.coords()) / n;
        prop_assert_eq!(run.average.count, rounds);
        prop_assert!((run.average.xbar.coords() - mx).amax() <= 1e-12);
        prop_assert!((run.average.ybar.coords() - my).amax() <= 1e-12);
        prop_assert_eq!(&run.x, &run.average.xbar);
    }

    /// `f(xbar, y) - f(x, ybar) <= (1/T) sum_t [f(x~_t, y) - f(x, y~_t)]`.
    #[test]
    fn averaged_gap_is_below_the_mean_gap(seed in any::<u64>(), hyperbolic in any::<bool>()) {
        let (o, xs, ys): (Box<dyn SaddleOracle>, _, _) = if hyperbolic {
            let (o, xs, ys) = busemann_on_balls(0.0, 0.0);
            (Box::new(o), xs, ys)
        } else {
            let ball = ConstraintSet::ball(origin(2), 1.0).unwrap();
            (Box::new(euclidean_bilinear()), ball.clone(), ball)
        };
        let o = o.as_ref();
        let mut cfg = MinMaxConfig::new(o, 15).unwrap().with_sets(xs.clone(), ys.clone());
        cfg.gap_cadence = None;
        cfg.inner = InnerSolve::Fixed { steps: 3, step: StepSize::Fixed(0.05) };
        let mut rng = stream(seed, "rioda/jensen");
        let (mx, my) = (o.x_manifold().clone(), o.y_manifold().clone());
        let (bx, by) = (xs.as_ball().unwrap().clone(), ys.as_ball().unwrap().clone());
        let (cx, cy, rx, ry) = (bx.center, by.center, bx.radius, by.radius);
        let x1 = at_distance(mx.as_ref(), &cx, 0.9 * rx, &mut rng);
        let y1 = at_distance(my.as_ref(), &cy, 0.9 * ry, &mut rng);
        let run = rioda_run(o, &cfg, &x1, &y1).unwrap();
        let t = run.trace.played.len() as f64;
        for _ in 0..10 {
            let x = at_distance(mx.as_ref(), &cx, rx * rng.random::<f64>(), &mut rng);
            let y = at_distance(my.as_ref(), &cy, ry * rng.random::<f64>(), &mut rng);
            let lhs = o.value(&run.average.xbar, &y) - o.value(&x, &run.average.ybar);
            let rhs = run.trace.played.iter().map(|(px, py)| o.value(px, &y) - o.value(&x, py)).sum::<f64>() / t;
            prop_assert!(lhs <= rhs + 1e-10, "{} > {}", lhs, rhs);
        }
    }

    #[test]
    fn constrained_iterates_stay_feasible(seed in any::<u64>(), mu_x in 0.0f64..0.5, mu_y in 0.0f64..0.5) {
        let (o, xs, ys) = busemann_on_balls(mu_x, mu_y);
        let mut cfg = MinMaxConfig::new(&o, 12).unwrap().with_sets(xs.clone(), ys.clone());
        cfg.gap_cadence = None;
        let mut rng = stream(seed, "rioda/feasible");
        let x1 = at_distance(o.x_manifold().as_ref(), &o.apex(), rng.random::<f64>(), &mut rng);
        let y1 = at_distance(o.y_manifold().as_ref(), &ys.as_ball().unwrap().center, BUSEMANN_Y_RADIUS * rng.random::<f64>(), &mut rng);
        let run = rioda_run(&o, &cfg, &x1, &y1).unwrap();
        let (mx, my) = (o.x_manifold().as_ref(), o.y_manifold().as_ref());
        for (px, py) in &run.trace.played {
            prop_assert!(xs.contains(mx, px, 1e-9) && ys.contains(my, py, 1e-9));
        }
        prop_assert!(xs.contains(mx, &run.last.x, 1e-9) && ys.contains(my, &run.last.y, 1e-9));
        prop_assert!(xs.contains(mx, &run.x, 1e-9) && ys.contains(my, &run.y, 1e-9));
    }
}

#[test]
fn gap_is_nonincreasing_on_strongly_monotone_traces() {
    for seed in 0..5 {
        let q = random_quadratic(seed, 1.0);
        let (x1, y1) = random_pair(seed, 3.0);
        let mut cfg = MinMaxConfig::new(&q, 40).unwrap();
        cfg.gap_cadence = Some(1);
        cfg.radius = Some(20.0);
        let run = rioda_run(&q, &cfg, &x1, &y1).unwrap();
        let rows = &run.trace.rows;
        for w in rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let tol = a.gap_slack.unwrap() + b.gap_slack.unwrap();
            assert!(
                b.duality_gap.unwrap() <= a.duality_gap.unwrap() + tol,
                "seed {seed} round {}: {:?} after {:?}",
                b.round,
                b.duality_gap,
                a.duality_gap
            );
        }
    }
}

#[test]
fn zero_saddle_returns_the_initial_pair_and_passes_the_audit() {
    let o = ZeroSaddle::euclidean(3, 2);
    let (x1, y1) = random_pair(5, 1.0);
    let mut cfg = MinMaxConfig::new(&o, 8).unwrap();
    cfg.radius = Some(1.0);
    cfg.reference = Some((x1.clone(), y1.clone()));
    let run = rioda_run(&o, &cfg, &x1, &y1).unwrap();
    assert_eq!((run.x, run.y), (x1, y1));
    let audit = iterate_radius_audit(&run.trace.audit, 1.0);
    assert_eq!(audit.violations(), 0);
    let gaps: Vec<f64> = run
        .trace
        .rows
        .iter()
        .filter_map(|r| r.duality_gap)
        .collect();
    assert_eq!(gaps.len(), 1);
    assert!(gaps[0].abs() < 1e-12);
}

#[test]
fn sequential_and_parallel_runs_agree_exactly() {
    let q = random_quadratic(3, 0.5);
    let (x1, y1) = random_pair(3, 1.5);
    let run = |exec: Execution| {
        let mut cfg = MinMaxConfig::new(&q, 25).unwrap();
        cfg.execution = exec;
        cfg.gap.execution = exec;
        cfg.radius = Some(10.0);
        cfg.output = OutputSelection::Average;
        cfg.reference = q.saddle();
        rioda_run(&q, &cfg, &x1, &y1).unwrap()
    };
    let (a, b) = (run(Execution::Sequential), run(Execution::Parallel));
    assert_eq!(a.trace.rows, b.trace.rows);
    assert_eq!(a.trace.played, b.trace.played);
    assert_eq!((a.x, a.y), (b.x, b.y));
}

#[test]
fn strongly_monotone_run_returns_the_last_played_pair() {
    let q = random_quadratic(8, 1.0);
    let (x1, y1) = random_pair(8, 1.0);
    let mut cfg = MinMaxConfig::new(&q, 5).unwrap();
    cfg.radius = Some(10.0);
    let run = rioda_run(&q, &cfg, &x1, &y1).unwrap();
    assert_eq!(run.x, run.last.x_played);
    assert_eq!(run.y, run.last.y_played);
    assert!((cfg.eta * q.smoothness() - 0.25).abs() < 1e-15);
}
