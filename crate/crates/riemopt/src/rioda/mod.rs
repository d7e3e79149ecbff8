//! Inexact implicit min-max optimization.
//!
//! Each round solves four proximal subproblems of
//! `H_t(x, y) = f(x, y) + d(x, x_t)^2 / (2 eta) - d(y, y_t)^2 / (2 eta)`:
//! the played pair `(x~_t, y~_t)` from the current centers, then the next
//! centers from the opponent's played point. The two halves of each step are
//! independent and run as a [`Execution::join`].

mod gap;
mod precision;
pub mod problems;
mod saddle;

use std::cell::Cell as StdCell;
use std::time::Instant;

use crate::constraints::ConstraintSet;
use crate::error::{Block, Error, Result};
use crate::exec::Execution;
use crate::geometry::{zeta, Manifold, Point};
use crate::oracle::Objective;
use crate::subsolvers::{
    solve_prox_adaptive, solve_prox_fixed, ProbeState, ProxMethod, ProxSubproblem, StepSize,
    SubsolverReport, DEFAULT_BUDGET,
};
use crate::trace::{Cell, TraceRow};

pub use gap::{
    duality_gap, iterate_radius_audit, suboptimality_bound, AuditEntry, GapOptions, GapReport,
    RadiusAudit,
};
pub use precision::{
    eta_from_smoothness, iteration_count, precision_rioda, PrecisionInputs, ScheduleCase,
};
pub use saddle::{NegYBlock, NegYSlice, SaddleOracle, XSlice};

/// How each of the four prox subproblems is solved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerSolve {
    /// Certified to the round's precision. `adaptive` replaces the declared
    /// Lipschitz constant (constrained) or radius (unconstrained) by local
    /// quantities observed during the solve.
    Certified { method: ProxMethod, adaptive: bool },
    /// A fixed number of projected gradient steps.
    Fixed { steps: usize, step: StepSize },
}

impl Default for InnerSolve {
    fn default() -> Self {
        InnerSolve::Certified {
            method: ProxMethod::Prgd,
            adaptive: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputSelection {
    /// Last played pair when `mu > 0`, geodesic average otherwise.
    #[default]
    Auto,
    Average,
    LastPlayed,
}

#[derive(Clone, Debug)]
pub struct MinMaxConfig {
    pub x_set: ConstraintSet,
    pub y_set: ConstraintSet,
    pub eta: f64,
    pub rounds: usize,
    /// Target gap for the constrained schedules. When absent it is derived
    /// from the set diameters and `rounds`.
    pub epsilon: Option<f64>,
    /// Bound on the initial distance `d(x_1, x*) + d(y_1, y*)`.
    pub radius: Option<f64>,
    pub kmin: f64,
    pub inner: InnerSolve,
    pub output: OutputSelection,
    /// Measure the duality gap every this many rounds and at the last one.
    pub gap_cadence: Option<usize>,
    pub gap: GapOptions,
    pub execution: Execution,
    /// Known saddle, used for distance columns and the radius audit.
    pub reference: Option<(Point, Point)>,
    pub budget: usize,
    /// Off by default so traces are byte-for-byte reproducible.
    pub record_wall_time: bool,
}

impl MinMaxConfig {
    /// Unconstrained defaults: `eta = 1/(4L)`, adaptive certified PRGD.
    pub fn new(oracle: &dyn SaddleOracle, rounds: usize) -> Result<Self> {
        let kmin = oracle
            .x_manifold()
            .curvature()
            .kmin()
            .min(oracle.y_manifold().curvature().kmin());
        Ok(MinMaxConfig {
            x_set: ConstraintSet::Whole,
            y_set: ConstraintSet::Whole,
            eta: eta_from_smoothness(oracle.smoothness())?,
            rounds,
            epsilon: None,
            radius: None,
            kmin,
            inner: InnerSolve::default(),
            output: OutputSelection::Auto,
            gap_cadence: Some(10),
            gap: GapOptions::default(),
            execution: Execution::default(),
            reference: None,
            budget: DEFAULT_BUDGET,
            record_wall_time: false,
        })
    }

    pub fn with_sets(mut self, x_set: ConstraintSet, y_set: ConstraintSet) -> Self {
        self.x_set = x_set;
        self.y_set = y_set;
        self
    }

    /// Run the number of rounds that guarantees a gap of `epsilon` from
    /// initial distance `radius`.
    pub fn targeted(
        mut self,
        oracle: &dyn SaddleOracle,
        epsilon: f64,
        radius: f64,
    ) -> Result<Self> {
        let case = self.case(oracle);
        self.rounds = iteration_count(case, oracle.smoothness(), oracle.mu(), radius, epsilon)?;
        self.epsilon = Some(epsilon);
        self.radius = Some(radius);
        Ok(self)
    }

    pub fn constrained(&self) -> bool {
        !(self.x_set.is_whole() && self.y_set.is_whole())
    }

    pub fn case(&self, oracle: &dyn SaddleOracle) -> ScheduleCase {
        ScheduleCase::select(self.constrained(), oracle.mu())
    }

    /// Target accuracy used by the constrained schedules: the explicit one,
    /// else the accuracy the theorem guarantees after `rounds` rounds with
    /// `R = D_x + D_y`.
    pub fn target_epsilon(&self, oracle: &dyn SaddleOracle) -> Result<f64> {
        if let Some(e) = self.epsilon {
            return Ok(e);
        }
        let (dx, dy) = match (self.x_set.diameter(), self.y_set.diameter()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Domain(
                    "an unbounded side needs an explicit target epsilon".into(),
                ))
            }
        };
        let l = oracle.smoothness();
        let r2 = self.radius.map_or((dx + dy) * (dx + dy), |r| r * r);
        let t = self.rounds as f64;
        let mu = oracle.mu();
        Ok(if mu > 0.0 {
            4.0 * l * r2 * (-t * mu / (17.0 * l)).exp()
        } else {
            8.0 * l * r2 / t
        })
    }

    fn validate(&self, oracle: &dyn SaddleOracle) -> Result<()> {
        let l = oracle.smoothness();
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Domain(format!(
                "smoothness must be positive, got {l}"
            )));
        }
        if self.rounds == 0 {
            return Err(Error::Domain("at least one round is required".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        let native = oracle
            .x_manifold()
            .curvature()
            .kmin()
            .min(oracle.y_manifold().curvature().kmin());
        if self.kmin > native {
            return Err(Error::Domain(format!(
                "kmin = {} exceeds the manifolds' lower curvature bound {native}",
                self.kmin
            )));
        }
        if self.gap_cadence == Some(0) {
            return Err(Error::Domain("gap cadence must be at least 1".into()));
        }
        match self.inner {
            InnerSolve::Certified { method, .. } => {
                if (self.eta * l - 0.25).abs() > 1e-12 {
                    return Err(Error::Domain(format!(
                        "certified mode needs eta = 1/(4L) = {}, got {}",
                        0.25 / l,
                        self.eta
                    )));
                }
                if method == ProxMethod::Rgd && self.constrained() {
                    return Err(Error::Contract(
                        "rgd certificate is only valid without constraints".into(),
                    ));
                }
                // Surface missing schedule inputs before the first round.
                let probe = ProbeState {
                    iteration: 1,
                    loss_grad_norm: 0.0,
                    dist_to_center: 0.0,
                };
                self.schedule(oracle)?.precision(&probe)?;
            }
            InnerSolve::Fixed { steps, .. } => {
                if steps == 0 {
                    return Err(Error::Domain(
                        "fixed inner solves need at least one step".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn schedule(&self, oracle: &dyn SaddleOracle) -> Result<Schedule> {
        let case = self.case(oracle);
        let adaptive = matches!(self.inner, InnerSolve::Certified { adaptive: true, .. });
        let base = PrecisionInputs {
            t: 1,
            smoothness: oracle.smoothness(),
            mu: oracle.mu(),
            lips: if adaptive { None } else { oracle.lipschitz() },
            kmin: self.kmin,
            epsilon: if case.constrained() {
                Some(self.target_epsilon(oracle)?)
            } else {
                None
            },
            radius: self.radius,
            local_dist: None,
        };
        Ok(Schedule {
            case,
            adaptive,
            base,
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct Schedule {
    case: ScheduleCase,
    adaptive: bool,
    base: PrecisionInputs,
}

impl Schedule {
    fn at(&self, t: usize) -> Schedule {
        let mut s = *self;
        s.base.t = t;
        s
    }

    fn precision(&self, probe: &ProbeState) -> Result<f64> {
        let mut p = self.base;
        if self.adaptive {
            if self.case.constrained() {
                p.lips = Some(probe.loss_grad_norm);
            } else {
                p.local_dist = Some(probe.dist_to_center);
            }
        }
        precision_rioda(self.case, &p)
    }
}

/// Prox centers `(x_t, y_t)` and the played pair `(x~_t, y~_t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub x: Point,
    pub y: Point,
    pub x_played: Point,
    pub y_played: Point,
}

/// Running geodesic averages of the played pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragingState {
    pub xbar: Point,
    pub ybar: Point,
    pub count: usize,
}

impl AveragingState {
    pub fn new(x: Point, y: Point) -> Self {
        AveragingState {
            xbar: x,
            ybar: y,
            count: 1,
        }
    }

    /// Move each average a fraction `1/(count+1)` of the way to the new point.
    pub fn fold(
        &mut self,
        mx: &dyn Manifold,
        my: &dyn Manifold,
        new_x: &Point,
        new_y: &Point,
    ) -> Result<()> {
        let w = 1.0 / (self.count as f64 + 1.0);
        self.xbar = mx.exp(&self.xbar, &mx.log(&self.xbar, new_x).scale(w))?;
        self.ybar = my.exp(&self.ybar, &my.log(&self.ybar, new_y).scale(w))?;
        self.count += 1;
        Ok(())
    }
}

/// One row of the min-max trace.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxRow {
    pub round: usize,
    pub duality_gap: Option<f64>,
    pub gap_slack: Option<f64>,
    /// `sqrt(d(x_{t+1}, x*)^2 + d(y_{t+1}, y*)^2)` for the next centers.
    pub dist_to_saddle: Option<f64>,
    /// Smallest precision requested this round; absent for fixed solves.
    pub eps: Option<f64>,
    pub inner_iterations_x: usize,
    pub inner_iterations_y: usize,
    pub cumulative_gradient_calls: usize,
    pub wall_time_ms: Option<f64>,
}

impl TraceRow for MinMaxRow {
    fn header() -> &'static [&'static str] {
        &[
            "round",
            "duality_gap",
            "gap_certificate_slack",
            "dist_to_saddle",
            "eps_t",
            "inner_iterations_x",
            "inner_iterations_y",
            "cumulative_gradient_calls",
            "wall_time_ms",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let finite = |v: Option<f64>| Cell::opt(v.filter(|v| v.is_finite()));
        vec![
            Cell::Int(self.round as u64),
            finite(self.duality_gap),
            finite(self.gap_slack),
            finite(self.dist_to_saddle),
            Cell::opt(self.eps),
            Cell::Int(self.inner_iterations_x as u64),
            Cell::Int(self.inner_iterations_y as u64),
            Cell::Int(self.cumulative_gradient_calls as u64),
            Cell::opt(self.wall_time_ms),
        ]
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConvergenceTrace {
    pub rows: Vec<MinMaxRow>,
    /// Present when a reference saddle was configured.
    pub audit: Vec<AuditEntry>,
    pub played: Vec<(Point, Point)>,
    pub gradient_calls: usize,
}

#[derive(Clone, Debug)]
pub struct MinMaxRun {
    pub x: Point,
    pub y: Point,
    pub last: IterateState,
    pub average: AveragingState,
    pub trace: ConvergenceTrace,
}

struct SideSolve {
    point: Point,
    report: SubsolverReport,
    eps: f64,
}

struct Round<'a> {
    oracle: &'a dyn SaddleOracle,
    cfg: &'a MinMaxConfig,
    schedule: Option<Schedule>,
    t: usize,
}

impl Round<'_> {
    fn solve(
        &self,
        m: &dyn Manifold,
        loss: &dyn Objective,
        center: &Point,
        set: &ConstraintSet,
    ) -> Result<SideSolve> {
        let mut sub = ProxSubproblem::new(m, loss, center, self.cfg.eta, set);
        sub.budget = self.cfg.budget;
        match (self.cfg.inner, self.schedule) {
            (InnerSolve::Certified { method, .. }, Some(schedule)) => {
                let smallest = StdCell::new(f64::INFINITY);
                let rule = |probe: &ProbeState| {
                    let e = schedule.precision(probe).unwrap_or(f64::NAN);
                    smallest.set(smallest.get().min(e));
                    e
                };
                let (point, report) = solve_prox_adaptive(&sub, method, rule)?;
                let mut eps = smallest.get();
                if !eps.is_finite() {
                    // Zero-step exit: report the schedule at the center.
                    eps = schedule.precision(&ProbeState {
                        iteration: 0,
                        loss_grad_norm: 0.0,
                        dist_to_center: 0.0,
                    })?;
                }
                Ok(SideSolve { point, report, eps })
            }
            (InnerSolve::Fixed { steps, step }, _) => {
                let (point, report) = solve_prox_fixed(&sub, steps, step)?;
                Ok(SideSolve {
                    point,
                    report,
                    eps: f64::NAN,
                })
            }
            (InnerSolve::Certified { .. }, None) => {
                unreachable!("schedule is built for certified runs")
            }
        }
    }

    fn solve_x(&self, y: &Point, center: &Point) -> Result<SideSolve> {
        let f = XSlice {
            oracle: self.oracle,
            y,
        };
        self.solve(
            self.oracle.x_manifold().as_ref(),
            &f,
            center,
            &self.cfg.x_set,
        )
        .map_err(|e| e.in_round(self.t, Some(Block::X)))
    }

    fn solve_y(&self, x: &Point, center: &Point) -> Result<SideSolve> {
        let r = match self.block_plan()? {
            Some(step) => self.solve_y_blocks(x, center, step),
            None => {
                let f = NegYSlice {
                    oracle: self.oracle,
                    x,
                };
                self.solve(
                    self.oracle.y_manifold().as_ref(),
                    &f,
                    center,
                    &self.cfg.y_set,
                )
            }
        };
        r.map_err(|e| e.in_round(self.t, Some(Block::Y)))
    }

    /// Step length for a blockwise `y` solve, when one applies: fixed steps,
    /// a separable oracle and a bounded product set, so every block can use
    /// the joint step.
    fn block_plan(&self) -> Result<Option<f64>> {
        let InnerSolve::Fixed { step, .. } = self.cfg.inner else {
            return Ok(None);
        };
        let n = self.oracle.y_blocks();
        let Some(pm) = self.oracle.y_manifold().as_product() else {
            return Ok(None);
        };
        if n <= 1 || pm.count() != n {
            return Ok(None);
        }
        let ConstraintSet::Product(_) = &self.cfg.y_set else {
            return Ok(None);
        };
        match step {
            StepSize::Fixed(s) => Ok(Some(s)),
            StepSize::InverseSmoothness => match self.cfg.y_set.diameter() {
                Some(d) => {
                    let z = zeta(d, pm.curvature().kmin())?;
                    Ok(Some(1.0 / (self.oracle.smoothness() + z / self.cfg.eta)))
                }
                None => Ok(None),
            },
        }
    }

    fn solve_y_blocks(&self, x: &Point, center: &Point, step: f64) -> Result<SideSolve> {
        let InnerSolve::Fixed { steps, .. } = self.cfg.inner else {
            unreachable!("block solves are planned for fixed steps only")
        };
        let ConstraintSet::Product(parts) = &self.cfg.y_set else {
            unreachable!("block solves are planned for product sets only")
        };
        let pm = self
            .oracle
            .y_manifold()
            .as_product()
            .expect("planned on a product");
        let centers = pm.split_point(center);
        let results = self.cfg.execution.map_range(pm.count(), |i| {
            let f = NegYBlock {
                oracle: self.oracle,
                x,
                block: i,
            };
            let m = pm.parts()[i].as_ref();
            let mut sub = ProxSubproblem::new(m, &f, &centers[i], self.cfg.eta, &parts.parts[i]);
            sub.budget = self.cfg.budget;
            solve_prox_fixed(&sub, steps, StepSize::Fixed(step))
        });
        let mut points = Vec::with_capacity(results.len());
        let mut report = SubsolverReport::default();
        let mut sq = 0.0;
        for r in results {
            let (p, rep) = r?;
            points.push(p);
            // One joint gradient evaluation per step, whatever the block count.
            report.gradient_calls = rep.gradient_calls;
            report.iterations = rep.iterations;
            sq += rep.final_grad_norm * rep.final_grad_norm;
        }
        report.final_grad_norm = sq.sqrt();
        Ok(SideSolve {
            point: pm.join_points(&points),
            report,
            eps: f64::NAN,
        })
    }
}

fn pair_dist(
    oracle: &dyn SaddleOracle,
    x: &Point,
    y: &Point,
    reference: &(Point, Point),
) -> (f64, f64) {
    (
        oracle.x_manifold().dist(x, &reference.0),
        oracle.y_manifold().dist(y, &reference.1),
    )
}

/// Run without observing rows.
pub fn rioda_run(
    oracle: &dyn SaddleOracle,
    cfg: &MinMaxConfig,
    x1: &Point,
    y1: &Point,
) -> Result<MinMaxRun> {
    rioda_run_observed(oracle, cfg, x1, y1, |_| Ok(()))
}

/// Run `cfg.rounds` rounds from `(x1, y1)`, handing every trace row to
/// `observe` as soon as it is complete.
pub fn rioda_run_observed<F>(
    oracle: &dyn SaddleOracle,
    cfg: &MinMaxConfig,
    x1: &Point,
    y1: &Point,
    mut observe: F,
) -> Result<MinMaxRun>
where
    F: FnMut(&MinMaxRow) -> Result<()>,
{
    cfg.validate(oracle)?;
    let mx = oracle.x_manifold().as_ref();
    let my = oracle.y_manifold().as_ref();
    mx.check_point(x1)?;
    my.check_point(y1)?;
    if !cfg.x_set.contains(mx, x1, 1e-9) || !cfg.y_set.contains(my, y1, 1e-9) {
        return Err(Error::Contract(
            "initial pair lies outside the feasible sets".into(),
        ));
    }
    let schedule = match cfg.inner {
        InnerSolve::Certified { .. } => Some(cfg.schedule(oracle)?),
        InnerSolve::Fixed { .. } => None,
    };
    let output = match cfg.output {
        OutputSelection::Auto if oracle.mu() > 0.0 => OutputSelection::LastPlayed,
        OutputSelection::Auto => OutputSelection::Average,
        other => other,
    };
    let start = Instant::now();
    let mut trace = ConvergenceTrace::default();
    let (mut x, mut y) = (x1.clone(), y1.clone());
    let mut average: Option<AveragingState> = None;
    let mut last_played = (x1.clone(), y1.clone());

    for t in 1..=cfg.rounds {
        let round = Round {
            oracle,
            cfg,
            schedule: schedule.map(|s| s.at(t)),
            t,
        };
        let (xp, yp) = cfg
            .execution
            .join(|| round.solve_x(&y, &x), || round.solve_y(&x, &y));
        let (xp, yp) = (xp?, yp?);
        let (xn, yn) = cfg.execution.join(
            || round.solve_x(&yp.point, &x),
            || round.solve_y(&xp.point, &y),
        );
        let (xn, yn) = (xn?, yn?);

        match average.as_mut() {
            None => average = Some(AveragingState::new(xp.point.clone(), yp.point.clone())),
            Some(avg) => avg
                .fold(mx, my, &xp.point, &yp.point)
                .map_err(|e| e.in_round(t, None))?,
        }
        let calls = xp.report.gradient_calls
            + yp.report.gradient_calls
            + xn.report.gradient_calls
            + yn.report.gradient_calls;
        trace.gradient_calls += calls;

        let dist_to_saddle = cfg.reference.as_ref().map(|r| {
            let (a, b) = pair_dist(oracle, &x, &y, r);
            let (c, d) = pair_dist(oracle, &xp.point, &yp.point, r);
            trace.audit.push(AuditEntry {
                round: t,
                secondary: a + b,
                played: c + d,
            });
            let (e, f) = pair_dist(oracle, &xn.point, &yn.point, r);
            (e * e + f * f).sqrt()
        });

        let eps = [xp.eps, yp.eps, xn.eps, yn.eps]
            .into_iter()
            .filter(|e| e.is_finite())
            .fold(f64::INFINITY, f64::min);
        last_played = (xp.point, yp.point);
        trace.played.push(last_played.clone());
        x = xn.point;
        y = yn.point;

        let measure = match cfg.gap_cadence {
            Some(k) => t % k == 0 || t == cfg.rounds,
            None => false,
        };
        let (gap, slack) = if measure {
            let avg = average.as_ref().expect("set in round 1");
            let (gx, gy) = match output {
                OutputSelection::LastPlayed => (&last_played.0, &last_played.1),
                _ => (&avg.xbar, &avg.ybar),
            };
            let report = duality_gap(oracle, &cfg.x_set, &cfg.y_set, gx, gy, &cfg.gap)
                .map_err(|e| e.in_round(t, None))?;
            (Some(report.gap), Some(report.slack))
        } else {
            (None, None)
        };

        let row = MinMaxRow {
            round: t,
            duality_gap: gap,
            gap_slack: slack,
            dist_to_saddle,
            eps: eps.is_finite().then_some(eps),
            inner_iterations_x: xp.report.iterations + xn.report.iterations,
            inner_iterations_y: yp.report.iterations + yn.report.iterations,
            cumulative_gradient_calls: trace.gradient_calls,
            wall_time_ms: cfg
                .record_wall_time
                .then(|| start.elapsed().as_secs_f64() * 1e3),
        };
        observe(&row)?;
        trace.rows.push(row);
    }

    let average = average.expect("at least one round");
    let (ox, oy) = match output {
        OutputSelection::LastPlayed => last_played.clone(),
        _ => (average.xbar.clone(), average.ybar.clone()),
    };
    Ok(MinMaxRun {
        x: ox,
        y: oy,
        last: IterateState {
            x,
            y,
            x_played: last_played.0,
            y_played: last_played.1,
        },
        average,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::problems::{QuadraticSaddle, ZeroSaddle};
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn zero_saddle_keeps_the_initial_pair() {
        let oracle = ZeroSaddle::euclidean(2, 3);
        let mut cfg = MinMaxConfig::new(&oracle, 5).unwrap();
        cfg.radius = Some(1.0);
        cfg.inner = InnerSolve::Certified {
            method: ProxMethod::Prgd,
            adaptive: false,
        };
        let x1 = Point::from_slice(&[1.0, -2.0]);
        let y1 = Point::from_slice(&[0.5, 0.0, 3.0]);
        let run = rioda_run(&oracle, &cfg, &x1, &y1).unwrap();
        assert_eq!(run.x, x1);
        assert_eq!(run.y, y1);
        assert_eq!(run.last.x, x1);
    }

    #[test]
    fn one_round_moves_toward_the_saddle() {
        let oracle = QuadraticSaddle::new(
            1.0,
            1.0,
            dmatrix![0.5, 0.2; -0.3, 0.4],
            dvector![1.0, 0.0],
            dvector![0.0, -1.0],
        )
        .unwrap();
        let (xs, ys) = oracle.saddle().unwrap();
        let mut cfg = MinMaxConfig::new(&oracle, 1).unwrap();
        cfg.gap_cadence = None;
        let x1 = Point::from_slice(&[3.0, 3.0]);
        let y1 = Point::from_slice(&[-2.0, 2.0]);
        let run = rioda_run(&oracle, &cfg, &x1, &y1).unwrap();
        let before =
            (x1.coords() - xs.coords()).norm_squared() + (y1.coords() - ys.coords()).norm_squared();
        let after = (run.last.x.coords() - xs.coords()).norm_squared()
            + (run.last.y.coords() - ys.coords()).norm_squared();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn certified_mode_rejects_other_step_sizes() {
        let oracle = ZeroSaddle::euclidean(1, 1);
        let mut cfg = MinMaxConfig::new(&oracle, 1).unwrap();
        cfg.eta = 0.3;
        let p = Point::from_slice(&[0.0]);
        assert!(matches!(
            rioda_run(&oracle, &cfg, &p, &p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn euclidean_fold_is_the_running_mean() {
        let m = crate::manifolds::EuclideanSpace::new(1);
        let mut avg = AveragingState::new(Point::from_slice(&[0.0]), Point::from_slice(&[0.0]));
        avg.fold(
            &m,
            &m,
            &Point::from_slice(&[2.0]),
            &Point::from_slice(&[4.0]),
        )
        .unwrap();
        assert_eq!(avg.xbar.coords()[0], 1.0);
        assert_eq!(avg.ybar.coords()[0], 2.0);
        assert_eq!(avg.count, 2);
    }

    #[test]
    fn rows_have_the_trace_columns() {
        let row = MinMaxRow {
            round: 3,
            duality_gap: Some(0.25),
            gap_slack: Some(f64::INFINITY),
            dist_to_saddle: None,
            eps: Some(0.125),
            inner_iterations_x: 4,
            inner_iterations_y: 5,
            cumulative_gradient_calls: 36,
            wall_time_ms: None,
        };
        let s = crate::trace::to_csv_string(&[row]).unwrap();
        assert_eq!(
            s,
            "round,duality_gap,gap_certificate_slack,dist_to_saddle,eps_t,inner_iterations_x,inner_iterations_y,cumulative_gradient_calls,wall_time_ms\n3,2.5e-1,,,1.25e-1,4,5,36,\n"
        );
    }
}
