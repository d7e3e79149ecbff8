//! The robust Karcher-mean benchmark.
//!
//! Given anchors `y_i` at unit distance from a base point, the saddle
//! problem is
//!
//! `min_{x in B(base, 1 + rbar)} max_{z_i in B(y_i, rbar)}
//!     (1/n) sum d(x, z_i)^2 - (gamma/n) sum d(y_i, z_i)^2`
//!
//! where each `z_i` may move a little away from its anchor to hurt the mean.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{zeta, Manifold, Point, Tangent};
use crate::manifolds::{ManifoldSpec, ProductManifold};
use crate::oracle::{SquaredDistance, Sum};
use crate::rioda::{
    rioda_run_observed, InnerSolve, MinMaxConfig, MinMaxRow, MinMaxRun, OutputSelection,
    SaddleOracle,
};
use crate::rng::stream;
use crate::subsolvers::{rgd, StepSize, StoppingRule};
use crate::trace::{log_plot_svg, Series, TraceWriter};

pub const DEFAULT_RBAR: f64 = 0.01;
pub const LAMBDA_GRID: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const ETA_GRID: [f64; 2] = [1e-1, 1e-2];

#[derive(Clone, Debug)]
pub struct KarcherInstance {
    pub spec: ManifoldSpec,
    pub manifold: Arc<dyn Manifold>,
    pub base: Point,
    pub anchors: Vec<Point>,
    pub rbar: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl PartialEq for KarcherInstance {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.base == other.base
            && self.anchors == other.anchors
            && self.rbar.to_bits() == other.rbar.to_bits()
            && self.gamma.to_bits() == other.gamma.to_bits()
            && self.seed == other.seed
    }
}

impl KarcherInstance {
    pub fn n(&self) -> usize {
        self.anchors.len()
    }

    /// Radius `1 + rbar` of the ball that holds every relevant mean.
    pub fn dbar(&self) -> f64 {
        1.0 + self.rbar
    }

    pub fn kmin(&self) -> f64 {
        self.manifold.curvature().kmin()
    }

    pub fn x_set(&self) -> Result<ConstraintSet> {
        ConstraintSet::ball(self.base.clone(), self.dbar())
    }

    pub fn y_set(&self) -> Result<ConstraintSet> {
        Ok(ConstraintSet::product(
            self.anchors
                .iter()
                .map(|a| ConstraintSet::ball(a.clone(), self.rbar))
                .collect::<Result<Vec<_>>>()?,
        ))
    }

    /// Starting pair: the base point and the anchors themselves.
    pub fn initial_pair(&self) -> (Point, Point) {
        let pm = ProductManifold::power(self.manifold.clone(), self.n());
        (self.base.clone(), pm.join_points(&self.anchors))
    }

    /// Serialize as `key = value` lines with shortest round-trip floats.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let coords = |p: &Point| {
            p.coords()
                .iter()
                .map(|c| format!("{c:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(s, "manifold = {}", self.spec);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "rbar = {:?}", self.rbar);
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "base = {}", coords(&self.base));
        for a in &self.anchors {
            let _ = writeln!(s, "anchor = {}", coords(a));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = None;
        let mut seed = None;
        let mut rbar = None;
        let mut gamma = None;
        let mut base = None;
        let mut anchors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let float = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| parse_err(format!("`{v}` is not a number")))
            };
            let vector = |v: &str| -> Result<Point> {
                let c = v
                    .split_whitespace()
                    .map(float)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Point::new(DVector::from_vec(c)))
            };
            match key {
                "manifold" => {
                    spec = Some(
                        value
                            .parse::<ManifoldSpec>()
                            .map_err(|e| parse_err(e.to_string()))?,
                    )
                }
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| parse_err(format!("`{value}` is not a seed")))?,
                    )
                }
                "rbar" => rbar = Some(float(value)?),
                "gamma" => gamma = Some(float(value)?),
                "base" => base = Some(vector(value)?),
                "anchor" => anchors.push(vector(value)?),
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        let missing = |name: &str| Error::Parse {
            line: text.lines().count(),
            message: format!("missing `{name}`"),
        };
        let spec = spec.ok_or_else(|| missing("manifold"))?;
        let manifold = spec.build();
        let base = base.ok_or_else(|| missing("base"))?;
        if anchors.is_empty() {
            return Err(missing("anchor"));
        }
        manifold.check_point(&base)?;
        for a in &anchors {
            manifold.check_point(a)?;
        }
        let inst = KarcherInstance {
            spec,
            manifold,
            base,
            anchors,
            rbar: rbar.ok_or_else(|| missing("rbar"))?,
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rbar > 0.0 && self.rbar.is_finite()) {
            return Err(Error::Domain(format!(
                "rbar must be positive, got {}",
                self.rbar
            )));
        }
        let floor = zeta(self.dbar(), self.kmin())?;
        if !(self.gamma >= floor) {
            return Err(Error::Domain(format!(
                "gamma = {} is below zeta(1 + rbar) = {floor}; the problem would not be g-concave",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Base point from the manifold's random distribution, anchors at unit
/// distance along random directions, `gamma = zeta(1 + rbar)`.
pub fn generate_instance(
    spec: ManifoldSpec,
    n: usize,
    rbar: f64,
    seed: u64,
) -> Result<KarcherInstance> {
    if n == 0 {
        return Err(Error::Domain("at least one anchor is required".into()));
    }
    let m = spec.build();
    let mut rng = stream(seed, "karcher/instance");
    let base = m.random_point(&mut rng);
    let anchors = (0..n)
        .map(|_| {
            let v = m.random_unit_tangent(&base, &mut rng);
            m.exp(&base, &v)
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = zeta(1.0 + rbar, m.curvature().kmin())?;
    let inst = KarcherInstance {
        spec,
        manifold: m,
        base,
        anchors,
        rbar,
        gamma,
        seed,
    };
    inst.validate()?;
    Ok(inst)
}

/// `F(x, z) = (1/n) sum d(x, z_i)^2 - (gamma/n) sum d(y_i, z_i)^2` on
/// `M x M^n`.
pub struct RobustKarcher {
    mx: Arc<dyn Manifold>,
    my: Arc<dyn Manifold>,
    anchors: Vec<Point>,
    gamma: f64,
    smoothness: f64,
    declared: (f64, f64),
    certified: (f64, f64),
}

impl RobustKarcher {
    pub fn new(inst: &KarcherInstance) -> Result<Self> {
        inst.validate()?;
        let n = inst.n() as f64;
        let kmin = inst.kmin();
        let zd = zeta(inst.dbar(), kmin)?;
        // Distances between x and any z_i are at most dbar + 1 + rbar.
        let zfar = zeta(inst.dbar() + 1.0 + inst.rbar, kmin)?;
        Ok(RobustKarcher {
            mx: inst.manifold.clone(),
            my: Arc::new(ProductManifold::power(inst.manifold.clone(), inst.n())),
            anchors: inst.anchors.clone(),
            gamma: inst.gamma,
            smoothness: 2.0 * zd * inst.gamma.max(1.0),
            declared: (1.0, inst.gamma - zd),
            certified: (2.0, 2.0 * (inst.gamma - zfar) / n),
        })
    }

    pub fn n(&self) -> usize {
        self.anchors.len()
    }

    fn product(&self) -> &ProductManifold {
        self.my.as_product().expect("y side is a product")
    }
}

impl SaddleOracle for RobustKarcher {
    fn x_manifold(&self) -> &Arc<dyn Manifold> {
        &self.mx
    }

    fn y_manifold(&self) -> &Arc<dyn Manifold> {
        &self.my
    }

    fn value(&self, x: &Point, y: &Point) -> f64 {
        let zs = self.product().split_point(y);
        (0..self.n())
            .map(|i| self.value_y_block(x, &zs[i], i))
            .sum()
    }

    fn grad_x(&self, x: &Point, y: &Point) -> Tangent {
        let n = self.n() as f64;
        let mut g = DVector::zeros(x.len());
        for z in self.product().split_point(y) {
            g -= self.mx.log_coords(x.coords(), z.coords());
        }
        Tangent::new(x.clone(), g * (2.0 / n))
    }

    fn grad_y(&self, x: &Point, y: &Point) -> Tangent {
        let pm = self.product();
        let zs = pm.split_point(y);
        let gs: Vec<Tangent> = (0..self.n())
            .map(|i| self.grad_y_block(x, &zs[i], i))
            .collect();
        pm.join_tangents(&gs)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> (f64, f64) {
        self.declared
    }

    /// `(1/n) sum d(x, .)^2` is 2-strongly g-convex; on the `z` side only a
    /// per-block modulus `(2/n)(gamma - zeta)` over the widest possible
    /// distance is guaranteed, which may be negative.
    fn certified_strong_convexity(&self) -> (f64, f64) {
        self.certified
    }

    fn y_blocks(&self) -> usize {
        self.n()
    }

    fn value_y_block(&self, x: &Point, zi: &Point, i: usize) -> f64 {
        let n = self.n() as f64;
        let a = self.mx.dist(x, zi);
        let b = self.mx.dist(&self.anchors[i], zi);
        (a * a - self.gamma * b * b) / n
    }

    fn grad_y_block(&self, x: &Point, zi: &Point, i: usize) -> Tangent {
        let n = self.n() as f64;
        let to_x = self.mx.log_coords(zi.coords(), x.coords());
        let to_anchor = self.mx.log_coords(zi.coords(), self.anchors[i].coords());
        Tangent::new(zi.clone(), (to_anchor * self.gamma - to_x) * (2.0 / n))
    }
}

/// Minimizer of `(1/2) sum w_i d(x, p_i)^2 / sum w_i`, by gradient descent
/// to a gradient norm of `1e-9`.
pub fn karcher_mean(
    m: &Arc<dyn Manifold>,
    points: &[Point],
    weights: Option<&[f64]>,
) -> Result<Point> {
    if points.is_empty() {
        return Err(Error::Domain("the mean of no points is undefined".into()));
    }
    let weights: Vec<f64> = match weights {
        Some(w) if w.len() == points.len() => w.to_vec(),
        Some(w) => {
            return Err(Error::Domain(format!(
                "{} weights for {} points",
                w.len(),
                points.len()
            )))
        }
        None => vec![1.0; points.len()],
    };
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::Domain(
            "weights must be nonnegative with a positive sum".into(),
        ));
    }
    let start = points[0].clone();
    // Every iterate stays in the ball around the start that holds all points.
    let reach = points.iter().map(|p| m.dist(&start, p)).fold(0.0, f64::max);
    let mut f = Sum::new();
    for (p, w) in points.iter().zip(&weights) {
        let term = SquaredDistance::new(m.clone(), p.clone(), 1.0).within(2.0 * reach)?;
        f.push(w / total, Arc::new(term));
    }
    let rule = StoppingRule::GradNorm {
        tolerance: 1e-9,
        budget: 100_000,
    };
    rgd(m.as_ref(), &f, &start, rule).map(|(x, _)| x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub iterations: usize,
    pub inner_steps: usize,
    /// Inner projected gradient step.
    pub lambda: f64,
    /// Proximal parameter.
    pub eta: f64,
    pub gap_cadence: usize,
    pub output: OutputSelection,
    pub gap_tolerance: f64,
    pub execution: Execution,
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            iterations: 1000,
            inner_steps: 3,
            lambda: 1e-2,
            eta: 1e-2,
            gap_cadence: 10,
            output: OutputSelection::Auto,
            gap_tolerance: 1e-10,
            execution: Execution::default(),
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn minmax(&self, oracle: &RobustKarcher, inst: &KarcherInstance) -> Result<MinMaxConfig> {
        let mut cfg =
            MinMaxConfig::new(oracle, self.iterations)?.with_sets(inst.x_set()?, inst.y_set()?);
        cfg.eta = self.eta;
        cfg.inner = InnerSolve::Fixed {
            steps: self.inner_steps,
            step: StepSize::Fixed(self.lambda),
        };
        cfg.output = self.output;
        cfg.gap_cadence = Some(self.gap_cadence.max(1));
        cfg.gap.tolerance = self.gap_tolerance;
        cfg.gap.execution = self.execution;
        cfg.execution = self.execution;
        cfg.record_wall_time = self.record_wall_time;
        Ok(cfg)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub run: MinMaxRun,
    pub gradient_calls: usize,
    /// `(round, gap, slack)` for every measured round.
    pub gaps: Vec<(usize, f64, f64)>,
    pub wall_time_ms: f64,
    pub trace_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
}

impl ExperimentResult {
    pub fn final_gap(&self) -> Option<f64> {
        self.gaps.last().map(|g| g.1)
    }

    pub fn first_gap(&self) -> Option<f64> {
        self.gaps.first().map(|g| g.1)
    }
}

pub const TRACE_FILE: &str = "trace.csv";
pub const PLOT_FILE: &str = "gap.svg";

/// Run the benchmark; with `outdir`, stream the trace to `trace.csv` and
/// draw `gap.svg` next to it.
pub fn run_experiment(
    inst: &KarcherInstance,
    cfg: &ExperimentConfig,
    outdir: Option<&Path>,
) -> Result<ExperimentResult> {
    let oracle = RobustKarcher::new(inst)?;
    let mm = cfg.minmax(&oracle, inst)?;
    let (x1, y1) = inst.initial_pair();
    let start = Instant::now();
    let mut writer = match outdir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Some(TraceWriter::create::<MinMaxRow>(&dir.join(TRACE_FILE))?)
        }
        None => None,
    };
    let run = rioda_run_observed(&oracle, &mm, &x1, &y1, |row| match writer.as_mut() {
        Some(w) => w.write(row),
        None => Ok(()),
    })?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let gaps: Vec<(usize, f64, f64)> = run
        .trace
        .rows
        .iter()
        .filter_map(|r| {
            Some((
                r.round,
                r.duality_gap?,
                r.gap_slack.unwrap_or(f64::INFINITY),
            ))
        })
        .collect();
    let mut plot_path = None;
    let trace_path = outdir.map(|d| d.join(TRACE_FILE));
    if let Some(dir) = outdir {
        let svg = log_plot_svg(
            &format!("robust Karcher mean on {}", inst.spec),
            "iteration",
            "duality gap",
            &[Series {
                label: format!("lambda={} eta={}", cfg.lambda, cfg.eta),
                points: gaps.iter().map(|g| (g.0 as f64, g.1)).collect(),
            }],
        );
        let path = dir.join(PLOT_FILE);
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        plot_path = Some(path);
    }
    Ok(ExperimentResult {
        gradient_calls: run.trace.gradient_calls,
        run,
        gaps,
        wall_time_ms,
        trace_path,
        plot_path,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub eta: f64,
    /// Final gap, or the error message of a failed run.
    pub outcome: std::result::Result<f64, String>,
}

/// Run every `(lambda, eta)` pair, in parallel when enabled. Runs that fail
/// (for example by diverging) are reported rather than aborting the search.
pub fn grid_search(
    inst: &KarcherInstance,
    cfg: &ExperimentConfig,
    lambdas: &[f64],
    etas: &[f64],
) -> Vec<GridPoint> {
    let pairs: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| etas.iter().map(move |&e| (l, e)))
        .collect();
    cfg.execution.map(&pairs, |&(lambda, eta)| {
        let c = ExperimentConfig {
            lambda,
            eta,
            ..*cfg
        };
        let outcome = match run_experiment(inst, &c, None) {
            Ok(r) => match r.final_gap() {
                Some(g) if g.is_finite() => Ok(g),
                _ => Err("no finite gap was measured".to_string()),
            },
            Err(e) => Err(e.to_string()),
        };
        GridPoint {
            lambda,
            eta,
            outcome,
        }
    })
}

/// The grid point with the smallest final gap.
pub fn best_grid_point(points: &[GridPoint]) -> Option<&GridPoint> {
    points.iter().filter(|p| p.outcome.is_ok()).min_by(|a, b| {
        let (a, b) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
        a.total_cmp(b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_are_at_unit_distance() {
        for spec in [
            ManifoldSpec::Hyperbolic(5),
            ManifoldSpec::Spd(3),
            ManifoldSpec::Euclidean(4),
        ] {
            let inst = generate_instance(spec, 6, DEFAULT_RBAR, 11).unwrap();
            for a in &inst.anchors {
                assert!((inst.manifold.dist(&inst.base, a) - 1.0).abs() < 1e-10);
            }
            assert_eq!(inst.dbar(), 1.01);
        }
    }

    #[test]
    fn euclidean_gamma_is_one() {
        let inst = generate_instance(ManifoldSpec::Euclidean(2), 3, DEFAULT_RBAR, 1).unwrap();
        assert_eq!(inst.gamma, 1.0);
    }

    #[test]
    fn two_point_value() {
        let spec = ManifoldSpec::Euclidean(2);
        let inst = KarcherInstance {
            spec,
            manifold: spec.build(),
            base: Point::from_slice(&[1.0, 0.0]),
            anchors: vec![
                Point::from_slice(&[0.0, 0.0]),
                Point::from_slice(&[2.0, 0.0]),
            ],
            rbar: DEFAULT_RBAR,
            gamma: 1.0,
            seed: 0,
        };
        let f = RobustKarcher::new(&inst).unwrap();
        let (_, y) = inst.initial_pair();
        let x = Point::from_slice(&[1.0, 0.0]);
        assert_eq!(f.value(&x, &y), 1.0);
        assert_eq!(f.grad_x(&x, &y).coords().norm(), 0.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let inst = generate_instance(ManifoldSpec::Spd(3), 4, DEFAULT_RBAR, 5).unwrap();
        let back = KarcherInstance::from_text(&inst.to_text()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let err = KarcherInstance::from_text("manifold = spd:2\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn euclidean_mean_is_the_average() {
        let m: Arc<dyn Manifold> = Arc::new(crate::manifolds::EuclideanSpace::new(2));
        let pts = [
            Point::from_slice(&[0.0, 0.0]),
            Point::from_slice(&[3.0, 0.0]),
            Point::from_slice(&[0.0, 6.0]),
        ];
        let x = karcher_mean(&m, &pts, None).unwrap();
        assert!((x.coords() - nalgebra::dvector![1.0, 2.0]).norm() < 1e-9);
    }

    #[test]
    fn fixed_inner_steps_cost_twelve_calls_per_round() {
        let inst = generate_instance(ManifoldSpec::Hyperbolic(3), 4, DEFAULT_RBAR, 2).unwrap();
        let cfg = ExperimentConfig {
            iterations: 7,
            gap_cadence: 100,
            ..Default::default()
        };
        let r = run_experiment(&inst, &cfg, None).unwrap();
        assert_eq!(r.gradient_calls, 84);
        assert_eq!(r.run.trace.rows[6].cumulative_gradient_calls, 84);
    }
}
