//! Optimistic implicit online gradient descent over a compact g-convex set.
//!
//! Each round plays the inexact prox point of the hint, then takes an inexact
//! prox step on the revealed loss from the secondary iterate. The secondary
//! sequence never sees the hints, so bad predictions cannot accumulate.

use std::cell::Cell as StdCell;
use std::fmt;
use std::sync::Arc;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};
use crate::oracle::{Objective, Sum, Zero};
use crate::subsolvers::{
    prgd, solve_prox_adaptive, ProxMethod, ProxSubproblem, StoppingRule, DEFAULT_BUDGET,
};
use crate::trace::{Cell, TraceRow};

/// Where the Lipschitz constant in the precision schedule comes from.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum LipsMode {
    Declared(f64),
    /// Use the loss-gradient norm at the current inner iterate.
    #[default]
    Adaptive,
}

#[derive(Clone, Debug)]
pub struct RiodConfig {
    pub eta: f64,
    pub set: ConstraintSet,
    pub kmin: f64,
    /// Smoothness shared by all losses and hints on the set.
    pub smoothness: f64,
    pub lips: LipsMode,
    pub horizon: usize,
    pub method: ProxMethod,
    pub budget: usize,
}

impl RiodConfig {
    pub fn new(eta: f64, set: ConstraintSet, kmin: f64, smoothness: f64, horizon: usize) -> Self {
        RiodConfig {
            eta,
            set,
            kmin,
            smoothness,
            lips: LipsMode::Adaptive,
            horizon,
            method: ProxMethod::Prgd,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn diameter(&self) -> Result<f64> {
        match self.set.diameter() {
            Some(d) if d > 0.0 => Ok(d),
            Some(d) => Err(Error::Domain(format!(
                "set diameter must be positive, got {d}"
            ))),
            None => Err(Error::Domain("online learning needs a bounded set".into())),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.smoothness >= 0.0 && self.smoothness.is_finite()) {
            return Err(Error::Domain(format!(
                "smoothness must be >= 0, got {}",
                self.smoothness
            )));
        }
        if self.kmin > 0.0 {
            return Err(Error::UnsupportedGeometry(format!(
                "positive curvature bound {}",
                self.kmin
            )));
        }
        self.diameter().map(|_| ())
    }
}

/// Inner precision for round `t`:
/// `1 / (8 eta max{4, (t+1)^2 (15 + 8 eta^2 L^2 + 2 eta^2 M^2 (D^-2 + 48|kmin|))})`.
pub fn precision_riod(
    t: usize,
    eta: f64,
    smoothness: f64,
    lips: f64,
    diameter: f64,
    kmin: f64,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("rounds are numbered from 1".into()));
    }
    if !(diameter > 0.0) {
        return Err(Error::Domain(format!(
            "diameter must be positive, got {diameter}"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    let e2 = eta * eta;
    let s = (t as f64 + 1.0).powi(2)
        * (15.0
            + 8.0 * e2 * smoothness * smoothness
            + 2.0 * e2 * lips * lips * (1.0 / (diameter * diameter) + 48.0 * kmin.abs()));
    Ok(1.0 / (8.0 * eta * s.max(4.0)))
}

/// The losses revealed by the environment, indexed from round 1.
pub trait LossStream: Send + Sync {
    fn loss(&self, t: usize) -> Arc<dyn Objective>;
}

impl LossStream for Vec<Arc<dyn Objective>> {
    fn loss(&self, t: usize) -> Arc<dyn Objective> {
        self[t - 1].clone()
    }
}

/// External hint source.
pub type HintFn = Arc<dyn Fn(usize) -> Arc<dyn Objective> + Send + Sync>;

#[derive(Clone, Default)]
pub enum HintPolicy {
    #[default]
    Zero,
    /// Predict the next loss by the last one revealed.
    PreviousLoss,
    External(HintFn),
}

impl fmt::Debug for HintPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HintPolicy::Zero => "Zero",
            HintPolicy::PreviousLoss => "PreviousLoss",
            HintPolicy::External(_) => "External",
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct RegretRecord {
    /// Played points, one per round.
    pub played: Vec<Point>,
    /// Secondary iterates `x_1..x_T`, the prox centers of each round.
    pub secondary: Vec<Point>,
    /// The secondary iterate produced by the last round.
    pub final_secondary: Option<Point>,
    pub loss_values: Vec<f64>,
    /// `|grad loss - grad hint|^2` at the played point.
    pub optimism_terms: Vec<f64>,
    /// Gradient calls made by both prox solves of each round.
    pub oracle_calls: Vec<usize>,
    /// Smallest precision requested during each round.
    pub eps: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    /// Distance between secondary and played point.
    pub played_distance: Vec<f64>,
}

impl RegretRecord {
    pub fn rounds(&self) -> usize {
        self.played.len()
    }

    /// `x_{t+1}` for `t = 1..T`.
    pub fn next_secondary(&self, t: usize) -> &Point {
        if t < self.secondary.len() {
            &self.secondary[t]
        } else {
            self.final_secondary.as_ref().expect("record is complete")
        }
    }
}

pub fn riod_run(
    m: &dyn Manifold,
    stream: &dyn LossStream,
    hints: &HintPolicy,
    cfg: &RiodConfig,
    x1: &Point,
) -> Result<RegretRecord> {
    cfg.validate()?;
    if !cfg.set.contains(m, x1, 1e-9) {
        return Err(Error::Contract("initial point lies outside the set".into()));
    }
    let diameter = cfg.diameter()?;
    let mut record = RegretRecord::default();
    let mut x = x1.clone();
    let mut previous: Option<Arc<dyn Objective>> = None;

    for t in 1..=cfg.horizon {
        let hint: Arc<dyn Objective> = match (t, hints, &previous) {
            (1, _, _) => Arc::new(Zero),
            (_, HintPolicy::Zero, _) => Arc::new(Zero),
            (_, HintPolicy::PreviousLoss, Some(p)) => p.clone(),
            (_, HintPolicy::PreviousLoss, None) => Arc::new(Zero),
            (_, HintPolicy::External(f), _) => f(t),
        };
        let smallest = StdCell::new(f64::INFINITY);
        let rule = |probe: &crate::subsolvers::ProbeState| {
            let lips = match cfg.lips {
                LipsMode::Declared(v) => v,
                LipsMode::Adaptive => probe.loss_grad_norm,
            };
            let eps = precision_riod(t, cfg.eta, cfg.smoothness, lips, diameter, cfg.kmin)
                .unwrap_or(f64::NAN);
            smallest.set(smallest.get().min(eps));
            eps
        };

        let mut sub = ProxSubproblem::new(m, hint.as_ref(), &x, cfg.eta, &cfg.set);
        sub.budget = cfg.budget;
        let (played, r1) =
            solve_prox_adaptive(&sub, cfg.method, rule).map_err(|e| e.in_round(t, None))?;

        let loss = stream.loss(t);
        let value = loss.value(&played);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("loss value at round {t}")).in_round(t, None));
        }
        let diff = loss.gradient(&played).sub(&hint.gradient(&played))?;
        let optimism = m.norm(&diff).powi(2);

        let mut sub = ProxSubproblem::new(m, loss.as_ref(), &x, cfg.eta, &cfg.set);
        sub.budget = cfg.budget;
        let (next, r2) =
            solve_prox_adaptive(&sub, cfg.method, rule).map_err(|e| e.in_round(t, None))?;

        record.played_distance.push(m.dist(&x, &played));
        record.secondary.push(x);
        record.played.push(played);
        record.loss_values.push(value);
        record.optimism_terms.push(optimism);
        record
            .oracle_calls
            .push(r1.gradient_calls + r2.gradient_calls);
        record.inner_iterations.push(r1.iterations + r2.iterations);
        let eps = smallest.get();
        record.eps.push(if eps.is_finite() {
            eps
        } else {
            precision_riod(t, cfg.eta, cfg.smoothness, 0.0, diameter, cfg.kmin)?
        });
        x = next;
        previous = Some(loss);
    }
    record.final_secondary = Some(x);
    Ok(record)
}

fn check_comparator(m: &dyn Manifold, set: &ConstraintSet, u: &Point) -> Result<()> {
    if set.contains(m, u, 1e-9) {
        Ok(())
    } else {
        Err(Error::Contract("comparator lies outside the set".into()))
    }
}

/// Static regret `sum_t loss_t(played_t) - loss_t(u)`.
pub fn regret(
    record: &RegretRecord,
    stream: &dyn LossStream,
    m: &dyn Manifold,
    set: &ConstraintSet,
    u: &Point,
) -> Result<f64> {
    check_comparator(m, set, u)?;
    Ok((1..=record.rounds())
        .map(|t| record.loss_values[t - 1] - stream.loss(t).value(u))
        .sum())
}

/// Dynamic regret against `us` and the path length
/// `P_T = sum_{t=1}^T d(u_t, u_{t+1})`. With only `T` comparators the last
/// one is repeated as `u_{T+1}`.
pub fn dynamic_regret(
    record: &RegretRecord,
    stream: &dyn LossStream,
    m: &dyn Manifold,
    set: &ConstraintSet,
    us: &[Point],
) -> Result<(f64, f64)> {
    let t_max = record.rounds();
    if us.len() != t_max && us.len() != t_max + 1 {
        return Err(Error::Contract(format!(
            "expected {t_max} or {} comparators, got {}",
            t_max + 1,
            us.len()
        )));
    }
    for u in us {
        check_comparator(m, set, u)?;
    }
    let regret = (1..=t_max)
        .map(|t| record.loss_values[t - 1] - stream.loss(t).value(&us[t - 1]))
        .sum();
    Ok((regret, path_length(m, us, t_max)))
}

/// `sum_{t=1}^T d(u_t, u_{t+1})`, treating a missing `u_{T+1}` as `u_T`.
pub fn path_length(m: &dyn Manifold, us: &[Point], horizon: usize) -> f64 {
    (0..horizon.min(us.len()))
        .filter_map(|i| us.get(i + 1).map(|next| m.dist(&us[i], next)))
        .sum()
}

/// Right-hand side of the regret guarantee split into the part that holds
/// for any `mu >= 0` and the strong-convexity credit
/// `(mu/4) sum_t d(x_{t+1}, u_t)^2` that may be subtracted from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretBound {
    pub base: f64,
    pub credit: f64,
}

impl RegretBound {
    pub fn value(&self) -> f64 {
        self.base - self.credit
    }
}

/// Comparators for [`regret_bound`].
pub enum Comparators<'a> {
    Static(&'a Point),
    Dynamic(&'a [Point]),
}

pub fn regret_bound(
    record: &RegretRecord,
    cfg: &RiodConfig,
    m: &dyn Manifold,
    comparators: Comparators,
    mu: f64,
) -> Result<RegretBound> {
    let d = cfg.diameter()?;
    let t_max = record.rounds();
    let p = match comparators {
        Comparators::Static(_) => 0.0,
        Comparators::Dynamic(us) => path_length(m, us, t_max),
    };
    let optimism: f64 = record.optimism_terms.iter().sum();
    let base = (2.0 * p * d + 3.0 * d * d) / (2.0 * cfg.eta) + cfg.eta * optimism;
    let credit = if mu > 0.0 {
        (1..=t_max)
            .map(|t| {
                let u = match comparators {
                    Comparators::Static(u) => u,
                    Comparators::Dynamic(us) => &us[(t - 1).min(us.len() - 1)],
                };
                m.dist(record.next_secondary(t), u).powi(2)
            })
            .sum::<f64>()
            * mu
            / 4.0
    } else {
        0.0
    };
    Ok(RegretBound { base, credit })
}

/// Minimizer of the cumulative loss over the set, to certificate 1e-10.
pub fn best_fixed_comparator(
    m: &dyn Manifold,
    stream: &dyn LossStream,
    horizon: usize,
    set: &ConstraintSet,
    x0: &Point,
) -> Result<Point> {
    let mut total = Sum::new();
    for t in 1..=horizon {
        total.push(1.0, stream.loss(t));
    }
    let rule = StoppingRule::Certificate {
        epsilon: 1e-10,
        budget: 100_000,
    };
    prgd(m, &total, set, x0, rule).map(|(u, _)| u)
}

/// One row of the online trace.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineRow {
    pub t: usize,
    pub loss_value: f64,
    pub optimism_term: f64,
    pub played_distance: f64,
    pub eps: f64,
    pub inner_iterations: usize,
    pub cumulative_regret: f64,
}

impl TraceRow for OnlineRow {
    fn header() -> &'static [&'static str] {
        &[
            "t",
            "loss_value",
            "optimism_term",
            "dist_secondary_played",
            "eps_t",
            "inner_iterations",
            "cumulative_regret",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.t as u64),
            Cell::Float(self.loss_value),
            Cell::Float(self.optimism_term),
            Cell::Float(self.played_distance),
            Cell::Float(self.eps),
            Cell::Int(self.inner_iterations as u64),
            Cell::Float(self.cumulative_regret),
        ]
    }
}

/// Trace rows with cumulative regret against the fixed comparator `u`.
pub fn online_trace(record: &RegretRecord, stream: &dyn LossStream, u: &Point) -> Vec<OnlineRow> {
    let mut cumulative = 0.0;
    (1..=record.rounds())
        .map(|t| {
            cumulative += record.loss_values[t - 1] - stream.loss(t).value(u);
            OnlineRow {
                t,
                loss_value: record.loss_values[t - 1],
                optimism_term: record.optimism_terms[t - 1],
                played_distance: record.played_distance[t - 1],
                eps: record.eps[t - 1],
                inner_iterations: record.inner_iterations[t - 1],
                cumulative_regret: cumulative,
            }
        })
        .collect()
}

/// Synthetic loss streams made of weighted squared distances to moving
/// targets.
pub mod streams {
    use super::*;
    use crate::oracle::SquaredDistance;
    use rand::{Rng, RngCore};

    /// Losses `(w/2) d(., target_t)^2`.
    #[derive(Clone)]
    pub struct TargetStream {
        pub losses: Vec<Arc<dyn Objective>>,
        pub targets: Vec<Point>,
        /// Largest declared smoothness among the losses.
        pub smoothness: f64,
    }

    impl LossStream for TargetStream {
        fn loss(&self, t: usize) -> Arc<dyn Objective> {
            self.losses[t - 1].clone()
        }
    }

    impl TargetStream {
        /// `reach` bounds the distance from any feasible point to any target
        /// and fixes the declared smoothness.
        pub fn new(
            m: Arc<dyn Manifold>,
            targets: Vec<Point>,
            weight: f64,
            reach: f64,
        ) -> Result<Self> {
            let mut losses: Vec<Arc<dyn Objective>> = Vec::with_capacity(targets.len());
            let mut smoothness: f64 = 0.0;
            for target in &targets {
                let f = SquaredDistance::new(m.clone(), target.clone(), weight).within(reach)?;
                smoothness = smoothness.max(f.smoothness());
                losses.push(Arc::new(f));
            }
            Ok(TargetStream {
                losses,
                targets,
                smoothness,
            })
        }
    }

    fn ball_point(
        m: &dyn Manifold,
        center: &Point,
        radius: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Point> {
        let v = m.random_unit_tangent(center, rng);
        let r = radius * rng.random::<f64>();
        m.exp(center, &v.scale(r))
    }

    /// Targets doing a random walk with step `drift` inside the ball of
    /// radius `radius` around `center`.
    pub fn drifting_targets(
        m: &dyn Manifold,
        center: &Point,
        radius: f64,
        horizon: usize,
        drift: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Point>> {
        let ball = ConstraintSet::ball(center.clone(), radius)?;
        let mut p = ball_point(m, center, radius, rng)?;
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            out.push(p.clone());
            let v = m.random_unit_tangent(&p, rng);
            p = ball.project(m, &m.exp(&p, &v.scale(drift))?)?;
        }
        Ok(out)
    }

    /// Targets jumping between two antipodal points of the sphere of radius
    /// `radius`, switching side with probability `flip` each round.
    pub fn sign_flip_targets(
        m: &dyn Manifold,
        center: &Point,
        radius: f64,
        horizon: usize,
        flip: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Point>> {
        let v = m.random_unit_tangent(center, rng).scale(radius);
        let poles = [m.exp(center, &v)?, m.exp(center, &v.scale(-1.0))?];
        let mut side = 0;
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            out.push(poles[side].clone());
            if rng.random::<f64>() < flip {
                side = 1 - side;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::EuclideanSpace;

    #[test]
    fn precision_reference_values() {
        // max{4, 4 * 15}^-1 / 8 = 1/480
        let e = precision_riod(1, 1.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert!((e - 1.0 / 480.0).abs() < 1e-18);
        assert!(precision_riod(1, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        for t in [1, 5, 50] {
            let e = precision_riod(t, 0.3, 2.0, 1.5, 2.0, -1.0).unwrap();
            assert!(e <= 1.0 / (32.0 * 0.3));
        }
        let ratio = precision_riod(10, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap()
            / precision_riod(20, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        // (21/11)^2
        assert!((ratio - (21.0f64 / 11.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn zero_losses_stay_put() {
        let m = EuclideanSpace::new(2);
        let c = Point::from_slice(&[0.0, 0.0]);
        let set = ConstraintSet::ball(c.clone(), 1.0).unwrap();
        let x1 = Point::from_slice(&[0.3, 0.1]);
        let losses: Vec<Arc<dyn Objective>> = (0..5).map(|_| Arc::new(Zero) as _).collect();
        let cfg = RiodConfig::new(0.5, set.clone(), 0.0, 0.0, 5);
        let rec = riod_run(&m, &losses, &HintPolicy::PreviousLoss, &cfg, &x1).unwrap();
        assert!(rec.played.iter().all(|p| *p == x1));
        assert!(rec.secondary.iter().all(|p| *p == x1));
        assert_eq!(regret(&rec, &losses, &m, &set, &c).unwrap(), 0.0);
    }

    #[test]
    fn path_length_on_a_circle() {
        let m = EuclideanSpace::new(2);
        let n = 12;
        let us: Vec<Point> = (0..=n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                Point::from_slice(&[a.cos(), a.sin()])
            })
            .collect();
        let chord = 2.0 * (std::f64::consts::PI / n as f64).sin();
        assert!((path_length(&m, &us, n) - n as f64 * chord).abs() < 1e-12);
        assert_eq!(path_length(&m, &us[..1], 1), 0.0);
    }

    #[test]
    fn static_bound_without_optimism() {
        let cfg = RiodConfig::new(
            0.5,
            ConstraintSet::ball(Point::from_slice(&[0.0]), 1.0).unwrap(),
            0.0,
            1.0,
            3,
        );
        let rec = RegretRecord {
            optimism_terms: vec![0.0; 3],
            played: vec![Point::from_slice(&[0.0]); 3],
            ..Default::default()
        };
        let u = Point::from_slice(&[0.0]);
        let b = regret_bound(
            &rec,
            &cfg,
            &EuclideanSpace::new(1),
            Comparators::Static(&u),
            0.0,
        )
        .unwrap();
        // 3 D^2 / (2 eta) with D = 2
        assert_eq!(b.value(), 12.0);
    }
}
