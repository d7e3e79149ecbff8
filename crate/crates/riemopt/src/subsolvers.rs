//! Gradient methods for the inner problems and the certified prox solver.
//!
//! Three methods are provided: plain Riemannian gradient descent ([`rgd`]),
//! its projected variant ([`prgd`]) and the composite method ([`crgd`]) that
//! keeps a g-convex term exact and only linearizes the smooth part. All use
//! the fixed step `1/L`.
//!
//! [`solve_prox_certified`] minimizes `loss + d(., center)^2 / (2 eta)` until
//! a computable bound certifies
//! `F(x) - F(x*) <= eps * d(center, x*)^2` without knowing `x*`.

use std::fmt;
use std::str::FromStr;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::geometry::{zeta_unchecked, Manifold, Point, Tangent};
use crate::oracle::{Objective, ProxObjective};

pub const DEFAULT_BUDGET: usize = 10_000;
/// Relative accuracy of the inner model solve inside a composite step.
pub const INNER_TOLERANCE: f64 = 1e-10;
/// Inner iterations without the mapping halving after which a composite
/// step is taken to have reached the roundoff floor.
const STALL_WINDOW: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StoppingRule {
    /// Exactly this many steps; no gradient is evaluated at the final point.
    FixedIterations(usize),
    /// Stop once the relative gap certificate drops below `epsilon`.
    Certificate { epsilon: f64, budget: usize },
    /// Stop once the (projected) gradient norm drops below `tolerance`.
    GradNorm { tolerance: f64, budget: usize },
}

impl StoppingRule {
    pub fn certificate(epsilon: f64) -> Self {
        StoppingRule::Certificate {
            epsilon,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn grad_norm(tolerance: f64) -> Self {
        StoppingRule::GradNorm {
            tolerance,
            budget: DEFAULT_BUDGET,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            StoppingRule::FixedIterations(_) => Ok(()),
            StoppingRule::Certificate { epsilon: v, .. }
            | StoppingRule::GradNorm { tolerance: v, .. } => {
                if v > 0.0 && !v.is_nan() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "stopping threshold must be positive, got {v}"
                    )))
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    /// `1 / L` with `L` the declared smoothness of the objective.
    InverseSmoothness,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsolverReport {
    pub iterations: usize,
    pub gradient_calls: usize,
    /// Proven bound on the relative gap at the returned point; infinite when
    /// no bound is available.
    pub certificate: f64,
    /// Norm of the last gradient evaluated.
    pub final_grad_norm: f64,
    /// Inner model iterations spent by composite steps.
    pub inner_iterations: usize,
}

impl Default for SubsolverReport {
    fn default() -> Self {
        SubsolverReport {
            iterations: 0,
            gradient_calls: 0,
            certificate: f64::INFINITY,
            final_grad_norm: f64::NAN,
            inner_iterations: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProxMethod {
    #[default]
    Prgd,
    Crgd,
    Rgd,
}

impl fmt::Display for ProxMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProxMethod::Prgd => "prgd",
            ProxMethod::Crgd => "crgd",
            ProxMethod::Rgd => "rgd",
        })
    }
}

impl FromStr for ProxMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "prgd" => Ok(ProxMethod::Prgd),
            "crgd" => Ok(ProxMethod::Crgd),
            "rgd" => Ok(ProxMethod::Rgd),
            other => Err(Error::Domain(format!(
                "unknown subsolver `{other}` (expected prgd, crgd or rgd)"
            ))),
        }
    }
}

fn checked_gradient(f: &dyn Objective, x: &Point, iteration: usize) -> Result<Tangent> {
    let g = f.gradient(x);
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::Numeric(format!("gradient at iteration {iteration}")))
    }
}

fn step_length(step: StepSize, smoothness: f64) -> Result<f64> {
    match step {
        StepSize::InverseSmoothness => {
            if smoothness > 0.0 && smoothness.is_finite() {
                Ok(1.0 / smoothness)
            } else {
                Err(Error::Domain(format!(
                    "smoothness must be positive and finite, got {smoothness}"
                )))
            }
        }
        StepSize::Fixed(s) => {
            if s > 0.0 && s.is_finite() {
                Ok(s)
            } else {
                Err(Error::Domain(format!(
                    "step size must be positive, got {s}"
                )))
            }
        }
    }
}

/// Running product bound `(L zeta(R0) / 2) prod_i (1 - mu / (4 L zeta(R_i)))`
/// with `R_i = |grad_i| / L`.
#[derive(Clone, Copy, Debug)]
struct ProductCertificate {
    smoothness: f64,
    mu: f64,
    kmin: f64,
    prefix: f64,
    product: f64,
}

impl ProductCertificate {
    fn new(smoothness: f64, mu: f64, kmin: f64) -> Self {
        ProductCertificate {
            smoothness,
            mu,
            kmin,
            prefix: f64::INFINITY,
            product: 1.0,
        }
    }

    /// Bound after `iterations` steps, before folding in the gradient seen
    /// at the current iterate.
    fn bound(&self, iterations: usize) -> f64 {
        if iterations == 0 {
            f64::INFINITY
        } else {
            self.prefix * self.product
        }
    }

    fn absorb(&mut self, iteration: usize, grad_norm: f64) {
        let z = zeta_unchecked(grad_norm / self.smoothness, self.kmin);
        if iteration == 0 {
            self.prefix = self.smoothness * z / 2.0;
        } else {
            let factor = 1.0 - self.mu / (4.0 * self.smoothness * z);
            self.product *= factor.clamp(0.0, 1.0);
        }
    }
}

/// Riemannian gradient descent `x <- exp(x, -grad f(x) / L)`.
pub fn rgd(
    m: &dyn Manifold,
    f: &dyn Objective,
    x0: &Point,
    rule: StoppingRule,
) -> Result<(Point, SubsolverReport)> {
    gradient_method(
        m,
        f,
        &ConstraintSet::Whole,
        x0,
        rule,
        StepSize::InverseSmoothness,
    )
}

/// Projected gradient descent `x <- P(exp(x, -grad f(x) / L))`.
pub fn prgd(
    m: &dyn Manifold,
    f: &dyn Objective,
    set: &ConstraintSet,
    x0: &Point,
    rule: StoppingRule,
) -> Result<(Point, SubsolverReport)> {
    gradient_method(m, f, set, x0, rule, StepSize::InverseSmoothness)
}

/// [`prgd`] with an explicit step. Certificates are only reported for the
/// default `1/L` step.
pub fn prgd_with_step(
    m: &dyn Manifold,
    f: &dyn Objective,
    set: &ConstraintSet,
    x0: &Point,
    rule: StoppingRule,
    step: StepSize,
) -> Result<(Point, SubsolverReport)> {
    gradient_method(m, f, set, x0, rule, step)
}

fn gradient_method(
    m: &dyn Manifold,
    f: &dyn Objective,
    set: &ConstraintSet,
    x0: &Point,
    rule: StoppingRule,
    step: StepSize,
) -> Result<(Point, SubsolverReport)> {
    rule.validate()?;
    let l = f.smoothness();
    let lambda = step_length(step, l)?;
    step_length(StepSize::InverseSmoothness, l)?;
    if !set.contains(m, x0, 1e-9) {
        return Err(Error::Contract(
            "initial point lies outside the feasible set".into(),
        ));
    }
    let certifying = step == StepSize::InverseSmoothness;
    let mu = f.strong_convexity();
    let unconstrained = set.is_whole();
    let mut cert = ProductCertificate::new(l, mu, m.curvature().kmin());
    let mut report = SubsolverReport::default();
    let mut x = x0.clone();

    if let StoppingRule::FixedIterations(steps) = rule {
        for k in 0..steps {
            let g = checked_gradient(f, &x, k)?;
            report.gradient_calls += 1;
            let gn = m.norm(&g);
            report.final_grad_norm = gn;
            cert.absorb(k, gn);
            x = set.project(m, &m.exp(&x, &g.scale(-lambda))?)?;
            report.iterations += 1;
        }
        report.certificate = if steps > 0 && certifying {
            cert.bound(steps)
        } else {
            f64::INFINITY
        };
        return Ok((x, report));
    }

    let (threshold, budget) = match rule {
        StoppingRule::Certificate { epsilon, budget } => (epsilon, budget),
        StoppingRule::GradNorm { tolerance, budget } => (tolerance, budget),
        StoppingRule::FixedIterations(_) => unreachable!(),
    };
    let mut best = f64::INFINITY;
    loop {
        let k = report.iterations;
        let g = checked_gradient(f, &x, k)?;
        report.gradient_calls += 1;
        let gn = m.norm(&g);
        report.final_grad_norm = gn;

        let mut bound = if gn == 0.0 {
            0.0
        } else if certifying {
            cert.bound(k)
        } else {
            f64::INFINITY
        };
        if unconstrained && mu > 0.0 && k > 0 {
            // Strong convexity: gap <= |g|^2 / 2mu and d(x, x*) <= |g| / mu.
            let slack = m.dist(x0, &x) - gn / mu;
            if slack > 0.0 {
                bound = bound.min(gn * gn / (2.0 * mu) / (slack * slack));
            }
        }
        report.certificate = bound;
        cert.absorb(k, gn);

        let next = set.project(m, &m.exp(&x, &g.scale(-lambda))?)?;
        let measure = match rule {
            StoppingRule::Certificate { .. } => bound,
            _ if unconstrained => gn,
            _ => m.dist(&x, &next) / lambda,
        };
        best = best.min(measure);
        if measure <= threshold {
            return Ok((x, report));
        }
        if k >= budget {
            return Err(Error::BudgetExhausted {
                budget,
                best_certificate: best,
                requested: threshold,
                best_point: Box::new(x),
            });
        }
        x = next;
        report.iterations += 1;
    }
}

/// Result of a single composite step.
#[derive(Clone, Debug)]
pub struct CrgdStep {
    pub point: Point,
    pub inner_iterations: usize,
}

/// One composite step: the minimizer over `set` of
/// `<grad f(x), log_x y> + (lbar/2) d(x, y)^2 + g(y)`.
pub fn crgd_step(
    m: &dyn Manifold,
    f: &dyn Objective,
    g: &dyn Objective,
    set: &ConstraintSet,
    x: &Point,
    lbar: f64,
) -> Result<Point> {
    let grad = checked_gradient(f, x, 0)?;
    Ok(composite_step(m, &grad, g, set, x, lbar, true)?.point)
}

/// [`crgd_step`] always using the iterative inner solver, even where a
/// closed form exists.
pub fn crgd_step_iterative(
    m: &dyn Manifold,
    f: &dyn Objective,
    g: &dyn Objective,
    set: &ConstraintSet,
    x: &Point,
    lbar: f64,
) -> Result<CrgdStep> {
    let grad = checked_gradient(f, x, 0)?;
    composite_step(m, &grad, g, set, x, lbar, false)
}

struct Model<'a> {
    m: &'a dyn Manifold,
    x: &'a Point,
    grad: &'a Tangent,
    g: &'a dyn Objective,
    lbar: f64,
}

impl Model<'_> {
    fn value(&self, y: &Point) -> f64 {
        let log = self.m.log(self.x, y);
        let d = self.m.norm(&log);
        self.m
            .inner_coords(self.x.coords(), self.grad.coords(), log.coords())
            + 0.5 * self.lbar * d * d
            + self.g.value(y)
    }

    fn gradient(&self, y: &Point) -> Result<Tangent> {
        let pairing = self.m.log_pairing_gradient(self.x, self.grad, y)?;
        let pull = self.m.log_coords(y.coords(), self.x.coords()) * self.lbar;
        let coords = pairing.coords() - pull + self.g.gradient(y).coords();
        Ok(Tangent::new(y.clone(), coords))
    }

    fn smoothness_at(&self, y: &Point) -> f64 {
        let kmin = self.m.curvature().kmin();
        let r = self.m.dist(self.x, y);
        self.lbar * zeta_unchecked(r, kmin)
            + self.g.smoothness()
            + self.m.norm(self.grad) * (-kmin).max(0.0).sqrt()
    }
}

fn composite_step(
    m: &dyn Manifold,
    grad: &Tangent,
    g: &dyn Objective,
    set: &ConstraintSet,
    x: &Point,
    lbar: f64,
    closed_form: bool,
) -> Result<CrgdStep> {
    if !(lbar >= 0.0 && lbar.is_finite()) {
        return Err(Error::Domain(format!(
            "composite step needs lbar >= 0, got {lbar}"
        )));
    }
    if closed_form && m.is_flat() {
        if let Some((c, w)) = g.as_squared_distance() {
            let denom = lbar + w;
            if !(denom > 0.0) {
                return Err(Error::Domain(
                    "composite model is not strongly convex".into(),
                ));
            }
            let y = (x.coords() * lbar + c.coords() * w - grad.coords()) / denom;
            return Ok(CrgdStep {
                point: set.project(m, &Point::new(y))?,
                inner_iterations: 0,
            });
        }
    }

    let model = Model {
        m,
        x,
        grad,
        g,
        lbar,
    };
    let mut y = x.clone();
    let mut value = model.value(&y);
    let mut scale = 1.0;
    let mut initial_mapping = None;
    let mut iterations = 0;
    let mut best_mapping = f64::INFINITY;
    let mut best_at = 0;
    loop {
        let gy = model.gradient(&y)?;
        if !gy.is_finite() {
            return Err(Error::Numeric("composite model gradient".into()));
        }
        let l_model = model.smoothness_at(&y);
        if !(l_model > 0.0) {
            return Err(Error::Domain(
                "composite model is not strongly convex".into(),
            ));
        }
        // Halve the step only if the model value fails to decrease.
        let (next, next_value, lambda) = loop {
            let lambda = scale / l_model;
            let cand = set.project(m, &m.exp(&y, &gy.scale(-lambda))?)?;
            let v = model.value(&cand);
            if v <= value + 1e-14 * (1.0 + value.abs()) || scale < 1e-12 {
                break (cand, v, lambda);
            }
            scale *= 0.5;
        };
        let mapping = m.dist(&y, &next) / lambda;
        let g0 = *initial_mapping.get_or_insert(mapping);
        let floor = 64.0 * f64::EPSILON * l_model * (1.0 + y.coords().amax());
        // The model is smooth with constant `l_model`, so a step that needs
        // twenty halvings, or a long run without the mapping halving, only
        // happens once roundoff dominates the descent.
        if mapping <= 0.5 * best_mapping {
            best_mapping = mapping;
            best_at = iterations;
        }
        let stalled = scale < 1e-6 || iterations - best_at >= STALL_WINDOW;
        if mapping <= INNER_TOLERANCE * g0 || mapping <= floor || stalled {
            let point = if next_value <= value { next } else { y };
            return Ok(CrgdStep {
                point,
                inner_iterations: iterations,
            });
        }
        if iterations >= DEFAULT_BUDGET {
            return Err(Error::BudgetExhausted {
                budget: DEFAULT_BUDGET,
                best_certificate: mapping / g0,
                requested: INNER_TOLERANCE,
                best_point: Box::new(y),
            });
        }
        y = next;
        value = next_value;
        iterations += 1;
    }
}

/// Composite gradient descent on `F = f + g` over `set`.
pub fn crgd(
    m: &dyn Manifold,
    f: &dyn Objective,
    g: &dyn Objective,
    set: &ConstraintSet,
    x0: &Point,
    rule: StoppingRule,
) -> Result<(Point, SubsolverReport)> {
    rule.validate()?;
    let lbar = f.smoothness();
    if !(lbar >= 0.0 && lbar.is_finite()) {
        return Err(Error::Domain(format!(
            "smoothness must be >= 0, got {lbar}"
        )));
    }
    if !set.contains(m, x0, 1e-9) {
        return Err(Error::Contract(
            "initial point lies outside the feasible set".into(),
        ));
    }
    let mu = f.strong_convexity() + g.strong_convexity();
    let rate = if lbar > 0.0 {
        (mu / (4.0 * lbar)).min(0.5)
    } else {
        0.5
    };
    let bound = |tau: usize| (lbar / 2.0) * (-((tau as f64) - 1.0) * rate).exp();
    let composite = |x: &Point| f.value(x) + g.value(x);

    let mut report = SubsolverReport::default();
    let mut x = x0.clone();

    if let StoppingRule::FixedIterations(steps) = rule {
        for k in 0..steps {
            let grad = checked_gradient(f, &x, k)?;
            report.gradient_calls += 1;
            report.final_grad_norm = m.norm(&grad);
            let step = composite_step(m, &grad, g, set, &x, lbar, true)?;
            debug_assert!(monotone(composite(&x), composite(&step.point)));
            report.inner_iterations += step.inner_iterations;
            x = step.point;
            report.iterations += 1;
        }
        report.certificate = if steps > 0 {
            bound(steps)
        } else {
            f64::INFINITY
        };
        return Ok((x, report));
    }

    let (threshold, budget) = match rule {
        StoppingRule::Certificate { epsilon, budget } => (epsilon, budget),
        StoppingRule::GradNorm { tolerance, budget } => (tolerance, budget),
        StoppingRule::FixedIterations(_) => unreachable!(),
    };
    let mut best = f64::INFINITY;
    loop {
        let k = report.iterations;
        let grad = checked_gradient(f, &x, k)?;
        report.gradient_calls += 1;
        let total = grad.add(&g.gradient(&x))?;
        let total_norm = m.norm(&total);
        report.final_grad_norm = total_norm;
        let cert = if total_norm == 0.0 {
            0.0
        } else if k == 0 {
            f64::INFINITY
        } else {
            bound(k)
        };
        report.certificate = cert;
        let measure = match rule {
            StoppingRule::Certificate { .. } => Some(cert),
            _ if set.is_whole() => Some(total_norm),
            _ => None,
        };
        if let Some(v) = measure {
            best = best.min(v);
            if v <= threshold {
                return Ok((x, report));
            }
        }
        let step = composite_step(m, &grad, g, set, &x, lbar, true)?;
        debug_assert!(monotone(composite(&x), composite(&step.point)));
        if measure.is_none() {
            let mapping = lbar.max(f64::MIN_POSITIVE) * m.dist(&x, &step.point);
            best = best.min(mapping);
            if mapping <= threshold {
                return Ok((x, report));
            }
        }
        if k >= budget {
            return Err(Error::BudgetExhausted {
                budget,
                best_certificate: best,
                requested: threshold,
                best_point: Box::new(x),
            });
        }
        report.inner_iterations += step.inner_iterations;
        x = step.point;
        report.iterations += 1;
    }
}

fn monotone(before: f64, after: f64) -> bool {
    after <= before + 1e-9 * (1.0 + before.abs())
}

/// `loss(x) + d(x, center)^2 / (2 eta)` restricted to `set`.
#[derive(Clone, Copy)]
pub struct ProxSubproblem<'a> {
    pub manifold: &'a dyn Manifold,
    pub loss: &'a dyn Objective,
    pub center: &'a Point,
    pub eta: f64,
    pub set: &'a ConstraintSet,
    pub budget: usize,
}

impl<'a> ProxSubproblem<'a> {
    pub fn new(
        manifold: &'a dyn Manifold,
        loss: &'a dyn Objective,
        center: &'a Point,
        eta: f64,
        set: &'a ConstraintSet,
    ) -> Self {
        ProxSubproblem {
            manifold,
            loss,
            center,
            eta,
            set,
            budget: DEFAULT_BUDGET,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !self.set.contains(self.manifold, self.center, 1e-9) {
            return Err(Error::Contract(
                "prox center lies outside the feasible set".into(),
            ));
        }
        Ok(())
    }

    fn zeta_at(&self, running_max: f64) -> f64 {
        let r = self.set.diameter().unwrap_or(running_max);
        zeta_unchecked(r, self.manifold.curvature().kmin())
    }

    fn objective(&self, zeta: f64) -> ProxObjective<'a> {
        ProxObjective {
            manifold: self.manifold,
            loss: self.loss,
            center: self.center,
            eta: self.eta,
            zeta,
        }
    }
}

/// What an adaptive precision rule may look at after each inner step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeState {
    /// Inner steps taken so far.
    pub iteration: usize,
    /// Norm of the loss gradient (without the prox term) at the iterate.
    pub loss_grad_norm: f64,
    pub dist_to_center: f64,
}

/// Certified inexact prox with a fixed target `eps`.
pub fn solve_prox_certified(
    sub: &ProxSubproblem,
    eps: f64,
    method: ProxMethod,
) -> Result<(Point, SubsolverReport)> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "precision must be positive, got {eps}"
        )));
    }
    solve_prox_adaptive(sub, method, |_| eps)
}

/// Certified inexact prox whose target may depend on the current iterate.
pub fn solve_prox_adaptive<P>(
    sub: &ProxSubproblem,
    method: ProxMethod,
    precision: P,
) -> Result<(Point, SubsolverReport)>
where
    P: Fn(&ProbeState) -> f64,
{
    sub.validate()?;
    match method {
        ProxMethod::Prgd => prox_prgd(sub, precision),
        ProxMethod::Crgd => prox_crgd(sub, precision),
        ProxMethod::Rgd => {
            if !sub.set.is_whole() {
                return Err(Error::Contract(
                    "rgd certificate is only valid without constraints".into(),
                ));
            }
            prox_rgd(sub, precision)
        }
    }
}

fn exhausted(sub: &ProxSubproblem, best: f64, requested: f64, x: Point) -> Error {
    Error::BudgetExhausted {
        budget: sub.budget,
        best_certificate: best,
        requested,
        best_point: Box::new(x),
    }
}

fn prox_prgd<P: Fn(&ProbeState) -> f64>(
    sub: &ProxSubproblem,
    precision: P,
) -> Result<(Point, SubsolverReport)> {
    let m = sub.manifold;
    let l = sub.loss.smoothness();
    let kmin = m.curvature().kmin();
    let mut report = SubsolverReport::default();
    let mut x = sub.center.clone();
    let mut max_dist: f64 = 0.0;

    let (_, mut g) = sub.objective(1.0).gradients(&x);
    report.gradient_calls = 1;
    if !g.is_finite() {
        return Err(Error::Numeric("loss gradient at the prox center".into()));
    }
    let mut gn = m.norm(&g);
    report.final_grad_norm = gn;
    if gn == 0.0 {
        report.certificate = 0.0;
        return Ok((x, report));
    }
    let mut z = sub.zeta_at(max_dist);
    let mut lbar = l + z / sub.eta;
    let prefix = lbar * zeta_unchecked(gn / lbar, kmin) / 2.0;
    let mut product = 1.0;
    let mut best = f64::INFINITY;
    let mut requested = f64::NAN;

    for tau in 1..=sub.budget {
        x = sub.set.project(m, &m.exp(&x, &g.scale(-1.0 / lbar))?)?;
        let d = m.dist(sub.center, &x);
        max_dist = max_dist.max(d);
        let (lg, g_next) = sub.objective(z).gradients(&x);
        g = g_next;
        report.gradient_calls += 1;
        report.iterations = tau;
        if !g.is_finite() {
            return Err(Error::Numeric(format!("gradient at inner iteration {tau}")));
        }
        gn = m.norm(&g);
        report.final_grad_norm = gn;
        let cert = if gn == 0.0 { 0.0 } else { prefix * product };
        report.certificate = cert;
        best = best.min(cert);
        requested = precision(&ProbeState {
            iteration: tau,
            loss_grad_norm: m.norm(&lg),
            dist_to_center: d,
        });
        if cert <= requested {
            return Ok((x, report));
        }
        z = sub.zeta_at(max_dist);
        lbar = l + z / sub.eta;
        let factor = 1.0 - 1.0 / (4.0 * (l * sub.eta + z) * zeta_unchecked(gn / lbar, kmin));
        product *= factor.clamp(0.0, 1.0);
    }
    Err(exhausted(sub, best, requested, x))
}

/// `(w/2) d(., center)^2` borrowing its manifold, so the composite step can
/// recognize it.
struct Pull<'a> {
    m: &'a dyn Manifold,
    center: &'a Point,
    weight: f64,
    smoothness: f64,
}

impl Objective for Pull<'_> {
    fn value(&self, x: &Point) -> f64 {
        let d = self.m.dist(x, self.center);
        0.5 * self.weight * d * d
    }

    fn gradient(&self, x: &Point) -> Tangent {
        self.m.log(x, self.center).scale(-self.weight)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.weight
    }

    fn as_squared_distance(&self) -> Option<(&Point, f64)> {
        Some((self.center, self.weight))
    }
}

fn prox_crgd<P: Fn(&ProbeState) -> f64>(
    sub: &ProxSubproblem,
    precision: P,
) -> Result<(Point, SubsolverReport)> {
    let m = sub.manifold;
    let l = sub.loss.smoothness();
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::Domain(format!(
            "loss smoothness must be >= 0, got {l}"
        )));
    }
    let kmin = m.curvature().kmin();
    let mut report = SubsolverReport::default();
    let mut x = sub.center.clone();

    let mut lg = checked_gradient(sub.loss, &x, 0)?;
    report.gradient_calls = 1;
    report.final_grad_norm = m.norm(&lg);
    if report.final_grad_norm == 0.0 {
        report.certificate = 0.0;
        return Ok((x, report));
    }
    let rate = if l > 0.0 {
        (1.0 / (4.0 * l * sub.eta)).min(0.5)
    } else {
        0.5
    };
    let mut best = f64::INFINITY;
    let mut requested = f64::NAN;
    let mut max_dist: f64 = 0.0;

    for tau in 1..=sub.budget {
        let radius = sub
            .set
            .diameter()
            .unwrap_or(2.0 * max_dist + sub.eta * m.norm(&lg));
        let pull = Pull {
            m,
            center: sub.center,
            weight: 1.0 / sub.eta,
            smoothness: zeta_unchecked(radius, kmin) / sub.eta,
        };
        let step = composite_step(m, &lg, &pull, sub.set, &x, l, true)?;
        report.inner_iterations += step.inner_iterations;
        x = step.point;
        let d = m.dist(sub.center, &x);
        max_dist = max_dist.max(d);
        lg = checked_gradient(sub.loss, &x, tau)?;
        report.gradient_calls += 1;
        report.iterations = tau;
        let lgn = m.norm(&lg);
        let total = lg.coords() - m.log_coords(x.coords(), sub.center.coords()) / sub.eta;
        report.final_grad_norm = m.inner_coords(x.coords(), &total, &total).max(0.0).sqrt();
        let cert = (l / 2.0) * (-((tau - 1) as f64) * rate).exp();
        report.certificate = cert;
        best = best.min(cert);
        requested = precision(&ProbeState {
            iteration: tau,
            loss_grad_norm: lgn,
            dist_to_center: d,
        });
        if cert <= requested {
            return Ok((x, report));
        }
    }
    Err(exhausted(sub, best, requested, x))
}

fn prox_rgd<P: Fn(&ProbeState) -> f64>(
    sub: &ProxSubproblem,
    precision: P,
) -> Result<(Point, SubsolverReport)> {
    let m = sub.manifold;
    let l = sub.loss.smoothness();
    let eta = sub.eta;
    let mut report = SubsolverReport::default();
    let mut x = sub.center.clone();
    let mut max_dist: f64 = 0.0;

    let (_, mut g) = sub.objective(1.0).gradients(&x);
    report.gradient_calls = 1;
    if !g.is_finite() {
        return Err(Error::Numeric("loss gradient at the prox center".into()));
    }
    let mut gn = m.norm(&g);
    report.final_grad_norm = gn;
    if gn == 0.0 {
        report.certificate = 0.0;
        return Ok((x, report));
    }
    let mut best = f64::INFINITY;
    let mut requested = f64::NAN;

    for tau in 1..=sub.budget {
        let lbar = l + sub.zeta_at(max_dist) / eta;
        x = m.exp(&x, &g.scale(-1.0 / lbar))?;
        let d = m.dist(sub.center, &x);
        max_dist = max_dist.max(d);
        let (lg, g_next) = sub.objective(1.0).gradients(&x);
        g = g_next;
        report.gradient_calls += 1;
        report.iterations = tau;
        if !g.is_finite() {
            return Err(Error::Numeric(format!("gradient at inner iteration {tau}")));
        }
        gn = m.norm(&g);
        report.final_grad_norm = gn;
        requested = precision(&ProbeState {
            iteration: tau,
            loss_grad_norm: m.norm(&lg),
            dist_to_center: d,
        });
        // The objective is (1/eta)-strongly convex, so the gradient bounds
        // both the gap and the distance to the minimizer.
        let g2 = gn * gn;
        let mut cert = f64::INFINITY;
        if d > eta * gn {
            cert = cert.min(0.5 * eta * g2 / ((d - eta * gn) * (d - eta * gn)));
        }
        let denom = d * d - 2.0 * eta * eta * g2;
        if denom > 0.0 {
            cert = cert.min(eta * g2 / denom);
        }
        if gn == 0.0 {
            cert = 0.0;
        }
        report.certificate = cert;
        best = best.min(cert);
        let criterion = requested * d * d / (eta + 2.0 * eta * eta * requested);
        if g2 <= criterion || cert <= requested {
            return Ok((x, report));
        }
    }
    Err(exhausted(sub, best, requested, x))
}

/// A fixed number of projected gradient steps on the prox objective, with
/// step `1 / (L + zeta_D / eta)` unless overridden.
pub fn solve_prox_fixed(
    sub: &ProxSubproblem,
    steps: usize,
    step: StepSize,
) -> Result<(Point, SubsolverReport)> {
    sub.validate()?;
    let m = sub.manifold;
    let l = sub.loss.smoothness();
    let kmin = m.curvature().kmin();
    let mut report = SubsolverReport::default();
    let mut x = sub.center.clone();
    let mut max_dist: f64 = 0.0;
    let mut prefix = f64::INFINITY;
    let mut product = 1.0;
    for k in 0..steps {
        let z = sub.zeta_at(max_dist);
        let lbar = l + z / sub.eta;
        let lambda = step_length(step, lbar)?;
        let (_, g) = sub.objective(z).gradients(&x);
        report.gradient_calls += 1;
        if !g.is_finite() {
            return Err(Error::Numeric(format!("gradient at inner iteration {k}")));
        }
        let gn = m.norm(&g);
        report.final_grad_norm = gn;
        let zr = zeta_unchecked(gn / lbar, kmin);
        if k == 0 {
            prefix = lbar * zr / 2.0;
        } else {
            product *= (1.0 - 1.0 / (4.0 * (l * sub.eta + z) * zr)).clamp(0.0, 1.0);
        }
        x = sub.set.project(m, &m.exp(&x, &g.scale(-lambda))?)?;
        max_dist = max_dist.max(m.dist(sub.center, &x));
        report.iterations += 1;
    }
    report.certificate = if steps > 0 && step == StepSize::InverseSmoothness {
        prefix * product
    } else {
        f64::INFINITY
    };
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{EuclideanSpace, HyperbolicSpace};
    use crate::oracle::{SquaredDistance, Zero};
    use std::sync::Arc;

    fn half_norm(dim: usize) -> SquaredDistance {
        let m: Arc<dyn Manifold> = Arc::new(EuclideanSpace::new(dim));
        SquaredDistance::new(m, Point::new(nalgebra::DVector::zeros(dim)), 1.0)
    }

    #[test]
    fn rgd_quadratic_one_step() {
        let m = EuclideanSpace::new(2);
        let f = half_norm(2);
        let (x, r) = rgd(
            &m,
            &f,
            &Point::from_slice(&[2.0, 0.0]),
            StoppingRule::grad_norm(1e-12),
        )
        .unwrap();
        assert_eq!(x.coords().as_slice(), &[0.0, 0.0]);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.gradient_calls, 2);
    }

    #[test]
    fn rgd_returns_stationary_start() {
        let m = EuclideanSpace::new(2);
        let f = half_norm(2);
        let x0 = Point::from_slice(&[0.0, 0.0]);
        let (x, r) = rgd(&m, &f, &x0, StoppingRule::certificate(1e-9)).unwrap();
        assert_eq!(x, x0);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.certificate, 0.0);
    }

    #[test]
    fn prgd_ball_minimizer() {
        let m = EuclideanSpace::new(2);
        let f = half_norm(2);
        let set = ConstraintSet::ball(Point::from_slice(&[3.0, 0.0]), 1.0).unwrap();
        let (x, _) = prgd(
            &m,
            &f,
            &set,
            &Point::from_slice(&[3.0, 0.0]),
            StoppingRule::grad_norm(1e-12),
        )
        .unwrap();
        assert!((x.coords()[0] - 2.0).abs() < 1e-12);
        assert!(x.coords()[1].abs() < 1e-12);
    }

    #[test]
    fn fixed_iterations_count_gradients_exactly() {
        let m = EuclideanSpace::new(2);
        let f = half_norm(2);
        let (_, r) = prgd(
            &m,
            &f,
            &ConstraintSet::Whole,
            &Point::from_slice(&[1.0, 1.0]),
            StoppingRule::FixedIterations(3),
        )
        .unwrap();
        assert_eq!(r.iterations, 3);
        assert_eq!(r.gradient_calls, 3);
    }

    #[test]
    fn crgd_step_closed_form_matches_iterative() {
        let m: Arc<dyn Manifold> = Arc::new(EuclideanSpace::new(3));
        let f = SquaredDistance::new(m.clone(), Point::from_slice(&[1.0, -2.0, 0.5]), 2.0);
        let g = SquaredDistance::new(m.clone(), Point::from_slice(&[0.0, 1.0, 1.0]), 4.0);
        let x = Point::from_slice(&[0.3, 0.3, -0.2]);
        let closed = crgd_step(m.as_ref(), &f, &g, &ConstraintSet::Whole, &x, 2.0).unwrap();
        // (Lx + w c - grad f(x)) / (L + w)
        let grad = f.gradient(&x);
        let expect = (x.coords() * 2.0 + g.anchor().coords() * 4.0 - grad.coords()) / 6.0;
        assert!((closed.coords() - &expect).amax() < 1e-14);
        let it = crgd_step_iterative(m.as_ref(), &f, &g, &ConstraintSet::Whole, &x, 2.0).unwrap();
        assert!((it.point.coords() - expect).amax() < 1e-9);
    }

    #[test]
    fn crgd_step_fixed_point_without_forces() {
        let m = HyperbolicSpace::new(2);
        let x = m.reference_point();
        let y = crgd_step(&m, &Zero, &Zero, &ConstraintSet::Whole, &x, 1.0).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn prox_stationary_center_needs_no_steps() {
        let m = EuclideanSpace::new(2);
        let c = Point::from_slice(&[0.0, 0.0]);
        let f = half_norm(2);
        let set = ConstraintSet::Whole;
        let sub = ProxSubproblem::new(&m, &f, &c, 1.0, &set);
        for method in [ProxMethod::Prgd, ProxMethod::Crgd, ProxMethod::Rgd] {
            let (x, r) = solve_prox_certified(&sub, 1e-6, method).unwrap();
            assert_eq!(x, c);
            assert_eq!(r.iterations, 0);
        }
    }

    #[test]
    fn crgd_prox_iteration_count_matches_certificate_inequality() {
        // Loss smoothness 0.4 with eta = 1, so the rate is 1/2 per step and
        // tau = 1 + ceil(2 ln(L / (2 eps))) steps are needed.
        let m: Arc<dyn Manifold> = Arc::new(EuclideanSpace::new(2));
        let f = SquaredDistance::new(m.clone(), Point::from_slice(&[3.0, 1.0]), 0.4);
        let c = Point::from_slice(&[0.0, 0.0]);
        let set = ConstraintSet::Whole;
        let sub = ProxSubproblem::new(m.as_ref(), &f, &c, 1.0, &set);
        for eps in [1e-2, 1e-4, 1e-7] {
            let (_, r) = solve_prox_certified(&sub, eps, ProxMethod::Crgd).unwrap();
            let expect = 1 + (2.0 * (0.4f64 / (2.0 * eps)).ln()).ceil() as usize;
            assert_eq!(r.iterations, expect, "eps = {eps}");
        }
    }

    #[test]
    fn rgd_prox_rejects_constraints() {
        let m = EuclideanSpace::new(1);
        let c = Point::from_slice(&[0.0]);
        let set = ConstraintSet::ball(c.clone(), 1.0).unwrap();
        let f = half_norm(1);
        let sub = ProxSubproblem::new(&m, &f, &c, 1.0, &set);
        assert!(matches!(
            solve_prox_certified(&sub, 1e-3, ProxMethod::Rgd),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [ProxMethod::Prgd, ProxMethod::Crgd, ProxMethod::Rgd] {
            assert_eq!(m.to_string().parse::<ProxMethod>().unwrap(), m);
        }
        assert!("newton".parse::<ProxMethod>().is_err());
    }
}
