//! Duality gap with a certified slack, and the iterate radius audit.

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{Manifold, Point, Tangent};
use crate::oracle::Objective;
use crate::subsolvers::{prgd, StoppingRule};

use super::saddle::{NegYSlice, SaddleOracle, XSlice};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapOptions {
    /// Projected-gradient tolerance of the two inner solves.
    pub tolerance: f64,
    pub budget: usize,
    pub execution: Execution,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            tolerance: 1e-10,
            budget: 100_000,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    /// `f(x_hat, y_best) - f(x_best, y_hat)`, a lower bound on the true gap.
    pub gap: f64,
    /// The true gap is at most `gap + slack`. Infinite when no bound applies.
    pub slack: f64,
    pub best_response_x: Point,
    pub best_response_y: Point,
    pub gradient_calls: usize,
}

impl GapReport {
    pub fn upper(&self) -> f64 {
        self.gap + self.slack
    }
}

/// Upper bound on `h(z) - min_set h` for an `h` with g-convexity modulus
/// `mu` on the set, from its gradient at a feasible `z`. A negative `mu`
/// is allowed where a ball constraint makes up for it.
///
/// Ball constraints use the Lagrangian `h + lambda d(., c)^2 / 2`, which is
/// `(mu + lambda)`-strongly convex, and its distance to any feasible point is
/// at most the ball diameter.
pub fn suboptimality_bound(
    m: &dyn Manifold,
    set: &ConstraintSet,
    z: &Point,
    grad: &Tangent,
    mu: f64,
) -> Result<f64> {
    match set {
        ConstraintSet::Whole => {
            let g = m.norm(grad);
            Ok(if g == 0.0 {
                0.0
            } else if mu > 0.0 {
                g * g / (2.0 * mu)
            } else {
                f64::INFINITY
            })
        }
        ConstraintSet::Ball(b) => {
            let to_center = m.log(z, &b.center);
            // grad of d(., c)^2 / 2 is -log_z(c).
            let nrho = m.norm(&to_center);
            let rho = 0.5 * nrho * nrho;
            let gdot = -m.inner(z, grad, &to_center)?;
            let at = |lambda: f64| -> Result<f64> {
                let modulus = mu + lambda;
                if modulus < 0.0 {
                    return Ok(f64::INFINITY);
                }
                let gl = m.norm(&grad.axpy(-lambda, &to_center)?);
                let strong = if gl == 0.0 {
                    0.0
                } else if modulus > 0.0 {
                    gl * gl / (2.0 * modulus)
                } else {
                    f64::INFINITY
                };
                let linear = gl * 2.0 * b.radius;
                let complementarity = lambda * (0.5 * b.radius * b.radius - rho).max(0.0);
                Ok(complementarity + strong.min(linear))
            };
            // Any multiplier gives a valid bound; try none and the one that
            // best cancels the gradient.
            let lambda = if nrho > 0.0 {
                (-gdot / (nrho * nrho)).max(0.0)
            } else {
                0.0
            };
            Ok(at(0.0)?.min(at(lambda)?))
        }
        ConstraintSet::Product(p) => {
            let pm = m.as_product().ok_or_else(|| {
                Error::Contract("product set used on a manifold that is not a product".into())
            })?;
            let zs = pm.split_point(z);
            let gs = pm.split_tangent(grad);
            let mut total = 0.0;
            for (((s, f), zi), gi) in p.parts.iter().zip(pm.parts()).zip(&zs).zip(&gs) {
                total += suboptimality_bound(f.as_ref(), s, zi, gi, mu)?;
            }
            Ok(total)
        }
    }
}

struct Side {
    point: Point,
    value: f64,
    slack: f64,
    calls: usize,
}

fn minimize_side(
    m: &dyn Manifold,
    f: &dyn Objective,
    set: &ConstraintSet,
    start: &Point,
    mu: f64,
    opts: &GapOptions,
) -> Result<Side> {
    let x0 = set.project(m, start)?;
    let rule = StoppingRule::GradNorm {
        tolerance: opts.tolerance,
        budget: opts.budget,
    };
    let (point, calls) = match prgd(m, f, set, &x0, rule) {
        Ok((p, r)) => (p, r.gradient_calls),
        Err(Error::BudgetExhausted {
            best_point, budget, ..
        }) => (*best_point, budget + 1),
        Err(e) => return Err(e),
    };
    let g = f.gradient(&point);
    let value = f.value(&point);
    if !value.is_finite() || !g.is_finite() {
        return Err(Error::Numeric(
            "gap inner solve produced a non-finite value".into(),
        ));
    }
    let slack = suboptimality_bound(m, set, &point, &g, mu)?;
    Ok(Side {
        point,
        value,
        slack,
        calls: calls + 1,
    })
}

/// `max_{y in Y} f(x_hat, y) - min_{x in X} f(x, y_hat)` by two projected
/// gradient solves, run as independent tasks.
pub fn duality_gap(
    oracle: &dyn SaddleOracle,
    x_set: &ConstraintSet,
    y_set: &ConstraintSet,
    x_hat: &Point,
    y_hat: &Point,
    opts: &GapOptions,
) -> Result<GapReport> {
    let mx = oracle.x_manifold().as_ref();
    let my = oracle.y_manifold().as_ref();
    let (mu_x, mu_y) = oracle.certified_strong_convexity();
    let (xs, ys) = opts.execution.join(
        || {
            let f = XSlice { oracle, y: y_hat };
            minimize_side(mx, &f, x_set, x_hat, mu_x, opts)
        },
        || {
            let f = NegYSlice { oracle, x: x_hat };
            minimize_side(my, &f, y_set, y_hat, mu_y, opts)
        },
    );
    let (xs, ys) = (xs?, ys?);
    let upper_value = -ys.value;
    let lower_value = xs.value;
    let gap = upper_value - lower_value;
    let roundoff = 64.0 * f64::EPSILON * (1.0 + upper_value.abs() + lower_value.abs());
    Ok(GapReport {
        gap,
        slack: xs.slack + ys.slack + roundoff,
        best_response_x: xs.point,
        best_response_y: ys.point,
        gradient_calls: xs.calls + ys.calls,
    })
}

/// Distances of one round's iterates to the reference saddle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditEntry {
    pub round: usize,
    /// `d(x_t, x*) + d(y_t, y*)` for the prox centers.
    pub secondary: f64,
    /// `d(x~_t, x*) + d(y~_t, y*)` for the played pair.
    pub played: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusAudit {
    pub radius: f64,
    pub max_secondary: f64,
    pub max_played: f64,
    /// Rounds where the secondary pair left the `2R` bound.
    pub secondary_violations: Vec<usize>,
    /// Rounds where the played pair left the `7R` bound.
    pub played_violations: Vec<usize>,
}

impl RadiusAudit {
    pub fn violations(&self) -> usize {
        self.secondary_violations.len() + self.played_violations.len()
    }
}

/// Check every round against the `2R` and `7R` bounds, where
/// `R = d(x_1, x*) + d(y_1, y*)`.
pub fn iterate_radius_audit(entries: &[AuditEntry], radius: f64) -> RadiusAudit {
    let tol = 1e-9 * (1.0 + radius);
    let mut audit = RadiusAudit {
        radius,
        max_secondary: 0.0,
        max_played: 0.0,
        secondary_violations: Vec::new(),
        played_violations: Vec::new(),
    };
    for e in entries {
        audit.max_secondary = audit.max_secondary.max(e.secondary);
        audit.max_played = audit.max_played.max(e.played);
        if !(e.secondary <= 2.0 * radius + tol) {
            audit.secondary_violations.push(e.round);
        }
        if !(e.played <= 7.0 * radius + tol) {
            audit.played_violations.push(e.round);
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::EuclideanSpace;
    use std::sync::Arc;

    #[test]
    fn ball_bound_is_zero_at_a_boundary_optimum() {
        // h(z) = -z_0 on the unit ball is minimized at (1, 0).
        let m: Arc<dyn Manifold> = Arc::new(EuclideanSpace::new(2));
        let set = ConstraintSet::ball(Point::from_slice(&[0.0, 0.0]), 1.0).unwrap();
        let z = Point::from_slice(&[1.0, 0.0]);
        let g = m.tangent(&z, nalgebra::dvector![-1.0, 0.0]).unwrap();
        let b = suboptimality_bound(m.as_ref(), &set, &z, &g, 0.0).unwrap();
        assert!(b.abs() < 1e-15, "{b}");
    }

    #[test]
    fn ball_bound_dominates_true_gap() {
        let m: Arc<dyn Manifold> = Arc::new(EuclideanSpace::new(2));
        let set = ConstraintSet::ball(Point::from_slice(&[0.0, 0.0]), 1.0).unwrap();
        for angle in [0.1f64, 0.5, 1.0, 2.0] {
            let z = Point::from_slice(&[angle.cos(), angle.sin()]);
            let g = m.tangent(&z, nalgebra::dvector![-1.0, 0.0]).unwrap();
            let truth = -angle.cos() + 1.0;
            let b = suboptimality_bound(m.as_ref(), &set, &z, &g, 0.0).unwrap();
            assert!(b >= truth - 1e-15, "{b} < {truth}");
        }
    }

    #[test]
    fn audit_flags_rounds() {
        let entries = [
            AuditEntry {
                round: 1,
                secondary: 1.0,
                played: 1.0,
            },
            AuditEntry {
                round: 2,
                secondary: 2.5,
                played: 8.0,
            },
        ];
        let a = iterate_radius_audit(&entries, 1.0);
        assert_eq!(a.secondary_violations, vec![2]);
        assert_eq!(a.played_violations, vec![2]);
        assert_eq!(a.violations(), 2);
    }
}
