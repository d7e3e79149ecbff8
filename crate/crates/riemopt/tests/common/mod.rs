#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use riemopt::geometry::finite_diff_central;
use riemopt::prelude::*;
use riemopt::rioda::problems::{BusemannSaddle, QuadraticSaddle};

/// `|fd - <grad, v>| / (|grad| |v| + 1e-12)` for a unit-scale direction `v`.
pub fn fd_relative_error(m: &dyn Manifold, f: &dyn Objective, x: &Point, v: &Tangent) -> f64 {
    let fd = finite_diff_central(m, f, x, v, 1e-5).unwrap();
    let g = f.gradient(x);
    let an = m.inner(x, &g, v).unwrap();
    (fd - an).abs() / (m.norm(&g) * m.norm(v) + 1e-12)
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn origin(dim: usize) -> Point {
    Point::new(DVector::zeros(dim))
}

/// Fixed bilinear game on `R^2 x R^2` with saddle at the origin.
pub fn euclidean_bilinear() -> QuadraticSaddle {
    QuadraticSaddle::bilinear(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8])).unwrap()
}

pub const BUSEMANN_LEVEL: f64 = 0.5;
pub const BUSEMANN_Y_RADIUS: f64 = 0.25;

/// `H^10 x R^3` Busemann saddle over the unit ball around the apex and a
/// small ball around the diagonal level.
pub fn busemann_on_balls(mu_x: f64, mu_y: f64) -> (BusemannSaddle, ConstraintSet, ConstraintSet) {
    let s = BusemannSaddle::new(10, mu_x, mu_y, BUSEMANN_LEVEL, 1.0, BUSEMANN_Y_RADIUS).unwrap();
    let xs = ConstraintSet::ball(s.apex(), 1.0).unwrap();
    let ys = ConstraintSet::ball(
        Point::new(DVector::from_element(3, BUSEMANN_LEVEL)),
        BUSEMANN_Y_RADIUS,
    )
    .unwrap();
    (s, xs, ys)
}

/// A point at distance `r` from `x` in a random direction.
pub fn at_distance(m: &dyn Manifold, x: &Point, r: f64, rng: &mut impl Rng) -> Point {
    let v = m.random_unit_tangent(x, rng).scale(r);
    m.exp(x, &v).unwrap()
}

pub fn manifolds() -> Vec<Arc<dyn Manifold>> {
    vec![
        Arc::new(EuclideanSpace::new(6)),
        Arc::new(HyperbolicSpace::new(10)),
        Arc::new(SpdManifold::new(4)),
    ]
}
