//! Saddle oracles and their one-sided slices.

use std::sync::Arc;

use crate::geometry::{Manifold, Point, Tangent};
use crate::oracle::Objective;

/// A smooth function `f(x, y)`, g-convex in `x` and g-concave in `y`.
pub trait SaddleOracle: Send + Sync {
    fn x_manifold(&self) -> &Arc<dyn Manifold>;
    fn y_manifold(&self) -> &Arc<dyn Manifold>;
    fn value(&self, x: &Point, y: &Point) -> f64;
    fn grad_x(&self, x: &Point, y: &Point) -> Tangent;
    fn grad_y(&self, x: &Point, y: &Point) -> Tangent;
    /// Common Lipschitz constant of `grad_x` and `grad_y` in each argument
    /// separately.
    fn smoothness(&self) -> f64;

    /// Declared moduli `(mu_x, mu_y)` used by the step-size schedule.
    fn strong_convexity(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    /// Moduli that are guaranteed on the whole feasible region, used for
    /// gap certificates. Defaults to the declared ones.
    fn certified_strong_convexity(&self) -> (f64, f64) {
        self.strong_convexity()
    }

    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Number of factors of `y_manifold` over which the `y` side separates.
    /// When above 1, the block methods below must be implemented.
    fn y_blocks(&self) -> usize {
        1
    }

    fn value_y_block(&self, _x: &Point, _yi: &Point, _i: usize) -> f64 {
        unimplemented!("oracle does not separate over y blocks")
    }

    fn grad_y_block(&self, _x: &Point, _yi: &Point, _i: usize) -> Tangent {
        unimplemented!("oracle does not separate over y blocks")
    }

    /// The modulus `min(mu_x, mu_y)` that selects the schedule.
    fn mu(&self) -> f64 {
        let (a, b) = self.strong_convexity();
        a.min(b).max(0.0)
    }
}

/// `x -> f(x, y)` for fixed `y`.
pub struct XSlice<'a> {
    pub oracle: &'a dyn SaddleOracle,
    pub y: &'a Point,
}

impl Objective for XSlice<'_> {
    fn value(&self, x: &Point) -> f64 {
        self.oracle.value(x, self.y)
    }

    fn gradient(&self, x: &Point) -> Tangent {
        self.oracle.grad_x(x, self.y)
    }

    fn smoothness(&self) -> f64 {
        self.oracle.smoothness()
    }

    fn strong_convexity(&self) -> f64 {
        self.oracle.strong_convexity().0.max(0.0)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.oracle.lipschitz()
    }
}

/// `y -> -f(x, y)` for fixed `x`; maximizing `f` is minimizing this.
pub struct NegYSlice<'a> {
    pub oracle: &'a dyn SaddleOracle,
    pub x: &'a Point,
}

impl Objective for NegYSlice<'_> {
    fn value(&self, y: &Point) -> f64 {
        -self.oracle.value(self.x, y)
    }

    fn gradient(&self, y: &Point) -> Tangent {
        self.oracle.grad_y(self.x, y).scale(-1.0)
    }

    fn smoothness(&self) -> f64 {
        self.oracle.smoothness()
    }

    fn strong_convexity(&self) -> f64 {
        self.oracle.strong_convexity().1.max(0.0)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.oracle.lipschitz()
    }
}

/// Block `i` of [`NegYSlice`] for separable oracles.
pub struct NegYBlock<'a> {
    pub oracle: &'a dyn SaddleOracle,
    pub x: &'a Point,
    pub block: usize,
}

impl Objective for NegYBlock<'_> {
    fn value(&self, yi: &Point) -> f64 {
        -self.oracle.value_y_block(self.x, yi, self.block)
    }

    fn gradient(&self, yi: &Point) -> Tangent {
        self.oracle.grad_y_block(self.x, yi, self.block).scale(-1.0)
    }

    fn smoothness(&self) -> f64 {
        self.oracle.smoothness()
    }

    fn strong_convexity(&self) -> f64 {
        self.oracle.strong_convexity().1.max(0.0)
    }
}
