//! Geodesically convex feasible sets: the whole manifold, geodesic balls
//! and their products.

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicBall {
    pub center: Point,
    pub radius: f64,
}

impl GeodesicBall {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(GeodesicBall { center, radius })
    }
}

/// One set per factor of a product manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSet {
    pub parts: Vec<ConstraintSet>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintSet {
    /// No constraint; projection is the identity.
    Whole,
    Ball(GeodesicBall),
    Product(ProductSet),
}

impl ConstraintSet {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        Ok(ConstraintSet::Ball(GeodesicBall::new(center, radius)?))
    }

    pub fn product(parts: Vec<ConstraintSet>) -> Self {
        ConstraintSet::Product(ProductSet { parts })
    }

    pub fn is_whole(&self) -> bool {
        match self {
            ConstraintSet::Whole => true,
            ConstraintSet::Ball(_) => false,
            ConstraintSet::Product(p) => p.parts.iter().all(|s| s.is_whole()),
        }
    }

    /// `None` for unbounded sets.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            ConstraintSet::Whole => None,
            ConstraintSet::Ball(b) => Some(2.0 * b.radius),
            ConstraintSet::Product(p) => p.parts.iter().map(|s| s.diameter()).sum(),
        }
    }

    fn product_factors<'m>(
        &self,
        m: &'m dyn Manifold,
        parts: &ProductSet,
    ) -> Result<&'m crate::manifolds::ProductManifold> {
        let pm = m.as_product().ok_or_else(|| {
            Error::Contract("product set used on a manifold that is not a product".into())
        })?;
        if pm.count() != parts.parts.len() {
            return Err(Error::Contract(format!(
                "product set has {} factors, manifold has {}",
                parts.parts.len(),
                pm.count()
            )));
        }
        Ok(pm)
    }

    pub fn contains(&self, m: &dyn Manifold, x: &Point, tol: f64) -> bool {
        match self {
            ConstraintSet::Whole => true,
            ConstraintSet::Ball(b) => m.dist(&b.center, x) <= b.radius + tol,
            ConstraintSet::Product(p) => match self.product_factors(m, p) {
                Ok(pm) => {
                    let xs = pm.split_point(x);
                    p.parts
                        .iter()
                        .zip(pm.parts())
                        .zip(&xs)
                        .all(|((s, f), xi)| s.contains(f.as_ref(), xi, tol))
                }
                Err(_) => false,
            },
        }
    }

    /// Metric projection; closed form for balls, componentwise for products.
    pub fn project(&self, m: &dyn Manifold, x: &Point) -> Result<Point> {
        match self {
            ConstraintSet::Whole => Ok(x.clone()),
            ConstraintSet::Ball(b) => {
                let d = m.dist(&b.center, x);
                if d <= b.radius {
                    return Ok(x.clone());
                }
                let dir = m.log(&b.center, x).scale(b.radius / d);
                m.exp(&b.center, &dir)
            }
            ConstraintSet::Product(p) => {
                let pm = self.product_factors(m, p)?;
                let xs = pm.split_point(x);
                let projected = p
                    .parts
                    .iter()
                    .zip(pm.parts())
                    .zip(&xs)
                    .map(|((s, f), xi)| s.project(f.as_ref(), xi))
                    .collect::<Result<Vec<_>>>()?;
                Ok(pm.join_points(&projected))
            }
        }
    }

    pub fn as_ball(&self) -> Option<&GeodesicBall> {
        match self {
            ConstraintSet::Ball(b) => Some(b),
            _ => None,
        }
    }
}
