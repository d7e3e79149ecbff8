//! Objective oracles: value, Riemannian gradient and declared constants.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{zeta, Manifold, Point, Tangent};
use crate::manifolds::linalg::sym_eig;

/// A differentiable function on a manifold together with the constants the
/// solvers rely on. The declared smoothness and strong convexity must hold
/// on the region the solver visits; nothing checks them at runtime.
pub trait Objective: Send + Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Tangent;
    fn smoothness(&self) -> f64;

    fn strong_convexity(&self) -> f64 {
        0.0
    }

    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// `Some((c, w))` when the objective is exactly `(w/2) d(., c)^2`.
    fn as_squared_distance(&self) -> Option<(&Point, f64)> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for Arc<T> {
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point) -> Tangent {
        (**self).gradient(x)
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
    fn strong_convexity(&self) -> f64 {
        (**self).strong_convexity()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn as_squared_distance(&self) -> Option<(&Point, f64)> {
        (**self).as_squared_distance()
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point) -> Tangent {
        (**self).gradient(x)
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
    fn strong_convexity(&self) -> f64 {
        (**self).strong_convexity()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn as_squared_distance(&self) -> Option<(&Point, f64)> {
        (**self).as_squared_distance()
    }
}

/// `(w/2) d(x, anchor)^2`.
///
/// On a Hadamard manifold this is `w`-strongly g-convex everywhere and
/// `w zeta(r)`-smooth on the ball of radius `r` around the anchor, so the
/// smoothness has to be declared for the region of interest.
#[derive(Clone)]
pub struct SquaredDistance {
    manifold: Arc<dyn Manifold>,
    anchor: Point,
    weight: f64,
    smoothness: f64,
    lipschitz: Option<f64>,
}

impl SquaredDistance {
    /// Smoothness defaults to `weight`, exact on flat spaces.
    pub fn new(manifold: Arc<dyn Manifold>, anchor: Point, weight: f64) -> Self {
        SquaredDistance {
            manifold,
            anchor,
            weight,
            smoothness: weight,
            lipschitz: None,
        }
    }

    /// Declare smoothness and Lipschitz constants valid for points within
    /// `radius` of the anchor.
    pub fn within(mut self, radius: f64) -> Result<Self> {
        let z = zeta(radius, self.manifold.curvature().kmin())?;
        self.smoothness = self.weight * z;
        self.lipschitz = Some(self.weight * radius);
        Ok(self)
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn manifold(&self) -> &Arc<dyn Manifold> {
        &self.manifold
    }
}

impl fmt::Debug for SquaredDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SquaredDistance")
            .field("manifold", &self.manifold.name())
            .field("weight", &self.weight)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl Objective for SquaredDistance {
    fn value(&self, x: &Point) -> f64 {
        let d = self.manifold.dist(x, &self.anchor);
        0.5 * self.weight * d * d
    }

    fn gradient(&self, x: &Point) -> Tangent {
        self.manifold.log(x, &self.anchor).scale(-self.weight)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.weight.max(0.0)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    fn as_squared_distance(&self) -> Option<(&Point, f64)> {
        Some((&self.anchor, self.weight))
    }
}

/// The zero function.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl Objective for Zero {
    fn value(&self, _: &Point) -> f64 {
        0.0
    }

    fn gradient(&self, x: &Point) -> Tangent {
        Tangent::zero(x)
    }

    fn smoothness(&self) -> f64 {
        0.0
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }

    fn as_squared_distance(&self) -> Option<(&Point, f64)> {
        None
    }
}

/// Nonnegative combination `sum_i w_i f_i`.
#[derive(Clone, Default)]
pub struct Sum {
    terms: Vec<(f64, Arc<dyn Objective>)>,
}

impl Sum {
    pub fn new() -> Self {
        Sum::default()
    }

    pub fn push(&mut self, weight: f64, f: Arc<dyn Objective>) {
        self.terms.push((weight, f));
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl Objective for Sum {
    fn value(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(w, f)| w * f.value(x)).sum()
    }

    fn gradient(&self, x: &Point) -> Tangent {
        let mut acc = DVector::zeros(x.len());
        for (w, f) in &self.terms {
            acc += f.gradient(x).coords() * *w;
        }
        Tangent::new(x.clone(), acc)
    }

    fn smoothness(&self) -> f64 {
        self.terms
            .iter()
            .map(|(w, f)| w.abs() * f.smoothness())
            .sum()
    }

    fn strong_convexity(&self) -> f64 {
        self.terms
            .iter()
            .map(|(w, f)| w * f.strong_convexity())
            .sum()
    }

    fn lipschitz(&self) -> Option<f64> {
        self.terms
            .iter()
            .map(|(w, f)| f.lipschitz().map(|l| w.abs() * l))
            .sum()
    }
}

/// The proximal objective `loss(x) + d(x, center)^2 / (2 eta)`.
pub struct ProxObjective<'a> {
    pub manifold: &'a dyn Manifold,
    pub loss: &'a dyn Objective,
    pub center: &'a Point,
    pub eta: f64,
    /// Smoothness factor of the distance term on the region of interest.
    pub zeta: f64,
}

impl ProxObjective<'_> {
    /// Gradient of the loss and of the whole objective at `x`, sharing the
    /// single loss evaluation.
    pub fn gradients(&self, x: &Point) -> (Tangent, Tangent) {
        let lg = self.loss.gradient(x);
        let pull = self.manifold.log_coords(x.coords(), self.center.coords());
        let total = Tangent::new(x.clone(), lg.coords() - pull / self.eta);
        (lg, total)
    }
}

impl Objective for ProxObjective<'_> {
    fn value(&self, x: &Point) -> f64 {
        let d = self.manifold.dist(x, self.center);
        self.loss.value(x) + d * d / (2.0 * self.eta)
    }

    fn gradient(&self, x: &Point) -> Tangent {
        self.gradients(x).1
    }

    fn smoothness(&self) -> f64 {
        self.loss.smoothness() + self.zeta / self.eta
    }

    fn strong_convexity(&self) -> f64 {
        self.loss.strong_convexity() + 1.0 / self.eta
    }
}

/// An objective assembled from closures, mainly for tests and examples.
pub struct FnObjective<V, G> {
    value: V,
    gradient: G,
    smoothness: f64,
    strong_convexity: f64,
}

impl<V, G> FnObjective<V, G>
where
    V: Fn(&Point) -> f64 + Send + Sync,
    G: Fn(&Point) -> Tangent + Send + Sync,
{
    pub fn new(value: V, gradient: G, smoothness: f64, strong_convexity: f64) -> Self {
        FnObjective {
            value,
            gradient,
            smoothness,
            strong_convexity,
        }
    }
}

impl<V, G> Objective for FnObjective<V, G>
where
    V: Fn(&Point) -> f64 + Send + Sync,
    G: Fn(&Point) -> Tangent + Send + Sync,
{
    fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Point) -> Tangent {
        (self.gradient)(x)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}

/// Euclidean quadratic `(1/2)(x - c)^T A (x - c)` with `A` symmetric
/// positive semidefinite.
#[derive(Clone, Debug)]
pub struct Quadratic {
    a: DMatrix<f64>,
    center: DVector<f64>,
    smoothness: f64,
    strong_convexity: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != center.len() {
            return Err(Error::Contract("quadratic: shape mismatch".into()));
        }
        let eig = sym_eig(&a);
        let lo = eig.min_value();
        if lo < -1e-12 {
            return Err(Error::Domain(format!(
                "quadratic form is not positive semidefinite (eigenvalue {lo:e})"
            )));
        }
        let hi = eig.values.max();
        Ok(Quadratic {
            a,
            center,
            smoothness: hi,
            strong_convexity: lo.max(0.0),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn minimizer(&self) -> Point {
        Point::new(self.center.clone())
    }
}

impl Objective for Quadratic {
    fn value(&self, x: &Point) -> f64 {
        let r = x.coords() - &self.center;
        0.5 * r.dot(&(&self.a * &r))
    }

    fn gradient(&self, x: &Point) -> Tangent {
        let r = x.coords() - &self.center;
        Tangent::new(x.clone(), &self.a * r)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::finite_diff_central;
    use crate::manifolds::{EuclideanSpace, HyperbolicSpace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn squared_distance_gradient_matches_finite_differences() {
        let m: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(3));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = m.random_point(&mut rng);
            let x = m.random_point(&mut rng);
            let f = SquaredDistance::new(m.clone(), a, 1.7);
            let v = m.random_unit_tangent(&x, &mut rng);
            let fd = finite_diff_central(m.as_ref(), &f, &x, &v, 1e-6).unwrap();
            let g = m.inner(&x, &f.gradient(&x), &v).unwrap();
            assert!((fd - g).abs() < 1e-5 * (1.0 + g.abs()), "{fd} vs {g}");
        }
    }

    #[test]
    fn within_declares_zeta_smoothness() {
        let m: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(2));
        let f = SquaredDistance::new(m.clone(), m.reference_point(), 2.0)
            .within(1.0)
            .unwrap();
        assert!((f.smoothness() - 2.0 * zeta(1.0, -1.0).unwrap()).abs() < 1e-15);
        assert_eq!(f.lipschitz(), Some(2.0));
    }

    #[test]
    fn prox_objective_adds_pull() {
        let m = EuclideanSpace::new(1);
        let c = Point::from_slice(&[1.0]);
        let p = ProxObjective {
            manifold: &m,
            loss: &Zero,
            center: &c,
            eta: 0.5,
            zeta: 1.0,
        };
        let x = Point::from_slice(&[3.0]);
        assert_eq!(p.value(&x), 4.0);
        assert_eq!(p.gradient(&x).coords()[0], 4.0);
        assert_eq!(p.smoothness(), 2.0);
        assert_eq!(p.strong_convexity(), 2.0);
    }

    #[test]
    fn quadratic_constants() {
        let q = Quadratic::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])),
            DVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap();
        assert_eq!(q.smoothness(), 4.0);
        assert_eq!(q.strong_convexity(), 1.0);
        assert_eq!(q.value(&Point::from_slice(&[2.0, 2.0])), 2.5);
    }
}
