//! Saddle problems with known solutions, used by tests and the CLI.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{zeta, Manifold, Point, Tangent};
use crate::manifolds::{minkowski, EuclideanSpace, HyperbolicSpace};

use super::saddle::SaddleOracle;

/// `f = 0` on a pair of manifolds, declared 1-smooth.
pub struct ZeroSaddle {
    mx: Arc<dyn Manifold>,
    my: Arc<dyn Manifold>,
}

impl ZeroSaddle {
    pub fn new(mx: Arc<dyn Manifold>, my: Arc<dyn Manifold>) -> Self {
        ZeroSaddle { mx, my }
    }

    pub fn euclidean(dx: usize, dy: usize) -> Self {
        ZeroSaddle::new(
            Arc::new(EuclideanSpace::new(dx)),
            Arc::new(EuclideanSpace::new(dy)),
        )
    }
}

impl SaddleOracle for ZeroSaddle {
    fn x_manifold(&self) -> &Arc<dyn Manifold> {
        &self.mx
    }
    fn y_manifold(&self) -> &Arc<dyn Manifold> {
        &self.my
    }
    fn value(&self, _x: &Point, _y: &Point) -> f64 {
        0.0
    }
    fn grad_x(&self, x: &Point, _y: &Point) -> Tangent {
        Tangent::zero(x)
    }
    fn grad_y(&self, _x: &Point, y: &Point) -> Tangent {
        Tangent::zero(y)
    }
    fn smoothness(&self) -> f64 {
        1.0
    }
}

/// `(mu_x/2)|x - a|^2 + x^T B y - (mu_y/2)|y - b|^2` on `R^p x R^q`.
pub struct QuadraticSaddle {
    mx: Arc<dyn Manifold>,
    my: Arc<dyn Manifold>,
    pub mu_x: f64,
    pub mu_y: f64,
    pub coupling: DMatrix<f64>,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    smoothness: f64,
}

impl QuadraticSaddle {
    pub fn new(
        mu_x: f64,
        mu_y: f64,
        coupling: DMatrix<f64>,
        a: DVector<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        if coupling.nrows() != a.len() || coupling.ncols() != b.len() {
            return Err(Error::Domain(format!(
                "coupling is {}x{} but the centers have lengths {} and {}",
                coupling.nrows(),
                coupling.ncols(),
                a.len(),
                b.len()
            )));
        }
        if !(mu_x >= 0.0 && mu_y >= 0.0) {
            return Err(Error::Domain("moduli must be nonnegative".into()));
        }
        let sigma = coupling.clone().singular_values().max();
        let smoothness = mu_x.max(mu_y).max(sigma);
        if !(smoothness > 0.0) {
            return Err(Error::Domain(
                "the saddle function is identically zero".into(),
            ));
        }
        Ok(QuadraticSaddle {
            mx: Arc::new(EuclideanSpace::new(a.len())),
            my: Arc::new(EuclideanSpace::new(b.len())),
            mu_x,
            mu_y,
            coupling,
            a,
            b,
            smoothness,
        })
    }

    /// Bilinear `x^T B y` with no quadratic terms.
    pub fn bilinear(coupling: DMatrix<f64>) -> Result<Self> {
        let (p, q) = coupling.shape();
        QuadraticSaddle::new(0.0, 0.0, coupling, DVector::zeros(p), DVector::zeros(q))
    }

    /// The unconstrained stationary point, when the linear system is regular.
    pub fn saddle(&self) -> Option<(Point, Point)> {
        let (p, q) = self.coupling.shape();
        let mut k = DMatrix::zeros(p + q, p + q);
        let mut rhs = DVector::zeros(p + q);
        for i in 0..p {
            k[(i, i)] = self.mu_x;
            rhs[i] = self.mu_x * self.a[i];
        }
        for j in 0..q {
            k[(p + j, p + j)] = -self.mu_y;
            rhs[p + j] = -self.mu_y * self.b[j];
        }
        k.view_mut((0, p), (p, q)).copy_from(&self.coupling);
        k.view_mut((p, 0), (q, p))
            .copy_from(&self.coupling.transpose());
        let z = k.lu().solve(&rhs)?;
        Some((
            Point::new(z.rows(0, p).into_owned()),
            Point::new(z.rows(p, q).into_owned()),
        ))
    }
}

impl SaddleOracle for QuadraticSaddle {
    fn x_manifold(&self) -> &Arc<dyn Manifold> {
        &self.mx
    }
    fn y_manifold(&self) -> &Arc<dyn Manifold> {
        &self.my
    }
    fn value(&self, x: &Point, y: &Point) -> f64 {
        let (x, y) = (x.coords(), y.coords());
        0.5 * self.mu_x * (x - &self.a).norm_squared() + x.dot(&(&self.coupling * y))
            - 0.5 * self.mu_y * (y - &self.b).norm_squared()
    }
    fn grad_x(&self, x: &Point, y: &Point) -> Tangent {
        let g = (x.coords() - &self.a) * self.mu_x + &self.coupling * y.coords();
        Tangent::new(x.clone(), g)
    }
    fn grad_y(&self, x: &Point, y: &Point) -> Tangent {
        let g = self.coupling.tr_mul(x.coords()) - (y.coords() - &self.b) * self.mu_y;
        Tangent::new(y.clone(), g)
    }
    fn smoothness(&self) -> f64 {
        self.smoothness
    }
    fn strong_convexity(&self) -> (f64, f64) {
        (self.mu_x, self.mu_y)
    }
}

/// A hyperbolic saddle coupled through Busemann functions:
///
/// `f(x, y) = (mu_x/2) d(x, o)^2 + sum_j y_j b_j(x) - (mu_y/2)|y - c 1|^2`
///
/// on `H^d x R^3`, where `o` is the hyperboloid apex and `b_j` are the
/// Busemann functions of three ideal points spaced evenly on the boundary
/// circle of the first two coordinates. Each `b_j` vanishes at `o`, is
/// convex with unit gradient, and their gradients at `o` sum to zero, so
/// `(o, c 1)` is a saddle whenever the weights stay positive. With
/// `mu_y = 0` every `(o, s 1)` is a saddle.
pub struct BusemannSaddle {
    mx: Arc<dyn Manifold>,
    my: Arc<dyn Manifold>,
    pub mu_x: f64,
    pub mu_y: f64,
    pub level: f64,
    ideal: Vec<DVector<f64>>,
    smoothness: f64,
}

impl BusemannSaddle {
    /// `x_radius` and `y_radius` bound the region around the saddle where
    /// the declared smoothness must hold.
    pub fn new(
        dim: usize,
        mu_x: f64,
        mu_y: f64,
        level: f64,
        x_radius: f64,
        y_radius: f64,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(
                "the hyperbolic factor needs dimension >= 2".into(),
            ));
        }
        if !(level > y_radius && mu_x >= 0.0 && mu_y >= 0.0) {
            return Err(Error::Domain(
                "weights must stay positive: need level > y_radius and nonnegative moduli".into(),
            ));
        }
        let ideal = (0..3)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / 3.0;
                let mut v = DVector::zeros(dim + 1);
                v[0] = 1.0;
                v[1] = a.cos();
                v[2] = a.sin();
                v
            })
            .collect();
        let weight_sum = 3.0 * level + 3f64.sqrt() * y_radius;
        let smoothness = (mu_x * zeta(x_radius, -1.0)? + weight_sum)
            .max(mu_y)
            .max(3f64.sqrt());
        Ok(BusemannSaddle {
            mx: Arc::new(HyperbolicSpace::new(dim)),
            my: Arc::new(EuclideanSpace::new(3)),
            mu_x,
            mu_y,
            level,
            ideal,
            smoothness,
        })
    }

    /// Declare a larger smoothness constant, e.g. to fix the ratio `L / mu`.
    pub fn with_smoothness(mut self, smoothness: f64) -> Result<Self> {
        if !(smoothness >= self.smoothness) {
            return Err(Error::Domain(format!(
                "smoothness {smoothness} is below the proven bound {}",
                self.smoothness
            )));
        }
        self.smoothness = smoothness;
        Ok(self)
    }

    pub fn apex(&self) -> Point {
        self.mx.reference_point()
    }

    /// The saddle closest to `y` along the diagonal (exact when `mu_y > 0`).
    pub fn saddle_near(&self, y: &Point) -> (Point, Point) {
        let s = if self.mu_y > 0.0 {
            self.level
        } else {
            y.coords().sum() / 3.0
        };
        (self.apex(), Point::new(DVector::from_element(3, s)))
    }

    fn busemann(&self, x: &Point) -> DVector<f64> {
        DVector::from_iterator(
            3,
            self.ideal
                .iter()
                .map(|xi| (-minkowski(x.coords(), xi)).ln()),
        )
    }
}

impl SaddleOracle for BusemannSaddle {
    fn x_manifold(&self) -> &Arc<dyn Manifold> {
        &self.mx
    }
    fn y_manifold(&self) -> &Arc<dyn Manifold> {
        &self.my
    }
    fn value(&self, x: &Point, y: &Point) -> f64 {
        let d = self.mx.dist(x, &self.apex());
        let shift = y.coords().add_scalar(-self.level);
        0.5 * self.mu_x * d * d + y.coords().dot(&self.busemann(x))
            - 0.5 * self.mu_y * shift.norm_squared()
    }
    fn grad_x(&self, x: &Point, y: &Point) -> Tangent {
        let xc = x.coords();
        let mut g = self.mx.log(x, &self.apex()).into_parts().1 * (-self.mu_x);
        for (xi, w) in self.ideal.iter().zip(y.coords().iter()) {
            g += (xi / minkowski(xc, xi) + xc) * *w;
        }
        let g = self.mx.project_tangent_coords(xc, g);
        Tangent::new(x.clone(), g)
    }
    fn grad_y(&self, x: &Point, y: &Point) -> Tangent {
        let g = self.busemann(x) - y.coords().add_scalar(-self.level) * self.mu_y;
        Tangent::new(y.clone(), g)
    }
    fn smoothness(&self) -> f64 {
        self.smoothness
    }
    fn strong_convexity(&self) -> (f64, f64) {
        (self.mu_x, self.mu_y)
    }
}
