//! Points, tangent vectors, the [`Manifold`] trait and the curvature constants.
//!
//! Every manifold stores points in ambient coordinates as a flat vector. A
//! [`Tangent`] carries a copy of its base point so that mixing vectors from
//! different tangent spaces is caught at the call site.

use std::fmt;

use nalgebra::DVector;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::manifolds::ProductManifold;
use crate::oracle::Objective;

/// Tolerance for membership and tangency checks.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Drift above this triggers renormalization after exp/transport.
pub const DRIFT_TOL: f64 = 1e-12;
/// Below this distance `log` returns the exact zero vector.
pub const COINCIDENT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
}

impl Point {
    pub fn new(coords: DVector<f64>) -> Self {
        Point { coords }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point::new(DVector::from_column_slice(coords))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Same point up to a relative 1e-12 coordinate tolerance.
    pub fn same_as(&self, other: &Point) -> bool {
        if self.coords.len() != other.coords.len() {
            return false;
        }
        let scale = 1.0 + self.coords.amax().max(other.coords.amax());
        self.coords
            .iter()
            .zip(other.coords.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-12 * scale)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    base: Point,
    coords: DVector<f64>,
}

impl Tangent {
    pub fn new(base: Point, coords: DVector<f64>) -> Self {
        Tangent { base, coords }
    }

    pub fn zero(base: &Point) -> Self {
        Tangent {
            coords: DVector::zeros(base.len()),
            base: base.clone(),
        }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_parts(self) -> (Point, DVector<f64>) {
        (self.base, self.coords)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, s: f64) -> Tangent {
        Tangent {
            base: self.base.clone(),
            coords: &self.coords * s,
        }
    }

    pub fn scale_mut(&mut self, s: f64) {
        self.coords *= s;
    }

    /// `self + s * other`; both vectors must share a base point.
    pub fn axpy(&self, s: f64, other: &Tangent) -> Result<Tangent> {
        check_same_base(&self.base, &other.base)?;
        Ok(Tangent {
            base: self.base.clone(),
            coords: &self.coords + &other.coords * s,
        })
    }

    pub fn add(&self, other: &Tangent) -> Result<Tangent> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Tangent) -> Result<Tangent> {
        self.axpy(-1.0, other)
    }
}

fn check_same_base(a: &Point, b: &Point) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::Contract(
            "tangent vectors are anchored at different base points".into(),
        ))
    }
}

/// Sectional curvature range `[kmin, kmax]` with `kmin <= kmax <= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureBounds {
    kmin: f64,
    kmax: f64,
}

impl CurvatureBounds {
    pub fn new(kmin: f64, kmax: f64) -> Result<Self> {
        if !(kmin.is_finite() && kmax.is_finite()) || kmin > kmax {
            return Err(Error::Domain(format!(
                "curvature bounds must satisfy kmin <= kmax, got [{kmin}, {kmax}]"
            )));
        }
        if kmax > 0.0 {
            return Err(Error::UnsupportedGeometry(format!(
                "positive curvature upper bound {kmax}"
            )));
        }
        Ok(CurvatureBounds { kmin, kmax })
    }

    pub fn flat() -> Self {
        CurvatureBounds {
            kmin: 0.0,
            kmax: 0.0,
        }
    }

    pub fn kmin(&self) -> f64 {
        self.kmin
    }

    pub fn kmax(&self) -> f64 {
        self.kmax
    }
}

/// The distortion constants at a given radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricConstants {
    pub zeta: f64,
    pub delta: f64,
    pub radius: f64,
}

impl GeometricConstants {
    pub fn at(radius: f64, bounds: CurvatureBounds) -> Result<Self> {
        Ok(GeometricConstants {
            zeta: zeta(radius, bounds.kmin)?,
            delta: delta(radius, bounds.kmax)?,
            radius,
        })
    }
}

/// `x coth x` evaluated as `r sqrt|kmin| coth(r sqrt|kmin|)`; 1 when `kmin >= 0`.
pub fn zeta(r: f64, kmin: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("zeta radius must be >= 0, got {r}")));
    }
    Ok(zeta_unchecked(r, kmin))
}

pub(crate) fn zeta_unchecked(r: f64, kmin: f64) -> f64 {
    if kmin >= 0.0 {
        return 1.0;
    }
    let x = r * (-kmin).sqrt();
    if x < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else if x > 20.0 {
        x
    } else {
        x / x.tanh()
    }
}

/// Lower distortion constant; identically 1 on nonpositively curved spaces.
pub fn delta(r: f64, kmax: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::Domain(format!("delta radius must be >= 0, got {r}")));
    }
    if kmax > 0.0 {
        return Err(Error::UnsupportedGeometry(format!(
            "positive curvature upper bound {kmax}"
        )));
    }
    Ok(1.0)
}

/// A complete, simply connected manifold of nonpositive curvature in
/// ambient coordinates.
///
/// Implementors provide the `*_coords` kernels on raw coordinate vectors.
/// The provided methods wrap them with base-point checks and are what the
/// solvers call.
pub trait Manifold: Send + Sync + fmt::Debug {
    /// Short tag such as `hyperbolic:10`.
    fn name(&self) -> String;
    /// Intrinsic dimension.
    fn dim(&self) -> usize;
    /// Length of the coordinate vector of a point.
    fn ambient_len(&self) -> usize;
    fn curvature(&self) -> CurvatureBounds;

    /// How far `x` is from satisfying the membership equation.
    fn membership_error(&self, x: &DVector<f64>) -> f64;
    /// How far `v` is from the tangent space at `x`.
    fn tangent_error(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64;
    /// Pull a drifted point back onto the manifold.
    fn repair_coords(&self, x: DVector<f64>) -> DVector<f64>;
    /// Project an ambient vector onto the tangent space at `x`.
    fn project_tangent_coords(&self, x: &DVector<f64>, v: DVector<f64>) -> DVector<f64>;

    fn inner_coords(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64;
    fn exp_coords(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>;
    fn log_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64>;
    fn dist_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64;
    fn transport_coords(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64>;
    /// Riemannian gradient at `y` of `y -> <v, log_x(y)>_x`, for `v` tangent at `x`.
    fn log_pairing_gradient_coords(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        y: &DVector<f64>,
    ) -> DVector<f64>;

    /// A fixed reference point: origin, apex or identity.
    fn reference_coords(&self) -> DVector<f64>;
    fn random_point_coords(&self, rng: &mut dyn RngCore) -> DVector<f64>;
    /// A random nonzero tangent vector at `x`, not normalized.
    fn random_tangent_coords(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64>;

    fn as_product(&self) -> Option<&ProductManifold> {
        None
    }

    /// True when the metric is the flat Euclidean one everywhere.
    fn is_flat(&self) -> bool {
        false
    }

    // Checked wrappers.

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.ambient_len() {
            return Err(Error::Contract(format!(
                "{}: point has {} coordinates, expected {}",
                self.name(),
                x.len(),
                self.ambient_len()
            )));
        }
        let err = self.membership_error(x.coords());
        if !(err <= MEMBERSHIP_TOL * (1.0 + x.coords().amax())) {
            return Err(Error::Contract(format!(
                "{}: point violates membership by {err:e}",
                self.name()
            )));
        }
        Ok(())
    }

    fn check_tangent(&self, v: &Tangent) -> Result<()> {
        self.check_point(v.base())?;
        if v.coords().len() != self.ambient_len() {
            return Err(Error::Contract(format!(
                "{}: tangent has {} coordinates, expected {}",
                self.name(),
                v.coords().len(),
                self.ambient_len()
            )));
        }
        let err = self.tangent_error(v.base().coords(), v.coords());
        let scale = 1.0 + v.coords().amax() * (1.0 + v.base().coords().amax());
        if !(err <= MEMBERSHIP_TOL * scale) {
            return Err(Error::Contract(format!(
                "{}: vector leaves the tangent space by {err:e}",
                self.name()
            )));
        }
        Ok(())
    }

    fn point(&self, coords: DVector<f64>) -> Result<Point> {
        let p = Point::new(coords);
        self.check_point(&p)?;
        Ok(p)
    }

    fn tangent(&self, base: &Point, coords: DVector<f64>) -> Result<Tangent> {
        let v = Tangent::new(base.clone(), coords);
        self.check_tangent(&v)?;
        Ok(v)
    }

    fn reference_point(&self) -> Point {
        Point::new(self.reference_coords())
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> Point {
        Point::new(self.random_point_coords(rng))
    }

    fn random_unit_tangent(&self, x: &Point, rng: &mut dyn RngCore) -> Tangent {
        loop {
            let v = self.random_tangent_coords(x.coords(), rng);
            let n = self.inner_coords(x.coords(), &v, &v).sqrt();
            if n > 1e-8 && n.is_finite() {
                return Tangent::new(x.clone(), v / n);
            }
        }
    }

    fn inner(&self, x: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        check_same_base(x, u.base())?;
        check_same_base(x, v.base())?;
        Ok(self.inner_coords(x.coords(), u.coords(), v.coords()))
    }

    fn norm(&self, v: &Tangent) -> f64 {
        self.inner_coords(v.base().coords(), v.coords(), v.coords())
            .max(0.0)
            .sqrt()
    }

    fn exp(&self, x: &Point, v: &Tangent) -> Result<Point> {
        check_same_base(x, v.base())?;
        Ok(Point::new(self.exp_coords(x.coords(), v.coords())))
    }

    /// `exp` at the vector's own base point.
    fn exp_from(&self, v: &Tangent) -> Point {
        Point::new(self.exp_coords(v.base().coords(), v.coords()))
    }

    fn log(&self, x: &Point, y: &Point) -> Tangent {
        Tangent::new(x.clone(), self.log_coords(x.coords(), y.coords()))
    }

    fn dist(&self, x: &Point, y: &Point) -> f64 {
        self.dist_coords(x.coords(), y.coords())
    }

    fn transport(&self, x: &Point, y: &Point, v: &Tangent) -> Result<Tangent> {
        check_same_base(x, v.base())?;
        Ok(Tangent::new(
            y.clone(),
            self.transport_coords(x.coords(), y.coords(), v.coords()),
        ))
    }

    fn log_pairing_gradient(&self, x: &Point, v: &Tangent, y: &Point) -> Result<Tangent> {
        check_same_base(x, v.base())?;
        Ok(Tangent::new(
            y.clone(),
            self.log_pairing_gradient_coords(x.coords(), v.coords(), y.coords()),
        ))
    }

    fn geodesic_point(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!(
                "geodesic parameter {t} outside [0, 1]"
            )));
        }
        if t == 0.0 {
            return Ok(x.clone());
        }
        if t == 1.0 {
            return Ok(y.clone());
        }
        let v = self.log_coords(x.coords(), y.coords()) * t;
        Ok(Point::new(self.exp_coords(x.coords(), &v)))
    }
}

/// Forward difference `(f(exp(x, h v)) - f(x)) / h`.
pub fn finite_diff_directional(
    m: &dyn Manifold,
    f: &dyn Objective,
    x: &Point,
    v: &Tangent,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let xh = m.exp(x, &v.scale(h))?;
    Ok((f.value(&xh) - f.value(x)) / h)
}

/// Central difference `(f(exp(x, h v)) - f(exp(x, -h v))) / 2h`.
pub fn finite_diff_central(
    m: &dyn Manifold,
    f: &dyn Objective,
    x: &Point,
    v: &Tangent,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let plus = m.exp(x, &v.scale(h))?;
    let minus = m.exp(x, &v.scale(-h))?;
    Ok((f.value(&plus) - f.value(&minus)) / (2.0 * h))
}
