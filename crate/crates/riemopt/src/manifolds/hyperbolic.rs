use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{CurvatureBounds, Manifold, COINCIDENT_TOL, DRIFT_TOL};

/// Hyperboloid model of `H^d` with curvature -1, embedded in `R^{d+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperbolicSpace {
    dim: usize,
}

/// Lorentzian product `-a0 b0 + sum_i ai bi`.
pub fn minkowski(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let tail: f64 = a.rows(1, a.len() - 1).dot(&b.rows(1, b.len() - 1));
    tail - a[0] * b[0]
}

impl HyperbolicSpace {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        HyperbolicSpace { dim }
    }

    /// Lift spatial coordinates `z` to `(sqrt(1 + |z|^2), z)`.
    pub fn lift(z: &[f64]) -> DVector<f64> {
        let n2: f64 = z.iter().map(|c| c * c).sum();
        let mut x = DVector::zeros(z.len() + 1);
        x[0] = (1.0 + n2).sqrt();
        x.rows_mut(1, z.len()).copy_from_slice(z);
        x
    }

    /// Returns `(theta, y - cosh(theta) x, sinh(theta))` with the
    /// small-angle branch computed from the tangent residual.
    fn angle(x: &DVector<f64>, y: &DVector<f64>) -> (f64, DVector<f64>, f64) {
        let a = -minkowski(x, y);
        let mut u = y - x * a;
        // Remove the component along x that cancellation leaves behind.
        let along = minkowski(x, &u);
        u += x * along;
        let s = minkowski(&u, &u).max(0.0).sqrt();
        let theta = if a < 1.5 {
            s.asinh()
        } else {
            a.max(1.0).acosh()
        };
        (theta, u, s)
    }
}

impl Manifold for HyperbolicSpace {
    fn name(&self) -> String {
        format!("hyperbolic:{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn ambient_len(&self) -> usize {
        self.dim + 1
    }

    fn curvature(&self) -> CurvatureBounds {
        CurvatureBounds::new(-1.0, -1.0).expect("valid bounds")
    }

    fn membership_error(&self, x: &DVector<f64>) -> f64 {
        if !(x[0] > 0.0) {
            return f64::INFINITY;
        }
        (minkowski(x, x) + 1.0).abs() / (1.0 + x[0] * x[0]) * 2.0
    }

    fn tangent_error(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        minkowski(x, v).abs()
    }

    fn repair_coords(&self, mut x: DVector<f64>) -> DVector<f64> {
        let q = minkowski(&x, &x);
        if (q + 1.0).abs() > DRIFT_TOL * (1.0 + x[0] * x[0]) {
            if q < 0.0 && x[0] > 0.0 {
                x /= (-q).sqrt();
            } else {
                let tail = x.rows(1, x.len() - 1).norm_squared();
                x[0] = (1.0 + tail).sqrt();
            }
        }
        x
    }

    fn project_tangent_coords(&self, x: &DVector<f64>, v: DVector<f64>) -> DVector<f64> {
        let c = minkowski(x, &v);
        v + x * c
    }

    fn inner_coords(&self, _x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        minkowski(u, v)
    }

    fn exp_coords(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = minkowski(v, v).max(0.0).sqrt();
        if n == 0.0 {
            return x.clone();
        }
        let y = x * n.cosh() + v * (n.sinh() / n);
        self.repair_coords(y)
    }

    fn log_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let (theta, u, s) = Self::angle(x, y);
        if theta < COINCIDENT_TOL || s == 0.0 {
            return DVector::zeros(x.len());
        }
        u * (theta / s)
    }

    fn dist_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        Self::angle(x, y).0
    }

    fn transport_coords(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        let c = minkowski(y, v) / (1.0 - minkowski(x, y));
        let w = v + (x + y) * c;
        self.project_tangent_coords(y, w)
    }

    fn log_pairing_gradient_coords(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        y: &DVector<f64>,
    ) -> DVector<f64> {
        // <v, log_x y> = psi(cosh theta) <v, y>_M with psi = theta / sinh theta.
        let (theta, _, s) = Self::angle(x, y);
        let (psi, dpsi) = if theta < 1e-3 {
            let t2 = theta * theta;
            (1.0 - t2 / 6.0, -1.0 / 3.0 + 2.0 * t2 / 15.0)
        } else {
            let c = theta.cosh();
            (theta / s, (s - theta * c) / (s * s * s))
        };
        let w = v * psi - x * (dpsi * minkowski(v, y));
        self.project_tangent_coords(y, w)
    }

    fn reference_coords(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim + 1);
        x[0] = 1.0;
        x
    }

    fn random_point_coords(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let scale = 1.0 / (self.dim as f64).sqrt();
        let mut v = DVector::zeros(self.dim + 1);
        for i in 1..=self.dim {
            let g: f64 = StandardNormal.sample(rng);
            v[i] = g * scale;
        }
        self.exp_coords(&self.reference_coords(), &v)
    }

    fn random_tangent_coords(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let w = DVector::from_fn(self.dim + 1, |_, _| StandardNormal.sample(rng));
        self.project_tangent_coords(x, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn on_line(t: f64) -> Point {
        Point::from_slice(&[t.cosh(), t.sinh(), 0.0])
    }

    #[test]
    fn exp_along_axis() {
        let m = HyperbolicSpace::new(2);
        let x = m.reference_point();
        let v = m
            .tangent(&x, DVector::from_column_slice(&[0.0, 1.0, 0.0]))
            .unwrap();
        let y = m.exp(&x, &v).unwrap();
        let expect = [1f64.cosh(), 1f64.sinh(), 0.0];
        for (a, b) in y.coords().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((minkowski(y.coords(), y.coords()) + 1.0).abs() < 1e-14);
        assert!((m.dist(&x, &y) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_on_a_geodesic_line() {
        let m = HyperbolicSpace::new(2);
        assert!((m.dist(&on_line(0.0), &on_line(2.0)) - 2.0).abs() < 1e-13);
        assert!((m.dist(&on_line(-1.5), &on_line(0.25)) - 1.75).abs() < 1e-12);
        assert_eq!(m.dist(&on_line(0.3), &on_line(0.3)), 0.0);
    }

    #[test]
    fn transporting_log_reverses_it() {
        let m = HyperbolicSpace::new(2);
        let x = Point::new(HyperbolicSpace::lift(&[0.3, -0.2]));
        let y = Point::new(HyperbolicSpace::lift(&[-1.1, 0.7]));
        let moved = m.transport(&x, &y, &m.log(&x, &y)).unwrap();
        let back = m.log(&y, &x);
        assert!((moved.coords() + back.coords()).amax() < 1e-12);
    }

    #[test]
    fn log_of_coincident_points_is_zero() {
        let m = HyperbolicSpace::new(3);
        let x = Point::new(HyperbolicSpace::lift(&[0.1, 0.2, 0.3]));
        assert_eq!(m.log(&x, &x).coords().amax(), 0.0);
    }
}
