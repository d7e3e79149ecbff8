use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{CurvatureBounds, Manifold};

/// Flat `R^d`: exp is addition, log is subtraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EuclideanSpace {
    dim: usize,
}

impl EuclideanSpace {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        EuclideanSpace { dim }
    }
}

impl Manifold for EuclideanSpace {
    fn name(&self) -> String {
        format!("euclidean:{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn ambient_len(&self) -> usize {
        self.dim
    }

    fn curvature(&self) -> CurvatureBounds {
        CurvatureBounds::flat()
    }

    fn is_flat(&self) -> bool {
        true
    }

    fn membership_error(&self, x: &DVector<f64>) -> f64 {
        if x.iter().all(|c| c.is_finite()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn tangent_error(&self, _x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.membership_error(v)
    }

    fn repair_coords(&self, x: DVector<f64>) -> DVector<f64> {
        x
    }

    fn project_tangent_coords(&self, _x: &DVector<f64>, v: DVector<f64>) -> DVector<f64> {
        v
    }

    fn inner_coords(&self, _x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(v)
    }

    fn exp_coords(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        x + v
    }

    fn log_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        y - x
    }

    fn dist_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (y - x).norm()
    }

    fn transport_coords(
        &self,
        _x: &DVector<f64>,
        _y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        v.clone()
    }

    fn log_pairing_gradient_coords(
        &self,
        _x: &DVector<f64>,
        v: &DVector<f64>,
        _y: &DVector<f64>,
    ) -> DVector<f64> {
        v.clone()
    }

    fn reference_coords(&self) -> DVector<f64> {
        DVector::zeros(self.dim)
    }

    fn random_point_coords(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng))
    }

    fn random_tangent_coords(&self, _x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn exp_and_log_are_vector_arithmetic() {
        let m = EuclideanSpace::new(2);
        let x = Point::from_slice(&[1.0, 2.0]);
        let v = m
            .tangent(&x, DVector::from_column_slice(&[3.0, 4.0]))
            .unwrap();
        assert_eq!(m.exp(&x, &v).unwrap().coords().as_slice(), &[4.0, 6.0]);
        let a = Point::from_slice(&[1.0, 1.0]);
        let b = Point::from_slice(&[4.0, 5.0]);
        assert_eq!(m.log(&a, &b).coords().as_slice(), &[3.0, 4.0]);
        assert_eq!(m.dist(&a, &b), 5.0);
    }

    #[test]
    fn midpoint() {
        let m = EuclideanSpace::new(2);
        let mid = m
            .geodesic_point(
                &Point::from_slice(&[0.0, 0.0]),
                &Point::from_slice(&[2.0, 2.0]),
                0.5,
            )
            .unwrap();
        assert_eq!(mid.coords().as_slice(), &[1.0, 1.0]);
    }
}
