use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use super::linalg::{
    asymmetry, expm_sym, log_divided_difference, sym_eig, symmetrize, EIGEN_FLOOR,
};
use crate::error::Result;
use crate::geometry::{CurvatureBounds, Manifold, Point, COINCIDENT_TOL, DRIFT_TOL};

/// Symmetric positive definite `n x n` matrices with the affine-invariant
/// metric `<U, V>_X = tr(X^-1 U X^-1 V)`. Points are stored column-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpdManifold {
    n: usize,
}

/// `X^{1/2}` and `X^{-1/2}` of a base point.
struct Frame {
    half: DMatrix<f64>,
    inv_half: DMatrix<f64>,
}

impl Frame {
    fn new(x: &DMatrix<f64>) -> Self {
        let e = sym_eig(x);
        Frame {
            half: e.map(|l| l.max(EIGEN_FLOOR).sqrt()),
            inv_half: e.map(|l| 1.0 / l.max(EIGEN_FLOOR).sqrt()),
        }
    }

    /// `X^{-1/2} A X^{-1/2}`.
    fn whiten(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.inv_half * a * &self.inv_half))
    }

    /// `X^{1/2} A X^{1/2}`.
    fn color(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.half * a * &self.half))
    }
}

impl SpdManifold {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "matrix side must be positive");
        SpdManifold { n }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.n, x.as_slice())
    }

    pub fn flatten(m: DMatrix<f64>) -> DVector<f64> {
        DVector::from_column_slice(m.as_slice())
    }

    pub fn point_from_matrix(&self, m: &DMatrix<f64>) -> Result<Point> {
        self.point(Self::flatten(m.clone()))
    }

    fn whitened_target(&self, x: &DVector<f64>, y: &DVector<f64>) -> (Frame, DMatrix<f64>) {
        let frame = Frame::new(&self.matrix(x));
        let w = frame.whiten(&self.matrix(y));
        (frame, w)
    }
}

impl Manifold for SpdManifold {
    fn name(&self) -> String {
        format!("spd:{}", self.n)
    }

    fn dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn ambient_len(&self) -> usize {
        self.n * self.n
    }

    fn curvature(&self) -> CurvatureBounds {
        CurvatureBounds::new(-0.5, 0.0).expect("valid bounds")
    }

    fn membership_error(&self, x: &DVector<f64>) -> f64 {
        if !x.iter().all(|c| c.is_finite()) {
            return f64::INFINITY;
        }
        let m = self.matrix(x);
        if !(sym_eig(&m).min_value() > 0.0) {
            return f64::INFINITY;
        }
        asymmetry(&m)
    }

    fn tangent_error(&self, _x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        asymmetry(&self.matrix(v))
    }

    fn repair_coords(&self, x: DVector<f64>) -> DVector<f64> {
        let m = self.matrix(&x);
        if asymmetry(&m) > DRIFT_TOL * (1.0 + m.amax()) {
            Self::flatten(symmetrize(&m))
        } else {
            x
        }
    }

    fn project_tangent_coords(&self, _x: &DVector<f64>, v: DVector<f64>) -> DVector<f64> {
        Self::flatten(symmetrize(&self.matrix(&v)))
    }

    fn inner_coords(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let frame = Frame::new(&self.matrix(x));
        let a = frame.whiten(&self.matrix(u));
        let b = frame.whiten(&self.matrix(v));
        a.dot(&b)
    }

    fn exp_coords(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        if v.amax() == 0.0 {
            return x.clone();
        }
        let frame = Frame::new(&self.matrix(x));
        let w = frame.whiten(&self.matrix(v));
        self.repair_coords(Self::flatten(frame.color(&expm_sym(&w))))
    }

    fn log_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let (frame, w) = self.whitened_target(x, y);
        let e = sym_eig(&w);
        let d2: f64 = e
            .values
            .iter()
            .map(|l| l.max(EIGEN_FLOOR).ln().powi(2))
            .sum();
        if d2.sqrt() < COINCIDENT_TOL {
            return DVector::zeros(x.len());
        }
        let l = e.map(|l| l.max(EIGEN_FLOOR).ln());
        Self::flatten(frame.color(&l))
    }

    fn dist_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let (_, w) = self.whitened_target(x, y);
        sym_eig(&w)
            .values
            .iter()
            .map(|l| l.max(EIGEN_FLOOR).ln().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn transport_coords(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        let (frame, w) = self.whitened_target(x, y);
        let root = sym_eig(&w).map(|l| l.max(EIGEN_FLOOR).sqrt());
        let e = &frame.half * root * &frame.inv_half;
        let out = &e * self.matrix(v) * e.transpose();
        Self::flatten(symmetrize(&out))
    }

    fn log_pairing_gradient_coords(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        y: &DVector<f64>,
    ) -> DVector<f64> {
        // <V, log_X Y>_X = tr(V~ logm(W)); differentiate logm by divided differences.
        let (frame, w) = self.whitened_target(x, y);
        let vt = frame.whiten(&self.matrix(v));
        let e = sym_eig(&w);
        let q = &e.vectors;
        let mut inner = q.transpose() * vt * q;
        for i in 0..self.n {
            for j in 0..self.n {
                let li = e.values[i].max(EIGEN_FLOOR);
                let lj = e.values[j].max(EIGEN_FLOOR);
                inner[(i, j)] *= log_divided_difference(li, lj);
            }
        }
        let g_w = q * inner * q.transpose();
        let euclid = &frame.inv_half * g_w * &frame.inv_half;
        let ym = self.matrix(y);
        Self::flatten(symmetrize(&(&ym * euclid * &ym)))
    }

    fn reference_coords(&self) -> DVector<f64> {
        Self::flatten(DMatrix::identity(self.n, self.n))
    }

    fn random_point_coords(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let a = DMatrix::from_fn(self.n, self.n, |_, _| StandardNormal.sample(rng));
        let s = symmetrize(&a);
        let spectral = sym_eig(&s).values.amax();
        let radius: f64 = rng.random::<f64>();
        let s = if spectral > 0.0 {
            s * (radius / spectral)
        } else {
            s
        };
        Self::flatten(expm_sym(&s))
    }

    fn random_tangent_coords(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let a = DMatrix::from_fn(self.n, self.n, |_, _| StandardNormal.sample(rng));
        let frame = Frame::new(&self.matrix(x));
        Self::flatten(frame.color(&symmetrize(&a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn diag(m: &SpdManifold, d: &[f64]) -> Point {
        m.point_from_matrix(&DMatrix::from_diagonal(&DVector::from_column_slice(d)))
            .unwrap()
    }

    #[test]
    fn log_at_identity() {
        let m = SpdManifold::new(2);
        let l = m.log(&diag(&m, &[1.0, 1.0]), &diag(&m, &[E, 1.0]));
        let expect = [1.0, 0.0, 0.0, 0.0];
        for (a, b) in l.coords().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn distance_and_metric_at_identity() {
        let m = SpdManifold::new(2);
        let id = diag(&m, &[1.0, 1.0]);
        assert!((m.dist(&id, &diag(&m, &[E * E, 1.0])) - 2.0).abs() < 1e-14);
        let u = m
            .tangent(&id, DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]))
            .unwrap();
        assert!((m.inner(&id, &u, &u).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn geodesic_midpoint_formula() {
        let m = SpdManifold::new(2);
        let x = diag(&m, &[1.0, 4.0]);
        let y = diag(&m, &[9.0, 1.0]);
        let mid = m.geodesic_point(&x, &y, 0.5).unwrap();
        // Commuting matrices: the midpoint is the entrywise geometric mean.
        let expect = [3.0, 0.0, 0.0, 2.0];
        for (a, b) in mid.coords().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn random_points_are_positive_definite() {
        use rand::SeedableRng;
        let m = SpdManifold::new(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = m.random_point(&mut rng);
            m.check_point(&p).unwrap();
        }
    }
}
