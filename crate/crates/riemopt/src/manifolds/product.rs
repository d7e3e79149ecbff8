use std::sync::Arc;

use nalgebra::DVector;
use rand::RngCore;

use crate::geometry::{CurvatureBounds, Manifold, Point, Tangent};

/// Cartesian product with the sum metric, coordinates concatenated.
#[derive(Clone, Debug)]
pub struct ProductManifold {
    parts: Vec<Arc<dyn Manifold>>,
    offsets: Vec<usize>,
    len: usize,
}

impl ProductManifold {
    pub fn new(parts: Vec<Arc<dyn Manifold>>) -> Self {
        assert!(!parts.is_empty(), "a product needs at least one factor");
        let mut offsets = Vec::with_capacity(parts.len());
        let mut len = 0;
        for p in &parts {
            offsets.push(len);
            len += p.ambient_len();
        }
        ProductManifold {
            parts,
            offsets,
            len,
        }
    }

    pub fn pair(first: Arc<dyn Manifold>, second: Arc<dyn Manifold>) -> Self {
        ProductManifold::new(vec![first, second])
    }

    /// `m^n`.
    pub fn power(m: Arc<dyn Manifold>, n: usize) -> Self {
        ProductManifold::new(vec![m; n])
    }

    pub fn parts(&self) -> &[Arc<dyn Manifold>] {
        &self.parts
    }

    pub fn count(&self) -> usize {
        self.parts.len()
    }

    pub fn block(&self, x: &DVector<f64>, i: usize) -> DVector<f64> {
        x.rows(self.offsets[i], self.parts[i].ambient_len())
            .clone_owned()
    }

    pub fn join(&self, blocks: &[DVector<f64>]) -> DVector<f64> {
        assert_eq!(blocks.len(), self.parts.len(), "wrong number of blocks");
        let mut out = DVector::zeros(self.len);
        for (i, b) in blocks.iter().enumerate() {
            out.rows_mut(self.offsets[i], b.len()).copy_from(b);
        }
        out
    }

    pub fn split_point(&self, x: &Point) -> Vec<Point> {
        (0..self.count())
            .map(|i| Point::new(self.block(x.coords(), i)))
            .collect()
    }

    pub fn join_points(&self, points: &[Point]) -> Point {
        let blocks: Vec<DVector<f64>> = points.iter().map(|p| p.coords().clone()).collect();
        Point::new(self.join(&blocks))
    }

    pub fn split_tangent(&self, v: &Tangent) -> Vec<Tangent> {
        (0..self.count())
            .map(|i| {
                Tangent::new(
                    Point::new(self.block(v.base().coords(), i)),
                    self.block(v.coords(), i),
                )
            })
            .collect()
    }

    pub fn join_tangents(&self, vs: &[Tangent]) -> Tangent {
        let bases: Vec<DVector<f64>> = vs.iter().map(|v| v.base().coords().clone()).collect();
        let coords: Vec<DVector<f64>> = vs.iter().map(|v| v.coords().clone()).collect();
        Tangent::new(Point::new(self.join(&bases)), self.join(&coords))
    }

    fn map2(
        &self,
        a: &DVector<f64>,
        b: &DVector<f64>,
        f: impl Fn(&dyn Manifold, &DVector<f64>, &DVector<f64>) -> DVector<f64>,
    ) -> DVector<f64> {
        let blocks: Vec<DVector<f64>> = (0..self.count())
            .map(|i| f(self.parts[i].as_ref(), &self.block(a, i), &self.block(b, i)))
            .collect();
        self.join(&blocks)
    }

    fn sum2(
        &self,
        a: &DVector<f64>,
        b: &DVector<f64>,
        f: impl Fn(&dyn Manifold, &DVector<f64>, &DVector<f64>) -> f64,
    ) -> f64 {
        (0..self.count())
            .map(|i| f(self.parts[i].as_ref(), &self.block(a, i), &self.block(b, i)))
            .sum()
    }
}

impl Manifold for ProductManifold {
    fn name(&self) -> String {
        let names: Vec<String> = self.parts.iter().map(|p| p.name()).collect();
        format!("product({})", names.join(","))
    }

    fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim()).sum()
    }

    fn ambient_len(&self) -> usize {
        self.len
    }

    fn curvature(&self) -> CurvatureBounds {
        let kmin = self
            .parts
            .iter()
            .map(|p| p.curvature().kmin())
            .fold(f64::INFINITY, f64::min);
        let kmax = self
            .parts
            .iter()
            .map(|p| p.curvature().kmax())
            .fold(f64::NEG_INFINITY, f64::max);
        CurvatureBounds::new(kmin, kmax).expect("factors have valid bounds")
    }

    fn as_product(&self) -> Option<&ProductManifold> {
        Some(self)
    }

    fn is_flat(&self) -> bool {
        self.parts.iter().all(|p| p.is_flat())
    }

    fn membership_error(&self, x: &DVector<f64>) -> f64 {
        (0..self.count())
            .map(|i| self.parts[i].membership_error(&self.block(x, i)))
            .fold(0.0, f64::max)
    }

    fn tangent_error(&self, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (0..self.count())
            .map(|i| self.parts[i].tangent_error(&self.block(x, i), &self.block(v, i)))
            .fold(0.0, f64::max)
    }

    fn repair_coords(&self, x: DVector<f64>) -> DVector<f64> {
        let blocks: Vec<DVector<f64>> = (0..self.count())
            .map(|i| self.parts[i].repair_coords(self.block(&x, i)))
            .collect();
        self.join(&blocks)
    }

    fn project_tangent_coords(&self, x: &DVector<f64>, v: DVector<f64>) -> DVector<f64> {
        self.map2(x, &v, |m, a, b| m.project_tangent_coords(a, b.clone()))
    }

    fn inner_coords(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (0..self.count())
            .map(|i| {
                self.parts[i].inner_coords(&self.block(x, i), &self.block(u, i), &self.block(v, i))
            })
            .sum()
    }

    fn exp_coords(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.map2(x, v, |m, a, b| m.exp_coords(a, b))
    }

    fn log_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.map2(x, y, |m, a, b| m.log_coords(a, b))
    }

    fn dist_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.sum2(x, y, |m, a, b| m.dist_coords(a, b).powi(2))
            .sqrt()
    }

    fn transport_coords(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        let blocks: Vec<DVector<f64>> = (0..self.count())
            .map(|i| {
                self.parts[i].transport_coords(
                    &self.block(x, i),
                    &self.block(y, i),
                    &self.block(v, i),
                )
            })
            .collect();
        self.join(&blocks)
    }

    fn log_pairing_gradient_coords(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        y: &DVector<f64>,
    ) -> DVector<f64> {
        let blocks: Vec<DVector<f64>> = (0..self.count())
            .map(|i| {
                self.parts[i].log_pairing_gradient_coords(
                    &self.block(x, i),
                    &self.block(v, i),
                    &self.block(y, i),
                )
            })
            .collect();
        self.join(&blocks)
    }

    fn reference_coords(&self) -> DVector<f64> {
        let blocks: Vec<DVector<f64>> = self.parts.iter().map(|p| p.reference_coords()).collect();
        self.join(&blocks)
    }

    fn random_point_coords(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let blocks: Vec<DVector<f64>> = self
            .parts
            .iter()
            .map(|p| p.random_point_coords(rng))
            .collect();
        self.join(&blocks)
    }

    fn random_tangent_coords(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let blocks: Vec<DVector<f64>> = (0..self.count())
            .map(|i| self.parts[i].random_tangent_coords(&self.block(x, i), rng))
            .collect();
        self.join(&blocks)
    }
}
