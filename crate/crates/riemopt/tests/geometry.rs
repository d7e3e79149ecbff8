mod common;

use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use riemopt::geometry::zeta;
use riemopt::manifolds::linalg::sqrtm_spd;
use riemopt::prelude::*;
use riemopt::rng::stream;

use common::*;

fn manifold(i: usize) -> Arc<dyn Manifold> {
    manifolds()[i % 3].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(seed in any::<u64>(), which in 0usize..3) {
        let m = manifold(which);
        let mut rng = stream(seed, "geometry/metric");
        let (x, y, z) = (m.random_point(&mut rng), m.random_point(&mut rng), m.random_point(&mut rng));
        let (dxy, dyx) = (m.dist(&x, &y), m.dist(&y, &x));
        prop_assert!((dxy - dyx).abs() <= 1e-10 * (1.0 + dxy));
        prop_assert!(m.dist(&x, &x) <= 1e-7);
        prop_assert!(dxy <= m.dist(&x, &z) + m.dist(&z, &y) + 1e-10);
        prop_assert!((m.norm(&m.log(&x, &y)) - dxy).abs() <= 1e-9 * (1.0 + dxy));
    }

    #[test]
    fn exp_then_log_recovers_the_tangent(seed in any::<u64>(), which in 0usize..3, len in 0.0f64..3.0) {
        let m = manifold(which);
        let mut rng = stream(seed, "geometry/roundtrip");
        let x = m.random_point(&mut rng);
        let v = m.random_unit_tangent(&x, &mut rng).scale(len);
        let y = m.exp(&x, &v).unwrap();
        m.check_point(&y).unwrap();
        let back = m.log(&x, &y);
        prop_assert!(m.norm(&back.sub(&v).unwrap()) <= 1e-8 * (1.0 + len));
    }

    #[test]
    fn transport_preserves_inner_products(seed in any::<u64>(), which in 0usize..3) {
        let m = manifold(which);
        let mut rng = stream(seed, "geometry/transport");
        let (x, y) = (m.random_point(&mut rng), m.random_point(&mut rng));
        let u = m.random_unit_tangent(&x, &mut rng).scale(1.7);
        let w = m.random_unit_tangent(&x, &mut rng);
        let (tu, tw) = (m.transport(&x, &y, &u).unwrap(), m.transport(&x, &y, &w).unwrap());
        m.check_tangent(&tu).unwrap();
        let before = m.inner(&x, &u, &w).unwrap();
        let after = m.inner(&y, &tu, &tw).unwrap();
        prop_assert!((before - after).abs() <= 1e-8);
        // Transport along a geodesic maps the initial velocity to minus the
        // velocity pointing back.
        let v = m.log(&x, &y);
        let tv = m.transport(&x, &y, &v).unwrap();
        let back = m.log(&y, &x);
        prop_assert!(m.norm(&tv.add(&back).unwrap()) <= 1e-8 * (1.0 + m.norm(&v)));
    }

    #[test]
    fn geodesic_points_split_the_distance(seed in any::<u64>(), which in 0usize..3, t in 0.0f64..1.0) {
        let m = manifold(which);
        let mut rng = stream(seed, "geometry/geodesic");
        let (x, y) = (m.random_point(&mut rng), m.random_point(&mut rng));
        let p = m.geodesic_point(&x, &y, t).unwrap();
        let d = m.dist(&x, &y);
        prop_assert!((m.dist(&x, &p) - t * d).abs() <= 1e-8 * (1.0 + d));
        prop_assert!((m.dist(&p, &y) - (1.0 - t) * d).abs() <= 1e-8 * (1.0 + d));
    }

    #[test]
    fn zeta_is_at_least_one_and_increasing(r in 0.0f64..20.0, dr in 0.0f64..1.0, k in -4.0f64..0.0) {
        let a = zeta(r, k).unwrap();
        let b = zeta(r + dr, k).unwrap();
        prop_assert!(a >= 1.0);
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn ball_projection_is_feasible_and_idempotent(seed in any::<u64>(), which in 0usize..3, radius in 0.05f64..2.0) {
        let m = manifold(which);
        let mut rng = stream(seed, "geometry/projection");
        let c = m.random_point(&mut rng);
        let x = at_distance(m.as_ref(), &c, 3.0 * radius * rand::Rng::random::<f64>(&mut rng), &mut rng);
        let set = ConstraintSet::ball(c.clone(), radius).unwrap();
        let p = set.project(m.as_ref(), &x).unwrap();
        prop_assert!(m.dist(&p, &c) <= radius * (1.0 + 1e-9));
        prop_assert!(set.contains(m.as_ref(), &p, 1e-9));
        let q = set.project(m.as_ref(), &p).unwrap();
        prop_assert!(m.dist(&p, &q) <= 1e-9);
        if m.dist(&x, &c) <= radius {
            prop_assert!(m.dist(&x, &p) <= 1e-12);
        }
    }

    #[test]
    fn product_distance_is_the_root_sum_of_squares(seed in any::<u64>()) {
        let pm = ProductManifold::new(manifolds());
        let mut rng = stream(seed, "geometry/product");
        let (x, y) = (pm.random_point(&mut rng), pm.random_point(&mut rng));
        let parts = pm.parts();
        let sq: f64 = pm
            .split_point(&x)
            .iter()
            .zip(pm.split_point(&y))
            .zip(parts)
            .map(|((a, b), m)| m.dist(a, &b).powi(2))
            .sum();
        prop_assert!((pm.dist(&x, &y) - sq.sqrt()).abs() <= 1e-10 * (1.0 + sq.sqrt()));
    }
}

#[test]
fn spd_midpoint_matches_the_closed_form() {
    let m = SpdManifold::new(3);
    let mut rng = stream(4, "geometry/spd-midpoint");
    for _ in 0..10 {
        let x = m.random_point(&mut rng);
        let y = m.random_point(&mut rng);
        let (a, b) = (m.matrix(x.coords()), m.matrix(y.coords()));
        let s = sqrtm_spd(&a).unwrap();
        let si = s.clone().try_inverse().unwrap();
        let inner = sqrtm_spd(&(&si * &b * &si)).unwrap();
        let mid: DMatrix<f64> = &s * inner * &s;
        let p = m.geodesic_point(&x, &y, 0.5).unwrap();
        assert!((m.matrix(p.coords()) - mid).amax() < 1e-10);
    }
}
