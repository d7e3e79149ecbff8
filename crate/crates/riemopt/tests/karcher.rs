use nalgebra::DVector;
use proptest::prelude::*;
use riemopt::geometry::zeta;
use riemopt::karcher::{
    generate_instance, run_experiment, ExperimentConfig, KarcherInstance, RobustKarcher,
    DEFAULT_RBAR,
};
use riemopt::manifolds::{ManifoldSpec, ProductManifold};
use riemopt::rioda::SaddleOracle;

fn spec_strategy() -> impl Strategy<Value = ManifoldSpec> {
    prop_oneof![
        (1usize..6).prop_map(ManifoldSpec::Euclidean),
        (2usize..8).prop_map(ManifoldSpec::Hyperbolic),
        (2usize..4).prop_map(ManifoldSpec::Spd),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn anchors_sit_at_unit_distance(spec in spec_strategy(), n in 1usize..12, seed in any::<u64>()) {
        let inst = generate_instance(spec, n, DEFAULT_RBAR, seed).unwrap();
        prop_assert_eq!(inst.n(), n);
        for a in &inst.anchors {
            prop_assert!((inst.manifold.dist(&inst.base, a) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn gamma_is_the_curvature_floor(spec in spec_strategy(), rbar in 0.001f64..1.0, seed in any::<u64>()) {
        let inst = generate_instance(spec, 3, rbar, seed).unwrap();
        let floor = zeta(1.0 + rbar, inst.kmin()).unwrap();
        prop_assert_eq!(inst.gamma, floor);
        let mut below = inst.clone();
        below.gamma = floor - 1e-6;
        prop_assert!(below.validate().is_err());
    }

    #[test]
    fn text_round_trip_is_bit_exact(spec in spec_strategy(), n in 1usize..6, rbar in 1e-4f64..1.0, seed in any::<u64>()) {
        let inst = generate_instance(spec, n, rbar, seed).unwrap();
        let back = KarcherInstance::from_text(&inst.to_text()).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn adversarial_points_stay_near_their_anchors(seed in any::<u64>(), hyperbolic in any::<bool>()) {
        let spec = if hyperbolic { ManifoldSpec::Hyperbolic(4) } else { ManifoldSpec::Spd(2) };
        let inst = generate_instance(spec, 4, DEFAULT_RBAR, seed).unwrap();
        let cfg = ExperimentConfig { iterations: 15, gap_cadence: 100, eta: 0.1, lambda: 0.1, ..Default::default() };
        let r = run_experiment(&inst, &cfg, None).unwrap();
        prop_assert_eq!(r.gradient_calls, 12 * 15);
        let pm = ProductManifold::power(inst.manifold.clone(), inst.n());
        let m = inst.manifold.as_ref();
        for (x, y) in &r.run.trace.played {
            prop_assert!(m.dist(x, &inst.base) <= inst.dbar() + 1e-9);
            for (z, a) in pm.split_point(y).iter().zip(&inst.anchors) {
                prop_assert!(m.dist(z, a) <= inst.rbar + 1e-9);
            }
        }
    }
}

/// Saddle value of the Euclidean benchmark with each adversary confined to
/// `B(y_i, rbar)`. For fixed `x` the inner maximizer is the projection of the
/// unconstrained one, `y + (y - x) / (gamma - 1)`, onto the ball.
fn constrained_value(anchors: &[DVector<f64>], gamma: f64, rbar: f64) -> f64 {
    let n = anchors.len() as f64;
    let adversary = |x: &DVector<f64>, y: &DVector<f64>| {
        let d = y - x;
        let reach = (d.norm() / (gamma - 1.0)).min(rbar);
        let z = if d.norm() > 0.0 {
            y + d.normalize() * reach
        } else {
            y.clone()
        };
        let value = (x - &z).norm_squared() - gamma * reach * reach;
        (z, value)
    };
    let mut x = anchors.iter().sum::<DVector<f64>>() / n;
    for _ in 0..20_000 {
        let g = anchors
            .iter()
            .map(|y| x.clone() - adversary(&x, y).0)
            .sum::<DVector<f64>>()
            * (2.0 / n);
        x -= g * 0.05;
    }
    anchors.iter().map(|y| adversary(&x, y).1).sum::<f64>() / n
}

#[test]
fn constrained_value_approaches_the_regularized_one() {
    let gamma = 3.0;
    let base = generate_instance(ManifoldSpec::Euclidean(3), 6, DEFAULT_RBAR, 21).unwrap();
    let anchors: Vec<DVector<f64>> = base.anchors.iter().map(|a| a.coords().clone()).collect();
    let n = anchors.len() as f64;
    let mean = anchors.iter().sum::<DVector<f64>>() / n;
    let regularized = gamma / (gamma - 1.0)
        * anchors
            .iter()
            .map(|y| (y - &mean).norm_squared())
            .sum::<f64>()
        / n;

    let mut shortfalls = Vec::new();
    for rbar in [0.01, 0.1, 1.0] {
        let v = constrained_value(&anchors, gamma, rbar);
        shortfalls.push(regularized - v);

        let inst = KarcherInstance {
            rbar,
            gamma,
            ..base.clone()
        };
        let cfg = ExperimentConfig {
            iterations: 400,
            gap_cadence: 400,
            eta: 0.1,
            lambda: 0.1,
            ..Default::default()
        };
        let r = run_experiment(&inst, &cfg, None).unwrap();
        let oracle = RobustKarcher::new(&inst).unwrap();
        let f = oracle.value(&r.run.x, &r.run.y);
        let (_, gap, slack) = *r.gaps.last().unwrap();
        assert!(
            (f - v).abs() <= gap + slack + 1e-9,
            "rbar {rbar}: {f} vs {v}, gap {gap}"
        );
    }
    assert!(shortfalls.iter().all(|s| *s >= -1e-9), "{shortfalls:?}");
    assert!(
        shortfalls.windows(2).all(|w| w[1] <= w[0]),
        "{shortfalls:?}"
    );
    assert!(shortfalls[2] < 1e-6 * regularized, "{shortfalls:?}");
}
