//! Randomized geometry invariants: exp/log round trips, isometry of
//! parallel transport and the two-sided cosine-law inequalities.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{zeta_unchecked, Manifold};
use crate::manifolds::{EuclideanSpace, HyperbolicSpace, SpdManifold};
use crate::rng::stream;

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Largest violation seen, in the check's own normalized units.
    pub worst: f64,
}

impl CheckResult {
    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub manifold: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(CheckResult::ok)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<16} {:<10} {}/{} passed (worst {:.3e})",
                self.manifold, c.name, c.passed, c.total, c.worst
            )?;
        }
        Ok(())
    }
}

/// Euclidean `R^10`, `H^10` and SPD `4x4`.
pub fn default_manifolds() -> Vec<Arc<dyn Manifold>> {
    vec![
        Arc::new(EuclideanSpace::new(10)),
        Arc::new(HyperbolicSpace::new(10)),
        Arc::new(SpdManifold::new(4)),
    ]
}

#[derive(Clone, Copy, Debug, Default)]
struct Sample {
    roundtrip: f64,
    transport: f64,
    cosine: f64,
}

fn sample(m: &dyn Manifold, seed: u64, i: usize) -> Result<Sample> {
    let mut rng = stream(seed, &format!("suite/{}/{i}", m.name()));
    let x = m.random_point(&mut rng);
    let y = m.random_point(&mut rng);
    let p = m.random_point(&mut rng);

    let len: f64 = rng.random_range(0.0..2.0);
    let v = m.random_unit_tangent(&x, &mut rng).scale(len);
    let back = m.log(&x, &m.exp(&x, &v)?);
    let v_err = m.norm(&back.sub(&v)?) / (1.0 + len);
    let y_err = m.dist(&m.exp(&x, &m.log(&x, &y))?, &y) / (1.0 + m.dist(&x, &y));
    let roundtrip = v_err.max(y_err);

    let u = m.random_unit_tangent(&x, &mut rng);
    let w = m.random_unit_tangent(&x, &mut rng);
    let tu = m.transport(&x, &y, &u)?;
    let tw = m.transport(&x, &y, &w)?;
    let transport = (m.inner(&y, &tu, &tw)? - m.inner(&x, &u, &w)?)
        .abs()
        .max((m.norm(&tu) - 1.0).abs());

    let dxy = m.dist(&x, &y);
    let dpx = m.dist(&p, &x);
    let dpy = m.dist(&p, &y);
    let diameter = dxy.max(dpx).max(dpy);
    let z = zeta_unchecked(diameter, m.curvature().kmin());
    let pairing = m.inner(&x, &m.log(&x, &y), &m.log(&x, &p))?;
    let base = 0.5 * dpx * dpx - 0.5 * dpy * dpy;
    let lower = 0.5 * dxy * dxy + base - pairing;
    let upper = pairing - (0.5 * z * dxy * dxy + base);
    let cosine = lower.max(upper).max(0.0) / (1.0 + diameter * diameter);

    Ok(Sample {
        roundtrip,
        transport,
        cosine,
    })
}

/// Run every check on `samples` random configurations.
pub fn run_suite(
    m: &dyn Manifold,
    samples: usize,
    seed: u64,
    tolerance: f64,
    exec: Execution,
) -> Result<SuiteReport> {
    let results = exec.map_range(samples, |i| sample(m, seed, i));
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let check = |name: &'static str, get: fn(&Sample) -> f64| {
        let vals: Vec<f64> = results.iter().map(get).collect();
        CheckResult {
            name,
            passed: vals.iter().filter(|v| **v <= tolerance).count(),
            total: vals.len(),
            worst: vals.iter().cloned().fold(0.0, f64::max),
        }
    };
    Ok(SuiteReport {
        manifold: m.name(),
        checks: vec![
            check("roundtrip", |s| s.roundtrip),
            check("transport", |s| s.transport),
            check("cosine_law", |s| s.cosine),
        ],
    })
}
