//! Step size, inner precision schedules and iteration counts.

use std::fmt;

use crate::error::{Error, Result};

/// `eta = 1 / (4 L)`.
pub fn eta_from_smoothness(smoothness: f64) -> Result<f64> {
    if smoothness > 0.0 && smoothness.is_finite() {
        Ok(1.0 / (4.0 * smoothness))
    } else {
        Err(Error::Domain(format!(
            "smoothness must be positive and finite, got {smoothness}"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleCase {
    ConstrainedCvx,
    ConstrainedScsc,
    UnconstrainedCvx,
    UnconstrainedScsc,
}

impl ScheduleCase {
    pub fn select(constrained: bool, mu: f64) -> Self {
        match (constrained, mu > 0.0) {
            (true, false) => ScheduleCase::ConstrainedCvx,
            (true, true) => ScheduleCase::ConstrainedScsc,
            (false, false) => ScheduleCase::UnconstrainedCvx,
            (false, true) => ScheduleCase::UnconstrainedScsc,
        }
    }

    pub fn constrained(self) -> bool {
        matches!(
            self,
            ScheduleCase::ConstrainedCvx | ScheduleCase::ConstrainedScsc
        )
    }

    pub fn strongly_monotone(self) -> bool {
        matches!(
            self,
            ScheduleCase::ConstrainedScsc | ScheduleCase::UnconstrainedScsc
        )
    }
}

impl fmt::Display for ScheduleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleCase::ConstrainedCvx => "constrained_cvx",
            ScheduleCase::ConstrainedScsc => "constrained_scsc",
            ScheduleCase::UnconstrainedCvx => "unconstrained_cvx",
            ScheduleCase::UnconstrainedScsc => "unconstrained_scsc",
        })
    }
}

/// Inputs to [`precision_rioda`]. Which optional fields are needed depends on
/// the case: the constrained schedules need `lips` and `epsilon`; the
/// unconstrained ones need either `local_dist` (adaptive form) or `radius`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrecisionInputs {
    pub t: usize,
    pub smoothness: f64,
    pub mu: f64,
    pub lips: Option<f64>,
    pub kmin: f64,
    pub epsilon: Option<f64>,
    pub radius: Option<f64>,
    /// Distance from the prox center to the current inner iterate.
    pub local_dist: Option<f64>,
}

fn need(v: Option<f64>, name: &str, case: ScheduleCase) -> Result<f64> {
    match v {
        Some(v) if v.is_finite() && v >= 0.0 => Ok(v),
        Some(v) => Err(Error::Domain(format!("{name} = {v} is invalid for {case}"))),
        None => Err(Error::Domain(format!("{case} schedule needs {name}"))),
    }
}

/// Relative inner precision for round `t`.
pub fn precision_rioda(case: ScheduleCase, p: &PrecisionInputs) -> Result<f64> {
    let l = p.smoothness;
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Domain(format!(
            "smoothness must be positive, got {l}"
        )));
    }
    if p.t == 0 {
        return Err(Error::Domain("rounds are numbered from 1".into()));
    }
    if case.strongly_monotone() && !(p.mu > 0.0) {
        return Err(Error::Domain(format!("{case} schedule needs mu > 0")));
    }
    let k = p.kmin.abs();
    let t2 = (p.t as f64 + 1.0).powi(2);
    let eps = match case {
        ScheduleCase::ConstrainedCvx => {
            let lips = need(p.lips, "a Lipschitz constant", case)?;
            let e = need(p.epsilon, "a target accuracy", case)?;
            let inner = 40.0 + lips * lips / l * (e / 6.0 + 12.0 * k / l);
            l * (1.0 / 8.0f64).min(1.0 / (t2 * inner))
        }
        ScheduleCase::ConstrainedScsc => {
            let lips = need(p.lips, "a Lipschitz constant", case)?;
            let e = need(p.epsilon, "a target accuracy", case)?;
            let inner = 40.0 + lips * lips / l * (e / 4.0 + 12.0 * k / l);
            let growth = t2.max(16.0 * l / p.mu);
            l * (1.0 / 8.0f64).min(1.0 / (growth * inner))
        }
        ScheduleCase::UnconstrainedCvx => match (p.local_dist, p.radius) {
            (Some(d), _) => l * (1.0 / 8.0f64).min(1.0 / (t2 * (32.0 + 327.0 * d * d * k))),
            (None, Some(r)) => {
                (l / 8.0) * 1.0f64.min(1.0 / (2.0 * t2 * (37.0 + 2385.0 * r * r * k)))
            }
            (None, None) => return Err(Error::Domain(format!("{case} schedule needs a radius"))),
        },
        ScheduleCase::UnconstrainedScsc => match (p.local_dist, p.radius) {
            (Some(d), _) => l * (1.0 / 8.0f64).min(4.0 * l / (p.mu * (25.0 + 220.0 * d * d * k))),
            (None, Some(r)) => {
                (l / 8.0) * 1.0f64.min(p.mu / (8.0 * l * (37.0 + 2385.0 * r * r * k)))
            }
            (None, None) => return Err(Error::Domain(format!("{case} schedule needs a radius"))),
        },
    };
    Ok(eps)
}

/// Rounds sufficient for a duality gap of `epsilon` from initial distance
/// `radius` to the saddle.
pub fn iteration_count(
    case: ScheduleCase,
    smoothness: f64,
    mu: f64,
    radius: f64,
    epsilon: f64,
) -> Result<usize> {
    if !(smoothness > 0.0 && radius >= 0.0 && epsilon > 0.0) {
        return Err(Error::Domain(
            "iteration count needs L > 0, R >= 0 and epsilon > 0".into(),
        ));
    }
    if case.strongly_monotone() && !(mu > 0.0) {
        return Err(Error::Domain(format!("{case} needs mu > 0")));
    }
    let lr2 = smoothness * radius * radius;
    let t = match case {
        ScheduleCase::ConstrainedCvx => 8.0 * lr2 / epsilon,
        ScheduleCase::UnconstrainedCvx => 6.0 * lr2 / epsilon,
        ScheduleCase::ConstrainedScsc => 17.0 * smoothness / mu * (4.0 * lr2 / epsilon).ln(),
        ScheduleCase::UnconstrainedScsc => 17.0 * smoothness / mu * (2.0 * lr2 / epsilon).ln(),
    };
    Ok((t.ceil().max(1.0)) as usize)
}
