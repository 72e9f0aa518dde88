//! Loss functions, their convex conjugates, and the closed-form
//! single-coordinate dual update used by the leaf solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFamily {
    SquaredError,
    Hinge,
}

/// A loss family together with its smoothness parameter.
///
/// Losses are `1/gamma`-smooth; `gamma = 0` encodes a non-smooth loss and is
/// rejected by the rate calculators in [`crate::analysis`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSpec {
    pub family: LossFamily,
    pub gamma: f64,
}

impl LossSpec {
    /// `l(a) = (a - y)^2`, which is 2-smooth, i.e. gamma = 1/2.
    pub fn squared_error() -> Self {
        LossSpec {
            family: LossFamily::SquaredError,
            gamma: 0.5,
        }
    }

    /// `l(a) = max(0, 1 - y a)`, non-smooth.
    pub fn hinge() -> Self {
        LossSpec {
            family: LossFamily::Hinge,
            gamma: 0.0,
        }
    }

    pub fn from_family(family: LossFamily) -> Self {
        match family {
            LossFamily::SquaredError => Self::squared_error(),
            LossFamily::Hinge => Self::hinge(),
        }
    }
}

pub fn primal_loss(spec: LossSpec, a: f64, y: f64) -> f64 {
    match spec.family {
        LossFamily::SquaredError => (a - y) * (a - y),
        LossFamily::Hinge => (1.0 - y * a).max(0.0),
    }
}

/// Convex conjugate `l*(b)`.
///
/// SquaredError: `l*(b) = b^2/4 + y b`. Hinge: `l*(b) = y b` on its effective
/// domain `-b y in [0, 1]`; outside it the conjugate is infinite and the call
/// is a domain error.
pub fn conjugate(spec: LossSpec, b: f64, y: f64) -> Result<f64> {
    match spec.family {
        LossFamily::SquaredError => Ok(b * b / 4.0 + y * b),
        LossFamily::Hinge => {
            let u = -b * y;
            // small slack for accumulated float error in dual iterates
            if !(-1e-12..=1.0 + 1e-12).contains(&u) {
                return Err(Error::Domain(format!(
                    "hinge conjugate outside effective domain: -b*y = {u}"
                )));
            }
            Ok(y * b)
        }
    }
}

/// Exact maximizer `da` of the single-coordinate dual subproblem
///
/// `max_da  -(lambda m / 2) || w + da x_i / (lambda m) ||^2 - l*(-(alpha_i + da))`,
///
/// given the current margin `wx = w . x_i` and `xnorm2 = ||x_i||^2`.
pub fn coordinate_update(
    spec: LossSpec,
    wx: f64,
    alpha_i: f64,
    xnorm2: f64,
    lambda: f64,
    m: usize,
    y: f64,
) -> Result<f64> {
    if xnorm2 <= 0.0 {
        return Err(Error::Domain(format!(
            "coordinate update needs ||x||^2 > 0, got {xnorm2}"
        )));
    }
    let lm = lambda * m as f64;
    match spec.family {
        LossFamily::SquaredError => {
            // stationarity: da (xnorm2/(lambda m) + 1/2) = y - wx - alpha_i/2
            Ok((y - wx - alpha_i / 2.0) / (xnorm2 / lm + 0.5))
        }
        LossFamily::Hinge => {
            // box-constrained step: new alpha_i must keep alpha_i * y in [0, 1]
            let u = (lm * (1.0 - y * wx) / xnorm2 + alpha_i * y).clamp(0.0, 1.0);
            Ok(y * u - alpha_i)
        }
    }
}
