//! Learning-rate schedules over `0..=steps`.
//!
//! | schedule | rate at step `s` of `S` |
//! |---|---|
//! | constant | `peak` |
//! | linear | `peak * (1 - s/S)` |
//! | exponential | `peak * 0.01^(s/S)` |
//! | cosine | `peak * 0.5 * (1 + cos(pi * s/S))` |
//! | inverse-sqrt | `peak / sqrt(max(s, 1))` |

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Constant,
    LinearDecay,
    ExponentialDecay,
    Cosine,
    InverseSqrt,
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Schedule::Constant),
            "linear-decay" => Ok(Schedule::LinearDecay),
            "exponential-decay" => Ok(Schedule::ExponentialDecay),
            "cosine" => Ok(Schedule::Cosine),
            "inverse-sqrt" => Ok(Schedule::InverseSqrt),
            other => Err(Error::InvalidArgument(format!("unknown schedule {other:?}"))),
        }
    }
}

/// Final fraction of the peak rate reached by exponential decay.
pub const EXP_FLOOR: f64 = 0.01;

pub fn lr_at(schedule: Schedule, peak: f64, steps: usize, step: usize) -> Result<f64> {
    if step > steps {
        return Err(Error::contract(format!("step {step} beyond schedule length {steps}")));
    }
    let frac = if steps == 0 { 0.0 } else { step as f64 / steps as f64 };
    Ok(match schedule {
        Schedule::Constant => peak,
        Schedule::LinearDecay => peak * (1.0 - frac),
        Schedule::ExponentialDecay => peak * EXP_FLOOR.powf(frac),
        Schedule::Cosine => peak * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos()),
        Schedule::InverseSqrt => peak / (step.max(1) as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints() {
        let peak = 4.23e-4;
        assert_eq!(lr_at(Schedule::Cosine, peak, 2000, 0).unwrap(), 4.23e-4);
        assert!(lr_at(Schedule::Cosine, peak, 2000, 2000).unwrap().abs() < 1e-20);
        assert!((lr_at(Schedule::Cosine, peak, 2000, 1000).unwrap() - peak / 2.0).abs() < 1e-18);
        assert!(lr_at(Schedule::Cosine, peak, 2000, 2001).is_err());
    }

    #[test]
    fn other_schedules() {
        assert_eq!(lr_at(Schedule::Constant, 1.0, 10, 7).unwrap(), 1.0);
        assert_eq!(lr_at(Schedule::LinearDecay, 1.0, 10, 5).unwrap(), 0.5);
        assert!((lr_at(Schedule::ExponentialDecay, 1.0, 10, 10).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(lr_at(Schedule::InverseSqrt, 1.0, 100, 4).unwrap(), 0.5);
        assert_eq!("cosine".parse::<Schedule>().unwrap(), Schedule::Cosine);
    }
}
